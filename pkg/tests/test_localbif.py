import math
import time

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from atlas.localbif.continuation import (
    ContinuationConfig,
    ContinuationError,
    continue_curve,
)
from atlas.localbif.equilibria import (
    fhn_equilibria,
    hr_cubic,
    hr_equilibria,
    hr_fold_seed,
    hr_fold_system,
)
from atlas.localbif.linalg import (
    char_poly,
    cubic_discriminant,
    eigen3,
    real_cubic_roots,
    test_functions,
)
from atlas.odecore.models import FHNParams, HRParams, hr_jacobian


def bisection_roots(coeffs, lo, hi, n=20001):
    """Sign-scan + bisection oracle for simple real roots of a cubic."""
    f = lambda x: ((coeffs[0] * x + coeffs[1]) * x + coeffs[2]) * x + coeffs[3]  # noqa: E731
    xs = np.linspace(lo, hi, n)
    fs = f(xs)
    out = []
    for k in range(n - 1):
        if fs[k] == 0:
            out.append(xs[k])
            continue
        if fs[k] * fs[k + 1] < 0:
            a, b = xs[k], xs[k + 1]
            for _ in range(200):
                m = 0.5 * (a + b)
                if m in (a, b):
                    break
                if (f(m) < 0) == (f(a) < 0):
                    a = m
                else:
                    b = m
            out.append(0.5 * (a + b))
    return np.array(out)


def cauchy_bound(c):
    return 1 + max(abs(c[1] / c[0]), abs(c[2] / c[0]), abs(c[3] / c[0]))


# -- equilibria -------------------------------------------------------------


def test_hr_known_equilibrium():
    eq = hr_equilibria(HRParams(b=3, I=5.4))
    assert len(eq) == 1
    assert np.allclose(eq[0].state, [0, 1, 6.4], atol=1e-14)
    assert eq[0].residual < 1e-10


def test_hr_equilibria_eps_independent():
    states = [np.stack([e.state for e in hr_equilibria(HRParams(b=3.1, I=2.3, eps=eps))])
              for eps in (1e-3, 0.018, 0.1)]
    assert all(np.array_equal(states[0], s) for s in states[1:])


def test_hr_equilibria_bisection_oracle():
    rng = np.random.default_rng(7)
    for b, I in zip(rng.uniform(2, 3.5, 1000), rng.uniform(0, 6, 1000)):
        p = HRParams(b=b, I=I)
        c = hr_cubic(p)
        R = cauchy_bound(c)
        ref = bisection_roots(c, -R, R, n=401)
        got = np.array([e.state[0] for e in hr_equilibria(p)])
        assert len(got) == len(ref)
        assert np.max(np.abs(got - ref)) < 1e-10


@given(st.floats(0.5, 3.5), st.floats(-4, 8), st.floats(1e-3, 0.2))
def test_hr_equilibrium_residuals(b, I, eps):
    for e in hr_equilibria(HRParams(b=b, I=I, eps=eps)):
        assert e.residual < 1e-10
        a2, a1, a0 = char_poly(hr_jacobian(e.state, HRParams(b=b, I=I, eps=eps)))
        for lam in e.eigenvalues:
            assert abs(((lam + a2) * lam + a1) * lam + a0) < 1e-8 * max(1, abs(lam)) ** 3


def test_fhn_equilibria_gamma_zero():
    (e,) = fhn_equilibria(FHNParams(p=0, gamma=0))
    assert np.array_equal(e.state, [0, 0, 0])
    (e,) = fhn_equilibria(FHNParams(p=0.3, gamma=0))
    assert np.array_equal(e.state, [0, 0, 0.3])


def test_fhn_equilibria_oracle():
    rng = np.random.default_rng(3)
    for pp in rng.uniform(-1, 1, 200):
        p = FHNParams(gamma=0.5, alpha=0.1, p=pp)
        c = (1.0, -(1 + p.alpha), p.alpha + 1 / p.gamma, -p.p)
        R = cauchy_bound(c)
        ref = bisection_roots(c, -R, R, n=401)
        eq = fhn_equilibria(p)
        assert len(eq) == len(ref)
        for e, u in zip(eq, ref):
            assert abs(e.state[0] - u) < 1e-10
            assert e.residual < 1e-10


# -- cubic roots ------------------------------------------------------------


coef = st.floats(-5, 5)


@given(st.floats(0.2, 3), coef, coef, coef)
def test_cubic_roots_vs_bisection(a, b, c, d):
    disc = cubic_discriminant(a, b, c, d)
    scale = max(1.0, abs(b / a), abs(c / a), abs(d / a)) ** 4
    assume(abs(disc) > 1e-6 * scale)
    roots = real_cubic_roots(a, b, c, d)
    assert len(roots) == (3 if disc > 0 else 1)
    R = cauchy_bound((a, b, c, d))
    ref = bisection_roots((a, b, c, d), -R, R)
    assume(len(ref) == len(roots))  # scan can merge roots closer than its spacing
    assert np.max(np.abs(roots - ref)) < 1e-9 * max(1.0, R)


def test_cubic_double_root_reported_once():
    # (x - 1)^2 (x + 2)
    r = real_cubic_roots(1.0, 0.0, -3.0, 2.0)
    assert len(r) == 2
    assert np.allclose(r, [-2, 1], atol=1e-7)
    assert np.allclose(real_cubic_roots(1, -3, 3, -1), [1.0])


def test_cubic_rejects_degenerate():
    with pytest.raises(ValueError):
        real_cubic_roots(0, 1, 1, 1)


# -- eigenvalues and test functions ------------------------------------------


ROT = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])


def test_eigen3_diagonal():
    ev = eigen3(np.diag([-1.0, -2.0, -3.0]))
    assert np.allclose(ev, [-1, -2, -3], atol=1e-14)


def test_eigen3_rotation_block():
    ev = eigen3(ROT)
    assert np.allclose(sorted(ev, key=lambda z: z.imag), [-1j, -1, 1j], atol=1e-14)


matrices = st.lists(st.floats(-3, 3), min_size=9, max_size=9).map(
    lambda v: np.array(v).reshape(3, 3))


@given(matrices)
def test_eigen3_companion_oracle(J):
    a2, a1, a0 = char_poly(J)
    ref = np.roots([1.0, a2, a1, a0])  # eigenvalues of the companion matrix
    got = eigen3(J)
    scale = max(1.0, np.max(np.abs(ref)))
    # match as multisets, robust to ordering
    for z in got:
        assert np.min(np.abs(ref - z)) < 1e-7 * scale
    # near-multiple roots are ill-conditioned; compare only the well separated case
    sep = min(abs(ref[i] - ref[j]) for i in range(3) for j in range(i + 1, 3))
    if sep > 1e-3 * scale:
        for z in ref:
            assert np.min(np.abs(got - z)) < 1e-7 * scale


@given(matrices)
def test_eigen3_conjugate_pairs(J):
    ev = eigen3(J)
    cplx = ev[ev.imag != 0]
    assert len(cplx) in (0, 2)
    if len(cplx) == 2:
        assert cplx[0] == np.conj(cplx[1])


def test_hopf_value_zero_on_imaginary_pair():
    a2, a1, a0 = char_poly(ROT)
    assert (a2, a1, a0) == (1.0, 1.0, 1.0)
    tf = test_functions(ROT)
    assert abs(tf.hopf) < 1e-12
    assert tf.hopf_admissible


def test_fold_value_zero_on_singular_row():
    J = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [4.0, 5.0, 7.0]])
    assert test_functions(J).fold == 0.0


@given(matrices)
def test_test_functions_vs_eigenvalues(J):
    l1, l2, l3 = eigen3(J)
    tf = test_functions(J)
    scale = max(1.0, np.max(np.abs(J))) ** 3
    assert abs(tf.fold - (l1 * l2 * l3).real) < 1e-8 * scale
    hopf = -((l1 + l2) * (l1 + l3) * (l2 + l3)).real
    assert abs(tf.hopf - hopf) < 1e-8 * scale
    assert isinstance(tf.fold, float) and isinstance(tf.hopf_admissible, bool)


# -- continuation -------------------------------------------------------------


def circle(u):
    return np.array([u[0] ** 2 + u[1] ** 2 - 1.0])


def circle_jac(u):
    return np.array([[2 * u[0], 2 * u[1]]])


def test_circle_closes():
    t0 = time.perf_counter()
    br = continue_curve(circle, np.array([1.0, 0.0]), ContinuationConfig(step=0.05),
                        jacobian=circle_jac)
    assert time.perf_counter() - t0 < 1.0
    assert br.closed and br.termination == "closed-loop"
    assert np.max(np.abs(np.hypot(*br.points.T) - 1)) < 1e-8


def test_circle_numerical_jacobian():
    br = continue_curve(circle, np.array([0.0, 1.1]), ContinuationConfig(step=0.1))
    assert br.closed
    assert np.max(np.abs(np.hypot(*br.points.T) - 1)) < 1e-8


@given(st.floats(0.01, 0.1))
def test_continuation_spacing_and_residual(h):
    br = continue_curve(circle, np.array([1.0, 0.0]),
                        ContinuationConfig(step=h, step_max=max(h, 0.1)), jacobian=circle_jac)
    d = np.linalg.norm(np.diff(br.points, axis=0), axis=1)
    steps = br.steps[1:]
    assert np.all(d >= 0.25 * steps - 1e-12) and np.all(d <= 2 * steps + 1e-12)
    assert max(abs(circle(u)[0]) for u in br.points) < 1e-8


def test_parabola_arc_monotone():
    F = lambda u: np.array([u[1] - u[0] ** 2])  # noqa: E731
    cfg = ContinuationConfig(step=0.02, lower=(-1, -1), upper=(1, 2))
    br = continue_curve(F, np.array([0.0, 0.0]), cfg)
    assert br.termination == "boundary"
    x = br.points[:, 0]
    dx = np.diff(x)
    assert np.all(dx > 0) or np.all(dx < 0)
    assert abs(abs(x[-1]) - 1) < 0.05
    # the direction convention orients the first tangent along +y, which is
    # degenerate at the vertex, so the tie-break picks +x
    assert dx[0] > 0


def test_direction_flag_reverses():
    F = lambda u: np.array([u[1] - 2 * u[0]])  # noqa: E731
    a = continue_curve(F, np.zeros(2), ContinuationConfig(max_points=5))
    b = continue_curve(F, np.zeros(2), ContinuationConfig(max_points=5, direction=-1))
    assert a.points[1, 1] > 0 > b.points[1, 1]


def test_hr_fold_curve_self_consistent():
    p = HRParams(b=1.0, eps=0.018)
    F, dF = hr_fold_system(p)
    seed = hr_fold_seed(p)
    cfg = ContinuationConfig(step=0.02, max_points=200, lower=(-5, 0.0, -20), upper=(5, 1.5, 20))
    br = continue_curve(F, seed, cfg, jacobian=dF)
    assert len(br) > 20
    for x, b, I in br.points[::5]:
        q = p.replace(b=float(b), I=float(I))
        eq = hr_equilibria(q)
        k = int(np.argmin([abs(e.state[0] - x) for e in eq]))
        assert abs(eq[k].state[0] - x) < 1e-6
        assert abs(test_functions(hr_jacobian(eq[k].state, q)).fold) < 1e-8
        assert eq[k].residual < 1e-10
        assert len(eq) == 2  # a fold point is a double root of the cubic


def test_no_fold_in_paper_window():
    assert hr_fold_seed(HRParams(b=3.0)) is None


def test_bad_seed_raises():
    with pytest.raises(ContinuationError):
        continue_curve(lambda u: np.array([u[0] ** 2 + u[1] ** 2 + 1]), np.array([0.0, 0.0]))


def test_config_validation():
    with pytest.raises(ValueError):
        ContinuationConfig(step=1.0, step_max=0.1)
    with pytest.raises(ValueError):
        ContinuationConfig(step_min=1e-14, step=0.01)
