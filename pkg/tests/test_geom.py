import time
import warnings

import numpy as np
import pytest
from conftest import mesh
from hypothesis import given
from hypothesis import strategies as st

from atlas.gallery.curves import synthetic_codim2
from atlas.gallery.parametric import grid_faces, uv_sphere
from atlas.gallery.surfaces import AnalyticSurface
from atlas.geom.folds import FoldPoint, curve_folds, fold_visibility
from atlas.geom.implicit import (
    count_roots_line,
    cusp_discriminant,
    fold_points_at,
    fold_set_implicit,
)
from atlas.geom.mesh import (
    MeshFormatError,
    MeshValidationError,
    Polyline3,
    SurfaceMesh,
    read_polylines,
    write_polylines,
)
from atlas.geom.morse import (
    degenerate_vertices,
    morse_counts,
    morse_sum,
    pl_critical_points,
    transversality_check,
)
from atlas.geom.reeb import build_reeb, classify_topology, default_samples
from atlas.geom.slicing import slice_level

CUSP = AnalyticSurface("cusp")


def height_grid(f, n=41):
    """Structured mesh of the graph ``eps = f(l1, l2)`` on [-1, 1]^2 (vertex at the origin)."""
    t = np.linspace(-1, 1, n)
    X, Y = np.meshgrid(t, t, indexing="ij")
    verts = np.stack([X, Y, f(X, Y)], -1).reshape(-1, 3)
    return SurfaceMesh(verts, grid_faces(n, n, False, False))


def nearest_vertex(m, p):
    return int(np.argmin(np.linalg.norm(m.vertices - p, axis=1)))


# -- mesh I/O and validation --------------------------------------------------


def test_obj_roundtrip(tmp_path):
    m = mesh("thin-tube")
    m.write_obj(tmp_path / "t.obj")
    back = SurfaceMesh.read_obj(tmp_path / "t.obj")
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.faces, m.faces)
    assert len(back.sharp_fold_polylines()) == 2


def test_malformed_obj():
    with pytest.raises(MeshFormatError):
        SurfaceMesh.from_obj_text("v 0 0\nf 1 2 3\n")
    with pytest.raises(MeshFormatError):
        SurfaceMesh.from_obj_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")


def test_degenerate_triangle_rejected():
    with pytest.raises(MeshValidationError):
        SurfaceMesh(np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0.0]]), np.array([[0, 1, 2]]))


def test_polyline_csv_roundtrip(tmp_path):
    a = synthetic_codim2("belyakov-like")
    b = synthetic_codim2("shared-boundary")
    write_polylines(tmp_path / "c.csv", [a, b])
    back = read_polylines(tmp_path / "c.csv")
    assert [c.closed for c in back] == [False, True]
    assert np.array_equal(back[0].points, a.points) and back[1].role == "codim2"


def test_polyline_invariants():
    with pytest.raises(ValueError):
        Polyline3(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        Polyline3(np.array([[0, 0, 0], [0, 0, 0.0]]))


# -- transversality -----------------------------------------------------------


def test_plane_is_transversal():
    m = height_grid(lambda x, y: x, n=11)
    interior = np.nonzero(~m.boundary_vertex_mask())[0]
    assert all(transversality_check(m, v) == "transversal" for v in interior)


def test_paraboloid_apex_degenerate():
    m = height_grid(lambda x, y: -x * x - y * y)
    assert transversality_check(m, nearest_vertex(m, [0, 0, 0])) == "degenerate"
    assert transversality_check(m, nearest_vertex(m, [0.5, 0.5, -0.5])) == "transversal"


def test_sphere_degenerate_set_at_poles():
    m = uv_sphere(64, 128)
    h = m.median_edge_length()
    deg = degenerate_vertices(m)
    assert len(deg) >= 2
    poles = np.array([[0, 0, -1.0], [0, 0, 1.0]])
    for v in deg:
        assert np.min(np.linalg.norm(poles - m.vertices[v], axis=1)) <= 2 * h


@pytest.mark.parametrize("name", ["torus", "uv-sphere", "paraboloid", "saddle-grid"])
def test_degeneracy_consistency_structured(name):
    if name == "paraboloid":
        m = height_grid(lambda x, y: -x * x - y * y)
    elif name == "saddle-grid":
        m = height_grid(lambda x, y: x * x - y * y)
    else:
        m = mesh(name)
    pts = pl_critical_points(m)
    deg = set(degenerate_vertices(m).tolist())
    assert pts and all(p.vertex in deg for p in pts)
    h = m.median_edge_length()
    crit = np.array([m.vertices[p.vertex] for p in pts])
    for v in deg:
        assert np.min(np.linalg.norm(crit - m.vertices[v], axis=1)) <= 2 * h


# -- Morse ----------------------------------------------------------------------


def test_isola_single_max():
    m = mesh("isola-plus", 64)
    (p,) = pl_critical_points(m)
    assert p.kind == "max" and p.geometric == "isola-type"
    assert np.linalg.norm(p.location) < 2 * m.median_edge_length()


def test_saddle_single_saddle():
    (p,) = pl_critical_points(mesh("saddle", 64))
    assert p.kind == "saddle" and p.geometric == "saddle-type"


def test_torus_counts():
    pts = pl_critical_points(mesh("torus"))
    c = morse_counts(pts)
    assert (c["min"], c["saddle"], c["max"], c["multisaddle"]) == (1, 2, 1, 0)


@pytest.mark.parametrize("name,chi", [("torus", 0), ("uv-sphere", 2), ("sphere", 2)])
def test_morse_identity(name, chi):
    m = mesh(name, 32) if name == "sphere" else mesh(name)
    pts = pl_critical_points(m)
    assert morse_counts(pts)["multisaddle"] == 0
    assert m.euler_characteristic() == chi
    assert morse_sum(pts) == chi


@pytest.mark.parametrize("kind", ["isola-plus", "isola-minus", "saddle", "two-well",
                                  "two-caps", "sphere"])
def test_ground_truth_critical_points(kind):
    m = mesh(kind, 32)
    truth = AnalyticSurface(kind).ground_truth["critical"]
    pts = pl_critical_points(m)
    assert sorted(p.kind for p in pts) == sorted(k for _, k in truth)
    h = m.median_edge_length()
    for loc, k in truth:
        d = min(np.linalg.norm(p.location - loc) for p in pts if p.kind == k)
        assert d < 2 * h


def test_refinement_convergence():
    errs = [np.linalg.norm(pl_critical_points(mesh("isola-plus", r))[0].location)
            for r in (16, 32, 64)]
    assert errs[0] / errs[1] >= 1.5 and errs[1] / errs[2] >= 1.5


def test_critical_point_report_fields():
    d = pl_critical_points(mesh("torus"))[0].to_dict()
    assert set(d) >= {"location", "kind", "class", "residual", "height"}


# -- slicing ----------------------------------------------------------------------


def test_sphere_equator_length():
    m = uv_sphere(64, 128)
    assert m.median_edge_length() < 0.06
    (c,) = slice_level(m, 0.0)
    assert c.closed
    assert abs(c.length / (2 * np.pi) - 1) < 0.02


def test_isola_slice_above_collapse_is_empty():
    assert slice_level(mesh("isola-plus", 32), 0.1) == []


def test_two_well_slice_two_ovals():
    cs = slice_level(mesh("two-well"), -0.1)
    assert len(cs) == 2 and all(c.closed for c in cs)


# critical heights and expected component counts between them
SLICE_CASES = {
    "two-well": ([-0.25, 0.0], [0, 2, 1]),
    "two-caps": ([0.1, 0.2], [2, 1, 0]),
    "isola-plus": ([0.0], [1, 0]),
}


@pytest.mark.parametrize("kind", sorted(SLICE_CASES))
def test_slice_count_stability(kind):
    m = mesh(kind, 32)
    crit, counts = SLICE_CASES[kind]
    h = m.vertices[:, 2]
    edges = [min(h.min() + 1e-3, crit[0] - 0.1)] + crit + [max(h.max() - 1e-3, crit[-1] + 0.1)]
    for k, (lo, hi) in enumerate(zip(edges, edges[1:])):
        pad = 0.02 * (hi - lo) + 0.01
        levels = np.linspace(lo + pad, hi - pad, 7)
        seen = {len(slice_level(m, e)) for e in levels}
        assert seen == {counts[k]}, (kind, lo, hi, seen)
    assert all(a != b for a, b in zip(counts, counts[1:]))


# -- Reeb graphs and topology ----------------------------------------------------


def reeb(kind, res=None):
    m = mesh(kind, res)
    return build_reeb(m, default_samples(m))


def test_cylinder_reeb():
    g = reeb("cylinder")
    assert all(n.kind.startswith("boundary") for n in g.nodes)
    assert len(g.edges) == 1
    assert classify_topology(g).name == "CaseI"


def test_thin_tube_reeb():
    assert classify_topology(reeb("thin-tube")).name == "CaseI"


def test_two_well_reeb():
    g = reeb("two-well")
    births = sorted(n.eps for n in g.events("birth"))
    assert len(births) == 2 and all(abs(b + 0.25) < 0.02 for b in births)
    (merge,) = g.events("merge")
    assert abs(merge.eps) < 0.02
    assert len(g.incoming(merge.id)) == 2 and len(g.outgoing(merge.id)) == 1
    assert classify_topology(g).name == "CaseII"


def test_two_caps_reeb():
    g = reeb("two-caps")
    deaths = sorted(n.eps for n in g.events("death"))
    assert np.allclose(deaths, [0.1, 0.2], atol=0.02)
    assert classify_topology(g).name == "CaseIII"


def test_pants_plus_disc():
    g = reeb("pants-plus-disc")
    curve = synthetic_codim2("shared-boundary")
    assert classify_topology(g, [curve]).name == "CaseIIb"
    assert classify_topology(g).name == "Other"


def test_reeb_track_intervals_consistent():
    g = reeb("two-well")
    nodes = {n.id: n for n in g.nodes}
    for e in g.edges:
        assert nodes[e.src].eps == e.eps_lo
        if e.dst is not None:
            assert nodes[e.dst].eps == e.eps_hi and e.eps_hi > e.eps_lo


# -- folds on curves ----------------------------------------------------------------


def test_parabola_fold():
    (f,) = curve_folds(synthetic_codim2("parabola"))
    assert f.kind == "min"
    assert np.linalg.norm(f.location - [1, 0, 0]) < 1e-3
    assert f.quadratic != 0


def test_helix_has_no_folds():
    assert curve_folds(synthetic_codim2("monotone")) == []


def test_single_max():
    c = synthetic_codim2("single-max", eps_max=0.3)
    (f,) = curve_folds(c)
    assert f.kind == "max" and abs(f.eps - 0.3) < 1e-12


def test_belyakov_like_extrema():
    c = synthetic_codim2("belyakov-like")
    got = sorted((f.eps, f.kind) for f in curve_folds(c))
    want = sorted((e, k) for e, k, _ in c.meta["folds"])
    assert [k for _, k in got] == [k for _, k in want]
    assert all(abs(a - b) < 1e-3 for (a, _), (b, _) in zip(got, want))


@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
def test_fold_refinement_convergence(kappa):
    base = synthetic_codim2("belyakov-like", kappa=kappa, n=801)
    eps = []
    for stride in (8, 4, 2, 1):
        c = Polyline3(base.points[::stride], role="codim2")
        eps.append(np.array(sorted(f.eps for f in curve_folds(c))))
    changes = [np.abs(b - a) for a, b in zip(eps, eps[1:])]
    for prev, nxt in zip(changes, changes[1:]):
        assert np.all(nxt <= 4 * prev + 1e-14)


def test_poor_fit_left_unclassified():
    t = np.linspace(-1, 1, 41)
    z = np.where(np.arange(41) == 20, 1.0, 0.0) + 1e-3 * t
    c = Polyline3(np.stack([t, 0 * t, z], -1), role="codim2")
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        fs = curve_folds(c)
    assert any(not f.classified for f in fs)


def test_fold_needs_window():
    with pytest.raises(ValueError):
        curve_folds(Polyline3(np.array([[0, 0, 0], [1, 0, 1], [2, 0, 0.0]])))


# -- visibility ---------------------------------------------------------------------


@pytest.mark.parametrize("theta0", [0.0, np.pi])
@pytest.mark.parametrize("eps0", [-0.3, 0.0, 0.3])
def test_sharp_fold_folds_invisible(theta0, eps0):
    tube = mesh("thin-tube")
    c = synthetic_codim2("on-sharp-fold", theta0=theta0, eps0=eps0)
    (f,) = curve_folds(c)
    assert fold_visibility(f, tube) == "invisible"


@pytest.mark.parametrize("x0", [-0.1, 0.05])
@pytest.mark.parametrize("leaf", ["upper", "lower"])
def test_mid_leaf_folds_visible(x0, leaf):
    tube = mesh("thin-tube")
    (f,) = curve_folds(synthetic_codim2("mid-leaf", x0=x0, leaf=leaf))
    assert fold_visibility(f, tube) == "visible"


def test_visibility_threshold_semantics():
    tube = mesh("thin-tube")
    dv = 0.01
    # the sharp fold at theta = 0 sits at lambda1 = L(eps); step outward along lambda1
    loc = np.array([0.3 + 10 * dv, 0.0, 0.0])
    f = FoldPoint(loc, 0.0, "max", -1.0, 0.0, 0)
    assert fold_visibility(f, tube, delta_vis=dv) == "visible"
    assert fold_visibility(f, tube, delta_vis=11 * dv) == "invisible"


def test_visibility_without_sharp_folds():
    (f,) = curve_folds(synthetic_codim2("single-max"))
    assert fold_visibility(f, mesh("cylinder")) == "unclassified"


# -- cusp ------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def cusp_folds():
    return fold_set_implicit(CUSP, CUSP.box, grad=CUSP.gradient)


def test_cusp_discriminant_on_fold_set(cusp_folds):
    assert cusp_folds.curves
    for p in cusp_folds.projected:
        assert np.max(np.abs(cusp_discriminant(p[:, 0], p[:, 1], CUSP.box))) < 1e-6


def test_cusp_location(cusp_folds):
    (c,) = cusp_folds.cusps
    assert np.linalg.norm(c.location) < 1e-4
    assert c.tangent_angle < 1e-3
    assert len(c.branches) == 2


def test_cusp_without_gradient():
    t0 = time.perf_counter()
    fs = fold_set_implicit(CUSP, CUSP.box)
    assert time.perf_counter() - t0 < 10
    (c,) = fs.cusps
    assert np.linalg.norm(c.location) < 1e-4
    for p in fs.projected:
        assert np.max(np.abs(cusp_discriminant(p[:, 0], p[:, 1], CUSP.box))) < 1e-6


def test_fold_points_at_slice():
    pts = fold_points_at(CUSP, -3.0, CUSP.box, grad=CUSP.gradient)
    # (lambda, eps1) = (-1, -2) and (1, 2), i.e. eps1 = +-2 on eps2 = -3
    assert np.allclose(pts, [(-1, -2, -3), (1, 2, -3)], atol=1e-8)


def test_root_counts_examples():
    r = count_roots_line(CUSP, 0.0, -3.0)
    assert r.count == 3 and np.allclose(r.roots, [-np.sqrt(3), 0, np.sqrt(3)], atol=1e-10)
    r = count_roots_line(CUSP, 0.0, 3.0)
    assert r.count == 1 and np.allclose(r.roots, [0.0], atol=1e-10)
    r = count_roots_line(CUSP, 2.0, -3.0)
    assert np.allclose(r.roots, [-2.0, 1.0], atol=1e-6)
    assert list(r.tangential) == [False, True]


@given(st.floats(-3.5, 3.5), st.floats(-3.9, 0.9))
def test_z_to_c_transition(e1, e2):
    # distance to the discriminant curve via its parametrisation (lambda -> (2l^3, -3l^2))
    lam = np.linspace(-1.2, 1.2, 24001)
    d = np.min(np.hypot(2 * lam ** 3 - e1, -3 * lam ** 2 - e2))
    if d < 1e-3:
        return
    inside = 27 * e1 ** 2 + 4 * e2 ** 3 < 0
    assert count_roots_line(CUSP, e1, e2).count == (3 if inside else 1)
