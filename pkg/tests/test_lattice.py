"""Structural tests: presets, products, decoration, validation, spec files."""

import json

import numpy as np
import pytest

import latqe
from latqe.floquet import fiber_stack, theta_grid
from latqe.lattice import (GraphValidationError, PeriodicGraph, build_preset,
                           cartesian_product, cycle_graph, decorate,
                           path_graph, single_vertex, strong_product,
                           tensor_product, validate)

ALL_PRESETS = [
    ("zd", {"d": 1}), ("zd", {"d": 2}), ("zd", {"d": 3}),
    ("triangular", {}), ("kings", {}), ("honeycomb", {}),
    ("z-range-k", {"k": 3}), ("z-periodic-potential", {"Q": [0.5, -0.25]}),
    ("ladder", {}), ("z-box-p2", {}), ("decorated-z-triangle", {}),
    ("z-tensor-c3p4", {}), ("z-even-odd", {}),
    ("z2-block-potential", {"Q": [0.1, -0.2, 0.3, -0.4]}),
]


@pytest.mark.parametrize("name,params", ALL_PRESETS)
def test_fibers_hermitian_on_grid(name, params):
    g = build_preset(name, params)
    stack = fiber_stack(g, theta_grid(32, g.dim))
    defect = np.max(np.abs(stack - stack.conj().transpose(0, 2, 1)))
    assert defect <= 1e-14


@pytest.mark.parametrize("name,params", ALL_PRESETS)
def test_presets_validate(name, params):
    diag = validate(build_preset(name, params))
    assert diag.symmetric
    if name == "z-even-odd":
        assert diag.connectivity == "disconnected"
        assert not diag.ok
    else:
        assert diag.connectivity == "connected"


def test_zd1_structure():
    g = build_preset("zd", {"d": 1})
    assert g.nu == 1
    assert set(g.templates) == {(0, 0, (1,)), (0, 0, (-1,))}
    # scalar fiber is 2 cos(2 pi theta)
    th = theta_grid(64, 1)
    vals = fiber_stack(g, th)[:, 0, 0]
    assert np.max(np.abs(vals - 2 * np.cos(2 * np.pi * th[:, 0]))) <= 1e-14


def test_unknown_preset_and_bad_params():
    with pytest.raises(GraphValidationError):
        build_preset("nonexistent")
    with pytest.raises(GraphValidationError):
        build_preset("z-range-k", {"k": 0})
    with pytest.raises(GraphValidationError):
        build_preset("zd", {"d": 0})


@pytest.mark.parametrize("name,params,expected_D", [
    ("zd", {"d": 1}, 1), ("zd", {"d": 2}, 2), ("triangular", {}, 3),
    ("kings", {}, 4), ("z-range-k", {"k": 3}, 3), ("z-even-odd", {}, 1),
])
def test_nu1_degree_and_scalar_fiber(name, params, expected_D):
    g = build_preset(name, params)
    assert g.half_degree == expected_D
    assert g.degree_profile() == [2 * expected_D]
    offs = np.array(g.nu1_offsets())
    th = theta_grid(16, g.dim)
    vals = fiber_stack(g, th)[:, 0, 0]
    expected = 2 * np.sum(np.cos(2 * np.pi * th @ offs.T), axis=1)
    assert np.max(np.abs(vals - expected)) <= 1e-14


def test_cartesian_fiber_identity():
    g = build_preset("zd", {"d": 1})
    f = cycle_graph(4, potential=[0.3, -0.1, 0.0, 0.7])
    prod = cartesian_product(g, f)
    hf = f.hamiltonian()
    for theta in (0.0, 0.13, 0.5, 0.777):
        e_g = 2 * np.cos(2 * np.pi * theta)
        expected = e_g * np.eye(4) + hf
        actual = latqe.fiber(prod, theta).matrix
        assert np.max(np.abs(actual - expected)) <= 1e-14


def test_cartesian_examples():
    # Z box P2 is the ladder
    lad = cartesian_product(build_preset("zd", {"d": 1}), path_graph(2))
    m = latqe.fiber(lad, 0.2).matrix
    c = 2 * np.cos(2 * np.pi * 0.2)
    assert np.allclose(m, [[c, 1], [1, c]], atol=1e-14)
    # Z box C4: eigenvalues 2cos + {2, 0, 0, -2}
    cyl = cartesian_product(build_preset("zd", {"d": 1}), cycle_graph(4))
    ev = np.linalg.eigvalsh(latqe.fiber(cyl, 0.37).matrix)
    c = 2 * np.cos(2 * np.pi * 0.37)
    assert np.allclose(np.sort(ev), np.sort([c + 2, c, c, c - 2]), atol=1e-13)
    # identity factor
    same = cartesian_product(build_preset("zd", {"d": 1}), single_vertex())
    assert same.nu == 1
    assert set(same.templates) == {(0, 0, (1,)), (0, 0, (-1,))}


def test_cartesian_requires_nu1():
    with pytest.raises(GraphValidationError):
        cartesian_product(build_preset("honeycomb"), path_graph(2))


def test_tensor_fiber_identity_and_flat_band_warning():
    g = build_preset("zd", {"d": 1})
    f = cycle_graph(3)
    prod = tensor_product(g, f)
    af = f.adjacency()
    for theta in (0.11, 0.4):
        e_g = 2 * np.cos(2 * np.pi * theta)
        assert np.max(np.abs(latqe.fiber(prod, theta).matrix - e_g * af)) <= 1e-14
    # a zero adjacency eigenvalue must be flagged as a flat band; the factor
    # needs an odd cycle, so attach two pendants to one triangle vertex:
    # (0,0,0,1,-1) is then a kernel vector
    from latqe.lattice import FiniteGraph
    paw2 = FiniteGraph(("a", "b", "c", "p", "q"),
                       frozenset({(0, 1), (0, 2), (1, 2), (0, 3), (0, 4)}),
                       (0.0,) * 5)
    with pytest.warns(UserWarning, match="flat band"):
        tensor_product(g, paw2)


def test_tensor_bipartite_rejection():
    g = build_preset("zd", {"d": 1})   # bipartite
    with pytest.raises(GraphValidationError, match="odd cycle"):
        tensor_product(g, path_graph(2))   # both factors bipartite


def test_strong_product_box_fiber():
    prod = strong_product(build_preset("zd", {"d": 1}), path_graph(2))
    c = 2 * np.cos(2 * np.pi * 0.23)
    m = latqe.fiber(prod, 0.23).matrix
    assert np.allclose(m, [[c, 1 + c], [1 + c, c]], atol=1e-14)
    ev = np.linalg.eigvalsh(m)
    assert np.allclose(np.sort(ev), np.sort([-1.0, 1 + 2 * c]), atol=1e-13)


def test_strong_product_z_z_is_kings():
    kings = build_preset("kings")
    zz = strong_product(build_preset("zd", {"d": 1}),
                        build_preset("zd", {"d": 1}))
    assert zz.nu == 1
    assert dict(zz.templates) == dict(kings.templates)


def test_strong_product_identity_factor():
    same = strong_product(build_preset("zd", {"d": 1}), single_vertex())
    assert set(same.templates) == {(0, 0, (1,)), (0, 0, (-1,))}


def test_decorate_triangle():
    g = decorate(build_preset("zd", {"d": 1}), cycle_graph(3), anchor=0)
    assert g.nu == 3
    # Floquet eigenvalues {-1, (2c + 1 +/- sqrt(4c^2 - 4c + 9)) / 2}
    for theta in (0.1, 0.31, 0.49):
        c = np.cos(2 * np.pi * theta)
        disc = np.sqrt(4 * c ** 2 - 4 * c + 9)
        expected = np.sort([-1.0, (2 * c + 1 + disc) / 2, (2 * c + 1 - disc) / 2])
        ev = np.linalg.eigvalsh(latqe.fiber(g, theta).matrix)
        assert np.max(np.abs(ev - expected)) <= 1e-13


def test_decorate_single_vertex_identity():
    g = decorate(build_preset("zd", {"d": 1}), single_vertex(), anchor=0)
    assert g.nu == 1
    assert set(g.templates) == {(0, 0, (1,)), (0, 0, (-1,))}


def test_decorate_bad_anchor():
    with pytest.raises(GraphValidationError):
        decorate(build_preset("zd", {"d": 1}), cycle_graph(3), anchor=5)


def test_symmetry_violation_detected():
    # hand-rolled asymmetric template dict must be rejected at construction
    with pytest.raises(GraphValidationError, match="symmetry"):
        PeriodicGraph(1, ("0",), (0.0,), {(0, 0, (1,)): 1})
    # and flagged by validate on a sneakily built object
    g = build_preset("zd", {"d": 1})
    bad = dict(g.templates)
    del bad[(0, 0, (-1,))]
    broken = object.__new__(PeriodicGraph)
    object.__setattr__(broken, "dim", 1)
    object.__setattr__(broken, "cell_labels", ("0",))
    object.__setattr__(broken, "potential", (0.0,))
    object.__setattr__(broken, "templates", bad)
    object.__setattr__(broken, "embedding", None)
    diag = validate(broken)
    assert not diag.symmetric and not diag.ok


def test_self_loop_rejected():
    with pytest.raises(GraphValidationError, match="self-loop"):
        PeriodicGraph.from_edges(1, ("0",), (0.0,), [(0, 0, (0,))])


def test_connectivity_exact_edge_cases():
    # long offsets with coprime reach are connected even though any small
    # patch looks shattered; common factors disconnect
    cases = [([7, 9], "connected"), ([4, 6], "disconnected"),
             ([101, 103], "connected"), ([3], "disconnected")]
    for offs, expect in cases:
        g = PeriodicGraph.from_edges(1, ("0",), (0.0,),
                                     [(0, 0, (o,)) for o in offs])
        assert validate(g).connectivity == expect, offs
    # diagonal-only Z^2 splits into two checkerboard sublattices
    g = PeriodicGraph.from_edges(2, ("0",), (0.0,),
                                 [(0, 0, (1, 1)), (0, 0, (1, -1))])
    assert validate(g).connectivity == "disconnected"


def test_validate_zd2_profile():
    diag = validate(build_preset("zd", {"d": 2}))
    assert diag.connectivity == "connected"
    assert diag.degree_profile == [4]
    assert diag.half_degree == 2
    assert diag.max_offset == 1
    assert diag.regular


@pytest.mark.filterwarnings("ignore:auto-completed")
def test_graph_spec_roundtrip(tmp_path):
    g = build_preset("honeycomb")
    path = tmp_path / "honeycomb.json"
    latqe.save_graph_spec(g, path)
    loaded = latqe.load_graph_spec(path)
    assert loaded.dim == g.dim
    assert loaded.cell_labels == g.cell_labels
    assert dict(loaded.templates) == dict(g.templates)
    assert loaded.potential == g.potential


def test_graph_spec_autocompletes_reverse(tmp_path):
    data = {
        "dim": 1,
        "vertices": [{"label": "a", "Q": 0.5}, {"label": "b"}],
        "edges": [{"src": "a", "dst": "b", "offset": [0]},
                  {"src": "b", "dst": "a", "offset": [1]}],
    }
    path = tmp_path / "partial.json"
    path.write_text(json.dumps(data))
    with pytest.warns(UserWarning, match="auto-completed"):
        g = latqe.load_graph_spec(path)
    diag = validate(g)
    assert diag.symmetric
    assert g.potential == (0.5, 0.0)


def test_multiplicity_templates():
    g = PeriodicGraph.from_edges(1, ("0",), (0.0,), [(0, 0, (1,), 2)])
    assert g.templates[(0, 0, (1,))] == 2
    th = theta_grid(8, 1)
    vals = fiber_stack(g, th)[:, 0, 0]
    assert np.allclose(vals, 4 * np.cos(2 * np.pi * th[:, 0]), atol=1e-14)
