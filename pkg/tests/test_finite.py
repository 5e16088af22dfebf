"""H_N assembly, eigenbasis constructions, Bloch functions."""

import numpy as np
import pytest

import latqe
from latqe.finite import (FiniteGraphModel, bloch_eigenfunction,
                          dense_eigenbasis, embed_in_eigenbasis,
                          export_eigenbasis, fiber_eigenbasis, hamiltonian)
from latqe.lattice import build_preset


def naive_dense(graph, N):
    """Independent H_N assembly: plain loops, no vectorized rolls."""
    d, nu = graph.dim, graph.nu
    cells = [tuple(c) for c in np.indices((N,) * d).reshape(d, -1).T]
    index = {c: i for i, c in enumerate(cells)}
    size = nu * len(cells)
    h = np.zeros((size, size))
    for c in cells:
        for (n, l, o), mult in graph.templates.items():
            target = tuple((ci + oi) % N for ci, oi in zip(c, o))
            h[index[c] * nu + n, index[target] * nu + l] += mult
        for n in range(nu):
            h[index[c] * nu + n, index[c] * nu + n] += graph.potential[n]
    return h


def test_hamiltonian_zd1_is_cycle():
    model = FiniteGraphModel(build_preset("zd", {"d": 1}), 4)
    expected = np.array([[0, 1, 0, 1],
                         [1, 0, 1, 0],
                         [0, 1, 0, 1],
                         [1, 0, 1, 0]], dtype=float)
    assert np.array_equal(hamiltonian(model).dense(), expected)


@pytest.mark.parametrize("name,params,N", [
    ("ladder", {}, 3),                                   # the prism graph
    ("z-periodic-potential", {"Q": [0.5, -1.0]}, 4),     # wrapped Jacobi
    ("honeycomb", {}, 3),
    ("decorated-z-triangle", {}, 4),
    ("zd", {"d": 2}, 3),
])
def test_hamiltonian_matches_naive_unroller(name, params, N):
    g = build_preset(name, params)
    model = FiniteGraphModel(g, N)
    assert np.max(np.abs(hamiltonian(model).dense() - naive_dense(g, N))) == 0.0


def test_prism_structure():
    # ladder at N = 3: two triangles joined by rungs, 3-regular on 6 vertices
    h = hamiltonian(FiniteGraphModel(build_preset("ladder"), 3)).dense()
    assert np.array_equal(h, h.T)
    assert np.all(h.sum(axis=0) == 3)
    assert h.shape == (6, 6)


def test_operator_hermitian_on_random_pairs():
    g = build_preset("z-tensor-c3p4")
    model = FiniteGraphModel(g, 5)
    op = hamiltonian(model)
    rng = np.random.default_rng(23)
    for _ in range(5):
        phi = rng.standard_normal(model.size) + 1j * rng.standard_normal(model.size)
        psi = rng.standard_normal(model.size) + 1j * rng.standard_normal(model.size)
        lhs = np.vdot(phi, op.apply(psi))
        rhs = np.conj(np.vdot(psi, op.apply(phi)))
        assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(phi) * np.linalg.norm(psi)


def test_apply_matches_dense():
    g = build_preset("z2-block-potential", {"Q": [0.1, -0.2, 0.3, -0.4]})
    model = FiniteGraphModel(g, 4)
    op = hamiltonian(model)
    h = op.dense()
    rng = np.random.default_rng(5)
    psi = rng.standard_normal(model.size) + 1j * rng.standard_normal(model.size)
    assert np.max(np.abs(op.apply(psi) - h @ psi)) <= 1e-12


def test_hamiltonian_cap():
    model = FiniteGraphModel(build_preset("zd", {"d": 1}), 100)
    with pytest.raises(latqe.CapExceededError):
        hamiltonian(model, cap=50)
    with pytest.raises(latqe.CapExceededError):
        hamiltonian(model).dense(cap=50)


# ---------------------------------------------------------------------------
# eigenbases
# ---------------------------------------------------------------------------

SPECTRUM_CASES = [
    ("zd", {"d": 1}, 16), ("zd", {"d": 2}, 8), ("honeycomb", {}, 6),
    ("ladder", {}, 12), ("z-box-p2", {}, 10), ("decorated-z-triangle", {}, 8),
    ("z-tensor-c3p4", {}, 4), ("z-periodic-potential", {"Q": [0.9, -0.4]}, 10),
]


@pytest.mark.parametrize("name,params,N", SPECTRUM_CASES)
def test_fiber_vs_dense_spectra(name, params, N):
    model = FiniteGraphModel(build_preset(name, params), N)
    fib = fiber_eigenbasis(model, mode="fiber")
    dense = dense_eigenbasis(model)
    assert np.max(np.abs(np.sort(fib.eigenvalues) - dense.eigenvalues)) <= 1e-9


@pytest.mark.parametrize("mode", ["fiber", "real_mixed", "random_mix"])
def test_eigenbasis_invariants(mode):
    model = FiniteGraphModel(build_preset("honeycomb"), 6)
    seed = 11 if mode == "random_mix" else None
    basis = fiber_eigenbasis(model, mode=mode, seed=seed)
    assert len(basis) == model.size
    assert basis.gram_defect() <= 1e-10
    assert basis.max_residual() <= 1e-10


def test_fiber_mode_zd1_eigenvalues():
    model = FiniteGraphModel(build_preset("zd", {"d": 1}), 4)
    basis = fiber_eigenbasis(model, mode="fiber")
    assert np.allclose(np.sort(basis.eigenvalues), [-2, 0, 0, 2], atol=1e-14)
    dense = dense_eigenbasis(model)
    assert np.allclose(np.sort(basis.eigenvalues), dense.eigenvalues, atol=1e-14)


def test_real_mixed_swap_family_on_zd2():
    """On Z^2 the mixed basis contains (e_{(l1,l2)} +/- e_{(l2,l1)})/sqrt2."""
    N = 6
    model = FiniteGraphModel(build_preset("zd", {"d": 2}), N)
    basis = fiber_eigenbasis(model, mode="real_mixed")
    k = latqe.floquet.momentum_grid(N, 2)

    def plane(r):
        return np.exp(2j * np.pi * (k @ np.array(r)) / N) / N

    tags = {p[0]: p for p in basis.provenance if p}
    assert "swap+" in tags and "cos" in tags
    # locate the column for the swap pair (1, 2) <-> (2, 1)
    for u, prov in enumerate(basis.provenance):
        if prov[0] == "swap+" and prov[1] == (1, 2):
            expected = (plane((1, 2)) + plane((2, 1))) / np.sqrt(2)
            assert np.max(np.abs(basis.vectors[:, u] - expected)) <= 1e-12
            break
    else:
        pytest.fail("swap pair (1,2) not found")


def test_real_mixed_is_real_in_1d():
    model = FiniteGraphModel(build_preset("zd", {"d": 1}), 12)
    basis = fiber_eigenbasis(model, mode="real_mixed")
    assert np.max(np.abs(basis.vectors.imag)) <= 1e-12
    assert basis.gram_defect() <= 1e-10
    assert basis.max_residual() <= 1e-10


def test_random_mix_deterministic_and_distinct():
    model = FiniteGraphModel(build_preset("zd", {"d": 1}), 16)
    b1 = fiber_eigenbasis(model, mode="random_mix", seed=3)
    b2 = fiber_eigenbasis(model, mode="random_mix", seed=3)
    b3 = fiber_eigenbasis(model, mode="random_mix", seed=4)
    assert np.array_equal(b1.vectors, b2.vectors)
    assert not np.array_equal(b1.vectors, b3.vectors)
    assert b1.seed == 3


def test_random_mix_requires_seed():
    model = FiniteGraphModel(build_preset("zd", {"d": 1}), 8)
    with pytest.raises(ValueError):
        fiber_eigenbasis(model, mode="random_mix")
    with pytest.raises(ValueError):
        fiber_eigenbasis(model, mode="no-such-mode")


def test_dense_flat_band_multiplicity():
    # z-box-p2 at N = 8 has eigenvalue -1 with multiplicity >= 8
    basis = dense_eigenbasis(FiniteGraphModel(build_preset("z-box-p2"), 8))
    assert int(np.sum(np.abs(basis.eigenvalues + 1) < 1e-9)) >= 8


def test_localized_eigenvector_integer_arithmetic():
    g = build_preset("decorated-z-triangle")
    model = FiniteGraphModel(g, 6)
    op = hamiltonian(model)
    psi = np.zeros(model.size, dtype=np.int64)
    psi[model.flat_index((2,), 1)] = 1
    psi[model.flat_index((2,), 2)] = -1
    out = op.apply(psi)
    assert out.dtype.kind == "i"
    assert np.array_equal(out, -psi)


def test_embed_in_eigenbasis():
    g = build_preset("decorated-z-triangle")
    N = 8
    model = FiniteGraphModel(g, N)
    cols = np.zeros((model.size, N), dtype=complex)
    for j in range(N):
        cols[model.flat_index((j,), 1), j] = 1 / np.sqrt(2)
        cols[model.flat_index((j,), 2), j] = -1 / np.sqrt(2)
    basis = embed_in_eigenbasis(model, cols, -1.0)
    assert basis.gram_defect() <= 1e-10
    assert basis.max_residual() <= 1e-10
    # the prescribed columns survive verbatim
    kept = [u for u, p in enumerate(basis.provenance)
            if isinstance(p, tuple) and p[0] == "localized"]
    assert len(kept) == N
    assert np.max(np.abs(basis.vectors[:, kept] - cols)) == 0.0


def test_embed_rejects_foreign_vectors():
    model = FiniteGraphModel(build_preset("zd", {"d": 1}), 8)
    v = np.zeros((model.size, 1), dtype=complex)
    v[0] = 1.0   # not an eigenvector of eigenvalue 2
    with pytest.raises(ValueError):
        embed_in_eigenbasis(model, v, 2.0)


# ---------------------------------------------------------------------------
# Bloch functions
# ---------------------------------------------------------------------------


def test_bloch_plane_wave_zd1():
    model = FiniteGraphModel(build_preset("zd", {"d": 1}), 8)
    bf = bloch_eigenfunction(model, 1, 1)
    assert abs(bf.eigenvalue - 2 * np.cos(np.pi / 4)) <= 1e-12
    expected = np.exp(2j * np.pi * np.arange(8) / 8) / np.sqrt(8)
    assert np.max(np.abs(bf.vector - expected)) <= 1e-12
    assert bf.residual() <= 1e-10


def test_bloch_zd2_full_grid():
    model = FiniteGraphModel(build_preset("zd", {"d": 2}), 8)
    for j in latqe.floquet.momentum_grid(8, 2):
        bf = bloch_eigenfunction(model, j, 1)
        assert bf.residual() <= 1e-10
        assert bf.modulus_defect() <= 1e-12


def test_bloch_flat_branch_z_box_p2():
    model = FiniteGraphModel(build_preset("z-box-p2"), 12)
    found = 0
    for j in range(12):
        vals = [bloch_eigenfunction(model, j, s).eigenvalue for s in (1, 2)]
        if any(abs(v + 1) <= 1e-10 for v in vals):
            found += 1
    assert found == 12   # the -1 branch exists at every momentum


def test_bloch_honeycomb_dirac():
    model = FiniteGraphModel(build_preset("honeycomb"), 6)
    bf = bloch_eigenfunction(model, (4, 2), 1)   # (2/3, 1/3) * 6
    assert abs(bf.eigenvalue) <= 1e-12
    assert bf.residual() <= 1e-10


def test_bloch_bad_args():
    model = FiniteGraphModel(build_preset("zd", {"d": 1}), 8)
    with pytest.raises(ValueError):
        bloch_eigenfunction(model, (1, 2), 1)
    with pytest.raises(ValueError):
        bloch_eigenfunction(model, 1, 5)


def test_export_eigenbasis(tmp_path):
    model = FiniteGraphModel(build_preset("ladder"), 4)
    basis = fiber_eigenbasis(model, mode="fiber")
    path = tmp_path / "basis.csv"
    export_eigenbasis(basis, path, include_vectors=True)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == model.size + 1
    vec_file = tmp_path / "basis_vectors.csv"
    assert vec_file.exists()
    assert len(vec_file.read_text().strip().splitlines()) == model.size ** 2 + 1
