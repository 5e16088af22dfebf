"""Quantization, Egorov symbols, weighted averages, variance functionals."""

import math

import numpy as np
import pytest

import latqe
from latqe.assumption import coincidence_report
from latqe.ergodicity import (Observable, Symbol, egorov_symbols,
                              exact_time_average, hs_norm, matrix_average,
                              multiplication_symbol, qe_variance, quantize,
                              que_sup, weighted_average)
from latqe.finite import FiniteGraphModel, dense_eigenbasis, fiber_eigenbasis
from latqe.lattice import build_preset

# values at float-noise scale count as exact zeros in decay comparisons;
# genuine variances in these models sit many orders above this
NOISE_FLOOR = 1e-24


def _model(name, params, N):
    return FiniteGraphModel(build_preset(name, params), N)


def _random_unit(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------


def test_observable_constructors():
    m = _model("zd", {"d": 1}, 8)
    assert Observable.constant(m, 0.5).mean() == pytest.approx(0.5)
    half = Observable.half_indicator(m)
    assert half.mean() == pytest.approx(0.5)
    alt = Observable.alternating_block(m)
    assert np.array_equal(alt.flat_values().real, [1, 0] * 4)
    cos = Observable.cosine(m, 2)
    assert abs(cos.mean()) <= 1e-15


def test_observable_fourier_inverts():
    m = _model("honeycomb", {}, 4)
    rng = np.random.default_rng(1)
    a = Observable.scalar(m, rng.uniform(-1, 1, m.size))
    am = a.fourier()
    # a(q + n) = N^{-d/2} sum_m a_m(q) e^{2 pi i m.n / N}
    k = latqe.floquet.momentum_grid(4, 2)
    rebuilt = np.einsum("mq,mn->nq", am,
                        np.exp(2j * np.pi * (k @ k.T) / 4)) / 4.0
    assert np.max(np.abs(rebuilt - a.cell_values)) <= 1e-12


def test_band_matrix_validation():
    m = _model("zd", {"d": 1}, 8)
    with pytest.raises(ValueError, match="misses"):
        Observable.band_matrix(m, {(1,): 1.0})
    with pytest.raises(ValueError, match="Hermitian"):
        Observable.band_matrix(m, {(1,): 1.0, (-1,): 2.0})
    m2 = _model("honeycomb", {}, 4)
    with pytest.raises(ValueError, match="nu = 1"):
        Observable.band_matrix(m2, {(1, 0): 1.0, (-1, 0): 1.0})


# ---------------------------------------------------------------------------
# quantization
# ---------------------------------------------------------------------------


def test_quantize_multiplication_symbol():
    m = _model("honeycomb", {}, 4)
    rng = np.random.default_rng(2)
    a = Observable.scalar(m, rng.uniform(-1, 1, m.size))
    op = quantize(multiplication_symbol(m, a))
    psi = _random_unit(rng, m.size)
    assert np.max(np.abs(op.apply(psi) - a.flat_values() * psi)) <= 1e-12


def test_quantize_zero_symbol():
    m = _model("zd", {"d": 1}, 8)
    z = Symbol(m, np.zeros((8, 8, 1, 1), dtype=complex))
    psi = _random_unit(np.random.default_rng(3), m.size)
    assert np.max(np.abs(quantize(z).apply(psi))) == 0.0


def test_quantize_shape_mismatch():
    m = _model("zd", {"d": 1}, 8)
    with pytest.raises(ValueError):
        quantize(Symbol(m, np.zeros((4, 4, 1, 1), dtype=complex)))


def test_hs_norm_identity_random_symbols():
    """Symbol reduction: |Op(F)|_HS^2 = N^-d * sum of |coefficients|^2."""
    rng = np.random.default_rng(7)
    for name, params, N in [("zd", {"d": 1}, 6), ("ladder", {}, 5),
                            ("honeycomb", {}, 3)]:
        m = _model(name, params, N)
        nc, nu = m.n_cells, m.nu
        C = rng.standard_normal((nc, nc, nu, nu)) + \
            1j * rng.standard_normal((nc, nc, nu, nu))
        sym = Symbol(m, C)
        dense = quantize(sym).dense()
        lhs = hs_norm(dense) ** 2
        rhs = sym.hs_norm_sq()
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


# ---------------------------------------------------------------------------
# Egorov machinery
# ---------------------------------------------------------------------------

EGOROV_CASES = [
    ("zd", {"d": 1}, 10), ("zd", {"d": 2}, 5), ("ladder", {}, 8),
    ("honeycomb", {}, 4), ("decorated-z-triangle", {}, 6),
    ("z-box-p2", {}, 8), ("z-tensor-c3p4", {}, 4),
    ("z-periodic-potential", {"Q": [0.6, -0.3]}, 9),
    ("triangular", {}, 5), ("kings", {}, 5), ("z-range-k", {"k": 3}, 10),
    ("z-even-odd", {}, 10),
    ("z2-block-potential", {"Q": [0.2, -0.1, 0.4, -0.3]}, 4),
]


@pytest.mark.parametrize("name,params,N", EGOROV_CASES)
def test_egorov_identity(name, params, N):
    """Time-averaged conjugation equals Op(F_T) at machine precision."""
    m = _model(name, params, N)
    rng = np.random.default_rng(sum(ord(c) for c in name))
    a = Observable.scalar(m, rng.uniform(-1, 1, m.size))
    for T in (1.0, 10.0, 100.0):
        ft, _b, _abar = egorov_symbols(m, a, T)
        dev = hs_norm(exact_time_average(m, a, T) - quantize(ft).dense())
        assert dev <= 1e-9


def test_constant_observable_symbols_collapse():
    m = _model("ladder", {}, 6)
    a = Observable.constant(m, 0.7)
    for T in (1.0, 50.0):
        ft, b, abar = egorov_symbols(m, a, T)
        target = multiplication_symbol(m, a)
        assert np.max(np.abs(ft.coeffs - target.coeffs)) <= 1e-12
        assert np.max(np.abs(b.coeffs - target.coeffs)) <= 1e-12
        assert np.max(np.abs(abar.coeffs - target.coeffs)) <= 1e-12


def test_tail_decays_like_one_over_T():
    """|Op(F_T) - Op(b)| drops by ~1/2 per doubling and ~1/10 per decade."""
    m = _model("zd", {"d": 1}, 8)
    a = Observable.half_indicator(m)

    def tail(T):
        ft, b, _ = egorov_symbols(m, a, T)
        return hs_norm(quantize(ft).dense() - quantize(b).dense())

    for T in (100.0, 1000.0, 10000.0):
        assert tail(2 * T) <= 0.8 * tail(T)
    assert tail(1000.0) <= 0.2 * tail(100.0)


def test_abar_matches_weighted_average():
    m = _model("honeycomb", {}, 4)
    rng = np.random.default_rng(9)
    a = Observable.scalar(m, rng.uniform(-1, 1, m.size))
    _ft, _b, abar = egorov_symbols(m, a, 10.0)
    op = quantize(abar).dense()
    for _ in range(3):
        psi = _random_unit(rng, m.size)
        direct = np.vdot(psi, op @ psi)
        assert abs(direct - weighted_average(psi, a, m)) <= 1e-11


# ---------------------------------------------------------------------------
# weighted averages
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name,params,N", [
    ("zd", {"d": 1}, 16), ("zd", {"d": 2}, 8),
    ("triangular", {}, 8), ("kings", {}, 8),
])
def test_weighted_average_nu1_is_uniform(name, params, N):
    m = _model(name, params, N)
    rng = np.random.default_rng(4)
    a = Observable.scalar(m, rng.uniform(-1, 1, m.size))
    for _ in range(5):
        psi = _random_unit(rng, m.size)
        assert abs(weighted_average(psi, a, m) - a.mean()) <= 1e-12


def test_weighted_average_honeycomb_half_sum():
    m = _model("honeycomb", {}, 8)   # 3 does not divide 8: no Dirac momentum
    rng = np.random.default_rng(6)
    a = Observable.scalar(m, rng.uniform(-1, 1, m.size))
    avg = a.cell_averages()
    expected = (avg[0] + avg[1]) / 2
    for _ in range(5):
        psi = _random_unit(rng, m.size)
        assert abs(weighted_average(psi, a, m) - expected) <= 1e-10


def test_weighted_average_cylinder_w2():
    g = latqe.cartesian_product(build_preset("zd", {"d": 1}),
                                latqe.cycle_graph(4))
    N = 10
    m = FiniteGraphModel(g, N)
    rng = np.random.default_rng(8)
    a = Observable.scalar(m, rng.uniform(-1, 1, m.size))
    avg = a.cell_averages()
    w2 = np.array([0, 1, 0, -1]) / math.sqrt(2)
    phi = np.exp(2j * np.pi * 3 * np.arange(N) / N) / math.sqrt(N)
    psi = np.kron(phi, w2)
    expected = (avg[1] + avg[3]) / 2
    assert abs(weighted_average(psi, a, m) - expected) <= 1e-12


# ---------------------------------------------------------------------------
# variance and sup functionals
# ---------------------------------------------------------------------------


def test_variance_constant_observable_is_zero():
    m = _model("honeycomb", {}, 6)
    basis = fiber_eigenbasis(m, mode="random_mix", seed=2)
    a = Observable.constant(m, 1.0)
    for ref in ("uniform", "opn_abar"):
        assert qe_variance(basis, a, reference=ref).variance <= 1e-28


def test_variance_rejects_unbounded_observable():
    m = _model("zd", {"d": 1}, 8)
    basis = fiber_eigenbasis(m, mode="fiber")
    a = Observable.scalar(m, np.full(m.size, 2.0))
    with pytest.raises(ValueError, match="<= 1"):
        qe_variance(basis, a)


def test_variance_window():
    m = _model("zd", {"d": 1}, 16)
    basis = fiber_eigenbasis(m, mode="real_mixed")
    a = Observable.alternating_block(m)
    full = qe_variance(basis, a)
    windowed = qe_variance(basis, a, window=(-0.5, 0.5))
    assert windowed.n_used < len(basis)
    assert windowed.n_used > 0
    # the QUE pair lives at eigenvalue 0, inside the window
    assert windowed.sup_gap == pytest.approx(0.5, abs=1e-12)
    assert windowed.variance >= full.variance
    with pytest.raises(ValueError, match="window"):
        qe_variance(basis, a, window=(90.0, 99.0))


def test_variance_matches_dense_oracle():
    m = _model("zd", {"d": 1}, 16)
    a = Observable.half_indicator(m)
    v_fiber = qe_variance(fiber_eigenbasis(m, mode="fiber"), a).variance
    v_dense = qe_variance(dense_eigenbasis(m), a).variance
    assert abs(v_fiber - v_dense) <= 1e-10


def test_variance_decay_with_floor():
    """V(2N) <= 0.75 V(N) for the half indicator, up to float-noise zeros."""
    for name, params, sizes in [("zd", {"d": 1}, (16, 32, 64)),
                                ("zd", {"d": 2}, (8, 16))]:
        vs = []
        for N in sizes:
            m = _model(name, params, N)
            basis = fiber_eigenbasis(m, mode="random_mix", seed=13)
            vs.append(qe_variance(basis, Observable.half_indicator(m)).variance)
        for a, b in zip(vs, vs[1:]):
            assert b <= max(0.75 * a, NOISE_FLOOR)


def test_variance_step3_bound():
    """V(opn_abar) <= 2 sup_m(|A_m| / N^d) * mean |a|^2, any eigenbasis."""
    for name, params, N in [("zd", {"d": 1}, 16), ("ladder", {}, 16),
                            ("honeycomb", {}, 8), ("zd", {"d": 1}, 32),
                            ("ladder", {}, 8), ("honeycomb", {}, 16)]:
        g = build_preset(name, params)
        m = FiniteGraphModel(g, N)
        a = Observable.half_indicator(m)
        rep_counts = coincidence_report(g, N)
        bound = 2.0 * rep_counts.sup_total_fraction * \
            float(np.mean(np.abs(a.cell_values) ** 2))
        for mode, seed in (("random_mix", 21), ("real_mixed", None)):
            basis = fiber_eigenbasis(m, mode=mode, seed=seed)
            rep = qe_variance(basis, a, reference="opn_abar")
            assert rep.variance <= bound + 1e-12, (name, N, mode)


def test_que_sup_examples():
    m = _model("zd", {"d": 1}, 32)
    basis = fiber_eigenbasis(m, mode="real_mixed")
    assert que_sup(basis, Observable.constant(m, 0.9)) <= 1e-12
    assert que_sup(basis, Observable.alternating_block(m)) == \
        pytest.approx(0.5, abs=1e-10)


# ---------------------------------------------------------------------------
# band-matrix observables
# ---------------------------------------------------------------------------


def test_matrix_average_hamiltonian_band():
    m = _model("zd", {"d": 1}, 16)
    K = Observable.band_matrix(m, {(1,): 1.0, (-1,): 1.0}, tag="hop")
    rep = matrix_average(fiber_eigenbasis(m, mode="fiber"), K)
    assert rep.sup_gap <= 1e-10


def test_matrix_average_diagonal_reduces_to_scalar():
    m = _model("zd", {"d": 2}, 6)
    rng = np.random.default_rng(12)
    vals = rng.uniform(-1, 1, m.size)
    a = Observable.scalar(m, vals)
    K = Observable.band_matrix(m, {(0, 0): vals})
    basis = fiber_eigenbasis(m, mode="random_mix", seed=5)
    r_scalar = qe_variance(basis, a, reference="uniform")
    r_matrix = matrix_average(basis, K)
    assert abs(r_scalar.variance - r_matrix.variance) <= 1e-12
    assert np.max(np.abs(r_scalar.gaps - r_matrix.gaps)) <= 1e-12


def test_matrix_average_rejects_nu_gt_1_and_wide_bands():
    m2 = _model("ladder", {}, 8)
    basis = fiber_eigenbasis(_model("zd", {"d": 1}, 8), mode="fiber")
    K = Observable.band_matrix(_model("zd", {"d": 1}, 8),
                               {(3,): 1.0, (-3,): 1.0})
    with pytest.raises(ValueError, match="N/4"):
        matrix_average(basis, K)
    with pytest.raises(ValueError):
        matrix_average(fiber_eigenbasis(m2, mode="fiber"), K)
