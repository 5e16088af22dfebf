"""Phase-space quantization and finite-size quantum ergodicity functionals.

Symbols live on momenta x frequency shifts x cell pairs and are stored as
Fourier stacks ``C[r, m, n, l]`` so that

    F(k, r; v_n, v_l) = sum_m C[r, m, n, l] e_m(k),
    e_m(k) = exp(2i pi m.k / N) / N^{d/2}.

The quantization maps a symbol to an operator on the torus model whose
action in Floquet coordinates is a frequency convolution; multiplication
operators are the diagonal-symbol special case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .finite import Eigenbasis, FiniteGraphModel
from .floquet import (eigensystems_on_grid, floquet_transform,
                      inverse_floquet_transform, momentum_grid)


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------


@dataclass
class Observable:
    """A scalar vertex function or a band-matrix observable on Gamma_N.

    Scalar kind stores values on the cell grid, shape ``(N^d, nu)``; the
    Fourier data a_m(v_q) is computed on demand.  Band-matrix kind (nu=1
    models only) stores one diagonal ``K^tau(n) = K(n, n+tau)`` per shift
    tau with ``|tau|_inf <= width``.
    """

    model: FiniteGraphModel
    kind: str                      # "scalar" | "band_matrix"
    tag: str = ""
    cell_values: np.ndarray | None = None
    taus: dict | None = None
    width: int = 0
    _fourier: np.ndarray | None = field(default=None, repr=False)

    # -- constructors ------------------------------------------------------

    @classmethod
    def scalar(cls, model, values, tag="scalar"):
        arr = np.asarray(values)
        if arr.size != model.size:
            raise ValueError("observable must assign a value to every vertex")
        return cls(model, "scalar", tag,
                   cell_values=arr.reshape(model.n_cells, model.nu).astype(complex))

    @classmethod
    def constant(cls, model, c=1.0):
        return cls.scalar(model, np.full(model.size, c), tag=f"constant({c})")

    @classmethod
    def half_indicator(cls, model, axis=0):
        """Indicator of the half-torus with coordinate ``axis`` below N/2."""
        k = momentum_grid(model.N, model.dim)
        cell = (k[:, axis] < model.N / 2).astype(float)
        vals = np.repeat(cell, model.nu)
        return cls.scalar(model, vals, tag="half")

    @classmethod
    def alternating_block(cls, model, axis=0):
        """1 on blocks at even cells, 0 on odd; constant within each block."""
        k = momentum_grid(model.N, model.dim)
        cell = (k[:, axis] % 2 == 0).astype(float)
        vals = np.repeat(cell, model.nu)
        return cls.scalar(model, vals, tag="alternating")

    @classmethod
    def cosine(cls, model, freq):
        """a(k) = cos(2 pi f.k / N), constant on each cell."""
        f = np.atleast_1d(np.asarray(freq, dtype=float))
        if f.size == 1 and model.dim > 1:
            f = np.concatenate([f, np.zeros(model.dim - 1)])
        k = momentum_grid(model.N, model.dim)
        cell = np.cos(2.0 * np.pi * (k @ f) / model.N)
        vals = np.repeat(cell, model.nu)
        return cls.scalar(model, vals, tag=f"cosine({','.join(str(x) for x in f)})")

    @classmethod
    def band_matrix(cls, model, taus, tag="band"):
        """Band observable from ``{tau: K^tau}``; entries may be scalars.

        Requires nu = 1 and Hermiticity: K^{-tau}(n) = conj(K^tau(n - tau)).
        """
        if model.nu != 1:
            raise ValueError("band-matrix observables are defined for nu = 1")
        store: dict = {}
        width = 0
        for tau, val in taus.items():
            tau = tuple(int(x) for x in np.atleast_1d(tau))
            arr = np.asarray(val, dtype=complex)
            if arr.ndim == 0:
                arr = np.full(model.n_cells, complex(val))
            store[tau] = arr.reshape(model.n_cells)
            width = max(width, max((abs(x) for x in tau), default=0))
        for tau, arr in store.items():
            ntau = tuple(-x for x in tau)
            if ntau not in store:
                raise ValueError(f"band observable misses shift {ntau}")
            rolled = _roll_flat(store[ntau], tau, model)
            if not np.allclose(arr, rolled.conj(), atol=1e-12):
                raise ValueError("band observable is not Hermitian: need "
                                 "K^tau(n) = conj(K^-tau(n + tau))")
        return cls(model, "band_matrix", tag, taus=store, width=width)

    # -- scalar helpers ------------------------------------------------------

    @property
    def sup_norm(self) -> float:
        if self.kind != "scalar":
            raise ValueError("sup_norm applies to scalar observables")
        return float(np.max(np.abs(self.cell_values)))

    def flat_values(self) -> np.ndarray:
        return self.cell_values.reshape(self.model.size)

    def fourier(self) -> np.ndarray:
        """a_m(v_q) = N^{-d/2} sum_n exp(-2i pi m.n / N) a(n, q)."""
        if self._fourier is None:
            model = self.model
            grid = self.cell_values.reshape(model.shape)
            f = np.fft.fftn(grid, axes=tuple(range(model.dim)))
            self._fourier = f.reshape(model.n_cells, model.nu) / \
                model.N ** (model.dim / 2.0)
        return self._fourier

    def cell_averages(self) -> np.ndarray:
        """<a(. + v_q)> per cell vertex, compensated summation."""
        out = np.empty(self.model.nu, dtype=complex)
        for q in range(self.model.nu):
            col = self.cell_values[:, q]
            out[q] = complex(math.fsum(col.real), math.fsum(col.imag))
        return out / self.model.n_cells

    def mean(self) -> complex:
        return complex(np.sum(self.cell_averages()) / self.model.nu)

    # -- band-matrix helpers -------------------------------------------------

    def apply_band(self, psi: np.ndarray) -> np.ndarray:
        """(K psi)(n) = sum_tau K^tau(n) psi(n + tau); psi flat or stacked."""
        model = self.model
        extra = psi.shape[1:] if psi.ndim > 1 else ()
        grid = psi.reshape((model.N,) * model.dim + extra)
        out = np.zeros(grid.shape, dtype=complex)
        axes = tuple(range(model.dim))
        for tau, arr in self.taus.items():
            coeff = arr.reshape((model.N,) * model.dim + (1,) * len(extra))
            out += coeff * np.roll(grid, shift=tuple(-x for x in tau), axis=axes)
        return out.reshape(psi.shape)

    def tau_averages(self) -> dict:
        return {tau: complex(np.mean(arr)) for tau, arr in self.taus.items()}


def _roll_flat(arr, shift, model):
    grid = arr.reshape((model.N,) * model.dim)
    return np.roll(grid, shift=tuple(-x for x in shift),
                   axis=tuple(range(model.dim))).reshape(model.n_cells)


# ---------------------------------------------------------------------------
# symbols and quantization
# ---------------------------------------------------------------------------


@dataclass
class Symbol:
    """Fourier-stack symbol C[r, m, n, l]; see the module docstring."""

    model: FiniteGraphModel
    coeffs: np.ndarray            # (N^d, N^d, nu, nu) complex
    tag: str = ""

    def hs_norm_sq(self) -> float:
        """HS norm^2 of the quantized operator via the symbol reduction."""
        return float(np.sum(np.abs(self.coeffs) ** 2) / self.model.n_cells)


class QuantizedOperator:
    """Op_N(F): in Floquet coordinates a frequency convolution."""

    def __init__(self, symbol: Symbol):
        self.symbol = symbol
        self.model = symbol.model

    def apply(self, psi: np.ndarray) -> np.ndarray:
        model = self.model
        g = floquet_transform(psi, model)       # (N^d, nu[, b])
        nc = model.n_cells
        C = self.symbol.coeffs
        stacked = g.ndim == 3
        h = np.zeros_like(g)
        # h_j(n) = N^{-d/2} sum_r sum_l C[r, j - r, n, l] g_r(l)
        shifts = _shift_table(model)
        for r in range(nc):
            rows = shifts[r]                    # flat index of j - r per j
            block = C[r][rows]                  # (N^d, nu, nu), indexed by j
            if stacked:
                h += np.einsum("jnl,lb->jnb", block, g[r])
            else:
                h += block @ g[r]
        h /= model.n_cells ** 0.5
        return inverse_floquet_transform(h, model)

    def dense(self) -> np.ndarray:
        size = self.model.size
        eye = np.eye(size, dtype=complex)
        return self.apply(eye)


_SHIFT_CACHE: dict = {}


def _shift_table(model) -> np.ndarray:
    """shift[r, j] = flat index of (j - r) mod N on the momentum grid."""
    key = (model.N, model.dim)
    if key not in _SHIFT_CACHE:
        grid = momentum_grid(model.N, model.dim)
        nc = model.n_cells
        table = np.empty((nc, nc), dtype=np.intp)
        for r in range(nc):
            diff = (grid - grid[r]) % model.N
            table[r] = np.ravel_multi_index(diff.T, (model.N,) * model.dim)
        _SHIFT_CACHE[key] = table
    return _SHIFT_CACHE[key]


def quantize(symbol: Symbol) -> QuantizedOperator:
    if symbol.coeffs.shape != (symbol.model.n_cells, symbol.model.n_cells,
                               symbol.model.nu, symbol.model.nu):
        raise ValueError("symbol coefficient stack has the wrong shape")
    return QuantizedOperator(symbol)


def multiplication_symbol(model: FiniteGraphModel, a: Observable) -> Symbol:
    """Symbol of pointwise multiplication by a scalar observable."""
    am = a.fourier()                            # (N^d, nu)
    nc, nu = model.n_cells, model.nu
    C = np.zeros((nc, nc, nu, nu), dtype=complex)
    diag = np.arange(nu)
    C[:, :, diag, diag] = am[None, :, :]
    return Symbol(model, C, tag=f"mult[{a.tag}]")


# ---------------------------------------------------------------------------
# Egorov symbols
# ---------------------------------------------------------------------------


def _phi(x: np.ndarray) -> np.ndarray:
    """(e^{ix} - 1) / (ix) with the removable singularity filled in."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < 1e-8
    xs = x[small]
    out[small] = 1.0 + 1j * xs / 2.0 - xs ** 2 / 6.0
    xl = x[~small]
    out[~small] = (np.exp(1j * xl) - 1.0) / (1j * xl)
    return out


def default_coincide_tol(model: FiniteGraphModel,
                         systems=None) -> float:
    """1e-8 times the spectral diameter of the band table."""
    if systems is None:
        systems = eigensystems_on_grid(model.graph, model.N)
    vals = np.concatenate([s.eigenvalues for s in systems])
    diam = float(vals.max() - vals.min())
    return 1e-8 * diam if diam > 0 else 1e-8


def egorov_symbols(model: FiniteGraphModel, a: Observable, T: float,
                   coincide_tol: float | None = None,
                   degen_tol: float | None = None):
    """The time-averaged symbol F_T, its T -> infinity limit b, and a-bar.

    F_T carries the analytic time-average factor phi(T dE) on every band
    pair; b keeps only pairs whose band difference is a coincidence at the
    declared tolerance; a-bar is the m = 0 part of b, built from grouped
    projectors at equal momentum.
    """
    if a.kind != "scalar":
        raise ValueError("egorov symbols are defined for scalar observables")
    systems = eigensystems_on_grid(model.graph, model.N, degen_tol)
    tol = coincide_tol if coincide_tol is not None else \
        default_coincide_tol(model, systems)
    am = a.fourier()                                  # (N^d, nu)
    nc, nu = model.n_cells, model.nu
    C_T = np.zeros((nc, nc, nu, nu), dtype=complex)
    C_b = np.zeros((nc, nc, nu, nu), dtype=complex)
    C_bar = np.zeros((nc, nc, nu, nu), dtype=complex)
    grid = momentum_grid(model.N, model.dim)
    for r in range(nc):
        sys_r = systems[r]
        Ew = sys_r.group_values()
        Pw = sys_r.projectors
        for m in range(nc):
            rm = int(np.ravel_multi_index(
                tuple((grid[r] + grid[m]) % model.N), (model.N,) * model.dim))
            sys_rm = systems[rm]
            Es = sys_rm.group_values()
            Ps = sys_rm.projectors
            A = am[m]                                   # (nu,) diag entries
            mid = Ps * A[None, None, :]                 # P_s @ diag(a_m)
            gaps = Es[:, None] - Ew[None, :]
            fac_T = _phi(T * gaps)
            keep = np.abs(gaps) <= tol
            # sum over group pairs (S, W)
            term_T = np.einsum("sw,snq,wql->nl", fac_T, mid, Pw)
            C_T[r, m] = term_T
            if keep.any():
                C_b[r, m] = np.einsum("sw,snq,wql->nl",
                                      keep.astype(float), mid, Pw)
        # a-bar: m = 0, equal-group pairs only
        mid0 = sys_r.projectors * am[0][None, None, :]
        C_bar[r, 0] = np.einsum("snq,sql->nl", mid0, sys_r.projectors)
    ft = Symbol(model, C_T, tag=f"F_T(T={T},{a.tag})")
    b = Symbol(model, C_b, tag=f"b({a.tag})")
    abar = Symbol(model, C_bar, tag=f"abar({a.tag})")
    return ft, b, abar


def exact_time_average(model: FiniteGraphModel, a: Observable,
                       T: float) -> np.ndarray:
    """Dense matrix of (1/T) int_0^T e^{itH} a e^{-itH} dt.

    Evaluated analytically in a dense eigenbasis: entry (u, v) of the
    average is a_{uv} phi(T (lambda_u - lambda_v)).  Serves as the
    independent oracle for the Egorov identity.
    """
    from .finite import dense_eigenbasis

    basis = dense_eigenbasis(model)
    V = basis.vectors
    lam = basis.eigenvalues
    a_mat = V.conj().T @ (a.flat_values()[:, None] * V)
    factor = _phi(T * (lam[:, None] - lam[None, :]))
    return V @ (a_mat * factor) @ V.conj().T


def hs_norm(mat: np.ndarray) -> float:
    return float(np.linalg.norm(mat, "fro"))


# ---------------------------------------------------------------------------
# weighted averages and variance functionals
# ---------------------------------------------------------------------------


def weighted_average(psi: np.ndarray, a: Observable, model: FiniteGraphModel,
                     systems=None, degen_tol: float | None = None) -> complex:
    """<psi, Op(a-bar) psi>: the basis-dependent reference average.

    Computes sum_q <a(.+v_q)> sum_{r,s} |[P_{E_s}(r/N) (U psi)_r](v_q)|^2
    with the momentum sum accumulated in extended precision.
    """
    if a.kind != "scalar":
        raise ValueError("weighted_average takes a scalar observable")
    if systems is None:
        systems = eigensystems_on_grid(model.graph, model.N, degen_tol)
    g = floquet_transform(np.asarray(psi, dtype=complex), model)
    weights = np.zeros((model.n_cells, model.nu), dtype=np.longdouble)
    for r, sys_r in enumerate(systems):
        proj = np.einsum("snl,l->sn", sys_r.projectors, g[r])
        weights[r] = np.sum(np.abs(proj) ** 2, axis=0)
    per_q = weights.sum(axis=0, dtype=np.longdouble)
    avgs = a.cell_averages()
    total = complex(0.0)
    for q in range(model.nu):
        total += complex(avgs[q]) * float(per_q[q])
    return total


def _batch_weighted_averages(basis: Eigenbasis, a: Observable,
                             systems) -> np.ndarray:
    model = basis.model
    g = floquet_transform(basis.vectors, model)        # (N^d, nu, n_u)
    acc = np.zeros((model.nu, len(basis)), dtype=np.longdouble)
    for r, sys_r in enumerate(systems):
        proj = np.einsum("snl,lu->snu", sys_r.projectors, g[r])
        acc += np.sum(np.abs(proj) ** 2, axis=0)
    avgs = a.cell_averages()
    return np.asarray(avgs @ acc.astype(complex))


def _diagonal_expectations(basis: Eigenbasis, a: Observable) -> np.ndarray:
    """<psi_u, a psi_u> for every basis column, extended-precision sums."""
    vals = a.flat_values()
    dens = np.abs(basis.vectors) ** 2
    re = (vals.real[:, None] * dens).sum(axis=0, dtype=np.longdouble)
    if np.any(vals.imag):
        im = (vals.imag[:, None] * dens).sum(axis=0, dtype=np.longdouble)
        return np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float)
    return np.asarray(re, dtype=float) + 0j


@dataclass
class VarianceReport:
    """Per-eigenvector gaps and their Cesaro mean square."""

    basis_tag: str
    observable_tag: str
    reference: str
    gaps: np.ndarray
    eigenvalues: np.ndarray
    window: tuple[float, float] | None = None
    n_used: int = 0

    @property
    def variance(self) -> float:
        return self._variance

    def __post_init__(self):
        if self.window is not None:
            lo, hi = self.window
            mask = (self.eigenvalues >= lo) & (self.eigenvalues <= hi)
            if not mask.any():
                raise ValueError(f"energy window {self.window} contains no "
                                 "eigenvalues")
        else:
            mask = np.ones(len(self.gaps), dtype=bool)
        used = self.gaps[mask]
        self.n_used = int(mask.sum())
        self._variance = float(np.mean(np.abs(used) ** 2))
        self._sup = float(np.max(np.abs(used)))

    @property
    def sup_gap(self) -> float:
        return self._sup


def qe_variance(basis: Eigenbasis, a: Observable, reference: str = "uniform",
                window=None, degen_tol: float | None = None) -> VarianceReport:
    """Cesaro variance of <psi_u, a psi_u> around the chosen reference.

    ``reference`` is "uniform" for <a> or "opn_abar" for the
    grouped-projector weighted average.  A window restricts the
    average to eigenvalues inside the closed interval.
    """
    if a.kind != "scalar":
        raise ValueError("qe_variance takes a scalar observable")
    if a.sup_norm > 1.0 + 1e-12:
        raise ValueError("variance claims require |a| <= 1")
    diag = _diagonal_expectations(basis, a)
    if reference == "uniform":
        ref = np.full(len(basis), a.mean(), dtype=complex)
    elif reference == "opn_abar":
        systems = eigensystems_on_grid(basis.model.graph, basis.model.N,
                                       degen_tol)
        ref = _batch_weighted_averages(basis, a, systems)
    else:
        raise ValueError(f"unknown reference {reference!r}")
    gaps = diag - ref
    return VarianceReport(basis.tag, a.tag, reference, gaps,
                          basis.eigenvalues, window=window)


def que_sup(basis: Eigenbasis, a: Observable) -> float:
    """sup_u |<psi_u, a psi_u> - <a>|: the quantum unique ergodicity gap."""
    report = qe_variance(basis, a, reference="uniform")
    return report.sup_gap


def matrix_average(basis: Eigenbasis, K: Observable) -> VarianceReport:
    """Band-matrix variance around <K>_psi (nu = 1 only).

    <K>_psi = sum_tau <K^tau> <psi, psi(. + tau)>; the variance averages
    |<psi_u, K psi_u> - <K>_{psi_u}|^2 over the basis.
    """
    if K.kind != "band_matrix":
        raise ValueError("matrix_average takes a band-matrix observable")
    model = basis.model
    if model.nu != 1:
        raise ValueError("band-matrix averages are defined for nu = 1 models")
    if K.width > model.N / 4:
        raise ValueError("band width must satisfy R <= N/4")
    V = basis.vectors
    KV = K.apply_band(V)
    diag = np.einsum("xu,xu->u", V.conj(), KV)
    ref = np.zeros(len(basis), dtype=complex)
    grid_shape = (model.N,) * model.dim
    Vg = V.reshape(grid_shape + (len(basis),))
    axes = tuple(range(model.dim))
    for tau, mean_val in K.tau_averages().items():
        shifted = np.roll(Vg, shift=tuple(-x for x in tau), axis=axes)
        overlap = np.einsum("xu,xu->u", Vg.conj().reshape(-1, len(basis)),
                            shifted.reshape(-1, len(basis)))
        ref += mean_val * overlap
    gaps = diag - ref
    return VarianceReport(basis.tag, K.tag, "matrix", gaps, basis.eigenvalues)
