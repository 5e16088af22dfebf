"""Finite torus models: H_N with periodic wrap, eigenbases, Bloch functions.

Vertices of the size-N model are indexed as ``flat = ravel(k) * nu + n``
with ``k`` a C-ordered cell multi-index in {0..N-1}^d and ``n`` the cell
vertex, so a flat vector reshapes directly to ``(N,)*d + (nu,)``.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .floquet import (CapExceededError, default_degen_tol,
                      fiber_stack, momentum_grid, theta_grid)
from .lattice import PeriodicGraph

DENSE_CAP = 4000
FIBER_CAP = 20000


@dataclass(frozen=True)
class FiniteGraphModel:
    """A periodic graph wrapped on the torus (Z/N)^d."""

    graph: PeriodicGraph
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("side length N must be >= 1")

    @property
    def dim(self) -> int:
        return self.graph.dim

    @property
    def nu(self) -> int:
        return self.graph.nu

    @property
    def n_cells(self) -> int:
        return self.N ** self.dim

    @property
    def size(self) -> int:
        return self.nu * self.n_cells

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.dim + (self.nu,)

    def to_grid(self, psi: np.ndarray) -> np.ndarray:
        extra = psi.shape[1:] if psi.ndim > 1 else ()
        return psi.reshape(self.shape + extra)

    def flat_index(self, k, n: int) -> int:
        k = tuple(int(x) % self.N for x in np.atleast_1d(k))
        return int(np.ravel_multi_index(k, (self.N,) * self.dim)) * self.nu + n


class FiniteOperator:
    """H_N as a linear action, with an optional dense matrix."""

    def __init__(self, model: FiniteGraphModel):
        self.model = model
        self._dense: np.ndarray | None = None

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Template action with offsets wrapped mod N; preserves dtype class.

        Works on a single flat vector or a stack of columns ``(size, m)``.
        Integer input stays integer when the potential is integral, which
        supports exact checks of localized eigenvectors.
        """
        model = self.model
        extra = psi.shape[1:] if psi.ndim > 1 else ()
        grid = psi.reshape((model.N,) * model.dim + (model.nu,) + extra)
        pot = np.asarray(model.graph.potential)
        if np.issubdtype(grid.dtype, np.integer) and np.all(pot == np.round(pot)):
            pot = pot.astype(grid.dtype)
        pshape = (1,) * model.dim + (model.nu,) + (1,) * len(extra)
        out = grid * pot.reshape(pshape)
        axes = tuple(range(model.dim))
        cell_axis = model.dim
        for (n, l, o), mult in model.graph.templates.items():
            src = np.take(grid, l, axis=cell_axis)
            shifted = np.roll(src, shift=tuple(-x for x in o), axis=axes)
            sel = (slice(None),) * model.dim + (n,)
            out[sel] += mult * shifted
        return out.reshape(psi.shape)

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self._dense is not None:
            return self._dense
        size = self.model.size
        if size > cap:
            raise CapExceededError(f"dense matrix of size {size} exceeds cap {cap}")
        h = np.zeros((size, size))
        model = self.model
        cells = momentum_grid(model.N, model.dim)          # (N^d, d)
        base = np.arange(model.n_cells) * model.nu
        for (n, l, o), mult in model.graph.templates.items():
            target_cells = (cells + np.asarray(o)) % model.N
            target = np.ravel_multi_index(target_cells.T, (model.N,) * model.dim)
            h[base + n, target * model.nu + l] += mult
        h[np.arange(size), np.arange(size)] += np.tile(
            np.asarray(model.graph.potential), model.n_cells)
        self._dense = h
        return h


def hamiltonian(model: FiniteGraphModel, cap: int = FIBER_CAP) -> FiniteOperator:
    if model.size > cap:
        raise CapExceededError(f"model size {model.size} exceeds cap {cap}")
    return FiniteOperator(model)


# ---------------------------------------------------------------------------
# eigenbases
# ---------------------------------------------------------------------------


@dataclass
class Eigenbasis:
    """An orthonormal eigenbasis of H_N with per-vector provenance.

    ``vectors`` holds unit column vectors; ``provenance[u]`` records how
    column u was produced (fiber momenta, mixing pair, or "dense").
    """

    model: FiniteGraphModel
    vectors: np.ndarray
    eigenvalues: np.ndarray
    provenance: list
    tag: str
    seed: int | None = None

    def __len__(self) -> int:
        return self.vectors.shape[1]

    def gram_defect(self) -> float:
        g = self.vectors.conj().T @ self.vectors
        return float(np.max(np.abs(g - np.eye(len(self)))))

    def max_residual(self) -> float:
        op = FiniteOperator(self.model)
        resid = op.apply(self.vectors) - self.vectors * self.eigenvalues
        norms = np.sqrt(np.sum(np.abs(resid) ** 2, axis=0))
        return float(np.max(norms / (1.0 + np.abs(self.eigenvalues))))


def _plane_wave_matrix(model: FiniteGraphModel) -> np.ndarray:
    """E[k_flat, r_flat] = exp(2i pi k.r / N) / N^{d/2}."""
    k = momentum_grid(model.N, model.dim)
    phase = (k @ k.T) * (2.0 * np.pi / model.N)
    return np.exp(1j * phase) / model.N ** (model.dim / 2.0)


def _fiber_data(model: FiniteGraphModel):
    stack = fiber_stack(model.graph, theta_grid(model.N, model.dim))
    evals, evecs = np.linalg.eigh(stack)       # (N^d, nu), (N^d, nu, nu)
    return evals, evecs


def _assemble_fiber_basis(model, evals, evecs):
    """Columns psi_{r,s}(k,n) = e_r(k) f_{r,s}(n), ordered r-major."""
    E = _plane_wave_matrix(model)              # (N^d, N^d) over (k, r)
    # basis[(k,n),(r,s)] = E[k,r] * evecs[r,n,s]
    mat = np.einsum("kr,rns->knrs", E, evecs).reshape(model.size, model.size)
    vals = evals.reshape(-1)
    prov = [("fiber", tuple(rm), s)
            for rm in momentum_grid(model.N, model.dim)
            for s in range(model.nu)]
    return mat, vals, prov


def _reversal_partner(r: tuple, N: int) -> tuple:
    return tuple(reversed(r))


def _conjugate_partner(r: tuple, N: int) -> tuple:
    return tuple((N - x) % N for x in r)


def fiber_eigenbasis(model: FiniteGraphModel, mode: str = "fiber",
                     seed: int | None = None,
                     degen_tol: float | None = None) -> Eigenbasis:
    """Eigenbasis built from the Floquet fibers.

    Modes:

    * ``fiber`` -- plane waves times fiber eigenvectors.
    * ``real_mixed`` -- momenta are paired and mixed in place: a momentum
      is combined with its coordinate reversal when the bands agree there
      (the swap family on Z^2), otherwise with N - r, which yields real
      cos/sin vectors; self-paired momenta are left untouched.
    * ``random_mix`` -- a seeded Haar unitary is applied inside every
      global degeneracy class of the fiber basis.
    """
    if model.size > FIBER_CAP:
        raise CapExceededError(f"model size {model.size} exceeds cap {FIBER_CAP}")
    evals, evecs = _fiber_data(model)
    mat, vals, prov = _assemble_fiber_basis(model, evals, evecs)
    if mode == "fiber":
        return Eigenbasis(model, mat, vals, prov, "fiber")
    if mode == "real_mixed":
        return _real_mixed(model, evals, evecs, mat, vals, degen_tol)
    if mode == "random_mix":
        if seed is None:
            raise ValueError("random_mix requires a seed")
        return _random_mix(model, mat, vals, prov, seed, degen_tol)
    raise ValueError(f"unknown eigenbasis mode {mode!r}")


def _real_mixed(model, evals, evecs, mat, vals, degen_tol):
    N, nu = model.N, model.nu
    grid = momentum_grid(N, model.dim)
    flat_of = {tuple(r): i for i, r in enumerate(grid)}
    tol = degen_tol if degen_tol is not None else default_degen_tol(evals)
    out = mat.copy()
    prov: list = [None] * model.size
    processed = np.zeros(len(grid), dtype=bool)
    sqrt2 = np.sqrt(2.0)
    for i, r in enumerate(map(tuple, grid)):
        if processed[i]:
            continue
        rv = _reversal_partner(r, N)
        j = flat_of[rv]
        if j != i and not processed[j] and \
                np.all(np.abs(evals[i] - evals[j]) <= tol):
            for s in range(nu):
                a, b = i * nu + s, j * nu + s
                va, vb = mat[:, a], mat[:, b]
                out[:, a] = (va + vb) / sqrt2
                out[:, b] = (va - vb) / sqrt2
                prov[a] = ("swap+", r, rv, s)
                prov[b] = ("swap-", r, rv, s)
            processed[i] = processed[j] = True
            continue
        rc = _conjugate_partner(r, N)
        j = flat_of[rc]
        if j == i:
            for s in range(nu):
                prov[i * nu + s] = ("fiber", r, s)
            processed[i] = True
            continue
        # conjugate pair: real cos/sin vectors built from the fiber data at r
        for s in range(nu):
            a, b = i * nu + s, j * nu + s
            va = mat[:, a]
            out[:, a] = sqrt2 * va.real
            out[:, b] = sqrt2 * va.imag
            vals[b] = vals[a]
            prov[a] = ("cos", r, s)
            prov[b] = ("sin", r, s)
        processed[i] = processed[j] = True
    return Eigenbasis(model, out, vals, prov, "real_mixed")


def _haar_unitary(rng: np.random.Generator, k: int) -> np.ndarray:
    z = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _global_groups(vals: np.ndarray, tol_scale: float = 1e-8):
    order = np.argsort(vals, kind="stable")
    groups = [[order[0]]]
    for idx in order[1:]:
        anchor = groups[-1][0]
        if vals[idx] - vals[anchor] <= tol_scale * (1.0 + abs(vals[anchor])):
            groups[-1].append(idx)
        else:
            groups.append([idx])
    return groups


def _random_mix(model, mat, vals, prov, seed, degen_tol):
    out = mat.copy()
    new_prov = list(prov)
    groups = _global_groups(vals)
    for gi, idx in enumerate(groups):
        if len(idx) == 1:
            continue
        rng = np.random.default_rng([int(seed), gi])
        u = _haar_unitary(rng, len(idx))
        cols = np.array(idx)
        out[:, cols] = out[:, cols] @ u
        for c in cols:
            new_prov[c] = ("mixed", gi, len(idx))
    return Eigenbasis(model, out, vals.copy(), new_prov, f"random_mix({seed})",
                      seed=seed)


def dense_eigenbasis(model: FiniteGraphModel, cap: int = DENSE_CAP) -> Eigenbasis:
    """Full dense Hermitian diagonalization; the spectrum oracle."""
    h = hamiltonian(model).dense(cap=cap)
    vals, vecs = np.linalg.eigh(h)
    prov = ["dense"] * model.size
    return Eigenbasis(model, vecs.astype(complex), vals, prov, "dense")


def embed_in_eigenbasis(model: FiniteGraphModel, given: np.ndarray,
                        eigenvalue: float, tol_scale: float = 1e-8) -> Eigenbasis:
    """Complete prescribed eigenvectors of one eigenvalue to a full basis.

    ``given`` holds orthonormal columns that must be eigenvectors of H_N
    with the stated eigenvalue; the rest of that eigenspace and all other
    eigenspaces come from a dense diagonalization.
    """
    op = FiniteOperator(model)
    resid = op.apply(given.astype(complex)) - eigenvalue * given
    worst = float(np.max(np.sqrt(np.sum(np.abs(resid) ** 2, axis=0))))
    if worst > 1e-8 * (1.0 + abs(eigenvalue)):
        raise ValueError("prescribed vectors are not eigenvectors at the "
                         f"stated eigenvalue (residual {worst:.2e})")
    basis = dense_eigenbasis(model)
    mask = np.abs(basis.eigenvalues - eigenvalue) <= \
        tol_scale * (1.0 + abs(eigenvalue))
    k = int(mask.sum())
    m = given.shape[1]
    if m > k:
        raise ValueError(f"eigenspace of {eigenvalue} has dimension {k} < {m}")
    space = basis.vectors[:, mask]
    # orthonormal completion of the prescribed vectors inside the eigenspace
    given = given.astype(complex)
    proj = space - given @ (given.conj().T @ space)
    u, sv, _vt = np.linalg.svd(proj, full_matrices=False)
    completion = u[:, : k - m]
    if m + completion.shape[1] != k or (k > m and sv[k - m - 1] < 1e-10):
        raise ValueError("prescribed vectors do not sit inside the eigenspace")
    new = basis.vectors.copy()
    new[:, mask] = np.concatenate([given, completion], axis=1)
    prov = list(basis.provenance)
    where = np.flatnonzero(mask)
    for rank, u in enumerate(where):
        prov[u] = ("localized", rank) if rank < m else ("completion", rank)
    return Eigenbasis(model, new, basis.eigenvalues.copy(), prov,
                      f"localized+dense({eigenvalue})")


# ---------------------------------------------------------------------------
# Bloch eigenfunctions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlochFunction:
    """An H_N eigenvector of the form e^{2i pi j.k/N} f(v_n), unit norm."""

    model: FiniteGraphModel
    momentum: tuple[int, ...]
    band: int
    eigenvalue: float
    cell_vector: np.ndarray
    vector: np.ndarray

    def residual(self) -> float:
        op = FiniteOperator(self.model)
        r = op.apply(self.vector) - self.eigenvalue * self.vector
        return float(np.linalg.norm(r))

    def modulus_defect(self) -> float:
        """Max deviation of |Psi| from its cell profile across cells."""
        grid = np.abs(self.model.to_grid(self.vector))
        target = np.abs(self.cell_vector) / self.model.n_cells ** 0.5
        return float(np.max(np.abs(grid - target)))


def bloch_eigenfunction(model: FiniteGraphModel, j, s: int) -> BlochFunction:
    """Bloch eigenvector at momentum index j for (1-based) band s."""
    j = tuple(int(x) % model.N for x in np.atleast_1d(j))
    if len(j) != model.dim:
        raise ValueError("momentum index has wrong dimension")
    if not (1 <= s <= model.nu):
        raise ValueError(f"band must lie in 1..{model.nu}")
    theta = np.asarray(j, dtype=float) / model.N
    m = fiber_stack(model.graph, theta[None, :])[0]
    evals, evecs = np.linalg.eigh(m)
    f = evecs[:, s - 1]
    k = momentum_grid(model.N, model.dim)
    phase = np.exp(2j * np.pi * (k @ np.asarray(j)) / model.N)
    vec = (phase[:, None] * f[None, :]).reshape(model.size)
    vec = vec / np.sqrt(model.n_cells)
    return BlochFunction(model, j, s, float(evals[s - 1]), f, vec)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def export_eigenbasis(basis: Eigenbasis, path, include_vectors: bool = False):
    """Write eigenvalues and provenance as CSV; vectors optionally appended.

    The full-vector dump is text CSV and grows as size^2; a warning is
    issued when it exceeds a million entries.
    """
    path = str(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "eigenvalue", "provenance"])
        for u in range(len(basis)):
            w.writerow([u, repr(float(basis.eigenvalues[u])),
                        json.dumps(basis.provenance[u], default=str)])
    if include_vectors:
        n = basis.vectors.size
        if n > 1_000_000:
            warnings.warn(f"dumping {n} vector entries; this will be large")
        vec_path = path.rsplit(".", 1)[0] + "_vectors.csv"
        with open(vec_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["column", "component", "real", "imag"])
            for u in range(len(basis)):
                col = basis.vectors[:, u]
                for x, z in enumerate(col):
                    w.writerow([u, x, repr(float(z.real)), repr(float(z.imag))])
