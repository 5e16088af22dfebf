"""Floquet fibers, their eigensystems, and the cell-resolved DFT.

The fiber at fractional momentum theta is the nu x nu Hermitian matrix

    H(theta)[n, l] = sum_{templates n -> (l, o)} mult * exp(2i pi theta.o)
                     + Q(v_n) * delta_{n l}.

The unitary U maps a vector on the N-torus model to one cell vector per
momentum j/N and block-diagonalizes the finite Hamiltonian into fibers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import PeriodicGraph


class CapExceededError(RuntimeError):
    """A problem size exceeded its configured cap."""


# ---------------------------------------------------------------------------
# fibers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Fiber:
    theta: tuple[float, ...]
    matrix: np.ndarray

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def fiber(g: PeriodicGraph, theta) -> Fiber:
    """Floquet fiber H(theta) at a single fractional momentum."""
    th = np.atleast_1d(np.asarray(theta, dtype=float)) % 1.0
    if th.shape != (g.dim,):
        raise ValueError(f"momentum must have {g.dim} component(s)")
    m = fiber_stack(g, th[None, :])[0]
    return Fiber(tuple(th), m)


def fiber_stack(g: PeriodicGraph, thetas: np.ndarray) -> np.ndarray:
    """Fibers at many momenta at once; thetas has shape (M, d)."""
    thetas = np.asarray(thetas, dtype=float)
    M = thetas.shape[0]
    out = np.zeros((M, g.nu, g.nu), dtype=complex)
    for (n, l, o), mult in g.templates.items():
        phase = np.exp(2j * np.pi * (thetas @ np.asarray(o, dtype=float)))
        out[:, n, l] += mult * phase
    out[:, np.arange(g.nu), np.arange(g.nu)] += np.asarray(g.potential)
    return out


def momentum_grid(N: int, d: int) -> np.ndarray:
    """Integer momentum multi-indices of L_N^d, C-ordered, shape (N^d, d)."""
    axes = np.indices((N,) * d).reshape(d, -1).T
    return axes


def theta_grid(N: int, d: int) -> np.ndarray:
    return momentum_grid(N, d) / float(N)


# ---------------------------------------------------------------------------
# eigensystems with degeneracy grouping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenSystem:
    """Sorted eigenvalues with degeneracy classes and class projectors.

    ``groups`` partitions band labels 0..nu-1 into nu' classes of equal
    eigenvalue (within the grouping tolerance); ``projectors[s]`` is the
    Hermitian idempotent onto class s, built from orthonormal eigenvectors
    so it is a basis-free object.
    """

    theta: tuple[float, ...]
    eigenvalues: np.ndarray
    groups: tuple[tuple[int, ...], ...]
    projectors: np.ndarray  # (nu', nu, nu)

    @property
    def nu_prime(self) -> int:
        return len(self.groups)

    def group_values(self) -> np.ndarray:
        return np.array([self.eigenvalues[g[0]] for g in self.groups])

    def reconstruct(self) -> np.ndarray:
        """Reassemble sum_s E_s P_{E_s}; equals the fiber up to rounding."""
        vals = self.group_values()
        return np.einsum("s,snl->nl", vals, self.projectors)


def default_degen_tol(eigenvalues: np.ndarray) -> float:
    scale = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    return 1e-8 * (1.0 + scale)


def _group_sorted(values: np.ndarray, tol: float) -> list[list[int]]:
    groups = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[groups[-1][0]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def eigensystem(f: Fiber, degen_tol: float | None = None) -> EigenSystem:
    """Diagonalize a fiber and group degenerate bands into projectors."""
    try:
        evals, evecs = np.linalg.eigh(f.matrix)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise RuntimeError(f"eigensolver failed on fiber at {f.theta}") from exc
    tol = default_degen_tol(evals) if degen_tol is None else float(degen_tol)
    if tol <= 0:
        raise ValueError("degeneracy tolerance must be positive")
    groups = _group_sorted(evals, tol)
    projectors = np.empty((len(groups), f.matrix.shape[0], f.matrix.shape[0]),
                          dtype=complex)
    for s, idx in enumerate(groups):
        v = evecs[:, idx]
        projectors[s] = v @ v.conj().T
    return EigenSystem(f.theta, evals, tuple(tuple(g) for g in groups),
                       projectors)


def eigensystems_on_grid(g: PeriodicGraph, N: int,
                         degen_tol: float | None = None) -> list[EigenSystem]:
    """EigenSystem at every momentum j/N of the model grid, C-ordered."""
    thetas = theta_grid(N, g.dim)
    stack = fiber_stack(g, thetas)
    out = []
    for th, m in zip(thetas, stack):
        out.append(eigensystem(Fiber(tuple(th), m), degen_tol))
    return out


def band_table(g: PeriodicGraph, N: int) -> np.ndarray:
    """Ascending band energies at every grid momentum, shape (N^d, nu)."""
    stack = fiber_stack(g, theta_grid(N, g.dim))
    return np.linalg.eigvalsh(stack)


def band_grid(g: PeriodicGraph, grid_size: int,
              degen_tol: float | None = None):
    """Bands over a uniform theta grid for dispersion export.

    Returns ``(thetas, energies, nu_prime)`` where nu_prime counts distinct
    eigenvalues per grid point (drops at exceptional momenta such as band
    touchings).
    """
    thetas = theta_grid(grid_size, g.dim)
    stack = fiber_stack(g, thetas)
    energies = np.linalg.eigvalsh(stack)
    nu_prime = np.empty(len(thetas), dtype=int)
    for i, ev in enumerate(energies):
        tol = default_degen_tol(ev) if degen_tol is None else degen_tol
        nu_prime[i] = len(_group_sorted(ev, tol))
    return thetas, energies, nu_prime


def flat_band_scan(g: PeriodicGraph, grid_size: int = 32,
                   tol: float = 1e-10):
    """Detect theta-independent band values on a grid.

    A flat band may wander between sorted positions when dispersive bands
    cross it, so candidates are taken from the spectrum at one generic
    momentum and flagged when they stay within ``tol`` of the spectrum at
    every grid point.  Returns ``[(multiplicity_at_probe, value), ...]``.
    """
    probe = np.array([0.2347 + 0.0619 * i for i in range(g.dim)])[None, :]
    cand = np.linalg.eigvalsh(fiber_stack(g, probe))[0]
    energies = np.linalg.eigvalsh(fiber_stack(g, theta_grid(grid_size, g.dim)))
    flats = []
    used = np.zeros(len(cand), dtype=bool)
    for s, v in enumerate(cand):
        if used[s]:
            continue
        dist = np.min(np.abs(energies - v), axis=1)
        if float(dist.max()) < tol:
            mult = int(np.sum(np.abs(cand - v) < tol))
            used |= np.abs(cand - v) < tol
            flats.append((mult, float(v)))
    return flats


# ---------------------------------------------------------------------------
# Floquet transform
# ---------------------------------------------------------------------------


def floquet_transform(psi: np.ndarray, model) -> np.ndarray:
    """Forward transform: psi on Gamma_N -> one cell vector per momentum.

    Accepts a flat vector of length nu*N^d (or a stack with trailing axes)
    and returns shape (N^d, nu[, ...]); unitary, so Parseval holds.
    """
    N, d, nu = model.N, model.dim, model.nu
    extra = psi.shape[1:] if psi.ndim > 1 else ()
    grid = psi.reshape((N,) * d + (nu,) + extra)
    g = np.fft.fftn(grid, axes=tuple(range(d))) / N ** (d / 2.0)
    return g.reshape((N ** d, nu) + extra)


def inverse_floquet_transform(coeffs: np.ndarray, model) -> np.ndarray:
    """Inverse transform back to a flat vector on Gamma_N."""
    N, d, nu = model.N, model.dim, model.nu
    extra = coeffs.shape[2:] if coeffs.ndim > 2 else ()
    grid = coeffs.reshape((N,) * d + (nu,) + extra)
    psi = np.fft.ifftn(grid, axes=tuple(range(d))) * N ** (d / 2.0)
    return psi.reshape((model.size,) + extra)


def verify_block_diagonalization(model, tol: float = 1e-12,
                                 cap: int = 20000) -> float:
    """Max residual of U H_N U^{-1} = direct sum of fibers over all basis vectors.

    Computes ``max_i || U H_N e_i - (+)H(j/N) U e_i ||`` by streaming the
    standard basis through both sides in batches; returns the residual (the
    caller compares against ``tol``; the default matches the acceptance
    tolerance).
    """
    size = model.size
    if size > cap:
        raise CapExceededError(f"model size {size} exceeds cap {cap}")
    from .finite import hamiltonian  # local import to avoid a cycle

    op = hamiltonian(model, cap=cap)
    fibers = fiber_stack(model.graph, theta_grid(model.N, model.dim))
    worst = 0.0
    batch = 256
    for start in range(0, size, batch):
        stop = min(start + batch, size)
        block = np.zeros((size, stop - start), dtype=complex)
        block[np.arange(start, stop), np.arange(stop - start)] = 1.0
        lhs = floquet_transform(op.apply(block), model)      # (N^d, nu, b)
        rhs = np.einsum("rnl,rlb->rnb", fibers,
                        floquet_transform(block, model))
        diff = lhs - rhs
        norms = np.sqrt(np.sum(np.abs(diff) ** 2, axis=(0, 1)))
        worst = max(worst, float(norms.max()))
    return worst
