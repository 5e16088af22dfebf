"""Tests of the Floquet eigenvalue-coincidence condition.

For a nonzero momentum shift m the coincidence set collects the momenta r
where a shifted band meets another: |E_s((r+m)/N) - E_w(r/N)| <= tol, per
sorted band-label pair (s, w).  Sorted labels over-count relative to
analytic branches at crossings, so every reported fraction is an upper
bound on the per-branch quantity, which is the safe direction when
falsifying.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .floquet import band_table, fiber_stack, flat_band_scan, momentum_grid, theta_grid
from .lattice import GraphValidationError, PeriodicGraph, validate


def default_tol(g: PeriodicGraph, N: int, bands: np.ndarray | None = None) -> float:
    if bands is None:
        bands = band_table(g, N)
    diam = float(bands.max() - bands.min())
    return 1e-8 * diam if diam > 0 else 1e-8


def _shifted_rows(N: int, d: int, m) -> np.ndarray:
    grid = momentum_grid(N, d)
    target = (grid + np.asarray(m)) % N
    return np.ravel_multi_index(target.T, (N,) * d)


def coincidence_count(g: PeriodicGraph, N: int, m, tol: float | None = None,
                      bands: np.ndarray | None = None) -> np.ndarray:
    """Per-(s, w) counts of momenta with E_s((r+m)/N) = E_w(r/N) at tol.

    Returns an integer (nu, nu) array; entry (s, w) counts r such that the
    shifted band s meets band w.  m = 0 is rejected.
    """
    m = tuple(int(x) % N for x in np.atleast_1d(m))
    if all(x == 0 for x in m):
        raise ValueError("the coincidence shift m must be nonzero")
    if bands is None:
        bands = band_table(g, N)
    if tol is None:
        tol = default_tol(g, N, bands)
    rows = _shifted_rows(N, g.dim, m)
    shifted = bands[rows]                      # E_s at (r + m)/N
    diffs = np.abs(shifted[:, :, None] - bands[:, None, :])
    return np.sum(diffs <= tol, axis=0)


@dataclass
class CoincidenceReport:
    """Counting census for one model size."""

    N: int
    tol: float
    shifts: list                    # the m values examined
    pair_counts: dict               # m -> (nu, nu) int array
    sup_pair_fraction: float        # max over m and (s, w) of count / N^d
    sup_total_fraction: float       # max over m of total count / N^d
    argmax: tuple                   # (m, s, w) achieving the pair sup
    flat_band_detected: bool
    identically_coincident: list    # (m, s, w) with count == N^d
    tri_tolerance: dict             # m -> totals at (0.1x, 1x, 10x)
    unstable: bool
    exhaustive: bool

    def total(self, m) -> int:
        return int(self.pair_counts[m].sum())


def sample_shifts(N: int, d: int, seed: int = 0, count: int = 64,
                  exhaustive_limit: int = 128) -> tuple[list, bool]:
    """Deterministic shift sample: exhaustive in 1-D or when small, else a
    seeded sample that always contains axis and diagonal midpoints."""
    total = N ** d - 1
    if d == 1 or total <= exhaustive_limit:
        grid = momentum_grid(N, d)
        return [tuple(int(x) for x in m) for m in grid if m.any()], True
    specials = set()
    if N % 2 == 0:
        half = N // 2
        for i in range(d):
            m = [0] * d
            m[i] = half
            specials.add(tuple(m))
        specials.add((half,) * d)
    rng = np.random.default_rng([seed, N, d])
    shifts = set(specials)
    while len(shifts) < count:
        m = tuple(int(x) for x in rng.integers(0, N, size=d))
        if any(m):
            shifts.add(m)
    return sorted(shifts), False


def coincidence_report(g: PeriodicGraph, N: int, tol: float | None = None,
                       seed: int = 0, count: int = 64) -> CoincidenceReport:
    bands = band_table(g, N)
    if tol is None:
        tol = default_tol(g, N, bands)
    shifts, exhaustive = sample_shifts(N, g.dim, seed=seed, count=count)
    ncells = N ** g.dim
    pair_counts = {}
    tri = {}
    sup_pair = 0.0
    sup_total = 0.0
    argmax = None
    ident = []
    unstable = False
    for m in shifts:
        counts = coincidence_count(g, N, m, tol=tol, bands=bands)
        pair_counts[m] = counts
        lo = coincidence_count(g, N, m, tol=0.1 * tol, bands=bands)
        hi = coincidence_count(g, N, m, tol=10.0 * tol, bands=bands)
        tri[m] = (int(lo.sum()), int(counts.sum()), int(hi.sum()))
        if hi.sum() - lo.sum() > 0.1 * max(counts.sum(), 1):
            unstable = True
        total_frac = counts.sum() / ncells
        sup_total = max(sup_total, total_frac)
        s, w = np.unravel_index(np.argmax(counts), counts.shape)
        frac = counts[s, w] / ncells
        if frac > sup_pair:
            sup_pair = frac
            argmax = (m, int(s), int(w))
        for (si, wi) in zip(*np.nonzero(counts == ncells)):
            ident.append((m, int(si), int(wi)))
    flats = flat_band_scan(g, grid_size=max(N, 16))
    return CoincidenceReport(
        N=N, tol=tol, shifts=shifts, pair_counts=pair_counts,
        sup_pair_fraction=float(sup_pair), sup_total_fraction=float(sup_total),
        argmax=argmax, flat_band_detected=bool(flats),
        identically_coincident=ident, tri_tolerance=tri, unstable=unstable,
        exhaustive=exhaustive)


def assumption_sweep(g: PeriodicGraph, N_list, tol: float | None = None,
                     seed: int = 0, count: int = 64) -> list[CoincidenceReport]:
    """Coincidence census across sizes, plus a monotone-decay verdict."""
    return [coincidence_report(g, N, tol=tol, seed=seed, count=count)
            for N in N_list]


def decay_verdict(reports: list[CoincidenceReport]) -> bool:
    fracs = [r.sup_pair_fraction for r in reports]
    return all(b <= a + 1e-12 for a, b in zip(fracs, fracs[1:]))


# ---------------------------------------------------------------------------
# nu = 1 root-counting certificate
# ---------------------------------------------------------------------------


@dataclass
class RootBoundCertificate:
    """Certificate that |A_m| <= M N^{d-1} for a nu = 1 model.

    The direction phi comes from a Vandermonde-style row list of length
    l_D = (d-1) D (D-1) + 1; the first row making all gamma_p = 2 phi.n^(p)
    nonzero and pairwise distinct is chosen.  M = 2 max_p gamma_p, bounded
    by the closed form 4 d l_D^{d-1} q.
    """

    phi: tuple[int, ...]
    gammas: tuple[int, ...]
    M: int
    l_D: int
    formula_bound: int
    offsets: tuple
    empirical: dict = field(default_factory=dict)   # N -> max |A_m| observed


def _vandermonde_rows(l: int, d: int) -> np.ndarray:
    x = np.arange(1, l + 1)
    return np.stack([x ** j for j in range(d)], axis=1)


def nu1_root_bound(g: PeriodicGraph, N_list=None, seed: int = 0,
                   count: int = 64) -> RootBoundCertificate:
    """Build the root-count certificate; optionally verify it empirically."""
    if g.nu != 1:
        raise GraphValidationError("the root bound applies to nu = 1 models")
    diag = validate(g)
    if diag.connectivity != "connected":
        raise GraphValidationError("the root bound requires a connected graph")
    offsets = g.nu1_offsets()
    D = len(offsets)
    d = g.dim
    q = g.max_offset
    l_D = (d - 1) * D * (D - 1) + 1
    offs = np.asarray(offsets)
    phi = gammas = None
    # the first l_D Vandermonde rows suffice for the distinctness condition;
    # mixed-sign offsets can additionally force gamma_p = 0, so keep scanning
    # the same row family past l_D if needed
    for x in range(1, 200 * l_D + 1):
        row = np.array([x ** j for j in range(d)])
        gam = 2 * (offs @ row)
        if np.all(gam != 0) and len(set(gam.tolist())) == D:
            phi, gammas = row, gam
            break
    if phi is None:
        raise RuntimeError("no valid projection direction found")
    M = int(2 * np.max(gammas))
    cert = RootBoundCertificate(
        phi=tuple(int(x) for x in phi),
        gammas=tuple(int(x) for x in gammas),
        M=M, l_D=l_D,
        formula_bound=int(4 * d * l_D ** (d - 1) * q),
        offsets=tuple(tuple(o) for o in offsets))
    if N_list:
        for N in N_list:
            bands = band_table(g, N)
            tol = default_tol(g, N, bands)
            shifts, _ = sample_shifts(N, d, seed=seed, count=count)
            worst = 0
            for m in shifts:
                counts = coincidence_count(g, N, m, tol=tol, bands=bands)
                worst = max(worst, int(counts.sum()))
            cert.empirical[N] = worst
    return cert


def certificate_holds(cert: RootBoundCertificate, d: int) -> bool:
    return all(worst <= cert.M * N ** (d - 1)
               for N, worst in cert.empirical.items())


# ---------------------------------------------------------------------------
# Kronecker-sum determinant probe
# ---------------------------------------------------------------------------


@dataclass
class KroneckerReport:
    alpha: tuple
    grid_size: int
    sign_changes: int
    grid_zeros: int
    identically_zero: bool
    degree_bound: int | None      # 2 delta nu^2 for d = 1
    log_scale: float
    zero_count: int               # distinct zeros (1-D); sign-change based otherwise


def _kron_spectra(g, thetas, alpha):
    """Per grid point: determinant sign, min and max |eigenvalue| of B."""
    nu = g.nu
    h0 = fiber_stack(g, thetas)
    h1 = fiber_stack(g, thetas + alpha[None, :])
    eye = np.eye(nu)
    signs = np.empty(len(thetas))
    smin = np.empty(len(thetas))
    smax = np.empty(len(thetas))
    for i in range(len(thetas)):
        b = np.kron(h1[i], eye) - np.kron(eye, h0[i])
        ev = np.linalg.eigvalsh(b)
        signs[i] = 1.0 if int(np.sum(ev < 0)) % 2 == 0 else -1.0
        smin[i] = float(np.min(np.abs(ev)))
        smax[i] = float(np.max(np.abs(ev)))
    return signs, smin, smax


def _count_unit_circle_roots(g, alpha, zero_tol):
    """Distinct zeros of det(B_alpha) in theta, via its Laurent coefficients.

    1-D only: z^K det(B) is a polynomial of degree <= 2K in z = e^{2 pi i
    theta} with K = delta nu^2, so its coefficients are recovered exactly
    by an FFT on >= 2K+1 samples and the zeros (including even-order ones,
    which sign scans miss) are root clusters on the unit circle.
    """
    K = g.max_offset * g.nu * g.nu
    M = 4 * K + 9
    thetas = theta_grid(M, 1)
    h0 = fiber_stack(g, thetas)
    h1 = fiber_stack(g, thetas + alpha[None, :])
    eye = np.eye(g.nu)
    dets = np.empty(M, dtype=complex)
    for i in range(M):
        dets[i] = np.linalg.det(np.kron(h1[i], eye) - np.kron(eye, h0[i]))
    scale = float(np.max(np.abs(dets)))
    if scale == 0.0:
        return 0
    coeff_hat = np.fft.fft(dets / scale) / M
    # c_k for k in [-K, K]; poly coefficients of z^{k+K}, highest degree first
    poly = np.array([coeff_hat[(j - K) % M] for j in range(2 * K, -1, -1)])
    poly[np.abs(poly) < 1e-12] = 0.0
    nz = np.nonzero(np.abs(poly) > 0)[0]
    if len(nz) == 0:
        return 0
    poly = poly[nz[0]:]
    if len(poly) <= 1:
        return 0
    roots = np.roots(poly)
    on_circle = roots[np.abs(np.abs(roots) - 1.0) < 1e-4]
    angles = np.sort(np.angle(on_circle) % (2 * np.pi))
    count = 0
    last = None
    for ang in angles:
        if last is None or ang - last > 1e-3:
            count += 1
            last = ang
    # wrap-around cluster merge
    if count > 1 and (angles[0] + 2 * np.pi) - angles[-1] <= 1e-3:
        count -= 1
    return count


def kronecker_probe(g: PeriodicGraph, alpha, grid_size: int = 256,
                    zero_tol: float = 1e-10) -> KroneckerReport:
    """Scan det(H(theta+alpha) x Id - Id x H(theta)) over the theta grid.

    Zeros of the determinant locate band coincidences at shift alpha.  The
    verdict "identically zero" fires when every grid value lies below
    zero_tol relative to the matrix-norm scale.  For d = 1 and moderate nu
    the zero count comes from polynomial root clustering, to be compared
    against the Laurent-degree bound 2 delta nu^2; otherwise it falls back
    to sign changes plus isolated grid zeros.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float)) % 1.0
    if not np.any(alpha):
        raise ValueError("the shift alpha must be nonzero")
    d, nu = g.dim, g.nu
    thetas = theta_grid(grid_size, d)
    signs, smin, smax = _kron_spectra(g, thetas, alpha)
    # 0 is an eigenvalue of B(theta) exactly when a band coincidence occurs
    tiny = smin < zero_tol * (1.0 + smax)
    identically_zero = bool(np.all(tiny))
    grid_zeros = int(np.sum(tiny))
    sign_changes = 0
    if d == 1:
        live = [s for s, t in zip(signs, tiny) if not t]
        for a, b_ in zip(live, live[1:] + live[:1]):   # cyclic in theta
            if a * b_ < 0:
                sign_changes += 1
    degree_bound = 2 * g.max_offset * nu * nu if d == 1 else None
    if identically_zero:
        zero_count = 0
    elif d == 1 and degree_bound <= 64:
        zero_count = _count_unit_circle_roots(g, alpha, zero_tol)
    else:
        zero_count = sign_changes + grid_zeros
    log_scale = float(np.log(max(smax.max(), 1e-300)))
    return KroneckerReport(tuple(float(a) for a in alpha), grid_size,
                           sign_changes, grid_zeros, identically_zero,
                           degree_bound, log_scale, zero_count)


# ---------------------------------------------------------------------------
# 1-D characteristic polynomial split
# ---------------------------------------------------------------------------


def _is_chain(g: PeriodicGraph) -> bool:
    if g.dim != 1:
        return False
    nu = g.nu
    expected = set()
    if nu == 1:
        expected = {(0, 0, (1,)), (0, 0, (-1,))}
    else:
        for i in range(nu - 1):
            expected.add((i, i + 1, (0,)))
            expected.add((i + 1, i, (0,)))
        expected.add((nu - 1, 0, (1,)))
        expected.add((0, nu - 1, (-1,)))
    return set(g.templates) == expected and \
        all(m == 1 for m in g.templates.values())


def charpoly_split_check(g: PeriodicGraph, grid_size: int = 64,
                         n_lambda: int | None = None):
    """Verify det(lambda I - H(theta)) = Delta(lambda) - z - 1/z on a chain.

    Fits Delta at one momentum and returns the maximal deviation of
    p(lambda; z) + z + z^{-1} from that fit across the grid, together with
    the sampled (lambda, Delta) pairs.
    """
    if not _is_chain(g):
        raise GraphValidationError("charpoly split applies to 1-D periodic "
                                   "chains (z_periodic_potential models)")
    nu = g.nu
    n_lambda = n_lambda if n_lambda is not None else max(2 * nu + 3, 8)
    qmax = max(abs(q) for q in g.potential) if g.potential else 0.0
    lam_grid = np.linspace(-(2.5 + qmax), 2.5 + qmax, n_lambda)
    thetas = theta_grid(grid_size, 1)
    stack = fiber_stack(g, thetas)

    def p_plus_z(theta_idx):
        z = np.exp(2j * np.pi * thetas[theta_idx, 0])
        h = stack[theta_idx]
        vals = np.empty(n_lambda, dtype=complex)
        for i, lam in enumerate(lam_grid):
            vals[i] = np.linalg.det(lam * np.eye(nu) - h) + z + 1.0 / z
        return vals

    ref_idx = max(1, grid_size // 7)     # a generic, non-symmetric momentum
    delta = p_plus_z(ref_idx)
    deviation = 0.0
    for t in range(grid_size):
        vals = p_plus_z(t)
        deviation = max(deviation, float(np.max(np.abs(vals - delta))))
    return float(deviation), lam_grid, delta.real
