"""Eigen-decomposition of effective matrices and exceptional-point diagnostics.

Eigenvalues are roots of the characteristic polynomial (Aberth-Ehrlich on the
trace-centred Faddeev-LeVerrier coefficients); eigenvectors come from shifted
inverse iteration. Blocks that are decoupled from the rest of the matrix are
diagonalised separately, so an uncoupled atom contributes its diagonal entry
and a unit vector exactly.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .effective import EffectiveMatrix, _as_array, build_effective_matrix, centered_polynomial
from .errors import DegenerateEp, FitFailure, NoConvergence, OutsideEp3Window, ValidationError
from .model import SystemConfig, get_param, set_param
from .roots import roots_with_multiplicity

NEAR_DEFECTIVE_COND = 1e6
EP_GAP_TOL = 1e-6
EP_OVERLAP_TOL = 1e-4
SINGULAR_TOL = 1e-10
MAX_INVERSE_STEPS = 8
CLUSTER_TOL = 2e-3


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    condition: float  # reciprocal condition number of the eigenvector matrix
    multiplicity: tuple[int, ...]

    @property
    def near_defective(self) -> bool:
        return self.condition < 1.0 / NEAR_DEFECTIVE_COND

    def residuals(self, m) -> np.ndarray:
        a = _as_array(m)
        return np.linalg.norm(a @ self.eigenvectors - self.eigenvectors * self.eigenvalues, axis=0)

    def to_json(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "eigenvectors": [[[float(z.real), float(z.imag)] for z in col]
                             for col in self.eigenvectors.T],
            "condition": float(self.condition),
            "multiplicity": list(self.multiplicity),
        }


def _components(a: np.ndarray) -> list[list[int]]:
    n = a.shape[0]
    linked = (a != 0) | (a.T != 0)
    seen = [False] * n
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in range(n):
                if j != i and linked[i, j] and not seen[j]:
                    seen[j] = True
                    stack.append(j)
        comps.append(sorted(comp))
    return comps


def _unit(v: np.ndarray) -> np.ndarray:
    v = v / np.max(np.abs(v))
    return v / np.linalg.norm(v)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    v = _unit(v)
    k = int(np.argmax(np.abs(v)))
    v = v * (abs(v[k]) / v[k])
    v[k] = abs(v[k])
    return v


def _start_vector(n: int, j: int) -> np.ndarray:
    rng = np.random.default_rng(1234 + j)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _solve(shifted: np.ndarray, rhs: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Solve with a shift that may sit exactly on an eigenvalue.

    An exactly singular or overflowing solve is retried with the shift moved by
    a few ulps; returns the solution and the (possibly nudged) matrix.
    """
    nudge = 4 * np.finfo(float).eps * scale * (1 + 1j) * np.eye(shifted.shape[0])
    for _ in range(3):
        try:
            y = np.linalg.solve(shifted, rhs)
        except np.linalg.LinAlgError:
            y = None
        if y is not None and np.all(np.isfinite(np.abs(y))) and np.max(np.abs(y)) > 0:
            return y, shifted
        shifted = shifted - nudge
        nudge = nudge * 16
    raise NoConvergence("inverse iteration failed: shifted matrix stays singular")


def _inverse_iteration(a: np.ndarray, lam: complex, start: np.ndarray, scale: float) -> np.ndarray:
    n = a.shape[0]
    shifted = a - lam * np.eye(n)
    x = start
    for _ in range(MAX_INVERSE_STEPS):
        y, shifted = _solve(shifted, x, scale)
        x = _unit(y)
        if np.linalg.norm(a @ x - lam * x) <= 1e-12 * scale:
            break
    return x


def _polish(a: np.ndarray, lam: complex, v: np.ndarray) -> complex:
    """Refine a simple eigenvalue of a complex-symmetric matrix by the quotient v^T A v / v^T v.

    For A = A^T the left and right eigenvectors coincide, so the quotient is
    second-order accurate. Near an exceptional point v^T v -> 0 and the
    refinement is skipped.
    """
    if not np.array_equal(a, a.T):
        return lam
    q = v @ v
    if abs(q) < 0.1:
        return lam
    refined = complex((v @ a @ v) / q)
    if np.linalg.norm(a @ v - refined * v) <= np.linalg.norm(a @ v - lam * v):
        return refined
    return lam


def _cluster(roots: list[tuple[complex, int]], radius: float) -> list[list[int]]:
    """Single-linkage groups of roots closer than ``radius``."""
    groups: list[list[int]] = []
    pending = list(range(len(roots)))
    while pending:
        members = [pending.pop(0)]
        grew = True
        while grew:
            grew = False
            for j in list(pending):
                if min(abs(roots[j][0] - roots[i][0]) for i in members) <= radius:
                    members.append(j)
                    pending.remove(j)
                    grew = True
        groups.append(members)
    return groups


def _ritz(block: np.ndarray, centre: complex, k: int, scale: float) -> list[tuple[complex, np.ndarray, int]]:
    """Eigenpairs of a tight eigenvalue cluster from its invariant subspace.

    Roots closer together than the polynomial can resolve are recovered by
    inverse subspace iteration at the cluster centre followed by the eigenpairs
    of the rescaled projected k x k matrix, where the cluster is well separated.
    """
    n = block.shape[0]
    rng = np.random.default_rng(4321 + k)
    q, _ = np.linalg.qr(rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k)))
    shifted = block - centre * np.eye(n)
    for _ in range(50):
        y, shifted = _solve(shifted, q, scale)
        q, _ = np.linalg.qr(y / np.max(np.abs(y)))
        b = q.conj().T @ (block - centre * np.eye(n)) @ q
        if np.linalg.norm((block - centre * np.eye(n)) @ q - q @ b) <= 1e-13 * scale:
            break
    # the trace of the projection pins the cluster mean to rounding accuracy
    offset = np.trace(b) / k
    centre = centre + offset
    b = b - offset * np.eye(k)
    spread = float(np.linalg.norm(b, 2))
    if spread == 0:
        return [(complex(centre), q[:, j], k) for j in range(k)]
    return [(complex(centre + spread * mu), _unit(q @ w), mult)
            for mu, w, mult in _pairs(b / spread)]


def _block_pairs(block: np.ndarray) -> list[tuple[complex, np.ndarray, int]]:
    n = block.shape[0]
    q, shift = centered_polynomial(block)
    centred = block - shift * np.eye(n)
    bscale = max(1.0, float(np.linalg.norm(centred, 2)))

    def singular_at(mu, k):
        # a genuine multiple eigenvalue leaves A - lambda I numerically singular;
        # close but distinct roots do not
        sv = np.linalg.svd(centred - mu * np.eye(n), compute_uv=False)
        return sv[-1] <= SINGULAR_TOL * bscale

    roots = roots_with_multiplicity(q, scale=bscale, accept=singular_at)
    out = []
    for group in _cluster(roots, CLUSTER_TOL * bscale):
        size = sum(roots[i][1] for i in group)
        if 1 < size < n:
            centre = sum(roots[i][0] * roots[i][1] for i in group) / size + shift
            out += _ritz(block, centre, size, bscale)
            continue
        for i in group:
            mu, k = roots[i]
            lam = mu + shift
            found: list[np.ndarray] = []
            for j in range(k):
                b = _start_vector(n, j)
                for f in found:
                    b = b - np.vdot(f, b) * f
                v = _inverse_iteration(block, lam, b, bscale)
                if k == 1:
                    refined = _polish(block, lam, v)
                    if refined != lam:
                        lam = refined
                        v = _inverse_iteration(block, lam, v, bscale)
                found.append(v)
                out.append((complex(lam), v, k))
    return out


def _pairs(a: np.ndarray) -> list[tuple[complex, np.ndarray, int]]:
    n = a.shape[0]
    out = []
    for comp in _components(a):
        if len(comp) == 1:
            e = np.zeros(n, dtype=complex)
            e[comp[0]] = 1.0
            out.append((complex(a[comp[0], comp[0]]), e, 1))
            continue
        for lam, v, k in _block_pairs(a[np.ix_(comp, comp)]):
            full = np.zeros(n, dtype=complex)
            full[comp] = v
            out.append((lam, full, k))
    return out


def eigenpairs(m) -> Spectrum:
    """Eigenvalues (with multiplicity) and unit eigenvectors of a small dense matrix."""
    a = _as_array(m)
    pairs = sorted(_pairs(a), key=lambda p: (p[0].imag, p[0].real))
    vals = np.array([p[0] for p in pairs])
    vecs = np.column_stack([_fix_phase(p[1]) for p in pairs])
    sv = np.linalg.svd(vecs, compute_uv=False)
    rcond = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    return Spectrum(vals, vecs, rcond, tuple(p[2] for p in pairs))


def coalescence(spec: Spectrum) -> tuple[float, float]:
    """Smallest pairwise eigenvalue distance and largest pairwise eigenvector overlap."""
    lam, v = spec.eigenvalues, spec.eigenvectors
    n = len(lam)
    if n < 2:
        return float("inf"), 0.0
    gap, overlap = np.inf, 0.0
    for i in range(n):
        for j in range(i + 1, n):
            gap = min(gap, abs(lam[i] - lam[j]))
            overlap = max(overlap, abs(np.vdot(v[:, i], v[:, j])))
    return float(gap), float(min(overlap, 1.0))


def is_coalesced(spec: Spectrum) -> bool:
    gap, overlap = coalescence(spec)
    radius = float(np.max(np.abs(spec.eigenvalues)))
    return gap <= EP_GAP_TOL * max(1.0, radius) and overlap >= 1.0 - EP_OVERLAP_TOL


def ep2_coupling(kappa: float, gamma_b: float) -> float:
    """Unexcited-atom coupling at which atom and cavity form a second-order EP."""
    if not kappa > 0 or gamma_b < 0:
        raise ValidationError("need kappa > 0 and gamma_b >= 0")
    if kappa == gamma_b:
        raise DegenerateEp("kappa == gamma_b: EP coupling is zero, the pair is degenerate already")
    return abs(kappa - gamma_b) / 2


def ep3_parameters(kappa: float, gamma_c: float) -> tuple[float, float]:
    """(gamma_b, g_b) placing two unexcited atoms and the cavity at a third-order EP.

    Requires gamma_c / 2 < kappa < gamma_c; the decays then sit symmetrically
    about kappa (gamma_b = 2 kappa - gamma_c) and g_b = (gamma_c - kappa)/sqrt 2.
    """
    if not (gamma_c / 2 < kappa < gamma_c):
        raise OutsideEp3Window(
            f"need gamma_c/2 < kappa < gamma_c, got kappa={kappa!r}, gamma_c={gamma_c!r}")
    return 2 * kappa - gamma_c, float((gamma_c - kappa) / np.sqrt(2))


def _displacement(base: np.ndarray, moved: np.ndarray) -> float:
    return float(max(np.min(np.abs(base - z)) for z in moved))


def _perturbed(cfg: SystemConfig, path: str, eps: float) -> SystemConfig:
    v = get_param(cfg, path)
    return set_param(cfg, path, v * (1 + eps) if v != 0 else eps)


def splitting_series(cfg: SystemConfig, path: str, eps_grid, jobs: int = 1) -> np.ndarray:
    """Eigenvalue displacement from the unperturbed spectrum for each relative perturbation."""
    base = eigenpairs(build_effective_matrix(cfg)).eigenvalues

    def one(eps):
        return _displacement(base, eigenpairs(build_effective_matrix(_perturbed(cfg, path, eps))).eigenvalues)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return np.array(list(ex.map(one, eps_grid)))
    return np.array([one(e) for e in eps_grid])


def splitting_exponent(cfg_at_ep: SystemConfig, perturbed_param: str, eps_grid, jobs: int = 1) -> float:
    """Slope of log(splitting) against log(eps).

    The parameter at ``perturbed_param`` is scaled by (1 + eps). Near an EP of
    order n the slope is 1/n; away from one it is 1.
    """
    eps = np.asarray(sorted(eps_grid), dtype=float)
    if len(eps) < 2 or np.any(eps <= 0) or eps[-1] / eps[0] < 100:
        raise ValidationError("eps grid must be positive and span at least two decades")
    split = splitting_series(cfg_at_ep, perturbed_param, eps, jobs)
    if np.any(split <= 0) or np.any(np.diff(split) <= 0):
        raise FitFailure("eigenvalue splitting is not monotone in eps; "
                         "the perturbation may preserve the degeneracy")
    slope, _ = np.polyfit(np.log(eps), np.log(split), 1)
    return float(slope)


@dataclass(frozen=True)
class EpReport:
    order: int
    parameters: dict
    min_gap: float
    max_overlap: float
    splitting_exponent: float
    eigenvalue: complex
    eigenvector: np.ndarray  # coalesced vector in the basis of the probed block

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["eigenvalue"] = [self.eigenvalue.real, self.eigenvalue.imag]
        d["eigenvector"] = [[float(z.real), float(z.imag)] for z in self.eigenvector]
        return d


DEFAULT_EPS_GRID = tuple(np.logspace(-6, -3, 13))


def _ep_report(cfg: SystemConfig, order: int, params: dict, eps_grid) -> EpReport:
    spec = eigenpairs(build_effective_matrix(cfg))
    gap, overlap = coalescence(spec)
    k = int(np.argmax(spec.multiplicity))
    exponent = splitting_exponent(cfg, "atoms[1].g", eps_grid)
    return EpReport(order, params, gap, overlap, exponent,
                    complex(spec.eigenvalues[k]), spec.eigenvectors[:, k])


def find_ep2(kappa: float, gamma_b: float, eps_grid=DEFAULT_EPS_GRID) -> EpReport:
    """EP2 formed by one unexcited atom and the cavity (excited atom decoupled)."""
    from .model import two_atom
    g_b = ep2_coupling(kappa, gamma_b)
    cfg = two_atom(0.0, g_b, gamma_b, kappa)
    return _ep_report(cfg, 2, {"kappa": kappa, "gamma_b": gamma_b, "g_b": g_b}, eps_grid)


def find_ep3(kappa: float, gamma_c: float, eps_grid=DEFAULT_EPS_GRID) -> EpReport:
    """EP3 formed by two unexcited atoms and the cavity (excited atom decoupled)."""
    from .model import three_atom
    gamma_b, g_b = ep3_parameters(kappa, gamma_c)
    cfg = three_atom(0.0, g_b, gamma_b, gamma_c, kappa)
    return _ep_report(cfg, 3, {"kappa": kappa, "gamma_b": gamma_b, "gamma_c": gamma_c, "g_b": g_b},
                      eps_grid)
