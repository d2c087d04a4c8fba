"""Polynomial roots by Aberth-Ehrlich iteration, with multiple-root recovery.

Coefficients are complex and ascending (``c[0] + c[1] x + ... + c[n] x**n``).

Rounding in the coefficients splits a k-fold root into a star of radius
about ``eps**(1/k)``. Exceptional points produce exactly such roots, so after
the iteration converges, tight clusters are tested for numerical
multiplicity: if every Taylor coefficient of order < k at the cluster centre
is at the rounding level, the cluster is replaced by that centre, repeated k
times. The centre itself is refined as the simple root of the (k-1)-th
derivative, which is well conditioned.
"""
from __future__ import annotations

from math import comb

import numpy as np

from .errors import NoConvergence

EPS = np.finfo(float).eps
MULTIPLICITY_TOL = 1e3 * EPS


def _horner2(c, z):
    p = c[-1]
    dp = 0j
    for a in c[-2::-1]:
        dp = dp * z + p
        p = p * z + a
    return p, dp


def _abs_horner(c, r):
    acc = 0.0
    for a in c[::-1]:
        acc = acc * r + abs(a)
    return acc


def derivative(c: np.ndarray, order: int = 1) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    for _ in range(order):
        c = c[1:] * np.arange(1, len(c))
    return c


def shift_origin(c: np.ndarray, x0: complex) -> np.ndarray:
    """Coefficients of p(x0 + y) in powers of y (Taylor coefficients at x0)."""
    c = np.array(c, dtype=complex)
    n = len(c) - 1
    for i in range(n):
        for j in range(n - 1, i - 1, -1):
            c[j] += x0 * c[j + 1]
    return c


def _initial_guesses(c: np.ndarray) -> np.ndarray:
    n = len(c) - 1
    centre = -c[n - 1] / (n * c[n])
    q = shift_origin(c, centre) / c[n]
    radius = max((abs(q[j]) ** (1.0 / (n - j)) for j in range(n)), default=0.0)
    if radius == 0.0:
        return np.full(n, centre, dtype=complex)
    angles = 2 * np.pi * np.arange(n) / n + 0.7
    return centre + radius * np.exp(1j * angles)


def aberth(c, max_sweeps: int = 500) -> np.ndarray:
    """All roots of the polynomial with ascending coefficients ``c``.

    Each approximation is frozen once its residual falls to the rounding
    level of Horner evaluation, or its correction stalls at machine
    precision. Raises NoConvergence after ``max_sweeps`` Gauss-Seidel sweeps.
    """
    c = np.asarray(c, dtype=complex)
    n = len(c) - 1
    if n < 1:
        return np.zeros(0, dtype=complex)
    if n == 1:
        return np.array([-c[0] / c[1]])
    z = _initial_guesses(c)
    if np.all(z == z[0]):
        return z
    # absolute floor for the step test, so a root at exactly zero can freeze
    floor = EPS * float(np.max(np.abs(z)))
    done = np.zeros(n, dtype=bool)
    for _ in range(max_sweeps):
        for k in range(n):
            if done[k]:
                continue
            p, dp = _horner2(c, z[k])
            if abs(p) <= 4 * n * EPS * _abs_horner(c, abs(z[k])):
                done[k] = True
                continue
            diff = z[k] - np.delete(z, k)
            diff[diff == 0] = EPS * max(1.0, abs(z[k]))
            s = np.sum(1.0 / diff)
            if dp == 0:
                w = p / (EPS * max(1.0, abs(z[k])))
            else:
                ratio = p / dp
                w = ratio / (1.0 - ratio * s)
            z[k] -= w
            if abs(w) <= 2 * EPS * max(abs(z[k]), floor):
                done[k] = True
        if done.all():
            return z
    raise NoConvergence(f"Aberth iteration did not converge in {max_sweeps} sweeps")


def _taylor_tolerance(n: int, centre: complex, scale: float) -> np.ndarray:
    # Rounding model: the coefficient of x**i carries an error ~ eps * scale**(n-i).
    r = abs(centre)
    return np.array([
        MULTIPLICITY_TOL * sum(comb(i, j) * r ** (i - j) * scale ** (n - i)
                               for i in range(j, n + 1))
        for j in range(n + 1)])


def _refine_centre(c: np.ndarray, start: complex, k: int, radius: float) -> complex:
    d = derivative(c, k - 1)
    x = start
    for _ in range(20):
        p, dp = _horner2(d, x)
        if dp == 0:
            break
        step = p / dp
        x -= step
        if abs(step) <= 2 * EPS * max(abs(x), radius):
            break
    return x if abs(x - start) <= 2 * radius + EPS else start


def is_multiple_root(c: np.ndarray, centre: complex, k: int, scale: float) -> bool:
    taylor = shift_origin(c, centre)
    tol = _taylor_tolerance(len(c) - 1, centre, scale)
    return bool(np.all(np.abs(taylor[:k]) <= tol[:k]))


def _resolve(c, group: list[complex], scale: float, accept) -> list[tuple[complex, int]]:
    if len(group) == 1:
        return [(group[0], 1)]
    pts = np.array(group)
    centroid = pts.mean()
    radius = float(np.max(np.abs(pts - centroid)))
    centre = _refine_centre(c, centroid, len(group), radius)
    if is_multiple_root(c, centre, len(group), scale) and (accept is None or accept(centre, len(group))):
        return [(centre, len(group))]
    far = int(np.argmax(np.abs(pts - centroid)))
    rest = group[:far] + group[far + 1:]
    return _resolve(c, rest, scale, accept) + [(group[far], 1)]


def roots_with_multiplicity(c, scale: float | None = None, cluster_radius: float = 1e-3,
                            accept=None) -> list[tuple[complex, int]]:
    """Roots grouped into (value, multiplicity) pairs.

    ``scale`` is the magnitude against which coefficient rounding is judged
    (defaults to the largest root modulus, at least 1). Candidate clusters are
    formed by single linkage at ``cluster_radius * scale``. ``accept(centre, k)``
    may veto a k-fold merge the coefficients alone cannot rule out.
    """
    c = np.asarray(c, dtype=complex)
    z = aberth(c)
    if len(z) == 0:
        return []
    if scale is None:
        scale = max(1.0, float(np.max(np.abs(z))))
    link = cluster_radius * scale
    unassigned = list(range(len(z)))
    out: list[tuple[complex, int]] = []
    while unassigned:
        seed = unassigned.pop(0)
        members = [seed]
        grew = True
        while grew:
            grew = False
            for j in list(unassigned):
                if min(abs(z[j] - z[m]) for m in members) <= link:
                    members.append(j)
                    unassigned.remove(j)
                    grew = True
        out += _resolve(c, [complex(z[m]) for m in members], scale, accept)
    return out
