"""Non-Hermitian effective matrix of the single-excitation sector.

Amplitudes of the states AtomExcited(0..N-1), OnePhoton obey
``dpsi/dt = -i M psi``. The global ground state only receives population,
so it is left out of ``M``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooLarge
from .model import BasisState, SystemConfig, basis, validate_config

MAX_DIM = 9


@dataclass(frozen=True)
class EffectiveMatrix:
    entries: np.ndarray
    basis_labels: tuple[BasisState, ...]

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def index(self, label: BasisState) -> int:
        return self.basis_labels.index(label)

    def submatrix(self, keep: list[int]) -> "EffectiveMatrix":
        keep = list(keep)
        return EffectiveMatrix(self.entries[np.ix_(keep, keep)].copy(),
                               tuple(self.basis_labels[k] for k in keep))

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "basis": [str(b) for b in self.basis_labels],
            "entries": [[[float(z.real), float(z.imag)] for z in row] for row in self.entries],
        }


def build_effective_matrix(cfg: SystemConfig) -> EffectiveMatrix:
    validate_config(cfg)
    n = cfg.n_atoms
    m = np.zeros((n + 1, n + 1), dtype=complex)
    for i, atom in enumerate(cfg.atoms):
        m[i, i] = atom.delta - 1j * atom.gamma
        m[i, n] = m[n, i] = atom.g
    m[n, n] = -1j * cfg.kappa
    return EffectiveMatrix(m, tuple(basis(cfg)[: n + 1]))


def dressed_block(cfg: SystemConfig) -> EffectiveMatrix:
    """Effective matrix of the unexcited atoms and the cavity alone.

    Its eigenvalues are the polariton energies the excited atom decays into
    (for two unexcited atoms at the PT-like point this is the matrix that
    carries the third-order exceptional point).
    """
    full = build_effective_matrix(cfg)
    keep = [i for i in range(full.dim) if i != cfg.excited_index]
    return full.submatrix(keep)


@dataclass(frozen=True)
class PolynomialCoefficients:
    """Monic polynomial, coefficients in ascending powers."""

    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return horner(self.coeffs, x)


def horner(coeffs, x):
    acc = np.zeros_like(np.asarray(x, dtype=complex))
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def faddeev_leverrier(a: np.ndarray) -> np.ndarray:
    """Coefficients of det(x I - a), ascending, by the trace recursion."""
    n = a.shape[0]
    c = np.zeros(n + 1, dtype=complex)
    c[n] = 1.0
    eye = np.eye(n, dtype=complex)
    mk = np.zeros_like(a, dtype=complex)
    for k in range(1, n + 1):
        mk = a @ mk + c[n - k + 1] * eye
        c[n - k] = -np.trace(a @ mk) / k
    return c


def taylor_shift(coeffs: np.ndarray, shift: complex) -> np.ndarray:
    """Given q(y) (ascending), return p(x) = q(x - shift)."""
    out = np.zeros(1, dtype=complex)
    lin = np.array([-shift, 1.0], dtype=complex)
    for q in coeffs[::-1]:
        out = np.convolve(out, lin)
        out[0] += q
    return out[: len(coeffs)]


def _as_array(m) -> np.ndarray:
    a = m.entries if isinstance(m, EffectiveMatrix) else np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise DimensionTooLarge(f"dimension {a.shape[0]} exceeds {MAX_DIM}")
    return a


def centered_polynomial(m) -> tuple[np.ndarray, complex]:
    """Characteristic polynomial of ``m - s I`` with s = trace/dim, and s.

    Centering removes the common diagonal offset (e.g. the -i kappa shared by
    all polaritons) before the recursion, which keeps clustered roots from
    being swamped by rounding in large coefficients.
    """
    a = _as_array(m)
    shift = np.trace(a) / a.shape[0]
    return faddeev_leverrier(a - shift * np.eye(a.shape[0])), complex(shift)


def characteristic_polynomial(m) -> PolynomialCoefficients:
    q, shift = centered_polynomial(m)
    p = taylor_shift(q, shift)
    p[-1] = 1.0
    return PolynomialCoefficients(p)
