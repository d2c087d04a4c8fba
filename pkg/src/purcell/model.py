"""Physical system: one lossy cavity mode coupled to N two-level atoms.

Rates follow the half-width convention used throughout the package: an atom
with decay ``gamma`` loses excited-state population at ``2 * gamma`` and the
cavity leaks photons at ``2 * kappa``. Unless stated otherwise all rates are
in units of ``kappa``.

The single-excitation basis is ordered

    AtomExcited(0), ..., AtomExcited(N-1), OnePhoton, Ground

and every matrix in the package is laid out in that order.
"""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from typing import Union

from .errors import (
    NegativeRate,
    NonPositiveKappa,
    TooManyAtoms,
    ValidationError,
    WrongExcitationCount,
)

MAX_ATOMS = 8


@dataclass(frozen=True)
class AtomSpec:
    g: float
    gamma: float = 0.0
    delta: float = 0.0
    excited: bool = False


@dataclass(frozen=True)
class SystemConfig:
    kappa: float
    atoms: tuple[AtomSpec, ...]
    unit_system: str = "kappa"
    # kappa of the source file before rescaling; informational only
    kappa_scale: float = field(default=1.0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def dim(self) -> int:
        return len(self.atoms) + 2

    @property
    def excited_index(self) -> int:
        flags = [i for i, a in enumerate(self.atoms) if a.excited]
        if len(flags) != 1:
            raise WrongExcitationCount(
                f"exactly one atom must be excited, found {len(flags)}")
        return flags[0]

    @property
    def photon_index(self) -> int:
        return len(self.atoms)

    @property
    def ground_index(self) -> int:
        return len(self.atoms) + 1

    def unexcited(self) -> list[int]:
        return [i for i, a in enumerate(self.atoms) if not a.excited]

    def max_rate(self) -> float:
        """Largest rate or frequency scale in the problem (sets the RK4 step bound)."""
        scales = [self.kappa]
        for a in self.atoms:
            scales += [a.gamma, a.g, abs(a.delta)]
        return max(scales)

    def replace_atom(self, index: int, **changes) -> "SystemConfig":
        atoms = list(self.atoms)
        atoms[index] = dataclasses.replace(atoms[index], **changes)
        return dataclasses.replace(self, atoms=tuple(atoms))


@dataclass(frozen=True)
class AtomExcited:
    index: int

    def __str__(self):
        return f"atom{self.index}"


@dataclass(frozen=True)
class OnePhoton:
    def __str__(self):
        return "photon"


@dataclass(frozen=True)
class Ground:
    def __str__(self):
        return "ground"


BasisState = Union[AtomExcited, OnePhoton, Ground]


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Return ``cfg`` unchanged if it describes a legal scenario, else raise."""
    if not (cfg.kappa > 0) or not math.isfinite(cfg.kappa):
        raise NonPositiveKappa(f"kappa must be positive and finite, got {cfg.kappa!r}")
    if not cfg.atoms:
        raise ValidationError("atoms: at least one atom is required")
    if len(cfg.atoms) > MAX_ATOMS:
        raise TooManyAtoms(f"at most {MAX_ATOMS} atoms supported, got {len(cfg.atoms)}")
    for i, a in enumerate(cfg.atoms):
        for name in ("g", "gamma", "delta"):
            value = getattr(a, name)
            if not math.isfinite(value):
                raise ValidationError(f"atoms[{i}].{name} must be finite, got {value!r}")
        if a.g < 0:
            raise NegativeRate(f"atoms[{i}].g must be >= 0, got {a.g!r}")
        if a.gamma < 0:
            raise NegativeRate(f"atoms[{i}].gamma must be >= 0, got {a.gamma!r}")
    cfg.excited_index
    return cfg


def basis(cfg: SystemConfig) -> list[BasisState]:
    return [AtomExcited(i) for i in range(cfg.n_atoms)] + [OnePhoton(), Ground()]


def normalized(cfg: SystemConfig) -> SystemConfig:
    """Rescale every rate by kappa so that kappa == 1."""
    k = cfg.kappa
    if k == 1.0:
        return cfg
    atoms = tuple(dataclasses.replace(a, g=a.g / k, gamma=a.gamma / k, delta=a.delta / k)
                  for a in cfg.atoms)
    return SystemConfig(1.0, atoms, unit_system="kappa", kappa_scale=cfg.kappa_scale * k)


def two_atom(g_a: float, g_b: float, gamma_b: float, kappa: float = 1.0,
             gamma_a: float = 0.0, delta_a: float = 0.0, delta_b: float = 0.0) -> SystemConfig:
    """Excited atom A plus one unexcited atom B."""
    return SystemConfig(kappa, (AtomSpec(g_a, gamma_a, delta_a, True),
                                AtomSpec(g_b, gamma_b, delta_b)))


def three_atom(g_a: float, g_b: float, gamma_b: float, gamma_c: float,
               kappa: float = 1.0, g_c: float | None = None,
               gamma_a: float = 0.0) -> SystemConfig:
    """Excited atom A plus unexcited atoms B and C (C shares B's coupling by default)."""
    g_c = g_b if g_c is None else g_c
    return SystemConfig(kappa, (AtomSpec(g_a, gamma_a, 0.0, True),
                                AtomSpec(g_b, gamma_b), AtomSpec(g_c, gamma_c)))


_PATH = re.compile(r"^(?:kappa|atoms\[(\d+)\]\.(g|gamma|delta|excited))$")


def get_param(cfg: SystemConfig, path: str):
    m = _PATH.match(path)
    if not m:
        raise ValidationError(f"unknown parameter path {path!r}")
    if path == "kappa":
        return cfg.kappa
    i, name = int(m.group(1)), m.group(2)
    if i >= cfg.n_atoms:
        raise ValidationError(f"parameter path {path!r}: only {cfg.n_atoms} atoms")
    return getattr(cfg.atoms[i], name)


def set_param(cfg: SystemConfig, path: str, value) -> SystemConfig:
    """Return a copy of ``cfg`` with the parameter at ``path`` (e.g. ``atoms[1].g``) replaced."""
    get_param(cfg, path)
    if path == "kappa":
        return dataclasses.replace(cfg, kappa=float(value))
    m = _PATH.match(path)
    i, name = int(m.group(1)), m.group(2)
    value = bool(value) if name == "excited" else float(value)
    return cfg.replace_atom(i, **{name: value})
