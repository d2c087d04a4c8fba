"""Closed-form Purcell rates and numerical rate extraction.

Every rate here is an amplitude rate: a population governed by rate ``G``
decays as ``exp(-2 G t)``. The bare Purcell rate of an atom with coupling
``g_a`` to a resonant cavity is ``g_a**2 / kappa``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass

import numpy as np

from .effective import EffectiveMatrix, build_effective_matrix
from .errors import (
    AmbiguousSlowMode,
    DenominatorNonpositive,
    FitFailure,
    OscillatoryResidual,
    OutsideEp3Window,
    PoleAtRealAxis,
    ValidationError,
    WindowNotReached,
    ZeroGammaB,
)
from .lindblad import Trajectory, evolve, step_bound
from .model import SystemConfig
from .spectra import eigenpairs

BURN_IN = 10.0  # in units of 1/kappa
WINDOW_START = math.exp(-0.5)
WINDOW_END = math.exp(-3.0)
MAX_RMS_RESIDUAL = 0.05
EP_MATCH_RTOL = 1e-9
DEFAULT_STEP_FRACTION = 0.2


# --- closed forms -------------------------------------------------------------

def purcell_rate(g_a: float, kappa: float) -> float:
    return g_a ** 2 / kappa


def cooperativity(g_b: float, gamma_b: float, kappa: float) -> float:
    if g_b == 0:
        return 0.0
    if gamma_b <= 0:
        raise ZeroGammaB("cooperativity diverges for gamma_b = 0; use the eigenvalue route")
    return g_b ** 2 / (gamma_b * kappa)


def inhibited_rate(gamma: float, c: float) -> float:
    return gamma / (1.0 + c)


def ep2_rate(gamma: float, kappa: float, gamma_b: float) -> float:
    """Purcell rate with the unexcited atom tuned to its EP2 coupling |kappa - gamma_b|/2."""
    if not (kappa > 0 and gamma_b > 0):
        raise ValidationError("ep2_rate needs kappa > 0 and gamma_b > 0")
    return gamma * (1.0 - ((kappa - gamma_b) / (kappa + gamma_b)) ** 2)


def three_atom_rate(gamma: float, g_b: float, gamma_c: float, kappa: float) -> float:
    """Rate with two unexcited atoms of equal coupling g_b and decays 2 kappa - gamma_c, gamma_c."""
    if not 0 < gamma_c < 2 * kappa:
        raise DenominatorNonpositive(f"need 0 < gamma_c < 2 kappa, got gamma_c={gamma_c!r}")
    return gamma / (1.0 + 2 * g_b ** 2 / (gamma_c * (2 * kappa - gamma_c)))


def ep3_rate(gamma: float, gamma_c: float, kappa: float) -> float:
    if not gamma_c / 2 < kappa < gamma_c:
        raise OutsideEp3Window(f"need gamma_c/2 < kappa < gamma_c, got {gamma_c!r}, {kappa!r}")
    r = gamma_c / kappa
    return gamma * r * (2 - r)


def detuned_rate(g_a: float, kappa: float, delta: float) -> float:
    return g_a ** 2 * kappa / (kappa ** 2 + delta ** 2)


def polariton_energies(kappa: float, gamma_b: float, g_b: float) -> tuple[complex, complex]:
    """Complex energies of the atom-B/cavity dressed states (principal square root)."""
    root = cmath.sqrt(g_b ** 2 - ((kappa - gamma_b) / 2) ** 2)
    centre = -0.5j * (kappa + gamma_b)
    return centre + root, centre - root


def enhanced_detuned_rate(g_a: float, g_b: float, gamma_b: float, kappa: float, delta: float) -> float:
    """Purcell rate of an atom detuned by ``delta`` next to a resonant unexcited atom."""
    if delta == 0 and gamma_b == 0:
        if g_b == 0:
            return detuned_rate(g_a, kappa, delta)
        raise PoleAtRealAxis("delta = gamma_b = 0 puts the atom-B pole on the real axis")
    z = g_b ** 2 / (delta + 1j * gamma_b) - 1j * kappa - delta
    if z == 0:
        raise PoleAtRealAxis("self-energy denominator vanishes")
    return g_a ** 2 * (1.0 / z).imag


def enhanced_detuned_rate_polariton(g_a: float, g_b: float, gamma_b: float, kappa: float,
                                    delta: float) -> float:
    """Same rate written through the polariton energies."""
    lp, lm = polariton_energies(kappa, gamma_b, g_b)
    den = (delta - lp) * (delta - lm)
    if den == 0:
        raise PoleAtRealAxis("delta coincides with a real polariton energy")
    return -g_a ** 2 * ((delta + 1j * gamma_b) / den).imag


def resonant_coupling(delta: float, kappa: float, gamma_b: float) -> float:
    """g_b at which the upper polariton energy Re(lambda_+) equals delta."""
    return math.sqrt(delta ** 2 + ((kappa - gamma_b) / 2) ** 2)


FORMULA_TAGS = ("Eq6", "Eq7", "Eq13", "Eq14", "Eq15", "Eq17", "none")


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= EP_MATCH_RTOL * max(1.0, abs(a), abs(b))


def closed_form(cfg: SystemConfig, tag: str | None = None) -> tuple[float | None, str]:
    """Closed-form amplitude rate for the excited atom, and the formula used.

    With ``tag`` given, that formula is evaluated on ``cfg`` (error if it does
    not apply); otherwise the most specific applicable one is chosen. A free
    decay ``gamma`` of the excited atom is added to the cavity-induced rate.
    For two unexcited atoms, "C" is the one with the larger decay.
    """
    a = cfg.atoms[cfg.excited_index]
    others = [cfg.atoms[i] for i in cfg.unexcited()]
    k = cfg.kappa
    gam = purcell_rate(a.g, k)
    resonant = all(o.delta == 0 for o in others)

    found: dict[str, float] = {}
    if resonant and all(o.g == 0 for o in others):
        if a.delta == 0:
            found["Eq6"] = gam
        found["Eq15"] = detuned_rate(a.g, k, a.delta)
    if resonant and len(others) == 1:
        b = others[0]
        if a.delta == 0 and (b.gamma > 0 or b.g == 0):
            found["Eq6"] = inhibited_rate(gam, cooperativity(b.g, b.gamma, k))
            if b.gamma != k and _close(b.g, abs(k - b.gamma) / 2):
                found["Eq7"] = ep2_rate(gam, k, b.gamma)
        if a.delta != 0 or b.gamma != 0:
            found["Eq17"] = enhanced_detuned_rate(a.g, b.g, b.gamma, k, a.delta)
    if resonant and len(others) == 2 and a.delta == 0:
        b, c = sorted(others, key=lambda o: o.gamma)
        in_window = c.gamma / 2 < k < c.gamma
        if _close(b.g, c.g) and _close(b.gamma + c.gamma, 2 * k) and 0 < c.gamma < 2 * k:
            found["Eq13"] = three_atom_rate(gam, b.g, c.gamma, k)
            if in_window and _close(b.g, (c.gamma - k) / math.sqrt(2)):
                found["Eq14"] = ep3_rate(gam, c.gamma, k)
        if tag == "Eq14" and in_window:
            found["Eq14"] = ep3_rate(gam, c.gamma, k)

    if tag is not None:
        if tag not in FORMULA_TAGS:
            raise ValidationError(f"unknown formula tag {tag!r}")
        if tag == "none":
            return None, "none"
        if tag not in found:
            raise ValidationError(f"formula {tag} does not apply to this configuration")
        return found[tag] + a.gamma, tag
    for t in ("Eq14", "Eq13", "Eq7", "Eq6", "Eq15", "Eq17"):
        if t in found:
            return found[t] + a.gamma, t
    return None, "none"


# --- numerical extraction -------------------------------------------------------

@dataclass(frozen=True)
class SlowMode:
    rate: float
    eigenvalue: complex
    overlap: float


def slow_mode_rate(m: EffectiveMatrix, excited_index: int) -> SlowMode:
    """Decay rate of the eigenmode that lives mostly on the excited atom."""
    spec = eigenpairs(m)
    weight = np.abs(spec.eigenvectors[excited_index, :])
    order = np.argsort(-weight, kind="stable")
    best = int(order[0])
    if len(order) > 1:
        second = int(order[1])
        distinct = abs(spec.eigenvalues[best] - spec.eigenvalues[second]) > 0
        if distinct and weight[best] - weight[second] < 0.01:
            raise AmbiguousSlowMode(
                f"two modes carry nearly equal weight on the excited atom "
                f"({weight[best]:.4f} vs {weight[second]:.4f})")
    lam = complex(spec.eigenvalues[best])
    return SlowMode(-lam.imag, lam, float(weight[best]))


def slow_mode(cfg: SystemConfig) -> SlowMode:
    return slow_mode_rate(build_effective_matrix(cfg), cfg.excited_index)


@dataclass(frozen=True)
class DecayReport:
    extracted_rate: float  # amplitude rate; the population decays at twice this
    population_rate: float
    fit_window: tuple[float, float]
    rms_residual: float
    n_points: int
    closed_form_prediction: float | None
    formula_tag: str
    relative_deviation: float | None

    def to_json(self) -> dict:
        d = asdict(self)
        d["fit_window"] = list(self.fit_window)
        return d


def fit_log_linear(t: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line through log(y); returns slope, intercept, rms residual."""
    ly = np.log(y)
    slope, icpt = np.polyfit(t, ly, 1)
    rms = float(np.sqrt(np.mean((ly - (slope * t + icpt)) ** 2)))
    return float(slope), float(icpt), rms


def extract_decay_rate(traj: Trajectory, state_index: int | None = None,
                       prediction: tuple[float | None, str] | None = None) -> DecayReport:
    """Fit exp(-2 G t) to one population after the polariton transient.

    The window runs from where the population has fallen to e^-0.5 of its
    value at t = 10/kappa until it reaches e^-3 of that value.
    """
    cfg = traj.cfg
    idx = cfg.excited_index if state_index is None else state_index
    t = traj.times
    pop = traj.populations[:, idx]
    t_burn = BURN_IN / cfg.kappa
    after = np.nonzero(t >= t_burn)[0]
    if len(after) == 0:
        raise WindowNotReached(f"trajectory ends before the burn-in time {t_burn}")
    ref = pop[after[0]]
    if not ref > 0:
        raise FitFailure("population vanishes at the end of burn-in")
    tail = after[after >= after[0]]
    start = tail[pop[tail] <= WINDOW_START * ref]
    end = tail[pop[tail] <= WINDOW_END * ref]
    if len(start) == 0 or len(end) == 0:
        raise WindowNotReached(
            f"population did not fall to e^-3 of its post-burn-in value by t={t[-1]:.6g}; "
            "extend t_end")
    i0, i1 = int(start[0]), int(end[0])
    sel = slice(i0, i1 + 1)
    if i1 - i0 + 1 < 3:
        raise WindowNotReached("fit window holds fewer than 3 snapshots; refine the snapshot grid")
    y = pop[sel]
    if np.any(y <= 0):
        raise FitFailure("non-positive population inside the fit window")
    slope, _, rms = fit_log_linear(t[sel], y)
    if rms > MAX_RMS_RESIDUAL:
        raise OscillatoryResidual(f"rms log-residual {rms:.3g} > {MAX_RMS_RESIDUAL}: decay is not exponential")
    rate = -slope / 2
    if not rate > 0:
        raise FitFailure(f"fitted rate {rate!r} is not positive")
    pred, tag = closed_form(cfg) if prediction is None else prediction
    dev = None if pred is None else (rate - pred) / pred
    return DecayReport(rate, 2 * rate, (float(t[i0]), float(t[i1])), rms, i1 - i0 + 1, pred, tag, dev)


def default_t_end(cfg: SystemConfig) -> float:
    """50 / (predicted rate); the slow-mode rate stands in when no closed form applies."""
    pred, _ = closed_form(cfg)
    if pred is None or not pred > 0:
        pred = slow_mode(cfg).rate
    if not pred > 0:
        raise ValidationError("excited atom does not decay; give t_end explicitly")
    return 50.0 / pred


def default_dt(cfg: SystemConfig) -> float:
    """min(0.01, step bound / 5).

    At the bound itself, strongly detuned or strongly coupled runs carry RK4
    errors of order 1e-6 over a full decay; a fifth of it keeps them below
    1e-8. Runs are advanced by propagator powers, so the finer step is cheap.
    """
    return min(0.01, DEFAULT_STEP_FRACTION * step_bound(cfg))


def fitted_rate(cfg: SystemConfig, t_end: float | None = None, dt: float | None = None) -> DecayReport:
    """Run the master equation and fit the excited-atom population."""
    t_end = default_t_end(cfg) if t_end is None else t_end
    dt = default_dt(cfg) if dt is None else dt
    return extract_decay_rate(evolve(cfg, t_end, dt))
