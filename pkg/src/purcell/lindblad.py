"""Master-equation propagation in the truncated (N+2)-state basis.

The density matrix includes the global ground state, so the trace is closed.
Jump operators act inside the truncated space as ``a = |G><photon|`` and
``S_i^- = |G><atom_i|``; with those, ``a^dag S_i^-`` is exactly the
|photon><atom_i| hop of the interaction Hamiltonian.

Time stepping is classical fixed-step RK4. Because the generator is linear
and time independent, one RK4 step is the matrix polynomial
``P = 1 + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24`` acting on vec(rho); runs are
advanced by powers of ``P`` between stored snapshots.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .effective import build_effective_matrix
from .errors import DimensionMismatch, StepTooLarge, TraceDrift
from .model import SystemConfig, validate_config

STEP_BOUND = 0.05
MAX_SNAPSHOTS = 5000
TRACE_DRIFT_LIMIT = 1e-6


def _operators(cfg: SystemConfig):
    d = cfg.dim
    p, gnd = cfg.photon_index, cfg.ground_index
    h = np.zeros((d, d), dtype=complex)
    jumps = []
    a = np.zeros((d, d), dtype=complex)
    a[gnd, p] = 1.0
    jumps.append((cfg.kappa, a))
    for i, atom in enumerate(cfg.atoms):
        h[i, i] = atom.delta
        h[i, p] = h[p, i] = atom.g
        s = np.zeros((d, d), dtype=complex)
        s[gnd, i] = 1.0
        jumps.append((atom.gamma, s))
    return h, jumps


def liouvillian_apply(cfg: SystemConfig, rho: np.ndarray) -> np.ndarray:
    """Time derivative of ``rho`` under the master equation."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (cfg.dim, cfg.dim):
        raise DimensionMismatch(f"rho has shape {rho.shape}, expected {(cfg.dim, cfg.dim)}")
    h, jumps = _operators(cfg)
    out = -1j * (h @ rho - rho @ h)
    for rate, c in jumps:
        cdc = c.conj().T @ c
        out -= rate * (cdc @ rho - 2 * c @ rho @ c.conj().T + rho @ cdc)
    return out


def liouvillian_matrix(cfg: SystemConfig) -> np.ndarray:
    """Superoperator acting on row-major vec(rho)."""
    d = cfg.dim
    eye = np.eye(d)
    h, jumps = _operators(cfg)
    # row-major: vec(A rho B) = kron(A, B.T) vec(rho)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for rate, c in jumps:
        cdc = c.conj().T @ c
        sup -= rate * (np.kron(cdc, eye) - 2 * np.kron(c, c.conj()) + np.kron(eye, cdc.T))
    return sup


def rk4_step(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_propagator(generator: np.ndarray, dt: float) -> np.ndarray:
    """One RK4 step of ``dy/dt = generator @ y`` as a matrix."""
    x = dt * generator
    eye = np.eye(generator.shape[0], dtype=complex)
    x2 = x @ x
    return eye + x + x2 / 2 + x2 @ x / 6 + x2 @ x2 / 24


def step_bound(cfg: SystemConfig) -> float:
    return STEP_BOUND / cfg.max_rate()


def check_step(cfg: SystemConfig, t_end: float, dt: float):
    validate_config(cfg)
    if not t_end > 0:
        raise StepTooLarge(f"t_end must be positive, got {t_end!r}")
    bound = step_bound(cfg)
    if not 0 < dt <= bound * (1 + 1e-12):
        raise StepTooLarge(
            f"dt={dt!r} violates the step bound dt <= {STEP_BOUND}/max_rate = {bound!r}")


def _schedule(t_end: float, dt: float, max_points: int):
    n_steps = t_end / dt
    n_steps = int(round(n_steps)) if abs(n_steps - round(n_steps)) < 1e-9 * n_steps else math.ceil(n_steps)
    n_steps = max(n_steps, 1)
    stride = math.ceil(n_steps / max_points)
    marks = list(range(0, n_steps + 1, stride))
    if marks[-1] != n_steps:
        marks.append(n_steps)
    return np.array(marks), stride


def _march(prop: np.ndarray, y0: np.ndarray, marks: np.ndarray, stride: int, after=None):
    jump = np.linalg.matrix_power(prop, stride)
    out = [y0]
    y = y0
    for k in range(1, len(marks)):
        n = marks[k] - marks[k - 1]
        y = (jump if n == stride else np.linalg.matrix_power(prop, n)) @ y
        if after is not None:
            y = after(y)
        out.append(y)
    return np.array(out)


@dataclass(frozen=True)
class Trajectory:
    cfg: SystemConfig
    times: np.ndarray
    states: np.ndarray  # (T, dim, dim)
    dt: float
    steps: np.ndarray  # RK4 step index of each snapshot

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.einsum("tkk->tk", self.states))

    @property
    def trace_error(self) -> np.ndarray:
        return np.real(np.einsum("tkk->t", self.states)) - 1.0

    def min_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.states)[:, 0]

    def columns(self) -> list[str]:
        n = self.cfg.n_atoms
        return (["t"] + [f"pop_atom_{i}" for i in range(n)]
                + ["pop_photon", "pop_ground", "trace_error"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        pops, terr = self.populations, self.trace_error
        for k, t in enumerate(self.times):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in pops[k]] + [repr(float(terr[k]))])
        return buf.getvalue()


def evolve(cfg: SystemConfig, t_end: float, dt: float, max_points: int = MAX_SNAPSHOTS) -> Trajectory:
    """Propagate rho(0) = |excited atom><excited atom| with fixed-step RK4."""
    check_step(cfg, t_end, dt)
    d = cfg.dim
    rho0 = np.zeros((d, d), dtype=complex)
    e = cfg.excited_index
    rho0[e, e] = 1.0
    prop = rk4_propagator(liouvillian_matrix(cfg), dt)
    marks, stride = _schedule(t_end, dt, max_points)

    def resymmetrize(vec):
        r = vec.reshape(d, d)
        r = 0.5 * (r + r.conj().T)
        drift = abs(np.trace(r).real - 1.0)
        if drift > TRACE_DRIFT_LIMIT:
            raise TraceDrift(f"|tr rho - 1| = {drift:.3e} exceeds {TRACE_DRIFT_LIMIT}")
        return r.reshape(-1)

    vecs = _march(prop, rho0.reshape(-1), marks, stride, resymmetrize)
    return Trajectory(cfg, marks * dt, vecs.reshape(-1, d, d), dt, marks)


@dataclass(frozen=True)
class AmplitudeTrajectory:
    cfg: SystemConfig
    times: np.ndarray
    psi: np.ndarray  # (T, N+1)
    steps: np.ndarray

    def outer(self) -> np.ndarray:
        """psi_i psi_j^* at every snapshot."""
        return np.einsum("ti,tj->tij", self.psi, self.psi.conj())


def amplitude_evolve(cfg: SystemConfig, t_end: float, dt: float,
                     max_points: int = MAX_SNAPSHOTS) -> AmplitudeTrajectory:
    """Integrate dpsi/dt = -i M psi with the same RK4 scheme and snapshot grid as evolve."""
    check_step(cfg, t_end, dt)
    m = build_effective_matrix(cfg).entries
    psi0 = np.zeros(m.shape[0], dtype=complex)
    psi0[cfg.excited_index] = 1.0
    prop = rk4_propagator(-1j * m, dt)
    marks, stride = _schedule(t_end, dt, max_points)
    return AmplitudeTrajectory(cfg, marks * dt, _march(prop, psi0, marks, stride), marks)
