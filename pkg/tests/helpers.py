"""Shared numerical helpers for the test suite."""
import numpy as np

from purcell.model import AtomSpec, SystemConfig, three_atom, two_atom
from purcell.spectra import ep2_coupling, ep3_parameters

# one PASS/FAIL line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def match_error(a, b) -> float:
    """Largest distance after greedily pairing two multisets of complex numbers."""
    a, b = list(np.asarray(a, dtype=complex)), list(np.asarray(b, dtype=complex))
    assert len(a) == len(b)
    worst = 0.0
    while a:
        d = np.abs(np.subtract.outer(a, b))
        i, j = np.unravel_index(np.argmin(d), d.shape)
        worst = max(worst, float(d[i, j]))
        a.pop(i)
        b.pop(j)
    return worst


def regression_configs():
    """Scenarios every conservation/factorization check runs over."""
    gamma_b3, g_b3 = ep3_parameters(1.0, 1.95)
    return {
        "single": SystemConfig(1.0, (AtomSpec(0.05, excited=True),)),
        "coop0": two_atom(0.05, 0.0, 1.0),
        "coop3": two_atom(0.05, 3.0, 1.0),
        "coop5": two_atom(0.05, 5.0, 1.0),
        "ep2": two_atom(0.05, ep2_coupling(1.0, 5.0), 5.0),
        "ep2_mirror": two_atom(0.05, ep2_coupling(1.0, 0.2), 0.2),
        "ep3": three_atom(0.05, g_b3, gamma_b3, 1.95),
        "gamma_a": two_atom(0.05, 0.0, 0.0, gamma_a=0.2),
        "detuned": two_atom(0.05, 5.0, 1.0, delta_a=5.0),
    }
