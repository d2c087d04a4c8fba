"""Purcell-decay control by unexcited atoms and exceptional points.

Single-excitation cavity QED: effective non-Hermitian matrices, their spectra
and exceptional points, master-equation propagation, and closed-form versus
fitted decay rates.
"""
from .effective import EffectiveMatrix, build_effective_matrix, characteristic_polynomial, dressed_block
from .errors import NumericalError, PurcellError, ValidationError
from .lindblad import Trajectory, amplitude_evolve, evolve, liouvillian_apply
from .model import AtomSpec, SystemConfig, basis, three_atom, two_atom, validate_config
from .spectra import Spectrum, coalescence, eigenpairs, ep2_coupling, ep3_parameters, splitting_exponent

__version__ = "0.1.0"
