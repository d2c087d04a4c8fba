import pytest
from hypothesis import given, strategies as st

from purcell.errors import NegativeRate, NonPositiveKappa, TooManyAtoms, WrongExcitationCount
from purcell.model import (
    AtomExcited, AtomSpec, Ground, OnePhoton, SystemConfig, basis, get_param, normalized,
    set_param, validate_config,
)

rates = st.floats(0, 10, allow_nan=False)


@st.composite
def configs(draw):
    n = draw(st.integers(1, 8))
    exc = draw(st.integers(0, n - 1))
    atoms = tuple(AtomSpec(draw(rates), draw(rates), draw(st.floats(-10, 10)), i == exc)
                  for i in range(n))
    return SystemConfig(draw(st.floats(0.01, 10)), atoms)


def test_minimal_config_is_valid():
    cfg = SystemConfig(1.0, (AtomSpec(0.05, 0.0, 0.0, True),))
    assert validate_config(cfg) is cfg


def test_reference_two_atom_config_is_valid(reference_two_atom):
    assert validate_config(reference_two_atom) is reference_two_atom


@pytest.mark.parametrize("cfg, err", [
    (SystemConfig(-1.0, (AtomSpec(0.05, excited=True),)), NonPositiveKappa),
    (SystemConfig(0.0, (AtomSpec(0.05, excited=True),)), NonPositiveKappa),
    (SystemConfig(1.0, (AtomSpec(-0.1, excited=True),)), NegativeRate),
    (SystemConfig(1.0, (AtomSpec(0.1, -1.0, excited=True),)), NegativeRate),
    (SystemConfig(1.0, (AtomSpec(0.1), AtomSpec(0.2))), WrongExcitationCount),
    (SystemConfig(1.0, (AtomSpec(0.1, excited=True), AtomSpec(0.2, excited=True))), WrongExcitationCount),
    (SystemConfig(1.0, tuple(AtomSpec(0.1, excited=i == 0) for i in range(9))), TooManyAtoms),
])
def test_invalid_configs(cfg, err):
    with pytest.raises(err):
        validate_config(cfg)


def test_basis_ordering():
    two = SystemConfig(1.0, (AtomSpec(0.05, excited=True), AtomSpec(3.0, 1.0)))
    assert basis(two) == [AtomExcited(0), AtomExcited(1), OnePhoton(), Ground()]
    one = SystemConfig(1.0, (AtomSpec(0.05, excited=True),))
    assert len(basis(one)) == 3
    three = SystemConfig(1.0, (AtomSpec(0.05, excited=True), AtomSpec(1), AtomSpec(1)))
    assert [str(b) for b in basis(three)] == ["atom0", "atom1", "atom2", "photon", "ground"]


@given(configs())
def test_basis_length_and_idempotence(cfg):
    assert len(basis(cfg)) == cfg.n_atoms + 2
    assert basis(cfg)[-1] == Ground()
    assert validate_config(validate_config(cfg)) == validate_config(cfg)


def test_normalized_divides_every_rate():
    cfg = SystemConfig(2.0, (AtomSpec(0.1, 0.4, -2.0, True),))
    n = normalized(cfg)
    assert n.kappa == 1.0
    assert n.atoms[0] == AtomSpec(0.05, 0.2, -1.0, True)
    assert n.kappa_scale == 2.0


def test_param_paths(reference_two_atom):
    assert get_param(reference_two_atom, "atoms[1].g") == 3.0
    cfg = set_param(reference_two_atom, "atoms[1].gamma", 2.5)
    assert cfg.atoms[1].gamma == 2.5 and reference_two_atom.atoms[1].gamma == 1.0
    with pytest.raises(ValueError):
        get_param(reference_two_atom, "atoms[5].g")
    with pytest.raises(ValueError):
        get_param(reference_two_atom, "omega")
