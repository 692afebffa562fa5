import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import strings_spec
from phstab.fundsol import propagate
from phstab.generation import check_contraction_generator
from phstab.spectral import find_imaginary_eigenvalues
from phstab.strings import (Irrational, ParityClass, StringNetworkParams, as_speed,
                            build_string_network, classify_constant_strings,
                            closed_form_psi, eigenfrequencies, eta, eta_period, min_eta,
                            min_eta_window, params_from_dict, parity_class,
                            rational_dependence)
from phstab.system import validate_system

E_O, O_O, NEITHER = ParityClass.EVEN_OVER_ODD, ParityClass.ODD_OVER_ODD, ParityClass.NEITHER

# set membership by enumeration, independent of lowest-terms arithmetic
_RANGE = range(-50, 51)
EVEN_ODD = {Fraction(2 * k, 1 + 2 * l) for k in _RANGE for l in _RANGE}
ODD_ODD = {Fraction(1 + 2 * k, 1 + 2 * l) for k in _RANGE for l in _RANGE}


def brute_class(r):
    if r in EVEN_ODD:
        return E_O
    if r in ODD_ODD:
        return O_O
    return NEITHER


def brute_dependence(x, y, bound=60):
    for k in range(1, bound + 1):
        for n in range(1, bound + 1):
            if (k * x - n * y).denominator == 1:
                return k, n
    return None


def test_network_structure():
    params = StringNetworkParams(rho=(1, 1, 1), T=(1, 1, 1), beta=2.5)
    spec = build_string_network(params)
    assert (spec.n, spec.N) == (6, 1)
    assert validate_system(spec) == []
    assert check_contraction_generator(spec).generates
    assert spec.W_B[2, 0] == 2.5
    assert np.array_equal(spec.W_B[2, :6], [2.5, 1, 0, 1, 0, 1])
    assert np.array_equal(spec.P[1], np.kron(np.eye(3), [[0, 1], [1, 0]]))
    assert np.allclose(spec.H.values[0].diagonal(), [1, 1, 1, 1, 1, 1])


def test_speeds_from_density_and_tension():
    assert StringNetworkParams(rho=(1, 1, 4), T=(1, 1, 1)).speeds() == (1, 1, 2)
    assert StringNetworkParams(rho=(1, 0.25, 9), T=(4, 1, 4)).speeds() == (
        Fraction(1, 2), Fraction(1, 2), Fraction(3, 2))
    sp = StringNetworkParams(rho=(1, 2, 3), T=(1, 1, 1), independence_asserted=True).speeds()
    assert sp[0] == 1
    assert isinstance(sp[1], Irrational) and sp[1].independence_asserted
    assert sp[2].value == pytest.approx(math.sqrt(3))


def test_params_validation():
    with pytest.raises(ValueError):
        StringNetworkParams(rho=(1, -1, 1), T=(1, 1, 1))
    with pytest.raises(ValueError):
        StringNetworkParams(rho=(1, 1), T=(1, 1, 1))
    with pytest.raises(ValueError):
        StringNetworkParams(rho=(1, 1, 1), T=(1, 1, 1), interval=(1.0, 0.0))
    with pytest.raises(ValueError, match="disagree"):
        StringNetworkParams(rho=(1, 1, 1), T=(1, 1, 1), speeds_exact=((1, 1), (1, 1), (2, 1)))
    assert StringNetworkParams(rho=(1, 1, 1), T=(1, 1, 1), beta=-1.0).beta == -1.0


def test_params_from_dict():
    p = params_from_dict({"rho": [1, 1, 4], "T": [1, 1, 1], "beta": 1, "interval": [0, 2],
                          "speeds_exact": [[1, 1], [1, 1], [2, 1]]})
    assert p.speeds() == (1, 1, 2) and p.length == 2.0
    with pytest.raises(ValueError, match="missing"):
        params_from_dict({"rho": [1, 1, 1]})
    with pytest.raises(ValueError, match="unknown"):
        params_from_dict({"rho": [1, 1, 1], "T": [1, 1, 1], "beta": 1, "damping": 2})


def test_as_speed_forms():
    assert as_speed("3/4") == Fraction(3, 4)
    assert as_speed((6, 8)) == Fraction(3, 4)
    assert as_speed(2) == 2
    with pytest.raises(ValueError):
        as_speed(0)
    with pytest.raises(ValueError):
        as_speed([1, 2, 3])


def test_closed_form_special_values():
    assert np.allclose(closed_form_psi(1.7, 0.4, 0.0, 1.0), np.eye(2))
    assert np.allclose(closed_form_psi(1.0, 1.0, math.pi, 1.0), -np.eye(2), atol=1e-15)


def test_closed_form_matches_network_blocks():
    params = StringNetworkParams(rho=(4, 1, 9), T=(1, 1, 1))
    Psi = propagate(build_string_network(params), 3.7j).value_at_b
    for k, (c, rho) in enumerate(zip((2, 1, 3), (4, 1, 9))):
        block = Psi[2 * k:2 * k + 2, 2 * k:2 * k + 2]
        assert np.max(np.abs(block - closed_form_psi(c, rho, 3.7, 1.0))) < 1e-10


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 20), st.floats(0.05, 20), st.floats(-100, 100), st.floats(0, 3))
def test_closed_form_unimodular(c, rho, om, s):
    assert abs(np.linalg.det(closed_form_psi(c, rho, om, s)) - 1) < 1e-12


def test_eta_values():
    assert eta((1, 2, 3), 0.0) == 1.0
    assert eta((2, 1, 1), math.pi / 2) < 1e-15
    # squared form for the (1, 1, 2) network reduces to 3u^2 - 3u + 1, u = sin^2
    w = np.linspace(-3, 3, 101)
    u = np.sin(w) ** 2
    assert np.allclose(eta((1, 1, 2), w, squared=True), 3 * u ** 2 - 3 * u + 1)


def test_eta_scale_does_not_move_zeros():
    w = np.linspace(0, 10, 1001)
    a = eta((2, 1, 1), w)
    b = eta((2, 1, 1), w, sin_scale=0.3)
    assert np.array_equal(a < 1e-12, b < 1e-12)
    assert eta((2, 1, 1), math.pi / 2, sin_scale=5.0) < 1e-14


rational = st.builds(Fraction, st.integers(1, 8), st.integers(1, 8))


@settings(max_examples=60, deadline=None)
@given(st.tuples(rational, rational, rational), st.floats(-50, 50))
def test_eta_even_and_periodic(speeds, om):
    P = eta_period(speeds)
    assert abs(eta(speeds, om) - eta(speeds, -om)) < 1e-10
    assert abs(eta(speeds, om) - eta(speeds, om + P)) < 1e-10


def test_period_uses_denominators():
    assert eta_period((Fraction(1, 2), Fraction(1, 3), 1)) == pytest.approx(12 * math.pi)
    assert eta_period((1, 1, 2), b_minus_a=2.0) == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        eta_period((1, Irrational(math.sqrt(2)), 1))


def test_example_squared_minimum():
    res = min_eta((1, 1, 2), 1.0, (0.0, 2 * math.pi), grid_points=100_000, squared=True)
    assert res.grid_min >= 0.25 - 1e-9
    assert abs(res.refined_min - 0.25) < 1e-9
    assert abs(math.sin(res.refined_argmin) ** 2 - 0.5) < 1e-4


def test_parity_examples():
    assert parity_class(Fraction(2)) is E_O
    assert parity_class(Fraction(1)) is O_O
    assert parity_class(Fraction(1, 2)) is NEITHER
    assert parity_class((6, 9)) is E_O
    assert parity_class(Fraction(-3, 5)) is O_O
    with pytest.raises(ZeroDivisionError):
        parity_class((1, 0))


def test_parity_matches_enumeration():
    for p in range(1, 31):
        for q in range(1, 31):
            r = Fraction(p, q)
            assert parity_class(r) is brute_class(r), r


odd_odd = st.builds(lambda k, l: Fraction(2 * k + 1, 2 * l + 1), st.integers(0, 20), st.integers(0, 20))


@settings(max_examples=100, deadline=None)
@given(st.tuples(rational, rational, rational), odd_odd)
def test_parity_invariant_under_common_scaling(speeds, s):
    scaled = tuple(c * s for c in speeds)
    assert classify_constant_strings(speeds).ratio_classes == \
        classify_constant_strings(scaled).ratio_classes


def test_rational_dependence_examples():
    assert rational_dependence(Fraction(1, 2), Fraction(1, 3)) == (2, 3)
    assert rational_dependence(Fraction(2, 7), Fraction(2, 7)) == (1, 1)
    assert rational_dependence(1, Fraction(3, 8)) == (1, 8)


def test_rational_dependence_matches_search():
    values = [Fraction(p, q) for p in range(1, 13) for q in range(1, 8)]
    for x in values[::5]:
        for y in values[::3]:
            k, n = rational_dependence(x, y)
            assert (k * x - n * y).denominator == 1
            assert (k, n) == brute_dependence(x, y), (x, y)


def test_classify_example_stable_both_ways():
    v = classify_constant_strings((1, 1, 2))
    assert v.asymptotic_status == "stable" and v.exponentially_stable
    assert v.ratio_classes == {"I/II": "O/O", "I/III": "neither", "II/III": "neither"}
    assert v.eta_minimum.refined_min > 0.4
    assert v.families == ()


def test_classify_unstable_lists_family():
    v = classify_constant_strings((2, 1, 1))
    assert v.asymptotic_status == "unstable" and not v.asymptotically_stable
    assert v.exponentially_stable is False
    assert v.ratio_classes["I/II"] == "E/O"
    assert {f.pair for f in v.families} == {("I", "II"), ("I", "III"), ("II", "III")}
    assert all(abs(f.base_omega - math.pi / 2) < 1e-15 for f in v.families)
    assert v.eta_minimum.refined_min < 1e-9


def test_irrational_speeds():
    sp = (1, Irrational(math.sqrt(2), True), Irrational(math.sqrt(3), True))
    v = classify_constant_strings(sp)
    assert v.asymptotic_status == "stable"
    assert v.exponentially_stable is False
    unasserted = classify_constant_strings((1, Irrational(math.sqrt(2)), 1))
    assert unasserted.asymptotic_status == "requires assertion"
    assert unasserted.exponential_status == "requires assertion"
    # a rational pair can still be destabilising
    mixed = classify_constant_strings((1, Irrational(math.sqrt(2)), 1))
    assert mixed.ratio_classes["I/III"] == "O/O"
    bad = classify_constant_strings((2, Irrational(math.sqrt(2)), 1))
    assert bad.asymptotic_status == "unstable"


def test_kronecker_window_minima_decrease():
    sp = (1.0, math.sqrt(2), math.sqrt(3))
    m2 = min_eta_window(sp, 100.0)[0]
    m3 = min_eta_window(sp, 10_000.0)[0]
    assert 0 < m3 < m2


@pytest.mark.parametrize("speeds", [(1, 1, 1), (2, 1, 1), (Fraction(2, 3), Fraction(3, 4), 4),
                                    (Fraction(1, 2), Fraction(1, 7), Fraction(1, 4))])
def test_families_match_numerical_hits(speeds):
    rho = tuple(float(c) ** 2 for c in speeds)
    spec = build_string_network(StringNetworkParams(rho=rho, T=(1, 1, 1)))
    omega = min(2 * eta_period(speeds), 30.0)
    grid = int(2 * omega * max(float(c) for c in speeds) * 8) + 1
    hits = [h.omega for h in find_imaginary_eigenvalues(spec, omega, grid)]
    exact = eigenfrequencies(speeds, 1.0, omega)
    assert np.allclose(sorted(hits), exact, atol=1e-8)
