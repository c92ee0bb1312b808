import math

import numpy as np
import pytest
from numpy.polynomial import chebyshev as C

from gqht.interp import ParityPolynomial
from gqht.qsp import (
    CompletedPair,
    InconsistentSequenceError,
    NormViolationError,
    QspSequence,
    SynthesisError,
    equivalent_phases,
    extract_polynomials,
    from_rotation_angles,
    gen_complex_poly,
    gen_phases,
    qsp_from_oracle,
    qsp_unitary,
    signal,
    synthesize,
)
from gqht.su2_core import KET_0, equal_up_to_phase, is_unitary, rx, z_phase

ALPHA = math.acos(-1 / 3)
CUBIC = ParityPolynomial.from_power_coeffs([0, -1 / 3, 0, 4 / 3])


def direct_top_left(phases, x):
    """Independent evaluation: multiply the 2x2 matrices out by hand."""
    s = math.sqrt(1 - x * x)
    w = np.array([[x, 1j * s], [1j * s, x]])
    u = np.diag([np.exp(1j * phases[0]), np.exp(-1j * phases[0])])
    for phi in phases[1:]:
        u = u @ w @ np.diag([np.exp(1j * phi), np.exp(-1j * phi)])
    return u


def test_identity_phases_give_the_signal():
    for x in (-0.7, 0.0, 0.3, 1.0):
        assert np.allclose(qsp_unitary([0.0, 0.0], x), signal(x))


def test_signal_rejects_out_of_range():
    with pytest.raises(ValueError):
        qsp_unitary([0.0, 0.0], 1.5)


def test_oracle_signal_matches_cosine_half_angle():
    for theta in np.linspace(0, 2 * math.pi, 9):
        phases = [0.1, -0.4, 0.9]
        assert np.allclose(qsp_from_oracle(phases, rx(theta)), qsp_unitary(phases, math.cos(theta / 2)))


def test_extracted_polynomials_match_direct_products():
    rng = np.random.default_rng(7)
    for k in (1, 2, 5, 12):
        phases = rng.uniform(-math.pi, math.pi, k + 1)
        pair = extract_polynomials(phases)
        assert len(pair.P) == k + 1 and len(pair.Q) == k
        for x in np.linspace(-1, 1, 17):
            u = direct_top_left(phases, x)
            assert abs(u[0, 0] - pair.p_at(x)) < 1e-12
            assert abs(u[0, 1] - 1j * math.sqrt(1 - x * x) * pair.q_at(x)) < 1e-12
        assert pair.unit_defect() < 1e-12


def test_extracted_parities():
    pair = extract_polynomials([0.3, 1.1, -0.2, 0.7])
    assert np.max(np.abs(pair.P[0::2])) < 1e-14  # odd k: odd P
    assert np.max(np.abs(pair.Q[1::2])) < 1e-14  # even Q


def test_bad_phase_lists():
    with pytest.raises(InconsistentSequenceError):
        extract_polynomials([])
    with pytest.raises(InconsistentSequenceError):
        extract_polynomials([0.0, float("nan")])


def test_cubic_golden_phases():
    seq = synthesize(CUBIC)
    golden = from_rotation_angles([0, -ALPHA, ALPHA, 0])
    assert equivalent_phases(seq.phases, golden)
    xs = np.linspace(-1, 1, 1000)
    assert max(abs(seq.amplitude(x) - CUBIC(x)) for x in xs) < 1e-10


def test_from_rotation_angles():
    # R_z(beta) = e^{-i beta/2 Z}
    assert np.allclose(z_phase(from_rotation_angles([0.8])[0]), np.diag([np.exp(-0.4j), np.exp(0.4j)]))


def test_equivalence_classes():
    a = [0.0, 0.3, -0.7, 0.2]
    assert equivalent_phases(a, [-v for v in a])
    assert equivalent_phases(a, a[::-1])
    assert equivalent_phases(a, [0.1, 0.3, -0.7, 0.1])
    assert equivalent_phases(a, [0.0, 0.3 + math.pi, -0.7, 0.2])
    assert not equivalent_phases(a, [0.0, 0.31, -0.7, 0.2])
    assert not equivalent_phases(a, a[:3])


def test_real_route_keeps_p_exactly():
    pair = gen_complex_poly(CUBIC, "real")
    assert np.allclose(pair.P.real, CUBIC.coeffs, atol=1e-14)
    assert np.max(np.abs(pair.P.imag)) < 1e-14
    assert pair.unit_defect() < 1e-12


def test_imag_route_when_real_route_is_closed():
    # |p(1)| < 1, so no completion with P = p exists
    p = ParityPolynomial.from_power_coeffs([0, 0.5])
    with pytest.raises(SynthesisError):
        gen_complex_poly(p, "real")
    pair = gen_complex_poly(p, "imag")
    assert np.allclose(pair.P.real, p.coeffs, atol=1e-12)
    assert np.max(np.abs(pair.Q.real)) < 1e-12
    assert pair.unit_defect() < 1e-9
    seq = synthesize(p)
    for x in np.linspace(-1, 1, 41):
        assert abs(seq.amplitude(x).real - p(x)) < 1e-9


def test_norm_violation():
    with pytest.raises(NormViolationError):
        gen_complex_poly(ParityPolynomial.from_power_coeffs([0, 1.2]))


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 9])
def test_chebyshev_polynomials_synthesize(degree):
    # T_d has |T_d| <= 1 with many double roots of 1 - T_d^2: the hardest case for completion
    p = ParityPolynomial.from_coeffs([0.0] * degree + [1.0])
    seq = synthesize(p)
    for x in np.linspace(-1, 1, 101):
        assert abs(seq.amplitude(x) - C.chebval(x, p.coeffs)) < 1e-9


def test_gen_phases_round_trip_random():
    rng = np.random.default_rng(11)
    for _ in range(20):
        k = int(rng.integers(1, 16))
        phases = rng.uniform(-math.pi, math.pi, k + 1)
        pair = extract_polynomials(phases)
        back, prep, meas = gen_phases(pair)
        assert extract_polynomials(back).max_coeff_distance(pair) < 1e-8
        assert equal_up_to_phase(qsp_unitary(back, 0.37), qsp_unitary(phases, 0.37), 1e-8)


def test_gen_phases_without_exact_data():
    pair = extract_polynomials([0.2, -0.5, 0.4])
    plain = CompletedPair(pair.P.copy(), pair.Q.copy())
    back, _, _ = gen_phases(plain)
    assert extract_polynomials(back).max_coeff_distance(pair) < 1e-8


def test_sequence_amplitude_is_a_polynomial_of_its_degree():
    seq = synthesize(CUBIC)
    nodes = np.cos(np.pi * (np.arange(seq.degree + 1) + 0.5) / (seq.degree + 1))
    fit = C.chebfit(nodes, [seq.amplitude(x) for x in nodes], seq.degree)
    xs = np.linspace(-1, 1, 200)
    assert np.max(np.abs(C.chebval(xs, fit) - [seq.amplitude(x) for x in xs])) < 1e-9
    assert is_unitary(seq.unitary(0.4))
    assert seq.to_json()["prep"] == "0"


def test_sequence_json():
    seq = QspSequence((0.0, 0.0), KET_0, KET_0)
    assert seq.to_json() == {"phases": [0.0, 0.0], "degree": 1, "prep": "0", "meas": "0"}
