from math import pi, sqrt

import numpy as np
import pytest

from ccibell.amplitudes import HALF, RadialIntegrals, t1, t2
from ccibell.config import (
    ALPHA_1C_OVER_1O,
    MODE_LABELS,
    Kappas,
    PhaseSet,
    amplitude_moduli,
    balancing_rhs,
    build_configuration,
    d2_parameter,
    geometry,
    geometry_checks,
    material_phases,
    phase_lock,
    report,
)
from ccibell.errors import DomainError
from ccibell.states import combined_state

H = HALF
X, Y, Z = np.eye(3)


def test_geometry_vectors():
    g = geometry()
    np.testing.assert_allclose(g.kdet, (sqrt(2) * X - Z) / sqrt(3), atol=1e-15)
    np.testing.assert_allclose(g.k["1o"], Y)
    np.testing.assert_allclose(g.k["2o"], -g.eps["1o"].real)
    np.testing.assert_allclose(g.k["1c"], g.kdet)
    np.testing.assert_allclose(g.k["2c"], (X - 2 * sqrt(2) * Z) / 3)
    np.testing.assert_allclose(g.eps["2o"], Y)
    e1c = (sqrt(5 / 3 + sqrt(2)) * (X + sqrt(2) * Z) - 1j * sqrt(9 - 3 * sqrt(2)) * Y) / sqrt(14)
    np.testing.assert_allclose(g.eps["1c"], e1c, atol=1e-15)
    np.testing.assert_allclose(g.eps["2c"], ((2 * sqrt(2) * X + Z) / 3 + 1j * Y) / sqrt(2), atol=1e-15)


def test_geometry_invariants():
    checks = geometry_checks(geometry())
    assert all(ok for _, ok, _ in checks)
    names = [n for n, _, _ in checks]
    assert any("right-handed" in n for n in names)
    assert sum("eps_" in n and ". k_" in n for n in names) == 4


def test_perturbed_polarization_fails_transversality():
    g = geometry()
    e = g.eps["2c"] + 1e-3 * g.k["2c"]
    g.eps["2c"] = e / np.linalg.norm(e)
    failed = [n for n, ok, _ in geometry_checks(g) if not ok]
    assert failed == ["eps_2c . k_2c = 0"]


def test_kappa1_examples():
    base = RadialIntegrals.random(3)
    assert material_phases(base.replace(d1_p12=1, d1_p32=2)).kappa1 == pytest.approx(0.0, abs=1e-15)
    assert material_phases(base.replace(d1_p12=2, d1_p32=1)).kappa1 == pytest.approx(pi)


@pytest.mark.parametrize("seed", range(10))
def test_balancing_rhs_real_positive(seed):
    rad = RadialIntegrals.random(seed, d52=0.3j)
    k = material_phases(rad)
    for v in (k.kappa1, k.kappa2o, k.kappa2c):
        assert -pi < v <= pi
    for val in balancing_rhs(rad, 1.3).values():
        assert val.real > 0 and abs(val.imag) <= 1e-12 * abs(val)


def test_zero_bracket_is_domain_error():
    rad = RadialIntegrals.random(0).replace(d1_p12=0.5, d1_p32=0.5)
    with pytest.raises(DomainError):
        material_phases(rad)
    with pytest.raises(DomainError):
        amplitude_moduli(RadialIntegrals.random(0), 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_moduli_balance_amplitudes(seed):
    rad = RadialIntegrals.random(seed)
    g = geometry()
    m = amplitude_moduli(rad, 0.8)
    one = abs(t1(H, -H, g.eps["1o"], g.kdet, rad)) * m.a1o
    two = abs(t2(-H, -H, g.eps["2o"], g.kdet, rad)) * m.a2o**2
    assert one == pytest.approx(two, rel=1e-10)
    one_c = abs(t1(H, -H, g.eps["1c"], g.kdet, rad)) * m.a1c
    two_c = abs(t2(H, -H, g.eps["2c"], g.kdet, rad)) * m.a2c**2
    assert one_c == pytest.approx(two_c, rel=1e-10)
    assert m.a1c / m.a1o == pytest.approx(sqrt(7 / (2 * (3 - sqrt(2)))), rel=1e-14)
    assert ALPHA_1C_OVER_1O == pytest.approx(sqrt(7 / (2 * (3 - sqrt(2)))))


def test_lambda_scaling(rad):
    a, b = amplitude_moduli(rad, 1.0).as_array(), amplitude_moduli(rad, 4.0).as_array()
    np.testing.assert_allclose(b / a, [4, 2, 4, 2], rtol=1e-14)


def test_phase_lock_zero():
    p = phase_lock(0.0, Kappas(0.0, 0.0, 0.0))
    assert [p[l] for l in MODE_LABELS] == pytest.approx([-pi / 2, -pi / 2, 0.0, 0.0])


@pytest.mark.parametrize("phi", np.linspace(-pi, pi, 7))
def test_phase_lock_identities(phi, rng):
    kap = Kappas(*rng.uniform(-pi, pi, size=3))
    ph = PhaseSet.locked(phi, kap)
    assert np.exp(1j * ph.theta_o) == pytest.approx(np.exp(1j * (pi / 2 - phi)))
    assert np.exp(1j * (ph.phi_c + ph.theta_c)) == pytest.approx(np.exp(-1j * phi))
    assert ph.phi2c == 0.0


def test_phase_set_continuous_in_phi(rad):
    kap = material_phases(rad)
    phis = np.linspace(-pi, pi, 2001)
    sets = [PhaseSet.locked(p, kap) for p in phis]
    for label in MODE_LABELS:
        vals = np.array([s.laser_phase(label) for s in sets])
        steps = np.angle(np.exp(1j * np.diff(vals)))
        assert np.max(np.abs(steps)) < 0.01


def test_d2_parameter(rng):
    rad = RadialIntegrals.random(5)
    assert d2_parameter(rad, material_phases(rad)) == 0
    for seed in range(5):
        d52 = complex(*rng.normal(size=2))
        rad = RadialIntegrals.random(seed, d52=d52)
        d2 = d2_parameter(rad, material_phases(rad))
        expected = 3 * abs(d52) / abs(5 * rad.d2_d32_p12 + rad.d2_d32_p32)
        assert abs(d2) == pytest.approx(expected, rel=1e-13)


def test_build_configuration(rad):
    cfg = build_configuration(rad, 1.0, 0.0)
    assert cfg.d2 == 0
    assert [m.order for m in cfg.modes] == [1, 2, 1, 2]
    np.testing.assert_allclose(np.abs(cfg.alphas), cfg.moduli.as_array(), rtol=1e-14)
    for m in cfg.modes:
        assert np.angle(m.alpha) == pytest.approx(np.angle(np.exp(1j * cfg.phases.laser_phase(m.label))))
    assert build_configuration(rad, 1.0, 0.7).phases == build_configuration(rad, 2.0, 0.7).phases


def test_d2_override_zero_is_identity():
    rad = RadialIntegrals.random(11)
    a = combined_state(build_configuration(rad, 1.0, 0.4))
    b = combined_state(build_configuration(rad, 1.0, 0.4, d2_override=0))
    np.testing.assert_array_equal(a.spin_closed, b.spin_closed)
    assert a.nf == b.nf


def test_report_mentions_every_mode(rad):
    text = report(build_configuration(rad, 1.0, 0.2))
    for label in MODE_LABELS:
        assert f"mode {label}" in text
    assert "kappa1" in text and "d2" in text
