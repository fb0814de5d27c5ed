from math import pi

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccibell.amplitudes import RadialIntegrals
from ccibell.bell import (
    SIGMA_Z,
    TSIRELSON,
    MeasurementSettings,
    bloch_correlations,
    bloch_vector,
    chsh,
    chsh_batch,
    chsh_spin_optimal,
    correlator,
    correlator_terms,
    displaced_parity_overlap,
    gamma_elements,
    gamma_matrix,
    zeta_from_bloch,
)
from ccibell.config import MODE_LABELS, Kappas, PhaseSet, build_configuration
from ccibell.errors import DomainError
from ccibell.states import combined_state, make_state

PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


def random_settings(rng, scale=1.5):
    return MeasurementSettings(
        complex(*rng.uniform(-pi, pi, 2)), complex(*rng.uniform(-pi, pi, 2)),
        scale * rng.uniform(size=4), rng.uniform(0, 2 * pi, 4),
        scale * rng.uniform(size=4), rng.uniform(0, 2 * pi, 4),
    )


def state_at(rad, phi, lam=0.05, d2=None):
    return combined_state(build_configuration(rad, lam, phi, d2))


def test_gamma_identity_and_spectrum(rng):
    np.testing.assert_allclose(gamma_matrix(0), SIGMA_Z, atol=1e-15)
    for _ in range(50):
        g = gamma_matrix(complex(*rng.normal(scale=2, size=2)))
        np.testing.assert_allclose(g, g.conj().T, atol=1e-14)
        np.testing.assert_allclose(np.linalg.eigvalsh(g), [-1, 1], atol=1e-12)


def test_gamma_closed_form(rng):
    for _ in range(20):
        z = complex(*rng.normal(scale=2, size=2))
        c, od = gamma_elements(z)
        g = gamma_matrix(z)
        assert g[0, 0] == pytest.approx(c, abs=1e-13) and g[0, 1] == pytest.approx(od, abs=1e-13)
        n = bloch_vector(z)
        np.testing.assert_allclose(np.einsum("k,kij->ij", n, PAULI), g, atol=1e-13)


def test_zeta_from_bloch_round_trip(rng):
    for _ in range(50):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        np.testing.assert_allclose(bloch_vector(zeta_from_bloch(n)), n, atol=1e-12)
        assert abs(zeta_from_bloch(n)) <= pi / 2 + 1e-15


def test_open_spin_expectation(rad, rng):
    for _ in range(10):
        phi = rng.uniform(-pi, pi)
        z = complex(*rng.normal(size=2))
        f = state_at(rad, phi).spin_open
        val = np.vdot(f, gamma_matrix(z) @ f).real
        assert val == pytest.approx(-np.sin(2 * abs(z)) * np.sin(phi + np.angle(z)), abs=1e-13)


def test_overlap_special_cases(rng):
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    n2 = np.vdot(a, a).real
    assert displaced_parity_overlap(a, a, np.zeros(4)) == pytest.approx(2 * np.exp(-n2) - 1, abs=1e-15)
    assert displaced_parity_overlap(a, a, -a) == pytest.approx(1.0, abs=1e-14)


def test_correlator_large_field_limit(rad):
    for phi in np.linspace(-pi, pi, 9):
        s = state_at(rad, phi, lam=40.0)
        # branches decouple, <sigma_z> is 0 (open) and -cos(phi) (closed), and A(0) -> -1
        assert correlator(s, 0j, np.zeros(4)) == pytest.approx(np.cos(phi) / 2, abs=1e-12)


def test_correlator_eta_domain(rad):
    s = state_at(rad, 0.1)
    for eta in (0.0, -0.1, 1.2):
        with pytest.raises(DomainError):
            correlator(s, 0j, np.zeros(4), eta)


def test_spin_terms_hermitian(rad, rng):
    s = state_at(rad, 0.9, d2=0.5 - 0.4j)
    spin, fld = correlator_terms(s, complex(*rng.normal(size=2)), rng.normal(size=4), 0.7)
    assert spin[0, 1] == pytest.approx(np.conj(spin[1, 0]), abs=1e-15)
    assert fld[0, 1] == pytest.approx(np.conj(fld[1, 0]), abs=1e-15)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), phi=st.floats(-pi, pi), lam=st.floats(1e-3, 2.0),
       eta=st.floats(0.05, 1.0))
def test_correlator_and_chsh_bounds(seed, phi, lam, eta):
    rng = np.random.default_rng(seed)
    rad = RadialIntegrals.random(seed % 97)
    d2 = complex(*rng.normal(size=2)) if seed % 3 == 0 else None
    s = state_at(rad, phi, lam, d2)
    st_ = random_settings(rng)
    beta, _ = st_.displacements(s.field_open + s.field_closed)
    assert abs(correlator(s, st_.zeta, beta, eta)) <= 1 + 1e-12
    assert abs(chsh(s, st_, eta)) <= TSIRELSON + 1e-9


def test_degenerate_settings_collapse(rad, rng):
    s = state_at(rad, 0.4)
    base = random_settings(rng)
    same = MeasurementSettings(base.zeta, base.zeta, base.beta_mag, base.delta, base.beta_mag, base.delta)
    beta, _ = same.displacements(s.field_open + s.field_closed)
    assert chsh(s, same) == pytest.approx(2 * correlator(s, base.zeta, beta), abs=1e-14)


def test_settings_flat_round_trip(rng):
    st_ = random_settings(rng)
    back = MeasurementSettings.from_flat(st_.flat())
    np.testing.assert_array_equal(back.flat(), st_.flat())
    assert st_.flat().shape == (20,)


def _real_frame(state, settings_):
    alphas = state.field_open + state.field_closed
    beta, beta_p = settings_.displacements(np.abs(alphas).astype(complex))
    return np.abs(alphas), beta, beta_p


def test_batch_matches_scalar(rad, rng):
    for eta in (1.0, 0.8, 0.55):
        for _ in range(10):
            phi = rng.uniform(-pi, pi)
            d2 = complex(*rng.normal(size=2)) if rng.uniform() < 0.5 else None
            s = state_at(rad, phi, rng.uniform(0.01, 0.5), d2)
            st_ = random_settings(rng)
            amps, beta, beta_p = _real_frame(s, st_)
            batch = chsh_batch(s, amps[None], np.array([st_.zeta]), np.array([st_.zeta_p]),
                               beta[None], beta_p[None], eta)[0]
            assert batch == pytest.approx(chsh(s, st_, eta), abs=1e-12)
            spin_opt = chsh_spin_optimal(s, amps[None], beta[None], beta_p[None], eta)[0]
            assert spin_opt >= abs(batch) - 1e-12


def test_bloch_correlations_match_correlator(rad, rng):
    s = state_at(rad, 1.3, 0.2)
    for _ in range(10):
        st_ = random_settings(rng)
        amps, beta, _ = _real_frame(s, st_)
        vec = bloch_correlations(s, amps[None], beta[None], 0.75)[0]
        true_beta, _ = st_.displacements(s.field_open + s.field_closed)
        assert bloch_vector(st_.zeta) @ vec == pytest.approx(correlator(s, st_.zeta, true_beta, 0.75), abs=1e-12)


@pytest.mark.parametrize("phi", [-2.0, 0.0, 0.7, 2.9])
def test_material_phase_independence(rad, rng, phi):
    cfg = build_configuration(rad, 0.1, phi)
    moduli = cfg.moduli.as_array()
    st_ = random_settings(rng)
    values = []
    for _ in range(5):
        ph = PhaseSet.locked(phi, Kappas(*rng.uniform(-pi, pi, 3)))
        alphas = moduli * np.exp(1j * np.array([ph.laser_phase(l) for l in MODE_LABELS]))
        values.append(chsh(make_state(ph, alphas), st_, 0.9))
    np.testing.assert_allclose(values, values[0], atol=1e-10)

