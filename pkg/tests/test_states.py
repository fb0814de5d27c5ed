from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccibell.amplitudes import RadialIntegrals
from ccibell.config import Kappas, PhaseSet, build_configuration, material_phases
from ccibell.errors import DegenerateStateError
from ccibell.states import (
    combined_state,
    fidelity,
    final_state_closed,
    final_state_open,
    make_state,
    state_from_amplitudes,
)

PHIS = np.linspace(-pi, pi, 16, endpoint=False)


def phases(phi, kappas=(0.3, -1.1, 2.0)):
    return PhaseSet.locked(phi, Kappas(*kappas))


def test_open_state_even_split(rng):
    for _ in range(20):
        kap = rng.uniform(-pi, pi, size=3)
        f = final_state_open(phases(rng.uniform(-pi, pi), kap))
        np.testing.assert_allclose(np.abs(f) ** 2, [0.5, 0.5], atol=1e-15)


def test_open_state_trivial_phases():
    ph = PhaseSet(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, pi / 2)
    np.testing.assert_allclose(final_state_open(ph), np.array([1, 1]) / sqrt(2))


def test_closed_state_d2_zero():
    for phi in PHIS:
        ph = phases(phi)
        f, nfc = final_state_closed(ph, 0j)
        assert nfc == pytest.approx(1.0, abs=1e-15)
        half = (ph.phi_c + ph.theta_c) / 2
        np.testing.assert_allclose(np.abs(f) ** 2, [np.sin(half) ** 2, np.cos(half) ** 2], atol=1e-14)
        # sigma_z expectation traces the full-visibility fringe -cos(phi)
        assert abs(f[0]) ** 2 - abs(f[1]) ** 2 == pytest.approx(-np.cos(phi), abs=1e-14)


def test_closed_state_full_contrast():
    ph = PhaseSet(0.0, 0.0, 0.0, 0.0, 0.0, pi, 0.0, 0.0)  # phi_c + theta_c = pi
    f, _ = final_state_closed(ph, 0j)
    assert abs(f[0]) == pytest.approx(1.0) and abs(f[1]) < 1e-15


def test_closed_state_degenerate():
    # the raw coefficients never vanish together for finite d2; a non-finite bias is rejected
    with pytest.raises(DegenerateStateError):
        final_state_closed(phases(0.0), complex(np.nan, 0.0))


def test_nf_closed_form(rad):
    for phi in PHIS:
        for lam in (0.01, 0.1, 1.0):
            cfg = build_configuration(rad, lam, phi)
            s = combined_state(cfg)
            n2 = s.alpha_norm_sq
            expected = 2 + (np.sin(phi) - np.cos(phi) - np.cos(2 * phi)) * np.exp(-n2 / 2) / sqrt(2)
            assert s.nf**2 == pytest.approx(expected, rel=1e-12)


def test_nf_large_field_limit(rad):
    s = combined_state(build_configuration(rad, 50.0, 1.0))
    assert s.nf**2 == pytest.approx(2.0, abs=1e-12)


def test_branch_field_supports(rad):
    s = combined_state(build_configuration(rad, 1.0, 0.5))
    assert np.all(s.field_open[2:] == 0) and np.all(s.field_closed[:2] == 0)


@pytest.mark.parametrize("seed", range(6))
def test_pipeline_equivalence(seed):
    rad = RadialIntegrals.random(100 + seed)
    for phi in PHIS:
        cfg = build_configuration(rad, 1.0, phi)
        s = combined_state(cfg)
        assert fidelity(state_from_amplitudes(cfg, "open"), s.spin_open) >= 1 - 1e-9
        assert fidelity(state_from_amplitudes(cfg, "closed"), s.spin_closed) >= 1 - 1e-9


def test_pipeline_with_d52():
    rad = RadialIntegrals.random(9, d52=0.3 + 0.2j)
    for phi in PHIS:
        cfg = build_configuration(rad, 1.0, phi)
        assert fidelity(state_from_amplitudes(cfg, "closed"), combined_state(cfg).spin_closed) >= 1 - 1e-9


def test_pipeline_scale_free(rad):
    a = state_from_amplitudes(build_configuration(rad, 1.0, 0.3), "open")
    b = state_from_amplitudes(build_configuration(rad, 2.0, 0.3), "open")
    assert fidelity(a, b) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        state_from_amplitudes(build_configuration(rad), "ajar")


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), phi=st.floats(-pi, pi), lam=st.floats(1e-3, 5.0),
       d2=st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False))
def test_state_normalized(seed, phi, lam, d2):
    s = combined_state(build_configuration(RadialIntegrals.random(seed), lam, phi, d2))
    assert s.norm_sq() == pytest.approx(1.0, abs=1e-10)


def test_make_state_matches_config(rad):
    cfg = build_configuration(rad, 0.4, -1.0)
    s, ref = make_state(cfg.phases, cfg.alphas, cfg.d2), combined_state(cfg)
    np.testing.assert_array_equal(s.field_open + s.field_closed, cfg.alphas)
    assert s.nf == ref.nf
    assert material_phases(rad).kappa1 == cfg.phases.kappa1
