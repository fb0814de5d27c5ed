"""Conditioned photoelectron spin states and the field-spin entangled state.

Spin vectors are length-2 complex arrays in the basis (+1/2, -1/2) of the
detected electron. Field amplitudes are length-4 complex arrays ordered as
``config.MODE_LABELS`` = (1o, 2o, 1c, 2c).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .amplitudes import HALF, t1, t2
from .config import CciConfiguration, PhaseSet
from .errors import DegenerateStateError

D2_DOWN_WEIGHT = 3.5 - 5 / sqrt(2)
OPEN_MASK = np.array([1, 1, 0, 0])
CLOSED_MASK = np.array([0, 0, 1, 1])


def _normalized(v: np.ndarray) -> tuple[np.ndarray, float]:
    n = float(np.linalg.norm(v))
    if n == 0.0 or not np.isfinite(n):
        raise DegenerateStateError("spin state has zero amplitude")
    return v / n, n


def final_state_open(phases: PhaseSet) -> np.ndarray:
    """Particle-like open-configuration state, always evenly split in z."""
    return np.exp(1j * phases.delta_o) / sqrt(2) * np.array([1.0, np.exp(-1j * phases.theta_o)])


def final_state_closed(phases: PhaseSet, d2: complex) -> tuple[np.ndarray, float]:
    """Wave-like closed-configuration state and its norm N_fc."""
    half = (phases.phi_c + phases.theta_c) / 2
    bias = np.exp(-0.5j * phases.phi_c) * d2
    raw = np.exp(1j * phases.delta_c) * np.array([
        1j * np.sin(half) - bias,
        np.cos(half) + D2_DOWN_WEIGHT * bias,
    ])
    return _normalized(raw)


def coherent_overlap(a, b) -> complex:
    """<a|b> for multimode coherent states with amplitude vectors a, b."""
    a, b = np.asarray(a, complex), np.asarray(b, complex)
    return complex(np.exp(-(np.vdot(a, a).real + np.vdot(b, b).real) / 2 + np.vdot(a, b)))


@dataclass(frozen=True)
class CciState:
    """(|f_o>|alpha_o> + N_fc |f_c>|alpha_c>) / N_f with normalized f_o, f_c."""

    spin_open: np.ndarray
    spin_closed: np.ndarray
    field_open: np.ndarray
    field_closed: np.ndarray
    nfc: float
    nf: float

    def branches(self):
        """(weight, spin, field) for the open and closed branches."""
        return (
            (1.0, self.spin_open, self.field_open),
            (self.nfc, self.spin_closed, self.field_closed),
        )

    @property
    def alpha_norm_sq(self) -> float:
        a = self.field_open + self.field_closed
        return float(np.vdot(a, a).real)

    def norm_sq(self) -> float:
        total = 0j
        for wx, sx, ax in self.branches():
            for wy, sy, ay in self.branches():
                total += wx * wy * np.vdot(sx, sy) * coherent_overlap(ax, ay)
        return float(total.real) / self.nf**2


def make_state(phases: PhaseSet, alphas, d2: complex = 0j) -> CciState:
    """Entangled state for arbitrary mode amplitudes under the given phases."""
    alphas = np.asarray(alphas, dtype=complex)
    fo = final_state_open(phases)
    fc, nfc = final_state_closed(phases, d2)
    a_o, a_c = alphas * OPEN_MASK, alphas * CLOSED_MASK
    nf_sq = 1 + nfc**2 + 2 * nfc * (np.vdot(fo, fc) * coherent_overlap(a_o, a_c)).real
    return CciState(fo, fc, a_o, a_c, float(nfc), float(np.sqrt(nf_sq)))


def combined_state(cfg: CciConfiguration) -> CciState:
    return make_state(cfg.phases, cfg.alphas, cfg.d2)


def branch_amplitudes(cfg: CciConfiguration, branch: str, mj_in=-HALF) -> np.ndarray:
    """Unnormalized t1*alpha_1 + t2*alpha_2**2 for both outgoing spins."""
    if branch not in ("open", "closed"):
        raise ValueError(f"branch must be 'open' or 'closed', got {branch!r}")
    tag = branch[0]
    m1, m2 = cfg.mode("1" + tag), cfg.mode("2" + tag)
    return np.array([
        t1(ms, mj_in, m1.eps, cfg.kdet, cfg.rad) * m1.alpha
        + t2(ms, mj_in, m2.eps, cfg.kdet, cfg.rad) * m2.alpha**2
        for ms in (HALF, -HALF)
    ])


def state_from_amplitudes(cfg: CciConfiguration, branch: str) -> np.ndarray:
    return _normalized(branch_amplitudes(cfg, branch))[0]


def fidelity(a, b) -> float:
    a, b = np.asarray(a, complex), np.asarray(b, complex)
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))
