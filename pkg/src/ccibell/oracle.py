"""Brute-force truncated Fock-space evaluation of the Bell correlators.

Nothing here uses coherent-state closed forms: states are Fock vectors,
displacements and beam splitters are matrix exponentials of the truncated
ladder operators. Branch field states are products over the four modes,
so every multimode quantity is a product of single-mode ones and the
(cutoff+1)**4 space is never built.
"""
from __future__ import annotations

from functools import lru_cache
from math import lgamma

import numpy as np
from scipy.linalg import expm

from .bell import _check_eta, _real, correlator, gamma_matrix
from .config import build_configuration
from .errors import TruncationError
from .states import CciState, make_state

DEFAULT_CUTOFF = 30
LEAK_TOL = 1e-10


def required_cutoff(amplitude: complex) -> float:
    n = abs(amplitude) ** 2
    return n + 10 * np.sqrt(n + 1)


def _check_cutoff(amplitude: complex, cutoff: int) -> None:
    if cutoff < required_cutoff(amplitude):
        raise TruncationError(
            f"cutoff {cutoff} too small for |amplitude|={abs(amplitude):.3g} "
            f"(needs >= {required_cutoff(amplitude):.1f})"
        )


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1)


def coherent_fock(alpha: complex, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    _check_cutoff(alpha, cutoff)
    n = np.arange(cutoff + 1)
    log_fact = np.array([lgamma(k + 1) for k in n])
    if alpha == 0:
        c = (n == 0).astype(complex)
    else:
        c = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - log_fact / 2) * np.exp(
            1j * n * np.angle(alpha)
        )
    leak = 1 - np.vdot(c, c).real
    if leak > LEAK_TOL:
        raise TruncationError(f"coherent state leaks {leak:.2e} beyond cutoff {cutoff}")
    return c


def displacement_matrix(beta: complex, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    _check_cutoff(beta, cutoff)
    a = annihilation(cutoff)
    return expm(beta * a.conj().T - np.conj(beta) * a)


def threshold_overlap(bra_modes, ket_modes, beta, cutoff: int = DEFAULT_CUTOFF) -> complex:
    """<bra| A(beta) |ket> for mode-product Fock states.

    A(beta) = prod_l F_l^dag (2 |vac><vac| - 1) prod_l F_l, so
    <u|A|v> = 2 prod_l <u_l|F_l^dag|0><0|F_l|v_l> - prod_l <u_l|v_l>.
    """
    proj = 1 + 0j
    plain = 1 + 0j
    for u, v, b in zip(bra_modes, ket_modes, beta):
        d = displacement_matrix(b, cutoff)
        proj *= np.conj(d[0] @ u) * (d[0] @ v)
        plain *= np.vdot(u, v)
    return complex(2 * proj - plain)


def threshold_density_expectation(rhos, beta, cutoff: int = DEFAULT_CUTOFF) -> complex:
    """Tr[(prod_l rho_l) A(beta)] for per-mode (possibly non-Hermitian) operators."""
    proj = 1 + 0j
    trace = 1 + 0j
    for rho, b in zip(rhos, beta):
        d = displacement_matrix(b, cutoff)
        proj *= d[0] @ rho @ d[0].conj()
        trace *= np.trace(rho)
    return complex(2 * proj - trace)


def threshold_observable(beta, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Single-mode matrix of F^dag (2|0><0| - 1) F, for spectral checks."""
    d = displacement_matrix(beta, cutoff)
    vac = np.zeros(cutoff + 1)
    vac[0] = 1
    return d.conj().T @ (2 * np.outer(vac, vac) - np.eye(cutoff + 1)) @ d


@lru_cache(maxsize=8)
def beam_splitter_unitary(eta: float, cutoff: int) -> np.ndarray:
    """exp[arccos(sqrt eta) (a^dag b - a b^dag)] on mode (x) ancilla, truncated."""
    a = annihilation(cutoff)
    eye = np.eye(cutoff + 1)
    am, bm = np.kron(a, eye), np.kron(eye, a)
    gen = am.T @ bm - am @ bm.T
    return expm(np.arccos(np.sqrt(eta)) * gen)


def _split(psi: np.ndarray, eta: float, cutoff: int) -> np.ndarray:
    """Mode (x) ancilla amplitudes after the beam splitter, shape (n, n)."""
    vac = np.zeros(cutoff + 1)
    vac[0] = 1
    out = beam_splitter_unitary(float(eta), cutoff) @ np.kron(psi, vac)
    return out.reshape(cutoff + 1, cutoff + 1)


def beam_splitter_cross(psi_x, psi_y, eta: float, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Tr_ancilla[ B |psi_x><psi_y| B^dag ] with the ancilla starting in vacuum."""
    _check_eta(eta)
    ux = _split(np.asarray(psi_x, complex), eta, cutoff)
    uy = _split(np.asarray(psi_y, complex), eta, cutoff)
    return ux @ uy.conj().T


def beam_splitter_attenuate(psi, eta: float, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Reduced density operator of a single mode after loss eta."""
    return beam_splitter_cross(psi, psi, eta, cutoff)


def oracle_correlator(state: CciState, zeta: complex, beta, eta: float = 1.0,
                      cutoff: int = DEFAULT_CUTOFF) -> float:
    eta = _check_eta(eta)
    beta = np.asarray(beta, dtype=complex)
    g = gamma_matrix(zeta)
    branches = []
    for w, spin, fld in state.branches():
        branches.append((w, spin, [coherent_fock(a, cutoff) for a in fld]))
    total = 0j
    for wx, sx, fx in branches:
        for wy, sy, fy in branches:
            spin_part = wx * wy * np.vdot(sx, g @ sy)
            if eta == 1.0:
                field_part = threshold_overlap(fx, fy, beta, cutoff)
            else:
                # Tr[|y><x| A] = <x|A|y>, with |y><x| pushed through the loss
                rhos = [beam_splitter_cross(v, u, eta, cutoff) for u, v in zip(fx, fy)]
                field_part = threshold_density_expectation(rhos, beta, cutoff)
            total += spin_part * field_part
    return _real(total / state.nf**2, tol=1e-8)


def random_draw(rad, rng, max_amplitude: float = 2.0):
    """Random state and settings: (state, zeta, beta) with all |alpha_l|, |beta_l| <= max_amplitude."""
    cfg = build_configuration(rad, 1.0, rng.uniform(-np.pi, np.pi))
    alphas = max_amplitude * np.sqrt(rng.uniform(size=4)) * np.exp(2j * np.pi * rng.uniform(size=4))
    state = make_state(cfg.phases, alphas, cfg.d2)
    zeta = complex(*rng.uniform(-np.pi, np.pi, size=2))
    beta = max_amplitude * np.sqrt(rng.uniform(size=4)) * np.exp(2j * np.pi * rng.uniform(size=4))
    return state, zeta, beta


def compare_suite(rad, draws: int, eta: float = 1.0, cutoff: int = DEFAULT_CUTOFF,
                  seed: int = 0) -> float:
    """Largest |analytic - oracle| correlator difference over random draws."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        state, zeta, beta = random_draw(rad, rng)
        diff = abs(correlator(state, zeta, beta, eta) - oracle_correlator(state, zeta, beta, eta, cutoff))
        worst = max(worst, diff)
    return worst
