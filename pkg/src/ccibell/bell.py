"""Spin and field observables, efficiency-attenuated correlators and CHSH.

The field observable is the displaced vacuum reflection
A(beta) = F(beta)^dag (2|vac><vac| - 1) F(beta) over the four modes.
Finite detection efficiency eta is a beam splitter of amplitude
transmissivity sqrt(eta) in front of every mode; for the two-branch
coherent state this scales the field amplitudes by sqrt(eta) and damps
the branch coherence by exp(-(1 - eta)|alpha|^2 / 2).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, ImaginaryResidueError
from .states import CciState

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
TSIRELSON = 2 * np.sqrt(2)
IMAG_TOL = 1e-10


def rotation(zeta: complex) -> np.ndarray:
    return expm(zeta * SIGMA_PLUS - np.conj(zeta) * SIGMA_MINUS)


def gamma_matrix(zeta: complex) -> np.ndarray:
    """Dichotomic spin observable sigma_z rotated by R(zeta)."""
    r = rotation(zeta)
    return r @ SIGMA_Z @ r.conj().T


def gamma_elements(zeta) -> tuple[np.ndarray, np.ndarray]:
    """Closed form of gamma_matrix, vectorized: returns (cos 2|z|, -z sin(2|z|)/|z|)."""
    zeta = np.asarray(zeta, dtype=complex)
    r = np.abs(zeta)
    # sin(2r)/r written through np.sinc so zeta = 0 is regular
    return np.cos(2 * r), -2 * zeta * np.sinc(2 * r / np.pi)


def displaced_parity_overlap(alpha, alpha_p, beta) -> complex:
    """<alpha| A(beta) |alpha'> for multimode coherent states."""
    a = np.asarray(alpha, dtype=complex)
    ap = np.asarray(alpha_p, dtype=complex)
    b = np.asarray(beta, dtype=complex)
    pre = -(np.vdot(a, a).real + np.vdot(ap, ap).real) / 2
    first = 2 * np.exp(pre - np.vdot(b, b).real - np.vdot(a, b) - ap @ b.conj())
    second = np.exp(pre + np.vdot(a, ap))
    return complex(first - second)


def _check_eta(eta: float) -> float:
    if not 0 < eta <= 1:
        raise DomainError(f"efficiency eta={eta} outside (0, 1]")
    return float(eta)


def _real(value: complex, tol: float = IMAG_TOL) -> float:
    if abs(value.imag) > tol:
        raise ImaginaryResidueError(f"expectation value has imaginary part {value.imag:.3e}")
    return float(value.real)


def correlator_terms(state: CciState, zeta: complex, beta, eta: float = 1.0):
    """Spin and field matrix elements between the two branches.

    Returns ``(spin, field)``, each a 2x2 complex array indexed by
    (open, closed); ``field`` already includes the off-diagonal loss factor.
    """
    eta = _check_eta(eta)
    g = gamma_matrix(zeta)
    se = np.sqrt(eta)
    damp = np.exp(-(1 - eta) * state.alpha_norm_sq / 2)
    br = state.branches()
    spin = np.empty((2, 2), complex)
    fld = np.empty((2, 2), complex)
    for x, (wx, sx, ax) in enumerate(br):
        for y, (wy, sy, ay) in enumerate(br):
            spin[x, y] = wx * wy * np.vdot(sx, g @ sy)
            fld[x, y] = displaced_parity_overlap(se * ax, se * ay, beta) * (damp if x != y else 1.0)
    return spin, fld


def correlator(state: CciState, zeta: complex, beta, eta: float = 1.0) -> float:
    """<Gamma(zeta) (x) A(beta)> in the attenuated state."""
    spin, fld = correlator_terms(state, zeta, beta, eta)
    return _real(np.sum(spin * fld) / state.nf**2)


@dataclass(frozen=True)
class MeasurementSettings:
    """Two spin settings and two displacement settings, phases referenced to alpha.

    Displacements are beta_l = |beta_l| * (alpha_l/|alpha_l|) * exp(i delta_l).
    """

    zeta: complex
    zeta_p: complex
    beta_mag: np.ndarray = field(default_factory=lambda: np.zeros(4))
    delta: np.ndarray = field(default_factory=lambda: np.zeros(4))
    beta_mag_p: np.ndarray = field(default_factory=lambda: np.zeros(4))
    delta_p: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def displacements(self, alphas) -> tuple[np.ndarray, np.ndarray]:
        alphas = np.asarray(alphas, dtype=complex)
        mag = np.abs(alphas)
        ref = np.where(mag > 0, alphas / np.where(mag > 0, mag, 1), 1.0)
        beta = np.asarray(self.beta_mag) * ref * np.exp(1j * np.asarray(self.delta))
        beta_p = np.asarray(self.beta_mag_p) * ref * np.exp(1j * np.asarray(self.delta_p))
        return beta, beta_p

    def flat(self) -> np.ndarray:
        """[Re z, Im z, Re z', Im z', |b|x4, delta x4, |b'|x4, delta' x4]."""
        return np.concatenate([
            [self.zeta.real, self.zeta.imag, self.zeta_p.real, self.zeta_p.imag],
            self.beta_mag, self.delta, self.beta_mag_p, self.delta_p,
        ]).astype(float)

    @classmethod
    def from_flat(cls, x) -> "MeasurementSettings":
        x = np.asarray(x, dtype=float)
        return cls(complex(x[0], x[1]), complex(x[2], x[3]),
                   x[4:8].copy(), x[8:12].copy(), x[12:16].copy(), x[16:20].copy())


SETTINGS_COLUMNS = (
    ["zeta_re", "zeta_im", "zeta_p_re", "zeta_p_im"]
    + [f"beta_mag_{l}" for l in ("1o", "2o", "1c", "2c")]
    + [f"delta_{l}" for l in ("1o", "2o", "1c", "2c")]
    + [f"beta_mag_p_{l}" for l in ("1o", "2o", "1c", "2c")]
    + [f"delta_p_{l}" for l in ("1o", "2o", "1c", "2c")]
)


def chsh(state: CciState, settings: MeasurementSettings, eta: float = 1.0) -> float:
    """E(z,b) + E(z',b) + E(z,b') - E(z',b')."""
    beta, beta_p = settings.displacements(state.field_open + state.field_closed)
    z, zp = settings.zeta, settings.zeta_p
    return (
        correlator(state, z, beta, eta)
        + correlator(state, zp, beta, eta)
        + correlator(state, z, beta_p, eta)
        - correlator(state, zp, beta_p, eta)
    )


def bloch_vector(zeta) -> np.ndarray:
    """Unit vector n with Gamma(zeta) = n . (sigma_x, sigma_y, sigma_z); vectorized."""
    c, od = gamma_elements(zeta)
    return np.stack([od.real, -od.imag, c], axis=-1)


def zeta_from_bloch(n) -> complex:
    """Inverse of ``bloch_vector`` with |zeta| in [0, pi/2]."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    r = np.arccos(np.clip(n[2], -1.0, 1.0)) / 2
    return complex(r * np.exp(1j * np.angle(-(n[0] - 1j * n[1])))) if r > 0 else 0j


_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


def branch_norm_sq(state: CciState, alpha_norm_sq):
    """N_f^2 as a function of ||alpha||^2 for the spin parts of ``state``."""
    fo, fc, wc = state.spin_open, state.spin_closed, state.nfc
    return 1 + wc**2 + 2 * wc * np.vdot(fo, fc).real * np.exp(-np.asarray(alpha_norm_sq) / 2)


def bloch_correlations(state: CciState, amps, beta, eta: float = 1.0) -> np.ndarray:
    """Vectors s with <Gamma(zeta) (x) A(beta)> = bloch_vector(zeta) . s, vectorized.

    Works in the frame where every alpha_l is real and positive, so
    ``amps`` holds the moduli |alpha_l| with shape (n, 4) and ``beta`` the
    phase-referenced displacements |b_l| e^{i delta_l}, shape (n, 4).
    Only the spin parts and N_fc of ``state`` are used. Returns (n, 3).
    """
    eta = _check_eta(eta)
    amps = np.asarray(amps, dtype=float)
    beta = np.asarray(beta, dtype=complex)
    a_o, a_c = amps[:, :2], amps[:, 2:]
    no = np.sum(a_o**2, axis=1)
    nc = np.sum(a_c**2, axis=1)
    nf2 = branch_norm_sq(state, no + nc)

    se = np.sqrt(eta)
    bb = np.sum(np.abs(beta) ** 2, axis=1)
    lo = se * np.sum(a_o * beta[:, :2], axis=1)  # alpha_o^* . beta with alpha real
    lc = se * np.sum(a_c * beta[:, 2:], axis=1)
    vo, vc = eta * no, eta * nc
    # <x|A|y> = e^{-(|x|^2+|y|^2)/2} (2 e^{-|b|^2 - x*.b - y.b*} - e^{x*.y}); x*.y = 0 here
    foo = 2 * np.exp(-vo - bb - 2 * lo.real) - 1.0
    fcc = 2 * np.exp(-vc - bb - 2 * lc.real) - 1.0
    half = -(vo + vc) / 2 - (1 - eta) * (no + nc) / 2
    foc = 2 * np.exp(half - bb - lo - np.conj(lc)) - np.exp(half)

    soo, scc, soc = spin_moments(state)
    return combine_moments(soo, scc, soc, foo, fcc, foc) / nf2[:, None]


def spin_moments(state: CciState):
    """Pauli moments <f_x|sigma_k|f_y> of the branches, weighted by N_fc.

    Returns (open-open, closed-closed, open-closed), each of length 3; the
    first two are real.
    """
    fo, fc, wc = state.spin_open, state.spin_closed, state.nfc
    soo = np.einsum("i,kij,j->k", fo.conj(), _PAULI, fo).real
    scc = wc**2 * np.einsum("i,kij,j->k", fc.conj(), _PAULI, fc).real
    soc = wc * np.einsum("i,kij,j->k", fo.conj(), _PAULI, fc)
    return soo, scc, soc


def combine_moments(soo, scc, soc, foo, fcc, foc) -> np.ndarray:
    """Unnormalized Bloch correlation vectors from spin moments and field elements."""
    return (np.multiply.outer(foo, soo) + np.multiply.outer(fcc, scc)
            + 2 * np.multiply.outer(foc, soc).real)


def chsh_batch(state: CciState, amps, zeta, zeta_p, beta, beta_p, eta: float = 1.0) -> np.ndarray:
    """Vectorized CHSH value for many settings at once (alpha-real frame).

    Shapes: ``amps``, ``beta``, ``beta_p`` are (n, 4); ``zeta``, ``zeta_p`` are (n,).
    """
    s1 = bloch_correlations(state, amps, beta, eta)
    s2 = bloch_correlations(state, amps, beta_p, eta)
    n1, n2 = bloch_vector(zeta), bloch_vector(zeta_p)
    return np.sum(n1 * (s1 + s2) + n2 * (s1 - s2), axis=-1)


def chsh_spin_optimal(state: CciState, amps, beta, beta_p, eta: float = 1.0) -> np.ndarray:
    """max over zeta, zeta' of |<B>| for fixed displacements: |s + s'| + |s - s'|."""
    s1 = bloch_correlations(state, amps, beta, eta)
    s2 = bloch_correlations(state, amps, beta_p, eta)
    return np.linalg.norm(s1 + s2, axis=-1) + np.linalg.norm(s1 - s2, axis=-1)
