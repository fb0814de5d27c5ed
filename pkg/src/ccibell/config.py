"""Open and closed interferometer configurations.

Geometry of the four laser modes, the balancing amplitude moduli, material
phases, phase locking of the laser phases to a single control phase and
the D5/2 bias parameter ``d2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np

from .amplitudes import RadialIntegrals
from .angular import UNIT_TOL, as_direction, as_polarization
from .errors import DomainError

MODE_LABELS = ("1o", "2o", "1c", "2c")
MODE_ORDER = {"1o": 1, "2o": 2, "1c": 1, "2c": 2}

SQ2, SQ3 = sqrt(2.0), sqrt(3.0)
ALPHA_1C_OVER_1O = sqrt(7 / (2 * (3 - SQ2)))

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Geometry:
    kdet: np.ndarray
    k: dict  # label -> wavevector direction
    eps: dict  # label -> complex polarization


def geometry() -> Geometry:
    kdet = (SQ2 * _X - _Z) / SQ3
    eps_1o = (_X + SQ2 * _Z) / SQ3
    k = {
        "1o": _Y.copy(),
        "2o": -eps_1o,
        "1c": kdet.copy(),
        "2c": (_X - 2 * SQ2 * _Z) / 3,
    }
    eps = {
        "1o": eps_1o.astype(complex),
        "2o": _Y.astype(complex),
        "1c": (sqrt(5 / 3 + SQ2) * (_X + SQ2 * _Z) - 1j * sqrt(9 - 3 * SQ2) * _Y) / sqrt(14),
        "2c": ((2 * SQ2 * _X + _Z) / 3 + 1j * _Y) / SQ2,
    }
    return Geometry(kdet=kdet, k=k, eps=eps)


def geometry_checks(geo: Geometry) -> list[tuple[str, bool, float]]:
    """(name, passed, residual) for every geometric invariant."""
    out = []
    out.append(("|K'| = 1", *_residual(abs(geo.kdet @ geo.kdet - 1))))
    target = (SQ2 * _X - _Z) / SQ3
    out.append(("K' = (sqrt2 x - z)/sqrt3", *_residual(np.max(np.abs(geo.kdet - target)))))
    for lab in MODE_LABELS:
        k, e = geo.k[lab], geo.eps[lab]
        out.append((f"|k_{lab}| = 1", *_residual(abs(k @ k - 1))))
        out.append((f"|eps_{lab}| = 1", *_residual(abs(np.vdot(e, e).real - 1))))
        out.append((f"eps_{lab} . k_{lab} = 0", *_residual(abs(e @ k))))
    a, b, c = geo.kdet, geo.k["2o"], geo.k["1o"]
    ortho = max(abs(a @ b), abs(b @ c), abs(a @ c))
    handed = np.max(np.abs(np.cross(a, b) - c))
    out.append(("(K', k_2o, k_1o) orthogonal", *_residual(ortho)))
    out.append(("(K', k_2o, k_1o) right-handed triad", *_residual(handed)))
    return out


def _residual(r: float) -> tuple[bool, float]:
    return bool(r <= UNIT_TOL), float(r)


def _wrap(angle: float) -> float:
    """Map an angle to (-pi, pi]."""
    a = float(np.angle(np.exp(1j * angle)))
    return pi if a <= -pi + 1e-15 else a


def _bracket_1(rad):
    return -rad.d1_p12 + rad.d1_p32


def _bracket_2o(rad):
    return (
        -5 * rad.d2_s12_p12
        - 10 * rad.d2_s12_p32
        + 5 * rad.d2_d32_p12
        + rad.d2_d32_p32
        + 9 * rad.d2_d52_p32
    )


def _bracket_2c(rad):
    return 5 * rad.d2_d32_p12 + rad.d2_d32_p32


def _nonzero(value: complex, rad: RadialIntegrals, what: str) -> complex:
    scale = max(1.0, max(abs(v) for v in rad.as_dict().values()))
    if abs(value) <= 1e-14 * scale:
        raise DomainError(f"{what} vanishes; amplitudes cannot be balanced")
    return value


@dataclass(frozen=True)
class Kappas:
    kappa1: float
    kappa2o: float
    kappa2c: float


def material_phases(rad: RadialIntegrals) -> Kappas:
    """Phases that make the balancing conditions real and positive.

    kappa2o carries the sign that puts the two-photon open amplitude at
    phase kappa2o + 2*phi2o, consistent with the open final state.
    """
    b1 = _nonzero(_bracket_1(rad), rad, "one-photon bracket")
    b2o = _nonzero(_bracket_2o(rad), rad, "open two-photon bracket")
    b2c = _nonzero(_bracket_2c(rad), rad, "closed two-photon bracket")
    return Kappas(
        kappa1=_wrap(np.angle(b1)),
        kappa2o=_wrap(np.angle(-1j * b2o)),
        kappa2c=_wrap(np.angle(1j * b2c)),
    )


@dataclass(frozen=True)
class Moduli:
    a1o: float
    a2o: float
    a1c: float
    a2c: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a1o, self.a2o, self.a1c, self.a2c])


def balancing_rhs(rad: RadialIntegrals, lam: float, kappas: Kappas | None = None) -> dict:
    """Complex right-hand sides of the four balancing conditions.

    Each is real and positive when ``kappas`` are the material phases.
    """
    k = kappas or material_phases(rad)
    sp = sqrt(pi)
    a1o = 6 * sp * lam * np.exp(1j * k.kappa1) / _bracket_1(rad)
    return {
        "a1o": a1o,
        "a2o_sq": 90 * sp * lam * np.exp(1j * k.kappa2o) / (-1j * _bracket_2o(rad)),
        "a1c": ALPHA_1C_OVER_1O * a1o,
        "a2c_sq": 180 * sp * lam * np.exp(1j * k.kappa2c) / (1j * (SQ2 + 2) * _bracket_2c(rad)),
    }


def amplitude_moduli(rad: RadialIntegrals, lam: float) -> Moduli:
    if not lam > 0:
        raise DomainError("scale lam must be positive")
    rhs = balancing_rhs(rad, lam)
    return Moduli(
        a1o=abs(rhs["a1o"]),
        a2o=sqrt(abs(rhs["a2o_sq"])),
        a1c=abs(rhs["a1c"]),
        a2c=sqrt(abs(rhs["a2c_sq"])),
    )


def phase_lock(phi: float, kappas: Kappas) -> dict[str, float]:
    """Laser phases that realize control phase ``phi`` (with phi_2c = 0)."""
    k1, k2o, k2c = kappas.kappa1, kappas.kappa2o, kappas.kappa2c
    return {
        "1o": -pi / 2 - k1 + k2c,
        "2o": (-pi - k2o + k2c + phi) / 2,
        "1c": -k1 + k2c - phi,
        "2c": 0.0,
    }


@dataclass(frozen=True)
class PhaseSet:
    kappa1: float
    kappa2o: float
    kappa2c: float
    phi1o: float
    phi2o: float
    phi1c: float
    phi2c: float
    phi: float

    @classmethod
    def locked(cls, phi: float, kappas: Kappas) -> "PhaseSet":
        p = phase_lock(phi, kappas)
        return cls(kappas.kappa1, kappas.kappa2o, kappas.kappa2c,
                   p["1o"], p["2o"], p["1c"], p["2c"], phi)

    @property
    def theta_o(self) -> float:
        return self.phi1o - 2 * self.phi2o + self.kappa1 - self.kappa2o

    @property
    def delta_o(self) -> float:
        return self.phi1o + self.kappa1

    @property
    def phi_c(self) -> float:
        return self.phi1c - 2 * self.phi2c

    @property
    def theta_c(self) -> float:
        return self.kappa1 - self.kappa2c

    @property
    def delta_c(self) -> float:
        return (self.phi1c + 2 * self.phi2c + self.kappa1 + self.kappa2c) / 2

    def laser_phase(self, label: str) -> float:
        return {"1o": self.phi1o, "2o": self.phi2o, "1c": self.phi1c, "2c": self.phi2c}[label]


def d2_parameter(rad: RadialIntegrals, kappas: Kappas) -> complex:
    b2c = _nonzero(_bracket_2c(rad), rad, "closed two-photon bracket")
    return complex(
        -3j * np.exp(-0.5j * (kappas.kappa1 + kappas.kappa2c)) * rad.d2_d52_p32 / abs(b2c)
    )


@dataclass(frozen=True)
class LaserMode:
    label: str
    k: np.ndarray
    eps: np.ndarray
    alpha: complex

    def __post_init__(self):
        if self.label not in MODE_ORDER:
            raise DomainError(f"unknown mode {self.label!r}")
        as_direction(self.k)
        as_polarization(self.eps, self.k)

    @property
    def order(self) -> int:
        return MODE_ORDER[self.label]


@dataclass(frozen=True)
class CciConfiguration:
    modes: tuple  # LaserMode in MODE_LABELS order
    kdet: np.ndarray
    rad: RadialIntegrals
    phases: PhaseSet
    lam: float
    d2: complex
    moduli: Moduli = field(repr=False)

    def mode(self, label: str) -> LaserMode:
        return self.modes[MODE_LABELS.index(label)]

    @property
    def alphas(self) -> np.ndarray:
        return np.array([m.alpha for m in self.modes])


def build_configuration(rad: RadialIntegrals, lam: float = 1.0, phi: float = 0.0,
                        d2_override: complex | None = None) -> CciConfiguration:
    geo = geometry()
    kappas = material_phases(rad)
    moduli = amplitude_moduli(rad, lam)
    phases = PhaseSet.locked(phi, kappas)
    mods = tuple(
        LaserMode(lab, geo.k[lab], geo.eps[lab],
                  complex(getattr(moduli, "a" + lab) * np.exp(1j * phases.laser_phase(lab))))
        for lab in MODE_LABELS
    )
    d2 = d2_parameter(rad, kappas) if d2_override is None else complex(d2_override)
    return CciConfiguration(mods, geo.kdet, rad, phases, float(lam), d2, moduli)


def _fmt_vec(v) -> str:
    v = np.asarray(v)
    if np.iscomplexobj(v) and np.any(np.abs(v.imag) > 0):
        return "(" + ", ".join(f"{c.real:+.6f}{c.imag:+.6f}j" for c in v) + ")"
    return "(" + ", ".join(f"{c.real:+.6f}" for c in v) + ")"


def report(cfg: CciConfiguration) -> str:
    """Plain-text dump of vectors, moduli and phases."""
    ph = cfg.phases
    lines = [f"K' = {_fmt_vec(cfg.kdet)}"]
    for m in cfg.modes:
        lines.append(f"mode {m.label}: k = {_fmt_vec(m.k)}  eps = {_fmt_vec(m.eps)}")
        lines.append(f"    |alpha| = {abs(m.alpha):.6g}  arg(alpha) = {np.angle(m.alpha):+.6f}")
    lines.append(f"lambda = {cfg.lam:.6g}")
    lines.append(f"kappa1 = {ph.kappa1:+.6f}  kappa2o = {ph.kappa2o:+.6f}  kappa2c = {ph.kappa2c:+.6f}")
    lines.append(f"phi = {ph.phi:+.6f}  theta_o = {ph.theta_o:+.6f}  "
                 f"phi_c + theta_c = {ph.phi_c + ph.theta_c:+.6f}")
    lines.append(f"d2 = {cfg.d2.real:+.6g}{cfg.d2.imag:+.6g}j")
    return "\n".join(lines)
