"""One- and two-photon ionization amplitudes from an nS1/2 ground state.

Units: hbar = g_k = m_e = e = 1, and the common 2*pi/sqrt(K') prefactor is
dropped from both amplitudes. Everything that is left over is absorbed in
the laser scale ``lam`` of :mod:`ccibell.config`. The factor ``i`` that
separates the second-order amplitude from the first-order one is kept.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .angular import (
    clebsch_gordan,
    projections,
    spherical_component,
    spherical_harmonic,
)
from .errors import DomainError

HALF = Fraction(1, 2)

# file key -> field name
FILE_KEYS = {
    "D1_P12": "d1_p12",
    "D1_P32": "d1_p32",
    "D2_S12_P12": "d2_s12_p12",
    "D2_S12_P32": "d2_s12_p32",
    "D2_D32_P12": "d2_d32_p12",
    "D2_D32_P32": "d2_d32_p32",
    "D2_D52_P32": "d2_d52_p32",
}

# (l', 2j', 2j'') of the continuum and intermediate P states for each D2
D2_CHANNELS = {
    (0, 1, 1): "d2_s12_p12",
    (0, 1, 3): "d2_s12_p32",
    (2, 3, 1): "d2_d32_p12",
    (2, 3, 3): "d2_d32_p32",
    (2, 5, 3): "d2_d52_p32",
}


@dataclass(frozen=True)
class RadialIntegrals:
    """The seven complex radial matrix elements, used as empirical inputs."""

    d1_p12: complex
    d1_p32: complex
    d2_s12_p12: complex
    d2_s12_p32: complex
    d2_d32_p12: complex
    d2_d32_p32: complex
    d2_d52_p32: complex = 0j

    def __post_init__(self):
        for f in dataclasses.fields(self):
            object.__setattr__(self, f.name, complex(getattr(self, f.name)))

    def d1(self, jp) -> complex:
        return {1: self.d1_p12, 3: self.d1_p32}[round(2 * jp)]

    def d2(self, lp: int, jp, jpp) -> complex:
        key = (lp, round(2 * jp), round(2 * jpp))
        if key not in D2_CHANNELS:
            raise DomainError(f"no two-photon channel {key}")
        return getattr(self, D2_CHANNELS[key])

    def replace(self, **changes) -> "RadialIntegrals":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, complex]:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    @classmethod
    def random(cls, seed: int = 42, d52=0j) -> "RadialIntegrals":
        """Seeded draw, each entry uniform on the complex unit disk.

        ``d52`` overrides the D5/2 channel, which is zero by default.
        """
        rng = np.random.default_rng(seed)
        r = np.sqrt(rng.uniform(size=7))
        z = r * np.exp(2j * np.pi * rng.uniform(size=7))
        return cls(*z[:6], d2_d52_p32=d52)

    @classmethod
    def from_text(cls, text: str) -> "RadialIntegrals":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                key, _, val = line.partition(" ")
            key = key.strip().upper()
            if key not in FILE_KEYS:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            try:
                re, im = (float(p) for p in val.split(","))
            except ValueError:
                raise ValueError(f"line {lineno}: expected 're,im', got {val.strip()!r}") from None
            values[FILE_KEYS[key]] = complex(re, im)
        missing = set(FILE_KEYS.values()) - set(values) - {"d2_d52_p32"}
        if missing:
            raise ValueError(f"missing radial integrals: {sorted(missing)}")
        return cls(**values)

    @classmethod
    def load(cls, path) -> "RadialIntegrals":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def to_text(self) -> str:
        lines = []
        for key, name in FILE_KEYS.items():
            z = getattr(self, name)
            lines.append(f"{key} = {z.real!r},{z.imag!r}")
        return "\n".join(lines) + "\n"


def _ls(l):
    return range(-l, l + 1)


def angular_dipole_a1(lp, jp, mjp, l, j, mj, eps) -> complex:
    """<m_j'| A1(l'j', lj; eps) |m_j>, the reduced dipole angular factor."""
    if abs(l - lp) != 1:
        return 0j
    pref = np.sqrt((2 * l + 1) / (2 * lp + 1)) * clebsch_gordan(l, 0, 1, 0, lp, 0)
    if pref == 0:
        return 0j
    eq = {q: spherical_component(eps, q) for q in (-1, 0, 1)}
    total = 0j
    for ml in _ls(l):
        for q in (-1, 0, 1):
            mlp = ml + q
            if abs(mlp) > lp or eq[q] == 0:
                continue
            c_orb = clebsch_gordan(l, ml, 1, q, lp, mlp)
            if c_orb == 0:
                continue
            spin = sum(
                clebsch_gordan(lp, mlp, HALF, ms, jp, mjp)
                * clebsch_gordan(l, ml, HALF, ms, j, mj)
                for ms in (HALF, -HALF)
            )
            total += eq[q] * c_orb * spin
    return complex(pref * total)


def angular_dipole_a2(lp, jp, mjp, lpp, jpp, l, j, mj, eps) -> complex:
    """Two successive A1 steps through the intermediate (l'', j'') shell."""
    return sum(
        angular_dipole_a1(lp, jp, mjp, lpp, jpp, m2, eps)
        * angular_dipole_a1(lpp, jpp, m2, l, j, mj, eps)
        for m2 in projections(jpp)
    )


def _continuum_js(lp):
    return [Fraction(2 * lp + s, 2) for s in (-1, 1) if 2 * lp + s > 0]


def t1(ms_out, mj_in, eps, kdet, rad: RadialIntegrals) -> complex:
    """Single-photon amplitude into the P continuum, detected along ``kdet``."""
    total = 0j
    for mlp in _ls(1):
        ylm = spherical_harmonic(1, mlp, kdet)
        for jp in _continuum_js(1):
            mjp = mlp + Fraction(ms_out)
            if abs(mjp) > jp:
                continue
            c = clebsch_gordan(1, mlp, HALF, ms_out, jp, mjp)
            if c == 0:
                continue
            a1 = angular_dipole_a1(1, jp, mjp, 0, HALF, mj_in, eps)
            total += ylm * c * a1 * rad.d1(jp)
    return total


def t2(ms_out, mj_in, eps, kdet, rad: RadialIntegrals) -> complex:
    """Two-photon amplitude into the S and D continua via the P1/2, P3/2 shells."""
    total = 0j
    for (lp, tjp, tjpp), name in D2_CHANNELS.items():
        jp, jpp = Fraction(tjp, 2), Fraction(tjpp, 2)
        d2 = getattr(rad, name)
        if d2 == 0:
            continue
        for mlp in _ls(lp):
            mjp = mlp + Fraction(ms_out)
            if abs(mjp) > jp:
                continue
            c = clebsch_gordan(lp, mlp, HALF, ms_out, jp, mjp)
            if c == 0:
                continue
            a2 = angular_dipole_a2(lp, jp, mjp, 1, jpp, 0, HALF, mj_in, eps)
            total += spherical_harmonic(lp, mlp, kdet) * c * a2 * d2
    return 1j * total


def amplitude_table(eps, kdet, rad: RadialIntegrals, order: int, mj_in=-HALF) -> np.ndarray:
    """[t(+1/2, mj_in), t(-1/2, mj_in)] for a pathway of the given photon order."""
    fn = {1: t1, 2: t2}[order]
    return np.array([fn(ms, mj_in, eps, kdet, rad) for ms in (HALF, -HALF)])
