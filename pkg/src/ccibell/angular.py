"""Small angular-momentum algebra.

Clebsch-Gordan coefficients (Condon-Shortley phase), spherical harmonics
for l <= 2 and spherical-basis components of complex polarization vectors.

Angular momenta may be given as ints, floats or ``Fraction``; they are
converted internally to twice their value so half-integers stay exact.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial, pi, sqrt

import numpy as np

from .errors import DomainError

UNIT_TOL = 1e-12
MAX_TWICE_J = 7


def twice(x) -> int:
    """Return ``2*x`` as an int, raising if ``x`` is not a half-integer."""
    if isinstance(x, int):
        return 2 * x
    if isinstance(x, Fraction) and x.denominator <= 2:
        return 2 * x.numerator // x.denominator
    t = round(2 * x)
    if abs(2 * x - t) > 1e-9:
        raise DomainError(f"{x!r} is not a half-integer")
    return int(t)


def projections(j):
    """All m = -j, ..., j as Fractions."""
    tj = twice(j)
    return [Fraction(m, 2) for m in range(-tj, tj + 1, 2)]


def _check_pair(tj: int, tm: int) -> None:
    if tj < 0:
        raise DomainError(f"negative angular momentum j={tj}/2")
    if abs(tm) > tj:
        raise DomainError(f"|m|={abs(tm)}/2 exceeds j={tj}/2")
    if (tj - tm) % 2:
        raise DomainError(f"j={tj}/2 and m={tm}/2 differ by a non-integer")


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1; j2 m2 | J M> via Racah's single-sum formula."""
    args = tuple(twice(v) for v in (j1, m1, j2, m2, J, M))
    return _cg_twice(*args)


@lru_cache(maxsize=None)
def _cg_twice(tj1, tm1, tj2, tm2, tJ, tM) -> float:
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tJ, tM)):
        _check_pair(tj, tm)
    if max(tj1, tj2, tJ) > MAX_TWICE_J:
        raise DomainError("angular momenta above 7/2 are not supported")
    if tM != tm1 + tm2:
        return 0.0
    if tJ > tj1 + tj2 or tJ < abs(tj1 - tj2) or (tj1 + tj2 + tJ) % 2:
        return 0.0

    # all quantities below are integers once the triangle rule holds
    a = (tj1 + tj2 - tJ) // 2
    b = (tj1 - tm1) // 2
    c = (tj2 + tm2) // 2
    d = (tJ - tj2 + tm1) // 2
    e = (tJ - tj1 - tm2) // 2

    pref = Fraction(
        (tJ + 1)
        * factorial((tJ + tj1 - tj2) // 2)
        * factorial((tJ - tj1 + tj2) // 2)
        * factorial(a),
        factorial((tj1 + tj2 + tJ) // 2 + 1),
    )
    pref *= (
        factorial((tJ + tM) // 2)
        * factorial((tJ - tM) // 2)
        * factorial(b)
        * factorial((tj1 + tm1) // 2)
        * factorial((tj2 - tm2) // 2)
        * factorial(c)
    )

    total = Fraction(0)
    for k in range(max(0, -d, -e), min(a, b, c) + 1):
        den = (
            factorial(k)
            * factorial(a - k)
            * factorial(b - k)
            * factorial(c - k)
            * factorial(d + k)
            * factorial(e + k)
        )
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0.0
    sign = 1.0 if total > 0 else -1.0
    return sign * sqrt(pref * total * total)


def as_direction(v) -> np.ndarray:
    """Validate a real unit 3-vector and return it as a float array."""
    n = np.asarray(v, dtype=float)
    if n.shape != (3,):
        raise DomainError("direction must be a 3-vector")
    if abs(n @ n - 1.0) > UNIT_TOL:
        raise DomainError(f"direction {n} is not unit length")
    return n


def as_polarization(v, k=None) -> np.ndarray:
    """Validate a complex unit polarization, optionally transverse to ``k``."""
    eps = np.asarray(v, dtype=complex)
    if eps.shape != (3,):
        raise DomainError("polarization must be a 3-vector")
    if abs(np.vdot(eps, eps).real - 1.0) > UNIT_TOL:
        raise DomainError("polarization is not unit length")
    if k is not None and abs(eps @ np.asarray(k, dtype=float)) > UNIT_TOL:
        raise DomainError("polarization is not transverse to its wavevector")
    return eps


def polar_angles(n) -> tuple[float, float]:
    x, y, z = as_direction(n)
    return float(np.arccos(np.clip(z, -1.0, 1.0))), float(np.arctan2(y, x))


def spherical_harmonic(l: int, m: int, n) -> complex:
    """Y_lm at the unit vector ``n`` (physics convention, Condon-Shortley)."""
    if l not in (0, 1, 2):
        raise DomainError(f"l={l} not supported (0 <= l <= 2)")
    if abs(m) > l:
        raise DomainError(f"|m|={abs(m)} exceeds l={l}")
    theta, phi = polar_angles(n)
    ct, st = np.cos(theta), np.sin(theta)
    ph = np.exp(1j * abs(m) * phi)
    if l == 0:
        val = 0.5 / sqrt(pi)
    elif l == 1:
        val = sqrt(3 / (4 * pi)) * ct if m == 0 else -sqrt(3 / (8 * pi)) * st * ph
    elif m == 0:
        val = sqrt(5 / (16 * pi)) * (3 * ct**2 - 1)
    elif abs(m) == 1:
        val = -sqrt(15 / (8 * pi)) * st * ct * ph
    else:
        val = sqrt(15 / (32 * pi)) * st**2 * ph
    if m < 0:
        # Y_{l,-m} = (-1)^m conj(Y_lm)
        val = (-1) ** abs(m) * np.conj(val)
    return complex(val)


_SQ2 = sqrt(2.0)
SPHERICAL_BASIS = {
    +1: np.array([-1.0, -1j, 0.0]) / _SQ2,
    0: np.array([0.0, 0.0, 1.0], dtype=complex),
    -1: np.array([1.0, -1j, 0.0]) / _SQ2,
}


def spherical_component(eps, q: int) -> complex:
    """eps . conj(e_q) with e_{+-1} = -+(x +- iy)/sqrt(2), e_0 = z."""
    if q not in SPHERICAL_BASIS:
        raise DomainError(f"q={q} must be -1, 0 or +1")
    return complex(np.asarray(eps, dtype=complex) @ SPHERICAL_BASIS[q].conj())
