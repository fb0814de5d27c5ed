"""Maximization of the Bell-CHSH value over measurement settings.

The search vector has 21 entries:

    [Re z, Im z, Re z', Im z', |b_l| x4, delta_l x4, |b'_l| x4, delta'_l x4, log10 lam]

The four field moduli are |alpha_l| = r_l * lam (one-photon modes) and
r_l * sqrt(lam) (two-photon modes) with randomly sampled positive ratios r_l.

The 21-dimensional landscape is mostly a plateau at the classical value 2
(large displacements make A(beta) ~ -1) with narrow violating ridges, so
the search is seeded from an equivalent low-dimensional problem:

* Only the overlaps of the two branch field states with the coherent state
  |gamma> = |-beta> enter. After a displacement and a passive mode rotation
  the branch states are |0> and |sqrt(eta n)> of a single mode, n = ||alpha||^2,
  so a setting reduces to gamma = z along that mode plus a length t in an
  orthogonal mode: three real numbers.
* For fixed displacements the best spin settings are the unit vectors along
  s + s' and s - s', where <Gamma(zeta) (x) A> = n(zeta) . s.

That leaves seven variables [xi, psi, t, xi', psi', t', ln n]. A grid over
(xi, psi, n) at t = 0 ranks starting points, CMA-ES runs refine the best of
them, and the winner is mapped back to the 21 variables and refined there.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .amplitudes import RadialIntegrals
from .bell import (
    TSIRELSON,
    MeasurementSettings,
    _check_eta,
    bloch_correlations,
    branch_norm_sq,
    chsh,
    chsh_batch,
    combine_moments,
    spin_moments,
    zeta_from_bloch,
)
from .cmaes import CMAES, CmaResult, cmaes_minimize
from .config import MODE_LABELS, MODE_ORDER, build_configuration
from .states import CciState, combined_state, make_state

__all__ = [
    "CMAES", "CmaResult", "cmaes_minimize", "ChshProblem", "CanonicalProblem",
    "OptimizationResult", "maximize_chsh", "sweep", "SweepPoint", "phi_grid", "point_seed",
]

log = logging.getLogger(__name__)

DIM = 21
ZETA_BOUND = math.pi
BETA_MAX = 5.0
LOG10_LAM_BOUNDS = (-5.0, 2.0)
RATIO_RANGE = (0.2, 5.0)
DEFAULT_RESTARTS = 8
DEFAULT_BUDGET = 40_000
LAM_EXPONENT = np.array([1.0 if MODE_ORDER[l] == 1 else 0.5 for l in MODE_LABELS])

GRID_POINTS = 24  # per axis of the (xi, psi) seeding grid
GRID_NORMS = 32  # log-spaced values of ||alpha||^2
NORM_RANGE = (5e-3, 30.0)
CANONICAL_STEPS = np.array([0.1, 0.1, 0.05, 0.1, 0.1, 0.05, 0.1])
POLISH_STEPS = np.r_[[0.02] * 4, [0.01] * 4, [0.02] * 4, [0.01] * 4, [0.02] * 4, 0.02]


def chsh_bounds() -> np.ndarray:
    lo = np.r_[[-ZETA_BOUND] * 4, [0.0] * 16, LOG10_LAM_BOUNDS[0]]
    hi = np.r_[[ZETA_BOUND] * 4, [BETA_MAX] * 4, [2 * np.pi] * 4, [BETA_MAX] * 4,
               [2 * np.pi] * 4, LOG10_LAM_BOUNDS[1]]
    return np.stack([lo, hi], axis=1)


def sample_ratios(rng) -> np.ndarray:
    """Log-uniform |alpha_l| / lam**p ratios."""
    lo, hi = np.log(RATIO_RANGE)
    return np.exp(rng.uniform(lo, hi, size=4))


def amplitudes_for(ratios, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    return np.asarray(ratios, float) * lam[..., None] ** LAM_EXPONENT


def log10_lam_for(ratios, norm_sq: float) -> float:
    """log10 lam giving ||alpha||^2 = norm_sq, clamped to the search bounds."""
    r2 = np.asarray(ratios, float) ** 2
    lo, hi = LOG10_LAM_BOUNDS
    for _ in range(200):
        mid = (lo + hi) / 2
        if np.sum(r2 * (10.0**mid) ** (2 * LAM_EXPONENT)) < norm_sq:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


class ChshProblem:
    """-|<B>| over the 21 search variables for fixed phi, eta and amplitude ratios.

    Evaluated in the frame where every alpha_l is real and positive; the
    phase-referenced displacements make this frame exact.
    """

    def __init__(self, state: CciState, ratios, eta: float):
        self.state = state
        self.ratios = np.asarray(ratios, dtype=float)
        self.eta = _check_eta(eta)

    def decode(self, x):
        x = np.atleast_2d(x)
        zeta = x[:, 0] + 1j * x[:, 1]
        zeta_p = x[:, 2] + 1j * x[:, 3]
        beta = x[:, 4:8] * np.exp(1j * x[:, 8:12])
        beta_p = x[:, 12:16] * np.exp(1j * x[:, 16:20])
        return amplitudes_for(self.ratios, 10.0 ** x[:, 20]), zeta, zeta_p, beta, beta_p

    def values(self, x) -> np.ndarray:
        return chsh_batch(self.state, *self.decode(x), self.eta)

    def __call__(self, x) -> np.ndarray:
        return -np.abs(self.values(x))


class CanonicalProblem:
    """-max over spin settings of |<B>| in the seven canonical variables.

    A setting (xi, psi, t) stands for gamma = -beta with component
    z = xi * r + i * psi * w / r along the line from sqrt(eta) alpha_o to
    sqrt(eta) alpha_c (r = sqrt(eta n), w = min(pi, 2 r)) and t orthogonal
    to it. Restricting |psi| <= 1 keeps only the cheapest of the displacements
    that give the same relative phase between the two overlaps.
    """

    DIM = 7
    BOUNDS = np.array([[-1.5, 2.5], [-1.0, 1.0], [0.0, 2.0]] * 2 + [list(np.log(NORM_RANGE))])

    def __init__(self, state: CciState, eta: float):
        self.state = state
        self.eta = _check_eta(eta)
        self.moments = spin_moments(state)

    @staticmethod
    def _z(r, xi, psi):
        return xi * r + 1j * psi * np.minimum(np.pi, 2 * r) / r

    def correlations(self, norm_sq, xi, psi, t) -> np.ndarray:
        """Bloch correlation vectors, shape broadcast(...) + (3,)."""
        eta = self.eta
        m = eta * norm_sq
        r = np.sqrt(m)
        z = self._z(r, xi, psi)
        base = -(np.abs(z) ** 2 + t**2) / 2
        a = np.exp(base)  # <sqrt(eta) alpha_o | gamma>, common phase dropped
        b = np.exp(base - m / 2 + r * z)  # <sqrt(eta) alpha_c | gamma>
        foo = 2 * np.abs(a) ** 2 - 1
        fcc = 2 * np.abs(b) ** 2 - 1
        foc = (2 * a * np.conj(b) - np.exp(-m / 2)) * np.exp(-(1 - eta) * norm_sq / 2)
        s = combine_moments(*self.moments, foo, fcc, foc)
        return s / np.expand_dims(branch_norm_sq(self.state, norm_sq), -1)

    def values(self, y) -> np.ndarray:
        y = np.atleast_2d(y)
        n = np.exp(y[:, 6])
        s1 = self.correlations(n, y[:, 0], y[:, 1], y[:, 2])
        s2 = self.correlations(n, y[:, 3], y[:, 4], y[:, 5])
        return np.linalg.norm(s1 + s2, axis=-1) + np.linalg.norm(s1 - s2, axis=-1)

    def __call__(self, y) -> np.ndarray:
        return -self.values(y)

    def seeds(self, count: int, points: int = GRID_POINTS, norms: int = GRID_NORMS):
        """Best grid pair for each ||alpha||^2, best first; (value, y) tuples."""
        xi, psi = np.meshgrid(np.linspace(-1, 2, points), np.linspace(-1, 1, points, endpoint=False))
        xi, psi = xi.ravel(), psi.ravel()
        out = []
        for n in np.exp(np.linspace(*np.log(NORM_RANGE), norms)):
            s = self.correlations(n, xi, psi, 0.0)
            g = s @ s.T
            d = np.diag(g)
            tot = d[:, None] + d[None, :]
            v = np.sqrt(np.maximum(tot + 2 * g, 0)) + np.sqrt(np.maximum(tot - 2 * g, 0))
            i, j = divmod(int(np.argmax(v)), xi.size)
            out.append((float(v[i, j]), np.array([xi[i], psi[i], 0.0, xi[j], psi[j], 0.0, np.log(n)])))
        out.sort(key=lambda c: -c[0])
        return out[:count]

    def displacement(self, amps, xi, psi, t) -> np.ndarray:
        """beta (alpha-real frame) for one canonical setting and real amplitudes."""
        amps = np.asarray(amps, dtype=float)
        a_o = np.r_[amps[:2], 0.0, 0.0]
        a_c = np.r_[0.0, 0.0, amps[2:]]
        no, nc = a_o @ a_o, a_c @ a_c
        n = no + nc
        r = np.sqrt(self.eta * n)
        d = (a_c - a_o) / np.sqrt(n)
        e = (nc * a_o + no * a_c) / np.sqrt(no * nc * n)
        gamma = np.sqrt(self.eta) * a_o + self._z(r, xi, psi) * d + t * e
        return -gamma

    def embed(self, y, ratios) -> np.ndarray:
        """21-vector realizing canonical point ``y`` for the given ratios."""
        y = np.asarray(y, dtype=float)
        ll = log10_lam_for(ratios, float(np.exp(y[6])))
        amps = amplitudes_for(ratios, 10.0**ll)
        b1 = self.displacement(amps, *y[0:3])
        b2 = self.displacement(amps, *y[3:6])
        m1, m2 = np.minimum(np.abs(b1), BETA_MAX), np.minimum(np.abs(b2), BETA_MAX)
        d1, d2 = np.mod(np.angle(b1), 2 * np.pi), np.mod(np.angle(b2), 2 * np.pi)
        s1 = bloch_correlations(self.state, amps[None], (m1 * np.exp(1j * d1))[None], self.eta)[0]
        s2 = bloch_correlations(self.state, amps[None], (m2 * np.exp(1j * d2))[None], self.eta)[0]
        z = zeta_from_bloch(s1 + s2) if np.any(s1 + s2) else 0j
        zp = zeta_from_bloch(s1 - s2) if np.any(s1 - s2) else 0j
        return np.r_[z.real, z.imag, zp.real, zp.imag, m1, d1, m2, d2, ll]


@dataclass
class OptimizationResult:
    phi: float
    eta: float
    best_value: float
    best_settings: MeasurementSettings
    best_lambda: float
    ratios: np.ndarray
    seed: int
    restarts_used: int
    evaluations: int
    d2: complex = 0j
    run_values: list = field(default_factory=list)

    @property
    def amplitudes(self) -> np.ndarray:
        """|alpha_l| at the optimum."""
        return amplitudes_for(self.ratios, self.best_lambda)

    @property
    def alpha_norm_sq(self) -> float:
        return float(np.sum(self.amplitudes**2))


def maximize_chsh(rad: RadialIntegrals, phi: float, eta: float = 1.0, d2_override=None,
                  seed: int = 0, restarts: int = DEFAULT_RESTARTS, budget: int = DEFAULT_BUDGET,
                  ratios=None) -> OptimizationResult:
    """Best |<B>| at control phase ``phi`` and efficiency ``eta``.

    Each restart is a CMA-ES run on the canonical problem from the next
    best grid seed, with the population doubled every time. The winner is
    mapped to the 21 search variables and refined by a last CMA-ES run.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    cfg = build_configuration(rad, 1.0, phi, d2_override)
    state = combined_state(cfg)
    rng = np.random.default_rng(seed)
    if ratios is None:
        ratios = sample_ratios(rng)
    ratios = np.asarray(ratios, dtype=float)
    canon = CanonicalProblem(state, eta)

    best = None
    evals = 0
    runs = []
    pop = 4 + int(3 * math.log(canon.DIM))
    seeds = canon.seeds(restarts)
    for _, y0 in seeds:
        res = cmaes_minimize(canon, canon.DIM, canon.BOUNDS, budget, x0=y0,
                             sigma0=CANONICAL_STEPS, popsize=pop, vectorized=True, rng=rng)
        evals += res.evaluations
        runs.append(-res.f)
        if best is None or res.f < best.f:
            best = res
        log.debug("phi=%.4f eta=%.3f run %d: %.10f (%s)", phi, eta, len(runs), -res.f, res.stop)
        pop *= 2

    problem = ChshProblem(state, ratios, eta)
    x0 = canon.embed(best.x, ratios)
    f0 = float(problem(x0)[0])
    polish = cmaes_minimize(problem, DIM, chsh_bounds(), budget, x0=x0, sigma0=POLISH_STEPS,
                            vectorized=True, rng=rng)
    evals += polish.evaluations + 1
    x, value = (polish.x, -polish.f) if polish.f < f0 else (x0, -f0)

    settings = MeasurementSettings.from_flat(x[:20])
    lam = float(10.0 ** x[20])
    # the batch kernel works in the alpha-real frame; recheck with the full state
    amps = amplitudes_for(ratios, lam)
    phases = np.exp(1j * np.array([cfg.phases.laser_phase(l) for l in MODE_LABELS]))
    full = make_state(cfg.phases, amps * phases, cfg.d2)
    check = abs(chsh(full, settings, eta))
    if not math.isclose(check, value, rel_tol=0, abs_tol=1e-9):
        raise RuntimeError(f"batch and scalar CHSH disagree: {value} vs {check}")
    if value > TSIRELSON + 1e-9:
        raise RuntimeError(f"CHSH value {value} exceeds the Tsirelson bound")
    return OptimizationResult(
        phi=float(phi), eta=float(eta), best_value=value, best_settings=settings,
        best_lambda=lam, ratios=ratios, seed=int(seed), restarts_used=len(runs),
        evaluations=evals, d2=cfg.d2, run_values=runs,
    )


def point_seed(seed: int, *indices: int) -> int:
    """Independent, reproducible seed for one grid point."""
    return int(np.random.SeedSequence([seed, *indices]).generate_state(1)[0])


def phi_grid(points: int) -> np.ndarray:
    """``points`` equally spaced phases on [-pi, pi)."""
    if points < 1:
        raise ValueError("phi grid needs at least one point")
    return -np.pi + 2 * np.pi * np.arange(points) / points


@dataclass
class SweepPoint:
    i_phi: int
    i_eta: int
    phi: float
    eta: float
    seed: int
    result: OptimizationResult | None = None
    error: str | None = None


def _run_point(args) -> SweepPoint:
    rad, phi, eta, d2, seed, restarts, budget, ratios, i, j = args
    try:
        res = maximize_chsh(rad, phi, eta, d2, seed, restarts, budget, ratios)
        return SweepPoint(i, j, phi, eta, seed, res)
    except Exception as exc:  # recorded per point, the sweep goes on
        log.warning("phi=%g eta=%g failed: %s", phi, eta, exc)
        return SweepPoint(i, j, phi, eta, seed, error=f"{type(exc).__name__}: {exc}")


def sweep(rad: RadialIntegrals, phis, etas, d2_override=None, seed: int = 0,
          restarts: int = DEFAULT_RESTARTS, budget: int = DEFAULT_BUDGET, jobs: int = 1,
          ratios=None) -> list[SweepPoint]:
    """Optimize every (phi, eta) pair; results in grid order, eta-major."""
    phis, etas = list(phis), list(etas)
    if not phis or not etas:
        raise ValueError("sweep needs a nonempty phi grid and eta list")
    tasks = [
        (rad, float(p), float(e), d2_override, point_seed(seed, i, j), restarts, budget, ratios, i, j)
        for j, e in enumerate(etas)
        for i, p in enumerate(phis)
    ]
    if jobs <= 1:
        return [_run_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_point, tasks))
