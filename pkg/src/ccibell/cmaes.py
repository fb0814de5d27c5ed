"""Covariance matrix adaptation evolution strategy with box constraints."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_BUDGET = 40_000


@dataclass
class CmaResult:
    """Best point, its value, evaluations spent and the stopping reason."""

    x: np.ndarray
    f: float
    evaluations: int
    generations: int
    stop: str


class CMAES:
    """(mu/mu_w, lambda)-CMA-ES with rank-one and rank-mu covariance updates.

    Works in the unit box: ``bounds`` are mapped affinely onto [0, 1]^n and
    infeasible candidates are resampled, then clipped. A scalar ``sigma0``
    is a step size in unit-box coordinates; a vector is per-coordinate and
    in user units.
    """

    def __init__(self, dim, bounds, rng, x0=None, sigma0=0.3, popsize=None, max_resample=10):
        self.n = n = dim
        self.bounds = np.asarray(bounds, dtype=float)
        self.lo, self.span = self.bounds[:, 0], self.bounds[:, 1] - self.bounds[:, 0]
        self.rng = rng
        self.max_resample = max_resample
        self.lam = popsize or 4 + int(3 * math.log(n))
        if self.lam < 2:
            raise ValueError("population size must be >= 2")
        self.mu = self.lam // 2
        w = math.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = 1.0 / np.sum(self.weights**2)

        self.cc = (4 + self.mueff / n) / (n + 4 + 2 * self.mueff / n)
        self.cs = (self.mueff + 2) / (n + self.mueff + 5)
        self.c1 = 2 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(1 - self.c1, 2 * (self.mueff - 2 + 1 / self.mueff) / ((n + 2) ** 2 + self.mueff))
        self.damps = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (n + 1)) - 1) + self.cs
        self.chin = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))

        if x0 is None:
            self.mean = rng.uniform(size=n)
        else:
            self.mean = np.clip((np.asarray(x0, float) - self.lo) / self.span, 0, 1)
        # a vector sigma0 (user units) sets per-coordinate initial step sizes
        if np.ndim(sigma0) == 0:
            steps = np.full(n, float(sigma0))
        else:
            steps = np.asarray(sigma0, dtype=float) / self.span
        self.sigma = float(steps.max())
        self.D = steps / self.sigma
        self.C = np.diag(self.D**2)
        self.B = np.eye(n)
        self.pc = np.zeros(n)
        self.ps = np.zeros(n)
        self.gen = 0

    def to_user(self, u):
        return self.lo + self.span * u

    def ask(self) -> np.ndarray:
        """Candidates in unit-box coordinates, shape (popsize, n).

        Coordinates that leave the box are redrawn from their marginal
        distribution; whatever is still outside after ``max_resample``
        rounds is clipped.
        """
        z = self.rng.standard_normal((self.lam, self.n))
        u = self.mean + self.sigma * z @ (self.B * self.D).T
        sd = self.sigma * np.sqrt(np.diag(self.C))
        for _ in range(self.max_resample):
            bad = (u < 0) | (u > 1)
            if not bad.any():
                break
            redraw = self.mean + sd * self.rng.standard_normal((self.lam, self.n))
            u[bad] = redraw[bad]
        return np.clip(u, 0.0, 1.0)

    def tell(self, u: np.ndarray, f: np.ndarray) -> None:
        n = self.n
        self.gen += 1
        order = np.argsort(f, kind="stable")[: self.mu]
        old = self.mean
        y = (u[order] - old) / self.sigma
        yw = self.weights @ y
        self.mean = old + self.sigma * yw

        inv_sqrt = (self.B / self.D) @ self.B.T
        self.ps = (1 - self.cs) * self.ps + math.sqrt(self.cs * (2 - self.cs) * self.mueff) * inv_sqrt @ yw
        norm_ps = np.linalg.norm(self.ps)
        hsig = norm_ps / math.sqrt(1 - (1 - self.cs) ** (2 * self.gen)) < (1.4 + 2 / (n + 1)) * self.chin
        self.pc = (1 - self.cc) * self.pc + hsig * math.sqrt(self.cc * (2 - self.cc) * self.mueff) * yw

        rank_mu = (y.T * self.weights) @ y
        self.C = (
            (1 - self.c1 - self.cmu) * self.C
            + self.c1 * (np.outer(self.pc, self.pc) + (1 - hsig) * self.cc * (2 - self.cc) * self.C)
            + self.cmu * rank_mu
        )
        self.sigma *= math.exp((self.cs / self.damps) * (norm_ps / self.chin - 1))
        self.sigma = min(self.sigma, 1.0)

        self.C = np.triu(self.C) + np.triu(self.C, 1).T
        d2, self.B = np.linalg.eigh(self.C)
        self.D = np.sqrt(np.maximum(d2, 1e-300))

    @property
    def condition(self) -> float:
        return float((self.D.max() / self.D.min()) ** 2)


def cmaes_minimize(objective, dim, bounds, budget=DEFAULT_BUDGET, seed=0, *, x0=None,
                   sigma0=0.3, popsize=None, vectorized=False, tolfun=1e-12, tolx=1e-12,
                   rng=None) -> CmaResult:
    """Minimize ``objective`` inside ``bounds`` (shape (dim, 2)).

    With ``vectorized=True`` the objective receives a (popsize, dim) array
    and returns popsize values; otherwise it is called per candidate.
    NaN values are treated as +inf. Exhausting the budget is not an error.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    bounds = np.asarray(bounds, dtype=float)
    if bounds.shape != (dim, 2) or not np.all(np.isfinite(bounds)) or np.any(bounds[:, 1] <= bounds[:, 0]):
        raise ValueError("bounds must be finite (dim, 2) with lower < upper")
    rng = rng if rng is not None else np.random.default_rng(seed)
    es = CMAES(dim, bounds, rng, x0=x0, sigma0=sigma0, popsize=popsize)

    best_x, best_f = None, np.inf
    evals = 0
    history = []
    window = 10 + int(math.ceil(30 * dim / es.lam))
    stop = "budget"
    while evals + es.lam <= budget:
        u = es.ask()
        x = es.to_user(u)
        if vectorized:
            f = np.asarray(objective(x), dtype=float)
        else:
            f = np.array([objective(xi) for xi in x], dtype=float)
        f = np.where(np.isnan(f), np.inf, f)
        evals += es.lam
        k = int(np.argmin(f))
        if f[k] < best_f:
            best_f, best_x = float(f[k]), x[k].copy()
        es.tell(u, f)

        history.append(float(f[k]))
        if len(history) > window:
            history.pop(0)
            finite = f[np.isfinite(f)]
            flat = finite.size > 1 and np.ptp(finite) < tolfun
            if max(history) - min(history) < tolfun and flat:
                stop = "tolfun"
                break
        if es.sigma * math.sqrt(es.D.max()) < tolx:
            stop = "tolx"
            break
        if es.condition > 1e14:
            stop = "condition"
            break
    if best_x is None:
        # budget below one population: report the mean
        best_x = es.to_user(es.mean)
        if budget >= 1:
            fx = objective(best_x[None])[0] if vectorized else objective(best_x)
            best_f = float(fx) if np.isfinite(fx) else np.inf
            evals = 1
    return CmaResult(best_x, best_f, evals, es.gen, stop)
