"""Numerical search for points of the compatible-parameter set.

All searches minimize over the closed unit box of the free variables with
L-BFGS-B (a projected quasi-Newton method); iterates are clipped to the box
before anything is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .dataset import Dataset
from .dynamics import TransitionModel
from .hypercube import outgoing
from .likelihood import LikelihoodReport, free_a_variables, loglik, reach_sensitivities
from .polyalg import CompiledPolynomials, VarId
from .sysgen import REDUCED, GeneratedSystem, extend_point, residuals

DEFAULT_LAMBDAS = (1e1, 1e2, 1e3, 1e4, 1e5, 1e6)
DEDUP_DISTANCE = 1e-4


@dataclass(frozen=True)
class SolveResult:
    point: dict[VarId, float]
    residuals: tuple[float, ...]
    iterations: int
    start_index: int
    start_seed: int
    converged: bool
    history: tuple[float, ...] = field(default=(), repr=False)
    loglik: LikelihoodReport | None = None

    @property
    def objective(self) -> float:
        return math.fsum(r * r for r in self.residuals)

    def to_document(self) -> dict:
        doc = {
            "start_index": self.start_index,
            "start_seed": self.start_seed,
            "converged": self.converged,
            "iterations": self.iterations,
            "objective": self.objective,
            "point": {v.name: x for v, x in sorted(self.point.items())},
            "residuals": list(self.residuals),
        }
        if self.loglik is not None:
            doc["loglik"] = self.loglik.loglik if math.isfinite(self.loglik.loglik) else "-inf"
        return doc


def _minimize_box(fun, x0: np.ndarray, maxiter: int) -> tuple[np.ndarray, int, list[float]]:
    """L-BFGS-B on the unit box; returns the clipped minimizer, iteration
    count and the objective after each accepted iteration."""
    history = [float(fun(x0)[0])]
    if x0.size == 0:
        return x0, 0, history

    def record(intermediate_result):
        history.append(float(intermediate_result.fun))

    res = minimize(
        fun,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, 1.0)] * x0.size,
        callback=record,
        options={"maxiter": maxiter, "maxfun": 20 * maxiter, "ftol": 1e-300, "gtol": 1e-15, "maxcor": 20},
    )
    return np.clip(res.x, 0.0, 1.0), int(res.nit), history


def _sum_squares(compiled: CompiledPolynomials):
    def fun(x):
        r = compiled.values(x)
        J = compiled.jacobian(x)
        return float(r @ r), 2.0 * (J.T @ r)

    return fun


def _starts(d: int, starts: int, seed: int) -> list[np.ndarray]:
    if starts < 1:
        raise ValueError("starts must be >= 1")
    rng = np.random.default_rng(seed)
    out = [np.full(d, 0.5)]
    out += [rng.uniform(0.0, 1.0, size=d) for _ in range(starts - 1)]
    return out


def _dedup(results: list[SolveResult], order: Sequence[VarId]) -> list[SolveResult]:
    results = sorted(results, key=lambda r: (r.objective, r.start_index))
    kept: list[SolveResult] = []
    vecs: list[np.ndarray] = []
    for r in results:
        v = np.array([r.point[k] for k in order])
        if any(np.linalg.norm(v - w) < DEDUP_DISTANCE for w in vecs):
            continue
        kept.append(r)
        vecs.append(v)
    return kept


def _require_reduced(system: GeneratedSystem) -> None:
    if system.mode != REDUCED:
        raise ValueError("solver needs a reduced system")


def solve_residual(
    system: GeneratedSystem,
    starts: int = 20,
    seed: int = 0,
    tol: float = 1e-10,
    maxiter: int = 5000,
) -> list[SolveResult]:
    """Minimize the sum of squared generators from several starts.

    The first start is the box centre; the others are uniform in the box.
    A result counts as converged when the objective drops below ``tol``.
    Results are sorted by objective and near-duplicates are merged.
    """
    _require_reduced(system)
    if tol <= 0:
        raise ValueError("tol must be positive")
    variables = list(system.variables)
    fun = _sum_squares(CompiledPolynomials(list(system.generators), variables))
    results = []
    for k, x0 in enumerate(_starts(len(variables), starts, seed)):
        x, nit, hist = _minimize_box(fun, x0, maxiter)
        point = {v: float(xi) for v, xi in zip(variables, x)}
        res = tuple(residuals(system, point))
        obj = math.fsum(r * r for r in res)
        results.append(SolveResult(point, res, nit, k, seed, obj < tol, tuple(hist)))
    return _dedup(results, variables)


def snap(x: float) -> Fraction:
    """Nearest rational with denominator at most 10**12."""
    return Fraction(x).limit_denominator(10**12)


def solve_fiber(
    system: GeneratedSystem,
    a_values: Mapping[VarId, float],
    starts: int = 1,
    seed: int = 0,
    tol: float = 1e-10,
    maxiter: int = 5000,
) -> list[SolveResult]:
    """Fix the free a-variables and solve for the b-variables only.

    Entries of ``a_values`` that are not free variables of the system are
    ignored.
    """
    _require_reduced(system)
    missing = [v.name for v in system.a_variables if v not in a_values]
    if missing:
        raise ValueError(f"missing a-values for {', '.join(missing)}")
    fixed_a = {v: snap(float(a_values[v])) for v in system.a_variables}
    if any(not 0 <= x <= 1 for x in fixed_a.values()):
        raise ValueError("a-values must lie in [0, 1]")
    reduced = [g.substitute(fixed_a) for g in system.generators]
    bvars = list(system.b_variables)
    fun = _sum_squares(CompiledPolynomials(reduced, bvars))
    a_float = {v: float(x) for v, x in fixed_a.items()}
    results = []
    for k, x0 in enumerate(_starts(len(bvars), starts, seed)):
        x, nit, hist = _minimize_box(fun, x0, maxiter)
        point = dict(a_float)
        point.update({v: float(xi) for v, xi in zip(bvars, x)})
        res = tuple(residuals(system, point))
        obj = math.fsum(r * r for r in res)
        results.append(SolveResult(point, res, nit, k, seed, obj < tol, tuple(hist)))
    return _dedup(results, list(system.variables))


# -- penalized maximum likelihood -------------------------------------------

_LOG_FLOOR = 1e-12


def _safe_log(r: float) -> tuple[float, float]:
    """log with a linear continuation below a small floor: (value, slope)."""
    if r >= _LOG_FLOOR:
        return math.log(r), 1.0 / r
    return math.log(_LOG_FLOOR) + (r - _LOG_FLOOR) / _LOG_FLOOR, 1.0 / _LOG_FLOOR


def _loglik_objective(system: GeneratedSystem, d: Dataset):
    L = system.L
    avars = free_a_variables(L)
    col = {v: k for k, v in enumerate(avars)}
    pos = {v: k for k, v in enumerate(system.variables)}
    inner = [s for s in range(1, (1 << L) - 1) if d.counts[s]]
    groups = [[pos[v] for v in avars if v.src == n] for n in range((1 << L) - 1)]

    def value_grad(x: np.ndarray) -> tuple[float, np.ndarray, float, np.ndarray]:
        """Log-likelihood, its gradient, and a hinge penalty keeping the
        eliminated a-variables non-negative (with its gradient)."""
        a = {}
        for n in range((1 << L) - 1):
            out = outgoing(n, L)
            if len(out) == 1:
                a[out[0]] = 1.0
                continue
            rest = 1.0
            for e in out[1:]:
                a[e] = x[pos[VarId("a", e.src, e.dst, L)]]
                rest -= a[e]
            a[out[0]] = rest
        R, S = reach_sensitivities(L, a, col)
        ll = 0.0
        g_free = np.zeros(len(avars))
        for s in inner:
            val, slope = _safe_log(R[s])
            ll += d.counts[s] * val
            g_free += d.counts[s] * slope * S[s]
        grad = np.zeros(x.size)
        for v, k in col.items():
            grad[pos[v]] = g_free[k]
        hinge = 0.0
        hgrad = np.zeros(x.size)
        for idx in groups:
            if idx:
                excess = x[idx].sum() - 1.0
                if excess > 0:
                    hinge += excess * excess
                    hgrad[idx] += 2.0 * excess
        return ll, grad, hinge, hgrad

    return value_grad


def solve_mle(
    system: GeneratedSystem,
    d: Dataset,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    starts: int = 5,
    seed: int = 0,
    feasible_tol: float = 1e-8,
    maxiter: int = 5000,
) -> SolveResult:
    """Maximize the log-likelihood over the compatible set by an exterior
    penalty ``loglik - lam * (sum of squares + simplex hinge)`` with ``lam``
    increased along ``lambdas`` (warm-started).

    Returns the feasible result with the best log-likelihood; if no start is
    feasible the one with the smallest objective is returned unconverged.
    """
    _require_reduced(system)
    if d.L != system.L:
        raise ValueError("dataset and system dimensions differ")
    variables = list(system.variables)
    sq = _sum_squares(CompiledPolynomials(list(system.generators), variables))
    llf = _loglik_objective(system, d)
    candidates = []
    for k, x0 in enumerate(_starts(len(variables), starts, seed)):
        x = x0
        nit_total = 0
        hist: list[float] = []
        for lam in lambdas:

            def fun(z, lam=lam):
                F, gF = sq(z)
                ll, gll, h, gh = llf(z)
                return -ll + lam * (F + h), -gll + lam * (gF + gh)

            x, nit, _ = _minimize_box(fun, x, maxiter)
            nit_total += nit
            F = sq(x)[0]
            hist.append(F)
            if F < feasible_tol and llf(x)[2] == 0.0:
                break
        point = {v: float(xi) for v, xi in zip(variables, x)}
        res = tuple(residuals(system, point))
        model = TransitionModel.from_free(system.L, {v: point[v] for v in system.a_variables}, clip=True)
        report = loglik(model, d)
        obj = math.fsum(r * r for r in res)
        candidates.append(SolveResult(point, res, nit_total, k, seed, obj < feasible_tol, tuple(hist), report))
    feasible = [c for c in candidates if c.converged]
    if feasible:
        return max(feasible, key=lambda c: (c.loglik.loglik, -c.start_index))
    best = min(candidates, key=lambda c: (c.objective, c.start_index))
    return best


def full_point(system: GeneratedSystem, result: SolveResult) -> dict[VarId, float]:
    """Result point completed with the eliminated and forced variables."""
    return extend_point(system, result.point)
