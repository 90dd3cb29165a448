"""Empirical checks of the regret-shape assumptions behind the collaboration game.

Three families of checks live here:

* concavity and logarithmic limitation of a single regret curve ``R(t)``,
  tested through discrete derivatives on a finite window grid;
* the "more the merrier" monotonicity ``R^Q_a <= R^S_a`` for ``a in S ⊂ Q``
  on a table of coalitional regrets;
* invariance of the grand-coalition regrets under relabeling of agents.

All checks are noise-aware: a window or pair is only flagged when the
violation exceeds ``k`` standard errors of the measured quantity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algorithms.base import CoalitionRunResult
from .bandit_env import ProblemInstance
from .coalition_game.core import _expand, _subset_pairs
from .coalition_game.game import RegretTable, _stderr
from .errors import InvalidInputError
from .rng import RngStream

ATOL = 1e-12

MORE_MERRIER_HEADER = ("Coalition", "Agent", "Regret±err", "Sub-coalition", "Regret±err", "ratio")


@dataclass(frozen=True)
class RegretCurve:
    """Cumulative mean regret ``R(0..T)`` with ``R(0) = 0``.

    ``samples`` optionally keeps the per-repetition curves, shape (R, T+1);
    derived quantities then get exact paired standard errors.
    """

    values: np.ndarray
    stderr: np.ndarray | None = None
    num_reps: int = 1
    samples: np.ndarray | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise InvalidInputError("a regret curve needs values for t = 0..T with T >= 1")
        if values[0] != 0.0:
            raise InvalidInputError("a regret curve must start at R(0) = 0")
        stderr = np.zeros_like(values) if self.stderr is None else np.asarray(self.stderr, dtype=float)
        if stderr.shape != values.shape:
            raise InvalidInputError("stderr must have the same length as values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "stderr", stderr)
        if self.samples is not None:
            samples = np.asarray(self.samples, dtype=float)
            if samples.ndim != 2 or samples.shape[1] != values.size:
                raise InvalidInputError("samples must have shape (reps, T+1)")
            object.__setattr__(self, "samples", samples)

    @property
    def horizon(self) -> int:
        return self.values.size - 1

    @classmethod
    def from_samples(cls, samples, starts_at_zero: bool = False) -> "RegretCurve":
        """Average per-repetition curves of shape (R, T) covering ``t = 1..T``.

        Pass ``starts_at_zero=True`` when the rows already hold ``t = 0..T``.
        """
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        if not starts_at_zero:
            samples = np.hstack([np.zeros((samples.shape[0], 1)), samples])
        return cls(samples.mean(axis=0), _stderr(samples, axis=0), samples.shape[0], samples)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], horizon: int) -> "RegretCurve":
        """Deterministic curve ``R(t) = fn(t) - fn(0)``; ``fn(0)`` may be infinite."""
        t = np.arange(horizon + 1, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.asarray(fn(t), dtype=float)
        values[0] = 0.0
        return cls(values)

    @classmethod
    def from_runs(cls, runs: Sequence[CoalitionRunResult], agent: int) -> "RegretCurve":
        return cls.from_samples(np.stack([run.regret_curve(agent) for run in runs]))


@dataclass(frozen=True)
class WindowGrid:
    """A finite set of ``(t, g, h)`` windows for discrete derivative checks."""

    windows: tuple[tuple[int, int, int], ...]

    def __iter__(self):
        return iter(self.windows)

    def __len__(self) -> int:
        return len(self.windows)

    @classmethod
    def product(cls, ts, gs, hs) -> "WindowGrid":
        return cls(tuple((int(t), int(g), int(h)) for t in ts for g in gs for h in hs))

    @classmethod
    def default(cls, horizon: int, num_t: int = 16, burn_in: int = 8) -> "WindowGrid":
        """``g = h`` in ``{T/32, T/16, T/8}`` and ``num_t`` log-spaced ``t >= burn_in``."""
        windows = []
        for div in (32, 16, 8):
            g = max(1, horizon // div)
            t_max = horizon - 2 * g
            if t_max < burn_in:
                continue
            ts = np.unique(np.round(np.geomspace(burn_in, t_max, num_t)).astype(int))
            windows.extend((int(t), g, g) for t in ts)
        return cls(tuple(dict.fromkeys(windows)))

    def validate(self, horizon: int) -> None:
        if not self.windows:
            raise InvalidInputError("the window grid is empty")
        for t, g, h in self.windows:
            if t < 0 or g < 1 or h < 1 or t + g + h > horizon:
                raise InvalidInputError(f"window (t={t}, g={g}, h={h}) does not fit in T={horizon}")


@dataclass(frozen=True)
class WindowViolation:
    t: int
    g: int
    h: int
    value: float
    threshold: float


@dataclass(frozen=True)
class PairViolation:
    agent: int
    coalition: int
    sub_coalition: int
    regret: float
    regret_err: float
    sub_regret: float
    sub_err: float
    ratio: float


@dataclass
class AssumptionReport:
    name: str
    violations: list = field(default_factory=list)
    checked: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.passed

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return f"{self.name}: {status} ({len(self.violations)} of {self.checked} flagged)"


def discrete_derivatives(curve: RegretCurve, t: int, g: int, h: int) -> tuple[float, float]:
    """``(R'(t,h), R''(t,g,h))`` from forward differences of the stored curve."""
    T = curve.horizon
    if g < 1 or h < 1 or t < 0 or t + g + h > T:
        raise InvalidInputError(f"window (t={t}, g={g}, h={h}) does not fit in T={T}")
    R = curve.values
    r1 = (R[t + h] - R[t]) / h
    r1_shift = (R[t + g + h] - R[t + g]) / h
    return float(r1), float((r1_shift - r1) / g)


def _second_derivatives(curve: RegretCurve, grid: WindowGrid) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``R''`` over a grid together with its standard error."""
    w = np.array(grid.windows, dtype=np.int64)
    t, g, h = w[:, 0], w[:, 1], w[:, 2]
    idx = np.stack([t, t + h, t + g, t + g + h], axis=1)
    coef = np.stack([np.ones(len(t)), -np.ones(len(t)), -np.ones(len(t)), np.ones(len(t))], axis=1)
    coef /= (g * h)[:, None]

    def combine(rows):
        return (rows[..., idx] * coef).sum(axis=-1)

    r2 = combine(curve.values)
    if curve.samples is not None and curve.samples.shape[0] > 1:
        se = _stderr(combine(curve.samples), axis=0)
    else:
        # no per-repetition data: triangle bound, valid under any correlation
        se = (curve.stderr[idx] * np.abs(coef)).sum(axis=1)
    return r2, se


def check_strict_concavity(curve: RegretCurve, grid: WindowGrid | None = None, k: float = 1.0) -> AssumptionReport:
    """Flag windows whose second derivative is not strictly negative.

    A window is flagged when ``R'' - k * se(R'') > -1e-12``.  The reported
    ``upsilon_floor`` is the smallest ``|R''|`` over the grid.
    """
    grid = WindowGrid.default(curve.horizon) if grid is None else grid
    grid.validate(curve.horizon)
    r2, se = _second_derivatives(curve, grid)
    report = AssumptionReport("strict concavity", checked=len(grid))
    flagged = r2 - k * se > -ATOL
    for (t, g, h), value, bad in zip(grid.windows, r2, flagged):
        if bad:
            report.violations.append(WindowViolation(t, g, h, float(value), 0.0))
    report.stats.update(
        min_r2=float(r2.min()), max_r2=float(r2.max()), upsilon_floor=float(np.abs(r2).min())
    )
    return report


def default_log_constant(num_actions: int) -> float:
    return 10.0 * num_actions


def check_log_limitation(
    curve: RegretCurve,
    c: float,
    eps: float = 0.1,
    grid: WindowGrid | None = None,
    k: float = 1.0,
) -> AssumptionReport:
    """Flag windows where ``R'' + k * se(R'') < -c * t^(-2 + eps)``.

    See :func:`default_log_constant` for the conventional choice of ``c``.
    """
    if c <= 0 or eps <= 0:
        raise InvalidInputError("c and eps must be positive")
    grid = WindowGrid.default(curve.horizon) if grid is None else grid
    grid.validate(curve.horizon)
    r2, se = _second_derivatives(curve, grid)
    t = np.array([w[0] for w in grid.windows], dtype=float)
    with np.errstate(divide="ignore"):
        bound = -c * np.power(t, -2.0 + eps)
    report = AssumptionReport("log limitation", checked=len(grid))
    for (tt, g, h), value, b, s in zip(grid.windows, r2, bound, se):
        if value + k * s < b - ATOL:
            report.violations.append(WindowViolation(tt, g, h, float(value), float(b)))
    report.stats.update(min_r2=float(r2.min()), max_r2=float(r2.max()), c=c, eps=eps)
    return report


def check_more_merrier(table: RegretTable, k: float = 0.0) -> AssumptionReport:
    """Flag every ``a in S ⊂ Q`` with ``R^Q_a > R^S_a + k * sqrt(se_Q^2 + se_S^2)``.

    Each violation carries the ratio ``R^Q_a / R^S_a`` (``inf`` when the
    sub-coalition regret is zero).
    """
    table.require_complete()
    n = table.num_agents
    report = AssumptionReport("more the merrier")
    if n < 2:
        return report
    S_c, Q_c = _subset_pairs(n - 1)
    for a in range(n):
        bit = 1 << a
        S = _expand(S_c, a) | bit
        Q = _expand(Q_c, a) | bit
        rs, rq = table.means[S, a], table.means[Q, a]
        es, eq = table.stderr[S, a], table.stderr[Q, a]
        allowance = ATOL * max(1.0, float(np.abs(table.means).max()))
        if k > 0:
            allowance = allowance + k * np.hypot(es, eq)
        report.checked += S.size
        for i in np.flatnonzero(rq > rs + allowance):
            ratio = float(rq[i] / rs[i]) if rs[i] != 0 else float("inf")
            report.violations.append(
                PairViolation(a, int(Q[i]), int(S[i]), float(rq[i]), float(eq[i]),
                              float(rs[i]), float(es[i]), ratio)
            )
    report.stats["fraction_flagged"] = len(report.violations) / max(1, report.checked)
    return report


def _coalition_label(mask: int, labels: Sequence[str] | None) -> str:
    members = [i for i in range(mask.bit_length()) if mask >> i & 1]
    names = [labels[i] if labels else str(i) for i in members]
    return "{" + ",".join(names) + "}"


def more_merrier_table(report: AssumptionReport, labels: Sequence[str] | None = None) -> str:
    """Pipe-separated violation table, one row per flagged pair."""
    lines = [" | ".join(MORE_MERRIER_HEADER)]
    for v in report.violations:
        agent = labels[v.agent] if labels else str(v.agent)
        lines.append(" | ".join([
            _coalition_label(v.coalition, labels),
            agent,
            f"{v.regret!r}±{v.regret_err!r}",
            _coalition_label(v.sub_coalition, labels),
            f"{v.sub_regret!r}±{v.sub_err!r}",
            repr(v.ratio),
        ]))
    return "\n".join(lines) + "\n"


def parse_more_merrier_table(text: str, labels: Sequence[str] | None = None) -> list[PairViolation]:
    """Inverse of :func:`more_merrier_table`."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or tuple(c.strip() for c in lines[0].split("|")) != MORE_MERRIER_HEADER:
        raise InvalidInputError("not a more-the-merrier violation table")
    index = {name: i for i, name in enumerate(labels)} if labels else None

    def agent_id(token: str) -> int:
        return index[token] if index else int(token)

    def mask(token: str) -> int:
        inner = token.strip()[1:-1]
        return sum(1 << agent_id(x) for x in inner.split(",") if x)

    def pm(token: str) -> tuple[float, float]:
        mean, err = token.split("±")
        return float(mean), float(err)

    rows = []
    for line in lines[1:]:
        q, a, rq, s, rs, ratio = (c.strip() for c in line.split(" | "))
        (mq, eq), (ms, es) = pm(rq), pm(rs)
        rows.append(PairViolation(agent_id(a), mask(q), mask(s), mq, eq, ms, es, float(ratio)))
    return rows


Runner = Callable[[Sequence[int], ProblemInstance, RngStream], CoalitionRunResult]


def _grand_regrets(runner: Runner, instance: ProblemInstance, reps: int, seed: int) -> np.ndarray:
    M = instance.num_agents
    grand = tuple(range(M))
    base = RngStream(seed)
    out = np.empty((reps, M))
    for r in range(reps):
        result = runner(grand, instance, base.for_run((1 << M) - 1, r))
        out[r] = [result.final_regret(a) for a in range(M)]
    return out


def check_symmetry_empirical(
    runner: Runner,
    instance: ProblemInstance,
    permutation: Sequence[int],
    reps: int,
    tol: float = 3.0,
    seed: int = 0,
    permuted_seed: int | None = None,
) -> AssumptionReport:
    """Compare grand-coalition regrets before and after relabeling agents.

    Agent ``a`` of ``instance`` is agent ``permutation[a]`` of the relabeled
    instance.  Passes iff every ``|mean R_a - mean R~_{pi(a)}|`` is within
    ``tol`` combined standard errors.  The relabeled runs use
    ``permuted_seed`` (default ``seed + 1``, i.e. independent noise).
    """
    if reps < 1:
        raise InvalidInputError("reps must be positive")
    perm = [int(p) for p in permutation]
    relabeled = instance.permute_agents(perm)
    permuted_seed = seed + 1 if permuted_seed is None else permuted_seed
    orig = _grand_regrets(runner, instance, reps, seed)
    perm_runs = _grand_regrets(runner, relabeled, reps, permuted_seed)[:, perm]
    mean_o, mean_p = orig.mean(axis=0), perm_runs.mean(axis=0)
    se = np.hypot(_stderr(orig, axis=0), _stderr(perm_runs, axis=0))
    scale = max(1.0, float(np.abs(orig).max()), float(np.abs(perm_runs).max()))
    report = AssumptionReport("symmetry", checked=instance.num_agents)
    for a in range(instance.num_agents):
        diff = abs(mean_o[a] - mean_p[a])
        if diff > tol * se[a] + ATOL * scale:
            report.violations.append((a, perm[a], float(mean_o[a]), float(mean_p[a]), float(se[a])))
    report.stats.update(original=mean_o, relabeled=mean_p, stderr=se)
    return report
