"""Analysis kernels: variance, exact nonparametric tests, Welch's t,
and the ordering-behavior regression.

Everything here is a pure function of its inputs.  The exact tests use
integer/rational arithmetic internally; p-values are returned as floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy import special

from .engine import BeerLabError, TeamTrace

NUM_STAGES = 4


class StatError(BeerLabError):
    """Invalid input to a statistical routine."""


@dataclass(frozen=True)
class StatReport:
    name: str
    groups: tuple
    statistic: float
    p_value: float
    n: int
    sided: str
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RegressionFit:
    """One agent's fitted ordering rule O_t ~ inventory, demand, arrival,
    supply line, and time."""

    stage: int
    a_0: float
    a_I: float
    a_R: float
    a_S: float
    a_N: float
    a_t: float
    residual_variance: float
    valid: bool
    reason: str = ""

    @property
    def coefficients(self) -> dict:
        return {"a_0": self.a_0, "a_I": self.a_I, "a_R": self.a_R,
                "a_S": self.a_S, "a_N": self.a_N, "a_t": self.a_t}


def sample_variance(values) -> Fraction:
    """Unbiased (n-1 divisor) sample variance in exact arithmetic."""
    n = len(values)
    if n < 2:
        raise StatError("sample variance needs at least 2 observations")
    mean = Fraction(sum(values), n)
    return sum((Fraction(v) - mean) ** 2 for v in values) / (n - 1)


def order_variance(trace: TeamTrace, stage: int) -> Fraction:
    if trace.horizon < 2:
        raise StatError("order variance is undefined for horizon < 2")
    return sample_variance(trace.orders_for_stage(stage))


def sign_test(successes: int, trials: int, sided: str = "greater") -> float:
    """Exact binomial test against p = 1/2."""
    if trials < 1 or not 0 <= successes <= trials:
        raise StatError(f"invalid sign test input k={successes}, n={trials}")
    denom = Fraction(1, 2 ** trials)
    upper = sum(math.comb(trials, j) for j in range(successes, trials + 1)) * denom
    if sided == "greater":
        return float(upper)
    lower = sum(math.comb(trials, j) for j in range(0, successes + 1)) * denom
    if sided == "two":
        return float(min(Fraction(1), 2 * min(upper, lower)))
    raise StatError(f"unknown sidedness {sided!r}")


def _midranks(pooled) -> list:
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2))


def mann_whitney_u(sample_a, sample_b, sided: str = "two") -> tuple:
    """Mann-Whitney U for the first sample, with its p-value.

    Exact by enumeration of all label assignments when the pooled size is at
    most 16 and there are no ties; otherwise a normal approximation with tie
    and continuity corrections.
    """
    if sided not in ("less", "greater", "two"):
        raise StatError(f"unknown sidedness {sided!r}")
    a = list(sample_a)
    b = list(sample_b)
    if not a or not b:
        raise StatError("both samples must be non-empty")
    n_a, n_b = len(a), len(b)
    pooled = a + b
    ranks = _midranks(pooled)
    rank_sum_a = sum(ranks[:n_a])
    u_a = rank_sum_a - n_a * (n_a + 1) / 2

    has_ties = len(set(pooled)) != len(pooled)
    if n_a + n_b <= 16 and not has_ties:
        p = _mwu_exact_p(pooled, n_a, u_a, sided)
        return u_a, p

    mu = n_a * n_b / 2
    n = n_a + n_b
    tie_term = 0.0
    counts = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    for t in counts.values():
        tie_term += t ** 3 - t
    sigma_sq = n_a * n_b / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma_sq <= 0:
        return u_a, 1.0
    sigma = math.sqrt(sigma_sq)
    p_greater = 1 - _norm_cdf((u_a - mu - 0.5) / sigma)
    p_less = _norm_cdf((u_a - mu + 0.5) / sigma)
    if sided == "greater":
        p = p_greater
    elif sided == "less":
        p = p_less
    else:
        p = min(1.0, 2 * min(p_greater, p_less))
    return u_a, p


def _mwu_exact_p(pooled, n_a: int, u_obs: float, sided: str) -> float:
    ranks = _midranks(pooled)
    total = 0
    count_ge = 0
    count_le = 0
    offset = n_a * (n_a + 1) / 2
    for subset in combinations(range(len(pooled)), n_a):
        u = sum(ranks[i] for i in subset) - offset
        total += 1
        if u >= u_obs:
            count_ge += 1
        if u <= u_obs:
            count_le += 1
    p_greater = Fraction(count_ge, total)
    p_less = Fraction(count_le, total)
    if sided == "greater":
        return float(p_greater)
    if sided == "less":
        return float(p_less)
    return float(min(Fraction(1), 2 * min(p_greater, p_less)))


def welch_t_test(sample_a, sample_b, sided: str = "two") -> tuple:
    """Welch's unequal-variance t-test: returns (t, dof, p)."""
    if sided not in ("less", "greater", "two"):
        raise StatError(f"unknown sidedness {sided!r}")
    a = np.asarray(list(sample_a), dtype=float)
    b = np.asarray(list(sample_b), dtype=float)
    if a.size < 2 or b.size < 2:
        raise StatError("each sample needs at least 2 observations")
    mean_a, mean_b = a.mean(), b.mean()
    var_a = a.var(ddof=1)
    var_b = b.var(ddof=1)
    se_sq = var_a / a.size + var_b / b.size
    if se_sq == 0:
        # zero-variance degenerate branch: p is reported as the limit
        if mean_a == mean_b:
            return 0.0, float(a.size + b.size - 2), 1.0 if sided == "two" else 0.5
        t = math.inf if mean_a > mean_b else -math.inf
        if sided == "two":
            return t, float(a.size + b.size - 2), 0.0
        hit = (sided == "greater") == (t > 0)
        return t, float(a.size + b.size - 2), 0.0 if hit else 1.0
    t = (mean_a - mean_b) / math.sqrt(se_sq)
    dof = se_sq ** 2 / (
        (var_a / a.size) ** 2 / (a.size - 1) + (var_b / b.size) ** 2 / (b.size - 1)
    )
    # upper tail of the t distribution via the regularized incomplete beta
    p_upper = float(special.stdtr(dof, -abs(t)))
    if sided == "two":
        p = 2 * p_upper
    elif sided == "greater":
        p = p_upper if t >= 0 else 1 - p_upper
    else:
        p = p_upper if t <= 0 else 1 - p_upper
    return float(t), float(dof), min(1.0, p)


def regression_design(trace: TeamTrace, stage: int) -> tuple:
    """(X, y) for one agent: columns [1, I_{t-1}, R_t, S_t, N_t, t]."""
    idx = stage - 1
    y = []
    rows = []
    prior_inventory = trace.config.initial_inventory
    for rec in trace.periods:
        rows.append([
            1.0,
            float(prior_inventory),
            float(rec.incoming_demands[idx]),
            float(rec.arrivals[idx]),
            float(rec.supply_line_start[idx]),
            float(rec.period),
        ])
        y.append(float(rec.orders[idx]))
        prior_inventory = rec.inventory_end[idx]
    return np.asarray(rows), np.asarray(y)


def fit_ordering_regression(trace: TeamTrace, stage: int) -> RegressionFit:
    """OLS fit of the ordering rule via a rank-revealing least-squares solve.

    Rank-deficient designs (a regressor with no variation beyond the
    intercept, or collinear regressors) are flagged invalid and excluded
    from downstream sign tests rather than imputed.
    """
    if trace.horizon < 8:
        raise StatError("regression needs a horizon of at least 8 periods")
    X, y = regression_design(trace, stage)
    rank = np.linalg.matrix_rank(X)
    if rank < X.shape[1]:
        return RegressionFit(stage, *([math.nan] * 6), residual_variance=math.nan,
                             valid=False, reason=f"design rank {rank} < {X.shape[1]}")
    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    residuals = y - X @ coef
    dof = len(y) - X.shape[1]
    resid_var = float(residuals @ residuals / dof) if dof > 0 else math.nan
    return RegressionFit(stage, *(float(c) for c in coef),
                         residual_variance=resid_var, valid=True)


def myopia_sign_test(fits) -> StatReport:
    """Supply-line underweighting: counts fits with a_N > a_I, exact sign test."""
    valid = [f for f in fits if f.valid]
    if not valid:
        raise StatError("no valid regression fits")
    k = sum(1 for f in valid if f.a_N > f.a_I)
    p = sign_test(k, len(valid), sided="greater")
    return StatReport(
        name="myopia_sign_test",
        groups=("a_N > a_I",),
        statistic=float(k),
        p_value=p,
        n=len(valid),
        sided="greater",
        details={"invalid_fits": len(fits) - len(valid)},
    )


def amplification_indicators(trace: TeamTrace) -> list:
    """Three adjacent-pair indicators Var(stage i+1) > Var(stage i); ties fail."""
    variances = [order_variance(trace, s) for s in range(1, NUM_STAGES + 1)]
    return [variances[i + 1] > variances[i] for i in range(NUM_STAGES - 1)]


def bullwhip_report(traces) -> StatReport:
    """Pooled adjacent-pair amplification sign test over a fleet of runs.

    Also reports two variance-amplification percentages: the end-to-end
    mean-variance ratio and the mean adjacent-pair increase.  Both are
    emitted because the literature does not pin one definition.
    """
    traces = list(traces)
    if not traces:
        raise StatError("no runs")
    k = 0
    n = 0
    for trace in traces:
        for hit in amplification_indicators(trace):
            n += 1
            k += hit
    p = sign_test(k, n, sided="greater")

    mean_var = [float(np.mean([float(order_variance(t, s)) for t in traces]))
                for s in range(1, NUM_STAGES + 1)]
    end_to_end = mean_var[3] / mean_var[0] - 1 if mean_var[0] > 0 else math.nan
    adjacent = [mean_var[i + 1] / mean_var[i] - 1 if mean_var[i] > 0 else math.nan
                for i in range(NUM_STAGES - 1)]
    mean_adjacent = (float(np.mean(adjacent))
                     if not any(math.isnan(x) for x in adjacent) else math.nan)
    return StatReport(
        name="bullwhip_sign_test",
        groups=("adjacent variance amplification",),
        statistic=float(k),
        p_value=p,
        n=n,
        sided="greater",
        details={
            "mean_variance_per_stage": mean_var,
            "amplification_end_to_end": end_to_end,
            "amplification_mean_adjacent": mean_adjacent,
        },
    )


def run_variance_statistic(trace: TeamTrace) -> float:
    """Per-run scalar used in cross-condition comparisons: the mean of the
    four per-stage order variances."""
    return float(np.mean([float(order_variance(trace, s))
                          for s in range(1, NUM_STAGES + 1)]))


def cost_summary(traces) -> dict:
    """Mean system and per-stage cost plus variance summary for one fleet."""
    traces = list(traces)
    if not traces:
        raise StatError("no runs")
    stage_costs = np.array([[float(c) for c in t.total_cost_per_stage] for t in traces])
    run_vars = np.array([run_variance_statistic(t) for t in traces])
    return {
        "runs": len(traces),
        "total_cost_mean": float(stage_costs.sum(axis=1).mean()),
        "stage_cost_mean": [float(x) for x in stage_costs.mean(axis=0)],
        "var_mean": float(run_vars.mean()),
        "var_median": float(np.median(run_vars)),
        "var_std": float(run_vars.std(ddof=1)) if len(traces) > 1 else 0.0,
    }
