"""Treatment-comparison statistics: normality and equal-variance gates
choosing between one-way ANOVA and Kruskal-Wallis.

The decision rule: ANOVA when every group passes the Shapiro-Wilk
normality check and Levene's test (median-centered) finds equal variances;
Kruskal-Wallis when variances are equal but normality fails.  When the
equivariance check itself fails we still fall through to Kruskal-Wallis
but attach an explicit warning rather than refusing to compare.

The test statistics are computed here directly (the Shapiro-Wilk W uses
the standard large-sample approximation with its published polynomial
coefficients, valid to n = 5000); only the distribution tail probabilities
come from scipy.special.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import betainc, gammaincc, ndtr, ndtri

from .errors import DegenerateDataError, ValidationError

SHAPIRO_WILK = "shapiro_wilk"
LEVENE_MEDIAN = "levene_median"
ANOVA = "anova"
KRUSKAL_WALLIS = "kruskal_wallis"

DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class SampleGroup:
    """One treatment's per-participant aggregated losses."""

    label: str
    values: tuple[float, ...]

    def __post_init__(self):
        if any(not math.isfinite(v) for v in self.values):
            raise ValidationError(f"group {self.label!r} contains non-finite values")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class TestResult:
    test: str
    statistic: float
    df: tuple[float, ...]
    p_value: float

    def __post_init__(self):
        if not -1e-12 <= self.p_value <= 1 + 1e-12:
            raise ValidationError(f"p-value out of [0, 1]: {self.p_value}")


@dataclass(frozen=True)
class PipelineResult:
    test_used: str
    gate_results: tuple[TestResult, ...]
    comparison: TestResult
    warnings: tuple[str, ...]


def _chi2_sf(x: float, df: float) -> float:
    return float(gammaincc(df / 2.0, x / 2.0))


def _f_sf(x: float, df1: float, df2: float) -> float:
    if math.isinf(x):
        return 0.0
    return float(betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x)))


def _norm_sf(z: float) -> float:
    return float(ndtr(-z))


def _poly(coeffs, x: float) -> float:
    total = 0.0
    for c in reversed(coeffs):
        total = total * x + c
    return total


# Polynomial corrections for the two largest coefficients, in 1/sqrt(n).
_SW_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
# ln(1 - W) normalization for n >= 12, in ln(n).
_SW_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_SW_C6 = (-0.4803, -0.082676, 0.0030302)
# (w - mu) / sigma normalization for 4 <= n <= 11, in n.
_SW_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_SW_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)

_SW_PI6 = 1.90985931710274  # 6/pi
_SW_STQR = 1.04719755119660  # asin(sqrt(3/4))


def shapiro_wilk(sample) -> TestResult:
    """W statistic and p-value for the null of normality, 3 <= n <= 5000."""
    x = sorted(float(v) for v in sample)
    n = len(x)
    if n < 3:
        raise ValidationError(f"shapiro_wilk needs at least 3 observations, got {n}")
    if n > 5000:
        raise ValidationError(f"shapiro_wilk approximation is valid to n = 5000, got {n}")
    if x[0] == x[-1]:
        raise DegenerateDataError("all observations identical; W is undefined")

    n2 = n // 2
    if n == 3:
        weights = [math.sqrt(0.5)]
    else:
        m = [float(ndtri((i - 0.375) / (n + 0.25))) for i in range(1, n2 + 1)]
        summ2 = 2.0 * math.fsum(v * v for v in m)
        ssumm2 = math.sqrt(summ2)
        rsn = 1.0 / math.sqrt(n)
        a1 = _poly(_SW_C1, rsn) - m[0] / ssumm2
        if n > 5:
            a2 = _poly(_SW_C2, rsn) - m[1] / ssumm2
            fac = math.sqrt(
                (summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)
            )
            weights = [a1, a2] + [-v / fac for v in m[2:]]
        else:
            fac = math.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1 * a1))
            weights = [a1] + [-v / fac for v in m[1:]]

    mean = math.fsum(x) / n
    ssq = math.fsum((v - mean) ** 2 for v in x)
    b = math.fsum(w * (x[n - 1 - i] - x[i]) for i, w in enumerate(weights))
    w_stat = min(b * b / ssq, 1.0)

    if n == 3:
        p = _SW_PI6 * (math.asin(math.sqrt(w_stat)) - _SW_STQR)
        p = min(max(p, 0.0), 1.0)
    elif w_stat >= 1.0:
        p = 1.0
    elif n <= 11:
        gamma = -2.273 + 0.459 * n
        if gamma - math.log(1.0 - w_stat) <= 0:
            p = 0.0
        else:
            lw = -math.log(gamma - math.log(1.0 - w_stat))
            mu = _poly(_SW_C3, n)
            sigma = math.exp(_poly(_SW_C4, n))
            p = _norm_sf((lw - mu) / sigma)
    else:
        ln_n = math.log(n)
        lw = math.log(1.0 - w_stat)
        mu = _poly(_SW_C5, ln_n)
        sigma = math.exp(_poly(_SW_C6, ln_n))
        p = _norm_sf((lw - mu) / sigma)
    return TestResult(SHAPIRO_WILK, w_stat, (), p)


def _as_groups(groups) -> list[SampleGroup]:
    out = []
    for i, g in enumerate(groups):
        if isinstance(g, SampleGroup):
            out.append(g)
        else:
            out.append(SampleGroup(label=f"group{i + 1}", values=tuple(g)))
    return out


def _f_oneway(samples: list[list[float]], test_name: str) -> TestResult:
    g = len(samples)
    sizes = [len(s) for s in samples]
    total_n = sum(sizes)
    if g < 2:
        raise ValidationError(f"{test_name} needs at least 2 groups, got {g}")
    if any(n < 2 for n in sizes):
        raise ValidationError(f"{test_name} needs at least 2 observations per group")
    if total_n <= g:
        raise ValidationError(f"{test_name} needs more observations than groups")
    grand = math.fsum(math.fsum(s) for s in samples) / total_n
    means = [math.fsum(s) / len(s) for s in samples]
    ssb = math.fsum(n * (m - grand) ** 2 for n, m in zip(sizes, means))
    ssw = math.fsum(math.fsum((v - m) ** 2 for v in s) for s, m in zip(samples, means))
    df = (float(g - 1), float(total_n - g))
    if ssb <= 0.0 and ssw <= 0.0:
        raise DegenerateDataError(
            f"{test_name}: zero within- and between-group variance; F is undefined"
        )
    if ssb <= 0.0:
        return TestResult(test_name, 0.0, df, 1.0)
    if ssw <= 0.0:
        return TestResult(test_name, math.inf, df, 0.0)
    f_stat = (ssb / df[0]) / (ssw / df[1])
    return TestResult(test_name, f_stat, df, _f_sf(f_stat, df[0], df[1]))


def anova_oneway(groups) -> TestResult:
    """Classical one-way F test, df = (g - 1, N - g)."""
    samples = [list(g.values) for g in _as_groups(groups)]
    return _f_oneway(samples, ANOVA)


def levene_median(groups) -> TestResult:
    """Brown-Forsythe equal-variance test: one-way F on the absolute
    deviations from each group's median."""
    samples = []
    for g in _as_groups(groups):
        vals = sorted(g.values)
        n = len(vals)
        if n < 2:
            raise ValidationError("levene_median needs at least 2 observations per group")
        mid = n // 2
        med = vals[mid] if n % 2 else (vals[mid - 1] + vals[mid]) / 2.0
        samples.append([abs(v - med) for v in g.values])
    try:
        return _f_oneway(samples, LEVENE_MEDIAN)
    except DegenerateDataError:
        # Identical deviation sets in every group: no variance signal at all.
        g = len(samples)
        total_n = sum(len(s) for s in samples)
        return TestResult(LEVENE_MEDIAN, 0.0, (float(g - 1), float(total_n - g)), 1.0)


def _midranks(pooled: list[float]) -> list[float]:
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for idx in order[i : j + 1]:
            ranks[idx] = mid
        i = j + 1
    return ranks


def kruskal_wallis(groups) -> TestResult:
    """H statistic with mid-rank tie correction; p from chi-square with
    g - 1 degrees of freedom."""
    samples = [list(g.values) for g in _as_groups(groups)]
    g = len(samples)
    if g < 2:
        raise ValidationError(f"kruskal_wallis needs at least 2 groups, got {g}")
    if any(not s for s in samples):
        raise ValidationError("kruskal_wallis groups must be non-empty")
    total_n = sum(len(s) for s in samples)
    if total_n < 3:
        raise ValidationError("kruskal_wallis needs at least 3 observations in total")
    pooled = [v for s in samples for v in s]
    ranks = _midranks(pooled)
    rank_sums = []
    pos = 0
    for s in samples:
        rank_sums.append(math.fsum(ranks[pos : pos + len(s)]))
        pos += len(s)
    h = 12.0 / (total_n * (total_n + 1)) * math.fsum(
        rs * rs / len(s) for rs, s in zip(rank_sums, samples)
    ) - 3.0 * (total_n + 1)
    # Tie correction over the pooled sample.
    ordered = sorted(pooled)
    ties = 0
    run = 1
    for a, b in zip(ordered, ordered[1:]):
        if a == b:
            run += 1
        else:
            ties += run**3 - run
            run = 1
    ties += run**3 - run
    correction = 1.0 - ties / float(total_n**3 - total_n)
    if correction <= 0.0:
        raise DegenerateDataError("all observations identical; H is undefined after tie correction")
    h /= correction
    df = float(g - 1)
    return TestResult(KRUSKAL_WALLIS, h, (df,), _chi2_sf(h, df))


def run_pipeline(groups, alpha: float = DEFAULT_ALPHA) -> PipelineResult:
    """Gate on per-group normality and equivariance, then compare.

    ANOVA when every Shapiro-Wilk p >= alpha and the Levene p >= alpha;
    Kruskal-Wallis otherwise.  A failed equivariance gate downgrades to
    Kruskal-Wallis as well but is surfaced as a warning, since neither
    comparison strictly applies then.
    """
    gs = _as_groups(groups)
    if len(gs) < 2:
        raise ValidationError("pipeline needs at least 2 groups")
    gates = []
    warnings = []
    all_normal = True
    for g in gs:
        res = shapiro_wilk(g.values)
        gates.append(res)
        if res.p_value < alpha:
            all_normal = False
    levene = levene_median(gs)
    gates.append(levene)
    equivariant = levene.p_value >= alpha
    if not equivariant:
        warnings.append(
            f"equivariance check failed (levene_median p = {levene.p_value:.4g} < {alpha:g}); "
            "falling back to kruskal_wallis, interpret with care"
        )
    if all_normal and equivariant:
        comparison = anova_oneway(gs)
    else:
        comparison = kruskal_wallis(gs)
    return PipelineResult(
        test_used=comparison.test,
        gate_results=tuple(gates),
        comparison=comparison,
        warnings=tuple(warnings),
    )
