"""Two-sample comparison statistics for throughput sweeps.

Implements one-sided two-sample t-tests on summary statistics with an
unequal-variance standard error and a caller-supplied degrees of freedom,
plus a from-scratch Student-t critical value via the regularized
incomplete beta function.
"""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SampleSummary:
    mean: float
    sd: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least 2 samples")
        if self.sd < 0:
            raise ValueError("standard deviation must be non-negative")


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    critical: float
    significant: bool
    alpha: float


def summarize(samples) -> SampleSummary:
    """Mean and sample standard deviation (n-1 denominator)."""
    xs = [float(x) for x in samples]
    n = len(xs)
    if n < 2:
        raise ValueError("need at least 2 samples")
    mean = sum(xs) / n
    var = sum((x - mean) ** 2 for x in xs) / (n - 1)
    return SampleSummary(mean=mean, sd=math.sqrt(var), n=n)


def t_test(a: SampleSummary, b: SampleSummary, df: int, alpha: float = 0.05) -> TTestResult:
    """One-sided two-sample test of mean(a) > mean(b) from summaries.

    The standard error uses the two sample variances separately
    (sqrt(sa^2/na + sb^2/nb)); the degrees of freedom are supplied by the
    caller rather than estimated. Callers order the greater mean first; a
    reversed ordering simply yields a negative, non-significant statistic.
    """
    if df < 1:
        raise ValueError("df must be >= 1")
    se = math.sqrt(a.sd ** 2 / a.n + b.sd ** 2 / b.n)
    if se == 0:
        t = 0.0 if a.mean == b.mean else math.copysign(math.inf, a.mean - b.mean)
    else:
        t = (a.mean - b.mean) / se
    crit = critical_value(df, alpha)
    return TTestResult(t=t, df=df, critical=crit, significant=t >= crit, alpha=alpha)


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x < 0 or x > 1:
        raise ValueError("x must lie in [0, 1]")
    if x == 0 or x == 1:
        return float(x)
    front = math.exp(a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: int) -> float:
    """Upper-tail probability P(T >= t) for Student's t."""
    if df < 1:
        raise ValueError("df must be >= 1")
    ib = reg_inc_beta(df / (df + t * t), df / 2.0, 0.5)
    return ib / 2.0 if t >= 0 else 1.0 - ib / 2.0


def critical_value(df: int, alpha: float) -> float:
    """One-sided Student-t critical value, by bisection to 1e-8."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie strictly between 0 and 0.5")
    lo, hi = 0.0, 2.0
    while student_t_sf(hi, df) > alpha:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("critical value search failed to bracket")
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if student_t_sf(mid, df) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# Published single-intersection benchmark: throughput summaries for the
# three controllers (mean, sample sd, trial count) and the reference
# throughput-vs-budget curve for the prediction-weighted controller.
REFERENCE_SUMMARIES: dict[str, SampleSummary] = {
    "elmopp": SampleSummary(mean=2.09133, sd=0.158824, n=150),
    "itlc": SampleSummary(mean=1.83414, sd=0.080730, n=150),
    "oaf": SampleSummary(mean=1.12108, sd=0.063498, n=150),
}
REFERENCE_DF = 298
REFERENCE_ALPHA = 0.05

REFERENCE_CURVES: dict[str, dict[int, float]] = {
    "elmopp": {200: 2.31937, 400: 2.17839, 600: 2.06249, 800: 1.97497, 1000: 1.92143},
    "itlc": {200: 1.692, 400: 1.883, 600: 1.8520, 800: 1.8593, 1000: 1.8844},
    "oaf": {200: 1.2174, 400: 1.05736, 600: 1.1540, 800: 1.1057, 1000: 1.07094},
}


def reference_table() -> list[tuple[str, TTestResult]]:
    """The three benchmark t-tests recomputed from the published summaries."""
    pairs = [("elmopp", "itlc"), ("elmopp", "oaf"), ("itlc", "oaf")]
    out = []
    for a, b in pairs:
        out.append((f"{a}_vs_{b}",
                    t_test(REFERENCE_SUMMARIES[a], REFERENCE_SUMMARIES[b],
                           REFERENCE_DF, REFERENCE_ALPHA)))
    return out


def write_stats_csv(path, results: list[tuple[str, TTestResult]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("comparison,t,df,critical,significant\n")
        for name, r in results:
            fh.write(f"{name},{r.t!r},{r.df},{r.critical!r},{str(r.significant).lower()}\n")
