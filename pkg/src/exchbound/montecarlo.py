"""Replicated simulation of tail events, and verification sweeps.

Estimation samples the conditional law of the batch sum directly: given
the drawn component, S = X_1 + ... + X_M is Binomial(M, p) for Bernoulli
components, a deterministic constant for point masses, and an M-fold sum
of i.i.d. draws otherwise.  This is distributionally identical to
materializing the M individual observations (the batch is conditionally
i.i.d.), and it is what makes 10^5-replication sweeps over hundreds of
cells affordable.  The per-observation sampler in
:mod:`exchbound.sampler` remains the reference mechanism and the tests
cross-validate the two.

Replications are processed in fixed blocks of 2^16, one derived stream
per (master_seed, block_index); exceedance counts are exact integers
summed over blocks, so results do not depend on execution order or
thread count.  Lower-tail queries are routed through the reflected model
exactly as in the oracle, so both engines share one event convention.

Sweeps evaluate a grid of (model, M, t, side) cells, preferring the
exact oracle and falling back to Monte Carlo where no exact path exists.
A cell inside the validity window is flagged as a violation when its
exact value (or the lower confidence limit of its estimate) exceeds the
exp(-2Mt^2) bound; exact cells are additionally checked against the
optimized envelope.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .bounds import Side, TailQuery, effective_mu, tail_bound_report
from .errors import DomainError, EmptyGrid, ExchboundError, MTooLarge, UnsupportedModel
from .model import (
    Bernoulli,
    Beta,
    BernoulliParamMixture,
    Component,
    DiscreteOnUnit,
    FiniteMixture,
    MixingMeasure,
    ModelSummary,
    PointMass,
    summarize,
)
from .oracle import ExactTail, exact_tail, flip_model
from .sampler import SeedSpec, derive_stream, mix64, pick_atom

BLOCK_SIZE = 1 << 16

DEFAULT_CI_LEVEL = 0.999

THREADS_ENV_VAR = "EXCHBOUND_THREADS"


@dataclass(frozen=True)
class TailEstimate:
    """Monte Carlo estimate of a tail probability with a score interval."""

    p_hat: float
    ci_low: float
    ci_high: float
    replications: int
    exceed_count: int
    master_seed: int


def wilson_interval(successes: int, n: int, level: float = DEFAULT_CI_LEVEL):
    """Two-sided Wilson score interval for a binomial proportion.

    Chosen over the normal approximation because it stays honest at
    p_hat in {0, 1}, which degenerate models produce routinely.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not (0 <= successes <= n):
        raise DomainError(f"successes must lie in [0, {n}], got {successes}")
    if not (0.0 < level < 1.0):
        raise DomainError(f"level must lie in (0,1), got {level!r}")
    z = float(stats.norm.ppf(0.5 + 0.5 * level))
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    # the score interval always contains p; rounding must not lose that
    # at the extremes, where the exact endpoints are 0 and 1
    lo = min(p, max(0.0, center - half))
    hi = max(p, min(1.0, center + half))
    return lo, hi


# ---------------------------------------------------------------------------
# Exact-boundary comparisons for float-valued sums
# ---------------------------------------------------------------------------


def _float_ceil(x: Fraction) -> float:
    """Smallest float >= x; compares float sums against exact thresholds."""
    f = float(x)
    if Fraction(f) >= x:
        g = math.nextafter(f, -math.inf)
        while Fraction(g) >= x:
            f, g = g, math.nextafter(g, -math.inf)
        return f
    return math.nextafter(f, math.inf)


def _upper_threshold(summary: ModelSummary, M: int, t: float) -> Fraction:
    return Fraction(M) * (Fraction(summary.mu_plus) + Fraction(t))


def _count_exceed_block(
    m: MixingMeasure, M: int, thr: Fraction, n: int, gen: np.random.Generator
) -> int:
    """Replications in this block with S >= thr (upper-side convention)."""
    k_int = math.ceil(thr)  # integer-sum components
    f_thr = _float_ceil(thr)  # float-sum components
    if isinstance(m, BernoulliParamMixture):
        p = m.density.quantile(gen.random(n))
        sums = gen.binomial(M, p)
        return int(np.count_nonzero(sums >= k_int))
    assert isinstance(m, FiniteMixture)
    idx = pick_atom(m, gen.random(n))
    count = 0
    for i, (_, c) in enumerate(m.atoms):
        ni = int(np.count_nonzero(idx == i))
        if ni == 0:
            continue
        count += _count_component(c, M, k_int, f_thr, thr, ni, gen)
    return count


def _count_component(
    c: Component,
    M: int,
    k_int: int,
    f_thr: float,
    thr: Fraction,
    ni: int,
    gen: np.random.Generator,
) -> int:
    if isinstance(c, Bernoulli):
        sums = gen.binomial(M, float(c.p), size=ni)
        return int(np.count_nonzero(sums >= k_int))
    if isinstance(c, PointMass):
        return ni if M * Fraction(c.c) >= thr else 0
    if isinstance(c, DiscreteOnUnit):
        cum = np.cumsum(np.asarray(c.weights, dtype=np.float64))
        pos = np.searchsorted(cum, gen.random((ni, M)), side="right")
        pos = np.minimum(pos, len(c.points) - 1)
        sums = np.asarray(c.points, dtype=np.float64)[pos].sum(axis=1)
        return int(np.count_nonzero(sums >= f_thr))
    if isinstance(c, Beta):
        sums = gen.beta(c.alpha, c.beta, size=(ni, M)).sum(axis=1)
        return int(np.count_nonzero(sums >= f_thr))
    raise TypeError(f"not a Component: {c!r}")


def _blocks(replications: int):
    start = 0
    index = 0
    while start < replications:
        yield index, min(BLOCK_SIZE, replications - start)
        start += BLOCK_SIZE
        index += 1


def estimate_tail(
    m: MixingMeasure,
    q: TailQuery,
    replications: int,
    master_seed: int,
    level: float = DEFAULT_CI_LEVEL,
) -> TailEstimate:
    """Estimate P(Xbar - mu_plus >= t) or P(mu_minus - Xbar >= t).

    Counts replications where the event holds (non-strict inequality,
    matching the oracle convention); the count is an exact integer, so
    the estimate is independent of block execution order.
    """
    if replications < 1:
        raise DomainError(f"replications must be >= 1, got {replications}")
    if q.side is Side.LOWER:
        return estimate_tail(
            flip_model(m),
            TailQuery(M=q.M, t=q.t, side=Side.UPPER),
            replications,
            master_seed,
            level,
        )
    thr = _upper_threshold(summarize(m), q.M, q.t)
    exceed = 0
    for block_index, size in _blocks(replications):
        gen = derive_stream(SeedSpec(master_seed=master_seed, replication_index=block_index))
        exceed += _count_exceed_block(m, q.M, thr, size, gen)
    ci_low, ci_high = wilson_interval(exceed, replications, level)
    return TailEstimate(
        p_hat=exceed / replications,
        ci_low=ci_low,
        ci_high=ci_high,
        replications=replications,
        exceed_count=exceed,
        master_seed=master_seed,
    )


# ---------------------------------------------------------------------------
# Sample-mean histograms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HistogramResult:
    """Empirical distribution of the sample mean over replications."""

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    replications: int
    M: int
    master_seed: int


def _block_means(
    m: MixingMeasure, M: int, n: int, gen: np.random.Generator
) -> np.ndarray:
    if isinstance(m, BernoulliParamMixture):
        p = m.density.quantile(gen.random(n))
        return gen.binomial(M, p) / M
    assert isinstance(m, FiniteMixture)
    idx = pick_atom(m, gen.random(n))
    means = np.empty(n, dtype=np.float64)
    for i, (_, c) in enumerate(m.atoms):
        sel = idx == i
        ni = int(np.count_nonzero(sel))
        if ni == 0:
            continue
        if isinstance(c, Bernoulli):
            sums = gen.binomial(M, float(c.p), size=ni).astype(np.float64)
        elif isinstance(c, PointMass):
            sums = np.full(ni, M * float(c.c))
        elif isinstance(c, DiscreteOnUnit):
            cum = np.cumsum(np.asarray(c.weights, dtype=np.float64))
            pos = np.searchsorted(cum, gen.random((ni, M)), side="right")
            pos = np.minimum(pos, len(c.points) - 1)
            sums = np.asarray(c.points, dtype=np.float64)[pos].sum(axis=1)
        elif isinstance(c, Beta):
            sums = gen.beta(c.alpha, c.beta, size=(ni, M)).sum(axis=1)
        else:
            raise TypeError(f"not a Component: {c!r}")
        means[sel] = np.clip(sums / M, 0.0, 1.0)
    return means


def sample_mean_histogram(
    m: MixingMeasure, M: int, replications: int, bins: int, master_seed: int
) -> HistogramResult:
    """Histogram of Xbar over replications, bins uniform on [0, 1]."""
    if bins < 2:
        raise DomainError(f"bins must be >= 2, got {bins}")
    if replications < 1:
        raise DomainError(f"replications must be >= 1, got {replications}")
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    for block_index, size in _blocks(replications):
        gen = derive_stream(SeedSpec(master_seed=master_seed, replication_index=block_index))
        means = _block_means(m, M, size, gen)
        block_counts, _ = np.histogram(means, bins=edges)
        counts += block_counts
    return HistogramResult(
        bin_edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
        replications=replications,
        M=M,
        master_seed=master_seed,
    )


# ---------------------------------------------------------------------------
# Verification sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    """One evaluated (model, M, t, side) cell."""

    model_id: str
    M: int
    t: float
    side: str
    method: str
    value: Optional[float]
    ci_low: Optional[float]
    ci_high: Optional[float]
    hoeffding: Optional[float]
    kl_form: Optional[float]
    h0: Optional[float]
    valid: bool
    violation: bool


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    replications: int
    master_seed: int
    level: float

    @property
    def violations(self) -> tuple[SweepRow, ...]:
        return tuple(r for r in self.rows if r.violation)


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        try:
            threads = int(os.environ.get(THREADS_ENV_VAR, "1"))
        except ValueError:
            threads = 1
    return max(1, threads)


def _sweep_cell(
    model_id: str,
    m: MixingMeasure,
    summary: ModelSummary,
    M: int,
    t: float,
    side: Side,
    replications: int,
    cell_seed: int,
    method: str,
    level: float,
    bound_scale: float,
) -> SweepRow:
    base = dict(model_id=model_id, M=M, t=t, side=str(side))
    try:
        query = TailQuery(M=M, t=t, side=side)
    except ExchboundError as e:
        return SweepRow(
            **base,
            method=f"error:{type(e).__name__}",
            value=None,
            ci_low=None,
            ci_high=None,
            hoeffding=None,
            kl_form=None,
            h0=None,
            valid=False,
            violation=False,
        )

    report = tail_bound_report(effective_mu(summary, side), M, t)
    hoeffding = report.hoeffding_form * bound_scale
    exact: Optional[ExactTail] = None
    estimate: Optional[TailEstimate] = None
    method_str = "error:unreachable"
    try:
        if method in ("auto", "exact"):
            try:
                exact = exact_tail(m, query)
                method_str = str(exact.method)
            except (UnsupportedModel, MTooLarge):
                if method == "exact":
                    raise
                estimate = estimate_tail(m, query, replications, cell_seed, level)
                method_str = "montecarlo"
        elif method == "montecarlo":
            estimate = estimate_tail(m, query, replications, cell_seed, level)
            method_str = "montecarlo"
        else:
            raise DomainError(f"unknown sweep method {method!r}")
    except ExchboundError as e:
        return SweepRow(
            **base,
            method=f"error:{type(e).__name__}",
            value=None,
            ci_low=None,
            ci_high=None,
            hoeffding=hoeffding,
            kl_form=report.kl_form,
            h0=report.h0,
            valid=report.in_validity_range,
            violation=False,
        )

    if exact is not None:
        value = exact.probability
        ci_low = ci_high = None
        violation = report.in_validity_range and (
            value > hoeffding
            or (report.kl_form is not None and value > report.kl_form)
        )
    else:
        assert estimate is not None
        value = estimate.p_hat
        ci_low, ci_high = estimate.ci_low, estimate.ci_high
        violation = report.in_validity_range and ci_low > hoeffding
    return SweepRow(
        **base,
        method=method_str,
        value=value,
        ci_low=ci_low,
        ci_high=ci_high,
        hoeffding=hoeffding,
        kl_form=report.kl_form,
        h0=report.h0,
        valid=report.in_validity_range,
        violation=violation,
    )


def run_sweep(
    models: Sequence[tuple[str, MixingMeasure]],
    M_grid: Sequence[int],
    t_grid: Sequence[float],
    sides: Sequence[Side],
    replications: int,
    master_seed: int,
    *,
    method: str = "auto",
    level: float = DEFAULT_CI_LEVEL,
    bound_scale: float = 1.0,
    threads: Optional[int] = None,
) -> SweepResult:
    """Evaluate every (model, M, t, side) cell of the grid.

    ``method`` selects the engine per cell: "auto" prefers the exact
    oracle and falls back to Monte Carlo, "exact" and "montecarlo" force
    one engine.  Per-cell failures become rows with method "error:<name>"
    rather than aborting the sweep.  ``bound_scale`` is a verification
    hook that scales the exp(-2Mt^2) value used in violation checks.

    Cells are independent; with ``threads`` > 1 (or the EXCHBOUND_THREADS
    environment variable) they are evaluated concurrently.  Row order and
    content are identical regardless of thread count: each cell's seed is
    derived from (master_seed, cell index).
    """
    if not models:
        raise EmptyGrid("models list is empty")
    if not M_grid:
        raise EmptyGrid("M grid is empty")
    if not t_grid:
        raise EmptyGrid("t grid is empty")
    if not sides:
        raise EmptyGrid("sides list is empty")
    if replications < 1:
        raise DomainError(f"replications must be >= 1, got {replications}")

    tasks: list[Callable[[], SweepRow]] = []
    index = 0
    for model_id, m in models:
        summary = summarize(m)
        for M in M_grid:
            for t in t_grid:
                for side in sides:
                    cell_seed = mix64(master_seed, index)
                    tasks.append(
                        lambda model_id=model_id, m=m, summary=summary, M=M, t=t,
                        side=side, cell_seed=cell_seed: _sweep_cell(
                            model_id, m, summary, M, t, side,
                            replications, cell_seed, method, level, bound_scale,
                        )
                    )
                    index += 1

    n_threads = _resolve_threads(threads)
    if n_threads == 1:
        rows = [task() for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            rows = list(pool.map(lambda task: task(), tasks))
    return SweepResult(
        rows=tuple(rows),
        replications=replications,
        master_seed=master_seed,
        level=level,
    )
