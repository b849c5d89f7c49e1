"""Two-stage generation of exchangeable sequences, with replayable streams.

A batch is produced by first drawing one component q from the mixing
measure and then drawing all M observations i.i.d. from q.  Marginally
over the component draw this yields an exchangeable (in general not
independent) sequence.

Randomness contract
-------------------
Every batch is a pure function of the model and a :class:`SeedSpec`
(master seed plus replication index).  The stream for a SeedSpec is a
Philox counter-based generator keyed by a SplitMix64 hash of the two
seed fields, so distinct replication indices give statistically
independent streams and results do not depend on scheduling order.

Every random draw is taken by inverse CDF from one uniform variate:
component selection searches the cumulative atom weights, Bernoulli and
discrete draws search their cumulative weights, and Beta draws (including
the success-probability draw of a continuous mixture) invert the
regularized incomplete beta function.  One uniform in, one value out;
nothing else touches the stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError
from .model import (
    Bernoulli,
    Beta,
    BernoulliParamMixture,
    Component,
    DiscreteOnUnit,
    FiniteMixture,
    MixingMeasure,
    PointMass,
)

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15  # SplitMix64 stream increment


@dataclass(frozen=True)
class SeedSpec:
    """Addresses one replication of one experiment.

    The derived stream depends on nothing but these two fields.
    """

    master_seed: int
    replication_index: int

    def __post_init__(self) -> None:
        if self.replication_index < 0:
            raise DomainError(
                f"replication_index must be >= 0, got {self.replication_index}"
            )


def mix64(master_seed: int, index: int) -> int:
    """SplitMix64 output stream: finalizer of master_seed + (index+1)*gamma."""
    z = (master_seed + (index + 1) * _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_stream(seed: SeedSpec) -> np.random.Generator:
    """Deterministic, replication-independent random stream for a SeedSpec."""
    key = mix64(seed.master_seed & _MASK64, seed.replication_index)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """One simulated sequence X_1..X_M plus its sample mean.

    ``drawn_component_index`` records which finite-mixture atom generated
    the batch (None for continuous-parameter mixtures): conditional on
    it, the values are i.i.d. from that atom.
    """

    values: np.ndarray
    sample_mean: float
    drawn_component_index: int | None


def component_quantile(c: Component, u: np.ndarray) -> np.ndarray:
    """Inverse CDF of a component, vectorized over uniforms in [0, 1)."""
    u = np.asarray(u, dtype=np.float64)
    if isinstance(c, Bernoulli):
        # quantile: 0 on [0, 1-p], 1 above
        return (u > 1.0 - float(c.p)).astype(np.float64)
    if isinstance(c, PointMass):
        return np.full(u.shape, float(c.c))
    if isinstance(c, DiscreteOnUnit):
        cum = np.cumsum(np.asarray(c.weights, dtype=np.float64))
        idx = np.searchsorted(cum, u, side="right")
        idx = np.minimum(idx, len(c.points) - 1)  # guard cum[-1] < 1 by rounding
        return np.asarray(c.points, dtype=np.float64)[idx]
    if isinstance(c, Beta):
        return np.asarray(special.betaincinv(c.alpha, c.beta, u), dtype=np.float64)
    raise TypeError(f"not a Component: {c!r}")


def pick_atom(m: FiniteMixture, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF atom selection over the mixture weights."""
    cum = np.cumsum(np.asarray(m.weights, dtype=np.float64))
    idx = np.searchsorted(cum, np.asarray(u, dtype=np.float64), side="right")
    return np.minimum(idx, len(m.atoms) - 1)


def sample_sequence(m: MixingMeasure, M: int, seed: SeedSpec) -> SampleBatch:
    """Draw one exchangeable batch of length M.

    Consumes exactly 1 + M uniforms from the SeedSpec's stream: one for
    the component draw, then one per observation.
    """
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    gen = derive_stream(seed)
    u0 = gen.random()
    if isinstance(m, FiniteMixture):
        idx = int(pick_atom(m, np.array([u0]))[0])
        component: Component = m.components[idx]
    elif isinstance(m, BernoulliParamMixture):
        idx = None
        component = Bernoulli(m.density.quantile(u0))
    else:
        raise TypeError(f"not a MixingMeasure: {m!r}")
    values = component_quantile(component, gen.random(M))
    values.setflags(write=False)
    return SampleBatch(
        values=values,
        sample_mean=float(values.mean()),
        drawn_component_index=idx,
    )
