"""Mixture models over [0,1]-valued observations.

A model is a mixing measure over component distributions: a sequence is
generated by drawing one component q from the mixing measure and then
drawing every observation i.i.d. from q.  Two mixing-measure families are
supported:

* ``FiniteMixture``: finitely many atoms, each a weighted component
  (Bernoulli, point mass, discrete on [0,1], or Beta);
* ``BernoulliParamMixture``: a continuous density (uniform or truncated
  Beta) over the success probability of a Bernoulli component.

The quantities the tail bounds anchor on are the largest and smallest
component means over the support of the mixing measure (``mu_plus`` and
``mu_minus``), together with the overall mean ``mu``.  For finite
mixtures the exact finite-dimensional joint law is computable and exposed
through :func:`joint_law`.

All model values are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from scipy import integrate
from scipy import special

from .errors import InvalidModel, KTooLarge, UnsupportedModel

QUAD_LOCK = threading.Lock()  # QUADPACK is not documented as reentrant

WEIGHT_TOL = 1e-12  # machine-precision-scale slack for user-supplied weights

JOINT_LAW_MAX_K = 6  # alphabet**k tuples are enumerated; guard the blowup

# Component parameters are floats in normal use.  Model reflection
# (oracle.flip_model) stores exact rational complements instead, because
# 1-(1-x) loses the last bit of x in float arithmetic and reflection must
# be an exact involution.  Fraction and float compare and hash by value,
# so reflected models still test equal to their float-parameter originals.
Scalar = Union[float, Fraction]


# ---------------------------------------------------------------------------
# Components
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bernoulli:
    """Bernoulli distribution on {0, 1} with success probability p."""

    p: Scalar

    def __post_init__(self) -> None:
        if not 0 <= self.p <= 1:  # False for NaN as well
            raise InvalidModel(f"Bernoulli p must lie in [0,1], got {self.p!r}")


@dataclass(frozen=True)
class PointMass:
    """Degenerate distribution putting all mass on a single value c."""

    c: Scalar

    def __post_init__(self) -> None:
        if not 0 <= self.c <= 1:
            raise InvalidModel(f"PointMass c must lie in [0,1], got {self.c!r}")


@dataclass(frozen=True)
class DiscreteOnUnit:
    """Discrete distribution on finitely many points in [0,1].

    Points must be strictly increasing; weights must be nonnegative and
    sum to 1 within ``WEIGHT_TOL``.
    """

    points: tuple[Scalar, ...]
    weights: tuple[float, ...]

    def __init__(self, points, weights) -> None:
        # points are stored as given (reflection may supply exact rationals)
        object.__setattr__(self, "points", tuple(points))
        object.__setattr__(self, "weights", tuple(float(w) for w in weights))
        self._validate()

    def _validate(self) -> None:
        if not self.points:
            raise InvalidModel("DiscreteOnUnit needs at least one point")
        if len(self.points) != len(self.weights):
            raise InvalidModel(
                f"points/weights length mismatch: {len(self.points)} vs {len(self.weights)}"
            )
        for x in self.points:
            if not 0 <= x <= 1:
                raise InvalidModel(f"DiscreteOnUnit point {x!r} outside [0,1]")
        for a, b in zip(self.points, self.points[1:]):
            if not a < b:
                raise InvalidModel("DiscreteOnUnit points must be strictly increasing")
        for w in self.weights:
            if w < 0.0 or math.isnan(w):
                raise InvalidModel(f"DiscreteOnUnit weight {w!r} is negative")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise InvalidModel(
                f"DiscreteOnUnit weights sum to {total!r}, expected 1 within {WEIGHT_TOL}"
            )


@dataclass(frozen=True)
class Beta:
    """Beta(alpha, beta) distribution on [0,1]."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise InvalidModel(
                f"Beta parameters must be positive, got alpha={self.alpha!r}, beta={self.beta!r}"
            )


Component = Union[Bernoulli, PointMass, DiscreteOnUnit, Beta]


def component_mean(c: Component) -> float:
    """Exact mean of a component distribution (correctly rounded to float)."""
    if isinstance(c, Bernoulli):
        return float(c.p)
    if isinstance(c, PointMass):
        return float(c.c)
    if isinstance(c, DiscreteOnUnit):
        return math.fsum(w * x for w, x in zip(c.weights, c.points))
    if isinstance(c, Beta):
        return c.alpha / (c.alpha + c.beta)
    raise TypeError(f"not a Component: {c!r}")


def discrete_law(c: Component) -> tuple[tuple[Scalar, ...], tuple[float, ...]]:
    """(points, weights) of a discrete component.

    Raises UnsupportedModel for continuous components (Beta).
    """
    if isinstance(c, Bernoulli):
        p = float(c.p)
        return (0.0, 1.0), (1.0 - p, p)
    if isinstance(c, PointMass):
        return (c.c,), (1.0,)
    if isinstance(c, DiscreteOnUnit):
        return c.points, c.weights
    if isinstance(c, Beta):
        raise UnsupportedModel("Beta components have no finite support")
    raise TypeError(f"not a Component: {c!r}")


# ---------------------------------------------------------------------------
# Mixing measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteMixture:
    """Finitely many atoms (weight, component) with weights summing to 1."""

    atoms: tuple[tuple[float, Component], ...]

    def __init__(self, atoms) -> None:
        object.__setattr__(
            self, "atoms", tuple((float(w), comp) for w, comp in atoms)
        )
        self._validate()

    def _validate(self) -> None:
        if not self.atoms:
            raise InvalidModel("FiniteMixture needs at least one atom")
        for w, _ in self.atoms:
            if not w > 0.0:
                raise InvalidModel(f"atom weight {w!r} must be strictly positive")
        total = math.fsum(w for w, _ in self.atoms)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise InvalidModel(
                f"atom weights sum to {total!r}, expected 1 within {WEIGHT_TOL}"
            )

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for w, _ in self.atoms)

    @property
    def components(self) -> tuple[Component, ...]:
        return tuple(c for _, c in self.atoms)


@dataclass(frozen=True)
class UniformDensity:
    """Uniform density on [lo, hi] for a Bernoulli success probability."""

    lo: Scalar
    hi: Scalar

    def __post_init__(self) -> None:
        _check_support(self.lo, self.hi)

    def mean(self) -> float:
        return float(0.5 * (self.lo + self.hi))

    def pdf(self, p: float) -> float:
        if self.lo <= p <= self.hi:
            return float(1.0 / (self.hi - self.lo))
        return 0.0

    def quantile(self, u):
        """Inverse CDF; accepts a scalar or an ndarray of uniforms."""
        lo, hi = float(self.lo), float(self.hi)
        return lo + u * (hi - lo)


@dataclass(frozen=True)
class TruncatedBetaDensity:
    """Beta(alpha, beta) density restricted and renormalized to [lo, hi]."""

    alpha: float
    beta: float
    lo: Scalar
    hi: Scalar

    def __post_init__(self) -> None:
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise InvalidModel(
                f"TruncatedBeta parameters must be positive, got "
                f"alpha={self.alpha!r}, beta={self.beta!r}"
            )
        _check_support(self.lo, self.hi)

    def _cdf_mass(self) -> float:
        return float(
            special.betainc(self.alpha, self.beta, float(self.hi))
            - special.betainc(self.alpha, self.beta, float(self.lo))
        )

    def mean(self) -> float:
        # Quadrature against the normalized density; the closed form via
        # incomplete-beta ratios is kept as an independent cross-check in
        # the tests rather than being the implementation.
        with QUAD_LOCK:
            num, _ = integrate.quad(
                lambda p: p * self.pdf(p),
                float(self.lo),
                float(self.hi),
                epsabs=1e-12,
                epsrel=1e-12,
            )
        return float(num)

    def pdf(self, p: float) -> float:
        pf = float(p)
        if not (self.lo <= pf <= self.hi):
            return 0.0

        def _pow_log(exponent: float, log_base: float) -> float:
            # exponent * log_base with the 0**0 = 1 convention at endpoints
            if log_base == -math.inf:
                if exponent == 0.0:
                    return 0.0
                return math.copysign(math.inf, -exponent)
            return exponent * log_base

        logpdf = (
            _pow_log(self.alpha - 1.0, math.log(pf) if pf > 0.0 else -math.inf)
            + _pow_log(self.beta - 1.0, math.log1p(-pf) if pf < 1.0 else -math.inf)
            - float(special.betaln(self.alpha, self.beta))
        )
        return math.exp(logpdf) / self._cdf_mass()

    def quantile(self, u):
        """Inverse CDF; accepts a scalar or an ndarray of uniforms."""
        f_lo = float(special.betainc(self.alpha, self.beta, float(self.lo)))
        f_hi = float(special.betainc(self.alpha, self.beta, float(self.hi)))
        return special.betaincinv(self.alpha, self.beta, f_lo + u * (f_hi - f_lo))


ParamDensity = Union[UniformDensity, TruncatedBetaDensity]


def _check_support(lo: Scalar, hi: Scalar) -> None:
    if not 0 <= lo < hi <= 1:
        raise InvalidModel(f"support endpoints must satisfy 0 <= lo < hi <= 1, got [{lo!r}, {hi!r}]")


@dataclass(frozen=True)
class BernoulliParamMixture:
    """Continuous mixture over Bernoulli(p) with p drawn from ``density``."""

    density: ParamDensity

    def __post_init__(self) -> None:
        if not isinstance(self.density, (UniformDensity, TruncatedBetaDensity)):
            raise InvalidModel(f"unsupported density: {self.density!r}")


MixingMeasure = Union[FiniteMixture, BernoulliParamMixture]


# ---------------------------------------------------------------------------
# Summaries and joint laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSummary:
    """Largest / smallest / overall component means of a mixing measure.

    ``t_max_upper`` and ``t_max_lower`` are the widths of the windows in
    which the upper and lower tail bounds are guaranteed.
    """

    mu_plus: float
    mu_minus: float
    mu: float

    def __post_init__(self) -> None:
        if not (self.mu_minus <= self.mu <= self.mu_plus):
            raise InvalidModel(
                f"summary ordering violated: {self.mu_minus!r} <= {self.mu!r} <= {self.mu_plus!r}"
            )

    @property
    def t_max_upper(self) -> float:
        return 1.0 - self.mu_plus

    @property
    def t_max_lower(self) -> float:
        return self.mu_minus


def summarize(m: MixingMeasure) -> ModelSummary:
    """Compute mu_plus, mu_minus and mu for a mixing measure.

    For a finite mixture these are the max, min and weight-average of the
    atom means.  For a Bernoulli-parameter mixture the support endpoints
    are the density's support endpoints and mu is the density mean.
    """
    if isinstance(m, FiniteMixture):
        means = [component_mean(c) for c in m.components]
        mu = math.fsum(w * x for w, x in zip(m.weights, means))
        # fsum can land an ulp outside [min, max] for near-degenerate mixtures
        mu = min(max(mu, min(means)), max(means))
        return ModelSummary(mu_plus=max(means), mu_minus=min(means), mu=mu)
    if isinstance(m, BernoulliParamMixture):
        d = m.density
        return ModelSummary(mu_plus=float(d.hi), mu_minus=float(d.lo), mu=d.mean())
    raise TypeError(f"not a MixingMeasure: {m!r}")


@dataclass(frozen=True)
class JointLaw:
    """Exact joint pmf of the first k observations of a finite mixture.

    ``support`` enumerates all k-tuples over the union of the component
    supports (including zero-probability tuples); ``probabilities`` is the
    matching pmf vector.
    """

    support: tuple[tuple[float, ...], ...]
    probabilities: tuple[float, ...]

    def prob(self, values: tuple[float, ...]) -> float:
        try:
            return self.probabilities[self.support.index(tuple(values))]
        except ValueError:
            return 0.0


def joint_law(m: MixingMeasure, k: int) -> JointLaw:
    """Exact pmf of (X_1, ..., X_k) for a discrete finite mixture.

    p(x_1, ..., x_k) = sum_i w_i * prod_j q_i(x_j).  Each tuple's
    probability is evaluated on the sorted tuple, so the pmf is invariant
    under coordinate permutations bit-for-bit, not merely up to rounding.
    """
    if not isinstance(m, FiniteMixture):
        raise UnsupportedModel("joint_law requires a finite mixture of discrete components")
    if k < 1:
        raise KTooLarge(f"k must be >= 1, got {k}")
    if k > JOINT_LAW_MAX_K:
        raise KTooLarge(f"k={k} exceeds the enumeration guard {JOINT_LAW_MAX_K}")

    laws = [discrete_law(c) for c in m.components]  # raises for Beta
    alphabet = sorted({x for points, _ in laws for x in points})
    pmfs = [dict(zip(points, weights)) for points, weights in laws]

    support = []
    probabilities = []
    cache: dict[tuple[float, ...], float] = {}
    for values in itertools.product(alphabet, repeat=k):
        key = tuple(sorted(values))
        if key not in cache:
            total = 0.0
            for w, pmf in zip(m.weights, pmfs):
                prod = w
                for x in key:
                    prod *= pmf.get(x, 0.0)
                    if prod == 0.0:
                        break
                total += prod
            cache[key] = total
        support.append(values)
        probabilities.append(cache[key])
    return JointLaw(support=tuple(support), probabilities=tuple(probabilities))
