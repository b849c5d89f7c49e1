"""Closed-form tail bounds for sample means of exchangeable [0,1] variables.

Let X_1, ..., X_M be exchangeable with values in [0,1], let mu_plus and
mu_minus be the largest and smallest component means over the support of
the mixing measure, and write Xbar for the sample mean.  The bounds
implemented here are, for 0 < t < 1 - mu_plus,

    P(Xbar - mu_plus >= t)  <=  exp(-2 M t^2),

and symmetrically for 0 < t < mu_minus,

    P(mu_minus - Xbar >= t) <=  exp(-2 M t^2).

The sub-exponential form arises from the exponential-moment argument: for
every h > 0 and mu = mu_plus,

    P(Xbar - mu >= t)  <=  [ exp(-(mu + t) h) * (1 - mu + mu e^h) ]^M

(``chernoff_curve``).  The curve is minimized at the closed-form

    h0 = ln( (1 - mu)(t + mu) / ((1 - mu - t) mu) )

(``optimal_h``), where it equals the relative-entropy form

    [ (mu/(mu+t))^(mu+t) * ((1-mu)/(1-mu-t))^(1-mu-t) ]^M

(``kl_form_bound``), which in turn is at most exp(-2 M t^2).  The last
step rests on three scalar functions, exposed for direct property
testing: writing the optimized bound as exp(-t^2 G(t, mu)),

    G(t, mu) = ((t+mu)/t^2) ln((mu+t)/mu)
             + ((1-mu-t)/t^2) ln((1-mu-t)/(1-mu))        (``big_g``)

has t-minimum g(mu) (``little_g``), which is >= 2 everywhere with
equality at mu = 1/2; monotonicity of the derivative factor
H(x) = (1 - 2/x) ln(1-x) (``big_h``) locates the minimizing t.

One-sided bounds carry constant 1.  The two-sided statement (both tails
simultaneously) is exposed only through :func:`t_for_confidence`, whose
containment holds with probability >= 1 - 2*delta by a union of the two
one-sided bounds.

Everything here is a pure function; outside the validity window the
operations raise :class:`~exchbound.errors.OutOfValidityRange` instead of
returning a clamped value.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DomainError,
    InvalidDelta,
    InvalidH,
    InvalidT,
    MeanOutOfRange,
    OutOfValidityRange,
)
from .model import ModelSummary


class Side(enum.Enum):
    """Which tail of the sample mean is queried."""

    UPPER = "upper"
    LOWER = "lower"

    def __str__(self) -> str:  # CSV/report spelling
        return self.value


@dataclass(frozen=True)
class TailQuery:
    """A single tail question: sample count M, deviation t, and side."""

    M: int
    t: float
    side: Side

    def __post_init__(self) -> None:
        if self.M < 1:
            raise DomainError(f"M must be >= 1, got {self.M}")
        if not self.t > 0.0:
            raise InvalidT(f"t must be > 0, got {self.t!r}")


@dataclass(frozen=True)
class RangeBounds:
    """A nonempty value range [a, b]."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise DomainError(f"range requires a < b, got [{self.a!r}, {self.b!r}]")


@dataclass(frozen=True)
class BoundReport:
    """All closed-form bound values for one (mu_tilde, M, t) query.

    ``h0``, ``chernoff_at_h0`` and ``kl_form`` are None when the query
    lies outside the validity window (no guarantee exists there).
    """

    hoeffding_form: float
    h0: Optional[float]
    chernoff_at_h0: Optional[float]
    kl_form: Optional[float]
    in_validity_range: bool


def _check_m(M: int) -> None:
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")


def _check_mu(mu_tilde: float) -> None:
    if not (0.0 < mu_tilde < 1.0):
        raise DomainError(f"mu_tilde must lie in (0,1), got {mu_tilde!r}")


def hoeffding_tail_bound(M: int, t: float) -> float:
    """The sub-Gaussian tail value exp(-2 M t^2)."""
    _check_m(M)
    if not t > 0.0:
        raise InvalidT(f"t must be > 0, got {t!r}")
    return math.exp(-2.0 * M * t * t)


def chernoff_curve(mu_tilde: float, t: float, M: int, h: float) -> float:
    """Exponential-moment envelope [e^{-(mu+t)h} (1 - mu + mu e^h)]^M.

    Valid as an upper bound on the tail for every h > 0.  Evaluated in
    log space so large h and large M do not overflow.
    """
    _check_mu(mu_tilde)
    _check_m(M)
    if not t > 0.0:
        raise InvalidT(f"t must be > 0, got {t!r}")
    if not h > 0.0:
        raise InvalidH(f"h must be > 0, got {h!r}")
    log_factor = (-mu_tilde - t) * h + np.logaddexp(
        math.log1p(-mu_tilde), math.log(mu_tilde) + h
    )
    try:
        return float(math.exp(M * log_factor))
    except OverflowError:  # envelope diverges for large h; saturate honestly
        return math.inf


def optimal_h(mu_tilde: float, t: float) -> float:
    """Closed-form minimizer of the exponential-moment envelope.

    h0 = ln((1 - mu)(t + mu) / ((1 - mu - t) mu)), strictly positive for
    0 < t < 1 - mu.
    """
    _check_mu(mu_tilde)
    if not (0.0 < t < 1.0 - mu_tilde):
        raise OutOfValidityRange(
            f"t={t!r} outside (0, {1.0 - mu_tilde!r}) for mu_tilde={mu_tilde!r}"
        )
    return math.log(
        (1.0 - mu_tilde) * (t + mu_tilde) / ((1.0 - mu_tilde - t) * mu_tilde)
    )


def kl_form_bound(mu_tilde: float, t: float, M: int) -> float:
    """Optimized envelope [(mu/(mu+t))^(mu+t) ((1-mu)/(1-mu-t))^(1-mu-t)]^M.

    Equals ``chernoff_curve`` at ``optimal_h`` and never exceeds
    exp(-2 M t^2) on the validity window.  Evaluated in log space.
    """
    _check_mu(mu_tilde)
    _check_m(M)
    if not (0.0 < t < 1.0 - mu_tilde):
        raise OutOfValidityRange(
            f"t={t!r} outside (0, {1.0 - mu_tilde!r}) for mu_tilde={mu_tilde!r}"
        )
    a = mu_tilde + t
    b = 1.0 - mu_tilde - t
    log_value = a * math.log(mu_tilde / a) + b * math.log((1.0 - mu_tilde) / b)
    return math.exp(M * log_value)


def big_g(t: float, mu_tilde: float) -> float:
    """Exponent profile G with kl_form(mu, t, 1) = exp(-t^2 G(t, mu)).

    Uses log1p so the 1/t^2 amplification stays accurate for small t.
    """
    _check_mu(mu_tilde)
    if not (0.0 < t < 1.0 - mu_tilde):
        raise OutOfValidityRange(
            f"t={t!r} outside (0, {1.0 - mu_tilde!r}) for mu_tilde={mu_tilde!r}"
        )
    t2 = t * t
    term1 = ((t + mu_tilde) / t2) * math.log1p(t / mu_tilde)
    term2 = ((1.0 - mu_tilde - t) / t2) * math.log1p(-t / (1.0 - mu_tilde))
    return term1 + term2


def little_g(mu_tilde: float) -> float:
    """Minimum of G(., mu) over the validity window; >= 2, equal at 1/2."""
    _check_mu(mu_tilde)
    if mu_tilde < 0.5:
        return math.log((1.0 - mu_tilde) / mu_tilde) / (1.0 - 2.0 * mu_tilde)
    return 1.0 / (2.0 * mu_tilde * (1.0 - mu_tilde))


def big_h(x: float) -> float:
    """H(x) = (1 - 2/x) ln(1 - x), increasing on (0, 1)."""
    if not (0.0 < x < 1.0):
        raise DomainError(f"x must lie in (0,1), got {x!r}")
    return (1.0 - 2.0 / x) * math.log1p(-x)


def mgf_convexity_bound(mean_x: float, r: RangeBounds, h: float) -> float:
    """Chord bound on a moment generating function.

    For any distribution on [a, b] with the given mean, E e^{hX} is at
    most the chord of e^{hx} through (a, e^{ha}) and (b, e^{hb}):

        ((b - EX)/(b - a)) e^{ha} + ((EX - a)/(b - a)) e^{hb}.

    Holds for every real h by convexity of the exponential.
    """
    if not (r.a <= mean_x <= r.b):
        raise MeanOutOfRange(f"mean {mean_x!r} outside [{r.a!r}, {r.b!r}]")
    width = r.b - r.a
    return ((r.b - mean_x) / width) * math.exp(h * r.a) + (
        (mean_x - r.a) / width
    ) * math.exp(h * r.b)


def t_for_confidence(M: int, delta: float) -> float:
    """Deviation t with exp(-2 M t^2) = delta, i.e. sqrt(ln(1/delta)/(2M)).

    With this t, Xbar lies in [mu_minus - t, mu_plus + t] with probability
    at least 1 - 2*delta, provided t falls inside both validity windows
    (union of the two one-sided bounds).
    """
    _check_m(M)
    if not (0.0 < delta <= 1.0):
        raise InvalidDelta(f"delta must lie in (0,1], got {delta!r}")
    return math.sqrt(math.log(1.0 / delta) / (2.0 * M))


def lower_tail_bound_by_flip(model_summary: ModelSummary, M: int, t: float) -> float:
    """Lower-tail bound P(mu_minus - Xbar >= t) <= exp(-2 M t^2).

    Obtained by applying the upper-tail bound to the reflected variables
    1 - X_m, whose largest component mean is 1 - mu_minus; the validity
    window t < 1 - (1 - mu_minus) = mu_minus is checked here.
    """
    _check_m(M)
    if not t > 0.0:
        raise InvalidT(f"t must be > 0, got {t!r}")
    if not t < model_summary.mu_minus:
        raise OutOfValidityRange(
            f"t={t!r} outside (0, {model_summary.mu_minus!r}) for the lower tail"
        )
    return hoeffding_tail_bound(M, t)


def effective_mu(summary: ModelSummary, side: Side) -> float:
    """Upper-side anchor mean for the queried side.

    The lower tail of a model is the upper tail of its reflection, whose
    anchor is 1 - mu_minus; both sides then share the window t < 1 - mu.
    """
    if side is Side.UPPER:
        return summary.mu_plus
    return 1.0 - summary.mu_minus


def tail_bound_report(mu_tilde: float, M: int, t: float) -> BoundReport:
    """All bound forms for one query against an upper-side anchor mean.

    ``mu_tilde`` is the anchor mean of the queried side (pass
    1 - mu_minus for lower tails).  Outside the window 0 < t < 1 - mu,
    or when mu lies on the boundary of (0,1), the optimized forms are
    None and only the raw exp(-2Mt^2) value is reported.
    """
    _check_m(M)
    if not t > 0.0:
        raise InvalidT(f"t must be > 0, got {t!r}")
    hoeffding = hoeffding_tail_bound(M, t)
    in_range = t < 1.0 - mu_tilde
    if not in_range or not (0.0 < mu_tilde < 1.0):
        return BoundReport(
            hoeffding_form=hoeffding,
            h0=None,
            chernoff_at_h0=None,
            kl_form=None,
            in_validity_range=in_range,
        )
    h0 = optimal_h(mu_tilde, t)
    return BoundReport(
        hoeffding_form=hoeffding,
        h0=h0,
        chernoff_at_h0=chernoff_curve(mu_tilde, t, M, h0),
        kl_form=kl_form_bound(mu_tilde, t, M),
        in_validity_range=True,
    )
