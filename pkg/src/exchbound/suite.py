"""The standard verification models used by the test suite and the CLI.

Five models chosen to exercise every oracle path and every qualitative
regime: a single atom (the i.i.d. case), a well-separated two-atom
Bernoulli mixture, a three-atom mixture with a multi-point discrete
component, the maximally spread two-point-mass model whose validity
windows are empty, and a continuous Bernoulli-parameter mixture.
"""

from __future__ import annotations

from .model import (
    Bernoulli,
    BernoulliParamMixture,
    DiscreteOnUnit,
    FiniteMixture,
    MixingMeasure,
    PointMass,
    UniformDensity,
)


def standard_suite() -> tuple[tuple[str, MixingMeasure], ...]:
    """(model_id, model) pairs, in a fixed order."""
    return (
        ("bern03", FiniteMixture([(1.0, Bernoulli(0.3))])),
        (
            "two_atom",
            FiniteMixture([(0.5, Bernoulli(0.2)), (0.5, Bernoulli(0.8))]),
        ),
        (
            "three_atom_discrete",
            FiniteMixture(
                [
                    (0.3, Bernoulli(0.25)),
                    (0.3, DiscreteOnUnit(points=[0.0, 0.5, 1.0], weights=[0.2, 0.3, 0.5])),
                    (0.4, PointMass(0.5)),
                ]
            ),
        ),
        (
            "zero_one",
            FiniteMixture([(0.5, PointMass(0.0)), (0.5, PointMass(1.0))]),
        ),
        (
            "uniform_param",
            BernoulliParamMixture(UniformDensity(lo=0.2, hi=0.8)),
        ),
    )


def suite_model(model_id: str) -> MixingMeasure:
    for name, m in standard_suite():
        if name == model_id:
            return m
    raise KeyError(f"no such suite model: {model_id!r}")
