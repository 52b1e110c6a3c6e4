"""Shared hypothesis strategies and random problem builders for the tests."""

import numpy as np
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from proxcycle import (CycleProblem, IndicatorAffineSubspace, IndicatorBall, IndicatorBox,
                       IndicatorEpiExpShift, IndicatorHalfspace, IndicatorLine, Linear,
                       Quadratic)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def block_vectors(draw, m=None, d=None, m_range=(1, 8), d_range=(1, 5)):
    m = m if m is not None else draw(st.integers(*m_range))
    d = d if d is not None else draw(st.integers(*d_range))
    return draw(hnp.arrays(np.float64, (m, d), elements=finite))


@st.composite
def block_pairs(draw, m_range=(1, 8), d_range=(1, 5)):
    m = draw(st.integers(*m_range))
    d = draw(st.integers(*d_range))
    return (draw(block_vectors(m=m, d=d)), draw(block_vectors(m=m, d=d)))


KINDS = ("IndicatorAffineSubspace", "IndicatorLine", "IndicatorHalfspace", "IndicatorBall",
         "IndicatorBox", "IndicatorEpiExpShift", "Quadratic", "Linear")


def random_piece(kind, rng, d=None):
    """A random instance of ``kind``; ``d`` defaults to a random dimension."""
    if kind == "IndicatorEpiExpShift":
        return IndicatorEpiExpShift(float(rng.uniform(0, 2)))
    d = d or int(rng.integers(1, 5))
    if kind == "IndicatorAffineSubspace":
        k = int(rng.integers(0, d + 1))
        return IndicatorAffineSubspace(rng.normal(size=d), rng.normal(size=(k, d)).tolist())
    if kind == "IndicatorLine":
        return IndicatorLine(rng.normal(size=d), rng.normal(size=d))
    if kind == "IndicatorHalfspace":
        return IndicatorHalfspace(rng.normal(size=d), float(rng.normal()))
    if kind == "IndicatorBall":
        return IndicatorBall(rng.normal(size=d), float(rng.uniform(0, 2)))
    if kind == "IndicatorBox":
        lo = rng.normal(size=d) - 1
        hi = lo + rng.uniform(0, 2, size=d)
        lo[rng.random(d) < 0.3] = -np.inf
        hi[rng.random(d) < 0.3] = np.inf
        return IndicatorBox(lo, hi)
    if kind == "Quadratic":
        return Quadratic(rng.normal(size=d), float(rng.uniform(0.1, 3)))
    if kind == "Linear":
        return Linear(rng.normal(size=d))
    raise ValueError(kind)


def random_lines(rng, m, d):
    return CycleProblem(tuple(IndicatorLine(rng.normal(size=d), rng.normal(size=d))
                              for _ in range(m)), d)


def epi_axis(alpha):
    return CycleProblem((IndicatorEpiExpShift(alpha), IndicatorLine([0.0, 0.0], [1.0, 0.0])), 2)
