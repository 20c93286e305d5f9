#!/usr/bin/env python3
# Generators - seeded random formulas, instances, orders and masks

from __future__ import annotations

from fractions import Fraction
from typing import Optional

import numpy as np

from debuglin.exact_numerics import ExactScalar
from debuglin.model_core import Instance, LossSpec, Sample, Termination
from debuglin.reductions import MonotoneCnf

# Bound on numerators and denominators of random rationals
DEFAULT_BOUND = 20


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_rational(rng: np.random.Generator, bound: int = DEFAULT_BOUND, positive: bool = False) -> Fraction:
    den = int(rng.integers(1, bound + 1))
    if positive:
        num = int(rng.integers(1, bound + 1))
    else:
        num = int(rng.integers(-bound, bound + 1))
    return Fraction(num, den)


def random_vector(rng: np.random.Generator, d: int, bound: int = DEFAULT_BOUND) -> tuple[ExactScalar, ...]:
    return tuple(ExactScalar(random_rational(rng, bound)) for _ in range(d))


def random_label(rng: np.random.Generator) -> int:
    return 1 if rng.integers(0, 2) else -1


def random_cnf(rng: np.random.Generator, n_max: int = 5, m_max: int = 3) -> MonotoneCnf:
    """Monotone 3-CNF with 3..n_max variables and 1..m_max distinct-variable clauses"""
    n = int(rng.integers(3, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    clauses = tuple(
        tuple(int(i) + 1 for i in rng.choice(n, size=3, replace=False))
        for _ in range(m)
    )
    return MonotoneCnf(n, clauses)


def random_order(rng: np.random.Generator, n: int) -> tuple[int, ...]:
    return tuple(int(i) for i in rng.permutation(n))


def random_orders(rng: np.random.Generator, n: int, epochs: int) -> list[tuple[int, ...]]:
    return [random_order(rng, n) for _ in range(epochs)]


def random_kept_masks(rng: np.random.Generator, n: int, count: int) -> list[tuple[bool, ...]]:
    return [tuple(bool(b) for b in rng.integers(0, 2, size=n)) for _ in range(count)]


def all_kept_masks(n: int) -> list[tuple[bool, ...]]:
    return [tuple(not (r >> i) & 1 for i in range(n)) for r in range(1 << n)]


def _samples(rng, d, n, bound):
    return tuple(Sample(random_vector(rng, d, bound), random_label(rng)) for _ in range(n))


def random_linear_instance(
    rng: np.random.Generator,
    d_max: int = 4,
    n_max: int = 12,
    bound: int = DEFAULT_BOUND,
) -> Instance:
    """Linear-loss instance trained for one epoch"""
    d = int(rng.integers(1, d_max + 1))
    n = int(rng.integers(0, n_max + 1))
    return Instance(
        d=d,
        gamma=Fraction(1),
        loss=LossSpec.linear(random_rational(rng, bound, positive=True), random_rational(rng, bound)),
        w0=random_vector(rng, d, bound),
        eta=tuple(random_rational(rng, bound, positive=True) for _ in range(d)),
        epsilon=Termination.zero(),
        max_epochs=1,
        train=_samples(rng, d, n, bound),
        test=Sample(random_vector(rng, d, bound), random_label(rng)),
    )


def random_hinge_1d_instance(
    rng: np.random.Generator,
    n_max: int = 12,
    bound: int = DEFAULT_BOUND,
    beta: Optional[Fraction] = None,
) -> Instance:
    """One-dimensional hinge instance with beta >= 0, trained for one epoch"""
    n = int(rng.integers(0, n_max + 1))
    if beta is None:
        beta = abs(random_rational(rng, bound))
    return Instance(
        d=1,
        gamma=Fraction(1),
        loss=LossSpec.hinge(random_rational(rng, bound, positive=True), beta),
        w0=random_vector(rng, 1, bound),
        eta=(random_rational(rng, bound, positive=True),),
        epsilon=Termination.zero(),
        max_epochs=1,
        train=_samples(rng, 1, n, bound),
        test=Sample(random_vector(rng, 1, bound), random_label(rng)),
    )
