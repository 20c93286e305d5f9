#!/usr/bin/env python3
# Reductions - hardness instance compilers and source-problem oracles

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from debuglin.errors import ReductionError
from debuglin.exact_numerics import ExactScalar, as_rational, rational_sqrt
from debuglin.model_core import (
    Instance,
    LossSpec,
    RampTerm,
    Sample,
    Termination,
)

logger = logging.getLogger(__name__)

# Ramp half-widths of the 1-in-3 SAT loss
RAMP_NARROW = Fraction(1, 100)
RAMP_WIDE = Fraction(13, 50)


@dataclass(frozen=True)
class MonotoneCnf:
    n: int
    clauses: tuple[tuple[int, int, int], ...]

    @property
    def m(self) -> int:
        return len(self.clauses)


@dataclass(frozen=True)
class SubsetSumQuery:
    S: tuple[int, ...]
    t: int
    k: Optional[int] = None

    @property
    def n(self) -> int:
        return len(self.S)


@dataclass(frozen=True)
class SatLayout:
    """Coordinate indices of the 1-in-3 SAT instance"""
    n: int
    m: int

    @property
    def N(self) -> int:
        return self.n + 2 * self.m + 1

    def c(self, j: int) -> int:
        """Clause coordinate, 1-based j"""
        return j - 1

    def x(self, i: int) -> int:
        """Variable coordinate, 1-based i"""
        return self.m + i - 1

    def b(self, j: int) -> int:
        return self.m + self.n + j - 1

    @property
    def dummy(self) -> int:
        return self.N - 1


def validate_cnf(phi: MonotoneCnf) -> None:
    if not isinstance(phi.n, int) or phi.n < 1:
        raise ReductionError(f"variable count must be positive, got {phi.n!r}")
    for j, clause in enumerate(phi.clauses, start=1):
        if len(clause) != 3:
            raise ReductionError(f"clause {j}: clause arity {len(clause)}, expected 3")
        for lit in clause:
            if not isinstance(lit, int) or lit < 1:
                raise ReductionError(f"clause {j}: literal {lit!r} is not a positive variable index")
            if lit > phi.n:
                raise ReductionError(f"clause {j}: variable index out of range: {lit} > {phi.n}")
        if len(set(clause)) != 3:
            raise ReductionError(f"clause {j}: repeated variable in {clause}")


def validate_query(q: SubsetSumQuery) -> None:
    if len(q.S) <= 1:
        raise ReductionError(f"subset-sum query needs more than one item, got {len(q.S)}")
    if any(not isinstance(a, int) or a <= 0 for a in q.S):
        raise ReductionError(f"items must be positive integers, got {q.S}")
    if not isinstance(q.t, int) or q.t <= 0:
        raise ReductionError(f"target must be a positive integer, got {q.t!r}")
    if q.k is not None and (not isinstance(q.k, int) or q.k <= 0):
        raise ReductionError(f"size must be a positive integer, got {q.k!r}")


def sat13_loss(N: int) -> LossSpec:
    terms = [
        RampTerm(Fraction(-12 * N, 5), Fraction(-5), RAMP_NARROW),
        RampTerm(Fraction(-1), Fraction(-1, 2), RAMP_WIDE),
    ]
    for x0 in (-3, -1, 1, 3):
        terms.append(RampTerm(Fraction(-1, 1000 * N), Fraction(x0), RAMP_NARROW))
    return LossSpec.ramp_sum(terms)


def compile_sat13(phi: MonotoneCnf, order: Optional[Sequence[int]] = None) -> Instance:
    """
    Compile a monotone 3-CNF into a ramp-sum training instance

    Args:
        phi: Formula with n variables and m clauses
        order: Permutation of the default gadget order (var(1..n), clause(1..m))

    Returns:
        Instance: dimension n+2m+1, exact_zero termination, three epochs
    """
    validate_cnf(phi)
    n, m = phi.n, phi.m
    lay = SatLayout(n, m)
    N = lay.N

    def vec(entries: dict[int, Fraction]) -> tuple[ExactScalar, ...]:
        return tuple(ExactScalar(entries.get(i, 0)) for i in range(N))

    w0 = vec({
        **{lay.c(j): Fraction(1, 2) for j in range(1, m + 1)},
        **{lay.x(i): Fraction(-1) for i in range(1, n + 1)},
        **{lay.b(j): Fraction(-1) for j in range(1, m + 1)},
        lay.dummy: Fraction(1),
    })
    eta = tuple(
        [Fraction(5)] * m
        + [Fraction(1, 6 * N)] * n
        + [Fraction(2000 * N)] * m
        + [Fraction(1)]
    )

    gadgets = [Sample(vec({lay.x(i): Fraction(5)}), 1, f"var({i})") for i in range(1, n + 1)]
    for j, (i1, i2, i3) in enumerate(phi.clauses, start=1):
        entries = {lay.c(j): Fraction(1), lay.b(j): Fraction(1, 2)}
        for i in (i1, i2, i3):
            entries[lay.x(i)] = Fraction(1)
        gadgets.append(Sample(vec(entries), 1, f"clause({j})"))

    if order is not None:
        if sorted(order) != list(range(len(gadgets))):
            raise ReductionError(f"gadget order is not a permutation of 0..{len(gadgets) - 1}")
        gadgets = [gadgets[i] for i in order]

    test = Sample(
        vec({
            **{lay.c(j): Fraction(1) for j in range(1, m + 1)},
            lay.dummy: Fraction(-11 * m + 5, 2),
        }),
        1,
    )

    inst = Instance(
        d=N,
        gamma=Fraction(1),
        loss=sat13_loss(N),
        w0=w0,
        eta=eta,
        epsilon=Termination.zero(),
        max_epochs=3,
        train=tuple(gadgets),
        test=test,
    )
    logger.info(f"Compiled 1-in-3 SAT instance: n={n}, m={m}, d={N}")
    return inst


def rescale(inst: Instance, alpha, eta) -> Instance:
    """
    Turn a canonical alpha = eta = 1 instance into one with the given alpha, eta

    Each coordinate is divided by s = sqrt(alpha * eta) in x and multiplied by s
    in w0, which keeps every margin and activation unchanged. s must be
    rational, or a rational multiple of sqrt(gamma) where gamma is the
    instance's own extension (or becomes alpha * eta when the instance is
    rational).
    """
    alpha = as_rational(alpha)
    eta = as_rational(eta)
    if alpha <= 0 or eta <= 0:
        raise ReductionError(f"alpha and eta must be positive, got {alpha}, {eta}")
    if inst.loss.alpha != 1 or any(e != 1 for e in inst.eta):
        raise ReductionError("rescaling expects a canonical alpha = eta = 1 instance")

    prod = alpha * eta
    gamma = inst.gamma
    s_root = rational_sqrt(prod)
    if s_root is not None:
        s = ExactScalar(s_root, 0, gamma)
    else:
        base_square = rational_sqrt(gamma) is not None
        if base_square:
            # Rational instance: move it into Q(sqrt(alpha * eta))
            gamma = prod
            s = ExactScalar.root(gamma)
        else:
            r = rational_sqrt(prod / gamma)
            if r is None:
                raise ReductionError(
                    f"sqrt(alpha*eta) = sqrt({prod}) is not expressible in Q(sqrt({gamma}))"
                )
            s = ExactScalar(0, r, gamma)

    def lift(v: ExactScalar) -> ExactScalar:
        return ExactScalar(v.a, v.b, gamma)

    def rescale_sample(smp: Sample) -> Sample:
        return Sample(tuple(lift(xi) / s for xi in smp.x), smp.y, smp.name)

    return Instance(
        d=inst.d,
        gamma=gamma,
        loss=LossSpec(inst.loss.kind, alpha, inst.loss.beta, inst.loss.terms),
        w0=tuple(lift(w) * s for w in inst.w0),
        eta=tuple(eta for _ in inst.eta),
        epsilon=inst.epsilon,
        max_epochs=inst.max_epochs,
        train=tuple(rescale_sample(smp) for smp in inst.train),
        test=Sample(tuple(lift(xi) for xi in inst.test.x), inst.test.y),
    )


def _item_order(n: int, item_order: Optional[Sequence[int]]) -> Sequence[int]:
    if item_order is None:
        return range(n)
    if sorted(item_order) != list(range(n)):
        raise ReductionError(f"item order is not a permutation of 0..{n - 1}")
    return item_order


def b2_constant(n: int, m: int, beta: Fraction) -> Fraction:
    """M for the beta < -1 construction"""
    return -beta * (n + 2) + 9 * beta * beta * n * m * m * (n + 1) + 3


def compile_subsetsum_2d(
    q: SubsetSumQuery,
    beta,
    alpha=1,
    eta=1,
    item_order: Optional[Sequence[int]] = None,
) -> Instance:
    """
    Compile a subset-sum query into a two-dimensional hinge instance

    Items come first (in item_order when given), then the c, b and a samples.
    beta >= -1 works in Q(sqrt(max(beta, 1))); beta < -1 uses the rational
    variant with the large offset M.
    """
    validate_query(q)
    if q.k is not None:
        raise ReductionError("two-dimensional compiler takes no size constraint")
    n = q.n
    beta = as_rational(beta)
    m = max(q.S)
    t = q.t

    if beta >= -1:
        gamma = max(beta, Fraction(1))
        g = ExactScalar.root(gamma)

        def pt(u, v) -> tuple[ExactScalar, ExactScalar]:
            return (g * as_rational(u), g * as_rational(v))

        items = [pt(Fraction(1, n + 1), 3 * a) for a in q.S]
        big = 18 * n * n * m * m
        c = pt(big - 2, -3 * t)
        b = pt(1, -1)
        a = pt(1, 1)
        w0 = pt(-big, 0)
    else:
        gamma = Fraction(1)
        M = b2_constant(n, m, beta)
        bound = -M / (n + 1) + Fraction(n, (n + 1) ** 2) + 9 * beta * beta * n * m * m
        if not bound < beta:
            raise ReductionError(f"activation bound {bound} is not below beta = {beta}")

        def pt(u, v) -> tuple[ExactScalar, ExactScalar]:
            return (ExactScalar(as_rational(u)), ExactScalar(as_rational(v)))

        items = [pt(Fraction(1, n + 1), -3 * beta * a) for a in q.S]
        c = pt(M + Fraction(3, 2) * beta - 1, beta * (3 * t - Fraction(1, 2)))
        b = pt(1, -1)
        a = pt(-Fraction(3, 2) * beta, -Fraction(3, 2) * beta)
        w0 = pt(-M, 0)

    train = [Sample(items[i], 1, f"item({i + 1})") for i in _item_order(n, item_order)]
    train += [Sample(c, 1, 'c'), Sample(b, 1, 'b'), Sample(a, 1, 'a')]
    one = ExactScalar(1, 0, gamma)
    inst = Instance(
        d=2,
        gamma=gamma,
        loss=LossSpec.hinge(1, beta),
        w0=w0,
        eta=(Fraction(1), Fraction(1)),
        epsilon=Termination.zero(),
        max_epochs=1,
        train=tuple(train),
        test=Sample((one, ExactScalar.zero(gamma)), 1),
    )
    logger.info(f"Compiled 2-D subset-sum instance: n={n}, t={t}, beta={beta}, gamma={gamma}")
    if as_rational(alpha) != 1 or as_rational(eta) != 1:
        inst = rescale(inst, alpha, eta)
    return inst


def compile_subsetsum_1d(
    q: SubsetSumQuery,
    beta=-1,
    alpha_eta=1,
    item_order: Optional[Sequence[int]] = None,
) -> Instance:
    """
    Compile a fixed-size subset-sum query into a one-dimensional hinge instance

    The canonical construction has beta = -1; other negative betas scale every
    coordinate by sqrt(-beta).
    """
    validate_query(q)
    if q.k is None:
        raise ReductionError("one-dimensional compiler needs a size constraint k")
    beta = as_rational(beta)
    if beta >= 0:
        raise ReductionError(f"one-dimensional compiler needs beta < 0, got {beta}")
    total = sum(q.S)
    k, t = q.k, q.t

    root = rational_sqrt(-beta)
    if root is not None:
        gamma = Fraction(1)
        scale = ExactScalar(root)
    else:
        gamma = -beta
        scale = ExactScalar.root(gamma)

    def val(u: Fraction) -> tuple[ExactScalar]:
        return (scale * u,)

    items = [
        Sample(val(Fraction(2, 3) + Fraction(a, 3 * total)), 1, f"item({i + 1})")
        for i, a in enumerate(q.S)
    ]
    train = [items[i] for i in _item_order(q.n, item_order)]
    train.append(Sample(val(1 + Fraction(1, 6 * total)), 1, 'a'))
    w0 = val(-1 - Fraction(2 * k, 3) - Fraction(t, 3 * total))

    inst = Instance(
        d=1,
        gamma=gamma,
        loss=LossSpec.hinge(1, beta),
        w0=w0,
        eta=(Fraction(1),),
        epsilon=Termination.zero(),
        max_epochs=1,
        train=tuple(train),
        test=Sample((ExactScalar(1, 0, gamma),), 1),
    )
    logger.info(f"Compiled 1-D fixed-size subset-sum instance: n={q.n}, k={k}, t={t}, beta={beta}")
    alpha_eta = as_rational(alpha_eta)
    if alpha_eta != 1:
        inst = rescale(inst, alpha_eta, 1)
    return inst


def oracle_1in3(phi: MonotoneCnf) -> tuple[bool, Optional[tuple[bool, ...]]]:
    """Exhaustive search for an assignment with exactly one true literal per clause"""
    validate_cnf(phi)
    for assignment in itertools.product((True, False), repeat=phi.n):
        if all(sum(assignment[i - 1] for i in clause) == 1 for clause in phi.clauses):
            return True, assignment
    return False, None


def oracle_subset_sum(q: SubsetSumQuery) -> tuple[bool, Optional[tuple[int, ...]]]:
    """Exhaustive search over subsets in ascending mask order, honouring k"""
    validate_query(q)
    n = q.n
    for mask in range(1 << n):
        if q.k is not None and bin(mask).count('1') != q.k:
            continue
        chosen = tuple(q.S[i] for i in range(n) if (mask >> i) & 1)
        if sum(chosen) == q.t:
            return True, chosen
    return False, None


def assignment_to_kept(phi: MonotoneCnf, inst: Instance, assignment: Sequence[bool]) -> tuple[bool, ...]:
    """Kept mask that keeps every clause gadget and var(i) iff x_i is true"""
    truth = {f"var({i})": bool(v) for i, v in enumerate(assignment, start=1)}
    return tuple(truth.get(s.name, True) for s in inst.train)
