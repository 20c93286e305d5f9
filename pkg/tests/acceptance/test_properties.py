#!/usr/bin/env python3
# Property suite at full size: field laws, sign, slopes, activation, round trips
#
# Tens of thousands of generated cases; enabled with DEBUGLIN_ACCEPTANCE=1

import unittest
import os
import sys
import logging
from dataclasses import replace
from fractions import Fraction

import mpmath
from hypothesis import HealthCheck, assume, given, settings, strategies as st

sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))
from debuglin.exact_numerics import ExactScalar, scalar_sign
from debuglin.generators import (
    make_rng,
    random_cnf,
    random_hinge_1d_instance,
    random_kept_masks,
    random_linear_instance,
    random_orders,
    random_rational,
)
from debuglin.instance_io import parse_instance, parse_trajectory, serialize_instance, serialize_trajectory
from debuglin.model_core import LossSpec, RampTerm, Sample, loss_slope, loss_value
from debuglin.reductions import (
    SubsetSumQuery,
    compile_sat13,
    compile_subsetsum_1d,
    compile_subsetsum_2d,
    sat13_loss,
)
from debuglin.sgd_engine import train

ENABLED = os.environ.get('DEBUGLIN_ACCEPTANCE') == '1'

FIELD_CASES = 10_000
SIGN_CASES = 10_000
SLOPE_CASES = 1_000
INSTANCE_CASES = 1_000

LARGE = settings(
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)

rationals = st.fractions(max_denominator=10**6).filter(lambda q: abs(q) < 10**6)
gammas = st.sampled_from([Fraction(2), Fraction(3), Fraction(5, 2), Fraction(7, 3), Fraction(11)])
small = st.fractions(min_value=-10, max_value=10, max_denominator=100)
positive = st.fractions(min_value=Fraction(1, 100), max_value=10, max_denominator=100)


@st.composite
def scalars(draw, gamma=None):
    g = gamma if gamma is not None else draw(gammas)
    return ExactScalar(draw(rationals), draw(rationals), g)


@st.composite
def loss_specs(draw):
    kind = draw(st.sampled_from(['linear', 'hinge', 'sat13', 'ramp']))
    if kind == 'linear':
        return LossSpec.linear(draw(positive), draw(small))
    if kind == 'hinge':
        return LossSpec.hinge(draw(positive), draw(small))
    if kind == 'sat13':
        return sat13_loss(draw(st.integers(min_value=3, max_value=60)))
    terms = draw(st.lists(st.tuples(small.filter(bool), small, positive), min_size=1, max_size=4))
    return LossSpec.ramp_sum([RampTerm(c, x0, delta) for c, x0, delta in terms])


def lift(inst, rng, gamma=Fraction(2)):
    """Move every non-eta coordinate into Q(sqrt(gamma)) with random irrational parts"""
    def up(v):
        return ExactScalar(v.a, random_rational(rng), gamma)

    def up_sample(s):
        return Sample(tuple(up(v) for v in s.x), s.y, s.name)

    return replace(
        inst,
        gamma=gamma,
        w0=tuple(up(v) for v in inst.w0),
        train=tuple(up_sample(s) for s in inst.train),
        test=up_sample(inst.test),
    )


def generated_instances(seed, count):
    rng = make_rng(seed)
    out = []
    while len(out) < count:
        choice = len(out) % 6
        if choice == 0:
            inst = random_linear_instance(rng)
        elif choice == 1:
            inst = random_hinge_1d_instance(rng)
        elif choice == 2:
            inst = lift(random_linear_instance(rng), rng)
        elif choice == 3:
            inst = lift(replace(random_hinge_1d_instance(rng), max_epochs=2), rng, Fraction(3))
        elif choice == 4:
            inst = compile_sat13(random_cnf(rng, n_max=5, m_max=3))
        else:
            n = int(rng.integers(2, 5))
            items = tuple(int(a) for a in rng.integers(1, 10, size=n))
            t = int(rng.integers(1, sum(items) + 1))
            if rng.integers(0, 2):
                inst = compile_subsetsum_2d(SubsetSumQuery(items, t), Fraction(5, 2))
            else:
                inst = compile_subsetsum_1d(SubsetSumQuery(items, t, int(rng.integers(1, n + 1))), -2)
        out.append(inst)
    return out


@unittest.skipUnless(ENABLED, "set DEBUGLIN_ACCEPTANCE=1 to run the acceptance suite")
class TestExactArithmeticProperties(unittest.TestCase):

    @settings(LARGE, max_examples=FIELD_CASES)
    @given(st.data())
    def test_field_laws(self, data):
        g = data.draw(gammas)
        x = data.draw(scalars(g))
        y = data.draw(scalars(g))
        self.assertEqual((x + y) - y, x)
        assume(y)
        self.assertEqual((x * y) / y, x)

    @settings(LARGE, max_examples=SIGN_CASES)
    @given(scalars())
    def test_sign_matches_high_precision(self, v):
        approx = v.approximate()
        assume(abs(approx) > mpmath.mpf('1e-30'))
        self.assertEqual(scalar_sign(v), 1 if approx > 0 else -1)


@unittest.skipUnless(ENABLED, "set DEBUGLIN_ACCEPTANCE=1 to run the acceptance suite")
class TestLossProperties(unittest.TestCase):

    @settings(LARGE, max_examples=SLOPE_CASES)
    @given(loss_specs(), small)
    def test_slope_is_symmetric_difference(self, spec, m):
        points = spec.breakpoints()
        if points:
            gap = min(abs(m - p) for p in points)
            assume(gap > 0)
            h = gap / 3
        else:
            h = Fraction(1)
        diff = (loss_value(spec, m + h) - loss_value(spec, m - h)) / (2 * h)
        self.assertEqual(diff, loss_slope(spec, m))


@unittest.skipUnless(ENABLED, "set DEBUGLIN_ACCEPTANCE=1 to run the acceptance suite")
class TestTrainingProperties(unittest.TestCase):

    def setUp(self):
        logging.disable(logging.CRITICAL)

    def tearDown(self):
        logging.disable(logging.NOTSET)

    def test_linear_loss_activates_every_nonzero_sample(self):
        rng = make_rng(31)
        for _ in range(INSTANCE_CASES):
            inst = replace(random_linear_instance(rng), max_epochs=3)
            if rng.integers(0, 2):
                inst = lift(inst, rng)
            orders = random_orders(rng, inst.n_train, 3)
            for kept in random_kept_masks(rng, inst.n_train, 2):
                traj = train(inst, kept, orders=orders)
                for step in traj.steps:
                    x = inst.train[step.sample_index].x
                    self.assertEqual(step.activated, any(scalar_sign(v) != 0 for v in x))


@unittest.skipUnless(ENABLED, "set DEBUGLIN_ACCEPTANCE=1 to run the acceptance suite")
class TestRoundTripProperties(unittest.TestCase):

    def setUp(self):
        logging.disable(logging.CRITICAL)

    def tearDown(self):
        logging.disable(logging.NOTSET)

    def test_instances(self):
        for inst in generated_instances(41, INSTANCE_CASES):
            text = serialize_instance(inst)
            parsed = parse_instance(text)
            self.assertEqual(parsed, inst)
            self.assertEqual(serialize_instance(parsed), text)

    def test_trajectories(self):
        rng = make_rng(43)
        for inst in generated_instances(42, INSTANCE_CASES):
            kept = random_kept_masks(rng, inst.n_train, 1)[0]
            traj = train(inst, kept)
            text = serialize_trajectory(traj, inst.gamma)
            parsed = parse_trajectory(text)
            self.assertEqual(parsed.steps, traj.steps)
            self.assertEqual(parsed.epoch_snapshots, traj.epoch_snapshots)
            self.assertEqual(parsed.final_w, traj.final_w)
            self.assertEqual(serialize_trajectory(parsed, inst.gamma), text)


if __name__ == '__main__':
    unittest.main()
