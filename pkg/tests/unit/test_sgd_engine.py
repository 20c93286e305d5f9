#!/usr/bin/env python3
# Unit tests for the exact SGD engine

import unittest
import os
import sys
import logging
from dataclasses import replace
from fractions import Fraction

sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))
from debuglin.errors import DimensionError, DomainError
from debuglin.exact_numerics import ExactScalar, vector
from debuglin.generators import make_rng, random_linear_instance, random_kept_masks
from debuglin.model_core import Instance, LossSpec, Sample, Termination
from debuglin.reductions import (
    MonotoneCnf,
    SatLayout,
    SubsetSumQuery,
    compile_sat13,
    compile_subsetsum_2d,
)
from debuglin.sgd_engine import run_epoch, sgd_step, train

PHI1 = MonotoneCnf(4, ((1, 2, 3), (2, 3, 4)))
PHI1_WITNESS = (True, False, False, True, True, True)
HINGE0 = LossSpec.hinge(1, 0)


def one_dim(w0, samples, loss=HINGE0, max_epochs=1, epsilon=None):
    return Instance(
        d=1,
        gamma=Fraction(1),
        loss=loss,
        w0=vector([w0]),
        eta=(Fraction(1),),
        epsilon=epsilon or Termination.zero(),
        max_epochs=max_epochs,
        train=tuple(Sample(vector([x]), y) for x, y in samples),
        test=Sample(vector([1]), 1),
    )


class TestSgdStep(unittest.TestCase):
    """
    Single updates
    """

    def test_hinge_step_activates(self):
        w, activated = sgd_step(vector([1]), Sample(vector([1]), -1), HINGE0, (Fraction(1),))
        self.assertTrue(activated)
        self.assertEqual(w, vector([0]))

    def test_hinge_step_outside_region(self):
        w, activated = sgd_step(vector([1]), Sample(vector([1]), 1), HINGE0, (Fraction(1),))
        self.assertFalse(activated)
        self.assertEqual(w, vector([1]))

    def test_zero_feature_never_activates(self):
        w, activated = sgd_step(vector([-3, 2]), Sample(vector([0, 0]), 1), LossSpec.linear(), (Fraction(1), Fraction(1)))
        self.assertFalse(activated)
        self.assertEqual(w, vector([-3, 2]))

    def test_var_gadget_first_step(self):
        """The var(i) sample moves its coordinate from -1 to 1"""
        inst = compile_sat13(PHI1)
        lay = SatLayout(4, 2)
        w, activated = sgd_step(inst.w0, inst.train[0], inst.loss, inst.eta)
        self.assertTrue(activated)
        self.assertEqual(w[lay.x(1)], 1)
        self.assertEqual([v for k, v in enumerate(w) if k != lay.x(1)],
                         [v for k, v in enumerate(inst.w0) if k != lay.x(1)])

    def test_eta_arity_mismatch(self):
        with self.assertRaises(DimensionError):
            sgd_step(vector([1, 1]), Sample(vector([1, 1]), 1), HINGE0, (Fraction(1),))

    def test_step_in_extension_field(self):
        root = ExactScalar.root(2)
        w, activated = sgd_step((root,), Sample((root,), -1), HINGE0, (Fraction(1),))
        # margin -2, update w + y x = sqrt(2) - sqrt(2)
        self.assertTrue(activated)
        self.assertEqual(w, (ExactScalar.zero(2),))


class TestRunEpoch(unittest.TestCase):

    def setUp(self):
        logging.disable(logging.CRITICAL)

    def tearDown(self):
        logging.disable(logging.NOTSET)

    def test_empty_fold(self):
        w, records = run_epoch(vector([3, 4]), [], HINGE0, vector([1, 1]))
        self.assertEqual(w, vector([3, 4]))
        self.assertEqual(records, [])

    def test_records_carry_indices(self):
        samples = [Sample(vector([1]), 1), Sample(vector([1]), 1)]
        w, records = run_epoch(vector([-1]), samples, HINGE0, (Fraction(1),), epoch=2, indices=[5, 3])
        # Second step sits at margin 0 = beta and does not move w
        self.assertEqual(w, vector([0]))
        self.assertEqual([(r.epoch, r.iteration, r.sample_index) for r in records], [(2, 1, 5), (2, 2, 3)])
        self.assertEqual([r.margin for r in records], [-1, 0])
        self.assertEqual([r.activated for r in records], [True, False])

    def test_first_epoch_of_sat_instance(self):
        """Every variable coordinate lands within 1/(6000N) of 1"""
        inst = compile_sat13(PHI1)
        lay = SatLayout(4, 2)
        w, _ = run_epoch(inst.w0, inst.train, inst.loss, inst.eta)
        radius = Fraction(1, 54000)
        for i in range(1, 5):
            self.assertLess(abs(w[lay.x(i)] - 1), radius)


class TestTrain(unittest.TestCase):
    """
    Full training runs, termination and orders
    """

    def setUp(self):
        logging.disable(logging.CRITICAL)

    def tearDown(self):
        logging.disable(logging.NOTSET)

    def test_epoch_cap(self):
        traj = train(one_dim(0, [(1, 1)], loss=LossSpec.linear(), max_epochs=1))
        self.assertEqual(traj.terminated_epoch, 1)
        self.assertEqual(len(traj.epoch_snapshots), 2)
        self.assertEqual(traj.final_w, vector([1]))

    def test_full_sat_instance_stops_after_second_epoch(self):
        inst = compile_sat13(PHI1)
        traj = train(inst)
        # No sample fires in epoch 2, so exact_zero stops there
        self.assertEqual(traj.terminated_epoch, 2)
        self.assertEqual(len(traj.epoch_snapshots), 3)
        self.assertEqual(traj.epoch_snapshots[2], traj.epoch_snapshots[1])
        self.assertEqual(traj.epoch_snapshots[0], inst.w0)
        self.assertTrue(all(not s.activated for s in traj.epoch_steps(2)))

    def test_witness_subset_reaches_fixpoint(self):
        inst = compile_sat13(PHI1)
        # var(2) and var(3) removed
        traj = train(inst, PHI1_WITNESS)
        self.assertEqual(traj.terminated_epoch, 3)
        self.assertNotEqual(traj.epoch_snapshots[2], traj.epoch_snapshots[1])
        self.assertEqual(traj.epoch_snapshots[3], traj.epoch_snapshots[2])
        self.assertTrue(any(s.activated for s in traj.epoch_steps(2)))
        self.assertTrue(all(not s.activated for s in traj.epoch_steps(3)))

    def test_subset_sum_replay(self):
        inst = compile_subsetsum_2d(SubsetSumQuery((1, 2), 3), 1)
        traj = train(inst)
        self.assertEqual(traj.final_w[0], Fraction(2, 3))

    def test_threshold_termination(self):
        # Each epoch moves w by exactly 1
        inst = one_dim(0, [(1, 1)], loss=LossSpec.linear(), max_epochs=10,
                       epsilon=Termination.below(Fraction(2)))
        traj = train(inst)
        self.assertEqual(traj.terminated_epoch, 1)
        inst = replace(inst, epsilon=Termination.below(Fraction(1)))
        self.assertEqual(train(inst).terminated_epoch, 10)

    def test_exact_zero_with_no_kept_samples(self):
        traj = train(one_dim(5, [(1, -1)], max_epochs=4), kept_mask=(False,))
        self.assertEqual(traj.terminated_epoch, 1)
        self.assertEqual(traj.final_w, vector([5]))
        self.assertEqual(traj.steps, ())

    def test_orders_reuse_last_permutation(self):
        inst = one_dim(-1, [(1, 1), (2, 1)], max_epochs=3)
        traj = train(inst, orders=[(1, 0)])
        self.assertEqual([s.sample_index for s in traj.epoch_steps(1)], [1, 0])
        for epoch in range(2, traj.terminated_epoch + 1):
            self.assertEqual([s.sample_index for s in traj.epoch_steps(epoch)], [1, 0])

    def test_order_errors(self):
        inst = one_dim(-1, [(1, 1), (2, 1)])
        with self.assertRaises(DimensionError):
            train(inst, orders=[(0,)])
        with self.assertRaises(DomainError):
            train(inst, orders=[(0, 0)])
        with self.assertRaises(DimensionError):
            train(inst, kept_mask=(True,))

    def test_linear_closed_form(self):
        """One epoch of linear loss adds alpha * eta * y * x per kept sample"""
        rng = make_rng(7)
        for _ in range(50):
            inst = random_linear_instance(rng)
            for kept in random_kept_masks(rng, inst.n_train, 3):
                expected = list(inst.w0)
                for s, keep in zip(inst.train, kept):
                    if keep:
                        for k in range(inst.d):
                            expected[k] = expected[k] + s.x[k] * (inst.loss.alpha * inst.eta[k] * s.y)
                self.assertEqual(train(inst, kept).final_w, tuple(expected))

    def test_deterministic(self):
        inst = compile_sat13(PHI1)
        self.assertEqual(train(inst), train(inst))


if __name__ == '__main__':
    unittest.main()
