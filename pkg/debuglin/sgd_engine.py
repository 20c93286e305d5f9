#!/usr/bin/env python3
# SGD Engine - epoch-by-epoch exact SGD with full trajectory capture

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from debuglin.errors import DimensionError, DomainError
from debuglin.exact_numerics import ExactScalar, scalar_sign
from debuglin.model_core import (
    Instance,
    LossSpec,
    Sample,
    Vector,
    loss_slope,
    margin,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepRecord:
    epoch: int
    iteration: int
    sample_index: int
    margin: ExactScalar
    activated: bool
    w_after: Vector


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[StepRecord, ...]
    epoch_snapshots: tuple[Vector, ...]
    terminated_epoch: int
    final_w: Vector

    def epoch_steps(self, epoch: int) -> tuple[StepRecord, ...]:
        return tuple(s for s in self.steps if s.epoch == epoch)

    def activations(self) -> tuple[tuple[int, int, bool], ...]:
        """(epoch, sample_index, activated) per step"""
        return tuple((s.epoch, s.sample_index, s.activated) for s in self.steps)


def sgd_step(w: Vector, s: Sample, loss: LossSpec, eta: Sequence) -> tuple[Vector, bool]:
    """
    One update w_i <- w_i - eta_i * slope(m) * y * x_i

    Returns:
        tuple: (new parameter, activated flag)
    """
    if len(eta) != len(w):
        raise DimensionError(f"learning-rate arity: {len(eta)} vs {len(w)}")
    m = margin(w, s)
    slope = loss_slope(loss, m)
    if not slope or not any(s.x):
        return tuple(w), False
    g = slope * s.y
    new_w = tuple(
        wi - g * xi * ei if xi and ei else wi
        for wi, xi, ei in zip(w, s.x, eta)
    )
    return new_w, True


def run_epoch(
    w: Vector,
    kept: Sequence[Sample],
    loss: LossSpec,
    eta: Sequence,
    epoch: int = 1,
    indices: Optional[Sequence[int]] = None,
    record_steps: bool = True,
) -> tuple[Vector, list[StepRecord]]:
    """
    Fold sgd_step over the kept samples in the given order

    Args:
        indices: Training-set index of each kept sample, used in the step records
    """
    if indices is None:
        indices = range(len(kept))
    records: list[StepRecord] = []
    for k, (idx, s) in enumerate(zip(indices, kept), start=1):
        m = margin(w, s) if record_steps else None
        w, activated = sgd_step(w, s, loss, eta)
        if record_steps:
            records.append(StepRecord(epoch, k, idx, m, activated, w))
    return w, records


def epoch_order(n: int, orders: Optional[Sequence[Sequence[int]]], epoch: int) -> Sequence[int]:
    """Visiting order of training indices in the given 1-based epoch"""
    if not orders:
        return range(n)
    order = orders[min(epoch - 1, len(orders) - 1)]
    if len(order) != n:
        raise DimensionError(f"order for epoch {epoch} has {len(order)} entries, expected {n}")
    if sorted(order) != list(range(n)):
        raise DomainError(f"order for epoch {epoch} is not a permutation of 0..{n - 1}")
    return order


def _converged(inst: Instance, prev: Vector, cur: Vector) -> bool:
    if inst.epsilon.exact_zero:
        return prev == cur
    eps = inst.epsilon.threshold
    # Infinity norm compared exactly
    return all(scalar_sign(abs(c - p) - eps) < 0 for p, c in zip(prev, cur))


def train(
    inst: Instance,
    kept_mask: Optional[Sequence[bool]] = None,
    orders: Optional[Sequence[Sequence[int]]] = None,
    record_steps: bool = True,
) -> Trajectory:
    """
    Run SGD on the kept subset until the termination rule fires or max_epochs

    Args:
        inst: Instance to train
        kept_mask: One flag per training sample (None keeps everything)
        orders: Per-epoch permutations of training indices; epochs past the
            end of the list reuse the last permutation
        record_steps: Skip per-step records when False

    Returns:
        Trajectory: steps, epoch snapshots (index 0 is w0) and final parameter
    """
    n = len(inst.train)
    if kept_mask is None:
        kept_mask = (True,) * n
    if len(kept_mask) != n:
        raise DimensionError(f"mask arity {len(kept_mask)} does not match {n} training samples")
    if len(inst.w0) != inst.d:
        raise DimensionError(f"w0 has {len(inst.w0)} entries, expected {inst.d}")

    w = tuple(inst.w0)
    snapshots = [w]
    steps: list[StepRecord] = []
    epoch = 0
    while epoch < inst.max_epochs:
        epoch += 1
        order = [i for i in epoch_order(n, orders, epoch) if kept_mask[i]]
        w, records = run_epoch(
            w,
            [inst.train[i] for i in order],
            inst.loss,
            inst.eta,
            epoch=epoch,
            indices=order,
            record_steps=record_steps,
        )
        steps.extend(records)
        snapshots.append(w)
        if _converged(inst, snapshots[-2], w):
            logger.debug(f"Terminated by epsilon rule at epoch {epoch}")
            break
    else:
        logger.debug(f"Terminated by epoch cap at epoch {epoch}")

    return Trajectory(tuple(steps), tuple(snapshots), epoch, w)
