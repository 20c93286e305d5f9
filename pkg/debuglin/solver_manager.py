#!/usr/bin/env python3
# Solver Manager - decision procedures for training-set debuggability

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

from debuglin.errors import SolverError
from debuglin.exact_numerics import scalar_sign
from debuglin.model_core import (
    DebugVerdict,
    Instance,
    LossKind,
    dot,
    mask_from_removal,
    predict,
)
from debuglin.sgd_engine import train

logger = logging.getLogger(__name__)

DEFAULT_MAX_BRUTE = 24
STRATEGIES = ('auto', 'gta', 'gta1d', 'brute')

# Masks handed to one worker at a time
CHUNK_SIZE = 256


def _accepts(inst: Instance, kept, orders=None):
    traj = train(inst, kept, orders=orders, record_steps=False)
    return predict(traj.final_w, inst.test.x) == inst.test.y, traj.final_w


def _self_check(inst: Instance, verdict: DebugVerdict, orders=None) -> DebugVerdict:
    if verdict.debuggable:
        ok, final_w = _accepts(inst, verdict.witness_kept, orders)
        if not ok or final_w != verdict.final_w:
            logger.error(f"Witness self-check failed for solver {verdict.solver}")
            raise SolverError(f"{verdict.solver}: witness does not reproduce the verdict")
    return verdict


def _good_mask(inst: Instance) -> tuple[bool, ...]:
    """Samples whose single-step contribution strictly raises y_test * w.x_test"""
    alpha = inst.loss.alpha
    kept = []
    for s in inst.train:
        step = tuple(xi * (alpha * ei * s.y) for xi, ei in zip(s.x, inst.eta))
        kept.append(scalar_sign(dot(step, inst.test.x) * inst.test.y) > 0)
    return tuple(kept)


def gta_supported(inst: Instance) -> bool:
    return inst.loss.kind == LossKind.LINEAR and (inst.max_epochs == 1 or inst.epsilon.exact_zero)


def gta1d_supported(inst: Instance) -> bool:
    return (
        inst.loss.kind == LossKind.HINGE
        and inst.d == 1
        and inst.loss.beta >= 0
        and inst.max_epochs == 1
    )


def gta(inst: Instance) -> DebugVerdict:
    """
    Keep exactly the good samples and test the trained parameter

    Linear loss activates every sample with x != 0, so the final parameter is
    w0 plus a sum of per-sample contributions and keeping the good ones
    maximises y_test * w.x_test.
    """
    if not gta_supported(inst):
        raise SolverError("gta needs linear loss with one epoch or the exact_zero rule")
    kept = _good_mask(inst)
    ok, final_w = _accepts(inst, kept)
    logger.debug(f"gta kept {sum(kept)} of {len(kept)} samples")
    return _self_check(inst, DebugVerdict(ok, kept if ok else None, final_w, 'gta'))


def gta_then_train_1d(inst: Instance, cap: int = DEFAULT_MAX_BRUTE, threads: int = 1) -> DebugVerdict:
    """
    Good-sample selection followed by actual one-epoch hinge training

    One boundary case is not settled by the good set alone: beta = 0,
    y_test = -1, a good sample left inactive and the final score exactly 0.
    That case is decided by brute force.
    """
    if not gta1d_supported(inst):
        raise SolverError("gta1d needs hinge loss, d = 1, beta >= 0 and max_epochs = 1")
    kept = _good_mask(inst)
    traj = train(inst, kept)
    final_w = traj.final_w
    ok = predict(final_w, inst.test.x) == inst.test.y
    if not ok and inst.loss.beta == 0 and inst.test.y == -1:
        inactive = any(not step.activated for step in traj.steps)
        if inactive and scalar_sign(dot(final_w, inst.test.x)) == 0:
            logger.info("gta1d boundary case, deferring to brute force")
            fallback = brute_force_debug(inst, cap=cap, threads=threads)
            return DebugVerdict(fallback.debuggable, fallback.witness_kept, fallback.final_w, 'gta1d+brute')
    return _self_check(inst, DebugVerdict(ok, kept if ok else None, final_w, 'gta1d'))


def _scan(inst: Instance, start: int, stop: int, orders) -> Optional[int]:
    n = len(inst.train)
    for removal in range(start, stop):
        ok, _ = _accepts(inst, mask_from_removal(removal, n), orders)
        if ok:
            return removal
    return None


def brute_force_debug(
    inst: Instance,
    cap: int = DEFAULT_MAX_BRUTE,
    threads: int = 1,
    orders: Optional[Sequence[Sequence[int]]] = None,
) -> DebugVerdict:
    """
    Try removal masks in ascending integer order

    Bit i of the removal mask removes training sample i. The first accepting
    mask is returned; with several threads masks are scanned in ascending
    waves of chunks and the minimum accepting mask of the first successful
    wave wins, so the answer does not depend on the thread count.
    """
    n = len(inst.train)
    if n > cap:
        raise SolverError(f"instance has {n} training samples, brute-force cap is {cap}")
    total = 1 << n
    found: Optional[int] = None

    if threads <= 1 or total <= CHUNK_SIZE:
        found = _scan(inst, 0, total, orders)
    else:
        chunks = [(lo, min(lo + CHUNK_SIZE, total)) for lo in range(0, total, CHUNK_SIZE)]
        with ThreadPoolExecutor(max_workers=threads) as executor:
            for w in range(0, len(chunks), threads):
                wave = chunks[w:w + threads]
                results = list(executor.map(lambda c: _scan(inst, c[0], c[1], orders), wave))
                hits = [r for r in results if r is not None]
                logger.debug(f"brute wave {w // threads}: {len(hits)} accepting chunk(s)")
                if hits:
                    found = min(hits)
                    break

    if found is None:
        _, final_w = _accepts(inst, None, orders)
        return DebugVerdict(False, None, final_w, 'brute')
    kept = mask_from_removal(found, n)
    _, final_w = _accepts(inst, kept, orders)
    return _self_check(inst, DebugVerdict(True, kept, final_w, 'brute'), orders)


def pick_strategy(inst: Instance) -> str:
    if gta_supported(inst):
        return 'gta'
    if gta1d_supported(inst):
        return 'gta1d'
    return 'brute'


def solve(
    inst: Instance,
    strategy: str = 'auto',
    cap: int = DEFAULT_MAX_BRUTE,
    threads: int = 1,
) -> DebugVerdict:
    if strategy not in STRATEGIES:
        raise SolverError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    if strategy == 'auto':
        strategy = pick_strategy(inst)
    if strategy == 'gta':
        return gta(inst)
    if strategy == 'gta1d':
        return gta_then_train_1d(inst, cap=cap, threads=threads)
    return brute_force_debug(inst, cap=cap, threads=threads)


class SolverManager:
    """
    Configured front for the solvers
    """

    def __init__(self, resource_provider):
        """
        Initialize the solver manager

        Args:
            resource_provider: ResourceProvider supplying the 'solvers' section
        """
        self.logger = resource_provider.get_logger('solvers')
        config = resource_provider.get_section('solvers')
        self.max_brute = int(config.get('max_brute', DEFAULT_MAX_BRUTE))
        self.threads = max(1, int(config.get('threads', 1)))

    def solve(self, inst: Instance, strategy: str = 'auto') -> DebugVerdict:
        chosen = pick_strategy(inst) if strategy == 'auto' else strategy
        self.logger.debug(f"Solving with {chosen} (requested {strategy})")
        verdict = solve(inst, chosen, cap=self.max_brute, threads=self.threads)
        self.logger.info(
            f"Verdict {'DEBUGGABLE' if verdict.debuggable else 'NOT DEBUGGABLE'} "
            f"by {verdict.solver}"
        )
        return verdict

    def brute(self, inst: Instance, orders=None) -> DebugVerdict:
        return brute_force_debug(inst, cap=self.max_brute, threads=self.threads, orders=orders)
