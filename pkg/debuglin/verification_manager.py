#!/usr/bin/env python3
# Verification Manager - exact lemma checks and end-to-end theorem runs

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from tqdm import tqdm

from debuglin.errors import DebugLinError, DimensionError
from debuglin.exact_numerics import ExactScalar, format_rational, format_scalar, scalar_sign
from debuglin.generators import (
    all_kept_masks,
    make_rng,
    random_cnf,
    random_kept_masks,
    random_orders,
)
from debuglin.model_core import Instance, dot, predict
from debuglin.reductions import (
    MonotoneCnf,
    SatLayout,
    SubsetSumQuery,
    assignment_to_kept,
    compile_sat13,
    compile_subsetsum_1d,
    compile_subsetsum_2d,
    oracle_1in3,
    oracle_subset_sum,
)
from debuglin.sgd_engine import Trajectory, epoch_order, run_epoch, train
from debuglin.solver_manager import SolverManager

logger = logging.getLogger(__name__)

# Epochs covered by per-epoch order permutations of a 1-in-3 SAT instance
SAT_EPOCHS = 3

_GADGET_RE = re.compile(r'^(var|clause)\((\d+)\)$')


@dataclass(frozen=True)
class LemmaCheck:
    lemma: str
    epoch: int
    iteration: int
    coordinate: str
    expected: str
    observed: str
    passed: bool

    def key(self):
        return (self.lemma, self.epoch, self.iteration, self.coordinate)

    def to_record(self) -> dict:
        return {
            'lemma': self.lemma,
            'epoch': self.epoch,
            'iteration': self.iteration,
            'coordinate': self.coordinate,
            'expected': self.expected,
            'observed': self.observed,
            'passed': self.passed,
        }


@dataclass(frozen=True)
class LemmaReport:
    records: tuple[LemmaCheck, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> list[LemmaCheck]:
        return [r for r in self.records if not r.passed]


@dataclass(frozen=True)
class SubCheck:
    name: str
    passed: bool
    detail: str = ''


@dataclass(frozen=True)
class TheoremReport:
    which: str
    subject: str
    seed: Optional[int]
    checks: tuple[SubCheck, ...] = field(default_factory=tuple)
    debuggable: Optional[bool] = None
    oracle: Optional[bool] = None

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def to_records(self) -> list[dict]:
        head = {
            'type': 'theorem',
            'which': self.which,
            'subject': self.subject,
            'seed': self.seed,
            'debuggable': self.debuggable,
            'oracle': self.oracle,
            'passed': self.passed,
        }
        return [head] + [
            {'type': 'check', 'which': self.which, 'subject': self.subject,
             'name': c.name, 'passed': c.passed, 'detail': c.detail}
            for c in self.checks
        ]


def open_interval(center: Fraction, radius: Fraction) -> tuple[Fraction, Fraction]:
    return center - radius, center + radius


def _inside(value: ExactScalar, bounds: tuple[Fraction, Fraction]) -> bool:
    lo, hi = bounds
    return scalar_sign(value - lo) > 0 and scalar_sign(value - hi) < 0


def _interval_text(bounds: tuple[Fraction, Fraction]) -> str:
    return f"({format_rational(bounds[0])}, {format_rational(bounds[1])})"


class _LemmaRecorder:
    def __init__(self):
        self.records: list[LemmaCheck] = []

    def interval(self, lemma, epoch, iteration, coordinate, value, bounds):
        self.records.append(LemmaCheck(
            lemma, epoch, iteration, coordinate,
            _interval_text(bounds), format_scalar(value), _inside(value, bounds),
        ))

    def equal(self, lemma, epoch, iteration, coordinate, value, expected):
        self.records.append(LemmaCheck(
            lemma, epoch, iteration, coordinate,
            format_rational(expected), format_scalar(value), value == expected,
        ))

    def truth(self, lemma, epoch, iteration, coordinate, expected: str, observed: str, ok: bool):
        self.records.append(LemmaCheck(lemma, epoch, iteration, coordinate, expected, observed, ok))

    def report(self) -> LemmaReport:
        return LemmaReport(tuple(sorted(self.records, key=LemmaCheck.key)))


def _gadgets(inst: Instance) -> list[tuple[str, int]]:
    out = []
    for s in inst.train:
        match = _GADGET_RE.match(s.name or '')
        if not match:
            raise DebugLinError(f"not a 1-in-3 SAT gadget: {s.name!r}")
        out.append((match.group(1), int(match.group(2))))
    return out


def check_sat_lemmas(
    phi: MonotoneCnf,
    kept_mask: Optional[Sequence[bool]] = None,
    orders: Optional[Sequence[Sequence[int]]] = None,
    inst: Optional[Instance] = None,
) -> LemmaReport:
    """
    Train the compiled 1-in-3 SAT instance and check every intermediate claim

    Args:
        phi: Source formula
        kept_mask: Flags over the compiled training set (None keeps all)
        orders: Optional per-epoch permutations of the training indices
        inst: Pre-compiled instance for phi (compiled here when None)

    Returns:
        LemmaReport: records sorted by (lemma, epoch, iteration, coordinate)
    """
    if inst is None:
        inst = compile_sat13(phi)
    n_train = len(inst.train)
    if kept_mask is None:
        kept_mask = (True,) * n_train
    if len(kept_mask) != n_train:
        raise DimensionError(f"mask arity {len(kept_mask)} does not match {n_train} training samples")

    n, m = phi.n, phi.m
    lay = SatLayout(n, m)
    N = lay.N
    gadgets = _gadgets(inst)
    kept_vars = {num for (kind, num), k in zip(gadgets, kept_mask) if kind == 'var' and k}
    kept_clauses = {num for (kind, num), k in zip(gadgets, kept_mask) if kind == 'clause' and k}

    traj: Trajectory = train(inst, kept_mask, orders=orders)
    snaps = traj.epoch_snapshots

    def snapshot(e: int):
        # Training that stopped early stays at its last snapshot
        return snaps[min(e, len(snaps) - 1)]

    rec = _LemmaRecorder()
    half = Fraction(1, 2)
    c_kept = half + Fraction(1, 200 * N)

    # Clause coordinates move only on their own clause gadget
    prev = snaps[0]
    frozen_ok: dict[tuple[int, int], bool] = {}
    for step in traj.steps:
        kind, num = gadgets[step.sample_index]
        for j in range(1, m + 1):
            ok = frozen_ok.setdefault((step.epoch, j), True)
            if kind == 'clause' and num == j:
                continue
            same = prev[lay.c(j)] == step.w_after[lay.c(j)] and prev[lay.b(j)] == step.w_after[lay.b(j)]
            frozen_ok[(step.epoch, j)] = ok and same
        prev = step.w_after
    for (epoch, j), ok in frozen_ok.items():
        rec.truth('clause-frozen', epoch, 0, f"c_{j},b_{j}", 'unchanged', 'unchanged' if ok else 'changed', ok)

    # Epoch 1, per iteration and at the end
    seen: set[int] = set()
    for step in traj.epoch_steps(1):
        kind, num = gadgets[step.sample_index]
        if kind == 'var':
            seen.add(num)
        radius = Fraction(step.iteration + 1, 6000 * N * N)
        for i in range(1, n + 1):
            center = Fraction(1) if i in seen else Fraction(-1)
            rec.interval('var-epoch1-step', 1, step.iteration, f"x_{i}",
                         step.w_after[lay.x(i)], open_interval(center, radius))
    w1 = snapshot(1)
    for i in range(1, n + 1):
        center = Fraction(1) if i in kept_vars else Fraction(-1)
        rec.interval('var-epoch1', 1, 0, f"x_{i}", w1[lay.x(i)], open_interval(center, Fraction(1, 6000 * N)))
    for j in range(1, m + 1):
        if j in kept_clauses:
            rec.equal('clause-epoch1', 1, 0, f"c_{j}", w1[lay.c(j)], c_kept)
            rec.equal('clause-epoch1', 1, 0, f"b_{j}", w1[lay.b(j)], Fraction(0))
        else:
            rec.equal('clause-epoch1', 1, 0, f"c_{j}", w1[lay.c(j)], half)
            rec.equal('clause-epoch1', 1, 0, f"b_{j}", w1[lay.b(j)], Fraction(-1))

    # Epoch 2, per iteration and at the end
    clauses_seen = 0
    for step in traj.epoch_steps(2):
        if gadgets[step.sample_index][0] == 'clause':
            clauses_seen += 1
        radius = (clauses_seen + half) / (6 * N)
        for i in range(1, n + 1):
            center = Fraction(1) if i in kept_vars else Fraction(-1)
            rec.interval('var-epoch2-step', 2, step.iteration, f"x_{i}",
                         step.w_after[lay.x(i)], open_interval(center, radius))
    bound = (m + half) / (6 * N)
    rec.truth('radius-bound', 2, 0, '*', '<= 1/12', format_rational(bound), bound <= Fraction(1, 12))

    w2 = snapshot(2)
    for i in range(1, n + 1):
        center = Fraction(1) if i in kept_vars else Fraction(-1)
        rec.interval('var-epoch2', 2, 0, f"x_{i}", w2[lay.x(i)], open_interval(center, Fraction(1, 10)))
    for j, clause in enumerate(phi.clauses, start=1):
        if j not in kept_clauses:
            expected_c, expected_b = half, Fraction(-1)
        elif sum(1 for i in clause if i in kept_vars) == 1:
            expected_c, expected_b = Fraction(11, 2) + Fraction(1, 200 * N), Fraction(1000 * N)
        else:
            expected_c, expected_b = c_kept, Fraction(0)
        rec.equal('clause-epoch2', 2, 0, f"c_{j}", w2[lay.c(j)], expected_c)
        rec.equal('clause-epoch2', 2, 0, f"b_{j}", w2[lay.b(j)], expected_b)

    # Fixpoint: one more epoch from w(2) under the epoch-3 order changes nothing
    order3 = [i for i in epoch_order(n_train, orders, SAT_EPOCHS) if kept_mask[i]]
    w3, _ = run_epoch(w2, [inst.train[i] for i in order3], inst.loss, inst.eta,
                      epoch=SAT_EPOCHS, indices=order3, record_steps=False)
    fixed = w2 == w3 and traj.final_w == w2
    rec.truth('fixpoint', 3, 0, '*', 'w(2) == w(3)',
              f"w(3) {'==' if w2 == w3 else '!='} w(2), terminated at epoch {traj.terminated_epoch}", fixed)

    return rec.report()


class VerificationManager:
    """
    Runs theorem verifications and lemma sweeps
    """

    def __init__(self, resource_provider, solver_manager: Optional[SolverManager] = None):
        """
        Initialize the verification manager

        Args:
            resource_provider: ResourceProvider supplying the 'verifier' section
            solver_manager: Solver front used for brute-force runs
        """
        self.logger = resource_provider.get_logger('verifier')
        config = resource_provider.get_section('verifier')
        self.seed = int(config.get('seed', 0))
        self.orders = int(config.get('orders', 5))
        self.lemma_subsets = int(config.get('lemma_subsets', 64))
        self.progress = bool(config.get('progress', False))
        self.solvers = solver_manager or SolverManager(resource_provider)

    def _bar(self, iterable, desc: str, total: Optional[int] = None):
        return tqdm(iterable, desc=desc, total=total, disable=not self.progress, leave=False)

    # ------------------------------------------------------------------
    # 1-in-3 SAT
    # ------------------------------------------------------------------

    def verify_thm1(self, phi: MonotoneCnf, orders: Optional[int] = None, seed: Optional[int] = None) -> TheoremReport:
        orders = self.orders if orders is None else orders
        seed = self.seed if seed is None else seed
        inst = compile_sat13(phi)
        n_train = len(inst.train)
        oracle, assignment = oracle_1in3(phi)
        rng = make_rng(seed)
        order_sets: list[Optional[list]] = [None]
        order_sets += [random_orders(rng, n_train, SAT_EPOCHS) for _ in range(orders)]

        checks: list[SubCheck] = []
        if assignment is not None:
            kept = assignment_to_kept(phi, inst, assignment)
            traj = train(inst, kept)
            ok = predict(traj.final_w, inst.test.x) == inst.test.y
            checks.append(SubCheck('oracle-witness-accepts', ok, f"assignment {_bits(assignment)}"))

        debuggable = None
        for k, order in enumerate(self._bar(order_sets, 'thm1 orders')):
            label = 'default' if order is None else f"random#{k}"
            verdict = self.solvers.brute(inst, orders=order)
            debuggable = verdict.debuggable if debuggable is None else debuggable
            checks.append(SubCheck(
                f"verdict-matches-oracle[{label}]",
                verdict.debuggable == oracle,
                f"brute={_yes(verdict.debuggable)} oracle={_yes(oracle)} removal={verdict.removal_mask}",
            ))
            full = check_sat_lemmas(phi, None, order, inst=inst)
            checks.append(SubCheck(f"lemmas-full-set[{label}]", full.passed, _lemma_detail(full)))
            if verdict.debuggable:
                wit = check_sat_lemmas(phi, verdict.witness_kept, order, inst=inst)
                checks.append(SubCheck(f"lemmas-witness[{label}]", wit.passed, _lemma_detail(wit)))

        report = TheoremReport('thm1', _cnf_subject(phi), seed, tuple(checks), debuggable, oracle)
        self._log(report)
        return report

    def sweep_thm1(self, count: int, seed: Optional[int] = None, n_max: int = 5, m_max: int = 3,
                   orders: int = 0) -> list[TheoremReport]:
        """verify_thm1 on seeded random monotone formulas"""
        seed = self.seed if seed is None else seed
        rng = make_rng(seed)
        formulas = [random_cnf(rng, n_max, m_max) for _ in range(count)]
        return [
            self.verify_thm1(phi, orders=orders, seed=seed + k)
            for k, phi in enumerate(self._bar(formulas, 'thm1 sweep'))
        ]

    def lemma_sweep(self, phi: MonotoneCnf, subsets: Optional[int] = None, seed: Optional[int] = None,
                    orders: int = 2) -> list[tuple[tuple[bool, ...], Optional[list], LemmaReport]]:
        """
        check_sat_lemmas over kept masks and orders

        Every mask is checked when there are at most `subsets` of them,
        otherwise `subsets` seeded random masks. Each mask runs under the
        default order and `orders` seeded random per-epoch orders.
        """
        subsets = self.lemma_subsets if subsets is None else subsets
        seed = self.seed if seed is None else seed
        inst = compile_sat13(phi)
        n_train = len(inst.train)
        rng = make_rng(seed)
        if (1 << n_train) <= subsets:
            masks = all_kept_masks(n_train)
        else:
            masks = random_kept_masks(rng, n_train, subsets)
        order_sets: list[Optional[list]] = [None]
        order_sets += [random_orders(rng, n_train, SAT_EPOCHS) for _ in range(orders)]
        results = []
        for mask in self._bar(masks, 'lemma masks'):
            for order in order_sets:
                results.append((mask, order, check_sat_lemmas(phi, mask, order, inst=inst)))
        failed = sum(1 for *_, r in results if not r.passed)
        self.logger.info(f"Lemma sweep: {len(results)} run(s), {failed} failing")
        return results

    # ------------------------------------------------------------------
    # Subset sum
    # ------------------------------------------------------------------

    def verify_thm4(self, q: SubsetSumQuery, beta, alpha=1, eta=1) -> TheoremReport:
        inst = compile_subsetsum_2d(q, beta)
        oracle, _ = oracle_subset_sum(q)
        verdict = self.solvers.brute(inst)
        checks = [SubCheck(
            'verdict-matches-oracle',
            verdict.debuggable == oracle,
            f"brute={_yes(verdict.debuggable)} oracle={_yes(oracle)} removal={verdict.removal_mask}",
        )]
        for idx, s in enumerate(inst.train):
            value = dot(s.x, inst.test.x) * (s.y * inst.test.y)
            checks.append(SubCheck(f"sample-good[{inst.sample_label(idx)}]", scalar_sign(value) > 0,
                                   format_scalar(value)))
        if Fraction(alpha) != 1 or Fraction(eta) != 1:
            rescaled = compile_subsetsum_2d(q, beta, alpha, eta)
            checks.extend(self.check_rescaling(inst, rescaled))
        report = TheoremReport('thm4', _query_subject(q, beta), None, tuple(checks), verdict.debuggable, oracle)
        self._log(report)
        return report

    def verify_thm5(self, q: SubsetSumQuery, beta=-1, alpha_eta=1) -> TheoremReport:
        inst = compile_subsetsum_1d(q, beta)
        oracle, _ = oracle_subset_sum(q)
        verdict = self.solvers.brute(inst)
        checks = [SubCheck(
            'verdict-matches-oracle',
            verdict.debuggable == oracle,
            f"brute={_yes(verdict.debuggable)} oracle={_yes(oracle)} removal={verdict.removal_mask}",
        )]
        if Fraction(alpha_eta) != 1:
            rescaled = compile_subsetsum_1d(q, beta, alpha_eta)
            checks.extend(self.check_rescaling(inst, rescaled))
        report = TheoremReport('thm5', _query_subject(q, beta), None, tuple(checks), verdict.debuggable, oracle)
        self._log(report)
        return report

    def check_rescaling(self, canonical: Instance, rescaled: Instance) -> list[SubCheck]:
        """Verdicts, margins and activations must agree between the two compilations"""
        a = self.solvers.brute(canonical)
        b = self.solvers.brute(rescaled)
        checks = [SubCheck(
            'rescaled-verdict',
            a.debuggable == b.debuggable and a.removal_mask == b.removal_mask,
            f"canonical={_yes(a.debuggable)} rescaled={_yes(b.debuggable)}",
        )]
        ta = train(canonical)
        tb = train(rescaled)
        checks.append(SubCheck('rescaled-activations', ta.activations() == tb.activations(),
                               f"{sum(s.activated for s in ta.steps)} activation(s)"))
        same_margins = len(ta.steps) == len(tb.steps) and all(
            (sa.margin.a, sa.margin.b) == (sb.margin.a, sb.margin.b)
            for sa, sb in zip(ta.steps, tb.steps)
        )
        checks.append(SubCheck('rescaled-margins', same_margins, f"{len(ta.steps)} step(s)"))
        return checks

    def verify_theorem(self, which: str, source, **options) -> TheoremReport:
        """
        Dispatch to the theorem-specific verification

        Args:
            which: 'thm1', 'thm4' or 'thm5'
            source: MonotoneCnf for thm1, SubsetSumQuery otherwise
            options: orders/seed for thm1; beta/alpha/eta for thm4; beta/alpha_eta for thm5
        """
        if which == 'thm1':
            return self.verify_thm1(source, options.get('orders'), options.get('seed'))
        if which == 'thm4':
            return self.verify_thm4(source, options['beta'], options.get('alpha', 1), options.get('eta', 1))
        if which == 'thm5':
            return self.verify_thm5(source, options.get('beta', -1), options.get('alpha_eta', 1))
        raise DebugLinError(f"unknown theorem {which!r}")

    def _log(self, report: TheoremReport) -> None:
        if report.passed:
            self.logger.info(f"{report.which} {report.subject}: PASS")
        else:
            failed = [c.name for c in report.checks if not c.passed]
            self.logger.warning(f"{report.which} {report.subject}: FAIL ({', '.join(failed)})")


def _yes(flag: Optional[bool]) -> str:
    return 'yes' if flag else 'no'


def _bits(assignment) -> str:
    return ''.join('T' if v else 'F' for v in assignment)


def _lemma_detail(report: LemmaReport) -> str:
    failures = report.failures()
    if not failures:
        return f"{len(report.records)} record(s)"
    first = failures[0]
    return f"{len(failures)} failing, first {first.lemma} {first.coordinate}: {first.observed} not in {first.expected}"


def _cnf_subject(phi: MonotoneCnf) -> str:
    clauses = ' '.join('(' + ','.join(str(i) for i in c) + ')' for c in phi.clauses)
    return f"n={phi.n} {clauses}"


def _query_subject(q: SubsetSumQuery, beta) -> str:
    items = ','.join(str(a) for a in q.S)
    size = '' if q.k is None else f" k={q.k}"
    return f"S={{{items}}} t={q.t}{size} beta={format_rational(Fraction(beta))}"
