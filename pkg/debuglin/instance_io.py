#!/usr/bin/env python3
# Instance IO - canonical text formats for instances, trajectories and formulas

from __future__ import annotations

import json
import logging
import re
from fractions import Fraction
from typing import Any, Iterable, Optional

from debuglin.errors import FormatError, InstanceValidationError
from debuglin.exact_numerics import ExactScalar, format_rational
from debuglin.model_core import (
    MSG_NON_CANONICAL,
    Instance,
    LossKind,
    LossSpec,
    RampTerm,
    Sample,
    Termination,
    ValidationReport,
    Violation,
    validate_instance,
)
from debuglin.reductions import MonotoneCnf
from debuglin.sgd_engine import StepRecord, Trajectory

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

_RATIONAL_RE = re.compile(r'^-?(0|[1-9][0-9]*)(/[1-9][0-9]*)?$')


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------

def encode_rational(q: Fraction) -> str:
    return format_rational(q)


def encode_scalar(v: ExactScalar) -> Any:
    if v.is_rational:
        return encode_rational(v.a)
    return {'r': encode_rational(v.a), 's': encode_rational(v.b)}


def decode_rational(text: Any, path: str) -> Fraction:
    """
    Parse a canonical 'p' or 'p/q' string

    Raises:
        ValueError: with a message naming the path when the text is not canonical
    """
    if not isinstance(text, str):
        raise ValueError(f"{path}: expected a rational string, got {text!r}")
    if not _RATIONAL_RE.match(text):
        raise ValueError(f"{path}: {MSG_NON_CANONICAL} {text!r}")
    value = Fraction(text)
    if format_rational(value) != text:
        raise ValueError(f"{path}: {MSG_NON_CANONICAL} {text!r}")
    return value


def decode_scalar(obj: Any, gamma: Fraction, path: str) -> ExactScalar:
    if isinstance(obj, dict):
        if set(obj) != {'r', 's'}:
            raise ValueError(f"{path}: scalar object needs exactly the keys r and s")
        a = decode_rational(obj['r'], f"{path}.r")
        b = decode_rational(obj['s'], f"{path}.s")
        if b == 0:
            raise ValueError(f"{path}: {MSG_NON_CANONICAL} (zero sqrt coefficient)")
        value = ExactScalar(a, b, gamma)
        if value.is_rational:
            raise ValueError(f"{path}: {MSG_NON_CANONICAL} (gamma {gamma} is a square)")
        return value
    return ExactScalar(decode_rational(obj, path), 0, gamma)


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------

def _encode_sample(s: Sample, named: bool) -> dict:
    doc = {'x': [encode_scalar(v) for v in s.x], 'y': s.y}
    if named and s.name:
        doc['name'] = s.name
    return doc


def _encode_loss(loss: LossSpec) -> dict:
    if loss.kind == LossKind.RAMP_SUM:
        return {
            'kind': loss.kind.value,
            'terms': [
                {
                    'coef': encode_rational(t.coef),
                    'x0': encode_rational(t.x0),
                    'delta': encode_rational(t.delta),
                }
                for t in loss.terms
            ],
        }
    return {
        'kind': loss.kind.value,
        'alpha': encode_rational(loss.alpha),
        'beta': encode_rational(loss.beta),
    }


def serialize_instance(inst: Instance) -> str:
    """Canonical JSON document for an instance (UTF-8, LF, trailing newline)"""
    if inst.epsilon.exact_zero:
        epsilon = {'exact_zero': True}
    else:
        epsilon = {'threshold': encode_rational(inst.epsilon.threshold)}
    doc = {
        'format_version': FORMAT_VERSION,
        'dimension': inst.d,
        'gamma': encode_rational(inst.gamma),
        'loss': _encode_loss(inst.loss),
        'w0': [encode_scalar(v) for v in inst.w0],
        'eta': [encode_rational(e) for e in inst.eta],
        'epsilon': epsilon,
        'max_epochs': inst.max_epochs,
        'train': [_encode_sample(s, True) for s in inst.train],
        'test': _encode_sample(inst.test, False),
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + '\n'


class _Reader:
    """Collects value-level violations while building an instance"""

    def __init__(self, gamma: Fraction):
        self.gamma = gamma
        self.violations: list[Violation] = []

    def _fail(self, exc: ValueError, path: str):
        message = str(exc)
        # decode_* messages start with their own path
        if ': ' in message:
            where, what = message.split(': ', 1)
            self.violations.append(Violation(where, what))
        else:
            self.violations.append(Violation(path, message))

    def rational(self, obj, path: str, default=Fraction(0)) -> Fraction:
        try:
            return decode_rational(obj, path)
        except ValueError as e:
            self._fail(e, path)
            return default

    def scalar(self, obj, path: str) -> ExactScalar:
        try:
            return decode_scalar(obj, self.gamma, path)
        except ValueError as e:
            self._fail(e, path)
            return ExactScalar.zero(self.gamma)

    def vector(self, obj, path: str) -> tuple[ExactScalar, ...]:
        if not isinstance(obj, list):
            raise FormatError(f"{path}: expected a list")
        return tuple(self.scalar(v, f"{path}[{i}]") for i, v in enumerate(obj))

    def sample(self, obj, path: str) -> Sample:
        if not isinstance(obj, dict) or 'x' not in obj or 'y' not in obj:
            raise FormatError(f"{path}: expected an object with keys x and y")
        name = obj.get('name')
        if name is not None and not isinstance(name, str):
            raise FormatError(f"{path}.name: expected a string")
        y = obj['y']
        if not isinstance(y, int) or isinstance(y, bool):
            raise FormatError(f"{path}.y: expected an integer label")
        return Sample(self.vector(obj['x'], f"{path}.x"), y, name)

    def eta(self, obj, path: str) -> tuple[Fraction, ...]:
        if not isinstance(obj, list):
            raise FormatError(f"{path}: expected a list")
        out = []
        for i, e in enumerate(obj):
            if isinstance(e, dict):
                self.violations.append(Violation(f"{path}[{i}]", "learning rate not rational"))
                out.append(Fraction(0))
            else:
                out.append(self.rational(e, f"{path}[{i}]"))
        return tuple(out)


def _require(doc: dict, key: str):
    if key not in doc:
        raise FormatError(f"{key}: missing key")
    return doc[key]


def _parse_loss(reader: _Reader, obj) -> LossSpec:
    if not isinstance(obj, dict):
        raise FormatError("loss: expected an object")
    kind = obj.get('kind')
    try:
        kind = LossKind(kind)
    except ValueError:
        raise FormatError(f"loss.kind: unknown loss kind {kind!r}")
    if kind == LossKind.RAMP_SUM:
        terms = obj.get('terms')
        if not isinstance(terms, list) or not all(isinstance(t, dict) for t in terms):
            raise FormatError("loss.terms: expected a list of objects")
        return LossSpec(kind, terms=tuple(
            RampTerm(
                reader.rational(t.get('coef'), f"loss.terms[{i}].coef"),
                reader.rational(t.get('x0'), f"loss.terms[{i}].x0"),
                reader.rational(t.get('delta'), f"loss.terms[{i}].delta", Fraction(1)),
            )
            for i, t in enumerate(terms)
        ))
    return LossSpec(
        kind,
        reader.rational(obj.get('alpha'), 'loss.alpha', Fraction(1)),
        reader.rational(obj.get('beta'), 'loss.beta'),
    )


def _parse_epsilon(reader: _Reader, obj) -> Termination:
    if obj == {'exact_zero': True}:
        return Termination.zero()
    if isinstance(obj, dict) and set(obj) == {'threshold'}:
        return Termination.below(reader.rational(obj['threshold'], 'epsilon.threshold', Fraction(1)))
    raise FormatError("epsilon: expected {\"exact_zero\": true} or {\"threshold\": \"p/q\"}")


def parse_instance(text: str) -> Instance:
    """
    Parse and validate an instance document

    Raises:
        FormatError: syntax errors, missing keys, unknown format_version
        InstanceValidationError: every value-level violation at once
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise FormatError("document root must be an object")

    version = _require(doc, 'format_version')
    if version != FORMAT_VERSION:
        raise FormatError(f"format_version: unknown version {version!r}")

    gamma_reader = _Reader(Fraction(1))
    gamma = gamma_reader.rational(_require(doc, 'gamma'), 'gamma', Fraction(1))
    if gamma <= 0:
        gamma_reader.violations.append(Violation('gamma', f"gamma must be positive, got {gamma}"))
        gamma = Fraction(1)
    reader = _Reader(gamma)
    reader.violations.extend(gamma_reader.violations)

    d = _require(doc, 'dimension')
    max_epochs = _require(doc, 'max_epochs')
    if not isinstance(d, int) or not isinstance(max_epochs, int):
        raise FormatError("dimension and max_epochs must be integers")

    train_doc = _require(doc, 'train')
    if not isinstance(train_doc, list):
        raise FormatError("train: expected a list")

    inst = Instance(
        d=d,
        gamma=gamma,
        loss=_parse_loss(reader, _require(doc, 'loss')),
        w0=reader.vector(_require(doc, 'w0'), 'w0'),
        eta=reader.eta(_require(doc, 'eta'), 'eta'),
        epsilon=_parse_epsilon(reader, _require(doc, 'epsilon')),
        max_epochs=max_epochs,
        train=tuple(reader.sample(s, f"train[{i}]") for i, s in enumerate(train_doc)),
        test=reader.sample(_require(doc, 'test'), 'test'),
    )

    report = ValidationReport(tuple(reader.violations)).merged(validate_instance(inst))
    if not report.ok:
        logger.warning(f"Rejected instance with {len(report.violations)} violation(s)")
        raise InstanceValidationError(report)
    return inst


def load_instance(path: str) -> Instance:
    with open(path, 'r', encoding='utf-8') as f:
        return parse_instance(f.read())


def save_instance(inst: Instance, path: str) -> None:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(serialize_instance(inst))


# ---------------------------------------------------------------------------
# Trajectories and record streams
# ---------------------------------------------------------------------------

def dump_records(records: Iterable[dict]) -> str:
    """One JSON object per line with sorted keys"""
    return ''.join(json.dumps(r, sort_keys=True, ensure_ascii=False) + '\n' for r in records)


def serialize_trajectory(traj: Trajectory, gamma: Fraction) -> str:
    records = [
        {
            'type': 'step',
            'epoch': s.epoch,
            'iteration': s.iteration,
            'sample': s.sample_index,
            'margin': encode_scalar(s.margin),
            'activated': s.activated,
            'w_after': [encode_scalar(v) for v in s.w_after],
        }
        for s in traj.steps
    ]
    records += [
        {'type': 'snapshot', 'epoch': e, 'w': [encode_scalar(v) for v in w]}
        for e, w in enumerate(traj.epoch_snapshots)
    ]
    records.append({
        'type': 'terminated',
        'terminated_epoch': traj.terminated_epoch,
        'gamma': encode_rational(gamma),
    })
    return dump_records(records)


def parse_trajectory(text: str) -> Trajectory:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append((lineno, json.loads(line)))
        except json.JSONDecodeError as e:
            raise FormatError(f"line {lineno}: {e.msg}") from e

    tail = [r for _, r in records if r.get('type') == 'terminated']
    if len(tail) != 1:
        raise FormatError("trajectory needs exactly one terminated record")
    try:
        gamma = decode_rational(tail[0]['gamma'], 'gamma')
        steps = []
        snapshots = []
        for lineno, r in records:
            kind = r.get('type')
            where = f"line {lineno}"
            if kind == 'step':
                steps.append(StepRecord(
                    r['epoch'],
                    r['iteration'],
                    r['sample'],
                    decode_scalar(r['margin'], gamma, f"{where}.margin"),
                    bool(r['activated']),
                    tuple(decode_scalar(v, gamma, f"{where}.w_after") for v in r['w_after']),
                ))
            elif kind == 'snapshot':
                if r['epoch'] != len(snapshots):
                    raise FormatError(f"{where}: snapshot epochs out of order")
                snapshots.append(tuple(decode_scalar(v, gamma, f"{where}.w") for v in r['w']))
            elif kind != 'terminated':
                raise FormatError(f"{where}: unknown record type {kind!r}")
    except (KeyError, ValueError) as e:
        raise FormatError(f"malformed trajectory record: {e}") from e

    epoch = tail[0].get('terminated_epoch')
    if not isinstance(epoch, int) or not 0 <= epoch < len(snapshots):
        raise FormatError(f"terminated_epoch {epoch!r} has no snapshot")
    return Trajectory(tuple(steps), tuple(snapshots), epoch, snapshots[epoch])


# ---------------------------------------------------------------------------
# Source problems
# ---------------------------------------------------------------------------

def parse_monotone_cnf(text: str) -> MonotoneCnf:
    """
    Parse DIMACS-style monotone 3-CNF ('c' comments, 'p cnf n m' header)

    Raises:
        FormatError: every problem found, each with its line number
    """
    errors: list[str] = []
    header: Optional[tuple[int, int]] = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    start_line = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('c') or line.startswith('%'):
            continue
        if line.startswith('p'):
            parts = line.split()
            if header is not None:
                errors.append(f"line {lineno}: duplicate header")
                continue
            if len(parts) != 4 or parts[1] != 'cnf' or not all(p.isdigit() for p in parts[2:]):
                errors.append(f"line {lineno}: malformed header {line!r}")
                continue
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            errors.append(f"line {lineno}: clause before 'p cnf' header")
            continue
        for token in line.split():
            try:
                lit = int(token)
            except ValueError:
                errors.append(f"line {lineno}: not an integer: {token!r}")
                continue
            if not current:
                start_line = lineno
            if lit == 0:
                clauses.append(tuple(current))
                _check_clause(current, header[0], start_line, errors)
                current = []
                continue
            current.append(lit)

    if header is None:
        errors.append("missing 'p cnf n m' header")
    if current:
        errors.append(f"line {start_line}: clause not terminated by 0")
    if header is not None and len(clauses) != header[1]:
        errors.append(f"clause count mismatch: header says {header[1]}, found {len(clauses)}")
    if errors:
        logger.warning(f"Rejected CNF input: {errors[0]}")
        raise FormatError(errors)
    return MonotoneCnf(header[0], tuple(clauses))


def _check_clause(lits: list[int], n: int, lineno: int, errors: list[str]) -> None:
    if any(lit < 0 for lit in lits):
        errors.append(f"line {lineno}: negation not allowed")
    if len(lits) != 3:
        errors.append(f"line {lineno}: clause arity {len(lits)}, expected 3")
    if any(abs(lit) > n for lit in lits):
        errors.append(f"line {lineno}: variable index out of range (n = {n})")
    if len({abs(lit) for lit in lits}) != len(lits):
        errors.append(f"line {lineno}: repeated variable in clause")


def serialize_monotone_cnf(phi: MonotoneCnf) -> str:
    lines = [f"p cnf {phi.n} {phi.m}"]
    lines += [' '.join(str(i) for i in clause) + ' 0' for clause in phi.clauses]
    return '\n'.join(lines) + '\n'


def load_monotone_cnf(path: str) -> MonotoneCnf:
    with open(path, 'r', encoding='utf-8') as f:
        return parse_monotone_cnf(f.read())


def parse_item_list(text: str) -> tuple[int, ...]:
    """'1,2,3' -> (1, 2, 3)"""
    try:
        items = tuple(int(part) for part in text.split(',') if part.strip())
    except ValueError as e:
        raise FormatError(f"not a comma-separated integer list: {text!r}") from e
    if not items:
        raise FormatError("empty item list")
    return items
