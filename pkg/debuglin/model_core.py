#!/usr/bin/env python3
# Model Core - samples, losses, instances and their evaluation

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from debuglin.errors import DimensionError, DomainError
from debuglin.exact_numerics import ExactScalar, as_rational, scalar, scalar_sign

Vector = tuple[ExactScalar, ...]

# Violation messages reported by validate_instance
MSG_DIMENSION = "dimension mismatch"
MSG_LABEL = "label not in {-1,+1}"
MSG_ETA_NEGATIVE = "learning rate negative"
MSG_ETA_ARITY = "learning-rate arity"
MSG_ETA_IRRATIONAL = "learning rate not rational"
MSG_GAMMA = "mixed gamma"
MSG_NON_CANONICAL = "non-canonical rational"


class LossKind(str, Enum):
    LINEAR = 'linear'
    HINGE = 'hinge'
    RAMP_SUM = 'ramp_sum'


@dataclass(frozen=True)
class RampTerm:
    """coef * r_{x0,delta}(m)"""
    coef: Fraction
    x0: Fraction
    delta: Fraction


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind
    alpha: Optional[Fraction] = None
    beta: Optional[Fraction] = None
    terms: tuple[RampTerm, ...] = ()

    @classmethod
    def linear(cls, alpha=1, beta=0) -> LossSpec:
        return cls(LossKind.LINEAR, as_rational(alpha), as_rational(beta))

    @classmethod
    def hinge(cls, alpha=1, beta=0) -> LossSpec:
        return cls(LossKind.HINGE, as_rational(alpha), as_rational(beta))

    @classmethod
    def ramp_sum(cls, terms) -> LossSpec:
        return cls(LossKind.RAMP_SUM, terms=tuple(
            t if isinstance(t, RampTerm)
            else RampTerm(as_rational(t[0]), as_rational(t[1]), as_rational(t[2]))
            for t in terms
        ))

    def breakpoints(self) -> tuple[Fraction, ...]:
        """Margins where the slope may jump"""
        if self.kind == LossKind.HINGE:
            return (self.beta,)
        if self.kind == LossKind.RAMP_SUM:
            points = set()
            for t in self.terms:
                points.add(t.x0 - t.delta)
                points.add(t.x0 + t.delta)
            return tuple(sorted(points))
        return ()


@dataclass(frozen=True)
class Sample:
    x: Vector
    y: int
    name: Optional[str] = None


@dataclass(frozen=True)
class Termination:
    """Either the exact_zero rule or an infinity-norm threshold"""
    exact_zero: bool = True
    threshold: Optional[Fraction] = None

    @classmethod
    def zero(cls) -> Termination:
        return cls(True, None)

    @classmethod
    def below(cls, threshold) -> Termination:
        return cls(False, as_rational(threshold))


@dataclass(frozen=True)
class Instance:
    d: int
    gamma: Fraction
    loss: LossSpec
    w0: Vector
    eta: tuple[Fraction, ...]
    epsilon: Termination
    max_epochs: int
    train: tuple[Sample, ...]
    test: Sample

    @property
    def n_train(self) -> int:
        return len(self.train)

    def sample_label(self, index: int) -> str:
        """Gadget name when known, else the sample index"""
        name = self.train[index].name
        return name if name else str(index)


@dataclass(frozen=True)
class DebugVerdict:
    debuggable: bool
    witness_kept: Optional[tuple[bool, ...]]
    final_w: Vector
    solver: str

    @property
    def removed_indices(self) -> Optional[tuple[int, ...]]:
        if self.witness_kept is None:
            return None
        return tuple(i for i, keep in enumerate(self.witness_kept) if not keep)

    @property
    def removal_mask(self) -> Optional[int]:
        """Integer removal mask, bit i set when sample i is removed"""
        removed = self.removed_indices
        if removed is None:
            return None
        return sum(1 << i for i in removed)


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> list[str]:
        return [v.message for v in self.violations]

    def merged(self, other: ValidationReport) -> ValidationReport:
        return ValidationReport(self.violations + other.violations)


def mask_from_removal(removal: int, n: int) -> tuple[bool, ...]:
    """Kept mask for an integer removal mask over n samples"""
    return tuple(not (removal >> i) & 1 for i in range(n))


def dot(u: Sequence[ExactScalar], v: Sequence[ExactScalar]) -> ExactScalar:
    if len(u) != len(v):
        raise DimensionError(f"{MSG_DIMENSION}: {len(u)} vs {len(v)}")
    if not u:
        return ExactScalar.zero()
    total = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        total = total + a * b
    return total


def margin(w: Sequence[ExactScalar], s: Sample) -> ExactScalar:
    """y * w.x"""
    return dot(w, s.x) * s.y


def predict(w: Sequence[ExactScalar], x: Sequence[ExactScalar]) -> int:
    return 1 if scalar_sign(dot(w, x)) >= 0 else -1


def ramp(x0: Fraction, delta: Fraction, m: Fraction) -> Fraction:
    lo, hi = x0 - delta, x0 + delta
    if m <= lo:
        return Fraction(0)
    if m >= hi:
        return 2 * delta
    return m - lo


def _rational_margin(spec: LossSpec, m: ExactScalar) -> Fraction:
    if not m.is_rational:
        raise DomainError(f"{spec.kind.value} loss evaluated at irrational margin {m}")
    return m.a


def loss_value(spec: LossSpec, m) -> ExactScalar:
    m = scalar(m) if not isinstance(m, ExactScalar) else m
    if spec.kind == LossKind.LINEAR:
        return (m + spec.beta) * (-spec.alpha)
    if spec.kind == LossKind.HINGE:
        if m < spec.beta:
            return (m - spec.beta) * (-spec.alpha)
        return ExactScalar.zero(m.gamma)
    if spec.kind == LossKind.RAMP_SUM:
        q = _rational_margin(spec, m)
        total = sum((t.coef * ramp(t.x0, t.delta, q) for t in spec.terms), Fraction(0))
        return ExactScalar(total, 0, m.gamma)
    raise DomainError(f"unknown loss kind {spec.kind!r}")


def loss_slope(spec: LossSpec, m) -> ExactScalar:
    """dL/dm; zero on the closed boundaries of every active region"""
    m = scalar(m) if not isinstance(m, ExactScalar) else m
    if spec.kind == LossKind.LINEAR:
        return ExactScalar(-spec.alpha, 0, m.gamma)
    if spec.kind == LossKind.HINGE:
        if m < spec.beta:
            return ExactScalar(-spec.alpha, 0, m.gamma)
        return ExactScalar.zero(m.gamma)
    if spec.kind == LossKind.RAMP_SUM:
        q = _rational_margin(spec, m)
        total = sum(
            (t.coef for t in spec.terms if t.x0 - t.delta < q < t.x0 + t.delta),
            Fraction(0),
        )
        return ExactScalar(total, 0, m.gamma)
    raise DomainError(f"unknown loss kind {spec.kind!r}")


def _check_vector(values, d, gamma, path, out):
    if len(values) != d:
        out.append(Violation(path, f"{MSG_DIMENSION}: expected {d}, got {len(values)}"))
    for i, v in enumerate(values):
        if not isinstance(v, ExactScalar):
            out.append(Violation(f"{path}[{i}]", f"not an exact scalar: {v!r}"))
        elif v.gamma != gamma:
            out.append(Violation(f"{path}[{i}]", f"{MSG_GAMMA}: {v.gamma} vs {gamma}"))


def _check_sample(s: Sample, d, gamma, path, out):
    _check_vector(s.x, d, gamma, f"{path}.x", out)
    if s.y not in (-1, 1) or isinstance(s.y, bool):
        out.append(Violation(f"{path}.y", f"{MSG_LABEL}: {s.y!r}"))


def validate_instance(inst: Instance) -> ValidationReport:
    """Check every type invariant; all violations are reported"""
    out: list[Violation] = []
    d = inst.d
    if not isinstance(d, int) or d < 1:
        out.append(Violation('dimension', f"dimension must be a positive integer, got {d!r}"))
        d = -1
    gamma = inst.gamma
    if not isinstance(gamma, Fraction) or gamma <= 0:
        out.append(Violation('gamma', f"gamma must be a positive rational, got {gamma!r}"))

    loss = inst.loss
    if loss.kind in (LossKind.LINEAR, LossKind.HINGE):
        if loss.alpha is None or loss.alpha <= 0:
            out.append(Violation('loss.alpha', f"alpha must be positive, got {loss.alpha}"))
        if loss.beta is None:
            out.append(Violation('loss.beta', "beta missing"))
    elif loss.kind == LossKind.RAMP_SUM:
        for i, t in enumerate(loss.terms):
            if t.delta <= 0:
                out.append(Violation(f"loss.terms[{i}].delta", f"delta must be positive, got {t.delta}"))
    else:
        out.append(Violation('loss.kind', f"unknown loss kind {loss.kind!r}"))

    _check_vector(inst.w0, d, gamma, 'w0', out)

    if len(inst.eta) != d:
        out.append(Violation('eta', f"{MSG_ETA_ARITY}: expected {d}, got {len(inst.eta)}"))
    for i, e in enumerate(inst.eta):
        if not isinstance(e, Fraction):
            out.append(Violation(f"eta[{i}]", f"{MSG_ETA_IRRATIONAL}: {e!r}"))
        elif e < 0:
            out.append(Violation(f"eta[{i}]", f"{MSG_ETA_NEGATIVE}: {e}"))

    eps = inst.epsilon
    if not eps.exact_zero and (eps.threshold is None or eps.threshold <= 0):
        out.append(Violation('epsilon.threshold', f"threshold must be positive, got {eps.threshold}"))
    if not isinstance(inst.max_epochs, int) or inst.max_epochs < 1:
        out.append(Violation('max_epochs', f"max_epochs must be a positive integer, got {inst.max_epochs!r}"))

    for i, s in enumerate(inst.train):
        _check_sample(s, d, gamma, f"train[{i}]", out)
    _check_sample(inst.test, d, gamma, 'test', out)

    return ValidationReport(tuple(out))
