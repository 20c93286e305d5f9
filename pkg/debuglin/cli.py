#!/usr/bin/env python3
# cli.py - command-line entry point for train / debug / compile / verify

from __future__ import annotations

import functools
import logging
from fractions import Fraction
from typing import Optional

import click

from debuglin.errors import DebugLinError
from debuglin.exact_numerics import format_approx, format_rational, format_scalar
from debuglin.generators import make_rng, random_order, random_orders
from debuglin.instance_io import (
    dump_records,
    load_instance,
    load_monotone_cnf,
    parse_item_list,
    save_instance,
    serialize_trajectory,
)
from debuglin.model_core import DebugVerdict, Instance
from debuglin.reductions import (
    SubsetSumQuery,
    compile_sat13,
    compile_subsetsum_1d,
    compile_subsetsum_2d,
)
from debuglin.resource_provider import ResourceProvider
from debuglin.sgd_engine import train as run_training
from debuglin.solver_manager import STRATEGIES, SolverManager
from debuglin.verification_manager import TheoremReport, VerificationManager

EXIT_INPUT_ERROR = 2
EXIT_VERIFY_FAIL = 3


class DebugLin:
    """
    Wires configuration, logging, solvers and the verifier for one CLI run
    """

    def __init__(self, config_path: str = 'config.yaml', overrides: Optional[dict] = None):
        self.resource_provider = ResourceProvider(config_path)
        if overrides:
            self.resource_provider = self.resource_provider.clone_with_custom_config(overrides)
            level = overrides.get('logging', {}).get('level')
            if level:
                self._set_level(level)
        self.config = self.resource_provider.get_config()
        self.logger = self.resource_provider.get_logger()
        self.solvers = SolverManager(self.resource_provider)
        self.verifier = VerificationManager(self.resource_provider, self.solvers)

    def _set_level(self, level: str) -> None:
        numeric = getattr(logging, level.upper(), logging.WARNING)
        logger = self.resource_provider.get_logger()
        logger.setLevel(numeric)
        for handler in logger.handlers:
            handler.setLevel(numeric)

    def with_solver_overrides(self, max_brute: Optional[int]) -> SolverManager:
        if max_brute is None:
            return self.solvers
        provider = self.resource_provider.clone_with_custom_config({'solvers': {'max_brute': max_brute}})
        return SolverManager(provider)


class RationalParam(click.ParamType):
    name = 'rational'

    def convert(self, value, param, ctx):
        if isinstance(value, Fraction):
            return value
        try:
            return Fraction(str(value))
        except (ValueError, ZeroDivisionError):
            self.fail(f"{value!r} is not a rational number (expected p or p/q)", param, ctx)


class ItemListParam(click.ParamType):
    name = 'list'

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            return parse_item_list(value)
        except DebugLinError as e:
            self.fail(str(e), param, ctx)


RATIONAL = RationalParam()
ITEMS = ItemListParam()


def handle_errors(func):
    """Map library and file errors to exit code 2 with a one-line diagnostic"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (DebugLinError, OSError) as e:
            click.echo(f"error: {e}", err=True)
            click.get_current_context().exit(EXIT_INPUT_ERROR)

    return wrapper


def format_value(v) -> str:
    text = format_scalar(v)
    if v.is_rational and v.a.denominator == 1:
        return text
    return f"{text}  (≈ {format_approx(v)})"


def echo_vector(label: str, w) -> None:
    click.echo(f"{label}:")
    for i, v in enumerate(w):
        click.echo(f"  [{i}] {format_value(v)}")


def echo_verdict(inst: Instance, verdict: DebugVerdict) -> None:
    if verdict.debuggable:
        click.echo(f"DEBUGGABLE (solver: {verdict.solver})")
        removed = [inst.sample_label(i) for i in verdict.removed_indices]
        click.echo(f"removal set: {{{', '.join(removed)}}}")
        click.echo(f"removal mask: {verdict.removal_mask}")
    else:
        click.echo(f"NOT DEBUGGABLE (solver: {verdict.solver})")
    echo_vector('final_w', verdict.final_w)


def echo_report(report: TheoremReport) -> None:
    click.echo(f"{report.which} {report.subject}")
    if report.seed is not None:
        click.echo(f"seed: {report.seed}")
    if report.debuggable is not None:
        click.echo(f"debuggable: {'yes' if report.debuggable else 'no'}")
        click.echo(f"oracle: {'yes' if report.oracle else 'no'}")
    for check in report.checks:
        status = 'PASS' if check.passed else 'FAIL'
        click.echo(f"  [{status}] {check.name}  {check.detail}".rstrip())
    click.echo('PASS' if report.passed else 'FAIL')


def finish_reports(ctx, reports: list[TheoremReport], report_path: Optional[str]) -> None:
    if report_path:
        records = [r for report in reports for r in report.to_records()]
        with open(report_path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(dump_records(records))
    if not all(r.passed for r in reports):
        ctx.exit(EXIT_VERIFY_FAIL)


@click.group()
@click.option('--config', 'config_path', default='config.yaml', show_default=True,
              help='YAML configuration file.')
@click.option('--threads', type=click.IntRange(min=1), default=None,
              help='Worker threads for brute-force search.')
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              default=None, help='Override the configured log level.')
@click.pass_context
def cli(ctx, config_path, threads, log_level):
    """Exact-arithmetic lab for debugging SGD-trained linear classifiers."""
    overrides = {}
    if threads is not None:
        overrides['solvers'] = {'threads': threads}
    if log_level is not None:
        overrides['logging'] = {'level': log_level.upper()}
    ctx.obj = DebugLin(config_path, overrides)


@cli.command()
@click.argument('instance', type=click.Path(dir_okay=False))
@click.option('--trace', type=click.Path(dir_okay=False), default=None,
              help='Write the trajectory as JSON lines.')
@click.option('--orders-seed', type=int, default=None,
              help='Train with seeded random per-epoch orders.')
@click.pass_obj
@handle_errors
def train(app: DebugLin, instance, trace, orders_seed):
    """Train an instance and print the final parameter."""
    inst = load_instance(instance)
    orders = None
    if orders_seed is not None:
        orders = random_orders(make_rng(orders_seed), len(inst.train), inst.max_epochs)
    traj = run_training(inst, orders=orders)
    click.echo(f"terminated_epoch: {traj.terminated_epoch}")
    echo_vector('final_w', traj.final_w)
    if trace:
        with open(trace, 'w', encoding='utf-8', newline='\n') as f:
            f.write(serialize_trajectory(traj, inst.gamma))


@cli.command()
@click.argument('instance', type=click.Path(dir_okay=False))
@click.option('--solver', type=click.Choice(STRATEGIES), default='auto', show_default=True)
@click.option('--max-brute', type=click.IntRange(min=0), default=None,
              help='Largest training set brute force may enumerate.')
@click.pass_obj
@handle_errors
def debug(app: DebugLin, instance, solver, max_brute):
    """Decide whether removing training samples fixes the test prediction."""
    inst = load_instance(instance)
    verdict = app.with_solver_overrides(max_brute).solve(inst, solver)
    echo_verdict(inst, verdict)


@cli.group(name="compile")
def compile_group():
    """Compile hardness instances from source problems."""


@compile_group.command('sat13')
@click.argument('cnf', type=click.Path(dir_okay=False))
@click.option('-o', '--output', required=True, type=click.Path(dir_okay=False))
@click.option('--shuffle-seed', type=int, default=None, help='Seeded permutation of the gadget order.')
@handle_errors
def compile_sat13_cmd(cnf, output, shuffle_seed):
    """Monotone 1-in-3 SAT to a ramp-loss instance."""
    phi = load_monotone_cnf(cnf)
    order = None
    if shuffle_seed is not None:
        order = random_order(make_rng(shuffle_seed), phi.n + phi.m)
    inst = compile_sat13(phi, order)
    save_instance(inst, output)
    click.echo(f"wrote {output} (d={inst.d}, {len(inst.train)} training samples)")


@compile_group.command('ss2d')
@click.option('--set', 'items', required=True, type=ITEMS)
@click.option('--target', required=True, type=int)
@click.option('--beta', required=True, type=RATIONAL)
@click.option('--alpha', default='1', type=RATIONAL, show_default=True)
@click.option('--eta', default='1', type=RATIONAL, show_default=True)
@click.option('--item-order', type=ITEMS, default=None, help='1-based permutation of the items.')
@click.option('-o', '--output', required=True, type=click.Path(dir_okay=False))
@handle_errors
def compile_ss2d_cmd(items, target, beta, alpha, eta, item_order, output):
    """Subset sum to a two-dimensional hinge instance."""
    order = [i - 1 for i in item_order] if item_order else None
    inst = compile_subsetsum_2d(SubsetSumQuery(items, target), beta, alpha, eta, item_order=order)
    save_instance(inst, output)
    click.echo(f"wrote {output} (d={inst.d}, gamma={format_rational(inst.gamma)}, "
               f"{len(inst.train)} training samples)")


@compile_group.command('ss1d')
@click.option('--set', 'items', required=True, type=ITEMS)
@click.option('--target', required=True, type=int)
@click.option('--size', required=True, type=int)
@click.option('--beta', default='-1', type=RATIONAL, show_default=True)
@click.option('--alpha-eta', default='1', type=RATIONAL, show_default=True)
@click.option('--item-order', type=ITEMS, default=None, help='1-based permutation of the items.')
@click.option('-o', '--output', required=True, type=click.Path(dir_okay=False))
@handle_errors
def compile_ss1d_cmd(items, target, size, beta, alpha_eta, item_order, output):
    """Fixed-size subset sum to a one-dimensional hinge instance."""
    order = [i - 1 for i in item_order] if item_order else None
    inst = compile_subsetsum_1d(SubsetSumQuery(items, target, size), beta, alpha_eta, item_order=order)
    save_instance(inst, output)
    click.echo(f"wrote {output} (d={inst.d}, gamma={format_rational(inst.gamma)}, "
               f"{len(inst.train)} training samples)")


@cli.group()
def verify():
    """Check reductions and lemmas end to end."""


@verify.command('thm1')
@click.argument('cnf', type=click.Path(dir_okay=False))
@click.option('--orders', type=click.IntRange(min=0), default=None, help='Random order sets besides the default.')
@click.option('--seed', type=int, default=None)
@click.option('--report', 'report_path', type=click.Path(dir_okay=False), default=None)
@click.pass_context
@handle_errors
def verify_thm1(ctx, cnf, orders, seed, report_path):
    """1-in-3 SAT reduction against the SAT oracle."""
    app: DebugLin = ctx.obj
    report = app.verifier.verify_theorem('thm1', load_monotone_cnf(cnf), orders=orders, seed=seed)
    echo_report(report)
    finish_reports(ctx, [report], report_path)


@verify.command('thm4')
@click.option('--set', 'items', required=True, type=ITEMS)
@click.option('--target', required=True, type=int)
@click.option('--beta', required=True, type=RATIONAL)
@click.option('--alpha', default='1', type=RATIONAL, show_default=True)
@click.option('--eta', default='1', type=RATIONAL, show_default=True)
@click.option('--report', 'report_path', type=click.Path(dir_okay=False), default=None)
@click.pass_context
@handle_errors
def verify_thm4(ctx, items, target, beta, alpha, eta, report_path):
    """Two-dimensional hinge reduction against the subset-sum oracle."""
    app: DebugLin = ctx.obj
    report = app.verifier.verify_theorem('thm4', SubsetSumQuery(items, target), beta=beta, alpha=alpha, eta=eta)
    echo_report(report)
    finish_reports(ctx, [report], report_path)


@verify.command('thm5')
@click.option('--set', 'items', required=True, type=ITEMS)
@click.option('--target', required=True, type=int)
@click.option('--size', required=True, type=int)
@click.option('--beta', default='-1', type=RATIONAL, show_default=True)
@click.option('--alpha-eta', default='1', type=RATIONAL, show_default=True)
@click.option('--report', 'report_path', type=click.Path(dir_okay=False), default=None)
@click.pass_context
@handle_errors
def verify_thm5(ctx, items, target, size, beta, alpha_eta, report_path):
    """One-dimensional fixed-size reduction against the subset-sum oracle."""
    app: DebugLin = ctx.obj
    report = app.verifier.verify_theorem('thm5', SubsetSumQuery(items, target, size),
                                         beta=beta, alpha_eta=alpha_eta)
    echo_report(report)
    finish_reports(ctx, [report], report_path)


@verify.command('lemmas')
@click.argument('cnf', type=click.Path(dir_okay=False))
@click.option('--subsets', type=click.IntRange(min=1), default=None,
              help='Mask budget; all masks are checked when they fit.')
@click.option('--seed', type=int, default=None)
@click.option('--orders', type=click.IntRange(min=0), default=2, show_default=True,
              help='Random per-epoch orders per mask besides the default.')
@click.option('--report', 'report_path', type=click.Path(dir_okay=False), default=None)
@click.pass_context
@handle_errors
def verify_lemmas(ctx, cnf, subsets, seed, orders, report_path):
    """Exact intermediate-value checks of the 1-in-3 SAT construction."""
    app: DebugLin = ctx.obj
    phi = load_monotone_cnf(cnf)
    results = app.verifier.lemma_sweep(phi, subsets=subsets, seed=seed, orders=orders)
    failing = [(mask, order, r) for mask, order, r in results if not r.passed]
    click.echo(f"lemmas {len(results)} run(s)")
    for mask, order, report in failing:
        first = report.failures()[0]
        kept = ''.join('1' if k else '0' for k in mask)
        click.echo(f"  [FAIL] kept={kept} order={'default' if order is None else 'random'} "
                   f"{first.lemma} {first.coordinate}: {first.observed} not in {first.expected}")
    click.echo('PASS' if not failing else 'FAIL')
    if report_path:
        records = []
        for run, (mask, order, report) in enumerate(results):
            for rec in report.records:
                records.append({'run': run, 'kept': ''.join('1' if k else '0' for k in mask),
                                'default_order': order is None, **rec.to_record()})
        with open(report_path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(dump_records(records))
    if failing:
        ctx.exit(EXIT_VERIFY_FAIL)


def main(argv=None) -> int:
    """Run the CLI and return its exit code"""
    try:
        rv = cli.main(args=argv, prog_name='debuglin', standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo('Aborted!', err=True)
        return 1
    return rv if isinstance(rv, int) else 0
