"""Command-line driver.

Exit codes: 0 success/pass, 1 bound-check failure, 2 validation failure,
3 I/O or format error, 4 guard exceeded.
"""

from __future__ import annotations

import functools
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import artifacts
from .errors import (
    DomainError,
    GuardExceeded,
    IntegrityError,
    ModelFormatError,
    ModelValidationError,
    SeqPomdpError,
)
from .exact_dp import ENUM_CAP, STATE_CAP, enumerate_sequences, exact_values
from .grid_dp import GRID_CAP, bounds_report, solve
from .model import check, model_hash
from .modelfile import read_model_spec, spec_to_model
from .policy_eval import policy_value_exact, simulate

EXIT_OK, EXIT_BOUND, EXIT_INVALID, EXIT_IO, EXIT_GUARD = 0, 1, 2, 3, 4
BOUND_SLACK = 1e-9
ORACLE_TOL = 1e-10


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return f"{value:<26.17g} {value:.6g}"
    return str(value)


def _report(pairs) -> str:
    width = max(len(k) for k, _ in pairs)
    return "\n".join(f"{k:<{width}}  {_fmt(v)}" for k, v in pairs)


def _exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            code = fn(*args, **kwargs)
        except ModelValidationError as exc:
            click.echo("invalid model:", err=True)
            for v in exc.violations:
                click.echo(f"  - {v}", err=True)
            sys.exit(EXIT_INVALID)
        except GuardExceeded as exc:
            click.echo(f"guard exceeded: {exc}", err=True)
            sys.exit(EXIT_GUARD)
        except IntegrityError as exc:
            click.echo(f"integrity error: {exc}", err=True)
            sys.exit(EXIT_IO)
        except (ModelFormatError, DomainError, SeqPomdpError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_IO)
        sys.exit(code or EXIT_OK)

    return wrapper


def _load(path):
    return spec_to_model(read_model_spec(path))


model_option = click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False), help="Model file (YAML/JSON).")
epsilon_option = click.option("--epsilon", type=float, required=True, help="Target accuracy epsilon > 0.")
spacing_option = click.option("--spacing", type=float, default=None, help="Grid spacing h (default: derived from epsilon).")
horizon_option = click.option("--horizon", type=int, default=None, help="Override the horizon n(epsilon).")
grid_cap_option = click.option("--grid-cap", type=int, default=GRID_CAP, show_default=True, help="Max anchors in the largest stage grid.")


@click.group()
def main():
    """Grid-based planning for product-sequencing POMDPs."""


@main.command("validate")
@model_option
@_exit_codes
def cmd_validate(model_path):
    """Check a model file and list every violated invariant."""
    spec = read_model_spec(model_path)
    if hasattr(spec, "n_features"):
        model = spec_to_model(spec)
        violations, warnings = [], list(model.warnings)
    else:
        violations, warnings = check(spec)
    for w in warnings:
        click.echo(f"warning: {w}")
    if violations:
        click.echo("invalid")
        for v in violations:
            click.echo(f"  - {v}")
        return EXIT_INVALID
    model = spec_to_model(spec)
    click.echo("valid")
    click.echo(_report([
        ("states", model.n_states),
        ("basis_functions", model.n_basis),
        ("products", model.n_products),
        ("beta", model.beta),
        ("r_max", model.r_max),
        ("model_hash", model_hash(model)),
    ]))
    return EXIT_OK


def _bounds_pairs(report):
    pairs = list(report.as_dict().items())
    pairs += [("note", n) for n in report.notes]
    return pairs


@main.command("bounds")
@model_option
@epsilon_option
@spacing_option
@horizon_option
@_exit_codes
def cmd_bounds(model_path, epsilon, spacing, horizon):
    """Print the structural constants and error bounds."""
    _check_epsilon(epsilon)
    model = _load(model_path)
    click.echo(_report(_bounds_pairs(bounds_report(model, epsilon, spacing, horizon=horizon))))


def _check_epsilon(epsilon):
    if not epsilon > 0:
        raise click.BadParameter("epsilon must be > 0", param_hint="--epsilon")


@main.command("solve")
@model_option
@epsilon_option
@spacing_option
@horizon_option
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Where to write the solution file.")
@grid_cap_option
@_exit_codes
def cmd_solve(model_path, epsilon, spacing, horizon, out, grid_cap):
    """Solve the grid recursion and persist value tables and policies."""
    _check_epsilon(epsilon)
    model = _load(model_path)
    sol = solve(model, epsilon, spacing, horizon=horizon, grid_cap=grid_cap)
    artifacts.save_solution(sol, out)
    first = sol.policy(sol.horizon).action(np.zeros(model.n_basis))
    pairs = _bounds_pairs(sol.bounds)
    pairs += [
        ("stages", sol.stages),
        ("allocated_anchors", sol.tables[0].size),
        ("value_at_origin", float(sol.tables[-1].evaluate(np.zeros(model.n_basis)))),
        ("first_product", model.products[first]),
        ("output", str(out)),
    ]
    click.echo(_report(pairs))


@main.command("simulate")
@model_option
@click.option("--tables", "tables_path", required=True, type=click.Path(dir_okay=False), help="Solution file from `solve`.")
@click.option("--episodes", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@horizon_option
@click.option("--attrition-mode", is_flag=True, help="Customers leave w.p. 1-beta; rewards undiscounted.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Also write the report here.")
@_exit_codes
def cmd_simulate(model_path, tables_path, episodes, seed, horizon, attrition_mode, out):
    """Monte Carlo evaluation of a solved policy."""
    if episodes < 1:
        raise click.BadParameter("episodes must be >= 1", param_hint="--episodes")
    model = _load(model_path)
    sol = artifacts.load_solution(tables_path, model)
    res = simulate(model, sol, episodes, seed, horizon=horizon, attrition=attrition_mode)
    exact = policy_value_exact(model, sol, res.horizon)
    z = abs(res.mean - exact) / res.stderr if res.stderr > 0 else (0.0 if res.mean == exact else math.inf)
    text = _report([
        ("episodes", res.episodes),
        ("seed", res.seed),
        ("horizon", res.horizon),
        ("attrition_mode", res.attrition),
        ("mean", res.mean),
        ("stderr", res.stderr),
        ("policy_value_exact", exact),
        ("z_score", z),
        ("theorem1_bound", sol.bounds.theorem1_bound),
        ("theorem2_bound", sol.bounds.theorem2_bound),
        ("corollary2_bound", sol.bounds.corollary2_bound),
    ])
    click.echo(text)
    if out:
        Path(out).write_text(text + "\n")


@main.command("oracle-compare")
@model_option
@epsilon_option
@spacing_option
@click.option("--stage", "t", type=int, required=True, help="Stage t to compare (t periods to go).")
@click.option("--tables", "tables_path", type=click.Path(dir_okay=False), default=None, help="Compare a saved solution instead of solving.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the full per-anchor table (TSV).")
@click.option("--show", type=int, default=10, show_default=True, help="Worst rows to print.")
@grid_cap_option
@click.option("--enum-cap", type=int, default=ENUM_CAP, show_default=True, help="Max sequences for the enumeration cross-check.")
@_exit_codes
def cmd_oracle_compare(model_path, epsilon, spacing, t, tables_path, out, show, grid_cap, enum_cap):
    """Check every stage-t anchor against the exact recursion."""
    _check_epsilon(epsilon)
    model = _load(model_path)
    if tables_path:
        sol = artifacts.load_solution(tables_path, model)
    else:
        sol = solve(model, epsilon, spacing, stages=t, grid_cap=grid_cap)
    if not 0 <= t <= sol.stages:
        raise DomainError(f"stage {t} not available (solved 0..{sol.stages})")
    table = sol.tables[t]
    anchors = table.anchors()
    exact, _ = exact_values(model, anchors, t, state_cap=STATE_CAP)
    approx = table.values.ravel()
    diff = np.abs(exact - approx)
    bound = sol.bounds.theorem1_bound
    ok = diff <= bound + BOUND_SLACK
    passed = bool(ok.all())

    pairs = [
        ("stage", t),
        ("h", sol.h),
        ("horizon", sol.horizon),
        ("anchors", anchors.shape[0]),
        ("max_abs_diff", float(diff.max())),
        ("theorem1_bound", bound),
        ("failing_anchors", int((~ok).sum())),
    ]
    if model.n_products**t <= enum_cap:
        enum_value, _ = enumerate_sequences(model, t, enum_cap=enum_cap)
        origin_exact = exact_values(model, np.zeros((1, model.n_basis)), t)[0][0]
        agree = abs(enum_value - origin_exact) <= ORACLE_TOL
        passed = passed and agree
        pairs += [("enumeration_value", enum_value), ("enumeration_agrees", agree)]
    else:
        pairs.append(("enumeration_value", "skipped (enum cap)"))
    pairs.append(("result", "pass" if passed else "fail"))
    click.echo(_report(pairs))

    order = np.argsort(-diff, kind="stable")[: max(show, 0)]
    header = "\t".join([f"g{l}" for l in range(model.n_basis)] + ["exact", "grid", "abs_diff", "bound", "status"])

    def row(i):
        cells = [f"{v:.17g}" for v in anchors[i]]
        cells += [f"{exact[i]:.17g}", f"{approx[i]:.17g}", f"{diff[i]:.17g}", f"{bound:.17g}", "pass" if ok[i] else "fail"]
        return "\t".join(cells)

    if len(order):
        click.echo(header)
        for i in order:
            click.echo(row(i))
    if out:
        with open(out, "w") as fh:
            fh.write(header + "\n")
            for i in range(anchors.shape[0]):
                fh.write(row(i) + "\n")
    return EXIT_OK if passed else EXIT_BOUND


if __name__ == "__main__":
    main()
