"""``stablim`` command line.

Exit codes: 0 success, 1 domain error (bad snapshot, infeasible input,
unresolved symbol...), 2 usage error.  Reports are JSON with a
``schema_version`` field and are written atomically; ``--out -`` sends
them to stdout.  Logs go to stderr.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import click

from . import adequacy as adq
from .expr import ExprSyntaxError, UnboundVariableError, parse, to_text
from .grid import SnapshotError, load_snapshot
from .htscuc import HtscucError, build_htscuc_model, solve_htscuc
from .linearize import LinearizeError, SymbolTable, attach_lower, attach_upper
from .milp import Limits, LpParseError, MilpModel, ModelError, NumericalInstabilityError, export_lp, read_lp, solve_milp
from .transform import Interval, default_domain, simplify

log = logging.getLogger("stablim")

DOMAIN_ERRORS = (
    SnapshotError, ExprSyntaxError, UnboundVariableError, LinearizeError, ModelError, LpParseError,
    NumericalInstabilityError, adq.AdequacyError, HtscucError, OSError, ValueError,
)


class DomainFailure(click.ClickException):
    exit_code = 1


def write_out(path: str, text: str) -> None:
    """Write ``text`` to ``path`` atomically, or to stdout for ``-``."""
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_steps(spec: str, n_steps: int) -> list[int]:
    out = []
    for part in spec.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    bad = [t for t in out if not 0 <= t < n_steps]
    if bad:
        raise click.BadParameter(f"steps {bad} outside 0..{n_steps - 1}", param_hint="--steps")
    return sorted(set(out))


def load_domains(path: str | None) -> dict:
    if path is None:
        return {}
    raw = json.loads(Path(path).read_text())
    return {k: Interval(float(v[0]), float(v[1])) for k, v in raw.items()}


def limits_from(time_limit, node_limit, gap) -> Limits:
    for name, v in (("time limit", time_limit), ("node limit", node_limit), ("gap", gap)):
        if v is not None and v <= 0 and not (name == "gap" and v == 0):
            raise click.BadParameter(f"{name} must be positive")
    return Limits(time_limit, node_limit, 1e-6 if gap is None else gap)


def solver_options(f):
    f = click.option("--gap", type=float, default=None, help="Relative optimality gap (default 1e-6).")(f)
    f = click.option("--node-limit", type=int, default=None, help="Branch-and-bound node budget.")(f)
    f = click.option("--time-limit", "--timeout", "time_limit", type=float, default=None, help="Seconds per solve.")(f)
    return f


def _expr_arg(expr: str | None, file: str | None) -> str:
    if (expr is None) == (file is None):
        raise click.UsageError("give the expression as an argument or with --file, not both")
    return expr if expr is not None else Path(file).read_text()


@click.group()
@click.option("--log-level", default="WARNING", show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def cli(log_level):
    """Stability-limit linearization, reserve adequacy and hydro unit commitment."""
    logging.basicConfig(stream=sys.stderr, level=log_level.upper(), format="%(levelname)s %(name)s: %(message)s")


# -- limits ---------------------------------------------------------------------


@cli.group()
def limits():
    """Parse, simplify and linearize limit expressions."""


@limits.command("parse")
@click.argument("expr", required=False)
@click.option("--file", type=click.Path(exists=True, dir_okay=False))
def limits_parse(expr, file):
    """Print the canonical form of EXPR."""
    click.echo(to_text(parse(_expr_arg(expr, file))))


@limits.command("simplify")
@click.argument("expr", required=False)
@click.option("--file", type=click.Path(exists=True, dir_okay=False))
@click.option("--domains", type=click.Path(exists=True, dir_okay=False), help="JSON object: name -> [lo, hi].")
@click.option("--no-factor", is_flag=True, help="Skip common-subtree factoring.")
@click.option("--out", default="-", show_default=True)
def limits_simplify(expr, file, domains, no_factor, out):
    """Prune dominated branches and factor repeated subtrees."""
    e = parse(_expr_arg(expr, file))
    s = simplify(e, load_domains(domains), factor=not no_factor)
    doc = {
        "schema_version": 1,
        "input": to_text(e),
        "expr": to_text(s.expr),
        "definitions": [{"name": n, "expr": to_text(d)} for n, d in s.definitions],
        "report": s.report(),
    }
    write_out(out, dumps(doc))


@limits.command("linearize")
@click.argument("expr", required=False)
@click.option("--file", type=click.Path(exists=True, dir_okay=False))
@click.option("--domains", type=click.Path(exists=True, dir_okay=False), help="JSON object: name -> [lo, hi].")
@click.option("--sense", type=click.Choice(["upper", "lower"]), default="upper", show_default=True,
              help="upper: x <= EXPR, lower: x >= EXPR.")
@click.option("--name", default="lim", show_default=True, help="Constraint name used in generated rows.")
@click.option("--out", default="-", show_default=True, help="LP text destination.")
@click.option("--manifest", default=None, help="JSON manifest destination (binaries, big-M per node).")
def limits_linearize(expr, file, domains, sense, name, out, manifest):
    """Emit the MILP rows for x <= EXPR (or x >= EXPR) in LP format."""
    e = parse(_expr_arg(expr, file))
    doms = load_domains(domains)
    m = MilpModel(f"linearize_{name}")
    st = SymbolTable()
    from .expr import variables

    for v in sorted(variables(e)):
        iv = doms.get(v) or default_domain()
        st.bind(v, m.add_var(v, iv.lo, iv.hi))
    x = m.add_var("x", -1e15, 1e15)
    lin = (attach_upper if sense == "upper" else attach_lower)(m, x, e, st, name=name)
    m.set_objective(x, "max" if sense == "upper" else "min")
    write_out(out, export_lp(m))
    if manifest:
        write_out(manifest, dumps({"schema_version": 1, **lin.manifest()}))


# -- snapshot ----------------------------------------------------------------------


@cli.group()
def snapshot():
    """Grid snapshot utilities."""


@snapshot.command("validate")
@click.argument("path", type=click.Path(dir_okay=False))
def snapshot_validate(path):
    """Check a snapshot and list every problem found."""
    try:
        s = load_snapshot(path)
    except SnapshotError as exc:
        for err in exc.errors:
            click.echo(f"error: {err}", err=True)
        raise DomainFailure(f"{len(exc.errors)} problem(s) in {path}")
    click.echo(
        f"ok: {len(s.zones)} zones, {len(s.links)} links, {len(s.plants)} plants, "
        f"{len(s.generators)} generators, {s.n_steps} steps"
    )


# -- adequacy / restoration ----------------------------------------------------------


@cli.group()
def adequacy():
    """Reserve adequacy monitoring."""


@adequacy.command("run")
@click.option("--snapshot", "snap", required=True, type=click.Path(dir_okay=False))
@click.option("--reserves", default="10S,10NS,30NS", show_default=True)
@click.option("--steps", default=None, help="e.g. 0..4 or 0,2,3 (default: all).")
@click.option("--parallelism", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out", default="-", show_default=True)
@click.option("--csv", "csv_out", default=None, help="Also write margins as CSV (reserve, step, margin).")
@solver_options
def adequacy_run(snap, reserves, steps, parallelism, out, csv_out, time_limit, node_limit, gap):
    """Solve one adequacy problem per active (reserve, step)."""
    s = load_snapshot(snap)
    rs = [r.strip() for r in reserves.split(",") if r.strip()]
    ts = parse_steps(steps, s.n_steps) if steps else list(range(s.n_steps))
    reps = adq.run_monitor(s, rs, ts, parallelism, limits_from(time_limit, node_limit, gap))
    write_out(out, adq.monitor_json(s, reps))
    if csv_out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["reserve", "step", "status", "margin_MW", "required_MW"])
        for rep in reps:
            w.writerow([rep.reserve, rep.step, rep.status, rep.margin, rep.required])
        write_out(csv_out, buf.getvalue())
    for rep in reps:
        log.info("%s t=%d %s margin=%s", rep.reserve, rep.step, rep.status, rep.margin)


@cli.group()
def restore():
    """Remedial-action restoration."""


@restore.command("run")
@click.option("--snapshot", "snap", required=True, type=click.Path(dir_okay=False))
@click.option("--step", type=int, required=True)
@click.option("--reserves", default="10S,10NS,30NS", show_default=True)
@click.option("--out", default="-", show_default=True)
@solver_options
def restore_run(snap, step, reserves, out, time_limit, node_limit, gap):
    """Assess every reserve at STEP, then pick the cheapest restoring actions."""
    s = load_snapshot(snap)
    parse_steps(str(step), s.n_steps)
    lim = limits_from(time_limit, node_limit, gap)
    rs = [r.strip() for r in reserves.split(",") if r.strip() and s.reserve_active(r.strip(), step)]
    reps = adq.run_monitor(s, rs, [step], 1, lim)
    bad = [rep for rep in reps if rep.status in ("error", "infeasible", "unbounded")]
    if bad:
        raise DomainFailure("; ".join(f"{rep.reserve}: {rep.status} {rep.message}".strip() for rep in bad))
    deficits = {rep.reserve: rep.margin for rep in reps}
    if not any(m is not None and m < 0 for m in deficits.values()):
        plan = adq.RestorationPlan(step, "adequate", margins=deficits, cost=0.0, message="no reserve in deficit")
    else:
        plan = adq.restore(s, step, deficits, lim)
    doc = plan.to_json()
    doc["deficits"] = deficits
    write_out(out, dumps(doc))
    if plan.status == "unrestorable":
        raise DomainFailure(f"step {step}: no action set restores every reserve")


# -- unit commitment -------------------------------------------------------------------


@cli.group()
def huc():
    """Hydro unit commitment with transient-stability limits."""


@huc.command("run")
@click.option("--snapshot", "snap", required=True, type=click.Path(dir_okay=False))
@click.option("--horizon", type=click.IntRange(min=2), default=None, help="Steps including the initial one.")
@click.option("--out", default="-", show_default=True)
@click.option("--lp", "lp_out", default=None, help="Also export the built model in LP format.")
@solver_options
def huc_run(snap, horizon, out, lp_out, time_limit, node_limit, gap):
    """Build and solve the commitment model; write the schedule."""
    s = load_snapshot(snap)
    lim = limits_from(time_limit, node_limit, gap)
    if lp_out:
        write_out(lp_out, export_lp(build_htscuc_model(s, horizon).model))
    _, rep = solve_htscuc(s, lim, horizon)
    write_out(out, rep.dumps())
    if rep.status == "infeasible":
        raise DomainFailure("commitment model is infeasible")


# -- raw MILP ---------------------------------------------------------------------------


@cli.command("solve")
@click.argument("lp_file", type=click.Path(dir_okay=False))
@click.option("--out", default="-", show_default=True)
@solver_options
def solve_cmd(lp_file, out, time_limit, node_limit, gap):
    """Solve an LP-format MILP with the built-in branch-and-bound."""
    m = read_lp(Path(lp_file).read_text(), name=Path(lp_file).stem)
    res = solve_milp(m, limits_from(time_limit, node_limit, gap))
    write_out(out, dumps(res.to_json(m)))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="stablim", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except DOMAIN_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
