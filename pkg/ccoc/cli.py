"""
Command-Line Interface

    ccoc synthesize    --model m.json --out result.json
    ccoc simulate      --result result.json --model m.json --trials 10000
    ccoc reproduce     --example reach-avoid --out table.csv
    ccoc oracle-check  --states 3 --actions 2 --horizon 2 --instances 200

Exit codes: 0 success, 1 input error, 2 infeasible, 3 numerical failure.
"""

import functools
import json
import sys
from pathlib import Path
from typing import List, Optional

import click
from loguru import logger

from .config import settings
from .core.augment import augment
from .core.errors import (
    CcocError,
    EmptyActionSet,
    InfeasibleError,
    InfeasiblePair,
    LpFailure,
    ModelError,
    StatusMismatch,
)
from .core.mdp import SpecKind, validate_spec
from .core.model_io import load_metadata, load_model, save_model
from .exporters import get_exporter
from .grid import (
    GridConfig,
    GridGeometry,
    discretize,
    grid_error_bound,
    lift_policy,
    parse_shape,
    spec_measure,
    unicycle,
)
from .lp import SolverConfig, build_lp1, build_lp2
from .oracle import sweep
from .sim import check_consistency, rollout_continuous, rollout_discrete
from .synthesis import SynthesisConfig, SynthesisResult, mixed_cost_safety, synthesize

EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3
AGREEMENT_TOL = 1e-6
DUMP_TRAJECTORIES = 10

LOG_LEVELS = click.Choice(["TRACE", "DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False)


def setup_logging(level: str = settings.LOG_LEVEL, log_file: Optional[Path] = None):
    """Configure loguru sinks: colored stderr plus a plain log file."""
    log_file = log_file or settings.log_file
    logger.remove()
    logger.add(
        sys.stderr,
        level=level.upper(),
        format="<level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>",
    )
    log_file.parent.mkdir(parents=True, exist_ok=True)
    logger.add(log_file, level=level.upper(), format=settings.LOG_FORMAT)
    logger.debug("Logging initialized")


def handle_errors(func):
    """Map library errors to the exit-code contract."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except InfeasibleError as exc:
            click.echo(
                f"Infeasible: alpha={exc.alpha:.6f}, max achievable safety {exc.max_safety:.6f}",
                err=True,
            )
            sys.exit(EXIT_INFEASIBLE)
        except (LpFailure, InfeasiblePair, EmptyActionSet, StatusMismatch) as exc:
            logger.error(f"Numerical failure: {exc}")
            click.echo(f"Numerical failure: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL)
        except (ModelError, OSError, json.JSONDecodeError, KeyError) as exc:
            logger.error(f"Input error: {exc}")
            click.echo(f"Error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
        except CcocError as exc:
            click.echo(f"Error: {exc}", err=True)
            sys.exit(EXIT_INPUT)

    return wrapper


def common_options(func):
    func = click.option(
        "--log-level", type=LOG_LEVELS, default=settings.LOG_LEVEL, show_default=True,
        help="Logging verbosity.",
    )(func)
    func = click.option(
        "--seed", type=int, default=settings.SEED, show_default=True,
        help="Random seed (defaults to CCOC_SEED).",
    )(func)
    return func


def _synthesis_config(lambda_max: Optional[float], via_dp: bool, backend: Optional[str]) -> SynthesisConfig:
    solver = SolverConfig.from_settings(**({"backend": backend} if backend else {}))
    return SynthesisConfig.from_settings(lambda_max=lambda_max, via_dp=via_dp, solver=solver)


def _export(export_type: str, payload, path: Path, **metadata) -> None:
    """Write one payload through the named exporter; a rejected payload is an input error."""
    exporter = get_exporter(export_type)
    if metadata:
        exporter.set_metadata(**metadata)
    exporter.export(payload, path)
    info = exporter.get_export_info()
    if not info["success"]:
        raise ModelError(f"{export_type} export to {path} failed: " + "; ".join(info["errors"]))
    for warning in info["warnings"]:
        logger.warning(warning)


def _write_result(result: SynthesisResult, out: Path, **metadata) -> None:
    _export("json", result, out, **metadata)


def _dump_lps(m, spec, result: SynthesisResult, cfg: SynthesisConfig, directory: Path) -> None:
    am = augment(m, validate_spec(m, spec))
    programs = {
        "lp1.lp": build_lp1(am, spec.alpha, cfg.lambda_max).program,
        "lp2.lp": build_lp2(am, spec.alpha, result.lambda_star, cfg.nu_weight).program,
    }
    for name, program in programs.items():
        _export("lp", program, directory / name)


@click.group()
@click.version_option(settings.APP_VERSION, prog_name=settings.APP_NAME)
@click.option("--threads", type=click.IntRange(min=1), default=settings.THREAD_POOL_SIZE, show_default=True,
              help="Worker threads for gridding and oracle sweeps (CCOC_THREADS).")
@click.pass_context
def cli(ctx, threads):
    """Optimal control of finite MDPs under a joint chance constraint."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads


def _threads(override: Optional[int]) -> int:
    """A command's own --threads, else the group's."""
    if override is not None:
        return override
    obj = click.get_current_context().obj or {}
    return obj.get("threads", settings.THREAD_POOL_SIZE)


@cli.command("synthesize")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help="Model JSON document.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=Path("result.json"),
              show_default=True, help="Result JSON path.")
@click.option("--via-dp", is_flag=True, help="Take the lambda* value tables from the DP instead of LP2.")
@click.option("--lambda-max", type=float, default=None, help="Upper bound on lambda (CCOC_LAMBDA_MAX).")
@click.option("--backend", type=click.Choice(["auto", "simplex", "highs"]), default=None,
              help="LP backend (CCOC_LP_BACKEND).")
@click.option("--dump-lp", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory receiving lp1.lp and lp2.lp.")
@common_options
@handle_errors
def synthesize_cmd(model_path, out, via_dp, lambda_max, backend, dump_lp, seed, log_level):
    """
    Synthesize the optimal mixed policy of a model.

    The result JSON holds: kind, alpha, lambda_star, lp1_objective, p_v,
    v_c, v_v, cost_c, cost_v, mixed_cost, mixed_safety, max_safety,
    safest_cost; policies.pi_c_lambda / pi_v_lambda (the lambda-optimal
    pair) and pi_c / pi_v (unconstrained cheapest and safest), each
    {cost, safety, actions[k][augmented state]}; tables.lp1 / lp2 as
    J[k][augmented state]; diagnostics (iterations, backends, dual gap,
    lambda_at_cap, timings).
    """
    setup_logging(log_level)
    m, spec = load_model(model_path.read_bytes())
    cfg = _synthesis_config(lambda_max, via_dp, backend)
    result = synthesize(m, spec, cfg)
    _write_result(result, out, model=str(model_path), seed=seed)
    if dump_lp is not None:
        _dump_lps(m, spec, result, cfg, dump_lp)

    cost, safety = mixed_cost_safety(result)
    click.echo(
        f"lambda*={result.lambda_star:.9g} p_v={result.p_v:.6f} "
        f"mixed cost={cost:.6f} safety={100 * safety:.4f}%"
    )


def _table_row(policy: str, setting: str, cost: float, safety: float) -> dict:
    return {"policy": policy, "setting": setting, "cost": cost, "safety_pct": 100.0 * safety}


def _echo_rows(rows: List[dict]) -> None:
    for row in rows:
        click.echo(f"{row['policy']:<10} {row['setting']:<7} ({row['cost']:.2f}, {row['safety_pct']:.2f})")


def _write_trajectories(report, path: Path) -> None:
    if report.trajectories is None:
        return
    _export("trajectory", report.trajectories, path)


@cli.command("simulate")
@click.option("--result", "result_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="Result JSON from synthesize.")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="Model JSON the result was computed for.")
@click.option("--trials", type=click.IntRange(min=1), default=10_000, show_default=True)
@click.option("--continuous", is_flag=True,
              help="Also roll out on the continuous unicycle named in the model's grid block.")
@click.option("--position-var", type=float, nargs=2, default=(1.0, 1.0), show_default=True)
@click.option("--heading-var", type=float, default=0.2, show_default=True)
@click.option("--dump-traj", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Trajectory CSV of the first continuous rollouts.")
@common_options
@handle_errors
def simulate_cmd(result_path, model_path, trials, continuous, position_var, heading_var, dump_traj, seed, log_level):
    """Monte-Carlo estimate of the mixed policy's cost and safety."""
    setup_logging(log_level)
    text = model_path.read_bytes()
    m, spec = load_model(text)
    result = SynthesisResult.from_dict(json.loads(result_path.read_text(encoding="utf-8")))
    am = augment(m, spec)

    report = rollout_discrete(am, result.mixed, trials, seed)
    check_consistency(report, mixed_cost_safety(result)[1])
    rows = [_table_row("pi_mix", "discr.", report.mean_cost, report.success_rate)]

    if continuous:
        metadata = load_metadata(text)
        if not metadata:
            raise ModelError("--continuous needs a model with a 'grid' metadata block")
        example = str(metadata.get("system", "unicycle-invariance")).replace("unicycle-", "")
        system = unicycle(example, tuple(position_var), heading_var, alpha=spec.alpha)
        geometry = GridGeometry.from_metadata(metadata)
        controller = lift_policy(geometry, result.mixed, spec.kind)
        record = DUMP_TRAJECTORIES if dump_traj else 0
        cont = rollout_continuous(system, controller, trials, seed, metadata.get("exterior", "absorb"), record)
        rows.append(_table_row("pi_mix", "cont.", cont.mean_cost, cont.success_rate))
        if dump_traj:
            _write_trajectories(cont, dump_traj)

    _echo_rows(rows)


@cli.command("reproduce")
@click.option("--example", type=click.Choice(["invariance", "reachability", "reach-avoid"]), default="invariance",
              show_default=True)
@click.option("--grid", "grid_shape", default="11x11", show_default=True, help="State cells per dimension.")
@click.option("--actions", "action_shape", default="3x4", show_default=True, help="Action points per dimension.")
@click.option("--mc", type=click.IntRange(min=1), default=400, show_default=True,
              help="Monte-Carlo samples per (cell, action).")
@click.option("--horizon", type=click.IntRange(min=1), default=15, show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=10_000, show_default=True)
@click.option("--alpha", type=float, default=None, help="Override the example's alpha.")
@click.option("--exterior", type=click.Choice(["absorb", "clamp"]), default="absorb", show_default=True)
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Gridding worker threads.")
@click.option("--backend", type=click.Choice(["auto", "simplex", "highs"]), default=None)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=Path("table.csv"),
              show_default=True, help="Summary table CSV.")
@click.option("--model-out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the gridded model JSON here.")
@click.option("--result-out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the synthesis result JSON here.")
@click.option("--dump-traj", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Trajectory CSV of the first mixed-policy continuous rollouts.")
@click.option("--dump-all", is_flag=True, help="Dump every trajectory instead of the first ten.")
@common_options
@handle_errors
def reproduce_cmd(example, grid_shape, action_shape, mc, horizon, trials, alpha, exterior, threads, backend,
                  out, model_out, result_out, dump_traj, dump_all, seed, log_level):
    """
    Grid the unicycle, synthesize, and roll every policy out.

    The CSV has columns policy,setting,cost,safety_pct with rows for
    pi_v, pi_c, pi_v_lambda, pi_c_lambda and pi_mix, each on the gridded
    model (discr., exact) and on the continuous system (cont., sampled).
    """
    setup_logging(log_level)
    system = unicycle(example, alpha=alpha)
    config = GridConfig(
        cells=parse_shape(grid_shape),
        action_cells=parse_shape(action_shape),
        samples=mc,
        seed=seed,
        horizon=horizon,
        exterior=exterior,
        threads=_threads(threads),
    )
    gm = discretize(system, config)
    if model_out is not None:
        model_out.parent.mkdir(parents=True, exist_ok=True)
        model_out.write_bytes(save_model(gm.mdp, gm.spec, gm.metadata()))

    cfg = _synthesis_config(None, False, backend)
    result = synthesize(gm.mdp, gm.spec, cfg)
    if result_out is not None:
        _write_result(result, result_out, example=example, seed=seed)

    gamma = spec_measure(gm)
    logger.info(
        f"Gridding bound per unit density Lipschitz constant: "
        f"{grid_error_bound(horizon, gamma, 1.0, gm.geometry.delta):.4f} (Delta={gm.geometry.delta:.4f})"
    )

    policies = [
        ("pi_v", result.safest),
        ("pi_c", result.cheapest),
        ("pi_v_lambda", result.pi_v),
        ("pi_c_lambda", result.pi_c),
    ]
    rows = []
    for name, report in policies:
        rows.append(_table_row(name, "discr.", report.cost, report.safety))
        cont = rollout_continuous(system, lift_policy(gm.geometry, report.policy, system.kind), trials, seed, exterior)
        rows.append(_table_row(name, "cont.", cont.mean_cost, cont.success_rate))

    cost, safety = mixed_cost_safety(result)
    rows.append(_table_row("pi_mix", "discr.", cost, safety))
    record = (-1 if dump_all else DUMP_TRAJECTORIES) if dump_traj else 0
    mixed = rollout_continuous(system, lift_policy(gm.geometry, result.mixed, system.kind), trials, seed, exterior, record)
    rows.append(_table_row("pi_mix", "cont.", mixed.mean_cost, mixed.success_rate))
    if dump_traj:
        _write_trajectories(mixed, dump_traj)

    _export("table", rows, out, example=example, seed=seed, alpha=system.alpha, p_v=result.p_v)
    _echo_rows(rows)
    click.echo(f"alpha={system.alpha} lambda*={result.lambda_star:.6g} p_v={result.p_v:.6f}")


@cli.command("oracle-check")
@click.option("--states", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--actions", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--horizon", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--instances", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--kind", "kinds", type=click.Choice([k.value for k in SpecKind]), multiple=True,
              help="Restrict to these specification kinds (default: all).")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Instances checked in parallel.")
@common_options
@handle_errors
def oracle_check_cmd(states, actions, horizon, instances, kinds, threads, seed, log_level):
    """
    Compare synthesis against brute-force enumeration on random instances.

    Exits 0 iff every instance agrees within 1e-6 in cost and safety.
    """
    setup_logging(log_level)
    selected = tuple(SpecKind.parse(k) for k in kinds) or None
    records = sweep(states, actions, horizon, instances, seed, selected, threads=_threads(threads))
    worst_cost = max(r["cost_gap"] for r in records)
    worst_safety = max(r["safety_gap"] for r in records)
    failures = [r for r in records if r["cost_gap"] > AGREEMENT_TOL or r["safety_gap"] > AGREEMENT_TOL]
    click.echo(
        f"{len(records)} instances: worst cost gap {worst_cost:.3e}, "
        f"worst safety gap {worst_safety:.3e}, {len(failures)} disagreements"
    )
    for record in failures:
        logger.error(f"Disagreement: {record}")
    if failures:
        sys.exit(EXIT_INPUT)


def main():
    cli(prog_name=settings.APP_NAME)


if __name__ == "__main__":
    main()
