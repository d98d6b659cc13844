"""Command line entry points: single runs, the eight-condition batch, replay, serve."""

import logging
import os
import sys
from pathlib import Path

import click

from .model import InvalidParams
from .scenario import Simulation, compute_metrics, resolve_scenario
from .service import DEFAULT_PORT, DEFAULT_SNAPSHOT_EVERY, SimSession, build_app
from .telemetry import SchemaMismatch, read_run, write_run

log = logging.getLogger("trustflock")

SEVERITIES = {"40": 0.4, "70": 0.7}


def _setup_logging() -> None:
    level = os.environ.get("SWARM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _prepare_spec(scenario, method, severity, trust_source, seed, dt, steps, no_abandon):
    try:
        spec = resolve_scenario(scenario)
    except FileNotFoundError as exc:
        raise click.UsageError(f"scenario not found: {exc}")
    except InvalidParams as exc:
        raise click.UsageError(str(exc))
    if method is not None:
        spec.method = method
    if severity is not None:
        if severity == "none":
            # Baseline oracle mode: no faults, and no scripted distrust either,
            # since the shipped schedules are the scripted response to the fault.
            spec.fault_profiles = []
            spec.trust_schedule = []
        else:
            for profile in spec.fault_profiles:
                profile.speed_cap_fraction = SEVERITIES[severity]
    if trust_source is not None:
        spec.trust.mode = trust_source
    if seed is not None:
        spec.seed = seed
    if dt is not None:
        spec.params.dt = dt
    if steps is not None:
        spec.duration = steps * spec.params.dt
    if no_abandon:
        spec.params.abandon_at_zero_trust = False
    try:
        spec.validate()
    except InvalidParams as exc:
        raise click.UsageError(str(exc))
    return spec


def _fmt_deg(value) -> str:
    return "--" if value is None else f"{value:7.1f}"


def _print_metrics(metrics: dict) -> None:
    for leg in metrics["legs"]:
        click.echo(
            f"  leg {leg['leg']} -> target {leg['target_index']}: "
            f"heading {_fmt_deg(leg['heading_deg'])} deg "
            f"(designed {_fmt_deg(leg['designed_heading_deg'])}, "
            f"error {_fmt_deg(leg['heading_error_deg'])}), "
            f"distance {leg['final_distance_m']:.2f} m"
        )
    click.echo(
        f"  final distance {metrics['final_distance_m']:.2f} m, "
        f"connectivity {metrics['connectivity_fraction']:.3f}"
    )


@click.group()
def main() -> None:
    """Trust-weighted flocking simulator."""
    _setup_logging()


scenario_option = click.option(
    "--scenario", default="1", show_default=True,
    help="Builtin scenario ('1' transit, '2' emergency) or a YAML file path.",
)
method_option = click.option(
    "--method", type=click.Choice(["avg", "trust-r"]), default=None,
    help="Control law; defaults to the scenario file's choice.",
)
severity_option = click.option(
    "--severity", type=click.Choice(["40", "70", "none"]), default=None,
    help="Speed cap of the scripted fault (percent of u_max), or disable faults.",
)
trust_source_option = click.option(
    "--trust-source", type=click.Choice(["scripted", "heuristic", "live"]), default=None,
    help="Where trust ratings come from; defaults to the scenario file's choice.",
)
seed_option = click.option("--seed", type=int, default=None, help="Run seed.")


@main.command("run")
@scenario_option
@method_option
@severity_option
@trust_source_option
@seed_option
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--dt", type=float, default=None, help="Override the step size, seconds.")
@click.option("--steps", type=int, default=None, help="Override the run length, steps.")
@click.option("--no-abandon", is_flag=True, help="Keep zero-trust robots on the comm graph.")
def cmd_run(scenario, method, severity, trust_source, seed, out, dt, steps, no_abandon) -> None:
    """Run one scenario, persist the record, and print its metrics."""
    spec = _prepare_spec(scenario, method, severity, trust_source, seed, dt, steps, no_abandon)
    record = Simulation(spec).run()
    write_run(record, out)
    click.echo(f"{spec.name} method={spec.method} seed={spec.seed} -> {out}")
    if not record.valid:
        click.echo(f"run diverged: {record.manifest['run']['divergence']}", err=True)
        sys.exit(1)
    _print_metrics(record.metrics)


@main.command("batch")
@seed_option
@severity_option
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Persist each condition's record under this directory.")
def cmd_batch(seed, severity, out) -> None:
    """Run the full scenario x severity x method matrix with a shared seed."""
    severities = [severity] if severity in SEVERITIES else ["40", "70"]
    conditions = [
        (scenario, sev, method)
        for scenario in ("1", "2")
        for sev in severities
        for method in ("avg", "trust-r")
    ]
    header = (
        f"{'condition':<26} {'designed':>9} {'heading':>9} {'error':>9} "
        f"{'final_m':>9} {'status':>8}"
    )
    click.echo(header)
    click.echo("-" * len(header))
    failures = 0
    for scenario, sev, method in conditions:
        name = f"scenario{scenario} k={SEVERITIES[sev]:.1f} {method}"
        try:
            spec = _prepare_spec(scenario, method, sev, None, seed, None, None, False)
            record = Simulation(spec).run()
            if out is not None:
                write_run(record, Path(out) / f"scenario{scenario}-k{sev}-{method}")
            if not record.valid:
                raise RuntimeError(record.manifest["run"]["divergence"])
            m = record.metrics
            click.echo(
                f"{name:<26} {_fmt_deg(m['designed_heading_deg']):>9} "
                f"{_fmt_deg(m['heading_deg']):>9} {_fmt_deg(m['heading_error_deg']):>9} "
                f"{m['final_distance_m']:>9.2f} {'ok':>8}"
            )
        except Exception as exc:  # a failed condition must not stop the batch
            failures += 1
            log.error("condition %s failed: %s", name, exc)
            click.echo(f"{name:<26} {'--':>9} {'--':>9} {'--':>9} {'--':>9} {'failed':>8}")
    if failures:
        sys.exit(1)


@main.command("replay")
@click.option("--dir", "run_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory produced by a previous run.")
def cmd_replay(run_dir) -> None:
    """Reload a persisted run, verify it, and recompute its metrics."""
    from .scenario import ScenarioSpec

    try:
        record = read_run(run_dir)
    except SchemaMismatch as exc:
        click.echo(f"replay failed: {exc}", err=True)
        sys.exit(1)
    spec = ScenarioSpec.from_dict(record.manifest["scenario"]).validate()
    click.echo(f"{spec.name} method={record.manifest['run']['method']} "
               f"seed={record.manifest['seed']} valid={record.valid}")
    if record.metrics is None:
        click.echo("record holds no metrics (aborted run)")
        return
    recomputed = compute_metrics(record, spec).to_dict()
    if recomputed != record.metrics:
        click.echo("stored metrics do not match the trajectory", err=True)
        sys.exit(1)
    _print_metrics(recomputed)
    click.echo("metrics verified against trajectory")


@main.command("serve")
@scenario_option
@method_option
@severity_option
@click.option("--trust-source", type=click.Choice(["scripted", "heuristic", "live"]),
              default="live", show_default=True)
@seed_option
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Persist the record here when the run completes.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=DEFAULT_PORT, show_default=True)
@click.option("--token", default=None, help="Supervisor token; viewers without it are read-only.")
@click.option("--pace", type=float, default=1.0, show_default=True,
              help="Wall-clock pacing multiplier; 0 runs unpaced.")
@click.option("--snapshot-every", type=int, default=DEFAULT_SNAPSHOT_EVERY, show_default=True,
              help="Ticks between snapshots.")
@click.option("--static", type=click.Path(exists=True, file_okay=False), default=None,
              help="Serve the supervisor console assets from this directory.")
def cmd_serve(scenario, method, severity, trust_source, seed, out, host, port, token,
              pace, snapshot_every, static) -> None:
    """Run a paced live session and expose the supervisor endpoints."""
    import uvicorn

    spec = _prepare_spec(scenario, method, severity, trust_source, seed, None, None, False)
    session = SimSession(Simulation(spec), pace=pace, snapshot_every=snapshot_every,
                         token=token, out_dir=out)
    app = build_app(session, static_dir=static)
    session.start()
    click.echo(f"serving {spec.name} on ws://{host}:{port}/ws (snapshot: GET /snapshot)")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, SystemExit) as exc:
        session.stop()
        click.echo(f"server stopped: {exc}", err=True)
        sys.exit(1)
    finally:
        session.stop()


if __name__ == "__main__":
    main()
