"""Run persistence: manifest, trajectory table, trust timeline, and metrics."""

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .model import FOLLOWER, LEADER

ENGINE_VERSION = "0.1.0"

MANIFEST_FILE = "manifest"
TRAJECTORY_FILE = "trajectory"
TRUST_FILE = "trust"
METRICS_FILE = "metrics"
RUN_FILES = (MANIFEST_FILE, TRAJECTORY_FILE, TRUST_FILE, METRICS_FILE)

MANIFEST_SCHEMA_VERSION = 1

TRAJECTORY_HEADER = "t,id,x,y,z,vx,vy,vz,heading,trust_level,trust_gain,role,faulty"
TRUST_HEADER = "t,id,trust_level,trust_gain"

_ROLES = (LEADER, FOLLOWER)


class SchemaMismatch(ValueError):
    """Persisted run files are missing, malformed, or internally inconsistent."""


def _fmt(x: float) -> str:
    # 17 significant digits round-trip any float64 exactly.
    return f"{float(x):.17g}"


@dataclass
class RunRecord:
    """Everything one run produced: manifest, rows, trust timeline, metrics."""

    manifest: dict
    trajectory: list = field(default_factory=list)
    trust_timeline: list = field(default_factory=list)
    metrics: dict | None = None
    valid: bool = True


def _traj_line(row) -> str:
    t, rid, x, y, z, vx, vy, vz, heading, level, gain, role, faulty = row
    return ",".join(
        [
            _fmt(t),
            str(int(rid)),
            _fmt(x),
            _fmt(y),
            _fmt(z),
            _fmt(vx),
            _fmt(vy),
            _fmt(vz),
            _fmt(heading),
            str(int(level)),
            _fmt(gain),
            role,
            "1" if faulty else "0",
        ]
    )


def _parse_traj_line(line: str, lineno: int) -> tuple:
    parts = line.split(",")
    if len(parts) != 13:
        raise SchemaMismatch(f"trajectory line {lineno}: expected 13 fields, got {len(parts)}")
    try:
        role = parts[11]
        if role not in _ROLES:
            raise ValueError(f"bad role {role!r}")
        if parts[12] not in ("0", "1"):
            raise ValueError(f"bad faulty flag {parts[12]!r}")
        return (
            float(parts[0]),
            int(parts[1]),
            float(parts[2]),
            float(parts[3]),
            float(parts[4]),
            float(parts[5]),
            float(parts[6]),
            float(parts[7]),
            float(parts[8]),
            int(parts[9]),
            float(parts[10]),
            role,
            parts[12] == "1",
        )
    except ValueError as exc:
        raise SchemaMismatch(f"trajectory line {lineno}: {exc}") from exc


def _trust_line(row) -> str:
    t, rid, level, gain = row
    return ",".join([_fmt(t), str(int(rid)), str(int(level)), _fmt(gain)])


def _parse_trust_line(line: str, lineno: int) -> tuple:
    parts = line.split(",")
    if len(parts) != 4:
        raise SchemaMismatch(f"trust line {lineno}: expected 4 fields, got {len(parts)}")
    try:
        return (float(parts[0]), int(parts[1]), int(parts[2]), float(parts[3]))
    except ValueError as exc:
        raise SchemaMismatch(f"trust line {lineno}: {exc}") from exc


def write_run(record: RunRecord, out_dir) -> dict:
    """Persist a run into `out_dir`; returns the path of each file written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in RUN_FILES}

    with open(paths[MANIFEST_FILE], "w", newline="\n") as fh:
        yaml.safe_dump(record.manifest, fh, sort_keys=False)
    with open(paths[TRAJECTORY_FILE], "w", newline="\n") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for row in record.trajectory:
            fh.write(_traj_line(row) + "\n")
    with open(paths[TRUST_FILE], "w", newline="\n") as fh:
        fh.write(TRUST_HEADER + "\n")
        for row in record.trust_timeline:
            fh.write(_trust_line(row) + "\n")
    with open(paths[METRICS_FILE], "w", newline="\n") as fh:
        yaml.safe_dump(record.metrics, fh, sort_keys=False)
    return paths


def read_run(run_dir) -> RunRecord:
    """Lossless inverse of write_run; raises SchemaMismatch on any defect."""
    base = Path(run_dir)
    for name in RUN_FILES:
        if not (base / name).is_file():
            raise SchemaMismatch(f"missing run file {name!r} in {base}")

    try:
        with open(base / MANIFEST_FILE) as fh:
            manifest = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise SchemaMismatch(f"manifest is not valid YAML: {exc}") from exc
    if not isinstance(manifest, dict):
        raise SchemaMismatch("manifest must be a mapping")
    if manifest.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise SchemaMismatch(
            f"unsupported manifest schema_version {manifest.get('schema_version')!r}"
        )
    run_info = manifest.get("run")
    if not isinstance(run_info, dict):
        raise SchemaMismatch("manifest lacks a run section")
    try:
        n_robots = int(run_info["n_robots"])
        steps_recorded = int(run_info["steps_recorded"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"manifest run section incomplete: {exc}") from exc

    trajectory = _read_table(base / TRAJECTORY_FILE, TRAJECTORY_HEADER, _parse_traj_line)
    trust_timeline = _read_table(base / TRUST_FILE, TRUST_HEADER, _parse_trust_line)

    expected = n_robots * steps_recorded
    if len(trajectory) != expected:
        raise SchemaMismatch(
            f"trajectory has {len(trajectory)} rows, manifest implies {expected}"
        )
    if len(trust_timeline) != expected:
        raise SchemaMismatch(
            f"trust timeline has {len(trust_timeline)} rows, manifest implies {expected}"
        )

    try:
        with open(base / METRICS_FILE) as fh:
            metrics = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise SchemaMismatch(f"metrics file is not valid YAML: {exc}") from exc
    if metrics is not None and not isinstance(metrics, dict):
        raise SchemaMismatch("metrics file must hold a mapping or null")

    valid = bool(manifest.get("valid", True))
    return RunRecord(
        manifest=manifest,
        trajectory=trajectory,
        trust_timeline=trust_timeline,
        metrics=metrics,
        valid=valid,
    )


def _read_table(path: Path, header: str, parse_line) -> list:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != header:
        raise SchemaMismatch(f"{path.name} header mismatch: {lines[0] if lines else '<empty>'!r}")
    return [parse_line(line, i + 2) for i, line in enumerate(lines[1:]) if line]
