"""Plain-text writers: CSV tables, position files, JSON, all written atomically."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .config import ChargeConfiguration, to_text
from .dynamics import Trajectory


def fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    if hasattr(value, "dtype"):
        return format(float(value), ".17g") if value.dtype.kind == "f" else str(value)
    return str(value)


def atomic_write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return atomic_write_text(path, csv_text(header, rows))


def write_json(path: Path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def write_positions(path: Path, config: ChargeConfiguration) -> Path:
    return atomic_write_text(path, to_text(config))


def trajectory_table(traj: Trajectory) -> tuple[list[str], list[list[float]]]:
    """Header ``t,x1..xn`` plus ``v2..v{n-1}`` when velocities were integrated."""
    n = traj.n
    header = ["t"] + [f"x{i}" for i in range(1, n + 1)]
    if traj.velocities is not None:
        header += [f"v{i}" for i in range(2, n)]
    rows = []
    for k, t in enumerate(traj.times):
        row = [float(t)] + traj.positions[k].tolist()
        if traj.velocities is not None:
            row += traj.velocities[k, 1:-1].tolist()
        rows.append(row)
    return header, rows


def read_trajectory_csv(path: Path) -> tuple[list[str], list[list[float]]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    return header, [[float(v) for v in line.split(",")] for line in lines[1:]]
