"""Versioned JSON persistence for solved value tables and policies.

Layout::

    {"format": "seqpomdp-solution", "version": 1,
     "model_hash": ..., "epsilon": ..., "h": ..., "horizon": ..., "dim": K,
     "checksum": sha256 of the canonical "stages" list,
     "stages": [{"t": 0, "extent": ..., "n_axis": ..., "values": [...]},
                {"t": 1, ..., "values": [...], "policy": [...]}, ...]}

Values are flattened in anchor-index row-major order and written with
``repr`` (at most 17 significant digits), so a load reproduces them bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import IntegrityError, ModelFormatError
from .grid_dp import Solution, StagePolicy, StageValueTable, bounds_report
from .model import Model, model_hash

FORMAT = "seqpomdp-solution"
VERSION = 1


def _checksum(stages) -> str:
    blob = json.dumps(stages, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def solution_to_dict(solution: Solution) -> dict:
    stages = []
    for table in solution.tables:
        entry = {
            "t": table.t,
            "extent": table.extent,
            "n_axis": table.n_axis,
            "values": table.values.ravel().tolist(),
        }
        if table.t in solution.policies:
            entry["policy"] = solution.policies[table.t].actions.ravel().tolist()
        stages.append(entry)
    return {
        "format": FORMAT,
        "version": VERSION,
        "model_hash": solution.model_hash,
        "epsilon": solution.epsilon,
        "h": solution.h,
        "horizon": solution.horizon,
        "dim": solution.tables[0].dim,
        "bounds": solution.bounds.as_dict(),
        "checksum": _checksum(stages),
        "stages": stages,
    }


def save_solution(solution: Solution, path) -> None:
    Path(path).write_text(json.dumps(solution_to_dict(solution), separators=(",", ":")))


def load_solution(path, model: Model) -> Solution:
    """Read a solution, rejecting corrupted files and files solved for another model."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ModelFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != FORMAT:
        raise IntegrityError(f"{path} is not a {FORMAT} file")
    if data.get("version") != VERSION:
        raise IntegrityError(f"unsupported version {data.get('version')!r}")
    try:
        stages = data["stages"]
        if _checksum(stages) != data["checksum"]:
            raise IntegrityError(f"{path}: checksum mismatch, file is corrupted")
        if data["model_hash"] != model_hash(model):
            raise IntegrityError(f"{path} was solved for a different model")
        h, horizon, dim = float(data["h"]), int(data["horizon"]), int(data["dim"])
        tables, policies = [], {}
        for entry in stages:
            shape = (int(entry["n_axis"]),) * dim
            common = dict(t=int(entry["t"]), h=h, extent=float(entry["extent"]), n_axis=shape[0], dim=dim)
            tables.append(StageValueTable(**common, values=np.array(entry["values"], dtype=float).reshape(shape)))
            if "policy" in entry:
                policies[common["t"]] = StagePolicy(
                    **common, actions=np.array(entry["policy"], dtype=np.int64).reshape(shape)
                )
    except (KeyError, TypeError, ValueError) as exc:
        raise IntegrityError(f"{path}: malformed solution file: {exc}") from exc
    return Solution(
        model_hash=data["model_hash"],
        epsilon=float(data["epsilon"]),
        h=h,
        horizon=horizon,
        tables=tables,
        policies=policies,
        bounds=bounds_report(model, float(data["epsilon"]), h, horizon=horizon),
    )
