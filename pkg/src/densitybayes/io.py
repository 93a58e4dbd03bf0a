"""
File formats
~~~~~~~~~~~~
Matrices are stored as JSON objects ``{"n": 2, "data": [...], "kind": ...}``
where ``data`` holds the ``n * n`` entries row-major (nested rows are also
accepted on input). Optional fields are ``"dims"`` for joint-space matrices and ``"degenerate_marginal"``
for conditionals. Unit vectors are ``{"v": [...]}``. Traces and iteration
histories are CSV with a header row.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .bayes import BayesUpdate
from .conditional import Conditional, FullConditional
from .dynamics import FlowTrace
from .em_invert import InversionResult
from .errors import CalculusError, IoError
from .gleason import Density, EventProjector, unit_vector
from .symmat import SpectralMatrix, as_spectral
from .tensor import JointDensity

KINDS = ("symmetric", "observable", "projector", "density", "joint", "conditional",
         "full_conditional")


def _kind_of(m) -> str:
    if isinstance(m, FullConditional):
        return "full_conditional"
    if isinstance(m, Conditional):
        return "conditional"
    if isinstance(m, JointDensity):
        return "joint"
    if isinstance(m, Density):
        return "density"
    if isinstance(m, EventProjector):
        return "projector"
    return "symmetric"


def matrix_to_json(m, kind: str | None = None) -> dict[str, Any]:
    s = as_spectral(m)
    out: dict[str, Any] = {
        "n": s.n,
        "kind": kind or _kind_of(m),
        "data": [float(x) for x in s.data.ravel()],
    }
    dims = getattr(m, "dims", None)
    if dims is not None:
        out["dims"] = [int(d) for d in dims]
    if isinstance(m, FullConditional):
        out["given"] = m.given
    if isinstance(m, Conditional):
        out["degenerate_marginal"] = bool(m.degenerate_marginal)
    return out


def matrix_from_json(obj: dict[str, Any]) -> SpectralMatrix:
    """Rebuild the matrix type named by ``kind`` (default ``symmetric``)."""
    try:
        n = int(obj["n"])
        data = np.asarray(obj["data"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise IoError(f"not a matrix object: {exc}") from exc
    if data.shape == (n * n,):
        data = data.reshape(n, n)
    if data.shape != (n, n):
        raise IoError(f"data has shape {data.shape}, expected ({n}, {n})")
    kind = obj.get("kind", "symmetric")
    if kind not in KINDS:
        raise IoError(f"unknown matrix kind {kind!r}")
    dims = obj.get("dims")
    if kind == "density":
        return Density(data)
    if kind == "projector":
        return EventProjector(data)
    if kind == "joint":
        if dims is None:
            raise IoError("joint matrices need 'dims'")
        return JointDensity(data, dims)
    degenerate = bool(obj.get("degenerate_marginal", False))
    if kind == "full_conditional":
        if dims is None:
            raise IoError("full conditionals need 'dims'")
        return FullConditional(data, dims, given=obj.get("given", "B"),
                               degenerate_marginal=degenerate)
    if kind == "conditional":
        return Conditional(data, degenerate_marginal=degenerate)
    return SpectralMatrix(data)


def _read_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoError(f"{path} is not valid JSON: {exc}") from exc


def write_json(path, obj: Any) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def write_csv(path, header: list[str], rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                if len(row) != len(header):
                    raise IoError(f"row of length {len(row)} under a {len(header)}-column header")
                w.writerow([_cell(x) for x in row])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def read_matrix(path) -> SpectralMatrix:
    obj = _read_json(path)
    if not isinstance(obj, dict):
        raise IoError(f"{path}: expected a JSON object")
    try:
        return matrix_from_json(obj)
    except IoError:
        raise
    except CalculusError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def write_matrix(path, m, kind: str | None = None) -> Path:
    return write_json(path, matrix_to_json(m, kind))


def read_raw_matrix(path) -> np.ndarray:
    """Square ``data`` array without symmetry checks (e.g. a skew generator)."""
    obj = _read_json(path)
    try:
        data = np.asarray(obj["data"], dtype=float)
        if data.ndim == 1:
            n = int(obj["n"])
            data = data.reshape(n, n)
    except (KeyError, TypeError, ValueError) as exc:
        raise IoError(f"{path}: not a matrix object") from exc
    if data.ndim != 2 or data.shape[0] != data.shape[1]:
        raise IoError(f"{path}: data must be square, got shape {data.shape}")
    return data


def read_unit_vector(path) -> np.ndarray:
    obj = _read_json(path)
    if not isinstance(obj, dict) or "v" not in obj:
        raise IoError(f"{path}: expected {{\"v\": [...]}}")
    return unit_vector(obj["v"])


def bayes_update_to_json(u: BayesUpdate) -> dict[str, Any]:
    return {
        "prior": matrix_to_json(u.prior),
        "likelihood": matrix_to_json(u.likelihood),
        "posterior": matrix_to_json(u.posterior),
        "evidence": float(u.evidence),
    }


def inversion_to_json(r: InversionResult) -> dict[str, Any]:
    return {
        "estimate": matrix_to_json(r.estimate),
        "iterations": r.iterations,
        "final_step_norm": _finite_or_none(r.final_step_norm),
        "converged": r.converged,
        "reconstructed_joint": None if r.reconstructed_joint is None
        else matrix_to_json(r.reconstructed_joint),
    }


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


def write_inversion_csv(path, r: InversionResult) -> Path:
    rows = [(i + 1, s, e) for i, (s, e) in enumerate(zip(r.step_norms, r.evidence_traces))]
    return write_csv(path, ["iteration", "step_norm", "evidence_trace"], rows)


def flow_header(n: int, with_overlap: bool) -> list[str]:
    cols = ["t"] + [f"d{i}{j}" if n <= 10 else f"d{i}_{j}" for i in range(n) for j in range(n)]
    cols.append("trace_drift")
    if with_overlap:
        cols.append("overlap")
    return cols


def write_flow_csv(path, trace: FlowTrace) -> Path:
    n = trace.states[0].n
    with_overlap = len(trace.overlap) == len(trace)
    rows = []
    for k, (t, state) in enumerate(zip(trace.times, trace.states)):
        row = [t, *state.data.ravel().tolist(), trace.trace_drift[k]]
        if with_overlap:
            row.append(trace.overlap[k])
        rows.append(row)
    return write_csv(path, flow_header(n, with_overlap), rows)
