"""JSON and CSV formats for configurations, distances, reports and lattices.

Point labels in files are 0-based.  Writers go through a temporary file in
the target directory and rename on success, so a failed run never leaves a
truncated output behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .analysis import CircuitReport
from .degeneracy import DegeneracyClassSet
from .geometry import DistanceAssignment, DistanceMultiset, FeasibilityReport, PointConfiguration
from .lattice import LatticeBasis, LatticeSpectrum


class FormatError(ValueError):
    """Input file does not follow the expected schema."""


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def read_json(path) -> Any:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def _require(data: dict, key: str, where: str):
    if not isinstance(data, dict) or key not in data:
        raise FormatError(f"{where}: missing key '{key}'")
    return data[key]


# --- point configurations -------------------------------------------------


def config_to_dict(config: PointConfiguration) -> dict:
    return {"dimension": config.dimension, "points": config.points.tolist()}


def config_from_dict(data: dict, where: str = "configuration") -> PointConfiguration:
    d = _require(data, "dimension", where)
    pts = _require(data, "points", where)
    try:
        return PointConfiguration(pts, dimension=int(d))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: bad 'points' ({exc})") from exc


# --- distance assignments -------------------------------------------------


def assignment_to_dict(dists: DistanceAssignment) -> dict:
    n = dists.n
    pairs = {f"{i},{j}": float(dists.matrix[i, j]) for i in range(n) for j in range(i + 1, n)}
    return {"n": n, "distances": pairs}


def assignment_from_dict(data: dict, where: str = "distances", allow_coincident: bool = False) -> DistanceAssignment:
    n = _require(data, "n", where)
    raw = _require(data, "distances", where)
    if not isinstance(raw, dict):
        raise FormatError(f"{where}: 'distances' must map \"i,j\" to a value")
    pairs = {}
    for key, value in raw.items():
        try:
            i, j = (int(t) for t in key.split(","))
            pairs[(i, j)] = float(value)
        except (ValueError, AttributeError) as exc:
            raise FormatError(f"{where}: bad pair key '{key}'") from exc
        if not i < j:
            raise FormatError(f"{where}: pair key '{key}' must have i < j")
    try:
        return DistanceAssignment.from_pairs(int(n), pairs, allow_coincident=allow_coincident)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from exc


def assignment_to_csv(dists: DistanceAssignment) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "distance"])
    for i in range(dists.n):
        for j in range(i + 1, dists.n):
            w.writerow([i, j, repr(float(dists.matrix[i, j]))])
    return buf.getvalue()


def multiset_from_json(data: Any, where: str = "multiset") -> DistanceMultiset:
    """Accepts a bare list, ``{"multiset": [...]}``, ``{"values": [...]}`` or a distance-assignment object."""
    if isinstance(data, list):
        values = data
    elif isinstance(data, dict) and "distances" in data and "n" in data:
        return assignment_from_dict(data, where).multiset()
    elif isinstance(data, dict) and ("multiset" in data or "values" in data):
        values = data.get("multiset", data.get("values"))
    else:
        raise FormatError(f"{where}: expected a list of distances or an object with key 'multiset'")
    try:
        return DistanceMultiset(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from exc


# --- reports ----------------------------------------------------------------


def feasibility_to_dict(report: FeasibilityReport) -> dict:
    return {
        "realizable": report.realizable,
        "dimension": report.dimension,
        "failed_condition": report.failed_condition,
        "residuals": [{"condition": c, "value": v} for c, v in zip(report.residual_labels, report.residuals)],
        "eigenvalues": report.eigenvalues,
        "rank": report.rank,
        "tolerance_used": report.tolerance_used,
        "scale": report.scale,
    }


def classes_to_dict(result: DegeneracyClassSet) -> dict:
    return {
        "multiset": list(result.multiset.values),
        "dimension": result.dimension,
        "order": result.order,
        "classes": [config_to_dict(c) for c in result.classes],
        "complete": result.complete,
        "explored_fraction": result.explored_fraction,
    }


def circuits_to_dict(report: CircuitReport) -> dict:
    order, length = report.shortest
    return {
        "circuits": [{"order": o, "length": l} for o, l in report.circuits],
        "distinct": report.distinct_length_count,
        "distinct_lengths": report.distinct_lengths,
        "shortest": {"order": order, "length": length},
    }


# --- lattices ---------------------------------------------------------------


def basis_to_dict(basis: LatticeBasis) -> dict:
    return {"dimension": basis.dimension, "vectors": basis.vectors.tolist()}


def basis_from_dict(data: dict, where: str = "basis") -> LatticeBasis:
    d = int(_require(data, "dimension", where))
    vectors = _require(data, "vectors", where)
    try:
        basis = LatticeBasis(vectors)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: bad 'vectors' ({exc})") from exc
    if basis.dimension != d:
        raise FormatError(f"{where}: 'dimension' is {d} but {basis.dimension} vectors given")
    return basis


def spectrum_to_csv(spectrum: LatticeSpectrum) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["distance", "multiplicity"])
    for v, k in zip(spectrum.distances, spectrum.multiplicities):
        w.writerow([repr(float(v)), int(k)])
    return buf.getvalue()


def spectrum_from_csv(text: str, cutoff: float | None = None) -> LatticeSpectrum:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or "distance" not in rows[0] or "multiplicity" not in rows[0]:
        raise FormatError("spectrum CSV needs header 'distance,multiplicity'")
    dist = np.array([float(r["distance"]) for r in rows])
    mult = np.array([int(r["multiplicity"]) for r in rows], dtype=int)
    return LatticeSpectrum(dist, mult, float(cutoff) if cutoff is not None else float(dist.max()))


# --- plotting helpers -------------------------------------------------------


def coordinates_to_csv(configs: dict) -> str:
    """Rows ``config,point,x1..xd`` for several named configurations."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = max(c.dimension for c in configs.values())
    w.writerow(["config", "point"] + [f"x{k + 1}" for k in range(d)])
    for name, config in configs.items():
        for i, p in enumerate(config.points):
            w.writerow([name, i] + [repr(float(v)) for v in p])
    return buf.getvalue()


def family_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "a", "b", "c"])
    for x, a, b, c in rows:
        w.writerow([repr(float(x)), repr(float(a)), repr(float(b)), repr(float(c))])
    return buf.getvalue()
