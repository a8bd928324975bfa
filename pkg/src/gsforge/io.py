"""Reports, field dumps and output manifests.

Every check produces a :class:`Report` whose JSON form has the fixed keys
``check``, ``inputs_hash``, ``metrics`` and ``flags``. Keys are sorted and
floats are written with ``repr`` precision, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core.grid import PolarGrid, RZGrid

__all__ = ["Report", "inputs_hash", "to_jsonable", "dump_json", "field_csv", "write_manifest",
           "save_field", "MANIFEST_VERSION"]

MANIFEST_VERSION = "v1"


def to_jsonable(obj):
    """Convert numpy scalars/arrays and objects with ``to_json`` into plain JSON types.

    Non-finite floats become strings (``"nan"``, ``"inf"``) so the output is
    strict JSON.
    """
    if hasattr(obj, "to_json") and not isinstance(obj, type):
        return to_jsonable(obj.to_json())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def _canonical(obj):
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))


def inputs_hash(inputs):
    """sha256 of the canonical JSON form of ``inputs``."""
    return hashlib.sha256(_canonical(inputs).encode()).hexdigest()


@dataclass
class Report:
    """Outcome of one check: scalar metrics, boolean flags and the inputs it ran on.

    Item access looks in ``metrics`` first, then ``flags``.
    """

    check: str
    metrics: dict
    flags: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, key):
        if key in self.metrics:
            return self.metrics[key]
        if key in self.flags:
            return self.flags[key]
        return self.extra[key]

    def __contains__(self, key):
        return key in self.metrics or key in self.flags or key in self.extra

    @property
    def passed(self):
        """True when every flag is truthy (vacuously true without flags)."""
        return all(bool(v) for v in self.flags.values())

    def to_json(self):
        return {
            "check": self.check,
            "inputs_hash": inputs_hash(self.inputs),
            "metrics": to_jsonable(self.metrics),
            "flags": to_jsonable(self.flags),
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"


def dump_json(obj, path):
    """Write ``obj`` as sorted, indented JSON and return the path."""
    path = Path(path)
    text = obj.dumps() if isinstance(obj, Report) else json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"
    path.write_text(text)
    return path


def field_csv(f):
    """CSV text for a scalar field: ``r, theta, x, y, value`` on polar grids, ``r, z, value`` on RZ grids."""
    buf = _io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    g = f.grid
    if isinstance(g, RZGrid):
        R, Z = g.mesh()
        out.writerow(["r", "z", "value"])
        cols = (R, Z, f.values)
    elif isinstance(g, PolarGrid):
        R, T = g.mesh()
        X, Y = g.cartesian()
        out.writerow(["r", "theta", "x", "y", "value"])
        cols = (R, T, X, Y, f.values)
    else:  # pragma: no cover - ScalarField validates its grid
        raise TypeError(f"unsupported grid {g!r}")
    for row in zip(*(c.ravel() for c in cols)):
        out.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_manifest(out_dir, files, command, exit_code):
    """Record every output file with its sha256 in ``manifest.json``."""
    out_dir = Path(out_dir)
    entries = []
    for p in sorted(Path(f) for f in files):
        data = p.read_bytes()
        entries.append({"path": p.name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
    manifest = {"version": MANIFEST_VERSION, "command": command, "exit_code": int(exit_code), "files": entries}
    return dump_json(manifest, out_dir / "manifest.json")


def save_field(f, path):
    """Write :func:`field_csv` output to ``path``."""
    path = Path(path)
    path.write_text(field_csv(f))
    return path

