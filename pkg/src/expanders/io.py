"""Reading and writing profiles, reports and manifests."""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ProfileFormatError
from .geom import EquivariantRayPair
from .profile import ProfileCurve

PROFILE_HEADER = ("s", "r", "phi", "psi")


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> Path:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps_json(obj) -> str:
    """Deterministic JSON (sorted keys; floats in shortest round-trip form)."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write_text(path, dumps_json(obj))


def rows_to_csv(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_g17(v) for v in row])
    return buf.getvalue()


def profile_to_csv(curve: ProfileCurve) -> str:
    return rows_to_csv(PROFILE_HEADER, zip(curve.s, curve.r, curve.phi, curve.psi))


def write_profile_csv(path, curve: ProfileCurve) -> Path:
    return atomic_write_text(path, profile_to_csv(curve))


def parse_profile_csv(text: str, source: str = "<string>", rays=None) -> ProfileCurve:
    """Parse ``s,r,phi,psi`` rows; errors name the line and field."""
    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ProfileFormatError(f"{source}: empty file") from None
    if tuple(h.strip() for h in header) != PROFILE_HEADER:
        raise ProfileFormatError(f"{source}: line 1: expected header {','.join(PROFILE_HEADER)}, got {','.join(header)}")
    data = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(PROFILE_HEADER):
            raise ProfileFormatError(f"{source}: line {lineno}: expected 4 fields, got {len(row)}")
        vals = []
        for name, cell in zip(PROFILE_HEADER, row):
            try:
                v = float(cell)
            except ValueError:
                raise ProfileFormatError(f"{source}: line {lineno}: field {name!r}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise ProfileFormatError(f"{source}: line {lineno}: field {name!r}: non-finite value")
            vals.append(v)
        data.append(vals)
    if len(data) < 2:
        raise ProfileFormatError(f"{source}: need at least two samples")
    a = np.array(data)
    try:
        return ProfileCurve(a[:, 0], a[:, 1], a[:, 2], a[:, 3], rays)
    except ValueError as exc:
        raise ProfileFormatError(f"{source}: {exc}") from None


def read_profile(path) -> ProfileCurve:
    """Read a profile CSV; a JSON sidecar with the same stem supplies the rays if present."""
    path = Path(path)
    text = path.read_text()
    rays = None
    side = path.with_suffix(".json")
    if side.exists():
        try:
            meta = json.loads(side.read_text())
            rd = meta.get("rays")
            if rd is not None:
                rays = EquivariantRayPair(float(rd["phi_minus"]), float(rd["phi_plus"]))
        except (ValueError, KeyError, TypeError) as exc:
            raise ProfileFormatError(f"{side}: field 'rays': {exc}") from None
    return parse_profile_csv(text, str(path), rays)


def content_hash(*parts) -> str:
    """sha256 over byte strings, text, or file paths (file contents are hashed)."""
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, Path):
            data = p.read_bytes()
        elif isinstance(p, bytes):
            data = p
        else:
            data = str(p).encode()
        h.update(len(data).to_bytes(8, "little"))
        h.update(data)
    return h.hexdigest()
