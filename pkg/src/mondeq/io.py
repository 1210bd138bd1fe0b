"""Text formats: model snapshots, shell tables and CSV tables.

A snapshot is a versioned whitespace table::

    # mond-equilib v1
    # central_value: 0.001
    # ...
    # columns: r rho M gN gM UN Ulam UM
    0 0.001 0 ...

Numbers are written with 17 significant digits so a read after a write
returns bit-identical floats.
"""

from __future__ import annotations

import csv
import datetime as _dt
import math
from pathlib import Path
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from .equilibrium import EquilibriumModel
from .errors import ValidationError
from .functionals import AnsatzFunction
from .interpolation import Family, InterpolationFunction
from .radial import PotentialNormalization, RadialDensity, potentials

__all__ = [
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_COLUMNS",
    "write_snapshot",
    "read_snapshot",
    "write_csv",
    "write_shells",
    "read_shells",
    "fmt",
]

SNAPSHOT_MAGIC = "# mond-equilib v1"
SNAPSHOT_COLUMNS = ("r", "rho", "M", "gN", "gM", "UN", "Ulam", "UM")
_SHELL_COLUMNS = ("r", "v_r", "L", "w")
# stored fields must agree with a rebuild from (r, rho) to this relative level
_CONSISTENCY_RTOL = 1e-9


def fmt(x) -> str:
    """17 significant digits; integers stay integers."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], timestamp: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if timestamp:
            fh.write(f"# generated {_timestamp()}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def write_snapshot(path, model: EquilibriumModel, timestamp: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fl = model.fields
    d = model.density
    meta = {
        "central_value": fmt(model.central_value),
        "cutoff_energy": fmt(model.cutoff_energy),
        "ansatz": model.ansatz.describe(),
        "lambda.family": model.interp.family.value,
        "lambda.a0": fmt(model.interp.a0),
        "normalization": fl.normalization.value,
        "support_radius": fmt(model.support_radius),
        "total_mass": fmt(model.total_mass),
    }
    table = np.column_stack([d.grid, d.rho, d.mass_cum, fl.gN, fl.gM, fl.UN, fl.Ulam, fl.UM])
    with open(path, "w") as fh:
        fh.write(SNAPSHOT_MAGIC + "\n")
        if timestamp:
            fh.write(f"# generated: {_timestamp()}\n")
        for k, v in meta.items():
            fh.write(f"# {k}: {v}\n")
        fh.write("# columns: " + " ".join(SNAPSHOT_COLUMNS) + "\n")
        for row in table:
            fh.write(" ".join(fmt(v) for v in row) + "\n")
    return path


def _parse_header(lines) -> Tuple[Dict[str, str], int]:
    if not lines or lines[0].strip() != SNAPSHOT_MAGIC:
        raise ValidationError("not a mond-equilib v1 snapshot (bad magic line)")
    meta: Dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        key, sep, value = body.partition(":")
        if not sep:
            raise ValidationError(f"malformed header line {i + 1}: {lines[i].rstrip()!r}")
        meta[key.strip()] = value.strip()
        i += 1
    return meta, i


def _float(meta, key) -> float:
    try:
        v = float(meta[key])
    except KeyError:
        raise ValidationError(f"snapshot header lacks {key!r}") from None
    except ValueError:
        raise ValidationError(f"snapshot header {key!r} is not a number") from None
    if not math.isfinite(v):
        raise ValidationError(f"snapshot header {key!r} is not finite")
    return v


def read_snapshot(path) -> EquilibriumModel:
    """Load a snapshot and rebuild the model; inconsistent or damaged files raise ValidationError."""
    try:
        lines = Path(path).read_text().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ValidationError(f"cannot read snapshot {path}: {exc}") from exc
    meta, start = _parse_header(lines)
    cols = meta.get("columns", "").split()
    if tuple(cols) != SNAPSHOT_COLUMNS:
        raise ValidationError(f"unexpected snapshot columns {cols}")
    try:
        family = Family(meta.get("lambda.family", ""))
        interp = InterpolationFunction(family, _float(meta, "lambda.a0"))
        ansatz = AnsatzFunction.parse(meta.get("ansatz", ""))
        norm = PotentialNormalization(meta.get("normalization", PotentialNormalization.NEWTONIAN_AT_INFINITY.value))
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(f"bad snapshot header: {exc}") from exc
    rows = []
    for ln, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != len(SNAPSHOT_COLUMNS):
            raise ValidationError(f"line {ln}: expected {len(SNAPSHOT_COLUMNS)} values, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ValidationError(f"line {ln}: non-numeric value") from None
    if len(rows) < 3:
        raise ValidationError("snapshot has fewer than 3 rows")
    t = np.array(rows)
    if not np.all(np.isfinite(t)):
        raise ValidationError("snapshot contains non-finite values")
    try:
        density = RadialDensity(t[:, 0], t[:, 1])
    except ValueError as exc:
        raise ValidationError(f"invalid density table: {exc}") from exc
    fields = potentials(density, interp, norm)
    for j, (name, ref) in enumerate(zip(SNAPSHOT_COLUMNS[2:],
                                        (density.mass_cum, fields.gN, fields.gM, fields.UN,
                                         fields.Ulam, fields.UM)), start=2):
        scale = max(float(np.max(np.abs(ref))), 1e-300)
        err = float(np.max(np.abs(t[:, j] - ref)))
        if err > _CONSISTENCY_RTOL * scale:
            raise ValidationError(f"column {name} disagrees with the density table "
                                  f"(max deviation {err:.3g}); file damaged?")
    model = EquilibriumModel(density=density, fields=fields, ansatz=ansatz,
                             central_value=_float(meta, "central_value"),
                             cutoff_energy=_float(meta, "cutoff_energy"),
                             support_radius=_float(meta, "support_radius"),
                             total_mass=_float(meta, "total_mass"), interp=interp)
    if abs(model.cutoff_energy - fields.um_at(model.support_radius)) > _CONSISTENCY_RTOL * (
            abs(model.cutoff_energy) + 1.0):
        raise ValidationError("cutoff_energy does not match U^M at the support radius")
    return model


def write_shells(path, e, timestamp: bool = False) -> Path:
    """Shell table ``r,v_r,L,w`` (CSV)."""
    return write_csv(path, _SHELL_COLUMNS, zip(e.r, e.v_r, e.L, e.w), timestamp=timestamp)


def read_shells(path, central_mass: float = 0.0, r_floor: float = 0.0):
    from .dynamics import ShellEnsemble

    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise ValidationError(f"cannot read shell table {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != _SHELL_COLUMNS:
        raise ValidationError("shell table must start with header r,v_r,L,w")
    try:
        t = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError:
        raise ValidationError("shell table contains non-numeric values") from None
    if t.ndim != 2 or t.shape[1] != 4 or t.shape[0] == 0:
        raise ValidationError("shell table must have 4 columns and at least one row")
    return ShellEnsemble(t[:, 0], t[:, 1], t[:, 2], t[:, 3], central_mass=central_mass, r_floor=r_floor)
