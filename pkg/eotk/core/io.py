"""CSV / JSON readers and writers for spectra, time series and result tables."""

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from eotk.core.spectra import Spectrum
from eotk.exceptions import InputError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)

SCHEMA_VERSION=1
SPECTRUM_HEADER=("frequency_hz", "psd_w_per_hz")


def schema_line()->str:
    return f"# schema_version: {SCHEMA_VERSION}\n"


def format_value(value: Any)->str:
    """Stable text for CSV cells: repr-precision floats, empty string for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value=float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value>0 else "-inf"
        return repr(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def render_csv(columns: Sequence[str], rows: Iterable[Mapping[str, Any]])->str:
    """CSV text with the schema comment line, a header row and one line per row."""
    buffer=io.StringIO()
    buffer.write(schema_line())
    writer=csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(column)) for column in columns])
    return buffer.getvalue()


def render_json(payload: Any)->str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default)+"\n"


def _json_default(value: Any)->Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, complex):
        return {"real": value.real, "imag": value.imag}
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


# ============== Spectrum Files ==============


def sidecar_path(path: Path)->Path:
    return path.with_suffix(".json")


def write_spectrum(path: str | Path, spectrum: Spectrum)->None:
    """Write `frequency_hz,psd_w_per_hz` rows plus a `<stem>.json` sidecar with rbw_hz and kind."""
    path=Path(path)
    rows=({"frequency_hz": f, "psd_w_per_hz": p} for f, p in zip(spectrum.frequency, spectrum.psd))
    path.write_text(render_csv(SPECTRUM_HEADER, rows), encoding="utf-8")
    sidecar={"kind": spectrum.kind, "rbw_hz": spectrum.rbw, "schema_version": SCHEMA_VERSION}
    sidecar_path(path).write_text(render_json(sidecar), encoding="utf-8")


def _read_columns(path: Path, expected: Sequence[str])->tuple[list[str], np.ndarray]:
    if not path.is_file():
        raise InputError(f"file not found: {path}")
    header: list[str] | None=None
    values: list[list[float]]=[]
    with path.open(encoding="utf-8", newline="") as handle:
        for line_number, row in enumerate(csv.reader(handle), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if header is None:
                header=[cell.strip() for cell in row]
                missing=[name for name in expected if name not in header]
                if missing:
                    raise InputError(f"{path}:{line_number}: header lacks columns {missing}")
                continue
            if len(row)!=len(header):
                raise InputError(f"{path}:{line_number}: expected {len(header)} fields, got {len(row)}")
            try:
                values.append([float(cell) for cell in row])
            except ValueError:
                raise InputError(f"{path}:{line_number}: non-numeric value in {row}") from None
    if header is None:
        raise InputError(f"{path}: no header row")
    if not values:
        raise InputError(f"{path}: no data rows")
    return header, np.asarray(values, dtype=float)


def read_spectrum(path: str | Path)->Spectrum:
    """Read a spectrum CSV and its optional JSON sidecar.

    Raises:
        InputError: missing file, malformed row (with line number) or invalid grid
    """
    path=Path(path)
    header, data=_read_columns(path, SPECTRUM_HEADER)
    frequency=data[:, header.index("frequency_hz")]
    psd=data[:, header.index("psd_w_per_hz")]
    metadata: dict[str, Any]={}
    sidecar=sidecar_path(path)
    if sidecar.is_file():
        try:
            metadata=json.loads(sidecar.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{sidecar}: invalid JSON at line {exc.lineno}") from exc
    logger.debug("spectrum loaded", path=str(path), points=int(frequency.size))
    return Spectrum(
        frequency=frequency,
        psd=psd,
        rbw=float(metadata.get("rbw_hz", 0.0)),
        kind=metadata.get("kind", "optical_reflection"),
    )


def read_series(path: str | Path, value_column: str | None = None)->tuple[np.ndarray, np.ndarray]:
    """Read a `time_s,<value>` CSV; the first non-time column is used unless named."""
    path=Path(path)
    header, data=_read_columns(path, ("time_s",))
    columns=[name for name in header if name!="time_s"]
    if not columns:
        raise InputError(f"{path}: no value column next to time_s")
    name=value_column or columns[0]
    if name not in header:
        raise InputError(f"{path}: column {name!r} not found")
    return data[:, header.index("time_s")], data[:, header.index(name)]


def render_matrix(frequency: np.ndarray, time: np.ndarray, matrix: np.ndarray, value_name: str)->str:
    """Stacked-trace layout: header row of frequencies, one row per time sample."""
    buffer=io.StringIO()
    buffer.write(schema_line())
    buffer.write(f"# rows: time_s; columns: frequency_hz; values: {value_name}\n")
    writer=csv.writer(buffer, lineterminator="\n")
    writer.writerow(["time_s", *(format_value(f) for f in frequency)])
    for t, row in zip(time, matrix):
        writer.writerow([format_value(t), *(format_value(v) for v in row)])
    return buffer.getvalue()
