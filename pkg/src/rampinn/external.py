"""Parsing of external two-column spectrum files for zero-shot inference.

Files are numeric tables with a wavenumber column, a CARS intensity column
and an optional ground-truth Raman column.  The delimiter is auto-detected
among comma, tab and semicolon; an optional non-numeric header row is
skipped.  Wavenumbers must be strictly monotonic and the table must have at
least 16 rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

MIN_ROWS = 16
_DELIMITERS = (",", "\t", ";")


class ExternalFormatError(ValueError):
    """Raised for malformed external spectrum files."""


@dataclass(frozen=True)
class ExternalSpectrum:
    """An imported spectrum with its original wavenumber axis."""

    wavenumbers: np.ndarray
    cars: np.ndarray
    raman_truth: np.ndarray | None
    path: str

    @property
    def ascending(self) -> "ExternalSpectrum":
        if self.wavenumbers[0] <= self.wavenumbers[-1]:
            return self
        sel = slice(None, None, -1)
        truth = None if self.raman_truth is None else self.raman_truth[sel].copy()
        return ExternalSpectrum(
            self.wavenumbers[sel].copy(), self.cars[sel].copy(), truth, self.path
        )


def _detect_delimiter(line: str) -> str:
    counts = {d: line.count(d) for d in _DELIMITERS}
    best = max(counts, key=counts.get)
    return best if counts[best] > 0 else None


def _split(line: str, delimiter: str | None) -> list[str]:
    parts = line.split(delimiter) if delimiter else line.split()
    return [p.strip() for p in parts if p.strip()]


def parse_external_spectrum(path: str | Path) -> ExternalSpectrum:
    path = Path(path)
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise ExternalFormatError(f"{path}: file is empty")
    delimiter = _detect_delimiter(lines[0] if len(lines) == 1 else lines[1])
    rows: list[list[float]] = []
    start = 0
    first = _split(lines[0], delimiter)
    try:
        [float(v) for v in first]
    except ValueError:
        start = 1  # header row
    width = None
    for lineno, line in enumerate(lines[start:], start=start + 1):
        fields = _split(line, delimiter)
        try:
            values = [float(v) for v in fields]
        except ValueError as err:
            raise ExternalFormatError(f"{path}: non-numeric value at row {lineno}") from err
        if len(values) < 2:
            raise ExternalFormatError(f"{path}: need at least 2 columns at row {lineno}")
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ExternalFormatError(f"{path}: inconsistent column count at row {lineno}")
        rows.append(values)
    if len(rows) < MIN_ROWS:
        raise ExternalFormatError(f"{path}: need at least {MIN_ROWS} rows, got {len(rows)}")
    table = np.asarray(rows, dtype=np.float64)
    w = table[:, 0]
    diffs = np.diff(w)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        bad = int(np.argmax(diffs * np.sign(diffs[0]) <= 0)) + 1
        raise ExternalFormatError(
            f"{path}: wavenumbers not strictly monotonic at row {bad + start + 1}"
        )
    truth = table[:, 2] if table.shape[1] >= 3 else None
    return ExternalSpectrum(w, table[:, 1], truth, str(path))


def export_external_spectrum(
    path: str | Path,
    wavenumbers: np.ndarray,
    cars: np.ndarray,
    raman_truth: np.ndarray | None = None,
    delimiter: str = ",",
) -> None:
    """Write a spectrum in the external table format (17 significant digits)."""
    columns = [wavenumbers, cars] + ([raman_truth] if raman_truth is not None else [])
    with open(path, "w", encoding="utf-8") as fh:
        header = ["wavenumber", "cars"] + (["raman"] if raman_truth is not None else [])
        fh.write(delimiter.join(header) + "\n")
        for i in range(len(wavenumbers)):
            fh.write(delimiter.join(format(float(c[i]), ".17g") for c in columns) + "\n")
