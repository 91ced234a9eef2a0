"""Radio signature ingestion and feature extraction.

A radio signature is one Wi-Fi scan: per-access-point RSSI readings in dBm
annotated with the 2-D reference position where the scan was taken.  This
module parses signature files, selects the access points to keep (by how
often each one was detected), and turns signatures into fixed-width feature
vectors with missing readings imputed by a constant fill value.

Canonical file format: CSV with header ``point_id,x,y,<ap_1>,...,<ap_n>``,
one row per scan, empty cell = AP not detected.  Leading lines starting with
``#`` are treated as comments.  A ``zenodo`` adapter maps wide fingerprint
CSVs with different column conventions onto the same structure.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractError, DatasetError, FormatError, RowError

# Physically meaningful RSSI range for received Wi-Fi signals.
RSSI_MIN = -120.0
RSSI_MAX = 0.0

# Imputation constant for undetected APs, below any observable reading.
DEFAULT_FILL_DBM = -99.0


@dataclass(frozen=True)
class Position2D:
    """A point in the local metric coordinate frame, in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"position coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class RadioSignature:
    """One scan: AP id -> RSSI dBm readings plus the reference position."""

    point_id: str
    reference: Position2D
    readings: Mapping[str, float]

    def __post_init__(self):
        if not self.readings:
            raise ValueError("a radio signature needs at least one reading")
        for ap, rssi in self.readings.items():
            if not ap:
                raise ValueError("empty AP identifier")
            if not (RSSI_MIN <= rssi <= RSSI_MAX):
                raise ValueError(f"RSSI {rssi} dBm for AP {ap!r} outside [{RSSI_MIN}, {RSSI_MAX}]")
        # Freeze the mapping so signatures are safe to share between workers.
        object.__setattr__(self, "readings", MappingProxyType(dict(self.readings)))

    def __eq__(self, other):
        if not isinstance(other, RadioSignature):
            return NotImplemented
        return (
            self.point_id == other.point_id
            and self.reference == other.reference
            and dict(self.readings) == dict(other.readings)
        )

    def __hash__(self):
        return hash((self.point_id, self.reference, tuple(sorted(self.readings.items()))))


@dataclass(frozen=True)
class ApRegistry:
    """Ordered list of retained APs with their detection counts.

    The order fixes the feature-vector column layout for everything
    downstream, so it must be deterministic for a given dataset.
    """

    aps: tuple[str, ...]
    availability: tuple[int, ...]

    def __post_init__(self):
        if len(self.aps) != len(self.availability):
            raise ValueError("aps and availability lengths differ")
        if len(set(self.aps)) != len(self.aps):
            raise ValueError("duplicate AP in registry")
        if any(not ap for ap in self.aps):
            raise ValueError("empty AP identifier in registry")
        object.__setattr__(self, "_slot", {ap: i for i, ap in enumerate(self.aps)})

    def __len__(self) -> int:
        return len(self.aps)

    def index_of(self, ap: str) -> int | None:
        """Column index of ``ap``, or None if the AP was not retained."""
        return self._slot.get(ap)


def build_registry(signatures: Sequence[RadioSignature], m: int) -> ApRegistry:
    """Select the ``m`` most available APs across ``signatures``.

    Availability is the number of signatures in which an AP was detected.
    Ties are broken by higher mean RSSI over the detections, then by AP id,
    so the registry never depends on input order.  If fewer than ``m``
    distinct APs exist, all of them are retained.
    """
    if m < 1:
        raise ContractError(f"registry size must be >= 1, got {m}")
    if not signatures:
        raise DatasetError("cannot build an AP registry from an empty dataset")

    counts: dict[str, int] = {}
    rssi_sums: dict[str, float] = {}
    for sig in signatures:
        for ap, rssi in sig.readings.items():
            counts[ap] = counts.get(ap, 0) + 1
            rssi_sums[ap] = rssi_sums.get(ap, 0.0) + rssi

    ranked = sorted(counts, key=lambda ap: (-counts[ap], -rssi_sums[ap] / counts[ap], ap))
    kept = ranked[: min(m, len(ranked))]
    return ApRegistry(aps=tuple(kept), availability=tuple(counts[ap] for ap in kept))


def vectorize(signature: RadioSignature, registry: ApRegistry, fill: float = DEFAULT_FILL_DBM) -> np.ndarray:
    """Impute ``signature`` into a vector aligned with ``registry`` order.

    Readings for APs outside the registry are dropped; registry APs the
    signature did not detect get ``fill``.
    """
    if len(registry) == 0:
        raise ContractError("cannot vectorize against an empty registry")
    vec = np.full(len(registry), float(fill))
    for ap, rssi in signature.readings.items():
        slot = registry.index_of(ap)
        if slot is not None:
            vec[slot] = rssi
    return vec


def feature_matrix(
    signatures: Sequence[RadioSignature], registry: ApRegistry, fill: float = DEFAULT_FILL_DBM
) -> np.ndarray:
    """Stack :func:`vectorize` over all signatures into an (n, width) matrix."""
    if not signatures:
        raise DatasetError("cannot build a feature matrix from an empty dataset")
    return np.stack([vectorize(sig, registry, fill) for sig in signatures])


def reference_matrix(signatures: Sequence[RadioSignature]) -> np.ndarray:
    """(n, 2) array of reference positions in signature order."""
    return np.array([[s.reference.x, s.reference.y] for s in signatures], dtype=float)


# ---------------------------------------------------------------------------
# Parsing and serialization


def _open_source(source):
    """Yield (file object, should_close) for a path or an open text stream."""
    if hasattr(source, "read"):
        return source, False
    return open(os.fspath(source), "r", encoding="utf-8", newline=""), True


def _read_rows(stream) -> list[list[str]]:
    """All CSV rows with leading comment lines stripped."""
    text = stream.read()
    lines = text.splitlines()
    start = 0
    while start < len(lines) and lines[start].lstrip().startswith("#"):
        start += 1
    return [row for row in csv.reader(lines[start:]) if row]


def parse_signatures(source, fmt: str = "canonical") -> list[RadioSignature]:
    """Parse a signature file in the given format into RadioSignatures.

    ``source`` may be a path or an open text stream.  ``fmt`` is
    ``canonical`` or ``zenodo``.
    """
    if fmt not in _ADAPTERS:
        raise ContractError(f"unknown signature format {fmt!r}; expected one of {sorted(_ADAPTERS)}")
    stream, close = _open_source(source)
    try:
        rows = _read_rows(stream)
    finally:
        if close:
            stream.close()
    if not rows:
        raise DatasetError("empty signature file")
    return _ADAPTERS[fmt](rows[0], rows[1:])


def _parse_float(cell: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _parse_canonical(header: list[str], rows: list[list[str]]) -> list[RadioSignature]:
    header = [h.strip() for h in header]
    if len(header) < 4 or header[:3] != ["point_id", "x", "y"]:
        raise FormatError(
            "canonical header must be 'point_id,x,y,<ap_1>,...,<ap_n>', got "
            + ",".join(header[:4] or ["<empty>"])
        )
    ap_ids = header[3:]
    if len(set(ap_ids)) != len(ap_ids) or any(not ap for ap in ap_ids):
        raise FormatError("AP columns must be non-empty and unique")
    if not rows:
        raise DatasetError("signature file has a header but no data rows")

    signatures = []
    for num, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise RowError(num, f"expected {len(header)} cells, got {len(row)}")
        x = _parse_float(row[1])
        y = _parse_float(row[2])
        if x is None or y is None:
            raise RowError(num, f"non-numeric coordinate ({row[1]!r}, {row[2]!r})")
        readings = {}
        for ap, cell in zip(ap_ids, row[3:]):
            cell = cell.strip()
            if not cell:
                continue
            rssi = _parse_float(cell)
            if rssi is None:
                continue  # unreadable cell counts as a missed detection
            if not (RSSI_MIN <= rssi <= RSSI_MAX):
                raise RowError(num, f"RSSI {rssi} dBm for AP {ap!r} outside [{RSSI_MIN}, {RSSI_MAX}]")
            readings[ap] = rssi
        if not readings:
            raise RowError(num, "scan contains no readings")
        signatures.append(RadioSignature(row[0].strip(), Position2D(x, y), readings))
    return signatures


# Column-name candidates used to locate coordinates / point labels in wide
# fingerprint CSVs published with varying conventions.
_X_NAMES = {"x", "pos_x", "ref_x", "x_m", "x_ref", "x_coord"}
_Y_NAMES = {"y", "pos_y", "ref_y", "y_m", "y_ref", "y_coord"}
_ID_NAMES = {"point_id", "point", "pid", "id", "label", "location"}


def _parse_zenodo(header: list[str], rows: list[list[str]]) -> list[RadioSignature]:
    """Adapter for wide fingerprint CSVs with loose column conventions.

    Coordinate and point-id columns are located by name (case-insensitive);
    every other column is an AP.  Cells that are empty, non-numeric, or
    outside the plausible RSSI range (sentinels such as 100 or -200) count
    as missed detections.
    """
    header = [h.strip() for h in header]
    lower = [h.lower() for h in header]

    def find(names: set[str]) -> int | None:
        for i, name in enumerate(lower):
            if name in names:
                return i
        return None

    xi, yi = find(_X_NAMES), find(_Y_NAMES)
    if xi is None or yi is None:
        raise FormatError(f"could not locate coordinate columns in header {header[:6]}...")
    pi = find(_ID_NAMES)
    ap_cols = [i for i in range(len(header)) if i not in {xi, yi, pi}]
    if not ap_cols:
        raise FormatError("no AP columns left after removing coordinate/id columns")
    if not rows:
        raise DatasetError("signature file has a header but no data rows")

    signatures = []
    for num, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise RowError(num, f"expected {len(header)} cells, got {len(row)}")
        x = _parse_float(row[xi])
        y = _parse_float(row[yi])
        if x is None or y is None:
            raise RowError(num, f"non-numeric coordinate ({row[xi]!r}, {row[yi]!r})")
        readings = {}
        for i in ap_cols:
            rssi = _parse_float(row[i].strip()) if row[i].strip() else None
            if rssi is None or not (RSSI_MIN <= rssi <= RSSI_MAX) or rssi == 0.0:
                continue
            readings[header[i]] = rssi
        if not readings:
            raise RowError(num, "scan contains no readings")
        point_id = row[pi].strip() if pi is not None else f"row{num}"
        signatures.append(RadioSignature(point_id, Position2D(x, y), readings))
    return signatures


_ADAPTERS = {"canonical": _parse_canonical, "zenodo": _parse_zenodo}


def write_signatures(
    signatures: Sequence[RadioSignature],
    dest,
    ap_order: Iterable[str] | None = None,
    comment: str | None = None,
) -> None:
    """Write signatures as canonical CSV to a path or text stream.

    Column order defaults to the sorted union of all AP ids.  Floats are
    written with ``repr`` precision so a parse round-trip is exact.
    """
    if not signatures:
        raise DatasetError("refusing to write an empty signature file")
    if ap_order is None:
        aps: set[str] = set()
        for sig in signatures:
            aps.update(sig.readings)
        ap_order = sorted(aps)
    ap_order = list(ap_order)

    if hasattr(dest, "write"):
        _write_signature_rows(dest, signatures, ap_order, comment)
    else:
        with open(os.fspath(dest), "w", encoding="utf-8", newline="") as f:
            _write_signature_rows(f, signatures, ap_order, comment)


def _write_signature_rows(stream, signatures, ap_order, comment):
    if comment:
        stream.write(f"# {comment}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["point_id", "x", "y", *ap_order])
    for sig in signatures:
        cells = [sig.point_id, repr(float(sig.reference.x)), repr(float(sig.reference.y))]
        for ap in ap_order:
            rssi = sig.readings.get(ap)
            cells.append("" if rssi is None else repr(float(rssi)))
        writer.writerow(cells)


def signatures_to_csv_text(signatures: Sequence[RadioSignature], ap_order=None, comment=None) -> str:
    buf = io.StringIO()
    write_signatures(signatures, buf, ap_order=ap_order, comment=comment)
    return buf.getvalue()
