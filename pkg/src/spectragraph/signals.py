"""Loading labelled recordings, cutting them into windows, and taking spectra."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

BONN_SAMPLE_RATE = 173.61


class IngestError(ValueError):
    """Raised for unreadable or malformed input files."""


@dataclass(frozen=True)
class RawRecord:
    samples: np.ndarray
    sample_rate: float
    label: int
    source_id: str

    def __post_init__(self):
        if len(self.samples) == 0:
            raise IngestError(f"{self.source_id}: record has no samples")
        if not self.sample_rate > 0:
            raise IngestError(f"{self.source_id}: sample_rate must be positive")


@dataclass(frozen=True)
class Segment:
    samples: np.ndarray
    label: int
    source_id: str
    offset: int


@dataclass(frozen=True)
class Spectrum:
    magnitudes: np.ndarray
    label: int
    source_id: str = ""
    offset: int = 0

    @property
    def n(self) -> int:
        return len(self.magnitudes)


def _parse_value(text: str, path: Path, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise IngestError(f"{path}: line {lineno}: cannot parse {text.strip()!r} as a number") from None


def load_bonn_record(path, label: int, sample_rate: float = BONN_SAMPLE_RATE) -> RawRecord:
    """Read a Bonn-style ASCII file holding one decimal value per line.

    Blank lines are skipped; any other unparsable line raises
    :class:`IngestError` naming its 1-based line number.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestError(f"{path}: unreadable ({exc})") from exc
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        values.append(_parse_value(line, path, lineno))
    if not values:
        raise IngestError(f"{path}: empty file")
    return RawRecord(np.asarray(values, dtype=np.float64), float(sample_rate), int(label), path.stem)


def load_csv_records(path, label: int | None = None, sample_rate: float = 200.0) -> list[RawRecord]:
    """Read a generic CSV of ``value`` or ``value,label`` rows.

    With a label column, each contiguous run of rows sharing a label becomes
    one record. Without one, the whole file is a single record and ``label``
    must be given. A non-numeric first row is treated as a header; lines
    starting with ``#`` are comments.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise IngestError(f"{path}: unreadable ({exc})") from exc
    rows: list[tuple[float, int | None]] = []
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if lineno == 1 and not rows:
                try:
                    float(row[0])
                except ValueError:
                    continue  # header
            value = _parse_value(row[0], path, lineno)
            if len(row) > 1 and row[1].strip():
                try:
                    row_label = int(float(row[1]))
                except ValueError:
                    raise IngestError(f"{path}: line {lineno}: bad label {row[1]!r}") from None
            else:
                row_label = None
            rows.append((value, row_label))
    if not rows:
        raise IngestError(f"{path}: empty file")

    if all(lab is None for _, lab in rows):
        if label is None:
            raise IngestError(f"{path}: no label column and no label given")
        values = np.array([v for v, _ in rows])
        return [RawRecord(values, float(sample_rate), int(label), path.stem)]
    if any(lab is None for _, lab in rows):
        raise IngestError(f"{path}: label column present on some rows only")

    records = []
    start = 0
    for i in range(1, len(rows) + 1):
        if i == len(rows) or rows[i][1] != rows[start][1]:
            values = np.array([v for v, _ in rows[start:i]])
            records.append(RawRecord(values, float(sample_rate), int(rows[start][1]),
                                     f"{path.stem}#{len(records)}"))
            start = i
    return records


def segment(record: RawRecord, seg_len: int, overlap: int = 0) -> list[Segment]:
    """Cut ``record`` into windows of ``seg_len`` at stride ``seg_len - overlap``.

    The trailing partial window is discarded.
    """
    if seg_len < 2:
        raise ValueError("seg_len must be at least 2")
    if not 0 <= overlap < seg_len:
        raise ValueError("overlap must satisfy 0 <= overlap < seg_len")
    n = len(record.samples)
    if seg_len > n:
        log.warning("%s: record length %d shorter than seg_len %d; no segments",
                    record.source_id, n, seg_len)
        return []
    stride = seg_len - overlap
    return [
        Segment(record.samples[off:off + seg_len].copy(), record.label, record.source_id, off)
        for off in range(0, n - seg_len + 1, stride)
    ]


def to_spectrum(seg: Segment, half_spectrum: bool = False) -> Spectrum:
    """Magnitude of the DFT of a segment (0-based indices, no normalisation).

    With ``half_spectrum`` only the first ``n // 2`` bins are kept; the rest
    mirror them for real input.
    """
    x = np.asarray(seg.samples, dtype=np.float64)
    if len(x) < 2:
        raise ValueError("segment must hold at least 2 samples")
    mags = np.abs(np.fft.fft(x))
    if half_spectrum:
        mags = mags[: len(x) // 2]
    return Spectrum(mags, seg.label, seg.source_id, seg.offset)


def spectra_from_records(records, seg_len: int, overlap: int = 0,
                         half_spectrum: bool = False) -> list[Spectrum]:
    return [to_spectrum(s, half_spectrum) for r in records for s in segment(r, seg_len, overlap)]


BONN_ALIASES = {"A": ("A", "Z"), "B": ("B", "O"), "C": ("C", "N"), "D": ("D", "F"), "E": ("E", "S")}


def find_bonn_subset(root, subset: str) -> list[Path]:
    """Locate the text files of one Bonn subset (A-E) under ``root``.

    Accepts either the letter names or the original set names (Z, O, N, F, S)
    as directory names, in any case.
    """
    root = Path(root)
    names = {a.lower() for a in BONN_ALIASES[subset.upper()]}
    for child in sorted(root.iterdir()) if root.is_dir() else []:
        if child.is_dir() and child.name.lower() in names:
            files = sorted(p for p in child.iterdir() if p.suffix.lower() == ".txt")
            if files:
                return files
    raise IngestError(f"{root}: no files found for Bonn subset {subset}")
