"""Task definitions and dataset assembly (synthetic, Bonn folders, generic CSV)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import signals
from .signals import IngestError, Spectrum


@dataclass
class TaskSpec:
    dataset: str = "synth"            # synth | bonn | csv
    data_path: str | None = None
    classes: tuple = ("A", "E")       # Bonn subsets, one per class label
    seg_len: int = 256
    overlap: int = 0
    near_field_rate: float | None = 0.1
    K: int | None = None
    model: str = "mlp"
    seed: int = 0
    test_ratio: float = 0.2
    samples_per_class: int = 200      # synthetic only
    half_spectrum: bool = False
    positive_class: int | None = None  # default: last class (the seizure subset)
    split_by: str = "segment"         # segment | record

    def __post_init__(self):
        if isinstance(self.classes, str):
            self.classes = tuple(c.strip() for c in self.classes.replace("-", ",").split(",") if c.strip())
        if (self.near_field_rate is None) == (self.K is None):
            raise ValueError("set exactly one of near_field_rate / K")
        if len(self.classes) < 2 and self.dataset != "synth":
            raise ValueError("a task needs at least two classes")
        if not 0 < self.test_ratio < 1:
            raise ValueError("test_ratio must lie in (0, 1)")
        if self.split_by not in ("segment", "record"):
            raise ValueError("split_by must be 'segment' or 'record'")

    @property
    def class_count(self) -> int:
        return 2 if self.dataset == "synth" else len(self.classes)

    @property
    def positive(self) -> int:
        return self.class_count - 1 if self.positive_class is None else self.positive_class

    @property
    def nodes(self) -> int:
        return self.seg_len // 2 if self.half_spectrum else self.seg_len

    def resolve_K(self, n: int | None = None) -> int:
        from .graph import near_field_rate_to_K
        n = self.nodes if n is None else n
        if self.K is not None:
            if not 1 <= self.K <= n - 1:
                raise ValueError(f"K must lie in [1, {n - 1}]")
            return self.K
        return near_field_rate_to_K(self.near_field_rate, n)


def synthetic_segments(samples_per_class: int, seg_len: int, seed: int) -> list[signals.Segment]:
    """Two-class noisy tones that differ in frequency band.

    Class 0 carries a tone in bins ``[n/32, n/12]``, class 1 in
    ``[n/6, n/4]``; both add unit Gaussian noise and a random phase. The
    magnitude spectra of the two classes peak in disjoint bands, so the
    task is separable by construction.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(seg_len)
    bands = [(max(1, seg_len // 32), max(2, seg_len // 12)), (seg_len // 6, seg_len // 4)]
    segs = []
    for label, (lo, hi) in enumerate(bands):
        for i in range(samples_per_class):
            f = rng.uniform(lo, hi)
            amp = rng.uniform(2.0, 4.0)
            x = amp * np.sin(2 * np.pi * f * t / seg_len + rng.uniform(0, 2 * np.pi))
            x += rng.normal(size=seg_len)
            segs.append(signals.Segment(x, label, f"synth{label}-{i}", 0))
    return segs


def load_task_spectra(task: TaskSpec) -> list[Spectrum]:
    """Resolve a task into labelled spectra, labels ``0..c-1`` in ``task.classes`` order."""
    if task.dataset == "synth":
        segs = synthetic_segments(task.samples_per_class, task.seg_len, task.seed)
        return [signals.to_spectrum(s, task.half_spectrum) for s in segs]
    if task.data_path is None:
        raise IngestError(f"dataset {task.dataset!r} needs a data path")
    root = Path(task.data_path)
    if not root.exists():
        raise IngestError(f"{root}: dataset missing")
    if task.dataset == "bonn":
        records = []
        for label, subset in enumerate(task.classes):
            for path in signals.find_bonn_subset(root, subset):
                records.append(signals.load_bonn_record(path, label))
    elif task.dataset == "csv":
        files = sorted(root.glob("*.csv")) if root.is_dir() else [root]
        records = [r for f in files for r in signals.load_csv_records(f)]
        bad = {r.label for r in records} - set(range(task.class_count))
        if bad:
            raise IngestError(f"{root}: labels {sorted(bad)} outside 0..{task.class_count - 1}")
    else:
        raise ValueError(f"unknown dataset {task.dataset!r}")
    return signals.spectra_from_records(records, task.seg_len, task.overlap, task.half_spectrum)


def stratified_split(labels, test_ratio: float, rng: np.random.Generator,
                     groups=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split. With ``groups`` whole groups go to one side."""
    labels = np.asarray(labels)
    train, test = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if groups is None:
            idx = rng.permutation(idx)
            n_test = int(round(len(idx) * test_ratio))
            test.extend(idx[:n_test])
            train.extend(idx[n_test:])
            continue
        g = np.asarray(groups)[idx]
        uniq = rng.permutation(np.unique(g))
        n_test = int(round(len(uniq) * test_ratio))
        test_groups = set(uniq[:n_test])
        for i, gi in zip(idx, g):
            (test if gi in test_groups else train).append(i)
    return np.sort(np.array(train, dtype=int)), np.sort(np.array(test, dtype=int))


@dataclass
class Standardizer:
    mean: np.ndarray = field(default=None)
    std: np.ndarray = field(default=None)

    def fit(self, x: np.ndarray) -> "Standardizer":
        self.mean = x.mean(axis=0)
        std = x.std(axis=0)
        self.std = np.where(std > 0, std, 1.0)
        return self

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std
