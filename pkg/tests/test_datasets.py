import numpy as np
import pytest

from spectragraph.datasets import Standardizer, TaskSpec, load_task_spectra, stratified_split
from spectragraph.signals import IngestError


def test_task_parses_class_string():
    t = TaskSpec(dataset="bonn", classes="A-E")
    assert t.classes == ("A", "E") and t.class_count == 2 and t.positive == 1


@pytest.mark.parametrize("kwargs", [dict(K=5), dict(near_field_rate=None),
                                    dict(test_ratio=1.0), dict(split_by="file")])
def test_task_validation(kwargs):
    with pytest.raises(ValueError):
        TaskSpec(**kwargs)


def test_resolve_K():
    assert TaskSpec().resolve_K() == 26
    assert TaskSpec(near_field_rate=None, K=7).resolve_K() == 7
    assert TaskSpec(half_spectrum=True).nodes == 128


def test_synthetic_task_is_balanced_and_seeded():
    t = TaskSpec(samples_per_class=10, seed=4)
    a, b = load_task_spectra(t), load_task_spectra(t)
    assert [s.label for s in a].count(1) == 10
    np.testing.assert_array_equal(a[3].magnitudes, b[3].magnitudes)


def test_synthetic_classes_peak_in_different_bands():
    specs = load_task_spectra(TaskSpec(samples_per_class=20))
    peaks = {c: np.mean([np.argmax(s.magnitudes[:128]) for s in specs if s.label == c]) for c in (0, 1)}
    assert peaks[0] < 256 / 12 < 256 / 6 < peaks[1]


def test_missing_dataset(tmp_path):
    with pytest.raises(IngestError, match="missing"):
        load_task_spectra(TaskSpec(dataset="bonn", data_path=str(tmp_path / "none")))
    with pytest.raises(IngestError):
        load_task_spectra(TaskSpec(dataset="csv"))


def test_bonn_layout(tmp_path):
    rng = np.random.default_rng(0)
    for sub in ("Z", "S"):
        (tmp_path / sub).mkdir()
        for i in range(2):
            (tmp_path / sub / f"{sub}{i:03d}.txt").write_text("\n".join(map(str, rng.normal(size=600))))
    specs = load_task_spectra(TaskSpec(dataset="bonn", data_path=str(tmp_path)))
    assert len(specs) == 8 and sorted({s.label for s in specs}) == [0, 1]


def test_csv_labels_must_fit_classes(tmp_path):
    (tmp_path / "a.csv").write_text("\n".join(f"{v},{2}" for v in range(300)))
    with pytest.raises(IngestError, match="outside"):
        load_task_spectra(TaskSpec(dataset="csv", data_path=str(tmp_path)))


def test_stratified_split_keeps_class_ratio():
    y = np.array([0] * 50 + [1] * 30)
    tr, te = stratified_split(y, 0.2, np.random.default_rng(0))
    assert len(set(tr) & set(te)) == 0 and len(tr) + len(te) == 80
    assert np.sum(y[te] == 0) == 10 and np.sum(y[te] == 1) == 6


def test_group_split_never_straddles():
    y = np.repeat([0, 1], 20)
    groups = [f"r{i // 4}" for i in range(40)]
    tr, te = stratified_split(y, 0.4, np.random.default_rng(1), groups)
    assert not {groups[i] for i in tr} & {groups[i] for i in te}


def test_standardizer_handles_constant_columns():
    x = np.array([[1.0, 5.0], [3.0, 5.0]])
    out = Standardizer().fit(x).transform(x)
    np.testing.assert_allclose(out, [[-1, 0], [1, 0]])
