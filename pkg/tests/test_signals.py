import logging

import numpy as np
import pytest

from spectragraph import oracles
from spectragraph.signals import (IngestError, RawRecord, Segment, find_bonn_subset, load_bonn_record,
                                  load_csv_records, segment, spectra_from_records, to_spectrum)


def _record(n, label=0):
    return RawRecord(np.arange(n, dtype=float), 173.61, label, "r")


def test_bonn_record_skips_blank_lines(tmp_path):
    p = tmp_path / "Z001.txt"
    p.write_text("1.5\n\n-2\n3e1\n")
    rec = load_bonn_record(p, label=0)
    np.testing.assert_array_equal(rec.samples, [1.5, -2.0, 30.0])
    assert rec.source_id == "Z001"


def test_bonn_record_bad_line_is_named(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("1\n2\nabc\n")
    with pytest.raises(IngestError, match="line 3"):
        load_bonn_record(p, 0)


def test_bonn_record_empty_file(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("\n\n")
    with pytest.raises(IngestError, match="empty"):
        load_bonn_record(p, 0)


def test_missing_file_is_ingest_error(tmp_path):
    with pytest.raises(IngestError):
        load_bonn_record(tmp_path / "nope.txt", 0)


def test_csv_label_runs_become_records(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("value,label\n# comment\n1,0\n2,0\n3,1\n4,1\n5,0\n")
    recs = load_csv_records(p)
    assert [r.label for r in recs] == [0, 1, 0]
    assert [len(r.samples) for r in recs] == [2, 2, 1]


def test_csv_without_labels_needs_label(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1\n2\n3\n")
    with pytest.raises(IngestError, match="no label"):
        load_csv_records(p)
    assert load_csv_records(p, label=1)[0].label == 1


def test_csv_partial_label_column_rejected(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,0\n2\n")
    with pytest.raises(IngestError, match="some rows"):
        load_csv_records(p)


def test_segment_counts_and_offsets():
    segs = segment(_record(4097), 256)
    assert len(segs) == 16
    assert [s.offset for s in segs[:3]] == [0, 256, 512]
    segs = segment(_record(1000), 256, overlap=128)
    assert len(segs) == (1000 - 256) // 128 + 1
    assert segs[1].offset == 128


def test_short_record_warns_and_yields_nothing(caplog):
    with caplog.at_level(logging.WARNING):
        assert segment(_record(100), 256) == []
    assert "shorter" in caplog.text


@pytest.mark.parametrize("seg_len,overlap", [(1, 0), (8, 8), (8, -1)])
def test_segment_rejects_bad_arguments(seg_len, overlap):
    with pytest.raises(ValueError):
        segment(_record(100), seg_len, overlap)


def test_spectrum_matches_naive_dft():
    rng = np.random.default_rng(0)
    for n in (2, 3, 16, 31, 64):
        x = rng.normal(size=n)
        got = to_spectrum(Segment(x, 1, "s", 0)).magnitudes
        np.testing.assert_allclose(got, oracles.naive_dft_magnitude(x), rtol=1e-9, atol=1e-9)


def test_constant_segment_has_only_dc():
    mags = to_spectrum(Segment(np.full(8, 2.0), 0, "s", 0)).magnitudes
    assert mags[0] == pytest.approx(16.0)
    np.testing.assert_allclose(mags[1:], 0, atol=1e-12)


def test_half_spectrum_keeps_first_half():
    x = np.random.default_rng(1).normal(size=32)
    full = to_spectrum(Segment(x, 0, "s", 0)).magnitudes
    half = to_spectrum(Segment(x, 0, "s", 0), half_spectrum=True).magnitudes
    np.testing.assert_array_equal(half, full[:16])


def test_spectra_from_records_keeps_labels():
    specs = spectra_from_records([_record(512, 0), _record(300, 1)], 256)
    assert [s.label for s in specs] == [0, 0, 1]
    assert all(s.n == 256 for s in specs)


def test_find_bonn_subset_accepts_original_names(tmp_path):
    d = tmp_path / "S"
    d.mkdir()
    (d / "S001.txt").write_text("1\n")
    (d / "notes.md").write_text("")
    assert [p.name for p in find_bonn_subset(tmp_path, "E")] == ["S001.txt"]
    with pytest.raises(IngestError):
        find_bonn_subset(tmp_path, "A")
