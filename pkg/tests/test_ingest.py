import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import find_peaks, hilbert

from vibfault.features import stat16
from vibfault.ingest import (
    ClassSpec, Signal, SignalWindow, SynthSpec, default_synth_spec, load_signal, segment,
    synth_dataset, synth_signals,
)


def test_load_single_column(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("1\n2\n3\n")
    assert load_signal(p, 0, 100.0).samples.tolist() == [1, 2, 3]


def test_load_second_column_with_header_and_crlf(tmp_path):
    p = tmp_path / "a.csv"
    p.write_bytes(b"acc,enc\r\n1.5,10\r\n2.5,20\r\n")
    sig = load_signal(p, 1, 50.0)
    assert sig.samples.tolist() == [10, 20]
    assert sig.sample_rate == 50.0


def test_load_whitespace_delimited(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("1 4\n2\t5\n")
    assert load_signal(p, 1).samples.tolist() == [4, 5]


def test_load_non_numeric_names_row_and_column(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1,2\n3,abc\n")
    with pytest.raises(ValueError, match=r"a\.csv:2.*'abc'.*column 1"):
        load_signal(p, 1)


def test_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_signal(tmp_path / "missing.csv")
    p = tmp_path / "h.csv"
    p.write_text("only_header\n")
    with pytest.raises(ValueError, match="empty"):
        load_signal(p)
    p.write_text("1,2\n")
    with pytest.raises(ValueError, match="no column 5"):
        load_signal(p, 5)


def test_signal_invariants():
    with pytest.raises(ValueError):
        Signal(np.array([]), 1.0)
    with pytest.raises(ValueError):
        Signal(np.array([1.0, np.nan]), 1.0)
    with pytest.raises(ValueError):
        Signal(np.array([1.0]), 0.0)
    with pytest.raises(ValueError):
        SignalWindow(np.array([1.0]))


def test_segment_examples():
    sig = Signal(np.arange(10.0), 1.0)
    assert [w.source_offset for w in segment(sig, 4, 4)] == [0, 4]
    # offsets enumerated by hand: 0, 2, 4, 6 (8 would need samples up to index 11)
    assert [w.source_offset for w in segment(sig, 4, 2)] == [0, 2, 4, 6]
    with pytest.raises(ValueError):
        segment(sig, 16, 16)


@given(n=st.integers(2, 300), wl=st.integers(2, 64), hop=st.integers(1, 64))
def test_segment_count_and_content(n, wl, hop):
    sig = Signal(np.arange(float(n)), 1.0)
    if wl > n:
        with pytest.raises(ValueError):
            segment(sig, wl, hop)
        return
    ws = segment(sig, wl, hop)
    assert len(ws) == (n - wl) // hop + 1
    for w in ws:
        assert np.array_equal(w.samples, sig.samples[w.source_offset:w.source_offset + wl])


@given(n=st.integers(2, 300), wl=st.integers(2, 64))
def test_segment_nonoverlapping_concatenation_is_prefix(n, wl):
    if wl > n:
        return
    x = np.random.default_rng(n).standard_normal(n)
    ws = segment(Signal(x, 1.0), wl, wl)
    cat = np.concatenate([w.samples for w in ws])
    assert np.array_equal(cat, x[:cat.size])


def test_healthy_kurtosis_is_gaussian():
    spec = SynthSpec([ClassSpec(1, "healthy")], duration_s=4096 / 20000, sample_rate=20000, windows_per_class=1)
    (_, sig), = synth_signals(spec, seed=11)
    assert sig.samples.size == 4096
    assert abs(stat16(sig.samples)[7] - 3) < 0.5


def test_outer_race_envelope_peak_spacing():
    fs = 20000.0
    spec = SynthSpec([ClassSpec(3, "outer_race", impulse_rate=100.0, resonance=3000.0, decay=800.0, snr_db=20.0)],
                     duration_s=1.0, sample_rate=fs, windows_per_class=1)
    (_, sig), = synth_signals(spec, seed=5)
    env = np.abs(hilbert(sig.samples))
    peaks, _ = find_peaks(env, distance=100, height=0.5 * env.max())
    spacing = np.diff(peaks).mean()
    assert abs(spacing - 200) <= 0.05 * 200


def test_synth_deterministic_and_seed_sensitive():
    spec = default_synth_spec()
    a = synth_dataset(spec, 3)
    b = synth_dataset(spec, 3)
    c = synth_dataset(spec, 4)
    assert all(np.array_equal(x.samples, y.samples) for x, y in zip(a, b))
    assert not np.array_equal(a[0].samples, c[0].samples)


def test_synth_window_counts_labels_and_finiteness():
    spec = default_synth_spec()
    ws = synth_dataset(spec, 0)
    labels = [w.label for w in ws]
    assert labels == [1] * 60 + [2] * 60 + [3] * 60
    assert all(w.samples.size == 2048 for w in ws)
    for w in ws:
        assert np.all(np.isfinite(w.samples)) and np.ptp(w.samples) > 0


@pytest.mark.parametrize("bad", [
    dict(impulse_rate=15000.0),
    dict(resonance=10000.0),
    dict(kind="ball"),
    dict(speed_profile="accelerating"),
    dict(decay=0.0),
])
def test_synth_spec_validation(bad):
    spec = SynthSpec([ClassSpec(1, **{"kind": "outer_race", **bad})], sample_rate=20000)
    with pytest.raises(ValueError):
        spec.validate()


def test_duplicate_labels_rejected():
    with pytest.raises(ValueError, match="distinct"):
        SynthSpec([ClassSpec(1), ClassSpec(1, "outer_race")]).validate()
