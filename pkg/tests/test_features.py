import numpy as np
import pytest

from cogwifi.errors import DatasetError
from cogwifi.features import (
    Dataset,
    handover_windows,
    label_handover,
    read_csv,
    stats5,
    window_features,
    write_csv,
)


def oracle_stats5(values):
    """Naive two-pass moment computation, independent of the implementation."""
    xs = [float(v) for v in values]
    n = len(xs)
    mean = sum(xs) / n
    m2 = sum((x - mean) ** 2 for x in xs) / n
    m3 = sum((x - mean) ** 3 for x in xs) / n
    m4 = sum((x - mean) ** 4 for x in xs) / n
    return mean, min(xs), max(xs), m3 / m2 ** 1.5, m4 / m2 ** 2 - 3.0


class TestStats5:
    def test_one_to_five(self):
        mean, lo, hi, skew, kurt = stats5([1, 2, 3, 4, 5])
        assert (mean, lo, hi) == (3.0, 1.0, 5.0)
        assert skew == pytest.approx(0.0, abs=1e-12)
        assert kurt == pytest.approx(-1.3)

    def test_constant_input(self):
        assert stats5([2.5, 2.5, 2.5]) == (2.5, 2.5, 2.5, 0.0, 0.0)

    def test_ulp_jitter_counts_as_constant(self):
        times = np.arange(100) * 0.01
        iat = np.diff(times)
        _, _, _, skew, kurt = stats5(iat)
        assert skew == 0.0 and kurt == 0.0

    def test_symmetric_sample_zero_skew(self):
        rng = np.random.default_rng(4)
        half = rng.uniform(0.0, 5.0, size=300)
        sample = np.concatenate([half, -half])
        _, _, _, skew, _ = stats5(sample)
        assert abs(skew) < 1e-12

    def test_matches_oracle_on_random_vectors(self):
        rng = np.random.default_rng(77)
        for _ in range(1000):
            n = int(rng.integers(3, 40))
            x = rng.normal(rng.uniform(-50, 50), rng.uniform(0.5, 20), size=n)
            got = stats5(x)
            want = oracle_stats5(x)
            for g, w in zip(got, want):
                assert g == pytest.approx(w, rel=1e-9, abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(DatasetError):
            stats5([])


class TestHandoverWindows:
    def test_minimum_series_one_sample(self):
        ds = handover_windows(np.arange(11.0), np.zeros(11))
        assert len(ds) == 1

    def test_unit_shift(self):
        ds = handover_windows(np.arange(12.0), np.zeros(12))
        assert len(ds) == 2
        assert np.array_equal(ds.features[1, :10], np.arange(1.0, 11.0))

    def test_constant_series_sample(self):
        series = np.full(11, -60.0)
        ds = handover_windows(series, np.zeros(11))
        row = ds.features[0]
        assert np.all(row[:10] == -60.0)
        assert tuple(row[10:]) == (-60.0, -60.0, -60.0)
        assert ds.target[0] == 0.0

    def test_window_count_is_len_minus_10(self):
        rng = np.random.default_rng(9)
        for length in (11, 25, 80, 200):
            series = rng.normal(-70, 5, size=length)
            ds = handover_windows(series, np.zeros(length))
            assert len(ds) == length - 10

    def test_stored_stats_match_recomputation_exactly(self):
        rng = np.random.default_rng(10)
        series = rng.normal(-70, 6, size=60)
        ds = handover_windows(series, np.zeros(60))
        for row in ds.features:
            w = row[:10]
            assert row[10] == np.min(w)
            assert row[11] == np.max(w)
            assert row[12] == np.mean(w)

    def test_too_short_rejected(self):
        with pytest.raises(DatasetError):
            handover_windows(np.arange(10.0), np.zeros(10))


class TestLabelHandover:
    T2 = -85.0

    def test_forced_disconnect(self):
        assert label_handover([-86.0, -88.0, -90.0], [-99.0, -99.0, -99.0],
                              self.T2) == 1

    def test_healthy_link(self):
        assert label_handover([-65.0, -65.0, -65.0], [-70.0, -70.0, -70.0],
                              self.T2) == 0

    def test_one_second_dip_is_not_a_handover(self):
        # alternative better for one second, then serving recovers
        serving = [-80.0, -70.0, -70.0]
        alt = [-76.0, -74.0, -74.0]
        assert label_handover(serving, alt, self.T2) == 0

    def test_sustained_switch(self):
        serving = [-80.0, -80.0, -80.0]
        alt = [-73.0, -72.0, -71.0]
        assert label_handover(serving, alt, self.T2) == 1

    def test_missing_beacon_is_forced(self):
        assert label_handover([np.nan, -80.0, -80.0], [-70.0, -99.0, -99.0],
                              self.T2) == 1

    def test_needs_lookahead(self):
        with pytest.raises(DatasetError):
            label_handover([], [], self.T2)


def small_handover_dataset():
    rng = np.random.default_rng(1)
    feats = []
    for _ in range(8):
        w = rng.normal(-75, 4, size=10)
        feats.append(window_features(w))
    labels = np.array([0, 1, 0, 0, 1, 1, 0, 1], dtype=float)
    return Dataset("handover", np.array(feats), labels)


class TestCsvRoundTrip:
    def test_handover_round_trip(self, tmp_path):
        ds = small_handover_dataset()
        path = tmp_path / "ho.csv"
        write_csv(ds, path)
        back = read_csv(path, "handover")
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.target, ds.target)

    def test_throughput_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        rows = []
        for _ in range(6):
            iats = np.sort(rng.uniform(0.001, 0.1, size=3))
            rows.append([3.0, iats[1], iats[0], iats[2], 0.3, -0.4])
        ds = Dataset("throughput", np.array(rows), rng.uniform(0.5, 9.0, size=6))
        path = tmp_path / "tp.csv"
        write_csv(ds, path)
        back = read_csv(path, "throughput")
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.target, ds.target)

    def test_nan_cell_rejected_with_location(self, tmp_path):
        path = tmp_path / "bad.csv"
        ds = small_handover_dataset()
        write_csv(ds, path)
        lines = path.read_text().splitlines()
        cells = lines[1].split(",")
        cells[3] = "nan"
        lines[1] = ",".join(cells)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetError, match="row 2.*rss_3"):
            read_csv(path, "handover")

    def test_permuted_header_rejected(self, tmp_path):
        path = tmp_path / "perm.csv"
        ds = small_handover_dataset()
        write_csv(ds, path)
        lines = path.read_text().splitlines()
        header = lines[0].split(",")
        header[0], header[1] = header[1], header[0]
        lines[0] = ",".join(header)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetError, match="header"):
            read_csv(path, "handover")

    def test_wrong_schema_rejected(self, tmp_path):
        path = tmp_path / "ho.csv"
        write_csv(small_handover_dataset(), path)
        with pytest.raises(DatasetError, match="header"):
            read_csv(path, "throughput")


class TestDatasetValidation:
    def test_non_finite_rejected(self):
        feats = np.array([[3.0, 0.1, 0.05, np.inf, 0.0, 0.0]])
        with pytest.raises(DatasetError, match="non-finite"):
            Dataset("throughput", feats, np.array([1.0]))

    def test_label_must_be_binary(self):
        ds = small_handover_dataset()
        with pytest.raises(DatasetError, match="0 or 1"):
            Dataset("handover", ds.features, ds.target + 0.5)

    def test_wrong_width_rejected(self):
        with pytest.raises(DatasetError, match="feature columns"):
            Dataset("throughput", np.zeros((3, 4)), np.zeros(3))
