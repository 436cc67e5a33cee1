import json

import numpy as np
import pytest

from synrg.errors import ArgumentError, SchemaError
from synrg.recording import Recording, envelope_recording, load_recording, rms_envelope, write_recording


def write_raw(tmp_path, text, meta=None, name="s1"):
    path = tmp_path / f"{name}.csv"
    path.write_text(text, encoding="utf-8")
    meta = meta or {"subject_id": name, "dataset_id": 1, "sample_rate": 100, "channels": 2}
    path.with_suffix(".json").write_text(json.dumps(meta), encoding="utf-8")
    return path


def header(c=2, g=22):
    return ",".join(["t", "stimulus"] + [f"emg_{i}" for i in range(1, c + 1)]
                    + [f"glove_{i}" for i in range(1, g + 1)])


def row(t, stim, c=2, g=22, emg="0.5"):
    return ",".join([str(t), str(stim)] + [emg] * c + ["1.0"] * g)


@pytest.fixture
def minimal(tmp_path):
    lines = [header(), row(0.0, 0), row(0.01, 1), row(0.02, 1)]
    return write_raw(tmp_path, "\n".join(lines) + "\n")


class TestLoad:
    def test_minimal(self, minimal):
        rec = load_recording(minimal)
        assert rec.dims == (3, 2, 22)
        assert rec.subject_id == "s1" and rec.sample_rate == 100.0
        np.testing.assert_array_equal(rec.stimulus, [0, 1, 1])

    def test_nan_cell(self, tmp_path):
        lines = [header(), row(0.0, 0), row(0.01, 1, emg="nan"), row(0.02, 1)]
        path = write_raw(tmp_path, "\n".join(lines) + "\n")
        with pytest.raises(SchemaError) as exc:
            load_recording(path)
        assert exc.value.row == 3 and exc.value.column == "emg_1"
        assert "s1.csv:3" in str(exc.value)

    def test_empty_cell(self, tmp_path):
        lines = [header(), row(0.0, 0), row(0.01, 1).replace(",0.5,", ",,", 1)]
        with pytest.raises(SchemaError) as exc:
            load_recording(write_raw(tmp_path, "\n".join(lines) + "\n"))
        assert exc.value.row == 3

    def test_missing_column(self, tmp_path):
        lines = [header().replace("stimulus", "label"), row(0.0, 0)]
        with pytest.raises(SchemaError, match="stimulus"):
            load_recording(write_raw(tmp_path, "\n".join(lines) + "\n"))

    def test_gap_in_numbering(self, tmp_path):
        lines = [header().replace("emg_2", "emg_3"), row(0.0, 0)]
        with pytest.raises(SchemaError, match="numbered"):
            load_recording(write_raw(tmp_path, "\n".join(lines) + "\n"))

    def test_non_monotonic_time(self, tmp_path):
        lines = [header(), row(0.0, 0), row(0.02, 1), row(0.01, 1)]
        with pytest.raises(SchemaError) as exc:
            load_recording(write_raw(tmp_path, "\n".join(lines) + "\n"))
        assert exc.value.row == 4 and exc.value.column == "t"

    def test_fractional_stimulus(self, tmp_path):
        lines = [header(), row(0.0, 0.5)]
        with pytest.raises(SchemaError, match="stimulus"):
            load_recording(write_raw(tmp_path, "\n".join(lines) + "\n"))

    def test_missing_sidecar(self, minimal):
        minimal.with_suffix(".json").unlink()
        with pytest.raises(SchemaError, match="sidecar"):
            load_recording(minimal)

    def test_channel_count_mismatch(self, tmp_path):
        meta = {"subject_id": "x", "dataset_id": 1, "sample_rate": 100, "channels": 3}
        with pytest.raises(SchemaError, match="channels"):
            load_recording(write_raw(tmp_path, header() + "\n" + row(0, 0) + "\n", meta))

    def test_roundtrip_canonical(self, minimal, tmp_path):
        rec = load_recording(minimal)
        out = tmp_path / "canon.csv"
        write_recording(rec, out)
        again = tmp_path / "again.csv"
        write_recording(load_recording(out), again)
        assert out.read_bytes() == again.read_bytes()
        back = load_recording(out)
        assert np.array_equal(back.emg, rec.emg) and np.array_equal(back.glove, rec.glove)
        assert np.array_equal(back.t, rec.t)

    def test_roundtrip_random_values(self, rng, tmp_path):
        n = 50
        rec = Recording(100.0, np.arange(n) / 100.0, rng.random((n, 3)), rng.random((n, 22)) * 255,
                        rng.integers(0, 4, n), "r", 2)
        write_recording(rec, tmp_path / "r.csv")
        back = load_recording(tmp_path / "r.csv")
        assert np.array_equal(back.emg, rec.emg) and np.array_equal(back.glove, rec.glove)
        assert back.dataset_id == 2


class TestRMS:
    def test_constant(self):
        env = rms_envelope(np.full((500, 2), -3.0), 100, 10, 2000)
        np.testing.assert_allclose(env, 3.0, rtol=1e-12)

    @pytest.mark.parametrize("window", [1, 7, 50, 100])
    def test_alternating(self, window):
        raw = np.where(np.arange(1000) % 2 == 0, 1.0, -1.0)
        np.testing.assert_allclose(rms_envelope(raw, window, 1, 1000), 1.0, rtol=1e-12)

    def test_length_arithmetic(self, rng):
        n = 2 * 2000 + 37
        env = rms_envelope(rng.standard_normal((n, 3)), 100, 10, 2000)
        w, s = 200, 20
        assert env.shape == ((n - w) // s + 1, 3)
        assert (env >= 0).all()

    def test_matches_direct(self, rng):
        raw = rng.standard_normal((300, 2))
        env = rms_envelope(raw, 10, 5, 1000)
        assert env[3, 1] == pytest.approx(np.sqrt(np.mean(raw[15:25, 1] ** 2)))

    def test_window_too_long(self):
        with pytest.raises(ArgumentError):
            rms_envelope(np.ones(10), 100, 10, 1000)

    def test_window_shorter_than_step(self):
        with pytest.raises(ArgumentError):
            rms_envelope(np.ones(100), 5, 10, 1000)

    def test_envelope_recording(self, rng):
        n = 4000
        stim = np.repeat([0, 1, 0, 2], n // 4)
        rec = Recording(2000.0, np.arange(n) / 2000, rng.standard_normal((n, 4)), rng.random((n, 22)),
                        stim, "raw", 2)
        env = envelope_recording(rec)
        assert env.sample_rate == 100.0
        assert env.emg.shape[0] == (n - 200) // 20 + 1
        assert env.glove.shape == (env.emg.shape[0], 22)
        assert (env.emg >= 0).all()
        assert set(np.unique(env.stimulus)) == {0, 1, 2}
