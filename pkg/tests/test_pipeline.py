import numpy as np
import pytest

from synrg.errors import ArgumentError, DataError
from synrg.pipeline import (
    DOF_PAIRS,
    build_dof_tensor,
    get_dof_pair,
    random_synergies,
    resample_linear,
    segment_by_stimulus,
    split_train_test,
)
from synrg.recording import Recording
from synrg.synth import SynthSpec, synth_generate


def make_rec(stim, dataset=1, channels=3):
    stim = np.asarray(stim)
    n = stim.size
    emg = np.arange(n * channels, dtype=float).reshape(n, channels)
    glove = np.arange(n * 22, dtype=float).reshape(n, 22)
    return Recording(100.0, np.arange(n) / 100, emg, glove, stim, "p", dataset)


@pytest.fixture(scope="module")
def subject():
    return synth_generate(SynthSpec(), seed=4)


class TestSegment:
    def test_runs(self):
        reps = segment_by_stimulus(make_rec([0, 5, 5, 0, 5, 0]), [5], min_reps=2)
        assert [len(r) for r in reps[5]] == [2, 1]
        assert [r.start for r in reps[5]] == [1, 4]
        np.testing.assert_array_equal(reps[5][0].emg, [[3, 4, 5], [6, 7, 8]])
        np.testing.assert_array_equal(reps[5][1].glove[0], np.arange(88, 110))

    def test_all_rest(self):
        with pytest.raises(DataError, match="movement 5"):
            segment_by_stimulus(make_rec([0, 0, 0]), [5], min_reps=1)

    def test_protocol_count(self, subject):
        reps = segment_by_stimulus(subject.recording, range(1, 7))
        assert all(len(r) == 10 for r in reps.values())

    def test_sample_conservation(self, subject):
        rec = subject.recording
        reps = segment_by_stimulus(rec, range(1, 7))
        for m, rs in reps.items():
            assert sum(len(r) for r in rs) == int(np.sum(rec.stimulus == m))


class TestSplit:
    def test_dataset1(self, subject):
        reps = segment_by_stimulus(subject.recording, [1, 2])
        split = split_train_test(reps, 1)
        assert len(split.boundaries[1]["train"]) == 6 and len(split.boundaries[1]["test"]) == 4

    def test_dataset2(self):
        stim = np.tile([1, 1, 0], 6)
        split = split_train_test(segment_by_stimulus(make_rec(stim, 2), [1]), 2)
        assert len(split.boundaries[1]["train"]) == 4 and len(split.boundaries[1]["test"]) == 2

    def test_order_preserved(self, subject):
        reps = segment_by_stimulus(subject.recording, [3])
        split = split_train_test(reps, 1)
        assert max(split.train_starts[3]) < min(split.test_starts[3])
        np.testing.assert_array_equal(split.train[3][-1], reps[3][5].emg[-1])
        np.testing.assert_array_equal(split.test[3][0], reps[3][6].emg[0])

    def test_shortfall(self):
        stim = np.tile([1, 0], 5)
        with pytest.raises(DataError):
            split_train_test(segment_by_stimulus(make_rec(stim), [1], min_reps=1), 1)

    def test_stream_in_time_order(self, subject):
        dof = get_dof_pair("DoF2-3")
        split = split_train_test(segment_by_stimulus(subject.recording, dof.movement_ids))
        emg, glove, lab = split.stream(dof.movement_ids, "test")
        assert emg.shape[0] == glove.shape[0] == lab.size
        assert list(dict.fromkeys(lab)) == [3, 4, 5, 6]


class TestTensor:
    def test_equal_lengths_bit_equal(self, rng):
        class S:
            train = {m: rng.random((10, 3)) for m in (1, 2, 3, 4)}
        x = build_dof_tensor(S, (1, 2, 3, 4))
        assert x.shape == (10, 3, 4)
        for k, m in enumerate((1, 2, 3, 4)):
            assert np.array_equal(x[:, :, k], S.train[m])

    def test_resampled_ramp(self):
        lengths = {1: 100, 2: 120, 3: 110, 4: 100}

        class S:
            train = {m: np.column_stack([np.arange(n, dtype=float), 2.0 * np.arange(n)]) for m, n in lengths.items()}
        x = build_dof_tensor(S, (1, 2, 3, 4))
        assert x.shape == (100, 2, 4)
        # a ramp resampled endpoint-to-endpoint stays a ramp from 0 to n-1
        np.testing.assert_allclose(x[:, 0, 1], np.linspace(0, 119, 100), atol=1e-12)
        np.testing.assert_allclose(x[:, 1, 1], 2 * np.linspace(0, 119, 100), atol=1e-12)
        assert np.array_equal(x[:, :, 0], S.train[1])

    def test_policies(self, rng):
        class S:
            train = {1: rng.random((5, 2)), 2: rng.random((8, 2))}
        assert build_dof_tensor(S, (1, 2), "truncate").shape == (5, 2, 2)
        assert build_dof_tensor(S, (1, 2), "max").shape == (8, 2, 2)
        with pytest.raises(ArgumentError):
            build_dof_tensor(S, (1, 2), "pad")

    def test_empty_segment(self):
        class S:
            train = {1: np.zeros((0, 2)), 2: np.ones((3, 2))}
        with pytest.raises(DataError):
            build_dof_tensor(S, (1, 2))

    def test_channel_layout(self, subject):
        dof = get_dof_pair("DoF1-3")
        split = split_train_test(segment_by_stimulus(subject.recording, dof.movement_ids))
        x = build_dof_tensor(split, dof, "truncate")
        for k, m in enumerate(dof.movement_ids):
            np.testing.assert_array_equal(x[0, :, k], split.train[m][0])

    def test_resample_bounds(self, rng):
        seg = rng.random((57, 3))
        out = resample_linear(seg, 40)
        gap = np.max(np.abs(np.diff(seg, axis=0)), axis=0)
        assert np.all(out.max(0) <= seg.max(0) + 1e-12) and np.all(out.min(0) >= seg.min(0) - 1e-12)
        assert np.all(seg.max(0) - out.max(0) <= gap + 1e-12)


class TestDofPairs:
    def test_movements(self):
        assert DOF_PAIRS["DoF1-3"].movement_ids == (1, 2, 5, 6)
        assert DOF_PAIRS["DoF1-2"].groups == ((1, 2), (3, 4))

    def test_unknown(self):
        with pytest.raises(ArgumentError):
            get_dof_pair("DoF4-5")


class TestRandomSynergies:
    def test_range_and_seed(self):
        a = random_synergies(12, 2, 9)
        assert a.shape == (12, 2) and (a >= 0).all() and (a < 1).all()
        assert np.array_equal(a, random_synergies(12, 2, 9))

    def test_mean(self):
        assert abs(random_synergies(10_000, 1, 0).mean() - 0.5) <= 0.02
