"""Segmentation, train/test split and tensor assembly for wrist DoF pairs.

Movement labels follow a canonical numbering for the six wrist movements:

    1 radial deviation   2 ulnar deviation     (DoF1, horizontal)
    3 extension          4 flexion             (DoF2, vertical)
    5 supination         6 pronation           (DoF3, inclination)

Segments are ``time x channels`` (EMG) and ``time x sensors`` (glove).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DataError

__all__ = [
    "MOVEMENTS",
    "DOFS",
    "DofPair",
    "DOF_PAIRS",
    "get_dof_pair",
    "PROTOCOL",
    "Repetition",
    "SplitSegments",
    "segment_by_stimulus",
    "split_train_test",
    "resample_linear",
    "build_dof_tensor",
    "random_synergies",
]

MOVEMENTS = {
    1: "radial deviation",
    2: "ulnar deviation",
    3: "extension",
    4: "flexion",
    5: "supination",
    6: "pronation",
}
DOFS = {1: (1, 2), 2: (3, 4), 3: (5, 6)}

# dataset id -> (repetitions recorded, repetitions used for training)
PROTOCOL = {1: (10, 6), 2: (6, 4)}


@dataclass(frozen=True)
class DofPair:
    name: str
    dofs: tuple

    @property
    def movement_ids(self):
        return tuple(m for d in self.dofs for m in DOFS[d])

    @property
    def groups(self):
        """Per-DoF movement positions (1-based) within :attr:`movement_ids`."""
        return tuple((2 * i + 1, 2 * i + 2) for i in range(len(self.dofs)))


DOF_PAIRS = {
    "DoF1-2": DofPair("DoF1-2", (1, 2)),
    "DoF1-3": DofPair("DoF1-3", (1, 3)),
    "DoF2-3": DofPair("DoF2-3", (2, 3)),
}


def get_dof_pair(name):
    try:
        return DOF_PAIRS[name]
    except KeyError:
        raise ArgumentError(f"unknown DoF pair {name!r}; choose from {sorted(DOF_PAIRS)}") from None


@dataclass
class Repetition:
    movement: int
    start: int
    emg: np.ndarray
    glove: np.ndarray

    def __len__(self):
        return self.emg.shape[0]


def _runs(mask):
    """(start, stop) of maximal True runs."""
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[::2], edges[1::2]))


def segment_by_stimulus(rec, movement_ids, min_reps=None):
    """Split a recording into repetitions per movement.

    Each maximal run of a movement label is one repetition; rest samples are
    dropped. Returns ``{movement_id: [Repetition, ...]}`` in temporal order.
    """
    if min_reps is None:
        min_reps = PROTOCOL.get(rec.dataset_id, (1, 1))[0]
    out = {}
    for m in movement_ids:
        reps = [Repetition(int(m), int(a), rec.emg[a:b], rec.glove[a:b])
                for a, b in _runs(rec.stimulus == m)]
        if len(reps) < min_reps:
            raise DataError(
                f"subject {rec.subject_id}: movement {m} ({MOVEMENTS.get(m, '?')}) has "
                f"{len(reps)} repetitions, protocol needs {min_reps}"
            )
        out[int(m)] = reps
    return out


@dataclass
class SplitSegments:
    """Per-movement training and test data, each concatenated in time order."""

    train: dict = field(default_factory=dict)
    test: dict = field(default_factory=dict)
    train_glove: dict = field(default_factory=dict)
    test_glove: dict = field(default_factory=dict)
    train_starts: dict = field(default_factory=dict)
    test_starts: dict = field(default_factory=dict)
    boundaries: dict = field(default_factory=dict)

    def stream(self, movement_ids, part="train"):
        """Concatenate several movements' segments in recording order.

        Returns ``(emg, glove, labels)`` for ``part`` in {"train", "test"}.
        """
        emg = self.train if part == "train" else self.test
        glove = self.train_glove if part == "train" else self.test_glove
        starts = self.train_starts if part == "train" else self.test_starts
        pieces = []
        for m in movement_ids:
            if m not in emg:
                raise ArgumentError(f"movement {m} not in split")
            bounds = np.cumsum([0] + [n for n in self.boundaries[m][part]])
            for i, s in enumerate(starts[m]):
                pieces.append((s, m, slice(bounds[i], bounds[i + 1])))
        pieces.sort(key=lambda p: p[0])
        e = np.vstack([emg[m][sl] for _, m, sl in pieces])
        g = np.vstack([glove[m][sl] for _, m, sl in pieces])
        lab = np.concatenate([np.full(sl.stop - sl.start, m) for _, m, sl in pieces])
        return e, g, lab


def split_train_test(reps, dataset_id=1, n_train=None):
    """Assign the first repetitions of each movement to training.

    Dataset 1 uses 6 of 10 repetitions for training, dataset 2 uses 4 of 6;
    any further repetitions go to the test set.
    """
    if n_train is None:
        if dataset_id not in PROTOCOL:
            raise ArgumentError(f"unknown dataset id {dataset_id}")
        n_total, n_train = PROTOCOL[dataset_id]
    else:
        n_total = n_train + 1
    split = SplitSegments()
    for m, rs in reps.items():
        if len(rs) < n_total:
            raise DataError(f"movement {m}: {len(rs)} repetitions, protocol needs {n_total}")
        train, test = rs[:n_train], rs[n_train:]
        split.train[m] = np.vstack([r.emg for r in train])
        split.test[m] = np.vstack([r.emg for r in test])
        split.train_glove[m] = np.vstack([r.glove for r in train])
        split.test_glove[m] = np.vstack([r.glove for r in test])
        split.train_starts[m] = [r.start for r in train]
        split.test_starts[m] = [r.start for r in test]
        split.boundaries[m] = {"train": [len(r) for r in train], "test": [len(r) for r in test]}
    return split


def resample_linear(seg, length):
    """Endpoint-preserving linear interpolation of ``seg`` rows to ``length``."""
    seg = np.asarray(seg, dtype=np.float64)
    n = seg.shape[0]
    if n == length:
        return seg.copy()
    if n == 1:
        return np.repeat(seg, length, axis=0)
    src = np.arange(n)
    dst = np.linspace(0.0, n - 1.0, length)
    return np.column_stack([np.interp(dst, src, seg[:, c]) for c in range(seg.shape[1])])


LENGTH_POLICIES = ("min", "truncate", "max")


def build_dof_tensor(split, dof, length_policy="min", part="train"):
    """Stack the movements of a DoF pair as slabs of a ``T x channels x 4`` tensor.

    ``min`` resamples every slab to the shortest segment, ``max`` to the
    longest, ``truncate`` cuts every slab to the shortest.
    """
    segs = split.train if part == "train" else split.test
    ids = dof.movement_ids if isinstance(dof, DofPair) else tuple(dof)
    missing = [m for m in ids if m not in segs]
    if missing:
        raise DataError(f"no segments for movements {missing}")
    data = [segs[m] for m in ids]
    if any(d.shape[0] == 0 for d in data):
        raise DataError("empty movement segment")
    lengths = [d.shape[0] for d in data]
    if length_policy == "min":
        t = min(lengths)
        slabs = [resample_linear(d, t) for d in data]
    elif length_policy == "max":
        t = max(lengths)
        slabs = [resample_linear(d, t) for d in data]
    elif length_policy == "truncate":
        t = min(lengths)
        slabs = [d[:t] for d in data]
    else:
        raise ArgumentError(f"length_policy must be one of {LENGTH_POLICIES}")
    return np.stack(slabs, axis=2)


def random_synergies(channels, r, seed):
    """``channels x r`` matrix of i.i.d. uniform [0, 1) entries."""
    return np.random.default_rng(seed).random((channels, r))
