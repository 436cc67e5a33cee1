"""Recording container, portable CSV schema and RMS enveloping.

One subject is stored as ``<name>.csv`` plus a ``<name>.json`` sidecar. The
CSV header is ``t,stimulus,emg_1..emg_C,glove_1..glove_G``; ``t`` is in
seconds and strictly increasing, ``stimulus`` is an integer movement label
with 0 for rest. The sidecar holds ``subject_id``, ``dataset_id``,
``sample_rate`` and ``channels``.
"""

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ArgumentError, SchemaError

__all__ = [
    "Recording",
    "load_recording",
    "write_recording",
    "rms_envelope",
    "envelope_recording",
    "discover_recordings",
]

ENVELOPE_RATE = 100.0
_EMG = re.compile(r"emg_(\d+)$")
_GLOVE = re.compile(r"glove_(\d+)$")


@dataclass
class Recording:
    sample_rate: float
    t: np.ndarray
    emg: np.ndarray
    glove: np.ndarray
    stimulus: np.ndarray
    subject_id: str
    dataset_id: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.t)
        if not (self.emg.shape[0] == self.glove.shape[0] == self.stimulus.shape[0] == n):
            raise ArgumentError("all recording series must have equal length")

    @property
    def channels(self):
        return self.emg.shape[1]

    @property
    def dims(self):
        return (len(self.t), self.emg.shape[1], self.glove.shape[1])

    def metadata(self):
        meta = {
            "subject_id": self.subject_id,
            "dataset_id": self.dataset_id,
            "sample_rate": self.sample_rate,
            "channels": self.channels,
        }
        meta.update(self.extra)
        return meta


def _numbered(columns, pattern, path, what):
    found = []
    for c in columns:
        m = pattern.match(c)
        if m:
            found.append((int(m.group(1)), c))
    found.sort()
    idx = [i for i, _ in found]
    if not idx:
        raise SchemaError(f"no {what}_* columns", path=path, row=1)
    if idx != list(range(1, len(idx) + 1)):
        raise SchemaError(f"{what} columns must be numbered 1..N without gaps, got {idx}", path=path, row=1)
    return [c for _, c in found]


def load_recording(path, meta=None):
    """Read and validate a recording CSV and its JSON sidecar.

    Row numbers in errors count the header as row 1.
    """
    path = Path(path)
    if meta is None:
        side = path.with_suffix(".json")
        if not side.exists():
            raise SchemaError("missing metadata sidecar " + side.name, path=path)
        try:
            meta = json.loads(side.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid sidecar JSON: {exc}", path=side) from exc
    for key in ("subject_id", "dataset_id", "sample_rate"):
        if key not in meta:
            raise SchemaError(f"sidecar lacks {key!r}", path=path.with_suffix(".json"))

    try:
        df = pd.read_csv(path, dtype=np.float64, encoding="utf-8", float_precision="round_trip")
    except ValueError as exc:
        raise SchemaError(f"non-numeric content: {exc}", path=path) from exc
    cols = [c.strip() for c in df.columns]
    df.columns = cols
    for required in ("t", "stimulus"):
        if required not in cols:
            raise SchemaError(f"missing column {required!r}", path=path, row=1)
    emg_cols = _numbered(cols, _EMG, path, "emg")
    glove_cols = _numbered(cols, _GLOVE, path, "glove")
    if "channels" in meta and int(meta["channels"]) != len(emg_cols):
        raise SchemaError(f"sidecar declares {meta['channels']} channels, file has {len(emg_cols)}",
                          path=path, row=1)
    if len(df) == 0:
        raise SchemaError("no data rows", path=path, row=2)

    values = df[["t", "stimulus"] + emg_cols + glove_cols]
    bad = np.argwhere(~np.isfinite(values.to_numpy()))
    if bad.size:
        r, c = bad[0]
        raise SchemaError("missing or non-finite value", path=path, row=int(r) + 2, column=values.columns[c])
    t = df["t"].to_numpy()
    step = np.diff(t)
    if np.any(step <= 0):
        r = int(np.flatnonzero(step <= 0)[0]) + 3
        raise SchemaError("time column is not strictly increasing", path=path, row=r, column="t")
    stim = df["stimulus"].to_numpy()
    if np.any(stim != np.round(stim)) or np.any(stim < 0):
        r = int(np.flatnonzero((stim != np.round(stim)) | (stim < 0))[0]) + 2
        raise SchemaError("stimulus must be a non-negative integer", path=path, row=r, column="stimulus")

    extra = {k: v for k, v in meta.items() if k not in ("subject_id", "dataset_id", "sample_rate", "channels")}
    return Recording(
        sample_rate=float(meta["sample_rate"]),
        t=t,
        emg=df[emg_cols].to_numpy(),
        glove=df[glove_cols].to_numpy(),
        stimulus=stim.astype(np.int64),
        subject_id=str(meta["subject_id"]),
        dataset_id=int(meta["dataset_id"]),
        extra=extra,
    )


def _fmt(v):
    return repr(float(v))


def write_recording(rec, path):
    """Write ``rec`` in the canonical CSV layout plus its sidecar."""
    path = Path(path)
    c, g = rec.emg.shape[1], rec.glove.shape[1]
    header = ["t", "stimulus"] + [f"emg_{i}" for i in range(1, c + 1)] + [f"glove_{i}" for i in range(1, g + 1)]
    lines = [",".join(header)]
    for i in range(len(rec.t)):
        row = [_fmt(rec.t[i]), str(int(rec.stimulus[i]))]
        row += [_fmt(v) for v in rec.emg[i]]
        row += [_fmt(v) for v in rec.glove[i]]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    path.with_suffix(".json").write_text(json.dumps(rec.metadata(), indent=2) + "\n", encoding="utf-8")


def discover_recordings(directory):
    """Sorted recording CSV paths in ``directory`` that have a sidecar."""
    directory = Path(directory)
    return sorted(p for p in directory.glob("*.csv") if p.with_suffix(".json").exists())


def _window_samples(ms, rate):
    return max(1, int(round(ms * rate / 1000.0)))


def rms_envelope(raw, window_ms, step_ms, rate):
    """Sliding-window RMS per channel.

    Returns ``floor((N - W) / S) + 1`` rows, where ``W`` and ``S`` are the
    window and step in samples; the output rate is ``1000 / step_ms`` Hz.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim == 1:
        raw = raw[:, None]
    if window_ms < step_ms:
        raise ArgumentError("window must be at least as long as the step")
    w = _window_samples(window_ms, rate)
    s = _window_samples(step_ms, rate)
    if w > raw.shape[0]:
        raise ArgumentError(f"window of {w} samples exceeds signal length {raw.shape[0]}")
    windows = sliding_window_view(raw, w, axis=0)[::s]
    return np.sqrt(np.mean(windows * windows, axis=2))


def envelope_recording(rec, window_ms=100.0, step_ms=10.0):
    """RMS-envelope a raw recording; glove, stimulus and time follow the window centre."""
    env = rms_envelope(rec.emg, window_ms, step_ms, rec.sample_rate)
    w = _window_samples(window_ms, rec.sample_rate)
    s = _window_samples(step_ms, rec.sample_rate)
    centre = np.arange(env.shape[0]) * s + w // 2
    return Recording(
        sample_rate=1000.0 / step_ms,
        t=rec.t[centre],
        emg=env,
        glove=rec.glove[centre],
        stimulus=rec.stimulus[centre],
        subject_id=rec.subject_id,
        dataset_id=rec.dataset_id,
        extra={**rec.extra, "envelope": {"window_ms": window_ms, "step_ms": step_ms,
                                         "source_rate": rec.sample_rate}},
    )
