"""Synthetic subjects with planted task and shared synergies.

Each wrist movement ``m`` drives EMG through ``task[:, m] + shared[:, dof(m)]``
scaled by a smooth non-negative activation, which is exactly the
constrained Tucker model with the shared-synergy core. Glove sensors are
fixed linear functions of the six activations, antagonist movements of a
DoF deflecting each sensor in opposite directions.
"""

from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal.windows import tukey

from .errors import ArgumentError
from .pipeline import DOFS, MOVEMENTS, PROTOCOL, get_dof_pair
from .recording import Recording

__all__ = ["SynthSpec", "SynthSubject", "snr_to_noise", "synth_generate", "planted_synergies"]


@dataclass(frozen=True)
class SynthSpec:
    channels: int = 12
    sensors: int = 22
    sample_rate: float = 100.0
    dataset_id: int = 1
    move_s: float = 1.2
    move_jitter: float = 0.25
    rest_s: float = 0.6
    noise: float = 0.0
    glove_noise: float = 0.0
    shared_amp: float = 0.5
    glove_gain: float = 20.0

    def __post_init__(self):
        if self.noise < 0 or self.glove_noise < 0:
            raise ArgumentError("noise levels must be >= 0")
        if self.channels < 3:
            raise ArgumentError("need at least 3 channels")
        if self.dataset_id not in PROTOCOL:
            raise ArgumentError(f"unknown dataset id {self.dataset_id}")


def snr_to_noise(snr_db):
    """Noise-to-signal RMS ratio giving ``snr_db`` decibels."""
    return float(10.0 ** (-snr_db / 20.0))


@dataclass
class SynthSubject:
    recording: Recording
    task: np.ndarray
    shared: np.ndarray
    loadings: np.ndarray
    baseline: np.ndarray
    spec: SynthSpec
    seed: int

    def truth_dict(self):
        return {
            "subject_id": self.recording.subject_id,
            "seed": self.seed,
            "spec": asdict(self.spec),
            "task_synergies": self.task.tolist(),
            "shared_synergies": self.shared.tolist(),
            "glove_loadings": self.loadings.tolist(),
            "glove_baseline": self.baseline.tolist(),
        }


def planted_synergies(task, shared, dof_pair):
    """Spatial factor ``[task a, b, c, d, shared dof1, shared dof2]`` for a DoF pair."""
    dof = get_dof_pair(dof_pair) if isinstance(dof_pair, str) else dof_pair
    cols = [task[:, m - 1] for m in dof.movement_ids] + [shared[:, d - 1] for d in dof.dofs]
    return np.column_stack(cols)


def _synergies(rng, spec):
    c = spec.channels
    per = max(1, c // 4)
    task = np.zeros((c, len(MOVEMENTS)))
    shared = np.zeros((c, len(DOFS)))
    for d, (a, b) in DOFS.items():
        # task a, task b and the shared synergy of one DoF use disjoint channels
        perm = rng.permutation(c)
        task[perm[:per], a - 1] = 0.5 + rng.random(per)
        task[perm[per:2 * per], b - 1] = 0.5 + rng.random(per)
        shared[perm[2 * per:3 * per], d - 1] = spec.shared_amp * (0.5 + rng.random(per))
    return task, shared


def synth_generate(spec=SynthSpec(), seed=0, subject_id="synth"):
    """Generate one synthetic subject.

    Movements 1..6 are each performed ``PROTOCOL[dataset_id][0]`` times in
    blocks (all repetitions of movement 1, then movement 2, ...), separated
    by rest. EMG noise is half-normal with RMS ``spec.noise`` times the
    RMS of the clean EMG during movement; glove noise is Gaussian with RMS
    ``spec.glove_noise`` times each sensor's deflection RMS.
    """
    if not isinstance(spec, SynthSpec):
        raise ArgumentError("spec must be a SynthSpec")
    rng = np.random.default_rng(seed)
    task, shared = _synergies(rng, spec)
    n_mov = len(MOVEMENTS)
    dof_of = {m: d for d, pair in DOFS.items() for m in pair}

    loadings = np.zeros((spec.sensors, n_mov))
    for d, (a, b) in DOFS.items():
        gain = spec.glove_gain * (0.2 + 0.8 * rng.random(spec.sensors))
        sign = rng.choice([-1.0, 1.0], size=spec.sensors)
        loadings[:, a - 1] = sign * gain
        loadings[:, b - 1] = -sign * gain * (0.6 + 0.8 * rng.random(spec.sensors))
    baseline = 50.0 + 150.0 * rng.random(spec.sensors)

    n_reps = PROTOCOL[spec.dataset_id][0]
    rate = spec.sample_rate
    rest = int(round(spec.rest_s * rate))
    labels, act = [np.zeros(rest, dtype=np.int64)], [np.zeros(rest)]
    for m in MOVEMENTS:
        for _ in range(n_reps):
            length = int(round(spec.move_s * rate * (1.0 + spec.move_jitter * (2 * rng.random() - 1))))
            length = max(length, 5)
            amp = 0.6 + 0.4 * rng.random()
            labels += [np.full(length, m, dtype=np.int64), np.zeros(rest, dtype=np.int64)]
            act += [amp * tukey(length, 0.6) + 1e-3, np.zeros(rest)]
    stimulus = np.concatenate(labels)
    level = np.concatenate(act)
    n = stimulus.size

    activations = np.zeros((n, n_mov))
    for m in MOVEMENTS:
        mask = stimulus == m
        activations[mask, m - 1] = level[mask]
    patterns = np.column_stack([task[:, m - 1] + shared[:, dof_of[m] - 1] for m in MOVEMENTS])
    emg = activations @ patterns.T
    if spec.noise > 0:
        moving = stimulus > 0
        sig_rms = np.sqrt(np.mean(emg[moving] ** 2))
        emg = emg + np.abs(rng.standard_normal(emg.shape)) * spec.noise * sig_rms

    deflection = activations @ loadings.T
    glove = baseline + deflection
    if spec.glove_noise > 0:
        defl_rms = np.sqrt(np.mean(deflection ** 2, axis=0))
        glove = glove + rng.standard_normal(glove.shape) * spec.glove_noise * defl_rms

    rec = Recording(
        sample_rate=rate,
        t=np.arange(n) / rate,
        emg=emg,
        glove=glove,
        stimulus=stimulus,
        subject_id=subject_id,
        dataset_id=spec.dataset_id,
        extra={"synthetic": True, "seed": seed},
    )
    return SynthSubject(rec, task, shared, loadings, baseline, spec, seed)
