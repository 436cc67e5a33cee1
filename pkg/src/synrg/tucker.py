"""Constrained and plain Tucker decomposition by alternating least squares.

The constrained model keeps the core tensor and the movement-mode factor
fixed and only estimates the temporal (``b1``) and spatial (``b2``) factors,
clipping negatives after every update. With the default core each movement
slab is explained by its own task synergy plus one synergy shared with the
other movement of the same degree of freedom.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ArgumentError
from .tensor import as_tensor, explained_variance, lstsq, multi_mode_product, unfold

__all__ = [
    "FitConfig",
    "TuckerModel",
    "shared_synergy_core",
    "movement_indicator",
    "constd_fit",
    "project_test",
    "project_matrix",
    "unconstrained_tucker_fit",
    "match_columns",
]

DEFAULT_GROUPS = ((1, 2), (3, 4))


@dataclass(frozen=True)
class FitConfig:
    max_iters: int = 500
    rel_tol: float = 1e-6
    n_starts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ArgumentError("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise ArgumentError("rel_tol must be > 0")
        if self.n_starts < 1:
            raise ArgumentError("n_starts must be >= 1")


def shared_synergy_core(groups=DEFAULT_GROUPS):
    """Fixed 0/1 core wiring task-specific and shared synergies.

    ``groups`` lists, per degree of freedom, the 1-based movement indices that
    share a synergy. For ``((1, 2), (3, 4))`` this gives the 4x6x4 core with
    ``g[n,n,n] = 1``, ``g[n,5,n] = 1`` for n in {1,2} and ``g[n,6,n] = 1`` for
    n in {3,4}.
    """
    members = [m for g in groups for m in g]
    n_mov = max(members)
    if sorted(members) != list(range(1, n_mov + 1)):
        raise ArgumentError(f"groups must partition movements 1..{n_mov}, got {groups}")
    core = np.zeros((n_mov, n_mov + len(groups), n_mov))
    for n in range(n_mov):
        core[n, n, n] = 1.0
    for g, group in enumerate(groups):
        for m in group:
            core[m - 1, n_mov + g, m - 1] = 1.0
    return core


def movement_indicator(n_movements):
    """Movement-mode factor: 1 for the considered movement, 0 otherwise."""
    return np.eye(n_movements)


@dataclass
class TuckerModel:
    core: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray
    fit: float
    seed: int
    config: dict = field(default_factory=dict)
    history: list = field(default_factory=list, repr=False)

    @property
    def dims(self):
        return (self.b1.shape[0], self.b2.shape[0], self.b3.shape[0])

    @property
    def ranks(self):
        return self.core.shape

    def reconstruct(self, b1=None, b2=None):
        b1 = self.b1 if b1 is None else b1
        b2 = self.b2 if b2 is None else b2
        return multi_mode_product(self.core, (b1, b2, self.b3))

    def spatial_patterns(self):
        """Channel pattern driven by each temporal component (channels x J1)."""
        return np.einsum("ajk,cj,mk->ca", self.core, self.b2, self.b3)

    def to_dict(self):
        return {
            "dims": list(self.dims),
            "ranks": list(self.ranks),
            "core": self.core.tolist(),
            "b1": self.b1.tolist(),
            "b2": self.b2.tolist(),
            "b3": self.b3.tolist(),
            "fit": self.fit,
            "seed": self.seed,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            core=np.asarray(d["core"], dtype=np.float64),
            b1=np.asarray(d["b1"], dtype=np.float64),
            b2=np.asarray(d["b2"], dtype=np.float64),
            b3=np.asarray(d["b3"], dtype=np.float64),
            fit=float(d["fit"]),
            seed=int(d["seed"]),
            config=dict(d.get("config", {})),
        )

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _check_nonneg(x):
    if np.any(x < 0):
        raise ArgumentError("tensor entries must be non-negative")


def _ls_update(current, m, target):
    """Least-squares solution of ``B @ m ~= target`` nearest to ``current``.

    The spatial subproblem is rank deficient under the shared-synergy core (a
    shared synergy and the two task synergies it pairs with can trade mass).
    Solving for the correction keeps the iterate on the solution set closest
    to where it was, instead of jumping to the minimum-norm solution, which
    clipping would then push off the data.
    """
    resid = target - current @ m
    return current + lstsq(m.T, resid.T).T


def _constd_run(x, core, b3, x1, x2, g1, g2, rng, cfg):
    i1, i2, _ = x.shape
    j1, j2, _ = core.shape
    b1 = rng.random((i1, j1))
    b2 = rng.random((i2, j2))
    total = np.sum(x * x)
    prev = None
    history = []
    for _ in range(cfg.max_iters):
        m1 = g1 @ np.kron(b3, b2).T
        b1 = np.maximum(_ls_update(b1, m1, x1), 0.0)
        m2 = g2 @ np.kron(b3, b1).T
        b2 = np.maximum(_ls_update(b2, m2, x2), 0.0)
        resid = x2 - b2 @ m2
        ev = float(1.0 - np.sum(resid * resid) / total)
        history.append(ev)
        if prev is not None and abs(ev - prev) < cfg.rel_tol * max(abs(prev), 1e-300):
            break
        prev = ev
    return b1, b2, history


def constd_fit(x, core=None, b3_fixed=None, cfg=FitConfig()):
    """Fit the constrained Tucker model with ``cfg.n_starts`` random restarts.

    Parameters
    ----------
    x : array_like, shape (time, channels, movements)
        Non-negative training tensor.
    core : ndarray, optional
        Fixed core; defaults to :func:`shared_synergy_core` for 4 movements.
    b3_fixed : ndarray, optional
        Fixed movement-mode factor; defaults to the identity indicator.
    cfg : FitConfig

    Returns
    -------
    TuckerModel
        The restart with the highest training explained variance (the lowest
        restart index wins ties). ``fit`` is computed on the clipped factors.
    """
    x = as_tensor(x)
    core = shared_synergy_core() if core is None else np.asarray(core, dtype=np.float64)
    b3 = movement_indicator(core.shape[2]) if b3_fixed is None else np.asarray(b3_fixed, dtype=np.float64)
    if core.ndim != 3:
        raise ArgumentError("core must be a 3rd-order tensor")
    if b3.shape != (x.shape[2], core.shape[2]):
        raise ArgumentError(f"b3 shape {b3.shape} incompatible with tensor {x.shape} and core {core.shape}")
    _check_nonneg(x)
    if np.sum(x * x) == 0.0:
        # raises UndefinedMetricError
        explained_variance(x, x)

    x1, x2 = unfold(x, 1), unfold(x, 2)
    g1, g2 = unfold(core, 1), unfold(core, 2)
    rng = np.random.default_rng(cfg.seed)
    best = None
    for start in range(cfg.n_starts):
        b1, b2, hist = _constd_run(x, core, b3, x1, x2, g1, g2, rng, cfg)
        fit = explained_variance(x, multi_mode_product(core, (b1, b2, b3)))
        if best is None or fit > best[0]:
            best = (fit, b1, b2, hist, start)
    fit, b1, b2, hist, start = best
    return TuckerModel(
        core=core.copy(),
        b1=b1,
        b2=b2,
        b3=b3.copy(),
        fit=fit,
        seed=cfg.seed,
        config={**asdict(cfg), "best_start": start, "iterations": len(hist)},
        history=hist,
    )


def project_test(model, x_test, clip=True):
    """Temporal components of ``x_test`` with core, ``b2`` and ``b3`` held fixed.

    Solves ``unfold(x_test, 1) ~= B @ unfold(G, 1) @ kron(b3, b2).T`` for ``B``
    in the least-squares sense. The time dimension of ``x_test`` may differ
    from the training tensor.
    """
    x_test = as_tensor(x_test)
    if x_test.shape[1:] != (model.b2.shape[0], model.b3.shape[0]):
        raise ArgumentError(
            f"test tensor {x_test.shape} does not match model channels/movements "
            f"{(model.b2.shape[0], model.b3.shape[0])}"
        )
    m = unfold(model.core, 1) @ np.kron(model.b3, model.b2).T
    b1 = lstsq(m.T, unfold(x_test, 1).T).T
    return np.maximum(b1, 0.0) if clip else b1


def project_matrix(model, emg, clip=True):
    """Control signals for a continuous ``time x channels`` EMG recording.

    The movement label is unknown at control time, so the recording is placed
    in every movement slab and projected with :func:`project_test`; column k
    is then the projection onto movement k's spatial pattern.
    """
    emg = np.asarray(emg, dtype=np.float64)
    if emg.ndim != 2:
        raise ArgumentError("emg must be a time x channels matrix")
    x = np.repeat(emg[:, :, None], model.b3.shape[0], axis=2)
    return project_test(model, x, clip=clip)


def unconstrained_tucker_fit(x, ranks, cfg=FitConfig(n_starts=1)):
    """Plain Tucker ALS: each sweep updates b1, b2, b3 and the core in turn.

    Every block update is an exact least-squares minimiser, so the loss is
    non-increasing across sweeps.
    """
    x = as_tensor(x)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != 3 or any(r < 1 or r > d for r, d in zip(ranks, x.shape)):
        raise ArgumentError(f"ranks {ranks} must satisfy 1 <= r_n <= dims {x.shape}")
    total = np.sum(x * x)
    if total == 0.0:
        explained_variance(x, x)
    unf = [unfold(x, n) for n in (1, 2, 3)]
    rng = np.random.default_rng(cfg.seed)
    best = None
    for start in range(cfg.n_starts):
        b = [rng.random((d, r)) for d, r in zip(x.shape, ranks)]
        g = rng.random(ranks)
        history = []
        prev = None
        for _ in range(cfg.max_iters):
            m = unfold(g, 1) @ np.kron(b[2], b[1]).T
            b[0] = lstsq(m.T, unf[0].T).T
            m = unfold(g, 2) @ np.kron(b[2], b[0]).T
            b[1] = lstsq(m.T, unf[1].T).T
            m = unfold(g, 3) @ np.kron(b[1], b[0]).T
            b[2] = lstsq(m.T, unf[2].T).T
            # Kronecker-structured least squares separates into per-mode pseudo-inverses
            g = multi_mode_product(x, [np.linalg.pinv(f) for f in b])
            ev = explained_variance(x, multi_mode_product(g, b))
            history.append(ev)
            if prev is not None and abs(ev - prev) < cfg.rel_tol * max(abs(prev), 1e-300):
                break
            prev = ev
        if best is None or history[-1] > best.fit:
            best = TuckerModel(
                core=g, b1=b[0], b2=b[1], b3=b[2], fit=history[-1], seed=cfg.seed,
                config={**asdict(cfg), "best_start": start, "iterations": len(history)},
                history=history,
            )
    return best


def match_columns(reference, estimate):
    """Greedy column matching by absolute cosine similarity.

    Returns ``(pairs, cosines)`` where ``pairs[i] = (ref_col, est_col)``; the
    globally most similar remaining pair is taken first.
    """
    ref = np.asarray(reference, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    rn = ref / np.maximum(np.linalg.norm(ref, axis=0), 1e-300)
    en = est / np.maximum(np.linalg.norm(est, axis=0), 1e-300)
    sim = np.abs(rn.T @ en)
    pairs, cosines = [], []
    free_r = set(range(ref.shape[1]))
    free_e = set(range(est.shape[1]))
    while free_r and free_e:
        i, j = max(((i, j) for i in free_r for j in free_e), key=lambda ij: (sim[ij], -ij[0], -ij[1]))
        pairs.append((i, j))
        cosines.append(float(sim[i, j]))
        free_r.discard(i)
        free_e.discard(j)
    order = np.argsort([p[0] for p in pairs])
    return [pairs[k] for k in order], np.array(cosines)[order]
