"""Matrix-factorisation synergy baselines: NMF and sparse NMF.

Data matrices are ``channels x time``. ``w`` holds synergies as columns
(channels x r) and ``h`` the weighting functions as rows (r x time).
"""

import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import nnls as _scipy_nnls

from .errors import ArgumentError, NumericError
from .tucker import FitConfig

__all__ = [
    "EPS",
    "SynergyFactorization",
    "nnls",
    "nmf_objective",
    "nmf_fit",
    "snmf_fit",
    "project_controls",
    "assign_to_movements",
]

EPS = 1e-12
_ENUM_MAX_RANK = 10


@dataclass
class SynergyFactorization:
    w: np.ndarray
    h: np.ndarray
    lam: float
    final_loss: float
    seed: int
    config: dict = field(default_factory=dict)
    history: list = field(default_factory=list, repr=False)

    @property
    def r(self):
        return self.w.shape[1]

    def to_dict(self):
        return {
            "w": self.w.tolist(),
            "h": self.h.tolist(),
            "r": self.r,
            "lambda": self.lam,
            "final_loss": self.final_loss,
            "seed": self.seed,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            w=np.asarray(d["w"], dtype=np.float64),
            h=np.asarray(d["h"], dtype=np.float64),
            lam=float(d["lambda"]),
            final_loss=float(d["final_loss"]),
            seed=int(d["seed"]),
            config=dict(d.get("config", {})),
        )

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _check_data(x, r):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ArgumentError("data must be a channels x time matrix")
    if not np.all(np.isfinite(x)):
        raise NumericError("data contains non-finite entries")
    if np.any(x < 0):
        raise ArgumentError("data must be non-negative")
    if int(r) != r or r < 1:
        raise ArgumentError(f"rank must be a positive integer, got {r!r}")
    return x


def nnls(a, b):
    """Non-negative least squares for many right-hand sides at once.

    Returns ``X >= 0`` (``a.shape[1] x b.shape[1]``) minimising
    ``||a @ X - b||_F``. For small ``a.shape[1]`` every passive set is
    enumerated: the optimum is the best feasible unconstrained solution over
    all column subsets. Larger problems fall back to Lawson-Hanson per column.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    if a.shape[0] != b.shape[0]:
        raise ArgumentError(f"row mismatch: {a.shape[0]} vs {b.shape[0]}")
    r, n = a.shape[1], b.shape[1]
    if r > _ENUM_MAX_RANK:
        x = np.column_stack([_scipy_nnls(a, b[:, j])[0] for j in range(n)])
        return x[:, 0] if vector else x

    x_best = np.zeros((r, n))
    obj_best = np.sum(b * b, axis=0)
    for size in range(1, r + 1):
        for subset in itertools.combinations(range(r), size):
            cols = list(subset)
            sol, *_ = np.linalg.lstsq(a[:, cols], b, rcond=None)
            feasible = np.all(sol >= 0, axis=0)
            if not feasible.any():
                continue
            resid = a[:, cols] @ sol - b
            obj = np.sum(resid * resid, axis=0)
            better = feasible & (obj < obj_best)
            if better.any():
                obj_best[better] = obj[better]
                x_best[:, better] = 0.0
                x_best[np.ix_(cols, np.flatnonzero(better))] = sol[:, better]
    return x_best[:, 0] if vector else x_best


def nmf_objective(x, w, h, lam=0.0):
    """``0.5 * ||x - w h||_F^2 + lam * sum_j ||h[:, j]||_1^2``."""
    resid = x - w @ h
    obj = 0.5 * float(np.sum(resid * resid))
    if lam:
        obj += lam * float(np.sum(np.sum(np.abs(h), axis=0) ** 2))
    return obj


def _init(rng, x, r):
    scale = np.sqrt(max(float(x.mean()), EPS) / r)
    w = rng.random((x.shape[0], r)) * scale
    h = rng.random((r, x.shape[1])) * scale
    return w, h


def _mu_run(x, w, h, cfg):
    history = [nmf_objective(x, w, h)]
    for _ in range(cfg.max_iters):
        h = h * (w.T @ x) / (w.T @ w @ h + EPS)
        history.append(nmf_objective(x, w, h))
        w = w * (x @ h.T) / (w @ (h @ h.T) + EPS)
        history.append(nmf_objective(x, w, h))
        prev, cur = history[-3], history[-1]
        if prev - cur <= cfg.rel_tol * max(prev, EPS):
            break
    return w, h, history


def nmf_fit(x, r, cfg=FitConfig()):
    """Classic NMF by Lee-Seung multiplicative updates.

    Minimises ``0.5 * ||x - w h||_F^2`` over non-negative ``w``, ``h``. Each
    of ``cfg.n_starts`` restarts draws uniform random factors; the restart
    with the lowest final loss is returned. ``history`` records the loss after
    every half-update and is non-increasing.
    """
    x = _check_data(x, r)
    rng = np.random.default_rng(cfg.seed)
    best = None
    for start in range(cfg.n_starts):
        w, h = _init(rng, x, r)
        w, h, hist = _mu_run(x, w, h, cfg)
        loss = nmf_objective(x, w, h)
        if best is None or loss < best[0]:
            best = (loss, w, h, hist, start)
    loss, w, h, hist, start = best
    return SynergyFactorization(
        w=w, h=h, lam=0.0, final_loss=loss, seed=cfg.seed,
        config={**asdict(cfg), "method": "nmf", "best_start": start, "iterations": (len(hist) - 1) // 2},
        history=hist,
    )


def _snmf_run(x, w, h, lam, cfg):
    r = w.shape[1]
    aug_row = np.full((1, r), np.sqrt(2.0 * lam))
    x_aug = np.vstack([x, np.zeros((1, x.shape[1]))])
    history = [nmf_objective(x, w, h, lam)]
    for _ in range(cfg.max_iters):
        w = nnls(h.T, x.T).T
        norms = np.linalg.norm(w, axis=0)
        keep = norms > 0
        w[:, keep] /= norms[keep]
        h = nnls(np.vstack([w, aug_row]), x_aug)
        history.append(nmf_objective(x, w, h, lam))
        prev, cur = history[-2], history[-1]
        if abs(prev - cur) <= cfg.rel_tol * max(prev, EPS):
            break
    return w, h, history


def snmf_fit(x, r, lam, cfg=FitConfig()):
    """Sparse NMF with an L1-squared penalty on the weighting functions.

    Minimises ``0.5 * ||x - w h||_F^2 + lam * sum_j ||h[:, j]||_1^2`` by
    alternating non-negative least squares. The h-step solves the augmented
    system ``[w; sqrt(2 lam) 1^T] h ~= [x; 0]``. After each w-step the
    synergies are rescaled to unit norm; without it the penalty could be
    driven to zero by inflating ``w`` and shrinking ``h``.
    """
    x = _check_data(x, r)
    if not lam > 0:
        raise ArgumentError(f"lambda must be > 0, got {lam!r}")
    rng = np.random.default_rng(cfg.seed)
    best = None
    for start in range(cfg.n_starts):
        w, h = _init(rng, x, r)
        w, h, hist = _snmf_run(x, w, h, lam, cfg)
        loss = nmf_objective(x, w, h, lam)
        if best is None or loss < best[0]:
            best = (loss, w, h, hist, start)
    loss, w, h, hist, start = best
    return SynergyFactorization(
        w=w, h=h, lam=float(lam), final_loss=loss, seed=cfg.seed,
        config={**asdict(cfg), "method": "snmf", "best_start": start, "iterations": len(hist) - 1},
        history=hist,
    )


def project_controls(f, x_test):
    """Non-negative control signals of ``x_test`` (channels x time) on ``f.w``."""
    w = f.w if isinstance(f, SynergyFactorization) else np.asarray(f, dtype=np.float64)
    x_test = np.asarray(x_test, dtype=np.float64)
    if x_test.ndim != 2 or x_test.shape[0] != w.shape[0]:
        raise ArgumentError(f"test data {x_test.shape} does not match {w.shape[0]} channels")
    return nnls(w, x_test)


def assign_to_movements(h, segment_lengths):
    """Order synergies by the movement they belong to.

    ``h`` covers the concatenated training segments whose lengths are given in
    movement order. Each synergy's mean activation over each segment is
    normalised by its overall mean, and the one-to-one assignment with the
    largest total is chosen (the earliest permutation in column order wins
    ties). Returns ``order`` with ``order[k]`` the synergy for movement ``k``.
    """
    h = np.asarray(h, dtype=np.float64)
    bounds = np.cumsum([0] + list(segment_lengths))
    if bounds[-1] != h.shape[1]:
        raise ArgumentError("segment lengths do not cover the weighting functions")
    if h.shape[0] != len(segment_lengths):
        raise ArgumentError("need exactly one synergy per movement")
    means = np.array([[h[i, bounds[k]:bounds[k + 1]].mean() for k in range(len(segment_lengths))]
                      for i in range(h.shape[0])])
    means /= np.maximum(h.mean(axis=1, keepdims=True), EPS)
    best, best_score = None, -np.inf
    for perm in itertools.permutations(range(h.shape[0])):
        score = sum(means[perm[k], k] for k in range(len(perm)))
        if score > best_score + 1e-12:
            best, best_score = perm, score
    return list(best)
