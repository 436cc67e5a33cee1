"""Glove reconstruction protocol: control signals -> ridge -> R^2, plus the
cross-subject report (sensor ranking, method means, t-tests)."""

import zlib
from dataclasses import dataclass, field

import numpy as np

from . import nmf as nmf_mod
from . import tucker
from .errors import ArgumentError
from .pipeline import DOFS, build_dof_tensor, get_dof_pair, random_synergies, segment_by_stimulus, split_train_test
from .ridge import cv_optimize_k, k_grid, r_squared, ridge_fit
from .stats import welch_t_test

__all__ = [
    "METHODS",
    "METHOD_LABELS",
    "EvalConfig",
    "SubjectResult",
    "fit_method",
    "control_signals",
    "evaluate_subject",
    "rank_sensors",
    "EvalReport",
    "aggregate_report",
]

METHODS = ("constd", "snmf", "nmf", "random")
METHOD_LABELS = {"constd": "consTD", "snmf": "SNMF", "nmf": "NMF", "random": "Random"}
BASELINE = "random"


@dataclass
class EvalConfig:
    max_iters: int = 500
    rel_tol: float = 1e-6
    n_starts: int = 10
    lam: float = None
    lam_scale: float = 0.1
    k_min: float = 1e-4
    k_max: float = 1e4
    k_num: int = 25
    length_policy: str = "min"
    methods: tuple = METHODS

    def fit_config(self, seed):
        return tucker.FitConfig(max_iters=self.max_iters, rel_tol=self.rel_tol,
                                n_starts=self.n_starts, seed=seed)


def subject_seed(seed, subject_id, method):
    """Stable per-(subject, method) seed derived from the run seed."""
    key = zlib.crc32(f"{subject_id}/{method}".encode("utf-8"))
    return int(np.random.SeedSequence([int(seed), key]).generate_state(1)[0])


def fit_method(method, split, dof, cfg, seed):
    """Train one synergy model on the training split.

    Returns a JSON-ready dict describing the model; :func:`control_signals`
    consumes it.
    """
    dof = get_dof_pair(dof) if isinstance(dof, str) else dof
    fcfg = cfg.fit_config(seed)
    if method == "constd":
        x = build_dof_tensor(split, dof, cfg.length_policy)
        model = tucker.constd_fit(x, tucker.shared_synergy_core(dof.groups),
                                  tucker.movement_indicator(len(dof.movement_ids)), fcfg)
        return {"method": method, "dof_pair": dof.name, "model": model.to_dict()}

    per_dof = []
    for i, d in enumerate(dof.dofs):
        a, b = DOFS[d]
        if method == "random":
            w = random_synergies(split.train[a].shape[1], 2, seed + i)
            per_dof.append({"dof": d, "movements": [a, b], "w": w.tolist()})
            continue
        x = np.vstack([split.train[a], split.train[b]]).T
        if method == "nmf":
            f = nmf_mod.nmf_fit(x, 2, fcfg)
        elif method == "snmf":
            lam = cfg.lam if cfg.lam is not None else cfg.lam_scale * float(x.mean())
            f = nmf_mod.snmf_fit(x, 2, lam, fcfg)
        else:
            raise ArgumentError(f"unknown method {method!r}; choose from {METHODS}")
        order = nmf_mod.assign_to_movements(f.h, [split.train[a].shape[0], split.train[b].shape[0]])
        per_dof.append({"dof": d, "movements": [a, b], "w": f.w[:, order].tolist(),
                        "factorization": f.to_dict(), "order": order})
    return {"method": method, "dof_pair": dof.name, "per_dof": per_dof}


def control_signals(fitted, emg):
    """Non-negative control signals (time x 4) for a ``time x channels`` stream."""
    if fitted["method"] == "constd":
        model = tucker.TuckerModel.from_dict(fitted["model"])
        return tucker.project_matrix(model, emg)
    cols = [nmf_mod.project_controls(np.asarray(p["w"]), np.asarray(emg).T) for p in fitted["per_dof"]]
    return np.vstack(cols).T


@dataclass
class SubjectResult:
    subject_id: str
    dataset_id: int
    dof_pair: str
    r2: dict
    k: dict
    models: dict = field(default_factory=dict, repr=False)

    def cells(self):
        return [
            {"subject": self.subject_id, "dataset": self.dataset_id, "dof_pair": self.dof_pair,
             "method": METHOD_LABELS[m], "sensor": s + 1, "r2": float(v)}
            for m in self.r2 for s, v in enumerate(self.r2[m])
        ]


def evaluate_subject(rec, dof, cfg=EvalConfig(), seed=0):
    """Run every method on one recording and score glove reconstruction.

    For each method the training EMG stream of the DoF pair is turned into
    control signals, one ridge model per glove sensor is fitted with k chosen
    by contiguous 10-fold CV, and R^2 is measured on the test stream.
    """
    dof = get_dof_pair(dof) if isinstance(dof, str) else dof
    reps = segment_by_stimulus(rec, dof.movement_ids)
    split = split_train_test(reps, rec.dataset_id)
    emg_tr, glove_tr, _ = split.stream(dof.movement_ids, "train")
    emg_te, glove_te, _ = split.stream(dof.movement_ids, "test")
    grid = k_grid(cfg.k_min, cfg.k_max, cfg.k_num)

    r2, ks, models = {}, {}, {}
    for method in cfg.methods:
        fitted = fit_method(method, split, dof, cfg, subject_seed(seed, rec.subject_id, method))
        c_tr = control_signals(fitted, emg_tr)
        c_te = control_signals(fitted, emg_te)
        k_best = np.atleast_1d(cv_optimize_k(c_tr, glove_tr, grid))
        scores = []
        for s in range(glove_tr.shape[1]):
            model = ridge_fit(c_tr, glove_tr[:, s], k_best[s], sensor_id=s + 1)
            scores.append(r_squared(glove_te[:, s], model.predict(c_te)))
        r2[method] = scores
        ks[method] = [float(k) for k in k_best]
        models[method] = fitted
    return SubjectResult(rec.subject_id, rec.dataset_id, dof.name, r2, ks, models)


def _cell_table(cells):
    methods = sorted({c["method"] for c in cells}, key=_method_order)
    subjects = sorted({c["subject"] for c in cells})
    sensors = sorted({c["sensor"] for c in cells})
    table = {}
    for c in cells:
        key = (c["subject"], c["method"], c["sensor"])
        if key in table:
            raise ArgumentError(f"duplicate cell {key}")
        table[key] = c["r2"]
    return methods, subjects, sensors, table


def _method_order(label):
    order = [METHOD_LABELS[m] for m in METHODS]
    return (order.index(label) if label in order else len(order), label)


def rank_sensors(cells, top=3):
    """Sensors with the highest mean R^2 over all subjects and methods.

    Ties go to the lower sensor index. Every (subject, method, sensor) cell
    must be present.
    """
    if not cells:
        raise ArgumentError("no cells to rank")
    methods, subjects, sensors, table = _cell_table(cells)
    means = []
    for s in sensors:
        vals = []
        for subj in subjects:
            for m in methods:
                if (subj, m, s) not in table:
                    raise ArgumentError(f"missing R^2 cell for subject {subj}, method {m}, sensor {s}")
                vals.append(table[(subj, m, s)])
        means.append((-float(np.mean(vals)), s))
    if len(sensors) < top:
        raise ArgumentError(f"need at least {top} sensors")
    return [s for _, s in sorted(means)[:top]]


@dataclass
class EvalReport:
    dof_pair: str
    dataset: int
    cells: list
    top_sensors: list
    per_subject: dict
    aggregates: dict
    ttests: dict

    def to_dict(self):
        return {
            "dof_pair": self.dof_pair,
            "dataset": self.dataset,
            "top_sensors": self.top_sensors,
            "aggregates": self.aggregates,
            "ttests": self.ttests,
            "per_subject": self.per_subject,
            "cells": self.cells,
        }


def aggregate_report(cells, top_sensors=None):
    """Summarise one (DoF pair, dataset) group of cells.

    Per method: the mean and median R^2 over subjects x top-3 sensors, and a
    Welch t-test of the per-subject means against the random baseline.
    """
    if not cells:
        raise ArgumentError("no cells to aggregate")
    groups = {(c["dof_pair"], c["dataset"]) for c in cells}
    if len(groups) != 1:
        raise ArgumentError(f"cells span several (dof_pair, dataset) groups: {sorted(groups)}")
    dof_pair, dataset = groups.pop()
    top = list(top_sensors) if top_sensors is not None else rank_sensors(cells)
    methods, subjects, _, table = _cell_table(cells)

    per_subject, aggregates = {}, {}
    for m in methods:
        vals = np.array([[table[(subj, m, s)] for s in top] for subj in subjects])
        per_subject[m] = {subj: float(v) for subj, v in zip(subjects, vals.mean(axis=1))}
        aggregates[m] = {"mean": float(vals.mean()), "median": float(np.median(vals)),
                         "n_subjects": len(subjects)}

    ttests = {}
    base = METHOD_LABELS[BASELINE]
    if base in per_subject and len(subjects) >= 2:
        b = list(per_subject[base].values())
        for m in methods:
            if m != base:
                ttests[m] = welch_t_test(list(per_subject[m].values()), b).to_dict()
    ordered = sorted(cells, key=lambda c: (c["subject"], _method_order(c["method"]), c["sensor"]))
    return EvalReport(dof_pair, dataset, ordered, top, per_subject, aggregates, ttests)
