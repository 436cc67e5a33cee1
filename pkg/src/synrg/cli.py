"""``synrg`` command line: synth, decompose, project, evaluate, report.

Exit status is 0 on success, 1 on data or schema errors and 2 on usage
errors. Numeric settings resolve as flags > ``--config`` JSON > defaults,
and the resolved values are written into every JSON artifact.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ArgumentError, DataError, SynrgError
from .evaluation import METHOD_LABELS, METHODS, EvalConfig, aggregate_report, control_signals, evaluate_subject, fit_method, subject_seed
from .pipeline import DOF_PAIRS, LENGTH_POLICIES, get_dof_pair, segment_by_stimulus, split_train_test
from .recording import ENVELOPE_RATE, discover_recordings, envelope_recording, load_recording, write_recording
from .synth import SynthSpec, snr_to_noise, synth_generate

DEFAULTS = {
    "seed": 0,
    "max_iters": 500,
    "rel_tol": 1e-6,
    "n_starts": 10,
    "lam": None,
    "k_min": 1e-4,
    "k_max": 1e4,
    "k_num": 25,
    "rms_window": 100.0,
    "rms_step": 10.0,
    "length_policy": "min",
}
TABLE_COLUMNS = [METHOD_LABELS[m] for m in METHODS]


class UsageError(SynrgError):
    pass


def _add_numeric(p):
    g = p.add_argument_group("numeric settings")
    g.add_argument("--config", type=Path, help="JSON file with default settings")
    g.add_argument("--seed", type=int)
    g.add_argument("--max-iters", dest="max_iters", type=int)
    g.add_argument("--rel-tol", dest="rel_tol", type=float)
    g.add_argument("--n-starts", dest="n_starts", type=int)
    g.add_argument("--lambda", dest="lam", type=float, help="SNMF sparsity weight (default 0.1 * mean EMG)")
    g.add_argument("--k-min", dest="k_min", type=float)
    g.add_argument("--k-max", dest="k_max", type=float)
    g.add_argument("--k-num", dest="k_num", type=int)
    g.add_argument("--rms-window", dest="rms_window", type=float, help="ms, raw recordings only")
    g.add_argument("--rms-step", dest="rms_step", type=float, help="ms, raw recordings only")
    g.add_argument("--length-policy", dest="length_policy", choices=LENGTH_POLICIES)


def build_parser():
    parser = argparse.ArgumentParser(prog="synrg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"synrg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write synthetic subjects with planted synergies")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subjects", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.0, help="EMG noise RMS relative to signal RMS")
    p.add_argument("--snr-db", dest="snr_db", type=float, help="overrides --noise")
    p.add_argument("--glove-noise", dest="glove_noise", type=float, default=0.0)
    p.add_argument("--dataset", type=int, choices=(1, 2), default=1)
    p.add_argument("--channels", type=int, default=SynthSpec.channels)

    p = sub.add_parser("decompose", help="fit one method on a recording's training data")
    p.add_argument("-i", "--input", type=Path, required=True, help="recording CSV")
    p.add_argument("-o", "--output", type=Path, required=True, help="model JSON")
    p.add_argument("--method", choices=METHODS, default="constd")
    p.add_argument("--dof", choices=sorted(DOF_PAIRS), default="DoF1-2")
    _add_numeric(p)

    p = sub.add_parser("project", help="write control signals for a recording")
    p.add_argument("-i", "--input", type=Path, required=True, help="recording CSV")
    p.add_argument("-m", "--model", type=Path, required=True)
    p.add_argument("-o", "--output", type=Path, required=True, help="controls CSV")
    p.add_argument("--part", choices=("test", "train"), default="test")
    _add_numeric(p)

    p = sub.add_parser("evaluate", help="run all methods on every subject and score glove reconstruction")
    p.add_argument("-i", "--input", type=Path, nargs="+", required=True, help="directories or recording CSVs")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--dof", choices=sorted(DOF_PAIRS), default="DoF1-2")
    p.add_argument("--methods", default=",".join(METHODS), help="comma-separated subset of " + ",".join(METHODS))
    _add_numeric(p)

    p = sub.add_parser("report", help="merge evaluate reports into the aggregate table")
    p.add_argument("-i", "--input", type=Path, nargs="+", required=True, help="report.json files or their directories")
    p.add_argument("-o", "--output", type=Path, required=True)
    return parser


def resolve_config(args):
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None) is not None:
        try:
            loaded = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _meta(command, cfg, seed, **extra):
    return {"tool": "synrg", "version": __version__, "command": command, "seed": seed,
            "config": cfg, **extra}


def _write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, allow_nan=False) + "\n", encoding="utf-8")


def _write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else repr(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _eval_config(cfg, methods=METHODS):
    return EvalConfig(max_iters=cfg["max_iters"], rel_tol=cfg["rel_tol"], n_starts=cfg["n_starts"],
                      lam=cfg["lam"], k_min=cfg["k_min"], k_max=cfg["k_max"], k_num=cfg["k_num"],
                      length_policy=cfg["length_policy"], methods=tuple(methods))


def prepare_recording(path, cfg):
    """Load a recording, RMS-enveloping it first if it is sampled above 100 Hz."""
    rec = load_recording(path)
    if rec.sample_rate > ENVELOPE_RATE:
        rec = envelope_recording(rec, cfg["rms_window"], cfg["rms_step"])
    elif np.any(rec.emg < 0):
        raise DataError(f"{path}: enveloped EMG must be non-negative")
    return rec


def cmd_synth(args):
    noise = snr_to_noise(args.snr_db) if args.snr_db is not None else args.noise
    spec = SynthSpec(channels=args.channels, dataset_id=args.dataset, noise=noise, glove_noise=args.glove_noise)
    seeds = np.random.SeedSequence(args.seed).spawn(args.subjects)
    out = args.output
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i, ss in enumerate(seeds, start=1):
        name = f"subject_{i:02d}"
        sub = synth_generate(spec, seed=int(ss.generate_state(1)[0]), subject_id=name)
        write_recording(sub.recording, out / f"{name}.csv")
        _write_json(out / "truth" / f"{name}.json", sub.truth_dict())
        names.append(name)
    cfg = {"subjects": args.subjects, "spec": asdict(spec), "snr_db": args.snr_db}
    _write_json(out / "truth" / "manifest.json", {"meta": _meta("synth", cfg, args.seed), "subjects": names})
    return 0


def cmd_decompose(args):
    cfg = resolve_config(args)
    rec = prepare_recording(args.input, cfg)
    dof = get_dof_pair(args.dof)
    split = split_train_test(segment_by_stimulus(rec, dof.movement_ids), rec.dataset_id)
    ecfg = _eval_config(cfg)
    fitted = fit_method(args.method, split, dof, ecfg, subject_seed(cfg["seed"], rec.subject_id, args.method))
    doc = {"meta": _meta("decompose", cfg, cfg["seed"], input=str(args.input)),
           "subject": rec.subject_id, "dataset": rec.dataset_id, **fitted}
    _write_json(args.output, doc)
    return 0


def cmd_project(args):
    cfg = resolve_config(args)
    try:
        fitted = json.loads(args.model.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model {args.model}: {exc}") from exc
    rec = prepare_recording(args.input, cfg)
    dof = get_dof_pair(fitted["dof_pair"])
    split = split_train_test(segment_by_stimulus(rec, dof.movement_ids), rec.dataset_id)
    emg, _, labels = split.stream(dof.movement_ids, args.part)
    controls = control_signals(fitted, emg)
    header = ["sample", "stimulus"] + [f"c_{j}" for j in range(1, controls.shape[1] + 1)]
    rows = [[str(i), str(int(labels[i]))] + [float(v) for v in controls[i]] for i in range(controls.shape[0])]
    _write_csv(args.output, header, rows)
    _write_json(args.output.with_suffix(".json"),
                {"meta": _meta("project", cfg, fitted.get("meta", {}).get("seed"),
                               input=str(args.input), model=str(args.model), part=args.part)})
    return 0


def _collect_inputs(paths):
    files = []
    for p in paths:
        if p.is_dir():
            files.extend(discover_recordings(p))
        elif p.exists():
            files.append(p)
        else:
            raise DataError(f"{p}: no such file or directory")
    if not files:
        raise DataError("no recordings found in " + ", ".join(map(str, paths)))
    return files


def _evaluate_one(job):
    path, dof, ecfg, cfg = job
    rec = prepare_recording(path, cfg)
    res = evaluate_subject(rec, dof, ecfg, cfg["seed"])
    return res.cells(), {"subject": res.subject_id, "k": res.k}


def _threads(n_jobs):
    env = os.environ.get("SYNRG_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise UsageError(f"SYNRG_THREADS must be an integer, got {env!r}") from None
    return max(1, min(cap, n_jobs))


def _write_outputs(out, reports, meta):
    _write_json(out / "report.json", {"meta": meta, "reports": reports})
    rows, violin = [], []
    for rep in reports:
        agg = rep["aggregates"]
        rows.append([rep["dof_pair"], str(rep["dataset"])]
                    + [agg[c]["mean"] if c in agg else "" for c in TABLE_COLUMNS])
        top = set(rep["top_sensors"])
        violin += [[c["subject"], c["method"], str(c["sensor"]), c["r2"]]
                   for c in rep["cells"] if c["sensor"] in top]
    _write_csv(out / "table.csv", ["dof_pair", "dataset"] + TABLE_COLUMNS, rows)
    _write_csv(out / "violin.csv", ["subject", "method", "sensor", "r2"], violin)


def _group_reports(cells):
    groups = {}
    for c in cells:
        groups.setdefault((c["dof_pair"], c["dataset"]), []).append(c)
    return [aggregate_report(groups[key]).to_dict() for key in sorted(groups)]


def cmd_evaluate(args):
    cfg = resolve_config(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"unknown methods {bad}; choose from {METHODS}")
    files = _collect_inputs(args.input)
    ecfg = _eval_config(cfg, methods)
    jobs = [(f, args.dof, ecfg, cfg) for f in files]
    n = _threads(len(jobs))
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_evaluate_one, jobs))
    else:
        results = [_evaluate_one(j) for j in jobs]
    cells = [c for res in results for c in res[0]]
    subjects = [res[0][0]["subject"] for res in results]
    if len(set(subjects)) != len(subjects):
        raise DataError("duplicate subject ids among inputs")
    meta = _meta("evaluate", {**cfg, "dof": args.dof, "methods": methods}, cfg["seed"],
                 inputs=[str(f) for f in files], ridge_k=[res[1] for res in results])
    _write_outputs(args.output, _group_reports(cells), meta)
    return 0


def cmd_report(args):
    paths = []
    for p in args.input:
        paths.append(p / "report.json" if p.is_dir() else p)
    cells, sources = [], []
    for p in paths:
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read report {p}: {exc}") from exc
        for rep in doc.get("reports", []):
            cells.extend(rep["cells"])
        sources.append({"path": str(p), "seed": doc.get("meta", {}).get("seed")})
    if not cells:
        raise DataError("no cells in the given reports")
    seen = set()
    for c in cells:
        key = (c["dof_pair"], c["dataset"], c["subject"], c["method"], c["sensor"])
        if key in seen:
            raise DataError(f"duplicate cell {key} across reports")
        seen.add(key)
    seeds = sorted({s["seed"] for s in sources if s["seed"] is not None})
    meta = _meta("report", {"inputs": sources}, seeds[0] if len(seeds) == 1 else seeds)
    _write_outputs(args.output, _group_reports(cells), meta)
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "decompose": cmd_decompose,
    "project": cmd_project,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"synrg: error: {exc}", file=sys.stderr)
        return 2
    except (SynrgError, ArgumentError) as exc:
        print(f"synrg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
