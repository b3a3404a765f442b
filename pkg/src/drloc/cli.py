"""Command-line entry point: gen-data, train-dqn, train-fingerprint, eval, report.

Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, config, dataset, experiment, metrics
from .baselines import FingerprintModel
from .dqn import TrainingDiverged
from .env import Normalization
from .neural import WEIGHTS_VERSION, load_weights, save_weights

log = logging.getLogger("drloc")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
MANIFEST_VERSION = 1
METHODS = ("dqn", "mlat", "fingerprint")


class DataError(Exception):
    pass


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: Path, command: str, cfg, artifacts: dict[str, Path], t0: float, results=None) -> Path:
    doc = {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "drloc_version": __version__,
        "config": cfg.to_dict() if cfg is not None else None,
        "config_hash": cfg.hash() if cfg is not None else None,
        "format_versions": {
            "config": config.FORMAT_VERSION,
            "dataset": dataset.DATASET_VERSION,
            "weights": WEIGHTS_VERSION,
        },
        "artifacts": {k: {"path": p.name, "sha256": _sha256(p)} for k, p in sorted(artifacts.items())},
        "duration_s": round(time.time() - t0, 3),
        "results": results or {},
    }
    path = out / f"manifest.{command}.json"
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _load_config(args) -> config.ExperimentConfig:
    cfg = config.load(args.config) if args.config else config.desk_scale()
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise config.ConfigError("seed", "must be an unsigned 64-bit integer")
        cfg.seed = args.seed
    return cfg.validate()


def _load_dataset(path) -> dataset.Dataset:
    if path is None:
        raise DataError("--dataset is required")
    try:
        return dataset.load(path)
    except FileNotFoundError:
        raise DataError(f"dataset not found: {path}") from None
    except dataset.DatasetError as e:
        raise DataError(f"{path}: {e}") from None


def _load_net(path, kind: str):
    if path is None:
        raise DataError(f"missing weights file for {kind}")
    try:
        net, header = load_weights(path)
    except FileNotFoundError:
        raise DataError(f"weights not found: {path}") from None
    except ValueError as e:
        raise DataError(f"{path}: {e}") from None
    if header.get("kind") != kind:
        raise DataError(f"{path}: weights kind {header.get('kind')!r}, expected {kind!r}")
    return net, header


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory not writable: {out}")
    return out


# -- commands ---------------------------------------------------------------


def cmd_gen_data(args) -> int:
    t0 = time.time()
    cfg = _load_config(args)
    out = _out_dir(args)
    ds = experiment.generate_dataset(cfg)
    ds_path = out / "dataset.bin"
    cfg_path = out / "config.json"
    dataset.save(ds_path, ds)
    config.dump(cfg, cfg_path)
    _write_manifest(out, "gen-data", cfg, {"dataset": ds_path, "config": cfg_path}, t0,
                    {"train_trajectories": len(ds.train), "test_trajectories": len(ds.test)})
    log.info("wrote %s (%d train, %d test trajectories)", ds_path, len(ds.train), len(ds.test))
    return EXIT_OK


def cmd_train_dqn(args) -> int:
    t0 = time.time()
    cfg = _load_config(args)
    ds = _load_dataset(args.dataset)
    out = _out_dir(args)
    try:
        pair, tlog = experiment.train_dqn(cfg, ds)
    except ValueError as e:
        raise DataError(str(e)) from None
    w_path = out / "qnet.weights"
    log_path = out / "train_log.tsv"
    save_weights(w_path, pair.q_net, "qnet", {"config_hash": cfg.hash()})
    with open(log_path, "w") as f:
        f.writelines(tlog.lines())
    n = max(1, len(tlog.losses) // 20)
    res = {
        "sgd_steps": len(tlog.losses),
        "env_steps": tlog.total_steps,
        "target_syncs": tlog.syncs,
        "loss_first_5pct": float(np.mean(tlog.losses[:n])) if tlog.losses else None,
        "loss_last_5pct": float(np.mean(tlog.losses[-n:])) if tlog.losses else None,
    }
    _write_manifest(out, "train-dqn", cfg, {"weights": w_path, "train_log": log_path}, t0, res)
    log.info("trained %d SGD steps, wrote %s", len(tlog.losses), w_path)
    return EXIT_OK


def cmd_train_fingerprint(args) -> int:
    t0 = time.time()
    cfg = _load_config(args)
    ds = _load_dataset(args.dataset)
    out = _out_dir(args)
    try:
        model = experiment.train_fingerprint_model(cfg, ds)
    except ValueError as e:
        raise DataError(str(e)) from None
    w_path = out / "fingerprint.weights"
    extra = {"rows": model.rows, "cols": model.cols, "norm": [model.norm.rss_min, model.norm.rss_max]}
    save_weights(w_path, model.net, "fingerprint", extra)
    _write_manifest(out, "train-fingerprint", cfg, {"weights": w_path}, t0, model.report)
    log.info("fingerprint holdout accuracy %s", model.report.get("holdout_accuracy"))
    return EXIT_OK


def cmd_eval(args) -> int:
    t0 = time.time()
    cfg = _load_config(args)
    ds = _load_dataset(args.dataset)
    try:
        experiment.check_compatible(cfg, ds)
    except ValueError as e:
        raise DataError(str(e)) from None
    out = _out_dir(args)
    methods = args.method or list(METHODS)
    chash = cfg.hash()
    artifacts, results, all_stats = {}, {}, {}
    for m in dict.fromkeys(methods):
        if m == "dqn":
            net, _ = _load_net(args.weights, "qnet")
            if net.input_dim != cfg.environment().state_dim:
                raise DataError(f"q-network input {net.input_dim} does not match state width {cfg.environment().state_dim}")
            errs = experiment.eval_dqn(cfg, ds, net)
        elif m == "mlat":
            errs, fallbacks = experiment.eval_mlat(cfg, ds)
            results["mlat_fallbacks"] = fallbacks
        else:
            net, header = _load_net(args.fingerprint_weights, "fingerprint")
            ex = header.get("extra", {})
            try:
                model = FingerprintModel(net, ex["rows"], ex["cols"], Normalization(*ex["norm"]))
            except (KeyError, ValueError) as e:
                raise DataError(f"fingerprint weights: {e}") from None
            if (model.rows, model.cols) != (ds.grid.rows, ds.grid.cols):
                raise DataError(f"fingerprint grid {model.rows}x{model.cols} does not match dataset {ds.grid.rows}x{ds.grid.cols}")
            errs = experiment.eval_fingerprint(cfg, ds, model)
        st = metrics.stats(errs)
        all_stats[m] = st
        p_json, p_csv, p_dat = out / f"{m}.stats.json", out / f"{m}.cdf.csv", out / f"{m}.cdf.dat"
        metrics.write_stats_json(p_json, m, st, chash)
        metrics.write_cdf_csv(p_csv, errs)
        metrics.write_cdf_dat(p_dat, errs)
        artifacts.update({f"{m}_stats": p_json, f"{m}_cdf_csv": p_csv, f"{m}_cdf_dat": p_dat})
        results[m] = {"rms": st.rms, "q95": st.q95}
        log.info("%s: mean %.3f rms %.3f q80 %.3f q95 %.3f", m, st.mean, st.rms, st.q80, st.q95)
    if len(all_stats) >= 2:
        p = out / "compare.json"
        _write_json(p, metrics.compare(all_stats))
        artifacts["compare"] = p
    _write_manifest(out, "eval", cfg, artifacts, t0, results)
    return EXIT_OK


def cmd_report(args) -> int:
    t0 = time.time()
    out = _out_dir(args)
    runs = {}
    for p in args.metrics:
        try:
            name, st = metrics.read_stats_json(p)
        except FileNotFoundError:
            raise DataError(f"metrics file not found: {p}") from None
        except (KeyError, ValueError) as e:
            raise DataError(f"{p}: malformed stats file ({e})") from None
        runs[name] = st
    names = list(runs)
    table = out / "report.csv"
    with open(table, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        header = ["method", "mean", "rms", "q80", "q95"]
        for other in names:
            header += [f"rms_pct_smaller_than_{other}", f"q95_pct_smaller_than_{other}"]
        w.writerow(header)
        for n in names:
            st = runs[n]
            row = [n, st.mean, st.rms, st.q80, st.q95]
            for other in names:
                o = runs[other]
                # percent by which this method beats ``other``
                row += [metrics.percent_smaller(o.rms, st.rms), metrics.percent_smaller(o.q95, st.q95)]
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
    artifacts = {"table": table}
    # copy per-method CDF files next to the table when they sit beside the stats file
    for p in args.metrics:
        src = Path(p)
        name = src.name.replace(".stats.json", "")
        dat = src.with_name(f"{name}.cdf.dat")
        if dat.exists():
            dst = out / f"{name}.cdf.dat"
            if dst.resolve() != dat.resolve():
                dst.write_bytes(dat.read_bytes())
            artifacts[f"{name}_cdf"] = dst
    if len(runs) >= 2:
        p = out / "compare.json"
        _write_json(p, metrics.compare(runs))
        artifacts["compare"] = p
    _write_manifest(out, "report", None, artifacts, t0, {"methods": names})
    return EXIT_OK


def _write_json(path: Path, doc) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drloc", description="Reinforcement-learning grid localization from RSS.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        sp.add_argument("--config", help="JSON config file (default: built-in desk-scale config)")
        sp.add_argument("--seed", type=int, help="master seed, overrides the config")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("-v", "--verbose", action="store_true")
        if data:
            sp.add_argument("--dataset", required=True, help="dataset.bin written by gen-data")

    sp = sub.add_parser("gen-data", help="simulate RSS pools and trajectories")
    common(sp, data=False)
    sp.set_defaults(func=cmd_gen_data)

    sp = sub.add_parser("train-dqn", help="train the Q-network")
    common(sp)
    sp.set_defaults(func=cmd_train_dqn)

    sp = sub.add_parser("train-fingerprint", help="train the supervised fingerprint classifier")
    common(sp)
    sp.set_defaults(func=cmd_train_fingerprint)

    sp = sub.add_parser("eval", help="localize the test trajectories and write error statistics")
    common(sp)
    sp.add_argument("--method", action="append", choices=METHODS, help="repeatable; default all three")
    sp.add_argument("--weights", help="Q-network weights (method dqn)")
    sp.add_argument("--fingerprint-weights", help="classifier weights (method fingerprint)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("report", help="merge stats files into a comparison table")
    sp.add_argument("metrics", nargs="+", help="*.stats.json files written by eval")
    sp.add_argument("--out", required=True)
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except config.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingDiverged, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
