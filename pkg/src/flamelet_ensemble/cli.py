"""Command-line front end.

Subcommands: gen-data, train, predict, evaluate, ablate.  Exit codes are
0 success, 2 usage, 3 I/O, 4 training failure, 5 consistency failure; every
failure also prints an ``error_code=<n>`` line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._io import atomic_write_text
from .config import IDENTITY_ENCODER, load_run_config, encoded_dataset
from .dataset import TARGET_NAMES, EnsembleStrategy, dataset_to_csv_text, generate_synthetic, split_holdout
from .ensemble import EnsembleConfig, load_ensemble, predict_members, save_ensemble, train_ensemble
from .errors import (
    ConfigError,
    Corrupted,
    DimensionMismatch,
    EmptyDataset,
    FingerprintMismatch,
    FlameletError,
    MassFractionSum,
    SchemaError,
    TrainingError,
    UnsupportedVersion,
)
from .evaluation import REPORT_ORDER, ablation_study, compare_models, flamelet_profile_report, fmt
from .network import FORMAT_VERSION, load_model, loads, save_model, train_single
from .uncertainty import summarize

log = logging.getLogger("flamelet_ensemble")

EXIT_USAGE, EXIT_IO, EXIT_TRAINING, EXIT_CONSISTENCY = 2, 3, 4, 5
HOLDOUT_FILE = "holdout.json"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _out_dir(out) -> Path:
    if out is None:
        raise CliError(EXIT_USAGE, "--out is required")
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create output directory {path}: {exc.strerror}") from None
    return path


def _write(path: Path, text: str) -> None:
    try:
        atomic_write_text(path, text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror}") from None


def _json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _parse_range(text: str) -> range:
    try:
        lo, _, hi = text.partition("..")
        lo, hi = int(lo), int(hi or lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must look like 2..12, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return range(lo, hi + 1)


def _run_config(args, **extra):
    train = {
        "hidden_dims": getattr(args, "hidden", None),
        "max_epochs": getattr(args, "max_epochs", None),
        "batch_size": getattr(args, "batch_size", None),
        "patience": getattr(args, "patience", None),
        "learning_rate": getattr(args, "lr", None),
        "activation": getattr(args, "activation", None),
    }
    return load_run_config(
        args.config,
        seed=args.seed,
        out=args.out,
        threads=args.threads,
        data=getattr(args, "data", None),
        encoder=getattr(args, "encoder", None),
        strategy=getattr(args, "strategy", None),
        holdout_fraction=getattr(args, "holdout_fraction", None),
        n_members=getattr(args, "members", None),
        sample_fraction=getattr(args, "sample_fraction", None),
        with_replacement=getattr(args, "with_replacement", None),
        train=train,
        **extra,
    )


def _encoder_spec(spec: str) -> str:
    return spec if spec == IDENTITY_ENCODER else str(Path(spec).resolve())


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_gen_data(args) -> int:
    cfg = _run_config(args, synthetic={
        "n_flamelets": args.n_flamelets,
        "grid_size": args.grid_size,
        "extinction_threshold": args.extinction_threshold,
    })
    out = _out_dir(cfg.out)
    seed = args.seed if args.seed is not None else cfg.synthetic_seed
    raw = generate_synthetic(cfg.synthetic, seed, drop_extinguished=False)
    kept = raw.without_extinguished()
    _write(out / "flamelets.csv", dataset_to_csv_text(raw))
    provenance = {
        "generator": "synthetic",
        "package_version": __version__,
        "seed": seed,
        "config": cfg.data_source()["synthetic"] if cfg.data is None else None,
        "n_flamelets_generated": len(raw.flamelets),
        "n_flamelets_surviving": len(kept.flamelets),
        "n_points_surviving": kept.n_points,
        "n_points_extinguished": kept.n_extinguished_dropped,
    }
    _write(out / "provenance.json", _json(provenance))
    log.info("wrote %d flamelets (%d surviving) to %s", len(raw.flamelets), len(kept.flamelets), out)
    return 0


def cmd_train(args) -> int:
    cfg = _run_config(args)
    if cfg.n_members < 2:
        raise CliError(EXIT_USAGE, "ensembles require --members >= 2")
    out = _out_dir(cfg.out)
    source = cfg.data_source()
    encoder = _encoder_spec(cfg.encoder)
    data = encoded_dataset(source, encoder)
    train_val, holdout = split_holdout(data, cfg.strategy, cfg.holdout_fraction, cfg.seed)
    fingerprint = train_val.fingerprint()
    log.info("%s split: %d train-val / %d holdout points", cfg.strategy.value, len(train_val), len(holdout))

    if cfg.strategy is EnsembleStrategy.FLAMELETS:
        units = holdout.unique_keys()
    else:
        units = [int(i) for i in holdout.ids]
    manifest = {
        "format_version": FORMAT_VERSION,
        "data_source": source,
        "encoder": encoder,
        "strategy": cfg.strategy.value,
        "holdout_fraction": cfg.holdout_fraction,
        "seed": cfg.seed,
        "train_val_fingerprint": fingerprint,
        "n_points": len(data),
        "n_holdout_points": len(holdout),
        "holdout_units": units,
    }
    _write(out / HOLDOUT_FILE, _json(manifest))

    if not args.skip_single:
        single = train_single(train_val, cfg.single_config(), fingerprint=fingerprint)
        try:
            save_model(single, out / "single.model")
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write model: {exc.strerror}") from None
        log.info("single model: %d epochs", single.metadata["epochs_run"])
    if not args.skip_ensemble:
        ens = train_ensemble(train_val, cfg.ensemble_config(), cfg.threads)
        try:
            save_ensemble(ens, out / "ensemble.model")
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write ensemble: {exc.strerror}") from None
        log.info("ensemble: %d members", ens.n_members)
    return 0


def _load_holdout(run_dir: Path):
    path = run_dir / HOLDOUT_FILE
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_CONSISTENCY, f"{path}: corrupted at byte {exc.pos}") from None
    data = encoded_dataset(manifest["data_source"], manifest["encoder"])
    mask = np.zeros(len(data), dtype=bool)
    units = manifest["holdout_units"]
    try:
        if manifest["strategy"] == EnsembleStrategy.FLAMELETS.value:
            missing = set(units) - set(data.unique_keys())
            if missing:
                raise CliError(EXIT_CONSISTENCY, f"holdout keys {sorted(missing)[:3]} not in dataset")
            mask[data.rows_for_keys(units)] = True
        else:
            mask[data.rows_for_ids(units)] = True
    except (KeyError, IndexError):
        raise CliError(EXIT_CONSISTENCY, "holdout manifest does not match the dataset") from None
    return manifest, data.subset(np.flatnonzero(~mask)), data.subset(np.flatnonzero(mask))


def _match_key(keys, text: str) -> float | None:
    try:
        want = float(text)
    except ValueError:
        return None
    for k in keys:
        if abs(k - want) <= 1e-6 * abs(k):
            return k
    return None


def cmd_evaluate(args) -> int:
    run_dir = Path(args.run or args.out or ".")
    out = _out_dir(args.out or run_dir)
    manifest, train_val, holdout = _load_holdout(run_dir)
    try:
        single = load_model(run_dir / "single.model")
        ens = load_ensemble(run_dir / "ensemble.model")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read model files in {run_dir}: {exc.strerror}") from None

    fp = train_val.fingerprint()
    seen = {manifest["train_val_fingerprint"], ens.fingerprint, single.metadata.get("fingerprint", fp)}
    if seen != {fp}:
        msg = f"dataset fingerprint mismatch (data {fp}, recorded {sorted(seen - {fp})})"
        if not args.force:
            raise FingerprintMismatch(msg)
        log.warning("%s; continuing because of --force", msg)

    profiles = []
    for text in args.profile or []:
        key = _match_key(holdout.unique_keys(), text)
        if key is None:
            raise CliError(EXIT_USAGE, f"flamelet key {text} not in holdout")
        profiles.append(key)

    report = compare_models(single, ens, holdout)
    report.write(out, top=args.top)
    summary = {
        "metadata": report.metadata,
        "dataset_fingerprint": fp,
        "coverage_95": dict(zip(TARGET_NAMES, report.coverage.tolist())),
        "ensemble_mse": dict(zip(TARGET_NAMES, report.ensemble_mse.tolist())),
        "mean_member_mse": dict(zip(TARGET_NAMES, report.mean_member_mse.tolist())),
        "ensemble_wins": report.ensemble_wins(),
        "global_abs_error_S_e": report.global_abs_error,
    }
    _write(out / "evaluation.json", _json(summary))
    for key in profiles:
        prof = flamelet_profile_report(ens, single, holdout.subset(np.flatnonzero(holdout.keys == key)))
        stem = f"profile_{key:.8g}"
        _write(out / f"{stem}.csv", prof.to_csv())
        if not args.no_svg:
            _write(out / f"{stem}.svg", prof.to_svg())
    for term, s, e, w in report.mae_rows():
        log.info("%-9s single %.6e  ensemble %.6e  -> %s", term, s, e, w)
    return 0


def cmd_ablate(args) -> int:
    cfg = _run_config(args)
    out = _out_dir(cfg.out)
    data = encoded_dataset(cfg.data_source(), _encoder_spec(cfg.encoder))
    train_val, holdout = split_holdout(data, cfg.strategy, cfg.holdout_fraction, cfg.seed)
    template = EnsembleConfig(2, cfg.strategy, cfg.sample_fraction, cfg.with_replacement, cfg.train, cfg.seed)
    result = ablation_study(train_val, holdout, template, args.range, cfg.threads)
    _write(out / "ablation.csv", result.to_csv())
    if not args.no_svg:
        _write(out / "ablation.svg", result.to_svg())
    log.info("ablation over N=%d..%d, chosen N=%d", result.n_values[0], result.n_values[-1], result.chosen_n)
    return 0


def cmd_predict(args) -> int:
    if args.model is None or args.data is None:
        raise CliError(EXIT_USAGE, "predict needs --model and --data")
    out = _out_dir(args.out)
    text = Path(args.model).read_text(encoding="utf-8")
    doc = loads(text)
    data = encoded_dataset({"csv": args.data}, _encoder_spec(args.encoder or IDENTITY_ENCODER))
    header = ["flame_key", "x_pos"]
    if doc.get("kind") == "ensemble":
        summary = summarize(predict_members(load_ensemble(args.model), data.inputs))
        for j in REPORT_ORDER:
            n = TARGET_NAMES[j]
            header += [f"mean_{n}", f"std_{n}", f"ci_low_{n}", f"ci_high_{n}"]
        blocks = [summary.mean, summary.std, summary.ci_low, summary.ci_high]
    else:
        preds = load_model(args.model).predict(data.inputs)
        header += [f"pred_{TARGET_NAMES[j]}" for j in REPORT_ORDER]
        blocks = [preds]
    lines = [",".join(header)]
    for i in range(len(data)):
        vals = [fmt(data.keys[i]), fmt(data.x_pos[i])]
        for j in REPORT_ORDER:
            vals += [fmt(b[i, j]) for b in blocks]
        lines.append(",".join(vals))
    _write(out / "predictions.csv", "\n".join(lines) + "\n")
    return 0


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help="worker processes for member training")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", help="flamelet CSV (default: synthetic library)")
    data.add_argument("--encoder", help=f"encoder weights file or '{IDENTITY_ENCODER}'")
    data.add_argument("--strategy", choices=[s.value for s in EnsembleStrategy])
    data.add_argument("--holdout-fraction", type=float)
    data.add_argument("--members", type=int)
    data.add_argument("--sample-fraction", type=float)
    data.add_argument("--with-replacement", action="store_const", const=True)
    data.add_argument("--hidden", type=lambda s: [int(h) for h in s.split(",")],
                      help="hidden layer sizes, e.g. 64,128,64")
    data.add_argument("--max-epochs", type=int)
    data.add_argument("--batch-size", type=int)
    data.add_argument("--patience", type=int)
    data.add_argument("--lr", type=float)
    data.add_argument("--activation", choices=["relu", "paper-literal"])

    parser = argparse.ArgumentParser(prog="flamelet-ensemble", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="write a synthetic flamelet library")
    p.add_argument("--n-flamelets", type=int)
    p.add_argument("--grid-size", type=int)
    p.add_argument("--extinction-threshold", type=float)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", parents=[common, data], help="train single model and ensemble")
    p.add_argument("--skip-single", action="store_true")
    p.add_argument("--skip-ensemble", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="predict every point of a flamelet CSV")
    p.add_argument("--model", help="single.model or ensemble.model")
    p.add_argument("--data", help="flamelet CSV")
    p.add_argument("--encoder")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[common], help="write holdout report CSVs")
    p.add_argument("--run", help="directory written by train (default: --out)")
    p.add_argument("--top", type=int, help="keep only the first N grouped rows")
    p.add_argument("--profile", action="append", metavar="KEY", help="flamelet key to profile")
    p.add_argument("--force", action="store_true", help="continue on fingerprint mismatch")
    p.add_argument("--no-svg", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", parents=[common, data], help="sweep ensemble size")
    p.add_argument("--range", type=_parse_range, default=range(2, 13), help="N range, e.g. 2..12")
    p.add_argument("--no-svg", action="store_true")
    p.set_defaults(func=cmd_ablate)
    return parser


def _fail(code: int, message: str) -> int:
    print(f"error_code={code} message={message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            print(f"error_code={EXIT_USAGE} message=usage", file=sys.stderr)
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(exc.code, str(exc))
    except TrainingError as exc:
        where = f" member={exc.member}" if exc.member is not None else ""
        return _fail(EXIT_TRAINING, f"{exc}{where}")
    except FingerprintMismatch as exc:
        return _fail(EXIT_CONSISTENCY, str(exc))
    except (Corrupted, UnsupportedVersion) as exc:
        return _fail(EXIT_CONSISTENCY, str(exc))
    except (ConfigError, SchemaError, MassFractionSum, EmptyDataset, DimensionMismatch) as exc:
        return _fail(EXIT_USAGE, str(exc))
    except FlameletError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, f"{exc.filename or ''}: {exc.strerror or exc}")


if __name__ == "__main__":
    sys.exit(main())
