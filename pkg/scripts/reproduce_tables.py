"""Single model versus deep ensemble on the synthetic library, both strategies.

Trains the single regressor and the ensemble (N=8 for flamelets, N=10 for
points), then prints the MAE table, the ten worst flamelets by total S_e
error and the x_pos bin totals.  Report CSVs land in ``--out/<strategy>``.

    python3 scripts/reproduce_tables.py --out runs/tables
"""

import argparse
import time
from pathlib import Path

from flamelet_ensemble.config import load_run_config, encoded_dataset
from flamelet_ensemble.dataset import split_holdout
from flamelet_ensemble.ensemble import train_ensemble
from flamelet_ensemble.evaluation import compare_models
from flamelet_ensemble.network import train_single

MEMBERS = {"flamelets": 8, "points": 10}


def run(strategy: str, args) -> None:
    cfg = load_run_config(args.config, strategy=strategy, seed=args.seed, threads=args.threads,
                          n_members=MEMBERS[strategy], train={"max_epochs": args.max_epochs})
    data = encoded_dataset(cfg.data_source(), cfg.encoder)
    train_val, holdout = split_holdout(data, cfg.strategy, cfg.holdout_fraction, cfg.seed)
    start = time.perf_counter()
    single = train_single(train_val, cfg.single_config(), fingerprint=train_val.fingerprint())
    ens = train_ensemble(train_val, cfg.ensemble_config(), cfg.threads)
    report = compare_models(single, ens, holdout)
    report.write(Path(args.out) / strategy)

    print(f"\n== {strategy} strategy, N={ens.n_members}, "
          f"{len(holdout)} holdout points, {time.perf_counter() - start:.0f} s ==")
    print(f"{'term':10s} {'single':>14s} {'ensemble':>14s}  winner")
    for term, s, e, w in report.mae_rows():
        print(f"{term:10s} {s:14.6e} {e:14.6e}  {w}")
    print(f"\nworst flamelets by single-model total |S_e error| (ensemble wins "
          f"{sum(r['deep_ensemble'] < r['single_model'] for r in report.by_flamelet.values())}"
          f"/{len(report.by_flamelet)})")
    for key, row in list(report.by_flamelet.items())[:10]:
        print(f"  {key:.6e} {row['single_model']:14.6e} {row['deep_ensemble']:14.6e}")
    print("\nx_pos bins")
    for (lo, hi), row in report.by_xpos.items():
        print(f"  [{lo:.2f}, {hi:.2f}) {row['single_model']:14.6e} {row['deep_ensemble']:14.6e}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="optional TOML run config")
    parser.add_argument("--out", default="runs/tables")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--max-epochs", type=int)
    parser.add_argument("--strategies", nargs="+", default=list(MEMBERS), choices=list(MEMBERS))
    args = parser.parse_args()
    for strategy in args.strategies:
        run(strategy, args)


if __name__ == "__main__":
    main()
