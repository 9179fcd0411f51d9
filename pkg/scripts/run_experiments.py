"""
Run every simulator experiment into one results directory.

    incentive game      random valid parameter draws -> unique equilibrium check
    fn_sweep.csv        false-negative rate over (r0/r_max, malicious fraction)
    gamma_sweep.csv     final payoff over (gamma, accuracy)
    economy_*.csv       cohort trajectories (one seed) and finals (all seeds)
    collusion.csv       per-round accuracy by malicious fraction, dynamic vs static
"""

import argparse
import logging
import random
import sys
import time
from pathlib import Path

import pandas as pd

sys.path.insert(0, str(Path(__file__).parent.parent))

from cli.logs import configure_logging
from simulator import (
    CollusionConfig,
    default_economy_config,
    deviation_losses,
    nash_equilibria,
    run_collusion_batch,
    run_economy,
    run_economy_batch,
    sweep_gamma,
    sweep_r0,
)
from simulator.export import write_frame, write_summary, write_sweep, write_trajectories
from simulator.game import AuditStrategy, DevStrategy, random_valid_game

COHORT_ORDER = ["honest", "p_correct_0.8", "stealthy_0.5", "p_correct_0.3"]


def check_game(draws: int, seed: int) -> dict:
    rng = random.Random(seed)
    unique = 0
    worst_margin = float("inf")
    for _ in range(draws):
        game = random_valid_game(rng)
        if nash_equilibria(game) == frozenset({(DevStrategy.B, AuditStrategy.C)}):
            unique += 1
        losses = deviation_losses(game)
        worst_margin = min(worst_margin, losses.minimum - min(game.U_legit, game.S - game.Bribe))
    return {"draws": draws, "unique_bc": unique, "min_loss_margin": worst_margin}


def main() -> int:
    parser = argparse.ArgumentParser(description="Run all SIGIL simulator experiments")
    parser.add_argument("--out", default="results")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--seeds", type=int, default=100, help="seeds for economy and gamma batches")
    parser.add_argument("--quick", action="store_true", help="fewer seeds and trials")
    parser.add_argument("--verbose", "-v", action="store_true")
    args = parser.parse_args()

    configure_logging(logging.INFO if args.verbose else logging.WARNING)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = 10 if args.quick else args.seeds
    trials = 2_000 if args.quick else 20_000
    started = time.time()

    print("=" * 50)
    print("SIGIL Simulator Experiments")
    print("=" * 50)

    print("\n1. Incentive game...")
    game = check_game(1_000 if args.quick else 10_000, args.seed)
    print(f"   (B,C) unique in {game['unique_bc']}/{game['draws']} draws")

    print("\n2. False-negative sweep...")
    fn = sweep_r0(trials=trials, seed=args.seed)
    write_sweep(fn, out / "fn_sweep.csv")
    print(f"   fn(0.10, 0.30) = {fn.cell(0.10, 0.30):.4%}")

    print("\n3. Slashing coefficient sweep...")
    gamma = sweep_gamma(seeds=seeds, seed=args.seed)
    write_sweep(gamma, out / "gamma_sweep.csv")
    print(f"   payoff(gamma=4.0, acc=0.8) = {gamma.cell(4.0, 0.8):.2f} TC")

    print("\n4. Auditor economy...")
    config = default_economy_config(seed=args.seed)
    write_trajectories(run_economy(config), out / "economy_trajectories.csv")
    batch = run_economy_batch(config, range(args.seed, args.seed + seeds))
    write_frame(batch.finals, out / "economy_finals.csv")
    cohorts = batch.summary().set_index("cohort").reindex(COHORT_ORDER)
    for cohort, row in cohorts.iterrows():
        print(f"   {cohort:<15} {row['mean_final_balance_tc']:8.2f} TC   rep {row['mean_final_reputation']:7.1f}")

    print("\n5. Collusion resistance...")
    rows = []
    for fraction in (0.2, 0.3, 0.4):
        for dynamic in (True, False):
            cfg = CollusionConfig(malicious_fraction=fraction, dynamic_reputation=dynamic)
            result = run_collusion_batch(cfg, range(args.seed, args.seed + max(seeds // 2, 5)))
            for round_index, accuracy in enumerate(result.per_round()):
                rows.append({"malicious_fraction": fraction, "dynamic_reputation": dynamic,
                             "round": round_index, "accuracy": float(accuracy)})
            windows = result.window_means()
            label = "dynamic" if dynamic else "static"
            print(f"   m={fraction:.1f} {label:<8} first20 {windows['first']:.3f}  last20 {windows['last']:.3f}")
    write_frame(pd.DataFrame(rows), out / "collusion.csv")

    write_summary({
        "kind": "experiments",
        "seed": args.seed,
        "seeds": seeds,
        "game": game,
        "fn_sweep": fn.summary(),
        "gamma_sweep": gamma.summary(),
        "economy": cohorts.reset_index().to_dict(orient="records"),
    }, out / "experiments.json")

    print()
    print(f"Results in {out.resolve()} ({time.time() - started:.1f}s)")
    print("=" * 50)
    return 0


if __name__ == "__main__":
    sys.exit(main())
