"""Run all benchmark tables and compare with the benchmark values and the exact oracle.

    python scripts/reproduce_tables.py --out results/ [--seed 1] [--workers 4]
"""

import argparse
import os
from pathlib import Path

from contagion_is import cli
from contagion_is.oracle import exact_hit_probability

BENCHMARK = {
    "table1": (8.238e-3, 1.089e-5, 1.737e-9, 7.250e-15, 3.499e-20, 4.470e-26, 1.624e-32),
    "table2": (4.389e-2, 9.337e-4, 9.183e-6, 2.552e-8, 1.380e-10, 7.280e-13, 4.089e-15),
    "table3": (0.377, 3.118e-2, 6.252e-4, 1.677e-6, 4.662e-9, 7.888e-12, 9.756e-15),
}
BENCHMARK["table3_total_coupling"] = BENCHMARK["table3"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    csvs = cli.cmd_tables(args.seed, args.workers, args.out)
    setups = {s.name: s.config for s in cli.table_setups()}
    for name, text in csvs.items():
        rows = [r for r in cli.read_csv(text) if r["method"] != "mc"]
        print(f"\n{name}")
        print(f"{'z':>5} {'estimate':>11} {'RE':>7} {'exact':>11} {'benchmark':>11}")
        for row, pub in zip(rows, BENCHMARK[name]):
            z = float(row["z"])
            exact = exact_hit_probability(setups[name].spec_for(z))
            print(f"{z:5.2f} {row['estimate']:>11} {float(row['rel_error']):7.4f} {exact:11.4e} {pub:11.4e}")


if __name__ == "__main__":
    main()
