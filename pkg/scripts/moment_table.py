"""Dump the period moments  int_0^T Sn^a Cs^b  for a grid of (l1, l2).

    python3 scripts/moment_table.py --max-l 3 --max-order 12 --out-dir moments/
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

from semiqh.lyaptrig import MomentTable, TrigParams, period


@dataclass
class TableConfig:
    max_l: int = 3
    max_order: int = 12
    out_dir: Path = Path("moments")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-l", type=int, default=TableConfig.max_l)
    ap.add_argument("--max-order", type=int, default=TableConfig.max_order)
    ap.add_argument("--out-dir", type=Path, default=TableConfig.out_dir)
    args = ap.parse_args(argv)
    cfg = TableConfig(args.max_l, args.max_order, args.out_dir)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for l1 in range(1, cfg.max_l + 1):
        for l2 in range(1, cfg.max_l + 1):
            t = TrigParams(l1, l2)
            path = cfg.out_dir / f"moments_l{l1}_{l2}.csv"
            MomentTable(t).dump_csv(path, max_order=cfg.max_order)
            print(f"{path}  T = {period(t):.15g}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
