"""Underwater relay: average rates over fading draws as the relay moves along the link."""

import argparse
import time
from dataclasses import dataclass

import numpy as np

from isirelay.models import UnderwaterSpec, underwater_draw
from isirelay.optimizers import direct_waterfill_rate, solve_df_maximin_total, solve_df_waterfill, two_hop_rate


@dataclass(frozen=True)
class Config:
    draws: int = 500
    n: int = 64
    P_t: float = 100.0
    seed: int = 0
    points: int = 11


def sweep(cfg: Config):
    rows = []
    for a in np.linspace(0.0, 1.0, cfg.points):
        spec = UnderwaterSpec(a=float(a), n=cfg.n, rng_seed=cfg.seed)
        acc = np.zeros(4)
        for i in range(cfg.draws):
            ch = underwater_draw(spec, i)
            acc += (
                solve_df_maximin_total(ch, cfg.P_t).rate,
                solve_df_waterfill(ch, cfg.P_t).rate,
                direct_waterfill_rate(ch, cfg.P_t),
                two_hop_rate(ch, cfg.P_t)[0],
            )
        rows.append((a, *(acc / cfg.draws)))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--draws", type=int, default=Config.draws)
    p.add_argument("--n", type=int, default=Config.n)
    p.add_argument("--P_t", type=float, default=Config.P_t)
    p.add_argument("--seed", type=int, default=Config.seed)
    p.add_argument("--points", type=int, default=Config.points)
    args = p.parse_args(argv)
    cfg = Config(args.draws, args.n, args.P_t, args.seed, args.points)
    t0 = time.perf_counter()
    rows = sweep(cfg)
    print(f"{'a':>5} {'df':>12} {'df-waterfill':>13} {'direct':>12} {'two-hop':>12}   [nats/channel-use]")
    for a, df, wf, direct, hop in rows:
        print(f"{a:5.2f} {df:12.5e} {wf:13.5e} {direct:12.5e} {hop:12.5e}")
    print(f"{cfg.draws} draws per point, {time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
