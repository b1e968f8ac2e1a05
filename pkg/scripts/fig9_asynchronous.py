"""Symbol-asynchronous relay: DF, CF and cut-set rates against relay position."""

import argparse
from dataclasses import dataclass

import numpy as np

from isirelay.models import AsynchGeometry, asynch_profile
from isirelay.optimizers import solve_asynch_cf, solve_asynch_maximin


@dataclass(frozen=True)
class Config:
    P_S: float = 10.0
    P_R: float = 10.0
    alpha_att: float = 2.0
    n: int = 256
    points: int = 19


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=Config.n)
    p.add_argument("--points", type=int, default=Config.points)
    args = p.parse_args(argv)
    cfg = Config(n=args.n, points=args.points)
    print(f"{'d':>5} {'df':>10} {'cf':>10} {'cutset':>10} {'best':>6}   [nats/channel-use]")
    for d in np.linspace(0.05, 0.95, cfg.points):
        prof = asynch_profile(AsynchGeometry(float(d), cfg.alpha_att))
        df = solve_asynch_maximin(prof, cfg.P_S, cfg.P_R, cfg.n).rate
        cs = solve_asynch_maximin(prof, cfg.P_S, cfg.P_R, cfg.n, mode="cutset").rate
        cf = solve_asynch_cf(prof, cfg.P_S, cfg.P_R, cfg.n).rate
        print(f"{d:5.2f} {df:10.5f} {cf:10.5f} {cs:10.5f} {'df' if df >= cf else 'cf':>6}")


if __name__ == "__main__":
    main()
