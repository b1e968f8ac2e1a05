"""Two-band relay: identity vs swapped re-mapping of the relay's decoded streams."""

import argparse
from dataclasses import dataclass

import numpy as np

from isirelay.models import FIG5_GAINS, permutation_experiment


@dataclass(frozen=True)
class Config:
    P_R: float = 10.0
    P_S_start: float = 5.0
    P_S_stop: float = 15.0
    steps: int = 11


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--P_R", type=float, default=Config.P_R)
    p.add_argument("--steps", type=int, default=Config.steps)
    args = p.parse_args(argv)
    cfg = Config(P_R=args.P_R, steps=args.steps)
    print(f"{'P_S':>6} {'identity':>12} {'swapped':>12} {'difference':>12}   [nats/channel-use]")
    for P_S in np.linspace(cfg.P_S_start, cfg.P_S_stop, cfg.steps):
        ident = permutation_experiment(**FIG5_GAINS, P_S=P_S, P_R=cfg.P_R, perm=(0, 1))
        swap = permutation_experiment(**FIG5_GAINS, P_S=P_S, P_R=cfg.P_R, perm=(1, 0))
        print(f"{P_S:6.2f} {ident:12.6f} {swap:12.6f} {ident - swap:12.3e}")


if __name__ == "__main__":
    main()
