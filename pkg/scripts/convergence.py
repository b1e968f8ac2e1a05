"""Rates of a fixed three-tap relay with colored noise as the block length grows."""

import argparse

from isirelay import CirculantChannel, solve_cf_kkt, solve_df_maximin, subband_decompose

TAPS = ([1.2, 0.6, 0.3], [0.5, 0.4, 0.2], [0.9, -0.4, 0.25])
NOISE = ([1.0, 0.3], [1.0, 0.4])


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--P_S", type=float, default=2.0)
    p.add_argument("--P_R", type=float, default=1.0)
    args = p.parse_args(argv)
    print(f"{'n':>5} {'df':>12} {'cutset':>12} {'cf':>12}   [nats/channel-use]")
    for n in (16, 32, 64, 128, 256, 512, 1024):
        sub = subband_decompose(CirculantChannel(n, *TAPS, *NOISE))
        df = solve_df_maximin(sub, args.P_S, args.P_R).rate
        cs = solve_df_maximin(sub, args.P_S, args.P_R, mode="cutset").rate
        cf = solve_cf_kkt(sub, args.P_S, args.P_R).rate
        print(f"{n:5d} {df:12.9f} {cs:12.9f} {cf:12.9f}")


if __name__ == "__main__":
    main()
