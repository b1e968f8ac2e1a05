"""Ideal lowpass relays: equal-bandwidth closed form and the unequal-bandwidth split."""

import argparse

from isirelay import solve_df_maximin
from isirelay.models import (
    LowpassRelaySpec,
    equal_bandwidth_capacity,
    lowpass_subband_channel,
    unequal_bandwidth_capacity,
)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=128, help="bands for the numerical cross-check")
    args = p.parse_args(argv)
    print("equal bandwidth, W = N_1 = N_2 = 1, P_S = 2  [nats/s]")
    for P_R in (0.5, 1.0, 2.0, 4.0):
        spec = LowpassRelaySpec(W=1.0, N_1=1.0, N_2=1.0, P_S=2.0, P_R=P_R)
        cap, alpha = equal_bandwidth_capacity(spec)
        num = spec.W * solve_df_maximin(lowpass_subband_channel(spec, args.n), spec.P_S, spec.P_R).rate
        print(f"  P_R={P_R:4.1f}  alpha*={alpha:.6f}  closed form={cap:.8f}  maximin={num:.8f}")
    spec = LowpassRelaySpec(W=1.0, N_1=1.0, N_2=1.0, P_S=4.0, P_R=4.0, W_SR=2.0, W_SD=1.0, W_RD=1.5)
    cap, split = unequal_bandwidth_capacity(spec)
    print("unequal bandwidth, W_SD=1, W_SR=2, W_RD=1.5, P_S=P_R=4  [nats/s]")
    print(f"  capacity={cap:.8f}  (P_S1, P_S2, P_R1, P_R2)=({', '.join(f'{v:.4f}' for v in split)})")


if __name__ == "__main__":
    main()
