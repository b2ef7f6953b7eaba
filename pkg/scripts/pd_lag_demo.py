"""Quote/trade lag profile for thinned trades and for trades delayed by one bin."""
import argparse
import math

import numpy as np

from fxscaling import ActivityPanel, GenSpec, Kind, gen_panel, pd_lag_profile


def show(title, profile, width=40):
    print(title, "argmax tau =", profile.argmax)
    vals = np.array(profile.values, dtype=float)
    top = np.nanmax(np.abs(vals)) or 1.0
    for tau, v in zip(profile.taus, vals):
        if tau % 5 == 0 or abs(tau) <= 2:
            bar = "#" * int(round(width * max(v, 0) / top)) if not math.isnan(v) else "?"
            print(f"  {tau:+4d} {v:+.4f} {bar}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tau", type=int, default=30)
    ap.add_argument("--normalization", choices=["standard", "lagged"], default="standard")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = (-args.tau, args.tau)

    p, d = gen_panel(GenSpec.poisson(20, 0.5, 50, 10_080, coupling_v=0.1,
                                     factor_memory=math.exp(-1 / 30), seed=args.seed))
    show("thinned trades:", pd_lag_profile(p, d, rng, args.normalization))

    delayed = np.concatenate([p.counts[:, :1], p.counts[:, :-1]], axis=1)
    shifted = ActivityPanel(Kind.TRADE, p.dt, p.window, p.pairs, delayed)
    show("trades one bin behind quotes:", pd_lag_profile(p, shifted, rng, args.normalization))


if __name__ == "__main__":
    main()
