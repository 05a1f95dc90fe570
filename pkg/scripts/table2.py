"""Mean rank and condition number per channel mode for 2x2 and 4x4 arrays.

    python3 scripts/table2.py --draws 10000 --seed 1
"""
import argparse

from dpst.config import ScenarioConfig, SimMode
from dpst.delay_opt import optimize_for_scenario
from dpst.system import channel_statistics


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    print(f"{'channel':<12}{'size':>6}{'mean rank':>11}{'mean condition':>16}")
    for n in (2, 4):
        sc = ScenarioConfig(mimo=n, n_drops=args.draws, master_seed=args.seed)
        delays = optimize_for_scenario(sc).delays
        for mode in SimMode:
            st = channel_statistics(sc, mode, delays=delays)
            print(f"{mode.value:<12}{f'{n}x{n}':>6}{st.mean_rank:>11.2f}{st.mean_condition:>16.4f}")
        print(f"{'':<12}{'':>6}  DPST delays: {', '.join(f'{d:.3f}' for d in delays)}")


if __name__ == "__main__":
    main()
