"""Bullwhip and myopia detection on two contrasting scripted fleets.

The tracking-demand team weights its supply line like on-hand stock, so a
fleet of 32 seeded replications should show no significant variance
amplification and no a_N > a_I regression signature.  The panic team
discounts its supply line (beta < alpha), which is exactly the behavioral
failure the analysis suite is built to detect: both tests should fire.
"""

from beerlab import GameConfig, PanicPolicy, run_game, tracking_demand_team
from beerlab.rng import derive_demand_seed
from beerlab.stats import bullwhip_report, fit_ordering_regression, myopia_sign_test

REPLICATIONS = 32
MASTER_SEED = 20250823


def fleet(config, make_team):
    return [run_game(config, make_team(), derive_demand_seed(MASTER_SEED, rep))
            for rep in range(REPLICATIONS)]


def describe(name, traces):
    bw = bullwhip_report(traces)
    fits = [fit_ordering_regression(t, stage) for t in traces for stage in range(1, 5)]
    myopia = myopia_sign_test(fits)
    print(f"--- {name} ({REPLICATIONS} replications) ---")
    print(f"  mean order variance by stage: "
          + ", ".join(f"{v:.1f}" for v in bw.details['mean_variance_per_stage']))
    print(f"  bullwhip sign test: k={int(bw.statistic)}/{bw.n}  p={bw.p_value:.4g}")
    print(f"  myopia sign test (a_N > a_I): k={int(myopia.statistic)}/{myopia.n} "
          f"valid fits  p={myopia.p_value:.4g}")
    verdict = "amplification detected" if bw.p_value < 0.05 else "no amplification"
    print(f"  verdict: {verdict}")
    print()


def main():
    tracking_config = GameConfig(order_cap_enabled=True)
    describe("tracking-demand heuristic",
             fleet(tracking_config, lambda: tracking_demand_team(tracking_config)))

    panic_config = GameConfig()
    describe("panic policy (alpha=1.0, beta=0.2)",
             fleet(panic_config, lambda: [PanicPolicy(1.0, 0.2) for _ in range(4)]))


if __name__ == "__main__":
    main()
