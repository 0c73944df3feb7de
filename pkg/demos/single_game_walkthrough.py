"""Walk through one 20-period game step by step.

Runs the tracking-demand team against a seeded demand path and prints the
per-period ledger for every stage: what arrived, what was demanded, what
shipped, and where the inventory ended up.  Run it twice and the table is
identical; that is the whole point of the deterministic engine.
"""

from beerlab import GameConfig, run_game, tracking_demand_team

STAGE_LABELS = ("retailer", "wholesaler", "distributor", "manufacturer")


def main():
    config = GameConfig(order_cap_enabled=True)
    trace = run_game(config, tracking_demand_team(config), seed=20250823)

    print(f"seed=20250823  horizon={config.horizon}  "
          f"holding={float(config.holding_cost)}  backlog={float(config.backlog_cost)}")
    print()
    header = f"{'t':>3s} {'demand':>6s}"
    for label in STAGE_LABELS:
        header += f" | {label[:6]:>6s}: {'ord':>3s} {'arr':>3s} {'shp':>3s} {'inv':>4s}"
    print(header)
    for rec in trace.periods:
        line = f"{rec.period:>3d} {rec.demand:>6d}"
        for i in range(4):
            line += (f" |         {rec.orders[i]:>3d} {rec.arrivals[i]:>3d} "
                     f"{rec.shipments[i]:>3d} {rec.inventory_end[i]:>4d}")
        print(line)

    print()
    total = sum(trace.total_cost_per_stage)
    for label, cost in zip(STAGE_LABELS, trace.total_cost_per_stage):
        print(f"{label:>13s} cost: {float(cost):8.1f}")
    print(f"{'system':>13s} cost: {float(total):8.1f}")


if __name__ == "__main__":
    main()
