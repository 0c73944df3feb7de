from __future__ import annotations

import pytest

from beerlab import GameConfig, PanicPolicy, run_game, tracking_demand_team
from beerlab.policies import PolicyDecision
from beerlab.rng import derive_demand_seed, mix64

FLEET_SEED = 20250823
FLEET_SIZE = 32


class NoisePolicy:
    """Deterministic pseudo-random orders in [0, 20]; pure in the observation."""

    def __init__(self, salt: int):
        self.salt = salt

    def decide(self, obs) -> PolicyDecision:
        value = mix64(self.salt ^ mix64(obs.period * 1315423911) ^ (obs.stage << 32))
        return PolicyDecision(order=value % 21)


def noise_team(salt: int):
    return [NoisePolicy(salt + stage) for stage in range(4)]


@pytest.fixture(scope="session")
def steady_config():
    return GameConfig(demand_constant=4)


@pytest.fixture(scope="session")
def steady_trace(steady_config):
    from beerlab import ConstantPolicy

    return run_game(steady_config, [ConstantPolicy(4)] * 4, seed=0)


@pytest.fixture(scope="session")
def tracking_fleet():
    config = GameConfig(order_cap_enabled=True)
    return [
        run_game(config, tracking_demand_team(config), derive_demand_seed(FLEET_SEED, rep))
        for rep in range(FLEET_SIZE)
    ]


@pytest.fixture(scope="session")
def panic_fleet():
    config = GameConfig()
    return [
        run_game(config, [PanicPolicy(1.0, 0.2) for _ in range(4)],
                 derive_demand_seed(FLEET_SEED, rep))
        for rep in range(FLEET_SIZE)
    ]


@pytest.fixture()
def stub_plan_dict():
    return {
        "master_seed": 42,
        "replications": 2,
        "configurations": ["Original", "R-S2"],
        "regimes": ["isolated", "shared"],
        "profiles": {
            "shallow": {"model_id": "stub-shallow", "family": "A"},
            "deep": {"model_id": "stub-deep", "family": "A"},
        },
    }
