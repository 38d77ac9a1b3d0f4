import json
from pathlib import Path

import numpy as np
import pytest

from qotalloc.channel import ChannelConfig, generate_raw_gains, reduce_association
from qotalloc.model import CavProfile, LearningCurve, Modality, Scenario

REPO_ROOT = Path(__file__).resolve().parent.parent
DEMO_CONFIG = REPO_ROOT / "configs" / "demo.json"


def make_scenario(seed: int, K: int = 2, N: int = 4, L: int = 2,
                  ptot_factor: float = 1.0, num_slots_bandwidth: float = 2e7,
                  fading: str = "none") -> Scenario:
    """Random but reproducible desk-scale scenario."""
    rng = np.random.default_rng(seed)
    cavs = [
        CavProfile(
            modality=Modality.POINT_CLOUD if k % 2 == 0 else Modality.IMAGE,
            sample_size_bits=float(rng.uniform(4e6, 2e7)),
            power_cap_watts=float(rng.uniform(0.5, 2.0)),
            curve=LearningCurve(float(rng.uniform(0.5, 2.0)),
                                float(rng.uniform(0.2, 0.6))),
        )
        for k in range(K)
    ]
    cfg = ChannelConfig(num_bs=L, distance_range_m=(5.0, 150.0),
                        pathloss_ref_db=30.0, pathloss_exponent=3.0,
                        fading=fading, seed=seed)
    _, gains = reduce_association(generate_raw_gains(cfg, K, N))
    return Scenario(
        cavs=cavs,
        num_slots=N,
        slot_duration_s=0.1,
        total_bandwidth_hz=num_slots_bandwidth,
        total_power_watts=ptot_factor * sum(c.power_cap_watts for c in cavs),
        noise_density_w_per_hz=1e-14,
        reduced_gains=gains,
    )


def symmetric_scenario(N: int = 4, gain: float = 1e-6,
                       ptot_factor: float = 1.0) -> Scenario:
    """Two identical vehicles over a constant channel."""
    curve = LearningCurve(1.0, 0.4)
    cavs = [CavProfile(Modality.POINT_CLOUD, 1e7, 1.0, curve),
            CavProfile(Modality.POINT_CLOUD, 1e7, 1.0, curve)]
    return Scenario(
        cavs=cavs, num_slots=N, slot_duration_s=0.1, total_bandwidth_hz=2e7,
        total_power_watts=2.0 * ptot_factor, noise_density_w_per_hz=1e-14,
        reduced_gains=np.full((2, N), gain),
    )


@pytest.fixture(scope="session")
def demo_document():
    with open(DEMO_CONFIG) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def demo_scenario(demo_document):
    from qotalloc.config import scenario_from_config
    return scenario_from_config(demo_document)


@pytest.fixture(scope="session")
def small_scenario():
    return make_scenario(seed=1, K=2, N=4, L=2)
