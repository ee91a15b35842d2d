import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from preydelay import (ModelParams, ModelSpec, beddington_deangelis,
                       constant_delay, linear, saturating_delay)

# Pinned acceptance model: Beddington-DeAngelis with pure predator
# interference (k1 = 0) and a saturating delay.  Independently solved
# coexistence point (2-D Newton oracle, residual < 1e-12):
BD_XSTAR = 4.57180289946735
BD_YSTAR = 0.59635070966373
BD_YJSTAR = 0.223943145096475
BD_TAUSTAR = 0.68678561861552


@pytest.fixture(scope="session")
def bd_model():
    return ModelSpec(ModelParams(r=1.0, K=5.0, n=1.0, dj=0.55, d=0.45),
                     saturating_delay(0.5, 1.0, 1.0),
                     beddington_deangelis(b=1.0, k1=0.0, k2=10.0))


@pytest.fixture(scope="session")
def bd_k1_model():
    # same shape with prey handling (k1 > 0); used by the solver tests
    return ModelSpec(ModelParams(r=1.0, K=5.0, n=1.0, dj=0.55, d=0.45),
                     saturating_delay(0.5, 1.0, 1.0),
                     beddington_deangelis(b=1.0, k1=0.1, k2=8.0))


@pytest.fixture(scope="session")
def const_delay_model():
    # constant delay, linear response; R = exp(-0.2) * 2 / 0.8 ~ 2.05
    return ModelSpec(ModelParams(r=1.0, K=2.0, n=1.0, dj=0.2, d=0.8),
                     constant_delay(1.0), linear(1.0))


def linear_family_model(R_target: float) -> ModelSpec:
    """Linear-response model tuned so the reproduction number equals R_target."""
    r, K, n, dj, d = 1.0, 2.0, 1.0, 0.5, 1.0
    tau_m = 0.5
    b = R_target * d / (n * math.exp(-dj * tau_m) * K)
    return ModelSpec(ModelParams(r, K, n, dj, d),
                     saturating_delay(tau_m, 1.0, 1.0), linear(b))
