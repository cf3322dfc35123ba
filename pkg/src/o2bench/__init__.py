"""State-estimation benchmark toolkit: observation-only inference next to
the prediction-correction filter family, fusion-benefit analysis, and
multi-sensor multi-target tracking."""

from .core import (
    FusionError,
    GammaSpec,
    GaussianBelief,
    RngStream,
    gamma_sample,
    gaussian_sample,
    kf_fuse,
    rmse,
)
from .models import StateSpaceModel, invert_observation, make_model, model_a, model_b, simulate, ungm
from .filters import (
    ParticleSet,
    UnscentedParams,
    ekf_step,
    kalman_step,
    pf_step,
    resample,
    ukf_step,
    unscented_transform,
)
from .o2 import (
    DebiasSpec,
    SignStrategy,
    fisher_crb,
    o2_debias,
    o2_estimate,
    o2_multisensor_fuse,
    o2_run,
    o2_solve_system,
)
from .pofb import FusionCase, SweepGrid, particle_fusion, pofb_sweep, pofb_vs_min, pofb_vs_x, pofb_vs_y

__version__ = "0.1.0"
