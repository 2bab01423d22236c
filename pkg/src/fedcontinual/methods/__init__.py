from .ewc import FisherInfo, ewc_penalty, fisher_estimate, oewc_update
from .penalties import (
    Distillation,
    QuadraticAnchor,
    ReplayBatch,
    TeacherSnapshot,
    kd_loss,
    replay_loss,
)
from .replay import ReplayBuffer, kmeans, replay_select
from .si import SIAccumulator, si_consolidate, si_penalty, si_step
from .strategies import (
    METHODS,
    CLState,
    MethodParams,
    Strategy,
    canonical_method,
    make_strategy,
)

__all__ = [
    "FisherInfo", "ewc_penalty", "fisher_estimate", "oewc_update",
    "Distillation", "QuadraticAnchor", "ReplayBatch", "TeacherSnapshot", "kd_loss",
    "replay_loss", "ReplayBuffer", "kmeans", "replay_select",
    "SIAccumulator", "si_consolidate", "si_penalty", "si_step",
    "METHODS", "CLState", "MethodParams", "Strategy", "canonical_method", "make_strategy",
]
