"""Gaze-driven decision dynamics: fixation extraction, rate estimation,
coupled-state simulation, and a Hermite-gated LSTM fitted to the result."""

from .errors import GazedynError
from .estimation import (
    OdeParams,
    estimate_k,
    estimate_lambda,
    estimate_m,
    estimate_mu,
    estimate_params,
)
from .fixations import (
    FixationRecord,
    LearnRecord,
    ShotFixationRecord,
    build_learn,
    detect_fixations,
    euclidean_distance,
    match_shots,
)
from .hermite import (
    HermiteEvaluator,
    derivative_gram,
    hermite_activation,
    hermite_activation_grad,
    hermite_fn,
    hermite_fn_derivative,
    orthogonality_gram,
)
from .hlstm import (
    DenseHead,
    HlstmCell,
    HlstmNetwork,
    TrainConfig,
    backward,
    cell_forward,
    network_forward,
    predict_report,
    train,
)
from .ode import (
    InitialConditions,
    OdeState,
    Trajectory,
    analytic_residual_g,
    analytic_residual_v,
    integrate_rk4,
    rhs,
)
from .records import (
    CharacterTrackSample,
    GazeSample,
    ShotEvent,
    load_gaze,
    load_shots,
    load_tracks,
)
from .synth import Session, SessionSpec, generate_session

__version__ = "0.1.0"
