"""System identification from single-sensor traces via the signed CDT."""

__version__ = "0.1.0"

from .signals import Signal, load_signal, save_signal
from .transform import (
    CdtRepr,
    ReferenceDomain,
    ScdtRepr,
    WarpMap,
    apply_warp,
    cdt_forward,
    cdt_inverse,
    check_composition,
    jordan_decompose,
    scdt_flatten,
    scdt_forward,
    scdt_inverse,
)
from .models import (
    ConvDiffModel,
    DiffusionModel,
    TaylorNeighborhood,
    WaveModel,
    estimate_wave_speed,
    taylor_inverse_warp_D,
    taylor_inverse_warp_nu,
)
from .simulator import (
    Fixed,
    InitialCondition,
    MaterialParams,
    ParameterSpace,
    SensorTrace,
    SimGrid,
    Uniform,
    conservation_check,
    sample_params,
    simulate,
    simulate_batch,
)
from .classifier import (
    NlsModel,
    NsModel,
    Prediction,
    TrainingSet,
    predict_nls,
    predict_ns,
    select_k,
    train_nls,
    train_ns,
)
