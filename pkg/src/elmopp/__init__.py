"""Deterministic single-intersection traffic-signal simulation toolkit."""

from .chaos import (
    HyperchaosParams,
    derivative,
    euler_integrate,
    experiment_series,
    make_inflow,
    training_series,
)
from .predictor import (
    AdamState,
    NlstmCell,
    PredictorModel,
    TrainConfig,
    adam_step,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .road_graph import (
    Configuration,
    ConfigurationSet,
    DirectedEdge,
    GraphError,
    PseudoDiedge,
    RoadGraph,
    enumerate_configurations,
    four_star,
    load_tensor,
    parse_graph,
    serialize_graph,
    validate_graph,
)
from .simulation import (
    CONTROLLERS,
    IntersectionSim,
    SimConfig,
    SweepRow,
    TrialResult,
    baseline_controller,
    greenshield_outflow,
    run_sweep,
    run_trial,
    sweep_summaries,
    sweep_ttests,
)
from .stats import (
    SampleSummary,
    TTestResult,
    critical_value,
    reference_table,
    summarize,
    t_test,
)
from .urgency import (
    configuration_urgency,
    cumulative_configuration_urgency,
    cumulative_urgency,
    hold_or_switch,
    kernel_weights,
    select_configuration,
    subedge_urgency,
    triangle_kernel,
)

__version__ = "0.1.0"
