"""DoorKey gridworld RL with VAE- and LLM-based intrinsic rewards."""

from imgrid._core import (
    DEFAULT_MISSION,
    PROMPT_TEMPLATE_VERSION,
    Action,
    CellView,
    GridWorld,
    HeuristicMockClient,
    Observation,
    StepOutcome,
    VisibleObjects,
    build_prompt,
    find_goal_plan,
    kl_divergence,
    moving_average,
    parse_score,
    run_experiment,
    softmax,
    visible_objects,
)

__all__ = [
    "DEFAULT_MISSION",
    "PROMPT_TEMPLATE_VERSION",
    "Action",
    "CellView",
    "GridWorld",
    "HeuristicMockClient",
    "Observation",
    "StepOutcome",
    "VisibleObjects",
    "build_prompt",
    "find_goal_plan",
    "kl_divergence",
    "moving_average",
    "parse_score",
    "run_experiment",
    "softmax",
    "visible_objects",
]
