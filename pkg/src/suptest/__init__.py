"""Numerical toolkit around testing whether an integer-valued law has finite support."""

from .dist import (
    IDENTITY,
    FinitePmf,
    GeometricPmf,
    IntegerLaw,
    MixturePmf,
    SampleSizeMap,
    TailPmf,
    cdf,
    law_from_json,
    mix_with_tail,
    normalize_finite,
    sample,
    tail_normalizer,
    truncate,
    tv_distance,
)
from .errors import (
    InvalidLaw,
    InvalidSample,
    InvalidTolerance,
    InvalidWeights,
    LevelViolation,
    MixedModeError,
    NotClassifiable,
    TooLarge,
    VerificationFailure,
)
from .teststat import (
    ExpectationReport,
    TestFamily,
    brute_force_expectation,
    exact_split_max_expectation,
    expectation,
    mc_expectation,
    split_max_family,
    split_max_rejection_family,
)
from .adversary import (
    AdversarySchedule,
    build_adversary,
    build_dual_adversary,
    dualize,
    tail_union_bound,
    verify_adversary,
)
from .tsirelson import (
    Arc,
    EventFamily,
    PathEvent,
    TorusPoint,
    classify,
    event_probability,
    inject_f,
    path_increments,
    pushforward,
    reduce_event,
    simulate_uniform_solution,
)

__version__ = "0.1.0"

__all__ = [
    "IDENTITY",
    "FinitePmf",
    "GeometricPmf",
    "IntegerLaw",
    "MixturePmf",
    "SampleSizeMap",
    "TailPmf",
    "cdf",
    "law_from_json",
    "mix_with_tail",
    "normalize_finite",
    "sample",
    "tail_normalizer",
    "truncate",
    "tv_distance",
    "InvalidLaw",
    "InvalidSample",
    "InvalidTolerance",
    "InvalidWeights",
    "LevelViolation",
    "MixedModeError",
    "NotClassifiable",
    "TooLarge",
    "VerificationFailure",
    "ExpectationReport",
    "TestFamily",
    "brute_force_expectation",
    "exact_split_max_expectation",
    "expectation",
    "mc_expectation",
    "split_max_family",
    "split_max_rejection_family",
    "AdversarySchedule",
    "build_adversary",
    "build_dual_adversary",
    "dualize",
    "tail_union_bound",
    "verify_adversary",
    "Arc",
    "EventFamily",
    "PathEvent",
    "TorusPoint",
    "classify",
    "event_probability",
    "inject_f",
    "path_increments",
    "pushforward",
    "reduce_event",
    "simulate_uniform_solution",
]
