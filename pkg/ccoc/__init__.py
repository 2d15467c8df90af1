"""Joint chance constrained optimal control of finite MDPs via two linear programs."""

__version__ = "0.1.0"

from .core import (
    AugmentedMdp,
    CcocError,
    DetPolicy,
    FiniteMdp,
    InfeasibleError,
    MixedPolicy,
    ModelError,
    SafetySpec,
    SpecKind,
    ValueTable,
    augment,
)
from .synthesis import SynthesisConfig, SynthesisResult, synthesize

__all__ = [
    "AugmentedMdp",
    "CcocError",
    "DetPolicy",
    "FiniteMdp",
    "InfeasibleError",
    "MixedPolicy",
    "ModelError",
    "SafetySpec",
    "SpecKind",
    "SynthesisConfig",
    "SynthesisResult",
    "ValueTable",
    "augment",
    "synthesize",
]
