"""Core model types, augmentation and dynamic programming."""

from .augment import AugmentedMdp, augment
from .errors import CcocError, InfeasibleError, ModelError
from .mdp import DetPolicy, FiniteMdp, MixedPolicy, SafetySpec, SpecKind, ValueTable

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
    "ValueTable",
    "augment",
]
