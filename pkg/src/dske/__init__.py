"""DSKE protocol kit.

Finite-field arithmetic, polynomial tags, Shamir sharing over element
tuples, PSRD tables, the Alice/Hub/Bob state machines, an adversary model,
a deterministic simulator and exhaustive bound estimators.
"""

from .field import GF16, GF256, GF2_64, FieldElement, FieldError, FieldSpec, spec_by_name
from .sharing import SecretTuple, ShareTuple, ThresholdParams, extend_shares, reconstruct
from .simnet import ScenarioConfig, run_session, run_trials
from .wegman import MessageTagKey, SecretTagKey, tag_message, tag_secret

__version__ = "0.1.0"

__all__ = [
    "FieldElement", "FieldError", "FieldSpec", "GF16", "GF256", "GF2_64", "spec_by_name",
    "MessageTagKey", "SecretTagKey", "tag_message", "tag_secret",
    "SecretTuple", "ShareTuple", "ThresholdParams", "extend_shares", "reconstruct",
    "ScenarioConfig", "run_session", "run_trials",
]
