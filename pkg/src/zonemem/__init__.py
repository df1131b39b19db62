"""Semantic zone-based working-memory management for large SLAM maps.

The package models a WM/LTM signature hierarchy, a baseline policy that
mimics RTAB-Map's retrieve/forget/immunize loop, and a zone-granular policy
that loads and evicts whole semantic zones under a strict signature budget.
"""

from .baseline import BaselineParams, BaselineState
from .errors import (
    DisconnectedWaypoints,
    EvictionExhausted,
    MismatchedScenarios,
    OversizedZone,
    SpecInvalid,
    UnknownSignature,
    UnknownZone,
    ZonememError,
)
from .ltm import LtmStore
from .memory import EventLedger, WorkingMemory
from .model import Pose, Portal, Signature, Violation, WorldMap, Zone, signatures_of, validate, zone_of
from .sim import Scenario, ScenarioTrace, compare, plan_path, preset, run
from .worldgen import WorldSpec, generate, scenario_world, scenario_world_small
from .zone_policy import ActiveZoneSet, ZonePolicyParams

__version__ = "0.1.0"
