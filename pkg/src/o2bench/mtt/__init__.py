"""Multi-target tracking: coordinated-turn scenarios, SMC-PHD filtering
with three estimate extractors, OSPA scoring, multi-sensor fusion
strategies, and the filter-free multi-sensor clutter filter."""

from .ct import (
    SensorModel,
    ct_transition,
    detection_probability,
    invert_range_bearing,
    observe_range_bearing,
    range_bearing_sensor,
    position_sensor,
)
from .ospa import ospa
from .scenario import BirthModel, Scenario, ScenarioConfig, generate_scenario
from .phd import PhdConfig, SmcPhd, smc_phd_step, extract_estimates
from .clutterfilter import ClusterParams, cluster_clutter_filter
from .multisensor import multisensor_track

__all__ = [
    "SensorModel",
    "ct_transition",
    "detection_probability",
    "invert_range_bearing",
    "observe_range_bearing",
    "range_bearing_sensor",
    "position_sensor",
    "ospa",
    "BirthModel",
    "Scenario",
    "ScenarioConfig",
    "generate_scenario",
    "PhdConfig",
    "SmcPhd",
    "smc_phd_step",
    "extract_estimates",
    "ClusterParams",
    "cluster_clutter_filter",
    "multisensor_track",
]
