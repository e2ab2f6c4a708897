from .configs import Candidate, PlantConfig, config_sets, generate_configs
from .model import (
    HtscucError,
    HtscucModel,
    HtscucReport,
    build_htscuc,
    build_htscuc_model,
    hydraulic_precheck,
    route,
    schedule,
    solve_htscuc,
    water_balance,
)
from .supergen import SuperGenerator, partition_supergenerators

__all__ = [
    "Candidate", "PlantConfig", "config_sets", "generate_configs", "HtscucError", "HtscucModel",
    "HtscucReport", "build_htscuc", "build_htscuc_model", "hydraulic_precheck", "route", "schedule",
    "solve_htscuc", "water_balance", "SuperGenerator", "partition_supergenerators",
]
