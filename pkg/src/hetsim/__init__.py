"""Two-tier cellular network simulator with inter-BS resource lending.

The package couples an event-free Monte-Carlo simulator (deployment, shadowing,
best-SNR attachment, sliced admission, resource transfers between base stations)
with an analytical engine that reproduces the same aggregate throughput and
signaling volume from closed forms, so that each side validates the other.
"""

from hetsim.scenario import (
    BaseStation,
    Deployment,
    ScenarioConfig,
    UserEquipment,
    generate_deployment,
)
from hetsim.radio import ChannelModel, McsEntry, McsTable, default_mcs_table

__all__ = [
    "BaseStation",
    "ChannelModel",
    "Deployment",
    "McsEntry",
    "McsTable",
    "ScenarioConfig",
    "UserEquipment",
    "default_mcs_table",
    "generate_deployment",
]

__version__ = "0.1.0"
