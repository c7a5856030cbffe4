"""Desk-scale simulation of a cloud-mediated automatic pet feeder.

The pieces, bottom to top: a deterministic virtual clock and the physical
world it steps (`clock`, `world`); behavioral sensor and servo models
(`sensors`, `servo`); the device controller state machine (`firmware`);
a ThingSpeak-style channel broker with an HTTP face (`broker`, `httpd`,
`client`); and the scenario harness plus live server (`scenario`,
`harness`, `live`, `cli`).
"""

from .broker import (AuthError, Broker, Channel, ChannelNotFound, FeedEntry,
                     RateLimitPolicy, WriteAccepted, WriteRejected)
from .client import BrokerUnreachable, HttpBrokerClient, LocalBrokerClient
from .clock import SimClock
from .firmware import (Controller, ControllerConfig, ControllerState, Phase,
                       PinMap, SimulatedPins, decide, decode_ir_fields,
                       encode_ir_fields)
from .harness import RunReport, export_series, parse_series, run_scenario
from .scenario import (OwnerRule, Scenario, ScenarioError, ScenarioEvent,
                       load_scenario, scenario_from_dict)
from .sensors import (EchoResult, IRConfig, Level, UltrasonicConfig, ir_read,
                      pulse_to_distance, trigger_measure)
from .servo import Servo, servo_step
from .world import BowlGeometry, FlowModel, WorldState, advance, script_pet

__all__ = [
    "AuthError", "Broker", "BowlGeometry", "BrokerUnreachable", "Channel",
    "ChannelNotFound", "Controller", "ControllerConfig", "ControllerState",
    "EchoResult", "FeedEntry", "FlowModel", "HttpBrokerClient", "IRConfig",
    "Level", "LocalBrokerClient", "OwnerRule", "Phase", "PinMap",
    "RateLimitPolicy", "RunReport", "Scenario", "ScenarioError",
    "ScenarioEvent", "Servo", "SimClock", "SimulatedPins", "UltrasonicConfig",
    "WorldState", "WriteAccepted", "WriteRejected", "advance", "decide",
    "decode_ir_fields", "encode_ir_fields", "export_series", "ir_read",
    "load_scenario", "parse_series", "pulse_to_distance", "run_scenario",
    "scenario_from_dict", "script_pet", "servo_step", "trigger_measure",
]
