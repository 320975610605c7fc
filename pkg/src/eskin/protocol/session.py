"""Six-stage session state machine of the duplex weighing interaction.

Stages: 1 set-target, 2 approach, 3 grasp, 4 position, 5 dispense,
6 confirm. Permitted transitions walk forward one stage at a time, plus
5 -> 4 for re-positioning and a jump to 6 from anywhere via CONFIRM.
Stage advances are driven by the events that end each phase: the
TargetWeight message (1 -> 2), the GRASP command (2 -> 3), the
grasp-complete signal from the gripper (3 -> 4), the VIB_START command
(4 -> 5), and CONFIRM. The transition function is pure: replaying an
event log always reproduces the same state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum

from .messages import (
    Ack, CollisionEvent, ControlCode, ControlCmd, Heartbeat, Hello, Message,
    SensorFrame, StageTransition, TargetWeight, VibrationCmd,
)

COLLISION_FEEDBACK_MS = 200
DEFAULT_TOLERANCE_G = 0.05


class Stage(IntEnum):
    SET_TARGET = 1
    APPROACH = 2
    GRASP = 3
    POSITION = 4
    DISPENSE = 5
    CONFIRM = 6


# internal (non-wire) events

@dataclass(frozen=True)
class MassUpdate:
    grams: float


@dataclass(frozen=True)
class GraspComplete:
    pass


@dataclass(frozen=True)
class Disconnect:
    pass


Event = Message | MassUpdate | GraspComplete | Disconnect


@dataclass(frozen=True)
class SessionState:
    stage: Stage = Stage.SET_TARGET
    target_g: float | None = None
    live_mass_g: float = 0.0
    vibration_on: bool = False
    safe_stopped: bool = False
    last_seq: int | None = None
    tolerance_g: float = DEFAULT_TOLERANCE_G


@dataclass
class StepResult:
    state: SessionState
    to_operator: list[Message] = field(default_factory=list)
    to_robot: list[Message] = field(default_factory=list)
    error: str | None = None


def _transition_legal(current: Stage, to: Stage) -> bool:
    if to == current + 1:
        return True
    if current is Stage.DISPENSE and to is Stage.POSITION:
        return True
    return False


def _advance(state: SessionState, to: Stage,
             result: StepResult) -> SessionState:
    new = replace(state, stage=to)
    result.to_operator.append(StageTransition(int(to)))
    return new


def _reject(state: SessionState, reason: str) -> StepResult:
    # corrective echo of the authoritative stage, state unchanged
    return StepResult(state, to_operator=[StageTransition(int(state.stage))],
                      error=reason)


def session_step(state: SessionState, event: Event) -> StepResult:
    """Apply one event; returns the new state and outbound messages
    (split between the operator link and the local robot)."""

    if isinstance(event, Hello):
        return StepResult(state, to_operator=[Hello()])

    if isinstance(event, (Heartbeat, Ack)):
        return StepResult(state)

    if isinstance(event, SensorFrame):
        if state.last_seq is not None and event.seq <= state.last_seq:
            return StepResult(state, error=(
                f"non-monotonic sensor frame seq {event.seq} "
                f"after {state.last_seq}"))
        return StepResult(replace(state, last_seq=event.seq))

    if isinstance(event, TargetWeight):
        if state.stage is not Stage.SET_TARGET:
            return _reject(state, "target weight only accepted in stage 1")
        result = StepResult(state, to_operator=[Ack(0)])
        new = replace(state, target_g=event.centigrams / 100.0)
        result.state = _advance(new, Stage.APPROACH, result)
        return result

    if isinstance(event, StageTransition):
        to = Stage(event.stage)
        if not _transition_legal(state.stage, to):
            return _reject(state, f"illegal transition "
                                  f"{int(state.stage)} -> {int(to)}")
        result = StepResult(state)
        result.state = _advance(state, to, result)
        return result

    if isinstance(event, ControlCmd):
        return _apply_command(state, event)

    if isinstance(event, CollisionEvent):
        if Stage.APPROACH <= state.stage <= Stage.DISPENSE:
            cmd = VibrationCmd(duties=(event.magnitude,) * 8,
                               duration_ms=COLLISION_FEEDBACK_MS)
            return StepResult(state, to_operator=[cmd])
        return StepResult(state)

    if isinstance(event, MassUpdate):
        new = replace(state, live_mass_g=event.grams)
        result = StepResult(new)
        if (new.stage is Stage.DISPENSE and new.vibration_on
                and new.target_g is not None
                and abs(event.grams - new.target_g) <= new.tolerance_g):
            result.state = replace(new, vibration_on=False)
            result.to_robot.append(ControlCmd(ControlCode.VIB_STOP))
        return result

    if isinstance(event, GraspComplete):
        if state.stage is not Stage.GRASP:
            return _reject(state, "grasp completion outside grasp stage")
        result = StepResult(state)
        result.state = _advance(state, Stage.POSITION, result)
        return result

    if isinstance(event, Disconnect):
        new = replace(state, safe_stopped=True, vibration_on=False)
        return StepResult(new, to_robot=[ControlCmd(ControlCode.VIB_STOP)])

    return StepResult(state, error=f"unhandled event {event!r}")


def _apply_command(state: SessionState, cmd: ControlCmd) -> StepResult:
    code = cmd.code
    result = StepResult(state, to_robot=[cmd])

    if code is ControlCode.CONFIRM:
        new = replace(state, vibration_on=False)
        result.state = _advance(new, Stage.CONFIRM, result)
        return result

    if code is ControlCode.GRASP:
        if state.stage is Stage.APPROACH:
            result.state = _advance(state, Stage.GRASP, result)
        return result

    if code is ControlCode.VIB_START:
        if state.stage is Stage.POSITION:
            new = replace(state, vibration_on=True)
            result.state = _advance(new, Stage.DISPENSE, result)
        elif state.stage is Stage.DISPENSE:
            result.state = replace(state, vibration_on=True)
        else:
            return _reject(state, "vibration start outside stages 4-5")
        return result

    if code is ControlCode.VIB_STOP:
        result.state = replace(state, vibration_on=False)
        return result

    return result
