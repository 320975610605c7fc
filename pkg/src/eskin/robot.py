"""Robot-side endpoint and the headless scripted operator.

The robot endpoint owns the session machine. It classifies gestures on
the operator's zeroed sensor frames, maps them to control commands for
the current stage, drives a gripper + spoon + scale simulation, and
feeds mass updates back into the session. The scripted operator replays
a recorded action log through the same wire protocol, observing stage
echoes and the telemetry side-channel exactly as the browser UI would.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import actuation, operator_sim, skin, weighing
from .protocol.gestures import GestureDetector, gesture_to_command
from .protocol.messages import (
    CollisionEvent, ControlCode, ControlCmd, Heartbeat, Hello, Message,
    SensorFrame, StageTransition, TargetWeight, VibrationCmd,
)
from .protocol.session import (
    Disconnect, GraspComplete, MassUpdate, SessionState, Stage, StepResult,
    session_step,
)
from .protocol.transport import ChannelClosed, FrameConnection

TICK_S = 0.02
MOVE_STEP_MM = 5.0
TILT_STEP_DEG = 5.0
GRASP_DURATION_S = 0.4
WORKSPACE_MM = 60.0
ROBOT_FRAME_PERIOD_S = 0.05
DISPENSE_MOTORS = 8
DISPENSE_DUTY = 0.5


@dataclass
class RobotTelemetry:
    stage: int
    mass_g: float
    target_g: float | None

    def to_json(self) -> str:
        return json.dumps({"type": "telemetry", "stage": self.stage,
                           "mass": round(self.mass_g, 4),
                           "target": self.target_g})


class RobotEndpoint:
    """Session owner: consumes operator frames/commands, simulates the
    gripper, spoon, and scale, and emits feedback to the operator."""

    def __init__(self, conn: FrameConnection, seed: int = 0,
                 material: weighing.Material = weighing.FLOUR,
                 spoon_load_g: float = 5.0,
                 geom: skin.SkinGeometry | None = None,
                 log: list | None = None,
                 stop_tolerance_g: float = 0.03):
        self.conn = conn
        # stop well inside the outcome band so the last increment cannot
        # push the final mass out of tolerance
        self.session = SessionState(tolerance_g=stop_tolerance_g)
        self.detector = GestureDetector(geom=geom)
        self.material = material
        self.rng = np.random.default_rng(seed)
        self.geom = geom or skin.SkinGeometry()
        self.log = log if log is not None else []

        self.position_mm = np.zeros(3)
        self.gripper_closed = False
        self._grasp_done_at: float | None = None
        self.spoon = weighing.SpoonState(0.0, spoon_load_g)
        self.motor_duties = np.zeros(8)
        self.scale_mass_g = 0.0
        self.collisions_seen = 0
        self._frame_seq = 1
        self._last_frame_t = -1.0
        self.closed = False

    # -- wire plumbing ------------------------------------------------

    def _send(self, t_s: float, message: Message) -> None:
        self.log.append((round(t_s, 4), "robot->operator", message))
        self.conn.send(message)

    def _apply_session_result(self, t_s: float, result: StepResult) -> None:
        for m in result.to_operator:
            self._send(t_s, m)
        for m in result.to_robot:
            if isinstance(m, ControlCmd):
                self._execute(t_s, m.code)
        if result.error:
            self.log.append((round(t_s, 4), "robot-error", result.error))

    def _step_session(self, t_s: float, event) -> None:
        result = session_step(self.session, event)
        self.session = result.state
        self._apply_session_result(t_s, result)

    # -- command execution --------------------------------------------

    def _execute(self, t_s: float, code: ControlCode) -> None:
        moves = {
            ControlCode.MOVE_XP: (0, +1), ControlCode.MOVE_XN: (0, -1),
            ControlCode.MOVE_YP: (1, +1), ControlCode.MOVE_YN: (1, -1),
            ControlCode.MOVE_ZP: (2, +1), ControlCode.MOVE_ZN: (2, -1),
        }
        if code in moves:
            axis, sign = moves[code]
            target = self.position_mm[axis] + sign * MOVE_STEP_MM
            if abs(target) > WORKSPACE_MM:
                self.inject_collision(t_s, magnitude=160)
            else:
                self.position_mm[axis] = target
        elif code is ControlCode.GRASP:
            self._grasp_done_at = t_s + GRASP_DURATION_S
        elif code is ControlCode.RELEASE:
            self.gripper_closed = False
        elif code is ControlCode.TILT_UP:
            self.spoon = weighing.SpoonState(
                min(90.0, self.spoon.tilt_deg + TILT_STEP_DEG),
                self.spoon.load_remaining_g)
        elif code is ControlCode.TILT_DOWN:
            self.spoon = weighing.SpoonState(
                max(0.0, self.spoon.tilt_deg - TILT_STEP_DEG),
                self.spoon.load_remaining_g)
        elif code is ControlCode.VIB_START:
            self.motor_duties = np.full(8, DISPENSE_DUTY)
            self.motor_duties[DISPENSE_MOTORS:] = 0.0
        elif code is ControlCode.VIB_STOP:
            # stop pouring: motors off and the arm levels the spoon
            self.motor_duties = np.zeros(8)
            self.spoon = weighing.SpoonState(0.0, self.spoon.load_remaining_g)

    def inject_collision(self, t_s: float, magnitude: int = 150) -> None:
        self.collisions_seen += 1
        self._step_session(t_s, CollisionEvent(magnitude))

    # -- main loop ----------------------------------------------------

    def tick(self, t_s: float) -> None:
        if self.closed:
            return
        try:
            inbound = self.conn.poll()
        except ChannelClosed:
            self._step_session(t_s, Disconnect())
            self.closed = True
            return

        for message in inbound:
            self.log.append((round(t_s, 4), "operator->robot", message))
            if isinstance(message, SensorFrame):
                self._step_session(t_s, message)
                zeroed = operator_sim.from_sensor_frame(message)
                gesture = self.detector.push(t_s * 1e3, zeroed)
                if gesture is not None:
                    self.log.append((round(t_s, 4), "gesture", gesture))
                    code = gesture_to_command(gesture, self.session.stage)
                    if code is not None:
                        self._step_session(t_s, ControlCmd(code))
            else:
                self._step_session(t_s, message)

        if (self._grasp_done_at is not None and t_s >= self._grasp_done_at
                and self.session.stage is Stage.GRASP):
            self.gripper_closed = True
            self._grasp_done_at = None
            self._step_session(t_s, GraspComplete())

        if (self.session.stage is Stage.DISPENSE
                and self.session.vibration_on):
            vib = actuation.rms_intensity(self.motor_duties)
            released, self.spoon = weighing.step(
                self.spoon, self.material, vib, TICK_S, self.rng)
            if released > 0:
                self.scale_mass_g += released
            self._step_session(t_s, MassUpdate(self.scale_mass_g))

        if t_s - self._last_frame_t >= ROBOT_FRAME_PERIOD_S:
            self._last_frame_t = t_s
            frame = operator_sim.to_sensor_frame(
                self._frame_seq, self._gripper_reading())
            self._frame_seq += 1
            self._send(t_s, frame)

    def _gripper_reading(self) -> np.ndarray:
        """Zeroed gripper-skin channels: a fixed handle signature while
        closed, zeros while open."""
        if not self.gripper_closed:
            return np.zeros(24)
        sig = np.zeros(24)
        sig[6:9] = (40.0, -25.0, 60.0)   # spoon handle across region 2
        sig[15:18] = (-30.0, 20.0, 55.0)  # and region 5
        return sig

    def telemetry(self) -> RobotTelemetry:
        return RobotTelemetry(int(self.session.stage), self.scale_mass_g,
                              self.session.target_g)


# ---------------------------------------------------------------------------
# Scripted operator

HAPPY_PATH_SCRIPT = [
    {"action": "hello"},
    {"action": "target", "grams": 1.0},
    {"action": "wait_stage", "stage": 2},
    {"action": "slide", "from": 2, "to": 3},
    {"action": "press", "region": 5},
    {"action": "inject_collision", "magnitude": 150},
    {"action": "press", "region": 7},
    {"action": "wait_stage", "stage": 4},
    *[{"action": "press", "region": 6} for _ in range(10)],
    {"action": "press", "region": 0},
    {"action": "wait_stage", "stage": 5},
    {"action": "wait_target"},
    {"action": "press", "region": 7},
    {"action": "wait_stage", "stage": 6},
]


class ScriptedOperator:
    """Replays an action log through the wire protocol at 50 Hz.

    Observes only what a real operator UI sees: binary stage echoes and
    vibration commands on the link, plus the JSON telemetry values.
    """

    def __init__(self, conn: FrameConnection, script: list[dict],
                 ops: operator_sim.OperatorSkin | None = None,
                 log: list | None = None):
        self.conn = conn
        self.script = deque(script)
        self.ops = ops or operator_sim.OperatorSkin()
        self.log = log if log is not None else []
        self.seq = 1
        self.stage_seen = 1
        self.vibration_cmds_received = 0
        self.target_g: float | None = None
        self._touch: deque | None = None
        self._pending_collision: int | None = None
        self._frame_dt = 1.0 / self.ops.params.frame_rate_hz
        self._next_frame_t = 0.0
        self._wait_until_t: float | None = None

    def _send(self, t_s: float, message: Message) -> None:
        self.log.append((round(t_s, 4), "operator->robot", message))
        self.conn.send(message)

    def take_collision_request(self) -> int | None:
        mag, self._pending_collision = self._pending_collision, None
        return mag

    def done(self) -> bool:
        return not self.script and self._touch is None

    def tick(self, t_s: float, telemetry: RobotTelemetry) -> None:
        for message in self.conn.poll():
            self.log.append((round(t_s, 4), "robot->operator", message))
            if isinstance(message, StageTransition):
                self.stage_seen = message.stage
            elif isinstance(message, VibrationCmd):
                self.vibration_cmds_received += 1

        self._advance_script(t_s, telemetry)

        if t_s >= self._next_frame_t:
            self._next_frame_t = t_s + self._frame_dt
            values = np.zeros(24)
            if self._touch:
                _, values = self._touch.popleft()
                if not self._touch:
                    self._touch = None
            self._send(t_s, operator_sim.to_sensor_frame(self.seq, values))
            self.seq += 1

    def _advance_script(self, t_s: float, telemetry: RobotTelemetry) -> None:
        if self._touch is not None:
            return
        while self.script:
            step = self.script[0]
            action = step["action"]
            if action == "hello":
                self._send(t_s, Hello())
            elif action == "target":
                self.target_g = float(step["grams"])
                self._send(t_s, TargetWeight(round(self.target_g * 100)))
            elif action == "stage":
                self._send(t_s, StageTransition(int(step["to"])))
            elif action == "heartbeat":
                self._send(t_s, Heartbeat())
            elif action == "inject_collision":
                self._pending_collision = int(step.get("magnitude", 150))
            elif action == "press":
                stream = self.ops.press_stream(
                    int(step["region"]),
                    pressure=float(step.get("pressure", 0.9)),
                    duration_ms=float(step.get("duration_ms", 300.0)))
                self._touch = deque(stream)
            elif action == "slide":
                stream = self.ops.slide_stream(
                    int(step["from"]), int(step["to"]),
                    duration_ms=float(step.get("duration_ms", 250.0)))
                self._touch = deque(stream)
            elif action == "wait_stage":
                if self.stage_seen < int(step["stage"]):
                    return
            elif action == "wait_ms":
                if self._wait_until_t is None:
                    self._wait_until_t = t_s + float(step["ms"]) / 1e3
                if t_s < self._wait_until_t:
                    return
                self._wait_until_t = None
            elif action == "wait_target":
                if self.target_g is None or telemetry.mass_g < 1e-12 or \
                        abs(telemetry.mass_g - self.target_g) > 0.05:
                    return
            else:
                raise ValueError(f"unknown script action {action!r}")
            self.script.popleft()
            if action in ("press", "slide"):
                return


# ---------------------------------------------------------------------------
# Orchestration

@dataclass
class ScriptedRunResult:
    final_stage: int
    final_mass_g: float
    target_g: float | None
    collisions_injected: int
    vibration_cmds_to_operator: int
    duration_s: float
    event_log: list = field(default_factory=list)

    @property
    def mass_error_g(self) -> float:
        if self.target_g is None:
            return math.nan
        return self.final_mass_g - self.target_g


def run_scripted_session(script=None, seed: int = 0,
                         material: weighing.Material = weighing.FLOUR,
                         timeout_s: float = 120.0,
                         ops: operator_sim.OperatorSkin | None = None,
                         geom: skin.SkinGeometry | None = None
                         ) -> ScriptedRunResult:
    """Run robot endpoint and scripted operator over a loopback link on
    a simulated clock; deterministic per seed."""
    from .protocol.transport import loopback_pair

    script = HAPPY_PATH_SCRIPT if script is None else script
    a, b = loopback_pair()
    log: list = []
    robot = RobotEndpoint(FrameConnection(a), seed=seed, material=material,
                          geom=geom, log=log)
    operator = ScriptedOperator(FrameConnection(b), script, ops=ops, log=log)

    t = 0.0
    while t < timeout_s:
        operator.tick(t, robot.telemetry())
        mag = operator.take_collision_request()
        if mag is not None:
            robot.inject_collision(t, mag)
        robot.tick(t)
        t += TICK_S
        if operator.done() and robot.session.stage is Stage.CONFIRM:
            break

    return ScriptedRunResult(
        final_stage=int(robot.session.stage),
        final_mass_g=robot.scale_mass_g,
        target_g=robot.session.target_g,
        collisions_injected=robot.collisions_seen,
        vibration_cmds_to_operator=operator.vibration_cmds_received,
        duration_s=t,
        event_log=log,
    )


def load_script(path) -> list[dict]:
    """JSON-lines operator script."""
    actions = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                actions.append(json.loads(line))
    return actions


def save_script(path, script: list[dict]) -> None:
    with open(path, "w") as f:
        for step in script:
            f.write(json.dumps(step) + "\n")
