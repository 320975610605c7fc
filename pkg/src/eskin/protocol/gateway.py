"""WebSocket gateway between the browser operator UI and the robot
endpoint.

Binary WebSocket messages carry raw protocol frames in both directions.
Text messages are the JSON side-channel: a config record on connect
(touch-synthesis constants and the pad geometry) and telemetry
{type, stage, mass, target} at 10 Hz.
"""

from __future__ import annotations

import asyncio
import json

from .. import operator_sim
from ..robot import TICK_S, RobotEndpoint
from .transport import ChannelClosed, LoopbackChannel

TELEMETRY_PERIOD_S = 0.1


def config_record(geom, params: operator_sim.TouchParams,
                  response_grid: dict | None = None) -> str:
    record = {
        "type": "config",
        "footprint_mm": [geom.width_mm, geom.height_mm],
        "sensor_positions_mm": geom.sensor_positions_mm.tolist(),
        "motor_positions_mm": geom.motor_positions_mm.tolist(),
        "touch": params.to_dict(),
    }
    if response_grid is not None:
        record["response_grid"] = response_grid
    return json.dumps(record)


class GatewayServer:
    """Single-session gateway: one robot endpoint, one UI client."""

    def __init__(self, robot: RobotEndpoint, operator_side: LoopbackChannel,
                 host: str = "127.0.0.1", port: int = 8765,
                 realtime: bool = True):
        self.robot = robot
        self.operator_side = operator_side
        self.host = host
        self.port = port
        self.realtime = realtime
        self.client = None
        self.had_client = False
        self.stopped: asyncio.Event | None = None  # created in serve()

    def _config_payload(self) -> str:
        if not hasattr(self, "_config_json"):
            ops = operator_sim.OperatorSkin(self.robot.geom)
            self._config_json = config_record(
                self.robot.geom, ops.params, ops.response_grid())
        return self._config_json

    async def _handler(self, websocket):
        if self.client is not None:
            await websocket.close(code=1013, reason="session busy")
            return
        self.client = websocket
        self.had_client = True
        await websocket.send(self._config_payload())
        try:
            async for data in websocket:
                if isinstance(data, bytes):
                    self.operator_side.send(data)
        except Exception:
            pass
        finally:
            self.client = None
            self.stopped.set()  # one session per serve: closing ends it

    async def _send_to_client(self, payload) -> None:
        if self.client is None:
            return
        try:
            await self.client.send(payload)
        except Exception:
            self.client = None

    async def _pump(self):
        t = 0.0
        last_telemetry = -TELEMETRY_PERIOD_S
        while not self.stopped.is_set():
            self.robot.tick(t)
            try:
                while True:
                    raw = self.operator_side.recv()
                    if not raw:
                        break
                    await self._send_to_client(raw)
            except ChannelClosed:
                self.stopped.set()
                break
            if t - last_telemetry >= TELEMETRY_PERIOD_S:
                last_telemetry = t
                await self._send_to_client(self.robot.telemetry().to_json())
            t += TICK_S
            if self.realtime:
                await asyncio.sleep(TICK_S)
            else:
                await asyncio.sleep(0)

    async def serve(self, ready_event: asyncio.Event | None = None,
                    duration_s: float | None = None) -> None:
        import websockets

        self.stopped = asyncio.Event()
        async with websockets.serve(self._handler, self.host, self.port):
            if ready_event is not None:
                ready_event.set()
            pump = asyncio.create_task(self._pump())
            try:
                if duration_s is None:
                    await self.stopped.wait()
                else:
                    await asyncio.wait_for(self.stopped.wait(), duration_s)
            except asyncio.TimeoutError:
                pass
            finally:
                self.stopped.set()
                await pump
