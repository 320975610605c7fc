"""Cross-language loop: frames synthesized by the browser UI's pipeline
(via node on the compiled frontend sources) must classify into the
matching gestures on the robot side."""

import shutil
import subprocess
from pathlib import Path

import pytest

from eskin import operator_sim
from eskin.protocol import gestures as g
from eskin.protocol import messages as msg

FRONTEND = Path(__file__).resolve().parent.parent / "frontend"
CONFIG = FRONTEND / "tests" / "fixtures" / "gateway-config.json"
EMITTER = FRONTEND / "scripts" / "emit_frames.mjs"
DIST = FRONTEND / "dist-lib" / "forward.js"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not DIST.exists() or not CONFIG.exists(),
    reason="frontend not built (run `npm run build:lib` in frontend/)")


def ui_frames(*args: str) -> list[msg.SensorFrame]:
    out = subprocess.run(
        ["node", str(EMITTER), str(CONFIG), *args],
        capture_output=True, text=True, check=True)
    frames = []
    for line in out.stdout.strip().split("\n"):
        decoded = msg.decode(bytes.fromhex(line))
        assert isinstance(decoded, msg.SensorFrame)
        frames.append(decoded)
    return frames


def classify(frames: list[msg.SensorFrame], rate_hz: float = 50.0):
    detector = g.GestureDetector()
    hits = []
    for i, frame in enumerate(frames):
        zeroed = operator_sim.from_sensor_frame(frame)
        hit = detector.push(i * 1000.0 / rate_hz, zeroed)
        if hit is not None:
            hits.append(hit)
    return hits


def test_browser_press_classifies_robot_side():
    for region in (0, 3, 5):
        hits = classify(ui_frames("press", str(region)))
        assert len(hits) == 1, f"region {region}: {hits}"
        assert isinstance(hits[0], g.PressAt)
        assert hits[0].region == region


def test_browser_slide_classifies_robot_side():
    hits = classify(ui_frames("slide", "2", "3"))
    assert len(hits) == 1
    assert isinstance(hits[0], g.Slide)
    assert hits[0].axis == "+x"


def test_frame_sequence_monotonic():
    frames = ui_frames("press", "1")
    seqs = [f.seq for f in frames]
    assert seqs == sorted(set(seqs))
