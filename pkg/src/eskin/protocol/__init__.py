"""Bidirectional tactile link: wire framing, gesture recognition,
the six-stage session machine, and transports."""

from .messages import (  # noqa: F401
    Ack, BadMagicError, CollisionEvent, ControlCode, ControlCmd, CrcError,
    FrameDecoder, Heartbeat, Hello, LengthError, Message, ProtocolError,
    SensorFrame, StageTransition, TargetWeight, TruncatedError, UnknownTypeError,
    VibrationCmd, decode, encode,
)
from .gestures import (  # noqa: F401
    Gesture, GestureConfig, GestureDetector, LongPress, NoGesture, PressAt,
    Slide, classify_gesture, gesture_to_command,
)
from .session import (  # noqa: F401
    Disconnect, GraspComplete, MassUpdate, SessionState, Stage, StepResult,
    session_step,
)
from .transport import (  # noqa: F401
    ChannelClosed, FrameConnection, LoopbackChannel, loopback_pair,
)
