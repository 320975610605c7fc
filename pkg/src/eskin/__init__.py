"""Software twin of a dual-modal e-skin: magnetic tactile sensing,
programmable vibration feedback, and a bidirectional human-robot
tactile link, simulated end to end at desk scale."""

__version__ = "0.1.0"
