"""Impact-aware task-space QP control for articulated robots, with a verifying simulator."""

__version__ = "0.1.0"
