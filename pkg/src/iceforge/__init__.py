"""Manifest-driven planner and sandbox executor for multi-tool container builds."""

__version__ = "0.1.0"
