"""Deterministic VANET mobility generation and AODV evaluation."""

__version__ = "0.1.0"
