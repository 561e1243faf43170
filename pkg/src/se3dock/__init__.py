"""Sliding-mode rendezvous and docking on SE(3) with neural gain tuning."""

__version__ = "0.1.0"
