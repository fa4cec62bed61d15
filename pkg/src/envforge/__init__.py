"""Deterministic text-based agent environments with observation augmentation,
rollout serving, and evaluation metrics."""

__version__ = "0.1.0"
