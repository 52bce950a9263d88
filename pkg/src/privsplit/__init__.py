"""Learned public/privacy feature splitting with baselines and attack evaluation."""

__version__ = "0.1.0"
