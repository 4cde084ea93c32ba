"""Resilience of linear systems to loss of actuator authority."""

__version__ = "0.1.0"
