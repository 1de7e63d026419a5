"""Finite-element laboratory for two-pole Aharonov-Bohm operators."""
