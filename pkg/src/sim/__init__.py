"""Discrete-event Monte Carlo engine."""
