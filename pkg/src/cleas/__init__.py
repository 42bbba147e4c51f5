"""Continual learning by neuron-level architecture search over an expandable network."""

__version__ = "0.1.0"
