"""Markov-chain sampled SGD and SGDA with stability and risk estimation."""

__version__ = "0.1.0"
