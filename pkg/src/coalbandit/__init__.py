"""Coalitions of linear bandit agents and the cooperative games they induce."""

__version__ = "0.1.0"
