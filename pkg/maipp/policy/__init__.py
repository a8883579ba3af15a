"""
Attention-based actor-critic policy.

This package contains the network itself, the Laplacian positional embedding
of waypoint graphs, observation assembly and a finite-difference gradient check.
"""

from maipp.policy.network import PolicyNet, PolicyOutput, RecurrentState, attention_layer

__all__ = ["PolicyNet", "PolicyOutput", "RecurrentState", "attention_layer"]
