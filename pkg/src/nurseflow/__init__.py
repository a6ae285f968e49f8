"""Nurse staffing and scheduling under uncertain demand.

Deterministic and multi-stage stochastic rostering models, an exact reference
MILP solver, a generative flow-network scheduler and the evaluation protocol.
"""

__version__ = "0.1.0"
