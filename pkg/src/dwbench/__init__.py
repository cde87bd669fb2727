"""Decision-support benchmark harness.

Deterministic data generation, parameterized query streams, power and
throughput orchestration with refresh functions, composite metrics, a
predicate-hoisting query rewriter, and an encoded-bitmap index reference —
runnable against a real SQL database or a hermetic simulated backend.
"""

__version__ = "1.0.0"
