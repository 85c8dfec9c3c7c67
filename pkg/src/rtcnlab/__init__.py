"""rtcnlab: ranked tree-child network pattern laboratory.

Generate networks by the forward construction, count fringe patterns,
run the pattern-count Markov chains exactly and by simulation, solve the
moment recurrences in exact arithmetic, and verify the limit laws at
desk scale.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
