"""Almost weak polynomial stability: operators, orbits, splittings and averages."""

__version__ = "0.1.0"
