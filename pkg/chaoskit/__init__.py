"""chaoskit: a laboratory for mean-field interacting particle systems."""

__version__ = "1.0.0"
