"""Exact moment constants and zero-gap lower bounds for the amplified fourth moment of zeta."""

__version__ = "0.1.0"
