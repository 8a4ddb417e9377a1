"""Reactivity-aware unit commitment for load-following nuclear fleets."""
__version__ = "0.1.0"
