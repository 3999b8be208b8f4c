"""Shipped scenario presets (TOML), loaded through ``importlib.resources``."""
