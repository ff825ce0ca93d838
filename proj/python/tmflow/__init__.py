"""Teichmueller harmonic map flow from cylinders into warped products."""

from ._core import (
    SUMMARY_SCHEMA_VERSION,
    collar_width,
    default_config,
    execute,
    extremal_radii,
    parse_config,
    simulate,
    thm2_regime,
)

__all__ = [
    "SUMMARY_SCHEMA_VERSION",
    "collar_width",
    "default_config",
    "execute",
    "extremal_radii",
    "parse_config",
    "simulate",
    "thm2_regime",
]
