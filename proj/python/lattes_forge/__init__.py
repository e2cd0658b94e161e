"""Flexible Lattes maps and strictly postcritically finite perturbations."""

from ._core import (
    LattesForgeError,
    RationalMap,
    build_map,
    certify,
    construct,
    critical_points,
    theta,
    theta_data,
    verify_lemma3,
    verify_semiconjugacy,
    weierstrass_p,
)

__all__ = [
    "LattesForgeError",
    "RationalMap",
    "build_map",
    "certify",
    "construct",
    "critical_points",
    "theta",
    "theta_data",
    "verify_lemma3",
    "verify_semiconjugacy",
    "weierstrass_p",
]
