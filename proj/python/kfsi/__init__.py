# SPDX-License-Identifier: Apache-2.0
"""Desk-scale simulator for an incompressible shear-dependent fluid coupled
to a linearly elastic Koiter shell, with its verification suites."""

try:
    from ._kfsi import (
        Config,
        KfsiError,
        StressLaw,
        Surface,
        config_from_file,
        preset,
        run,
        surface,
        tau,
        verify,
    )
except ImportError:  # build-tree layout: extension next to the package
    from _kfsi import (
        Config,
        KfsiError,
        StressLaw,
        Surface,
        config_from_file,
        preset,
        run,
        surface,
        tau,
        verify,
    )

__all__ = [
    "Config",
    "KfsiError",
    "StressLaw",
    "Surface",
    "config_from_file",
    "preset",
    "run",
    "surface",
    "tau",
    "verify",
]
