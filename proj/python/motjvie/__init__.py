"""Transient electromagnetic scattering by dielectric voxel grids.

Thin wrapper over the compiled extension. Arrays use the component-major
layout ``[beta][m]`` with ``m`` the zero-based voxel index, u fastest.
"""

from ._motjvie import (
    ConfigError,
    Grid,
    IndexError,
    Kernel,
    Marcher,
    NumericalError,
    assemble_kernel,
    build_grid,
    c0,
    eps0,
    excitation,
    fir,
    fir_closed_form,
    inject_truncation,
    pdsa,
    plan,
    recommend_delta,
    regularize,
    run,
    set_threads,
    threads,
)

__all__ = [
    "ConfigError",
    "Grid",
    "IndexError",
    "Kernel",
    "Marcher",
    "NumericalError",
    "assemble_kernel",
    "build_grid",
    "c0",
    "eps0",
    "excitation",
    "fir",
    "fir_closed_form",
    "inject_truncation",
    "pdsa",
    "plan",
    "recommend_delta",
    "regularize",
    "run",
    "set_threads",
    "threads",
]
