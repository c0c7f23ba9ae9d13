# Copyright 2026 The bcsd Authors
# SPDX-License-Identifier: Apache-2.0
"""Deterministic charged-particle transport with adjoint-based optimal control.

Fields are numpy arrays shaped (energies, directions, voxels), voxels
numbered with x fastest.
"""

import os as _os

# An uninstalled build tree keeps the extension next to the CMake outputs.
_extra = _os.environ.get("BCSD_EXTENSION_DIR")
if _extra:
    __path__.append(_extra)

from ._bcsd import (  # noqa: E402
    ConfigError,
    ContractError,
    Error,
    IoError,
    Problem,
    SolverError,
    run,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "Error",
    "IoError",
    "Problem",
    "SolverError",
    "run",
]
