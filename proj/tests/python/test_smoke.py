# Copyright 2026 The bcsd Authors
# SPDX-License-Identifier: Apache-2.0
import os
import pathlib

import numpy as np
import pytest

import bcsd

ROOT = pathlib.Path(os.environ.get("BCSD_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))
CONFIGS = ROOT / "configs"

MINIMAL = """{
  "grid": {"dims": 2, "cells": [4, 3], "extent": [1.0, 1.0]},
  "quadrature": {"order": 4},
  "energy": {"eps_max": 1.0, "steps": 4,
             "stopping_power": {"kind": "tabulated", "table": [[0.0, 1.0], [1.0, 2.0]]}},
  "materials": {"water": {"sigma_t": 1.0, "sigma_s": 0.3}},
  "phantom": {"fill": "water:N"},
  "source": {"kind": "constant", "value": 1.0},
  "solver": {"tolerance": 1e-13}
}"""


@pytest.fixture
def small():
    return bcsd.Problem.from_json(MINIMAL)


def test_shape_and_grids(small):
    assert small.shape == (5, 4, 12)
    assert small.cells == (4, 3, 1)
    np.testing.assert_allclose(small.eps_nodes, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert small.weights.sum() == pytest.approx(2 * np.pi)


def test_forward_is_linear_and_non_negative(small):
    q = small.source()
    psi = small.forward()
    assert psi.shape == small.shape
    assert psi.min() >= 0.0
    np.testing.assert_allclose(small.forward(2.5 * q), 2.5 * psi, rtol=1e-12)


def test_adjoint_identity(small):
    rng = np.random.default_rng(3)
    w = rng.uniform(size=small.shape)
    z = rng.uniform(size=small.shape)
    assert small.adjoint_identity_gap(w, z) <= 1e-12
    assert small.adjoint(z)[-1].max() == 0.0


def test_dose_of_constant_fluence(small):
    psi = np.ones(small.shape)
    # S = 1 + eps integrates to 1.5 over [0, 1]
    np.testing.assert_allclose(small.dose(psi), 2 * np.pi * 1.5, rtol=1e-12)


def test_shape_mismatch_raises(small):
    with pytest.raises(ValueError):
        small.forward(np.zeros((1, 2, 3)))


def test_config_errors():
    with pytest.raises(bcsd.ConfigError):
        bcsd.Problem.from_json(MINIMAL.replace('"sigma_t": 1.0', '"sigma_t": -1.0'))
    with pytest.raises(bcsd.ConfigError, match="A4"):
        bcsd.Problem.from_config(CONFIGS / "moller_out_of_range.json")


def test_optimize_exact_recovery():
    p = bcsd.Problem.from_config(CONFIGS / "exact_recovery.json")
    r = p.optimize()
    assert r["converged"]
    assert r["kkt_residual"] <= 1e-6
    assert r["q"].min() >= 0.0
    objectives = [h["objective"] for h in r["history"]]
    assert all(b <= a for a, b in zip(objectives, objectives[1:]))


def test_run_usage_error():
    code, _, err = bcsd.run(["frobnicate"])
    assert code == 2
    assert err
