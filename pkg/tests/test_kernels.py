import os
import subprocess
import sys

import numpy as np
import pytest

from ppslam import _backend
from ppslam.lie import rotation_to_quat, so3_exp

needs_ext = pytest.mark.skipif(_backend.compiled_kernel is None, reason="extension not built")


def kernel_args(rng, n, quaternion, mode, scale=1.0):
    R = so3_exp(rng.normal(size=3))
    rot = rotation_to_quat(R) if quaternion else R
    y = rng.normal(size=(n, 3)) * 5
    P = rng.normal(size=3)
    phat = y @ R.T + P + rng.normal(size=(n, 3)) * scale
    delta = np.abs(phat - (y @ R.T + P)) * 1.2 + 1.8
    G = rng.normal(size=(6, 6))
    return (rot, P, phat, rng.normal(size=6) * 0.1, rng.normal(size=6), y,
            delta.copy(), delta, delta.copy(), 3.0, 2.0, G @ G.T + 6 * np.eye(6),
            rng.uniform(0.02, 1.0, n), 1e-3, mode)


@needs_ext
@pytest.mark.parametrize("mode", [_backend.MODE_EVAL, _backend.MODE_EULER, _backend.MODE_IMEX])
@pytest.mark.parametrize("quaternion", [False, True])
@pytest.mark.parametrize("n", [3, 4, 7])
def test_compiled_matches_python(rng, mode, quaternion, n):
    for _ in range(20):
        args = kernel_args(rng, n, quaternion, mode)
        a = _backend.python_kernel(*args)
        b = _backend.compiled_kernel(*args)
        assert a[-1] == b[-1] == -1
        for x, z in zip(a[:-1], b[:-1]):
            np.testing.assert_allclose(np.asarray(z), np.asarray(x), rtol=1e-12, atol=1e-12)


@needs_ext
def test_compiled_reports_same_violation(rng):
    args = list(kernel_args(rng, 4, False, _backend.MODE_IMEX))
    phat = args[2].copy()
    phat[2, 1] += 1e3
    phat[3, 0] -= 1e3
    args[2] = phat
    a = _backend.python_kernel(*args)
    b = _backend.compiled_kernel(*args)
    assert a[-1] == b[-1] == 7
    np.testing.assert_allclose(b[4], a[4])
    assert np.all(np.isnan(b[5]))
    assert b[1] is args[1]


def test_get_kernel():
    assert _backend.get_kernel("python") is _backend.python_kernel
    assert _backend.get_kernel() is _backend.observer_kernel
    with pytest.raises(ValueError):
        _backend.get_kernel("fortran")


def test_pure_python_switch():
    env = {**os.environ, "PPSLAM_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", "import ppslam; print(ppslam.KERNEL_IMPLEMENTATION)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_imex_solve_matches_dense_solver(rng):
    # an Euler and an IMEX step share the explicit motion part exactly
    args = list(kernel_args(rng, 4, False, _backend.MODE_EULER, scale=0.0))
    args[-2] = 1e-3
    a = _backend.python_kernel(*args)
    args[-1] = _backend.MODE_IMEX
    b = _backend.python_kernel(*args)
    # zero error: no correction, so the two steps coincide
    np.testing.assert_allclose(a[0], b[0], atol=1e-15)
    np.testing.assert_allclose(a[2], b[2], atol=1e-15)
