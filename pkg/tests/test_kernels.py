import os
import subprocess
import sys

import numpy as np
import pytest

from qmcomb import _fallback, kernels

compiled = pytest.importorskip("qmcomb._kernels")


def test_backend_is_compiled():
    assert kernels.BACKEND == "cython"


@pytest.mark.parametrize("k,g,c", [(3.47, 0.29, 0.0), (0.0, 0.0, 0.0), (1.0, 4.0, -2.5), (9.0, 0.0, 3.0)])
def test_block_grid_backends_agree(k, g, c):
    nus = np.linspace(-8, 8, 801)
    a = compiled.block_response_grid(nus, c - 1, c, c + 1, k, g)
    b = _fallback.block_response_grid(nus, c - 1, c, c + 1, k, g)
    assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_fully_degenerate_block_is_identity():
    # k = g = 0 with all three detunings at nu: the matrix is zero, S = 1
    nus = np.array([0.0])
    for impl in (compiled, _fallback):
        s = impl.block_response_grid(nus, 0.0, 0.0, 0.0, 0.0, 0.0)
        assert s[0] == 1.0


def test_rk4_backends_agree():
    rng = np.random.default_rng(3)
    a = rng.normal(size=500) + 1j * rng.normal(size=500)
    mid = 0.5 * (a[:-1] + a[1:])
    out_c, st_c = compiled.rk4_block(a, mid, 0.01, -1.0, 0.0, 1.0, 3.0, 0.4)
    out_p, st_p = _fallback.rk4_block(a, mid, 0.01, -1.0, 0.0, 1.0, 3.0, 0.4)
    assert np.allclose(out_c, out_p, rtol=0, atol=1e-13)
    assert np.allclose(st_c, st_p, rtol=0, atol=1e-13)
    r_c, b_c = compiled.rk4_resonator(a, mid, 0.01, 0.5, 2.0)
    r_p, b_p = _fallback.rk4_resonator(a, mid, 0.01, 0.5, 2.0)
    assert np.allclose(r_c, r_p, rtol=0, atol=1e-13)
    assert abs(b_c - b_p) < 1e-13


def test_rk4_resumes_from_state():
    a = np.exp(-((np.arange(400) * 0.01 - 2) ** 2))
    a = a.astype(complex)
    mid = 0.5 * (a[:-1] + a[1:])
    full, _ = compiled.rk4_block(a, mid, 0.01, -1, 0, 1, 2.0, 0.3)
    head, state = compiled.rk4_block(a[:201], mid[:200], 0.01, -1, 0, 1, 2.0, 0.3)
    tail, _ = compiled.rk4_block(a[200:], mid[200:], 0.01, -1, 0, 1, 2.0, 0.3, state)
    assert np.allclose(np.concatenate([head[:200], tail]), full, atol=1e-15)


def test_pure_python_switch():
    env = dict(os.environ, QMCOMB_PURE_PYTHON="1")
    code = "import qmcomb; print(qmcomb.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
