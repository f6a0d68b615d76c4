"""Pure-Python implementations of the hot kernels.

Same signatures and semantics as the compiled ``_kernels`` module.  Used
when the extension is not built or when ``QMCOMB_PURE_PYTHON=1``.
"""

from __future__ import annotations

import math

import numpy as np

# relative pivot size below which a column is treated as structurally free
PIVOT_TOL = 1e-14
# relative residual above which a rank-deficient system is inconsistent
CONSISTENCY_TOL = 1e-9


def block_matrix(nu, d1, d2, d3, k, g):
    """Steady-state matrix of one block at frequency ``nu``.

    Unknowns are (b1, b2, b3).  The third row already contains the
    waveguide substitution a3 = a1 - sqrt(k) b1.
    """
    return [
        [complex(k / 2, d1 - nu), 1j * g, 0j],
        [1j * g, complex(0.0, d2 - nu), 1j * g],
        [complex(k, 0.0), 1j * g, complex(k / 2, d3 - nu)],
    ]


def solve3(a, r):
    """Gaussian elimination with partial pivoting on a 3x3 complex system.

    A pivot that is negligible relative to the matrix scale marks its
    column as free (set to zero), provided the leftover equations are
    consistent.  Returns ``None`` for an inconsistent singular system.
    """
    a = [list(row) for row in a]
    r = list(r)
    scale = max(abs(x) for row in a for x in row) or 1.0
    rscale = max(abs(x) for x in r) or 1.0
    pivrow = [-1, -1, -1]
    row = 0
    for c in range(3):
        if row == 3:
            break
        p = max(range(row, 3), key=lambda i: abs(a[i][c]))
        if abs(a[p][c]) <= PIVOT_TOL * scale:
            continue
        if p != row:
            a[p], a[row] = a[row], a[p]
            r[p], r[row] = r[row], r[p]
        piv = a[row][c]
        for i in range(row + 1, 3):
            f = a[i][c] / piv
            if f != 0:
                for j in range(c, 3):
                    a[i][j] -= f * a[row][j]
                r[i] -= f * r[row]
        pivrow[c] = row
        row += 1
    for i in range(row, 3):
        if abs(r[i]) > CONSISTENCY_TOL * rscale:
            return None
    x = [0j, 0j, 0j]
    for c in (2, 1, 0):
        i = pivrow[c]
        if i < 0:
            continue
        acc = r[i]
        for j in range(c + 1, 3):
            acc -= a[i][j] * x[j]
        x[c] = acc / a[i][c]
    return x


def block_response_grid(nus, d1, d2, d3, k, g):
    """Transfer function a4/a1 of one block on an array of frequencies.

    Samples whose system is inconsistent come back as NaN.
    """
    nus = np.ascontiguousarray(nus, dtype=np.float64)
    sk = math.sqrt(k)
    out = np.empty(nus.shape, dtype=np.complex128)
    for n, nu in enumerate(nus):
        x = solve3(block_matrix(nu, d1, d2, d3, k, g), (sk, 0j, sk))
        if x is None:
            out[n] = complex("nan+nanj")
        else:
            out[n] = 1.0 - sk * (x[0] + x[2])
    return out


def rk4_block(a, a_mid, dt, d1, d2, d3, k, g, b0=(0j, 0j, 0j)):
    """Fixed-step RK4 for one block driven by ``a``.

    ``a_mid[i]`` is the drive at t_i + dt/2.  Returns the output field a4
    on the same grid and the final (b1, b2, b3).
    """
    n = len(a)
    sk = math.sqrt(k)
    h = dt
    c1 = complex(-k / 2, -d1)
    c2 = complex(0.0, -d2)
    c3 = complex(-k / 2, -d3)
    ig = 1j * g
    b1, b2, b3 = (complex(v) for v in b0)
    out = np.empty(n, dtype=np.complex128)

    def rhs(x1, x2, x3, u):
        return (
            c1 * x1 - ig * x2 + sk * u,
            c2 * x2 - ig * (x1 + x3),
            c3 * x3 - ig * x2 + sk * (u - sk * x1),
        )

    for i in range(n - 1):
        u0 = complex(a[i])
        out[i] = u0 - sk * (b1 + b3)
        um = complex(a_mid[i])
        u1 = complex(a[i + 1])
        k1 = rhs(b1, b2, b3, u0)
        k2 = rhs(b1 + 0.5 * h * k1[0], b2 + 0.5 * h * k1[1], b3 + 0.5 * h * k1[2], um)
        k3 = rhs(b1 + 0.5 * h * k2[0], b2 + 0.5 * h * k2[1], b3 + 0.5 * h * k2[2], um)
        k4 = rhs(b1 + h * k3[0], b2 + h * k3[1], b3 + h * k3[2], u1)
        b1 += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        b2 += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        b3 += h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    if n:
        out[n - 1] = complex(a[n - 1]) - sk * (b1 + b3)
    return out, (b1, b2, b3)


def rk4_resonator(a, a_mid, dt, d, k, b0=0j):
    """Fixed-step RK4 for one side-coupled resonator; returns (a_out, b)."""
    n = len(a)
    sk = math.sqrt(k)
    h = dt
    c = complex(-k / 2, -d)
    b = complex(b0)
    out = np.empty(n, dtype=np.complex128)
    for i in range(n - 1):
        u0 = complex(a[i])
        out[i] = u0 - sk * b
        um = complex(a_mid[i])
        k1 = c * b + sk * u0
        k2 = c * (b + 0.5 * h * k1) + sk * um
        k3 = c * (b + 0.5 * h * k2) + sk * um
        k4 = c * (b + h * k3) + sk * complex(a[i + 1])
        b += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if n:
        out[n - 1] = complex(a[n - 1]) - sk * b
    return out, b
