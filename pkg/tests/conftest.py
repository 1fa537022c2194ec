"""Shared builders and the dense-matrix reference solver.

The dense path never touches an FFT or a per-frequency division: the
transform pair is materialized as explicit quadrature matrices straight
from its definition, the full operator becomes one (N*d) x (N*d) matrix,
and the system is solved with a dense LU.  Agreement with the spectral
solver is therefore a genuine cross-check of both the transform
normalization and the symbol assembly.
"""

import numpy as np

import fracspec as fs


def make_problem(
    grid,
    gamma=1.5,
    a_value=-1.0,
    mat=None,
    sector_angle=np.pi / 4,
    q_form="unfactored",
    a_family="constant",
    operator=None,
):
    if operator is None:
        if mat is None:
            mat = np.array([[1.0]])
        operator = fs.constant_operator(np.asarray(mat, dtype=float))
    if a_family == "constant":
        a = fs.constant_coefficient(a_value)
    else:
        a = fs.scaled_decay_coefficient(a_value, gamma)
    return fs.EllipticProblem(
        order=fs.FractionalOrder(gamma),
        a=a,
        A=operator,
        sector=fs.Sector(sector_angle),
        grid=grid,
        q_form=q_form,
    )


def dft_matrices(grid):
    """Quadrature matrices of the transform pair, straight from the definition."""
    x = grid.points
    xi = 2.0 * np.pi * np.fft.fftfreq(grid.size, d=grid.spacing)
    fwd = grid.spacing * np.exp(-1j * np.outer(xi, x))
    inv = np.exp(1j * np.outer(x, xi)) / (2.0 * grid.half_width)
    return fwd, inv, xi


def branch_power(xi, alpha):
    """(i*xi)^alpha on the package's branch, recomputed from scratch."""
    xi = np.asarray(xi, dtype=float)
    if alpha == 0.0:
        return np.ones(xi.shape, dtype=complex)
    out = np.zeros(xi.shape, dtype=complex)
    nz = xi != 0.0
    out[nz] = np.abs(xi[nz]) ** alpha * np.exp(0.5j * np.pi * alpha * np.sign(xi[nz]))
    return out


def dense_operator(prob, lam):
    """(N*d) x (N*d) physical-space matrix of O + lambda-coupling."""
    fwd, inv, xi = dft_matrices(prob.grid)
    d = prob.dim
    frac = branch_power(xi, prob.order.gamma)
    a_vals = prob.a(xi)
    a_mats = prob.A(xi)
    eye = np.eye(d)
    if prob.q_form == "unfactored":
        b = (a_vals * frac + lam)[:, None, None] * eye + a_mats
    else:
        b = a_vals[:, None, None] * ((frac + lam)[:, None, None] * eye + a_mats)
    n = prob.grid.size
    big = np.einsum("jk,kab,kK->jaKb", inv, b, fwd).reshape(n * d, n * d)
    return big


def dense_solve(prob, f, lam):
    """Reference solution of (O + lambda) u = f through the dense matrix."""
    big = dense_operator(prob, complex(lam))
    u = np.linalg.solve(big, f.values.reshape(-1))
    return fs.GridFunction(prob.grid, u.reshape(prob.grid.size, prob.dim))


def rel_linf(got, want):
    scale = max(float(np.max(np.abs(want))), 1e-300)
    return float(np.max(np.abs(got - want))) / scale
