"""Nodal Gauss-Legendre basis on the unit interval and derived operator tables.

The DG basis consists of the Lagrange polynomials through the (N+1)
Gauss-Legendre quadrature points of [0, 1].  With this choice the nodal
mass matrix is diagonal (exact, since phi_i phi_j has degree 2N <= 2N+1)
and all element integrals collapse to weighted nodal sums.
"""

from __future__ import annotations

import numpy as np

MAX_DEGREE = 9


def gauss_legendre(npts: int):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    if npts < 1:
        raise ValueError("need at least one quadrature point")
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def _barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / diff.prod(axis=1)


def lagrange_eval(nodes: np.ndarray, bary: np.ndarray, x) -> np.ndarray:
    """Values of all Lagrange cardinal polynomials at points x.

    Returns an array of shape x.shape + (len(nodes),).  Uses the
    barycentric form; exact cardinality at the nodes themselves.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xf = np.atleast_1d(x)
    out = np.empty(xf.shape + (len(nodes),))
    d = xf[..., None] - nodes
    hit = d == 0.0
    anyhit = hit.any(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = bary / d
        out[...] = t / t.sum(axis=-1, keepdims=True)
    if anyhit.any():
        out[anyhit] = hit[anyhit].astype(float)
    return out[0] if scalar else out


class Basis:
    """Operator tables for polynomial degree N on the unit interval.

    Attributes
    ----------
    nodes, weights : (N+1,) Gauss-Legendre rule on [0, 1]
    diff : (N+1, N+1) nodal differentiation matrix, (diff @ c)[i] = p'(x_i)
    at0, at1 : basis values at the endpoints
    time_op, time_op_inv : the upwind space-time coupling operator
        T[m, l] = phi_m(1) phi_l(1) - w_l phi_m'(x_l) and its inverse
    at_start : phi_m(0), the t^n coupling vector of the predictor
    n_sub : subcell count per dimension, 2N+1
    project_sub : (n_sub, N+1) subcell-average projection matrix
    reconstruct_sub : (N+1, n_sub) mean-preserving least-squares inverse
    """

    def __init__(self, degree: int):
        if not 0 <= degree <= MAX_DEGREE:
            raise ValueError(f"unsupported polynomial degree {degree}")
        self.degree = degree
        n = degree + 1
        self.n = n
        self.nodes, self.weights = gauss_legendre(n)
        self.bary = _barycentric_weights(self.nodes)

        # Differentiation matrix from the barycentric weights.
        D = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    D[i, j] = (self.bary[j] / self.bary[i]) / (self.nodes[i] - self.nodes[j])
        for i in range(n):
            D[i, i] = -np.sum([D[i, j] for j in range(n) if j != i]) if n > 1 else 0.0
        self.diff = D

        self.at0 = lagrange_eval(self.nodes, self.bary, 0.0)
        self.at1 = lagrange_eval(self.nodes, self.bary, 1.0)
        self.at_half = lagrange_eval(self.nodes, self.bary, 0.5)

        # Space-time predictor operators (time direction).
        T = np.outer(self.at1, self.at1) - (self.weights[None, :] * self.diff.T)
        self.time_op = T
        self.time_op_inv = np.linalg.inv(T)
        self.at_start = self.at0.copy()

        # Subcell projection: averages of the polynomial over 2N+1 equal
        # subintervals, exact via the same GL rule scaled to each subcell.
        m = 2 * degree + 1
        self.n_sub = m
        P = np.empty((m, n))
        for s in range(m):
            pts = (s + self.nodes) / m
            P[s] = self.weights @ lagrange_eval(self.nodes, self.bary, pts)
        self.project_sub = P

        # Mean-preserving least-squares right inverse of project_sub:
        # minimize ||P c - v||^2 subject to w . c = mean(v).
        KKT = np.zeros((n + 1, n + 1))
        KKT[:n, :n] = 2.0 * P.T @ P
        KKT[:n, n] = self.weights
        KKT[n, :n] = self.weights
        rhs = np.zeros((n + 1, m))
        rhs[:n] = 2.0 * P.T
        rhs[n] = 1.0 / m
        self.reconstruct_sub = np.linalg.solve(KKT, rhs)[:n]

        # Coarse-face trace evaluated on the three fine subfaces of a
        # tri-sected face: sub_eval[o][g, j] = phi_j((o + x_g) / 3).
        self.sub_eval = tuple(
            lagrange_eval(self.nodes, self.bary, (o + self.nodes) / 3.0)
            for o in range(3)
        )
        # Subcell midpoints of the unit interval (FV trace positions).
        self.sub_mid = (np.arange(m) + 0.5) / m
        self.eval_sub_mid = lagrange_eval(self.nodes, self.bary, self.sub_mid)

    def eval(self, x) -> np.ndarray:
        """Basis values at arbitrary points of [0, 1]."""
        return lagrange_eval(self.nodes, self.bary, x)

    def eval_deriv(self, x) -> np.ndarray:
        """Basis derivative values at arbitrary points (via interpolation)."""
        # p'(x) is the degree-(N-1) interpolant of the nodal derivatives.
        return self.eval(x) @ self.diff

    def average_over(self, a: float, b: float) -> np.ndarray:
        """Row vector of the averaging functional over [a, b] subset [0, 1]."""
        pts = a + (b - a) * self.nodes
        return self.weights @ self.eval(pts)


_cache: dict[int, Basis] = {}


def build_basis(degree: int) -> Basis:
    """Cached Basis construction for a given polynomial degree."""
    if degree not in _cache:
        _cache[degree] = Basis(degree)
    return _cache[degree]
