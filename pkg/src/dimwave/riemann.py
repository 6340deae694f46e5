"""Path-conservative interface machinery.

Face jumps are integrated along the straight-line segment path
psi(s) = (1-s) qL + s qR with Gauss-Legendre quadrature, defining the
generalized Roe matrix Btilde.  Fluctuations split Btilde (qR - qL) into
left/right-going parts D-/D+ = 1/2 (Btilde -/+ |Btilde|) (qR - qL).

|Btilde| is evaluated in closed form from the block structure of the
system (p-wave pair, two s-wave pairs, passive rows, and the alpha
contact column), which is exact whenever Btilde is diagonalizable and
degrades gracefully (bounded, consistent) at the measure-zero parameter
sets where the contact column becomes defective.  The exact linearized
Riemann solution and the Godunov interface state use a full numerical
eigendecomposition instead.

Interface states evaluate the similarity solution from the left at ties
(sign(0) := +1), so the stationary contact content at xi = 0 is taken
from the left state; this reproduces the free-surface interface state
(vanishing normal stress) for alpha jumps from 1 to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, pde
from .errors import NumericalDegeneracyError
from .state import ALPHA, LAM, MU, NORMAL_MOMENTUM, NORMAL_STRESS, NQ, RHO, SHEAR_PAIRS

_gl_cache: dict[int, tuple] = {}


def _gl(order: int):
    if order not in _gl_cache:
        x, w = np.polynomial.legendre.leggauss(order)
        _gl_cache[order] = (0.5 * (x + 1.0), 0.5 * w)
    return _gl_cache[order]


@dataclass(frozen=True)
class PathSpec:
    """Quadrature order for the segment-path integrals (>= 3)."""

    order: int = 3

    def __post_init__(self):
        if self.order < 3:
            raise ValueError("path quadrature order must be >= 3")


@dataclass
class Fluctuations:
    """Left/right-going jump contributions of one face."""

    d_minus: np.ndarray
    d_plus: np.ndarray
    max_signal: float


def _order_of(path) -> int:
    if path is None:
        return 3
    if isinstance(path, PathSpec):
        return path.order
    return int(path)


def _sym_sum(terms):
    """Sum a list of per-node arrays pairing symmetric quadrature nodes.

    Keeps the accumulation order mirror-symmetric so that reflected face
    data produces bit-mirrored results.
    """
    n = len(terms)
    acc = None
    for i in range(n // 2):
        pair = terms[i] + terms[n - 1 - i]
        acc = pair if acc is None else acc + pair
    if n % 2:
        mid = terms[n // 2]
        acc = mid if acc is None else acc + mid
    return acc


def _clamped_alpha_copy(q: np.ndarray, eps0: float | None = None) -> np.ndarray:
    """Admissible copy of q for interface evaluation.

    Face traces are polynomial extrapolations and may overshoot; the
    volume fraction is clipped to [0, 1].  Where alpha falls below the
    regularization floor the evolved perturbation (stresses and
    alpha-weighted momenta) is zeroed: there is no material to carry it,
    the momenta are alpha * u by definition, and any numerical debris
    kept there feeds back through the interface operator (the momenta
    with the 1/eps0-amplified alpha column, the stresses through the
    path-averaged source rows) and destabilizes the coupling.
    """
    out = np.array(q, dtype=float, copy=True)
    np.clip(out[..., ALPHA], 0.0, 1.0, out=out[..., ALPHA])
    if eps0 is not None:
        vac = out[..., ALPHA] <= eps0
        if np.any(vac):
            out[..., :9] = np.where(vac[..., None], 0.0, out[..., :9])
    return out


class _RoeScalars:
    """The eleven path integrals that populate the Roe matrix for one axis."""

    __slots__ = ("a1", "a2", "a3", "e", "cn", "cl", "c1", "c2", "gn", "g1", "g2s")

    def __init__(self, qL, qR, axis, eps0, order):
        nodes, wts = _gl(order)
        nv = NORMAL_MOMENTUM[axis]
        ns = NORMAL_STRESS[axis]
        (sv1, ss1), (sv2, ss2) = SHEAR_PAIRS[axis]

        per_node = []
        for s in nodes:
            qs = (1.0 - s) * qL + s * qR
            a = qs[..., ALPHA]
            lam = qs[..., LAM]
            mu = qs[..., MU]
            kpp = lam + 2.0 * mu
            rho_inv = 1.0 / qs[..., RHO]
            g2 = 1.0 / (a * a + pde._eps0_of(eps0) * (1.0 - a))
            iota = a * g2
            per_node.append(np.stack([
                iota * kpp, iota * lam, iota * mu, a * rho_inv,
                kpp * qs[..., nv] * g2, lam * qs[..., nv] * g2,
                mu * qs[..., sv1] * g2, mu * qs[..., sv2] * g2,
                qs[..., ns] * rho_inv, qs[..., ss1] * rho_inv,
                qs[..., ss2] * rho_inv,
            ], axis=0))
        vals = _sym_sum([w * t for w, t in zip(wts, per_node)])
        (self.a1, self.a2, self.a3, self.e, self.cn, self.cl,
         self.c1, self.c2, self.gn, self.g1, self.g2s) = vals


def roe_matrix(qL: np.ndarray, qR: np.ndarray, axis: int = 0,
               path=None, p=None) -> np.ndarray:
    """Generalized Roe-averaged matrix along the segment path.

    Returns sum_g w_g B_axis(psi(s_g)); for qL = qR this is B(qL) exactly.
    """
    eps0 = pde._eps0_of(p)
    qL = np.asarray(qL, dtype=float)
    qR = np.asarray(qR, dtype=float)
    if np.array_equal(qL, qR):
        return pde.assemble_b(_clamped_alpha_copy(qL, eps0), axis, p)
    qLc = _clamped_alpha_copy(qL, eps0)
    qRc = _clamped_alpha_copy(qR, eps0)
    nodes, wts = _gl(_order_of(path))
    terms = [w * pde.assemble_b((1.0 - s) * qLc + s * qRc, axis, p)
             for s, w in zip(nodes, wts)]
    return _sym_sum(terms)


def roe_fluctuations_batch(qL: np.ndarray, qR: np.ndarray, axis: int,
                           p=None, path=None, solver: str = "godunov"):
    """Vectorized fluctuations for batches of face states (..., 13).

    Returns (d_minus, d_plus, max_signal) with max_signal the largest
    eigenvalue magnitude of the Roe matrix (godunov) or the Rusanov
    signal bound.  Faces with vacuum on both sides (alpha <= eps0)
    produce zero fluctuations.
    """
    eps0 = pde._eps0_of(p)
    if _kernels.HAVE_NUMBA:
        nodes, wts = _gl(_order_of(path))
        nv = NORMAL_MOMENTUM[axis]
        ns = NORMAL_STRESS[axis]
        (sv1, ss1), (sv2, ss2) = SHEAR_PAIRS[axis]
        on1, on2 = (i for i in NORMAL_STRESS if i != ns)
        shape = np.broadcast_shapes(np.shape(qL), np.shape(qR))
        qLf = np.ascontiguousarray(np.broadcast_to(qL, shape)).reshape(-1, NQ)
        qRf = np.ascontiguousarray(np.broadcast_to(qR, shape)).reshape(-1, NQ)
        dm = np.empty_like(qLf)
        dp = np.empty_like(qLf)
        smax = np.empty(qLf.shape[0])
        _kernels.roe_fluctuations(qLf, qRf, nodes, 1.0 - nodes, wts, eps0,
                                  nv, ns, on1, on2, sv1, ss1, sv2, ss2,
                                  solver == "rusanov", dm, dp, smax)
        return (dm.reshape(shape), dp.reshape(shape),
                smax.reshape(shape[:-1]))
    qLc = _clamped_alpha_copy(qL, eps0)
    qRc = _clamped_alpha_copy(qR, eps0)
    nv = NORMAL_MOMENTUM[axis]
    ns = NORMAL_STRESS[axis]
    (sv1, ss1), (sv2, ss2) = SHEAR_PAIRS[axis]
    on1, on2 = (i for i in NORMAL_STRESS if i != ns)

    sc = _RoeScalars(qLc, qRc, axis, eps0, _order_of(path))
    d = qRc - qLc
    dal = d[..., ALPHA]

    bdq = np.zeros_like(qLc)
    bdq[..., ns] = -sc.a1 * d[..., nv] + sc.cn * dal
    bdq[..., on1] = -sc.a2 * d[..., nv] + sc.cl * dal
    bdq[..., on2] = bdq[..., on1]
    bdq[..., ss1] = -sc.a3 * d[..., sv1] + sc.c1 * dal
    bdq[..., ss2] = -sc.a3 * d[..., sv2] + sc.c2 * dal
    bdq[..., nv] = -sc.e * d[..., ns] - sc.gn * dal
    bdq[..., sv1] = -sc.e * d[..., ss1] - sc.g1 * dal
    bdq[..., sv2] = -sc.e * d[..., ss2] - sc.g2s * dal

    vac = (qLc[..., ALPHA] <= eps0) & (qRc[..., ALPHA] <= eps0)

    if solver == "rusanov":
        smax = np.maximum(
            pde.signal_speed(qLc[..., LAM], qLc[..., MU], qLc[..., RHO],
                             qLc[..., ALPHA], eps0),
            pde.signal_speed(qRc[..., LAM], qRc[..., MU], qRc[..., RHO],
                             qRc[..., ALPHA], eps0))
        absd = smax[..., None] * d
    elif solver == "godunov":
        cp = np.sqrt(sc.a1 * sc.e)
        cs = np.sqrt(sc.a3 * sc.e)
        # Contact-corrected jump components (the alpha column content is
        # removed before applying |K|; zero whenever the path data carry
        # no stress/momentum, which keeps material contacts exact).
        with np.errstate(divide="ignore", invalid="ignore"):
            e_inv = np.where(sc.e > 0.0, 1.0 / np.where(sc.e > 0.0, sc.e, 1.0), 0.0)
            rn = np.where(sc.a1 > 0.0, sc.cn / np.where(sc.a1 > 0.0, sc.a1, 1.0), 0.0)
            r1 = np.where(sc.a3 > 0.0, sc.c1 / np.where(sc.a3 > 0.0, sc.a3, 1.0), 0.0)
            r2 = np.where(sc.a3 > 0.0, sc.c2 / np.where(sc.a3 > 0.0, sc.a3, 1.0), 0.0)
            ratio = np.where(sc.a1 > 0.0, sc.a2 / np.where(sc.a1 > 0.0, sc.a1, 1.0), 0.0)
        xs_n = d[..., ns] + dal * sc.gn * e_inv
        xs_1 = d[..., ss1] + dal * sc.g1 * e_inv
        xs_2 = d[..., ss2] + dal * sc.g2s * e_inv
        xm_n = d[..., nv] - dal * rn
        xm_1 = d[..., sv1] - dal * r1
        xm_2 = d[..., sv2] - dal * r2

        absd = np.zeros_like(qLc)
        absd[..., ns] = cp * xs_n
        absd[..., on1] = ratio * cp * xs_n
        absd[..., on2] = absd[..., on1]
        absd[..., ss1] = cs * xs_1
        absd[..., ss2] = cs * xs_2
        absd[..., nv] = cp * xm_n
        absd[..., sv1] = cs * xm_1
        absd[..., sv2] = cs * xm_2
        smax = cp
    else:
        raise ValueError(f"unknown Riemann solver '{solver}'")

    d_minus = 0.5 * (bdq - absd)
    d_plus = 0.5 * (bdq + absd)
    if np.any(vac):
        d_minus[vac] = 0.0
        d_plus[vac] = 0.0
        smax = np.where(vac, 0.0, smax)
    return d_minus, d_plus, smax


def fluctuations_godunov(qL, qR, axis: int = 0, path=None, p=None) -> Fluctuations:
    """Exact-Roe fluctuations D-/+ = 1/2 (Btilde -/+ |Btilde|) (qR - qL)."""
    dm, dp, s = roe_fluctuations_batch(np.asarray(qL, float), np.asarray(qR, float),
                                       axis, p, path, solver="godunov")
    return Fluctuations(d_minus=dm, d_plus=dp, max_signal=float(s))


def fluctuations_rusanov(qL, qR, axis: int = 0, path=None, p=None) -> Fluctuations:
    """Rusanov fluctuations D-/+ = 1/2 (Btilde -/+ s_max I) (qR - qL)."""
    dm, dp, s = roe_fluctuations_batch(np.asarray(qL, float), np.asarray(qR, float),
                                       axis, p, path, solver="rusanov")
    return Fluctuations(d_minus=dm, d_plus=dp, max_signal=float(s))


def _spectral_projectors(Bt: np.ndarray, lams: np.ndarray):
    """Spectral projectors of a diagonalizable Bt with known eigenvalues.

    P_k = prod_{j != k} (Bt - lam_j I) / (lam_k - lam_j), evaluated as
    matrix polynomials; no eigenvector basis is needed, which avoids the
    rank-deficient bases LAPACK returns for the 7-fold zero eigenvalue.
    Raises if Bt is not diagonalizable over the given spectrum.
    """
    n = Bt.shape[0]
    eye = np.eye(n)
    projs = []
    for k, lk in enumerate(lams):
        P = eye
        for j, lj in enumerate(lams):
            if j != k:
                P = P @ (Bt - lj * eye) / (lk - lj)
        projs.append(P)
    scale = max(float(np.abs(Bt).max()), 1e-300)
    resolution = np.abs(sum(projs) - eye).max()
    residual = max(np.abs(Bt @ P - lk * P).max() / scale
                   for lk, P in zip(lams, projs))
    if resolution > 1e-8 or residual > 1e-8:
        raise NumericalDegeneracyError(
            f"interface matrix is not diagonalizable over its wave spectrum "
            f"(resolution {resolution:.2e}, residual {residual:.2e})")
    return projs


def _roe_spectrum(sc: _RoeScalars) -> np.ndarray:
    """Distinct eigenvalues {-cp, -cs, 0, cs, cp} of the Roe matrix."""
    cp = float(np.sqrt(sc.a1 * sc.e))
    cs = float(np.sqrt(sc.a3 * sc.e))
    lams = [0.0]
    if cs > 1e-14 * max(cp, 1e-300):
        lams = [-cs] + lams + [cs]
    if cp > 0.0:
        lams = [-cp] + lams + [cp]
    return np.array(lams)


def linearized_rp(qL, qR, axis: int = 0, xi: float = 0.0, path=None, p=None):
    """Exact solution of the linearized Riemann problem at xi = x/t.

    Q(xi) = 1/2 R (I + sign(Lam - xi)) R^-1 qL
          + 1/2 R (I - sign(Lam - xi)) R^-1 qR
    with ties resolved from the left (sign(0) := +1), evaluated through
    spectral projectors.
    """
    eps0 = pde._eps0_of(p)
    qL = _clamped_alpha_copy(np.asarray(qL, dtype=float), eps0)
    qR = _clamped_alpha_copy(np.asarray(qR, dtype=float), eps0)
    if qL[ALPHA] <= eps0 and qR[ALPHA] <= eps0:
        # No waves in vacuum: the initial discontinuity stands still.
        return qL.copy() if xi <= 0.0 else qR.copy()

    Bt = roe_matrix(qL, qR, axis, path, p)
    sc = _RoeScalars(qL, qR, axis, eps0, _order_of(path))
    lams = _roe_spectrum(sc)
    projs = _spectral_projectors(Bt, lams)

    scale = max(float(np.abs(lams).max()), abs(xi), 1e-300)
    ztol = 1e-9 * scale
    out = np.zeros(NQ)
    for lk, P in zip(lams, projs):
        src = qL if lk > xi - ztol else qR
        out += P @ src
    return out


def godunov_state(qL, qR, axis: int = 0, path=None, p=None):
    """Interface state of the linearized Riemann problem (xi = 0)."""
    return linearized_rp(qL, qR, axis, 0.0, path, p)
