"""Time-marching driver: CFL step, corrector, limiter coupling, receivers.

One accepted step runs the bulk-synchronous phases

    compute_dt -> predictor (unflagged cells) -> face fluctuations
    -> corrector -> subcell FV pass (flagged cells) -> receiver sampling

on the static, possibly refined mesh.  Faces touching flagged cells are
processed at subcell resolution with midpoint-in-time traces; all other
faces use the full space-time quadrature of the predictor.  Outflow
boundaries duplicate the interior trace, which makes their fluctuations
vanish identically.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import limiter as lim
from . import pde, predictor
from .amr import Mesh, build_faces
from .basis import Basis
from .errors import NoSignalError, NumericalBlowupError
from .fields import node_coords, sample_alpha_subcells
from .riemann import roe_fluctuations_batch
from .state import ALPHA, AU, AV, LAM, MU, NQ, RHO, COMPONENT_NAMES

D_SPATIAL = 2


@dataclass
class TimeStepInfo:
    """CFL-admissible step: dt = cfl/d * h_min/(2N+1) / lambda_max."""

    dt: float
    cfl: float
    lambda_max: float
    h_min: float


def compute_dt(mesh: Mesh, u: np.ndarray, cfl: float, degree: int,
               p=None) -> TimeStepInfo:
    """Globally admissible time step from the regularized signal speeds."""
    lam_max = float(np.max(pde.signal_speed(
        u[..., LAM], u[..., MU], u[..., RHO],
        np.clip(u[..., ALPHA], 0.0, 1.0), p)))
    if not lam_max > 0.0:
        raise NoSignalError("no cell carries a positive signal speed")
    h_min = mesh.h_min
    dt = cfl / D_SPATIAL * h_min / (2 * degree + 1) / lam_max
    return TimeStepInfo(dt=dt, cfl=cfl, lambda_max=lam_max, h_min=h_min)


@dataclass
class Receiver:
    id: str
    position: tuple
    components: tuple = ("u", "v")


@dataclass
class PointSource:
    spec: object                  # state.SourceSpec
    cell: int = -1
    weights: np.ndarray | None = None   # (nx, ny) nodal delta weights
    inv_rho: float = 0.0


@dataclass
class StepRecord:
    t: float
    dt: float


class Simulation:
    """Assembled solver state over a static mesh, mask and material field."""

    def __init__(self, mesh: Mesh, basis: Basis, u0: np.ndarray, *,
                 geometry=None, cfl: float = 0.9, eps0: float = 1e-3,
                 solver: str = "godunov", limiter_eps: float = 1e-3,
                 limiter_enabled: bool = True, periodic=None, bc=None,
                 source=None, receivers=(), alpha_sub: np.ndarray | None = None,
                 force_flags: np.ndarray | None = None):
        self.mesh = mesh
        self.basis = basis
        self.u = np.array(u0, dtype=float)
        self.cfl = cfl
        self.eps0 = eps0
        self.solver = solver
        # Boundary kinds per axis: "outflow" (absorbing far-field ghost),
        # "extrapolation" (trace duplication, zero fluctuation), "periodic".
        if bc is None:
            if periodic is None:
                bc = ("outflow", "outflow")
            else:
                bc = tuple("periodic" if p else "outflow" for p in periodic)
        self.bc = tuple(bc)
        for b in self.bc:
            if b not in ("outflow", "extrapolation", "periodic"):
                raise ValueError(f"unknown boundary kind '{b}'")
        self.periodic = tuple(b == "periodic" for b in self.bc)
        self.t = 0.0
        self.step_count = 0
        self.step_history: list[StepRecord] = []

        n = basis.n
        m = basis.n_sub
        nc = mesh.n_cells
        if self.u.shape != (nc, n, n, NQ):
            raise ValueError(f"state shape {self.u.shape} does not match mesh/basis")

        # Limiter mask from the sampled alpha field (static): the
        # range-intersection rule dilated by one ring of face neighbors.
        # The dilation keeps the steep reconstructed alpha profile away
        # from unlimited DG cells (their one-step update is not robust
        # against band-adjacent traces).
        if force_flags is not None:
            self.alpha_sub = None
            self.flags = np.asarray(force_flags, dtype=bool).copy()
        elif limiter_enabled and geometry is not None:
            if alpha_sub is None:
                alpha_sub = sample_alpha_subcells(mesh, basis, geometry)
            self.alpha_sub = alpha_sub
            core = lim.build_mask(self.u[..., ALPHA], alpha_sub, limiter_eps)
            self.flags = lim.dilate_mask(core, mesh)
        else:
            self.alpha_sub = None
            self.flags = np.zeros(nc, dtype=bool)
        self.fv_pos = -np.ones(nc, dtype=int)
        self.fv_cells = np.flatnonzero(self.flags)
        self.fv_pos[self.fv_cells] = np.arange(self.fv_cells.size)
        self.dg_cells = np.flatnonzero(~self.flags)
        self.dg_pos = -np.ones(nc, dtype=int)
        self.dg_pos[self.dg_cells] = np.arange(self.dg_cells.size)

        # Subcell patches for flagged cells; material components use the
        # geometry-sampled subcell alpha (sharper than the projection).
        self.patches = lim.project_to_subcells(self.u[self.fv_cells], basis)
        if self.fv_cells.size and self.alpha_sub is not None:
            self.patches[..., ALPHA] = self.alpha_sub[self.fv_cells]
        # Subcells below the regularization floor carry no physical
        # perturbation; pinning them to zero removes the 1/eps0-amplified
        # feedback of numerical debris through the steep in-patch alpha
        # slopes (static mask: alpha never changes).
        self._patch_vacuum = self.patches[..., ALPHA] <= eps0
        if self.fv_cells.size:
            self.patches[..., :9] = np.where(self._patch_vacuum[..., None],
                                             0.0, self.patches[..., :9])
            self.u[self.fv_cells] = lim.reconstruct_dg(self.patches, basis)

        self.factors = pde.material_factors(self.u, eps0)
        self._static_factors = solver == "godunov"
        self._refresh_dg_caches()

        # Face classification (static).  All faces run the full space-time
        # DG quadrature (flagged cells provide the predictor of their
        # reconstructed polynomial); faces touching flagged cells are
        # additionally sampled per subface for the FV march.
        faces, boundary = build_faces(mesh, self.periodic)
        self.boundary = {(ax, side): np.array(
            [b.cell for b in boundary if b.axis == ax and b.side == side],
            dtype=int) for ax in (0, 1) for side in (0, 1)}
        conf = {0: ([], []), 1: ([], [])}
        cfa = {0: ([], [], [], []), 1: ([], [], [], [])}
        self.fv_faces = []
        for f in faces:
            if self.flags[f.left] or self.flags[f.right]:
                self.fv_faces.append(f)
            if f.kind == "conforming":
                conf[f.axis][0].append(f.left)
                conf[f.axis][1].append(f.right)
            else:
                coarse = f.left if f.coarse_side == 0 else f.right
                fine = f.right if f.coarse_side == 0 else f.left
                cfa[f.axis][0].append(coarse)
                cfa[f.axis][1].append(fine)
                cfa[f.axis][2].append(f.coarse_side)
                cfa[f.axis][3].append(f.offset)
        self.conf = {ax: tuple(np.array(v, dtype=int) for v in conf[ax]) for ax in (0, 1)}
        self.cf = {ax: tuple(np.array(v, dtype=int) for v in cfa[ax]) for ax in (0, 1)}
        self.fv_boundary = [b for b in boundary if self.flags[b.cell]]
        # flagged-flagged faces couple through the patch MUSCL traces so an
        # all-flagged grid reduces to the plain TVD FV scheme
        self.ff_faces = [f for f in self.fv_faces
                         if self.flags[f.left] and self.flags[f.right]]
        self.fv_faces = [f for f in self.fv_faces
                         if not (self.flags[f.left] and self.flags[f.right])]

        # Operator tables.
        w = basis.weights
        self.e0w = basis.at0 / w
        self.e1w = basis.at1 / w
        # Coarse-side accumulation over a fine subface: (g, aj).
        self.m_cf = tuple((w[:, None] * basis.sub_eval[o]) / (3.0 * w[None, :])
                          for o in range(3))
        # Coarse-cell subface midpoints seen from the coarse trace.
        self.mid_cf = tuple(basis.eval((o + basis.sub_mid) / 3.0) for o in range(3))
        self._sub_of_coarse = tuple(
            np.floor((o * m + np.arange(m) + 0.5) / 3.0).astype(int)
            for o in range(3))
        self.fv_faces_ax = {ax: [f for f in self.fv_faces if f.axis == ax]
                            for ax in (0, 1)}
        self.ff_faces_ax = {ax: [f for f in self.ff_faces if f.axis == ax]
                            for ax in (0, 1)}
        self._pred_work = None

        self._build_halo_ops()

        # Point source.
        self.source = None
        if source is not None:
            xs, ys = source.location[0], source.location[1]
            cell = mesh.cell_containing(xs, ys)
            xi = (np.array([xs, ys]) - mesh.origin[cell]) / mesh.h[cell]
            wx = basis.eval(xi[0])
            wy = basis.eval(xi[1])
            vol = mesh.h[cell].prod()
            wgt = np.outer(wx / w, wy / w) / vol
            rho_pt = float(wx @ self.u[cell, :, :, RHO] @ wy)
            self.source = PointSource(spec=source, cell=cell, weights=wgt,
                                      inv_rho=1.0 / rho_pt)

        # Receivers resolved to (cell, nodal evaluation weights).
        self.receivers = []
        self.seismograms = {}
        for rec in receivers:
            cell = mesh.cell_containing(rec.position[0], rec.position[1])
            xi = (np.array(rec.position) - mesh.origin[cell]) / mesh.h[cell]
            wmat = np.outer(basis.eval(xi[0]), basis.eval(xi[1]))
            self.receivers.append((rec, cell, wmat))
            self.seismograms[rec.id] = []

    # -- halo machinery ---------------------------------------------------

    def _build_halo_ops(self):
        """Per flagged cell and side: how to obtain the (m, 13) halo strip."""
        mesh, basis = self.mesh, self.basis
        m, n = basis.n_sub, basis.n
        P = basis.project_sub
        rf = mesh.rf
        self.halo_ops = []
        for fpos, c in enumerate(self.fv_cells):
            lc, ic, jc = mesh.keys[c]
            ops = {}
            for axis in (0, 1):
                for side in (0, 1):
                    nbs = mesh.face_neighbors(c, axis, side)
                    if not nbs:
                        if self.periodic[axis]:
                            npos = mesh.dims[axis] * rf ** lc
                            ni = (0 if side == 1 else npos - 1, jc) if axis == 0 \
                                else (ic, 0 if side == 1 else npos - 1)
                            nbs = [mesh.index[(lc, ni[0], ni[1])]]
                        else:
                            ops[(axis, side)] = ("self",)
                            continue
                    if len(nbs) == 1 and mesh.level[nbs[0]] == lc:
                        nb = nbs[0]
                        if self.flags[nb]:
                            ops[(axis, side)] = ("patch", self.fv_pos[nb])
                        else:
                            edge = P[0] if side == 1 else P[-1]
                            W = np.einsum("a,tb->tab", edge, P) if axis == 0 \
                                else np.einsum("ta,b->tab", P, edge)
                            ops[(axis, side)] = ("op", nb, W.reshape(m, n * n))
                    elif len(nbs) == 1:
                        # Coarser neighbor: average its polynomial over the
                        # halo strip footprints.
                        nb = nbs[0]
                        off = (jc if axis == 0 else ic) % rf
                        depth = 1.0 / (rf * m)
                        nrm = basis.average_over(0.0, depth) if side == 1 \
                            else basis.average_over(1.0 - depth, 1.0)
                        rows = []
                        for t in range(m):
                            a0 = (off + t / m) / rf
                            a1 = (off + (t + 1) / m) / rf
                            tang = basis.average_over(a0, a1)
                            W = np.outer(nrm, tang) if axis == 0 else np.outer(tang, nrm)
                            rows.append(W.reshape(-1))
                        ops[(axis, side)] = ("op", nb, np.array(rows))
                    else:
                        # Finer neighbors: piecewise averages across them.
                        depth = rf / m
                        nrm = basis.average_over(0.0, min(depth, 1.0)) if side == 1 \
                            else basis.average_over(max(1.0 - depth, 0.0), 1.0)
                        pieces = []
                        for t in range(m):
                            lo, hi = rf * t / m, rf * (t + 1) / m
                            segs = []
                            for k, nb in enumerate(sorted(
                                    nbs, key=lambda q: mesh.keys[q][2 if axis == 0 else 1])):
                                s0, s1 = max(lo, k), min(hi, k + 1.0)
                                if s1 <= s0 + 1e-12:
                                    continue
                                tang = basis.average_over(s0 - k, s1 - k)
                                W = np.outer(nrm, tang) if axis == 0 else np.outer(tang, nrm)
                                segs.append((nb, (s1 - s0) / (hi - lo), W.reshape(-1)))
                            pieces.append(segs)
                        ops[(axis, side)] = ("multi", pieces)
            self.halo_ops.append(ops)

    def _halo(self, fpos: int, axis: int, side: int) -> np.ndarray:
        op = self.halo_ops[fpos][(axis, side)]
        m = self.basis.n_sub
        patch = self.patches[fpos]
        if op[0] == "self":
            return patch[-1 if side == 1 else 0, :, :] if axis == 0 \
                else patch[:, -1 if side == 1 else 0, :]
        if op[0] == "patch":
            nb = self.patches[op[1]]
            return nb[0 if side == 1 else -1, :, :] if axis == 0 \
                else nb[:, 0 if side == 1 else -1, :]
        if op[0] == "op":
            return op[2] @ self.u[op[1]].reshape(-1, NQ)
        halo = np.zeros((m, NQ))
        for t, segs in enumerate(op[1]):
            for nb, wgt, row in segs:
                halo[t] += wgt * (row @ self.u[nb].reshape(-1, NQ))
        return halo

    # -- sources ----------------------------------------------------------

    def _source_nodal(self, dt: float) -> np.ndarray | None:
        """Nodal source tensor (nx, ny, nt, 13) for the current slab."""
        if self.source is None:
            return None
        s = self.source
        tq = self.t + dt * self.basis.nodes
        amp = pde.ricker(tq, s.spec) * s.inv_rho
        out = np.zeros((self.basis.n, self.basis.n, self.basis.n, NQ))
        d = s.spec.direction
        out[:, :, :, AU] = s.weights[:, :, None] * (d[0] * amp)[None, None, :]
        out[:, :, :, AV] = s.weights[:, :, None] * (d[1] * amp)[None, None, :]
        return out

    # -- one time step ------------------------------------------------------

    def _refresh_dg_caches(self):
        self._factors_all = self.factors
        gax, gay = predictor.alpha_gradients(self.u, self.mesh.h, self.basis)
        # Flagged cells delegate their in-cell alpha coupling to the FV
        # march; their predictor only has to supply stable face traces
        # with the correct alpha profile.
        gax[self.fv_cells] = 0.0
        gay[self.fv_cells] = 0.0
        self._alpha_grads = (gax, gay)

    def step(self, dt: float):
        mesh, basis = self.mesh, self.basis
        n, m = basis.n, basis.n_sub
        w = basis.weights
        nc = mesh.n_cells

        if not self._static_factors:
            self.factors = pde.material_factors(self.u, self.eps0)
            self._refresh_dg_caches()

        src_arr = self._source_nodal(dt)
        source_map = None
        if src_arr is not None and not self.flags[self.source.cell]:
            source_map = {int(self.source.cell): src_arr}

        # Space-time predictor on every cell; flagged cells contribute the
        # predictor of their reconstructed polynomial to face coupling.
        if self._pred_work is None:
            shape = (nc, n, n, n, NQ)
            self._pred_work = (np.empty(shape), np.empty(shape))
        qhat = predictor.predict(self.u, mesh.h, dt, basis, self.eps0,
                                 self._factors_all, source_map,
                                 alpha_grads=self._alpha_grads,
                                 work=self._pred_work)

        # Boundary-extrapolated space-time traces.
        traces = {
            0: (np.einsum("a,cabmk->cbmk", basis.at0, qhat),
                np.einsum("a,cabmk->cbmk", basis.at1, qhat)),
            1: (np.einsum("b,cabmk->camk", basis.at0, qhat),
                np.einsum("b,cabmk->camk", basis.at1, qhat)),
        }

        # Time-integrated fluctuation accumulators per cell side.
        G = {(ax, side): np.zeros((nc, n, NQ)) for ax in (0, 1) for side in (0, 1)}

        for ax in (0, 1):
            left, right = self.conf[ax]
            if left.size:
                qL = traces[ax][1][left]
                qR = traces[ax][0][right]
                dm, dp, _ = roe_fluctuations_batch(qL, qR, ax, self.eps0,
                                                   solver=self.solver)
                np.add.at(G[(ax, 1)], left, np.einsum("fbmk,m->fbk", dm, w))
                np.add.at(G[(ax, 0)], right, np.einsum("fbmk,m->fbk", dp, w))

            coarse, fine, cside, offset = self.cf[ax]
            for o in range(3):
                for cs in (0, 1):
                    sel = np.flatnonzero((offset == o) & (cside == cs))
                    if not sel.size:
                        continue
                    cc, ff = coarse[sel], fine[sel]
                    tr_c = traces[ax][1 - cs][cc]
                    q_c = np.einsum("gj,fjmk->fgmk", basis.sub_eval[o], tr_c)
                    q_f = traces[ax][cs][ff]
                    qL, qR = (q_c, q_f) if cs == 0 else (q_f, q_c)
                    dm, dp, _ = roe_fluctuations_batch(qL, qR, ax, self.eps0,
                                                       solver=self.solver)
                    d_coarse, d_fine = (dm, dp) if cs == 0 else (dp, dm)
                    np.add.at(G[(ax, cs)], ff,
                              np.einsum("fgmk,m->fgk", d_fine, w))
                    np.add.at(G[(ax, 1 - cs)], cc,
                              np.einsum("fgmk,m,gj->fjk", d_coarse, w, self.m_cf[o]))

            # Absorbing outer boundaries: the ghost is the quiescent
            # far-field state with the trace's material and volume fraction.
            # ("extrapolation" duplicates the trace: zero fluctuation.)
            if self.bc[ax] != "outflow":
                continue
            for side in (0, 1):
                cells = self.boundary[(ax, side)]
                if not cells.size:
                    continue
                qT = traces[ax][side][cells]
                ghost = qT.copy()
                ghost[..., :9] = 0.0
                qL, qR = (qT, ghost) if side == 1 else (ghost, qT)
                dm, dp, _ = roe_fluctuations_batch(qL, qR, ax, self.eps0,
                                                   solver=self.solver)
                d_in = dm if side == 1 else dp
                np.add.at(G[(ax, side)], cells,
                          np.einsum("fbmk,m->fbk", d_in, w))

        # Subface-resolved, time-integrated fluctuations for the FV march.
        fvb = {(ax, side): np.zeros((self.fv_cells.size, m, NQ))
               for ax in (0, 1) for side in (0, 1)}
        fv_face_smax = 0.0
        if self.fv_cells.size:
            fv_face_smax = self._fv_face_pass(traces, fvb)

        # Corrector: the time-integrated volume + source update of the
        # converged predictor telescopes to u - qhat(tau=1) (sum the weak
        # space-time equations over the time test functions), so the new
        # state is the end-of-slab predictor minus the face terms.
        dg = self.dg_cells
        if dg.size:
            inv_h = 1.0 / mesh.h[dg]
            upd = (self.u[dg] - np.einsum("m,cabmk->cabk", basis.at1, qhat[dg])) / dt
            upd += self.e1w[None, :, None, None] * G[(0, 1)][dg][:, None, :, :] * inv_h[:, 0, None, None, None]
            upd += self.e0w[None, :, None, None] * G[(0, 0)][dg][:, None, :, :] * inv_h[:, 0, None, None, None]
            upd += self.e1w[None, None, :, None] * G[(1, 1)][dg][:, :, None, :] * inv_h[:, 1, None, None, None]
            upd += self.e0w[None, None, :, None] * G[(1, 0)][dg][:, :, None, :] * inv_h[:, 1, None, None, None]
            if self._static_factors:
                # material and alpha rows of the godunov fluctuations and of
                # the volume operator vanish identically; pin them bit-exact
                upd[..., 9:] = 0.0
            self.u[dg] -= dt * upd

        if self.fv_cells.size:
            fv_traces = self._fv_traces(dt)
            self._fv_update(dt, fv_traces, fvb, fv_face_smax)

        self._scan(dt)
        self.t += dt
        self.step_count += 1
        self.step_history.append(StepRecord(t=self.t, dt=dt))
        self._record()

    # -- subcell finite volume pass ----------------------------------------

    def _fv_traces(self, dt: float):
        """Slopes, Hancock half-step and face traces of all patches.

        The trivially advected fields (materials and alpha) stay piecewise
        constant per subcell: their variation couples through the upwind
        face path integrals only, never through the non-dissipative
        in-cell reconstruction term (whose regularized alpha column would
        otherwise be arbitrarily stiff inside the band).
        """
        mesh, basis = self.mesh, self.basis
        h_sub = mesh.h[self.fv_cells] / basis.n_sub   # (nf, 2)
        halo = {key: np.stack([self._halo(f, *key) for f in range(self.fv_cells.size)])
                for key in ((0, 0), (0, 1), (1, 0), (1, 1))}
        sx = lim.slopes_with_halo(self.patches, halo[(0, 0)], halo[(0, 1)], 1)
        sy = lim.slopes_with_halo(self.patches, halo[(1, 0)], halo[(1, 1)], 2)
        sx[..., 9:] = 0.0
        sy[..., 9:] = 0.0
        half = lim.hancock_half_step(
            self.patches, sx, sy, dt,
            (h_sub[:, 0, None, None, None], h_sub[:, 1, None, None, None]),
            self.eps0)
        return {
            "h_sub": h_sub, "half": half, "sx": sx, "sy": sy,
            (0, 0): half - 0.5 * sx, (0, 1): half + 0.5 * sx,
            (1, 0): half - 0.5 * sy, (1, 1): half + 0.5 * sy,
        }

    def _submid_trace(self, traces, ax, side, cell):
        """Space-time trace at the subface midpoints, (m, nt, 13)."""
        return np.einsum("kj,jmq->kmq", self.basis.eval_sub_mid,
                         traces[ax][side][cell])

    def _fv_face_pass(self, traces, fvb):
        """Subface-resolved fluctuations of faces touching flagged cells.

        The same predictor traces that drive the DG corrector are sampled
        at the subface midpoints over all time nodes and time-integrated,
        giving the boundary fluctuations of the FV march.  Returns the
        maximum face signal speed (subcell CFL control).
        """
        basis = self.basis
        m = basis.n_sub
        w = basis.weights
        smax_all = 0.0
        for ax in (0, 1):
            qLs, qRs, route = [], [], []
            for f in self.fv_faces_ax[ax]:
                if f.kind == "conforming":
                    qLs.append(self._submid_trace(traces, ax, 1, f.left))
                    qRs.append(self._submid_trace(traces, ax, 0, f.right))
                    route.append(("c", f.left, f.right))
                else:
                    coarse = f.left if f.coarse_side == 0 else f.right
                    fine = f.right if f.coarse_side == 0 else f.left
                    o = f.offset
                    fine_side = f.coarse_side
                    cs_side = 1 - fine_side
                    q_f = self._submid_trace(traces, ax, fine_side, fine)
                    q_c = np.einsum("kj,jmq->kmq", self.mid_cf[o],
                                    traces[ax][cs_side][coarse])
                    if f.coarse_side == 0:
                        qLs.append(q_c)
                        qRs.append(q_f)
                    else:
                        qLs.append(q_f)
                        qRs.append(q_c)
                    route.append(("x", coarse, fine, fine_side, o))
            if self.bc[ax] == "outflow":
                for b in [b for b in self.fv_boundary if b.axis == ax]:
                    qT = self._submid_trace(traces, ax, b.side, b.cell)
                    ghost = qT.copy()
                    ghost[..., :9] = 0.0
                    if b.side == 1:
                        qLs.append(qT)
                        qRs.append(ghost)
                    else:
                        qLs.append(ghost)
                        qRs.append(qT)
                    route.append(("b", b.cell, b.side))
            if not route:
                continue
            dm, dp, sm = roe_fluctuations_batch(np.stack(qLs), np.stack(qRs),
                                                ax, self.eps0, solver=self.solver)
            smax_all = max(smax_all, float(sm.max()))
            DM = np.einsum("fkmq,m->fkq", dm, w)
            DP = np.einsum("fkmq,m->fkq", dp, w)
            for i, r in enumerate(route):
                if r[0] == "c":
                    if self.flags[r[1]]:
                        fvb[(ax, 1)][self.fv_pos[r[1]]] += DM[i]
                    if self.flags[r[2]]:
                        fvb[(ax, 0)][self.fv_pos[r[2]]] += DP[i]
                elif r[0] == "b":
                    _, cell, side = r
                    d_in = DM[i] if side == 1 else DP[i]
                    fvb[(ax, side)][self.fv_pos[cell]] += d_in
                else:
                    _, coarse, fine, fine_side, o = r
                    cs_side = 1 - fine_side
                    d_coarse, d_fine = (DM[i], DP[i]) if fine_side == 0 \
                        else (DP[i], DM[i])
                    if self.flags[fine]:
                        fvb[(ax, fine_side)][self.fv_pos[fine]] += d_fine
                    if self.flags[coarse]:
                        acc = np.zeros((m, NQ))
                        np.add.at(acc, self._sub_of_coarse[o], d_coarse / 3.0)
                        fvb[(ax, cs_side)][self.fv_pos[coarse]] += acc
        return smax_all

    def _fv_edge_trace(self, tr, ax, side, cell):
        """Outer boundary MUSCL trace of a flagged cell's patch, (m, 13)."""
        t = tr[(ax, side)][self.fv_pos[cell]]
        if ax == 0:
            return t[-1, :, :] if side == 1 else t[0, :, :]
        return t[:, -1, :] if side == 1 else t[:, 0, :]

    def _fv_march_fluxes(self, tr):
        """Per-substep fluctuations: patch-internal subfaces plus the
        flagged-flagged faces (coupled through the MUSCL traces)."""
        m = self.basis.n_sub
        internal = {}
        smax = 0.0
        for ax in (0, 1):
            hi = tr[(ax, 1)]
            lo = tr[(ax, 0)]
            if ax == 0:
                qL, qR = hi[:, :-1, :, :], lo[:, 1:, :, :]
            else:
                qL, qR = hi[:, :, :-1, :], lo[:, :, 1:, :]
            dm, dp, sm = roe_fluctuations_batch(qL, qR, ax, self.eps0,
                                                solver=self.solver)
            if sm.size:
                smax = max(smax, float(sm.max()))
            internal[ax] = (dm, dp)
        ffb = {(ax, side): np.zeros((self.fv_cells.size, m, NQ))
               for ax in (0, 1) for side in (0, 1)}
        for ax in (0, 1):
            faces = self.ff_faces_ax[ax]
            if not faces:
                continue
            qLs, qRs, route = [], [], []
            for f in faces:
                if f.kind == "conforming":
                    qLs.append(self._fv_edge_trace(tr, ax, 1, f.left))
                    qRs.append(self._fv_edge_trace(tr, ax, 0, f.right))
                    route.append(("c", f.left, f.right))
                else:
                    coarse = f.left if f.coarse_side == 0 else f.right
                    fine = f.right if f.coarse_side == 0 else f.left
                    fine_side = f.coarse_side
                    sub = self._sub_of_coarse[f.offset]
                    q_f = self._fv_edge_trace(tr, ax, fine_side, fine)
                    q_c = self._fv_edge_trace(tr, ax, 1 - fine_side, coarse)[sub]
                    if f.coarse_side == 0:
                        qLs.append(q_c)
                        qRs.append(q_f)
                    else:
                        qLs.append(q_f)
                        qRs.append(q_c)
                    route.append(("x", coarse, fine, fine_side, f.offset))
            dm, dp, sm = roe_fluctuations_batch(np.stack(qLs), np.stack(qRs),
                                                ax, self.eps0, solver=self.solver)
            smax = max(smax, float(sm.max()))
            for i, r in enumerate(route):
                if r[0] == "c":
                    ffb[(ax, 1)][self.fv_pos[r[1]]] += dm[i]
                    ffb[(ax, 0)][self.fv_pos[r[2]]] += dp[i]
                else:
                    _, coarse, fine, fine_side, o = r
                    d_coarse, d_fine = (dm[i], dp[i]) if fine_side == 0 \
                        else (dp[i], dm[i])
                    ffb[(ax, fine_side)][self.fv_pos[fine]] += d_fine
                    acc = np.zeros((m, NQ))
                    np.add.at(acc, self._sub_of_coarse[o], d_coarse / 3.0)
                    ffb[(ax, 1 - fine_side)][self.fv_pos[coarse]] += acc
        return internal, ffb, smax

    def _fv_substep(self, dts, tr, fvb, ffb, internal):
        """One MUSCL update of the patches over dts."""
        h_sub = tr["h_sub"]
        half = tr["half"]
        # Smooth nonconservative product of the in-cell reconstruction,
        # evaluated at the half-step states (midpoint in space and time).
        upd = pde.b_matvec(half, tr["sx"], 0, self.eps0) \
            / h_sub[:, 0, None, None, None] \
            + pde.b_matvec(half, tr["sy"], 1, self.eps0) \
            / h_sub[:, 1, None, None, None]
        for ax in (0, 1):
            dm, dp = internal[ax]
            ih = 1.0 / h_sub[:, ax]
            blo = fvb[(ax, 0)] + ffb[(ax, 0)]
            bhi = fvb[(ax, 1)] + ffb[(ax, 1)]
            if ax == 0:
                upd[:, :-1] += dm * ih[:, None, None, None]
                upd[:, 1:] += dp * ih[:, None, None, None]
                upd[:, 0] += blo * ih[:, None, None]
                upd[:, -1] += bhi * ih[:, None, None]
            else:
                upd[:, :, :-1] += dm * ih[:, None, None, None]
                upd[:, :, 1:] += dp * ih[:, None, None, None]
                upd[:, :, 0] += blo * ih[:, None, None]
                upd[:, :, -1] += bhi * ih[:, None, None]
        self.patches -= dts * upd

    def _fv_update(self, dt, fv_traces, fvb, fv_face_smax):
        """MUSCL march of the patches, sub-stepping when the face signal
        speeds exceed the cell-based CFL bound.

        The interface Roe speeds can exceed the largest cell eigenvalue (the
        regularized 1/alpha path integral is larger than 1/mean(alpha)), so
        the subcell CFL is enforced against the measured face signals; the
        boundary fluctuations received from the mixed-face pass stay frozen
        over the substeps.
        """
        h_sub = fv_traces["h_sub"]
        internal, ffb, smax_int = self._fv_march_fluxes(fv_traces)
        smax = max(fv_face_smax, smax_int, 1e-300)
        dt_fv = self.cfl / D_SPATIAL * float(h_sub.min()) / smax
        n_sub = max(1, int(np.ceil(dt / dt_fv - 1e-12)))
        self.fv_substeps = n_sub
        if n_sub == 1:
            self._fv_substep(dt, fv_traces, fvb, ffb, internal)
        else:
            dts = dt / n_sub
            for _ in range(n_sub):
                tr = self._fv_traces(dts)
                internal, ffb, _ = self._fv_march_fluxes(tr)
                self._fv_substep(dts, tr, fvb, ffb, internal)
        if self.source is not None and self.flags[self.source.cell]:
            # cell-average source deposit into the subcell holding x_s
            m = self.basis.n_sub
            s = self.source
            fp = self.fv_pos[s.cell]
            xi = (np.array(s.spec.location[:2]) - self.mesh.origin[s.cell]) \
                / self.mesh.h[s.cell]
            si = min(int(xi[0] * m), m - 1)
            sj = min(int(xi[1] * m), m - 1)
            amp = float(pde.ricker(self.t + 0.5 * dt, s.spec)) * s.inv_rho \
                / float(h_sub[fp].prod())
            self.patches[fp, si, sj, AU] += dt * amp * s.spec.direction[0]
            self.patches[fp, si, sj, AV] += dt * amp * s.spec.direction[1]
        self.patches[..., :9] = np.where(self._patch_vacuum[..., None],
                                         0.0, self.patches[..., :9])
        self.u[self.fv_cells] = lim.reconstruct_dg(self.patches, self.basis)

    # -- diagnostics, receivers, driver --------------------------------------

    def _scan(self, dt):
        good = np.isfinite(self.u.reshape(self.mesh.n_cells, -1)).all(axis=1)
        if good.all():
            return
        bad = np.flatnonzero(~good)
        first = int(bad[0])
        kind = "limited" if self.flags[first] else "unlimited"
        raise NumericalBlowupError(
            f"non-finite state in {kind} cell {first} at step {self.step_count} "
            f"(t = {self.t:.6g}, dt = {dt:.3g}; {bad.size} cells affected)",
            cell=first, step=self.step_count)

    def _record(self):
        for rec, cell, wmat in self.receivers:
            vals = np.einsum("ab,abk->k", wmat, self.u[cell])
            inv_a = float(pde.inv_alpha_reg(np.clip(vals[ALPHA], 0.0, 1.0), self.eps0))
            row = [self.t]
            for comp in rec.components:
                if comp in ("u", "v", "w"):
                    row.append(float(vals[AU + ("u", "v", "w").index(comp)] * inv_a))
                else:
                    row.append(float(vals[COMPONENT_NAMES.index(comp)]))
            self.seismograms[rec.id].append(row)

    def advance(self, t_end: float, max_steps: int | None = None,
                on_step=None) -> dict:
        """March to t_end (may be inf with max_steps); the last step is
        clipped to land exactly on t_end."""
        wall0 = time.perf_counter()
        finite = np.isfinite(t_end)
        while (self.t < t_end - 1e-14 * max(1.0, abs(t_end))) if finite \
                else True:
            if max_steps is not None and self.step_count >= max_steps:
                break
            info = compute_dt(self.mesh, self.u, self.cfl, self.basis.degree,
                              self.eps0)
            dt = info.dt
            if finite:
                dt = min(dt, t_end - self.t)
                if self.t + dt >= t_end:
                    dt = t_end - self.t
            self.step(dt)
            if on_step is not None:
                on_step(self)
        return {
            "steps": self.step_count,
            "t": self.t,
            "dt_history": [r.dt for r in self.step_history],
            "n_cells": self.mesh.n_cells,
            "n_flagged": int(self.flags.sum()),
            "levels": {int(l): int((self.mesh.level == l).sum())
                       for l in np.unique(self.mesh.level)},
            "wall_time": time.perf_counter() - wall0,
        }
