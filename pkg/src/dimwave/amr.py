"""Static cell-by-cell refined Cartesian grids.

Leaves are identified by (level, i, j) indices in the virtual uniform grid
of their level; refinement replaces a leaf by refine_factor^2 children.
The mesh enforces 1-irregularity (face-adjacent leaves differ by at most
one level) through closure refinement.  Grids are built once at
initialization and never change during time stepping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    @property
    def extent(self):
        return tuple(h - l for l, h in zip(self.lo, self.hi))


@dataclass(frozen=True)
class Face:
    """Interior face record; `offset` is the fine cell's tangential position
    inside the coarse face for coarse-fine faces (0 for conforming)."""

    axis: int
    left: int
    right: int
    kind: str = "conforming"       # "conforming" | "coarse_fine"
    coarse_side: int = -1          # 0: coarse is left, 1: coarse is right
    offset: int = 0


@dataclass(frozen=True)
class BoundaryFace:
    cell: int
    axis: int
    side: int                      # 0: low, 1: high


class Mesh:
    """Immutable leaf set of a two-dimensional cell-by-cell refined grid."""

    def __init__(self, box: Box, dims, refine_factor: int = 3, keys=None):
        self.box = box
        self.dims = tuple(int(d) for d in dims)
        self.rf = int(refine_factor)
        if keys is None:
            keys = [(0, i, j) for i in range(self.dims[0])
                    for j in range(self.dims[1])]
        self.keys = sorted(keys)
        self.index = {k: n for n, k in enumerate(self.keys)}
        self.n_cells = len(self.keys)

        h0 = np.array([(box.hi[d] - box.lo[d]) / self.dims[d] for d in (0, 1)])
        self.level = np.array([k[0] for k in self.keys], dtype=int)
        scale = self.rf ** self.level.astype(float)
        self.h = h0[None, :] / scale[:, None]
        ij = np.array([[k[1], k[2]] for k in self.keys], dtype=float)
        self.origin = np.array(box.lo)[None, :] + ij * self.h
        self.center = self.origin + 0.5 * self.h
        self.h_min = float(self.h.min())

    # -- structure queries ---------------------------------------------

    def parent_leaf(self, level: int, i: int, j: int):
        """Index of the leaf at or above (level, i, j), or None."""
        l, a, b = level, i, j
        while l >= 0:
            idx = self.index.get((l, a, b))
            if idx is not None:
                return idx
            l, a, b = l - 1, a // self.rf, b // self.rf
        return None

    def _face_children(self, level, i, j, axis, side):
        """Leaf descendants of virtual cell (level,i,j) touching one face."""
        rf = self.rf
        out = []
        stack = [(level, i, j)]
        while stack:
            l, a, b = stack.pop()
            idx = self.index.get((l, a, b))
            if idx is not None:
                out.append(idx)
                continue
            if l - level > 12:
                raise RuntimeError("mesh does not tile the domain")
            ca = a * rf + (side * (rf - 1) if axis == 0 else 0)
            cb = b * rf + (side * (rf - 1) if axis == 1 else 0)
            for t in range(rf):
                if axis == 0:
                    stack.append((l + 1, ca, cb + t))
                else:
                    stack.append((l + 1, ca + t, cb))
        return sorted(out, reverse=True)

    def face_neighbors(self, n: int, axis: int, side: int):
        """Leaf indices adjacent to face (axis, side) of leaf n (may be [])."""
        l, i, j = self.keys[n]
        step = 1 if side == 1 else -1
        ni, nj = (i + step, j) if axis == 0 else (i, j + step)
        ncells = self.dims[axis] * self.rf ** l
        coord = ni if axis == 0 else nj
        if coord < 0 or coord >= ncells:
            return []
        idx = self.index.get((l, ni, nj))
        if idx is not None:
            return [idx]
        up = self.parent_leaf(l - 1, ni // self.rf, nj // self.rf)
        if up is not None:
            return [up]
        return self._face_children(l, ni, nj, axis, 1 - side)

    def neighbors(self, n: int):
        out = []
        for axis in (0, 1):
            for side in (0, 1):
                out.extend(self.face_neighbors(n, axis, side))
        return out

    def refined(self, cell_ids) -> "Mesh":
        """New mesh with the given leaves replaced by their children."""
        drop = set(int(c) for c in cell_ids)
        keys = []
        for n, k in enumerate(self.keys):
            if n in drop:
                l, i, j = k
                for a in range(self.rf):
                    for b in range(self.rf):
                        keys.append((l + 1, self.rf * i + a, self.rf * j + b))
            else:
                keys.append(k)
        return Mesh(self.box, self.dims, self.rf, keys)

    def irregular_cells(self):
        """Leaves with a face neighbor more than one level deeper."""
        bad = []
        for n in range(self.n_cells):
            ln = self.level[n]
            for axis in (0, 1):
                for side in (0, 1):
                    nb = self.face_neighbors(n, axis, side)
                    if nb and max(self.level[m] for m in nb) > ln + 1:
                        bad.append(n)
                        break
                else:
                    continue
                break
        return bad

    def grid_hash(self) -> int:
        return hash(tuple(self.keys))

    def total_volume(self) -> float:
        return float(np.prod(self.h, axis=1).sum())

    def cell_containing(self, x: float, y: float):
        """Leaf owning (x, y); points on shared faces belong to the
        lexicographically lower cell."""

        def pick(t, n):
            i = int(np.floor(t))
            if i > 0 and t == i:
                i -= 1           # face points resolve to the lower cell
            return min(max(i, 0), n - 1)

        l = 0
        i = pick((x - self.box.lo[0]) / ((self.box.hi[0] - self.box.lo[0]) / self.dims[0]),
                 self.dims[0])
        j = pick((y - self.box.lo[1]) / ((self.box.hi[1] - self.box.lo[1]) / self.dims[1]),
                 self.dims[1])
        while (l, i, j) not in self.index:
            l += 1
            if l > 12:
                raise KeyError(f"point ({x}, {y}) not inside any leaf")
            hx = (self.box.hi[0] - self.box.lo[0]) / (self.dims[0] * self.rf ** l)
            hy = (self.box.hi[1] - self.box.lo[1]) / (self.dims[1] * self.rf ** l)
            i = pick((x - self.box.lo[0]) / hx, self.dims[0] * self.rf ** l)
            j = pick((y - self.box.lo[1]) / hy, self.dims[1] * self.rf ** l)
            # stay inside the subtree of the level-(l-1) candidate
        return self.index[(l, i, j)]


def enforce_one_irregularity(mesh: Mesh) -> Mesh:
    """Refine until no face has a level jump greater than one."""
    while True:
        bad = mesh.irregular_cells()
        if not bad:
            return mesh
        mesh = mesh.refined(bad)


def estimator(mesh: Mesh, means: np.ndarray) -> np.ndarray:
    """Gradient estimator chi_i = max_c |mean_c - mean_i| / |x_c - x_i|
    over the face-adjacent leaves of each cell."""
    chi = np.zeros(mesh.n_cells)
    for n in range(mesh.n_cells):
        best = 0.0
        for m in mesh.neighbors(n):
            dist = float(np.hypot(*(mesh.center[m] - mesh.center[n])))
            best = max(best, abs(means[m] - means[n]) / dist)
        chi[n] = best
    return chi


def refine_static(mesh: Mesh, mean_alpha, chi_plus: float = 0.01,
                  chi_minus: float = 0.001, lmax: int = 1) -> Mesh:
    """Iteratively refine cells with chi > chi_plus up to lmax.

    `mean_alpha(mesh)` returns per-leaf mean volume fractions; it is
    re-evaluated after every pass.  The recoarsening threshold chi_minus
    is accepted for API symmetry but never fires on a freshly refined
    static geometry.
    """
    if lmax < 0:
        raise ValueError("lmax must be >= 0")
    for _ in range(lmax + 1):
        chi = estimator(mesh, np.asarray(mean_alpha(mesh), dtype=float))
        flags = np.flatnonzero((chi > chi_plus) & (mesh.level < lmax))
        if flags.size == 0:
            break
        mesh = enforce_one_irregularity(mesh.refined(flags))
    return mesh


def recoarsen(mesh: Mesh, mean_alpha, chi_minus: float = 0.001) -> Mesh:
    """Merge complete sibling groups whose chi stays below chi_minus.

    Retained for API completeness; static geometries never trigger it
    after refine_static.
    """
    chi = estimator(mesh, np.asarray(mean_alpha(mesh), dtype=float))
    groups: dict[tuple, list] = {}
    for n, (l, i, j) in enumerate(mesh.keys):
        if l > 0:
            groups.setdefault((l - 1, i // mesh.rf, j // mesh.rf), []).append(n)
    keys = set(mesh.keys)
    for parent, members in groups.items():
        if len(members) != mesh.rf ** 2:
            continue
        if all(chi[m] < chi_minus for m in members):
            for m in members:
                keys.discard(mesh.keys[m])
            keys.add(parent)
    merged = Mesh(mesh.box, mesh.dims, mesh.rf, sorted(keys))
    if merged.irregular_cells():
        return mesh            # keep 1-irregularity: reject the merge wave
    return merged


def build_faces(mesh: Mesh, periodic=(False, False)):
    """Enumerate interior faces (each once) and non-periodic boundary faces.

    Coarse-fine faces are emitted per fine subface; periodic boundaries
    require conforming same-level cells on both wrapped sides.
    """
    faces: list[Face] = []
    boundary: list[BoundaryFace] = []
    for n, (l, i, j) in enumerate(mesh.keys):
        for axis in (0, 1):
            ncells = mesh.dims[axis] * mesh.rf ** l
            coord = i if axis == 0 else j
            # high side
            if coord + 1 < ncells:
                ni, nj = (i + 1, j) if axis == 0 else (i, j + 1)
                idx = mesh.index.get((l, ni, nj))
                if idx is not None:
                    faces.append(Face(axis, n, idx))
                else:
                    up = mesh.parent_leaf(l - 1, ni // mesh.rf, nj // mesh.rf)
                    if up is not None:
                        off = (j if axis == 0 else i) % mesh.rf
                        faces.append(Face(axis, n, up, "coarse_fine",
                                          coarse_side=1, offset=off))
                    # finer neighbors register this face themselves
            elif periodic[axis]:
                ni, nj = (0, j) if axis == 0 else (i, 0)
                idx = mesh.index.get((l, ni, nj))
                if idx is None:
                    raise ValueError("periodic boundary requires conforming cells")
                faces.append(Face(axis, n, idx))
            else:
                boundary.append(BoundaryFace(n, axis, 1))
            # low side: only coarse-fine (same-level handled by the lower cell)
            if coord > 0:
                ni, nj = (i - 1, j) if axis == 0 else (i, j - 1)
                if (l, ni, nj) not in mesh.index:
                    up = mesh.parent_leaf(l - 1, ni // mesh.rf, nj // mesh.rf)
                    if up is not None:
                        off = (j if axis == 0 else i) % mesh.rf
                        faces.append(Face(axis, up, n, "coarse_fine",
                                          coarse_side=0, offset=off))
            elif not periodic[axis]:
                boundary.append(BoundaryFace(n, axis, 0))
    return faces, boundary
