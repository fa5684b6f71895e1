"""Turn recovered normal fields into height maps and triangle meshes.

The integration step solves the discrete least-squares problem
``min ||grad z - g||^2`` over the masked domain (a Poisson system with
natural boundary conditions), so noisy per-pixel normals average into a
smooth surface.  Heights are only defined up to a constant per connected
region; the gauge is fixed to zero mean per region, and
:func:`depth_alignment_offset` shifts the result onto reference depths
(e.g. a triangulated point cloud) when an absolute position is wanted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.linalg import cg

from .geometry import ContractViolation

__all__ = [
    "EPS_SLOPE",
    "EmptyMaskError",
    "GradientGrid",
    "NormalGrid",
    "TriangleMesh",
    "depth_alignment_offset",
    "integrate",
    "mesh_from_heightmap",
    "normals_to_gradients",
]

#: Pixels whose normal z component is below this are treated as grazing and
#: dropped: their slopes are numerically unreliable near silhouettes.
EPS_SLOPE = 0.05

#: Allowed deviation from unit length for masked normals.
_UNIT_TOL = 1e-6

#: Four-connectivity for component labelling.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


class EmptyMaskError(ValueError):
    """An operation that needs masked pixels received none."""


@dataclass
class NormalGrid:
    """Per-pixel unit normals with a validity mask.

    ``pitch`` is the horizontal distance between neighboring pixels in
    scene units; heights produced from this grid share those units.
    """

    normals: np.ndarray         # (H, W, 3)
    mask: np.ndarray            # (H, W) bool
    pitch: float

    def __post_init__(self):
        self.normals = np.asarray(self.normals, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.normals.shape[:2] != self.mask.shape or \
                self.normals.shape[-1] != 3:
            raise ContractViolation("normals must be (H, W, 3) matching mask")
        if self.mask.any():
            lengths = np.linalg.norm(self.normals[self.mask], axis=1)
            worst = float(np.abs(lengths - 1.0).max())
            if worst > _UNIT_TOL:
                raise ContractViolation(
                    f"masked normals must be unit length (off by {worst:.3g})")


@dataclass
class GradientGrid:
    """Per-pixel height-map slopes (dz/dx, dz/dy) with a validity mask.

    ``dropped`` marks pixels removed from the incoming mask because their
    normals were too close to grazing.
    """

    p: np.ndarray               # (H, W) dz/dx
    q: np.ndarray               # (H, W) dz/dy
    mask: np.ndarray            # (H, W) bool
    pitch: float
    dropped: np.ndarray         # (H, W) bool


@dataclass
class TriangleMesh:
    vertices: np.ndarray        # (N, 3)
    faces: np.ndarray           # (M, 3) indices into vertices


def normals_to_gradients(grid: NormalGrid) -> GradientGrid:
    """Convert unit normals to height-map slopes p = -nx/nz, q = -ny/nz.

    Grazing normals (|nz| < EPS_SLOPE) cannot give reliable slopes; those
    pixels are removed from the mask and reported via ``dropped``.
    """
    nz = grid.normals[..., 2]
    steep = np.abs(nz) < EPS_SLOPE
    dropped = grid.mask & steep
    mask = grid.mask & ~steep
    safe_nz = np.where(mask, nz, 1.0)
    p = np.where(mask, -grid.normals[..., 0] / safe_nz, 0.0)
    q = np.where(mask, -grid.normals[..., 1] / safe_nz, 0.0)
    return GradientGrid(p=p, q=q, mask=mask, pitch=grid.pitch,
                        dropped=dropped)


def integrate(grads: GradientGrid) -> np.ndarray:
    """Least-squares height map from slopes over the masked domain.

    Each edge between two masked 4-neighbors contributes one equation:
    the height difference must match the edge-midpoint slope times the
    pitch.  The normal equations are solved by conjugate gradients
    (relative tolerance 1e-10, at most 10k iterations), and each
    4-connected component is shifted to zero mean height.  Pixels outside
    the mask are NaN in the result.
    """
    mask = grads.mask
    count = int(mask.sum())
    if count == 0:
        raise EmptyMaskError("cannot integrate an empty mask")
    h, w = mask.shape
    index = np.full((h, w), -1, dtype=np.int64)
    index[mask] = np.arange(count)

    rows_i, rows_j, data_b = [], [], []
    # horizontal edges (j, j+1)
    he = mask[:, :-1] & mask[:, 1:]
    i0 = index[:, :-1][he]
    i1 = index[:, 1:][he]
    bh = 0.5 * (grads.p[:, :-1][he] + grads.p[:, 1:][he]) * grads.pitch
    # vertical edges (i, i+1)
    ve = mask[:-1, :] & mask[1:, :]
    j0 = index[:-1, :][ve]
    j1 = index[1:, :][ve]
    bv = 0.5 * (grads.q[:-1, :][ve] + grads.q[1:, :][ve]) * grads.pitch

    n_edges = len(i0) + len(j0)
    if n_edges == 0:
        # isolated pixels only: every height is its own zero-mean component
        out = np.full((h, w), np.nan)
        out[mask] = 0.0
        return out

    edge_rows = np.arange(n_edges)
    cols = np.concatenate([i1, j1, i0, j0])
    rows = np.concatenate([edge_rows, edge_rows])
    vals = np.concatenate([np.ones(n_edges), -np.ones(n_edges)])
    a = sparse.csr_matrix((vals, (rows, cols)), shape=(n_edges, count))
    b = np.concatenate([bh, bv])

    ata = (a.T @ a).tocsr()
    atb = a.T @ b
    try:
        z, info = cg(ata, atb, rtol=1e-10, atol=0.0, maxiter=10_000)
    except TypeError:  # pragma: no cover - older scipy spelling
        z, info = cg(ata, atb, tol=1e-10, atol=0.0, maxiter=10_000)
    if info < 0:
        raise RuntimeError(f"conjugate-gradient solve failed (info={info})")

    out = np.full((h, w), np.nan)
    out[mask] = z
    labels, n_comp = ndimage.label(mask, structure=_CROSS)
    for comp in range(1, n_comp + 1):
        sel = labels == comp
        out[sel] -= out[sel].mean()
    return out


def mesh_from_heightmap(height: np.ndarray, mask: np.ndarray, pitch: float,
                        origin: tuple = (0.0, 0.0)) -> TriangleMesh:
    """Triangulate a masked height map: one vertex per masked pixel, two
    counterclockwise (seen from +z) triangles per fully masked quad.

    Pixel (i, j) maps to x = origin[0] + j * pitch, y = origin[1] +
    i * pitch.  Quads touching unmasked pixels are skipped, so holes stay
    open.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    count = int(mask.sum())
    index = np.full((h, w), -1, dtype=np.int64)
    index[mask] = np.arange(count)
    ii, jj = np.nonzero(mask)
    vertices = np.stack([origin[0] + jj * pitch, origin[1] + ii * pitch,
                         np.asarray(height)[ii, jj]], axis=1)

    quad = mask[:-1, :-1] & mask[:-1, 1:] & mask[1:, :-1] & mask[1:, 1:]
    v00 = index[:-1, :-1][quad]
    v01 = index[:-1, 1:][quad]
    v10 = index[1:, :-1][quad]
    v11 = index[1:, 1:][quad]
    faces = np.concatenate([
        np.stack([v00, v01, v11], axis=1),
        np.stack([v00, v11, v10], axis=1),
    ]) if len(v00) else np.zeros((0, 3), dtype=np.int64)
    return TriangleMesh(vertices=vertices, faces=faces.astype(np.int64))


def depth_alignment_offset(height: np.ndarray, mask: np.ndarray,
                           reference: np.ndarray,
                           ref_valid: np.ndarray) -> float:
    """Least-squares constant aligning integrated heights to reference
    depths over the pixels where both are defined."""
    both = np.asarray(mask, bool) & np.asarray(ref_valid, bool)
    both &= np.isfinite(height) & np.isfinite(reference)
    if not both.any():
        raise EmptyMaskError("no overlap between height map and reference")
    return float(np.mean(reference[both] - height[both]))
