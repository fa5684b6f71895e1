"""On-disk artifact formats: correspondence maps, point clouds, meshes,
float/integer images, and run manifests.

All formats are deterministic (no timestamps, fixed key order, fixed float
formatting) so identical inputs produce byte-identical files, and all
readers validate magic numbers and sizes so corrupted artifacts fail loudly
instead of propagating garbage downstream.

Formats:

* ``.corr`` — one correspondence map: magic ``CORRMAP1``, little-endian
  u32 height/width, u8 pattern index, u8 immersed flag, then planar blocks
  of valid bytes, u doubles, v doubles (row-major).
* ``.ply`` — binary little-endian point cloud; per-vertex double x/y/z,
  optional double nx/ny/nz, double delta_theta, double gap, uchar quality,
  uint pixel_row/pixel_col.
* ``.obj`` — ASCII triangle mesh, ``%.17g`` coordinates (lossless for
  float64), 1-based face indices.
* ``.pfm`` — portable float map (``Pf`` gray / ``PF`` 3-channel), scale
  ``-1.0`` (little-endian), rows bottom-up per convention.
* ``.pgm`` — 16-bit binary PGM (``P5``, maxval 65535, big-endian).
* ``.json`` manifests — sorted keys, two-space indent.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .heightfield import TriangleMesh
from .reconstruct import ReconPoints
from .tracer import CorrespondenceMap

__all__ = [
    "FormatError",
    "read_correspondence_map",
    "read_manifest",
    "read_mesh_obj",
    "read_pfm",
    "read_pgm16",
    "read_point_cloud_ply",
    "write_correspondence_map",
    "write_manifest",
    "write_mesh_obj",
    "write_pfm",
    "write_pgm16",
    "write_point_cloud_ply",
]


class FormatError(ValueError):
    """Raised when an artifact file is malformed or truncated."""


_CORR_MAGIC = b"CORRMAP1"


def write_correspondence_map(path, cmap: CorrespondenceMap) -> None:
    """Write one map.  The acquisition configuration (immersed or not) is
    deliberately not stored: it lives in the manifest, so the two maps of a
    degenerate medium pair stay byte-identical."""
    h, w = cmap.u.shape
    with open(path, "wb") as fh:
        fh.write(_CORR_MAGIC)
        fh.write(struct.pack("<IIBB", h, w, int(cmap.pattern_index), 0))
        fh.write(np.ascontiguousarray(cmap.valid, dtype=np.uint8).tobytes())
        fh.write(np.ascontiguousarray(cmap.u, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(cmap.v, dtype="<f8").tobytes())


def read_correspondence_map(path, immersed: bool = False) -> CorrespondenceMap:
    data = Path(path).read_bytes()
    head = len(_CORR_MAGIC) + struct.calcsize("<IIBB")
    if len(data) < head or not data.startswith(_CORR_MAGIC):
        raise FormatError(f"{path}: not a correspondence map")
    h, w, pattern_index, _reserved = struct.unpack_from(
        "<IIBB", data, len(_CORR_MAGIC))
    n = h * w
    expected = head + n * (1 + 8 + 8)
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, "
                          f"found {len(data)}")
    valid = np.frombuffer(data, dtype=np.uint8, count=n,
                          offset=head).reshape(h, w).astype(bool)
    u = np.frombuffer(data, dtype="<f8", count=n,
                      offset=head + n).reshape(h, w).copy()
    v = np.frombuffer(data, dtype="<f8", count=n,
                      offset=head + 9 * n).reshape(h, w).copy()
    return CorrespondenceMap(u=u, v=v, valid=valid,
                             pattern_index=int(pattern_index),
                             immersed=immersed)


# ---------------------------------------------------------------------------
# point clouds

_PLY_TYPES = {"double": "<f8", "uchar": "u1", "uint": "<u4"}


def write_point_cloud_ply(path, points: ReconPoints) -> None:
    n = len(points.fep)
    fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
    if points.normal is not None:
        fields += [("nx", "<f8"), ("ny", "<f8"), ("nz", "<f8")]
    fields += [("delta_theta", "<f8"), ("gap", "<f8"), ("quality", "u1"),
               ("pixel_row", "<u4"), ("pixel_col", "<u4")]
    rec = np.zeros(n, dtype=fields)
    rec["x"], rec["y"], rec["z"] = points.fep.T
    if points.normal is not None:
        rec["nx"], rec["ny"], rec["nz"] = points.normal.T
    rec["delta_theta"] = points.delta_theta
    rec["gap"] = points.gap
    rec["quality"] = np.asarray(points.quality, dtype=np.uint8)
    rec["pixel_row"] = points.pixels[:, 0]
    rec["pixel_col"] = points.pixels[:, 1]

    ply_name = {"<f8": "double", "u1": "uchar", "<u4": "uint"}
    header = ["ply", "format binary_little_endian 1.0",
              f"element vertex {n}"]
    header += [f"property {ply_name[t]} {name}" for name, t in fields]
    header.append("end_header")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(rec.tobytes())


def read_point_cloud_ply(path) -> ReconPoints:
    data = Path(path).read_bytes()
    marker = b"end_header\n"
    cut = data.find(marker)
    if not data.startswith(b"ply\n") or cut < 0:
        raise FormatError(f"{path}: not a PLY file")
    lines = data[:cut].decode("ascii").splitlines()
    if "format binary_little_endian 1.0" not in lines:
        raise FormatError(f"{path}: unsupported PLY format variant")
    n = None
    fields = []
    for line in lines:
        parts = line.split()
        if parts[:2] == ["element", "vertex"]:
            n = int(parts[2])
        elif parts[0] == "property" and n is not None:
            if parts[1] not in _PLY_TYPES:
                raise FormatError(f"{path}: unsupported property type "
                                  f"{parts[1]!r}")
            fields.append((parts[2], _PLY_TYPES[parts[1]]))
    if n is None or not fields:
        raise FormatError(f"{path}: missing vertex element declaration")
    body = data[cut + len(marker):]
    dtype = np.dtype(fields)
    if len(body) != n * dtype.itemsize:
        raise FormatError(f"{path}: vertex data size mismatch")
    rec = np.frombuffer(body, dtype=dtype, count=n)
    names = {name for name, _ in fields}
    required = {"x", "y", "z", "delta_theta", "gap", "quality",
                "pixel_row", "pixel_col"}
    if not required <= names:
        raise FormatError(f"{path}: missing properties "
                          f"{sorted(required - names)}")
    normal = None
    if {"nx", "ny", "nz"} <= names:
        normal = np.stack([rec["nx"], rec["ny"], rec["nz"]], axis=1)
    return ReconPoints(
        pixels=np.stack([rec["pixel_row"], rec["pixel_col"]],
                        axis=1).astype(np.int64),
        fep=np.stack([rec["x"], rec["y"], rec["z"]], axis=1),
        normal=normal,
        delta_theta=np.asarray(rec["delta_theta"], dtype=float),
        gap=np.asarray(rec["gap"], dtype=float),
        quality=np.asarray(rec["quality"], dtype=np.uint8))


# ---------------------------------------------------------------------------
# meshes


def write_mesh_obj(path, mesh: TriangleMesh) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for v in np.asarray(mesh.vertices, dtype=float):
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in np.asarray(mesh.faces):
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def read_mesh_obj(path) -> TriangleMesh:
    vertices = []
    faces = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0] in ("#", "o", "g", "s", "vn", "vt"):
                continue
            try:
                if parts[0] == "v":
                    vertices.append([float(x) for x in parts[1:4]])
                elif parts[0] == "f":
                    faces.append([int(x.split("/")[0]) - 1
                                  for x in parts[1:4]])
                else:
                    raise ValueError(f"unsupported element {parts[0]!r}")
            except (ValueError, IndexError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return TriangleMesh(
        vertices=np.asarray(vertices, dtype=float).reshape(-1, 3),
        faces=np.asarray(faces, dtype=np.int64).reshape(-1, 3))


# ---------------------------------------------------------------------------
# images


def write_pfm(path, image: np.ndarray) -> None:
    img = np.asarray(image, dtype="<f4")
    if img.ndim == 2:
        magic = b"Pf"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError(f"PFM needs (H, W) or (H, W, 3), got {img.shape}")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n")
        fh.write(f"{w} {h}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.ascontiguousarray(img[::-1]).tobytes())


def read_pfm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    try:
        magic, rest = data.split(b"\n", 1)
        dims, rest = rest.split(b"\n", 1)
        scale, body = rest.split(b"\n", 1)
        w, h = (int(x) for x in dims.split())
        scale = float(scale)
    except ValueError as exc:
        raise FormatError(f"{path}: malformed PFM header") from exc
    if magic not in (b"Pf", b"PF"):
        raise FormatError(f"{path}: not a PFM file")
    if scale >= 0:
        raise FormatError(f"{path}: big-endian PFM unsupported")
    channels = 3 if magic == b"PF" else 1
    count = w * h * channels
    if len(body) != 4 * count:
        raise FormatError(f"{path}: PFM data size mismatch")
    img = np.frombuffer(body, dtype="<f4", count=count)
    shape = (h, w, 3) if channels == 3 else (h, w)
    return img.reshape(shape)[::-1].copy()


def write_pgm16(path, image: np.ndarray) -> None:
    img = np.asarray(image)
    if img.ndim != 2 or img.dtype != np.uint16:
        raise ValueError("PGM16 needs a 2-D uint16 image")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(img.astype(">u2").tobytes())


def read_pgm16(path) -> np.ndarray:
    data = Path(path).read_bytes()
    try:
        magic, dims, maxval, body = data.split(b"\n", 3)
        w, h = (int(x) for x in dims.split())
        maxval = int(maxval)
    except ValueError as exc:
        raise FormatError(f"{path}: malformed PGM header") from exc
    if magic != b"P5" or maxval != 65535:
        raise FormatError(f"{path}: expected 16-bit binary PGM")
    if len(body) != 2 * w * h:
        raise FormatError(f"{path}: PGM data size mismatch")
    return np.frombuffer(body, dtype=">u2").reshape(h, w).astype(np.uint16)


# ---------------------------------------------------------------------------
# manifests


def write_manifest(path, meta: dict) -> None:
    text = json.dumps(meta, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def read_manifest(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed manifest: {exc}") from exc
