"""File formats: ASCII PLY / XYZ clouds, correspondence lists, transforms.

All parsers raise FileFormatError with the 1-based line number of the first
offending line. All writers emit deterministic text (" %.17g" floats), so
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.spatial import cKDTree

from .cloud import OrientedPointCloud, _pca_normal, estimate_normals
from .correspondences import CorrespondenceSet
from .errors import FileFormatError
from .transforms import RigidTransform


def _fmt_row(values) -> str:
    return " ".join(f"{v:.17g}" for v in values)


# ---------------------------------------------------------------------------
# Point clouds
# ---------------------------------------------------------------------------

def load_cloud(path: str, normal_k: int = 20) -> OrientedPointCloud:
    """Load a PLY (ascii) or whitespace XYZ/XYZN cloud.

    Clouds without normals get them from k-NN PCA estimation with
    k = min(normal_k, n).
    """
    if path.lower().endswith(".ply"):
        pts, nrm = _load_ply(path)
    else:
        pts, nrm = _load_xyz(path)
    try:
        if nrm is None:
            k = min(normal_k, len(pts))
            if k < 3:
                raise FileFormatError(path, "cloud too small to estimate normals")
            return estimate_normals(pts, k=k)
        lengths = np.linalg.norm(nrm, axis=1)
        bad = np.nonzero(np.abs(lengths - 1.0) >= 1e-6)[0]
        if len(bad):
            # Tolerate denormalized inputs; renormalize nonzero normals.
            if np.any(lengths[bad] < 1e-12):
                raise FileFormatError(path, "zero-length normal in input")
            nrm = nrm / lengths[:, None]
        return OrientedPointCloud(pts, nrm)
    except ValueError as exc:  # non-finite coordinates and similar
        raise FileFormatError(path, str(exc)) from None


def _load_ply(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise FileFormatError(path, "missing 'ply' magic", line=1)
    n_vertex = None
    props: list[str] = []
    header_end = None
    in_vertex = False
    for i, raw in enumerate(lines[1:], start=2):
        tok = raw.split()
        if not tok or tok[0] == "comment":
            continue
        if tok[0] == "format":
            if tok[1] != "ascii":
                raise FileFormatError(path, f"unsupported format {tok[1]!r}", line=i)
        elif tok[0] == "element":
            if tok[1] == "vertex":
                in_vertex = True
                try:
                    n_vertex = int(tok[2])
                except (IndexError, ValueError):
                    raise FileFormatError(path, "bad element vertex count", line=i) from None
            else:
                in_vertex = False
        elif tok[0] == "property" and in_vertex:
            props.append(tok[-1])
        elif tok[0] == "end_header":
            header_end = i
            break
    if header_end is None or n_vertex is None:
        raise FileFormatError(path, "incomplete PLY header")
    for needed in ("x", "y", "z"):
        if needed not in props:
            raise FileFormatError(path, f"vertex property {needed!r} missing")
    has_normals = all(p in props for p in ("nx", "ny", "nz"))
    cols = {p: c for c, p in enumerate(props)}

    rows = np.empty((n_vertex, len(props)))
    for r in range(n_vertex):
        line_no = header_end + 1 + r
        if line_no > len(lines):
            raise FileFormatError(path, f"expected {n_vertex} vertices, file ended",
                                  line=len(lines))
        tok = lines[line_no - 1].split()
        if len(tok) != len(props):
            raise FileFormatError(path, f"expected {len(props)} values, got {len(tok)}",
                                  line=line_no)
        try:
            rows[r] = [float(t) for t in tok]
        except ValueError:
            raise FileFormatError(path, "non-numeric vertex value", line=line_no) from None
    pts = rows[:, [cols["x"], cols["y"], cols["z"]]]
    nrm = rows[:, [cols["nx"], cols["ny"], cols["nz"]]] if has_normals else None
    return pts, nrm


def _load_xyz(path: str):
    pts, nrm = [], []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            tok = text.split()
            if width is None:
                if len(tok) not in (3, 6):
                    raise FileFormatError(path, f"expected 3 or 6 columns, got {len(tok)}",
                                          line=line_no)
                width = len(tok)
            if len(tok) != width:
                raise FileFormatError(path, f"expected {width} columns, got {len(tok)}",
                                      line=line_no)
            try:
                values = [float(t) for t in tok]
            except ValueError:
                raise FileFormatError(path, "non-numeric value", line=line_no) from None
            pts.append(values[:3])
            if width == 6:
                nrm.append(values[3:])
    if not pts:
        raise FileFormatError(path, "empty cloud file")
    return np.array(pts), (np.array(nrm) if nrm else None)


def save_cloud_ply(path: str, cloud: OrientedPointCloud):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(cloud)}\n")
        for prop in ("x", "y", "z", "nx", "ny", "nz"):
            fh.write(f"property double {prop}\n")
        fh.write("end_header\n")
        for p, n in zip(cloud.points, cloud.normals):
            fh.write(_fmt_row(p) + " " + _fmt_row(n) + "\n")


def save_cloud_xyzn(path: str, cloud: OrientedPointCloud):
    with open(path, "w", encoding="utf-8") as fh:
        for p, n in zip(cloud.points, cloud.normals):
            fh.write(_fmt_row(p) + " " + _fmt_row(n) + "\n")


# ---------------------------------------------------------------------------
# Correspondences
# ---------------------------------------------------------------------------

def load_correspondences(path: str, source: OrientedPointCloud,
                         target: OrientedPointCloud,
                         normal_k: int = 20):
    """Read a correspondence file against the given clouds.

    Two-column lines are index pairs into the clouds. Six-column lines are
    coordinate pairs (vx vy vz ux uy uz); their points are appended to
    copies of the clouds with PCA-estimated normals. Returns the possibly
    extended (source, target, correspondences).
    """
    idx_rows: list[tuple[int, int]] = []
    coord_rows: list[list[float]] = []
    mode = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            tok = text.split()
            if len(tok) == 2:
                line_mode = "index"
            elif len(tok) == 6:
                line_mode = "coords"
            else:
                raise FileFormatError(path, f"expected 2 or 6 columns, got {len(tok)}",
                                      line=line_no)
            if mode is None:
                mode = line_mode
            elif mode != line_mode:
                raise FileFormatError(path, "mixed index and coordinate rows",
                                      line=line_no)
            if line_mode == "index":
                try:
                    i, j = int(tok[0]), int(tok[1])
                except ValueError:
                    raise FileFormatError(path, "non-integer index", line=line_no) from None
                if not (0 <= i < len(source)) or not (0 <= j < len(target)):
                    raise FileFormatError(path, f"index pair ({i}, {j}) out of bounds",
                                          line=line_no)
                idx_rows.append((i, j))
            else:
                try:
                    coord_rows.append([float(t) for t in tok])
                except ValueError:
                    raise FileFormatError(path, "non-numeric coordinate", line=line_no) from None

    if mode == "coords":
        coords = np.array(coord_rows)
        source = _append_points(source, coords[:, :3], normal_k)
        target = _append_points(target, coords[:, 3:], normal_k)
        n0_src = len(source) - len(coords)
        n0_tgt = len(target) - len(coords)
        src_ids = np.arange(n0_src, len(source), dtype=np.intp)
        tgt_ids = np.arange(n0_tgt, len(target), dtype=np.intp)
        return source, target, CorrespondenceSet(src_ids, tgt_ids)

    rows = np.array(idx_rows, dtype=np.intp).reshape(-1, 2)
    return source, target, CorrespondenceSet(rows[:, 0], rows[:, 1])


def _append_points(cloud: OrientedPointCloud, new_pts: np.ndarray,
                   normal_k: int) -> OrientedPointCloud:
    """Extend a cloud with bare points, PCA-estimating only the new normals."""
    merged = np.vstack([cloud.points, new_pts])
    k = min(normal_k, len(merged))
    if k < 3:
        raise ValueError("cloud too small to estimate appended normals")
    tree = cKDTree(merged)
    _, nbr = tree.query(new_pts, k=k)
    nbr = nbr.reshape(len(new_pts), -1)
    vp = np.zeros(3)
    new_normals = np.array([_pca_normal(merged[row], vp) for row in nbr])
    return OrientedPointCloud(merged, np.vstack([cloud.normals, new_normals]))


def save_correspondences(path: str, cset: CorrespondenceSet):
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in zip(cset.source_indices, cset.target_indices):
            fh.write(f"{int(i)} {int(j)}\n")


# ---------------------------------------------------------------------------
# Transforms and manifests
# ---------------------------------------------------------------------------

def load_transform(path: str) -> RigidTransform:
    """Read 12 ([R|t] rows) or 16 (4x4) whitespace-separated numbers."""
    values: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                values.extend(float(t) for t in text.split())
            except ValueError:
                raise FileFormatError(path, "non-numeric value", line=line_no) from None
    if len(values) == 12:
        m = np.array(values).reshape(3, 4)
    elif len(values) == 16:
        m = np.array(values).reshape(4, 4)
    else:
        raise FileFormatError(path, f"expected 12 or 16 numbers, got {len(values)}")
    try:
        return RigidTransform.from_matrix(m)
    except ValueError as exc:
        raise FileFormatError(path, str(exc)) from None


def save_transform(path: str, transform: RigidTransform):
    with open(path, "w", encoding="utf-8") as fh:
        for row in transform.matrix():
            fh.write(_fmt_row(row) + "\n")


def load_manifest(path: str):
    """Rows of (source, target, correspondences, gt-or-None) paths.

    Paths are resolved relative to the manifest location; '-' means no
    ground truth.
    """
    base = os.path.dirname(os.path.abspath(path))
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            tok = text.split()
            if len(tok) not in (3, 4):
                raise FileFormatError(path, f"expected 3 or 4 columns, got {len(tok)}",
                                      line=line_no)
            resolved = [t if os.path.isabs(t) else os.path.join(base, t) for t in tok[:3]]
            gt = None
            if len(tok) == 4 and tok[3] != "-":
                gt = tok[3] if os.path.isabs(tok[3]) else os.path.join(base, tok[3])
            rows.append((resolved[0], resolved[1], resolved[2], gt))
    if not rows:
        raise FileFormatError(path, "empty manifest")
    return rows
