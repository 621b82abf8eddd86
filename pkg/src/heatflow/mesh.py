"""Triangle meshes and the discrete Laplace-Beltrami operator.

The operator is assembled in the cotan formulation: a symmetric stiffness
matrix C with off-diagonal entries -(cot(theta_ij) + cot(phi_ij))/2 over the
angles opposite each edge, diagonal C_ii = -sum_j C_ij, together with a
positive vertex-area vector A (mixed Voronoi areas by default). The operator
acts as (Delta f)_i = (C f)_i / A_i.
"""

import warnings

import numpy as np
from scipy import sparse

# An angle counts as obtuse only when its cosine is clearly negative; the
# tolerance band around 90 degrees is treated as nonobtuse.
_OBTUSE_COS = -1e-12
_COT_CLAMP = 1e8
_DEGENERATE_REL_AREA = 1e-14


class TriangleMesh:
    """Immutable triangle mesh: vertex coordinates plus face connectivity.

    Parameters
    ----------
    vertices : (N, 3) array_like
        Vertex coordinates.
    faces : (M, 3) array_like
        Vertex-index triples. Every index must be in range, no face may
        repeat a vertex, and every vertex must be referenced by a face.

    Faces whose area falls below 1e-14 times their squared longest edge are
    recorded in ``degenerate_faces``; operator assembly refuses such meshes.
    """

    def __init__(self, vertices, faces):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must be an (N, 3) array")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ValueError("faces must be an (M, 3) array")
        if not np.all(np.isfinite(self.vertices)):
            raise ValueError("vertex coordinates must be finite")
        n = len(self.vertices)
        if self.faces.size:
            if self.faces.min() < 0 or self.faces.max() >= n:
                bad = int(np.argmax((self.faces < 0) | (self.faces >= n)).item())
                raise ValueError(
                    f"face index out of range [0, {n}) in face {bad // 3}"
                )
        repeated = (
            (self.faces[:, 0] == self.faces[:, 1])
            | (self.faces[:, 1] == self.faces[:, 2])
            | (self.faces[:, 0] == self.faces[:, 2])
        )
        if repeated.any():
            raise ValueError(
                f"faces repeat a vertex: {np.nonzero(repeated)[0].tolist()}"
            )
        referenced = np.zeros(n, dtype=bool)
        referenced[self.faces.ravel()] = True
        if not referenced.all():
            isolated = np.nonzero(~referenced)[0]
            raise ValueError(f"isolated vertices not allowed: {isolated.tolist()}")
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)
        areas = self.face_areas()
        max_edge_sq = self._edge_lengths().max(axis=1) ** 2
        self.degenerate_faces = np.nonzero(
            areas < _DEGENERATE_REL_AREA * max_edge_sq
        )[0]

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def _corner_vectors(self):
        """Per-face corner points (p0, p1, p2)."""
        v = self.vertices
        f = self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]

    def _edge_lengths(self):
        """Per-face edge lengths, column c = edge opposite corner c."""
        p0, p1, p2 = self._corner_vectors()
        return np.column_stack(
            [
                np.linalg.norm(p1 - p2, axis=1),
                np.linalg.norm(p2 - p0, axis=1),
                np.linalg.norm(p0 - p1, axis=1),
            ]
        )

    def face_areas(self):
        """Heron's formula from the three edge lengths of each face."""
        el = self._edge_lengths()
        a, b, c = el[:, 0], el[:, 1], el[:, 2]
        s = 0.5 * (a + b + c)
        rad = np.maximum(s * (s - a) * (s - b) * (s - c), 0.0)
        return np.sqrt(rad)

    def _corner_cotangents(self):
        """cot of the interior angle at each face corner, clamped.

        Also returns the cosine of each corner angle (for obtuse tests).
        """
        p0, p1, p2 = self._corner_vectors()
        cots = np.empty((self.n_faces, 3))
        coss = np.empty((self.n_faces, 3))
        for c, (a, b) in enumerate([(p1 - p0, p2 - p0), (p2 - p1, p0 - p1), (p0 - p2, p1 - p2)]):
            dot = np.einsum("ij,ij->i", a, b)
            cross = np.linalg.norm(np.cross(a, b), axis=1)
            coss[:, c] = dot / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            with np.errstate(divide="ignore", invalid="ignore"):
                cot = dot / cross
            cots[:, c] = np.clip(np.nan_to_num(cot, nan=_COT_CLAMP), -_COT_CLAMP, _COT_CLAMP)
        return cots, coss


class LBOperator:
    """Discrete Laplace-Beltrami operator: stiffness C and vertex areas A.

    C is symmetric sparse (CSR) with zero row sums; A is strictly positive.
    Instances are immutable apart from the lazily cached spectral bound.
    """

    def __init__(self, C, A, lambda_max_hint=None):
        self.C = C.tocsr()
        self.A = np.asarray(A, dtype=float)
        if self.A.ndim != 1 or self.C.shape != (len(self.A), len(self.A)):
            raise ValueError("C must be square and match the length of A")
        if not np.all(self.A > 0):
            raise ValueError("vertex areas must be strictly positive")
        self.A.setflags(write=False)
        self.lambda_max_hint = lambda_max_hint

    @property
    def n_vertices(self):
        return len(self.A)


def _require_clean(mesh):
    if len(mesh.degenerate_faces):
        raise ValueError(
            f"degenerate faces (area < {_DEGENERATE_REL_AREA} * max edge^2): "
            f"{mesh.degenerate_faces.tolist()}"
        )


def _check_manifold(mesh):
    edges = np.sort(
        mesh.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1
    )
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    bad = counts > 2
    if bad.any():
        i, j = uniq[np.argmax(bad)]
        raise ValueError(
            f"non-manifold edge ({i}, {j}) shared by {counts[np.argmax(bad)]} faces"
        )


def cotan_matrix(mesh):
    """Symmetric cotan stiffness matrix C of a (boundary-allowed) manifold mesh.

    Off-diagonal: -(sum of the cotangents opposite edge ij)/2, one term per
    incident triangle. Diagonal: negative sum of the row's off-diagonals.
    """
    _require_clean(mesh)
    _check_manifold(mesh)
    f = mesh.faces
    cots, _ = mesh._corner_cotangents()
    n = mesh.n_vertices
    # edge opposite corner c, stored with sorted endpoints so each undirected
    # edge accumulates both triangle contributions in one matrix entry
    rows = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
    cols = np.concatenate([f[:, 2], f[:, 0], f[:, 1]])
    vals = 0.5 * np.concatenate([cots[:, 0], cots[:, 1], cots[:, 2]])
    lo = np.minimum(rows, cols)
    hi = np.maximum(rows, cols)
    upper = sparse.coo_matrix((vals, (lo, hi)), shape=(n, n)).tocsr()
    upper.sum_duplicates()
    off = -(upper + upper.T)
    diag = -np.asarray(off.sum(axis=1)).ravel()
    return (off + sparse.diags(diag)).tocsr()


def vertex_areas(mesh, scheme="mixed"):
    """Per-vertex areas A_i.

    scheme="mixed" (default): Voronoi area inside nonobtuse triangles,
    half/quarter of the triangle area at the obtuse/nonobtuse corners of
    obtuse triangles. scheme="barycentric": one third of each incident
    triangle's area.
    """
    _require_clean(mesh)
    if scheme not in ("mixed", "barycentric"):
        raise ValueError(f"unknown area scheme {scheme!r}")
    f = mesh.faces
    areas = mesh.face_areas()
    n = mesh.n_vertices
    out = np.zeros(n)
    if scheme == "barycentric":
        np.add.at(out, f.ravel(), np.repeat(areas / 3.0, 3))
        return out

    cots, coss = mesh._corner_cotangents()
    el = mesh._edge_lengths()
    obtuse = coss < _OBTUSE_COS
    any_obtuse = obtuse.any(axis=1)

    # Voronoi share of a nonobtuse triangle at corner c: for each of the two
    # edges meeting at c, (edge length)^2 times the cotangent at the vertex
    # opposite that edge, all over 8. Column d of el/cots belongs to the edge
    # opposite corner d, so the share sums the d != c columns.
    for c in range(3):
        nxt, prv = (c + 1) % 3, (c + 2) % 3
        voronoi = (el[:, nxt] ** 2 * cots[:, nxt] + el[:, prv] ** 2 * cots[:, prv]) / 8.0
        share = np.where(
            any_obtuse,
            np.where(obtuse[:, c], areas / 2.0, areas / 4.0),
            voronoi,
        )
        np.add.at(out, f[:, c], share)
    return out


def assemble_lb_operator(mesh, area_scheme="mixed"):
    """Bundle the cotan stiffness matrix with vertex areas."""
    return LBOperator(cotan_matrix(mesh), vertex_areas(mesh, scheme=area_scheme))


def apply_lb(op, f):
    """Apply the operator: A^-1 (C f)."""
    f = np.asarray(f, dtype=float)
    if f.shape != (op.n_vertices,):
        raise ValueError(
            f"field length {f.shape} does not match operator size {op.n_vertices}"
        )
    return op.C.dot(f) / op.A


def export_operator(op, path_c, path_a):
    """Write C in Matrix Market coordinate (real symmetric) form and A as CSV.

    Entries carry 17 significant digits so a read-back reproduces the floats
    exactly.
    """
    coo = sparse.tril(op.C).tocoo()
    with open(path_c, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write(f"{op.C.shape[0]} {op.C.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i + 1} {j + 1} {v:.16e}\n")
    with open(path_a, "w") as fh:
        for v in op.A:
            fh.write(f"{v:.16e}\n")


def _tokens(fh):
    """Yield (line_number, token_list) for non-blank, non-comment lines."""
    for lineno, raw in enumerate(fh, start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _parse_off(fh, path):
    stream = _tokens(fh)
    try:
        lineno, tok = next(stream)
    except StopIteration:
        raise ValueError(f"{path}: empty OFF file") from None
    if tok[0].upper() != "OFF":
        raise ValueError(f"{path}:{lineno}: expected OFF header, got {tok[0]!r}")
    if len(tok) >= 4:
        counts = tok[1:4]
    else:
        lineno, counts = next(stream)
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except (ValueError, IndexError):
        raise ValueError(f"{path}:{lineno}: malformed OFF count line") from None
    verts = np.empty((nv, 3))
    for i in range(nv):
        lineno, tok = next(stream)
        try:
            verts[i] = [float(t) for t in tok[:3]]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad vertex line") from None
    faces = np.empty((nf, 3), dtype=np.int64)
    for i in range(nf):
        lineno, tok = next(stream)
        try:
            cnt = int(tok[0])
            idx = [int(t) for t in tok[1 : 1 + cnt]]
        except (ValueError, IndexError):
            raise ValueError(f"{path}:{lineno}: bad face line") from None
        if cnt != 3 or len(idx) != 3:
            raise ValueError(f"{path}:{lineno}: only triangular faces supported")
        faces[i] = idx
    return verts, faces


def _parse_ply(fh, path):
    lineno = 0

    def nextline():
        nonlocal lineno
        for raw in fh:
            lineno += 1
            line = raw.strip()
            if line and not line.startswith("comment"):
                return line
        raise ValueError(f"{path}: truncated PLY file at line {lineno}")

    if nextline() != "ply":
        raise ValueError(f"{path}:{lineno}: missing 'ply' magic line")
    fmt = nextline()
    if not fmt.startswith("format ascii"):
        raise ValueError(f"{path}:{lineno}: only ascii PLY supported, got {fmt!r}")
    elements = []  # (name, count, [property names]) in declaration order
    while True:
        line = nextline()
        if line == "end_header":
            break
        tok = line.split()
        if tok[0] == "element":
            elements.append((tok[1], int(tok[2]), []))
        elif tok[0] == "property":
            if not elements:
                raise ValueError(f"{path}:{lineno}: property before element")
            elements[-1][2].append(tok[-1])
    verts = None
    faces = None
    for name, count, props in elements:
        if name == "vertex":
            try:
                ix, iy, iz = props.index("x"), props.index("y"), props.index("z")
            except ValueError:
                raise ValueError(f"{path}: vertex element lacks x/y/z") from None
            verts = np.empty((count, 3))
            for i in range(count):
                tok = nextline().split()
                try:
                    verts[i] = float(tok[ix]), float(tok[iy]), float(tok[iz])
                except (ValueError, IndexError):
                    raise ValueError(f"{path}:{lineno}: bad vertex line") from None
        elif name == "face":
            faces = np.empty((count, 3), dtype=np.int64)
            for i in range(count):
                tok = nextline().split()
                try:
                    cnt = int(tok[0])
                    idx = [int(t) for t in tok[1 : 1 + cnt]]
                except (ValueError, IndexError):
                    raise ValueError(f"{path}:{lineno}: bad face line") from None
                if cnt != 3:
                    raise ValueError(
                        f"{path}:{lineno}: only triangular faces supported"
                    )
                faces[i] = idx
        else:
            for _ in range(count):
                nextline()
    if verts is None or faces is None:
        raise ValueError(f"{path}: PLY file lacks vertex or face element")
    return verts, faces


def load_mesh(path, format=None):
    """Load an OFF or ascii-PLY triangle mesh.

    The format is inferred from the file extension unless given explicitly
    as "off" or "ply". Vertex and face order are preserved. Degenerate faces
    produce a warning; isolated vertices are rejected.
    """
    if format is None:
        lower = str(path).lower()
        if lower.endswith(".off"):
            format = "off"
        elif lower.endswith(".ply"):
            format = "ply"
        else:
            raise ValueError(f"cannot infer mesh format from {path!r}")
    if format not in ("off", "ply"):
        raise ValueError(f"unsupported mesh format {format!r}")
    with open(path) as fh:
        if format == "off":
            verts, faces = _parse_off(fh, path)
        else:
            verts, faces = _parse_ply(fh, path)
    mesh = TriangleMesh(verts, faces)
    if len(mesh.degenerate_faces):
        warnings.warn(
            f"{path}: degenerate faces {mesh.degenerate_faces.tolist()}",
            RuntimeWarning,
            stacklevel=2,
        )
    return mesh


def save_off(mesh, path):
    """Write a mesh as OFF (17 significant digits, order preserved)."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{x:.16e} {y:.16e} {z:.16e}\n")
        for a, b, c in mesh.faces:
            fh.write(f"3 {a} {b} {c}\n")
