"""Conforming triangulations with oriented edges and newest-vertex bisection.

The mesh keeps, for every edge ``F``, a globally fixed unit normal ``n_F``
with tangent ``t_F = rot90(n_F)`` and endpoints ordered so that
``e_F - s_F = h_F * t_F``.  The element whose outward normal on ``F`` equals
``n_F`` is ``K-`` (first adjacency slot); the other, if any, is ``K+``.
Interior normals point from the lower to the higher element id at edge
creation and are inherited verbatim by any refinement that keeps the edge,
so they never flip under refinement of other elements.

Meshes are immutable after construction: all queries are read-only and safe
for concurrent use; :func:`refine` returns a new mesh.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "INTERIOR",
    "DIRICHLET",
    "NEUMANN",
    "Mesh",
    "MeshError",
    "EdgePatch",
    "build_mesh",
    "edge_patch",
    "refine",
    "initial_kellogg_mesh",
    "unit_square_mesh",
    "write_mesh_text",
    "read_mesh_text",
]

INTERIOR = 0
DIRICHLET = 1
NEUMANN = 2

_LABEL_CHAR = {DIRICHLET: "D", NEUMANN: "N"}
_CHAR_LABEL = {"D": DIRICHLET, "N": NEUMANN}


class MeshError(ValueError):
    """Raised for invalid mesh input (non-manifold, degenerate, unlabeled)."""


def _rot90(v):
    """Rotate vectors by +90 degrees: (x, y) -> (-y, x)."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


class Mesh:
    """Oriented conforming triangulation.

    Attributes
    ----------
    vertices : (nv, 2) float
    triangles : (nt, 3) int, counterclockwise
    tri_region : (nt,) int coefficient-region ids (children inherit them)
    refinement_edge : (nt,) int local index of each triangle's bisection edge
    edges : (ne, 2) int endpoint ids ``(s_F, e_F)``
    edge_label : (ne,) int, one of INTERIOR / DIRICHLET / NEUMANN
    edge_tris : (ne, 2) int ``[K-, K+]`` with ``K+ = -1`` on the boundary
    edge_slot : (ne, 2) int local slot of the edge inside ``K-`` / ``K+``
    edge_loc_s, edge_loc_e : (ne, 2) int local vertex index of ``s_F`` /
        ``e_F`` inside ``K-`` / ``K+`` (-1 where there is no ``K+``)
    edge_normal, edge_tangent : (ne, 2) float
    edge_length : (ne,) float
    tri_edges : (nt, 3) int edge id opposite each local vertex
    tri_edge_sign : (nt, 3) int, +1 where the triangle is ``K-``
    tri_area, tri_diam : (nt,) float
    grad_lambda : (nt, 3, 2) float gradients of the barycentric coordinates
    vertex_label : (nv,) int vertex classification (Dirichlet wins at corners)
    """

    def __init__(
        self,
        vertices,
        triangles,
        tri_region,
        refinement_edge,
        label_of_key,
        orient_table=None,
    ):
        vertices = np.ascontiguousarray(vertices, dtype=float)
        triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError("vertices must be an (nv, 2) array")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise MeshError("triangles must be an (nt, 3) array")
        nv, nt = len(vertices), len(triangles)
        if triangles.min(initial=0) < 0 or triangles.max(initial=-1) >= nv:
            raise MeshError("triangle references an unknown vertex")

        self.vertices = vertices
        self.triangles = triangles
        self.tri_region = np.ascontiguousarray(tri_region, dtype=np.int64)
        self.refinement_edge = np.ascontiguousarray(refinement_edge, dtype=np.int64)

        coords = vertices[triangles]  # (nt, 3, 2)
        d1 = coords[:, 1] - coords[:, 0]
        d2 = coords[:, 2] - coords[:, 0]
        area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        if np.any(area2 <= 0.0):
            bad = int(np.argmax(area2 <= 0.0))
            raise MeshError(f"triangle {bad} is degenerate or not counterclockwise")
        self.tri_area = 0.5 * area2

        # edge vectors e_l = x_{l+2} - x_{l+1} (opposite local vertex l)
        evec = coords[:, [2, 0, 1]] - coords[:, [1, 2, 0]]
        elen = np.linalg.norm(evec, axis=2)
        self.tri_diam = elen.max(axis=1)
        self.grad_lambda = _rot90(evec) / area2[:, None, None]

        # deduplicate edges
        pair = np.stack(
            [triangles[:, [1, 2, 0]].ravel(), triangles[:, [2, 0, 1]].ravel()], axis=1
        )
        keys = np.minimum(pair[:, 0], pair[:, 1]) * np.int64(nv) + np.maximum(
            pair[:, 0], pair[:, 1]
        )
        ukeys, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
        if counts.max(initial=0) > 2:
            raise MeshError("non-manifold edge (more than two adjacent triangles)")
        ne = len(ukeys)
        self.tri_edges = inverse.reshape(nt, 3)

        incident_tri = np.repeat(np.arange(nt, dtype=np.int64), 3)
        incident_slot = np.tile(np.arange(3, dtype=np.int64), nt)
        order = np.argsort(inverse, kind="stable")
        first = np.searchsorted(inverse[order], np.arange(ne))
        adj = np.full((ne, 2), -1, dtype=np.int64)
        slot = np.full((ne, 2), -1, dtype=np.int64)
        adj[:, 0] = incident_tri[order][first]
        slot[:, 0] = incident_slot[order][first]
        two = counts == 2
        adj[two, 1] = incident_tri[order][first[two] + 1]
        slot[two, 1] = incident_slot[order][first[two] + 1]

        sa = ukeys // nv
        sb = ukeys % nv
        boundary = ~two

        # labels: either a callable on vertex-id pairs or a vectorized
        # (sorted_keys, labels) table keyed like ukeys
        label = np.zeros(ne, dtype=np.int64)
        bidx = np.flatnonzero(boundary)
        if isinstance(label_of_key, tuple):
            lkeys, lvals = label_of_key
            if len(lkeys):
                pos = np.minimum(np.searchsorted(lkeys, ukeys[bidx]), len(lkeys) - 1)
                found = lkeys[pos] == ukeys[bidx]
            else:
                found = np.zeros(len(bidx), dtype=bool)
            if not found.all():
                miss = bidx[np.flatnonzero(~found)[0]]
                raise MeshError(
                    f"boundary edge ({sa[miss]}, {sb[miss]}) has no D/N label"
                )
            label[bidx] = lvals[pos]
        else:
            for e in bidx:
                lab = label_of_key(int(sa[e]), int(sb[e]))
                if lab not in (DIRICHLET, NEUMANN):
                    raise MeshError(
                        f"boundary edge ({sa[e]}, {sb[e]}) has no D/N label"
                    )
                label[e] = lab
        if not np.any(label == DIRICHLET):
            raise MeshError("the Dirichlet boundary set must be nonempty")

        # orientation: inherited (s, e) pairs win, otherwise lower-id rule
        s_ids = sa.copy()
        e_ids = sb.copy()
        inherited = np.zeros(ne, dtype=bool)
        if orient_table is not None and len(orient_table[0]):
            okeys, os_, oe_ = orient_table
            pos = np.minimum(np.searchsorted(okeys, ukeys), len(okeys) - 1)
            found = okeys[pos] == ukeys
            s_ids[found] = os_[pos[found]]
            e_ids[found] = oe_[pos[found]]
            inherited = found

        # outward normal of the first-listed adjacent triangle
        mid = 0.5 * (vertices[sa] + vertices[sb])
        opp0 = triangles[adj[:, 0], slot[:, 0]]
        raw = vertices[sb] - vertices[sa]
        nrm = _rot90(raw)
        nrm /= np.linalg.norm(nrm, axis=1)[:, None]
        flip = ((mid - vertices[opp0]) * nrm).sum(axis=1) < 0.0
        nrm[flip] = -nrm[flip]  # now outward for adj[:, 0]

        # choose K- and final normal per edge
        kminus = adj[:, 0].copy()
        kplus = adj[:, 1].copy()
        n_final = nrm.copy()
        if two.any():
            swap = two & (adj[:, 1] < adj[:, 0])
            kminus[swap], kplus[swap] = adj[swap, 1], adj[swap, 0]
            n_final[swap] = -n_final[swap]
        if inherited.any():
            idx = np.flatnonzero(inherited)
            t_inh = vertices[e_ids[idx]] - vertices[s_ids[idx]]
            t_inh /= np.linalg.norm(t_inh, axis=1)[:, None]
            n_inh = np.stack([t_inh[:, 1], -t_inh[:, 0]], axis=1)
            # K- is the adjacent triangle whose outward normal matches n_inh
            agree0 = (n_inh * nrm[idx]).sum(axis=1) > 0.0
            kminus[idx] = np.where(agree0, adj[idx, 0], adj[idx, 1])
            kplus[idx] = np.where(agree0, adj[idx, 1], adj[idx, 0])
            n_final[idx] = n_inh
            if np.any(kminus[idx] < 0):
                raise MeshError("inherited edge normal points out of the domain")

        tangent = _rot90(n_final)
        along = ((vertices[e_ids] - vertices[s_ids]) * tangent).sum(axis=1)
        swap_se = along < 0.0
        s_ids[swap_se], e_ids[swap_se] = e_ids[swap_se], s_ids[swap_se]

        self.edges = np.stack([s_ids, e_ids], axis=1)
        self.edge_label = label
        self.edge_normal = n_final
        self.edge_tangent = tangent
        self.edge_length = np.linalg.norm(
            vertices[e_ids] - vertices[s_ids], axis=1
        )
        self.edge_tris = np.stack([kminus, kplus], axis=1)

        # per-side local indices
        eslot = np.full((ne, 2), -1, dtype=np.int64)
        loc_s = np.full((ne, 2), -1, dtype=np.int64)
        loc_e = np.full((ne, 2), -1, dtype=np.int64)
        for side in (0, 1):
            has = self.edge_tris[:, side] >= 0
            tri = self.edge_tris[has, side]
            tv = triangles[tri]  # (m, 3)
            for l in range(3):
                hit = self.tri_edges[tri, l] == np.flatnonzero(has)
                eslot[np.flatnonzero(has)[hit], side] = l
            for l in range(3):
                loc_s[np.flatnonzero(has)[tv[:, l] == s_ids[has]], side] = l
                loc_e[np.flatnonzero(has)[tv[:, l] == e_ids[has]], side] = l
        self.edge_slot = eslot
        self.edge_loc_s = loc_s
        self.edge_loc_e = loc_e

        sign = np.where(
            self.edge_tris[self.tri_edges, 0] == np.arange(nt)[:, None], 1, -1
        )
        self.tri_edge_sign = sign.astype(np.int64)

        vlabel = np.zeros(nv, dtype=np.int64)
        neu = self.edges[label == NEUMANN]
        vlabel[neu.ravel()] = NEUMANN
        dir_ = self.edges[label == DIRICHLET]
        vlabel[dir_.ravel()] = DIRICHLET
        self.vertex_label = vlabel

        self._check_orientation_invariant()

    # -- basic sizes ----------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    # -- index sets ------------------------------------------------------

    @property
    def interior_edges(self):
        return np.flatnonzero(self.edge_label == INTERIOR)

    @property
    def dirichlet_edges(self):
        return np.flatnonzero(self.edge_label == DIRICHLET)

    @property
    def neumann_edges(self):
        return np.flatnonzero(self.edge_label == NEUMANN)

    @property
    def interior_vertices(self):
        return np.flatnonzero(self.vertex_label == INTERIOR)

    @property
    def dirichlet_vertices(self):
        return np.flatnonzero(self.vertex_label == DIRICHLET)

    @property
    def neumann_vertices(self):
        return np.flatnonzero(self.vertex_label == NEUMANN)

    # -- geometry helpers -------------------------------------------------

    def tri_coords(self):
        """(nt, 3, 2) vertex coordinates per triangle."""
        return self.vertices[self.triangles]

    def tri_edge_midpoints(self):
        """(nt, 3, 2) midpoint of the edge opposite each local vertex."""
        c = self.tri_coords()
        return 0.5 * (c[:, [1, 2, 0]] + c[:, [2, 0, 1]])

    def edge_midpoints(self):
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    def tri_barycenters(self):
        return self.tri_coords().mean(axis=1)

    def min_angle(self) -> float:
        """Smallest interior angle over all triangles (radians)."""
        c = self.tri_coords()
        angles = []
        for l in range(3):
            u = c[:, (l + 1) % 3] - c[:, l]
            v = c[:, (l + 2) % 3] - c[:, l]
            cosv = (u * v).sum(axis=1) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
            )
            angles.append(np.arccos(np.clip(cosv, -1.0, 1.0)))
        return float(np.min(angles))

    def __repr__(self):
        return (
            f"Mesh({self.n_vertices} vertices, {self.n_triangles} triangles, "
            f"{self.n_edges} edges)"
        )

    def _check_orientation_invariant(self):
        """Outward normal of K- must equal n_F on every edge (to 1e-13)."""
        km = self.edge_tris[:, 0]
        opp = self.triangles[km, self.edge_slot[:, 0]]
        mid = self.edge_midpoints()
        out = ((mid - self.vertices[opp]) * self.edge_normal).sum(axis=1)
        evec = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        tangential = np.abs((evec * self.edge_normal).sum(axis=1))
        unit = np.abs((self.edge_normal**2).sum(axis=1) - 1.0)
        if (
            np.any(out <= 0.0)
            or np.any(tangential > 1e-13 * self.edge_length)
            or np.any(unit > 1e-13)
        ):
            raise MeshError("edge normal does not match the outward normal of K-")


class EdgePatch:
    """The one- or two-element patch of an edge.

    ``elements`` lists ``K-`` (and ``K+`` for interior edges);
    ``boundary_edges`` are the patch-boundary edges, excluding the edge
    itself, in slot order per element.
    """

    def __init__(self, edge: int, elements, boundary_edges):
        self.edge = int(edge)
        self.elements = tuple(int(t) for t in elements)
        self.boundary_edges = tuple(int(e) for e in boundary_edges)

    def __repr__(self):
        return (
            f"EdgePatch(edge={self.edge}, elements={self.elements}, "
            f"boundary_edges={self.boundary_edges})"
        )


def edge_patch(mesh: Mesh, F: int) -> EdgePatch:
    """Patch data of edge ``F``: adjacent elements and surrounding edges."""
    if not 0 <= F < mesh.n_edges:
        raise MeshError(f"edge id {F} out of range")
    elements = [t for t in mesh.edge_tris[F] if t >= 0]
    boundary = [
        int(e)
        for t in elements
        for e in mesh.tri_edges[t]
        if e != F
    ]
    return EdgePatch(F, elements, boundary)


def build_mesh(vertices, triangles, boundary_labeler=None, regions=None) -> Mesh:
    """Build a mesh from raw vertex/triangle arrays.

    Triangles may come in either orientation; they are flipped to
    counterclockwise.  ``boundary_labeler(pa, pb)`` receives the endpoint
    coordinates of a boundary edge and must return ``'D'`` or ``'N'``
    (default: everything Dirichlet).  ``regions`` assigns per-triangle
    coefficient-region ids (default all zero).  The initial bisection edge
    of each triangle is its longest edge.
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64).copy()
    if triangles.ndim != 2 or triangles.shape[1] != 3:
        raise MeshError("triangles must be an (nt, 3) array")

    coords = vertices[triangles]
    d1 = coords[:, 1] - coords[:, 0]
    d2 = coords[:, 2] - coords[:, 0]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(area2 == 0.0):
        raise MeshError(f"triangle {int(np.argmax(area2 == 0.0))} has zero area")
    flip = area2 < 0.0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    coords = vertices[triangles]
    evec = coords[:, [2, 0, 1]] - coords[:, [1, 2, 0]]
    elen = np.linalg.norm(evec, axis=2)
    ref_local = elen.argmax(axis=1)

    if regions is None:
        regions = np.zeros(len(triangles), dtype=np.int64)

    def label_of_key(a: int, b: int) -> int:
        if boundary_labeler is None:
            return DIRICHLET
        lab = boundary_labeler(vertices[a], vertices[b])
        if lab in (DIRICHLET, NEUMANN):
            return lab
        return _CHAR_LABEL.get(lab, -1)

    return Mesh(vertices, triangles, regions, ref_local, label_of_key)


def _encode(a, b, base):
    return np.minimum(a, b) * np.int64(base) + np.maximum(a, b)


def refine(mesh: Mesh, marked_elements) -> Mesh:
    """Newest-vertex bisection of the marked elements with conforming closure.

    Every marked element is bisected at least once; hanging nodes are
    removed by recursively bisecting neighbours.  Boundary labels, edge
    orientations of surviving edges, and coefficient regions are inherited.
    Returns ``mesh`` itself when nothing is marked.
    """
    marked = np.unique(np.asarray(marked_elements, dtype=np.int64))
    if marked.size == 0:
        return mesh
    if marked.min() < 0 or marked.max() >= mesh.n_triangles:
        raise MeshError("marked element id out of range")

    nt, ne, nv = mesh.n_triangles, mesh.n_edges, mesh.n_vertices
    ref_edge_ids = mesh.tri_edges[np.arange(nt), mesh.refinement_edge]

    cut = np.zeros(ne, dtype=bool)
    cut[ref_edge_ids[marked]] = True
    for _ in range(nt + 1):
        need = cut[mesh.tri_edges].any(axis=1) & ~cut[ref_edge_ids]
        if not need.any():
            break
        cut[ref_edge_ids[need]] = True
    else:  # pragma: no cover - closure always terminates
        raise MeshError("refinement closure did not terminate")

    cut_ids = np.flatnonzero(cut)
    mid_of_cut = nv + np.arange(len(cut_ids), dtype=np.int64)
    midpoints = mesh.edge_midpoints()[cut_ids]
    new_vertices = np.vstack([mesh.vertices, midpoints])
    nv_new = len(new_vertices)

    cut_keys = _encode(mesh.edges[cut_ids, 0], mesh.edges[cut_ids, 1], nv_new)
    key_order = np.argsort(cut_keys)
    cut_keys_sorted = cut_keys[key_order]
    mid_sorted = mid_of_cut[key_order]

    # label inheritance: surviving boundary edges and halves of cut ones
    bnd = np.flatnonzero(mesh.edge_label != INTERIOR)
    bkeep = bnd[~cut[bnd]]
    bcut = bnd[cut[bnd]]
    mid_b = mid_of_cut[np.searchsorted(cut_ids, bcut)]
    lkeys = np.concatenate(
        [
            _encode(mesh.edges[bkeep, 0], mesh.edges[bkeep, 1], nv_new),
            _encode(mesh.edges[bcut, 0], mid_b, nv_new),
            _encode(mesh.edges[bcut, 1], mid_b, nv_new),
        ]
    )
    lvals = np.concatenate(
        [mesh.edge_label[bkeep], mesh.edge_label[bcut], mesh.edge_label[bcut]]
    )
    lorder = np.argsort(lkeys)
    label_table = (lkeys[lorder], lvals[lorder])

    keep_edges = np.flatnonzero(~cut)
    okeys = _encode(mesh.edges[keep_edges, 0], mesh.edges[keep_edges, 1], nv_new)
    oorder = np.argsort(okeys)
    orient_table = (
        okeys[oorder],
        mesh.edges[keep_edges, 0][oorder],
        mesh.edges[keep_edges, 1][oorder],
    )

    verts = mesh.triangles
    region = mesh.tri_region
    ref = mesh.refinement_edge
    for _ in range(4):
        rows = np.arange(len(verts))
        i1 = (ref + 1) % 3
        i2 = (ref + 2) % 3
        b = verts[rows, i1]
        c = verts[rows, i2]
        keys = _encode(b, c, nv_new)
        pos = np.minimum(
            np.searchsorted(cut_keys_sorted, keys), len(cut_keys_sorted) - 1
        )
        split = cut_keys_sorted[pos] == keys
        if not split.any():
            break
        m = mid_sorted[pos]
        p = verts[rows, ref]

        counts = 1 + split.astype(np.int64)
        starts = np.concatenate([[0], np.cumsum(counts)])[:-1]
        out_n = int(counts.sum())
        new_verts = np.empty((out_n, 3), dtype=np.int64)
        new_region = np.empty(out_n, dtype=np.int64)
        new_ref = np.empty(out_n, dtype=np.int64)

        keep = ~split
        new_verts[starts[keep]] = verts[keep]
        new_region[starts[keep]] = region[keep]
        new_ref[starts[keep]] = ref[keep]

        sp = np.flatnonzero(split)
        child1 = np.stack([p[sp], b[sp], m[sp]], axis=1)
        child2 = np.stack([p[sp], m[sp], c[sp]], axis=1)
        new_verts[starts[sp]] = child1
        new_verts[starts[sp] + 1] = child2
        new_region[starts[sp]] = region[sp]
        new_region[starts[sp] + 1] = region[sp]
        new_ref[starts[sp]] = 2
        new_ref[starts[sp] + 1] = 1

        verts, region, ref = new_verts, new_region, new_ref
    else:  # pragma: no cover - at most three bisection passes are possible
        raise MeshError("bisection pass limit exceeded")

    return Mesh(new_vertices, verts, region, ref, label_table, orient_table)


def _structured_square(n, lo, hi):
    """Criss-cross-free n x n grid of the square [lo, hi]^2, diagonals SW-NE."""
    xs = np.linspace(lo, hi, n + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append([v00, v10, v11])
            tris.append([v00, v11, v01])
    return vertices, np.array(tris, dtype=np.int64)


def initial_kellogg_mesh(n: int) -> Mesh:
    """Uniform n x n mesh of (-1, 1)^2 with the axes as mesh lines.

    Each cell is split along its SW-NE diagonal; the per-triangle region id
    is the quadrant code ``(x > 0) + 2 * (y > 0)`` of the barycenter, so the
    four coefficient regions of the checkerboard benchmark are resolved
    exactly.  ``n`` must be even (odd n would put cells across the axes).
    All boundary edges are Dirichlet.
    """
    if n < 2 or n % 2 != 0:
        raise MeshError("n must be an even integer >= 2")
    vertices, tris = _structured_square(n, -1.0, 1.0)
    bary = vertices[tris].mean(axis=1)
    regions = (bary[:, 0] > 0).astype(np.int64) + 2 * (bary[:, 1] > 0)
    return build_mesh(vertices, tris, regions=regions)


def unit_square_mesh(n: int, boundary_labeler=None) -> Mesh:
    """Uniform n x n mesh of the unit square (0, 1)^2."""
    if n < 1:
        raise MeshError("n must be a positive integer")
    vertices, tris = _structured_square(n, 0.0, 1.0)
    return build_mesh(vertices, tris, boundary_labeler=boundary_labeler)


def write_mesh_text(mesh: Mesh, path) -> None:
    """Write the plain-text mesh format.

    Line 1 holds ``V T E`` (vertex, triangle, and boundary-edge record
    counts), followed by ``V`` lines ``x y``, ``T`` lines
    ``v0 v1 v2 region_id`` and ``E`` lines ``va vb label`` with label D or N.
    """
    bnd = np.flatnonzero(mesh.edge_label != INTERIOR)
    lines = [f"{mesh.n_vertices} {mesh.n_triangles} {len(bnd)}"]
    for x, y in mesh.vertices:
        lines.append(f"{x:.17g} {y:.17g}")
    for t in range(mesh.n_triangles):
        v = mesh.triangles[t]
        lines.append(f"{v[0]} {v[1]} {v[2]} {mesh.tri_region[t]}")
    for e in bnd:
        s, t = mesh.edges[e]
        lines.append(f"{s} {t} {_LABEL_CHAR[int(mesh.edge_label[e])]}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh_text(path) -> Mesh:
    """Read the plain-text mesh format written by :func:`write_mesh_text`."""
    with open(path) as fh:
        tokens = fh.read().split()
    it = iter(tokens)
    try:
        nv, nt, nb = int(next(it)), int(next(it)), int(next(it))
        vertices = np.array(
            [[float(next(it)), float(next(it))] for _ in range(nv)]
        )
        tris = np.empty((nt, 3), dtype=np.int64)
        regions = np.empty(nt, dtype=np.int64)
        for t in range(nt):
            tris[t] = [int(next(it)), int(next(it)), int(next(it))]
            regions[t] = int(next(it))
        labels = {}
        for _ in range(nb):
            a, b = int(next(it)), int(next(it))
            lab = next(it)
            if lab not in _CHAR_LABEL:
                raise MeshError(f"unknown boundary label {lab!r}")
            labels[(min(a, b), max(a, b))] = _CHAR_LABEL[lab]
    except StopIteration:
        raise MeshError("truncated mesh file") from None
    except ValueError as exc:
        raise MeshError(f"malformed mesh file: {exc}") from None

    # vertex ids are preserved, so labels resolve directly by id pair
    tris = tris.copy()
    coords = vertices[tris]
    d1 = coords[:, 1] - coords[:, 0]
    d2 = coords[:, 2] - coords[:, 0]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(area2 == 0.0):
        raise MeshError("mesh file contains a zero-area triangle")
    flip = area2 < 0.0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    coords = vertices[tris]
    evec = coords[:, [2, 0, 1]] - coords[:, [1, 2, 0]]
    ref_local = np.linalg.norm(evec, axis=2).argmax(axis=1)

    def label_of_key(a: int, b: int) -> int:
        key = (min(a, b), max(a, b))
        if key not in labels:
            raise MeshError("boundary edge with no label in mesh file")
        return labels[key]

    return Mesh(vertices, tris, regions, ref_local, label_of_key)
