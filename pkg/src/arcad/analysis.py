"""Attainable force/moment sets, their derived metrics, and step-response metrics.

The image of the rotor thrust box under the allocation matrix is a zonotope,
so its facets come straight from pairs of generators. Vertices are labelled
by the thrust-box corner (sign vector) that produces them.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull

MAX_ROTORS = 16


class PolytopeSizeError(ValueError):
    pass


class PolytopeDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Polytope:
    """Bounded convex set in R^3 with both vertex and halfspace descriptions.

    Halfspaces read ``normals @ x <= offsets`` with unit normals. For
    degenerate sets (affine_dimension < 3) the halfspaces include opposing
    pairs pinning the set to its affine hull and `faces` is empty.
    """
    vertices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    affine_dimension: int
    faces: tuple = ()  # vertex-index loops, counter-clockwise seen from outside

    def contains(self, points, tol=1e-9):
        points = np.atleast_2d(points)
        return np.all(points @ self.normals.T - self.offsets <= tol, axis=1)

    def volume(self):
        if self.affine_dimension < 3:
            return 0.0
        total = 0.0
        for face, n, b in zip(self.faces, self.normals, self.offsets):
            total += b * _polygon_area_3d(self.vertices[list(face)], n)
        return total / 3.0

    def affine(self, scale, translation):
        """Image under x -> scale * x + translation (scale > 0)."""
        t = np.asarray(translation, dtype=float)
        return Polytope(self.vertices * scale + t, self.normals.copy(),
                        self.offsets * scale + self.normals @ t,
                        self.affine_dimension, self.faces)

    def triangles(self):
        tris = []
        for face in self.faces:
            for k in range(1, len(face) - 1):
                tris.append((face[0], face[k], face[k + 1]))
        return tris

    @classmethod
    def from_points(cls, points, tol=1e-9):
        """Convex hull of an arbitrary point cloud."""
        points = np.asarray(points, dtype=float)
        center = points.mean(axis=0)
        _, s, vt = np.linalg.svd(points - center)
        scale = max(s[0], 1.0) if s.size else 1.0
        dim = int(np.sum(s > tol * scale)) if s.size else 0

        if dim == 0:
            return _point_polytope(center)
        if dim == 1:
            d = vt[0]
            proj = (points - center) @ d
            return _segment_polytope(points[np.argmin(proj)], points[np.argmax(proj)])
        if dim == 2:
            e1, e2 = vt[0], vt[1]
            pts2 = (points - center) @ np.column_stack([e1, e2])
            hull = _hull_2d(pts2)
            return _polygon_polytope(points[hull], np.cross(e1, e2))
        return _hull_3d(points, tol)

    def to_off(self):
        """OFF mesh text: vertices plus triangulated facets."""
        tris = self.triangles()
        lines = ["OFF", f"{len(self.vertices)} {len(tris)} 0"]
        lines += [" ".join(repr(float(c)) for c in v) for v in self.vertices]
        lines += [f"3 {a} {b} {c}" for a, b, c in tris]
        return "\n".join(lines) + "\n"


def _polygon_area_3d(loop, normal):
    area = np.zeros(3)
    for k in range(len(loop)):
        area += np.cross(loop[k], loop[(k + 1) % len(loop)])
    return 0.5 * float(np.dot(area, normal))


def _orthonormal_complement(n):
    n = n / np.linalg.norm(n)
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def _point_polytope(p):
    eye = np.eye(3)
    normals = np.vstack([eye, -eye])
    return Polytope(p[None, :].copy(), normals, normals @ p, 0)


def _segment_polytope(a, b):
    d = (b - a) / np.linalg.norm(b - a)
    u, v = _orthonormal_complement(d)
    normals = np.array([d, -d, u, -u, v, -v])
    offsets = np.array([d @ b, -d @ a, u @ a, -u @ a, v @ a, -v @ a])
    return Polytope(np.array([a, b]), normals, offsets, 1)


def _polygon_polytope(loop, normal):
    """`loop` is ordered counter-clockwise about `normal`."""
    normal = normal / np.linalg.norm(normal)
    normals, offsets = [normal, -normal], [normal @ loop[0], -normal @ loop[0]]
    for k in range(len(loop)):
        a, b = loop[k], loop[(k + 1) % len(loop)]
        out = np.cross(b - a, normal)
        out /= np.linalg.norm(out)
        normals.append(out)
        offsets.append(out @ a)
    return Polytope(np.asarray(loop), np.array(normals), np.array(offsets), 2)


def _hull_2d(pts):
    """Monotone-chain hull; indices counter-clockwise, collinear points dropped."""
    order = sorted(range(len(pts)), key=lambda i: (pts[i][0], pts[i][1]))
    if len(order) < 3:
        return order

    def cross(o, a, b):
        return ((pts[a][0] - pts[o][0]) * (pts[b][1] - pts[o][1])
                - (pts[a][1] - pts[o][1]) * (pts[b][0] - pts[o][0]))

    span = float(np.ptp(pts, axis=0).max()) or 1.0
    eps = 1e-12 * span * span
    lower, upper = [], []
    for i in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= eps:
            lower.pop()
        lower.append(i)
    for i in reversed(order):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= eps:
            upper.pop()
        upper.append(i)
    return lower[:-1] + upper[:-1]


def _hull_3d(points, tol):
    hull = ConvexHull(points)
    used = np.unique(hull.simplices)
    remap = -np.ones(len(points), dtype=int)
    remap[used] = np.arange(len(used))
    verts = points[used]

    # merge coplanar triangles into facets
    normals, offsets, members = [], [], []
    scale = max(1.0, float(np.abs(points).max()))
    for eq, simplex in zip(hull.equations, hull.simplices):
        n, b = eq[:3], -eq[3]
        for k, (m, c) in enumerate(zip(normals, offsets)):
            if np.dot(m, n) > 1 - 1e-9 and abs(c - b) < tol * scale:
                members[k].update(remap[simplex])
                break
        else:
            normals.append(n)
            offsets.append(b)
            members.append(set(remap[simplex]))

    faces = []
    for n, idx in zip(normals, members):
        idx = sorted(idx)
        e1, e2 = _orthonormal_complement(n)
        local = verts[idx] @ np.column_stack([e1, e2])
        faces.append(tuple(idx[i] for i in _hull_2d(local)))
    keep = np.unique(np.concatenate([np.asarray(f) for f in faces]))
    if len(keep) != len(verts):
        # drop points that are on facets but not corners
        remap2 = -np.ones(len(verts), dtype=int)
        remap2[keep] = np.arange(len(keep))
        verts = verts[keep]
        faces = [tuple(int(remap2[i]) for i in f) for f in faces]
    return Polytope(verts, np.array(normals), np.array(offsets), 3, tuple(faces))


def _zonogon_signs(g2):
    """Sign vectors of the vertices of the 2-D zonogon sum([-g, g]), in CCW order."""
    angles = np.arctan2(g2[:, 1], g2[:, 0])
    normal_angles = np.concatenate([angles + np.pi / 2, angles - np.pi / 2]) % (2 * np.pi)
    normal_angles = np.sort(normal_angles)
    keep = np.concatenate([[True], np.diff(normal_angles) > 1e-12])
    normal_angles = normal_angles[keep]
    if len(normal_angles) > 1 and (normal_angles[0] + 2 * np.pi - normal_angles[-1]) < 1e-12:
        normal_angles = normal_angles[:-1]
    nxt = np.roll(normal_angles, -1)
    nxt[-1] += 2 * np.pi
    mid = 0.5 * (normal_angles + nxt)
    dirs = np.column_stack([np.cos(mid), np.sin(mid)])
    return np.where(dirs @ g2.T >= 0, 1.0, -1.0)


def zonotope(center, generators, tol=1e-9):
    """Polytope of ``center + sum_k s_k * generators[:, k]`` over s in [-1, 1]^m."""
    c = np.asarray(center, dtype=float)
    H = np.asarray(generators, dtype=float).reshape(3, -1)
    norms = np.linalg.norm(H, axis=0)
    if H.shape[1] == 0 or norms.max() == 0.0:
        return _point_polytope(c)
    H = H[:, norms > tol * norms.max()]
    norms = np.linalg.norm(H, axis=0)

    u, s, _ = np.linalg.svd(H)
    dim = int(np.sum(s > tol * s[0]))
    if dim == 1:
        d = u[:, 0]
        extent = np.abs(d @ H).sum()
        return _segment_polytope(c - extent * d, c + extent * d)
    if dim == 2:
        e1, e2 = u[:, 0], u[:, 1]
        signs = _zonogon_signs(np.column_stack([e1 @ H, e2 @ H]))
        return _polygon_polytope(c + signs @ H.T, np.cross(e1, e2))
    return _zonotope_3d(c, H, norms, tol)


def _cross_rows(a, b):
    return np.column_stack([a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1],
                            a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2],
                            a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]])


def _zonotope_3d(c, H, norms, tol):
    m = H.shape[1]
    i, j = np.triu_indices(m, 1)
    cr = _cross_rows(H[:, i].T, H[:, j].T)
    crn = np.sqrt(np.einsum("ij,ij->i", cr, cr))
    ok = crn > tol * norms[i] * norms[j]
    N = cr[ok] / crn[ok, None]

    # one representative per plane, up to sign
    sim = np.abs(N @ N.T) > 1 - 1e-12
    first = np.argmax(sim, axis=1)
    N = N[first == np.arange(len(N))]

    S = N @ H  # (planes, generators)
    in_plane = np.abs(S) <= tol * norms
    base_sign = np.where(in_plane, 0.0, np.sign(S))
    support = np.abs(S).sum(axis=1)
    nc = N @ c

    normals = np.vstack([N, -N])
    offsets = np.concatenate([nc + support, -nc + support])

    counts = in_plane.sum(axis=1)
    if np.all(counts == 2):
        # every facet is a parallelogram: build all sign loops at once
        P = len(N)
        a = np.argmax(in_plane, axis=1)
        b = m - 1 - np.argmax(in_plane[:, ::-1], axis=1)
        # orient each plane so that its normal is H[:, a] x H[:, b]
        flip = np.einsum("ij,ij->i", N, _cross_rows(H[:, a].T, H[:, b].T)) < 0
        pattern = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
        sv = np.repeat(np.concatenate([base_sign, -base_sign])[:, None, :], 4, axis=1)
        rows = np.arange(2 * P)
        aa, bb = np.tile(a, 2), np.tile(b, 2)
        sv[rows, :, aa] = pattern[:, 0]
        sv[rows, :, bb] = pattern[:, 1]
        # pattern runs CCW about H_a x H_b; reverse where that is not the outward normal
        reverse = np.concatenate([flip, ~flip])
        sv[reverse] = sv[reverse][:, ::-1]
        all_signs = sv.reshape(-1, m)
        lengths = None
    else:
        loops = []  # per facet: sign vectors, CCW about its normal
        for sign in (1.0, -1.0):
            for p in range(len(N)):
                n = sign * N[p]
                J = np.flatnonzero(in_plane[p])
                e1, e2 = _orthonormal_complement(n)
                zs = _zonogon_signs(np.column_stack([e1 @ H[:, J], e2 @ H[:, J]]))
                loop = np.repeat((sign * base_sign[p])[None, :], len(zs), axis=0)
                loop[:, J] = zs
                loops.append(loop)
        all_signs = np.concatenate(loops)
        lengths = [len(loop) for loop in loops]

    codes = (all_signs > 0) @ (1 << np.arange(m, dtype=np.int64))
    _, first_idx, inverse = np.unique(codes, return_index=True, return_inverse=True)
    vertices = c + all_signs[first_idx] @ H.T
    if lengths is None:
        faces = tuple(map(tuple, inverse.reshape(-1, 4).tolist()))
    else:
        bounds = np.cumsum([0] + lengths).tolist()
        flat = inverse.tolist()
        faces = tuple(tuple(flat[s:e]) for s, e in zip(bounds[:-1], bounds[1:]))
    return Polytope(vertices, normals, offsets, 3, faces)


def wrench_set(B, limits, component="force"):
    """Attainable body force or moment set for thrusts inside `limits`."""
    A = B.matrix if hasattr(B, "matrix") else np.asarray(B)
    n = A.shape[1]
    if n > MAX_ROTORS:
        raise PolytopeSizeError(
            f"{n} rotors exceeds the {MAX_ROTORS}-rotor limit of exact enumeration; "
            "use a sampling-based approximation for larger designs")
    rows = {"force": A[:3], "moment": A[3:]}[component]
    lo, hi = (np.asarray(x, dtype=float) for x in limits)
    center = rows @ (0.5 * (lo + hi))
    return zonotope(center, rows * (0.5 * (hi - lo)))


def zonotope_volume(generators):
    """Sum of |det| over generator triples: volume of sum_k [0, generators[:, k]]."""
    G = np.asarray(generators, dtype=float)
    m = G.shape[1]
    total = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(j + 1, m):
                total += abs(np.linalg.det(G[:, [i, j, k]]))
    return total


def acceleration_set(force_polytope, mass, gravity=9.81):
    """Accelerations f/m + g_z at level attitude."""
    return force_polytope.affine(1.0 / mass, np.array([0.0, 0.0, gravity]))


def omni_radius(poly):
    """Largest origin-centred ball inside `poly` (0 if none)."""
    if poly.affine_dimension < 3:
        return 0.0
    return max(0.0, float(np.min(poly.offsets)))


def lateral_force_radius(force_polytope, mass, gravity=9.81):
    """Largest horizontal disk of forces around the hover point (0, 0, -m g)."""
    if force_polytope.affine_dimension < 3:
        return 0.0
    c = np.array([0.0, 0.0, -mass * gravity])
    slack = force_polytope.offsets - force_polytope.normals @ c
    if np.any(slack < 0):
        return 0.0
    horiz = np.linalg.norm(force_polytope.normals[:, :2], axis=1)
    lateral = horiz > 1e-12
    if not lateral.any():
        return float("inf")
    return float(np.min(slack[lateral] / horiz[lateral]))


@dataclass(frozen=True)
class CrossSection:
    polygon: np.ndarray  # (k, 2), counter-clockwise in (e1, e2)
    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    @property
    def points_3d(self):
        return self.origin + self.polygon @ np.vstack([self.e1, self.e2])

    @property
    def area(self):
        p = self.polygon
        if len(p) < 3:
            return 0.0
        x, y = p[:, 0], p[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    @property
    def empty(self):
        return len(self.polygon) == 0


def cross_section(poly, axis, offset):
    """Intersection of `poly` with the plane {x : axis . x = offset}."""
    if poly.affine_dimension < 3:
        raise PolytopeDimensionError("cross-sections need a full-dimensional polytope")
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    e1, e2 = _orthonormal_complement(axis)
    origin = offset * axis

    V = poly.vertices
    h = V @ axis - offset
    scale = max(1.0, float(np.abs(V).max()))
    on = np.abs(h) <= 1e-12 * scale
    pts = [V[on]]
    edges = set()
    for face in poly.faces:
        for k in range(len(face)):
            a, b = face[k], face[(k + 1) % len(face)]
            edges.add((min(a, b), max(a, b)))
    if edges:
        E = np.array(sorted(edges))
        ha, hb = h[E[:, 0]], h[E[:, 1]]
        cut = (ha * hb < 0) & ~on[E[:, 0]] & ~on[E[:, 1]]
        t = ha[cut] / (ha[cut] - hb[cut])
        pts.append(V[E[cut, 0]] + t[:, None] * (V[E[cut, 1]] - V[E[cut, 0]]))
    pts = np.concatenate(pts)
    if len(pts) == 0:
        return CrossSection(np.zeros((0, 2)), origin, e1, e2)
    local = (pts - origin) @ np.column_stack([e1, e2])
    hull = _hull_2d(local)
    return CrossSection(local[hull], origin, e1, e2)


def section_to_svg(section, size=400, margin=20, label=None):
    """Standalone SVG drawing of a cross-section polygon."""
    p = section.polygon
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>']
    if len(p):
        lo, hi = p.min(axis=0), p.max(axis=0)
        span = max(float((hi - lo).max()), 1e-12)
        k = (size - 2 * margin) / span
        xs = margin + (p[:, 0] - lo[0]) * k
        ys = size - margin - (p[:, 1] - lo[1]) * k
        pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(xs, ys))
        lines.append(f'<polygon points="{pts}" fill="#9cc3e6" stroke="#1f4e79" stroke-width="1.5"/>')
    if label:
        lines.append(f'<text x="{margin}" y="{margin}" font-size="12" font-family="sans-serif">'
                     f'{label}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ResponseMetrics:
    rise_time: Optional[float]
    settling_time: Optional[float]
    overshoot: float  # percent of the commanded change
    steady_state_error: float

    def as_dict(self):
        return {"rise_time": self.rise_time, "settling_time": self.settling_time,
                "overshoot": self.overshoot, "steady_state_error": self.steady_state_error}


def _first_crossing(t, y, level):
    idx = np.flatnonzero(y >= level)
    if idx.size == 0:
        return None
    k = idx[0]
    if k == 0:
        return float(t[0])
    return float(t[k - 1] + (level - y[k - 1]) * (t[k] - t[k - 1]) / (y[k] - y[k - 1]))


def response_metrics(t, y, initial, target, settling_band=0.02):
    """Step-response metrics; times are measured from t[0]."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 2 or len(t) != len(y):
        raise ValueError("need at least two samples with matching time stamps")
    if target == initial:
        raise ValueError("target must differ from initial value")
    steps = np.diff(t)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * steps.mean():
        raise ValueError("time samples must be uniformly spaced")

    span = target - initial
    yn = (y - initial) / span
    t0 = t[0]

    t10 = _first_crossing(t, yn, 0.1)
    t90 = _first_crossing(t, yn, 0.9)
    rise = None if t10 is None or t90 is None else t90 - t10

    err = np.abs(yn - 1.0)
    outside = np.flatnonzero(err > settling_band)
    if outside.size == 0:
        settling = 0.0
    elif outside[-1] == len(yn) - 1:
        settling = None
    else:
        k = outside[-1]
        # interpolate where |error| drops to the band edge between samples k and k+1
        e0, e1 = err[k], err[k + 1]
        frac = (e0 - settling_band) / (e0 - e1) if e0 != e1 else 1.0
        settling = float(t[k] + frac * (t[k + 1] - t[k]) - t0)

    overshoot = max(0.0, float(yn.max()) - 1.0) * 100.0
    tail = y[len(y) - max(1, int(round(0.1 * len(y)))):]
    sse = abs(float(tail.mean()) - target)
    return ResponseMetrics(rise_time=rise, settling_time=settling,
                           overshoot=overshoot, steady_state_error=sse)


def metrics_text(metrics, name=""):
    rows = [("signal", name)] if name else []
    for key, val in metrics.as_dict().items():
        rows.append((key, "n/a" if val is None else f"{val:.6g}"))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows) + "\n"


def metrics_csv(entries):
    """`entries` is an iterable of (signal name, ResponseMetrics)."""
    out = ["signal,rise_time,settling_time,overshoot,steady_state_error"]
    for name, m in entries:
        vals = ["" if v is None else repr(float(v)) for v in m.as_dict().values()]
        out.append(",".join([name, *vals]))
    return "\n".join(out) + "\n"
