"""Light-cone atlas: sampled unit sphere, causal labels, connected components.

Components are graph components of same-label samples, so every count here
is a measurement at the sampling resolution.  The null shell is represented
by points refined onto ``L = 0`` along every mesh edge joining a timelike and
a spacelike sample; shell components are tracked through the timelike
samples bordering the shell.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .core import (EPS_CLS, HOLE, LIGHTLIKE, SPACELIKE, TIMELIKE, LagrangianSpec,
                   beem_validity_scan, classify_many, evaluate_many)

TIMELIKE_REGION = "TIMELIKE_REGION"
NULL_SHELL = "NULL_SHELL"
SPACELIKE_REGION = "SPACELIKE_REGION"

SUBDIVIDED_POLYTOPE = "SUBDIVIDED_POLYTOPE"
RANDOM_KNN = "RANDOM_KNN"

ANTIPODE_MATCH = 0.99
ANGLE_TOL = 1e-6


# sphere sampling -------------------------------------------------------------


@dataclass
class SphereSample:
    points: np.ndarray  # (N, d) unit vectors
    edges: np.ndarray  # (E, 2) with i < j
    strategy: str
    seed: int = 0
    faces: Optional[np.ndarray] = None
    _antipode: Optional[np.ndarray] = field(default=None, repr=False)
    _tree: Optional[cKDTree] = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree

    def neighbors(self) -> list:
        nbrs = [[] for _ in range(len(self.points))]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return nbrs

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=len(self.points))

    def antipodes(self) -> np.ndarray:
        """Index of the sample nearest to ``-v`` for every sample ``v``."""
        if self._antipode is None:
            self._antipode = self.tree.query(-self.points)[1]
        return self._antipode

    def spacing(self) -> float:
        """Median edge length (chordal, ~ angular for small edges)."""
        p = self.points
        return float(np.median(np.linalg.norm(p[self.edges[:, 0]] - p[self.edges[:, 1]], axis=1)))


_PHI = (1 + 5**0.5) / 2
_ICO_VERTS = np.array([
    [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
    [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
    [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
])
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


def icosphere(level: int):
    """Vertices and faces of an icosahedron subdivided ``level`` times (10*4^level + 2 vertices)."""
    verts = [tuple(v) for v in _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1, keepdims=True)]
    faces = _ICO_FACES
    for _ in range(level):
        cache = {}

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = np.add(verts[i], verts[j])
                verts.append(tuple(m / np.linalg.norm(m)))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = np.array(new)
    return np.array(verts), faces


def _edges_from_faces(faces):
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def sample_sphere(dimension: int, target_count: int, strategy: str = None, seed: int = 0,
                  k: int = 12) -> SphereSample:
    """Sample the unit sphere of R^dimension with a neighbor graph.

    ``SUBDIVIDED_POLYTOPE`` gives a regular circle for dimension 2 and the
    smallest icosphere with at least ``target_count`` vertices for dimension 3.
    ``RANDOM_KNN`` gives uniform random points with a symmetrized k-nearest
    neighbor graph (any dimension).
    """
    if dimension < 2:
        raise ValueError("dimension must be >= 2")
    if target_count < dimension + 2:
        raise ValueError("target_count must be >= dimension + 2")
    if strategy is None:
        strategy = SUBDIVIDED_POLYTOPE if dimension <= 3 else RANDOM_KNN
    if strategy == SUBDIVIDED_POLYTOPE:
        if dimension == 2:
            t = 2 * np.pi * (np.arange(target_count) + 0.5) / target_count
            pts = np.stack([np.cos(t), np.sin(t)], axis=1)
            i = np.arange(target_count)
            edges = np.sort(np.stack([i, (i + 1) % target_count], axis=1), axis=1)
            return SphereSample(pts, edges, strategy, seed)
        if dimension == 3:
            level = 0
            while 10 * 4**level + 2 < target_count:
                level += 1
            pts, faces = icosphere(level)
            return SphereSample(pts, _edges_from_faces(faces), strategy, seed, faces=faces)
        raise ValueError(f"{strategy} supports dimensions 2 and 3 only")
    if strategy == RANDOM_KNN:
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((target_count, dimension))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        tree = cKDTree(pts)
        _, nn = tree.query(pts, k=k + 1)
        src = np.repeat(np.arange(target_count), k)
        dst = nn[:, 1:].ravel()
        edges = np.unique(np.sort(np.stack([src, dst], axis=1), axis=1), axis=0)
        sample = SphereSample(pts, edges, strategy, seed)
        sample._tree = tree
        return sample
    raise ValueError(f"unknown strategy {strategy!r}")


def default_count(dimension: int) -> int:
    return {2: 4096, 3: 2562}.get(dimension, 10000)


def sample_pair(dimension: int, count: Optional[int] = None, seed: int = 0):
    """Coarse and fine (4x) samples for resolution-agreement checks."""
    count = count or default_count(dimension)
    return sample_sphere(dimension, count, seed=seed), sample_sphere(dimension, 4 * count, seed=seed + 1)


# atlas ----------------------------------------------------------------------


@dataclass
class Component:
    id: int
    cls: str
    members: np.ndarray  # sample indices (shell-point indices for NULL_SHELL)
    representative: np.ndarray
    opposite: Optional[int] = None


@dataclass
class ConeAtlas:
    sample: SphereSample
    labels: np.ndarray  # per-sample label strings
    two_L: np.ndarray  # per-sample 2L (NaN on holes)
    components: list
    comp_of: np.ndarray  # per-sample component id within its class, -1 for holes
    shell_points: np.ndarray  # (M, d) unit vectors on L = 0
    shell_component: np.ndarray  # NULL_SHELL id of each shell point
    shell_anchor: np.ndarray  # sample index each shell point hangs from
    border: np.ndarray  # per-sample NULL_SHELL id for shell-bordering samples, else -1
    spec: Optional[LagrangianSpec] = None

    def of_class(self, cls: str) -> list:
        return [c for c in self.components if c.cls == cls]

    def component(self, cls: str, cid: int) -> Component:
        for c in self.components:
            if c.cls == cls and c.id == cid:
                return c
        raise KeyError(f"no {cls} component {cid}")

    def counts(self) -> dict:
        out = {TIMELIKE_REGION: 0, NULL_SHELL: 0, SPACELIKE_REGION: 0}
        for c in self.components:
            out[c.cls] += 1
        return out

    def timelike_points(self, cid: int) -> np.ndarray:
        return self.sample.points[self.component(TIMELIKE_REGION, cid).members]

    def shell_of(self, cid: int) -> np.ndarray:
        """Shell points bounding timelike component ``cid``."""
        members = self.component(TIMELIKE_REGION, cid).members
        nulls = np.unique(self.border[members])
        nulls = nulls[nulls >= 0]
        return self.shell_points[np.isin(self.shell_component, nulls)]

    def causal_points(self, cid: int) -> np.ndarray:
        return np.concatenate([self.timelike_points(cid), self.shell_of(cid)])

    def locate(self, v) -> Optional[int]:
        """Timelike component containing the causal direction ``v`` (nearest timelike sample)."""
        v = np.asarray(v, dtype=float)
        u = v / np.linalg.norm(v)
        k = min(32, len(self.sample))
        _, idx = self.sample.tree.query(u, k=k)
        for i in np.atleast_1d(idx):
            if self.labels[i] == TIMELIKE:
                return int(self.comp_of[i])
        return None

    def locate_many(self, V) -> np.ndarray:
        """Vectorised :meth:`locate`; ``-1`` where no timelike sample is near."""
        V = np.atleast_2d(np.asarray(V, dtype=float))
        U = V / np.linalg.norm(V, axis=1, keepdims=True)
        k = min(32, len(self.sample))
        _, idx = self.sample.tree.query(U, k=k)
        idx = idx.reshape(len(U), -1)
        timelike = self.labels[idx] == TIMELIKE
        first = np.argmax(timelike, axis=1)
        comp = self.comp_of[idx[np.arange(len(U)), first]]
        return np.where(timelike.any(axis=1), comp, -1)


def _components(n, edges, keep):
    """Connected components of the subgraph induced by ``keep``; ``-1`` elsewhere."""
    e = edges[keep[edges[:, 0]] & keep[edges[:, 1]]]
    graph = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    _, lab = connected_components(graph, directed=False)
    out = np.full(n, -1)
    roots = lab[keep]
    # deterministic ids: order of first appearance by sample index
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    out[keep] = order[inverse]
    return out


def _refine_crossings(spec, a, b, iters=60):
    """Bisect ``2L`` along chords from timelike ``a`` to spacelike ``b``; unit results."""
    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pts = a + mid[:, None] * (b - a)
        ok, L = evaluate_many(spec, pts, order=0)
        neg = np.where(ok, L < 0, True)
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    pts = a + 0.5 * (lo + hi)[:, None] * (b - a)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _representative(points):
    m = points.mean(axis=0)
    nm = np.linalg.norm(m)
    if nm < 1e-12:
        return points[0]
    m /= nm
    return points[np.argmax(points @ m)]


def atlas_from_labels(sample: SphereSample, labels, two_L=None, spec=None) -> ConeAtlas:
    """Assemble components from given per-sample labels (also for synthetic tests)."""
    labels = np.asarray(labels, dtype=object)
    n = len(sample)
    if two_L is None:
        two_L = np.where(labels == TIMELIKE, -1.0, np.where(labels == SPACELIKE, 1.0, 0.0))
    edges = sample.edges
    pts = sample.points
    comp_of = np.full(n, -1)
    components = []
    for lab, cls in ((TIMELIKE, TIMELIKE_REGION), (SPACELIKE, SPACELIKE_REGION)):
        keep = labels == lab
        ids = _components(n, edges, keep)
        comp_of[keep] = ids[keep]
        for cid in range(ids.max() + 1 if keep.any() else 0):
            members = np.flatnonzero(ids == cid)
            components.append(Component(cid, cls, members, _representative(pts[members])))

    # shell: crossing edges plus exactly-null samples
    la, lb = labels[edges[:, 0]], labels[edges[:, 1]]
    cross = ((la == TIMELIKE) & (lb == SPACELIKE)) | ((la == SPACELIKE) & (lb == TIMELIKE))
    ce = edges[cross]
    t_idx = np.where(labels[ce[:, 0]] == TIMELIKE, ce[:, 0], ce[:, 1])
    s_idx = np.where(labels[ce[:, 0]] == TIMELIKE, ce[:, 1], ce[:, 0])
    light = np.flatnonzero(labels == LIGHTLIKE)
    # the band of samples on either side of the shell; using both endpoints of
    # every crossing edge keeps the band connected on sparse kNN graphs
    border_mask = np.zeros(n, dtype=bool)
    border_mask[t_idx] = True
    border_mask[s_idx] = True
    border_mask[light] = True
    nl = (la == LIGHTLIKE) & (lb == TIMELIKE)
    border_mask[edges[nl, 1]] = True
    nl = (lb == LIGHTLIKE) & (la == TIMELIKE)
    border_mask[edges[nl, 0]] = True
    border = _components(n, edges, border_mask)

    if spec is not None and len(ce):
        crossing_pts = _refine_crossings(spec, pts[t_idx], pts[s_idx])
    else:
        mid = pts[t_idx] + pts[s_idx]
        crossing_pts = mid / np.maximum(np.linalg.norm(mid, axis=1, keepdims=True), 1e-300)
    shell_points = np.concatenate([crossing_pts, pts[light]]) if len(light) else crossing_pts
    shell_anchor = np.concatenate([t_idx, light])
    shell_component = border[shell_anchor] if len(shell_anchor) else np.zeros(0, dtype=int)
    for cid in range(border.max() + 1 if border_mask.any() else 0):
        members = np.flatnonzero(shell_component == cid)
        rep = _representative(shell_points[members]) if len(members) else pts[border == cid][0]
        components.append(Component(cid, NULL_SHELL, members, rep))

    atlas = ConeAtlas(sample, labels, np.asarray(two_L, dtype=float), components, comp_of,
                      shell_points.reshape(-1, sample.dimension), shell_component, shell_anchor,
                      border, spec)
    _pair_opposites(atlas)
    return atlas


def _pair_opposites(atlas: ConeAtlas):
    for comp in atlas.of_class(TIMELIKE_REGION):
        hits = atlas.locate_many(-atlas.sample.points[comp.members])
        hits = hits[hits >= 0]
        if len(hits) == 0:
            continue
        best = np.bincount(hits).argmax()
        if np.sum(hits == best) >= ANTIPODE_MATCH * len(comp.members):
            comp.opposite = int(best)


def build_atlas(spec: LagrangianSpec, sample: SphereSample) -> ConeAtlas:
    """Label every sample with its causal class and extract components.

    Samples where ``L`` is undefined are labeled ``HOLE`` and excluded.
    """
    if sample.dimension != spec.dimension:
        raise ValueError("sample and spec dimensions differ")
    labels, two_L = classify_many(spec, sample.points)
    return atlas_from_labels(sample, labels, two_L, spec)


def component_count(atlas: ConeAtlas, cls: str) -> int:
    return atlas.counts()[cls]


# certificates ---------------------------------------------------------------


@dataclass(frozen=True)
class ConvexityCertificate:
    passed: bool
    level: float
    chords: int
    worst_margin: float
    witness: Optional[tuple] = None
    equality_cases: int = 0


def _pairs(rng, n, count):
    i = rng.integers(0, n, count)
    j = rng.integers(0, n - 1, count)
    j = np.where(j >= i, j + 1, j)  # distinct indices
    return i, j


def _angle(a, b):
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    cos = np.einsum("...i,...i->...", a, b) / (na * nb)
    # stable small angles: use the chord of the normalized vectors
    chord = np.linalg.norm(a / na[..., None] - b / nb[..., None], axis=-1)
    return np.where(cos > 0, 2 * np.arcsin(np.clip(chord / 2, 0, 1)), np.pi)


def rescale_to_level(spec: LagrangianSpec, U, c: float) -> np.ndarray:
    """Scale timelike rows of ``U`` onto ``2L = -c^2`` using 2-homogeneity."""
    ok, L = evaluate_many(spec, U, order=0)
    if not ok.all() or np.any(L >= 0):
        raise ValueError("only timelike vectors can be rescaled onto a level set")
    return U * (c / np.sqrt(-2 * L))[:, None]


def convexity_certificate(spec: LagrangianSpec, atlas: ConeAtlas, component_id: int,
                          level: float, chords: int = 10000, seed: int = 0) -> ConvexityCertificate:
    """Statistical convexity test of the sublevel set ``J(c)`` of one cone.

    ``c > 0``: endpoints on ``2L = -c^2``; every chord midpoint must satisfy
    ``2L < -c^2`` (the worst margin is ``min(-c^2 - 2L(mid))``).
    ``c = 0``: endpoints are timelike samples or shell points with random
    radii; midpoints must be causal, and timelike unless both endpoints are
    proportional to one lightlike vector (those are counted as equality cases;
    a block of such pairs is always included).
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    comp = atlas.component(TIMELIKE_REGION, component_id)
    rng = np.random.default_rng(seed)
    if level > 0:
        U = atlas.sample.points[comp.members]
        if len(U) < 2:
            raise ValueError("component too small to sample chords")
        E = rescale_to_level(spec, U, level)
        i, j = _pairs(rng, len(E), chords)
        mid = 0.5 * (E[i] + E[j])
        ok, L = evaluate_many(spec, mid, order=0)
        margin = np.where(ok, -level**2 - 2 * L, -np.inf)
        k = int(np.argmin(margin))
        worst = float(margin[k])
        return ConvexityCertificate(bool(worst > 0), level, chords, worst,
                                    None if worst > 0 else (E[i[k]], E[j[k]]))

    T = atlas.sample.points[comp.members]
    S = atlas.shell_of(component_id)
    P = np.concatenate([T, S])
    is_null = np.r_[np.zeros(len(T), bool), np.ones(len(S), bool)]
    if len(P) < 2:
        raise ValueError("component too small to sample chords")
    n_prop = min(chords // 10, len(S)) if len(S) else 0
    i, j = _pairs(rng, len(P), chords - n_prop)
    A, B = P[i], P[j]
    null_a, null_b = is_null[i], is_null[j]
    if n_prop:
        k = rng.integers(0, len(S), n_prop)
        A = np.concatenate([A, S[k]])
        B = np.concatenate([B, S[k] * np.exp(rng.uniform(np.log(0.1), np.log(10), n_prop))[:, None]])
        null_a = np.r_[null_a, np.ones(n_prop, bool)]
        null_b = np.r_[null_b, np.ones(n_prop, bool)]
    ra = np.exp(rng.uniform(np.log(0.1), np.log(10), len(A)))
    rb = np.exp(rng.uniform(np.log(0.1), np.log(10), len(A)))
    A = A * ra[:, None]
    B = B * rb[:, None]
    mid = 0.5 * (A + B)
    ok, L = evaluate_many(spec, mid, order=0)
    norm2 = np.einsum("ij,ij->i", mid, mid)
    rel = np.where(ok, -2 * L / norm2, -np.inf)  # > eps: timelike, >= -eps: causal
    proportional = (_angle(A, B) < ANGLE_TOL) & null_a & null_b
    causal = rel >= -EPS_CLS
    timelike = rel > EPS_CLS
    bad = ~causal | (~timelike & ~proportional)
    strict = ~proportional
    worst = float(rel[strict].min()) if strict.any() else float("inf")
    witness = None
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        witness = (A[k], B[k])
    return ConvexityCertificate(not bad.any(), 0.0, len(A), worst, witness,
                                int(np.sum(proportional & causal & ~timelike)))


@dataclass(frozen=True)
class SharpnessVerdict:
    passed: bool
    witness: Optional[np.ndarray] = None
    cls: Optional[str] = None


def sharpness_check(atlas: ConeAtlas) -> SharpnessVerdict:
    """PASS iff no timelike or null component holds a sample together with its antipode."""
    anti = atlas.sample.antipodes()
    tl = np.flatnonzero(atlas.labels == TIMELIKE)
    same = (atlas.labels[anti[tl]] == TIMELIKE) & (atlas.comp_of[anti[tl]] == atlas.comp_of[tl])
    if same.any():
        return SharpnessVerdict(False, atlas.sample.points[tl[same][0]], TIMELIKE_REGION)
    bd = np.flatnonzero(atlas.border >= 0)
    same = (atlas.border[anti[bd]] >= 0) & (atlas.border[anti[bd]] == atlas.border[bd])
    if same.any():
        return SharpnessVerdict(False, atlas.sample.points[bd[same][0]], NULL_SHELL)
    return SharpnessVerdict(True)


def overlap_check(atlas: ConeAtlas, alpha: int, beta: int) -> Optional[np.ndarray]:
    """A sample ``v`` with ``v`` in cone ``alpha`` and ``-v`` in cone ``beta``, or None."""
    ids = [c.id for c in atlas.of_class(TIMELIKE_REGION)]
    if len(ids) < 2 or alpha == beta or alpha not in ids or beta not in ids:
        raise ValueError("overlap_check needs two distinct timelike components")
    members = atlas.component(TIMELIKE_REGION, alpha).members
    V = atlas.sample.points[members]
    hit = atlas.locate_many(-V) == beta
    if atlas.spec is not None:
        ok, L = evaluate_many(atlas.spec, -V, order=0)
        hit &= ok & (L < 0)
    if not hit.any():
        return None
    return atlas.sample.points[members[np.flatnonzero(hit)[0]]]


@dataclass(frozen=True)
class FamilyScan:
    parameters: tuple
    counts: tuple  # (coarse, fine) timelike counts per grid point, None when invalid
    failures: tuple  # (parameter, validity kind) for invalid grid points

    @property
    def constant(self) -> bool:
        seen = {c for pair in self.counts if pair is not None for c in pair}
        return len(seen) <= 1


def family_scan(family, grid: Sequence[float], samples=None, validity_samples: int = 4000,
                seed: int = 0) -> FamilyScan:
    """Timelike component counts across a parameter family at two resolutions."""
    first = family(grid[0])
    coarse, fine = samples or sample_pair(first.dimension, seed=seed)
    counts, failures = [], []
    for t in grid:
        spec = family(t)
        verdict = beem_validity_scan(spec, validity_samples, seed)
        if not verdict.valid:
            failures.append((float(t), verdict.kind))
            counts.append(None)
            continue
        counts.append((component_count(build_atlas(spec, coarse), TIMELIKE_REGION),
                       component_count(build_atlas(spec, fine), TIMELIKE_REGION)))
    return FamilyScan(tuple(float(t) for t in grid), tuple(counts), tuple(failures))


# structural checks -----------------------------------------------------------


def boundary_structure(atlas: ConeAtlas) -> dict:
    """Consistency of the shell with the timelike/spacelike partition.

    Every shell point must carry ``|2L| <= eps`` and no timelike sample may be
    adjacent to a spacelike one without a shell point on that edge; each
    timelike component must border exactly one shell component, and distinct
    timelike components distinct shells.
    """
    spec = atlas.spec
    out = {"shell_points": int(len(atlas.shell_points))}
    if spec is not None and len(atlas.shell_points):
        ok, L = evaluate_many(spec, atlas.shell_points, order=0)
        out["max_abs_2L_on_shell"] = float(np.max(np.abs(2 * L[ok]))) if ok.any() else float("nan")
    shells = {}
    for comp in atlas.of_class(TIMELIKE_REGION):
        b = np.unique(atlas.border[comp.members])
        shells[comp.id] = tuple(int(x) for x in b[b >= 0])
    out["shells_per_timelike"] = shells
    flat = [s for v in shells.values() for s in v]
    out["one_shell_each"] = all(len(v) == 1 for v in shells.values()) and len(flat) == len(set(flat))
    return out


def export_csv(atlas: ConeAtlas, path, level: Optional[float] = None):
    """Write ``v0..vn, 2L, class, component_id`` rows; with ``level`` also the
    timelike samples rescaled onto ``2L = -level^2`` (class ``LEVEL``)."""
    d = atlas.sample.dimension
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"v{i}" for i in range(d)] + ["2L", "class", "component_id"])
        for i, p in enumerate(atlas.sample.points):
            lab = atlas.labels[i]
            cid = -1 if lab == HOLE else int(atlas.comp_of[i])
            if lab == LIGHTLIKE:
                cid = int(atlas.border[i])
            val = "" if not np.isfinite(atlas.two_L[i]) else repr(float(atlas.two_L[i]))
            w.writerow([repr(float(x)) for x in p] + [val, lab, cid])
        if level is not None and level > 0 and atlas.spec is not None:
            tl = np.flatnonzero(atlas.labels == TIMELIKE)
            if len(tl):
                E = rescale_to_level(atlas.spec, atlas.sample.points[tl], level)
                for k, p in zip(tl, E):
                    w.writerow([repr(float(x)) for x in p] + [repr(-level**2), "LEVEL",
                                                             int(atlas.comp_of[k])])
