"""Incremental isotropic remeshing: edge splits above the target band, edge
collapses below it (link-condition guarded), Delaunay-style flips, and
tangential smoothing. Topology (genus, component count) is preserved; the
caller re-validates and re-projects afterwards.
"""
from __future__ import annotations

import numpy as np


def _edge_map(tris: list[list[int]]) -> dict[tuple[int, int], list[int]]:
    em: dict[tuple[int, int], list[int]] = {}
    for ti, (a, b, c) in enumerate(tris):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            em.setdefault(key, []).append(ti)
    return em


def _tri_normal(V, a, b, c):
    n = np.cross(V[b] - V[a], V[c] - V[a])
    return n


def split_long_edges(verts: list, tris: list[list[int]], lmax: float, max_passes: int = 6,
                     vertex_budget: int = 40000) -> bool:
    """Split every edge longer than lmax at its midpoint (1-4 on both incident
    triangles is avoided: each split is a 2-4 local operation). Returns True
    if anything changed."""
    changed = False
    for _ in range(max_passes):
        if len(verts) >= vertex_budget:
            break
        em = _edge_map(tris)
        lengths = []
        for (u, v), inc in em.items():
            ell = float(np.linalg.norm(verts[u] - verts[v]))
            if ell > lmax and len(inc) == 2:
                lengths.append((ell, u, v))
        if not lengths:
            break
        lengths.sort(key=lambda t: (-t[0], t[1], t[2]))
        dirty: set[int] = set()
        for ell, u, v in lengths:
            if len(verts) >= vertex_budget:
                break
            inc = em[(u, v)]
            if any(t in dirty for t in inc):
                continue
            mid = len(verts)
            verts.append(0.5 * (verts[u] + verts[v]))
            for ti in inc:
                a, b, c = tris[ti]
                # rotate so the split edge is (a, b)
                for _ in range(3):
                    if {a, b} == {u, v}:
                        break
                    a, b, c = b, c, a
                tris[ti] = [a, mid, c]
                tris.append([mid, b, c])
                dirty.add(ti)
                dirty.add(len(tris) - 1)
            changed = True
    return changed


def collapse_short_edges(verts: list, tris: list[list[int]], lmin: float, lmax: float,
                         area_floor: float) -> bool:
    """Collapse edges shorter than lmin into their midpoint when the link
    condition holds and no incident triangle flips or degenerates."""
    em = _edge_map(tris)
    neighbors: dict[int, set[int]] = {}
    for (u, v) in em:
        neighbors.setdefault(u, set()).add(v)
        neighbors.setdefault(v, set()).add(u)

    candidates = []
    for (u, v), inc in em.items():
        if len(inc) != 2:
            continue
        ell = float(np.linalg.norm(verts[u] - verts[v]))
        if ell < lmin:
            candidates.append((ell, u, v))
    candidates.sort(key=lambda t: (t[0], t[1], t[2]))

    locked: set[int] = set()
    removed_tris: set[int] = set()
    replaced: dict[int, int] = {}
    changed = False

    def resolve(i: int) -> int:
        while i in replaced:
            i = replaced[i]
        return i

    vert_tris: dict[int, set[int]] = {}
    for ti, tri in enumerate(tris):
        for x in tri:
            vert_tris.setdefault(x, set()).add(ti)

    for ell, u, v in candidates:
        u, v = resolve(u), resolve(v)
        if u == v or u in locked or v in locked:
            continue
        inc = [
            t
            for t in vert_tris.get(u, set()) & vert_tris.get(v, set())
            if t not in removed_tris
            and u in {resolve(x) for x in tris[t]}
            and v in {resolve(x) for x in tris[t]}
        ]
        if len(inc) != 2:
            continue
        opposite = set()
        for ti in inc:
            rt = [resolve(x) for x in tris[ti]]
            opposite.update(x for x in rt if x not in (u, v))
        nu = {resolve(x) for x in neighbors.get(u, set())} - {u, v}
        nv = {resolve(x) for x in neighbors.get(v, set())} - {u, v}
        if nu & nv != opposite:
            continue  # link condition: collapse would pinch the surface
        mid = 0.5 * (verts[u] + verts[v])
        # fold / degeneracy guard on every surviving triangle around u and v
        ok = True
        affected = (vert_tris.get(u, set()) | vert_tris.get(v, set())) - removed_tris - set(inc)
        for ti in affected:
            a, b, c = (resolve(x) for x in tris[ti])
            pa, pb, pc = verts[a].copy(), verts[b].copy(), verts[c].copy()
            n_before = _tri_normal(verts, a, b, c)
            pts = {u: mid, v: mid}
            qa = pts.get(a, pa)
            qb = pts.get(b, pb)
            qc = pts.get(c, pc)
            n_after = np.cross(qb - qa, qc - qa)
            if float(np.dot(n_before, n_after)) <= 0:
                ok = False
                break
            if 0.5 * float(np.linalg.norm(n_after)) < area_floor:
                ok = False
                break
        if not ok:
            continue
        verts[u] = mid
        replaced[v] = u
        removed_tris.update(inc)
        for ti in affected:
            tris[ti] = [resolve(x) for x in tris[ti]]
            vert_tris.setdefault(u, set()).add(ti)
        locked.add(u)
        locked.update(nu | nv)
        changed = True

    if not changed:
        return False
    new_tris = [
        [resolve(x) for x in tri]
        for ti, tri in enumerate(tris)
        if ti not in removed_tris
    ]
    tris.clear()
    tris.extend(new_tris)
    return True


def delaunay_flips(verts: list, tris: list[list[int]], area_floor: float,
                   max_passes: int = 3) -> bool:
    """Flip interior edges whose opposite-angle cotangents sum negative."""
    changed = False
    for _ in range(max_passes):
        em = _edge_map(tris)
        existing = set(em.keys())
        flips = []
        for (u, v), inc in em.items():
            if len(inc) != 2:
                continue
            t1, t2 = inc
            c = next(x for x in tris[t1] if x not in (u, v))
            d = next(x for x in tris[t2] if x not in (u, v))
            key_cd = (c, d) if c < d else (d, c)
            if key_cd in existing or c == d:
                continue

            def cot_at(p, q, r):
                e1, e2 = verts[q] - verts[p], verts[r] - verts[p]
                cr = np.linalg.norm(np.cross(e1, e2))
                if cr == 0:
                    return np.inf
                return float(np.dot(e1, e2)) / cr

            if cot_at(c, u, v) + cot_at(d, u, v) < -1e-12:
                flips.append((u, v, c, d, t1, t2))
        if not flips:
            break
        locked: set[int] = set()
        applied = False
        for u, v, c, d, t1, t2 in flips:
            if {u, v, c, d} & locked:
                continue
            # orient: t1 must traverse u -> v; rotate to find actual order
            a_, b_, c_ = tris[t1]
            order = (a_, b_, c_)
            if (u, v) not in ((order[0], order[1]), (order[1], order[2]), (order[2], order[0])):
                u, v = v, u
            n1 = _tri_normal(verts, u, d, c)
            n2 = _tri_normal(verts, d, v, c)
            if 0.5 * np.linalg.norm(n1) < area_floor or 0.5 * np.linalg.norm(n2) < area_floor:
                continue
            ref = _tri_normal(verts, *tris[t1]) + _tri_normal(verts, *tris[t2])
            if np.dot(n1, ref) <= 0 or np.dot(n2, ref) <= 0:
                continue
            tris[t1] = [u, d, c]
            tris[t2] = [d, v, c]
            locked.update((u, v, c, d))
            changed = True
            applied = True
        if not applied:
            break
    return changed


def tangential_smooth(verts: list, tris: list[list[int]], factor: float = 0.5) -> None:
    """Move vertices toward their neighbor centroid, tangentially only."""
    V = np.array(verts)
    F = np.array(tris, dtype=np.int64)
    nv = len(V)
    acc = np.zeros_like(V)
    cnt = np.zeros(nv)
    for k in range(3):
        a, b = F[:, k], F[:, (k + 1) % 3]
        np.add.at(acc, a, V[b])
        np.add.at(cnt, a, 1.0)
        np.add.at(acc, b, V[a])
        np.add.at(cnt, b, 1.0)
    cnt[cnt == 0] = 1.0
    centroid = acc / cnt[:, None]

    fn = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
    normals = np.zeros_like(V)
    for k in range(3):
        np.add.at(normals, F[:, k], fn)
    norms = np.linalg.norm(normals, axis=1)
    norms[norms == 0] = 1.0
    normals /= norms[:, None]

    d = factor * (centroid - V)
    d -= np.einsum("ij,ij->i", d, normals)[:, None] * normals
    V = V + d
    for i in range(nv):
        verts[i] = V[i]


def compact(verts: list, tris: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    """Drop unreferenced vertices and reindex."""
    used = sorted({x for tri in tris for x in tri})
    remap = {old: new for new, old in enumerate(used)}
    V = np.array([verts[i] for i in used])
    F = np.array([[remap[x] for x in tri] for tri in tris], dtype=np.int64)
    return V, F


def remesh(V: np.ndarray, F: np.ndarray, lmin: float, lmax: float,
           area_floor: float, smooth_factor: float = 0.5,
           vertex_budget: int = 40000) -> tuple[np.ndarray, np.ndarray]:
    """One remeshing round; returns new (V, F) arrays."""
    verts = [v.astype(np.float64).copy() for v in V]
    tris = [list(map(int, tri)) for tri in F]
    split_long_edges(verts, tris, lmax, vertex_budget=vertex_budget)
    collapse_short_edges(verts, tris, lmin, lmax, area_floor)
    delaunay_flips(verts, tris, area_floor)
    tangential_smooth(verts, tris, smooth_factor)
    return compact(verts, tris)
