"""The finite automaton of full-step Newton on the complementary system.

Vertices are the 2**s definite sign patterns; each maps to the sign of
its Newton image z(sigma) = (I - S Sigma)^{-1} c_hat, so every vertex has
out-degree one and each weakly connected component owns exactly one
terminal cycle (a fixed point being a cycle of length one).  Definite
fixed points are exactly the definite solutions of the system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import scale_of, sign_stack
from .cpl import CplSystem, h_eval
from .errors import TooLarge

__all__ = ["TransitionGraph", "Component", "build_graph", "analyze", "export_dot", "vertex_label"]

_SOLVE_CHUNK = 4096


@dataclass
class TransitionGraph:
    """next[k] is the successor of the pattern with bitmask k
    (bit i set <=> sigma_i = +1); singular vertices self-loop and are
    flagged invalid, degenerate ones had a zero component resolved to +1."""

    s: int
    next: np.ndarray
    sys: CplSystem
    z_values: np.ndarray | None = None
    degenerate: np.ndarray | None = None
    singular: np.ndarray | None = None

    @property
    def size(self) -> int:
        return 2**self.s


def build_graph(sys: CplSystem, limit: int = 14, store_z: bool = True) -> TransitionGraph:
    """Solve one linear piece per sign pattern and record the sign map."""
    s = sys.s
    if s > limit:
        raise TooLarge(f"s = {s} exceeds the graph limit {limit}")
    size = 2**s
    nxt = np.zeros(size, dtype=np.int64)
    degenerate = np.zeros(size, dtype=bool)
    singular = np.zeros(size, dtype=bool)
    z_values = np.full((size, s), np.nan) if store_z else None
    if s == 0:
        return TransitionGraph(s=0, next=nxt, sys=sys, z_values=z_values,
                               degenerate=degenerate, singular=singular)
    eye = np.eye(s)
    patterns = sign_stack(s)
    scale = scale_of(sys.c_hat)
    zero_tol = 1e-14 * scale
    powers = (1 << np.arange(s)).astype(np.int64)
    for lo in range(0, size, _SOLVE_CHUNK):
        sig = patterns[lo:lo + _SOLVE_CHUNK]
        mats = eye[None, :, :] - sys.S[None, :, :] * sig[:, None, :]
        dets = np.linalg.det(mats)
        bad = np.abs(dets) <= 1e-14 * scale_of(mats)
        z = np.full((sig.shape[0], s), np.nan)
        if np.any(~bad):
            rhs = np.broadcast_to(sys.c_hat[:, None], (int((~bad).sum()), s, 1))
            try:
                z[~bad] = np.linalg.solve(mats[~bad], rhs)[:, :, 0]
            except np.linalg.LinAlgError:
                for j in np.nonzero(~bad)[0]:
                    try:
                        z[j] = np.linalg.solve(mats[j], sys.c_hat)
                    except np.linalg.LinAlgError:
                        bad[j] = True
        idx = np.arange(lo, lo + sig.shape[0])
        singular[idx] = bad
        nxt[idx[bad]] = idx[bad]  # invalid self-loop
        good = ~bad
        if np.any(good):
            zg = z[good]
            degenerate[idx[good]] = np.any(np.abs(zg) <= zero_tol, axis=1)
            signs = np.where(zg > zero_tol, 1, np.where(zg < -zero_tol, -1, 1))
            nxt[idx[good]] = ((signs > 0).astype(np.int64) @ powers)
        if store_z:
            z_values[idx] = z
    return TransitionGraph(s=s, next=nxt, sys=sys, z_values=z_values,
                           degenerate=degenerate, singular=singular)


@dataclass
class Component:
    """One weakly connected component with its unique terminal cycle."""

    vertices: list
    cycle: list
    basin_size: int
    fixed_point: bool
    cycle_valid: bool
    residual_ok: bool | None = None


def _find_cycles(nxt: np.ndarray) -> tuple[np.ndarray, list[list[int]]]:
    """Mark cycle membership in a functional graph; returns ids and cycles."""
    n = nxt.size
    color = np.zeros(n, dtype=np.int8)      # 0 new, 1 on path, 2 done
    cycle_id = np.full(n, -1, dtype=np.int64)
    cycles: list[list[int]] = []
    for start in range(n):
        if color[start] != 0:
            continue
        path = []
        v = start
        while color[v] == 0:
            color[v] = 1
            path.append(v)
            v = int(nxt[v])
        if color[v] == 1:  # closed a new cycle inside the current path
            pos = path.index(v)
            cyc = path[pos:]
            k = min(range(len(cyc)), key=lambda i: cyc[i])
            cyc = cyc[k:] + cyc[:k]  # canonical start: smallest bitmask
            cid = len(cycles)
            cycles.append(cyc)
            for u in cyc:
                cycle_id[u] = cid
        for u in path:
            color[u] = 2
    return cycle_id, cycles


def analyze(g: TransitionGraph) -> list[Component]:
    """Weakly connected components, each with its terminal cycle and basin."""
    n = g.size
    parent = np.arange(n)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for v in range(n):
        ra, rb = find(v), find(int(g.next[v]))
        if ra != rb:
            parent[ra] = rb

    cycle_id, cycles = _find_cycles(g.next)
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)

    scale = scale_of(g.sys.c_hat)
    out = []
    for root in sorted(groups):
        verts = groups[root]
        cids = {int(cycle_id[v]) for v in verts if cycle_id[v] >= 0}
        assert len(cids) == 1, "functional graph component must own one cycle"
        cyc = cycles[cids.pop()]
        valid = not (g.singular is not None and any(g.singular[u] for u in cyc))
        fixed = len(cyc) == 1 and valid
        residual_ok = None
        if fixed and g.z_values is not None:
            z = g.z_values[cyc[0]]
            residual_ok = bool(
                np.max(np.abs(h_eval(g.sys, z) - g.sys.c_hat), initial=0.0) <= 1e-9 * scale)
        out.append(Component(vertices=verts, cycle=cyc, basin_size=len(verts),
                             fixed_point=fixed, cycle_valid=valid,
                             residual_ok=residual_ok))
    return out


def vertex_label(mask: int, s: int) -> str:
    return "".join("+" if (mask >> i) & 1 else "-" for i in range(s))


def export_dot(g: TransitionGraph, labels: bool = True) -> str:
    """Render the automaton as DOT; cycle vertices get a double circle."""
    on_cycle = np.zeros(g.size, dtype=bool)
    for comp in analyze(g):
        for v in comp.cycle:
            on_cycle[v] = True
    lines = ["digraph newton {", "  rankdir=LR;"]
    for v in range(g.size):
        name = vertex_label(v, g.s) if labels else f"s{v}"
        attrs = []
        if on_cycle[v]:
            attrs.append("shape=doublecircle")
        if g.singular is not None and g.singular[v]:
            attrs.append('style=dashed color=red label="singular"')
        lines.append(f'  "{name}"' + (f" [{' '.join(attrs)}];" if attrs else ";"))
    for v in range(g.size):
        src = vertex_label(v, g.s) if labels else f"s{v}"
        dst = vertex_label(int(g.next[v]), g.s) if labels else f"s{int(g.next[v])}"
        lines.append(f'  "{src}" -> "{dst}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
