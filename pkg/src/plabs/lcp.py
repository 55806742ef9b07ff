"""Reduction of the complementary system to a linear complementarity problem.

Splitting z = u - w into complementary nonnegative parts (|z| = u + w)
turns H(z) = c_hat into the standard LCP

    0 <= u = q + M w  perp  w >= 0,
    q = (I - S)^{-1} c_hat,   M = (I - S)^{-1} (I + S).

Unique solvability for every q is the P-matrix property of M, which is
equivalent to the sign real spectral radius of S being below one.  The
enumerative solver here walks all supports; it is the verification oracle
that cross-checks the CPL enumeration, not a production pivoting method.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._util import scale_of
from .cpl import CplSystem, h_eval
from .errors import SingularIMinusS, TooLarge

__all__ = ["LcpData", "LcpEnumeration", "to_lcp", "p_matrix_check", "lcp_solve_enum"]

_COND_LIMIT = 1e14


@dataclass(frozen=True)
class LcpData:
    """q, M and the originating system; role_swapped marks the fallback
    convention where w is expressed through u and M is the inverse of the
    usual definition."""

    q: np.ndarray
    M: np.ndarray
    source: CplSystem
    role_swapped: bool = False


def to_lcp(sys: CplSystem) -> LcpData:
    """Form q and M; falls back to the swapped convention if I - S is singular."""
    s = sys.s
    eye = np.eye(s)
    K = eye - sys.S
    if s == 0 or np.linalg.cond(K) <= _COND_LIMIT:
        q = np.linalg.solve(K, sys.c_hat) if s else np.zeros(0)
        M = np.linalg.solve(K, eye + sys.S) if s else np.zeros((0, 0))
        return LcpData(q=q, M=M, source=sys)
    Kp = eye + sys.S
    if np.linalg.cond(Kp) <= _COND_LIMIT:
        q = np.linalg.solve(Kp, -sys.c_hat)
        M = np.linalg.solve(Kp, K)
        return LcpData(q=q, M=M, source=sys, role_swapped=True)
    raise SingularIMinusS("both I - S and I + S are numerically singular")


def p_matrix_check(M, limit: int = 14) -> bool:
    """True when all principal minors are positive (above 1e-12 * scale)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    s = M.shape[0]
    if s == 0:
        return True
    if s > limit:
        raise TooLarge(f"s = {s} exceeds the principal-minor limit {limit}")
    top = max(1.0, float(np.max(np.abs(M))))
    for k in range(1, s + 1):
        subsets = np.array(list(itertools.combinations(range(s), k)))
        stacks = M[subsets[:, :, None], subsets[:, None, :]]
        dets = np.linalg.det(stacks)
        if np.any(dets <= 1e-12 * top**k):
            return False
    return True


@dataclass
class LcpEnumeration:
    """All complementary solutions found by support enumeration.

    Iterable over (u, w, z) triples; supports whose subsystem was singular
    are skipped and recorded by bitmask.
    """

    triples: list = field(default_factory=list)
    skipped_supports: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.triples)

    def __len__(self):
        return len(self.triples)

    def solutions(self) -> list[np.ndarray]:
        return [z for _, _, z in self.triples]


def lcp_solve_enum(lcp: LcpData, limit: int = 16) -> LcpEnumeration:
    """Enumerate supports B: w free on B, u free off B, solve, keep feasible.

    Every returned z = u - w verifies against the source system to
    1e-9 * scale; nearly identical z from adjacent supports collapse.
    """
    s = lcp.q.size
    if s > limit:
        raise TooLarge(f"s = {s} exceeds the enumeration limit {limit}")
    out = LcpEnumeration()
    scale = max(scale_of(lcp.source.c_hat), scale_of(lcp.q))
    feas_tol = 1e-10 * scale
    for mask in range(2**s):
        support = [i for i in range(s) if (mask >> i) & 1]
        free = np.zeros(s)
        if support:
            sub = lcp.M[np.ix_(support, support)]
            if abs(np.linalg.det(sub)) <= 1e-14 * scale_of(sub):
                out.skipped_supports.append(mask)
                continue
            try:
                free[support] = np.linalg.solve(sub, -lcp.q[support])
            except np.linalg.LinAlgError:
                out.skipped_supports.append(mask)
                continue
        other = lcp.q + lcp.M @ free
        if np.min(free, initial=0.0) < -feas_tol or np.min(other, initial=0.0) < -feas_tol:
            continue
        if lcp.role_swapped:
            u, w = free, other
        else:
            u, w = other, free
        z = u - w
        if np.max(np.abs(h_eval(lcp.source, z) - lcp.source.c_hat), initial=0.0) > 1e-9 * scale:
            continue
        if all(np.max(np.abs(z - kept), initial=0.0) > 1e-9 * scale for _, _, kept in out.triples):
            out.triples.append((u.copy(), w.copy(), z))
    return out
