"""The complementary system H(z) = z - S|z| = c_hat.

Eliminating the independents x from an abs-normal form (possible whenever
the smooth part J is nonsingular) leaves a simply switched system in the
switching variables alone.  This module holds that system, the transfer
maps between x-space and z-space, the absolute value equation obtained by
inverting S, and the exhaustive all-sign-patterns solution oracle used to
verify every iterative solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import as_float_array, freeze, scale_of, sign_stack
from .analysis import schur
from .core import AbsNormalForm
from .errors import SingularS, SingularSmoothPart, TooLarge

__all__ = [
    "CplSystem",
    "reduce_form",
    "form_from_cpl",
    "h_eval",
    "x_from_z",
    "z_from_x",
    "brute_force_solutions",
    "ave_form",
]

_COND_LIMIT = 1e14


@dataclass(frozen=True)
class CplSystem:
    """S and c_hat defining H(z) = z - S|z| = c_hat."""

    S: np.ndarray
    c_hat: np.ndarray
    provenance: str = "direct"   # "direct" | "reduced"

    def __post_init__(self):
        S = as_float_array(self.S, "S")
        S = np.atleast_2d(S)
        c_hat = as_float_array(self.c_hat, "c_hat")
        if c_hat.ndim != 1 or S.shape != (c_hat.size, c_hat.size):
            raise ValueError(f"S must be s x s matching c_hat, got {S.shape} vs {c_hat.shape}")
        object.__setattr__(self, "S", freeze(S))
        object.__setattr__(self, "c_hat", freeze(c_hat))

    @property
    def s(self) -> int:
        return self.c_hat.size

    def scale(self) -> float:
        return scale_of(self.c_hat)


def reduce_form(form: AbsNormalForm, y_target=None) -> CplSystem:
    """Schur-reduce a form to its complementary system."""
    sd = schur(form, y_target)
    return CplSystem(S=sd.S, c_hat=sd.c_hat, provenance="reduced")


def form_from_cpl(sys: CplSystem) -> AbsNormalForm:
    """Embed H as an abs-normal form with Z = J = I, L = 0, Y = -S, c = c_hat.

    Roots x* of the embedded form satisfy x* = z* - c_hat for CPL solutions
    z*; the embedding preserves both S and c_hat under re-reduction.
    """
    s = sys.s
    return AbsNormalForm(c=sys.c_hat, b=np.zeros(s), Z=np.eye(s),
                         L=np.zeros((s, s)), J=np.eye(s), Y=-sys.S)


def h_eval(sys: CplSystem, z) -> np.ndarray:
    """H(z) = z - S|z|, which equals (I - S Sigma(z)) z exactly."""
    z = as_float_array(z, "z", (sys.s,))
    return z - sys.S @ np.abs(z)


def x_from_z(form: AbsNormalForm, z) -> np.ndarray:
    """x = -J^{-1}(b + Y|z|)."""
    z = as_float_array(z, "z", (form.s,))
    if form.m != form.n:
        raise ValueError("x recovery needs m = n")
    if form.n == 0:
        return np.zeros(0)
    if np.linalg.cond(form.J) > _COND_LIMIT:
        raise SingularSmoothPart("smooth part J is numerically singular")
    return -np.linalg.solve(form.J, form.b + form.Y @ np.abs(z))


def z_from_x(form: AbsNormalForm, x) -> np.ndarray:
    """z = G^{-1}(c + Z x) with G(z) = z - L|z|, by forward substitution."""
    x = as_float_array(x, "x", (form.n,))
    u = form.c + form.Z @ x
    z = np.zeros(form.s)
    for i in range(form.s):
        z[i] = u[i] + form.L[i, :i] @ np.abs(z[:i])
    return z


def _solve_or_nan(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError:
        return np.full(rhs.size, np.nan)


def brute_force_solutions(sys: CplSystem, limit: int = 16) -> list[np.ndarray]:
    """Every solution of H(z) = c_hat, by enumerating all definite signs.

    For each Sigma with det(I - S Sigma) != 0 the candidate solves the
    linear piece; it is kept when componentwise sign-consistent (boundary
    slack 1e-10 * scale admits zero components from either side) and its
    residual verifies.  Near-duplicates from adjacent patterns collapse.
    """
    s = sys.s
    if s > limit:
        raise TooLarge(f"s = {s} exceeds the enumeration limit {limit}")
    if s == 0:
        return [np.zeros(0)]
    scale = sys.scale()
    patterns = sign_stack(s)
    eye = np.eye(s)
    solutions: list[np.ndarray] = []
    chunk = 4096
    for lo in range(0, patterns.shape[0], chunk):
        sig = patterns[lo:lo + chunk]
        mats = eye[None, :, :] - sys.S[None, :, :] * sig[:, None, :]
        dets = np.linalg.det(mats)
        ok = np.abs(dets) > 1e-14 * scale_of(mats)
        if not np.any(ok):
            continue
        rhs = np.broadcast_to(sys.c_hat[:, None], (int(ok.sum()), s, 1))
        try:
            z = np.linalg.solve(mats[ok], rhs)[:, :, 0]
        except np.linalg.LinAlgError:
            z = np.array([_solve_or_nan(mat, sys.c_hat) for mat in mats[ok]])
        consistent = np.all(sig[ok] * z >= -1e-10 * scale, axis=1)
        for cand in z[consistent]:
            if np.max(np.abs(h_eval(sys, cand) - sys.c_hat)) > 1e-9 * scale:
                continue
            if all(np.max(np.abs(cand - kept)) > 1e-9 * scale for kept in solutions):
                solutions.append(cand.copy())
    return solutions


def ave_form(sys: CplSystem) -> tuple[np.ndarray, np.ndarray]:
    """Rewrite as the absolute value equation A z - |z| = b_hat, A = S^{-1}."""
    if sys.s == 0 or np.linalg.cond(sys.S) > _COND_LIMIT:
        raise SingularS("S is singular; the AVE form needs S^{-1}")
    A = np.linalg.inv(sys.S)
    return A, A @ sys.c_hat
