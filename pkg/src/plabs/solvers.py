"""Iterative and direct solvers for the original and complementary systems.

Five families: the modulus fixed point iteration and Block Seidel
(linearly convergent under their norm certificates), full-step generalized
Newton on the complementary system and on the original system (finitely
convergent under contractivity, otherwise prone to cycling through sign
patterns), and signed Gaussian elimination (a direct method fixing one
switching sign per stage from the dominant right-hand-side component).

Every solver records a SolveTrace with per-iterate residual norms and, for
the Newton variants, the visited signatures; convergence is always
re-verified from the returned point, independent of the iteration's own
bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import scale_of, sign_vector, sigma_to_mask
from .core import AbsNormalForm, Signature, evaluate, piece_jacobian, polynomial_escape
from .cpl import CplSystem, h_eval, x_from_z, z_from_x
from .analysis import schur
from .errors import PivotBreakdown, SingularPiece

__all__ = [
    "SolveTrace",
    "modulus",
    "block_seidel",
    "newton_cpl",
    "newton_opl",
    "signed_ge",
]

DEFAULT_TOL = 1e-10
_DIVERGE_FACTOR = 1e8
_EXACT_RTOL = 1e-12
_DEFAULT_RETAIN = 10_000


def _default_maxit(s: int) -> int:
    return 10 * s + 100


@dataclass
class SolveTrace:
    """History and terminal status of one solver run.

    status is one of "converged", "cycled", "diverged", "maxiter";
    `exact` qualifies a converged run whose verified residual is at
    rounding level, `period` the length of a detected cycle.  The residual
    list always has one entry per iterate including the start.
    """

    status: str = "maxiter"
    iterations: int = 0
    exact: bool = False
    period: int | None = None
    residual_norms: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    sigma_history: list = field(default_factory=list)
    z: np.ndarray | None = None
    x: np.ndarray | None = None
    verified_residual: float | None = None
    flops: int = 0
    retain: int = _DEFAULT_RETAIN

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def _keep(self, point: np.ndarray) -> None:
        if len(self.iterates) < self.retain:
            self.iterates.append(point.copy())


def _sigma_key(sigma: np.ndarray) -> object:
    if sigma.size <= 64:
        return sigma_to_mask(sigma)
    return sigma.tobytes()


def modulus(sys: CplSystem, z0=None, tol: float = DEFAULT_TOL,
            maxit: int | None = None, retain: int = _DEFAULT_RETAIN) -> SolveTrace:
    """Fixed point iteration z <- c_hat + S|z|.

    Certified to converge for any start when some p-norm of S is below 1;
    the certificate is advisory, nonconvergence shows up as a diverged or
    exhausted trace.  The step equals the negative residual, so the
    stopping test reads the residual at the current iterate.
    """
    if maxit is None:
        maxit = _default_maxit(sys.s)
    z = np.zeros(sys.s) if z0 is None else np.array(z0, dtype=float)
    scale = 1.0 + float(np.max(np.abs(sys.c_hat), initial=0.0))
    trace = SolveTrace(retain=retain)
    trace._keep(z)
    while True:
        step = sys.c_hat + sys.S @ np.abs(z) - z
        res = float(np.max(np.abs(step), initial=0.0))
        trace.residual_norms.append(res)
        if res <= tol * scale:
            trace.status = "converged"
            break
        if np.max(np.abs(z), initial=0.0) > _DIVERGE_FACTOR * scale:
            trace.status = "diverged"
            break
        if trace.iterations >= maxit:
            trace.status = "maxiter"
            break
        z = z + step
        trace.iterations += 1
        trace._keep(z)
    trace.z = z
    trace.verified_residual = float(np.max(np.abs(h_eval(sys, z) - sys.c_hat), initial=0.0))
    trace.exact = trace.converged and trace.verified_residual <= _EXACT_RTOL * scale
    return trace


def block_seidel(form: AbsNormalForm, z0=None, tol: float = DEFAULT_TOL,
                 maxit: int | None = None, retain: int = _DEFAULT_RETAIN) -> SolveTrace:
    """Alternate the transfer maps: z <- z(x(z)).

    Certified under ||S - L||_p + ||L||_p < 1.  Converged runs also carry
    the recovered x* and its verified F-residual.
    """
    if maxit is None:
        maxit = _default_maxit(form.s)
    sd = schur(form)  # also validates J; provides c_hat for scaling
    sys = CplSystem(S=sd.S, c_hat=sd.c_hat, provenance="reduced")
    z = np.zeros(form.s) if z0 is None else np.array(z0, dtype=float)
    scale = 1.0 + float(np.max(np.abs(sd.c_hat), initial=0.0))
    trace = SolveTrace(retain=retain)
    trace._keep(z)
    while True:
        trace.residual_norms.append(
            float(np.max(np.abs(h_eval(sys, z) - sd.c_hat), initial=0.0)))
        x = x_from_z(form, z)
        z_next = z_from_x(form, x)
        step = float(np.max(np.abs(z_next - z), initial=0.0))
        if step <= tol * scale:
            trace.status = "converged"
            break
        if np.max(np.abs(z), initial=0.0) > _DIVERGE_FACTOR * scale:
            trace.status = "diverged"
            break
        if trace.iterations >= maxit:
            trace.status = "maxiter"
            break
        z = z_next
        trace.iterations += 1
        trace._keep(z)
    trace.z = z
    trace.x = x_from_z(form, z)
    trace.verified_residual = float(np.max(np.abs(evaluate(form, trace.x).y), initial=0.0))
    trace.exact = trace.converged and trace.verified_residual <= _EXACT_RTOL * scale
    return trace


def newton_cpl(sys: CplSystem, z0=None, maxit: int | None = None,
               retain: int = _DEFAULT_RETAIN) -> SolveTrace:
    """Full-step generalized Newton on H(z) = c_hat.

    Each step solves (I - S Sigma) z = c_hat for the current signature, so
    the iterate depends only on sign(z) (zeros mapped to +1) and the run
    walks the sign-transition automaton.  Revisiting a signature with a
    nonzero residual means the iteration cycles; the period is reported.
    `iterations` counts automaton transitions: a solve that reproduces its
    own input signature has entered the terminal piece and replaces that
    vertex's iterate with the exact in-piece solution instead of counting
    again.  Finite convergence is certified for ||S||_p < 1/3, and within
    at most s transitions for rho(|S|) < 1/2.
    """
    if maxit is None:
        maxit = _default_maxit(sys.s)
    z = np.zeros(sys.s) if z0 is None else np.array(z0, dtype=float)
    scale = 1.0 + float(np.max(np.abs(sys.c_hat), initial=0.0))
    eye = np.eye(sys.s)
    trace = SolveTrace(retain=retain)
    trace._keep(z)
    seen: dict[object, int] = {}
    while True:
        res = float(np.max(np.abs(h_eval(sys, z) - sys.c_hat), initial=0.0))
        trace.residual_norms.append(res)
        sigma = sign_vector(z, zeros_to_plus=True)
        trace.sigma_history.append(Signature(sigma))
        if res <= _EXACT_RTOL * scale:
            trace.status = "converged"
            trace.exact = True
            break
        key = _sigma_key(sigma)
        if key in seen:
            trace.status = "cycled"
            trace.period = len(trace.sigma_history) - 1 - seen[key]
            break
        seen[key] = len(trace.sigma_history) - 1
        if trace.iterations >= maxit:
            trace.status = "maxiter"
            break
        K = eye - sys.S * sigma.astype(float)[None, :]
        try:
            z_next = np.linalg.solve(K, sys.c_hat)
        except np.linalg.LinAlgError as exc:
            raise SingularPiece(f"singular piece at signature {Signature(sigma)}") from exc
        if not np.all(np.isfinite(z_next)):
            raise SingularPiece(f"singular piece at signature {Signature(sigma)}")
        if np.array_equal(sign_vector(z_next, zeros_to_plus=True), sigma):
            # the solve confirmed its own signature: same automaton vertex,
            # now with the exact in-piece values
            z = z_next
            if len(trace.iterates) == len(trace.residual_norms):
                trace.iterates[-1] = z.copy()
            res = float(np.max(np.abs(h_eval(sys, z) - sys.c_hat), initial=0.0))
            trace.residual_norms[-1] = res
            trace.status = "converged"
            trace.exact = res <= _EXACT_RTOL * scale
            break
        z = z_next
        trace.iterations += 1
        trace._keep(z)
    trace.z = z
    trace.verified_residual = float(np.max(np.abs(h_eval(sys, z) - sys.c_hat), initial=0.0))
    return trace


def newton_opl(form: AbsNormalForm, x0=None, maxit: int | None = None,
               use_escape: bool = False, tol: float = DEFAULT_TOL,
               retain: int = _DEFAULT_RETAIN) -> SolveTrace:
    """Full-step generalized Newton on F(x) = 0.

    The signature comes from sign(z(x)) with zeros mapped to +1, or from a
    polynomial escape probe when requested; only the piece Jacobian is
    solved, so a singular smooth part J is fine.  On each piece the update
    depends only on the signature, so signature recurrence with a nonzero
    residual is reported as a cycle.
    """
    if form.m != form.n:
        raise ValueError("Newton on the original system needs m = n")
    if maxit is None:
        maxit = _default_maxit(form.s)
    x = np.zeros(form.n) if x0 is None else np.array(x0, dtype=float)
    scale = scale_of(form.b)
    trace = SolveTrace(retain=retain)
    trace._keep(x)
    seen: dict[object, int] = {}
    res0 = None
    while True:
        rec = evaluate(form, x)
        res = float(np.max(np.abs(rec.y), initial=0.0))
        trace.residual_norms.append(res)
        res0 = res if res0 is None else res0
        if use_escape:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                sig_obj, _ = polynomial_escape(form, x)
            sigma = sign_vector(sig_obj.sigma, zeros_to_plus=True)
        else:
            sigma = sign_vector(rec.z, zeros_to_plus=True)
        trace.sigma_history.append(Signature(sigma))
        if res <= tol * scale:
            trace.status = "converged"
            trace.exact = res <= _EXACT_RTOL * scale
            break
        key = _sigma_key(sigma)
        if key in seen:
            trace.status = "cycled"
            trace.period = len(trace.sigma_history) - 1 - seen[key]
            break
        seen[key] = len(trace.sigma_history) - 1
        if res > _DIVERGE_FACTOR * (1.0 + res0):
            trace.status = "diverged"
            break
        if trace.iterations >= maxit:
            trace.status = "maxiter"
            break
        J_sig = piece_jacobian(form, Signature(sigma)).matrix
        try:
            dx = np.linalg.solve(J_sig, rec.y)
        except np.linalg.LinAlgError as exc:
            raise SingularPiece(f"singular piece at signature {Signature(sigma)}") from exc
        if not np.all(np.isfinite(dx)):
            raise SingularPiece(f"singular piece at signature {Signature(sigma)}")
        x = x - dx
        trace.iterations += 1
        trace._keep(x)
    trace.x = x
    trace.verified_residual = float(np.max(np.abs(evaluate(form, x).y), initial=0.0))
    return trace


def signed_ge(sys: CplSystem) -> tuple[np.ndarray, SolveTrace]:
    """Signed Gaussian elimination on z = c_hat + S|z|.

    Each stage fixes the sign of the absolutely largest remaining
    right-hand-side component (ties break to the smallest index), scales
    that pivot row and rank-one updates the rest; back-substitution then
    recovers |z| and the recorded signs give z.  Under rho(|S|) < 1/2 the
    fixed signs are provably correct and the work stays within s^3/3
    fused multiply-adds (tracked in the trace).
    """
    s = sys.s
    scale = 1.0 + float(np.max(np.abs(sys.c_hat), initial=0.0))
    St = np.array(sys.S, dtype=float)
    ct = np.array(sys.c_hat, dtype=float)
    active = list(range(s))
    # per pivot: (index, sign, denominator, row over later actives, c value)
    stages: list[tuple[int, float, float, np.ndarray, float, list]] = []
    flops = 0
    zero_tail: list[int] = []
    while active:
        local = int(np.argmax(np.abs(ct[active])))
        pivot = active[local]
        c_piv = ct[pivot]
        if c_piv == 0.0:
            zero_tail = list(active)
            break
        sgn = 1.0 if c_piv > 0 else -1.0
        denom = sgn - St[pivot, pivot]
        if abs(denom) < 1e-12:
            raise PivotBreakdown(f"pivot {pivot}: |sigma - s_ii| below threshold")
        rest = [i for i in active if i != pivot]
        row = St[pivot, rest].copy()
        stages.append((pivot, sgn, denom, row, c_piv, rest))
        if rest:
            inv_denom = 1.0 / denom
            col = St[rest, pivot] * inv_denom
            ct[rest] += col * c_piv
            St[np.ix_(rest, rest)] += np.outer(col, row)
            flops += len(rest) * len(rest) + 2 * len(rest)
        active = rest

    z_abs = np.zeros(s)
    for i in zero_tail:
        z_abs[i] = 0.0
    sign_out = np.ones(s)
    for pivot, sgn, denom, row, c_piv, rest in reversed(stages):
        val = (c_piv + row @ z_abs[rest]) / denom if rest else c_piv / denom
        flops += len(rest)
        z_abs[pivot] = val
        sign_out[pivot] = sgn
    z = sign_out * z_abs

    trace = SolveTrace(status="converged", iterations=0, flops=flops)
    trace.sigma_history.append(Signature(sign_vector(sign_out)))
    trace.z = z
    trace.verified_residual = float(np.max(np.abs(h_eval(sys, z) - sys.c_hat), initial=0.0))
    trace.residual_norms.append(trace.verified_residual)
    trace.exact = trace.verified_residual <= _EXACT_RTOL * scale
    if not trace.exact and trace.verified_residual > DEFAULT_TOL * scale:
        trace.status = "diverged"  # sign guesses inconsistent outside the certificate
    return z, trace
