"""Piecewise linear maps in abs-normal form.

A continuous piecewise linear function F: R^n -> R^m is stored as the data
(c, b, Z, L, J, Y) with L strictly lower triangular, defining

    z = c + Z x + L |z|        (s switching variables, resolved forward)
    y = b + J x + Y |z|

This module owns the representation itself: evaluation, signatures,
switching depth, per-piece Jacobians, signature resolution at kinks via
polynomial probing, and the identity-shift trick that makes the smooth
part J nonsingular without changing the function.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from ._util import as_float_array, freeze, scale_of, sign_vector
from .errors import BasisSingular, DegenerateSwitch, SingularShift

__all__ = [
    "AbsNormalForm",
    "Signature",
    "EvalRecord",
    "PieceJacobian",
    "ValidationReport",
    "validate",
    "evaluate",
    "piece_jacobian",
    "polynomial_escape",
    "regularize_smooth_part",
]

# Entries at or below 1e-14 * scale are treated as exact zeros when reading
# signs off polynomial coefficients.
_COEF_ZERO_RTOL = 1e-14


@dataclass(frozen=True)
class Signature:
    """Sign vector sigma in {-1, 0, +1}^s selecting a linear piece."""

    sigma: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.sigma)
        if arr.ndim != 1:
            raise ValueError("signature must be a vector")
        if arr.size and not np.all(np.isin(arr, (-1, 0, 1))):
            raise ValueError("signature entries must be -1, 0 or +1")
        object.__setattr__(self, "sigma", freeze(arr.astype(np.int8)))

    @property
    def s(self) -> int:
        return self.sigma.size

    @property
    def definite(self) -> bool:
        """True when no entry is zero."""
        return bool(np.all(self.sigma != 0))

    def diag(self) -> np.ndarray:
        """The diagonal matrix Sigma = diag(sigma) as float64."""
        return np.diag(self.sigma.astype(float))

    def definite_or_plus(self) -> "Signature":
        """Copy with zeros mapped to +1 (the solver convention)."""
        return Signature(sign_vector(self.sigma, zeros_to_plus=True))

    def __iter__(self):
        return iter(self.sigma)

    def __eq__(self, other):
        if isinstance(other, Signature):
            return np.array_equal(self.sigma, other.sigma)
        return NotImplemented

    def __hash__(self):
        return hash(self.sigma.tobytes())

    def __str__(self):
        return "".join("+" if v > 0 else "-" if v < 0 else "0" for v in self.sigma)


@dataclass(frozen=True)
class AbsNormalForm:
    """The six-tuple (c, b, Z, L, J, Y); immutable, dense binary64."""

    c: np.ndarray
    b: np.ndarray
    Z: np.ndarray
    L: np.ndarray
    J: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        c = as_float_array(self.c, "c")
        b = as_float_array(self.b, "b")
        if c.ndim != 1 or b.ndim != 1:
            raise ValueError("c and b must be vectors")
        s, m = c.size, b.size
        Z = as_float_array(self.Z, "Z")
        if Z.ndim != 2 or Z.shape[0] != s:
            raise ValueError(f"Z must be s x n with s={s}, got {Z.shape}")
        n = Z.shape[1]
        L = as_float_array(self.L, "L", (s, s))
        J = as_float_array(self.J, "J", (m, n))
        Y = as_float_array(self.Y, "Y", (m, s))
        for name, arr in (("c", c), ("b", b), ("Z", Z), ("L", L), ("J", J), ("Y", Y)):
            object.__setattr__(self, name, freeze(arr))

    @property
    def n(self) -> int:
        return self.Z.shape[1]

    @property
    def s(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size

    @cached_property
    def switching_depth(self) -> int:
        """Smallest nu with L^nu = 0, taken on the sparsity pattern of L.

        Equivalent to one plus the longest chain in the dependency DAG of
        the switching variables, so incidental numeric cancellation in
        powers of L cannot lower it.  nu = 0 exactly when s = 0.
        """
        return switching_depth_of(self.L)

    def scale(self) -> float:
        return scale_of(self.c, self.b, self.Z, self.L, self.J, self.Y)

    def with_target(self, y_target) -> "AbsNormalForm":
        """Fold a target value into b, so roots solve F(x) = y_target."""
        y_target = as_float_array(y_target, "y_target", (self.m,))
        return AbsNormalForm(self.c, self.b - y_target, self.Z, self.L, self.J, self.Y)


def switching_depth_of(L: np.ndarray) -> int:
    """Nilpotency index of the strictly-lower-triangular pattern of L."""
    s = L.shape[0]
    if s == 0:
        return 0
    pattern = np.tril(L, -1) != 0
    level = np.ones(s, dtype=np.int64)
    for i in range(s):
        deps = np.nonzero(pattern[i, :i])[0]
        if deps.size:
            level[i] = 1 + level[deps].max()
    return int(level.max())


@dataclass(frozen=True)
class EvalRecord:
    """One evaluation of the form: inputs, switching values, outputs, signs."""

    x: np.ndarray
    z: np.ndarray
    z_abs: np.ndarray
    y: np.ndarray
    sigma: Signature


@dataclass(frozen=True)
class PieceJacobian:
    """The Jacobian J_sigma = J + Y Sigma (I - L Sigma)^{-1} Z of one piece."""

    sigma: Signature
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", freeze(as_float_array(self.matrix, "matrix")))


@dataclass
class ValidationReport:
    ok: bool
    nu: int
    messages: list = field(default_factory=list)


def validate(form: AbsNormalForm) -> ValidationReport:
    """Check the structural invariants and report the switching depth.

    Failures are collected as messages rather than raised; dimensional
    consistency is already enforced by the constructor.
    """
    messages = []
    for name in ("c", "b", "Z", "L", "J", "Y"):
        arr = getattr(form, name)
        if arr.size and not np.all(np.isfinite(arr)):
            messages.append(f"{name} contains non-finite entries")
    upper = np.triu(form.L)
    if form.s and np.any(upper != 0):
        i, j = np.argwhere(upper != 0)[0]
        messages.append(f"L is not strictly lower triangular (L[{i},{j}] != 0)")
    nu = switching_depth_of(form.L)
    return ValidationReport(ok=not messages, nu=nu, messages=messages)


def evaluate(form: AbsNormalForm, x) -> EvalRecord:
    """Evaluate F at x by forward substitution through the switching rows."""
    x = as_float_array(x, "x", (form.n,))
    s = form.s
    z = np.zeros(s)
    z_abs = np.zeros(s)
    zx = form.c + form.Z @ x if s else np.zeros(0)
    for i in range(s):
        zi = zx[i] + form.L[i, :i] @ z_abs[:i]
        z[i] = zi
        z_abs[i] = abs(zi)
    y = form.b + form.J @ x + form.Y @ z_abs
    return EvalRecord(x=freeze(x), z=freeze(z), z_abs=freeze(z_abs), y=freeze(y),
                      sigma=Signature(sign_vector(z)))


def _inner_solve(form: AbsNormalForm, sigma: np.ndarray) -> np.ndarray:
    """(I - L Sigma)^{-1} Z via a unit-lower-triangular solve."""
    if form.s == 0:
        return np.zeros((0, form.n))
    K = np.eye(form.s) - form.L * sigma[None, :]
    return scipy.linalg.solve_triangular(K, form.Z, lower=True, unit_diagonal=True)


def _inner_neumann(form: AbsNormalForm, sigma: np.ndarray) -> np.ndarray:
    """(I - L Sigma)^{-1} Z via the finite Neumann sum; exact by nilpotency."""
    if form.s == 0:
        return np.zeros((0, form.n))
    term = form.Z.copy()
    acc = form.Z.copy()
    for _ in range(1, form.switching_depth):
        term = form.L @ (sigma[:, None] * term)
        acc += term
    return acc


def piece_jacobian(form: AbsNormalForm, sigma: Signature, method: str = "solve") -> PieceJacobian:
    """Jacobian of the piece selected by sigma.

    The formula is literal in sigma, so indefinite signatures are allowed
    (zeros simply enter the diagonal as 0).  `method` picks how the inner
    inverse is applied: "solve" (triangular substitution) or "neumann"
    (the finite power sum); the two agree to rounding.
    """
    if sigma.s != form.s:
        raise ValueError(f"signature has {sigma.s} entries, form has s={form.s}")
    sig = np.asarray(sigma.sigma, dtype=float)
    if method == "solve":
        W = _inner_solve(form, sig)
    elif method == "neumann":
        W = _inner_neumann(form, sig)
    else:
        raise ValueError(f"unknown method {method!r}")
    matrix = form.J + form.Y @ (sig[:, None] * W)
    return PieceJacobian(sigma=sigma, matrix=matrix)


def _complete_basis(d: np.ndarray) -> np.ndarray:
    """Columns [d, e_2, e_3, ...] patched to a nonsingular basis.

    Position 1 holds d; later positions prefer the standard basis vector of
    the same index and fall back to any unused one that keeps the columns
    independent.
    """
    n = d.size
    norm_d = np.linalg.norm(d)
    if norm_d == 0 or not np.all(np.isfinite(d)):
        raise BasisSingular("direction must be nonzero and finite")
    cols = [d]
    q = [d / norm_d]
    candidates = list(range(1, n)) + [0]
    for idx in candidates:
        if len(cols) == n:
            break
        e = np.zeros(n)
        e[idx] = 1.0
        r = e - sum((qk @ e) * qk for qk in q)
        if np.linalg.norm(r) > 1e-12:
            cols.append(e)
            q.append(r / np.linalg.norm(r))
    if len(cols) != n:
        raise BasisSingular("could not complete the direction to a basis")
    return np.column_stack(cols)


def _leading_sign(coefs: np.ndarray) -> int:
    """Sign of the first coefficient that is not negligibly small."""
    tol = _COEF_ZERO_RTOL * scale_of(coefs)
    for a in coefs:
        if abs(a) > tol:
            return 1 if a > 0 else -1
    return 0


def polynomial_escape(form: AbsNormalForm, x, d=None) -> tuple[Signature, PieceJacobian]:
    """Resolve the signature of an open piece whose closure contains x.

    Probes along the curve x(t) = x + sum_i e_hat_i t^i, whose image cannot
    stay inside the kink set for small t > 0.  Every switching value is
    carried as a degree-n polynomial in t and each absolute value is
    resolved by the sign of its first nonzero coefficient, so the result is
    exact for the given data.  When d is supplied it becomes the leading
    basis vector, placing the resolved piece in a cone around d.

    Returns the signature and its piece Jacobian.  A zero signature entry
    means the switching value is identically zero along the curve; this is
    reported with a DegenerateSwitch warning.
    """
    x = as_float_array(x, "x", (form.n,))
    n, s = form.n, form.s
    if d is None:
        basis = np.eye(n)
    else:
        basis = _complete_basis(as_float_array(d, "d", (n,)))

    # coefs[i, k] = coefficient of t^k in z_i(t); abs() keeps the degree.
    signs = np.zeros(s, dtype=np.int8)
    coefs = np.zeros((s, n + 1))
    degree_cols = form.Z @ basis if s else np.zeros((0, n))
    for i in range(s):
        row = np.zeros(n + 1)
        row[0] = form.c[i] + form.Z[i] @ x
        row[1:] = degree_cols[i]
        for j in range(i):
            lij = form.L[i, j]
            if lij:
                row += lij * signs[j] * coefs[j]
        coefs[i] = row
        signs[i] = _leading_sign(row)

    sigma = Signature(signs)
    if s and not sigma.definite:
        warnings.warn("switching value identically zero along the probe path",
                      DegenerateSwitch, stacklevel=2)
    return sigma, piece_jacobian(form, sigma)


def regularize_smooth_part(form: AbsNormalForm, alpha: float | None = None) -> AbsNormalForm:
    """Shift J to J + alpha*I without changing the function.

    Each coordinate x_j gains a switch pair z_a = x_j, z_b = |z_a| + z_a;
    since |z_b| - |z_a| = x_j identically, output entries alpha*(|z_a| -
    |z_b|) cancel the added alpha*x_j.  The default alpha = 1 + max-row-sum
    of J exceeds the spectral radius of -J, so the shifted matrix is
    guaranteed nonsingular without any eigenvalue computation.

    Requires m = n.  alpha = 0 returns the form unchanged (after checking
    J itself is usable).
    """
    if form.m != form.n:
        raise ValueError("regularization needs a square smooth part (m = n)")
    n, s = form.n, form.s
    if alpha is None:
        alpha = 1.0 + float(np.max(np.abs(form.J).sum(axis=1))) if n else 1.0
    Jp = form.J + alpha * np.eye(n)
    if n and np.linalg.cond(Jp) > 1e14:
        raise SingularShift(f"J + {alpha}*I is numerically singular")
    if alpha == 0.0:
        return form

    c2 = np.concatenate([form.c, np.zeros(2 * n)])
    Z2 = np.zeros((s + 2 * n, n))
    Z2[:s] = form.Z
    L2 = np.zeros((s + 2 * n, s + 2 * n))
    L2[:s, :s] = form.L
    Y2 = np.zeros((n, s + 2 * n))
    Y2[:, :s] = form.Y
    for j in range(n):
        a, bb = s + 2 * j, s + 2 * j + 1
        Z2[a, j] = 1.0   # z_a = x_j
        Z2[bb, j] = 1.0  # z_b = x_j + |z_a|
        L2[bb, a] = 1.0
        Y2[j, a] = alpha
        Y2[j, bb] = -alpha
    return AbsNormalForm(c=c2, b=form.b, Z=Z2, L=L2, J=Jp, Y=Y2)
