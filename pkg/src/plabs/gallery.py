"""Named example instances and the rosette sector evaluator.

Families
--------
one_d_kink(zeta)   scalar map x - |x - zeta| + |x + zeta|; its middle piece
                   has slope -1 for zeta < 0 and slope 3 for zeta > 0 (the
                   slopes (1,-1,1) / (1,3,1) follow by direct case split).
schueth(eps)       the even planar map (|x1+eps| - |x2+eps|,
                   |x1+x2|/2 - |x1-x2|/2); coherently oriented only at
                   eps = 0 and never injective there.
rump(n)            complementary system with the dense +-0.9 sign matrix;
                   sign real spectral radius 0.9 while every scaled p-norm
                   grows like 0.9 (n-1).
cyclic(s, a)       the cyclic shift scaled by a; Newton on the
                   complementary system cycles through one-negative
                   patterns for a slightly above 1/2.
reflector()        scaled elementary reflector in dimension 9; 2-norm 0.3
                   but rho(|S|) = 1.6/3.
tridiag_max(n)     Tx + max(x, 0) = rhs with the second-difference stencil.
random(...)        reproducible random forms with the Schur complement
                   rescaled to a requested norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import as_float_array
from .analysis import operator_norm, pf_equilibrate, schur
from .core import AbsNormalForm
from .cpl import CplSystem
from .errors import BadAngles, BadParams, Unclassified, UnknownExample

__all__ = [
    "one_d_kink",
    "schueth",
    "rump",
    "cyclic",
    "reflector",
    "tridiag_max",
    "random_form",
    "generate",
    "rosette_eval",
    "rosette_classify",
    "RosetteReport",
]


def one_d_kink(zeta: float) -> AbsNormalForm:
    """x - |x - zeta| + |x + zeta| on the line (n = 1, s = 2)."""
    zeta = float(zeta)
    return AbsNormalForm(c=[-zeta, zeta], b=[0.0], Z=[[1.0], [1.0]],
                         L=np.zeros((2, 2)), J=[[1.0]], Y=[[-1.0, 1.0]])


def schueth(eps: float = 0.0) -> AbsNormalForm:
    """(|x1+eps| - |x2+eps|, |x1+x2|/2 - |x1-x2|/2); even for eps = 0."""
    eps = float(eps)
    return AbsNormalForm(
        c=[eps, eps, 0.0, 0.0],
        b=[0.0, 0.0],
        Z=[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]],
        L=np.zeros((4, 4)),
        J=np.zeros((2, 2)),
        Y=[[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 0.5, -0.5]],
    )


def rump(n: int, c_hat=None) -> CplSystem:
    """S = 0.9 * sign(j - i); defaults the right-hand side to sin(1..n)."""
    if n < 1:
        raise BadParams("rump needs n >= 1")
    i = np.arange(1, n + 1)
    S = 0.9 * np.sign(i[None, :] - i[:, None])
    if c_hat is None:
        c_hat = np.sin(i.astype(float))
    return CplSystem(S=S, c_hat=c_hat)


def cyclic(s: int, a: float, c_hat=None) -> CplSystem:
    """a times the cyclic shift; right-hand side defaults to all ones."""
    if s < 2:
        raise BadParams("cyclic needs s >= 2")
    S = np.zeros((s, s))
    S[0, s - 1] = a
    for i in range(1, s):
        S[i, i - 1] = a
    if c_hat is None:
        c_hat = np.ones(s)
    return CplSystem(S=S, c_hat=c_hat)


def reflector(c_hat=None) -> CplSystem:
    """0.3 (I - e e^T / 9) in dimension 9."""
    e = np.ones(9)
    S = 0.3 * (np.eye(9) - np.outer(e, e) / 9.0)
    if c_hat is None:
        c_hat = e.copy()
    return CplSystem(S=S, c_hat=c_hat)


def tridiag_max(n: int, rhs=None) -> AbsNormalForm:
    """T x + max(x, 0) = rhs with T = tridiag(-1, 2, -1), as a form.

    max(x, 0) = (x + |x|)/2 gives c = 0, Z = I, L = 0, J = T + I/2,
    Y = I/2 and b = -rhs; the Schur complement is -(I + 2T)^{-1}.
    """
    if n < 1:
        raise BadParams("tridiag_max needs n >= 1")
    T = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    if rhs is None:
        rhs = np.sin(np.arange(1, n + 1, dtype=float))
    rhs = as_float_array(rhs, "rhs", (n,))
    return AbsNormalForm(c=np.zeros(n), b=-rhs, Z=np.eye(n), L=np.zeros((n, n)),
                         J=T + 0.5 * np.eye(n), Y=0.5 * np.eye(n))


def random_form(n: int, s: int, seed: int = 0, target_norm: float | None = None,
                target_kind: str = "norm2", l_density: float = 0.5) -> AbsNormalForm:
    """Reproducible random form, optionally rescaled so that the Schur
    complement hits a requested 2-norm or rho(|S|).

    Rescaling multiplies L and Y by a common factor, which scales S by the
    same factor without touching J or Z.
    """
    rng = np.random.default_rng(seed)
    J = rng.standard_normal((n, n))
    while n and np.linalg.cond(J) > 1e6:
        J = rng.standard_normal((n, n))
    Z = rng.standard_normal((s, n))
    Y = rng.standard_normal((n, s))
    L = np.tril(rng.standard_normal((s, s)), -1)
    if s > 1:
        L *= rng.random((s, s)) < l_density
        L /= max(1.0, 2.0 * operator_norm(L, np.inf))
    form = AbsNormalForm(c=rng.standard_normal(s), b=rng.standard_normal(n),
                         Z=Z, L=L, J=J, Y=Y)
    if target_norm is None or s == 0:
        return form
    S = schur(form).S
    if target_kind == "norm2":
        current = operator_norm(S, 2)
    elif target_kind == "rho_abs":
        current = pf_equilibrate(S).rho_abs
    else:
        raise BadParams(f"unknown target_kind {target_kind!r}")
    if current == 0.0:
        raise BadParams("cannot rescale a zero Schur complement")
    f = target_norm / current
    return AbsNormalForm(c=form.c, b=form.b, Z=form.Z, L=f * form.L, J=form.J,
                         Y=f * form.Y)


_FAMILIES = {
    "one_d_kink": (one_d_kink, ("zeta",)),
    "schueth": (schueth, ("eps",)),
    "rump": (rump, ("n",)),
    "cyclic": (cyclic, ("s", "a")),
    "reflector": (reflector, ()),
    "tridiag_max": (tridiag_max, ("n",)),
    "random": (random_form, ("n", "s", "seed", "target_norm", "target_kind")),
}


def generate(name: str, params: dict | None = None):
    """Dispatch to a named family; unknown names and bad params raise."""
    if name not in _FAMILIES:
        raise UnknownExample(f"no example family named {name!r}; "
                             f"known: {', '.join(sorted(_FAMILIES))}")
    fn, wanted = _FAMILIES[name]
    params = dict(params or {})
    unknown = set(params) - set(wanted)
    if unknown:
        raise BadParams(f"{name} does not take parameters {sorted(unknown)}")
    try:
        return fn(**params)
    except TypeError as exc:
        raise BadParams(f"bad parameters for {name}: {exc}") from exc


# -- rosette: homogeneous planar maps defined on angular sectors ----------


def _check_rosette(phi, psi) -> tuple[np.ndarray, np.ndarray, int]:
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if phi.ndim != 1 or phi.size < 2 or phi.shape != psi.shape:
        raise BadAngles("phi and psi must be matching knot vectors")
    if abs(phi[0]) > 1e-12 or abs(phi[-1] - 2 * math.pi) > 1e-12:
        raise BadAngles("phi must run from 0 to 2*pi")
    dphi = np.diff(phi)
    if np.any(dphi <= 0) or np.any(dphi >= math.pi):
        raise BadAngles("phi increments must lie strictly between 0 and pi")
    if np.any(np.abs(np.diff(psi)) >= math.pi):
        raise BadAngles("psi increments must be smaller than pi in modulus")
    p_float = (psi[-1] - psi[0]) / (2 * math.pi)
    p = round(p_float)
    if abs(p_float - p) > 1e-9 or p < 0:
        raise BadAngles("psi must wind a nonnegative whole number of turns")
    return phi, psi, int(p)


def _sector_matrices(phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    mats = np.zeros((phi.size - 1, 2, 2))
    for i in range(phi.size - 1):
        vin = np.array([[math.cos(phi[i]), math.cos(phi[i + 1])],
                        [math.sin(phi[i]), math.sin(phi[i + 1])]])
        vout = np.array([[math.cos(psi[i]), math.cos(psi[i + 1])],
                         [math.sin(psi[i]), math.sin(psi[i + 1])]])
        mats[i] = vout @ np.linalg.inv(vin)
    return mats


def rosette_eval(phi, psi, x) -> np.ndarray:
    """Evaluate the homogeneous PL map interpolating the angle knots.

    Sector i maps the boundary rays at phi_{i-1}, phi_i onto the rays at
    psi_{i-1}, psi_i linearly; points exactly on a shared ray take the
    lower sector, which continuity makes irrelevant for the value.
    """
    phi, psi, _ = _check_rosette(phi, psi)
    x = as_float_array(x, "x", (2,))
    if x[0] == 0.0 and x[1] == 0.0:
        return np.zeros(2)
    theta = math.atan2(x[1], x[0]) % (2 * math.pi)
    i = int(np.searchsorted(phi, theta, side="left"))
    i = max(1, min(i, phi.size - 1))
    mats = _sector_matrices(phi, psi)
    return mats[i - 1] @ x


@dataclass
class RosetteReport:
    coherent: bool
    winding: int
    monotone: bool
    classification: str       # "injective" | "open_not_injective" | "surjective_not_open"
    det_signs: list
    collision: tuple | None = None


def _find_collision(phi, psi, mats, rng) -> tuple | None:
    """Sampled witness of non-injectivity: two unit points, same image.

    Seeds from the closest image pair on a coarse angle grid (with the
    preimages kept apart), then polishes the two angles by a local search.
    """
    from scipy.optimize import minimize

    def at(theta):
        theta = theta % (2 * math.pi)
        i = int(np.searchsorted(phi, theta, side="left"))
        i = max(1, min(i, phi.size - 1))
        x = np.array([math.cos(theta), math.sin(theta)])
        return x, mats[i - 1] @ x

    thetas = np.linspace(0.0, 2 * math.pi, 720, endpoint=False) + rng.uniform(0, 1e-3)
    pts = np.column_stack([np.cos(thetas), np.sin(thetas)])
    imgs = np.array([at(t)[1] for t in thetas])
    d_img = np.max(np.abs(imgs[:, None, :] - imgs[None, :, :]), axis=2)
    d_pts = np.max(np.abs(pts[:, None, :] - pts[None, :, :]), axis=2)
    d_img[d_pts < 0.5] = np.inf
    a, b = np.unravel_index(np.argmin(d_img), d_img.shape)
    if not np.isfinite(d_img[a, b]):
        return None

    def gap(t):
        return float(np.sum((at(t[0])[1] - at(t[1])[1]) ** 2))

    res = minimize(gap, x0=[thetas[a], thetas[b]], method="Nelder-Mead",
                   options={"xatol": 1e-14, "fatol": 1e-30, "maxiter": 2000})
    x1, y1 = at(res.x[0])
    x2, y2 = at(res.x[1])
    if np.max(np.abs(y1 - y2)) < 1e-9 and np.max(np.abs(x1 - x2)) > 1e-3:
        return x1, x2
    return None


def rosette_classify(phi, psi, seed: int = 0) -> RosetteReport:
    """Classify by monotonicity and winding; determinants are exact.

    det(A_i) = sin(dpsi_i)/sin(dphi_i), so the orientation of each sector
    is the sign of its psi increment and coherence is equivalent to strict
    monotonicity of the knot values.
    """
    phi, psi, p = _check_rosette(phi, psi)
    dpsi = np.diff(psi)
    det_signs = [0 if d == 0 else (1 if d > 0 else -1) for d in dpsi]
    coherent = all(s == 1 for s in det_signs) or all(s == -1 for s in det_signs)
    monotone = bool(np.all(dpsi > 0))
    mats = _sector_matrices(phi, psi)
    collision = None
    if monotone and p == 1:
        classification = "injective"
    elif monotone and p > 1:
        classification = "open_not_injective"
        collision = _find_collision(phi, psi, mats, np.random.default_rng(seed))
    elif not monotone and p > 0:
        classification = "surjective_not_open"
    else:
        raise Unclassified("knots match no classification row (p = 0?)")
    return RosetteReport(coherent=coherent, winding=p, monotone=monotone,
                         classification=classification, det_signs=det_signs,
                         collision=collision)
