"""Schur-complement algebra and solvability certificates.

Everything that predicts whether and how the piecewise linear system can
be solved lives here: the Schur complement S = L - Z J^{-1} Y with its
determinant and inverse identities, operator norms, Perron-style diagonal
equilibration, the sign real spectral radius, the all-signs coherence
probe, the kink qualification test, and the combined certificates report
consumed by the CLI.

The exhaustive checks (sign real spectral radius, coherence) enumerate
all 2**s sign patterns; they are the honest oracle at desk scale and are
guarded by a size limit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._util import as_float_array, freeze, mask_to_sigma, scale_of, sign_stack
from .core import AbsNormalForm, PieceJacobian, Signature
from .errors import SingularPiece, SingularSmoothPart, TooLarge

__all__ = [
    "SchurData",
    "CertificateReport",
    "CoherenceCheck",
    "Equilibration",
    "schur",
    "piece_determinant",
    "piece_inverse",
    "operator_norm",
    "pf_equilibrate",
    "sign_real_spectral_radius",
    "sigma_coherence",
    "likq_sufficient",
    "certificates",
    "sample_orientation",
]

_COND_LIMIT = 1e14
_DET_CHUNK = 4096
# Numerical eigenvalues are never exactly real; treat lambda as real when
# |Im| <= this relative threshold.
_REAL_EIG_RTOL = 1e-9

DEFAULT_ENUM_LIMIT = 16


@dataclass
class SchurData:
    """S = L - Z J^{-1} Y together with the reduced right-hand side.

    Keeps the LU factorization of J so later piece computations do not
    refactor.  `c_hat` already has any solve target folded in.
    """

    S: np.ndarray
    c_hat: np.ndarray
    det_j: float
    lu: tuple
    j_inv_y: np.ndarray

    @property
    def s(self) -> int:
        return self.S.shape[0]


def _lu_det(lu: np.ndarray, piv: np.ndarray) -> float:
    sign = 1.0
    for i, p in enumerate(piv):
        if p != i:
            sign = -sign
    return sign * float(np.prod(np.diag(lu)))


def schur(form: AbsNormalForm, y_target=None) -> SchurData:
    """Eliminate x from the form; requires a square nonsingular J.

    A target value for y is subtracted from b before the reduction, so
    solutions of H(z) = c_hat correspond to F(x) = y_target.
    """
    if form.m != form.n:
        raise ValueError("Schur reduction needs m = n")
    n = form.n
    if n == 0:
        return SchurData(S=form.L.copy(), c_hat=form.c.copy(), det_j=1.0,
                         lu=(np.zeros((0, 0)), np.zeros(0, dtype=np.int32)),
                         j_inv_y=np.zeros((0, form.s)))
    if np.linalg.cond(form.J) > _COND_LIMIT:
        raise SingularSmoothPart("smooth part J is numerically singular; regularize first")
    lu = scipy.linalg.lu_factor(form.J)
    j_inv_y = scipy.linalg.lu_solve(lu, form.Y) if form.s else np.zeros((n, 0))
    S = form.L - form.Z @ j_inv_y
    rhs = form.b if y_target is None else form.b - as_float_array(y_target, "y_target", (form.m,))
    c_hat = form.c - form.Z @ scipy.linalg.lu_solve(lu, rhs)
    return SchurData(S=freeze(S), c_hat=freeze(c_hat), det_j=_lu_det(*lu), lu=lu,
                     j_inv_y=j_inv_y)


def piece_determinant(sd: SchurData, sigma: Signature) -> float:
    """det(J_sigma) = det(J) * det(I - S Sigma), without forming J_sigma."""
    sig = sigma.sigma.astype(float)
    K = np.eye(sd.s) - sd.S * sig[None, :]
    return sd.det_j * float(np.linalg.det(K))


def piece_inverse(sd: SchurData, form: AbsNormalForm, sigma: Signature) -> np.ndarray:
    """J_sigma^{-1} via the low-rank update of J^{-1}.

    Raises SingularPiece when det(I - S Sigma) is not bounded away from 0.
    """
    sig = sigma.sigma.astype(float)
    K = np.eye(sd.s) - sd.S * sig[None, :]
    if abs(np.linalg.det(K)) <= 1e-12 * scale_of(K):
        raise SingularPiece("det(I - S Sigma) is numerically zero")
    n = form.n
    if n == 0:
        return np.zeros((0, 0))
    j_inv = scipy.linalg.lu_solve(sd.lu, np.eye(n))
    if sd.s == 0:
        return j_inv
    z_j_inv = scipy.linalg.lu_solve(sd.lu, form.Z.T, trans=1).T
    W = np.linalg.solve(K, z_j_inv)
    return j_inv - (sd.j_inv_y * sig[None, :]) @ W


def operator_norm(M, p) -> float:
    """Induced matrix p-norm for p in {1, 2, inf}.

    p = 2 runs power iteration on M^T M (tolerance 1e-12, at most 10000
    steps); 1 and inf are the exact column/row sums.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    if p == 1:
        return float(np.max(np.abs(M).sum(axis=0)))
    if p in (np.inf, "inf", float("inf")):
        return float(np.max(np.abs(M).sum(axis=1)))
    if p != 2:
        raise ValueError(f"unsupported norm order {p!r}")
    rng = np.random.default_rng(0)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(10000):
        u = M.T @ (M @ v)
        norm_u = np.linalg.norm(u)
        if norm_u == 0.0:
            v = rng.standard_normal(M.shape[1])
            v /= np.linalg.norm(v)
            lam = 0.0
            continue
        lam_new = float(v @ u)
        v = u / norm_u
        if abs(lam_new - lam) <= 1e-12 * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    return math.sqrt(max(lam, 0.0))


class Equilibration(NamedTuple):
    rho_abs: float
    d: np.ndarray
    s_tilde: np.ndarray
    approximate: bool = False


def _perron_pair(A: np.ndarray, tol: float = 1e-13, maxit: int = 50000):
    """Perron value and positive right vector of a nonnegative matrix.

    Power iteration on A + cI (the shift breaks periodicity) with the
    Collatz-Wielandt ratio spread as stopping test; falls back to a dense
    eigendecomposition when the spread stagnates, which happens for the
    nearly reducible matrices produced by the epsilon regularization.
    """
    n = A.shape[0]
    top = float(A.max(initial=0.0))
    if top == 0.0:
        return 0.0, np.ones(n)
    c = top
    B = A + c * np.eye(n)
    v = np.ones(n) / n
    for _ in range(maxit):
        w = B @ v
        ratios = w / v
        hi, lo = float(ratios.max()), float(ratios.min())
        if hi - lo <= tol * max(1.0, hi):
            return (hi + lo) / 2.0 - c, v / v.sum()
        v = w / w.sum()
    vals, vecs = np.linalg.eig(B)
    k = int(np.argmax(vals.real))
    d = np.abs(vecs[:, k].real)
    d = np.where(d > 0, d, d.max() * 1e-300)
    return float(vals[k].real) - c, d / d.sum()


def _is_irreducible(pattern: np.ndarray) -> bool:
    if pattern.shape[0] <= 1:
        return bool(pattern.all())
    ncomp, _ = connected_components(csr_matrix(pattern), directed=True, connection="strong")
    return ncomp == 1


def pf_equilibrate(S) -> Equilibration:
    """Diagonal similarity D^{-1} S D by the right Perron vector of |S|.

    For irreducible |S| the scaled matrix has infinity norm equal to
    rho(|S|).  Reducible patterns are regularized by a tiny rank-one
    perturbation before the iteration and flagged approximate; their
    scaled norm can be driven arbitrarily close to rho(|S|) = 0 limits.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    s = S.shape[0]
    if s == 0:
        raise ValueError("equilibration needs s >= 1")
    A = np.abs(S)
    approximate = not _is_irreducible(A != 0)
    if approximate:
        eps = 1e-12 * float(A.max(initial=0.0)) + 1e-300
        A = A + eps * np.ones((s, s))
    rho, d = _perron_pair(A)
    d = np.maximum(d, np.finfo(float).tiny)
    s_tilde = (S * d[None, :]) / d[:, None]
    return Equilibration(rho_abs=rho, d=d, s_tilde=s_tilde, approximate=approximate)


def _enum_guard(s: int, limit: int) -> None:
    if s > limit:
        raise TooLarge(f"s = {s} exceeds the enumeration limit {limit}")


_MAX_DEFECT_ORDER = 8


def _is_split_multiple(group: np.ndarray, center: complex) -> bool:
    """Does the group look like one numerically split multiple eigenvalue?

    True multiples of multiplicity m scatter like eps^(1/block) around the
    exact value, but the elementary symmetric functions of the deviations
    stay at rounding level (the characteristic polynomial only moves by
    O(eps)); accidental near-coincidences have symmetric functions on the
    order of their spread and are rejected.
    """
    dev = group - center
    coeffs = np.poly(dev)  # [1, -e1, e2, -e3, ...]
    scale = 1.0 + abs(center)
    return all(abs(coeffs[j]) <= 1e-10 * scale**j for j in range(2, group.size + 1))


def _robust_real_radius(lam: np.ndarray) -> float:
    """Largest modulus among real eigenvalues, defect-aware.

    Each eigenvalue is first interpreted as part of the largest plausible
    split multiple eigenvalue (whose centroid is accurate to rounding even
    when the individual eigenvalues are only eps^(1/k) accurate); only
    eigenvalues belonging to no such cluster count individually.
    """
    s = lam.size
    best = 0.0
    order = np.argsort(np.abs(lam[:, None] - lam[None, :]), axis=1)
    for i in range(s):
        candidate = None
        for k in range(min(s, _MAX_DEFECT_ORDER), 1, -1):
            group = lam[order[i, :k]]
            center = group.mean()
            radius = float(np.max(np.abs(group - center)))
            if radius <= (1e-12) ** (1.0 / k) * (1.0 + abs(center)):
                if _is_split_multiple(group, center):
                    candidate = center
                    break
        if candidate is None:
            candidate = lam[i]
        if abs(candidate.imag) <= _REAL_EIG_RTOL * (1.0 + abs(candidate)):
            best = max(best, abs(candidate.real))
    return best


def _real_eig_candidates(lam: np.ndarray) -> np.ndarray:
    """Per-matrix real spectral radii for a (N, s) eigenvalue stack."""
    s = lam.shape[1]
    real = np.abs(lam.imag) <= _REAL_EIG_RTOL * (1.0 + np.abs(lam))
    naive = np.where(real, np.abs(lam.real), 0.0).max(axis=1)
    if s == 1:
        return naive
    # a spectrum needs the slow defect-aware treatment only when some k
    # eigenvalues crowd into the k-th cluster gate
    dist = np.abs(lam[:, :, None] - lam[:, None, :])
    np.einsum("nii->ni", dist)[:] = np.inf
    scale = 1.0 + np.abs(lam)
    risky = np.zeros(lam.shape[0], dtype=bool)
    for k in range(2, min(s, _MAX_DEFECT_ORDER) + 1):
        gate = 2.0 * (1e-12) ** (1.0 / k)
        crowded = (dist <= gate * scale[:, :, None]).sum(axis=2) >= k - 1
        risky |= crowded.any(axis=1)
    out = naive
    for idx in np.nonzero(risky)[0]:
        out[idx] = _robust_real_radius(lam[idx])
    return out


def sign_real_spectral_radius(S, limit: int = DEFAULT_ENUM_LIMIT) -> float:
    """max over all sign matrices Sigma of the real spectral radius of Sigma S.

    Complex eigenvalue pairs are ignored; an eigenvalue counts as real
    when |Im| <= 1e-9 (1 + |lambda|).  Exhaustive over 2**s sign patterns
    (Sigma and -Sigma give mirrored spectra, so half are enumerated).
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    s = S.shape[0]
    if s == 0:
        return 0.0
    _enum_guard(s, limit)
    half = sign_stack(s - 1)
    patterns = np.hstack([half, np.ones((half.shape[0], 1))])
    best = 0.0
    for lo in range(0, patterns.shape[0], _DET_CHUNK):
        sig = patterns[lo:lo + _DET_CHUNK]
        mats = sig[:, :, None] * S[None, :, :]
        lam = np.linalg.eigvals(mats)
        best = max(best, float(_real_eig_candidates(lam).max()))
    return best


@dataclass
class CoherenceCheck:
    """Outcome of the all-signs determinant probe; truthy when coherent."""

    coherent: bool
    witness: Signature | None = None
    min_det: float = math.inf

    def __bool__(self) -> bool:
        return self.coherent


def sigma_coherence(S, limit: int = DEFAULT_ENUM_LIMIT) -> CoherenceCheck:
    """Check det(I - S Sigma) > 0 for every definite sign pattern.

    Sufficient for coherent orientation of the parent form.  Stops at the
    first nonpositive determinant and records the witness pattern.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    s = S.shape[0]
    if s == 0:
        return CoherenceCheck(coherent=True, min_det=1.0)
    _enum_guard(s, limit)
    eye = np.eye(s)
    patterns = sign_stack(s)
    min_det = math.inf
    for lo in range(0, patterns.shape[0], _DET_CHUNK):
        sig = patterns[lo:lo + _DET_CHUNK]
        mats = eye[None, :, :] - S[None, :, :] * sig[:, None, :]
        dets = np.linalg.det(mats)
        min_det = min(min_det, float(dets.min()))
        bad = np.nonzero(dets <= 0.0)[0]
        if bad.size:
            mask = lo + int(bad[0])
            return CoherenceCheck(coherent=False,
                                  witness=Signature(mask_to_sigma(mask, s)),
                                  min_det=min_det)
    return CoherenceCheck(coherent=True, min_det=min_det)


def likq_sufficient(c, Z, limit_count: int = 10**6) -> bool:
    """Sufficient test for the linear independence kink qualification.

    Checks that every subset of min(s, n+1) rows of [c, Z] has full row
    rank (smallest singular value above 1e-12 relative to the largest of
    the whole matrix).  For s >= n+1 these submatrices are square, so
    this is nonsingularity of all maximal square submatrices; for s <=
    n+1 it reduces to full row rank of [c, Z] itself, which is what kink
    independence needs when fewer than n+1 rows can be active at once.
    """
    c = np.asarray(c, dtype=float).ravel()
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    s = c.size
    if s == 0:
        return True
    B = np.column_stack([c, Z])
    k = min(s, B.shape[1])
    count = math.comb(s, k)
    if count > limit_count:
        raise TooLarge(f"{count} row subsets exceed the limit {limit_count}")
    tol = 1e-12 * max(1.0, float(np.linalg.norm(B, 2)))
    subsets = np.array(list(itertools.combinations(range(s), k)))
    for lo in range(0, subsets.shape[0], _DET_CHUNK):
        stack = B[subsets[lo:lo + _DET_CHUNK]]
        smin = np.linalg.svd(stack, compute_uv=False)[:, -1]
        if np.any(smin <= tol):
            return False
    return True


_NORM_PS = (1, 2, np.inf)


def _best(values: dict) -> tuple[float, object]:
    p = min(values, key=lambda key: values[key])
    return values[p], p


@dataclass
class CertificateReport:
    """All Table-style solvability scalars and per-method verdicts."""

    nu: int
    schur_available: bool
    norms_s: dict = field(default_factory=dict)
    norms_l: dict = field(default_factory=dict)
    seidel: float = math.inf
    seidel_p: object = None
    rho_abs: float = math.inf
    equilibrated_inf_norm: float = math.inf
    rho_hat: float = math.inf
    rho_hat_p: object = None
    rho_bar: float = math.inf
    rho_bar_p: object = None
    sign_real_radius: float | None = None
    sigma_coherent: bool | None = None
    coherence_witness: Signature | None = None
    skipped: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)


def certificates(form: AbsNormalForm, limit: int = DEFAULT_ENUM_LIMIT) -> CertificateReport:
    """Evaluate every sufficient condition the solver table relies on.

    Each certificate picks the most favorable p in {1, 2, inf}; smooth
    dominance additionally tries the equilibrated infinity norm.  The
    brute-force scalars are skipped (with a note) above the size limit.
    """
    report = CertificateReport(nu=form.switching_depth, schur_available=True)
    report.norms_l = {p: operator_norm(form.L, p) for p in _NORM_PS}
    try:
        sd = schur(form)
    except (ValueError, SingularSmoothPart) as exc:
        report.schur_available = False
        report.messages.append(f"SchurUnavailable: {exc}")
        return report

    S = sd.S
    report.norms_s = {p: operator_norm(S, p) for p in _NORM_PS}
    seidel_terms = {p: operator_norm(S - form.L, p) + report.norms_l[p] for p in _NORM_PS}
    report.seidel, report.seidel_p = _best(seidel_terms)

    if form.s:
        eq = pf_equilibrate(S)
        report.rho_abs = eq.rho_abs
        report.equilibrated_inf_norm = operator_norm(eq.s_tilde, np.inf)
    else:
        report.rho_abs = 0.0
        report.equilibrated_inf_norm = 0.0

    rho_hats = {p: operator_norm(sd.j_inv_y, p) * operator_norm(form.Z, p)
                for p in _NORM_PS}
    report.rho_hat, report.rho_hat_p = _best(rho_hats)
    rho_bars = {}
    for p in _NORM_PS:
        gap = 1.0 - rho_hats[p] - report.norms_l[p]
        room = 1.0 - report.norms_l[p]
        rho_bars[p] = 2.0 * rho_hats[p] / (gap * room) if gap > 0 and room > 0 else math.inf
    report.rho_bar, report.rho_bar_p = _best(rho_bars)

    if form.s <= limit:
        report.sign_real_radius = sign_real_spectral_radius(S, limit)
        check = sigma_coherence(S, limit)
        report.sigma_coherent = check.coherent
        report.coherence_witness = check.witness
    else:
        report.skipped.append(f"sign_real_spectral_radius: skipped(s>{limit})")
        report.skipped.append(f"sigma_coherence: skipped(s>{limit})")

    smooth_dominance = min(min(report.norms_s.values()), report.equilibrated_inf_norm)
    report.verdicts = {
        "modulus": smooth_dominance < 1.0,
        "block_seidel": report.seidel < 1.0,
        "newton_cpl": min(report.norms_s.values()) < 1.0 / 3.0,
        "newton_opl": report.rho_bar < 1.0,
        "signed_ge": report.rho_abs < 0.5,
    }
    return report


@dataclass
class OrientationSample:
    """Sampled (not proven) orientation evidence over realizable pieces."""

    samples: int
    det_signs: set
    coherent_sampled: bool


def sample_orientation(form: AbsNormalForm, samples: int = 64, seed: int = 0,
                       radius: float = 1.0) -> OrientationSample:
    """Probe realizable pieces at random points and compare det signs."""
    if form.m != form.n:
        raise ValueError("orientation sampling needs a square map (m = n)")
    rng = np.random.default_rng(seed)
    signs: set[int] = set()
    for _ in range(samples):
        x = radius * rng.standard_normal(form.n)
        _, pj = polynomial_escape_quiet(form, x, rng)
        det = float(np.linalg.det(pj.matrix)) if form.n else 1.0
        signs.add(0 if det == 0 else (1 if det > 0 else -1))
    return OrientationSample(samples=samples, det_signs=signs,
                             coherent_sampled=(signs in ({1}, {-1})))


def polynomial_escape_quiet(form: AbsNormalForm, x, rng) -> tuple[Signature, PieceJacobian]:
    """Escape with a random direction, retrying if the path degenerates."""
    import warnings as _warnings

    from .core import polynomial_escape

    for _ in range(4):
        d = rng.standard_normal(form.n) if form.n else None
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")
            sigma, pj = polynomial_escape(form, x, d)
        if sigma.definite or form.s == 0:
            return sigma, pj
    return sigma, pj
