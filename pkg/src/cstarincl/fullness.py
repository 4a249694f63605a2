"""Relative fullness: decisions, certificates and their constructions.

A positive ``a`` in ``M_N`` is full relatively to a unital subalgebra ``B``
when there are ``x_1, ..., x_m`` in ``B`` with ``sum x_j^* a x_j >= c 1``
for some ``c > 0``.  Certificates store that list together with the margin
``c``; :func:`normalize_certificate` rescales to ``c = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import SubalgebraEmbedding, full_in_algebra
from .matcore import (
    DEFAULT_TOL,
    ToleranceConfig,
    as_square,
    cutoff_apply,
    dagger,
    eigh,
    is_positive,
    matrix_from_json,
    matrix_to_json,
    min_eigenvalue,
    op_norm,
    positive_part_shift,
    psd_sqrt,
    tensor,
)


class BudgetExhausted(RuntimeError):
    """Sampling ran out of budget before reaching the requested margin."""


@dataclass
class FullnessCertificate:
    elements: list
    margin: float
    kind: str = "general"

    def __post_init__(self):
        if self.kind not in ("general", "unitary"):
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        self.elements = [np.asarray(x, dtype=complex) for x in self.elements]
        self.margin = float(self.margin)

    def __len__(self):
        return len(self.elements)

    def weighted_sum(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=complex)
        return sum(dagger(x) @ a @ x for x in self.elements)

    def to_json(self) -> dict:
        return {"margin": self.margin, "kind": self.kind,
                "elements": [matrix_to_json(x) for x in self.elements]}

    @classmethod
    def from_json(cls, obj: dict) -> "FullnessCertificate":
        return cls([matrix_from_json(x) for x in obj["elements"]], obj["margin"], obj.get("kind", "general"))


@dataclass
class Decision:
    full: bool
    min_eig_expectation: float
    expectation: np.ndarray = field(repr=False)
    witness: np.ndarray | None = field(default=None, repr=False)

    @property
    def label(self) -> str:
        return "full" if self.full else "not_full"

    def to_json(self) -> dict:
        out = {"decision": self.label, "min_eig_expectation": self.min_eig_expectation}
        if self.witness is not None:
            out["witness"] = matrix_to_json(self.witness)
        return out


@dataclass
class VerificationResult:
    ok: bool
    min_eig: float
    membership_residual: float
    unitary_residual: float = 0.0
    reasons: list = field(default_factory=list)

    def __bool__(self):
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "min_eig": self.min_eig, "membership_residual": self.membership_residual,
                "unitary_residual": self.unitary_residual, "reasons": self.reasons}


def _positive(a, tol: ToleranceConfig, name: str = "a") -> np.ndarray:
    a = as_square(a, name)
    if not is_positive(a, tol):
        raise ValueError(f"{name} is not positive semidefinite")
    return a


def _check_dims(a: np.ndarray, emb: SubalgebraEmbedding) -> None:
    if a.shape[0] != emb.ambient_dim:
        raise ValueError(f"element has dimension {a.shape[0]}, ambient is {emb.ambient_dim}")


def relatively_full(a, emb: SubalgebraEmbedding, tol: ToleranceConfig = DEFAULT_TOL) -> Decision:
    """Decide relative fullness through invertibility of ``E(a)``.

    When ``a`` is not full the decision carries the spectral projection of
    ``E(a)`` for eigenvalues ``<= eig_floor``: a projection in ``B' (in) A``
    orthogonal to ``a``.
    """
    a = _positive(a, tol)
    _check_dims(a, emb)
    ea = emb.expectation(a)
    w, v = eigh(ea)
    full = bool(w[0] > tol.eig_floor)
    witness = None
    if not full:
        kernel = v[:, w <= tol.eig_floor]
        witness = kernel @ dagger(kernel)
    return Decision(full, float(w[0]), ea, witness)


def orthogonal_commutant_projection(a, emb: SubalgebraEmbedding,
                                    tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray | None:
    """Largest projection ``p`` in ``B' (in) A`` with ``a p = 0``, or ``None``.

    Solved directly on the commutant, without forming ``E(a)``: the right
    ideal ``{y in B' : a y = 0}`` is ``p B'``, so ``p`` is the range
    projection of that null space.
    """
    a = _positive(a, tol)
    _check_dims(a, emb)
    comm = emb.commutant_embedding()
    # parametrize y = comm.apply(z) for abstract z; a y = 0 is linear in z
    cols = []
    for i, m in enumerate(comm.blocks):
        for s in range(m):
            for t in range(m):
                cols.append((a @ comm.unit_image(i, s, t)).ravel())
    mat = np.stack(cols, axis=1)
    _, sv, vh = np.linalg.svd(mat, full_matrices=True)
    scale = max(1.0, op_norm(a))
    rank = int(np.sum(sv > tol.eig_floor * scale))
    null = vh[rank:].conj()
    if null.shape[0] == 0:
        return None
    keys = [(i, s, t) for i, m in enumerate(comm.blocks) for s in range(m) for t in range(m)]
    ranges = []
    for coeffs in null:
        y = sum(c * comm.unit_image(*k) for c, k in zip(coeffs, keys))
        ranges.append(y)
    stacked = np.concatenate(ranges, axis=1)
    u, sv, _ = np.linalg.svd(stacked)
    r = int(np.sum(sv > 1e-6 * max(1.0, sv[0])))
    if r == 0:
        return None
    basis = u[:, :r]
    return basis @ dagger(basis)


def verify_certificate(a, cert: FullnessCertificate, emb: SubalgebraEmbedding | None = None,
                       tol: ToleranceConfig = DEFAULT_TOL) -> VerificationResult:
    """Recompute ``sum x_j^* a x_j`` and compare its bottom eigenvalue with the margin.

    With ``emb`` each element must also lie in ``B``.  Never raises on a bad
    certificate; returns ``ok=False`` with reasons.
    """
    reasons = []
    try:
        a = as_square(a)
    except ValueError as exc:
        return VerificationResult(False, float("nan"), float("nan"), reasons=[str(exc)])
    if not cert.elements:
        return VerificationResult(False, float("-inf"), 0.0, reasons=["empty certificate"])
    if any(x.shape != a.shape for x in cert.elements):
        return VerificationResult(False, float("nan"), float("nan"), reasons=["element shape mismatch"])
    total = cert.weighted_sum(a)
    lam = min_eigenvalue(total, tol, check=False)
    scale = max(1.0, cert.margin)
    if lam < cert.margin - tol.eig_floor * scale:
        reasons.append(f"min eigenvalue {lam:.3e} below margin {cert.margin:.3e}")
    if not cert.margin > 0:
        reasons.append("non-positive margin")
    member = 0.0
    if emb is not None:
        if emb.ambient_dim != a.shape[0]:
            reasons.append("embedding ambient mismatch")
        else:
            stack = np.asarray(cert.elements)
            diff = np.linalg.norm(stack - emb.project(stack), axis=(1, 2))
            scales = np.maximum(1.0, np.linalg.norm(stack, axis=(1, 2)))
            member = float(np.max(diff / scales))
            if member > tol.eig_floor:
                reasons.append(f"element outside B (residual {member:.3e})")
    unit_res = 0.0
    if cert.kind == "unitary":
        # scaled unitaries are allowed: x^* x must be a positive multiple of 1.
        # Frobenius norm bounds the operator norm from above.
        stack = np.asarray(cert.elements)
        g = dagger(stack) @ stack
        c = np.trace(g, axis1=1, axis2=2).real / a.shape[0]
        g = g - c[:, None, None] * np.eye(a.shape[0])
        unit_res = float(np.max(np.linalg.norm(g, axis=(1, 2)) / np.maximum(c, 1e-300)))
        if unit_res > tol.identity_tol * 100:
            reasons.append(f"element not a (scaled) unitary (residual {unit_res:.3e})")
    return VerificationResult(not reasons, lam, member, unit_res, reasons)


def certificate_from_expectation(a, emb: SubalgebraEmbedding, target_margin: float = 1.0,
                                 rng_seed=None, budget: int = 256,
                                 tol: ToleranceConfig = DEFAULT_TOL) -> FullnessCertificate:
    """Riemann-sum certificate: Haar unitaries of ``B`` whose average twirl of ``a`` is invertible.

    Unitaries are added one at a time until ``(1/m) sum u_j^* a u_j`` has
    bottom eigenvalue at least ``c = cert_margin * lambda_min(E(a))``; each
    is then scaled by ``sqrt(target / (m c))``.  If ``E(a)`` is singular the
    threshold falls back to ``eig_floor`` (it can never be met, since the
    orthogonal projection in ``B'`` kills every term) and the budget runs out.
    """
    a = _positive(a, tol)
    _check_dims(a, emb)
    if not target_margin > 0:
        raise ValueError("target_margin must be positive")
    eye = np.eye(a.shape[0], dtype=complex)
    lam_a = min_eigenvalue(a, tol, check=False)
    if lam_a > tol.eig_floor:
        return FullnessCertificate([eye * math.sqrt(target_margin / lam_a)], target_margin, "unitary")
    lam_e = min_eigenvalue(emb.expectation(a), tol, check=False)
    threshold = tol.cert_margin * lam_e if lam_e > tol.eig_floor else tol.eig_floor
    rng = np.random.default_rng(rng_seed)
    us, total = [], np.zeros_like(a)
    check_every = 1 if a.shape[0] <= 64 else 4
    for m in range(1, budget + 1):
        u = emb.haar_unitaries(rng, 1)[0]
        us.append(u)
        total = total + dagger(u) @ a @ u
        if m % check_every and m != budget:
            continue
        avg_min = min_eigenvalue(total / m, tol, check=False)
        if avg_min >= threshold and avg_min > tol.eig_floor:
            scale = math.sqrt(target_margin / (m * threshold))
            return FullnessCertificate([scale * u for u in us], target_margin, "unitary")
    raise BudgetExhausted(f"no certificate within {budget} unitaries (lambda_min E(a) = {lam_e:.3e})")


def span_to_elements(a, combos, margin: float = 1.0, tol: ToleranceConfig = DEFAULT_TOL) -> list:
    """Replace linear combinations by repeated members of the spanning set.

    ``combos`` is a list of combinations, each a list of ``(lambda_j, w_j)``
    with ``x = sum lambda_j w_j``.  A combination of length ``l`` contributes
    ``w_j`` repeated ``ceil(l |lambda_j|^2)`` times; by
    ``v^* a w + w^* a v <= v^* a v + w^* a w`` the result dominates
    ``sum x^* a x``, which must be ``>= margin``.
    """
    a = _positive(a, tol)
    xs = [sum(lam * np.asarray(w, dtype=complex) for lam, w in combo) for combo in combos]
    lam = min_eigenvalue(sum(dagger(x) @ a @ x for x in xs), tol, check=False)
    if lam < margin - tol.eig_floor * max(1.0, margin):
        raise ValueError(f"input combinations only reach {lam:.3e} < margin {margin:.3e}")
    out = []
    for combo in combos:
        ell = len(combo)
        for lam_j, w in combo:
            weight = ell * abs(lam_j) ** 2
            reps = math.ceil(weight - 1e-12) if weight > 0 else 0
            out.extend([np.asarray(w, dtype=complex)] * reps)
    return out


def normalize_certificate(a, xs, tol: ToleranceConfig = DEFAULT_TOL) -> FullnessCertificate:
    """Rescale ``xs`` by ``delta^{-1/2}`` so that ``sum x^* a x >= 1``."""
    a = as_square(a)
    xs = [np.asarray(x, dtype=complex) for x in xs]
    delta = min_eigenvalue(sum(dagger(x) @ a @ x for x in xs), tol, check=False)
    if delta <= tol.eig_floor:
        raise ValueError(f"sum x^* a x is not invertible (min eigenvalue {delta:.3e})")
    s = delta ** -0.5
    return FullnessCertificate([s * x for x in xs], 1.0, "general")


def dominate_reduction(a, x, b, b_cert: FullnessCertificate, emb: SubalgebraEmbedding,
                       eps: float | None = None, tol: ToleranceConfig = DEFAULT_TOL) -> FullnessCertificate:
    """Certificate for ``a`` from a positive ``b`` in ``B`` dominated by ``x^* a x``.

    Either ``b <= x^* a x`` (then ``{x y_j}`` works for ``b``'s certificate
    ``{y_j}``) or ``delta = ||b - x^* a x|| < ||b||``.  In the latter case,
    with ``delta < eps < ||b||`` and the ramp ``phi`` vanishing on
    ``[0, delta]``, ``(b - eps)_+ <= phi(b) x^* a x phi(b)``, so a
    certificate ``{y_j}`` of ``(b - eps)_+`` in ``B`` yields
    ``{x phi(b) y_j}``.  ``b_cert`` is reused for ``(b - eps)_+`` when it
    still certifies it; otherwise one is built inside ``B``.
    """
    a = _positive(a, tol)
    b = _positive(b, tol, "b")
    x = np.asarray(x, dtype=complex)
    for name, el in (("x", x), ("b", b)):
        if not emb.contains(el, tol):
            raise ValueError(f"{name} is not in B")
    xax = dagger(x) @ a @ x
    scale = max(1.0, op_norm(b))
    if min_eigenvalue(xax - b, tol, check=False) >= -tol.eig_floor * scale:
        cert = FullnessCertificate([x @ y for y in b_cert.elements], b_cert.margin, "general")
        return _shrink_to_valid(a, cert, tol)
    delta = op_norm(b - xax)
    nb = op_norm(b)
    if not delta < nb:
        raise ValueError(f"hypothesis fails: ||b - x*ax|| = {delta:.3e} >= ||b|| = {nb:.3e}")
    eps = 0.5 * (delta + nb) if eps is None else float(eps)
    if not delta < eps < nb:
        raise ValueError("need delta < eps < ||b||")
    phi_b = cutoff_apply(b, delta, eps)
    shifted = positive_part_shift(b, eps, tol)
    inner = b_cert
    if min_eigenvalue(b_cert.weighted_sum(shifted), tol, check=False) <= tol.eig_floor:
        ok, inner = full_in_algebra(shifted, emb, tol)
        if not ok:
            raise ValueError("(b - eps)_+ is not full in B; B is not simple on its support")
    margin = min_eigenvalue(inner.weighted_sum(shifted), tol, check=False)
    cert = FullnessCertificate([x @ phi_b @ y for y in inner.elements], margin, "general")
    return _shrink_to_valid(a, cert, tol)


def _shrink_to_valid(a, cert: FullnessCertificate, tol: ToleranceConfig) -> FullnessCertificate:
    """Clamp the recorded margin to what the certificate actually achieves (never raise it)."""
    lam = min_eigenvalue(cert.weighted_sum(a), tol, check=False)
    if lam < cert.margin:
        if lam <= tol.eig_floor:
            raise ValueError("constructed certificate does not certify a")
        cert = FullnessCertificate(cert.elements, lam, cert.kind)
    return cert


def word_reduction(a, word, emb: SubalgebraEmbedding | None = None,
                   tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """``x`` in ``B`` with ``x^* a x >= w^* a w`` for ``w = b_1 a b_2 ... a b_r``.

    Writing ``w = v a b_r`` gives ``x = ||a^{1/2} v^* a v a^{1/2}||^{1/2} b_r``.
    """
    a = _positive(a, tol)
    word = [np.asarray(b, dtype=complex) for b in word]
    if not word:
        raise ValueError("word must contain at least one element of B")
    if emb is not None:
        for j, b in enumerate(word):
            if not emb.contains(b, tol):
                raise ValueError(f"letter {j + 1} of the word is not in B")
    if len(word) == 1:
        return word[0]
    v = word[0]
    for b in word[1:-1]:
        v = v @ a @ b
    w = v @ a @ word[-1]
    root = psd_sqrt(a)
    c = op_norm(root @ dagger(v) @ a @ v @ root)
    x = math.sqrt(c) * word[-1]
    gap = min_eigenvalue(dagger(x) @ a @ x - dagger(w) @ a @ w, tol, check=False)
    if gap < -tol.eig_floor * max(1.0, c * op_norm(a) * op_norm(word[-1]) ** 2):
        raise AssertionError(f"domination failed by {gap:.3e}")
    return x


def norm_inequality_check(x, f1, f2, f3, tol: ToleranceConfig = DEFAULT_TOL):
    """Both sides of ``||x|| <= 2 sum_j ||(1 - f_j) x (1 - f_j)||``.

    Returns ``(lhs, rhs, holds)`` where ``rhs`` is the sum (without the
    factor 2) and ``holds`` tests ``lhs <= 2 rhs + eig_floor``.
    """
    x = as_square(x, "x")
    fs = [as_square(f, "f") for f in (f1, f2, f3)]
    n = x.shape[0]
    for f in fs:
        if f.shape != x.shape:
            raise ValueError("projections must match the dimension of x")
        if op_norm(f @ f - f) > tol.identity_tol * 100 or op_norm(f - dagger(f)) > tol.identity_tol * 100:
            raise ValueError("f_j must be projections")
    for i in range(3):
        for j in range(i + 1, 3):
            if op_norm(fs[i] @ fs[j]) > tol.identity_tol * 100:
                raise ValueError("f_j must be pairwise orthogonal")
    eye = np.eye(n)
    lhs = op_norm(x)
    rhs = sum(op_norm((eye - f) @ x @ (eye - f)) for f in fs)
    return lhs, rhs, bool(lhs <= 2 * rhs + tol.eig_floor)


def tensor_certificate(a1, cert1: FullnessCertificate, a2, cert2: FullnessCertificate,
                       tol: ToleranceConfig = DEFAULT_TOL) -> FullnessCertificate:
    """Certificate ``{x_i (x) y_j}`` for ``a_1 (x) a_2`` with margin ``c_1 c_2``."""
    a1, a2 = as_square(a1, "a1"), as_square(a2, "a2")
    for a, cert in ((a1, cert1), (a2, cert2)):
        if any(x.shape != a.shape for x in cert.elements):
            raise ValueError("certificate elements do not match the ambient dimension")
        if not verify_certificate(a, cert, tol=tol).ok:
            raise ValueError("input certificate does not verify")
    elements = [tensor(x, y) for x in cert1.elements for y in cert2.elements]
    kind = "unitary" if cert1.kind == cert2.kind == "unitary" else "general"
    return FullnessCertificate(elements, cert1.margin * cert2.margin, kind)


def certify(a, emb: SubalgebraEmbedding, target_margin: float = 1.0, rng_seed=None, budget: int = 256,
            tol: ToleranceConfig = DEFAULT_TOL) -> FullnessCertificate:
    """Decide and, if full, return a verified Riemann-sum certificate."""
    decision = relatively_full(a, emb, tol)
    if not decision.full:
        raise ValueError("element is not full relatively to B")
    cert = certificate_from_expectation(a, emb, target_margin, rng_seed, budget, tol)
    return cert


__all__ = [
    "BudgetExhausted", "FullnessCertificate", "Decision", "VerificationResult",
    "relatively_full", "orthogonal_commutant_projection", "verify_certificate",
    "certificate_from_expectation", "span_to_elements", "normalize_certificate",
    "dominate_reduction", "word_reduction", "norm_inequality_check", "tensor_certificate", "certify",
]
