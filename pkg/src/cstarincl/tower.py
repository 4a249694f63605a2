"""Finite prefixes of commuting ladders ``B_n -> A_n`` and the UHF construction.

Levels are numbered from 1.  At level ``n`` the algebra ``A_n`` is realized
in ``M_{N_n}`` by ``A_emb`` and ``iota_n(B_n)`` by ``B_emb``; ``lam`` maps
the abstract ``A_n`` into the level ``n+1`` ambient and ``mu`` maps the
abstract ``B_n`` into the abstract (block-diagonal) ``B_{n+1}``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .algebra import (
    OperatorSubspace,
    SubalgebraEmbedding,
    embedding_from_json,
    embedding_subspace,
    embedding_to_json,
    validate_embedding,
)
from .fullness import (
    BudgetExhausted,
    FullnessCertificate,
    certificate_from_expectation,
    relatively_full,
    verify_certificate,
)
from .matcore import (
    DEFAULT_TOL,
    ToleranceConfig,
    as_square,
    dagger,
    matrix_from_json,
    matrix_to_json,
    op_norm,
    swap_operator,
)
from .orthogonality import (
    certify_nonorthogonal_conjugate,
    intertwiner_construct,
    pair_nonorthogonal_sampled,
)


@dataclass(eq=False)
class TowerLevel:
    index: int
    A_emb: SubalgebraEmbedding
    B_emb: SubalgebraEmbedding
    lam: SubalgebraEmbedding | None = None
    mu: SubalgebraEmbedding | None = None
    level_unitary: np.ndarray | None = None
    unitary_dims: tuple[int, int] | None = None

    @property
    def ambient_dim(self) -> int:
        return self.A_emb.ambient_dim

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "A_emb": embedding_to_json(self.A_emb, explicit=False),
            "B_emb": embedding_to_json(self.B_emb, explicit=False),
            "lambda": None if self.lam is None else embedding_to_json(self.lam, explicit=False),
            "mu": None if self.mu is None else embedding_to_json(self.mu, explicit=False),
            "level_unitary": None if self.level_unitary is None else matrix_to_json(self.level_unitary),
            "unitary_dims": None if self.unitary_dims is None else list(self.unitary_dims),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TowerLevel":
        def emb(key):
            return None if obj.get(key) is None else embedding_from_json(obj[key])

        u = obj.get("level_unitary")
        dims = obj.get("unitary_dims")
        return cls(int(obj["index"]), emb("A_emb"), emb("B_emb"), emb("lambda"), emb("mu"),
                   None if u is None else matrix_from_json(u), None if dims is None else tuple(dims))


@dataclass(eq=False)
class Tower:
    levels: list
    params: dict = field(default_factory=dict)
    log: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> TowerLevel:
        if not 1 <= n <= self.depth:
            raise IndexError(f"level {n} out of range 1..{self.depth}")
        return self.levels[n - 1]

    def push(self, x, n: int, m: int) -> np.ndarray:
        """``lambda_{m,n}`` applied to an element of ``A_n`` given in the level-``n`` ambient."""
        if not 1 <= n <= m <= self.depth:
            raise IndexError(f"need 1 <= n <= m <= depth, got n={n}, m={m}")
        x = np.asarray(x, dtype=complex)
        for j in range(n, m):
            lv = self.level(j)
            x = lv.lam.apply(lv.A_emb.coords(x))
        return x

    def to_json(self) -> dict:
        return {"params": self.params, "levels": [lv.to_json() for lv in self.levels], "log": self.log}

    @classmethod
    def from_json(cls, obj: dict) -> "Tower":
        return cls([TowerLevel.from_json(lv) for lv in obj["levels"]], obj.get("params", {}), obj.get("log", []))


# --- UHF construction ---------------------------------------------------------

def regroup_sequences(ks, ls, depth: int, max_ambient: int = 4096, strict: bool = False):
    """Greedy regrouping so that ``k_{n+1} >= d_1 ... d_n`` at every level.

    The input lists are continued periodically.  Consecutive factors are
    multiplied into the current level until the inequality holds (strict
    inequality with ``strict``).  At equality the intertwiner is a flip and
    ``lambda_n(A_n)`` lands inside ``iota_{n+1}(B_{n+1})``, so the ladder is
    not regular there; ``strict`` avoids that at the price of larger levels.
    """
    ks, ls = [int(k) for k in ks], [int(l) for l in ls]
    if not ks or len(ks) != len(ls):
        raise ValueError("ks and ls must be non-empty and of equal length")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    for k, l in zip(ks, ls):
        if k < 2 or l % k or l == k:
            raise ValueError(f"k={k} must be a proper divisor of l={l} (and k >= 2)")
    stream = itertools.cycle(zip(ks, ls))
    rk, rl = [], []
    d_prod = 1
    ambient = 1
    for level in range(depth):
        k, l = next(stream)
        while level > 0 and (k < d_prod or (strict and k == d_prod)):
            k2, l2 = next(stream)
            k, l = k * k2, l * l2
            if ambient * l > max_ambient:
                raise ValueError(
                    f"regrouping impossible within ambient limit {max_ambient} at level {level + 1}")
        ambient *= l
        if ambient > max_ambient:
            raise ValueError(f"level {level + 1} ambient dimension {ambient} exceeds limit {max_ambient}")
        rk.append(k)
        rl.append(l)
        d_prod *= l // k
    return rk, rl


def build_uhf_tower(ks, ls, depth: int, seed=None, max_ambient: int = 4096, strict: bool = False,
                    tol: ToleranceConfig = DEFAULT_TOL) -> Tower:
    """Prefix of a C*-irreducible UHF inclusion ``(x) M_{k_n} -> (x) M_{l_n}``.

    ``iota_1(x) = x (x) 1_{d_1}``.  Given ``iota_n(x) = W_n (x (x) 1_D) W_n^*``
    with ``D = d_1 ... d_n``, the next level uses the intertwiner ``u`` for
    ``(D, k_{n+1})`` and ``j(y) = u^*(1_D (x) y)u (x) 1_{d_{n+1}}``, i.e.
    ``W_{n+1} = (W_n (x) 1)(1_K (x) u^* S (x) 1_{d_{n+1}})`` with ``S`` the
    flip ``C^{k_{n+1}} (x) C^D -> C^D (x) C^{k_{n+1}}``.  The construction is
    deterministic; ``seed`` is only recorded.
    """
    rk, rl = regroup_sequences(ks, ls, depth, max_ambient, strict)
    levels = []
    k1, l1 = rk[0], rl[0]
    w = np.eye(l1, dtype=complex)
    big_k, big_n = k1, l1
    levels.append(TowerLevel(1, SubalgebraEmbedding.full(big_n),
                             SubalgebraEmbedding.from_isometries(big_n, [big_k], [w])))
    log = []
    for idx in range(1, depth):
        k_next, l_next = rk[idx], rl[idx]
        d_next = l_next // k_next
        big_d = big_n // big_k
        it = intertwiner_construct(big_d, k_next)
        u = it.u
        core = dagger(u) @ swap_operator(k_next, big_d)
        w = np.kron(w, np.eye(l_next)) @ np.kron(np.kron(np.eye(big_k), core), np.eye(d_next))
        prev = levels[-1]
        prev.lam = SubalgebraEmbedding.tensor_left(big_n, l_next)
        prev.mu = SubalgebraEmbedding.tensor_left(big_k, k_next)
        big_k, big_n = big_k * k_next, big_n * l_next
        levels.append(TowerLevel(idx + 1, SubalgebraEmbedding.full(big_n),
                                 SubalgebraEmbedding.from_isometries(big_n, [big_k], [w]),
                                 level_unitary=u, unitary_dims=(big_d, k_next)))
        log.append({"level": idx + 1, "D": big_d, "k": k_next, "ambient": big_n})
    for lv in levels:
        for name, emb in (("A_emb", lv.A_emb), ("B_emb", lv.B_emb)):
            rep = validate_embedding(emb, tol)
            if not rep.ok:
                raise AssertionError(f"level {lv.index} {name} failed validation: {rep.residuals}")
    params = {"ks": list(ks), "ls": list(ls), "regrouped_ks": rk, "regrouped_ls": rl,
              "depth": depth, "seed": seed, "strict": strict}
    return Tower(levels, params, log)


def non_regular_example() -> Tower:
    """``B_1 = C``, ``B_2 = A_1 = M_2`` inside ``A_1 = M_2 -> A_2 = M_4``.

    The squares commute but ``lambda(A_1) (in) iota_2(B_2)`` is all of
    ``M_2 (x) 1``, strictly larger than ``lambda(iota_1(B_1)) = C 1``.
    """
    lam1 = SubalgebraEmbedding.tensor_left(2, 2)
    lv1 = TowerLevel(1, SubalgebraEmbedding.full(2), SubalgebraEmbedding.scalars(2),
                     lam=lam1, mu=SubalgebraEmbedding.scalars(2))
    lv2 = TowerLevel(2, SubalgebraEmbedding.full(4), SubalgebraEmbedding.tensor_left(2, 2))
    return Tower([lv1, lv2], {"kind": "non_regular_example"})


def degenerate_tower(blocks=(2, 2), depth: int = 2) -> Tower:
    """``B_n = A_n = (+) M_{n_i}`` block-diagonal at every level, identity connecting maps."""
    emb = SubalgebraEmbedding.block_diagonal(list(blocks))
    levels = []
    for n in range(1, depth + 1):
        lam = mu = emb if n < depth else None
        levels.append(TowerLevel(n, emb, emb, lam=lam, mu=mu))
    return Tower(levels, {"kind": "degenerate", "blocks": list(blocks)})


# --- verification -------------------------------------------------------------

def verify_commuting_squares(t: Tower, expectations: bool = False,
                             tol: ToleranceConfig = DEFAULT_TOL) -> dict:
    """Residuals of ``iota_{n+1} o mu_n = lambda_n o iota_n`` on matrix units of ``B_n``.

    With ``expectations`` also reports ``E_{n+1} o lambda_n - mu_n o E_n`` on
    matrix units of ``A_n`` (``E_n`` the trace-preserving expectation onto
    ``iota_n(B_n)`` in abstract coordinates); that part is informational and
    does not affect ``ok``.
    """
    per_level = []
    for n in range(1, t.depth):
        lv, nxt = t.level(n), t.level(n + 1)
        worst = 0.0
        for key in lv.B_emb.unit_indices():
            e_abs = _abstract_unit(lv.B_emb, key)
            lhs = nxt.B_emb.apply(lv.mu.apply(e_abs))
            rhs = lv.lam.apply(lv.A_emb.coords(lv.B_emb.apply(e_abs)))
            worst = max(worst, op_norm(lhs - rhs))
        entry = {"level": n, "square_residual": worst}
        if expectations:
            exp_worst = 0.0
            for key in lv.A_emb.unit_indices():
                x = lv.A_emb.unit_image(*key)
                lhs = nxt.B_emb.coords(lv.lam.apply(lv.A_emb.coords(x)))
                rhs = lv.mu.apply(lv.B_emb.coords(x))
                exp_worst = max(exp_worst, op_norm(lhs - rhs))
            entry["expectation_residual"] = exp_worst
        per_level.append(entry)
    max_res = max((e["square_residual"] for e in per_level), default=0.0)
    report = {"levels": per_level, "max_residual": max_res, "ok": bool(max_res <= 1e-9)}
    if expectations:
        exp_max = max((e["expectation_residual"] for e in per_level), default=0.0)
        report["max_expectation_residual"] = exp_max
        report["expectations_compatible"] = bool(exp_max <= 1e-9)
    return report


def _abstract_unit(emb: SubalgebraEmbedding, key) -> np.ndarray:
    i, s, t = key
    size = emb.abstract_size
    off = emb.structure.offsets()[i]
    e = np.zeros((size, size), dtype=complex)
    e[off + s, off + t] = 1.0
    return e


def _pushed_subspace(t: Tower, emb: SubalgebraEmbedding, n: int, m: int,
                     tol: ToleranceConfig) -> OperatorSubspace:
    basis = embedding_subspace(emb).basis
    pushed = [t.push(b, n, m) for b in basis]
    return OperatorSubspace.from_span(t.level(m).ambient_dim, pushed, tol)


def regularity_check(t: Tower, n: int, m: int, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    """Finite-depth regularity: ``lambda_{m,n}(A_n) (in) iota_m(B_m) = lambda_{m,n}(iota_n(B_n))``."""
    if not 1 <= n < m <= t.depth:
        raise IndexError(f"need 1 <= n < m <= depth={t.depth}, got n={n}, m={m}")
    return regularity_details(t, n, m, tol)["regular"]


def regularity_details(t: Tower, n: int, m: int, tol: ToleranceConfig = DEFAULT_TOL) -> dict:
    lv = t.level(n)
    s_a = _pushed_subspace(t, lv.A_emb, n, m, tol)
    s_b = embedding_subspace(t.level(m).B_emb)
    target = _pushed_subspace(t, lv.B_emb, n, m, tol)
    inter = s_a.intersect(s_b, tol)
    regular = inter.dim == target.dim and inter.contains_subspace(target, tol) and target.contains_subspace(inter, tol)
    return {"n": n, "m": m, "intersection_dim": inter.dim, "target_dim": target.dim, "regular": bool(regular)}


def verify_corollary_conditions(t: Tower, budget: int = 4096, rng_seed=0, samples: int = 200,
                                tol: ToleranceConfig = DEFAULT_TOL) -> dict:
    """Everywhere non-orthogonality of ``lambda_n(A_n)`` and ``A_{n+1} (in) iota_{n+1}(B_{n+1})'``.

    Levels carrying their construction unitary reduce to the conjugate pair
    ``M_D (x) 1`` versus ``u^*(M_D (x) 1)u``; other levels fall back to
    refute-only sampling of minimal projections.
    """
    entries = []
    for n in range(1, t.depth):
        lv, nxt = t.level(n), t.level(n + 1)
        if nxt.level_unitary is not None:
            d, k = nxt.unitary_dims
            rep = certify_nonorthogonal_conjugate(nxt.level_unitary, d, k, budget, rng_seed, tol=tol)
            method = "conjugate_pair"
        else:
            comm = nxt.B_emb.commutant_embedding()
            rep = pair_nonorthogonal_sampled(lv.lam, comm, samples, rng_seed, tol)
            method = "sampled"
        entries.append({"level": n + 1, "status": rep.status, "margin": rep.margin, "method": method,
                        "evaluations": rep.evaluations})
    statuses = [e["status"] for e in entries]
    if not statuses:
        overall = "certified"
    elif "refuted" in statuses:
        overall = "refuted"
    elif all(s == "certified" for s in statuses):
        overall = "certified"
    else:
        overall = "unknown"
    return {"levels": entries, "status": overall}


@dataclass
class Propagation:
    level: int | None
    certificate: FullnessCertificate | None
    spectra: list

    @property
    def found(self) -> bool:
        return self.level is not None

    def to_json(self) -> dict:
        return {"found": self.found, "level": self.level,
                "certificate": None if self.certificate is None else self.certificate.to_json(),
                "spectra": self.spectra}


def propagate_fullness(t: Tower, n: int, a, rng_seed=None, budget: int = 512, target_margin: float = 1.0,
                       tol: ToleranceConfig = DEFAULT_TOL) -> Propagation:
    """First level ``m >= n`` at which ``lambda_{m,n}(a)`` is full relatively to ``iota_m(B_m)``."""
    a = as_square(a)
    if a.shape[0] != t.level(n).ambient_dim:
        raise ValueError("element does not live in the level-n ambient")
    if op_norm(a) <= tol.eig_floor:
        raise ValueError("element is (numerically) zero")
    if t.level(n).A_emb.membership_residual(a) > tol.eig_floor:
        raise ValueError("element is not in A_n")
    spectra = []
    rng = np.random.default_rng(rng_seed)
    for m in range(n, t.depth + 1):
        x = t.push(a, n, m)
        emb = t.level(m).B_emb
        dec = relatively_full(x, emb, tol)
        if dec.full:
            try:
                cert = certificate_from_expectation(x, emb, target_margin, rng, budget, tol)
            except BudgetExhausted:
                spectra.append({"level": m, "min_eig_expectation": dec.min_eig_expectation,
                                "note": "budget exhausted"})
                continue
            if not verify_certificate(x, cert, emb, tol).ok:
                raise AssertionError("constructed certificate failed verification")
            return Propagation(m, cert, spectra)
        spectra.append({"level": m, "min_eig_expectation": dec.min_eig_expectation})
    return Propagation(None, None, spectra)


# --- Christensen budget -------------------------------------------------------

@dataclass
class BudgetTable:
    delta: float
    exponent: float
    gammas: list      # gamma_1 .. gamma_{n+1}
    etas: list        # eta_1 .. eta_n
    exact: dict = field(repr=False, default_factory=dict)

    def to_json(self) -> dict:
        return {"delta": self.delta, "q": self.exponent,
                "table": [{"j": j + 1, "gamma": g, "eta": (self.etas[j] if j < len(self.etas) else None)}
                          for j, g in enumerate(self.gammas)]}


def _budget_recursion(n: int, delta):
    gam = [None] * (n + 2)
    eta = [None] * (n + 1)
    gam[n + 1] = 120 * mpmath.sqrt(delta)
    for j in range(n, 0, -1):
        eta[j] = 120 * mpmath.sqrt(2 * gam[j + 1])
        gam[j] = gam[j + 1] + eta[j]
    return gam, eta


def budget_constraints_hold(n: int, eps, delta, gam) -> dict:
    limit = mpmath.mpf(10) ** -4
    checks = {
        "delta_below_1e-4": bool(0 < delta < limit),
        "gamma1_le_eps": bool(gam[1] <= eps),
        "two_gamma_below_1e-4": all(2 * gam[j] < limit for j in range(2, n + 1)),
    }
    return checks


def christensen_budget(n: int, eps: float, q_max: float = 2000.0) -> BudgetTable:
    """Largest ``delta = 10^{-q}`` (``q`` in quarter steps) meeting the budget constraints.

    ``gamma_{n+1} = 120 delta^{1/2}``, ``eta_j = 120 (2 gamma_{j+1})^{1/2}``,
    ``gamma_j = gamma_{j+1} + eta_j``; need ``delta < 10^{-4}``,
    ``gamma_1 <= eps`` and ``2 gamma_j < 10^{-4}`` for ``2 <= j <= n``.
    Evaluated in 60-digit arithmetic.
    """
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    with mpmath.workdps(60):
        eps_m = mpmath.mpf(eps)
        q = mpmath.mpf(4.25)
        last = None
        while q <= q_max:
            delta = mpmath.mpf(10) ** (-q)
            gam, eta = _budget_recursion(n, delta)
            checks = budget_constraints_hold(n, eps_m, delta, gam)
            if all(checks.values()):
                return BudgetTable(float(delta), float(q), [float(g) for g in gam[1:]],
                                   [float(e) for e in eta[1:]],
                                   {"delta": delta, "gammas": gam[1:], "etas": eta[1:], "checks": checks})
            last = checks
            q += mpmath.mpf(0.25)
    binding = [k for k, v in (last or {}).items() if not v]
    raise ValueError(f"constraints unsatisfiable for q <= {q_max}; binding: {binding}")


__all__ = [
    "TowerLevel", "Tower", "regroup_sequences", "build_uhf_tower", "non_regular_example", "degenerate_tower",
    "verify_commuting_squares", "regularity_check", "regularity_details", "verify_corollary_conditions",
    "Propagation", "propagate_fullness", "BudgetTable", "christensen_budget", "budget_constraints_hold",
]
