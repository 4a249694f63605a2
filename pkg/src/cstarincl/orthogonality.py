"""Everywhere non-orthogonality of ``M_d (x) 1_k`` and its conjugates.

For a unitary ``u`` in ``M_d (x) M_k`` write ``u = sum_{p,q} u_{pq} (x) e_{pq}``
(the slices).  ``M_d (x) 1`` and ``u^*(M_d (x) 1)u`` are everywhere
non-orthogonal exactly when ``[u_{11} y | u_{12} y | ... | u_{kk} y]`` has
rank ``d`` for every unit ``y``.  The margin

    min_{|y| = 1} sigma_d([u_j y]_j) = min_{|x| = |y| = 1} ||(p_x (x) 1) u (p_y (x) 1)||_HS

is searched over the sphere; any value found is an upper bound on the true
minimum, so a refutation is exact up to tolerance while certification is
numerical evidence only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import norm as _normal, qmc

from .algebra import SubalgebraEmbedding
from .matcore import DEFAULT_TOL, ToleranceConfig, as_square, dagger, op_norm, random_unit_vector

CONFIDENCE_THRESHOLD = 1e-4


@dataclass
class NonOrthReport:
    status: str
    margin: float
    witness: tuple | None = None
    evaluations: int = 0
    trace: list = field(default_factory=list)

    def __post_init__(self):
        if self.status not in ("certified", "refuted", "unknown"):
            raise ValueError(f"bad status {self.status!r}")

    def to_json(self) -> dict:
        out = {"status": self.status, "margin": self.margin, "evaluations": self.evaluations,
               "certified_is_heuristic": True, "trace": self.trace}
        if self.witness is not None:
            out["witness"] = {
                "x": {"re": np.real(self.witness[0]).tolist(), "im": np.imag(self.witness[0]).tolist()},
                "y": {"re": np.real(self.witness[1]).tolist(), "im": np.imag(self.witness[1]).tolist()},
            }
        return out


@dataclass
class Intertwiner:
    u: np.ndarray
    f: np.ndarray
    rho: dict

    def to_json(self) -> dict:
        from .matcore import matrix_to_json
        return {"u": matrix_to_json(self.u), "f": matrix_to_json(self.f),
                "rho": {f"{s + 1}.{t + 1}": matrix_to_json(m) for (s, t), m in self.rho.items()}}


def corner_embedding(d: int, k: int):
    """``f`` = projection onto the first ``d`` coordinates of ``C^k`` and ``rho(x)`` = ``x`` in that corner."""
    f = np.zeros((k, k), dtype=complex)
    f[:d, :d] = np.eye(d)

    def rho(x):
        out = np.zeros((k, k), dtype=complex)
        out[:d, :d] = x
        return out

    return f, rho


def intertwiner_construct(d: int, k: int) -> Intertwiner:
    """Unitary ``u`` with ``u^*(x (x) 1_k)u = 1_d (x) rho(x) + x (x) (1_k - f)``.

    Both sides are unital representations of ``M_d`` on ``C^{dk}`` with
    multiplicity ``k``; ``u = V_1 V_2^*`` where ``V_j`` matches the
    multiplicity spaces of each representation through its matrix units.
    """
    if d < 2 or k < d:
        raise ValueError(f"need k >= d >= 2, got d={d}, k={k}")
    f, rho = corner_embedding(d, k)
    eye_d, eye_k = np.eye(d), np.eye(k)
    images = {}
    for s in range(d):
        for t in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[s, t] = 1.0
            images[(0, s, t)] = np.kron(eye_d, rho(e)) + np.kron(e, eye_k - f)
    second = SubalgebraEmbedding.from_unit_images(d * k, [d], images)
    first = SubalgebraEmbedding.tensor_left(d, k)
    u = first.isometries[0] @ dagger(second.isometries[0])
    rho_units = {(s, t): rho(np.eye(d)[:, [s]] @ np.eye(d)[[t], :]) for s in range(d) for t in range(d)}
    return Intertwiner(u, f, rho_units)


def intertwiner_residual(u, d: int, k: int) -> float:
    """Largest deviation from the intertwining identity over all matrix units."""
    f, rho = corner_embedding(d, k)
    u = np.asarray(u, dtype=complex)
    worst = 0.0
    for s in range(d):
        for t in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[s, t] = 1.0
            lhs = dagger(u) @ np.kron(e, np.eye(k)) @ u
            rhs = np.kron(np.eye(d), rho(e)) + np.kron(e, np.eye(k) - f)
            worst = max(worst, op_norm(lhs - rhs))
    return worst


def slices(u, d: int, k: int) -> np.ndarray:
    """Stack of ``k^2`` slices ``u_{pq}`` (index ``p*k + q``) with ``u = sum u_{pq} (x) e_{pq}``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (d * k, d * k):
        raise ValueError(f"expected a {d * k}x{d * k} matrix for d={d}, k={k}, got {u.shape}")
    r = u.reshape(d, k, d, k)          # [s, p, t, q]
    return np.transpose(r, (1, 3, 0, 2)).reshape(k * k, d, d)


def from_slices(sl, d: int, k: int) -> np.ndarray:
    sl = np.asarray(sl, dtype=complex).reshape(k, k, d, d)   # [p, q, s, t]
    return np.transpose(sl, (2, 0, 3, 1)).reshape(d * k, d * k)


def sphere_points(d: int, n: int, rng_seed=0) -> np.ndarray:
    """``n`` quasi-random unit vectors in ``C^d`` (scrambled Sobol, Gaussian-normalized)."""
    if n <= 0:
        return np.zeros((0, d), dtype=complex)
    sampler = qmc.Sobol(2 * d, scramble=True, seed=rng_seed)
    m = math.ceil(math.log2(max(n, 2)))
    pts = sampler.random_base2(m)[:n]
    z = _normal.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    v = z[:, :d] + 1j * z[:, d:]
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def margin_at(sl, ys) -> np.ndarray:
    """``sigma_d([A_j y]_j)`` for each row ``y`` of ``ys``."""
    sl = np.asarray(sl, dtype=complex)
    ys = np.atleast_2d(ys)
    d = sl.shape[1]
    cols = np.einsum("jst,nt->nsj", sl, ys)            # n x d x m
    if cols.shape[2] < d:
        return np.zeros(ys.shape[0])
    sv = np.linalg.svd(cols, compute_uv=False)
    return sv[:, d - 1]


def _bottom_eigvec(h: np.ndarray):
    w, v = np.linalg.eigh(0.5 * (h + dagger(h)))
    return w[0], v[:, 0], (w[1] - w[0]) if len(w) > 1 else np.inf


def local_descent(sl, y0, iters: int = 200, rng=None, tol: float = 1e-14):
    """Alternating minimization of ``sum_j |<x, A_j y>|^2`` over unit ``x``, ``y``.

    Each half-step is an exact bottom-eigenvector solve, so the objective is
    non-increasing.  When the bottom eigenvalue is (nearly) degenerate the
    point is perturbed randomly and the better of the two continuations kept.
    Returns ``(value, y, x)`` with ``value = sigma_d`` at the final ``y``.
    """
    sl = np.asarray(sl, dtype=complex)
    rng = np.random.default_rng(rng)
    d = sl.shape[1]
    y = np.asarray(y0, dtype=complex) / np.linalg.norm(y0)
    prev = np.inf
    x = None
    for _ in range(iters):
        cols = np.einsum("jst,t->sj", sl, y)
        g = cols @ dagger(cols)
        lam, x, gap = _bottom_eigvec(g)
        h = np.einsum("jts,t,u,juv->sv", sl.conj(), x, x.conj(), sl)   # sum_j A_j^* x x^* A_j
        lam_y, y_new, gap_y = _bottom_eigvec(h)
        if min(gap, gap_y) < 1e-9 and lam_y > 1e-12:
            trial = y_new + 1e-3 * random_unit_vector(d, rng)
            trial /= np.linalg.norm(trial)
            if margin_at(sl, trial[None])[0] ** 2 < lam_y:
                y_new = trial
        y = y_new
        if prev - lam_y <= tol * max(1.0, prev):
            prev = min(prev, lam_y)
            break
        prev = lam_y
    val = float(margin_at(sl, y[None])[0])
    cols = np.einsum("jst,t->sj", sl, y)
    _, x, _ = _bottom_eigvec(cols @ dagger(cols))
    return val, y, x


def bilinear_polish(sl, x0, y0, max_nfev: int = 300):
    """Least-squares solve of ``<x, A_j y> = 0`` for all ``j`` near ``(x0, y0)``.

    Works in the affine charts ``x_i = 1``, ``y_j = 1`` at the largest
    coordinates of the start, so the residual has no scaling freedom.  The
    alternating scheme tends to stall in shallow basins; this converges
    quadratically onto exact rank drops when one is nearby.
    Returns ``(value, y, x)`` with ``value = sigma_d`` at the final ``y``.
    """
    sl = np.asarray(sl, dtype=complex)
    d = sl.shape[1]
    n = d - 1
    x0 = np.asarray(x0, dtype=complex)
    y0 = np.asarray(y0, dtype=complex)
    i, j = int(np.argmax(np.abs(x0))), int(np.argmax(np.abs(y0)))
    xs, ys = np.delete(x0 / x0[i], i), np.delete(y0 / y0[j], j)

    def unpack(z):
        x = np.insert(z[:n] + 1j * z[n:2 * n], i, 1.0)
        y = np.insert(z[2 * n:3 * n] + 1j * z[3 * n:], j, 1.0)
        return x, y

    def residual(z):
        x, y = unpack(z)
        r = np.einsum("s,jst,t->j", x.conj(), sl, y)
        return np.concatenate([r.real, r.imag])

    if n == 0:
        y = np.ones(1, dtype=complex)
    else:
        z0 = np.concatenate([xs.real, xs.imag, ys.real, ys.imag])
        out = least_squares(residual, z0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=max_nfev)
        _, y = unpack(out.x)
        y = y / np.linalg.norm(y)
    val = float(margin_at(sl, y[None])[0])
    cols = np.einsum("jst,t->sj", sl, y)
    _, x, _ = _bottom_eigvec(cols @ dagger(cols))
    return val, y, x


@dataclass
class MarginResult:
    value: float
    argmin: np.ndarray
    left: np.ndarray
    evaluations: int
    grid_value: float
    descent_value: float


def min_rank_margin(sl, search: str = "both", grid: int = 4096, starts: int = 16, iters: int = 200,
                    rng_seed=0) -> MarginResult:
    """Estimate ``min_y sigma_d([A_j y]_j)`` over unit ``y`` (an upper bound on the minimum).

    ``search`` is ``"grid"``, ``"multistart"`` or ``"both"``.  Grid points
    and descent starts come from independent streams of ``rng_seed`` so a
    larger budget always extends a smaller one.
    """
    sl = np.asarray(sl, dtype=complex)
    if sl.ndim != 3 or sl.shape[1] != sl.shape[2]:
        raise ValueError("slices must be a stack of square matrices")
    if search not in ("grid", "multistart", "both"):
        raise ValueError(f"unknown search mode {search!r}")
    if grid < 0 or starts < 0 or iters < 1:
        raise ValueError("invalid budget")
    d = sl.shape[1]
    grid_seed, start_seed = np.random.SeedSequence(rng_seed).spawn(2)
    best_val, best_y = np.inf, None
    grid_val = descent_val = np.inf
    evals = 0
    ys = np.zeros((0, d), dtype=complex)
    if search in ("grid", "both") and grid > 0:
        ys = sphere_points(d, grid, np.random.default_rng(grid_seed))
        vals = margin_at(sl, ys)
        evals += len(ys)
        i = int(np.argmin(vals))
        grid_val = float(vals[i])
        best_val, best_y = grid_val, ys[i]
    if search in ("multistart", "both") and starts > 0:
        rng = np.random.default_rng(start_seed)
        inits = [random_unit_vector(d, rng) for _ in range(starts)]
        if len(ys):
            # also polish the best grid points
            order = np.argsort(margin_at(sl, ys))[: max(1, starts // 4)]
            inits.extend(ys[order])
        for y0 in inits:
            val, y, x = local_descent(sl, y0, iters, rng)
            pval, py, _ = bilinear_polish(sl, x, y)
            if pval < val:
                val, y = pval, py
            evals += iters
            descent_val = min(descent_val, val)
            if val < best_val:
                best_val, best_y = val, y
    if best_y is None:
        raise ValueError("empty search budget")
    cols = np.einsum("jst,t->sj", sl, best_y)
    _, x, _ = _bottom_eigvec(cols @ dagger(cols))
    return MarginResult(float(best_val), best_y, x, evals, float(grid_val), float(descent_val))


def block_norm(u, x, y, d: int, k: int, hs: bool = True) -> float:
    """``||(p_x (x) 1) u (p_y (x) 1)||`` (HS norm by default, else operator norm)."""
    px = np.outer(x, np.conj(x))
    py = np.outer(y, np.conj(y))
    m = np.kron(px, np.eye(k)) @ np.asarray(u, dtype=complex) @ np.kron(py, np.eye(k))
    return float(np.linalg.norm(m)) if hs else op_norm(m)


def _budget_split(budget: int):
    if budget < 1:
        raise ValueError("budget must be positive")
    grid = int(budget)
    starts = max(4, int(budget) // 128)
    return grid, starts


def certify_nonorthogonal_conjugate(u, d: int, k: int, budget: int = 4096, rng_seed=0,
                                    threshold: float = CONFIDENCE_THRESHOLD,
                                    tol: ToleranceConfig = DEFAULT_TOL) -> NonOrthReport:
    """Decide whether ``M_d (x) 1`` and ``u^*(M_d (x) 1)u`` are everywhere non-orthogonal.

    ``refuted`` when a pair of unit vectors with block norm ``<= eig_floor``
    is found; ``certified`` when both the grid and the multistart descent
    stay above ``threshold`` (numerical evidence, not proof); else ``unknown``.
    """
    if d < 1 or k < 1:
        raise ValueError("invalid dimensions")
    u = as_square(u, "u")
    if u.shape[0] != d * k:
        raise ValueError(f"u must be {d * k}x{d * k}")
    grid, starts = _budget_split(budget)
    res = min_rank_margin(slices(u, d, k), "both", grid=grid, starts=starts, rng_seed=rng_seed)
    trace = [{"grid_min": res.grid_value, "descent_min": res.descent_value}]
    if res.value <= tol.eig_floor:
        return NonOrthReport("refuted", 0.0, (res.left, res.argmin), res.evaluations, trace)
    if res.grid_value > threshold and res.descent_value > threshold:
        return NonOrthReport("certified", res.value, None, res.evaluations, trace)
    return NonOrthReport("unknown", 0.0, None, res.evaluations, trace)


@dataclass(frozen=True)
class BoundCheck:
    status: str
    guaranteed: bool

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def dimension_bound_check(d: int, k: int) -> BoundCheck:
    """Necessary condition ``k^2 >= d + 1``; existence is guaranteed once ``k >= d``."""
    if d < 2 or k < 2:
        raise ValueError("need d, k >= 2")
    if k * k < d + 1:
        return BoundCheck("infeasible", False)
    return BoundCheck("feasible", k >= d)


def _minimal_projection_samples(emb: SubalgebraEmbedding, rng, count: int):
    """For each block, ``count`` Haar-random rank-one projections of that block pushed to ``M_N``."""
    out = []
    for i, n in enumerate(emb.blocks):
        vr = emb._split_iso(i)
        vecs = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        # p = V (xi xi^* (x) 1) V^*; keep the isometry W = V (xi (x) 1) so p = W W^*
        ws = np.einsum("xsa,bs->bxa", vr, vecs)
        out.append((i, ws))
    return out


def _basis_projections(emb: SubalgebraEmbedding):
    """Isometries ``V (e_s (x) 1)`` for every block and every basis index ``s``."""
    return [(i, np.moveaxis(emb._split_iso(i), 1, 0)) for i in range(len(emb.blocks))]


def pair_nonorthogonal_sampled(emb1: SubalgebraEmbedding, emb2: SubalgebraEmbedding, samples: int = 200,
                               rng_seed=0, tol: ToleranceConfig = DEFAULT_TOL) -> NonOrthReport:
    """Search for orthogonal minimal projections ``p`` in ``B_1`` and ``q`` in ``B_2``.

    Refute-only: ``refuted`` with witnesses, otherwise ``unknown``.
    """
    if emb1.ambient_dim != emb2.ambient_dim:
        raise ValueError("embeddings live in different ambient algebras")
    rng = np.random.default_rng(rng_seed)
    evals = 0
    best = np.inf

    def check(s1, s2):
        nonlocal evals, best
        for _, w1 in s1:
            for _, w2 in s2:
                # ||p q|| = ||W1^* W2|| for p = W1 W1^*, q = W2 W2^*
                vals = np.linalg.norm(np.einsum("ixa,jxb->ijab", w1.conj(), w2), ord=2, axis=(2, 3))
                evals += vals.size
                i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
                best = min(best, float(vals[i, j]))
                if vals[i, j] <= tol.eig_floor:
                    return w1[i] @ dagger(w1[i]), w2[j] @ dagger(w2[j])
        return None

    # basis-aligned minimal projections first, then Haar-random ones
    hit = check(_basis_projections(emb1), _basis_projections(emb2))
    for _ in range(max(1, samples)):
        if hit is not None:
            break
        hit = check(_minimal_projection_samples(emb1, rng, 1), _minimal_projection_samples(emb2, rng, 1))
    if hit is not None:
        return NonOrthReport("refuted", 0.0, hit, evals, [{"min_pq_norm": best}])
    return NonOrthReport("unknown", 0.0, None, evals, [{"min_pq_norm": float(best)}])


__all__ = [
    "bilinear_polish",
    "NonOrthReport", "Intertwiner", "intertwiner_construct", "intertwiner_residual", "slices",
    "from_slices", "min_rank_margin", "margin_at", "local_descent", "certify_nonorthogonal_conjugate",
    "dimension_bound_check", "BoundCheck", "pair_nonorthogonal_sampled", "block_norm", "sphere_points",
    "CONFIDENCE_THRESHOLD",
]
