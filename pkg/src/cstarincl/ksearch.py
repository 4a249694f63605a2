"""Numerical search for the least ``k`` admitting an everywhere non-orthogonal conjugate pair.

For fixed ``d`` the objective on ``U(dk)`` is the slice margin
``min_y sigma_d([u_j y]_j)``; it is maximized by multi-start geodesic ascent.
Nothing here proves nonexistence: a failed search reports
``no_witness_found``, distinct from the analytic ``infeasible_by_bound``.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .matcore import dagger, haar_unitary, matrix_from_json, matrix_to_json
from .orthogonality import (
    CONFIDENCE_THRESHOLD,
    certify_nonorthogonal_conjugate,
    dimension_bound_check,
    intertwiner_construct,
    min_rank_margin,
    slices,
)

STATUSES = ("witness_found", "no_witness_found", "infeasible_by_bound")
CSV_COLUMNS = ("d", "k", "status", "margin", "starts", "seed")


@dataclass
class SearchResult:
    d: int
    k: int
    best_margin: float
    best_unitary: np.ndarray | None
    starts: int
    status: str
    seed: int | None = None
    history: list = field(default_factory=list)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")

    def to_json(self) -> dict:
        return {
            "d": self.d, "k": self.k, "status": self.status, "best_margin": self.best_margin,
            "starts": self.starts, "seed": self.seed, "history": self.history,
            "best_unitary": None if self.best_unitary is None else matrix_to_json(self.best_unitary),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SearchResult":
        u = obj.get("best_unitary")
        return cls(int(obj["d"]), int(obj["k"]), float(obj["best_margin"]),
                   None if u is None else matrix_from_json(u), int(obj["starts"]), obj["status"],
                   obj.get("seed"), obj.get("history", []))

    def csv_row(self) -> dict:
        return {"d": self.d, "k": self.k, "status": self.status, "margin": f"{self.best_margin:.6g}",
                "starts": self.starts, "seed": self.seed}


def append_csv(path, results) -> None:
    """Append rows to the evidence table, writing the header for a new file."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        if new:
            w.writeheader()
        for r in results:
            w.writerow(r.csv_row())


def _projector(v: np.ndarray, k: int) -> np.ndarray:
    return np.kron(np.outer(v, v.conj()), np.eye(k))


def ascent_direction(u: np.ndarray, x: np.ndarray, y: np.ndarray, k: int) -> np.ndarray:
    """Hermitian ``H`` of steepest ascent for ``t -> ||(p_x (x) 1) u e^{itH} (p_y (x) 1)||_HS^2`` at 0."""
    px, py = _projector(x, k), _projector(y, k)
    q = dagger(u) @ px @ u
    return 1j * (py @ q - q @ py)


def _margin(u, d, k, rng_seed, grid, starts, iters):
    return min_rank_margin(slices(u, d, k), "both", grid=grid, starts=starts, iters=iters, rng_seed=rng_seed)


def _ascend(u, d, k, iters, inner, seed):
    grid, starts = inner
    res = _margin(u, d, k, seed, grid, starts, 60)
    val = res.value
    step = 0.5
    for _ in range(iters):
        h = ascent_direction(u, res.left, res.argmin, k)
        nrm = np.linalg.norm(h)
        if nrm < 1e-14:
            # stationary for this minimizer; nudge randomly
            h = 1j * np.asarray(haar_unitary(d * k, seed))
            h = 0.5 * (h + dagger(h))
            nrm = np.linalg.norm(h)
        h = h / nrm
        improved = False
        while step > 1e-4:
            cand = u @ expm(1j * step * h)
            cres = _margin(cand, d, k, seed, grid, starts, 60)
            if cres.value > val:
                u, res, val = cand, cres, cres.value
                step = min(1.0, step * 1.5)
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return u, val


def search_unitary(d: int, k: int, starts: int = 4, iters: int = 15, seed: int = 0,
                   certify_budget: int = 4096, inner=(256, 4)) -> SearchResult:
    """Multi-start geodesic ascent of the slice margin over ``U(dk)``.

    Starts are the deterministic intertwiner (when ``k >= d``) followed by
    Haar unitaries from independent seeded streams, so a larger ``starts``
    extends a smaller one.  Candidates are certified in decreasing order of
    their ascent margin.
    """
    if starts < 1 or iters < 0:
        raise ValueError("invalid budget")
    if dimension_bound_check(d, k).status == "infeasible":
        return SearchResult(d, k, 0.0, None, 0, "infeasible_by_bound", seed)
    seeds = np.random.SeedSequence(seed).spawn(starts)
    candidates = []
    history = []
    if k >= d:
        u0 = intertwiner_construct(d, k).u
        candidates.append((_margin(u0, d, k, 0, *inner, 60).value, u0, "intertwiner"))
        history.append({"start": "intertwiner", "margin": candidates[-1][0]})
    for j, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        u = haar_unitary(d * k, rng)
        u, val = _ascend(u, d, k, iters, inner, int(rng.integers(2**31)))
        candidates.append((val, u, f"haar{j}"))
        history.append({"start": f"haar{j}", "margin": val})
    candidates.sort(key=lambda c: -c[0])
    best = None
    for val, u, _ in candidates:
        if val <= CONFIDENCE_THRESHOLD:
            break
        rep = certify_nonorthogonal_conjugate(u, d, k, certify_budget, rng_seed=seed)
        if rep.status == "certified":
            return SearchResult(d, k, rep.margin, u, len(candidates), "witness_found", seed, history)
        if best is None:
            best = (val, u)
    if best is None:
        best = (candidates[0][0], candidates[0][1])
    return SearchResult(d, k, max(0.0, float(best[0])), best[1], len(candidates), "no_witness_found", seed, history)


def k_lower_bound(d: int) -> int:
    """``ceil(sqrt(d + 1))`` in exact integer arithmetic."""
    r = math.isqrt(d + 1)
    return r if r * r == d + 1 else r + 1


def degeneracy_bound(d: int) -> int:
    """Least ``m`` for which ``m`` matrices in ``M_d`` can span at every unit vector.

    ``y -> [A_1 y | ... | A_m y]`` is a bundle map ``O(-1)^m -> O^d`` on
    ``P^{d-1}``.  Its rank-drop locus has expected codimension ``m - d + 1``
    and ``Hom`` is ample, so by Fulton-Lazarsfeld the locus is nonempty
    whenever ``m - d + 1 <= d - 1``.  Hence ``m >= 2d - 1``; a generic family
    of that size works since the expected codimension then exceeds the
    dimension.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    return 2 * d - 1


def k_degeneracy_bound(d: int) -> int:
    """Least ``k`` with ``k^2 >= 2d - 1``; sharper than :func:`k_lower_bound` for some ``d``."""
    m = degeneracy_bound(d)
    r = math.isqrt(m)
    return r if r * r == m else r + 1


def narrow_interval(d: int, budget: int = 4, seed: int = 0, iters: int = 15):
    """``(k_lo, k_hi, evidence)``: analytic lower bound and least ``k`` with a found witness.

    ``k = d`` is settled by the deterministic construction and never searched;
    with ``budget=0`` no search runs and ``k_hi = d``.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    if budget < 0:
        raise ValueError("invalid budget")
    k_lo = k_lower_bound(d)
    evidence = []
    if budget == 0:
        return k_lo, d, evidence
    for k in range(max(2, k_lo), d):
        res = search_unitary(d, k, starts=budget, iters=iters, seed=seed)
        evidence.append(res)
        if res.status == "witness_found":
            return k_lo, k, evidence
    return k_lo, d, evidence


# --- spanning families ------------------------------------------------------------

def family_margin(family, grid: int = 10_000, starts: int = 16, rng_seed=0) -> float:
    """``min_y sigma_d([A_j y]_j)`` estimated on a sphere grid plus descent."""
    fam = np.asarray(family, dtype=complex)
    if fam.ndim == 2:
        fam = fam[None]
    return min_rank_margin(fam, "both", grid=grid, starts=starts, rng_seed=rng_seed).value


def _normalize_family(fam: np.ndarray) -> np.ndarray:
    d = fam.shape[1]
    return fam * math.sqrt(d) / np.linalg.norm(fam)


def _family_ascent(fam, iters, inner, seed):
    grid, starts = inner
    fam = _normalize_family(fam)
    res = min_rank_margin(fam, "both", grid=grid, starts=starts, iters=60, rng_seed=seed)
    val, step = res.value, 0.5
    for _ in range(iters):
        y = res.argmin
        cols = np.einsum("jst,t->sj", fam, y)
        _, _, vh = np.linalg.svd(cols)
        w = vh[-1].conj()          # right singular vector of sigma_d (length m)
        x = res.left
        g = np.einsum("s,j,t->jst", x, w.conj(), y.conj())
        g = g / max(np.linalg.norm(g), 1e-300)
        improved = False
        while step > 1e-4:
            cand = _normalize_family(fam + step * g)
            cres = min_rank_margin(cand, "both", grid=grid, starts=starts, iters=60, rng_seed=seed)
            if cres.value > val:
                fam, res, val = cand, cres, cres.value
                step = min(1.0, step * 1.5)
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return fam, val


def spanning_family_search(d: int, m: int, starts: int = 4, iters: int = 25, seed: int = 0,
                           inner=(256, 4)):
    """Best family of ``m`` matrices in ``M_d`` (normalized to total HS norm ``sqrt d``)."""
    if m < d + 1:
        raise ValueError(f"m={m} < d+1={d + 1}: infeasible by the dimension count")
    best_val, best_fam = -1.0, None
    for ss in np.random.SeedSequence(seed).spawn(starts):
        rng = np.random.default_rng(ss)
        fam = rng.standard_normal((m, d, d)) + 1j * rng.standard_normal((m, d, d))
        fam, val = _family_ascent(fam, iters, inner, int(rng.integers(2**31)))
        if val > best_val:
            best_val, best_fam = val, fam
    return best_fam, best_val


def spanning_family_min(d: int, budget: int = 4, seed: int = 0, iters: int = 25, m_start: int | None = None):
    """``(m_lo, m_hi, best_family, evidence)`` for the spanning-family problem.

    Searches ``m`` downward from ``m_start`` (default ``d^2``, attained by any
    matrix-unit basis) until a family fails to reach the confidence threshold
    on the 10^4-point grid oracle.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    m_lo = d + 1
    m = d * d if m_start is None else int(m_start)
    if m < m_lo:
        raise ValueError(f"m={m} < d+1={m_lo}: infeasible by the dimension count")
    m_hi, best_family, evidence = None, None, []
    while m >= m_lo:
        fam, _ = spanning_family_search(d, m, budget, iters, seed)
        val = family_margin(fam, rng_seed=seed)
        ok = val > CONFIDENCE_THRESHOLD
        evidence.append({"m": m, "margin": val, "found": ok})
        if not ok:
            break
        m_hi, best_family = m, fam
        m -= 1
    return m_lo, m_hi, best_family, evidence


__all__ = [
    "SearchResult", "append_csv", "ascent_direction", "search_unitary", "k_lower_bound", "narrow_interval",
    "degeneracy_bound", "k_degeneracy_bound",
    "family_margin", "spanning_family_search", "spanning_family_min", "CSV_COLUMNS",
]
