"""Reference computations that share no code with the package under test."""
from __future__ import annotations

from decimal import Decimal, getcontext

import mpmath
import numpy as np


def charpoly_coeffs(a, dps: int = 40):
    """Faddeev-LeVerrier characteristic polynomial in mpmath, highest degree first.

    ``M_1 = 1``, ``c_{k} = -tr(A M_k)/k``, ``M_{k+1} = A M_k + c_k 1``.
    """
    with mpmath.workdps(dps):
        n = a.shape[0]
        m = mpmath.matrix([[mpmath.mpc(complex(a[i, j])) for j in range(n)] for i in range(n)])
        eye = mpmath.eye(n)
        coeffs = [mpmath.mpf(1)]
        mk = eye
        for k in range(1, n + 1):
            am = m * mk
            c = -sum(am[i, i] for i in range(n)) / k
            coeffs.append(c)
            mk = am + c * eye
        return coeffs


def charpoly_min_eig(a, dps: int = 40) -> float:
    """Smallest eigenvalue of a hermitian matrix from the roots of its characteristic polynomial."""
    with mpmath.workdps(dps):
        roots = mpmath.polyroots(charpoly_coeffs(a, dps), maxsteps=400, extraprec=200)
        return float(min(mpmath.re(r) for r in roots))


def commutator_nullspace(generators, n: int, tol: float = 1e-9):
    """Orthonormal basis (as matrices) of ``{X : [X, g] = 0 for all g}`` by brute-force linear algebra.

    With row-major ``vec``, ``vec(X g) = (1 (x) g^T) vec X`` and ``vec(g X) = (g (x) 1) vec X``.
    """
    eye = np.eye(n)
    rows = [np.kron(eye, g.T) - np.kron(g, eye) for g in generators]
    stack = np.concatenate(rows, axis=0)
    _, sv, vh = np.linalg.svd(stack)
    rank = int(np.sum(sv > tol * max(1.0, sv[0])))
    return vh[rank:].conj().reshape(-1, n, n)


def hs_projection(basis, x):
    """Orthogonal projection onto the span of an orthonormal (HS) family of matrices."""
    return sum(np.vdot(b, x) * b for b in basis)


def haar_mc_twirl(unitaries_of_b, a):
    """``(1/m) sum u a u^*`` over given unitaries."""
    return np.mean([u @ a @ u.conj().T for u in unitaries_of_b], axis=0)


def corner_rho(d: int, k: int):
    """``rho : M_d -> M_k`` onto the upper-left corner and ``f = rho(1)``."""
    def rho(x):
        out = np.zeros((k, k), dtype=complex)
        out[:d, :d] = x
        return out
    return rho, rho(np.eye(d))


def block_hs_norm(u, x, y, d: int, k: int) -> float:
    """``||(p_x (x) 1) u (p_y (x) 1)||_HS`` by explicit Kronecker products."""
    px = np.kron(np.outer(x, x.conj()), np.eye(k))
    py = np.kron(np.outer(y, y.conj()), np.eye(k))
    return float(np.linalg.norm(px @ u @ py))


def budget_recursion_decimal(n: int, delta: Decimal, digits: int = 80):
    """The gamma/eta recursion in Python decimals (independent of mpmath)."""
    getcontext().prec = digits
    gam = {n + 1: Decimal(120) * delta.sqrt()}
    eta = {}
    for j in range(n, 0, -1):
        eta[j] = Decimal(120) * (2 * gam[j + 1]).sqrt()
        gam[j] = gam[j + 1] + eta[j]
    return gam, eta
