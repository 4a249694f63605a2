"""Dense complex matrix substrate: spectra, functional calculus, tensors, Haar sampling.

Matrices are plain ``numpy.ndarray`` objects of complex dtype.  Every
function here is pure; inputs are never modified.

Kronecker products use the left-factor-outermost convention of
:func:`numpy.kron`: ``tensor(a, b)`` is the block matrix whose ``(i, j)``
block is ``a[i, j] * b``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical thresholds shared by all decision procedures.

    eig_floor
        Eigenvalues at or below this count as zero (invertibility, positivity,
        membership residuals).
    identity_tol
        Allowed residual in algebraic identities (unitarity, matrix-unit
        relations, hermiticity).
    cert_margin
        Fraction of the smallest eigenvalue of ``E(a)`` a sampled Riemann sum
        must reach before a certificate is emitted.
    """

    eig_floor: float = 1e-9
    identity_tol: float = 1e-10
    cert_margin: float = 0.5

    def __post_init__(self):
        for name in ("eig_floor", "identity_tol", "cert_margin"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {value}")
        if not 0 < self.cert_margin < 1:
            raise ValueError(f"cert_margin must lie in (0, 1), got {self.cert_margin}")


DEFAULT_TOL = ToleranceConfig()


def as_square(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a complex square array, validating shape and finiteness."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def op_norm(a: np.ndarray) -> float:
    """Operator (spectral) norm."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hermitian_residual(a: np.ndarray) -> float:
    return op_norm(a - dagger(a))


def min_eigenvalue(a, tol: ToleranceConfig = DEFAULT_TOL, check: bool = True) -> float:
    """Smallest eigenvalue of the symmetrized matrix ``(a + a*)/2``.

    With ``check`` the input must be hermitian up to ``identity_tol`` relative
    to its norm.
    """
    a = as_square(a)
    if check:
        scale = max(1.0, op_norm(a))
        if hermitian_residual(a) > tol.identity_tol * scale * 10:
            raise ValueError("matrix is not hermitian within tolerance")
    return float(np.linalg.eigvalsh(hermitian_part(a))[0])


def eigh(a: np.ndarray):
    """Eigen-decomposition of the hermitian part, eigenvalues ascending."""
    return np.linalg.eigh(hermitian_part(np.asarray(a, dtype=complex)))


def apply_function(a: np.ndarray, f) -> np.ndarray:
    """Continuous functional calculus ``f(a)`` for a hermitian matrix."""
    w, v = eigh(a)
    return (v * f(w)) @ dagger(v)


def is_positive(a, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    a = as_square(a)
    scale = max(1.0, op_norm(a))
    if hermitian_residual(a) > tol.identity_tol * scale * 10:
        return False
    return min_eigenvalue(a, tol, check=False) >= -tol.eig_floor * scale


def positive_part_shift(a, eps: float, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """``(a - eps)_+``: apply ``t -> max(t - eps, 0)`` to the spectrum of ``a``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    a = as_square(a)
    if not is_positive(a, tol):
        raise ValueError("positive_part_shift needs a positive semidefinite input")
    return apply_function(a, lambda t: np.maximum(t - eps, 0.0))


def cutoff_function(delta: float, eps: float):
    """Piecewise-linear ramp: 0 on ``[0, delta]``, 1 on ``[eps, inf)``."""
    if not 0 <= delta < eps:
        raise ValueError(f"need 0 <= delta < eps, got delta={delta}, eps={eps}")

    def phi(t):
        return np.clip((np.asarray(t) - delta) / (eps - delta), 0.0, 1.0)

    return phi


def cutoff_apply(b, delta: float, eps: float) -> np.ndarray:
    """``phi(b)`` for the ramp of :func:`cutoff_function`; a positive contraction."""
    phi = cutoff_function(delta, eps)
    return apply_function(as_square(b), phi)


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    return apply_function(a, lambda t: np.sqrt(np.maximum(t, 0.0)))


def haar_unitary(n: int, rng_seed=None, size: int | None = None) -> np.ndarray:
    """Haar-distributed unitary (or a stack of ``size`` of them).

    QR of a complex Ginibre matrix with the phases of ``diag(R)`` moved into
    ``Q``.  ``rng_seed`` may be an int, ``None`` or a ``numpy.random.Generator``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    rng = np.random.default_rng(rng_seed)
    shape = (n, n) if size is None else (size, n, n)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return q * ph[..., None, :]


def tensor(*factors) -> np.ndarray:
    """Kronecker product, left factor outermost."""
    if not factors:
        raise ValueError("tensor needs at least one factor")
    return reduce(np.kron, [np.asarray(f, dtype=complex) for f in factors])


def direct_sum(*blocks) -> np.ndarray:
    """Block-diagonal sum."""
    blocks = [np.atleast_2d(np.asarray(b, dtype=complex)) for b in blocks]
    n = sum(b.shape[0] for b in blocks)
    m = sum(b.shape[1] for b in blocks)
    out = np.zeros((n, m), dtype=complex)
    i = j = 0
    for b in blocks:
        out[i:i + b.shape[0], j:j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    return out


def matrix_unit(n: int, s: int, t: int) -> np.ndarray:
    """``e_{st}`` in ``M_n`` (0-based indices)."""
    e = np.zeros((n, n), dtype=complex)
    e[s, t] = 1.0
    return e


def swap_operator(m: int, n: int) -> np.ndarray:
    """Unitary ``S: C^m (x) C^n -> C^n (x) C^m`` with ``S (x (x) y) = y (x) x``."""
    s = np.zeros((n * m, m * n), dtype=complex)
    for i in range(m):
        for j in range(n):
            s[j * m + i, i * n + j] = 1.0
    return s


def random_hermitian(n: int, rng) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return hermitian_part(z)


def random_positive(n: int, rng, rank: int | None = None) -> np.ndarray:
    """Random positive semidefinite matrix of the given rank (full rank by default)."""
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return g @ dagger(g)


def random_unit_vector(n: int, rng) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


# --- JSON matrix format: {"dim": N, "re": [[...]], "im": [[...]]} -------------

def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError("matrix_to_json expects a 2-d array")
    out = {"re": a.real.tolist(), "im": a.imag.tolist()}
    if a.shape[0] == a.shape[1]:
        return {"dim": a.shape[0], **out}
    return {"rows": a.shape[0], "cols": a.shape[1], **out}


def matrix_from_json(obj: dict) -> np.ndarray:
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape or re.ndim != 2:
        raise ValueError("matrix json: 're' and 'im' must be 2-d arrays of equal shape")
    if "dim" in obj:
        n = int(obj["dim"])
        if re.shape != (n, n):
            raise ValueError(f"matrix json: dim={n} but data has shape {re.shape}")
    elif "rows" in obj:
        if re.shape != (int(obj["rows"]), int(obj["cols"])):
            raise ValueError("matrix json: rows/cols disagree with data")
    else:
        raise ValueError("matrix json needs 'dim' (or 'rows'/'cols')")
    return re + 1j * im
