"""Concrete finite-dimensional C*-subalgebras of M_N.

A unital subalgebra ``B = (+)_i M_{n_i}`` of ``M_N`` is stored through one
isometry ``V_i: C^{n_i} (x) C^{m_i} -> C^N`` per block, so that the image
of the matrix unit ``e^{(i)}_{st}`` is ``V_i (e_{st} (x) 1_{m_i}) V_i^*``.
``m_i`` is the multiplicity of block ``i``.  This encodes the matrix-unit
images without storing all ``sum n_i^2`` of them, which matters once ``N``
is a few hundred.

Abstract elements of ``B`` are passed around as block-diagonal matrices of
size ``sum n_i`` (blocks in order).  Python indices are 0-based; the JSON
format uses 1-based ``"i.s.t"`` keys.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .matcore import (
    DEFAULT_TOL,
    ToleranceConfig,
    as_square,
    dagger,
    direct_sum,
    haar_unitary,
    is_positive,
    matrix_from_json,
    matrix_to_json,
    matrix_unit,
    min_eigenvalue,
    op_norm,
    swap_operator,
)


@dataclass(frozen=True)
class BlockStructure:
    blocks: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(int(n) for n in self.blocks)
        if not blocks or any(n < 1 for n in blocks):
            raise ValueError(f"block sizes must be a non-empty list of positive integers: {self.blocks}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        return sum(n * n for n in self.blocks)

    @property
    def size(self) -> int:
        return sum(self.blocks)

    def offsets(self) -> list[int]:
        return list(itertools.accumulate((0,) + self.blocks[:-1]))

    def split(self, y: np.ndarray) -> list[np.ndarray]:
        """Cut a block-diagonal abstract element into its diagonal blocks."""
        y = np.asarray(y, dtype=complex)
        if y.shape[-2:] != (self.size, self.size):
            raise ValueError(f"abstract element must be {self.size}x{self.size}, got {y.shape}")
        return [y[..., o:o + n, o:o + n] for o, n in zip(self.offsets(), self.blocks)]

    def join(self, parts) -> np.ndarray:
        return direct_sum(*parts)


@dataclass(frozen=True, eq=False)
class SubalgebraEmbedding:
    """Unital *-embedding of ``(+)_i M_{n_i}`` into ``M_N``.

    Build it with :meth:`from_unit_images` (explicit matrix-unit images, kept
    for validation) or :meth:`from_isometries`.
    """

    ambient_dim: int
    structure: BlockStructure
    isometries: tuple[np.ndarray, ...]
    raw_images: dict | None = field(default=None, repr=False)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_isometries(cls, ambient_dim: int, blocks, isometries) -> "SubalgebraEmbedding":
        structure = BlockStructure(tuple(blocks))
        isos = tuple(np.asarray(v, dtype=complex) for v in isometries)
        if len(isos) != len(structure.blocks):
            raise ValueError("need exactly one isometry per block")
        for n, v in zip(structure.blocks, isos):
            if v.ndim != 2 or v.shape[0] != ambient_dim or v.shape[1] % n or v.shape[1] == 0:
                raise ValueError(
                    f"isometry for block of size {n} must be {ambient_dim} x (n*m), got {v.shape}")
        return cls(int(ambient_dim), structure, isos)

    @classmethod
    def from_unit_images(cls, ambient_dim: int, blocks, images: dict) -> "SubalgebraEmbedding":
        """``images[(i, s, t)]`` is the image of ``e^{(i)}_{st}`` (0-based)."""
        structure = BlockStructure(tuple(blocks))
        imgs = {}
        for i, n in enumerate(structure.blocks):
            for s in range(n):
                for t in range(n):
                    if (i, s, t) not in images:
                        raise ValueError(f"missing unit image {(i, s, t)}")
                    e = as_square(images[(i, s, t)], f"unit image {(i, s, t)}")
                    if e.shape[0] != ambient_dim:
                        raise ValueError(f"unit image {(i, s, t)} has dimension {e.shape[0]} != {ambient_dim}")
                    imgs[(i, s, t)] = e
        isos = []
        for i, n in enumerate(structure.blocks):
            w, v = np.linalg.eigh(0.5 * (imgs[(i, 0, 0)] + dagger(imgs[(i, 0, 0)])))
            range_vecs = v[:, w > 0.5]
            if range_vecs.shape[1] == 0:
                raise ValueError(f"unit image e_11 of block {i + 1} is zero")
            cols = [imgs[(i, s, 0)] @ range_vecs for s in range(n)]
            isos.append(np.concatenate(cols, axis=1))
        return cls(int(ambient_dim), structure, tuple(isos), imgs)

    @classmethod
    def full(cls, n: int) -> "SubalgebraEmbedding":
        """``M_n`` inside itself."""
        return cls.from_isometries(n, [n], [np.eye(n, dtype=complex)])

    @classmethod
    def scalars(cls, n: int) -> "SubalgebraEmbedding":
        """``C 1`` inside ``M_n``."""
        return cls.from_isometries(n, [1], [np.eye(n, dtype=complex)])

    @classmethod
    def tensor_left(cls, n: int, m: int) -> "SubalgebraEmbedding":
        """``M_n (x) 1_m`` inside ``M_n (x) M_m``."""
        return cls.from_isometries(n * m, [n], [np.eye(n * m, dtype=complex)])

    @classmethod
    def tensor_right(cls, n: int, m: int) -> "SubalgebraEmbedding":
        """``1_n (x) M_m`` inside ``M_n (x) M_m``."""
        return cls.from_isometries(n * m, [m], [swap_operator(m, n)])

    @classmethod
    def block_diagonal(cls, blocks, multiplicities=None) -> "SubalgebraEmbedding":
        """``(+)_i M_{n_i} (x) 1_{m_i}`` placed block-diagonally in ``M_{sum n_i m_i}``."""
        blocks = list(blocks)
        mults = [1] * len(blocks) if multiplicities is None else list(multiplicities)
        n_amb = sum(n * m for n, m in zip(blocks, mults))
        eye = np.eye(n_amb, dtype=complex)
        isos, o = [], 0
        for n, m in zip(blocks, mults):
            isos.append(eye[:, o:o + n * m])
            o += n * m
        return cls.from_isometries(n_amb, blocks, isos)

    @classmethod
    def diagonal(cls, n: int) -> "SubalgebraEmbedding":
        """The diagonal matrices in ``M_n``."""
        return cls.block_diagonal([1] * n)

    # -- structure ----------------------------------------------------------

    @property
    def blocks(self) -> tuple[int, ...]:
        return self.structure.blocks

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(v.shape[1] // n for n, v in zip(self.blocks, self.isometries))

    @property
    def abstract_size(self) -> int:
        return self.structure.size

    @property
    def dim(self) -> int:
        return self.structure.dim

    def _split_iso(self, i: int) -> np.ndarray:
        n, m = self.blocks[i], self.multiplicities[i]
        return self.isometries[i].reshape(self.ambient_dim, n, m)

    def unit_image(self, i: int, s: int, t: int) -> np.ndarray:
        if self.raw_images is not None:
            return self.raw_images[(i, s, t)]
        vr = self._split_iso(i)
        return vr[:, s, :] @ dagger(vr[:, t, :])

    def unit_indices(self):
        for i, n in enumerate(self.blocks):
            for s in range(n):
                for t in range(n):
                    yield (i, s, t)

    def unit_images(self) -> dict:
        return {key: self.unit_image(*key) for key in self.unit_indices()}

    # -- maps ---------------------------------------------------------------

    def apply(self, y) -> np.ndarray:
        """Image of an abstract (block-diagonal) element; stacks allowed."""
        parts = self.structure.split(y)
        out = 0
        for i, part in enumerate(parts):
            vr = self._split_iso(i)
            out = out + np.einsum("xsa,...st,yta->...xy", vr, part, vr.conj(), optimize=True)
        return np.asarray(out, dtype=complex)

    def apply_blocks(self, parts) -> np.ndarray:
        """Like :meth:`apply` but takes a list of per-block matrices (or stacks)."""
        out = 0
        for i, part in enumerate(parts):
            vr = self._split_iso(i)
            out = out + np.einsum("xsa,...st,yta->...xy", vr, part, vr.conj(), optimize=True)
        return np.asarray(out, dtype=complex)

    def coords(self, x) -> np.ndarray:
        """Abstract coordinates of the HS-orthogonal projection of ``x`` onto the image."""
        x = np.asarray(x, dtype=complex)
        parts = []
        for i, m in enumerate(self.multiplicities):
            vr = self._split_iso(i)
            parts.append(np.einsum("xsa,...xy,yta->...st", vr.conj(), x, vr, optimize=True) / m)
        if x.ndim == 2:
            return self.structure.join(parts)
        return np.stack([self.structure.join([p[b] for p in parts]) for b in range(x.shape[0])])

    def project(self, x) -> np.ndarray:
        """HS-orthogonal projection of ``x`` onto the subalgebra."""
        return self.apply(self.coords(x))

    def membership_residual(self, x) -> float:
        """Relative HS distance from ``x`` to the subalgebra."""
        x = np.asarray(x, dtype=complex)
        scale = max(1.0, float(np.linalg.norm(x)))
        return float(np.linalg.norm(x - self.project(x))) / scale

    def contains(self, x, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        return self.membership_residual(x) <= tol.eig_floor

    def expectation(self, x) -> np.ndarray:
        """Conditional expectation onto the relative commutant ``B' (in) M_N``."""
        x = np.asarray(x, dtype=complex)
        out = 0
        for i, n in enumerate(self.blocks):
            vr = self._split_iso(i)
            inner = np.einsum("xsa,...xy,ysb->...ab", vr.conj(), x, vr, optimize=True) / n
            out = out + np.einsum("xsa,...ab,ysb->...xy", vr, inner, vr.conj(), optimize=True)
        return np.asarray(out, dtype=complex)

    def central_projections(self) -> list[np.ndarray]:
        return [v @ dagger(v) for v in self.isometries]

    def commutant_embedding(self) -> "SubalgebraEmbedding":
        """``B' (in) M_N`` as an embedding of ``(+)_i M_{m_i}``."""
        isos = [v @ swap_operator(m, n) for v, n, m in zip(self.isometries, self.blocks, self.multiplicities)]
        return SubalgebraEmbedding.from_isometries(self.ambient_dim, self.multiplicities, isos)

    def compose(self, outer: "SubalgebraEmbedding") -> "SubalgebraEmbedding":
        """``outer o self`` where ``self`` lands in the abstract algebra of ``outer``.

        ``self.ambient_dim`` must equal ``outer.abstract_size`` (the block
        diagonal realization of ``outer``'s domain).
        """
        if self.ambient_dim != outer.abstract_size:
            raise ValueError("compose: ambient of inner map must be the abstract algebra of the outer map")
        images = {}
        for i, n in enumerate(self.blocks):
            for s in range(n):
                images[(i, s, 0)] = outer.apply(self.unit_image(i, s, 0))
        isos = []
        for i, n in enumerate(self.blocks):
            e00 = images[(i, 0, 0)]
            w, v = np.linalg.eigh(0.5 * (e00 + dagger(e00)))
            rng = v[:, w > 0.5]
            isos.append(np.concatenate([images[(i, s, 0)] @ rng for s in range(n)], axis=1))
        return SubalgebraEmbedding.from_isometries(outer.ambient_dim, self.blocks, isos)

    def conjugate(self, u) -> "SubalgebraEmbedding":
        """The embedding ``x -> u^* iota(x) u``."""
        u = np.asarray(u, dtype=complex)
        return SubalgebraEmbedding.from_isometries(
            self.ambient_dim, self.blocks, [dagger(u) @ v for v in self.isometries])

    def haar_unitaries(self, rng, size: int) -> np.ndarray:
        """``size`` unitaries of ``B`` drawn blockwise from Haar measure, pushed to ``M_N``."""
        parts = [haar_unitary(n, rng, size=size) for n in self.blocks]
        return self.apply_blocks(parts)


@dataclass
class EmbeddingReport:
    residuals: dict
    ok: bool
    method: str

    def to_json(self) -> dict:
        return {"ok": self.ok, "method": self.method, "residuals": self.residuals}


def validate_embedding(emb: SubalgebraEmbedding, tol: ToleranceConfig = DEFAULT_TOL) -> EmbeddingReport:
    """Check matrix-unit relations, adjoints, unitality and injectivity.

    Violations are reported, not raised; ``ok`` compares every residual with
    ``identity_tol`` (scaled by the ambient dimension for accumulated sums).
    """
    n_amb = emb.ambient_dim
    eye = np.eye(n_amb)
    if emb.raw_images is not None:
        imgs = emb.raw_images
        keys = list(emb.unit_indices())
        prod = adj = 0.0
        for (i, s, t), (j, t2, v) in itertools.product(keys, keys):
            lhs = imgs[(i, s, t)] @ imgs[(j, t2, v)]
            rhs = imgs[(i, s, v)] if (i == j and t == t2) else 0.0
            prod = max(prod, op_norm(lhs - rhs))
        for (i, s, t) in keys:
            adj = max(adj, op_norm(dagger(imgs[(i, s, t)]) - imgs[(i, t, s)]))
        unit = sum(imgs[(i, s, s)] for (i, s, t) in keys if s == t)
        unital = op_norm(unit - eye)
        flat = np.stack([imgs[k].ravel() for k in keys])
        gram = flat.conj() @ flat.T
        independence = float(np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))[0])
        residuals = {"matrix_unit": prod, "adjoint": adj, "unital": unital,
                     "independence_min_gram_eig": independence}
        method = "explicit"
    else:
        ortho = 0.0
        for i, vi in enumerate(emb.isometries):
            for j, vj in enumerate(emb.isometries):
                target = np.eye(vi.shape[1]) if i == j else 0.0
                ortho = max(ortho, op_norm(dagger(vi) @ vj - target))
        unital = op_norm(sum(v @ dagger(v) for v in emb.isometries) - eye)
        residuals = {"matrix_unit": ortho, "adjoint": 0.0, "unital": unital,
                     "independence_min_gram_eig": float(min(emb.multiplicities)) * (1.0 - ortho)}
        method = "isometric"
    bound = tol.identity_tol * max(1, n_amb)
    ok = (residuals["matrix_unit"] <= bound and residuals["adjoint"] <= bound
          and residuals["unital"] <= bound and residuals["independence_min_gram_eig"] > tol.eig_floor)
    return EmbeddingReport(residuals, bool(ok), method)


def require_valid(emb: SubalgebraEmbedding, tol: ToleranceConfig = DEFAULT_TOL) -> None:
    report = validate_embedding(emb, tol)
    if not report.ok:
        raise ValueError(f"invalid embedding: {report.residuals}")


@dataclass(frozen=True, eq=False)
class OperatorSubspace:
    """Subspace of ``M_N`` with an HS-orthonormal basis stacked as ``(dim, N, N)``."""

    ambient_dim: int
    basis: np.ndarray

    @classmethod
    def from_span(cls, ambient_dim: int, mats, tol: ToleranceConfig = DEFAULT_TOL) -> "OperatorSubspace":
        mats = np.asarray(mats, dtype=complex).reshape(-1, ambient_dim * ambient_dim)
        if mats.shape[0] == 0:
            return cls(ambient_dim, np.zeros((0, ambient_dim, ambient_dim), dtype=complex))
        _, sv, vh = np.linalg.svd(mats, full_matrices=False)
        keep = sv > tol.eig_floor * max(1.0, sv[0])
        return cls(ambient_dim, vh[keep].reshape(-1, ambient_dim, ambient_dim))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def _flat(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        flat = self._flat()
        coeffs = flat.conj() @ x.ravel()
        return (coeffs @ flat).reshape(x.shape)

    def residual(self, x) -> float:
        x = np.asarray(x, dtype=complex)
        return float(np.linalg.norm(x - self.project(x))) / max(1.0, float(np.linalg.norm(x)))

    def contains_subspace(self, other: "OperatorSubspace", tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        return all(self.residual(b) <= tol.eig_floor * 10 for b in other.basis)

    def intersect(self, other: "OperatorSubspace", tol: ToleranceConfig = DEFAULT_TOL) -> "OperatorSubspace":
        """Intersection via principal angles (singular values equal to 1)."""
        if self.dim == 0 or other.dim == 0:
            return OperatorSubspace(self.ambient_dim, np.zeros((0,) + self.basis.shape[1:], dtype=complex))
        a, b = self._flat(), other._flat()
        u, sv, _ = np.linalg.svd(a.conj() @ b.T)
        keep = sv >= 1.0 - 1e3 * tol.eig_floor
        vecs = u[:, keep].T @ a
        return OperatorSubspace(self.ambient_dim, vecs.reshape(-1, self.ambient_dim, self.ambient_dim))

    def to_json(self) -> dict:
        return {"ambient_dim": self.ambient_dim, "dim": self.dim,
                "basis": [matrix_to_json(b) for b in self.basis]}


def embedding_subspace(emb: SubalgebraEmbedding) -> OperatorSubspace:
    """HS-orthonormal basis of the image of ``emb``."""
    basis = []
    for i, (n, m) in enumerate(zip(emb.blocks, emb.multiplicities)):
        vr = emb._split_iso(i)
        for s in range(n):
            for t in range(n):
                basis.append(vr[:, s, :] @ dagger(vr[:, t, :]) / np.sqrt(m))
    return OperatorSubspace(emb.ambient_dim, np.asarray(basis))


def commutant(emb: SubalgebraEmbedding, tol: ToleranceConfig = DEFAULT_TOL) -> OperatorSubspace:
    """HS-orthonormal basis of ``{x in M_N : x g = g x for all g in B}``.

    For block ``i`` with multiplicity ``m_i`` the commutant contributes the
    elements ``n_i^{-1/2} sum_s e_{s1} |v_a><v_b| e_{1s}`` where ``v_a`` runs
    over an orthonormal basis of the range of ``e_{11}``; its dimension is
    ``sum_i m_i^2``.
    """
    require_valid(emb, tol)
    basis = embedding_subspace(emb.commutant_embedding())
    expected = sum(m * m for m in emb.multiplicities)
    if basis.dim != expected:
        raise AssertionError(f"commutant dimension {basis.dim} != sum m_i^2 = {expected}")
    return basis


def conditional_expectation(emb: SubalgebraEmbedding, a) -> np.ndarray:
    """``E(a)``: HS-orthogonal projection of ``a`` onto ``B' (in) M_N``.

    Equals the Haar average of ``u a u^*`` over the unitary group of ``B``.
    """
    a = as_square(a)
    if a.shape[0] != emb.ambient_dim:
        raise ValueError(f"element has dimension {a.shape[0]}, ambient is {emb.ambient_dim}")
    return emb.expectation(a)


def haar_twirl_mc(emb: SubalgebraEmbedding, a, samples: int, rng_seed=None, chunk: int = 10_000) -> np.ndarray:
    """Monte-Carlo average of ``u a u^*`` over Haar unitaries of ``B``."""
    a = as_square(a)
    rng = np.random.default_rng(rng_seed)
    acc = np.zeros_like(a)
    done = 0
    while done < samples:
        b = min(chunk, samples - done)
        us = emb.haar_unitaries(rng, b)
        acc += np.einsum("bij,jk,blk->il", us, a, us.conj(), optimize=True)
        done += b
    return acc / samples


def minimal_central_projections(emb: SubalgebraEmbedding, tol: ToleranceConfig = DEFAULT_TOL) -> list[np.ndarray]:
    require_valid(emb, tol)
    return emb.central_projections()


def full_in_algebra(a, emb: SubalgebraEmbedding, tol: ToleranceConfig = DEFAULT_TOL):
    """Decide fullness of a positive ``a`` inside the algebra ``B`` itself.

    Returns ``(is_full, certificate)``; the certificate (``None`` when not
    full) consists of unitaries of ``B`` with ``sum u^* a u >= c 1``.  In
    each block the unitaries are ``W P^j W^*`` with ``W`` diagonalizing the
    block of ``a`` and ``P`` the cyclic shift, so the sum over a full cycle
    is ``tr(a_i) 1``.
    """
    from .fullness import FullnessCertificate

    a = as_square(a)
    if a.shape[0] != emb.ambient_dim:
        raise ValueError("dimension mismatch between element and algebra")
    if not emb.contains(a, tol):
        raise ValueError("element does not belong to the algebra")
    if not is_positive(a, tol):
        raise ValueError("element is not positive")
    parts = emb.structure.split(emb.coords(a))
    norms = [op_norm(p) for p in parts]
    if min(norms) <= tol.eig_floor:
        return False, None
    eye = np.eye(emb.ambient_dim, dtype=complex)
    lam = min_eigenvalue(a, tol, check=False)
    if lam > tol.eig_floor:
        return True, FullnessCertificate([eye], lam, "unitary")
    cycle = max(emb.blocks)
    unitaries = []
    diag_bases = [np.linalg.eigh(0.5 * (p + dagger(p)))[1] for p in parts]
    for j in range(cycle):
        blocks = []
        for n, w in zip(emb.blocks, diag_bases):
            shift = np.roll(np.eye(n), j % n, axis=0)
            blocks.append(w @ shift @ dagger(w))
        unitaries.append(emb.apply_blocks(blocks))
    total = sum(dagger(u) @ a @ u for u in unitaries)
    margin = min_eigenvalue(total, tol, check=False)
    return True, FullnessCertificate(unitaries, margin, "unitary")


def tensor_embedding(e1: SubalgebraEmbedding, e2: SubalgebraEmbedding,
                     tol: ToleranceConfig = DEFAULT_TOL) -> SubalgebraEmbedding:
    """``B_1 (x) B_2`` inside ``M_{N_1} (x) M_{N_2}``; blocks ordered ``(i, j)`` lexicographically."""
    require_valid(e1, tol)
    require_valid(e2, tol)
    n_amb = e1.ambient_dim * e2.ambient_dim
    blocks, isos = [], []
    for i, (n1, m1) in enumerate(zip(e1.blocks, e1.multiplicities)):
        v1 = e1._split_iso(i)
        for j, (n2, m2) in enumerate(zip(e2.blocks, e2.multiplicities)):
            v2 = e2._split_iso(j)
            # columns ordered (s1, s2, a1, a2)
            v = np.einsum("xsa,ytb->xystab", v1, v2).reshape(n_amb, n1 * n2 * m1 * m2)
            blocks.append(n1 * n2)
            isos.append(v)
    return SubalgebraEmbedding.from_isometries(n_amb, blocks, isos)


# --- JSON --------------------------------------------------------------------

def embedding_to_json(emb: SubalgebraEmbedding, explicit: bool | None = None) -> dict:
    """Embedding JSON.  ``explicit`` writes all unit images ("i.s.t", 1-based).

    By default the explicit form is used when it stays small; otherwise the
    compact ``isometries`` form is written.
    """
    if explicit is None:
        explicit = emb.dim * emb.ambient_dim ** 2 <= 200_000
    out = {"ambient_dim": emb.ambient_dim, "blocks": list(emb.blocks)}
    if explicit:
        out["unit_images"] = {f"{i + 1}.{s + 1}.{t + 1}": matrix_to_json(emb.unit_image(i, s, t))
                              for (i, s, t) in emb.unit_indices()}
    else:
        out["multiplicities"] = list(emb.multiplicities)
        out["isometries"] = [matrix_to_json(v) for v in emb.isometries]
    return out


def embedding_from_json(obj: dict) -> SubalgebraEmbedding:
    n_amb = int(obj["ambient_dim"])
    blocks = [int(b) for b in obj["blocks"]]
    if "unit_images" in obj:
        images = {}
        for key, mat in obj["unit_images"].items():
            i, s, t = (int(p) - 1 for p in key.split("."))
            images[(i, s, t)] = matrix_from_json(mat)
        return SubalgebraEmbedding.from_unit_images(n_amb, blocks, images)
    if "isometries" in obj:
        return SubalgebraEmbedding.from_isometries(n_amb, blocks, [matrix_from_json(v) for v in obj["isometries"]])
    raise ValueError("embedding json needs 'unit_images' or 'isometries'")


def images_with_defect(emb: SubalgebraEmbedding, key, factor: float) -> SubalgebraEmbedding:
    """Copy of ``emb`` with one explicit unit image scaled (for planted-defect checks)."""
    images = emb.unit_images()
    images[key] = factor * images[key]
    return SubalgebraEmbedding.from_unit_images(emb.ambient_dim, emb.blocks, images)


__all__ = [
    "BlockStructure", "SubalgebraEmbedding", "EmbeddingReport", "OperatorSubspace",
    "validate_embedding", "commutant", "conditional_expectation", "haar_twirl_mc",
    "minimal_central_projections", "full_in_algebra", "tensor_embedding",
    "embedding_subspace", "embedding_to_json", "embedding_from_json", "images_with_defect",
]
