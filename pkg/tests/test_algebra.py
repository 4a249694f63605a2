import numpy as np
import pytest

from cstarincl.algebra import (
    OperatorSubspace,
    SubalgebraEmbedding,
    commutant,
    conditional_expectation,
    embedding_from_json,
    embedding_subspace,
    embedding_to_json,
    full_in_algebra,
    haar_twirl_mc,
    images_with_defect,
    minimal_central_projections,
    tensor_embedding,
    validate_embedding,
)
from cstarincl.matcore import haar_unitary, random_positive
from oracles import commutator_nullspace, hs_projection

EMBEDDINGS = {
    "M2x1": lambda: SubalgebraEmbedding.tensor_left(2, 2),
    "1xM2": lambda: SubalgebraEmbedding.tensor_right(2, 2),
    "diag3": lambda: SubalgebraEmbedding.diagonal(3),
    "scalars3": lambda: SubalgebraEmbedding.scalars(3),
    "M1+M2x2": lambda: SubalgebraEmbedding.block_diagonal([1, 2], [2, 2]),
    "M2x1 in M6": lambda: SubalgebraEmbedding.tensor_left(2, 3),
}


def _rotated(emb, seed):
    return emb.conjugate(haar_unitary(emb.ambient_dim, seed))


@pytest.mark.parametrize("name", sorted(EMBEDDINGS))
def test_builtin_embeddings_validate(name):
    rep = validate_embedding(EMBEDDINGS[name]())
    assert rep.ok, rep.residuals


def test_planted_defect_is_flagged():
    emb = SubalgebraEmbedding.tensor_left(2, 2)
    bad = images_with_defect(emb, (0, 0, 1), 2.0)
    rep = validate_embedding(bad)
    assert not rep.ok
    assert max(rep.residuals.values()) > 0.5


@pytest.mark.parametrize("name", sorted(EMBEDDINGS))
def test_commutant_dimension_matches_bruteforce(name):
    emb = EMBEDDINGS[name]()
    gens = list(emb.unit_images().values())
    null = commutator_nullspace(gens, emb.ambient_dim)
    assert commutant(emb).dim == len(null) == sum(m * m for m in emb.multiplicities)


@pytest.mark.parametrize("name", sorted(EMBEDDINGS))
def test_expectation_is_hs_projection_onto_bruteforce_commutant(name, rng):
    emb = _rotated(EMBEDDINGS[name](), 5)
    null = commutator_nullspace(list(emb.unit_images().values()), emb.ambient_dim)
    for _ in range(3):
        x = rng.standard_normal((emb.ambient_dim,) * 2) + 1j * rng.standard_normal((emb.ambient_dim,) * 2)
        assert np.allclose(conditional_expectation(emb, x), hs_projection(null, x), atol=1e-10)


def test_expectation_unital_idempotent_bimodule(rng):
    emb = _rotated(SubalgebraEmbedding.block_diagonal([2, 1], [1, 2]), 2)
    n = emb.ambient_dim
    a = random_positive(n, rng)
    e = conditional_expectation(emb, a)
    assert np.allclose(conditional_expectation(emb, np.eye(n)), np.eye(n), atol=1e-12)
    assert np.allclose(conditional_expectation(emb, e), e, atol=1e-12)
    comm = emb.commutant_embedding()
    c1 = comm.apply(_abstract_random(comm, rng))
    c2 = comm.apply(_abstract_random(comm, rng))
    assert np.allclose(conditional_expectation(emb, c1 @ a @ c2), c1 @ e @ c2, atol=1e-10)
    for g in emb.unit_images().values():
        assert np.allclose(g @ e, e @ g, atol=1e-10)


def _abstract_random(emb, rng):
    size = emb.abstract_size
    z = np.zeros((size, size), dtype=complex)
    o = 0
    for n in emb.blocks:
        z[o:o + n, o:o + n] = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        o += n
    return z


def test_mc_twirl_converges_to_expectation(rng):
    emb = SubalgebraEmbedding.tensor_left(2, 2)
    a = random_positive(4, rng)
    mc = haar_twirl_mc(emb, a, 20000, rng_seed=1)
    assert np.linalg.norm(mc - conditional_expectation(emb, a), 2) < 5e-2 * np.linalg.norm(a, 2)


def test_coords_and_apply_round_trip(rng):
    emb = _rotated(SubalgebraEmbedding.block_diagonal([2, 1], [2, 1]), 8)
    y = _abstract_random(emb, rng)
    assert np.allclose(emb.coords(emb.apply(y)), y, atol=1e-12)
    assert emb.membership_residual(emb.apply(y)) < 1e-12
    assert emb.membership_residual(rng.standard_normal((5, 5)) + 0j) > 1e-3


def test_apply_is_multiplicative(rng):
    emb = _rotated(SubalgebraEmbedding.block_diagonal([2, 2], [1, 2]), 9)
    y1, y2 = _abstract_random(emb, rng), _abstract_random(emb, rng)
    assert np.allclose(emb.apply(y1 @ y2), emb.apply(y1) @ emb.apply(y2), atol=1e-10)
    assert np.allclose(emb.apply(y1.conj().T), emb.apply(y1).conj().T, atol=1e-12)


def test_from_unit_images_reproduces_embedding():
    emb = _rotated(SubalgebraEmbedding.tensor_left(2, 3), 4)
    again = SubalgebraEmbedding.from_unit_images(emb.ambient_dim, emb.blocks, emb.unit_images())
    assert validate_embedding(again).ok
    for key, img in emb.unit_images().items():
        assert np.allclose(again.unit_image(*key), img, atol=1e-12)


@pytest.mark.parametrize("explicit", [True, False])
def test_embedding_json_round_trip(explicit):
    emb = _rotated(SubalgebraEmbedding.block_diagonal([1, 2], [2, 1]), 1)
    back = embedding_from_json(embedding_to_json(emb, explicit=explicit))
    assert back.blocks == emb.blocks
    for key, img in emb.unit_images().items():
        assert np.allclose(back.unit_image(*key), img, atol=1e-12)


def test_central_projections_sum_to_identity():
    emb = SubalgebraEmbedding.block_diagonal([2, 3], [1, 1])
    ps = minimal_central_projections(emb)
    assert len(ps) == 2
    assert np.allclose(sum(ps), np.eye(5))
    assert np.allclose(ps[0] @ ps[1], 0)


def test_tensor_embedding_validates_and_has_product_blocks():
    e = tensor_embedding(SubalgebraEmbedding.block_diagonal([1, 2]), SubalgebraEmbedding.tensor_left(2, 2))
    assert validate_embedding(e).ok
    assert e.blocks == (2, 4)
    assert e.ambient_dim == 12


def test_subspace_intersection_of_tensor_factors():
    left = embedding_subspace(SubalgebraEmbedding.tensor_left(2, 2))
    right = embedding_subspace(SubalgebraEmbedding.tensor_right(2, 2))
    inter = left.intersect(right)
    assert inter.dim == 1
    assert np.allclose(inter.basis[0] / inter.basis[0][0, 0], np.eye(4), atol=1e-10)
    assert left.contains_subspace(inter)
    span = OperatorSubspace.from_span(4, [np.eye(4), np.eye(4) * 2])
    assert span.dim == 1


def test_full_in_algebra():
    emb = SubalgebraEmbedding.full(2)
    ok, cert = full_in_algebra(np.diag([1.0, 0.0]), emb)
    assert ok and np.min(np.linalg.eigvalsh(cert.weighted_sum(np.diag([1.0, 0.0])))) >= cert.margin - 1e-12
    ok, cert = full_in_algebra(np.diag([1.0, 0.0, 0.0]), SubalgebraEmbedding.block_diagonal([2, 1]))
    assert not ok and cert is None
