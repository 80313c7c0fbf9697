import pytest
from hypothesis import given, settings, strategies as st

from lambdageq.diagram import (
    EmbeddingError, build, build_tree, parse_presentation, triangulate,
)
from lambdageq.geq import evaluate, presentation, validate, verify_solution
from lambdageq.words import LambdaWord, Letter, Power, invert, mult
from oracles import abelian_invariants, exponent_row, reduce_letters
from conftest import COMMUTATOR


def P(text):
    return parse_presentation(text)


def test_triangulate_long_relator():
    p = P("generators w x y z\nrelator w x y z\nw = a\nx = b\ny = b^-1 a^-1 c\nz = c^-1\n")
    t = triangulate(p)
    assert t.relators == ((("w", 1), ("x", 1), ("a1", -1)), (("a1", 1), ("y", 1), ("z", 1)))
    assert t.embedding["a1"] == mult(p.embedding["w"], p.embedding["x"])
    assert all(len({g for g, _ in r}) <= 3 for r in t.relators)


@pytest.mark.parametrize("text", [
    "generators x y\nrelator x y x^-1 y^-1\nx = a\ny = a a\n",
    "generators x\nrelator x x x\nx = a\n",
])
def test_triangulate_keeps_short_relators(text):
    p = P(text)
    assert triangulate(p).relators == p.relators


def test_tree_of_trivial_relator():
    p = P("generators x\nrelator x x^-1\nx = a b\n")
    (tree,) = [build_tree(r, p.embedding) for r in p.relators]
    (edge,) = tree.edges.values()
    assert edge.label == p.embedding["x"]
    assert tree.uses() == {edge.id: 2}


def test_tree_of_commutator_has_only_z_pieces():
    p = P(COMMUTATOR)
    tree = build_tree(p.relators[0], p.embedding, p.rank)
    for e in tree.edges.values():
        for b in e.label.blocks:
            base = b.base if isinstance(b, Power) else b
            assert {a.symbol for a in base} == {"z"}
    assert set(tree.uses().values()) == {2}


def test_tripod_tree():
    p = P("generators x y z\nrelator x y z\nx = a b\ny = b^-1 c\nz = c^-1 a^-1\n")
    tree = build_tree(p.relators[0], p.embedding)
    assert sorted(str(e.label) for e in tree.edges.values()) == ["a", "b", "c"]
    assert len(tree.vertices) == 4 and set(tree.uses().values()) == {2}


def test_residue_is_reported():
    p = P("generators x y\nrelator x y\nx = a\ny = b\n")
    with pytest.raises(EmbeddingError, match="residue|evaluates"):
        build(p)


def test_assemble_trivial_relator():
    asm = build(P("generators x\nrelator x x^-1\nx = a b\n"))
    omega = asm.omega
    assert len(omega.bases) == 2 and len(omega.sections) == 1
    b, d = omega.pairs()[0]
    assert (b.alpha, b.beta) == (d.alpha, d.beta)


def _ab_of_group(p):
    gens = list(p.generators)
    return abelian_invariants(len(gens), [exponent_row(r, gens) for r in p.relators])


def _ab_of_omega(omega):
    pres = presentation(omega)
    gens = list(pres.generators)
    return abelian_invariants(len(gens), [exponent_row(r, gens) for r in pres.relators])


def test_commutation_equation_abelianizes_to_z2():
    asm = build(P(COMMUTATOR))
    assert _ab_of_omega(asm.omega) == (2, [])
    assert asm.omega.rho == 4


def test_tripod_equation():
    asm = build(P("generators x y z\nrelator x y z\nx = a b\ny = b^-1 c\nz = c^-1 a^-1\n"))
    assert len(asm.omega.pairs()) == 3
    # six items glued in three pairs: a free group, one rank more than <x,y,z | xyz>
    assert _ab_of_omega(asm.omega) == (3, [])
    assert _ab_of_group(P("generators x y z\nrelator x y z\n")) == (2, [])


def test_generator_words_recover_images():
    p = P("generators x y z\nrelator x y z\nx = a b\ny = b^-1 c\nz = c^-1 a^-1\n")
    asm = build(p)
    for g, word in asm.generator_words.items():
        assert evaluate(word, asm.solution) == p.embedding[g]


reduced = st.lists(st.tuples(st.sampled_from("ab"), st.sampled_from((1, -1))), min_size=1, max_size=6).map(
    reduce_letters).filter(bool)


def _w(pairs):
    return LambdaWord.from_letters(tuple(Letter(x, s) for x, s in pairs))


@settings(max_examples=60, deadline=None)
@given(reduced, reduced)
def test_planted_piece_solution_is_sound(u, v):
    x, y = _w(u), _w(v)
    z = invert(mult(x, y))
    if not z.blocks:
        return
    text = f"generators x y z\nrelator x y z\nx = {x}\ny = {y}\nz = {z}\n"
    p = P(text)
    asm = build(p)
    assert validate(asm.omega) == []
    assert verify_solution(asm.omega, asm.solution) is None
    for g, word in asm.generator_words.items():
        assert evaluate(word, asm.solution) == p.embedding[g]
    # G_Omega is G times a free factor: same torsion, at least the same free rank
    free_g, tors_g = _ab_of_group(p)
    free_o, tors_o = _ab_of_omega(asm.omega)
    assert tors_o == tors_g and free_o >= free_g


@settings(max_examples=30, deadline=None)
@given(reduced, st.integers(1, 3), st.integers(1, 3))
def test_commuting_images(u, i, j):
    w = _w(u)
    x = LambdaWord.empty()
    for _ in range(i):
        x = mult(x, w)
    y = LambdaWord.empty()
    for _ in range(j):
        y = mult(y, w)
    p = P(f"generators x y\nrelator x y x^-1 y^-1\nx = {x}\ny = {y}\n")
    asm = build(p)
    assert verify_solution(asm.omega, asm.solution) is None
