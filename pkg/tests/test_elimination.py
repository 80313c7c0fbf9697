import json

import pytest
from hypothesis import given, strategies as st

from lambdageq.diagram import build, parse_presentation
from lambdageq.elimination import (
    ALMOST_QUADRATIC, GENERAL, LEAF, LINEAR, QUADRATIC, MuReducing, Neither, NotQuadratic,
    PeriodicStructure, StructureError, build_periodic_structure, check_periodic_structure, classify,
    classify_path, cycles_commute, d8_path, excess, period_graph, quadratic_relation, run,
    split_by_periodic_structure, standard_form, surface_of,
)
from lambdageq.geq import Base, GenEq, Section, Solution
from lambdageq.transform import d7_tietze_cleaning
from lambdageq.words import parse_word
from conftest import COMMUTATOR, FREE_PAIR, commutation_section, genus_two_section
from oracles import closed_surface, excess_oracle


def U(*texts, rank=1):
    return Solution(tuple(parse_word(t, rank) for t in texts))


# classification ------------------------------------------------------------------

def test_classify_linear():
    omega = GenEq(3, [Base("a", 1, 1, 2, "a~"), Base("a~", 1, 2, 3, "a")], (), (), {1: 1, 2: 1, 3: 1})
    assert classify(omega) == LINEAR


def test_classify_quadratic():
    omega = commutation_section().with_(item_heights={1: 1, 2: 1, 3: 1})
    assert classify(omega) == QUADRATIC


def test_classify_almost_quadratic():
    # h2 is short and covered three times, the long items twice
    bases = [Base("p", 1, 1, 3, "p~"), Base("p~", 1, 3, 5, "p"), Base("q", 1, 2, 3, "q~"),
             Base("q~", 1, 3, 4, "q"), Base("r", 1, 2, 3, "r~"), Base("r~", 1, 4, 5, "r"),
             Base("s", 1, 1, 2, "s~"), Base("s~", 1, 4, 5, "s")]
    omega = GenEq(4, bases, (), (), {1: 2, 2: 1, 3: 2, 4: 1}, 2)
    gam = omega.gammas()
    assert gam[2] == 3 and gam[1] == gam[3] == 2
    assert classify(omega) == ALMOST_QUADRATIC


def test_classify_general():
    bases = [Base("p", 1, 1, 2, "p~"), Base("p~", 1, 2, 3, "p"), Base("q", 1, 1, 2, "q~"),
             Base("q~", 1, 2, 3, "q"), Base("r", 1, 1, 2, "r~"), Base("r~", 1, 2, 3, "r")]
    assert classify(GenEq(2, bases, (), (), {1: 1, 2: 1})) == GENERAL


def test_classify_leaf():
    assert classify(GenEq(2, (), (), [Section(1, 3, False)])) == LEAF


# quadratic sections ----------------------------------------------------------------

def test_commutation_section_form():
    f = standard_form(commutation_section(), 0)
    assert (f.orientable, f.genus, f.m, f.has_d, f.kappa) == (True, 1, 0, False, 3)
    assert f.regular is False
    word, coeffs = quadratic_relation(commutation_section(), 0)
    assert coeffs == frozenset()
    assert closed_surface(word) == (True, 1)


def test_genus_two_section_form():
    f = standard_form(genus_two_section(), 0)
    assert (f.orientable, f.genus, f.m, f.kappa, f.regular) == (True, 2, 0, 5, True)
    word, _ = quadratic_relation(genus_two_section(), 0)
    assert closed_surface(word) == (True, 2)
    assert f.standard_relator() == "[x1,y1] [x2,y2]"


def test_nonorientable_word():
    word = [("a", 1), ("a", 1), ("b", 1), ("b", 1)]
    f = standard_form(word)
    assert closed_surface(word) == (False, 2)
    assert (f.orientable, f.genus, f.kappa) == (False, 2, 3)
    assert f.standard_relator() == "x1^2 x2^2"


def test_punctured_torus_is_regular():
    f = surface_of([("x", 1), ("y", 1), ("x", -1), ("y", -1), ("d", 1)], frozenset({"d"}))
    assert (f.orientable, f.genus, f.m, f.has_d, f.kappa, f.regular) == (True, 1, 0, True, 3, True)
    gens, rel = f.qh_presentation()
    assert gens == ["x1", "y1", "p1"] and rel == "[x1,y1] p1"


def test_commutative_solution_is_not_regular():
    f = standard_form(genus_two_section(), 0, noncommutative=False)
    assert f.kappa == 5 and f.regular is True  # the genus-two exception needs no solution
    word = [("a", 1), ("b", 1), ("c", 1), ("a", -1), ("b", -1), ("c", -1)]
    assert surface_of(word, noncommutative=False).regular is False


def test_not_quadratic():
    # item 3 is uncovered
    with pytest.raises(NotQuadratic):
        quadratic_relation(GenEq(3, [Base("a", 1, 1, 2, "b"), Base("b", 1, 2, 3, "a")]), 0)


@st.composite
def closed_words(draw):
    n = draw(st.integers(1, 4))
    letters = [f"v{i}" for i in range(n)] * 2
    order = draw(st.permutations(letters))
    return [(x, draw(st.sampled_from((1, -1)))) for x in order]


@given(closed_words())
def test_surface_classification_matches_homology(word):
    f = surface_of(word)
    assert (f.orientable, f.genus) == closed_surface(word)
    assert f.kappa == (2 * f.genus if f.orientable else f.genus) + 1
    assert f.free_variables == 0 or f.genus < len({x for x, _ in word})


# periodic structures -----------------------------------------------------------------

@pytest.fixture
def comm():
    asm = build(parse_presentation(COMMUTATOR))
    return asm.omega, asm.solution


def test_periodic_structure_on_commutation_equation(comm):
    omega, u = comm
    ps = build_periodic_structure(omega, u)
    assert str(ps.period) == "z"
    assert ps.items == frozenset({1, 2, 3, 4})
    assert ps.bases == frozenset(b.id for b in omega.bases)
    assert check_periodic_structure(omega, ps, u) == []
    rep = split_by_periodic_structure(omega, ps)
    assert cycles_commute(rep.graph, u)
    assert rep.finite_index
    assert [e["kind"] for e in rep.events] == ["centralizer-extension"]
    assert len(rep.z1) + len(rep.z2) == len(rep.graph.cycle_edges)


def test_short_base_stays_out(comm):
    text = COMMUTATOR.replace("generators x y", "generators x y w") + "relator w w^-1\nw = a\n"
    asm = build(parse_presentation(text))
    ps = build_periodic_structure(asm.omega, asm.solution)
    a_pair = {b.id for b in asm.omega.bases if b.left == 5}
    assert a_pair and not (a_pair & ps.bases)
    assert 5 not in ps.items
    assert check_periodic_structure(asm.omega, ps, asm.solution) == []


def test_no_overlapping_pair():
    omega = GenEq(2, [Base("a", 1, 1, 2, "a~"), Base("a~", 1, 2, 3, "a")])
    with pytest.raises(StructureError):
        build_periodic_structure(omega, U("x", "x"))


def test_base_forest_prefers_short_edges():
    # classes A = {1, 3}, B = {2, 4}; h1 and h3 are short, h2 is long
    s = Section(1, 4)
    classes = {(1, 1): (1, 1), (3, 1): (1, 1), (2, 1): (2, 1), (4, 1): (2, 1)}
    ps = PeriodicStructure(parse_word("z"), "-", (s,), frozenset({2}), frozenset(), {1: 1}, classes)
    g = period_graph(GenEq(3), ps)
    assert g.base_forest == frozenset({1}) and g.tree == frozenset({1})
    assert g.cycle_edges == [2, 3]


# excess and paths --------------------------------------------------------------------

SHIFT = GenEq(3, [Base("b1", 1, 1, 3, "b1~"), Base("b1~", 1, 2, 4, "b1"), Base("b3", 1, 1, 2, "b3~"),
                  Base("b3~", 1, 3, 4, "b3")], (), (), {1: 1, 2: 1, 3: 1})


def _oracle_psi(omega, sol, marked):
    bases = [(b.id, b.dual, b.left, b.right) for b in omega.bases]
    lengths = [len(w.letters) for w in sol.words]
    inactive = [s.start for s in omega.sections if not s.active]
    return excess_oracle(bases, lengths, min(inactive) if inactive else omega.rho + 1, marked)


def test_single_step_drop_equals_shift():
    u = U("a", "a", "a")
    path = d8_path(SHIFT, u, 1)
    ex = excess(path)
    # the carrier b1 = h1 h2 and its dual h2 h3 are shifted by |h1| = 1
    assert ex.deltas == [(ex.u_omega[0] - ex.u_omega[1], ex.u_omega[0] - ex.u_omega[1])]
    assert ex.u_omega[0] - ex.u_omega[1] == parse_word("a").length
    assert classify_path(path) == Neither("no reducing decomposition with a tail")


def test_mu_reducing_path():
    path = d8_path(SHIFT, U("a", "a", "a"), 2)
    second = path[1]
    b = second.omega.base(second.carrier)
    d = second.omega.dual(b)
    assert not (d.left < b.right and b.left < d.right)
    assert classify_path(path) == MuReducing("b1")


def test_excess_against_oracle_on_long_path():
    asm = build(parse_presentation("generators x y\nrelator x y x^-1 y^-1\nx = a\ny = a^25\n"))
    r = d7_tietze_cleaning(asm.omega, asm.solution)
    path = d8_path(r.target, r.solution, 20)
    ex = excess(path)
    marked = ex.carriers | ex.transfers
    nodes = [(s.omega, s.solution) for s in path] + [(path[-1].target, path[-1].target_solution)]
    for (omega, sol), psi, uw in zip(nodes, ex.psi, ex.u_omega):
        assert (psi.coords[0], uw.coords[0]) == _oracle_psi(omega, sol, marked)
    assert ex.constant and ex.stepwise


# driver ------------------------------------------------------------------------------

def _run(text, **kw):
    asm = build(parse_presentation(text))
    return run(asm.omega, asm.solution, **kw)


def test_free_group_gives_one_free_step():
    rep = _run(FREE_PAIR)
    assert rep.complete and rep.chain == [{"kind": "free", "rank": 2}]


def test_commutator_chain():
    rep = _run(COMMUTATOR)
    assert rep.complete
    assert rep.chain[0]["kind"] == "free"
    kinds = [e["kind"] for e in rep.chain[1:]]
    assert len(kinds) == 1 and kinds[0] in ("hnn", "centralizer-extension")
    assert len(rep.sigma) >= 1
    assert rep.sigma.satisfied_by(rep.final_solution.lengths())
    for row in rep.sigma.rows:
        assert sorted(x for x in row if x) == [-1, 1]


def test_report_json_and_trace():
    rep = _run(COMMUTATOR)
    data = json.loads(rep.to_json())
    assert data["schema"] == 1 and data["complete"] is True
    assert data["sigma_complete"]["rows"] == [list(r) for r in rep.sigma.rows]
    assert rep.trace[0].note == "start" and rep.trace[-1].case == LEAF
    for e in rep.events:
        assert 0 <= e["step"] <= rep.steps


def test_budget():
    rep = _run(COMMUTATOR, max_steps=3)
    assert rep.complete is False and rep.steps <= 3
    assert rep.reason == f"budget exhausted after {rep.steps} steps"
    assert _run(COMMUTATOR, max_steps=0).steps == 0


def test_run_needs_solution(comm):
    with pytest.raises(ValueError):
        run(comm[0], None)


def test_episodes_do_not_grow_tau(comm):
    omega, u = comm
    rep = run(omega, u)
    assert rep.tau_increases == []
    taus = [n.tau for n in rep.trace]
    assert taus[-1] <= taus[0]
