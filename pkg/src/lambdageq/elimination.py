"""The elimination process.

Each node of a run is classified (leaf, linear, quadratic, almost quadratic,
general), the matching transformations are applied, and structural events
(free factors, surface pieces, abelian splittings) are collected into a
decomposition report together with the length constraints gathered on the way.
"""

from dataclasses import dataclass, field
import json

from .geq import (
    Base,
    GenEq,
    LinearSystem,
    Section,
    Solution,
    canonical_key,
    ensure_valid,
    evaluate,
    invert_signed,
    reduce_signed,
    span,
    tau,
)
from .lattice import saturation_split
from .ordered import LambdaScalar, height
from .transform import (
    ISOMORPHISM,
    Morphism,
    NotApplicable,
    TransformError,
    TransformResult,
    comparable,
    d1_close_section,
    d7_tietze_cleaning,
    d8_entire_step,
)
from .words import LambdaWord, Undefined, invert, is_periodic, mult, split_at

LEAF = "leaf"
LINEAR = "linear"
QUADRATIC = "quadratic"
ALMOST_QUADRATIC = "almost-quadratic"
GENERAL = "general"


def classify(omega):
    """Which case of the process applies at this node."""
    active = omega.active_items()
    if not active:
        return LEAF
    gam = omega.gammas()
    top = [i for i in active if comparable(omega, i)]
    if any(gam[i] == 1 for i in top):
        return LINEAR
    if all(gam[i] == 2 for i in top):
        if all(gam[i] <= 2 for i in active):
            return QUADRATIC
        return ALMOST_QUADRATIC
    return GENERAL


# ---------------------------------------------------------------------------
# quadratic sections


class NotQuadratic(ValueError):
    pass


def _section_arg(omega, section):
    if isinstance(section, int):
        return omega.sections[section]
    if isinstance(section, tuple):
        return next(s for s in omega.sections if (s.start, s.end) == section)
    return section


def quadratic_relation(omega, section):
    """The relation (layer one) (layer two)^-1 of a section covered exactly twice.

    Returns (word, coefficients): word is a tuple of (symbol, sign); a dual
    pair inside the section shares one symbol, and a base whose dual lies
    outside is a coefficient named by its own id.
    """
    s = _section_arg(omega, section)
    inside = omega.bases_in(s)
    gam = omega.gammas()
    bad = [i for i in s.items if gam[i] != 2]
    if bad:
        raise NotQuadratic(f"h{bad[0]} is covered {gam[bad[0]]} times")
    for b in omega.bases:
        if b not in inside and b.left < s.end and s.start < b.right:
            raise NotQuadratic(f"{b.id} sticks out of the section")
    ids = {b.id for b in inside}
    symbol = {}
    coefficients = set()
    for b in inside:
        if b.id in symbol:
            continue
        if b.dual in ids:
            symbol[b.id] = symbol[b.dual] = min(b.id, b.dual)
        else:
            symbol[b.id] = b.id
            coefficients.add(b.id)
    starting = {}
    for b in sorted(inside, key=lambda b: (b.left, b.right, b.id)):
        starting.setdefault(b.left, []).append(b)
    first = starting.get(s.start, [])
    if len(first) != 2:
        raise NotQuadratic("the section does not start with two bases")
    layers = [[first[0]], [first[1]]]
    while True:
        ends = [layer[-1].right for layer in layers]
        p = min(ends)
        if p == s.end:
            if max(ends) != s.end:
                raise NotQuadratic("layers end at different boundaries")
            break
        if ends[0] == ends[1]:
            raise NotQuadratic(f"both layers break at boundary {p}")
        nxt = starting.get(p, [])
        if len(nxt) != 1:
            raise NotQuadratic(f"boundary {p} starts {len(nxt)} bases")
        layers[ends.index(p)].append(nxt[0])

    def letters(layer):
        return [(symbol[b.id], b.epsilon) for b in layer]

    one, two = letters(layers[0]), letters(layers[1])
    word = tuple(one + [(x, -e) for x, e in reversed(two)])
    return word, frozenset(coefficients)


@dataclass(frozen=True)
class QuadraticForm:
    orientable: bool
    genus: int
    m: int  # conjugated coefficients c_1..c_m besides d
    has_d: bool
    variables: int  # |X| of the standard form
    free_variables: int  # |T|, variables that drop out of the relation
    kappa: int
    regular: bool
    relation: tuple = ()

    def standard_relator(self):
        parts = []
        if self.orientable:
            for i in range(1, self.genus + 1):
                parts.append(f"[x{i},y{i}]")
        else:
            for i in range(1, self.genus + 1):
                parts.append(f"x{i}^2")
        for i in range(1, self.m + 1):
            parts.append(f"z{i}^-1 c{i} z{i}")
        if self.has_d:
            parts.append("d")
        return " ".join(parts) or "1"

    def qh_presentation(self):
        """Generators and relator of the vertex group with boundary words p_i."""
        gens = []
        if self.orientable:
            for i in range(1, self.genus + 1):
                gens += [f"x{i}", f"y{i}"]
            rel = [f"[x{i},y{i}]" for i in range(1, self.genus + 1)]
        else:
            gens = [f"x{i}" for i in range(1, self.genus + 1)]
            rel = [f"x{i}^2" for i in range(1, self.genus + 1)]
        bounds = self.m + 1 if self.has_d else 0
        gens += [f"p{i}" for i in range(1, bounds + 1)]
        rel += [f"p{i}" for i in range(1, bounds + 1)]
        return gens, " ".join(rel) or "1"

    def to_dict(self):
        gens, rel = self.qh_presentation()
        return {
            "orientable": self.orientable,
            "genus": self.genus,
            "m": self.m,
            "has_d": self.has_d,
            "kappa": self.kappa,
            "regular": self.regular,
            "free_variables": self.free_variables,
            "standard": self.standard_relator(),
            "qh_generators": gens,
            "qh_relator": rel,
        }


class _Classes:
    def __init__(self, keys=()):
        self.parent = {k: k for k in keys}

    def add(self, k):
        self.parent.setdefault(k, k)

    def find(self, k):
        self.add(k)
        while self.parent[k] != k:
            self.parent[k] = self.parent[self.parent[k]]
            k = self.parent[k]
        return k

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def groups(self):
        out = {}
        for k in self.parent:
            out.setdefault(self.find(k), []).append(k)
        return out


def surface_of(word, coefficients=frozenset(), noncommutative=True):
    """Classify a cyclic quadratic word: every variable occurs exactly twice."""
    word = list(word)
    counts = {}
    for x, _ in word:
        counts[x] = counts.get(x, 0) + 1
    variables = [x for x in counts if x not in coefficients]
    for x in variables:
        if counts[x] != 2:
            raise NotQuadratic(f"{x} occurs {counts[x]} times")
    for x in coefficients:
        if counts.get(x, 0) > 1:
            raise NotQuadratic(f"coefficient {x} occurs twice")
    if variables:
        k = next(i for i, (x, _) in enumerate(word) if x not in coefficients)
        word = word[k:] + word[:k]
    merged = []
    nblocks = 0
    for x, e in word:
        if x in coefficients:
            if merged and merged[-1][0] == "#":
                continue
            nblocks += 1
            merged.append(("#", nblocks))
        else:
            merged.append((x, e))
    n = len(merged)
    corners = _Classes(range(n))
    ends = {}
    blocks = []
    for j, (x, e) in enumerate(merged):
        a, b = (j - 1) % n, j
        if x == "#":
            blocks.append((a, b))
            continue
        if e < 0:
            a, b = b, a
        ends.setdefault(x, []).append((a, b))
    for (a1, b1), (a2, b2) in ends.values():
        corners.union(a1, a2)
        corners.union(b1, b2)
    vertices = len({corners.find(i) for i in range(n)}) if n else 1
    chi = vertices - (len(variables) + nblocks) + 1
    rims = _Classes()
    for a, b in blocks:
        rims.union(corners.find(a), corners.find(b))
    boundary = len(rims.groups())
    closed = chi + boundary
    orientable = all(sorted(e for y, e in word if y == x) == [-1, 1] for x in variables)
    genus = (2 - closed) // 2 if orientable else 2 - closed
    m = max(boundary - 1, 0)
    has_d = boundary > 0
    size = (2 * genus if orientable else genus) + m
    kappa = size + 1
    regular = (
        (kappa >= 4 and noncommutative)
        or (orientable and genus == 1 and m == 0 and has_d)
        or (orientable and genus == 2 and m == 0 and not has_d)
    )
    return QuadraticForm(orientable, genus, m, has_d, size, max(len(variables) - size, 0), kappa, regular,
                         tuple(word))


def standard_form(source, section=None, coefficients=frozenset(), noncommutative=True):
    """Standard form of a quadratic section of ``source`` or of a quadratic word."""
    if isinstance(source, GenEq):
        word, coefficients = quadratic_relation(source, section if section is not None else 0)
    else:
        word = tuple(source)
    return surface_of(word, frozenset(coefficients), noncommutative)


# ---------------------------------------------------------------------------
# periodic structures


class StructureError(ValueError):
    pass


def _coordinate(solution, p):
    out = LambdaScalar.zero(solution.rank)
    for w in solution.words[: p - 1]:
        out = out + w.length
    return out


def _overlapping_pairs(omega):
    for b, d in omega.pairs():
        if d.left < b.right and b.left < d.right and b is not d:
            yield (b, d) if b.left <= d.left else (d, b)


def _rotations(p):
    if not p.is_finite:
        return {p, invert(p)}
    out = set()
    for q in (p, invert(p)):
        letters = q.letters
        for k in range(len(letters)):
            out.add(LambdaWord.from_letters(letters[k:] + letters[:k], p.rank))
    return out


def _is_long(word, period, rotations):
    if word.length < period.length:
        return False
    q, _ = split_at(word, period.length)
    if q not in rotations:
        return False
    try:
        return is_periodic(word, q)
    except Undefined:
        return False


def _cyclically_reduced(w):
    return bool(w.blocks) and w.is_cyclically_reduced()


@dataclass
class PeriodicStructure:
    period: LambdaWord
    carrier: str
    sections: tuple  # Section objects
    items: frozenset  # long items
    bases: frozenset  # base ids
    signs: dict  # section start -> +1 / -1
    classes: dict  # (boundary, section start) -> class representative
    conflicts: tuple = ()

    def key(self, p, section):
        return (p, section.start)

    def class_of(self, p, section):
        return self.classes[(p, section.start)]

    def section_of(self, omega, item):
        s = omega.section_of(item)
        return s if s in self.sections else None

    def to_dict(self):
        return {
            "period": str(self.period),
            "carrier": self.carrier,
            "sections": [[s.start, s.end] for s in self.sections],
            "items": sorted(self.items),
            "bases": sorted(self.bases),
            "classes": len(set(self.classes.values())),
        }


def _shift_ok(omega, solution, b, d):
    shift = abs(_coordinate(solution, d.left) - _coordinate(solution, b.left))
    size = _coordinate(solution, b.right) - _coordinate(solution, b.left)
    return shift * 2 <= size, shift


def periodic_candidate(omega, solution):
    """Overlapping pair with |mu| >= 2 |shift| of largest shift, or None."""
    best = None
    for b, d in _overlapping_pairs(omega):
        if not omega.section_of(b.left).active:
            continue
        ok, shift = _shift_ok(omega, solution, b, d)
        if not ok or not shift:
            continue
        if best is None or shift > best[0] or (shift == best[0] and b.id < best[1].id):
            best = (shift, b, d)
    return None if best is None else best[1:]


def _relate(omega, bases, sections):
    """Equivalence on section boundaries generated by alpha~alpha, beta~beta."""
    classes = _Classes((p, s.start) for s in sections for p in range(s.start, s.end + 1))
    for bid in sorted(bases):
        b = omega.base(bid)
        d = omega.dual(b)
        sb, sd = omega.section_of_base(b), omega.section_of_base(d)
        classes.union((b.alpha, sb.start), (d.alpha, sd.start))
        classes.union((b.beta, sb.start), (d.beta, sd.start))
    return {k: classes.find(k) for k in classes.parent}


def build_periodic_structure(omega, solution, period=None):
    """Periodic structure attached to a solution and a period word."""
    found = periodic_candidate(omega, solution)
    if found is None:
        raise StructureError("no overlapping pair with a short shift")
    mu, dual = found
    if period is None:
        period = evaluate(span(mu.left, dual.left), solution, reduce=True)
    if not _cyclically_reduced(period):
        raise StructureError(f"period {period} is not cyclically reduced")
    rotations = _rotations(period)
    first = omega.section_of_base(mu)
    sections = [first]
    items = set()
    bases = set()
    queue = [first]
    while queue:
        s = queue.pop(0)
        items.update(i for i in s.items if _is_long(solution[i], period, rotations))
        changed = True
        while changed:
            changed = False
            for sec in sections:
                for b in omega.bases_in(sec):
                    if b.id not in bases and any(i in items for i in b.items):
                        bases.update((b.id, b.dual))
                        changed = True
            for bid in list(bases):
                sec = omega.section_of_base(omega.base(bid))
                if sec not in sections:
                    sections.append(sec)
                    queue.append(sec)
    sections.sort(key=lambda s: s.start)
    signs = {first.start: 1}
    conflicts = []
    pending = [first]
    while pending:
        s = pending.pop()
        for bid in sorted(bases):
            b = omega.base(bid)
            if omega.section_of_base(b) != s:
                continue
            d = omega.dual(b)
            t = omega.section_of_base(d)
            want = b.epsilon * d.epsilon * signs[s.start]
            if t.start not in signs:
                signs[t.start] = want
                pending.append(t)
            elif signs[t.start] != want:
                conflicts.append(f"sign of section [{t.start}, {t.end}] is not determined by {b.id}")
    classes = _relate(omega, bases, sections)
    return PeriodicStructure(period, mu.id, tuple(sections), frozenset(items), frozenset(bases), signs, classes,
                             tuple(conflicts))


def check_periodic_structure(omega, ps, solution=None):
    """List the defining conditions the structure violates (empty when valid)."""
    out = list(ps.conflicts)
    secs = set(ps.sections)
    for bid in ps.bases:
        b = omega.base(bid)
        if b.dual not in ps.bases:
            out.append(f"{bid} is in the structure but its dual is not")
        if omega.section_of_base(b) not in secs:
            out.append(f"{bid} lies outside the sections of the structure")
    for i in ps.items:
        if omega.section_of(i) not in secs:
            out.append(f"h{i} lies outside the sections of the structure")
        for b in omega.bases:
            if b.left <= i < b.right and b.id not in ps.bases:
                out.append(f"{b.id} contains the long item h{i} but is missing")
    for s in ps.sections:
        if s.start not in ps.signs:
            out.append(f"section [{s.start}, {s.end}] has no sign")
    for bid in ps.bases:
        b = omega.base(bid)
        d = omega.dual(b)
        sb, sd = omega.section_of_base(b), omega.section_of_base(d)
        if sb.start in ps.signs and sd.start in ps.signs:
            if ps.signs[sd.start] != b.epsilon * d.epsilon * ps.signs[sb.start]:
                out.append(f"signs of {bid} and its dual disagree with the section signs")
    expected = _relate(omega, ps.bases, ps.sections)
    if _partition(expected) != _partition(ps.classes):
        out.append("boundary relation is not the one generated by the bases")
    if solution is not None:
        rotations = _rotations(ps.period)
        for i in ps.items:
            if not _is_long(solution[i], ps.period, rotations):
                out.append(f"h{i} is not periodic with a period of length |P|")
    return out


def _partition(classes):
    groups = {}
    for k, v in classes.items():
        groups.setdefault(v, set()).add(k)
    return sorted(sorted(g) for g in groups.values())


# ---------------------------------------------------------------------------
# the graph of a periodic structure and the splitting it induces


@dataclass
class PeriodGraph:
    root: tuple
    vertices: tuple
    edges: dict  # item -> (tail, head)
    long: frozenset  # items whose labels are in the structure
    base_forest: frozenset  # T0
    tree: frozenset  # T, contains T0
    paths: dict  # vertex -> signed item word from the root inside T

    @property
    def cycle_edges(self):
        return sorted(e for e in self.edges if e not in self.tree)

    def cycle(self, e):
        tail, head = self.edges[e]
        return reduce_signed(self.paths[tail] + ((e, 1),) + invert_signed(self.paths[head]))

    def walk(self, word):
        """Abelianized class of a closed walk, in the cycle-edge basis."""
        index = {e: k for k, e in enumerate(self.cycle_edges)}
        vec = [0] * len(index)
        for i, s in word:
            if i in index:
                vec[index[i]] += s
        return vec


def period_graph(omega, ps):
    edges = {}
    for s in ps.sections:
        for i in s.items:
            edges[i] = (ps.class_of(i, s), ps.class_of(i + 1, s))
    vertices = tuple(sorted(set(ps.classes.values())))
    forest = _Classes(vertices)
    base_forest = set()
    for i in sorted(edges):
        if i in ps.items:
            continue
        a, b = edges[i]
        if forest.find(a) != forest.find(b):
            forest.union(a, b)
            base_forest.add(i)
    tree = set(base_forest)
    for i in sorted(edges):
        if i not in ps.items:
            continue
        a, b = edges[i]
        if forest.find(a) != forest.find(b):
            forest.union(a, b)
            tree.add(i)
    if len({forest.find(v) for v in vertices}) > 1:
        raise StructureError("the graph of the periodic structure is not connected")
    first = ps.sections[0]
    root = ps.class_of(first.start, first)
    paths = {root: ()}
    frontier = [root]
    while frontier:
        v = frontier.pop(0)
        for e in sorted(tree):
            tail, head = edges[e]
            if tail == v and head not in paths:
                paths[head] = paths[v] + ((e, 1),)
                frontier.append(head)
            elif head == v and tail not in paths:
                paths[tail] = paths[v] + ((e, -1),)
                frontier.append(tail)
    return PeriodGraph(root, vertices, edges, frozenset(i for i in edges if i in ps.items),
                       frozenset(base_forest), frozenset(tree), paths)


def _lift(graph, vector):
    out = ()
    for e, k in zip(graph.cycle_edges, vector):
        c = graph.cycle(e)
        step = c if k > 0 else invert_signed(c)
        out += step * abs(k)
    return reduce_signed(out)


@dataclass
class SplittingReport:
    graph: PeriodGraph
    relations: list  # basis vectors of B~ generators
    z1: list
    z2: list
    factors: list
    c1: list  # lifted words of the Z1 basis
    c2: list
    hnn: list  # dicts with stable letter and the u/z words
    events: list
    sigma_rows: list = field(default_factory=list)

    @property
    def index(self):
        out = 1
        for f in self.factors:
            out *= f
        return out

    @property
    def finite_index(self):
        return len(self.factors) == len(self.z1) and all(self.factors)


def split_by_periodic_structure(omega, ps):
    """Abelian splitting induced by a periodic structure."""
    graph = period_graph(omega, ps)
    cycle_edges = graph.cycle_edges
    dim = len(cycle_edges)
    gens = []
    for bid in sorted(ps.bases):
        b = omega.base(bid)
        if bid > b.dual and b.dual in ps.bases:
            continue
        d = omega.dual(b)
        gens.append(graph.walk(span(b.alpha, b.beta) + invert_signed(span(d.alpha, d.beta))))
    for k, e in enumerate(cycle_edges):
        if e not in ps.items:
            vec = [0] * dim
            vec[k] = 1
            gens.append(vec)
    split = saturation_split(gens, dim)
    c1 = [_lift(graph, v) for v in split.z1]
    c2 = [_lift(graph, v) for v in split.z2]
    hnn = []
    for e in sorted(graph.tree - graph.base_forest):
        tail, _ = graph.edges[e]
        r = graph.paths[tail]
        assoc = []
        for f in cycle_edges:
            if f in ps.items:
                continue
            u = reduce_signed(invert_signed(r) + graph.cycle(f) + r)
            z = reduce_signed(((e, -1),) + u + ((e, 1),))
            assoc.append({"edge": f, "u": u, "z": z})
        hnn.append({"stable": e, "associated": assoc})
    events = []
    for h in hnn:
        events.append({"kind": "hnn", "over": "abelian", "stable": f"h{h['stable']}",
                       "associated": len(h["associated"])})
    if c2:
        events.append({"kind": "centralizer-extension", "edge_rank": len(c1), "new_rank": len(c2),
                       "index": split.index})
    rows = []
    for bid in sorted(ps.bases):
        b = omega.base(bid)
        if bid < b.dual:
            rows.append((span(b.alpha, b.beta), span(omega.dual(b).alpha, omega.dual(b).beta), f"periodic {bid}"))
    return SplittingReport(graph, gens, split.z1, split.z2, split.factors, c1, c2, hnn, events, rows)


def cycles_commute(graph, solution):
    """All cycle images at the root commute (the structure is periodized)."""
    images = [evaluate(graph.cycle(e), solution, reduce=True) for e in graph.cycle_edges]
    for a in range(len(images)):
        for b in range(a + 1, len(images)):
            u, v = images[a], images[b]
            if mult(u, v) != mult(v, u):
                return False
    return True


# ---------------------------------------------------------------------------
# excess along paths of entire transformations


def lineage(bid):
    """A base and the pieces cut from it share the id up to the first dot."""
    return bid.split(".", 1)[0]


@dataclass
class PathStep:
    omega: GenEq
    solution: Solution
    carrier: str
    transfer: tuple
    rest: str  # id of the carrier piece that survives, or None
    target: GenEq
    target_solution: Solution


def d8_path(omega, solution, steps):
    """Apply the entire transformation ``steps`` times, keeping solutions."""
    out = []
    cur, sol = omega, solution
    for _ in range(steps):
        r = d8_entire_step(cur, sol)
        out.append(PathStep(cur, sol, r.info["carrier"], tuple(r.info["transfer"]), r.info["carrier_rest"],
                            r.target, r.solution))
        cur, sol = r.target, r.solution
    return out


def _base_length(b, solution):
    total = LambdaScalar.zero(solution.rank)
    for i in b.items:
        total = total + solution[i].length
    return total


def _boundary_j(omega):
    inactive = [s.start for s in omega.sections if not s.active]
    return min(inactive) if inactive else omega.rho + 1


@dataclass
class ExcessReport:
    carriers: frozenset  # lineages of carriers
    transfers: frozenset  # lineages of transfer bases
    psi: list
    u_omega: list
    deltas: list  # (|U_w| drop, carrier drop) per step

    @property
    def constant(self):
        return all(p == self.psi[0] for p in self.psi)

    @property
    def stepwise(self):
        return all(a == b for a, b in self.deltas)


def _node_excess(omega, solution, marked):
    one = [b for b in omega.bases if lineage(b.id) in marked or lineage(b.dual) in marked]
    two = [b for b in omega.bases if b not in one]
    alpha = min([b.left for b in two] + [_boundary_j(omega)])
    u = LambdaScalar.zero(solution.rank)
    for i in range(1, alpha):
        u = u + solution[i].length
    total = LambdaScalar.zero(solution.rank)
    for b in one:
        total = total + _base_length(b, solution)
    return total - u * 2, u


def excess(path):
    carriers = frozenset(lineage(s.carrier) for s in path)
    transfers = frozenset(lineage(t) for s in path for t in s.transfer)
    marked = carriers | transfers
    nodes = [(s.omega, s.solution) for s in path]
    if path:
        nodes.append((path[-1].target, path[-1].target_solution))
    psi, us = [], []
    for omega, sol in nodes:
        p, u = _node_excess(omega, sol, marked)
        psi.append(p)
        us.append(u)
    deltas = []
    for k, s in enumerate(path):
        before = _base_length(s.omega.base(s.carrier), s.solution)
        after = LambdaScalar.zero(s.solution.rank)
        if s.rest is not None:
            after = _base_length(s.target.base(s.rest), s.target_solution)
        deltas.append((us[k] - us[k + 1], before - after))
    return ExcessReport(carriers, transfers, psi, us, deltas)


@dataclass(frozen=True)
class MuReducing:
    base: str


@dataclass(frozen=True)
class Prohibited:
    segments: tuple  # (start, stop) index pairs of the reducing pieces
    tail: tuple


@dataclass(frozen=True)
class Neither:
    reason: str = ""


def _reducing(path, start, stop):
    seg = path[start:stop]
    if len(seg) < 2:
        return False
    mu = lineage(seg[0].carrier)
    if sum(1 for s in seg if lineage(s.carrier) == mu) < 2:
        return False
    second = seg[1]
    b = second.omega.base(second.carrier)
    d = second.omega.dual(b)
    if not (d.left < b.right and b.left < d.right):
        return True
    size = _base_length(b, second.solution)
    shift = abs(_coordinate(second.solution, d.alpha) - _coordinate(second.solution, b.alpha))
    return size <= shift * 2


def classify_path(path, f1=1, n=None):
    """MuReducing, Prohibited or Neither for a path of entire transformations."""
    if not path:
        return Neither("empty path")
    if _reducing(path, 0, len(path)):
        return MuReducing(lineage(path[0].carrier))
    if n is None:
        n = len(path[0].omega.bases)
    need = 4 * n * (1 + f1)
    segments = []
    i = 0
    while i < len(path):
        stop = next((k for k in range(i + 2, len(path) + 1) if _reducing(path, i, k)), None)
        if stop is None:
            break
        segments.append((i, stop))
        i = stop
    if not segments or i >= len(path):
        return Neither("no reducing decomposition with a tail")
    etas = [lineage(path[a].carrier) for a, _ in segments]
    carriers = {lineage(s.carrier) for s in path[: segments[-1][1]]}
    if any(etas.count(c) < need for c in carriers):
        return Neither(f"some carrier occurs fewer than {need} times")
    head = {lineage(t) for s in path[: segments[-1][1]] for t in s.transfer}
    tail = {lineage(t) for s in path[i:] for t in s.transfer}
    if not head <= tail:
        return Neither("a transfer base of the reducing part is missing from the tail")
    return Prohibited(tuple(segments), (i, len(path)))


# ---------------------------------------------------------------------------
# the driver


class BudgetExhausted(RuntimeError):
    pass


@dataclass
class PathNode:
    index: int
    case: str
    note: str
    tau: int
    rho: int


@dataclass
class DecompositionReport:
    complete: bool
    steps: int
    chain: list
    events: list
    sigma: LinearSystem
    trace: list
    final: GenEq = None
    final_solution: Solution = None
    reason: str = ""
    tau_increases: list = field(default_factory=list)

    def to_dict(self):
        return {
            "schema": 1,
            "complete": self.complete,
            "reason": self.reason,
            "steps": self.steps,
            "chain": self.chain,
            "events": self.events,
            "sigma_complete": {"items": self.sigma.rho, "rows": [list(r) for r in self.sigma.rows]},
            "trace": [{"case": n.case, "note": n.note, "tau": n.tau, "items": n.rho} for n in self.trace],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def lines(self):
        out = [f"complete: {'yes' if self.complete else 'no (' + self.reason + ')'}",
               f"steps: {self.steps}"]
        for k, g in enumerate(self.chain, 1):
            detail = ", ".join(f"{a}={b}" for a, b in g.items() if a != "kind")
            out.append(f"G{k}: {g['kind']} ({detail})")
        out.append(f"sigma rows: {len(self.sigma)}")
        for row in self.sigma.rows:
            terms = " ".join(f"{c:+d}|h{i}|" for i, c in enumerate(row, 1) if c)
            out.append(f"  {terms} = 0")
        return out


def _basic_rows(omega, sigma, note="basic"):
    for b, d in omega.pairs():
        sigma.add_equal(span(b.alpha, b.beta), span(d.alpha, d.beta), f"{note} {b.id}")


class _Driver:
    def __init__(self, omega, solution, max_steps):
        self.omega = ensure_valid(omega)
        self.solution = solution
        self.max_steps = max_steps
        self.steps = 0
        self.sigma = LinearSystem(omega.rho)
        _basic_rows(omega, self.sigma, "initial")
        self.trace = [PathNode(0, classify(omega), "start", tau(omega), omega.rho)]
        self.events = []
        self.base_rank = 0
        self.tau_increases = []

    def budget(self):
        if self.steps >= self.max_steps:
            raise BudgetExhausted(f"budget exhausted after {self.steps} steps")

    def take(self, r, cost=None):
        cost = cost if cost is not None else max(1, len(r.steps))
        if self.steps + cost > self.max_steps:
            raise BudgetExhausted(f"budget exhausted after {self.steps} steps")
        before = tau(self.omega)
        if r.morphism is not None:
            self.sigma = self.sigma.rewrite(r.morphism)
        else:
            self.sigma = LinearSystem(r.target.rho)
        self.omega = r.target
        self.solution = r.solution
        self.steps += cost
        after = tau(self.omega)
        if after > before:
            self.tau_increases.append((len(self.trace), r.note))
        self.trace.append(PathNode(len(self.trace), classify(self.omega), r.note, after, self.omega.rho))

    def free_moves(self, before_free):
        gam = self.omega.gammas()
        now = sum(1 for i in range(1, self.omega.rho + 1) if gam[i] == 0 and not self.omega.section_of(i).active)
        if now > before_free:
            self.events.append({"kind": "free", "rank": now - before_free, "step": self.steps})
        return now

    def deactivate(self, sections, note):
        keep = {(s.start, s.end) for s in sections}
        new = [Section(s.start, s.end, s.active and (s.start, s.end) not in keep) for s in self.omega.sections]
        target = self.omega.with_(sections=tuple(new))
        self.take(TransformResult(target, Morphism.identity(self.omega.rho), note, self.solution), cost=1)


def _inactive_free(omega):
    gam = omega.gammas()
    return sum(1 for i in range(1, omega.rho + 1) if gam[i] == 0 and not omega.section_of(i).active)


def _fill_single(omega, solution):
    """Cover each active item of multiplicity one by a pair whose dual is a new free item."""
    gam = omega.gammas()
    lone = [i for i in omega.active_items() if gam[i] == 1]
    if not lone:
        return None
    rho = omega.rho + len(lone)
    bases = list(omega.bases)
    words = list(solution.words)
    heights = dict(omega.heights())
    taken = set(omega.base_ids)
    k = 0
    for n, i in enumerate(lone, 1):
        while f"s{k}" in taken or f"s{k}~" in taken:
            k += 1
        bid = f"s{k}"
        taken.update((bid, bid + "~"))
        new = omega.rho + n
        bases += [Base(bid, 1, i, i + 1, bid + "~"), Base(bid + "~", 1, new, new + 1, bid)]
        words.append(solution[i])
        heights[new] = height(solution[i].length)
    sections = list(omega.sections) + [Section(omega.rho + 1, rho + 1, False)]
    target = ensure_valid(GenEq(rho, bases, omega.connections, sections, heights, omega.rank))
    morphism = Morphism(tuple(((i, 1),) for i in range(1, omega.rho + 1)), rho, ISOMORPHISM)
    return TransformResult(target, morphism, f"cover {len(lone)} single items by short bases", Solution(tuple(words)))


def _split_closed(d):
    """Close active sections at interior boundaries no base crosses."""
    while True:
        om = d.omega
        cut = None
        for s in om.sections:
            if not s.active:
                continue
            for p in range(s.start + 1, s.end):
                if not om.is_open(p):
                    cut = (s.start, p)
                    break
            if cut:
                break
        if cut is None:
            return
        d.take(d1_close_section(om, cut[0], cut[1], solution=d.solution))


def _quadratic_sections(omega):
    out = []
    for s in omega.sections:
        if not s.active:
            continue
        try:
            out.append((s, standard_form(omega, s)))
        except NotQuadratic:
            continue
    return out


def _surface_events(d):
    """Record the splittings of every quadratic active section and park them."""
    _split_closed(d)
    found = _quadratic_sections(d.omega)
    if not found:
        return False
    for s, form in found:
        inside = d.omega.bases_in(s)
        quadratic = any(b.dual in {x.id for x in inside} for b in inside)
        for b in inside:
            if b.id < b.dual:
                d.sigma.add_equal(span(b.alpha, b.beta), span(d.omega.dual(b).alpha, d.omega.dual(b).beta),
                                  f"associated lengths {b.id}")
        base = form.variables + form.free_variables - (0 if form.has_d else 1)
        d.base_rank += max(base, 0)
        if form.regular:
            event = {"kind": "qh", **form.to_dict()}
        elif quadratic:
            event = {"kind": "hnn", "over": "abelian", **form.to_dict()}
        else:
            event = {"kind": "free", "rank": form.free_variables}
        event["section"] = [s.start, s.end]
        event["step"] = d.steps
        d.events.append(event)
    d.deactivate([s for s, _ in found], "park quadratic sections")
    return True


def _periodic_event(d):
    found = periodic_candidate(d.omega, d.solution)
    if found is None:
        return False
    ps = build_periodic_structure(d.omega, d.solution)
    if check_periodic_structure(d.omega, ps, d.solution):
        return False
    try:
        rep = split_by_periodic_structure(d.omega, ps)
    except StructureError:
        return False
    for left, right, note in rep.sigma_rows:
        d.sigma.add_equal(left, right, note)
    for e in rep.events:
        d.events.append({**e, "step": d.steps, "period": str(ps.period)})
    d.base_rank += len(rep.c1) + len(rep.graph.base_forest)
    d.deactivate(list(ps.sections), "park periodic sections")
    return True


def _entire_episode(d, key_limit=None):
    """D8 followed by D7 until the active part empties, repeats, or D8 stops applying.

    Returns "empty", "repeat" or "stuck".
    """
    seen = {canonical_key(d.omega)}
    while True:
        if not d.omega.active_items():
            return "empty"
        d.budget()
        try:
            r = d8_entire_step(d.omega, d.solution)
        except (NotApplicable, TransformError):
            return "stuck"
        d.take(r)
        before = _inactive_free(d.omega)
        d.take(d7_tietze_cleaning(d.omega, d.solution))
        d.free_moves(before)
        key = canonical_key(d.omega)
        if key in seen:
            return "repeat"
        seen.add(key)


def run(omega, solution, max_steps=10000):
    """Drive the elimination process from ``omega`` with a planted solution."""
    if solution is None:
        raise ValueError("the elimination process needs a solution to measure lengths")
    d = _Driver(omega, solution, max_steps)
    reason = ""
    try:
        d.budget()
        before = _inactive_free(d.omega)
        d.take(d7_tietze_cleaning(d.omega, d.solution))
        d.free_moves(before)
        while True:
            d.budget()
            case = classify(d.omega)
            if case == LEAF:
                break
            if case == LINEAR:
                key = canonical_key(d.omega)
                before = _inactive_free(d.omega)
                d.take(d7_tietze_cleaning(d.omega, d.solution))
                d.free_moves(before)
                if canonical_key(d.omega) != key:
                    continue
            elif case in (QUADRATIC, ALMOST_QUADRATIC):
                filled = _fill_single(d.omega, d.solution)
                if filled is not None:
                    d.take(filled)
                outcome = _entire_episode(d)
                if outcome == "empty":
                    continue
                if _surface_events(d):
                    continue
            else:
                if _periodic_event(d):
                    continue
                outcome = _entire_episode(d)
                if outcome == "empty":
                    continue
                if outcome == "repeat" and _surface_events(d):
                    continue
            first = next(s for s in d.omega.sections if s.active)
            d.events.append({"kind": "rigid", "section": [first.start, first.end], "step": d.steps})
            d.deactivate([first], "park a section the process cannot shorten")
    except BudgetExhausted as exc:
        reason = str(exc)
    free = sum(1 for i, g in d.omega.gammas().items() if g == 0)
    chain = [{"kind": "free", "rank": free + d.base_rank}]
    chain += [e for e in d.events if e["kind"] != "free"]
    return DecompositionReport(not reason, d.steps, chain, d.events, d.sigma, d.trace, d.omega, d.solution, reason,
                               d.tau_increases)
