"""From a presentation plus an embedding table to a generalized equation.

Each relator, evaluated under the embedding, traces a closed walk in the
tree of reduced words.  The subtree spanned by the walk is the cancellation
tree; its edges are the pieces.  Every generator gets one segment of the
interval, cut at every piece boundary of every occurrence, and the two
occurrences of each piece become a pair of dual bases.
"""

from dataclasses import dataclass, field

from .geq import Base, GenEq, Section, Solution, verify_solution
from .ordered import LambdaScalar, height
from .words import (
    LambdaWord,
    Undefined,
    common_prefix_length,
    concat,
    cyclic_decomposition,
    invert,
    mult,
    parse_word,
    split_at,
    subword,
)


class EmbeddingError(ValueError):
    """The embedding table is not a homomorphism into reduced words."""


@dataclass
class PresentationInput:
    generators: tuple
    relators: tuple  # each a tuple of (generator, sign)
    embedding: dict
    rank: int = 1

    def image(self, gen, sign=1):
        w = self.embedding[gen]
        return w if sign > 0 else invert(w)

    def evaluate(self, relator):
        out = LambdaWord.empty(self.rank)
        for g, s in relator:
            out = mult(out, self.image(g, s))
        return out

    def check(self):
        errs = []
        for g in self.generators:
            w = self.embedding.get(g)
            if w is None:
                errs.append(f"generator {g} has no image")
                continue
            if not w.blocks or not w.is_reduced():
                errs.append(f"image of {g} must be nonempty and reduced")
                continue
            try:
                cyclic_decomposition(w)
            except Undefined:
                errs.append(f"image of {g} has no cyclic decomposition")
        if errs:
            return errs
        for r in self.relators:
            try:
                res = self.evaluate(r)
            except Undefined:
                errs.append(f"relator {format_relator(r)} leaves the block fragment")
                continue
            if res.blocks:
                errs.append(f"relator {format_relator(r)} evaluates to {res}, not 1")
        return errs


def format_relator(r):
    return " ".join(g if s > 0 else f"{g}^-1" for g, s in r) or "1"


def parse_relator(text):
    w = parse_word(text)
    return tuple((a.symbol, a.sign) for a in w.letters)


def parse_presentation(text, rank=None):
    """Line format: ``rank N``, ``generators x y``, ``relator ...``, ``x = word``."""
    r = rank
    gens, rels, emb_text = [], [], {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line and not line.startswith(("rank", "generators", "relator")):
            name, _, w = line.partition("=")
            emb_text[name.strip()] = w.strip()
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "rank":
            r = int(rest.lstrip("="))
        elif head == "generators":
            gens.extend(rest.replace(",", " ").split())
        elif head == "relator":
            rels.append(parse_relator(rest))
        else:
            raise ValueError(f"unknown presentation line {raw!r}")
    r = r or 1
    emb = {g: parse_word(w, r) for g, w in emb_text.items()}
    return PresentationInput(tuple(gens), tuple(rels), emb, r)


def triangulate(p):
    """Split relators until each involves at most three generators."""
    gens = list(p.generators)
    emb = dict(p.embedding)
    rels = []
    fresh = 0
    for r in p.relators:
        r = list(r)
        while len({g for g, _ in r}) > 3:
            (g1, s1), (g2, s2) = r[0], r[1]
            while True:
                fresh += 1
                name = f"a{fresh}"
                if name not in gens:
                    break
            try:
                emb[name] = mult(_img(emb, g1, s1), _img(emb, g2, s2))
            except Undefined as exc:
                raise EmbeddingError(f"auxiliary image for {name} undefined") from exc
            if not emb[name].blocks:
                raise EmbeddingError(f"auxiliary generator {name} maps to 1")
            gens.append(name)
            rels.append(((g1, s1), (g2, s2), (name, -1)))
            r = [(name, 1)] + r[2:]
        rels.append(tuple(r))
    return PresentationInput(tuple(gens), tuple(rels), emb, p.rank)


def _img(emb, g, s):
    return emb[g] if s > 0 else invert(emb[g])


@dataclass
class Edge:
    id: str
    tail: int
    head: int
    label: LambdaWord

    @property
    def length(self):
        return self.label.length


@dataclass
class Occurrence:
    position: int
    generator: str
    sign: int
    path: tuple  # ((edge id, sign), ...)


@dataclass
class CancellationTree:
    relator: tuple
    vertices: list  # reduced words, vertex 0 is the identity
    edges: dict
    occurrences: list

    def uses(self):
        count = {e: 0 for e in self.edges}
        for occ in self.occurrences:
            for e, _ in occ.path:
                count[e] += 1
        return count


def _is_prefix(u, v):
    if u.length > v.length:
        return False
    return common_prefix_length(u, v) == u.length


def build_tree(relator, embedding, rank=1, tag="t"):
    """Cancellation tree of a relator whose image cancels to 1."""
    images = [_img(embedding, g, s) for g, s in relator]
    points = [LambdaWord.empty(rank)]
    for w in images:
        points.append(mult(points[-1], w))
    if points[-1].blocks:
        raise EmbeddingError(f"relator {format_relator(relator)} leaves residue {points[-1]}")
    points.pop()
    k = len(points)
    vertices = list(dict.fromkeys(points))
    for i in range(k):
        for j in range(i + 1, k):
            c, _ = split_at(points[i], common_prefix_length(points[i], points[j]))
            if c not in vertices:
                vertices.append(c)
    vertices.sort(key=lambda w: (tuple(reversed(w.length.coords)), str(w)))
    parent = {}
    for idx, v in enumerate(vertices):
        if idx == 0:
            continue
        best = 0
        for jdx, u in enumerate(vertices[:idx]):
            if u.length < v.length and _is_prefix(u, v) and vertices[best].length <= u.length:
                best = jdx
        parent[idx] = best
    edges = {}
    for idx, p in parent.items():
        _, label = split_at(vertices[idx], vertices[p].length)
        eid = f"{tag}e{len(edges) + 1}"
        edges[idx] = Edge(eid, p, idx, label)
    index = {v: i for i, v in enumerate(vertices)}

    def ancestors(i):
        out = [i]
        while i in parent:
            i = parent[i]
            out.append(i)
        return out

    occurrences = []
    for j, (g, s) in enumerate(relator):
        a = index[points[j]]
        b = index[points[(j + 1) % k]]
        up = ancestors(a)
        down = ancestors(b)
        meet = next(x for x in up if x in down)
        path = [(edges[x].id, -1) for x in up[: up.index(meet)]]
        path += [(edges[x].id, 1) for x in reversed(down[: down.index(meet)])]
        occurrences.append(Occurrence(j, g, s, tuple(path)))
    tree = CancellationTree(tuple(relator), vertices, {e.id: e for e in edges.values()}, occurrences)
    for occ in occurrences:
        got = LambdaWord.empty(rank)
        for e, sg in occ.path:
            lab = tree.edges[e].label
            got = concat(got, lab if sg > 0 else invert(lab))
        if got != _img(embedding, occ.generator, occ.sign):
            raise EmbeddingError(f"path of occurrence {occ.position} does not spell its image")
    return tree


@dataclass
class Assembly:
    omega: GenEq
    generator_words: dict  # generator -> tuple of (item, sign)
    solution: Solution
    trees: list = field(default_factory=list)
    segments: dict = field(default_factory=dict)  # generator -> (start, end) boundaries


def assemble(trees, generators, embedding, rank=1):
    """Lay the generators out left to right (input order) and cut at pieces."""
    reps = {g: [] for g in generators}
    edge_label = {}
    for tree in trees:
        for e in tree.edges.values():
            edge_label[e.id] = e.label
        for occ in tree.occurrences:
            path = occ.path if occ.sign > 0 else tuple((e, -s) for e, s in reversed(occ.path))
            reps[occ.generator].append(path)
    boundary = 1
    items = []  # words
    segments = {}
    sections = []
    gen_words = {}
    cut_index = {}
    for g in generators:
        w = embedding[g]
        cuts = {LambdaScalar.zero(rank), w.length}
        for path in reps[g]:
            pos = LambdaScalar.zero(rank)
            for e, _ in path:
                pos = pos + edge_label[e].length
                cuts.add(pos)
        cuts = sorted(cuts)
        start = boundary
        for a, b in zip(cuts, cuts[1:]):
            one = LambdaScalar.of_int(1, rank)
            items.append(subword(w, a + one, b + one))
        for n, c in enumerate(cuts):
            cut_index[g, c] = start + n
        boundary = start + len(cuts) - 1
        segments[g] = (start, boundary)
        sections.append(Section(start, boundary, True))
        gen_words[g] = tuple((i, 1) for i in range(start, boundary))
    appearances = {}
    for g in generators:
        for path in reps[g]:
            pos = LambdaScalar.zero(rank)
            for e, s in path:
                a = cut_index[g, pos]
                pos = pos + edge_label[e].length
                b = cut_index[g, pos]
                appearances.setdefault(e, []).append((a, b, s))
    bases = []
    for e, apps in appearances.items():
        for k in range(0, len(apps) - 1, 2):
            suffix = "" if len(apps) == 2 else f"_{k // 2 + 1}"
            ida, idb = f"{e}{suffix}", f"{e}{suffix}~"
            (a1, b1, s1), (a2, b2, s2) = apps[k], apps[k + 1]
            bases.append(_base(ida, a1, b1, s1, idb))
            bases.append(_base(idb, a2, b2, s2, ida))
        if len(apps) % 2:
            raise EmbeddingError(f"piece {e} is used an odd number of times")
    rho = boundary - 1
    heights = {i: height(w.length) for i, w in enumerate(items, 1)}
    omega = GenEq(rho, bases, (), sections, heights, rank)
    solution = Solution(tuple(items))
    return Assembly(omega, gen_words, solution, list(trees), segments)


def _base(bid, a, b, s, dual):
    if s > 0:
        return Base(bid, 1, a, b, dual)
    return Base(bid, -1, b, a, dual)


def build(p, check=True):
    """Triangulate, build a tree per relator and assemble Omega."""
    if check:
        errs = p.check()
        if errs:
            raise EmbeddingError("; ".join(errs))
    t = triangulate(p)
    trees = [build_tree(r, t.embedding, t.rank, tag=f"r{i}") for i, r in enumerate(t.relators, 1)]
    asm = assemble(trees, t.generators, t.embedding, t.rank)
    bad = verify_solution(asm.omega, asm.solution)
    if bad is not None:
        raise EmbeddingError(f"planted piece solution fails: {bad}")
    return asm

