"""Elementary and derived transformations of generalized equations.

Every transformation is a pure function returning a ``TransformResult``:
the new equation, a morphism sending each source item to a signed word in
target items, and (when a solution was supplied) the pushed solution.
Positions on a dual base are located with a length oracle, which is the
item lengths of a planted solution or an explicit tuple of lengths.
"""

from dataclasses import dataclass, field

from .geq import (
    Base,
    Connection,
    GenEq,
    Section,
    Solution,
    canonical_key,
    ensure_valid,
    reduce_signed,
    span,
)
from .ordered import LambdaScalar, height
from .words import LambdaWord, concat, invert, split_at

ISOMORPHISM = "isomorphism"
EPIMORPHISM = "epimorphism"


class TransformError(ValueError):
    """A precondition of the transformation does not hold."""


class NotApplicable(TransformError):
    pass


class NeedsLengths(TransformError):
    """The step has to locate a point on a dual base and no lengths were given."""


# ---------------------------------------------------------------------------
# morphisms


@dataclass(frozen=True)
class Morphism:
    item_map: tuple  # item_map[i - 1] = signed word in target items
    target_rho: int
    kind: str = ISOMORPHISM

    @classmethod
    def identity(cls, rho):
        return cls(tuple(((i, 1),) for i in range(1, rho + 1)), rho)

    @classmethod
    def from_dict(cls, mapping, source_rho, target_rho, kind=ISOMORPHISM):
        return cls(tuple(tuple(mapping[i]) for i in range(1, source_rho + 1)), target_rho, kind)

    @property
    def source_rho(self):
        return len(self.item_map)

    def __getitem__(self, i):
        return self.item_map[i - 1]

    def apply(self, word):
        out = []
        for i, s in word:
            image = self[i]
            if s < 0:
                image = tuple((j, -t) for j, t in reversed(image))
            out.extend(image)
        return reduce_signed(tuple(out))

    def then(self, other):
        """First self, then other."""
        kind = ISOMORPHISM if self.kind == other.kind == ISOMORPHISM else EPIMORPHISM
        return Morphism(tuple(other.apply(w) for w in self.item_map), other.target_rho, kind)

    def lines(self):
        from .geq import format_signed

        return [f"h{i} -> {format_signed(w)}" for i, w in enumerate(self.item_map, 1)]


def transport(morphism, target_solution):
    """Pull a solution of the target back to the source."""
    words = []
    for w in morphism.item_map:
        out = LambdaWord.empty(target_solution.rank)
        for j, s in w:
            u = target_solution[j]
            out = concat(out, u if s > 0 else invert(u))
        words.append(out)
    return Solution(tuple(words))


def push(result):
    """The solution carried forward by a transformation, if one was supplied."""
    if result.solution is None:
        raise NeedsLengths("no solution was supplied to the transformation")
    return result.solution


@dataclass
class TransformResult:
    target: GenEq
    morphism: Morphism
    note: str
    solution: Solution = None
    lengths: tuple = None
    boundary_map: tuple = ()  # boundary_map[b] for b in 1..rho+1 (index 0 unused)
    steps: list = field(default_factory=list)
    pieces: tuple = ()  # ET1: ids of the two halves, alpha side first
    loop: object = None
    info: dict = field(default_factory=dict)


@dataclass
class LoopDetected:
    period: int
    first: int
    trace: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# low level helpers


def _lengths(omega, solution, lengths):
    if lengths is not None:
        return tuple(lengths)
    if solution is not None:
        return solution.lengths()
    return None


def _coords(lengths, rank):
    out = [None, LambdaScalar.zero(rank)]
    for v in lengths:
        out.append(out[-1] + v)
    return out  # out[b] = coordinate of boundary b


def _heights_for(lengths, fallback):
    if lengths is None:
        return fallback
    return {i: height(v) for i, v in enumerate(lengths, 1)}


def _rebuild(omega, f, rho, bases=None, connections=None, sections=None, heights=None):
    """Apply boundary map f to every position; drop empty sections."""
    bases = omega.bases if bases is None else bases
    connections = omega.connections if connections is None else connections
    sections = omega.sections if sections is None else sections
    nb = [Base(b.id, b.epsilon, f(b.alpha), f(b.beta), b.dual) for b in bases]
    nc = [Connection(f(c.p), c.base, f(c.q)) for c in connections]
    ns = []
    for s in sections:
        a, e = f(s.start), f(s.end)
        if a < e:
            ns.append(Section(a, e, s.active))
    return GenEq(rho, nb, nc, ns, heights or {}, omega.rank)


def _result(omega, target, morphism, note, solution, lengths, bmap):
    return TransformResult(ensure_valid(target), morphism, note, solution, lengths, bmap, [note])


def _fresh(omega, stem):
    taken = set(omega.base_ids)
    k = 1
    while f"{stem}.{k}" in taken or f"{stem}.{k + 1}" in taken:
        k += 2
    return f"{stem}.{k}", f"{stem}.{k + 1}"


def _base_arg(omega, b):
    return omega.base(b) if isinstance(b, str) else omega.base(b.id)


def _identity_map(rho):
    return tuple(range(rho + 2))


# ---------------------------------------------------------------------------
# ET1 - ET5


def et1_cut(omega, connection, solution=None, lengths=None):
    """Cut a base and its dual at a boundary connection."""
    c = connection if isinstance(connection, Connection) else Connection(*connection)
    if c not in omega.connections:
        raise TransformError(f"connection {c} is not present")
    lam = omega.base(c.base)
    dual = omega.dual(lam)
    if not lam.strictly_inside(c.p):
        raise TransformError(f"boundary {c.p} is not internal to {lam.id}")
    l1, l2 = _fresh(omega, lam.id)
    d1, d2 = _fresh(omega, dual.id)
    new = [
        Base(l1, lam.epsilon, lam.alpha, c.p, d1),
        Base(l2, lam.epsilon, c.p, lam.beta, d2),
        Base(d1, dual.epsilon, dual.alpha, c.q, l1),
        Base(d2, dual.epsilon, c.q, dual.beta, l2),
    ]
    halves = {l1: new[0], l2: new[1], d1: new[2], d2: new[3]}
    conns = []
    for k in omega.connections:
        if k.base not in (lam.id, dual.id):
            conns.append(k)
            continue
        if k.base == dual.id:
            continue  # regenerated from the mirror
        if k == c:
            continue
        if k.p == c.p:
            raise TransformError(f"connection {k} conflicts with the cut at {c.p}")
        first = halves[l1].strictly_inside(k.p)
        piece, image = (l1, d1) if first else (l2, d2)
        if not halves[image].strictly_inside(k.q):
            raise TransformError(f"connection {k} crosses the cut")
        conns.append(Connection(k.p, piece, k.q))
        conns.append(Connection(k.q, image, k.p))
    bases = [b for b in omega.bases if b.id not in (lam.id, dual.id)] + new
    target = omega.with_(bases=tuple(bases), connections=tuple(conns))
    note = f"ET1 cut {lam.id} at ({c.p}, {c.q})"
    r = _result(omega, target, Morphism.identity(omega.rho), note, solution, _lengths(omega, solution, lengths),
                _identity_map(omega.rho))
    r.pieces = (l1, l2)
    return r


def _tie_image(omega, carrier, p):
    """Boundary on the dual corresponding to p on the carrier, or None."""
    dual = omega.dual(carrier)
    if p == carrier.alpha:
        return dual.alpha
    if p == carrier.beta:
        return dual.beta
    return omega.tie(p, carrier.id)


def et2_transfer(omega, carrier, moved, solution=None, lengths=None):
    """Move ``moved`` from ``carrier`` onto the dual of the carrier."""
    lam = _base_arg(omega, carrier)
    mu = _base_arg(omega, moved)
    if mu.id in (lam.id, lam.dual):
        raise TransformError("cannot transfer a base onto itself or its dual")
    if not (lam.left <= mu.left and mu.right <= lam.right):
        raise TransformError(f"{mu.id} is not inside {lam.id}")
    images = {}
    for p in range(mu.left, mu.right + 1):
        q = _tie_image(omega, lam, p)
        if q is None:
            raise TransformError(f"boundary {p} on {mu.id} is not {lam.id}-tied")
        images[p] = q
    a, b = images[mu.alpha], images[mu.beta]
    moved_base = Base(mu.id, 1 if b > a else -1, a, b, mu.dual)
    conns = []
    for k in omega.connections:
        if k.base == mu.id:
            conns.append(Connection(images[k.p], mu.id, k.q))
        elif k.base == mu.dual:
            conns.append(Connection(k.p, mu.dual, images[k.q]))
        else:
            conns.append(k)
    bases = tuple(moved_base if x.id == mu.id else x for x in omega.bases)
    target = omega.with_(bases=bases, connections=tuple(conns))
    note = f"ET2 transfer {mu.id} from {lam.id} onto {lam.dual}"
    return _result(omega, target, Morphism.identity(omega.rho), note, solution, _lengths(omega, solution, lengths),
                   _identity_map(omega.rho))


def is_matched(omega, b):
    d = omega.dual(b)
    return b.alpha == d.alpha and b.beta == d.beta


def et3_remove_matched(omega, base, solution=None, lengths=None):
    lam = _base_arg(omega, base)
    if not is_matched(omega, lam):
        raise TransformError(f"{lam.id} is not matched with its dual")
    drop = {lam.id, lam.dual}
    target = omega.with_(
        bases=tuple(b for b in omega.bases if b.id not in drop),
        connections=tuple(c for c in omega.connections if c.base not in drop),
    )
    note = f"ET3 remove matched {lam.id}/{lam.dual}"
    return _result(omega, target, Morphism.identity(omega.rho), note, solution, _lengths(omega, solution, lengths),
                   _identity_map(omega.rho))


def _remove_items(omega, left, right, bases, connections, item_words, solution, lengths):
    """Delete items left..right-1, collapsing boundaries left..right to one."""
    width = right - left

    def f(b):
        if b <= left:
            return b
        if b >= right:
            return b - width
        return left

    def g(i):
        return i if i < left else i - width

    rho = omega.rho - width
    old_heights = omega.heights()
    heights = {g(i): h for i, h in old_heights.items() if not left <= i < right}
    new_lengths = None
    if lengths is not None:
        new_lengths = tuple(v for i, v in enumerate(lengths, 1) if not left <= i < right)
    new_solution = None
    if solution is not None:
        new_solution = Solution(tuple(w for i, w in enumerate(solution.words, 1) if not left <= i < right))
    target = _rebuild(omega, f, rho, bases, connections, heights=_heights_for(new_lengths, heights))
    mapping = {}
    for i in range(1, omega.rho + 1):
        if left <= i < right:
            mapping[i] = tuple((g(j), s) for j, s in item_words[i])
        else:
            mapping[i] = ((g(i), 1),)
    morphism = Morphism.from_dict(mapping, omega.rho, rho)
    bmap = (0,) + tuple(f(b) for b in range(1, omega.rho + 2))
    return target, morphism, new_solution, new_lengths, bmap


def et4_remove_lone(omega, base, solution=None, lengths=None):
    """Remove a lone base with its dual and the items under it."""
    lam = _base_arg(omega, base)
    dual = omega.dual(lam)
    for b in omega.bases:
        if b.id != lam.id and b.left < lam.right and lam.left < b.right:
            raise TransformError(f"{lam.id} intersects {b.id}")
    image = {}
    for p in range(lam.left, lam.right + 1):
        q = _tie_image(omega, lam, p)
        if q is None:
            raise TransformError(f"boundary {p} on {lam.id} is not tied")
        image[p] = q
    words = {i: span(image[i], image[i + 1]) for i in lam.items}
    drop = {lam.id, dual.id}
    bases = [b for b in omega.bases if b.id not in drop]
    conns = [c for c in omega.connections if c.base not in drop]
    target, morphism, sol, lens, bmap = _remove_items(
        omega, lam.left, lam.right, bases, conns, words, solution, _lengths(omega, solution, lengths)
    )
    note = f"ET4 remove lone {lam.id} over [{lam.left}, {lam.right}]"
    return _result(omega, target, morphism, note, sol, lens, bmap)


def locate(omega, base, p, lengths):
    """Image of boundary p of ``base`` on its dual: ('boundary', q) or ('item', q, offset)."""
    lam = _base_arg(omega, base)
    dual = omega.dual(lam)
    if lengths is None:
        raise NeedsLengths(f"locating {p} on {dual.id} needs item lengths")
    x = _coords(lengths, omega.rank)
    d = abs(x[p] - x[lam.alpha])
    target = x[dual.alpha] + d if dual.epsilon > 0 else x[dual.alpha] - d
    for q in range(dual.left, dual.right + 1):
        if x[q] == target:
            return ("boundary", q)
    for q in range(dual.left, dual.right):
        if x[q] < target < x[q + 1]:
            return ("item", q, target - x[q])
    raise TransformError(f"image of {p} falls outside {dual.id}")


def et5_introduce_boundary(omega, base, p, solution=None, lengths=None):
    """Tie boundary p of ``base`` to its dual, splitting an item if needed."""
    lam = _base_arg(omega, base)
    if not lam.strictly_inside(p):
        raise TransformError(f"boundary {p} is not internal to {lam.id}")
    if omega.is_tied(p, lam.id):
        raise TransformError(f"boundary {p} is already {lam.id}-tied")
    lens = _lengths(omega, solution, lengths)
    where = locate(omega, lam, p, lens)
    dual = omega.dual(lam)
    if where[0] == "boundary":
        q = where[1]
        conns = omega.connections + (Connection(p, lam.id, q), Connection(q, dual.id, p))
        target = omega.with_(connections=conns)
        note = f"ET5(a) tie {p} on {lam.id} to {q}"
        return _result(omega, target, Morphism.identity(omega.rho), note, solution, lens, _identity_map(omega.rho))
    _, q, offset = where

    def f(b):
        return b if b <= q else b + 1

    rho = omega.rho + 1
    new_lengths = lens[: q - 1] + (offset, lens[q - 1] - offset) + lens[q:]
    new_solution = None
    if solution is not None:
        head, tail = split_at(solution[q], offset)
        new_solution = Solution(solution.words[: q - 1] + (head, tail) + solution.words[q:])
    target = _rebuild(omega, f, rho, heights=_heights_for(new_lengths, None))
    target = target.with_(connections=target.connections + (Connection(f(p), lam.id, q + 1), Connection(q + 1, dual.id, f(p))))
    mapping = {i: ((f(i) if i < q else i + 1, 1),) for i in range(1, omega.rho + 1) if i != q}
    mapping[q] = ((q, 1), (q + 1, 1))
    morphism = Morphism.from_dict(mapping, omega.rho, rho)
    note = f"ET5(b) tie {p} on {lam.id}: new boundary {q + 1} splits h{q}"
    bmap = (0,) + tuple(f(b) for b in range(1, omega.rho + 2))
    return _result(omega, target, morphism, note, new_solution, new_lengths, bmap)


# ---------------------------------------------------------------------------
# composites


class _Run:
    """Thread an equation, a solution and a morphism through several steps."""

    def __init__(self, omega, solution, lengths):
        self.omega = omega
        self.solution = solution
        self.lengths = _lengths(omega, solution, lengths)
        self.morphism = Morphism.identity(omega.rho)
        self.bmap = list(range(omega.rho + 2))
        self.steps = []

    def apply(self, fn, *args):
        r = fn(self.omega, *args, solution=self.solution, lengths=self.lengths)
        self.absorb(r)
        return r

    def absorb(self, r):
        self.omega = r.target
        self.morphism = self.morphism.then(r.morphism)
        self.solution = r.solution
        self.lengths = r.lengths
        self.bmap = [r.boundary_map[b] if b else 0 for b in self.bmap]
        self.steps.extend(r.steps)

    def tie(self, base_id, p):
        """Make p tied on the base (ET5 unless it is already tied or an end)."""
        b = self.omega.base(base_id)
        if b.strictly_inside(p) and not self.omega.is_tied(p, base_id):
            self.apply(et5_introduce_boundary, base_id, p)

    def cut(self, base_id, p):
        """Tie then cut; returns the ids of the two pieces (alpha side first)."""
        self.tie(base_id, p)
        q = self.omega.tie(p, base_id)
        return self.apply(et1_cut, Connection(p, base_id, q)).pieces

    def result(self, note):
        return TransformResult(self.omega, self.morphism, note, self.solution, self.lengths, tuple(self.bmap),
                               self.steps)


def _split_sections_at(omega, points):
    out = []
    for s in omega.sections:
        cuts = sorted({s.start, s.end} | {p for p in points if s.start < p < s.end})
        out.extend(Section(a, b, s.active) for a, b in zip(cuts, cuts[1:]))
    return omega.with_(sections=tuple(out))


def d1_close_section(omega, start, end, solution=None, lengths=None):
    """Cut every base through the end points so [start, end] becomes a closed section."""
    run = _Run(omega, solution, lengths)
    for which in ("start", "end"):
        while True:
            pos = run.bmap[start] if which == "start" else run.bmap[end]
            crossing = [b for b in run.omega.bases if b.strictly_inside(pos)]
            if not crossing:
                break
            run.cut(sorted(crossing, key=lambda b: b.id)[0].id, pos)
    a, b = run.bmap[start], run.bmap[end]
    run.omega = ensure_valid(_split_sections_at(run.omega, (a, b)))
    return run.result(f"D1 close [{start}, {end}] -> [{a}, {b}]")


def _reorder_sections(omega, order, flags=None, solution=None, lengths=None):
    """Lay out closed sections in a new order (a permutation of indices)."""
    secs = omega.sections
    new_start = {}
    pos = 1
    for k in order:
        new_start[k] = pos
        pos += secs[k].end - secs[k].start

    def sec_index(item):
        for k, s in enumerate(secs):
            if s.start <= item < s.end:
                return k
        raise KeyError(item)

    def move(k, b):
        return b - secs[k].start + new_start[k]

    def item(i):
        k = sec_index(i)
        return move(k, i)

    bases = []
    home = {}
    for b in omega.bases:
        k = sec_index(b.left)
        home[b.id] = k
        bases.append(Base(b.id, b.epsilon, move(k, b.alpha), move(k, b.beta), b.dual))
    conns = [Connection(move(home[c.base], c.p), c.base, move(home[omega.base(c.base).dual], c.q))
             for c in omega.connections]
    flags = flags or {}
    sections = sorted(
        (Section(new_start[k], new_start[k] + secs[k].end - secs[k].start, flags.get(k, secs[k].active))
         for k in order),
        key=lambda s: s.start,
    )
    perm = {i: item(i) for i in range(1, omega.rho + 1)}
    inv = {v: k for k, v in perm.items()}
    heights = {perm[i]: h for i, h in omega.heights().items()}
    target = GenEq(omega.rho, bases, conns, sections, heights, omega.rank)
    lens = _lengths(omega, solution, lengths)
    new_lengths = tuple(lens[inv[j] - 1] for j in range(1, omega.rho + 1)) if lens is not None else None
    new_solution = None
    if solution is not None:
        new_solution = Solution(tuple(solution[inv[j]] for j in range(1, omega.rho + 1)))
    morphism = Morphism.from_dict({i: ((perm[i], 1),) for i in perm}, omega.rho, omega.rho)

    def bmap(b):
        for k, s in enumerate(secs):
            if s.start <= b < s.end:
                return move(k, b)
        return move(len(secs) - 1, b)

    return ensure_valid(target), morphism, new_solution, new_lengths, (0,) + tuple(bmap(b) for b in range(1, omega.rho + 2))


def d2_transport_section(omega, section, position, solution=None, lengths=None):
    """Move the closed section with index ``section`` to index ``position``."""
    n = len(omega.sections)
    if not 0 <= section < n or not 0 <= position < n:
        raise TransformError("section index out of range")
    order = [k for k in range(n) if k != section]
    order.insert(position, section)
    target, morphism, sol, lens, bmap = _reorder_sections(omega, order, solution=solution, lengths=lengths)
    s = omega.sections[section]
    note = f"D2 transport [{s.start}, {s.end}] to position {position}"
    return TransformResult(target, morphism, note, sol, lens, bmap, [note])


def d3_move_free(omega, item, solution=None, lengths=None):
    """Move a free item of an active section to the end as a non-active section."""
    if omega.gamma(item) != 0:
        raise TransformError(f"h{item} is not free")
    if not omega.section_of(item).active:
        raise TransformError(f"h{item} is not in an active section")
    run = _Run(omega, solution, lengths)
    r = d1_close_section(omega, item, item + 1, solution=solution, lengths=lengths)
    run.absorb(r)
    secs = run.omega.sections
    k = next(k for k, s in enumerate(secs) if s.start == run.bmap[item] and s.end == run.bmap[item + 1])
    order = [j for j in range(len(secs)) if j != k] + [k]
    target, morphism, sol, lens, bmap = _reorder_sections(run.omega, order, {k: False}, run.solution, run.lengths)
    note = f"D3 move free h{item} to the end"
    run.absorb(TransformResult(target, morphism, note, sol, lens, bmap, [note]))
    return run.result(note)


def is_complete(omega, b):
    """Both ends closed and every boundary strictly inside open."""
    if omega.is_open(b.left) or omega.is_open(b.right):
        return False
    return all(omega.is_open(p) for p in range(b.left + 1, b.right))


def d4_delete_complete(omega, base, solution=None, lengths=None):
    """Transfer everything off a complete base, then remove it with its section."""
    mu = _base_arg(omega, base)
    if not is_complete(omega, mu):
        raise TransformError(f"{mu.id} is not complete")
    if not omega.section_of(mu.left).active:
        raise TransformError(f"{mu.id} is not active")
    dual = omega.dual(mu)
    if dual.left < mu.right and mu.left < dual.right:
        raise TransformError(f"{mu.id} overlaps its dual")
    run = _Run(omega, solution, lengths)
    movers = [b.id for b in omega.bases if b.id != mu.id and mu.left <= b.left and b.right <= mu.right]
    for p in range(mu.left + 1, mu.right):
        run.tie(mu.id, run.bmap[p])
    for bid in movers:
        run.apply(et2_transfer, mu.id, bid)
    run.apply(et4_remove_lone, mu.id)
    return run.result(f"D4 delete complete {mu.id}")


# ---------------------------------------------------------------------------
# D5: kernel


def cut_all_connections(omega, solution=None, lengths=None):
    run = _Run(omega, solution, lengths)
    while run.omega.connections:
        run.apply(et1_cut, run.omega.connections[0])
    return run.result("cut along all boundary connections")


def eliminable(omega):
    """Active bases that may be eliminated, with the reason ('a' or 'b')."""
    if omega.connections:
        raise TransformError("eliminability is defined for equations without connections")
    gam = omega.gammas()
    out = []
    for mu in omega.active_bases():
        if any(gam[i] == 1 for i in mu.items):
            out.append((mu.id, "a"))
            continue
        for p in (mu.alpha, mu.beta):
            if p in (1, omega.rho + 1):
                continue
            others = [b for b in omega.bases if b.id != mu.id and b.touches(p)]
            if all(b.id == mu.dual and b.strictly_inside(p) for b in others):
                out.append((mu.id, "b"))
                break
    return out


def _drop_pair(omega, bid):
    b = omega.base(bid)
    drop = {b.id, b.dual}
    return omega.with_(bases=tuple(x for x in omega.bases if x.id not in drop))


def drop_free_items(omega):
    """The equation with every free item deleted (boundaries collapse)."""
    gam = omega.gammas()
    keep = [i for i in range(1, omega.rho + 1) if gam[i] > 0]
    index = {}
    pos = 1
    for b in range(1, omega.rho + 2):
        index[b] = pos
        if b <= omega.rho and gam[b] > 0:
            pos += 1
    heights = {index[i]: h for i, h in omega.heights().items() if gam[i] > 0}
    return _rebuild(omega, lambda b: index[b], len(keep), heights=heights), keep


@dataclass
class KernelResult:
    kernel: GenEq  # all items kept, eliminable bases removed
    reduced: GenEq  # kernel with free items deleted
    free_rank: int
    trace: list
    kept_items: list


def d5_kernel(omega, choose=None):
    """Remove eliminable bases until none is left.

    ``choose`` picks one of the currently eliminable (id, reason) pairs;
    the default takes the smallest id.  free_rank = K with
    G_omega = G_reduced * F(K).
    """
    current = cut_all_connections(omega).target
    trace = []
    while True:
        cands = eliminable(current)
        if not cands:
            break
        bid, why = choose(cands) if choose else min(cands)
        pair = tuple(sorted((bid, current.base(bid).dual)))
        trace.append((pair, why))
        current = _drop_pair(current, bid)
    reduced, kept = drop_free_items(current)
    free_rank = (current.rho - len(kept)) - len(trace)
    return KernelResult(current, reduced, free_rank, trace, kept)


def kernel_all_orders(omega, limit=100000):
    """Every kernel reachable by some elimination order (as canonical keys)."""
    start = cut_all_connections(omega).target
    seen = set()
    results = set()
    stack = [start]
    while stack:
        cur = stack.pop()
        key = canonical_key(cur)
        if key in seen:
            continue
        seen.add(key)
        if len(seen) > limit:
            raise TransformError("order enumeration limit reached")
        cands = eliminable(cur)
        if not cands:
            results.add(key)
        for bid, _ in cands:
            stack.append(_drop_pair(cur, bid))
    return results


# ---------------------------------------------------------------------------
# D6, D7: linear elimination and Tietze cleaning


def _section_max_height(omega, section):
    h = omega.heights()
    levels = [h.get(i, omega.rank) for i in section.items]
    return max(levels) if levels else 0


def comparable(omega, item):
    s = omega.section_of(item)
    return omega.heights().get(item, omega.rank) == _section_max_height(omega, s)


def linear_items(omega):
    gam = omega.gammas()
    return [i for i in omega.active_items() if gam[i] == 1 and comparable(omega, i)]


def _covering(omega, item):
    return [b for b in omega.bases if b.left <= item < b.right]


def _closed_pair_section(omega):
    """Closed active section spanned by exactly two unmatched bases, both spanning it."""
    for s in omega.sections:
        if not s.active:
            continue
        inside = omega.bases_in(s)
        if len(inside) != 2:
            continue
        m1, m2 = inside
        if m1.dual == m2.id:
            continue
        if all(b.left == s.start and b.right == s.end for b in inside):
            if all(omega.is_open(p) for p in range(s.start + 1, s.end)):
                return s, m1, m2
    return None


def d6_linear_step(omega, solution=None, lengths=None):
    """One step of linear elimination (four-case dispatch)."""
    items = linear_items(omega)
    if not items:
        raise NotApplicable("no linear item")
    open_ = omega.is_open
    both_closed = [i for i in items if not open_(i) and not open_(i + 1)]
    if both_closed:
        i = both_closed[0]
        mu = _covering(omega, i)[0]
        r = et4_remove_lone(omega, mu.id, solution=solution, lengths=lengths)
        r.note = f"D6 case 1 on h{i}: " + r.note
        return r
    one_open = [i for i in items if open_(i) != open_(i + 1)]
    if one_open:
        i = one_open[0]
        mu = _covering(omega, i)[0]
        run = _Run(omega, solution, lengths)
        p = i + 1 if open_(i + 1) else i
        first, second = run.cut(mu.id, p)
        piece = next(x for x in (first, second) if run.omega.base(x).left == run.bmap[i])
        run.apply(et4_remove_lone, piece)
        return run.result(f"D6 case 2 on h{i}")
    i = items[0]
    found = _closed_pair_section(omega)
    if found is not None:
        s, m1, m2 = found
        closed = d1_close_section(omega, i, i + 1, solution=solution, lengths=lengths)
        ker = d5_kernel(closed.target).kernel
        survivors = set(ker.base_ids)
        pieces = [b for b in closed.target.base_ids if b == m1.id or b == m2.id
                  or b.startswith(m1.id + ".") or b.startswith(m2.id + ".")]
        if not any(b in survivors for b in pieces):
            r = d4_delete_complete(omega, m1.id, solution=solution, lengths=lengths)
            r.note = f"D6 case 3 via [{s.start}, {s.end}]: " + r.note
            return r
    run = _Run(omega, solution, lengths)
    run.absorb(d1_close_section(omega, i, i + 1, solution=solution, lengths=lengths))
    a = run.bmap[i]
    piece = next(b for b in run.omega.bases if b.left == a and b.right == run.bmap[i + 1])
    run.apply(et4_remove_lone, piece.id)
    return run.result(f"D6 case 4 on h{i}")


def linear_elimination(omega, solution=None, lengths=None, max_steps=1000):
    """Apply D6 until it no longer applies, or report a recurring equation."""
    run = _Run(omega, solution, lengths)
    seen = {canonical_key(omega): 0}
    keys = [canonical_key(omega)]
    for step in range(1, max_steps + 1):
        try:
            r = d6_linear_step(run.omega, solution=run.solution, lengths=run.lengths)
        except NotApplicable:
            return run.result("linear elimination"), None
        run.absorb(r)
        key = canonical_key(run.omega)
        if key in seen:
            return run.result("linear elimination"), LoopDetected(step - seen[key], seen[key], keys)
        seen[key] = step
        keys.append(key)
    raise TransformError("linear elimination step budget exhausted")


def _kernel_with_free_part(omega, solution):
    k = d5_kernel(omega)
    reduced = k.reduced
    free = k.free_rank
    sections = list(reduced.sections)
    rho = reduced.rho + free
    if free:
        sections.append(Section(reduced.rho + 1, rho + 1, False))
    heights = dict(reduced.heights())
    target = GenEq(rho, reduced.bases, (), sections, heights, omega.rank)
    sol = None
    if solution is not None:
        kept = [solution[i] for i in k.kept_items]
        spare = [solution[i] for i in range(1, omega.rho + 1) if i not in set(k.kept_items)]
        sol = Solution(tuple(kept + spare[:free]))
        target = target.with_(item_heights={i: height(w.length) for i, w in enumerate(sol.words, 1)})
    return ensure_valid(target), sol


def d7_tietze_cleaning(omega, solution=None, lengths=None, max_steps=1000):
    """Linear elimination, matched pairs, complete bases, free items."""
    run = _Run(omega, solution, lengths)
    lin, loop = linear_elimination(omega, solution, lengths, max_steps)
    run.absorb(lin)
    if loop is not None:
        target, sol = _kernel_with_free_part(run.omega, run.solution)
        note = f"D7 loop of period {loop.period}: replaced by kernel and free part"
        return TransformResult(target, None, note, sol, sol.lengths() if sol else None, (), run.steps + [note],
                               loop=loop)
    while True:
        matched = [b for b in run.omega.bases if is_matched(run.omega, b)]
        if not matched:
            break
        run.apply(et3_remove_matched, matched[0].id)
    while True:
        complete = [b for b in run.omega.active_bases() if is_complete(run.omega, b)
                    and not _overlaps_dual(run.omega, b)]
        if not complete:
            break
        run.apply(d4_delete_complete, sorted(complete, key=lambda b: b.id)[0].id)
    while True:
        gam = run.omega.gammas()
        free = [i for i in run.omega.active_items() if gam[i] == 0]
        if not free:
            break
        run.apply(d3_move_free, free[0])
    return run.result("D7 Tietze cleaning")


def _overlaps_dual(omega, b):
    d = omega.dual(b)
    return d.left < b.right and b.left < d.right


# ---------------------------------------------------------------------------
# D8: entire transformation


def carrier(omega):
    """Leading base of maximal right end in the first active section (lowest id on ties)."""
    active = [s for s in omega.sections if s.active]
    if not active:
        raise NotApplicable("no active section")
    s = active[0]
    leading = [b for b in omega.bases_in(s) if b.left == s.start]
    if not leading:
        raise NotApplicable("no leading base")
    return min(leading, key=lambda b: (-b.right, b.id)), s


def transfer_bases(omega, mu, section):
    return [b for b in omega.bases_in(section) if b.id not in (mu.id, mu.dual) and b.right <= mu.right]


def d8_entire_step(omega, solution=None, lengths=None, tie_limit=10000):
    mu, s = carrier(omega)
    gam = omega.gammas()
    top = _section_max_height(omega, s)
    h = omega.heights()
    for i in s.items:
        if h.get(i, omega.rank) == top and gam[i] < 2:
            raise NotApplicable(f"h{i} has gamma {gam[i]} < 2")
    run = _Run(omega, solution, lengths)
    movers = [b.id for b in transfer_bases(omega, mu, s)]
    ties = 0
    for bid in movers:
        while True:
            cur_mu = run.omega.base(mu.id)
            b = run.omega.base(bid)
            todo = [p for p in range(b.left, b.right + 1)
                    if cur_mu.strictly_inside(p) and not run.omega.is_tied(p, mu.id)]
            if not todo:
                break
            ties += 1
            if ties > tie_limit:
                raise TransformError("tie budget exhausted")
            run.apply(et5_introduce_boundary, mu.id, todo[0])
        run.apply(et2_transfer, mu.id, bid)
    cur = run.omega.base(mu.id)
    gam = run.omega.gammas()
    start = run.bmap[s.start]
    j = start
    while j < cur.right and gam[j] == 1:
        j += 1
    if j == start:
        raise TransformError("first item is covered twice after the transfers")
    piece = mu.id
    if j < cur.right:
        first, second = run.cut(mu.id, j)
        piece = first if run.omega.base(first).left == start else second
    while True:
        b = run.omega.base(piece)
        todo = [p for p in range(b.left + 1, b.right) if not run.omega.is_tied(p, piece)]
        if not todo:
            break
        run.apply(et5_introduce_boundary, piece, todo[0])
    run.apply(et4_remove_lone, piece)
    out = run.result(f"D8 entire step, carrier {mu.id}")
    rest = None if piece == mu.id else (second if piece == first else first)
    out.info = {"carrier": mu.id, "transfer": movers, "carrier_rest": rest, "section": (s.start, s.end)}
    return out


XFORMS = {
    "et1": et1_cut,
    "et2": et2_transfer,
    "et3": et3_remove_matched,
    "et4": et4_remove_lone,
    "et5": et5_introduce_boundary,
    "d1": d1_close_section,
    "d2": d2_transport_section,
    "d3": d3_move_free,
    "d4": d4_delete_complete,
    "d6": d6_linear_step,
    "d7": d7_tietze_cleaning,
    "d8": d8_entire_step,
}
