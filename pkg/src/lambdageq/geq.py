"""Combinatorial generalized equations.

Items h_1..h_rho sit between boundaries 1..rho+1.  A base with sign +1
spans items alpha..beta-1 with alpha < beta; a base with sign -1 has
alpha > beta and spans items beta..alpha-1, read from right to left.
"""

from dataclasses import dataclass, field, replace
import json

from .lattice import invariant_factors
from .ordered import height
from .words import LambdaWord, concat, invert, mult, parse_word


@dataclass(frozen=True)
class Base:
    id: str
    epsilon: int
    alpha: int
    beta: int
    dual: str

    @property
    def left(self):
        return min(self.alpha, self.beta)

    @property
    def right(self):
        return max(self.alpha, self.beta)

    @property
    def items(self):
        return range(self.left, self.right)

    def strictly_inside(self, p):
        return self.left < p < self.right

    def touches(self, p):
        return self.left <= p <= self.right


@dataclass(frozen=True, order=True)
class Connection:
    p: int
    base: str
    q: int


@dataclass(frozen=True)
class Section:
    start: int
    end: int
    active: bool = True

    @property
    def items(self):
        return range(self.start, self.end)


@dataclass(frozen=True)
class GenEq:
    rho: int
    bases: tuple = ()
    connections: tuple = ()
    sections: tuple = ()
    item_heights: tuple = ()  # sorted (item, level) pairs
    rank: int = 1

    def __post_init__(self):
        object.__setattr__(self, "bases", tuple(self.bases))
        object.__setattr__(self, "connections", tuple(sorted(set(self.connections))))
        if not self.sections:
            default = (Section(1, self.rho + 1, True),) if self.rho else ()
            object.__setattr__(self, "sections", default)
        else:
            object.__setattr__(self, "sections", tuple(self.sections))
        heights = self.item_heights
        if isinstance(heights, dict):
            heights = heights.items()
        object.__setattr__(self, "item_heights", tuple(sorted(heights)))

    # lookups -------------------------------------------------------------

    def base(self, bid):
        for b in self.bases:
            if b.id == bid:
                return b
        raise KeyError(bid)

    def dual(self, b):
        if isinstance(b, str):
            b = self.base(b)
        return self.base(b.dual)

    @property
    def base_ids(self):
        return [b.id for b in self.bases]

    def pairs(self):
        """Each dual pair once, in order of first appearance."""
        seen = set()
        out = []
        for b in self.bases:
            if b.id in seen:
                continue
            seen.update((b.id, b.dual))
            out.append((b, self.base(b.dual)))
        return out

    def heights(self):
        return dict(self.item_heights)

    def gamma(self, item):
        return sum(1 for b in self.bases if b.left <= item < b.right)

    def gammas(self):
        g = {i: 0 for i in range(1, self.rho + 1)}
        for b in self.bases:
            for i in b.items:
                g[i] += 1
        return g

    def is_open(self, p):
        return any(b.strictly_inside(p) for b in self.bases)

    def section_of(self, item):
        for s in self.sections:
            if s.start <= item < s.end:
                return s
        raise KeyError(item)

    def section_of_base(self, b):
        return self.section_of(b.left)

    def bases_in(self, section):
        return [b for b in self.bases if section.start <= b.left and b.right <= section.end]

    def active_items(self):
        return [i for s in self.sections if s.active for i in s.items]

    def active_bases(self):
        return [b for s in self.sections if s.active for b in self.bases_in(s)]

    def is_tied(self, p, bid):
        return any(c.p == p and c.base == bid for c in self.connections)

    def tie(self, p, bid):
        for c in self.connections:
            if c.p == p and c.base == bid:
                return c.q
        return None

    def with_(self, **kw):
        return replace(self, **kw)


# ---------------------------------------------------------------------------
# validation


def validate(omega):
    """Return the list of violated invariants (empty when well formed)."""
    errs = []
    ids = [b.id for b in omega.bases]
    if len(set(ids)) != len(ids):
        errs.append("duplicate base ids")
    by_id = {b.id: b for b in omega.bases}
    for b in omega.bases:
        if b.epsilon not in (1, -1):
            errs.append(f"sign: base {b.id} has epsilon {b.epsilon}")
        if (b.alpha < b.beta) != (b.epsilon == 1) or b.alpha == b.beta:
            errs.append(f"orientation: base {b.id} has alpha={b.alpha}, beta={b.beta}, epsilon={b.epsilon}")
        for x in (b.alpha, b.beta):
            if not 1 <= x <= omega.rho + 1:
                errs.append(f"range: base {b.id} endpoint {x} outside [1, {omega.rho + 1}]")
        d = by_id.get(b.dual)
        if d is None:
            errs.append(f"dual: base {b.id} has missing dual {b.dual}")
        elif d.id == b.id:
            errs.append(f"dual: base {b.id} is its own dual")
        elif d.dual != b.id:
            errs.append(f"dual: {b.id} -> {d.id} -> {d.dual} is not an involution")
    conns = set(omega.connections)
    for c in omega.connections:
        b = by_id.get(c.base)
        if b is None:
            errs.append(f"connection: {c} names unknown base")
            continue
        if not b.strictly_inside(c.p):
            errs.append(f"connection: boundary {c.p} not internal to base {b.id}")
        d = by_id.get(b.dual)
        if d is not None:
            if not d.strictly_inside(c.q):
                errs.append(f"connection: boundary {c.q} not internal to dual {d.id}")
            if Connection(c.q, d.id, c.p) not in conns:
                errs.append(f"mirror: connection ({c.p}, {c.base}, {c.q}) lacks ({c.q}, {d.id}, {c.p})")
    pos = 1
    for s in omega.sections:
        if s.start != pos or s.end <= s.start:
            errs.append(f"sections: [{s.start}, {s.end}] does not continue at {pos}")
        pos = s.end
        for x in (s.start, s.end):
            if omega.is_open(x):
                errs.append(f"sections: boundary {x} of [{s.start}, {s.end}] is open")
    if pos != omega.rho + 1:
        errs.append(f"sections: cover ends at {pos}, expected {omega.rho + 1}")
    for i, h in omega.item_heights:
        if not 1 <= i <= omega.rho:
            errs.append(f"height: unknown item h{i}")
        if not 0 <= h <= omega.rank:
            errs.append(f"height: h{i} level {h} outside [0, {omega.rank}]")
    return errs


class InvalidEquation(ValueError):
    pass


def ensure_valid(omega):
    errs = validate(omega)
    if errs:
        raise InvalidEquation("; ".join(errs))
    return omega


# ---------------------------------------------------------------------------
# derived equations and presentations


def span(a, b):
    """Signed items read from boundary a to boundary b."""
    if a <= b:
        return tuple((i, 1) for i in range(a, b))
    return tuple((i, -1) for i in range(a - 1, b - 1, -1))


def invert_signed(word):
    return tuple((i, -s) for i, s in reversed(word))


def base_word(b):
    """The base read from alpha to beta: (h_left .. h_right-1)^epsilon."""
    return span(b.alpha, b.beta)


@dataclass(frozen=True)
class DerivedEquation:
    kind: str  # "basic" or "boundary"
    left: tuple
    right: tuple
    source: tuple = ()

    def relator(self):
        return self.left + invert_signed(self.right)

    def __str__(self):
        return f"{format_signed(self.left)} = {format_signed(self.right)}"


def format_signed(word):
    if not word:
        return "1"
    return " ".join(f"h{i}" if s > 0 else f"h{i}^-1" for i, s in word)


def derive(omega):
    out = []
    for b, d in omega.pairs():
        out.append(DerivedEquation("basic", base_word(b), base_word(d), (b.id, d.id)))
    seen = set()
    for c in omega.connections:
        if c in seen:
            continue
        b = omega.base(c.base)
        d = omega.base(b.dual)
        seen.add(c)
        seen.add(Connection(c.q, d.id, c.p))
        out.append(DerivedEquation("boundary", span(b.alpha, c.p), span(d.alpha, c.q), (c.p, b.id, c.q)))
    return out


def reduce_signed(word):
    out = []
    for x in word:
        if out and out[-1][0] == x[0] and out[-1][1] == -x[1]:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


@dataclass(frozen=True)
class Presentation:
    generators: tuple
    relators: tuple

    def relation_matrix(self):
        index = {g: k for k, g in enumerate(self.generators)}
        rows = []
        for r in self.relators:
            row = [0] * len(self.generators)
            for g, s in r:
                row[index[g]] += s
            rows.append(row)
        return rows

    def abelianization(self):
        """(free rank, torsion coefficients) of the abelianized group."""
        rows = [r for r in self.relation_matrix() if any(r)]
        factors = invariant_factors(rows) if rows else []
        free = len(self.generators) - len(factors)
        return free, [f for f in factors if f > 1]

    def __str__(self):
        gens = ", ".join(f"h{g}" for g in self.generators)
        rels = ", ".join(format_signed(r) for r in self.relators)
        return f"< {gens} | {rels} >"


def presentation(omega, reduce=False):
    rels = []
    for eq in derive(omega):
        r = eq.relator()
        rels.append(reduce_signed(r) if reduce else r)
    return Presentation(tuple(range(1, omega.rho + 1)), tuple(rels))


# ---------------------------------------------------------------------------
# solutions


@dataclass(frozen=True)
class Solution:
    """Assignment h_i -> words[i-1]."""

    words: tuple

    def __getitem__(self, i):
        return self.words[i - 1]

    def __len__(self):
        return len(self.words)

    @property
    def rank(self):
        return self.words[0].rank

    def lengths(self):
        return tuple(w.length for w in self.words)


def evaluate(word, solution, reduce=False):
    """Substitute; concatenate (default) or multiply out with ``reduce``."""
    out = LambdaWord.empty(solution.rank)
    for i, s in word:
        w = solution[i] if s > 0 else invert(solution[i])
        out = mult(out, w) if reduce else concat(out, w)
    return out


@dataclass(frozen=True)
class Violation:
    equation: int
    side: str
    reason: str

    def __str__(self):
        return f"equation {self.equation}: {self.side} {self.reason}"


def verify_solution(omega, solution):
    """None when ``solution`` solves ``omega``; else the first Violation."""
    if len(solution) != omega.rho:
        return Violation(-1, "assignment", f"has {len(solution)} words for {omega.rho} items")
    for i, w in enumerate(solution.words, 1):
        if not w.blocks:
            return Violation(-1, f"h{i}", "is empty")
        if not w.is_reduced():
            return Violation(-1, f"h{i}", "is not reduced")
    for k, eq in enumerate(derive(omega)):
        left = evaluate(eq.left, solution)
        right = evaluate(eq.right, solution)
        if not left.is_reduced():
            return Violation(k, "left", f"is not reduced ({eq})")
        if not right.is_reduced():
            return Violation(k, "right", f"is not reduced ({eq})")
        if left != right:
            return Violation(k, "sides", f"differ ({eq})")
    return None


def cancellation_table(solution):
    """Pairs ((i, e), (j, s)) with cancellation in u_i^e * u_j^s.

    The trivial pairs u_i^e * u_i^-e are left out.
    """
    ends = {}
    for i, w in enumerate(solution.words, 1):
        ends[i, 1] = (w.first_letter(), w.last_letter())
        ends[i, -1] = (w.last_letter().inverse(), w.first_letter().inverse())
    table = set()
    for (i, e), (_, last) in ends.items():
        for (j, s), (first, _) in ends.items():
            if i == j and s == -e:
                continue
            if last == first.inverse():
                table.add(((i, e), (j, s)))
    return frozenset(table)


def consistent(u_plus, u):
    return cancellation_table(u_plus) <= cancellation_table(u)


# ---------------------------------------------------------------------------
# complexity


@dataclass(frozen=True)
class Complexity:
    tau: int
    rho_active: int
    n_active: int
    per_section: tuple
    gamma: dict = field(default_factory=dict, compare=False)

    @property
    def free_items(self):
        return [i for i, g in self.gamma.items() if g == 0]


def complexity(omega):
    per = []
    tau = 0
    rho_a = 0
    n_a = 0
    for s in omega.sections:
        n = len(omega.bases_in(s))
        per.append((s.start, s.end, s.active, n))
        if s.active:
            tau += max(0, n - 2)
            rho_a += s.end - s.start
            n_a += n
    return Complexity(tau, rho_a, n_a, tuple(per), omega.gammas())


def tau(omega):
    return complexity(omega).tau


# ---------------------------------------------------------------------------
# homogeneous length constraints


class LinearSystem:
    """Homogeneous integer equations sum_i c_i |h_i| = 0 over item lengths."""

    def __init__(self, rho, rows=(), notes=()):
        self.rho = rho
        self.rows = [tuple(r) for r in rows]
        self.notes = list(notes) or [""] * len(self.rows)

    def add(self, row, note=""):
        row = tuple(row)
        if len(row) != self.rho:
            raise ValueError("row width does not match the item count")
        if any(row) and row not in self.rows and tuple(-x for x in row) not in self.rows:
            self.rows.append(row)
            self.notes.append(note)

    def add_equal(self, left, right, note=""):
        """|word left| = |word right| for signed item words, as a row."""
        row = [0] * self.rho
        for i, _ in left:
            row[i - 1] += 1
        for i, _ in right:
            row[i - 1] -= 1
        self.add(row, note)

    def rewrite(self, morphism):
        """Same constraints in the target items of an item morphism."""
        out = LinearSystem(morphism.target_rho)
        for row, note in zip(self.rows, self.notes):
            new = [0] * morphism.target_rho
            for i, c in enumerate(row, 1):
                if c:
                    for j, _ in morphism[i]:
                        new[j - 1] += c
            out.add(new, note)
        return out

    def residuals(self, lengths):
        out = []
        for row in self.rows:
            total = None
            for c, v in zip(row, lengths):
                term = v * c
                total = term if total is None else total + term
            out.append(total)
        return out

    def satisfied_by(self, lengths):
        return all(not any(r.coords) for r in self.residuals(lengths)) if self.rows else True

    def __len__(self):
        return len(self.rows)


# ---------------------------------------------------------------------------
# canonical form (for loop detection)


def canonical_key(omega):
    """Structure up to renaming of bases.

    Each base is keyed by its own span, its dual's span and its connections,
    so bases that share a span are told apart without looking at ids.
    """
    ties = {}
    for c in omega.connections:
        ties.setdefault(c.base, []).append((c.p, c.q))
    rows = []
    for b in omega.bases:
        d = omega.base(b.dual)
        rows.append(((b.alpha, b.beta, b.epsilon), (d.alpha, d.beta, d.epsilon), tuple(sorted(ties.get(b.id, ())))))
    secs = tuple((s.start, s.end, s.active) for s in omega.sections)
    return (omega.rho, tuple(sorted(rows)), secs)


# ---------------------------------------------------------------------------
# text and JSON formats


def serialize(omega):
    lines = [f"geq rank={omega.rank} items={omega.rho}"]
    for b in omega.bases:
        sign = "+1" if b.epsilon > 0 else "-1"
        lines.append(f"base {b.id} {b.alpha} {b.beta} {sign} dual {b.dual}")
    for c in omega.connections:
        lines.append(f"conn {c.p} {c.base} {c.q}")
    for s in omega.sections:
        lines.append(f"section {s.start} {s.end} {'active' if s.active else 'inactive'}")
    for i, h in omega.item_heights:
        lines.append(f"height h{i} [{h}]")
    return "\n".join(lines) + "\n"


def parse(text, rank=None):
    omega_rank = rank or 1
    rho = None
    bases, conns, secs, heights = [], [], [], {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "geq":
            for tok in rest:
                key, _, val = tok.partition("=")
                if key == "rank":
                    omega_rank = int(val)
                elif key == "items":
                    rho = int(val)
                else:
                    raise ValueError(f"unknown header field {key!r}")
        elif head == "base":
            if len(rest) != 6 or rest[4] != "dual":
                raise ValueError(f"bad base line: {raw!r}")
            bid, a, b, e, _, dual = rest
            bases.append(Base(bid, int(e), int(a), int(b), dual))
        elif head == "conn":
            p, bid, q = rest
            conns.append(Connection(int(p), bid, int(q)))
        elif head == "section":
            start, end, flag = rest
            if flag not in ("active", "inactive"):
                raise ValueError(f"bad section flag {flag!r}")
            secs.append(Section(int(start), int(end), flag == "active"))
        elif head == "height":
            item, level = rest
            level = level.strip("[]")
            heights[int(item.lstrip("h"))] = int(level)
        else:
            raise ValueError(f"unknown line: {raw!r}")
    if rho is None:
        raise ValueError("missing 'geq ... items=N' header")
    return GenEq(rho, bases, conns, secs, heights, omega_rank)


def to_json(omega):
    return {
        "rank": omega.rank,
        "rho": omega.rho,
        "bases": [
            {"id": b.id, "epsilon": b.epsilon, "alpha": b.alpha, "beta": b.beta, "dual": b.dual}
            for b in omega.bases
        ],
        "connections": [{"p": c.p, "lambda": c.base, "q": c.q} for c in omega.connections],
        "sections": [{"start": s.start, "end": s.end, "active": s.active} for s in omega.sections],
        "item_heights": {f"h{i}": h for i, h in omega.item_heights},
    }


def from_json(data):
    if isinstance(data, str):
        data = json.loads(data)
    return GenEq(
        data["rho"],
        [Base(b["id"], b["epsilon"], b["alpha"], b["beta"], b["dual"]) for b in data["bases"]],
        [Connection(c["p"], c["lambda"], c["q"]) for c in data["connections"]],
        [Section(s["start"], s["end"], s["active"]) for s in data["sections"]],
        {int(k.lstrip("h")): v for k, v in data.get("item_heights", {}).items()},
        data["rank"],
    )


def serialize_solution(solution):
    return "".join(f"h{i} = {w}\n" for i, w in enumerate(solution.words, 1))


def parse_solution(text, rank=1):
    entries = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, _, w = line.partition("=")
        entries[int(name.strip().lstrip("h"))] = parse_word(w, rank)
    n = max(entries) if entries else 0
    if sorted(entries) != list(range(1, n + 1)):
        raise ValueError("solution must assign h1..hN")
    return Solution(tuple(entries[i] for i in range(1, n + 1)))


def heights_from_solution(solution):
    return {i: height(w.length) for i, w in enumerate(solution.words, 1)}


__all__ = [
    "Base",
    "Connection",
    "Section",
    "GenEq",
    "DerivedEquation",
    "Presentation",
    "Solution",
    "Violation",
    "Complexity",
    "LinearSystem",
    "validate",
    "ensure_valid",
    "derive",
    "presentation",
    "verify_solution",
    "cancellation_table",
    "consistent",
    "complexity",
    "tau",
    "canonical_key",
    "serialize",
    "parse",
    "to_json",
    "from_json",
    "serialize_solution",
    "parse_solution",
    "evaluate",
    "span",
    "base_word",
]
