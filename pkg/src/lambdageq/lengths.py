"""Lyndon length functions on finite samples of Lambda-words.

The length of a reduced word is its Lambda-length unless a table of edited
lengths overrides it.  Axioms L1-L5 are checked exhaustively on the closure
of a sample; L6 (regularity) can only be witnessed on a finite sample.
"""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .ordered import LambdaScalar, halve
from .words import LambdaWord, Undefined, common_prefix_length, invert, mult, split_at

AXIOMS = ("L1", "L2", "L3", "L4", "L5", "L6")

PASS = "pass"
FAIL = "fail"
WITNESSED = "witnessed"
REFUTED = "refuted"
NOT_WITNESSED = "not witnessed"


class GroupSample:
    """A finite set of words closed under inverse, plus a closure depth.

    The closure adjoins all defined products of current elements, repeated
    ``closure_depth`` times.  Undefined products are logged, not fatal.
    """

    def __init__(self, elements, closure_depth=0):
        elements = list(elements)
        if not elements:
            raise ValueError("empty sample")
        self.rank = elements[0].rank
        for w in elements:
            if not w.is_reduced():
                raise ValueError(f"sample element {w} is not reduced")
        seen = dict.fromkeys(elements)
        for w in elements:
            seen.setdefault(invert(w))
        self.elements = list(seen)
        self.closure_depth = closure_depth
        self._closure = None
        self.undefined = []

    def closure(self):
        if self._closure is None:
            current = dict.fromkeys(self.elements)
            for _ in range(self.closure_depth):
                frozen = list(current)
                for g, f in product(frozen, repeat=2):
                    try:
                        current.setdefault(mult(g, f))
                    except Undefined:
                        self.undefined.append((g, f))
            self._closure = sorted(current, key=_sort_key)
        return self._closure


def _sort_key(w):
    return (tuple(reversed(w.length.coords)), str(w))


class LengthFunction:
    """Word length, optionally overridden on chosen words."""

    def __init__(self, overrides=None):
        self.overrides = dict(overrides or {})

    def __call__(self, w):
        got = self.overrides.get(w)
        return got if got is not None else w.length


def gromov(g, f, lengths=None):
    """c(g, f) = (l(g) + l(f) - l(g^-1 f)) / 2 in Q^n."""
    ell = lengths or LengthFunction()
    return halve(ell(g) + ell(f) - ell(mult(invert(g), f)))


@dataclass
class AxiomResult:
    axiom: str
    status: str
    witness: tuple = ()
    checked: int = 0
    detail: str = ""

    @property
    def ok(self):
        return self.status in (PASS, WITNESSED)


@dataclass
class AxiomReport:
    results: dict = field(default_factory=dict)
    undefined: list = field(default_factory=list)
    size: int = 0

    @property
    def ok(self):
        return all(r.ok for r in self.results.values())

    def __getitem__(self, axiom):
        return self.results[axiom]

    def lines(self):
        out = []
        for name, r in self.results.items():
            line = f"{name}: {r.status} ({r.checked} checked)"
            if r.witness:
                line += " witness: " + ", ".join(str(w) for w in r.witness)
            if r.detail:
                line += f" [{r.detail}]"
            out.append(line)
        return out


class _Encoder:
    """Order-preserving additive map from a bounded part of Z^n into int64."""

    def __init__(self, values, slack=8):
        bound = max((abs(c) for v in values for c in v.coords), default=0)
        self.base = slack * bound + 2
        self.rank = values[0].rank if values else 1
        if self.base ** self.rank >= 2 ** 60:
            raise OverflowError("lengths too large for the fast encoding")

    def __call__(self, v):
        total = 0
        for c in reversed(v.coords):
            total = total * self.base + c
        return total


class _Tables:
    """Length data for every ordered pair of closure elements."""

    def __init__(self, elements, ell):
        self.elements = elements
        self.index = {w: i for i, w in enumerate(elements)}
        self.ell = ell
        n = len(elements)
        fast = not ell.overrides and all(w.is_finite for w in elements)
        self.valid = np.ones((n, n), dtype=bool)
        self.undefined = []
        lengths = [ell(w) for w in elements]
        if fast:
            letters = [w.letters for w in elements]
            sizes = np.array([len(a) for a in letters], dtype=np.int64)
            lcp = np.zeros((n, n), dtype=np.int64)
            for i, a in enumerate(letters):
                row = lcp[i]
                for j, b in enumerate(letters):
                    k = 0
                    m = min(len(a), len(b))
                    while k < m and a[k] == b[k]:
                        k += 1
                    row[j] = k
            self.lcp = lcp
            self.l = sizes
            # l(g^-1 f) = |g| + |f| - 2 |com(g, f)| by free reduction
            self.inv_prod = sizes[:, None] + sizes[None, :] - 2 * lcp
            self.encode = lambda v: v.coords[0]
            self.products = None
            return
        self.lcp = None
        products = {}
        values = list(lengths)
        for i, g in enumerate(elements):
            gi = invert(g)
            for j, f in enumerate(elements):
                try:
                    p = mult(gi, f)
                except Undefined:
                    self.valid[i, j] = False
                    self.undefined.append((gi, f))
                    continue
                products[i, j] = p
                values.append(ell(p))
        self.products = products
        self.encode = _Encoder(values)
        self.l = np.array([self.encode(v) for v in lengths], dtype=np.int64)
        self.inv_prod = np.zeros((n, n), dtype=np.int64)
        for (i, j), p in products.items():
            self.inv_prod[i, j] = self.encode(ell(p))

    def doubled_gromov(self):
        return self.l[:, None] + self.l[None, :] - self.inv_prod


def check_axioms(sample, axioms=AXIOMS, lengths=None):
    """Check the chosen Lyndon axioms on the closure of ``sample``."""
    ell = lengths or LengthFunction()
    elements = sample.closure()
    report = AxiomReport(size=len(elements))
    report.undefined.extend(sample.undefined)
    tables = _Tables(elements, ell)
    report.undefined.extend(tables.undefined)
    zero = LambdaScalar.zero(sample.rank)
    for ax in axioms:
        if ax == "L1":
            report.results[ax] = _check_l1(elements, ell, zero)
        elif ax == "L2":
            report.results[ax] = _check_l2(elements, ell)
        elif ax == "L3":
            report.results[ax] = _check_l3(tables)
        elif ax == "L4":
            report.results[ax] = _check_l4(tables)
        elif ax == "L5":
            report.results[ax] = _check_l5(elements, ell)
        elif ax == "L6":
            report.results[ax] = _check_l6(tables)
        else:
            raise ValueError(f"unknown axiom {ax!r}")
    return report


def _check_l1(elements, ell, zero):
    for w in elements:
        v = ell(w)
        if v < zero or (not w.blocks and v != zero):
            return AxiomResult("L1", FAIL, (w,), detail=f"l = {v}")
    empty = LambdaWord.empty(elements[0].rank)
    if ell(empty) != zero:
        return AxiomResult("L1", FAIL, (empty,), detail="l(1) != 0")
    return AxiomResult("L1", PASS, checked=len(elements) + 1)


def _check_l2(elements, ell):
    for w in elements:
        if ell(w) != ell(invert(w)):
            return AxiomResult("L2", FAIL, (w, invert(w)), detail=f"{ell(w)} != {ell(invert(w))}")
    return AxiomResult("L2", PASS, checked=len(elements))


def _check_l3(tables):
    c2 = tables.doubled_gromov()
    if np.abs(c2).max(initial=0) < 2 ** 31:
        c2 = c2.astype(np.int32)
    valid = tables.valid
    total = valid.all()
    n = len(tables.elements)
    for i in range(n):
        ci = c2[i]
        bad = ci[:, None] > ci[None, :]
        bad &= ci[None, :] != c2
        if not total:
            bad &= valid[i][:, None] & valid[i][None, :] & valid
        if bad.any():
            f, h = np.argwhere(bad)[0]
            e = tables.elements
            return AxiomResult("L3", FAIL, (e[i], e[f], e[h]), checked=i * n * n)
    return AxiomResult("L3", PASS, checked=n ** 3)


def _check_l4(tables):
    if tables.lcp is not None:
        return AxiomResult("L4", PASS, checked=len(tables.elements) ** 2)
    e = tables.elements
    for (i, j), p in tables.products.items():
        c = halve(tables.ell(e[i]) + tables.ell(e[j]) - tables.ell(p))
        if not c.is_integral():
            return AxiomResult("L4", FAIL, (e[i], e[j]), detail=f"c = {c}")
    return AxiomResult("L4", PASS, checked=len(tables.products))


def _check_l5(elements, ell):
    n = 0
    for g in elements:
        if not g.blocks:
            continue
        n += 1
        try:
            sq = mult(g, g)
        except Undefined:
            continue
        if not ell(sq) > ell(g):
            return AxiomResult("L5", FAIL, (g,), detail=f"l(g^2) = {ell(sq)}")
    return AxiomResult("L5", PASS, checked=n)


def _check_l6(tables):
    """Search the closure for u with g = u o g1, f = u o f1 and l(u) = c(g, f)."""
    e = tables.elements
    n = len(e)
    missing = None
    checked = 0
    if tables.lcp is not None:
        by_letters = {w.letters: w for w in e}
        c2 = tables.doubled_gromov()
        for i in range(n):
            a = e[i].letters
            for j in range(i, n):
                checked += 1
                k = int(tables.lcp[i, j])
                if c2[i, j] != 2 * k:
                    return AxiomResult("L6", REFUTED, (e[i], e[j]), checked=checked)
                if a[:k] not in by_letters and missing is None:
                    missing = (e[i], e[j])
    else:
        members = set(e)
        for i in range(n):
            for j in range(i, n):
                if not tables.valid[i, j]:
                    continue
                checked += 1
                g, f = e[i], e[j]
                c = gromov(g, f, tables.ell)
                try:
                    k = common_prefix_length(g, f)
                except Undefined:
                    if missing is None:
                        missing = (g, f)
                    continue
                if not c.is_integral() or c.to_scalar() > k:
                    return AxiomResult("L6", REFUTED, (g, f), checked=checked, detail=f"c = {c}")
                u, _ = split_at(g, c.to_scalar())
                if u not in members or tables.ell(u) != c.to_scalar():
                    if missing is None:
                        missing = (g, f)
    if missing is not None:
        return AxiomResult("L6", NOT_WITNESSED, missing, checked=checked)
    return AxiomResult("L6", WITNESSED, checked=checked)


def subadditivity_check(sample, lengths=None):
    """l(g f) <= l(g) + l(f) over every defined product of closure elements."""
    ell = lengths or LengthFunction()
    elements = sample.closure()
    report = AxiomReport(size=len(elements))
    checked = 0
    for g, f in product(elements, repeat=2):
        try:
            p = mult(g, f)
        except Undefined:
            report.undefined.append((g, f))
            continue
        checked += 1
        if ell(p) > ell(g) + ell(f):
            report.results["subadditivity"] = AxiomResult(
                "subadditivity", FAIL, (g, f), checked=checked, detail=f"l(gf) = {ell(p)}"
            )
            return report
    report.results["subadditivity"] = AxiomResult("subadditivity", PASS, checked=checked)
    return report


def free_group_ball(generators, radius, rank=1):
    """All reduced words of length <= radius over the given generators."""
    from .words import Letter

    letters = [Letter(x, s) for x in generators for s in (1, -1)]
    layer = [()]
    out = [()]
    for _ in range(radius):
        nxt = []
        for w in layer:
            for a in letters:
                if w and w[-1] == a.inverse():
                    continue
                nxt.append(w + (a,))
        out.extend(nxt)
        layer = nxt
    return [LambdaWord.from_letters(w, rank) for w in out]


def exponent_sample(symbol, vectors):
    """Words ``symbol^v`` for each vector v (a sample of an abelian subgroup)."""
    from .words import lambda_power, Letter

    out = []
    for v in vectors:
        base = LambdaWord.from_letters((Letter(symbol, 1),), v.rank)
        out.append(lambda_power(base, v))
    return out
