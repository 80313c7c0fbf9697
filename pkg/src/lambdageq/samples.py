"""Random generalized equations with a planted solution.

A random freely reduced word is cut into items; base pairs are chosen
among intervals that spell the same word (or its inverse) under the cut,
so the planted assignment solves the equation by construction.
"""

import random

from .geq import Base, Connection, GenEq, Section, Solution, heights_from_solution, span, validate
from .words import Letter, LambdaWord, invert


def random_reduced(rng, length, alphabet="ab"):
    out = []
    letters = [Letter(x, s) for x in alphabet for s in (1, -1)]
    while len(out) < length:
        a = rng.choice(letters)
        if out and out[-1] == a.inverse():
            continue
        out.append(a)
    return out


def _word(letters, rank):
    return LambdaWord.from_letters(tuple(letters), rank)


def _spans(cuts, letters, rank):
    """Word spelled between each pair of boundaries a < b."""
    out = {}
    n = len(cuts)
    for a in range(n):
        for b in range(a + 1, n):
            out[a + 1, b + 1] = _word(letters[cuts[a]:cuts[b]], rank)
    return out


def planted_instance(rng, max_items=10, max_bases=8, alphabet="ab", word_length=(6, 16), rank=1,
                     connection_rate=0.3, section_rate=0.3):
    """Return (omega, solution); omega may have no bases when nothing matches."""
    length = rng.randint(*word_length)
    letters = random_reduced(rng, length, alphabet)
    rho = rng.randint(2, min(max_items, length))
    cuts = [0] + sorted(rng.sample(range(1, length), rho - 1)) + [length]
    items = [_word(letters[a:b], rank) for a, b in zip(cuts, cuts[1:])]
    words = _spans(cuts, letters, rank)
    keys = list(words)
    candidates = []
    for i, (a, b) in enumerate(keys):
        for c, d in keys[i + 1:]:
            w1, w2 = words[a, b], words[c, d]
            if w1 == w2:
                candidates.append(((a, b), (c, d), 1))
            if w1 == invert(w2):
                candidates.append(((a, b), (c, d), -1))
    rng.shuffle(candidates)
    npairs = rng.randint(0, max_bases // 2)
    bases = []
    for k, ((a, b), (c, d), sign) in enumerate(candidates[:npairs], 1):
        bases.append(Base(f"b{k}", 1, a, b, f"b{k}~"))
        if sign > 0:
            bases.append(Base(f"b{k}~", 1, c, d, f"b{k}"))
        else:
            bases.append(Base(f"b{k}~", -1, d, c, f"b{k}"))
    omega = GenEq(rho, bases, (), (), {}, rank)
    sol = Solution(tuple(items))
    conns = []
    for b in bases:
        if rng.random() > connection_rate:
            continue
        d = omega.base(b.dual)
        for p in range(b.left + 1, b.right):
            for q in range(d.left + 1, d.right):
                if _spell(span(b.alpha, p), sol) == _spell(span(d.alpha, q), sol):
                    conns += [Connection(p, b.id, q), Connection(q, d.id, p)]
    omega = omega.with_(connections=tuple(conns))
    closed = [p for p in range(2, rho + 1) if not omega.is_open(p)]
    chosen = sorted(p for p in closed if rng.random() < section_rate)
    bounds = [1] + chosen + [rho + 1]
    sections = [Section(a, e, True) for a, e in zip(bounds, bounds[1:])]
    omega = omega.with_(sections=tuple(sections), item_heights=heights_from_solution(sol))
    assert not validate(omega), validate(omega)
    return omega, sol


def _spell(word, sol):
    out = LambdaWord.empty(sol.rank)
    from .words import concat

    for i, s in word:
        out = concat(out, sol[i] if s > 0 else invert(sol[i]))
    return out


def instances(seed, count, **kw):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        omega, sol = planted_instance(rng, **kw)
        if omega.bases:
            out.append((omega, sol))
    return out
