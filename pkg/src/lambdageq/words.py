"""Reduced Lambda-words in block form.

A word is a sequence of blocks.  A finite block is a tuple of letters.  A
``Power`` block ``(p)^g`` has a cyclically reduced primitive base ``p`` and an
exponent ``g`` in Z^n of height at least 2.  Its letter at 0-based offset
``t`` is ``p[phi(t) mod |p|]`` where ``phi(t) = t_1 + sum_k c_k t_k`` and the
``c_k`` (k >= 2) are the phase coefficients.  With all phases zero every
limit block is aligned with the start of the word.

Operations leave this fragment only through :class:`Undefined`.
"""

import re
from typing import NamedTuple

from .ordered import LambdaScalar, RankMismatch, height, parse_vector


class Undefined(ArithmeticError):
    """The result is not representable in block form."""


class Letter(NamedTuple):
    symbol: str
    sign: int = 1

    def inverse(self):
        return Letter(self.symbol, -self.sign)

    def __str__(self):
        return self.symbol if self.sign > 0 else f"{self.symbol}^-1"


def invert_letters(letters):
    return tuple(Letter(a.symbol, -a.sign) for a in reversed(letters))


def free_reduce(letters):
    out = []
    for a in letters:
        if out and out[-1].symbol == a.symbol and out[-1].sign == -a.sign:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


def _is_freely_reduced(letters):
    return all(
        not (a.symbol == b.symbol and a.sign == -b.sign)
        for a, b in zip(letters, letters[1:])
    )


def _primitive_root(letters):
    m = len(letters)
    for d in range(1, m + 1):
        if m % d == 0 and letters[:d] * (m // d) == letters:
            return letters[:d], m // d
    return letters, 1


class Power:
    """The block ``(base)^exponent`` with phase coefficients."""

    __slots__ = ("base", "exponent", "phases")

    def __init__(self, base, exponent, phases=None):
        base = tuple(base)
        if not base:
            raise ValueError("empty power base")
        if not _is_freely_reduced(base) or (
            base[0].symbol == base[-1].symbol and base[0].sign == -base[-1].sign
        ):
            raise ValueError("power base must be cyclically reduced")
        if height(exponent) < 2 or exponent.sign() <= 0:
            raise ValueError("power exponent must be positive of height >= 2")
        root, k = _primitive_root(base)
        m = len(root)
        if phases is None:
            phases = (0,) * (exponent.rank - 1)
        if len(phases) != exponent.rank - 1:
            raise RankMismatch("one phase per coordinate above the first")
        self.base = root
        self.exponent = exponent * k
        self.phases = tuple(c % m for c in phases)

    @property
    def period(self):
        return len(self.base)

    @property
    def length(self):
        return self.exponent * self.period

    def phi(self, t):
        s = t.coords[0]
        for c, x in zip(self.phases, t.coords[1:]):
            s += c * x
        return s % self.period

    def letter_at(self, t):
        return self.base[self.phi(t)]

    def inverse(self):
        return Power(invert_letters(self.base), self.exponent, self.phases)

    def rotated(self, r):
        """Same phases, base read from index ``r``."""
        r %= self.period
        return Power(self.base[r:] + self.base[:r], self.exponent, self.phases)

    def _key(self):
        return (self.base, self.exponent, self.phases)

    def __eq__(self, other):
        return isinstance(other, Power) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"Power({format_letters(self.base)!r}, {self.exponent}, {self.phases})"

    def __str__(self):
        s = f"({format_letters(self.base)})^{self.exponent}"
        if any(self.phases):
            s += "@[" + ",".join(str(c) for c in self.phases) + "]"
        return s


def _power_block(base, exponent, phases, rank):
    """A Power or, when the exponent is finite, the expanded letters."""
    if height(exponent) <= 1:
        k = exponent.coords[0]
        if k < 0:
            raise ValueError("negative finite exponent")
        return tuple(base) * k
    return Power(base, exponent, phases)


def _block_length(block, rank):
    if isinstance(block, Power):
        return block.length
    return LambdaScalar.of_int(len(block), rank)


def _normalize(blocks, rank):
    out = []
    for block in blocks:
        if isinstance(block, Power):
            _push_power(out, block, rank)
        elif block:
            _push_finite(out, tuple(block))
    return tuple(out)


def _push_finite(out, letters):
    if not letters:
        return
    if out and isinstance(out[-1], tuple):
        letters = out.pop() + letters
    if out and isinstance(out[-1], Power):
        p = out[-1]
        m = p.period
        k = 0
        while letters[k * m:(k + 1) * m] == p.base:
            k += 1
        if k:
            one = LambdaScalar.of_int(1, p.exponent.rank)
            out[-1] = Power(p.base, p.exponent + one * k, p.phases)
            letters = letters[k * m:]
        if not letters:
            return
    out.append(letters)


def _push_power(out, q, rank):
    m = q.period
    if out and isinstance(out[-1], tuple):
        f = out[-1]
        a = 0
        while a < len(f) and f[len(f) - 1 - a] == q.base[(-1 - a) % m]:
            a += 1
        if a:
            rot = q.rotated(-a)
            one = LambdaScalar.of_int(1, rank)
            grown = Power(rot.base, q.exponent + one * (a // m), q.phases)
            tail = rot.base[: a % m]
            rest = f[: len(f) - a]
            if rest:
                out[-1] = rest
            else:
                out.pop()
            _push_power(out, grown, rank)
            _push_finite(out, tail)
            return
    if out and isinstance(out[-1], Power):
        p = out[-1]
        if p.base == q.base and p.phases == q.phases:
            out[-1] = Power(p.base, p.exponent + q.exponent, p.phases)
            return
    out.append(q)


class LambdaWord:
    """A Lambda-word in canonical block form."""

    __slots__ = ("blocks", "rank", "_length", "_hash")

    def __init__(self, blocks=(), rank=1, _canonical=False):
        self.rank = rank
        self.blocks = tuple(blocks) if _canonical else _normalize(blocks, rank)
        self._length = None
        self._hash = None

    @classmethod
    def from_letters(cls, letters, rank=1):
        letters = tuple(letters)
        return cls((letters,) if letters else (), rank, _canonical=True)

    @classmethod
    def empty(cls, rank=1):
        return cls((), rank, _canonical=True)

    @property
    def length(self):
        if self._length is None:
            total = LambdaScalar.zero(self.rank)
            for b in self.blocks:
                total = total + _block_length(b, self.rank)
            self._length = total
        return self._length

    def __len__(self):
        raise TypeError("use .length; Lambda lengths are vectors")

    @property
    def is_finite(self):
        return all(isinstance(b, tuple) for b in self.blocks)

    @property
    def letters(self):
        if not self.is_finite:
            raise Undefined("word has infinite length")
        return self.blocks[0] if self.blocks else ()

    def __bool__(self):
        return bool(self.blocks)

    def first_letter(self):
        b = self.blocks[0]
        return b.base[0] if isinstance(b, Power) else b[0]

    def last_letter(self):
        b = self.blocks[-1]
        return b.base[-1] if isinstance(b, Power) else b[-1]

    def is_reduced(self):
        prev = None
        for b in self.blocks:
            if isinstance(b, Power):
                first, last = b.base[0], b.base[-1]
            else:
                if not _is_freely_reduced(b):
                    return False
                first, last = b[0], b[-1]
            if prev is not None and prev == first.inverse():
                return False
            prev = last
        return True

    def is_cyclically_reduced(self):
        if not self.blocks:
            return True
        return self.is_reduced() and self.first_letter() != self.last_letter().inverse()

    def __eq__(self, other):
        return (
            isinstance(other, LambdaWord)
            and self.rank == other.rank
            and self.blocks == other.blocks
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.rank, self.blocks))
        return self._hash

    def __repr__(self):
        return f"LambdaWord({str(self)!r}, rank={self.rank})"

    def __str__(self):
        if not self.blocks:
            return "1"
        parts = []
        for b in self.blocks:
            parts.append(str(b) if isinstance(b, Power) else format_letters(b))
        return " ".join(parts)

    def inverse(self):
        return invert(self)

    def __mul__(self, other):
        return mult(self, other)


def format_letters(letters):
    return " ".join(str(a) for a in letters)


def _check_rank(u, v):
    if u.rank != v.rank:
        raise RankMismatch(f"word rank {u.rank} vs {v.rank}")


def concat(u, v):
    """Juxtaposition; the result may be unreduced at the junction."""
    _check_rank(u, v)
    if not u.blocks:
        return v
    if not v.blocks:
        return u
    if u.is_finite and v.is_finite:
        return LambdaWord.from_letters(u.blocks[0] + v.blocks[0], u.rank)
    return LambdaWord(u.blocks + v.blocks, u.rank)


def invert(w):
    if w.is_finite:
        return LambdaWord.from_letters(invert_letters(w.letters), w.rank)
    blocks = []
    for b in reversed(w.blocks):
        blocks.append(b.inverse() if isinstance(b, Power) else invert_letters(b))
    return LambdaWord(blocks, w.rank)


def _split_block(block, o, rank):
    """Split one block at local offset ``o``; returns two block lists."""
    if isinstance(block, tuple):
        k = o.coords[0]
        return [block[:k]], [block[k:]]
    m = block.period
    if any(x % m for x in o.coords[1:]):
        raise Undefined(f"offset {o} is not aligned with period {m}")
    r = o.coords[0] % m
    one = LambdaScalar.of_int(1, rank)
    e = LambdaScalar([(o.coords[0] - r) // m] + [x // m for x in o.coords[1:]])
    prefix = [_power_block(block.base, e, block.phases, rank), block.base[:r]]
    rest = block.exponent - e
    if r:
        suffix = [block.base[r:], _power_block(block.base, rest - one, block.phases, rank)]
    else:
        suffix = [_power_block(block.base, rest, block.phases, rank)]
    return prefix, suffix


def split_at(w, t):
    """Return (prefix, suffix) with |prefix| = t."""
    if w.is_finite:
        if height(t) > 1 or not 0 <= t.coords[0] <= len(w.letters):
            raise ValueError(f"split point {t} outside the word")
        k = t.coords[0]
        return (
            LambdaWord.from_letters(w.letters[:k], w.rank),
            LambdaWord.from_letters(w.letters[k:], w.rank),
        )
    if t.sign() < 0 or t > w.length:
        raise ValueError(f"split point {t} outside the word")
    start = LambdaScalar.zero(w.rank)
    for i, b in enumerate(w.blocks):
        end = start + _block_length(b, w.rank)
        if t < end:
            if t == start:
                return (
                    LambdaWord(w.blocks[:i], w.rank, _canonical=True),
                    LambdaWord(w.blocks[i:], w.rank, _canonical=True),
                )
            pre, suf = _split_block(b, t - start, w.rank)
            return (
                LambdaWord(list(w.blocks[:i]) + pre, w.rank),
                LambdaWord(suf + list(w.blocks[i + 1:]), w.rank),
            )
        start = end
    return w, LambdaWord.empty(w.rank)


def subword(w, start, stop):
    """Letters at 1-based positions start .. stop-1."""
    one = LambdaScalar.of_int(1, w.rank)
    if start > stop:
        raise ValueError("start after stop")
    head, _ = split_at(w, stop - one)
    _, mid = split_at(head, start - one)
    return mid


class _Cursor:
    __slots__ = ("word", "i", "off", "rank")

    def __init__(self, word):
        self.word = word
        self.i = 0
        self.off = LambdaScalar.zero(word.rank)
        self.rank = word.rank

    def done(self):
        return self.i >= len(self.word.blocks)

    def block(self):
        return self.word.blocks[self.i]

    def remaining(self):
        return _block_length(self.block(), self.rank) - self.off

    def letter(self):
        b = self.block()
        if isinstance(b, Power):
            return b.letter_at(self.off)
        return b[self.off.coords[0]]

    def advance(self, d):
        self.off = self.off + d
        if self.off == _block_length(self.block(), self.rank):
            self.i += 1
            self.off = LambdaScalar.zero(self.rank)


def common_prefix_length(u, v):
    """Length of the longest common initial segment, or Undefined."""
    _check_rank(u, v)
    rank = u.rank
    if u.is_finite and v.is_finite:
        a, b = u.letters, v.letters
        k = 0
        n = min(len(a), len(b))
        while k < n and a[k] == b[k]:
            k += 1
        return LambdaScalar.of_int(k, rank)
    one = LambdaScalar.of_int(1, rank)
    total = LambdaScalar.zero(rank)
    a, b = _Cursor(u), _Cursor(v)
    while not a.done() and not b.done():
        ba, bb = a.block(), b.block()
        ra, rb = a.remaining(), b.remaining()
        step = min(ra, rb)
        if isinstance(ba, Power) and isinstance(bb, Power):
            ma, mb = ba.period, bb.period
            sa, sb = ba.phi(a.off), bb.phi(b.off)
            same = ma == mb and all(
                ba.base[(sa + j) % ma] == bb.base[(sb + j) % mb] for j in range(ma)
            )
            if same:
                diff = [k + 2 for k, (x, y) in enumerate(zip(ba.phases, bb.phases)) if x != y]
                if diff and height(step) >= diff[0]:
                    raise Undefined("periodic blocks disagree on a set with no least element")
                total = total + step
                a.advance(step)
                b.advance(step)
                continue
            budget = ma + mb
        else:
            budget = None
        # letter-by-letter over a finite stretch
        n = 0
        while True:
            if a.letter() != b.letter():
                return total
            total = total + one
            n += 1
            ra, rb = a.remaining(), b.remaining()
            a.advance(one)
            b.advance(one)
            if ra == one or rb == one:
                break
            if budget is not None and n >= budget:
                raise AssertionError("distinct primitive periods agreed too long")
    return total


def com(u, v):
    """Longest common initial segment: returns (c, u_rest, v_rest)."""
    ell = common_prefix_length(u, v)
    c, ur = split_at(u, ell)
    _, vr = split_at(v, ell)
    return c, ur, vr


def mult(u, v):
    """The partial product u * v = u_rest^-1 o v_rest with c = com(u^-1, v)."""
    _check_rank(u, v)
    if u.is_finite and v.is_finite:
        a, b = u.letters, v.letters
        k = 0
        n = min(len(a), len(b))
        while k < n and a[-1 - k].symbol == b[k].symbol and a[-1 - k].sign == -b[k].sign:
            k += 1
        return LambdaWord.from_letters(a[: len(a) - k] + b[k:], u.rank)
    _, ut, vt = com(invert(u), v)
    return concat(invert(ut), vt)


def power(w, k):
    """Integer power under the product."""
    if k < 0:
        return power(invert(w), -k)
    out = LambdaWord.empty(w.rank)
    for _ in range(k):
        out = mult(out, w)
    return out


def cyclic_decomposition(v):
    """Return (c, u) with v = c^-1 o u o c and u cyclically reduced."""
    if not v.blocks:
        return v, v
    d = common_prefix_length(v, invert(v))
    if not d:
        return LambdaWord.empty(v.rank), v
    if d * 2 >= v.length:
        raise Undefined("no cyclic decomposition")
    head, rest = split_at(v, d)
    u, _ = split_at(rest, rest.length - d)
    return invert(head), u


def lambda_power(w, exponent):
    """``w`` raised to a Lambda exponent, via its cyclic decomposition."""
    if not exponent:
        return LambdaWord.empty(w.rank)
    if exponent.sign() < 0:
        return lambda_power(invert(w), -exponent)
    if height(exponent) <= 1:
        return power(w, exponent.coords[0])
    c, u = cyclic_decomposition(w)
    if not u.blocks:
        return LambdaWord.empty(w.rank)
    if not u.is_finite:
        raise Undefined("Lambda powers need a finite cyclic core")
    core = LambdaWord([Power(u.letters, exponent)], w.rank)
    return concat(concat(invert(c), core), c)


class Unbounded:
    def __eq__(self, other):
        return isinstance(other, Unbounded)

    def __hash__(self):
        return hash("Unbounded")

    def __repr__(self):
        return "Unbounded()"


class Bounded(NamedTuple):
    k: int
    rest: LambdaWord


def is_periodic(w, u):
    """w is a prefix of u o w, with u o w reduced (w begins with powers of u)."""
    if not u.blocks:
        return False
    if not w.blocks:
        return True
    if w.first_letter() == u.last_letter().inverse():
        return False
    if w.length <= u.length:
        return common_prefix_length(w, u) == w.length
    try:
        return common_prefix_length(w, concat(u, w)) == w.length
    except Undefined:
        return False


def periodicity(w, u):
    """Classify w against the period u: Unbounded(), Bounded(k, u1) or None."""
    if not u.is_cyclically_reduced() or not u.blocks:
        raise ValueError("period must be a nonempty cyclically reduced word")
    if not is_periodic(w, u):
        return None
    hw, hu = height(w.length), height(u.length)
    if hw == hu:
        k = w.length.coords[hw - 1] // u.length.coords[hw - 1]
        while w.length - u.length * k < LambdaScalar.zero(w.rank):
            k -= 1
        while w.length - u.length * k >= u.length:
            k += 1
        if k >= 2:
            _, rest = split_at(w, u.length * k)
            return Bounded(k, rest)
    if hw >= hu:
        return Unbounded()
    return None


_TOKEN = re.compile(r"\s*(?:(\^\s*-1\b)|(\^\s*\[[^\]]*\](?:@\[[^\]]*\])?)|(\^\s*-?\d+)|(\()|(\))|([A-Za-z_][A-Za-z0-9_]*)|(1\b))")


def _tokenize(text):
    pos = 0
    toks = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse word at {text[pos:]!r}")
        pos = m.end()
        inv, vec, num, lp, rp, ident, one = m.groups()
        if inv:
            toks.append(("pow", -1))
        elif vec:
            toks.append(("vec", vec[1:].strip()))
        elif num:
            toks.append(("pow", int(num[1:].strip())))
        elif lp:
            toks.append(("(", None))
        elif rp:
            toks.append((")", None))
        elif ident:
            toks.append(("id", ident))
        elif one:
            toks.append(("one", None))
    return toks


def parse_word(text, rank=1):
    """Parse the word grammar; atoms are concatenated without reduction."""
    toks = _tokenize(text)
    word, i = _parse_seq(toks, 0, rank)
    if i != len(toks):
        raise ValueError(f"unbalanced parenthesis in {text!r}")
    return word


def _apply_exponent(atom, tok, rank):
    kind, val = tok
    if kind == "pow":
        if val == -1:
            return invert(atom)
        return power(atom, val) if atom.is_reduced() else _repeat(atom, val)
    vec, _, ph = val.partition("@")
    exp = parse_vector(vec, rank)
    phases = None
    if ph:
        phases = tuple(int(x) for x in ph.strip("[] ").split(","))
    if phases is not None:
        c, u = cyclic_decomposition(atom)
        if exp.sign() < 0:
            raise ValueError("phased powers need a positive exponent")
        core = LambdaWord([Power(u.letters, exp, phases)], rank)
        return concat(concat(invert(c), core), c)
    return lambda_power(atom, exp)


def _repeat(atom, k):
    if k < 0:
        return _repeat(invert(atom), -k)
    out = LambdaWord.empty(atom.rank)
    for _ in range(k):
        out = concat(out, atom)
    return out


def _parse_seq(toks, i, rank):
    word = LambdaWord.empty(rank)
    while i < len(toks):
        kind, val = toks[i]
        if kind == ")":
            break
        if kind == "(":
            atom, i = _parse_seq(toks, i + 1, rank)
            if i >= len(toks) or toks[i][0] != ")":
                raise ValueError("missing closing parenthesis")
            i += 1
        elif kind == "id":
            atom = LambdaWord.from_letters((Letter(val, 1),), rank)
            i += 1
        elif kind == "one":
            atom = LambdaWord.empty(rank)
            i += 1
        else:
            raise ValueError(f"unexpected exponent token {val!r}")
        while i < len(toks) and toks[i][0] in ("pow", "vec"):
            atom = _apply_exponent(atom, toks[i], rank)
            i += 1
        word = concat(word, atom)
    return word, i


def word(text, rank=1):
    """Shorthand for :func:`parse_word`."""
    return parse_word(text, rank)
