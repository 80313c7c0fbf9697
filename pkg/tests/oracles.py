"""Independent reference computations used to derive expected test values.

Nothing here imports the package's arithmetic: words are plain lists of
(symbol, sign) pairs, vectors are tuples, and lattice questions go through
sympy.
"""

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form


def reduce_letters(letters):
    out = []
    for x, s in letters:
        if out and out[-1] == (x, -s):
            out.pop()
        else:
            out.append((x, s))
    return out


def inverse_letters(letters):
    return [(x, -s) for x, s in reversed(letters)]


def common_prefix(u, v):
    k = 0
    while k < min(len(u), len(v)) and u[k] == v[k]:
        k += 1
    return k


def product(u, v):
    return reduce_letters(list(u) + list(v))


def rlex_less(a, b):
    """Right-lexicographic order: the last coordinate dominates."""
    return tuple(reversed(a)) < tuple(reversed(b))


def vec_height(a):
    nz = [i for i, x in enumerate(a, 1) if x]
    return nz[-1] if nz else 0


def power_product(a, b):
    """z^a * z^b for exponent vectors: the exponents add."""
    return tuple(x + y for x, y in zip(a, b))


def _int_matrix(rows, ncols):
    return Matrix(rows) if rows else Matrix.zeros(0, ncols)


def abelian_invariants(ngens, relators):
    """(free rank, torsion coefficients > 1) of <gens | relators>, relators as
    exponent-sum rows over the generators."""
    if not relators:
        return ngens, []
    m = Matrix(relators)
    snf = smith_normal_form(m, domain=ZZ)
    diag = [abs(snf[i, i]) for i in range(min(snf.shape)) if snf[i, i] != 0]
    return ngens - len(diag), sorted(int(d) for d in diag if d != 1)


def exponent_row(word, symbols):
    row = [0] * len(symbols)
    for x, s in word:
        row[symbols.index(x)] += s
    return row


def lattice_index(generators, dim):
    """Index of the lattice spanned by ``generators`` inside its saturation."""
    m = Matrix(generators)
    snf = smith_normal_form(m, domain=ZZ)
    out = 1
    for i in range(min(snf.shape)):
        if snf[i, i] != 0:
            out *= abs(int(snf[i, i]))
    return out


def q_rank(rows):
    return Matrix(rows).rank() if rows else 0


def naive_tau(section_base_counts):
    return sum(max(0, n - 2) for n in section_base_counts)


def excess_oracle(bases, item_lengths, first_inactive, marked):
    """psi and |U_omega| over integer item lengths.

    ``bases`` holds (id, dual id, left, right); a base counts in omega_1 when
    the part of its id before the first dot, or its dual's, is marked.
    """
    def root(bid):
        return bid.partition(".")[0]

    one = [b for b in bases if root(b[0]) in marked or root(b[1]) in marked]
    cut = min([b[2] for b in bases if b not in one] + [first_inactive])
    u = sum(item_lengths[: cut - 1])
    total = sum(sum(item_lengths[b[2] - 1: b[3] - 1]) for b in one)
    return total - 2 * u, u


def surface_vertices(word):
    """Vertex classes of the polygon glued along ``word`` by naive closure."""
    n = len(word)
    ends = {}
    for i, (x, s) in enumerate(word):
        tail, head = (i, (i + 1) % n) if s > 0 else ((i + 1) % n, i)
        ends.setdefault(x, []).append((tail, head))
    label = list(range(n))
    changed = True
    while changed:
        changed = False
        for (t1, h1), (t2, h2) in ends.values():
            for a, b in ((t1, t2), (h1, h2)):
                lo = min(label[a], label[b])
                for k in range(n):
                    if label[k] in (label[a], label[b]) and label[k] != lo:
                        label[k] = lo
                        changed = True
    return len(set(label))


def closed_surface(word):
    """(orientable, genus) of the closed surface glued from ``word``.

    The one-relator group is the surface group free-producted with a free
    group of rank V - 1, so that much free rank is removed first.
    """
    symbols = sorted({x for x, _ in word})
    free, torsion = abelian_invariants(len(symbols), [exponent_row(word, symbols)])
    free -= surface_vertices(word) - 1
    if torsion == [2]:
        return False, free + 1
    assert not torsion
    return True, free // 2
