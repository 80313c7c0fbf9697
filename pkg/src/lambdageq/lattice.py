"""Integer lattices: Smith normal form and saturation splittings.

Matrices are lists of lists of Python ints, so there is no overflow.
"""


def _identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _copy(a):
    return [list(row) for row in a]


def smith_normal_form(a):
    """Return (d, u, v) with u * a * v = d diagonal, u and v unimodular.

    The diagonal entries are nonnegative and each divides the next.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    d = _copy(a)
    u = _identity(m)
    v = _identity(n)

    def swap_rows(i, j):
        d[i], d[j] = d[j], d[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in d:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(src, dst, k):
        # row dst += k * row src
        d[dst] = [x + k * y for x, y in zip(d[dst], d[src])]
        u[dst] = [x + k * y for x, y in zip(u[dst], u[src])]

    def add_col(src, dst, k):
        for row in d:
            row[dst] += k * row[src]
        for row in v:
            row[dst] += k * row[src]

    t = 0
    while t < min(m, n):
        nonzero = [(abs(d[i][j]), i, j) for i in range(t, m) for j in range(t, n) if d[i][j]]
        if not nonzero:
            break
        _, i, j = min(nonzero)
        swap_rows(t, i)
        swap_cols(t, j)
        done = False
        while not done:
            done = True
            for i in range(t + 1, m):
                if d[i][t]:
                    q = d[i][t] // d[t][t]
                    add_row(t, i, -q)
                    if d[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, n):
                if d[t][j]:
                    q = d[t][j] // d[t][t]
                    add_col(t, j, -q)
                    if d[t][j]:
                        swap_cols(t, j)
                        done = False
            if done:
                # divisibility of the remaining block
                for i in range(t + 1, m):
                    for j in range(t + 1, n):
                        if d[i][j] % d[t][t]:
                            add_row(i, t, 1)
                            done = False
                            break
                    if not done:
                        break
        if d[t][t] < 0:
            d[t] = [-x for x in d[t]]
            u[t] = [-x for x in u[t]]
        t += 1
    return d, u, v


def invariant_factors(a):
    if not a or not a[0]:
        return []
    d, _, _ = smith_normal_form(a)
    return [d[i][i] for i in range(min(len(d), len(d[0]))) if d[i][i]]


def matmul(a, b):
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def unimodular_inverse(u):
    """Inverse of a unimodular integer matrix (exact, by Gauss-Jordan over Q)."""
    from fractions import Fraction

    n = len(u)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(u)]
    for c in range(n):
        p = next(r for r in range(c, n) if aug[r][c])
        aug[c], aug[p] = aug[p], aug[c]
        piv = aug[c][c]
        aug[c] = [x / piv for x in aug[c]]
        for r in range(n):
            if r != c and aug[r][c]:
                f = aug[r][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    out = [[x for x in row[n:]] for row in aug]
    for row in out:
        for x in row:
            if x.denominator != 1:
                raise ValueError("matrix is not unimodular")
    return [[int(x) for x in row] for row in out]


class Splitting:
    """Decomposition Z^k = Z1 + Z2 with span(B) inside Z1 of finite index."""

    def __init__(self, dim, z1, z2, factors):
        self.dim = dim
        self.z1 = z1
        self.z2 = z2
        self.factors = factors

    @property
    def index(self):
        out = 1
        for f in self.factors:
            out *= f
        return out


def saturation_split(generators, dim):
    """Split Z^dim around the lattice spanned by ``generators`` (vectors)."""
    gens = [list(g) for g in generators if any(g)]
    if not gens:
        return Splitting(dim, [], [list(r) for r in _identity(dim)], [])
    cols = [list(r) for r in zip(*gens)]  # dim x len(gens)
    d, u, _ = smith_normal_form(cols)
    r = sum(1 for i in range(min(len(d), len(d[0]))) if d[i][i])
    uinv = unimodular_inverse(u)
    basis = [list(c) for c in zip(*uinv)]
    factors = [d[i][i] for i in range(r)]
    return Splitting(dim, basis[:r], basis[r:], factors)


def in_span_over_q(vectors, target):
    """Is ``target`` a rational combination of ``vectors``?"""
    if not vectors:
        return not any(target)
    before = len(invariant_factors([list(v) for v in vectors]))
    after = len(invariant_factors([list(v) for v in vectors] + [list(target)]))
    return before == after
