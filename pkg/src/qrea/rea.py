"""Symbolic O_q(H(N)): PBW normal forms, star, quantum minors, central elements.

Generators Z_ij are numbered row-major, g = (i-1)N + (j-1); a word is in
normal order when its letters are non-decreasing.  The quadratic rewrite
rules ``x y -> sum c a b`` (x > y, a <= b) are obtained once per N by
row-reducing the N^4 scalar relations of the reflection equation over Q(q);
every coefficient turns out to be a Laurent polynomial and every right-hand
word is deglex-smaller than ``x y``, so rewriting terminates.  Confluence is
checked on all overlaps by :func:`overlap_defects`.
"""

from __future__ import annotations

import random
import re
import threading
from functools import lru_cache
from itertools import combinations, permutations, product
from typing import Iterable, Iterator, Mapping, Sequence

from .braid import build_rhat, minor_coeffs
from .combinatorics import descents_below, inversions, select, subsets, wt
from .scalars import ONE, ZERO, ExactQ, q_pow

Word = tuple[int, ...]

MINUS_Q = q_pow(1, -1)


class RewriteBudgetExceeded(RuntimeError):
    pass


class ConfluenceError(RuntimeError):
    pass


def gen_index(n: int, i: int, j: int) -> int:
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"generator Z_{i}{j} out of range for N={n}")
    return (i - 1) * n + (j - 1)


def gen_pair(n: int, g: int) -> tuple[int, int]:
    return g // n + 1, g % n + 1


# -- rewrite rules ------------------------------------------------------------

def _re_relations(n: int) -> list[dict]:
    """Entries of R12 Z23 R12 Z23 - Z23 R12 Z23 R12 as maps (g1, g2) -> ExactQ."""
    r = build_rhat(n).entries
    rows: dict[int, list] = {}
    for (a, b), v in r.items():
        rows.setdefault(a, []).append((b, v))

    def pair(x):
        return x // n + 1, x % n + 1

    def idx(a, b):
        return (a - 1) * n + (b - 1)

    rels = []
    for a, b, c, d in product(range(1, n + 1), repeat=4):
        acc: dict = {}
        # R Z R Z : (a,b) <-R- (a1,b1) <-Z- (a1,b2) <-R- (c,b3) <-Z- (c,d)
        for col, r1 in rows.get(idx(a, b), ()):
            a1, b1 = pair(col)
            for b2 in range(1, n + 1):
                for b3 in range(1, n + 1):
                    r2 = r.get((idx(a1, b2), idx(c, b3)))
                    if r2 is None:
                        continue
                    key = (gen_index(n, b1, b2), gen_index(n, b3, d))
                    acc[key] = acc.get(key, ZERO) + r1 * r2
        # Z R Z R : (a,b) <-Z- (a,b1) <-R- (a2,b2) <-Z- (a2,b3) <-R- (c,d)
        for b1 in range(1, n + 1):
            for col, r1 in rows.get(idx(a, b1), ()):
                a2, b2 = pair(col)
                for b3 in range(1, n + 1):
                    r2 = r.get((idx(a2, b3), idx(c, d)))
                    if r2 is None:
                        continue
                    key = (gen_index(n, b, b1), gen_index(n, b2, b3))
                    acc[key] = acc.get(key, ZERO) - r1 * r2
        acc = {k: v for k, v in acc.items() if v}
        if acc:
            rels.append(acc)
    return rels


def _to_sympy(x: ExactQ, q):
    import sympy as sp

    out = 0
    for e, (re_c, im_c) in x.terms().items():
        out += (sp.Rational(re_c.numerator, re_c.denominator)
                + sp.I * sp.Rational(im_c.numerator, im_c.denominator)) * q ** e
    return out


def _from_sympy(expr, q) -> ExactQ:
    import sympy as sp

    expr = sp.cancel(sp.together(expr))
    num, den = sp.fraction(expr)
    den_poly = sp.Poly(den, q)
    if len(den_poly.terms()) != 1:
        raise ConfluenceError(f"rewrite coefficient {expr} is not a Laurent polynomial")
    (((dexp,), dcoef),) = den_poly.terms()
    num_poly = sp.Poly(sp.expand(num), q)
    re_t, im_t = {}, {}
    from fractions import Fraction

    for (e,), c in num_poly.terms():
        c = sp.nsimplify(c / dcoef)
        re_c, im_c = sp.re(c), sp.im(c)
        if re_c:
            re_t[e - dexp] = Fraction(int(sp.numer(re_c)), int(sp.denom(re_c)))
        if im_c:
            im_t[e - dexp] = Fraction(int(sp.numer(im_c)), int(sp.denom(im_c)))
    return ExactQ(re_t, im_t)


def solve_quadratic_rules(rels: Sequence[Mapping[tuple[int, int], ExactQ]], letters: int,
                          label: str = "") -> dict[tuple[int, int], dict[tuple[int, int], ExactQ]]:
    """Solve quadratic relations for every out-of-order pair (x, y), x > y.

    Letters are 0..letters-1 and their integer order is the normal order.
    Returns rules (x, y) -> {(a, b): c} with a <= b.
    """
    import sympy as sp
    from sympy.polys.domains import QQ
    from sympy.polys.matrices import DomainMatrix

    q = sp.Symbol("q")
    ooo = sorted(((x, y) for x in range(letters) for y in range(letters) if x > y), reverse=True)
    ordered = [(x, y) for x in range(letters) for y in range(letters) if x <= y]
    if not ooo:
        return {}
    cols = ooo + ordered
    col_of = {m: c for c, m in enumerate(cols)}
    field = QQ.frac_field(q)
    rows = []
    for rel in rels:
        row = [field.zero] * len(cols)
        for m, v in rel.items():
            row[col_of[m]] = field.from_sympy(_to_sympy(v, q))
        rows.append(row)
    rref, pivots = DomainMatrix(rows, (len(rows), len(cols)), field).rref()
    if list(pivots)[:len(ooo)] != list(range(len(ooo))):
        raise ConfluenceError(f"{label}: relations do not solve for every out-of-order pair")
    if len(pivots) > len(ooo):
        raise ConfluenceError(f"{label}: relations force a linear dependence among ordered words")
    dense = rref.to_Matrix()
    rules = {}
    for r, p in enumerate(pivots):
        rhs = {}
        for c in range(len(ooo), len(cols)):
            v = dense[r, c]
            if v != 0:
                rhs[cols[c]] = _from_sympy(-v, q)
        rules[cols[p]] = rhs
    return rules


@lru_cache(maxsize=None)
def rewrite_rules(n: int) -> dict[tuple[int, int], dict[tuple[int, int], ExactQ]]:
    """Rules (x, y) -> {(a, b): c} for x > y, a <= b."""
    if n == 1:
        return {}
    return solve_quadratic_rules(_re_relations(n), n * n, label=f"N={n}")


# -- the algebra ----------------------------------------------------------------

class Rewriter:
    """Memoized normal ordering for a quadratic PBW rewrite system."""

    def __init__(self, rules: Mapping[tuple[int, int], Mapping[tuple[int, int], ExactQ]],
                 budget: int = 10 ** 6, name: str = ""):
        self.rules = rules
        self.budget = budget
        self.name = name
        self._lmemo: dict = {}
        self._rmemo: dict = {}
        self._steps = 0

    # core rewriting: g * w with w normal
    def _tick(self):
        self._steps += 1
        if self._steps > self.budget:
            raise RewriteBudgetExceeded(f"rewrite budget {self.budget} exceeded ({self.name})")

    def lmul(self, g: int, w: Word) -> dict:
        key = (g, w)
        hit = self._lmemo.get(key)
        if hit is not None:
            return hit
        if not w or g <= w[0]:
            out = {(g,) + w: ONE}
        else:
            self._tick()
            out: dict = {}
            for (a, b), c in self.rules[(g, w[0])].items():
                for v1, c1 in self.lmul(b, w[1:]).items():
                    for v2, c2 in self.lmul(a, v1).items():
                        out[v2] = out.get(v2, ZERO) + c * c1 * c2
            out = {k: v for k, v in out.items() if v}
        self._lmemo[key] = out
        return out

    def rmul(self, w: Word, g: int) -> dict:
        key = (w, g)
        hit = self._rmemo.get(key)
        if hit is not None:
            return hit
        if not w or w[-1] <= g:
            out = {w + (g,): ONE}
        else:
            self._tick()
            out: dict = {}
            for (a, b), c in self.rules[(w[-1], g)].items():
                for v1, c1 in self.rmul(w[:-1], a).items():
                    for v2, c2 in self.rmul(v1, b).items():
                        out[v2] = out.get(v2, ZERO) + c * c1 * c2
            out = {k: v for k, v in out.items() if v}
        self._rmemo[key] = out
        return out

    def normal_word(self, w: Word) -> dict:
        """Normal form of a free word, inserting letters right to left."""
        self._steps = 0
        cur = {(): ONE}
        for g in reversed(w):
            nxt: dict = {}
            for v, c in cur.items():
                for v2, c2 in self.lmul(g, v).items():
                    nxt[v2] = nxt.get(v2, ZERO) + c * c2
            cur = {k: v for k, v in nxt.items() if v}
        return cur

    def normal_word_random(self, w: Word, rng: random.Random, budget: int | None = None) -> dict:
        """Normal form by rewriting a randomly chosen out-of-order pair at each step."""
        budget = budget or self.budget
        todo = {tuple(w): ONE}
        done: dict = {}
        steps = 0
        while todo:
            word, c = todo.popitem()
            bad = [p for p in range(len(word) - 1) if word[p] > word[p + 1]]
            if not bad:
                done[word] = done.get(word, ZERO) + c
                continue
            steps += 1
            if steps > budget:
                raise RewriteBudgetExceeded(f"random rewriting exceeded {budget} steps")
            p = rng.choice(bad)
            for (a, b), c2 in self.rules[(word[p], word[p + 1])].items():
                nw = word[:p] + (a, b) + word[p + 2:]
                val = todo.get(nw, ZERO) + c * c2
                if val:
                    todo[nw] = val
                else:
                    todo.pop(nw, None)
        return {k: v for k, v in done.items() if v}

    def normal_terms(self, terms: Mapping[Word, ExactQ]) -> dict:
        out: dict = {}
        for w, c in terms.items():
            for v, c2 in self.normal_word(w).items():
                out[v] = out.get(v, ZERO) + c * c2
        return {k: v for k, v in out.items() if v}

    def mul_normal(self, a: Mapping[Word, ExactQ], b: Mapping[Word, ExactQ]) -> dict:
        out: dict = {}
        for w2, c2 in b.items():
            cur = {w2: ONE}
            # insertion of w1 letters is shared across all w1 with the same suffix
            for w1, c1 in a.items():
                res = cur
                for g in reversed(w1):
                    nxt: dict = {}
                    for v, c in res.items():
                        for v2, c3 in self.lmul(g, v).items():
                            nxt[v2] = nxt.get(v2, ZERO) + c * c3
                    res = nxt
                coef = c1 * c2
                for v, c in res.items():
                    out[v] = out.get(v, ZERO) + coef * c
        return {k: v for k, v in out.items() if v}


class REA(Rewriter):
    """Rewriting context for O_q(H(N)); one shared instance per N via :func:`algebra`."""

    def __init__(self, n: int, budget: int = 10 ** 6):
        super().__init__(rewrite_rules(n), budget, name=f"N={n}")
        self.n = n

    def gen(self, i: int, j: int) -> "NCPoly":
        return NCPoly(self, {(gen_index(self.n, i, j),): ONE})

    def one(self) -> "NCPoly":
        return NCPoly(self, {(): ONE})

    def zero(self) -> "NCPoly":
        return NCPoly(self, {})

    def scalar(self, c) -> "NCPoly":
        c = ExactQ.const(c)
        return NCPoly(self, {(): c} if c else {})

    def normal_form(self, p: "NCPoly | Mapping[Word, ExactQ]") -> "NCPoly":
        terms = p.terms if isinstance(p, NCPoly) else p
        return NCPoly(self, self.normal_terms(terms), normal=True)


_ALGEBRAS: dict[int, REA] = {}
_ALG_LOCK = threading.Lock()


def algebra(n: int) -> REA:
    with _ALG_LOCK:
        if n not in _ALGEBRAS:
            _ALGEBRAS[n] = REA(n)
        return _ALGEBRAS[n]


def overlap_defects(n: int) -> list[tuple[int, int, int]]:
    """Overlaps x > y > z where (xy)z and x(yz) reduce differently (diamond lemma)."""
    return rewriter_overlap_defects(algebra(n), n * n)


def rewriter_overlap_defects(alg: Rewriter, letters: int) -> list[tuple[int, int, int]]:
    bad = []
    for x, y, z in combinations(range(letters - 1, -1, -1), 3):
        # x > y > z
        left: dict = {}
        for (a, b), c in alg.rules[(x, y)].items():
            for v, c2 in alg.rmul((a, b), z).items():
                left[v] = left.get(v, ZERO) + c * c2
        right: dict = {}
        for (a, b), c in alg.rules[(y, z)].items():
            for v, c2 in alg.lmul(x, (a, b)).items():
                right[v] = right.get(v, ZERO) + c * c2
        left = {k: v for k, v in left.items() if v}
        right = {k: v for k, v in right.items() if v}
        if left != right:
            bad.append((x, y, z))
    return bad


# -- elements ---------------------------------------------------------------------

class NCPoly:
    """Linear combination of words in the generators of O_q(H(N))."""

    __slots__ = ("alg", "terms", "normal")

    def __init__(self, alg: REA, terms: Mapping[Word, ExactQ], normal: bool = False):
        self.alg = alg
        self.terms = dict(terms)
        self.normal = normal

    @property
    def n(self) -> int:
        return self.alg.n

    def normal_form(self) -> "NCPoly":
        return self if self.normal else self.alg.normal_form(self)

    def is_zero(self) -> bool:
        return not self.normal_form().terms

    def __add__(self, other: "NCPoly") -> "NCPoly":
        if not isinstance(other, NCPoly):
            other = self.alg.scalar(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, ZERO) + c
        return NCPoly(self.alg, {k: v for k, v in out.items() if v},
                      normal=self.normal and other.normal)

    def __neg__(self) -> "NCPoly":
        return NCPoly(self.alg, {w: -c for w, c in self.terms.items()}, self.normal)

    def __sub__(self, other: "NCPoly") -> "NCPoly":
        return self + (-other if isinstance(other, NCPoly) else self.alg.scalar(-ExactQ.const(other)))

    def __mul__(self, other) -> "NCPoly":
        if isinstance(other, NCPoly):
            a = self.normal_form().terms
            b = other.normal_form().terms
            return NCPoly(self.alg, self.alg.mul_normal(a, b), normal=True)
        c = ExactQ.const(other)
        return NCPoly(self.alg, {w: v * c for w, v in self.terms.items() if v * c}, self.normal)

    def __rmul__(self, other) -> "NCPoly":
        c = ExactQ.const(other)
        return NCPoly(self.alg, {w: c * v for w, v in self.terms.items() if c * v}, self.normal)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NCPoly):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def star(self) -> "NCPoly":
        n = self.n
        out: dict = {}
        for w, c in self.terms.items():
            sw = tuple(gen_index(n, *reversed(gen_pair(n, g))) for g in reversed(w))
            out[sw] = out.get(sw, ZERO) + c.star()
        return self.alg.normal_form({k: v for k, v in out.items() if v})

    def words(self) -> list[tuple[tuple[int, int], ...]]:
        return [tuple(gen_pair(self.n, g) for g in w) for w in self.terms]

    def to_str(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for w in sorted(self.terms, key=lambda w: (len(w), w)):
            name = "*".join(f"Z[{i},{j}]" for i, j in (gen_pair(self.n, g) for g in w)) or "1"
            parts.append(f"({self.terms[w].to_str()})*{name}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"NCPoly(N={self.n}, {self.to_str()})"


def normal_form(p: NCPoly) -> NCPoly:
    return p.alg.normal_form(p)


def star(p: NCPoly) -> NCPoly:
    return p.star()


def commutator(a: NCPoly, b: NCPoly) -> NCPoly:
    return a * b - b * a


# -- quantum minors -----------------------------------------------------------------

def _poly_from_terms(alg: REA, terms: dict) -> NCPoly:
    return NCPoly(alg, {k: v for k, v in terms.items() if v}, normal=True)


@lru_cache(maxsize=None)
def _minor_terms(n: int, i: tuple, j: tuple) -> tuple:
    alg = algebra(n)
    k = len(i)
    if k == 0:
        return (((), ONE),)
    if k == 1:
        return (((gen_index(n, i[0], j[0]),), ONE),)
    p = laplace_expansion(n, i, j, (1,), 1)
    return tuple(p.terms.items())


def quantum_minor(n: int, i: Sequence[int], j: Sequence[int]) -> NCPoly:
    """Z_{I,J}, built by the m = 1, K = {1} row expansion."""
    i, j = tuple(sorted(i)), tuple(sorted(j))
    if len(i) != len(j):
        raise ValueError(f"minor needs |I| = |J|, got {i}, {j}")
    if len(set(i)) != len(i) or len(set(j)) != len(j):
        raise ValueError("index sets must not repeat elements")
    alg = algebra(n)
    return NCPoly(alg, dict(_minor_terms(n, i, j)), normal=True)


def laplace_expansion(n: int, i: Sequence[int], j: Sequence[int], kset: Sequence[int],
                      which: int) -> NCPoly:
    """Right-hand side of the four Laplace expansions of Z_{I,J} (which = 1..4).

    ``kset`` is the set K of positions, 1 <= |K| = m <= k.
    """
    i, j, kset = tuple(i), tuple(j), tuple(sorted(kset))
    k, m = len(i), len(kset)
    alg = algebra(n)
    rt = minor_coeffs(n, m, k - m)
    out: dict = {}

    def add(coef: ExactQ, left: NCPoly, right: NCPoly):
        if not coef:
            return
        for w, c in alg.mul_normal(left.terms, right.terms).items():
            out[w] = out.get(w, ZERO) + coef * c

    wk = wt(kset)
    sets_m = subsets(n, m)
    sets_r = subsets(n, k - m)
    for pset in combinations(range(1, k + 1), m):
        sign = MINUS_Q ** (wt(pset) - wk)
        if which == 1:
            i_k, i_uk = select(i, kset)
            j_p, j_up = select(j, pset)
            for s, tp in product(sets_m, sets_r):
                a = rt.get_inv(s, i_k, i_uk, tp)
                if not a:
                    continue
                for t, sp_ in product(sets_m, sets_r):
                    b = rt.get(j_p, t, tp, sp_)
                    if b:
                        add(sign * a * b, quantum_minor(n, s, t), quantum_minor(n, sp_, j_up))
        elif which == 2:
            j_k, j_uk = select(j, kset)
            i_p, i_up = select(i, pset)
            for t, sp_ in product(sets_m, sets_r):
                a = rt.get_inv(t, j_k, j_uk, sp_)
                if not a:
                    continue
                for s, tp in product(sets_m, sets_r):
                    b = rt.get(i_p, s, sp_, tp)
                    if b:
                        add(sign * a * b, quantum_minor(n, i_up, tp), quantum_minor(n, s, t))
        elif which == 3:
            i_p, i_up = select(i, pset)
            j_k, j_uk = select(j, kset)
            for s, tp in product(sets_m, sets_r):
                a = rt.get_inv(s, i_p, i_up, tp)
                if not a:
                    continue
                for t, sp_ in product(sets_m, sets_r):
                    b = rt.get(j_k, t, tp, sp_)
                    if b:
                        add(sign * a * b, quantum_minor(n, s, t), quantum_minor(n, sp_, j_uk))
        elif which == 4:
            j_p, j_up = select(j, pset)
            i_k, i_uk = select(i, kset)
            for t, sp_ in product(sets_m, sets_r):
                a = rt.get_inv(t, j_p, j_up, sp_)
                if not a:
                    continue
                for s, tp in product(sets_m, sets_r):
                    b = rt.get(i_k, s, sp_, tp)
                    if b:
                        add(sign * a * b, quantum_minor(n, i_uk, tp), quantum_minor(n, s, t))
        else:
            raise ValueError("which must be 1, 2, 3 or 4")
    return _poly_from_terms(alg, out)


def minus_q_pow(e: int) -> ExactQ:
    return MINUS_Q ** e


# -- central elements -----------------------------------------------------------------

@lru_cache(maxsize=None)
def _sigma_terms(k: int, n: int) -> tuple:
    alg = algebra(n)
    free: dict = {}
    for iset in combinations(range(1, n + 1), k):
        for perm in permutations(iset):
            # sigma permutes [N] and fixes the complement of I; its length counts all of [N]
            sig = {a: a for a in range(1, n + 1)}
            sig.update(zip(iset, perm))
            coef = (q_pow(2 * n * k - 2 * wt(iset)) * minus_q_pow(-inversions(sig))
                    * q_pow(-descents_below(sig)))
            word = tuple(gen_index(n, a, sig[a]) for a in reversed(iset))
            free[word] = free.get(word, ZERO) + coef
    return tuple(alg.normal_form(free).terms.items())


def sigma(k: int, n: int) -> NCPoly:
    if not 1 <= k <= n:
        raise ValueError(f"sigma_k needs 1 <= k <= N, got k={k}, N={n}")
    return NCPoly(algebra(n), dict(_sigma_terms(k, n)), normal=True)


def project_quotient(p: NCPoly, m: int) -> NCPoly:
    """Image in O_q(H(N-M)) after killing Z_ij with i <= M or j <= M."""
    n = p.n
    if not 0 <= m < n:
        raise ValueError(f"need 0 <= M < N, got M={m}, N={n}")
    target = algebra(n - m)
    out: dict = {}
    for w, c in p.terms.items():
        pairs = [gen_pair(n, g) for g in w]
        if any(a <= m or b <= m for a, b in pairs):
            continue
        nw = tuple(gen_index(n - m, a - m, b - m) for a, b in pairs)
        out[nw] = out.get(nw, ZERO) + c
    return target.normal_form({k: v for k, v in out.items() if v})


def entry_relation_residual(n: int, i: int, j: int, k: int, l: int) -> NCPoly:
    """LHS - RHS of the explicit generator relation for (i,j,k,l), normal-formed."""
    alg = algebra(n)
    z = alg.gen
    d = lambda a, b: 1 if a == b else 0
    lt = lambda a, b: 1 if a < b else 0
    c1 = q_pow(-1) - q_pow(1)
    lhs = z(i, j) * z(k, l) * q_pow(-d(i, k) - d(j, k))
    if lt(k, i):
        lhs = lhs + z(k, j) * z(i, l) * (c1 * q_pow(-d(i, j)))
    if d(j, k):
        for p in range(1, j):
            lhs = lhs + z(i, p) * z(p, l) * (c1 * q_pow(-d(i, j)))
    if d(i, j) and lt(k, i):
        for p in range(1, i):
            lhs = lhs + z(k, p) * z(p, l) * (c1 * c1)
    rhs = z(k, l) * z(i, j) * q_pow(-d(i, l) - d(j, l))
    if lt(l, j):
        rhs = rhs + z(k, j) * z(i, l) * (c1 * q_pow(-d(i, j)))
    if d(i, l):
        for p in range(1, i):
            rhs = rhs + z(k, p) * z(p, j) * (c1 * q_pow(-d(i, j)))
    if d(i, j) and lt(l, j):
        for p in range(1, j):
            rhs = rhs + z(k, p) * z(p, l) * (c1 * c1)
    return (lhs - rhs).normal_form()


# -- identities ---------------------------------------------------------------------

def general_comm_residual(n: int, i, j, i2, j2) -> NCPoly:
    """Two sides of the commutation relation between minors of sizes |I| and |I'|."""
    i, j, i2, j2 = map(tuple, (i, j, i2, j2))
    a, b = len(i), len(i2)
    alg = algebra(n)
    t_ab = minor_coeffs(n, a, b)
    t_ba = minor_coeffs(n, b, a)
    sa, sb = subsets(n, a), subsets(n, b)
    out: dict = {}

    def add(coef, left, right, sign=1):
        if coef:
            for w, c in alg.mul_normal(left.terms, right.terms).items():
                out[w] = out.get(w, ZERO) + (coef * c if sign > 0 else -(coef * c))

    for k_, l_ in product(sa, sa):
        for l2 in sb:
            lhs = ZERO
            rhs = ZERO
            for p2 in sb:
                lhs = lhs + t_ba.get(p2, i2, j, k_) * t_ab.get(i, l_, p2, l2)
                rhs = rhs + t_ba.get(p2, l2, j, k_) * t_ab.get(i, l_, p2, j2)
            add(lhs, quantum_minor(n, k_, l_), quantum_minor(n, l2, j2))
            add(rhs, quantum_minor(n, i2, l2), quantum_minor(n, k_, l_), sign=-1)
    return _poly_from_terms(alg, out)


def _muir_lhs(n, i, j, f, g) -> NCPoly:
    k, s = len(i), len(f)
    alg = algebra(n)
    rt = minor_coeffs(n, k, s)
    i_f, _ = select(i, f)
    j_g, _ = select(j, g)
    out: dict = {}
    for s_, h in product(subsets(n, k), subsets(n, s)):
        a = rt.get_inv(s_, i, i_f, h)
        if not a:
            continue
        for t, l_ in product(subsets(n, k), subsets(n, s)):
            b = rt.get(j, t, h, l_)
            if b:
                for w, c in alg.mul_normal(quantum_minor(n, s_, t).terms,
                                           quantum_minor(n, l_, j_g).terms).items():
                    out[w] = out.get(w, ZERO) + a * b * c
    return _poly_from_terms(alg, out)


def _muir_rhs(n, i, j, f, g, kk, kk2, form: int) -> NCPoly:
    """Common-submatrix expansion; form 1 sums P over the column side, form 2 over the row side."""
    alg = algebra(n)
    k, r = len(i), len(i) - len(f)
    l = len(kk)
    i_f, i_uf = select(i, f)
    j_g, j_ug = select(j, g)
    size_a, size_d = k - r + l, k - l
    rt = minor_coeffs(n, size_a, size_d)
    out: dict = {}
    for pset in combinations(range(1, r + 1), l):
        sign = MINUS_Q ** (wt(pset) - wt(kk))
        if form == 1:
            row_k, col_p = kk, pset
        else:
            row_k, col_p = pset, kk
        up = tuple(sorted(i_f + select(i_uf, row_k)[0]))
        low = tuple(sorted(i_f + select(i_uf, kk2 if form == 1 else pset)[1]))
        jc = tuple(sorted(j_g + select(j_ug, col_p)[0]))
        jd = tuple(sorted(j_g + select(j_ug, col_p if form == 1 else kk2)[1]))
        for a_, b_ in product(subsets(n, size_a), subsets(n, size_d)):
            x = rt.get_inv(a_, up, low, b_)
            if not x:
                continue
            for c_, d_ in product(subsets(n, size_a), subsets(n, size_d)):
                y = rt.get(jc, c_, b_, d_)
                if y:
                    for w, c in alg.mul_normal(quantum_minor(n, a_, c_).terms,
                                               quantum_minor(n, d_, jd).terms).items():
                        out[w] = out.get(w, ZERO) + sign * x * y * c
    return _poly_from_terms(alg, out)


def muir_residual(n: int, i, j, f, g, kk, kk2, form: int) -> NCPoly:
    """delta_{K,K'} * (shared-block expansion) minus the form-1 or form-2 sum."""
    i, j, f, g, kk, kk2 = map(lambda x: tuple(sorted(x)), (i, j, f, g, kk, kk2))
    lhs = _muir_lhs(n, i, j, f, g) if kk == kk2 else algebra(n).zero()
    return (lhs - _muir_rhs(n, i, j, f, g, kk, kk2, form)).normal_form()


REA_IDS = ("laplace-agreement", "general-comm", "muir-1", "muir-2", "centrality",
           "qdet-sigma", "laplace-star-link")


def _sets(n, k):
    return list(combinations(range(1, n + 1), k))


def _cases(identity: str, n: int, max_k: int) -> Iterator[tuple]:
    ks = range(1, min(n, max_k) + 1)
    if identity == "laplace-agreement":
        for k in ks:
            if k < 2:
                continue
            for i, j in product(_sets(n, k), repeat=2):
                for m in range(1, k + 1):
                    for kset in combinations(range(1, k + 1), m):
                        for which in (1, 2, 3, 4):
                            yield (i, j, kset, which)
    elif identity == "general-comm":
        for a, b in product(ks, repeat=2):
            for i, j in product(_sets(n, a), repeat=2):
                for i2, j2 in product(_sets(n, b), repeat=2):
                    yield (i, j, i2, j2)
    elif identity in ("muir-1", "muir-2"):
        for k in ks:
            for r in range(1, k):
                for l in range(0, r + 1):
                    for i, j in product(_sets(n, k), repeat=2):
                        for f, g in product(combinations(range(1, k + 1), k - r), repeat=2):
                            for kk, kk2 in product(combinations(range(1, r + 1), l), repeat=2):
                                yield (i, j, f, g, kk, kk2)
    elif identity == "centrality":
        for k in range(1, n + 1):
            for a, b in product(range(1, n + 1), repeat=2):
                yield (k, a, b)
    elif identity == "qdet-sigma":
        yield ()
    elif identity == "laplace-star-link":
        for k in ks:
            for i, j in product(_sets(n, k), repeat=2):
                yield (i, j)


def _residual(identity: str, n: int, case: tuple) -> NCPoly:
    if identity == "laplace-agreement":
        i, j, kset, which = case
        return laplace_expansion(n, i, j, kset, which) - quantum_minor(n, i, j)
    if identity == "general-comm":
        return general_comm_residual(n, *case)
    if identity == "muir-1":
        return muir_residual(n, *case, form=1)
    if identity == "muir-2":
        return muir_residual(n, *case, form=2)
    if identity == "centrality":
        k, a, b = case
        return commutator(sigma(k, n), algebra(n).gen(a, b))
    if identity == "qdet-sigma":
        top = tuple(range(1, n + 1))
        return quantum_minor(n, top, top) - sigma(n, n) * q_pow(-n * (n - 1))
    if identity == "laplace-star-link":
        i, j = case
        return quantum_minor(n, i, j).star() - quantum_minor(n, j, i)
    raise ValueError(f"unknown identity {identity!r}")


def verify_identity(identity: str, n: int, params: Mapping | None = None) -> dict:
    """Normal-form both sides of an identity over admissible index data.

    ``params`` may hold ``cases`` (explicit index tuples), ``max_k``, ``sample``
    and ``seed``.  Without explicit cases the data is enumerated exhaustively
    for N <= 3 and sampled (default 20 cases) above that.
    """
    if identity not in REA_IDS:
        raise ValueError(f"unknown identity {identity!r}")
    params = dict(params or {})
    max_n = params.get("max_n", 5)
    if n > max_n:
        raise ValueError(f"N={n} exceeds configured bound {max_n}")
    if "cases" in params:
        cases = [tuple(tuple(x) if isinstance(x, (list, tuple)) else x for x in c)
                 for c in params["cases"]]
    else:
        cases = list(_cases(identity, n, params.get("max_k", 3)))
        sample = params.get("sample", None if n <= 3 else 20)
        if sample is not None and sample < len(cases):
            cases = random.Random(params.get("seed", 0)).sample(cases, sample)
    report = {"identity": identity, "n": n, "passed": True, "instances": 0, "failures": []}
    for case in cases:
        res = _residual(identity, n, case).normal_form()
        report["instances"] += 1
        if res.terms:
            report["passed"] = False
            report["failures"].append({"witness": [list(x) if isinstance(x, tuple) else x
                                                   for x in case],
                                       "residual": res.to_str()})
    return report


def parse_ncpoly(n: int, text: str) -> NCPoly:
    """Inverse of :meth:`NCPoly.to_str`."""
    alg = algebra(n)
    text = text.strip()
    if text == "0":
        return alg.zero()
    out: dict = {}
    for part in re.split(r" \+ (?=\()", text):
        part = part.strip()[1:]
        coef, _, name = part.rpartition(")*")
        word = () if name == "1" else tuple(
            gen_index(n, *map(int, f[2:-1].split(","))) for f in name.split("*"))
        out[word] = out.get(word, ZERO) + ExactQ.parse(coef)
    return alg.normal_form(out)
