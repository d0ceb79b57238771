"""The triangular algebra O_q^eps(T(N)) and its highest-weight (Verma-type) modules.

Generators are T_ij (i < j), the diagonal T_ii and the adjoints T_ij* (i < j),
numbered so that integer order is the PBW order

    T_ij (i<j, lex)  <  T_ii  <  T_ij* (i<j, lex).

Normal words therefore read raising-free part left, diagonal middle,
adjoints right, which is the order needed to evaluate on a highest weight
vector: any word ending in an adjoint kills v0 and T_ii v0 = q^{r_i} v0.
The quadratic relations are

    R T1 T2 = T1 T2 R,   its adjoint,   T2 R T2* = T1* R_eps T1,

and are solved for every out-of-order pair exactly as for O_q(H(N)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .braid import build_rhat, build_rhat_eps, check_standard_form, eps_interval
from .rea import Rewriter, rewriter_overlap_defects, solve_quadratic_rules
from .scalars import ZERO, ExactQ

KIND_T, KIND_D, KIND_S = "T", "D", "S"


@dataclass(frozen=True)
class Letters:
    """Numbering of the generators of O_q^eps(T(N))."""

    n: int

    @property
    def upper(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(1, self.n + 1) for j in range(i + 1, self.n + 1)]

    @property
    def count(self) -> int:
        return 2 * len(self.upper) + self.n

    def t(self, i: int, j: int) -> int:
        """T_ij for i <= j (the diagonal letter when i == j)."""
        if i == j:
            return len(self.upper) + i - 1
        if i > j:
            raise ValueError(f"T_{i}{j} is zero in the triangular algebra")
        return self.upper.index((i, j))

    def s(self, i: int, j: int) -> int:
        """T_ij* for i <= j."""
        if i == j:
            return self.t(i, i)
        return len(self.upper) + self.n + self.upper.index((i, j))

    def describe(self, g: int) -> tuple[str, int, int]:
        m = len(self.upper)
        if g < m:
            return (KIND_T,) + self.upper[g]
        if g < m + self.n:
            i = g - m + 1
            return (KIND_D, i, i)
        return (KIND_S,) + self.upper[g - m - self.n]

    def star(self, g: int) -> int:
        kind, i, j = self.describe(g)
        if kind == KIND_T:
            return self.s(i, j)
        if kind == KIND_S:
            return self.t(i, j)
        return g


def _relations(n: int, eps: tuple[int, ...]) -> list[dict]:
    lt = Letters(n)
    r = build_rhat(n).entries
    re_ = build_rhat_eps(n, eps).entries
    idx = [(a, b) for a in range(1, n + 1) for b in range(1, n + 1)]

    def pos(a, b):
        return (a - 1) * n + (b - 1)

    def tg(a, b):  # matrix entry T_ab
        return lt.t(a, b) if a <= b else None

    def ts(a, b):  # matrix entry (T*)_ab = (T_ba)*
        return lt.s(b, a) if b <= a else None

    def add(d, m, v):
        if None in m or not v:
            return
        d[m] = d.get(m, ZERO) + v

    rels = []
    for (a, b), (e, f) in product(idx, idx):
        # R T1 T2 - T1 T2 R
        d: dict = {}
        for c, dd in idx:
            v = r.get((pos(a, b), pos(c, dd)))
            if v:
                add(d, (tg(c, e), tg(dd, f)), v)
            v = r.get((pos(c, dd), pos(e, f)))
            if v:
                add(d, (tg(a, c), tg(b, dd)), -v)
        d = {k: v for k, v in d.items() if v}
        if d:
            rels.append(d)
            rels.append({(lt.star(y), lt.star(x)): v.star() for (x, y), v in d.items()})
        # T2 R T2* - T1* R_eps T1
        d = {}
        for dd, d2 in product(range(1, n + 1), repeat=2):
            v = r.get((pos(a, dd), pos(e, d2)))
            if v:
                add(d, (tg(b, dd), ts(d2, f)), v)
            v = re_.get((pos(dd, b), pos(d2, f)))
            if v:
                add(d, (ts(a, dd), tg(d2, e)), -v)
        d = {k: v for k, v in d.items() if v}
        if d:
            rels.append(d)
    return rels


@lru_cache(maxsize=None)
def triangular_rules(n: int, eps: tuple[int, ...]) -> dict:
    check_standard_form(eps)
    if len(eps) != n:
        raise ValueError("eps must have length N")
    return solve_quadratic_rules(_relations(n, eps), Letters(n).count, label=f"T(N={n}), eps={eps}")


@lru_cache(maxsize=None)
def triangular_algebra(n: int, eps: tuple[int, ...]) -> Rewriter:
    return Rewriter(triangular_rules(n, tuple(eps)), name=f"T(N={n}), eps={tuple(eps)}")


def triangular_overlap_defects(n: int, eps: tuple[int, ...]) -> list:
    return rewriter_overlap_defects(triangular_algebra(n, tuple(eps)), Letters(n).count)


# -- adaptedness ----------------------------------------------------------------

def is_epsilon_adapted(eps: Sequence[int], r: Sequence[float], tol: float = 1e-9) -> bool:
    """(r_t + t) - (r_s + s) is a positive integer whenever eps_(s,t] = 1, s < t <= M."""
    m = check_standard_form(eps)
    if len(r) != m:
        raise ValueError(f"weight has length {len(r)}, expected rank {m}")
    for s in range(1, m + 1):
        for t in range(s + 1, m + 1):
            if eps_interval(eps, s, t) != 1:
                continue
            diff = (r[t - 1] + t) - (r[s - 1] + s)
            if abs(diff - round(diff)) > tol or round(diff) < 1:
                return False
    return True


# -- highest weight modules ---------------------------------------------------

BLOCK_FLOOR = 1e-10  # Gram blocks below this, relative to their term magnitudes, are null


class NotUnitarizable(ValueError):
    """The Gram form of a highest weight module has a negative direction."""

    def __init__(self, message: str, witness: dict):
        super().__init__(message)
        self.witness = witness


@dataclass
class VermaModule:
    """Truncated highest-weight module of O_q^eps(T(N)) with its Gram form.

    ``basis`` lists PBW words in the T_ij (i<j) applied to v0, up to height
    ``cutoff`` (height of T_ij is j - i).  ``ops[g]`` is the action of letter g
    on that basis; columns of height h are exact when h + (j - i) <= cutoff
    for raising letters and always exact for the others.
    """

    n: int
    eps: tuple[int, ...]
    r: tuple[float, ...]
    cutoff: int
    q0: float
    basis: list[tuple[int, ...]]
    heights: np.ndarray
    weights: list[tuple[int, ...]]
    ops: dict[int, np.ndarray]
    gram: np.ndarray
    on_basis: np.ndarray = field(repr=False)  # columns: orthonormal vectors in PBW coordinates
    on_heights: np.ndarray = field(repr=False)
    gram_eigenvalues: dict = field(repr=False)  # weight -> eigenvalues / term magnitude of the block

    @property
    def letters(self) -> Letters:
        return Letters(self.n)

    def t_op(self, i: int, j: int) -> np.ndarray:
        return self.ops[self.letters.t(i, j)]

    def s_op(self, i: int, j: int) -> np.ndarray:
        return self.ops[self.letters.s(i, j)]

    def min_relative_eigenvalue(self) -> float:
        """Most negative Gram eigenvalue relative to the size of its weight space (0 if none)."""
        return min([0.0] + [float(np.min(v)) for v in self.gram_eigenvalues.values()])

    def min_block_ratio(self, floor: float = BLOCK_FLOOR) -> float:
        """Most negative ratio lambda_min / max|lambda| over weight spaces (0 if none).

        Weight spaces whose whole Gram block is below ``floor`` times the size of
        the terms that produced it are null and are skipped.
        """
        return min([0.0] + [_block_ratio(v, floor) for v in self.gram_eigenvalues.values()])


def _block_ratio(vals: np.ndarray, floor: float) -> float:
    big = float(np.max(np.abs(vals), initial=0.0))
    if big <= floor:
        return 0.0
    return min(0.0, float(vals[0]) / big)


def _t_monomials(lt: Letters, cutoff: int) -> list[tuple[int, ...]]:
    ups = [lt.t(i, j) for i, j in lt.upper]
    hts = {lt.t(i, j): j - i for i, j in lt.upper}
    out: list[tuple[int, ...]] = [()]

    def grow(word, start, h):
        for p in range(start, len(ups)):
            g = ups[p]
            if h + hts[g] <= cutoff:
                w = word + (g,)
                out.append(w)
                grow(w, p, h + hts[g])

    grow((), 0, 0)
    return sorted(out, key=lambda w: (sum(hts[g] for g in w), w))


def build_verma(eps: Sequence[int], r: Sequence[float], cutoff: int, q0: float = 0.5,
                null_tol: float = 1e-10, neg_tol: float = 1e-9,
                require_positive: bool = True) -> VermaModule:
    """Highest weight module with T_ii v0 = q^{r_i} v0 (i <= M) and T_ij* v0 = 0.

    T_ii for i > M acts as 1 on v0; no O_q(H(N)) element sees it.
    """
    eps = tuple(int(e) for e in eps)
    n = len(eps)
    m = check_standard_form(eps)
    if len(r) != m:
        raise ValueError(f"weight has length {len(r)}, expected rank {m}")
    if not (0.0 < q0 < 1.0):
        raise ValueError("q0 must lie in (0, 1)")
    lt = Letters(n)
    rw = triangular_algebra(n, eps)
    basis = _t_monomials(lt, cutoff)
    index = {w: p for p, w in enumerate(basis)}
    dvals = [q0 ** r[i] if i < m else 1.0 for i in range(n)]

    def weight(w):
        out = [0] * n
        for g in w:
            _, i, j = lt.describe(g)
            out[i - 1] += 1
            out[j - 1] -= 1
        return tuple(out)

    heights = np.array([sum(lt.describe(g)[2] - lt.describe(g)[1] for g in w) for w in basis])
    weights = [weight(w) for w in basis]
    dim = len(basis)
    nt = len(lt.upper)
    ops: dict[int, np.ndarray] = {}
    abs_ops: dict[int, np.ndarray] = {}
    for g in range(lt.count):
        a = np.zeros((dim, dim))
        a_abs = np.zeros((dim, dim))
        for col, w in enumerate(basis):
            for word, c in rw.lmul(g, w).items():
                p = 0
                while p < len(word) and word[p] < nt:
                    p += 1
                tpart, rest = word[:p], word[p:]
                if any(x >= nt + n for x in rest):
                    continue
                row = index.get(tpart)
                if row is None:
                    continue
                val = c.eval(q0).real
                for x in rest:
                    val *= dvals[x - nt]
                a[row, col] += val
                a_abs[row, col] += abs(val)
        ops[g] = a
        abs_ops[g] = a_abs

    # Gram: <m_a v0, m_b v0> = <v0, m_a* m_b v0>
    # the same recurrence on term magnitudes bounds the round-off of every Gram entry
    gram = np.zeros((dim, dim))
    gram_abs = np.zeros((dim, dim))
    for a_idx, w in enumerate(basis):
        row = np.zeros(dim)
        row[0] = 1.0
        row_abs = row.copy()
        for g in reversed(w):
            row = row @ ops[lt.star(g)]
            row_abs = row_abs @ abs_ops[lt.star(g)]
        gram[a_idx] = row
        gram_abs[a_idx] = row_abs
    asym = np.max(np.abs(gram - gram.T) / np.maximum(gram_abs + gram_abs.T, 1e-300)) if dim else 0.0
    if asym > 1e-8:
        raise ArithmeticError(f"Gram form is not symmetric (relative defect {asym:.3e})")
    gram = (gram + gram.T) / 2

    blocks: dict[tuple[int, ...], list[int]] = {}
    for p, w in enumerate(weights):
        blocks.setdefault(w, []).append(p)
    # each weight space is judged against the magnitude of the terms that built it
    cols, col_h, eig_record = [], [], {}
    for w, members in blocks.items():
        sub = gram[np.ix_(members, members)]
        scale = max(float(np.max(np.diag(gram_abs)[members])), 1e-300)
        vals, vecs = np.linalg.eigh(sub)
        eig_record[w] = vals / scale
        h = heights[members[0]]
        ratio = _block_ratio(vals / scale, BLOCK_FLOOR)
        if require_positive and ratio < -neg_tol:
            raise NotUnitarizable(
                f"Gram form has a negative eigenvalue {ratio:.3e} (relative to its weight space) at weight {w}"
                f" (height {h})",
                {"weight": list(w), "height": int(h), "relative_eigenvalue": ratio})
        for k, lam in enumerate(vals):
            if lam > null_tol * scale:
                v = np.zeros(dim)
                v[members] = vecs[:, k] / np.sqrt(lam)
                cols.append(v)
                col_h.append(h)
    order = np.argsort(col_h, kind="stable")
    on_basis = np.array(cols).T[:, order] if cols else np.zeros((dim, 0))
    return VermaModule(n, eps, tuple(float(x) for x in r), cutoff, q0, basis, heights, weights,
                       ops, gram, on_basis, np.array(col_h)[order], eig_record)


def z_pbw(mod: VermaModule, i: int, j: int) -> np.ndarray:
    """Z_ij = sum_{k <= min(i,j,M)} eps_(0,k] (T_ki)* T_kj in PBW coordinates."""
    m = check_standard_form(mod.eps)
    out = np.zeros_like(mod.gram)
    for k in range(1, min(i, j, m) + 1):
        out += eps_interval(mod.eps, 0, k) * (mod.s_op(k, i) @ mod.t_op(k, j))
    return out


def z_orthonormal(mod: VermaModule) -> list[list[np.ndarray]]:
    """Matrices of Z_ij in the orthonormal basis of the nondegenerate quotient."""
    b = mod.on_basis
    gb = mod.gram @ b
    return [[gb.T.conj() @ z_pbw(mod, i, j) @ b for j in range(1, mod.n + 1)]
            for i in range(1, mod.n + 1)]
