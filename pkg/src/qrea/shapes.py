"""Shapes (tau, u): encoding, restriction, coaction moves, signatures, weight combinatorics.

A shape is a permutation tau of [N] with weights u_i that are unimodular or
zero; its matrix sends e_i to u_i e_{tau(i)}.  Zero weights sit on fixed
points.  P is the increasing list of indices with u_i != 0 and P_[k] its first
k elements; Z_{S,k} is the minor with rows tau(P_[k]) and columns P_[k].
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from itertools import combinations, permutations, product
from typing import Iterator, Sequence

import numpy as np

from .braid import check_standard_form
from .combinatorics import IndexSet, inversions, pair_cmp, subsets

PHASE_TOL = 1e-9


class ShapeError(ValueError):
    pass


def _clean_weight(x: complex) -> complex:
    x = complex(x)
    if abs(x) <= PHASE_TOL:
        return 0j
    if abs(abs(x) - 1.0) > 1e-7:
        raise ShapeError(f"shape weight {x} is neither zero nor unimodular")
    x = x / abs(x)
    # snap to exact signs and +-i so that sign-only shapes stay exact
    for exact in (1, -1, 1j, -1j):
        if abs(x - exact) <= PHASE_TOL:
            return complex(exact)
    return x


@dataclass(frozen=True)
class Shape:
    n: int
    tau: tuple[int, ...]  # one-line notation, 1-based: tau[i-1] = tau(i)
    u: tuple[complex, ...]

    def __post_init__(self):
        tau = tuple(int(t) for t in self.tau)
        if sorted(tau) != list(range(1, self.n + 1)):
            raise ShapeError(f"tau={tau} is not a permutation of [1..{self.n}]")
        if len(self.u) != self.n:
            raise ShapeError("u must have length N")
        u = tuple(_clean_weight(x) for x in self.u)
        for i in range(1, self.n + 1):
            if tau[i - 1] != i and u[i - 1] == 0:
                raise ShapeError(f"u({i}) = 0 but tau moves {i}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "u", u)

    # -- basic data --------------------------------------------------------
    @property
    def support(self) -> IndexSet:
        return tuple(i for i in range(1, self.n + 1) if self.u[i - 1] != 0)

    @property
    def rank(self) -> int:
        return len(self.support)

    def p(self, k: int) -> IndexSet:
        return self.support[:k]

    def tau_of(self, s: Sequence[int]) -> IndexSet:
        return tuple(sorted(self.tau[i - 1] for i in s))

    def leading_pair(self, k: int) -> tuple[IndexSet, IndexSet]:
        """(rows, columns) of Z_{S,k} = Z_{tau(P_[k]), P_[k]}."""
        pk = self.p(k)
        return self.tau_of(pk), pk

    def key(self) -> tuple:
        """Rank-by-rank sequence of (P_[k], tau(P_[k])); smaller means lex-earlier minors survive."""
        return tuple((self.p(k), self.tau_of(self.p(k))) for k in range(1, self.rank + 1))

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=complex)
        for i in range(1, self.n + 1):
            if self.u[i - 1] != 0:
                m[self.tau[i - 1] - 1, i - 1] = self.u[i - 1]
        return m

    def is_self_adjoint(self) -> bool:
        for i in range(1, self.n + 1):
            t = self.tau[i - 1]
            if self.tau[t - 1] != i:
                return False
            if abs(self.u[t - 1] - self.u[i - 1].conjugate()) > PHASE_TOL:
                return False
        return True

    def require_self_adjoint(self) -> None:
        if not self.is_self_adjoint():
            raise ShapeError(f"shape {self.describe()} is not self-adjoint")

    def cycles(self) -> list[tuple[int, ...]]:
        """Cycles of tau on the support, ordered by their largest element."""
        seen, out = set(), []
        for i in self.support:
            if i in seen:
                continue
            cyc, j = [], i
            while j not in seen:
                seen.add(j)
                cyc.append(j)
                j = self.tau[j - 1]
            out.append(tuple(sorted(cyc)))
        return sorted(out, key=max)

    def restricted_length(self, k: int) -> int:
        """l(tau restricted to P_[k]) as a bijection P_[k] -> tau(P_[k])."""
        return inversions({i: self.tau[i - 1] for i in self.p(k)})

    def u_product(self, k: int) -> complex:
        out = 1 + 0j
        for i in self.p(k):
            out *= self.u[i - 1]
        return out

    # -- comparison ----------------------------------------------------------
    def same_as(self, other: "Shape", tol: float = 1e-9) -> bool:
        return (self.n == other.n and self.tau == other.tau
                and all(abs(a - b) <= tol for a, b in zip(self.u, other.u)))

    def __eq__(self, other) -> bool:
        return isinstance(other, Shape) and self.same_as(other)

    def cycle_normalized(self) -> "Shape":
        """Same shape with u = 1 on both ends of every 2-cycle (fixed-point signs kept)."""
        u = [complex(1) if self.tau[i] != i + 1 and x != 0 else x for i, x in enumerate(self.u)]
        return Shape(self.n, self.tau, tuple(u))

    def __hash__(self) -> int:
        return hash((self.n, self.tau, tuple(x != 0 for x in self.u)))

    # -- text forms ------------------------------------------------------------
    def describe(self) -> str:
        def w(x):
            if x == 0:
                return "0"
            if x == 1:
                return "+"
            if x == -1:
                return "-"
            return f"e^{cmath.phase(x):.4f}i"
        return f"tau={list(self.tau)} u=[{', '.join(w(x) for x in self.u)}]"

    def __repr__(self) -> str:
        return f"Shape({self.describe()})"

    def to_json(self) -> dict:
        us = []
        for x in self.u:
            if x == 0:
                us.append({"zero": True})
            elif x in (1, -1):
                us.append({"sign": int(x.real)})
            else:
                us.append({"phase": cmath.phase(x)})
        return {"n": self.n, "tau": list(self.tau), "u": us}

    @classmethod
    def from_json(cls, obj: dict) -> "Shape":
        try:
            n = int(obj["n"])
            tau = [int(t) for t in obj["tau"]]
            us = []
            for entry in obj["u"]:
                if entry.get("zero"):
                    us.append(0j)
                elif "sign" in entry:
                    if entry["sign"] not in (1, -1):
                        raise ShapeError(f"sign must be +1 or -1, got {entry['sign']}")
                    us.append(complex(entry["sign"]))
                elif "phase" in entry:
                    us.append(cmath.exp(1j * float(entry["phase"])))
                else:
                    raise ShapeError(f"unrecognized weight entry {entry}")
        except (KeyError, TypeError, AttributeError) as exc:
            raise ShapeError(f"malformed shape JSON: {exc}") from exc
        return cls(n, tuple(tau), tuple(us))


# -- constructors ------------------------------------------------------------------

def identity_shape(n: int, sign: int = 1) -> Shape:
    return Shape(n, tuple(range(1, n + 1)), tuple([complex(sign)] * n))


def diagonal_shape(u: Sequence[complex]) -> Shape:
    n = len(u)
    return Shape(n, tuple(range(1, n + 1)), tuple(complex(x) for x in u))


def big_cell_shape(eps: Sequence[int]) -> Shape:
    """tau = id, u(i) = eps_(0,i]."""
    check_standard_form(eps)
    u, acc = [], 1
    for e in eps:
        acc *= e
        u.append(complex(acc))
    return diagonal_shape(u)


def shape_from_matrix(m, tol: float = 1e-9) -> Shape:
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ShapeError("shape matrix must be square")
    tau, u = [0] * n, [0j] * n
    used_rows = set()
    for col in range(n):
        nz = [row for row in range(n) if abs(m[row, col]) > tol]
        if len(nz) > 1:
            raise ShapeError(f"column {col + 1} has more than one nonzero entry")
        if nz:
            row = nz[0]
            if abs(abs(m[row, col]) - 1) > 1e-7:
                raise ShapeError(f"entry ({row + 1},{col + 1}) = {m[row, col]} is not unimodular")
            tau[col], u[col] = row + 1, m[row, col]
            used_rows.add(row + 1)
    free_rows = [r for r in range(1, n + 1) if r not in used_rows]
    for col in range(n):
        if tau[col] == 0:
            if col + 1 in free_rows:
                tau[col] = col + 1
                free_rows.remove(col + 1)
    for col in range(n):
        if tau[col] == 0:
            raise ShapeError("a zero column cannot be assigned a fixed point")
    return Shape(n, tuple(tau), tuple(u))


def shape_codec(obj, tol: float = 1e-9):
    """Shape -> matrix, matrix -> Shape."""
    if isinstance(obj, Shape):
        return obj.matrix()
    return shape_from_matrix(obj, tol)


# -- restriction and coaction moves --------------------------------------------------------

def restrict(s: Shape) -> Shape:
    """Shape of the restriction to O_q(H(N-1)): the top-left (N-1)x(N-1) block."""
    s.require_self_adjoint()
    if s.n < 2:
        raise ShapeError("cannot restrict an N=1 shape")
    return shape_from_matrix(s.matrix()[: s.n - 1, : s.n - 1])


def restrict_times(s: Shape, m: int) -> Shape:
    for _ in range(m):
        s = restrict(s)
    return s


def swap_conjugate(s: Shape, k: int) -> Shape:
    """Decode c_k S c_k for the transposition matrix c_k of (k, k+1)."""
    c = np.eye(s.n)
    c[[k - 1, k]] = c[[k, k - 1]]
    return shape_from_matrix(c @ s.matrix() @ c)


def alpha_transform(s: Shape, k: int) -> list[Shape]:
    """Shapes of the irreducible pieces of alpha_k applied to a rep of shape s.

    tau(k) = k+1 gives two shapes with the (k, k+1) block replaced by
    Diag(+1, -1) and Diag(-1, +1), in that order.  Otherwise the shape moves to
    c_k S c_k exactly when that makes the surviving leading minors lex-earlier,
    and stays put otherwise.
    """
    s.require_self_adjoint()
    if not 1 <= k < s.n:
        raise ShapeError(f"need 1 <= k <= N-1, got k={k}, N={s.n}")
    if s.tau[k - 1] == k + 1:
        out = []
        for a, b in ((1, -1), (-1, 1)):
            tau, u = list(s.tau), list(s.u)
            tau[k - 1], tau[k] = k, k + 1
            u[k - 1], u[k] = complex(a), complex(b)
            out.append(Shape(s.n, tuple(tau), tuple(u)))
        return out
    moved = swap_conjugate(s, k)
    if _key_cmp(moved.key(), s.key()) < 0:
        return [moved]
    return [s]


def _key_cmp(a: tuple, b: tuple) -> int:
    for x, y in zip(a, b):
        c = pair_cmp(x, y)
        if c:
            return c
    return (len(a) > len(b)) - (len(a) < len(b))


def is_big_cell(s: Shape) -> bool:
    m = s.rank
    return s.support == tuple(range(1, m + 1)) and all(
        s.tau[i - 1] == i and s.u[i - 1] in (1, -1) for i in range(1, m + 1))


def big_cell_eps(s: Shape) -> tuple[int, ...]:
    if not is_big_cell(s):
        raise ShapeError(f"{s.describe()} is not a big cell shape")
    eps, prev = [], 1
    for i in range(1, s.n + 1):
        x = s.u[i - 1]
        if x == 0:
            eps.append(0)
        else:
            eps.append(int((x / prev).real))
            prev = x
    return tuple(eps)


@dataclass(frozen=True)
class Reduction:
    eps: tuple[int, ...]
    word: tuple[int, ...]
    branches: tuple[int, ...]  # for each split step in the word: 0 = Diag(+1,-1), 1 = Diag(-1,+1)
    shapes: tuple[Shape, ...]


def _reduce(s: Shape, choose) -> Reduction:
    s.require_self_adjoint()
    word, branches, trail = [], [], [s]
    limit = max(s.n ** 3, 1)
    while not is_big_cell(s):
        if len(word) >= limit:
            raise ShapeError(f"reduction of {trail[0].describe()} did not finish in {limit} steps")
        split = [k for k in range(1, s.n) if s.tau[k - 1] == k + 1]
        if split:
            k = split[0]
            b = choose(s, k)
            s = alpha_transform(s, k)[b]
            branches.append(b)
        else:
            for k in range(1, s.n):
                nxt = alpha_transform(s, k)[0]
                if not nxt.same_as(s):
                    s = nxt
                    break
            else:
                raise ShapeError(f"no coaction step changes {s.describe()}")
        word.append(k)
        trail.append(s)
    return Reduction(big_cell_eps(s), tuple(word), tuple(branches), tuple(trail))


def reduce_to_big_cell(s: Shape) -> Reduction:
    """Coaction word leading s to a big cell shape, taking the Diag(+1,-1) branch at splits."""
    return _reduce(s, lambda shape, k: 0)


def all_reductions(s: Shape) -> list[Reduction]:
    """Reductions over every choice of branch at the splits."""
    out: list[Reduction] = []

    def walk(prefix: tuple[int, ...]):
        chosen: list[int] = []

        def choose(shape, k):
            p = len(chosen)
            b = prefix[p] if p < len(prefix) else 0
            chosen.append(b)
            return b

        red = _reduce(s, choose)
        out.append(red)
        for p in range(len(prefix), len(red.branches)):
            walk(tuple(red.branches[:p]) + (1,))

    walk(())
    return out


def eigen_signature(s: Shape) -> tuple[int, int, int]:
    vals = np.linalg.eigvalsh(s.matrix())
    plus = int(np.sum(vals > 0.5))
    minus = int(np.sum(vals < -0.5))
    return plus, minus, s.n - plus - minus


def eps_signature(eps: Sequence[int]) -> tuple[int, int, int]:
    """Counts of +1, -1, 0 among eps_(0,i]."""
    plus = minus = 0
    acc = 1
    for e in eps:
        acc *= e
        plus += acc == 1
        minus += acc == -1
    return plus, minus, len(eps) - plus - minus


def signature(s: Shape) -> tuple[int, int, int]:
    """(N+, N-, N0), computed from the big cell reduction and from the eigenvalues."""
    s.require_self_adjoint()
    a = eps_signature(reduce_to_big_cell(s).eps)
    b = eigen_signature(s)
    if a != b:
        raise ShapeError(f"signature mismatch for {s.describe()}: reduction {a}, eigenvalues {b}")
    return a


# -- characters --------------------------------------------------------------------------------

def check_character_params(n: int, k: int, l: int) -> None:
    if k < 0 or l < 0 or k + l > n - l:
        raise ShapeError(f"character parameters need k, l >= 0 and k + l <= N - l; got N={n}, k={k}, l={l}")


def character_shape(n: int, k: int, l: int, c_sign: int = 1,
                    phases: Sequence[float] | None = None) -> Shape:
    """Shape of the character with parameters (k, l): zeros on [1..k], 2-cycles (k+i+1, N-i).

    ``phases`` are the angles of y_i; the smaller index of each 2-cycle
    carries sign(c) * conj(y_i), its partner the conjugate.
    """
    check_character_params(n, k, l)
    phases = list(phases) if phases is not None else [0.0] * l
    if len(phases) != l:
        raise ShapeError(f"need {l} phases, got {len(phases)}")
    tau = list(range(1, n + 1))
    u = [0j] * k + [complex(c_sign)] * (n - k)
    for i in range(l):
        a, b = k + i + 1, n - i
        tau[a - 1], tau[b - 1] = b, a
        w = c_sign * cmath.exp(-1j * phases[i])
        u[a - 1], u[b - 1] = w, w.conjugate()
    return Shape(n, tuple(tau), tuple(u))


def character_shapes(n: int, rank: int | None = None) -> list[Shape]:
    """Character shapes (phase representative 0), one per (k, l, sign)."""
    out = []
    for k in range(n + 1):
        for l in range(n + 1):
            if k + l > n - l or (rank is not None and n - k != rank):
                continue
            for c in (1, -1):
                if n - k == 0 and c == -1:
                    continue
                out.append(character_shape(n, k, l, c))
    return out


# -- enumeration -------------------------------------------------------------------------------------

def involutions(n: int) -> Iterator[tuple[int, ...]]:
    def rec(rest: list[int], tau: dict):
        if not rest:
            yield tuple(tau[i] for i in range(1, n + 1))
            return
        i = rest[0]
        tau[i] = i
        yield from rec(rest[1:], tau)
        for j in rest[1:]:
            tau[i], tau[j] = j, i
            yield from rec([x for x in rest[1:] if x != j], tau)
            del tau[j]
        del tau[i]

    yield from rec(list(range(1, n + 1)), {})


def self_adjoint_shapes(n: int, rank: int | None = None, theta: float = 0.0) -> list[Shape]:
    """All self-adjoint shapes: fixed points carry 0 or +-1, 2-cycles the phase theta."""
    out = []
    for tau in involutions(n):
        fixed = [i for i in range(1, n + 1) if tau[i - 1] == i]
        for vals in product((0, 1, -1), repeat=len(fixed)):
            u = [0j] * n
            for i, v in zip(fixed, vals):
                u[i - 1] = complex(v)
            for i in range(1, n + 1):
                j = tau[i - 1]
                if j > i:
                    w = cmath.exp(1j * theta)
                    u[i - 1], u[j - 1] = w, w.conjugate()
            s = Shape(n, tau, tuple(u))
            if rank is None or s.rank == rank:
                out.append(s)
    return out


# -- minors that vanish on a shape -----------------------------------------------------------

def ideal_minors(s: Shape) -> dict:
    """Index pairs (I, J) of minors killed by the shape, plus its leading and restricted minors."""
    s.require_self_adjoint()
    m = s.rank
    vanishing: dict[int, list] = {}
    for k in range(1, m + 1):
        bound = (s.p(k), s.tau_of(s.p(k)))
        vanishing[k] = [(i, j) for j in subsets(s.n, k) for i in subsets(s.n, k)
                        if pair_cmp((j, i), bound) < 0]
        vanishing[k].sort(key=lambda ij: (ij[1], ij[0]))
    if m < s.n:
        vanishing[m + 1] = [(i, j) for i in subsets(s.n, m + 1) for j in subsets(s.n, m + 1)]
    leading = [s.leading_pair(k) for k in range(1, m + 1)]
    restricted = {}
    cur = s
    for depth in range(0, s.n - 1):
        restricted[depth] = [cur.leading_pair(k) for k in range(1, cur.rank + 1)]
        if cur.n > 1 and depth < s.n - 2:
            cur = restrict(cur)
    return {"vanishing": vanishing, "leading": leading, "restricted": restricted}


def weight_coordinates(s: Shape) -> list[tuple[int, int, tuple[IndexSet, IndexSet]]]:
    """Ordered coordinates (depth m, k, (rows, cols)) of the weight tuple w(v).

    Depth runs from N-2 down to 0 (deepest restriction first), k ascending.
    """
    s.require_self_adjoint()
    chain = [s]
    for _ in range(max(s.n - 2, 0)):
        chain.append(restrict(chain[-1]))
    out = []
    for depth in range(len(chain) - 1, -1, -1):
        sh = chain[depth]
        for k in range(1, sh.rank + 1):
            out.append((depth, k, sh.leading_pair(k)))
    return out


# -- highest weight combinatorics --------------------------------------------------------------

@dataclass(frozen=True)
class WeightCombinatorics:
    cycle_order: tuple[tuple[int, ...], ...]
    blocks: tuple[tuple[int, ...], ...]  # r-indices assigned to each cycle
    w_r: tuple[float, ...]
    w_eps: tuple[int, ...]


def weight_combinatorics(s: Shape, r: Sequence[float] | None = None) -> WeightCombinatorics:
    """Cycle order, the r-blocks of W_r, W_r values and W_eps."""
    s.require_self_adjoint()
    cyc = s.cycles()
    if r is not None and len(r) != s.rank:
        raise ShapeError(f"weight has length {len(r)}, expected rank {s.rank}")
    blocks, start = [], 1
    for t in cyc:
        blocks.append(tuple(range(start, start + len(t))))
        start += len(t)
    w_r = tuple(sum(r[j - 1] for j in b) for b in blocks) if r is not None else ()
    w_eps = tuple(b[-1] for t, b in zip(cyc, blocks) if len(t) == 2)
    return WeightCombinatorics(tuple(cyc), tuple(blocks), w_r, w_eps)


def closure(s: Shape, rows: Sequence[int], cols: Sequence[int]) -> IndexSet:
    """Index set K of the closure Z_{K,K} of Z_{rows,cols}."""
    cyc = s.cycles()
    touched = set(rows) | set(cols)
    top = max((p for p, t in enumerate(cyc) if touched & set(t)), default=-1)
    return tuple(sorted(x for t in cyc[: top + 1] for x in t))


def frak_n(s: Shape, k: int) -> list[tuple[int, ...]]:
    """Cycles meeting P_[k] in an index whose tau-image leaves P_[k], in cycle order."""
    pk = set(s.p(k))
    hit = {tuple(sorted((j, s.tau[j - 1]))) for j in pk if s.tau[j - 1] not in pk}
    return [t for t in s.cycles() if tuple(sorted(t)) in hit]


def frak_c(s: Shape, k: int) -> list[int]:
    """[c_0, c_1, ...]: closure ranks after dropping the i largest cycles of frak_N."""
    rows, cols = s.leading_pair(k)
    nset = frak_n(s, k)
    out = [len(closure(s, rows, cols))]
    for i in range(1, len(nset)):
        drop = {x for t in nset[len(nset) - i:] for x in t}
        r2 = [x for x in rows if x not in drop]
        c2 = [x for x in cols if x not in drop]
        out.append(len(closure(s, r2, c2)))
    return out


def multiset_w_r(s: Shape, k: int, r: Sequence[float]) -> float:
    """W_r over P_[k] and tau(P_[k]) counted with multiplicity, cycle by cycle."""
    comb = weight_combinatorics(s, r)
    pk = set(s.p(k))
    tpk = set(s.tau_of(s.p(k)))
    total = 0.0
    for t, w in zip(comb.cycle_order, comb.w_r):
        hits = len(pk & set(t)) + len(tpk & set(t))
        total += hits * w / len(t)
    return total


def zsk_exponent(s: Shape, r: Sequence[float], k: int) -> float:
    """Exponent e with |Z_{S,k}| v0 = q^e v0 on the highest weight vector."""
    if not 1 <= k <= s.rank:
        raise ShapeError(f"k={k} out of range for rank {s.rank}")
    cs = frak_c(s, k) if frak_n(s, k) else []
    return multiset_w_r(s, k, r) - len(cs) * k + sum(c + i for i, c in enumerate(cs))


def signed_leading_phase(s: Shape, k: int) -> complex:
    """(-1)^{l(tau|P_[k])} u_{P_[k]}: the phase of Z_{S,k} on any vector."""
    return (-1) ** s.restricted_length(k) * s.u_product(k)
