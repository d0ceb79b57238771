"""The braid operator R-hat, its eps-deformation, and minor-level coefficients.

Minor coefficients are matrix elements of the braiding between q-exterior
powers.  A basis vector of the q-exterior power is embedded as

    e_I  ->  sum_sigma (-q)^{l(sigma)} e_{i_sigma(1)} (x) ... (x) e_{i_sigma(k)}

so its coefficient on the increasing pure tensor is 1; matrix elements are
read off those leading coefficients.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations, product
from typing import Sequence

from .combinatorics import IndexSet, inversions, preceq, subsets
from .scalars import ONE, Q, QDIFF, QINV, ZERO, ExactQ, q_pow

Sparse = dict  # (row, col) -> ExactQ

MINUS_Q = q_pow(1, -1)


class StandardFormError(ValueError):
    """eps is not of the form (nonzero entries..., zeros...)."""


class CalibrationError(RuntimeError):
    """A minor coefficient table violates one of its defining properties."""


def check_standard_form(eps: Sequence[int]) -> int:
    """Validate eps in {1,-1,0}^N with nonzeros first; return its rank."""
    if any(e not in (1, -1, 0) for e in eps):
        raise StandardFormError(f"eps entries must be in {{1,-1,0}}: {tuple(eps)}")
    m = sum(1 for e in eps if e != 0)
    if any(e == 0 for e in eps[:m]):
        raise StandardFormError(f"eps not in standard form (nonzeros first): {tuple(eps)}")
    return m


def eps_interval(eps: Sequence[int], i: int, j: int) -> int:
    """eps_{(i,j]} = prod_{k=i+1}^{j} eps_k (1-based)."""
    out = 1
    for k in range(i + 1, j + 1):
        out *= eps[k - 1]
    return out


@dataclass(frozen=True)
class BraidOp:
    """N^2 x N^2 matrix over ExactQ; basis e_i (x) e_j has index (i-1)N + (j-1)."""

    n: int
    entries: Sparse = field(compare=False)

    def dense(self, q0: float):
        import numpy as np

        m = np.zeros((self.n ** 2, self.n ** 2), dtype=complex)
        for (r, c), v in self.entries.items():
            m[r, c] = v.eval(q0)
        return m


def _idx(n: int, a: int, b: int) -> int:
    return (a - 1) * n + (b - 1)


def build_rhat_eps(n: int, eps: Sequence[int] | None = None) -> BraidOp:
    if n < 1:
        raise ValueError("N must be >= 1")
    if eps is None:
        eps = [1] * n
    if len(eps) != n:
        raise ValueError("eps must have length N")
    check_standard_form(eps)
    ent: Sparse = {}
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            # q^{-delta_ij} e_ji (x) e_ij : e_i (x) e_j -> e_j (x) e_i
            ent[(_idx(n, j, i), _idx(n, i, j))] = QINV if i == j else ONE
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            s = eps_interval(eps, i, j)
            if s:
                key = (_idx(n, j, i), _idx(n, j, i))
                ent[key] = ent.get(key, ZERO) + QDIFF * s
    return BraidOp(n, {k: v for k, v in ent.items() if v})


def build_rhat(n: int) -> BraidOp:
    return build_rhat_eps(n, [1] * n)


# -- sparse matrix helpers over ExactQ ------------------------------------

def sp_mul(a: Sparse, b: Sparse) -> Sparse:
    rows_b: dict[int, list] = {}
    for (r, c), v in b.items():
        rows_b.setdefault(r, []).append((c, v))
    out: Sparse = {}
    for (r, k), v in a.items():
        for c, w in rows_b.get(k, ()):
            out[(r, c)] = out.get((r, c), ZERO) + v * w
    return {k: v for k, v in out.items() if v}


def sp_add(a: Sparse, b: Sparse, sign: int = 1) -> Sparse:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, ZERO) + v * sign
    return {k: v for k, v in out.items() if v}


def sp_scale(a: Sparse, s: ExactQ) -> Sparse:
    return {k: v * s for k, v in a.items() if v * s}


def sp_identity(dim: int) -> Sparse:
    return {(i, i): ONE for i in range(dim)}


def sp_kron(a: Sparse, b: Sparse, dim_b: int) -> Sparse:
    out: Sparse = {}
    for (r1, c1), v in a.items():
        for (r2, c2), w in b.items():
            out[(r1 * dim_b + r2, c1 * dim_b + c2)] = v * w
    return out


def sp_adjoint(a: Sparse) -> Sparse:
    return {(c, r): v.star() for (r, c), v in a.items()}


def _first_nonzero(a: Sparse):
    for k in sorted(a):
        return k, a[k]
    return None


# -- verification -----------------------------------------------------------

def braid_residual(n: int) -> Sparse:
    r = build_rhat(n).entries
    one = sp_identity(n)
    r12 = sp_kron(r, one, n)
    r23 = sp_kron(one, r, n * n)
    lhs = sp_mul(sp_mul(r12, r23), r12)
    rhs = sp_mul(sp_mul(r23, r12), r23)
    return sp_add(lhs, rhs, -1)


def hecke_residual(n: int) -> Sparse:
    r = build_rhat(n).entries
    r2 = sp_mul(r, r)
    # R^2 + (q - q^-1) R - 1
    res = sp_add(r2, sp_scale(r, -QDIFF))
    return sp_add(res, sp_identity(n * n), -1)


def selfadjoint_residual(n: int) -> Sparse:
    r = build_rhat(n).entries
    return sp_add(r, sp_adjoint(r), -1)


# -- tensors and q-exterior powers ------------------------------------------

Tensor = dict  # tuple[int, ...] -> ExactQ


def _apply_crossing(vec: Tensor, pos: int, inverse: bool) -> Tensor:
    """Apply R-hat (or its inverse) to tensor legs pos, pos+1 (0-based)."""
    out: Tensor = {}

    def add(key, c):
        out[key] = out.get(key, ZERO) + c

    for key, c in vec.items():
        a, b = key[pos], key[pos + 1]
        swapped = key[:pos] + (b, a) + key[pos + 2:]
        if a == b:
            add(key, c * (Q if inverse else QINV))
        elif a < b:
            add(swapped, c)
            if inverse:
                add(key, c * -QDIFF)
        else:
            add(swapped, c)
            if not inverse:
                add(key, c * QDIFF)
    return {k: v for k, v in out.items() if v}


def wedge(i: Sequence[int]) -> Tensor:
    """q-antisymmetric vector attached to an increasing index set."""
    out: Tensor = {}
    k = len(i)
    for perm in permutations(range(k)):
        sigma = {p + 1: perm[p] + 1 for p in range(k)}
        out[tuple(i[perm[p]] for p in range(k))] = MINUS_Q ** inversions(sigma)
    return out


def _tensor_product(a: Tensor, b: Tensor) -> Tensor:
    return {ka + kb: va * vb for ka, va in a.items() for kb, vb in b.items()}


def block_braid(vec: Tensor, k: int, l: int, inverse: bool = False) -> Tensor:
    """Move the last l legs in front of the first k legs, one crossing at a time."""
    for s in range(l):
        start = k + s  # current position of the strand being moved
        for pos in range(start - 1, s - 1, -1):
            vec = _apply_crossing(vec, pos, inverse)
    return vec


@dataclass(frozen=True)
class MinorCoeffTable:
    """R-hat^{IJ}_{I'J'} for |I|=|J|=k, |I'|=|J'|=l, and the inverse terms.

    Keys are (I, J, I', J').  ``coeffs[(I,J,I',J')]`` is the coefficient of
    e_{I'} (x) e_J in B(e_I (x) e_{J'}) with B the positive block braiding;
    ``inverse_coeffs[(I,J,I',J')]`` is the coefficient of e_{J'} (x) e_I in
    B^-(e_J (x) e_{I'}) with B^- built from inverse crossings.
    """

    n: int
    k: int
    l: int
    coeffs: dict = field(compare=False)
    inverse_coeffs: dict = field(compare=False)

    def get(self, i, j, ip, jp) -> ExactQ:
        return self.coeffs.get((tuple(i), tuple(j), tuple(ip), tuple(jp)), ZERO)

    def get_inv(self, i, j, ip, jp) -> ExactQ:
        return self.inverse_coeffs.get((tuple(i), tuple(j), tuple(ip), tuple(jp)), ZERO)

    def dump(self) -> str:
        lines = [f"# minor coefficients N={self.n} k={self.k} l={self.l}"]
        for name, table in (("R", self.coeffs), ("Rinv", self.inverse_coeffs)):
            for key in sorted(table):
                i, j, ip, jp = key
                fmt = lambda s: ",".join(map(str, s)) or "-"
                lines.append(f"{name} {fmt(i)}|{fmt(j)}|{fmt(ip)}|{fmt(jp)} {table[key].to_str()}")
        return "\n".join(lines) + "\n"


def _leading_coeffs(vec: Tensor, first: int) -> dict:
    """Coefficients on increasing|increasing pure tensors, keyed by the two sets."""
    out = {}
    for key, c in vec.items():
        a, b = key[:first], key[first:]
        if all(x < y for x, y in zip(a, a[1:])) and all(x < y for x, y in zip(b, b[1:])):
            out[(a, b)] = c
    return out


_TABLE_LOCK = threading.Lock()


@lru_cache(maxsize=None)
def _minor_coeffs_cached(n: int, k: int, l: int) -> MinorCoeffTable:
    fwd: dict = {}
    inv: dict = {}
    sets_k = subsets(n, k)
    sets_l = subsets(n, l)
    wedges = {s: wedge(s) for s in set(sets_k) | set(sets_l)}
    for i in sets_k:
        for jp in sets_l:
            img = block_braid(_tensor_product(wedges[i], wedges[jp]), k, l)
            for (ip, j), c in _leading_coeffs(img, l).items():
                fwd[(i, j, ip, jp)] = c
    for j in sets_k:
        for ip in sets_l:
            img = block_braid(_tensor_product(wedges[j], wedges[ip]), k, l, inverse=True)
            for (jp, i), c in _leading_coeffs(img, l).items():
                inv[(i, j, ip, jp)] = c
    table = MinorCoeffTable(n, k, l, fwd, inv)
    problems = table_violations(table)
    if problems:
        raise CalibrationError(f"minor coefficient table N={n} k={k} l={l}: {problems[:5]}")
    return table


def minor_coeffs(n: int, k: int, l: int) -> MinorCoeffTable:
    if not (0 <= k <= n and 0 <= l <= n) or n < 1:
        raise ValueError(f"need 0 <= k,l <= N, got N={n} k={k} l={l}")
    with _TABLE_LOCK:
        return _minor_coeffs_cached(n, k, l)


def _support_ok(i, j, ip, jp) -> bool:
    return (preceq(j, i) and preceq(jp, ip)
            and set(j) - set(i) == set(jp) - set(ip)
            and set(i) - set(j) == set(ip) - set(jp))


def table_violations(table: MinorCoeffTable) -> list[str]:
    """Support, diagonal-value and inverse checks; empty list when all hold."""
    out = []
    n, k, l = table.n, table.k, table.l
    for name, t in (("R", table.coeffs), ("Rinv", table.inverse_coeffs)):
        for (i, j, ip, jp), v in t.items():
            if v and not _support_ok(i, j, ip, jp):
                out.append(f"{name} support {i},{j},{ip},{jp}")
    for i in subsets(n, k):
        for ip in subsets(n, l):
            meet = len(set(i) & set(ip))
            if table.get(i, i, ip, ip) != q_pow(-meet):
                out.append(f"R diagonal {i},{ip}")
            if table.get_inv(i, i, ip, ip) != q_pow(meet):
                out.append(f"Rinv diagonal {i},{ip}")
    if not _inverse_composes(table):
        out.append("R and Rinv do not compose to the identity")
    return out


def _inverse_composes(table: MinorCoeffTable) -> bool:
    # B_{l,k} o B^-_{k,l} = id on Lambda^k (x) Lambda^l
    n, k, l = table.n, table.k, table.l
    if k == l:
        other = table
    else:
        other = _minor_coeffs_raw_forward(n, l, k)
    # forward of (l,k): coefficient of e_{A'} (x) e_B in B(e_A (x) e_{B'}) with |A|=l
    fwd_other = other.coeffs if k == l else other
    # inverse matrix: (J,I') -> (J',I)  value inv[(I,J,I',J')]
    inv_mat: dict = {}
    for (i, j, ip, jp), v in table.inverse_coeffs.items():
        inv_mat.setdefault((j, ip), {})[(jp, i)] = v
    # forward (l,k) matrix: (A, B') -> (A', B), A,A' size l ... key (A,B,A',B')
    fwd_mat: dict = {}
    for (a, b, ap, bp), v in fwd_other.items():
        fwd_mat.setdefault((a, bp), {})[(ap, b)] = v
    for src, img in inv_mat.items():
        acc: dict = {}
        for mid, v in img.items():
            for dst, w in fwd_mat.get(mid, {}).items():
                acc[dst] = acc.get(dst, ZERO) + v * w
        acc = {d: c for d, c in acc.items() if c}
        if acc != {src: ONE}:
            return False
    return len(inv_mat) == len(subsets(n, k)) * len(subsets(n, l))


@lru_cache(maxsize=None)
def _minor_coeffs_raw_forward(n: int, k: int, l: int) -> dict:
    fwd = {}
    for i in subsets(n, k):
        for jp in subsets(n, l):
            img = block_braid(_tensor_product(wedge(i), wedge(jp)), k, l)
            for (ip, j), c in _leading_coeffs(img, l).items():
                fwd[(i, j, ip, jp)] = c
    return fwd


# -- verify_braid -------------------------------------------------------------

BRAID_IDS = ("braid", "hecke", "selfadjoint", "coeff-support", "coeff-diagonal", "coeff-inverse")


def verify_braid(identity: str, n: int, max_n: int = 5) -> dict:
    """Exact check of one identity; returns a report with a witness on failure."""
    if identity not in BRAID_IDS:
        raise ValueError(f"unknown identity {identity!r}")
    if n > max_n:
        raise ValueError(f"N={n} exceeds configured bound {max_n}")
    report = {"identity": identity, "n": n, "passed": True, "instances": 0, "witness": None}
    if identity in ("braid", "hecke", "selfadjoint"):
        res = {"braid": braid_residual, "hecke": hecke_residual,
               "selfadjoint": selfadjoint_residual}[identity](n)
        report["instances"] = 1
        if res:
            (rc, v) = _first_nonzero(res)
            report.update(passed=False, witness={"entry": list(rc), "residual": v.to_str()})
        return report
    for k, l in product(range(1, n + 1), repeat=2):
        table = _minor_coeffs_unchecked(n, k, l)
        report["instances"] += 1
        problems = table_violations(table)
        wanted = {"coeff-support": "support", "coeff-diagonal": "diagonal",
                  "coeff-inverse": "compose"}[identity]
        hits = [p for p in problems if wanted in p]
        if hits:
            report.update(passed=False, witness={"k": k, "l": l, "problem": hits[0]})
            break
    return report


def _minor_coeffs_unchecked(n: int, k: int, l: int) -> MinorCoeffTable:
    try:
        return minor_coeffs(n, k, l)
    except CalibrationError:
        fwd = _minor_coeffs_raw_forward(n, k, l)
        inv = {}
        for j in subsets(n, k):
            for ip in subsets(n, l):
                img = block_braid(_tensor_product(wedge(j), wedge(ip)), k, l, inverse=True)
                for (jp, i), c in _leading_coeffs(img, l).items():
                    inv[(i, j, ip, jp)] = c
        return MinorCoeffTable(n, k, l, fwd, inv)
