"""Concrete representations of O_q(H(N)) and the detectors that read shapes and weights off them.

Operators are scipy sparse matrices.  Truncated constructions carry a
per-basis-vector *headroom*: the number of generator applications after
which the vector is still mapped exactly.  A product of k generators is
trusted on columns with headroom >= k; residuals are measured there.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from .braid import build_rhat, check_standard_form, eps_interval, minor_coeffs
from .combinatorics import inversions, select, subsets
from .shapes import (Shape, ShapeError, check_character_params, closure, frak_n, restrict_times,
                     signed_leading_phase, weight_coordinates)
from .triangular import (NotUnitarizable, build_verma, is_epsilon_adapted, z_orthonormal)

EXACT = 10 ** 6
DEFAULT_Q = 0.5
DEFAULT_DIM = 16
DEFAULT_TOL = 1e-8


class RepresentationError(ValueError):
    pass


class ShapeDetectionError(RuntimeError):
    def __init__(self, message: str, witness: dict):
        super().__init__(message)
        self.witness = witness


@dataclass
class OperatorGrid:
    """N x N grid of operators standing for pi(Z_ij) on C^dim."""

    n: int
    q0: float
    z: list[list[sps.csr_matrix]]
    headroom: np.ndarray
    tol: float = DEFAULT_TOL
    provenance: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict, repr=False)  # construction by-products (e.g. T operators)
    _minors: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return int(self.headroom.shape[0])

    def op(self, i: int, j: int) -> sps.csr_matrix:
        return self.z[i - 1][j - 1]

    def interior(self, depth: int) -> np.ndarray:
        """Indices of basis vectors on which products of ``depth`` generators are exact."""
        return np.flatnonzero(self.headroom >= depth)

    def dense(self, i: int, j: int) -> np.ndarray:
        return self.op(i, j).toarray()

    def restriction(self) -> "OperatorGrid":
        """The O_q(H(N-1)) representation generated by Z_ij, i, j <= N-1."""
        if self.n < 2:
            raise RepresentationError("cannot restrict an N=1 representation")
        m = self.n - 1
        prov = dict(self.provenance, restricted=self.provenance.get("restricted", 0) + 1)
        return OperatorGrid(m, self.q0, [row[:m] for row in self.z[:m]], self.headroom, self.tol, prov)


def _grid_from_dense(n: int, q0: float, mats, headroom, tol, provenance, extra=None) -> OperatorGrid:
    z = [[sps.csr_matrix(np.asarray(mats[i][j], dtype=complex)) for j in range(n)] for i in range(n)]
    return OperatorGrid(n, q0, z, np.asarray(headroom, dtype=np.int64), tol, provenance, extra or {})


def _check_q(q0: float) -> None:
    if not (0.0 < q0 < 1.0):
        raise RepresentationError(f"q0 must lie in (0, 1), got {q0}")


# -- residuals ----------------------------------------------------------------------------------

def hermitian_defect(rep: OperatorGrid) -> float:
    out = 0.0
    for i in range(1, rep.n + 1):
        for j in range(i, rep.n + 1):
            d = rep.op(i, j) - rep.op(j, i).conj().T
            if d.nnz:
                out = max(out, float(np.max(np.abs(d.data))))
    return out


def re_residual(rep: OperatorGrid, depth: int = 2) -> float:
    """max |(R12 Z23 R12 Z23 - Z23 R12 Z23 R12) x| over basis vectors x of the interior."""
    n, dim = rep.n, rep.dim
    cols = rep.interior(depth)
    if cols.size == 0:
        return 0.0
    r = sps.csr_matrix(build_rhat(n).dense(rep.q0))
    zbig = sps.bmat([[rep.op(i, j) for j in range(1, n + 1)] for i in range(1, n + 1)], format="csr")
    z23 = sps.kron(sps.identity(n, format="csr"), zbig, format="csr")
    r12 = sps.kron(r, sps.identity(dim, format="csr"), format="csr")
    sel = sps.csr_matrix((np.ones(cols.size), (cols, np.arange(cols.size))), shape=(dim, cols.size))
    x = sps.kron(sps.identity(n * n, format="csr"), sel, format="csr")
    left = r12 @ (z23 @ (r12 @ (z23 @ x)))
    right = z23 @ (r12 @ (z23 @ (r12 @ x)))
    d = (left - right).tocsr()
    return float(np.max(np.abs(d.data))) if d.nnz else 0.0


# -- characters ------------------------------------------------------------------------------------

def character_matrix(n: int, k: int, l: int, a: float, c: float, phases: Sequence[float]) -> np.ndarray:
    check_character_params(n, k, l)
    if not a > 0:
        raise RepresentationError(f"character needs a > 0, got {a}")
    if c == 0:
        raise RepresentationError("character needs c != 0")
    if len(phases) != l:
        raise RepresentationError(f"character needs {l} phases, got {len(phases)}")
    z = np.zeros((n, n), dtype=complex)
    for i in range(k + l + 1, n + 1):
        z[i - 1, i - 1] += a
    for i in range(n - l + 1, n + 1):
        z[i - 1, i - 1] -= 1.0 / a
    for i, th in enumerate(phases):
        y = cmath.exp(1j * th)
        z[k + i, n - i - 1] += y
        z[n - i - 1, k + i] += y.conjugate()
    return c * z


def character_rep(n: int, k: int, l: int, a: float = 1.0, c: float = 1.0,
                  phases: Sequence[float] | None = None, q0: float = DEFAULT_Q) -> OperatorGrid:
    """One-dimensional representation with the character matrix; phases are angles of y_i."""
    _check_q(q0)
    phases = list(phases) if phases is not None else [0.0] * l
    z = character_matrix(n, k, l, a, c, phases)
    mats = [[z[i:i + 1, j:j + 1] for j in range(n)] for i in range(n)]
    prov = {"q": q0, "base": {"character": {"N": n, "k": k, "l": l, "a": a, "c": c, "y": phases}},
            "chain": []}
    rep = _grid_from_dense(n, q0, mats, [EXACT], 1e-12, prov)
    res = re_residual(rep)
    if res > 1e-12:
        raise RepresentationError(f"character matrix violates the reflection equation (residual {res:.3e})")
    return rep


# -- O_q(SU(2)) and the coaction ---------------------------------------------------------------------

def su2_s(d: int, q0: float = DEFAULT_Q) -> list[list[sps.csr_matrix]]:
    """[[X11, X12], [X21, X22]] on C^d: X11 lowers, X21 = diag(q^i), X12 = -q X21^*, X22 = X11^*."""
    _check_q(q0)
    if d < 1:
        raise RepresentationError("truncation dimension must be >= 1")
    idx = np.arange(1, d)
    x11 = sps.csr_matrix((np.sqrt(1 - q0 ** (2 * idx)), (idx - 1, idx)), shape=(d, d))
    x21 = sps.diags(q0 ** np.arange(d)).tocsr()
    x12 = (-q0 * x21.conj().T).tocsr()
    x22 = x11.conj().T.tocsr()
    return [[x11, x12], [x21, x22]]


def _trivial_su2() -> list[list[sps.csr_matrix]]:
    one, zero = sps.csr_matrix(np.ones((1, 1))), sps.csr_matrix((1, 1))
    return [[one, zero], [zero, one]]


def apply_alpha(rep: OperatorGrid, i: int, d: int = DEFAULT_DIM, trivial: bool = False) -> OperatorGrid:
    """Z'_kl = sum_{m,n} Z_mn (x) (X_mk)^* X_nl with X the s-representation placed at (i, i+1).

    ``trivial`` replaces s by the trivial representation (X = identity).
    """
    n = rep.n
    if not 1 <= i < n:
        raise RepresentationError(f"coaction index must satisfy 1 <= i <= N-1, got {i}")
    s = _trivial_su2() if trivial else su2_s(d, rep.q0)
    dd = s[0][0].shape[0]
    ident = sps.identity(dd, format="csr")

    def x(a, b):
        if a in (i, i + 1) and b in (i, i + 1):
            return s[a - i][b - i]
        return ident if a == b else None

    new = [[None] * n for _ in range(n)]
    for k in range(1, n + 1):
        for l in range(1, n + 1):
            acc = sps.csr_matrix((rep.dim * dd, rep.dim * dd), dtype=complex)
            for m in range(1, n + 1):
                xmk = x(m, k)
                if xmk is None:
                    continue
                for nn in range(1, n + 1):
                    xnl = x(nn, l)
                    zmn = rep.op(m, nn)
                    if xnl is None or zmn.nnz == 0:
                        continue
                    acc = acc + sps.kron(zmn, xmk.conj().T @ xnl, format="csr")
            acc.eliminate_zeros()
            new[k - 1][l - 1] = acc.tocsr()
    if trivial:
        leg = np.array([EXACT])
    else:
        leg = (d - 1 - np.arange(d)) // 2
    head = np.minimum(np.repeat(rep.headroom, dd), np.tile(leg, rep.dim))
    prov = dict(rep.provenance)
    prov["chain"] = list(rep.provenance.get("chain", [])) + [{"alpha": i, "d": d, "trivial": trivial}]
    return OperatorGrid(n, rep.q0, new, head, rep.tol, prov)


# -- big cell representations from O_q^eps(T(N)) ---------------------------------------------------------

def verma_big_cell(eps: Sequence[int], r: Sequence[float], cutoff: int = 6,
                   q0: float = DEFAULT_Q) -> OperatorGrid:
    """Z = T^* 1_eps T on the unitarizable highest weight module of weight r."""
    _check_q(q0)
    eps = tuple(int(e) for e in eps)
    check_standard_form(eps)
    if not is_epsilon_adapted(eps, r):
        raise RepresentationError(f"weight r={list(r)} is not eps-adapted for eps={list(eps)}")
    mod = build_verma(eps, r, cutoff, q0)
    n = len(eps)
    mats = z_orthonormal(mod)
    step = max(n - 1, 1)
    head = (cutoff - mod.on_heights) // step if n > 1 else np.full(mod.on_heights.shape, EXACT)
    # a module that closes below the cutoff is finite-dimensional and exact
    if n > 1 and mod.on_heights.size and mod.on_heights.max() + step <= cutoff:
        head = np.full(mod.on_heights.shape, EXACT)
    prov = {"q": q0, "base": {"verma": {"eps": list(eps), "r": list(map(float, r)), "cutoff": cutoff}},
            "chain": []}
    return _grid_from_dense(n, q0, mats, head, DEFAULT_TOL, prov, {"module": mod})


def t_orthonormal(rep: OperatorGrid) -> list[list[np.ndarray | None]]:
    """Matrices of T_ij (i <= j) in the orthonormal basis of a verma_big_cell rep."""
    mod = rep.extra.get("module")
    if mod is None:
        raise RepresentationError("representation was not built from a highest weight module")
    b = mod.on_basis
    gb = mod.gram @ b
    out = [[None] * rep.n for _ in range(rep.n)]
    for i in range(1, rep.n + 1):
        for j in range(i, rep.n + 1):
            out[i - 1][j - 1] = gb.T.conj() @ mod.t_op(i, j) @ b
    return out


def twist_by_triangular(rep: OperatorGrid, tri: OperatorGrid) -> OperatorGrid:
    """Z'_kl = sum_{m,n} Z_mn (x) (T_mk)^* T_nl for a finite-dimensional eps = (1,...,1) module."""
    n = rep.n
    eps = tuple(tri.provenance["base"]["verma"]["eps"])
    if eps != (1,) * n:
        raise RepresentationError("twisting needs an all-positive eps module")
    if not np.all(tri.headroom >= EXACT):
        raise RepresentationError("twisting needs a finite-dimensional (closed) module")
    t = t_orthonormal(tri)
    new = [[None] * n for _ in range(n)]
    for k in range(1, n + 1):
        for l in range(1, n + 1):
            acc = sps.csr_matrix((rep.dim * tri.dim, rep.dim * tri.dim), dtype=complex)
            for m in range(1, k + 1):
                for nn in range(1, l + 1):
                    zmn = rep.op(m, nn)
                    if zmn.nnz == 0:
                        continue
                    acc = acc + sps.kron(zmn, sps.csr_matrix(t[m - 1][k - 1].conj().T @ t[nn - 1][l - 1]))
            acc.eliminate_zeros()
            new[k - 1][l - 1] = acc.tocsr()
    head = np.minimum(np.repeat(rep.headroom, tri.dim), np.tile(tri.headroom, rep.dim))
    prov = dict(rep.provenance, twist=tri.provenance["base"]["verma"])
    return OperatorGrid(n, rep.q0, new, head, rep.tol, prov)


def rep_from_spec(spec: dict) -> OperatorGrid:
    """Build a representation from the chain-spec JSON form."""
    try:
        q0 = float(spec.get("q", DEFAULT_Q))
        base = spec["base"]
        if "character" in base:
            ch = base["character"]
            rep = character_rep(int(ch["N"]), int(ch.get("k", 0)), int(ch.get("l", 0)),
                                float(ch.get("a", 1.0)), float(ch.get("c", 1.0)),
                                [float(t) for t in ch.get("y", [])], q0)
        elif "verma" in base:
            vm = base["verma"]
            rep = verma_big_cell(vm["eps"], vm["r"], int(vm.get("cutoff", 6)), q0)
        else:
            raise RepresentationError("base must be a 'character' or a 'verma' entry")
        for step in spec.get("chain", []):
            rep = apply_alpha(rep, int(step["alpha"]), int(step.get("d", DEFAULT_DIM)),
                              bool(step.get("trivial", False)))
    except (KeyError, TypeError) as exc:
        raise RepresentationError(f"malformed chain spec: {exc!r}") from exc
    return rep


def uq_limit(rep: OperatorGrid) -> OperatorGrid:
    """Rebuild the chain with every s-factor replaced by the trivial representation."""
    prov = rep.provenance
    if "base" not in prov or "chain" not in prov:
        raise RepresentationError("representation has no chain provenance")
    spec = {"q": rep.q0, "base": prov["base"],
            "chain": [dict(step, trivial=True) for step in prov["chain"]]}
    out = rep_from_spec(spec)
    for _ in range(prov.get("restricted", 0)):
        out = out.restriction()
    return out


# -- quantum minors --------------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _numeric_tables(n: int, k: int, q0: float):
    """For the m = 1 row expansion of a size-k minor: inverse table indexed by (i_1, I^1), forward by (j_p, T')."""
    rt = minor_coeffs(n, 1, k - 1)
    inv: dict = {}
    for (s, a, b, tp), v in rt.inverse_coeffs.items():
        inv.setdefault((a, b), []).append((s, tp, v.eval(q0)))
    fwd: dict = {}
    for (a, t, tp, sp_), v in rt.coeffs.items():
        fwd.setdefault((a, tp), []).append((t, sp_, v.eval(q0)))
    return inv, fwd


def minor_op(rep: OperatorGrid, rows: Sequence[int], cols: Sequence[int]) -> sps.csr_matrix:
    """pi(Z_{I,J}) by the m = 1 Laplace recursion with numeric coefficients."""
    i, j = tuple(sorted(rows)), tuple(sorted(cols))
    if len(i) != len(j):
        raise RepresentationError(f"minor needs |I| = |J|, got {i}, {j}")
    key = (i, j)
    hit = rep._minors.get(key)
    if hit is not None:
        return hit
    k = len(i)
    if k == 0:
        out = sps.identity(rep.dim, dtype=complex, format="csr")
    elif k == 1:
        out = rep.op(i[0], j[0])
    else:
        inv, fwd = _numeric_tables(rep.n, k, rep.q0)
        out = sps.csr_matrix((rep.dim, rep.dim), dtype=complex)
        i_k, i_uk = select(i, (1,))
        for p in range(1, k + 1):
            sign = (-rep.q0) ** (p - 1)
            j_p, j_up = select(j, (p,))
            for s, tp, a in inv.get((i_k, i_uk), ()):
                for t, sp_, b in fwd.get((j_p, tp), ()):
                    left = minor_op(rep, s, t)
                    right = minor_op(rep, sp_, j_up)
                    if left.nnz and right.nnz:
                        out = out + (sign * a * b) * (left @ right)
        out = out.tocsr()
        out.data[np.abs(out.data) < 1e-15] = 0
        out.eliminate_zeros()
    rep._minors[key] = out
    return out


# -- central elements -------------------------------------------------------------------------------

def _word_op(rep: OperatorGrid, word, x):
    for g in reversed(word):
        a, b = divmod(g, rep.n)
        x = rep.op(a + 1, b + 1) @ x
    return x


def central_action(rep: OperatorGrid, k: int, cols: np.ndarray | None = None):
    """sigma_k applied to the selected basis columns (default: interior of depth k)."""
    from .rea import sigma

    poly = sigma(k, rep.n)
    cols = rep.interior(k) if cols is None else cols
    sel = sps.csr_matrix((np.ones(cols.size), (cols, np.arange(cols.size))), shape=(rep.dim, cols.size))
    acc = sps.csr_matrix((rep.dim, cols.size), dtype=complex)
    for word, c in poly.terms.items():
        acc = acc + c.eval(rep.q0) * _word_op(rep, word, sel)
    return acc.tocsr(), cols


def central_values(rep: OperatorGrid, tol: float | None = None) -> np.ndarray:
    """Scalars of sigma_1..sigma_N; raises if some sigma_k is not scalar on the interior."""
    tol = rep.tol if tol is None else tol
    out = []
    for k in range(1, rep.n + 1):
        act, cols = central_action(rep, k)
        if cols.size == 0:
            raise RepresentationError(f"no interior vectors of depth {k}; enlarge the truncation")
        diag = np.asarray(act[cols, np.arange(cols.size)]).ravel()
        val = diag.mean()
        sel = sps.csr_matrix((np.full(cols.size, val), (cols, np.arange(cols.size))), shape=act.shape)
        d = (act - sel).tocsr()
        dev = float(np.max(np.abs(d.data))) if d.nnz else 0.0
        if dev > tol * max(1.0, abs(val)):
            raise RepresentationError(f"sigma_{k} is not scalar on the interior (deviation {dev:.3e})")
        out.append(val)
    return np.array(out)


# -- subspaces --------------------------------------------------------------------------------------

def vector_headroom(rep: OperatorGrid, vecs: np.ndarray, rel: float = 1e-10) -> np.ndarray:
    """Headroom of each column: the minimum over its non-negligible components."""
    out = []
    for c in range(vecs.shape[1]):
        v = np.abs(vecs[:, c])
        big = v > rel * max(v.max(), 1e-300)
        out.append(int(rep.headroom[big].min()) if big.any() else EXACT)
    return np.array(out, dtype=np.int64)


@dataclass
class Subspace:
    """Orthonormal columns (in the rep's basis) spanning an invariant piece, with their headroom."""

    basis: np.ndarray
    headroom: np.ndarray

    def usable(self, depth: int) -> np.ndarray:
        return self.basis[:, self.headroom >= depth]


def _columns(rep: OperatorGrid, depth: int, sub: Subspace | None, max_dim: int | None = None) -> np.ndarray:
    if sub is not None:
        cols = sub.usable(depth)
        head = sub.headroom[sub.headroom >= depth]
    else:
        idx = rep.interior(depth)
        head = rep.headroom[idx]
        cols = None
    if max_dim is not None and head.size > max_dim:
        keep = np.argsort(-head, kind="stable")[:max_dim]
        keep.sort()
        if cols is None:
            idx = idx[keep]
        else:
            cols = cols[:, keep]
    if cols is None:
        e = np.zeros((rep.dim, idx.size), dtype=complex)
        e[idx, np.arange(idx.size)] = 1.0
        return e
    return cols


# -- shape detection -------------------------------------------------------------------------------

def _scale(rep: OperatorGrid, cols: np.ndarray) -> float:
    s = 0.0
    for i in range(1, rep.n + 1):
        for j in range(1, rep.n + 1):
            if cols.shape[1]:
                s = max(s, float(np.max(np.abs(rep.op(i, j) @ cols))))
    return max(s, 1.0)


def _phase_of(block: np.ndarray, thresh: float, what: str) -> complex:
    """Phase c with block / c Hermitian positive semidefinite; raises otherwise."""
    tr = np.trace(block)
    if abs(tr) <= thresh:
        raise ShapeDetectionError(f"{what} has no definite phase", {"operator": what, "trace": abs(tr)})
    ph = tr / abs(tr)
    rot = block / ph
    herm = float(np.max(np.abs(rot - rot.conj().T)))
    lam_min = float(np.linalg.eigvalsh((rot + rot.conj().T) / 2)[0])
    bnorm = max(float(np.max(np.abs(block))), 1e-300)
    if herm > 1e-6 * bnorm or lam_min < -1e-6 * bnorm:
        raise ShapeDetectionError(f"{what} is not a phase times a positive operator",
                                  {"operator": what, "hermitian_defect": herm, "min_eigenvalue": lam_min})
    return complex(ph)


def detect_shape(rep: OperatorGrid, sub: Subspace | None = None, tol: float = 1e-8,
                 strict: bool = True) -> Shape:
    """Read the shape off a representation (or an invariant subspace of it).

    For each rank k the lex-first (J, I) with Z_{I,J} nonzero is found; the
    nested pattern gives tau and the phase of the leading minor gives u.
    With ``strict=False`` the representation may be a direct sum (or integral)
    of pieces that differ only in the unimodular parts of 2-cycles: fixed-point
    signs are read from Z_{S,k-1}^* Z_{S,k}, which is a phase times a positive
    operator on every piece, and 2-cycle phases are reported as 1.
    """
    n = rep.n
    scale = _scale(rep, _columns(rep, 1, sub))
    found: list[tuple[tuple, tuple]] = []  # (J, I) per rank
    for k in range(1, n + 1):
        cols = _columns(rep, k, sub)
        if cols.shape[1] == 0:
            raise ShapeDetectionError(f"no vectors with headroom {k}; enlarge the truncation", {"rank": k})
        thresh = tol * scale ** k
        hit = None
        for jset in subsets(n, k):
            for iset in subsets(n, k):
                if np.max(np.abs(minor_op(rep, iset, jset) @ cols), initial=0.0) > thresh:
                    hit = (jset, iset)
                    break
            if hit:
                break
        if hit is None:
            break
        jset, iset = hit
        if found:
            pj, pi = found[-1]
            if not (set(pj) < set(jset) and set(pi) < set(iset)):
                raise ShapeDetectionError(
                    f"leading minors are not nested: rank {k - 1} gives {pi},{pj}, rank {k} gives {iset},{jset}",
                    {"previous": [list(pi), list(pj)], "current": [list(iset), list(jset)]})
        found.append(hit)
    tau = list(range(1, n + 1))
    steps = []
    prev_j, prev_i = (), ()
    for jset, iset in found:
        (pk,) = set(jset) - set(prev_j)
        (tk,) = set(iset) - set(prev_i)
        tau[pk - 1] = tk
        steps.append(pk)
        prev_j, prev_i = jset, iset
    if sorted(tau) != list(range(1, n + 1)):
        raise ShapeDetectionError("row and column patterns do not define a permutation",
                                  {"tau": tau, "support": list(found[-1][0]) if found else []})
    lengths = [0] + [inversions({p: tau[p - 1] for p in jset}) for jset, _ in found]
    u = [0j] * n
    prev_total = 1 + 0j
    for k, ((jset, iset), pk) in enumerate(zip(found, steps), start=1):
        zk = minor_op(rep, iset, jset)
        if strict:
            cols = _columns(rep, k, sub)
            ph = _phase_of(cols.conj().T @ (zk @ cols), tol * scale ** k, f"Z_{iset},{jset}")
            total = (-1) ** lengths[k] * ph
            u[pk - 1] = total / prev_total
            prev_total = total
        elif tau[pk - 1] == pk:
            cols = _columns(rep, k, sub)
            if k == 1:
                block = cols.conj().T @ (zk @ cols)
            else:
                pj, pi = found[k - 2]
                # <Z_{S,k-1} x, Z_{S,k} y> only needs headroom k on x and y
                block = (minor_op(rep, pi, pj) @ cols).conj().T @ (zk @ cols)
            ph = _phase_of(block, tol * scale ** (2 * k - 1), f"step {k} at {pk}")
            u[pk - 1] = (-1) ** (lengths[k] - lengths[k - 1]) * ph
        else:
            u[pk - 1] = 1 + 0j
    try:
        return Shape(n, tuple(tau), tuple(u))
    except ShapeError as exc:
        raise ShapeDetectionError(f"detected data is not a shape: {exc}",
                                  {"tau": tau, "u": [complex(x) for x in u]}) from exc


# -- weights --------------------------------------------------------------------------------------

@dataclass
class WeightReport:
    """Joint eigenvectors of the weight operators Z_{restrict^m S, k}, ordered by decreasing weight."""

    coordinates: list  # (depth, k, rows, cols) per weight coordinate
    weights: list  # complex tuples, lexicographically decreasing in modulus
    multiplicities: list
    vectors: list  # orthonormal columns per weight
    commutator_defect: float
    searched_dim: int
    signs: list = field(default_factory=list)  # step-form phases per weight (modulus mode)
    modulus: bool = False

    @property
    def highest(self) -> tuple:
        return self.weights[0]

    @property
    def highest_vector(self) -> np.ndarray:
        return self.vectors[0][:, 0]

    @property
    def unique(self) -> bool:
        return self.multiplicities[0] == 1

    def to_json(self) -> dict:
        enc = lambda w: [[float(x.real), float(x.imag)] for x in w]
        return {"coordinates": [[d, k, list(r), list(c)] for d, k, r, c in self.coordinates],
                "weights": [enc(w) for w in self.weights], "multiplicities": list(self.multiplicities),
                "highest": enc(self.highest), "unique": self.unique,
                "commutator_defect": self.commutator_defect, "searched_dim": self.searched_dim,
                "modulus": self.modulus}


def weight_key_cmp(a: Sequence[complex], b: Sequence[complex], rel: float = 1e-7) -> int:
    """Lexicographic comparison of weight moduli with a relative tolerance per coordinate."""
    for x, y in zip(a, b):
        ax, ay = abs(x), abs(y)
        if abs(ax - ay) > rel * max(ax, ay, 1e-300):
            return 1 if ax > ay else -1
    return 0


def _clusters(values: np.ndarray, rel: float) -> list[np.ndarray]:
    scale = max(float(np.max(np.abs(values), initial=0.0)), 1e-300)
    left = list(np.argsort(-np.abs(values), kind="stable"))
    out = []
    while left:
        seed = left[0]
        near = [i for i in left if abs(values[i] - values[seed]) <= rel * scale]
        out.append(np.array(near))
        left = [i for i in left if i not in set(near)]
    return out


def _orth(mat: np.ndarray, rel: float = 1e-8) -> np.ndarray:
    if mat.shape[1] == 0:
        return mat
    u, sv, _ = np.linalg.svd(mat, full_matrices=False)
    return u[:, sv > rel * max(sv[0], 1e-300)]


def weight_operators(rep: OperatorGrid, shape: Shape, modulus: bool = False):
    """The commuting family used to define weights.

    Plain: Z_{restrict^m S,k} for every weight coordinate.  Modulus: Z^* Z for each
    coordinate, followed by the fixed-point step forms Z_{S,k-1}^* Z_{S,k} (Z_{S,1} for
    k = 1) whose phases carry the signs.  Returns (coords, ops, depths, n_coordinate_ops).
    """
    coords, ops, depths = [], [], []
    for depth, k, (rows, cols) in weight_coordinates(shape):
        coords.append((depth, k, tuple(rows), tuple(cols)))
        z = minor_op(rep, rows, cols)
        if modulus:
            ops.append((z.conj().T @ z).tocsr())
            depths.append(2 * k)
        else:
            ops.append(z)
            depths.append(k)
    n_coord = len(ops)
    if modulus:
        for k in range(1, shape.rank + 1):
            pk = shape.p(k)[-1] if k == 1 else (set(shape.p(k)) - set(shape.p(k - 1))).pop()
            if shape.tau[pk - 1] != pk:
                continue
            rows, cols = shape.leading_pair(k)
            z = minor_op(rep, rows, cols)
            if k > 1:
                r0, c0 = shape.leading_pair(k - 1)
                z = (minor_op(rep, r0, c0).conj().T @ z).tocsr()
            ops.append(z)
            depths.append(2 * k - 1)
    return coords, ops, depths, n_coord


def weight_analysis(rep: OperatorGrid, shape: Shape, sub: Subspace | None = None, max_dim: int = 400,
                    cluster: float = 1e-7, tol: float = 1e-7, modulus: bool = False) -> WeightReport:
    """Joint eigendecomposition of the weight operators on the exactly represented part of rep.

    ``modulus=True`` diagonalizes Z^* Z instead of Z (weights are then moduli) together
    with the fixed-point step forms; this also works when the phases of 2-cycles vary
    continuously across pieces and Z has no eigenvectors.
    """
    coords, ops, depths, n_coord = weight_operators(rep, shape, modulus)
    seed_depth = min(rep.n, shape.rank + 1)
    depth = max(depths + [seed_depth])
    cols = _columns(rep, depth, sub, max_dim)
    if cols.shape[1] == 0:
        raise RepresentationError(f"no vectors with headroom {depth}; enlarge the truncation")
    if not ops:
        return WeightReport([], [()], [cols.shape[1]], [cols], 0.0, cols.shape[1], [()], modulus)
    images = [op @ cols for op in ops]
    scales = [max(float(np.max(np.abs(im))), 1e-300) for im in images]
    defect = 0.0
    for a in range(len(ops)):
        for b in range(a + 1, len(ops)):
            deep = _columns(rep, depths[a] + depths[b], sub, max_dim)
            if deep.shape[1] == 0:
                continue
            c = ops[a] @ (ops[b] @ deep) - ops[b] @ (ops[a] @ deep)
            defect = max(defect, float(np.max(np.abs(c))) / (scales[a] * scales[b]))
    if defect > tol:
        raise RepresentationError(f"weight operators fail to commute (relative defect {defect:.3e})")
    blocks = [(np.eye(cols.shape[1], dtype=complex), ())]
    for im in images:
        comp = cols.conj().T @ im
        nxt = []
        for basis, prefix in blocks:
            b = basis.conj().T @ comp @ basis
            lam, vec = np.linalg.eig(b)
            for grp in _clusters(lam, cluster):
                span = _orth(basis @ vec[:, grp])
                if span.shape[1]:
                    nxt.append((span, prefix + (complex(lam[grp].mean()),)))
        blocks = nxt
    found: list[tuple[tuple, np.ndarray]] = []
    for basis, weight in blocks:
        x = cols @ basis
        resid = np.vstack([(ops[i] @ x - weight[i] * x) / scales[i] for i in range(len(ops))])
        gram = resid.conj().T @ resid
        ev, ew = np.linalg.eigh((gram + gram.conj().T) / 2)
        good = ew[:, np.sqrt(np.maximum(ev, 0.0)) <= tol]
        if good.shape[1]:
            found.append((weight, _orth(x @ good)))
    merged: list[list] = []
    for weight, vecs in found:
        for entry in merged:
            if all(abs(a - b) <= cluster * max(s, 1.0) for a, b, s in zip(entry[0], weight, scales)):
                entry[1] = _orth(np.hstack([entry[1], vecs]))
                break
        else:
            merged.append([weight, vecs])
    if not merged:
        raise RepresentationError("no genuine joint eigenvectors found in the searched subspace")
    from functools import cmp_to_key

    def split(w):
        head = w[:n_coord]
        if modulus:
            head = tuple(complex(math.sqrt(max(x.real, 0.0))) for x in head)
        tail = tuple(complex(np.round(x / abs(x), 6)) if abs(x) > 0 else 0j for x in w[n_coord:])
        return head, tail

    rows = [(split(m[0]), m[1]) for m in merged]
    rows.sort(key=cmp_to_key(lambda a, b: -weight_key_cmp(a[0][0], b[0][0], cluster)))
    return WeightReport(coords, [r[0][0] for r in rows], [r[1].shape[1] for r in rows],
                        [r[1] for r in rows], defect, cols.shape[1], [r[0][1] for r in rows], modulus)


def rayleigh(rep: OperatorGrid, rows: Sequence[int], cols: Sequence[int], v: np.ndarray) -> complex:
    v = v / np.linalg.norm(v)
    return complex(np.vdot(v, minor_op(rep, rows, cols) @ v))


def split_weights(w_tau: float, w_plus: float, w_minus: float, q0: float, tol: float = 1e-9) -> tuple[float, float]:
    """Roots of x^2 - w_tau x + q^2 w_plus w_minus, larger first."""
    disc = w_tau ** 2 - 4 * q0 ** 2 * w_plus * w_minus
    if disc < -tol * max(1.0, w_tau ** 2):
        raise RepresentationError(f"negative discriminant {disc:.3e}")
    rt = math.sqrt(max(disc, 0.0))
    return (w_tau + rt) / 2, (w_tau - rt) / 2


# -- invariant pieces -------------------------------------------------------------------------------

def cyclic_span(rep: OperatorGrid, seed: np.ndarray, max_dim: int = 300, leak: float = 1e-12,
                rank_tol: float = 1e-3) -> Subspace:
    """Orthonormal basis of the span of Z-words applied to the seed, applying Z only where exact."""
    seed = seed.reshape(rep.dim, -1).copy()
    seed[np.abs(seed) < leak * np.abs(seed).max(axis=0)] = 0
    basis = _orth(seed)
    frontier = basis
    gens = [rep.op(i, j) for i in range(1, rep.n + 1) for j in range(1, rep.n + 1)]
    while frontier.shape[1] and basis.shape[1] < max_dim:
        head = vector_headroom(rep, frontier, leak)
        usable = frontier[:, head >= 1]
        if usable.shape[1] == 0:
            break
        raw = np.hstack([g @ usable for g in gens])
        size = max(float(np.linalg.norm(raw, axis=0).max()), 1e-300)
        new = raw - basis @ (basis.conj().T @ raw)
        new = new - basis @ (basis.conj().T @ new)
        if np.linalg.norm(new, axis=0).max(initial=0.0) <= rank_tol * size:
            break
        u, sv, _ = np.linalg.svd(new, full_matrices=False)
        new = u[:, sv > rank_tol * size]
        new = new[:, :max_dim - basis.shape[1]]
        basis = np.hstack([basis, new])
        frontier = new
    return Subspace(basis, vector_headroom(rep, basis, leak))


def _phase_key(values) -> tuple:
    out = []
    for z in values:
        ph = z / abs(z) if abs(z) > 0 else 0j
        out.append((round(ph.real, 4) + 0.0, round(ph.imag, 4) + 0.0))
    return tuple(out)


@dataclass
class Piece:
    """An irreducible piece: its detected shape, highest weight and cyclic span."""

    shape: Shape
    weight: tuple
    vector: np.ndarray
    span: Subspace


def decompose_pieces(rep: OperatorGrid, hints: Sequence[Shape], max_dim: int = 300,
                     max_tries: int = 3) -> list[Piece]:
    """Irreducible pieces located by highest weight vectors.

    For each hint (which fixes the weight operators) the genuine joint
    eigenvectors are grouped by the phase pattern of Z_{S,k}; the lex-max
    weight of each group is a highest weight and its cyclic span a piece.
    Pieces are returned once per (shape, highest weight).
    """
    out: list[Piece] = []
    classes = {}
    for h in hints:
        classes.setdefault((h.tau, h.support), h)
    for hint in classes.values():
        try:
            rep_w = weight_analysis(rep, hint)
            keys = [_phase_key(w[i] for i, c in enumerate(rep_w.coordinates) if c[0] == 0)
                    for w in rep_w.weights]
        except RepresentationError:
            # continuous 2-cycle phases: fall back to moduli and fixed-point step signs
            rep_w = weight_analysis(rep, hint, modulus=True)
            keys = [_phase_key(sg) for sg in rep_w.signs]
        done: set = set()
        tries: dict = {}
        for weight, vecs, key in zip(rep_w.weights, rep_w.vectors, keys):
            # a top weight sitting on the truncation edge can give a leaky span;
            # then the next weight of the same group is tried
            if key in done or tries.get(key, 0) >= max_tries:
                continue
            tries[key] = tries.get(key, 0) + 1
            for c in range(vecs.shape[1] if rep_w.coordinates else 1):
                span = cyclic_span(rep, vecs[:, c], max_dim)
                try:
                    shape = detect_shape(rep, span, strict=False)
                except ShapeDetectionError:
                    continue
                if shape.tau != hint.tau or shape.support != hint.support:
                    continue
                done.add(key)
                top, vec = _span_top(rep, shape, span, weight, vecs[:, c])
                if not any(p.shape == shape and weight_key_cmp(p.weight, top) == 0 for p in out):
                    out.append(Piece(shape, top, vec, span))
    return out


def _span_top(rep: OperatorGrid, shape: Shape, span: Subspace, seed_weight, seed: np.ndarray):
    """Lex-max weight and vector inside a span; a retried seed can sit below the top of its block."""
    try:
        try:
            rep_w = weight_analysis(rep, shape, span)
        except RepresentationError:
            rep_w = weight_analysis(rep, shape, span, modulus=True)
    except RepresentationError:
        return tuple(seed_weight), seed
    if rep_w.modulus or weight_key_cmp(rep_w.highest, seed_weight) <= 0:
        return tuple(seed_weight), seed
    return tuple(rep_w.highest), rep_w.highest_vector


@dataclass
class SplitCheck:
    """Predicted leading-minor roots for one split parent and the matching measured values."""

    k: int
    parent: Shape
    roots: tuple
    measured: tuple


@dataclass
class ChainResult:
    rep: OperatorGrid
    predicted: list  # cycle-normalized shapes
    detected: list  # cycle-normalized shapes of the located pieces
    pieces: list
    splits: list

    @property
    def shapes_match(self) -> bool:
        same = lambda a, b: all(any(x == y for y in b) for x in a)
        return same(self.predicted, self.detected) and same(self.detected, self.predicted)


def _dedupe(shapes):
    out = []
    for s in shapes:
        if not any(s == t for t in out):
            out.append(s)
    return out


def run_chain(rep: OperatorGrid, word: Sequence[int], d: int = DEFAULT_DIM,
              shape: Shape | None = None) -> ChainResult:
    """Apply a coaction word; predict shapes combinatorially and locate the actual pieces.

    At every split step the predicted roots for Z_{P_[m],P_[m]} are compared with its
    values on the highest weight vectors of the pieces right after that step.
    """
    from .shapes import alpha_transform

    current = [shape if shape is not None else detect_shape(rep)]
    pieces = None
    checks = []
    for k in word:
        new = apply_alpha(rep, k, d)
        nxt = []
        for s in current:
            nxt.extend(alpha_transform(s, k))
        nxt = _dedupe(nxt)
        splitting = [s for s in current if len(alpha_transform(s, k)) == 2]
        new_pieces = None
        if splitting:
            if pieces is None:
                pieces = _pieces_or_single(rep, current)
            new_pieces = decompose_pieces(new, nxt)
            for parent in splitting:
                own = [p for p in pieces if p.shape.cycle_normalized() == parent.cycle_normalized()]
                roots = split_roots(rep, parent, k, own)
                if roots is None:
                    continue
                m = parent.support.index(k) + 1
                pm = parent.p(m)
                child_tau = alpha_transform(parent, k)[0].tau
                vals = tuple(rayleigh(new, pm, pm, p.vector).real for p in new_pieces if p.shape.tau == child_tau)
                checks.append(SplitCheck(k, parent, roots, vals))
        rep, current, pieces = new, nxt, new_pieces
    located = pieces if pieces is not None else _pieces_or_single(rep, current)
    return ChainResult(rep, _dedupe([s.cycle_normalized() for s in current]),
                       _dedupe([p.shape.cycle_normalized() for p in located]), located, checks)


def _pieces_or_single(rep: OperatorGrid, hints: Sequence[Shape]) -> list[Piece]:
    if rep.dim == 1:
        v = np.ones(1, dtype=complex)
        return [Piece(detect_shape(rep), (), v, Subspace(v.reshape(1, 1), rep.headroom.copy()))]
    return decompose_pieces(rep, hints)


def split_roots(rep: OperatorGrid, parent: Shape, k: int, parent_pieces: Sequence[Piece]) -> tuple | None:
    """Predicted values of Z_{P_[m],P_[m]} on the two highest weight vectors after alpha_k.

    Needs tau(P_[m-1]) = P_[m-1]; returns None otherwise.
    """
    m = parent.support.index(k) + 1
    if m > 1 and tuple(parent.tau_of(parent.p(m - 1))) != tuple(parent.p(m - 1)):
        return None
    if not parent_pieces:
        raise RepresentationError(f"no piece of shape {parent.describe()} found before the split")
    v0 = parent_pieces[0].vector
    w_m1 = rayleigh(rep, parent.p(m - 1), parent.p(m - 1), v0).real if m > 1 else 1.0
    w_p1 = rayleigh(rep, parent.p(m + 1), parent.p(m + 1), v0).real
    tp = parent.tau_of(parent.p(m))
    w_t = rayleigh(rep, tp, tp, v0).real
    return split_weights(w_t, w_p1, w_m1, rep.q0)


# -- identities checked inside a representation -------------------------------------------------

IDENTITIES = ("qcomm", "qcomm-restricted", "weight-rel-1", "weight-rel-2", "gen-rel-4.1",
              "AS-annihilation", "ZS0-scalar")


@dataclass
class IdentityReport:
    identity: str
    instances: int
    skipped: int
    max_residual: float
    tol: float
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def to_json(self) -> dict:
        return {"identity": self.identity, "instances": self.instances, "skipped": self.skipped,
                "max_residual": self.max_residual, "tol": self.tol, "passed": self.passed,
                "witness": self.witness}


def _q_exponent(rows, cols, sk_rows, sk_cols) -> int:
    a, b = set(sk_cols), set(sk_rows)
    return len(set(rows) & a) + len(set(rows) & b) - len(set(cols) & a) - len(set(cols) & b)


def _product(rep: OperatorGrid, factors, x):
    """Apply c * Z_{r1,c1} Z_{r2,c2} ... to x; factors are (rows, cols) or (rows, cols, 'adj')."""
    for f in reversed(factors):
        m = minor_op(rep, f[0], f[1])
        x = (m.conj().T @ x) if len(f) > 2 else (m @ x)
    return x


class _Tally:
    def __init__(self, name: str, tol: float):
        self.name, self.tol = name, tol
        self.count = self.skipped = 0
        self.worst, self.witness = 0.0, None

    def add(self, value: float, info: dict) -> None:
        self.count += 1
        if value > self.worst or self.witness is None:
            self.worst, self.witness = max(value, self.worst), dict(info, residual=value)

    def report(self) -> IdentityReport:
        return IdentityReport(self.name, self.count, self.skipped, self.worst, self.tol, self.witness)


def _sum_check(rep, tally, terms, depth, info, sub):
    """Residual of sum_t c_t * prod_t on columns with headroom >= depth, relative to scale^depth."""
    cols = _columns(rep, depth, sub, 400)
    if cols.shape[1] == 0:
        tally.skipped += 1
        return
    scale = _scale(rep, cols)
    acc = np.zeros(cols.shape, dtype=complex)
    for coef, factors in terms:
        acc += coef * _product(rep, factors, cols)
    tally.add(float(np.max(np.abs(acc), initial=0.0)) / scale ** depth, info)


def verify_in_rep(identity: str, rep: OperatorGrid, shape: Shape, sub: Subspace | None = None,
                  v0: np.ndarray | None = None, tol: float = 1e-8, max_size: int = 2) -> IdentityReport:
    """Check a shape-dependent identity numerically in rep (or in the piece spanned by sub).

    Residuals are relative to scale^degree where scale bounds the generators;
    instances without enough exactly represented vectors are counted as skipped.
    AS-annihilation and ZS0-scalar act on a highest weight vector v0 (computed if absent).
    """
    q = rep.q0
    n, m_rank = shape.n, shape.rank
    t = _Tally(identity, tol)
    if identity in ("qcomm", "qcomm-restricted"):
        depths = [0] if identity == "qcomm" else range(1, n - 1)
        for d in depths:
            low = restrict_times(shape, d) if d else shape
            for k in range(1, low.rank + 1):
                sr, sc = low.leading_pair(k)
                for size in range(1, min(max_size, n) + 1):
                    for rows in subsets(n, size):
                        for cols in subsets(n, size):
                            e = _q_exponent(rows, cols, sr, sc)
                            _sum_check(rep, t, [(1.0, [(sr, sc), (rows, cols)]),
                                                (-(q ** e), [(rows, cols), (sr, sc)])],
                                       k + size, {"depth": d, "k": k, "I": list(rows), "J": list(cols)}, sub)
    elif identity == "weight-rel-1":
        for k in range(1, m_rank):
            pk = shape.p(k)
            leave = [i for i in pk if shape.tau[i - 1] not in pk]
            if len(leave) != 1:
                continue
            (i,) = leave
            big = tuple(sorted(set(pk) | {shape.tau[i - 1]}))
            small = tuple(x for x in pk if x != i)
            sr, sc = shape.leading_pair(k)
            _sum_check(rep, t, [(1.0, [(big, big), (small, small)]),
                                (q ** -2, [(sr, sc), (sr, sc, "adj")])], 2 * k, {"k": k, "i": i}, sub)
    elif identity == "weight-rel-2":
        for k in range(1, m_rank + 1):
            sr, sc = shape.leading_pair(k)
            if set(sr) == set(sc):
                continue
            nset = frak_n(shape, k)
            top = set(nset[-1])
            kset = closure(shape, sr, sc)
            c0 = len(kset)
            prev = None
            for d in range(0, n):
                low = restrict_times(shape, d) if d else shape
                if low.rank >= c0 and tuple(low.leading_pair(c0)) == (kset, kset):
                    prev = low.leading_pair(c0 - 1) if c0 > 1 else ((), ())
                    break
            if prev is None:
                t.skipped += 1
                continue
            rows = tuple(x for x in shape.p(k) if x not in top)
            cols = tuple(x for x in shape.tau_of(shape.p(k)) if x not in top)
            coef = (-q) ** (k - c0 - 1)
            deg = max(c0 + len(rows), c0 - 1 + k)
            _sum_check(rep, t, [(1.0, [(kset, kset), (tuple(sorted(rows)), tuple(sorted(cols)))]),
                                (coef, [prev, (sr, sc, "adj")])], deg, {"k": k, "closure": list(kset)}, sub)
    elif identity == "gen-rel-4.1":
        for m in range(1, m_rank):
            pm = shape.p(m)
            k = pm[-1] if m == 1 else (set(pm) - set(shape.p(m - 1))).pop()
            if shape.tau[k - 1] != k + 1 or set(shape.tau_of(shape.p(m - 1))) != set(shape.p(m - 1)):
                continue
            p_set = tuple(sorted(pm))
            t_set = tuple(sorted(shape.tau_of(pm)))
            up = tuple(sorted(shape.p(m + 1)))
            down = tuple(sorted(shape.p(m - 1)))
            common = [(-q ** 2, [(up, up), (down, down)])]
            lhs_a = [(-1.0, [(p_set, t_set), (t_set, p_set)])]
            lhs_b = [(-1.0, [(t_set, p_set), (p_set, t_set)])]
            rhs_a = common + [(q ** 2, [(p_set, p_set), (p_set, p_set)]), (1.0, [(t_set, t_set), (p_set, p_set)]),
                              (-1.0, [(p_set, p_set), (p_set, p_set)])]
            rhs_b = common + [(q ** 4, [(p_set, p_set), (p_set, p_set)]),
                              (q ** 2, [(t_set, t_set), (p_set, p_set)]),
                              (-(q ** 4), [(p_set, p_set), (p_set, p_set)])]
            _sum_check(rep, t, lhs_a + rhs_a, 2 * m, {"m": m, "form": "Z_P,tau Z_tau,P"}, sub)
            _sum_check(rep, t, lhs_b + rhs_b, 2 * m, {"m": m, "form": "Z_tau,P Z_P,tau"}, sub)
    elif identity in ("AS-annihilation", "ZS0-scalar"):
        if v0 is None:
            v0 = weight_analysis(rep, shape, sub).highest_vector
        v0 = v0 / np.linalg.norm(v0)
        scale = _scale(rep, v0[:, None])
        pos = {}
        for c_idx, cyc in enumerate(shape.cycles()):
            for x in cyc:
                pos[x] = max(cyc)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i == j:
                    continue
                if identity == "AS-annihilation":
                    before = pos.get(i, 0) > pos.get(j, 0) and shape.u[i - 1] != 0 and shape.u[j - 1] != 0
                    if not (before or (shape.u[i - 1] == 0 and shape.u[j - 1] != 0)):
                        continue
                    res = float(np.linalg.norm(rep.op(i, j) @ v0)) / scale
                else:
                    if any(_q_exponent((i,), (j,), *shape.leading_pair(k)) != 0 for k in range(1, m_rank + 1)):
                        continue
                    w = rep.op(i, j) @ v0
                    res = float(np.linalg.norm(w - np.vdot(v0, w) * v0)) / scale
                t.add(res, {"i": i, "j": j})
    else:
        raise RepresentationError(f"unknown identity {identity!r}; expected one of {', '.join(IDENTITIES)}")
    return t.report()
