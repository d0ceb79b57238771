"""Central characters, big cell weights and classification labels (S, s).

A big cell weight is a pair (eps, r) with eps in standard form of rank M.
Its central character is s_k = e_k(x_1, ..., x_N) with
x_i = eps_(0,i] q^(2 r_i + 2 i - 2) for i <= M and x_i = 0 beyond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Iterator, Sequence

import numpy as np

from .braid import check_standard_form
from .shapes import (Shape, ShapeError, all_reductions, character_shapes, eps_signature, reduce_to_big_cell,
                     self_adjoint_shapes, signature, weight_combinatorics, zsk_exponent)
from .triangular import is_epsilon_adapted

__all__ = [
    "ClassificationError", "CentralCharacter", "BigCellWeight", "Label", "is_epsilon_adapted",
    "hc_arguments", "central_from_weight", "weight_from_central", "zsk_weight_formula", "character_hw",
    "validate_label", "enumerate_labels", "shifted_permutation", "shape_family",
]

ROOT_TOL = 1e-8
ADAPTED_TOL = 1e-6


class ClassificationError(ValueError):
    pass


@dataclass(frozen=True)
class CentralCharacter:
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not all(math.isfinite(v) for v in vals):
            raise ClassificationError(f"central values must be finite: {vals}")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class BigCellWeight:
    eps: tuple[int, ...]
    r: tuple[float, ...]
    roots: tuple[float, ...] = field(default=(), compare=False)  # raw root multiset, if recovered

    @property
    def admissible(self) -> bool:
        return is_epsilon_adapted(self.eps, self.r, ADAPTED_TOL)

    def to_json(self) -> dict:
        return {"eps": list(self.eps), "r": [float(x) for x in self.r]}


@dataclass(frozen=True)
class Label:
    shape: Shape
    char: CentralCharacter
    weight: BigCellWeight | None = None

    def to_json(self) -> dict:
        out = {"shape": self.shape.to_json(), "central": list(self.char.values)}
        if self.weight is not None:
            out["weight"] = self.weight.to_json()
        return out


# -- Harish-Chandra map ----------------------------------------------------------------------------

def hc_arguments(eps: Sequence[int], r: Sequence[float], q0: float) -> np.ndarray:
    """x_i = eps_(0,i] q^(2 r_i + 2 i - 2), zero past the rank."""
    m = check_standard_form(eps)
    if len(r) != m:
        raise ClassificationError(f"weight has length {len(r)}, expected rank {m}")
    out = np.zeros(len(eps))
    sign = 1
    for i in range(1, m + 1):
        sign *= eps[i - 1]
        out[i - 1] = sign * q0 ** (2 * r[i - 1] + 2 * i - 2)
    return out


def _elementary(x: np.ndarray) -> np.ndarray:
    """e_1..e_n of the entries of x via the product of (1 + x_i t)."""
    coeffs = np.array([1.0])
    for v in x:
        coeffs = np.convolve(coeffs, [1.0, v])
    return coeffs[1:]


def central_from_weight(eps: Sequence[int], r: Sequence[float], q0: float) -> CentralCharacter:
    return CentralCharacter(tuple(_elementary(hc_arguments(eps, r, q0))))


def _roots(s: Sequence[float], tol: float) -> tuple[np.ndarray, int]:
    """Nonzero real roots of t^N - s_1 t^(N-1) + ... and the number of zero roots."""
    s = np.asarray(s, dtype=float)
    n = s.size
    scale = max(1.0, float(np.max(np.abs(s), initial=0.0)))
    zeros = 0
    while zeros < n and abs(s[n - 1 - zeros]) <= tol * scale:
        zeros += 1
    # a small s_k is a genuine product when the root it implies, |s_k / s_(k-1)|, is not small
    while zeros:
        k = n - zeros + 1
        prev = 1.0 if k == 1 else abs(s[k - 2])
        if abs(s[k - 1]) <= tol * prev:
            break
        zeros -= 1
    deg = n - zeros
    if deg == 0:
        return np.zeros(0), zeros
    coeffs = np.concatenate([[1.0], [(-1) ** k * s[k - 1] for k in range(1, deg + 1)]])
    raw = np.roots(coeffs)
    bad = [z for z in raw if abs(z.imag) > tol * max(1.0, abs(z))]
    if bad:
        raise ClassificationError(f"central values give non-real roots {bad}; no real big cell weight")
    roots = raw.real
    tiny = np.abs(roots) <= tol
    if tiny.any():
        raise ClassificationError(f"a root vanishes although s_{deg} != 0: {roots}")
    return roots, zeros


def weight_from_central(s: CentralCharacter | Sequence[float], signature_: Sequence[int], q0: float,
                        eps: Sequence[int] | None = None, tol: float = ROOT_TOL) -> BigCellWeight:
    """Invert the Harish-Chandra map for a given signature (N+, N-, N0).

    Roots are assigned to positions so that the signs give a standard form
    eps of that signature (or the given eps) and r is eps-adapted; the first
    such assignment in a fixed order is returned.
    """
    vals = s.values if isinstance(s, CentralCharacter) else tuple(float(v) for v in s)
    n = len(vals)
    if len(signature_) != 3:
        raise ClassificationError(f"signature needs three counts (N+, N-, N0), got {tuple(signature_)}")
    n_plus, n_minus, n_zero = (int(x) for x in signature_)
    if n_plus + n_minus + n_zero != n:
        raise ClassificationError(f"signature {tuple(signature_)} does not add up to N={n}")
    if eps is not None:
        eps = tuple(int(e) for e in eps)
        check_standard_form(eps)
        if eps_signature(eps) != (n_plus, n_minus, n_zero):
            raise ClassificationError(f"eps {eps} has signature {eps_signature(eps)}, not {tuple(signature_)}")
    roots, zeros = _roots(vals, tol)
    pos, neg = int(np.sum(roots > 0)), int(np.sum(roots < 0))
    if (pos, neg, zeros) != (n_plus, n_minus, n_zero):
        raise ClassificationError(
            f"root pattern (+{pos}, -{neg}, 0x{zeros}) does not match signature {tuple(signature_)}")
    m = n - zeros
    order = sorted(range(m), key=lambda i: -abs(roots[i]))
    for perm in permutations(order):
        x = roots[list(perm)]
        signs = np.sign(x).astype(int)
        cand = tuple(int(signs[0] if i == 0 else signs[i] * signs[i - 1]) for i in range(m)) + (0,) * zeros
        if eps is not None and cand != eps:
            continue
        r = tuple(float((math.log(abs(x[i])) / math.log(q0) - 2 * (i + 1) + 2) / 2) for i in range(m))
        if is_epsilon_adapted(cand, r, ADAPTED_TOL):
            return BigCellWeight(cand, r, tuple(float(v) for v in roots) + (0.0,) * zeros)
    raise ClassificationError(
        f"no ordering of the roots {sorted(roots.tolist())} gives an eps-adapted weight"
        + (f" for eps={eps}" if eps is not None else ""))


def shifted_permutation(eps: Sequence[int], r: Sequence[float], i: int, j: int) -> BigCellWeight:
    """Swap positions i < j of a weight with the shifts that keep the Harish-Chandra arguments."""
    m = check_standard_form(eps)
    if not 1 <= i < j <= m:
        raise ClassificationError(f"need 1 <= i < j <= {m}, got {i}, {j}")
    signs = np.cumprod(np.asarray(eps[:m], dtype=int))
    signs[[i - 1, j - 1]] = signs[[j - 1, i - 1]]
    new_eps = tuple(int(signs[k] if k == 0 else signs[k] * signs[k - 1]) for k in range(m)) + tuple(eps[m:])
    new_r = list(r)
    new_r[j - 1] = r[i - 1] - (j - i)
    new_r[i - 1] = r[j - 1] + (j - i)
    return BigCellWeight(new_eps, tuple(new_r))


# -- highest weights of shapes -------------------------------------------------------------------

def zsk_weight_formula(shape: Shape, r: Sequence[float], k: int) -> float:
    """Exponent e with |Z_{S,k}| v0 = q^e v0 on the highest weight vector."""
    shape.require_self_adjoint()
    try:
        return zsk_exponent(shape, r, k)
    except ShapeError as exc:
        raise ClassificationError(str(exc)) from exc


@dataclass(frozen=True)
class CharacterWeight:
    n: int
    k: int
    index: int  # position j = N - 2k + 4 of the second weight entry
    weight: BigCellWeight
    z_kk: float
    z_n1_abs: float
    z_nn: float


def character_hw(n: int, k: int, a: float, c: float, q0: float) -> CharacterWeight:
    """Highest weight data of a rank-N character with one 2-cycle (1, N).

    k is the first index with Z_kk != 0; the character has Z_kk = c a and
    Z_NN = c (a - 1/a).  Returns eps1, r_1, r_j with j = N - 2k + 4 and the
    values Z_kk = eps1 q^(2 r_1), |Z_N1| = q^(r_1 + r_j + N - 2k + 3) and
    Z_NN = eps1 (q^(2 r_1) - q^(2 r_j + 2N - 4k + 6)) they predict.
    """
    if k <= 1 or k >= n:
        raise ClassificationError(f"character needs 1 < k < N for an antidiagonal part and a diagonal one; "
                                  f"got N={n}, k={k}")
    j = n - 2 * k + 4
    if not 1 <= j <= n:
        raise ClassificationError(f"index N - 2k + 4 = {j} is outside [1, {n}]")
    if a <= 0 or c == 0:
        raise ClassificationError("character needs a > 0 and c != 0")
    e1 = 1 if c > 0 else -1
    r1 = math.log(abs(c) * a) / (2 * math.log(q0))
    rj = (math.log(abs(c) / a) / math.log(q0) - (2 * n - 4 * k + 6)) / 2
    r = tuple(r1 if i < j else rj for i in range(1, n + 1))
    eps = tuple(e1 if i == 1 else (-1 if i == j else 1) for i in range(1, n + 1))
    z_kk = e1 * q0 ** (2 * r1)
    z_n1 = q0 ** (r1 + rj + n - 2 * k + 3)
    z_nn = e1 * (q0 ** (2 * r1) - q0 ** (2 * rj + 2 * n - 4 * k + 6))
    return CharacterWeight(n, k, j, BigCellWeight(eps, r), z_kk, z_n1, z_nn)


# -- labels -------------------------------------------------------------------------------------------

def _eps_candidates(shape: Shape) -> tuple[list[tuple[int, ...]], list[str]]:
    """Reduction eps values satisfying eps_j = -1 on W_eps, plus notes on rejected ones."""
    w_eps = weight_combinatorics(shape).w_eps
    seen, good, notes = set(), [], []
    for red in [reduce_to_big_cell(shape)] + all_reductions(shape):
        if red.eps in seen:
            continue
        seen.add(red.eps)
        clash = [j for j in w_eps if red.eps[j - 1] != -1]
        if clash:
            notes.append(f"eps {red.eps} from word {red.word} has eps_j != -1 at W_eps positions {clash}")
        else:
            good.append(red.eps)
    # eps with no -1 beyond the first position outside W_eps come first
    good.sort(key=lambda e: sum(1 for j in range(2, len(e) + 1) if e[j - 1] == -1 and j not in w_eps))
    return good, notes


def validate_label(shape: Shape, s: CentralCharacter | Sequence[float], q0: float) -> dict:
    """{'valid', 'reason', 'signature', 'weight', 'word', 'notes'} for the pair (S, s)."""
    char = s if isinstance(s, CentralCharacter) else CentralCharacter(tuple(s))
    if not shape.is_self_adjoint():
        return {"valid": False, "reason": "shape is not self-adjoint", "signature": None}
    if char.n != shape.n:
        return {"valid": False, "reason": f"central character has {char.n} values, shape has N={shape.n}",
                "signature": None}
    sig = signature(shape)
    red = reduce_to_big_cell(shape)
    out = {"signature": list(sig), "word": list(red.word), "weight": None, "notes": []}
    cands, notes = _eps_candidates(shape)
    out["notes"] = notes
    if not cands:
        out.update(valid=False, reason="no reduction eps satisfies the W_eps sign constraints")
        return out
    errors = []
    for eps in cands:
        try:
            w = weight_from_central(char, sig, q0, eps=eps)
        except ClassificationError as exc:
            errors.append(str(exc))
            continue
        out.update(valid=True, reason="ok", weight=w.to_json())
        return out
    out.update(valid=False, reason="; ".join(dict.fromkeys(errors)))
    return out


def shape_family(shape: Shape) -> tuple:
    """Shape up to the phases of 2-cycles and an overall sign: (tau, |u| pattern)."""
    return shape.tau, tuple(int(abs(x) > 0) for x in shape.u)


def _adapted_samples(eps: Sequence[int], bases: Sequence[float], span: int) -> Iterator[tuple[float, ...]]:
    """Adapted weights r_i = base + d_i with integer offsets d_i in [0, span]."""
    m = check_standard_form(eps)
    seen = set()
    for base in bases:
        for offs in product(range(span + 1), repeat=m):
            r = tuple(base + d for d in offs)
            if r not in seen and is_epsilon_adapted(eps, r):
                seen.add(r)
                yield r


def enumerate_labels(n: int, rank: int, q0: float, limit: int | None = 3, finite: bool = False,
                     theta: float = 0.0) -> Iterator[Label]:
    """Labels (S, s) of the given rank with sample central characters.

    finite=True restricts to character shapes, the shapes of finite-dimensional
    irreducibles.  Each shape gets up to ``limit`` central characters from adapted weights.
    """
    shapes = character_shapes(n, rank) if finite else self_adjoint_shapes(n, rank, theta)
    seen = set()
    for shape in shapes:
        key = (shape.tau, shape.u)
        if key in seen:
            continue
        seen.add(key)
        cands, _ = _eps_candidates(shape)
        if not cands:
            continue
        eps = cands[0]
        count = 0
        for r in _adapted_samples(eps, (0.0, 0.25), 2):
            char = central_from_weight(eps, r, q0)
            verdict = validate_label(shape, char, q0)
            if not verdict["valid"]:
                continue
            yield Label(shape, char, BigCellWeight(eps, r))
            count += 1
            if limit is not None and count >= limit:
                break
