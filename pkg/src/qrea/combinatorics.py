"""Index sets of [N]: the two orders, positional selection, weights, inversions."""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Mapping, Sequence

IndexSet = tuple[int, ...]

PRECEDES, SUCCEEDS, EQUAL, INCOMPARABLE = "precedes", "succeeds", "equal", "incomparable"


def index_set(elements: Iterable[int], n: int | None = None) -> IndexSet:
    """Normalize to a strictly increasing tuple, checking range when ``n`` is given."""
    out = tuple(sorted(elements))
    if len(set(out)) != len(out):
        raise ValueError(f"repeated element in index set {out}")
    if n is not None and out and (out[0] < 1 or out[-1] > n):
        raise ValueError(f"index set {out} not contained in [1..{n}]")
    return out


def subsets(n: int, k: int) -> list[IndexSet]:
    """All k-subsets of [n] in lexicographic order."""
    return list(combinations(range(1, n + 1), k))


def _check_sizes(i: Sequence[int], j: Sequence[int]) -> None:
    if len(i) != len(j):
        raise ValueError(f"size mismatch: {tuple(i)} vs {tuple(j)}")


def lex_cmp(i: Sequence[int], j: Sequence[int]) -> int:
    """-1, 0, 1 as I <, =, > J in the lexicographic order on equal-size sets."""
    _check_sizes(i, j)
    for a, b in zip(i, j):
        if a != b:
            return -1 if a < b else 1
    return 0


def pair_cmp(a: tuple[Sequence[int], Sequence[int]], b: tuple[Sequence[int], Sequence[int]]) -> int:
    """Lexicographic comparison of pairs, first coordinate first."""
    c = lex_cmp(a[0], b[0])
    return c if c else lex_cmp(a[1], b[1])


def dominance(i: Sequence[int], j: Sequence[int]) -> str:
    _check_sizes(i, j)
    le = all(a <= b for a, b in zip(i, j))
    ge = all(a >= b for a, b in zip(i, j))
    if le and ge:
        return EQUAL
    if le:
        return PRECEDES
    if ge:
        return SUCCEEDS
    return INCOMPARABLE


def preceq(i: Sequence[int], j: Sequence[int]) -> bool:
    return dominance(i, j) in (PRECEDES, EQUAL)


def select(i: Sequence[int], k: Iterable[int]) -> tuple[IndexSet, IndexSet]:
    """Return (I_K, I^K) for a set K of 1-based positions."""
    k = index_set(k)
    if k and (k[0] < 1 or k[-1] > len(i)):
        raise ValueError(f"positions {k} out of range for a set of size {len(i)}")
    picked = tuple(i[p - 1] for p in k)
    rest = tuple(x for p, x in enumerate(i, start=1) if p not in k)
    return picked, rest


def wt(i: Iterable[int]) -> int:
    return sum(i)


def _as_mapping(sigma) -> dict:
    if isinstance(sigma, Mapping):
        return dict(sigma)
    return {p: v for p, v in enumerate(sigma, start=1)}


def inversions(sigma) -> int:
    """Number of inversions of a bijection between totally ordered sets.

    ``sigma`` is a mapping, or a sequence read as p -> sigma[p-1].
    """
    m = _as_mapping(sigma)
    if len(set(m.values())) != len(m):
        raise ValueError("not a bijection")
    dom = sorted(m)
    return sum(1 for a, b in combinations(dom, 2) if m[a] > m[b])


def descents_below(sigma) -> int:
    """a(sigma) = |{l : sigma(l) < l}|."""
    m = _as_mapping(sigma)
    if len(set(m.values())) != len(m):
        raise ValueError("not a bijection")
    return sum(1 for l, v in m.items() if v < l)


def position_sets(k: int, m: int) -> list[IndexSet]:
    return subsets(k, m)
