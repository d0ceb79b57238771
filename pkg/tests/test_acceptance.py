"""Acceptance criteria 1-14; each test logs one PASS/FAIL line, collected in the terminal summary."""

import itertools
import time
from functools import lru_cache

import numpy as np
import pytest

from qrea import braid, rea
from qrea.classify import (central_from_weight, enumerate_labels, shape_family, validate_label, weight_from_central,
                           zsk_weight_formula)
from qrea.reps import (EXACT, RepresentationError, apply_alpha, central_values, character_rep, detect_shape,
                       rayleigh, re_residual, run_chain, split_weights, twist_by_triangular, uq_limit,
                       verma_big_cell, weight_analysis)
from qrea.shapes import (Shape, character_shapes, closure, eps_signature, frak_c, restrict, signature,
                         weight_combinatorics)
from qrea.triangular import build_verma, is_epsilon_adapted

Q = 0.5


class Criterion:
    def __init__(self, log, num, title):
        self.log, self.num, self.title = log, num, title
        self.ok, self.detail = False, ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            self.ok, self.detail = False, f"{exc_type.__name__}: {exc}"
        secs = time.perf_counter() - self.t0
        line = f"{'PASS' if self.ok else 'FAIL'} criterion {self.num:2d} {self.title}: {self.detail} [{secs:.1f} s]"
        self.log.append(line)
        print(line)
        return False


# -- shared corpus ---------------------------------------------------------------------------------

def characters(n_max, a=1.3):
    for n in range(1, n_max + 1):
        for k in range(n + 1):
            for l in range((n - k) // 2 + 1):
                for c in (1.0, -1.0):
                    yield (n, k, l, c), character_rep(n, k, l, a, c, [0.4] * l, Q)


def words(n, max_len=3):
    for length in range(1, max_len + 1):
        for w in itertools.product(range(1, n), repeat=length):
            if all(a != b for a, b in zip(w, w[1:])):
                yield w


@lru_cache(maxsize=None)
def chain_corpus():
    out = []
    for key, ch in characters(3):
        if key[0] < 2:
            continue
        for w in words(key[0]):
            out.append((key, w, ch, run_chain(ch, w, 16)))
    return out


VERMAS = [((1,), (0.3,)), ((1, 1), (0.0, 0.0)), ((1, 1), (0.0, 1.0)), ((1, -1), (0.2, 0.5)),
          ((-1, 1), (0.3, 0.3)), ((-1, -1), (0.3, 0.0)), ((1, 0), (0.2,)), ((1, 1, 1), (0.0, 0.0, 0.0)),
          ((1, -1, 1), (0.0, 0.2, 0.2)), ((-1, -1, 1), (0.0, 0.3, 0.3)), ((1, 1, -1), (0.0, 1.0, 0.4)),
          ((1, -1, 0), (0.1, 0.3))]


assert all(is_epsilon_adapted(eps, r) for eps, r in VERMAS)


@lru_cache(maxsize=None)
def verma_corpus():
    return [(eps, r, verma_big_cell(eps, r, 6, Q)) for eps, r in VERMAS]


def standard_eps(n, full_rank=False):
    for m in range(n if full_rank else 1, n + 1):
        for signs in itertools.product((1, -1), repeat=m):
            yield signs + (0,) * (n - m)


def adapted(eps, bases, span):
    m = sum(1 for e in eps if e)
    for base in bases:
        for offs in itertools.product(range(span + 1), repeat=m):
            r = tuple(base + d for d in offs)
            if is_epsilon_adapted(eps, r):
                yield r


# -- criteria -------------------------------------------------------------------------------------

def test_criterion_01_braid_exact(acceptance_log):
    with Criterion(acceptance_log, 1, "braid, Hecke and self-adjointness exact for N=2,3,4") as c:
        t0 = time.perf_counter()
        reports = [braid.verify_braid(i, n) for n in (2, 3, 4) for i in ("braid", "hecke", "selfadjoint")]
        secs = time.perf_counter() - t0
        bad = [(r["identity"], r["n"]) for r in reports if not r["passed"]]
        c.ok = not bad and secs < 10
        c.detail = f"{len(reports)} exact checks, failures {bad}, {secs:.2f} s (limit 10 s)"
    assert c.ok, c.detail


def test_criterion_02_minor_tables_and_laplace(acceptance_log):
    with Criterion(acceptance_log, 2, "minor coefficient tables and Laplace agreement") as c:
        t0 = time.perf_counter()
        tables = [braid.verify_braid(i, n) for n in (1, 2, 3, 4) for i in ("coeff-support", "coeff-diagonal")]
        lap = [rea.verify_identity("laplace-agreement", n, {"max_k": 3}) for n in (2, 3)]
        secs = time.perf_counter() - t0
        bad = [(r["identity"], r["n"]) for r in tables + lap if not r["passed"]]
        c.ok = not bad and secs < 300
        c.detail = (f"{sum(r['instances'] for r in tables)} tables, "
                    f"{sum(r['instances'] for r in lap)} Laplace instances, failures {bad}, {secs:.1f} s")
    assert c.ok, c.detail


def test_criterion_03_central_elements(acceptance_log):
    with Criterion(acceptance_log, 3, "sigma_k central, self-adjoint, quantum determinant") as c:
        t0 = time.perf_counter()
        reps_ = [rea.verify_identity(i, n) for n in (2, 3) for i in ("centrality", "qdet-sigma")]
        star_bad = [(k, n) for n in (2, 3) for k in range(1, n + 1)
                    if not (rea.sigma(k, n).star() - rea.sigma(k, n)).normal_form().is_zero()]
        secs = time.perf_counter() - t0
        bad = [(r["identity"], r["n"]) for r in reps_ if not r["passed"]]
        c.ok = not bad and not star_bad and secs < 300
        c.detail = (f"{sum(r['instances'] for r in reps_)} instances, failures {bad}, star failures {star_bad}, "
                    f"{secs:.1f} s")
    assert c.ok, c.detail


def test_criterion_04_muir_and_general_commutation(acceptance_log):
    with Criterion(acceptance_log, 4, "Muir identities and general commutation") as c:
        t0 = time.perf_counter()
        out = []
        for ident in ("muir-1", "muir-2", "general-comm"):
            out.append(rea.verify_identity(ident, 2, {"max_k": 2}))
            out.append(rea.verify_identity(ident, 3, {"max_k": 3, "sample": 50, "seed": 7}))
        secs = time.perf_counter() - t0
        bad = [(r["identity"], r["n"]) for r in out if not r["passed"]]
        n3 = min(r["instances"] for r in out if r["n"] == 3)
        c.ok = not bad and n3 >= 50 and secs < 600
        c.detail = f"{sum(r['instances'] for r in out)} instances (N=3 min {n3}), failures {bad}, {secs:.1f} s"
    assert c.ok, c.detail


def test_criterion_05_reflection_equation(acceptance_log):
    with Criterion(acceptance_log, 5, "reflection equation on every constructed representation") as c:
        res = [re_residual(rep) for _, rep in characters(4)]
        res += [re_residual(item[3].rep) for item in chain_corpus()]
        res += [re_residual(vm) for *_, vm in verma_corpus()]
        worst = max(res)
        c.ok = worst <= 1e-8
        c.detail = f"{len(res)} representations, max residual {worst:.2e} (tol 1e-8)"
    assert c.ok, c.detail


def test_criterion_06_harish_chandra(acceptance_log):
    with Criterion(acceptance_log, 6, "Harish-Chandra values on verma representations") as c:
        cases = [(eps, r) for eps in standard_eps(2) for r in adapted(eps, (0.0, 0.3), 1)]
        cases += [(eps, r) for eps in standard_eps(3) for r in adapted(eps, (0.0,), 1)]
        worst = 0.0
        for eps, r in cases:
            vm = verma_big_cell(eps, r, 6, Q)
            dev = np.max(np.abs(central_values(vm) - central_from_weight(eps, r, Q).values))
            worst = max(worst, float(dev))
        c.ok = len(cases) >= 20 and worst <= 1e-8
        c.detail = f"{len(cases)} adapted weights, max deviation {worst:.2e} (tol 1e-8)"
    assert c.ok, c.detail


def test_criterion_07_coaction_shapes(acceptance_log):
    with Criterion(acceptance_log, 7, "coaction shape law with measured split roots") as c:
        mismatched, splits, worst = [], 0, 0.0
        for key, w, _, res in chain_corpus():
            if not res.shapes_match:
                mismatched.append((key, w))
            for chk in res.splits:
                splits += 1
                for root in chk.roots:
                    worst = max(worst, min(abs(root - v) for v in chk.measured))
        exact = split_weights(1 + Q ** 2, 1.0, 1.0, Q)
        exact_ok = exact == (1.0, Q ** 2) or np.allclose(exact, (1.0, Q ** 2), rtol=0, atol=1e-15)
        c.ok = not mismatched and worst <= 1e-6 and splits > 0 and exact_ok
        c.detail = (f"{len(chain_corpus())} chains, mismatches {mismatched}, {splits} splits, "
                    f"max root error {worst:.2e} (tol 1e-6), (1+q^2,1,1) -> {tuple(map(float, exact))}")
    assert c.ok, c.detail


def test_criterion_08_central_coinvariance(acceptance_log):
    with Criterion(acceptance_log, 8, "central values invariant under coaction and trivial limit") as c:
        worst_a = worst_u = 0.0
        for _, _, ch, res in chain_corpus():
            base = central_values(ch)
            worst_a = max(worst_a, float(np.max(np.abs(central_values(res.rep) - base))))
            worst_u = max(worst_u, float(np.max(np.abs(central_values(uq_limit(res.rep)) - base))))
        c.ok = worst_a <= 1e-8 and worst_u <= 1e-10
        c.detail = f"coaction max deviation {worst_a:.2e} (tol 1e-8), trivial limit {worst_u:.2e} (tol 1e-10)"
    assert c.ok, c.detail


def test_criterion_09_restriction_law(acceptance_log):
    with Criterion(acceptance_log, 9, "detection commutes with restriction; shapes self-adjoint") as c:
        bad, count, shapes = [], 0, []
        for key, rep in characters(3):
            s = detect_shape(rep)
            shapes.append(s)
            if key[0] == 1:
                continue
            count += 1
            if detect_shape(rep.restriction()) != restrict(s):
                bad.append(("character", key))
        for *_, vm in verma_corpus():
            s = detect_shape(vm)
            shapes.append(s)
            if vm.n == 1:
                continue
            count += 1
            if detect_shape(vm.restriction()) != restrict(s):
                bad.append(("verma", vm.provenance["base"]))
        for key, w, _, res in chain_corpus():
            low = res.rep.restriction()
            for p in res.pieces:
                shapes.append(p.shape)
                count += 1
                got = detect_shape(low, p.span, strict=False).cycle_normalized()
                if got != restrict(p.shape).cycle_normalized():
                    bad.append(("chain", key, w))
        not_sa = [s.describe() for s in shapes if not s.is_self_adjoint()]
        c.ok = not bad and not not_sa
        c.detail = f"{count} checks, mismatches {bad}, non-self-adjoint {not_sa}"
    assert c.ok, c.detail


def test_criterion_10_highest_weight_unique(acceptance_log):
    with Criterion(acceptance_log, 10, "highest weight space one-dimensional in every block") as c:
        blocks, bad = 0, []
        for key, w, _, res in chain_corpus():
            for p in res.pieces:
                blocks += 1
                try:
                    rep_w = weight_analysis(res.rep, p.shape, p.span)
                except RepresentationError:
                    rep_w = weight_analysis(res.rep, p.shape, p.span, modulus=True)
                if not rep_w.unique:
                    bad.append((key, w, p.shape.describe()))
        for *_, vm in verma_corpus():
            blocks += 1
            if not weight_analysis(vm, detect_shape(vm)).unique:
                bad.append(vm.provenance["base"])
        c.ok = not bad
        c.detail = f"{blocks} blocks, non-unique {bad}"
    assert c.ok, c.detail


def _formula_error(rep, shape, central, v0):
    verdict = validate_label(shape, central, Q)
    if not verdict["valid"]:
        return None
    r = verdict["weight"]["r"]
    err = 0.0
    for k in range(1, shape.rank + 1):
        want = Q ** zsk_weight_formula(shape, r, k)
        got = abs(rayleigh(rep, *shape.leading_pair(k), v0))
        err = max(err, abs(got - want) / want)
    return err


def test_criterion_11_weight_formula(acceptance_log):
    with Criterion(acceptance_log, 11, "leading-minor weights match the weight formula") as c:
        worst, count, bad = 0.0, 0, []
        for key, w, ch, res in chain_corpus():
            central = central_values(ch).real
            for p in res.pieces:
                err = _formula_error(res.rep, p.shape, central, p.vector)
                count += 1
                if err is None or err > 1e-6:
                    bad.append((key, w, p.shape.describe(), err))
                else:
                    worst = max(worst, err)
        for *_, vm in verma_corpus():
            s = detect_shape(vm)
            err = _formula_error(vm, s, central_values(vm).real, weight_analysis(vm, s).highest_vector)
            count += 1
            if err is None or err > 1e-6:
                bad.append((vm.provenance["base"], err))
            else:
                worst = max(worst, err)
        ex = Shape(5, (4, 5, 3, 1, 2), (1, 1, 1, 1, 1))
        comb = weight_combinatorics(ex)
        example_ok = (comb.cycle_order == ((3,), (1, 4), (2, 5)) and tuple(comb.w_eps) == (3, 5)
                      and frak_c(ex, 3)[:2] == [5, 3] and closure(ex, (4,), (1,)) == (1, 3, 4))
        c.ok = not bad and example_ok
        c.detail = (f"{count} highest weight vectors, max relative error {worst:.2e} (tol 1e-6), "
                    f"failures {bad}, worked example {'reproduced' if example_ok else 'WRONG'}")
    assert c.ok, c.detail


def test_criterion_12_classification(acceptance_log):
    with Criterion(acceptance_log, 12, "classification round trip and label enumeration") as c:
        points, worst = 0, 0.0
        for q in (0.3, 0.5):
            for n in (1, 2, 3):
                for eps in standard_eps(n):
                    for r in adapted(eps, (0.0, 0.3), 2):
                        s = central_from_weight(eps, r, q)
                        back = weight_from_central(s, eps_signature(eps), q)
                        dev = np.max(np.abs(np.subtract(central_from_weight(back.eps, back.r, q).values,
                                                        s.values)))
                        worst = max(worst, float(dev))
                        points += 1
        fams = {shape_family(l.shape) for l in enumerate_labels(4, 4, Q, limit=1, finite=True)}
        want = {((1, 2, 3, 4), (1, 1, 1, 1)), ((4, 2, 3, 1), (1, 1, 1, 1)), ((4, 3, 2, 1), (1, 1, 1, 1))}
        labels = [l for n in (1, 2, 3) for rank in range(n + 1) for l in enumerate_labels(n, rank, Q, limit=2)]
        labels += list(enumerate_labels(4, 4, Q, limit=2, finite=True))
        invalid = []
        for lab in labels:
            v = validate_label(lab.shape, lab.char, Q)
            if not v["valid"] or tuple(v["signature"]) != signature(lab.shape):
                invalid.append(lab.shape.describe())
        c.ok = points >= 200 and worst <= 1e-8 and fams == want and not invalid
        c.detail = (f"{points} grid points, max deviation {worst:.2e} (tol 1e-8); rank-4 families "
                    f"{sorted(f[0] for f in fams)}; {len(labels)} labels, invalid {invalid}")
    assert c.ok, c.detail


def test_criterion_13_adaptedness_and_gram(acceptance_log):
    with Criterion(acceptance_log, 13, "adapted weights unitarizable, non-adapted ones not") as c:
        eps_list = [e for n in (2, 3) for e in standard_eps(n, full_rank=True)]
        positive, not_positive = 0, []
        samples, flips, late, never = 0, 0, [], []
        for eps in eps_list:
            m = len(eps)
            for base in (0.0, 0.3):
                for offs in itertools.product(range(2), repeat=m):
                    r = tuple(base + o for o in offs)
                    if is_epsilon_adapted(eps, r):
                        ratio = build_verma(eps, r, 6, Q, require_positive=False).min_block_ratio()
                        if ratio >= -1e-9:
                            positive += 1
                        else:
                            not_positive.append((eps, r, ratio))
                    if base:
                        continue
                    for i, d in itertools.product(range(m), (-0.05, 0.05, -1.0)):
                        r2 = tuple(x + (d if j == i else 0.0) for j, x in enumerate(r))
                        if is_epsilon_adapted(eps, r2):
                            continue
                        samples += 1
                        for cutoff in (6, 8, 10):
                            if build_verma(eps, r2, cutoff, Q, require_positive=False).min_block_ratio() < -1e-9:
                                flips += 1
                                if cutoff > 6:
                                    late.append((eps, r2, cutoff))
                                break
                        else:
                            never.append((eps, r2))
        c.ok = not not_positive and samples >= 10 and not never
        c.detail = (f"{positive} adapted weights positive at cutoff 6, failures {not_positive}; "
                    f"{flips}/{samples} non-adapted samples negative ({len(late)} only above cutoff 6), "
                    f"never negative {never}")
    assert c.ok, c.detail


def test_criterion_14_finite_dimensional_shapes(acceptance_log):
    with Criterion(acceptance_log, 14, "finite-dimensional representations have character shapes") as c:
        def is_char_shape(s):
            return any(s.tau == x.tau and s.support == x.support for x in character_shapes(s.n))

        bad, count = [], 0
        for key, ch in characters(3):
            count += 1
            if not is_char_shape(detect_shape(ch)):
                bad.append(("character", key))
        closed = [((1, 1), (0.0, 0.0)), ((1, 1), (0.0, 1.0)), ((1, 1), (0.0, 2.0)), ((1, 1, 1), (0.0, 0.0, 0.0)),
                  ((1, 1, 1), (0.0, 0.0, 1.0)), ((1, 1, 1), (0.0, 1.0, 1.0)), ((1, 1, 1), (0.0, 1.0, 2.0))]
        for eps, r in closed:
            tri = verma_big_cell(eps, r, 6, Q)
            if not np.all(tri.headroom >= EXACT):
                bad.append(("not finite-dimensional", eps, r))
                continue
            for key, ch in characters(3):
                if key[0] != len(eps):
                    continue
                count += 1
                tw = twist_by_triangular(ch, tri)
                if re_residual(tw) > 1e-8 or not is_char_shape(detect_shape(tw)):
                    bad.append(("twisted", eps, r, key))
        c.ok = not bad
        c.detail = f"{count} finite-dimensional representations, failures {bad}"
    assert c.ok, c.detail
