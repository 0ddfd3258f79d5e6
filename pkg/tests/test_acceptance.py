"""Acceptance criteria at their stated tolerances and runtime limits.

Each test records one PASS/FAIL line, printed in the terminal summary.
The limit applies to the computation inside each test; weight fits shared
between criteria 3 and 6 are computed once and cached.
"""

from __future__ import annotations

import functools
import math
import time

import numpy as np
import pytest

from solvschwartz.definitions import BUNDLED, load_group
from solvschwartz.distributions import (
    Embedded,
    derivative,
    embed,
    growth_order,
    pair,
    slow_function,
    verify_flat_identity,
)
from solvschwartz.products import (
    check_block_structure,
    check_sigma_product,
    direct_product,
    separable_kernel_check,
)
from solvschwartz.realization import group_law_report
from solvschwartz.schwartz.comparisons import (
    es_comparison,
    extended_probe_set,
    linf_lq_comparison,
    lq_linf_comparison,
    side_comparison,
)
from solvschwartz.schwartz.convolution import (
    convolution_function,
    convolve,
    involution,
    truncate_mollify,
)
from solvschwartz.schwartz.derivatives import derivative_function, word_derivative, word_from_alpha
from solvschwartz.schwartz.functions import SmoothFunction, gaussian, probe, probe_set, tensor_bump
from solvschwartz.schwartz.seminorms import SeminormSpec, membership_report, seminorm
from solvschwartz.weights import (
    CONSTANT_CAP,
    SAMPLE_SCALES,
    Weight,
    compare_to_euclidean,
    property_report,
    sample_box,
    sandwich_constant,
)

pytestmark = pytest.mark.acceptance


@functools.lru_cache(maxsize=None)
def group(name):
    return load_group(name)


@functools.lru_cache(maxsize=None)
def fitted(name):
    """Weight with cached ``p, q, r, s`` fits and its property report."""
    w = Weight(group(name))
    return w, property_report(w, n_samples=10_000)


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def record(log, n, title, ok, detail, elapsed, limit):
    passed = bool(ok) and elapsed < limit
    line = (f"criterion {n:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail} "
            f"[{elapsed:.1f}s, limit {limit}s]")
    log[n] = line
    print(line)
    assert ok, line
    assert elapsed < limit, line


# ---------------------------------------------------------------------------


def test_1_group_law(acceptance_log):
    with Clock() as c:
        worst = {}
        for name in BUNDLED:
            law = group_law_report(group(name), n=1000, seed=1, n_jacobian=1)
            worst[name] = max(law["errors"][k] for k in ("associativity", "identity", "inverse"))
        r = group("m2")
        rng = np.random.default_rng(2)
        g, h = rng.uniform(-3, 3, (1000, 3)), rng.uniform(-3, 3, (1000, 3))
        t, n1, n2 = g.T
        t2, m1, m2 = h.T
        closed = np.stack([t + t2, n1 + m1 * np.cos(t) + m2 * np.sin(t),
                           n2 - m1 * np.sin(t) + m2 * np.cos(t)], axis=-1)
        m2_err = float(np.max(np.abs(r.multiply(g, h) - closed)))
    ok = max(worst.values()) <= 1e-9 and m2_err <= 1e-12
    detail = f"max axiom error {max(worst.values()):.1e} (tol 1e-9), M(2) closed form {m2_err:.1e} (tol 1e-12)"
    record(acceptance_log, 1, "group law", ok, detail, c.elapsed, 5)


def test_2_haar_and_modular(acceptance_log):
    with Clock() as c:
        jac, mult = 0.0, 0.0
        for name in BUNDLED:
            law = group_law_report(group(name), n=1000, seed=3, n_jacobian=200)
            jac = max(jac, law["errors"]["right_haar_jacobian"])
            mult = max(mult, law["errors"]["modular_multiplicative"])
        g = sample_box(group("axb"), 4.0, 1000, 4)
        axb_err = float(np.max(np.abs(group("axb").modular(g) / np.exp(g[:, 0]) - 1.0)))
        unimod = max(float(np.max(np.abs(group(n).modular(sample_box(group(n), 4.0, 1000, 5)) - 1.0)))
                     for n in ("heisenberg", "m2"))
    ok = jac <= 1e-6 and mult <= 1e-9 and axb_err <= 1e-9 and unimod <= 1e-10
    detail = (f"Jacobian {jac:.1e} (1e-6), multiplicative {mult:.1e} (1e-9), "
              f"ax+b e^t {axb_err:.1e} (1e-9), unimodular {unimod:.1e} (1e-10)")
    record(acceptance_log, 2, "Haar/modular", ok, detail, c.elapsed, 10)


def test_3_weight_properties(acceptance_log):
    with Clock() as c:
        reports = {name: fitted(name)[1] for name in BUNDLED}
    parts, ok = [], True
    for name, rep in reports.items():
        fits = rep["fits"]
        consts = [max(x["inverse"]["forward"]["constant"], x["inverse"]["backward"]["constant"],
                      x["subpolynomial"]["fit"]["constant"]) for x in rep["per_scale"]]
        p_ok = fits["p"] is not None and any(
            rep["volume"][k]["verdict"] == "convergent" and rep["volume_candidates"][k] == fits["p"]
            for k in rep["volume"])
        good = (rep["modular_domination"]["violations"] == 0
                and rep["modular_domination"]["n_samples"] >= 10_000
                and all(x["inverse"]["ok"] and x["subpolynomial"]["ok"] for x in rep["per_scale"])
                and max(consts) <= CONSTANT_CAP and p_ok)
        ok &= good
        parts.append(f"{name} r={fits['r']} s={fits['s']} p={fits['p']} C<={max(consts):.3g}")
    detail = "; ".join(parts) + f"; scales {list(SAMPLE_SCALES)}"
    record(acceptance_log, 3, "weight properties", ok, detail, c.elapsed, 60)


def test_4_membership(acceptance_log):
    with Clock() as c:
        members = {}
        for name in BUNDLED:
            r = group(name)
            w = Weight(r)
            members[name] = all(
                membership_report(r, w, probe(r, lab), k_max=6, alpha_max=3)["member"]
                for lab in ("gauss-0.5", "gauss-1", "gauss-2"))
        axb = group("axb")
        rejected = not membership_report(axb, Weight(axb), probe(axb, "nonmember-n"))["member"]
        r1 = group("r1")
        val = seminorm(r1, Weight(r1), gaussian(r1, 1.0), SeminormSpec(2, 0, (0,))).value
        err = abs(val - (math.pi / 2) ** 0.25)
    ok = all(members.values()) and rejected and err <= 1e-6
    detail = (f"Gaussians members {members}, e^(-y^2) on ax+b rejected={rejected}, "
              f"L2 closed form error {err:.1e} (1e-6)")
    record(acceptance_log, 4, "membership", ok, detail, c.elapsed, 120)


def test_5_algebra_structure(acceptance_log):
    alphas = {"r1": [(1,), (2,), (3,)],
              "heisenberg": [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]}
    with Clock() as c:
        worst, methods, ok = 0.0, set(), True
        for name, alist in alphas.items():
            r = group(name)
            phi = gaussian(r, 1.0, center=np.full(r.dim, 0.3))
            psi = gaussian(r, 2.0, center=np.full(r.dim, -0.2))
            g = np.random.default_rng(0).uniform(-1, 1, (20, r.dim))
            conv = convolution_function(r, phi, psi)
            for a in alist:
                lhs = word_derivative(r, conv, word_from_alpha(a), g)
                res = convolve(r, phi, derivative_function(r, psi, alpha=a), g)
                err = float(np.max(np.abs(lhs - res.values)))
                ok &= err <= max(1e-4, 10 * res.tail_bound)
                worst = max(worst, err)
                methods.add(res.method)
        inv_err = 0.0
        for name in BUNDLED:
            r = group(name)
            f = probe(r, "osc")
            pts = np.random.default_rng(1).uniform(-1.5, 1.5, (200, r.dim))
            inv_err = max(inv_err, float(np.max(np.abs(involution(r, involution(r, f))(pts) - f(pts)))))
        r1 = group("r1")
        x = np.linspace(-3, 3, 13)[:, None]
        gg = convolve(r1, gaussian(r1), gaussian(r1), x).values
        gg_err = float(np.max(np.abs(gg - math.sqrt(math.pi / 2) * np.exp(-x[:, 0] ** 2 / 2))))
        heis = group("heisenberg")
        a = gaussian(heis, 1.0, center=[1.0, 0.0, 0.0])
        b = gaussian(heis, 1.0, center=[0.0, 1.0, 0.0])
        p = np.array([0.5, 0.5, 0.5])
        ab, ba = convolve(heis, a, b, p).values, convolve(heis, b, a, p).values
        witness = abs(ab - ba) > 1e-3 * max(abs(ab), abs(ba))
    ok = ok and inv_err <= 1e-10 and gg_err <= 1e-6 and witness
    detail = (f"X^a(phi*psi) worst {worst:.1e} (1e-4, methods {sorted(methods)}, no Monte Carlo), "
              f"(phi*)* {inv_err:.1e} (1e-10), Gaussian*Gaussian {gg_err:.1e} (1e-6), "
              f"Heisenberg phi*psi={ab:.6f} psi*phi={ba:.6f}")
    record(acceptance_log, 5, "algebra structure", ok, detail, c.elapsed, 180)


def test_6_seminorm_topology(acceptance_log):
    fits = {name: fitted(name)[0] for name in BUNDLED}  # shared with criterion 3
    with Clock() as c:
        parts, ok = [], True
        for name in BUNDLED:
            r, w = group(name), fits[name]
            probes = probe_set(r)
            zero = (0,) * r.dim
            up = lq_linf_comparison(r, w, probes, 0, zero, w.fits["p"])
            down = linf_lq_comparison(r, w, probes, 0, zero, w.fits["r"], w.fits["s"])
            side = side_comparison(r, w, probes, k_max=1, alpha_max=1)
            ok &= up.holds and down.holds and side["holds"]
            parts.append(f"{name} L1<=Linf C={up.constant:.2g}, Linf<=L1 C={down.constant:.2g}, "
                         f"right/left C={max(side['right<=left'].constant, side['left<=right'].constant):.2g}")
    record(acceptance_log, 6, "seminorm topology", ok, "; ".join(parts), c.elapsed, 120)


def test_7_density(acceptance_log):
    schedule = [(2, 1), (3, 2), (4, 3), (5, 4), (6, 5)]
    with Clock() as c:
        parts, ok = [], True
        for name in BUNDLED:
            r = group(name)
            w = Weight(r)
            f = probe(r, "gauss-1")
            e1 = (1,) + (0,) * (r.dim - 1)
            errs = []
            for j, l in schedule:
                d = f - truncate_mollify(r, f, l, j)
                errs.append(max(seminorm(r, w, d, SeminormSpec(1, k, a), box=f.box(), budget=30_000).value
                                for k, a in ((0, (0,) * r.dim), (1, e1))))
            ok &= errs[-1] < 1e-2 and errs[-1] < errs[0]
            parts.append(f"{name} {errs[0]:.2g} -> {errs[-1]:.2g}")
    detail = f"max over (k,a) in {{(0,0),(1,e1)}} of ||f - f_jl||_1, (j,l) {schedule[0]}->{schedule[-1]}: " + ", ".join(parts)
    record(acceptance_log, 7, "density", ok, detail, c.elapsed, 120)


def test_8_distributions(acceptance_log):
    alphas = {"r1": [(1,), (2,)], "axb": [(1, 0), (0, 1), (1, 1)],
              "heisenberg": [(1, 0, 0), (0, 0, 1), (0, 1, 1)], "m2": [(1, 0, 0), (0, 1, 0)]}
    with Clock() as c:
        worst = 0.0
        for name, alist in alphas.items():
            r = group(name)
            w = Weight(r)
            for label in ("cos", "quad"):
                f = slow_function(r, w, label)[0]
                k = growth_order(r, w, f)
                T0 = embed(r, w, f, k, label)
                for a in alist:
                    df = derivative_function(r, SmoothFunction(f, None, label, r.dim), alpha=a)
                    for plab in ("gauss-1", "bump-1"):
                        phi = probe(r, plab)
                        lhs = pair(derivative(T0, alpha=a), phi).value
                        rhs = pair(Embedded(r, df, k), phi).value
                        worst = max(worst, abs(lhs - rhs))
        flat = {}
        for name, points, tol in (("r1", (4, 8, 16, 32), 1e-5), ("heisenberg", (6, 8, 10, 12), 1e-3)):
            r = group(name)
            w = Weight(r)
            h = slow_function(r, w, "cos")[0]
            res = [verify_flat_identity(r, w, h, 1, tensor_bump(r), points=p, panels=2)["residual"]
                   for p in points]
            halving = all(b <= 0.5 * a for a, b in zip(res, res[1:]))
            flat[name] = (res, res[-1] < tol and halving)
    ok = worst <= 1e-4 and all(v[1] for v in flat.values())
    detail = (f"consistency worst {worst:.1e} (1e-4); flat identity 1-D "
              f"{[f'{x:.1e}' for x in flat['r1'][0]]} (<1e-5), 3-D "
              f"{[f'{x:.1e}' for x in flat['heisenberg'][0]]} (<1e-3), halving under refinement")
    record(acceptance_log, 8, "distributions", ok, detail, c.elapsed, 120)


def test_9_products(acceptance_log):
    with Clock() as c:
        block_err, ok = 0.0, True
        for a, b in (("axb", "heisenberg"), ("r1", "axb"), ("axb", "axb"), ("m2", "r1")):
            rep = check_block_structure(direct_product(group(a), group(b)))
            block_err = max(block_err, rep["multiply_max_rel_error"], rep["modular_max_rel_error"])
            ok &= rep["g0_block"]
        sig = {}
        for a, b in (("axb", "heisenberg"), ("axb", "axb")):
            pr = direct_product(group(a), group(b))
            rep = check_sigma_product(pr, Weight(pr.r), Weight(group(a)), Weight(group(b)))
            sig[f"{a}x{b}"] = [round(x["C"], 3) for x in rep["per_scale"]]
            ok &= rep["stable"] and rep["C"] <= CONSTANT_CAP
        r1 = group("r1")
        w = Weight(r1)
        one = slow_function(r1, w, "one")[0]
        kern = separable_kernel_check(direct_product(r1, r1), w, w, one, one, 0, 0,
                                      gaussian(r1), gaussian(r1))
        pi_err = abs(kern["kernel"]["value"] - math.pi)
    ok = ok and block_err <= 1e-10 and pi_err <= 1e-4
    detail = f"block error {block_err:.1e} (1e-10), sigma12 C per scale {sig} (within 2x), pi error {pi_err:.1e} (1e-4)"
    record(acceptance_log, 9, "products and kernels", ok, detail, c.elapsed, 60)


def test_10_comparisons(acceptance_log):
    with Clock() as c:
        heis = group("heisenberg")
        wh = Weight(heis)
        fits = [compare_to_euclidean(wh, sample_box(heis, s, 10_000, 10 + i))
                for i, s in enumerate(SAMPLE_SCALES)]
        heis_ok = all(f["ok"] for f in fits)
        m2 = group("m2")
        wm = Weight(m2)
        pool = np.vstack([sample_box(m2, s, 10_000 // 3 + 1, 20 + i) for i, s in enumerate(SAMPLE_SCALES)])
        c_m2 = sandwich_constant(wm, pool)
        axb = group("axb")
        es = es_comparison(axb, Weight(axb), extended_probe_set(axb, 20))
    ok = heis_ok and c_m2 <= 1e3 and len(pool) >= 10_000 and es["holds"]
    up = [f["sigma_le_C_norm_pow"] for f in fits]
    detail = (f"Heisenberg sigma<=C(1+|g|)^e fits {[(u['exponent'], round(u['constant'], 2)) for u in up]}; "
              f"M(2) sandwich C={c_m2:.3g} on {len(pool)} samples; ax+b ES<->S_sigma "
              f"C={es['sigma<=es'].constant:.3g}/{es['es<=sigma'].constant:.3g}")
    record(acceptance_log, 10, "comparisons", ok, detail, c.elapsed, 120)
