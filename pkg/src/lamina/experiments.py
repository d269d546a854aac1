"""End-to-end pipelines behind the command-line subcommands.

Each pipeline returns an :class:`Outcome`: a table (columns and rows) or a
single report, summary values, and named pass/fail checks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .base_dynamics import make_base
from .config import ExperimentConfig
from .graph_transform import LeafSetup, contraction_sweep, solve_leaf_chain
from .holder_metrics import (DIMENSION_NOTE, AtypicalCover, FullCircle, PatternAvoidingSet, alpha_theoretical,
                             box_dimension, dyadic_unstable_pairs, falconer_check, fit_power_law, tabulated_lift,
                             weierstrass_lift)
from .lamination import (central_leaf, central_leaf_pair, compare_fiber_maps, conjugated_fiber_map,
                         invariance_residual, stable_leaf_point)
from .skew_core import PerturbedMap, SkewProduct, TrigFiberFamily, make_standard_perturbation
from .symbolic_deviations import count_atypical, cover_volume, doubling_orbit, nu_estimate, weak_ergodic_profile


@dataclass
class Outcome:
    columns: list | None = None
    rows: list | None = None
    report: dict | None = None
    summary: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


@dataclass
class Model:
    base: object
    F: SkewProduct
    G: PerturbedMap
    setup: LeafSetup


def build_model(cfg: ExperimentConfig) -> Model:
    b = cfg.base
    if b.kind == "solenoid":
        base = make_base("solenoid", lam=b.lam, R=b.R, n_terms=b.n_terms)
    else:
        base = make_base("anosov", matrix=tuple(tuple(r) for r in b.matrix))
    F = SkewProduct(base, TrigFiberFamily(cfg.fiber.a, cfg.fiber.eps0))
    G = make_standard_perturbation(F, cfg.epsilon, seed=cfg.perturbation_seed)
    setup = LeafSetup(G, delta=cfg.delta, n_x=cfg.grid.n_x, n_m=cfg.grid.n_m)
    return Model(base, F, G, setup)


def base_points(model: Model, n: int, seed: int):
    rng = np.random.default_rng(seed)
    return [model.base.random_point(rng) for _ in range(n)]


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _model_summary(model: Model) -> dict:
    c = model.base.constants
    return {"rho": model.G.rho or 0.0, "delta": model.setup.delta, "L": model.setup.L, "D": model.setup.D,
            "mu": c.mu, "lambda": c.lambda_}


def run_solve_leaf(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    model = build_model(cfg)
    b = base_points(model, 1, cfg.seed)[0]
    leaf = solve_leaf_chain(cfg.kind, b, model.setup, cfg.depth)[0]
    rep = leaf.report
    report = {
        "kind": leaf.kind, "depth": leaf.depth, "sup_norm_out": leaf.sup_norm(), "lip_out": leaf.lipschitz(),
        "lip_budget": leaf.lip_budget, "error_bound": leaf.error_bound,
        "measured_ratio": rep.measured_ratio if rep else float("nan"),
        "newton_iterations": rep.newton_iterations if rep else 0,
        "max_residual": rep.max_residual if rep else 0.0,
        **_model_summary(model),
    }
    return Outcome(report=report, checks={"admissible": leaf.is_admissible(1e-9)})


def run_contraction(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    model = build_model(cfg)
    pts = base_points(model, cfg.n_points, cfg.seed)
    ratios = contraction_sweep(model.setup, pts, cfg.pairs_per_point, kind=cfg.kind, seed=cfg.seed, threads=threads)
    c = model.base.constants
    rate = c.mu if cfg.kind == "s" else c.lambda_
    rows = [[i, j, float(ratios[i, j])] for i in range(len(pts)) for j in range(ratios.shape[1])]
    summary = {"max_ratio": float(ratios.max()), "nominal_rate": rate, **_model_summary(model)}
    return Outcome(["point", "pair", "measured_ratio"], rows, summary=summary,
                   checks={"contraction": bool(ratios.max() <= rate + cfg.contraction_tolerance)})


def run_central(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    model = build_model(cfg)
    pts = base_points(model, cfg.n_points, cfg.seed)

    def one(b):
        Wb, Whb = central_leaf_pair(b, model.setup, cfg.depth, cfg.grid.central_n_m)
        res = invariance_residual(Wb, Whb, model.G)
        ratio = Wb.stable_leaf.report.measured_ratio if Wb.stable_leaf.report else float("nan")
        return Wb, res, ratio

    out = _pmap(one, pts, threads)
    rows, ok = [], True
    for i, (W, res, ratio) in enumerate(out):
        allowed = max(1e-6, 2 * (ratio if np.isfinite(ratio) else 0.0) ** cfg.depth * model.setup.delta)
        ok &= res <= allowed
        rows.append([i, W.base_point.coords[0], res, W.sup_norm(), W.lipschitz(),
                     float(np.max(np.abs(W.displacement()))), W.tilde_lipschitz(), W.iterations])
    cols = ["point", "y", "invariance_residual", "sup_beta", "lip_beta", "sup_displacement", "lip_tilde_beta",
            "fixed_point_iterations"]
    return Outcome(cols, rows, summary=_model_summary(model), checks={"invariance": bool(ok)})


def run_conjugate(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    model = build_model(cfg)
    pts = base_points(model, cfg.n_points, cfg.seed)
    rho = model.G.rho or 0.0

    def one(b):
        Wb, Whb = central_leaf_pair(b, model.setup, cfg.depth, cfg.grid.central_n_m)
        cmp = compare_fiber_maps(Wb, Whb, model.G)
        # Hölder column: neighbouring base point along the unstable direction
        b2 = model.base.shift_along_unstable(b, 2.0 ** -8)
        W2, W2h = central_leaf_pair(b2, model.setup, cfg.depth, cfg.grid.central_n_m)
        m = Wb.m_grid
        g1, _ = conjugated_fiber_map(Wb, Whb, model.G, m)
        g2, _ = conjugated_fiber_map(W2, W2h, model.G, m)
        dgg = float(np.max(np.abs((g1 - g2 + 0.5) % 1.0 - 0.5)))
        return cmp, model.base.point_distance(b, b2), dgg

    out = _pmap(one, pts, threads)
    rows = []
    for i, (cmp, dbb, dgg) in enumerate(out):
        rows.append([i, cmp.c0, cmp.c1, cmp.inverse_c0, cmp.c0 / rho if rho else 0.0, cmp.roundtrip, dbb, dgg])
    cols = ["point", "c0_g_f", "c1_g_f", "c0_ginv_finv", "c0_over_rho", "roundtrip", "base_distance",
            "c0_g_b_g_b2"]
    checks = {"roundtrip": all(r[5] <= 1e-6 for r in rows)}
    if rho:
        checks["linear_window"] = all(0.1 <= r[4] <= 10 for r in rows)
    return Outcome(cols, rows, summary=_model_summary(model), checks=checks)


def holder_pairs(model: Model, cfg: ExperimentConfig, points, threads: int = 1):
    """``(j, base distance, leaf distance)`` for dyadic unstable pairs of central leaves."""
    j_range = range(cfg.holder_j[0], cfg.holder_j[1] + 1)

    def one(b):
        W = central_leaf(b, model.setup, cfg.depth, cfg.grid.central_n_m)
        out = []
        for (_, b2, d), j in zip(dyadic_unstable_pairs(model.base, [b], j_range), j_range):
            W2 = central_leaf(b2, model.setup, cfg.depth, cfg.grid.central_n_m)
            out.append((j, d, float(np.max(np.abs(W.displacement() - W2.displacement())))))
        return out

    return [r for rows in _pmap(one, points, threads) for r in rows]


def run_holder_fit(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    model = build_model(cfg)
    pts = base_points(model, cfg.n_points, cfg.seed)
    triples = holder_pairs(model, cfg, pts, threads)
    rows = [[k // (cfg.holder_j[1] - cfg.holder_j[0] + 1), j, d, v] for k, (j, d, v) in enumerate(triples)]
    fit = fit_power_law([t[1] for t in triples], [t[2] for t in triples], min_pairs=min(30, len(triples)))
    alpha = alpha_theoretical(model.base.constants)
    summary = {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared,
               "alpha_theoretical": alpha, **_model_summary(model)}
    return Outcome(["point", "j", "base_distance", "leaf_distance"], rows, summary=summary,
                   checks={"finite_slope": bool(np.isfinite(fit.slope))})


def run_atypical(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    s = cfg.symbolic
    t = count_atypical(s.w, s.kappa, s.N)
    row = [s.w, s.kappa, s.N, t.atypical_count, t.total, t.nu]
    return Outcome(["w", "kappa", "N", "atypical_count", "total", "nu"], [row],
                   checks={"total_is_2N": t.total == 2 ** s.N})


def run_nu_curve(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    s = cfg.symbolic
    curve = nu_estimate(s.w, s.kappa, range(s.N_min, s.N_max + 1))
    rows = [[N, c, nu] for N, c, nu in zip(curve.Ns, curve.counts, curve.nus)]
    return Outcome(["N", "atypical_count", "nu"], rows, summary={"nu_min": curve.nu_min},
                   checks={"bound": curve.bound_holds(), "nu_positive": curve.nu_min > 0})


def _counts(s, N_hi):
    return {N: count_atypical(s.w, s.kappa, N).atypical_count for N in range(1, N_hi + 1)}


def run_cover_volume(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    s = cfg.symbolic
    counts = _counts(s, s.N_max)
    nu = nu_estimate(s.w, s.kappa, range(s.N_min, s.N_max + 1)).nu_min
    rows = []
    for N0 in sorted(s.N0):
        v = cover_volume(counts, s.cover_epsilon, N0, nu=nu)
        rows.append([N0, v.partial, v.tail, v.total])
    totals = [r[3] for r in rows]
    return Outcome(["N0", "partial", "tail", "total"], rows, summary={"nu_min": nu, "epsilon": s.cover_epsilon},
                   checks={"decreasing": all(b < a for a, b in zip(totals, totals[1:]))})


def _box_set(s):
    if s.box_set == "atypical":
        return AtypicalCover(s.w, s.kappa)
    if s.box_set == "avoid":
        return PatternAvoidingSet(s.avoid_pattern)
    return FullCircle()


def run_box_dim(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    s = cfg.symbolic
    est = box_dimension(_box_set(s), range(s.box_depths[0], s.box_depths[1] + 1))
    rows = [[N, c] for N, c in zip(est.depths, est.counts)]
    return Outcome(["N", "count"], rows, summary={"slope": est.slope, "fit_rms": est.confidence,
                                                   "monotone": est.monotone, "note": DIMENSION_NOTE},
                   checks={"counts_bounded": all(c <= 2 ** N for N, c in rows)})


def solenoid_phi(model: Model, w: complex = 0.3 + 0.2j, m: float = 0.25, nodes: int = 4096):
    """Lift of ``z -> beta^s_z(x)`` for ``x = (w, m)``, tabulated on ``nodes`` points."""
    z = np.arange(nodes) / nodes
    vals = stable_leaf_point(model.G, z, w, m)
    return tabulated_lift(z + ((vals - z + 0.5) % 1.0 - 0.5), z), z, vals


def solenoid_phi_alpha(z, vals) -> float:
    """Hölder exponent of the tabulated ``z -> beta^s_z(x)`` from dyadic node spacings."""
    n = len(z)
    dz, dv = [], []
    for j in range(0, int(np.log2(n)) - 1):
        step = 2 ** j
        d = np.abs((np.roll(vals, -step) - vals + 0.5) % 1.0 - 0.5)
        dz.append(step / n)
        dv.append(float(d.max()))
    return fit_power_law(dz, dv, min_pairs=len(dz), min_decades=1.0).slope


def run_falconer(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    s = cfg.symbolic
    A = _box_set(s)
    depths = range(s.box_depths[0], s.box_depths[1] + 1)
    if cfg.falconer_map == "solenoid":
        model = build_model(cfg)
        phi, z, vals = solenoid_phi(model, nodes=cfg.falconer_nodes)
        alpha = cfg.falconer_alpha or min(1.0, solenoid_phi_alpha(z, vals))
    else:
        alpha = cfg.falconer_alpha or 0.8
        phi = weierstrass_lift(alpha)
    v = falconer_check(A, phi, alpha, depths, refine=1 / alpha, max_source_depth=s.box_depths[1])
    report = {"dim_A": v.dim_A, "dim_image": v.dim_image, "alpha": v.alpha, "bound": v.bound,
              "passed": v.passed, "measure_zero": v.measure_zero, "note": DIMENSION_NOTE,
              "counts_A": v.estimate_A.counts, "counts_image": v.estimate_image.counts}
    return Outcome(report=report, checks={"falconer": v.passed})


def run_weak_ergodic(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.weak_ergodic_n
    def phi(t):
        return np.cos(2 * np.pi * t)
    bits = rng.integers(0, 2, (cfg.weak_ergodic_samples, n + 60))
    prof = weak_ergodic_profile(phi, bits, n, cfg.weak_ergodic_delta)
    fixed = weak_ergodic_profile(phi, 0.0, n, 0.5)
    finals = prof.averages[:, -1]
    y0 = doubling_orbit(bits, 1)[:, 0]
    rows = [[i, float(y0[i]), float(finals[i]), bool(abs(finals[i] - prof.integral) > prof.delta)]
            for i in range(len(finals))]
    frac = float(np.mean(np.abs(finals - prof.integral) <= prof.delta))
    summary = {"integral": prof.integral, "fraction_within": frac, "fixed_point_flagged": bool(fixed.flags.all())}
    return Outcome(["sample", "y", "average", "flagged"], rows, summary=summary,
                   checks={"fixed_point_flagged": bool(fixed.flags.all()), "typical_fraction": frac >= 0.95})


def run_fubini_demo(cfg: ExperimentConfig, threads: int = 1) -> Outcome:
    """Counts, then dimension bound, then Falconer image, then the measure-zero verdict."""
    s = cfg.symbolic
    curve = nu_estimate(s.w, s.kappa, range(s.N_min, s.N_max + 1))
    nu = curve.nu_min
    depths = range(s.box_depths[0], s.box_depths[1] + 1)
    A = AtypicalCover(s.w, s.kappa)
    est = box_dimension(A, depths)
    eps = min(s.cover_epsilon, nu / 2)
    counts = _counts(s, s.N_max)
    volumes = [cover_volume(counts, eps, N0, nu=nu).total for N0 in sorted(s.N0)]
    model = build_model(cfg)
    phi, z, vals = solenoid_phi(model, nodes=cfg.falconer_nodes)
    alpha = cfg.falconer_alpha or min(1.0, solenoid_phi_alpha(z, vals))
    v = falconer_check(A, phi, alpha, depths, refine=1 / alpha, max_source_depth=s.box_depths[1])
    report = {
        "nu_min": nu, "count_bound_holds": curve.bound_holds(), "dim_A": est.slope, "dim_bound": 1 - nu + 0.03,
        "cover_epsilon": eps, "cover_volumes": volumes, "alpha": alpha, "dim_image": v.dim_image,
        "falconer_bound": v.bound, "measure_zero": v.measure_zero, "note": DIMENSION_NOTE, **_model_summary(model),
    }
    checks = {"count_bound": curve.bound_holds(), "dim_A_below_bound": est.slope <= 1 - nu + 0.03,
              "volumes_decreasing": all(b < a for a, b in zip(volumes, volumes[1:])), "falconer": v.passed,
              "measure_zero": v.measure_zero}
    return Outcome(report=report, checks=checks)


PIPELINES = {
    "solve-leaf": run_solve_leaf,
    "contraction": run_contraction,
    "central": run_central,
    "conjugate": run_conjugate,
    "holder-fit": run_holder_fit,
    "atypical": run_atypical,
    "nu-curve": run_nu_curve,
    "cover-volume": run_cover_volume,
    "box-dim": run_box_dim,
    "falconer": run_falconer,
    "weak-ergodic": run_weak_ergodic,
    "fubini-demo": run_fubini_demo,
}
