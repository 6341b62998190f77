//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::f64::consts::PI;
use std::time::Instant;

use eigenbound::balance::{self, MeasureSpec};
use eigenbound::bounds;
use eigenbound::curve::{self, builtin, CurveAtlas};
use eigenbound::matspace::{hull_classify, HullClassification, DEFAULT_RANK_TOL};
use eigenbound::quad::{self, QuadratureGrid};
use eigenbound::spectral;
use eigenbound::C64;
use eigenbound_verify::*;

const IDENTITY_TOL: f64 = 1e-7;
const IDENTITY_SECONDS: f64 = 5.0;
const INTEGRAL_TOL: f64 = 1e-5;
const INTEGRAL_SECONDS: f64 = 10.0;
const ENERGY_TOL: f64 = 1e-6;
const RADIUS_TOL: f64 = 1e-8;
const BALANCE_TOL: f64 = 1e-8;
const BALANCE_SECONDS: f64 = 60.0;
const GENUS3_TOL: f64 = 1e-9;
const ASYMPTOTIC_A_TOL: f64 = 1e-12;
const ASYMPTOTIC_VALUE_TOL: f64 = 1e-12;
const TABLE_SECONDS: f64 = 30.0;
const SPHERE_TOL: f64 = 0.005;
const TORUS_TOL: f64 = 0.01;
const FEM_MARGIN: f64 = 0.02;
const RAYLEIGH_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    println!(
        "{} [{id}] {name}: {} ({:.2} s)",
        if out.pass { "PASS" } else { "FAIL" },
        out.detail,
        start.elapsed().as_secs_f64()
    );
    out.pass
}

fn rel(x: f64, expected: f64, scale: f64) -> f64 {
    (x - expected).abs() / expected.abs().max(scale)
}

fn identity_suite() -> Outcome {
    let start = Instant::now();
    let curves = [
        CurveAtlas::rational_normal_curve(1).unwrap(),
        CurveAtlas::rational_normal_curve(2).unwrap(),
        CurveAtlas::rational_normal_curve(3).unwrap(),
        builtin::branched_cubic(),
    ];
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for atlas in &curves {
        let order = atlas.order();
        let id = identity(order);
        for (k, (chart_id, w)) in sample_points(atlas, 200, 11 + order as u64, 0.05)
            .into_iter()
            .enumerate()
        {
            let chart = atlas.chart(chart_id);
            let jet = curve::jet(chart, w).unwrap();
            let (a, b) = (&jet.a, &jet.b);
            let grad_bb = jet.grad_sq(&jet.db);
            let k_fd = curvature_fd(atlas, chart_id, w);
            let conf = wronskian_conf(chart, w);
            let lap_b = laplacian_fd(&|x| curve::eval_gauss(chart, x).unwrap(), w, FD_STEP) / C64::new(conf, 0.0);
            let checks = [
                ("|I|^2", ip(&id, &id) - 2.0 * order as f64),
                ("<A,I>", ip(a, &id) - 2.0),
                ("|A|^2", ip(a, a) - 2.0),
                ("<B,I>", ip(b, &id)),
                ("<B,A>", ip(b, a) + 2.0),
                ("|B|^2", ip(b, b) - 4.0),
                ("<dB,I>", ip(&lap_b, &id)),
                ("<dB,A>", ip(&lap_b, a) - 4.0),
                ("<dB,B>", ip(&lap_b, b) + grad_bb),
                ("|gA|^2", jet.grad_sq(&jet.da) - 2.0),
                ("<gA,gB>", jet.grad_inner(&jet.da, &jet.db) + 4.0),
                ("|gB|^2", grad_bb - (8.0 + 4.0 * (1.0 - k_fd))),
            ];
            for (label, err) in checks {
                if err.abs() > worst {
                    worst = err.abs();
                    worst_at = format!("{label} on {} sample {k}", atlas.name);
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst < IDENTITY_TOL && secs < IDENTITY_SECONDS,
        detail: format!("max error {worst:.2e} at {worst_at} (tol {IDENTITY_TOL:e}), runtime {secs:.2} s (limit {IDENTITY_SECONDS} s)"),
    }
}

/// Built-in curves with independently known degree and total branching.
fn test_curves() -> Vec<(CurveAtlas, usize, usize)> {
    vec![
        (builtin::by_name("line").unwrap(), 1, 0),
        (builtin::by_name("conic").unwrap(), 2, 0),
        (builtin::by_name("cubic").unwrap(), 3, 0),
        (builtin::branched_cubic(), 3, 1),
        (builtin::double_line(), 2, 2),
        (builtin::asym_conic(), 2, 0),
        (builtin::twisted_cubic(), 3, 0),
    ]
}

fn integral_suite() -> Outcome {
    let start = Instant::now();
    let grid = QuadratureGrid::default();
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for (atlas, d, b) in test_curves() {
        let (d, b) = (d as f64, b as f64);
        let scale = 4.0 * PI;
        let checks = [
            ("area", rel(quad::area(&atlas, &grid).unwrap(), 4.0 * PI * d, scale)),
            (
                "int K",
                rel(
                    quad::total_curvature(&atlas, &grid).unwrap(),
                    2.0 * PI * (2.0 + b),
                    scale,
                ),
            ),
            (
                "int sigma^2",
                rel(
                    quad::total_sigma_sq(&atlas, &grid).unwrap(),
                    8.0 * PI * (d - 1.0 - b / 2.0),
                    scale,
                ),
            ),
        ];
        for (label, err) in checks {
            if err > worst {
                worst = err;
                worst_at = format!("{label} on {}", atlas.name);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst < INTEGRAL_TOL && secs < INTEGRAL_SECONDS,
        detail: format!("max relative error {worst:.2e} at {worst_at} (tol {INTEGRAL_TOL:e}), runtime {secs:.2} s (limit {INTEGRAL_SECONDS} s)"),
    }
}

fn energy_lemma() -> Outcome {
    let grid = QuadratureGrid::default();
    let mut worst_energy = 0.0f64;
    let mut worst_radius = 0.0f64;
    let mut at = String::new();
    for (atlas, d, b) in test_curves() {
        let delta = 1.0 + (-1.0 - b as f64 / 2.0) / d as f64;
        for a in [0.0f64, 0.1, 0.25, 0.49, 0.5] {
            let closed = 8.0 * PI * d as f64 * ((2.0 * a - 1.0).powi(2) + 2.0 * a * a * delta);
            let report = quad::energy(&atlas, &grid, a).unwrap();
            let flat = quad::dirichlet_energy(&atlas, &grid, a).unwrap();
            let e = rel(report.numeric_energy, closed, 4.0 * PI).max(rel(flat, closed, 4.0 * PI));
            if e > worst_energy {
                worst_energy = e;
                at = format!("{} a = {a}", atlas.name);
            }
            worst_radius = worst_radius.max(quad::sphere_radius_check(&atlas, a, 200).unwrap());
        }
    }
    Outcome {
        pass: worst_energy < ENERGY_TOL && worst_radius < RADIUS_TOL,
        detail: format!(
            "energy max relative error {worst_energy:.2e} at {at} (tol {ENERGY_TOL:e}); sphere radius max deviation {worst_radius:.2e} (tol {RADIUS_TOL:e})"
        ),
    }
}

fn balancing() -> Outcome {
    let start = Instant::now();
    let check_grid = QuadratureGrid::new(48, 96).unwrap();
    let mut pass = true;
    let mut worst_residual = 0.0f64;
    let mut worst_recheck = 0.0f64;
    let mut notes = Vec::new();
    for atlas in [builtin::asym_conic(), builtin::twisted_cubic()] {
        let order = atlas.order();
        for a in [0.0, 0.1, 0.3, 0.49] {
            match balance::balance(&atlas, &MeasureSpec::induced(), a, BALANCE_TOL) {
                Ok(r) => {
                    let interior = hull_classify(&r.p, DEFAULT_RANK_TOL) == HullClassification::Interior;
                    let recheck = norm(&(independent_phi(&atlas, &r.p, a, &check_grid) - center(order)));
                    worst_residual = worst_residual.max(r.residual);
                    worst_recheck = worst_recheck.max(recheck);
                    if !(r.converged && r.residual < BALANCE_TOL && interior && recheck < BALANCE_TOL) {
                        pass = false;
                        notes.push(format!(
                            "{} a = {a}: residual {:.2e}, recheck {recheck:.2e}, interior {interior}",
                            atlas.name, r.residual
                        ));
                    }
                }
                Err(e) => {
                    pass = false;
                    notes.push(format!("{} a = {a}: {e}", atlas.name));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < BALANCE_SECONDS;
    Outcome {
        pass,
        detail: format!(
            "max residual {worst_residual:.2e}, independent recheck {worst_recheck:.2e} (tol {BALANCE_TOL:e}), runtime {secs:.1} s (limit {BALANCE_SECONDS} s){}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    }
}

fn genus_three() -> Outcome {
    let m = bounds::minimize_bound(2, 4, 1.5).unwrap();
    let expected = 16.0 * (4.0 - 7f64.sqrt()) * PI;
    let err = (m.value - expected).abs() / expected;
    let tag = bounds::forced_bound(3, 2, 4, 0).unwrap().symbolic.unwrap_or_default();
    Outcome {
        pass: err < GENUS3_TOL,
        detail: format!(
            "F_min = {:.5}π [{tag}], expected 16(4-√7)π = {:.5}π, relative error {err:.2e} (tol {GENUS3_TOL:e})",
            m.value / PI,
            expected / PI
        ),
    }
}

fn asymptotic_value() -> Outcome {
    let m = bounds::minimize_asymptotic_g();
    let a_exp = (3.0 - 5f64.sqrt()) / 4.0;
    let v_exp = 4.0 * (3.0 - 5f64.sqrt()) * PI;
    let a_err = (m.a_min - a_exp).abs();
    let v_err = (m.value - v_exp).abs() / v_exp;
    let numeric = (m.a_numeric - a_exp).abs();
    let g0 = bounds::asymptotic_g(0.0);
    Outcome {
        pass: a_err < ASYMPTOTIC_A_TOL && v_err < ASYMPTOTIC_VALUE_TOL && g0 == 4.0 * PI && numeric < 1e-10,
        detail: format!(
            "a_min error {a_err:.1e} (tol {ASYMPTOTIC_A_TOL:e}), value {:.5}π relative error {v_err:.1e} (tol {ASYMPTOTIC_VALUE_TOL:e}), numeric minimizer off by {numeric:.1e}, G(0) = {}π",
            m.value / PI,
            g0 / PI
        ),
    }
}

fn table_dominance() -> Outcome {
    let start = Instant::now();
    let mut above = Vec::new();
    for g in 3..=100 {
        let r = bounds::lambda1_bound(g, bounds::default_n_max(g), bounds::DEFAULT_D_SPAN).unwrap();
        if r.value > r.baseline_yy {
            above.push(format!(
                "g={g} ({:.3}π > {:.0}π, n={}, d={})",
                r.value / PI,
                r.baseline_yy / PI,
                r.n_star,
                r.d_star
            ));
        }
    }
    let mut schedule: Vec<usize> = (200..=5000).collect();
    schedule.extend([10_000, 100_000, 1_000_000]);
    let rows = bounds::asymptotic_convergence_table(&schedule).unwrap();
    let worst_ratio = rows.iter().map(|r| r.ratio / PI).fold(0.0, f64::max);
    let limit = bounds::minimize_asymptotic_g().value / PI;
    let tail = bounds::asymptotic_convergence_table(&[1_000, 10_000, 100_000]).unwrap();
    let tail_ratios: Vec<f64> = tail.iter().map(|r| r.ratio / PI).collect();
    let monotone = tail_ratios.windows(2).all(|w| w[1] < w[0]) && tail_ratios.iter().all(|&r| r > limit);
    let secs = start.elapsed().as_secs_f64();
    let dominance = above.is_empty();
    Outcome {
        pass: dominance && worst_ratio < 3.5 && monotone && secs < TABLE_SECONDS,
        detail: format!(
            "bound <= Yang-Yau on g in [3, 100]: {}; schedule ratio max {worst_ratio:.4}π for g >= 200 (limit 3.5π); ratios at 1e3, 1e4, 1e5 = {:.4}π, {:.4}π, {:.4}π decreasing to {limit:.5}π: {monotone}; runtime {secs:.2} s",
            if dominance { "yes".to_string() } else { format!("no, exceeded at {}", above.join(", ")) },
            tail_ratios[0],
            tail_ratios[1],
            tail_ratios[2],
        ),
    }
}

fn spectral_references() -> Outcome {
    let sphere = spectral::lambda1_area(&spectral::build_icosphere(5).unwrap()).unwrap();
    let s_err = rel(sphere.product, 8.0 * PI, 0.0);
    let eq_basis = ([1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]);
    let eq = spectral::lambda1_area(&spectral::build_flat_torus(eq_basis.0, eq_basis.1, 64).unwrap()).unwrap();
    let eq_target = 8.0 * PI * PI / 3f64.sqrt();
    let e_err = rel(eq.product, eq_target, 0.0);
    let rect = spectral::lambda1_area(&spectral::build_flat_torus([1.0, 0.0], [0.0, 2.0], 64).unwrap()).unwrap();
    let r_err = rel(rect.product, 2.0 * PI * PI, 0.0);
    let multiplicity =
        sphere.leading[2] / sphere.leading[0] - 1.0 < 0.01 && sphere.leading[3] / sphere.leading[0] > 1.5;
    Outcome {
        pass: s_err < SPHERE_TOL && e_err < TORUS_TOL && r_err < TORUS_TOL && multiplicity,
        detail: format!(
            "sphere level 5 {:.4} vs 8π ({s_err:.2e}, tol {SPHERE_TOL}), multiplicity 3: {multiplicity}; equilateral torus {:.4} vs {eq_target:.4} ({e_err:.2e}, tol {TORUS_TOL}); 1x2 torus {:.4} vs 2π² ({r_err:.2e}, tol {TORUS_TOL})",
            sphere.product, eq.product, rect.product
        ),
    }
}

fn bound_end_to_end() -> Outcome {
    let grid = QuadratureGrid::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (atlas, weights) in [
        (builtin::by_name("line").unwrap(), vec![0.0, 0.1, 0.25, 0.4]),
        (builtin::by_name("conic").unwrap(), vec![0.0, 0.1, 0.25, 0.4, 0.49]),
    ] {
        let report = spectral::verify_bound_on_curve(&atlas, 0.25, 5).unwrap();
        let fem_ok = report.spectrum.product <= report.best_bound * (1.0 + FEM_MARGIN);
        let mut worst = 0.0f64;
        for &a in &weights {
            let a_bal = if atlas.n() == 1 { 0.0 } else { a };
            let bal = balance::balance(&atlas, &MeasureSpec::induced(), a_bal, BALANCE_TOL).unwrap();
            let projected = balance::project_curve(&atlas, &bal.p).unwrap();
            let r = spectral::balanced_rayleigh(&atlas, &projected, a, &grid).unwrap();
            let expected = bounds::rayleigh_rhs(atlas.n(), atlas.degree(), atlas.delta(), a).unwrap();
            worst = worst.max(rel(r, expected, 0.0));
        }
        pass &= fem_ok && worst < RAYLEIGH_TOL;
        parts.push(format!(
            "{}: FEM {:.4} <= {:.4}·(1+{FEM_MARGIN}): {fem_ok}, Rayleigh max relative error {worst:.2e} (tol {RAYLEIGH_TOL:e})",
            atlas.name, report.spectrum.product, report.best_bound
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn main() {
    let results = [
        run(1, "pointwise identity suite", identity_suite),
        run(2, "integral suite", integral_suite),
        run(3, "energy lemma and sphere radius", energy_lemma),
        run(4, "balancing", balancing),
        run(5, "genus-3 value", genus_three),
        run(6, "asymptotic value", asymptotic_value),
        run(7, "bound table dominance", table_dominance),
        run(8, "spectral references", spectral_references),
        run(9, "bound inequality end-to-end", bound_end_to_end),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
