//! Independent oracles for checking the `eigenbound` library.
//!
//! Nothing here calls the closed-form jet code of the library: derivatives are
//! Richardson-extrapolated central differences of `A(w)` and `B(w)`, the metric
//! density comes from the Wronskian minors, and curvature from `log e^{2θ}`.

use eigenbound::curve::{self, ChartId, CurveAtlas, CurveChart};
use eigenbound::matspace::{hm_inner, HermitianPoint};
use eigenbound::quad::QuadratureGrid;
use eigenbound::{CMat, CVec, C64};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const FD_STEP: f64 = 2e-3;

pub fn ip(a: &CMat, b: &CMat) -> f64 {
    hm_inner(a, b).unwrap()
}

pub fn norm(a: &CMat) -> f64 {
    ip(a, a).sqrt()
}

pub fn identity(order: usize) -> CMat {
    CMat::identity(order, order)
}

pub fn center(order: usize) -> CMat {
    identity(order) * C64::new(1.0 / order as f64, 0.0)
}

/// `z(w)` and `z'(w)` by Horner on the raw coefficients.
pub fn z_and_dz(chart: &CurveChart, w: C64) -> (CVec, CVec) {
    let n = chart.order();
    let mut z = CVec::zeros(n);
    let mut dz = CVec::zeros(n);
    for (i, p) in chart.components().iter().enumerate() {
        let mut v = C64::new(0.0, 0.0);
        let mut dv = C64::new(0.0, 0.0);
        for &c in p.coeffs().iter().rev() {
            dv = dv * w + v;
            v = v * w + c;
        }
        z[i] = v;
        dz[i] = dv;
    }
    (z, dz)
}

pub fn outer(z: &CVec) -> CMat {
    let n = z.len();
    CMat::from_fn(n, n, |i, j| z[i].conj() * z[j]) / C64::new(z.norm_squared(), 0.0)
}

/// `e^{2θ} = 4 Σ_{i<j} |z_i z_j' − z_j z_i'|² / |z|⁴`.
pub fn wronskian_conf(chart: &CurveChart, w: C64) -> f64 {
    let (z, dz) = z_and_dz(chart, w);
    let mut s = 0.0;
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            s += (z[i] * dz[j] - z[j] * dz[i]).norm_sqr();
        }
    }
    4.0 * s / z.norm_squared().powi(2)
}

/// `(∂ₓF, ∂_yF)` by Richardson-extrapolated central differences.
pub fn grad_fd<F: Fn(C64) -> CMat>(f: &F, w: C64, h: f64) -> (CMat, CMat) {
    let central = |dir: C64, h: f64| (f(w + dir * h) - f(w - dir * h)) / C64::new(2.0 * h, 0.0);
    let rich = |dir: C64| (central(dir, h / 2.0) * C64::new(4.0, 0.0) - central(dir, h)) / C64::new(3.0, 0.0);
    (rich(C64::new(1.0, 0.0)), rich(C64::new(0.0, 1.0)))
}

/// `∂ₓₓF + ∂_yyF` by a Richardson-extrapolated five-point stencil.
pub fn laplacian_fd<F: Fn(C64) -> CMat>(f: &F, w: C64, h: f64) -> CMat {
    let stencil = |h: f64| {
        let c = f(w) * C64::new(4.0, 0.0);
        (f(w + h) + f(w - h) + f(w + C64::new(0.0, h)) + f(w - C64::new(0.0, h)) - c) / C64::new(h * h, 0.0)
    };
    (stencil(h / 2.0) * C64::new(4.0, 0.0) - stencil(h)) / C64::new(3.0, 0.0)
}

fn laplacian_scalar<F: Fn(C64) -> f64>(f: &F, w: C64, h: f64) -> f64 {
    let stencil =
        |h: f64| (f(w + h) + f(w - h) + f(w + C64::new(0.0, h)) + f(w - C64::new(0.0, h)) - 4.0 * f(w)) / (h * h);
    (4.0 * stencil(h / 2.0) - stencil(h)) / 3.0
}

/// Gauss curvature `−Δ₀ log e^{2θ} / (2 e^{2θ})` of the induced metric. The
/// harmonic terms `2m log|w − w₀|` of the branch points in the chart are
/// subtracted before differencing; they do not change the Laplacian.
pub fn curvature_fd(atlas: &CurveAtlas, chart_id: ChartId, w: C64) -> f64 {
    let chart = atlas.chart(chart_id);
    let branches: Vec<(C64, f64)> = atlas
        .branch_points()
        .iter()
        .filter(|bp| bp.chart == chart_id)
        .map(|bp| (bp.location, bp.order as f64))
        .collect();
    let smooth = |x: C64| {
        let singular: f64 = branches.iter().map(|&(w0, m)| 2.0 * m * (x - w0).norm().ln()).sum();
        wronskian_conf(chart, x).ln() - singular
    };
    let lap = laplacian_scalar(&smooth, w, FD_STEP);
    -lap / (2.0 * wronskian_conf(chart, w))
}

/// `B` from `2L/|L|` with `L = ∂w̄∂w A = Δ₀A / 4`, by finite differences.
pub fn gauss_fd(chart: &CurveChart, w: C64, h: f64) -> CMat {
    let a = |x: C64| {
        let (z, _) = z_and_dz(chart, x);
        outer(&z)
    };
    let l = laplacian_fd(&a, w, h) * C64::new(0.25, 0.0);
    let n = norm(&l);
    l * C64::new(2.0 / n, 0.0)
}

/// Uniform sphere points, as chart coordinates, at chordal distance at least
/// `clearance` from every branch point of the atlas.
pub fn sample_points(atlas: &CurveAtlas, count: usize, seed: u64, clearance: f64) -> Vec<(ChartId, C64)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(0.1..=1.0).contains(&r) {
            continue;
        }
        let x = [v[0] / r, v[1] / r, v[2] / r];
        let near_branch = atlas.branch_points().iter().any(|bp| {
            let y = CurveAtlas::sphere_point(bp.chart, bp.location);
            ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt() < clearance
        });
        if !near_branch {
            out.push(CurveAtlas::locate_sphere_point(x));
        }
    }
    out
}

/// `Φ_a(P)` computed from scratch: projected `A` and tangent line by hand,
/// Wronskian density, plain sequential summation.
pub fn independent_phi(atlas: &CurveAtlas, p: &HermitianPoint, a: f64, grid: &QuadratureGrid) -> CMat {
    let order = atlas.order();
    let pm = p.matrix();
    let mut acc = CMat::zeros(order, order);
    let mut mass = 0.0;
    for node in grid.nodes() {
        let chart = atlas.chart(node.chart);
        let (z, dz) = z_and_dz(chart, node.w);
        let zp = pm.transpose() * z;
        let dzp = pm.transpose() * dz;
        let q = &dzp - &zp * (zp.dotc(&dzp) / zp.norm_squared());
        let ap = outer(&zp);
        let bp = outer(&q) - &ap;
        let m = node.weight * wronskian_conf(chart, node.w);
        acc += (ap + bp * C64::new(a, 0.0)) * C64::new(m, 0.0);
        mass += m;
    }
    acc / C64::new(mass, 0.0)
}

/// The library's `A`, `B` at a point, for comparisons.
pub fn library_ab(chart: &CurveChart, w: C64) -> (CMat, CMat) {
    let a = curve::eval_point(chart, w).unwrap().into_matrix();
    let b = curve::eval_gauss(chart, w).unwrap();
    (a, b)
}
