//! Quadrature over a two-chart atlas.
//!
//! The sphere is tiled by the unit disks `|w| ≤ 1` and `|u| ≤ 1` (`u = 1/w`),
//! which meet only along the unit circle. Each disk carries a tensor rule:
//! Gauss–Legendre in the radius and the periodic trapezoid rule in the angle,
//! the angular nodes shifted by an irrational fraction of a step so that no
//! node lands on an algebraic branch location.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curve::{self, ChartId, CurveAtlas, CurveError, CurveJet};
use crate::matspace::hm_norm_sq;
use crate::{CMat, C64};

pub const DEFAULT_RADIAL_ORDER: usize = 64;
pub const DEFAULT_ANGULAR_ORDER: usize = 128;

/// Angular offsets (fractions of one step) for the two disks.
const ANGLE_OFFSETS: [f64; 2] = [0.618_033_988_749_894_9, 0.414_213_562_373_095_1];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature orders must be positive (radial {0}, angular {1})")]
    BadOrder(usize, usize),
    #[error("node {w} of chart {chart:?} falls on a branch point")]
    NodeOnBranch { chart: ChartId, w: C64 },
    #[error("sample count must be positive")]
    NoSamples,
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadNode {
    pub chart: ChartId,
    pub w: C64,
    /// Flat area weight `r · w_r · Δθ`.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<QuadNode>,
    radial_order: usize,
    angular_order: usize,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self::new(DEFAULT_RADIAL_ORDER, DEFAULT_ANGULAR_ORDER).expect("default orders are positive")
    }
}

impl QuadratureGrid {
    pub fn new(radial_order: usize, angular_order: usize) -> Result<Self, QuadError> {
        let (Some(nr), true) = (NonZeroUsize::new(radial_order), angular_order > 0) else {
            return Err(QuadError::BadOrder(radial_order, angular_order));
        };
        let rule = GaussLegendre::new(nr);
        let dtheta = 2.0 * PI / angular_order as f64;
        let mut nodes = Vec::with_capacity(2 * radial_order * angular_order);
        for (chart, offset) in [(ChartId::Zero, ANGLE_OFFSETS[0]), (ChartId::Infinity, ANGLE_OFFSETS[1])] {
            for &(x, wx) in rule.as_node_weight_pairs() {
                let r = 0.5 * (x + 1.0);
                let wr = 0.5 * wx;
                for j in 0..angular_order {
                    let theta = dtheta * (j as f64 + offset);
                    nodes.push(QuadNode {
                        chart,
                        w: C64::from_polar(r, theta),
                        weight: r * wr * dtheta,
                    });
                }
            }
        }
        Ok(Self {
            nodes,
            radial_order,
            angular_order,
        })
    }

    pub fn nodes(&self) -> &[QuadNode] {
        &self.nodes
    }

    pub fn radial_order(&self) -> usize {
        self.radial_order
    }

    pub fn angular_order(&self) -> usize {
        self.angular_order
    }
}

/// Everything a field may need at one node.
pub struct NodeSample<'a> {
    pub node: &'a QuadNode,
    pub jet: CurveJet,
}

/// Evaluates `f` at every node, in node order (parallel over nodes).
pub fn node_map<T, F>(atlas: &CurveAtlas, grid: &QuadratureGrid, f: F) -> Result<Vec<T>, QuadError>
where
    T: Send,
    F: Fn(&NodeSample) -> Result<T, QuadError> + Sync,
{
    grid.nodes
        .par_iter()
        .map(|node| {
            let jet = curve::jet(atlas.chart(node.chart), node.w).map_err(|e| match e {
                CurveError::BranchPoint(w) => QuadError::NodeOnBranch { chart: node.chart, w },
                other => QuadError::Curve(other),
            })?;
            f(&NodeSample { node, jet })
        })
        .collect()
}

/// Sum with pairwise splitting; the result does not depend on thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_matrix(values: &[CMat]) -> CMat {
    match values.len() {
        0 => CMat::zeros(0, 0),
        1 => values[0].clone(),
        len if len <= 16 => values[1..].iter().fold(values[0].clone(), |acc, m| acc + m),
        len => {
            let mid = len / 2;
            pairwise_sum_matrix(&values[..mid]) + pairwise_sum_matrix(&values[mid..])
        }
    }
}

/// `∫ f dΣ` against the induced measure.
pub fn integrate<F>(atlas: &CurveAtlas, grid: &QuadratureGrid, field: F) -> Result<f64, QuadError>
where
    F: Fn(&NodeSample) -> f64 + Sync,
{
    let vals = node_map(atlas, grid, |s| Ok(s.node.weight * s.jet.conf * field(s)))?;
    Ok(pairwise_sum(&vals))
}

/// Matrix-valued `∫ F dΣ`.
pub fn integrate_matrix<F>(atlas: &CurveAtlas, grid: &QuadratureGrid, field: F) -> Result<CMat, QuadError>
where
    F: Fn(&NodeSample) -> CMat + Sync,
{
    let vals = node_map(
        atlas,
        grid,
        |s| Ok(field(s) * C64::new(s.node.weight * s.jet.conf, 0.0)),
    )?;
    Ok(pairwise_sum_matrix(&vals))
}

/// `∫ f dx dy` in chart coordinates (for conformally invariant integrands).
pub fn integrate_flat<F>(atlas: &CurveAtlas, grid: &QuadratureGrid, field: F) -> Result<f64, QuadError>
where
    F: Fn(&NodeSample) -> f64 + Sync,
{
    let vals = node_map(atlas, grid, |s| Ok(s.node.weight * field(s)))?;
    Ok(pairwise_sum(&vals))
}

pub fn area(atlas: &CurveAtlas, grid: &QuadratureGrid) -> Result<f64, QuadError> {
    integrate(atlas, grid, |_| 1.0)
}

fn sigma_sq(jet: &CurveJet) -> f64 {
    curve::CurvePointData::from_jet(jet).sigma_sq
}

/// `∫ K dΣ`.
pub fn total_curvature(atlas: &CurveAtlas, grid: &QuadratureGrid) -> Result<f64, QuadError> {
    integrate(atlas, grid, |s| 1.0 - sigma_sq(&s.jet) / 2.0)
}

/// `∫ |σ|² dΣ`.
pub fn total_sigma_sq(atlas: &CurveAtlas, grid: &QuadratureGrid) -> Result<f64, QuadError> {
    integrate(atlas, grid, |s| sigma_sq(&s.jet))
}

/// Dirichlet energy of `φ_a = A + aB` against its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub a: f64,
    pub numeric_energy: f64,
    pub closed_form: f64,
    pub delta: f64,
    pub rel_err: f64,
}

/// `8πd{(2a − 1)² + 2a²δ}`.
pub fn energy_closed_form(degree: usize, delta: f64, a: f64) -> f64 {
    8.0 * PI * degree as f64 * ((2.0 * a - 1.0).powi(2) + 2.0 * a * a * delta)
}

/// Integrates `|∇φ_a|² = (8 + 2|σ|²)a² − 8a + 2` over the curve.
pub fn energy(atlas: &CurveAtlas, grid: &QuadratureGrid, a: f64) -> Result<EnergyReport, QuadError> {
    let numeric = integrate(atlas, grid, |s| (8.0 + 2.0 * sigma_sq(&s.jet)) * a * a - 8.0 * a + 2.0)?;
    let delta = atlas.delta();
    let closed = energy_closed_form(atlas.degree(), delta, a);
    let err = (numeric - closed).abs();
    Ok(EnergyReport {
        a,
        numeric_energy: numeric,
        closed_form: closed,
        delta,
        rel_err: if closed != 0.0 { err / closed.abs() } else { err },
    })
}

/// `∫ |∂ₓφ_a|² + |∂_yφ_a|² dx dy` from the derivatives of `A` and `B` directly.
pub fn dirichlet_energy(atlas: &CurveAtlas, grid: &QuadratureGrid, a: f64) -> Result<f64, QuadError> {
    integrate_flat(atlas, grid, |s| {
        let d = &s.jet.da + &s.jet.db * C64::new(a, 0.0);
        CurveJet::flat_dirichlet(&d)
    })
}

/// Largest deviation of `|φ_a − I/(n+1)|²` from `(2a − 1)² + (n − 1)/(n + 1)`
/// over uniformly random points of the sphere (fixed seed).
pub fn sphere_radius_check(atlas: &CurveAtlas, a: f64, sample_count: usize) -> Result<f64, QuadError> {
    if sample_count == 0 {
        return Err(QuadError::NoSamples);
    }
    let n = atlas.n() as f64;
    let order = atlas.order();
    let expected = (2.0 * a - 1.0).powi(2) + (n - 1.0) / (n + 1.0);
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed_0001);
    let center = CMat::identity(order, order) * C64::new(1.0 / order as f64, 0.0);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < sample_count {
        let x = random_sphere_point(&mut rng);
        let (chart, w) = CurveAtlas::locate_sphere_point(x);
        let chart = atlas.chart(chart);
        let Ok(b) = curve::eval_gauss(chart, w) else { continue };
        let a_pt = curve::eval_point(chart, w)?;
        let phi = a_pt.matrix() + b * C64::new(a, 0.0) - &center;
        worst = worst.max((hm_norm_sq(&phi) - expected).abs());
        done += 1;
    }
    Ok(worst)
}

/// Uniform point on the unit sphere.
pub fn random_sphere_point<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if r2 > 1e-6 && r2 <= 1.0 {
            let r = r2.sqrt();
            return [v[0] / r, v[1] / r, v[2] / r];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::builtin;

    #[test]
    fn grid_weights_cover_two_disks() {
        let g = QuadratureGrid::new(16, 24).unwrap();
        assert_eq!(g.nodes().len(), 2 * 16 * 24);
        assert!(g
            .nodes()
            .iter()
            .all(|n| n.weight > 0.0 && n.w.norm() > 0.0 && n.w.norm() < 1.0));
        let total: f64 = g.nodes().iter().map(|n| n.weight).sum();
        assert!((total - 2.0 * PI).abs() < 1e-12);
        assert_eq!(QuadratureGrid::new(0, 4), Err(QuadError::BadOrder(0, 4)));
    }

    #[test]
    fn areas_of_line_and_conic() {
        let g = QuadratureGrid::default();
        let line = CurveAtlas::rational_normal_curve(1).unwrap();
        let conic = CurveAtlas::rational_normal_curve(2).unwrap();
        assert!((area(&line, &g).unwrap() - 4.0 * PI).abs() < 1e-10);
        assert!((area(&conic, &g).unwrap() - 8.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn cubic_total_curvature() {
        let g = QuadratureGrid::default();
        let cubic = CurveAtlas::rational_normal_curve(3).unwrap();
        assert!((total_curvature(&cubic, &g).unwrap() - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn energy_examples_on_conic() {
        let g = QuadratureGrid::default();
        let conic = CurveAtlas::rational_normal_curve(2).unwrap();
        let e0 = energy(&conic, &g, 0.0).unwrap();
        assert!((e0.closed_form - 16.0 * PI).abs() < 1e-12);
        assert!(e0.rel_err < 1e-10);
        let e_half = energy(&conic, &g, 0.5).unwrap();
        assert!((e_half.closed_form - 4.0 * PI).abs() < 1e-12);
        assert!(e_half.rel_err < 1e-10);
    }

    #[test]
    fn energy_is_unitarily_invariant() {
        let g = QuadratureGrid::default();
        let conic = builtin::asym_conic();
        let u = builtin::twist_unitary(3);
        let moved = conic.transformed(&u).unwrap();
        let e1 = energy(&conic, &g, 0.0).unwrap().numeric_energy;
        let e2 = energy(&moved, &g, 0.0).unwrap().numeric_energy;
        assert!((e1 - e2).abs() < 1e-9 * e1);
    }

    #[test]
    fn sphere_radius_examples() {
        let line = CurveAtlas::rational_normal_curve(1).unwrap();
        let conic = CurveAtlas::rational_normal_curve(2).unwrap();
        assert!(sphere_radius_check(&line, 0.0, 50).unwrap() < 1e-12);
        assert!(sphere_radius_check(&conic, 0.0, 50).unwrap() < 1e-12);
        assert!(sphere_radius_check(&builtin::branched_cubic(), 0.5, 50).unwrap() < 1e-12);
        assert_eq!(sphere_radius_check(&line, 0.0, 0), Err(QuadError::NoSamples));
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
    }
}
