//! The center-of-mass map and its balancing.
//!
//! For a point `P` of the hull, the curve `z` is pushed to `zP` and its test
//! map `A_P + aB_P` is averaged against a fixed measure on the original curve:
//!
//! ```text
//! Φ_a(P) = (1/μ(Σ)) ∫ (A_P + a B_P) dμ
//! ```
//!
//! [`balance`] searches the interior of the hull, parametrized by
//! `P = exp(S)/tr exp(S)`, for `Φ_a(P) = I/(n+1)`. The residual is minimized
//! by a quasi-Newton iteration (finite-difference Jacobian, Broyden updates,
//! Armijo backtracking).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::curve::{self, ChartId, CurveAtlas, CurveError, BRANCH_TOL};
use crate::matspace::{
    self, conj_outer, exp_normalize, hermitize, hm_inner_unchecked, hm_norm_sq, hull_classify, row_times,
    HermitianPoint, HullClassification, MatError, TracelessHermitian, DEFAULT_RANK_TOL,
};
use crate::quad::{pairwise_sum, pairwise_sum_matrix, QuadError, QuadratureGrid};
use crate::{CMat, CVec, C64};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 500;

/// Smallest eigenvalue of `P` a solver step may produce.
const MIN_EIGENVALUE: f64 = 1e-10;
const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BalanceError {
    #[error("P is not positive semidefinite")]
    NotPsd,
    #[error("P has rank 1; the center of mass does not extend there for a = {0} > 0")]
    RankOne(f64),
    #[error("projection needs rank P >= 2, got {0}")]
    RankTooSmall(usize),
    #[error("weight a = {0} outside [0, 1)")]
    WeightOutOfRange(f64),
    #[error("balancing needs a < 1/2, got a = {0}")]
    WeightTooLarge(f64),
    #[error("balancing a curve in a line is only supported for a = 0, got a = {0}")]
    LineWithPositiveWeight(f64),
    #[error("curve is not full: coefficient rank {rank} < {order}")]
    NotFull { rank: usize, order: usize },
    #[error("density must be positive and finite, got {0}")]
    BadDensity(f64),
    #[error("no convergence after {iterations} iterations, best residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Pointwise density relative to the induced area, as a function of the
/// stereographic point of the parameter sphere.
pub type Density = Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Induced,
    ConformalDensity,
}

/// `dμ = ρ dΣ`.
#[derive(Clone)]
pub struct MeasureSpec {
    kind: MeasureKind,
    density: Option<Density>,
}

impl fmt::Debug for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasureSpec")
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

impl MeasureSpec {
    pub fn induced() -> Self {
        Self {
            kind: MeasureKind::Induced,
            density: None,
        }
    }

    pub fn conformal_density<F>(rho: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: MeasureKind::ConformalDensity,
            density: Some(Arc::new(rho)),
        }
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn density_at(&self, chart: ChartId, w: C64) -> f64 {
        match &self.density {
            None => 1.0,
            Some(rho) => rho(CurveAtlas::sphere_point(chart, w)),
        }
    }
}

impl Default for MeasureSpec {
    fn default() -> Self {
        Self::induced()
    }
}

struct Sample {
    chart: ChartId,
    w: C64,
    z: CVec,
    z1: CVec,
    mass: f64,
}

/// The measure `μ` sampled on a grid, ready for repeated evaluation of `Φ_a`.
pub struct CenterOfMass<'a> {
    atlas: &'a CurveAtlas,
    samples: Vec<Sample>,
    total: f64,
}

impl<'a> CenterOfMass<'a> {
    pub fn new(atlas: &'a CurveAtlas, measure: &MeasureSpec, grid: &QuadratureGrid) -> Result<Self, BalanceError> {
        let samples: Vec<Sample> = grid
            .nodes()
            .par_iter()
            .map(|node| {
                let chart = atlas.chart(node.chart);
                let [z, z1, _] = chart.jet_vectors(node.w);
                let rho = measure.density_at(node.chart, node.w);
                if !(rho > 0.0 && rho.is_finite()) {
                    return Err(BalanceError::BadDensity(rho));
                }
                Ok(Sample {
                    chart: node.chart,
                    w: node.w,
                    z,
                    z1,
                    mass: node.weight * curve::conformal_factor(chart, node.w) * rho,
                })
            })
            .collect::<Result<_, _>>()?;
        let masses: Vec<f64> = samples.iter().map(|s| s.mass).collect();
        let total = pairwise_sum(&masses);
        Ok(Self { atlas, samples, total })
    }

    /// `μ(Σ)`.
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    /// `Φ_a(P)`.
    pub fn evaluate(&self, p: &HermitianPoint, a: f64) -> Result<CMat, BalanceError> {
        if !(0.0..1.0).contains(&a) {
            return Err(BalanceError::WeightOutOfRange(a));
        }
        if p.order() != self.atlas.order() {
            return Err(MatError::OrderMismatch(p.order(), self.atlas.order()).into());
        }
        match hull_classify(p, DEFAULT_RANK_TOL) {
            HullClassification::NotInHull => Err(BalanceError::NotPsd),
            HullClassification::Boundary { rank: 1 } if a > 0.0 => Err(BalanceError::RankOne(a)),
            HullClassification::Boundary { rank: 1 } => Ok(p.matrix().clone()),
            HullClassification::Boundary { .. } => self.evaluate_projected(p, a),
            HullClassification::Interior => self.evaluate_interior(p, a),
        }
    }

    fn evaluate_interior(&self, p: &HermitianPoint, a: f64) -> Result<CMat, BalanceError> {
        let pm = p.matrix();
        let charts = [
            self.atlas.chart(ChartId::Zero).times_matrix(pm)?,
            self.atlas.chart(ChartId::Infinity).times_matrix(pm)?,
        ];
        let terms: Vec<CMat> = self
            .samples
            .par_iter()
            .map(|s| {
                let zp = row_times(&s.z, pm);
                let z1p = row_times(&s.z1, pm);
                let nsq = zp.norm_squared();
                if nsq == 0.0 {
                    return Err(BalanceError::Mat(MatError::KernelHit));
                }
                let q = &z1p - &zp * (zp.dotc(&z1p) / nsq);
                let qn = q.norm();
                let value = if qn > BRANCH_TOL * (nsq.sqrt() + z1p.norm()) {
                    conj_outer(&zp) * C64::new((1.0 - a) / nsq, 0.0) + conj_outer(&q) * C64::new(a / (qn * qn), 0.0)
                } else {
                    let chart = &charts[chart_index(s.chart)];
                    let b = curve::eval_gauss(chart, s.w)?;
                    conj_outer(&zp) * C64::new(1.0 / nsq, 0.0) + b * C64::new(a, 0.0)
                };
                Ok(value * C64::new(s.mass, 0.0))
            })
            .collect::<Result<_, BalanceError>>()?;
        Ok(self.normalize(&terms))
    }

    fn evaluate_projected(&self, p: &HermitianPoint, a: f64) -> Result<CMat, BalanceError> {
        let projected = project_curve(self.atlas, p)?;
        let terms: Vec<CMat> = self
            .samples
            .par_iter()
            .map(|s| {
                let chart = projected.chart(s.chart);
                let point = curve::eval_point(chart, s.w)?;
                let b = curve::eval_gauss(chart, s.w)?;
                Ok((point.into_matrix() + b * C64::new(a, 0.0)) * C64::new(s.mass, 0.0))
            })
            .collect::<Result<_, BalanceError>>()?;
        Ok(self.normalize(&terms))
    }

    fn normalize(&self, terms: &[CMat]) -> CMat {
        hermitize(&(pairwise_sum_matrix(terms) / C64::new(self.total, 0.0)))
    }
}

fn chart_index(id: ChartId) -> usize {
    match id {
        ChartId::Zero => 0,
        ChartId::Infinity => 1,
    }
}

/// `Φ_a(P)` for one `P`.
pub fn center_of_mass(
    atlas: &CurveAtlas,
    measure: &MeasureSpec,
    p: &HermitianPoint,
    a: f64,
    grid: &QuadratureGrid,
) -> Result<CMat, BalanceError> {
    CenterOfMass::new(atlas, measure, grid)?.evaluate(p, a)
}

/// The curve `zP`, with common factors removed.
pub fn project_curve(atlas: &CurveAtlas, p: &HermitianPoint) -> Result<CurveAtlas, BalanceError> {
    let rank = p.rank(DEFAULT_RANK_TOL);
    if rank < 2 {
        return Err(BalanceError::RankTooSmall(rank));
    }
    let chart = atlas.chart(ChartId::Zero).times_matrix(p.matrix())?;
    Ok(CurveAtlas::from_components(
        format!("{}-projected", atlas.name),
        chart.components().to_vec(),
    )?)
}

#[derive(Debug, Clone)]
pub struct BalanceResult {
    pub p: HermitianPoint,
    /// `‖Φ_a(P) − I/(n+1)‖` in the `2 tr AB` norm.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual after each accepted step, starting with the initial one.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BalanceOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub grid: QuadratureGrid,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            grid: QuadratureGrid::default(),
        }
    }
}

/// Finds interior `P` with `Φ_a(P) = I/(n+1)` on the default grid.
pub fn balance(atlas: &CurveAtlas, measure: &MeasureSpec, a: f64, tol: f64) -> Result<BalanceResult, BalanceError> {
    balance_with(
        atlas,
        measure,
        a,
        &BalanceOptions {
            tol,
            ..BalanceOptions::default()
        },
    )
}

struct Probe {
    p: HermitianPoint,
    coords: DVector<f64>,
    norm: f64,
}

pub fn balance_with(
    atlas: &CurveAtlas,
    measure: &MeasureSpec,
    a: f64,
    opts: &BalanceOptions,
) -> Result<BalanceResult, BalanceError> {
    if !(opts.tol > 0.0) {
        return Err(BalanceError::BadTolerance(opts.tol));
    }
    if !(a >= 0.0) {
        return Err(BalanceError::WeightOutOfRange(a));
    }
    if a >= 0.5 {
        return Err(BalanceError::WeightTooLarge(a));
    }
    if atlas.n() == 1 && a > 0.0 {
        return Err(BalanceError::LineWithPositiveWeight(a));
    }
    if !atlas.is_full() {
        return Err(BalanceError::NotFull {
            rank: atlas.coefficient_rank(),
            order: atlas.order(),
        });
    }
    let order = atlas.order();
    let dim = TracelessHermitian::dimension(order);
    let com = CenterOfMass::new(atlas, measure, &opts.grid)?;
    let center = CMat::identity(order, order) * C64::new(1.0 / order as f64, 0.0);
    let basis: Vec<CMat> = (0..dim)
        .map(|k| TracelessHermitian::basis_element(order, k).matrix().clone())
        .collect();

    // None marks a rejected point (too close to the boundary or overflow).
    let probe = |x: &DVector<f64>| -> Result<Option<Probe>, BalanceError> {
        let s = TracelessHermitian::from_coords(order, x.as_slice())?;
        let p = match exp_normalize(&s) {
            Ok(p) => p,
            Err(MatError::ExpOverflow(..)) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        if p.eigenvalues()[0] < MIN_EIGENVALUE {
            return Ok(None);
        }
        let r = com.evaluate(&p, a)? - &center;
        let coords = DVector::from_iterator(dim, basis.iter().map(|e| hm_inner_unchecked(&r, e)));
        Ok(Some(Probe {
            p,
            coords,
            norm: hm_norm_sq(&r).sqrt(),
        }))
    };
    let jacobian = |x: &DVector<f64>, base: &Probe| -> Result<DMatrix<f64>, BalanceError> {
        let h = 1e-6 * (1.0 + x.norm());
        let cols: Vec<DVector<f64>> = (0..dim)
            .into_par_iter()
            .map(|k| {
                let mut xk = x.clone();
                xk[k] += h;
                match probe(&xk)? {
                    Some(pk) => Ok((pk.coords - &base.coords) / h),
                    None => {
                        xk[k] -= 2.0 * h;
                        let pk = probe(&xk)?.ok_or(BalanceError::NotConverged {
                            iterations: 0,
                            residual: base.norm,
                        })?;
                        Ok((&base.coords - pk.coords) / h)
                    }
                }
            })
            .collect::<Result<_, BalanceError>>()?;
        Ok(DMatrix::from_columns(&cols))
    };

    let mut x = DVector::<f64>::zeros(dim);
    let mut current = probe(&x)?.expect("the center is interior");
    let mut history = vec![current.norm];
    let mut iterations = 0;
    let mut converged = current.norm < opts.tol;
    let mut jac: Option<DMatrix<f64>> = None;
    let mut fresh = false;

    while !converged && iterations < opts.max_iter {
        let j = match &jac {
            Some(j) => j.clone(),
            None => {
                fresh = true;
                jacobian(&x, &current)?
            }
        };
        let step = -j
            .clone()
            .svd(true, true)
            .solve(&current.coords, 1e-12 * j.norm().max(1e-300))
            .map_err(|_| BalanceError::NotConverged {
                iterations,
                residual: current.norm,
            })?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate = &x + &step * t;
            if let Some(pr) = probe(&candidate)? {
                if pr.norm * pr.norm <= (1.0 - 2.0 * ARMIJO_C * t) * current.norm * current.norm {
                    accepted = Some((candidate, pr));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((x_new, next)) = accepted else {
            if fresh {
                break;
            }
            jac = None;
            continue;
        };
        let s = &x_new - &x;
        let y = &next.coords - &current.coords;
        let ss = s.norm_squared();
        let mut j = j;
        if ss > 0.0 {
            let corr = (&y - &j * &s) / ss;
            j += corr * s.transpose();
        }
        jac = Some(j);
        fresh = false;
        x = x_new;
        current = next;
        iterations += 1;
        history.push(current.norm);
        converged = current.norm < opts.tol;
    }

    if !converged {
        return Err(BalanceError::NotConverged {
            iterations,
            residual: current.norm,
        });
    }
    Ok(BalanceResult {
        p: current.p,
        residual: current.norm,
        iterations,
        converged,
        history,
    })
}

/// `Φ_a(P_ε)` for `P_ε = (E₀₀ + εE₁₁)/(1 + ε)`: as `ε → 0` the values tend to
/// `P₀ + a·B` with `B` the Gauss map of the limit line `{z₂ = … = z_n = 0}`.
pub fn boundary_limit_experiment(atlas: &CurveAtlas, a: f64, eps_list: &[f64]) -> Result<Vec<CMat>, BalanceError> {
    boundary_limit_along(atlas, a, eps_list, 1, &QuadratureGrid::default())
}

/// As [`boundary_limit_experiment`] with `E_kk` in place of `E₁₁`.
pub fn boundary_limit_along(
    atlas: &CurveAtlas,
    a: f64,
    eps_list: &[f64],
    k: usize,
    grid: &QuadratureGrid,
) -> Result<Vec<CMat>, BalanceError> {
    let order = atlas.order();
    if k == 0 || k >= order {
        return Err(MatError::OrderMismatch(k, order).into());
    }
    let com = CenterOfMass::new(atlas, &MeasureSpec::induced(), grid)?;
    eps_list
        .iter()
        .map(|&eps| {
            let mut diag = vec![0.0; order];
            diag[0] = 1.0 / (1.0 + eps);
            diag[k] = eps / (1.0 + eps);
            com.evaluate(&HermitianPoint::diagonal(&diag)?, a)
        })
        .collect()
}

/// `‖X‖` in the `2 tr AB` norm.
pub fn hm_norm(x: &CMat) -> f64 {
    matspace::hm_norm_sq(x).sqrt()
}
