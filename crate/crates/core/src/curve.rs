//! Genus-0 holomorphic curves in `CP^n` given by polynomial charts.
//!
//! A curve is a vector of polynomials `z(w) = (z_0(w), …, z_n(w))` on the
//! `w`-plane, completed at infinity by the chart `u = 1/w` with components
//! `uᵈ z_k(1/u)`. Pointwise quantities (the point `A`, the Gauss map `B`, the
//! density of the induced metric, curvature) come from exact derivatives of
//! the polynomials.
//!
//! With `q = z' − (⟨z', z⟩/|z|²) z` the component of `z'` orthogonal to `z`,
//! the tangent line is spanned by `z` and `q`, its antipode of `A` is `[q]`,
//! and `B = [q] − A`. The Hermitian derivatives used below are
//!
//! ```text
//! ∂_w A = z̄ᵗ q / |z|²
//! ∂_w Π = q̄ᵗ z''(I − Π) / |q|²        (Π = A + [q], projector onto the line)
//! ∂_w B = ∂_w Π − 2 ∂_w A
//! ```
//!
//! and `∂_w̄ = (∂_w)^H` since the maps are Hermitian.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matspace::{self, hm_norm_sq, point_from_homogeneous, HermitianPoint, MAX_ORDER};
use crate::poly::{common_roots, Poly, VANISH_TOL};
use crate::{CMat, CVec, C64};

/// Relative threshold under which the normal part of a derivative vanishes.
pub const BRANCH_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("curve needs between 2 and {MAX_ORDER} components, got {0}")]
    BadComponentCount(usize),
    #[error("all components vanish identically")]
    AllZero,
    #[error("curve is constant")]
    Constant,
    #[error("w = {0} is a branch point")]
    BranchPoint(C64),
    #[error("rational normal curve needs n >= 1, got {0}")]
    BadDimension(usize),
    #[error("projection needs rank >= 2, got {0}")]
    RankTooSmall(usize),
    #[error("matrix order {0} does not match curve order {1}")]
    OrderMismatch(usize, usize),
    #[error(transparent)]
    Mat(#[from] matspace::MatError),
}

/// Which of the two standard charts a coordinate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChartId {
    /// Coordinate `w`.
    Zero,
    /// Coordinate `u = 1/w`.
    Infinity,
}

/// Polynomial components of one chart, evaluated on the closed unit disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveChart {
    components: Vec<Poly>,
}

impl CurveChart {
    pub fn new(components: Vec<Poly>) -> Result<Self, CurveError> {
        if !(2..=MAX_ORDER).contains(&components.len()) {
            return Err(CurveError::BadComponentCount(components.len()));
        }
        if components.iter().all(Poly::is_zero) {
            return Err(CurveError::AllZero);
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    /// Matrix order `n + 1`.
    pub fn order(&self) -> usize {
        self.components.len()
    }

    pub fn max_degree(&self) -> usize {
        self.components.iter().filter_map(Poly::degree).max().unwrap_or(0)
    }

    pub fn eval_z(&self, w: C64) -> CVec {
        CVec::from_iterator(self.order(), self.components.iter().map(|p| p.eval(w)))
    }

    /// `(z, z', z'')` at `w`.
    pub fn jet_vectors(&self, w: C64) -> [CVec; 3] {
        let n = self.order();
        let mut out = [CVec::zeros(n), CVec::zeros(n), CVec::zeros(n)];
        for (k, p) in self.components.iter().enumerate() {
            let j = p.eval_jet(w);
            for s in 0..3 {
                out[s][k] = j[s];
            }
        }
        out
    }

    fn derivative_vector(&self, k: usize, w: C64) -> CVec {
        CVec::from_iterator(
            self.order(),
            self.components.iter().map(|p| p.nth_derivative(k).eval(w)),
        )
    }

    /// The 2×2 minors `z_i z_j' − z_j z_i'`, whose common zeros are the branch points.
    pub fn wronskian_minors(&self) -> Vec<Poly> {
        let d: Vec<Poly> = self.components.iter().map(Poly::derivative).collect();
        let n = self.order();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.components[i].mul(&d[j]).sub(&self.components[j].mul(&d[i])));
            }
        }
        out
    }

    fn is_constant(&self) -> bool {
        self.wronskian_minors().iter().all(|m| m.trimmed(1e-14).is_zero())
    }

    /// Components composed with `w ↦ s·w`.
    pub fn rescaled(&self, s: C64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|p| {
                    let mut pow = C64::new(1.0, 0.0);
                    let coeffs = p
                        .coeffs()
                        .iter()
                        .map(|&c| {
                            let v = c * pow;
                            pow *= s;
                            v
                        })
                        .collect();
                    Poly::new(coeffs)
                })
                .collect(),
        }
    }

    /// Components of `zM`.
    pub fn times_matrix(&self, m: &CMat) -> Result<Self, CurveError> {
        let n = self.order();
        if m.nrows() != n || m.ncols() != n {
            return Err(CurveError::OrderMismatch(m.nrows(), n));
        }
        let components = (0..n)
            .map(|j| {
                self.components
                    .iter()
                    .enumerate()
                    .fold(Poly::zero(), |acc, (i, p)| acc.sub(&p.scale(-m[(i, j)])))
            })
            .collect();
        Self::new(components)
    }
}

/// Unit normal part of `v` relative to `z`: `v − (⟨v, z⟩/|z|²) z`.
fn normal_part(v: &CVec, z: &CVec, nsq: f64) -> CVec {
    let coef = z.dotc(v) / nsq;
    v - z * coef
}

/// Point `A = z̄ᵗz/|z|²` of the curve at `w`.
pub fn eval_point(chart: &CurveChart, w: C64) -> Result<HermitianPoint, CurveError> {
    Ok(point_from_homogeneous(&chart.eval_z(w))?)
}

/// Tangent direction at `w`: the normal part of the first derivative of `z`
/// that is not parallel to `z`. `Ok((q, k))` with `k` the derivative order used.
fn tangent_direction(chart: &CurveChart, w: C64, z: &CVec, z1: &CVec) -> Result<(CVec, usize), CurveError> {
    let zn = z.norm();
    let nsq = zn * zn;
    let q1 = normal_part(z1, z, nsq);
    if q1.norm() > BRANCH_TOL * (zn + z1.norm()) {
        return Ok((q1, 1));
    }
    let top = chart.max_degree();
    for k in 2..=top {
        let zk = chart.derivative_vector(k, w);
        let qk = normal_part(&zk, z, nsq);
        if qk.norm() > BRANCH_TOL * (zn + zk.norm()) {
            return Ok((qk, k));
        }
    }
    Err(CurveError::Constant)
}

/// Gauss map `B = A⁻ − A`. At a branch point the tangent line comes from the
/// first nonvanishing derivative, which gives the continuous extension.
pub fn eval_gauss(chart: &CurveChart, w: C64) -> Result<CMat, CurveError> {
    let z = chart.eval_z(w);
    let z1 = chart.derivative_vector(1, w);
    let a = point_from_homogeneous(&z)?;
    let (q, _) = tangent_direction(chart, w, &z, &z1)?;
    let antipode = point_from_homogeneous(&q)?;
    Ok(antipode.matrix() - a.matrix())
}

/// Holomorphic derivatives of `A` and `B` at an unbranched point.
#[derive(Debug, Clone)]
pub struct CurveJet {
    pub a: CMat,
    pub b: CMat,
    /// `∂_w A`
    pub da: CMat,
    /// `∂_w B`
    pub db: CMat,
    /// Density `e^{2θ}` of the induced metric in the chart coordinate.
    pub conf: f64,
}

impl CurveJet {
    pub fn dx(d: &CMat) -> CMat {
        d + d.adjoint()
    }

    pub fn dy(d: &CMat) -> CMat {
        (d - d.adjoint()) * C64::new(0.0, 1.0)
    }

    /// `|∂ₓX|² + |∂_yX|²` for a Hermitian map with holomorphic derivative `d`.
    pub fn flat_dirichlet(d: &CMat) -> f64 {
        hm_norm_sq(&Self::dx(d)) + hm_norm_sq(&Self::dy(d))
    }

    /// `|∇X|²` with respect to the induced metric.
    pub fn grad_sq(&self, d: &CMat) -> f64 {
        Self::flat_dirichlet(d) / self.conf
    }

    /// `⟨∇X, ∇Y⟩` with respect to the induced metric.
    pub fn grad_inner(&self, dx_: &CMat, dy_: &CMat) -> f64 {
        let x = matspace::hm_inner_unchecked(&Self::dx(dx_), &Self::dx(dy_))
            + matspace::hm_inner_unchecked(&Self::dy(dx_), &Self::dy(dy_));
        x / self.conf
    }
}

/// Closed-form jet of the curve at `w`; fails on branch points.
pub fn jet(chart: &CurveChart, w: C64) -> Result<CurveJet, CurveError> {
    let [z, z1, z2] = chart.jet_vectors(w);
    let zn = z.norm();
    if zn == 0.0 {
        return Err(CurveError::Mat(matspace::MatError::ZeroVector));
    }
    let nsq = zn * zn;
    let q = normal_part(&z1, &z, nsq);
    let qn = q.norm();
    if qn <= BRANCH_TOL * (zn + z1.norm()) {
        return Err(CurveError::BranchPoint(w));
    }
    let qsq = qn * qn;
    let a = matspace::conj_outer(&z) * C64::new(1.0 / nsq, 0.0);
    let antipode = matspace::conj_outer(&q) * C64::new(1.0 / qsq, 0.0);
    let b = &antipode - &a;

    let zbar = z.map(|c| c.conj());
    let qbar = q.map(|c| c.conj());
    let da = &zbar * q.transpose() * C64::new(1.0 / nsq, 0.0);

    let e1 = &z / C64::new(zn, 0.0);
    let e2 = &q / C64::new(qn, 0.0);
    let r = &z2 - &e1 * e1.dotc(&z2) - &e2 * e2.dotc(&z2);
    let dpi = &qbar * r.transpose() * C64::new(1.0 / qsq, 0.0);
    let db = dpi - &da * C64::new(2.0, 0.0);

    let conf = hm_norm_sq(&CurveJet::dx(&da));
    Ok(CurveJet { a, b, da, db, conf })
}

/// Density `e^{2θ}` of the induced Fubini–Study metric, `|∂ₓA|²`.
pub fn conformal_factor(chart: &CurveChart, w: C64) -> f64 {
    let [z, z1, _] = chart.jet_vectors(w);
    let nsq = z.norm_squared();
    let q = normal_part(&z1, &z, nsq);
    let da = z.map(|c| c.conj()) * q.transpose() * C64::new(1.0 / nsq, 0.0);
    hm_norm_sq(&CurveJet::dx(&da))
}

/// Pointwise curve data at an unbranched point.
#[derive(Debug, Clone)]
pub struct CurvePointData {
    pub a: HermitianPoint,
    pub b: CMat,
    pub conf: f64,
    pub sigma_sq: f64,
    pub k: f64,
}

impl CurvePointData {
    pub fn from_jet(j: &CurveJet) -> Self {
        let sigma_sq = (j.grad_sq(&j.db) / 2.0 - 4.0).max(0.0);
        Self {
            a: HermitianPoint::from_matrix_unchecked(j.a.clone()),
            b: j.b.clone(),
            conf: j.conf,
            sigma_sq,
            k: 1.0 - sigma_sq / 2.0,
        }
    }
}

/// `A`, `B`, `e^{2θ}`, `|σ|²` and `K = 1 − |σ|²/2` at `w`.
pub fn curvature_data(chart: &CurveChart, w: C64) -> Result<CurvePointData, CurveError> {
    Ok(CurvePointData::from_jet(&jet(chart, w)?))
}

/// Branch points of the chart in the finite `w`-plane with their orders.
pub fn branch_orders(chart: &CurveChart) -> Result<Vec<(C64, usize)>, CurveError> {
    if chart.is_constant() {
        return Err(CurveError::Constant);
    }
    Ok(common_roots(&chart.wronskian_minors()))
}

/// Vanishing order at the coordinate origin of the branching minors.
fn branch_order_at_origin(chart: &CurveChart) -> usize {
    chart
        .wronskian_minors()
        .iter()
        .map(|p| p.trimmed(1e-14))
        .filter(|p| !p.is_zero())
        .map(|p| p.vanishing_order(C64::new(0.0, 0.0), VANISH_TOL))
        .min()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub chart: ChartId,
    pub location: C64,
    pub order: usize,
}

/// A genus-0 curve: the `w` chart, the chart at infinity, degree and branching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveAtlas {
    pub name: String,
    chart_0: CurveChart,
    chart_inf: CurveChart,
    degree: usize,
    branch_points: Vec<BranchPoint>,
}

impl CurveAtlas {
    /// Builds the atlas from the `w`-chart components, dividing out common factors.
    pub fn from_components(name: impl Into<String>, components: Vec<Poly>) -> Result<Self, CurveError> {
        let chart = CurveChart::new(components)?;
        if chart.is_constant() {
            return Err(CurveError::Constant);
        }
        let chart_0 = reduce(chart)?;
        let degree = chart_0.max_degree();
        let chart_inf = CurveChart::new(chart_0.components.iter().map(|p| p.reversed(degree)).collect())?;
        let mut branch_points: Vec<BranchPoint> = branch_orders(&chart_0)?
            .into_iter()
            .map(|(location, order)| BranchPoint {
                chart: ChartId::Zero,
                location,
                order,
            })
            .collect();
        let at_inf = branch_order_at_origin(&chart_inf);
        if at_inf > 0 {
            branch_points.push(BranchPoint {
                chart: ChartId::Infinity,
                location: C64::new(0.0, 0.0),
                order: at_inf,
            });
        }
        Ok(Self {
            name: name.into(),
            chart_0,
            chart_inf,
            degree,
            branch_points,
        })
    }

    /// `z_k = √C(n,k) wᵏ`: full, unbranched, degree `n`.
    pub fn rational_normal_curve(n: usize) -> Result<Self, CurveError> {
        if n < 1 {
            return Err(CurveError::BadDimension(n));
        }
        let mut binom = 1.0_f64;
        let comps = (0..=n)
            .map(|k| {
                if k > 0 {
                    binom = binom * (n + 1 - k) as f64 / k as f64;
                }
                Poly::monomial(C64::new(binom.sqrt(), 0.0), k)
            })
            .collect();
        let name = match n {
            1 => "line".to_string(),
            2 => "conic".to_string(),
            3 => "cubic".to_string(),
            _ => format!("rational-normal-{n}"),
        };
        Self::from_components(name, comps)
    }

    pub fn chart(&self, id: ChartId) -> &CurveChart {
        match id {
            ChartId::Zero => &self.chart_0,
            ChartId::Infinity => &self.chart_inf,
        }
    }

    /// `n`, the dimension of the ambient projective space.
    pub fn n(&self) -> usize {
        self.chart_0.order() - 1
    }

    pub fn order(&self) -> usize {
        self.chart_0.order()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn genus(&self) -> usize {
        0
    }

    pub fn branch_points(&self) -> &[BranchPoint] {
        &self.branch_points
    }

    /// Total branching `b`.
    pub fn total_branching(&self) -> usize {
        self.branch_points.iter().map(|p| p.order).sum()
    }

    /// `δ = 1 + (g − 1 − b/2)/d`.
    pub fn delta(&self) -> f64 {
        1.0 + (self.genus() as f64 - 1.0 - self.total_branching() as f64 / 2.0) / self.degree as f64
    }

    /// Rank of the coefficient matrix equals `n + 1`.
    pub fn is_full(&self) -> bool {
        self.coefficient_rank() == self.order()
    }

    pub fn coefficient_rank(&self) -> usize {
        let n = self.order();
        let m = CMat::from_fn(n, self.degree + 1, |i, k| {
            self.chart_0.components[i]
                .coeffs()
                .get(k)
                .copied()
                .unwrap_or(C64::new(0.0, 0.0))
        });
        let scale = m.norm().max(f64::MIN_POSITIVE);
        m.rank(1e-10 * scale)
    }

    /// Same curve in the coordinate `w ↦ s·w`.
    pub fn reparametrized(&self, s: C64) -> Result<Self, CurveError> {
        Self::from_components(format!("{}-rescaled", self.name), self.chart_0.rescaled(s).components)
    }

    /// The curve `z ↦ zM` (for invertible `M`, a projective transformation).
    pub fn transformed(&self, m: &CMat) -> Result<Self, CurveError> {
        Self::from_components(self.name.clone(), self.chart_0.times_matrix(m)?.components)
    }

    /// Chart and coordinate for a point on the stereographic unit sphere.
    pub fn locate_sphere_point(x: [f64; 3]) -> (ChartId, C64) {
        if x[2] <= 0.0 {
            (ChartId::Zero, C64::new(x[0], x[1]) / (1.0 - x[2]))
        } else {
            (ChartId::Infinity, C64::new(x[0], -x[1]) / (1.0 + x[2]))
        }
    }

    /// Stereographic image on the unit sphere of a chart coordinate.
    pub fn sphere_point(chart: ChartId, c: C64) -> [f64; 3] {
        let w = match chart {
            ChartId::Zero => c,
            ChartId::Infinity => {
                if c.norm() == 0.0 {
                    return [0.0, 0.0, 1.0];
                }
                c.inv()
            }
        };
        let r2 = w.norm_sqr();
        [
            2.0 * w.re / (1.0 + r2),
            2.0 * w.im / (1.0 + r2),
            (r2 - 1.0) / (r2 + 1.0),
        ]
    }
}

/// Removes common polynomial factors of the components.
fn reduce(chart: CurveChart) -> Result<CurveChart, CurveError> {
    let mut comps: Vec<Poly> = chart.components.iter().map(|p| p.trimmed(1e-14)).collect();
    for (root, mult) in common_roots(&comps) {
        for _ in 0..mult {
            comps = comps
                .iter()
                .map(|p| if p.is_zero() { Poly::zero() } else { p.deflate(root) })
                .collect();
        }
    }
    CurveChart::new(comps)
}

/// Named test curves.
pub mod builtin {
    use super::*;

    pub const NAMES: &[&str] = &[
        "line",
        "conic",
        "cubic",
        "branched-cubic",
        "double-line",
        "asym-conic",
        "twisted-cubic",
    ];

    /// `(1, w², w³)`: degree 3, one branch point of order 1 at `w = 0`.
    pub fn branched_cubic() -> CurveAtlas {
        CurveAtlas::from_components(
            "branched-cubic",
            vec![
                Poly::constant(C64::new(1.0, 0.0)),
                Poly::monomial(C64::new(1.0, 0.0), 2),
                Poly::monomial(C64::new(1.0, 0.0), 3),
            ],
        )
        .expect("valid curve")
    }

    /// `(1, w²)`: a double cover of a line, branched at `0` and `∞`.
    pub fn double_line() -> CurveAtlas {
        CurveAtlas::from_components(
            "double-line",
            vec![
                Poly::constant(C64::new(1.0, 0.0)),
                Poly::monomial(C64::new(1.0, 0.0), 2),
            ],
        )
        .expect("valid curve")
    }

    /// The conic composed with `w ↦ 2w`; its induced measure is not centered
    /// on the chart grid.
    pub fn asym_conic() -> CurveAtlas {
        let mut c = CurveAtlas::rational_normal_curve(2)
            .and_then(|c| c.reparametrized(C64::new(2.0, 0.0)))
            .expect("valid curve");
        c.name = "asym-conic".into();
        c
    }

    /// Fixed unitary used for the twisted cubic: `exp(iH)` for a fixed `H`.
    pub fn twist_unitary(order: usize) -> CMat {
        let h = CMat::from_fn(order, order, |i, j| {
            let (i, j) = (i as f64, j as f64);
            if i == j {
                C64::new(0.3 * i, 0.0)
            } else if i < j {
                C64::new(0.2 + 0.1 * i, 0.15 * j)
            } else {
                C64::new(0.2 + 0.1 * j, -0.15 * i)
            }
        });
        let (ev, v) = matspace::hermitian_eigen(&h);
        let d = CMat::from_fn(order, order, |i, j| {
            if i == j {
                C64::from_polar(1.0, ev[i])
            } else {
                C64::new(0.0, 0.0)
            }
        });
        &v * d * v.adjoint()
    }

    /// Rational normal cubic with unequal component weights, then a unitary twist.
    pub fn twisted_cubic() -> CurveAtlas {
        let weights = [1.0, 1.6, 0.7, 1.2];
        let cubic = CurveAtlas::rational_normal_curve(3).expect("valid curve");
        let w = CMat::from_fn(4, 4, |i, j| {
            if i == j {
                C64::new(weights[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let m = w * twist_unitary(4);
        let mut c = cubic.transformed(&m).expect("valid curve");
        c.name = "twisted-cubic".into();
        c
    }

    pub fn by_name(name: &str) -> Option<CurveAtlas> {
        match name {
            "line" => CurveAtlas::rational_normal_curve(1).ok(),
            "conic" => CurveAtlas::rational_normal_curve(2).ok(),
            "cubic" => CurveAtlas::rational_normal_curve(3).ok(),
            "branched-cubic" => Some(branched_cubic()),
            "double-line" => Some(double_line()),
            "asym-conic" => Some(asym_conic()),
            "twisted-cubic" => Some(twisted_cubic()),
            _ => None,
        }
    }
}
