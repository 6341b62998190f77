//! The Euclidean space of Hermitian matrices with `<A, B> = 2 tr AB`.
//!
//! Projective space `CP^n` sits inside the trace-one hyperplane as the rank-one
//! idempotents `A = z̄ᵗz / |z|²`; its convex hull is the set of positive
//! semidefinite trace-one matrices. Homogeneous coordinates are row vectors,
//! so a matrix `P` acts by `z ↦ zP`.

use nalgebra::SymmetricEigen;
use thiserror::Error;

use crate::{CMat, CVec, C64};

/// Largest supported matrix order (`n + 1`).
pub const MAX_ORDER: usize = 64;

/// Relative eigenvalue threshold used for rank and PSD decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Spectral spread of `S` accepted by [`exp_normalize`].
pub const DEFAULT_EXP_CAP: f64 = 200.0;

const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("matrix order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("matrix order {0} outside supported range [2, {MAX_ORDER}]")]
    OrderOutOfRange(usize),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected {1}")]
    BadTrace(f64, f64),
    #[error("homogeneous vector is zero")]
    ZeroVector,
    #[error("homogeneous vector lies in the kernel of the projectivity")]
    KernelHit,
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("spectral spread {0} exceeds the cap {1}")]
    ExpOverflow(f64, f64),
}

/// `2 tr(AB)` for Hermitian `A`, `B` of the same order.
pub fn hm_inner(a: &CMat, b: &CMat) -> Result<f64, MatError> {
    check_square(a)?;
    check_square(b)?;
    if a.nrows() != b.nrows() {
        return Err(MatError::OrderMismatch(a.nrows(), b.nrows()));
    }
    Ok(hm_inner_unchecked(a, b))
}

/// `hm_inner` without shape checks; both matrices must be square of equal order.
pub(crate) fn hm_inner_unchecked(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    2.0 * acc
}

/// Squared norm `<A, A>`.
pub fn hm_norm_sq(a: &CMat) -> f64 {
    hm_inner_unchecked(a, a)
}

fn check_square(m: &CMat) -> Result<(), MatError> {
    if m.nrows() != m.ncols() {
        return Err(MatError::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(())
}

fn check_order(order: usize) -> Result<(), MatError> {
    if !(2..=MAX_ORDER).contains(&order) {
        return Err(MatError::OrderOutOfRange(order));
    }
    Ok(())
}

fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn trace_re(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Average a nearly Hermitian matrix with its adjoint.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Ascending eigenvalues and matching eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, idx[c])]);
    (values, vectors)
}

/// Rank-one matrix `z̄ᵗ z` (entries `conj(z_i) z_j`), not normalized.
pub fn conj_outer(z: &CVec) -> CMat {
    let n = z.len();
    CMat::from_fn(n, n, |i, j| z[i].conj() * z[j])
}

/// `z ↦ zM` for a row vector `z`.
pub fn row_times(z: &CVec, m: &CMat) -> CVec {
    m.transpose() * z
}

/// A trace-one Hermitian matrix: a point of the hyperplane containing `CP^n`,
/// its convex hull, and the center `I/(n+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPoint {
    m: CMat,
}

impl HermitianPoint {
    /// Validates Hermitian symmetry and unit trace to `1e-12`.
    pub fn new(m: CMat) -> Result<Self, MatError> {
        check_square(&m)?;
        check_order(m.nrows())?;
        let dev = hermitian_deviation(&m);
        if dev > STRUCTURE_TOL * m.norm().max(1.0) {
            return Err(MatError::NotHermitian(dev));
        }
        let tr = trace_re(&m);
        if (tr - 1.0).abs() > STRUCTURE_TOL * m.norm().max(1.0) {
            return Err(MatError::BadTrace(tr, 1.0));
        }
        Ok(Self { m })
    }

    /// Wraps a matrix already known to be Hermitian with unit trace.
    pub(crate) fn from_matrix_unchecked(m: CMat) -> Self {
        Self { m }
    }

    /// The center `I/(n+1)`.
    pub fn center(order: usize) -> Result<Self, MatError> {
        check_order(order)?;
        Ok(Self {
            m: CMat::identity(order, order) * C64::new(1.0 / order as f64, 0.0),
        })
    }

    /// Diagonal point from real entries summing to one.
    pub fn diagonal(entries: &[f64]) -> Result<Self, MatError> {
        let n = entries.len();
        let m = CMat::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(entries[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::new(m)
    }

    pub fn order(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.m).0
    }

    /// Unitary conjugation `Ū ᵗ A U`.
    pub fn conjugate_by(&self, u: &CMat) -> Self {
        Self {
            m: hermitize(&(u.adjoint() * &self.m * u)),
        }
    }

    /// Number of eigenvalues above `tol` times the largest one.
    pub fn rank(&self, tol: f64) -> usize {
        let ev = self.eigenvalues();
        let top = ev.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        ev.iter().filter(|&&v| v > tol * top).count()
    }
}

/// Projective point of a nonzero homogeneous vector: `z̄ᵗz / |z|²`.
pub fn point_from_homogeneous(z: &CVec) -> Result<HermitianPoint, MatError> {
    check_order(z.len())?;
    let nsq = z.norm_squared();
    if nsq == 0.0 || !nsq.is_finite() {
        return Err(MatError::ZeroVector);
    }
    Ok(HermitianPoint {
        m: conj_outer(z) * C64::new(1.0 / nsq, 0.0),
    })
}

/// Image of `[z]` under the projectivity `[z] ↦ [zP]` for positive semidefinite `P`.
///
/// For singular `P` this is the projection of `CP^n` minus the kernel
/// subspace onto the image subspace.
pub fn apply_projectivity(p: &HermitianPoint, z: &CVec) -> Result<HermitianPoint, MatError> {
    if p.order() != z.len() {
        return Err(MatError::OrderMismatch(p.order(), z.len()));
    }
    let ev = p.eigenvalues();
    let top = ev.last().copied().unwrap_or(0.0).abs();
    if ev[0] < -DEFAULT_RANK_TOL * top {
        return Err(MatError::NotPsd(ev[0]));
    }
    apply_matrix(p.matrix(), z)
}

/// `[z] ↦ [zM]` for an arbitrary square matrix `M`.
pub fn apply_matrix(m: &CMat, z: &CVec) -> Result<HermitianPoint, MatError> {
    check_square(m)?;
    if m.nrows() != z.len() {
        return Err(MatError::OrderMismatch(m.nrows(), z.len()));
    }
    let zn = z.norm();
    if zn == 0.0 {
        return Err(MatError::ZeroVector);
    }
    let image = row_times(z, m);
    if image.norm() <= 1e-14 * zn * m.norm().max(f64::MIN_POSITIVE) {
        return Err(MatError::KernelHit);
    }
    point_from_homogeneous(&image)
}

/// Position of a trace-one matrix relative to the convex hull of `CP^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HullClassification {
    NotInHull,
    Interior,
    Boundary { rank: usize },
}

/// Classifies by the spectrum, with `tol` relative to the largest eigenvalue.
pub fn hull_classify(a: &HermitianPoint, tol: f64) -> HullClassification {
    let ev = a.eigenvalues();
    let top = ev.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let t = tol * top;
    let smallest = ev[0];
    if smallest < -t {
        HullClassification::NotInHull
    } else if smallest > t {
        HullClassification::Interior
    } else {
        HullClassification::Boundary {
            rank: ev.iter().filter(|&&v| v > t).count(),
        }
    }
}

/// Traceless Hermitian matrix; coordinates on the interior of the hull via
/// [`exp_normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct TracelessHermitian {
    m: CMat,
}

impl TracelessHermitian {
    pub fn new(m: CMat) -> Result<Self, MatError> {
        check_square(&m)?;
        check_order(m.nrows())?;
        let dev = hermitian_deviation(&m);
        if dev > STRUCTURE_TOL * m.norm().max(1.0) {
            return Err(MatError::NotHermitian(dev));
        }
        let tr = trace_re(&m);
        if tr.abs() > STRUCTURE_TOL * m.norm().max(1.0) {
            return Err(MatError::BadTrace(tr, 0.0));
        }
        Ok(Self { m })
    }

    /// Removes the trace part of a Hermitian matrix.
    pub fn project(m: &CMat) -> Result<Self, MatError> {
        check_square(m)?;
        check_order(m.nrows())?;
        let n = m.nrows();
        let shift = C64::new(trace_re(m) / n as f64, 0.0);
        let mut h = hermitize(m);
        for i in 0..n {
            h[(i, i)] -= shift;
        }
        Ok(Self { m: h })
    }

    pub fn zero(order: usize) -> Result<Self, MatError> {
        check_order(order)?;
        Ok(Self {
            m: CMat::zeros(order, order),
        })
    }

    /// Real dimension `(n+1)² − 1`.
    pub fn dimension(order: usize) -> usize {
        order * order - 1
    }

    /// Builds `Σ c_k E_k` over the basis of [`TracelessHermitian::basis_element`].
    pub fn from_coords(order: usize, coords: &[f64]) -> Result<Self, MatError> {
        check_order(order)?;
        let mut m = CMat::zeros(order, order);
        for (k, &c) in coords.iter().enumerate().take(Self::dimension(order)) {
            if c != 0.0 {
                m += basis_matrix(order, k) * C64::new(c, 0.0);
            }
        }
        Ok(Self { m })
    }

    /// The `k`-th basis element: diagonal `E_ii − E_nn` first, then the real
    /// and imaginary off-diagonal pairs.
    pub fn basis_element(order: usize, k: usize) -> Self {
        Self {
            m: basis_matrix(order, k),
        }
    }

    pub fn order(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }
}

fn basis_matrix(order: usize, k: usize) -> CMat {
    let mut m = CMat::zeros(order, order);
    let last = order - 1;
    if k < last {
        m[(k, k)] = C64::new(1.0, 0.0);
        m[(last, last)] = C64::new(-1.0, 0.0);
        return m;
    }
    let mut idx = k - last;
    for i in 0..order {
        for j in (i + 1)..order {
            if idx == 0 {
                m[(i, j)] = C64::new(1.0, 0.0);
                m[(j, i)] = C64::new(1.0, 0.0);
                return m;
            }
            if idx == 1 {
                m[(i, j)] = C64::new(0.0, 1.0);
                m[(j, i)] = C64::new(0.0, -1.0);
                return m;
            }
            idx -= 2;
        }
    }
    panic!("basis index {k} out of range for order {order}");
}

/// `exp(S) / tr exp(S)`, a positive definite trace-one matrix.
pub fn exp_normalize(s: &TracelessHermitian) -> Result<HermitianPoint, MatError> {
    exp_normalize_capped(s, DEFAULT_EXP_CAP)
}

/// [`exp_normalize`] with an explicit cap on the spectral spread of `S`.
pub fn exp_normalize_capped(s: &TracelessHermitian, cap: f64) -> Result<HermitianPoint, MatError> {
    let (ev, vecs) = hermitian_eigen(s.matrix());
    let lo = ev[0];
    let hi = *ev.last().unwrap();
    if !(hi - lo).is_finite() || hi - lo > cap {
        return Err(MatError::ExpOverflow(hi - lo, cap));
    }
    let weights: Vec<f64> = ev.iter().map(|&v| (v - hi).exp()).collect();
    let total: f64 = weights.iter().sum();
    let n = s.order();
    let diag = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(weights[i] / total, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let m = hermitize(&(&vecs * diag * vecs.adjoint()));
    Ok(HermitianPoint { m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn vec_of(parts: &[(f64, f64)]) -> CVec {
        CVec::from_iterator(parts.len(), parts.iter().map(|&(r, i)| c(r, i)))
    }

    #[test]
    fn inner_of_identity_is_twice_the_order() {
        let i3 = CMat::identity(3, 3);
        assert_eq!(hm_inner(&i3, &i3).unwrap(), 6.0);
    }

    #[test]
    fn inner_rejects_order_mismatch() {
        let a = CMat::identity(2, 2);
        let b = CMat::identity(3, 3);
        assert_eq!(hm_inner(&a, &b), Err(MatError::OrderMismatch(2, 3)));
    }

    #[test]
    fn rank_one_idempotent_inner_products() {
        let a = point_from_homogeneous(&vec_of(&[(0.3, -1.0), (2.0, 0.5), (0.0, 1.0)])).unwrap();
        let i3 = CMat::identity(3, 3);
        assert!((hm_inner(a.matrix(), a.matrix()).unwrap() - 2.0).abs() < 1e-12);
        assert!((hm_inner(a.matrix(), &i3).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_examples() {
        let a = point_from_homogeneous(&vec_of(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)])).unwrap();
        assert_eq!(a, HermitianPoint::diagonal(&[1.0, 0.0, 0.0]).unwrap());

        let half = point_from_homogeneous(&vec_of(&[(1.0, 0.0), (1.0, 0.0)])).unwrap();
        for v in half.matrix().iter() {
            assert!((v - c(0.5, 0.0)).norm() < 1e-15);
        }

        let scaled = point_from_homogeneous(&vec_of(&[(0.0, 2.0), (0.0, 0.0), (0.0, 0.0)])).unwrap();
        assert!((scaled.matrix() - a.matrix()).norm() < 1e-15);

        let zero = vec_of(&[(0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(point_from_homogeneous(&zero), Err(MatError::ZeroVector));
    }

    #[test]
    fn projectivity_examples() {
        let z = vec_of(&[(0.7, 0.2), (-1.0, 0.4), (0.3, 0.9)]);
        let center = HermitianPoint::center(3).unwrap();
        let same = apply_projectivity(&center, &z).unwrap();
        let direct = point_from_homogeneous(&z).unwrap();
        assert!((same.matrix() - direct.matrix()).norm() < 1e-14);

        let p0 = HermitianPoint::diagonal(&[1.0, 0.0, 0.0]).unwrap();
        let img = apply_projectivity(&p0, &z).unwrap();
        assert!((img.matrix() - p0.matrix()).norm() < 1e-14);

        let eps = 0.1;
        let pe = HermitianPoint::diagonal(&[1.0 / (1.0 + eps), eps / (1.0 + eps), 0.0]).unwrap();
        let img = apply_projectivity(&pe, &z).unwrap();
        for k in 0..3 {
            assert!(img.matrix()[(2, k)].norm() < 1e-15);
            assert!(img.matrix()[(k, 2)].norm() < 1e-15);
        }

        let in_kernel = vec_of(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(apply_projectivity(&pe, &in_kernel), Err(MatError::KernelHit));
        let zero = vec_of(&[(0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(apply_projectivity(&pe, &zero), Err(MatError::ZeroVector));
    }

    #[test]
    fn projectivity_requires_psd() {
        let bad = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0, 0.0), c(-1.0, 0.0)]));
        let bad = HermitianPoint::new(bad).unwrap();
        let z = vec_of(&[(1.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(apply_projectivity(&bad, &z), Err(MatError::NotPsd(_))));
    }

    #[test]
    fn hull_examples() {
        let center = HermitianPoint::center(4).unwrap();
        assert_eq!(hull_classify(&center, DEFAULT_RANK_TOL), HullClassification::Interior);

        let a = point_from_homogeneous(&vec_of(&[(1.0, 1.0), (0.5, 0.0), (0.0, -2.0)])).unwrap();
        assert_eq!(
            hull_classify(&a, DEFAULT_RANK_TOL),
            HullClassification::Boundary { rank: 1 }
        );

        let outside = HermitianPoint::diagonal(&[2.0, -1.0, 0.0]).unwrap();
        assert_eq!(hull_classify(&outside, DEFAULT_RANK_TOL), HullClassification::NotInHull);
    }

    #[test]
    fn point_validation() {
        let non_herm = CMat::from_row_slice(2, 2, &[c(0.5, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(HermitianPoint::new(non_herm), Err(MatError::NotHermitian(_))));
        assert!(matches!(
            HermitianPoint::diagonal(&[0.5, 0.6]),
            Err(MatError::BadTrace(_, _))
        ));
        assert_eq!(HermitianPoint::center(1), Err(MatError::OrderOutOfRange(1)));
        assert_eq!(HermitianPoint::center(65), Err(MatError::OrderOutOfRange(65)));
    }

    #[test]
    fn exp_normalize_examples() {
        let zero = TracelessHermitian::zero(3).unwrap();
        let p = exp_normalize(&zero).unwrap();
        assert!((p.matrix() - HermitianPoint::center(3).unwrap().matrix()).norm() < 1e-15);

        let s = 0.8_f64;
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(s, 0.0), c(-s, 0.0)]));
        let p = exp_normalize(&TracelessHermitian::new(m).unwrap()).unwrap();
        let total = s.exp() + (-s).exp();
        assert!((p.matrix()[(0, 0)].re - s.exp() / total).abs() < 1e-15);
        assert!((p.matrix()[(1, 1)].re - (-s).exp() / total).abs() < 1e-15);

        let big = CMat::from_diagonal(&CVec::from_vec(vec![c(300.0, 0.0), c(-300.0, 0.0)]));
        assert!(matches!(
            exp_normalize(&TracelessHermitian::new(big).unwrap()),
            Err(MatError::ExpOverflow(_, _))
        ));
    }

    #[test]
    fn exp_normalize_ignores_scalar_shift() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                c(0.3, 0.0),
                c(0.1, 0.2),
                c(0.0, -0.4),
                c(0.1, -0.2),
                c(-0.5, 0.0),
                c(0.25, 0.0),
                c(0.0, 0.4),
                c(0.25, 0.0),
                c(0.9, 0.0),
            ],
        );
        let shifted = &m + CMat::identity(3, 3) * c(3.7, 0.0);
        let a = exp_normalize(&TracelessHermitian::project(&m).unwrap()).unwrap();
        let b = exp_normalize(&TracelessHermitian::project(&shifted).unwrap()).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-13);
    }

    #[test]
    fn basis_spans_traceless_hermitian() {
        for order in 2..6 {
            let dim = TracelessHermitian::dimension(order);
            let mut gram = nalgebra::DMatrix::<f64>::zeros(dim, dim);
            for i in 0..dim {
                let bi = TracelessHermitian::basis_element(order, i);
                assert!(TracelessHermitian::new(bi.matrix().clone()).is_ok());
                for j in 0..dim {
                    let bj = TracelessHermitian::basis_element(order, j);
                    gram[(i, j)] =
                        hm_norm_sq(&(bi.matrix() + bj.matrix())) - hm_norm_sq(bi.matrix()) - hm_norm_sq(bj.matrix());
                }
            }
            assert_eq!(gram.rank(1e-10), dim);
        }
    }

    fn arb_vec(len: usize) -> impl Strategy<Value = CVec> {
        proptest::collection::vec((-2.0..2.0_f64, -2.0..2.0_f64), len)
            .prop_filter("nonzero", |v| v.iter().any(|&(r, i)| r.abs() + i.abs() > 0.1))
            .prop_map(|v| vec_of(&v))
    }

    fn unitary_from(coords: &[f64], order: usize) -> CMat {
        let h = TracelessHermitian::from_coords(order, coords).unwrap();
        let (ev, vecs) = hermitian_eigen(h.matrix());
        let d = CMat::from_fn(order, order, |i, j| {
            if i == j {
                C64::from_polar(1.0, ev[i])
            } else {
                c(0.0, 0.0)
            }
        });
        &vecs * d * vecs.adjoint()
    }

    proptest! {
        #[test]
        fn idempotent_identities(z in arb_vec(4)) {
            let a = point_from_homogeneous(&z).unwrap();
            let m = a.matrix();
            let i4 = CMat::identity(4, 4);
            prop_assert!((m * m - m).norm() < 1e-10);
            prop_assert!((hm_inner(m, m).unwrap() - 2.0).abs() < 1e-10);
            prop_assert!((hm_inner(m, &i4).unwrap() - 2.0).abs() < 1e-10);
            let centered = m - HermitianPoint::center(4).unwrap().matrix();
            prop_assert!((hm_norm_sq(&centered) - 2.0 * 3.0 / 4.0).abs() < 1e-10);
        }

        #[test]
        fn projectivities_compose(z in arb_vec(3), p in arb_vec(3), q in arb_vec(3)) {
            // positive definite matrices built from Gram forms to stay away from kernels
            let pm = conj_outer(&p) + CMat::identity(3, 3) * c(0.5, 0.0);
            let qm = conj_outer(&q) + CMat::identity(3, 3) * c(0.5, 0.0);
            let pp = HermitianPoint::new(&pm * c(1.0 / pm.trace().re, 0.0)).unwrap();
            let qq = HermitianPoint::new(&qm * c(1.0 / qm.trace().re, 0.0)).unwrap();
            let inner = row_times(&z, pp.matrix());
            let two_step = apply_projectivity(&qq, &inner).unwrap();
            let composed = apply_matrix(&(pp.matrix() * qq.matrix()), &z).unwrap();
            prop_assert!((two_step.matrix() - composed.matrix()).norm() < 1e-10);
        }

        #[test]
        fn hull_classification_is_unitarily_invariant(
            diag in proptest::collection::vec(0.0..1.0_f64, 3),
            coords in proptest::collection::vec(-3.0..3.0_f64, 8),
            zero_last in any::<bool>(),
        ) {
            let mut d = diag.clone();
            if zero_last { d[2] = 0.0; }
            let total: f64 = d.iter().sum();
            prop_assume!(total > 1e-3);
            let d: Vec<f64> = d.iter().map(|v| v / total).collect();
            let a = HermitianPoint::diagonal(&d).unwrap();
            let u = unitary_from(&coords, 3);
            let b = a.conjugate_by(&u);
            prop_assert_eq!(hull_classify(&a, 1e-9), hull_classify(&b, 1e-9));
        }

        #[test]
        fn exp_normalize_preserves_eigen_order(coords in proptest::collection::vec(-2.0..2.0_f64, 8)) {
            let s = TracelessHermitian::from_coords(3, &coords).unwrap();
            let p = exp_normalize(&s).unwrap();
            let (sv, svecs) = hermitian_eigen(s.matrix());
            prop_assert!((p.matrix().trace().re - 1.0).abs() < 1e-12);
            prop_assert_eq!(hull_classify(&p, 1e-9), HullClassification::Interior);
            // P v = e^{s}/Z v on each eigenvector of S
            let z: f64 = sv.iter().map(|v| v.exp()).sum();
            for (k, s_k) in sv.iter().enumerate() {
                let v = svecs.column(k).into_owned();
                let pv = p.matrix() * &v;
                prop_assert!((pv - v * c(s_k.exp() / z, 0.0)).norm() < 1e-10);
            }
        }
    }
}
