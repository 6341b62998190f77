//! Dense complex polynomials in one variable, ascending coefficients.

use nalgebra::linalg::Schur;
use serde::{Deserialize, Serialize};

use crate::{CMat, C64};

/// Relative size below which a coefficient or Taylor term counts as zero.
pub const VANISH_TOL: f64 = 1e-8;

const CLUSTER_RADIUS: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl Poly {
    /// Trailing zero coefficients are dropped.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    /// `c · xᵏ`.
    pub fn monomial(c: C64, k: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc.max(c.norm()))
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// Value and first two derivatives by nested Horner.
    pub fn eval_jet(&self, x: C64) -> [C64; 3] {
        let zero = C64::new(0.0, 0.0);
        let (mut p, mut d1, mut d2) = (zero, zero, zero);
        for &c in self.coeffs.iter().rev() {
            d2 = d2 * x + d1 * 2.0;
            d1 = d1 * x + p;
            p = p * x + c;
        }
        [p, d1, d2]
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// `k`-th derivative.
    pub fn nth_derivative(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = C64::new(0.0, 0.0);
        Self::new(
            (0..len)
                .map(|k| self.coeffs.get(k).copied().unwrap_or(zero) - other.coeffs.get(k).copied().unwrap_or(zero))
                .collect(),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// `p(x + c)` coefficients, i.e. the Taylor expansion at `c`.
    pub fn taylor_at(&self, c: C64) -> Vec<C64> {
        let mut t = self.coeffs.clone();
        let n = t.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let upper = t[j + 1];
                t[j] += c * upper;
            }
        }
        t
    }

    /// Quotient by `(x − r)`, discarding the remainder.
    pub fn deflate(&self, r: C64) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return Self::zero();
        }
        let mut q = vec![C64::new(0.0, 0.0); n - 1];
        let mut carry = C64::new(0.0, 0.0);
        for k in (1..n).rev() {
            carry = self.coeffs[k] + carry * r;
            q[k - 1] = carry;
        }
        Self::new(q)
    }

    /// `uᵈ p(1/u)` for `d ≥ deg p`.
    pub fn reversed(&self, d: usize) -> Self {
        let mut out = vec![C64::new(0.0, 0.0); d + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            out[d - k] = c;
        }
        Self::new(out)
    }

    /// Drops coefficients below `tol` times the largest one.
    pub fn trimmed(&self, tol: f64) -> Self {
        let top = self.max_abs_coeff();
        let mut coeffs = self.coeffs.clone();
        while coeffs.last().is_some_and(|c| c.norm() <= tol * top) {
            coeffs.pop();
        }
        Self::new(coeffs)
    }

    /// Order of vanishing at `r`: leading Taylor terms below `tol` relative to
    /// the largest Taylor term.
    pub fn vanishing_order(&self, r: C64, tol: f64) -> usize {
        let t = self.taylor_at(r);
        let top = t.iter().fold(0.0_f64, |acc, c| acc.max(c.norm()));
        if top == 0.0 {
            return usize::MAX;
        }
        t.iter().take_while(|c| c.norm() <= tol * top).count()
    }

    /// All complex roots (with repetition) from the companion matrix, polished
    /// by a few Newton steps.
    pub fn roots(&self) -> Vec<C64> {
        let p = self.trimmed(1e-14);
        let Some(deg) = p.degree() else { return Vec::new() };
        if deg == 0 {
            return Vec::new();
        }
        let lead = p.coeffs[deg];
        let mut comp = CMat::zeros(deg, deg);
        for k in 0..deg {
            comp[(k, deg - 1)] = -p.coeffs[k] / lead;
            if k + 1 < deg {
                comp[(k + 1, k)] = C64::new(1.0, 0.0);
            }
        }
        let eig = Schur::try_new(comp, f64::EPSILON, 10_000)
            .and_then(|s| s.eigenvalues())
            .map(|v| v.iter().copied().collect::<Vec<_>>())
            .unwrap_or_default();
        let dp = p.derivative();
        eig.into_iter()
            .map(|mut r| {
                for _ in 0..3 {
                    let d = dp.eval(r);
                    if d.norm() == 0.0 {
                        break;
                    }
                    let step = p.eval(r) / d;
                    if !step.re.is_finite() || !step.im.is_finite() || step.norm() > 1e-3 * (1.0 + r.norm()) {
                        break;
                    }
                    r -= step;
                }
                r
            })
            .collect()
    }
}

/// Common roots of a family of polynomials with their multiplicity, i.e. the
/// minimum vanishing order across the family. Zero polynomials are ignored.
pub fn common_roots(polys: &[Poly]) -> Vec<(C64, usize)> {
    let live: Vec<Poly> = polys
        .iter()
        .map(|p| p.trimmed(1e-14))
        .filter(|p| !p.is_zero())
        .collect();
    let Some(pivot) = live.iter().min_by_key(|p| p.degree().unwrap_or(0)) else {
        return Vec::new();
    };
    let mut found: Vec<(C64, usize)> = Vec::new();
    for center in cluster(&pivot.roots()) {
        let center = snap(center);
        let order = live
            .iter()
            .map(|p| p.vanishing_order(center, VANISH_TOL))
            .min()
            .unwrap_or(0);
        if order > 0 && order != usize::MAX {
            found.push((center, order));
        }
    }
    found
}

fn cluster(roots: &[C64]) -> Vec<C64> {
    let mut groups: Vec<Vec<C64>> = Vec::new();
    for &r in roots {
        match groups
            .iter_mut()
            .find(|g| (g[0] - r).norm() <= CLUSTER_RADIUS * (1.0 + r.norm()))
        {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    groups
        .into_iter()
        .map(|g| g.iter().sum::<C64>() / g.len() as f64)
        .collect()
}

fn snap(z: C64) -> C64 {
    let clean = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
    C64::new(clean(z.re), clean(z.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn re(v: &[f64]) -> Poly {
        Poly::new(v.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    #[test]
    fn jet_matches_derivatives() {
        let p = Poly::new(vec![
            C64::new(1.0, 2.0),
            C64::new(-0.5, 0.0),
            C64::new(0.0, 3.0),
            C64::new(2.0, -1.0),
        ]);
        let x = C64::new(0.3, -0.7);
        let [v, d1, d2] = p.eval_jet(x);
        assert!((v - p.eval(x)).norm() < 1e-14);
        assert!((d1 - p.derivative().eval(x)).norm() < 1e-14);
        assert!((d2 - p.nth_derivative(2).eval(x)).norm() < 1e-14);
    }

    #[test]
    fn reversed_homogenizes() {
        let p = re(&[1.0, 2.0]);
        assert_eq!(p.reversed(3), re(&[0.0, 0.0, 2.0, 1.0]));
    }

    #[test]
    fn common_roots_of_branched_derivatives() {
        // z' = (0, 2w) and (0, 3w²): only the nonzero components matter
        let r = common_roots(&[Poly::zero(), re(&[0.0, 2.0])]);
        assert_eq!(r, vec![(C64::new(0.0, 0.0), 1)]);
        let r = common_roots(&[re(&[0.0, 0.0, 3.0])]);
        assert_eq!(r, vec![(C64::new(0.0, 0.0), 2)]);
        let r = common_roots(&[re(&[0.0, 2.0]), re(&[0.0, 0.0, 3.0])]);
        assert_eq!(r, vec![(C64::new(0.0, 0.0), 1)]);
        assert!(common_roots(&[re(&[1.0])]).is_empty());
    }

    #[test]
    fn common_roots_off_origin() {
        // (w − 1)² (w + 2) and (w − 1)³
        let a = re(&[-1.0, 1.0]).mul(&re(&[-1.0, 1.0])).mul(&re(&[2.0, 1.0]));
        let b = re(&[-1.0, 1.0]).mul(&re(&[-1.0, 1.0])).mul(&re(&[-1.0, 1.0]));
        let r = common_roots(&[a, b]);
        assert_eq!(r.len(), 1);
        assert!((r[0].0 - C64::new(1.0, 0.0)).norm() < 1e-6);
        assert_eq!(r[0].1, 2);
    }

    proptest! {
        #[test]
        fn deflate_then_multiply_roundtrips(coeffs in proptest::collection::vec((-3.0..3.0_f64, -3.0..3.0_f64), 1..6),
                                            r in (-2.0..2.0_f64, -2.0..2.0_f64)) {
            let p = Poly::new(coeffs.iter().map(|&(a, b)| C64::new(a, b)).collect());
            let root = C64::new(r.0, r.1);
            let lin = Poly::new(vec![-root, C64::new(1.0, 0.0)]);
            let q = p.mul(&lin);
            let back = q.deflate(root).mul(&lin);
            for (x, y) in back.coeffs().iter().zip(q.coeffs()) {
                prop_assert!((x - y).norm() < 1e-9 * (1.0 + q.max_abs_coeff()));
            }
        }

        #[test]
        fn taylor_shift_evaluates(coeffs in proptest::collection::vec((-3.0..3.0_f64, -3.0..3.0_f64), 1..6),
                                  c in (-1.0..1.0_f64, -1.0..1.0_f64), h in (-1.0..1.0_f64, -1.0..1.0_f64)) {
            let p = Poly::new(coeffs.iter().map(|&(a, b)| C64::new(a, b)).collect());
            let c = C64::new(c.0, c.1);
            let h = C64::new(h.0, h.1);
            let shifted = Poly::new(p.taylor_at(c));
            prop_assert!((shifted.eval(h) - p.eval(c + h)).norm() < 1e-10 * (1.0 + p.max_abs_coeff()) * 10.0);
        }
    }
}
