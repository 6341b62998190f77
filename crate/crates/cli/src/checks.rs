//! Identity checks run by `verify-curve`.

use std::f64::consts::PI;

use eigenbound::balance::{self, BalanceOptions, MeasureSpec};
use eigenbound::curve::CurveAtlas;
use eigenbound::quad::{self, QuadratureGrid};

use crate::Failure;

const INTEGRAL_TOL: f64 = 1e-5;
const ENERGY_TOL: f64 = 1e-6;
const RADIUS_TOL: f64 = 1e-8;
const RADIUS_SAMPLES: usize = 256;
const ENERGY_WEIGHTS: [f64; 5] = [0.0, 0.1, 0.25, 0.49, 0.5];

pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub error: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    /// Relative error against `max(|expected|, scale)`.
    fn relative(name: impl Into<String>, measured: f64, expected: f64, scale: f64, tol: f64) -> Self {
        let error = (measured - expected).abs() / expected.abs().max(scale);
        Self::new(name, measured, expected, error, tol)
    }

    fn new(name: impl Into<String>, measured: f64, expected: f64, error: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected,
            error,
            tol,
            passed: error.is_finite() && error < tol,
        }
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

fn q<T>(r: Result<T, quad::QuadError>) -> Result<T, Failure> {
    r.map_err(|e| Failure::from(eigenbound::Error::from(e)))
}

pub fn run_all(atlas: &CurveAtlas, grid: &QuadratureGrid, a: f64, tol: f64) -> Result<Vec<Check>, Failure> {
    let d = atlas.degree() as f64;
    let b = atlas.total_branching() as f64;
    let scale = 4.0 * PI;
    let mut out = vec![
        Check::relative("area", q(quad::area(atlas, grid))?, 4.0 * PI * d, scale, INTEGRAL_TOL),
        Check::relative(
            "total_curvature",
            q(quad::total_curvature(atlas, grid))?,
            2.0 * PI * (2.0 + b),
            scale,
            INTEGRAL_TOL,
        ),
        Check::relative(
            "total_sigma_sq",
            q(quad::total_sigma_sq(atlas, grid))?,
            8.0 * PI * (d - 1.0 - b / 2.0),
            scale,
            INTEGRAL_TOL,
        ),
    ];
    for &w in &ENERGY_WEIGHTS {
        let e = q(quad::energy(atlas, grid, w))?;
        out.push(Check::relative(
            format!("energy[a={w}]"),
            e.numeric_energy,
            e.closed_form,
            scale,
            ENERGY_TOL,
        ));
        let direct = q(quad::dirichlet_energy(atlas, grid, w))?;
        out.push(Check::relative(
            format!("dirichlet_energy[a={w}]"),
            direct,
            e.closed_form,
            scale,
            ENERGY_TOL,
        ));
    }
    for &w in &[0.0, 0.25, 0.5] {
        let dev = q(quad::sphere_radius_check(atlas, w, RADIUS_SAMPLES))?;
        out.push(Check::new(format!("sphere_radius[a={w}]"), dev, 0.0, dev, RADIUS_TOL));
    }
    let opts = BalanceOptions {
        tol,
        grid: grid.clone(),
        ..BalanceOptions::default()
    };
    match balance::balance_with(atlas, &MeasureSpec::induced(), a, &opts) {
        Ok(res) => out.push(Check::new(
            format!("balance[a={a}]"),
            res.residual,
            0.0,
            res.residual,
            tol,
        )),
        Err(balance::BalanceError::NotConverged { residual, .. }) => {
            out.push(Check::new(format!("balance[a={a}]"), residual, 0.0, residual, tol))
        }
        Err(e) => return Err(Failure::from(eigenbound::Error::from(e))),
    }
    Ok(out)
}
