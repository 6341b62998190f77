//! Discrete Laplace–Beltrami spectrum on closed triangle meshes.
//!
//! Stiffness is the cotangent matrix built from per-triangle edge lengths, so
//! meshes with periodic identifications (flat tori) need no embedding. Mass is
//! lumped: a third of each triangle's area goes to each corner, scaled by the
//! vertex density of a conformal metric. The first nonzero eigenvalue of
//! `Kx = λMx` comes from shift-invert subspace iteration on
//! `M^{-1/2} K M^{-1/2}` with the constants deflated, each inner solve done by
//! preconditioned conjugate gradients.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::balance::{self, BalanceError, MeasureSpec};
use crate::bounds::{self, BoundsError};
use crate::curve::{self, CurveAtlas, CurveError};
use crate::matspace::{conj_outer, hm_norm_sq};
use crate::quad::{self, pairwise_sum, QuadError, QuadratureGrid};
use crate::{CMat, C64};

pub const MAX_ICOSPHERE_LEVEL: usize = 7;
pub const MIN_TORUS_GRID: usize = 8;

/// Floor applied to vertex densities.
pub const DENSITY_FLOOR: f64 = 1e-14;

/// Relative slack allowed between a discrete product and a bound.
pub const DEFAULT_MARGIN: f64 = 0.02;

/// Triangles with `area < ASPECT_GUARD · (longest edge)²` are rejected.
const ASPECT_GUARD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("icosphere level {0} outside [0, {MAX_ICOSPHERE_LEVEL}]")]
    LevelOutOfRange(usize),
    #[error("lattice basis is degenerate")]
    DegenerateBasis,
    #[error("torus grid {0} below {MIN_TORUS_GRID}")]
    GridTooSmall(usize),
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("triangle {0} references a missing vertex")]
    BadIndex(usize),
    #[error("edge ({0}, {1}) is not shared by exactly two consistently oriented triangles")]
    BadEdge(usize, usize),
    #[error("triangle {0} is degenerate")]
    DegenerateTriangle(usize),
    #[error("density has {found} entries for {expected} vertices")]
    DensityLength { expected: usize, found: usize },
    #[error("density at vertex {vertex} is {value}")]
    BadDensity { vertex: usize, value: f64 },
    #[error("eigensolver did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("conjugate gradients did not converge in {0} iterations")]
    CgNoConvergence(usize),
    #[error("weight a = {0} outside [0, 1/2]")]
    WeightOutOfRange(f64),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Closed oriented triangle mesh with intrinsic edge lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    /// `lengths[t][k]`: length of the edge of triangle `t` opposite corner `k`.
    lengths: Vec<[f64; 3]>,
    density: Option<Vec<f64>>,
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Heron's formula in Kahan's stable arrangement.
fn triangle_area(l: &[f64; 3]) -> f64 {
    let mut s = *l;
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * p.max(0.0).sqrt()
}

impl TriangleMesh {
    /// Mesh with edge lengths taken from the vertex coordinates.
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self, SpectralError> {
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(SpectralError::BadIndex(t));
            }
        }
        let lengths = triangles
            .iter()
            .map(|&[i, j, k]| {
                [
                    dist(&vertices[j], &vertices[k]),
                    dist(&vertices[k], &vertices[i]),
                    dist(&vertices[i], &vertices[j]),
                ]
            })
            .collect();
        Self::with_lengths(vertices, triangles, lengths)
    }

    /// Mesh with explicit intrinsic lengths.
    pub fn with_lengths(
        vertices: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
        lengths: Vec<[f64; 3]>,
    ) -> Result<Self, SpectralError> {
        let mesh = Self {
            vertices,
            triangles,
            lengths,
            density: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Attaches a per-vertex conformal factor; values below [`DENSITY_FLOOR`] are raised to it.
    pub fn with_density(mut self, density: Vec<f64>) -> Result<Self, SpectralError> {
        if density.len() != self.vertices.len() {
            return Err(SpectralError::DensityLength {
                expected: self.vertices.len(),
                found: density.len(),
            });
        }
        let mut out = Vec::with_capacity(density.len());
        for (vertex, &value) in density.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(SpectralError::BadDensity { vertex, value });
            }
            out.push(value.max(DENSITY_FLOOR));
        }
        self.density = Some(out);
        Ok(self)
    }

    fn validate(&self) -> Result<(), SpectralError> {
        if self.triangles.is_empty() {
            return Err(SpectralError::EmptyMesh);
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= self.vertices.len()) {
                return Err(SpectralError::BadIndex(t));
            }
            let l = &self.lengths[t];
            let longest = l.iter().cloned().fold(0.0, f64::max);
            if !(triangle_area(l) > ASPECT_GUARD * longest * longest) {
                return Err(SpectralError::DegenerateTriangle(t));
            }
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        for (&(i, j), &count) in &directed {
            if count != 1 || directed.get(&(j, i)) != Some(&1) {
                return Err(SpectralError::BadEdge(i, j));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn density(&self) -> Option<&[f64]> {
        self.density.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Area of the underlying flat triangles (without density).
    pub fn flat_area(&self) -> f64 {
        let areas: Vec<f64> = self.lengths.iter().map(triangle_area).collect();
        pairwise_sum(&areas)
    }

    /// Lumped mass per vertex, density included.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.vertices.len()];
        for (tri, l) in self.triangles.iter().zip(&self.lengths) {
            let third = triangle_area(l) / 3.0;
            for &v in tri {
                mass[v] += third;
            }
        }
        if let Some(rho) = &self.density {
            for (m, r) in mass.iter_mut().zip(rho) {
                *m *= r;
            }
        }
        mass
    }

    /// Cotangent stiffness matrix.
    pub fn stiffness(&self) -> CsrMatrix<f64> {
        let n = self.vertices.len();
        let entries: Vec<[(usize, usize, f64); 3]> = self
            .triangles
            .par_iter()
            .zip(self.lengths.par_iter())
            .map(|(tri, l)| {
                let area = triangle_area(l);
                let sq = [l[0] * l[0], l[1] * l[1], l[2] * l[2]];
                // weight on the edge opposite corner k: cot(angle at k)/2
                std::array::from_fn(|k| {
                    let cot = (sq[(k + 1) % 3] + sq[(k + 2) % 3] - sq[k]) / (4.0 * area);
                    (tri[(k + 1) % 3], tri[(k + 2) % 3], 0.5 * cot)
                })
            })
            .collect();
        let mut coo = CooMatrix::new(n, n);
        for tri in &entries {
            for &(i, j, w) in tri {
                coo.push(i, j, -w);
                coo.push(j, i, -w);
                coo.push(i, i, w);
                coo.push(j, j, w);
            }
        }
        CsrMatrix::from(&coo)
    }
}

/// Subdivided icosahedron on the unit sphere, `20·4^level` triangles.
pub fn build_icosphere(level: usize) -> Result<TriangleMesh, SpectralError> {
    if level > MAX_ICOSPHERE_LEVEL {
        return Err(SpectralError::LevelOutOfRange(level));
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut vertices: Vec<[f64; 3]> = raw.iter().map(normalized).collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |i: usize, j: usize, vertices: &mut Vec<[f64; 3]>| -> usize {
            let key = (i.min(j), i.max(j));
            *midpoints.entry(key).or_insert_with(|| {
                let (a, b) = (vertices[i], vertices[j]);
                vertices.push(normalized(&[a[0] + b[0], a[1] + b[1], a[2] + b[2]]));
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(4 * triangles.len());
        for &[a, b, c] in &triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    TriangleMesh::new(vertices, triangles)
}

fn normalized(v: &[f64; 3]) -> [f64; 3] {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / r, v[1] / r, v[2] / r]
}

/// Flat torus `R²/Λ` for the lattice spanned by `b1`, `b2`, triangulated on a
/// `grid × grid` subdivision of the fundamental parallelogram. The shorter
/// diagonal of each cell is used.
pub fn build_flat_torus(b1: [f64; 2], b2: [f64; 2], grid: usize) -> Result<TriangleMesh, SpectralError> {
    if grid < MIN_TORUS_GRID {
        return Err(SpectralError::GridTooSmall(grid));
    }
    let det = b1[0] * b2[1] - b1[1] * b2[0];
    let norm = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
    if !(det.abs() > 1e-12 * norm(b1) * norm(b2)) {
        return Err(SpectralError::DegenerateBasis);
    }
    let g = grid as f64;
    let l1 = norm(b1) / g;
    let l2 = norm(b2) / g;
    let lsum = norm([b1[0] + b2[0], b1[1] + b2[1]]) / g;
    let ldiff = norm([b2[0] - b1[0], b2[1] - b1[1]]) / g;
    let idx = |i: usize, j: usize| (i % grid) + (j % grid) * grid;
    let mut vertices = Vec::with_capacity(grid * grid);
    for j in 0..grid {
        for i in 0..grid {
            let (s, t) = (i as f64 / g, j as f64 / g);
            vertices.push([s * b1[0] + t * b2[0], s * b1[1] + t * b2[1], 0.0]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * grid * grid);
    let mut lengths = Vec::with_capacity(2 * grid * grid);
    for j in 0..grid {
        for i in 0..grid {
            if lsum <= ldiff {
                triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                lengths.push([l2, lsum, l1]);
                triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
                lengths.push([l1, l2, lsum]);
            } else {
                triangles.push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
                lengths.push([ldiff, l2, l1]);
                triangles.push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
                lengths.push([l1, ldiff, l2]);
            }
        }
    }
    TriangleMesh::with_lengths(vertices, triangles, lengths)
}

/// Exact first eigenvalue `4π²ℓ*²` of a flat torus, `ℓ*` the shortest dual-lattice vector.
pub fn flat_torus_lambda1(b1: [f64; 2], b2: [f64; 2]) -> f64 {
    let det = b1[0] * b2[1] - b1[1] * b2[0];
    let d1 = [b2[1] / det, -b2[0] / det];
    let d2 = [-b1[1] / det, b1[0] / det];
    let mut best = f64::INFINITY;
    for p in -6i32..=6 {
        for q in -6i32..=6 {
            if p == 0 && q == 0 {
                continue;
            }
            let v = [p as f64 * d1[0] + q as f64 * d2[0], p as f64 * d1[1] + q as f64 * d2[1]];
            best = best.min(v[0] * v[0] + v[1] * v[1]);
        }
    }
    4.0 * PI * PI * best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub lambda1: f64,
    pub area: f64,
    pub product: f64,
    pub mesh_size: usize,
    /// The smallest nonzero discrete eigenvalues, ascending.
    pub leading: Vec<f64>,
    pub outer_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions {
    pub block: usize,
    /// Eigenpairs that must meet the residual tolerance.
    pub wanted: usize,
    pub tol: f64,
    pub max_outer: usize,
    pub cg_tol: f64,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            block: 8,
            wanted: 6,
            tol: 1e-8,
            max_outer: 300,
            cg_tol: 1e-11,
            seed: 0x5eed_0002,
        }
    }
}

pub fn lambda1_area(mesh: &TriangleMesh) -> Result<SpectrumReport, SpectralError> {
    lambda1_area_with(mesh, &EigenOptions::default())
}

/// `M^{-1/2} K M^{-1/2}` for the mesh, with the square-root masses.
fn scaled_operator(mesh: &TriangleMesh) -> (CsrMatrix<f64>, Vec<f64>) {
    let k = mesh.stiffness();
    let mass = mesh.lumped_mass();
    let s: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    let mut a = k;
    let (offsets, cols, vals) = a.csr_data_mut();
    for row in 0..offsets.len() - 1 {
        for idx in offsets[row]..offsets[row + 1] {
            vals[idx] /= s[row] * s[cols[idx]];
        }
    }
    (a, s)
}

struct Deflated<'a> {
    op: &'a CsrMatrix<f64>,
    null: DVector<f64>,
    diag_inv: DVector<f64>,
}

impl Deflated<'_> {
    fn deflate(&self, v: &mut DVector<f64>) {
        let c = self.null.dot(v);
        v.axpy(-c, &self.null, 1.0);
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.op * v
    }

    /// Solves `Ax = b` on the complement of the null vector.
    fn solve(&self, b: &DVector<f64>, x0: DVector<f64>, tol: f64) -> Result<DVector<f64>, SpectralError> {
        let n = b.len();
        let max_iter = 20 * n + 100;
        let mut x = x0;
        self.deflate(&mut x);
        let mut r = b - self.apply(&x);
        self.deflate(&mut r);
        let target = tol * b.norm();
        if r.norm() <= target {
            return Ok(x);
        }
        let precondition = |r: &DVector<f64>| {
            let mut z = r.component_mul(&self.diag_inv);
            self.deflate(&mut z);
            z
        };
        let mut z = precondition(&r);
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        for _ in 0..max_iter {
            let ap = self.apply(&p);
            let alpha = rz / p.dot(&ap);
            x.axpy(alpha, &p, 1.0);
            r.axpy(-alpha, &ap, 1.0);
            self.deflate(&mut r);
            if r.norm() <= target {
                return Ok(x);
            }
            z = precondition(&r);
            let rz_next = r.dot(&z);
            p = &z + &p * (rz_next / rz);
            rz = rz_next;
        }
        Err(SpectralError::CgNoConvergence(max_iter))
    }
}

fn orthonormalize(deflated: &Deflated, y: &mut DMatrix<f64>) {
    for pass in 0..2 {
        for j in 0..y.ncols() {
            let mut v = y.column(j).into_owned();
            deflated.deflate(&mut v);
            for i in 0..j {
                let c = y.column(i).dot(&v);
                v.axpy(-c, &y.column(i).into_owned(), 1.0);
            }
            let norm = v.norm();
            if norm > 0.0 {
                v /= norm;
            }
            if pass == 1 || norm > 0.0 {
                y.set_column(j, &v);
            }
        }
    }
}

pub fn lambda1_area_with(mesh: &TriangleMesh, opts: &EigenOptions) -> Result<SpectrumReport, SpectralError> {
    let n = mesh.vertex_count();
    let (op, s) = scaled_operator(mesh);
    let area: f64 = pairwise_sum(&s.iter().map(|x| x * x).collect::<Vec<_>>());
    let null = DVector::from_vec(s.clone()) / area.sqrt();
    let mut diag = DVector::zeros(n);
    for (i, j, v) in op.triplet_iter() {
        if i == j {
            diag[i] = *v;
        }
    }
    let diag_inv = diag.map(|d: f64| if d > 0.0 { 1.0 / d } else { 0.0 });
    let deflated = Deflated {
        op: &op,
        null,
        diag_inv,
    };

    let block = opts.block.min(n.saturating_sub(1)).max(1);
    let wanted = opts.wanted.min(block);
    let mut rng = rand::rngs::StdRng::seed_from_u64(opts.seed);
    let mut y = DMatrix::from_fn(n, block, |_, _| rng.gen_range(-1.0..1.0));
    orthonormalize(&deflated, &mut y);
    let mut theta: Option<Vec<f64>> = None;

    for outer in 1..=opts.max_outer {
        let cols: Vec<DVector<f64>> = (0..block)
            .map(|j| {
                let b = y.column(j).into_owned();
                let x0 = match &theta {
                    Some(t) if t[j] > 0.0 => &b / t[j],
                    _ => DVector::zeros(n),
                };
                deflated.solve(&b, x0, opts.cg_tol)
            })
            .collect::<Result<_, _>>()?;
        let mut z = DMatrix::from_columns(&cols);
        orthonormalize(&deflated, &mut z);
        let az = &op * &z;
        let h = z.transpose() * &az;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vecs = DMatrix::from_columns(
            &order
                .iter()
                .map(|&k| eig.eigenvectors.column(k).into_owned())
                .collect::<Vec<_>>(),
        );
        y = &z * &vecs;
        let ay = &az * &vecs;
        let done = (0..wanted).all(|j| {
            let r = ay.column(j) - y.column(j) * vals[j];
            r.norm() <= opts.tol * vals[j].abs().max(f64::MIN_POSITIVE)
        });
        theta = Some(vals.clone());
        if done {
            let lambda1 = vals[0];
            return Ok(SpectrumReport {
                lambda1,
                area,
                product: lambda1 * area,
                mesh_size: n,
                leading: vals,
                outer_iterations: outer,
            });
        }
    }
    Err(SpectralError::NoConvergence(opts.max_outer))
}

/// Icosphere whose vertex densities give the induced metric of the curve
/// through stereographic coordinates: `ρ = e^{2θ}(1 + |w|²)²/4` relative to
/// the round unit sphere.
pub fn curve_density_mesh(atlas: &CurveAtlas, level: usize) -> Result<TriangleMesh, SpectralError> {
    let mesh = build_icosphere(level)?;
    let density = mesh
        .vertices()
        .par_iter()
        .map(|&x| {
            let (chart, w) = CurveAtlas::locate_sphere_point(x);
            let conf = curve::conformal_factor(atlas.chart(chart), w);
            (conf * (1.0 + w.norm_sqr()).powi(2) / 4.0).max(DENSITY_FLOOR)
        })
        .collect();
    mesh.with_density(density)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveBoundReport {
    pub curve: String,
    pub a: f64,
    pub n: usize,
    pub degree: usize,
    pub delta: f64,
    pub spectrum: SpectrumReport,
    /// Right-hand side at this `a`: `F(n, d, δ, a)`, or the energy ratio for a line.
    pub bound_at_a: f64,
    /// Right-hand side minimized over `a`.
    pub best_bound: f64,
    pub margin: f64,
    pub holds: bool,
    /// `λ₁`-Rayleigh quotient of the balanced test map, times area.
    pub rayleigh: Option<f64>,
    pub rayleigh_expected: Option<f64>,
    pub balance_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub grid: QuadratureGrid,
    pub balance_tol: f64,
    pub margin: f64,
    pub eigen: EigenOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            grid: QuadratureGrid::default(),
            balance_tol: balance::DEFAULT_TOL,
            margin: DEFAULT_MARGIN,
            eigen: EigenOptions::default(),
        }
    }
}

pub fn verify_bound_on_curve(atlas: &CurveAtlas, a: f64, mesh_level: usize) -> Result<CurveBoundReport, SpectralError> {
    verify_bound_on_curve_with(atlas, a, mesh_level, &VerifyOptions::default())
}

pub fn verify_bound_on_curve_with(
    atlas: &CurveAtlas,
    a: f64,
    mesh_level: usize,
    opts: &VerifyOptions,
) -> Result<CurveBoundReport, SpectralError> {
    if !(0.0..=0.5).contains(&a) {
        return Err(SpectralError::WeightOutOfRange(a));
    }
    let n = atlas.n();
    let d = atlas.degree();
    let delta = atlas.delta().max(0.0);
    let spectrum = lambda1_area_with(&curve_density_mesh(atlas, mesh_level)?, &opts.eigen)?;
    let bound_at_a = bounds::rayleigh_rhs(n, d, delta, a)?;
    let best_bound = if n >= 2 {
        bounds::minimize_bound(n, d, delta)?.value
    } else {
        bounds::rayleigh_rhs(n, d, delta, 0.0)?
    };
    let holds = spectrum.product <= bound_at_a * (1.0 + opts.margin);

    let (rayleigh, rayleigh_expected, balance_residual) = if n >= 2 && a >= 0.5 {
        (None, None, None)
    } else {
        let a_balance = if n == 1 { 0.0 } else { a };
        let bal = balance::balance_with(
            atlas,
            &MeasureSpec::induced(),
            a_balance,
            &balance::BalanceOptions {
                tol: opts.balance_tol,
                grid: opts.grid.clone(),
                ..balance::BalanceOptions::default()
            },
        )?;
        let projected = balance::project_curve(atlas, &bal.p)?;
        let r = balanced_rayleigh(atlas, &projected, a, &opts.grid)?;
        (Some(r), Some(bound_at_a), Some(bal.residual))
    };
    Ok(CurveBoundReport {
        curve: atlas.name.clone(),
        a,
        n,
        degree: d,
        delta,
        spectrum,
        bound_at_a,
        best_bound,
        margin: opts.margin,
        holds,
        rayleigh,
        rayleigh_expected,
        balance_residual,
    })
}

/// `Area · ∫|∇u|² / ∫|u|²` for `u = φ_a(zP) − I/(n+1)`, with the area and the
/// `L²` norm taken on the original curve.
pub fn balanced_rayleigh(
    atlas: &CurveAtlas,
    projected: &CurveAtlas,
    a: f64,
    grid: &QuadratureGrid,
) -> Result<f64, SpectralError> {
    let order = atlas.order();
    let center = CMat::identity(order, order) * C64::new(1.0 / order as f64, 0.0);
    let energy = quad::dirichlet_energy(projected, grid, a)?;
    let pairs: Vec<(f64, f64)> = quad::node_map(atlas, grid, |s| {
        let chart = projected.chart(s.node.chart);
        let z = chart.eval_z(s.node.w);
        let point = conj_outer(&z) * C64::new(1.0 / z.norm_squared(), 0.0);
        let b = curve::eval_gauss(chart, s.node.w)?;
        let u = point + b * C64::new(a, 0.0) - &center;
        let m = s.node.weight * s.jet.conf;
        Ok((m, m * hm_norm_sq(&u)))
    })?;
    let area = pairwise_sum(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let l2 = pairwise_sum(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(area * energy / l2)
}
