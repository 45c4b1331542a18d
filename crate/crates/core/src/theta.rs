//! Riemann theta function `Θ(z; τ) = Σ_n exp(iπ nᵀτn + 2iπ nᵀz)` by truncated lattice sums.
//!
//! Arguments are first reduced so that `(Im τ)⁻¹ Im z` lies in `[−½, ½]^g` and `Re z` in
//! `[−½, ½)^g`; the sum then runs over a fixed ellipsoid of lattice points whose radius
//! is chosen from a Gaussian tail bound so that the omitted part is below `ε`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use statrs::function::gamma::{gamma, gamma_ui};

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const MAX_LATTICE_POINTS: usize = 10_000_000;

#[derive(Clone, Debug)]
pub struct ThetaContext {
    genus: usize,
    tau: DMatrix<C64>,
    im_tau: DMatrix<f64>,
    im_tau_inv: DMatrix<f64>,
    rho: f64,
    epsilon: f64,
    tail_bound: f64,
    /// Flattened lattice points, `genus` coordinates each.
    points: Vec<f64>,
    /// `iπ nᵀτn` per point.
    quad: Vec<C64>,
    /// `exp(iπ nᵀτn)` per point.
    weight: Vec<C64>,
    /// Largest `|n_k|` over the points, per coordinate.
    half: Vec<usize>,
    /// `n_k + half_k` per point, flattened like `points`.
    offsets: Vec<usize>,
}

/// `Θ(z) = exp(log_prefactor) · reduced`.
#[derive(Clone, Copy, Debug)]
pub struct ThetaValue {
    pub log_prefactor: C64,
    pub reduced: C64,
    /// Sum of the moduli of all terms of the reduced sum.
    pub abs_sum: f64,
}

impl ThetaValue {
    pub fn value(&self) -> C64 {
        self.log_prefactor.exp() * self.reduced
    }

    /// `|reduced| / abs_sum`, a cancellation-aware size in `[0, 1]`.
    pub fn relative_size(&self) -> f64 {
        if self.abs_sum > 0.0 {
            self.reduced.norm() / self.abs_sum
        } else {
            0.0
        }
    }
}

/// Reduced argument of `Θ` with the lattice shift applied.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub reduced: DVector<C64>,
    pub log_prefactor: C64,
    pub lambda: DVector<f64>,
    pub mu: DVector<f64>,
}

/// Truncation data reported with each evaluation.
#[derive(Clone, Copy, Debug)]
pub struct TruncationCertificate {
    pub radius: f64,
    pub lattice_points: usize,
    pub tail_bound: f64,
    pub epsilon: f64,
}

impl ThetaContext {
    pub fn new(tau: &DMatrix<C64>) -> Result<Self> {
        ThetaContext::with_epsilon(tau, DEFAULT_EPSILON)
    }

    pub fn with_epsilon(tau: &DMatrix<C64>, epsilon: f64) -> Result<Self> {
        let (im, inv, shortest, delta) = prepare(tau)?;
        let g = tau.nrows();
        let rho = choose_radius(g, shortest, delta, epsilon);
        ThetaContext::build(tau, im, inv, rho, epsilon, shortest, delta)
    }

    /// Context with an explicit radius in the `Im τ` norm.
    pub fn with_radius(tau: &DMatrix<C64>, rho: f64) -> Result<Self> {
        let (im, inv, shortest, delta) = prepare(tau)?;
        ThetaContext::build(tau, im, inv, rho, f64::NAN, shortest, delta)
    }

    fn build(
        tau: &DMatrix<C64>,
        im: DMatrix<f64>,
        inv: DMatrix<f64>,
        rho: f64,
        epsilon: f64,
        shortest: f64,
        delta: f64,
    ) -> Result<Self> {
        let g = tau.nrows();
        let reach = rho + delta;
        let points = ellipsoid_points(&im, &inv, reach)?;
        let count = points.len() / g.max(1);
        let mut quad = Vec::with_capacity(count);
        for n in points.chunks(g) {
            let mut q = C64::new(0.0, 0.0);
            for i in 0..g {
                for j in 0..g {
                    q += tau[(i, j)] * (n[i] * n[j]);
                }
            }
            quad.push(C64::new(0.0, PI) * q);
        }
        let tail_bound = tail_bound(g, shortest, rho) * (PI * delta * delta).exp();
        let epsilon = if epsilon.is_nan() { tail_bound } else { epsilon };
        let mut half = vec![0usize; g];
        for n in points.chunks(g) {
            for i in 0..g {
                half[i] = half[i].max(n[i].abs() as usize);
            }
        }
        let offsets = points.iter().enumerate().map(|(k, &c)| (c as i64 + half[k % g] as i64) as usize).collect();
        let weight = quad.iter().map(|q| q.exp()).collect();
        Ok(ThetaContext {
            genus: g,
            tau: tau.clone(),
            im_tau: im,
            im_tau_inv: inv,
            rho,
            epsilon,
            tail_bound,
            points,
            quad,
            weight,
            half,
            offsets,
        })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn tau(&self) -> &DMatrix<C64> {
        &self.tau
    }

    pub fn im_tau(&self) -> &DMatrix<f64> {
        &self.im_tau
    }

    pub fn radius(&self) -> f64 {
        self.rho
    }

    pub fn certificate(&self) -> TruncationCertificate {
        TruncationCertificate {
            radius: self.rho,
            lattice_points: self.quad.len(),
            tail_bound: self.tail_bound,
            epsilon: self.epsilon,
        }
    }

    fn check(&self, z: &DVector<C64>) -> Result<()> {
        if z.len() != self.genus {
            return Err(Error::Dimension { expected: self.genus, got: z.len() });
        }
        Ok(())
    }

    /// `z = w + μ + τλ` with `w` in the fundamental cell.
    pub fn reduce(&self, z: &DVector<C64>) -> Reduction {
        let y = z.map(|c| c.im);
        let lambda = (&self.im_tau_inv * y).map(|c| c.round());
        let lc = lambda.map(|c| C64::new(c, 0.0));
        let shifted = z - &self.tau * &lc;
        let mu = shifted.map(|c| c.re.round());
        let w = DVector::from_fn(self.genus, |i, _| shifted[i] - mu[i]);
        let lin: C64 = lc.iter().zip(w.iter()).map(|(l, x)| l * x).sum();
        let quad: C64 = (lc.transpose() * &self.tau * &lc)[(0, 0)];
        let log_prefactor = C64::new(0.0, -2.0 * PI) * lin - C64::new(0.0, PI) * quad;
        Reduction { reduced: w, log_prefactor, lambda, mu }
    }

    /// Plain truncated sum without argument reduction.
    pub fn sum_unreduced(&self, z: &DVector<C64>) -> Result<C64> {
        self.check(z)?;
        Ok(self.sum(z).0)
    }

    /// Lattice sum using tables of `exp(2πi m w_k)`, falling back to one exponential per
    /// term when a table overflows.
    fn sum(&self, w: &DVector<C64>) -> (C64, f64) {
        let g = self.genus;
        let mut tables = Vec::with_capacity(g);
        for i in 0..g {
            let h = self.half[i];
            let e = (C64::new(0.0, 2.0 * PI) * w[i]).exp();
            let mut row = vec![C64::new(1.0, 0.0); 2 * h + 1];
            for m in 1..=h {
                row[h + m] = row[h + m - 1] * e;
                row[h - m] = row[h - m + 1] / e;
            }
            if row.iter().any(|c| !c.is_finite()) {
                return self.sum_direct(w);
            }
            tables.push(row);
        }
        let mut total = C64::new(0.0, 0.0);
        let mut abs = 0.0;
        for (idx, q) in self.offsets.chunks(g).zip(&self.weight) {
            let mut t = *q;
            for i in 0..g {
                t *= tables[i][idx[i]];
            }
            abs += t.norm_sqr().sqrt();
            total += t;
        }
        (total, abs)
    }

    fn sum_direct(&self, w: &DVector<C64>) -> (C64, f64) {
        let g = self.genus;
        let mut total = C64::new(0.0, 0.0);
        let mut abs = 0.0;
        let two_pi_i = C64::new(0.0, 2.0 * PI);
        for (n, q) in self.points.chunks(g).zip(&self.quad) {
            let mut lin = C64::new(0.0, 0.0);
            for i in 0..g {
                lin += w[i] * n[i];
            }
            let t = (q + two_pi_i * lin).exp();
            abs += t.norm();
            total += t;
        }
        (total, abs)
    }

    fn sum_grad(&self, w: &DVector<C64>) -> (C64, DVector<C64>) {
        let g = self.genus;
        let mut total = C64::new(0.0, 0.0);
        let mut grad = DVector::zeros(g);
        let two_pi_i = C64::new(0.0, 2.0 * PI);
        for (n, q) in self.points.chunks(g).zip(&self.quad) {
            let mut lin = C64::new(0.0, 0.0);
            for i in 0..g {
                lin += w[i] * n[i];
            }
            let t = (q + two_pi_i * lin).exp();
            total += t;
            for i in 0..g {
                grad[i] += two_pi_i * n[i] * t;
            }
        }
        (total, grad)
    }

    pub fn theta_value(&self, z: &DVector<C64>) -> Result<ThetaValue> {
        self.check(z)?;
        let red = self.reduce(z);
        let (reduced, abs_sum) = self.sum(&red.reduced);
        Ok(ThetaValue { log_prefactor: red.log_prefactor, reduced, abs_sum })
    }

    pub fn theta(&self, z: &DVector<C64>) -> Result<C64> {
        Ok(self.theta_value(z)?.value())
    }

    /// `∇Θ(z)` by termwise differentiation, with the reduction's chain rule.
    pub fn theta_grad(&self, z: &DVector<C64>) -> Result<DVector<C64>> {
        self.check(z)?;
        let red = self.reduce(z);
        let (value, grad) = self.sum_grad(&red.reduced);
        let shift = red.lambda.map(|l| C64::new(0.0, -2.0 * PI * l) * value);
        Ok((grad + shift) * red.log_prefactor.exp())
    }
}

type Prepared = (DMatrix<f64>, DMatrix<f64>, f64, f64);

fn prepare(tau: &DMatrix<C64>) -> Result<Prepared> {
    let g = tau.nrows();
    if g == 0 || tau.ncols() != g {
        return Err(Error::Dimension { expected: g.max(1), got: tau.ncols() });
    }
    let raw = tau.map(|c| c.im);
    let im = (&raw + raw.transpose()) * 0.5;
    let lmin = im.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lmin > 0.0) {
        return Err(Error::InvalidArgument(format!("Im τ is not positive definite (λ_min = {lmin:e})")));
    }
    let inv = im.clone().try_inverse().ok_or_else(|| Error::InvalidArgument("singular Im τ".into()))?;
    let shortest = shortest_vector(&im, &inv)?;
    // Largest Im τ-norm of a vector in [−½, ½]^g.
    let delta = 0.5 * im.iter().map(|v| v.abs()).sum::<f64>().sqrt();
    Ok((im, inv, shortest, delta))
}

/// Length of the shortest nonzero lattice vector in the `Im τ` norm.
fn shortest_vector(im: &DMatrix<f64>, inv: &DMatrix<f64>) -> Result<f64> {
    let g = im.nrows();
    let cap = (0..g).map(|i| im[(i, i)]).fold(f64::INFINITY, f64::min).sqrt();
    let pts = ellipsoid_points(im, inv, cap * (1.0 + 1e-12))?;
    let mut best = cap;
    for n in pts.chunks(g) {
        if n.iter().all(|&c| c == 0.0) {
            continue;
        }
        let v = DVector::from_column_slice(n);
        best = best.min((v.transpose() * im * &v)[(0, 0)].sqrt());
    }
    Ok(best)
}

/// Lattice points `n` with `‖n‖_Y ≤ reach`, flattened.
fn ellipsoid_points(im: &DMatrix<f64>, inv: &DMatrix<f64>, reach: f64) -> Result<Vec<f64>> {
    let g = im.nrows();
    let half: Vec<i64> = (0..g).map(|i| (reach * inv[(i, i)].sqrt()).floor() as i64).collect();
    let box_size: f64 = half.iter().map(|h| (2 * h + 1) as f64).product();
    if box_size > 8.0 * MAX_LATTICE_POINTS as f64 {
        return Err(Error::TruncationOverflow(box_size as usize));
    }
    let r2 = reach * reach;
    let mut out = Vec::new();
    let mut n: Vec<i64> = half.iter().map(|h| -h).collect();
    loop {
        let mut q = 0.0;
        for i in 0..g {
            for j in 0..g {
                q += im[(i, j)] * (n[i] * n[j]) as f64;
            }
        }
        if q <= r2 {
            out.extend(n.iter().map(|&c| c as f64));
            if out.len() / g > MAX_LATTICE_POINTS {
                return Err(Error::TruncationOverflow(out.len() / g));
            }
        }
        let mut i = 0;
        loop {
            if i == g {
                return Ok(out);
            }
            if n[i] < half[i] {
                n[i] += 1;
                break;
            }
            n[i] = -half[i];
            i += 1;
        }
    }
}

/// Bound on the omitted terms `Σ_{‖n+c‖_Y > ρ} exp(−π‖n+c‖²_Y)` (Gaussian lattice tail).
fn tail_bound(g: usize, shortest: f64, rho: f64) -> f64 {
    let s = (PI).sqrt() * shortest;
    let r = (PI).sqrt() * rho;
    let a = g as f64 / 2.0;
    if r < (g as f64).sqrt() / 2.0 + s / 2.0 {
        return f64::INFINITY;
    }
    let x = (r - s / 2.0).powi(2);
    a * (2.0 / s).powi(g as i32) * gamma_ui(a, x) * gamma(a)
}

fn choose_radius(g: usize, shortest: f64, delta: f64, epsilon: f64) -> f64 {
    let mut rho = ((g as f64).sqrt() / 2.0 + (PI).sqrt() * shortest / 2.0) / (PI).sqrt();
    let margin = (PI * delta * delta).exp();
    while tail_bound(g, shortest, rho) * margin > epsilon {
        rho += 0.05 * (1.0 + shortest);
    }
    rho
}
