//! Period data of the surface: normalized holomorphic differentials, the period matrix,
//! the Abel map and its value at infinity, Riemann constants, and the B-periods of the
//! second-kind differentials `dp`, `dq` that drive the `(x, t)` flow.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::poly::{inverse_sqrt_product_series, Poly};
use crate::quadrature::{
    cut_side_moments, loop_moments, path_moments, CutLoop, SheetPath, DEFAULT_TOLERANCE,
};
use crate::surface::{Mode, Sheet, SheetedPoint, Side, Surface};

/// Orientation of the B-cycles relative to the template path from cut 0 to cut `j`.
const B_SIGN: f64 = -1.0;
/// Number of Laurent terms used for far-field tails.
const LAURENT_TERMS: usize = 48;
const CONDITION_WARNING: f64 = 1e10;
const CONDITION_FAILURE: f64 = 1e14;

#[derive(Clone, Debug)]
pub struct PeriodData {
    pub mode: Mode,
    pub genus: usize,
    pub base_point: C64,
    pub a_matrix: DMatrix<C64>,
    pub kappa: DMatrix<C64>,
    pub a_condition: f64,
    pub tau: DMatrix<C64>,
    pub u_inf: DVector<C64>,
    pub riemann_k: DVector<C64>,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    /// Largest imaginary part discarded from `V`, `W`.
    pub flow_imag: f64,
    /// Constant terms of the second-kind integrals at infinity.
    pub p0: C64,
    pub q0: C64,
    pub h1: DVector<f64>,
    pub tol: f64,
    pub warnings: Vec<String>,
}

/// Coefficients `d_k` of `z^{g+1}/R(z) = Σ d_k z^{−k}` at infinity on the main sheet.
pub fn inverse_r_series(surface: &Surface, n: usize) -> Vec<C64> {
    inverse_sqrt_product_series(&surface.branch_points(), n)
}

/// Laurent coefficients of `numerator/R` at `∞₊` as `(power, coefficient)` pairs.
fn laurent(surface: &Surface, numerator: &Poly, d: &[C64]) -> Vec<(i64, C64)> {
    let g1 = surface.genus() as i64 + 1;
    let top = numerator.coeffs.len() as i64 - 1 - g1;
    let mut out = Vec::new();
    for p in (top - d.len() as i64 + 1..=top).rev() {
        let mut c = C64::new(0.0, 0.0);
        for (i, a) in numerator.coeffs.iter().enumerate() {
            let n = i as i64 - g1 - p;
            if n >= 0 && (n as usize) < d.len() {
                c += a * d[n as usize];
            }
        }
        out.push((p, c));
    }
    out
}

/// Splits `F(z) = ∫ numerator/R` near infinity into its growing part and its decaying tail.
///
/// Returns `(growing(z), tail(z))` with `F(z) = growing(z) + C + tail(z)`; the `1/z` term
/// must vanish for the split to exist.
fn far_field_parts(terms: &[(i64, C64)], z: C64) -> (C64, C64) {
    let mut grow = C64::new(0.0, 0.0);
    let mut tail = C64::new(0.0, 0.0);
    for &(p, c) in terms {
        if p >= 0 {
            grow += c * z.powi(p as i32 + 1) / (p as f64 + 1.0);
        } else if p <= -2 {
            tail += c * z.powi(p as i32 + 1) / (p as f64 + 1.0);
        }
    }
    (grow, tail)
}

fn dot(coeffs: &Poly, moments: &[C64]) -> C64 {
    coeffs.coeffs.iter().zip(moments).map(|(c, m)| c * m).sum()
}

/// Loop moments `∮_{A_j} z^m/R` for `j = 1..=g`, `m = 0..=g+2`.
fn a_moments(surface: &Surface, tol: f64) -> Result<Vec<Vec<C64>>> {
    let g = surface.genus();
    (1..=g).map(|j| loop_moments(surface, CutLoop::a_cycle(j), g + 2, tol)).collect()
}

fn a_from_moments(mom: &[Vec<C64>], g: usize) -> DMatrix<C64> {
    DMatrix::from_fn(g, g, |j, k| mom[j][g - 1 - k])
}

/// `𝔸_{jk} = ∮_{A_j} z^{g−k}/R dz`, `j, k = 1..g`.
pub fn a_matrix(surface: &Surface, tol: f64) -> Result<DMatrix<C64>> {
    if surface.genus() == 0 {
        return Err(Error::GenusZero);
    }
    Ok(a_from_moments(&a_moments(surface, tol)?, surface.genus()))
}

/// `κ = 𝔸⁻¹` together with the 2-norm condition number of `𝔸`.
pub fn normalized_differentials(a: &DMatrix<C64>) -> Result<(DMatrix<C64>, f64)> {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(cond < CONDITION_FAILURE) {
        return Err(Error::SingularAMatrix(cond));
    }
    let kappa = a.clone().lu().try_inverse().ok_or(Error::SingularAMatrix(cond))?;
    Ok((kappa, cond))
}

/// Holomorphic vector `(∫ω_k)_k` from monomial integrals `∫ z^m/R`.
fn holomorphic(kappa: &DMatrix<C64>, moments: &[C64]) -> DVector<C64> {
    let g = kappa.nrows();
    DVector::from_fn(g, |k, _| (0..g).map(|m| kappa[(m, k)] * moments[g - 1 - m]).sum())
}

/// Template path from the base point to the start of cut `j`.
fn b_path(surface: &Surface, j: usize) -> Result<SheetPath> {
    SheetPath::template(surface, surface.cuts()[j].start)
}

/// `τ_{kj} = ∮_{B_j} ω_k`.
pub fn period_matrix(surface: &Surface, kappa: &DMatrix<C64>, tol: f64) -> Result<DMatrix<C64>> {
    let g = surface.genus();
    let mut tau = DMatrix::zeros(g, g);
    for j in 1..=g {
        let m = path_moments(surface, &b_path(surface, j)?, g - 1, tol)?;
        let col = holomorphic(kappa, &m) * C64::new(2.0 * B_SIGN, 0.0);
        tau.set_column(j - 1, &col);
    }
    // The template paths fix each B_j only up to adding A-cycles, which moves entries of
    // τ by integers. Θ depends on the parity of the diagonal, so the integer parts are
    // set to the canonical pattern (diagonal 1, off-diagonal ½ for vertical cuts; 0 for
    // real cuts), which also makes the raw integer asymmetry disappear.
    for i in 0..g {
        for j in 0..g {
            let target = canonical_re_tau(surface.mode(), i, j);
            let shift = (target - tau[(i, j)].re).round();
            tau[(i, j)] += shift;
        }
    }
    Ok(tau)
}

fn canonical_re_tau(mode: Mode, i: usize, j: usize) -> f64 {
    match mode {
        Mode::Focusing if i == j => 1.0,
        Mode::Focusing => 0.5,
        Mode::Defocusing => 0.0,
    }
}

/// Reduces a Jacobian vector modulo `ℤ^g + τℤ^g` to the cell around the origin.
pub fn lattice_reduce(v: &DVector<C64>, tau: &DMatrix<C64>) -> DVector<C64> {
    let im_tau = tau.map(|c| c.im);
    let coords = match im_tau.clone().lu().solve(&v.map(|c| c.im)) {
        Some(c) => c,
        None => return v.clone(),
    };
    let lam = coords.map(|c| c.round());
    let shift = tau * lam.map(|c| C64::new(c, 0.0));
    (v - shift).map(|c| C64::new(c.re - c.re.round(), c.im))
}

/// Distance between two Jacobian points modulo the lattice.
pub fn lattice_distance(a: &DVector<C64>, b: &DVector<C64>, tau: &DMatrix<C64>) -> f64 {
    lattice_reduce(&(a - b), tau).norm()
}

/// Integral of the holomorphic differentials along the far-field tail from `z` to `∞₊`.
fn holomorphic_tail(surface: &Surface, kappa: &DMatrix<C64>, z: C64) -> DVector<C64> {
    let g = surface.genus();
    let d = inverse_r_series(surface, LAURENT_TERMS);
    DVector::from_fn(g, |k, _| {
        let p = Poly::new((0..g).map(|i| kappa[(g - 1 - i, k)]).collect());
        let (_, tail) = far_field_parts(&laurent(surface, &p, &d), z);
        -tail
    })
}

fn far_radius(surface: &Surface) -> f64 {
    20.0 * (surface.radius() + 1.0)
}

/// `u_∞` computed by integrating to `i·reach` and adding the Laurent tail.
pub fn u_infinity_at(surface: &Surface, kappa: &DMatrix<C64>, reach: f64, tol: f64) -> Result<DVector<C64>> {
    let g = surface.genus();
    let z = C64::new(0.0, reach);
    let m = path_moments(surface, &SheetPath::template(surface, z)?, g - 1, tol)?;
    let tail = holomorphic_tail(surface, kappa, z);
    let u = holomorphic(kappa, &m) + tail;
    if u.iter().any(|c| !c.is_finite()) {
        return Err(Error::TailNotConverged);
    }
    Ok(u)
}

/// Abel map of `∞₊`.
pub fn u_infinity(surface: &Surface, kappa: &DMatrix<C64>, tol: f64) -> Result<DVector<C64>> {
    u_infinity_at(surface, kappa, far_radius(surface), tol)
}

/// `𝒦 = Σ_{j≥1} u(start_j)`.
pub fn riemann_constants(surface: &Surface, kappa: &DMatrix<C64>, tol: f64) -> Result<DVector<C64>> {
    let g = surface.genus();
    let mut k = DVector::zeros(g);
    for j in 1..=g {
        let m = path_moments(surface, &b_path(surface, j)?, g - 1, tol)?;
        k += holomorphic(kappa, &m);
    }
    Ok(k)
}

/// Numerators of the normalized second-kind differentials `dp ~ dz`, `dq ~ 2z dz` at `∞₊`.
pub fn second_kind_numerators(surface: &Surface, a_mom: &[Vec<C64>]) -> Result<(Poly, Poly)> {
    let g = surface.genus();
    let d = inverse_r_series(surface, 3);
    let mut head_p = vec![C64::new(0.0, 0.0); g + 2];
    head_p[g + 1] = C64::new(1.0, 0.0);
    head_p[g] = -d[1];
    let mut head_q = vec![C64::new(0.0, 0.0); g + 3];
    head_q[g + 2] = C64::new(2.0, 0.0);
    head_q[g + 1] = -2.0 * d[1];
    head_q[g] = 2.0 * d[1] * d[1] - 2.0 * d[2];
    // Lower coefficients c_0..c_{g−1} cancel the A-periods of the leading part.
    let m = DMatrix::from_fn(g, g, |j, k| a_mom[j][k]);
    let lu = m.lu();
    let solve = |head: Vec<C64>| -> Result<Poly> {
        let rhs = DVector::from_fn(g, |j, _| -dot(&Poly::new(head.clone()), &a_mom[j]));
        let low = lu.solve(&rhs).ok_or(Error::SingularNormalizationSystem)?;
        let mut c = head;
        for k in 0..g {
            c[k] = low[k];
        }
        Ok(Poly::new(c))
    };
    Ok((solve(head_p)?, solve(head_q)?))
}

/// Flow vectors `V`, `W` and the constants `p₀`, `q₀` of the second-kind integrals.
///
/// `V_j = (1/2π)∮_{B_j} dp`, `W_j = (1/π)∮_{B_j} dq`, so that `ψ` with the plane-wave factor
/// `exp(2i(p₀x + 2q₀t))` solves the NLS equation. Also returns the largest discarded
/// imaginary part.
pub fn second_kind_periods(
    surface: &Surface,
    a_mom: &[Vec<C64>],
    tol: f64,
) -> Result<(DVector<f64>, DVector<f64>, f64, C64, C64)> {
    let g = surface.genus();
    let (pp, pq) = second_kind_numerators(surface, a_mom)?;
    let mut v = DVector::zeros(g);
    let mut w = DVector::zeros(g);
    let mut imag: f64 = 0.0;
    for j in 1..=g {
        let m = path_moments(surface, &b_path(surface, j)?, g + 2, tol)?;
        let bp = dot(&pp, &m) * (2.0 * B_SIGN);
        let bq = dot(&pq, &m) * (2.0 * B_SIGN);
        let vj = bp / (2.0 * PI);
        let wj = bq / PI;
        imag = imag.max(vj.im.abs()).max(wj.im.abs());
        v[j - 1] = vj.re;
        w[j - 1] = wj.re;
    }
    let z = C64::new(0.0, far_radius(surface));
    let m = path_moments(surface, &SheetPath::template(surface, z)?, g + 2, tol)?;
    let d = inverse_r_series(surface, LAURENT_TERMS);
    let constant = |p: &Poly| {
        let (grow, tail) = far_field_parts(&laurent(surface, p, &d), z);
        dot(p, &m) - grow - tail
    };
    Ok((v, w, imag, constant(&pp), constant(&pq)))
}

/// `2 Re u_∞ mod 1` predicted from the cut geometry.
pub fn h1_vector(surface: &Surface) -> DVector<f64> {
    let g = surface.genus();
    match surface.mode() {
        Mode::Focusing => DVector::from_element(g, 0.5),
        Mode::Defocusing => DVector::zeros(g),
    }
}

impl PeriodData {
    pub fn compute(surface: &Surface) -> Result<PeriodData> {
        PeriodData::compute_with(surface, DEFAULT_TOLERANCE)
    }

    pub fn compute_with(surface: &Surface, tol: f64) -> Result<PeriodData> {
        let g = surface.genus();
        if g == 0 {
            return Err(Error::GenusZero);
        }
        let mom = a_moments(surface, tol)?;
        let a = a_from_moments(&mom, g);
        let (kappa, cond) = normalized_differentials(&a)?;
        let mut warnings = Vec::new();
        if cond > CONDITION_WARNING {
            warnings.push(format!("A-matrix condition number {cond:.3e}"));
        }
        let tau = period_matrix(surface, &kappa, tol)?;
        let u_inf = u_infinity(surface, &kappa, tol)?;
        let riemann_k = riemann_constants(surface, &kappa, tol)?;
        let (v, w, flow_imag, p0, q0) = second_kind_periods(surface, &mom, tol)?;
        Ok(PeriodData {
            mode: surface.mode(),
            genus: g,
            base_point: surface.base_point(),
            a_matrix: a,
            kappa,
            a_condition: cond,
            tau,
            u_inf,
            riemann_k,
            v,
            w,
            flow_imag,
            p0,
            q0,
            h1: h1_vector(surface),
            tol,
            warnings,
        })
    }

    /// Abel map of a sheeted point off the cuts.
    ///
    /// Far from the cuts the value is `u_∞` minus the Laurent tail, which is equal modulo
    /// `ℤ^g` to the template-path integral.
    pub fn abel_map(&self, surface: &Surface, p: SheetedPoint) -> Result<DVector<C64>> {
        let z = p.z;
        if let Some(j) = surface.cut_containing(z) {
            if !surface.is_branch_point(z) {
                return Err(Error::OnBranchCut(format!("{z}"), j));
            }
        }
        let main = if z.norm() >= far_radius(surface) {
            &self.u_inf - holomorphic_tail(surface, &self.kappa, z)
        } else {
            let m = path_moments(surface, &SheetPath::template(surface, z)?, self.genus - 1, self.tol)?;
            holomorphic(&self.kappa, &m)
        };
        Ok(match p.sheet {
            Sheet::Main => main,
            Sheet::Second => -main,
        })
    }

    /// One-sided main-sheet Abel map at parameter `t` on cut `j`.
    pub fn abel_map_boundary(&self, surface: &Surface, j: usize, t: f64, side: Side) -> Result<DVector<C64>> {
        let start = self.abel_map(surface, SheetedPoint::main(surface.cuts()[j].start))?;
        let m = cut_side_moments(surface, j, t, side, self.genus - 1, self.tol)?;
        Ok(start + holomorphic(&self.kappa, &m))
    }

    /// Normalized holomorphic differentials `ω_k(z)/dz` on the main sheet.
    pub fn omega(&self, surface: &Surface, z: C64) -> Result<DVector<C64>> {
        let r = surface.eval_r(SheetedPoint::main(z))?;
        let g = self.genus;
        let mut powers = vec![C64::new(1.0, 0.0); g];
        for i in 1..g {
            powers[i] = powers[i - 1] * z;
        }
        Ok(holomorphic(&self.kappa, &powers) / r)
    }

    pub fn tau_symmetry_defect(&self) -> f64 {
        (&self.tau - self.tau.transpose()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn im_tau_min_eigenvalue(&self) -> f64 {
        let im = self.tau.map(|c| c.im);
        let sym = (&im + im.transpose()) * 0.5;
        sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Largest deviation of `Re τ` from its expected pattern modulo 1.
    pub fn re_tau_defect(&self) -> f64 {
        let g = self.genus;
        let mut worst: f64 = 0.0;
        for i in 0..g {
            for j in 0..g {
                let target = canonical_re_tau(self.mode, i, j);
                worst = worst.max(frac_distance(self.tau[(i, j)].re - target));
            }
        }
        worst
    }

    /// Largest deviation of `2 Re u_∞` from `h₁` modulo 1.
    pub fn h1_defect(&self) -> f64 {
        self.u_inf
            .iter()
            .zip(self.h1.iter())
            .map(|(u, h)| frac_distance(2.0 * u.re - h))
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        let c = |z: &C64| json!([z.re, z.im]);
        let mat = |m: &DMatrix<C64>| -> Value {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| c(&m[(i, j)])).collect::<Vec<_>>()).collect()
        };
        let vec_c = |v: &DVector<C64>| -> Value { v.iter().map(c).collect() };
        let vec_r = |v: &DVector<f64>| -> Value { v.iter().cloned().collect() };
        json!({
            "mode": self.mode,
            "genus": self.genus,
            "base_point": c(&self.base_point),
            "A_matrix": mat(&self.a_matrix),
            "kappa": mat(&self.kappa),
            "A_condition": self.a_condition,
            "tau": mat(&self.tau),
            "u_inf": vec_c(&self.u_inf),
            "riemann_K": vec_c(&self.riemann_k),
            "V": vec_r(&self.v),
            "W": vec_r(&self.w),
            "p0": c(&self.p0),
            "q0": c(&self.q0),
            "h1": vec_r(&self.h1),
            "tolerance": self.tol,
            "warnings": self.warnings,
        })
    }
}

/// Distance from `x` to the nearest integer.
pub fn frac_distance(x: f64) -> f64 {
    (x - x.round()).abs()
}
