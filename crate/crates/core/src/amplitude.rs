//! The amplitude ratio `f(Ω)`, the finite-gap field `ψ(x, t)` and the explicit
//! Riemann–Hilbert solution `Y(z; Ω) = ℒ⁻¹(∞)ℒ(z)`.

use std::f64::consts::PI;

use nalgebra::{DVector, Matrix2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::periods::PeriodData;
use crate::quadrature::chebyshev_nodes;
use crate::surface::{Mode, SheetedPoint, Side, Surface};
use crate::theta::{ThetaContext, ThetaValue};

pub type Mat2 = Matrix2<C64>;

/// Relative size below which `Θ(Ω)` counts as zero.
pub const THETA_ZERO: f64 = 1e-10;
pub const Y1_RADIUS: f64 = 1e3;
pub const Y1_POINTS: usize = 16;

/// A point of the real torus `ℝ^g / ℤ^g`, stored in `[0, 1)^g`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint(Vec<f64>);

impl PhasePoint {
    pub fn new(values: Vec<f64>) -> Self {
        PhasePoint(values.into_iter().map(wrap).collect())
    }

    pub fn zero(g: usize) -> Self {
        PhasePoint(vec![0.0; g])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn complex(&self) -> DVector<C64> {
        DVector::from_iterator(self.0.len(), self.0.iter().map(|&x| C64::new(x, 0.0)))
    }
}

fn wrap(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Debug)]
pub struct AmplitudeContext {
    pub surface: Surface,
    pub periods: PeriodData,
    pub theta: ThetaContext,
    /// `d = −u_∞`.
    pub d: DVector<C64>,
    pub band_sum: f64,
    theta_zero: ThetaValue,
    theta_2u: ThetaValue,
    /// `(i/4) Σ (end_j − start_j)`.
    y1_scale: C64,
}

fn ratio(a: &ThetaValue, b: &ThetaValue) -> C64 {
    (a.log_prefactor - b.log_prefactor).exp() * a.reduced / b.reduced
}

impl AmplitudeContext {
    pub fn new(surface: Surface, periods: PeriodData) -> Result<Self> {
        let theta = ThetaContext::new(&periods.tau)?;
        AmplitudeContext::with_theta(surface, periods, theta)
    }

    pub fn with_theta(surface: Surface, periods: PeriodData, theta: ThetaContext) -> Result<Self> {
        let g = periods.genus;
        let theta_zero = theta.theta_value(&DVector::zeros(g))?;
        let theta_2u = theta.theta_value(&(&periods.u_inf * C64::new(2.0, 0.0)))?;
        if theta_2u.relative_size() < THETA_ZERO {
            return Err(Error::ThetaZeroDenominator(theta_2u.relative_size()));
        }
        let y1_scale = C64::new(0.0, 0.25)
            * surface.cuts().iter().map(|c| c.end - c.start).sum::<C64>();
        Ok(AmplitudeContext {
            band_sum: surface.band_sum(),
            d: -&periods.u_inf,
            surface,
            periods,
            theta,
            theta_zero,
            theta_2u,
            y1_scale,
        })
    }

    pub fn build(surface: &Surface) -> Result<Self> {
        let pd = PeriodData::compute(surface)?;
        AmplitudeContext::new(surface.clone(), pd)
    }

    pub fn genus(&self) -> usize {
        self.periods.genus
    }

    pub fn mode(&self) -> Mode {
        self.surface.mode()
    }

    fn check(&self, omega: &PhasePoint) -> Result<()> {
        if omega.len() != self.genus() {
            return Err(Error::Dimension { expected: self.genus(), got: omega.len() });
        }
        Ok(())
    }

    /// `f(Ω) = Θ(2u_∞ + Ω)Θ(0) / (Θ(2u_∞)Θ(Ω))`.
    pub fn f_value(&self, omega: &PhasePoint) -> Result<C64> {
        self.check(omega)?;
        self.f_complex(&omega.complex())
    }

    /// `f` at an arbitrary complex argument.
    pub fn f_complex(&self, omega: &DVector<C64>) -> Result<C64> {
        let den = self.theta.theta_value(omega)?;
        if den.relative_size() < THETA_ZERO {
            return Err(Error::ThetaZeroDenominator(den.relative_size()));
        }
        let shifted = omega + &self.periods.u_inf * C64::new(2.0, 0.0);
        let num = self.theta.theta_value(&shifted)?;
        Ok(ratio(&num, &den) * ratio(&self.theta_zero, &self.theta_2u))
    }

    /// `Ω(x, t) = Vx + Wt + Ω⁰`.
    pub fn phase(&self, x: f64, t: f64, omega0: &PhasePoint) -> PhasePoint {
        PhasePoint::new(
            omega0
                .values()
                .iter()
                .zip(self.periods.v.iter().zip(self.periods.w.iter()))
                .map(|(o, (v, w))| o + v * x + w * t)
                .collect(),
        )
    }

    /// The theta-quotient field: `f(Ω(x,t))·Σb_j` (focusing) or `−f(Ω(x,t))·Σb_j`
    /// (defocusing, from `ψ = 2i(Y₁)₁₂`).
    pub fn psi_value(&self, x: f64, t: f64, omega0: &PhasePoint) -> Result<C64> {
        self.check(omega0)?;
        let f = self.f_value(&self.phase(x, t, omega0))?;
        Ok(match self.mode() {
            Mode::Focusing => f * self.band_sum,
            Mode::Defocusing => -f * self.band_sum,
        })
    }

    /// `ψ(x,t)` including the plane-wave factor `exp(2i(p₀x + 2q₀t))`, which is a solution
    /// of the NLS equation itself; `|ψ|` agrees with [`psi_value`](Self::psi_value).
    pub fn psi_full(&self, x: f64, t: f64, omega0: &PhasePoint) -> Result<C64> {
        let phase = C64::new(0.0, 2.0) * (self.periods.p0 * x + self.periods.q0 * (2.0 * t));
        Ok(phase.exp() * self.psi_value(x, t, omega0)?)
    }

    fn l_matrix(&self, u: &DVector<C64>, lambda: C64, omega: &DVector<C64>) -> Result<Mat2> {
        let th = |v: DVector<C64>| self.theta.theta_value(&v);
        let d = &self.d;
        let m1 = |dd: &DVector<C64>| -> Result<C64> { Ok(ratio(&th(u - omega + dd)?, &th(u + dd)?)) };
        let m2 = |dd: &DVector<C64>| -> Result<C64> { Ok(ratio(&th(-u - omega + dd)?, &th(-u + dd)?)) };
        let nd = -d;
        let (sp, sm) = (lambda + 1.0 / lambda, lambda - 1.0 / lambda);
        let i = C64::new(0.0, 1.0);
        Ok(Mat2::new(
            sp * m1(d)?,
            -i * sm * m2(d)?,
            i * sm * m1(&nd)?,
            sp * m2(&nd)?,
        ) * C64::new(0.5, 0.0))
    }

    fn l_infinity_inverse(&self, omega: &DVector<C64>) -> Result<C64> {
        let t = self.theta.theta_value(omega)?;
        if t.relative_size() < THETA_ZERO {
            return Err(Error::SingularLInfinity);
        }
        Ok(ratio(&self.theta_zero, &t))
    }

    /// `Y(z; Ω)` for `z` off the cuts.
    pub fn y_matrix(&self, z: C64, omega: &PhasePoint) -> Result<Mat2> {
        self.check(omega)?;
        let u = self.periods.abel_map(&self.surface, SheetedPoint::main(z))?;
        let lambda = self.surface.eval_lambda(z)?;
        let om = omega.complex();
        Ok(self.l_matrix(&u, lambda, &om)? * self.l_infinity_inverse(&om)?)
    }

    /// One-sided value `Y_±` at parameter `t` on cut `j`.
    pub fn y_boundary(&self, j: usize, t: f64, side: Side, omega: &PhasePoint) -> Result<Mat2> {
        self.check(omega)?;
        let u = self.periods.abel_map_boundary(&self.surface, j, t, side)?;
        let lambda = self.surface.eval_lambda_boundary(j, t, side);
        let om = omega.complex();
        Ok(self.l_matrix(&u, lambda, &om)? * self.l_infinity_inverse(&om)?)
    }

    /// Jump matrix `iσ₂ exp(−2πiΩ_jσ₃)` of cut `j` (`Ω₀ = 0`).
    pub fn jump_matrix(&self, j: usize, omega: &PhasePoint) -> Mat2 {
        let w = if j == 0 { 0.0 } else { omega.values()[j - 1] };
        let e = C64::from_polar(1.0, 2.0 * PI * w);
        Mat2::new(C64::new(0.0, 0.0), e, -1.0 / e, C64::new(0.0, 0.0))
    }

    /// `max ‖Y₊ − Y₋J_j‖ / max(1, ‖Y₋‖)` over Chebyshev points on every cut.
    pub fn jump_residual(&self, omega: &PhasePoint, samples_per_cut: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for j in 0..self.surface.cuts().len() {
            let jump = self.jump_matrix(j, omega);
            for t in chebyshev_nodes(samples_per_cut) {
                let plus = self.y_boundary(j, t, Side::Plus, omega)?;
                let minus = self.y_boundary(j, t, Side::Minus, omega)?;
                let defect = (plus - minus * jump).norm() / minus.norm().max(1.0);
                worst = worst.max(defect);
            }
        }
        Ok(worst)
    }

    fn y1_circle(&self, radius: f64, omega: &PhasePoint) -> Result<Mat2> {
        let mut acc = Mat2::zeros();
        for k in 0..Y1_POINTS {
            let z = C64::from_polar(radius, 2.0 * PI * (k as f64 + 0.5) / Y1_POINTS as f64);
            acc += (self.y_matrix(z, omega)? - Mat2::identity()) * z;
        }
        Ok(acc / C64::new(Y1_POINTS as f64, 0.0))
    }

    /// `Y₁` from the circle average of `z(Y(z) − I)` at radii `r` and `2r` with one
    /// Richardson step on the leading aliasing term `O(r^{−N})`.
    pub fn y1_coefficient(&self, omega: &PhasePoint) -> Result<Mat2> {
        let a = self.y1_circle(Y1_RADIUS, omega)?;
        let b = self.y1_circle(2.0 * Y1_RADIUS, omega)?;
        let gap = (a - b).norm();
        if gap > 1e-6 * (1.0 + b.norm()) {
            return Err(Error::FitNonConvergence(gap));
        }
        let w = 2f64.powi(Y1_POINTS as i32);
        Ok((b * C64::new(w, 0.0) - a) / C64::new(w - 1.0, 0.0))
    }

    /// `(Y₁)₁₂ = (i/4) f(Ω) Σ(end_j − start_j)`.
    pub fn y1_12_formula(&self, omega: &PhasePoint) -> Result<C64> {
        Ok(self.y1_scale * self.f_value(omega)?)
    }

    /// Largest deviation of `det Y` from its mean over `n` points on the circle `|z| = r`.
    ///
    /// `det Y` is entire with unit jumps and tends to 1, so any spread signals poles of `Y`.
    pub fn determinant_spread(&self, omega: &PhasePoint, radius: f64, n: usize) -> Result<f64> {
        let mut dets = Vec::with_capacity(n);
        for k in 0..n {
            let z = C64::from_polar(radius, 2.0 * PI * (k as f64 + 0.25) / n as f64);
            dets.push(self.y_matrix(z, omega)?.determinant());
        }
        let mean = dets.iter().sum::<C64>() / n as f64;
        Ok(dets.iter().map(|d| (d - mean).norm()).fold(0.0, f64::max))
    }

    /// Context with `d = +u_∞`. The jumps of `Y` do not depend on `d`; the wrong sign shows
    /// up as poles of `Y` at the divisor points instead.
    pub fn with_wrong_divisor(&self) -> AmplitudeContext {
        let mut c = self.clone();
        c.d = self.periods.u_inf.clone();
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{random_surface, validate, SurfaceSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example_g2() -> AmplitudeContext {
        let s = validate(SurfaceSpec::Focusing {
            alphas: vec![C64::new(0.1, 2.0), C64::new(0.0, 0.5), C64::new(-0.1, 1.0)],
        })
        .unwrap();
        AmplitudeContext::build(&s).unwrap()
    }

    #[test]
    fn phase_point_wraps() {
        let p = PhasePoint::new(vec![1.25, -0.25, 3.0]);
        assert_eq!(p.values(), &[0.25, 0.75, 0.0]);
    }

    #[test]
    fn f_at_origin_and_half_period() {
        let ctx = example_g2();
        let f0 = ctx.f_value(&PhasePoint::zero(2)).unwrap();
        assert!((f0 - 1.0).norm() < 1e-10);
        let fh = ctx.f_value(&PhasePoint::new(vec![0.5, 0.5])).unwrap();
        assert!((fh.norm() - 1.0 / 7.0).abs() < 1e-6, "{fh}");
        let f10 = ctx.f_value(&PhasePoint::new(vec![0.5, 0.0])).unwrap();
        assert!((f10.re - 5.0 / 7.0).abs() < 1e-7, "{f10}");
    }

    #[test]
    fn psi_at_origin_is_band_sum() {
        let ctx = example_g2();
        let p = ctx.psi_value(0.0, 0.0, &PhasePoint::zero(2)).unwrap();
        assert!((p - 3.5).norm() < 1e-9);
        assert!((ctx.psi_full(0.0, 0.0, &PhasePoint::zero(2)).unwrap() - 3.5).norm() < 1e-9);
    }

    #[test]
    fn y_is_identity_at_infinity_with_constant_determinant() {
        let ctx = example_g2();
        let om = PhasePoint::new(vec![0.3, 0.8]);
        let y = ctx.y_matrix(C64::new(1e6, 1.0), &om).unwrap();
        assert!((y - Mat2::identity()).norm() < 1e-5);
        let dets: Vec<C64> = (0..8u32)
            .map(|k| {
                let z = C64::from_polar(4.0, 0.3 + f64::from(k) * 0.7);
                ctx.y_matrix(z, &om).unwrap().determinant()
            })
            .collect();
        for d in &dets {
            assert!((d - dets[0]).norm() < 1e-7, "{d} vs {}", dets[0]);
        }
    }

    #[test]
    fn jump_condition_holds() {
        let ctx = example_g2();
        let om = PhasePoint::new(vec![0.3, 0.8]);
        let r = ctx.jump_residual(&om, 8).unwrap();
        assert!(r < 1e-6, "residual {r}");
        let wrong = ctx.with_wrong_divisor();
        assert!(ctx.determinant_spread(&om, 1.5, 16).unwrap() < 1e-8);
        let spread = wrong.determinant_spread(&om, 1.5, 16).unwrap();
        assert!(spread > 1e-2, "wrong divisor spread {spread}");
    }

    #[test]
    fn y1_matches_formula() {
        let ctx = example_g2();
        for om in [PhasePoint::zero(2), PhasePoint::new(vec![0.5, 0.5]), PhasePoint::new(vec![0.2, 0.7])] {
            let y1 = ctx.y1_coefficient(&om).unwrap();
            let f = ctx.y1_12_formula(&om).unwrap();
            assert!((y1[(0, 1)] - f).norm() < 1e-5, "{} vs {f}", y1[(0, 1)]);
        }
    }

    #[test]
    fn random_genus_one_jump() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for mode in [Mode::Focusing, Mode::Defocusing] {
            let s = random_surface(&mut rng, mode, 1);
            let ctx = AmplitudeContext::build(&s).unwrap();
            let om = PhasePoint::new(vec![rng.gen()]);
            let r = ctx.jump_residual(&om, 16).unwrap();
            assert!(r < 1e-6, "{mode:?}: {r}");
        }
    }
}
