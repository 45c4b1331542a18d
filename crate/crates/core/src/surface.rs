//! Hyperelliptic surface data: branch cuts, the square root `R(z)`, the quartic root
//! `λ(z)` and the divisor of zeros of `λ² − 1`.
//!
//! Every cut is a straight oriented segment from `start` to `end`. Focusing surfaces have
//! vertical Schwarz-symmetric cuts `[ᾱ_j, α_j]` oriented upwards, defocusing surfaces have
//! real cuts `[β_j, α_j]` oriented left to right. The `+` side of a cut is the side on the
//! left of its orientation.
//!
//! Both `R` and `λ` are evaluated as products of single-cut factors, each of which is a
//! principal root whose own branch cut coincides exactly with its segment. This fixes the
//! branch without any continuation state.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;

/// Distance below which a point is considered to sit on a cut.
pub const ON_CUT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Focusing,
    Defocusing,
}

/// Raw surface description, as read from input files.
#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceSpec {
    /// Upper endpoints `α_j = a_j + i b_j` of the vertical cuts `[ᾱ_j, α_j]`.
    Focusing { alphas: Vec<C64> },
    /// Real bands `(β_j, α_j)`.
    Defocusing { bands: Vec<(f64, f64)> },
}

/// JSON form: `{"mode": "focusing", "alphas": [[re, im], ...]}` or
/// `{"mode": "defocusing", "bands": [[beta, alpha], ...]}` (mode may be omitted for bands).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bands: Option<Vec<[f64; 2]>>,
}

impl SurfaceJson {
    pub fn into_spec(self) -> Result<SurfaceSpec> {
        match (self.mode, self.alphas, self.bands) {
            (Some(Mode::Focusing) | None, Some(alphas), None) => Ok(SurfaceSpec::Focusing {
                alphas: alphas.iter().map(|a| C64::new(a[0], a[1])).collect(),
            }),
            (Some(Mode::Defocusing) | None, None, Some(bands)) => Ok(SurfaceSpec::Defocusing {
                bands: bands.iter().map(|b| (b[0], b[1])).collect(),
            }),
            _ => Err(Error::InvalidArgument(
                "surface needs either focusing \"alphas\" or defocusing \"bands\"".into(),
            )),
        }
    }
}

impl From<&SurfaceSpec> for SurfaceJson {
    fn from(spec: &SurfaceSpec) -> Self {
        match spec {
            SurfaceSpec::Focusing { alphas } => SurfaceJson {
                mode: Some(Mode::Focusing),
                alphas: Some(alphas.iter().map(|a| [a.re, a.im]).collect()),
                bands: None,
            },
            SurfaceSpec::Defocusing { bands } => SurfaceJson {
                mode: Some(Mode::Defocusing),
                alphas: None,
                bands: Some(bands.iter().map(|b| [b.0, b.1]).collect()),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    Main,
    Second,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::Main => 1.0,
            Sheet::Second => -1.0,
        }
    }

    pub fn flip(self) -> Sheet {
        match self {
            Sheet::Main => Sheet::Second,
            Sheet::Second => Sheet::Main,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SheetedPoint {
    pub z: C64,
    pub sheet: Sheet,
}

impl SheetedPoint {
    pub fn main(z: C64) -> Self {
        SheetedPoint { z, sheet: Sheet::Main }
    }

    /// Hyperelliptic involution `(z, R) ↦ (z, −R)`.
    pub fn involution(self) -> Self {
        SheetedPoint { z: self.z, sheet: self.sheet.flip() }
    }
}

/// Points on the surface, e.g. the zeros of `λ² − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Divisor {
    pub points: Vec<SheetedPoint>,
}

/// Side of an oriented cut; `Plus` is on the left of the orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// Oriented straight cut from `start` to `end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cut {
    pub start: C64,
    pub end: C64,
}

impl Cut {
    pub fn center(&self) -> C64 {
        (self.start + self.end) * 0.5
    }

    /// Half of the oriented displacement `end − start`.
    pub fn half(&self) -> C64 {
        (self.end - self.start) * 0.5
    }

    /// Point `center + half·t` for `t ∈ [−1, 1]`.
    pub fn point(&self, t: f64) -> C64 {
        self.center() + self.half() * t
    }

    pub fn distance(&self, z: C64) -> f64 {
        segment_distance(z, self.start, self.end)
    }

    /// `((z − end)/(z − start))^{1/4}` with its branch cut exactly on this segment.
    fn quartic_factor(&self, z: C64) -> C64 {
        ((z - self.end) / (z - self.start)).powf(0.25)
    }

    /// `√((z − start)(z − end))` with branch cut on this segment, `~ z` at infinity.
    pub fn sqrt_factor(&self, z: C64) -> C64 {
        let w = self.half();
        w * ((z - self.end) / w).sqrt() * ((z - self.start) / w).sqrt()
    }
}

pub(crate) fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let s = ((z - a) * d.conj()).re / len2;
    let s = s.clamp(0.0, 1.0);
    (z - (a + d * s)).norm()
}

/// A validated surface. Immutable; every evaluation below is a pure function.
#[derive(Clone, Debug, PartialEq)]
pub struct Surface {
    spec: SurfaceSpec,
    mode: Mode,
    cuts: Vec<Cut>,
    band_heights: Vec<f64>,
}

/// Checks the raw endpoint data and builds the cut list in the given numbering.
pub fn validate(spec: SurfaceSpec) -> Result<Surface> {
    let (mode, cuts, band_heights) = match &spec {
        SurfaceSpec::Focusing { alphas } => {
            if alphas.is_empty() {
                return Err(Error::EmptySurface);
            }
            for (j, a) in alphas.iter().enumerate() {
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return Err(Error::InvalidArgument(format!("alpha {j} is not finite")));
                }
                if alphas[..j].iter().any(|b| (a - b).norm() < ON_CUT_TOLERANCE) {
                    return Err(Error::DuplicateBranchPoint(j));
                }
            }
            for (j, a) in alphas.iter().enumerate() {
                if a.im <= 0.0 {
                    return Err(Error::NonPositiveBandHeight(j, a.im));
                }
            }
            // Vertical cuts through the real axis overlap as soon as they share a real part.
            for j in 0..alphas.len() {
                for k in 0..j {
                    if (alphas[j].re - alphas[k].re).abs() < ON_CUT_TOLERANCE {
                        return Err(Error::OverlappingCuts(k, j));
                    }
                }
            }
            let cuts = alphas.iter().map(|a| Cut { start: a.conj(), end: *a }).collect();
            let b = alphas.iter().map(|a| a.im).collect();
            (Mode::Focusing, cuts, b)
        }
        SurfaceSpec::Defocusing { bands } => {
            if bands.is_empty() {
                return Err(Error::EmptySurface);
            }
            let flat: Vec<f64> = bands.iter().flat_map(|&(b, a)| [b, a]).collect();
            if flat.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("band endpoint is not finite".into()));
            }
            for (i, x) in flat.iter().enumerate() {
                if flat[..i].iter().any(|y| (x - y).abs() < ON_CUT_TOLERANCE) {
                    return Err(Error::DuplicateBranchPoint(i));
                }
            }
            for i in 1..flat.len() {
                if flat[i] <= flat[i - 1] {
                    return Err(Error::OrderingViolation(i));
                }
            }
            let cuts = bands
                .iter()
                .map(|&(b, a)| Cut { start: C64::new(b, 0.0), end: C64::new(a, 0.0) })
                .collect();
            let heights = bands.iter().map(|&(b, a)| 0.5 * (a - b)).collect();
            (Mode::Defocusing, cuts, heights)
        }
    };
    Ok(Surface { spec, mode, cuts, band_heights })
}

impl Surface {
    pub fn spec(&self) -> &SurfaceSpec {
        &self.spec
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn genus(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    /// Band-length vector: `Im α_j` (focusing) or `(α_j − β_j)/2` (defocusing).
    pub fn band_heights(&self) -> &[f64] {
        &self.band_heights
    }

    pub fn band_sum(&self) -> f64 {
        self.band_heights.iter().sum()
    }

    /// Base point of the Abel map: start of cut 0 (`ᾱ_0` or `β_0`).
    pub fn base_point(&self) -> C64 {
        self.cuts[0].start
    }

    pub fn branch_points(&self) -> Vec<C64> {
        self.cuts.iter().flat_map(|c| [c.start, c.end]).collect()
    }

    pub fn is_branch_point(&self, z: C64) -> bool {
        self.cuts
            .iter()
            .any(|c| (c.start - z).norm() < ON_CUT_TOLERANCE || (c.end - z).norm() < ON_CUT_TOLERANCE)
    }

    /// Largest modulus of a branch point.
    pub fn radius(&self) -> f64 {
        self.branch_points().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Index of the cut `z` lies on, if any.
    pub fn cut_containing(&self, z: C64) -> Option<usize> {
        self.cuts.iter().position(|c| c.distance(z) < ON_CUT_TOLERANCE)
    }

    /// Renumbered copy of this surface (`order[k]` is the old index of the new cut `k`).
    pub fn relabeled(&self, order: &[usize]) -> Result<Surface> {
        if order.len() != self.cuts.len() {
            return Err(Error::Dimension { expected: self.cuts.len(), got: order.len() });
        }
        match &self.spec {
            SurfaceSpec::Focusing { alphas } => {
                validate(SurfaceSpec::Focusing { alphas: order.iter().map(|&k| alphas[k]).collect() })
            }
            SurfaceSpec::Defocusing { .. } => Err(Error::WrongMode("focusing")),
        }
    }

    /// `R(z)` on the main sheet without the on-cut check.
    pub(crate) fn r_main(&self, z: C64) -> C64 {
        self.cuts.iter().map(|c| c.sqrt_factor(z)).product()
    }

    /// `R(z)` with all factors except cut `skip`.
    pub(crate) fn r_without(&self, z: C64, skip: usize) -> C64 {
        self.cuts
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != skip)
            .map(|(_, c)| c.sqrt_factor(z))
            .product()
    }

    fn check_off_cuts(&self, z: C64) -> Result<()> {
        match self.cut_containing(z) {
            Some(j) => Err(Error::OnBranchCut(format!("{z}"), j)),
            None => Ok(()),
        }
    }

    /// `R(z) = √∏(z − start_j)(z − end_j)`, normalised by `R/z^{g+1} → 1` at `∞₊`.
    pub fn eval_r(&self, p: SheetedPoint) -> Result<C64> {
        self.check_off_cuts(p.z)?;
        Ok(self.r_main(p.z) * p.sheet.sign())
    }

    /// One-sided value of `R` at parameter `t ∈ (−1, 1)` on cut `j` (main sheet).
    pub fn eval_r_boundary(&self, j: usize, t: f64, side: Side) -> C64 {
        let cut = &self.cuts[j];
        let z = cut.point(t);
        let local = cut.half() * C64::new(0.0, side.sign() * ((1.0 - t) * (1.0 + t)).sqrt());
        local * self.r_without(z, j)
    }

    /// `λ(z) = (∏ (z − end_j)/(z − start_j))^{1/4}` with `λ → 1` at infinity.
    pub fn eval_lambda(&self, z: C64) -> Result<C64> {
        self.check_off_cuts(z)?;
        Ok(self.lambda_unchecked(z))
    }

    pub(crate) fn lambda_unchecked(&self, z: C64) -> C64 {
        self.cuts.iter().map(|c| c.quartic_factor(z)).product()
    }

    /// One-sided value of `λ` at parameter `t ∈ (−1, 1)` on cut `j`.
    pub fn eval_lambda_boundary(&self, j: usize, t: f64, side: Side) -> C64 {
        let cut = &self.cuts[j];
        let z = cut.point(t);
        let modulus = ((1.0 - t) / (1.0 + t)).powf(0.25);
        let phase = C64::from_polar(1.0, side.sign() * std::f64::consts::FRAC_PI_4);
        let rest: C64 = self
            .cuts
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .map(|(_, c)| c.quartic_factor(z))
            .product();
        phase * modulus * rest
    }

    /// Numerator `∏(z − end_j) − ∏(z − start_j)` of `λ⁴ − 1`; degree `g`.
    pub fn lambda4_numerator(&self) -> Poly {
        let ends: Vec<C64> = self.cuts.iter().map(|c| c.end).collect();
        let starts: Vec<C64> = self.cuts.iter().map(|c| c.start).collect();
        let mut p = Poly::from_roots(&ends).sub(&Poly::from_roots(&starts));
        p.coeffs.truncate(self.genus() + 1);
        p
    }

    fn lambda4_numerator_direct(&self, x: f64) -> C64 {
        let z = C64::new(x, 0.0);
        let a: C64 = self.cuts.iter().map(|c| z - c.end).product();
        let b: C64 = self.cuts.iter().map(|c| z - c.start).product();
        a - b
    }
}

/// Zeros `z_1 > … > z_g` of `λ² − 1` on the surface (the divisor `D₀`).
///
/// The `g` real roots of the numerator of `λ⁴ − 1` come from companion-matrix eigenvalues
/// followed by a Newton polish; each root is placed on the sheet where `λ² = +1`.
pub fn divisor_d0(surface: &Surface) -> Result<Divisor> {
    let g = surface.genus();
    if g == 0 {
        return Ok(Divisor { points: Vec::new() });
    }
    // Focusing numerators are purely imaginary on the real line, defocusing ones real.
    let rot = match surface.mode() {
        Mode::Focusing => C64::new(0.0, -1.0),
        Mode::Defocusing => C64::new(1.0, 0.0),
    };
    let num = surface.lambda4_numerator();
    let real: Vec<f64> = num.coeffs.iter().map(|c| (c * rot).re).collect();
    let lead = real[g];
    if lead == 0.0 || !lead.is_finite() {
        return Err(Error::RootFindingFailure("vanishing leading coefficient".into()));
    }
    let companion = DMatrix::<f64>::from_fn(g, g, |i, j| {
        if j == g - 1 {
            -real[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eig = companion.complex_eigenvalues();
    let scale = 1.0 + surface.radius();
    let mut roots = Vec::with_capacity(g);
    for ev in eig.iter() {
        if ev.im.abs() > 1e-6 * scale {
            return Err(Error::RootFindingFailure(format!("non-real root {ev}")));
        }
        roots.push(ev.re);
    }
    let deriv = |x: f64| -> f64 {
        (1..=g).map(|k| k as f64 * real[k] * x.powi(k as i32 - 1)).sum()
    };
    for x in roots.iter_mut() {
        let value = (surface.lambda4_numerator_direct(*x) * rot).re;
        let d = deriv(*x);
        if d != 0.0 {
            let step = value / d;
            if step.abs() < 1e-3 * scale {
                *x -= step;
            }
        }
    }
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut points = Vec::with_capacity(g);
    for x in roots {
        let z = C64::new(x, 0.0);
        let l2 = surface.eval_lambda(z)?.powi(2);
        let sheet = if (l2 - 1.0).norm() < (l2 + 1.0).norm() { Sheet::Main } else { Sheet::Second };
        points.push(SheetedPoint { z, sheet });
    }
    Ok(Divisor { points })
}

/// Random valid surface of the given genus with well separated cuts.
pub fn random_surface<R: Rng>(rng: &mut R, mode: Mode, genus: usize) -> Surface {
    let n = genus + 1;
    let spec = match mode {
        Mode::Focusing => {
            let mut a = 0.0;
            let mut alphas = Vec::with_capacity(n);
            for _ in 0..n {
                let b = rng.gen_range(0.3..2.0);
                alphas.push(C64::new(a, b));
                a += rng.gen_range(0.25..0.8);
            }
            let shift = a * 0.5;
            // Rightmost cut first so that cut 0 sits at the right end of the spectrum.
            alphas.reverse();
            SurfaceSpec::Focusing { alphas: alphas.into_iter().map(|z| z - shift).collect() }
        }
        Mode::Defocusing => {
            let mut x = rng.gen_range(-1.0..0.0);
            let mut bands = Vec::with_capacity(n);
            for _ in 0..n {
                let beta = x;
                let alpha = beta + rng.gen_range(0.3..1.5);
                bands.push((beta, alpha));
                x = alpha + rng.gen_range(0.3..1.2);
            }
            SurfaceSpec::Defocusing { bands }
        }
    };
    validate(spec).expect("random surface is valid by construction")
}
