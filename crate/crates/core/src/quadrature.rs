//! Contour integrals of `h(z)/R(z)`.
//!
//! Loops around a single cut collapse onto the cut, where `R₊ = −R₋`. With
//! `z = c + w t` the local pair `(z − start)(z − end)` becomes `w²(t² − 1)`, so the
//! integrand carries the exact Chebyshev weight `(1 − t²)^{−1/2}` and the remaining factor
//! is analytic. Open paths are polylines integrated with adaptive Gauss–Legendre; segments
//! that start or end at a branch point use `s = (1 − cos θ)/2`, which removes the
//! inverse square-root endpoint behaviour.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::surface::{segment_distance, Sheet, Side, Surface, ON_CUT_TOLERANCE};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const CHEBYSHEV_START: usize = 64;
pub const CHEBYSHEV_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Negative,
}

/// Closed loop around cut `cut` on the main sheet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CutLoop {
    pub cut: usize,
    pub orientation: Orientation,
}

impl CutLoop {
    /// A-cycles are negatively oriented loops.
    pub fn a_cycle(cut: usize) -> Self {
        CutLoop { cut, orientation: Orientation::Negative }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSegment {
    pub from: C64,
    pub to: C64,
    pub sheet: Sheet,
}

/// Polyline on the surface; each segment carries its sheet.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SheetPath {
    pub segments: Vec<PathSegment>,
}

impl SheetPath {
    pub fn from_points(points: &[C64], sheet: Sheet) -> Self {
        let segments = points
            .windows(2)
            .filter(|w| w[0] != w[1])
            .map(|w| PathSegment { from: w[0], to: w[1], sheet })
            .collect();
        SheetPath { segments }
    }

    pub fn reversed(&self) -> Self {
        SheetPath {
            segments: self
                .segments
                .iter()
                .rev()
                .map(|s| PathSegment { from: s.to, to: s.from, sheet: s.sheet })
                .collect(),
        }
    }

    pub fn on_sheet(mut self, sheet: Sheet) -> Self {
        for s in &mut self.segments {
            s.sheet = sheet;
        }
        self
    }

    /// Main-sheet path from the base point to `target` avoiding every cut interior.
    ///
    /// The path drops vertically from the base point below all cuts, runs horizontally,
    /// then climbs to the target; when the climb would hit a cut, it climbs on a nearby
    /// free vertical line and finishes with a horizontal step.
    pub fn template(surface: &Surface, target: C64) -> Result<SheetPath> {
        let base = surface.base_point();
        if (target - base).norm() == 0.0 {
            return Ok(SheetPath::default());
        }
        let low = floor_level(surface);
        let xs: Vec<f64> = surface.branch_points().iter().map(|z| z.re).collect();
        let min_x = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_x = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let gap = min_vertical_gap(surface);
        let mut candidates = vec![target.re, target.re + 0.5 * gap, target.re - 0.5 * gap];
        candidates.push(max_x.max(target.re) + 1.0);
        candidates.push(min_x.min(target.re) - 1.0);
        let mut last_err = None;
        for x in candidates {
            let pts = [
                base,
                C64::new(base.re, low.min(target.im)),
                C64::new(x, low.min(target.im)),
                C64::new(x, target.im),
                target,
            ];
            let path = SheetPath::from_points(&pts, Sheet::Main);
            match check_path(surface, &path) {
                Ok(()) => return Ok(path),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or(Error::PathCrossesCut(0)))
    }
}

/// Height of the horizontal leg of path templates, strictly below every cut.
pub(crate) fn floor_level(surface: &Surface) -> f64 {
    let pts = surface.branch_points();
    let min_im = pts.iter().map(|z| z.im).fold(0.0, f64::min);
    let xs: Vec<f64> = pts.iter().map(|z| z.re).collect();
    let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    min_im - (0.25 * spread).max(0.5)
}

/// Smallest horizontal distance between distinct vertical lines through branch points.
fn min_vertical_gap(surface: &Surface) -> f64 {
    let mut xs: Vec<f64> = surface.branch_points().iter().map(|z| z.re).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut gap = f64::INFINITY;
    for w in xs.windows(2) {
        let d = w[1] - w[0];
        if d > ON_CUT_TOLERANCE {
            gap = gap.min(d);
        }
    }
    if gap.is_finite() {
        gap
    } else {
        1.0
    }
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_meet(p1: C64, p2: C64, q1: C64, q2: C64) -> bool {
    let o1 = cross(p2 - p1, q1 - p1);
    let o2 = cross(p2 - p1, q2 - p1);
    let o3 = cross(q2 - q1, p1 - q1);
    let o4 = cross(q2 - q1, p2 - q1);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    segment_distance(p1, q1, q2) < ON_CUT_TOLERANCE
        || segment_distance(p2, q1, q2) < ON_CUT_TOLERANCE
        || segment_distance(q1, p1, p2) < ON_CUT_TOLERANCE
        || segment_distance(q2, p1, p2) < ON_CUT_TOLERANCE
}

/// Segment leaving branch point `at` in direction `dir` runs into the cut `at → other`.
fn runs_along(at: C64, other: C64, dir: C64) -> bool {
    let c = other - at;
    let scale = c.norm() * dir.norm();
    cross(c, dir).abs() <= 1e-12 * scale && (c * dir.conj()).re > 0.0
}

/// Rejects paths touching a cut anywhere except at branch points they start or end on.
pub fn check_path(surface: &Surface, path: &SheetPath) -> Result<()> {
    for seg in &path.segments {
        for (j, cut) in surface.cuts().iter().enumerate() {
            let near = |p: C64, q: C64| (p - q).norm() < ON_CUT_TOLERANCE;
            let from_end = if near(seg.from, cut.start) {
                Some((cut.start, cut.end, seg.to - seg.from))
            } else if near(seg.from, cut.end) {
                Some((cut.end, cut.start, seg.to - seg.from))
            } else {
                None
            };
            let to_end = if near(seg.to, cut.start) {
                Some((cut.start, cut.end, seg.from - seg.to))
            } else if near(seg.to, cut.end) {
                Some((cut.end, cut.start, seg.from - seg.to))
            } else {
                None
            };
            match (from_end, to_end) {
                (Some(_), Some(_)) => return Err(Error::PathCrossesCut(j)),
                (Some((at, other, dir)), None) | (None, Some((at, other, dir))) => {
                    if runs_along(at, other, dir) {
                        return Err(Error::PathCrossesCut(j));
                    }
                    // Two non-collinear segments sharing an end meet only there.
                    let far = if from_end.is_some() { seg.to } else { seg.from };
                    if segment_distance(far, cut.start, cut.end) < ON_CUT_TOLERANCE
                        || segment_distance(other, at, far) < ON_CUT_TOLERANCE
                    {
                        return Err(Error::PathCrossesCut(j));
                    }
                }
                (None, None) => {
                    if segments_meet(seg.from, seg.to, cut.start, cut.end) {
                        return Err(Error::PathCrossesCut(j));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Gauss–Legendre rule on `[−1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

/// Chebyshev–Gauss nodes `cos((2k − 1)π/2N)`; every weight equals `π/N`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (1..=n).map(|k| ((2 * k - 1) as f64 * PI / (2 * n) as f64).cos()).collect()
}

fn gl_panel<F>(f: &F, a: f64, b: f64, out: &mut [C64], buf: &mut [C64])
where
    F: Fn(f64, &mut [C64]),
{
    let rule = gl_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        f(mid + half * x, buf);
        for (o, v) in out.iter_mut().zip(buf.iter()) {
            *o += v * (w * half);
        }
    }
}

/// Adaptive Gauss–Legendre integral of a vector-valued integrand over `[a, b]`.
pub fn adaptive_integral<F>(f: F, a: f64, b: f64, dim: usize, tol: f64) -> Result<Vec<C64>>
where
    F: Fn(f64, &mut [C64]),
{
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    let mut whole = vec![C64::new(0.0, 0.0); dim];
    gl_panel(&f, a, b, &mut whole, &mut buf);
    let mut total = vec![C64::new(0.0, 0.0); dim];
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut panels = 0usize;
    let (mut left, mut right) = (vec![C64::new(0.0, 0.0); dim], vec![C64::new(0.0, 0.0); dim]);
    let width = (b - a).abs().max(f64::MIN_POSITIVE);
    // Absolute tolerance for O(1) results, relative for large ones.
    let scale = stack[0].2.iter().map(|c| c.norm()).fold(1.0, f64::max);
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        gl_panel(&f, lo, mid, &mut left, &mut buf);
        gl_panel(&f, mid, hi, &mut right, &mut buf);
        panels += 2;
        let err = est
            .iter()
            .zip(left.iter().zip(&right))
            .map(|(e, (l, r))| (e - l - r).norm())
            .fold(0.0, f64::max);
        let local_tol = tol * scale * ((hi - lo).abs() / width).max(1e-3);
        if err <= local_tol || depth >= 48 {
            if depth >= 48 && err > 1e3 * local_tol {
                return Err(Error::QuadratureNonConvergence(format!(
                    "adaptive panel [{lo}, {hi}] error {err:e}"
                )));
            }
            for ((t, l), r) in total.iter_mut().zip(&left).zip(&right) {
                *t += l + r;
            }
        } else {
            stack.push((mid, hi, right.clone(), depth + 1));
            stack.push((lo, mid, left.clone(), depth + 1));
        }
        if panels > 2_000_000 {
            return Err(Error::QuadratureNonConvergence("panel budget exhausted".into()));
        }
    }
    Ok(total)
}

/// `∮ z^m / R(z) dz` around cut `loop_.cut` for `m = 0..=max_degree`.
///
/// Computed as `∓2i · (π/N) Σ_k z_k^m / R̃(z_k)` over Chebyshev nodes, where `R̃` is `R`
/// with the cut's own pair divided out; `N` doubles from 64 until successive values agree.
pub fn loop_moments(surface: &Surface, loop_: CutLoop, max_degree: usize, tol: f64) -> Result<Vec<C64>> {
    let j = loop_.cut;
    if j >= surface.cuts().len() {
        return Err(Error::InvalidArgument(format!("cut index {j} out of range")));
    }
    let cut = surface.cuts()[j];
    // Negative loop = 2 ∫_start^end h/R₊ dz = −2i ∫ h/R̃ dt/√(1−t²).
    let factor = match loop_.orientation {
        Orientation::Negative => C64::new(0.0, -2.0),
        Orientation::Positive => C64::new(0.0, 2.0),
    };
    let sums = |n: usize| -> Vec<C64> {
        let mut acc = vec![C64::new(0.0, 0.0); max_degree + 1];
        for t in chebyshev_nodes(n) {
            let z = cut.point(t);
            let mut v = 1.0 / surface.r_without(z, j);
            for a in acc.iter_mut() {
                *a += v;
                v *= z;
            }
        }
        acc.into_iter().map(|a| a * factor * (PI / n as f64)).collect()
    };
    let mut n = CHEBYSHEV_START;
    let mut prev = sums(n);
    while n < CHEBYSHEV_CAP {
        n *= 2;
        let next = sums(n);
        let diff = prev.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = next.iter().map(|a| a.norm()).fold(1.0, f64::max);
        if diff <= tol * scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNonConvergence(format!("cut {j} loop at N = {n}")))
}

/// `∮ numerator(z)/R(z) dz` around a single cut.
pub fn loop_integral(surface: &Surface, loop_: CutLoop, numerator: &Poly, tol: f64) -> Result<C64> {
    let deg = numerator.coeffs.len().saturating_sub(1);
    let m = loop_moments(surface, loop_, deg, tol)?;
    Ok(numerator.coeffs.iter().zip(&m).map(|(c, v)| c * v).sum())
}

/// `∫ z^m / R(z) dz` along `path` for `m = 0..=max_degree`.
pub fn path_moments(surface: &Surface, path: &SheetPath, max_degree: usize, tol: f64) -> Result<Vec<C64>> {
    check_path(surface, path)?;
    let mut total = vec![C64::new(0.0, 0.0); max_degree + 1];
    for seg in &path.segments {
        let part = segment_moments(surface, seg, max_degree, tol)?;
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    Ok(total)
}

fn segment_moments(surface: &Surface, seg: &PathSegment, max_degree: usize, tol: f64) -> Result<Vec<C64>> {
    let d = seg.to - seg.from;
    let sign = seg.sheet.sign();
    let singular = surface.is_branch_point(seg.from) || surface.is_branch_point(seg.to);
    let dim = max_degree + 1;
    let fill = |z: C64, jac: C64, out: &mut [C64]| {
        let mut v = jac * sign / surface.r_main(z);
        if !v.is_finite() {
            // Only reachable when a node rounds onto the branch point, where the
            // substituted integrand vanishes.
            v = C64::new(0.0, 0.0);
        }
        for o in out.iter_mut() {
            *o = v;
            v *= z;
        }
    };
    if singular {
        adaptive_integral(
            |theta, out| {
                let s = 0.5 * (1.0 - theta.cos());
                fill(seg.from + d * s, d * (0.5 * theta.sin()), out)
            },
            0.0,
            PI,
            dim,
            tol,
        )
    } else {
        adaptive_integral(|s, out| fill(seg.from + d * s, d, out), 0.0, 1.0, dim, tol)
    }
}

/// `∫ numerator(z)/R(z) dz` along a sheet path.
pub fn path_integral(surface: &Surface, path: &SheetPath, numerator: &Poly, tol: f64) -> Result<C64> {
    let deg = numerator.coeffs.len().saturating_sub(1);
    let m = path_moments(surface, path, deg, tol)?;
    Ok(numerator.coeffs.iter().zip(&m).map(|(c, v)| c * v).sum())
}

/// `∫ z^m / R_±(z) dz` along cut `j` from its start to the point with parameter `t`.
///
/// With `t' = −cos θ` the Chebyshev weight disappears and the integrand is smooth.
pub fn cut_side_moments(
    surface: &Surface,
    j: usize,
    t: f64,
    side: Side,
    max_degree: usize,
    tol: f64,
) -> Result<Vec<C64>> {
    let cut = surface.cuts()[j];
    let theta_end = (-t).clamp(-1.0, 1.0).acos();
    // 1/R± = ∓ i / (w √(1−t²) R̃), dz = w dt.
    let factor = C64::new(0.0, -side.sign());
    adaptive_integral(
        |theta, out| {
            let z = cut.point(-theta.cos());
            let mut v = factor / surface.r_without(z, j);
            for o in out.iter_mut() {
                *o = v;
                v *= z;
            }
        },
        0.0,
        theta_end,
        max_degree + 1,
        tol,
    )
}
