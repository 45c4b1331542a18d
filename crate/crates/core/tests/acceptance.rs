//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use fgnls::amplitude::{AmplitudeContext, PhasePoint};
use fgnls::analysis::{
    degeneration_sweep, divisor_check, half_period_table, nls_residual, psi_grid, torus_extrema, DnlsReport,
    PREDICTED_DIAGONAL_SLOPE, REFINE_STEPS,
};
use fgnls::grid::Axis;
use fgnls::periods::PeriodData;
use fgnls::surface::{random_surface, validate, Mode, Surface, SurfaceSpec};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn focusing(alphas: &[(f64, f64)]) -> Surface {
    validate(SurfaceSpec::Focusing { alphas: alphas.iter().map(|&(a, b)| C64::new(a, b)).collect() }).unwrap()
}

fn example_g2() -> Surface {
    focusing(&[(0.1, 2.0), (0.0, 0.5), (-0.1, 1.0)])
}

fn figure_g4() -> Surface {
    focusing(&[(0.2, 1.0), (0.1, 1.0), (0.0, 1.0), (-0.1, 1.0), (-0.2, 1.0)])
}

fn figure_g3() -> Surface {
    focusing(&[(0.15, 1.0), (0.05, 1.0), (-0.05, 1.0), (-0.15, 1.0)])
}

fn ctx(s: &Surface) -> Result<AmplitudeContext, String> {
    AmplitudeContext::build(s).map_err(|e| e.to_string())
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn near(at: &[f64], target: f64) -> f64 {
    at.iter().map(|&w| (w - target).abs().min(1.0 - (w - target).abs())).fold(0.0, f64::max)
}

/// 1. Torus extrema of the g=2 example.
fn example_extrema() -> Outcome {
    let start = Instant::now();
    let c = ctx(&example_g2())?;
    let r = torus_extrema(&c, 200, REFINE_STEPS).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let max_err = (r.max.value - 1.0).abs();
    let min_err = (r.min.value - 1.0 / 7.0).abs();
    let msg = format!(
        "max {:.12} at {:?} (err {max_err:.1e}), min {:.12} at {:?} (err {min_err:.1e}), {secs:.1} s",
        r.max.value, r.max.at, r.min.value, r.min.at
    );
    ensure(
        max_err < 1e-6 && near(&r.max.at, 0.0) < 1e-3 && min_err < 1e-5 && near(&r.min.at, 0.5) < 1e-3 && secs < 60.0,
        msg,
    )
}

/// 2. Half-period identity on random focusing surfaces.
fn half_period_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for k in 0..20 {
        let s = random_surface(&mut rng, Mode::Focusing, 1 + k % 4);
        let table = half_period_table(&ctx(&s)?).map_err(|e| e.to_string())?;
        rows += table.len();
        worst = table.iter().map(|r| r.discrepancy).fold(worst, f64::max);
    }
    ensure(worst < 1e-7, format!("20 surfaces, {rows} half-periods, worst discrepancy {worst:.2e} (tol 1e-7)"))
}

/// 3. Amplitude bound on the figure surfaces.
fn amplitude_bound() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, s) in [("g=4", figure_g4()), ("g=3", figure_g3())] {
        let c = ctx(&s)?;
        let zero = PhasePoint::zero(c.genus());
        let origin = c.psi_value(0.0, 0.0, &zero).map_err(|e| e.to_string())?.norm();
        let x = Axis::new("x", -2.0, 2.0, 128).unwrap();
        let t = Axis::new("t", -1.0, 1.0, 128).unwrap();
        let (max, _) = psi_grid(&c, x, t, &zero).map_err(|e| e.to_string())?.max_abs();
        let sum = c.band_sum;
        ok &= (origin - sum).abs() < 1e-5 && max <= sum + 1e-6;
        parts.push(format!("{name}: |psi(0,0)| = {origin:.10} (sum b = {sum}), window max {max:.10}"));
    }
    ensure(ok, parts.join("; "))
}

/// 4. Period-matrix fingerprints on random surfaces.
fn period_fingerprints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut parts = Vec::new();
    let mut ok = true;
    for mode in [Mode::Focusing, Mode::Defocusing] {
        let (mut sym, mut re, mut eig): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
        for k in 0..50 {
            let s = random_surface(&mut rng, mode, 1 + k % 5);
            let pd = PeriodData::compute(&s).map_err(|e| e.to_string())?;
            sym = sym.max(pd.tau_symmetry_defect());
            re = re.max(pd.re_tau_defect());
            eig = eig.min(pd.im_tau_min_eigenvalue());
        }
        ok &= sym < 1e-8 && re < 1e-7 && eig > 0.0;
        parts.push(format!("{mode:?}: symmetry {sym:.1e}, Re pattern {re:.1e}, min eig(Im tau) {eig:.3e}"));
    }
    ensure(ok, format!("50 surfaces per mode, g=1..5; {}", parts.join("; ")))
}

/// 5. Theta positivity at random real arguments.
fn theta_positivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst, mut imag): (f64, f64) = (f64::INFINITY, 0.0);
    for k in 0..20 {
        let mode = if k % 2 == 0 { Mode::Focusing } else { Mode::Defocusing };
        let c = ctx(&random_surface(&mut rng, mode, 1 + k % 4))?;
        let (ratio, im) = fgnls::analysis::theta_positivity(&c, 10_000, &mut rng).map_err(|e| e.to_string())?;
        worst = worst.min(ratio);
        imag = imag.max(im);
    }
    ensure(
        worst > 0.0 && imag < 1e-9,
        format!("20 surfaces x 10^4 points: min Theta/Theta(0) {worst:.4e}, max |Im|/|Theta| {imag:.1e}"),
    )
}

/// 6. Jump condition and Y₁ on random surfaces.
fn rhp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut jump, mut y1): (f64, f64) = (0.0, 0.0);
    let mut cases = 0;
    for mode in [Mode::Focusing, Mode::Defocusing] {
        for g in 1..=3 {
            for _ in 0..2 {
                let c = ctx(&random_surface(&mut rng, mode, g))?;
                let omega = PhasePoint::new((0..g).map(|_| rng.gen()).collect());
                jump = jump.max(c.jump_residual(&omega, 32).map_err(|e| e.to_string())?);
                let fit = c.y1_coefficient(&omega).map_err(|e| e.to_string())?[(0, 1)];
                let formula = c.y1_12_formula(&omega).map_err(|e| e.to_string())?;
                y1 = y1.max((fit - formula).norm());
                cases += 1;
            }
        }
    }
    ensure(
        jump < 1e-6 && y1 < 1e-5,
        format!("{cases} cases, g<=3: max jump residual {jump:.2e} (tol 1e-6), max |(Y1)12 - formula| {y1:.2e} (tol 1e-5)"),
    )
}

/// 7. Second-order convergence of the NLS residual.
fn pde_residual() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut parts = Vec::new();
    let mut ok = true;
    for mode in [Mode::Focusing, Mode::Defocusing] {
        for g in 1..=2 {
            let c = ctx(&random_surface(&mut rng, mode, g))?;
            let o = PhasePoint::new((0..g).map(|_| rng.gen()).collect());
            let coarse = nls_residual(&c, (-0.5, 0.5), (-0.25, 0.25), 64, &o).map_err(|e| e.to_string())?;
            let fine = nls_residual(&c, (-0.5, 0.5), (-0.25, 0.25), 128, &o).map_err(|e| e.to_string())?;
            let ratio = coarse / fine;
            ok &= (3.5..=4.5).contains(&ratio);
            parts.push(format!("{mode:?} g={g}: {coarse:.2e} -> {fine:.2e}, ratio {ratio:.3}"));
        }
    }
    ensure(ok, parts.join("; "))
}

/// 8. Degeneration of the non-γ₀ cuts.
fn degeneration() -> Outcome {
    let xis = [1.0, 0.1, 0.01, 0.001];
    let mut parts = Vec::new();
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (name, s) in [("example g=2", example_g2()), ("random g=3", random_surface(&mut rng, Mode::Focusing, 3))] {
        let c = degeneration_sweep(&s, &xis, 32).map_err(|e| e.to_string())?;
        let sups: Vec<String> = c.points.iter().map(|p| format!("{:.2e}", p.sup_f_minus_one)).collect();
        let slopes = c.diagonal_slopes();
        let worst = slopes.iter().map(|s| (s / PREDICTED_DIAGONAL_SLOPE - 1.0).abs()).fold(0.0, f64::max);
        let eig = c.min_eigenvalue_slope().unwrap_or(f64::NAN);
        ok &= c.is_monotone() && worst <= 0.2;
        parts.push(format!(
            "{name}: sup|f-1| [{}], diag slopes {:?} vs 1/pi = {:.4} (worst rel {worst:.3}), min-eig slope {eig:.4}",
            sups.join(", "),
            slopes.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>(),
            1.0 / PI
        ));
    }
    ensure(ok, parts.join("; "))
}

/// 9. Divisor residuals.
fn divisor_residuals() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut surfaces = vec![example_g2()];
    for mode in [Mode::Focusing, Mode::Defocusing] {
        for g in 1..=3 {
            surfaces.push(random_surface(&mut rng, mode, g));
        }
    }
    let (mut d, mut inv): (f64, f64) = (0.0, 0.0);
    for s in &surfaces {
        let r = divisor_check(&ctx(s)?).map_err(|e| e.to_string())?;
        d = d.max(r.residual);
        inv = inv.max(r.involuted);
    }
    ensure(
        d < 1e-5 && inv < 1e-5,
        format!("{} surfaces, g<=3: max residual {d:.2e}, involuted {inv:.2e} (tol 1e-5)", surfaces.len()),
    )
}

/// 10. Defocusing bounds for bands (0, 1), (2, 2.5).
fn dnls_bounds() -> Outcome {
    let s = validate(SurfaceSpec::Defocusing { bands: vec![(0.0, 1.0), (2.0, 2.5)] }).unwrap();
    let c = ctx(&s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut omegas = vec![PhasePoint::zero(1)];
    omegas.extend((0..4).map(|_| PhasePoint::new(vec![rng.gen()])));
    let x = Axis::new("x", -10.0, 10.0, 128).unwrap();
    let t = Axis::new("t", -2.0, 2.0, 64).unwrap();
    let r: DnlsReport = fgnls::analysis::dnls_bound_check(&c, &x, &t, &omegas).map_err(|e| e.to_string())?;
    ensure(
        r.sampled_min >= 0.25 - 1e-6 && r.sampled_max <= 0.75 + 1e-6 && (r.psi_origin - 0.75).abs() < 1e-6,
        format!(
            "sampled |psi| in [{:.10}, {:.10}], bounds [0.25, 0.75], |psi_0(0,0)| = {:.12}",
            r.sampled_min, r.sampled_max, r.psi_origin
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("g=2 torus extrema", example_extrema),
        ("half-period identity", half_period_identity),
        ("amplitude bound on figure surfaces", amplitude_bound),
        ("period-matrix fingerprints", period_fingerprints),
        ("theta positivity", theta_positivity),
        ("RHP jump and Y1", rhp_oracle),
        ("PDE residual order", pde_residual),
        ("degeneration sweep", degeneration),
        ("divisor residuals", divisor_residuals),
        ("defocusing bounds", dnls_bounds),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, msg) = match f() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failures += 1;
                ("FAIL", m)
            }
        };
        println!("{tag} {:>2} {name}: {msg} [{:.1} s]", k + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
