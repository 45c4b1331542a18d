//! Dense complex polynomials and truncated power series.

use num_complex::Complex64 as C64;

/// Polynomial with ascending coefficients: `coeffs[k]` multiplies `z^k`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    pub coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn monomial(degree: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); degree + 1];
        coeffs[degree] = C64::new(1.0, 0.0);
        Poly { coeffs }
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut p = Poly::new(vec![C64::new(1.0, 0.0)]);
        for &r in roots {
            p = p.mul(&Poly::new(vec![-r, C64::new(1.0, 0.0)]));
        }
        p
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| *c != C64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = C64::new(0.0, 0.0);
        let coeffs = (0..n)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(zero)
                    - other.coeffs.get(k).copied().unwrap_or(zero)
            })
            .collect();
        Poly::new(coeffs)
    }
}

/// Coefficients `d_0 = 1, d_1, …, d_n` of `∏_j (1 − c_j w)^{-1/2}` around `w = 0`.
///
/// With `w = 1/z` and `c_j` running over all branch points this is the expansion of
/// `z^{g+1} / R(z)` at the point at infinity on the main sheet.
pub fn inverse_sqrt_product_series(points: &[C64], n: usize) -> Vec<C64> {
    // log ∏ (1 − c w)^{-1/2} = Σ_m (P_m / 2m) w^m with power sums P_m.
    let mut log_series = vec![C64::new(0.0, 0.0); n + 1];
    for (m, slot) in log_series.iter_mut().enumerate().skip(1) {
        let p_m: C64 = points.iter().map(|c| c.powu(m as u32)).sum();
        *slot = p_m / (2.0 * m as f64);
    }
    series_exp(&log_series)
}

/// `exp` of a power series with zero constant term, truncated to the same length.
pub fn series_exp(a: &[C64]) -> Vec<C64> {
    let n = a.len();
    let mut e = vec![C64::new(0.0, 0.0); n];
    if n == 0 {
        return e;
    }
    e[0] = C64::new(1.0, 0.0);
    // e' = a' e  =>  k e_k = Σ_{j=1}^k j a_j e_{k-j}
    for k in 1..n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 1..=k {
            acc += (j as f64) * a[j] * e[k - j];
        }
        e[k] = acc / (k as f64);
    }
    e
}
