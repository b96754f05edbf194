//! Exact exponential decomposition of half-integer order kernels.
//!
//! For `α = m + 1/2` the Poisson integral can be deformed onto two vertical
//! rays, which turns `j_α` into a finite sum
//!
//! ```text
//! j_α(s) = Σ_± Σ_{j=m}^{2m} c_{±,j} e^{±is} s^{-j-1}
//! ```
//!
//! with `c_{+,j} = -i P j! a_j`, `c_{-,j} = i P j! b_j`, where
//! `P = Γ(α+1) / (Γ(α+1/2) Γ(1/2))`, `(y² - 2iy)^m = Σ a_j y^j` and
//! `(y² + 2iy)^m = Σ b_j y^j`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpDecomposition {
    pub m: u32,
    /// `c_{+,j}` for `j = m..=2m`.
    pub plus: Vec<Complex64>,
    /// `c_{-,j}` for `j = m..=2m`.
    pub minus: Vec<Complex64>,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Coefficients of `(y² + 2 σ i y)^m` for powers `y^m ..= y^{2m}`.
fn shifted_binomial_coeffs(m: u32, sigma: f64) -> Vec<Complex64> {
    // (y² + 2σiy)^m = y^m (y + 2σi)^m = Σ_i C(m,i) y^{m+i} (2σi)^{m-i}
    let base = Complex64::new(0.0, 2.0 * sigma);
    (0..=m)
        .map(|i| binomial(m, i) * base.powu(m - i))
        .collect()
}

/// Build the decomposition of `j_{m+1/2}`.
pub fn decompose_exponentials(m: u32) -> ExpDecomposition {
    // Γ(m+3/2) / (Γ(m+1) Γ(1/2)) = (2m+1)!! / (2^{m+1} m!)
    let prefactor = (1..=m).fold(0.5, |acc, k| acc * (2 * k + 1) as f64 / (2 * k) as f64);
    let a = shifted_binomial_coeffs(m, -1.0);
    let b = shifted_binomial_coeffs(m, 1.0);
    let i = Complex64::i();
    let plus = (0..=m)
        .map(|k| -i * prefactor * factorial(m + k) * a[k as usize])
        .collect();
    let minus = (0..=m)
        .map(|k| i * prefactor * factorial(m + k) * b[k as usize])
        .collect();
    ExpDecomposition { m, plus, minus }
}

impl ExpDecomposition {
    /// Full complex reconstruction. Its imaginary part measures how well the
    /// conjugate symmetry of the coefficients holds.
    pub fn reconstruct(&self, s: f64) -> Complex64 {
        let e_plus = Complex64::from_polar(1.0, s);
        let e_minus = e_plus.conj();
        let inv = 1.0 / s;
        // Horner in 1/s over j = m..=2m, then multiply by s^{-m-1}
        let mut acc_p = Complex64::new(0.0, 0.0);
        let mut acc_m = Complex64::new(0.0, 0.0);
        for k in (0..self.plus.len()).rev() {
            acc_p = acc_p * inv + self.plus[k];
            acc_m = acc_m * inv + self.minus[k];
        }
        let lead = inv.powi(self.m as i32 + 1);
        (e_plus * acc_p + e_minus * acc_m) * lead
    }

    /// Real-valued evaluation using `c_- = conj(c_+)`.
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        let (sin, cos) = s.sin_cos();
        let inv = 1.0 / s;
        let mut re = 0.0;
        let mut im = 0.0;
        for c in self.plus.iter().rev() {
            re = re * inv + c.re;
            im = im * inv + c.im;
        }
        // 2 Re(c e^{is}) = 2 (Re c cos s - Im c sin s)
        2.0 * (re * cos - im * sin) * inv.powi(self.m as i32 + 1)
    }

    /// Largest violation of `c_{-,j} = conj(c_{+,j})`.
    pub fn conjugacy_defect(&self) -> f64 {
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(p, q)| (p.conj() - q).norm())
            .fold(0.0, f64::max)
    }
}
