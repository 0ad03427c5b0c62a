//! Exponential-kernel quadrature on one interval.
//!
//! `int_0^h e^{-r(h-s)} ((1-s/h) a + (s/h) b) ds` is evaluated exactly for the
//! linear interpolant of the forcing. Writing `x = r h`,
//!
//! ```text
//! step = h psi(x) a + h (phi1(x) - psi(x)) b
//! phi1(x) = (1 - e^{-x}) / x
//! psi(x)  = (1 - e^{-x} - x e^{-x}) / x^2
//! ```

use num_complex::Complex64;

// The closed form of psi loses about eps/x^2 to cancellation.
const SERIES_CUTOFF: f64 = 0.5;
const SERIES_TERMS: usize = 20;

/// `(phi1(x), psi(x))` with a Taylor branch near zero.
fn kernel_weights(x: f64) -> (f64, f64) {
    if x < SERIES_CUTOFF {
        series_weights(x)
    } else {
        closed_weights(x)
    }
}

// phi1 = sum (-x)^n / (n+1)!,  psi = sum (n+1) (-x)^n / (n+2)!
fn series_weights(x: f64) -> (f64, f64) {
    let mut phi1 = 0.0;
    let mut psi = 0.0;
    let mut term = 1.0; // (-x)^n / (n+1)!
    for n in 0..SERIES_TERMS {
        phi1 += term;
        psi += term * (n + 1) as f64 / (n + 2) as f64;
        term *= -x / (n + 2) as f64;
    }
    (phi1, psi)
}

fn closed_weights(x: f64) -> (f64, f64) {
    let em1 = -(-x).exp_m1();
    let phi1 = em1 / x;
    let psi = (em1 - x * (-x).exp()) / (x * x);
    (phi1, psi)
}

/// One exponential quadrature step for a scalar forcing.
///
/// `rate` must be nonnegative and `h` positive.
pub fn exp_quadrature_step(rate: f64, a: f64, b: f64, h: f64) -> f64 {
    debug_assert!(rate >= 0.0 && h > 0.0);
    let (phi1, psi) = kernel_weights(rate * h);
    h * psi * a + h * (phi1 - psi) * b
}

/// Precomputed per-mode weights for a fixed step `h`.
///
/// `advance(i, u, a, b)` returns `e^{-r_i h} u + step(r_i, a, b, h)`.
#[derive(Debug, Clone)]
pub struct ExpStepWeights {
    pub decay: Vec<f64>,
    pub wa: Vec<f64>,
    pub wb: Vec<f64>,
}

impl ExpStepWeights {
    pub fn new(rates: &[f64], h: f64) -> Self {
        let mut decay = Vec::with_capacity(rates.len());
        let mut wa = Vec::with_capacity(rates.len());
        let mut wb = Vec::with_capacity(rates.len());
        for &r in rates {
            let x = r * h;
            let (phi1, psi) = kernel_weights(x);
            decay.push((-x).exp());
            wa.push(h * psi);
            wb.push(h * (phi1 - psi));
        }
        Self { decay, wa, wb }
    }

    #[inline]
    pub fn advance(&self, i: usize, u: Complex64, a: Complex64, b: Complex64) -> Complex64 {
        u * self.decay[i] + a * self.wa[i] + b * self.wb[i]
    }
}
