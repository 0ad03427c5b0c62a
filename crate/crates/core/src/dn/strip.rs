use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid};

/// `-ln(1e-12)`: depth in units of `1/k_min` at which the slowest mode has
/// decayed to `1e-12`.
pub const TRUNCATION_DECADES: f64 = 27.631_021_115_928_547;

/// Uniform vertical grid `z_m = -m Z/(M-1)` on `[-Z, 0]` above a torus.
#[derive(Debug, Clone, PartialEq)]
pub struct StripGrid {
    torus: TorusGrid,
    depth: f64,
    m: usize,
}

impl StripGrid {
    pub fn new(torus: &TorusGrid, depth: f64, m: usize) -> Result<Self> {
        if m < 5 {
            return Err(Error::InvalidGrid(format!("need at least 5 z-nodes, got {m}")));
        }
        if !(depth.is_finite() && depth > 0.0) {
            return Err(Error::InvalidGrid(format!("strip depth must be positive, got {depth}")));
        }
        if depth * torus.k_min() < TRUNCATION_DECADES * (1.0 - 1e-14) {
            return Err(Error::InvalidGrid(format!(
                "strip depth {depth} too shallow: exp(-Z k_min) = {:e} > 1e-12",
                (-depth * torus.k_min()).exp()
            )));
        }
        Ok(Self {
            torus: torus.clone(),
            depth,
            m,
        })
    }

    /// Strip of the minimal admissible depth `Z = ln(1e12)/k_min`.
    pub fn with_default_depth(torus: &TorusGrid, m: usize) -> Result<Self> {
        Self::new(torus, TRUNCATION_DECADES / torus.k_min(), m)
    }

    pub fn torus(&self) -> &TorusGrid {
        &self.torus
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.depth / (self.m - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.m - 1 {
            -self.depth
        } else {
            -(i as f64) * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.node(i)).collect()
    }
}

/// One spectral slice per z-node.
#[derive(Debug, Clone, PartialEq)]
pub struct StripField {
    strip: StripGrid,
    slices: Vec<SpectralField>,
}

impl StripField {
    pub fn new(strip: &StripGrid, slices: Vec<SpectralField>) -> Result<Self> {
        if slices.len() != strip.len() {
            return Err(Error::InvalidInput(format!(
                "{} slices for {} z-nodes",
                slices.len(),
                strip.len()
            )));
        }
        if slices.iter().any(|s| s.grid() != strip.torus()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            strip: strip.clone(),
            slices,
        })
    }

    pub fn zeros(strip: &StripGrid) -> Self {
        Self {
            strip: strip.clone(),
            slices: vec![SpectralField::zeros(strip.torus()); strip.len()],
        }
    }

    pub(crate) fn from_raw(strip: &StripGrid, raw: Vec<Vec<Complex64>>) -> Self {
        let slices = raw
            .into_iter()
            .map(|c| SpectralField::from_coeffs_unchecked(strip.torus().clone(), c))
            .collect();
        Self {
            strip: strip.clone(),
            slices,
        }
    }

    pub fn strip(&self) -> &StripGrid {
        &self.strip
    }

    pub fn slices(&self) -> &[SpectralField] {
        &self.slices
    }

    pub fn slice(&self, i: usize) -> &SpectralField {
        &self.slices[i]
    }

    pub fn top(&self) -> &SpectralField {
        &self.slices[0]
    }

    /// Largest absolute value over all slices and grid points.
    pub fn sup_norm(&self) -> f64 {
        self.slices.iter().map(|s| s.sup_norm()).fold(0.0, f64::max)
    }

    /// `sup |self - other|` over the strip.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| (a - b).sup_norm())
            .fold(0.0, f64::max)
    }

    /// Fourth-order finite-difference `d/dz`, applied per Fourier mode.
    pub fn dz(&self) -> Self {
        let raw: Vec<&[Complex64]> = self.slices.iter().map(|s| s.coeffs()).collect();
        Self::from_raw(&self.strip, dz_raw(&raw, self.strip.step()))
    }
}

/// Fourth-order d/dz on slices ordered by decreasing z. Needs at least five
/// slices; the two outermost nodes at each end use one-sided stencils.
pub(crate) fn dz_raw(v: &[&[Complex64]], h: f64) -> Vec<Vec<Complex64>> {
    let m = v.len();
    assert!(m >= 5, "fourth-order stencil needs five nodes");
    let n = v[0].len();
    let s = 1.0 / (12.0 * h);
    let comb = |idx: [usize; 5], w: [f64; 5]| -> Vec<Complex64> {
        (0..n)
            .map(|k| {
                // exact zero on constants
                let base = v[idx[2]][k];
                idx.iter().zip(w).map(|(&i, w)| (v[i][k] - base) * w).sum::<Complex64>() * s
            })
            .collect()
    };
    let mut out = Vec::with_capacity(m);
    // z decreases with the index, so forward stencils in z read backwards
    out.push(comb([0, 1, 2, 3, 4], [25.0, -48.0, 36.0, -16.0, 3.0]));
    out.push(comb([0, 1, 2, 3, 4], [3.0, 10.0, -18.0, 6.0, -1.0]));
    for i in 2..m - 2 {
        out.push(comb([i - 2, i - 1, i, i + 1, i + 2], [-1.0, 8.0, 0.0, -8.0, 1.0]));
    }
    let b = m - 1;
    out.push(comb([b, b - 1, b - 2, b - 3, b - 4], [-3.0, -10.0, 18.0, -6.0, 1.0]));
    out.push(comb([b, b - 1, b - 2, b - 3, b - 4], [-25.0, 48.0, -36.0, 16.0, -3.0]));
    out
}

/// CSV dump of several strip fields on the physical grid, one row per
/// `(z, x)` sample.
pub fn strip_csv(names: &[&str], fields: &[&StripField]) -> Result<String> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to dump".into()))?;
    let strip = first.strip();
    if fields.iter().any(|f| f.strip() != strip) || names.len() != fields.len() {
        return Err(Error::GridMismatch);
    }
    let torus = strip.torus();
    let mut out = String::from("z");
    for axis in 0..torus.dim() {
        write!(out, ",x{axis}").expect("write to String");
    }
    for n in names {
        write!(out, ",{n}").expect("write to String");
    }
    out.push('\n');
    for (i, z) in strip.nodes().into_iter().enumerate() {
        let phys: Vec<Vec<f64>> = fields.iter().map(|f| f.slice(i).to_physical()).collect();
        for p in 0..torus.len() {
            write!(out, "{z:e}").expect("write to String");
            for x in torus.point(p) {
                write!(out, ",{x:e}").expect("write to String");
            }
            for col in &phys {
                write!(out, ",{:e}", col[p]).expect("write to String");
            }
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_truncation() {
        let t = TorusGrid::periodic_1d(16).unwrap();
        let s = StripGrid::with_default_depth(&t, 33).unwrap();
        assert_eq!(s.node(0), 0.0);
        assert_eq!(s.node(32), -s.depth());
        assert!(s.nodes().windows(2).all(|w| w[1] < w[0]));
        assert!((-s.depth() * t.k_min()).exp() <= 1e-12 * (1.0 + 1e-12));
        assert!(StripGrid::new(&t, 10.0, 33).is_err());
        assert!(StripGrid::new(&t, 30.0, 4).is_err());
    }

    #[test]
    fn dz_is_fourth_order() {
        // exact on quartics in z, per mode
        let t = TorusGrid::periodic_1d(8).unwrap();
        let s = StripGrid::new(&t, 30.0, 11).unwrap();
        let h = s.step();
        let poly = |z: f64| 1.0 + 2.0 * z - 0.5 * z * z + 0.1 * z.powi(3) + 0.01 * z.powi(4);
        let dpoly = |z: f64| 2.0 - z + 0.3 * z * z + 0.04 * z.powi(3);
        let slices: Vec<Vec<Complex64>> = s
            .nodes()
            .iter()
            .map(|&z| vec![Complex64::new(poly(z), 0.0); 8])
            .collect();
        let refs: Vec<&[Complex64]> = slices.iter().map(|v| v.as_slice()).collect();
        let d = dz_raw(&refs, h);
        for (i, &z) in s.nodes().iter().enumerate() {
            assert!((d[i][3].re - dpoly(z)).abs() < 1e-9 * (1.0 + dpoly(z).abs()), "node {i}");
        }
    }
}
