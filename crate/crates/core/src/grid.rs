//! Sampled signals on uniform periodic grids and geometric scale grids.

use crate::error::{CoreError, Result};
use crate::spectral;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Uniform periodic grid over [0, L)^n, n in {1, 2}, N samples per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub dimension: usize,
    pub samples_per_axis: usize,
    pub domain_len: f64,
}

impl GridMeta {
    pub fn new(dimension: usize, samples_per_axis: usize, domain_len: f64) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return Err(CoreError::UnsupportedDimension(dimension));
        }
        if !samples_per_axis.is_power_of_two() {
            return Err(CoreError::InvalidParameter(format!(
                "samples per axis must be a power of two, got {samples_per_axis}"
            )));
        }
        if !(domain_len > 0.0) {
            return Err(CoreError::InvalidParameter(
                "domain length must be positive".into(),
            ));
        }
        Ok(GridMeta {
            dimension,
            samples_per_axis,
            domain_len,
        })
    }

    pub fn total_samples(&self) -> usize {
        self.samples_per_axis.pow(self.dimension as u32)
    }

    /// Grid step per axis.
    pub fn spacing(&self) -> f64 {
        self.domain_len / self.samples_per_axis as f64
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.samples_per_axis; self.dimension]
    }

    /// Cell measure dx^n.
    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    /// Position of the sample with flat index `idx`, second component 0 in 1-D.
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let dx = self.spacing();
        match self.dimension {
            1 => [idx as f64 * dx, 0.0],
            _ => {
                let n = self.samples_per_axis;
                [(idx / n) as f64 * dx, (idx % n) as f64 * dx]
            }
        }
    }

    /// Angular frequency vector of DFT mode `idx` (flat), second component 0 in 1-D.
    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        let base = 2.0 * std::f64::consts::PI / self.domain_len;
        let n = self.samples_per_axis;
        match self.dimension {
            1 => [base * spectral::signed_mode(idx, n) as f64, 0.0],
            _ => [
                base * spectral::signed_mode(idx / n, n) as f64,
                base * spectral::signed_mode(idx % n, n) as f64,
            ],
        }
    }

    /// Shortest signed displacement from `from` to `to` on the torus, per axis.
    pub fn torus_displacement(&self, from: [f64; 2], to: [f64; 2]) -> [f64; 2] {
        let l = self.domain_len;
        let wrap = |d: f64| {
            let mut d = (d + 0.5 * l).rem_euclid(l) - 0.5 * l;
            if d == -0.5 * l {
                d = 0.5 * l;
            }
            d
        };
        match self.dimension {
            1 => [wrap(to[0] - from[0]), 0.0],
            _ => [wrap(to[0] - from[0]), wrap(to[1] - from[1])],
        }
    }

    pub fn torus_distance(&self, from: [f64; 2], to: [f64; 2]) -> f64 {
        let d = self.torus_displacement(from, to);
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    }
}

/// Complex samples of a function on a `GridMeta` lattice, row-major.
#[derive(Debug, Clone)]
pub struct GridSignal {
    pub grid: GridMeta,
    pub values: Vec<Complex<f64>>,
}

impl GridSignal {
    pub fn zeros(grid: GridMeta) -> Self {
        GridSignal {
            grid,
            values: vec![Complex::default(); grid.total_samples()],
        }
    }

    pub fn from_real(grid: GridMeta, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.total_samples());
        GridSignal {
            grid,
            values: values.into_iter().map(|v| Complex::new(v, 0.0)).collect(),
        }
    }

    pub fn from_fn(grid: GridMeta, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.total_samples())
            .map(|i| Complex::new(f(grid.position(i)), 0.0))
            .collect();
        GridSignal { grid, values }
    }

    /// Unnormalized DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex<f64>> {
        let mut v = self.values.clone();
        spectral::dft(&mut v, &self.grid.dims());
        v
    }

    /// Signal whose DFT equals `spectrum`.
    pub fn from_spectrum(grid: GridMeta, mut spectrum: Vec<Complex<f64>>) -> Self {
        assert_eq!(spectrum.len(), grid.total_samples());
        spectral::idft(&mut spectrum, &grid.dims());
        GridSignal {
            grid,
            values: spectrum,
        }
    }

    /// Samples of a function given by its continuum Fourier transform
    /// `shat(k)`: the periodization sampled on this grid.
    pub fn from_continuum_spectrum(grid: GridMeta, shat: impl Fn([f64; 2]) -> f64) -> Self {
        let scale = 1.0 / grid.cell_measure();
        let spectrum = (0..grid.total_samples())
            .map(|i| Complex::new(shat(grid.frequency(i)) * scale, 0.0))
            .collect();
        GridSignal::from_spectrum(grid, spectrum)
    }

    pub fn mean(&self) -> Complex<f64> {
        self.values.iter().sum::<Complex<f64>>() / self.values.len() as f64
    }

    pub fn subtract_mean(&mut self) -> Complex<f64> {
        let m = self.mean();
        for v in self.values.iter_mut() {
            *v -= m;
        }
        m
    }

    /// L2 norm with the dx^n measure.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_measure()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise a*x + b*y of two signals on the same grid.
    pub fn linear_combination(a: Complex<f64>, x: &GridSignal, b: Complex<f64>, y: &GridSignal) -> GridSignal {
        assert_eq!(x.grid, y.grid);
        let values = x
            .values
            .iter()
            .zip(&y.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        GridSignal { grid: x.grid, values }
    }

    /// Circular shift by whole grid steps (per axis).
    pub fn shift(&self, steps: [i64; 2]) -> GridSignal {
        let n = self.grid.samples_per_axis as i64;
        let mut out = GridSignal::zeros(self.grid);
        match self.grid.dimension {
            1 => {
                for i in 0..n {
                    let j = (i + steps[0]).rem_euclid(n);
                    out.values[j as usize] = self.values[i as usize];
                }
            }
            _ => {
                for r in 0..n {
                    for c in 0..n {
                        let rr = (r + steps[0]).rem_euclid(n);
                        let cc = (c + steps[1]).rem_euclid(n);
                        out.values[(rr * n + cc) as usize] = self.values[(r * n + c) as usize];
                    }
                }
            }
        }
        out
    }
}

/// Geometric scale grid a_j = a_min * q^j, j = 0..count-1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub a_min: f64,
    pub a_max: f64,
    pub count: usize,
}

impl ScaleGrid {
    pub fn new(a_min: f64, a_max: f64, count: usize) -> Result<Self> {
        if !(a_min > 0.0 && a_max > a_min) {
            return Err(CoreError::InvalidParameter(
                "scale grid requires 0 < a_min < a_max".into(),
            ));
        }
        if count < 2 {
            return Err(CoreError::InvalidParameter(
                "scale grid requires at least 2 scales".into(),
            ));
        }
        Ok(ScaleGrid { a_min, a_max, count })
    }

    /// Common ratio q > 1.
    pub fn ratio(&self) -> f64 {
        (self.a_max / self.a_min).powf(1.0 / (self.count - 1) as f64)
    }

    /// Quadrature weight of each scale for the da/a measure: ln q.
    pub fn log_weight(&self) -> f64 {
        self.ratio().ln()
    }

    pub fn scale(&self, j: usize) -> f64 {
        self.a_min * self.ratio().powi(j as i32)
    }

    pub fn scales(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.scale(j)).collect()
    }

    /// Fractional index of scale `a` on the logarithmic grid.
    pub fn log_index(&self, a: f64) -> f64 {
        (a / self.a_min).ln() / self.ratio().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(GridMeta::new(3, 8, 1.0).is_err());
        assert!(GridMeta::new(1, 12, 1.0).is_err());
        assert!(GridMeta::new(1, 8, 0.0).is_err());
    }

    #[test]
    fn frequencies_match_modes() {
        let g = GridMeta::new(1, 8, 2.0).unwrap();
        assert!((g.frequency(1)[0] - std::f64::consts::PI).abs() < 1e-14);
        assert!((g.frequency(7)[0] + std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn scale_grid_is_geometric() {
        let s = ScaleGrid::new(0.01, 0.16, 5).unwrap();
        assert!((s.ratio() - 2.0).abs() < 1e-12);
        assert!((s.scale(4) - 0.16).abs() < 1e-12);
        assert!((s.log_weight() - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn torus_displacement_takes_shortest_arc() {
        let g = GridMeta::new(1, 8, 1.0).unwrap();
        let d = g.torus_displacement([0.9, 0.0], [0.1, 0.0]);
        assert!((d[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn spectrum_round_trip() {
        let g = GridMeta::new(2, 8, 1.0).unwrap();
        let s = GridSignal::from_fn(g, |p| (p[0] * 9.0).sin() + p[1]);
        let back = GridSignal::from_spectrum(g, s.spectrum());
        for (a, b) in s.values.iter().zip(&back.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
