//! Discretized wavelet analysis and synthesis over the half-space, the
//! non-commutative half-space convolution with tabulated kernels, cross
//! kernels and Töplitz restriction operators.
//!
//! Conventions: shat(k) = integral e^{-ikx} s(x) dx, and the transform is
//! W(b, a) = (2pi)^-n integral conj(ghat(ak)) e^{ibk} shat(k) dk. On the
//! periodic grid both analysis and synthesis reduce to per-scale spectral
//! multiplies with no residual grid factors; scale integrals use the exact
//! weight ln q of the geometric grid.

use crate::error::{CoreError, Result};
use crate::geometry::{RasterMask, SampleLattice};
use crate::grid::{GridMeta, GridSignal, ScaleGrid};
use crate::spectral;
use crate::wavelets::{reconstruction_wavelet, ScaleQuadrature, WaveletSpec};
use num_complex::Complex;
use rayon::prelude::*;

/// Guards and knobs for the transform engine.
#[derive(Debug, Clone, Copy)]
pub struct EngineOptions {
    /// Reject scale grids that the b-grid cannot resolve.
    pub enforce_scale_guard: bool,
    /// Smallest admissible scale in units of the grid step.
    pub min_scale_steps: f64,
    /// Largest admissible scale as a fraction of the domain length.
    pub max_scale_fraction: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            enforce_scale_guard: true,
            min_scale_steps: 2.0,
            max_scale_fraction: 0.25,
        }
    }
}

impl EngineOptions {
    pub fn unguarded() -> Self {
        EngineOptions {
            enforce_scale_guard: false,
            ..Default::default()
        }
    }
}

/// Complex transform values on a (b, log a) lattice, scale-major, carrying
/// the wavelet that produced them.
#[derive(Debug, Clone)]
pub struct HalfSpaceField {
    pub grid: GridMeta,
    pub scales: ScaleGrid,
    pub wavelet: WaveletSpec,
    pub values: Vec<Complex<f64>>,
}

impl HalfSpaceField {
    pub fn zeros(grid: GridMeta, scales: ScaleGrid, wavelet: WaveletSpec) -> Self {
        HalfSpaceField {
            grid,
            scales,
            wavelet,
            values: vec![Complex::default(); grid.total_samples() * scales.count],
        }
    }

    /// Synthetic field from a pointwise rule; used by estimator oracles.
    pub fn from_fn(
        grid: GridMeta,
        scales: ScaleGrid,
        wavelet: WaveletSpec,
        f: impl Fn([f64; 2], f64) -> Complex<f64>,
    ) -> Self {
        let mut field = HalfSpaceField::zeros(grid, scales, wavelet);
        let per = grid.total_samples();
        for j in 0..scales.count {
            let a = scales.scale(j);
            for i in 0..per {
                field.values[j * per + i] = f(grid.position(i), a);
            }
        }
        field
    }

    pub fn lattice(&self) -> SampleLattice {
        SampleLattice::new(self.grid, self.scales)
    }

    pub fn slice(&self, j: usize) -> &[Complex<f64>] {
        let per = self.grid.total_samples();
        &self.values[j * per..(j + 1) * per]
    }

    pub fn slice_mut(&mut self, j: usize) -> &mut [Complex<f64>] {
        let per = self.grid.total_samples();
        &mut self.values[j * per..(j + 1) * per]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Norm induced by the db da/a measure: sqrt(sum ln q dx^n |W|^2).
    pub fn l2_norm(&self) -> f64 {
        energy(self).sqrt()
    }

    pub fn sup_abs_per_scale(&self) -> Vec<f64> {
        (0..self.scales.count)
            .map(|j| self.slice(j).iter().map(|v| v.norm()).fold(0.0, f64::max))
            .collect()
    }

    /// |W| at an off-lattice point: linear interpolation in (b, ln a),
    /// periodic in b. None when the scale leaves the grid.
    pub fn abs_interp(&self, b: [f64; 2], a: f64) -> Option<f64> {
        let t = self.scales.log_index(a);
        if t < -1e-9 || t > (self.scales.count - 1) as f64 + 1e-9 {
            return None;
        }
        let t = t.clamp(0.0, (self.scales.count - 1) as f64);
        let j0 = (t.floor() as usize).min(self.scales.count - 2);
        let u = t - j0 as f64;
        let v0 = self.abs_interp_slice(j0, b);
        let v1 = self.abs_interp_slice(j0 + 1, b);
        Some(v0 * (1.0 - u) + v1 * u)
    }

    fn abs_interp_slice(&self, j: usize, b: [f64; 2]) -> f64 {
        let n = self.grid.samples_per_axis;
        let dx = self.grid.spacing();
        let slice = self.slice(j);
        let fx = (b[0] / dx).rem_euclid(n as f64);
        let (i0, i1) = (fx.floor() as usize % n, (fx.floor() as usize + 1) % n);
        let u = fx - fx.floor();
        match self.grid.dimension {
            1 => slice[i0].norm() * (1.0 - u) + slice[i1].norm() * u,
            _ => {
                let fy = (b[1] / dx).rem_euclid(n as f64);
                let (j0, j1) = (fy.floor() as usize % n, (fy.floor() as usize + 1) % n);
                let v = fy - fy.floor();
                slice[i0 * n + j0].norm() * (1.0 - u) * (1.0 - v)
                    + slice[i0 * n + j1].norm() * (1.0 - u) * v
                    + slice[i1 * n + j0].norm() * u * (1.0 - v)
                    + slice[i1 * n + j1].norm() * u * v
            }
        }
    }

    /// Zero the field outside a raster mask on the same lattice.
    pub fn restrict(&self, mask: &RasterMask) -> Result<HalfSpaceField> {
        if mask.grid != self.grid || mask.scales != self.scales {
            return Err(CoreError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&mask.bits)
            .map(|(v, &keep)| if keep { *v } else { Complex::default() })
            .collect();
        Ok(HalfSpaceField {
            grid: self.grid,
            scales: self.scales,
            wavelet: self.wavelet.clone(),
            values,
        })
    }

    pub fn difference(&self, other: &HalfSpaceField) -> Result<HalfSpaceField> {
        if other.grid != self.grid || other.scales != self.scales {
            return Err(CoreError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(HalfSpaceField {
            grid: self.grid,
            scales: self.scales,
            wavelet: self.wavelet.clone(),
            values,
        })
    }
}

fn check_scales(grid: GridMeta, scales: &ScaleGrid, opts: &EngineOptions) -> Result<()> {
    if !opts.enforce_scale_guard {
        return Ok(());
    }
    let lo = opts.min_scale_steps * grid.spacing();
    let hi = opts.max_scale_fraction * grid.domain_len;
    if scales.a_min < lo || scales.a_max > hi {
        return Err(CoreError::UnresolvableScale(format!(
            "grid resolves scales in [{lo:.3e}, {hi:.3e}], requested [{:.3e}, {:.3e}]",
            scales.a_min, scales.a_max
        )));
    }
    Ok(())
}

/// Wavelet analysis: per scale, the inverse transform of
/// conj(ghat(a k)) shat(k).
pub fn forward(
    g: &WaveletSpec,
    s: &GridSignal,
    scales: &ScaleGrid,
    opts: &EngineOptions,
) -> Result<HalfSpaceField> {
    if g.dimension != s.grid.dimension {
        return Err(CoreError::UnsupportedDimension(g.dimension));
    }
    check_scales(s.grid, scales, opts)?;
    let grid = s.grid;
    let dims = grid.dims();
    let spectrum = s.spectrum();
    let per = grid.total_samples();
    let freqs: Vec<[f64; 2]> = (0..per).map(|m| grid.frequency(m)).collect();
    let mut field = HalfSpaceField::zeros(grid, *scales, g.clone());
    field
        .values
        .par_chunks_exact_mut(per)
        .enumerate()
        .for_each(|(j, out)| {
            let a = scales.scale(j);
            for (m, o) in out.iter_mut().enumerate() {
                let k = freqs[m];
                let w = g.spectrum([a * k[0], a * k[1]]);
                *o = spectrum[m] * w;
            }
            spectral::idft(out, &dims);
        });
    Ok(field)
}

/// Wavelet synthesis: sum over scales of the spectral multiply by
/// hhat(a k), with the ln q quadrature weight of the da/a measure.
pub fn synthesis(h: &WaveletSpec, field: &HalfSpaceField) -> GridSignal {
    let grid = field.grid;
    let dims = grid.dims();
    let per = grid.total_samples();
    let weight = field.scales.log_weight();
    let freqs: Vec<[f64; 2]> = (0..per).map(|m| grid.frequency(m)).collect();

    let chunk = 8usize;
    let indices: Vec<usize> = (0..field.scales.count).collect();
    let partials: Vec<Vec<Complex<f64>>> = indices
        .par_chunks(chunk)
        .map(|js| {
            let mut acc = vec![Complex::default(); per];
            let mut buf = vec![Complex::default(); per];
            for &j in js {
                buf.copy_from_slice(field.slice(j));
                spectral::dft(&mut buf, &dims);
                let a = field.scales.scale(j);
                for (m, v) in buf.iter().enumerate() {
                    let k = freqs[m];
                    acc[m] += v * (h.spectrum([a * k[0], a * k[1]]) * weight);
                }
            }
            acc
        })
        .collect();

    let mut total = vec![Complex::default(); per];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    spectral::idft(&mut total, &dims);
    GridSignal {
        grid,
        values: total,
    }
}

/// Squared field norm in the db da/a measure: sum of ln q dx^n |W|^2.
pub fn energy(field: &HalfSpaceField) -> f64 {
    let w = field.scales.log_weight() * field.grid.cell_measure();
    let per_scale: Vec<f64> = (0..field.scales.count)
        .into_par_iter()
        .map(|j| field.slice(j).iter().map(|v| v.norm_sqr()).sum::<f64>())
        .collect();
    per_scale.iter().sum::<f64>() * w
}

/// Inner product of two fields in the db da/a measure.
pub fn field_inner_product(x: &HalfSpaceField, y: &HalfSpaceField) -> Result<Complex<f64>> {
    if x.grid != y.grid || x.scales != y.scales {
        return Err(CoreError::GridMismatch);
    }
    let w = x.scales.log_weight() * x.grid.cell_measure();
    let mut acc = Complex::default();
    for (a, b) in x.values.iter().zip(&y.values) {
        acc += a.conj() * b;
    }
    Ok(acc * w)
}

/// Töplitz operator: analyze with g, restrict to the region, resynthesize
/// with h.
pub fn toeplitz_apply(
    g: &WaveletSpec,
    h: &WaveletSpec,
    region: &RasterMask,
    s: &GridSignal,
    opts: &EngineOptions,
) -> Result<GridSignal> {
    let field = forward(g, s, &region.scales, opts)?;
    let restricted = field.restrict(region)?;
    Ok(synthesis(h, &restricted))
}

/// Commutator of two Töplitz operators applied to a signal, together with
/// the wavelet transform of the output for decay inspection.
pub fn commutator_residual(
    g: &WaveletSpec,
    h: &WaveletSpec,
    sigma: &RasterMask,
    omega: &RasterMask,
    s: &GridSignal,
    opts: &EngineOptions,
) -> Result<(GridSignal, HalfSpaceField)> {
    let t_omega_s = toeplitz_apply(g, h, omega, s, opts)?;
    let t_sigma_s = toeplitz_apply(g, h, sigma, s, opts)?;
    let so = toeplitz_apply(g, h, sigma, &t_omega_s, opts)?;
    let os = toeplitz_apply(g, h, omega, &t_sigma_s, opts)?;
    let diff = GridSignal::linear_combination(Complex::new(1.0, 0.0), &so, Complex::new(-1.0, 0.0), &os);
    let field = forward(g, &diff, &sigma.scales, opts)?;
    Ok((diff, field))
}

/// A reproducing (or cross) kernel tabulated on an extended grid: wider
/// b-span than the target field and a geometric grid of scale ratios.
#[derive(Debug, Clone)]
pub struct KernelField {
    pub field: HalfSpaceField,
    /// |x| beyond which the tabulated kernel is treated as zero.
    pub cutoff: f64,
    /// Whether the extreme ratio slices have decayed below tolerance, which
    /// licenses treating out-of-support ratios as zero.
    pub boundary_decayed: bool,
}

/// Tabulate Pi_{g,h} = W_g h on a dedicated wide grid aligned with the
/// target lattice: the b-span is extended (4x in 1-D, 2x in 2-D) and the
/// scale axis holds ratios q^r so that ratios of target scales are hit
/// exactly.
pub fn reproducing_kernel(
    g: &WaveletSpec,
    h: &WaveletSpec,
    target_grid: GridMeta,
    target_scales: &ScaleGrid,
) -> Result<KernelField> {
    let span: usize = if target_grid.dimension == 1 { 4 } else { 2 };
    let kgrid = GridMeta::new(
        target_grid.dimension,
        span * target_grid.samples_per_axis,
        span as f64 * target_grid.domain_len,
    )?;
    let ln_q = target_scales.log_weight();
    let r_needed = target_scales.count - 1;
    let r_max = r_needed.min((7.0 / ln_q).ceil() as usize).max(1);
    let kscales = ScaleGrid::new(
        (-(r_max as f64) * ln_q).exp(),
        (r_max as f64 * ln_q).exp(),
        2 * r_max + 1,
    )?;
    let h_grid = GridSignal::from_continuum_spectrum(kgrid, |k| h.spectrum(k));
    let field = forward(g, &h_grid, &kscales, &EngineOptions::unguarded())?;
    let peak = field.max_abs();
    let edge = field
        .slice(0)
        .iter()
        .chain(field.slice(kscales.count - 1))
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    Ok(KernelField {
        cutoff: 0.5 * kgrid.domain_len - 2.0 * kgrid.spacing(),
        boundary_decayed: edge <= 1e-6 * peak,
        field,
    })
}

impl KernelField {
    /// Kernel value at fractional position x and log-ratio index t
    /// (linear in ln ratio, cubic in position, zero beyond the cutoff).
    fn value(&self, x: [f64; 2], t: f64) -> Complex<f64> {
        let count = self.field.scales.count;
        if t < -1e-9 || t > (count - 1) as f64 + 1e-9 {
            return Complex::default();
        }
        let t = t.clamp(0.0, (count - 1) as f64);
        let j0 = (t.floor() as usize).min(count - 2);
        let u = t - j0 as f64;
        let v0 = self.slice_value(j0, x);
        let v1 = self.slice_value(j0 + 1, x);
        v0 * (1.0 - u) + v1 * u
    }

    fn slice_value(&self, j: usize, x: [f64; 2]) -> Complex<f64> {
        let r = match self.field.grid.dimension {
            1 => x[0].abs(),
            _ => (x[0] * x[0] + x[1] * x[1]).sqrt(),
        };
        if r > self.cutoff {
            return Complex::default();
        }
        let n = self.field.grid.samples_per_axis;
        let dx = self.field.grid.spacing();
        let slice = self.field.slice(j);
        match self.field.grid.dimension {
            1 => {
                let f = x[0] / dx; // signed; index 0 is x = 0, wraps periodically
                let i = f.floor();
                let u = f - i;
                let at = |o: i64| {
                    let idx = ((i as i64 + o).rem_euclid(n as i64)) as usize;
                    slice[idx]
                };
                let (p0, p1, p2, p3) = (at(-1), at(0), at(1), at(2));
                let (u2, u3) = (u * u, u * u * u);
                (p1 * 2.0
                    + (p2 - p0) * u
                    + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * u2
                    + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * u3)
                    * 0.5
            }
            _ => {
                let fx = x[0] / dx;
                let fy = x[1] / dx;
                let (ix, iy) = (fx.floor(), fy.floor());
                let (u, v) = (fx - ix, fy - iy);
                let at = |ox: i64, oy: i64| {
                    let i = ((ix as i64 + ox).rem_euclid(n as i64)) as usize;
                    let j = ((iy as i64 + oy).rem_euclid(n as i64)) as usize;
                    slice[i * n + j]
                };
                at(0, 0) * ((1.0 - u) * (1.0 - v))
                    + at(0, 1) * ((1.0 - u) * v)
                    + at(1, 0) * (u * (1.0 - v))
                    + at(1, 1) * (u * v)
            }
        }
    }
}

/// Non-commutative half-space convolution of a tabulated kernel with a
/// field: (Pi * r)(b, a) = sum over (b', a') of
/// a'^{-n} Pi((b - b')/a', a/a') r(b', a') with db da'/a' weights. The
/// position sum runs over the periodic b-grid via the FFT; kernel values off
/// the tabulated scale-ratio range require a decayed kernel boundary.
pub fn halfspace_convolve(kernel: &KernelField, r: &HalfSpaceField) -> Result<HalfSpaceField> {
    let grid = r.grid;
    if grid.dimension != kernel.field.grid.dimension {
        return Err(CoreError::UnsupportedDimension(grid.dimension));
    }
    let dims = grid.dims();
    let per = grid.total_samples();
    let n = grid.samples_per_axis;
    let dx = grid.spacing();
    let dim = grid.dimension;
    let weight = r.scales.log_weight() * grid.cell_measure();

    // spectra of the input slices
    let spectra: Vec<Vec<Complex<f64>>> = (0..r.scales.count)
        .into_par_iter()
        .map(|j| {
            let mut buf = r.slice(j).to_vec();
            spectral::dft(&mut buf, &dims);
            buf
        })
        .collect();

    let kcount = kernel.field.scales.count;
    let kq = kernel.field.scales.ratio().ln();
    let k_lo = kernel.field.scales.a_min;
    let k_hi = kernel.field.scales.a_max;

    // validate ratio coverage once
    for i in 0..r.scales.count {
        for j in 0..r.scales.count {
            let ratio = r.scales.scale(i) / r.scales.scale(j);
            if (ratio < k_lo * (1.0 - 1e-9) || ratio > k_hi * (1.0 + 1e-9)) && !kernel.boundary_decayed {
                return Err(CoreError::ScaleRatioOutOfSupport {
                    ratio,
                    lo: k_lo,
                    hi: k_hi,
                });
            }
        }
    }

    let mut out = HalfSpaceField::zeros(grid, r.scales, r.wavelet.clone());
    let signed = |idx: usize| -> f64 {
        let m = spectral::signed_mode(idx, n);
        m as f64 * dx
    };

    out.values
        .par_chunks_exact_mut(per)
        .enumerate()
        .for_each(|(i, out_slice)| {
            let a_out = r.scales.scale(i);
            let mut acc = vec![Complex::default(); per];
            let mut kline = vec![Complex::default(); per];
            for (j, spec_j) in spectra.iter().enumerate() {
                let a_in = r.scales.scale(j);
                let ratio = a_out / a_in;
                let t = (ratio / k_lo).ln() / kq;
                if t < -1e-9 || t > (kcount - 1) as f64 + 1e-9 {
                    continue; // decayed out-of-support slice
                }
                let amp = a_in.powi(-(dim as i32));
                // kernel line over periodic offsets
                match dim {
                    1 => {
                        for (d, kv) in kline.iter_mut().enumerate() {
                            let beta = signed(d);
                            *kv = kernel.value([beta / a_in, 0.0], t) * amp;
                        }
                    }
                    _ => {
                        for (d, kv) in kline.iter_mut().enumerate() {
                            let bx = signed(d / n);
                            let by = signed(d % n);
                            *kv = kernel.value([bx / a_in, by / a_in], t) * amp;
                        }
                    }
                }
                spectral::dft(&mut kline, &dims);
                for ((a, k), s) in acc.iter_mut().zip(&kline).zip(spec_j) {
                    *a += k * s;
                }
            }
            spectral::idft(&mut acc, &dims);
            for (o, v) in out_slice.iter_mut().zip(acc) {
                *o = v * weight;
            }
        });
    Ok(out)
}

/// Transport a field from analysis wavelet g to g' by convolving with the
/// cross kernel Pi_{g -> g'} = W_{g'} (reconstruction wavelet of g).
pub fn cross_kernel_apply(
    g: &WaveletSpec,
    g_prime: &WaveletSpec,
    field: &HalfSpaceField,
    quad: &ScaleQuadrature,
) -> Result<HalfSpaceField> {
    let r = reconstruction_wavelet(g, quad)?;
    let kernel = reproducing_kernel(g_prime, &r, field.grid, &field.scales)?;
    halfspace_convolve(&kernel, field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals;
    use crate::wavelets::integrate_log_scale;

    fn grid() -> GridMeta {
        GridMeta::new(1, 256, 1.0).unwrap()
    }

    fn scales() -> ScaleGrid {
        ScaleGrid::new(0.01, 0.2, 24).unwrap()
    }

    #[test]
    fn forward_single_mode_is_exact() {
        let g = WaveletSpec::log_normal(1).unwrap();
        let s = signals::single_mode(grid(), [7, 0]);
        let field = forward(&g, &s, &scales(), &EngineOptions::default()).unwrap();
        let k = 2.0 * std::f64::consts::PI * 7.0;
        for j in [0, 10, 23] {
            let a = field.scales.scale(j);
            let expect_mag = g.spectrum([a * k, 0.0]);
            for (i, v) in field.slice(j).iter().enumerate().step_by(37) {
                let b = grid().position(i)[0];
                let expect = Complex::from_polar(1.0, k * b) * expect_mag;
                assert!((v - expect).norm() <= 1e-12 * expect.norm().max(1e-12));
            }
        }
    }

    #[test]
    fn forward_zero_signal() {
        let g = WaveletSpec::log_normal(1).unwrap();
        let s = GridSignal::zeros(grid());
        let f = forward(&g, &s, &scales(), &EngineOptions::default()).unwrap();
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn forward_rejects_unresolvable_scales() {
        let g = WaveletSpec::log_normal(1).unwrap();
        let s = GridSignal::zeros(grid());
        let bad = ScaleGrid::new(1e-5, 0.2, 8).unwrap();
        assert!(matches!(
            forward(&g, &s, &bad, &EngineOptions::default()),
            Err(CoreError::UnresolvableScale(_))
        ));
    }

    #[test]
    fn impulse_magnitude_tracks_inverse_scale() {
        // |W(x0, a)| ~ |g(0)| / a for the unit-integral impulse, with g(0)
        // obtained by an independent spectral quadrature.
        let g = WaveletSpec::log_normal(1).unwrap();
        let x0 = 0.5;
        let s = signals::impulse(grid(), [x0, 0.0]);
        let sc = ScaleGrid::new(0.02, 0.1, 7).unwrap();
        let field = forward(&g, &s, &sc, &EngineOptions::default()).unwrap();
        let g0 = integrate_log_scale(
            |r| g.spectrum_radial(r) * r / std::f64::consts::PI,
            &ScaleQuadrature::default(),
        )
        .unwrap(); // (1/2pi) * 2 * integral_0^inf ghat(r) dr, via dr = r d(ln r)
        let idx = (x0 / grid().spacing()).round() as usize;
        for j in [0, 3, 6] {
            let a = sc.scale(j);
            let got = field.slice(j)[idx].norm();
            let expect = g0.abs() / a;
            // periodization of the wavelet tails costs up to ~0.5% here
            assert!(
                (got - expect).abs() < 1e-2 * expect,
                "a={a}: got {got}, expected {expect}"
            );
        }
    }

    #[test]
    fn linearity_in_the_signal() {
        let g = WaveletSpec::log_normal(1).unwrap();
        let s1 = signals::band_limited_random(grid(), (6, 40), 1).unwrap();
        let s2 = signals::band_limited_random(grid(), (6, 40), 2).unwrap();
        let (ca, cb) = (Complex::new(1.7, 0.0), Complex::new(-0.4, 0.0));
        let combo = GridSignal::linear_combination(ca, &s1, cb, &s2);
        let f1 = forward(&g, &s1, &scales(), &EngineOptions::default()).unwrap();
        let f2 = forward(&g, &s2, &scales(), &EngineOptions::default()).unwrap();
        let fc = forward(&g, &combo, &scales(), &EngineOptions::default()).unwrap();
        let scale = fc.max_abs();
        for (v, (a, b)) in fc.values.iter().zip(f1.values.iter().zip(&f2.values)) {
            assert!((v - (ca * a + cb * b)).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn translation_covariance_is_exact() {
        let g = WaveletSpec::log_normal(1).unwrap();
        let s = signals::band_limited_random(grid(), (6, 40), 3).unwrap();
        let steps = 41i64;
        let shifted = s.shift([steps, 0]);
        let f = forward(&g, &s, &scales(), &EngineOptions::default()).unwrap();
        let fs = forward(&g, &shifted, &scales(), &EngineOptions::default()).unwrap();
        let n = grid().samples_per_axis as i64;
        let scale = f.max_abs();
        for j in 0..f.scales.count {
            let base = f.slice(j);
            let moved = fs.slice(j);
            for i in 0..n {
                let expect = base[i as usize];
                let got = moved[((i + steps).rem_euclid(n)) as usize];
                assert!((got - expect).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn synthesis_is_adjoint_of_forward() {
        let g = WaveletSpec::log_normal(1).unwrap();
        let s = signals::band_limited_random(grid(), (6, 40), 4).unwrap();
        let sc = scales();
        let field_of_s = forward(&g, &s, &sc, &EngineOptions::default()).unwrap();
        // random field r
        let mut r = HalfSpaceField::zeros(grid(), sc, g.clone());
        let mut state = 0x12345u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for v in r.values.iter_mut() {
            *v = Complex::new(next(), next());
        }
        let lhs = field_inner_product(&field_of_s, &r).unwrap();
        let m = synthesis(&g, &r);
        let rhs = s
            .values
            .iter()
            .zip(&m.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex<f64>>()
            * grid().cell_measure();
        assert!(
            (lhs - rhs).norm() <= 1e-10 * lhs.norm(),
            "adjoint mismatch: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn reconstruction_round_trip_small() {
        let quad = ScaleQuadrature::default();
        let g = WaveletSpec::log_normal(1).unwrap();
        let r = reconstruction_wavelet(&g, &quad).unwrap();
        let s = signals::band_limited_random(grid(), (8, 32), 5).unwrap();
        // band modes 8..32 need ln(a k) to sweep about +-1.8 around 0
        let sc = ScaleGrid::new(8e-4, 0.12, 48).unwrap();
        let field = forward(&g, &s, &sc, &EngineOptions::unguarded()).unwrap();
        let back = synthesis(&r, &field);
        let err = GridSignal::linear_combination(
            Complex::new(1.0, 0.0),
            &back,
            Complex::new(-1.0, 0.0),
            &s,
        )
        .l2_norm()
            / s.l2_norm();
        assert!(err < 1e-3, "round trip error {err}");
    }

    #[test]
    fn toeplitz_full_and_empty_masks() {
        use crate::geometry::RegionMask;
        let quad = ScaleQuadrature::default();
        let g = WaveletSpec::log_normal(1).unwrap();
        let h = reconstruction_wavelet(&g, &quad).unwrap();
        let s = signals::band_limited_random(grid(), (8, 32), 6).unwrap();
        let sc = ScaleGrid::new(8e-4, 0.12, 48).unwrap();
        let lat = SampleLattice::new(grid(), sc);
        let full = RegionMask::all().rasterize(&lat);
        let empty = RegionMask::empty().rasterize(&lat);
        let opts = EngineOptions::unguarded();
        let t_full = toeplitz_apply(&g, &h, &full, &s, &opts).unwrap();
        let err = GridSignal::linear_combination(
            Complex::new(1.0, 0.0),
            &t_full,
            Complex::new(-1.0, 0.0),
            &s,
        )
        .l2_norm()
            / s.l2_norm();
        assert!(err < 1e-3, "full-mask Töplitz error {err}");
        let t_empty = toeplitz_apply(&g, &h, &empty, &s, &opts).unwrap();
        assert!(t_empty.l2_norm() < 1e-14);
        // T_Sigma + T_Sigma^c = T_full exactly
        let strip = RegionMask::parabolic_strip([0.5, 0.0], 2.0, true, 0.2).rasterize(&lat);
        let t_a = toeplitz_apply(&g, &h, &strip, &s, &opts).unwrap();
        let t_b = toeplitz_apply(&g, &h, &strip.complement(), &s, &opts).unwrap();
        let sum = GridSignal::linear_combination(
            Complex::new(1.0, 0.0),
            &t_a,
            Complex::new(1.0, 0.0),
            &t_b,
        );
        let resid = GridSignal::linear_combination(
            Complex::new(1.0, 0.0),
            &sum,
            Complex::new(-1.0, 0.0),
            &t_full,
        )
        .l2_norm();
        assert!(resid <= 1e-12 * t_full.l2_norm().max(1.0));
    }

    #[test]
    fn commutator_of_identical_masks_vanishes() {
        use crate::geometry::RegionMask;
        let quad = ScaleQuadrature::default();
        let g = WaveletSpec::log_normal(1).unwrap();
        let h = reconstruction_wavelet(&g, &quad).unwrap();
        let s = signals::band_limited_random(grid(), (8, 32), 7).unwrap();
        let sc = ScaleGrid::new(8e-4, 0.12, 32).unwrap();
        let lat = SampleLattice::new(grid(), sc);
        let mask = RegionMask::parabolic_strip([0.5, 0.0], 2.0, true, 0.2).rasterize(&lat);
        let (sig, _) = commutator_residual(
            &g,
            &h,
            &mask,
            &mask,
            &s,
            &EngineOptions::unguarded(),
        )
        .unwrap();
        assert!(sig.l2_norm() <= 1e-12 * s.l2_norm());
    }

    #[test]
    fn dilation_covariance_on_dyadic_rescale() {
        // for s built from even modes, s2(x) = s(x/2) satisfies
        // W s2 (b, a) = W s (b/2, a/2) at matched lattice points
        let g = WaveletSpec::log_normal(1).unwrap();
        let gr = grid();
        let n = gr.samples_per_axis;
        let mut spec = vec![Complex::default(); n];
        let mut dspec = vec![Complex::default(); n];
        let mut state = 0xdeadbeefu64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for m in 8..=15usize {
            let c = Complex::new(next(), next());
            spec[2 * m] = c;
            spec[n - 2 * m] = c.conj();
            dspec[m] = c;
            dspec[n - m] = c.conj();
        }
        let s = GridSignal::from_spectrum(gr, spec);
        let s2 = GridSignal::from_spectrum(gr, dspec);
        // scale grid with q = 2^{1/4} so a/2 sits 4 steps down
        let sc = ScaleGrid::new(0.01, 0.01 * 2.0f64.powf(4.75), 20).unwrap();
        let f = forward(&g, &s, &sc, &EngineOptions::unguarded()).unwrap();
        let f2 = forward(&g, &s2, &sc, &EngineOptions::unguarded()).unwrap();
        let scale_ref = f.max_abs();
        for j in 4..sc.count {
            for i in (0..n).step_by(2) {
                let got = f2.slice(j)[i];
                let expect = f.slice(j - 4)[i / 2];
                assert!(
                    (got - expect).norm() <= 1e-3 * scale_ref,
                    "j={j} i={i}: {got} vs {expect}"
                );
            }
        }
    }
}
