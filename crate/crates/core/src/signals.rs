//! Generators for test functions: point singularities of prescribed Hölder
//! exponent, cusp domains with contrasting interior/exterior regularity,
//! oscillating cusps, rough backgrounds and band-limited probes.
//!
//! All generators are deterministic given their parameters and seed.

use crate::error::{CoreError, Result};
use crate::grid::{GridMeta, GridSignal};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Parabolic cusp domain in R^2: points y with axial depth
/// t = (y - apex) . axis in (0, extent] and |y - apex - t axis| <= c t^degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspDomain {
    pub apex: [f64; 2],
    pub axis: [f64; 2],
    pub degree: f64,
    pub half_width: f64,
    pub extent: f64,
}

impl CuspDomain {
    pub fn new(apex: [f64; 2], axis: [f64; 2], degree: f64, half_width: f64, extent: f64) -> Result<Self> {
        if !(degree > 1.0) {
            return Err(CoreError::InvalidParameter("cusp degree must be > 1".into()));
        }
        if !(half_width > 0.0 && extent > 0.0) {
            return Err(CoreError::InvalidParameter(
                "cusp half-width and extent must be positive".into(),
            ));
        }
        let norm = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
        if norm == 0.0 {
            return Err(CoreError::InvalidParameter("cusp axis must be nonzero".into()));
        }
        Ok(CuspDomain {
            apex,
            axis: [axis[0] / norm, axis[1] / norm],
            degree,
            half_width,
            extent,
        })
    }

    /// Axial depth and transverse offset of a point.
    pub fn coordinates(&self, y: [f64; 2]) -> (f64, f64) {
        let d = [y[0] - self.apex[0], y[1] - self.apex[1]];
        let t = d[0] * self.axis[0] + d[1] * self.axis[1];
        let px = d[0] - t * self.axis[0];
        let py = d[1] - t * self.axis[1];
        (t, (px * px + py * py).sqrt())
    }

    pub fn contains(&self, y: [f64; 2]) -> bool {
        let (t, perp) = self.coordinates(y);
        t > 0.0 && t <= self.extent && perp <= self.half_width * t.powf(self.degree)
    }
}

/// C-infinity step: 0 for u <= 0, 1 for u >= 1, monotone in between, flat to
/// all orders at both ends.
pub fn smooth_step(u: f64) -> f64 {
    fn edge(u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else {
            (-1.0 / u).exp()
        }
    }
    let a = edge(u);
    let b = edge(1.0 - u);
    a / (a + b)
}

/// Smooth compactly supported bump: w(r) = exp(1 - 1/(1 - (r/radius)^2)) for
/// r < radius, 0 outside; w(0) = 1.
pub fn bump_window(r: f64, radius: f64) -> f64 {
    if r >= radius {
        return 0.0;
    }
    let s = r / radius;
    (1.0 - 1.0 / (1.0 - s * s)).exp()
}

/// Smooth partition of unity for a cusp domain: 1 deep inside (eroded by the
/// blend width), 0 outside (dilated by it). The transverse margin is
/// mollified so the partition is C-infinity everywhere; near the apex, where
/// the cusp is thinner than the blend width, the partition vanishes.
pub fn cusp_partition(cusp: &CuspDomain, blend_width: f64) -> impl Fn([f64; 2]) -> f64 + '_ {
    move |y: [f64; 2]| {
        let (t, perp) = cusp.coordinates(y);
        if t <= 0.0 {
            return 0.0;
        }
        let soft_perp = (perp * perp + blend_width * blend_width / 16.0).sqrt();
        let radial = cusp.half_width * t.powf(cusp.degree) - soft_perp;
        let end = cusp.extent - t;
        // wide, smooth fade at the far end of the cusp
        smooth_step(radial / blend_width) * smooth_step(end / (8.0 * blend_width) + 0.5)
    }
}

/// Interior content of a composite cusp signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InsideSpec {
    Constant { value: f64 },
    GaussianBump { center: [f64; 2], width: f64, amplitude: f64 },
    /// amplitude * w^3 / (|y - center|^2 + w^2)^{3/2}: smooth with an
    /// exponential spectrum, so it carries content at every scale.
    PoissonBump { center: [f64; 2], width: f64, amplitude: f64 },
    /// Lacunary texture of regularity exponent beta (may exceed 1): smooth
    /// content with a definite decay exponent at every scale. The amplitude
    /// ramps in smoothly past `onset` depth over `ramp`, keeping the big
    /// interior content away from the cusp walls and apex.
    Texture { beta: f64, amplitude: f64, seed: u64, onset: f64, ramp: f64 },
}

impl InsideSpec {
    fn evaluator(&self, grid: GridMeta, cusp: &CuspDomain) -> Box<dyn Fn([f64; 2]) -> f64> {
        match *self {
            InsideSpec::Constant { value } => Box::new(move |_| value),
            InsideSpec::GaussianBump {
                center,
                width,
                amplitude,
            } => Box::new(move |y: [f64; 2]| {
                let dx = y[0] - center[0];
                let dy = y[1] - center[1];
                amplitude * (-(dx * dx + dy * dy) / (2.0 * width * width)).exp()
            }),
            InsideSpec::PoissonBump {
                center,
                width,
                amplitude,
            } => Box::new(move |y: [f64; 2]| {
                let dx = y[0] - center[0];
                let dy = y[1] - center[1];
                let r2 = dx * dx + dy * dy;
                amplitude * width.powi(3) / (r2 + width * width).powf(1.5)
            }),
            InsideSpec::Texture {
                beta,
                amplitude,
                seed,
                onset,
                ramp,
            } => {
                let terms = lacunary_terms(grid, beta, seed, None, None);
                let k0 = 2.0 * std::f64::consts::PI / grid.domain_len;
                let cusp = *cusp;
                Box::new(move |y: [f64; 2]| {
                    let (t, _) = cusp.coordinates(y);
                    let gate = smooth_step((t - onset) / ramp.max(1e-9));
                    gate * amplitude * eval_lacunary(&terms, k0, y)
                })
            }
        }
    }
}

/// Windowed point singularity |x - x0|^alpha w(x - x0): Hölder exponent
/// alpha at x0, smooth elsewhere. Displacements are taken on the torus so
/// the sample stays symmetric about x0.
pub fn holder_cusp(grid: GridMeta, alpha: f64, x0: [f64; 2], window_radius: f64) -> Result<GridSignal> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CoreError::InvalidParameter(
            "Hölder exponent must lie in (0, 1)".into(),
        ));
    }
    Ok(GridSignal::from_fn(grid, |pos| {
        let d = grid.torus_displacement(x0, pos);
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        r.powf(alpha) * bump_window(r, window_radius)
    }))
}

/// Weierstrass-type rough background of Hölder exponent beta:
/// sum over j of 2^{-beta j} cos(2^j k0 (x . e_j) + phi_j), truncated below
/// the grid Nyquist (or at `levels` when given, for grid-independent
/// content). With a fixed `direction` every level oscillates along it; with
/// `None` each level picks its own seeded direction, so the roughness is not
/// confined to one orientation.
pub fn rough_background(
    grid: GridMeta,
    beta: f64,
    seed: u64,
    direction: Option<[f64; 2]>,
    levels: Option<u32>,
) -> Result<GridSignal> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(CoreError::InvalidParameter(
            "rough background exponent must lie in (0, 1)".into(),
        ));
    }
    let fixed = match direction {
        Some(d) => {
            let norm = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if norm == 0.0 {
                return Err(CoreError::InvalidParameter("direction must be nonzero".into()));
            }
            Some([d[0] / norm, d[1] / norm])
        }
        None => None,
    };
    let terms = lacunary_terms(grid, beta, seed, fixed, levels);
    let k0 = 2.0 * std::f64::consts::PI / grid.domain_len;
    Ok(GridSignal::from_fn(grid, |pos| eval_lacunary(&terms, k0, pos)))
}

/// Per level: integer wave vectors of magnitude ~2^j (kept on the frequency
/// lattice so the sample stays periodic), amplitudes |m|^{-beta}, phases.
/// With no fixed direction, 2-D levels carry three wave vectors at seeded
/// orientations so the texture is not confined to one direction.
fn lacunary_terms(
    grid: GridMeta,
    beta: f64,
    seed: u64,
    fixed: Option<[f64; 2]>,
    levels: Option<u32>,
) -> Vec<([f64; 2], f64, f64)> {
    let max_level = ((grid.samples_per_axis / 4) as f64).log2().floor() as u32;
    let levels = levels.unwrap_or(max_level).min(max_level);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for j in 0..=levels {
        let radius = (1u64 << j) as f64;
        let waves = match (fixed, grid.dimension) {
            (None, 2) => 3,
            _ => 1,
        };
        for w in 0..waves {
            let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let m = match (fixed, grid.dimension) {
                (Some(e), _) => [(radius * e[0]).round(), (radius * e[1]).round()],
                (None, 1) => [radius, 0.0],
                (None, _) => {
                    let th: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
                    let m = [(radius * th.cos()).round(), (radius * th.sin()).round()];
                    if m[0] == 0.0 && m[1] == 0.0 {
                        [radius * if w % 2 == 0 { 1.0 } else { -1.0 }, 0.0]
                    } else {
                        m
                    }
                }
            };
            let mag = (m[0] * m[0] + m[1] * m[1]).sqrt().max(1.0);
            terms.push((m, mag.powf(-beta), phi));
        }
    }
    terms
}

fn eval_lacunary(terms: &[([f64; 2], f64, f64)], k0: f64, pos: [f64; 2]) -> f64 {
    let mut acc = 0.0;
    for (m, amp, phi) in terms {
        acc += amp * (k0 * (m[0] * pos[0] + m[1] * pos[1]) + phi).cos();
    }
    acc
}

/// Composite cusp signal: smooth interior content inside the eroded cusp,
/// a rough exterior of exponent `outside_beta` off the dilated cusp, and a
/// smooth partition blend in between.
#[allow(clippy::too_many_arguments)]
pub fn composite_cusp(
    grid: GridMeta,
    cusp: &CuspDomain,
    inside: InsideSpec,
    outside_beta: f64,
    blend_width: f64,
    seed: u64,
) -> Result<GridSignal> {
    if grid.dimension != 2 {
        return Err(CoreError::UnsupportedDimension(grid.dimension));
    }
    if cusp.extent < 4.0 * grid.spacing() {
        return Err(CoreError::DegenerateCusp);
    }
    let rough = rough_background(grid, outside_beta, seed, None, None)?;
    let phi = cusp_partition(cusp, blend_width);
    let inner = inside.evaluator(grid, cusp);
    let values = (0..grid.total_samples())
        .map(|i| {
            let y = grid.position(i);
            let w = phi(y);
            let v = if w == 1.0 {
                inner(y)
            } else if w == 0.0 {
                rough.values[i].re
            } else {
                w * inner(y) + (1.0 - w) * rough.values[i].re
            };
            Complex::new(v, 0.0)
        })
        .collect();
    Ok(GridSignal { grid, values })
}

/// Oscillating cusp: sin(t^{-alpha}) inside the cusp (t the axial depth),
/// with the phase frozen below the depth where the local oscillation
/// wavelength t^{alpha+1}/alpha falls under 4 grid steps; rough exterior as
/// in `composite_cusp`.
pub fn oscillating_cusp(
    grid: GridMeta,
    cusp: &CuspDomain,
    alpha: f64,
    outside_beta: f64,
    blend_width: f64,
    seed: u64,
) -> Result<GridSignal> {
    if grid.dimension != 2 {
        return Err(CoreError::UnsupportedDimension(grid.dimension));
    }
    if !(alpha > 1.0) {
        return Err(CoreError::InvalidParameter(
            "oscillation exponent must be > 1".into(),
        ));
    }
    if cusp.extent < 4.0 * grid.spacing() {
        return Err(CoreError::DegenerateCusp);
    }
    let t_min = oscillation_resolution_floor(grid, alpha);
    let rough = rough_background(grid, outside_beta, seed, None, None)?;
    let phi = cusp_partition(cusp, blend_width);
    let values = (0..grid.total_samples())
        .map(|i| {
            let y = grid.position(i);
            let w = phi(y);
            let inner = if w > 0.0 {
                let (t, _) = cusp.coordinates(y);
                let t_eff = t.max(t_min);
                (t_eff.powf(-alpha)).sin()
            } else {
                0.0
            };
            Complex::new(w * inner + (1.0 - w) * rough.values[i].re, 0.0)
        })
        .collect();
    Ok(GridSignal { grid, values })
}

/// Depth below which sin(t^{-alpha}) is no longer resolvable: the local
/// wavelength t^{alpha+1}/alpha equals 4 grid steps.
pub fn oscillation_resolution_floor(grid: GridMeta, alpha: f64) -> f64 {
    (4.0 * grid.spacing() * alpha).powf(1.0 / (alpha + 1.0))
}

/// Real random signal whose spectrum is confined to mode indices
/// band.0 <= |m| <= band.1 (Euclidean in 2-D). Hermitian by construction.
pub fn band_limited_random(grid: GridMeta, band: (usize, usize), seed: u64) -> Result<GridSignal> {
    let nyquist = grid.samples_per_axis / 2;
    if !(band.0 >= 1 && band.0 <= band.1 && band.1 < nyquist) {
        return Err(CoreError::InvalidParameter(format!(
            "band ({}, {}) must sit inside [1, {})",
            band.0, band.1, nyquist
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = grid.total_samples();
    let n = grid.samples_per_axis as i64;
    let mut spectrum = vec![Complex::default(); total];
    // fill each Hermitian pair once, in deterministic index order
    for idx in 0..total {
        let (mi, mj) = match grid.dimension {
            1 => (crate::spectral::signed_mode(idx, grid.samples_per_axis), 0),
            _ => (
                crate::spectral::signed_mode(idx / grid.samples_per_axis, grid.samples_per_axis),
                crate::spectral::signed_mode(idx % grid.samples_per_axis, grid.samples_per_axis),
            ),
        };
        let mag = ((mi * mi + mj * mj) as f64).sqrt();
        if mag < band.0 as f64 || mag > band.1 as f64 {
            continue;
        }
        let conj_idx = match grid.dimension {
            1 => ((-mi).rem_euclid(n)) as usize,
            _ => {
                let ci = (-mi).rem_euclid(n) as usize;
                let cj = (-mj).rem_euclid(n) as usize;
                ci * grid.samples_per_axis + cj
            }
        };
        if conj_idx < idx {
            continue; // partner already filled
        }
        let re = rng.gen_range(-1.0..1.0);
        let im = rng.gen_range(-1.0..1.0);
        if conj_idx == idx {
            spectrum[idx] = Complex::new(re, 0.0);
        } else {
            spectrum[idx] = Complex::new(re, im);
            spectrum[conj_idx] = Complex::new(re, -im);
        }
    }
    Ok(GridSignal::from_spectrum(grid, spectrum))
}

/// Discrete impulse of unit integral at the grid point nearest x0.
pub fn impulse(grid: GridMeta, x0: [f64; 2]) -> GridSignal {
    let n = grid.samples_per_axis;
    let dx = grid.spacing();
    let wrap = |x: f64| (x / dx).round().rem_euclid(n as f64) as usize;
    let idx = match grid.dimension {
        1 => wrap(x0[0]),
        _ => wrap(x0[0]) * n + wrap(x0[1]),
    };
    let mut s = GridSignal::zeros(grid);
    s.values[idx] = Complex::new(1.0 / grid.cell_measure(), 0.0);
    s
}

/// Single Fourier mode e^{i k x} with k the grid frequency of `mode`.
pub fn single_mode(grid: GridMeta, mode: [i64; 2]) -> GridSignal {
    GridSignal::from_fn_complex(grid, |pos| {
        let base = 2.0 * std::f64::consts::PI / grid.domain_len;
        let phase = base * (mode[0] as f64 * pos[0] + mode[1] as f64 * pos[1]);
        Complex::from_polar(1.0, phase)
    })
}

impl GridSignal {
    pub fn from_fn_complex(grid: GridMeta, f: impl Fn([f64; 2]) -> Complex<f64>) -> Self {
        let values = (0..grid.total_samples()).map(|i| f(grid.position(i))).collect();
        GridSignal { grid, values }
    }
}
