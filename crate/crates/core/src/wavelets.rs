//! Catalog of wavelets defined analytically in the Fourier domain, plus the
//! admissibility, reconstruction and vanishing-moment machinery.
//!
//! All catalog wavelets have real, radially symmetric spectra. Position-space
//! samples are produced on demand by inverse transform (see
//! [`crate::grid::GridSignal::from_continuum_spectrum`]).

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Radial table of spectral values, log-spaced in |k|, cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    pub log_r_min: f64,
    pub log_step: f64,
    pub values: Vec<f64>,
    /// Whether the tabulated wavelet is known to have all moments vanishing.
    pub schwartz_class: bool,
}

impl SpectralTable {
    /// Catmull-Rom interpolation in ln|k|; zero outside the tabulated range
    /// (the range is chosen wide enough that boundary values have decayed).
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let t = (r.ln() - self.log_r_min) / self.log_step;
        if t < 0.0 || t > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let u = t - i as f64;
        let get = |j: isize| -> f64 {
            let j = (i as isize + j).clamp(0, self.values.len() as isize - 1);
            self.values[j as usize]
        };
        let (p0, p1, p2, p3) = (get(-1), get(0), get(1), get(2));
        let (u2, u3) = (u * u, u * u * u);
        0.5 * ((2.0 * p1)
            + (-p0 + p2) * u
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2
            + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3)
    }
}

/// Analytic family of a wavelet spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum WaveletKind {
    /// ghat(k) = exp(-ln^2 |k|); all moments vanish.
    LogNormalRadial,
    /// ghat(k) = |k|^m exp(-|k|^2 / 2); vanishes to exactly order m at 0.
    GaussianDerivative { order: u32 },
    /// Spectral Laplacian of the inner wavelet: hhat(k) = -|k|^2 ghat(k).
    LaplacianOf(Box<WaveletSpec>),
    /// Tabulated radial spectrum (reconstruction wavelets land here).
    TabulatedSpectral(SpectralTable),
}

/// A wavelet defined by its Fourier-domain profile, with a positive
/// normalization constant multiplying the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    pub kind: WaveletKind,
    pub dimension: usize,
    pub normalization: f64,
}

impl WaveletSpec {
    pub fn log_normal(dimension: usize) -> Result<Self> {
        check_dim(dimension)?;
        Ok(WaveletSpec {
            kind: WaveletKind::LogNormalRadial,
            dimension,
            normalization: 1.0,
        })
    }

    pub fn gaussian_derivative(dimension: usize, order: u32) -> Result<Self> {
        check_dim(dimension)?;
        if order < 2 {
            return Err(CoreError::InvalidParameter(
                "gaussian-derivative order must be >= 2".into(),
            ));
        }
        Ok(WaveletSpec {
            kind: WaveletKind::GaussianDerivative { order },
            dimension,
            normalization: 1.0,
        })
    }

    /// Spectral profile at a frequency vector; real for the whole catalog.
    pub fn spectrum(&self, k: [f64; 2]) -> f64 {
        self.spectrum_radial((k[0] * k[0] + k[1] * k[1]).sqrt())
    }

    /// Spectral profile at radius |k|.
    pub fn spectrum_radial(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.normalization
            * match &self.kind {
                WaveletKind::LogNormalRadial => (-r.ln().powi(2)).exp(),
                WaveletKind::GaussianDerivative { order } => {
                    r.powi(*order as i32) * (-0.5 * r * r).exp()
                }
                WaveletKind::LaplacianOf(inner) => -r * r * inner.spectrum_radial(r),
                WaveletKind::TabulatedSpectral(table) => table.eval(r),
            }
    }

    /// Evaluate the spectrum on a list of frequency vectors.
    pub fn eval_spectrum(&self, freqs: &[[f64; 2]]) -> Vec<f64> {
        freqs.iter().map(|&k| self.spectrum(k)).collect()
    }

    /// All catalog wavelets are radially symmetric; tabulated spectra are
    /// radial by construction.
    pub fn is_radial(&self) -> bool {
        true
    }

    /// Whether all moments vanish (spectrum flat to every order at 0).
    pub fn schwartz_class_s0(&self) -> bool {
        match &self.kind {
            WaveletKind::LogNormalRadial => true,
            WaveletKind::GaussianDerivative { .. } => false,
            WaveletKind::LaplacianOf(inner) => inner.schwartz_class_s0(),
            WaveletKind::TabulatedSpectral(t) => t.schwartz_class,
        }
    }

    /// h = Laplacian of g in position space: hhat(k) = -|k|^2 ghat(k).
    pub fn laplacian_of(&self) -> WaveletSpec {
        WaveletSpec {
            kind: WaveletKind::LaplacianOf(Box::new(self.clone())),
            dimension: self.dimension,
            normalization: 1.0,
        }
    }

    pub fn with_normalization(mut self, c: f64) -> Self {
        self.normalization = c;
        self
    }

    /// Rescale so that the self-profile integral equals 1 (strict
    /// admissibility with constant 1).
    pub fn unit_normalized(&self, quad: &ScaleQuadrature) -> Result<WaveletSpec> {
        let profile = admissibility_profile(self, self, None, quad)?;
        let c = profile.max_value;
        if !(c.is_finite() && c > 0.0) {
            return Err(CoreError::Inadmissible(format!(
                "self-profile integral {c} is not positive and finite"
            )));
        }
        let mut out = self.clone();
        out.normalization = self.normalization / c.sqrt();
        Ok(out)
    }

    /// Largest m <= max_order with ghat(k) = o(|k|^m) as k -> 0, decided by
    /// the measured log-log slope of the spectrum over a small-k window.
    pub fn moment_decay_order(&self, max_order: u32) -> u32 {
        let slope = self.small_k_slope();
        if !slope.is_finite() {
            // Spectrum underflowed to zero on the probe window: decays
            // faster than any tested power.
            return max_order;
        }
        let m = (slope - 0.5).floor();
        m.clamp(0.0, max_order as f64) as u32
    }

    /// Least-squares slope of ln|ghat| vs ln|k| over k in [1e-6, 1e-4].
    fn small_k_slope(&self) -> f64 {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let points = 13;
        for i in 0..points {
            let lr = (-6.0 + 2.0 * i as f64 / (points - 1) as f64) * std::f64::consts::LN_10;
            let v = self.spectrum_radial(lr.exp()).abs();
            if v > 0.0 && v.is_finite() {
                xs.push(lr);
                ys.push(v.ln());
            }
        }
        if xs.len() < 3 {
            return f64::INFINITY;
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }
}

fn check_dim(dimension: usize) -> Result<()> {
    if dimension == 1 || dimension == 2 {
        Ok(())
    } else {
        Err(CoreError::UnsupportedDimension(dimension))
    }
}

/// Trapezoid quadrature in t = ln a over [-T, T], with automatic span growth
/// until the integrand tail is negligible and step halving until a Richardson
/// check settles.
#[derive(Debug, Clone, Copy)]
pub struct ScaleQuadrature {
    pub initial_half_span: f64,
    pub max_half_span: f64,
    pub initial_step: f64,
    pub tail_tolerance: f64,
    pub refine_tolerance: f64,
}

impl Default for ScaleQuadrature {
    fn default() -> Self {
        ScaleQuadrature {
            initial_half_span: 8.0,
            max_half_span: 64.0,
            initial_step: 0.25,
            tail_tolerance: 1e-13,
            refine_tolerance: 1e-11,
        }
    }
}

/// Integral over (0, inf) of f(a) da/a, evaluated as integral of f(e^t) dt.
pub fn integrate_log_scale(f: impl Fn(f64) -> f64, quad: &ScaleQuadrature) -> Result<f64> {
    let g = |t: f64| f(t.exp());

    let mut half_span = quad.initial_half_span;
    let peak = |t_span: f64| -> f64 {
        let mut m: f64 = 0.0;
        let steps = 200;
        for i in 0..=steps {
            let t = -t_span + 2.0 * t_span * i as f64 / steps as f64;
            m = m.max(g(t).abs());
        }
        m
    };
    let mut max_val = peak(half_span);
    if !(max_val.is_finite()) {
        return Err(CoreError::QuadratureNonConvergence(
            "integrand not finite".into(),
        ));
    }
    if max_val == 0.0 {
        return Ok(0.0);
    }
    while g(-half_span).abs().max(g(half_span).abs()) > quad.tail_tolerance * max_val {
        half_span *= 1.5;
        if half_span > quad.max_half_span {
            return Err(CoreError::QuadratureNonConvergence(format!(
                "integrand tail above tolerance at |ln a| = {half_span:.1}"
            )));
        }
        max_val = max_val.max(peak(half_span));
    }

    let trapezoid = |h: f64| -> f64 {
        let n = (2.0 * half_span / h).ceil() as usize;
        let h = 2.0 * half_span / n as f64;
        let mut acc = 0.5 * (g(-half_span) + g(half_span));
        for i in 1..n {
            acc += g(-half_span + i as f64 * h);
        }
        acc * h
    };

    let mut h = quad.initial_step;
    let mut value = trapezoid(h);
    loop {
        let refined = trapezoid(h / 2.0);
        let err = (refined - value).abs();
        value = refined;
        h /= 2.0;
        if err <= quad.refine_tolerance * value.abs().max(1.0) {
            return Ok(value);
        }
        if h < 1e-4 {
            return Err(CoreError::QuadratureNonConvergence(format!(
                "Richardson check still moving at step {h:.1e} (last delta {err:.3e})"
            )));
        }
    }
}

/// Direction-indexed values of the scale integral
/// m_{g,h}(u) = âˆ«0^inf da/a conj(ghat(a u)) hhat(a u).
#[derive(Debug, Clone)]
pub struct AdmissibilityProfile {
    pub directions: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    pub min_value: f64,
    pub max_value: f64,
    /// True when the profile is constant across directions (up to quadrature
    /// tolerance), i.e. the pair has a genuine cross constant.
    pub cross_constant: bool,
}

impl AdmissibilityProfile {
    /// Smallest c >= 1 with 1/c <= profile <= c.
    pub fn bound_constant(&self) -> f64 {
        if self.min_value <= 0.0 {
            f64::INFINITY
        } else {
            self.max_value.max(1.0 / self.min_value)
        }
    }
}

/// Default direction samples for a profile: both signs in 1-D, a ring of
/// angles in 2-D.
pub fn default_directions(dimension: usize, count_2d: usize) -> Vec<[f64; 2]> {
    match dimension {
        1 => vec![[1.0, 0.0], [-1.0, 0.0]],
        _ => (0..count_2d)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / count_2d as f64;
                [th.cos(), th.sin()]
            })
            .collect(),
    }
}

/// Scale integral of conj(ghat) hhat per direction.
pub fn admissibility_profile(
    g: &WaveletSpec,
    h: &WaveletSpec,
    directions: Option<Vec<[f64; 2]>>,
    quad: &ScaleQuadrature,
) -> Result<AdmissibilityProfile> {
    if g.dimension != h.dimension {
        return Err(CoreError::InvalidParameter(
            "analysis and synthesis wavelets must share a dimension".into(),
        ));
    }
    let directions = directions.unwrap_or_else(|| default_directions(g.dimension, 32));
    let mut values = Vec::with_capacity(directions.len());
    for u in &directions {
        let v = integrate_log_scale(
            |a| {
                let k = [a * u[0], a * u[1]];
                g.spectrum(k) * h.spectrum(k)
            },
            quad,
        )?;
        values.push(v);
    }
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = if max_value.abs() > 0.0 {
        (max_value - min_value).abs() / max_value.abs()
    } else {
        0.0
    };
    Ok(AdmissibilityProfile {
        directions,
        values,
        min_value,
        max_value,
        cross_constant: spread < 1e-8,
    })
}

/// Reconstruction wavelet r with cross constant c_{g,r} = 1: the spectrum of
/// g divided by its own scale-integral profile, returned as a tabulated
/// radial wavelet.
pub fn reconstruction_wavelet(g: &WaveletSpec, quad: &ScaleQuadrature) -> Result<WaveletSpec> {
    let profile = admissibility_profile(g, g, None, quad)?;
    if !(profile.min_value > 1e-300 && profile.max_value.is_finite()) {
        return Err(CoreError::Inadmissible(format!(
            "self profile in [{:.3e}, {:.3e}] is not bounded away from 0",
            profile.min_value, profile.max_value
        )));
    }
    // The profile is scale-invariant and, for the radial catalog, constant
    // in direction as well; divide the spectrum by it pointwise.
    let c = profile.values[0];
    let log_r_min = (1e-9f64).ln();
    let log_r_max = (1e9f64).ln();
    let knots = 16384;
    let log_step = (log_r_max - log_r_min) / (knots - 1) as f64;
    let values = (0..knots)
        .map(|i| g.spectrum_radial((log_r_min + i as f64 * log_step).exp()) / c)
        .collect();
    Ok(WaveletSpec {
        kind: WaveletKind::TabulatedSpectral(SpectralTable {
            log_r_min,
            log_step,
            values,
            schwartz_class: g.schwartz_class_s0(),
        }),
        dimension: g.dimension,
        normalization: 1.0,
    })
}

// --- JSON form per the external interface:
//     {"kind": "...", "dimension": n, "params": {...}} ---

#[derive(Serialize, Deserialize)]
struct WaveletJson {
    kind: String,
    dimension: usize,
    #[serde(default)]
    params: serde_json::Value,
}

impl WaveletSpec {
    pub fn to_json(&self) -> serde_json::Value {
        let (kind, params) = match &self.kind {
            WaveletKind::LogNormalRadial => (
                "log-normal-radial",
                json!({ "normalization": self.normalization }),
            ),
            WaveletKind::GaussianDerivative { order } => (
                "gaussian-derivative",
                json!({ "order": order, "normalization": self.normalization }),
            ),
            WaveletKind::LaplacianOf(inner) => (
                "laplacian-of",
                json!({ "inner": inner.to_json(), "normalization": self.normalization }),
            ),
            WaveletKind::TabulatedSpectral(t) => (
                "tabulated-spectral",
                json!({
                    "log_r_min": t.log_r_min,
                    "log_step": t.log_step,
                    "values": t.values,
                    "schwartz_class": t.schwartz_class,
                    "normalization": self.normalization,
                }),
            ),
        };
        json!({ "kind": kind, "dimension": self.dimension, "params": params })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<WaveletSpec> {
        let w: WaveletJson = serde_json::from_value(v.clone())?;
        check_dim(w.dimension)?;
        let norm = w
            .params
            .get("normalization")
            .and_then(|v| v.as_f64())
            .unwrap_or(1.0);
        if !(norm > 0.0) {
            return Err(CoreError::InvalidParameter(
                "wavelet normalization must be positive".into(),
            ));
        }
        let kind = match w.kind.as_str() {
            "log-normal-radial" => WaveletKind::LogNormalRadial,
            "gaussian-derivative" => {
                let order = w
                    .params
                    .get("order")
                    .and_then(|v| v.as_u64())
                    .ok_or_else(|| {
                        CoreError::InvalidParameter("gaussian-derivative needs an order".into())
                    })? as u32;
                if order < 2 {
                    return Err(CoreError::InvalidParameter(
                        "gaussian-derivative order must be >= 2".into(),
                    ));
                }
                WaveletKind::GaussianDerivative { order }
            }
            "laplacian-of" => {
                let inner = w.params.get("inner").ok_or_else(|| {
                    CoreError::InvalidParameter("laplacian-of needs an inner wavelet".into())
                })?;
                WaveletKind::LaplacianOf(Box::new(WaveletSpec::from_json(inner)?))
            }
            "tabulated-spectral" => {
                let table: SpectralTableJson = serde_json::from_value(w.params.clone())?;
                WaveletKind::TabulatedSpectral(SpectralTable {
                    log_r_min: table.log_r_min,
                    log_step: table.log_step,
                    values: table.values,
                    schwartz_class: table.schwartz_class,
                })
            }
            other => {
                return Err(CoreError::InvalidParameter(format!(
                    "unknown wavelet kind '{other}'"
                )))
            }
        };
        Ok(WaveletSpec {
            kind,
            dimension: w.dimension,
            normalization: norm,
        })
    }
}

#[derive(Deserialize)]
struct SpectralTableJson {
    log_r_min: f64,
    log_step: f64,
    values: Vec<f64>,
    #[serde(default)]
    schwartz_class: bool,
}
