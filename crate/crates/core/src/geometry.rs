//! The non-Euclidean geometry of the position-scale half-space: group
//! structure, the multiplicative distance, neighborhood families, the
//! well-separation calculus and influence regions.
//!
//! Points live in R^n x R_+ with no periodic identification; region masks are
//! rasterized on the same (b, log a) lattice as the transform fields so the
//! geometry and the analysis stay aligned.

use crate::error::{CoreError, Result};
use crate::grid::{GridMeta, ScaleGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// A point (b, a) of the half-space, a > 0. The second component of `b` is
/// zero in one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpacePoint {
    pub b: [f64; 2],
    pub a: f64,
}

impl HalfSpacePoint {
    pub fn new(b: [f64; 2], a: f64) -> Self {
        debug_assert!(a > 0.0);
        HalfSpacePoint { b, a }
    }

    pub fn new_1d(b: f64, a: f64) -> Self {
        HalfSpacePoint::new([b, 0.0], a)
    }

    pub fn b_norm(&self) -> f64 {
        (self.b[0] * self.b[0] + self.b[1] * self.b[1]).sqrt()
    }
}

/// Group law: (b, a)(b', a') = (a b' + b, a a').
pub fn compose(p: HalfSpacePoint, q: HalfSpacePoint) -> HalfSpacePoint {
    HalfSpacePoint::new(
        [p.a * q.b[0] + p.b[0], p.a * q.b[1] + p.b[1]],
        p.a * q.a,
    )
}

/// Inverse element: (b, a)^{-1} = (-b/a, 1/a).
pub fn inverse(p: HalfSpacePoint) -> HalfSpacePoint {
    HalfSpacePoint::new([-p.b[0] / p.a, -p.b[1] / p.a], 1.0 / p.a)
}

/// Neutral element (0, 1).
pub fn identity() -> HalfSpacePoint {
    HalfSpacePoint::new([0.0, 0.0], 1.0)
}

/// Distance of a point from the neutral element:
/// Delta((b,a)) = a + 1/a + |b| (1 + 1/a). Minimum value 2, at (0,1).
pub fn delta(p: HalfSpacePoint) -> f64 {
    p.a + 1.0 / p.a + p.b_norm() * (1.0 + 1.0 / p.a)
}

/// The multiplicative distance
/// dist = a/a' + a'/a + |b - b'|/a' + |b' - b|/a; symmetric, minimum 2.
pub fn dist(p: HalfSpacePoint, q: HalfSpacePoint) -> f64 {
    let db = ((p.b[0] - q.b[0]).powi(2) + (p.b[1] - q.b[1]).powi(2)).sqrt();
    p.a / q.a + q.a / p.a + db / q.a + db / p.a
}

/// Parabolic line Xi(xi, gamma): points (origin + lambda xi, lambda^gamma)
/// with lambda log-spaced in (lambda_lo, lambda_hi].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicPath {
    pub origin: [f64; 2],
    pub xi: [f64; 2],
    pub gamma: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub samples: usize,
}

impl ParabolicPath {
    pub fn new(xi: [f64; 2], gamma: f64, lambda_lo: f64, lambda_hi: f64, samples: usize) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(CoreError::InvalidParameter("path exponent gamma must be > 1".into()));
        }
        if !(lambda_lo > 0.0 && lambda_lo < lambda_hi && lambda_hi <= 0.5) {
            return Err(CoreError::InvalidParameter(
                "lambda range must satisfy 0 < lo < hi <= 1/2".into(),
            ));
        }
        if samples < 2 {
            return Err(CoreError::InvalidParameter("path needs at least 2 samples".into()));
        }
        Ok(ParabolicPath {
            origin: [0.0, 0.0],
            xi,
            gamma,
            lambda_lo,
            lambda_hi,
            samples,
        })
    }

    pub fn anchored(mut self, origin: [f64; 2]) -> Self {
        self.origin = origin;
        self
    }

    pub fn lambdas(&self) -> Vec<f64> {
        let (l0, l1) = (self.lambda_lo.ln(), self.lambda_hi.ln());
        (0..self.samples)
            .map(|i| (l0 + (l1 - l0) * i as f64 / (self.samples - 1) as f64).exp())
            .collect()
    }

    pub fn point(&self, lambda: f64) -> HalfSpacePoint {
        HalfSpacePoint::new(
            [
                self.origin[0] + lambda * self.xi[0],
                self.origin[1] + lambda * self.xi[1],
            ],
            lambda.powf(self.gamma),
        )
    }

    pub fn points(&self) -> Vec<HalfSpacePoint> {
        self.lambdas().iter().map(|&l| self.point(l)).collect()
    }
}

/// Torus-Euclidean distance field over a signal grid: distance from each
/// lattice point to a support set. Used by influence regions; the underlying
/// signal domain is periodic, so wrapped copies of the support count.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub grid: GridMeta,
    pub support_indices: Vec<usize>,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn from_indicator(grid: GridMeta, indicator: &[bool]) -> Result<Self> {
        if indicator.len() != grid.total_samples() {
            return Err(CoreError::GridMismatch);
        }
        if !indicator.iter().any(|&x| x) {
            return Err(CoreError::EmptyMask);
        }
        let support_indices = indicator
            .iter()
            .enumerate()
            .filter_map(|(i, &x)| if x { Some(i) } else { None })
            .collect();
        let values = distance_transform(grid, indicator);
        Ok(DistanceField {
            grid,
            support_indices,
            values,
        })
    }

    /// Distance at an arbitrary position, bilinear on the torus.
    pub fn distance(&self, pos: [f64; 2]) -> f64 {
        let n = self.grid.samples_per_axis;
        let dx = self.grid.spacing();
        let fx = (pos[0] / dx).rem_euclid(n as f64);
        let i0 = fx.floor() as usize % n;
        let i1 = (i0 + 1) % n;
        let u = fx - fx.floor();
        match self.grid.dimension {
            1 => self.values[i0] * (1.0 - u) + self.values[i1] * u,
            _ => {
                let fy = (pos[1] / dx).rem_euclid(n as f64);
                let j0 = fy.floor() as usize % n;
                let j1 = (j0 + 1) % n;
                let v = fy - fy.floor();
                let at = |i: usize, j: usize| self.values[i * n + j];
                at(i0, j0) * (1.0 - u) * (1.0 - v)
                    + at(i0, j1) * (1.0 - u) * v
                    + at(i1, j0) * u * (1.0 - v)
                    + at(i1, j1) * u * v
            }
        }
    }
}

/// Exact Euclidean distance transform on the periodic grid (per-axis
/// parabola sweep on a tripled line to honor the wrap).
fn distance_transform(grid: GridMeta, indicator: &[bool]) -> Vec<f64> {
    let n = grid.samples_per_axis;
    let dx = grid.spacing();
    let inf = f64::INFINITY;
    match grid.dimension {
        1 => {
            let f: Vec<f64> = indicator.iter().map(|&x| if x { 0.0 } else { inf }).collect();
            let sq = periodic_squared_edt(&f, n);
            sq.iter().map(|&d| d.sqrt() * dx).collect()
        }
        _ => {
            // pass 1: along columns (axis 1) per row
            let mut tmp = vec![inf; n * n];
            for r in 0..n {
                let f: Vec<f64> = (0..n)
                    .map(|c| if indicator[r * n + c] { 0.0 } else { inf })
                    .collect();
                let sq = periodic_squared_edt(&f, n);
                tmp[r * n..(r + 1) * n].copy_from_slice(&sq);
            }
            // pass 2: along rows (axis 0) per column
            let mut out = vec![0.0; n * n];
            for c in 0..n {
                let f: Vec<f64> = (0..n).map(|r| tmp[r * n + c]).collect();
                let sq = periodic_squared_edt(&f, n);
                for r in 0..n {
                    out[r * n + c] = sq[r].sqrt() * dx;
                }
            }
            out
        }
    }
}

/// Squared distance transform of a sampled cost on a periodic line:
/// d(p) = min_q ((p-q mod n)^2 + f(q)), in grid units.
fn periodic_squared_edt(f: &[f64], n: usize) -> Vec<f64> {
    let tripled: Vec<f64> = f.iter().chain(f.iter()).chain(f.iter()).copied().collect();
    let full = squared_edt_line(&tripled);
    full[n..2 * n].to_vec()
}

/// Felzenszwalb-Huttenlocher lower envelope of parabolas.
fn squared_edt_line(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q].is_infinite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = if f[p].is_infinite() {
                f64::NEG_INFINITY
            } else {
                ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64)
            };
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if f[v[0]].is_infinite() {
        return vec![f64::INFINITY; n];
    }
    let mut out = vec![0.0; n];
    let mut k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        out[q] = d * d + f[p];
    }
    out
}

/// Region of the half-space: an analytic predicate, a raster, or a boolean
/// composition of both.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionExpr {
    /// a > |b - center|^exponent (above) or a < |b - center|^exponent (below),
    /// intersected with a < a_cap.
    ParabolicStrip {
        center: [f64; 2],
        exponent: f64,
        above: bool,
        a_cap: f64,
    },
    /// Gamma_epsilon tube around a sampled parabolic path: membership holds
    /// when some path sample q has dist(p, q) <= Delta(q)^epsilon.
    GammaTube { path: ParabolicPath, epsilon: f64 },
    /// Union of unit-opening cones over a support set in signal space:
    /// (beta, alpha) belongs when the Euclidean distance from beta to the
    /// support is <= alpha.
    InfluenceRegion(DistanceField),
    All,
    Empty,
    Complement(Box<RegionExpr>),
    Union(Vec<RegionExpr>),
    Intersection(Vec<RegionExpr>),
    Raster(RasterMask),
}

/// A region of the half-space with a total membership test.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub expr: RegionExpr,
}

impl RegionMask {
    pub fn new(expr: RegionExpr) -> Self {
        RegionMask { expr }
    }

    pub fn parabolic_strip(center: [f64; 2], exponent: f64, above: bool, a_cap: f64) -> Self {
        RegionMask::new(RegionExpr::ParabolicStrip {
            center,
            exponent,
            above,
            a_cap,
        })
    }

    pub fn gamma_tube(path: ParabolicPath, epsilon: f64) -> Self {
        RegionMask::new(RegionExpr::GammaTube { path, epsilon })
    }

    pub fn all() -> Self {
        RegionMask::new(RegionExpr::All)
    }

    pub fn empty() -> Self {
        RegionMask::new(RegionExpr::Empty)
    }

    pub fn complement(self) -> Self {
        match self.expr {
            RegionExpr::Complement(inner) => RegionMask::new(*inner),
            RegionExpr::Raster(r) => RegionMask::new(RegionExpr::Raster(r.complement())),
            expr => RegionMask::new(RegionExpr::Complement(Box::new(expr))),
        }
    }

    pub fn union(parts: Vec<RegionMask>) -> Self {
        RegionMask::new(RegionExpr::Union(parts.into_iter().map(|m| m.expr).collect()))
    }

    pub fn intersection(parts: Vec<RegionMask>) -> Self {
        RegionMask::new(RegionExpr::Intersection(
            parts.into_iter().map(|m| m.expr).collect(),
        ))
    }

    pub fn contains(&self, p: HalfSpacePoint) -> bool {
        contains_expr(&self.expr, p)
    }

    /// Rasterize on a (b, log a) lattice.
    pub fn rasterize(&self, lattice: &SampleLattice) -> RasterMask {
        match &self.expr {
            RegionExpr::Raster(r) if r.grid == lattice.grid && r.scales == lattice.scales => {
                r.clone()
            }
            // ball-by-ball fill instead of a full lattice sweep
            RegionExpr::GammaTube { path, epsilon } => {
                rasterize_point_balls(&path.points(), *epsilon, lattice)
            }
            _ => {
                let bits = lattice
                    .points_indexed()
                    .map(|(_, p)| self.contains(p))
                    .collect();
                RasterMask {
                    grid: lattice.grid,
                    scales: lattice.scales,
                    bits,
                }
            }
        }
    }
}

/// Union of the balls U(q, Delta(q)^epsilon) over the given centers,
/// rasterized by enumerating each ball's lattice cells directly.
pub fn rasterize_point_balls(
    centers: &[HalfSpacePoint],
    epsilon: f64,
    lattice: &SampleLattice,
) -> RasterMask {
    let grid = lattice.grid;
    let scales = lattice.scales;
    let n = grid.samples_per_axis as i64;
    let dx = grid.spacing();
    let per = grid.total_samples();
    let mut bits = vec![false; lattice.len()];
    for &q in centers {
        let r = delta(q).powf(epsilon);
        if r < 2.0 {
            continue; // the ball is empty below the metric's minimum
        }
        // scale band: a/aq + aq/a <= r
        let half = 0.5 * (r * r - 4.0).max(0.0).sqrt();
        let (rho_lo, rho_hi) = (0.5 * r - half, 0.5 * r + half);
        let j_lo = scales.log_index(q.a * rho_lo).ceil().max(0.0) as usize;
        let j_hi = scales
            .log_index(q.a * rho_hi)
            .floor()
            .min(scales.count as f64 - 1.0);
        if j_hi < 0.0 {
            continue;
        }
        for j in j_lo..=(j_hi as usize) {
            let a = scales.scale(j);
            let s = a / q.a + q.a / a;
            if s > r {
                continue;
            }
            let radius_b = (r - s) / (1.0 / a + 1.0 / q.a);
            match grid.dimension {
                1 => {
                    let i_lo = ((q.b[0] - radius_b) / dx).ceil().max(0.0) as i64;
                    let i_hi = (((q.b[0] + radius_b) / dx).floor() as i64).min(n - 1);
                    for i in i_lo..=i_hi {
                        bits[j * per + i as usize] = true;
                    }
                }
                _ => {
                    let x_lo = ((q.b[0] - radius_b) / dx).ceil().max(0.0) as i64;
                    let x_hi = (((q.b[0] + radius_b) / dx).floor() as i64).min(n - 1);
                    let r2 = radius_b * radius_b;
                    for ix in x_lo..=x_hi {
                        let bx = ix as f64 * dx - q.b[0];
                        let rem = r2 - bx * bx;
                        if rem < 0.0 {
                            continue;
                        }
                        let ry = rem.sqrt();
                        let y_lo = ((q.b[1] - ry) / dx).ceil().max(0.0) as i64;
                        let y_hi = (((q.b[1] + ry) / dx).floor() as i64).min(n - 1);
                        for iy in y_lo..=y_hi {
                            bits[j * per + (ix * n + iy) as usize] = true;
                        }
                    }
                }
            }
        }
    }
    RasterMask { grid, scales, bits }
}

fn contains_expr(expr: &RegionExpr, p: HalfSpacePoint) -> bool {
    match expr {
        RegionExpr::ParabolicStrip {
            center,
            exponent,
            above,
            a_cap,
        } => {
            if p.a >= *a_cap {
                return false;
            }
            let r = ((p.b[0] - center[0]).powi(2) + (p.b[1] - center[1]).powi(2)).sqrt();
            let boundary = r.powf(*exponent);
            if *above {
                p.a > boundary
            } else {
                p.a < boundary
            }
        }
        RegionExpr::GammaTube { path, epsilon } => path
            .points()
            .iter()
            .any(|&q| dist(p, q) <= delta(q).powf(*epsilon)),
        RegionExpr::InfluenceRegion(df) => df.distance(p.b) <= p.a,
        RegionExpr::All => true,
        RegionExpr::Empty => false,
        RegionExpr::Complement(inner) => !contains_expr(inner, p),
        RegionExpr::Union(parts) => parts.iter().any(|e| contains_expr(e, p)),
        RegionExpr::Intersection(parts) => parts.iter().all(|e| contains_expr(e, p)),
        RegionExpr::Raster(r) => r.contains_nearest(p),
    }
}

/// The (b, log a) lattice shared by fields and rasterized regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleLattice {
    pub grid: GridMeta,
    pub scales: ScaleGrid,
}

impl SampleLattice {
    pub fn new(grid: GridMeta, scales: ScaleGrid) -> Self {
        SampleLattice { grid, scales }
    }

    pub fn len(&self) -> usize {
        self.grid.total_samples() * self.scales.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, flat: usize) -> HalfSpacePoint {
        let per_scale = self.grid.total_samples();
        let j = flat / per_scale;
        let i = flat % per_scale;
        HalfSpacePoint::new(self.grid.position(i), self.scales.scale(j))
    }

    pub fn points_indexed(&self) -> impl Iterator<Item = (usize, HalfSpacePoint)> + '_ {
        (0..self.len()).map(move |f| (f, self.point(f)))
    }
}

/// Boolean raster over a sample lattice, scale-major like field values.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterMask {
    pub grid: GridMeta,
    pub scales: ScaleGrid,
    pub bits: Vec<bool>,
}

impl RasterMask {
    pub fn lattice(&self) -> SampleLattice {
        SampleLattice::new(self.grid, self.scales)
    }

    pub fn complement(&self) -> RasterMask {
        RasterMask {
            grid: self.grid,
            scales: self.scales,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn sample_points(&self) -> Vec<HalfSpacePoint> {
        let lat = self.lattice();
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| if b { Some(lat.point(i)) } else { None })
            .collect()
    }

    pub fn is_subset_of(&self, other: &RasterMask) -> bool {
        self.grid == other.grid
            && self.scales == other.scales
            && self
                .bits
                .iter()
                .zip(&other.bits)
                .all(|(a, b)| !*a || *b)
    }

    /// Membership of an off-lattice point by nearest lattice cell.
    fn contains_nearest(&self, p: HalfSpacePoint) -> bool {
        let n = self.grid.samples_per_axis;
        let dx = self.grid.spacing();
        let j = self.scales.log_index(p.a).round();
        if j < 0.0 || j >= self.scales.count as f64 {
            return false;
        }
        let j = j as usize;
        let wrap = |x: f64| -> usize { (x / dx).round().rem_euclid(n as f64) as usize };
        let flat = match self.grid.dimension {
            1 => wrap(p.b[0]),
            _ => wrap(p.b[0]) * n + wrap(p.b[1]),
        };
        self.bits[j * self.grid.total_samples() + flat]
    }
}

/// Gamma_epsilon neighborhood of a region, rasterized on `lattice`:
/// p belongs iff some sampled q in Omega has dist(p, q) <= Delta(q)^epsilon.
/// Because dist >= 2 always, balls with Delta(q)^epsilon < 2 are empty, so
/// Gamma_epsilon(Omega) contains Omega only where Delta^epsilon >= 2.
pub fn gamma_neighborhood(omega: &RegionMask, epsilon: f64, lattice: &SampleLattice) -> RasterMask {
    let raster = omega.rasterize(lattice);
    gamma_neighborhood_raster(&raster, epsilon)
}

pub fn gamma_neighborhood_raster(omega: &RasterMask, epsilon: f64) -> RasterMask {
    let sources: Vec<(HalfSpacePoint, f64)> = omega
        .sample_points()
        .into_iter()
        .map(|q| (q, delta(q).powf(epsilon)))
        .collect();
    let lat = omega.lattice();
    let bits: Vec<bool> = (0..lat.len())
        .into_par_iter()
        .map(|f| {
            let p = lat.point(f);
            sources.iter().any(|&(q, r)| dist(p, q) <= r)
        })
        .collect();
    RasterMask {
        grid: omega.grid,
        scales: omega.scales,
        bits,
    }
}

/// Verdict and worst-case witness of the well-separation test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WellSeparationReport {
    pub separated: bool,
    /// True when either side had no sample points (vacuously separated).
    pub vacuous: bool,
    pub epsilon: f64,
    /// Worst pair: the Omega point minimizing dist(p, Sigma) - Delta(p)^eps.
    pub witness: Option<SeparationWitness>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationWitness {
    pub point: ([f64; 2], f64),
    pub closest: ([f64; 2], f64),
    pub distance: f64,
    pub threshold: f64,
    pub margin: f64,
}

/// Evaluate the separation condition dist(p, Sigma) > Delta(p)^epsilon at
/// every sampled point p of Omega. Very large rasters are thinned by a
/// deterministic stride to keep the pairwise sweep tractable.
pub fn well_separated(
    omega: &RegionMask,
    sigma: &RegionMask,
    epsilon: f64,
    lattice: &SampleLattice,
) -> WellSeparationReport {
    const MAX_POINTS: usize = 30_000;
    let thin = |mut v: Vec<HalfSpacePoint>| {
        if v.len() > MAX_POINTS {
            let stride = v.len() / MAX_POINTS + 1;
            v = v.into_iter().step_by(stride).collect();
        }
        v
    };
    let om = thin(omega.rasterize(lattice).sample_points());
    let si = thin(sigma.rasterize(lattice).sample_points());
    well_separated_points(&om, &si, epsilon)
}

pub fn well_separated_points(
    omega: &[HalfSpacePoint],
    sigma: &[HalfSpacePoint],
    epsilon: f64,
) -> WellSeparationReport {
    if omega.is_empty() || sigma.is_empty() {
        return WellSeparationReport {
            separated: true,
            vacuous: true,
            epsilon,
            witness: None,
        };
    }
    let worst = omega
        .par_iter()
        .map(|&p| {
            let mut best = (f64::INFINITY, sigma[0]);
            for &q in sigma {
                let d = dist(p, q);
                if d < best.0 {
                    best = (d, q);
                }
            }
            let threshold = delta(p).powf(epsilon);
            (best.0 - threshold, p, best.1, best.0, threshold)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("omega nonempty");
    let (margin, p, q, d, thr) = worst;
    WellSeparationReport {
        separated: margin > 0.0,
        vacuous: false,
        epsilon,
        witness: Some(SeparationWitness {
            point: (p.b, p.a),
            closest: (q.b, q.a),
            distance: d,
            threshold: thr,
            margin,
        }),
    }
}

/// Influence region of a support set in signal space: the union of cones
/// K(b) = {(beta, alpha): |beta - b| <= alpha} over support points b. The
/// signal domain is periodic, so distances wrap.
pub fn influence_region(grid: GridMeta, indicator: &[bool]) -> Result<RegionMask> {
    let df = DistanceField::from_indicator(grid, indicator)?;
    Ok(RegionMask::new(RegionExpr::InfluenceRegion(df)))
}

// --- JSON form: {"family": "...", "params": {...}, "ops": [...]} ---

impl RegionMask {
    pub fn to_json(&self) -> serde_json::Value {
        expr_to_json(&self.expr)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<RegionMask> {
        Ok(RegionMask::new(expr_from_json(v)?))
    }
}

fn expr_to_json(expr: &RegionExpr) -> serde_json::Value {
    match expr {
        RegionExpr::ParabolicStrip {
            center,
            exponent,
            above,
            a_cap,
        } => json!({
            "family": "parabolic-strip",
            "params": {
                "center": center,
                "exponent": exponent,
                "side": if *above { "above" } else { "below" },
                "a_max": a_cap,
            }
        }),
        RegionExpr::GammaTube { path, epsilon } => json!({
            "family": "gamma-tube",
            "params": { "path": path, "epsilon": epsilon }
        }),
        RegionExpr::InfluenceRegion(df) => json!({
            "family": "influence-region",
            "params": { "grid": df.grid, "support_indices": df.support_indices }
        }),
        RegionExpr::All => json!({ "family": "all" }),
        RegionExpr::Empty => json!({ "family": "empty" }),
        RegionExpr::Complement(inner) => json!({
            "family": "complement",
            "ops": [expr_to_json(inner)]
        }),
        RegionExpr::Union(parts) => json!({
            "family": "union",
            "ops": parts.iter().map(expr_to_json).collect::<Vec<_>>()
        }),
        RegionExpr::Intersection(parts) => json!({
            "family": "intersection",
            "ops": parts.iter().map(expr_to_json).collect::<Vec<_>>()
        }),
        RegionExpr::Raster(r) => json!({
            "family": "raster",
            "params": {
                "grid": r.grid,
                "scales": r.scales,
                "bits": r.bits.iter().map(|&b| u8::from(b)).collect::<Vec<_>>(),
            }
        }),
    }
}

fn expr_from_json(v: &serde_json::Value) -> Result<RegionExpr> {
    let family = v
        .get("family")
        .and_then(|f| f.as_str())
        .ok_or_else(|| CoreError::InvalidParameter("region mask needs a 'family'".into()))?;
    let params = v.get("params").cloned().unwrap_or(serde_json::Value::Null);
    let ops = || -> Result<Vec<RegionExpr>> {
        v.get("ops")
            .and_then(|o| o.as_array())
            .map(|items| items.iter().map(expr_from_json).collect())
            .unwrap_or_else(|| {
                Err(CoreError::InvalidParameter(format!(
                    "region family '{family}' needs 'ops'"
                )))
            })
    };
    match family {
        "parabolic-strip" => {
            #[derive(Deserialize)]
            struct P {
                center: [f64; 2],
                exponent: f64,
                side: String,
                a_max: f64,
            }
            let p: P = serde_json::from_value(params)?;
            Ok(RegionExpr::ParabolicStrip {
                center: p.center,
                exponent: p.exponent,
                above: p.side == "above",
                a_cap: p.a_max,
            })
        }
        "gamma-tube" => {
            #[derive(Deserialize)]
            struct P {
                path: ParabolicPath,
                epsilon: f64,
            }
            let p: P = serde_json::from_value(params)?;
            Ok(RegionExpr::GammaTube {
                path: p.path,
                epsilon: p.epsilon,
            })
        }
        "influence-region" => {
            #[derive(Deserialize)]
            struct P {
                grid: GridMeta,
                support_indices: Vec<usize>,
            }
            let p: P = serde_json::from_value(params)?;
            let mut indicator = vec![false; p.grid.total_samples()];
            for i in p.support_indices {
                if i >= indicator.len() {
                    return Err(CoreError::InvalidParameter(
                        "support index out of range".into(),
                    ));
                }
                indicator[i] = true;
            }
            Ok(RegionExpr::InfluenceRegion(DistanceField::from_indicator(
                p.grid, &indicator,
            )?))
        }
        "all" => Ok(RegionExpr::All),
        "empty" => Ok(RegionExpr::Empty),
        "complement" => {
            let mut parts = ops()?;
            if parts.len() != 1 {
                return Err(CoreError::InvalidParameter(
                    "complement takes exactly one operand".into(),
                ));
            }
            Ok(RegionExpr::Complement(Box::new(parts.remove(0))))
        }
        "union" => Ok(RegionExpr::Union(ops()?)),
        "intersection" => Ok(RegionExpr::Intersection(ops()?)),
        "raster" => {
            #[derive(Deserialize)]
            struct P {
                grid: GridMeta,
                scales: ScaleGrid,
                bits: Vec<u8>,
            }
            let p: P = serde_json::from_value(params)?;
            if p.bits.len() != p.grid.total_samples() * p.scales.count {
                return Err(CoreError::InvalidParameter(
                    "raster bit count does not match lattice".into(),
                ));
            }
            Ok(RegionExpr::Raster(RasterMask {
                grid: p.grid,
                scales: p.scales,
                bits: p.bits.into_iter().map(|b| b != 0).collect(),
            }))
        }
        other => Err(CoreError::InvalidParameter(format!(
            "unknown region family '{other}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn group_law_examples() {
        let p = HalfSpacePoint::new_1d(3.0, 0.5);
        let e = identity();
        assert_eq!(compose(p, e), p);
        let inv = inverse(HalfSpacePoint::new_1d(2.0, 4.0));
        assert_eq!(inv, HalfSpacePoint::new_1d(-0.5, 0.25));
        let pi = compose(p, inverse(p));
        assert!(approx(pi.b[0], 0.0, 1e-15) && approx(pi.a, 1.0, 1e-15));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(identity()), 2.0);
        assert!(approx(delta(HalfSpacePoint::new_1d(0.0, 2.0)), 2.5, 1e-15));
        assert!(approx(delta(HalfSpacePoint::new_1d(1.0, 1.0)), 4.0, 1e-15));
    }

    #[test]
    fn dist_examples() {
        let p = HalfSpacePoint::new_1d(0.3, 0.7);
        assert_eq!(dist(p, p), 2.0);
        assert!(approx(
            dist(HalfSpacePoint::new_1d(0.0, 1.0), HalfSpacePoint::new_1d(0.0, 2.0)),
            2.5,
            1e-15
        ));
    }

    proptest! {
        #[test]
        fn triangle_inequalities(
            b1 in -3.0f64..3.0, a1 in 0.05f64..8.0,
            b2 in -3.0f64..3.0, a2 in 0.05f64..8.0,
            b3 in -3.0f64..3.0, a3 in 0.05f64..8.0,
        ) {
            let p = HalfSpacePoint::new_1d(b1, a1);
            let q = HalfSpacePoint::new_1d(b2, a2);
            let r = HalfSpacePoint::new_1d(b3, a3);
            let tol = 1.0 + 1e-12;
            // Delta form
            let dp = delta(p);
            let dq = delta(q);
            let dpq = delta(compose(p, q));
            prop_assert!(dpq <= dp * dq * tol);
            prop_assert!(dpq * tol >= (dp / dq).max(dq / dp));
            // dist form
            prop_assert!(dist(p, r) <= dist(p, q) * dist(q, r) * tol);
            prop_assert!(dist(p, r) * tol >= dist(p, q) / dist(q, r));
            // symmetry and inversion invariance
            prop_assert!(approx(dist(p, q), dist(q, p), 1e-12));
            prop_assert!(approx(delta(inverse(p)), delta(p), 1e-12));
            // dist agrees with Delta of the group quotient
            prop_assert!(approx(dist(p, q), delta(compose(inverse(p), q)), 1e-12));
        }

        #[test]
        fn joint_dilation_translation_invariance(
            b1 in -2.0f64..2.0, a1 in 0.1f64..4.0,
            b2 in -2.0f64..2.0, a2 in 0.1f64..4.0,
            shift in -5.0f64..5.0, lam in 0.1f64..6.0,
        ) {
            let p = HalfSpacePoint::new_1d(b1, a1);
            let q = HalfSpacePoint::new_1d(b2, a2);
            let t = |x: HalfSpacePoint| HalfSpacePoint::new_1d(lam * x.b[0] + shift, lam * x.a);
            prop_assert!(approx(dist(t(p), t(q)), dist(p, q), 1e-12));
        }
    }

    fn small_lattice() -> SampleLattice {
        SampleLattice::new(
            GridMeta::new(1, 32, 2.0).unwrap(),
            ScaleGrid::new(0.02, 0.45, 12).unwrap(),
        )
    }

    #[test]
    fn raster_complement_involution() {
        let lat = small_lattice();
        let m = RegionMask::parabolic_strip([1.0, 0.0], 2.0, true, 0.5);
        let r = m.rasterize(&lat);
        assert_eq!(r.complement().complement(), r);
    }

    #[test]
    fn gamma_of_empty_is_empty() {
        let lat = small_lattice();
        let g = gamma_neighborhood(&RegionMask::empty(), 0.3, &lat);
        assert_eq!(g.count(), 0);
    }

    #[test]
    fn gamma_monotone_in_epsilon() {
        let lat = small_lattice();
        let m = RegionMask::parabolic_strip([1.0, 0.0], 2.0, true, 0.3);
        let g1 = gamma_neighborhood(&m, 0.2, &lat);
        let g2 = gamma_neighborhood(&m, 0.4, &lat);
        assert!(g1.is_subset_of(&g2));
    }

    #[test]
    fn gamma_associativity_inclusion() {
        // Gamma_e2(Gamma_e1(Omega)) inside Gamma_e3(Omega), e3 = e1 + e2 (1 + e1)
        let lat = small_lattice();
        let m = RegionMask::parabolic_strip([1.0, 0.0], 2.0, true, 0.2);
        let (e1, e2) = (0.15, 0.1);
        let e3 = e1 + e2 * (1.0 + e1);
        let inner = gamma_neighborhood(&m, e1, &lat);
        let nested = gamma_neighborhood_raster(&inner, e2);
        let outer = gamma_neighborhood(&m, e3, &lat);
        assert!(nested.is_subset_of(&outer));
    }

    #[test]
    fn overlapping_sets_fail_separation_when_threshold_bites() {
        let lat = SampleLattice::new(
            GridMeta::new(1, 32, 2.0).unwrap(),
            ScaleGrid::new(0.001, 0.45, 16).unwrap(),
        );
        let omega = RegionMask::parabolic_strip([1.0, 0.0], 2.0, true, 0.5);
        // sigma shares deep points with omega
        let report = well_separated(&omega, &omega, 0.5, &lat);
        assert!(!report.separated);
        let w = report.witness.unwrap();
        assert_eq!(w.distance, 2.0);
    }

    #[test]
    fn empty_mask_is_vacuously_separated() {
        let lat = small_lattice();
        let r = well_separated(
            &RegionMask::empty(),
            &RegionMask::all(),
            0.3,
            &lat,
        );
        assert!(r.separated && r.vacuous);
    }

    #[test]
    fn separation_symmetry_lemma_on_rasters() {
        // if Omega is separated from Sigma at epsilon, Sigma is separated
        // from Omega at epsilon / (1 + epsilon); exact on sampled sets.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let eps: f64 = rng.gen_range(0.1..0.6);
            let om: Vec<HalfSpacePoint> = (0..40)
                .map(|_| HalfSpacePoint::new_1d(rng.gen_range(-2.0..2.0), rng.gen_range(0.01..2.0)))
                .collect();
            let si: Vec<HalfSpacePoint> = (0..40)
                .map(|_| HalfSpacePoint::new_1d(rng.gen_range(-2.0..2.0), rng.gen_range(0.01..2.0)))
                .collect();
            let fwd = well_separated_points(&om, &si, eps);
            if fwd.separated {
                let back = well_separated_points(&si, &om, eps / (1.0 + eps));
                assert!(back.separated, "symmetry lemma violated at eps={eps}");
            }
        }
    }

    #[test]
    fn influence_region_membership() {
        let grid = GridMeta::new(1, 64, 1.0).unwrap();
        let mut ind = vec![false; 64];
        ind[0] = true; // support = {0}
        let region = influence_region(grid, &ind).unwrap();
        // apex column
        for &a in &[0.01, 0.1, 1.0] {
            assert!(region.contains(HalfSpacePoint::new_1d(0.0, a)));
        }
        // outside the cone: |beta| = 2 alpha
        assert!(!region.contains(HalfSpacePoint::new_1d(0.2, 0.1)));
        // full-space support -> everything
        let full = influence_region(grid, &vec![true; 64]).unwrap();
        assert!(full.contains(HalfSpacePoint::new_1d(0.37, 1e-6)));
    }

    #[test]
    fn influence_region_wraps_periodically() {
        let grid = GridMeta::new(1, 64, 1.0).unwrap();
        let mut ind = vec![false; 64];
        ind[1] = true; // support near 0
        let region = influence_region(grid, &ind).unwrap();
        // a point at b = 0.97 is 0.046 away through the wrap
        assert!(region.contains(HalfSpacePoint::new_1d(0.97, 0.06)));
        assert!(!region.contains(HalfSpacePoint::new_1d(0.5, 0.06)));
    }

    #[test]
    fn empty_influence_region_is_an_error() {
        let grid = GridMeta::new(1, 16, 1.0).unwrap();
        assert!(matches!(
            influence_region(grid, &vec![false; 16]),
            Err(CoreError::EmptyMask)
        ));
    }

    #[test]
    fn sandwich_lemma_on_test_raster() {
        // For nested strips with separated boundary, Xi = Gamma_{eps/4}(Omega)
        // separates both ways.
        let lat = SampleLattice::new(
            GridMeta::new(1, 64, 2.0).unwrap(),
            ScaleGrid::new(0.05, 0.4, 10).unwrap(),
        );
        let eps = 0.4;
        let omega = RegionMask::parabolic_strip([1.0, 0.0], 1.0, true, 0.3);
        let sigma = RegionMask::parabolic_strip([1.0, 0.0], 3.0, true, 0.45);
        // preconditions of the lemma
        assert!(omega.rasterize(&lat).is_subset_of(&sigma.rasterize(&lat)));
        let pre = well_separated(&sigma.clone().complement(), &omega, eps, &lat);
        assert!(pre.separated, "test fixture must satisfy the hypothesis");
        let xi = gamma_neighborhood(&omega, eps / 4.0, &lat);
        let xi_mask = RegionMask::new(RegionExpr::Raster(xi.clone()));
        let a = well_separated(&xi_mask, &sigma.complement(), eps / 8.0, &lat);
        let b = well_separated(&omega, &xi_mask.complement(), eps / 8.0, &lat);
        assert!(a.separated && b.separated);
    }

    #[test]
    fn mask_json_round_trip() {
        let grid = GridMeta::new(1, 16, 1.0).unwrap();
        let mut ind = vec![false; 16];
        ind[3] = true;
        ind[4] = true;
        let m = RegionMask::intersection(vec![
            RegionMask::parabolic_strip([0.5, 0.0], 2.0, true, 0.25),
            RegionMask::gamma_tube(
                ParabolicPath::new([1.0, 0.0], 2.0, 0.05, 0.5, 16)
                    .unwrap()
                    .anchored([0.5, 0.0]),
                0.25,
            )
            .complement(),
            influence_region(grid, &ind).unwrap(),
        ]);
        let v = m.to_json();
        let back = RegionMask::from_json(&v).unwrap();
        assert_eq!(m, back);
    }
}
