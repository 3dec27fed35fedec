//! FFT helpers shared by the transform engine, signal generators and the
//! spectral Laplacian. Forward DFT is unnormalized, the inverse carries the
//! full 1/N^n factor, so a forward/inverse pair is the identity.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, inverse: bool) -> Plan {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft planner lock poisoned");
    let (planner, plans) = &mut *guard;
    plans
        .entry((len, inverse))
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

fn transform_axis(values: &mut [Complex<f64>], dims: &[usize], axis: usize, inverse: bool) {
    let len = dims[axis];
    let fft = plan(len, inverse);
    match (dims.len(), axis) {
        (1, 0) => fft.process(values),
        (2, 1) => {
            values
                .par_chunks_exact_mut(dims[1])
                .for_each(|row| fft.process(row));
        }
        (2, 0) => {
            // transpose, row pass, transpose back
            let (rows, cols) = (dims[0], dims[1]);
            let mut t = vec![Complex::default(); rows * cols];
            t.par_chunks_exact_mut(rows).enumerate().for_each(|(c, line)| {
                for (r, v) in line.iter_mut().enumerate() {
                    *v = values[r * cols + c];
                }
                fft.process(line);
            });
            values
                .par_chunks_exact_mut(cols)
                .enumerate()
                .for_each(|(r, line)| {
                    for (c, v) in line.iter_mut().enumerate() {
                        *v = t[c * rows + r];
                    }
                });
        }
        _ => unreachable!("dimension checked at grid construction"),
    }
}

/// In-place unnormalized DFT over all axes.
pub fn dft(values: &mut [Complex<f64>], dims: &[usize]) {
    debug_assert_eq!(values.len(), dims.iter().product::<usize>());
    for axis in 0..dims.len() {
        transform_axis(values, dims, axis, false);
    }
}

/// In-place inverse DFT with 1/N^n normalization.
pub fn idft(values: &mut [Complex<f64>], dims: &[usize]) {
    debug_assert_eq!(values.len(), dims.iter().product::<usize>());
    for axis in 0..dims.len() {
        transform_axis(values, dims, axis, true);
    }
    let norm = 1.0 / values.len() as f64;
    for v in values.iter_mut() {
        *v *= norm;
    }
}

/// Signed mode index for an N-point DFT: 0..N/2 map to themselves,
/// N/2..N to negative frequencies.
pub fn signed_mode(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_identity_1d() {
        let dims = [16];
        let mut v: Vec<Complex<f64>> = (0..16)
            .map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let orig = v.clone();
        dft(&mut v, &dims);
        idft(&mut v, &dims);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_identity_2d() {
        let dims = [8, 8];
        let mut v: Vec<Complex<f64>> = (0..64)
            .map(|i| Complex::new((i as f64 * 0.11).sin(), (i as f64 * 0.07).cos()))
            .collect();
        let orig = v.clone();
        dft(&mut v, &dims);
        idft(&mut v, &dims);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_spectrum() {
        let n = 32;
        let dims = [n];
        let mode = 3usize;
        let mut v: Vec<Complex<f64>> = (0..n)
            .map(|i| {
                Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * mode as f64 * i as f64 / n as f64)
            })
            .collect();
        dft(&mut v, &dims);
        for (m, val) in v.iter().enumerate() {
            let expect = if m == mode { n as f64 } else { 0.0 };
            assert!((val.norm() - expect).abs() < 1e-9, "mode {m}");
        }
    }

    #[test]
    fn signed_modes() {
        assert_eq!(signed_mode(0, 8), 0);
        assert_eq!(signed_mode(4, 8), 4);
        assert_eq!(signed_mode(5, 8), -3);
        assert_eq!(signed_mode(7, 8), -1);
    }
}
