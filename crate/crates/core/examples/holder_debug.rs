use cuspscope_core::engine::{forward, EngineOptions};
use cuspscope_core::fitting::{fit_decay, FitOptions};
use cuspscope_core::grid::{GridMeta, ScaleGrid};
use cuspscope_core::signals;
use cuspscope_core::wavelets::{ScaleQuadrature, WaveletSpec};

fn main() {
    let grid = GridMeta::new(1, 8192, 1.0).unwrap();
    let quad = ScaleQuadrature::default();
    let g1 = WaveletSpec::log_normal(1).unwrap();
    let g2 = WaveletSpec::log_normal(1).unwrap().laplacian_of().unit_normalized(&quad).unwrap();
    for (rad, alo, ahi) in [(0.42f64, 2e-3f64, 6.3e-2f64), (0.42, 1.5e-3, 4.8e-2), (0.35, 1.5e-3, 4.8e-2)] {
        println!("--- radius={rad} window=[{alo},{ahi}]");
        let scales = ScaleGrid::new(alo, ahi, 48).unwrap();
        for alpha in [0.3, 0.5, 0.7] {
            let s = signals::holder_cusp(grid, alpha, [0.5, 0.0], rad).unwrap();
            let idx = (0.5 / grid.spacing()).round() as usize;
            let mut slopes = Vec::new();
            for g in [&g1, &g2] {
                let field = forward(g, &s, &scales, &EngineOptions::unguarded()).unwrap();
                let samples: Vec<(f64, f64)> = (0..scales.count)
                    .map(|j| (scales.scale(j), field.slice(j)[idx].norm()))
                    .collect();
                let fit = fit_decay(&samples, &FitOptions::for_field_max(field.max_abs())).unwrap();
                slopes.push(fit.slope);
            }
            println!("alpha={alpha}: logn={:.4} lapl={:.4} diff={:.4}", slopes[0], slopes[1], (slopes[0]-slopes[1]).abs());
        }
    }
}
