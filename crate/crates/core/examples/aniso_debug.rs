use cuspscope_core::engine::{forward, EngineOptions};
use cuspscope_core::fitting::FitOptions;
use cuspscope_core::grid::{GridMeta, ScaleGrid};
use cuspscope_core::microlocal::{classify_type, ClassifyOptions, ParabolicPath};
use cuspscope_core::signals::{composite_cusp, CuspDomain, InsideSpec};
use cuspscope_core::wavelets::{ScaleQuadrature, WaveletSpec};

fn main() {
    let grid = GridMeta::new(2, 512, 1.0).unwrap();
    let apex = [0.22, 0.5];
    let cusp = CuspDomain::new(apex, [1.0, 0.0], 2.0, 2.0, 0.47).unwrap();
    let inside = InsideSpec::Texture { beta: 3.0, amplitude: 2000.0, seed: 7, onset: 0.18, ramp: 0.05 };
    let s = composite_cusp(grid, &cusp, inside, 0.3, 0.04, 42).unwrap();
    let quad = ScaleQuadrature::default();
    let g1 = WaveletSpec::log_normal(2).unwrap();
    let g2 = WaveletSpec::log_normal(2).unwrap().laplacian_of().unit_normalized(&quad).unwrap();
    let scales = ScaleGrid::new(0.004, 0.12, 48).unwrap();
    let opts = EngineOptions::default();

    for (name, g) in [("logn", &g1), ("lapl", &g2)] {
        let field = forward(g, &s, &scales, &opts).unwrap();
        let copts = ClassifyOptions {
            epsilon: 0.25,
            min_tube_points: 4,
            fit: FitOptions::for_field_max(field.max_abs()),
            ..Default::default()
        };
        let copts_shallow = ClassifyOptions { epsilon: 0.45, ..copts };
        let p_axis3 = ParabolicPath::new([1.0, 0.0], 3.0, 0.209, 0.45, 96).unwrap().anchored(apex);
        let r1 = classify_type(&field, &p_axis3, &[0.3], &copts).unwrap();
        let p_axis12 = ParabolicPath::new([1.0, 0.0], 1.2, 0.0112, 0.0753, 96).unwrap().anchored(apex);
        let r2 = classify_type(&field, &p_axis12, &[0.3], &copts_shallow).unwrap();
        let p_perp3 = ParabolicPath::new([0.0, 1.0], 3.0, 0.159, 0.35, 96).unwrap().anchored(apex);
        let r3 = classify_type(&field, &p_perp3, &[0.3], &copts_shallow).unwrap();
        println!(
            "{name}: axis g=3: {:.3} ({:.2} dec, rms {:.2}) | axis g=1.2: {:.3} ({:.2} dec, rms {:.2}) | perp g=3: {:.3} ({:.2} dec, rms {:.2})",
            r1.alpha_hat.slope, r1.alpha_hat.window_decades, r1.alpha_hat.residual_rms,
            r2.alpha_hat.slope, r2.alpha_hat.window_decades, r2.alpha_hat.residual_rms,
            r3.alpha_hat.slope, r3.alpha_hat.window_decades, r3.alpha_hat.residual_rms,
        );
    }
}
