use cuspscope_core::engine::{forward, EngineOptions};
use cuspscope_core::fitting::FitOptions;
use cuspscope_core::grid::{GridMeta, ScaleGrid};
use cuspscope_core::microlocal::{classify_type, tube_mask, ClassifyOptions, ParabolicPath};
use cuspscope_core::signals::{composite_cusp, CuspDomain, InsideSpec};
use cuspscope_core::wavelets::{ScaleQuadrature, WaveletSpec};

fn main() {
    let grid = GridMeta::new(2, 512, 1.0).unwrap();
    let quad = ScaleQuadrature::default();
    let g1 = WaveletSpec::log_normal(2).unwrap();
    let g2 = WaveletSpec::log_normal(2).unwrap().laplacian_of().unit_normalized(&quad).unwrap();
    let apex = [0.2, 0.5];
    let scales = ScaleGrid::new(0.0035, 0.13, 52).unwrap();

    for &(c, blend, onset, amp, beta_in) in &[
        (1.8f64, 0.02f64, 0.14f64, 2000.0f64, 2.6f64),
        (1.8, 0.02, 0.14, 8000.0, 2.6),
        (1.8, 0.02, 0.14, 2000.0, 2.2),
        (2.5, 0.02, 0.12, 2000.0, 2.6),
        (2.5, 0.02, 0.12, 8000.0, 2.6),
        (2.5, 0.03, 0.12, 8000.0, 2.6),
    ] {
        let extent = (0.45f64 / c).sqrt().min(0.62);
        let cusp = CuspDomain::new(apex, [1.0, 0.0], 2.0, c, extent).unwrap();
        let inside = InsideSpec::Texture { beta: beta_in, amplitude: amp, seed: 7, onset, ramp: 0.03 };
        let s = composite_cusp(grid, &cusp, inside, 0.3, blend, 42).unwrap();
        let lam_hi = (extent - 2.5 * blend).min(0.5);
        let mut row = format!("c={c} bl={blend} on={onset} A={amp} b={beta_in} lhi={lam_hi:.2} |");
        for g in [&g1, &g2] {
            let field = forward(g, &s, &scales, &EngineOptions::unguarded()).unwrap();
            let copts = ClassifyOptions {
                epsilon: 0.25,
                min_tube_points: 4,
                fit: FitOptions::for_field_max(field.max_abs()),
                ..Default::default()
            };
            let cs = ClassifyOptions { epsilon: 0.45, ..copts };
            let p1 = ParabolicPath::new([1.0, 0.0], 3.0, 0.19, lam_hi, 128).unwrap().anchored(apex);
            let p2 = ParabolicPath::new([1.0, 0.0], 1.2, 0.0105, 0.082, 128).unwrap().anchored(apex);
            let p3 = ParabolicPath::new([0.0, 1.0], 3.0, 0.155, 0.372, 128).unwrap().anchored(apex);
            let rr: Vec<String> = [(p1, &copts), (p2, &cs), (p3, &cs)]
                .into_iter()
                .map(|(p, o)| match classify_type(&field, &p, &[0.3], o) {
                    Ok(r) => format!("{:+.2}", r.alpha_hat.slope),
                    Err(e) => format!("E({e:.12})").chars().take(8).collect(),
                })
                .collect();
            row += &format!(" [{}]", rr.join(" "));
        }
        println!("{row}");
    }

    // profile dump for one config
    let c = 2.5;
    let extent = (0.45f64 / c).sqrt();
    let cusp = CuspDomain::new(apex, [1.0, 0.0], 2.0, c, extent).unwrap();
    let inside = InsideSpec::Texture { beta: 2.6, amplitude: 8000.0, seed: 7, onset: 0.12, ramp: 0.03 };
    let s = composite_cusp(grid, &cusp, inside, 0.3, 0.02, 42).unwrap();
    let field = forward(&g1, &s, &scales, &EngineOptions::unguarded()).unwrap();
    let lat = field.lattice();
    let lam_hi = (extent - 0.05f64).min(0.5);
    let p1 = ParabolicPath::new([1.0, 0.0], 3.0, 0.19, lam_hi, 128).unwrap().anchored(apex);
    let tube = tube_mask(&p1, 0.25, &lat);
    let per = grid.total_samples();
    println!("axis tube profile (c=2.5 A=8000):");
    for j in 0..scales.count {
        let a = scales.scale(j);
        let mut sup = 0.0f64;
        let mut pop = 0;
        for (i, v) in field.slice(j).iter().enumerate() {
            if tube.bits[j * per + i] { pop += 1; sup = sup.max(v.norm()); }
        }
        if a >= 0.005 && a <= 0.09 {
            println!("  {a:.4e} pop={pop:5} sup={sup:.4e} sup/a^2.6={:.3e}", sup / a.powf(2.6));
        }
    }
}
