use cuspscope_core::engine::{forward, EngineOptions};
use cuspscope_core::grid::{GridMeta, ScaleGrid};
use cuspscope_core::microlocal::{tube_mask, ParabolicPath};
use cuspscope_core::signals::{composite_cusp, CuspDomain, InsideSpec};
use cuspscope_core::wavelets::{ScaleQuadrature, WaveletSpec};

fn main() {
    let grid = GridMeta::new(2, 512, 1.0).unwrap();
    let apex = [0.25, 0.5];
    let cusp = CuspDomain::new(apex, [1.0, 0.0], 2.0, 2.0, 0.7).unwrap();
    let inside = InsideSpec::PoissonBump { center: [0.7, 0.5], width: 0.1, amplitude: 2.0 };
    let s = composite_cusp(grid, &cusp, inside, 0.3, 3.0 * grid.spacing(), 42).unwrap();
    let quad = ScaleQuadrature::default();
    let g1 = WaveletSpec::log_normal(2).unwrap();
    let g2 = WaveletSpec::log_normal(2).unwrap().laplacian_of().unit_normalized(&quad).unwrap();
    let scales = ScaleGrid::new(0.004, 0.26, 48).unwrap();
    let opts = EngineOptions::unguarded();
    let f1 = forward(&g1, &s, &scales, &opts).unwrap();
    let f2 = forward(&g2, &s, &scales, &opts).unwrap();
    let lat = f1.lattice();
    let per = grid.total_samples();

    let p12 = ParabolicPath::new([1.0, 0.0], 1.2, 0.04, 0.39, 96).unwrap().anchored(apex);
    let t12 = tube_mask(&p12, 0.45, &lat);
    let pp = ParabolicPath::new([0.0, 1.0], 3.0, 0.16, 0.5, 96).unwrap().anchored(apex);
    let tp = tube_mask(&pp, 0.45, &lat);
    println!("a | pop12 sup12(logn) sup12(lapl) | popP supP(logn) supP(lapl)");
    for j in 0..scales.count {
        let a = scales.scale(j);
        let mut s12 = (0usize, 0.0f64, 0.0f64);
        let mut sp = (0usize, 0.0f64, 0.0f64);
        for i in 0..per {
            if t12.bits[j * per + i] {
                s12.0 += 1;
                s12.1 = s12.1.max(f1.slice(j)[i].norm());
                s12.2 = s12.2.max(f2.slice(j)[i].norm());
            }
            if tp.bits[j * per + i] {
                sp.0 += 1;
                sp.1 = sp.1.max(f1.slice(j)[i].norm());
                sp.2 = sp.2.max(f2.slice(j)[i].norm());
            }
        }
        println!("{a:.4e} | {:5} {:.3e} {:.3e} | {:5} {:.3e} {:.3e}", s12.0, s12.1, s12.2, sp.0, sp.1, sp.2);
    }
}
