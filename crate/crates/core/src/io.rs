//! Field and signal dumps: a one-line JSON header followed by raw
//! little-endian f64 pairs (re, im), row-major with the scale outermost.
//! CSV exports for |W| slices and path samples.

use crate::engine::HalfSpaceField;
use crate::error::{CoreError, Result};
use crate::grid::{GridMeta, GridSignal, ScaleGrid};
use crate::microlocal::PathSamples;
use crate::wavelets::WaveletSpec;
use num_complex::Complex;
use serde_json::json;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const FORMAT_NAME: &str = "cuspscope-field";
pub const FORMAT_VERSION: u32 = 1;
/// Fourier and normalization conventions baked into every dump.
pub const CONVENTION: &str =
    "shat(k)=int e^{-ikx} s dx; W(b,a)=(2pi)^-n int conj(ghat(ak)) e^{ibk} shat(k) dk; da/a weight ln q";

fn write_payload(w: &mut impl Write, values: &[Complex<f64>]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 16);
    for v in values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_payload(r: &mut impl Read, count: usize) -> Result<Vec<Complex<f64>>> {
    let mut buf = vec![0u8; count * 16];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            Complex::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect())
}

/// Dump a half-space field, embedding extra metadata (resolved config etc.).
pub fn dump_field(path: &Path, field: &HalfSpaceField, extra: &serde_json::Value) -> Result<()> {
    let header = json!({
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": "field",
        "grid": field.grid,
        "scales": field.scales,
        "wavelet": field.wavelet.to_json(),
        "convention": CONVENTION,
        "extra": extra,
    });
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    write_payload(&mut w, &field.values)?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<HalfSpaceField> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: serde_json::Value = serde_json::from_str(&line)?;
    check_format(&header, "field")?;
    let grid: GridMeta = serde_json::from_value(header["grid"].clone())?;
    let scales: ScaleGrid = serde_json::from_value(header["scales"].clone())?;
    let wavelet = WaveletSpec::from_json(&header["wavelet"])?;
    let values = read_payload(&mut r, grid.total_samples() * scales.count)?;
    Ok(HalfSpaceField {
        grid,
        scales,
        wavelet,
        values,
    })
}

/// Signal dump: the field format restricted to one scale slice.
pub fn dump_signal(path: &Path, signal: &GridSignal, extra: &serde_json::Value) -> Result<()> {
    let header = json!({
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": "signal",
        "grid": signal.grid,
        "convention": CONVENTION,
        "extra": extra,
    });
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    write_payload(&mut w, &signal.values)?;
    Ok(())
}

pub fn load_signal(path: &Path) -> Result<GridSignal> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: serde_json::Value = serde_json::from_str(&line)?;
    check_format(&header, "signal")?;
    let grid: GridMeta = serde_json::from_value(header["grid"].clone())?;
    let values = read_payload(&mut r, grid.total_samples())?;
    Ok(GridSignal { grid, values })
}

fn check_format(header: &serde_json::Value, kind: &str) -> Result<()> {
    if header["format"] != FORMAT_NAME {
        return Err(CoreError::MalformedDump("not a cuspscope dump".into()));
    }
    if header["kind"] != kind {
        return Err(CoreError::MalformedDump(format!(
            "expected a {kind} dump, found {}",
            header["kind"]
        )));
    }
    Ok(())
}

/// Long-format CSV of |W|: scale index, a, b coordinates, |W|.
pub fn write_abs_csv(path: &Path, field: &HalfSpaceField) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    match field.grid.dimension {
        1 => writeln!(w, "scale_index,a,b,abs_w")?,
        _ => writeln!(w, "scale_index,a,b_x,b_y,abs_w")?,
    }
    let per = field.grid.total_samples();
    for j in 0..field.scales.count {
        let a = field.scales.scale(j);
        let slice = field.slice(j);
        for i in 0..per {
            let b = field.grid.position(i);
            match field.grid.dimension {
                1 => writeln!(w, "{j},{a:.12e},{:.12e},{:.12e}", b[0], slice[i].norm())?,
                _ => writeln!(
                    w,
                    "{j},{a:.12e},{:.12e},{:.12e},{:.12e}",
                    b[0],
                    b[1],
                    slice[i].norm()
                )?,
            }
        }
    }
    Ok(())
}

/// Path-sample CSV with the columns lambda, a, absW, log_a, log_absW.
pub fn write_path_csv(path: &Path, samples: &PathSamples) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "lambda,a,absW,log_a,log_absW")?;
    for s in &samples.samples {
        let log_w = if s.abs_w > 0.0 {
            s.abs_w.ln()
        } else {
            f64::NEG_INFINITY
        };
        writeln!(
            w,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            s.lambda,
            s.a,
            s.abs_w,
            s.a.ln(),
            log_w
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{forward, EngineOptions};
    use crate::signals;

    #[test]
    fn field_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridMeta::new(1, 64, 1.0).unwrap();
        let scales = ScaleGrid::new(0.04, 0.2, 6).unwrap();
        let g = WaveletSpec::log_normal(1).unwrap();
        let s = signals::band_limited_random(grid, (3, 12), 1).unwrap();
        let field = forward(&g, &s, &scales, &EngineOptions::default()).unwrap();
        let p = dir.path().join("field.csf");
        dump_field(&p, &field, &serde_json::json!({"note": "test"})).unwrap();
        let back = load_field(&p).unwrap();
        assert_eq!(back.grid, field.grid);
        assert_eq!(back.values, field.values);
        assert_eq!(back.wavelet, field.wavelet);
    }

    #[test]
    fn signal_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridMeta::new(2, 16, 1.0).unwrap();
        let s = signals::band_limited_random(grid, (2, 6), 5).unwrap();
        let p = dir.path().join("sig.csf");
        dump_signal(&p, &s, &serde_json::Value::Null).unwrap();
        let back = load_signal(&p).unwrap();
        assert_eq!(back.values, s.values);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridMeta::new(1, 16, 1.0).unwrap();
        let s = GridSignal::zeros(grid);
        let p = dir.path().join("sig.csf");
        dump_signal(&p, &s, &serde_json::Value::Null).unwrap();
        assert!(load_field(&p).is_err());
    }
}
