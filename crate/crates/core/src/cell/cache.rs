//! On-disk corrector tables keyed by `(spec hash, n_y, n_z)`.
//!
//! The binary form (`.tscc`) stores physical grid values as little-endian
//! `f64`. The CSV form (`.tscc.csv`) stores Fourier coefficients, one row per
//! `(field, y_index, component, mode)`.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::{homogenized_tensor, CorrectorSet};
use crate::linalg::Mat;
use crate::spectral::{TorusField, TorusGrid};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TSCC";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheFormat {
    Binary,
    Csv,
}

fn stem(hash: &str, n_y: usize, n_z: usize) -> String {
    format!("{}_{n_y}_{n_z}", &hash[..hash.len().min(16)])
}

pub fn cache_path(dir: &Path, hash: &str, n_y: usize, n_z: usize, format: CacheFormat) -> PathBuf {
    let ext = match format {
        CacheFormat::Binary => "tscc",
        CacheFormat::Csv => "tscc.csv",
    };
    dir.join(format!("{}.{ext}", stem(hash, n_y, n_z)))
}

fn put_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64s(w: &mut impl Write, vs: &[f64]) -> std::io::Result<()> {
    for v in vs {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn fields_flat(fields: &[TorusField]) -> Vec<f64> {
    fields.iter().flat_map(|f| f.values.iter().copied()).collect()
}

/// Write a corrector set into `dir`, returning the file path.
pub fn save_corrector_set(set: &CorrectorSet, dir: &Path, format: CacheFormat) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Cache(format!("{}: {e}", dir.display())))?;
    let path = cache_path(dir, &set.spec_hash, set.n_y, set.n_z, format);
    let file = fs::File::create(&path).map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    match format {
        CacheFormat::Binary => {
            w.write_all(MAGIC)?;
            for v in [VERSION, set.dim as u32, set.n_y as u32, set.n_z as u32, set.spec_hash.len() as u32] {
                put_u32(&mut w, v)?;
            }
            w.write_all(set.spec_hash.as_bytes())?;
            put_f64s(&mut w, &[set.max_residual])?;
            put_f64s(&mut w, &set.inner)?;
            put_f64s(&mut w, &fields_flat(&set.mean_a))?;
            put_f64s(&mut w, &fields_flat(&set.b_field))?;
            put_f64s(&mut w, &fields_flat(&set.outer))?;
        }
        CacheFormat::Csv => {
            let yg = set.y_grid();
            let zg = set.z_grid();
            writeln!(w, "# dim={} n_y={} n_z={} hash={} max_residual={:?}", set.dim, set.n_y, set.n_z, set.spec_hash, set.max_residual)?;
            writeln!(w, "field,y_index,component,mode,re,im")?;
            let mut line = String::new();
            let mut emit = |w: &mut BufWriter<fs::File>, field: &str, yi: Option<usize>, comp: usize, s: &[Complex64]| -> std::io::Result<()> {
                for (mode, c) in s.iter().enumerate() {
                    line.clear();
                    let y = yi.map(|v| v.to_string()).unwrap_or_default();
                    writeln!(line, "{field},{y},{comp},{mode},{:?},{:?}", c.re, c.im).unwrap();
                    w.write_all(line.as_bytes())?;
                }
                Ok(())
            };
            for yi in 0..set.y_len() {
                for k in 0..set.dim {
                    emit(&mut w, "inner", Some(yi), k, &zg.forward_real(set.inner_values(yi, k)))?;
                }
            }
            for (name, fields) in [("mean_a", &set.mean_a), ("b", &set.b_field), ("outer", &set.outer)] {
                for (c, f) in fields.iter().enumerate() {
                    emit(&mut w, name, None, c, &f.spectrum(&yg))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(path)
}

struct Raw {
    dim: usize,
    n_y: usize,
    n_z: usize,
    hash: String,
    max_residual: f64,
    inner: Vec<f64>,
    mean_a: Vec<f64>,
    b: Vec<f64>,
    outer: Vec<f64>,
}

fn read_binary(path: &Path) -> Result<Raw> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = || Error::Cache(format!("{}: truncated or corrupt", path.display()));
    if bytes.len() < 24 || &bytes[..4] != MAGIC {
        return Err(bad());
    }
    let u = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    if u(0) != VERSION as usize {
        return Err(Error::Cache(format!("{}: unsupported version {}", path.display(), u(0))));
    }
    let (dim, n_y, n_z, hlen) = (u(1), u(2), u(3), u(4));
    if !(1..=2).contains(&dim) {
        return Err(bad());
    }
    let mut at = 24;
    let hash = String::from_utf8(bytes.get(at..at + hlen).ok_or_else(bad)?.to_vec()).map_err(|_| bad())?;
    at += hlen;
    let (ly, lz) = (n_y.pow(dim as u32), n_z.pow(dim as u32));
    let mut take = |count: usize| -> Result<Vec<f64>> {
        let end = at + 8 * count;
        let chunk = bytes.get(at..end).ok_or_else(bad)?;
        at = end;
        Ok(chunk.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let max_residual = take(1)?[0];
    let inner = take(ly * dim * lz)?;
    let mean_a = take(dim * dim * ly)?;
    let b = take(dim * dim * ly)?;
    let outer = take(dim * ly)?;
    Ok(Raw { dim, n_y, n_z, hash, max_residual, inner, mean_a, b, outer })
}

fn read_csv(path: &Path) -> Result<Raw> {
    let reader = BufReader::new(fs::File::open(path)?);
    let bad = |msg: &str| Error::Cache(format!("{}: {msg}", path.display()));
    let mut lines = reader.lines();
    let head = lines.next().ok_or_else(|| bad("empty file"))??;
    let mut meta = std::collections::HashMap::new();
    for kv in head.trim_start_matches('#').split_whitespace() {
        if let Some((k, v)) = kv.split_once('=') {
            meta.insert(k.to_string(), v.to_string());
        }
    }
    let num = |k: &str| -> Result<usize> {
        meta.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| bad(&format!("missing {k}")))
    };
    let (dim, n_y, n_z) = (num("dim")?, num("n_y")?, num("n_z")?);
    let hash = meta.get("hash").cloned().ok_or_else(|| bad("missing hash"))?;
    let max_residual: f64 = meta.get("max_residual").and_then(|v| v.parse().ok()).unwrap_or(0.0);
    let yg = TorusGrid::new(dim, n_y)?;
    let zg = TorusGrid::new(dim, n_z)?;
    let (ly, lz) = (yg.len(), zg.len());
    let zero = Complex64::new(0.0, 0.0);
    let mut inner_s = vec![zero; ly * dim * lz];
    let mut y_fields: [Vec<Complex64>; 3] = [vec![zero; dim * dim * ly], vec![zero; dim * dim * ly], vec![zero; dim * ly]];
    lines.next().ok_or_else(|| bad("missing header"))??;
    for line in lines {
        let line = line?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(bad("row with wrong column count"));
        }
        let parse_u = |s: &str| s.parse::<usize>().map_err(|_| bad("bad index"));
        let parse_f = |s: &str| s.parse::<f64>().map_err(|_| bad("bad value"));
        let (comp, mode) = (parse_u(cols[2])?, parse_u(cols[3])?);
        let c = Complex64::new(parse_f(cols[4])?, parse_f(cols[5])?);
        let slot = match cols[0] {
            "inner" => inner_s.get_mut((parse_u(cols[1])? * dim + comp) * lz + mode),
            "mean_a" => y_fields[0].get_mut(comp * ly + mode),
            "b" => y_fields[1].get_mut(comp * ly + mode),
            "outer" => y_fields[2].get_mut(comp * ly + mode),
            _ => return Err(bad("unknown field")),
        };
        *slot.ok_or_else(|| bad("index out of range"))? = c;
    }
    let inner = inner_s.chunks(lz).flat_map(|s| zg.inverse_real(s)).collect();
    let [ma, b, outer] = y_fields.map(|v| v.chunks(ly).flat_map(|s| yg.inverse_real(s)).collect::<Vec<f64>>());
    Ok(Raw { dim, n_y, n_z, hash, max_residual, inner, mean_a: ma, b, outer })
}

fn assemble(raw: Raw) -> Result<CorrectorSet> {
    let d = raw.dim;
    let yg = TorusGrid::new(d, raw.n_y)?;
    let ly = yg.len();
    let split = |v: &[f64]| -> Vec<TorusField> {
        v.chunks(ly).map(|c| TorusField { dim: d, n: raw.n_y, values: c.to_vec() }).collect()
    };
    let outer = split(&raw.outer);
    let outer_grad = outer
        .iter()
        .map(|f| {
            (0..d)
                .map(|a| TorusField { dim: d, n: raw.n_y, values: yg.derivative(&f.values, a) })
                .collect()
        })
        .collect();
    let mut set = CorrectorSet {
        dim: d,
        n_y: raw.n_y,
        n_z: raw.n_z,
        spec_hash: raw.hash,
        inner: raw.inner,
        mean_a: split(&raw.mean_a),
        b_field: split(&raw.b),
        outer,
        outer_grad,
        a_hat: Mat::zeros(d),
        max_residual: raw.max_residual,
    };
    set.a_hat = homogenized_tensor(&set)?;
    Ok(set)
}

/// Load the cached set for `(hash, n_y, n_z)` from `dir`, trying the binary
/// form first. Returns `Ok(None)` when neither file exists.
pub fn load_corrector_set(dir: &Path, hash: &str, n_y: usize, n_z: usize) -> Result<Option<CorrectorSet>> {
    let bin = cache_path(dir, hash, n_y, n_z, CacheFormat::Binary);
    let csv = cache_path(dir, hash, n_y, n_z, CacheFormat::Csv);
    let raw = if bin.exists() {
        read_binary(&bin)?
    } else if csv.exists() {
        read_csv(&csv)?
    } else {
        return Ok(None);
    };
    if raw.hash != hash || raw.n_y != n_y || raw.n_z != n_z {
        return Err(Error::Cache(format!("key mismatch in cache file for {}", stem(hash, n_y, n_z))));
    }
    assemble(raw).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::{build_corrector_set, CellOptions};
    use crate::coeff::builtin_family;

    #[test]
    fn binary_and_csv_round_trip() {
        let spec = builtin_family("trig_general", &[1.0, 0.5]).unwrap();
        let set = build_corrector_set(&spec, 8, 8, CellOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_corrector_set(&set, dir.path(), CacheFormat::Binary).unwrap();
        let bin = load_corrector_set(dir.path(), &set.spec_hash, 8, 8).unwrap().unwrap();
        assert_eq!(bin.inner, set.inner);
        assert!(bin.a_hat.max_abs_diff(&set.a_hat) < 1e-14);

        let other = tempfile::tempdir().unwrap();
        save_corrector_set(&set, other.path(), CacheFormat::Csv).unwrap();
        let csv = load_corrector_set(other.path(), &set.spec_hash, 8, 8).unwrap().unwrap();
        let err = csv.inner.iter().zip(&set.inner).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-14, "{err}");
        assert!(csv.a_hat.max_abs_diff(&set.a_hat) < 1e-13);
    }

    #[test]
    fn missing_entry_is_none() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_corrector_set(dir.path(), "abcdef", 8, 8).unwrap().is_none());
    }
}
