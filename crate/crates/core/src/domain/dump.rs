//! Solution dumps: a little-endian binary format with a CSV fallback.
//!
//! Binary layout: `b"TSGF"`, `u32` version, `u32` shape code, three `f64`
//! shape parameters, `u32` cells per axis, `u64` value count, then the nodal
//! values as `f64`.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::mesh::{Mesh, Shape};
use super::GridFunction;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TSGF";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DumpFormat {
    Binary,
    Csv,
}

fn encode(shape: Shape) -> (u32, [f64; 3]) {
    match shape {
        Shape::Interval { a, b } => (0, [a, b, 0.0]),
        Shape::Square => (1, [0.0; 3]),
        Shape::Ball { center, radius } => (2, [center[0], center[1], radius]),
    }
}

fn decode(code: u32, p: [f64; 3]) -> Result<Shape> {
    match code {
        0 => Ok(Shape::Interval { a: p[0], b: p[1] }),
        1 => Ok(Shape::Square),
        2 => Ok(Shape::Ball {
            center: [p[0], p[1]],
            radius: p[2],
        }),
        _ => Err(Error::Cache(format!("unknown shape code {code}"))),
    }
}

pub fn write_grid_function(path: &Path, u: &GridFunction, format: DumpFormat) -> Result<()> {
    let mesh = u.mesh();
    let (code, params) = encode(mesh.shape);
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    match format {
        DumpFormat::Binary => {
            w.write_all(MAGIC)?;
            w.write_all(&VERSION.to_le_bytes())?;
            w.write_all(&code.to_le_bytes())?;
            for p in params {
                w.write_all(&p.to_le_bytes())?;
            }
            w.write_all(&(mesh.n as u32).to_le_bytes())?;
            w.write_all(&(u.values().len() as u64).to_le_bytes())?;
            for v in u.values() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        DumpFormat::Csv => {
            writeln!(
                w,
                "# shape={code} p0={:?} p1={:?} p2={:?} n={}",
                params[0], params[1], params[2], mesh.n
            )?;
            writeln!(w, "node,x1,x2,value")?;
            for (v, val) in u.values().iter().enumerate() {
                let x = mesh.point(v);
                writeln!(w, "{v},{:?},{:?},{val:?}", x[0], x[1])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a dump written by [`write_grid_function`] in either format.
pub fn read_grid_function(path: &Path) -> Result<GridFunction> {
    let mut file = std::fs::File::open(path)?;
    let mut head = [0u8; 4];
    let binary = file.read_exact(&mut head).is_ok() && &head == MAGIC;
    drop(file);
    if binary {
        read_binary(path)
    } else {
        read_csv(path)
    }
}

fn read_binary(path: &Path) -> Result<GridFunction> {
    let bytes = std::fs::read(path)?;
    let mut pos = 4;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes
            .get(pos..pos + n)
            .ok_or_else(|| Error::Cache(format!("{} is truncated", path.display())))?;
        pos += n;
        Ok(s)
    };
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
    let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().expect("8 bytes"));
    let version = u32_at(take(4)?);
    if version != VERSION {
        return Err(Error::Cache(format!("unsupported dump version {version}")));
    }
    let code = u32_at(take(4)?);
    let params = [f64_at(take(8)?), f64_at(take(8)?), f64_at(take(8)?)];
    let n = u32_at(take(4)?) as usize;
    let count = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
    let values = take(8 * count)?.chunks_exact(8).map(f64_at).collect();
    build(decode(code, params)?, n, values)
}

fn build(shape: Shape, n: usize, values: Vec<f64>) -> Result<GridFunction> {
    let mesh = Arc::new(Mesh::new(shape, n)?);
    if values.len() != mesh.num_nodes() {
        return Err(Error::Cache(format!(
            "dump holds {} values for a mesh of {} nodes",
            values.len(),
            mesh.num_nodes()
        )));
    }
    Ok(GridFunction::new(mesh, values))
}

fn read_csv(path: &Path) -> Result<GridFunction> {
    let bad = |msg: &str| Error::Cache(format!("{}: {msg}", path.display()));
    let mut lines = BufReader::new(std::fs::File::open(path)?).lines();
    let first = lines.next().ok_or_else(|| bad("empty file"))??;
    let field = |key: &str| -> Result<&str> {
        first
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| bad(&format!("missing `{key}` in header")))
    };
    let num = |key: &str| -> Result<f64> { field(key)?.parse().map_err(|_| bad(&format!("bad `{key}`"))) };
    let code: u32 = field("shape")?.parse().map_err(|_| bad("bad shape"))?;
    let n: usize = field("n")?.parse().map_err(|_| bad("bad n"))?;
    let shape = decode(code, [num("p0")?, num("p1")?, num("p2")?])?;
    lines.next().ok_or_else(|| bad("missing column header"))??;
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        let v = line.rsplit(',').next().ok_or_else(|| bad("empty row"))?;
        values.push(v.parse().map_err(|_| bad(&format!("bad value `{v}`")))?);
    }
    build(shape, n, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = Arc::new(
            Mesh::new(
                Shape::Ball {
                    center: [0.5, 0.5],
                    radius: 0.5,
                },
                10,
            )
            .unwrap(),
        );
        let u = GridFunction::from_fn(mesh, |x| (x[0] * 7.1).sin() + x[1] / 3.0);
        for (name, fmt) in [("u.tsgf", DumpFormat::Binary), ("u.csv", DumpFormat::Csv)] {
            let path = dir.path().join(name);
            write_grid_function(&path, &u, fmt).unwrap();
            let back = read_grid_function(&path).unwrap();
            assert!(back.mesh().same_as(u.mesh()));
            assert_eq!(back.values(), u.values());
        }
    }

    #[test]
    fn truncated_dump_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.tsgf");
        let mesh = Arc::new(Mesh::new(Shape::Square, 4).unwrap());
        write_grid_function(&path, &GridFunction::from_fn(mesh, |_| 1.0), DumpFormat::Binary).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_grid_function(&path), Err(Error::Cache(_))));
    }
}
