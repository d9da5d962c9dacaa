//! Field files: four ASCII header lines (`dim=`, `n=`, `L=`, `count=`)
//! followed by `count` little-endian f64 samples in row-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{make_grid, Field};
use crate::error::{Error, Result};

pub fn write_field<W: Write>(mut w: W, field: &Field) -> Result<()> {
    let g = field.grid();
    write!(
        w,
        "dim={}\nn={}\nL={}\ncount={}\n",
        g.dim(),
        g.n_per_axis(),
        g.box_length(),
        field.len()
    )?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field_file(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    write_field(BufWriter::new(File::create(path)?), field)
}

fn header_value<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    let line = line.trim_end_matches(['\n', '\r']);
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| Error::FieldFormat(format!("expected `{key}=...`, found `{line}`")))
}

fn parse<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
    let raw = header_value(line, key)?;
    raw.trim()
        .parse()
        .map_err(|_| Error::FieldFormat(format!("bad value for `{key}`: `{raw}`")))
}

pub fn read_field<R: Read>(r: R) -> Result<Field> {
    let mut r = BufReader::new(r);
    let mut lines = [String::new(), String::new(), String::new(), String::new()];
    for line in lines.iter_mut() {
        if r.read_line(line)? == 0 {
            return Err(Error::FieldFormat("truncated header".into()));
        }
    }
    let dim: usize = parse(&lines[0], "dim")?;
    let n: usize = parse(&lines[1], "n")?;
    let l: f64 = parse(&lines[2], "L")?;
    let count: usize = parse(&lines[3], "count")?;

    let grid = make_grid(dim, n, l)?;
    if count != grid.len() {
        return Err(Error::FieldFormat(format!(
            "count={count} but grid has {} points",
            grid.len()
        )));
    }
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::FieldFormat(format!("expected {count} samples")))?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::FieldFormat(format!("{} trailing bytes", rest.len())));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Field::new(grid, values)
}

pub fn read_field_file(path: impl AsRef<Path>) -> Result<Field> {
    read_field(File::open(path)?)
}
