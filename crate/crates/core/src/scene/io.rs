//! Delimited-text dump and load of sample sets.
//!
//! One point per line, comma-separated coordinates with 12 significant
//! digits. A leading `#` line records `m`, `rho` and `h` as `key=value` pairs.

use std::io::{BufRead, Write};

use super::ClosedSetSample;
use crate::error::{Error, Result};
use crate::geom::PointSet;
use crate::numfmt::fmt_num;

pub fn dump_points<W: Write>(gamma: &ClosedSetSample, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# m={} rho={} h={}",
        gamma.intrinsic_dim(),
        fmt_num(gamma.resolution()),
        fmt_num(gamma.mc_bound())
    )?;
    for p in gamma.points().iter() {
        let row: Vec<String> = p.iter().map(|&c| fmt_num(c)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a dump back. Metadata defaults: `m = dim - 1`, `h = 0`; `rho` is required.
pub fn load_points<R: BufRead>(input: R) -> Result<ClosedSetSample> {
    let mut m: Option<usize> = None;
    let mut rho: Option<f64> = None;
    let mut h = 0.0;
    let mut coords = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            for kv in meta.split_whitespace() {
                let Some((k, v)) = kv.split_once('=') else { continue };
                let bad = |_| Error::Parse {
                    line: line_no,
                    column: 1,
                    message: format!("bad metadata value `{kv}`"),
                };
                match k {
                    "m" => m = Some(v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
                    "rho" => rho = Some(v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?),
                    "h" => h = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                    _ => {}
                }
            }
            continue;
        }
        let mut count = 0;
        let mut column = 1;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                column,
                message: format!("not a number: `{}`", field.trim()),
            })?;
            coords.push(v);
            count += 1;
            column += field.len() + 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    message: format!("expected {d} coordinates, found {count}"),
                })
            }
            _ => {}
        }
    }
    let dim = dim.ok_or(Error::EmptySet)?;
    let rho = rho.ok_or_else(|| Error::Parse {
        line: 1,
        column: 1,
        message: "missing `rho=` in the `#` header".into(),
    })?;
    let points = PointSet::from_flat(dim, coords)?;
    ClosedSetSample::from_points(points, m.unwrap_or(dim.saturating_sub(1)), rho, h)
}
