//! Comma-separated result tables with a fixed column order per family.

use std::io::Write;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::numfmt::fmt_num;
use crate::verdict::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Contact,
    Curvature,
    Viscosity,
    Abp,
    Harnack,
}

const CONTACT: &[&str] = &[
    "run_id", "scene", "n", "rho", "a", "centers", "pairs", "feet", "measure", "measure_err",
    "boundary_touch", "vertex_max_err", "vertex_bound", "verdict",
];
const CURVATURE: &[&str] = &[
    "run_id", "scene", "n", "rho", "r", "step", "m", "h", "records", "skipped",
    "sentinel_fraction", "mean_trace", "violations", "worst_margin", "verdict",
];
const VISCOSITY: &[&str] = &[
    "run_id", "scene", "n", "rho", "m", "h", "seed", "kind", "admissible", "passed", "failed",
    "worst_margin", "point", "trace_m", "bound", "verdict",
];
const ABP: &[&str] = &[
    "run_id", "scene", "n", "m", "h", "a", "rho", "lhs", "lhs_err", "gamma", "factor1",
    "factor2", "measure_term", "measure_err", "rhs", "margin", "flags", "verdict",
];
const HARNACK: &[&str] = &[
    "run_id", "scene", "n", "rho", "alpha", "k", "mu", "eps", "h", "gamma_b", "barrier",
    "beta_hat", "beta_verdict", "f_measures", "residual", "residual_err", "beta1_needed",
    "cascade_verdict", "verdict",
];

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Contact,
        Family::Curvature,
        Family::Viscosity,
        Family::Abp,
        Family::Harnack,
    ];

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Family::Contact => CONTACT,
            Family::Curvature => CURVATURE,
            Family::Viscosity => VISCOSITY,
            Family::Abp => ABP,
            Family::Harnack => HARNACK,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Contact => "contact",
            Family::Curvature => "curvature",
            Family::Viscosity => "viscosity",
            Family::Abp => "abp",
            Family::Harnack => "harnack",
        }
    }

    /// Module the family exercises.
    pub fn module(self) -> &'static str {
        match self {
            Family::Contact => "paraboloid-engine",
            Family::Curvature | Family::Viscosity => "normal-bundle",
            Family::Abp => "abp-verifier",
            Family::Harnack => "harnack-lab",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.name())
    }
}

/// One output row. `cells` follow [`Family::columns`]; wall time is kept
/// out of the tables so that reruns stay byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub family: Family,
    pub run_id: String,
    pub scene: String,
    pub rho: f64,
    pub cells: Vec<String>,
    pub verdict: Verdict,
    pub wall_time: Duration,
}

impl ResultRow {
    pub fn module(&self) -> &'static str {
        self.family.module()
    }

    pub fn operation(&self) -> &'static str {
        self.family.name()
    }

    pub fn cell(&self, column: &str) -> Option<&str> {
        let i = self.family.columns().iter().position(|c| *c == column)?;
        self.cells.get(i).map(String::as_str)
    }
}

/// Row builder that enforces the column order.
pub(crate) struct RowBuilder {
    family: Family,
    cells: Vec<String>,
}

impl RowBuilder {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            cells: Vec::with_capacity(family.columns().len()),
        }
    }

    pub fn text(mut self, column: &str, v: impl Into<String>) -> Self {
        let expected = self.family.columns()[self.cells.len()];
        debug_assert_eq!(expected, column, "column order");
        let v: String = v.into();
        // Cells never contain the separator; lists use ';'.
        self.cells.push(v.replace(',', ";"));
        self
    }

    pub fn num(self, column: &str, v: f64) -> Self {
        self.text(column, fmt_num(v))
    }

    pub fn int(self, column: &str, v: impl ToString) -> Self {
        self.text(column, v.to_string())
    }

    pub fn opt(self, column: &str, v: Option<f64>) -> Self {
        self.text(column, v.map(fmt_num).unwrap_or_default())
    }

    pub fn finish(self, run_id: &str, scene: &str, rho: f64, verdict: Verdict, wall_time: Duration) -> ResultRow {
        assert_eq!(self.cells.len(), self.family.columns().len(), "incomplete row");
        ResultRow {
            family: self.family,
            run_id: run_id.to_string(),
            scene: scene.to_string(),
            rho,
            cells: self.cells,
            verdict,
            wall_time,
        }
    }
}

pub fn join_nums(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(";")
}

/// Writes the header and the rows in canonical (lexicographic cell) order.
pub fn emit_table<W: Write>(family: Family, rows: &[ResultRow], mut out: W) -> Result<()> {
    let cols = family.columns();
    if let Some(bad) = rows
        .iter()
        .find(|r| r.family != family || r.cells.len() != cols.len())
    {
        return Err(Error::Domain(format!(
            "row for {} does not fit the {} table",
            bad.family.name(),
            family.name()
        )));
    }
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.cells.cmp(&b.cells));
    let mut buf = String::new();
    buf.push_str(&cols.join(","));
    buf.push('\n');
    for r in sorted {
        buf.push_str(&r.cells.join(","));
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scene: &str, margin: f64) -> ResultRow {
        let mut b = RowBuilder::new(Family::Abp);
        for c in ABP {
            b = match *c {
                "scene" => b.text(c, scene),
                "margin" => b.num(c, margin),
                "verdict" => b.text(c, "holds"),
                _ => b.text(c, "x"),
            };
        }
        b.finish("id", scene, 0.1, Verdict::Holds, Duration::ZERO)
    }

    #[test]
    fn abp_columns_are_fixed() {
        assert_eq!(
            Family::Abp.columns().join(","),
            "run_id,scene,n,m,h,a,rho,lhs,lhs_err,gamma,factor1,factor2,measure_term,measure_err,rhs,margin,flags,verdict"
        );
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut out = Vec::new();
        emit_table(Family::Harnack, &[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{}\n", HARNACK.join(",")));
    }

    #[test]
    fn order_does_not_depend_on_input_order() {
        let rows = vec![row("b", 1.0), row("a", 2.0)];
        let rev: Vec<ResultRow> = rows.iter().rev().cloned().collect();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        emit_table(Family::Abp, &rows, &mut x).unwrap();
        emit_table(Family::Abp, &rev, &mut y).unwrap();
        assert_eq!(x, y);
        assert_eq!(rows[0].cell("margin"), Some("1.00000000000"));
    }

    #[test]
    fn mixed_rows_are_rejected() {
        assert!(emit_table(Family::Contact, &[row("a", 1.0)], Vec::new()).is_err());
    }
}
