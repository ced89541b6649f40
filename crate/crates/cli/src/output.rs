//! CSV emission and the grid container shared by the sweep experiments.

use std::fs;
use std::path::Path;

use crate::error::{CliError, Result};

/// Formats `x` like C's `%.17g`: 17 significant digits, trailing zeros trimmed.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Writes a header plus rows as RFC-4180 CSV.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let wrap = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(wrap)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Rectangular sweep output. Cells are stored axis1-major: index `i * len2 + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub axis_names: [String; 2],
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub outputs: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    /// `"ok"` or the failure message for each cell.
    pub status: Vec<String>,
}

impl GridResult {
    /// Evaluates `cell` on every grid point (in parallel on the current rayon pool).
    /// Failed cells get NaN outputs and their error text in `status`.
    pub fn evaluate<F, E>(
        axis_names: [&str; 2],
        axis1: Vec<f64>,
        axis2: Vec<f64>,
        outputs: &[&str],
        cell: F,
    ) -> Self
    where
        F: Fn(f64, f64) -> std::result::Result<Vec<f64>, E> + Sync,
        E: std::fmt::Display,
    {
        use rayon::prelude::*;
        let n2 = axis2.len();
        let width = outputs.len();
        let evaluated: Vec<(Vec<f64>, String)> = (0..axis1.len() * n2)
            .into_par_iter()
            .map(|idx| match cell(axis1[idx / n2], axis2[idx % n2]) {
                Ok(v) => {
                    debug_assert_eq!(v.len(), width);
                    (v, "ok".to_string())
                }
                Err(e) => (vec![f64::NAN; width], e.to_string()),
            })
            .collect();
        let (cells, status) = evaluated.into_iter().unzip();
        GridResult {
            axis_names: axis_names.map(String::from),
            axis1,
            axis2,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            cells,
            status,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let n2 = self.axis2.len();
        (self.axis1[idx / n2], self.axis2[idx % n2])
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.outputs.iter().position(|o| o == name)?;
        Some(self.cells.iter().map(|c| c[k]).collect())
    }

    pub fn failures(&self) -> usize {
        self.status.iter().filter(|s| *s != "ok").count()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut header: Vec<&str> = vec![&self.axis_names[0], &self.axis_names[1]];
        header.extend(self.outputs.iter().map(String::as_str));
        header.push("status");
        let rows = (0..self.len()).map(|idx| {
            let (a, b) = self.coords(idx);
            let mut row = vec![fmt_num(a), fmt_num(b)];
            row.extend(self.cells[idx].iter().map(|v| fmt_num(*v)));
            row.push(self.status[idx].clone());
            row
        });
        write_csv(path, &header, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_num(0.1), "0.10000000000000001");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(-2.0), "-2");
        assert_eq!(fmt_num(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(fmt_num(1e-7), "9.9999999999999995e-08");
        assert_eq!(fmt_num(1.5e20), "1.5e+20");
        assert_eq!(fmt_num(123456.0), "123456");
    }

    #[test]
    fn formatted_values_round_trip() {
        for x in [std::f64::consts::PI, 1.0 / 7.0, 6.02e23, -1e-300, 0.0, 12345.678] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn grid_is_axis1_major() {
        let g = GridResult::evaluate(["x", "y"], vec![1.0, 2.0], vec![10.0, 20.0], &["sum"], |a, b| {
            Ok::<_, String>(vec![a + b])
        });
        assert_eq!(g.column("sum").unwrap(), vec![11.0, 21.0, 12.0, 22.0]);
    }

    #[test]
    fn empty_grid_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridResult::evaluate(["x", "y"], vec![], vec![1.0], &["v"], |_, _| Ok::<_, String>(vec![0.0]));
        let path = dir.path().join("g.csv");
        g.write_csv(&path).unwrap();
        assert_eq!(fs::read_to_string(path).unwrap(), "x,y,v,status\r\n");
    }

    #[test]
    fn failed_cells_are_recorded() {
        let g = GridResult::evaluate(["x", "y"], vec![1.0, -1.0], vec![0.0], &["v"], |a, _| {
            if a > 0.0 {
                Ok(vec![a])
            } else {
                Err("negative")
            }
        });
        assert_eq!(g.failures(), 1);
        assert!(g.cells[1][0].is_nan());
        assert_eq!(g.status[1], "negative");
    }
}
