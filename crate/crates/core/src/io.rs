//! Plain-text output: comma-separated tables and `key = value` summaries.
//! Every writer has a parser that reads its output back.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::conditions::{ConditionMReport, EsscherNegligibleReport, FlargeruReport};
use crate::rate::{RateKind, RateTable, SdBounds};
use crate::simulate::SmallDevEstimate;
use crate::verify::{LiminfReport, SandwichReport};

/// Shortest round-trip decimal; scientific notation outside `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || x.is_nan() || x.is_infinite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: '{s}'")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty table".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(Error::Parse(format!(
                    "row {}: {} fields, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn expect_header(&self, expected: &[&str]) -> Result<()> {
        if self.header.iter().map(String::as_str).eq(expected.iter().copied()) {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "expected header '{}', found '{}'",
                expected.join(","),
                self.header.join(",")
            )))
        }
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column '{name}'")))?;
        self.rows.iter().map(|r| parse_f64(&r[i])).collect()
    }
}

pub const RATE_HEADER: [&str; 2] = ["eps", "F"];
pub const NORMING_HEADER: [&str; 2] = ["t", "b"];
pub const ESTIMATE_HEADER: [&str; 8] = [
    "t", "eps", "n_paths", "hits", "p_hat", "ci_low", "ci_high", "neg_log_p",
];

pub fn rate_table_to_csv(table: &RateTable) -> String {
    let mut t = CsvTable::new(&RATE_HEADER);
    for (e, f) in table.eps_grid().iter().zip(table.f_values()) {
        t.push(vec![fmt_f64(*e), fmt_f64(*f)]);
    }
    t.render()
}

pub fn rate_table_from_csv(text: &str) -> Result<RateTable> {
    let t = CsvTable::parse(text)?;
    t.expect_header(&RATE_HEADER)?;
    RateTable::from_values(t.column_f64("eps")?, t.column_f64("F")?, RateKind::Loaded)
}

pub fn curve_to_csv(points: &[(f64, f64)]) -> String {
    let mut t = CsvTable::new(&NORMING_HEADER);
    for (x, y) in points {
        t.push(vec![fmt_f64(*x), fmt_f64(*y)]);
    }
    t.render()
}

pub fn curve_from_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let t = CsvTable::parse(text)?;
    t.expect_header(&NORMING_HEADER)?;
    Ok(t.column_f64("t")?.into_iter().zip(t.column_f64("b")?).collect())
}

pub fn estimates_to_csv(estimates: &[SmallDevEstimate]) -> String {
    let mut t = CsvTable::new(&ESTIMATE_HEADER);
    for e in estimates {
        t.push(vec![
            fmt_f64(e.t),
            fmt_f64(e.eps),
            e.n_paths.to_string(),
            e.hits.to_string(),
            fmt_f64(e.p_hat),
            fmt_f64(e.ci_low),
            fmt_f64(e.ci_high),
            e.neg_log_p.map(fmt_f64).unwrap_or_default(),
        ]);
    }
    t.render()
}

pub fn estimates_from_csv(text: &str) -> Result<Vec<SmallDevEstimate>> {
    let t = CsvTable::parse(text)?;
    t.expect_header(&ESTIMATE_HEADER)?;
    t.rows
        .iter()
        .map(|r| {
            let int = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| Error::Parse(format!("not an integer: '{s}'")))
            };
            Ok(SmallDevEstimate {
                t: parse_f64(&r[0])?,
                eps: parse_f64(&r[1])?,
                n_paths: int(&r[2])?,
                hits: int(&r[3])?,
                p_hat: parse_f64(&r[4])?,
                ci_low: parse_f64(&r[5])?,
                ci_high: parse_f64(&r[6])?,
                neg_log_p: if r[7].is_empty() { None } else { Some(parse_f64(&r[7])?) },
            })
        })
        .collect()
}

pub fn sd_bounds_to_csv(bounds: &[SdBounds]) -> String {
    let mut t = CsvTable::new(&["t", "eps", "lower", "upper"]);
    for b in bounds {
        t.push(vec![fmt_f64(b.t), fmt_f64(b.eps), fmt_f64(b.lower), fmt_f64(b.upper)]);
    }
    t.render()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn sandwich_to_csv(report: &SandwichReport) -> String {
    let mut t = CsvTable::new(&[
        "t", "eps", "lower", "upper", "n_paths", "hits", "p_hat", "band_low", "band_high", "status",
        "strictly_inside",
    ]);
    for c in &report.cells {
        t.push(vec![
            fmt_f64(c.t),
            fmt_f64(c.eps),
            fmt_f64(c.lower),
            fmt_f64(c.upper),
            c.estimate.map(|e| e.n_paths.to_string()).unwrap_or_default(),
            c.estimate.map(|e| e.hits.to_string()).unwrap_or_default(),
            opt(c.estimate.map(|e| e.p_hat)),
            opt(c.band.map(|b| b.0)),
            opt(c.band.map(|b| b.1)),
            c.status.as_str().to_string(),
            c.strictly_inside.to_string(),
        ]);
    }
    t.render()
}

/// One row per path: the minimum over `k` and the `k` attaining it.
pub fn liminf_to_csv(report: &LiminfReport) -> String {
    let mut t = CsvTable::new(&["path", "min_ratio", "argmin_k"]);
    for (p, (row, m)) in report.ratios.iter().zip(&report.minima).enumerate() {
        let k = row.iter().position(|x| x == m).map(|i| report.ks[i]).unwrap_or(0);
        t.push(vec![p.to_string(), fmt_f64(*m), k.to_string()]);
    }
    t.render()
}

pub fn esscher_ratios_to_csv(report: &EsscherNegligibleReport) -> String {
    let mut t = CsvTable::new(&["eps", "u_eps", "F", "ratio"]);
    for r in &report.rows {
        t.push(vec![fmt_f64(r.eps), fmt_f64(r.u_eps), fmt_f64(r.f), fmt_f64(r.ratio)]);
    }
    t.render()
}

pub fn condition_m_to_csv(report: &ConditionMReport) -> String {
    let mut t = CsvTable::new(&["beta", "n", "log_ratio"]);
    for s in &report.series {
        for (n, lr) in &s.log_ratios {
            t.push(vec![fmt_f64(s.beta), n.to_string(), fmt_f64(*lr)]);
        }
    }
    t.render()
}

pub fn flargeru_to_csv(report: &FlargeruReport) -> String {
    let mut t = CsvTable::new(&["eps", "lhs", "F", "ratio"]);
    for r in &report.rows {
        t.push(vec![fmt_f64(r.0), fmt_f64(r.1), fmt_f64(r.2), fmt_f64(r.3)]);
    }
    t.render()
}

/// Ordered `key = value` summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn put_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.put(key, fmt_f64(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| Error::Parse(format!("line {}: expected 'key = value'", i + 1)))?;
            s.put(k.trim(), v.trim());
        }
        Ok(s)
    }
}
