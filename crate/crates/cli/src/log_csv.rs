//! The `log.csv` schema.

use std::fmt;

use anyhow::{bail, Context};
use fracmesh::adaptive::{loglog_slope, DofAbscissa, IterationRecord};

pub const HEADER: &str =
    "m,solved,totcost,cumcost,total_dofs,union_dofs,eta_triangle,eta_union,error_ref,theta_eff,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub m: usize,
    pub solved: usize,
    pub totcost: u64,
    pub cumcost: u64,
    pub total_dofs: usize,
    pub union_dofs: Option<usize>,
    pub eta_triangle: Option<f64>,
    pub eta_union: Option<f64>,
    pub error_ref: Option<f64>,
    pub theta_eff: Option<f64>,
    pub wall_ms: f64,
}

impl From<&IterationRecord> for LogRow {
    fn from(r: &IterationRecord) -> Self {
        LogRow {
            m: r.m,
            solved: r.solved_problems,
            totcost: r.totcost,
            cumcost: r.cumcost,
            total_dofs: r.total_dofs,
            union_dofs: r.union_dofs,
            eta_triangle: r.eta_triangle,
            eta_union: r.eta_union,
            error_ref: r.error_ref,
            theta_eff: r.effectivity,
            wall_ms: r.wall_time.as_secs_f64() * 1e3,
        }
    }
}

struct Opt<T>(Option<T>);

impl fmt::Display for Opt<usize> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Opt<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v:.16e}"),
            None => Ok(()),
        }
    }
}

impl fmt::Display for LogRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{:.3}",
            self.m,
            self.solved,
            self.totcost,
            self.cumcost,
            self.total_dofs,
            Opt(self.union_dofs),
            Opt(self.eta_triangle),
            Opt(self.eta_union),
            Opt(self.error_ref),
            Opt(self.theta_eff),
            self.wall_ms
        )
    }
}

fn field<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> anyhow::Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<T>()
        .map(Some)
        .map_err(|_| anyhow::anyhow!("line {line}: invalid {name} '{s}'"))
}

fn required<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> anyhow::Result<T> {
    field(s, name, line)?.with_context(|| format!("line {line}: missing {name}"))
}

pub fn parse(text: &str) -> anyhow::Result<Vec<LogRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == HEADER => {}
        _ => bail!("log.csv header does not match '{HEADER}'"),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let n = i + 2;
            let v: Vec<&str> = l.trim_end().split(',').collect();
            if v.len() != 11 {
                bail!("line {n}: expected 11 fields, found {}", v.len());
            }
            Ok(LogRow {
                m: required(v[0], "m", n)?,
                solved: required(v[1], "solved", n)?,
                totcost: required(v[2], "totcost", n)?,
                cumcost: required(v[3], "cumcost", n)?,
                total_dofs: required(v[4], "total_dofs", n)?,
                union_dofs: field(v[5], "union_dofs", n)?,
                eta_triangle: field(v[6], "eta_triangle", n)?,
                eta_union: field(v[7], "eta_union", n)?,
                error_ref: field(v[8], "error_ref", n)?,
                theta_eff: field(v[9], "theta_eff", n)?,
                wall_ms: required(v[10], "wall_ms", n)?,
            })
        })
        .collect()
}

/// Rates of `eta_triangle` and `eta_union` over the last `window` rows
/// carrying estimates.
pub fn rates(rows: &[LogRow], window: usize, dofs: DofAbscissa) -> anyhow::Result<(f64, f64)> {
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            let x = match dofs {
                DofAbscissa::Total => r.total_dofs,
                DofAbscissa::Union => r.union_dofs?,
            };
            Some((x as f64, r.eta_triangle?, r.eta_union?))
        })
        .collect();
    if window < 2 || pts.len() < window {
        bail!(
            "{} rows with estimates, the rate window needs {window}",
            pts.len()
        );
    }
    let last = &pts[pts.len() - window..];
    let tri: Vec<(f64, f64)> = last.iter().map(|p| (p.0, p.1)).collect();
    let uni: Vec<(f64, f64)> = last.iter().map(|p| (p.0, p.2)).collect();
    Ok((loglog_slope(&tri)?, loglog_slope(&uni)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(m: usize, dofs: usize, eta: Option<f64>) -> LogRow {
        LogRow {
            m,
            solved: 1,
            totcost: 10,
            cumcost: 10 * m as u64,
            total_dofs: dofs,
            union_dofs: eta.map(|_| dofs),
            eta_triangle: eta.map(|e| 2.0 * e),
            eta_union: eta,
            error_ref: None,
            theta_eff: None,
            wall_ms: 1.5,
        }
    }

    #[test]
    fn round_trip() {
        let rows = vec![
            row(0, 100, Some(0.125)),
            row(1, 180, None),
            row(2, 400, Some(1.0 / 3.0)),
        ];
        let mut text = format!("{HEADER}\n");
        for r in &rows {
            text += &format!("{r}\n");
        }
        assert_eq!(parse(&text).unwrap(), rows);
    }

    #[test]
    fn rejects_bad_header() {
        assert!(parse("m,solved\n").is_err());
    }

    #[test]
    fn exact_exponent() {
        let rows: Vec<LogRow> = (0..20)
            .map(|m| {
                let d = 100 * (m + 1) * (m + 1);
                row(m, d, Some((d as f64).powf(-0.8)))
            })
            .collect();
        for dofs in [DofAbscissa::Total, DofAbscissa::Union] {
            let (tri, uni) = rates(&rows, 15, dofs).unwrap();
            assert!((tri - 0.8).abs() < 1e-12);
            assert!((uni - 0.8).abs() < 1e-12);
            assert!(rates(&rows[..14], 15, dofs).is_err());
        }
    }
}
