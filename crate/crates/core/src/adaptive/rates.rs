use super::IterationRecord;
use crate::{Error, Result};

/// Default regression window.
pub const DEFAULT_WINDOW: usize = 15;

/// Which dof count the decay rate is regressed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DofAbscissa {
    /// `Σ_l dim S_l`. All problems start on the initial mesh, so this count
    /// carries an offset of `N` times the initial dofs that flattens its growth.
    Total,
    /// Dimension of the union-mesh space.
    #[default]
    Union,
}

/// `-slope` of the least-squares line through `(log x, log y)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Config("a rate needs at least two points".into()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Domain("rates need positive dofs and estimates".into()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all dof counts are equal".into()));
    }
    Ok(-sxy / sxx)
}

/// Which estimate the rate is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimate {
    Triangle,
    Union,
}

/// Decay rate of an estimate over the last `window` records that carry it.
pub fn decay_rate(
    records: &[IterationRecord],
    window: usize,
    estimate: Estimate,
    abscissa: DofAbscissa,
) -> Result<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| {
            let eta = match estimate {
                Estimate::Triangle => r.eta_triangle,
                Estimate::Union => r.eta_union,
            }?;
            let x = match abscissa {
                DofAbscissa::Total => r.total_dofs,
                DofAbscissa::Union => r.union_dofs?,
            };
            Some((x as f64, eta))
        })
        .collect();
    if pts.len() < window {
        return Err(Error::Config(format!(
            "{} estimate records, the rate window needs {window}",
            pts.len()
        )));
    }
    loglog_slope(&pts[pts.len() - window..])
}
