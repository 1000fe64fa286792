use crate::fem::ParametricState;
use crate::rational::RationalScheme;
use crate::{Error, Result};

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Config(format!("marking parameter {theta} not in (0, 1]")));
    }
    Ok(())
}

/// Joint weighted Dörfler marking.
///
/// Returns, per problem, the cell ids of a set of minimal total cardinality
/// with `θ Σ_l Σ_K (a_l η_{l,K})² ≤ Σ_l Σ_{K ∈ M_l} (a_l η_{l,K})²`. The
/// weighted indicators are sorted in decreasing order (ties by problem, then
/// cell) and the shortest sufficient prefix is taken. With `θ = 1` every
/// cell is marked. If all indicators vanish nothing is marked. Marked ids
/// are ascending.
pub fn doerfler_mark_weighted(indicators: &[&[f64]], weights: &[f64], theta: f64) -> Result<Vec<Vec<usize>>> {
    check_theta(theta)?;
    if indicators.len() != weights.len() {
        return Err(Error::Config(format!(
            "{} indicator sets for {} weights",
            indicators.len(),
            weights.len()
        )));
    }
    let mut entries: Vec<(f64, u32, u32)> = indicators
        .iter()
        .zip(weights)
        .enumerate()
        .flat_map(|(l, (eta, &a))| {
            eta.iter()
                .enumerate()
                .map(move |(k, &e)| ((a * e) * (a * e), l as u32, k as u32))
        })
        .collect();
    entries.sort_unstable_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let total: f64 = entries.iter().map(|e| e.0).sum();
    let mut marks = vec![Vec::new(); indicators.len()];
    if total <= 0.0 {
        return Ok(marks);
    }
    if theta == 1.0 {
        for (m, eta) in marks.iter_mut().zip(indicators) {
            *m = (0..eta.len()).collect();
        }
        return Ok(marks);
    }
    let goal = theta * total;
    let mut acc = 0.0;
    for &(v, l, k) in &entries {
        if acc >= goal {
            break;
        }
        acc += v;
        marks[l as usize].push(k as usize);
    }
    for m in &mut marks {
        m.sort_unstable();
    }
    Ok(marks)
}

/// [`doerfler_mark_weighted`] with the weights `a_l` of `scheme`.
pub fn doerfler_mark(
    states: &[ParametricState],
    scheme: &RationalScheme,
    theta: f64,
) -> Result<Vec<Vec<usize>>> {
    if states.iter().any(|s| s.dirty) {
        return Err(Error::Structure(
            "marking requested for an unsolved problem".into(),
        ));
    }
    let inds: Vec<&[f64]> = states.iter().map(|s| s.indicators.as_slice()).collect();
    doerfler_mark_weighted(&inds, scheme.a(), theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_one_marks_everything() {
        let a = [1.0, 2.0, 3.0];
        let b = [0.5, 0.25];
        let m = doerfler_mark_weighted(&[&a, &b], &[1.0, 0.1], 1.0).unwrap();
        assert_eq!(m, vec![vec![0, 1, 2], vec![0, 1]]);
    }

    #[test]
    fn dominant_cell_alone() {
        let a = [0.1, 10.0, 0.2];
        let b = [0.3, 0.1];
        let m = doerfler_mark_weighted(&[&a, &b], &[1.0, 1.0], 0.5).unwrap();
        assert_eq!(m, vec![vec![1], vec![]]);
    }

    #[test]
    fn heavier_weight_wins_identical_indicators() {
        let eta = [1.0, 0.9, 0.8, 0.7];
        let m = doerfler_mark_weighted(&[&eta, &eta], &[10.0, 1.0], 0.5).unwrap();
        assert!(m[1].is_empty());
        assert_eq!(m[0], vec![0, 1]);
    }

    #[test]
    fn ties_go_to_lower_problem_then_cell() {
        let eta = [1.0, 1.0];
        let m = doerfler_mark_weighted(&[&eta, &eta], &[1.0, 1.0], 0.5).unwrap();
        assert_eq!(m, vec![vec![0, 1], vec![]]);
    }

    #[test]
    fn zero_indicators_mark_nothing() {
        let z = [0.0; 4];
        let m = doerfler_mark_weighted(&[&z], &[1.0], 0.5).unwrap();
        assert!(m[0].is_empty());
    }

    #[test]
    fn invalid_theta() {
        assert!(doerfler_mark_weighted(&[&[1.0]], &[1.0], 0.0).is_err());
        assert!(doerfler_mark_weighted(&[&[1.0]], &[1.0], 1.5).is_err());
    }
}
