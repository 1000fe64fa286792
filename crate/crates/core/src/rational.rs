//! Sinc-quadrature rational approximation of `λ ↦ λ^{-s}`.
//!
//! `Q(λ) = C Σ_l a_l / (c_l + b_l λ)` with poles on a uniform grid in
//! `log b`. Each term is one reaction–diffusion problem
//! `-b_l Δw + c_l w = f`.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Coefficients of the rational approximation for one `(s, κ)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalScheme {
    s: f64,
    kappa: f64,
    m_minus: usize,
    m_plus: usize,
    scale: f64,
    log_b: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    epsilon: f64,
    lambda0: f64,
}

fn check_args(s: f64, kappa: f64, lambda0: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("fractional order s = {s} not in (0, 1)")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!(
            "quadrature step kappa = {kappa} must be positive"
        )));
    }
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(Error::Domain(format!(
            "spectral lower bound {lambda0} must be positive"
        )));
    }
    Ok(())
}

/// Number of quadrature nodes below and above zero in `log b`.
fn node_counts(s: f64, kappa: f64) -> (usize, usize) {
    let k2 = kappa * kappa;
    let minus = (PI * PI / (4.0 * s * k2)).ceil() as usize;
    let plus = (PI * PI / (4.0 * (1.0 - s) * k2)).ceil() as usize;
    (minus, plus)
}

/// Builds the scheme for fractional order `s`, quadrature step `kappa` and a
/// lower bound `lambda0` of the spectrum.
pub fn bp_coefficients(s: f64, kappa: f64, lambda0: f64) -> Result<RationalScheme> {
    check_args(s, kappa, lambda0)?;
    let (m_minus, m_plus) = node_counts(s, kappa);
    let n = m_minus + m_plus + 1;
    let log_b: Vec<f64> = (1..=n)
        .map(|l| 2.0 * (l as f64 - m_minus as f64 - 1.0) * kappa)
        .collect();
    let a = log_b.iter().map(|&t| (s * t).exp()).collect();
    let b = log_b.iter().map(|&t| t.exp()).collect();
    Ok(RationalScheme {
        s,
        kappa,
        m_minus,
        m_plus,
        scale: 2.0 * kappa * (PI * s).sin() / PI,
        log_b,
        a,
        b,
        epsilon: epsilon_bound(s, kappa, lambda0)?,
        lambda0,
    })
}

/// A priori bound on `sup_{λ ≥ λ0} |λ^{-s} - Q(λ)|`.
pub fn epsilon_bound(s: f64, kappa: f64, lambda0: f64) -> Result<f64> {
    check_args(s, kappa, lambda0)?;
    let q = PI * PI / (4.0 * kappa);
    let front = 2.0 * (PI * s).sin() / PI;
    let middle = 1.0 / (2.0 * s) + 1.0 / ((2.0 - 2.0 * s) * lambda0);
    // e^{-q} / sinh(q) rewritten to stay finite for tiny kappa
    let tail = 2.0 * (-2.0 * q).exp() / (1.0 - (-2.0 * q).exp()) + (-2.0 * q).exp();
    Ok(front * middle * tail)
}

/// Largest `κ` on the grid `0.50, 0.48, …, 0.10` whose bound satisfies
/// `ε_s(κ)·‖f‖ ≤ tol / 100`.
pub fn choose_kappa(s: f64, tol: f64, lambda0: f64, f_norm: f64) -> Result<f64> {
    if !(tol > 0.0) || !(f_norm > 0.0) {
        return Err(Error::Config(format!(
            "tolerance {tol} and data norm {f_norm} must be positive"
        )));
    }
    for i in 0..=20 {
        let kappa = (50 - 2 * i) as f64 / 100.0;
        if epsilon_bound(s, kappa, lambda0)? * f_norm <= tol / 100.0 {
            return Ok(kappa);
        }
    }
    Err(Error::Config(format!(
        "no quadrature step in [0.10, 0.50] reaches tolerance {tol:e}"
    )))
}

impl RationalScheme {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Number of parametric problems.
    pub fn n(&self) -> usize {
        self.log_b.len()
    }

    pub fn m_minus(&self) -> usize {
        self.m_minus
    }

    pub fn m_plus(&self) -> usize {
        self.m_plus
    }

    /// The prefactor `C`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Reaction coefficient of problem `l` (always one for this scheme).
    pub fn c(&self, _l: usize) -> f64 {
        1.0
    }

    pub fn log_b(&self) -> &[f64] {
        &self.log_b
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Replaces the weights `a_l`, keeping everything else.
    pub fn with_weights(mut self, a: Vec<f64>) -> Result<Self> {
        if a.len() != self.n() {
            return Err(Error::Config(format!(
                "{} weights given for {} problems",
                a.len(),
                self.n()
            )));
        }
        self.a = a;
        Ok(self)
    }

    /// A one-term scheme `Q(λ) = scale·a/(1 + bλ)`; used to exercise the
    /// multimesh machinery with a single problem.
    pub fn single(s: f64, b: f64, scale: f64, a: f64, lambda0: f64) -> Result<Self> {
        check_args(s, 1.0, lambda0)?;
        if ![b, scale, a].iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::Domain(format!(
                "single-term scheme needs positive finite b, scale and a, got {b}, {scale}, {a}"
            )));
        }
        Ok(RationalScheme {
            s,
            kappa: f64::NAN,
            m_minus: 0,
            m_plus: 0,
            scale,
            log_b: vec![b.ln()],
            a: vec![a],
            b: vec![b],
            epsilon: f64::NAN,
            lambda0,
        })
    }

    /// Evaluates `Q(λ)`.
    ///
    /// Each term is evaluated from `log b_l` so that neither `b_l λ` nor
    /// `a_l` overflows. Values below `lambda0` are computed but logged,
    /// since the bound does not hold there.
    pub fn eval_q(&self, lambda: f64) -> f64 {
        if lambda < self.lambda0 {
            log::warn!(
                "evaluating the rational approximation at {lambda} below the spectral bound {}",
                self.lambda0
            );
        }
        let ln_lambda = lambda.ln();
        let sum: f64 = self
            .log_b
            .iter()
            .zip(&self.a)
            .map(|(&t, &a)| {
                let u = t + ln_lambda;
                if u > 0.0 {
                    // a / (b λ (1 + 1/(b λ)))
                    (a.ln() - u).exp() / (1.0 + (-u).exp())
                } else {
                    a / (1.0 + u.exp())
                }
            })
            .sum();
        self.scale * sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT_SQUARE_FK: f64 = 18.168_414_535_537_234;

    #[test]
    fn node_counts_at_default_step() {
        let n: Vec<usize> = [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|&s| bp_coefficients(s, 0.26, 1.0).unwrap().n())
            .collect();
        assert_eq!(n, vec![408, 176, 149, 176, 408]);
    }

    #[test]
    fn symmetric_at_one_half() {
        let r = bp_coefficients(0.5, 0.3, 1.0).unwrap();
        assert_eq!(r.m_minus(), r.m_plus());
    }

    #[test]
    fn coefficient_identities() {
        let r = bp_coefficients(0.3, 0.26, UNIT_SQUARE_FK).unwrap();
        for l in 0..r.n() {
            let want = r.b()[l].powf(0.3);
            assert!((r.a()[l] - want).abs() <= 1e-12 * want);
            assert_eq!(r.c(l), 1.0);
        }
        for w in r.b().windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] / w[0] - (0.52f64).exp()).abs() < 1e-12);
        }
        assert!((r.scale() - 2.0 * 0.26 * (0.3 * PI).sin() / PI).abs() < 1e-15);
    }

    #[test]
    fn bound_value_and_monotonicity() {
        let e = epsilon_bound(0.5, 0.26, UNIT_SQUARE_FK).unwrap();
        assert!(e > 1.0e-8 && e < 1.3e-8, "{e}");
        for s in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let lo = epsilon_bound(s, 0.2, UNIT_SQUARE_FK).unwrap();
            let hi = epsilon_bound(s, 0.26, UNIT_SQUARE_FK).unwrap();
            assert!(lo < hi);
        }
    }

    #[test]
    fn eval_matches_power_near_lambda0() {
        let r = bp_coefficients(0.7, 0.26, UNIT_SQUARE_FK).unwrap();
        let exact = UNIT_SQUARE_FK.powf(-0.7);
        assert!((r.eval_q(UNIT_SQUARE_FK) - exact).abs() <= r.epsilon());
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let q = r.eval_q(UNIT_SQUARE_FK * 1.5f64.powi(i));
            assert!(q < prev);
            prev = q;
        }
    }

    #[test]
    fn invalid_arguments() {
        assert!(matches!(bp_coefficients(1.0, 0.26, 1.0), Err(Error::Domain(_))));
        assert!(matches!(bp_coefficients(0.0, 0.26, 1.0), Err(Error::Domain(_))));
        assert!(matches!(bp_coefficients(0.5, 0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn kappa_selection() {
        let k = choose_kappa(0.5, 1e-3, UNIT_SQUARE_FK, 1.0).unwrap();
        assert!(k >= 0.26);
        assert!(epsilon_bound(0.5, k, UNIT_SQUARE_FK).unwrap() <= 1e-5);
        if k < 0.5 {
            assert!(epsilon_bound(0.5, k + 0.02, UNIT_SQUARE_FK).unwrap() > 1e-5);
        }
        assert!(matches!(
            choose_kappa(0.5, 1e-30, UNIT_SQUARE_FK, 1.0),
            Err(Error::Config(_))
        ));
    }
}
