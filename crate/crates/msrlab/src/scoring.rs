//! Proper scoring rules and market-scoring-rule round payoffs.
//!
//! Scores are floats (the logarithmic rule is irrational); announcements and
//! expectations stay rational. Comparisons involving scores use EPS = 1e-9.

use crate::model::{Belief, Security};
use crate::rational::{rat_int, rat_to_f64, Rat};
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCORE_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("announcement {y} outside the range [{lo}, {hi}]")]
    OutOfRange { y: f64, lo: f64, hi: f64 },
    #[error("logarithmic anchors must lie strictly outside the payoff range")]
    BadAnchors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoringRule {
    Quadratic,
    /// s(y,x) = (x-a) ln(y-a) + (b-x) ln(b-y), anchors a < min X, b > max X.
    Logarithmic {
        #[serde(with = "crate::rational::serde_rat")]
        a: Rat,
        #[serde(with = "crate::rational::serde_rat")]
        b: Rat,
    },
}

impl ScoringRule {
    /// Logarithmic rule with the default anchors a = min-1, b = max+1.
    pub fn logarithmic_default(x: &Security) -> Self {
        ScoringRule::Logarithmic {
            a: x.min_payoff() - rat_int(1),
            b: x.max_payoff() + rat_int(1),
        }
    }

    pub fn validate_for(&self, x: &Security) -> Result<(), ScoringError> {
        if let ScoringRule::Logarithmic { a, b } = self {
            if !(a < x.min_payoff() && b > x.max_payoff()) {
                return Err(ScoringError::BadAnchors);
            }
        }
        Ok(())
    }
}

fn check_range(x: &Security, y: &Rat) -> Result<(), ScoringError> {
    if y < x.min_payoff() || y > x.max_payoff() {
        return Err(ScoringError::OutOfRange {
            y: rat_to_f64(y),
            lo: rat_to_f64(x.min_payoff()),
            hi: rat_to_f64(x.max_payoff()),
        });
    }
    Ok(())
}

/// s(y, x_realized). `security` supplies the announcement range.
pub fn score(rule: &ScoringRule, security: &Security, y: &Rat, x: &Rat) -> Result<f64, ScoringError> {
    check_range(security, y)?;
    Ok(score_unchecked(rule, y, x))
}

pub(crate) fn score_unchecked(rule: &ScoringRule, y: &Rat, x: &Rat) -> f64 {
    match rule {
        ScoringRule::Quadratic => {
            let d = rat_to_f64(x) - rat_to_f64(y);
            -(d * d)
        }
        ScoringRule::Logarithmic { a, b } => {
            let (a, b) = (rat_to_f64(a), rat_to_f64(b));
            let (y, x) = (rat_to_f64(y), rat_to_f64(x));
            (x - a) * (y - a).ln() + (b - x) * (b - y).ln()
        }
    }
}

/// MSR per-round payoff s(y_now, x) - s(y_prev, x); zero when the
/// announcement is repeated.
pub fn msr_round_payoff(
    rule: &ScoringRule,
    security: &Security,
    y_now: &Rat,
    y_prev: &Rat,
    x: &Rat,
) -> Result<f64, ScoringError> {
    if y_now == y_prev {
        return Ok(0.0);
    }
    Ok(score(rule, security, y_now, x)? - score(rule, security, y_prev, x)?)
}

/// Sum_w b(w) s(rule, y, X(w)).
pub fn expected_score(
    b: &Belief,
    rule: &ScoringRule,
    security: &Security,
    y: &Rat,
) -> Result<f64, ScoringError> {
    check_range(security, y)?;
    Ok(b
        .probs()
        .iter()
        .zip(security.payoffs())
        .filter(|(p, _)| !num_traits::Zero::is_zero(*p))
        .map(|(p, x)| rat_to_f64(p) * score_unchecked(rule, y, x))
        .sum())
}

/// The myopically best announcement: E_b[X] exactly. With a finite grid, use
/// [`myopic_best_on_grid`].
pub fn myopic_best(b: &Belief, x: &Security) -> Rat {
    b.expectation(x)
}

/// Nearest grid point to E_b[X], ties resolved to the lower value.
pub fn myopic_best_on_grid(b: &Belief, x: &Security, grid: &[Rat]) -> Rat {
    let target = b.expectation(x);
    let mut best: Option<&Rat> = None;
    for g in grid {
        let better = match best {
            None => true,
            Some(cur) => {
                let dg = (g - &target).abs();
                let dc = (cur - &target).abs();
                dg < dc || (dg == dc && g < cur)
            }
        };
        if better {
            best = Some(g);
        }
    }
    best.expect("non-empty grid").clone()
}
