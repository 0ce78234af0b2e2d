//! Finite statistical experiments, posterior machinery, garbling and the
//! cost structure kappa = (c, K).
//!
//! Likelihood tables are exact rationals; entropies and costs are floats.

use crate::lp::feasible_point;
use crate::model::{Belief, ModelError};
use crate::rational::{rat, rat_to_f64, Rat};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("likelihoods for state {0} do not sum to 1")]
    NotNormalized(usize),
    #[error("likelihood entry out of [0,1] at realization {0}, state {1}")]
    OutOfRange(usize, usize),
    #[error("signal has no realizations")]
    Empty,
    #[error("realization {0} has zero probability under the prior")]
    ZeroProbabilityRealization(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A statistical experiment: finite realization list and a likelihood table
/// R(tau | omega).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signal {
    pub id: String,
    realizations: Vec<String>,
    /// likelihood[realization][state]
    likelihood: Vec<Vec<Rat>>,
}

impl Signal {
    pub fn new(
        id: impl Into<String>,
        realizations: Vec<String>,
        likelihood: Vec<Vec<Rat>>,
    ) -> Result<Self, SignalError> {
        if realizations.is_empty() || likelihood.is_empty() {
            return Err(SignalError::Empty);
        }
        let n_states = likelihood[0].len();
        for (t, row) in likelihood.iter().enumerate() {
            for (w, p) in row.iter().enumerate() {
                if p < &Rat::zero() || p > &Rat::one() {
                    return Err(SignalError::OutOfRange(t, w));
                }
            }
        }
        for w in 0..n_states {
            let total: Rat = likelihood.iter().map(|row| row[w].clone()).sum();
            if !total.is_one() {
                return Err(SignalError::NotNormalized(w));
            }
        }
        Ok(Self {
            id: id.into(),
            realizations,
            likelihood,
        })
    }

    /// The free uninformative signal: one realization, probability 1 everywhere.
    pub fn uninformative(n_states: usize) -> Self {
        Self {
            id: "null".into(),
            realizations: vec!["-".into()],
            likelihood: vec![vec![Rat::one(); n_states]],
        }
    }

    /// Binary signal targeting `event`: realization "z" has probability `q`
    /// inside the event and `1-q` outside.
    pub fn binary(id: impl Into<String>, n_states: usize, event: &[usize], q: Rat) -> Self {
        let mut z = vec![Rat::zero(); n_states];
        for w in 0..n_states {
            z[w] = if event.contains(&w) {
                q.clone()
            } else {
                Rat::one() - &q
            };
        }
        let nz: Vec<Rat> = z.iter().map(|p| Rat::one() - p).collect();
        Self {
            id: id.into(),
            realizations: vec!["z".into(), "nz".into()],
            likelihood: vec![z, nz],
        }
    }

    pub fn num_realizations(&self) -> usize {
        self.realizations.len()
    }

    pub fn num_states(&self) -> usize {
        self.likelihood[0].len()
    }

    pub fn realization_name(&self, t: usize) -> &str {
        &self.realizations[t]
    }

    pub fn likelihood(&self, realization: usize, state: usize) -> &Rat {
        &self.likelihood[realization][state]
    }

    /// P(tau) under `prior`.
    pub fn marginal(&self, prior: &Belief, realization: usize) -> Rat {
        (0..self.num_states())
            .map(|w| prior.prob(w) * &self.likelihood[realization][w])
            .sum()
    }

    pub fn is_uninformative(&self) -> bool {
        self.likelihood.iter().all(|row| {
            row.windows(2).all(|w| w[0] == w[1])
        })
    }

    /// True when some realization is possible in one state and impossible in
    /// another (the Assumption-2 trigger).
    pub fn supports_differ(&self) -> bool {
        self.likelihood.iter().any(|row| {
            let any_zero = row.iter().any(|p| p.is_zero());
            let any_pos = row.iter().any(|p| !p.is_zero());
            any_zero && any_pos
        })
    }
}

/// Distribution over posteriors generated by a signal at a prior.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomPosterior {
    /// (posterior, probability), identical posteriors merged, probabilities
    /// positive and summing to 1
    pub atoms: Vec<(Belief, Rat)>,
}

impl RandomPosterior {
    /// Bayes plausibility: the mean posterior, which must equal the prior.
    pub fn mean(&self) -> Vec<Rat> {
        let n = self.atoms[0].0.len();
        let mut mean = vec![Rat::zero(); n];
        for (belief, p) in &self.atoms {
            for (m, b) in mean.iter_mut().zip(belief.probs()) {
                *m += p * b;
            }
        }
        mean
    }
}

/// Posterior after observing `realization`, gamma(w) proportional to
/// prior(w) * R(tau|w).
pub fn bayes_posterior(
    prior: &Belief,
    sig: &Signal,
    realization: usize,
) -> Result<Belief, SignalError> {
    let weights: Vec<Rat> = (0..sig.num_states())
        .map(|w| prior.prob(w) * sig.likelihood(realization, w))
        .collect();
    if weights.iter().all(|w| w.is_zero()) {
        return Err(SignalError::ZeroProbabilityRealization(realization));
    }
    Ok(Belief::normalized(weights).expect("positive total"))
}

/// One atom per positive-probability realization; identical posteriors merged.
pub fn random_posterior(prior: &Belief, sig: &Signal) -> RandomPosterior {
    let mut atoms: Vec<(Belief, Rat)> = Vec::new();
    for t in 0..sig.num_realizations() {
        let p = sig.marginal(prior, t);
        if p.is_zero() {
            continue;
        }
        let gamma = bayes_posterior(prior, sig, t).expect("positive marginal");
        if let Some(existing) = atoms.iter_mut().find(|(g, _)| *g == gamma) {
            existing.1 += p;
        } else {
            atoms.push((gamma, p));
        }
    }
    RandomPosterior { atoms }
}

/// Decide whether `candidate` is a garbling of `source` by solving for an
/// explicit stochastic kernel g with candidate(t'|w) = sum_t g(t'|t) source(t|w).
/// Returns the kernel as g[t_prime][t] when feasible.
pub fn is_garbling(candidate: &Signal, source: &Signal) -> Option<Vec<Vec<Rat>>> {
    assert_eq!(candidate.num_states(), source.num_states());
    let nt = source.num_realizations();
    let ntp = candidate.num_realizations();
    let n_states = source.num_states();
    let nvars = nt * ntp; // g[t'][t] at index t' * nt + t
    let mut a: Vec<Vec<Rat>> = Vec::new();
    let mut b: Vec<Rat> = Vec::new();
    // column-stochastic in t: sum_{t'} g(t'|t) = 1
    for t in 0..nt {
        let mut row = vec![Rat::zero(); nvars];
        for tp in 0..ntp {
            row[tp * nt + t] = Rat::one();
        }
        a.push(row);
        b.push(Rat::one());
    }
    // mixture equations per (t', state)
    for tp in 0..ntp {
        for w in 0..n_states {
            let mut row = vec![Rat::zero(); nvars];
            for t in 0..nt {
                row[tp * nt + t] = source.likelihood(t, w).clone();
            }
            a.push(row);
            b.push(candidate.likelihood(tp, w).clone());
        }
    }
    let x = feasible_point(a, b)?;
    let mut kernel = vec![vec![Rat::zero(); nt]; ntp];
    for tp in 0..ntp {
        for t in 0..nt {
            kernel[tp][t] = x[tp * nt + t].clone();
        }
    }
    Some(kernel)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostKind {
    /// c * (H(prior) - E[H(posterior)]), natural log: mutual information
    /// between the signal and the state, referenced at the purchase belief.
    EntropyReduction,
    /// c * (max over state pairs of total-variation distance)^2.
    PrecisionQuadratic,
    /// Explicit per-signal costs; signals missing from the table cost +inf.
    ExplicitTable { costs: BTreeMap<String, f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostStructure {
    /// marginal cost, strictly positive
    pub c: f64,
    #[serde(flatten)]
    pub kind: CostKind,
    /// When set, a signal whose realization supports differ across states
    /// costs +inf.
    #[serde(default)]
    pub assumption_2: bool,
}

impl CostStructure {
    pub fn entropy(c: f64) -> Self {
        Self {
            c,
            kind: CostKind::EntropyReduction,
            assumption_2: false,
        }
    }

    pub fn with_assumption_2(mut self) -> Self {
        self.assumption_2 = true;
        self
    }

    pub fn with_marginal_cost(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.c = c;
        out
    }
}

fn entropy(b: &Belief) -> f64 {
    b.probs()
        .iter()
        .filter(|p| !p.is_zero())
        .map(|p| {
            let p = rat_to_f64(p);
            -p * p.ln()
        })
        .sum()
}

/// K(R) alone, without the marginal cost.
pub fn base_cost(kappa: &CostStructure, sig: &Signal, prior: &Belief) -> f64 {
    if sig.is_uninformative() {
        return 0.0;
    }
    if kappa.assumption_2 && sig.supports_differ() {
        return f64::INFINITY;
    }
    match &kappa.kind {
        CostKind::EntropyReduction => {
            let rp = random_posterior(prior, sig);
            let posterior_entropy: f64 = rp
                .atoms
                .iter()
                .map(|(g, p)| rat_to_f64(p) * entropy(g))
                .sum();
            (entropy(prior) - posterior_entropy).max(0.0)
        }
        CostKind::PrecisionQuadratic => {
            let n = sig.num_states();
            let mut max_tv = Rat::zero();
            for w1 in 0..n {
                for w2 in (w1 + 1)..n {
                    let tv: Rat = (0..sig.num_realizations())
                        .map(|t| (sig.likelihood(t, w1) - sig.likelihood(t, w2)).abs())
                        .sum::<Rat>()
                        / rat(2, 1);
                    if tv > max_tv {
                        max_tv = tv;
                    }
                }
            }
            let d = rat_to_f64(&max_tv);
            d * d
        }
        CostKind::ExplicitTable { costs } => costs.get(&sig.id).copied().unwrap_or(f64::INFINITY),
    }
}

/// c * K(R), or +inf.
pub fn signal_cost(kappa: &CostStructure, sig: &Signal, prior: &Belief) -> f64 {
    let k = base_cost(kappa, sig, prior);
    if k == 0.0 {
        0.0
    } else {
        kappa.c * k
    }
}

#[derive(Debug, Clone, Default)]
pub struct CostAxiomReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl CostAxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the cost axioms on a finite menu: K(null) = 0, garbling
/// monotonicity on all comparable menu pairs, and K/D^2 bounded near the
/// uninformative signal.
pub fn validate_cost(kappa: &CostStructure, menu: &[Signal]) -> CostAxiomReport {
    let mut report = CostAxiomReport::default();
    if menu.is_empty() {
        report.warnings.push("empty menu: axioms pass vacuously".into());
        return report;
    }
    let n_states = menu[0].num_states();
    let prior = Belief::uniform(n_states);

    let null = Signal::uninformative(n_states);
    let null_cost = base_cost(kappa, &null, &prior);
    if null_cost != 0.0 {
        report
            .violations
            .push(format!("K(uninformative) = {null_cost}, expected 0"));
    }

    // (iii) garbling monotonicity on comparable pairs
    for source in menu {
        for candidate in menu {
            if std::ptr::eq(source, candidate) {
                continue;
            }
            if is_garbling(candidate, source).is_some() {
                let ks = base_cost(kappa, source, &prior);
                let kc = base_cost(kappa, candidate, &prior);
                if kc > ks + 1e-9 {
                    report.violations.push(format!(
                        "garbling {} of {} costs more ({kc} > {ks})",
                        candidate.id, source.id
                    ));
                }
            }
        }
    }

    // (ii) smoothness: K/D^2 stays bounded along binary signals shrinking to
    // the uninformative one (D = max-over-states TV distance = q - 1/2 here)
    let event = vec![0usize];
    let mut ratios = Vec::new();
    for k in 2..=10 {
        let d = 0.5f64.powi(k);
        let q = rat(1, 2) + Rat::new(1.into(), (1i64 << (k + 1)).into());
        let sig = Signal::binary(format!("smooth-{k}"), n_states, &event, q);
        let cost = base_cost(kappa, &sig, &prior);
        if cost.is_finite() {
            ratios.push(cost / (d * d));
        }
    }
    if let (Some(first), Some(last)) = (ratios.first(), ratios.last()) {
        if *last > 100.0 * (first + 1.0) {
            report.violations.push(format!(
                "K/D^2 grows near the uninformative signal ({first} -> {last})"
            ));
        }
    }

    report
}

/// A one-parameter family of binary signals targeting an event, indexed by
/// precision q: realization "z" has likelihood q inside the event and 1-q
/// outside.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFamily {
    pub event: Vec<usize>,
    pub grid: Vec<Rat>,
}

impl BinaryFamily {
    pub fn with_default_grid(event: Vec<usize>) -> Self {
        Self {
            event,
            grid: default_precision_grid(),
        }
    }

    pub fn signal(&self, n_states: usize, q: &Rat) -> Signal {
        let id = format!("bin-q{}", crate::rational::format_rat(q)).replace('/', "_");
        Signal::binary(id, n_states, &self.event, q.clone())
    }
}

/// The signals a trader can buy: explicit likelihood tables plus an optional
/// parametric family evaluated on its grid (and refined locally by callers).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Menu {
    pub signals: Vec<Signal>,
    pub family: Option<BinaryFamily>,
}

impl Menu {
    pub fn explicit(signals: Vec<Signal>) -> Self {
        Self {
            signals,
            family: None,
        }
    }

    pub fn parametric(event: Vec<usize>) -> Self {
        Self {
            signals: Vec::new(),
            family: Some(BinaryFamily::with_default_grid(event)),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty() && self.family.is_none()
    }

    /// Explicit signals followed by the family grid, in menu order.
    pub fn grid_signals(&self, n_states: usize) -> Vec<Signal> {
        let mut out = self.signals.clone();
        if let Some(f) = &self.family {
            out.extend(f.grid.iter().map(|q| f.signal(n_states, q)));
        }
        out
    }
}

/// The default parametric menu: binary signals with precision
/// q in {1/2, 11/20, ..., 1} targeting `event`.
pub fn default_parametric_menu(n_states: usize, event: &[usize]) -> Vec<Signal> {
    default_precision_grid()
        .into_iter()
        .map(|q| {
            let id = format!("bin-q{}", crate::rational::format_rat(&q)).replace('/', "_");
            Signal::binary(id, n_states, event, q)
        })
        .collect()
}

pub fn default_precision_grid() -> Vec<Rat> {
    (10..=20).map(|k| rat(k, 20)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_int;

    fn example_signal() -> Signal {
        // R(z|w1) = 1, R(z|w_{2,3,4}) = 1/2
        Signal::new(
            "z-signal",
            vec!["z".into(), "nz".into()],
            vec![
                vec![rat_int(1), rat(1, 2), rat(1, 2), rat(1, 2)],
                vec![rat_int(0), rat(1, 2), rat(1, 2), rat(1, 2)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn bayes_posterior_example_cell() {
        let prior = Belief::from_probs(vec![rat(1, 4), rat_int(0), rat(3, 4), rat_int(0)]).unwrap();
        let post = bayes_posterior(&prior, &example_signal(), 0).unwrap();
        assert_eq!(
            post.probs(),
            &[rat(2, 5), rat_int(0), rat(3, 5), rat_int(0)]
        );
    }

    #[test]
    fn bayes_posterior_other_cell_uninformative() {
        let prior = Belief::from_probs(vec![rat_int(0), rat(3, 4), rat_int(0), rat(1, 4)]).unwrap();
        let post = bayes_posterior(&prior, &example_signal(), 0).unwrap();
        assert_eq!(post, prior);
    }

    #[test]
    fn uninformative_posterior_is_prior() {
        let prior = Belief::from_probs(vec![rat(1, 8), rat(3, 8), rat(3, 8), rat(1, 8)]).unwrap();
        let sig = Signal::uninformative(4);
        assert_eq!(bayes_posterior(&prior, &sig, 0).unwrap(), prior);
        let rp = random_posterior(&prior, &sig);
        assert_eq!(rp.atoms.len(), 1);
        assert_eq!(rp.atoms[0], (prior, Rat::one()));
    }

    #[test]
    fn random_posterior_example_atoms() {
        let prior = Belief::from_probs(vec![rat(1, 4), rat_int(0), rat(3, 4), rat_int(0)]).unwrap();
        let rp = random_posterior(&prior, &example_signal());
        assert_eq!(rp.atoms.len(), 2);
        let z = &rp.atoms[0];
        assert_eq!(z.0.probs(), &[rat(2, 5), rat_int(0), rat(3, 5), rat_int(0)]);
        assert_eq!(z.1, rat(5, 8));
        let nz = &rp.atoms[1];
        assert_eq!(nz.0.probs(), &[rat_int(0), rat_int(0), rat_int(1), rat_int(0)]);
        assert_eq!(nz.1, rat(3, 8));
        // Bayes plausibility
        assert_eq!(rp.mean(), prior.probs().to_vec());
    }

    #[test]
    fn fully_revealing_two_state() {
        let prior = Belief::from_probs(vec![rat(1, 3), rat(2, 3)]).unwrap();
        let sig = Signal::binary("full", 2, &[0], rat_int(1));
        let rp = random_posterior(&prior, &sig);
        assert_eq!(rp.atoms.len(), 2);
        assert_eq!(rp.atoms[0].0, Belief::degenerate(2, 0));
        assert_eq!(rp.atoms[0].1, rat(1, 3));
        assert_eq!(rp.atoms[1].0, Belief::degenerate(2, 1));
        assert_eq!(rp.atoms[1].1, rat(2, 3));
    }

    #[test]
    fn garbling_identity_and_uninformative() {
        let sig = example_signal();
        assert!(is_garbling(&sig, &sig).is_some());
        let null = Signal::uninformative(4);
        assert!(is_garbling(&null, &sig).is_some());
        // an informative signal is not a garbling of the uninformative one
        assert!(is_garbling(&sig, &null).is_none());
    }

    #[test]
    fn garbling_kernel_mixing_parameter() {
        // source accuracy 0.9, candidate accuracy 0.6 on 2 states:
        // 0.6 = 0.9 g + 0.1 (1 - g)  =>  g = 5/8
        let source = Signal::binary("s9", 2, &[0], rat(9, 10));
        let cand = Signal::binary("s6", 2, &[0], rat(3, 5));
        let kernel = is_garbling(&cand, &source).unwrap();
        assert_eq!(kernel[0][0], rat(5, 8));
        assert_eq!(kernel[1][0], rat(3, 8));
        assert_eq!(kernel[0][1], rat(3, 8));
    }

    #[test]
    fn uninformative_costs_zero_everywhere() {
        let null = Signal::uninformative(4);
        let prior = Belief::uniform(4);
        for kind in [
            CostKind::EntropyReduction,
            CostKind::PrecisionQuadratic,
            CostKind::ExplicitTable {
                costs: BTreeMap::new(),
            },
        ] {
            let kappa = CostStructure {
                c: 2.0,
                kind,
                assumption_2: true,
            };
            assert_eq!(signal_cost(&kappa, &null, &prior), 0.0);
        }
    }

    #[test]
    fn assumption_2_infinite_cost() {
        let sig = Signal::binary("rev", 2, &[0], rat_int(1));
        let kappa = CostStructure::entropy(1.0).with_assumption_2();
        assert_eq!(signal_cost(&kappa, &sig, &Belief::uniform(2)), f64::INFINITY);
        let open = CostStructure::entropy(1.0);
        assert!(signal_cost(&open, &sig, &Belief::uniform(2)).is_finite());
    }

    #[test]
    fn fully_revealing_entropy_cost_is_ln2() {
        let sig = Signal::binary("rev", 2, &[0], rat_int(1));
        let kappa = CostStructure::entropy(1.0);
        let cost = signal_cost(&kappa, &sig, &Belief::uniform(2));
        assert!((cost - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cost_homogeneous_in_c() {
        let sig = Signal::binary("b", 4, &[0], rat(7, 10));
        let prior = Belief::uniform(4);
        let k1 = CostStructure::entropy(1.5);
        let k2 = CostStructure::entropy(3.0);
        let c1 = signal_cost(&k1, &sig, &prior);
        assert!(c1 > 0.0);
        assert!((signal_cost(&k2, &sig, &prior) - 2.0 * c1).abs() < 1e-12);
    }

    #[test]
    fn entropy_cost_passes_axioms_on_default_menu() {
        let menu = default_parametric_menu(4, &[0]);
        let report = validate_cost(&CostStructure::entropy(1.0), &menu);
        assert!(report.passed(), "violations: {:?}", report.violations);
    }

    #[test]
    fn explicit_table_monotonicity_violation_detected() {
        let source = Signal::binary("strong", 2, &[0], rat(9, 10));
        let garbled = Signal::binary("weak", 2, &[0], rat(3, 5));
        let mut costs = BTreeMap::new();
        costs.insert("strong".to_string(), 1.0);
        costs.insert("weak".to_string(), 5.0); // garbling priced higher
        let kappa = CostStructure {
            c: 1.0,
            kind: CostKind::ExplicitTable { costs },
            assumption_2: false,
        };
        let report = validate_cost(&kappa, &[source, garbled]);
        assert!(!report.passed());
    }

    #[test]
    fn empty_menu_vacuous_pass() {
        let report = validate_cost(&CostStructure::entropy(1.0), &[]);
        assert!(report.passed());
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn garbling_weakly_raises_posterior_entropy() {
        let prior = Belief::from_probs(vec![rat(1, 3), rat(2, 3)]).unwrap();
        let source = Signal::binary("s", 2, &[0], rat(9, 10));
        let garbled = Signal::binary("g", 2, &[0], rat(3, 5));
        assert!(is_garbling(&garbled, &source).is_some());
        let eh = |sig: &Signal| -> f64 {
            random_posterior(&prior, sig)
                .atoms
                .iter()
                .map(|(g, p)| rat_to_f64(p) * entropy(g))
                .sum()
        };
        assert!(eh(&garbled) >= eh(&source) - 1e-12);
    }
}
