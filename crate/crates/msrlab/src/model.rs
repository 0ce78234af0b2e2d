//! Finite state spaces, securities, partition information structures and
//! belief primitives. Everything here is immutable after construction and
//! exact: beliefs and payoffs are rationals.

use crate::rational::{format_rat, Rat};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("state space needs at least 2 states, got {0}")]
    TooFewStates(usize),
    #[error("duplicate state identifier {0:?}")]
    DuplicateState(String),
    #[error("unknown state identifier {0:?}")]
    UnknownState(String),
    #[error("security must assign a payoff to every state")]
    PayoffArity,
    #[error("trader {trader}: cell {cell:?} is not a subset of the state space")]
    BadCell { trader: usize, cell: Vec<String> },
    #[error("trader {trader}: states {missing:?} not covered by the partition")]
    NotCovering { trader: usize, missing: Vec<String> },
    #[error("trader {trader}: state {state:?} appears in more than one cell")]
    Overlap { trader: usize, state: String },
    #[error("join is not singletons: no trader separates {0:?} and {1:?}")]
    JoinNotSingleton(String, String),
    #[error("belief does not sum to 1 (sums to {0})")]
    NotNormalized(String),
    #[error("belief entry for {0:?} is negative")]
    NegativeMass(String),
    #[error("conditioning on a zero-probability event")]
    ZeroProbabilityEvent,
}

/// Ordered finite state space. State identifiers are opaque strings mapped to
/// dense indices; the order is fixed for the lifetime of a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    states: Vec<String>,
}

impl StateSpace {
    pub fn new(states: Vec<String>) -> Result<Self, ModelError> {
        if states.len() < 2 {
            return Err(ModelError::TooFewStates(states.len()));
        }
        let mut seen = BTreeSet::new();
        for s in &states {
            if !seen.insert(s.clone()) {
                return Err(ModelError::DuplicateState(s.clone()));
            }
        }
        Ok(Self { states })
    }

    /// Convenience constructor with identifiers "w1", "w2", ...
    pub fn numbered(n: usize) -> Self {
        Self::new((1..=n).map(|i| format!("w{i}")).collect()).expect("n >= 2")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.states[idx]
    }

    pub fn names(&self) -> &[String] {
        &self.states
    }

    pub fn index_of(&self, name: &str) -> Result<usize, ModelError> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| ModelError::UnknownState(name.to_string()))
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        0..self.states.len()
    }
}

/// A security X: Omega -> Q, one rational payoff per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Security {
    payoffs: Vec<Rat>,
}

impl Security {
    pub fn new(payoffs: Vec<Rat>) -> Self {
        Self { payoffs }
    }

    pub fn for_space(ss: &StateSpace, payoffs: Vec<Rat>) -> Result<Self, ModelError> {
        if payoffs.len() != ss.len() {
            return Err(ModelError::PayoffArity);
        }
        Ok(Self { payoffs })
    }

    pub fn payoff(&self, state: usize) -> &Rat {
        &self.payoffs[state]
    }

    pub fn payoffs(&self) -> &[Rat] {
        &self.payoffs
    }

    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoffs.is_empty()
    }

    pub fn min_payoff(&self) -> &Rat {
        self.payoffs.iter().min().expect("non-empty security")
    }

    pub fn max_payoff(&self) -> &Rat {
        self.payoffs.iter().max().expect("non-empty security")
    }

    /// Distinct payoff values in increasing order.
    pub fn distinct_values(&self) -> Vec<Rat> {
        let mut vals: Vec<Rat> = self.payoffs.to_vec();
        vals.sort();
        vals.dedup();
        vals
    }

    pub fn is_constant(&self) -> bool {
        self.distinct_values().len() == 1
    }
}

/// One partition of the state space per trader. Cells hold dense state
/// indices, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformationStructure {
    partitions: Vec<Vec<Vec<usize>>>,
    /// cell_of[trader][state] = index into partitions[trader]
    cell_of: Vec<Vec<usize>>,
}

impl InformationStructure {
    pub fn new(ss: &StateSpace, partitions: Vec<Vec<Vec<usize>>>) -> Result<Self, ModelError> {
        let n = ss.len();
        let mut cell_of = Vec::with_capacity(partitions.len());
        for (trader, cells) in partitions.iter().enumerate() {
            let mut owner = vec![usize::MAX; n];
            for (ci, cell) in cells.iter().enumerate() {
                for &s in cell {
                    if s >= n {
                        return Err(ModelError::BadCell {
                            trader,
                            cell: cell.iter().map(|&x| x.to_string()).collect(),
                        });
                    }
                    if owner[s] != usize::MAX {
                        return Err(ModelError::Overlap {
                            trader,
                            state: ss.name(s).to_string(),
                        });
                    }
                    owner[s] = ci;
                }
            }
            let missing: Vec<String> = (0..n)
                .filter(|&s| owner[s] == usize::MAX)
                .map(|s| ss.name(s).to_string())
                .collect();
            if !missing.is_empty() {
                return Err(ModelError::NotCovering { trader, missing });
            }
            cell_of.push(owner);
        }
        let mut partitions = partitions;
        for cells in &mut partitions {
            for cell in cells.iter_mut() {
                cell.sort_unstable();
            }
        }
        Ok(Self { partitions, cell_of })
    }

    /// Build from state names, e.g. `[["w1","w3"],["w2","w4"]]` per trader.
    pub fn from_names(
        ss: &StateSpace,
        partitions: &[Vec<Vec<String>>],
    ) -> Result<Self, ModelError> {
        let mut resolved = Vec::with_capacity(partitions.len());
        for cells in partitions {
            let mut t = Vec::with_capacity(cells.len());
            for cell in cells {
                let mut c = Vec::with_capacity(cell.len());
                for name in cell {
                    c.push(ss.index_of(name)?);
                }
                t.push(c);
            }
            resolved.push(t);
        }
        Self::new(ss, resolved)
    }

    pub fn num_traders(&self) -> usize {
        self.partitions.len()
    }

    pub fn cells(&self, trader: usize) -> &[Vec<usize>] {
        &self.partitions[trader]
    }

    /// The cell of `trader`'s partition containing `state`.
    pub fn cell(&self, trader: usize, state: usize) -> &[usize] {
        &self.partitions[trader][self.cell_of[trader][state]]
    }

    pub fn cell_index(&self, trader: usize, state: usize) -> usize {
        self.cell_of[trader][state]
    }
}

/// Outcome of the join/coverage check on an information structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructureCheck {
    Ok,
    Violation(ModelError),
}

impl StructureCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, StructureCheck::Ok)
    }
}

/// Checks that every partition covers the state space disjointly (guaranteed
/// by construction of `InformationStructure`) and that the join of all
/// partitions consists of singletons: every pair of distinct states is
/// separated by some trader.
pub fn validate_structure(ss: &StateSpace, is: &InformationStructure) -> StructureCheck {
    for a in 0..ss.len() {
        for b in (a + 1)..ss.len() {
            let separated = (0..is.num_traders())
                .any(|t| is.cell_index(t, a) != is.cell_index(t, b));
            if !separated {
                return StructureCheck::Violation(ModelError::JoinNotSingleton(
                    ss.name(a).to_string(),
                    ss.name(b).to_string(),
                ));
            }
        }
    }
    StructureCheck::Ok
}

/// Probability vector over states, exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Belief {
    probs: Vec<Rat>,
}

impl Belief {
    pub fn new(ss: &StateSpace, probs: Vec<Rat>) -> Result<Self, ModelError> {
        if probs.len() != ss.len() {
            return Err(ModelError::PayoffArity);
        }
        Self::from_probs(probs)
    }

    pub fn from_probs(probs: Vec<Rat>) -> Result<Self, ModelError> {
        for (i, p) in probs.iter().enumerate() {
            if p < &Rat::zero() {
                return Err(ModelError::NegativeMass(format!("state #{i}")));
            }
        }
        let total: Rat = probs.iter().sum();
        if !(total == Rat::from_integer(1.into())) {
            return Err(ModelError::NotNormalized(format_rat(&total)));
        }
        Ok(Self { probs })
    }

    /// Normalize a nonnegative, not-all-zero weight vector.
    pub fn normalized(weights: Vec<Rat>) -> Result<Self, ModelError> {
        let total: Rat = weights.iter().sum();
        if total.is_zero() {
            return Err(ModelError::ZeroProbabilityEvent);
        }
        Self::from_probs(weights.into_iter().map(|w| w / &total).collect())
    }

    pub fn uniform(n: usize) -> Self {
        let p = Rat::new(1.into(), (n as i64).into());
        Self {
            probs: vec![p; n],
        }
    }

    pub fn degenerate(n: usize, state: usize) -> Self {
        let mut probs = vec![Rat::zero(); n];
        probs[state] = Rat::from_integer(1.into());
        Self { probs }
    }

    pub fn prob(&self, state: usize) -> &Rat {
        &self.probs[state]
    }

    pub fn probs(&self) -> &[Rat] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len())
            .filter(|&s| !self.probs[s].is_zero())
            .collect()
    }

    pub fn is_degenerate(&self) -> bool {
        self.support().len() == 1
    }

    pub fn event_prob(&self, event: &[usize]) -> Rat {
        event.iter().map(|&s| self.probs[s].clone()).sum()
    }

    /// Expectation of the security under this belief.
    pub fn expectation(&self, x: &Security) -> Rat {
        self.probs
            .iter()
            .zip(x.payoffs())
            .map(|(p, v)| p * v)
            .sum()
    }
}

/// Bayes restriction of `b` to the event `e` (set of state indices).
pub fn condition(b: &Belief, e: &[usize]) -> Result<Belief, ModelError> {
    let mass = b.event_prob(e);
    if mass.is_zero() {
        return Err(ModelError::ZeroProbabilityEvent);
    }
    let in_e: BTreeSet<usize> = e.iter().copied().collect();
    let probs = (0..b.len())
        .map(|s| {
            if in_e.contains(&s) {
                b.prob(s) / &mass
            } else {
                Rat::zero()
            }
        })
        .collect();
    Ok(Belief { probs })
}

/// E_b[X | e], exact.
pub fn conditional_expectation(b: &Belief, x: &Security, e: &[usize]) -> Result<Rat, ModelError> {
    let mass = b.event_prob(e);
    if mass.is_zero() {
        return Err(ModelError::ZeroProbabilityEvent);
    }
    let num: Rat = e.iter().map(|&s| b.prob(s) * x.payoff(s)).sum();
    Ok(num / mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn example1() -> (StateSpace, Security, InformationStructure, Belief) {
        let ss = StateSpace::numbered(4);
        let x = Security::new(vec![rat_int(0), rat_int(1), rat_int(2), rat_int(3)]);
        let is = InformationStructure::new(
            &ss,
            vec![
                vec![vec![0, 2], vec![1, 3]],
                vec![vec![0, 3], vec![1, 2]],
            ],
        )
        .unwrap();
        let mu = Belief::from_probs(vec![rat(1, 8), rat(3, 8), rat(3, 8), rat(1, 8)]).unwrap();
        (ss, x, is, mu)
    }

    #[test]
    fn example1_structure_is_valid() {
        let (ss, _, is, _) = example1();
        assert!(validate_structure(&ss, &is).is_ok());
    }

    #[test]
    fn single_trader_single_cell_violates_join() {
        let ss = StateSpace::numbered(4);
        let is = InformationStructure::new(&ss, vec![vec![vec![0, 1, 2, 3]]]).unwrap();
        match validate_structure(&ss, &is) {
            StructureCheck::Violation(ModelError::JoinNotSingleton(a, b)) => {
                assert_eq!((a.as_str(), b.as_str()), ("w1", "w2"));
            }
            other => panic!("expected join violation, got {other:?}"),
        }
    }

    #[test]
    fn identical_partitions_violate_join_at_first_pair() {
        let ss = StateSpace::numbered(4);
        let part = vec![vec![0, 1], vec![2, 3]];
        let is = InformationStructure::new(&ss, vec![part.clone(), part]).unwrap();
        match validate_structure(&ss, &is) {
            StructureCheck::Violation(ModelError::JoinNotSingleton(a, b)) => {
                assert_eq!((a.as_str(), b.as_str()), ("w1", "w2"));
            }
            other => panic!("expected join violation, got {other:?}"),
        }
    }

    #[test]
    fn condition_example1_cell() {
        let (_, _, _, mu) = example1();
        let cond = condition(&mu, &[0, 2]).unwrap();
        assert_eq!(
            cond.probs(),
            &[rat(1, 4), rat_int(0), rat(3, 4), rat_int(0)]
        );
    }

    #[test]
    fn condition_on_full_space_is_identity() {
        let (_, _, _, mu) = example1();
        assert_eq!(condition(&mu, &[0, 1, 2, 3]).unwrap(), mu);
    }

    #[test]
    fn condition_uniform_on_two_states() {
        let mu = Belief::uniform(4);
        let cond = condition(&mu, &[1, 3]).unwrap();
        assert_eq!(cond.prob(1), &rat(1, 2));
        assert_eq!(cond.prob(3), &rat(1, 2));
    }

    #[test]
    fn condition_is_idempotent() {
        let (_, _, _, mu) = example1();
        let once = condition(&mu, &[0, 2]).unwrap();
        let twice = condition(&once, &[0, 2]).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn condition_zero_probability_event_errors() {
        let b = Belief::degenerate(4, 0);
        assert_eq!(condition(&b, &[1]), Err(ModelError::ZeroProbabilityEvent));
    }

    #[test]
    fn conditional_expectation_example1() {
        let (_, x, _, mu) = example1();
        assert_eq!(conditional_expectation(&mu, &x, &[0, 2]).unwrap(), rat(3, 2));
    }

    #[test]
    fn conditional_expectation_constant_security() {
        let (_, _, _, mu) = example1();
        let c = Security::new(vec![rat_int(7); 4]);
        for e in [vec![0], vec![1, 2], vec![0, 1, 2, 3]] {
            assert_eq!(conditional_expectation(&mu, &c, &e).unwrap(), rat_int(7));
        }
    }

    #[test]
    fn conditional_expectation_uniform_alternating() {
        let mu = Belief::uniform(4);
        let x = Security::new(vec![rat_int(0), rat_int(1), rat_int(0), rat_int(1)]);
        assert_eq!(
            conditional_expectation(&mu, &x, &[0, 1, 2, 3]).unwrap(),
            rat(1, 2)
        );
    }

    #[test]
    fn law_of_total_expectation() {
        let (_, x, is, mu) = example1();
        for t in 0..is.num_traders() {
            let total: Rat = is
                .cells(t)
                .iter()
                .map(|cell| {
                    mu.event_prob(cell) * conditional_expectation(&mu, &x, cell).unwrap()
                })
                .sum();
            assert_eq!(total, mu.expectation(&x));
        }
    }

    #[test]
    fn loader_rejects_non_normalized_prior() {
        let err = Belief::from_probs(vec![rat(1, 2), rat(1, 4)]).unwrap_err();
        assert!(matches!(err, ModelError::NotNormalized(_)));
    }
}
