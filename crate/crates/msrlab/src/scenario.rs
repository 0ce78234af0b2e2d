//! Scenario files: a JSON description of a complete market setup that the
//! command-line tool (and tests) can load, validate, and run.
//!
//! All rationals are written as `"p/q"` strings (or bare integers like `"3"`)
//! so nothing is lost crossing the serialization boundary.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::MarketConfig;
use crate::model::{
    validate_structure, Belief, InformationStructure, ModelError, Security, StateSpace,
};
use crate::rational::{format_rat, parse_rat, Rat};
use crate::scoring::ScoringRule;
use crate::signals::{BinaryFamily, CostStructure, Menu, Signal, SignalError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("could not read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario JSON is malformed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad rational in {field}: {detail}")]
    BadRational { field: String, detail: String },
    #[error("unknown state name {0:?}")]
    UnknownState(String),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("signal {id:?}: {source}")]
    Signal { id: String, source: SignalError },
    #[error("information structure invalid: {0}")]
    Structure(String),
    #[error("{0}")]
    Invalid(String),
}

/// On-disk shape. Kept separate from the validated [`Scenario`] so loading
/// can reject bad files with a useful message instead of a serde backtrace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub states: Vec<String>,
    /// payoff per state, "p/q"
    pub payoffs: Vec<String>,
    /// one partition per trader; cells hold state names
    pub partitions: Vec<Vec<Vec<String>>>,
    /// prior probability per state, "p/q"; must sum to 1
    pub prior: Vec<String>,
    pub scoring_rule: ScoringRule,
    pub cost: CostStructure,
    #[serde(default)]
    pub menu: MenuSpec,
    #[serde(default)]
    pub rational_mode: bool,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub announcement_grid: Option<Vec<String>>,
}

fn default_max_rounds() -> usize {
    200
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MenuSpec {
    #[serde(default)]
    pub signals: Vec<SignalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalSpec {
    pub id: String,
    pub realizations: Vec<String>,
    /// likelihood[realization][state], "p/q"
    pub likelihood: Vec<Vec<String>>,
}

/// Binary-family spec: event states by name, optional precision grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub event: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<String>>,
}

/// A fully validated scenario, ready to hand to the simulators.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub states: StateSpace,
    pub security: Security,
    pub structure: InformationStructure,
    pub prior: Belief,
    pub rule: ScoringRule,
    pub kappa: CostStructure,
    pub menu: Menu,
    pub rational_mode: bool,
    pub max_rounds: usize,
    pub announcement_grid: Option<Vec<Rat>>,
}

fn parse_field(s: &str, field: &str) -> Result<Rat, ScenarioError> {
    parse_rat(s).map_err(|detail| ScenarioError::BadRational {
        field: field.to_string(),
        detail,
    })
}

fn parse_vec(xs: &[String], field: &str) -> Result<Vec<Rat>, ScenarioError> {
    xs.iter()
        .enumerate()
        .map(|(i, s)| parse_field(s, &format!("{field}[{i}]")))
        .collect()
}

impl Scenario {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        Self::build(&file)
    }

    pub fn build(file: &ScenarioFile) -> Result<Self, ScenarioError> {
        let states = StateSpace::new(file.states.clone())?;
        let n = states.len();

        if file.payoffs.len() != n {
            return Err(ScenarioError::Invalid(format!(
                "expected {n} payoffs, found {}",
                file.payoffs.len()
            )));
        }
        let security = Security::for_space(&states, parse_vec(&file.payoffs, "payoffs")?)?;

        let mut partitions = Vec::with_capacity(file.partitions.len());
        for cells in &file.partitions {
            let mut p = Vec::with_capacity(cells.len());
            for cell in cells {
                let mut c = Vec::with_capacity(cell.len());
                for name in cell {
                    c.push(
                        states
                            .index_of(name)
                            .map_err(|_| ScenarioError::UnknownState(name.clone()))?,
                    );
                }
                p.push(c);
            }
            partitions.push(p);
        }
        let structure = InformationStructure::new(&states, partitions)?;
        let check = validate_structure(&states, &structure);
        if !check.is_ok() {
            return Err(ScenarioError::Structure(format!("{check:?}")));
        }

        if file.prior.len() != n {
            return Err(ScenarioError::Invalid(format!(
                "expected {n} prior entries, found {}",
                file.prior.len()
            )));
        }
        let prior = Belief::new(&states, parse_vec(&file.prior, "prior")?)?;

        if file.cost.c < 0.0 || !file.cost.c.is_finite() {
            return Err(ScenarioError::Invalid(format!(
                "marginal cost must be finite and non-negative, got {}",
                file.cost.c
            )));
        }

        let mut signals = Vec::with_capacity(file.menu.signals.len());
        for spec in &file.menu.signals {
            if spec.likelihood.len() != spec.realizations.len() {
                return Err(ScenarioError::Invalid(format!(
                    "signal {:?}: {} realization names but {} likelihood rows",
                    spec.id,
                    spec.realizations.len(),
                    spec.likelihood.len()
                )));
            }
            let mut rows = Vec::with_capacity(spec.likelihood.len());
            for (t, row) in spec.likelihood.iter().enumerate() {
                if row.len() != n {
                    return Err(ScenarioError::Invalid(format!(
                        "signal {:?}: likelihood row {t} has {} entries, expected {n}",
                        spec.id,
                        row.len()
                    )));
                }
                rows.push(parse_vec(row, &format!("menu.signals[{}].likelihood", spec.id))?);
            }
            signals.push(
                Signal::new(spec.id.clone(), spec.realizations.clone(), rows).map_err(
                    |source| ScenarioError::Signal {
                        id: spec.id.clone(),
                        source,
                    },
                )?,
            );
        }
        let family = match &file.menu.family {
            None => None,
            Some(spec) => {
                let mut event = Vec::with_capacity(spec.event.len());
                for name in &spec.event {
                    event.push(
                        states
                            .index_of(name)
                            .map_err(|_| ScenarioError::UnknownState(name.clone()))?,
                    );
                }
                event.sort_unstable();
                event.dedup();
                let fam = match &spec.grid {
                    None => BinaryFamily::with_default_grid(event),
                    Some(grid) => {
                        let grid = parse_vec(grid, "menu.family.grid")?;
                        for q in &grid {
                            if q < &Rat::zero() || q > &Rat::one() {
                                return Err(ScenarioError::Invalid(format!(
                                    "family grid precision {} outside [0, 1]",
                                    format_rat(q)
                                )));
                            }
                        }
                        BinaryFamily { event, grid }
                    }
                };
                Some(fam)
            }
        };
        let menu = Menu { signals, family };

        let announcement_grid = match &file.announcement_grid {
            None => None,
            Some(g) => {
                let mut g = parse_vec(g, "announcement_grid")?;
                g.sort();
                g.dedup();
                if g.is_empty() {
                    return Err(ScenarioError::Invalid(
                        "announcement_grid must not be empty".into(),
                    ));
                }
                Some(g)
            }
        };

        Ok(Scenario {
            states,
            security,
            structure,
            prior,
            rule: file.scoring_rule.clone(),
            kappa: file.cost.clone(),
            menu,
            rational_mode: file.rational_mode,
            max_rounds: file.max_rounds,
            announcement_grid,
        })
    }

    /// Borrowed view suitable for the market and poll simulators.
    pub fn market_config(&self) -> MarketConfig<'_> {
        let mut cfg = MarketConfig::new(
            &self.security,
            &self.structure,
            &self.prior,
            &self.rule,
            &self.kappa,
            &self.menu,
        );
        cfg.max_rounds = self.max_rounds;
        cfg.announcement_grid = self.announcement_grid.as_deref();
        cfg
    }

    /// Write back the on-disk form (used by tooling that generates scenarios).
    pub fn to_file(&self) -> ScenarioFile {
        let fmt = |xs: &[Rat]| xs.iter().map(format_rat).collect::<Vec<_>>();
        let name_of = |w: &usize| self.states.name(*w).to_string();
        ScenarioFile {
            states: self.states.names().to_vec(),
            payoffs: fmt(self.security.payoffs()),
            partitions: (0..self.structure.num_traders())
                .map(|i| {
                    self.structure
                        .cells(i)
                        .iter()
                        .map(|cell| cell.iter().map(|w| name_of(w)).collect())
                        .collect()
                })
                .collect(),
            prior: fmt(self.prior.probs()),
            scoring_rule: self.rule.clone(),
            cost: self.kappa.clone(),
            menu: MenuSpec {
                signals: self
                    .menu
                    .signals
                    .iter()
                    .map(|sig| SignalSpec {
                        id: sig.id.clone(),
                        realizations: (0..sig.num_realizations())
                            .map(|t| sig.realization_name(t).to_string())
                            .collect(),
                        likelihood: (0..sig.num_realizations())
                            .map(|t| {
                                (0..sig.num_states())
                                    .map(|w| format_rat(sig.likelihood(t, w)))
                                    .collect()
                            })
                            .collect(),
                    })
                    .collect(),
                family: self.menu.family.as_ref().map(|fam| FamilySpec {
                    event: fam.event.iter().map(|w| name_of(w)).collect(),
                    grid: Some(fmt(&fam.grid)),
                }),
            },
            rational_mode: self.rational_mode,
            max_rounds: self.max_rounds,
            announcement_grid: self.announcement_grid.as_ref().map(|g| fmt(g)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario file serializes")
    }
}

/// Per-signal cost table helper for explicit-cost scenarios.
pub fn explicit_costs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};
    use crate::signals::CostKind;

    fn example_json() -> String {
        r#"{
            "states": ["w1", "w2", "w3", "w4"],
            "payoffs": ["0", "1", "2", "3"],
            "partitions": [
                [["w1", "w3"], ["w2", "w4"]],
                [["w1", "w4"], ["w2", "w3"]]
            ],
            "prior": ["1/8", "3/8", "3/8", "1/8"],
            "scoring_rule": {"kind": "quadratic"},
            "cost": {"c": 1.0, "kind": "entropy_reduction", "assumption_2": true},
            "menu": {"family": {"event": ["w1", "w2"]}}
        }"#
        .to_string()
    }

    #[test]
    fn loads_and_validates() {
        let sc = Scenario::from_json(&example_json()).unwrap();
        assert_eq!(sc.states.len(), 4);
        assert_eq!(sc.structure.num_traders(), 2);
        assert_eq!(sc.prior.prob(1), &rat(3, 8));
        assert_eq!(sc.security.payoff(3), &rat_int(3));
        assert!(sc.kappa.assumption_2);
        assert_eq!(sc.kappa.kind, CostKind::EntropyReduction);
        let fam = sc.menu.family.as_ref().unwrap();
        assert_eq!(fam.event, vec![0, 1]);
        assert!(!fam.grid.is_empty());
        assert_eq!(sc.max_rounds, 200);
        let cfg = sc.market_config();
        assert_eq!(cfg.max_rounds, 200);
        assert!(cfg.announcement_grid.is_none());
    }

    #[test]
    fn round_trips_through_json() {
        let sc = Scenario::from_json(&example_json()).unwrap();
        let text = sc.to_json();
        let sc2 = Scenario::from_json(&text).unwrap();
        assert_eq!(sc2.to_json(), text);
        assert_eq!(sc2.prior.probs(), sc.prior.probs());
        assert_eq!(sc2.menu.family.unwrap().grid, sc.menu.family.unwrap().grid);
    }

    #[test]
    fn rejects_unnormalized_prior() {
        let bad = example_json().replace("3/8\", \"3/8", "3/8\", \"1/2");
        assert!(matches!(
            Scenario::from_json(&bad),
            Err(ScenarioError::Model(_))
        ));
    }

    #[test]
    fn rejects_unknown_state_in_partition() {
        let bad = example_json().replace("[\"w2\", \"w3\"]", "[\"w2\", \"nope\"]");
        assert!(matches!(
            Scenario::from_json(&bad),
            Err(ScenarioError::UnknownState(_))
        ));
    }

    #[test]
    fn rejects_non_partition() {
        let bad = example_json().replace("[\"w1\", \"w4\"], [\"w2\", \"w3\"]", "[\"w1\", \"w4\"]");
        assert!(Scenario::from_json(&bad).is_err());
    }

    #[test]
    fn rejects_bad_rational() {
        let bad = example_json().replace("\"1/8\"", "\"one eighth\"");
        assert!(matches!(
            Scenario::from_json(&bad),
            Err(ScenarioError::BadRational { .. })
        ));
    }

    #[test]
    fn explicit_signal_table_loads() {
        let text = r#"{
            "states": ["w1", "w2", "w3", "w4"],
            "payoffs": ["0", "1", "2", "3"],
            "partitions": [
                [["w1", "w3"], ["w2", "w4"]],
                [["w1", "w4"], ["w2", "w3"]]
            ],
            "prior": ["1/8", "3/8", "3/8", "1/8"],
            "scoring_rule": {"kind": "quadratic"},
            "cost": {"c": 1.0, "kind": "explicit_table", "costs": {"z": 0.0}},
            "menu": {"signals": [{
                "id": "z",
                "realizations": ["z", "nz"],
                "likelihood": [["1", "0", "0", "0"], ["0", "1", "1", "1"]]
            }]}
        }"#;
        let sc = Scenario::from_json(text).unwrap();
        assert_eq!(sc.menu.signals.len(), 1);
        assert_eq!(sc.menu.signals[0].likelihood(0, 0), &rat_int(1));
        assert!(sc.menu.family.is_none());
    }

    #[test]
    fn malformed_likelihood_row_rejected() {
        let text = example_json().replace(
            "\"menu\": {\"family\": {\"event\": [\"w1\", \"w2\"]}}",
            r#""menu": {"signals": [{
                "id": "z", "realizations": ["z", "nz"],
                "likelihood": [["1", "0", "0"], ["0", "1", "1"]]
            }]}"#,
        );
        assert!(matches!(
            Scenario::from_json(&text),
            Err(ScenarioError::Invalid(_))
        ));
    }
}
