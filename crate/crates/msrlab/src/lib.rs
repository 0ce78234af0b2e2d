//! A laboratory for scoring-rule prediction markets with costly information
//! acquisition: security classification, separability certificates via exact
//! linear feasibility, market and poll simulation, and cost sweeps.

pub mod acquisition;
pub mod classifier;
pub mod lp;
pub mod market;
pub mod model;
pub mod poll;
pub mod rational;
pub mod scenario;
pub mod scoring;
pub mod separability;
pub mod signals;

pub use acquisition::{
    best_signal, instant_opportunity, kappa_separability_scan, net_gain,
    no_information_acquisition, scan_threshold, AcquisitionReport, KappaVerdict, ScanGrid,
};
pub use classifier::{adversarial_structure, classify, AdversarialScenario, SecurityClass};
pub use market::{
    detect_convergence, run_market, run_market_exact, MarketConfig, MarketError, MarketTrace,
    RoundRecord, Verdict,
};
pub use model::{
    condition, conditional_expectation, validate_structure, Belief, InformationStructure,
    ModelError, Security, StateSpace, StructureCheck,
};
pub use poll::{
    accuracy_market, accuracy_poll, cost_sweep, full_support_priors, jump_threshold,
    market_value, run_poll, run_poll_exact, AccuracyRecord, MarketValue, PollResult,
    SweepError, SweepResult,
};
pub use rational::{format_rat, parse_rat, rat, rat_int, rat_to_f64, Rat};
pub use scenario::{Scenario, ScenarioError, ScenarioFile};
pub use scoring::{expected_score, msr_round_payoff, myopic_best, score, ScoringRule};
pub use separability::{
    check_lambda_certificate, check_witness, classify_separability, find_lambda_certificate,
    find_nonseparable_witness, LambdaCertificate, NonSepWitness, SeparabilityVerdict,
};
pub use signals::{
    bayes_posterior, is_garbling, random_posterior, signal_cost, validate_cost, BinaryFamily,
    CostKind, CostStructure, Menu, RandomPosterior, Signal,
};
