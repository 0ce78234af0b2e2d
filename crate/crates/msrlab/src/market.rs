//! Round-robin market-scoring-rule simulation with myopic traders, optional
//! signal purchases, and exact public-belief inference by inverting the
//! commonly known myopic strategy.
//!
//! The public belief is a joint distribution over (state, each trader's
//! private-history class), kept as exact rational atoms. A trader's history
//! class starts at 0 and refines every time they buy a signal, so observers
//! can condition on the announcement by enumerating the finitely many
//! (cell, class, realization) combinations consistent with it.

use crate::acquisition::best_signal;
use crate::model::{Belief, InformationStructure, ModelError, Security};
use crate::rational::{rat_to_f64, Rat};
use crate::scoring::{msr_round_payoff, myopic_best, myopic_best_on_grid, ScoringRule};
use crate::signals::{bayes_posterior, CostStructure, Menu, Signal};
use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("announcement has probability zero under the public strategy")]
    OffPath,
    #[error("true state {0} has zero probability under the prior")]
    ImpossibleState(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct MarketConfig<'a> {
    pub x: &'a Security,
    pub is: &'a InformationStructure,
    pub prior: &'a Belief,
    pub rule: &'a ScoringRule,
    pub kappa: &'a CostStructure,
    pub menu: &'a Menu,
    /// individual announcement steps, not full cycles
    pub max_rounds: usize,
    /// when set, announcements snap to the nearest grid value (ties low)
    pub announcement_grid: Option<&'a [Rat]>,
    /// convergence tolerance on |final announcement - X(true state)|
    pub eps: f64,
}

impl<'a> MarketConfig<'a> {
    pub fn new(
        x: &'a Security,
        is: &'a InformationStructure,
        prior: &'a Belief,
        rule: &'a ScoringRule,
        kappa: &'a CostStructure,
        menu: &'a Menu,
    ) -> Self {
        Self {
            x,
            is,
            prior,
            rule,
            kappa,
            menu,
            max_rounds: 200,
            announcement_grid: None,
            eps: 1e-9,
        }
    }

    fn announce(&self, b: &Belief) -> Rat {
        match self.announcement_grid {
            Some(grid) => myopic_best_on_grid(b, self.x, grid),
            None => myopic_best(b, self.x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    ConvergedTo(Rat),
    StalledAt(Rat),
    RoundLimit,
}

#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub round: usize,
    pub announcer: usize,
    pub signal: Option<String>,
    pub realization: Option<String>,
    pub announcement: Rat,
    /// public state-marginal after observers process the announcement
    pub public_marginal: Vec<Rat>,
    pub payoff: f64,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct MarketTrace {
    pub true_state: usize,
    /// the market maker's opening quote E_prior[X]
    pub initial: Rat,
    pub rounds: Vec<RoundRecord>,
    pub verdict: Verdict,
}

impl MarketTrace {
    pub fn final_announcement(&self) -> &Rat {
        self.rounds.last().map_or(&self.initial, |r| &r.announcement)
    }
}

/// One weighted point of the public belief: a state together with every
/// trader's private-history class.
#[derive(Debug, Clone)]
struct Atom {
    state: usize,
    classes: Vec<u32>,
    prob: Rat,
}

#[derive(Debug, Clone)]
struct SimState {
    atoms: Vec<Atom>,
    /// the actual trajectory's class per trader
    true_classes: Vec<u32>,
    y_prev: Rat,
    /// (trader, class, signal id, realization) -> refined class
    intern: BTreeMap<(usize, u32, String, usize), u32>,
    next_class: u32,
    rounds: Vec<RoundRecord>,
    quiet_streak: usize,
}

#[derive(Debug, Clone)]
enum PlanEntry {
    Stay {
        y: Rat,
    },
    Buy {
        sig: Signal,
        cost: f64,
        /// announcement per realization; None where the realization has zero
        /// probability at this information set
        ys: Vec<Option<Rat>>,
    },
}

type Plan = BTreeMap<(usize, u32), PlanEntry>;

/// A step that must draw the announcer's realization before it can finish.
#[derive(Debug, Clone)]
struct PendingStep {
    announcer: usize,
    plan: Plan,
}

#[derive(Debug)]
enum Stepped {
    Finished(Verdict),
    Continued,
    /// the true announcer buys; options are (realization, likelihood at the
    /// true state), likelihoods positive and summing to at most 1
    Branch(PendingStep, Vec<(usize, Rat)>),
}

fn intern_class(st: &mut SimState, trader: usize, class: u32, sig: &Signal, tau: usize) -> u32 {
    let key = (trader, class, sig.id.clone(), tau);
    if let Some(&c) = st.intern.get(&key) {
        return c;
    }
    let c = st.next_class;
    st.next_class += 1;
    st.intern.insert(key, c);
    c
}

/// The announcer's myopic plan, one entry per positive-probability
/// (cell, history-class) pair.
fn build_plan(cfg: &MarketConfig, st: &SimState, announcer: usize) -> Plan {
    let n = cfg.x.len();
    let mut weights: BTreeMap<(usize, u32), Vec<Rat>> = BTreeMap::new();
    for a in &st.atoms {
        let key = (cfg.is.cell_index(announcer, a.state), a.classes[announcer]);
        let w = weights.entry(key).or_insert_with(|| vec![Rat::zero(); n]);
        w[a.state] += &a.prob;
    }
    let mut plan = Plan::new();
    for (key, w) in weights {
        let belief = Belief::normalized(w).expect("info set has positive mass");
        let d = best_signal(&belief, cfg.x, cfg.rule, cfg.kappa, cfg.menu);
        let entry = if d.acquired {
            let sig = d.best.expect("acquired implies a signal");
            let ys = (0..sig.num_realizations())
                .map(|t| {
                    bayes_posterior(&belief, &sig, t)
                        .ok()
                        .map(|post| cfg.announce(&post))
                })
                .collect();
            PlanEntry::Buy {
                sig,
                cost: d.cost,
                ys,
            }
        } else {
            PlanEntry::Stay {
                y: cfg.announce(&belief),
            }
        };
        plan.insert(key, entry);
    }
    plan
}

/// Condition the atoms on the observed announcement under `plan`. Returns
/// true when the update actually moved the public belief (some atom was
/// dropped, or the announcer bought and refined their class).
fn infer(
    st: &mut SimState,
    announcer: usize,
    plan: &Plan,
    y_obs: &Rat,
    is: &InformationStructure,
) -> Result<bool, MarketError> {
    let old = std::mem::take(&mut st.atoms);
    let mut changed = false;
    let mut next: Vec<Atom> = Vec::new();
    for a in old {
        let key = (is.cell_index(announcer, a.state), a.classes[announcer]);
        match plan.get(&key).expect("positive-mass info set has a plan") {
            PlanEntry::Stay { y } => {
                if y == y_obs {
                    next.push(a);
                } else {
                    changed = true;
                }
            }
            PlanEntry::Buy { sig, ys, .. } => {
                changed = true;
                for (tau, y) in ys.iter().enumerate() {
                    if y.as_ref() != Some(y_obs) {
                        continue;
                    }
                    let lik = sig.likelihood(tau, a.state);
                    if lik.is_zero() {
                        continue;
                    }
                    let mut b = a.clone();
                    b.prob = &a.prob * lik;
                    b.classes[announcer] =
                        intern_class(st, announcer, a.classes[announcer], sig, tau);
                    next.push(b);
                }
            }
        }
    }
    let total: Rat = next.iter().map(|a| a.prob.clone()).sum();
    if total.is_zero() {
        return Err(MarketError::OffPath);
    }
    for a in &mut next {
        a.prob /= &total;
    }
    // merge atoms that agree on state and every class
    next.sort_by(|a, b| (a.state, &a.classes).cmp(&(b.state, &b.classes)));
    let mut merged: Vec<Atom> = Vec::new();
    for a in next {
        match merged.last_mut() {
            Some(m) if m.state == a.state && m.classes == a.classes => m.prob += &a.prob,
            _ => merged.push(a),
        }
    }
    st.atoms = merged;
    Ok(changed)
}

fn state_marginal(atoms: &[Atom], n: usize) -> Vec<Rat> {
    let mut m = vec![Rat::zero(); n];
    for a in atoms {
        m[a.state] += &a.prob;
    }
    m
}

fn verdict_at(cfg: &MarketConfig, y: &Rat, true_state: usize) -> Verdict {
    let err = rat_to_f64(&(y - cfg.x.payoff(true_state)).abs());
    if err <= cfg.eps {
        Verdict::ConvergedTo(y.clone())
    } else {
        Verdict::StalledAt(y.clone())
    }
}

/// Apply the announcer's realized choice (None = no purchase) and run the
/// public inference; Some(verdict) when the market has settled.
fn finish_step(
    cfg: &MarketConfig,
    st: &mut SimState,
    pending: &PendingStep,
    tau: Option<usize>,
    true_state: usize,
) -> Result<Option<Verdict>, MarketError> {
    let announcer = pending.announcer;
    let key = (
        cfg.is.cell_index(announcer, true_state),
        st.true_classes[announcer],
    );
    let entry = pending.plan.get(&key).expect("true info set has a plan");
    let (y_obs, signal, realization, cost) = match (entry, tau) {
        (PlanEntry::Stay { y }, None) => (y.clone(), None, None, 0.0),
        (PlanEntry::Buy { sig, cost, ys }, Some(tau)) => {
            let y = ys[tau].clone().expect("realized announcement exists");
            st.true_classes[announcer] =
                intern_class(st, announcer, st.true_classes[announcer], sig, tau);
            (
                y,
                Some(sig.id.clone()),
                Some(sig.realization_name(tau).to_string()),
                *cost,
            )
        }
        _ => unreachable!("realization supplied iff the plan buys"),
    };
    let moved = infer(st, announcer, &pending.plan, &y_obs, cfg.is)?;
    // a quiet step repeats the quote without buying or even shifting the
    // public belief (an informative abstention is not quiet)
    let quiet = signal.is_none() && y_obs == st.y_prev && !moved;
    let payoff = msr_round_payoff(
        cfg.rule,
        cfg.x,
        &y_obs,
        &st.y_prev,
        cfg.x.payoff(true_state),
    )
    .expect("myopic announcements stay within the payoff range");
    st.rounds.push(RoundRecord {
        round: st.rounds.len(),
        announcer,
        signal,
        realization,
        announcement: y_obs.clone(),
        public_marginal: state_marginal(&st.atoms, cfg.x.len()),
        payoff,
        cost,
    });
    st.y_prev = y_obs;
    st.quiet_streak = if quiet { st.quiet_streak + 1 } else { 0 };
    if st.quiet_streak >= cfg.is.num_traders() {
        return Ok(Some(verdict_at(cfg, &st.y_prev, true_state)));
    }
    if st.rounds.len() >= cfg.max_rounds {
        return Ok(Some(Verdict::RoundLimit));
    }
    Ok(None)
}

fn step(cfg: &MarketConfig, st: &mut SimState, true_state: usize) -> Result<Stepped, MarketError> {
    let announcer = st.rounds.len() % cfg.is.num_traders();
    let plan = build_plan(cfg, st, announcer);
    let key = (
        cfg.is.cell_index(announcer, true_state),
        st.true_classes[announcer],
    );
    let pending = PendingStep { announcer, plan };
    match pending.plan.get(&key).expect("true info set has a plan") {
        PlanEntry::Stay { .. } => match finish_step(cfg, st, &pending, None, true_state)? {
            Some(v) => Ok(Stepped::Finished(v)),
            None => Ok(Stepped::Continued),
        },
        PlanEntry::Buy { sig, .. } => {
            let options: Vec<(usize, Rat)> = (0..sig.num_realizations())
                .filter_map(|t| {
                    let lik = sig.likelihood(t, true_state).clone();
                    (!lik.is_zero()).then_some((t, lik))
                })
                .collect();
            Ok(Stepped::Branch(pending, options))
        }
    }
}

fn initial_state(cfg: &MarketConfig, true_state: usize) -> Result<SimState, MarketError> {
    if cfg.prior.prob(true_state).is_zero() {
        return Err(MarketError::ImpossibleState(true_state));
    }
    let nt = cfg.is.num_traders();
    let atoms = cfg
        .prior
        .support()
        .into_iter()
        .map(|s| Atom {
            state: s,
            classes: vec![0; nt],
            prob: cfg.prior.prob(s).clone(),
        })
        .collect();
    Ok(SimState {
        atoms,
        true_classes: vec![0; nt],
        y_prev: cfg.prior.expectation(cfg.x),
        intern: BTreeMap::new(),
        next_class: 1,
        rounds: Vec::new(),
        quiet_streak: 0,
    })
}

fn into_trace(cfg: &MarketConfig, st: SimState, true_state: usize, verdict: Verdict) -> MarketTrace {
    MarketTrace {
        true_state,
        initial: cfg.prior.expectation(cfg.x),
        rounds: st.rounds,
        verdict,
    }
}

/// Simulate one trajectory, sampling the announcer's signal realizations
/// with a seeded generator. Deterministic given (scenario, state, seed).
pub fn run_market(
    cfg: &MarketConfig,
    true_state: usize,
    seed: u64,
) -> Result<MarketTrace, MarketError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = initial_state(cfg, true_state)?;
    loop {
        match step(cfg, &mut st, true_state)? {
            Stepped::Finished(v) => return Ok(into_trace(cfg, st, true_state, v)),
            Stepped::Continued => {}
            Stepped::Branch(pending, options) => {
                let weights: Vec<f64> = options.iter().map(|(_, l)| rat_to_f64(l)).collect();
                let total: f64 = weights.iter().sum();
                let mut draw = rng.gen::<f64>() * total;
                let mut pick = options.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if draw < *w {
                        pick = i;
                        break;
                    }
                    draw -= w;
                }
                let tau = options[pick].0;
                if let Some(v) = finish_step(cfg, &mut st, &pending, Some(tau), true_state)? {
                    return Ok(into_trace(cfg, st, true_state, v));
                }
            }
        }
    }
}

/// Enumerate every trajectory from `true_state`, branching on each signal
/// realization the announcer might draw. Probabilities are exact likelihood
/// products and sum to 1.
pub fn run_market_exact(
    cfg: &MarketConfig,
    true_state: usize,
) -> Result<Vec<(Rat, MarketTrace)>, MarketError> {
    let mut out = Vec::new();
    let mut stack = vec![(Rat::from_integer(1.into()), initial_state(cfg, true_state)?)];
    while let Some((prob, mut st)) = stack.pop() {
        loop {
            match step(cfg, &mut st, true_state)? {
                Stepped::Finished(v) => {
                    out.push((prob, into_trace(cfg, st, true_state, v)));
                    break;
                }
                Stepped::Continued => {}
                Stepped::Branch(pending, options) => {
                    for (tau, lik) in options {
                        let mut branch = st.clone();
                        let p = &prob * &lik;
                        match finish_step(cfg, &mut branch, &pending, Some(tau), true_state)? {
                            Some(v) => out.push((p, into_trace(cfg, branch, true_state, v))),
                            None => stack.push((p, branch)),
                        }
                    }
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Read the settled verdict off a finished trace: a trailing full cycle of
/// unchanged, purchase-free announcements means the market has settled at
/// that value; anything else hit the round limit.
pub fn detect_convergence(
    x: &Security,
    n_traders: usize,
    initial: &Rat,
    prior_marginal: &[Rat],
    rounds: &[RoundRecord],
    true_state: usize,
    eps: f64,
) -> Verdict {
    let mut streak = 0;
    for (i, r) in rounds.iter().enumerate() {
        let (before, marginal_before) = if i == 0 {
            (initial, prior_marginal)
        } else {
            let p = &rounds[i - 1];
            (&p.announcement, p.public_marginal.as_slice())
        };
        if r.signal.is_none()
            && &r.announcement == before
            && r.public_marginal == marginal_before
        {
            streak += 1;
        } else {
            streak = 0;
        }
    }
    if streak < n_traders || rounds.is_empty() {
        return Verdict::RoundLimit;
    }
    let y = &rounds[rounds.len() - 1].announcement;
    let err = rat_to_f64(&(y - x.payoff(true_state)).abs());
    if err <= eps {
        Verdict::ConvergedTo(y.clone())
    } else {
        Verdict::StalledAt(y.clone())
    }
}

/// Exact ensemble martingale check: weighting every enumerated trajectory at
/// every true state by prior(state) x path probability, the mean final
/// public marginal must reproduce the prior.
pub fn ensemble_mean_marginal(cfg: &MarketConfig) -> Result<Vec<Rat>, MarketError> {
    let n = cfg.x.len();
    let mut mean = vec![Rat::zero(); n];
    for s in cfg.prior.support() {
        for (p, trace) in run_market_exact(cfg, s)? {
            let marginal = trace
                .rounds
                .last()
                .map(|r| r.public_marginal.clone())
                .unwrap_or_else(|| cfg.prior.probs().to_vec());
            let w = cfg.prior.prob(s) * &p;
            for (m, q) in mean.iter_mut().zip(&marginal) {
                *m += &w * q;
            }
        }
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StateSpace;
    use crate::rational::{rat, rat_int};
    use crate::scoring::score;
    use crate::separability::crossing_partitions;
    use crate::signals::CostKind;
    use std::collections::BTreeMap as Map;

    fn counting_security() -> Security {
        Security::new(vec![rat_int(0), rat_int(1), rat_int(2), rat_int(3)])
    }

    fn crossing_structure() -> InformationStructure {
        InformationStructure::new(&StateSpace::numbered(4), crossing_partitions()).unwrap()
    }

    fn witness_prior() -> Belief {
        Belief::from_probs(vec![rat(1, 8), rat(3, 8), rat(3, 8), rat(1, 8)]).unwrap()
    }

    fn z_signal() -> Signal {
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

    fn free_z_menu() -> (Menu, CostStructure) {
        let mut costs = Map::new();
        costs.insert("z-signal".to_string(), 0.0);
        let kappa = CostStructure {
            c: 1.0,
            kind: CostKind::ExplicitTable { costs },
            assumption_2: false,
        };
        (Menu::explicit(vec![z_signal()]), kappa)
    }

    #[test]
    fn empty_menu_stalls_at_common_value() {
        let x = counting_security();
        let is = crossing_structure();
        let prior = witness_prior();
        let rule = ScoringRule::Quadratic;
        let kappa = CostStructure::entropy(1.0);
        let menu = Menu::default();
        let cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        for s in 0..4 {
            let t = run_market(&cfg, s, 7).unwrap();
            assert_eq!(t.verdict, Verdict::StalledAt(rat(3, 2)), "state {s}");
            let ys: Vec<&Rat> = t.rounds.iter().map(|r| &r.announcement).collect();
            assert_eq!(ys, vec![&rat(3, 2), &rat(3, 2)]);
            assert!(t.rounds.iter().all(|r| r.payoff == 0.0 && r.cost == 0.0));
        }
    }

    #[test]
    fn free_z_signal_reveals_first_state() {
        let x = counting_security();
        let is = crossing_structure();
        let prior = witness_prior();
        let rule = ScoringRule::Quadratic;
        let (menu, kappa) = free_z_menu();
        let cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        let t = run_market(&cfg, 0, 11).unwrap();
        assert_eq!(t.rounds[0].announcement, rat(6, 5));
        assert_eq!(t.rounds[0].signal.as_deref(), Some("z-signal"));
        assert_eq!(t.rounds[1].announcement, rat_int(0));
        assert_eq!(t.verdict, Verdict::ConvergedTo(rat_int(0)));
        // trader 2's inference pools the z announcement across w1 and w3
        assert_eq!(
            t.rounds[0].public_marginal,
            vec![rat(2, 5), rat_int(0), rat(3, 5), rat_int(0)]
        );
    }

    #[test]
    fn free_z_signal_at_last_state_stays_quiet_for_trader_one() {
        let x = counting_security();
        let is = crossing_structure();
        let prior = witness_prior();
        let rule = ScoringRule::Quadratic;
        let (menu, kappa) = free_z_menu();
        let cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        // at w4 trader 1 holds {w2,w4}, where the z-signal is uninformative
        let t = run_market(&cfg, 3, 3).unwrap();
        assert_eq!(t.rounds[0].announcement, rat(3, 2));
        assert!(t.rounds[0].signal.is_none());
        // the non-purchase is itself informative: {w1,w3} would have bought
        assert_eq!(
            t.rounds[0].public_marginal,
            vec![rat_int(0), rat(3, 4), rat_int(0), rat(1, 4)]
        );
    }

    #[test]
    fn exact_enumeration_probabilities_sum_to_one() {
        let x = counting_security();
        let is = crossing_structure();
        let prior = witness_prior();
        let rule = ScoringRule::Quadratic;
        let (menu, kappa) = free_z_menu();
        let cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        for s in 0..4 {
            let branches = run_market_exact(&cfg, s).unwrap();
            let total: Rat = branches.iter().map(|(p, _)| p.clone()).sum();
            assert_eq!(total, rat_int(1), "state {s}");
        }
    }

    #[test]
    fn ensemble_martingale_reproduces_prior() {
        let x = counting_security();
        let is = crossing_structure();
        let prior = witness_prior();
        let rule = ScoringRule::Quadratic;
        let (menu, kappa) = free_z_menu();
        let cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        assert_eq!(ensemble_mean_marginal(&cfg).unwrap(), prior.probs().to_vec());
    }

    #[test]
    fn payoffs_telescope_along_every_branch() {
        let x = counting_security();
        let is = crossing_structure();
        let prior = witness_prior();
        let rule = ScoringRule::Quadratic;
        let (menu, kappa) = free_z_menu();
        let cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        for s in 0..4 {
            for (_, t) in run_market_exact(&cfg, s).unwrap() {
                let total: f64 = t.rounds.iter().map(|r| r.payoff).sum();
                let xf = x.payoff(s);
                let want = score(&rule, &x, t.final_announcement(), xf).unwrap()
                    - score(&rule, &x, &t.initial, xf).unwrap();
                assert!((total - want).abs() < 1e-12, "state {s}");
            }
        }
    }

    #[test]
    fn detect_convergence_matches_run_verdicts() {
        let x = counting_security();
        let is = crossing_structure();
        let prior = witness_prior();
        let rule = ScoringRule::Quadratic;
        let (menu, kappa) = free_z_menu();
        let cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        for s in 0..4 {
            let t = run_market(&cfg, s, 5).unwrap();
            let v = detect_convergence(&x, 2, &t.initial, prior.probs(), &t.rounds, s, 1e-9);
            assert_eq!(v, t.verdict, "state {s}");
        }
        assert_eq!(
            detect_convergence(&x, 2, &rat(3, 2), prior.probs(), &[], 0, 1e-9),
            Verdict::RoundLimit
        );
    }

    #[test]
    fn impossible_state_rejected() {
        let x = counting_security();
        let is = crossing_structure();
        let prior = Belief::from_probs(vec![rat(1, 2), rat(1, 2), rat_int(0), rat_int(0)]).unwrap();
        let rule = ScoringRule::Quadratic;
        let kappa = CostStructure::entropy(1.0);
        let menu = Menu::default();
        let cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        assert!(matches!(
            run_market(&cfg, 3, 0),
            Err(MarketError::ImpossibleState(3))
        ));
    }

    #[test]
    fn degenerate_prior_converges_immediately() {
        let x = counting_security();
        let is = crossing_structure();
        let prior = Belief::degenerate(4, 2);
        let rule = ScoringRule::Quadratic;
        let (menu, kappa) = free_z_menu();
        let cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        let t = run_market(&cfg, 2, 1).unwrap();
        assert_eq!(t.verdict, Verdict::ConvergedTo(rat_int(2)));
        assert_eq!(t.rounds.len(), 2);
    }

    #[test]
    fn announcement_grid_snaps_with_ties_low() {
        let x = counting_security();
        let is = crossing_structure();
        let prior = witness_prior();
        let rule = ScoringRule::Quadratic;
        let kappa = CostStructure::entropy(1.0);
        let menu = Menu::default();
        let grid = [rat_int(0), rat_int(1), rat_int(2), rat_int(3)];
        let mut cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        cfg.announcement_grid = Some(&grid);
        // 3/2 ties between 1 and 2; everyone snaps to 1 and stays
        let t = run_market(&cfg, 2, 0).unwrap();
        assert_eq!(t.verdict, Verdict::StalledAt(rat_int(1)));
        // at the state paying 1 the snapped quote happens to be right
        let t = run_market(&cfg, 1, 0).unwrap();
        assert_eq!(t.verdict, Verdict::ConvergedTo(rat_int(1)));
    }

    #[test]
    fn informative_abstention_keeps_market_alive() {
        // at this cost only trader 2's {w1,w4} cell finds the event signal
        // worth buying; whether trader 2 buys or visibly abstains reveals
        // their cell, and the join then pins down the state exactly
        let x = counting_security();
        let is = crossing_structure();
        let prior = witness_prior();
        let rule = ScoringRule::Quadratic;
        let kappa = CostStructure::entropy(2.5).with_assumption_2();
        let menu = Menu::parametric(vec![0, 1]);
        let cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        for s in 0..4 {
            for (_, t) in run_market_exact(&cfg, s).unwrap() {
                assert_eq!(
                    t.verdict,
                    Verdict::ConvergedTo(x.payoff(s).clone()),
                    "state {s}"
                );
            }
        }
    }

    #[test]
    fn quiet_witness_prior_stalls_in_one_cycle() {
        // alternating payoffs, witness prior = uniform, menu priced so no
        // cell buys: everyone repeats the opening quote and the market
        // settles after a single full cycle
        let x = Security::new(vec![rat_int(0), rat_int(1), rat_int(0), rat_int(1)]);
        let is = InformationStructure::new(
            &StateSpace::numbered(4),
            vec![
                vec![vec![0, 1], vec![2, 3]],
                vec![vec![0, 3], vec![1, 2]],
            ],
        )
        .unwrap();
        let prior = Belief::uniform(4);
        let rule = ScoringRule::Quadratic;
        let kappa = CostStructure::entropy(1.0).with_assumption_2();
        let menu = Menu::parametric(vec![1, 3]);
        let cfg = MarketConfig::new(&x, &is, &prior, &rule, &kappa, &menu);
        for s in 0..4 {
            let t = run_market(&cfg, s, 0).unwrap();
            assert_eq!(t.rounds.len(), 2, "state {s}");
            assert_eq!(t.verdict, Verdict::StalledAt(rat(1, 2)), "state {s}");
        }
    }
}
