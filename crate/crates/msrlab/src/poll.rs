//! Poll simulation, market/poll accuracy by exact enumeration, the
//! marginal-cost sweep with jump detection, and the market-value statistic.
//!
//! Accuracy is 1 - |prediction - realized payoff|, unclamped. Expectations
//! over true states and signal realizations are exact rational sums; only
//! the final figures are floats.

use crate::acquisition::best_signal;
use crate::market::{run_market_exact, MarketConfig, MarketError};
use crate::model::{condition, Belief};
use crate::rational::{rat_to_f64, Rat};
use crate::signals::bayes_posterior;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct PollResult {
    /// one myopic announcement per trader
    pub announcements: Vec<Rat>,
    pub mean: Rat,
    pub accuracy: f64,
}

/// Each trader, simultaneously: condition the prior on their own cell at the
/// true state, buy the best menu signal if strictly worthwhile, and announce
/// the myopic best of the resulting belief. The poll is the arithmetic mean.
pub fn run_poll(cfg: &MarketConfig, true_state: usize, seed: u64) -> Result<PollResult, MarketError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut announcements = Vec::with_capacity(cfg.is.num_traders());
    for trader in 0..cfg.is.num_traders() {
        let options = trader_options(cfg, trader, true_state)?;
        let pick = if options.len() == 1 {
            0
        } else {
            let weights: Vec<f64> = options.iter().map(|(l, _)| rat_to_f64(l)).collect();
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
            pick
        };
        announcements.push(options[pick].1.clone());
    }
    let mean = poll_mean(&announcements);
    let accuracy = rat_to_f64(&(Rat::one() - (&mean - cfg.x.payoff(true_state)).abs()));
    Ok(PollResult {
        announcements,
        mean,
        accuracy,
    })
}

fn poll_mean(announcements: &[Rat]) -> Rat {
    announcements.iter().sum::<Rat>() / Rat::from_integer((announcements.len() as i64).into())
}

/// A trader's possible announcements at the true state with their exact
/// probabilities (a single entry when they do not buy).
fn trader_options(
    cfg: &MarketConfig,
    trader: usize,
    true_state: usize,
) -> Result<Vec<(Rat, Rat)>, MarketError> {
    let cell = cfg.is.cell(trader, true_state);
    if cfg.prior.event_prob(cell).is_zero() {
        return Err(MarketError::ImpossibleState(true_state));
    }
    let belief = condition(cfg.prior, cell)?;
    let d = best_signal(&belief, cfg.x, cfg.rule, cfg.kappa, cfg.menu);
    if !d.acquired {
        let y = match cfg.announcement_grid {
            Some(grid) => crate::scoring::myopic_best_on_grid(&belief, cfg.x, grid),
            None => crate::scoring::myopic_best(&belief, cfg.x),
        };
        return Ok(vec![(Rat::one(), y)]);
    }
    let sig = d.best.expect("acquired implies a signal");
    let mut out = Vec::new();
    for t in 0..sig.num_realizations() {
        let lik = sig.likelihood(t, true_state).clone();
        if lik.is_zero() {
            continue;
        }
        let post = bayes_posterior(&belief, &sig, t).expect("positive likelihood");
        let y = match cfg.announcement_grid {
            Some(grid) => crate::scoring::myopic_best_on_grid(&post, cfg.x, grid),
            None => crate::scoring::myopic_best(&post, cfg.x),
        };
        out.push((lik, y));
    }
    Ok(out)
}

/// Exact distribution of the poll mean at a true state: the product over
/// traders of their realization branches.
pub fn run_poll_exact(
    cfg: &MarketConfig,
    true_state: usize,
) -> Result<Vec<(Rat, Rat)>, MarketError> {
    let mut branches: Vec<(Rat, Rat)> = vec![(Rat::one(), Rat::zero())]; // (prob, sum of announcements)
    for trader in 0..cfg.is.num_traders() {
        let options = trader_options(cfg, trader, true_state)?;
        let mut next = Vec::with_capacity(branches.len() * options.len());
        for (p, sum) in &branches {
            for (lik, y) in &options {
                next.push((p * lik, sum + y));
            }
        }
        branches = next;
    }
    let n = Rat::from_integer((cfg.is.num_traders() as i64).into());
    Ok(branches
        .into_iter()
        .map(|(p, sum)| (p, sum / &n))
        .collect())
}

fn accuracy_of(prediction: &Rat, payoff: &Rat) -> Rat {
    Rat::one() - (prediction - payoff).abs()
}

/// Expected poll accuracy conditional on each state (exact), None off the
/// prior's support.
pub fn poll_accuracy_by_state(cfg: &MarketConfig) -> Result<Vec<Option<Rat>>, MarketError> {
    let mut out = vec![None; cfg.x.len()];
    for s in cfg.prior.support() {
        let mut acc = Rat::zero();
        for (p, mean) in run_poll_exact(cfg, s)? {
            acc += &p * accuracy_of(&mean, cfg.x.payoff(s));
        }
        out[s] = Some(acc);
    }
    Ok(out)
}

/// Expected market accuracy conditional on each state (exact), enumerating
/// every realization branch of the simulated myopic profile.
pub fn market_accuracy_by_state(cfg: &MarketConfig) -> Result<Vec<Option<Rat>>, MarketError> {
    let mut out = vec![None; cfg.x.len()];
    for s in cfg.prior.support() {
        let mut acc = Rat::zero();
        for (p, trace) in run_market_exact(cfg, s)? {
            acc += &p * accuracy_of(trace.final_announcement(), cfg.x.payoff(s));
        }
        out[s] = Some(acc);
    }
    Ok(out)
}

fn prior_average(cfg: &MarketConfig, by_state: &[Option<Rat>]) -> Rat {
    by_state
        .iter()
        .enumerate()
        .filter_map(|(s, a)| a.as_ref().map(|a| cfg.prior.prob(s) * a))
        .sum()
}

/// E over states and realizations of poll accuracy, exact.
pub fn accuracy_poll(cfg: &MarketConfig) -> Result<Rat, MarketError> {
    Ok(prior_average(cfg, &poll_accuracy_by_state(cfg)?))
}

/// E over states and realizations of final-announcement accuracy under the
/// simulated myopic profile, exact.
pub fn accuracy_market(cfg: &MarketConfig) -> Result<Rat, MarketError> {
    Ok(prior_average(cfg, &market_accuracy_by_state(cfg)?))
}

#[derive(Debug, Clone)]
pub struct AccuracyRecord {
    pub c: f64,
    pub a_market: f64,
    pub a_poll: f64,
    /// conditional accuracies per state; NaN off the prior's support
    pub market_by_state: Vec<f64>,
    pub poll_by_state: Vec<f64>,
    /// market accuracy within 1e-9 of 1
    pub jumped: bool,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// one record per grid cost, in the given (decreasing) order
    pub records: Vec<AccuracyRecord>,
    /// largest grid cost at which the market is fully accurate
    pub threshold: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("cost grid must be strictly decreasing and positive")]
    BadGrid,
    #[error(transparent)]
    Market(#[from] MarketError),
}

fn to_f64_or_nan(a: &Option<Rat>) -> f64 {
    a.as_ref().map_or(f64::NAN, rat_to_f64)
}

fn record_at(cfg: &MarketConfig, c: f64) -> Result<AccuracyRecord, MarketError> {
    let kappa = cfg.kappa.with_marginal_cost(c);
    let mut cfg_c = cfg.clone();
    cfg_c.kappa = &kappa;
    let market = market_accuracy_by_state(&cfg_c)?;
    let poll = poll_accuracy_by_state(&cfg_c)?;
    let a_market = rat_to_f64(&prior_average(&cfg_c, &market));
    let a_poll = rat_to_f64(&prior_average(&cfg_c, &poll));
    Ok(AccuracyRecord {
        c,
        a_market,
        a_poll,
        market_by_state: market.iter().map(to_f64_or_nan).collect(),
        poll_by_state: poll.iter().map(to_f64_or_nan).collect(),
        jumped: a_market >= 1.0 - 1e-9,
    })
}

/// Evaluate market and poll accuracy along a strictly decreasing cost grid.
/// The threshold is the largest grid cost whose record is fully accurate.
pub fn cost_sweep(cfg: &MarketConfig, c_grid: &[f64]) -> Result<SweepResult, SweepError> {
    if c_grid.is_empty()
        || c_grid.iter().any(|c| *c <= 0.0)
        || c_grid.windows(2).any(|w| w[0] <= w[1])
    {
        return Err(SweepError::BadGrid);
    }
    let records: Vec<AccuracyRecord> = c_grid
        .par_iter()
        .map(|&c| record_at(cfg, c))
        .collect::<Result<_, _>>()?;
    let threshold = records.iter().find(|r| r.jumped).map(|r| r.c);
    Ok(SweepResult { records, threshold })
}

/// Bisect the cost at which full market accuracy switches on. Returns None
/// when both endpoints sit on the same side.
pub fn jump_threshold(
    cfg: &MarketConfig,
    c_lo: f64,
    c_hi: f64,
    tol_rel: f64,
) -> Result<Option<f64>, MarketError> {
    let probe = |c: f64| -> Result<bool, MarketError> { Ok(record_at(cfg, c)?.jumped) };
    let at_lo = probe(c_lo)?;
    if at_lo == probe(c_hi)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (c_lo, c_hi);
    while (hi - lo).abs() > tol_rel * lo.abs().max(hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// All beliefs with every entry a positive multiple of 1/denominator: the
/// full-support grid used by the market-value minimum.
pub fn full_support_priors(n_states: usize, denominator: u32) -> Vec<Belief> {
    let mut out = Vec::new();
    if (denominator as usize) < n_states {
        return out;
    }
    let mut parts = vec![0u32; n_states];
    fn rec(out: &mut Vec<Belief>, parts: &mut Vec<u32>, idx: usize, left: u32, denom: u32) {
        let n = parts.len();
        if idx == n - 1 {
            parts[idx] = left;
            let probs = parts
                .iter()
                .map(|&k| Rat::new((k as i64).into(), (denom as i64).into()))
                .collect();
            out.push(Belief::from_probs(probs).expect("composition sums to 1"));
            return;
        }
        let max = left - (n - 1 - idx) as u32;
        for k in 1..=max {
            parts[idx] = k;
            rec(out, parts, idx + 1, left - k, denom);
        }
    }
    rec(&mut out, &mut parts, 0, denominator, denominator);
    out
}

#[derive(Debug, Clone)]
pub struct MarketValue {
    pub value: f64,
    /// index into the supplied prior list attaining the minimum
    pub argmin: usize,
}

/// min over the supplied priors of market accuracy minus poll accuracy,
/// both exact per prior.
pub fn market_value(cfg: &MarketConfig, priors: &[Belief]) -> Result<MarketValue, MarketError> {
    let gaps: Vec<Rat> = priors
        .par_iter()
        .map(|prior| {
            let mut c = cfg.clone();
            c.prior = prior;
            Ok(accuracy_market(&c)? - accuracy_poll(&c)?)
        })
        .collect::<Result<_, MarketError>>()?;
    let argmin = gaps
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("total order on rationals"))
        .map(|(i, _)| i)
        .expect("at least one prior");
    Ok(MarketValue {
        value: rat_to_f64(&gaps[argmin]),
        argmin,
    })
}
