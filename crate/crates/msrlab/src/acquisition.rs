//! Costly information acquisition: per-cell signal choice, the
//! no-acquisition test, the instant-opportunity diagnostic, and the
//! kappa-separability scanner.
//!
//! Verdicts are relative to a finite menu plus a locally refined parametric
//! family; the supremum over all experiments is not finitely computable.

use crate::model::{condition, Belief, InformationStructure, Security};
use crate::rational::{rat, rat_from_f64, rat_int, rat_to_f64, Rat};
use crate::scoring::{expected_score, myopic_best, ScoringRule};
use crate::separability::{
    check_witness, value_regions, witness_polytope_vertices, NonSepWitness,
};
use crate::signals::{signal_cost, BinaryFamily, CostKind, CostStructure, Menu, Signal};
use num_traits::{One, Zero};
use rayon::prelude::*;

/// Float view of a cell belief for fast repeated menu evaluation. Both
/// scoring rules' expected-score differences depend on a posterior only
/// through its mean, so gains reduce to a sum over realizations.
struct BeliefView {
    probs: Vec<f64>,
    payoffs: Vec<f64>,
    mean: f64,
    entropy: f64,
}

impl BeliefView {
    fn new(b: &Belief, x: &Security) -> Self {
        let probs: Vec<f64> = b.probs().iter().map(rat_to_f64).collect();
        let payoffs: Vec<f64> = x.payoffs().iter().map(rat_to_f64).collect();
        let mean = probs.iter().zip(&payoffs).map(|(p, v)| p * v).sum();
        let entropy = entropy_f64(&probs);
        Self {
            probs,
            payoffs,
            mean,
            entropy,
        }
    }
}

fn entropy_f64(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// E_gamma[s(y_new, X)] - E_gamma[s(y_old, X)] when E_gamma[X] = m.
fn score_gap(rule: &ScoringRule, y_new: f64, y_old: f64, m: f64) -> f64 {
    match rule {
        ScoringRule::Quadratic => (m - y_old).powi(2) - (m - y_new).powi(2),
        ScoringRule::Logarithmic { a, b } => {
            let (a, b) = (rat_to_f64(a), rat_to_f64(b));
            (m - a) * ((y_new - a).ln() - (y_old - a).ln())
                + (b - m) * ((b - y_new).ln() - (b - y_old).ln())
        }
    }
}

/// Gain minus cost from likelihood rows (one per realization), with the
/// explicit-table cost already resolved by the caller when applicable.
fn net_gain_rows(
    view: &BeliefView,
    rows: &[Vec<f64>],
    rule: &ScoringRule,
    kappa: &CostStructure,
    explicit: Option<f64>,
) -> f64 {
    if let Some(k) = explicit {
        if k.is_infinite() {
            return f64::NEG_INFINITY;
        }
    }
    let n = view.probs.len();
    let mut gain = 0.0;
    let mut posterior_entropy = 0.0;
    let mut gamma = vec![0.0; n];
    for row in rows {
        let mut p_tau = 0.0;
        for w in 0..n {
            gamma[w] = view.probs[w] * row[w];
            p_tau += gamma[w];
        }
        if p_tau <= 0.0 {
            continue;
        }
        let mut m_tau = 0.0;
        for w in 0..n {
            gamma[w] /= p_tau;
            m_tau += gamma[w] * view.payoffs[w];
        }
        gain += p_tau * score_gap(rule, m_tau, view.mean, m_tau);
        if matches!(kappa.kind, CostKind::EntropyReduction) {
            posterior_entropy += p_tau * entropy_f64(&gamma);
        }
    }
    let k = match &kappa.kind {
        CostKind::EntropyReduction => (view.entropy - posterior_entropy).max(0.0),
        CostKind::PrecisionQuadratic => {
            let mut max_tv: f64 = 0.0;
            for w1 in 0..n {
                for w2 in (w1 + 1)..n {
                    let tv: f64 =
                        rows.iter().map(|r| (r[w1] - r[w2]).abs()).sum::<f64>() / 2.0;
                    max_tv = max_tv.max(tv);
                }
            }
            max_tv * max_tv
        }
        CostKind::ExplicitTable { .. } => explicit.expect("caller resolves table lookups"),
    };
    let cost = if k == 0.0 { 0.0 } else { kappa.c * k };
    if cost.is_infinite() {
        f64::NEG_INFINITY
    } else {
        gain - cost
    }
}

/// Expected myopic score improvement from buying `sig` at `cell_belief`,
/// net of cost. The no-purchase baseline announces the current expectation,
/// so the uninformative signal nets exactly zero.
pub fn net_gain(
    cell_belief: &Belief,
    sig: &Signal,
    rule: &ScoringRule,
    x: &Security,
    kappa: &CostStructure,
) -> f64 {
    if sig.is_uninformative() {
        return 0.0;
    }
    if kappa.assumption_2 && sig.supports_differ() {
        return f64::NEG_INFINITY;
    }
    let view = BeliefView::new(cell_belief, x);
    let rows: Vec<Vec<f64>> = (0..sig.num_realizations())
        .map(|t| (0..sig.num_states()).map(|w| rat_to_f64(sig.likelihood(t, w))).collect())
        .collect();
    let explicit = match &kappa.kind {
        CostKind::ExplicitTable { costs } => {
            Some(costs.get(&sig.id).copied().unwrap_or(f64::INFINITY))
        }
        _ => None,
    };
    net_gain_rows(&view, &rows, rule, kappa, explicit)
}

/// Fast family evaluation at a float precision (exact for dyadic q).
fn net_gain_family(
    view: &BeliefView,
    event: &[usize],
    qf: f64,
    rule: &ScoringRule,
    kappa: &CostStructure,
) -> f64 {
    let n = view.probs.len();
    let proper = !event.is_empty() && event.len() < n;
    if qf == 0.5 || !proper {
        return 0.0;
    }
    if kappa.assumption_2 && (qf == 1.0 || qf == 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut z = vec![1.0 - qf; n];
    for &w in event {
        z[w] = qf;
    }
    let nz: Vec<f64> = z.iter().map(|p| 1.0 - p).collect();
    net_gain_rows(view, &[z, nz], rule, kappa, None)
}

/// Outcome of optimizing over a menu at one belief.
#[derive(Debug, Clone)]
pub struct SignalDecision {
    /// argmax signal (even when not worth buying); None for an empty menu
    pub best: Option<Signal>,
    pub net_gain: f64,
    pub cost: f64,
    /// strictly positive net gain; ties do not acquire
    pub acquired: bool,
}

impl SignalDecision {
    fn none() -> Self {
        Self {
            best: None,
            net_gain: 0.0,
            cost: 0.0,
            acquired: false,
        }
    }
}

const REFINE_ITERS: usize = 40;
const REFINE_DENOM: u64 = 1 << 20;

/// Margin for "strictly profitable": floating-point noise in a net gain that
/// is genuinely zero (the break-even boundary) must not trigger a purchase.
pub const ACQUISITION_EPS: f64 = 1e-9;

/// Ternary-search the family's precision around its best grid point. The
/// candidate precision is snapped to a rational before evaluation so the
/// search optimizes exactly what the caller will use.
fn refine_family(
    belief: &Belief,
    x: &Security,
    rule: &ScoringRule,
    kappa: &CostStructure,
    fam: &BinaryFamily,
) -> Option<(Signal, f64)> {
    if fam.grid.is_empty() {
        return None;
    }
    let n = belief.len();
    let mut best_i = 0;
    let mut best_net = f64::NEG_INFINITY;
    for (i, q) in fam.grid.iter().enumerate() {
        let net = net_gain(belief, &fam.signal(n, q), rule, x, kappa);
        if net > best_net {
            best_net = net;
            best_i = i;
        }
    }
    let mut best = (fam.grid[best_i].clone(), best_net);
    // refinement works in floats; explicit tables price by id, so the grid
    // answer already stands there
    if !matches!(kappa.kind, CostKind::ExplicitTable { .. }) {
        let view = BeliefView::new(belief, x);
        let lo_q = fam.grid[best_i.saturating_sub(1)].clone();
        let hi_q = fam.grid[(best_i + 1).min(fam.grid.len() - 1)].clone();
        let eval = |qf: f64| -> (Rat, f64) {
            let q = rat_from_f64(qf, REFINE_DENOM).max(lo_q.clone()).min(hi_q.clone());
            let net = net_gain_family(&view, &fam.event, rat_to_f64(&q), rule, kappa);
            (q, net)
        };
        let (mut lo, mut hi) = (rat_to_f64(&lo_q), rat_to_f64(&hi_q));
        for _ in 0..REFINE_ITERS {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            let e1 = eval(m1);
            let e2 = eval(m2);
            if e1.1 > best.1 {
                best = e1.clone();
            }
            if e2.1 > best.1 {
                best = e2.clone();
            }
            if e1.1 >= e2.1 {
                hi = m2;
            } else {
                lo = m1;
            }
        }
    }
    Some((fam.signal(n, &best.0), best.1))
}

/// Best menu signal at a belief: explicit signals and the family grid in
/// menu order (strict improvement required, so ties keep the earlier
/// candidate), then a local refinement of the family precision.
pub fn best_signal(
    belief: &Belief,
    x: &Security,
    rule: &ScoringRule,
    kappa: &CostStructure,
    menu: &Menu,
) -> SignalDecision {
    if menu.is_empty() {
        return SignalDecision::none();
    }
    let mut best: Option<(Signal, f64)> = None;
    for sig in menu.grid_signals(belief.len()) {
        let net = net_gain(belief, &sig, rule, x, kappa);
        if best.as_ref().is_none_or(|(_, b)| net > *b) {
            best = Some((sig, net));
        }
    }
    if let Some(fam) = &menu.family {
        if let Some((sig, net)) = refine_family(belief, x, rule, kappa, fam) {
            if best.as_ref().is_none_or(|(_, b)| net > *b) {
                best = Some((sig, net));
            }
        }
    }
    match best {
        Some((sig, net)) => {
            let cost = signal_cost(kappa, &sig, belief);
            SignalDecision {
                acquired: net > ACQUISITION_EPS,
                best: Some(sig),
                net_gain: net,
                cost,
            }
        }
        None => SignalDecision::none(),
    }
}

/// Early-exit acquisition check used by the scanner: grid first, refinement
/// only when the whole grid is weakly unprofitable.
fn has_acquisition_at_cell(
    belief: &Belief,
    x: &Security,
    rule: &ScoringRule,
    kappa: &CostStructure,
    menu: &Menu,
) -> bool {
    for sig in menu.grid_signals(belief.len()) {
        if net_gain(belief, &sig, rule, x, kappa) > ACQUISITION_EPS {
            return true;
        }
    }
    if let Some(fam) = &menu.family {
        if let Some((_, net)) = refine_family(belief, x, rule, kappa, fam) {
            return net > ACQUISITION_EPS;
        }
    }
    false
}

fn cells_meeting_support(
    prior: &Belief,
    is: &InformationStructure,
) -> Vec<(usize, Vec<usize>)> {
    let mut out = Vec::new();
    for t in 0..is.num_traders() {
        for cell in is.cells(t) {
            if !prior.event_prob(cell).is_zero() {
                out.push((t, cell.clone()));
            }
        }
    }
    out
}

fn has_acquisition(
    prior: &Belief,
    x: &Security,
    is: &InformationStructure,
    rule: &ScoringRule,
    kappa: &CostStructure,
    menu: &Menu,
) -> bool {
    cells_meeting_support(prior, is).into_iter().any(|(_, cell)| {
        let b = condition(prior, &cell).expect("positive cell mass");
        has_acquisition_at_cell(&b, x, rule, kappa, menu)
    })
}

#[derive(Debug, Clone)]
pub struct CellDecision {
    pub trader: usize,
    pub cell: Vec<usize>,
    pub best_signal: Option<String>,
    pub net_gain: f64,
    pub acquired: bool,
}

#[derive(Debug, Clone, Default)]
pub struct AcquisitionReport {
    pub decisions: Vec<CellDecision>,
}

impl AcquisitionReport {
    pub fn none_acquired(&self) -> bool {
        self.decisions.iter().all(|d| !d.acquired)
    }
}

/// No-acquisition test at a prior: true iff no trader's cell profits strictly
/// from any menu signal.
pub fn no_information_acquisition(
    prior: &Belief,
    x: &Security,
    is: &InformationStructure,
    rule: &ScoringRule,
    kappa: &CostStructure,
    menu: &Menu,
) -> (bool, AcquisitionReport) {
    let mut report = AcquisitionReport::default();
    for (trader, cell) in cells_meeting_support(prior, is) {
        let b = condition(prior, &cell).expect("positive cell mass");
        let d = best_signal(&b, x, rule, kappa, menu);
        report.decisions.push(CellDecision {
            trader,
            cell,
            best_signal: d.best.as_ref().map(|s| s.id.clone()),
            net_gain: d.net_gain,
            acquired: d.acquired,
        });
    }
    (report.none_acquired(), report)
}

/// Best one-shot expected gain over repeating `z`: for each cell the trader
/// may hold, the value of re-announcing the myopic best plus the best signal
/// if worthwhile, weighted by the cell mass under `r`. Never negative.
pub fn instant_opportunity(
    r: &Belief,
    z: &Rat,
    trader: usize,
    x: &Security,
    is: &InformationStructure,
    rule: &ScoringRule,
    kappa: &CostStructure,
    menu: &Menu,
) -> f64 {
    let mut total = 0.0;
    for cell in is.cells(trader) {
        let mass = r.event_prob(cell);
        if mass.is_zero() {
            continue;
        }
        let b = condition(r, cell).expect("positive cell mass");
        let y0 = myopic_best(&b, x);
        let announce_gain = expected_score(&b, rule, x, &y0).expect("in range")
            - expected_score(&b, rule, x, z).expect("announcement in range");
        let d = best_signal(&b, x, rule, kappa, menu);
        let value = (announce_gain + d.net_gain.max(0.0)).max(0.0);
        total += rat_to_f64(&mass) * value;
    }
    total
}

/// Resolution of the kappa scanner's search over witness priors.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    /// uniform samples inside each open interval of values
    pub interior_per_interval: usize,
    /// extra values at distance len/2^k from each interval end
    pub geometric_depth: u32,
    /// interpolation steps between witness-polytope vertex pairs
    pub pair_steps: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            interior_per_interval: 6,
            geometric_depth: 40,
            pair_steps: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub enum KappaVerdict {
    NonSeparable {
        witness: NonSepWitness,
        report: AcquisitionReport,
    },
    SeparableUpToResolution {
        grid: ScanGrid,
    },
}

impl KappaVerdict {
    pub fn is_non_separable(&self) -> bool {
        matches!(self, KappaVerdict::NonSeparable { .. })
    }

    pub fn witness(&self) -> Option<&NonSepWitness> {
        match self {
            KappaVerdict::NonSeparable { witness, .. } => Some(witness),
            _ => None,
        }
    }
}

/// Candidate values: region representatives plus interval interiors refined
/// geometrically toward the payoff endpoints (witness families often
/// degenerate onto a face as v approaches a payoff).
fn scan_values(x: &Security, grid: &ScanGrid) -> Vec<Rat> {
    let mut out: Vec<Rat> = value_regions(x).into_iter().map(|r| r.rep).collect();
    let vals = x.distinct_values();
    for w in vals.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let len = b - a;
        let n = grid.interior_per_interval as i64;
        for k in 1..=n {
            out.push(a + &len * rat(k, n + 1));
        }
        let mut d = &len / rat_int(4);
        for _ in 2..=grid.geometric_depth {
            out.push(a + &d);
            out.push(b - &d);
            d /= rat_int(2);
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Vertices of the witness polytope at `v` plus pairwise interpolations.
fn witnesses_at(
    x: &Security,
    is: &InformationStructure,
    v: &Rat,
    grid: &ScanGrid,
) -> Vec<NonSepWitness> {
    let verts = witness_polytope_vertices(x, is, v);
    let mut out = verts.clone();
    let steps = if verts.len() == 2 { 64 } else { grid.pair_steps as i64 };
    for i in 0..verts.len() {
        for j in (i + 1)..verts.len() {
            for k in 1..steps {
                let t = rat(k, steps);
                let probs: Vec<Rat> = verts[i]
                    .prior
                    .probs()
                    .iter()
                    .zip(verts[j].prior.probs())
                    .map(|(a, b)| a * (Rat::one() - &t) + b * &t)
                    .collect();
                out.push(NonSepWitness {
                    prior: Belief::from_probs(probs).expect("convex combination"),
                    value: v.clone(),
                });
            }
        }
    }
    out
}

/// Search for a prior that is simultaneously a non-separability witness and
/// an acquisition dead zone. Deterministic: the hit at the smallest
/// candidate value wins regardless of parallel scheduling.
pub fn kappa_separability_scan(
    x: &Security,
    is: &InformationStructure,
    kappa: &CostStructure,
    menu: &Menu,
    rule: &ScoringRule,
    grid: &ScanGrid,
) -> KappaVerdict {
    let values = scan_values(x, grid);
    let hit = values
        .par_iter()
        .enumerate()
        .filter_map(|(i, v)| {
            witnesses_at(x, is, v, grid)
                .into_iter()
                .find(|w| !has_acquisition(&w.prior, x, is, rule, kappa, menu))
                .map(|w| (i, w))
        })
        .min_by_key(|(i, _)| *i);
    match hit {
        Some((_, witness)) => {
            debug_assert!(check_witness(x, is, &witness).is_ok());
            let (quiet, report) =
                no_information_acquisition(&witness.prior, x, is, rule, kappa, menu);
            debug_assert!(quiet);
            KappaVerdict::NonSeparable { witness, report }
        }
        None => KappaVerdict::SeparableUpToResolution { grid: grid.clone() },
    }
}

/// Bisect the marginal cost at which the scan verdict flips. Returns None
/// when both endpoints agree.
pub fn scan_threshold(
    x: &Security,
    is: &InformationStructure,
    kappa: &CostStructure,
    menu: &Menu,
    rule: &ScoringRule,
    grid: &ScanGrid,
    c_lo: f64,
    c_hi: f64,
    tol_rel: f64,
) -> Option<f64> {
    let probe = |c: f64| {
        kappa_separability_scan(x, is, &kappa.with_marginal_cost(c), menu, rule, grid)
            .is_non_separable()
    };
    let at_lo = probe(c_lo);
    if at_lo == probe(c_hi) {
        return None;
    }
    let (mut lo, mut hi) = (c_lo, c_hi);
    while (hi - lo).abs() > tol_rel * lo.abs().max(hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if probe(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
