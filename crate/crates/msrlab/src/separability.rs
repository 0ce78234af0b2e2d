//! Non-separability witnesses and their dual certificates.
//!
//! A security is non-separable for a structure when some common prior makes
//! every trader's conditional expectation equal to a common value v while the
//! security is not constant on the support. The search space over v collapses
//! to finitely many candidates: for fixed v, feasibility of the witness system
//! depends only on the sign pattern of X - v, so it is enough to test one
//! representative per sign region (each distinct payoff, each midpoint between
//! consecutive payoffs, and one point beyond each end). By LP duality
//! (Gordan), a region with no witness carries a strict dual vector lambda,
//! and collecting one lambda per region certifies separability outright.

use crate::lp::{feasible_point, gauss_solve, solve, GaussOutcome, LpOutcome, StandardLp};
use crate::model::{conditional_expectation, Belief, InformationStructure, Security};
use crate::rational::{format_rat, rat_int, Rat};
use num_traits::{One, Zero};

/// A common prior and value satisfying the witness conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct NonSepWitness {
    pub prior: Belief,
    pub value: Rat,
}

/// One maximal interval (or single point) of v-values sharing a sign pattern
/// of X - v. `lo`/`hi` are None at the unbounded ends; single points have
/// lo == hi == rep.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueRegion {
    pub lo: Option<Rat>,
    pub hi: Option<Rat>,
    pub rep: Rat,
}

/// A strict dual vector per v-region: lambdas[trader][cell_index].
#[derive(Debug, Clone, PartialEq)]
pub struct RegionLambda {
    pub region: ValueRegion,
    pub lambdas: Vec<Vec<Rat>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaCertificate {
    pub regions: Vec<RegionLambda>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeparabilityVerdict {
    NonSeparable(NonSepWitness),
    Separable(LambdaCertificate),
}

/// Sign regions of v in increasing order of representative.
pub fn value_regions(x: &Security) -> Vec<ValueRegion> {
    let vals = x.distinct_values();
    let mut out = Vec::with_capacity(2 * vals.len() + 1);
    out.push(ValueRegion {
        lo: None,
        hi: Some(vals[0].clone()),
        rep: &vals[0] - rat_int(1),
    });
    for (i, v) in vals.iter().enumerate() {
        out.push(ValueRegion {
            lo: Some(v.clone()),
            hi: Some(v.clone()),
            rep: v.clone(),
        });
        if let Some(next) = vals.get(i + 1) {
            out.push(ValueRegion {
                lo: Some(v.clone()),
                hi: Some(next.clone()),
                rep: (v + next) / rat_int(2),
            });
        }
    }
    out.push(ValueRegion {
        lo: Some(vals[vals.len() - 1].clone()),
        hi: None,
        rep: vals[vals.len() - 1].clone() + rat_int(1),
    });
    out
}

/// States with X != v, plus the equality system rows over those states:
/// normalization and one balance row per (trader, cell) meeting them.
fn witness_system(
    x: &Security,
    is: &InformationStructure,
    v: &Rat,
) -> (Vec<usize>, Vec<Vec<Rat>>, Vec<Rat>) {
    let vars: Vec<usize> = (0..x.len()).filter(|&w| x.payoff(w) != v).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    a.push(vec![Rat::one(); vars.len()]);
    b.push(Rat::one());
    for t in 0..is.num_traders() {
        for cell in is.cells(t) {
            let row: Vec<Rat> = vars
                .iter()
                .map(|&w| {
                    if cell.contains(&w) {
                        x.payoff(w) - v
                    } else {
                        Rat::zero()
                    }
                })
                .collect();
            if row.iter().any(|c| !c.is_zero()) {
                a.push(row);
                b.push(Rat::zero());
            }
        }
    }
    (vars, a, b)
}

fn lift(n: usize, vars: &[usize], y: &[Rat]) -> Belief {
    let mut probs = vec![Rat::zero(); n];
    for (slot, &w) in vars.iter().enumerate() {
        probs[w] = y[slot].clone();
    }
    Belief::from_probs(probs).expect("LP solution is a probability vector")
}

/// A witness with this exact value, if one exists.
pub fn witness_at_value(
    x: &Security,
    is: &InformationStructure,
    v: &Rat,
) -> Option<NonSepWitness> {
    let (vars, a, b) = witness_system(x, is, v);
    if vars.is_empty() {
        return None;
    }
    let y = feasible_point(a, b)?;
    let w = NonSepWitness {
        prior: lift(x.len(), &vars, &y),
        value: v.clone(),
    };
    debug_assert!(check_witness(x, is, &w).is_ok());
    Some(w)
}

/// All vertices of the witness polytope at value v (basic feasible solutions
/// of the equality system). Empty when no witness exists at v.
pub fn witness_polytope_vertices(
    x: &Security,
    is: &InformationStructure,
    v: &Rat,
) -> Vec<NonSepWitness> {
    let (vars, a, b) = witness_system(x, is, v);
    let n = vars.len();
    if n == 0 || n > 16 {
        return Vec::new();
    }
    let mut seen: Vec<Vec<Rat>> = Vec::new();
    for mask in 1u32..(1 << n) {
        let cols: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).collect();
        let sub: Vec<Vec<Rat>> = a
            .iter()
            .map(|row| cols.iter().map(|&j| row[j].clone()).collect())
            .collect();
        if let GaussOutcome::Unique(sol) = gauss_solve(&sub, &b) {
            if sol.iter().all(|p| p >= &Rat::zero()) {
                let mut y = vec![Rat::zero(); n];
                for (k, &j) in cols.iter().enumerate() {
                    y[j] = sol[k].clone();
                }
                if !seen.contains(&y) {
                    seen.push(y);
                }
            }
        }
    }
    seen.into_iter()
        .map(|y| NonSepWitness {
            prior: lift(x.len(), &vars, &y),
            value: v.clone(),
        })
        .collect()
}

/// Search all v-regions in increasing order; first witness found wins.
pub fn find_nonseparable_witness(
    x: &Security,
    is: &InformationStructure,
) -> Option<NonSepWitness> {
    value_regions(x)
        .iter()
        .find_map(|r| witness_at_value(x, is, &r.rep))
}

/// Exact verification of the witness conditions; the message names the first
/// failure.
pub fn check_witness(
    x: &Security,
    is: &InformationStructure,
    w: &NonSepWitness,
) -> Result<(), String> {
    let supp = w.prior.support();
    if supp.is_empty() {
        return Err("empty support".into());
    }
    if supp.iter().all(|&s| x.payoff(s) == &w.value) {
        return Err(format!(
            "security is constant at {} on the support",
            format_rat(&w.value)
        ));
    }
    for &s in &supp {
        for t in 0..is.num_traders() {
            let cell = is.cell(t, s);
            let e = conditional_expectation(&w.prior, x, cell)
                .expect("support state has positive cell mass");
            if e != w.value {
                return Err(format!(
                    "trader {t} cell {:?}: conditional expectation {} != {}",
                    cell,
                    format_rat(&e),
                    format_rat(&w.value)
                ));
            }
        }
    }
    Ok(())
}

/// A strict dual vector at value v: per-trader, per-cell lambdas with
/// sign(X(w) - v) * sum_i lambda_i(cell_i(w)) > 0 for every state with
/// X(w) != v. Found by maximizing the minimum slack with lambdas in [-1, 1].
pub fn lambda_at_value(
    x: &Security,
    is: &InformationStructure,
    v: &Rat,
) -> Option<Vec<Vec<Rat>>> {
    let ncells: Vec<usize> = (0..is.num_traders()).map(|t| is.cells(t).len()).collect();
    let total_cells: usize = ncells.iter().sum();
    let offsets: Vec<usize> = ncells
        .iter()
        .scan(0, |acc, &c| {
            let o = *acc;
            *acc += c;
            Some(o)
        })
        .collect();
    let active: Vec<usize> = (0..x.len()).filter(|&w| x.payoff(w) != v).collect();
    if active.is_empty() {
        return Some((0..is.num_traders()).map(|t| vec![Rat::zero(); is.cells(t).len()]).collect());
    }
    // columns: lambda+ | lambda- | t | per-state slack | bound slacks | t-bound
    let nl = total_cells;
    let col_t = 2 * nl;
    let col_s = col_t + 1;
    let col_u = col_s + active.len();
    let nvars = col_u + 2 * nl + 1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (k, &w) in active.iter().enumerate() {
        let mut row = vec![Rat::zero(); nvars];
        let sign = if x.payoff(w) > v { Rat::one() } else { -Rat::one() };
        for t in 0..is.num_traders() {
            let j = offsets[t] + is.cell_index(t, w);
            row[j] = sign.clone();
            row[nl + j] = -sign.clone();
        }
        row[col_t] = -Rat::one();
        row[col_s + k] = -Rat::one();
        a.push(row);
        b.push(Rat::zero());
    }
    for j in 0..2 * nl {
        let mut row = vec![Rat::zero(); nvars];
        row[j] = Rat::one();
        row[col_u + j] = Rat::one();
        a.push(row);
        b.push(Rat::one());
    }
    let mut row = vec![Rat::zero(); nvars];
    row[col_t] = Rat::one();
    row[col_u + 2 * nl] = Rat::one();
    a.push(row);
    b.push(Rat::one());
    let mut c = vec![Rat::zero(); nvars];
    c[col_t] = Rat::one();
    match solve(&StandardLp { a, b, c }) {
        LpOutcome::Optimal { x: sol, value } if value > Rat::zero() => {
            let mut out = Vec::with_capacity(is.num_traders());
            for t in 0..is.num_traders() {
                out.push(
                    (0..is.cells(t).len())
                        .map(|ci| &sol[offsets[t] + ci] - &sol[nl + offsets[t] + ci])
                        .collect(),
                );
            }
            Some(out)
        }
        _ => None,
    }
}

/// One strict lambda per v-region, or None if some region has a witness.
pub fn find_lambda_certificate(
    x: &Security,
    is: &InformationStructure,
) -> Option<LambdaCertificate> {
    let mut regions = Vec::new();
    for region in value_regions(x) {
        let lambdas = lambda_at_value(x, is, &region.rep)?;
        regions.push(RegionLambda { region, lambdas });
    }
    Some(LambdaCertificate { regions })
}

/// Exact check that every region's lambda is strictly feasible for its sign
/// pattern (which is constant across the region, so the representative
/// decides the whole region).
pub fn check_lambda_certificate(
    x: &Security,
    is: &InformationStructure,
    cert: &LambdaCertificate,
) -> Result<(), String> {
    let expected = value_regions(x);
    if cert.regions.len() != expected.len()
        || cert
            .regions
            .iter()
            .zip(&expected)
            .any(|(r, e)| r.region != *e)
    {
        return Err("certificate regions do not tile the value line".into());
    }
    for r in &cert.regions {
        for w in 0..x.len() {
            if x.payoff(w) == &r.region.rep {
                continue;
            }
            let total: Rat = (0..is.num_traders())
                .map(|t| r.lambdas[t][is.cell_index(t, w)].clone())
                .sum();
            let signed = (x.payoff(w) - &r.region.rep) * total;
            if signed <= Rat::zero() {
                return Err(format!(
                    "region rep {}: state {w} has non-positive signed sum {}",
                    format_rat(&r.region.rep),
                    format_rat(&signed)
                ));
            }
        }
    }
    Ok(())
}

/// Full decision: a witness, or a certificate covering every region.
pub fn classify_separability(x: &Security, is: &InformationStructure) -> SeparabilityVerdict {
    if let Some(w) = find_nonseparable_witness(x, is) {
        return SeparabilityVerdict::NonSeparable(w);
    }
    let cert = find_lambda_certificate(x, is)
        .expect("no witness in any region implies a lambda everywhere");
    SeparabilityVerdict::Separable(cert)
}

/// Witness data for four distinct payoffs under the crossing pair of
/// two-cell partitions {{1,2},{3,4}} and {{1,4},{2,3}} (state order follows
/// the payoff argument order a,b,c,d).
#[derive(Debug, Clone, PartialEq)]
pub struct FourStateWitness {
    pub q1: Rat,
    pub p1: Rat,
    pub p2: Rat,
    pub q2: Rat,
    pub x: Rat,
    pub y: Rat,
    pub prior: Belief,
    pub value: Rat,
}

/// The crossing partitions used by [`closed_form_four_state_witness`]:
/// trader 1 sees {{0,2},{1,3}}, trader 2 sees {{0,3},{1,2}}.
pub fn crossing_partitions() -> Vec<Vec<Vec<usize>>> {
    vec![
        vec![vec![0, 2], vec![1, 3]],
        vec![vec![0, 3], vec![1, 2]],
    ]
}

/// Closed-form witness for payoffs (a, b, c, d) on four states under the
/// crossing partitions. Requires the mixing weights to land strictly inside
/// (0, 1); returns None otherwise.
pub fn closed_form_four_state_witness(
    a: &Rat,
    b: &Rat,
    c: &Rat,
    d: &Rat,
) -> Option<FourStateWitness> {
    let den = a + b - c - d;
    if den.is_zero() {
        return None;
    }
    let q1 = (a - c) / &den;
    let p1 = (b - d) / &den;
    let p2 = (b - c) / &den;
    let q2 = (a - d) / &den;
    let x = p2.clone();
    let y = p1.clone();
    let inside = |r: &Rat| r > &Rat::zero() && r < &Rat::one();
    if ![&q1, &p1, &p2, &q2, &x].iter().all(|r| inside(r)) {
        return None;
    }
    let one = Rat::one();
    let prior = Belief::from_probs(vec![
        &x * &p1,
        (&one - &x) * &q1,
        (&one - &x) * (&one - &q1),
        &x * (&one - &p1),
    ])
    .ok()?;
    let value = &p1 * a + (&one - &p1) * d;
    let sec = Security::new(vec![a.clone(), b.clone(), c.clone(), d.clone()]);
    let ss = crate::model::StateSpace::numbered(4);
    let is = InformationStructure::new(&ss, crossing_partitions()).expect("valid partitions");
    let w = FourStateWitness {
        q1,
        p1,
        p2,
        q2,
        x,
        y,
        prior,
        value,
    };
    let nw = NonSepWitness {
        prior: w.prior.clone(),
        value: w.value.clone(),
    };
    check_witness(&sec, &is, &nw).ok()?;
    Some(w)
}
