//! Payoff-only classification of securities over four or more states, and
//! the adversarial structure/prior construction for the class that is
//! non-separable under every cost structure.

use crate::model::{Belief, InformationStructure, Security, StateSpace};
use crate::rational::{format_rat, rat_int, Rat};
use crate::separability::{check_witness, NonSepWitness};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("classification needs at least four states, got {0}")]
    TooFewStates(usize),
    #[error("adversarial construction applies only to two-same-side repeated-value securities")]
    WrongClass,
    #[error("repeated-state mass must lie strictly in (0, 1/2)")]
    MassOutOfRange,
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparableKind {
    /// exactly one state pays off the repeated value
    ArrowDebreu,
    /// exactly two states outside, straddling the repeated value
    ThreeValue,
}

/// The four payoff shapes. Exactly one applies to any security over >= 4
/// states, and the shape is invariant under state permutations.
#[derive(Debug, Clone, PartialEq)]
pub enum SecurityClass {
    /// case 0: constant payoff, nothing to trade on
    Constant { value: Rat },
    /// case 1: separable for every information structure
    AlwaysSeparable {
        kind: SeparableKind,
        repeated: Rat,
        outside: Vec<usize>,
    },
    /// case 2: some repeated value d has two other states paying on the same
    /// side of d; non-separable under every cost structure
    NonSeparableForAllCosts {
        /// (a-state, d-state, b-state, d-state)
        states: [usize; 4],
        pay_a: Rat,
        pay_b: Rat,
        pay_d: Rat,
    },
    /// case 3: all payoffs distinct; separable once information is cheap
    /// enough, non-separable when it is expensive
    SeparableForSomeCost,
}

impl SecurityClass {
    pub fn case(&self) -> u8 {
        match self {
            SecurityClass::Constant { .. } => 0,
            SecurityClass::AlwaysSeparable { .. } => 1,
            SecurityClass::NonSeparableForAllCosts { .. } => 2,
            SecurityClass::SeparableForSomeCost => 3,
        }
    }
}

/// Classify by the payoff multiset. A repeated value with two other states
/// on the same side wins over any other reading of the multiset; with >= 4
/// states every repeated-value security is either that shape or has at most
/// two outside states (one, or two straddling).
pub fn classify(x: &Security) -> Result<SecurityClass, ClassifyError> {
    let n = x.len();
    if n < 4 {
        return Err(ClassifyError::TooFewStates(n));
    }
    if x.is_constant() {
        return Ok(SecurityClass::Constant {
            value: x.payoff(0).clone(),
        });
    }
    let mut separable: Option<SecurityClass> = None;
    for d in x.distinct_values() {
        let inside: Vec<usize> = (0..n).filter(|&w| x.payoff(w) == &d).collect();
        if inside.len() < 2 {
            continue;
        }
        let below: Vec<usize> = (0..n).filter(|&w| x.payoff(w) < &d).collect();
        let above: Vec<usize> = (0..n).filter(|&w| x.payoff(w) > &d).collect();
        let same_side = [below, above].into_iter().find(|s| s.len() >= 2);
        if let Some(same) = same_side {
            return Ok(SecurityClass::NonSeparableForAllCosts {
                states: [same[0], inside[0], same[1], inside[1]],
                pay_a: x.payoff(same[0]).clone(),
                pay_b: x.payoff(same[1]).clone(),
                pay_d: d.clone(),
            });
        }
        if separable.is_none() {
            let outside: Vec<usize> = (0..n).filter(|&w| x.payoff(w) != &d).collect();
            let kind = if outside.len() == 1 {
                SeparableKind::ArrowDebreu
            } else {
                SeparableKind::ThreeValue
            };
            separable = Some(SecurityClass::AlwaysSeparable {
                kind,
                repeated: d.clone(),
                outside,
            });
        }
    }
    Ok(separable.unwrap_or(SecurityClass::SeparableForSomeCost))
}

#[derive(Debug, Clone)]
pub struct AdversarialScenario {
    pub structure: InformationStructure,
    pub witness: NonSepWitness,
    /// mass on each repeated-value state actually achieved (equals the
    /// request except on the irrational-root fallback, where it agrees to
    /// far beyond 1e-12)
    pub m: Rat,
    pub states: [usize; 4],
}

fn rat_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let sn = r.numer().sqrt();
    let sd = r.denom().sqrt();
    if &(&sn * &sn) != r.numer() || &(&sd * &sd) != r.denom() {
        return None;
    }
    Some(Rat::new(sn, sd))
}

/// Roots in (0, 1-2m) of the common-expectation equation
/// (p a + m d) / (p + m) = (q b + m d) / (q + m) with q = 1 - p - 2m,
/// expanded to (b-a) p^2 + [(a-b)(1-m) - 2m(d-b)] p + m(1-2m)(d-b) = 0.
/// None when the discriminant is not a rational square.
fn exact_mass_roots(pay_a: &Rat, pay_b: &Rat, pay_d: &Rat, m: &Rat) -> Option<Vec<Rat>> {
    let one = Rat::one();
    let two = rat_int(2);
    let c2 = pay_b - pay_a;
    let c1 = (pay_a - pay_b) * (&one - m) - &two * m * (pay_d - pay_b);
    let c0 = m * (&one - &two * m) * (pay_d - pay_b);
    let upper = &one - &two * m;
    let candidates: Vec<Rat> = if c2.is_zero() {
        // symmetric outside payoffs: the equation is linear
        vec![-&c0 / &c1]
    } else {
        let disc = &c1 * &c1 - rat_int(4) * &c2 * &c0;
        let s = rat_sqrt(&disc)?;
        vec![(-&c1 - &s) / (&two * &c2), (-&c1 + &s) / (&two * &c2)]
    };
    let mut roots: Vec<Rat> = candidates
        .into_iter()
        .filter(|p| p > &Rat::zero() && p < &upper)
        .collect();
    roots.sort();
    roots.dedup();
    Some(roots)
}

/// Invert v -> masses on the common-expectation curve: with both outside
/// payoffs on the same side of d and v strictly between them and d,
/// p = m'(v-d)/(a-v), q = m'(v-d)/(b-v), m' = 1/((v-d)/(a-v)+(v-d)/(b-v)+2).
fn masses_at_value(pay_a: &Rat, pay_b: &Rat, pay_d: &Rat, v: &Rat) -> (Rat, Rat, Rat) {
    let ta = (v - pay_d) / (pay_a - v);
    let tb = (v - pay_d) / (pay_b - v);
    let m = Rat::one() / (&ta + &tb + rat_int(2));
    (&m * &ta, &m * &tb, m)
}

/// When the quadratic root is irrational, bisect the common expectation v
/// instead: the repeated-state mass is continuous and monotone in v, running
/// from 0 at the outside payoffs to 1/2 at d.
fn bisect_mass(pay_a: &Rat, pay_b: &Rat, pay_d: &Rat, m: &Rat) -> (Rat, Rat, Rat, Rat) {
    let below = pay_a < pay_d;
    let (mut lo, mut hi) = if below {
        (pay_a.clone().max(pay_b.clone()), pay_d.clone())
    } else {
        (pay_d.clone(), pay_a.clone().min(pay_b.clone()))
    };
    let mut v = (&lo + &hi) / rat_int(2);
    for _ in 0..100 {
        v = (&lo + &hi) / rat_int(2);
        let (_, _, mv) = masses_at_value(pay_a, pay_b, pay_d, &v);
        if &mv == m {
            break;
        }
        // mass grows as v approaches d
        let toward_d = mv < *m;
        if below == toward_d {
            lo = v.clone();
        } else {
            hi = v.clone();
        }
    }
    let (p, q, mv) = masses_at_value(pay_a, pay_b, pay_d, &v);
    (p, q, mv, v)
}

/// Two traders whose cells pair each same-side state with a repeated-value
/// state (singletons elsewhere), plus a full-support-on-the-four-states
/// prior under which every cell in play has the same conditional
/// expectation: a non-separability witness at every cost level.
pub fn adversarial_structure(x: &Security, m: &Rat) -> Result<AdversarialScenario, ClassifyError> {
    if m <= &Rat::zero() || m >= &Rat::new(1.into(), 2.into()) {
        return Err(ClassifyError::MassOutOfRange);
    }
    let SecurityClass::NonSeparableForAllCosts {
        states,
        pay_a,
        pay_b,
        pay_d,
    } = classify(x)?
    else {
        return Err(ClassifyError::WrongClass);
    };
    let [s1, s2, s3, s4] = states;
    let n = x.len();
    let mut t1 = vec![sorted(vec![s1, s2]), sorted(vec![s3, s4])];
    let mut t2 = vec![sorted(vec![s1, s4]), sorted(vec![s2, s3])];
    for w in (0..n).filter(|w| !states.contains(w)) {
        t1.push(vec![w]);
        t2.push(vec![w]);
    }
    let ss = StateSpace::numbered(n);
    let structure = InformationStructure::new(&ss, vec![t1, t2])
        .map_err(|e| ClassifyError::Internal(e.to_string()))?;

    let roots = exact_mass_roots(&pay_a, &pay_b, &pay_d, m);
    let (p, q, m_hit, v) = match roots {
        Some(roots) => {
            let p = roots.into_iter().next().ok_or_else(|| {
                ClassifyError::Internal(format!(
                    "no admissible mass at m = {}",
                    format_rat(m)
                ))
            })?;
            let q = Rat::one() - &p - rat_int(2) * m;
            let v = (&p * &pay_a + m * &pay_d) / (&p + m);
            (p, q, m.clone(), v)
        }
        None => bisect_mass(&pay_a, &pay_b, &pay_d, m),
    };

    let mut probs = vec![Rat::zero(); n];
    probs[s1] = p;
    probs[s2] = m_hit.clone();
    probs[s3] = q;
    probs[s4] = m_hit.clone();
    let prior = Belief::from_probs(probs).map_err(|e| ClassifyError::Internal(e.to_string()))?;
    let witness = NonSepWitness { prior, value: v };
    check_witness(x, &structure, &witness).map_err(ClassifyError::Internal)?;
    Ok(AdversarialScenario {
        structure,
        witness,
        m: m_hit,
        states,
    })
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_to_f64};
    use itertools::Itertools;

    fn sec(payoffs: &[i64]) -> Security {
        Security::new(payoffs.iter().map(|&p| rat_int(p)).collect())
    }

    #[test]
    fn four_state_case_table() {
        assert_eq!(classify(&sec(&[5, 5, 5, 5])).unwrap().case(), 0);
        assert_eq!(classify(&sec(&[0, 1, 1, 1])).unwrap().case(), 1);
        assert_eq!(classify(&sec(&[0, 1, 1, 2])).unwrap().case(), 1);
        assert_eq!(classify(&sec(&[0, 1, 0, 1])).unwrap().case(), 2);
        assert_eq!(classify(&sec(&[0, 1, 2, 3])).unwrap().case(), 3);
    }

    #[test]
    fn separable_subkinds() {
        match classify(&sec(&[0, 1, 1, 1])).unwrap() {
            SecurityClass::AlwaysSeparable { kind, outside, .. } => {
                assert_eq!(kind, SeparableKind::ArrowDebreu);
                assert_eq!(outside, vec![0]);
            }
            other => panic!("{other:?}"),
        }
        match classify(&sec(&[0, 1, 1, 2])).unwrap() {
            SecurityClass::AlwaysSeparable { kind, outside, .. } => {
                assert_eq!(kind, SeparableKind::ThreeValue);
                assert_eq!(outside, vec![0, 3]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn permutation_invariance() {
        for payoffs in [
            [5, 5, 5, 5],
            [0, 1, 1, 1],
            [0, 1, 1, 2],
            [0, 1, 0, 1],
            [0, 1, 2, 3],
        ] {
            let base = classify(&sec(&payoffs)).unwrap().case();
            for perm in (0..4).permutations(4) {
                let permuted: Vec<i64> = perm.iter().map(|&i| payoffs[i]).collect();
                assert_eq!(
                    classify(&sec(&permuted)).unwrap().case(),
                    base,
                    "{permuted:?}"
                );
            }
        }
    }

    #[test]
    fn rejects_small_state_spaces() {
        assert_eq!(
            classify(&sec(&[0, 1, 2])),
            Err(ClassifyError::TooFewStates(3))
        );
    }

    #[test]
    fn two_repeated_values_is_nonseparable_shape() {
        // outside the repeated 0s, both 1s pay above
        assert_eq!(classify(&sec(&[0, 0, 1, 1])).unwrap().case(), 2);
        assert_eq!(classify(&sec(&[0, 0, 1, 2, 2])).unwrap().case(), 2);
    }

    #[test]
    fn symmetric_adversarial_prior_is_uniform() {
        let x = sec(&[0, 1, 0, 1]);
        let s = adversarial_structure(&x, &rat(1, 4)).unwrap();
        assert_eq!(s.witness.prior, Belief::uniform(4));
        assert_eq!(s.witness.value, rat(1, 2));
        assert_eq!(s.m, rat(1, 4));
    }

    #[test]
    fn adversarial_witness_checks_across_masses() {
        let x = sec(&[0, 1, 0, 1]);
        for m in [rat(3, 10), rat(2, 5), rat(9, 20), rat(49, 100)] {
            let s = adversarial_structure(&x, &m).unwrap();
            assert_eq!(s.m, m);
            assert!(check_witness(&x, &s.structure, &s.witness).is_ok());
        }
    }

    #[test]
    fn mass_near_half_pushes_value_to_repeated_payoff() {
        // the classifier keys on the repeated 0s here, so v -> 0
        let x = sec(&[0, 1, 0, 1]);
        let s = adversarial_structure(&x, &rat(499, 1000)).unwrap();
        assert!(rat_to_f64(&s.witness.value) < 0.1);
        // with the 5s repeated, v approaches 5 instead
        let x = sec(&[0, 5, 1, 5]);
        let s = adversarial_structure(&x, &rat(499, 1000)).unwrap();
        assert!(rat_to_f64(&s.witness.value) > 4.5);
    }

    #[test]
    fn irrational_root_falls_back_to_value_bisection() {
        // (b-a) p^2 quadratic with non-square discriminant 769/100
        let x = sec(&[0, 5, 1, 5]);
        let m = rat(3, 10);
        assert!(exact_mass_roots(&rat_int(0), &rat_int(1), &rat_int(5), &m).is_none());
        let s = adversarial_structure(&x, &m).unwrap();
        assert!(check_witness(&x, &s.structure, &s.witness).is_ok());
        assert!((rat_to_f64(&s.m) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn extra_states_get_singleton_cells_and_zero_mass() {
        let x = sec(&[0, 1, 0, 1, 7]);
        let s = adversarial_structure(&x, &rat(1, 4)).unwrap();
        assert_eq!(s.witness.prior.prob(4), &Rat::zero());
        assert_eq!(s.structure.cells(0).len(), 3);
        assert!(check_witness(&x, &s.structure, &s.witness).is_ok());
    }

    #[test]
    fn adversarial_rejects_other_shapes_and_masses() {
        assert_eq!(
            adversarial_structure(&sec(&[0, 1, 2, 3]), &rat(1, 4)).unwrap_err(),
            ClassifyError::WrongClass
        );
        assert_eq!(
            adversarial_structure(&sec(&[0, 1, 0, 1]), &rat(1, 2)).unwrap_err(),
            ClassifyError::MassOutOfRange
        );
    }
}
