use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_shapes, MatchError, MatchResult, MatcherKind};
use crate::process::{ProcessModel, SeqRef, Side};
use crate::seed::rng_for;
use crate::store::{LabeledDatabase, UnlabeledDatabase};

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypicalityConfig {
    pub epsilon: f64,
    /// Also require each entry to be marginally typical.
    #[serde(default)]
    pub strict: bool,
}

impl Default for TypicalityConfig {
    fn default() -> Self {
        TypicalityConfig {
            epsilon: DEFAULT_EPSILON,
            strict: false,
        }
    }
}

/// The joint typicality test with the process rates resolved once.
#[derive(Clone, Copy, Debug)]
pub struct TypicalityTest {
    pub epsilon: f64,
    pub strict: bool,
    h1: f64,
    h2: f64,
    h12: f64,
}

fn within(log_density: f64, m: usize, rate: f64, epsilon: f64) -> bool {
    // -inf densities give an infinite empirical rate and fail here
    let empirical = -log_density / m as f64;
    (empirical - rate).abs() <= epsilon
}

impl TypicalityTest {
    pub fn new(model: &ProcessModel, config: TypicalityConfig) -> Result<Self, MatchError> {
        if !(config.epsilon > 0.0 && config.epsilon.is_finite()) {
            return Err(MatchError::InvalidEpsilon(config.epsilon));
        }
        let rates = model.entropy_rates()?;
        Ok(TypicalityTest {
            epsilon: config.epsilon,
            strict: config.strict,
            h1: rates.h1,
            h2: rates.h2,
            h12: rates.h12,
        })
    }

    fn joint(&self, model: &ProcessModel, u1: SeqRef<'_>, u2: SeqRef<'_>) -> bool {
        within(model.log_joint_unchecked(u1, u2), u1.len(), self.h12, self.epsilon)
    }

    fn marginal(&self, model: &ProcessModel, side: Side, u: SeqRef<'_>) -> bool {
        let rate = if side == Side::First { self.h1 } else { self.h2 };
        within(model.log_marginal_unchecked(side, u), u.len(), rate, self.epsilon)
    }

    /// Inputs must already be validated against `model`.
    pub(crate) fn check(&self, model: &ProcessModel, u1: SeqRef<'_>, u2: SeqRef<'_>) -> bool {
        self.joint(model, u1, u2)
            && (!self.strict || (self.marginal(model, Side::First, u1) && self.marginal(model, Side::Second, u2)))
    }
}

/// True iff `|-(1/m) log2 f(u1, u2) - h12| <= epsilon` (and, in strict mode,
/// the analogous marginal conditions hold).
pub fn is_jointly_typical(
    model: &ProcessModel,
    config: TypicalityConfig,
    u1: SeqRef<'_>,
    u2: SeqRef<'_>,
) -> Result<bool, MatchError> {
    let test = TypicalityTest::new(model, config)?;
    // validates lengths and alphabets
    model.log_joint_density(u1, u2)?;
    Ok(test.check(model, u1, u2))
}

/// Joint-typicality matching.
///
/// Each DB2 entry claims the label of its unique jointly typical DB1 entry.
/// Entries with no or several typical partners, and every claimant of a
/// label claimed more than once, go to the ambiguity set. The labels left
/// unclaimed are then dealt to the ambiguity set uniformly at random,
/// without replacement, from the stream `(seed, "ambiguity_fill", 0)`.
pub fn typicality_match(
    db1: &LabeledDatabase,
    db2: &UnlabeledDatabase,
    model: &ProcessModel,
    config: TypicalityConfig,
    seed: u64,
) -> Result<MatchResult, MatchError> {
    check_shapes(db1, db2, model)?;
    let test = TypicalityTest::new(model, config)?;
    let n = db2.n();
    let base1 = db1.base();

    // Strict mode: marginal typicality is a per-entry property.
    let (marg1, marg2): (Vec<bool>, Vec<bool>) = if test.strict {
        (
            (0..n).into_par_iter().map(|i| test.marginal(model, Side::First, base1.entry(i))).collect(),
            (0..n).into_par_iter().map(|i| test.marginal(model, Side::Second, db2.entry(i))).collect(),
        )
    } else {
        (vec![true; n], vec![true; n])
    };

    let claims: Vec<Option<usize>> = (0..n)
        .into_par_iter()
        .map(|i2| {
            if !marg2[i2] {
                return None;
            }
            let u2 = db2.entry(i2);
            let mut found = None;
            for i1 in 0..n {
                if marg1[i1] && test.joint(model, base1.entry(i1), u2) {
                    if found.is_some() {
                        return None;
                    }
                    found = Some(i1);
                }
            }
            found.map(|i1| db1.theta()[i1])
        })
        .collect();

    let mut claim_count = vec![0usize; n];
    for label in claims.iter().flatten() {
        claim_count[*label] += 1;
    }
    let mut theta_hat = vec![usize::MAX; n];
    let mut ambiguity_set = Vec::new();
    for (i2, claim) in claims.iter().enumerate() {
        match claim {
            Some(label) if claim_count[*label] == 1 => theta_hat[i2] = *label,
            _ => ambiguity_set.push(i2),
        }
    }
    let mut leftover: Vec<usize> = (0..n).filter(|&label| claim_count[label] != 1).collect();
    debug_assert_eq!(leftover.len(), ambiguity_set.len());
    leftover.shuffle(&mut rng_for(seed, "ambiguity_fill", 0));
    for (&i2, label) in ambiguity_set.iter().zip(leftover) {
        theta_hat[i2] = label;
    }

    Ok(MatchResult {
        matcher_kind: MatcherKind::Typicality,
        epsilon: Some(config.epsilon),
        theta_hat,
        ambiguity_set,
        success_fraction: None,
        per_entry_correct: None,
    })
}

