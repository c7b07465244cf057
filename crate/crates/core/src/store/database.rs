use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::StoreError;
use crate::process::{JointProcessSpec, ProcessModel, SeqRef, Sequence, Side};
use crate::seed::rng_for;

/// Default cap on `n * m`, the number of scalar values per database.
pub const DEFAULT_MAX_VALUES: u64 = 1_000_000_000;
/// Environment variable that overrides [`DEFAULT_MAX_VALUES`].
pub const MAX_VALUES_ENV: &str = "DBMATCH_MAX_VALUES";

/// Resource cap in effect: the environment override if set and valid,
/// otherwise the default.
pub fn max_values_from_env() -> u64 {
    std::env::var(MAX_VALUES_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_VALUES)
}

/// Flat row-major storage of `n` entries of length `m`.
#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Symbols(Vec<u32>),
    Reals(Vec<f64>),
}

impl Entries {
    pub fn len(&self) -> usize {
        match self {
            Entries::Symbols(v) => v.len(),
            Entries::Reals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An ordered list of entries. Ignoring the order gives the multiset view.
#[derive(Clone, Debug, PartialEq)]
pub struct UnlabeledDatabase {
    m: usize,
    n: usize,
    entries: Entries,
    spec_id: String,
}

impl UnlabeledDatabase {
    pub fn new(m: usize, n: usize, entries: Entries, spec_id: impl Into<String>) -> Result<Self, StoreError> {
        if m == 0 || n == 0 {
            return Err(StoreError::Invalid(format!("database dimensions must be positive (m={m}, n={n})")));
        }
        if entries.len() != m * n {
            return Err(StoreError::Invalid(format!(
                "expected {} values for n={n}, m={m}, got {}",
                m * n,
                entries.len()
            )));
        }
        Ok(UnlabeledDatabase {
            m,
            n,
            entries,
            spec_id: spec_id.into(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec_id(&self) -> &str {
        &self.spec_id
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> SeqRef<'_> {
        let range = i * self.m..(i + 1) * self.m;
        match &self.entries {
            Entries::Symbols(v) => SeqRef::Symbols(&v[range]),
            Entries::Reals(v) => SeqRef::Reals(&v[range]),
        }
    }

    /// Checks value kind and alphabet of every entry against `model`, as the
    /// given coordinate of the pair process.
    pub fn check_against(&self, model: &ProcessModel, side: Side) -> Result<(), StoreError> {
        if self.m < model.min_length() {
            return Err(StoreError::Invalid(format!(
                "entry length {} is below the process order {}",
                self.m,
                model.min_length()
            )));
        }
        for i in 0..self.n {
            model
                .check_values(side, self.entry(i))
                .map_err(|e| StoreError::Invalid(format!("entry {i}: {e}")))?;
        }
        Ok(())
    }
}

/// Labels are zero-based: `theta[i]` is the member identity of entry `i`.
pub(crate) fn check_permutation(theta: &[usize], n: usize) -> Result<(), StoreError> {
    if theta.len() != n {
        return Err(StoreError::Invalid(format!("labeling has length {}, expected {n}", theta.len())));
    }
    let mut seen = vec![false; n];
    for &t in theta {
        if t >= n || std::mem::replace(&mut seen[t], true) {
            return Err(StoreError::Invalid("labeling is not a bijection on [n]".into()));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDatabase {
    base: UnlabeledDatabase,
    theta: Vec<usize>,
}

impl LabeledDatabase {
    pub fn new(base: UnlabeledDatabase, theta: Vec<usize>) -> Result<Self, StoreError> {
        check_permutation(&theta, base.n)?;
        Ok(LabeledDatabase { base, theta })
    }

    pub fn base(&self) -> &UnlabeledDatabase {
        &self.base
    }

    pub fn theta(&self) -> &[usize] {
        &self.theta
    }

    pub fn into_parts(self) -> (UnlabeledDatabase, Vec<usize>) {
        (self.base, self.theta)
    }
}

/// Two labeled databases whose matching entries were drawn jointly.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedPair {
    pub db1: LabeledDatabase,
    pub db2: LabeledDatabase,
    pub spec: JointProcessSpec,
    pub seed: u64,
}

impl CorrelatedPair {
    pub fn m(&self) -> usize {
        self.db1.base.m
    }

    pub fn n(&self) -> usize {
        self.db1.base.n
    }

    /// Checks the cross-database invariants.
    pub fn validate(&self) -> Result<(), StoreError> {
        let (a, b) = (&self.db1.base, &self.db2.base);
        if a.n != b.n || a.m != b.m {
            return Err(StoreError::Invalid(format!(
                "database shapes differ: {}x{} vs {}x{}",
                a.n, a.m, b.n, b.m
            )));
        }
        let model = ProcessModel::new(self.spec.clone())?;
        a.check_against(&model, Side::First)?;
        b.check_against(&model, Side::Second)
    }

    /// The attacker's view: DB1 with labels, DB2 without.
    pub fn attacker_view(&self) -> (&LabeledDatabase, &UnlabeledDatabase) {
        (&self.db1, &self.db2.base)
    }
}

#[derive(Clone, Debug)]
pub struct GenerateOptions {
    /// Cap on `n * m` per database.
    pub max_values: u64,
    /// Fix DB1's labeling to the identity. Equivalent up to relabeling.
    pub identity_theta1: bool,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            max_values: max_values_from_env(),
            identity_theta1: false,
        }
    }
}

fn random_permutation(n: usize, seed: u64, tag: &str) -> Vec<usize> {
    let mut theta: Vec<usize> = (0..n).collect();
    theta.shuffle(&mut rng_for(seed, tag, 0));
    theta
}

/// Generates a correlated pair with `n` members and entries of length `m`.
///
/// Member `v`'s entry pair is drawn from the stream `(seed, "member", v)`, so
/// a larger `m` extends every entry without changing its prefix, and the
/// result does not depend on the thread count. Both labelings are independent
/// uniform permutations.
pub fn generate_correlated_pair(
    model: &ProcessModel,
    m: usize,
    n: usize,
    seed: u64,
    options: &GenerateOptions,
) -> Result<CorrelatedPair, StoreError> {
    if m == 0 || n == 0 {
        return Err(StoreError::Invalid(format!("m and n must be at least 1 (m={m}, n={n})")));
    }
    if n > u32::MAX as usize {
        return Err(StoreError::ResourceCap(format!("n={n} exceeds the 32-bit label range")));
    }
    let values = (n as u128) * (m as u128);
    if values > options.max_values as u128 {
        return Err(StoreError::ResourceCap(format!(
            "n*m = {values} exceeds the cap of {} values (set {MAX_VALUES_ENV} to change it)",
            options.max_values
        )));
    }

    let members: Vec<(Sequence, Sequence)> = (0..n as u64)
        .into_par_iter()
        .map(|v| model.sample_pair(m, &mut rng_for(seed, "member", v)))
        .collect::<Result<_, _>>()?;

    let theta1 = if options.identity_theta1 {
        (0..n).collect()
    } else {
        random_permutation(n, seed, "theta1")
    };
    let theta2 = random_permutation(n, seed, "theta2");

    let lay_out = |theta: &[usize], pick: fn(&(Sequence, Sequence)) -> &Sequence| -> Entries {
        if model.is_discrete() {
            let mut flat = Vec::with_capacity(n * m);
            for &member in theta {
                flat.extend_from_slice(pick(&members[member]).symbols().unwrap());
            }
            Entries::Symbols(flat)
        } else {
            let mut flat = Vec::with_capacity(n * m);
            for &member in theta {
                flat.extend_from_slice(pick(&members[member]).reals().unwrap());
            }
            Entries::Reals(flat)
        }
    };
    let entries1 = lay_out(&theta1, |p| &p.0);
    let entries2 = lay_out(&theta2, |p| &p.1);
    let id = model.id();
    Ok(CorrelatedPair {
        db1: LabeledDatabase::new(UnlabeledDatabase::new(m, n, entries1, id)?, theta1)?,
        db2: LabeledDatabase::new(UnlabeledDatabase::new(m, n, entries2, id)?, theta2)?,
        spec: model.spec().clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_bijective_labeling() {
        let base = UnlabeledDatabase::new(1, 3, Entries::Symbols(vec![0, 0, 0]), "x").unwrap();
        assert!(LabeledDatabase::new(base.clone(), vec![0, 1, 1]).is_err());
        assert!(LabeledDatabase::new(base.clone(), vec![0, 1, 3]).is_err());
        assert!(LabeledDatabase::new(base, vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn rejects_wrong_entry_count() {
        assert!(UnlabeledDatabase::new(2, 3, Entries::Symbols(vec![0; 5]), "x").is_err());
        assert!(UnlabeledDatabase::new(0, 3, Entries::Symbols(vec![]), "x").is_err());
    }

    #[test]
    fn resource_cap_is_enforced() {
        let model = ProcessModel::new(JointProcessSpec::IidGaussian { rho: 0.5 }).unwrap();
        let options = GenerateOptions {
            max_values: 100,
            identity_theta1: false,
        };
        let err = generate_correlated_pair(&model, 11, 10, 0, &options).unwrap_err();
        assert!(matches!(err, StoreError::ResourceCap(_)), "{err}");
        assert!(generate_correlated_pair(&model, 10, 10, 0, &options).is_ok());
    }
}
