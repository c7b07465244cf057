use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;

use super::entropy::EntropyReport;
use super::markov::{stationarity_residual, stationary_for_shape};
use super::spec::{BlockShape, JointProcessSpec, STATIONARITY_TOLERANCE};
use super::{ModelError, SeqRef, Sequence, Side};

/// A validated, immutable joint process. Construction is the only place a
/// spec can be rejected; sampling and density evaluation never fail on
/// account of the spec itself.
#[derive(Debug)]
pub struct ProcessModel {
    spec: JointProcessSpec,
    id: String,
    pub(crate) kind: ModelKind,
    analytic: OnceLock<Result<EntropyReport, ModelError>>,
}

#[derive(Debug)]
pub(crate) enum ModelKind {
    Iid(IidTables),
    Gaussian(GaussianParams),
    Markov(MarkovTables),
}

#[derive(Debug)]
pub(crate) struct IidTables {
    pub k1: usize,
    pub k2: usize,
    pub joint: Vec<f64>,
    pub log_joint: Vec<f64>,
    pub log_marginal: [Vec<f64>; 2],
    sampler: WeightedIndex<f64>,
}

#[derive(Debug)]
pub(crate) struct GaussianParams {
    pub rho: f64,
    /// log2 of the bivariate normalizing constant 1 / (2 pi sqrt(1 - rho^2)).
    log2_norm: f64,
    one_minus_rho2: f64,
}

#[derive(Debug)]
pub(crate) struct MarkovTables {
    pub shape: BlockShape,
    pub kernel: Vec<f64>,
    log_kernel: Vec<f64>,
    pub initial: Vec<f64>,
    log_initial: Vec<f64>,
    initial_sampler: WeightedIndex<f64>,
    row_samplers: Vec<WeightedIndex<f64>>,
}

fn log2_or_neg_inf(p: f64) -> f64 {
    if p > 0.0 {
        p.log2()
    } else {
        f64::NEG_INFINITY
    }
}

fn sampler(weights: &[f64]) -> WeightedIndex<f64> {
    WeightedIndex::new(weights.iter().copied()).expect("validated pmf has positive mass")
}

impl ProcessModel {
    pub fn new(spec: JointProcessSpec) -> Result<Self, ModelError> {
        spec.check_shape()?;
        let kind = match &spec {
            JointProcessSpec::IidDiscrete {
                alphabet_size_1: k1,
                alphabet_size_2: k2,
                joint_pmf,
            } => {
                let (k1, k2) = (*k1, *k2);
                let mut m1 = vec![0.0; k1];
                let mut m2 = vec![0.0; k2];
                for a in 0..k1 {
                    for b in 0..k2 {
                        let p = joint_pmf[a * k2 + b];
                        m1[a] += p;
                        m2[b] += p;
                    }
                }
                ModelKind::Iid(IidTables {
                    k1,
                    k2,
                    joint: joint_pmf.clone(),
                    log_joint: joint_pmf.iter().copied().map(log2_or_neg_inf).collect(),
                    log_marginal: [
                        m1.iter().copied().map(log2_or_neg_inf).collect(),
                        m2.iter().copied().map(log2_or_neg_inf).collect(),
                    ],
                    sampler: sampler(joint_pmf),
                })
            }
            JointProcessSpec::IidGaussian { rho } => {
                let one_minus_rho2 = 1.0 - rho * rho;
                ModelKind::Gaussian(GaussianParams {
                    rho: *rho,
                    log2_norm: -(2.0 * PI * one_minus_rho2.sqrt()).log2(),
                    one_minus_rho2,
                })
            }
            JointProcessSpec::MarkovDiscrete {
                order_l,
                pair_alphabet_sizes,
                kernel,
                initial_block,
            } => {
                let shape = BlockShape::new(*order_l, *pair_alphabet_sizes)?;
                let initial = match initial_block {
                    Some(init) => {
                        let residual = stationarity_residual(&shape, kernel, init);
                        if residual > STATIONARITY_TOLERANCE {
                            return Err(ModelError::InvalidSpec(format!(
                                "initial_block is not stationary under the kernel (residual {residual:e})"
                            )));
                        }
                        init.clone()
                    }
                    None => stationary_for_shape(&shape, kernel)?,
                };
                ModelKind::Markov(MarkovTables {
                    shape,
                    log_kernel: kernel.iter().copied().map(log2_or_neg_inf).collect(),
                    row_samplers: kernel.chunks(shape.pairs).map(sampler).collect(),
                    kernel: kernel.clone(),
                    log_initial: initial.iter().copied().map(log2_or_neg_inf).collect(),
                    initial_sampler: sampler(&initial),
                    initial,
                })
            }
        };
        Ok(ProcessModel {
            id: spec.id(),
            spec,
            kind,
            analytic: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &JointProcessSpec {
        &self.spec
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_discrete(&self) -> bool {
        self.spec.is_discrete()
    }

    /// Smallest admissible entry length.
    pub fn min_length(&self) -> usize {
        match &self.kind {
            ModelKind::Markov(t) => t.shape.order,
            _ => 1,
        }
    }

    /// Analytic rates, computed once and cached.
    pub fn entropy_rates(&self) -> Result<EntropyReport, ModelError> {
        self.analytic
            .get_or_init(|| super::entropy::analytic(self))
            .clone()
    }

    /// Draws the first `m` coordinates of the pair process.
    pub fn sample_pair<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<(Sequence, Sequence), ModelError> {
        self.check_length(m)?;
        Ok(match &self.kind {
            ModelKind::Iid(t) => {
                let mut u1 = Vec::with_capacity(m);
                let mut u2 = Vec::with_capacity(m);
                for _ in 0..m {
                    let cell = t.sampler.sample(rng);
                    u1.push((cell / t.k2) as u32);
                    u2.push((cell % t.k2) as u32);
                }
                (Sequence::Symbols(u1), Sequence::Symbols(u2))
            }
            ModelKind::Gaussian(g) => {
                let noise_scale = g.one_minus_rho2.sqrt();
                let mut u1 = Vec::with_capacity(m);
                let mut u2 = Vec::with_capacity(m);
                for _ in 0..m {
                    let x: f64 = rng.sample(StandardNormal);
                    let z: f64 = rng.sample(StandardNormal);
                    u1.push(x);
                    u2.push(g.rho * x + noise_scale * z);
                }
                (Sequence::Reals(u1), Sequence::Reals(u2))
            }
            ModelKind::Markov(t) => {
                let shape = &t.shape;
                let mut u1 = Vec::with_capacity(m);
                let mut u2 = Vec::with_capacity(m);
                let mut block = t.initial_sampler.sample(rng);
                let mut stride = shape.blocks / shape.pairs;
                for _ in 0..shape.order {
                    let (a, b) = shape.split_pair((block / stride) % shape.pairs);
                    u1.push(a);
                    u2.push(b);
                    stride /= shape.pairs.max(1);
                }
                for _ in shape.order..m {
                    let pair = t.row_samplers[block].sample(rng);
                    let (a, b) = shape.split_pair(pair);
                    u1.push(a);
                    u2.push(b);
                    block = shape.shift(block, pair);
                }
                (Sequence::Symbols(u1), Sequence::Symbols(u2))
            }
        })
    }

    /// log2 of the joint density (pmf for discrete processes) of `(u1, u2)`.
    /// Returns negative infinity when the pair has zero probability.
    pub fn log_joint_density(&self, u1: SeqRef<'_>, u2: SeqRef<'_>) -> Result<f64, ModelError> {
        if u1.len() != u2.len() {
            return Err(ModelError::LengthMismatch {
                len1: u1.len(),
                len2: u2.len(),
            });
        }
        self.check_length(u1.len())?;
        self.check_values(Side::First, u1)?;
        self.check_values(Side::Second, u2)?;
        Ok(self.log_joint_unchecked(u1, u2))
    }

    /// log2 of the marginal density of one coordinate.
    pub fn log_marginal_density(&self, side: Side, u: SeqRef<'_>) -> Result<f64, ModelError> {
        self.check_length(u.len())?;
        self.check_values(side, u)?;
        Ok(self.log_marginal_unchecked(side, u))
    }

    fn check_length(&self, m: usize) -> Result<(), ModelError> {
        if m == 0 {
            return Err(ModelError::EmptySequence);
        }
        if m < self.min_length() {
            return Err(ModelError::TooShort {
                m,
                order: self.min_length(),
            });
        }
        Ok(())
    }

    /// Checks that `u` has the right value kind and lies in the alphabet.
    pub fn check_values(&self, side: Side, u: SeqRef<'_>) -> Result<(), ModelError> {
        match (self.spec.alphabet_sizes(), u) {
            (Some((k1, k2)), SeqRef::Symbols(s)) => {
                let k = if side == Side::First { k1 } else { k2 };
                match s.iter().find(|&&x| x as usize >= k) {
                    Some(&symbol) => Err(ModelError::SymbolOutOfRange {
                        side: side.number(),
                        symbol,
                        alphabet: k,
                    }),
                    None => Ok(()),
                }
            }
            (None, SeqRef::Reals(_)) => Ok(()),
            (Some(_), SeqRef::Reals(_)) => Err(ModelError::KindMismatch {
                expected: "integer symbols",
            }),
            (None, SeqRef::Symbols(_)) => Err(ModelError::KindMismatch { expected: "reals" }),
        }
    }

    /// Joint log density without validation; inputs must already satisfy
    /// the length and alphabet checks.
    pub(crate) fn log_joint_unchecked(&self, u1: SeqRef<'_>, u2: SeqRef<'_>) -> f64 {
        match (&self.kind, u1, u2) {
            (ModelKind::Iid(t), SeqRef::Symbols(a), SeqRef::Symbols(b)) => a
                .iter()
                .zip(b)
                .map(|(&x, &y)| t.log_joint[x as usize * t.k2 + y as usize])
                .sum(),
            (ModelKind::Gaussian(g), SeqRef::Reals(x), SeqRef::Reals(y)) => {
                let quad: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(&x, &y)| x * x - 2.0 * g.rho * x * y + y * y)
                    .sum();
                x.len() as f64 * g.log2_norm - quad / (2.0 * g.one_minus_rho2 * LN_2)
            }
            (ModelKind::Markov(t), SeqRef::Symbols(a), SeqRef::Symbols(b)) => {
                let shape = &t.shape;
                let l = shape.order;
                let mut block = 0usize;
                for i in 0..l {
                    block = block * shape.pairs + shape.pair(a[i], b[i]);
                }
                let mut total = t.log_initial[block];
                for i in l..a.len() {
                    let pair = shape.pair(a[i], b[i]);
                    total += t.log_kernel[block * shape.pairs + pair];
                    block = shape.shift(block, pair);
                }
                total
            }
            _ => unreachable!("value kind checked by caller"),
        }
    }

    pub(crate) fn log_marginal_unchecked(&self, side: Side, u: SeqRef<'_>) -> f64 {
        let idx = if side == Side::First { 0 } else { 1 };
        match (&self.kind, u) {
            (ModelKind::Iid(t), SeqRef::Symbols(s)) => {
                s.iter().map(|&x| t.log_marginal[idx][x as usize]).sum()
            }
            (ModelKind::Gaussian(_), SeqRef::Reals(x)) => {
                let norm = -0.5 * (2.0 * PI).log2();
                x.iter().map(|&v| norm - v * v / (2.0 * LN_2)).sum()
            }
            (ModelKind::Markov(t), SeqRef::Symbols(s)) => forward_marginal(t, side, s),
            _ => unreachable!("value kind checked by caller"),
        }
    }
}

/// Exact marginal log2 pmf of one coordinate of a Markov pair process by the
/// scaled forward recursion over the hidden coordinate's last l symbols.
fn forward_marginal(t: &MarkovTables, side: Side, observed: &[u32]) -> f64 {
    let shape = &t.shape;
    let l = shape.order;
    let hidden_k = if side == Side::First { shape.k2 } else { shape.k1 };
    let hidden_states = hidden_k.pow(l as u32);
    let pair = |obs: u32, hid: u32| match side {
        Side::First => shape.pair(obs, hid),
        Side::Second => shape.pair(hid, obs),
    };
    // Block index of the window ending at `end` (exclusive) with hidden tuple `h`.
    let block_of = |end: usize, h: usize| {
        let mut block = 0usize;
        let mut stride = hidden_states / hidden_k;
        for j in 0..l {
            let hid = ((h / stride) % hidden_k) as u32;
            block = block * shape.pairs + pair(observed[end - l + j], hid);
            stride /= hidden_k.max(1);
        }
        block
    };

    let mut alpha: Vec<f64> = (0..hidden_states).map(|h| t.initial[block_of(l, h)]).collect();
    let mut log_total = 0.0;
    let mut normalize = |alpha: &mut Vec<f64>| -> bool {
        let c: f64 = alpha.iter().sum();
        if c <= 0.0 {
            return false;
        }
        log_total += c.log2();
        alpha.iter_mut().for_each(|a| *a /= c);
        true
    };
    if !normalize(&mut alpha) {
        return f64::NEG_INFINITY;
    }
    let mut next = vec![0.0; hidden_states];
    for end in l..observed.len() {
        next.iter_mut().for_each(|x| *x = 0.0);
        let obs = observed[end];
        for (h, &a) in alpha.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = block_of(end, h) * shape.pairs;
            for hid in 0..hidden_k {
                let p = t.kernel[row + pair(obs, hid as u32)];
                if p > 0.0 {
                    next[(h * hidden_k) % hidden_states + hid] += a * p;
                }
            }
        }
        std::mem::swap(&mut alpha, &mut next);
        if !normalize(&mut alpha) {
            return f64::NEG_INFINITY;
        }
    }
    log_total
}
