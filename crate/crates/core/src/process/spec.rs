use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ModelError;

/// Tolerance on the total mass of every pmf and kernel row.
pub const PMF_TOLERANCE: f64 = 1e-12;
/// Tolerance for checking that a supplied initial block is stationary.
pub const STATIONARITY_TOLERANCE: f64 = 1e-9;
/// Largest number of l-blocks of pairs a Markov spec may have.
pub const MAX_BLOCK_STATES: usize = 10_000;

/// Generative model of one matching entry pair.
///
/// All pmfs are flat row-major arrays. For `IidDiscrete` the row index is the
/// symbol of the first coordinate and the column the symbol of the second.
/// For `MarkovDiscrete` a pair `(a, b)` is encoded as `a * k2 + b`, an l-block
/// of pairs is encoded base `k1 * k2` with the oldest pair most significant,
/// and `kernel` has one row per l-block and one column per next pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum JointProcessSpec {
    IidDiscrete {
        alphabet_size_1: usize,
        alphabet_size_2: usize,
        joint_pmf: Vec<f64>,
    },
    IidGaussian {
        rho: f64,
    },
    MarkovDiscrete {
        order_l: usize,
        pair_alphabet_sizes: [usize; 2],
        kernel: Vec<f64>,
        /// Omitted means "use the stationary distribution of `kernel`".
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial_block: Option<Vec<f64>>,
    },
}

impl JointProcessSpec {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::InvalidSpec(format!("malformed spec JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization is infallible")
    }

    /// Short stable identifier: the first 16 hex digits of the SHA-256 of the
    /// compact JSON encoding.
    pub fn id(&self) -> String {
        let compact = serde_json::to_vec(self).expect("spec serialization is infallible");
        let digest = Sha256::digest(&compact);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, JointProcessSpec::IidGaussian { .. })
    }

    /// Alphabet sizes `(k1, k2)` of the two coordinates, for discrete variants.
    pub fn alphabet_sizes(&self) -> Option<(usize, usize)> {
        match self {
            JointProcessSpec::IidDiscrete {
                alphabet_size_1,
                alphabet_size_2,
                ..
            } => Some((*alphabet_size_1, *alphabet_size_2)),
            JointProcessSpec::MarkovDiscrete {
                pair_alphabet_sizes, ..
            } => Some((pair_alphabet_sizes[0], pair_alphabet_sizes[1])),
            JointProcessSpec::IidGaussian { .. } => None,
        }
    }

    /// Checks every structural and stochastic invariant except stationarity
    /// of a Markov initial block, which needs the block-chain machinery.
    pub(crate) fn check_shape(&self) -> Result<(), ModelError> {
        match self {
            JointProcessSpec::IidDiscrete {
                alphabet_size_1,
                alphabet_size_2,
                joint_pmf,
            } => {
                if *alphabet_size_1 == 0 || *alphabet_size_2 == 0 {
                    return Err(ModelError::InvalidSpec("alphabet sizes must be positive".into()));
                }
                let cells = alphabet_size_1
                    .checked_mul(*alphabet_size_2)
                    .filter(|&c| c <= u32::MAX as usize)
                    .ok_or_else(|| ModelError::InvalidSpec("alphabet too large".into()))?;
                if joint_pmf.len() != cells {
                    return Err(ModelError::InvalidSpec(format!(
                        "joint_pmf has {} entries, expected {alphabet_size_1}x{alphabet_size_2} = {cells}",
                        joint_pmf.len()
                    )));
                }
                check_pmf(joint_pmf, "joint_pmf")
            }
            JointProcessSpec::IidGaussian { rho } => {
                if !rho.is_finite() || rho.abs() >= 1.0 {
                    return Err(ModelError::InvalidSpec(format!(
                        "rho must lie strictly inside (-1, 1), got {rho}"
                    )));
                }
                Ok(())
            }
            JointProcessSpec::MarkovDiscrete {
                order_l,
                pair_alphabet_sizes,
                kernel,
                initial_block,
            } => {
                let shape = BlockShape::new(*order_l, *pair_alphabet_sizes)?;
                shape.check_kernel(kernel)?;
                if let Some(init) = initial_block {
                    if init.len() != shape.blocks {
                        return Err(ModelError::InvalidSpec(format!(
                            "initial_block has {} entries, expected {}",
                            init.len(),
                            shape.blocks
                        )));
                    }
                    check_pmf(init, "initial_block")?;
                }
                Ok(())
            }
        }
    }
}

pub(crate) fn check_pmf(pmf: &[f64], what: &str) -> Result<(), ModelError> {
    if let Some(bad) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(ModelError::InvalidSpec(format!(
            "{what} contains an invalid probability {bad}"
        )));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > PMF_TOLERANCE {
        return Err(ModelError::InvalidSpec(format!(
            "{what} sums to {total}, not 1"
        )));
    }
    Ok(())
}

/// Index arithmetic for the chain on l-blocks of pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockShape {
    pub order: usize,
    pub k1: usize,
    pub k2: usize,
    /// Number of distinct pairs, `k1 * k2`.
    pub pairs: usize,
    /// Number of distinct l-blocks, `pairs^order`.
    pub blocks: usize,
}

impl BlockShape {
    pub fn new(order: usize, sizes: [usize; 2]) -> Result<Self, ModelError> {
        let [k1, k2] = sizes;
        if order == 0 {
            return Err(ModelError::InvalidSpec("order_l must be at least 1".into()));
        }
        if k1 == 0 || k2 == 0 {
            return Err(ModelError::InvalidSpec("pair alphabet sizes must be positive".into()));
        }
        let too_large = || ModelError::StateSpaceTooLarge {
            cap: MAX_BLOCK_STATES,
        };
        let pairs = k1.checked_mul(k2).ok_or_else(too_large)?;
        let mut blocks = 1usize;
        for _ in 0..order {
            blocks = blocks
                .checked_mul(pairs)
                .filter(|&b| b <= MAX_BLOCK_STATES)
                .ok_or_else(too_large)?;
        }
        Ok(BlockShape {
            order,
            k1,
            k2,
            pairs,
            blocks,
        })
    }

    pub fn pair(&self, a: u32, b: u32) -> usize {
        a as usize * self.k2 + b as usize
    }

    pub fn split_pair(&self, pair: usize) -> (u32, u32) {
        ((pair / self.k2) as u32, (pair % self.k2) as u32)
    }

    /// Block reached from `block` after appending `next_pair`.
    pub fn shift(&self, block: usize, next_pair: usize) -> usize {
        (block * self.pairs) % self.blocks + next_pair
    }

    pub fn check_kernel(&self, kernel: &[f64]) -> Result<(), ModelError> {
        let expected = self.blocks * self.pairs;
        if kernel.len() != expected {
            return Err(ModelError::InvalidSpec(format!(
                "kernel has {} entries, expected {} rows x {} columns",
                kernel.len(),
                self.blocks,
                self.pairs
            )));
        }
        for (row_idx, row) in kernel.chunks(self.pairs).enumerate() {
            check_pmf(row, &format!("kernel row {row_idx}"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_stochastic_pmf() {
        let spec = JointProcessSpec::IidDiscrete {
            alphabet_size_1: 2,
            alphabet_size_2: 2,
            joint_pmf: vec![0.5, 0.5, 0.5, 0.0],
        };
        assert!(matches!(spec.check_shape(), Err(ModelError::InvalidSpec(_))));
        let spec = JointProcessSpec::IidDiscrete {
            alphabet_size_1: 2,
            alphabet_size_2: 2,
            joint_pmf: vec![1.5, -0.5, 0.0, 0.0],
        };
        assert!(spec.check_shape().is_err());
    }

    #[test]
    fn rejects_degenerate_rho() {
        for rho in [1.0, -1.0, 1.5, f64::NAN] {
            assert!(JointProcessSpec::IidGaussian { rho }.check_shape().is_err());
        }
        assert!(JointProcessSpec::IidGaussian { rho: -0.99 }.check_shape().is_ok());
    }

    #[test]
    fn rejects_bad_kernel_rows() {
        let spec = JointProcessSpec::MarkovDiscrete {
            order_l: 1,
            pair_alphabet_sizes: [2, 1],
            kernel: vec![0.9, 0.1, 0.4, 0.5],
            initial_block: None,
        };
        let err = spec.check_shape().unwrap_err();
        assert!(err.to_string().contains("kernel row 1"), "{err}");
    }

    #[test]
    fn block_state_cap() {
        assert!(BlockShape::new(4, [10, 1]).is_ok());
        assert!(matches!(
            BlockShape::new(5, [10, 1]),
            Err(ModelError::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn block_shift_drops_oldest_pair() {
        let shape = BlockShape::new(2, [2, 2]).unwrap();
        // block (p0=1, p1=3) -> append 2 -> (3, 2)
        let block = 4 + 3;
        assert_eq!(shape.shift(block, 2), 3 * 4 + 2);
    }

    #[test]
    fn json_uses_variant_tag() {
        let spec = JointProcessSpec::IidGaussian { rho: 0.5 };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"variant":"iid_gaussian","rho":0.5}"#);
        assert_eq!(JointProcessSpec::from_json(&text).unwrap(), spec);
        assert!(JointProcessSpec::from_json(r#"{"variant":"poisson"}"#).is_err());
    }
}
