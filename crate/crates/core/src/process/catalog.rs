//! Built-in example specs. The files under `specs/` at the repository root
//! are generated from this list.

use super::JointProcessSpec;

#[derive(Clone, Debug)]
pub struct BuiltinSpec {
    pub name: &'static str,
    pub spec: JointProcessSpec,
}

fn iid(k1: usize, k2: usize, joint_pmf: Vec<f64>) -> JointProcessSpec {
    JointProcessSpec::IidDiscrete {
        alphabet_size_1: k1,
        alphabet_size_2: k2,
        joint_pmf,
    }
}

/// Binary pair chain where each coordinate flips independently of the past:
/// `a' = a ^ z1`, `b' = b ^ z2`, with the flip pair `(z1, z2)` drawn from
/// `flips` (row-major, 2x2). Each coordinate is Markov on its own, so the
/// conditional mutual information of the next pair equals the mutual
/// information rate of the two coordinate processes.
pub fn markov_coupled_flips(flips: [f64; 4]) -> JointProcessSpec {
    let mut kernel = vec![0.0; 16];
    for a in 0..2usize {
        for b in 0..2usize {
            let row = a * 2 + b;
            for na in 0..2usize {
                for nb in 0..2usize {
                    kernel[row * 4 + na * 2 + nb] = flips[(a ^ na) * 2 + (b ^ nb)];
                }
            }
        }
    }
    JointProcessSpec::MarkovDiscrete {
        order_l: 1,
        pair_alphabet_sizes: [2, 2],
        kernel,
        initial_block: Some(vec![0.25; 4]),
    }
}

pub fn builtin_specs() -> Vec<BuiltinSpec> {
    vec![
        BuiltinSpec {
            name: "point_mass",
            spec: iid(2, 2, vec![1.0, 0.0, 0.0, 0.0]),
        },
        BuiltinSpec {
            name: "uniform_2x2",
            spec: iid(2, 2, vec![0.25; 4]),
        },
        BuiltinSpec {
            name: "bsc_0.1",
            spec: iid(2, 2, vec![0.45, 0.05, 0.05, 0.45]),
        },
        BuiltinSpec {
            name: "bsc_0.05",
            spec: iid(2, 2, vec![0.475, 0.025, 0.025, 0.475]),
        },
        BuiltinSpec {
            name: "gaussian_rho_0.5",
            spec: JointProcessSpec::IidGaussian { rho: 0.5 },
        },
        BuiltinSpec {
            name: "gaussian_rho_0.9",
            spec: JointProcessSpec::IidGaussian { rho: 0.9 },
        },
        BuiltinSpec {
            name: "markov_coupled_flips",
            spec: markov_coupled_flips([0.8, 0.05, 0.05, 0.1]),
        },
        BuiltinSpec {
            name: "markov_two_state",
            spec: JointProcessSpec::MarkovDiscrete {
                order_l: 1,
                pair_alphabet_sizes: [2, 1],
                kernel: vec![0.9, 0.1, 0.4, 0.6],
                initial_block: Some(vec![0.8, 0.2]),
            },
        },
    ]
}
