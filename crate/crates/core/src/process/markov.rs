//! Chain on l-blocks of pairs: stationary distribution and ergodicity.

use std::collections::VecDeque;

use super::spec::BlockShape;
use super::ModelError;

pub const POWER_ITERATION_TOLERANCE: f64 = 1e-12;
pub const POWER_ITERATION_CAP: usize = 1_000_000;

/// Advances a distribution over l-blocks by one step of the pair kernel.
pub fn advance_block_distribution(shape: &BlockShape, kernel: &[f64], dist: &[f64]) -> Vec<f64> {
    let mut next = vec![0.0; shape.blocks];
    for (block, &mass) in dist.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let row = &kernel[block * shape.pairs..(block + 1) * shape.pairs];
        for (pair, &p) in row.iter().enumerate() {
            if p > 0.0 {
                next[shape.shift(block, pair)] += mass * p;
            }
        }
    }
    next
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Fixed point of the block chain by power iteration from the uniform
/// distribution, stopping at max-norm residual `1e-12`.
pub fn stationary_block_distribution(
    kernel: &[f64],
    order_l: usize,
    pair_alphabet_sizes: [usize; 2],
) -> Result<Vec<f64>, ModelError> {
    let shape = BlockShape::new(order_l, pair_alphabet_sizes)?;
    shape.check_kernel(kernel)?;
    stationary_for_shape(&shape, kernel)
}

pub(crate) fn stationary_for_shape(shape: &BlockShape, kernel: &[f64]) -> Result<Vec<f64>, ModelError> {
    let mut dist = vec![1.0 / shape.blocks as f64; shape.blocks];
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_ITERATION_CAP {
        let mut next = advance_block_distribution(shape, kernel, &dist);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|p| *p /= total);
        residual = max_abs_diff(&next, &dist);
        dist = next;
        if residual <= POWER_ITERATION_TOLERANCE {
            return Ok(dist);
        }
    }
    Err(ModelError::NonConvergence {
        iterations: POWER_ITERATION_CAP,
        residual,
    })
}

/// Residual of one kernel step applied to `dist`.
pub fn stationarity_residual(shape: &BlockShape, kernel: &[f64], dist: &[f64]) -> f64 {
    max_abs_diff(&advance_block_distribution(shape, kernel, dist), dist)
}

/// Fails unless the block chain is irreducible and aperiodic, i.e. unless its
/// stationary distribution is unique and reached from any start.
pub fn check_ergodic(shape: &BlockShape, kernel: &[f64]) -> Result<(), ModelError> {
    let n = shape.blocks;
    let mut forward: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut backward: Vec<Vec<usize>> = vec![Vec::new(); n];
    for block in 0..n {
        let row = &kernel[block * shape.pairs..(block + 1) * shape.pairs];
        for (pair, &p) in row.iter().enumerate() {
            if p > 0.0 {
                let to = shape.shift(block, pair);
                forward[block].push(to);
                backward[to].push(block);
            }
        }
    }

    let levels = bfs_levels(&forward);
    let unreachable_fwd = levels.iter().filter(|l| l.is_none()).count();
    let unreachable_bwd = bfs_levels(&backward).iter().filter(|l| l.is_none()).count();
    if unreachable_fwd > 0 || unreachable_bwd > 0 {
        return Err(ModelError::NotErgodic(format!(
            "stationary distribution is not unique: block chain is reducible \
             ({} of {n} blocks unreachable from block 0, {} cannot reach it)",
            unreachable_fwd, unreachable_bwd
        )));
    }

    // Period = gcd over edges u->v of level(u) + 1 - level(v).
    let mut period = 0i64;
    for (u, targets) in forward.iter().enumerate() {
        let lu = levels[u].unwrap() as i64;
        for &v in targets {
            let lv = levels[v].unwrap() as i64;
            period = gcd(period, (lu + 1 - lv).abs());
        }
    }
    if period != 1 {
        return Err(ModelError::NotErgodic(format!(
            "stationary distribution is not reached by iteration: block chain is periodic with period {period}"
        )));
    }
    Ok(())
}

fn bfs_levels(adjacency: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut levels = vec![None; adjacency.len()];
    let mut queue = VecDeque::from([0usize]);
    levels[0] = Some(0);
    while let Some(u) = queue.pop_front() {
        let next_level = levels[u].unwrap() + 1;
        for &v in &adjacency[u] {
            if levels[v].is_none() {
                levels[v] = Some(next_level);
                queue.push_back(v);
            }
        }
    }
    levels
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
