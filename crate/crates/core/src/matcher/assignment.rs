//! Dense O(n^3) Hungarian algorithm (shortest augmenting path with
//! potentials) for square maximum-weight assignment.

/// Square matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    values: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n * n, "weight matrix must be n x n");
        WeightMatrix { n, values }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                values.push(f(r, c));
            }
        }
        WeightMatrix { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sum of the weights picked by `assignment` (row -> column). The picks
    /// are added in ascending order, so assignments picking the same
    /// multiset of weights have bit-identical totals.
    pub fn total(&self, assignment: &[usize]) -> f64 {
        let mut picked: Vec<f64> = assignment.iter().enumerate().map(|(r, &c)| self.get(r, c)).collect();
        picked.sort_by(f64::total_cmp);
        picked.iter().sum()
    }

    /// Replaces every negative infinity by a finite weight low enough that
    /// any assignment using it totals less than every assignment avoiding
    /// such cells: `min - n * (max - min) - 1` over the finite entries.
    pub fn with_finite_floor(&self) -> WeightMatrix {
        let finite = self.values.iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let floor = if lo.is_finite() {
            lo - self.n as f64 * (hi - lo) - 1.0
        } else {
            // every cell is impossible, so every assignment is equally bad
            0.0
        };
        WeightMatrix {
            n: self.n,
            values: self
                .values
                .iter()
                .map(|&v| if v.is_finite() { v } else { floor })
                .collect(),
        }
    }
}

/// Column assigned to each row in a maximum-total-weight perfect matching.
/// All weights must be finite.
pub fn max_weight_assignment(weights: &WeightMatrix) -> Vec<usize> {
    let n = weights.n;
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(weights.values.iter().all(|v| v.is_finite()));
    let cost = |r: usize, c: usize| -weights.get(r, c);

    // 1-based arrays; index 0 is the virtual root column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_to = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        row_of[0] = row;
        let mut col0 = 0usize;
        min_to.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[col0] = true;
            let r0 = row_of[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost(r0 - 1, col - 1) - u[r0] - v[col];
                if reduced < min_to[col] {
                    min_to[col] = reduced;
                    way[col] = col0;
                }
                if min_to[col] < delta {
                    delta = min_to[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[row_of[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_to[col] -= delta;
                }
            }
            col0 = col1;
            if row_of[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            row_of[col0] = row_of[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for col in 1..=n {
        assignment[row_of[col] - 1] = col - 1;
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_built_three_by_three() {
        // unique optimum: 0->2, 1->0, 2->1 with total 9 + 8 + 7 = 24
        let w = WeightMatrix::new(3, vec![1.0, 2.0, 9.0, 8.0, 1.0, 3.0, 2.0, 7.0, 1.0]);
        let a = max_weight_assignment(&w);
        assert_eq!(a, vec![2, 0, 1]);
        assert_eq!(w.total(&a), 24.0);
    }

    #[test]
    fn single_cell() {
        assert_eq!(max_weight_assignment(&WeightMatrix::new(1, vec![-5.0])), vec![0]);
    }

    #[test]
    fn floor_never_beats_a_feasible_assignment() {
        let inf = f64::NEG_INFINITY;
        // only the anti-diagonal is feasible, and it is much worse per cell
        // than the impossible diagonal would be
        let w = WeightMatrix::new(2, vec![inf, -100.0, -100.0, inf]);
        let a = max_weight_assignment(&w.with_finite_floor());
        assert_eq!(a, vec![1, 0]);

        let positive = WeightMatrix::new(2, vec![inf, 5.0, 1.0, 50.0]);
        let a = max_weight_assignment(&positive.with_finite_floor());
        assert_eq!(a, vec![1, 0]);
    }

    #[test]
    fn all_impossible_still_yields_a_permutation() {
        let w = WeightMatrix::new(3, vec![f64::NEG_INFINITY; 9]).with_finite_floor();
        let mut a = max_weight_assignment(&w);
        a.sort_unstable();
        assert_eq!(a, vec![0, 1, 2]);
    }
}
