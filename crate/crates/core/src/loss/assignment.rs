//! Optimal one-to-one assignment (Hungarian / Jonker-Volgenant style).

use crate::scalar::Real;

use super::LossError;

/// Dense M x N cost matrix with finite entries, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix<S = f64> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Real> CostMatrix<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Result<Self, LossError> {
        if data.len() != rows * cols {
            return Err(LossError::CostMatrixShape {
                rows,
                cols,
                got: data.len(),
            });
        }
        if !data.iter().all(|c| c.is_finite()) {
            return Err(LossError::NonFiniteCost);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> S,
    ) -> Result<Self, LossError> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> S {
        self.data[row * self.cols + col]
    }
}

/// A one-to-one assignment of prediction rows to ground-truth columns;
/// each index appears at most once. Pairs are sorted by row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pairs: Vec<(usize, usize)>,
}

impl Assignment {
    /// Builds from explicit pairs, enforcing one-to-one usage.
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Result<Self, LossError> {
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(LossError::InvalidAssignment {
                    reason: format!("row {} assigned twice", w[0].0),
                });
            }
        }
        let mut cols: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        cols.sort_unstable();
        for w in cols.windows(2) {
            if w[0] == w[1] {
                return Err(LossError::InvalidAssignment {
                    reason: format!("column {} assigned twice", w[0]),
                });
            }
        }
        Ok(Self { pairs })
    }

    #[inline]
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn column_of(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|(r, _)| *r == row).map(|(_, c)| *c)
    }

    pub fn total_cost<S: Real>(&self, costs: &CostMatrix<S>) -> S {
        self.pairs.iter().map(|&(i, j)| costs.get(i, j)).sum()
    }
}

/// Jonker-Volgenant solve of the square problem: returns columns' matched
/// rows plus the dual potentials. Matched edges are tight:
/// `cost[i][j] == u[i] + v[j]` up to roundoff.
fn solve_square(cost: &[f64], n: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    // col_row[j] = row matched to column j; index n is the virtual column.
    let mut col_row: Vec<Option<usize>> = vec![None; n + 1];

    for i in 0..n {
        col_row[n] = Some(i);
        let mut j0 = n;
        let mut min_to = vec![f64::INFINITY; n];
        let mut prev = vec![n; n];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0].unwrap();
            let mut delta = f64::INFINITY;
            let mut j1 = usize::MAX;
            for j in 0..n {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 * n + j] - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    prev[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..n {
                if used[j] {
                    u[col_row[j].unwrap()] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            u[col_row[n].unwrap()] += delta;
            j0 = j1;
            if col_row[j0].is_none() {
                break;
            }
        }
        while j0 != n {
            let j1 = prev[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
        }
    }

    let matched = (0..n).map(|j| col_row[j].unwrap()).collect();
    (matched, u, v)
}

/// Kuhn augmenting step: can `row` be matched into the tight graph given
/// the current column matching?
fn try_augment(
    row: usize,
    adj: &[Vec<usize>],
    visited: &mut [bool],
    col_match: &mut [Option<usize>],
) -> bool {
    for &col in &adj[row] {
        if visited[col] {
            continue;
        }
        visited[col] = true;
        if col_match[col].is_none() || try_augment(col_match[col].unwrap(), adj, visited, col_match)
        {
            col_match[col] = Some(row);
            return true;
        }
    }
    false
}

/// Is there a perfect matching of rows `from_row..n` into columns not yet
/// fixed, using only tight edges?
fn remainder_feasible(
    adj: &[Vec<usize>],
    n: usize,
    fixed_col: &[Option<usize>],
    from_row: usize,
) -> bool {
    let mut col_match: Vec<Option<usize>> = vec![None; n];
    for row in from_row..n {
        let mut visited: Vec<bool> = fixed_col.iter().map(|c| c.is_some()).collect();
        if !try_augment(row, adj, &mut visited, &mut col_match) {
            return false;
        }
    }
    true
}

/// Returns a minimum-total-cost one-to-one assignment of size
/// `min(rows, cols)`; ties between equally optimal assignments are broken
/// toward the lexicographically smallest row-to-column mapping.
///
/// Tie resolution works on the optimality certificate: complementary
/// slackness restricts optimal assignments to dual-tight edges, and the
/// lexicographically smallest perfect matching over those edges is
/// extracted greedily. Tightness is tested with a small relative
/// tolerance, so costs closer than ~1e-9 of the cost scale count as ties.
pub fn hungarian_assign<S: Real>(costs: &CostMatrix<S>) -> Result<Assignment, LossError> {
    let (m, k) = (costs.rows(), costs.cols());
    if m == 0 || k == 0 {
        return Assignment::new(Vec::new());
    }
    if !costs.data.iter().all(|c| c.is_finite()) {
        return Err(LossError::NonFiniteCost);
    }

    // Pad to square with zeros: every complete matching uses the same
    // number of padding cells, so real-cost minimization is unaffected.
    let n = m.max(k);
    let mut cost = vec![0.0f64; n * n];
    let mut max_abs = 0.0f64;
    for i in 0..m {
        for j in 0..k {
            let c = costs.get(i, j).to_f64_scalar();
            cost[i * n + j] = c;
            max_abs = max_abs.max(c.abs());
        }
    }

    let (col_row, u, v) = solve_square(&cost, n);
    let tol = 1e-9 * (1.0 + max_abs);

    // Tight-edge adjacency (ascending columns). The solver's own matching
    // is included unconditionally so a perfect matching always exists.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, &i) in col_row.iter().enumerate() {
        adj[i].push(j);
    }
    for i in 0..n {
        for j in 0..n {
            if (cost[i * n + j] - u[i] - v[j]).abs() <= tol && !adj[i].contains(&j) {
                adj[i].push(j);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
    }

    // Greedy lexicographic extraction: fix the smallest feasible column for
    // each row in order. Dummy columns (>= k) mean "unmatched" and are
    // preferred last; ascending order puts them there already.
    let mut fixed_col: Vec<Option<usize>> = vec![None; n];
    let mut row_col = vec![usize::MAX; n];
    for row in 0..n {
        let mut chosen = None;
        for &col in &adj[row] {
            if fixed_col[col].is_some() {
                continue;
            }
            fixed_col[col] = Some(row);
            if remainder_feasible(&adj, n, &fixed_col, row + 1) {
                chosen = Some(col);
                break;
            }
            fixed_col[col] = None;
        }
        let col = chosen.expect("tight graph contains a perfect matching");
        row_col[row] = col;
    }

    let pairs: Vec<(usize, usize)> = (0..m)
        .filter(|&i| row_col[i] < k)
        .map(|i| (i, row_col[i]))
        .collect();
    Assignment::new(pairs)
}
