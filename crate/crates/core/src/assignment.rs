//! Exact linear maximization over the Birkhoff polytope and maximum-weight
//! bipartite matching.
//!
//! Both are solved with a dense O(d^3) Hungarian method. The optimal dual
//! potentials identify the "tight" edges; every optimal assignment uses tight
//! edges only, so the lexicographically smallest optimum is found by a
//! row-by-row alternating-path search inside the tight subgraph.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// A permutation of `0..d`, stored as `assignment[row] = column`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermutationMatrix {
    pub assignment: Vec<usize>,
}

impl PermutationMatrix {
    pub fn identity(d: usize) -> Self {
        Self { assignment: (0..d).collect() }
    }

    pub fn dim(&self) -> usize {
        self.assignment.len()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (r, &c) in self.assignment.iter().enumerate() {
            out[(r, c)] = 1.0;
        }
        out
    }

    /// `sum_r weights(r, assignment[r])`.
    pub fn value(&self, weights: &DMatrix<f64>) -> f64 {
        self.assignment.iter().enumerate().map(|(r, &c)| weights[(r, c)]).sum()
    }
}

/// A matching between `n` left and `m` right vertices. Pairs are sorted by
/// left index.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialMatching {
    pub pairs: Vec<(usize, usize)>,
    pub weight: f64,
}

impl PartialMatching {
    pub fn partner_of_left(&self, i: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == i).map(|p| p.1)
    }

    pub fn partner_of_right(&self, j: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.1 == j).map(|p| p.0)
    }
}

/// Large negative stand-in for `-inf`: any assignment with fewer sentinel
/// entries beats any assignment with more.
fn sentinel(finite_min: f64, finite_max: f64, d: usize) -> f64 {
    finite_min - d as f64 * (finite_max - finite_min) - 1.0
}

/// Permutation maximizing `sum_r weights(r, sigma(r))`.
///
/// `-inf` entries are only used when a row or column has no alternative.
/// Among optimal permutations the lexicographically smallest assignment
/// vector is returned.
pub fn max_weight_permutation(weights: &DMatrix<f64>) -> Result<PermutationMatrix> {
    let (rows, cols) = weights.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let d = rows;
    if d == 0 {
        return Ok(PermutationMatrix { assignment: Vec::new() });
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in 0..d {
        for c in 0..d {
            let x = weights[(r, c)];
            if x == f64::NEG_INFINITY {
                continue;
            }
            if !x.is_finite() {
                return Err(Error::NonFiniteWeight { row: r, col: c, value: x });
            }
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if lo > hi {
        return Ok(PermutationMatrix::identity(d));
    }
    let floor = sentinel(lo, hi, d);
    // Shift so the largest weight is 0; costs are then nonnegative.
    let cost = DMatrix::from_fn(d, d, |r, c| {
        let x = weights[(r, c)];
        hi - if x == f64::NEG_INFINITY { floor } else { x }
    });
    Ok(PermutationMatrix { assignment: lex_min_optimal(&cost) })
}

/// Min-cost assignment with the lexicographically smallest optimum.
fn lex_min_optimal(cost: &DMatrix<f64>) -> Vec<usize> {
    let d = cost.nrows();
    let (mut row_to_col, u, v) = hungarian(cost);
    let scale = cost.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let tol = 1e-12 * (d as f64) * (1.0 + scale);
    let tight = |r: usize, c: usize| cost[(r, c)] - u[r] - v[c] <= tol;

    let mut col_to_row = vec![0; d];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }
    let mut col_fixed = vec![false; d];
    let mut parent = vec![usize::MAX; d];
    let mut queue = Vec::with_capacity(d);

    for r in 0..d {
        for c in 0..d {
            if col_fixed[c] || !tight(r, c) {
                continue;
            }
            let target = row_to_col[r];
            if c == target {
                break;
            }
            // Re-route: the row holding `c` must reach `target` through
            // unfixed rows along tight edges.
            let start = col_to_row[c];
            parent.iter_mut().for_each(|p| *p = usize::MAX);
            queue.clear();
            queue.push(start);
            let mut seen_col = vec![false; d];
            seen_col[c] = true;
            let mut found = None;
            let mut head = 0;
            'bfs: while head < queue.len() {
                let x = queue[head];
                head += 1;
                for y in 0..d {
                    if seen_col[y] || col_fixed[y] || !tight(x, y) {
                        continue;
                    }
                    seen_col[y] = true;
                    parent[y] = x;
                    if y == target {
                        found = Some(y);
                        break 'bfs;
                    }
                    queue.push(col_to_row[y]);
                }
            }
            if let Some(mut y) = found {
                loop {
                    let x = parent[y];
                    let prev = row_to_col[x];
                    row_to_col[x] = y;
                    col_to_row[y] = x;
                    if x == start {
                        break;
                    }
                    y = prev;
                }
                row_to_col[r] = c;
                col_to_row[c] = r;
                break;
            }
        }
        col_fixed[row_to_col[r]] = true;
    }
    row_to_col
}

/// Square min-cost assignment. Returns `(row_to_col, row_potential,
/// col_potential)` with `cost(r, c) - u[r] - v[c] >= 0`, equality on the
/// returned assignment.
fn hungarian(cost: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let d = cost.nrows();
    let inf = f64::INFINITY;
    // 1-based with a virtual column 0.
    let mut u = vec![0.0; d + 1];
    let mut v = vec![0.0; d + 1];
    let mut owner = vec![0usize; d + 1];
    let mut way = vec![0usize; d + 1];

    for i in 1..=d {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; d + 1];
        let mut used = vec![false; d + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=d {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=d {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0; d];
    for j in 1..=d {
        row_to_col[owner[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Maximum-weight matching between the rows and columns of `weights`,
/// skipping `forbidden` pairs. Vertices may stay unmatched.
///
/// Among maximum-weight matchings, larger cardinality wins (zero-weight
/// edges are still taken), then the lexicographically smallest
/// left-to-right assignment with "unmatched" ordered after every real
/// partner.
pub fn max_weight_matching(
    weights: &DMatrix<f64>,
    forbidden: &BTreeSet<(usize, usize)>,
) -> Result<PartialMatching> {
    let (n, m) = weights.shape();
    for r in 0..n {
        for c in 0..m {
            let x = weights[(r, c)];
            if !x.is_finite() && !forbidden.contains(&(r, c)) {
                return Err(Error::NonFiniteWeight { row: r, col: c, value: x });
            }
        }
    }
    let allowed = |r: usize, c: usize| r < n && c < m && !forbidden.contains(&(r, c));
    // Left i may pair with dummy column m + i; right j with dummy row n + j.
    let d = n + m;
    let real_max = (0..n)
        .flat_map(|r| (0..m).map(move |c| (r, c)))
        .filter(|&(r, c)| allowed(r, c))
        .fold(0.0f64, |a, (r, c)| a.max(weights[(r, c)].abs()));
    let blocked = -(1.0 + d as f64 * 2.0 * real_max);
    let padded = DMatrix::from_fn(d, d, |r, c| {
        if r < n && c < m {
            if allowed(r, c) { weights[(r, c)] } else { blocked }
        } else if r < n {
            if c - m == r { 0.0 } else { blocked }
        } else if c < m {
            if r - n == c { 0.0 } else { blocked }
        } else {
            0.0
        }
    });

    // Stage 1: optimal weight and the tight subgraph.
    let hi = padded.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cost = padded.map(|x| hi - x);
    let (_, u, v) = hungarian(&cost);
    let scale = cost.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let tol = 1e-12 * (d as f64) * (1.0 + scale);

    // Stage 2: within optimal matchings, maximize real edges; ties go to the
    // lexicographically smallest assignment.
    let secondary = DMatrix::from_fn(d, d, |r, c| {
        if cost[(r, c)] - u[r] - v[c] > tol {
            f64::NEG_INFINITY
        } else if allowed(r, c) {
            1.0
        } else {
            0.0
        }
    });
    let perm = max_weight_permutation(&secondary)?;
    let pairs: Vec<(usize, usize)> = perm.assignment[..n]
        .iter()
        .enumerate()
        .filter(|&(r, &c)| allowed(r, c))
        .map(|(r, &c)| (r, c))
        .collect();
    let weight = pairs.iter().map(|&(r, c)| weights[(r, c)]).sum();
    Ok(PartialMatching { pairs, weight })
}
