//! Optimal one-to-one assignment (Hungarian method with potentials).

/// Assignment maximising the total score of a `rows × cols` matrix.
///
/// Returns `(row, col)` pairs sorted by row; `min(rows, cols)` pairs in
/// total.
pub fn max_weight_assignment(scores: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    assert_eq!(scores.len(), rows * cols, "score matrix size");
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows > cols {
        let mut transposed = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                transposed[c * rows + r] = scores[r * cols + c];
            }
        }
        let mut pairs: Vec<(usize, usize)> = max_weight_assignment(&transposed, cols, rows)
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect();
        pairs.sort_unstable();
        return pairs;
    }

    // Minimise negated scores; 1-based arrays with a sentinel column 0.
    let cost = |r: usize, c: usize| -scores[(r - 1) * cols + (c - 1)];
    let (n, m) = (rows, cols);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for r in 1..=n {
        owner[0] = r;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for c in 1..=m {
                if used[c] {
                    continue;
                }
                let cur = cost(r0, c) - u[r0] - v[c];
                if cur < minv[c] {
                    minv[c] = cur;
                    way[c] = col0;
                }
                if minv[c] < delta {
                    delta = minv[c];
                    col1 = c;
                }
            }
            for c in 0..=m {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&c| owner[c] != 0)
        .map(|c| (owner[c] - 1, c - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}
