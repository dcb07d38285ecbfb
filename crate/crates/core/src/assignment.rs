//! Minimum-cost one-to-one assignment on small dense integer matrices.

/// Solves a square assignment problem with the O(n³) potential-based
/// Hungarian method. Returns the optimal total and `row -> column`.
pub fn hungarian(cost: &[Vec<i64>]) -> (i64, Vec<usize>) {
    let n = cost.len();
    if n == 0 {
        return (0, Vec::new());
    }
    debug_assert!(cost.iter().all(|r| r.len() == n));

    // 1-based with a virtual column 0.
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut min_v = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = inf;
            let mut col1 = 0usize;
            for c in 1..=n {
                if used[c] {
                    continue;
                }
                let reduced = cost[r - 1][c - 1] - u[r] - v[c];
                if reduced < min_v[c] {
                    min_v[c] = reduced;
                    way[c] = col0;
                }
                if min_v[c] < delta {
                    delta = min_v[c];
                    col1 = c;
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    min_v[c] -= delta;
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

    let mut assignment = vec![0usize; n];
    for c in 1..=n {
        assignment[owner[c] - 1] = c - 1;
    }
    let total = assignment
        .iter()
        .enumerate()
        .map(|(r, &c)| cost[r][c])
        .sum();
    (total, assignment)
}

/// Among all optimal assignments of a square matrix, returns the one whose
/// `row -> column` vector is lexicographically smallest.
pub fn lexicographic_optimal(cost: &[Vec<i64>]) -> (i64, Vec<usize>) {
    let n = cost.len();
    let (best, _) = hungarian(cost);
    let mut free_cols: Vec<usize> = (0..n).collect();
    let mut assignment = Vec::with_capacity(n);
    let mut spent = 0i64;
    for row in 0..n {
        let rest_rows = row + 1..n;
        let mut chosen = None;
        for (k, &col) in free_cols.iter().enumerate() {
            let here = spent + cost[row][col];
            if here > best {
                continue;
            }
            let sub: Vec<Vec<i64>> = rest_rows
                .clone()
                .map(|r| {
                    free_cols
                        .iter()
                        .enumerate()
                        .filter(|&(kk, _)| kk != k)
                        .map(|(_, &c)| cost[r][c])
                        .collect()
                })
                .collect();
            if here + hungarian(&sub).0 == best {
                chosen = Some(k);
                break;
            }
        }
        let k = chosen.expect("some column always completes an optimal assignment");
        let col = free_cols.remove(k);
        spent += cost[row][col];
        assignment.push(col);
    }
    (best, assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(cost: &[Vec<i64>]) -> (i64, Vec<usize>) {
        fn go(
            cost: &[Vec<i64>],
            row: usize,
            used: &mut Vec<bool>,
            cur: &mut Vec<usize>,
            best: &mut Option<(i64, Vec<usize>)>,
        ) {
            if row == cost.len() {
                let total = cur.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
                // Permutations are visited in lexicographic order, so strict
                // improvement keeps the lexicographically first optimum.
                if best.as_ref().is_none_or(|(b, _)| total < *b) {
                    *best = Some((total, cur.clone()));
                }
                return;
            }
            for c in 0..cost.len() {
                if !used[c] {
                    used[c] = true;
                    cur.push(c);
                    go(cost, row + 1, used, cur, best);
                    cur.pop();
                    used[c] = false;
                }
            }
        }
        let mut best = None;
        go(
            cost,
            0,
            &mut vec![false; cost.len()],
            &mut Vec::new(),
            &mut best,
        );
        best.unwrap_or((0, Vec::new()))
    }

    #[test]
    fn known_matrix() {
        let cost = vec![vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]];
        assert_eq!(hungarian(&cost).0, 5);
        assert_eq!(lexicographic_optimal(&cost), (5, vec![1, 0, 2]));
    }

    #[test]
    fn all_ties_pick_identity() {
        let cost = vec![vec![1; 4]; 4];
        assert_eq!(lexicographic_optimal(&cost), (4, vec![0, 1, 2, 3]));
    }

    #[test]
    fn empty() {
        assert_eq!(hungarian(&[]), (0, vec![]));
        assert_eq!(lexicographic_optimal(&[]), (0, vec![]));
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..6, seed in proptest::collection::vec(0i64..5, 36)) {
            let cost: Vec<Vec<i64>> = (0..n).map(|r| (0..n).map(|c| seed[r * 6 + c]).collect()).collect();
            let (bf_cost, bf_assign) = brute_force(&cost);
            prop_assert_eq!(hungarian(&cost).0, bf_cost);
            prop_assert_eq!(lexicographic_optimal(&cost), (bf_cost, bf_assign));
        }
    }
}
