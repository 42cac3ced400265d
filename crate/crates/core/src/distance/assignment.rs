//! Exact solvers for the two matching problems behind diagram distances:
//! min-sum assignment (Hungarian with potentials) and min-max assignment
//! (threshold search with bipartite feasibility matching).

/// Solve the square min-sum assignment problem on a row-major cost matrix.
///
/// Entries may be `f64::INFINITY` to forbid an edge, as long as a finite
/// perfect matching exists. Returns `assign[row] = col`.
pub fn min_sum_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    // Shortest-augmenting-path formulation with dual potentials, 1-indexed.
    let mut u = vec![0.0_f64; n + 1];
    let mut v = vec![0.0_f64; n + 1];
    let mut matched_row = vec![0_usize; n + 1]; // matched_row[col] = row
    let mut way = vec![0_usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0_usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0_usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            debug_assert!(delta.is_finite(), "no finite perfect matching");
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0_usize; n];
    for j in 1..=n {
        assign[matched_row[j] - 1] = j - 1;
    }
    assign
}

/// Solve the square min-max (bottleneck) assignment problem.
///
/// Minimizes the largest edge cost over perfect matchings by binary search
/// on the sorted set of finite entries; infinite entries are forbidden.
/// Returns `(bottleneck_value, assign)`.
pub fn min_max_assignment(cost: &[f64], n: usize) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return (0.0, Vec::new());
    }
    let mut candidates: Vec<f64> = cost.iter().copied().filter(|c| c.is_finite()).collect();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let feasible = |threshold: f64| -> Option<Vec<usize>> {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| cost[i * n + j] <= threshold)
                    .collect::<Vec<_>>()
            })
            .collect();
        let matching = hopcroft_karp(n, n, &adj);
        let size = matching.iter().filter(|m| m.is_some()).count();
        if size == n {
            Some(matching.into_iter().map(|m| m.unwrap()).collect())
        } else {
            None
        }
    };

    let mut lo = 0_usize;
    let mut hi = candidates.len() - 1;
    debug_assert!(feasible(candidates[hi]).is_some(), "matrix has no matching");
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if feasible(candidates[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let value = candidates[lo];
    (value, feasible(value).expect("feasible at bottleneck value"))
}

/// Maximum bipartite matching (Hopcroft-Karp). `adj[i]` lists right
/// neighbours of left vertex `i`. Returns `match_left[i] = Some(j)`.
pub fn hopcroft_karp(n_left: usize, n_right: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    const NIL: usize = usize::MAX;
    let mut match_left = vec![NIL; n_left];
    let mut match_right = vec![NIL; n_right];
    let mut dist = vec![0_usize; n_left];

    loop {
        // BFS from free left vertices to build layers.
        let mut queue = std::collections::VecDeque::new();
        for i in 0..n_left {
            if match_left[i] == NIL {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = usize::MAX;
            }
        }
        let mut found_augmenting = false;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                let next = match_right[j];
                if next == NIL {
                    found_augmenting = true;
                } else if dist[next] == usize::MAX {
                    dist[next] = dist[i] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found_augmenting {
            break;
        }
        // Layered DFS augmentation.
        fn try_augment(
            i: usize,
            adj: &[Vec<usize>],
            dist: &mut [usize],
            match_left: &mut [usize],
            match_right: &mut [usize],
        ) -> bool {
            for idx in 0..adj[i].len() {
                let j = adj[i][idx];
                let next = match_right[j];
                let ok = if next == NIL {
                    true
                } else if dist[next] == dist[i] + 1 {
                    try_augment(next, adj, dist, match_left, match_right)
                } else {
                    false
                };
                if ok {
                    match_left[i] = j;
                    match_right[j] = i;
                    return true;
                }
            }
            dist[i] = usize::MAX;
            false
        }
        for i in 0..n_left {
            if match_left[i] == NIL {
                try_augment(i, adj, &mut dist, &mut match_left, &mut match_right);
            }
        }
    }
    match_left
        .into_iter()
        .map(|m| if m == NIL { None } else { Some(m) })
        .collect()
}
