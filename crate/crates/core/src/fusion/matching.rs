//! Minimum-cost object matching between two point sets.

/// Matches each reference point to a distinct proposal, minimizing the total
/// Euclidean distance over all assignments. Returns `perm` with `perm[i]`
/// the proposal index assigned to reference `i`.
///
/// Shortest-augmenting-path assignment with row/column potentials, cubic in
/// the number of points. Ties resolve deterministically toward lower column
/// indices, so equal-cost instances always produce the same permutation.
pub fn match_objects(reference: &[[f64; 2]], proposals: &[[f64; 2]]) -> Vec<usize> {
    let n = reference.len();
    assert_eq!(
        n,
        proposals.len(),
        "match_objects: {n} references vs {} proposals",
        proposals.len()
    );
    if n == 0 {
        return Vec::new();
    }
    let cost = |i: usize, j: usize| {
        let dx = reference[i][0] - proposals[j][0];
        let dy = reference[i][1] - proposals[j][1];
        (dx * dx + dy * dy).sqrt()
    };

    // 1-based internally; column 0 is the virtual start of each augmenting
    // path. owner[j] is the row currently assigned to column j (0 = free).
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
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
        while j0 != 0 {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        }
    }

    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[owner[j] - 1] = j - 1;
    }
    perm
}

/// Total Euclidean cost of an assignment, shared by tests and diagnostics.
pub fn assignment_cost(reference: &[[f64; 2]], proposals: &[[f64; 2]], perm: &[usize]) -> f64 {
    reference
        .iter()
        .zip(perm)
        .map(|(r, &j)| {
            let dx = r[0] - proposals[j][0];
            let dy = r[1] - proposals[j][1];
            (dx * dx + dy * dy).sqrt()
        })
        .sum()
}
