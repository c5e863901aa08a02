//! Rank and sign machinery: standardized ranking matrices, sign difference
//! vectors, latent Gaussian scores, and empirical CDF distances.
//!
//! Column `j` of a data matrix is ranked by `r_ij = n * Fhat_j(x_ij)` and
//! standardized to `R_ij = sqrt(12/(n^2-1)) * (r_ij - (n+1)/2)`, so that each
//! column of `R` sums to zero and has squared norm `n`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// What to do when a column contains tied values.
///
/// The underlying theory assumes continuous marginals, hence no ties;
/// `Midrank` averages tied ranks and is offered for real data only. Results
/// computed from midranks are outside the exact identities the estimators
/// satisfy on tie-free data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    Reject,
    Midrank,
}

/// Per-column ranks of a data matrix together with their standardized form.
#[derive(Debug, Clone)]
pub struct RankingMatrix {
    /// Ranks in `{1, ..., n}` (integral in `Reject` mode, half-integral
    /// averages under `Midrank`).
    pub ranks: DMatrix<f64>,
    /// `sqrt(12/(n^2-1)) * (r_ij - (n+1)/2)`.
    pub standardized: DMatrix<f64>,
    /// True when midranks were substituted for tied values.
    pub midranks_used: bool,
}

/// Entrywise sign of the difference of two observations; entries are +-1.
#[derive(Debug, Clone, PartialEq)]
pub struct SignVector(pub Vec<f64>);

/// Matrix of conditional scores `2*Phi(x_ij) - 1`; row `i` is the score of
/// observation `i` under the latent Gaussian model. Entries lie in (-1, 1)
/// and are marginally uniform on [-1, 1].
#[derive(Debug, Clone)]
pub struct LatentScoreMatrix {
    pub scores: DMatrix<f64>,
}

/// Standard normal CDF via `erfc`, accurate to under 1e-15 absolute.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn column_ranks(col: &[f64], policy: TiePolicy, j: usize) -> Result<Vec<f64>> {
    let n = col.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps tie handling deterministic.
    order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));

    let mut ranks = vec![0.0; n];
    let mut k = 0;
    while k < n {
        let mut m = k + 1;
        while m < n && col[order[m]] == col[order[k]] {
            m += 1;
        }
        if m - k > 1 && policy == TiePolicy::Reject {
            return Err(Error::TiesDetected { column: j });
        }
        // Midrank: average of positions k+1..=m (1-based).
        let avg = (k + m + 1) as f64 / 2.0;
        for &idx in &order[k..m] {
            ranks[idx] = avg;
        }
        k = m;
    }
    Ok(ranks)
}

/// Rank every column of `data`, returning raw and standardized ranks.
///
/// Two stable sorts per column, O(n log n). Requires `n >= 2`.
pub fn compute_ranks(data: &DMatrix<f64>, policy: TiePolicy) -> Result<RankingMatrix> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "ranking needs at least 2 observations, got {n}"
        )));
    }
    let nf = n as f64;
    let scale = (12.0 / (nf * nf - 1.0)).sqrt();
    let center = (nf + 1.0) / 2.0;

    let mut ranks = DMatrix::zeros(n, p);
    let mut standardized = DMatrix::zeros(n, p);
    let mut midranks_used = false;
    for j in 0..p {
        let col: Vec<f64> = data.column(j).iter().copied().collect();
        let r = column_ranks(&col, policy, j)?;
        if r.iter().any(|v| v.fract() != 0.0) {
            midranks_used = true;
        }
        for i in 0..n {
            ranks[(i, j)] = r[i];
            standardized[(i, j)] = scale * (r[i] - center);
        }
    }
    Ok(RankingMatrix {
        ranks,
        standardized,
        midranks_used,
    })
}

/// Entrywise `sign(xi - xk)`; errors on any tied coordinate.
pub fn sign_vector(xi: &[f64], xk: &[f64]) -> Result<SignVector> {
    if xi.len() != xk.len() {
        return Err(Error::DimensionMismatch(format!(
            "sign vector of lengths {} and {}",
            xi.len(),
            xk.len()
        )));
    }
    let mut out = Vec::with_capacity(xi.len());
    for (c, (a, b)) in xi.iter().zip(xk.iter()).enumerate() {
        let d = a - b;
        if d == 0.0 {
            return Err(Error::ZeroDifference { coord: c });
        }
        out.push(if d > 0.0 { 1.0 } else { -1.0 });
    }
    Ok(SignVector(out))
}

/// Rebuild the standardized rank row `R_i` as
/// `sqrt(3/(n^2-1)) * sum_{k != i} sign(X_i - X_k)`.
///
/// On tie-free data this equals row `i` of [`compute_ranks`]'s standardized
/// matrix; the identity ties the rank representation to the sign-vector
/// representation and is exercised heavily by tests.
pub fn reconstruct_ri_from_signs(data: &DMatrix<f64>, i: usize) -> Result<DVector<f64>> {
    let (n, p) = data.shape();
    if i >= n {
        return Err(Error::DimensionMismatch(format!(
            "row index {i} out of range for {n} observations"
        )));
    }
    let nf = n as f64;
    let scale = (3.0 / (nf * nf - 1.0)).sqrt();
    let xi: Vec<f64> = data.row(i).iter().copied().collect();
    let mut acc = vec![0.0; p];
    let mut xk = vec![0.0; p];
    for k in 0..n {
        if k == i {
            continue;
        }
        for (c, v) in xk.iter_mut().enumerate() {
            *v = data[(k, c)];
        }
        let s = sign_vector(&xi, &xk)?;
        for (a, b) in acc.iter_mut().zip(s.0.iter()) {
            *a += b;
        }
    }
    Ok(DVector::from_iterator(p, acc.into_iter().map(|v| scale * v)))
}

/// Entrywise `2*Phi(x) - 1` of a latent Gaussian data matrix.
pub fn latent_scores(latent_gaussian: &DMatrix<f64>) -> LatentScoreMatrix {
    let scores = latent_gaussian.map(|x| 2.0 * normal_cdf(x) - 1.0);
    LatentScoreMatrix { scores }
}

/// Exact sup-distance between the empirical CDF of `column` and `true_cdf`.
///
/// The supremum of `|Fhat - F|` over the real line is attained at the jump
/// points, so it is evaluated exactly as
/// `max_k max(|k/n - F(x_(k))|, |(k-1)/n - F(x_(k))|)`.
pub fn empirical_cdf_distance<F: Fn(f64) -> f64>(column: &[f64], true_cdf: F) -> f64 {
    let mut xs = column.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut sup = 0.0f64;
    for (k, x) in xs.iter().enumerate() {
        let f = true_cdf(*x);
        let hi = ((k + 1) as f64 / n - f).abs();
        let lo = (k as f64 / n - f).abs();
        sup = sup.max(hi).max(lo);
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ranks_of_forced_ordering() {
        let data = DMatrix::from_column_slice(3, 1, &[3.1, -2.0, 5.0]);
        let rm = compute_ranks(&data, TiePolicy::Reject).unwrap();
        assert_eq!(rm.ranks.column(0).as_slice(), &[2.0, 1.0, 3.0]);
        assert!(!rm.midranks_used);
    }

    #[test]
    fn standardized_column_n3() {
        // ranks (1,2,3) -> sqrt(12/8) * (r - 2) = sqrt(1.5) * (-1, 0, 1)
        let data = DMatrix::from_column_slice(3, 1, &[10.0, 20.0, 30.0]);
        let rm = compute_ranks(&data, TiePolicy::Reject).unwrap();
        let s = 1.224_744_871_391_589_f64; // sqrt(3/2)
        assert_relative_eq!(rm.standardized[(0, 0)], -s, max_relative = 1e-14);
        assert_relative_eq!(rm.standardized[(1, 0)], 0.0, epsilon = 1e-14);
        assert_relative_eq!(rm.standardized[(2, 0)], s, max_relative = 1e-14);
    }

    #[test]
    fn ties_rejected_and_midranked() {
        let data = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 2.0]);
        match compute_ranks(&data, TiePolicy::Reject) {
            Err(Error::TiesDetected { column: 0 }) => {}
            other => panic!("expected TiesDetected, got {other:?}"),
        }
        let rm = compute_ranks(&data, TiePolicy::Midrank).unwrap();
        assert_eq!(rm.ranks.column(0).as_slice(), &[1.5, 1.5, 3.0]);
        assert!(rm.midranks_used);
    }

    #[test]
    fn standardized_columns_sum_zero_norm_n() {
        let data = DMatrix::from_fn(40, 3, |i, j| ((i * 7 + j * 13) % 41) as f64 + 0.1 * j as f64);
        let rm = compute_ranks(&data, TiePolicy::Reject).unwrap();
        for j in 0..3 {
            let col = rm.standardized.column(j);
            let sum: f64 = col.iter().sum();
            let norm2: f64 = col.iter().map(|v| v * v).sum();
            assert_relative_eq!(sum, 0.0, epsilon = 1e-10);
            assert_relative_eq!(norm2, 40.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn sign_vector_basics() {
        let s = sign_vector(&[2.0, -1.0], &[1.0, 3.0]).unwrap();
        assert_eq!(s.0, vec![1.0, -1.0]);
        let r = sign_vector(&[1.0, 3.0], &[2.0, -1.0]).unwrap();
        assert_eq!(r.0, vec![-1.0, 1.0]);
        match sign_vector(&[0.5], &[0.5]) {
            Err(Error::ZeroDifference { coord: 0 }) => {}
            other => panic!("expected ZeroDifference, got {other:?}"),
        }
    }

    #[test]
    fn reconstruction_matches_ranks() {
        let data = DMatrix::from_fn(5, 3, |i, j| ((i * 3 + j * 5) % 11) as f64 + 0.01 * i as f64);
        let rm = compute_ranks(&data, TiePolicy::Reject).unwrap();
        for i in 0..5 {
            let rec = reconstruct_ri_from_signs(&data, i).unwrap();
            for j in 0..3 {
                assert_relative_eq!(rec[j], rm.standardized[(i, j)], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn reconstruction_two_samples_is_sign() {
        let data = DMatrix::from_row_slice(2, 2, &[1.0, 5.0, 3.0, 2.0]);
        // n=2: R_1 = sqrt(3/3) * A_12 = A_12
        let rec = reconstruct_ri_from_signs(&data, 0).unwrap();
        assert_eq!(rec.as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn reconstruction_sorted_max_row() {
        // column sorted ascending, i = argmax: all signs +1
        let n = 7usize;
        let data = DMatrix::from_fn(n, 1, |i, _| i as f64);
        let rec = reconstruct_ri_from_signs(&data, n - 1).unwrap();
        let nf = n as f64;
        let expect = (3.0 / (nf * nf - 1.0)).sqrt() * (nf - 1.0);
        assert_relative_eq!(rec[0], expect, max_relative = 1e-14);
    }

    #[test]
    fn latent_score_values() {
        let data = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, -30.0]);
        let a = latent_scores(&data);
        assert_relative_eq!(a.scores[(0, 0)], 0.0, epsilon = 1e-15);
        // 2*Phi(1)-1 frozen from a high-precision erf evaluation
        assert_relative_eq!(a.scores[(1, 0)], 0.682_689_492_137_085_9, epsilon = 1e-12);
        assert!(a.scores[(2, 0)] > -1.0 && a.scores[(2, 0)] < -0.999_999);
    }

    #[test]
    fn cdf_distance_single_point() {
        let d = empirical_cdf_distance(&[0.0], |_| 0.5);
        assert_relative_eq!(d, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn cdf_distance_exact_quantiles() {
        // column at F^{-1}((k-1/2)/n) for F = identity on [0,1] -> sup = 1/(2n)
        let n = 10usize;
        let col: Vec<f64> = (1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect();
        let d = empirical_cdf_distance(&col, |x| x);
        assert_relative_eq!(d, 1.0 / (2.0 * n as f64), epsilon = 1e-14);
    }

    #[test]
    fn monotone_transform_preserves_ranks() {
        let data = DMatrix::from_fn(20, 2, |i, j| ((i * 13 + j * 3) % 23) as f64);
        let transformed = data.map(|x| (x * 0.3).exp() + x);
        let a = compute_ranks(&data, TiePolicy::Reject).unwrap();
        let b = compute_ranks(&transformed, TiePolicy::Reject).unwrap();
        assert_eq!(a.ranks, b.ranks);
    }
}
