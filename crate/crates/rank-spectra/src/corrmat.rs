//! Covariance and correlation estimators: the sample covariance, Pearson,
//! Kendall and the two Spearman variants, plus the latent-score surrogate
//! matrices their limiting spectra are compared against.
//!
//! Estimator identities used throughout (tie-free data):
//!
//! * `spearman = R^T R / n` with `R` the standardized ranking matrix,
//! * `kendall = 1/(n(n-1)) * sum of A_ij A_ij^T` over distinct pairs,
//! * `improved_spearman = ((n+1) spearman - 3 kendall) / (n-2)`, the
//!   rearrangement of the exact three-index decomposition
//!   `spearman = 3/(n+1) kendall + (n-2)/(n+1) improved_spearman`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ranks::{compute_ranks, LatentScoreMatrix, TiePolicy};

/// Which estimator produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrKind {
    SampleCov,
    Pearson,
    Kendall,
    Spearman,
    ImprovedSpearman,
    SpearmanSurrogateW,
    KendallSurrogate,
}

impl CorrKind {
    pub fn label(&self) -> &'static str {
        match self {
            CorrKind::SampleCov => "sample-cov",
            CorrKind::Pearson => "pearson",
            CorrKind::Kendall => "kendall",
            CorrKind::Spearman => "spearman",
            CorrKind::ImprovedSpearman => "improved-spearman",
            CorrKind::SpearmanSurrogateW => "spearman-surrogate-w",
            CorrKind::KendallSurrogate => "kendall-surrogate",
        }
    }
}

/// A symmetric p x p estimator output tagged with its kind.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub matrix: DMatrix<f64>,
    pub kind: CorrKind,
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    m += t;
    m *= 0.5;
    m
}

/// `S_n = 1/(n-1) * sum (X_i - Xbar)(X_i - Xbar)^T`.
pub fn sample_covariance(data: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "sample covariance needs n >= 2, got {n}"
        )));
    }
    let mut centered = data.clone();
    for j in 0..p {
        let mean = centered.column(j).sum() / n as f64;
        for i in 0..n {
            centered[(i, j)] -= mean;
        }
    }
    let mut gram = DMatrix::zeros(p, p);
    gram.gemm_tr(1.0 / (n as f64 - 1.0), &centered, &centered, 0.0);
    Ok(CorrelationMatrix {
        matrix: symmetrize(gram),
        kind: CorrKind::SampleCov,
    })
}

/// `P_n = diag(S_n)^{-1/2} S_n diag(S_n)^{-1/2}`.
pub fn pearson(data: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let s = sample_covariance(data)?.matrix;
    let p = s.nrows();
    let mut inv_sd = vec![0.0; p];
    for j in 0..p {
        let v = s[(j, j)];
        if v <= 0.0 {
            return Err(Error::ZeroVariance { column: j });
        }
        inv_sd[j] = 1.0 / v.sqrt();
    }
    let mut m = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] = s[(i, j)] * inv_sd[i] * inv_sd[j];
        }
        m[(i, i)] = 1.0;
    }
    Ok(CorrelationMatrix {
        matrix: m,
        kind: CorrKind::Pearson,
    })
}

fn no_ties_check(data: &DMatrix<f64>) -> Result<()> {
    // A tie inside a column makes some pairwise sign zero.
    compute_ranks(data, TiePolicy::Reject).map(|_| ())
}

/// Kendall's rank correlation matrix, `1/(n(n-1)) * sum A_ij A_ij^T`.
///
/// Direct pairwise accumulation: sign vectors of observation pairs are packed
/// into blocks and contracted with one Gram update per block, O(n^2 p)
/// sign evaluations plus O(n^2 p^2 / block) multiply work. Desk-scale n keeps
/// this comfortable; see [`kendall_fast`] for the inversion-count path.
pub fn kendall(data: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "Kendall's tau needs n >= 2, got {n}"
        )));
    }
    no_ties_check(data)?;

    const BLOCK: usize = 4096;
    let mut acc = DMatrix::zeros(p, p);
    let mut block = DMatrix::zeros(BLOCK, p);
    let mut filled = 0usize;
    for i in 0..n {
        for k in (i + 1)..n {
            for j in 0..p {
                let d = data[(i, j)] - data[(k, j)];
                debug_assert!(d != 0.0, "ties were checked above");
                block[(filled, j)] = if d > 0.0 { 1.0 } else { -1.0 };
            }
            filled += 1;
            if filled == BLOCK {
                acc.gemm_tr(1.0, &block, &block, 1.0);
                filled = 0;
            }
        }
    }
    if filled > 0 {
        let partial = block.rows(0, filled).into_owned();
        acc.gemm_tr(1.0, &partial, &partial, 1.0);
    }
    // Ordered pairs double the i<k sum.
    let scale = 2.0 / (n as f64 * (n as f64 - 1.0));
    let mut m = symmetrize(acc * scale);
    for i in 0..p {
        m[(i, i)] = 1.0;
    }
    Ok(CorrelationMatrix {
        matrix: m,
        kind: CorrKind::Kendall,
    })
}

fn merge_count_inversions(values: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = values.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = values.split_at_mut(mid);
    let mut inv = merge_count_inversions(left, &mut buf[..mid])
        + merge_count_inversions(right, &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            buf[k] = right[j];
            inv += (left.len() - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + left.len() - i].copy_from_slice(&left[i..]);
    k += left.len() - i;
    buf[k..k + right.len() - j].copy_from_slice(&right[j..]);
    values[..mid].copy_from_slice(&buf[..mid]);
    values[mid..].copy_from_slice(&buf[mid..]);
    inv
}

/// Kendall's tau via per-column-pair inversion counting, O(n log n) per
/// entry. Exact same values as [`kendall`] on tie-free data.
pub fn kendall_fast(data: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "Kendall's tau needs n >= 2, got {n}"
        )));
    }
    no_ties_check(data)?;

    // Sort row indices once per column.
    let mut orders: Vec<Vec<usize>> = Vec::with_capacity(p);
    for a in 0..p {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&x, &y| data[(x, a)].total_cmp(&data[(y, a)]));
        orders.push(idx);
    }
    let pairs = n as f64 * (n as f64 - 1.0);
    let mut m = DMatrix::identity(p, p);
    let mut seq = vec![0.0; n];
    let mut buf = vec![0.0; n];
    for a in 0..p {
        for b in (a + 1)..p {
            for (i, &row) in orders[a].iter().enumerate() {
                seq[i] = data[(row, b)];
            }
            let inv = merge_count_inversions(&mut seq, &mut buf);
            let tau = 1.0 - 4.0 * inv as f64 / pairs;
            m[(a, b)] = tau;
            m[(b, a)] = tau;
        }
    }
    Ok(CorrelationMatrix {
        matrix: m,
        kind: CorrKind::Kendall,
    })
}

/// Spearman's rank correlation matrix `R^T R / n`.
pub fn spearman(data: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let n = data.nrows();
    if n < 3 {
        return Err(Error::InvalidConfig(format!(
            "Spearman's rho needs n >= 3, got {n}"
        )));
    }
    let ranking = compute_ranks(data, TiePolicy::Reject)?;
    let r = &ranking.standardized;
    let p = r.ncols();
    let mut gram = DMatrix::zeros(p, p);
    gram.gemm_tr(1.0 / n as f64, r, r, 0.0);
    let mut m = symmetrize(gram);
    for i in 0..p {
        m[(i, i)] = 1.0;
    }
    Ok(CorrelationMatrix {
        matrix: m,
        kind: CorrKind::Spearman,
    })
}

/// Hoeffding's unbiased Spearman variant,
/// `3/(n(n-1)(n-2)) * sum over distinct (i,j,k) of A_ij A_ik^T`.
///
/// Computed through the exact rearrangement
/// `((n+1) spearman - 3 kendall) / (n-2)` rather than the cubic triple sum;
/// the two agree to rounding error and the rearrangement costs one rank pass
/// plus one Kendall pass.
pub fn improved_spearman(data: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let n = data.nrows();
    if n < 3 {
        return Err(Error::InvalidConfig(format!(
            "improved Spearman needs n >= 3, got {n}"
        )));
    }
    let rho = spearman(data)?.matrix;
    let tau = kendall(data)?.matrix;
    let nf = n as f64;
    let m = (rho * (nf + 1.0) - tau * 3.0) / (nf - 2.0);
    Ok(CorrelationMatrix {
        matrix: m,
        kind: CorrKind::ImprovedSpearman,
    })
}

/// The latent-score surrogate `W_n = (3/n) * sum A_i A_i^T`.
pub fn spearman_surrogate_w(scores: &LatentScoreMatrix) -> CorrelationMatrix {
    let a = &scores.scores;
    let (n, p) = a.shape();
    let mut gram = DMatrix::zeros(p, p);
    gram.gemm_tr(3.0 / n as f64, a, a, 0.0);
    CorrelationMatrix {
        matrix: symmetrize(gram),
        kind: CorrKind::SpearmanSurrogateW,
    }
}

/// The Kendall surrogate `(2/n) * sum A_i A_i^T + sigma3`.
pub fn kendall_surrogate(
    scores: &LatentScoreMatrix,
    sigma3: &DMatrix<f64>,
) -> Result<CorrelationMatrix> {
    let a = &scores.scores;
    let (n, p) = a.shape();
    if sigma3.nrows() != p || sigma3.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "scores have {} features but sigma3 is {}x{}",
            p,
            sigma3.nrows(),
            sigma3.ncols()
        )));
    }
    let mut gram = DMatrix::zeros(p, p);
    gram.gemm_tr(2.0 / n as f64, a, a, 0.0);
    Ok(CorrelationMatrix {
        matrix: symmetrize(gram) + sigma3,
        kind: CorrKind::KendallSurrogate,
    })
}
