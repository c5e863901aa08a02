//! Seeded synthetic data generation and population covariance models.
//!
//! Every sampler is a pure function of `(model, n, seed, replication)`:
//! replication `r` draws from stream `r` of a ChaCha12 generator keyed by the
//! master seed (`seed_from_u64`, which expands the master through SplitMix64).
//! Identical inputs reproduce bit-identical matrices on any run of the same
//! build, and distinct replications use non-overlapping streams.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranks::normal_cdf;

/// Population covariance with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CovarianceModel {
    Identity { p: usize },
    /// `1` on the diagonal and `rho` on the first off-diagonals. Requires
    /// `|rho| < 1/2` strictly: at the boundary the limiting spectrum touches
    /// zero and the factorization degenerates for large `p`.
    Tridiagonal { p: usize, rho: f64 },
    Explicit { matrix: Vec<Vec<f64>> },
}

impl CovarianceModel {
    pub fn dimension(&self) -> usize {
        match self {
            CovarianceModel::Identity { p } | CovarianceModel::Tridiagonal { p, .. } => *p,
            CovarianceModel::Explicit { matrix } => matrix.len(),
        }
    }
}

/// The entrywise arcsine transforms of a latent correlation matrix:
/// `sigma1 = (2/pi) asin(S)`, `sigma2 = (2/pi) asin(S/2)` and
/// `sigma3 = sigma1 - 2 sigma2`.
#[derive(Debug, Clone)]
pub struct TransformedCovariance {
    pub sigma1: DMatrix<f64>,
    pub sigma2: DMatrix<f64>,
    pub sigma3: DMatrix<f64>,
}

/// Master seed plus the stream-derivation rule for replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
}

impl Seed {
    pub fn new(master: u64) -> Self {
        Seed { master }
    }

    /// Deterministic generator for one replication: ChaCha12 keyed by the
    /// master seed with the replication index as the stream id.
    pub fn rng_for(&self, replication: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master);
        rng.set_stream(replication);
        rng
    }
}

/// Materialize the model as a dense symmetric positive-definite matrix.
pub fn build_covariance(model: &CovarianceModel) -> Result<DMatrix<f64>> {
    let sigma = match model {
        CovarianceModel::Identity { p } => DMatrix::identity(*p, *p),
        CovarianceModel::Tridiagonal { p, rho } => {
            if !(rho.abs() < 0.5) {
                return Err(Error::InvalidRho(*rho));
            }
            DMatrix::from_fn(*p, *p, |i, j| {
                if i == j {
                    1.0
                } else if i.abs_diff(j) == 1 {
                    *rho
                } else {
                    0.0
                }
            })
        }
        CovarianceModel::Explicit { matrix } => {
            let p = matrix.len();
            if matrix.iter().any(|row| row.len() != p) {
                return Err(Error::DimensionMismatch(
                    "explicit covariance must be square".into(),
                ));
            }
            let m = DMatrix::from_fn(p, p, |i, j| matrix[i][j]);
            let asym = (&m - m.transpose()).amax();
            if asym > 1e-12 {
                return Err(Error::NotSymmetric(asym));
            }
            for i in 0..p {
                if (m[(i, i)] - 1.0).abs() > 1e-12 {
                    return Err(Error::NonUnitDiagonal {
                        index: i,
                        value: m[(i, i)],
                    });
                }
            }
            m
        }
    };
    // Positive definiteness gate: a failed Cholesky factorization rejects the model.
    if sigma.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(sigma)
}

/// Entrywise `sigma1/sigma2/sigma3` transforms of a correlation matrix.
///
/// Entries are validated against [-1, 1] with 1e-12 slack and clamped before
/// `asin`. Diagonals are pinned to their closed-form values (1, 1/3, 1/3).
pub fn arcsin_transforms(sigma: &DMatrix<f64>) -> Result<TransformedCovariance> {
    let p = sigma.nrows();
    if sigma.ncols() != p {
        return Err(Error::DimensionMismatch(
            "arcsine transform needs a square matrix".into(),
        ));
    }
    for i in 0..p {
        for j in 0..p {
            let v = sigma[(i, j)];
            if v.abs() > 1.0 + 1e-12 {
                return Err(Error::EntryOutOfRange {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    let clamped = sigma.map(|v| v.clamp(-1.0, 1.0));
    let frac = 2.0 / std::f64::consts::PI;
    let mut sigma1 = clamped.map(|v| frac * v.asin());
    let mut sigma2 = clamped.map(|v| frac * (v / 2.0).asin());
    for i in 0..p {
        sigma1[(i, i)] = 1.0;
        sigma2[(i, i)] = 1.0 / 3.0;
    }
    let sigma3 = &sigma1 - 2.0 * &sigma2;
    Ok(TransformedCovariance {
        sigma1,
        sigma2,
        sigma3,
    })
}

fn standard_normal_matrix(n: usize, p: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
    // Row-major fill order is part of the reproducibility contract.
    let mut m = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            m[(i, j)] = StandardNormal.sample(rng);
        }
    }
    m
}

/// Draw `n` i.i.d. rows from `N(0, Sigma)` for the given replication stream.
///
/// Rows are `Z L^T` where `L` is the lower Cholesky factor of `Sigma` and `Z`
/// is standard normal.
pub fn sample_gaussian(
    model: &CovarianceModel,
    n: usize,
    seed: Seed,
    replication: u64,
) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 observations, got {n}"
        )));
    }
    let p = model.dimension();
    let mut rng = seed.rng_for(replication);
    let z = standard_normal_matrix(n, p, &mut rng);
    match model {
        CovarianceModel::Identity { .. } => Ok(z),
        _ => {
            let sigma = build_covariance(model)?;
            let chol = sigma.cholesky().ok_or(Error::NotPositiveDefinite)?;
            Ok(z * chol.l().transpose())
        }
    }
}

/// Draw from the non-paranormal model with standard Cauchy marginals.
///
/// A latent `Y ~ N(0, Sigma)` (the same draw `sample_gaussian` would produce
/// for this `(seed, replication)`) is pushed through the strictly increasing
/// map `y -> tan((pi/2) * erf(y/sqrt(2)))`, which composes `Phi` with the
/// Cauchy quantile. Ranks of the output equal ranks of the latent matrix.
pub fn sample_cauchy_nonparanormal(
    model: &CovarianceModel,
    n: usize,
    seed: Seed,
    replication: u64,
) -> Result<DMatrix<f64>> {
    let latent = sample_gaussian(model, n, seed, replication)?;
    Ok(latent.map(cauchy_from_gaussian))
}

/// The monotone transform applied entrywise by [`sample_cauchy_nonparanormal`].
pub fn cauchy_from_gaussian(y: f64) -> f64 {
    // tan(pi * (Phi(y) - 1/2)) computed via erf to avoid cancellation at 0.
    (std::f64::consts::FRAC_PI_2 * libm::erf(y / std::f64::consts::SQRT_2)).tan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranks::{compute_ranks, TiePolicy};
    use approx::assert_relative_eq;

    #[test]
    fn identity_model_is_identity() {
        let m = build_covariance(&CovarianceModel::Identity { p: 3 }).unwrap();
        assert_eq!(m, DMatrix::identity(3, 3));
    }

    #[test]
    fn tridiagonal_near_boundary() {
        let rho = 0.5 - 1e-6;
        let m = build_covariance(&CovarianceModel::Tridiagonal { p: 4, rho }).unwrap();
        for i in 0..4 {
            assert_eq!(m[(i, i)], 1.0);
        }
        assert_eq!(m[(0, 1)], rho);
        assert_eq!(m[(1, 2)], rho);
        assert_eq!(m[(0, 2)], 0.0);
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn tridiagonal_rho_out_of_range() {
        for rho in [0.5, -0.5, 0.7] {
            match build_covariance(&CovarianceModel::Tridiagonal { p: 4, rho }) {
                Err(Error::InvalidRho(_)) => {}
                other => panic!("expected InvalidRho, got {other:?}"),
            }
        }
    }

    #[test]
    fn explicit_diagonal_checked() {
        let model = CovarianceModel::Explicit {
            matrix: vec![vec![1.1, 0.0], vec![0.0, 1.0]],
        };
        match build_covariance(&model) {
            Err(Error::NonUnitDiagonal { index: 0, .. }) => {}
            other => panic!("expected NonUnitDiagonal, got {other:?}"),
        }
    }

    #[test]
    fn explicit_not_pd_rejected() {
        let model = CovarianceModel::Explicit {
            matrix: vec![vec![1.0, 0.999], vec![0.999, 1.0]],
        };
        build_covariance(&model).unwrap();
        let model = CovarianceModel::Explicit {
            matrix: vec![vec![1.0, 1.0 + 1e-13], vec![1.0 + 1e-13, 1.0]],
        };
        assert!(build_covariance(&model).is_err());
    }

    #[test]
    fn arcsin_of_identity() {
        let t = arcsin_transforms(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(t.sigma1, DMatrix::identity(3, 3));
        for i in 0..3 {
            for j in 0..3 {
                let want2 = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert_relative_eq!(t.sigma2[(i, j)], want2, epsilon = 1e-15);
                assert_relative_eq!(t.sigma3[(i, j)], want2, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn arcsin_of_half() {
        // (2/pi) asin(1/2) = 1/3 exactly; (2/pi) asin(1/4) frozen from mpmath.
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let t = arcsin_transforms(&s).unwrap();
        assert_relative_eq!(t.sigma1[(0, 1)], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(t.sigma2[(0, 1)], 0.160_861_246_510_332_49, epsilon = 1e-15);
    }

    #[test]
    fn arcsin_rejects_out_of_range() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.5, 1.5, 1.0]);
        match arcsin_transforms(&s) {
            Err(Error::EntryOutOfRange { value, .. }) => assert_eq!(value, 1.5),
            other => panic!("expected EntryOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn gaussian_sampling_is_deterministic() {
        let model = CovarianceModel::Tridiagonal { p: 3, rho: 0.3 };
        let a = sample_gaussian(&model, 50, Seed::new(7), 2).unwrap();
        let b = sample_gaussian(&model, 50, Seed::new(7), 2).unwrap();
        assert_eq!(a, b);
        let c = sample_gaussian(&model, 50, Seed::new(7), 3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_moments_univariate() {
        let n = 1_000_000;
        let x = sample_gaussian(&CovarianceModel::Identity { p: 1 }, n, Seed::new(11), 0).unwrap();
        let mean = x.column(0).sum() / n as f64;
        let var = x.column(0).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((0.99..=1.01).contains(&var), "var {var}");
    }

    #[test]
    fn gaussian_correlation_tridiagonal() {
        let n = 100_000;
        let x = sample_gaussian(
            &CovarianceModel::Tridiagonal { p: 2, rho: 0.4 },
            n,
            Seed::new(5),
            1,
        )
        .unwrap();
        let m0 = x.column(0).sum() / n as f64;
        let m1 = x.column(1).sum() / n as f64;
        let mut c00 = 0.0;
        let mut c11 = 0.0;
        let mut c01 = 0.0;
        for i in 0..n {
            let a = x[(i, 0)] - m0;
            let b = x[(i, 1)] - m1;
            c00 += a * a;
            c11 += b * b;
            c01 += a * b;
        }
        let corr = c01 / (c00 * c11).sqrt();
        assert!((0.39..=0.41).contains(&corr), "corr {corr}");
    }

    #[test]
    fn cauchy_preserves_ranks_and_is_finite() {
        let model = CovarianceModel::Tridiagonal { p: 3, rho: 0.2 };
        let latent = sample_gaussian(&model, 200, Seed::new(3), 4).unwrap();
        let cauchy = sample_cauchy_nonparanormal(&model, 200, Seed::new(3), 4).unwrap();
        assert!(cauchy.iter().all(|v| v.is_finite()));
        let ra = compute_ranks(&latent, TiePolicy::Reject).unwrap();
        let rb = compute_ranks(&cauchy, TiePolicy::Reject).unwrap();
        assert_eq!(ra.ranks, rb.ranks);
    }

    #[test]
    fn cauchy_median_near_zero() {
        let n = 100_000;
        let x = sample_cauchy_nonparanormal(&CovarianceModel::Identity { p: 1 }, n, Seed::new(9), 0)
            .unwrap();
        let mut col: Vec<f64> = x.column(0).iter().copied().collect();
        col.sort_by(f64::total_cmp);
        let median = (col[n / 2 - 1] + col[n / 2]) / 2.0;
        assert!(median.abs() < 0.02, "median {median}");
    }
}
