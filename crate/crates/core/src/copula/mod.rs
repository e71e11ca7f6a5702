//! Gaussian-copula joint outage probabilities.
//!
//! Each branch carries a latent Gaussian "inverse stress" `X_i ~ N(1, σ_i²)`
//! and is out when `X_i ≤ 0`; `σ_i` is calibrated so that this happens with
//! the branch's independent outage probability. Latent variables are coupled
//! through a correlation that decays exponentially with inter-branch
//! distance, and the joint outage probability of a set is the multivariate
//! normal lower-orthant mass at zero.

pub mod bvn;
pub mod mvn;
pub mod quadrature;
pub mod normal;

use std::collections::HashMap;
use std::f64::consts::SQRT_2;
use std::sync::RwLock;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use normal::erfc_inv;

use crate::error::{Error, Result};
use crate::geometry::DistanceCache;
use crate::grid::{BranchId, GridCase};

pub use mvn::QmcOptions;

/// Mean of every latent variable.
pub const LATENT_MEAN: f64 = 1.0;

/// Eigenvalues above `-PSD_TOL * trace` count as non-negative.
const PSD_TOL: f64 = 1e-10;

/// Largest change in any correlation that eigenvalue clipping may cause.
const REPAIR_TOL: f64 = 1e-6;

/// Target absolute error of the bivariate algorithm.
pub const BIVARIATE_ABS_TOL: f64 = 1e-10;

/// Marginal model of one branch's latent variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub p: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl Marginal {
    /// Choose σ so that F(0; μ=1, σ) = p, i.e.
    /// σ = −1 / (erf⁻¹(2p − 1)·√2). Requires 0 < p < 0.5.
    pub fn calibrate(p: f64) -> Result<Marginal> {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::Domain(format!(
                "marginal calibration needs 0 < p < 0.5, got {p}"
            )));
        }
        // erf⁻¹(2p − 1) = −erfc⁻¹(2p), evaluated in the complementary form
        // to keep full relative precision for small p.
        let sigma = 1.0 / (erfc_inv(2.0 * p) * SQRT_2);
        Ok(Marginal {
            p,
            mu: LATENT_MEAN,
            sigma,
        })
    }

    /// F(0) under this marginal; equals `p` up to round-off.
    pub fn outage_probability(&self) -> f64 {
        normal::cdf_with(0.0, self.mu, self.sigma)
    }

    /// Standardized failure threshold (0 − μ)/σ.
    pub fn standard_threshold(&self) -> f64 {
        -self.mu / self.sigma
    }
}

/// Exponential-decay spatial correlation ρ(d) = ρ₀·exp(−d/L).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationModel {
    pub rho0: f64,
    /// Characteristic length, km. `L = 0` keeps correlation only between
    /// coincident branches (d = 0).
    pub length_km: f64,
}

impl CorrelationModel {
    pub fn new(rho0: f64, length_km: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho0) {
            return Err(Error::Domain(format!("rho0 must lie in [0, 1), got {rho0}")));
        }
        if !(length_km >= 0.0) || !length_km.is_finite() {
            return Err(Error::Domain(format!(
                "characteristic length must be finite and >= 0, got {length_km}"
            )));
        }
        Ok(CorrelationModel { rho0, length_km })
    }

    pub fn uncorrelated() -> Self {
        CorrelationModel {
            rho0: 0.0,
            length_km: 0.0,
        }
    }

    pub fn correlation(&self, distance_km: f64) -> f64 {
        if self.rho0 == 0.0 {
            return 0.0;
        }
        if self.length_km == 0.0 {
            return if distance_km == 0.0 { self.rho0 } else { 0.0 };
        }
        self.rho0 * (-distance_km / self.length_km).exp()
    }

    fn cache_key(&self) -> (u64, u64) {
        (self.rho0.to_bits(), self.length_km.to_bits())
    }
}

/// Covariance of the latent variables of a branch set.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    k: usize,
    values: Vec<f64>,
    /// Set when eigenvalue clipping was needed to make the matrix PSD.
    pub repaired: bool,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Assemble C_ij = ρ_ij σ_i σ_j from marginals and a symmetric correlation
/// matrix (row-major, unit diagonal). Mildly indefinite inputs are repaired
/// by clipping negative eigenvalues.
pub fn build_covariance(marginals: &[Marginal], correlations: &[f64]) -> Result<CovarianceMatrix> {
    let k = marginals.len();
    if !(1..=5).contains(&k) {
        return Err(Error::Domain(format!("covariance supports 1 to 5 variables, got {k}")));
    }
    if correlations.len() != k * k {
        return Err(Error::Domain(format!(
            "correlation matrix has {} entries for k = {k}",
            correlations.len()
        )));
    }
    let corr = DMatrix::from_row_slice(k, k, correlations);
    let eig = SymmetricEigen::new(corr.clone());
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let trace = corr.trace();
    let (corr, repaired) = if min_eig >= -PSD_TOL * trace {
        (corr, false)
    } else {
        let clipped = eig.eigenvalues.map(|v| v.max(0.0));
        let rebuilt = &eig.eigenvectors
            * DMatrix::from_diagonal(&clipped)
            * eig.eigenvectors.transpose();
        let mut fixed = rebuilt.clone();
        for i in 0..k {
            for j in 0..k {
                fixed[(i, j)] = rebuilt[(i, j)] / (rebuilt[(i, i)] * rebuilt[(j, j)]).sqrt();
            }
        }
        let shift = (&fixed - &corr).amax();
        if shift > REPAIR_TOL {
            return Err(Error::NotRepairable(shift));
        }
        log::warn!("covariance repaired by eigenvalue clipping (max shift {shift:e})");
        (fixed, true)
    };
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let c = corr[(i, j)] * marginals[i].sigma * marginals[j].sigma;
            values[i * k + j] = c;
            values[j * k + i] = c;
        }
    }
    Ok(CovarianceMatrix { k, values, repaired })
}

/// Joint outage probability with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointOutageProbability {
    pub value: f64,
    pub abs_error_estimate: f64,
    /// False when the integrator stopped before meeting its tolerance.
    pub tolerance_met: bool,
}

/// P(X ≤ 0) for X ~ N(μ, C): closed form for k = 1, the bivariate
/// algorithm for k = 2 and lattice integration for k ≥ 3.
pub fn joint_outage_probability(
    marginals: &[Marginal],
    cov: &CovarianceMatrix,
) -> Result<JointOutageProbability> {
    joint_outage_probability_with(marginals, cov, &QmcOptions::default())
}

pub fn joint_outage_probability_with(
    marginals: &[Marginal],
    cov: &CovarianceMatrix,
    opts: &QmcOptions,
) -> Result<JointOutageProbability> {
    let k = marginals.len();
    if k != cov.dim() {
        return Err(Error::Domain(format!(
            "{k} marginals for a {}-dimensional covariance",
            cov.dim()
        )));
    }
    let sd: Vec<f64> = (0..k).map(|i| cov.get(i, i).sqrt()).collect();
    let upper: Vec<f64> = marginals
        .iter()
        .zip(&sd)
        .map(|(m, s)| -m.mu / s)
        .collect();
    let mut corr = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            corr[i * k + j] = if i == j { 1.0 } else { cov.get(i, j) / (sd[i] * sd[j]) };
        }
    }
    let (value, err, met) = match k {
        0 => (1.0, 0.0, true),
        1 => (normal::cdf(upper[0]), 0.0, true),
        2 => (bvn::cdf(upper[0], upper[1], corr[1]), BIVARIATE_ABS_TOL, true),
        _ => {
            let est = mvn::orthant_probability(&upper, &corr, opts);
            (est.value, est.error, est.converged)
        }
    };
    if !met {
        log::warn!("orthant integration missed its tolerance: error {err:e}");
    }
    let p_min = marginals.iter().map(|m| m.p).fold(1.0, f64::min);
    let lower = (marginals.iter().map(|m| m.p).sum::<f64>() - (k as f64 - 1.0)).max(0.0);
    debug_assert!(
        value <= p_min + err.max(1e-15) && value >= lower - err.max(1e-15),
        "Fréchet bounds violated: {value} not in [{lower}, {p_min}]"
    );
    Ok(JointOutageProbability {
        value: value.clamp(lower, p_min),
        abs_error_estimate: err,
        tolerance_met: met,
    })
}

/// Sorted dense branch indices plus the model's (ρ₀, L) bits.
type CacheKey = (Vec<usize>, (u64, u64));

/// Evaluates contingency probabilities on one case, caching distances and
/// results keyed by (sorted branch set, ρ₀, L).
#[derive(Debug)]
pub struct ProbabilityEngine<'a> {
    case: &'a GridCase,
    distances: DistanceCache,
    cache: RwLock<HashMap<CacheKey, JointOutageProbability>>,
    options: QmcOptions,
}

impl<'a> ProbabilityEngine<'a> {
    pub fn new(case: &'a GridCase) -> Self {
        ProbabilityEngine {
            case,
            distances: DistanceCache::new(),
            cache: RwLock::new(HashMap::new()),
            options: QmcOptions::default(),
        }
    }

    pub fn with_options(mut self, options: QmcOptions) -> Self {
        self.options = options;
        self
    }

    pub fn case(&self) -> &GridCase {
        self.case
    }

    /// Joint outage probability of the branches with the given dense indices.
    pub fn probability_indices(
        &self,
        branches: &[usize],
        model: &CorrelationModel,
    ) -> Result<JointOutageProbability> {
        let mut key_set = branches.to_vec();
        key_set.sort_unstable();
        let key = (key_set, model.cache_key());
        if let Some(hit) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(*hit);
        }
        let probs = self.case.outage_probabilities();
        let set = &key.0;
        let marginals = set
            .iter()
            .map(|&b| Marginal::calibrate(probs[b]))
            .collect::<Result<Vec<_>>>()?;
        let k = set.len();
        let mut corr = vec![0.0; k * k];
        for i in 0..k {
            corr[i * k + i] = 1.0;
            for j in i + 1..k {
                let d = self.distances.distance(self.case, set[i], set[j]);
                let r = model.correlation(d);
                corr[i * k + j] = r;
                corr[j * k + i] = r;
            }
        }
        let cov = build_covariance(&marginals, &corr)?;
        let value = joint_outage_probability_with(&marginals, &cov, &self.options)?;
        self.cache.write().expect("cache lock").insert(key, value);
        Ok(value)
    }

    pub fn probability(
        &self,
        branches: &[BranchId],
        model: &CorrelationModel,
    ) -> Result<JointOutageProbability> {
        let idx = self.case.branch_indices(branches)?;
        self.probability_indices(&idx, model)
    }
}

/// Joint outage probability of a branch set under a correlation model, using
/// spatial inter-branch distance.
pub fn contingency_probability(
    case: &GridCase,
    branches: &[BranchId],
    model: &CorrelationModel,
) -> Result<JointOutageProbability> {
    if !(2..=3).contains(&branches.len()) {
        return Err(Error::Domain(format!(
            "contingency probability needs 2 or 3 branches, got {}",
            branches.len()
        )));
    }
    ProbabilityEngine::new(case).probability(branches, model)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on the Gaussian CDF, independent of the closed form.
    fn sigma_oracle(p: f64) -> f64 {
        let (mut lo, mut hi) = (1e-3, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal::cdf(-1.0 / mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn calibrate_unit_sigma() {
        let p = normal::cdf(-1.0);
        let m = Marginal::calibrate(p).unwrap();
        assert!((m.sigma - 1.0).abs() < 1e-12);
        assert!((sigma_oracle(p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibrate_small_probability() {
        let p = 1.04543e-4;
        let m = Marginal::calibrate(p).unwrap();
        assert!((m.sigma - sigma_oracle(p)).abs() < 1e-12);
        assert!((m.sigma - 0.269_703_325_38).abs() < 1e-10);
        assert!((m.outage_probability() - p).abs() < 1e-12);
    }

    #[test]
    fn calibrate_domain() {
        assert!(matches!(Marginal::calibrate(0.5), Err(Error::Domain(_))));
        assert!(matches!(Marginal::calibrate(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn correlation_anchors() {
        let m = CorrelationModel::new(0.15, 300.0).unwrap();
        assert_eq!(m.correlation(0.0), 0.15);
        assert!((m.correlation(300.0) - 0.055_181_916_175_716_35).abs() < 1e-12);
        assert_eq!(CorrelationModel::new(0.0, 300.0).unwrap().correlation(10.0), 0.0);
        let point = CorrelationModel::new(0.15, 0.0).unwrap();
        assert_eq!(point.correlation(0.0), 0.15);
        assert_eq!(point.correlation(1e-9), 0.0);
    }

    #[test]
    fn covariance_formula() {
        let m = [
            Marginal { p: 0.1, mu: 1.0, sigma: 1.0 },
            Marginal { p: 0.1, mu: 1.0, sigma: 2.0 },
        ];
        let c = build_covariance(&m, &[1.0, 0.5, 0.5, 1.0]).unwrap();
        assert_eq!(c.as_slice(), &[1.0, 1.0, 1.0, 4.0]);
        assert!(!c.repaired);
        let d = build_covariance(&m, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(d.get(0, 1), 0.0);
    }

    #[test]
    fn indefinite_covariance_not_repairable() {
        let m = [Marginal::calibrate(0.1).unwrap(); 3];
        let corr = [1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0];
        assert!(matches!(build_covariance(&m, &corr), Err(Error::NotRepairable(_))));
    }

    #[test]
    fn independence_and_comonotone_limits() {
        let m = [Marginal::calibrate(0.1).unwrap(); 2];
        let c = build_covariance(&m, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let j = joint_outage_probability(&m, &c).unwrap();
        assert!((j.value - 0.01).abs() < 1e-10);

        let r = 1.0 - 1e-12;
        let c = build_covariance(&m, &[1.0, r, r, 1.0]).unwrap();
        let j = joint_outage_probability(&m, &c).unwrap();
        assert!((j.value - 0.1).abs() < 1e-6);
    }
}
