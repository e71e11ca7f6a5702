//! Multivariate normal lower-orthant probabilities for three or more
//! dimensions: Genz's separation-of-variables transform integrated with a
//! randomly shifted rank-1 (Richtmyer) lattice rule. Three and four
//! dimensions reduce to smooth one- and two-dimensional integrals that are
//! done by adaptive quadrature instead.
//!
//! The transform turns P(Z ≤ b), Z ~ N(0, R), into an integral over the
//! (k−1)-cube of a product of one-dimensional normal CDFs; the last two
//! variables are integrated together with the bivariate CDF, leaving a
//! (k−2)-dimensional integrand. Independent
//! random shifts of the lattice give an unbiased estimate together with a
//! standard error; the point count doubles until the error target is met.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bvn;
use super::normal::{self, cdf as phi, quantile as phi_inv};
use super::quadrature;

/// Square roots of the first primes; fractional parts generate the lattice.
const PRIMES: [f64; 8] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];

/// Error-estimate multiplier applied to the shift standard error.
const ERROR_MULTIPLIER: f64 = 3.0;

/// Relative accuracy requested from the trivariate quadrature.
const QUAD_REL_TOL: f64 = 1e-11;

/// Relative accuracy of the inner integrals in four dimensions.
const INNER_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmcOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub shifts: usize,
    pub initial_points: usize,
    pub max_points: usize,
    pub seed: u64,
}

impl Default for QmcOptions {
    fn default() -> Self {
        QmcOptions {
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            shifts: 12,
            initial_points: 1 << 10,
            max_points: 1 << 20,
            seed: 0x5eed_c0b0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantEstimate {
    pub value: f64,
    /// Three shift standard errors (lattice) or the Kronrod error estimate.
    pub error: f64,
    pub converged: bool,
}

/// P(Z ≤ upper) for Z ~ N(0, corr), `corr` a k×k correlation matrix
/// (row-major), k ≥ 1.
pub fn orthant_probability(upper: &[f64], corr: &[f64], opts: &QmcOptions) -> OrthantEstimate {
    let k = upper.len();
    assert_eq!(corr.len(), k * k, "correlation matrix must be k×k");
    if upper.contains(&f64::NEG_INFINITY) {
        return OrthantEstimate { value: 0.0, error: 0.0, converged: true };
    }
    let (bounds, chol) = prioritized_cholesky(upper, corr);
    if k == 1 {
        return OrthantEstimate { value: phi(bounds[0]), error: 0.0, converged: true };
    }
    let mut y = vec![0.0; k];
    if k == 2 {
        let value = integrand(&bounds, &chol, k, &[], &mut y);
        return OrthantEstimate { value, error: 0.0, converged: true };
    }
    if k == 3 {
        return trivariate(&bounds, &chol, opts);
    }
    if k == 4 {
        return quadrivariate(&bounds, &chol, opts);
    }
    let dim = k - 2;
    let generators: Vec<f64> = PRIMES[..dim].iter().map(|p| p.sqrt().fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let shifts: Vec<Vec<f64>> = (0..opts.shifts)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();

    let mut n = opts.initial_points.max(1);
    let mut w = vec![0.0; dim];
    loop {
        let mut means = Vec::with_capacity(shifts.len());
        for shift in &shifts {
            let mut acc = 0.0;
            for j in 1..=n {
                for d in 0..dim {
                    let x = (j as f64 * generators[d] + shift[d]).fract();
                    // baker's transform periodizes the integrand
                    w[d] = (2.0 * x - 1.0).abs();
                }
                acc += integrand(&bounds, &chol, k, &w, &mut y);
            }
            means.push(acc / n as f64);
        }
        let m = means.len() as f64;
        let mean = means.iter().sum::<f64>() / m;
        let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m * (m - 1.0)).max(1.0);
        let error = ERROR_MULTIPLIER * var.sqrt();
        let target = opts.abs_tol.max(opts.rel_tol * mean.abs());
        if error <= target || 2 * n > opts.max_points {
            return OrthantEstimate { value: mean, error, converged: error <= target };
        }
        n *= 2;
    }
}

fn integrand(bounds: &[f64], chol: &[f64], k: usize, w: &[f64], y: &mut [f64]) -> f64 {
    let mut f = 1.0;
    for i in 0..k - 2 {
        let e = phi((bounds[i] - conditional_mean(chol, k, i, y)) / chol[i * k + i]);
        f *= e;
        if f == 0.0 {
            return 0.0;
        }
        // clamp keeps Φ⁻¹ finite at the cube boundary
        let u = (w[i] * e).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
        y[i] = phi_inv(u);
    }
    // the last two variables are integrated exactly
    let (a, b) = (k - 2, k - 1);
    let la = chol[a * k + a];
    let (lba, lbb) = (chol[b * k + a], chol[b * k + b]);
    let sb = (lba * lba + lbb * lbb).sqrt();
    let h = (bounds[a] - conditional_mean(chol, k, a, y)) / la;
    let g = (bounds[b] - conditional_mean(chol, k, b, y)) / sb;
    f * bvn::cdf(h, g, lba / sb)
}

/// k = 3: integrate φ(y)·Φ₂(·|y) over the first standardized variable with
/// adaptive Gauss–Kronrod quadrature.
fn trivariate(bounds: &[f64], chol: &[f64], opts: &QmcOptions) -> OrthantEstimate {
    let k = 3;
    let top = bounds[0] / chol[0];
    // φ underflows below this point
    let bottom = top.min(0.0) - 38.5;
    let (la, lba, lbb) = (chol[4], chol[7], chol[8]);
    let sb = (lba * lba + lbb * lbb).sqrt();
    let r = lba / sb;
    let f = |y: f64| {
        let h = (bounds[1] - chol[k] * y) / la;
        let g = (bounds[2] - chol[2 * k] * y) / sb;
        normal::pdf(y) * bvn::cdf(h, g, r)
    };
    let (value, error) = quadrature::integrate(f, bottom, top, QUAD_REL_TOL);
    let target = opts.abs_tol.max(opts.rel_tol * value.abs());
    OrthantEstimate { value, error, converged: error <= target }
}

/// k = 4: the same reduction with two outer variables, integrated by nested
/// quadrature.
fn quadrivariate(bounds: &[f64], chol: &[f64], opts: &QmcOptions) -> OrthantEstimate {
    let k = 4;
    let l = |i: usize, j: usize| chol[i * k + j];
    let top = bounds[0] / l(0, 0);
    let (lcd, ldd) = (l(3, 2), l(3, 3));
    let sd = (lcd * lcd + ldd * ldd).sqrt();
    let r = lcd / sd;
    let inner_err = std::cell::Cell::new(0.0f64);
    let outer = |y0: f64| {
        let w0 = normal::pdf(y0);
        if w0 == 0.0 {
            return 0.0;
        }
        let hi = (bounds[1] - l(1, 0) * y0) / l(1, 1);
        let f = |y1: f64| {
            let h = (bounds[2] - l(2, 0) * y0 - l(2, 1) * y1) / l(2, 2);
            let g = (bounds[3] - l(3, 0) * y0 - l(3, 1) * y1) / sd;
            normal::pdf(y1) * bvn::cdf(h, g, r)
        };
        let (v, e) = quadrature::integrate(f, hi.min(0.0) - 38.5, hi, INNER_REL_TOL);
        inner_err.set(inner_err.get().max(e));
        w0 * v
    };
    let (value, error) = quadrature::integrate(outer, top.min(0.0) - 38.5, top, QUAD_REL_TOL);
    // the outer density integrates to at most one, so inner errors add at most their max
    let error = error + inner_err.get();
    let target = opts.abs_tol.max(opts.rel_tol * value.abs());
    OrthantEstimate { value, error, converged: error <= target }
}

fn conditional_mean(chol: &[f64], k: usize, i: usize, y: &[f64]) -> f64 {
    let lim = i.min(k - 2);
    (0..lim).map(|j| chol[i * k + j] * y[j]).sum()
}

/// Cholesky factor with variables reordered so that, at each step, the
/// variable with the smallest conditional probability comes first. Returns
/// the reordered upper limits and the row-major lower-triangular factor.
fn prioritized_cholesky(upper: &[f64], corr: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = upper.len();
    let mut a = corr.to_vec();
    let mut b = upper.to_vec();
    let mut l = vec![0.0; k * k];
    let mut y = vec![0.0; k];
    for i in 0..k {
        // pick the remaining variable with the smallest conditional mass
        let mut best = i;
        let mut best_p = f64::INFINITY;
        for j in i..k {
            let mut s = 0.0;
            let mut var = a[j * k + j];
            for m in 0..i {
                s += l[j * k + m] * y[m];
                var -= l[j * k + m] * l[j * k + m];
            }
            let sd = var.max(0.0).sqrt();
            let p = if sd > 0.0 { phi((b[j] - s) / sd) } else { 0.0 };
            if p < best_p - 1e-15 {
                best = j;
                best_p = p;
            }
        }
        if best != i {
            b.swap(i, best);
            for c in 0..k {
                a.swap(i * k + c, best * k + c);
            }
            for r in 0..k {
                a.swap(r * k + i, r * k + best);
            }
            for c in 0..i {
                l.swap(i * k + c, best * k + c);
            }
        }
        let mut diag = a[i * k + i];
        for m in 0..i {
            diag -= l[i * k + m] * l[i * k + m];
        }
        let d = diag.max(1e-300).sqrt();
        l[i * k + i] = d;
        for r in i + 1..k {
            let mut s = a[r * k + i];
            for m in 0..i {
                s -= l[r * k + m] * l[i * k + m];
            }
            l[r * k + i] = s / d;
        }
        // expected value of the chosen variable inside its truncation,
        // used to rank the next choice
        let mut s = 0.0;
        for m in 0..i {
            s += l[i * k + m] * y[m];
        }
        let t = (b[i] - s) / d;
        let pt = phi(t);
        y[i] = if pt > 0.0 {
            -(-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt() / pt
        } else {
            t
        };
    }
    (b, l)
}
