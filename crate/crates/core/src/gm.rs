//! The generalized Mallows model over top-t rankings, its conjugate prior,
//! and the finite-n Beta analogue `B̃(a, b, n)` with its Beta approximation.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use thiserror::Error;

use crate::quadrature::log_integrate_unimodal;
use crate::rankings::{build_from_code, code, CodeVector, Permutation, SuffStats, TopTRanking};

/// Below this θ the geometric sums use their Taylor expansion at 0.
pub const THETA_SERIES_CUTOFF: f64 = 1e-8;

const BETA_TILDE_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Cluster parameters: central permutation and per-rank concentrations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmParams {
    pub sigma: Permutation,
    pub theta: Vec<f64>,
}

impl GmParams {
    pub fn new(sigma: Permutation, theta: Vec<f64>) -> Result<Self, ModelError> {
        if theta.is_empty() || theta.len() >= sigma.n() {
            return Err(ModelError::InvalidParams(format!(
                "need 1 <= len(theta) < n, got {} for n = {}",
                theta.len(),
                sigma.n()
            )));
        }
        if let Some(bad) = theta.iter().find(|&&x| !(x >= 0.0 && x.is_finite())) {
            return Err(ModelError::InvalidParams(format!(
                "theta must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(Self { sigma, theta })
    }

    pub fn n(&self) -> usize {
        self.sigma.n()
    }
}

/// Hyperparameters: prior strength `nu`, per-rank pseudo-inversion rates `r`
/// and the Dirichlet process concentration `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorParams {
    pub nu: f64,
    pub r: Vec<f64>,
    pub alpha: f64,
}

impl PriorParams {
    pub fn new(nu: f64, r: Vec<f64>, alpha: f64) -> Result<Self, ModelError> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(nu) {
            return Err(ModelError::InvalidPrior(format!(
                "nu must be positive, got {nu}"
            )));
        }
        if !positive(alpha) {
            return Err(ModelError::InvalidPrior(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if r.is_empty() {
            return Err(ModelError::InvalidPrior("r must not be empty".into()));
        }
        if let Some(bad) = r.iter().find(|&&x| !positive(x)) {
            return Err(ModelError::InvalidPrior(format!(
                "every r_j must be positive, got {bad}"
            )));
        }
        Ok(Self { nu, r, alpha })
    }

    /// The same `r` at every one of `t` ranks.
    pub fn uniform(nu: f64, r: f64, alpha: f64, t: usize) -> Result<Self, ModelError> {
        Self::new(nu, vec![r; t], alpha)
    }

    pub fn t(&self) -> usize {
        self.r.len()
    }

    /// `nu * r_j`, the prior's linear coefficient at rank `j`.
    #[inline]
    pub fn nu_r(&self, j: usize) -> f64 {
        self.nu * self.r[j]
    }
}

/// `ln ψ_m(θ) = ln Σ_{k=0}^{m} e^{-kθ}`.
pub fn log_psi(theta: f64, m: usize) -> f64 {
    debug_assert!(theta >= 0.0);
    let mf = m as f64;
    if theta < THETA_SERIES_CUTOFF {
        // mean m/2 and variance m(m+2)/12 of the uniform law on 0..=m
        return (mf + 1.0).ln() - theta * mf / 2.0 + theta * theta * mf * (mf + 2.0) / 24.0;
    }
    (-(-(mf + 1.0) * theta).exp_m1()).ln() - (-(-theta).exp_m1()).ln()
}

/// Mean of the truncated geometric law `P(k) ∝ e^{-kθ}` on `0..=m`, which is
/// `-d/dθ ln ψ_m(θ)`.
pub(crate) fn truncated_geometric_mean(theta: f64, m: usize) -> f64 {
    let mf = m as f64;
    if theta < 1e-6 {
        return mf / 2.0 - theta * mf * (mf + 2.0) / 12.0;
    }
    1.0 / theta.exp_m1() - (mf + 1.0) / ((mf + 1.0) * theta).exp_m1()
}

/// Draws `k ∈ 0..=m` with probability `e^{-θk} / ψ_m(θ)` by inverting the CDF.
pub fn sample_truncated_geometric<R: Rng + ?Sized>(theta: f64, m: usize, rng: &mut R) -> usize {
    if theta < THETA_SERIES_CUTOFF {
        return rng.random_range(0..=m);
    }
    let u: f64 = rng.random();
    // P(s <= k) = (1 - e^{-θ(k+1)}) / (1 - e^{-θ(m+1)})
    let total = -(-(m as f64 + 1.0) * theta).exp_m1();
    let k = (-(-u * total).ln_1p() / theta).floor();
    if k.is_finite() && k >= 0.0 {
        (k as usize).min(m)
    } else {
        0
    }
}

/// Log-probability of a top-t ranking under GM(σ, θ): the marginal over all
/// completions, which only involves the first `t` code entries.
pub fn gm_log_prob(pi: &TopTRanking, params: &GmParams) -> f64 {
    let s = code(pi, &params.sigma);
    log_prob_from_code(s.values(), &params.theta, pi.n())
}

#[inline]
pub(crate) fn log_prob_from_code(s: &[usize], theta: &[f64], n: usize) -> f64 {
    assert!(s.len() <= theta.len(), "ranking is longer than theta");
    s.iter()
        .zip(theta)
        .enumerate()
        .map(|(j, (&sj, &th))| -th * sj as f64 - log_psi(th, n - 1 - j))
        .sum()
}

/// Draws a top-`t` ranking from GM(σ, θ) through its independent code entries.
pub fn sample_gm<R: Rng + ?Sized>(params: &GmParams, t: usize, rng: &mut R) -> TopTRanking {
    let n = params.n();
    assert!(
        (1..n).contains(&t) && t <= params.theta.len(),
        "invalid ranking length {t}"
    );
    let s = (0..t)
        .map(|j| sample_truncated_geometric(params.theta[j], n - 1 - j, rng))
        .collect();
    let s = CodeVector::new(s, n).expect("sampled code lies in range");
    build_from_code(&s, &params.sigma)
}

/// Unnormalized log posterior of `(σ, θ)` given the statistics under the
/// prior that is uninformative about σ. Empty statistics give the prior.
pub fn posterior_log_energy(
    sigma: &Permutation,
    theta: &[f64],
    stats: &SuffStats,
    prior: &PriorParams,
) -> f64 {
    assert!(stats.t_max() <= theta.len() && theta.len() <= prior.t());
    let n = sigma.n();
    theta
        .iter()
        .enumerate()
        .map(|(j, &th)| {
            let (l, count) = if j < stats.t_max() {
                (stats.l_sigma(j, sigma) as f64, stats.count_at(j) as f64)
            } else {
                (0.0, 0.0)
            };
            -((prior.nu_r(j) + l) * th + (prior.nu + count) * log_psi(th, n - 1 - j))
        })
        .sum()
}

/// `ln[(n-t)!/n!]`: the prior predictive probability of any single top-t
/// ranking.
pub fn log_marginal_single(n: usize, t: usize) -> f64 {
    assert!(t >= 1 && t < n, "need 1 <= t < n");
    -((n - t + 1)..=n).map(|k| (k as f64).ln()).sum::<f64>()
}

/// `ln B̃(a, b, n) = ln ∫_0^∞ e^{-θa} ψ_n(θ)^{-(b-1)} dθ`.
///
/// The integrand is log-concave for `b >= 1` and decreasing for `b <= 1`, so
/// it is integrated in log space around its mode.
pub fn log_beta_tilde(a: f64, b: f64, n: usize) -> f64 {
    assert!(a > 0.0 && a.is_finite(), "B̃ needs a > 0, got {a}");
    assert!(b >= 0.0 && b.is_finite(), "B̃ needs b >= 0, got {b}");
    assert!(n >= 1, "B̃ needs n >= 1");
    let log_f = move |theta: f64| -a * theta - (b - 1.0) * log_psi(theta, n);
    let mode = beta_tilde_mode(a, b, n);
    log_integrate_unimodal(log_f, 0.0, f64::INFINITY, mode, BETA_TILDE_REL_TOL)
}

/// Maximizer of `-aθ - c ln ψ_m(θ)` on `[0, ∞)` for `c = b - 1`.
pub(crate) fn beta_tilde_mode(a: f64, b: f64, m: usize) -> f64 {
    let c = b - 1.0;
    // derivative: -a + c * mean(θ), with mean decreasing from m/2 to 0
    if c <= 0.0 || c * (m as f64) / 2.0 <= a {
        return 0.0;
    }
    let slope = |th: f64| -a + c * truncated_geometric_mean(th, m);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while slope(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `1 - Beta(a, b) / B̃(a, b, n)`: the relative error of the infinite-n
/// approximation.
pub fn approx_error(a: f64, b: f64, n: usize) -> f64 {
    -(ln_beta(a, b) - log_beta_tilde(a, b, n)).exp_m1()
}

/// Memo table for `ln B̃`, keyed on `(a, b, n)` with `a` and `b` rounded to
/// 1e-9. Meant to live for one sweep or one batch of evaluations.
#[derive(Debug, Default, Clone)]
pub struct BetaTildeCache {
    table: HashMap<(i64, i64, usize), f64>,
}

impl BetaTildeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn log_beta_tilde(&mut self, a: f64, b: f64, n: usize) -> f64 {
        let key = ((a * 1e9).round() as i64, (b * 1e9).round() as i64, n);
        *self
            .table
            .entry(key)
            .or_insert_with(|| log_beta_tilde(a, b, n))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn clear(&mut self) {
        self.table.clear();
    }
}

/// Which Beta-type function the θ-marginalized predictive uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictiveForm {
    /// `B̃(·, ·, n - j)`, exact for finite `n`.
    Exact,
    /// `Beta(·, ·)`, the infinite-n approximation.
    BetaApprox,
}

/// Log predictive probability of a ranking with code `s` joining a cluster
/// whose statistics (excluding the ranking) have `S_j = l_sums[j]` and
/// `N_j = counts[j]`, with θ integrated out.
pub fn log_predictive_from_parts(
    s: &[usize],
    l_sums: &[i64],
    counts: &[usize],
    prior: &PriorParams,
    n: usize,
    form: PredictiveForm,
    cache: &mut BetaTildeCache,
) -> f64 {
    s.iter()
        .enumerate()
        .map(|(j, &sj)| {
            let a = prior.nu_r(j) + l_sums.get(j).copied().unwrap_or(0) as f64;
            let b = prior.nu + counts.get(j).copied().unwrap_or(0) as f64 + 1.0;
            match form {
                PredictiveForm::BetaApprox => ln_beta(sj as f64 + a, b + 1.0) - ln_beta(a, b),
                PredictiveForm::Exact => {
                    let m = n - 1 - j;
                    cache.log_beta_tilde(sj as f64 + a, b + 1.0, m) - cache.log_beta_tilde(a, b, m)
                }
            }
        })
        .sum()
}

/// Log probability of `pi` under a cluster with central permutation `sigma`
/// and statistics `stats` (which must exclude `pi`), θ integrated out.
pub fn log_predictive_ratio(
    pi: &TopTRanking,
    sigma: &Permutation,
    stats: &SuffStats,
    prior: &PriorParams,
    form: PredictiveForm,
) -> f64 {
    let s = code(pi, sigma);
    let l_sums = stats.l_sigma_all(sigma);
    let mut cache = BetaTildeCache::new();
    log_predictive_from_parts(
        s.values(),
        &l_sums,
        stats.counts(),
        prior,
        pi.n(),
        form,
        &mut cache,
    )
}
