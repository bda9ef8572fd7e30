//! Partition comparison, exhaustive and quadrature oracles, the
//! approximation-error table, and planted-mixture data generation.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gm::{
    approx_error, beta_tilde_mode, gm_log_prob, log_psi, sample_gm, GmParams, PriorParams,
};
use crate::quadrature::{integrate, unimodal_breakpoints};
use crate::rankings::{Permutation, RankingError, SuffStats, TopTRanking};
use crate::samplers::{sample_log_categorical, sample_sigma_stagewise};

/// Largest `n` for which [`enumerate_sigma_posterior`] will list `S_n`.
pub const MAX_ENUMERATION_N: usize = 7;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("clusterings have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("a clustering needs at least one point")]
    Empty,
    #[error("enumeration over {n}! permutations exceeds the limit n <= {max}")]
    TooLarge { n: usize, max: usize },
    #[error("invalid mixture spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    labels: Vec<usize>,
}

impl Clustering {
    pub fn new(labels: Vec<usize>) -> Result<Self, EvalError> {
        if labels.is_empty() {
            return Err(EvalError::Empty);
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Variation of information `H(C1|C2) + H(C2|C1)` in nats.
pub fn vi_distance(c1: &Clustering, c2: &Clustering) -> Result<f64, EvalError> {
    if c1.len() != c2.len() {
        return Err(EvalError::LengthMismatch(c1.len(), c2.len()));
    }
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut m1: HashMap<usize, usize> = HashMap::new();
    let mut m2: HashMap<usize, usize> = HashMap::new();
    for (&a, &b) in c1.labels.iter().zip(&c2.labels) {
        *joint.entry((a, b)).or_default() += 1;
        *m1.entry(a).or_default() += 1;
        *m2.entry(b).or_default() += 1;
    }
    // VI = 2 H(C1, C2) - H(C1) - H(C2); entropies summed over sorted counts
    // so that swapping the arguments gives a bit-identical result
    let n = c1.len() as f64;
    let entropy = |counts: Vec<usize>| {
        let mut counts = counts;
        counts.sort_unstable();
        -counts
            .iter()
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum::<f64>()
    };
    let h_joint = entropy(joint.into_values().collect());
    let h1 = entropy(m1.into_values().collect());
    let h2 = entropy(m2.into_values().collect());
    Ok((2.0 * h_joint - (h1 + h2)).max(0.0))
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    loop {
        out.push(Permutation::new(current.clone()).expect("a permutation"));
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
}

/// The law of σ given θ and the data, `∝ e^{-Σ_j θ_j L_σ(R_j)}`, listed over
/// all of `S_n` in lexicographic order.
pub fn enumerate_sigma_posterior(
    theta: &[f64],
    stats: &SuffStats,
    _prior: &PriorParams,
) -> Result<Vec<(Permutation, f64)>, EvalError> {
    let n = stats.n();
    if n > MAX_ENUMERATION_N {
        return Err(EvalError::TooLarge {
            n,
            max: MAX_ENUMERATION_N,
        });
    }
    let perms = all_permutations(n);
    let log_w: Vec<f64> = perms
        .iter()
        .map(|sigma| {
            -(0..stats.t_max())
                .map(|j| theta.get(j).copied().unwrap_or(0.0) * stats.l_sigma(j, sigma) as f64)
                .sum::<f64>()
        })
        .collect();
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = log_w.iter().map(|w| (w - max).exp()).sum();
    Ok(perms
        .into_iter()
        .zip(log_w)
        .map(|(p, w)| (p, (w - max).exp() / total))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaMoments {
    pub mean: f64,
    pub variance: f64,
    /// `ln ∫ e^{-Aθ - C ln ψ_m(θ)} dθ` over the support.
    pub log_norm: f64,
}

/// Mean and variance of θ under `∝ e^{-Aθ - C ln ψ_m(θ)}` on
/// `[0, max_theta]`, by adaptive quadrature.
pub fn theta_moments(lin: f64, pow: f64, m: usize, max_theta: f64) -> ThetaMoments {
    let log_f = |th: f64| -lin * th - pow * log_psi(th, m);
    let mode = beta_tilde_mode(lin, pow + 1.0, m).min(max_theta);
    let peak = log_f(mode);
    let points = unimodal_breakpoints(&log_f, 0.0, max_theta, mode);
    let moment = |k: i32| {
        integrate(
            |th| th.powi(k) * (log_f(th) - peak).exp(),
            &points,
            1e-13,
            0.0,
        )
        .value
    };
    let (z, m1, m2) = (moment(0), moment(1), moment(2));
    let mean = m1 / z;
    ThetaMoments {
        mean,
        variance: m2 / z - mean * mean,
        log_norm: peak + z.ln(),
    }
}

/// Posterior moments of θ_j (rank `j`, 0-based) given `S_j` and `N_j` on
/// `[0, 50]`.
pub fn theta_posterior_moments(
    j: usize,
    s_j: f64,
    n_j: usize,
    prior: &PriorParams,
    n: usize,
) -> ThetaMoments {
    theta_moments(prior.nu_r(j) + s_j, prior.nu + n_j as f64, n - 1 - j, 50.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxErrorRow {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub error: f64,
}

/// `1 - Beta(a, b)/B̃(a, b, n)` over the full grid, ordered by n, then b,
/// then a.
pub fn approx_error_study(
    n_values: &[usize],
    a_grid: &[f64],
    b_grid: &[f64],
) -> Vec<ApproxErrorRow> {
    let mut rows = Vec::with_capacity(n_values.len() * a_grid.len() * b_grid.len());
    for &n in n_values {
        for &b in b_grid {
            for &a in a_grid {
                rows.push(ApproxErrorRow {
                    n,
                    a,
                    b,
                    error: approx_error(a, b, n),
                });
            }
        }
    }
    rows
}

/// How many points to draw from a planted mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointCount {
    /// Exactly this many from every cluster.
    PerCluster(usize),
    /// This many in total, each from a cluster drawn by weight.
    Total(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedMixtureSpec {
    pub k: usize,
    pub n: usize,
    pub t: usize,
    /// θ for ranks `1..=t`, shared by all clusters.
    pub theta_star: Vec<f64>,
    pub points: PointCount,
    /// Rankings drawn around a uniform base center before drawing σ*.
    pub center_rankings: usize,
    pub center_theta: f64,
    pub seed: u64,
}

impl PlantedMixtureSpec {
    fn base(k: usize, n: usize, t: usize, theta_star: Vec<f64>, points: PointCount) -> Self {
        Self {
            k,
            n,
            t,
            theta_star,
            points,
            center_rankings: 100,
            center_theta: 0.7,
            seed: 0,
        }
    }

    /// Named configurations: `ds1`..`ds4` (ten clusters of 500 points over
    /// 20 items) and `fig8` (three equally weighted clusters, n = 12, t = 5,
    /// 1000 points).
    pub fn preset(name: &str) -> Option<Self> {
        let per = PointCount::PerCluster(500);
        let decreasing = |t: usize, step: f64| (0..t).map(|i| 1.5 - i as f64 * step).collect();
        Some(match name {
            "ds1" => Self::base(10, 20, 10, vec![1.0; 10], per),
            "ds2" => Self::base(10, 20, 19, vec![1.0; 19], per),
            "ds3" => Self::base(10, 20, 10, decreasing(10, 0.1), per),
            "ds4" => Self::base(10, 20, 19, decreasing(19, 0.05), per),
            "fig8" => Self::base(3, 12, 5, vec![1.0; 5], PointCount::Total(1000)),
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidSpec(m));
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if self.n < 2 || self.t == 0 || self.t >= self.n {
            return bad(format!("need 1 <= t < n, got t={} n={}", self.t, self.n));
        }
        if self.theta_star.len() != self.t {
            return bad(format!(
                "theta_star has {} entries for t={}",
                self.theta_star.len(),
                self.t
            ));
        }
        if self
            .theta_star
            .iter()
            .any(|x| !(x.is_finite() && *x >= 0.0))
        {
            return bad("theta_star entries must be finite and nonnegative".into());
        }
        if !(self.center_theta.is_finite() && self.center_theta >= 0.0) {
            return bad("center_theta must be finite and nonnegative".into());
        }
        if matches!(
            self.points,
            PointCount::PerCluster(0) | PointCount::Total(0)
        ) {
            return bad("point count must be positive".into());
        }
        Ok(())
    }
}

/// Ground-truth mixture parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub centers: Vec<Permutation>,
    pub thetas: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl PlantedTruth {
    /// `ln Σ_c w_c GM(π | σ*_c, θ*_c)`.
    pub fn log_likelihood(&self, pi: &TopTRanking) -> f64 {
        let terms: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.thetas)
            .zip(&self.weights)
            .map(|((sigma, theta), &w)| {
                let params = GmParams {
                    sigma: sigma.clone(),
                    theta: theta.clone(),
                };
                w.ln() + gm_log_prob(pi, &params)
            })
            .collect();
        crate::dpm::log_sum_exp(&terms)
    }

    /// Draws `count` top-`t` rankings i.i.d. from the mixture, with labels.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        count: usize,
        t: usize,
        rng: &mut R,
    ) -> (Vec<TopTRanking>, Vec<usize>) {
        let log_w: Vec<f64> = self.weights.iter().map(|w| w.ln()).collect();
        (0..count)
            .map(|_| {
                let c = sample_log_categorical(&log_w, rng);
                (self.draw(c, t, rng), c)
            })
            .unzip()
    }

    fn draw<R: Rng + ?Sized>(&self, c: usize, t: usize, rng: &mut R) -> TopTRanking {
        let params = GmParams {
            sigma: self.centers[c].clone(),
            theta: self.thetas[c].clone(),
        };
        sample_gm(&params, t, rng)
    }
}

#[derive(Debug, Clone)]
pub struct PlantedData {
    pub rankings: Vec<TopTRanking>,
    pub labels: Clustering,
    pub truth: PlantedTruth,
}

/// Draws a center by conditioning on `center_rankings` full rankings from a
/// GM around a uniform base permutation with θ ≡ `center_theta`, then taking
/// one stagewise draw of σ at that θ.
fn draw_center<R: Rng + ?Sized>(
    spec: &PlantedMixtureSpec,
    rng: &mut R,
) -> Result<Permutation, EvalError> {
    let n = spec.n;
    let theta = vec![spec.center_theta; n - 1];
    let base = GmParams {
        sigma: Permutation::random(n, rng),
        theta: theta.clone(),
    };
    let draws: Vec<TopTRanking> = (0..spec.center_rankings)
        .map(|_| sample_gm(&base, n - 1, rng))
        .collect();
    let stats = SuffStats::from_rankings(n, n - 1, draws.iter())?;
    let prior = PriorParams::uniform(1.0, 1.0, 1.0, n - 1).expect("unit prior");
    Ok(sample_sigma_stagewise(&theta, &stats, &prior, None, rng))
}

/// Generates a planted mixture dataset, its labels, and the true parameters.
/// With a per-cluster count the points are shuffled before returning.
pub fn gen_planted_mixture<R: Rng + ?Sized>(
    spec: &PlantedMixtureSpec,
    rng: &mut R,
) -> Result<PlantedData, EvalError> {
    use rand::seq::SliceRandom;
    spec.validate()?;
    let centers = (0..spec.k)
        .map(|_| draw_center(spec, rng))
        .collect::<Result<Vec<_>, _>>()?;
    let truth = PlantedTruth {
        centers,
        thetas: vec![spec.theta_star.clone(); spec.k],
        weights: vec![1.0 / spec.k as f64; spec.k],
    };
    let (rankings, labels) = match spec.points {
        PointCount::PerCluster(per) => {
            let mut pairs: Vec<(TopTRanking, usize)> = (0..spec.k)
                .flat_map(|c| (0..per).map(move |_| c))
                .map(|c| (truth.draw(c, spec.t, rng), c))
                .collect();
            pairs.shuffle(rng);
            pairs.into_iter().unzip()
        }
        PointCount::Total(total) => truth.sample(total, spec.t, rng),
    };
    Ok(PlantedData {
        rankings,
        labels: Clustering::new(labels)?,
        truth,
    })
}
