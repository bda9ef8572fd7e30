//! Conditional samplers for one cluster's parameters: the stagewise draw of
//! the central permutation given θ, slice and Beta draws of θ given σ, and
//! the single-observation draw of σ with θ integrated out.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::gm::{log_psi, BetaTildeCache, PriorParams};
use crate::rankings::{ItemId, Permutation, SuffStats, TopTRanking};

/// Tuning for the θ slice sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    pub initial_width: f64,
    /// Upper end of the support scanned for θ.
    pub max_theta: f64,
    /// Slice updates per coordinate per call.
    pub t_slices: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        Self {
            initial_width: 1.0,
            max_theta: 50.0,
            t_slices: 3,
        }
    }
}

/// A seedable random stream. Chains derived from one seed through
/// [`RngStream::for_chain`] draw from disjoint ChaCha streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn for_chain(seed: u64, chain: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chain);
        Self(rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Samples an index with probability proportional to `exp(log_w[i])`.
/// Entries equal to `-inf` are never chosen.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_w: &[f64], rng: &mut R) -> usize {
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        max.is_finite(),
        "categorical weights must include a finite entry"
    );
    let total: f64 = log_w.iter().map(|&w| (w - max).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in log_w.iter().enumerate() {
        u -= (w - max).exp();
        if u < 0.0 {
            return i;
        }
    }
    // rounding left a sliver of mass; take the last positive entry
    log_w.iter().rposition(|&w| w > f64::NEG_INFINITY).unwrap()
}

/// `R = Σ_j θ_j (R_j + ν R⁰_j)` in row-base-minus-exceptions form:
/// `R[i][k] = base[i] - except[i][k]` for `k != i`.
struct WeightedMatrix {
    base: Vec<f64>,
    except: Vec<Vec<(ItemId, f64)>>,
}

impl WeightedMatrix {
    fn new(theta: &[f64], stats: &SuffStats, prior_nu: f64, prior_r0: Option<&SuffStats>) -> Self {
        let n = stats.n();
        let mut base = vec![0.0; n];
        let mut except: Vec<std::collections::BTreeMap<ItemId, f64>> = vec![Default::default(); n];
        let mut accumulate = |s: &SuffStats, scale: f64| {
            for (j, m) in s.ranks().iter().enumerate() {
                let w = scale * theta.get(j).copied().unwrap_or(0.0);
                if w == 0.0 {
                    continue;
                }
                for (&i, row) in m.rows() {
                    base[i] += w * row.count() as f64;
                    for (&k, &c) in row.preceded() {
                        *except[i].entry(k).or_insert(0.0) += w * c as f64;
                    }
                }
            }
        };
        accumulate(stats, 1.0);
        if let Some(r0) = prior_r0 {
            assert_eq!(r0.n(), n, "prior statistics must share n");
            accumulate(r0, prior_nu);
        }
        Self {
            base,
            except: except
                .into_iter()
                .map(|m| m.into_iter().collect())
                .collect(),
        }
    }
}

/// Column sums of the not-yet-placed submatrix, maintained as rows and
/// columns are struck out.
struct Stages<'a> {
    m: &'a WeightedMatrix,
    remaining: Vec<bool>,
    n_remaining: usize,
    base_total: f64,
    except_col: Vec<f64>,
    scale: f64,
}

impl<'a> Stages<'a> {
    fn new(m: &'a WeightedMatrix) -> Self {
        let n = m.base.len();
        let mut except_col = vec![0.0; n];
        for row in &m.except {
            for &(k, c) in row {
                except_col[k] += c;
            }
        }
        let base_total: f64 = m.base.iter().sum();
        Self {
            m,
            remaining: vec![true; n],
            n_remaining: n,
            base_total,
            except_col,
            scale: base_total.abs().max(1.0),
        }
    }

    /// Candidate items and their log weights `-ρ_i`, or `None` once the
    /// remaining submatrix is zero.
    fn log_weights(&self, items: &mut Vec<ItemId>, log_w: &mut Vec<f64>) -> Option<()> {
        items.clear();
        log_w.clear();
        let mut max_rho: f64 = 0.0;
        for (i, _) in self.remaining.iter().enumerate().filter(|(_, &r)| r) {
            let rho = self.base_total - self.m.base[i] - self.except_col[i];
            max_rho = max_rho.max(rho);
            items.push(i);
            log_w.push(-rho);
        }
        if max_rho <= 1e-12 * self.scale {
            None
        } else {
            Some(())
        }
    }

    fn strike(&mut self, item: ItemId) {
        self.remaining[item] = false;
        self.n_remaining -= 1;
        self.base_total -= self.m.base[item];
        for &(k, c) in &self.m.except[item] {
            self.except_col[k] -= c;
        }
    }
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|k| (k as f64).ln()).sum()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// A stagewise draw together with `ln p̃(σ) - ln q(σ)`, the log importance
/// weight of the draw against the target `p̃(σ) = e^{-L_σ(R)}`.
#[derive(Debug, Clone)]
pub struct StagewiseDraw {
    pub sigma: Permutation,
    pub log_weight: f64,
}

/// Rank by rank: pick the next item of σ with probability proportional to
/// `e^{-ρ_i}` where `ρ_i` is item `i`'s column sum in the remaining part of
/// `R = Σ_j θ_j (R_j + ν R⁰_j)`, strike its row and column, and once the
/// remainder of `R` is zero, order the leftover items uniformly at random.
pub fn stagewise_draw<R: Rng + ?Sized>(
    theta: &[f64],
    stats: &SuffStats,
    prior: &PriorParams,
    prior_r0: Option<&SuffStats>,
    rng: &mut R,
) -> StagewiseDraw {
    let m = WeightedMatrix::new(theta, stats, prior.nu, prior_r0);
    let n = stats.n();
    let mut stages = Stages::new(&m);
    let mut order = Vec::with_capacity(n);
    let mut log_weight = 0.0;
    let (mut items, mut log_w) = (Vec::new(), Vec::new());
    while stages.n_remaining > 0 {
        if stages.log_weights(&mut items, &mut log_w).is_none() {
            items.shuffle(rng);
            log_weight += ln_factorial(items.len());
            order.extend_from_slice(&items);
            break;
        }
        let pick = sample_log_categorical(&log_w, rng);
        log_weight += log_sum_exp(&log_w);
        order.push(items[pick]);
        stages.strike(items[pick]);
    }
    StagewiseDraw {
        sigma: Permutation::new(order).expect("every item placed once"),
        log_weight,
    }
}

/// Draws a central permutation with the stagewise procedure.
///
/// The procedure's law agrees with `e^{-L_σ(R)}` when the normalizer of every
/// remaining sub-problem is the same whichever item is placed next, which
/// holds for a single full ranking with equal θ but not in general at finite
/// `n`. Use [`sample_sigma_stagewise_mh`] to leave the exact conditional
/// invariant.
pub fn sample_sigma_stagewise<R: Rng + ?Sized>(
    theta: &[f64],
    stats: &SuffStats,
    prior: &PriorParams,
    prior_r0: Option<&SuffStats>,
    rng: &mut R,
) -> Permutation {
    stagewise_draw(theta, stats, prior, prior_r0, rng).sigma
}

/// `ln p̃(σ) - ln q(σ)` for an arbitrary σ, where `q` is the stagewise law.
pub fn stagewise_log_weight(
    sigma: &Permutation,
    theta: &[f64],
    stats: &SuffStats,
    prior: &PriorParams,
    prior_r0: Option<&SuffStats>,
) -> f64 {
    let m = WeightedMatrix::new(theta, stats, prior.nu, prior_r0);
    let mut stages = Stages::new(&m);
    let mut log_weight = 0.0;
    let (mut items, mut log_w) = (Vec::new(), Vec::new());
    for &item in sigma.order() {
        if stages.log_weights(&mut items, &mut log_w).is_none() {
            return log_weight + ln_factorial(items.len());
        }
        log_weight += log_sum_exp(&log_w);
        stages.strike(item);
    }
    log_weight
}

/// Log probability that the stagewise procedure returns `sigma`.
pub fn stagewise_log_proposal(
    sigma: &Permutation,
    theta: &[f64],
    stats: &SuffStats,
    prior: &PriorParams,
    prior_r0: Option<&SuffStats>,
) -> f64 {
    stagewise_target_log_density(sigma, theta, stats, prior, prior_r0)
        - stagewise_log_weight(sigma, theta, stats, prior, prior_r0)
}

/// `-L_σ(R)`, the log of the unnormalized conditional of σ given θ.
pub fn stagewise_target_log_density(
    sigma: &Permutation,
    theta: &[f64],
    stats: &SuffStats,
    prior: &PriorParams,
    prior_r0: Option<&SuffStats>,
) -> f64 {
    let mut energy: f64 = (0..stats.t_max())
        .map(|j| theta.get(j).copied().unwrap_or(0.0) * stats.l_sigma(j, sigma) as f64)
        .sum();
    if let Some(r0) = prior_r0 {
        energy += prior.nu
            * (0..r0.t_max())
                .map(|j| theta.get(j).copied().unwrap_or(0.0) * r0.l_sigma(j, sigma) as f64)
                .sum::<f64>();
    }
    -energy
}

/// One Metropolis-Hastings step that proposes from the stagewise procedure
/// independently of `current`. Returns the new state and whether the
/// proposal was accepted. Leaves `e^{-L_σ(R)}` exactly invariant.
pub fn sample_sigma_stagewise_mh<R: Rng + ?Sized>(
    current: &Permutation,
    theta: &[f64],
    stats: &SuffStats,
    prior: &PriorParams,
    prior_r0: Option<&SuffStats>,
    rng: &mut R,
) -> (Permutation, bool) {
    let proposal = stagewise_draw(theta, stats, prior, prior_r0, rng);
    let current_weight = stagewise_log_weight(current, theta, stats, prior, prior_r0);
    let log_accept = proposal.log_weight - current_weight;
    if log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept {
        (proposal.sigma, true)
    } else {
        (current.clone(), false)
    }
}

/// Linear and log-normalizer coefficients of θ_j's conditional:
/// `ln p(θ_j) = -A θ_j - C ln ψ_{n-1-j}(θ_j)` with `A = νr_j + S_j(σ)` and
/// `C = ν + N_j`.
pub fn theta_coefficients(
    sigma: &Permutation,
    stats: &SuffStats,
    prior: &PriorParams,
    t: usize,
) -> Vec<(f64, f64)> {
    (0..t)
        .map(|j| {
            let (l, count) = if j < stats.t_max() {
                (stats.l_sigma(j, sigma) as f64, stats.count_at(j) as f64)
            } else {
                (0.0, 0.0)
            };
            (prior.nu_r(j) + l, prior.nu + count)
        })
        .collect()
}

/// Slice-samples each θ_j from `e^{-(νr_j + S_j)θ_j - (ν + N_j) ln ψ_{n-j}(θ_j)}`
/// on `[0, max_theta]`, starting from `current`.
pub fn sample_theta_slice<R: Rng + ?Sized>(
    sigma: &Permutation,
    stats: &SuffStats,
    prior: &PriorParams,
    cfg: &SliceConfig,
    rng: &mut R,
    current: &[f64],
) -> Vec<f64> {
    let n = sigma.n();
    theta_coefficients(sigma, stats, prior, current.len())
        .into_iter()
        .zip(current)
        .enumerate()
        .map(|(j, ((lin, pow), &x0))| {
            let m = n - 1 - j;
            let log_f = |th: f64| {
                if (0.0..=cfg.max_theta).contains(&th) {
                    -lin * th - pow * log_psi(th, m)
                } else {
                    f64::NEG_INFINITY
                }
            };
            let mut x = x0.clamp(0.0, cfg.max_theta);
            for _ in 0..cfg.t_slices {
                x = slice_step(&log_f, x, cfg.initial_width, cfg.max_theta, rng);
            }
            x
        })
        .collect()
}

/// One univariate slice update with stepping out and shrinkage. The bracket
/// is intersected with `[0, upper]`, outside of which the density is zero.
pub fn slice_step<F, R>(log_f: &F, x0: f64, width: f64, upper: f64, rng: &mut R) -> f64
where
    F: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    let drop: f64 = rand_distr::Exp1.sample(rng);
    let level = log_f(x0) - drop;
    let mut lo = x0 - width * rng.random::<f64>();
    let mut hi = lo + width;
    while lo > 0.0 && log_f(lo) > level {
        lo -= width;
    }
    while hi < upper && log_f(hi) > level {
        hi += width;
    }
    lo = lo.max(0.0);
    hi = hi.min(upper);
    loop {
        let x1 = lo + (hi - lo) * rng.random::<f64>();
        if log_f(x1) > level {
            return x1;
        }
        if x1 < x0 {
            lo = x1;
        } else {
            hi = x1;
        }
    }
}

/// Draws `θ_j = -ln x_j` with `x_j ~ Beta(νr_j + S_j(σ), ν + N_j + 1)`, the
/// conditional of θ_j when the geometric normalizer is replaced by its
/// infinite-n limit.
pub fn sample_theta_beta<R: Rng + ?Sized>(
    sigma: &Permutation,
    stats: &SuffStats,
    prior: &PriorParams,
    t: usize,
    rng: &mut R,
) -> Vec<f64> {
    theta_coefficients(sigma, stats, prior, t)
        .into_iter()
        .map(|(lin, pow)| {
            let x: f64 = Beta::new(lin, pow + 1.0)
                .expect("Beta parameters are positive")
                .sample(rng);
            -(x.max(f64::MIN_POSITIVE)).ln().min(0.0)
        })
        .collect()
}

/// Unnormalized log weights `ln Beta(νr_j + k, ν + 2)`, `k = 0..=n-1-j`, of
/// the code entry `V_j` under the single-observation approximation.
pub fn n1_log_weights(j: usize, n: usize, prior: &PriorParams) -> Vec<f64> {
    (0..n - j)
        .map(|k| ln_beta(prior.nu_r(j) + k as f64, prior.nu + 2.0))
        .collect()
}

/// The same weights with `B̃(·, ·, n-1-j)` in place of `Beta`, i.e. the exact
/// single-observation posterior of `V_j`.
pub fn n1_exact_log_weights(
    j: usize,
    n: usize,
    prior: &PriorParams,
    cache: &mut BetaTildeCache,
) -> Vec<f64> {
    (0..n - j)
        .map(|k| cache.log_beta_tilde(prior.nu_r(j) + k as f64, prior.nu + 2.0, n - 1 - j))
        .collect()
}

/// Places the `j`-th item of `pi` at the `(v_j + 1)`-th still free position
/// of σ, then fills the free positions with the unlisted items in `filler`
/// order.
pub fn place_by_code(pi: &TopTRanking, v: &[usize], filler: &[ItemId]) -> Permutation {
    let n = pi.n();
    let mut free: Vec<usize> = (0..n).collect();
    let mut order = vec![usize::MAX; n];
    for (&item, &k) in pi.items().iter().zip(v) {
        let slot = free.remove(k);
        order[slot] = item;
    }
    for (slot, &item) in free.iter().zip(filler) {
        order[*slot] = item;
    }
    Permutation::new(order).expect("pi items and filler partition 0..n")
}

/// Approximate draw of σ given a single observation, θ integrated out.
pub fn sample_sigma_n1<R: Rng + ?Sized>(
    pi: &TopTRanking,
    prior: &PriorParams,
    rng: &mut R,
) -> Permutation {
    let n = pi.n();
    let v: Vec<usize> = (0..pi.len())
        .map(|j| sample_log_categorical(&n1_log_weights(j, n, prior), rng))
        .collect();
    let mut filler: Vec<ItemId> = (0..n).filter(|i| !pi.items().contains(i)).collect();
    filler.shuffle(rng);
    place_by_code(pi, &v, &filler)
}
