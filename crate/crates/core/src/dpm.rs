//! Gibbs chains for a Dirichlet process mixture of generalized Mallows
//! models: cluster bookkeeping, the SLICE-GIBBS and BETA-GIBBS sweeps, chain
//! driving with snapshot recording, and the held-out likelihood estimate.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gm::{
    log_marginal_single, log_predictive_from_parts, log_prob_from_code, BetaTildeCache, GmParams,
    PredictiveForm, PriorParams,
};
use crate::rankings::{fill_code, ItemId, Permutation, RankingError, SuffStats, TopTRanking};
use crate::samplers::{
    sample_log_categorical, sample_sigma_n1, sample_sigma_stagewise, sample_sigma_stagewise_mh,
    sample_theta_beta, sample_theta_slice, SliceConfig,
};

#[derive(Debug, Error)]
pub enum DpmError {
    #[error("dataset is empty")]
    EmptyData,
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(String),
    #[error("ranking over {found} items, expected {expected}")]
    ItemCountMismatch { expected: usize, found: usize },
    #[error("ranking of length {len} exceeds the trace's maximum length {t_max}")]
    TooLong { len: usize, t_max: usize },
    #[error("non-finite {what} at sweep {sweep}")]
    NonFinite { sweep: usize, what: &'static str },
    #[error("trace has no snapshots past burn-in")]
    NoSamples,
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// θ kept explicit and slice-sampled; assignments use the GM likelihood.
    Slice,
    /// θ integrated out of the assignment step with the Beta approximation.
    Beta,
}

/// How a cluster's central permutation is refreshed given θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaUpdate {
    /// One stagewise draw.
    #[default]
    Stagewise,
    /// A stagewise proposal accepted or rejected by Metropolis-Hastings.
    StagewiseMh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub sampler: SamplerKind,
    pub sweeps: usize,
    pub t_gibbs: usize,
    pub slice: SliceConfig,
    pub prior: PriorParams,
    pub k_init: usize,
    pub seed: u64,
    /// Sweeps discarded before regular snapshots; defaults to half the run.
    pub burn_in: Option<usize>,
    /// Sweeps between snapshots after burn-in; defaults to 1% of the run.
    pub stride: Option<usize>,
    #[serde(default)]
    pub random_scan: bool,
    #[serde(default)]
    pub sigma_update: SigmaUpdate,
}

impl ChainConfig {
    /// Settings used for the synthetic studies: unit priors, 20 initial
    /// clusters, 10 inner Gibbs rounds and 3 slice updates.
    pub fn new(sampler: SamplerKind, sweeps: usize, t: usize, seed: u64) -> Self {
        Self {
            sampler,
            sweeps,
            t_gibbs: 10,
            slice: SliceConfig::default(),
            prior: PriorParams::uniform(1.0, 1.0, 1.0, t).expect("unit prior is valid"),
            k_init: 20,
            seed,
            burn_in: None,
            stride: None,
            random_scan: false,
            sigma_update: SigmaUpdate::Stagewise,
        }
    }

    pub fn validate(&self) -> Result<(), DpmError> {
        let bad = |m: &str| Err(DpmError::InvalidConfig(m.to_string()));
        if self.t_gibbs == 0 {
            return bad("t_gibbs must be positive");
        }
        if self.k_init == 0 {
            return bad("k_init must be positive");
        }
        if self.slice.t_slices == 0 {
            return bad("t_slices must be positive");
        }
        if !(self.slice.initial_width > 0.0 && self.slice.max_theta > 0.0) {
            return bad("slice width and max_theta must be positive");
        }
        if self.stride == Some(0) {
            return bad("stride must be positive");
        }
        Ok(())
    }

    pub fn effective_burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.sweeps / 2)
    }

    pub fn effective_stride(&self) -> usize {
        self.stride.unwrap_or((self.sweeps / 100).max(1))
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub params: GmParams,
    pub stats: SuffStats,
    pub size: usize,
    /// `S_j(σ) = L_σ(R_j)` for the current σ and members.
    l_sums: Vec<i64>,
}

impl Cluster {
    pub fn l_sums(&self) -> &[i64] {
        &self.l_sums
    }

    fn add(&mut self, pi: &TopTRanking, buf: &mut Vec<usize>) -> Result<(), RankingError> {
        self.stats.add(pi)?;
        fill_code(pi.items(), &self.params.sigma, buf);
        for (l, &s) in self.l_sums.iter_mut().zip(buf.iter()) {
            *l += s as i64;
        }
        self.size += 1;
        Ok(())
    }

    fn remove(&mut self, pi: &TopTRanking, buf: &mut Vec<usize>) -> Result<(), RankingError> {
        self.stats.remove(pi)?;
        fill_code(pi.items(), &self.params.sigma, buf);
        for (l, &s) in self.l_sums.iter_mut().zip(buf.iter()) {
            *l -= s as i64;
        }
        self.size -= 1;
        Ok(())
    }

    fn set_sigma(&mut self, sigma: Permutation) {
        self.l_sums = self.stats.l_sigma_all(&sigma);
        self.params.sigma = sigma;
    }
}

/// Assignments plus a slab of live clusters addressed by slot index.
#[derive(Debug, Clone)]
pub struct DpmState {
    pub n: usize,
    pub t_max: usize,
    assignments: Vec<usize>,
    slots: Vec<Option<Cluster>>,
    free: Vec<usize>,
}

impl DpmState {
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn num_points(&self) -> usize {
        self.assignments.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.slots.iter().filter(|c| c.is_some()).count()
    }

    pub fn clusters(&self) -> impl Iterator<Item = (usize, &Cluster)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|c| (i, c)))
    }

    pub fn cluster(&self, slot: usize) -> Option<&Cluster> {
        self.slots.get(slot).and_then(|c| c.as_ref())
    }

    /// Labels renumbered `0, 1, …` in order of first appearance.
    pub fn canonical_labels(&self) -> Vec<usize> {
        canonicalize(&self.assignments)
    }

    /// Whether every cluster's statistics, size and cached `S_j` match a
    /// rebuild from the current assignments, and no cluster is empty.
    pub fn is_consistent(&self, data: &[TopTRanking]) -> bool {
        if data.len() != self.assignments.len() {
            return false;
        }
        for (slot, cluster) in self.clusters() {
            let members = data
                .iter()
                .zip(&self.assignments)
                .filter(|(_, &a)| a == slot)
                .map(|(pi, _)| pi);
            let rebuilt = match SuffStats::from_rankings(self.n, self.t_max, members) {
                Ok(s) => s,
                Err(_) => return false,
            };
            if cluster.size == 0
                || rebuilt.total() != cluster.size
                || rebuilt != cluster.stats
                || cluster.stats.l_sigma_all(&cluster.params.sigma) != cluster.l_sums
            {
                return false;
            }
        }
        self.assignments.iter().all(|&a| self.cluster(a).is_some())
    }

    fn insert(&mut self, cluster: Cluster) -> usize {
        match self.free.pop() {
            Some(slot) => {
                self.slots[slot] = Some(cluster);
                slot
            }
            None => {
                self.slots.push(Some(cluster));
                self.slots.len() - 1
            }
        }
    }

    fn live_slots(&self) -> Vec<usize> {
        self.clusters().map(|(i, _)| i).collect()
    }
}

/// Renumbers labels `0, 1, …` in order of first appearance.
pub fn canonicalize(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Validates the dataset and returns `(n, t_max)`.
fn dimensions(data: &[TopTRanking], prior: &PriorParams) -> Result<(usize, usize), DpmError> {
    let first = data.first().ok_or(DpmError::EmptyData)?;
    let n = first.n();
    let mut t_max = 0;
    for pi in data {
        if pi.n() != n {
            return Err(DpmError::ItemCountMismatch {
                expected: n,
                found: pi.n(),
            });
        }
        t_max = t_max.max(pi.len());
    }
    if prior.t() < t_max {
        return Err(DpmError::InvalidConfig(format!(
            "prior covers {} ranks but rankings reach length {t_max}",
            prior.t()
        )));
    }
    Ok((n, t_max))
}

fn check_theta(theta: &[f64], sweep: usize) -> Result<(), DpmError> {
    if theta.iter().all(|x| x.is_finite() && *x >= 0.0) {
        Ok(())
    } else {
        Err(DpmError::NonFinite {
            sweep,
            what: "concentration parameter",
        })
    }
}

fn update_sigma<R: Rng + ?Sized>(cluster: &mut Cluster, cfg: &ChainConfig, rng: &mut R) {
    let theta = &cluster.params.theta;
    let sigma = match cfg.sigma_update {
        SigmaUpdate::Stagewise => {
            sample_sigma_stagewise(theta, &cluster.stats, &cfg.prior, None, rng)
        }
        SigmaUpdate::StagewiseMh => {
            sample_sigma_stagewise_mh(
                &cluster.params.sigma,
                theta,
                &cluster.stats,
                &cfg.prior,
                None,
                rng,
            )
            .0
        }
    };
    cluster.set_sigma(sigma);
}

fn update_theta<R: Rng + ?Sized>(cluster: &mut Cluster, cfg: &ChainConfig, rng: &mut R) {
    let p = &cluster.params;
    cluster.params.theta = match cfg.sampler {
        SamplerKind::Slice => sample_theta_slice(
            &p.sigma,
            &cluster.stats,
            &cfg.prior,
            &cfg.slice,
            rng,
            &p.theta,
        ),
        SamplerKind::Beta => {
            sample_theta_beta(&p.sigma, &cluster.stats, &cfg.prior, p.theta.len(), rng)
        }
    };
}

/// `t_gibbs` alternations of σ | θ and θ | σ.
fn refresh_params<R: Rng + ?Sized>(cluster: &mut Cluster, cfg: &ChainConfig, rng: &mut R) {
    for _ in 0..cfg.t_gibbs {
        update_sigma(cluster, cfg, rng);
        update_theta(cluster, cfg, rng);
    }
}

fn empty_cluster(n: usize, t_max: usize, sigma: Permutation) -> Cluster {
    Cluster {
        params: GmParams {
            sigma,
            theta: vec![1.0; t_max],
        },
        stats: SuffStats::new(n, t_max),
        size: 0,
        l_sums: vec![0; t_max],
    }
}

/// A new cluster holding only `pi`, with parameters drawn given `pi`.
fn new_singleton<R: Rng + ?Sized>(
    pi: &TopTRanking,
    n: usize,
    t_max: usize,
    cfg: &ChainConfig,
    rng: &mut R,
    buf: &mut Vec<usize>,
) -> Result<Cluster, DpmError> {
    let mut cluster = empty_cluster(n, t_max, Permutation::identity(n));
    cluster.add(pi, buf)?;
    match cfg.sampler {
        SamplerKind::Slice => {
            let sigma = sample_sigma_stagewise(
                &cluster.params.theta,
                &cluster.stats,
                &cfg.prior,
                None,
                rng,
            );
            cluster.set_sigma(sigma);
            update_theta(&mut cluster, cfg, rng);
            refresh_params(&mut cluster, cfg, rng);
        }
        SamplerKind::Beta => {
            cluster.set_sigma(sample_sigma_n1(pi, &cfg.prior, rng));
            update_theta(&mut cluster, cfg, rng);
        }
    }
    Ok(cluster)
}

/// Assigns each point uniformly among `k_init` labels and draws every
/// occupied cluster's σ by a stagewise draw at θ ≡ 1, then θ given σ.
pub fn init_state<R: Rng + ?Sized>(
    data: &[TopTRanking],
    cfg: &ChainConfig,
    rng: &mut R,
) -> Result<DpmState, DpmError> {
    cfg.validate()?;
    let (n, t_max) = dimensions(data, &cfg.prior)?;
    let mut state = DpmState {
        n,
        t_max,
        assignments: Vec::with_capacity(data.len()),
        slots: (0..cfg.k_init)
            .map(|_| Some(empty_cluster(n, t_max, Permutation::identity(n))))
            .collect(),
        free: Vec::new(),
    };
    let mut buf = Vec::new();
    for pi in data {
        let label = rng.random_range(0..cfg.k_init);
        state.slots[label].as_mut().unwrap().add(pi, &mut buf)?;
        state.assignments.push(label);
    }
    for slot in (0..cfg.k_init).rev() {
        let cluster = state.slots[slot].as_mut().unwrap();
        if cluster.size == 0 {
            state.slots[slot] = None;
            state.free.push(slot);
            continue;
        }
        let sigma =
            sample_sigma_stagewise(&cluster.params.theta, &cluster.stats, &cfg.prior, None, rng);
        cluster.set_sigma(sigma);
        update_theta(cluster, cfg, rng);
        check_theta(&cluster.params.theta, 0)?;
    }
    Ok(state)
}

fn visit_order<R: Rng + ?Sized>(len: usize, cfg: &ChainConfig, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    if cfg.random_scan {
        order.shuffle(rng);
    }
    order
}

/// Takes point `i` out of its cluster, dropping the cluster if it empties.
fn detach(
    state: &mut DpmState,
    i: usize,
    pi: &TopTRanking,
    buf: &mut Vec<usize>,
) -> Result<(), DpmError> {
    let slot = state.assignments[i];
    let cluster = state.slots[slot]
        .as_mut()
        .expect("assigned cluster is live");
    cluster.remove(pi, buf)?;
    if cluster.size == 0 {
        state.slots[slot] = None;
        state.free.push(slot);
    }
    Ok(())
}

fn choose<R: Rng + ?Sized>(log_w: &[f64], sweep: usize, rng: &mut R) -> Result<usize, DpmError> {
    if log_w.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
        return Err(DpmError::NonFinite {
            sweep,
            what: "assignment weight",
        });
    }
    Ok(sample_log_categorical(log_w, rng))
}

/// One SLICE-GIBBS sweep: reassign every point given explicit cluster
/// parameters, then refresh each cluster's (σ, θ).
pub fn slice_gibbs_sweep<R: Rng + ?Sized>(
    state: &mut DpmState,
    data: &[TopTRanking],
    cfg: &ChainConfig,
    sweep: usize,
    rng: &mut R,
) -> Result<(), DpmError> {
    let (n, t_max) = (state.n, state.t_max);
    let mut buf = Vec::new();
    let mut log_w = Vec::new();
    for i in visit_order(data.len(), cfg, rng) {
        let pi = &data[i];
        detach(state, i, pi, &mut buf)?;
        let slots = state.live_slots();
        log_w.clear();
        for &slot in &slots {
            let c = state.slots[slot].as_ref().unwrap();
            fill_code(pi.items(), &c.params.sigma, &mut buf);
            log_w.push((c.size as f64).ln() + log_prob_from_code(&buf, &c.params.theta, n));
        }
        log_w.push(cfg.prior.alpha.ln() + log_marginal_single(n, pi.len()));
        let pick = choose(&log_w, sweep, rng)?;
        let slot = if pick < slots.len() {
            let slot = slots[pick];
            state.slots[slot].as_mut().unwrap().add(pi, &mut buf)?;
            slot
        } else {
            let cluster = new_singleton(pi, n, t_max, cfg, rng, &mut buf)?;
            state.insert(cluster)
        };
        state.assignments[i] = slot;
    }
    for slot in state.live_slots() {
        let cluster = state.slots[slot].as_mut().unwrap();
        refresh_params(cluster, cfg, rng);
        check_theta(&cluster.params.theta, sweep)?;
    }
    Ok(())
}

/// One BETA-GIBBS sweep: reassign every point with θ integrated out under
/// the Beta approximation, then refresh each cluster's parameters.
pub fn beta_gibbs_sweep<R: Rng + ?Sized>(
    state: &mut DpmState,
    data: &[TopTRanking],
    cfg: &ChainConfig,
    sweep: usize,
    rng: &mut R,
) -> Result<(), DpmError> {
    let (n, t_max) = (state.n, state.t_max);
    let mut buf = Vec::new();
    let mut log_w = Vec::new();
    // unused by the Beta form; the predictive helper takes one for the exact form
    let mut cache = BetaTildeCache::new();
    for i in visit_order(data.len(), cfg, rng) {
        let pi = &data[i];
        detach(state, i, pi, &mut buf)?;
        let slots = state.live_slots();
        log_w.clear();
        for &slot in &slots {
            let c = state.slots[slot].as_ref().unwrap();
            fill_code(pi.items(), &c.params.sigma, &mut buf);
            let pred = log_predictive_from_parts(
                &buf,
                &c.l_sums,
                c.stats.counts(),
                &cfg.prior,
                n,
                PredictiveForm::BetaApprox,
                &mut cache,
            );
            log_w.push((c.size as f64).ln() + pred);
        }
        log_w.push(cfg.prior.alpha.ln() + log_marginal_single(n, pi.len()));
        let pick = choose(&log_w, sweep, rng)?;
        let slot = if pick < slots.len() {
            let slot = slots[pick];
            state.slots[slot].as_mut().unwrap().add(pi, &mut buf)?;
            slot
        } else {
            let cluster = new_singleton(pi, n, t_max, cfg, rng, &mut buf)?;
            state.insert(cluster)
        };
        state.assignments[i] = slot;
    }
    for slot in state.live_slots() {
        let cluster = state.slots[slot].as_mut().unwrap();
        if cluster.size == 1 {
            let i = state
                .assignments
                .iter()
                .position(|&a| a == slot)
                .expect("singleton has a member");
            cluster.set_sigma(sample_sigma_n1(&data[i], &cfg.prior, rng));
            update_theta(cluster, cfg, rng);
        } else {
            refresh_params(cluster, cfg, rng);
        }
        check_theta(&cluster.params.theta, sweep)?;
    }
    Ok(())
}

/// Runs one sweep of the configured kind.
pub fn sweep<R: Rng + ?Sized>(
    state: &mut DpmState,
    data: &[TopTRanking],
    cfg: &ChainConfig,
    sweep_index: usize,
    rng: &mut R,
) -> Result<(), DpmError> {
    match cfg.sampler {
        SamplerKind::Slice => slice_gibbs_sweep(state, data, cfg, sweep_index, rng),
        SamplerKind::Beta => beta_gibbs_sweep(state, data, cfg, sweep_index, rng),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSnapshot {
    pub size: usize,
    pub sigma: Vec<ItemId>,
    pub theta: Vec<f64>,
}

/// Chain state after a sweep. `assignments[i]` indexes `clusters`, numbered
/// in order of first appearance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub sweep: usize,
    pub assignments: Vec<usize>,
    pub clusters: Vec<ClusterSnapshot>,
}

impl Snapshot {
    pub fn of_state(state: &DpmState, sweep: usize) -> Self {
        let mut order = Vec::new();
        let mut label_of = std::collections::HashMap::new();
        let assignments = state
            .assignments
            .iter()
            .map(|&slot| {
                *label_of.entry(slot).or_insert_with(|| {
                    order.push(slot);
                    order.len() - 1
                })
            })
            .collect();
        let clusters = order
            .iter()
            .map(|&slot| {
                let c = state.cluster(slot).expect("assigned cluster is live");
                ClusterSnapshot {
                    size: c.size,
                    sigma: c.params.sigma.order().to_vec(),
                    theta: c.params.theta.clone(),
                }
            })
            .collect();
        Self {
            sweep,
            assignments,
            clusters,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.size).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub sweep: usize,
    pub n_clusters: usize,
    pub largest_fraction: f64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTrace {
    pub n: usize,
    pub t_max: usize,
    pub burn_in: usize,
    pub stride: usize,
    pub snapshots: Vec<Snapshot>,
    pub summaries: Vec<SweepSummary>,
}

impl SampleTrace {
    /// Snapshots past `burn_in` whose offset from it is a multiple of
    /// `stride`.
    pub fn retained(&self, burn_in: usize, stride: usize) -> impl Iterator<Item = &Snapshot> {
        let stride = stride.max(1);
        self.snapshots
            .iter()
            .filter(move |s| s.sweep > burn_in && (s.sweep - burn_in).is_multiple_of(stride))
    }
}

/// Whether sweep `s` is recorded: always the initial state, then every
/// `stride` sweeps after `burn_in`.
pub fn is_recorded(s: usize, burn_in: usize, stride: usize) -> bool {
    s == 0 || (s > burn_in && (s - burn_in).is_multiple_of(stride))
}

/// Runs `cfg.sweeps` sweeps from a random initial state, recording
/// snapshots and per-sweep summaries. Identical inputs and RNG state give
/// identical snapshots.
pub fn run_chain<R: Rng + ?Sized>(
    data: &[TopTRanking],
    cfg: &ChainConfig,
    rng: &mut R,
) -> Result<SampleTrace, DpmError> {
    run_chain_with(data, cfg, rng, |_, _| {})
}

/// [`run_chain`] with a callback invoked on the state after every sweep
/// (including sweep 0, the initial state).
pub fn run_chain_with<R, F>(
    data: &[TopTRanking],
    cfg: &ChainConfig,
    rng: &mut R,
    mut observe: F,
) -> Result<SampleTrace, DpmError>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &DpmState),
{
    let start = Instant::now();
    let mut state = init_state(data, cfg, rng)?;
    let (burn_in, stride) = (cfg.effective_burn_in(), cfg.effective_stride());
    let mut trace = SampleTrace {
        n: state.n,
        t_max: state.t_max,
        burn_in,
        stride,
        snapshots: Vec::new(),
        summaries: Vec::new(),
    };
    let record = |state: &DpmState, s: usize, trace: &mut SampleTrace| {
        let largest = state.clusters().map(|(_, c)| c.size).max().unwrap_or(0);
        trace.summaries.push(SweepSummary {
            sweep: s,
            n_clusters: state.num_clusters(),
            largest_fraction: largest as f64 / state.num_points() as f64,
            elapsed_secs: start.elapsed().as_secs_f64(),
        });
        if is_recorded(s, burn_in, stride) {
            trace.snapshots.push(Snapshot::of_state(state, s));
        }
    };
    record(&state, 0, &mut trace);
    observe(0, &state);
    for s in 1..=cfg.sweeps {
        sweep(&mut state, data, cfg, s, rng)?;
        record(&state, s, &mut trace);
        observe(s, &state);
    }
    Ok(trace)
}

/// Held-out log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeldOutScore {
    pub total: f64,
    pub per_point: f64,
    pub samples: usize,
}

/// Scores `heldout` under the posterior predictive estimated from the
/// snapshots past the trace's burn-in: each snapshot gives the mixture
/// `Σ_c N_c/(N+α) GM(π | σ_c, θ_c) + α/(N+α) (n-t)!/n!`, and a point's score
/// is the log of that density averaged over snapshots.
pub fn test_log_likelihood(
    trace: &SampleTrace,
    heldout: &[TopTRanking],
    prior: &PriorParams,
) -> Result<HeldOutScore, DpmError> {
    let snaps: Vec<&Snapshot> = trace.retained(trace.burn_in, 1).collect();
    score_snapshots(&snaps, trace.n, trace.t_max, heldout, prior.alpha)
}

/// The estimator of [`test_log_likelihood`] over an explicit snapshot set.
pub fn score_snapshots(
    snaps: &[&Snapshot],
    n: usize,
    t_max: usize,
    heldout: &[TopTRanking],
    alpha: f64,
) -> Result<HeldOutScore, DpmError> {
    if snaps.is_empty() {
        return Err(DpmError::NoSamples);
    }
    if heldout.is_empty() {
        return Err(DpmError::EmptyData);
    }
    for pi in heldout {
        if pi.n() != n {
            return Err(DpmError::ItemCountMismatch {
                expected: n,
                found: pi.n(),
            });
        }
        if pi.len() > t_max {
            return Err(DpmError::TooLong {
                len: pi.len(),
                t_max,
            });
        }
    }
    let centers: Vec<Vec<Permutation>> = snaps
        .iter()
        .map(|s| {
            s.clusters
                .iter()
                .map(|c| Permutation::new(c.sigma.clone()))
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut buf = Vec::new();
    let mut per_sample = Vec::with_capacity(snaps.len());
    let mut total = 0.0;
    for pi in heldout {
        let new_term = log_marginal_single(n, pi.len());
        per_sample.clear();
        for (snap, sigmas) in snaps.iter().zip(&centers) {
            let big_n: usize = snap.clusters.iter().map(|c| c.size).sum();
            let denom = (big_n as f64 + alpha).ln();
            let mut terms: Vec<f64> = snap
                .clusters
                .iter()
                .zip(sigmas)
                .map(|(c, sigma)| {
                    fill_code(pi.items(), sigma, &mut buf);
                    (c.size as f64).ln() + log_prob_from_code(&buf, &c.theta, n) - denom
                })
                .collect();
            terms.push(alpha.ln() + new_term - denom);
            per_sample.push(log_sum_exp(&terms));
        }
        let score = log_sum_exp(&per_sample) - (per_sample.len() as f64).ln();
        if !score.is_finite() {
            return Err(DpmError::NonFinite {
                sweep: snaps.last().map(|s| s.sweep).unwrap_or(0),
                what: "held-out likelihood",
            });
        }
        total += score;
    }
    Ok(HeldOutScore {
        total,
        per_point: total / heldout.len() as f64,
        samples: snaps.len(),
    })
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}
