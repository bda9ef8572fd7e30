use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, ValueEnum};
use mallows_dpm::dpm::{
    run_chain, score_snapshots, ChainConfig, DpmError, SampleTrace, SamplerKind, SigmaUpdate,
    Snapshot,
};
use mallows_dpm::eval::{
    approx_error_study, gen_planted_mixture, vi_distance, Clustering, PlantedMixtureSpec,
    PlantedTruth, PointCount,
};
use mallows_dpm::gm::PriorParams;
use mallows_dpm::samplers::RngStream;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{
    parse_rankings, read_labels, read_rankings, write_labels, write_rankings, ItemDict, RankingFile,
};
use crate::error::CliError;
use crate::manifest::{
    chain_summary_name, chain_trace_name, read_with_digest, RunManifest, ITEMS_FILE, MANIFEST_FILE,
};
use crate::trace::{csv_error, read_trace, shape, write_summary, write_trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Slice,
    Beta,
}

impl From<SamplerArg> for SamplerKind {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Slice => SamplerKind::Slice,
            SamplerArg::Beta => SamplerKind::Beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SigmaUpdateArg {
    Stagewise,
    StagewiseMh,
}

impl From<SigmaUpdateArg> for SigmaUpdate {
    fn from(s: SigmaUpdateArg) -> Self {
        match s {
            SigmaUpdateArg::Stagewise => SigmaUpdate::Stagewise,
            SigmaUpdateArg::StagewiseMh => SigmaUpdate::StagewiseMh,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Ranking file; omit when rerunning from --manifest.
    pub data: Option<PathBuf>,
    /// Gibbs sampler [default: slice]
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerArg>,
    /// DP concentration [default: 1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Prior strength [default: 1]
    #[arg(long)]
    pub nu: Option<f64>,
    /// Prior rate shared by all ranks, or comma-separated per rank [default: 1]
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
    /// [default: 1000]
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Inner σ/θ rounds per cluster and sweep [default: 10]
    #[arg(long)]
    pub t_gibbs: Option<usize>,
    /// Slice updates per θ refresh [default: 3]
    #[arg(long)]
    pub t_slices: Option<usize>,
    /// Upper bound of the slice sampler's θ support [default: 50]
    #[arg(long)]
    pub max_theta: Option<f64>,
    /// Initial number of clusters [default: 20]
    #[arg(long)]
    pub k_init: Option<usize>,
    /// Sweeps before regular snapshots [default: sweeps/2]
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Sweeps between snapshots after burn-in [default: max(1, sweeps/100)]
    #[arg(long)]
    pub stride: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent chains, each on its own random stream [default: 1]
    #[arg(long)]
    pub chains: Option<usize>,
    /// Central-permutation update [default: stagewise]
    #[arg(long, value_enum)]
    pub sigma_update: Option<SigmaUpdateArg>,
    /// Visit points in a random order each sweep.
    #[arg(long)]
    pub random_scan: bool,
    /// JSON list of item tokens fixing the item ids.
    #[arg(long)]
    pub items: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Rerun exactly the run described by this manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

impl FitArgs {
    fn config_flags_set(&self) -> Vec<&'static str> {
        let flags = [
            ("data file", self.data.is_some()),
            ("--sampler", self.sampler.is_some()),
            ("--alpha", self.alpha.is_some()),
            ("--nu", self.nu.is_some()),
            ("--r", self.r.is_some()),
            ("--sweeps", self.sweeps.is_some()),
            ("--t-gibbs", self.t_gibbs.is_some()),
            ("--t-slices", self.t_slices.is_some()),
            ("--max-theta", self.max_theta.is_some()),
            ("--k-init", self.k_init.is_some()),
            ("--burn-in", self.burn_in.is_some()),
            ("--stride", self.stride.is_some()),
            ("--seed", self.seed.is_some()),
            ("--chains", self.chains.is_some()),
            ("--sigma-update", self.sigma_update.is_some()),
            ("--random-scan", self.random_scan),
            ("--items", self.items.is_some()),
        ];
        flags
            .iter()
            .filter(|(_, set)| *set)
            .map(|(name, _)| *name)
            .collect()
    }
}

fn read_dict(path: &Path) -> Result<(ItemDict, String), CliError> {
    let (bytes, digest) = read_with_digest(path)?;
    let tokens: Vec<String> = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::malformed(path, e.line(), e.to_string()))?;
    let dict =
        ItemDict::new(tokens).map_err(|m| CliError::Data(format!("{}: {m}", path.display())))?;
    Ok((dict, digest))
}

fn read_data(path: &Path, dict: Option<&ItemDict>) -> Result<(RankingFile, String), CliError> {
    let (bytes, digest) = read_with_digest(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Data(format!("{}: file is not valid UTF-8", path.display())))?;
    Ok((parse_rankings(&text, path, dict)?, digest))
}

fn canonical(path: &Path) -> Result<PathBuf, CliError> {
    fs::canonicalize(path).map_err(|e| CliError::io(path, e))
}

fn plan_from_flags(a: &FitArgs) -> Result<(RankingFile, RunManifest), CliError> {
    let data_path = a
        .data
        .as_deref()
        .ok_or_else(|| CliError::Usage("fit needs a data file or --manifest".into()))?;
    let chains = a.chains.unwrap_or(1);
    if chains == 0 {
        return Err(CliError::Usage("--chains must be at least 1".into()));
    }
    let sweeps = a.sweeps.unwrap_or(1000);
    if a.burn_in.is_some_and(|b| b > sweeps) {
        return Err(CliError::Usage("--burn-in exceeds --sweeps".into()));
    }
    if let Some(r) = &a.r {
        if r.is_empty() {
            return Err(CliError::Usage("--r needs at least one value".into()));
        }
    }
    let dict = a.items.as_deref().map(read_dict).transpose()?;
    let (data, data_sha256) = read_data(data_path, dict.as_ref().map(|d| &d.0))?;
    let t = data.t_max();
    let r = match a.r.as_deref() {
        None => vec![1.0; t],
        Some([r]) => vec![*r; t],
        Some(list) if list.len() == t => list.to_vec(),
        Some(list) => {
            return Err(CliError::Usage(format!(
                "--r has {} values but the longest ranking has {t} ranks",
                list.len()
            )))
        }
    };
    let sampler = a.sampler.unwrap_or(SamplerArg::Slice).into();
    let mut config = ChainConfig::new(sampler, sweeps, t, a.seed.unwrap_or(0));
    config.prior = PriorParams::new(a.nu.unwrap_or(1.0), r, a.alpha.unwrap_or(1.0))?;
    if let Some(x) = a.t_gibbs {
        config.t_gibbs = x;
    }
    if let Some(x) = a.t_slices {
        config.slice.t_slices = x;
    }
    if let Some(x) = a.max_theta {
        config.slice.max_theta = x;
    }
    if let Some(x) = a.k_init {
        config.k_init = x;
    }
    config.burn_in = a.burn_in;
    config.stride = a.stride;
    config.random_scan = a.random_scan;
    if let Some(s) = a.sigma_update {
        config.sigma_update = s.into();
    }
    config.validate()?;

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        data_file: canonical(data_path)?,
        data_sha256,
        items_file: a.items.as_deref().map(canonical).transpose()?,
        items_sha256: dict.map(|d| d.1),
        n: data.n,
        t_max: t,
        points: data.rankings.len(),
        chains,
        config,
        traces: (0..chains).map(chain_trace_name).collect(),
        summaries: (0..chains).map(chain_summary_name).collect(),
    };
    Ok((data, manifest))
}

fn plan_from_manifest(a: &FitArgs, path: &Path) -> Result<(RankingFile, RunManifest), CliError> {
    let set = a.config_flags_set();
    if !set.is_empty() {
        return Err(CliError::Usage(format!(
            "--manifest cannot be combined with {}",
            set.join(", ")
        )));
    }
    let manifest = RunManifest::load(path)?;
    if manifest.chains == 0 {
        return Err(CliError::Usage(format!(
            "{}: chains must be at least 1",
            path.display()
        )));
    }
    manifest.config.validate()?;
    let dict = match (&manifest.items_file, &manifest.items_sha256) {
        (Some(file), Some(expected)) => {
            let (dict, digest) = read_dict(file)?;
            if &digest != expected {
                return Err(CliError::Data(format!(
                    "{}: contents changed since the run",
                    file.display()
                )));
            }
            Some(dict)
        }
        (None, None) => None,
        _ => {
            return Err(CliError::Data(format!(
                "{}: inconsistent item dictionary entry",
                path.display()
            )))
        }
    };
    let (data, digest) = read_data(&manifest.data_file, dict.as_ref())?;
    if digest != manifest.data_sha256 {
        return Err(CliError::Data(format!(
            "{}: contents changed since the run",
            manifest.data_file.display()
        )));
    }
    if (data.n, data.t_max(), data.rankings.len()) != (manifest.n, manifest.t_max, manifest.points)
    {
        return Err(CliError::Data(format!(
            "{}: data shape differs from the manifest",
            path.display()
        )));
    }
    Ok((data, manifest))
}

pub fn fit(a: &FitArgs) -> Result<(), CliError> {
    let (data, manifest) = match &a.manifest {
        Some(path) => plan_from_manifest(a, path)?,
        None => plan_from_flags(a)?,
    };
    let config = &manifest.config;
    let traces: Vec<Result<SampleTrace, DpmError>> = (0..manifest.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = RngStream::for_chain(config.seed, c as u64);
            run_chain(&data.rankings, config, &mut rng)
        })
        .collect();
    let traces = traces.into_iter().collect::<Result<Vec<_>, _>>()?;

    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    for (c, trace) in traces.iter().enumerate() {
        write_trace(&a.out_dir.join(&manifest.traces[c]), &trace.snapshots)?;
        write_summary(&a.out_dir.join(&manifest.summaries[c]), &trace.summaries)?;
    }
    data.items.save(&a.out_dir.join(ITEMS_FILE))?;
    manifest.save(&a.out_dir.join(MANIFEST_FILE))?;

    for (c, trace) in traces.iter().enumerate() {
        let last = trace.summaries.last().expect("initial state is summarized");
        println!(
            "chain {c}: {} sweeps, {} clusters at the end, largest holds {:.3} of the data",
            last.sweep, last.n_clusters, last.largest_fraction
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Named configuration; explicit flags override its fields.
    #[arg(long, value_parser = ["ds1", "ds2", "ds3", "ds4", "fig8"])]
    pub preset: Option<String>,
    /// Number of clusters.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of items.
    #[arg(long)]
    pub n: Option<usize>,
    /// Ranking length.
    #[arg(long)]
    pub t: Option<usize>,
    /// θ* shared by all ranks, or comma-separated per rank [default: 1]
    #[arg(long, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
    /// Points drawn from every cluster [default: 100]
    #[arg(long, conflicts_with = "total")]
    pub per_cluster: Option<usize>,
    /// Points in total, clusters picked uniformly.
    #[arg(long)]
    pub total: Option<usize>,
    /// Rankings conditioned on when drawing each center.
    #[arg(long)]
    pub center_rankings: Option<usize>,
    /// Dispersion of the rankings behind each center.
    #[arg(long)]
    pub center_theta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write this many held-out rankings to test.txt.
    #[arg(long, default_value_t = 0)]
    pub test_points: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct TruthFile<'a> {
    spec: &'a PlantedMixtureSpec,
    truth: &'a PlantedTruth,
}

fn gen_spec(a: &GenArgs) -> Result<PlantedMixtureSpec, CliError> {
    let mut spec = match &a.preset {
        Some(name) => PlantedMixtureSpec::preset(name).expect("preset names are validated by clap"),
        None => {
            let missing: Vec<&str> = [
                ("--k", a.k.is_none()),
                ("--n", a.n.is_none()),
                ("--t", a.t.is_none()),
            ]
            .iter()
            .filter(|(_, m)| *m)
            .map(|(f, _)| *f)
            .collect();
            if !missing.is_empty() {
                return Err(CliError::Usage(format!(
                    "without --preset, gen needs {}",
                    missing.join(", ")
                )));
            }
            let t = a.t.unwrap_or(0);
            PlantedMixtureSpec {
                k: a.k.unwrap_or(0),
                n: a.n.unwrap_or(0),
                t,
                theta_star: vec![1.0; t],
                points: PointCount::PerCluster(100),
                center_rankings: 100,
                center_theta: 0.7,
                seed: 0,
            }
        }
    };
    if let Some(k) = a.k {
        spec.k = k;
    }
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(t) = a.t {
        if t != spec.t
            && a.theta.is_none()
            && spec.theta_star.iter().all(|&x| x == spec.theta_star[0])
        {
            spec.theta_star = vec![spec.theta_star.first().copied().unwrap_or(1.0); t];
        }
        spec.t = t;
    }
    match a.theta.as_deref() {
        Some([x]) => spec.theta_star = vec![*x; spec.t],
        Some(list) => spec.theta_star = list.to_vec(),
        None => {}
    }
    if let Some(p) = a.per_cluster {
        spec.points = PointCount::PerCluster(p);
    }
    if let Some(p) = a.total {
        spec.points = PointCount::Total(p);
    }
    if let Some(x) = a.center_rankings {
        spec.center_rankings = x;
    }
    if let Some(x) = a.center_theta {
        spec.center_theta = x;
    }
    spec.seed = a.seed;
    spec.validate()?;
    Ok(spec)
}

pub fn gen(a: &GenArgs) -> Result<(), CliError> {
    let spec = gen_spec(a)?;
    let mut rng = RngStream::new(spec.seed);
    let planted = gen_planted_mixture(&spec, &mut rng)?;
    let items = ItemDict::numeric(spec.n);
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    write_rankings(&a.out.join("data.txt"), &planted.rankings, &items)?;
    write_labels(&a.out.join("labels.txt"), planted.labels.labels())?;
    items.save(&a.out.join(ITEMS_FILE))?;
    let truth_path = a.out.join("truth.json");
    let truth = TruthFile {
        spec: &spec,
        truth: &planted.truth,
    };
    let text = serde_json::to_string_pretty(&truth).expect("truth serializes");
    fs::write(&truth_path, text + "\n").map_err(|e| CliError::io(&truth_path, e))?;
    if a.test_points > 0 {
        let (test, _) = planted.truth.sample(a.test_points, spec.t, &mut rng);
        write_rankings(&a.out.join("test.txt"), &test, &items)?;
    }
    println!(
        "{} rankings over {} items from {} clusters written to {}",
        planted.rankings.len(),
        spec.n,
        spec.k,
        a.out.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    /// Variation of Information, in nats.
    Vi,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("reference").required(true).args(["truth", "trace2"])))]
pub struct EvalArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// True labels, one integer per line; scores every snapshot.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Second trace; compares the two final snapshots.
    #[arg(long)]
    pub trace2: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Metric::Vi)]
    pub metric: Metric,
    /// CSV destination [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ViRow {
    sweep: usize,
    vi_nats: f64,
    n_clusters: usize,
}

fn clustering_of(s: &Snapshot, path: &Path) -> Result<Clustering, CliError> {
    Clustering::new(s.assignments.clone())
        .map_err(|e| CliError::Data(format!("{}: sweep {}: {e}", path.display(), s.sweep)))
}

fn csv_sink(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| CliError::io(p, e))?),
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn write_rows<T: Serialize>(out: Option<&Path>, rows: &[T]) -> Result<(), CliError> {
    let label = out.unwrap_or(Path::new("<stdout>"));
    let mut w = csv_sink(out)?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(label, e))?;
    }
    w.flush().map_err(|e| CliError::io(label, e))
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let Metric::Vi = a.metric;
    let snaps = read_trace(&a.trace)?;
    let rows = if let Some(truth_path) = &a.truth {
        let truth = Clustering::new(read_labels(truth_path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", truth_path.display())))?;
        snaps
            .iter()
            .map(|s| {
                Ok(ViRow {
                    sweep: s.sweep,
                    vi_nats: vi_distance(&clustering_of(s, &a.trace)?, &truth)?,
                    n_clusters: s.clusters.len(),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?
    } else {
        let other_path = a
            .trace2
            .as_deref()
            .expect("clap requires --truth or --trace2");
        let other = read_trace(other_path)?;
        let (last, other_last) = (
            snaps.last().expect("non-empty"),
            other.last().expect("non-empty"),
        );
        vec![ViRow {
            sweep: last.sweep,
            vi_nats: vi_distance(
                &clustering_of(last, &a.trace)?,
                &clustering_of(other_last, other_path)?,
            )?,
            n_clusters: last.clusters.len(),
        }]
    };
    write_rows(a.out.as_deref(), &rows)
}

#[derive(Debug, Args)]
pub struct LoglikArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub test_file: PathBuf,
    /// Snapshots at or before this sweep are skipped [default: the run's burn-in, or 0]
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Keep every stride-th sweep after burn-in among recorded snapshots.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// DP concentration [default: the run's, or 1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Item dictionary [default: items.json beside the trace, else ids 0..n-1]
    #[arg(long)]
    pub items: Option<PathBuf>,
}

fn beside(trace: &Path, name: &str) -> Option<PathBuf> {
    let p = trace.parent().unwrap_or(Path::new(".")).join(name);
    p.is_file().then_some(p)
}

fn trace_dict(trace: &Path, items: Option<&Path>, n: usize) -> Result<ItemDict, CliError> {
    let dict = match items
        .map(Path::to_path_buf)
        .or_else(|| beside(trace, ITEMS_FILE))
    {
        Some(p) => ItemDict::load(&p)?,
        None => ItemDict::numeric(n),
    };
    if dict.len() != n {
        return Err(CliError::Data(format!(
            "item dictionary has {} items but the trace ranks {n}",
            dict.len()
        )));
    }
    Ok(dict)
}

pub fn loglik(a: &LoglikArgs) -> Result<(), CliError> {
    if a.stride == 0 {
        return Err(CliError::Usage("--stride must be positive".into()));
    }
    let snaps = read_trace(&a.trace)?;
    let (n, t) = shape(&snaps[0]);
    let manifest = beside(&a.trace, MANIFEST_FILE)
        .map(|p| RunManifest::load(&p))
        .transpose()?;
    let burn_in = a
        .burn_in
        .or_else(|| manifest.as_ref().map(|m| m.config.effective_burn_in()))
        .unwrap_or(0);
    let alpha = a
        .alpha
        .or_else(|| manifest.as_ref().map(|m| m.config.prior.alpha))
        .unwrap_or(1.0);
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(CliError::Usage("--alpha must be positive".into()));
    }
    let dict = trace_dict(&a.trace, a.items.as_deref(), n)?;
    let test = read_rankings(&a.test_file, Some(&dict))?;
    let kept: Vec<&Snapshot> = snaps
        .iter()
        .filter(|s| s.sweep > burn_in && (s.sweep - burn_in).is_multiple_of(a.stride))
        .collect();
    let score = score_snapshots(&kept, n, t, &test.rankings, alpha)?;
    println!("total {}", score.total);
    println!("per_point {}", score.per_point);
    println!("samples {}", score.samples);
    println!("points {}", test.rankings.len());
    Ok(())
}

#[derive(Debug, Args)]
pub struct ApproxErrorArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,20,50")]
    pub n_list: Vec<usize>,
    /// Largest a; the grid is a_max·k/a_steps for k = 1..=a_steps.
    #[arg(long, default_value_t = 10.0)]
    pub a_max: f64,
    #[arg(long, default_value_t = 100)]
    pub a_steps: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,5,10")]
    pub b_list: Vec<f64>,
    /// CSV destination [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn approx_error(a: &ApproxErrorArgs) -> Result<(), CliError> {
    let positive = |x: f64| x > 0.0 && x.is_finite();
    if a.n_list.is_empty() || a.n_list.iter().any(|&n| n < 2) {
        return Err(CliError::Usage(
            "--n-list needs item counts of at least 2".into(),
        ));
    }
    if !positive(a.a_max) || a.a_steps == 0 {
        return Err(CliError::Usage(
            "--a-max and --a-steps must be positive".into(),
        ));
    }
    if a.b_list.is_empty() || !a.b_list.iter().all(|&b| positive(b)) {
        return Err(CliError::Usage("--b-list needs positive values".into()));
    }
    let a_grid: Vec<f64> = (1..=a.a_steps)
        .map(|k| a.a_max * k as f64 / a.a_steps as f64)
        .collect();
    let rows: Vec<_> = a
        .n_list
        .par_iter()
        .map(|&n| approx_error_study(&[n], &a_grid, &a.b_list))
        .collect::<Vec<_>>()
        .concat();
    write_rows(a.out.as_deref(), &rows)
}

#[derive(Debug, Args)]
pub struct CentersArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Item dictionary [default: items.json beside the trace, else ids]
    #[arg(long)]
    pub items: Option<PathBuf>,
    /// Items shown per center.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

pub fn centers(a: &CentersArgs) -> Result<(), CliError> {
    let snaps = read_trace(&a.trace)?;
    let last = snaps.last().expect("non-empty");
    let dict = trace_dict(&a.trace, a.items.as_deref(), shape(last).0)?;
    let mut clusters: Vec<_> = last.clusters.iter().collect();
    clusters.sort_by_key(|c| std::cmp::Reverse(c.size));
    println!("sweep {}", last.sweep);
    for (i, c) in clusters.iter().enumerate() {
        let names: Vec<&str> = c
            .sigma
            .iter()
            .take(a.top)
            .map(|&id| dict.token(id))
            .collect();
        let theta: Vec<String> = c.theta.iter().map(|x| format!("{x:.3}")).collect();
        println!("cluster {i} size {} theta [{}]", c.size, theta.join(", "));
        println!("  {}", names.join(" "));
    }
    Ok(())
}
