use mallows_dpm::dpm::{
    init_state, run_chain_with, sweep, test_log_likelihood, ChainConfig, ClusterSnapshot,
    SampleTrace, SamplerKind, Snapshot,
};
use mallows_dpm::gm::{gm_log_prob, sample_gm, GmParams, PriorParams};
use mallows_dpm::rankings::{Permutation, SuffStats, TopTRanking};
use mallows_dpm::samplers::RngStream;

// P(both toy rankings share a cluster) under the Beta-approximate model,
// from the closed form checked in the acceptance run.
const TOY_BETA_TOGETHER: f64 = 0.4626;

#[test]
fn heldout_score_of_the_true_model_matches_its_entropy() {
    let (n, t) = (8, 3);
    let theta = vec![1.2, 0.7, 0.4];
    let sigma = Permutation::new(vec![3, 0, 6, 1, 7, 2, 5, 4]).unwrap();
    let params = GmParams::new(sigma.clone(), theta.clone()).unwrap();
    let mut rng = RngStream::new(11);
    let heldout: Vec<TopTRanking> = (0..4000).map(|_| sample_gm(&params, t, &mut rng)).collect();

    // expected log-likelihood by direct summation over each code entry
    let expected: f64 = theta
        .iter()
        .enumerate()
        .map(|(j, &th)| {
            let w: Vec<f64> = (0..n - j).map(|k| (-th * k as f64).exp()).collect();
            let z: f64 = w.iter().sum();
            w.iter().map(|x| x / z * (x / z).ln()).sum::<f64>()
        })
        .sum();

    let big = 100_000;
    let snapshot = |s| Snapshot {
        sweep: s,
        assignments: Vec::new(),
        clusters: vec![ClusterSnapshot {
            size: big,
            sigma: sigma.order().to_vec(),
            theta: theta.clone(),
        }],
    };
    let trace = SampleTrace {
        n,
        t_max: t,
        burn_in: 0,
        stride: 1,
        snapshots: vec![snapshot(1), snapshot(2)],
        summaries: Vec::new(),
    };
    let prior = PriorParams::uniform(1.0, 1.0, 1.0, t).unwrap();
    let score = test_log_likelihood(&trace, &heldout, &prior).unwrap();
    assert_eq!(score.samples, 2);

    let per: Vec<f64> = heldout.iter().map(|pi| gm_log_prob(pi, &params)).collect();
    let mean = per.iter().sum::<f64>() / per.len() as f64;
    let sd = (per.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / per.len() as f64).sqrt();
    let se = sd / (per.len() as f64).sqrt();
    assert!(
        (score.per_point - expected).abs() < 3.0 * se,
        "score {} expected {expected} se {se}",
        score.per_point
    );
}

#[test]
fn cluster_statistics_partition_the_data_every_sweep() {
    let (n, t) = (7, 3);
    let mut rng = RngStream::new(12);
    let truth: Vec<GmParams> = (0..2)
        .map(|_| GmParams::new(Permutation::random(n, &mut rng), vec![1.0; t]).unwrap())
        .collect();
    let data: Vec<TopTRanking> = (0..60)
        .map(|i| sample_gm(&truth[i % 2], 1 + i % t, &mut rng))
        .collect();
    let global = SuffStats::from_rankings(n, t, data.iter()).unwrap();
    for kind in [SamplerKind::Slice, SamplerKind::Beta] {
        let cfg = ChainConfig::new(kind, 15, t, 5);
        let mut checked = 0;
        run_chain_with(&data, &cfg, &mut RngStream::new(5), |_, state| {
            assert!(state.is_consistent(&data));
            for j in 0..t {
                let mut dense = vec![vec![0i64; n]; n];
                let mut count = 0;
                for (_, c) in state.clusters() {
                    count += c.stats.count_at(j);
                    for (row, cells) in c.stats.rank(j).to_dense(n).iter().enumerate() {
                        for (col, v) in cells.iter().enumerate() {
                            dense[row][col] += v;
                        }
                    }
                }
                assert_eq!(count, global.count_at(j));
                assert_eq!(dense, global.rank(j).to_dense(n));
            }
            checked += 1;
        })
        .unwrap();
        assert_eq!(checked, 16);
    }
}

#[test]
fn data_order_does_not_change_the_toy_posterior() {
    let n = 3;
    let pi1 = TopTRanking::new(vec![0, 1, 2], n).unwrap();
    let pi2 = TopTRanking::new(vec![1, 0, 2], n).unwrap();
    let together = |data: &[TopTRanking], seed: u64| {
        let sweeps = 100_000;
        let mut cfg = ChainConfig::new(SamplerKind::Beta, sweeps, 2, seed);
        cfg.k_init = 2;
        let mut rng = RngStream::new(seed);
        let mut state = init_state(data, &cfg, &mut rng).unwrap();
        let mut hits = 0;
        for s in 1..=sweeps {
            sweep(&mut state, data, &cfg, s, &mut rng).unwrap();
            hits += (state.num_clusters() == 1) as usize;
        }
        hits as f64 / sweeps as f64
    };
    let forward = together(&[pi1.clone(), pi2.clone()], 21);
    let reversed = together(&[pi2, pi1], 22);
    assert!(
        (forward - TOY_BETA_TOGETHER).abs() < 0.02,
        "forward {forward}"
    );
    assert!(
        (reversed - TOY_BETA_TOGETHER).abs() < 0.02,
        "reversed {reversed}"
    );
}
