//! Desk-scale rate experiments: sweep the sample size, train a WAE per cell
//! with budget-sized networks, score it on held-out data and fresh latents,
//! and summarise how the errors decay with `n`.

use std::collections::{BTreeMap, HashSet};
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrepancy::{euclidean, mmd2_plugin, sq_dist, wasserstein1, EmpiricalMeasure, LatentDistribution};
use crate::error::{Error, Result};
use crate::synth_data::{GroundTruthModel, ModelKind};
use crate::wae_core::{layer_dims, size_architecture, theoretical_exponent, train, CostKind, DissKind, WaeConfig};

/// Random latent pairs used for the empirical Lipschitz constant.
pub const LIPSCHITZ_PAIRS: usize = 4000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: String,
    pub ell: usize,
}

/// Everything a sweep needs. Missing TOML keys take the desk-scale defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub models: Vec<ModelSpec>,
    pub data_dim: usize,
    pub ns: Vec<usize>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub lambda: f64,
    pub diss_kind: DissKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta_const: f64,
    /// Lower bound on hidden widths of the concrete networks.
    pub min_width: usize,
    pub test_size: usize,
    pub fresh_latents: usize,
    pub latent: LatentDistribution,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            models: vec![
                ModelSpec {
                    model: "sine-ridge".into(),
                    ell: 1,
                },
                ModelSpec {
                    model: "sine-ridge".into(),
                    ell: 4,
                },
            ],
            data_dim: 8,
            ns: vec![200, 400, 800, 1600, 3200],
            seeds: (0..5).collect(),
            master_seed: 2024,
            lambda: 10.0,
            diss_kind: DissKind::Mmd2,
            learning_rate: 1e-3,
            epochs: 40,
            batch_size: 64,
            beta_const: 1.0,
            min_width: 16,
            test_size: 1000,
            fresh_latents: 1000,
            latent: LatentDistribution::UniformCube,
            threads: 0,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let distinct = |v: &[u64]| v.iter().collect::<HashSet<_>>().len();
        let ns: Vec<u64> = self.ns.iter().map(|&n| n as u64).collect();
        if distinct(&ns) < 2 {
            return Err(Error::Config("a sweep needs at least 2 distinct n values".into()));
        }
        if distinct(&self.seeds) < 2 {
            return Err(Error::Config("a sweep needs at least 2 distinct seeds".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("a sweep needs at least one model".into()));
        }
        if self.ns.iter().any(|&n| n < 2) {
            return Err(Error::Config("every n must be >= 2".into()));
        }
        if self.test_size < 2 || self.fresh_latents < 2 {
            return Err(Error::Config("test and latent sample sizes must be >= 2".into()));
        }
        for m in &self.models {
            self.ground_truth(m)?;
        }
        self.wae_config(1, 0).validate()
    }

    pub fn ground_truth(&self, spec: &ModelSpec) -> Result<GroundTruthModel> {
        let kind: ModelKind = spec.model.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        Ok(GroundTruthModel::new(kind, spec.ell, self.data_dim)
            .map_err(|e| Error::Config(e.to_string()))?
            .with_latent(self.latent))
    }

    fn wae_config(&self, ell: usize, seed: u64) -> WaeConfig {
        WaeConfig {
            lambda: self.lambda,
            diss_kind: self.diss_kind,
            cost: CostKind::SquaredEuclidean,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            seed,
            latent_dim: ell,
            data_dim: self.data_dim,
            kernel_sigma: None,
            latent: self.latent,
        }
    }

    /// All cells in sweep order: model, then n, then seed.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for m in &self.models {
            let id = self.ground_truth(m).map(|g| g.id()).unwrap_or_default();
            for &n in &self.ns {
                for &seed in &self.seeds {
                    out.push(CellKey {
                        model_id: id.clone(),
                        ell: m.ell,
                        model: m.model.clone(),
                        n,
                        seed,
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellKey {
    pub model_id: String,
    pub model: String,
    pub ell: usize,
    pub n: usize,
    pub seed: u64,
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRunResult {
    pub model_id: String,
    pub ell: usize,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(rename = "L_e")]
    pub l_e: usize,
    #[serde(rename = "W_e")]
    pub w_e: usize,
    #[serde(rename = "L_g")]
    pub l_g: usize,
    #[serde(rename = "W_g")]
    pub w_g: usize,
    pub recon_test: f64,
    pub encode_diss: f64,
    pub gen_w1: f64,
    pub objective_test: f64,
    pub wall_time_s: f64,
}

pub const CSV_COLUMNS: [&str; 14] = [
    "model_id",
    "ell",
    "d",
    "n",
    "seed",
    "L_e",
    "W_e",
    "L_g",
    "W_g",
    "recon_test",
    "encode_diss",
    "gen_w1",
    "objective_test",
    "wall_time_s",
];

impl RateRunResult {
    fn key(&self) -> (String, usize, u64) {
        (self.model_id.clone(), self.n, self.seed)
    }
}

/// splitmix64 finaliser, used to derive independent per-cell seeds.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Deterministic seed from a master seed, a label and integer parts.
pub fn derive_seed(master: u64, label: &str, parts: &[u64]) -> u64 {
    let mut h = mix(master);
    for b in label.bytes() {
        h = mix(h ^ b as u64);
    }
    for &p in parts {
        h = mix(h ^ p);
    }
    h
}

#[derive(Clone, Debug, Serialize)]
pub struct GuaranteeReport {
    pub recon_test: f64,
    pub encode_diss: f64,
    pub gen_w1: f64,
    pub objective_test: f64,
    /// Largest `‖G(z) - G(z')‖ / ‖z - z'‖` over sampled latent pairs.
    pub lipschitz: f64,
    /// `W1(ν̂, E♯μ̂_test)`.
    pub latent_w1: f64,
    /// Mean `‖x - G(E(x))‖` over the test set.
    pub mean_recon_dist: f64,
    /// `lipschitz · latent_w1 + mean_recon_dist`.
    pub chain_bound: f64,
    /// `gen_w1 ≤ 2 · chain_bound`.
    pub chain_holds: bool,
}

/// Scores a generator/encoder pair. `encode_diss` uses the plug-in
/// estimator of the configured dissimilarity, so `objective_test` is exactly
/// `recon_test + λ·encode_diss`.
pub fn evaluate_guarantees(
    generator: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    encoder: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    test: &[Vec<f64>],
    fresh_latents: &[Vec<f64>],
    cfg: &WaeConfig,
    seed: u64,
) -> Result<GuaranteeReport> {
    if test.is_empty() || fresh_latents.is_empty() {
        return Err(Error::Parameter("evaluation needs test points and latents".into()));
    }
    let codes: Vec<Vec<f64>> = test.iter().map(|x| encoder(x)).collect::<Result<_>>()?;
    let recons: Vec<Vec<f64>> = codes.iter().map(|c| generator(c)).collect::<Result<_>>()?;
    let n = test.len() as f64;
    let recon_test = test.iter().zip(&recons).map(|(x, y)| sq_dist(x, y)).sum::<f64>() / n;
    let mean_recon_dist = test.iter().zip(&recons).map(|(x, y)| euclidean(x, y)).sum::<f64>() / n;

    let latent_measure = EmpiricalMeasure::uniform(fresh_latents.to_vec())?;
    let code_measure = EmpiricalMeasure::uniform(codes)?;
    let latent_w1 = wasserstein1(&code_measure, &latent_measure)?;
    let encode_diss = match cfg.diss_kind {
        DissKind::W1 => latent_w1,
        DissKind::Mmd2 => mmd2_plugin(&code_measure, &latent_measure, &cfg.kernel()?)?,
    };
    let generated: Vec<Vec<f64>> = fresh_latents.iter().map(|z| generator(z)).collect::<Result<_>>()?;
    let gen_w1 = wasserstein1(
        &EmpiricalMeasure::uniform(generated)?,
        &EmpiricalMeasure::uniform(test.to_vec())?,
    )?;

    let lipschitz = lipschitz_estimate(generator, fresh_latents[0].len(), seed)?;
    let chain_bound = lipschitz * latent_w1 + mean_recon_dist;
    Ok(GuaranteeReport {
        recon_test,
        encode_diss,
        gen_w1,
        objective_test: recon_test + cfg.lambda * encode_diss,
        lipschitz,
        latent_w1,
        mean_recon_dist,
        chain_bound,
        chain_holds: gen_w1 <= 2.0 * chain_bound,
    })
}

/// Max difference quotient over random pairs and small random steps in the
/// latent cube.
pub fn lipschitz_estimate(generator: &dyn Fn(&[f64]) -> Result<Vec<f64>>, latent_dim: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for i in 0..LIPSCHITZ_PAIRS {
        let z: Vec<f64> = (0..latent_dim).map(|_| rng.gen()).collect();
        let step = [1.0, 0.1, 0.01][i % 3];
        let w: Vec<f64> = z
            .iter()
            .map(|&v| (v + step * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0))
            .collect();
        let dz = euclidean(&z, &w);
        if dz == 0.0 {
            continue;
        }
        best = best.max(euclidean(&generator(&z)?, &generator(&w)?) / dz);
    }
    Ok(best)
}

/// Trains and scores one cell. The test set depends only on
/// `(model, seed)`, so curves across `n` share it.
pub fn run_cell(cfg: &SweepConfig, key: &CellKey) -> Result<RateRunResult> {
    let start = Instant::now();
    let spec = ModelSpec {
        model: key.model.clone(),
        ell: key.ell,
    };
    let truth = cfg.ground_truth(&spec)?;
    let id = truth.id();
    let d = cfg.data_dim;
    let test = truth.generate_dataset(cfg.test_size, derive_seed(cfg.master_seed, &id, &[key.seed, 0]));
    let data = truth.generate_dataset(key.n, derive_seed(cfg.master_seed, &id, &[key.seed, 1, key.n as u64]));
    let fresh = truth.sample_latent(
        cfg.fresh_latents,
        derive_seed(cfg.master_seed, &id, &[key.seed, 2, key.n as u64]),
    );
    let s = (key.ell as f64 / truth.alpha_g().min(1.0)).min(d as f64);
    let plan = size_architecture(key.n, s, truth.alpha_e(), truth.alpha_g(), key.ell, d, cfg.beta_const)?;
    let enc_dims = layer_dims(d, key.ell, plan.l_e, plan.w_e, cfg.min_width);
    let dec_dims = layer_dims(key.ell, d, plan.l_g, plan.w_g, cfg.min_width);
    let mut wae = cfg.wae_config(key.ell, derive_seed(cfg.master_seed, &id, &[key.seed, 3, key.n as u64]));
    wae.kernel_sigma = Some(wae.kernel()?.sigma);
    let trained = train(&data, &dec_dims, &enc_dims, &wae)?;
    let report = evaluate_guarantees(
        &|z| trained.decoder.forward(z),
        &|x| trained.encoder.forward(x),
        &test,
        &fresh,
        &wae,
        derive_seed(cfg.master_seed, &id, &[key.seed, 4, key.n as u64]),
    )?;
    Ok(RateRunResult {
        model_id: id,
        ell: key.ell,
        d,
        n: key.n,
        seed: key.seed,
        l_e: plan.l_e,
        w_e: plan.w_e,
        l_g: plan.l_g,
        w_g: plan.w_g,
        recon_test: report.recon_test,
        encode_diss: report.encode_diss,
        gen_w1: report.gen_w1,
        objective_test: report.objective_test,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<RateRunResult>> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Malformed(format!("unexpected CSV header in {}", path.display())));
    }
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutcome {
    pub written: usize,
    pub skipped: usize,
    /// Cells whose training or evaluation failed, with the error text.
    pub failures: Vec<(CellKey, String)>,
}

/// Runs every cell not already present in `out_csv`, appending one row per
/// finished cell through a single writer.
pub fn run_rate_experiment(cfg: &SweepConfig, out_csv: impl AsRef<Path>) -> Result<SweepOutcome> {
    cfg.validate()?;
    let out_csv = out_csv.as_ref();
    let done: HashSet<(String, usize, u64)> = read_results(out_csv)?.iter().map(|r| r.key()).collect();
    let all = cfg.cells();
    let pending: Vec<CellKey> = all
        .iter()
        .filter(|k| !done.contains(&(k.model_id.clone(), k.n, k.seed)))
        .cloned()
        .collect();
    let mut outcome = SweepOutcome {
        skipped: all.len() - pending.len(),
        ..SweepOutcome::default()
    };
    if pending.is_empty() {
        return Ok(outcome);
    }

    let fresh_file = std::fs::metadata(out_csv).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = OpenOptions::new().create(true).append(true).open(out_csv)?;
    if fresh_file {
        writeln!(file, "{}", CSV_COLUMNS.join(","))?;
        file.flush()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Resource(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<(CellKey, Result<RateRunResult>)>();
    std::thread::scope(|scope| -> Result<()> {
        scope.spawn(move || {
            pool.install(|| {
                pending.par_iter().for_each_with(tx, |tx, key| {
                    // The receiver outlives the workers; a send error means
                    // the writer already failed and nothing is left to do.
                    let _ = tx.send((key.clone(), run_cell(cfg, key)));
                });
            });
        });
        for (key, result) in rx {
            match result {
                Ok(row) => {
                    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
                    w.serialize(&row)?;
                    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
                    file.write_all(&bytes)?;
                    file.flush()?;
                    outcome.written += 1;
                }
                Err(err) => {
                    log::warn!("cell {} n={} seed={} failed: {err}", key.model_id, key.n, key.seed);
                    outcome.failures.push((key, err.to_string()));
                }
            }
        }
        Ok(())
    })?;
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoglogFit {
    pub slope: f64,
    pub stderr: f64,
    pub used: usize,
    /// Points dropped because the value was not positive.
    pub excluded: usize,
}

/// Least-squares slope of `ln value` against `ln n`, with its standard
/// error. Nonpositive values are dropped with a warning.
pub fn fit_loglog_slope(ns: &[f64], values: &[f64]) -> Result<LoglogFit> {
    if ns.len() != values.len() {
        return Err(Error::Parameter("ns and values differ in length".into()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = ns
        .iter()
        .zip(values)
        .filter(|(n, v)| **n > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(n, v)| (n.ln(), v.ln()))
        .unzip();
    let excluded = ns.len() - xs.len();
    if excluded > 0 {
        log::warn!("log-log fit: dropped {excluded} nonpositive values");
    }
    if xs.len() < 3 {
        return Err(Error::Parameter(format!(
            "need at least 3 positive points, got {}",
            xs.len()
        )));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Parameter("all n values are equal".into()));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Ok(LoglogFit {
            slope: 0.0,
            stderr: 0.0,
            used: xs.len(),
            excluded,
        });
    }
    let my = ys.iter().sum::<f64>() / k;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = if xs.len() > 2 {
        (ssr / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LoglogFit {
        slope,
        stderr,
        used: xs.len(),
        excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(v: &[f64]) -> MeanStd {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    MeanStd { mean, std: var.sqrt() }
}

#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub runs: usize,
    pub recon_test: MeanStd,
    pub encode_diss: MeanStd,
    pub gen_w1: MeanStd,
    pub objective_test: MeanStd,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub ell: usize,
    pub d: usize,
    /// Rows sorted by increasing `n`.
    pub cells: Vec<CellSummary>,
    pub gen_w1_fit: Option<LoglogFit>,
    pub recon_fit: Option<LoglogFit>,
    /// Decay exponent predicted for Lipschitz models of this latent dim.
    pub predicted_exponent: f64,
}

/// Per-(model, n) means and standard deviations, and slopes fitted to the
/// seed-averaged curves.
pub fn summarize(rows: &[RateRunResult], diss_kind: DissKind) -> Vec<ModelSummary> {
    let mut groups: BTreeMap<(usize, String), BTreeMap<usize, Vec<&RateRunResult>>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.ell, r.model_id.clone()))
            .or_default()
            .entry(r.n)
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((ell, model_id), by_n)| {
            let d = by_n.values().next().map(|v| v[0].d).unwrap_or(0);
            let cells: Vec<CellSummary> = by_n
                .into_iter()
                .map(|(n, rs)| {
                    let col = |f: fn(&RateRunResult) -> f64| mean_std(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
                    CellSummary {
                        n,
                        runs: rs.len(),
                        recon_test: col(|r| r.recon_test),
                        encode_diss: col(|r| r.encode_diss),
                        gen_w1: col(|r| r.gen_w1),
                        objective_test: col(|r| r.objective_test),
                    }
                })
                .collect();
            let ns: Vec<f64> = cells.iter().map(|c| c.n as f64).collect();
            let fit = |vals: Vec<f64>| fit_loglog_slope(&ns, &vals).ok();
            ModelSummary {
                gen_w1_fit: fit(cells.iter().map(|c| c.gen_w1.mean).collect()),
                recon_fit: fit(cells.iter().map(|c| c.recon_test.mean).collect()),
                predicted_exponent: theoretical_exponent(ell as f64, ell as f64, 1.0, 1.0, diss_kind),
                model_id,
                ell,
                d,
                cells,
            }
        })
        .collect()
}

/// Number of consecutive increases along a curve.
pub fn inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

#[derive(Clone, Debug, Serialize)]
pub struct PhenomenonCheck {
    pub low_model: String,
    pub high_model: String,
    pub gen_w1_inversions: [usize; 2],
    pub recon_inversions: [usize; 2],
    /// Low-dim curve strictly below the high-dim one at the two largest n,
    /// for both gen_w1 and recon_test.
    pub ordering: bool,
    pub low_slope: Option<f64>,
    pub passes: bool,
}

/// Checks the intrinsic-dimension phenomenon between the models with the
/// smallest and largest latent dimension: seed-averaged curves nonincreasing
/// with at most one inversion, the low-dimensional curves strictly below at
/// the two largest `n`, and the low-dimensional gen_w1 slope at most -0.1.
pub fn rate_phenomenon(summaries: &[ModelSummary]) -> Result<PhenomenonCheck> {
    let low = summaries
        .iter()
        .min_by_key(|m| m.ell)
        .ok_or_else(|| Error::Parameter("no models".into()))?;
    let high = summaries.iter().max_by_key(|m| m.ell).expect("non-empty");
    if low.ell == high.ell {
        return Err(Error::Parameter("need models with two different latent dims".into()));
    }
    let lows: Vec<usize> = low.cells.iter().map(|c| c.n).collect();
    let highs: Vec<usize> = high.cells.iter().map(|c| c.n).collect();
    if lows != highs || lows.len() < 2 {
        return Err(Error::Parameter("models were run on different n grids".into()));
    }
    let curve = |m: &ModelSummary, f: fn(&CellSummary) -> f64| m.cells.iter().map(f).collect::<Vec<f64>>();
    let g = |c: &CellSummary| c.gen_w1.mean;
    let r = |c: &CellSummary| c.recon_test.mean;
    let gen_w1_inversions = [inversions(&curve(low, g)), inversions(&curve(high, g))];
    let recon_inversions = [inversions(&curve(low, r)), inversions(&curve(high, r))];
    let k = lows.len();
    let ordering = (k - 2..k).all(|i| g(&low.cells[i]) < g(&high.cells[i]) && r(&low.cells[i]) < r(&high.cells[i]));
    let low_slope = low.gen_w1_fit.as_ref().map(|f| f.slope);
    let passes = gen_w1_inversions.iter().chain(&recon_inversions).all(|&v| v <= 1)
        && ordering
        && low_slope.is_some_and(|s| s <= -0.1);
    Ok(PhenomenonCheck {
        low_model: low.model_id.clone(),
        high_model: high.model_id.clone(),
        gen_w1_inversions,
        recon_inversions,
        ordering,
        low_slope,
        passes,
    })
}
