use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use waelab::constructions::{
    build_holder_approximator, build_prod2, build_prodd, build_sq, build_xi, sup_error, RegistryFunction, SupportKind,
};
use waelab::discrepancy::{
    median_bandwidth, mmd2_plugin, mmd2_unbiased_two_sample, wasserstein1, EmpiricalMeasure, KernelSpec,
    LatentDistribution,
};
use waelab::experiments::{rate_phenomenon, read_results, run_rate_experiment, summarize, SweepConfig};
use waelab::intrinsic_dim::{default_eps_grid, minkowski_dim_estimate};
use waelab::pointio::{read_points, write_points};
use waelab::relu_net::ReluNetwork;
use waelab::synth_data::{split, GroundTruthModel};
use waelab::wae_core::{layer_dims, size_architecture, train, ArchitecturePlan, DissKind, WaeConfig};

#[derive(Parser)]
#[command(
    name = "waelab",
    version,
    about = "ReLU constructions, discrepancies and WAE rate experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an explicit ReLU network and report its size.
    Construct {
        #[command(subcommand)]
        kind: Construct,
        /// Write the network in relu-net text format.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Box-counting dimension of a point file.
    Dimension {
        points: PathBuf,
        /// Comma-separated scales; defaults to 2^-2 … 2^-7.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
    },
    /// Discrepancy between two point files.
    Discrepancy {
        p: PathBuf,
        q: PathBuf,
        /// w1, mmd2 (plug-in) or mmd2-unbiased.
        #[arg(long, default_value = "w1")]
        kind: String,
        /// Gaussian bandwidth; median heuristic on the pooled sample if absent.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Sample a synthetic dataset from a ground-truth model.
    Gen {
        #[arg(long, default_value = "sine-ridge")]
        model: String,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, default_value_t = 8)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "uniform-cube")]
        latent: String,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the latents that produced each point.
        #[arg(long)]
        latents_out: Option<PathBuf>,
        /// Hold out this fraction as a test file.
        #[arg(long, requires = "test_out")]
        test_fraction: Option<f64>,
        #[arg(long)]
        test_out: Option<PathBuf>,
    },
    /// Train a WAE on a point file.
    Train {
        /// TOML with the training fields and an optional [architecture] table.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run (or resume) a rate sweep, appending rows to a CSV file.
    Rate {
        /// Sweep TOML; the built-in desk-scale sweep if absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-(model, n) means, fitted slopes and the dimension-ordering check.
    Summary {
        results: PathBuf,
        #[arg(long, default_value = "mmd2")]
        diss: String,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum Construct {
    /// Sawtooth approximation of x² on [0,1].
    Sq {
        #[arg(long)]
        m: usize,
    },
    /// Trapezoid bump, 1 on [-b,b], 0 outside [-a,a].
    Xi {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },
    /// Approximate product of two numbers in [-M,M].
    Prod2 {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
    },
    /// Approximate product of d numbers in [-1,1].
    Prodd {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
    },
    /// Approximator of a registry function on a sampled support.
    Holder {
        #[arg(long, default_value = "sine")]
        function: String,
        #[arg(long, default_value = "curve")]
        support: String,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 3.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.05)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct NetSummary {
    input_dim: usize,
    output_dim: usize,
    depth: usize,
    weights: usize,
    max_width: usize,
}

fn net_summary(net: &ReluNetwork) -> NetSummary {
    let stats = net.count_stats();
    NetSummary {
        input_dim: net.input_dim(),
        output_dim: net.output_dim(),
        depth: stats.depth,
        weights: stats.weights,
        max_width: net.max_width(),
    }
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn construct(kind: Construct, out: Option<PathBuf>) -> Result<()> {
    let (net, extra) = match kind {
        Construct::Sq { m } => (build_sq(m)?, serde_json::Value::Null),
        Construct::Xi { a, b } => (build_xi(a, b)?, serde_json::Value::Null),
        Construct::Prod2 { m, bound } => (build_prod2(m, bound)?, serde_json::Value::Null),
        Construct::Prodd { m, d } => (build_prodd(m, d)?, serde_json::Value::Null),
        Construct::Holder {
            function,
            support,
            dim,
            n,
            beta,
            eta,
            seed,
        } => {
            let f = RegistryFunction::by_name(&function, dim)?;
            let kind: SupportKind = support.parse()?;
            let sample = kind.sample(dim, n, seed)?;
            let approx = build_holder_approximator(&f, &sample, beta, eta)?;
            let check = kind.sample(dim, n, seed.wrapping_add(1))?;
            let err = sup_error(&approx.network, &f, &check)?;
            let extra = serde_json::json!({ "report": approx.report, "sup_error_fresh_sample": err });
            (approx.network, extra)
        }
    };
    if let Some(path) = out {
        net.save(&path).with_context(|| format!("writing {}", path.display()))?;
    }
    print_json(&serde_json::json!({ "network": net_summary(&net), "details": extra }))
}

fn load_points(path: &PathBuf) -> Result<Vec<Vec<f64>>> {
    let pts = read_points(path).with_context(|| format!("reading {}", path.display()))?;
    if pts.is_empty() {
        bail!("{} contains no points", path.display());
    }
    Ok(pts)
}

fn discrepancy(p: PathBuf, q: PathBuf, kind: &str, sigma: Option<f64>) -> Result<()> {
    let (x, z) = (load_points(&p)?, load_points(&q)?);
    let kernel = || -> Result<KernelSpec> {
        let s = match sigma {
            Some(s) => s,
            None => median_bandwidth(&[x.clone(), z.clone()].concat())?,
        };
        Ok(KernelSpec::gaussian(s)?)
    };
    let (value, sigma_used) = match kind {
        "w1" => (
            wasserstein1(
                &EmpiricalMeasure::uniform(x.clone())?,
                &EmpiricalMeasure::uniform(z.clone())?,
            )?,
            None,
        ),
        "mmd2" => {
            let k = kernel()?;
            (
                mmd2_plugin(
                    &EmpiricalMeasure::uniform(x.clone())?,
                    &EmpiricalMeasure::uniform(z.clone())?,
                    &k,
                )?,
                Some(k.sigma),
            )
        }
        "mmd2-unbiased" => {
            let k = kernel()?;
            (mmd2_unbiased_two_sample(&x, &z, &k)?, Some(k.sigma))
        }
        other => bail!("unknown discrepancy {other:?} (w1 | mmd2 | mmd2-unbiased)"),
    };
    print_json(
        &serde_json::json!({ "kind": kind, "value": value, "sigma": sigma_used, "n_p": x.len(), "n_q": z.len() }),
    )
}

/// Training file: the WAE fields at top level, an optional explicit
/// architecture, and the width floor used when sizing automatically.
#[derive(Deserialize)]
struct TrainFile {
    #[serde(flatten)]
    wae: WaeConfig,
    architecture: Option<ArchitecturePlan>,
    #[serde(default = "default_min_width")]
    min_width: usize,
}

fn default_min_width() -> usize {
    16
}

fn train_cmd(config: PathBuf, data: PathBuf, out_dir: PathBuf) -> Result<()> {
    let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
    let file: TrainFile = toml::from_str(&text).with_context(|| format!("parsing {}", config.display()))?;
    let cfg = file.wae;
    cfg.validate()?;
    let points = load_points(&data)?;
    let plan = match file.architecture {
        Some(plan) => plan,
        None => size_architecture(
            points.len(),
            cfg.latent_dim as f64,
            1.0,
            1.0,
            cfg.latent_dim,
            cfg.data_dim,
            1.0,
        )?,
    };
    let enc_dims = layer_dims(cfg.data_dim, cfg.latent_dim, plan.l_e, plan.w_e, file.min_width);
    let dec_dims = layer_dims(cfg.latent_dim, cfg.data_dim, plan.l_g, plan.w_g, file.min_width);
    let trained = train(&points, &dec_dims, &enc_dims, &cfg)?;
    fs::create_dir_all(&out_dir)?;
    trained.decoder.save(out_dir.join("decoder.json"))?;
    trained.encoder.save(out_dir.join("encoder.json"))?;
    trained.decoder.to_relu_network()?.save(out_dir.join("decoder.relu"))?;
    trained.encoder.to_relu_network()?.save(out_dir.join("encoder.relu"))?;
    let mut log = String::from("step,recon,penalty,total\n");
    for r in &trained.log {
        log.push_str(&format!("{},{:?},{:?},{:?}\n", r.step, r.recon, r.penalty, r.total));
    }
    fs::write(out_dir.join("loss.csv"), log)?;
    let last = trained.log.last();
    print_json(&serde_json::json!({
        "architecture": plan,
        "encoder_dims": enc_dims,
        "decoder_dims": dec_dims,
        "steps": trained.log.len(),
        "final": last,
    }))
}

fn summary(results: PathBuf, diss: &str, json: bool) -> Result<()> {
    let rows = read_results(&results)?;
    if rows.is_empty() {
        bail!("{} has no rows", results.display());
    }
    let kind: DissKind = diss.parse()?;
    let models = summarize(&rows, kind);
    let check = rate_phenomenon(&models).ok();
    if json {
        return print_json(&serde_json::json!({ "models": models, "phenomenon": check }));
    }
    let mut text = String::new();
    for m in &models {
        writeln!(text, "{} (ell={}, d={})", m.model_id, m.ell, m.d)?;
        writeln!(
            text,
            "  {:>6} {:>4} {:>20} {:>20} {:>20}",
            "n", "runs", "gen_w1", "recon_test", "encode_diss"
        )?;
        for c in &m.cells {
            writeln!(
                text,
                "  {:>6} {:>4} {:>11.5} ± {:<7.5} {:>11.5} ± {:<7.5} {:>11.6} ± {:<7.6}",
                c.n,
                c.runs,
                c.gen_w1.mean,
                c.gen_w1.std,
                c.recon_test.mean,
                c.recon_test.std,
                c.encode_diss.mean,
                c.encode_diss.std
            )?;
        }
        let fmt = |f: &Option<waelab::experiments::LoglogFit>| match f {
            Some(f) => format!("{:.3} ± {:.3}", f.slope, f.stderr),
            None => "n/a".into(),
        };
        writeln!(
            text,
            "  slopes: gen_w1 {}, recon {}; predicted exponent -{:.3}",
            fmt(&m.gen_w1_fit),
            fmt(&m.recon_fit),
            m.predicted_exponent
        )?;
    }
    if let Some(c) = check {
        writeln!(
            text,
            "ordering {} vs {}: inversions gen {:?} recon {:?}, below at largest n: {}, low slope {:?} -> {}",
            c.low_model,
            c.high_model,
            c.gen_w1_inversions,
            c.recon_inversions,
            c.ordering,
            c.low_slope,
            if c.passes { "holds" } else { "does not hold" }
        )?;
    }
    emit(&text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Construct { kind, out } => construct(kind, out),
        Command::Dimension { points, eps } => {
            let pts = load_points(&points)?;
            let grid = if eps.is_empty() { default_eps_grid() } else { eps };
            print_json(&minkowski_dim_estimate(&pts, &grid)?)
        }
        Command::Discrepancy { p, q, kind, sigma } => discrepancy(p, q, &kind, sigma),
        Command::Gen {
            model,
            ell,
            d,
            n,
            seed,
            latent,
            noise,
            out,
            latents_out,
            test_fraction,
            test_out,
        } => {
            let nu: LatentDistribution = latent.parse()?;
            let truth = GroundTruthModel::new(model.parse()?, ell, d)?
                .with_latent(nu)
                .with_noise(noise)?;
            let (x, z) = truth.generate_with_latents(n, seed);
            if let Some(path) = latents_out {
                write_points(path, &z)?;
            }
            match (test_fraction, test_out) {
                (Some(frac), Some(test_path)) => {
                    let (tr, te) = split(&x, 1.0 - frac, seed)?;
                    write_points(&out, &tr)?;
                    write_points(test_path, &te)?;
                }
                _ => write_points(&out, &x)?,
            }
            print_json(
                &serde_json::json!({ "model": truth.id(), "n": n, "alpha_g": truth.alpha_g(), "alpha_e": truth.alpha_e() }),
            )
        }
        Command::Train { config, data, out_dir } => train_cmd(config, data, out_dir),
        Command::Rate { config, out } => {
            let cfg = match config {
                Some(path) => SweepConfig::from_toml(&fs::read_to_string(&path)?)?,
                None => SweepConfig::default(),
            };
            let outcome = run_rate_experiment(&cfg, &out)?;
            for (key, err) in &outcome.failures {
                eprintln!("failed: {} n={} seed={}: {err}", key.model_id, key.n, key.seed);
            }
            print_json(&serde_json::json!({
                "written": outcome.written,
                "skipped": outcome.skipped,
                "failed": outcome.failures.len(),
            }))
        }
        Command::Summary { results, diss, json } => summary(results, &diss, json),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
