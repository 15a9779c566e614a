//! `nyfr`: simulate NYFR acquisitions, certify sensing matrices, recover
//! spectra and run the experiment sweeps.
//!
//! Exit codes: 0 success, 1 a `--check` invariant failed, 2 usage or
//! configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use nyfr_core::coherence::{
    block_coherence, gram_dense_normalized, gram_report, gram_report_dense, rip_certificate,
    GramModel,
};
use nyfr_core::config::{RunConfig, EXAMPLE_TOML};
use nyfr_core::eval::{
    acquire, experiment_checks, run_experiment, score, Acquisition, ExperimentName, ExperimentSpec,
};
use nyfr_core::io::{csv_string, encode_matrix, encode_signal, read_signal, write_file};
use nyfr_core::nyfr::LoPattern;
use nyfr_core::sensing::{
    BlockPartition, SensingOperator, SpectrumVector, DEFAULT_DENSE_CAP_BYTES,
};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "nyfr",
    version,
    about = "Nyquist folding receiver simulation and recovery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Output directory (created if absent).
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Replace existing files.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a scenario and write per-channel measurements plus a manifest.
    Simulate {
        /// Run configuration (TOML).
        config: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Materialize the normalized Gram matrix and report its structure.
    Gram {
        config: PathBuf,
        /// Dense memory cap in MiB.
        #[arg(long, default_value_t = DEFAULT_DENSE_CAP_BYTES >> 20)]
        cap_mib: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Closed-form Gram report, lag profile, RIP and BRIP certificates.
    Certify {
        config: PathBuf,
        /// Uniform block length for the BRIP report (default: one block per zone).
        #[arg(long)]
        block_len: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Recover the spectrum from a `simulate` manifest.
    Recover {
        /// Path to `manifest.json`.
        manifest: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Run a named experiment sweep.
    Experiment {
        /// pulse-length | snr-sweep | sparsity-sweep | alias-sweep |
        /// multi-signal-demo | bandwidth-sweep | drift-sweep
        name: String,
        /// Full experiment spec (TOML) replacing the defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Exit 1 when an attached invariant fails.
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Print the annotated run-configuration example.
    Schema,
}

/// Written next to the measurement files; enough to redo recovery.
#[derive(Serialize, Deserialize)]
struct Manifest {
    config: RunConfig,
    sigma_w: f64,
    channels: Vec<ChannelFile>,
}

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    file: String,
    lo: LoPattern,
    samples: usize,
}

/// Process exit status of a finished command.
enum Status {
    Ok,
    CheckFailed,
}

struct Writer<'a> {
    output: &'a Output,
}

impl Writer<'_> {
    fn put(&self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.output.out.join(name);
        write_file(&path, bytes, self.output.overwrite)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }
}

fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("config {}", path.display()))
}

fn simulate(config: &Path, seed: Option<u64>, output: &Output) -> anyhow::Result<Status> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.scenario.seed = s;
    }
    let acq = acquire(&cfg.scenario)?;
    let n = cfg.scenario.grid.n;
    let w = Writer { output };
    let mut channels = Vec::new();
    for (p, lo) in cfg.scenario.channels.iter().enumerate() {
        let file = format!("channel_{p}.bin");
        let y = &acq.y[p * n..(p + 1) * n];
        w.put(&file, &encode_signal(y, cfg.scenario.grid.f_s_hz, 0.0))?;
        channels.push(ChannelFile {
            file,
            lo: *lo,
            samples: n,
        });
    }
    w.json(
        "manifest.json",
        &Manifest {
            config: cfg,
            sigma_w: acq.sigma_w,
            channels,
        },
    )?;
    Ok(Status::Ok)
}

fn operator(cfg: &RunConfig) -> anyhow::Result<SensingOperator> {
    cfg.validate()?;
    let nominal: Vec<LoPattern> = cfg.scenario.channels.iter().map(|l| l.nominal()).collect();
    Ok(SensingOperator::assemble_multi(
        &cfg.scenario.grid,
        &nominal,
    )?)
}

fn gram(config: &Path, cap_mib: u64, output: &Output) -> anyhow::Result<Status> {
    let cfg = load_config(config)?;
    let op = operator(&cfg)?;
    let g = gram_dense_normalized(&op, cap_mib << 20).map_err(|e| {
        anyhow::anyhow!("{e}; `nyfr certify` reports the same structure from the closed form")
    })?;
    let report = gram_report_dense(&g, op.channels(), cfg.scenario.grid.n);
    let w = Writer { output };
    w.put("gram.bin", &encode_matrix(&g))?;
    w.json("gram_report.json", &report)?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct Certificate {
    rip: nyfr_core::coherence::RipCertificate,
    rip_order: usize,
    offdiag_max: f64,
    nu: f64,
    d_mu: f64,
    bric_2: f64,
    brip_order: usize,
}

fn certify(config: &Path, block_len: Option<usize>, output: &Output) -> anyhow::Result<Status> {
    let cfg = load_config(config)?;
    let op = operator(&cfg)?;
    let model = GramModel::from_operator(&op)?;
    let report = gram_report(&model);
    let grid = cfg.scenario.grid;
    let partition = match block_len {
        Some(d) => BlockPartition::uniform(grid.nyquist_len(), d)?,
        None => BlockPartition::zones(&grid),
    };
    let blocks = block_coherence(&model, &partition)?;
    let rows: Vec<Vec<String>> = report
        .offdiag_profile
        .iter()
        .map(|s| {
            vec![
                s.lag.to_string(),
                format!("{:.12e}", s.max_abs),
                format!("{:.12e}", s.mean_abs),
            ]
        })
        .collect();
    let cert = Certificate {
        rip: rip_certificate(report.offdiag_max.min(1.0), report.rip_order)?,
        rip_order: report.rip_order,
        offdiag_max: report.offdiag_max,
        nu: blocks.nu,
        d_mu: blocks.d_mu(),
        bric_2: blocks.bric(2),
        brip_order: blocks.brip_order(),
    };
    let w = Writer { output };
    w.json("gram_report.json", &report)?;
    w.put(
        "lag_profile.csv",
        csv_string(&["lag", "max_abs", "mean_abs"], &rows)?.as_bytes(),
    )?;
    w.json("block_coherence.json", &blocks)?;
    w.json("certificate.json", &cert)?;
    println!(
        "offdiag_max {:.6}  rip_order {}  nu {:.3e}  d*mu {:.6}  bric(2) {:.6}",
        cert.offdiag_max, cert.rip_order, cert.nu, cert.d_mu, cert.bric_2
    );
    Ok(Status::Ok)
}

fn recover_cmd(manifest: &Path, output: &Output) -> anyhow::Result<Status> {
    let text = std::fs::read_to_string(manifest)
        .with_context(|| format!("manifest {}", manifest.display()))?;
    let m: Manifest = serde_json::from_str(&text).context("manifest")?;
    m.config.validate()?;
    let scenario = &m.config.scenario;
    if m.channels.len() != scenario.channels.len() {
        bail!(
            "manifest lists {} files for {} channels",
            m.channels.len(),
            scenario.channels.len()
        );
    }
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let mut y = Vec::new();
    for c in &m.channels {
        let (samples, _, _) = read_signal(&dir.join(&c.file)).with_context(|| c.file.clone())?;
        if samples.len() != scenario.grid.n {
            bail!(
                "{}: {} samples, grid needs {}",
                c.file,
                samples.len(),
                scenario.grid.n
            );
        }
        y.extend(samples);
    }
    let clean = scenario.clean_channels()?;
    let acq = Acquisition {
        y,
        sigma_w: m.sigma_w,
        truth: SpectrumVector::from_nyquist_signal(&clean[0], &scenario.grid)?,
        op: operator(&m.config)?,
    };
    let (rec, trial) = score(&acq, scenario, &m.config.recovery)?;
    let freqs = rec.spectrum.frequencies_hz();
    let rows: Vec<Vec<String>> = rec
        .spectrum
        .coefficients
        .iter()
        .zip(&acq.truth.coefficients)
        .zip(&freqs)
        .map(|((x, t), f)| {
            vec![
                format!("{f}"),
                format!("{:.12e}", x.norm()),
                format!("{:.12e}", t.norm()),
            ]
        })
        .collect();
    let w = Writer { output };
    w.json("recovery.json", &rec)?;
    w.json("trial.json", &trial)?;
    w.put(
        "spectrum.csv",
        csv_string(&["frequency_hz", "recovered_abs", "true_abs"], &rows)?.as_bytes(),
    )?;
    println!(
        "pcc {:.6}  hit rate {:.3}  atoms {}",
        trial.pcc,
        trial.support_hit_rate,
        rec.atoms.len()
    );
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct ExperimentSummary<'a> {
    spec: &'a ExperimentSpec,
    checks: &'a [nyfr_core::eval::Check],
    passed: bool,
}

fn experiment(
    name: &str,
    spec_path: Option<&Path>,
    trials: Option<usize>,
    seed: Option<u64>,
    check: bool,
    output: &Output,
) -> anyhow::Result<Status> {
    let Some(parsed) = ExperimentName::parse(name) else {
        let known: Vec<&str> = ExperimentName::ALL.iter().map(|n| n.as_str()).collect();
        bail!("unknown experiment {name:?} (known: {})", known.join(", "));
    };
    let mut spec = match spec_path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("spec {}", p.display()))?;
            let spec: ExperimentSpec =
                toml::from_str(&text).with_context(|| format!("spec {}", p.display()))?;
            if spec.name != parsed {
                bail!("spec file describes {}, not {name}", spec.name.as_str());
            }
            spec
        }
        None => ExperimentSpec::default_for(parsed),
    };
    if let Some(t) = trials {
        spec.trials = t;
    }
    if let Some(s) = seed {
        spec.base_seed = s;
    }
    let table = run_experiment(&spec)?;
    let checks = experiment_checks(&table);
    let passed = checks.iter().all(|c| c.passed);
    let w = Writer { output };
    w.put(
        &format!("{}.csv", parsed.as_str()),
        table.to_csv()?.as_bytes(),
    )?;
    w.json(
        &format!("{}.json", parsed.as_str()),
        &ExperimentSummary {
            spec: &spec,
            checks: &checks,
            passed,
        },
    )?;
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    Ok(if check && !passed {
        Status::CheckFailed
    } else {
        Status::Ok
    })
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            output,
        } => simulate(&config, seed, &output),
        Command::Gram {
            config,
            cap_mib,
            output,
        } => gram(&config, cap_mib, &output),
        Command::Certify {
            config,
            block_len,
            output,
        } => certify(&config, block_len, &output),
        Command::Recover { manifest, output } => recover_cmd(&manifest, &output),
        Command::Experiment {
            name,
            spec,
            trials,
            seed,
            check,
            output,
        } => experiment(&name, spec.as_deref(), trials, seed, check, &output),
        Command::Schema => {
            print!("{EXAMPLE_TOML}");
            Ok(Status::Ok)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
