//! Command-line front end: calibrate, test, power, simulate, envelope.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rankpred::alfd::AlfdCalibration;
use rankpred::dgp::Sample;
use rankpred::harness::config::load_json;
use rankpred::harness::{svg, CalibrateConfig, EnvelopeConfig, ExperimentConfig, SimulateConfig};
use rankpred::reference::ReferenceKind;
use rankpred::testkit::{emw_test, wz_test, Reference, TestOptions, DEFAULT_K};
use rankpred::{Error, Result};

#[derive(Parser)]
#[command(name = "rankpred", version, about = "Rank-based tests for predictive regressions with persistent regressors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the nonstandard test and write a certified calibration file.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test b = 0 against b > 0 on a `t,y,x` CSV and print the decision as JSON.
    Test {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        cal: PathBuf,
        #[arg(long = "ref", default_value = "gaussian")]
        reference: ReferenceKind,
        #[arg(long, default_value_t = DEFAULT_K, allow_negative_numbers = true)]
        k: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Run the Gaussian quasi-likelihood baseline instead of the rank test.
        #[arg(long)]
        emw: bool,
    },
    /// Run a size/power experiment and write power.csv and power.svg.
    Power {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use T = 2000 and 10,000 replications.
        #[arg(long)]
        full: bool,
    },
    /// Simulate one sample and write it as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Known-c power envelope in the limit experiment, as CSV on stdout.
    Envelope {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 3 } else { 2 })
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Calibrate { config, out } => {
            let cfg: CalibrateConfig = load_json(&config)?;
            let cal = cfg.run()?;
            let c = &cal.certificate;
            log::info!(
                "max null rejection {:.4}, WAP bound {:.4}, WAP {:.4}",
                c.max_null_rej,
                c.wap_bound,
                c.wap_test
            );
            cal.save(&out)
        }
        Command::Test {
            data,
            cal,
            reference,
            k,
            alpha,
            emw,
        } => {
            let f = std::fs::File::open(&data).map_err(|e| Error::from(e).context(format!("reading {}", data.display())))?;
            let sample = Sample::read_csv(f).map_err(|e| e.context(data.display().to_string()))?;
            let cal = AlfdCalibration::load(&cal)?;
            let opts = TestOptions {
                alpha,
                k,
                ..TestOptions::default()
            };
            let decision = if emw {
                emw_test(&sample, &cal, &opts)?
            } else {
                wz_test(&sample, &Reference::from_kind(reference), &cal, &opts)?
            };
            println!("{}", serde_json::to_string_pretty(&decision)?);
            Ok(())
        }
        Command::Power { config, out, full } => {
            let mut cfg: ExperimentConfig = load_json(&config)?;
            if full {
                cfg.t = 2000;
                cfg.n_reps = 10_000;
            }
            let paths = cfg
                .calibrations
                .clone()
                .ok_or_else(|| Error::Config("power config needs a `calibrations` entry".into()))?;
            let cal_wz = AlfdCalibration::load(resolve(&config, &paths.wz))?;
            let cal_emw = AlfdCalibration::load(resolve(&config, &paths.emw))?;
            let table = rankpred::harness::run_power_experiment(&cfg, &cal_wz, &cal_emw)?;
            std::fs::create_dir_all(&out)?;
            let f = std::fs::File::create(out.join("power.csv"))?;
            table.write_csv(std::io::BufWriter::new(f), &cfg.hash(), cfg.seed)?;
            let title = format!("T = {}, {} replications", cfg.t, cfg.n_reps);
            let chart = if cfg.b_list.is_some() {
                svg::power_vs_b(&table, &title)
            } else {
                svg::power_vs_c(&table, &title)
            };
            std::fs::write(out.join("power.svg"), chart)?;
            Ok(())
        }
        Command::Simulate { config, out } => {
            let cfg: SimulateConfig = load_json(&config)?;
            let sample = cfg.run()?;
            sample.write_csv(std::io::BufWriter::new(std::fs::File::create(out)?))
        }
        Command::Envelope { config } => {
            let cfg: EnvelopeConfig = load_json(&config)?;
            println!("b,power,se");
            for p in cfg.run()? {
                println!("{:?},{:?},{:?}", p.b, p.power, p.se);
            }
            Ok(())
        }
    }
}
