use std::path::PathBuf;
use std::process::ExitCode;

use ada_arena::fingerprint::{calibrate, AttackConfig};
use ada_arena::harness::{
    assert_thresholds, calibration_csv, run_experiment, sweep, ExperimentConfig, ExperimentKind,
    HarnessError, SweepGrid,
};
use ada_arena::ibe::SchemeTag;
use ada_arena::mechanisms::MechanismSpec;
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Adaptive data analysis experiments: attacks, baselines, IBE checks and
/// key agreement. CSV goes to --out, else $ADA_ARENA_OUT/<kind>.csv, else
/// out/<kind>.csv.
#[derive(Parser, Debug)]
#[command(name = "ada-arena", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fingerprinting attack against a mechanism.
    Attack {
        #[arg(value_enum)]
        kind: AttackKind,
        #[command(flatten)]
        common: Common,
    },
    /// Gaussian mechanism vs empirical mean under the same attack budget.
    DpBaseline(Common),
    /// Two-party approximate agreement from the balanced attack.
    ApproxAgreement(Common),
    /// Weak key agreement by bucketing.
    Ka(Common),
    /// Goldreich-Levin decoding against a noisy parity oracle.
    Gl(Common),
    /// IBE completeness and key-length checks for both schemes.
    IbeSelftest(Common),
    /// Threshold calibration for the fingerprinting attack.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated multipliers to try.
        #[arg(long, value_delimiter = ',', default_value = "0.8,1.0,1.2")]
        kappas: Vec<f64>,
    },
    /// Runs an experiment over a grid of parameters.
    Sweep {
        #[arg(long, default_value = "natural_attack")]
        kind: String,
        #[arg(long = "ns", value_delimiter = ',')]
        ns: Vec<usize>,
        #[arg(long = "ells", value_delimiter = ',')]
        ells: Vec<usize>,
        #[arg(long = "cs", value_delimiter = ',')]
        cs: Vec<usize>,
        #[arg(long = "sigmas", value_delimiter = ',')]
        sigmas: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the experiment described by a config file.
    Run(Common),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AttackKind {
    Natural,
    Balanced,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Attack rounds.
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    lambda: Option<usize>,
    #[arg(long)]
    scheme: Option<SchemeTag>,
    #[arg(long = "mech")]
    mech: Option<MechanismSpec>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    oracle_error: Option<f64>,
    #[arg(long)]
    mb: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Permit mechanisms that see the distribution.
    #[arg(long)]
    allow_oracle: bool,
    /// Exit with status 3 if the experiment misses its thresholds.
    #[arg(long = "assert")]
    assert: bool,
}

impl Common {
    fn build(&self, kind: Option<ExperimentKind>) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                let mut cfg = ExperimentConfig::parse(&text)?;
                if let Some(k) = kind {
                    cfg.kind = k;
                }
                cfg
            }
            None => ExperimentConfig::new(
                kind.ok_or_else(|| HarnessError::Config("`run` needs --config".into()))?,
            ),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = Some(v); } )* };
        }
        over!(n, ell, c, sigma, kappa, trials, alpha, beta, m, workers);
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.scheme {
            cfg.scheme = v;
        }
        if let Some(v) = self.mech {
            cfg.mechanism = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = self.oracle_error {
            cfg.oracle_error = v;
        }
        if let Some(v) = self.mb {
            cfg.mb = v;
        }
        cfg.allow_oracle |= self.allow_oracle;
        Ok(cfg)
    }
}

fn experiment(common: &Common, kind: Option<ExperimentKind>) -> anyhow::Result<ExitCode> {
    let cfg = common.build(kind)?;
    let summary = run_experiment(&cfg)?;
    let path = cfg.output_path();
    summary.write_csv(&path)?;
    print!("{}", summary.render());
    println!("wrote {}", path.display());
    if common.assert {
        if let Err(failed) = assert_thresholds(&cfg, &summary) {
            eprintln!("threshold check failed: {failed}");
            return Ok(ExitCode::from(3));
        }
        println!("threshold checks passed");
    }
    Ok(ExitCode::SUCCESS)
}

fn write(path: &PathBuf, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Attack { kind, common } => experiment(
            &common,
            Some(match kind {
                AttackKind::Natural => ExperimentKind::NaturalAttack,
                AttackKind::Balanced => ExperimentKind::BalancedAttack,
            }),
        ),
        Command::DpBaseline(c) => experiment(&c, Some(ExperimentKind::DpBaseline)),
        Command::ApproxAgreement(c) => experiment(&c, Some(ExperimentKind::ApproxAgreement)),
        Command::Ka(c) => experiment(&c, Some(ExperimentKind::WeakKa)),
        Command::Gl(c) => experiment(&c, Some(ExperimentKind::GlDecode)),
        Command::IbeSelftest(c) => experiment(&c, Some(ExperimentKind::IbeSelftest)),
        Command::Run(c) => experiment(&c, None),
        Command::Calibrate { common, kappas } => {
            let mut cfg = common.build(Some(ExperimentKind::NaturalAttack))?;
            cfg.trials = Some(common.trials.unwrap_or(40));
            cfg.validate()?;
            let mut base = AttackConfig::with_c(cfg.c());
            base.rounds = cfg.ell();
            let report = calibrate(cfg.n(), &base, &kappas, cfg.trials(), cfg.seed)
                .map_err(HarnessError::from)?;
            let path = common
                .out
                .clone()
                .unwrap_or_else(|| cfg.output_path().with_file_name("calibration.csv"));
            write(&path, &calibration_csv(&report)?)?;
            for r in &report.rows {
                println!(
                    "kappa {:.3}: final failure {:.3}, containment {:.3}, coverage {:.3}",
                    r.kappa, r.final_failure_rate, r.containment_rate, r.mean_coverage
                );
            }
            println!(
                "recommended kappa {} (tau {:.5}); wrote {}",
                report.recommended_kappa,
                report.recommended_tau,
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            kind,
            ns,
            ells,
            cs,
            sigmas,
            common,
        } => {
            let kind: ExperimentKind = kind.parse()?;
            let cfg = common.build(Some(kind))?;
            let grid = SweepGrid {
                n: ns,
                ell: ells.into_iter().map(Some).collect(),
                c: cs,
                sigma: sigmas.into_iter().map(Some).collect(),
            };
            let result = sweep(&cfg, &grid)?;
            let path = common.out.clone().unwrap_or_else(|| {
                cfg.output_path()
                    .with_file_name(format!("sweep-{kind}.csv"))
            });
            write(&path, &result.to_csv()?)?;
            for (p, r) in &result.points {
                match r {
                    Ok(s) => println!(
                        "n={} ell={:?} c={} sigma={:?}: rate {:.4}",
                        p.n,
                        p.ell,
                        p.c,
                        p.sigma,
                        s.rate()
                    ),
                    Err(e) => println!(
                        "n={} ell={:?} c={} sigma={:?}: error {e}",
                        p.n, p.ell, p.c, p.sigma
                    ),
                }
            }
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<HarnessError>()
                .map_or(1, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
