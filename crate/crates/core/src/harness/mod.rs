//! Seeded trial batches, statistics and CSV output.
//!
//! Every artifact is a pure function of the configuration and master seed:
//! trial `i` runs under `trial_seed(seed, i)` and rows are written in trial
//! order whatever the worker count.

pub mod config;
pub mod experiments;
pub mod stats;
pub mod sweep;

use std::io;
use std::path::Path;
use std::time::Duration;

use thiserror::Error;

pub use config::{ExperimentConfig, ExperimentKind, OUT_DIR_ENV};
pub use experiments::{run_experiment, schema};
pub use stats::{hoeffding, loglog_slope, median, wilson};
pub use sweep::{sweep, SweepGrid, SweepPoint, SweepResult};

use crate::game::GameError;
use crate::key_agreement::KaError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Ka(#[from] KaError),
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Game(GameError::InvalidParameters(_)) => 2,
            HarnessError::Ka(KaError::Config(_)) => 2,
            _ => 1,
        }
    }
}

/// Result of a trial batch.
#[derive(Clone, Debug)]
pub struct TrialSummary {
    pub kind: ExperimentKind,
    pub trials: usize,
    pub successes: usize,
    /// Trials that ended in an error (recorded in their row).
    pub errored: usize,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Kind-specific aggregates, in a fixed order per kind.
    pub metrics: Vec<(&'static str, f64)>,
    pub wall_clock: Duration,
}

impl TrialSummary {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    pub fn ci(&self) -> (f64, f64) {
        wilson(self.successes, self.trials)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| *k == name).map(|m| m.1)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    /// Human-readable summary (includes wall-clock, so not part of the CSV).
    pub fn render(&self) -> String {
        let (lo, hi) = self.ci();
        let mut s = format!(
            "{}: {}/{} = {:.4} (95% CI {:.4}..{:.4}), {} errored, {:.2?}\n",
            self.kind,
            self.successes,
            self.trials,
            self.rate(),
            lo,
            hi,
            self.errored,
            self.wall_clock
        );
        for (k, v) in &self.metrics {
            s.push_str(&format!("  {k} = {v:.6}\n"));
        }
        s
    }
}

/// Threshold checks behind `--assert`. `Err` carries the failed checks.
pub fn assert_thresholds(cfg: &ExperimentConfig, s: &TrialSummary) -> Result<(), String> {
    let m = |name: &str| s.metric(name).unwrap_or(f64::NAN);
    let checks: Vec<(String, bool)> = match cfg.kind {
        ExperimentKind::NaturalAttack | ExperimentKind::BalancedAttack
            if cfg.mechanism.is_oracle() =>
        {
            vec![("oracle failure rate == 0".into(), s.successes == 0)]
        }
        ExperimentKind::NaturalAttack => vec![
            ("failure rate >= 0.75".into(), s.rate() >= 0.75),
            ("wilson lower bound >= 0.70".into(), s.ci().0 >= 0.70),
        ],
        ExperimentKind::BalancedAttack => vec![("failure rate >= 0.75".into(), s.rate() >= 0.75)],
        ExperimentKind::DpBaseline => vec![
            (
                "gaussian failure rate <= 0.25".into(),
                m("gaussian_failure_rate") <= 0.25,
            ),
            (
                "empirical failure rate >= 0.60".into(),
                m("empirical_failure_rate") >= 0.60,
            ),
        ],
        ExperimentKind::ApproxAgreement => vec![
            ("agreement rate >= 0.90".into(), m("agreement_rate") >= 0.90),
            (
                "best eavesdropper hit rate <= 0.30".into(),
                m("best_hit_rate") <= 0.30,
            ),
        ],
        ExperimentKind::WeakKa => vec![("bit agreement rate > 0.5".into(), s.rate() > 0.5)],
        ExperimentKind::GlDecode => vec![("recovery rate >= 0.99".into(), s.rate() >= 0.99)],
        ExperimentKind::IbeSelftest => vec![("all checks pass".into(), s.successes == s.trials)],
    };
    let failed: Vec<String> = checks.into_iter().filter(|c| !c.1).map(|c| c.0).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(failed.join("; "))
    }
}

/// CSV for a fingerprinting calibration table.
pub fn calibration_csv(
    report: &crate::fingerprint::CalibrationReport,
) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "n",
        "c",
        "rounds",
        "kappa",
        "tau",
        "final_failure_rate",
        "containment_rate",
        "mean_coverage",
        "mean_false_accusations",
        "median_rounds_to_failure",
        "recommended",
    ])?;
    for r in &report.rows {
        w.write_record([
            report.n.to_string(),
            report.c.to_string(),
            report.rounds.to_string(),
            r.kappa.to_string(),
            r.tau.to_string(),
            r.final_failure_rate.to_string(),
            r.containment_rate.to_string(),
            r.mean_coverage.to_string(),
            r.mean_false_accusations.to_string(),
            r.median_rounds_to_failure
                .map(|x| x.to_string())
                .unwrap_or_default(),
            (r.kappa == report.recommended_kappa).to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
}
