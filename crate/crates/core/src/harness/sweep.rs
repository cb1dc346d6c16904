use super::config::ExperimentConfig;
use super::experiments::run_experiment;
use super::{HarnessError, TrialSummary};

/// Grid of `(n, ℓ, c, σ)`; `None` entries keep the base configuration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepGrid {
    pub n: Vec<usize>,
    pub ell: Vec<Option<usize>>,
    pub c: Vec<usize>,
    pub sigma: Vec<Option<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    pub ell: Option<usize>,
    pub c: usize,
    pub sigma: Option<f64>,
}

impl SweepGrid {
    pub fn points(&self, base: &ExperimentConfig) -> Vec<SweepPoint> {
        let ns = if self.n.is_empty() {
            vec![base.n()]
        } else {
            self.n.clone()
        };
        let ells = if self.ell.is_empty() {
            vec![base.ell]
        } else {
            self.ell.clone()
        };
        let cs = if self.c.is_empty() {
            vec![base.c()]
        } else {
            self.c.clone()
        };
        let sigmas = if self.sigma.is_empty() {
            vec![base.sigma]
        } else {
            self.sigma.clone()
        };
        let mut out = Vec::new();
        for &n in &ns {
            for &ell in &ells {
                for &c in &cs {
                    for &sigma in &sigmas {
                        out.push(SweepPoint { n, ell, c, sigma });
                    }
                }
            }
        }
        out
    }
}

pub struct SweepResult {
    pub points: Vec<(SweepPoint, Result<TrialSummary, String>)>,
}

impl SweepResult {
    /// One row per grid point; metric columns follow the first successful
    /// point's metric names.
    pub fn to_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let names: Vec<&str> = self
            .points
            .iter()
            .find_map(|(_, r)| r.as_ref().ok())
            .map(|s| s.metrics.iter().map(|m| m.0).collect())
            .unwrap_or_default();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "n",
            "ell",
            "c",
            "sigma",
            "trials",
            "successes",
            "rate",
            "ci_low",
            "ci_high",
        ];
        header.extend(&names);
        header.push("error");
        w.write_record(&header)?;
        for (p, r) in &self.points {
            let mut row = vec![
                p.n.to_string(),
                p.ell.map(|x| x.to_string()).unwrap_or_default(),
                p.c.to_string(),
                p.sigma.map(|x| x.to_string()).unwrap_or_default(),
            ];
            match r {
                Ok(s) => {
                    let (lo, hi) = s.ci();
                    row.extend([s.trials, s.successes].map(|x| x.to_string()));
                    row.extend([s.rate(), lo, hi].map(|x| x.to_string()));
                    row.extend(
                        names
                            .iter()
                            .map(|n| s.metric(n).map(|x| x.to_string()).unwrap_or_default()),
                    );
                    row.push(String::new());
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), 5 + names.len()));
                    row.push(e.clone());
                }
            }
            w.write_record(&row)?;
        }
        w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
    }
}

/// Runs the base experiment at every grid point. A failing point is
/// recorded and the sweep continues.
pub fn sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<SweepResult, HarnessError> {
    let points = grid.points(base);
    if points.is_empty() {
        return Err(HarnessError::Config("empty sweep grid".into()));
    }
    Ok(SweepResult {
        points: points
            .into_iter()
            .map(|p| {
                let mut cfg = base.clone();
                cfg.n = Some(p.n);
                cfg.ell = p.ell;
                cfg.c = Some(p.c);
                cfg.sigma = p.sigma;
                (p, run_experiment(&cfg).map_err(|e| e.to_string()))
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentKind;

    fn base() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ExperimentKind::NaturalAttack);
        c.trials = Some(3);
        c.ell = Some(120);
        c
    }

    #[test]
    fn one_point_grid_matches_run() {
        let grid = SweepGrid {
            n: vec![20],
            ..Default::default()
        };
        let r = sweep(&base(), &grid).unwrap();
        let mut cfg = base();
        cfg.n = Some(20);
        cfg.c = Some(cfg.c());
        let direct = run_experiment(&cfg).unwrap();
        let s = r.points[0].1.as_ref().unwrap();
        assert_eq!(s.to_csv().unwrap(), direct.to_csv().unwrap());
    }

    #[test]
    fn failing_points_recorded() {
        // c below 4 is rejected by the attack.
        let grid = SweepGrid {
            n: vec![20],
            c: vec![20, 2],
            ..Default::default()
        };
        let r = sweep(&base(), &grid).unwrap();
        assert!(r.points[0].1.is_ok());
        assert!(r.points[1].1.is_err());
        let a = r.to_csv().unwrap();
        assert_eq!(a, sweep(&base(), &grid).unwrap().to_csv().unwrap());
    }
}
