use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::HarnessError;
use crate::ibe::SchemeTag;
use crate::mechanisms::MechanismSpec;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ADA_ARENA_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    NaturalAttack,
    BalancedAttack,
    DpBaseline,
    ApproxAgreement,
    WeakKa,
    GlDecode,
    IbeSelftest,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::NaturalAttack,
        ExperimentKind::BalancedAttack,
        ExperimentKind::DpBaseline,
        ExperimentKind::ApproxAgreement,
        ExperimentKind::WeakKa,
        ExperimentKind::GlDecode,
        ExperimentKind::IbeSelftest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::NaturalAttack => "natural_attack",
            ExperimentKind::BalancedAttack => "balanced_attack",
            ExperimentKind::DpBaseline => "dp_baseline",
            ExperimentKind::ApproxAgreement => "approx_agreement",
            ExperimentKind::WeakKa => "weak_ka",
            ExperimentKind::GlDecode => "gl_decode",
            ExperimentKind::IbeSelftest => "ibe_selftest",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment kind `{s}`")))
    }
}

/// Everything an experiment run depends on. Unset options fall back to
/// per-kind defaults through the accessor methods.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: Option<usize>,
    /// Attack rounds `ℓ̃` (the balanced attack adds `k` mpk rounds).
    pub ell: Option<usize>,
    pub c: Option<usize>,
    pub lambda: usize,
    pub scheme: SchemeTag,
    pub mechanism: MechanismSpec,
    pub sigma: Option<f64>,
    pub kappa: Option<f64>,
    pub trials: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub oracle_error: f64,
    pub mb: usize,
    pub m: Option<usize>,
    pub allow_oracle: bool,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            n: None,
            ell: None,
            c: None,
            lambda: 16,
            scheme: SchemeTag::Compact,
            mechanism: MechanismSpec::Empirical,
            sigma: None,
            kappa: None,
            trials: None,
            seed: 0,
            out: None,
            alpha: None,
            beta: None,
            oracle_error: 0.24,
            mb: 8,
            m: None,
            allow_oracle: false,
            workers: None,
        }
    }

    /// Parses a flat `key = value` file. `#` starts a comment. The file
    /// must name its `kind`.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let pairs = parse_pairs(text)?;
        let kind = pairs
            .iter()
            .find(|(k, _)| k == "kind")
            .map(|(_, v)| v.parse())
            .transpose()?
            .ok_or_else(|| HarnessError::Config("config file has no `kind`".into()))?;
        let mut cfg = Self::new(kind);
        for (k, v) in pairs.iter().filter(|(k, _)| k != "kind") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Sets one option by its file/flag name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let key = key.trim().trim_start_matches("--").replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "kind" => self.kind = v.parse()?,
            "n" => self.n = Some(num(&key, v)?),
            "ell" | "rounds" => self.ell = Some(num(&key, v)?),
            "c" => self.c = Some(num(&key, v)?),
            "lambda" => self.lambda = num(&key, v)?,
            "scheme" => {
                self.scheme = v
                    .parse()
                    .map_err(|e| HarnessError::Config(format!("scheme: {e}")))?
            }
            "mechanism" | "mech" => {
                self.mechanism = v
                    .parse()
                    .map_err(|e| HarnessError::Config(format!("mechanism: {e}")))?
            }
            "sigma" => self.sigma = Some(num(&key, v)?),
            "kappa" => self.kappa = Some(num(&key, v)?),
            "trials" => self.trials = Some(num(&key, v)?),
            "seed" => self.seed = num(&key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "alpha" => self.alpha = Some(num(&key, v)?),
            "beta" => self.beta = Some(num(&key, v)?),
            "oracle_error" => self.oracle_error = num(&key, v)?,
            "mb" => self.mb = num(&key, v)?,
            "m" => self.m = Some(num(&key, v)?),
            "allow_oracle" => self.allow_oracle = num(&key, v)?,
            "workers" => self.workers = Some(num(&key, v)?),
            _ => return Err(HarnessError::Config(format!("unknown option `{key}`"))),
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(match self.kind {
            ExperimentKind::NaturalAttack | ExperimentKind::BalancedAttack => 50,
            _ => 200,
        })
    }

    pub fn c(&self) -> usize {
        self.c.unwrap_or(match self.kind {
            ExperimentKind::ApproxAgreement | ExperimentKind::WeakKa => 4,
            _ => 20,
        })
    }

    /// Attack rounds, or `None` for the attack's own default.
    pub fn ell(&self) -> Option<usize> {
        self.ell.or(match self.kind {
            ExperimentKind::DpBaseline => Some(self.n()),
            ExperimentKind::ApproxAgreement | ExperimentKind::WeakKa => Some(1000),
            _ => None,
        })
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(match self.kind {
            ExperimentKind::NaturalAttack
            | ExperimentKind::ApproxAgreement
            | ExperimentKind::WeakKa => 200,
            ExperimentKind::BalancedAttack | ExperimentKind::DpBaseline => 100,
            ExperimentKind::GlDecode => 500,
            ExperimentKind::IbeSelftest => 1,
        })
    }

    /// `α`, default `2·n^{-1/10}`.
    pub fn alpha(&self) -> f64 {
        self.alpha
            .unwrap_or_else(|| crate::key_agreement::eavesdrop::agreement_radius(self.n()))
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(1.0 / 20.0)
    }

    pub fn m(&self) -> usize {
        self.m.unwrap_or(64)
    }

    pub fn mechanism(&self) -> MechanismSpec {
        match self.sigma {
            Some(s) => self.mechanism.with_sigma(Some(s)),
            None => self.mechanism,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        for (name, v) in [
            ("n", self.n),
            ("ell", self.ell),
            ("c", self.c),
            ("trials", self.trials),
            ("m", self.m),
        ] {
            if v == Some(0) {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.lambda == 0 || self.mb == 0 {
            return bad("lambda and mb must be positive".into());
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("kappa", self.kappa),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if let Some(x) = v {
                if !(x.is_finite() && x > 0.0) {
                    return bad(format!("{name} must be positive, got {x}"));
                }
            }
        }
        match self.kind {
            ExperimentKind::NaturalAttack | ExperimentKind::BalancedAttack => {
                if self.mechanism.is_oracle() && !self.allow_oracle {
                    return bad("the oracle mechanism needs allow_oracle = true".into());
                }
            }
            ExperimentKind::GlDecode => {
                if self.mb > 63 || self.mb > self.n() {
                    return bad(format!("mb = {} must be at most min(n, 63)", self.mb));
                }
                if !(0.0..=1.0).contains(&self.oracle_error) {
                    return bad(format!("oracle_error {} outside [0, 1]", self.oracle_error));
                }
            }
            ExperimentKind::WeakKa => {
                crate::key_agreement::Bucketing::new(self.alpha(), self.beta())
                    .and_then(|b| b.check_for(self.n()))
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Explicit `out`, else `$ADA_ARENA_OUT/<kind>.csv`, else `out/<kind>.csv`.
    pub fn output_path(&self) -> PathBuf {
        if let Some(p) = &self.out {
            return p.clone();
        }
        let dir = std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out"));
        dir.join(format!("{}.csv", self.kind))
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, HarnessError> {
    v.parse()
        .map_err(|_| HarnessError::Config(format!("bad value `{v}` for {key}")))
}

pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_and_overrides() {
        let mut cfg = ExperimentConfig::parse(
            "# demo\nkind = natural-attack\nn = 30\nc=10 # small\ntrials = 5\n",
        )
        .unwrap();
        assert_eq!(cfg.kind, ExperimentKind::NaturalAttack);
        assert_eq!((cfg.n(), cfg.c(), cfg.trials()), (30, 10, 5));
        cfg.set("--n", "40").unwrap();
        assert_eq!(cfg.n(), 40);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("n = 3").is_err());
        assert!(ExperimentConfig::parse("kind = natural_attack\nbogus = 1").is_err());
        assert!(ExperimentConfig::parse("kind = natural_attack\nn = -1").is_err());
        let cfg = ExperimentConfig::parse("kind = natural_attack\nn = 0").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::parse("kind = natural_attack\nmechanism = oracle").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::parse("kind = weak_ka\nalpha = 4\nbeta = 1").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
    }
}
