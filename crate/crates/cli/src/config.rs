//! Run configuration: flags override config-file keys override defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use plkks::sampling::{random_phase_point, seeded};
use plkks::{Coupling, MuWeights, PhasePoint, Tolerances};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    Double,
    Projection,
    Ode,
    All,
}

impl FromStr for EngineChoice {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        <Self as ValueEnum>::from_str(s.trim(), true).map_err(|_| CliError::Usage(format!("unknown engine '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        <Self as ValueEnum>::from_str(s.trim(), true).map_err(|_| CliError::Usage(format!("unknown format '{s}'")))
    }
}

/// Comma-separated reals, e.g. `1.2,0.4`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealList(pub Vec<f64>);

impl FromStr for RealList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| v.parse::<f64>().map_err(|_| format!("'{v}' is not a number")))
            .collect::<Result<Vec<_>, _>>()
            .map(RealList)
    }
}

impl fmt::Display for RealList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(f64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Every run parameter as an optional override. Shared by the command-line
/// flags and the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunParams {
    /// Number of particles.
    #[arg(long)]
    pub n: Option<usize>,
    /// Coupling x (non-zero).
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// Hamiltonian weights as j:weight pairs, e.g. 1:1,-1:-1.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Initial positions, strictly decreasing in [0, π).
    #[arg(long, allow_hyphen_values = true)]
    pub q0: Option<RealList>,
    /// Initial momenta.
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<RealList>,
    /// Final time.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Number of equally spaced samples on [0, t_end], endpoints included.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineChoice>,
    /// Seed for randomly filled q0/p0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunParams {
    /// Reads flat `key = value` lines; `#` starts a comment.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::parse_config(&text)
    }

    pub fn parse_config(text: &str) -> CliResult<Self> {
        let mut params = RunParams::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim().replace('-', "_"), value.trim());
            let bad = |what: &str| CliError::Usage(format!("config line {}: {key} {what}", lineno + 1));
            match key.as_str() {
                "n" => params.n = Some(value.parse().map_err(|_| bad("must be a positive integer"))?),
                "x" => params.x = Some(value.parse().map_err(|_| bad("must be a number"))?),
                "mu" => params.mu = Some(value.to_string()),
                "q0" => params.q0 = Some(value.parse().map_err(|e: String| bad(&e))?),
                "p0" => params.p0 = Some(value.parse().map_err(|e: String| bad(&e))?),
                "t_end" => params.t_end = Some(value.parse().map_err(|_| bad("must be a number"))?),
                "samples" => params.samples = Some(value.parse().map_err(|_| bad("must be an integer"))?),
                "engine" => params.engine = Some(value.parse()?),
                "seed" => params.seed = Some(value.parse().map_err(|_| bad("must be an unsigned integer"))?),
                "format" => params.format = Some(value.parse()?),
                "out" => params.out = Some(PathBuf::from(value)),
                _ => {
                    return Err(CliError::Usage(format!(
                        "config line {}: unknown key '{key}'",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(params)
    }

    /// `self` wins over `base`.
    pub fn over(self, base: RunParams) -> RunParams {
        RunParams {
            n: self.n.or(base.n),
            x: self.x.or(base.x),
            mu: self.mu.or(base.mu),
            q0: self.q0.or(base.q0),
            p0: self.p0.or(base.p0),
            t_end: self.t_end.or(base.t_end),
            samples: self.samples.or(base.samples),
            engine: self.engine.or(base.engine),
            seed: self.seed.or(base.seed),
            format: self.format.or(base.format),
            out: self.out.or(base.out),
        }
    }

    pub fn require_x(&self) -> CliResult<Coupling> {
        let x = self
            .x
            .ok_or_else(|| CliError::Usage("missing required parameter --x".into()))?;
        Coupling::new(x).map_err(|_| CliError::Usage(format!("--x must be finite and non-zero, got {x}")))
    }

    /// `n` from `--n`, or from the length of `--q0`; both must agree.
    pub fn require_n(&self) -> CliResult<usize> {
        let n = match (self.n, &self.q0) {
            (Some(n), Some(q)) if q.0.len() != n => {
                return Err(CliError::Usage(format!(
                    "--q0 has {} entries but --n is {n}",
                    q.0.len()
                )))
            }
            (Some(n), _) => n,
            (None, Some(q)) => q.0.len(),
            (None, None) => return Err(CliError::Usage("missing required parameter --n".into())),
        };
        if n == 0 {
            return Err(CliError::Usage("--n must be at least 1".into()));
        }
        Ok(n)
    }

    pub fn mu_or_default(&self) -> CliResult<MuWeights> {
        match &self.mu {
            Some(s) => s
                .parse()
                .map_err(|e: plkks::Error| CliError::Usage(format!("--mu: {e}"))),
            None => Ok(MuWeights::relativistic()),
        }
    }

    /// Explicit `(q0, p0)`; `p0` defaults to zero.
    pub fn require_point(&self, tol: &Tolerances) -> CliResult<PhasePoint> {
        let n = self.require_n()?;
        let q = self
            .q0
            .as_ref()
            .ok_or_else(|| CliError::Usage("missing required parameter --q0".into()))?;
        let p = self.p0.as_ref().map(|p| p.0.clone()).unwrap_or_else(|| vec![0.0; n]);
        if p.len() != n {
            return Err(CliError::Usage(format!("--p0 has {} entries, expected {n}", p.len())));
        }
        PhasePoint::new(q.0.clone(), p, tol).map_err(|e| CliError::Usage(format!("--q0: {e}")))
    }
}

/// Validated simulation settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub x: Coupling,
    pub mu: MuWeights,
    pub start: PhasePoint,
    pub t_end: f64,
    pub samples: usize,
    pub engine: EngineChoice,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

/// Gap and momentum range of randomly filled starts.
const RANDOM_GAP: f64 = 0.3;
const RANDOM_P: f64 = 0.5;

impl RunConfig {
    pub fn from_params(params: RunParams, tol: &Tolerances) -> CliResult<Self> {
        let x = params.require_x()?;
        let n = params.require_n()?;
        let mu = params.mu_or_default()?;
        let seed = params.seed.unwrap_or(0);
        let t_end = params.t_end.unwrap_or(1.0);
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(CliError::Usage(format!("--t-end must be positive, got {t_end}")));
        }
        let samples = params.samples.unwrap_or(21);
        if samples < 2 {
            return Err(CliError::Usage(format!("--samples must be at least 2, got {samples}")));
        }
        let mut rng = seeded(seed);
        let random = random_phase_point(&mut rng, n, RANDOM_GAP.min(2.0 / n as f64), RANDOM_P);
        let q = match &params.q0 {
            Some(q) => q.0.clone(),
            None => random.angles().to_vec(),
        };
        let p = match &params.p0 {
            Some(p) if p.0.len() != n => {
                return Err(CliError::Usage(format!("--p0 has {} entries, expected {n}", p.0.len())))
            }
            Some(p) => p.0.clone(),
            None => random.p().to_vec(),
        };
        let start = PhasePoint::new(q, p, tol).map_err(|e| CliError::Usage(format!("--q0: {e}")))?;
        Ok(Self {
            n,
            x,
            mu,
            start,
            t_end,
            samples,
            engine: params.engine.unwrap_or(EngineChoice::Double),
            seed,
            format: params.format.unwrap_or(Format::Json),
            out: params.out,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        let last = (self.samples - 1) as f64;
        (0..self.samples).map(|i| self.t_end * i as f64 / last).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parses_and_flags_win() {
        let file =
            RunParams::parse_config("# run\nn = 2\nx = 0.8\nmu = 1:1, -1:-1\nq0 = 1.2,0.4\nt-end = 2\nengine = ode\n")
                .unwrap();
        let flags = RunParams {
            x: Some(0.5),
            ..RunParams::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.x, Some(0.5));
        assert_eq!(merged.n, Some(2));
        assert_eq!(merged.t_end, Some(2.0));
        assert_eq!(merged.engine, Some(EngineChoice::Ode));
        assert_eq!(merged.q0, Some(RealList(vec![1.2, 0.4])));
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        assert!(matches!(RunParams::parse_config("speed = 3"), Err(CliError::Usage(_))));
        assert!(matches!(RunParams::parse_config("n 3"), Err(CliError::Usage(_))));
    }

    #[test]
    fn missing_x_is_named() {
        let params = RunParams {
            n: Some(2),
            ..RunParams::default()
        };
        let err = RunConfig::from_params(params, &Tolerances::default()).unwrap_err();
        assert!(err.to_string().contains("--x"));
    }

    #[test]
    fn random_fill_is_seeded() {
        let params = RunParams {
            n: Some(4),
            x: Some(1.0),
            seed: Some(9),
            ..RunParams::default()
        };
        let a = RunConfig::from_params(params.clone(), &Tolerances::default()).unwrap();
        let b = RunConfig::from_params(params, &Tolerances::default()).unwrap();
        assert_eq!(a.start, b.start);
        assert_eq!(a.times().len(), 21);
    }

    #[test]
    fn invalid_alcove_is_rejected() {
        let params = RunParams {
            x: Some(1.0),
            q0: Some(RealList(vec![0.4, 1.2])),
            ..RunParams::default()
        };
        assert!(matches!(
            RunConfig::from_params(params, &Tolerances::default()),
            Err(CliError::Usage(_))
        ));
    }
}
