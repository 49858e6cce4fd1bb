use std::io::Write;
use std::path::{Path, PathBuf};

use plkks::dynamics::{flow_via_double, flow_via_ode, flow_via_projection, Engine, OdeSettings, Trajectory};
use plkks::{Error, Result, Tolerances};

use crate::config::{EngineChoice, Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{deviations_csv, mu_map, to_csv, to_json, Deviations, Meta, TrajectoryFile};

/// A finished or truncated run of one engine.
struct Run {
    traj: Trajectory,
    truncated_at: Option<f64>,
    reason: Option<String>,
}

impl Run {
    fn from_result(engine: Engine, result: Result<Trajectory>) -> CliResult<Self> {
        match result {
            Ok(traj) => Ok(Run {
                traj,
                truncated_at: None,
                reason: None,
            }),
            Err(Error::Collision { t, reason, partial }) => Ok(Run {
                traj: *partial,
                truncated_at: Some(t),
                reason: Some(format!("{} engine stopped at t = {t}: {reason}", engine.name())),
            }),
            Err(e) => Err(e.into()),
        }
    }
}

fn run_engine(engine: Engine, cfg: &RunConfig, times: &[f64], tol: &Tolerances) -> Result<Trajectory> {
    match engine {
        Engine::Double => flow_via_double(&cfg.start, cfg.x, &cfg.mu, times, tol),
        Engine::Projection => flow_via_projection(&cfg.start, cfg.x, &cfg.mu, times, tol),
        Engine::Ode => flow_via_ode(&cfg.start, cfg.x, &cfg.mu, times, &OdeSettings::default(), tol),
    }
}

fn engines(choice: EngineChoice) -> Vec<Engine> {
    match choice {
        EngineChoice::Double => vec![Engine::Double],
        EngineChoice::Projection => vec![Engine::Projection],
        EngineChoice::Ode => vec![Engine::Ode],
        EngineChoice::All => vec![Engine::Double, Engine::Projection, Engine::Ode],
    }
}

/// Runs the requested engines (concurrently for `all`) and writes the
/// output. The projection engine takes energies and Lax spectra from a
/// double run over the same times.
pub fn simulate(cfg: &RunConfig, tol: &Tolerances) -> CliResult<()> {
    if cfg.engine == EngineChoice::All && cfg.format == Format::Csv && cfg.out.is_none() {
        return Err(CliError::Usage("--engine all --format csv needs --out".into()));
    }
    let times = cfg.times();
    let wanted = engines(cfg.engine);
    let needs_double = wanted.contains(&Engine::Projection);
    let mut todo = wanted.clone();
    if needs_double && !todo.contains(&Engine::Double) {
        todo.push(Engine::Double);
    }
    let results: Vec<(Engine, Result<Trajectory>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = todo
            .iter()
            .map(|&engine| {
                let times = &times;
                (engine, scope.spawn(move || run_engine(engine, cfg, times, tol)))
            })
            .collect();
        handles
            .into_iter()
            .map(|(engine, h)| (engine, h.join().expect("engine thread panicked")))
            .collect()
    });
    let mut runs = Vec::new();
    for (engine, result) in results {
        runs.push((engine, Run::from_result(engine, result)?));
    }
    let double = runs
        .iter()
        .find(|(e, _)| *e == Engine::Double)
        .map(|(_, r)| r.traj.clone());
    if let (Some(double), Some((_, proj))) = (&double, runs.iter_mut().find(|(e, _)| *e == Engine::Projection)) {
        proj.traj.adopt_diagnostics(double);
    }
    runs.retain(|(e, _)| wanted.contains(e));

    let deviations = |run: &Run| -> Option<Deviations> {
        match (&double, cfg.engine) {
            (Some(d), EngineChoice::All) if run.traj.engine != Engine::Double => {
                Some(Deviations::against(d, &run.traj))
            }
            _ => None,
        }
    };
    let meta = |run: &Run| Meta {
        n: cfg.n,
        x: cfg.x.value(),
        mu: mu_map(&cfg.mu),
        engine: run.traj.engine.name(),
        seed: cfg.seed,
        truncated: run.truncated_at.is_some(),
    };

    match cfg.format {
        Format::Json => {
            let files: Vec<TrajectoryFile> = runs
                .iter()
                .map(|(_, run)| TrajectoryFile::new(meta(run), &run.traj, deviations(run)))
                .collect();
            let bytes = if cfg.engine == EngineChoice::All {
                to_json(&files)
            } else {
                to_json(&files[0])
            }
            .map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
            emit(cfg.out.as_deref(), &bytes)?;
        }
        Format::Csv if cfg.engine == EngineChoice::All => {
            let out = cfg.out.as_deref().expect("checked above");
            let mut rows = Vec::new();
            for (engine, run) in &runs {
                emit(
                    Some(&sibling(out, engine.name())),
                    &to_csv(&run.traj, cfg.n, run.truncated_at),
                )?;
                if let Some(d) = deviations(run) {
                    rows.push((engine.name(), d));
                }
            }
            emit(Some(&sibling(out, "deviations")), &deviations_csv(&rows))?;
        }
        Format::Csv => {
            let run = &runs[0].1;
            emit(cfg.out.as_deref(), &to_csv(&run.traj, cfg.n, run.truncated_at))?;
        }
    }

    let reasons: Vec<&str> = runs.iter().filter_map(|(_, r)| r.reason.as_deref()).collect();
    if reasons.is_empty() {
        Ok(())
    } else {
        Err(CliError::Degenerate(reasons.join("; ")))
    }
}

/// `run.csv` → `run.<tag>.csv`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p.display().to_string(), e)),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| CliError::io("stdout", e)),
    }
}
