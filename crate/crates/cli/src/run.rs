//! Dispatch of one experiment and writing of its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use dnls_core::attractor::{tail_audit, truncation_delta, weighted_audit, CutoffSpec};
use dnls_core::dynamics::{absorbing_report, decay_margins, integrate_with, RecordOptions, Trajectory};
use dnls_core::stationary::{
    anticontinuum_seed, contraction_probe, continuation, mountain_pass_geometry, newton_standing_wave,
    WaveOutcome,
};
use dnls_core::DnlsError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Kind};
use crate::error::{CliError, CliResult};
use crate::output::{diagnostics_csv, snapshots_jsonl, write, write_json, DIAGNOSTICS_HEADER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Trivial,
    Failed,
    NumericalError,
    Invalid,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Passed | Status::Trivial => 0,
            Status::Invalid => 1,
            Status::Failed | Status::NumericalError => 2,
        }
    }
}

/// Paths of everything a run writes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunArtifacts {
    pub diagnostics_csv: PathBuf,
    pub report_json: PathBuf,
    pub snapshots: Option<PathBuf>,
    pub config_echo: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub status: Status,
    pub report: Value,
    pub artifacts: RunArtifacts,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }
}

struct Computed {
    status: Status,
    report: Value,
    trajectory: Option<Trajectory>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

/// Runs `config`, writing artifacts to `config.output_dir`.
///
/// Core errors are recorded in the report rather than returned; only
/// failures to write the artifacts come back as `Err`.
pub fn run(config: &ExperimentConfig) -> CliResult<RunOutcome> {
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let artifacts = RunArtifacts {
        diagnostics_csv: dir.join("diagnostics.csv"),
        report_json: dir.join("report.json"),
        snapshots: config.snapshots.then(|| dir.join("snapshots.jsonl")),
        config_echo: dir.join("config_echo.json"),
    };
    write(&artifacts.config_echo, &config.to_json())?;

    let computed = match compute(config) {
        Ok(c) => c,
        Err(err) => Computed {
            status: match &err {
                CliError::Core(DnlsError::Numerical { .. }) => Status::NumericalError,
                CliError::Core(DnlsError::Audit(_)) => Status::Failed,
                _ => Status::Invalid,
            },
            report: error_value(&err),
            trajectory: None,
        },
    };

    let csv = match &computed.trajectory {
        Some(t) => diagnostics_csv(&t.rows),
        None => format!("{DIAGNOSTICS_HEADER}\n"),
    };
    write(&artifacts.diagnostics_csv, &csv)?;
    if let Some(path) = &artifacts.snapshots {
        let states = computed
            .trajectory
            .as_ref()
            .and_then(|t| t.snapshots.as_deref())
            .unwrap_or(&[]);
        write(path, &snapshots_jsonl(states))?;
    }
    let document = json!({
        "kind": config.kind,
        "status": computed.status,
        "report": computed.report,
    });
    write_json(&artifacts.report_json, &document)?;
    Ok(RunOutcome {
        status: computed.status,
        report: computed.report,
        artifacts,
    })
}

fn error_value(err: &CliError) -> Value {
    match err {
        CliError::Core(DnlsError::Numerical { reason, time, residual }) => json!({
            "error": err.to_string(),
            "reason": reason,
            "time": time,
            "residual": residual,
        }),
        _ => json!({ "error": err.to_string() }),
    }
}

fn passed(ok: bool) -> Status {
    if ok {
        Status::Passed
    } else {
        Status::Failed
    }
}

fn trajectory(config: &ExperimentConfig, options: RecordOptions) -> CliResult<Trajectory> {
    let params = config.params()?;
    let u0 = config.initial_state()?;
    Ok(integrate_with(&u0, &params, &config.integrator(), config.t_end, &options)?)
}

fn compute(config: &ExperimentConfig) -> CliResult<Computed> {
    let missing = |field: &str| CliError::Config(format!("missing {field}"));
    match config.kind {
        Kind::Simulate => {
            let traj = trajectory(
                config,
                RecordOptions {
                    keep_snapshots: config.snapshots,
                    tail_cutoff: config.cutoffs.as_ref().and_then(|m| m.first().copied()),
                    weight: config.lambda.map(|_| config.weight()).transpose()?,
                },
            )?;
            let decay = decay_margins(&traj);
            let mut ok = decay.passed();
            let absorbing = match config.rho1 {
                Some(rho1) => {
                    let report = absorbing_report(&traj, rho1)?;
                    let interval = config.dt * config.record_stride as f64;
                    if config.t_end >= report.t0_predicted + interval {
                        ok &= report
                            .t_entry_observed
                            .is_some_and(|t| t <= report.t0_predicted + interval);
                    }
                    Some(report)
                }
                None => None,
            };
            let report = json!({
                "charge_drift": traj.max_relative_drift(|r| r.charge),
                "energy_drift": traj.max_relative_drift(|r| r.energy),
                "final_time": traj.final_state.time(),
                "final_charge": traj.rows.last().map(|r| r.charge),
                "samples": traj.rows.len(),
                "decay": decay,
                "absorbing": absorbing,
            });
            Ok(Computed { status: passed(ok), report, trajectory: Some(traj) })
        }
        Kind::StandingWave => {
            let omega = config.omega.ok_or_else(|| missing("omega"))?;
            let tol = config.tol.ok_or_else(|| missing("tol"))?;
            if config.initial_condition.is_some() {
                let seed = config.initial_state()?;
                let max_iter = config.max_iter.ok_or_else(|| missing("max_iter"))?;
                let outcome = newton_standing_wave(&seed, config.epsilon, omega, config.sigma, tol, max_iter)?;
                let status = match &outcome {
                    WaveOutcome::Trivial { .. } => Status::Trivial,
                    WaveOutcome::Nontrivial(_) => Status::Passed,
                };
                Ok(Computed { status, report: to_value(&outcome), trajectory: None })
            } else {
                let support = config.support.as_deref().ok_or_else(|| missing("support"))?;
                let schedule = config.coupling_schedule.as_deref().ok_or_else(|| missing("coupling_schedule"))?;
                let seed = anticontinuum_seed(support, omega, config.sigma, config.m)?;
                let branch = continuation(&seed, omega, config.sigma, schedule, tol)?;
                let last = branch.waves.last();
                let report = json!({
                    "final_coupling": last.map(|w| w.coupling),
                    "final_norm": last.map(|w| w.norm()),
                    "final_energy": last.map(|w| w.energy),
                    "final_residual": last.map(|w| w.residual),
                    "branch": branch,
                });
                Ok(Computed { status: passed(branch.complete), report, trajectory: None })
            }
        }
        Kind::ContractionProbe => {
            let omega = config.omega.ok_or_else(|| missing("omega"))?;
            let radius = config.radius.ok_or_else(|| missing("R"))?;
            let n_pairs = config.n_pairs.ok_or_else(|| missing("n_pairs"))?;
            let r = contraction_probe(radius, config.epsilon, omega, config.sigma, n_pairs, config.seed, config.m)?;
            let ok = r.within_bound && (r.radius >= r.ec || r.converged_to_zero);
            Ok(Computed { status: passed(ok), report: to_value(&r), trajectory: None })
        }
        Kind::GeometryCheck => {
            let omega = config.omega.ok_or_else(|| missing("omega"))?;
            let r = config.r.ok_or_else(|| missing("r"))?;
            let n_samples = config.n_samples.ok_or_else(|| missing("n_samples"))?;
            let g = mountain_pass_geometry(r, config.epsilon, omega, config.sigma, n_samples, config.seed, config.m)?;
            Ok(Computed { status: passed(g.rim_bound_holds), report: to_value(&g), trajectory: None })
        }
        Kind::TailAudit => {
            let eta = config.eta.ok_or_else(|| missing("eta"))?;
            let rho1 = config.rho1.ok_or_else(|| missing("rho1"))?;
            let cutoffs = config.cutoffs.as_deref().ok_or_else(|| missing("M"))?;
            let traj = trajectory(
                config,
                RecordOptions {
                    keep_snapshots: true,
                    tail_cutoff: cutoffs.first().copied(),
                    weight: None,
                },
            )?;
            let audits = cutoffs
                .iter()
                .map(|&m| tail_audit(&traj, eta, rho1, &CutoffSpec::new(m)?))
                .collect::<Result<Vec<_>, _>>()?;
            let absorbing = absorbing_report(&traj, rho1)?;
            let first = &audits[0];
            let report = json!({
                "eta": eta,
                "rho1": rho1,
                "bound": first.bound,
                "k_eta": first.k_eta,
                "t0": first.t0,
                "t_eta": first.t_eta,
                "worst_margin": audits.iter().filter_map(|a| a.worst_margin).reduce(f64::min),
                "absorbing": absorbing,
                "audits": audits,
            });
            let ok = audits.iter().all(|a| a.passed);
            Ok(Computed { status: passed(ok), report, trajectory: Some(without_snapshots(traj, config)) })
        }
        Kind::TruncationSweep => {
            let m_values = config.m_values.as_deref().ok_or_else(|| missing("m_values"))?;
            let m_ref = config.m_ref.ok_or_else(|| missing("m_ref"))?;
            let u0_set = config.initial_states()?;
            let r = truncation_delta(&u0_set, &config.params()?, m_values, m_ref, config.t_end, &config.integrator())?;
            Ok(Computed { status: passed(r.monotone), report: to_value(&r), trajectory: None })
        }
        Kind::WeightAudit => {
            let eta = config.eta.ok_or_else(|| missing("eta"))?;
            let cutoffs = config.cutoffs.as_deref().ok_or_else(|| missing("M"))?;
            let spec = config.weight()?;
            let traj = trajectory(
                config,
                RecordOptions {
                    keep_snapshots: true,
                    tail_cutoff: cutoffs.first().copied(),
                    weight: Some(spec.clone()),
                },
            )?;
            let audits = cutoffs
                .iter()
                .map(|&m| weighted_audit(&traj, &spec, eta, m))
                .collect::<Result<Vec<_>, _>>()?;
            let first = &audits[0];
            let report = json!({
                "kappa": first.kappa,
                "uniform_bound": first.uniform_bound,
                "max_weighted_sq": first.max_weighted_sq,
                "envelope_margin": first.envelope_margin,
                "bounded": first.bounded,
                "tail_bound": first.tail_bound,
                "audits": audits,
            });
            let ok = audits.iter().all(|a| a.passed);
            Ok(Computed { status: passed(ok), report, trajectory: Some(without_snapshots(traj, config)) })
        }
    }
}

/// Audits always keep snapshots; drop them unless the user asked for them.
fn without_snapshots(mut traj: Trajectory, config: &ExperimentConfig) -> Trajectory {
    if !config.snapshots {
        traj.snapshots = None;
    }
    traj
}

/// Loads a config file and applies command-line overrides.
pub fn load_config(path: &Path, seed: Option<u64>, out: Option<&Path>) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut config = ExperimentConfig::from_json_str(&text)?;
    if let Some(seed) = seed {
        config.seed = seed;
        // The seed can change a random initial state.
        config.validate()?;
    }
    if let Some(out) = out {
        config.output_dir = out.to_path_buf();
    }
    Ok(config)
}
