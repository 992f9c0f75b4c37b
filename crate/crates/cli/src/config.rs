//! Experiment configuration: a flat JSON object with a `kind` plus the
//! fields that kind needs. Unknown keys are rejected with a suggestion.

use std::fs;
use std::path::{Path, PathBuf};

use dnls_core::attractor::{damping_condition_coupled, WeightFamily, WeightSpec};
use dnls_core::dynamics::{IntegratorConfig, Scheme};
use dnls_core::lattice::{charge, LatticeState, ModelParams};
use dnls_core::random::{on_sphere, stream_rng};
use dnls_core::stationary::critical_energy;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Simulate,
    StandingWave,
    ContractionProbe,
    GeometryCheck,
    TailAudit,
    TruncationSweep,
    WeightAudit,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::StandingWave => "standing_wave",
            Kind::ContractionProbe => "contraction_probe",
            Kind::GeometryCheck => "geometry_check",
            Kind::TailAudit => "tail_audit",
            Kind::TruncationSweep => "truncation_sweep",
            Kind::WeightAudit => "weight_audit",
        }
    }
}

/// Forcing `g` on the box.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    #[default]
    Zero,
    /// Constant on `|n| ≤ support`, scaled to ℓ² norm `norm`.
    Uniform { norm: f64, support: usize },
    /// Explicit `[re, im]` pairs for `n = -k..=k`, zero-extended.
    Values { values: Vec<(f64, f64)> },
}

/// Initial state `u(0)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    #[default]
    Zero,
    SingleSite {
        amplitude: f64,
        #[serde(default)]
        site: i64,
    },
    /// `A exp(-(n-center)²/(2 width²))` with `A` fixed by the charge,
    /// optionally cut to zero outside `|n| ≤ support`.
    Gaussian {
        #[serde(default)]
        center: f64,
        width: f64,
        charge: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<usize>,
    },
    /// Gaussian direction on the sphere `‖u‖ = radius`, drawn from the run seed.
    RandomSphere { radius: f64 },
    /// A serialized `LatticeState`, or a list of `[re, im]` pairs for
    /// `n = -k..=k`.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}
fn default_m() -> usize {
    100
}
fn default_t() -> f64 {
    10.0
}
fn default_dt() -> f64 {
    IntegratorConfig::default().dt
}
fn default_tol() -> f64 {
    IntegratorConfig::default().solver_tol
}
fn default_inner() -> usize {
    IntegratorConfig::default().max_inner_iters
}
fn default_stride() -> usize {
    IntegratorConfig::default().record_stride
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,

    #[serde(default = "one")]
    pub epsilon: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(rename = "T", default = "default_t")]
    pub t_end: f64,
    #[serde(default)]
    pub forcing: ForcingSpec,
    /// For `standing_wave` this is the Newton seed; when absent the
    /// anti-continuum profile on `support` is continued instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_condition: Option<InitialCondition>,

    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_inner")]
    pub max_inner_iters: usize,
    #[serde(default = "default_stride")]
    pub record_stride: usize,

    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub snapshots: bool,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Rim radius of the geometry check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Ball radius of the contraction probe.
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho1: Option<f64>,
    /// Tail cutoff scales.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_family: Option<WeightFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_schedule: Option<Vec<f64>>,
    /// Anti-continuum seed sites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<i64>>,
    /// Newton tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_values: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_ref: Option<usize>,
    /// Extra initial states for the truncation sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_set: Option<Vec<InitialCondition>>,
}

pub const FIELDS: &[&str] = &[
    "kind",
    "epsilon",
    "delta",
    "sigma",
    "m",
    "T",
    "forcing",
    "initial_condition",
    "scheme",
    "dt",
    "solver_tol",
    "max_inner_iters",
    "record_stride",
    "seed",
    "output_dir",
    "snapshots",
    "omega",
    "r",
    "R",
    "n_pairs",
    "n_samples",
    "eta",
    "rho1",
    "M",
    "lambda",
    "weight_family",
    "coupling_schedule",
    "support",
    "tol",
    "max_iter",
    "m_values",
    "m_ref",
    "initial_set",
];

/// Closest known key, if any is reasonably close.
pub fn suggest(key: &str, known: &[&str]) -> Option<String> {
    known
        .iter()
        .map(|k| (strsim::jaro_winkler(key, k), *k))
        .filter(|(score, _)| *score >= 0.8)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, k)| k.to_string())
}

pub(crate) fn check_keys(value: &serde_json::Value, known: &[&str]) -> CliResult<()> {
    let Some(map) = value.as_object() else {
        return Err(CliError::Config("top level must be a JSON object".into()));
    };
    for key in map.keys() {
        if !known.contains(&key.as_str()) {
            let hint = suggest(key, known)
                .map(|s| format!(" (did you mean \"{s}\"?)"))
                .unwrap_or_default();
            return Err(CliError::Config(format!("unknown key \"{key}\"{hint}")));
        }
    }
    Ok(())
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("invalid {field}: {}", reason.into()))
}

fn require<T: Copy>(value: Option<T>, field: &str, kind: Kind) -> CliResult<T> {
    value.ok_or_else(|| invalid(field, format!("required for kind {}", kind.name())))
}

impl ExperimentConfig {
    /// Parses, fills kind-specific defaults and validates.
    pub fn from_json_str(text: &str) -> CliResult<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
        check_keys(&value, FIELDS)?;
        let mut config: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        config.fill_defaults();
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    fn fill_defaults(&mut self) {
        let set = |slot: &mut Option<f64>, v: f64| {
            slot.get_or_insert(v);
        };
        match self.kind {
            Kind::StandingWave => {
                set(&mut self.omega, 1.0);
                set(&mut self.tol, 1e-10);
                self.max_iter.get_or_insert(50);
                self.support.get_or_insert_with(|| vec![0]);
                self.coupling_schedule.get_or_insert_with(|| {
                    let target = 1.0 / self.epsilon;
                    (0..=20).map(|k| target * k as f64 / 20.0).collect()
                });
            }
            Kind::ContractionProbe => {
                set(&mut self.omega, 1.0);
                self.n_pairs.get_or_insert(1000);
            }
            Kind::GeometryCheck => {
                set(&mut self.omega, 1.0);
                self.n_samples.get_or_insert(10_000);
            }
            Kind::WeightAudit => {
                self.weight_family.get_or_insert(WeightFamily::ExponentialOneSided);
            }
            Kind::TruncationSweep => {
                self.m_values.get_or_insert_with(|| vec![25, 50, 100, 200]);
                self.m_ref.get_or_insert(400);
            }
            Kind::Simulate | Kind::TailAudit => {}
        }
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            scheme: self.scheme,
            dt: self.dt,
            solver_tol: self.solver_tol,
            max_inner_iters: self.max_inner_iters,
            record_stride: self.record_stride,
        }
    }

    pub fn forcing_values(&self) -> CliResult<Vec<Complex64>> {
        build_forcing(&self.forcing, self.m)
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams::new(
            self.epsilon,
            self.delta,
            self.sigma,
            self.forcing_values()?,
            self.m,
        )?)
    }

    pub fn initial_state(&self) -> CliResult<LatticeState> {
        build_initial(self.initial_condition.as_ref().unwrap_or(&InitialCondition::Zero), self.m, self.seed)
    }

    pub fn weight(&self) -> CliResult<WeightSpec> {
        let lambda = require(self.lambda, "lambda", self.kind)?;
        let family = self.weight_family.unwrap_or(WeightFamily::ExponentialOneSided);
        Ok(WeightSpec::new(family, lambda, self.m)?)
    }

    pub fn validate(&self) -> CliResult<()> {
        let kind = self.kind;
        self.integrator().validate()?;
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(invalid("T", "must be finite and >= 0"));
        }
        let params = self.params()?;
        match kind {
            Kind::Simulate => {
                self.initial_state()?;
                if let Some(rho1) = self.rho1 {
                    check_absorbing(&params, rho1)?;
                }
            }
            Kind::StandingWave => {
                let omega = require(self.omega, "omega", kind)?;
                critical_energy(omega, self.sigma)?;
                let tol = require(self.tol, "tol", kind)?;
                if !(tol > 0.0 && tol <= 1e-8) {
                    return Err(invalid("tol", "must lie in (0, 1e-8]"));
                }
                let schedule = self.coupling_schedule.as_deref().unwrap_or(&[]);
                if schedule.is_empty() || schedule.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("coupling_schedule", "must be a nonempty increasing list"));
                }
                if !(schedule[0] >= 0.0) {
                    return Err(invalid("coupling_schedule", "must start at a value >= 0"));
                }
                let m = self.m as i64;
                let support = self.support.as_deref().unwrap_or(&[]);
                if support.is_empty() || support.iter().any(|n| n.abs() > m) {
                    return Err(invalid("support", format!("must be a nonempty subset of -{m}..={m}")));
                }
            }
            Kind::ContractionProbe => {
                let radius = require(self.radius, "R", kind)?;
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(invalid("R", "must be finite and > 0"));
                }
                if require(self.n_pairs, "n_pairs", kind)? < 100 {
                    return Err(invalid("n_pairs", "must be >= 100"));
                }
                critical_energy(require(self.omega, "omega", kind)?, self.sigma)?;
            }
            Kind::GeometryCheck => {
                let omega = require(self.omega, "omega", kind)?;
                critical_energy(omega, self.sigma)?;
                let r = require(self.r, "r", kind)?;
                let kappa1 = 1.0 / (1.0 / self.epsilon).min(omega.abs());
                let r_max = ((self.sigma + 1.0) / kappa1.powf(2.0 * self.sigma + 2.0))
                    .powf(1.0 / (2.0 * self.sigma));
                if !(r > 0.0 && r < r_max) {
                    return Err(invalid("r", format!("rim radius must lie in (0, {r_max})")));
                }
                if require(self.n_samples, "n_samples", kind)? < 1000 {
                    return Err(invalid("n_samples", "must be >= 1000"));
                }
            }
            Kind::TailAudit => {
                self.initial_state()?;
                let eta = require(self.eta, "eta", kind)?;
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(invalid("eta", "must be finite and > 0"));
                }
                check_absorbing(&params, require(self.rho1, "rho1", kind)?)?;
                let cutoffs = self.cutoffs.as_deref().unwrap_or(&[]);
                if cutoffs.is_empty() || cutoffs.contains(&0) {
                    return Err(invalid("M", "must be a nonempty list of positive integers"));
                }
            }
            Kind::TruncationSweep => {
                let m_values = self.m_values.as_deref().unwrap_or(&[]);
                let m_ref = require(self.m_ref, "m_ref", kind)?;
                if m_values.is_empty() || m_values.iter().any(|&m| m == 0 || m > m_ref) {
                    return Err(invalid("m_values", format!("must be a nonempty list in 1..={m_ref}")));
                }
                let smallest = *m_values.iter().min().unwrap_or(&1);
                for state in self.initial_states()? {
                    state.resized(smallest).map_err(|_| {
                        invalid("initial_condition", format!("support must fit in -{smallest}..={smallest}"))
                    })?;
                }
                params.with_half_width(smallest)?;
                params.with_half_width(m_ref)?;
            }
            Kind::WeightAudit => {
                self.initial_state()?;
                let spec = self.weight()?;
                let (ok, slack) = damping_condition_coupled(self.delta, 1.0 / self.epsilon, &spec);
                if !ok {
                    return Err(invalid(
                        "delta",
                        format!(
                            "damping condition delta/2 - 2(1/epsilon) d1 d2^(-1/2) >= 0 fails \
                             (slack {slack}; one-sided exponential weights need 8 sinh(lambda/2) <= delta)"
                        ),
                    ));
                }
                let eta = require(self.eta, "eta", kind)?;
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(invalid("eta", "must be finite and > 0"));
                }
                let cutoffs = self.cutoffs.as_deref().unwrap_or(&[]);
                if cutoffs.is_empty() || cutoffs.contains(&0) {
                    return Err(invalid("M", "must be a nonempty list of positive integers"));
                }
            }
        }
        Ok(())
    }

    /// The truncation-sweep data: `initial_set` when given, else the single
    /// initial condition.
    pub fn initial_states(&self) -> CliResult<Vec<LatticeState>> {
        match &self.initial_set {
            Some(set) if !set.is_empty() => set
                .iter()
                .enumerate()
                .map(|(i, ic)| build_initial(ic, self.m, dnls_core::random::derive_seed(self.seed, i as u64)))
                .collect(),
            _ => Ok(vec![self.initial_state()?]),
        }
    }
}

fn check_absorbing(params: &ModelParams, rho1: f64) -> CliResult<()> {
    let delta = params.delta();
    if !(delta > 0.0) {
        return Err(invalid("delta", "the absorbing ball needs delta > 0"));
    }
    let rho = params.forcing_norm() / delta;
    if !(rho1 > rho) {
        return Err(invalid(
            "rho1",
            format!("absorbing-ball constraint rho1 > |g|/delta = {rho} violated"),
        ));
    }
    Ok(())
}

pub fn gaussian_profile(
    m: usize,
    center: f64,
    width: f64,
    charge_target: f64,
    support: Option<usize>,
) -> CliResult<LatticeState> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(invalid("initial_condition.width", "must be finite and > 0"));
    }
    if !(charge_target >= 0.0 && charge_target.is_finite()) {
        return Err(invalid("initial_condition.charge", "must be finite and >= 0"));
    }
    let cut = support.unwrap_or(m) as i64;
    let shape = LatticeState::from_fn(m, |n| {
        let x = (n as f64 - center) / width;
        let value = if n.abs() <= cut { (-0.5 * x * x).exp() } else { 0.0 };
        Complex64::new(value, 0.0)
    })?;
    let c = charge(&shape);
    if c == 0.0 {
        return Err(invalid("initial_condition", "gaussian has no mass on the box"));
    }
    Ok(shape.scaled(Complex64::new((charge_target / c).sqrt(), 0.0)))
}

fn centered_pairs(values: &[(f64, f64)], m: usize, field: &str) -> CliResult<Vec<Complex64>> {
    if values.len().is_multiple_of(2) {
        return Err(invalid(field, "needs an odd number of entries (sites -k..=k)"));
    }
    let k = values.len() / 2;
    let state = LatticeState::new(k, values.iter().map(|&(re, im)| Complex64::new(re, im)).collect(), 0.0)?;
    let state = state
        .resized(m)
        .map_err(|_| invalid(field, format!("support extends outside -{m}..={m}")))?;
    Ok(state.into_amplitudes())
}

fn build_forcing(spec: &ForcingSpec, m: usize) -> CliResult<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    match spec {
        ForcingSpec::Zero => Ok(vec![zero; 2 * m + 1]),
        ForcingSpec::Uniform { norm, support } => {
            if !(norm.is_finite() && *norm >= 0.0) {
                return Err(invalid("forcing.norm", "must be finite and >= 0"));
            }
            if *support > m {
                return Err(invalid("forcing.support", format!("must be <= m = {m}")));
            }
            let a = norm / ((2 * support + 1) as f64).sqrt();
            let s = *support as i64;
            Ok((-(m as i64)..=m as i64)
                .map(|n| if n.abs() <= s { Complex64::new(a, 0.0) } else { zero })
                .collect())
        }
        ForcingSpec::Values { values } => centered_pairs(values, m, "forcing.values"),
    }
}

fn build_initial(ic: &InitialCondition, m: usize, seed: u64) -> CliResult<LatticeState> {
    match ic {
        InitialCondition::Zero => Ok(LatticeState::zeros(m)),
        InitialCondition::SingleSite { amplitude, site } => {
            Ok(LatticeState::single_site(m, *site, Complex64::new(*amplitude, 0.0))?)
        }
        InitialCondition::Gaussian {
            center,
            width,
            charge,
            support,
        } => gaussian_profile(m, *center, *width, *charge, *support),
        InitialCondition::RandomSphere { radius } => {
            if !(radius.is_finite() && *radius >= 0.0) {
                return Err(invalid("initial_condition.radius", "must be finite and >= 0"));
            }
            Ok(on_sphere(&mut stream_rng(seed, 0), m, *radius))
        }
        InitialCondition::File { path } => load_state_file(path, m),
    }
}

fn load_state_file(path: &Path, m: usize) -> CliResult<LatticeState> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if let Ok(state) = serde_json::from_str::<LatticeState>(&text) {
        let state = LatticeState::new(state.half_width(), state.amplitudes().to_vec(), 0.0)?;
        return state
            .resized(m)
            .map_err(|_| invalid("initial_condition.path", format!("state does not fit in -{m}..={m}")));
    }
    let pairs: Vec<(f64, f64)> = serde_json::from_str(&text).map_err(|e| {
        invalid(
            "initial_condition.path",
            format!("{}: neither a lattice state nor a list of [re, im] pairs ({e})", path.display()),
        )
    })?;
    Ok(LatticeState::new(m, centered_pairs(&pairs, m, "initial_condition.path")?, 0.0)?)
}
