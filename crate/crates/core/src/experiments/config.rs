//! Sweep and map descriptions, readable from TOML or JSON.
//!
//! ```toml
//! omega0 = 1.0
//! k_min = 1
//! k_max = 30
//! states = ["plus", "plus_y"]
//! engines = ["exact", "second_order"]
//!
//! [model]
//! kind = "preset"
//! name = "hermitian-xy"
//! params = { lambda = 1.0, eta = 0.5 }
//!
//! [propagation]
//! method = "rk4"
//! steps_per_period = 400
//! ```

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{HamiltonianModel, ModelSpec};
use crate::operator::{pauli, StateVector};
use crate::propagator::{Method, PropagationConfig};
use crate::quadrature::QuadratureConfig;
use crate::scalar::cx;

/// Named states accepted in configuration files.
pub const STATE_NAMES: [&str; 6] = ["plus", "minus", "plus_x", "minus_x", "plus_y", "minus_y"];

pub fn named_state(name: &str) -> Option<StateVector<f64>> {
    Some(match name {
        "plus" => pauli::plus(),
        "minus" => pauli::minus(),
        "plus_x" => pauli::plus_x(),
        "minus_x" => pauli::minus_x(),
        "plus_y" => pauli::plus_y(),
        "minus_y" => pauli::minus_y(),
        _ => return None,
    })
}

/// Initial state: one of [`STATE_NAMES`] or explicit amplitudes as
/// `[re, im]` pairs (normalized on use).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Explicit {
        label: String,
        amplitudes: Vec<[f64; 2]>,
    },
}

impl StateSpec {
    pub fn label(&self) -> &str {
        match self {
            StateSpec::Named(n) => n,
            StateSpec::Explicit { label, .. } => label,
        }
    }

    pub fn resolve(&self) -> Result<StateVector<f64>> {
        match self {
            StateSpec::Named(name) => named_state(name).ok_or_else(|| {
                Error::Config(format!("unknown state `{name}` (expected one of {STATE_NAMES:?})"))
            }),
            StateSpec::Explicit { label, amplitudes } => {
                if label.is_empty() {
                    return Err(Error::Config("explicit state needs a label".into()));
                }
                let amps = amplitudes.iter().map(|[re, im]| cx(*re, *im)).collect();
                StateVector::normalized(amps)
                    .map_err(|e| Error::Config(format!("state `{label}`: {e}")))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Exact,
    SecondOrder,
    ClosedForm,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::SecondOrder => "second_order",
            Engine::ClosedForm => "closed_form",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Rk4,
    Dp54,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationSettings {
    pub method: MethodName,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    pub steps_per_period: usize,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        let d = PropagationConfig::<f64>::default();
        PropagationSettings {
            method: MethodName::Dp54,
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            max_step: d.max_step,
            steps_per_period: d.steps_per_period,
        }
    }
}

impl PropagationSettings {
    pub fn build(&self) -> Result<PropagationConfig<f64>> {
        let cfg = PropagationConfig {
            method: match self.method {
                MethodName::Rk4 => Method::Rk4,
                MethodName::Dp54 => Method::DormandPrince54,
            },
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            steps_per_period: self.steps_per_period,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSettings {
    pub panels_per_period: usize,
    pub nodes_per_panel: usize,
    pub abs_tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        let d = QuadratureConfig::<f64>::default();
        QuadratureSettings {
            panels_per_period: d.panels_per_period,
            nodes_per_panel: d.nodes_per_panel,
            abs_tol: d.abs_tol,
            max_refinements: d.max_refinements,
        }
    }
}

impl QuadratureSettings {
    pub fn build(&self) -> Result<QuadratureConfig<f64>> {
        let cfg = QuadratureConfig {
            panels_per_period: self.panels_per_period,
            nodes_per_panel: self.nodes_per_panel,
            abs_tol: self.abs_tol,
            max_refinements: self.max_refinements,
            frequency: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_k_min() -> u32 {
    1
}
fn default_k_max() -> u32 {
    30
}
fn default_states() -> Vec<StateSpec> {
    vec![StateSpec::Named("plus".into())]
}
fn default_engines() -> Vec<Engine> {
    vec![Engine::Exact, Engine::SecondOrder]
}
fn default_departure() -> f64 {
    0.5
}

/// Reference frequency: explicit, else the model's `omega0` parameter, else 1.
fn resolve_omega0(explicit: Option<f64>, model: &ModelSpec) -> Result<f64> {
    let w = explicit.or_else(|| model.param("omega0")).unwrap_or(1.0);
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::Config(format!("omega0 must be positive and finite, got {w}")));
    }
    Ok(w)
}

fn check_departure(d: f64) -> Result<()> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Config(format!("departure must be positive, got {d}")));
    }
    Ok(())
}

/// Survival at `t_obs` as a function of `k = ω/ω0` over an integer range.
///
/// For a preset the swept parameter is `omega = k·ω0`; for a Fourier model
/// every mode frequency is multiplied by `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub model: ModelSpec,
    #[serde(default)]
    pub omega0: Option<f64>,
    #[serde(default = "default_k_min")]
    pub k_min: u32,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    /// Defaults to `2π/ω0`.
    #[serde(default)]
    pub t_obs: Option<f64>,
    #[serde(default = "default_states")]
    pub states: Vec<StateSpec>,
    #[serde(default = "default_engines")]
    pub engines: Vec<Engine>,
    /// Second-order values further than this from 1 are flagged.
    #[serde(default = "default_departure")]
    pub departure: f64,
    #[serde(default)]
    pub propagation: PropagationSettings,
    #[serde(default)]
    pub quadrature: QuadratureSettings,
}

impl SweepSpec {
    pub fn new(model: ModelSpec) -> Self {
        SweepSpec {
            model,
            omega0: None,
            k_min: default_k_min(),
            k_max: default_k_max(),
            t_obs: None,
            states: default_states(),
            engines: default_engines(),
            departure: default_departure(),
            propagation: PropagationSettings::default(),
            quadrature: QuadratureSettings::default(),
        }
    }

    pub fn omega0(&self) -> Result<f64> {
        resolve_omega0(self.omega0, &self.model)
    }

    pub fn t_obs(&self) -> Result<f64> {
        let t = match self.t_obs {
            Some(t) => t,
            None => TAU / self.omega0()?,
        };
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Config(format!("t_obs must be positive, got {t}")));
        }
        Ok(t)
    }

    pub fn k_values(&self) -> Vec<u32> {
        (self.k_min..=self.k_max).collect()
    }

    /// Checks everything that can be checked before running.
    pub fn validate(&self) -> Result<()> {
        self.omega0()?;
        self.t_obs()?;
        if self.k_min > self.k_max {
            return Err(Error::Config(format!(
                "empty k range {}..={}",
                self.k_min, self.k_max
            )));
        }
        if self.states.is_empty() {
            return Err(Error::Config("no initial states given".into()));
        }
        if self.engines.is_empty() {
            return Err(Error::Config("no engines given".into()));
        }
        check_departure(self.departure)?;
        let mut labels = BTreeMap::new();
        let model = config_model(&self.model)?;
        for s in &self.states {
            let psi = s.resolve()?;
            check_state_dim(&model, s.label(), &psi)?;
            if labels.insert(s.label().to_string(), ()).is_some() {
                return Err(Error::Config(format!("duplicate state label `{}`", s.label())));
            }
        }
        if self.engines.contains(&Engine::ClosedForm) && self.model.label() != "oscillating-decay" {
            return Err(Error::Config(
                "the closed_form engine needs the oscillating-decay preset".into(),
            ));
        }
        self.propagation.build()?;
        self.quadrature.build()?;
        Ok(())
    }
}

fn config_model(spec: &ModelSpec) -> Result<HamiltonianModel<f64>> {
    spec.build().map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(format!("model: {other}")),
    })
}

fn check_state_dim(model: &HamiltonianModel<f64>, label: &str, psi: &StateVector<f64>) -> Result<()> {
    use crate::models::Hamiltonian;
    if psi.dim() != model.dim() {
        return Err(Error::Config(format!(
            "state `{label}` has dimension {}, model has {}",
            psi.dim(),
            model.dim()
        )));
    }
    Ok(())
}

/// A one-dimensional grid: `points` evenly spaced values over `[min, max]`,
/// or explicit increasing values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Linear { min: f64, max: f64, points: usize },
    Values(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Linear { min, max, points } => match points {
                0 => vec![],
                1 => vec![*min],
                n => (0..*n)
                    .map(|i| {
                        if i + 1 == *n {
                            *max
                        } else {
                            min + (max - min) * i as f64 / (*n - 1) as f64
                        }
                    })
                    .collect(),
            },
            Grid::Values(v) => v.clone(),
        }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        let v = self.values();
        if v.is_empty() {
            return Err(Error::Config(format!("{what}: grid is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(format!("{what}: grid values must be finite")));
        }
        if let Grid::Linear { min, max, points } = self {
            if *points > 1 && !(max > min) {
                return Err(Error::Config(format!("{what}: max must exceed min")));
            }
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(format!("{what}: grid must be increasing")));
        }
        Ok(())
    }
}

fn default_ratio_grid() -> Grid {
    Grid::Linear {
        min: 1.0,
        max: 30.0,
        points: 59,
    }
}
fn default_time_grid() -> Grid {
    Grid::Linear {
        min: 0.0,
        max: TAU,
        points: 101,
    }
}
fn default_map_state() -> StateSpec {
    StateSpec::Named("plus".into())
}

/// `|P_exact − P₂|` over `(ω/ω0, t)`. Times are in units of `1/ω0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscrepancyMapSpec {
    pub model: ModelSpec,
    #[serde(default)]
    pub omega0: Option<f64>,
    #[serde(default = "default_ratio_grid")]
    pub omega_ratio: Grid,
    #[serde(default = "default_time_grid")]
    pub t: Grid,
    #[serde(default = "default_map_state")]
    pub state: StateSpec,
    #[serde(default = "default_departure")]
    pub departure: f64,
    #[serde(default)]
    pub propagation: PropagationSettings,
    #[serde(default)]
    pub quadrature: QuadratureSettings,
}

impl DiscrepancyMapSpec {
    pub fn new(model: ModelSpec) -> Self {
        DiscrepancyMapSpec {
            model,
            omega0: None,
            omega_ratio: default_ratio_grid(),
            t: default_time_grid(),
            state: default_map_state(),
            departure: default_departure(),
            propagation: PropagationSettings::default(),
            quadrature: QuadratureSettings::default(),
        }
    }

    pub fn omega0(&self) -> Result<f64> {
        resolve_omega0(self.omega0, &self.model)
    }

    pub fn validate(&self) -> Result<()> {
        self.omega0()?;
        self.omega_ratio.validate("omega_ratio")?;
        self.t.validate("t")?;
        if self.t.values()[0] < 0.0 {
            return Err(Error::Config("t grid must start at or after 0".into()));
        }
        check_departure(self.departure)?;
        let model = config_model(&self.model)?;
        check_state_dim(&model, self.state.label(), &self.state.resolve()?)?;
        self.propagation.build()?;
        self.quadrature.build()?;
        Ok(())
    }
}

/// Parses a config file, choosing JSON for `.json` and TOML otherwise.
pub fn load<S: for<'de> Deserialize<'de>>(path: &Path) -> Result<S> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, path.extension().and_then(|e| e.to_str()) == Some("json"))
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn parse<S: for<'de> Deserialize<'de>>(text: &str, json: bool) -> std::result::Result<S, String> {
    if json {
        serde_json::from_str(text).map_err(|e| e.to_string())
    } else {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_defaults() {
        let spec: SweepSpec = toml::from_str(
            r#"
            [model]
            kind = "preset"
            name = "oscillating-decay"
            params = { omega0 = 2.0, gamma = 0.1 }
            "#,
        )
        .unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.k_values().len(), 30);
        assert_eq!(spec.omega0().unwrap(), 2.0);
        assert!((spec.t_obs().unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(spec.engines, vec![Engine::Exact, Engine::SecondOrder]);
    }

    #[test]
    fn sweep_full_schema_and_json() {
        let text = r#"
            omega0 = 1.0
            k_min = 2
            k_max = 4
            t_obs = 1.5
            states = ["plus_y", { label = "tilted", amplitudes = [[1, 0], [0, 2]] }]
            engines = ["exact", "second_order", "closed_form"]
            departure = 0.3

            [model]
            kind = "preset"
            name = "oscillating-decay"
            params = { gamma = 0.2 }

            [propagation]
            method = "rk4"
            steps_per_period = 64

            [quadrature]
            nodes_per_panel = 6
        "#;
        let spec: SweepSpec = toml::from_str(text).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.k_values(), vec![2, 3, 4]);
        let psi = spec.states[1].resolve().unwrap();
        assert!(psi.is_normalized());
        assert_eq!(spec.propagation.build().unwrap().method, Method::Rk4);
        let json = serde_json::to_string(&spec).unwrap();
        let back: SweepSpec = parse(&json, true).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn sweep_config_errors() {
        let base = SweepSpec::new(ModelSpec::preset("hermitian-xy", &[("lambda", 1.0)]));
        base.validate().unwrap();
        let mut s = base.clone();
        s.k_min = 5;
        s.k_max = 4;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = base.clone();
        s.states = vec![StateSpec::Named("up".into())];
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = base.clone();
        s.engines = vec![Engine::ClosedForm];
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = base.clone();
        s.t_obs = Some(0.0);
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = base.clone();
        s.states = vec![StateSpec::Named("plus".into()), StateSpec::Named("plus".into())];
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = base.clone();
        s.model = ModelSpec::preset("hermitian-xy", &[("gamma", 1.0)]);
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = base;
        s.propagation.steps_per_period = 4;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let bad: std::result::Result<SweepSpec, _> = toml::from_str("k_min = 1\n[model]\nkind = \"preset\"\nname = \"gain-loss\"\nextra = 1");
        assert!(bad.is_err());
    }

    #[test]
    fn grids() {
        let g = Grid::Linear {
            min: 1.0,
            max: 30.0,
            points: 59,
        };
        let v = g.values();
        assert_eq!(v.len(), 59);
        assert_eq!((v[0], v[1], v[58]), (1.0, 1.5, 30.0));
        g.validate("g").unwrap();
        assert_eq!(Grid::Values(vec![0.0]).values(), vec![0.0]);
        assert!(Grid::Values(vec![]).validate("g").is_err());
        assert!(Grid::Values(vec![1.0, 1.0]).validate("g").is_err());
        assert!(Grid::Linear { min: 2.0, max: 1.0, points: 3 }.validate("g").is_err());
    }

    #[test]
    fn map_defaults_and_parsing() {
        let spec: DiscrepancyMapSpec = toml::from_str(
            r#"
            state = "plus_x"
            t = [0.0]
            omega_ratio = { min = 10, max = 12, points = 3 }
            [model]
            kind = "preset"
            name = "hermitian-xy"
            params = { lambda = 1.0, eta = 0.5 }
            "#,
        )
        .unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.t.values(), vec![0.0]);
        assert_eq!(spec.omega_ratio.values(), vec![10.0, 11.0, 12.0]);
        let d = DiscrepancyMapSpec::new(ModelSpec::preset("hermitian-xy", &[]));
        assert_eq!(d.t.values().len(), 101);
        assert_eq!(d.omega_ratio.values().len(), 59);
        let mut bad = d;
        bad.t = Grid::Values(vec![-1.0, 0.0]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn loads_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.toml");
        std::fs::write(&p, "[model]\nkind = \"preset\"\nname = \"gain-loss\"\n").unwrap();
        let s: SweepSpec = load(&p).unwrap();
        assert_eq!(s.model.label(), "gain-loss");
        let missing: Result<SweepSpec> = load(&dir.path().join("nope.toml"));
        assert!(matches!(missing, Err(Error::Io { .. })));
        std::fs::write(&p, "nonsense = [").unwrap();
        let broken: Result<SweepSpec> = load(&p);
        assert!(matches!(broken, Err(Error::Config(_))));
    }
}
