//! Frequency sweeps of the survival probability, discrepancy maps between the
//! exact and second-order values, and the files they are written to.
//!
//! Every result row has the same long form,
//! `model,param_json,state,engine,k,t,value,flag`: sweeps write one row per
//! `(k, state, engine)`, maps one row per `(ω/ω0, t)` with engine
//! `discrepancy` and `k = ω/ω0`. A failed engine leaves `value` empty and
//! puts its error code in `flag`; the rest of the run continues.

mod config;
mod output;
mod svg;

use rayon::prelude::*;

pub use config::{
    load, named_state, DiscrepancyMapSpec, Engine, Grid, MethodName, PropagationSettings,
    QuadratureSettings, StateSpec, SweepSpec, STATE_NAMES,
};
pub use output::{
    config_hash, csv_string, write_csv, write_map, write_sweep, OutputFiles, CSV_HEADER,
};
pub use svg::{heatmap, scatter, Series};

use crate::error::{Error, Result};
use crate::models::{HamiltonianModel, ModelSpec};
use crate::operator::StateVector;
use crate::perturbative::{
    survival_oscillating_decay_closed_form, survival_second_order, survival_second_order_series,
    OscillatingDecayParams,
};
use crate::propagator::{survival_exact, survival_exact_series, PropagationConfig};
use crate::quadrature::QuadratureConfig;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "ZNH_THREADS";
/// Flag for a second-order value that departs from unity beyond the threshold.
pub const FLAG_VALIDITY: &str = "validity";
/// Engine label of discrepancy-map rows.
pub const DISCREPANCY_ENGINE: &str = "discrepancy";

/// One output row.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub model: String,
    pub param_json: String,
    pub state: String,
    pub engine: String,
    pub k: f64,
    pub t: f64,
    pub value: Option<f64>,
    /// Empty when unset.
    pub flag: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub k: f64,
    pub state: String,
    pub engine: String,
    pub message: String,
    pub numerical: bool,
}

impl Failure {
    fn new(k: f64, state: &str, engine: &str, err: &Error) -> Self {
        Failure {
            k,
            state: state.to_string(),
            engine: engine.to_string(),
            message: err.to_string(),
            numerical: err.is_numerical(),
        }
    }
}

/// All engines at one `(k, state)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub k: u32,
    pub state: String,
    pub exact: Option<f64>,
    pub second_order: Option<f64>,
    pub closed_form: Option<f64>,
    pub validity_warning: bool,
}

impl SweepPoint {
    /// `|P_exact − P₂|` when both are available.
    pub fn discrepancy(&self) -> Option<f64> {
        Some((self.exact? - self.second_order?).abs())
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub model: String,
    pub omega0: f64,
    pub t_obs: f64,
    /// Sorted by `(k, state)`, engines in the order requested.
    pub records: Vec<Record>,
    pub points: Vec<SweepPoint>,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug)]
pub struct MapResult {
    pub model: String,
    pub omega0: f64,
    pub state: String,
    pub omega_ratios: Vec<f64>,
    /// Absolute times.
    pub times: Vec<f64>,
    /// `discrepancy[i][j]` at `omega_ratios[i]`, `times[j]`.
    pub discrepancy: Vec<Vec<Option<f64>>>,
    pub records: Vec<Record>,
    pub failures: Vec<Failure>,
}

/// True if any engine failed numerically (as opposed to a bad input).
pub fn has_numerical_failure(failures: &[Failure]) -> bool {
    failures.iter().any(|f| f.numerical)
}

fn departs(value: f64, departure: f64) -> bool {
    (1.0 - value).abs() > departure
}

/// Parameters of the oscillating-decay closed form, read from a preset spec.
fn closed_form_params(spec: &ModelSpec) -> Result<OscillatingDecayParams<f64>> {
    if spec.label() != "oscillating-decay" {
        return Err(Error::Config(
            "the closed form needs the oscillating-decay preset".into(),
        ));
    }
    Ok(OscillatingDecayParams {
        omega0: spec.param("omega0").unwrap_or(1.0),
        gamma: spec.param("gamma").unwrap_or(0.0),
        omega: spec.param("omega").unwrap_or(1.0),
    })
}

/// Survival of `psi` over `[0, t]` by one engine.
pub fn evaluate_engine(
    engine: Engine,
    spec: &ModelSpec,
    model: &HamiltonianModel<f64>,
    psi: &StateVector<f64>,
    t: f64,
    prop: &PropagationConfig<f64>,
    quad: &QuadratureConfig<f64>,
) -> Result<f64> {
    match engine {
        Engine::Exact => survival_exact(model, psi, 0.0, t, prop),
        Engine::SecondOrder => survival_second_order(model, psi, 0.0, t, quad).map(|b| b.total),
        Engine::ClosedForm => {
            survival_oscillating_decay_closed_form(closed_form_params(spec)?, psi, t)
        }
    }
}

/// Single survival value, as computed by `znh survive`.
pub fn survive(
    spec: &ModelSpec,
    state: &StateSpec,
    t: f64,
    engine: Engine,
    prop: &PropagationSettings,
    quad: &QuadratureSettings,
) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Config(format!("t must be finite and >= 0, got {t}")));
    }
    let model = spec.build::<f64>()?;
    let psi = state.resolve()?;
    evaluate_engine(engine, spec, &model, &psi, t, &prop.build()?, &quad.build()?)
}

/// Runs every `(k, state)` job in the current rayon pool. Fails only on an
/// invalid spec; engine failures are recorded in the rows.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let omega0 = spec.omega0()?;
    let t_obs = spec.t_obs()?;
    let prop = spec.propagation.build()?;
    let quad = spec.quadrature.build()?;
    let mut states = spec
        .states
        .iter()
        .map(|s| Ok((s.label().to_string(), s.resolve()?)))
        .collect::<Result<Vec<_>>>()?;
    states.sort_by(|a, b| a.0.cmp(&b.0));
    let mut engines = Vec::new();
    for e in &spec.engines {
        if !engines.contains(e) {
            engines.push(*e);
        }
    }

    let jobs: Vec<(u32, usize)> = spec
        .k_values()
        .into_iter()
        .flat_map(|k| (0..states.len()).map(move |s| (k, s)))
        .collect();
    log::info!(
        "sweep {}: {} jobs x {} engines",
        spec.model.label(),
        jobs.len(),
        engines.len()
    );

    let outcomes: Vec<(Vec<Record>, SweepPoint, Vec<Failure>)> = jobs
        .par_iter()
        .map(|&(k, s)| {
            let (label, psi) = &states[s];
            let kf = f64::from(k);
            let model_spec = spec.model.at_ratio(kf, omega0);
            let param_json = model_spec.params_json();
            let built = model_spec.build::<f64>();
            let mut point = SweepPoint {
                k,
                state: label.clone(),
                exact: None,
                second_order: None,
                closed_form: None,
                validity_warning: false,
            };
            let mut records = Vec::with_capacity(engines.len());
            let mut failures = Vec::new();
            for &engine in &engines {
                let outcome = built.as_ref().map_err(|e| Error::Config(e.to_string())).and_then(|m| {
                    evaluate_engine(engine, &model_spec, m, psi, t_obs, &prop, &quad)
                });
                let (value, flag) = match outcome {
                    Ok(v) => {
                        let flagged = engine != Engine::Exact && departs(v, spec.departure);
                        (Some(v), if flagged { FLAG_VALIDITY } else { "" })
                    }
                    Err(e) => {
                        log::warn!("k={k} state={label} engine={}: {e}", engine.as_str());
                        failures.push(Failure::new(kf, label, engine.as_str(), &e));
                        (None, e.code())
                    }
                };
                match engine {
                    Engine::Exact => point.exact = value,
                    Engine::SecondOrder => {
                        point.second_order = value;
                        point.validity_warning = flag == FLAG_VALIDITY;
                    }
                    Engine::ClosedForm => point.closed_form = value,
                }
                records.push(Record {
                    model: spec.model.label().to_string(),
                    param_json: param_json.clone(),
                    state: label.clone(),
                    engine: engine.as_str().to_string(),
                    k: kf,
                    t: t_obs,
                    value,
                    flag: flag.to_string(),
                });
            }
            (records, point, failures)
        })
        .collect();

    let mut result = SweepResult {
        model: spec.model.label().to_string(),
        omega0,
        t_obs,
        records: Vec::new(),
        points: Vec::new(),
        failures: Vec::new(),
    };
    for (records, point, failures) in outcomes {
        result.records.extend(records);
        result.points.push(point);
        result.failures.extend(failures);
    }
    Ok(result)
}

/// `|P_exact − P₂|` over the grid. One propagation and one cumulative
/// quadrature sweep per frequency ratio, run in the current rayon pool.
pub fn run_discrepancy_map(spec: &DiscrepancyMapSpec) -> Result<MapResult> {
    spec.validate()?;
    let omega0 = spec.omega0()?;
    let prop = spec.propagation.build()?;
    let quad = spec.quadrature.build()?;
    let psi = spec.state.resolve()?;
    let label = spec.state.label().to_string();
    let ratios = spec.omega_ratio.values();
    let times: Vec<f64> = spec.t.values().iter().map(|t| t / omega0).collect();
    log::info!(
        "map {}: {} x {} cells",
        spec.model.label(),
        ratios.len(),
        times.len()
    );

    let columns: Vec<(Vec<Option<f64>>, Vec<Record>, Vec<Failure>)> = ratios
        .par_iter()
        .map(|&ratio| {
            let model_spec = spec.model.at_ratio(ratio, omega0);
            let param_json = model_spec.params_json();
            let mut failures = Vec::new();
            let mut fail = |engine: &str, e: Error| {
                log::warn!("ratio={ratio} engine={engine}: {e}");
                let code = e.code();
                failures.push(Failure::new(ratio, &label, engine, &e));
                code
            };
            let (exact, second) = match model_spec.build::<f64>() {
                Ok(model) => (
                    survival_exact_series(&model, &psi, 0.0, &times, &prop)
                        .map_err(|e| fail(Engine::Exact.as_str(), e)),
                    survival_second_order_series(&model, &psi, 0.0, &times, &quad)
                        .map_err(|e| fail(Engine::SecondOrder.as_str(), e)),
                ),
                Err(e) => {
                    let code = fail(DISCREPANCY_ENGINE, e);
                    (Err(code), Err(code))
                }
            };
            let mut values = Vec::with_capacity(times.len());
            let mut records = Vec::with_capacity(times.len());
            for (j, &t) in times.iter().enumerate() {
                let (value, flag) = match (&exact, &second) {
                    (Ok(pe), Ok(p2)) => {
                        let flagged = departs(p2[j].total, spec.departure);
                        (
                            Some((pe[j] - p2[j].total).abs()),
                            if flagged { FLAG_VALIDITY } else { "" },
                        )
                    }
                    (Err(code), _) | (_, Err(code)) => (None, *code),
                };
                values.push(value);
                records.push(Record {
                    model: spec.model.label().to_string(),
                    param_json: param_json.clone(),
                    state: label.clone(),
                    engine: DISCREPANCY_ENGINE.to_string(),
                    k: ratio,
                    t,
                    value,
                    flag: flag.to_string(),
                });
            }
            (values, records, failures)
        })
        .collect();

    let mut result = MapResult {
        model: spec.model.label().to_string(),
        omega0,
        state: label.clone(),
        omega_ratios: ratios,
        times,
        discrepancy: Vec::new(),
        records: Vec::new(),
        failures: Vec::new(),
    };
    for (values, records, failures) in columns {
        result.discrepancy.push(values);
        result.records.extend(records);
        result.failures.extend(failures);
    }
    Ok(result)
}

/// Parses a `ZNH_THREADS` value: unset or empty means no cap.
pub fn thread_limit(value: Option<&str>) -> Result<Option<usize>> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

/// Worker pool with at most `threads` workers (rayon's default otherwise).
pub fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Description of a preset for `znh presets`.
#[derive(Clone, Copy, Debug)]
pub struct PresetInfo {
    pub name: &'static str,
    pub hamiltonian: &'static str,
    pub params: &'static [(&'static str, &'static str)],
    pub note: &'static str,
}

pub const PRESETS: [PresetInfo; 4] = [
    PresetInfo {
        name: "hermitian-xy",
        hamiltonian: "H = lambda*eta*sin(omega t) sx + lambda*(1-eta)*cos(omega t) sy",
        params: &[
            ("lambda", "coupling strength (default 0)"),
            ("eta", "split between the sx and sy terms (default 0)"),
            ("omega", "oscillation frequency (default 1)"),
        ],
        note: "Hermitian; the time integral vanishes over every full period",
    },
    PresetInfo {
        name: "decaying-qubit",
        hamiltonian: "H = (omega/2) sx - i(gamma/2)(sz + 1) + kappa sy",
        params: &[
            ("omega", "drive frequency (default 1)"),
            ("gamma", "decay rate of the upper level, >= 0 (default 0)"),
            ("kappa", "sy coupling (default 0)"),
        ],
        note: "loss on one level only",
    },
    PresetInfo {
        name: "gain-loss",
        hamiltonian: "H = (omega/2) sx - i(gamma/2) sz + kappa sy",
        params: &[
            ("omega", "drive frequency (default 1)"),
            ("gamma", "balanced loss/gain rate, >= 0 (default 0)"),
            ("kappa", "sy coupling (default 0)"),
        ],
        note: "survival may exceed 1",
    },
    PresetInfo {
        name: "oscillating-decay",
        hamiltonian: "H = (omega0/2) sz - i(gamma/2) cos(omega t) sx",
        params: &[
            ("omega0", "level splitting (default 1)"),
            ("gamma", "decay amplitude, >= 0 (default 0)"),
            ("omega", "modulation frequency (default 1)"),
        ],
        note: "has a closed-form second-order survival (engine closed_form)",
    },
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FourierSpec;

    fn zero_model() -> ModelSpec {
        ModelSpec::Fourier(FourierSpec {
            dim: 2,
            static_term: vec![[0.0, 0.0]; 4],
            modes: vec![],
        })
    }

    #[test]
    fn degenerate_sweep() {
        let mut spec = SweepSpec::new(zero_model());
        spec.k_min = 1;
        spec.k_max = 1;
        let r = run_sweep(&spec).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.points[0].exact, Some(1.0));
        assert_eq!(r.points[0].second_order, Some(1.0));
        assert_eq!(r.points[0].discrepancy(), Some(0.0));
        assert!(r.failures.is_empty());
    }

    #[test]
    fn sweep_rows_are_sorted_and_complete() {
        let mut spec = SweepSpec::new(ModelSpec::preset(
            "oscillating-decay",
            &[("gamma", 0.1)],
        ));
        spec.k_min = 2;
        spec.k_max = 4;
        spec.states = vec![StateSpec::Named("plus_y".into()), StateSpec::Named("minus".into())];
        spec.engines = vec![Engine::SecondOrder, Engine::ClosedForm, Engine::Exact];
        let r = run_sweep(&spec).unwrap();
        assert_eq!(r.records.len(), 3 * 2 * 3);
        let keys: Vec<(f64, &str, &str)> = r
            .records
            .iter()
            .map(|x| (x.k, x.state.as_str(), x.engine.as_str()))
            .collect();
        assert_eq!(keys[0], (2.0, "minus", "second_order"));
        assert_eq!(keys[3], (2.0, "plus_y", "second_order"));
        assert_eq!(keys[17], (4.0, "plus_y", "exact"));
        assert!(r.records.iter().all(|x| x.model == "oscillating-decay"));
        assert!(r.records[0].param_json.contains("\"omega\":2.0"));
        for p in &r.points {
            let (a, b) = (p.second_order.unwrap(), p.closed_form.unwrap());
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_records_failures_and_continues() {
        // A huge growth rate overflows the propagation but not the quadrature.
        let mut spec = SweepSpec::new(ModelSpec::preset(
            "gain-loss",
            &[("gamma", 1e3)],
        ));
        spec.k_min = 1;
        spec.k_max = 2;
        spec.t_obs = Some(2.0);
        let r = run_sweep(&spec).unwrap();
        assert_eq!(r.records.len(), 4);
        let exact: Vec<&Record> = r.records.iter().filter(|x| x.engine == "exact").collect();
        assert!(exact.iter().all(|x| x.value.is_none() && !x.flag.is_empty()));
        assert!(has_numerical_failure(&r.failures));
        let second: Vec<&Record> = r.records.iter().filter(|x| x.engine == "second_order").collect();
        // Far outside the short-time regime: flagged, or aborted on its own.
        assert!(second.iter().all(|x| !x.flag.is_empty()));
    }

    #[test]
    fn map_zero_time_is_zero() {
        let mut spec = DiscrepancyMapSpec::new(ModelSpec::preset(
            "oscillating-decay",
            &[("gamma", 0.1)],
        ));
        spec.t = Grid::Values(vec![0.0]);
        spec.omega_ratio = Grid::Linear {
            min: 1.0,
            max: 3.0,
            points: 5,
        };
        let r = run_discrepancy_map(&spec).unwrap();
        assert_eq!(r.records.len(), 5);
        assert!(r.records.iter().all(|x| x.value == Some(0.0) && x.engine == "discrepancy"));
        assert_eq!(r.discrepancy.len(), 5);
    }

    #[test]
    fn map_shape_and_values() {
        let mut spec = DiscrepancyMapSpec::new(ModelSpec::preset(
            "hermitian-xy",
            &[("lambda", 1.0), ("eta", 0.5)],
        ));
        spec.omega_ratio = Grid::Values(vec![10.0, 20.0]);
        spec.t = Grid::Linear {
            min: 0.0,
            max: 1.0,
            points: 4,
        };
        let r = run_discrepancy_map(&spec).unwrap();
        assert_eq!(r.records.len(), 8);
        assert_eq!(r.records[4].k, 20.0);
        assert_eq!(r.records[7].t, 1.0);
        let first = &r.records[1];
        let model = spec.model.at_ratio(10.0, 1.0).build::<f64>().unwrap();
        let psi = crate::operator::pauli::plus::<f64>();
        let pe = survival_exact(&model, &psi, 0.0, first.t, &PropagationConfig::default()).unwrap();
        let p2 = survival_second_order(&model, &psi, 0.0, first.t, &QuadratureConfig::default())
            .unwrap()
            .total;
        assert!((first.value.unwrap() - (pe - p2).abs()).abs() < 1e-12);
    }

    #[test]
    fn survive_engines() {
        let spec = ModelSpec::preset("oscillating-decay", &[("gamma", 0.2), ("omega", 5.0)]);
        let state = StateSpec::Named("plus_x".into());
        let p = PropagationSettings::default();
        let q = QuadratureSettings::default();
        let a = survive(&spec, &state, 0.3, Engine::SecondOrder, &p, &q).unwrap();
        let b = survive(&spec, &state, 0.3, Engine::ClosedForm, &p, &q).unwrap();
        let c = survive(&spec, &state, 0.3, Engine::Exact, &p, &q).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!((a - c).abs() < 1e-3);
        let other = ModelSpec::preset("gain-loss", &[]);
        assert!(matches!(
            survive(&other, &state, 0.3, Engine::ClosedForm, &p, &q),
            Err(Error::Config(_))
        ));
        assert!(survive(&spec, &state, -1.0, Engine::Exact, &p, &q).is_err());
    }

    #[test]
    fn thread_limits() {
        assert_eq!(thread_limit(None).unwrap(), None);
        assert_eq!(thread_limit(Some("")).unwrap(), None);
        assert_eq!(thread_limit(Some(" 3 ")).unwrap(), Some(3));
        assert!(thread_limit(Some("0")).is_err());
        assert!(thread_limit(Some("many")).is_err());
        let pool = build_pool(Some(2)).unwrap();
        assert_eq!(pool.current_num_threads(), 2);
    }

    #[test]
    fn preset_catalogue_matches_models() {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        assert_eq!(names, crate::models::PRESET_NAMES.to_vec());
        for p in PRESETS {
            let params = p.params.iter().map(|(k, _)| (*k, 0.5)).collect::<Vec<_>>();
            ModelSpec::preset(p.name, &params).build::<f64>().unwrap();
        }
    }
}
