//! Structured-text model descriptions.
//!
//! A model is either a preset with named parameters
//!
//! ```toml
//! kind = "preset"
//! name = "oscillating-decay"
//! params = { omega0 = 1.0, gamma = 0.1, omega = 10.0 }
//! ```
//!
//! or an explicit Fourier form whose matrices are flat row-major lists of
//! `[re, im]` pairs:
//!
//! ```toml
//! kind = "fourier"
//! dim = 2
//! static_term = [[0.5, 0], [0, 0], [0, 0], [-0.5, 0]]
//!
//! [[modes]]
//! frequency = 10.0
//! cos = [[0, 0], [0, -0.05], [0, -0.05], [0, 0]]
//! sin = [[0, 0], [0, 0], [0, 0], [0, 0]]
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FourierHamiltonian, FourierMode, HamiltonianModel, ModelPreset};
use crate::error::{Error, Result};
use crate::operator::Matrix;
use crate::scalar::{cx, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Preset {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Fourier(FourierSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierSpec {
    pub dim: usize,
    pub static_term: Vec<[f64; 2]>,
    #[serde(default)]
    pub modes: Vec<ModeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub frequency: f64,
    pub cos: Vec<[f64; 2]>,
    pub sin: Vec<[f64; 2]>,
}

fn matrix_from_pairs<T: Real>(dim: usize, entries: &[[f64; 2]], what: &str) -> Result<Matrix<T>> {
    if entries.len() != dim * dim {
        return Err(Error::Config(format!(
            "{what}: expected {} entries for dim {dim}, found {}",
            dim * dim,
            entries.len()
        )));
    }
    Matrix::from_row_major(
        dim,
        entries
            .iter()
            .map(|[re, im]| cx(T::lit(*re), T::lit(*im)))
            .collect(),
    )
}

impl ModelSpec {
    pub fn preset(name: &str, params: &[(&str, f64)]) -> Self {
        ModelSpec::Preset {
            name: name.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn build<T: Real>(&self) -> Result<HamiltonianModel<T>> {
        match self {
            ModelSpec::Preset { name, params } => {
                ModelPreset::from_params(name, params).map(HamiltonianModel::Preset)
            }
            ModelSpec::Fourier(f) => {
                if f.dim == 0 {
                    return Err(Error::Config("fourier model: dim must be positive".into()));
                }
                let static_term = matrix_from_pairs(f.dim, &f.static_term, "static_term")?;
                let modes = f
                    .modes
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        Ok(FourierMode {
                            frequency: T::lit(m.frequency),
                            cos_coeff: matrix_from_pairs(f.dim, &m.cos, &format!("modes[{k}].cos"))?,
                            sin_coeff: matrix_from_pairs(f.dim, &m.sin, &format!("modes[{k}].sin"))?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                FourierHamiltonian::new(static_term, modes).map(HamiltonianModel::Fourier)
            }
        }
    }

    /// Model label used in output files.
    pub fn label(&self) -> &str {
        match self {
            ModelSpec::Preset { name, .. } => name,
            ModelSpec::Fourier(_) => "fourier",
        }
    }

    /// Parameters as compact JSON with sorted keys.
    pub fn params_json(&self) -> String {
        match self {
            ModelSpec::Preset { params, .. } => {
                serde_json::to_string(params).expect("map of floats serializes")
            }
            ModelSpec::Fourier(f) => serde_json::to_string(f).expect("fourier spec serializes"),
        }
    }

    /// Copy with the named preset parameter overridden; Fourier specs are
    /// returned unchanged.
    pub fn with_param(&self, key: &str, value: f64) -> Self {
        match self {
            ModelSpec::Preset { name, params } => {
                let mut params = params.clone();
                params.insert(key.to_string(), value);
                ModelSpec::Preset {
                    name: name.clone(),
                    params,
                }
            }
            other => other.clone(),
        }
    }

    /// The model at `ω = k·ω0`: a preset gets `omega = k·ω0`, a Fourier
    /// model has every mode frequency multiplied by `k`.
    pub fn at_ratio(&self, k: f64, omega0: f64) -> Self {
        match self {
            ModelSpec::Preset { .. } => self.with_param("omega", k * omega0),
            ModelSpec::Fourier(f) => {
                let mut f = f.clone();
                for m in &mut f.modes {
                    m.frequency *= k;
                }
                ModelSpec::Fourier(f)
            }
        }
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        match self {
            ModelSpec::Preset { params, .. } => params.get(key).copied(),
            ModelSpec::Fourier(_) => None,
        }
    }
}
