//! Time-dependent Hamiltonians: the two-level presets, a general Fourier
//! form, user closures, and the interaction-picture transform.

mod frame;
mod spec;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{pauli, Matrix};
use crate::quadrature::{adaptive_real, QuadratureError};
use crate::scalar::{cx, Real};

pub use frame::{FrameGenerator, InteractionFrame, ZERO_INTEGRAL_TOL};
pub use spec::{FourierSpec, ModeSpec, ModelSpec};

/// Anything that yields an operator `H(t)` of fixed dimension.
pub trait Hamiltonian<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn at(&self, t: T) -> Matrix<T>;

    /// Highest angular frequency in the time dependence, when known.
    /// `Some(0)` means time-independent.
    fn max_frequency(&self) -> Option<T> {
        None
    }
}

impl<T: Real, H: Hamiltonian<T> + ?Sized> Hamiltonian<T> for &H {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn at(&self, t: T) -> Matrix<T> {
        (**self).at(t)
    }
    fn max_frequency(&self) -> Option<T> {
        (**self).max_frequency()
    }
}

/// Scalar drive frequency ω(t) of the σx term in the driven presets.
#[derive(Clone)]
pub enum DriveProfile<T: Real> {
    Constant(T),
    /// `ω(t) = offset + slope·t`.
    Linear { offset: T, slope: T },
    Custom(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: Real> fmt::Debug for DriveProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriveProfile::Constant(w) => write!(f, "Constant({w})"),
            DriveProfile::Linear { offset, slope } => {
                write!(f, "Linear {{ offset: {offset}, slope: {slope} }}")
            }
            DriveProfile::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl<T: Real> DriveProfile<T> {
    pub fn custom(f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        DriveProfile::Custom(Arc::new(f))
    }

    pub fn value(&self, t: T) -> T {
        match self {
            DriveProfile::Constant(w) => *w,
            DriveProfile::Linear { offset, slope } => *offset + *slope * t,
            DriveProfile::Custom(f) => f(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, DriveProfile::Constant(_))
    }

    /// `Ω(t) = ∫_{t1}^{t} ω(s) ds`, analytic for a constant drive, adaptive
    /// quadrature to 1e-12 otherwise.
    pub fn phase(&self, t1: T, t: T) -> Result<T> {
        match self {
            DriveProfile::Constant(w) => Ok(*w * (t - t1)),
            _ => {
                let (lo, hi, sign) = if t >= t1 {
                    (t1, t, T::one())
                } else {
                    (t, t1, -T::one())
                };
                let v = adaptive_real(|s| self.value(s), lo, hi, T::tol(1e-12))
                    .map_err(Error::from)?;
                Ok(sign * v)
            }
        }
    }

    /// Like [`phase`](Self::phase) but returns the last estimate if the
    /// adaptive rule did not meet its tolerance.
    pub(crate) fn phase_lossy(&self, t1: T, t: T) -> T {
        if let DriveProfile::Constant(w) = self {
            return *w * (t - t1);
        }
        let (lo, hi, sign) = if t >= t1 {
            (t1, t, T::one())
        } else {
            (t, t1, -T::one())
        };
        match adaptive_real(|s| self.value(s), lo, hi, T::tol(1e-12)) {
            Ok(v) => sign * v,
            Err(QuadratureError::NotConverged { estimate, .. }) => sign * estimate,
            Err(_) => T::nan(),
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match self {
            DriveProfile::Constant(w) => w.is_finite(),
            DriveProfile::Linear { offset, slope } => offset.is_finite() && slope.is_finite(),
            DriveProfile::Custom(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("drive frequency must be finite".into()))
        }
    }
}

/// The four two-level presets. Parameters are angular frequencies with ħ = 1.
#[derive(Clone, Debug)]
pub enum ModelPreset<T: Real> {
    /// `H = λη sin(ωt) σx + λ(1−η) cos(ωt) σy`.
    HermitianXy { lambda: T, eta: T, omega: T },
    /// `H = (ω(t)/2) σx − i(Γ/2)(σz + 1) + κ σy`.
    DecayingQubit {
        drive: DriveProfile<T>,
        gamma: T,
        kappa: T,
    },
    /// `H = (ω(t)/2) σx − i(Γ/2) σz + κ σy`.
    GainLoss {
        drive: DriveProfile<T>,
        gamma: T,
        kappa: T,
    },
    /// `H = (ω0/2) σz − i(Γ/2) cos(ωt) σx`.
    OscillatingDecay { omega0: T, gamma: T, omega: T },
}

/// Preset names accepted by [`ModelPreset::from_params`].
pub const PRESET_NAMES: [&str; 4] = [
    "hermitian-xy",
    "decaying-qubit",
    "gain-loss",
    "oscillating-decay",
];

impl<T: Real> ModelPreset<T> {
    pub fn name(&self) -> &'static str {
        match self {
            ModelPreset::HermitianXy { .. } => "hermitian-xy",
            ModelPreset::DecayingQubit { .. } => "decaying-qubit",
            ModelPreset::GainLoss { .. } => "gain-loss",
            ModelPreset::OscillatingDecay { .. } => "oscillating-decay",
        }
    }

    /// Builds a preset from named parameters (`lambda`, `eta`, `omega`,
    /// `omega0`, `gamma`, `kappa`). Missing parameters default to 0, except
    /// `omega` and `omega0`, which default to 1.
    pub fn from_params(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed: &[&str] = match name {
            "hermitian-xy" => &["lambda", "eta", "omega"],
            "decaying-qubit" | "gain-loss" => &["omega", "gamma", "kappa"],
            "oscillating-decay" => &["omega0", "gamma", "omega"],
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Domain(format!(
                "parameter `{bad}` is not used by preset `{name}` (expected one of {allowed:?})"
            )));
        }
        let get = |key: &str, default: f64| T::lit(params.get(key).copied().unwrap_or(default));
        let preset = match name {
            "hermitian-xy" => ModelPreset::HermitianXy {
                lambda: get("lambda", 0.0),
                eta: get("eta", 0.0),
                omega: get("omega", 1.0),
            },
            "decaying-qubit" => ModelPreset::DecayingQubit {
                drive: DriveProfile::Constant(get("omega", 1.0)),
                gamma: get("gamma", 0.0),
                kappa: get("kappa", 0.0),
            },
            "gain-loss" => ModelPreset::GainLoss {
                drive: DriveProfile::Constant(get("omega", 1.0)),
                gamma: get("gamma", 0.0),
                kappa: get("kappa", 0.0),
            },
            _ => ModelPreset::OscillatingDecay {
                omega0: get("omega0", 1.0),
                gamma: get("gamma", 0.0),
                omega: get("omega", 1.0),
            },
        };
        preset.validate()?;
        Ok(preset)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: T| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be finite")))
            }
        };
        let gamma_ok = |g: T| {
            finite("gamma", g)?;
            if g < T::zero() {
                Err(Error::Domain(format!("gamma must be >= 0, got {g}")))
            } else {
                Ok(())
            }
        };
        match self {
            ModelPreset::HermitianXy { lambda, eta, omega } => {
                finite("lambda", *lambda)?;
                finite("eta", *eta)?;
                finite("omega", *omega)?;
            }
            ModelPreset::DecayingQubit { drive, gamma, kappa }
            | ModelPreset::GainLoss { drive, gamma, kappa } => {
                drive.check()?;
                gamma_ok(*gamma)?;
                finite("kappa", *kappa)?;
            }
            ModelPreset::OscillatingDecay {
                omega0,
                gamma,
                omega,
            } => {
                finite("omega0", *omega0)?;
                gamma_ok(*gamma)?;
                finite("omega", *omega)?;
            }
        }
        Ok(())
    }

    /// Named parameters, in the form accepted by [`from_params`](Self::from_params).
    /// A non-constant drive is reported by its value at `t = 0`.
    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: T| {
            out.insert(k.to_string(), v.to_f64_lossy());
        };
        match self {
            ModelPreset::HermitianXy { lambda, eta, omega } => {
                put("lambda", *lambda);
                put("eta", *eta);
                put("omega", *omega);
            }
            ModelPreset::DecayingQubit { drive, gamma, kappa }
            | ModelPreset::GainLoss { drive, gamma, kappa } => {
                put("omega", drive.value(T::zero()));
                put("gamma", *gamma);
                put("kappa", *kappa);
            }
            ModelPreset::OscillatingDecay {
                omega0,
                gamma,
                omega,
            } => {
                put("omega0", *omega0);
                put("gamma", *gamma);
                put("omega", *omega);
            }
        }
        out
    }

    pub fn evaluate(&self, t: T) -> Matrix<T> {
        let half = T::lit(0.5);
        let sx = pauli::sigma_x::<T>();
        let sy = pauli::sigma_y::<T>();
        let sz = pauli::sigma_z::<T>();
        match self {
            ModelPreset::HermitianXy { lambda, eta, omega } => {
                let (s, c) = (*omega * t).sin_cos();
                &sx.scale_real(*lambda * *eta * s)
                    + &sy.scale_real(*lambda * (T::one() - *eta) * c)
            }
            ModelPreset::DecayingQubit { drive, gamma, kappa } => {
                let mut h = sx.scale_real(drive.value(t) * half);
                let decay = &sz + &pauli::identity();
                h.add_scaled(cx(T::zero(), -*gamma * half), &decay);
                h.add_scaled(cx(*kappa, T::zero()), &sy);
                h
            }
            ModelPreset::GainLoss { drive, gamma, kappa } => {
                let mut h = sx.scale_real(drive.value(t) * half);
                h.add_scaled(cx(T::zero(), -*gamma * half), &sz);
                h.add_scaled(cx(*kappa, T::zero()), &sy);
                h
            }
            ModelPreset::OscillatingDecay {
                omega0,
                gamma,
                omega,
            } => {
                let mut h = sz.scale_real(*omega0 * half);
                h.add_scaled(cx(T::zero(), -*gamma * half * (*omega * t).cos()), &sx);
                h
            }
        }
    }

    /// `(H+(t), H−(t))` written down term by term, independent of
    /// [`crate::operator::hermitian_split`].
    pub fn analytic_parts(&self, t: T) -> (Matrix<T>, Matrix<T>) {
        let half = T::lit(0.5);
        let sx = pauli::sigma_x::<T>();
        let sy = pauli::sigma_y::<T>();
        let sz = pauli::sigma_z::<T>();
        match self {
            ModelPreset::HermitianXy { .. } => (self.evaluate(t), Matrix::zeros(2)),
            ModelPreset::DecayingQubit { drive, gamma, kappa } => {
                let plus = &sx.scale_real(drive.value(t) * half) + &sy.scale_real(*kappa);
                let minus = (&sz + &pauli::identity()).scale(cx(T::zero(), -*gamma * half));
                (plus, minus)
            }
            ModelPreset::GainLoss { drive, gamma, kappa } => {
                let plus = &sx.scale_real(drive.value(t) * half) + &sy.scale_real(*kappa);
                (plus, sz.scale(cx(T::zero(), -*gamma * half)))
            }
            ModelPreset::OscillatingDecay {
                omega0,
                gamma,
                omega,
            } => (
                sz.scale_real(*omega0 * half),
                sx.scale(cx(T::zero(), -*gamma * half * (*omega * t).cos())),
            ),
        }
    }

    pub fn max_frequency(&self) -> Option<T> {
        match self {
            ModelPreset::HermitianXy { omega, .. } | ModelPreset::OscillatingDecay { omega, .. } => {
                Some(omega.abs())
            }
            ModelPreset::DecayingQubit { drive, .. } | ModelPreset::GainLoss { drive, .. } => {
                drive.is_constant().then(T::zero)
            }
        }
    }

    /// Frequency scale of the dynamics: the oscillation frequency for the
    /// oscillating presets, the drive frequency for the driven ones.
    pub fn characteristic_frequency(&self) -> Option<T> {
        match self {
            ModelPreset::HermitianXy { omega, .. } | ModelPreset::OscillatingDecay { omega, .. } => {
                Some(omega.abs())
            }
            ModelPreset::DecayingQubit { drive, .. } | ModelPreset::GainLoss { drive, .. } => {
                match drive {
                    DriveProfile::Constant(w) => Some(w.abs()),
                    _ => None,
                }
            }
        }
    }

    /// Same preset with its oscillation or drive frequency replaced.
    pub fn with_frequency(&self, omega: T) -> Self {
        let mut out = self.clone();
        match &mut out {
            ModelPreset::HermitianXy { omega: w, .. }
            | ModelPreset::OscillatingDecay { omega: w, .. } => *w = omega,
            ModelPreset::DecayingQubit { drive, .. } | ModelPreset::GainLoss { drive, .. } => {
                *drive = DriveProfile::Constant(omega)
            }
        }
        out
    }

    /// Exact Fourier representation; `None` for a non-constant drive.
    pub fn to_fourier(&self) -> Option<FourierHamiltonian<T>> {
        let zero = Matrix::zeros(2);
        match self {
            ModelPreset::HermitianXy { lambda, eta, omega } => {
                let sx = pauli::sigma_x::<T>().scale_real(*lambda * *eta);
                let sy = pauli::sigma_y::<T>().scale_real(*lambda * (T::one() - *eta));
                FourierHamiltonian::new(
                    zero.clone(),
                    vec![FourierMode {
                        frequency: omega.abs(),
                        cos_coeff: sy,
                        sin_coeff: if *omega < T::zero() { -sx } else { sx },
                    }],
                )
                .ok()
            }
            ModelPreset::DecayingQubit { drive, .. } | ModelPreset::GainLoss { drive, .. } => {
                if !drive.is_constant() {
                    return None;
                }
                FourierHamiltonian::new(self.evaluate(T::zero()), vec![]).ok()
            }
            ModelPreset::OscillatingDecay {
                omega0,
                gamma,
                omega,
            } => FourierHamiltonian::new(
                pauli::sigma_z::<T>().scale_real(*omega0 * T::lit(0.5)),
                vec![FourierMode {
                    frequency: omega.abs(),
                    cos_coeff: pauli::sigma_x::<T>()
                        .scale(cx(T::zero(), -*gamma * T::lit(0.5))),
                    sin_coeff: zero,
                }],
            )
            .ok(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierMode<T: Real> {
    pub frequency: T,
    pub cos_coeff: Matrix<T>,
    pub sin_coeff: Matrix<T>,
}

/// `H(t) = H_static + Σ_k [cos(ω_k t) C_k + sin(ω_k t) S_k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierHamiltonian<T: Real> {
    static_term: Matrix<T>,
    modes: Vec<FourierMode<T>>,
}

impl<T: Real> FourierHamiltonian<T> {
    pub fn new(static_term: Matrix<T>, modes: Vec<FourierMode<T>>) -> Result<Self> {
        let dim = static_term.dim();
        for m in &modes {
            for c in [&m.cos_coeff, &m.sin_coeff] {
                if c.dim() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        found: c.dim(),
                    });
                }
                if !c.is_finite() {
                    return Err(Error::NonFinite("Fourier coefficient"));
                }
            }
            if !(m.frequency.is_finite() && m.frequency >= T::zero()) {
                return Err(Error::Domain(format!(
                    "mode frequency must be finite and >= 0, got {}",
                    m.frequency
                )));
            }
        }
        if !static_term.is_finite() {
            return Err(Error::NonFinite("static term"));
        }
        Ok(FourierHamiltonian { static_term, modes })
    }

    pub fn dim(&self) -> usize {
        self.static_term.dim()
    }

    pub fn static_term(&self) -> &Matrix<T> {
        &self.static_term
    }

    pub fn modes(&self) -> &[FourierMode<T>] {
        &self.modes
    }

    pub fn evaluate(&self, t: T) -> Matrix<T> {
        let mut h = self.static_term.clone();
        for m in &self.modes {
            let (s, c) = (m.frequency * t).sin_cos();
            h.add_scaled(cx(c, T::zero()), &m.cos_coeff);
            h.add_scaled(cx(s, T::zero()), &m.sin_coeff);
        }
        h
    }

    pub fn max_frequency(&self) -> T {
        self.modes
            .iter()
            .fold(T::zero(), |m, mode| m.max(mode.frequency))
    }

    /// Exact `∫_{t1}^{t2} H(s) ds`.
    pub fn integral(&self, t1: T, t2: T) -> Matrix<T> {
        let mut out = self.static_term.scale_real(t2 - t1);
        for m in &self.modes {
            let w = m.frequency;
            let (ci, si) = if w == T::zero() {
                (t2 - t1, T::zero())
            } else {
                (
                    ((w * t2).sin() - (w * t1).sin()) / w,
                    ((w * t1).cos() - (w * t2).cos()) / w,
                )
            };
            out.add_scaled(cx(ci, T::zero()), &m.cos_coeff);
            out.add_scaled(cx(si, T::zero()), &m.sin_coeff);
        }
        out
    }
}

/// A user-supplied `H(t)`.
#[derive(Clone)]
pub struct CustomHamiltonian<T: Real> {
    dim: usize,
    f: Arc<dyn Fn(T) -> Matrix<T> + Send + Sync>,
    max_frequency: Option<T>,
}

impl<T: Real> CustomHamiltonian<T> {
    pub fn new(
        dim: usize,
        max_frequency: Option<T>,
        f: impl Fn(T) -> Matrix<T> + Send + Sync + 'static,
    ) -> Self {
        CustomHamiltonian {
            dim,
            f: Arc::new(f),
            max_frequency,
        }
    }

    /// `H(t) = 0`.
    pub fn zero(dim: usize) -> Self {
        Self::new(dim, Some(T::zero()), move |_| Matrix::zeros(dim))
    }
}

impl<T: Real> fmt::Debug for CustomHamiltonian<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomHamiltonian")
            .field("dim", &self.dim)
            .field("max_frequency", &self.max_frequency)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum HamiltonianModel<T: Real> {
    Preset(ModelPreset<T>),
    Fourier(FourierHamiltonian<T>),
    Custom(CustomHamiltonian<T>),
}

impl<T: Real> HamiltonianModel<T> {
    pub fn preset(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        ModelPreset::from_params(name, params).map(HamiltonianModel::Preset)
    }

    /// Constant `H(t) = h`.
    pub fn constant(h: Matrix<T>) -> Self {
        HamiltonianModel::Fourier(FourierHamiltonian::new(h, vec![]).expect("finite matrix"))
    }

    pub fn custom(
        dim: usize,
        max_frequency: Option<T>,
        f: impl Fn(T) -> Matrix<T> + Send + Sync + 'static,
    ) -> Self {
        HamiltonianModel::Custom(CustomHamiltonian::new(dim, max_frequency, f))
    }

    pub fn name(&self) -> &'static str {
        match self {
            HamiltonianModel::Preset(p) => p.name(),
            HamiltonianModel::Fourier(_) => "fourier",
            HamiltonianModel::Custom(_) => "custom",
        }
    }

    /// `H(t)`; rejects a non-finite time.
    pub fn evaluate(&self, t: T) -> Result<Matrix<T>> {
        if !t.is_finite() {
            return Err(Error::NonFinite("evaluation time"));
        }
        let h = self.at(t);
        if !h.is_finite() {
            return Err(Error::NonFinite("Hamiltonian value"));
        }
        Ok(h)
    }
}

impl<T: Real> Hamiltonian<T> for HamiltonianModel<T> {
    fn dim(&self) -> usize {
        match self {
            HamiltonianModel::Preset(_) => 2,
            HamiltonianModel::Fourier(f) => f.dim(),
            HamiltonianModel::Custom(c) => c.dim,
        }
    }

    fn at(&self, t: T) -> Matrix<T> {
        match self {
            HamiltonianModel::Preset(p) => p.evaluate(t),
            HamiltonianModel::Fourier(f) => f.evaluate(t),
            HamiltonianModel::Custom(c) => (c.f)(t),
        }
    }

    fn max_frequency(&self) -> Option<T> {
        match self {
            HamiltonianModel::Preset(p) => p.max_frequency(),
            HamiltonianModel::Fourier(f) => Some(f.max_frequency()),
            HamiltonianModel::Custom(c) => c.max_frequency,
        }
    }
}

impl<T: Real> From<ModelPreset<T>> for HamiltonianModel<T> {
    fn from(p: ModelPreset<T>) -> Self {
        HamiltonianModel::Preset(p)
    }
}

impl<T: Real> From<FourierHamiltonian<T>> for HamiltonianModel<T> {
    fn from(f: FourierHamiltonian<T>) -> Self {
        HamiltonianModel::Fourier(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::hermitian_split;
    use rand::{Rng, SeedableRng};
    use crate::scalar::Cx;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    #[test]
    fn hermitian_xy_at_zero() {
        let m = HamiltonianModel::<f64>::preset(
            "hermitian-xy",
            &params(&[("lambda", 1.0), ("eta", 0.5), ("omega", 1.0)]),
        )
        .unwrap();
        let h = m.evaluate(0.0).unwrap();
        assert!(h.max_abs_diff(&pauli::sigma_y::<f64>().scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn oscillating_decay_at_quarter_period() {
        let m = HamiltonianModel::<f64>::preset(
            "oscillating-decay",
            &params(&[("omega0", 1.0), ("gamma", 0.1), ("omega", 2.0)]),
        )
        .unwrap();
        let h = m.evaluate(PI / 2.0).unwrap();
        let want = &pauli::sigma_z::<f64>().scale_real(0.5)
            + &pauli::sigma_x::<f64>().scale(c(0.0, 0.05));
        assert!(h.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn gain_loss_is_time_independent() {
        let m = HamiltonianModel::<f64>::preset(
            "gain-loss",
            &params(&[("omega", 1.0), ("gamma", 0.25), ("kappa", 0.0)]),
        )
        .unwrap();
        let want = &pauli::sigma_x::<f64>().scale_real(0.5)
            + &pauli::sigma_z::<f64>().scale(c(0.0, -0.125));
        for t in [0.0, 0.3, 17.0, -4.0] {
            assert!(m.evaluate(t).unwrap().max_abs_diff(&want) < 1e-15);
        }
    }

    #[test]
    fn preset_errors() {
        assert!(matches!(
            HamiltonianModel::<f64>::preset("nope", &BTreeMap::new()),
            Err(Error::UnknownPreset(_))
        ));
        assert!(matches!(
            HamiltonianModel::<f64>::preset("decaying-qubit", &params(&[("gamma", -1.0)])),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            HamiltonianModel::<f64>::preset("gain-loss", &params(&[("lambda", 1.0)])),
            Err(Error::Domain(_))
        ));
        let m = HamiltonianModel::<f64>::constant(pauli::sigma_x());
        assert!(m.evaluate(f64::NAN).is_err());
    }

    fn random_presets(rng: &mut ChaCha8Rng) -> Vec<ModelPreset<f64>> {
        let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
        vec![
            ModelPreset::HermitianXy {
                lambda: u(-2.0, 2.0),
                eta: u(-1.0, 2.0),
                omega: u(0.1, 30.0),
            },
            ModelPreset::DecayingQubit {
                drive: DriveProfile::Constant(u(0.1, 30.0)),
                gamma: u(0.0, 1.0),
                kappa: u(-1.0, 1.0),
            },
            ModelPreset::GainLoss {
                drive: DriveProfile::Linear {
                    offset: u(0.1, 5.0),
                    slope: u(-1.0, 1.0),
                },
                gamma: u(0.0, 1.0),
                kappa: u(-1.0, 1.0),
            },
            ModelPreset::OscillatingDecay {
                omega0: u(0.1, 3.0),
                gamma: u(0.0, 1.0),
                omega: u(0.1, 30.0),
            },
        ]
    }

    #[test]
    fn split_matches_analytic_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            for preset in random_presets(&mut rng) {
                for _ in 0..100 {
                    let t = rng.random_range(-20.0..20.0);
                    let (p, m) = hermitian_split(&preset.evaluate(t));
                    let (ap, am) = preset.analytic_parts(t);
                    assert!(p.max_abs_diff(&ap) <= 1e-14, "{} H+ at {t}", preset.name());
                    assert!(m.max_abs_diff(&am) <= 1e-14, "{} H- at {t}", preset.name());
                }
            }
        }
    }

    #[test]
    fn fourier_form_reproduces_presets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for preset in random_presets(&mut rng) {
            let Some(f) = preset.to_fourier() else {
                continue;
            };
            for _ in 0..50 {
                let t = rng.random_range(-5.0..5.0);
                assert!(f.evaluate(t).max_abs_diff(&preset.evaluate(t)) < 1e-14);
            }
        }
    }

    #[test]
    fn fourier_rejects_bad_modes() {
        let bad = FourierHamiltonian::new(
            Matrix::<f64>::zeros(2),
            vec![FourierMode {
                frequency: -1.0,
                cos_coeff: Matrix::zeros(2),
                sin_coeff: Matrix::zeros(2),
            }],
        );
        assert!(bad.is_err());
        let bad = FourierHamiltonian::new(
            Matrix::<f64>::zeros(2),
            vec![FourierMode {
                frequency: 1.0,
                cos_coeff: Matrix::zeros(3),
                sin_coeff: Matrix::zeros(2),
            }],
        );
        assert!(matches!(bad, Err(Error::Dimension { .. })));
    }

    #[test]
    fn fourier_integral_is_exact() {
        let f = FourierHamiltonian::new(
            pauli::sigma_z::<f64>(),
            vec![FourierMode {
                frequency: 2.0,
                cos_coeff: pauli::sigma_x(),
                sin_coeff: pauli::sigma_y(),
            }],
        )
        .unwrap();
        let got = f.integral(0.0, PI);
        // cos and sin over one full period vanish.
        assert!(got.max_abs_diff(&pauli::sigma_z::<f64>().scale_real(PI)) < 1e-14);
    }

    #[test]
    fn drive_phase() {
        let w0 = 3.0;
        let d = DriveProfile::Constant(w0);
        assert!((d.phase(0.5, 0.5 + 2.0 * PI / w0).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert_eq!(DriveProfile::Constant(0.0).phase(0.0, 9.0).unwrap(), 0.0);
        // ω(s) = ω0 s on [0, 1] integrates to ω0/2 (antiderivative ω0 s²/2).
        let lin = DriveProfile::Linear {
            offset: 0.0,
            slope: w0,
        };
        assert!((lin.phase(0.0, 1.0).unwrap() - w0 / 2.0).abs() < 1e-12);
        let custom = DriveProfile::custom(move |s: f64| w0 * s);
        assert!((custom.phase(0.0, 1.0).unwrap() - w0 / 2.0).abs() < 1e-12);
    }
}
