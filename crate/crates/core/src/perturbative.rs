//! Second-order survival probability and the routes used to cross-check it.
//!
//! [`survival_second_order`] assembles the four terms from the integrated
//! Hermitian and anti-Hermitian parts plus the cross term.
//! [`survival_via_dyson_amplitude`] instead truncates the product of the
//! second-order Dyson amplitudes `<ψ|T₂|ψ>` and `<ψ|T₂†|ψ>`, using the nested
//! operator integral of `H(s)H(s')`; the two agree to quadrature accuracy.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::models::Hamiltonian;
use crate::operator::{
    delta_minus, delta_plus, expectation, hermitian_split, inner_slices, pauli, Matrix,
    StateVector,
};
use crate::quadrature::{
    cumulative_second_order, integrate_double_scalar, integrate_matrix, QuadratureConfig,
};
use crate::scalar::{cx, imag_unit, Cx, Real};

/// Imaginary residue above which the assembled probability is rejected.
pub const RESIDUE_ABORT: f64 = 1e-8;
/// Imaginary residue above which the assembled probability is logged.
pub const RESIDUE_WARN: f64 = 1e-10;
/// `|1 − P₂|` beyond which the second-order regime is considered left.
pub const VALIDITY_DEPARTURE: f64 = 0.5;

/// Term-by-term second-order survival probability over `[t1, t2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurvivalBreakdown<T: Real> {
    pub t1: T,
    pub t2: T,
    /// `−2i <I−>`.
    pub first_order: Cx<T>,
    /// `Δ+²(I−, ψ)`.
    pub delta_plus_term: Cx<T>,
    /// `Δ−²(I+, ψ)`.
    pub delta_minus_term: T,
    pub cross: Cx<T>,
    /// `1 + first_order − delta_plus_term − delta_minus_term − cross`.
    pub total: T,
    pub imaginary_residue: T,
    /// Set when `|1 − total| > 0.5`.
    pub validity_warning: bool,
}

fn check_state<T: Real>(dim: usize, psi: &StateVector<T>) -> Result<()> {
    if psi.dim() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: psi.dim(),
        });
    }
    if !psi.is_normalized() {
        return Err(Error::NotNormalized {
            norm: psi.norm().to_f64_lossy(),
        });
    }
    Ok(())
}

fn check_interval<T: Real>(t1: T, t2: T) -> Result<()> {
    if !(t1.is_finite() && t2.is_finite()) {
        return Err(Error::NonFinite("time interval"));
    }
    if t2 < t1 {
        return Err(Error::Interval {
            t1: t1.to_f64_lossy(),
            t2: t2.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Real part of an assembled probability, rejecting a large imaginary residue.
fn settle<T: Real>(value: Cx<T>, what: &str) -> Result<(T, T)> {
    let residue = value.im.abs();
    if !(value.re.is_finite() && residue.is_finite()) {
        return Err(Error::NonFinite("survival probability"));
    }
    if residue > T::lit(RESIDUE_ABORT) {
        return Err(Error::ImaginaryResidue {
            residue: residue.to_f64_lossy(),
            limit: RESIDUE_ABORT,
        });
    }
    if residue > T::lit(RESIDUE_WARN) {
        log::warn!("{what}: imaginary residue {:e}", residue.to_f64_lossy());
    } else {
        log::trace!("{what}: imaginary residue {:e}", residue.to_f64_lossy());
    }
    Ok((value.re, residue))
}

fn quad_for<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    cfg: &QuadratureConfig<T>,
) -> QuadratureConfig<T> {
    match cfg.frequency {
        Some(_) => *cfg,
        None => cfg.with_frequency(model.max_frequency()),
    }
}

/// `∫_{t1}^{t2} H(s) ds`; exact for a time-independent model.
fn integrate_model<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    t1: T,
    t2: T,
    cfg: &QuadratureConfig<T>,
) -> Result<Matrix<T>> {
    if model.max_frequency() == Some(T::zero()) {
        return Ok(model.at(t1).scale_real(t2 - t1));
    }
    Ok(integrate_matrix(|s| model.at(s), t1, t2, &quad_for(model, cfg))?)
}

fn assemble<T: Real>(
    psi: &StateVector<T>,
    t1: T,
    t2: T,
    int_plus: &Matrix<T>,
    int_minus: &Matrix<T>,
    cross: Cx<T>,
) -> Result<SurvivalBreakdown<T>> {
    let first_order = cx(T::zero(), -T::lit(2.0)) * expectation(int_minus, psi)?;
    let delta_plus_term = delta_plus(int_minus, psi)?;
    let delta_minus_c = delta_minus(int_plus, psi)?;
    let assembled =
        Cx::new(T::one(), T::zero()) + first_order - delta_plus_term - delta_minus_c - cross;
    let (total, imaginary_residue) = settle(assembled, "second-order survival")?;
    Ok(SurvivalBreakdown {
        t1,
        t2,
        first_order,
        delta_plus_term,
        delta_minus_term: delta_minus_c.re,
        cross,
        total,
        imaginary_residue,
        validity_warning: (T::one() - total).abs() > T::lit(VALIDITY_DEPARTURE),
    })
}

/// Second-order survival probability
/// `1 − 2i<I−> − Δ+²(I−) − Δ−²(I+) − cross`.
///
/// A model reporting `max_frequency() == Some(0)` is time-independent: its
/// integrals are exact and the cross term vanishes identically.
pub fn survival_second_order<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    psi: &StateVector<T>,
    t1: T,
    t2: T,
    cfg: &QuadratureConfig<T>,
) -> Result<SurvivalBreakdown<T>> {
    check_interval(t1, t2)?;
    let mut all = survival_second_order_series(model, psi, t1, &[t2], cfg)?;
    Ok(all.pop().expect("one output time"))
}

/// [`survival_second_order`] over `[t1, t]` for each of the non-decreasing
/// `times`, sharing one quadrature sweep.
pub fn survival_second_order_series<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    psi: &StateVector<T>,
    t1: T,
    times: &[T],
    cfg: &QuadratureConfig<T>,
) -> Result<Vec<SurvivalBreakdown<T>>> {
    check_state(model.dim(), psi)?;
    for &t in times {
        check_interval(t1, t)?;
    }
    if model.max_frequency() == Some(T::zero()) {
        let (hp, hm) = hermitian_split(&model.at(t1));
        return times
            .iter()
            .map(|&t| {
                let d = t - t1;
                assemble(psi, t1, t, &hp.scale_real(d), &hm.scale_real(d), Cx::zero())
            })
            .collect();
    }
    let terms = cumulative_second_order(
        |s| hermitian_split(&model.at(s)),
        psi,
        t1,
        times,
        &quad_for(model, cfg),
    )?;
    terms
        .iter()
        .map(|c| assemble(psi, t1, c.t, &c.int_plus, &c.int_minus, c.cross))
        .collect()
}

/// Hermitian reduction `1 − Δ−²(∫H, ψ)`.
///
/// The model must be Hermitian on a sampling grid over `[t1, t2]`
/// (`|H−| <= 1e-12 |H|`).
pub fn survival_hermitian_variance<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    psi: &StateVector<T>,
    t1: T,
    t2: T,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    check_state(model.dim(), psi)?;
    check_interval(t1, t2)?;
    const SAMPLES: usize = 65;
    for k in 0..SAMPLES {
        let t = t1 + (t2 - t1) * T::count(k) / T::count(SAMPLES - 1);
        let h = model.at(t);
        let (_, minus) = hermitian_split(&h);
        let limit = T::tol(1e-12) * h.max_abs();
        if minus.max_abs() > limit {
            return Err(Error::NotHermitian {
                t: t.to_f64_lossy(),
                anti_hermitian_norm: minus.max_abs().to_f64_lossy(),
            });
        }
    }
    let integral = integrate_model(model, t1, t2, cfg)?;
    let (plus, _) = hermitian_split(&integral);
    let variance = delta_minus(&plus, psi)?;
    let (v, _) = settle(variance, "variance")?;
    Ok(T::one() - v)
}

/// Parameters of `H = (ω0/2) σz − i(Γ/2) cos(ωt) σx`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatingDecayParams<T: Real> {
    pub omega0: T,
    pub gamma: T,
    pub omega: T,
}

/// `sin(ωt)/ω`, continuous at `ω = 0`.
fn sin_over<T: Real>(omega: T, t: T) -> T {
    if omega == T::zero() {
        t
    } else {
        (omega * t).sin() / omega
    }
}

/// `2(cos(ωt) − 1)/ω² + t sin(ωt)/ω`, which is
/// `∫_0^t ds ∫_0^s ds' (cos ωs − cos ωs')`. Series for small `ωt`.
pub fn cosine_difference_double_integral<T: Real>(omega: T, t: T) -> T {
    let x = omega * t;
    if x.abs() < T::lit(0.1) {
        // −t²(x²/12 − x⁴/180 + x⁶/6720 − x⁸/453600)
        let x2 = x * x;
        let series = x2
            * (T::one() / T::lit(12.0)
                - x2 * (T::one() / T::lit(180.0)
                    - x2 * (T::one() / T::lit(6720.0) - x2 / T::lit(453600.0))));
        return -t * t * series;
    }
    let half = (x * T::lit(0.5)).sin();
    t * t * (x.sin() / x - T::lit(4.0) * half * half / (x * x))
}

/// Closed-form second-order survival for the oscillating-decay model with
/// `t1 = 0`:
///
/// ```text
/// P₂ = 1 − (Γ/ω) sin(ωt) <σx> − Δ+²(−i(Γ/2ω) sin(ωt) σx) − Δ−²((ω0 t/2) σz)
///        + (Γ ω0/2) <σy> [2(cos ωt − 1)/ω² + t sin(ωt)/ω]
/// ```
///
/// The first-order and cross coefficients follow from integrating the model
/// term by term: `−2i<I−>` with `I− = −i(Γ/2ω) sin(ωt) σx`, and
/// `[H+(s), H−(s')] = (Γ ω0/2) cos(ωs') σy`.
pub fn survival_oscillating_decay_closed_form<T: Real>(
    params: OscillatingDecayParams<T>,
    psi: &StateVector<T>,
    t: T,
) -> Result<T> {
    check_state(2, psi)?;
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let OscillatingDecayParams {
        omega0,
        gamma,
        omega,
    } = params;
    let half = T::lit(0.5);
    let sx = pauli::sigma_x::<T>();
    let sy = pauli::sigma_y::<T>();
    let sz = pauli::sigma_z::<T>();
    let s = sin_over(omega, t);

    let ex = expectation(&sx, psi)?.re;
    let ey = expectation(&sy, psi)?.re;
    let first = -gamma * s * ex;
    let anti = sx.scale(cx(T::zero(), -gamma * half * s));
    let dp = delta_plus(&anti, psi)?.re;
    let dm = delta_minus(&sz.scale_real(omega0 * t * half), psi)?.re;
    let cross_part = gamma * omega0 * half * ey * cosine_difference_double_integral(omega, t);
    Ok(T::one() + first - dp - dm + cross_part)
}

/// Survival from the product of truncated Dyson amplitudes.
///
/// `a = <ψ|1 − i∫H − ∫ds∫^s ds' H(s)H(s')|ψ>` and
/// `b = <ψ|1 + i∫H† − ∫ds∫^s ds' H†(s')H†(s)|ψ>`; the product is kept through
/// second order: `1 + a₁ + b₁ + a₁b₁ + a₂ + b₂`.
pub fn survival_via_dyson_amplitude<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    psi: &StateVector<T>,
    t1: T,
    t2: T,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    check_state(model.dim(), psi)?;
    check_interval(t1, t2)?;
    let cfg = quad_for(model, cfg);
    let i = imag_unit::<T>();

    let int_h = integrate_matrix(|s| model.at(s), t1, t2, &cfg)?;
    let int_h_dag = integrate_matrix(|s| model.at(s).adjoint(), t1, t2, &cfg)?;
    let a1 = -i * expectation(&int_h, psi)?;
    let b1 = i * expectation(&int_h_dag, psi)?;

    let amps = psi.amplitudes();
    let dim = psi.dim();
    // Cache H(s) for the outer variable, which is fixed across an inner sweep.
    let mut outer: Option<(T, Matrix<T>)> = None;
    let mut v = vec![Cx::zero(); dim];
    let mut w = vec![Cx::zero(); dim];
    let a2 = -integrate_double_scalar(
        |s, sp| {
            if outer.as_ref().map(|(t, _)| *t != s).unwrap_or(true) {
                outer = Some((s, model.at(s)));
            }
            let hs = &outer.as_ref().expect("cached").1;
            model.at(sp).apply_into(amps, &mut v);
            hs.apply_into(&v, &mut w);
            inner_slices(amps, &w)
        },
        t1,
        t2,
        &cfg,
    )?;

    let mut outer: Option<(T, Matrix<T>)> = None;
    let b2 = -integrate_double_scalar(
        |s, sp| {
            if outer.as_ref().map(|(t, _)| *t != s).unwrap_or(true) {
                outer = Some((s, model.at(s).adjoint()));
            }
            let hs_dag = &outer.as_ref().expect("cached").1;
            hs_dag.apply_into(amps, &mut v);
            model.at(sp).adjoint().apply_into(&v, &mut w);
            inner_slices(amps, &w)
        },
        t1,
        t2,
        &cfg,
    )?;

    let one = Cx::new(T::one(), T::zero());
    let product = one + a1 + b1 + a1 * b1 + a2 + b2;
    let (p, _) = settle(product, "Dyson-amplitude survival")?;
    Ok(p)
}

/// First Magnus term `Ω₁ = −i ∫_{t1}^{t2} H(s) ds`.
pub fn magnus_first_order<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    t1: T,
    t2: T,
    cfg: &QuadratureConfig<T>,
) -> Result<Matrix<T>> {
    check_interval(t1, t2)?;
    let integral = integrate_model(model, t1, t2, cfg)?;
    Ok(integral.scale(cx(T::zero(), -T::one())))
}

/// Survival under projective measurements at each of `instants`.
#[derive(Clone, Debug, PartialEq)]
pub struct RepeatedSurvival<T: Real> {
    pub value: T,
    /// Second-order survival of each interval.
    pub factors: Vec<T>,
    /// Interval indices whose factor lies outside `[0, 1.1]`.
    pub flagged: Vec<usize>,
}

impl<T: Real> RepeatedSurvival<T> {
    pub fn validity_warning(&self) -> bool {
        !self.flagged.is_empty()
    }
}

/// Product of second-order survivals over consecutive intervals between
/// `instants`, modelling projection back onto `ψ` at each instant.
pub fn repeated_measurement_survival<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    psi: &StateVector<T>,
    instants: &[T],
    cfg: &QuadratureConfig<T>,
) -> Result<RepeatedSurvival<T>> {
    if instants.len() < 2 {
        return Err(Error::Domain(
            "at least two measurement instants are required".into(),
        ));
    }
    if instants.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(
            "measurement instants must be strictly increasing".into(),
        ));
    }
    let upper = T::lit(1.1);
    let mut factors = Vec::with_capacity(instants.len() - 1);
    let mut flagged = Vec::new();
    for (k, w) in instants.windows(2).enumerate() {
        let p = survival_second_order(model, psi, w[0], w[1], cfg)?.total;
        if p < T::zero() || p > upper {
            log::warn!(
                "interval {k} [{}, {}]: second-order factor {} outside [0, 1.1]",
                w[0],
                w[1],
                p
            );
            flagged.push(k);
        }
        factors.push(p);
    }
    let value = factors.iter().fold(T::one(), |acc, &p| acc * p);
    Ok(RepeatedSurvival {
        value,
        factors,
        flagged,
    })
}
