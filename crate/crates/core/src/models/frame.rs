//! Interaction picture with respect to a self-commuting term `H0(t)`.

use num_traits::Zero;

use super::{DriveProfile, Hamiltonian, HamiltonianModel, ModelPreset};
use crate::error::{Error, Result};
use crate::operator::{commutator, expm, pauli, Matrix};
use crate::quadrature::{integrate_matrix, GaussLegendre, QuadratureConfig};
use crate::scalar::{cx, Cx, Real};

/// Acceptance threshold on `|∫ e^{iΩ}|` for a zero-integral instant.
pub const ZERO_INTEGRAL_TOL: f64 = 1e-10;

/// Grid points per shortest drive period in the zero-integral scan.
const SCAN_POINTS_PER_PERIOD: usize = 2000;

/// Points at which `[H0(s), H0(s')] = 0` is verified for operator frames.
const COMMUTATION_SAMPLES: usize = 24;

/// How `H0(t)` is specified.
#[derive(Clone, Debug)]
pub enum FrameGenerator<T: Real> {
    /// `H0(t) = ω(t) G` with a fixed Hermitian `G`; `U(t) = exp(−iΩ(t) G)`.
    Drive {
        generator: Matrix<T>,
        drive: DriveProfile<T>,
    },
    /// A general operator-valued `H0(t)` that commutes with itself at all
    /// times; `U(t) = exp(−i ∫ H0)`.
    Operator(HamiltonianModel<T>),
}

/// `H̃(t) = U†(t) (H(t) − H0(t)) U(t)` with `U(t) = exp(−i ∫_{t1}^{t} H0(s) ds)`.
#[derive(Clone, Debug)]
pub struct InteractionFrame<T: Real> {
    base: HamiltonianModel<T>,
    h0: FrameGenerator<T>,
    t1: T,
    quad: QuadratureConfig<T>,
}

impl<T: Real> InteractionFrame<T> {
    /// Frame of `H0(t) = ω(t) G`.
    pub fn new(
        base: HamiltonianModel<T>,
        generator: Matrix<T>,
        drive: DriveProfile<T>,
        t1: T,
    ) -> Result<Self> {
        if generator.dim() != base.dim() {
            return Err(Error::Dimension {
                expected: base.dim(),
                found: generator.dim(),
            });
        }
        if !generator.is_hermitian(T::tol(1e-14)) {
            return Err(Error::Domain("frame generator must be Hermitian".into()));
        }
        drive.check()?;
        Ok(InteractionFrame {
            base,
            h0: FrameGenerator::Drive { generator, drive },
            t1,
            quad: QuadratureConfig::default(),
        })
    }

    /// `H0 = 0`; the transform is the identity.
    pub fn identity(base: HamiltonianModel<T>, t1: T) -> Self {
        let dim = base.dim();
        InteractionFrame {
            base,
            h0: FrameGenerator::Drive {
                generator: Matrix::zeros(dim),
                drive: DriveProfile::Constant(T::zero()),
            },
            t1,
            quad: QuadratureConfig::default(),
        }
    }

    /// Frame of the `(ω(t)/2) σx` drive of the decaying-qubit and gain-loss presets.
    pub fn drive_frame(base: HamiltonianModel<T>, t1: T) -> Result<Self> {
        let drive = match &base {
            HamiltonianModel::Preset(
                ModelPreset::DecayingQubit { drive, .. } | ModelPreset::GainLoss { drive, .. },
            ) => drive.clone(),
            other => {
                return Err(Error::Domain(format!(
                    "model `{}` has no σx drive term",
                    other.name()
                )))
            }
        };
        let generator = pauli::sigma_x::<T>().scale_real(T::lit(0.5));
        Self::new(base, generator, drive, t1)
    }

    /// Frame of a general `H0(t)`. Commutation `[H0(s), H0(s')] = 0` is
    /// verified on a grid over `[t1, horizon]`.
    pub fn with_operator(
        base: HamiltonianModel<T>,
        h0: HamiltonianModel<T>,
        t1: T,
        horizon: T,
    ) -> Result<Self> {
        if h0.dim() != base.dim() {
            return Err(Error::Dimension {
                expected: base.dim(),
                found: h0.dim(),
            });
        }
        let n = COMMUTATION_SAMPLES;
        let times: Vec<T> = (0..n)
            .map(|k| t1 + (horizon - t1) * T::count(k) / T::count(n - 1))
            .collect();
        let samples: Vec<Matrix<T>> = times.iter().map(|&t| h0.at(t)).collect();
        for i in 0..n {
            if !samples[i].is_hermitian(T::tol(1e-12)) {
                return Err(Error::Domain("frame term H0 must be Hermitian".into()));
            }
            for j in i + 1..n {
                let c = commutator(&samples[i], &samples[j])?;
                let scale = samples[i].max_abs().max(samples[j].max_abs()).max(T::one());
                if c.max_abs() > T::tol(1e-12) * scale * scale {
                    return Err(Error::FrameNotCommuting {
                        t1: times[i].to_f64_lossy(),
                        t2: times[j].to_f64_lossy(),
                    });
                }
            }
        }
        Ok(InteractionFrame {
            base,
            h0: FrameGenerator::Operator(h0),
            t1,
            quad: QuadratureConfig::default(),
        })
    }

    pub fn with_quadrature(mut self, cfg: QuadratureConfig<T>) -> Self {
        self.quad = cfg;
        self
    }

    pub fn base(&self) -> &HamiltonianModel<T> {
        &self.base
    }

    pub fn start(&self) -> T {
        self.t1
    }

    pub fn generator(&self) -> &FrameGenerator<T> {
        &self.h0
    }

    pub fn h0(&self, t: T) -> Matrix<T> {
        match &self.h0 {
            FrameGenerator::Drive { generator, drive } => generator.scale_real(drive.value(t)),
            FrameGenerator::Operator(h) => h.at(t),
        }
    }

    /// `Ω(t) = ∫_{t1}^{t} ω(s) ds` of a drive frame.
    pub fn phase_integral(&self, t: T) -> Result<T> {
        self.check_time(t)?;
        match &self.h0 {
            FrameGenerator::Drive { drive, .. } => drive.phase(self.t1, t),
            FrameGenerator::Operator(_) => Err(Error::Domain(
                "phase integral needs a scalar drive frame".into(),
            )),
        }
    }

    /// `U(t) = exp(−i ∫_{t1}^{t} H0)`.
    pub fn frame_unitary(&self, t: T) -> Result<Matrix<T>> {
        self.check_time(t)?;
        match &self.h0 {
            FrameGenerator::Drive { generator, drive } => {
                let omega = drive.phase(self.t1, t)?;
                Ok(rotate(generator, omega))
            }
            FrameGenerator::Operator(h) => {
                let cfg = self.quad.with_frequency(h.max_frequency());
                let integral = integrate_matrix(|s| h.at(s), self.t1, t, &cfg)?;
                expm(&integral.scale(cx(T::zero(), -T::one())))
            }
        }
    }

    /// `H̃(t)`.
    pub fn to_interaction_picture(&self, t: T) -> Result<Matrix<T>> {
        let u = self.frame_unitary(t)?;
        let h = &self.base.evaluate(t)? - &self.h0(t);
        Ok(&(&u.adjoint() * &h) * &u)
    }

    /// All `t` in `(t1, horizon]` with `|∫_{t1}^{t} e^{iΩ(s)} ds| <= 1e-10`.
    ///
    /// The complex integral is accumulated on a grid of 2000 points per
    /// shortest drive period; local minima of its modulus are refined by
    /// bisection on the sign of `d|I|²/dt = 2 Re(conj(I) e^{iΩ})`.
    pub fn find_zero_integral_times(&self, horizon: T) -> Result<Vec<T>> {
        let drive = match &self.h0 {
            FrameGenerator::Drive { drive, .. } => drive,
            FrameGenerator::Operator(_) => {
                return Err(Error::Domain(
                    "zero-integral search needs a scalar drive frame".into(),
                ))
            }
        };
        if !(horizon > self.t1) {
            return Err(Error::Interval {
                t1: self.t1.to_f64_lossy(),
                t2: horizon.to_f64_lossy(),
            });
        }
        let scan = PhaseScan::new(drive, self.t1, horizon)?;
        Ok(scan.zeros())
    }

    fn check_time(&self, t: T) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::NonFinite("frame time"));
        }
        if t < self.t1 {
            return Err(Error::Interval {
                t1: self.t1.to_f64_lossy(),
                t2: t.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

fn rotate<T: Real>(generator: &Matrix<T>, omega: T) -> Matrix<T> {
    if generator.dim() == 2 {
        pauli::rotation(generator, omega)
    } else {
        expm(&generator.scale(cx(T::zero(), -omega))).expect("finite generator")
    }
}

impl<T: Real> Hamiltonian<T> for InteractionFrame<T> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn at(&self, t: T) -> Matrix<T> {
        let u = match &self.h0 {
            FrameGenerator::Drive { generator, drive } => {
                rotate(generator, drive.phase_lossy(self.t1, t))
            }
            FrameGenerator::Operator(_) => self
                .frame_unitary(t)
                .unwrap_or_else(|_| Matrix::from_fn(self.dim(), |_, _| Cx::new(T::nan(), T::nan()))),
        };
        let h = &self.base.at(t) - &self.h0(t);
        &(&u.adjoint() * &h) * &u
    }

    fn max_frequency(&self) -> Option<T> {
        let base = self.base.max_frequency()?;
        match &self.h0 {
            FrameGenerator::Drive { generator, drive } => match drive {
                DriveProfile::Constant(w) => {
                    // Spectral spread of G bounds the rotation frequencies.
                    let spread = generator.norm_inf() * T::lit(2.0);
                    Some(base + w.abs() * spread)
                }
                _ => None,
            },
            FrameGenerator::Operator(_) => None,
        }
    }
}

/// Cumulative `I(t) = ∫_{t1}^{t} e^{iΩ(s)} ds` on a uniform grid.
struct PhaseScan<'a, T: Real> {
    drive: &'a DriveProfile<T>,
    rule: GaussLegendre<T>,
    t1: T,
    grid: Vec<T>,
    /// `Ω` at grid points.
    phase: Vec<T>,
    /// `I` at grid points.
    integral: Vec<Cx<T>>,
}

impl<'a, T: Real> PhaseScan<'a, T> {
    fn new(drive: &'a DriveProfile<T>, t1: T, horizon: T) -> Result<Self> {
        // Largest |ω| on a coarse pre-scan sets the grid spacing.
        let probe = 4096;
        let mut w_max = T::zero();
        for k in 0..=probe {
            let t = t1 + (horizon - t1) * T::count(k) / T::count(probe);
            let w = drive.value(t);
            if !w.is_finite() {
                return Err(Error::NonFinite("drive frequency"));
            }
            w_max = w_max.max(w.abs());
        }
        let periods = (horizon - t1) * w_max / T::TAU();
        let intervals = (periods * T::count(SCAN_POINTS_PER_PERIOD))
            .ceil()
            .to_usize()
            .unwrap_or(usize::MAX)
            .clamp(SCAN_POINTS_PER_PERIOD, 50_000_000);
        let step = (horizon - t1) / T::count(intervals);
        let grid: Vec<T> = (0..=intervals)
            .map(|k| {
                if k == intervals {
                    horizon
                } else {
                    t1 + step * T::count(k)
                }
            })
            .collect();

        let mut scan = PhaseScan {
            drive,
            rule: GaussLegendre::new(8),
            t1,
            grid,
            phase: Vec::with_capacity(intervals + 1),
            integral: Vec::with_capacity(intervals + 1),
        };
        scan.phase.push(T::zero());
        scan.integral.push(Cx::zero());
        for k in 0..intervals {
            let (a, b) = (scan.grid[k], scan.grid[k + 1]);
            let next_phase = scan.phase_within(k, b);
            let next_integral = scan.integral[k] + scan.integral_within(k, a, b);
            scan.phase.push(next_phase);
            scan.integral.push(next_integral);
        }
        Ok(scan)
    }

    /// `Ω(t)` for `t` inside interval `k`.
    fn phase_within(&self, k: usize, t: T) -> T {
        match self.drive {
            DriveProfile::Constant(w) => *w * (t - self.t1),
            _ => {
                let a = self.grid[k];
                self.phase[k] + self.rule.integrate_real(a, t, |s| self.drive.value(s))
            }
        }
    }

    /// `∫_a^b e^{iΩ(s)} ds` for `[a, b]` inside interval `k`.
    fn integral_within(&self, k: usize, a: T, b: T) -> Cx<T> {
        self.rule.mapped(a, b).fold(Cx::zero(), |acc, (s, w)| {
            acc + Cx::from_polar(T::one(), self.phase_within(k, s)) * w
        })
    }

    fn value_at(&self, k: usize, t: T) -> Cx<T> {
        self.integral[k] + self.integral_within(k, self.grid[k], t)
    }

    /// `d|I|²/dt` at `t` inside interval `k`.
    fn slope_at(&self, k: usize, t: T) -> T {
        let i = self.value_at(k, t);
        let e = Cx::from_polar(T::one(), self.phase_within(k, t));
        T::lit(2.0) * (i.conj() * e).re
    }

    fn interval_of(&self, t: T) -> usize {
        let n = self.grid.len() - 1;
        let step = (self.grid[n] - self.grid[0]) / T::count(n);
        let k = ((t - self.grid[0]) / step).floor().to_usize().unwrap_or(0);
        k.min(n - 1)
    }

    fn eval(&self, t: T) -> (Cx<T>, T) {
        let k = self.interval_of(t);
        (self.value_at(k, t), self.slope_at(k, t))
    }

    fn zeros(&self) -> Vec<T> {
        let tol = T::lit(ZERO_INTEGRAL_TOL);
        let n = self.grid.len() - 1;
        let modsq: Vec<T> = self.integral.iter().map(|z| z.norm_sqr()).collect();
        let mut found: Vec<T> = Vec::new();
        for j in 1..=n {
            let left = modsq[j - 1];
            let here = modsq[j];
            let is_min = here <= left && (j == n || here <= modsq[j + 1]);
            if !is_min {
                continue;
            }
            let lo = self.grid[j - 1];
            let hi = if j == n { self.grid[n] } else { self.grid[j + 1] };
            let t = self.refine_minimum(lo, hi);
            let (value, _) = self.eval(t);
            if value.norm() <= tol && t > self.t1 {
                if let Some(&last) = found.last() {
                    if (t - last).abs() <= T::tol(1e-12) * t.abs().max(T::one()) {
                        continue;
                    }
                }
                found.push(t);
            }
        }
        found
    }

    /// Bisection on the sign of `d|I|²/dt` inside `[lo, hi]`.
    fn refine_minimum(&self, mut lo: T, mut hi: T) -> T {
        let (_, s_lo) = self.eval(lo);
        let (_, s_hi) = self.eval(hi);
        if s_lo >= T::zero() {
            return lo;
        }
        if s_hi <= T::zero() {
            return hi;
        }
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            let (_, s) = self.eval(mid);
            if s < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (vl, _) = self.eval(lo);
        let (vh, _) = self.eval(hi);
        if vl.norm() <= vh.norm() {
            lo
        } else {
            hi
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::pauli::*;
    use crate::operator::StateVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn decaying(omega: f64, gamma: f64, kappa: f64) -> HamiltonianModel<f64> {
        let p: BTreeMap<String, f64> = [("omega", omega), ("gamma", gamma), ("kappa", kappa)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        HamiltonianModel::preset("decaying-qubit", &p).unwrap()
    }

    /// Rotating-frame Hamiltonian written with the jump operators τ±.
    fn jump_form(gamma: f64, kappa: f64, omega_t: f64) -> Matrix<f64> {
        let e = Cx::from_polar(1.0, omega_t);
        let tp = tau_plus::<f64>().scale(e);
        let tm = tau_minus::<f64>().scale(e.conj());
        let mut h = (&tp + &tm).scale(Cx::new(0.0, -gamma / 2.0));
        h.add_scaled(Cx::new(0.0, -gamma / 2.0), &identity());
        h.add_scaled(Cx::new(0.0, kappa), &(&tp - &tm));
        h
    }

    #[test]
    fn decaying_qubit_frame_matches_jump_operator_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let omega = rng.random_range(0.5..20.0);
            let gamma = rng.random_range(0.0..1.0);
            let kappa = rng.random_range(-1.0..1.0);
            let t1 = rng.random_range(-1.0..1.0);
            let frame = InteractionFrame::drive_frame(decaying(omega, gamma, kappa), t1).unwrap();
            for _ in 0..10 {
                let t = t1 + rng.random_range(0.0..5.0);
                let got = frame.to_interaction_picture(t).unwrap();
                let want = jump_form(gamma, kappa, omega * (t - t1));
                assert!(got.max_abs_diff(&want) < 1e-13, "omega={omega} t={t}");
            }
        }
    }

    #[test]
    fn frame_at_zero_phase() {
        let (omega, gamma) = (3.0, 0.4);
        let frame = InteractionFrame::drive_frame(decaying(omega, gamma, 0.0), 0.0).unwrap();
        let got = frame.to_interaction_picture(0.0).unwrap();
        let want = (&sigma_z::<f64>() + &identity()).scale(Cx::new(0.0, -gamma / 2.0));
        assert!(got.max_abs_diff(&want) < 1e-15);
        // Full drive periods return to the same operator.
        let got = frame.to_interaction_picture(2.0 * PI / omega).unwrap();
        assert!(got.max_abs_diff(&want) < 1e-13);
    }

    #[test]
    fn kappa_only_frame() {
        let (omega, kappa) = (2.0, 0.3);
        let frame = InteractionFrame::drive_frame(decaying(omega, 0.0, kappa), 0.0).unwrap();
        for t in [0.1, 0.77, 2.5] {
            let e = Cx::from_polar(1.0, omega * t);
            let want = (&tau_plus::<f64>().scale(e) - &tau_minus::<f64>().scale(e.conj()))
                .scale(Cx::new(0.0, kappa));
            assert!(frame.to_interaction_picture(t).unwrap().max_abs_diff(&want) < 1e-14);
        }
    }

    #[test]
    fn identity_frame_is_transparent() {
        let m = HamiltonianModel::<f64>::constant(
            &sigma_x::<f64>().scale_real(0.3) + &sigma_z::<f64>().scale(Cx::new(0.0, -0.2)),
        );
        let frame = InteractionFrame::identity(m.clone(), 0.0);
        for t in [0.0, 1.0, 4.0] {
            assert_eq!(frame.to_interaction_picture(t).unwrap(), m.at(t));
        }
    }

    #[test]
    fn frame_preserves_instantaneous_spectrum() {
        // Power traces tr(A^k), k = 1..dim, fix the eigenvalue multiset.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let omega = 4.0;
        let base = decaying(omega, 0.6, -0.35);
        let frame = InteractionFrame::drive_frame(base.clone(), 0.0).unwrap();
        for _ in 0..50 {
            let t = rng.random_range(0.0..10.0);
            let a = &base.at(t) - &frame.h0(t);
            let b = frame.to_interaction_picture(t).unwrap();
            assert!((a.trace() - b.trace()).norm() < 1e-12);
            assert!(((&a * &a).trace() - (&b * &b).trace()).norm() < 1e-12);
        }
    }

    #[test]
    fn operator_frame_agrees_with_drive_frame() {
        let omega = 2.5;
        let base = decaying(omega, 0.3, 0.2);
        let h0 = HamiltonianModel::constant(sigma_x::<f64>().scale_real(omega / 2.0));
        let op = InteractionFrame::with_operator(base.clone(), h0, 0.0, 5.0).unwrap();
        let dr = InteractionFrame::drive_frame(base, 0.0).unwrap();
        for t in [0.0, 0.4, 3.3] {
            let a = op.to_interaction_picture(t).unwrap();
            let b = dr.to_interaction_picture(t).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn non_commuting_frame_is_rejected() {
        let base = decaying(1.0, 0.1, 0.0);
        let h0 = HamiltonianModel::custom(2, Some(1.0), |t: f64| {
            &sigma_x::<f64>().scale_real(t.cos()) + &sigma_z::<f64>().scale_real(t.sin())
        });
        let err = InteractionFrame::with_operator(base, h0, 0.0, 3.0).unwrap_err();
        assert!(matches!(err, Error::FrameNotCommuting { .. }));
    }

    #[test]
    fn frame_rejects_times_before_start() {
        let frame = InteractionFrame::drive_frame(decaying(1.0, 0.1, 0.0), 1.0).unwrap();
        assert!(matches!(
            frame.to_interaction_picture(0.5),
            Err(Error::Interval { .. })
        ));
        let herm = HamiltonianModel::<f64>::constant(sigma_z());
        assert!(InteractionFrame::drive_frame(herm, 0.0).is_err());
    }

    #[test]
    fn zeros_for_constant_drive() {
        for &omega in &[1.0, 2.7, 13.0] {
            let frame = InteractionFrame::drive_frame(decaying(omega, 0.1, 0.0), 0.0).unwrap();
            let period = 2.0 * PI / omega;
            let zeros = frame.find_zero_integral_times(2.5 * period).unwrap();
            assert_eq!(zeros.len(), 2, "omega={omega}: {zeros:?}");
            for (k, z) in zeros.iter().enumerate() {
                let want = (k + 1) as f64 * period;
                assert!((z - want).abs() <= 1e-10 * want, "{z} vs {want}");
            }
        }
    }

    #[test]
    fn zeros_at_horizon_and_shifted_start() {
        let omega = 3.0;
        let t1 = 0.7;
        let frame = InteractionFrame::drive_frame(decaying(omega, 0.1, 0.0), t1).unwrap();
        let period = 2.0 * PI / omega;
        let zeros = frame.find_zero_integral_times(t1 + 3.0 * period).unwrap();
        assert_eq!(zeros.len(), 3, "{zeros:?}");
        for (k, z) in zeros.iter().enumerate() {
            let want = t1 + (k + 1) as f64 * period;
            assert!((z - want).abs() <= 1e-10 * want);
        }
    }

    #[test]
    fn zero_drive_has_no_zeros() {
        let frame = InteractionFrame::drive_frame(decaying(0.0, 0.1, 0.0), 0.0).unwrap();
        assert!(frame.find_zero_integral_times(10.0).unwrap().is_empty());
    }

    #[test]
    fn custom_constant_drive_matches_analytic_roots() {
        let omega = 5.0;
        let base = decaying(omega, 0.1, 0.0);
        let frame = InteractionFrame::new(
            base,
            sigma_x::<f64>().scale_real(0.5),
            DriveProfile::custom(move |_| omega),
            0.0,
        )
        .unwrap();
        let period = 2.0 * PI / omega;
        let zeros = frame.find_zero_integral_times(3.5 * period).unwrap();
        assert_eq!(zeros.len(), 3);
        for (k, z) in zeros.iter().enumerate() {
            let want = (k + 1) as f64 * period;
            assert!((z - want).abs() <= 1e-10 * want);
        }
    }

    /// Independent dense evaluation of `|∫_0^t e^{iΩ}|` with `Ω` in closed form.
    fn dense_min_modulus(phase: impl Fn(f64) -> f64, horizon: f64, n: usize) -> Vec<(f64, f64)> {
        let h = horizon / n as f64;
        let mut acc = Cx::new(0.0, 0.0);
        let mut out = vec![(0.0, 0.0)];
        // Composite Simpson on each cell.
        for k in 0..n {
            let a = k as f64 * h;
            let f = |s: f64| Cx::from_polar(1.0, phase(s));
            acc += (f(a) + f(a + h / 2.0) * 4.0 + f(a + h)) * (h / 6.0);
            out.push((a + h, acc.norm()));
        }
        out
    }

    #[test]
    fn chirped_drive_against_dense_grid() {
        let (w0, big_t) = (4.0, 3.0);
        let base = HamiltonianModel::Preset(ModelPreset::DecayingQubit {
            drive: DriveProfile::Linear {
                offset: w0,
                slope: w0 / big_t,
            },
            gamma: 0.1,
            kappa: 0.0,
        });
        let frame = InteractionFrame::drive_frame(base, 0.0).unwrap();
        let horizon = 6.0;
        let zeros = frame.find_zero_integral_times(horizon).unwrap();
        let phase = move |s: f64| w0 * (s + s * s / (2.0 * big_t));
        let dense = dense_min_modulus(phase, horizon, 400_000);
        let dense_zeros: Vec<f64> = dense
            .windows(3)
            .filter(|w| w[1].1 <= w[0].1 && w[1].1 <= w[2].1 && w[1].1 < 1e-6)
            .map(|w| w[1].0)
            .collect();
        assert_eq!(zeros.len(), dense_zeros.len(), "{zeros:?} vs {dense_zeros:?}");
        for z in &zeros {
            assert!(dense_zeros.iter().any(|d| (d - z).abs() < 1e-4), "{z}");
        }
        // The chirp bends the orbit of I(t) away from the origin: the dense
        // minima stay bounded away from zero.
        let min_after_first_period = dense
            .iter()
            .filter(|(t, _)| *t > 0.5)
            .map(|(_, m)| *m)
            .fold(f64::INFINITY, f64::min);
        assert!(min_after_first_period > 1e-3);
    }

    #[test]
    fn interaction_frame_is_a_hamiltonian() {
        let frame = InteractionFrame::drive_frame(decaying(2.0, 0.2, 0.1), 0.0).unwrap();
        let t = 0.9;
        assert!(frame.at(t).max_abs_diff(&frame.to_interaction_picture(t).unwrap()) < 1e-15);
        assert_eq!(frame.max_frequency(), Some(2.0));
        let psi = StateVector::<f64>::basis(2, 0);
        assert_eq!(frame.at(t).apply(&psi).unwrap().dim(), 2);
    }
}
