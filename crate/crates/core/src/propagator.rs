//! Reference integration of `dψ/dt = −i H(t) ψ`.
//!
//! The state is never renormalized: for a non-Hermitian `H` the norm of
//! `ψ(t)` is part of the answer, and survival is always measured against the
//! initial state as given.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::models::Hamiltonian;
use crate::operator::{inner_slices, Matrix, StateVector};
use crate::scalar::{Cx, Real};

/// Steps allowed for a single propagation before giving up.
pub const MAX_STEPS: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Fixed-step classical Runge–Kutta; bit-reproducible.
    Rk4,
    /// Embedded Dormand–Prince 5(4) with step-size control.
    DormandPrince54,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationConfig<T: Real> {
    pub method: Method,
    pub rel_tol: T,
    pub abs_tol: T,
    /// Upper bound on the step, on top of one twentieth of the shortest
    /// model period.
    pub max_step: Option<T>,
    /// Steps per reference period in fixed-step mode.
    pub steps_per_period: usize,
}

impl<T: Real> Default for PropagationConfig<T> {
    fn default() -> Self {
        PropagationConfig {
            method: Method::DormandPrince54,
            rel_tol: T::tol(1e-10),
            abs_tol: T::tol(1e-12),
            max_step: None,
            steps_per_period: 200,
        }
    }
}

impl<T: Real> PropagationConfig<T> {
    pub fn rk4(steps_per_period: usize) -> Self {
        PropagationConfig {
            method: Method::Rk4,
            steps_per_period,
            ..Self::default()
        }
    }

    pub fn with_tolerances(mut self, rel_tol: T, abs_tol: T) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero() && self.abs_tol > T::zero()) {
            return Err(Error::Config("propagation tolerances must be positive".into()));
        }
        if self.steps_per_period < 16 {
            return Err(Error::Config("steps_per_period must be >= 16".into()));
        }
        if let Some(h) = self.max_step {
            if !(h > T::zero() && h.is_finite()) {
                return Err(Error::Config("max_step must be positive and finite".into()));
            }
        }
        Ok(())
    }
}

/// `out = −i H(t) y`.
fn derivative<T: Real, H: Hamiltonian<T> + ?Sized>(model: &H, t: T, y: &[Cx<T>], out: &mut [Cx<T>]) {
    model.at(t).apply_into(y, out);
    for v in out.iter_mut() {
        *v = Cx::new(v.im, -v.re);
    }
}

fn all_finite<T: Real>(y: &[Cx<T>]) -> bool {
    y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `out = y + h Σ b_k k_k`.
fn combine<T: Real>(y: &[Cx<T>], h: T, terms: &[(T, &[Cx<T>])], out: &mut [Cx<T>]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Cx::zero();
        for (b, k) in terms {
            if *b != T::zero() {
                acc += k[i] * *b;
            }
        }
        *o = y[i] + acc * h;
    }
}

/// Time-stepping state shared by both methods.
struct Stepper<'a, T: Real, H: Hamiltonian<T> + ?Sized> {
    model: &'a H,
    cfg: PropagationConfig<T>,
    dim: usize,
    y: Vec<Cx<T>>,
    t: T,
    /// Step carried between output segments (adaptive mode).
    h: Option<T>,
    steps: usize,
    k: [Vec<Cx<T>>; 7],
    tmp: Vec<Cx<T>>,
    err: Vec<Cx<T>>,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl<'a, T: Real, H: Hamiltonian<T> + ?Sized> Stepper<'a, T, H> {
    fn new(model: &'a H, psi0: &StateVector<T>, t1: T, cfg: PropagationConfig<T>) -> Self {
        let dim = psi0.dim();
        let zeros = || vec![Cx::zero(); dim];
        Stepper {
            model,
            cfg,
            dim,
            y: psi0.amplitudes().to_vec(),
            t: t1,
            h: None,
            steps: 0,
            k: [zeros(), zeros(), zeros(), zeros(), zeros(), zeros(), zeros()],
            tmp: zeros(),
            err: zeros(),
        }
    }

    fn count_step(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > MAX_STEPS {
            return Err(Error::Stiffness {
                t: self.t.to_f64_lossy(),
                h: self.h.unwrap_or(T::zero()).to_f64_lossy(),
            });
        }
        Ok(())
    }

    fn check_finite(&self, t: T) -> Result<()> {
        if all_finite(&self.y) {
            Ok(())
        } else {
            Err(Error::Divergence { t: t.to_f64_lossy() })
        }
    }

    fn rk4_step(&mut self, h: T) {
        let half = T::lit(0.5);
        let t = self.t;
        let [k1, k2, k3, k4, ..] = &mut self.k;
        derivative(self.model, t, &self.y, k1);
        combine(&self.y, h * half, &[(T::one(), k1)], &mut self.tmp);
        derivative(self.model, t + h * half, &self.tmp, k2);
        combine(&self.y, h * half, &[(T::one(), k2)], &mut self.tmp);
        derivative(self.model, t + h * half, &self.tmp, k3);
        combine(&self.y, h, &[(T::one(), k3)], &mut self.tmp);
        derivative(self.model, t + h, &self.tmp, k4);
        let sixth = T::one() / T::lit(6.0);
        let third = T::one() / T::lit(3.0);
        let y = self.y.clone();
        combine(
            &y,
            h,
            &[(sixth, k1), (third, k2), (third, k3), (sixth, k4)],
            &mut self.y,
        );
        self.t = t + h;
    }

    /// Fixed-step RK4 from the current time to `t_end` in `steps` steps.
    fn rk4_to(&mut self, t_end: T, steps: usize) -> Result<()> {
        let start = self.t;
        let h = (t_end - start) / T::count(steps);
        for n in 0..steps {
            self.count_step()?;
            self.rk4_step(h);
            // Anchor to the grid rather than accumulating `t += h`.
            self.t = if n + 1 == steps {
                t_end
            } else {
                start + h * T::count(n + 1)
            };
            self.check_finite(self.t)?;
        }
        Ok(())
    }

    /// One Dormand–Prince attempt of size `h`; the candidate is left in `tmp`
    /// and the scaled error norm is returned. `k[0]` must hold `f(t, y)`.
    fn dp_attempt(&mut self, h: T) -> T {
        let t = self.t;
        for stage in 1..7 {
            let (done, rest) = self.k.split_at_mut(stage);
            let terms: Vec<(T, &[Cx<T>])> = (0..stage)
                .map(|j| (T::lit(A[stage][j]), done[j].as_slice()))
                .collect();
            combine(&self.y, h, &terms, &mut self.tmp);
            derivative(self.model, t + h * T::lit(C[stage]), &self.tmp, &mut rest[0]);
        }
        // Stage 7 was evaluated at the fifth-order solution, which is `tmp`.
        let terms: Vec<(T, &[Cx<T>])> = (0..7)
            .map(|j| (T::lit(E[j]), self.k[j].as_slice()))
            .collect();
        let zero = vec![Cx::zero(); self.dim];
        combine(&zero, h, &terms, &mut self.err);
        let mut sum = T::zero();
        for i in 0..self.dim {
            let scale = self.cfg.abs_tol + self.cfg.rel_tol * self.y[i].norm().max(self.tmp[i].norm());
            let e = self.err[i].norm() / scale;
            sum += e * e;
        }
        (sum / T::count(self.dim)).sqrt()
    }

    fn initial_step(&mut self, t_end: T, max_step: T) -> T {
        let span = t_end - self.t;
        let norm = |v: &[Cx<T>], y: &[Cx<T>], cfg: &PropagationConfig<T>| {
            let s = v
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let e = a.norm() / (cfg.abs_tol + cfg.rel_tol * b.norm());
                    e * e
                })
                .fold(T::zero(), |a, b| a + b);
            (s / T::count(v.len())).sqrt()
        };
        derivative(self.model, self.t, &self.y, &mut self.k[0]);
        let d0 = norm(&self.y, &self.y, &self.cfg);
        let d1 = norm(&self.k[0], &self.y, &self.cfg);
        let small = T::lit(1e-5);
        let mut h0 = if d0 < small || d1 < small {
            T::lit(1e-6)
        } else {
            T::lit(0.01) * d0 / d1
        };
        h0 = h0.min(span).min(max_step);
        combine(&self.y, h0, &[(T::one(), &self.k[0])], &mut self.tmp);
        derivative(self.model, self.t + h0, &self.tmp, &mut self.k[1]);
        let diff: Vec<Cx<T>> = self.k[1].iter().zip(&self.k[0]).map(|(a, b)| *a - *b).collect();
        let d2 = norm(&diff, &self.y, &self.cfg) / h0;
        let h1 = if d1.max(d2) <= T::lit(1e-15) {
            (h0 * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
        };
        (h0 * T::lit(100.0)).min(h1).min(max_step).min(span)
    }

    /// Adaptive Dormand–Prince from the current time to exactly `t_end`.
    fn dp_to(&mut self, t_end: T, max_step: T) -> Result<()> {
        if t_end == self.t {
            return Ok(());
        }
        let mut h = match self.h {
            Some(h) => h.min(max_step),
            None => self.initial_step(t_end, max_step),
        };
        let safety = T::lit(0.9);
        let (fac_min, fac_max) = (T::lit(0.2), T::lit(5.0));
        derivative(self.model, self.t, &self.y, &mut self.k[0]);
        let mut rejected = false;
        loop {
            let remaining = t_end - self.t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            let floor = T::lit(16.0) * T::epsilon() * self.t.abs().max(T::one());
            if step < floor && !last {
                return Err(Error::Stiffness {
                    t: self.t.to_f64_lossy(),
                    h: step.to_f64_lossy(),
                });
            }
            self.count_step()?;
            let err = self.dp_attempt(step);
            if !err.is_finite() || !all_finite(&self.tmp) {
                if step <= floor {
                    return Err(Error::Divergence {
                        t: self.t.to_f64_lossy(),
                    });
                }
                h = step * fac_min;
                rejected = true;
                continue;
            }
            if err <= T::one() {
                std::mem::swap(&mut self.y, &mut self.tmp);
                self.t = if last { t_end } else { self.t + step };
                // First-same-as-last: the seventh stage is f at the new point.
                self.k.swap(0, 6);
                let mut fac = if err == T::zero() {
                    fac_max
                } else {
                    (safety * err.powf(T::lit(-0.2))).clamp(fac_min, fac_max)
                };
                if rejected {
                    fac = fac.min(T::one());
                }
                rejected = false;
                // Keep the controller's step when the last one was clipped.
                let proposed = if last { h.max(step) } else { step * fac };
                h = proposed.min(max_step);
                if last {
                    self.h = Some(h);
                    return Ok(());
                }
            } else {
                let fac = (safety * err.powf(T::lit(-0.2))).clamp(fac_min, T::one());
                h = step * fac;
                rejected = true;
            }
        }
    }
}

/// Angular frequency that sets the step scale: the model's highest frequency
/// and, in fixed-step mode, a bound on the spectrum of `H(t1)`.
fn reference_frequency<T: Real, H: Hamiltonian<T> + ?Sized>(model: &H, t1: T, with_spectrum: bool) -> T {
    let w = model.max_frequency().unwrap_or(T::zero());
    if with_spectrum {
        w.max(model.at(t1).norm_inf())
    } else {
        w
    }
}

fn check_inputs<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    psi0: &StateVector<T>,
    t1: T,
    times: &[T],
    cfg: &PropagationConfig<T>,
) -> Result<()> {
    cfg.validate()?;
    if psi0.dim() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            found: psi0.dim(),
        });
    }
    if !t1.is_finite() {
        return Err(Error::NonFinite("start time"));
    }
    let mut prev = t1;
    for &t in times {
        if !t.is_finite() {
            return Err(Error::NonFinite("output time"));
        }
        if t < prev {
            return Err(Error::Interval {
                t1: prev.to_f64_lossy(),
                t2: t.to_f64_lossy(),
            });
        }
        prev = t;
    }
    Ok(())
}

fn propagate_unchecked<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    psi0: &StateVector<T>,
    t1: T,
    times: &[T],
    cfg: &PropagationConfig<T>,
) -> Result<Vec<StateVector<T>>> {
    let mut stepper = Stepper::new(model, psi0, t1, *cfg);
    let mut out = Vec::with_capacity(times.len());
    let tau = T::TAU();
    match cfg.method {
        Method::Rk4 => {
            let w = reference_frequency(model, t1, true);
            let per_period = T::count(cfg.steps_per_period);
            for &t in times {
                let span = t - stepper.t;
                if span > T::zero() {
                    let mut steps = (span * w / tau * per_period).ceil();
                    if model.max_frequency().is_none() {
                        steps = steps.max(per_period);
                    }
                    if let Some(hmax) = cfg.max_step {
                        steps = steps.max((span / hmax).ceil());
                    }
                    let steps = steps.to_usize().unwrap_or(usize::MAX).max(1);
                    stepper.rk4_to(t, steps)?;
                }
                out.push(StateVector::new(stepper.y.clone())?);
            }
        }
        Method::DormandPrince54 => {
            let w = reference_frequency(model, t1, false);
            let mut max_step = cfg.max_step.unwrap_or(T::infinity());
            if w > T::zero() {
                max_step = max_step.min(tau / w / T::lit(20.0));
            }
            for &t in times {
                stepper.dp_to(t, max_step)?;
                out.push(StateVector::new(stepper.y.clone())?);
            }
        }
    }
    log::trace!("propagation over [{t1}, {:?}] took {} steps", times.last(), stepper.steps);
    Ok(out)
}

/// `ψ(t2)` for `ψ(t1) = psi0`.
pub fn propagate<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    psi0: &StateVector<T>,
    t1: T,
    t2: T,
    cfg: &PropagationConfig<T>,
) -> Result<StateVector<T>> {
    let mut states = propagate_to_times(model, psi0, t1, &[t2], cfg)?;
    Ok(states.pop().expect("one output time"))
}

/// `ψ(t)` at each of the non-decreasing `times`, from one integration. In
/// adaptive mode steps are shortened to land on each requested time.
pub fn propagate_to_times<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    psi0: &StateVector<T>,
    t1: T,
    times: &[T],
    cfg: &PropagationConfig<T>,
) -> Result<Vec<StateVector<T>>> {
    check_inputs(model, psi0, t1, times, cfg)?;
    if !psi0.is_normalized() {
        return Err(Error::NotNormalized {
            norm: psi0.norm().to_f64_lossy(),
        });
    }
    propagate_unchecked(model, psi0, t1, times, cfg)
}

/// `|<ψ0|ψ(t2)>|²`. Exceeds 1 when the model has gain.
pub fn survival_exact<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    psi0: &StateVector<T>,
    t1: T,
    t2: T,
    cfg: &PropagationConfig<T>,
) -> Result<T> {
    let psi = propagate(model, psi0, t1, t2, cfg)?;
    Ok(psi0.inner(&psi)?.norm_sqr())
}

/// [`survival_exact`] at each of the non-decreasing `times`.
pub fn survival_exact_series<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    psi0: &StateVector<T>,
    t1: T,
    times: &[T],
    cfg: &PropagationConfig<T>,
) -> Result<Vec<T>> {
    let states = propagate_to_times(model, psi0, t1, times, cfg)?;
    Ok(states
        .iter()
        .map(|psi| inner_slices(psi0.amplitudes(), psi.amplitudes()).norm_sqr())
        .collect())
}

/// The evolution operator `T(t2, t1)`, one propagated basis vector per column.
pub fn propagator_matrix<T: Real, H: Hamiltonian<T> + ?Sized>(
    model: &H,
    t1: T,
    t2: T,
    cfg: &PropagationConfig<T>,
) -> Result<Matrix<T>> {
    let dim = model.dim();
    let mut out = Matrix::zeros(dim);
    for j in 0..dim {
        let e = StateVector::basis(dim, j);
        check_inputs(model, &e, t1, &[t2], cfg)?;
        let col = propagate_unchecked(model, &e, t1, &[t2], cfg)?
            .pop()
            .expect("one output time");
        out.set_column(j, col.amplitudes());
    }
    Ok(out)
}
