//! Composite Gauss–Legendre quadrature for scalar- and operator-valued
//! integrands, single integrals and nested integrals over the triangle
//! `t1 <= s' <= s <= t2`.
//!
//! Every routine starts from a panel count derived from the configuration
//! and doubles it until two successive estimates agree to `abs_tol`
//! (scaled by `max(1, |estimate|)`), or `max_refinements` doublings have been
//! spent. Panel sums run in a fixed order so results are bit-stable.

use num_traits::Zero;

use crate::error::Error;
use crate::operator::{commutator, expectation, Matrix, StateVector};
use crate::scalar::{Cx, Real};

/// Panels used when nothing is known about the integrand's frequencies.
pub const DEFAULT_UNKNOWN_PANELS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig<T: Real> {
    pub panels_per_period: usize,
    /// Gauss–Legendre order per panel.
    pub nodes_per_panel: usize,
    pub abs_tol: T,
    pub max_refinements: usize,
    /// Highest angular frequency present in the integrand, if known.
    pub frequency: Option<T>,
}

impl<T: Real> Default for QuadratureConfig<T> {
    fn default() -> Self {
        QuadratureConfig {
            panels_per_period: 32,
            nodes_per_panel: 8,
            abs_tol: T::tol(1e-12),
            max_refinements: 12,
            frequency: None,
        }
    }
}

impl<T: Real> QuadratureConfig<T> {
    pub fn with_frequency(mut self, frequency: Option<T>) -> Self {
        self.frequency = frequency;
        self
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.panels_per_period < 1 {
            return Err(Error::Config("panels_per_period must be >= 1".into()));
        }
        if !(2..=64).contains(&self.nodes_per_panel) {
            return Err(Error::Config("nodes_per_panel must lie in [2, 64]".into()));
        }
        if !(self.abs_tol > T::zero()) {
            return Err(Error::Config("abs_tol must be positive".into()));
        }
        if let Some(w) = self.frequency {
            if !(w.is_finite() && w >= T::zero()) {
                return Err(Error::Config("frequency must be finite and >= 0".into()));
            }
        }
        Ok(())
    }

    /// Panel count of the first estimate over `[t1, t2]`.
    pub fn initial_panels(&self, t1: T, t2: T) -> usize {
        match self.frequency {
            None => DEFAULT_UNKNOWN_PANELS,
            Some(w) => {
                let periods = (t2 - t1) * w / T::TAU();
                let panels = (periods * T::count(self.panels_per_period)).ceil();
                panels.to_usize().unwrap_or(usize::MAX).max(1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureError<V> {
    Interval { t1: f64, t2: f64 },
    InvalidConfig(String),
    NotConverged {
        estimate: V,
        achieved: f64,
        refinements: usize,
    },
}

impl<V> From<QuadratureError<V>> for Error {
    fn from(e: QuadratureError<V>) -> Self {
        match e {
            QuadratureError::Interval { t1, t2 } => Error::Interval { t1, t2 },
            QuadratureError::InvalidConfig(msg) => Error::Config(msg),
            QuadratureError::NotConverged {
                achieved,
                refinements,
                ..
            } => Error::Quadrature {
                achieved,
                refinements,
            },
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T: Real> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate_real(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        self.mapped(a, b).fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Values that can be accumulated by a quadrature rule.
pub trait Integrand<T: Real>: Clone {
    fn scaled(&self, w: T) -> Self;
    fn add_scaled(&mut self, w: T, other: &Self);
    /// Largest entrywise modulus of `self − other`.
    fn distance(&self, other: &Self) -> T;
    /// Largest entrywise modulus.
    fn magnitude(&self) -> T;
}

impl<T: Real> Integrand<T> for Cx<T> {
    fn scaled(&self, w: T) -> Self {
        *self * w
    }
    fn add_scaled(&mut self, w: T, other: &Self) {
        *self += *other * w;
    }
    fn distance(&self, other: &Self) -> T {
        (*self - *other).norm()
    }
    fn magnitude(&self) -> T {
        self.norm()
    }
}

impl<T: Real> Integrand<T> for Matrix<T> {
    fn scaled(&self, w: T) -> Self {
        self.scale_real(w)
    }
    fn add_scaled(&mut self, w: T, other: &Self) {
        Matrix::add_scaled(self, Cx::new(w, T::zero()), other);
    }
    fn distance(&self, other: &Self) -> T {
        self.max_abs_diff(other)
    }
    fn magnitude(&self) -> T {
        self.max_abs()
    }
}

/// One composite estimate of `∫_a^b f` with `panels` equal panels.
pub fn composite<T: Real, V: Integrand<T>>(
    rule: &GaussLegendre<T>,
    a: T,
    b: T,
    panels: usize,
    f: &mut impl FnMut(T) -> V,
) -> V {
    let panels = panels.max(1);
    let width = (b - a) / T::count(panels);
    let mut acc: Option<V> = None;
    for p in 0..panels {
        let lo = a + width * T::count(p);
        let hi = if p + 1 == panels { b } else { lo + width };
        let mut panel: Option<V> = None;
        for (x, w) in rule.mapped(lo, hi) {
            let v = f(x);
            match panel.as_mut() {
                Some(sum) => sum.add_scaled(w, &v),
                None => panel = Some(v.scaled(w)),
            }
        }
        let panel = panel.expect("at least one node");
        match acc.as_mut() {
            Some(sum) => sum.add_scaled(T::one(), &panel),
            None => acc = Some(panel),
        }
    }
    acc.expect("at least one panel")
}

/// Doubles the panel count until two successive estimates agree.
fn refine<T: Real, V: Integrand<T>>(
    cfg: &QuadratureConfig<T>,
    t1: T,
    t2: T,
    mut estimate: impl FnMut(usize) -> V,
) -> Result<V, QuadratureError<V>> {
    cfg.validate()
        .map_err(|e| QuadratureError::InvalidConfig(e.to_string()))?;
    if !(t2 >= t1) {
        return Err(QuadratureError::Interval {
            t1: t1.to_f64_lossy(),
            t2: t2.to_f64_lossy(),
        });
    }
    let mut panels = cfg.initial_panels(t1, t2);
    let mut previous = estimate(panels);
    let mut achieved = T::infinity();
    for _ in 0..cfg.max_refinements {
        panels = panels.saturating_mul(2);
        let next = estimate(panels);
        achieved = next.distance(&previous);
        let scale = next.magnitude().max(T::one());
        previous = next;
        if achieved <= cfg.abs_tol * scale {
            return Ok(previous);
        }
    }
    Err(QuadratureError::NotConverged {
        estimate: previous,
        achieved: achieved.to_f64_lossy(),
        refinements: cfg.max_refinements,
    })
}

/// `∫_{t1}^{t2} f(s) ds` for any accumulable integrand.
pub fn integrate<T: Real, V: Integrand<T>>(
    mut f: impl FnMut(T) -> V,
    t1: T,
    t2: T,
    cfg: &QuadratureConfig<T>,
) -> Result<V, QuadratureError<V>> {
    if t2 == t1 {
        return Ok(f(t1).scaled(T::zero()));
    }
    let rule = GaussLegendre::new(cfg.nodes_per_panel);
    refine(cfg, t1, t2, |n| composite(&rule, t1, t2, n, &mut f))
}

/// Entrywise `∫_{t1}^{t2} F(s) ds` of an operator-valued function.
pub fn integrate_matrix<T: Real>(
    f: impl FnMut(T) -> Matrix<T>,
    t1: T,
    t2: T,
    cfg: &QuadratureConfig<T>,
) -> Result<Matrix<T>, QuadratureError<Matrix<T>>> {
    integrate(f, t1, t2, cfg)
}

pub fn integrate_scalar<T: Real>(
    f: impl FnMut(T) -> Cx<T>,
    t1: T,
    t2: T,
    cfg: &QuadratureConfig<T>,
) -> Result<Cx<T>, QuadratureError<Cx<T>>> {
    integrate(f, t1, t2, cfg)
}

/// `∫_{t1}^{t2} ds ∫_{t1}^{s} ds' g(s, s')` over the triangle, with the inner
/// rule running up to the outer node.
pub fn integrate_double_scalar<T: Real>(
    mut g: impl FnMut(T, T) -> Cx<T>,
    t1: T,
    t2: T,
    cfg: &QuadratureConfig<T>,
) -> Result<Cx<T>, QuadratureError<Cx<T>>> {
    if t2 == t1 {
        return Ok(Cx::zero());
    }
    let rule = GaussLegendre::new(cfg.nodes_per_panel);
    let span = t2 - t1;
    refine(cfg, t1, t2, |n| {
        let mut outer = |s: T| {
            let frac = (s - t1) / span;
            let inner_panels = (frac * T::count(n)).ceil().to_usize().unwrap_or(1).max(1);
            composite(&rule, t1, s, inner_panels, &mut |sp| g(s, sp))
        };
        composite(&rule, t1, t2, n, &mut outer)
    })
}

/// Gauss–Legendre rule with its integration matrix: row `i` integrates the
/// interpolant through the nodes from `-1` up to node `i`.
#[derive(Clone, Debug)]
struct PanelIntegrator<T: Real> {
    rule: GaussLegendre<T>,
    antiderivative: Vec<T>,
}

impl<T: Real> PanelIntegrator<T> {
    fn new(order: usize) -> Self {
        let rule = GaussLegendre::new(order);
        let x = rule.nodes().to_vec();
        let lagrange = |j: usize, u: T| {
            x.iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .fold(T::one(), |acc, (_, &xk)| acc * (u - xk) / (x[j] - xk))
        };
        let mut antiderivative = vec![T::zero(); order * order];
        for i in 0..order {
            for j in 0..order {
                antiderivative[i * order + j] = rule.integrate_real(-T::one(), x[i], |u| lagrange(j, u));
            }
        }
        PanelIntegrator {
            rule,
            antiderivative,
        }
    }
}

/// Running integrals at one output time of [`cumulative_second_order`].
#[derive(Clone, Debug, PartialEq)]
pub struct CumulativeTerms<T: Real> {
    pub t: T,
    /// `∫_{t1}^{t} H+`.
    pub int_plus: Matrix<T>,
    /// `∫_{t1}^{t} H−`.
    pub int_minus: Matrix<T>,
    pub cross: Cx<T>,
}

impl<T: Real> CumulativeTerms<T> {
    fn zero(t: T, dim: usize) -> Self {
        CumulativeTerms {
            t,
            int_plus: Matrix::zeros(dim),
            int_minus: Matrix::zeros(dim),
            cross: Cx::zero(),
        }
    }

    fn distance(&self, other: &Self) -> T {
        self.int_plus
            .max_abs_diff(&other.int_plus)
            .max(self.int_minus.max_abs_diff(&other.int_minus))
            .max((self.cross - other.cross).norm())
    }

    fn magnitude(&self) -> T {
        self.int_plus
            .max_abs()
            .max(self.int_minus.max_abs())
            .max(self.cross.norm())
    }
}

/// One pass over `[t1, times.last()]` with `base · mult` panels in total,
/// distributed over the output segments by length.
fn march<T: Real>(
    integrator: &PanelIntegrator<T>,
    parts: &mut impl FnMut(T) -> (Matrix<T>, Matrix<T>),
    psi: &StateVector<T>,
    t1: T,
    times: &[T],
    base: usize,
    mult: usize,
) -> Vec<CumulativeTerms<T>> {
    let p = integrator.rule.order();
    let dim = psi.dim();
    let span = *times.last().expect("non-empty") - t1;
    let mut acc = CumulativeTerms::zero(t1, dim);
    let mut out = Vec::with_capacity(times.len());
    let mut cursor = t1;
    let mut values = Vec::with_capacity(p);
    for &t in times {
        let seg = t - cursor;
        if seg > T::zero() {
            let share = (T::count(base) * seg / span).ceil();
            let panels = share.to_usize().unwrap_or(1).max(1) * mult;
            let width = seg / T::count(panels);
            for k in 0..panels {
                let lo = cursor + width * T::count(k);
                let hi = if k + 1 == panels { t } else { lo + width };
                let half = (hi - lo) * T::lit(0.5);
                values.clear();
                values.extend(integrator.rule.mapped(lo, hi).map(|(s, _)| parts(s)));
                for i in 0..p {
                    let mut kp = acc.int_plus.clone();
                    let mut km = acc.int_minus.clone();
                    for (j, (hp, hm)) in values.iter().enumerate() {
                        let a = half * integrator.antiderivative[i * p + j];
                        Integrand::add_scaled(&mut kp, a, hp);
                        Integrand::add_scaled(&mut km, a, hm);
                    }
                    let (hp, hm) = &values[i];
                    let c = &commutator(hp, &km).expect("dims") - &commutator(&kp, hm).expect("dims");
                    acc.cross += expectation(&c, psi).expect("dims") * (half * integrator.rule.weights()[i]);
                }
                for ((hp, hm), &w) in values.iter().zip(integrator.rule.weights()) {
                    Integrand::add_scaled(&mut acc.int_plus, half * w, hp);
                    Integrand::add_scaled(&mut acc.int_minus, half * w, hm);
                }
            }
            cursor = t;
        }
        acc.t = t;
        out.push(acc.clone());
    }
    out
}

/// `∫ H±` and the cross term
/// `∫_{t1}^{t} ds ∫_{t1}^{s} ds' <ψ| [H+(s), H−(s')] − [H+(s'), H−(s)] |ψ>`
/// at every output time, in a single sweep.
///
/// `parts(t)` returns `(H+(t), H−(t))`. The commutator is bilinear, so the
/// inner integral is taken on the operators: with `K±(s) = ∫_{t1}^{s} H±`
/// the integrand at `s` is `<[H+(s), K−(s)] − [K+(s), H−(s)]>`. Within a
/// panel `K±` at the nodes comes from the interpolant through the node
/// values. `times` must be non-decreasing and start at or after `t1`.
pub fn cumulative_second_order<T: Real>(
    mut parts: impl FnMut(T) -> (Matrix<T>, Matrix<T>),
    psi: &StateVector<T>,
    t1: T,
    times: &[T],
    cfg: &QuadratureConfig<T>,
) -> Result<Vec<CumulativeTerms<T>>, QuadratureError<Vec<CumulativeTerms<T>>>> {
    cfg.validate()
        .map_err(|e| QuadratureError::InvalidConfig(e.to_string()))?;
    let mut previous_t = t1;
    for &t in times {
        if !(t.is_finite() && t >= previous_t) {
            return Err(QuadratureError::Interval {
                t1: previous_t.to_f64_lossy(),
                t2: t.to_f64_lossy(),
            });
        }
        previous_t = t;
    }
    let last = match times.last() {
        Some(&t) if t > t1 => t,
        _ => {
            return Ok(times
                .iter()
                .map(|&t| CumulativeTerms::zero(t, psi.dim()))
                .collect())
        }
    };
    let integrator = PanelIntegrator::new(cfg.nodes_per_panel);
    let base = cfg.initial_panels(t1, last);
    let mut mult = 1usize;
    let mut previous = march(&integrator, &mut parts, psi, t1, times, base, mult);
    let mut achieved = T::infinity();
    for _ in 0..cfg.max_refinements {
        mult = mult.saturating_mul(2);
        let next = march(&integrator, &mut parts, psi, t1, times, base, mult);
        achieved = T::zero();
        let mut scale = T::one();
        for (a, b) in next.iter().zip(&previous) {
            achieved = achieved.max(a.distance(b));
            scale = scale.max(a.magnitude());
        }
        previous = next;
        if achieved <= cfg.abs_tol * scale {
            return Ok(previous);
        }
    }
    Err(QuadratureError::NotConverged {
        estimate: previous,
        achieved: achieved.to_f64_lossy(),
        refinements: cfg.max_refinements,
    })
}

/// The cross term over `[t1, t2]`; see [`cumulative_second_order`].
pub fn cross_term<T: Real>(
    parts: impl FnMut(T) -> (Matrix<T>, Matrix<T>),
    psi: &StateVector<T>,
    t1: T,
    t2: T,
    cfg: &QuadratureConfig<T>,
) -> Result<Cx<T>, QuadratureError<Cx<T>>> {
    if !(t2 >= t1) {
        return Err(QuadratureError::Interval {
            t1: t1.to_f64_lossy(),
            t2: t2.to_f64_lossy(),
        });
    }
    let pick = |mut v: Vec<CumulativeTerms<T>>| v.pop().map(|c| c.cross).unwrap_or_else(Cx::zero);
    match cumulative_second_order(parts, psi, t1, &[t2], cfg) {
        Ok(v) => Ok(pick(v)),
        Err(QuadratureError::Interval { t1, t2 }) => Err(QuadratureError::Interval { t1, t2 }),
        Err(QuadratureError::InvalidConfig(m)) => Err(QuadratureError::InvalidConfig(m)),
        Err(QuadratureError::NotConverged {
            estimate,
            achieved,
            refinements,
        }) => Err(QuadratureError::NotConverged {
            estimate: pick(estimate),
            achieved,
            refinements,
        }),
    }
}

/// Adaptive Gauss–Legendre for a real integrand: bisects any subinterval whose
/// one-panel and two-panel estimates differ by more than its share of `tol`.
pub fn adaptive_real<T: Real>(
    mut f: impl FnMut(T) -> T,
    a: T,
    b: T,
    tol: T,
) -> Result<T, QuadratureError<T>> {
    if a == b {
        return Ok(T::zero());
    }
    let rule = GaussLegendre::new(10);
    const MAX_DEPTH: usize = 40;
    let mut stack = vec![(a, b, tol, 0usize)];
    let mut total = T::zero();
    let mut worst = T::zero();
    let mut failed = false;
    while let Some((lo, hi, tol_here, depth)) = stack.pop() {
        let mid = (lo + hi) * T::lit(0.5);
        let whole = rule.integrate_real(lo, hi, &mut f);
        let halves = rule.integrate_real(lo, mid, &mut f) + rule.integrate_real(mid, hi, &mut f);
        let err = (whole - halves).abs();
        if err <= tol_here || depth >= MAX_DEPTH {
            if err > tol_here {
                failed = true;
                worst = worst.max(err);
            }
            total += halves;
        } else {
            let half_tol = tol_here * T::lit(0.5);
            stack.push((mid, hi, half_tol, depth + 1));
            stack.push((lo, mid, half_tol, depth + 1));
        }
    }
    if failed {
        return Err(QuadratureError::NotConverged {
            estimate: total,
            achieved: worst.to_f64_lossy(),
            refinements: MAX_DEPTH,
        });
    }
    Ok(total)
}
