//! Dense complex operators and states, plus the operator functionals used by
//! the survival-probability formula: Hermitian/anti-Hermitian split,
//! expectation values, variance and pseudo-variance, commutators.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cx, imag_unit, real, Cx, Real};

/// Dense square complex matrix, stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix<T: Real> {
    dim: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "({:+.6e} {:+.6e}i) ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Real> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Matrix {
            dim,
            data: vec![Cx::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Cx::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from `dim * dim` entries in row-major order.
    pub fn from_row_major(dim: usize, data: Vec<Cx<T>>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            let rows = if dim == 0 { 0 } else { data.len() / dim };
            return Err(Error::NotSquare { rows, cols: dim });
        }
        let m = Matrix { dim, data };
        if !m.is_finite() {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<Cx<T>>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::from_row_major(n, rows.concat())
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(entries: &[Cx<T>]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Cx<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<Cx<T>> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[Cx<T>]) {
        assert_eq!(col.len(), self.dim);
        for (i, &z) in col.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.dim).fold(Cx::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn scale(&self, k: Cx<T>) -> Self {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * k).collect(),
        }
    }

    pub fn scale_real(&self, k: T) -> Self {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * k).collect(),
        }
    }

    /// `self += k * other`.
    pub fn add_scaled(&mut self, k: Cx<T>, other: &Self) {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add_scaled");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * k;
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> T {
        (0..self.dim)
            .map(|j| (0..self.dim).fold(T::zero(), |s, i| s + self[(i, j)].norm()))
            .fold(T::zero(), T::max)
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> T {
        (0..self.dim)
            .map(|i| self.row(i).iter().fold(T::zero(), |s, z| s + z.norm()))
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "dimension mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    /// Hermitian within `tol` relative to the largest entry.
    pub fn is_hermitian(&self, tol: T) -> bool {
        let scale = self.max_abs().max(T::one());
        self.max_abs_diff(&self.adjoint()) <= tol * scale
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        check_dim(self.dim, rhs.dim)?;
        Ok(self.mul_unchecked(rhs))
    }

    fn mul_unchecked(&self, rhs: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    /// `y = self * x` written into `out`.
    pub fn apply_into(&self, x: &[Cx<T>], out: &mut [Cx<T>]) {
        let n = self.dim;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.data[i * n..(i + 1) * n]
                .iter()
                .zip(x)
                .fold(Cx::zero(), |acc, (&a, &b)| acc + a * b);
        }
    }

    pub fn apply(&self, psi: &StateVector<T>) -> Result<StateVector<T>> {
        check_dim(self.dim, psi.dim())?;
        let mut out = vec![Cx::zero(); self.dim];
        self.apply_into(psi.amplitudes(), &mut out);
        Ok(StateVector { amps: out })
    }

    /// Solves `self * X = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        check_dim(self.dim, rhs.dim)?;
        let n = self.dim;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| {
                    a[(p, col)]
                        .norm()
                        .partial_cmp(&a[(q, col)].norm())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if a[(pivot, col)].norm() == T::zero() {
                return Err(Error::Domain("singular matrix in linear solve".into()));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    b.data.swap(pivot * n + j, col * n + j);
                }
            }
            let inv = a[(col, col)].inv();
            for row in col + 1..n {
                let factor = a[(row, col)] * inv;
                if factor.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(row, j)] -= factor * v;
                }
                for j in 0..n {
                    let v = b[(col, j)];
                    b[(row, j)] -= factor * v;
                }
            }
        }
        for col in (0..n).rev() {
            let inv = a[(col, col)].inv();
            for j in 0..n {
                let mut acc = b[(col, j)];
                for k in col + 1..n {
                    acc -= a[(col, k)] * b[(k, j)];
                }
                b[(col, j)] = acc * inv;
            }
        }
        Ok(b)
    }
}

impl<T: Real> Index<(usize, usize)> for Matrix<T> {
    type Output = Cx<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix add");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Add for Matrix<T> {
    type Output = Matrix<T>;
    fn add(mut self, rhs: Matrix<T>) -> Matrix<T> {
        self += &rhs;
        self
    }
}

impl<T: Real> AddAssign<&Matrix<T>> for Matrix<T> {
    fn add_assign(&mut self, rhs: &Matrix<T>) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix add");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl<T: Real> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix sub");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> Sub for Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: Matrix<T>) -> Matrix<T> {
        &self - &rhs
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        self.mul_unchecked(rhs)
    }
}

impl<T: Real> Mul for Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: Matrix<T>) -> Matrix<T> {
        &self * &rhs
    }
}

impl<T: Real> Neg for Matrix<T> {
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        self.scale_real(-T::one())
    }
}

/// Complex amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    amps: Vec<Cx<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn new(amps: Vec<Cx<T>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Dimension {
                expected: 1,
                found: 0,
            });
        }
        if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(StateVector { amps })
    }

    /// Builds the state and rescales it to unit norm.
    pub fn normalized(amps: Vec<Cx<T>>) -> Result<Self> {
        let s = Self::new(amps)?;
        let n = s.norm();
        if n == T::zero() {
            return Err(Error::NotNormalized { norm: 0.0 });
        }
        Ok(s.scale(real(n.recip())))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut amps = vec![Cx::zero(); dim];
        amps[index] = Cx::one();
        StateVector { amps }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Cx<T>] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Cx<T>> {
        self.amps
    }

    pub fn norm(&self) -> T {
        self.amps
            .iter()
            .fold(T::zero(), |s, z| s + z.norm_sqr())
            .sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - T::one()).abs() <= T::tol(1e-12)
    }

    pub fn scale(&self, k: Cx<T>) -> Self {
        StateVector {
            amps: self.amps.iter().map(|&z| z * k).collect(),
        }
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Cx<T>> {
        check_dim(self.dim(), other.dim())?;
        Ok(inner_slices(&self.amps, &other.amps))
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[inline]
pub(crate) fn inner_slices<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    a.iter()
        .zip(b)
        .fold(Cx::zero(), |acc, (x, y)| acc + x.conj() * y)
}

#[inline]
fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

/// Splits `H` into its Hermitian part `(H + H†)/2` and anti-Hermitian part `(H − H†)/2`.
pub fn hermitian_split<T: Real>(h: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    let half = T::lit(0.5);
    let n = h.dim();
    let mut plus = Matrix::zeros(n);
    let mut minus = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let a = h[(i, j)];
            let b = h[(j, i)].conj();
            plus[(i, j)] = (a + b) * half;
            minus[(i, j)] = (a - b) * half;
        }
    }
    (plus, minus)
}

/// `<ψ|A|ψ>`.
pub fn expectation<T: Real>(a: &Matrix<T>, psi: &StateVector<T>) -> Result<Cx<T>> {
    check_dim(a.dim(), psi.dim())?;
    let mut v = vec![Cx::zero(); a.dim()];
    a.apply_into(psi.amplitudes(), &mut v);
    Ok(inner_slices(psi.amplitudes(), &v))
}

/// Returns `(<ψ|A²|ψ>, <ψ|A|ψ>)`.
fn second_moment<T: Real>(a: &Matrix<T>, psi: &StateVector<T>) -> Result<(Cx<T>, Cx<T>)> {
    check_dim(a.dim(), psi.dim())?;
    let n = a.dim();
    let mut v = vec![Cx::zero(); n];
    let mut w = vec![Cx::zero(); n];
    a.apply_into(psi.amplitudes(), &mut v);
    a.apply_into(&v, &mut w);
    Ok((
        inner_slices(psi.amplitudes(), &w),
        inner_slices(psi.amplitudes(), &v),
    ))
}

/// Pseudo-variance `<A²> + <A>²`.
pub fn delta_plus<T: Real>(a: &Matrix<T>, psi: &StateVector<T>) -> Result<Cx<T>> {
    let (m2, m1) = second_moment(a, psi)?;
    Ok(m2 + m1 * m1)
}

/// Ordinary variance `<A²> − <A>²`.
pub fn delta_minus<T: Real>(a: &Matrix<T>, psi: &StateVector<T>) -> Result<Cx<T>> {
    let (m2, m1) = second_moment(a, psi)?;
    Ok(m2 - m1 * m1)
}

/// `[A, B] = AB − BA`.
pub fn commutator<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    check_dim(a.dim(), b.dim())?;
    let n = a.dim();
    let mut out = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Cx::zero();
            for k in 0..n {
                acc += a[(i, k)] * b[(k, j)] - b[(i, k)] * a[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix exponential argument"));
    }
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;

    let n = a.dim();
    let norm = a.norm_one().to_f64_lossy();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.scale_real(T::lit(2f64.powi(-squarings)));
    let b = |k: usize| real(T::lit(B[k]));

    let ident = Matrix::identity(n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let mut u_inner = a6.scale(b(13));
    u_inner.add_scaled(b(11), &a4);
    u_inner.add_scaled(b(9), &a2);
    let mut u = &a6 * &u_inner;
    u.add_scaled(b(7), &a6);
    u.add_scaled(b(5), &a4);
    u.add_scaled(b(3), &a2);
    u.add_scaled(b(1), &ident);
    let u = &scaled * &u;

    let mut v_inner = a6.scale(b(12));
    v_inner.add_scaled(b(10), &a4);
    v_inner.add_scaled(b(8), &a2);
    let mut v = &a6 * &v_inner;
    v.add_scaled(b(6), &a6);
    v.add_scaled(b(4), &a4);
    v.add_scaled(b(2), &a2);
    v.add_scaled(b(0), &ident);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.solve(&p)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Pauli matrices, identity and the named two-level states, all in the σz eigenbasis
/// with `|+> = (1, 0)` and `|-> = (0, 1)`.
pub mod pauli {
    use super::*;

    pub fn identity<T: Real>() -> Matrix<T> {
        Matrix::identity(2)
    }

    pub fn sigma_x<T: Real>() -> Matrix<T> {
        let (o, l) = (Cx::zero(), Cx::one());
        Matrix::from_row_major(2, vec![o, l, l, o]).expect("2x2")
    }

    pub fn sigma_y<T: Real>() -> Matrix<T> {
        let o = Cx::zero();
        let i = imag_unit::<T>();
        Matrix::from_row_major(2, vec![o, -i, i, o]).expect("2x2")
    }

    pub fn sigma_z<T: Real>() -> Matrix<T> {
        let (o, l) = (Cx::zero(), Cx::one());
        Matrix::from_row_major(2, vec![l, o, o, -l]).expect("2x2")
    }

    /// `|+>` (σz = +1).
    pub fn plus<T: Real>() -> StateVector<T> {
        StateVector::basis(2, 0)
    }

    /// `|->` (σz = −1).
    pub fn minus<T: Real>() -> StateVector<T> {
        StateVector::basis(2, 1)
    }

    fn pair<T: Real>(a: Cx<T>, b: Cx<T>) -> StateVector<T> {
        let r = T::FRAC_1_SQRT_2();
        StateVector::new(vec![a * r, b * r]).expect("finite")
    }

    /// `|+>_x = (|+> + |->)/√2`.
    pub fn plus_x<T: Real>() -> StateVector<T> {
        pair(Cx::one(), Cx::one())
    }

    /// `|->_x = (|+> − |->)/√2`.
    pub fn minus_x<T: Real>() -> StateVector<T> {
        pair(Cx::one(), -Cx::one())
    }

    /// `|+>_y = (|+> + i|->)/√2`.
    pub fn plus_y<T: Real>() -> StateVector<T> {
        pair(Cx::one(), imag_unit())
    }

    /// `|->_y = (|+> − i|->)/√2`.
    pub fn minus_y<T: Real>() -> StateVector<T> {
        pair(Cx::one(), -imag_unit::<T>())
    }

    /// Jump operator `τ+ = |+>_x x<-|`.
    pub fn tau_plus<T: Real>() -> Matrix<T> {
        outer(&plus_x(), &minus_x())
    }

    /// Jump operator `τ- = |->_x x<+|`.
    pub fn tau_minus<T: Real>() -> Matrix<T> {
        outer(&minus_x(), &plus_x())
    }

    /// `|a><b|`.
    pub fn outer<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Matrix<T> {
        let n = a.dim();
        assert_eq!(n, b.dim());
        Matrix::from_fn(n, |i, j| a.amplitudes()[i] * b.amplitudes()[j].conj())
    }

    /// Exact `exp(−i θ G)` for a Hermitian 2x2 generator `G = g0·1 + g·σ`.
    pub fn rotation<T: Real>(generator: &Matrix<T>, theta: T) -> Matrix<T> {
        assert_eq!(generator.dim(), 2);
        let half = T::lit(0.5);
        let g = generator;
        let g0 = ((g[(0, 0)] + g[(1, 1)]) * half).re;
        let gx = ((g[(0, 1)] + g[(1, 0)]) * half).re;
        let gy = ((g[(1, 0)] - g[(0, 1)]) * half).im;
        let gz = ((g[(0, 0)] - g[(1, 1)]) * half).re;
        let len = (gx * gx + gy * gy + gz * gz).sqrt();
        let global = Cx::from_polar(T::one(), -g0 * theta);
        let c = (len * theta).cos();
        let mut m = identity::<T>().scale_real(c);
        if len > T::zero() {
            let s = (len * theta).sin() / len;
            let axis = &(&sigma_x::<T>().scale_real(gx) + &sigma_y::<T>().scale_real(gy))
                + &sigma_z::<T>().scale_real(gz);
            m.add_scaled(cx(T::zero(), -s), &axis);
        }
        m.scale(global)
    }
}
