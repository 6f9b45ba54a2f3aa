//! Dense complex operators and quantum-state primitives.
//!
//! Basis conventions used throughout the crate: qubit `|0>` is the +1
//! eigenstate of `σz`, composite spaces are ordered `qubit1 ⊗ qubit2 ⊗
//! oscillator`, and the Fock basis is ascending in phonon number.

use std::ops::{Add, Mul, Sub};

use ndarray::{s, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// A dense `dim × dim` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: Array2<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Operator { m: Array2::zeros((dim, dim)) }
    }

    pub fn identity(dim: usize) -> Self {
        Operator { m: Array2::eye(dim) }
    }

    pub fn from_array(m: Array2<C64>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, found: c });
        }
        Ok(Operator { m })
    }

    /// Builds an operator from row-major entries. Panics if `rows` is ragged;
    /// intended for small literal matrices.
    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        Operator { m: Array2::from_shape_fn((N, N), |(i, j)| rows[i][j]) }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Array2::zeros((diag.len(), diag.len()));
        for (k, d) in diag.iter().enumerate() {
            m[[k, k]] = *d;
        }
        Operator { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.m
    }

    pub fn as_array_mut(&mut self) -> &mut Array2<C64> {
        &mut self.m
    }

    pub fn into_array(self) -> Array2<C64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[[i, j]]
    }

    pub fn dag(&self) -> Operator {
        Operator { m: self.m.t().mapv(|z| z.conj()) }
    }

    pub fn trace(&self) -> C64 {
        self.m.diag().sum()
    }

    pub fn scale(&self, a: C64) -> Operator {
        Operator { m: &self.m * a }
    }

    pub fn scale_re(&self, a: f64) -> Operator {
        Operator { m: self.m.mapv(|z| z * a) }
    }

    /// `self += a * other`
    pub fn add_scaled(&mut self, a: C64, other: &Operator) {
        self.m.scaled_add(a, &other.m);
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        self.m
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.dag())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    pub fn unitarity_error(&self) -> f64 {
        (&self.dag() * self).max_abs_diff(&Operator::identity(self.dim()))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() < tol
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Operator) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.m[[i, k]] * other.m[[k, i]];
            }
        }
        acc
    }

    /// `self · x · self†`
    pub fn sandwich(&self, x: &Operator) -> Operator {
        let tmp = self.m.dot(&x.m);
        Operator { m: tmp.dot(&self.m.t().mapv(|z| z.conj())) }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.m[[i, j]] * v[j]).sum()).collect()
    }

    pub fn powi(&self, n: u64) -> Operator {
        let mut result = Operator::identity(self.dim());
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator { m: self.m.dot(&rhs.m) }
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator { m: &self.m + &rhs.m }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator { m: &self.m - &rhs.m }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
    /// The identity, `σ0`.
    I,
}

pub fn pauli(axis: PauliAxis) -> Operator {
    let (o, z) = (ONE, ZERO);
    match axis {
        PauliAxis::X => Operator::from_rows([[z, o], [o, z]]),
        PauliAxis::Y => Operator::from_rows([[z, -I], [I, z]]),
        PauliAxis::Z => Operator::from_rows([[o, z], [z, -o]]),
        PauliAxis::I => Operator::identity(2),
    }
}

/// `½ (fx σx + fy σy + fz σz)`
pub fn half_field(f: [f64; 3]) -> Operator {
    let (x, y, z) = (f[0] * 0.5, f[1] * 0.5, f[2] * 0.5);
    Operator::from_rows([
        [C64::new(z, 0.0), C64::new(x, -y)],
        [C64::new(x, y), C64::new(-z, 0.0)],
    ])
}

/// Oscillator lowering operator `b` truncated to `n_fock` levels.
pub fn annihilation(n_fock: usize) -> Operator {
    let mut m = Array2::zeros((n_fock, n_fock));
    for n in 1..n_fock {
        m[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator { m }
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (na, nb) = (a.dim(), b.dim());
    let mut m = Array2::zeros((na * nb, na * nb));
    for i in 0..na {
        for j in 0..na {
            let aij = a.m[[i, j]];
            if aij == ZERO {
                continue;
            }
            let mut block = m.slice_mut(s![i * nb..(i + 1) * nb, j * nb..(j + 1) * nb]);
            block.zip_mut_with(&b.m, |dst, src| *dst = aij * src);
        }
    }
    Operator { m }
}

pub fn kron_all(ops: &[&Operator]) -> Operator {
    let mut it = ops.iter();
    let first = it.next().map(|o| (*o).clone()).unwrap_or_else(|| Operator::identity(1));
    it.fold(first, |acc, o| kron(&acc, o))
}

// Padé coefficients and 1-norm thresholds for degrees 3, 5, 7, 9, 13.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
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
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of degree 3 to 13.
pub fn expm(a: &Operator) -> Result<Operator> {
    if !a.is_finite() {
        return Err(Error::NonFinite("expm input"));
    }
    let n = a.dim();
    let norm = a.norm_one();
    if norm == 0.0 {
        return Ok(Operator::identity(n));
    }
    let id = Array2::<C64>::eye(n);
    for &(deg, theta) in &THETA {
        if norm <= theta {
            let (u, v) = pade_low(&a.m, &id, deg);
            return pade_solve(&u, &v).map(|m| Operator { m });
        }
    }
    let s = (norm / THETA13).log2().ceil().max(0.0) as i32;
    let scaled = a.m.mapv(|z| z * 2f64.powi(-s));
    let (u, v) = pade13(&scaled, &id);
    let mut x = pade_solve(&u, &v)?;
    for _ in 0..s {
        x = x.dot(&x);
    }
    Ok(Operator { m: x })
}

fn pade_low(a: &Array2<C64>, id: &Array2<C64>, deg: usize) -> (Array2<C64>, Array2<C64>) {
    let b: &[f64] = match deg {
        3 => &PADE3,
        5 => &PADE5,
        7 => &PADE7,
        _ => &PADE9,
    };
    let a2 = a.dot(a);
    let mut pow = id.clone();
    let mut u_inner = id.mapv(|z| z * b[1]);
    let mut v = id.mapv(|z| z * b[0]);
    let mut k = 2;
    while k <= deg {
        pow = pow.dot(&a2);
        v.scaled_add(C64::new(b[k], 0.0), &pow);
        u_inner.scaled_add(C64::new(b[k + 1], 0.0), &pow);
        k += 2;
    }
    (a.dot(&u_inner), v)
}

fn pade13(a: &Array2<C64>, id: &Array2<C64>) -> (Array2<C64>, Array2<C64>) {
    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let mut inner_u = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    inner_u = a6.dot(&inner_u);
    inner_u = inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + id * b(1);
    let u = a.dot(&inner_u);
    let mut v = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    v = a6.dot(&v);
    v = v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + id * b(0);
    (u, v)
}

fn pade_solve(u: &Array2<C64>, v: &Array2<C64>) -> Result<Array2<C64>> {
    let lhs = v - u;
    let rhs = v + u;
    lu_solve(lhs, rhs)
}

/// Solves `A X = B` by LU decomposition with partial pivoting.
pub(crate) fn lu_solve(a: Array2<C64>, b: Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    let nrhs = b.ncols();
    let mut lu: Vec<C64> = a.iter().cloned().collect();
    let mut x: Vec<C64> = b.iter().cloned().collect();
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[k * n + k].norm();
        for r in k + 1..n {
            let v = lu[r * n + k].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(Error::NonFinite("singular matrix in linear solve"));
        }
        if piv != k {
            for c in 0..n {
                lu.swap(k * n + c, piv * n + c);
            }
            for c in 0..nrhs {
                x.swap(k * nrhs + c, piv * nrhs + c);
            }
        }
        let inv = ONE / lu[k * n + k];
        for r in k + 1..n {
            let f = lu[r * n + k] * inv;
            if f == ZERO {
                continue;
            }
            lu[r * n + k] = f;
            let (top, bottom) = lu.split_at_mut(r * n);
            let pivot_row = &top[k * n..k * n + n];
            let row = &mut bottom[..n];
            for c in k + 1..n {
                row[c] -= f * pivot_row[c];
            }
            let (xtop, xbottom) = x.split_at_mut(r * nrhs);
            let xp = &xtop[k * nrhs..k * nrhs + nrhs];
            let xr = &mut xbottom[..nrhs];
            for c in 0..nrhs {
                xr[c] -= f * xp[c];
            }
        }
    }
    for k in (0..n).rev() {
        let inv = ONE / lu[k * n + k];
        for c in 0..nrhs {
            let mut acc = x[k * nrhs + c];
            for j in k + 1..n {
                acc -= lu[k * n + j] * x[j * nrhs + c];
            }
            x[k * nrhs + c] = acc * inv;
        }
    }
    Ok(Array2::from_shape_vec((n, nrhs), x).expect("shape preserved"))
}

/// Projects a nearly unitary matrix onto the closest unitary (polar factor) by
/// Newton–Schulz iteration `X ← X (3I − X†X) / 2`.
pub fn reunitarize(u: &Operator) -> Operator {
    let n = u.dim();
    let id = Array2::<C64>::eye(n);
    let mut x = u.m.clone();
    for _ in 0..8 {
        let xtx = x.t().mapv(|z| z.conj()).dot(&x);
        let err = xtx.iter().zip(id.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if err < 1e-15 {
            break;
        }
        let corr = (&id * C64::new(3.0, 0.0) - &xtx) * C64::new(0.5, 0.0);
        x = x.dot(&corr);
    }
    Operator { m: x }
}

/// Eigenvalues of a Hermitian operator, ascending, by cyclic Jacobi rotations
/// on the real symmetric embedding `[[Re A, -Im A], [Im A, Re A]]`.
pub fn hermitian_eigenvalues(a: &Operator) -> Vec<f64> {
    let n = a.dim();
    let m = 2 * n;
    let mut s = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = a.m[[i, j]];
            s[i * m + j] = z.re;
            s[(i + n) * m + (j + n)] = z.re;
            s[i * m + (j + n)] = -z.im;
            s[(i + n) * m + j] = z.im;
        }
    }
    // symmetrize against tiny non-Hermitian noise
    for i in 0..m {
        for j in i + 1..m {
            let v = 0.5 * (s[i * m + j] + s[j * m + i]);
            s[i * m + j] = v;
            s[j * m + i] = v;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[i * m + j] * s[i * m + j])
            .sum();
        let diag: f64 = (0..m).map(|i| s[i * m + i] * s[i * m + i]).sum();
        if off <= 1e-30 * diag.max(1e-300) || off == 0.0 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = s[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = s[p * m + p];
                let aqq = s[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..m {
                    let akp = s[k * m + p];
                    let akq = s[k * m + q];
                    s[k * m + p] = c * akp - sn * akq;
                    s[k * m + q] = sn * akp + c * akq;
                }
                for k in 0..m {
                    let apk = s[p * m + k];
                    let aqk = s[q * m + k];
                    s[p * m + k] = c * apk - sn * aqk;
                    s[q * m + k] = sn * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..m).map(|i| s[i * m + i]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    // each eigenvalue of A appears twice in the embedding
    ev.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}

/// Both eigenvalues of a 2×2 operator.
pub fn eigenvalues_2x2(a: &Operator) -> [C64; 2] {
    assert_eq!(a.dim(), 2, "eigenvalues_2x2 needs a 2x2 operator");
    let tr = a.trace();
    let det = a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(1, 0);
    let disc = (tr * tr - det * 4.0).sqrt();
    [(tr - disc) * 0.5, (tr + disc) * 0.5]
}

/// Ordered tensor-product factor dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeSpace {
    factor_dims: Vec<usize>,
}

impl CompositeSpace {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() || factor_dims.contains(&0) {
            return Err(Error::invalid("factor_dims", "factor dimensions must be positive"));
        }
        Ok(CompositeSpace { factor_dims })
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn dim(&self) -> usize {
        self.factor_dims.iter().product()
    }
}

/// Traces out every factor not listed in `keep`. The kept factors retain
/// their relative order.
pub fn partial_trace(a: &Operator, space: &CompositeSpace, keep: &[usize]) -> Result<Operator> {
    let dims = space.factor_dims();
    if a.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: a.dim() });
    }
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::invalid("keep", "factor index out of range"));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    // strides of each factor in the full row-major index
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offset = |digits_of: &[usize], which: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for (pos, &factor) in which.iter().enumerate().rev() {
            let d = digits_of[pos];
            off += (idx % d) * strides[factor];
            idx /= d;
        }
        off
    };
    let kept_off: Vec<usize> = (0..dk).map(|i| offset(&kept_dims, &keep_sorted, i)).collect();
    let traced_off: Vec<usize> = (0..dt).map(|i| offset(&traced_dims, &traced, i)).collect();

    let mut out = Array2::<C64>::zeros((dk, dk));
    for (i, &ri) in kept_off.iter().enumerate() {
        for (j, &cj) in kept_off.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced_off {
                acc += a.m[[ri + t, cj + t]];
            }
            out[[i, j]] = acc;
        }
    }
    Ok(Operator { m: out })
}

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    density: Operator,
}

impl State {
    pub const TRACE_TOL: f64 = 1e-10;
    pub const EIGEN_TOL: f64 = 1e-9;

    pub fn new(density: Operator) -> Result<Self> {
        if !density.is_finite() {
            return Err(Error::NonFinite("density matrix"));
        }
        if !density.is_hermitian(1e-10) {
            return Err(Error::invalid("density", "not Hermitian"));
        }
        let tr = density.trace();
        if (tr - ONE).norm() >= Self::TRACE_TOL {
            return Err(Error::invalid("density", format!("trace {tr} differs from 1")));
        }
        let min_ev = hermitian_eigenvalues(&density)[0];
        if min_ev <= -Self::EIGEN_TOL {
            return Err(Error::invalid("density", format!("negative eigenvalue {min_ev:e}")));
        }
        Ok(State { density })
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let n = psi.len();
        let m = Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj() / (norm * norm));
        State::new(Operator { m })
    }

    pub fn density(&self) -> &Operator {
        &self.density
    }

    pub fn into_density(self) -> Operator {
        self.density
    }

    pub fn purity(&self) -> f64 {
        self.density.trace_product(&self.density).re
    }
}

/// Truncated thermal oscillator state together with the probability mass the
/// truncation discarded.
#[derive(Clone, Debug)]
pub struct ThermalState {
    pub state: State,
    pub populations: Vec<f64>,
    pub tail_mass: f64,
}

/// Diagonal thermal state `p_n = n̄^n / (1 + n̄)^(n+1)`, renormalized over the
/// first `n_fock` levels.
pub fn thermal_oscillator_state(nbar: f64, n_fock: usize) -> Result<ThermalState> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::invalid("nbar", "mean phonon number must be finite and >= 0"));
    }
    if n_fock < 2 {
        return Err(Error::invalid("n_fock", "need at least two Fock levels"));
    }
    let raw: Vec<f64> = (0..n_fock).map(|n| thermal_population(nbar, n)).collect();
    let kept: f64 = raw.iter().sum();
    let populations: Vec<f64> = raw.iter().map(|p| p / kept).collect();
    let diag: Vec<C64> = populations.iter().map(|&p| C64::new(p, 0.0)).collect();
    let state = State { density: Operator::from_diag(&diag) };
    Ok(ThermalState { state, populations, tail_mass: 1.0 - kept })
}

/// Untruncated thermal occupation probability of Fock level `n`.
pub fn thermal_population(nbar: f64, n: usize) -> f64 {
    if nbar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let r = nbar / (1.0 + nbar);
    r.powi(n as i32) / (1.0 + nbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_matrices() {
        let x = pauli(PauliAxis::X);
        assert_eq!(x, Operator::from_rows([[ZERO, ONE], [ONE, ZERO]]));
        let z = pauli(PauliAxis::Z);
        assert_eq!(z, Operator::from_rows([[ONE, ZERO], [ZERO, -ONE]]));
        let y = pauli(PauliAxis::Y);
        assert!((&y * &y).max_abs_diff(&Operator::identity(2)) < 1e-15);
        for axis in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z, PauliAxis::I] {
            assert!(pauli(axis).is_hermitian(1e-15));
        }
    }

    #[test]
    fn expm_identity_and_rotations() {
        assert_eq!(expm(&Operator::zeros(3)).unwrap(), Operator::identity(3));

        let x = pauli(PauliAxis::X);
        let u = expm(&x.scale(c(0.0, -PI / 2.0))).unwrap();
        assert!(u.max_abs_diff(&x.scale(c(0.0, -1.0))) < 1e-14);

        let theta = 0.731;
        let u = expm(&pauli(PauliAxis::Z).scale(c(0.0, -theta / 2.0))).unwrap();
        assert!((u.get(0, 0) - C64::from_polar(1.0, -theta / 2.0)).norm() < 1e-15);
        assert!((u.get(1, 1) - C64::from_polar(1.0, theta / 2.0)).norm() < 1e-15);
        assert!(u.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        let h = half_field([40.0, -13.0, 7.5]);
        let t = 3.0;
        let u = expm(&h.scale(c(0.0, -t))).unwrap();
        // closed form exp(-i t |f|/2 n·σ)
        let f = (40.0f64 * 40.0 + 13.0 * 13.0 + 7.5 * 7.5).sqrt();
        let a = 0.5 * f * t;
        let n = [40.0 / f, -13.0 / f, 7.5 / f];
        let expected = &Operator::identity(2).scale_re(a.cos())
            + &half_field([2.0 * n[0], 2.0 * n[1], 2.0 * n[2]]).scale(c(0.0, -a.sin()));
        assert!(u.max_abs_diff(&expected) < 1e-12, "{}", u.max_abs_diff(&expected));
        assert!(u.is_unitary(1e-12));
    }

    #[test]
    fn expm_rejects_non_finite() {
        let mut a = Operator::zeros(2);
        a.as_array_mut()[[0, 1]] = c(f64::NAN, 0.0);
        assert!(matches!(expm(&a), Err(Error::NonFinite(_))));
    }

    #[test]
    fn kron_conventions() {
        let i2 = Operator::identity(2);
        assert_eq!(kron(&i2, &i2), Operator::identity(4));
        // |10> has index 2 with qubit-1 major ordering
        let zi = kron(&pauli(PauliAxis::Z), &i2);
        assert_eq!(zi.get(2, 2), -ONE);
        assert_eq!(zi.get(1, 1), ONE);
        let a = half_field([0.3, 0.2, 1.0]);
        let b = Operator::from_diag(&[c(2.0, 0.0), c(0.5, 1.0), c(-1.0, 0.0)]);
        let tr = kron(&a, &b).trace();
        assert!((tr - a.trace() * b.trace()).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_cases() {
        let rho = half_field([0.2, 0.1, 0.4]);
        let sigma = Operator::from_diag(&[c(0.25, 0.0), c(0.5, 0.0), c(0.25, 0.0)]);
        let space = CompositeSpace::new(vec![2, 3]).unwrap();
        let full = kron(&rho, &sigma);
        let reduced = partial_trace(&full, &space, &[0]).unwrap();
        assert!(reduced.max_abs_diff(&rho.scale(sigma.trace())) < 1e-15);
        let reduced_b = partial_trace(&full, &space, &[1]).unwrap();
        assert!(reduced_b.max_abs_diff(&sigma.scale(rho.trace())) < 1e-15);
        let all = partial_trace(&full, &space, &[0, 1]).unwrap();
        assert_eq!(all, full);
        let bad = CompositeSpace::new(vec![2, 2]).unwrap();
        assert!(matches!(
            partial_trace(&full, &bad, &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partial_trace_middle_factor() {
        let a = half_field([1.0, 0.0, 0.5]);
        let b = Operator::from_diag(&[c(0.7, 0.0), c(0.3, 0.0)]);
        let d = half_field([0.0, 2.0, -1.0]);
        let space = CompositeSpace::new(vec![2, 2, 2]).unwrap();
        let full = kron_all(&[&a, &b, &d]);
        let kept = partial_trace(&full, &space, &[0, 2]).unwrap();
        assert!(kept.max_abs_diff(&kron(&a, &d).scale(b.trace())) < 1e-15);
    }

    #[test]
    fn thermal_state_values() {
        let ground = thermal_oscillator_state(0.0, 5).unwrap();
        assert_eq!(ground.populations[0], 1.0);
        assert_eq!(ground.tail_mass, 0.0);

        assert!((thermal_population(0.6, 0) - 0.625).abs() < 1e-15);
        let th = thermal_oscillator_state(0.6, 30).unwrap();
        let total: f64 = th.populations.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!(th.tail_mass > 0.0 && th.tail_mass < 1e-11);
        assert!(th.populations.windows(2).all(|w| w[1] <= w[0]));

        assert!(thermal_oscillator_state(-0.1, 10).is_err());
        assert!(thermal_oscillator_state(0.1, 1).is_err());
    }

    #[test]
    fn state_validation() {
        let plus = [c(1.0, 0.0), c(1.0, 0.0)];
        let s = State::pure(&plus).unwrap();
        assert!((s.purity() - 1.0).abs() < 1e-14);
        let not_psd = Operator::from_diag(&[c(1.5, 0.0), c(-0.5, 0.0)]);
        assert!(State::new(not_psd).is_err());
        let bad_trace = Operator::from_diag(&[c(0.5, 0.0), c(0.4, 0.0)]);
        assert!(State::new(bad_trace).is_err());
    }

    #[test]
    fn hermitian_eigenvalues_of_pauli_field() {
        let h = half_field([3.0, 4.0, 0.0]);
        let ev = hermitian_eigenvalues(&h);
        assert!((ev[0] + 2.5).abs() < 1e-12 && (ev[1] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn reunitarize_restores_unitarity() {
        let u = expm(&half_field([1.0, 2.0, 3.0]).scale(c(0.0, -1.0))).unwrap();
        let noisy = &u + &Operator::identity(2).scale_re(1e-7);
        let fixed = reunitarize(&noisy);
        assert!(fixed.is_unitary(1e-14));
        assert!(fixed.max_abs_diff(&u) < 1e-6);
    }
}
