//! Dense complex operator algebra.
//!
//! Density matrices are flattened column by column: matrix element `(n, m)`
//! of an `N x N` operator lives at supervector index `n + N*m`. This is the
//! native storage order of [`nalgebra::DMatrix`], so [`unfold`] and [`fold`]
//! are plain copies. Every superoperator in the crate is built against this
//! convention, in particular `vec(X rho Y) = (Y^T (x) X) vec(rho)`.

use std::ops::{Add, Deref, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix acting on an `N`-level Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::MalformedInput("operator dimension must be at least 1".into()));
        }
        check_dim(m.nrows(), m.ncols())?;
        Ok(Self { m })
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::MalformedInput(format!(
                "expected {} entries for a {dim}x{dim} operator, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(dim, &c)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { m: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self { m: DMatrix::from_diagonal(&DVector::from_column_slice(values)) }
    }

    /// The matrix unit `|a><b|`.
    pub fn ket_bra(dim: usize, a: usize, b: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(a, b)] = ONE;
        Self { m }
    }

    /// `|psi><phi|` for arbitrary vectors.
    pub fn outer(psi: &DVector<C64>, phi: &DVector<C64>) -> Self {
        Self { m: psi * phi.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, n: usize, m: usize) -> C64 {
        self.m[(n, m)]
    }

    pub fn dagger(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { m: self.m.transpose() }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { m: &self.m * c }
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// `max |A - A^dagger|` elementwise.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |A^dagger A - I|` elementwise.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.m.adjoint() * &self.m;
        (p - DMatrix::<C64>::identity(self.dim(), self.dim()))
            .iter()
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self { m: (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0) }
    }

    /// Real eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.hermitian_part().m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Nearest unitary in the Frobenius sense (unitary factor of the polar decomposition).
    pub fn polar_unitary(&self) -> Self {
        let svd = self.m.clone().svd(true, true);
        let u = svd.u.expect("svd computed with u");
        let v_t = svd.v_t.expect("svd computed with v_t");
        Self { m: u * v_t }
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { m: &self.m * &other.m - &other.m * &self.m })
    }

    /// `{A, B} = AB + BA`.
    pub fn anticommutator(&self, other: &Operator) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { m: &self.m * &other.m + &other.m * &self.m })
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m + &rhs.m }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m - &rhs.m }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m * &rhs.m }
    }
}

/// Standard two-level operators. Index 0 is the ground state and index 1 the
/// excited state, so the free atom reads `H = (w0/2) sigma_z` with
/// `sigma_z = |1><1| - |0><0|`.
pub mod two_level {
    use super::*;

    pub fn sigma_x() -> Operator {
        Operator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).expect("2x2")
    }

    pub fn sigma_y() -> Operator {
        Operator::from_rows(2, &[ZERO, -I, I, ZERO]).expect("2x2")
    }

    pub fn sigma_z() -> Operator {
        Operator::from_real_rows(2, &[-1.0, 0.0, 0.0, 1.0]).expect("2x2")
    }

    /// Lowering operator `|0><1|`.
    pub fn sigma_minus() -> Operator {
        Operator::ket_bra(2, 0, 1)
    }

    /// Raising operator `|1><0|`.
    pub fn sigma_plus() -> Operator {
        Operator::ket_bra(2, 1, 0)
    }

    pub fn excited_projector() -> Operator {
        Operator::ket_bra(2, 1, 1)
    }

    pub fn ground_projector() -> Operator {
        Operator::ket_bra(2, 0, 0)
    }
}

/// A density matrix. Construction from a pure state or a basis projector
/// guarantees unit trace; general construction only checks shape.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Wraps an operator, rejecting ones that are not Hermitian within `1e-8`.
    pub fn new(op: Operator) -> Result<Self> {
        let defect = op.hermiticity_defect();
        if defect > 1e-8 * op.max_abs().max(1.0) {
            return Err(Error::MalformedInput(format!(
                "density matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self { op })
    }

    pub(crate) fn from_operator_unchecked(op: Operator) -> Self {
        Self { op }
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let norm2 = v.norm_squared();
        if psi.is_empty() || norm2 == 0.0 {
            return Err(Error::MalformedInput("pure state must be a nonzero vector".into()));
        }
        let mut op = Operator::outer(&v, &v);
        op.m /= C64::new(norm2, 0.0);
        Ok(Self { op })
    }

    pub fn basis_state(dim: usize, k: usize) -> Self {
        Self { op: Operator::ket_bra(dim, k, k) }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { op: Operator::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)) }
    }

    pub fn as_operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn trace_defect(&self) -> f64 {
        (self.op.trace() - ONE).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.op.hermitian_eigenvalues()[0]
    }

    pub fn purity(&self) -> f64 {
        (&self.op * &self.op).trace().re
    }
}

impl Deref for DensityMatrix {
    type Target = Operator;
    fn deref(&self) -> &Operator {
        &self.op
    }
}

/// A flattened operator, `entries[n + N*m] = rho[(n, m)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperVector {
    dim: usize,
    entries: Vec<C64>,
}

impl SuperVector {
    pub fn from_entries(entries: Vec<C64>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != entries.len() {
            return Err(Error::MalformedInput(format!(
                "supervector length {} is not a positive perfect square",
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }
}

/// Dense `N^2 x N^2` linear map on supervectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    m: DMatrix<C64>,
}

impl SuperOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, m: DMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, m: DMatrix::identity(dim * dim, dim * dim) }
    }

    pub fn from_matrix(dim: usize, m: DMatrix<C64>) -> Result<Self> {
        check_dim(dim * dim, m.nrows())?;
        check_dim(dim * dim, m.ncols())?;
        Ok(Self { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn apply(&self, v: &SuperVector) -> Result<SuperVector> {
        check_dim(self.dim, v.dim)?;
        let out = &self.m * DVector::from_column_slice(&v.entries);
        Ok(SuperVector { dim: self.dim, entries: out.as_slice().to_vec() })
    }

    /// Applies the map to an operator, returning an operator.
    pub fn apply_to(&self, rho: &Operator) -> Result<Operator> {
        fold(&self.apply(&unfold(rho))?)
    }

    pub fn max_abs_diff(&self, other: &SuperOperator) -> f64 {
        (&self.m - &other.m).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn add_scaled(&mut self, other: &SuperOperator, c: C64) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        self.m += &other.m * c;
        Ok(())
    }
}

impl Add for &SuperOperator {
    type Output = SuperOperator;
    fn add(self, rhs: &SuperOperator) -> SuperOperator {
        SuperOperator { dim: self.dim, m: &self.m + &rhs.m }
    }
}

impl Sub for &SuperOperator {
    type Output = SuperOperator;
    fn sub(self, rhs: &SuperOperator) -> SuperOperator {
        SuperOperator { dim: self.dim, m: &self.m - &rhs.m }
    }
}

/// Superoperator stored as `(row, col, value)` triplets. Used for the rate
/// matrix groups, which touch only `O(N^3)` of the `N^4` entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseSuperOperator {
    dim: usize,
    entries: Vec<(u32, u32, C64)>,
}

impl SparseSuperOperator {
    pub fn empty(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Collects the entries of a dense column-major `N^2 x N^2` buffer whose
    /// `touched` flag is set.
    pub(crate) fn from_dense_buffer(dim: usize, values: &[C64], touched: &[bool]) -> Self {
        let d2 = dim * dim;
        let mut entries = Vec::new();
        for col in 0..d2 {
            for row in 0..d2 {
                let idx = row + d2 * col;
                if touched[idx] && values[idx] != ZERO {
                    entries.push((row as u32, col as u32, values[idx]));
                }
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(u32, u32, C64)] {
        &self.entries
    }

    /// `out += phase * (self . v)`.
    #[inline]
    pub fn apply_add(&self, phase: C64, v: &[C64], out: &mut [C64]) {
        for &(r, c, w) in &self.entries {
            out[r as usize] += phase * w * v[c as usize];
        }
    }

    pub fn to_dense(&self) -> SuperOperator {
        let mut s = SuperOperator::zeros(self.dim);
        for &(r, c, w) in &self.entries {
            s.m[(r as usize, c as usize)] += w;
        }
        s
    }
}

/// Flattens an operator: `out[n + N*m] = rho[(n, m)]`.
pub fn unfold(rho: &Operator) -> SuperVector {
    SuperVector { dim: rho.dim(), entries: rho.m.as_slice().to_vec() }
}

/// Inverse of [`unfold`].
pub fn fold(v: &SuperVector) -> Result<Operator> {
    Operator::from_matrix(DMatrix::from_column_slice(v.dim, v.dim, &v.entries))
}

/// Folds raw entries, validating that the length is a perfect square.
pub fn fold_entries(entries: &[C64]) -> Result<Operator> {
    fold(&SuperVector::from_entries(entries.to_vec())?)
}

/// Superoperator of `rho -> X rho Y`, i.e. `Y^T (x) X` under column stacking.
pub fn sandwich_superop(x: &Operator, y: &Operator) -> Result<SuperOperator> {
    check_dim(x.dim(), y.dim())?;
    Ok(SuperOperator { dim: x.dim(), m: y.m.transpose().kronecker(&x.m) })
}

/// `Tr(A rho)`.
pub fn expect(a: &Operator, rho: &Operator) -> Result<C64> {
    check_dim(a.dim(), rho.dim())?;
    let n = a.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a.m[(i, j)] * rho.m[(j, i)];
        }
    }
    Ok(acc)
}

/// Trace distance `1/2 ||a - b||_1`, computed from singular values.
pub fn trace_distance(a: &Operator, b: &Operator) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let diff = &a.m - &b.m;
    Ok(0.5 * diff.singular_values().iter().sum::<f64>())
}
