//! Dense complex operators, antilinear operators in `U ∘ conj` normal form,
//! twisted commutators and the residual policy shared by every check.
//!
//! Operators are stored row-major. Products go through `matrixmultiply`'s
//! complex kernel, with a shortcut when one factor is mostly zeros (the
//! representations of matrix-unit bases and of lattice functions are).

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Which norm a residual is measured in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Used for every identity check.
    #[default]
    Frobenius,
    /// Operator norm, for boundedness reporting only.
    Spectral,
}

/// Dense square complex matrix.
#[derive(Clone, PartialEq)]
pub struct LinearOp {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for LinearOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LinearOp({}x{})", self.dim, self.dim)?;
        if self.dim <= 8 {
            for i in 0..self.dim {
                let row: Vec<String> = self
                    .row(i)
                    .iter()
                    .map(|z| format!("{:+.3}{:+.3}i", z.re, z.im))
                    .collect();
                writeln!(f, "  [{}]", row.join(", "))?;
            }
        }
        Ok(())
    }
}

impl LinearOp {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "operators act on a nonzero space");
        LinearOp {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, ONE)
    }

    pub fn scalar(dim: usize, z: C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = z;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, z) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *z;
        }
        m
    }

    /// Builds an operator from a row-major buffer of length `dim²`.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "buffer of length {} is not a nonzero square of side {}",
                data.len(),
                dim
            )));
        }
        Ok(LinearOp { dim, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Dimension("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Dimension(format!(
                    "row {} has length {}, expected {}",
                    i,
                    r.len(),
                    n
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(LinearOp { dim: n, data })
    }

    /// Real matrix given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.dim + j] = z;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.data[j * n + i])
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        LinearOp {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        LinearOp {
            dim: self.dim,
            data: self.data.iter().map(|w| w * z).collect(),
        }
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    fn check_same(&self, other: &LinearOp) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "operands of size {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &LinearOp) -> Result<Self> {
        self.check_same(other)?;
        Ok(LinearOp {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn try_sub(&self, other: &LinearOp) -> Result<Self> {
        self.check_same(other)?;
        Ok(LinearOp {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn try_matmul(&self, other: &LinearOp) -> Result<Self> {
        self.check_same(other)?;
        Ok(LinearOp {
            dim: self.dim,
            data: matmul(self.dim, &self.data, &other.data),
        })
    }

    /// Product `self · other`. Panics on a size mismatch; use
    /// [`LinearOp::try_matmul`] for checked arithmetic.
    pub fn matmul(&self, other: &LinearOp) -> Self {
        self.try_matmul(other).expect("operator product")
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "vector length");
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Frobenius => self.norm_fro(),
            NormKind::Spectral => {
                let m = self.to_dmatrix();
                m.singular_values().iter().cloned().fold(0.0, f64::max)
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|z| **z != ZERO).count()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim;
        self.data
            .iter()
            .enumerate()
            .all(|(k, z)| *z == ZERO || k / n == k % n)
    }

    pub fn is_hermitian(&self, tol: &Tolerance) -> bool {
        compare(self, &self.adjoint(), tol).pass()
    }

    pub fn is_unitary(&self, tol: &Tolerance) -> bool {
        unitarity_residual(self) <= tol.threshold((self.dim as f64).sqrt())
    }

    pub fn commutator(&self, other: &LinearOp) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn anticommutator(&self, other: &LinearOp) -> Self {
        &self.matmul(other) + &other.matmul(self)
    }

    /// Kronecker product, `self` being the slow (outer) index.
    pub fn kron(&self, other: &LinearOp) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * n * m + j * m + l] = a * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        Ok(Self::from_fn(n, |i, j| m[(i, j)]))
    }
}

/// ‖T*T − 1‖ + ‖TT* − 1‖ in Frobenius norm.
pub fn unitarity_residual(t: &LinearOp) -> f64 {
    let id = LinearOp::identity(t.dim());
    let a = t.adjoint();
    (&a.matmul(t) - &id).norm_fro() + (&t.matmul(&a) - &id).norm_fro()
}

fn matmul(n: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut c = vec![ZERO; n * n];
    let sparse_limit = n * n / 8;
    let nnz_a = a.iter().filter(|z| **z != ZERO).count();
    if nnz_a <= sparse_limit {
        for i in 0..n {
            let crow = &mut c[i * n..(i + 1) * n];
            for k in 0..n {
                let aik = a[i * n + k];
                if aik == ZERO {
                    continue;
                }
                let brow = &b[k * n..(k + 1) * n];
                for (cj, bj) in crow.iter_mut().zip(brow) {
                    *cj += aik * bj;
                }
            }
        }
        return c;
    }
    let nnz_b = b.iter().filter(|z| **z != ZERO).count();
    if nnz_b <= sparse_limit {
        let entries: Vec<(usize, usize, C64)> = b
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != ZERO)
            .map(|(idx, z)| (idx / n, idx % n, *z))
            .collect();
        for i in 0..n {
            let arow = &a[i * n..(i + 1) * n];
            let crow = &mut c[i * n..(i + 1) * n];
            for &(k, j, v) in &entries {
                crow[j] += arow[k] * v;
            }
        }
        return c;
    }
    // SAFETY: Complex<f64> is #[repr(C)] with fields (re, im), which is the
    // layout of matrixmultiply's `[f64; 2]`; all three buffers hold n*n
    // elements and are addressed with row stride n and column stride 1.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            n,
            n,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            b.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
    c
}

impl Add for &LinearOp {
    type Output = LinearOp;
    fn add(self, rhs: &LinearOp) -> LinearOp {
        self.try_add(rhs).expect("operator sum")
    }
}

impl Sub for &LinearOp {
    type Output = LinearOp;
    fn sub(self, rhs: &LinearOp) -> LinearOp {
        self.try_sub(rhs).expect("operator difference")
    }
}

impl Mul for &LinearOp {
    type Output = LinearOp;
    fn mul(self, rhs: &LinearOp) -> LinearOp {
        self.matmul(rhs)
    }
}

impl Neg for &LinearOp {
    type Output = LinearOp;
    fn neg(self) -> LinearOp {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&LinearOp> for LinearOp {
    fn add_assign(&mut self, rhs: &LinearOp) {
        assert_eq!(self.dim, rhs.dim, "operator sum");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// Antilinear operator `ψ ↦ U·conj(ψ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AntilinearOp {
    unitary: LinearOp,
}

impl AntilinearOp {
    pub fn new(unitary_part: LinearOp) -> Self {
        AntilinearOp {
            unitary: unitary_part,
        }
    }

    /// Plain complex conjugation on `C^dim`.
    pub fn conjugation(dim: usize) -> Self {
        Self::new(LinearOp::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.unitary.dim()
    }

    pub fn unitary_part(&self) -> &LinearOp {
        &self.unitary
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let c: Vec<C64> = v.iter().map(|z| z.conj()).collect();
        self.unitary.apply(&c)
    }

    /// The adjoint in the antilinear sense, `⟨Cξ,ζ⟩ = conj⟨ξ,C*ζ⟩`:
    /// `(U∘K)* = Uᵀ∘K`.
    pub fn adjoint(&self) -> Self {
        Self::new(self.unitary.transpose())
    }

    pub fn antiunitarity_residual(&self) -> f64 {
        unitarity_residual(&self.unitary)
    }

    pub fn is_antiunitary(&self, tol: &Tolerance) -> bool {
        self.unitary.is_unitary(tol)
    }

    fn require_antiunitary(&self, tol: &Tolerance) -> Result<()> {
        if self.is_antiunitary(tol) {
            Ok(())
        } else {
            Err(Error::NotAntiunitary {
                residual: self.antiunitarity_residual(),
            })
        }
    }

    /// `J·J` as a linear operator.
    pub fn square(&self) -> LinearOp {
        self.unitary.matmul(&self.unitary.conj())
    }

    /// Inverse of an antiunitary operator, which is its adjoint.
    pub fn inverse(&self, tol: &Tolerance) -> Result<Self> {
        self.require_antiunitary(tol)?;
        Ok(self.adjoint())
    }

    /// `J·T·J⁻¹ = U·conj(T)·U*`, skipping the antiunitarity check.
    /// Callers that have already validated `J` use this in inner loops.
    pub fn conj_unchecked(&self, t: &LinearOp) -> LinearOp {
        self.unitary
            .matmul(&t.conj())
            .matmul(&self.unitary.adjoint())
    }
}

/// `J·T·J⁻¹` for antiunitary `J`.
pub fn conjugate_by(j: &AntilinearOp, t: &LinearOp, tol: &Tolerance) -> Result<LinearOp> {
    j.require_antiunitary(tol)?;
    if j.dim() != t.dim() {
        return Err(Error::Dimension(format!(
            "J acts on dimension {}, operator on {}",
            j.dim(),
            t.dim()
        )));
    }
    Ok(j.conj_unchecked(t))
}

/// An operator of either kind; products are normalized eagerly.
#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Linear(LinearOp),
    Antilinear(AntilinearOp),
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Linear(t) => t.dim(),
            Operator::Antilinear(c) => c.dim(),
        }
    }

    pub fn is_antilinear(&self) -> bool {
        matches!(self, Operator::Antilinear(_))
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        match self {
            Operator::Linear(t) => t.apply(v),
            Operator::Antilinear(c) => c.apply(v),
        }
    }

    pub fn adjoint(&self) -> Operator {
        match self {
            Operator::Linear(t) => Operator::Linear(t.adjoint()),
            Operator::Antilinear(c) => Operator::Antilinear(c.adjoint()),
        }
    }
}

impl From<LinearOp> for Operator {
    fn from(t: LinearOp) -> Self {
        Operator::Linear(t)
    }
}

impl From<AntilinearOp> for Operator {
    fn from(c: AntilinearOp) -> Self {
        Operator::Antilinear(c)
    }
}

/// `x∘y` (apply `y` first). Two antilinear factors give a linear operator,
/// one gives an antilinear operator.
pub fn compose_antilinear(x: &Operator, y: &Operator) -> Result<Operator> {
    if x.dim() != y.dim() {
        return Err(Error::Dimension(format!(
            "composing operators of size {} and {}",
            x.dim(),
            y.dim()
        )));
    }
    Ok(match (x, y) {
        (Operator::Linear(a), Operator::Linear(b)) => Operator::Linear(a.matmul(b)),
        (Operator::Linear(a), Operator::Antilinear(c)) => {
            Operator::Antilinear(AntilinearOp::new(a.matmul(c.unitary_part())))
        }
        (Operator::Antilinear(c), Operator::Linear(b)) => {
            Operator::Antilinear(AntilinearOp::new(c.unitary_part().matmul(&b.conj())))
        }
        (Operator::Antilinear(c1), Operator::Antilinear(c2)) => {
            Operator::Linear(c1.unitary_part().matmul(&c2.unitary_part().conj()))
        }
    })
}

/// `D·a − ρ(a)·D`; with `rho_a = a` this is the ordinary commutator.
pub fn twisted_commutator(d: &LinearOp, a: &LinearOp, rho_a: &LinearOp) -> Result<LinearOp> {
    if d.dim() != a.dim() || d.dim() != rho_a.dim() {
        return Err(Error::Dimension(format!(
            "twisted commutator of sizes {}, {}, {}",
            d.dim(),
            a.dim(),
            rho_a.dim()
        )));
    }
    Ok(&d.matmul(a) - &rho_a.matmul(d))
}

/// `‖x − y‖` in Frobenius norm.
pub fn residual(x: &LinearOp, y: &LinearOp) -> Result<f64> {
    residual_with(x, y, NormKind::Frobenius)
}

pub fn residual_with(x: &LinearOp, y: &LinearOp, kind: NormKind) -> Result<f64> {
    Ok(x.try_sub(y)?.norm(kind))
}

/// Comparison policy: `x ≈ y` when `‖x−y‖ ≤ rel·max(‖x‖,‖y‖) + abs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && abs_tol > 0.0 && rel_tol.is_finite() && abs_tol.is_finite()) {
            return Err(Error::Invalid(format!(
                "tolerances must be positive and finite, got rel {rel_tol}, abs {abs_tol}"
            )));
        }
        Ok(Tolerance { rel_tol, abs_tol })
    }

    pub fn threshold(&self, scale: f64) -> f64 {
        self.rel_tol * scale + self.abs_tol
    }

    pub fn accepts(&self, residual: f64, scale: f64) -> bool {
        residual <= self.threshold(scale)
    }
}

/// One measured residual together with the threshold it is judged against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub residual: f64,
    pub threshold: f64,
}

impl Comparison {
    pub fn new(residual: f64, scale: f64, tol: &Tolerance) -> Self {
        Comparison {
            residual,
            threshold: tol.threshold(scale),
        }
    }

    pub fn exact_zero(tol: &Tolerance) -> Self {
        Comparison {
            residual: 0.0,
            threshold: tol.abs_tol,
        }
    }

    pub fn pass(&self) -> bool {
        self.residual <= self.threshold
    }

    fn severity(&self) -> f64 {
        self.residual / self.threshold
    }

    /// Keeps whichever of the two is closer to failing.
    pub fn worst(self, other: Comparison) -> Comparison {
        if other.severity() > self.severity() {
            other
        } else {
            self
        }
    }
}

/// Compares two operators under the tolerance policy.
pub fn compare(x: &LinearOp, y: &LinearOp, tol: &Tolerance) -> Comparison {
    let r = (x - y).norm_fro();
    Comparison::new(r, x.norm_fro().max(y.norm_fro()), tol)
}

/// Nonzero entries of an operator, for sandwich residuals over bases.
#[derive(Clone, Debug)]
pub(crate) struct Sparse {
    pub entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    pub fn from_op(t: &LinearOp) -> Self {
        let n = t.dim();
        let entries = t
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != ZERO)
            .map(|(k, z)| (k / n, k % n, *z))
            .collect();
        Sparse { entries }
    }
}

/// Residual of `X·S = S'·X` with `S`, `S'` sparse, in `O(n·nnz)`.
/// Returns the comparison against `max(‖XS‖, ‖S'X‖)`.
pub(crate) fn sandwich_comparison(
    x: &LinearOp,
    s: &Sparse,
    s2: &Sparse,
    tol: &Tolerance,
) -> Comparison {
    let n = x.dim();
    // Columns of X·S and rows of S'·X, with slot tables indexed by
    // column and row.
    let mut col_slot = vec![usize::MAX; n];
    let mut cols: Vec<(usize, Vec<C64>)> = Vec::new();
    for &(i, j, v) in &s.entries {
        if col_slot[j] == usize::MAX {
            col_slot[j] = cols.len();
            cols.push((j, vec![ZERO; n]));
        }
        let col = &mut cols[col_slot[j]].1;
        for (r, c) in col.iter_mut().enumerate() {
            *c += x.get(r, i) * v;
        }
    }
    let mut row_slot = vec![usize::MAX; n];
    let mut rows: Vec<(usize, Vec<C64>)> = Vec::new();
    for &(i, k, v) in &s2.entries {
        if row_slot[i] == usize::MAX {
            row_slot[i] = rows.len();
            rows.push((i, vec![ZERO; n]));
        }
        let row = &mut rows[row_slot[i]].1;
        for (c, xv) in row.iter_mut().zip(x.row(k)) {
            *c += v * xv;
        }
    }
    let norm_xs: f64 = cols
        .iter()
        .map(|(_, c)| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum();
    let norm_sx: f64 = rows
        .iter()
        .map(|(_, r)| r.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum();
    let mut diff = 0.0;
    for (j, col) in &cols {
        for (i, v) in col.iter().enumerate() {
            let other = match row_slot[i] {
                usize::MAX => ZERO,
                p => rows[p].1[*j],
            };
            diff += (v - other).norm_sqr();
        }
    }
    for (_, row) in &rows {
        for (j, v) in row.iter().enumerate() {
            if col_slot[j] == usize::MAX {
                diff += v.norm_sqr();
            }
        }
    }
    Comparison::new(diff.sqrt(), norm_xs.sqrt().max(norm_sx.sqrt()), tol)
}
