//! Curvature of left-invariant metrics computed from structure constants.
//!
//! A left-invariant metric on a simply connected Lie group is determined by
//! the structure constants `C[i][j][k] = g([X_i, X_j], X_k)` in an orthonormal
//! frame of left-invariant fields. All connection and curvature components
//! are constant, so every quantity below is pure algebra on `C`.
//!
//! The connection comes from Koszul's formula
//!
//! ```text
//! g(∇_{X_i} X_j, X_k) = ½ (C[i][j][k] − C[j][k][i] + C[k][i][j]).
//! ```
//!
//! Note: for the four-dimensional solvable family this yields
//! `∇_{X_2} X_0 = (2 − 3α + α² + β²) z X_2 − β z X_3`; a commonly quoted form
//! of this covariant derivative drops the factor `z` and the basis vector on
//! the first term. Only the Koszul values are used here.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{QemError, Result};
use crate::tensor::{self, check_dim, max_abs, CurvTensor4, SymTensor2, Vector};

/// Jacobi residual above which an algebra is refused by curvature operations.
pub const JACOBI_TOL: f64 = 1e-12;

/// Dense `n×n×n` array indexed `[i][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.n + j) * self.n + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self.data.iter().copied())
    }
}

/// Lie algebra with an inner product, given by its structure constants in a
/// declared-orthonormal frame.
#[derive(Debug)]
pub struct LieAlgebraMetric {
    c: Tensor3,
    connection: OnceLock<ConnectionCoeffs>,
    curvature: OnceLock<CurvatureData>,
}

impl Clone for LieAlgebraMetric {
    fn clone(&self) -> Self {
        Self { c: self.c.clone(), connection: OnceLock::new(), curvature: OnceLock::new() }
    }
}

impl PartialEq for LieAlgebraMetric {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c
    }
}

/// `Γ[i][j][k] = g(∇_{X_i} X_j, X_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoeffs {
    pub gamma: Tensor3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub riemann: CurvTensor4,
    pub ricci: SymTensor2,
    pub scal: f64,
}

/// `Ric = c·I + D` candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonData {
    pub c: f64,
    pub d: DMatrix<f64>,
}

/// Residual of `Ric = cI + D` split into the part compared against the
/// symmetric Ricci operator and the antisymmetric remainder of `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonResidual {
    pub symmetric: f64,
    pub antisymmetric: f64,
}

impl LieAlgebraMetric {
    /// Abelian algebra of dimension `n` (flat metric).
    pub fn abelian(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self::from_tensor(Tensor3::zeros(n)))
    }

    fn from_tensor(c: Tensor3) -> Self {
        Self { c, connection: OnceLock::new(), curvature: OnceLock::new() }
    }

    /// Builds from `(i, j, k, value)` triples meaning `g([X_i, X_j], X_k) = value`.
    ///
    /// Omitted entries are zero. Each pair may be given one-sided; the
    /// antisymmetric partner is filled in. A pair given both ways must be
    /// exactly antisymmetric, and `[X_i, X_i]` must vanish.
    pub fn from_triples(n: usize, triples: &[(usize, usize, usize, f64)]) -> Result<Self> {
        check_dim(n)?;
        let mut c = Tensor3::zeros(n);
        let mut given = vec![false; n * n * n];
        for &(i, j, k, v) in triples {
            if i >= n || j >= n || k >= n {
                return Err(QemError::invalid(format!("bracket index ({i}, {j}, {k}) out of range for dimension {n}")));
            }
            if !v.is_finite() {
                return Err(QemError::invalid(format!("bracket ({i}, {j}, {k}) is not finite")));
            }
            if i == j {
                if v != 0.0 {
                    return Err(QemError::invalid(format!("[X_{i}, X_{i}] must vanish, got component {v} on X_{k}")));
                }
                continue;
            }
            let here = (i * n + j) * n + k;
            let mirror = (j * n + i) * n + k;
            if given[here] && c.get(i, j, k) != v {
                return Err(QemError::invalid(format!("bracket ({i}, {j}, {k}) given twice with different values")));
            }
            if given[mirror] && c.get(j, i, k) != -v {
                return Err(QemError::invalid(format!(
                    "brackets ({i}, {j}, {k}) and ({j}, {i}, {k}) are not antisymmetric"
                )));
            }
            c.set(i, j, k, v);
            c.set(j, i, k, -v);
            given[here] = true;
        }
        Ok(Self::from_tensor(c))
    }

    /// Builds from a closure evaluated for `i < j`; the rest follows by antisymmetry.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        check_dim(n)?;
        let mut c = Tensor3::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let v = f(i, j, k);
                    c.set(i, j, k, v);
                    c.set(j, i, k, -v);
                }
            }
        }
        Ok(Self::from_tensor(c))
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    /// `g([X_i, X_j], X_k)`.
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c.get(i, j, k)
    }

    pub fn structure_constants(&self) -> &Tensor3 {
        &self.c
    }

    /// Nonzero `(i, j, k, C_ijk)` with `i < j`.
    pub fn triples(&self) -> Vec<(usize, usize, usize, f64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let v = self.c(i, j, k);
                    if v != 0.0 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    /// Copy with `C[i][j][k] += delta` (and the antisymmetric partner).
    pub fn perturbed(&self, i: usize, j: usize, k: usize, delta: f64) -> Result<Self> {
        let n = self.dim();
        if i >= n || j >= n || k >= n || i == j {
            return Err(QemError::invalid(format!("cannot perturb bracket ({i}, {j}, {k})")));
        }
        let mut c = self.c.clone();
        let v = c.get(i, j, k) + delta;
        c.set(i, j, k, v);
        c.set(j, i, k, -v);
        Ok(Self::from_tensor(c))
    }

    /// `[u, v]` for frame-coefficient vectors.
    pub fn bracket(&self, u: &Vector, v: &Vector) -> Vector {
        let n = self.dim();
        let mut out = Vector::zeros(n);
        for i in 0..n {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let uv = u[i] * v[j];
                if uv == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += uv * self.c(i, j, k);
                }
            }
        }
        out
    }

    fn basis(&self, i: usize) -> Vector {
        let mut e = Vector::zeros(self.dim());
        e[i] = 1.0;
        e
    }

    /// Matrix of `ad_{X_i}`: column `j` holds the components of `[X_i, X_j]`.
    pub fn ad(&self, i: usize) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |k, j| self.c(i, j, k))
    }

    /// `max_{i<j<k} ‖[[X_i,X_j],X_k] + [[X_j,X_k],X_i] + [[X_k,X_i],X_j]‖_∞`.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let mut s = 0.0_f64;
                    for out in 0..n {
                        let mut acc = 0.0;
                        for l in 0..n {
                            acc += self.c(i, j, l) * self.c(l, k, out)
                                + self.c(j, k, l) * self.c(l, i, out)
                                + self.c(k, i, l) * self.c(l, j, out);
                        }
                        s = s.max(acc.abs());
                    }
                    worst = worst.max(s);
                }
            }
        }
        worst
    }

    fn admit(&self) -> Result<()> {
        let residual = self.jacobi_residual();
        if residual <= JACOBI_TOL {
            Ok(())
        } else {
            Err(QemError::JacobiViolation { residual, tolerance: JACOBI_TOL })
        }
    }

    /// Levi-Civita connection from Koszul's formula. Requires the Jacobi identity.
    pub fn levi_civita(&self) -> Result<&ConnectionCoeffs> {
        if let Some(conn) = self.connection.get() {
            return Ok(conn);
        }
        self.admit()?;
        Ok(self.connection.get_or_init(|| self.koszul()))
    }

    fn koszul(&self) -> ConnectionCoeffs {
        let gamma = Tensor3::from_fn(self.dim(), |i, j, k| 0.5 * (self.c(i, j, k) - self.c(j, k, i) + self.c(k, i, j)));
        ConnectionCoeffs { gamma }
    }

    /// Riemann, Ricci and scalar curvature. Requires the Jacobi identity.
    pub fn curvature(&self) -> Result<&CurvatureData> {
        if let Some(curv) = self.curvature.get() {
            return Ok(curv);
        }
        let conn = self.levi_civita()?;
        Ok(self.curvature.get_or_init(|| self.curvature_from(conn)))
    }

    /// Curvature of the Koszul connection without the Jacobi admission check.
    ///
    /// For structure constants that are not a Lie algebra the result is not
    /// the curvature of any metric; it is only useful for diagnosing how far
    /// corrupted data lands from an admissible one.
    pub fn curvature_unchecked(&self) -> CurvatureData {
        match self.curvature() {
            Ok(c) => c.clone(),
            Err(_) => self.curvature_from(&self.koszul()),
        }
    }

    // R(a,b,c,d) = g(∇_a∇_b X_c − ∇_b∇_a X_c − ∇_{[a,b]} X_c, X_d) with constant Γ.
    fn curvature_from(&self, conn: &ConnectionCoeffs) -> CurvatureData {
        let n = self.dim();
        let g = &conn.gamma;
        let riemann = CurvTensor4::from_fn(n, |a, b, c, d| {
            let mut acc = 0.0;
            for l in 0..n {
                acc += g.get(b, c, l) * g.get(a, l, d)
                    - g.get(a, c, l) * g.get(b, l, d)
                    - self.c(a, b, l) * g.get(l, c, d);
            }
            acc
        })
        .expect("dimension already validated");
        let ricci = tensor::ricci_contraction(&riemann);
        let scal = ricci.trace();
        CurvatureData { riemann, ricci, scal }
    }

    /// `max_Z |tr ad_Z|` over the frame.
    pub fn unimodularity_defect(&self) -> f64 {
        max_abs((0..self.dim()).map(|i| self.ad(i).trace()))
    }

    /// `max_{i,j} ‖D[X_i,X_j] − [D X_i, X_j] − [X_i, D X_j]‖_∞`.
    pub fn derivation_residual(&self, d: &DMatrix<f64>) -> Result<f64> {
        let n = self.dim();
        if d.nrows() != n || d.ncols() != n {
            return Err(QemError::DimensionMismatch { expected: n, found: d.nrows().max(d.ncols()) });
        }
        let mut worst = 0.0_f64;
        for i in 0..n {
            let xi = self.basis(i);
            let dxi = d * &xi;
            for j in 0..n {
                let xj = self.basis(j);
                let dxj = d * &xj;
                let lhs = d * self.bracket(&xi, &xj);
                let rhs = self.bracket(&dxi, &xj) + self.bracket(&xi, &dxj);
                worst = worst.max((lhs - rhs).amax());
            }
        }
        Ok(worst)
    }

    /// `‖Ric − c·I − sym(D)‖_∞`, plus `‖(D − Dᵀ)/2‖_∞` reported separately.
    ///
    /// Fails when `D` is not a derivation (residual above [`JACOBI_TOL`]) or
    /// when the algebra fails the Jacobi identity.
    pub fn solvsoliton_residual(&self, s: &SolitonData) -> Result<SolitonResidual> {
        let der = self.derivation_residual(&s.d)?;
        if der > JACOBI_TOL {
            return Err(QemError::invalid(format!("D is not a derivation (residual {der:.3e})")));
        }
        let ric = &self.curvature()?.ricci;
        let sym_d = SymTensor2::symmetrized(&s.d);
        let diff = ric.sub(&sym_d.shifted(s.c))?;
        let anti = (&s.d - s.d.transpose()) * 0.5;
        Ok(SolitonResidual { symmetric: diff.max_abs(), antisymmetric: max_abs(anti.iter().copied()) })
    }

    /// Bracket-closure defect of the left-invariant distribution spanned by
    /// `basis`: the largest norm of the component of `[u, v]` orthogonal to
    /// the span, over pairs of an orthonormalised basis.
    pub fn distribution_integrability(&self, basis: &[Vector]) -> Result<f64> {
        for b in basis {
            if b.len() != self.dim() {
                return Err(QemError::DimensionMismatch { expected: self.dim(), found: b.len() });
            }
        }
        let on = tensor::gram_schmidt(basis)?;
        let mut worst = 0.0_f64;
        for a in 0..on.len() {
            for b in (a + 1)..on.len() {
                let mut v = self.bracket(&on[a], &on[b]);
                for e in &on {
                    let c = e.dot(&v);
                    v -= e * c;
                }
                worst = worst.max(v.norm());
            }
        }
        Ok(worst)
    }
}

impl ConnectionCoeffs {
    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    /// `∇_{X_i} X_j` as a frame vector.
    pub fn nabla(&self, i: usize, j: usize) -> Vector {
        Vector::from_fn(self.dim(), |k, _| self.gamma.get(i, j, k))
    }

    /// `max |Γ_ijk + Γ_ikj|`.
    pub fn metric_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.gamma.get(i, j, k) + self.gamma.get(i, k, j)).abs());
                }
            }
        }
        worst
    }

    /// `max |Γ_ijk − Γ_jik − C_ijk|`.
    pub fn torsion_defect(&self, algebra: &LieAlgebraMetric) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t = self.gamma.get(i, j, k) - self.gamma.get(j, i, k) - algebra.c(i, j, k);
                    worst = worst.max(t.abs());
                }
            }
        }
        worst
    }

    /// `(∇S)[i][j][k] = (∇_{X_i} S)(X_j, X_k)` of a left-invariant symmetric tensor.
    pub fn covariant_derivative_sym2(&self, s: &SymTensor2) -> Result<Tensor3> {
        let n = self.dim();
        if s.dim() != n {
            return Err(QemError::DimensionMismatch { expected: n, found: s.dim() });
        }
        Ok(Tensor3::from_fn(n, |i, j, k| {
            let mut acc = 0.0;
            for l in 0..n {
                acc -= self.gamma.get(i, j, l) * s.get(l, k) + self.gamma.get(i, k, l) * s.get(j, l);
            }
            acc
        }))
    }
}

/// `(div S)(X_k) = Σ_i (∇S)[i][i][k]`.
pub fn divergence(nabla_s: &Tensor3) -> Vector {
    let n = nabla_s.dim();
    Vector::from_fn(n, |k, _| (0..n).map(|i| nabla_s.get(i, i, k)).sum())
}
