//! Dense frame-component tensors and the algebraic kernels built on them.
//!
//! Every tensor here is expressed in an orthonormal frame `E_0, …, E_{n−1}`,
//! so covariant and contravariant components coincide. Four-tensors use the
//! sign convention in which `R(X, Y, Y, X)` has the sign of the sectional
//! curvature of the plane spanned by `X` and `Y`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{QemError, Result};

/// Frame coefficients of a tangent vector.
pub type Vector = DVector<f64>;

/// Largest frame dimension accepted by the dense containers.
pub const MAX_DIM: usize = 16;

/// Relative comparison tolerance used against `1 + magnitude`.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// `|a − b| ≤ tol · (1 + max(|a|, |b|))`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        Err(QemError::UnsupportedDimension(n))
    } else {
        Ok(())
    }
}

pub(crate) fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0_f64, |acc, v| if v.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(v.abs()) })
}

/// Symmetric `(0,2)`-tensor. Symmetry is exact: the stored matrix always
/// equals its transpose bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor2 {
    m: DMatrix<f64>,
}

impl SymTensor2 {
    pub fn zeros(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { m: DMatrix::zeros(n, n) })
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { m: DMatrix::identity(n, n) })
    }

    pub fn diag(entries: &[f64]) -> Result<Self> {
        check_dim(entries.len())?;
        Ok(Self { m: DMatrix::from_diagonal(&DVector::from_column_slice(entries)) })
    }

    /// Builds from the upper triangle of `f(i, j)`, mirrored.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dim(n)?;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self { m })
    }

    /// Accepts a square matrix that is symmetric up to `1e-12 · (1 + max|a|)`
    /// and stores its exact symmetrization.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(QemError::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let n = m.nrows();
        check_dim(n)?;
        let scale = 1.0 + max_abs(m.iter().copied());
        for i in 0..n {
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(QemError::invalid(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self::symmetrized(&m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        check_dim(n)?;
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(QemError::DimensionMismatch { expected: n, found: bad.len() });
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// `½(A + Aᵀ)` of an arbitrary square matrix.
    pub fn symmetrized(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = a[(i, i)];
            for j in (i + 1)..n {
                let v = 0.5 * (a[(i, j)] + a[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// `|S|² = Σ_ij S_ij²`.
    pub fn norm_squared(&self) -> f64 {
        self.m.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self.m.iter().copied())
    }

    /// The endomorphism `X ↦ S(X)`.
    pub fn apply(&self, v: &Vector) -> Vector {
        &self.m * v
    }

    pub fn bilinear(&self, u: &Vector, v: &Vector) -> f64 {
        u.dot(&(&self.m * v))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { m: &self.m * c }
    }

    /// `S + c·g`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.m.clone();
        for i in 0..self.dim() {
            m[(i, i)] += c;
        }
        Self { m }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self { m: &self.m - &other.m })
    }

    /// Operator composition `S ∘ T` (not symmetric in general).
    pub fn compose(&self, other: &Self) -> Result<DMatrix<f64>> {
        same_dim(self.dim(), other.dim())?;
        Ok(&self.m * &other.m)
    }

    /// Components of `S` restricted to the span of an orthonormal family.
    pub fn restrict(&self, basis: &[Vector]) -> Result<Self> {
        for b in basis {
            same_dim(self.dim(), b.len())?;
        }
        Self::from_fn(basis.len(), |a, b| self.bilinear(&basis[a], &basis[b]))
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(QemError::DimensionMismatch { expected, found })
    }
}

/// Frame components `T[x][y][z][w]` of a `(0,4)`-tensor, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvTensor4 {
    n: usize,
    data: Vec<f64>,
}

impl CurvTensor4 {
    pub fn zeros(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { n, data: vec![0.0; n * n * n * n] })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Result<Self> {
        check_dim(n)?;
        let mut data = Vec::with_capacity(n * n * n * n);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    for w in 0..n {
                        data.push(f(x, y, z, w));
                    }
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Curvature tensor whose curvature operator is diagonal on the frame
    /// bivectors: `T(E_i, E_j, E_j, E_i) = k[i][j]` for `i ≠ j`, all other
    /// independent components zero. `k` must be symmetric.
    pub fn from_plane_curvatures(k: &DMatrix<f64>) -> Result<Self> {
        let n = k.nrows();
        Self::from_fn(n, |x, y, z, w| {
            if x == y {
                0.0
            } else if x == w && y == z {
                k[(x, y)]
            } else if x == z && y == w {
                -k[(x, y)]
            } else {
                0.0
            }
        })
    }

    #[inline]
    fn idx(&self, x: usize, y: usize, z: usize, w: usize) -> usize {
        ((x * self.n + y) * self.n + z) * self.n + w
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize, w: usize) -> f64 {
        self.data[self.idx(x, y, z, w)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self.data.iter().copied())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * c).collect() }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Result<Self> {
        same_dim(self.n, other.n)?;
        Ok(Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + c * b).collect() })
    }

    /// Multilinear evaluation `T(X, Y, Z, W)` on frame-coefficient vectors.
    pub fn eval(&self, x: &Vector, y: &Vector, z: &Vector, w: &Vector) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for a in 0..n {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if y[b] == 0.0 {
                    continue;
                }
                let xy = x[a] * y[b];
                for c in 0..n {
                    if z[c] == 0.0 {
                        continue;
                    }
                    for d in 0..n {
                        acc += xy * z[c] * w[d] * self.get(a, b, c, d);
                    }
                }
            }
        }
        acc
    }

    /// Largest violation of `T_xyzw = −T_yxzw`, `T_xyzw = −T_xywz` and
    /// `T_xyzw = T_zwxy`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    for w in 0..n {
                        let t = self.get(x, y, z, w);
                        worst = worst
                            .max((t + self.get(y, x, z, w)).abs())
                            .max((t + self.get(x, y, w, z)).abs())
                            .max((t - self.get(z, w, x, y)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest `|T_xyzw + T_yzxw + T_zxyw|` (first Bianchi sum).
    pub fn bianchi_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    for w in 0..n {
                        let s = self.get(x, y, z, w) + self.get(y, z, x, w) + self.get(z, x, y, w);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Kulkarni–Nomizu product with the half-weight normalisation
///
/// ```text
/// (s⊙r)(X,Y,Z,W) = ½(r(X,W)s(Y,Z) + r(Y,Z)s(X,W)) − ½(r(X,Z)s(Y,W) + r(Y,W)s(X,Z))
/// ```
///
/// so that `(g⊙g)(X,Y,Y,X) = 1` for orthonormal `X, Y`.
pub fn kulkarni_nomizu(s: &SymTensor2, r: &SymTensor2) -> Result<CurvTensor4> {
    same_dim(s.dim(), r.dim())?;
    let (s, r) = (&s.m, &r.m);
    CurvTensor4::from_fn(s.nrows(), |x, y, z, w| {
        0.5 * (r[(x, w)] * s[(y, z)] + r[(y, z)] * s[(x, w)]) - 0.5 * (r[(x, z)] * s[(y, w)] + r[(y, w)] * s[(x, z)])
    })
}

/// `Σ_i T(X, E_i, E_i, Y)`, symmetrised.
pub fn ricci_contraction(t: &CurvTensor4) -> SymTensor2 {
    let n = t.dim();
    let raw = DMatrix::from_fn(n, n, |x, y| (0..n).map(|i| t.get(x, i, i, y)).sum());
    SymTensor2::symmetrized(&raw)
}

/// `‖Σ_i Q(·,E_i,E_i,·) − ((n+m−2)/m)·P‖_∞`.
pub fn q_trace_check(q: &CurvTensor4, p: &SymTensor2, n: usize, m: f64) -> Result<f64> {
    same_dim(q.dim(), p.dim())?;
    same_dim(n, p.dim())?;
    let lhs = ricci_contraction(q);
    let factor = (n as f64 + m - 2.0) / m;
    Ok(lhs.sub(&p.scaled(factor))?.max_abs())
}

/// Eigen-decomposition of a symmetric tensor with a deterministic eigenframe.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenframe: Vec<Vector>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Σ λ_i v_i v_iᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (lam, v) in self.eigenvalues.iter().zip(&self.eigenframe) {
            m += (v * v.transpose()) * *lam;
        }
        m
    }

    /// Eigenvectors whose eigenvalue lies within `tol` of `target`.
    pub fn eigenspace(&self, target: f64, tol: f64) -> Vec<Vector> {
        self.eigenvalues
            .iter()
            .zip(&self.eigenframe)
            .filter(|(lam, _)| (*lam - target).abs() <= tol)
            .map(|(_, v)| v.clone())
            .collect()
    }
}

/// Symmetric eigen-decomposition.
///
/// Eigenvalues come out ascending. Within a cluster of eigenvalues closer than
/// `1e-10 · (1 + ‖S‖_max)` the frame is replaced by the Gram–Schmidt
/// orthonormalisation of the projected standard basis, and isolated
/// eigenvectors get their first significant component positive, so the frame
/// does not depend on the solver's internal choices.
pub fn sym_eigen(s: &SymTensor2) -> Spectrum {
    let n = s.dim();
    let eig = SymmetricEigen::new(s.m.clone());
    let mut pairs: Vec<(f64, Vector)> =
        (0..n).map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned())).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let gap = DEFAULT_REL_TOL * (1.0 + s.max_abs());
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenframe: Vec<Vector> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end].0 - pairs[end - 1].0 <= gap {
            end += 1;
        }
        let cluster = &pairs[start..end];
        if cluster.len() == 1 {
            let mut v = cluster[0].1.normalize();
            if let Some(first) = v.iter().copied().find(|c| c.abs() > 1e-12) {
                if first < 0.0 {
                    v = -v;
                }
            }
            eigenframe.push(v);
        } else {
            eigenframe.extend(canonical_basis(cluster.iter().map(|(_, v)| v), n, cluster.len()));
        }
        eigenvalues.extend(cluster.iter().map(|(l, _)| *l));
        start = end;
    }
    Spectrum { eigenvalues, eigenframe }
}

/// Orthonormal basis of `span(vs)` obtained by projecting `e_0, e_1, …` in turn.
fn canonical_basis<'a>(vs: impl Iterator<Item = &'a Vector>, n: usize, k: usize) -> Vec<Vector> {
    let vs: Vec<Vector> = vs.map(|v| v.normalize()).collect();
    let mut out: Vec<Vector> = Vec::with_capacity(k);
    for j in 0..n {
        if out.len() == k {
            break;
        }
        let mut u = Vector::zeros(n);
        for v in &vs {
            u += v * v[j];
        }
        for b in &out {
            let c = b.dot(&u);
            u -= b * c;
        }
        let norm = u.norm();
        if norm > 1e-6 {
            out.push(u / norm);
        }
    }
    out
}

/// Modified Gram–Schmidt. Fails when the family is numerically dependent.
pub fn gram_schmidt(vectors: &[Vector]) -> Result<Vec<Vector>> {
    let mut out: Vec<Vector> = Vec::with_capacity(vectors.len());
    for (idx, v) in vectors.iter().enumerate() {
        if let Some(first) = out.first() {
            same_dim(first.len(), v.len())?;
        }
        let mut u = v.clone();
        for b in &out {
            let c = b.dot(&u);
            u -= b * c;
        }
        let norm = u.norm();
        if !(norm > 1e-10 * (1.0 + v.norm())) {
            return Err(QemError::invalid(format!("vector {idx} is linearly dependent on its predecessors")));
        }
        out.push(u / norm);
    }
    Ok(out)
}

/// Orthonormal basis of the orthogonal complement of `span(vs)` in `R^n`.
pub fn orthogonal_complement(vs: &[Vector], n: usize) -> Result<Vec<Vector>> {
    let base = gram_schmidt(vs)?;
    let mut out = base.clone();
    for j in 0..n {
        let mut u = Vector::zeros(n);
        u[j] = 1.0;
        for b in &out {
            let c = b.dot(&u);
            u -= b * c;
        }
        let norm = u.norm();
        if norm > 1e-6 {
            out.push(u / norm);
        }
    }
    Ok(out.split_off(base.len()))
}
