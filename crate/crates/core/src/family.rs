//! Non-rigid quasi-Einstein metrics on a four-dimensional solvable group.
//!
//! For `m > 0` and `β ≠ 0` the algebra spanned by orthonormal `X₀..X₃` with
//!
//! ```text
//! [X₁,X₂] = αX₂ + βX₃     [X₁,X₃] = βX₂ + (2−α)X₃     [X₀,X_i] = F_ij X_j  (i,j ∈ {2,3})
//! [X₀,X₁] = 0             [X₂,X₃] = 0
//! ```
//!
//! carries a left-invariant `(λ, 4+m)`-Einstein structure with
//!
//! ```text
//! λ  = −2(2 − 2α + α² + β²)             z² = −4/(λ(m+2)+4),  z < 0
//! ρ  = 2λ(λ+2)/(λ(m+2)+4)
//! F₂₃ = F₃₂ = zβ   F₂₂ = −(2 − 3α + α² + β²) z   F₃₃ = −(−α + α² + β²) z
//! ```
//!
//! and `w = exp(√(−k̄) r)` with `∇r = −X₀` (the Levi-Civita connection gives
//! `g(∇_X X₀, Y) = −½(g([X₀,X],Y) + g([X₀,Y],X))`). The structure is rigid
//! exactly on the circle `(α−1)² + β² = 1`. As `m → ∞` it converges to
//! `ℝ × S` where `S` is the three-dimensional solvsoliton with
//! `ad_{X₁} = [[α, β], [β, 2−α]]` and `Ric = λI + D`.

use nalgebra::DMatrix;

use crate::error::{QemError, Result};
use crate::exec::Execution;
use crate::lie::{LieAlgebraMetric, SolitonData, SolitonResidual};
use crate::qe::{self, Geometry, IdentityReport, QEParameters, QEStructure, RigidityReport, RigidityTolerances};
use crate::tensor::{self, max_abs, SymTensor2, Vector};

/// Tolerance for recording that `(α−1)² + β² = 1`.
pub const RIGID_LOCUS_TOL: f64 = 1e-12;

/// Tolerance of the internal cross-checks performed by [`build`].
pub const SELF_CHECK_TOL: f64 = 1e-12;

/// Slack for the nonincreasing checks of [`convergence_sweep`].
pub const MONOTONE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub m: f64,
    pub alpha: f64,
    pub beta: f64,
    pub on_rigid_locus: bool,
}

impl FamilyParams {
    pub fn new(m: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(QemError::invalid(format!("m must be positive and finite, got {m}")));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(QemError::invalid("alpha and beta must be finite"));
        }
        if beta == 0.0 {
            return Err(QemError::invalid("beta must be nonzero"));
        }
        let on_rigid_locus = ((alpha - 1.0).powi(2) + beta * beta - 1.0).abs() <= RIGID_LOCUS_TOL;
        Ok(Self { m, alpha, beta, on_rigid_locus })
    }
}

/// `λ = −2(2 − 2α + α² + β²)`.
pub fn lambda_of(alpha: f64, beta: f64) -> f64 {
    -2.0 * (2.0 - 2.0 * alpha + alpha * alpha + beta * beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyRealization {
    pub params: FamilyParams,
    pub lambda: f64,
    pub rho: f64,
    pub z: f64,
    /// `F[a][b] = F_{a+2, b+2}`.
    pub f: [[f64; 2]; 2],
    /// `√(m(ρ−λ))`.
    pub root: f64,
    pub algebra: LieAlgebraMetric,
    /// The quasi-Einstein structure; absent for `m = 1` (where `ρ` cannot be
    /// recovered from the scalar curvature) and for perturbed copies.
    pub qe: Option<QEStructure>,
}

/// Builds the algebra and structure, asserting the defining relation
/// `−2 − (λ+2)z² = z√(m(ρ−λ))` and agreement of two expressions for `ρ − λ`.
pub fn build(params: FamilyParams) -> Result<FamilyRealization> {
    let FamilyParams { m, alpha, beta, .. } = params;
    let lambda = lambda_of(alpha, beta);
    let denom = lambda * (m + 2.0) + 4.0;
    if !(denom < 0.0) {
        return Err(QemError::SelfCheck(format!("lambda(m+2)+4 = {denom} is not negative")));
    }
    let z = -(-4.0 / denom).sqrt();
    let rho = 2.0 * lambda * (lambda + 2.0) / denom;

    let gap = -lambda * ((lambda + 2.0) * z * z / 2.0 + 1.0);
    let gap_direct = rho - lambda;
    if (gap - gap_direct).abs() > SELF_CHECK_TOL * (1.0 + gap_direct.abs()) {
        return Err(QemError::SelfCheck(format!("rho - lambda: {gap} vs {gap_direct}")));
    }
    let root = (m * gap).sqrt();
    let lhs = -2.0 - (lambda + 2.0) * z * z;
    if (lhs - z * root).abs() > SELF_CHECK_TOL * (1.0 + lhs.abs()) {
        return Err(QemError::SelfCheck(format!("defining relation: {lhs} vs {}", z * root)));
    }

    let f23 = z * beta;
    let f22 = -(2.0 - 3.0 * alpha + alpha * alpha + beta * beta) * z;
    let f33 = -(-alpha + alpha * alpha + beta * beta) * z;
    let f = [[f22, f23], [f23, f33]];
    let algebra = family_algebra(alpha, beta, &f)?;

    let qe = if m == 1.0 {
        None
    } else {
        let mut radial = Vector::zeros(4);
        radial[0] = -1.0;
        Some(qe::derive_structure(
            QEParameters::new(4, m, lambda)?,
            Geometry::Lie { algebra: algebra.clone(), radial },
        )?)
    };
    Ok(FamilyRealization { params, lambda, rho, z, f, root, algebra, qe })
}

fn family_algebra(alpha: f64, beta: f64, f: &[[f64; 2]; 2]) -> Result<LieAlgebraMetric> {
    let mut triples = vec![(1, 2, 2, alpha), (1, 2, 3, beta), (1, 3, 2, beta), (1, 3, 3, 2.0 - alpha)];
    for (a, row) in f.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            triples.push((0, a + 2, b + 2, v));
        }
    }
    LieAlgebraMetric::from_triples(4, &triples)
}

impl FamilyRealization {
    /// Copy whose algebra has `C[i][j][k] += delta`; `F` is re-read from the
    /// algebra and the structure is dropped.
    pub fn perturbed(&self, i: usize, j: usize, k: usize, delta: f64) -> Result<Self> {
        let algebra = self.algebra.perturbed(i, j, k, delta)?;
        let f = [[algebra.c(0, 2, 2), algebra.c(0, 2, 3)], [algebra.c(0, 3, 2), algebra.c(0, 3, 3)]];
        Ok(Self { algebra, f, qe: None, ..self.clone() })
    }

    pub fn f_norm(&self) -> f64 {
        max_abs(self.f.iter().flatten().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyVerification {
    /// Max over frame pairs of the left-invariant quasi-Einstein equation
    /// `Ric − ½√(m(ρ−λ))(g([X₀,X],Y)+g([X₀,Y],X)) − (ρ−λ)X₀⊗X₀ − λg`.
    pub qe_residual: f64,
    pub jacobi_residual: f64,
    /// `|scal − (3λ − (m−1)ρ)|`.
    pub scal_residual: f64,
    pub scal: f64,
    pub ricci: SymTensor2,
    pub unimodularity_defect: f64,
    pub rigidity: RigidityReport,
    /// Identity suite, when the structure is present and the algebra is a Lie algebra.
    pub identities: Option<IdentityReport>,
}

/// Residuals and rigidity of a realization. Works on perturbed copies too:
/// curvature is then computed from the raw constants.
pub fn verify(r: &FamilyRealization) -> Result<FamilyVerification> {
    let jacobi_residual = r.algebra.jacobi_residual();
    let curv = r.algebra.curvature_unchecked();
    let (lambda, rho, m) = (r.lambda, r.rho, r.params.m);

    let mut qe_residual = 0.0_f64;
    for x in 0..4 {
        for y in 0..4 {
            let hess = 0.5 * r.root * (r.algebra.c(0, x, y) + r.algebra.c(0, y, x));
            let radial = if x == 0 && y == 0 { rho - lambda } else { 0.0 };
            let g = if x == y { lambda } else { 0.0 };
            qe_residual = qe_residual.max((curv.ricci.get(x, y) - hess - radial - g).abs());
        }
    }
    let scal_residual = (curv.scal - (3.0 * lambda - (m - 1.0) * rho)).abs();

    let tol = RigidityTolerances::default();
    let (verdict, spec, defects, off, einstein) =
        qe::certify(&curv.ricci, lambda, rho, &tol, |b| r.algebra.distribution_integrability(b))?;
    let rigidity = RigidityReport {
        ric_eigenvalues: spec,
        p_eigenvalues: tensor::sym_eigen(&curv.ricci.shifted(-rho)),
        verdict,
        integrability_defects: defects,
        off_spectrum: off,
        einstein,
        dim3_p12: None,
    };

    let identities = match &r.qe {
        Some(s) if jacobi_residual <= crate::lie::JACOBI_TOL => Some(qe::identity_suite(s)?),
        _ => None,
    };
    Ok(FamilyVerification {
        qe_residual,
        jacobi_residual,
        scal_residual,
        scal: curv.scal,
        ricci: curv.ricci,
        unimodularity_defect: r.algebra.unimodularity_defect(),
        rigidity,
        identities,
    })
}

/// Builds and verifies every parameter point.
pub fn verify_grid(points: &[FamilyParams], exec: Execution) -> Vec<Result<FamilyVerification>> {
    exec.map(points, |p| build(*p).and_then(|r| verify(&r)))
}

/// The `m → ∞` limit factor: span `{X₁, X₂, X₃}` (indices 0, 1, 2).
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSolvsoliton {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub algebra: LieAlgebraMetric,
    pub soliton: SolitonData,
}

/// `ad_{X₁} = [[α, β], [β, 2−α]]` on `span{X₂, X₃}`, with `c = λ`,
/// `D(X₁) = 0` and `D = −λI − 2 ad_{X₁}` on `span{X₂, X₃}`.
pub fn limit(alpha: f64, beta: f64) -> Result<LimitSolvsoliton> {
    FamilyParams::new(1.0, alpha, beta)?;
    let lambda = lambda_of(alpha, beta);
    let algebra = LieAlgebraMetric::from_triples(
        3,
        &[(0, 1, 1, alpha), (0, 1, 2, beta), (0, 2, 1, beta), (0, 2, 2, 2.0 - alpha)],
    )?;
    let ad = algebra.ad(0);
    let mut d = DMatrix::zeros(3, 3);
    for i in 1..3 {
        for j in 1..3 {
            d[(i, j)] = -2.0 * ad[(i, j)] - if i == j { lambda } else { 0.0 };
        }
    }
    Ok(LimitSolvsoliton { alpha, beta, lambda, algebra, soliton: SolitonData { c: lambda, d } })
}

impl LimitSolvsoliton {
    pub fn ricci(&self) -> Result<SymTensor2> {
        Ok(self.algebra.curvature()?.ricci.clone())
    }

    pub fn soliton_residual(&self) -> Result<SolitonResidual> {
        self.algebra.solvsoliton_residual(&self.soliton)
    }

    pub fn derivation_residual(&self) -> Result<f64> {
        self.algebra.derivation_residual(&self.soliton.d)
    }

    pub fn is_einstein(&self) -> Result<bool> {
        let ric = self.ricci()?;
        let e = tensor::sym_eigen(&ric).eigenvalues;
        Ok(e[e.len() - 1] - e[0] <= 1e-12 * (1.0 + ric.max_abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub m: f64,
    /// `‖F‖_∞`.
    pub f_norm: f64,
    /// `|z√(m(ρ−λ)) + 2|`.
    pub z_defect: f64,
    /// `‖Ric₄|span{X₁,X₂,X₃} − Ric_limit‖_∞`.
    pub ric_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSweep {
    pub points: Vec<SweepPoint>,
    pub limit: LimitSolvsoliton,
    pub f_monotone: bool,
    pub z_monotone: bool,
    pub ric_monotone: bool,
}

impl ConvergenceSweep {
    pub fn monotone(&self) -> bool {
        self.f_monotone && self.z_monotone && self.ric_monotone
    }
}

fn nonincreasing(values: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = values.collect();
    v.windows(2).all(|w| w[1] <= w[0] + MONOTONE_TOL)
}

/// Diagnostics along an ascending list of `m`, evaluated with `exec` and
/// reported in input order.
pub fn convergence_sweep(alpha: f64, beta: f64, m_list: &[f64], exec: Execution) -> Result<ConvergenceSweep> {
    if m_list.is_empty() {
        return Err(QemError::invalid("m list is empty"));
    }
    if m_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(QemError::invalid("m list must be strictly ascending"));
    }
    let params = m_list.iter().map(|&m| FamilyParams::new(m, alpha, beta)).collect::<Result<Vec<_>>>()?;
    let lim = limit(alpha, beta)?;
    let ric3 = lim.ricci()?;
    let points = exec
        .map(&params, |p| {
            let r = build(*p)?;
            let ric4 = &r.algebra.curvature()?.ricci;
            let ric_defect = max_abs(
                (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| ric4.get(i + 1, j + 1) - ric3.get(i, j)),
            );
            Ok(SweepPoint { m: p.m, f_norm: r.f_norm(), z_defect: (r.z * r.root + 2.0).abs(), ric_defect })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceSweep {
        f_monotone: nonincreasing(points.iter().map(|p| p.f_norm)),
        z_monotone: nonincreasing(points.iter().map(|p| p.z_defect)),
        ric_monotone: nonincreasing(points.iter().map(|p| p.ric_defect)),
        points,
        limit: lim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qe::RigidityVerdict;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_point_constants() {
        let r = build(FamilyParams::new(2.0, 0.0, 1.0).unwrap()).unwrap();
        let s5 = 5f64.sqrt();
        assert_abs_diff_eq!(r.lambda, -6.0);
        assert_abs_diff_eq!(r.rho, -2.4, epsilon = 1e-14);
        assert_abs_diff_eq!(r.z, -1.0 / s5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.f[0][0], 3.0 / s5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.f[0][1], -1.0 / s5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.f[1][1], 1.0 / s5, epsilon = 1e-15);
        assert!(!r.params.on_rigid_locus);
        let qe = r.qe.as_ref().unwrap();
        assert_abs_diff_eq!(qe.scal, -15.6, epsilon = 1e-12);
        assert_abs_diff_eq!(qe.kbar, -1.8, epsilon = 1e-12);
        assert_eq!(qe.mu_bar, 0.0);
    }

    #[test]
    fn golden_point_verification() {
        let v = verify(&build(FamilyParams::new(2.0, 0.0, 1.0).unwrap()).unwrap()).unwrap();
        assert!(v.qe_residual < 1e-12);
        assert!(v.jacobi_residual < 1e-14);
        assert!(v.scal_residual < 1e-12);
        assert!(v.unimodularity_defect > 0.0);
        assert_eq!(v.rigidity.verdict, RigidityVerdict::NonRigid);
        let ids = v.identities.unwrap();
        assert!(ids.qe_residual < 1e-12, "{ids:?}");
        assert!(ids.deriv_p.unwrap() < 1e-10, "{ids:?}");
        // radial Q-flatness characterises rigidity, so it must fail off the rigid locus
        assert_abs_diff_eq!(ids.radial_q, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn rigid_locus_point() {
        let p = FamilyParams::new(3.0, 1.0, 1.0).unwrap();
        assert!(p.on_rigid_locus);
        let r = build(p).unwrap();
        assert_abs_diff_eq!(r.lambda, -4.0);
        assert_abs_diff_eq!(r.rho, -1.0, epsilon = 1e-14);
        let v = verify(&r).unwrap();
        assert_eq!(v.rigidity.verdict, RigidityVerdict::Rigid);
        assert!(v.identities.as_ref().unwrap().radial_q < 1e-12);
        let e = &v.rigidity.ric_eigenvalues.eigenvalues;
        for (got, want) in e.iter().zip([-4.0, -4.0, -1.0, -1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn beta_zero_is_rejected() {
        assert!(FamilyParams::new(2.0, 0.0, 0.0).is_err());
        assert!(limit(0.0, 0.0).is_err());
    }

    #[test]
    fn m_equal_one_builds_without_structure() {
        let r = build(FamilyParams::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        assert!(r.qe.is_none());
        let v = verify(&r).unwrap();
        assert!(v.qe_residual < 1e-12);
    }

    #[test]
    fn corrupted_realization() {
        let r = build(FamilyParams::new(2.0, 0.0, 1.0).unwrap()).unwrap();
        let bad = r.perturbed(0, 2, 2, 0.1).unwrap();
        assert_abs_diff_eq!(bad.f[0][0], r.f[0][0] + 0.1, epsilon = 1e-15);
        let v = verify(&bad).unwrap();
        assert!(v.jacobi_residual > 0.09, "{}", v.jacobi_residual);
        assert!(v.qe_residual > 0.01, "{}", v.qe_residual);
        assert!(v.identities.is_none());
    }

    #[test]
    fn limit_values() {
        let lim = limit(0.0, 1.0).unwrap();
        let ric = lim.ricci().unwrap();
        assert_abs_diff_eq!(ric.get(0, 0), -6.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ric.get(1, 1), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ric.get(1, 2), -2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ric.get(2, 2), -4.0, epsilon = 1e-13);
        assert!(lim.soliton_residual().unwrap().symmetric < 1e-12);
        assert!(lim.derivation_residual().unwrap() < 1e-14);
        assert!(!lim.is_einstein().unwrap());
        let x1 = Vector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!((&lim.soliton.d * x1).amax(), 0.0);

        let ric = limit(1.0, 1.0).unwrap().ricci().unwrap();
        assert_abs_diff_eq!(ric.get(1, 1), -2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ric.get(2, 2), -2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ric.get(1, 2), -2.0, epsilon = 1e-13);
    }

    #[test]
    fn sweep_diagnostics() {
        let s = convergence_sweep(0.0, 1.0, &[1.0, 10.0, 100.0, 1000.0], Execution::Sequential).unwrap();
        assert!(s.monotone(), "{s:?}");
        let last = s.points[3];
        assert_abs_diff_eq!(last.z_defect, (12000.0 / -6008.0 + 2.0_f64).abs(), epsilon = 1e-12);
        assert!(last.f_norm < 0.08);
        let par = convergence_sweep(0.0, 1.0, &[1.0, 10.0, 100.0, 1000.0], Execution::Parallel).unwrap();
        assert_eq!(s, par);
        assert!(convergence_sweep(0.0, 1.0, &[10.0, 1.0], Execution::Sequential).is_err());
        assert!(convergence_sweep(0.0, 1.0, &[5.0], Execution::Sequential).unwrap().monotone());
    }
}
