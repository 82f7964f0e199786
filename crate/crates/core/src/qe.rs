//! Derived quasi-Einstein quantities and the identity checks that hold on
//! structures with constant scalar curvature.
//!
//! For a structure `(M^n, g, w)` solving `Hess w = (w/m)(Ric − λg)`:
//!
//! ```text
//! ρ  = ((n−1)λ − scal)/(m−1)          k̄ = (λ−ρ)/m
//! μ̄  = k̄ w² + |∇w|²                  μ  = (m−1) μ̄
//! P  = Ric − ρ g
//! Q  = R + (2/m) P⊙g + ((ρ−λ)/m) g⊙g
//! ```
//!
//! Identities evaluated here (all should vanish up to rounding):
//! `Σ_i Q(·,E_i,E_i,·) = ((n+m−2)/m) P`, `tr P = (n−1)λ − (n+m−1)ρ`,
//! `P(∇w) = 0`, `|P|² = (λ−ρ) tr P`, `div P = 0`, radial flatness
//! `Q(∇w,·,·,∇w) = 0` on the rigid and homogeneous models, and
//! `(w/m)((∇_X P)(Y,Z) − (∇_Y P)(X,Z)) = −Q(X,Y,Z,∇w)` on Lie models.
//!
//! On Lie models `w = exp(√(−k̄) r)` with `∇r` a unit left-invariant field.
//! Every identity is homogeneous in `w`, so the common factor is cancelled
//! and all checks run at `w = 1`.

use nalgebra::DMatrix;

use crate::error::{QemError, Result};
use crate::lie::{self, LieAlgebraMetric, Tensor3};
use crate::tensor::{self, check_dim, max_abs, CurvTensor4, Spectrum, SymTensor2, Vector};
use crate::warped::{mu_bar_at, qe_residual_at, Profile, WarpedProductModel};

/// Default sample count for warped models.
pub const DEFAULT_SAMPLES: usize = 20;

/// Relative spread allowed for quantities that must be constant over samples.
pub const CONSTANCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QEParameters {
    pub n: usize,
    pub m: f64,
    pub lambda: f64,
}

impl QEParameters {
    pub fn new(n: usize, m: f64, lambda: f64) -> Result<Self> {
        check_dim(n)?;
        if !(m > 0.0) || !m.is_finite() {
            return Err(QemError::invalid(format!("m must be positive and finite, got {m}")));
        }
        if !lambda.is_finite() {
            return Err(QemError::invalid("lambda is not finite"));
        }
        Ok(Self { n, m, lambda })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Left-invariant metric; `radial` is the direction of `∇w` (normalised on use).
    Lie {
        algebra: LieAlgebraMetric,
        radial: Vector,
    },
    Warped {
        model: WarpedProductModel,
        w: Profile,
    },
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Lie { algebra, .. } => algebra.dim(),
            Geometry::Warped { model, .. } => model.dim(),
        }
    }

    pub fn is_lie(&self) -> bool {
        matches!(self, Geometry::Lie { .. })
    }
}

/// Curvature and `w` data at one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    /// Radial parameter for warped models; `None` on Lie models.
    pub r: Option<f64>,
    pub riemann: CurvTensor4,
    pub ricci: SymTensor2,
    /// Unit direction of `∇w` (`∂r` on warped models).
    pub grad_dir: Vector,
    pub w: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QEStructure {
    pub params: QEParameters,
    pub geometry: Geometry,
    pub scal: f64,
    pub rho: f64,
    pub kbar: f64,
    pub mu_bar: f64,
    pub mu: f64,
    /// Relative spread of `μ̄` over the samples (zero on Lie models).
    pub mu_bar_spread: f64,
    pub sites: Vec<Site>,
}

fn unit_vector(n: usize, i: usize) -> Vector {
    let mut e = Vector::zeros(n);
    e[i] = 1.0;
    e
}

/// `ρ = ((n−1)λ − scal)/(m−1)`.
pub fn rho_from_scal(n: usize, m: f64, lambda: f64, scal: f64) -> Result<f64> {
    if m == 1.0 {
        return Err(QemError::Rejected("rho = ((n-1)lambda - scal)/(m-1) is undefined at m = 1".into()));
    }
    Ok(((n as f64 - 1.0) * lambda - scal) / (m - 1.0))
}

/// Establishes `ρ, k̄, μ̄, μ` with the default warped sample count.
pub fn derive_structure(params: QEParameters, geometry: Geometry) -> Result<QEStructure> {
    derive_structure_with(params, geometry, DEFAULT_SAMPLES)
}

fn sign_coherence(lambda: f64, rho: f64) -> Result<()> {
    if (lambda > 0.0 && !(lambda - rho > 0.0)) || (lambda < 0.0 && !(lambda - rho < 0.0)) {
        return Err(QemError::Rejected(format!(
            "sign coherence violated: lambda = {lambda}, rho = {rho}; lambda - rho must share the sign of lambda"
        )));
    }
    Ok(())
}

pub fn derive_structure_with(params: QEParameters, geometry: Geometry, samples: usize) -> Result<QEStructure> {
    let n = params.n;
    if geometry.dim() != n {
        return Err(QemError::DimensionMismatch { expected: geometry.dim(), found: n });
    }
    let QEParameters { m, lambda, .. } = params;
    if m == 1.0 {
        return Err(QemError::Rejected("m = 1 is not supported: rho is undefined".into()));
    }

    let (scal, rho, kbar, mu_bar, mu_bar_spread, sites) = match &geometry {
        Geometry::Lie { algebra, radial } => {
            let norm = radial.norm();
            if radial.len() != n || !(norm > 0.0) || !norm.is_finite() {
                return Err(QemError::invalid("radial direction must be a nonzero vector of the algebra's dimension"));
            }
            let curv = algebra.curvature()?;
            let rho = rho_from_scal(n, m, lambda, curv.scal)?;
            sign_coherence(lambda, rho)?;
            let kbar = (lambda - rho) / m;
            if !(kbar < 0.0) {
                return Err(QemError::Rejected(format!(
                    "Lie models carry w = exp(sqrt(-kbar) r) and need kbar < 0, got kbar = {kbar}"
                )));
            }
            let site = Site {
                r: None,
                riemann: curv.riemann.clone(),
                ricci: curv.ricci.clone(),
                grad_dir: radial / norm,
                w: 1.0,
                grad_norm: (-kbar).sqrt(),
            };
            (curv.scal, rho, kbar, 0.0, 0.0, vec![site])
        }
        Geometry::Warped { model, w } => {
            if samples == 0 {
                return Err(QemError::invalid("sample count must be positive"));
            }
            let rs = model.interval.samples(samples);
            let mut scals = Vec::with_capacity(rs.len());
            let mut sites = Vec::with_capacity(rs.len());
            for &r in &rs {
                let (wv, w1, _) = w.eval(r);
                if !(wv > 0.0) {
                    return Err(QemError::Rejected(format!("w({r}) = {wv} is not positive in the interior")));
                }
                scals.push(model.scal_at(r)?);
                sites.push(Site {
                    r: Some(r),
                    riemann: model.riemann_at(r)?,
                    ricci: model.ricci_at(r)?,
                    grad_dir: unit_vector(n, 0),
                    w: wv,
                    grad_norm: w1.abs(),
                });
            }
            // samples next to a singular end lose digits to cancellation; the
            // median is taken from the well-conditioned middle
            let mut sorted = scals.clone();
            sorted.sort_by(f64::total_cmp);
            let scal = sorted[sorted.len() / 2];
            let scal_spread = max_abs(scals.iter().map(|s| s - scal));
            if scal_spread > CONSTANCY_TOL * (1.0 + max_abs(scals.iter().copied())) {
                return Err(QemError::Rejected(format!(
                    "scalar curvature is not constant (spread {scal_spread:.3e} over {} samples)",
                    rs.len()
                )));
            }
            let rho = rho_from_scal(n, m, lambda, scal)?;
            sign_coherence(lambda, rho)?;
            let kbar = (lambda - rho) / m;
            let mus: Vec<f64> = rs.iter().map(|&r| mu_bar_at(w, kbar, r)).collect();
            let terms: Vec<f64> = rs
                .iter()
                .map(|&r| {
                    let (v, d1, _) = w.eval(r);
                    (kbar * v * v).abs().max(d1 * d1)
                })
                .collect();
            // report the value from the sample with the least cancellation
            let best = (0..terms.len()).min_by(|&a, &b| terms[a].total_cmp(&terms[b])).expect("nonempty");
            let mu_bar = mus[best];
            let magnitude = terms.iter().copied().fold(0.0_f64, f64::max);
            let spread = max_abs(mus.iter().map(|v| v - mu_bar)) / (1.0 + magnitude);
            if spread > CONSTANCY_TOL {
                return Err(QemError::Rejected(format!(
                    "mu_bar = kbar w^2 + |grad w|^2 is not conserved (relative spread {spread:.3e})"
                )));
            }
            (scal, rho, kbar, mu_bar, spread, sites)
        }
    };

    Ok(QEStructure { params, geometry, scal, rho, kbar, mu_bar, mu: (m - 1.0) * mu_bar, mu_bar_spread, sites })
}

/// `P` and `Q` at one site.
#[derive(Debug, Clone, PartialEq)]
pub struct PQTensors {
    pub r: Option<f64>,
    pub p: SymTensor2,
    pub q: CurvTensor4,
}

/// `P = Ric − ρg`, `Q = R + (2/m)P⊙g + ((ρ−λ)/m)g⊙g` at every site.
pub fn build_pq(qe: &QEStructure) -> Vec<PQTensors> {
    let QEParameters { n, m, lambda } = qe.params;
    let g = SymTensor2::identity(n).expect("validated dimension");
    let gg = tensor::kulkarni_nomizu(&g, &g).expect("same dimension");
    qe.sites
        .iter()
        .map(|site| {
            let p = site.ricci.shifted(-qe.rho);
            let pg = tensor::kulkarni_nomizu(&p, &g).expect("same dimension");
            let q = site
                .riemann
                .add_scaled(2.0 / m, &pg)
                .and_then(|t| t.add_scaled((qe.rho - lambda) / m, &gg))
                .expect("same dimension");
            PQTensors { r: site.r, p, q }
        })
        .collect()
}

fn check_sites(qe: &QEStructure, pq: &[PQTensors]) -> Result<()> {
    if pq.len() != qe.sites.len() {
        return Err(QemError::invalid(format!("expected P/Q at {} sites, got {}", qe.sites.len(), pq.len())));
    }
    Ok(())
}

/// Max over sites of the `Q`-trace residual.
pub fn q_trace_residual(qe: &QEStructure, pq: &[PQTensors]) -> Result<f64> {
    check_sites(qe, pq)?;
    let mut worst = 0.0_f64;
    for t in pq {
        worst = worst.max(tensor::q_trace_check(&t.q, &t.p, qe.params.n, qe.params.m)?);
    }
    Ok(worst)
}

/// `|tr P − ((n−1)λ − (n+m−1)ρ)|`, max over sites.
pub fn trace_p_residual(qe: &QEStructure, pq: &[PQTensors]) -> Result<f64> {
    check_sites(qe, pq)?;
    let QEParameters { n, m, lambda } = qe.params;
    let expected = (n as f64 - 1.0) * lambda - (n as f64 + m - 1.0) * qe.rho;
    Ok(max_abs(pq.iter().map(|t| t.p.trace() - expected)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CswResiduals {
    /// `‖P(∇w/|∇w|)‖_∞`.
    pub p_grad: f64,
    /// `| |P|² − (λ−ρ) tr P |`.
    pub p_norm: f64,
    /// `‖div P‖_∞`.
    pub div_p: f64,
}

impl CswResiduals {
    pub fn max(&self) -> f64 {
        self.p_grad.max(self.p_norm).max(self.div_p)
    }
}

/// `P(∇w) = 0`, `|P|² = (λ−ρ) tr P`, `div P = 0`, each as a max over sites.
pub fn csw_identity_suite(qe: &QEStructure, pq: &[PQTensors]) -> Result<CswResiduals> {
    check_sites(qe, pq)?;
    let lambda = qe.params.lambda;
    let mut out = CswResiduals { p_grad: 0.0, p_norm: 0.0, div_p: 0.0 };
    for (site, t) in qe.sites.iter().zip(pq) {
        out.p_grad = out.p_grad.max(t.p.apply(&site.grad_dir).amax());
        out.p_norm = out.p_norm.max((t.p.norm_squared() - (lambda - qe.rho) * t.p.trace()).abs());
        let div = match (&qe.geometry, site.r) {
            (Geometry::Lie { algebra, .. }, _) => {
                let conn = algebra.levi_civita()?;
                lie::divergence(&conn.covariant_derivative_sym2(&t.p)?).amax()
            }
            (Geometry::Warped { model, .. }, Some(r)) => warped_div_p(model, qe.rho, r)?,
            (Geometry::Warped { .. }, None) => return Err(QemError::invalid("warped site without a radius")),
        };
        out.div_p = out.div_p.max(div);
    }
    Ok(out)
}

// P = diag(a, b, …, b) in {∂r, E_a}: div P = (a′ + d (φ′/φ)(a − b)) ∂r.
fn warped_div_p(model: &WarpedProductModel, rho: f64, r: f64) -> Result<f64> {
    if model.fiber_dim == 0 {
        return Ok(model.ricci_blocks_derivative(r)?.radial.abs());
    }
    let ric = model.ricci_blocks(r)?;
    let dric = model.ricci_blocks_derivative(r)?;
    let (a, b) = (ric.radial - rho, ric.tangential - rho);
    let h = model.shape_operator(r)?;
    Ok((dric.radial + model.fiber_dim as f64 * h * (a - b)).abs())
}

/// Non-radial eigenvalues of `P` in dimension three:
/// `p_{1,2} = ½(tr P ∓ √(m ρ tr P))`, returned ascending.
///
/// A discriminant `m ρ tr P` below `−1e-12` means the inputs do not come
/// from a constant-scalar structure.
pub fn dim3_p12(tr_p: f64, m: f64, rho: f64) -> Result<(f64, f64)> {
    let disc = m * rho * tr_p;
    if disc < -1e-12 {
        return Err(QemError::Infeasible(format!("m*rho*trP = {disc:.3e} < 0")));
    }
    let root = disc.max(0.0).sqrt();
    Ok((0.5 * (tr_p - root), 0.5 * (tr_p + root)))
}

/// Eigenvalues of `P` restricted to the orthogonal complement of `∇w`.
pub fn complement_spectrum(p: &SymTensor2, grad_dir: &Vector) -> Result<Spectrum> {
    let basis = tensor::orthogonal_complement(std::slice::from_ref(grad_dir), p.dim())?;
    Ok(tensor::sym_eigen(&p.restrict(&basis)?))
}

/// For `n = 3`: max over sites of the gap between [`dim3_p12`] and the
/// eigenvalues of `P` on the complement of `∇w`.
pub fn dim3_agreement(qe: &QEStructure, pq: &[PQTensors]) -> Result<f64> {
    check_sites(qe, pq)?;
    if qe.params.n != 3 {
        return Err(QemError::invalid(format!("dimension-3 formula applied in dimension {}", qe.params.n)));
    }
    let mut worst = 0.0_f64;
    for (site, t) in qe.sites.iter().zip(pq) {
        let (p1, p2) = dim3_p12(t.p.trace(), qe.params.m, qe.rho)?;
        let sp = complement_spectrum(&t.p, &site.grad_dir)?;
        worst = worst.max((sp.eigenvalues[0] - p1).abs()).max((sp.eigenvalues[1] - p2).abs());
    }
    Ok(worst)
}

/// `max_{i,j} |Q(N, E_i, E_j, N)|` with `N` the unit direction of `∇w`.
pub fn radial_q_flatness(qe: &QEStructure, pq: &[PQTensors]) -> Result<f64> {
    check_sites(qe, pq)?;
    let n = qe.params.n;
    let mut worst = 0.0_f64;
    for (site, t) in qe.sites.iter().zip(pq) {
        let nv = &site.grad_dir;
        for i in 0..n {
            let ei = unit_vector(n, i);
            for j in 0..n {
                let ej = unit_vector(n, j);
                worst = worst.max(t.q.eval(nv, &ei, &ej, nv).abs());
            }
        }
    }
    Ok(worst)
}

/// `‖P ∘ (P − (λ−ρ)I)‖_∞`.
pub fn p_quadratic_residual(p: &SymTensor2, lambda: f64, rho: f64) -> f64 {
    let shifted = p.shifted(-(lambda - rho));
    let prod: DMatrix<f64> = p.compose(&shifted).expect("same dimension");
    max_abs(prod.iter().copied())
}

/// `max |(1/m)((∇P)[X][Y][Z] − (∇P)[Y][X][Z]) + s·Q(X,Y,Z,N)|` over frame
/// triples, where `s = |∇w|/w` and `N` the unit direction of `∇w`.
pub fn deriv_p_residual(nabla_p: &Tensor3, q: &CurvTensor4, grad_dir: &Vector, m: f64, s: f64) -> Result<f64> {
    let n = nabla_p.dim();
    if q.dim() != n || grad_dir.len() != n {
        return Err(QemError::DimensionMismatch { expected: n, found: q.dim() });
    }
    let mut worst = 0.0_f64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let mut qn = 0.0;
                for d in 0..n {
                    qn += q.get(x, y, z, d) * grad_dir[d];
                }
                let lhs = (nabla_p.get(x, y, z) - nabla_p.get(y, x, z)) / m;
                worst = worst.max((lhs + s * qn).abs());
            }
        }
    }
    Ok(worst)
}

/// `(w/m)((∇_X P)(Y,Z) − (∇_Y P)(X,Z)) = −Q(X,Y,Z,∇w)` on a Lie model, with
/// the common factor `w` cancelled.
pub fn deriv_p_identity(qe: &QEStructure, pq: &[PQTensors]) -> Result<f64> {
    check_sites(qe, pq)?;
    let Geometry::Lie { algebra, .. } = &qe.geometry else {
        return Err(QemError::invalid("the derivative identity is evaluated on Lie models only"));
    };
    if !(qe.kbar < 0.0) {
        return Err(QemError::invalid(format!("Lie models need kbar < 0, got {}", qe.kbar)));
    }
    let conn = algebra.levi_civita()?;
    let site = &qe.sites[0];
    let nabla_p = conn.covariant_derivative_sym2(&pq[0].p)?;
    deriv_p_residual(&nabla_p, &pq[0].q, &site.grad_dir, qe.params.m, (-qe.kbar).sqrt())
}

/// `‖Hess w − (w/m)(Ric − λg)‖_∞`, max over sites.
///
/// On Lie models `(m/w) Hess w = m√(−k̄) ∇N♭ + (ρ−λ) N♭⊗N♭` with
/// `∇N♭(X,Y) = g(∇_X N, Y)`; any antisymmetric part of `∇N♭` (meaning `N` is
/// not a gradient) shows up in the residual.
pub fn qe_residual(qe: &QEStructure) -> Result<f64> {
    let QEParameters { n, m, lambda } = qe.params;
    match &qe.geometry {
        Geometry::Lie { algebra, .. } => {
            let conn = algebra.levi_civita()?;
            let site = &qe.sites[0];
            let hess = radial_hessian_form(&conn.gamma, &site.grad_dir);
            let s = (-qe.kbar).sqrt();
            let nv = &site.grad_dir;
            let mut worst = 0.0_f64;
            for x in 0..n {
                for y in 0..n {
                    let lhs = site.ricci.get(x, y) - if x == y { lambda } else { 0.0 };
                    let rhs = m * s * hess[(x, y)] + (qe.rho - lambda) * nv[x] * nv[y];
                    worst = worst.max((lhs - rhs).abs());
                }
            }
            Ok(worst)
        }
        Geometry::Warped { model, w } => {
            let mut worst = 0.0_f64;
            for site in &qe.sites {
                let r = site.r.ok_or_else(|| QemError::invalid("warped site without a radius"))?;
                worst = worst.max(qe_residual_at(model, w, n, m, lambda, r)?);
            }
            Ok(worst)
        }
    }
}

/// `H[x][y] = g(∇_{X_x} N, X_y)` for a constant-coefficient field `N`.
pub fn radial_hessian_form(gamma: &Tensor3, nv: &Vector) -> DMatrix<f64> {
    let n = gamma.dim();
    DMatrix::from_fn(n, n, |x, y| (0..n).map(|j| nv[j] * gamma.get(x, j, y)).sum())
}

/// Amount by which `scal` leaves `[n·min(λ,ρ), n·max(λ,ρ)]` beyond `1e-10`.
pub fn scalar_bounds_violation(qe: &QEStructure) -> f64 {
    let n = qe.params.n as f64;
    let (lo, hi) = (n * qe.params.lambda.min(qe.rho), n * qe.params.lambda.max(qe.rho));
    let slack = 1e-10 * (1.0 + qe.scal.abs());
    (lo - qe.scal - slack).max(qe.scal - hi - slack).max(0.0)
}

/// Amount by which `ρ` leaves `[λ, 0]` (for `λ < 0`) or `[0, λ]` (for `λ > 0`).
pub fn rho_range_violation(qe: &QEStructure) -> f64 {
    let (lambda, rho) = (qe.params.lambda, qe.rho);
    let slack = 1e-10 * (1.0 + lambda.abs());
    let (lo, hi) = if lambda < 0.0 { (lambda, 0.0) } else { (0.0, lambda) };
    (lo - rho - slack).max(rho - hi - slack).max(0.0)
}

/// Largest first-Bianchi defect over the sites' curvature tensors.
pub fn bianchi_residual(qe: &QEStructure) -> f64 {
    qe.sites.iter().map(|s| s.riemann.bianchi_defect()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RigidityVerdict {
    Rigid,
    NonRigid,
    Inconclusive,
}

impl RigidityVerdict {
    pub fn name(self) -> &'static str {
        match self {
            RigidityVerdict::Rigid => "rigid",
            RigidityVerdict::NonRigid => "non_rigid",
            RigidityVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidityTolerances {
    /// Eigenvalue distance to `{λ, ρ}` accepted as equal.
    pub accept: f64,
    /// Eigenvalue distance to `{λ, ρ}` that certifies non-rigidity.
    pub reject: f64,
    /// Bracket-closure defect accepted for the eigendistributions.
    pub integrability: f64,
}

impl Default for RigidityTolerances {
    fn default() -> Self {
        Self { accept: 1e-8, reject: 1e-6, integrability: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidityReport {
    pub ric_eigenvalues: Spectrum,
    pub p_eigenvalues: Spectrum,
    pub verdict: RigidityVerdict,
    /// Closure defects of the `λ`- and `ρ`-eigendistributions (empty on the Einstein branch).
    pub integrability_defects: Vec<f64>,
    /// Largest distance from a Ricci eigenvalue to `{λ, ρ}`.
    pub off_spectrum: f64,
    pub einstein: bool,
    pub dim3_p12: Option<(f64, f64)>,
}

/// Rigidity decision for a single Ricci tensor.
///
/// Einstein metrics are rigid outright. Otherwise the spectrum must lie in
/// `{λ, ρ}` within `accept` and both eigendistributions must close under
/// `closure` within `integrability`; an eigenvalue at least `reject` away
/// from both constants certifies non-rigidity. Anything in between is
/// inconclusive.
pub fn certify(
    ricci: &SymTensor2,
    lambda: f64,
    rho: f64,
    tol: &RigidityTolerances,
    closure: impl Fn(&[Vector]) -> Result<f64>,
) -> Result<(RigidityVerdict, Spectrum, Vec<f64>, f64, bool)> {
    let spec = tensor::sym_eigen(ricci);
    let (first, last) = (spec.eigenvalues[0], *spec.eigenvalues.last().expect("nonempty"));
    let off = spec.eigenvalues.iter().map(|e| (e - lambda).abs().min((e - rho).abs())).fold(0.0_f64, f64::max);
    if last - first <= tol.accept {
        return Ok((RigidityVerdict::Rigid, spec, Vec::new(), off, true));
    }
    if off >= tol.reject {
        return Ok((RigidityVerdict::NonRigid, spec, Vec::new(), off, false));
    }
    if off > tol.accept {
        return Ok((RigidityVerdict::Inconclusive, spec, Vec::new(), off, false));
    }
    let (mut lam_space, mut rho_space) = (Vec::new(), Vec::new());
    for (e, v) in spec.eigenvalues.iter().zip(&spec.eigenframe) {
        if (e - lambda).abs() <= (e - rho).abs() {
            lam_space.push(v.clone());
        } else {
            rho_space.push(v.clone());
        }
    }
    let mut defects = Vec::with_capacity(2);
    for space in [&lam_space, &rho_space] {
        defects.push(if space.is_empty() { 0.0 } else { closure(space)? });
    }
    let verdict = if defects.iter().all(|d| *d <= tol.integrability) {
        RigidityVerdict::Rigid
    } else {
        RigidityVerdict::Inconclusive
    };
    Ok((verdict, spec, defects, off, false))
}

pub fn rigidity_certificate(qe: &QEStructure, pq: &[PQTensors]) -> Result<RigidityReport> {
    rigidity_certificate_with(qe, pq, &RigidityTolerances::default())
}

pub fn rigidity_certificate_with(
    qe: &QEStructure,
    pq: &[PQTensors],
    tol: &RigidityTolerances,
) -> Result<RigidityReport> {
    check_sites(qe, pq)?;
    let lambda = qe.params.lambda;
    let mut combined: Option<RigidityReport> = None;
    for (site, t) in qe.sites.iter().zip(pq) {
        let (verdict, spec, defects, off, einstein) = match &qe.geometry {
            Geometry::Lie { algebra, .. } => {
                certify(&site.ricci, lambda, qe.rho, tol, |b| algebra.distribution_integrability(b))?
            }
            // the warped Ricci tensor is diagonal in the adapted frame, so
            // its eigendistributions are the radial line and the fibers
            Geometry::Warped { .. } => certify(&site.ricci, lambda, qe.rho, tol, |_| Ok(0.0))?,
        };
        let dim3 = if qe.params.n == 3 { dim3_p12(t.p.trace(), qe.params.m, qe.rho).ok() } else { None };
        let report = RigidityReport {
            ric_eigenvalues: spec,
            p_eigenvalues: tensor::sym_eigen(&t.p),
            verdict,
            integrability_defects: defects,
            off_spectrum: off,
            einstein,
            dim3_p12: dim3,
        };
        combined = Some(match combined {
            None => report,
            Some(prev) => merge_reports(prev, report),
        });
    }
    combined.ok_or_else(|| QemError::invalid("structure has no evaluation sites"))
}

fn merge_reports(prev: RigidityReport, next: RigidityReport) -> RigidityReport {
    use RigidityVerdict::*;
    let verdict = match (prev.verdict, next.verdict) {
        (NonRigid, _) | (_, NonRigid) => NonRigid,
        (Rigid, Rigid) => Rigid,
        _ => Inconclusive,
    };
    let defects = if prev.integrability_defects.len() == next.integrability_defects.len() {
        prev.integrability_defects.iter().zip(&next.integrability_defects).map(|(a, b)| a.max(*b)).collect()
    } else {
        prev.integrability_defects
    };
    RigidityReport {
        verdict,
        integrability_defects: defects,
        off_spectrum: prev.off_spectrum.max(next.off_spectrum),
        einstein: prev.einstein && next.einstein,
        ..prev
    }
}

/// All applicable identity residuals of a structure.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub qe_residual: f64,
    pub q_trace: f64,
    pub trace_p: f64,
    pub csw: CswResiduals,
    pub radial_q: f64,
    pub p_quadratic: f64,
    /// Lie models only.
    pub deriv_p: Option<f64>,
    /// `n = 3` only.
    pub dim3: Option<f64>,
    pub bianchi: f64,
    pub scalar_bounds: f64,
    pub rho_range: f64,
}

pub fn identity_suite(qe: &QEStructure) -> Result<IdentityReport> {
    let pq = build_pq(qe);
    Ok(IdentityReport {
        qe_residual: qe_residual(qe)?,
        q_trace: q_trace_residual(qe, &pq)?,
        trace_p: trace_p_residual(qe, &pq)?,
        csw: csw_identity_suite(qe, &pq)?,
        radial_q: radial_q_flatness(qe, &pq)?,
        p_quadratic: pq.iter().map(|t| p_quadratic_residual(&t.p, qe.params.lambda, qe.rho)).fold(0.0, f64::max),
        deriv_p: if qe.geometry.is_lie() { Some(deriv_p_identity(qe, &pq)?) } else { None },
        dim3: if qe.params.n == 3 { Some(dim3_agreement(qe, &pq)?) } else { None },
        bianchi: bianchi_residual(qe),
        scalar_bounds: scalar_bounds_violation(qe),
        rho_range: rho_range_violation(qe),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warped::{product_instance, Interval, ProfileKind, CATALOG};
    use approx::assert_abs_diff_eq;

    fn warped_structure(idx: usize, n: usize, m: f64) -> QEStructure {
        let inst = CATALOG[idx - 1].instantiate(n, m).unwrap();
        let params = QEParameters::new(inst.n, m, inst.lambda).unwrap();
        derive_structure(params, Geometry::Warped { model: inst.model, w: inst.w }).unwrap()
    }

    #[test]
    fn disc_row_derived_quantities() {
        let qe = warped_structure(6, 3, 2.0);
        assert_abs_diff_eq!(qe.scal, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qe.rho, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qe.kbar, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qe.mu_bar, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qe.mu, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_trivial_structure() {
        let model = crate::warped::WarpedProductModel::new(
            Interval::new(0.0, f64::INFINITY).unwrap(),
            2,
            0.0,
            Profile::constant(1.0),
        )
        .unwrap();
        let qe = derive_structure(
            QEParameters::new(3, 2.0, 0.0).unwrap(),
            Geometry::Warped { model, w: Profile::constant(1.0) },
        )
        .unwrap();
        assert_eq!((qe.rho, qe.kbar, qe.mu_bar), (0.0, 0.0, 0.0));
    }

    #[test]
    fn m_equal_one_is_rejected() {
        let inst = CATALOG[5].instantiate(3, 1.0).unwrap();
        let err = derive_structure(
            QEParameters::new(3, 1.0, inst.lambda).unwrap(),
            Geometry::Warped { model: inst.model, w: inst.w },
        )
        .unwrap_err();
        assert!(matches!(err, QemError::Rejected(_)));
        assert!(rho_from_scal(3, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn non_constant_scal_is_rejected() {
        let model = crate::warped::WarpedProductModel::new(
            Interval::new(0.0, 3.0).unwrap(),
            2,
            1.0,
            Profile::new(ProfileKind::Sin, 1.0, 0.5),
        )
        .unwrap();
        let err = derive_structure(
            QEParameters::new(3, 2.0, 1.0).unwrap(),
            Geometry::Warped { model, w: Profile::constant(1.0) },
        )
        .unwrap_err();
        assert!(matches!(err, QemError::Rejected(ref s) if s.contains("scalar curvature")));
    }

    #[test]
    fn einstein_rows_have_vanishing_p() {
        for idx in 6..=10 {
            let qe = warped_structure(idx, 4, 3.0);
            let pq = build_pq(&qe);
            for t in &pq {
                assert!(t.p.max_abs() < 1e-12, "row {idx}");
            }
            let csw = csw_identity_suite(&qe, &pq).unwrap();
            assert!(csw.max() < 1e-10, "row {idx}: {csw:?}");
            let rep = rigidity_certificate(&qe, &pq).unwrap();
            assert_eq!(rep.verdict, RigidityVerdict::Rigid);
            assert!(rep.einstein);
        }
    }

    #[test]
    fn product_model_p_spectrum() {
        let inst = product_instance(1, 3, 2.0).unwrap();
        let qe = derive_structure(
            QEParameters::new(3, 2.0, inst.lambda).unwrap(),
            Geometry::Warped { model: inst.model, w: inst.w },
        )
        .unwrap();
        assert_eq!(qe.rho, 0.0);
        let pq = build_pq(&qe);
        assert_eq!(pq[0].p, SymTensor2::diag(&[0.0, 2.0, 2.0]).unwrap());
        assert!(p_quadratic_residual(&pq[0].p, 2.0, 0.0) < 1e-15);
        let rep = rigidity_certificate(&qe, &pq).unwrap();
        assert_eq!(rep.verdict, RigidityVerdict::Rigid);
        assert!(!rep.einstein);
        assert!(dim3_agreement(&qe, &pq).unwrap() < 1e-12);
        assert!(radial_q_flatness(&qe, &pq).unwrap() < 1e-12);
    }

    #[test]
    fn p12_formula() {
        assert_eq!(dim3_p12(0.0, 2.0, 1.0).unwrap(), (0.0, 0.0));
        let lambda = 3.0;
        assert_eq!(dim3_p12(2.0 * lambda, 2.0, 0.0).unwrap(), (lambda, lambda));
        let (p1, p2) = dim3_p12(4.0, 2.0, 1.0).unwrap();
        assert_abs_diff_eq!(p1, 2.0 - 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p2, 2.0 + 2f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(dim3_p12(4.0, 2.0, -1.0), Err(QemError::Infeasible(_))));
    }

    #[test]
    fn p_quadratic_trivial() {
        let z = SymTensor2::zeros(3).unwrap();
        assert_eq!(p_quadratic_residual(&z, -3.0, -1.0), 0.0);
        let p = SymTensor2::diag(&[0.0, -2.0, -2.0]).unwrap();
        assert_eq!(p_quadratic_residual(&p, -3.0, -1.0), 0.0);
    }

    #[test]
    fn deriv_p_residual_of_zero_data() {
        let n = 3;
        let zero3 = Tensor3::zeros(n);
        let q = CurvTensor4::zeros(n).unwrap();
        let dir = unit_vector(n, 0);
        assert_eq!(deriv_p_residual(&zero3, &q, &dir, 2.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn lie_model_with_nonnegative_kbar_is_rejected() {
        let algebra = LieAlgebraMetric::abelian(3).unwrap();
        let err = derive_structure(
            QEParameters::new(3, 2.0, 0.0).unwrap(),
            Geometry::Lie { algebra, radial: unit_vector(3, 0) },
        )
        .unwrap_err();
        assert!(matches!(err, QemError::Rejected(_)));
    }

    #[test]
    fn sign_coherence_is_enforced() {
        // row 6 geometry with λ large enough that ρ > λ
        let inst = CATALOG[5].instantiate(3, 2.0).unwrap();
        let err = derive_structure(
            QEParameters::new(3, 2.0, 7.0).unwrap(),
            Geometry::Warped { model: inst.model, w: inst.w },
        )
        .unwrap_err();
        assert!(matches!(err, QemError::Rejected(ref s) if s.contains("sign coherence")));
    }

    #[test]
    fn certify_branches() {
        let tol = RigidityTolerances::default();
        let ric = SymTensor2::diag(&[-1.0, -4.0, -2.5]).unwrap();
        let (v, _, _, off, _) = certify(&ric, -4.0, -1.0, &tol, |_| Ok(0.0)).unwrap();
        assert_eq!(v, RigidityVerdict::NonRigid);
        assert_abs_diff_eq!(off, 1.5);
        let ric = SymTensor2::diag(&[-1.0, -4.0, -1.0 + 1e-7]).unwrap();
        assert_eq!(certify(&ric, -4.0, -1.0, &tol, |_| Ok(0.0)).unwrap().0, RigidityVerdict::Inconclusive);
        let ric = SymTensor2::diag(&[-1.0, -4.0]).unwrap();
        assert_eq!(certify(&ric, -4.0, -1.0, &tol, |_| Ok(0.0)).unwrap().0, RigidityVerdict::Rigid);
        assert_eq!(certify(&ric, -4.0, -1.0, &tol, |_| Ok(0.5)).unwrap().0, RigidityVerdict::Inconclusive);
        let ric = SymTensor2::diag(&[-2.0, -2.0]).unwrap();
        let (v, _, _, _, einstein) = certify(&ric, -4.0, -1.0, &tol, |_| Ok(1.0)).unwrap();
        assert_eq!(v, RigidityVerdict::Rigid);
        assert!(einstein);
    }
}
