//! The four verification suites. Each returns a [`Report`] or a
//! [`CommandError`]; the caller maps both onto exit codes.

use qem_core::family::{self, FamilyParams};
use qem_core::lie::JACOBI_TOL;
use qem_core::qe::{self, Geometry, IdentityReport, QEParameters, QEStructure, RigidityReport, RigidityVerdict};
use qem_core::warped::{classify_w, CATALOG};
use qem_core::{Execution, QemError};

use crate::config;
use crate::report::{matrix_value, Report, RigidityRecord};

/// Default tolerances; `--tol` (or `QEM_TOL`) replaces every one of them.
/// The rigidity split (1e-8 accept, 1e-6 reject) is separate and fixed.
pub mod defaults {
    /// Pointwise warped-product equation at sampled `r`.
    pub const WARPED_EQUATION: f64 = 1e-9;
    /// Left-invariant equation, Jacobi identity and `scal` identity of the family.
    pub const LIE_EQUATION: f64 = 1e-12;
    pub const JACOBI: f64 = 1e-14;
    /// Relative spread of `μ̄` and relative error of closed forms.
    pub const CLOSED_FORM: f64 = 1e-12;
    /// Trace identities and first Bianchi.
    pub const TRACE: f64 = 1e-12;
    /// Everything else.
    pub const IDENTITY: f64 = 1e-10;
    /// Sweep monotonicity slack.
    pub const MONOTONE: f64 = 1e-14;
}

pub const CATALOG_M: [f64; 4] = [1.5, 2.0, 3.0, 7.0];
pub const CATALOG_N: [usize; 3] = [3, 4, 5];

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tol(pub Option<f64>);

impl Tol {
    pub fn or(self, default: f64) -> f64 {
        self.0.unwrap_or(default)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandError {
    /// Bad input: exit 2.
    Config(String),
    /// Input accepted but unusable as a structure, with a partial report: exit 1.
    Verification(Box<Report>),
}

fn config_error(e: impl std::fmt::Display) -> CommandError {
    CommandError::Config(e.to_string())
}

/// Errors that say the data is not a valid structure (as opposed to malformed).
pub fn is_verification_error(e: &QemError) -> bool {
    matches!(
        e,
        QemError::Rejected(_) | QemError::Infeasible(_) | QemError::SelfCheck(_) | QemError::JacobiViolation { .. }
    )
}

/// Identity checks shared by every command. `radial_q` and `p_quadratic`
/// only hold on rigid structures, so they are checks when `rigid_expected`
/// and diagnostics otherwise.
fn identity_checks(r: &mut Report, label: &str, ids: &IdentityReport, lie: bool, rigid_expected: bool, tol: Tol) {
    let eq_tol = if lie { defaults::IDENTITY } else { defaults::WARPED_EQUATION };
    r.check_le("qe_residual", label, ids.qe_residual, tol.or(eq_tol));
    r.check_le("q_trace", label, ids.q_trace, tol.or(defaults::TRACE));
    r.check_le("trace_p", label, ids.trace_p, tol.or(defaults::TRACE));
    r.check_le("p_grad_w", label, ids.csw.p_grad, tol.or(defaults::IDENTITY));
    r.check_le("p_norm", label, ids.csw.p_norm, tol.or(defaults::IDENTITY));
    r.check_le("div_p", label, ids.csw.div_p, tol.or(defaults::IDENTITY));
    if let Some(d) = ids.deriv_p {
        r.check_le("deriv_p", label, d, tol.or(defaults::IDENTITY));
    }
    if let Some(d) = ids.dim3 {
        r.check_le("dim3_spectrum", label, d, tol.or(defaults::IDENTITY));
    }
    r.check_le("bianchi", label, ids.bianchi, tol.or(defaults::TRACE));
    r.check_le("scalar_bounds", label, ids.scalar_bounds, tol.or(defaults::IDENTITY));
    r.check_le("rho_range", label, ids.rho_range, tol.or(defaults::IDENTITY));
    if rigid_expected {
        r.check_le("radial_q_flatness", label, ids.radial_q, tol.or(defaults::IDENTITY));
        r.check_le("p_quadratic", label, ids.p_quadratic, tol.or(defaults::IDENTITY));
    } else {
        r.quantity("radial_q_flatness", ids.radial_q);
        r.quantity("p_quadratic", ids.p_quadratic);
    }
}

fn structure_quantities(r: &mut Report, s: &QEStructure) {
    r.quantity("kbar", s.kbar);
    r.quantity("mu_bar", s.mu_bar);
    r.quantity("mu", s.mu);
    r.quantity("w_form", classify_w(s.kbar, s.mu_bar).name());
}

// ---------------------------------------------------------------- catalog

struct CatalogOutcome {
    label: String,
    result: Result<(QEStructure, IdentityReport, RigidityReport, f64, f64), QemError>,
}

pub fn catalog_verify(samples: usize, tol: Tol, exec: Execution) -> Result<Report, CommandError> {
    if samples == 0 {
        return Err(CommandError::Config("--samples must be at least 1".into()));
    }
    let mut jobs = Vec::new();
    for row in CATALOG {
        for m in CATALOG_M {
            let dims: &[usize] = if row.is_one_dimensional() { &[1] } else { &CATALOG_N };
            for &n in dims {
                jobs.push((row, n, m));
            }
        }
    }
    let outcomes = exec.map(&jobs, |&(row, n, m)| CatalogOutcome {
        label: format!("row {} n={n} m={m}", row.index),
        result: (|| {
            let inst = row.instantiate(n, m)?;
            let s = qe::derive_structure_with(
                QEParameters::new(inst.n, m, inst.lambda)?,
                Geometry::Warped { model: inst.model, w: inst.w },
                samples,
            )?;
            let ids = qe::identity_suite(&s)?;
            let cert = qe::rigidity_certificate(&s, &qe::build_pq(&s))?;
            Ok((s, ids, cert, inst.mu, inst.rho))
        })(),
    });

    let mut r = Report::new("catalog-verify");
    r.input("m", CATALOG_M.to_vec());
    r.input("samples", samples as u64);
    if let Some(t) = tol.0 {
        r.input("tol", t);
    }
    r.quantity("instances", jobs.len() as u64);
    for o in outcomes {
        let label = o.label.as_str();
        let (s, ids, cert, mu, rho) = match o.result {
            Ok(v) => v,
            Err(e) => {
                r.check_failed("derive_structure", label, format!("{label}: {e}"));
                continue;
            }
        };
        r.check_le("mu_bar_spread", label, s.mu_bar_spread, tol.or(defaults::CLOSED_FORM));
        r.check_le("mu_closed_form", label, (s.mu - mu).abs() / (1.0 + mu.abs()), tol.or(defaults::CLOSED_FORM));
        r.check_le("rho_closed_form", label, (s.rho - rho).abs() / (1.0 + rho.abs()), tol.or(defaults::CLOSED_FORM));
        identity_checks(&mut r, label, &ids, false, true, tol);
        if let Some((p1, p2)) = cert.dim3_p12 {
            let gap = if s.params.lambda == 0.0 { 0.0 } else { (p1 - p2).abs() };
            r.check_le("dim3_p1_eq_p2", label, gap, tol.or(defaults::IDENTITY));
        }
        r.check_le("rigidity_off_spectrum", label, cert.off_spectrum, qe::RigidityTolerances::default().accept);
        if cert.verdict != RigidityVerdict::Rigid {
            r.check_failed("rigidity_verdict", label, format!("{label}: verdict {}", cert.verdict.name()));
        }
    }
    Ok(r)
}

// ---------------------------------------------------------------- solvable

pub fn solvable(m: f64, alpha: f64, beta: f64, tol: Tol) -> Result<Report, CommandError> {
    let params = FamilyParams::new(m, alpha, beta).map_err(config_error)?;
    let mut r = Report::new("solvable");
    r.input("m", m);
    r.input("alpha", alpha);
    r.input("beta", beta);
    if let Some(t) = tol.0 {
        r.input("tol", t);
    }
    let label = format!("m={m} alpha={alpha} beta={beta}");
    let built = match family::build(params) {
        Ok(b) => b,
        Err(e) if is_verification_error(&e) => {
            r.check_failed("build", &label, e.to_string());
            return Err(CommandError::Verification(Box::new(r)));
        }
        Err(e) => return Err(config_error(e)),
    };
    let v = family::verify(&built).map_err(config_error)?;

    r.quantity("lambda", built.lambda);
    r.quantity("rho", built.rho);
    r.quantity("z", built.z);
    r.quantity("z_squared", built.z * built.z);
    r.quantity("F", matrix_value(2, 2, |i, j| built.f[i][j]));
    r.quantity("scal", v.scal);
    r.quantity("ricci", matrix_value(4, 4, |i, j| v.ricci.get(i, j)));
    r.quantity("on_rigid_locus", params.on_rigid_locus);
    r.quantity("unimodularity_defect", v.unimodularity_defect);
    if let Some(s) = &built.qe {
        structure_quantities(&mut r, s);
    }

    r.check_le("left_invariant_equation", &label, v.qe_residual, tol.or(defaults::LIE_EQUATION));
    r.check_le("jacobi", &label, v.jacobi_residual, tol.or(defaults::JACOBI));
    r.check_le("scal_identity", &label, v.scal_residual, tol.or(defaults::LIE_EQUATION));
    match &v.identities {
        Some(ids) => identity_checks(&mut r, &label, ids, true, params.on_rigid_locus, tol),
        None => r.notes.push("identity suite skipped: rho is not determined by scal at m = 1".into()),
    }
    r.rigidity.push(RigidityRecord::new(label, &v.rigidity));
    Ok(r)
}

// ---------------------------------------------------------------- sweep

fn max_increase(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

pub fn sweep(alpha: f64, beta: f64, m_list: &[f64], tol: Tol, exec: Execution) -> Result<Report, CommandError> {
    for &m in m_list {
        FamilyParams::new(m, alpha, beta).map_err(config_error)?;
    }
    let sw = family::convergence_sweep(alpha, beta, m_list, exec).map_err(|e| match e {
        QemError::InvalidInput(msg) => CommandError::Config(msg),
        other => CommandError::Config(other.to_string()),
    })?;
    let mut r = Report::new("sweep");
    r.input("alpha", alpha);
    r.input("beta", beta);
    r.input("m", m_list.to_vec());
    if let Some(t) = tol.0 {
        r.input("tol", t);
    }
    r.quantity("m", sw.points.iter().map(|p| p.m).collect::<Vec<_>>());
    let f: Vec<f64> = sw.points.iter().map(|p| p.f_norm).collect();
    let z: Vec<f64> = sw.points.iter().map(|p| p.z_defect).collect();
    let ric: Vec<f64> = sw.points.iter().map(|p| p.ric_defect).collect();
    r.quantity("f_norm", f.clone());
    r.quantity("z_defect", z.clone());
    r.quantity("ric_defect", ric.clone());

    let lim = &sw.limit;
    let ric3 = lim.ricci().map_err(config_error)?;
    let soliton = lim.soliton_residual().map_err(config_error)?;
    let derivation = lim.derivation_residual().map_err(config_error)?;
    r.quantity("limit_lambda", lim.lambda);
    r.quantity("limit_ricci", matrix_value(3, 3, |i, j| ric3.get(i, j)));
    r.quantity("limit_einstein", lim.is_einstein().map_err(config_error)?);

    let label = format!("alpha={alpha} beta={beta}");
    r.check_le("f_norm_nonincreasing", &label, max_increase(&f), tol.or(defaults::MONOTONE));
    r.check_le("z_defect_nonincreasing", &label, max_increase(&z), tol.or(defaults::MONOTONE));
    r.check_le("ric_defect_nonincreasing", &label, max_increase(&ric), tol.or(defaults::MONOTONE));
    r.check_le("limit_soliton", &label, soliton.symmetric.max(soliton.antisymmetric), tol.or(defaults::LIE_EQUATION));
    r.check_le("limit_derivation", &label, derivation, tol.or(defaults::JACOBI));
    Ok(r)
}

// ---------------------------------------------------------------- check

pub fn check_text(text: &str, tol: Tol) -> Result<Report, CommandError> {
    let file = config::parse(text).map_err(config_error)?;
    if let Some(t) = file.tolerance {
        if t.is_nan() || t <= 0.0 || t.is_infinite() {
            return Err(CommandError::Config(format!("tolerance: must be positive and finite, got {t}")));
        }
    }
    if file.samples == Some(0) {
        return Err(CommandError::Config("samples: must be at least 1".into()));
    }
    let tol = Tol(tol.0.or(file.tolerance));
    let params = file.params().map_err(config_error)?;
    let geometry = file.geometry().map_err(config_error)?;

    let mut r = Report::new("check");
    r.input("n", file.n as u64);
    r.input("m", file.m);
    r.input("lambda", file.lambda);
    r.input("kind", if geometry.is_lie() { "lie" } else { "warped" });
    let label = format!("n={} m={} lambda={}", file.n, file.m, file.lambda);

    if let Geometry::Lie { algebra, .. } = &geometry {
        let jacobi = algebra.jacobi_residual();
        r.check_le("jacobi", &label, jacobi, JACOBI_TOL);
        if jacobi > JACOBI_TOL {
            r.notes.push("structure constants do not define a Lie algebra; nothing further is evaluated".into());
            return Err(CommandError::Verification(Box::new(r)));
        }
    }
    let lie = geometry.is_lie();
    let samples = file.samples.unwrap_or(qe::DEFAULT_SAMPLES);
    let s = match qe::derive_structure_with(params, geometry, samples) {
        Ok(s) => s,
        Err(e) if is_verification_error(&e) => {
            r.check_failed("derive_structure", &label, e.to_string());
            return Err(CommandError::Verification(Box::new(r)));
        }
        Err(e) => return Err(config_error(e)),
    };
    let ids = qe::identity_suite(&s).map_err(config_error)?;
    let cert = qe::rigidity_certificate(&s, &qe::build_pq(&s)).map_err(config_error)?;

    r.quantity("scal", s.scal);
    r.quantity("rho", s.rho);
    structure_quantities(&mut r, &s);
    if !lie {
        r.check_le("mu_bar_spread", &label, s.mu_bar_spread, tol.or(defaults::CLOSED_FORM));
    }
    identity_checks(&mut r, &label, &ids, lie, cert.verdict == RigidityVerdict::Rigid, tol);
    r.rigidity.push(RigidityRecord::new(label, &cert));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quantity(r: &Report, name: &str) -> f64 {
        r.get(name).and_then(|v| v.as_f64()).unwrap_or_else(|| panic!("{name} missing"))
    }

    #[test]
    fn golden_point() {
        let r = solvable(2.0, 0.0, 1.0, Tol(None)).unwrap();
        assert!(r.passed(), "{}", r.render_text());
        assert_eq!(quantity(&r, "lambda"), -6.0);
        assert!((quantity(&r, "rho") + 2.4).abs() < 1e-14);
        assert_eq!(r.rigidity[0].verdict, "non_rigid");
        assert_eq!(r.get("w_form").unwrap(), "exp");
    }

    #[test]
    fn rigid_point_checks_radial_flatness() {
        let r = solvable(3.0, 1.0, 1.0, Tol(None)).unwrap();
        assert!(r.passed(), "{}", r.render_text());
        assert_eq!(r.rigidity[0].verdict, "rigid");
        assert!(r.check("radial_q_flatness").is_some());
    }

    #[test]
    fn m_one_skips_the_suite() {
        let r = solvable(1.0, 0.0, 1.0, Tol(None)).unwrap();
        assert!(r.passed());
        assert!(r.check("q_trace").is_none());
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(solvable(2.0, 0.0, 0.0, Tol(None)), Err(CommandError::Config(_))));
        assert!(matches!(solvable(-1.0, 0.0, 1.0, Tol(None)), Err(CommandError::Config(_))));
        assert!(matches!(catalog_verify(0, Tol(None), Execution::Sequential), Err(CommandError::Config(_))));
        let ex = Execution::Sequential;
        assert!(matches!(sweep(0.0, 1.0, &[10.0, 1.0], Tol(None), ex), Err(CommandError::Config(_))));
        assert!(matches!(sweep(0.0, 1.0, &[], Tol(None), ex), Err(CommandError::Config(_))));
        assert!(matches!(check_text("", Tol(None)), Err(CommandError::Config(_))));
    }

    #[test]
    fn single_point_sweep_is_monotone() {
        let r = sweep(0.0, 1.0, &[5.0], Tol(None), Execution::Sequential).unwrap();
        assert!(r.passed(), "{}", r.render_text());
    }

    #[test]
    fn catalog_execution_modes_agree() {
        let a = catalog_verify(5, Tol(None), Execution::Sequential).unwrap();
        let b = catalog_verify(5, Tol(None), Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.passed(), "{}", a.render_text());
    }
}
