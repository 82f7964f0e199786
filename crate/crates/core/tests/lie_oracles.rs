//! Curvature of left-invariant metrics checked against formulas that do not
//! go through the Levi-Civita coefficients: the bracket formula for Ricci
//! (Besse 7.38), the Cheeger–Ebin sectional-curvature formula, and the
//! closed-form Ricci polynomials of the solvable family.

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use qem_core::family::{self, FamilyParams};
use qem_core::{LieAlgebraMetric, Vector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn basis(n: usize, i: usize) -> Vector {
    Vector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
}

fn ad_matrix(g: &LieAlgebraMetric, x: &Vector) -> DMatrix<f64> {
    let n = g.dim();
    DMatrix::from_fn(n, n, |row, col| g.bracket(x, &basis(n, col))[row])
}

/// `Ric(X,X) = −½Σ|[X,E_i]|² − ½B(X,X) + ¼Σ_{ij} g([E_i,E_j],X)² − g([H,X],X)`
/// with `B` the Killing form and `g(H,X) = tr ad_X`.
fn besse_ricci_quadratic(g: &LieAlgebraMetric, x: &Vector) -> f64 {
    let n = g.dim();
    let adx = ad_matrix(g, x);
    let killing = (&adx * &adx).trace();
    let h = Vector::from_fn(n, |i, _| ad_matrix(g, &basis(n, i)).trace());
    let mut total = -0.5 * killing - g.bracket(&h, x).dot(x);
    for i in 0..n {
        total -= 0.5 * g.bracket(x, &basis(n, i)).norm_squared();
        for j in 0..n {
            total += 0.25 * g.bracket(&basis(n, i), &basis(n, j)).dot(x).powi(2);
        }
    }
    total
}

fn besse_ricci(g: &LieAlgebraMetric) -> DMatrix<f64> {
    let n = g.dim();
    DMatrix::from_fn(n, n, |i, j| {
        let (ei, ej) = (basis(n, i), basis(n, j));
        (besse_ricci_quadratic(g, &(&ei + &ej)) - besse_ricci_quadratic(g, &(&ei - &ej))) / 4.0
    })
}

/// Cheeger–Ebin: for orthonormal `u, v`,
/// `K = −¾|[u,v]|² − ½g([u,[u,v]],v) − ½g([v,[v,u]],u) + |U(u,v)|² − g(U(u,u),U(v,v))`
/// with `g(U(x,y),z) = ½(g([z,x],y) + g(x,[z,y]))`.
fn cheeger_ebin(g: &LieAlgebraMetric, u: &Vector, v: &Vector) -> f64 {
    let n = g.dim();
    let big_u = |x: &Vector, y: &Vector| {
        Vector::from_fn(n, |k, _| {
            let z = basis(n, k);
            0.5 * (g.bracket(&z, x).dot(y) + x.dot(&g.bracket(&z, y)))
        })
    };
    let uv = g.bracket(u, v);
    -0.75 * uv.norm_squared() - 0.5 * g.bracket(u, &uv).dot(v) - 0.5 * g.bracket(v, &g.bracket(v, u)).dot(u)
        + big_u(u, v).norm_squared()
        - big_u(u, u).dot(&big_u(v, v))
}

/// `ℝ ⋉_A ℝ^k`: `[X₀, X_i] = Σ_j A[j][i] X_j`.
fn semidirect(a: &DMatrix<f64>) -> LieAlgebraMetric {
    let k = a.nrows();
    LieAlgebraMetric::from_fn(k + 1, |i, j, l| if i == 0 && l > 0 { a[(l - 1, j - 1)] } else { 0.0 }).unwrap()
}

/// `ℝ² ⋉ ℝ^k` acting by `A` and `A² − A` (commuting, so Jacobi holds).
fn double_semidirect(a: &DMatrix<f64>) -> LieAlgebraMetric {
    let k = a.nrows();
    let b = a * a - a;
    LieAlgebraMetric::from_fn(k + 2, |i, j, l| match (i, j, l) {
        (0, 1, _) => 0.0,
        (0, j, l) if l >= 2 => a[(l - 2, j - 2)],
        (1, j, l) if j >= 2 && l >= 2 => b[(l - 2, j - 2)],
        _ => 0.0,
    })
    .unwrap()
}

fn heisenberg() -> LieAlgebraMetric {
    LieAlgebraMetric::from_triples(3, &[(0, 1, 2, 1.0)]).unwrap()
}

fn su2(scale: f64) -> LieAlgebraMetric {
    LieAlgebraMetric::from_triples(3, &[(0, 1, 2, scale), (1, 2, 0, scale), (2, 0, 1, scale)]).unwrap()
}

fn random_matrix(rng: &mut StdRng, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.5..1.5))
}

fn test_algebras() -> Vec<LieAlgebraMetric> {
    let mut rng = StdRng::seed_from_u64(0x0051_ab1e);
    let mut out = vec![heisenberg(), su2(1.0), su2(0.7)];
    for k in 2..=4 {
        for _ in 0..4 {
            out.push(semidirect(&random_matrix(&mut rng, k)));
        }
    }
    for k in 2..=3 {
        for _ in 0..3 {
            out.push(double_semidirect(&random_matrix(&mut rng, k)));
        }
    }
    for (m, a, b) in [(2.0, 0.0, 1.0), (3.0, 1.0, 1.0), (0.5, -1.3, 0.4), (7.0, 2.2, -1.7)] {
        out.push(family::build(FamilyParams::new(m, a, b).unwrap()).unwrap().algebra);
    }
    out
}

#[test]
fn test_algebras_satisfy_jacobi() {
    for g in test_algebras() {
        assert!(g.jacobi_residual() < 1e-13, "{:?}", g.triples());
    }
}

#[test]
fn ricci_matches_bracket_formula() {
    for g in test_algebras() {
        let ric = g.curvature().unwrap().ricci.clone();
        let oracle = besse_ricci(&g);
        let scale = 1.0 + oracle.amax();
        let diff = (ric.matrix() - &oracle).amax();
        assert!(diff < 1e-12 * scale, "diff {diff:.3e} for {:?}", g.triples());
    }
}

#[test]
fn sectional_curvature_matches_cheeger_ebin() {
    let mut rng = StdRng::seed_from_u64(7);
    for g in test_algebras() {
        let n = g.dim();
        let riem = &g.curvature().unwrap().riemann;
        for _ in 0..6 {
            let a = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let b = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let u = a.normalize();
            let v = (&b - &u * u.dot(&b)).normalize();
            let got = riem.eval(&u, &v, &v, &u);
            let want = cheeger_ebin(&g, &u, &v);
            assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()), "{got} vs {want}");
        }
    }
}

#[test]
fn known_small_algebras() {
    let h = heisenberg().curvature().unwrap().clone();
    assert_eq!(h.ricci.matrix().diagonal().as_slice(), &[-0.5, -0.5, 0.5]);
    assert_abs_diff_eq!(h.scal, -0.5, epsilon = 1e-15);

    // hyperbolic space as ℝ ⋉_I ℝ^k: Einstein with constant −k
    let hyp = semidirect(&DMatrix::identity(3, 3));
    let c = hyp.curvature().unwrap();
    assert!((c.ricci.matrix() + DMatrix::<f64>::identity(4, 4) * 3.0).amax() < 1e-14);
    assert!(hyp.unimodularity_defect() > 0.0);
}

/// Ricci components as displayed for the family, in terms of `z = F₃₂/β`.
fn closed_form_ricci(alpha: f64, beta: f64, z: f64) -> [f64; 5] {
    let (a, b, z2) = (alpha, beta, z * z);
    let (a2, a3, a4, b2, b4) = (a * a, a * a * a, a.powi(4), b * b, b.powi(4));
    let r00 = -2.0 * z2 * (2.0 - 4.0 * a3 + a4 + 3.0 * b2 + b4 - 2.0 * a * (3.0 + 2.0 * b2) + a2 * (7.0 + 2.0 * b2));
    let r11 = -2.0 * (2.0 - 2.0 * a + a2 + b2);
    let r22 =
        -2.0 * a - 2.0 * z2 * (2.0 - 5.0 * a3 + a4 + 3.0 * b2 + b4 + a2 * (9.0 + 2.0 * b2) - a * (7.0 + 5.0 * b2));
    let r23 = b * (-2.0 + 2.0 * z2 * (1.0 - 2.0 * a + a2 + b2));
    let r33 = -2.0 * (2.0 - a) - 2.0 * z2 * (-3.0 * a3 + a4 + b2 + b4 + a2 * (3.0 + 2.0 * b2) - a * (1.0 + 3.0 * b2));
    [r00, r11, r22, r23, r33]
}

#[test]
fn family_ricci_matches_closed_form() {
    for m in [0.5, 1.0, 2.0, 3.0, 10.0] {
        for alpha in [-1.0, 0.0, 0.5, 1.0, 2.5] {
            for beta in [-2.0, -0.5, 0.3, 1.0, 1.7] {
                let r = family::build(FamilyParams::new(m, alpha, beta).unwrap()).unwrap();
                let ric = &r.algebra.curvature().unwrap().ricci;
                let [r00, r11, r22, r23, r33] = closed_form_ricci(alpha, beta, r.z);
                let tol = 1e-12 * (1.0 + r11.abs());
                assert_abs_diff_eq!(ric.get(0, 0), r00, epsilon = tol);
                assert_abs_diff_eq!(ric.get(0, 0), r.rho, epsilon = tol);
                assert_abs_diff_eq!(ric.get(1, 1), r11, epsilon = tol);
                assert_abs_diff_eq!(ric.get(2, 2), r22, epsilon = tol);
                assert_abs_diff_eq!(ric.get(2, 3), r23, epsilon = tol);
                assert_abs_diff_eq!(ric.get(3, 3), r33, epsilon = tol);
                for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)] {
                    assert_abs_diff_eq!(ric.get(i, j), 0.0, epsilon = tol);
                }
            }
        }
    }
}

#[test]
fn rigid_locus_ricci_block() {
    for m in [0.5, 2.0, 3.0, 9.0] {
        for theta in [0.3_f64, 1.0, 2.0, -1.2] {
            let (alpha, beta) = (1.0 + theta.cos(), theta.sin());
            let r = family::build(FamilyParams::new(m, alpha, beta).unwrap()).unwrap();
            let ric = &r.algebra.curvature().unwrap().ricci;
            let k = 2.0 * m / (m + 1.0);
            assert_abs_diff_eq!(r.lambda, -4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.rho, -4.0 / (m + 1.0), epsilon = 1e-12);
            assert_abs_diff_eq!(ric.get(2, 2), -4.0 + k * (2.0 - alpha), epsilon = 1e-12);
            assert_abs_diff_eq!(ric.get(2, 3), -k * beta, epsilon = 1e-12);
            assert_abs_diff_eq!(ric.get(3, 3), -4.0 + k * alpha, epsilon = 1e-12);
        }
    }
}

#[test]
fn connection_is_metric_and_torsion_free() {
    for g in test_algebras() {
        let conn = g.levi_civita().unwrap();
        assert!(conn.metric_defect() < 1e-15);
        assert!(conn.torsion_defect(&g) < 1e-14);
    }
}

#[test]
fn family_connection_on_x0() {
    // g(∇_{X₂}X₀, X₂) = −F₂₂ and g(∇_{X₂}X₀, X₃) = −½(F₂₃+F₃₂)
    let r = family::build(FamilyParams::new(2.0, 0.0, 1.0).unwrap()).unwrap();
    let conn = r.algebra.levi_civita().unwrap();
    let v = conn.nabla(2, 0);
    assert_abs_diff_eq!(v[2], -r.f[0][0], epsilon = 1e-15);
    assert_abs_diff_eq!(v[3], -0.5 * (r.f[0][1] + r.f[1][0]), epsilon = 1e-15);
}
