//! Cohomogeneity-one warped products `g = dr² + φ(r)² g_N` with closed-form
//! profiles, and the catalog of rigid Einstein examples.
//!
//! The fiber `N` is abstracted to its dimension and Einstein constant
//! `Ric_N = ρ_N g_N`. When a full curvature tensor is needed the fiber is taken
//! to be the space form with that Ricci constant; every identity evaluated here
//! only sees the fiber through its Ricci curvature, so the choice is harmless.
//!
//! Frames are `{∂r, E_1, …, E_d}` with `E_a` unit fiber directions, so the
//! total dimension is `n = d + 1`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;

use crate::error::{QemError, Result};
use crate::tensor::{CurvTensor4, SymTensor2, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    Constant,
    Linear,
    Exp,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 7] = [
        ProfileKind::Constant,
        ProfileKind::Linear,
        ProfileKind::Exp,
        ProfileKind::Sin,
        ProfileKind::Cos,
        ProfileKind::Sinh,
        ProfileKind::Cosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Constant => "constant",
            ProfileKind::Linear => "linear",
            ProfileKind::Exp => "exp",
            ProfileKind::Sin => "sin",
            ProfileKind::Cos => "cos",
            ProfileKind::Sinh => "sinh",
            ProfileKind::Cosh => "cosh",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// `a · kind(s · r)`; for `Constant` the value is `a` and `s` is ignored,
/// for `Linear` it is `a · s · r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub kind: ProfileKind,
    pub amplitude: f64,
    pub frequency: f64,
}

/// Value and first three derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Profile {
    pub fn new(kind: ProfileKind, amplitude: f64, frequency: f64) -> Self {
        Self { kind, amplitude, frequency }
    }

    pub fn constant(a: f64) -> Self {
        Self::new(ProfileKind::Constant, a, 0.0)
    }

    pub fn unit(kind: ProfileKind) -> Self {
        Self::new(kind, 1.0, 1.0)
    }

    /// The constant `φ′² − φ φ″`, exact for every kind. Curvature terms are
    /// written through it so that `κ − φ′²` never cancels near a zero of `φ`.
    pub fn first_integral(&self) -> f64 {
        let c = self.amplitude * self.frequency;
        match self.kind {
            ProfileKind::Constant | ProfileKind::Exp => 0.0,
            ProfileKind::Linear | ProfileKind::Sin | ProfileKind::Cos | ProfileKind::Sinh => c * c,
            ProfileKind::Cosh => -c * c,
        }
    }

    /// `(value, d1, d2)` at `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let j = self.jet(r);
        (j.value, j.d1, j.d2)
    }

    /// For the trigonometric and hyperbolic kinds `d2 = ±s²·value` exactly.
    pub fn jet(&self, r: f64) -> Jet {
        let (a, s) = (self.amplitude, self.frequency);
        let x = s * r;
        let s2 = s * s;
        match self.kind {
            ProfileKind::Constant => Jet { value: a, d1: 0.0, d2: 0.0, d3: 0.0 },
            ProfileKind::Linear => Jet { value: a * x, d1: a * s, d2: 0.0, d3: 0.0 },
            ProfileKind::Exp => {
                let v = a * x.exp();
                let d1 = s * v;
                Jet { value: v, d1, d2: s2 * v, d3: s2 * d1 }
            }
            ProfileKind::Sin => {
                let v = a * x.sin();
                let d1 = a * s * x.cos();
                Jet { value: v, d1, d2: -s2 * v, d3: -s2 * d1 }
            }
            ProfileKind::Cos => {
                let v = a * x.cos();
                let d1 = -a * s * x.sin();
                Jet { value: v, d1, d2: -s2 * v, d3: -s2 * d1 }
            }
            ProfileKind::Sinh => {
                let v = a * x.sinh();
                let d1 = a * s * x.cosh();
                Jet { value: v, d1, d2: s2 * v, d3: s2 * d1 }
            }
            ProfileKind::Cosh => {
                let v = a * x.cosh();
                let d1 = a * s * x.sinh();
                Jet { value: v, d1, d2: s2 * v, d3: s2 * d1 }
            }
        }
    }
}

/// Parameter interval; infinite ends are `±∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(QemError::invalid(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains_open(&self, r: f64) -> bool {
        r > self.lo && r < self.hi
    }

    /// `count` equispaced points strictly inside the interval.
    ///
    /// Finite ends are offset by `max(1e-3, 1e-3·length)`. A half-infinite
    /// interval is sampled on a window of length 10 starting at the offset
    /// finite end; the full line is sampled on `[−5, 5]`.
    pub fn samples(&self, count: usize) -> Vec<f64> {
        let (a, b) = match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => {
                let off = 1e-3_f64.max(1e-3 * (self.hi - self.lo));
                (self.lo + off, self.hi - off)
            }
            (true, false) => (self.lo + 1e-3, self.lo + 1e-3 + 10.0),
            (false, true) => (self.hi - 1e-3 - 10.0, self.hi - 1e-3),
            (false, false) => (-5.0, 5.0),
        };
        match count {
            0 => Vec::new(),
            1 => vec![0.5 * (a + b)],
            _ => (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect(),
        }
    }
}

/// `dr² + φ(r)² g_N` with `dim N = fiber_dim` and `Ric_N = fiber_einstein · g_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedProductModel {
    pub interval: Interval,
    pub fiber_dim: usize,
    pub fiber_einstein: f64,
    pub profile: Profile,
}

/// Warped-frame block values at a point: radial entry and the common
/// tangential entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blocks {
    pub radial: f64,
    pub tangential: f64,
}

impl WarpedProductModel {
    pub fn new(interval: Interval, fiber_dim: usize, fiber_einstein: f64, profile: Profile) -> Result<Self> {
        if fiber_dim + 1 > MAX_DIM {
            return Err(QemError::UnsupportedDimension(fiber_dim + 1));
        }
        if !fiber_einstein.is_finite() {
            return Err(QemError::invalid("fiber Einstein constant is not finite"));
        }
        if fiber_dim == 1 && fiber_einstein != 0.0 {
            return Err(QemError::invalid("a one-dimensional fiber is flat; its Einstein constant must be 0"));
        }
        if fiber_dim == 0 && fiber_einstein != 0.0 {
            return Err(QemError::invalid("fiber_dim = 0 has no fiber; its Einstein constant must be 0"));
        }
        Ok(Self { interval, fiber_dim, fiber_einstein, profile })
    }

    /// Total dimension `n = fiber_dim + 1`.
    pub fn dim(&self) -> usize {
        self.fiber_dim + 1
    }

    fn profile_at(&self, r: f64) -> Result<Jet> {
        if !self.interval.contains_open(r) {
            return Err(QemError::Domain(format!(
                "r = {r} is not strictly inside [{}, {}]",
                self.interval.lo, self.interval.hi
            )));
        }
        let jet = self.profile.jet(r);
        if self.fiber_dim > 0 && !(jet.value > 0.0) {
            return Err(QemError::Domain(format!("warping profile φ({r}) = {} is not positive", jet.value)));
        }
        Ok(jet)
    }

    /// Sectional curvature of fiber planes, `ρ_N/(d − 1)` (zero for `d ≤ 1`).
    fn fiber_sectional(&self) -> f64 {
        if self.fiber_dim >= 2 {
            self.fiber_einstein / (self.fiber_dim - 1) as f64
        } else {
            0.0
        }
    }

    /// Ricci blocks: `Ric(∂r,∂r) = −d φ″/φ`,
    /// `Ric(E,E) = ρ_N/φ² − φ″/φ − (d−1)(φ′/φ)² = (ρ_N − (d−1)I)/φ² − d φ″/φ`
    /// with `I = φ′² − φφ″`.
    pub fn ricci_blocks(&self, r: f64) -> Result<Blocks> {
        let j = self.profile_at(r)?;
        if self.fiber_dim == 0 {
            return Ok(Blocks { radial: 0.0, tangential: 0.0 });
        }
        let d = self.fiber_dim as f64;
        let phi = j.value;
        let radial = -d * j.d2 / phi;
        let excess = self.fiber_einstein - (d - 1.0) * self.profile.first_integral();
        let tangential = excess / (phi * phi) - d * j.d2 / phi;
        Ok(Blocks { radial, tangential })
    }

    /// `d/dr` of the two Ricci blocks (only used for divergence checks).
    pub fn ricci_blocks_derivative(&self, r: f64) -> Result<Blocks> {
        let j = self.profile_at(r)?;
        if self.fiber_dim == 0 {
            return Ok(Blocks { radial: 0.0, tangential: 0.0 });
        }
        let d = self.fiber_dim as f64;
        let (p, p1, p2, p3) = (j.value, j.d1, j.d2, j.d3);
        let radial = -d * (p3 * p - p2 * p1) / (p * p);
        let excess = self.fiber_einstein - (d - 1.0) * self.profile.first_integral();
        let tangential = -2.0 * excess * p1 / (p * p * p) - d * (p3 * p - p2 * p1) / (p * p);
        Ok(Blocks { radial, tangential })
    }

    pub fn ricci_at(&self, r: f64) -> Result<SymTensor2> {
        let b = self.ricci_blocks(r)?;
        SymTensor2::from_fn(self.dim(), |i, j| match (i, j) {
            (0, 0) => b.radial,
            (i, j) if i == j => b.tangential,
            _ => 0.0,
        })
    }

    pub fn scal_at(&self, r: f64) -> Result<f64> {
        let b = self.ricci_blocks(r)?;
        Ok(b.radial + self.fiber_dim as f64 * b.tangential)
    }

    /// Full curvature tensor: radial planes `−φ″/φ`, fiber planes
    /// `(κ − φ′²)/φ² = (κ − I)/φ² − φ″/φ` with `κ` the fiber sectional curvature.
    pub fn riemann_at(&self, r: f64) -> Result<CurvTensor4> {
        let j = self.profile_at(r)?;
        let n = self.dim();
        if self.fiber_dim == 0 {
            return CurvTensor4::zeros(1);
        }
        let radial = -j.d2 / j.value;
        let fiber = (self.fiber_sectional() - self.profile.first_integral()) / (j.value * j.value) + radial;
        let k = DMatrix::from_fn(n, n, |a, b| match (a, b) {
            (a, b) if a == b => 0.0,
            (0, _) | (_, 0) => radial,
            _ => fiber,
        });
        CurvTensor4::from_plane_curvatures(&k)
    }

    /// `Hess w` blocks for `w = w(r)`: `w″` radially and `w′φ′/φ` on the fiber.
    pub fn hessian_blocks(&self, w: &Profile, r: f64) -> Result<Blocks> {
        let j = self.profile_at(r)?;
        let (_, w1, w2) = w.eval(r);
        let tangential = if self.fiber_dim == 0 { 0.0 } else { w1 * j.d1 / j.value };
        Ok(Blocks { radial: w2, tangential })
    }

    /// Mean curvature `φ′/φ` of the level sets, per fiber direction.
    pub fn shape_operator(&self, r: f64) -> Result<f64> {
        let j = self.profile_at(r)?;
        Ok(if self.fiber_dim == 0 { 0.0 } else { j.d1 / j.value })
    }
}

/// `‖Hess w − (w/m)(Ric − λg)‖_∞` over the block components at `r`.
pub fn qe_residual_at(model: &WarpedProductModel, w: &Profile, n: usize, m: f64, lambda: f64, r: f64) -> Result<f64> {
    if n != model.dim() {
        return Err(QemError::DimensionMismatch { expected: model.dim(), found: n });
    }
    if !(m > 0.0) {
        return Err(QemError::invalid(format!("m must be positive, got {m}")));
    }
    let ric = model.ricci_blocks(r)?;
    let hess = model.hessian_blocks(w, r)?;
    let (wv, _, _) = w.eval(r);
    let c = wv / m;
    let radial = (hess.radial - c * (ric.radial - lambda)).abs();
    if model.fiber_dim == 0 {
        return Ok(radial);
    }
    let tangential = (hess.tangential - c * (ric.tangential - lambda)).abs();
    Ok(radial.max(tangential))
}

/// `μ̄ = k̄ w² + |∇w|²` at `r`.
pub fn mu_bar_at(w: &Profile, kbar: f64, r: f64) -> f64 {
    let (v, d1, _) = w.eval(r);
    kbar * v * v + d1 * d1
}

/// Admissible shape of `w` for given `(k̄, μ̄)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WForm {
    Cos,
    Linear,
    Exp,
    Cosh,
    Sinh,
    Constant,
    Infeasible,
}

impl WForm {
    pub fn name(self) -> &'static str {
        match self {
            WForm::Cos => "cos",
            WForm::Linear => "linear",
            WForm::Exp => "exp",
            WForm::Cosh => "cosh",
            WForm::Sinh => "sinh",
            WForm::Constant => "constant",
            WForm::Infeasible => "infeasible",
        }
    }
}

/// Zero threshold used by [`classify_w`].
pub const CLASSIFY_ZERO_TOL: f64 = 1e-10;

/// Case table for `k̄ w² + |∇w|² = μ̄`:
///
/// | k̄  | μ̄  | w      |
/// |----|----|--------|
/// | >0 | >0 | cos    |
/// | 0  | >0 | linear |
/// | 0  | 0  | const  |
/// | <0 | 0  | exp    |
/// | <0 | <0 | cosh   |
/// | <0 | >0 | sinh   |
///
/// Everything else (`k̄ > 0` with `μ̄ ≤ 0`, `k̄ = 0` with `μ̄ < 0`) cannot
/// arise from a real `w` and is reported as infeasible. Values within
/// [`CLASSIFY_ZERO_TOL`] of zero count as zero.
pub fn classify_w(kbar: f64, mu_bar: f64) -> WForm {
    let sign = |x: f64| {
        if x.abs() <= CLASSIFY_ZERO_TOL {
            0
        } else if x > 0.0 {
            1
        } else {
            -1
        }
    };
    match (sign(kbar), sign(mu_bar)) {
        (1, 1) => WForm::Cos,
        (1, _) => WForm::Infeasible,
        (0, 1) => WForm::Linear,
        (0, 0) => WForm::Constant,
        (0, _) => WForm::Infeasible,
        (_, 0) => WForm::Exp,
        (_, -1) => WForm::Cosh,
        _ => WForm::Sinh,
    }
}

/// One row of the catalog of non-trivial quasi-Einstein manifolds that are
/// also Einstein. Rows 1–5 are one-dimensional; rows 6–10 are parameterised
/// by the dimension `n ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogRow {
    pub index: usize,
    pub name: &'static str,
}

/// A catalog row evaluated at concrete `(n, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogInstance {
    pub row: CatalogRow,
    pub model: WarpedProductModel,
    pub w: Profile,
    pub n: usize,
    pub m: f64,
    pub lambda: f64,
    pub rho: f64,
    pub mu: f64,
}

pub const CATALOG: [CatalogRow; 10] = [
    CatalogRow { index: 1, name: "[-pi/2,pi/2], w=cos" },
    CatalogRow { index: 2, name: "[0,inf), w=r" },
    CatalogRow { index: 3, name: "[0,inf), w=sinh" },
    CatalogRow { index: 4, name: "(-inf,inf), w=exp" },
    CatalogRow { index: 5, name: "(-inf,inf), w=cosh" },
    CatalogRow { index: 6, name: "D^n, dr^2+sin^2 g_S" },
    CatalogRow { index: 7, name: "[0,inf)xF, dr^2+g_F" },
    CatalogRow { index: 8, name: "[0,inf)xN, dr^2+cosh^2 g_N" },
    CatalogRow { index: 9, name: "(-inf,inf)xF, dr^2+e^2r g_F" },
    CatalogRow { index: 10, name: "H^n, dr^2+sinh^2 g_S" },
];

pub fn catalog() -> Vec<CatalogRow> {
    CATALOG.to_vec()
}

impl CatalogRow {
    pub fn is_one_dimensional(&self) -> bool {
        self.index <= 5
    }

    /// Substitutes `(n, m)`. Rows 1–5 ignore `n` (they are one-dimensional).
    pub fn instantiate(&self, n: usize, m: f64) -> Result<CatalogInstance> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(QemError::invalid(format!("m must be positive, got {m}")));
        }
        let inf = f64::INFINITY;
        let nf = n as f64;
        let unit = Profile::unit;
        let one = Profile::constant(1.0);
        let (interval, fiber_dim, rho_n, phi, w, lambda, rho, mu) = if self.is_one_dimensional() {
            let (interval, w, lambda, mu) = match self.index {
                1 => (Interval::new(-FRAC_PI_2, FRAC_PI_2)?, unit(ProfileKind::Cos), m, m - 1.0),
                2 => (Interval::new(0.0, inf)?, unit(ProfileKind::Linear), 0.0, m - 1.0),
                3 => (Interval::new(0.0, inf)?, unit(ProfileKind::Sinh), -m, m - 1.0),
                4 => (Interval::new(-inf, inf)?, unit(ProfileKind::Exp), -m, 0.0),
                _ => (Interval::new(-inf, inf)?, unit(ProfileKind::Cosh), -m, -(m - 1.0)),
            };
            (interval, 0, 0.0, one, w, lambda, 0.0, mu)
        } else {
            if !(2..=MAX_DIM).contains(&n) {
                return Err(QemError::invalid(format!("row {} needs 2 <= n <= {MAX_DIM}, got {n}", self.index)));
            }
            let top = -(nf + m - 1.0);
            match self.index {
                6 => (
                    Interval::new(0.0, FRAC_PI_2)?,
                    n - 1,
                    nf - 2.0,
                    unit(ProfileKind::Sin),
                    unit(ProfileKind::Cos),
                    nf + m - 1.0,
                    nf - 1.0,
                    m - 1.0,
                ),
                7 => (Interval::new(0.0, inf)?, n - 1, 0.0, one, unit(ProfileKind::Linear), 0.0, 0.0, m - 1.0),
                8 => (
                    Interval::new(0.0, inf)?,
                    n - 1,
                    -(nf - 2.0),
                    unit(ProfileKind::Cosh),
                    unit(ProfileKind::Sinh),
                    top,
                    -(nf - 1.0),
                    m - 1.0,
                ),
                9 => (
                    Interval::new(-inf, inf)?,
                    n - 1,
                    0.0,
                    unit(ProfileKind::Exp),
                    unit(ProfileKind::Exp),
                    top,
                    -(nf - 1.0),
                    0.0,
                ),
                _ => (
                    Interval::new(0.0, inf)?,
                    n - 1,
                    nf - 2.0,
                    unit(ProfileKind::Sinh),
                    unit(ProfileKind::Cosh),
                    top,
                    -(nf - 1.0),
                    -(m - 1.0),
                ),
            }
        };
        let model = WarpedProductModel::new(interval, fiber_dim, rho_n, phi)?;
        Ok(CatalogInstance { row: *self, n: model.dim(), model, w, m, lambda, rho, mu })
    }
}

/// Rigid product `I × L` of a one-dimensional catalog row (index 1–5) with a
/// trivial `λ`-Einstein factor `L` of dimension `n − 1`, modelled as a
/// warped product with constant warping. Here `ρ = 0` and
/// `Ric = diag(0, λ, …, λ)`.
pub fn product_instance(row_index: usize, n: usize, m: f64) -> Result<CatalogInstance> {
    let row = CATALOG
        .iter()
        .find(|r| r.index == row_index && r.is_one_dimensional())
        .ok_or_else(|| QemError::invalid(format!("product models use rows 1-5, got {row_index}")))?;
    if !(2..=MAX_DIM).contains(&n) {
        return Err(QemError::invalid(format!("product model needs 2 <= n <= {MAX_DIM}, got {n}")));
    }
    let base = row.instantiate(1, m)?;
    let model = WarpedProductModel::new(base.model.interval, n - 1, base.lambda, Profile::constant(1.0))?;
    Ok(CatalogInstance { model, n, ..base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn disc_row_is_einstein() {
        let inst = CATALOG[5].instantiate(3, 2.0).unwrap();
        assert_eq!(inst.model.fiber_einstein, 1.0);
        let ric = inst.model.ricci_at(FRAC_PI_4).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(ric.get(i, i), 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn hyperbolic_fiber_row_is_einstein() {
        for n in 3..=5 {
            let inst = CATALOG[7].instantiate(n, 2.0).unwrap();
            for r in inst.model.interval.samples(7) {
                let ric = inst.model.ricci_at(r).unwrap();
                for i in 0..n {
                    assert_abs_diff_eq!(ric.get(i, i), -((n - 1) as f64), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn one_dimensional_ricci_is_zero() {
        let model =
            WarpedProductModel::new(Interval::new(0.0, 1.0).unwrap(), 0, 0.0, Profile::unit(ProfileKind::Exp)).unwrap();
        assert_eq!(model.ricci_at(0.5).unwrap(), SymTensor2::zeros(1).unwrap());
    }

    #[test]
    fn domain_errors() {
        let inst = CATALOG[5].instantiate(3, 2.0).unwrap();
        assert!(matches!(inst.model.ricci_at(0.0), Err(QemError::Domain(_))));
        assert!(matches!(inst.model.ricci_at(2.0), Err(QemError::Domain(_))));
        let bad = WarpedProductModel::new(Interval::new(-1.0, 1.0).unwrap(), 2, 1.0, Profile::unit(ProfileKind::Sin))
            .unwrap();
        assert!(matches!(bad.ricci_at(-0.5), Err(QemError::Domain(_))));
    }

    #[test]
    fn first_integral_is_constant() {
        for kind in ProfileKind::ALL {
            let p = Profile::new(kind, 1.3, 0.7);
            for r in [0.2, 0.9, 1.6] {
                let j = p.jet(r);
                assert_abs_diff_eq!(j.d1 * j.d1 - j.value * j.d2, p.first_integral(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn qe_residual_on_einstein_rows() {
        let disc = CATALOG[5].instantiate(3, 2.0).unwrap();
        assert_eq!(disc.lambda, 4.0);
        for r in disc.model.interval.samples(20) {
            assert!(qe_residual_at(&disc.model, &disc.w, 3, 2.0, 4.0, r).unwrap() < 1e-12);
        }
        let hyp = CATALOG[7].instantiate(3, 2.0).unwrap();
        for r in hyp.model.interval.samples(20) {
            // rounding scales with w, which reaches sinh(10) in this window
            let scale = 1.0 + hyp.w.eval(r).0.abs();
            assert!(qe_residual_at(&hyp.model, &hyp.w, 3, 2.0, hyp.lambda, r).unwrap() < 1e-14 * scale);
        }
    }

    #[test]
    fn qe_residual_with_wrong_lambda() {
        let disc = CATALOG[5].instantiate(3, 2.0).unwrap();
        for r in disc.model.interval.samples(20) {
            let res = qe_residual_at(&disc.model, &disc.w, 3, 2.0, 0.0, r).unwrap();
            let bound = (3.0 + 2.0 - 1.0) / 2.0 * r.cos().abs();
            assert!(res >= bound * (1.0 - 1e-12) && res > 0.0);
        }
        assert!(qe_residual_at(&disc.model, &disc.w, 4, 2.0, 4.0, 0.5).is_err());
    }

    #[test]
    fn mu_bar_examples() {
        for r in [-1.3, 0.0, 0.4, 2.0] {
            assert_abs_diff_eq!(mu_bar_at(&Profile::unit(ProfileKind::Cos), 1.0, r), 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(mu_bar_at(&Profile::unit(ProfileKind::Exp), -1.0, r), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(mu_bar_at(&Profile::unit(ProfileKind::Sinh), -1.0, r), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn classify_cases() {
        assert_eq!(classify_w(1.0, 1.0), WForm::Cos);
        assert_eq!(classify_w(-1.0, 0.0), WForm::Exp);
        assert_eq!(classify_w(0.0, 0.0), WForm::Constant);
        assert_eq!(classify_w(0.0, 2.0), WForm::Linear);
        assert_eq!(classify_w(-1.0, -1.0), WForm::Cosh);
        assert_eq!(classify_w(-1.0, 1.0), WForm::Sinh);
        assert_eq!(classify_w(1.0, 0.0), WForm::Infeasible);
        assert_eq!(classify_w(1.0, -3.0), WForm::Infeasible);
        assert_eq!(classify_w(0.0, -1.0), WForm::Infeasible);
    }

    #[test]
    fn catalog_instantiation() {
        let r1 = CATALOG[0].instantiate(1, 3.0).unwrap();
        assert_eq!(r1.model.interval, Interval::new(-FRAC_PI_2, FRAC_PI_2).unwrap());
        assert_eq!(r1.w.kind, ProfileKind::Cos);
        assert_eq!((r1.lambda, r1.rho, r1.mu), (3.0, 0.0, 2.0));
        let r9 = CATALOG[8].instantiate(4, 2.0).unwrap();
        assert_eq!((r9.lambda, r9.rho, r9.mu), (-5.0, -3.0, 0.0));
        for m in [1.5, 2.0, 7.0] {
            let r2 = CATALOG[1].instantiate(1, m).unwrap();
            assert_eq!(r2.w.kind, ProfileKind::Linear);
            assert_eq!((r2.lambda, r2.rho, r2.mu), (0.0, 0.0, m - 1.0));
        }
        assert!(CATALOG[5].instantiate(1, 2.0).is_err());
        assert!(CATALOG[5].instantiate(3, 0.0).is_err());
    }

    #[test]
    fn profile_second_derivative_is_exact_multiple() {
        let s = 1.7;
        for kind in [ProfileKind::Sin, ProfileKind::Cos] {
            let (v, _, d2) = Profile::new(kind, 0.8, s).eval(0.3);
            assert_eq!(d2, -s * s * v);
        }
        for kind in [ProfileKind::Sinh, ProfileKind::Cosh, ProfileKind::Exp] {
            let (v, _, d2) = Profile::new(kind, 0.8, s).eval(0.3);
            assert_eq!(d2, s * s * v);
        }
    }

    #[test]
    fn sampling_windows() {
        let half = Interval::new(0.0, f64::INFINITY).unwrap().samples(20);
        assert_eq!(half.len(), 20);
        assert_abs_diff_eq!(half[0], 1e-3);
        assert_abs_diff_eq!(half[19], 10.001, epsilon = 1e-12);
        let full = Interval::new(f64::NEG_INFINITY, f64::INFINITY).unwrap().samples(3);
        assert_eq!(full, vec![-5.0, 0.0, 5.0]);
        let fin = Interval::new(0.0, 10.0).unwrap().samples(2);
        assert_eq!(fin, vec![0.01, 9.99]);
        assert!(Interval::new(1.0, 1.0).is_err());
    }

    #[test]
    fn product_model_blocks() {
        let p = product_instance(1, 3, 2.0).unwrap();
        let ric = p.model.ricci_at(0.2).unwrap();
        assert_eq!(ric, SymTensor2::diag(&[0.0, 2.0, 2.0]).unwrap());
        assert!(product_instance(6, 3, 2.0).is_err());
        // λ ≠ 0 needs a fiber of dimension ≥ 2
        assert!(product_instance(1, 2, 2.0).is_err());
        assert!(product_instance(2, 2, 2.0).is_ok());
    }
}
