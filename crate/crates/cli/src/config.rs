//! Input schema of `qem check FILE`. See `docs/check-file.md`.

use qem_core::{Interval, LieAlgebraMetric, Profile, ProfileKind, Vector, WarpedProductModel};
use serde::Deserialize;

use qem_core::qe::{Geometry, QEParameters};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckFile {
    pub n: usize,
    pub m: f64,
    pub lambda: f64,
    pub geometry: GeometrySpec,
    /// Warped models only; defaults to 20.
    #[serde(default)]
    pub samples: Option<usize>,
    /// Overrides the identity tolerance (but not `--tol`).
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometrySpec {
    Lie {
        /// `[i, j, k, c]` meaning `g([X_i, X_j], X_k) = c`.
        brackets: Vec<(usize, usize, usize, f64)>,
        /// Direction of `∇w` in the orthonormal frame.
        radial: Vec<f64>,
    },
    Warped {
        /// `[lo, hi]`, with `null` for an infinite end.
        interval: (Option<f64>, Option<f64>),
        fiber_dim: usize,
        fiber_einstein: f64,
        profile: ProfileSpec,
        w: ProfileSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: String,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub frequency: f64,
}

fn one() -> f64 {
    1.0
}

/// A schema-valid file that still does not describe a usable structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl ProfileSpec {
    fn to_profile(&self, field: &str) -> Result<Profile, ConfigError> {
        let kind = ProfileKind::parse(&self.kind).ok_or_else(|| {
            let names: Vec<&str> = ProfileKind::ALL.iter().map(|k| k.name()).collect();
            ConfigError(format!("{field}.kind: unknown profile `{}`, expected one of {}", self.kind, names.join(", ")))
        })?;
        if !self.amplitude.is_finite() || !self.frequency.is_finite() {
            return Err(ConfigError(format!("{field}: amplitude and frequency must be finite")));
        }
        Ok(Profile::new(kind, self.amplitude, self.frequency))
    }
}

pub fn parse(text: &str) -> Result<CheckFile, ConfigError> {
    if text.trim().is_empty() {
        return Err(ConfigError("file is empty".into()));
    }
    serde_json::from_str(text).map_err(|e| ConfigError(format!("schema error: {e}")))
}

impl CheckFile {
    pub fn params(&self) -> Result<QEParameters, ConfigError> {
        QEParameters::new(self.n, self.m, self.lambda).map_err(|e| ConfigError(format!("parameters: {e}")))
    }

    pub fn geometry(&self) -> Result<Geometry, ConfigError> {
        match &self.geometry {
            GeometrySpec::Lie { brackets, radial } => {
                let algebra = LieAlgebraMetric::from_triples(self.n, brackets)
                    .map_err(|e| ConfigError(format!("geometry.brackets: {e}")))?;
                if radial.len() != self.n {
                    return Err(ConfigError(format!(
                        "geometry.radial: expected {} components, got {}",
                        self.n,
                        radial.len()
                    )));
                }
                Ok(Geometry::Lie { algebra, radial: Vector::from_column_slice(radial) })
            }
            GeometrySpec::Warped { interval, fiber_dim, fiber_einstein, profile, w } => {
                let lo = interval.0.unwrap_or(f64::NEG_INFINITY);
                let hi = interval.1.unwrap_or(f64::INFINITY);
                let iv = Interval::new(lo, hi).map_err(|e| ConfigError(format!("geometry.interval: {e}")))?;
                let model =
                    WarpedProductModel::new(iv, *fiber_dim, *fiber_einstein, profile.to_profile("geometry.profile")?)
                        .map_err(|e| ConfigError(format!("geometry: {e}")))?;
                Ok(Geometry::Warped { model, w: w.to_profile("geometry.w")? })
            }
        }
    }
}
