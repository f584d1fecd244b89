use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_weights, DirectionGrid, SupportFunction};
use crate::error::{Error, Result};

/// Default rounding radius of polygons, relative to their circumradius.
pub const DEFAULT_POLYGON_ROUNDING: f64 = 0.05;

/// Composable description of a planar convex body.
///
/// Serialized as an externally tagged JSON document, e.g.
/// `{"disk":{"R":1}}`, `{"ellipse":{"a":2,"b":1}}`,
/// `{"regular_ngon":{"n":4,"circumradius":1}}`,
/// `{"minkowski_combo":[[0.5,{"disk":{"R":1}}],[0.5,{"disk":{"R":3}}]]}`,
/// `{"rotated":{"phi":0.3,"body":{...}}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Disk {
        #[serde(rename = "R")]
        radius: f64,
    },
    /// Semi-axis `a` along x, `b` along y.
    Ellipse { a: f64, b: f64 },
    /// Regular polygon with a vertex on the positive x-axis, replaced by its
    /// Minkowski sum with a disk of radius `smoothing` (default
    /// `0.05 · circumradius`).
    RegularNgon {
        n: usize,
        circumradius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        smoothing: Option<f64>,
    },
    MinkowskiCombo(Vec<(f64, BodySpec)>),
    Scaled { alpha: f64, body: Box<BodySpec> },
    Rotated { phi: f64, body: Box<BodySpec> },
    Translated { v: [f64; 2], body: Box<BodySpec> },
}

impl BodySpec {
    pub fn disk(radius: f64) -> Self {
        BodySpec::Disk { radius }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        BodySpec::Ellipse { a, b }
    }

    pub fn regular_ngon(n: usize, circumradius: f64) -> Self {
        BodySpec::RegularNgon {
            n,
            circumradius,
            smoothing: None,
        }
    }

    /// Rounded square used throughout the verification suites.
    pub fn rounded_square() -> Self {
        Self::regular_ngon(4, 1.0)
    }

    pub fn combo(terms: Vec<(f64, BodySpec)>) -> Self {
        BodySpec::MinkowskiCombo(terms)
    }

    pub fn scaled(self, alpha: f64) -> Self {
        BodySpec::Scaled {
            alpha,
            body: Box::new(self),
        }
    }

    pub fn rotated(self, phi: f64) -> Self {
        BodySpec::Rotated {
            phi,
            body: Box::new(self),
        }
    }

    pub fn translated(self, x: f64, y: f64) -> Self {
        BodySpec::Translated {
            v: [x, y],
            body: Box::new(self),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: BodySpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::DegenerateBody(msg));
        match self {
            BodySpec::Disk { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("disk radius {radius} must be positive"));
                }
            }
            BodySpec::Ellipse { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return bad(format!("ellipse axes ({a}, {b}) must be positive"));
                }
            }
            BodySpec::RegularNgon {
                n,
                circumradius,
                smoothing,
            } => {
                if *n < 3 {
                    return bad(format!("polygon needs at least 3 vertices, got {n}"));
                }
                if !(circumradius.is_finite() && *circumradius > 0.0) {
                    return bad(format!("circumradius {circumradius} must be positive"));
                }
                if let Some(eps) = smoothing {
                    if !(eps.is_finite() && *eps > 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "polygon rounding radius {eps} must be positive"
                        )));
                    }
                }
            }
            BodySpec::MinkowskiCombo(terms) => {
                if terms.is_empty() {
                    return Err(Error::InvalidInput("empty Minkowski combination".into()));
                }
                let weights: Vec<f64> = terms.iter().map(|t| t.0).collect();
                check_weights(&weights)?;
                for (_, b) in terms {
                    b.validate()?;
                }
            }
            BodySpec::Scaled { alpha, body } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return bad(format!("scale factor {alpha} must be positive"));
                }
                body.validate()?;
            }
            BodySpec::Rotated { phi, body } => {
                if !phi.is_finite() {
                    return Err(Error::InvalidInput("non-finite rotation angle".into()));
                }
                body.validate()?;
            }
            BodySpec::Translated { v, body } => {
                if !(v[0].is_finite() && v[1].is_finite()) {
                    return Err(Error::InvalidInput("non-finite translation".into()));
                }
                body.validate()?;
            }
        }
        Ok(())
    }

    /// Closed-form support value in direction `(cos θ, sin θ)`.
    pub fn support_at(&self, theta: f64) -> f64 {
        match self {
            BodySpec::Disk { radius } => *radius,
            BodySpec::Ellipse { a, b } => {
                let (s, c) = theta.sin_cos();
                (a * a * c * c + b * b * s * s).sqrt()
            }
            BodySpec::RegularNgon {
                n,
                circumradius,
                smoothing,
            } => {
                let eps = smoothing.unwrap_or(DEFAULT_POLYGON_ROUNDING * circumradius);
                let polygon = (0..*n)
                    .map(|k| circumradius * (theta - 2.0 * PI * k as f64 / *n as f64).cos())
                    .fold(f64::NEG_INFINITY, f64::max);
                polygon + eps
            }
            BodySpec::MinkowskiCombo(terms) => {
                terms.iter().map(|(w, b)| w * b.support_at(theta)).sum()
            }
            BodySpec::Scaled { alpha, body } => alpha * body.support_at(theta),
            BodySpec::Rotated { phi, body } => body.support_at(theta - phi),
            BodySpec::Translated { v, body } => {
                let (s, c) = theta.sin_cos();
                body.support_at(theta) + v[0] * c + v[1] * s
            }
        }
    }
}

/// Evaluate the support function of `spec` on `grid`.
pub fn sample_support(spec: &BodySpec, grid: DirectionGrid) -> Result<SupportFunction> {
    spec.validate()?;
    let values = grid.angles().map(|t| spec.support_at(t)).collect();
    SupportFunction::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> DirectionGrid {
        DirectionGrid::new(64).unwrap()
    }

    #[test]
    fn disk_and_ellipse_values() {
        let d = sample_support(&BodySpec::disk(1.0), grid()).unwrap();
        assert!(d.values().iter().all(|v| *v == 1.0));
        let e = sample_support(&BodySpec::ellipse(2.0, 1.0), grid()).unwrap();
        assert!((e.values()[0] - 2.0).abs() < 1e-15);
        assert!((e.values()[16] - 1.0).abs() < 1e-15);
        let t = grid().angle(5);
        let expected = (4.0 * t.cos().powi(2) + t.sin().powi(2)).sqrt();
        assert!((e.values()[5] - expected).abs() < 1e-15);
    }

    #[test]
    fn combo_of_disks_adds_radii() {
        let spec = BodySpec::combo(vec![(0.5, BodySpec::disk(1.0)), (0.5, BodySpec::disk(3.0))]);
        let h = sample_support(&spec, grid()).unwrap();
        assert!(h.values().iter().all(|v| (v - 2.0).abs() < 1e-15));
    }

    #[test]
    fn polygon_is_rounded() {
        let h = sample_support(&BodySpec::rounded_square(), grid()).unwrap();
        // Vertex direction: circumradius + rounding.
        assert!((h.values()[0] - 1.05).abs() < 1e-15);
        // Edge normal at π/4: apothem + rounding.
        assert!((h.values()[8] - (0.5f64.sqrt() + 0.05)).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(sample_support(&BodySpec::disk(0.0), grid()).is_err());
        assert!(sample_support(&BodySpec::ellipse(1.0, 0.0), grid()).is_err());
        assert!(sample_support(&BodySpec::disk(1.0).scaled(-1.0), grid()).is_err());
        assert!(sample_support(&BodySpec::regular_ngon(2, 1.0), grid()).is_err());
        let bad_eps = BodySpec::RegularNgon {
            n: 4,
            circumradius: 1.0,
            smoothing: Some(0.0),
        };
        assert!(sample_support(&bad_eps, grid()).is_err());
        let bad_w = BodySpec::combo(vec![(0.6, BodySpec::disk(1.0)), (0.6, BodySpec::disk(1.0))]);
        assert!(sample_support(&bad_w, grid()).is_err());
    }

    #[test]
    fn json_round_trip_and_cli_shape() {
        let spec = BodySpec::from_json(r#"{"disk":{"R":1}}"#).unwrap();
        assert_eq!(spec, BodySpec::disk(1.0));
        let nested = BodySpec::combo(vec![
            (0.5, BodySpec::ellipse(2.0, 1.0).rotated(0.3)),
            (0.5, BodySpec::rounded_square().translated(1.0, 0.0).scaled(2.0)),
        ]);
        let text = serde_json::to_string(&nested).unwrap();
        assert_eq!(BodySpec::from_json(&text).unwrap(), nested);
        assert!(BodySpec::from_json(r#"{"disk":{"R":-1}}"#).is_err());
        assert!(BodySpec::from_json(r#"{"blob":{}}"#).is_err());
    }

    #[test]
    fn translation_and_scaling_act_on_support() {
        let base = BodySpec::ellipse(2.0, 1.0);
        let moved = base.clone().translated(1.0, 2.0).scaled(3.0);
        for j in 0..64 {
            let t = grid().angle(j);
            let expect = 3.0 * (base.support_at(t) + t.cos() + 2.0 * t.sin());
            assert!((moved.support_at(t) - expect).abs() < 1e-13);
        }
    }
}
