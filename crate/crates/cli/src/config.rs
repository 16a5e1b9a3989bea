//! Problem-spec JSON: schema-validated (unknown keys rejected), mirroring
//! the solver inputs plus output sampling and truncation overrides.

use serde::Deserialize;
use std::sync::Arc;

use cuspfield::basis::MediumParams;
use cuspfield::dirichlet::{analyze_boundary, FourierBoundary};
use cuspfield::geometry::{DiskGeometry, Point, RegionTag};
use cuspfield::potential::{PiecewiseField, QuadratureSpec};
use cuspfield::Error;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default = "default_geometry")]
    pub geometry: GeometryConfig,
    pub medium: MediumConfig,
    pub r0: f64,
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub rhs: Option<FieldConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub quadrature: Option<QuadConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub r1: f64,
    pub r2: f64,
}

fn default_geometry() -> GeometryConfig {
    GeometryConfig { r1: 1.0, r2: 1.0 }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub a0: f64,
    pub b0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "lowercase")]
pub enum BoundaryConfig {
    /// even/odd coefficients in the ê / ẽ conventions
    Fourier {
        #[serde(default)]
        even: Vec<f64>,
        #[serde(default)]
        odd: Vec<f64>,
    },
    /// uniform θ-grid samples (power of two ≥ 256)
    Samples { values: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "lowercase")]
pub enum FieldConfig {
    /// constant vector on one region
    Constant { region: String, f: [f64; 2] },
    /// f = ∇(A exp(−s|x−c|²)) on every region (smooth, compactly small)
    Gaussian { amplitude: f64, s: f64, center: [f64; 2] },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_solve_tol")]
    pub solve: f64,
    #[serde(default = "default_tail_tol")]
    pub tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solve: default_solve_tol(),
            tail: default_tail_tol(),
        }
    }
}

fn default_solve_tol() -> f64 {
    1e-8
}

fn default_tail_tol() -> f64 {
    1e-12
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default)]
    pub extent: Option<f64>,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    #[serde(default = "default_quad_radial")]
    pub n_radial: usize,
    #[serde(default = "default_quad_angular")]
    pub n_angular: usize,
}

fn default_quad_radial() -> usize {
    24
}

fn default_quad_angular() -> usize {
    96
}

impl QuadConfig {
    pub fn to_spec(self) -> QuadratureSpec {
        QuadratureSpec {
            n_radial: self.n_radial,
            n_angular: self.n_angular,
        }
    }
}

pub fn region_from_name(name: &str) -> Result<RegionTag, Error> {
    match name {
        "inclusion1" | "upper" => Ok(RegionTag::Inclusion1),
        "inclusion2" | "lower" => Ok(RegionTag::Inclusion2),
        "matrix" => Ok(RegionTag::Matrix),
        other => Err(Error::config(format!("unknown region name {other:?}"))),
    }
}

impl ProblemConfig {
    pub fn params(&self) -> Result<MediumParams, Error> {
        MediumParams::new(self.medium.a0, self.medium.b0, self.r0)
    }

    pub fn disk_geometry(&self) -> Result<DiskGeometry, Error> {
        DiskGeometry::new(self.geometry.r1, self.geometry.r2)
    }

    pub fn fourier_boundary(&self) -> Result<FourierBoundary, Error> {
        match &self.boundary {
            BoundaryConfig::Fourier { even, odd } => Ok(FourierBoundary::from_parts(
                cuspfield::coeffmatrix::CoeffVector::new(
                    even.clone(),
                    cuspfield::basis::Parity::Even,
                ),
                cuspfield::coeffmatrix::CoeffVector::new(odd.clone(), cuspfield::basis::Parity::Odd),
                self.r0,
            )),
            BoundaryConfig::Samples { values } => analyze_boundary(values, self.r0),
        }
    }

    pub fn rhs_field(&self) -> Result<Option<PiecewiseField>, Error> {
        let Some(cfg) = &self.rhs else {
            return Ok(None);
        };
        Ok(Some(build_field(cfg, self.r0)?))
    }
}

pub fn build_field(cfg: &FieldConfig, support: f64) -> Result<PiecewiseField, Error> {
    match cfg {
        FieldConfig::Constant { region, f } => {
            Ok(PiecewiseField::constant_on(region_from_name(region)?, *f))
        }
        FieldConfig::Gaussian {
            amplitude,
            s,
            center,
        } => {
            let (a, s, c) = (*amplitude, *s, *center);
            let grad = move |p: Point| {
                let dx = p.x1 - c[0];
                let dy = p.x2 - c[1];
                let v = a * (-s * (dx * dx + dy * dy)).exp();
                [-2.0 * s * dx * v, -2.0 * s * dy * v]
            };
            let mut field = PiecewiseField::zero();
            for reg in [RegionTag::Inclusion1, RegionTag::Inclusion2, RegionTag::Matrix] {
                field = field.with_component(reg, Arc::new(grad));
            }
            Ok(field.with_support_radius(support))
        }
    }
}

/// FNV-1a of the canonicalized configuration bytes; stamped into every
/// output header so runs are traceable.
pub fn config_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
