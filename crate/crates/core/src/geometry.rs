//! Conformal maps, region classification, and the unequal-radius reduction.
//!
//! Everything downstream dispatches on the three phases of the canonical
//! geometry (upper disk, lower disk, matrix) and composes the maps defined
//! here. The plane point `x = (x1, x2)` is identified with the complex number
//! `z = x1 + i x2`; in that identification the inversion `Θ` is `z ↦ i/z`
//! and the shifted inversions `X_k = Θ(Θ(·) + k)` become `z ↦ iz/(i + kz)`.

use num_complex::Complex64;

use crate::error::Error;
use crate::Result;

/// Reject inputs closer than this to a map pole rather than regularizing.
pub const POLE_TOL: f64 = 1e-12;

/// Default classification band, in canonical units.
pub const DEFAULT_BAND: f64 = 1e-9;

/// A point of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
}

impl Point {
    pub fn new(x1: f64, x2: f64) -> Self {
        Point { x1, x2 }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x1, self.x2)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Point { x1: z.re, x2: z.im }
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }

    /// Reflection across the x1-axis, `x̄ = (x1, -x2)`.
    pub fn reflect(self) -> Self {
        Point {
            x1: self.x1,
            x2: -self.x2,
        }
    }
}

impl From<(f64, f64)> for Point {
    fn from(p: (f64, f64)) -> Self {
        Point { x1: p.0, x2: p.1 }
    }
}

/// Two externally tangent disks: the upper one of radius `r1` centered at
/// `(0, r1)` and the lower one of radius `r2` centered at `(0, -r2)`. They
/// touch at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskGeometry {
    pub r1: f64,
    pub r2: f64,
}

impl DiskGeometry {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if !(r1 > 0.0 && r1.is_finite() && r2 > 0.0 && r2.is_finite()) {
            return Err(Error::config(format!(
                "disk radii must be positive and finite, got r1={r1}, r2={r2}"
            )));
        }
        Ok(DiskGeometry { r1, r2 })
    }

    /// The canonical unit pair used by the explicit formulas.
    pub fn canonical() -> Self {
        DiskGeometry { r1: 1.0, r2: 1.0 }
    }

    pub fn center1(&self) -> Point {
        Point::new(0.0, self.r1)
    }

    pub fn center2(&self) -> Point {
        Point::new(0.0, -self.r2)
    }

    pub fn is_canonical(&self) -> bool {
        (self.r1 - 1.0).abs() < 1e-14 && (self.r2 - 1.0).abs() < 1e-14
    }
}

/// Phase tag of a point relative to the two disks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionTag {
    /// Inside the upper disk (coefficient a0).
    Inclusion1,
    /// Inside the lower disk (coefficient b0).
    Inclusion2,
    /// Outside both disks (coefficient 1).
    Matrix,
    /// Within `band` of the upper circle.
    Interface1,
    /// Within `band` of the lower circle.
    Interface2,
}

impl RegionTag {
    /// Numeric code used in CSV output: 1, 2, 0 for the open phases and
    /// -1, -2 for the interfaces.
    pub fn code(self) -> i32 {
        match self {
            RegionTag::Inclusion1 => 1,
            RegionTag::Inclusion2 => 2,
            RegionTag::Matrix => 0,
            RegionTag::Interface1 => -1,
            RegionTag::Interface2 => -2,
        }
    }
}

/// Classification result: the tag plus the band it was computed with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub tag: RegionTag,
    pub band: f64,
}

/// Signed-distance region classification. A point is `Interface*` iff its
/// distance to the corresponding circle is at most `band`; `Interface1` wins
/// the tie at the tangency point.
pub fn classify(p: Point, geo: DiskGeometry, band: f64) -> Region {
    debug_assert!(band >= 0.0);
    let d1 = p.dist(geo.center1()) - geo.r1;
    let d2 = p.dist(geo.center2()) - geo.r2;
    let tag = if d1.abs() <= band {
        RegionTag::Interface1
    } else if d2.abs() <= band {
        RegionTag::Interface2
    } else if d1 < 0.0 {
        RegionTag::Inclusion1
    } else if d2 < 0.0 {
        RegionTag::Inclusion2
    } else {
        RegionTag::Matrix
    };
    Region { tag, band }
}

/// The inversion `Θ(x) = (x2/|x|², x1/|x|²)`, i.e. `z ↦ i/z`. Involutive.
pub fn theta(p: Point) -> Result<Point> {
    let n2 = p.x1 * p.x1 + p.x2 * p.x2;
    if n2.sqrt() <= POLE_TOL {
        return Err(Error::domain("theta: input at the pole (origin)"));
    }
    Ok(Point::new(p.x2 / n2, p.x1 / n2))
}

/// `X_k(x) = Θ(Θ(x) + (k, 0))`; in complex form `z ↦ iz/(i + kz)`.
///
/// `X_0` is the identity. For k ≠ 0 the pole sits at `z = -i/k`, inside one
/// of the disks and accumulating at the cusp as |k| grows.
pub fn map_xk(p: Point, k: i64) -> Result<Point> {
    Ok(Point::from_complex(map_xk_complex(p.to_complex(), k)?))
}

/// `X_k` together with its complex derivative `dX_k/dz = -1/(i + kz)²`,
/// for chain-rule gradient transport.
pub fn map_xk_jet(p: Point, k: i64) -> Result<(Point, Complex64)> {
    let z = p.to_complex();
    if k == 0 {
        return Ok((p, Complex64::new(1.0, 0.0)));
    }
    let den = Complex64::i() + (k as f64) * z;
    check_xk_pole(z, k, den)?;
    let val = Complex64::i() * z / den;
    let deriv = -1.0 / (den * den);
    Ok((Point::from_complex(val), deriv))
}

pub(crate) fn map_xk_complex(z: Complex64, k: i64) -> Result<Complex64> {
    if k == 0 {
        return Ok(z);
    }
    let den = Complex64::i() + (k as f64) * z;
    check_xk_pole(z, k, den)?;
    Ok(Complex64::i() * z / den)
}

fn check_xk_pole(z: Complex64, k: i64, den: Complex64) -> Result<()> {
    if z.norm() <= POLE_TOL {
        return Err(Error::domain("X_k: input at the origin pole of Θ"));
    }
    // |z - (-i/k)| = |den| / |k|
    if den.norm() <= POLE_TOL * (k.unsigned_abs() as f64) {
        return Err(Error::domain(format!("X_{k}: input at the map pole")));
    }
    Ok(())
}

/// A Möbius map `F(z) = mul/(z - pole) + add` (or the identity), normalized
/// so that the two circles of a `DiskGeometry` land on the canonical unit
/// pair `{|z - i| = 1}`, `{|z + i| = 1}`.
#[derive(Debug, Clone, Copy)]
pub struct MobiusMap {
    kind: MapKind,
}

#[derive(Debug, Clone, Copy)]
enum MapKind {
    Identity,
    /// pure similarity w = mul·z (the equal-radius rescale)
    Affine { mul: Complex64 },
    Inversion {
        pole: Complex64,
        mul: Complex64,
        add: Complex64,
    },
}

impl MobiusMap {
    pub fn identity() -> Self {
        MobiusMap {
            kind: MapKind::Identity,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, MapKind::Identity)
    }

    /// The pole `z0` of the underlying `1/(z - z0)`, if any.
    pub fn pole(&self) -> Option<Point> {
        match self.kind {
            MapKind::Identity | MapKind::Affine { .. } => None,
            MapKind::Inversion { pole, .. } => Some(Point::from_complex(pole)),
        }
    }

    /// Post-transform decomposition: rotation angle, scale, translation of
    /// the affine map applied after the inversion.
    pub fn post_transform(&self) -> (f64, f64, Point) {
        match self.kind {
            MapKind::Identity => (0.0, 1.0, Point::new(0.0, 0.0)),
            MapKind::Affine { mul } => (mul.arg(), mul.norm(), Point::new(0.0, 0.0)),
            MapKind::Inversion { mul, add, .. } => {
                (mul.arg(), mul.norm(), Point::from_complex(add))
            }
        }
    }

    pub fn apply(&self, p: Point) -> Result<Point> {
        Ok(Point::from_complex(self.apply_z(p.to_complex())?))
    }

    pub fn apply_z(&self, z: Complex64) -> Result<Complex64> {
        match self.kind {
            MapKind::Identity => Ok(z),
            MapKind::Affine { mul } => Ok(mul * z),
            MapKind::Inversion { pole, mul, add } => {
                let d = z - pole;
                if d.norm() <= POLE_TOL {
                    return Err(Error::domain("MobiusMap: input at the pole"));
                }
                Ok(mul / d + add)
            }
        }
    }

    pub fn apply_inv(&self, p: Point) -> Result<Point> {
        Ok(Point::from_complex(self.apply_inv_z(p.to_complex())?))
    }

    pub fn apply_inv_z(&self, w: Complex64) -> Result<Complex64> {
        match self.kind {
            MapKind::Identity => Ok(w),
            MapKind::Affine { mul } => Ok(w / mul),
            MapKind::Inversion { pole, mul, add } => {
                let d = w - add;
                if d.norm() <= POLE_TOL {
                    return Err(Error::domain("MobiusMap inverse: input at the image of ∞"));
                }
                Ok(pole + mul / d)
            }
        }
    }

    /// Complex derivative dF/dz.
    pub fn deriv_z(&self, z: Complex64) -> Result<Complex64> {
        match self.kind {
            MapKind::Identity => Ok(Complex64::new(1.0, 0.0)),
            MapKind::Affine { mul } => Ok(mul),
            MapKind::Inversion { pole, mul, .. } => {
                let d = z - pole;
                if d.norm() <= POLE_TOL {
                    return Err(Error::domain("MobiusMap derivative: input at the pole"));
                }
                Ok(-mul / (d * d))
            }
        }
    }

    /// Image of a circle (center, radius) under the full map. Requires the
    /// circle not to pass through the pole.
    pub fn image_circle(&self, center: Point, radius: f64) -> Result<(Point, f64)> {
        match self.kind {
            MapKind::Identity => Ok((center, radius)),
            MapKind::Affine { mul } => Ok((
                Point::from_complex(mul * center.to_complex()),
                mul.norm() * radius,
            )),
            MapKind::Inversion { pole, mul, add } => {
                let d = center.to_complex() - pole;
                let den = d.norm_sqr() - radius * radius;
                if den.abs() < 1e-300 {
                    return Err(Error::domain("MobiusMap: circle passes through the pole"));
                }
                let u = d.conj() / den;
                let rho = radius / den.abs();
                Ok((Point::from_complex(mul * u + add), mul.norm() * rho))
            }
        }
    }
}

/// A closed disk used to describe the region the Möbius pole must avoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exclusion {
    pub center: Point,
    pub radius: f64,
}

impl Exclusion {
    pub fn ball(radius: f64) -> Self {
        Exclusion {
            center: Point::new(0.0, 0.0),
            radius,
        }
    }
}

/// The ratio root of the `z1/z2 + z2/z1 = 4 r1 r2 / (r2 - r1)` quadratic
/// (larger root). Exists for |4 r1 r2 / (r2 - r1)| > 2; the radii must differ.
pub fn tangency_ratio_root(geo: DiskGeometry) -> Result<f64> {
    if (geo.r1 - geo.r2).abs() < 1e-14 {
        return Err(Error::config(
            "ratio root undefined for equal radii (identity map applies)",
        ));
    }
    let q = 4.0 * geo.r1 * geo.r2 / (geo.r2 - geo.r1);
    if q.abs() <= 2.0 {
        return Err(Error::config(format!(
            "ratio quadratic t + 1/t = {q} has no real root"
        )));
    }
    let disc = (q * q - 4.0).sqrt();
    Ok(if q > 0.0 {
        (q + disc) / 2.0
    } else {
        (q - disc) / 2.0
    })
}

/// Builds the Möbius map sending the two circles of `geo` to the canonical
/// unit tangent pair, with the pole chosen on the equal-radius locus
/// `z1² + z2² = Q z2`, `Q = 4 r1 r2/(r2 - r1)` — the set of poles for which
/// the two image circles come out with the same radius. The tangency point
/// (origin) maps to the tangency point (origin) exactly.
///
/// Pole choice is deterministic: the locus point farthest from the origin,
/// `(0, Q)`, when it clears the exclusion region by at least 1; otherwise the
/// best point of a fixed locus scan; otherwise a configuration error.
pub fn equal_radius_map(geo: DiskGeometry, exclusion: Exclusion) -> Result<MobiusMap> {
    if (geo.r1 - geo.r2).abs() < 1e-14 {
        if (geo.r1 - 1.0).abs() < 1e-14 {
            return Ok(MobiusMap::identity());
        }
        // equal but non-unit radii: a pure rescale canonicalizes
        return Ok(MobiusMap {
            kind: MapKind::Affine {
                mul: Complex64::new(1.0 / geo.r1, 0.0),
            },
        });
    }
    let q = 4.0 * geo.r1 * geo.r2 / (geo.r2 - geo.r1);

    let clearance = |z0: Complex64| -> f64 {
        (Point::from_complex(z0).dist(exclusion.center)) - exclusion.radius
    };

    // Locus circle: center (0, Q/2), radius |Q|/2, passing through the origin.
    // Prefer a clearance of 1 past the exclusion region; the locus is bounded
    // (|z0| ≤ |Q|), so fall back to the best attainable positive clearance.
    let min_clearance = 0.05 * (1.0 + exclusion.radius);
    let top = Complex64::new(0.0, q);
    let pole = if clearance(top) >= 1.0 {
        top
    } else {
        let mut best = top;
        let mut best_c = clearance(top);
        for s in 0..720 {
            let phi = std::f64::consts::TAU * (s as f64) / 720.0;
            let cand = Complex64::new(
                0.5 * q.abs() * phi.cos(),
                q / 2.0 + 0.5 * q.abs() * phi.sin() * q.signum(),
            );
            // stay off the tangency end of the locus
            if cand.norm() < 0.05 * q.abs() {
                continue;
            }
            let c = clearance(cand);
            if c > best_c {
                best_c = c;
                best = cand;
            }
        }
        if best_c < min_clearance {
            return Err(Error::config(format!(
                "no pole on the equal-radius locus clears the exclusion region \
                 (best clearance {best_c:.3})"
            )));
        }
        best
    };

    // Image circles under 1/(z - pole); equal radii by the locus constraint.
    let invert = |c: Complex64, r: f64| -> (Complex64, f64) {
        let d = c - pole;
        let den = d.norm_sqr() - r * r;
        (d.conj() / den, r / den.abs())
    };
    let (u1, rho1) = invert(geo.center1().to_complex(), geo.r1);
    let (u2, rho2) = invert(geo.center2().to_complex(), geo.r2);
    // the image tangency point −1/pole is the midpoint of the image centers
    debug_assert!(((u1 + u2) * 0.5 + 1.0 / pole).norm() < 1e-9 * (1.0 + u1.norm()));
    if (rho1 - rho2).abs() > 1e-12 * rho1.max(rho2) {
        return Err(Error::config(format!(
            "equal-radius locus violated: image radii {rho1:.3e} vs {rho2:.3e}"
        )));
    }

    // Tangency image; lies on both image circles, midway between the centers.
    let wt = -1.0 / pole;
    let mul = Complex64::i() / (u1 - wt);
    Ok(MobiusMap {
        kind: MapKind::Inversion {
            pole,
            mul,
            add: -mul * wt,
        },
    })
}
