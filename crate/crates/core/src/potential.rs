//! Layer and volume potentials over the three phases: ray-traced polar
//! quadrature of the weakly singular log kernels, the reflected image series
//! assembling particular solutions, and closed forms for uniform fields on a
//! disk (the production path of the nonhomogeneous solver; the quadrature is
//! its oracle).

use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::MediumParams;
use crate::error::Error;
use crate::geometry::{classify, map_xk_complex, DiskGeometry, Point, RegionTag};
use crate::greens::{self, KernelGeometry, Normalization, TransmissionKernel};
use crate::series::{SeriesValue, TruncationPolicy};
use crate::Result;

pub type FieldFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// A vector field given per region; no continuity across interfaces implied.
#[derive(Clone)]
pub struct PiecewiseField {
    comp: [Option<FieldFn>; 3],
    uniform: [Option<[f64; 2]>; 3],
    /// Radius of a ball known to contain the support of the matrix-phase
    /// component (required to integrate over the unbounded matrix region).
    pub support_radius: Option<f64>,
    /// (n, γ) smoothness metadata, reporting only.
    pub smoothness: Option<(u32, f64)>,
}

fn region_slot(tag: RegionTag) -> usize {
    match tag {
        RegionTag::Inclusion1 | RegionTag::Interface1 => 0,
        RegionTag::Inclusion2 | RegionTag::Interface2 => 1,
        RegionTag::Matrix => 2,
    }
}

impl PiecewiseField {
    pub fn zero() -> Self {
        PiecewiseField {
            comp: [None, None, None],
            uniform: [None, None, None],
            support_radius: None,
            smoothness: None,
        }
    }

    /// Constant field on one region, zero elsewhere.
    pub fn constant_on(region: RegionTag, f: [f64; 2]) -> Self {
        let mut out = PiecewiseField::zero();
        let slot = region_slot(region);
        out.uniform[slot] = Some(f);
        out.comp[slot] = Some(Arc::new(move |_| f));
        out
    }

    pub fn with_component(mut self, region: RegionTag, f: FieldFn) -> Self {
        let slot = region_slot(region);
        self.comp[slot] = Some(f);
        self.uniform[slot] = None;
        self
    }

    pub fn with_support_radius(mut self, r: f64) -> Self {
        self.support_radius = Some(r);
        self
    }

    pub fn eval(&self, region: RegionTag, p: Point) -> [f64; 2] {
        match &self.comp[region_slot(region)] {
            Some(f) => f(p),
            None => [0.0, 0.0],
        }
    }

    pub fn uniform_component(&self, region: RegionTag) -> Option<[f64; 2]> {
        self.uniform[region_slot(region)]
    }

    pub fn has_component(&self, region: RegionTag) -> bool {
        self.comp[region_slot(region)].is_some()
    }
}

/// C^∞ cutoff: ≡ 1 on B_{l/2}, ≡ 0 outside B_l, radial bump profile in the
/// transition annulus.
#[derive(Debug, Clone, Copy)]
pub struct CutoffFunction {
    pub l: f64,
}

impl CutoffFunction {
    pub fn new(l: f64) -> Result<Self> {
        if l <= 0.0 {
            return Err(Error::config("cutoff radius must be positive"));
        }
        Ok(CutoffFunction { l })
    }

    /// η(|p|).
    pub fn value(&self, p: Point) -> f64 {
        let t = (p.norm() - 0.5 * self.l) / (0.5 * self.l);
        smooth_step(1.0 - t)
    }

    /// ∇η(p).
    pub fn grad(&self, p: Point) -> [f64; 2] {
        let r = p.norm();
        if r < 1e-14 {
            return [0.0, 0.0];
        }
        let t = (r - 0.5 * self.l) / (0.5 * self.l);
        let d = -smooth_step_deriv(1.0 - t) / (0.5 * self.l);
        [d * p.x1 / r, d * p.x2 / r]
    }
}

// B(s) = f(s)/(f(s)+f(1−s)) with f(s) = exp(−1/s): 0 for s ≤ 0, 1 for s ≥ 1.
fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

fn smooth_step_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        let da = a / (s * s);
        let db = -b / ((1.0 - s) * (1.0 - s));
        (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
    }
}

/// Per-region quadrature resolution: radial Gauss panels per ray segment and
/// uniform angular rays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            n_radial: 24,
            n_angular: 96,
        }
    }
}

impl QuadratureSpec {
    pub fn doubled(self) -> Self {
        QuadratureSpec {
            n_radial: self.n_radial * 2,
            n_angular: self.n_angular * 2,
        }
    }
}

// 8-point Gauss–Legendre on [-1, 1].
const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

fn ray_circle_hits(p0: Point, dir: (f64, f64), center: Point, radius: f64, out: &mut Vec<f64>) {
    let ex = p0.x1 - center.x1;
    let ey = p0.x2 - center.x2;
    let b = dir.0 * ex + dir.1 * ey;
    let c = ex * ex + ey * ey - radius * radius;
    let disc = b * b - c;
    if disc <= 0.0 {
        return;
    }
    let s = disc.sqrt();
    for t in [-b - s, -b + s] {
        if t > 1e-13 {
            out.push(t);
        }
    }
}

/// ∫_{Ω ∩ B_l} F(y) dy over one phase by polar rays from `center` with exact
/// segment tracing against the two interface circles and the outer circle.
/// When the integrand is weakly singular at an interior point, pass that
/// point as the center: the polar Jacobian removes a 1/r singularity.
pub fn integrate_region(
    region: RegionTag,
    outer: Option<f64>,
    center: Point,
    integrand: &dyn Fn(Point) -> f64,
    spec: QuadratureSpec,
) -> Result<f64> {
    let geo = DiskGeometry::canonical();
    if region == RegionTag::Matrix && outer.is_none() {
        return Err(Error::config(
            "matrix-phase integration needs a support radius",
        ));
    }
    let mut total = 0.0;
    let na = spec.n_angular;
    for s in 0..na {
        let phi = std::f64::consts::TAU * (s as f64 + 0.5) / (na as f64);
        let dir = (phi.cos(), phi.sin());
        let mut ts: Vec<f64> = vec![0.0];
        ray_circle_hits(center, dir, geo.center1(), geo.r1, &mut ts);
        ray_circle_hits(center, dir, geo.center2(), geo.r2, &mut ts);
        let t_cap = if let Some(l) = outer {
            ray_circle_hits(center, dir, Point::new(0.0, 0.0), l, &mut ts);
            center.norm() + l
        } else {
            // disk regions are bounded: cap past the far side of the disk
            let c = match region {
                RegionTag::Inclusion1 | RegionTag::Interface1 => geo.center1(),
                _ => geo.center2(),
            };
            center.dist(c) + 1.0
        };
        ts.retain(|&t| t <= t_cap + 1e-12);
        ts.push(t_cap);
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let mut ray_acc = 0.0;
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 - t0 < 1e-13 {
                continue;
            }
            let tm = 0.5 * (t0 + t1);
            let mid = Point::new(center.x1 + tm * dir.0, center.x2 + tm * dir.1);
            if classify(mid, geo, 0.0).tag != region {
                continue;
            }
            if let Some(l) = outer {
                if mid.norm() > l {
                    continue;
                }
            }
            // composite Gauss panels on [t0, t1]
            let panels = spec.n_radial.max(1);
            let h = (t1 - t0) / panels as f64;
            for p in 0..panels {
                let a = t0 + p as f64 * h;
                for (xi, wi) in GL_X.iter().zip(GL_W.iter()) {
                    let t = a + 0.5 * h * (1.0 + xi);
                    let y = Point::new(center.x1 + t * dir.0, center.x2 + t * dir.1);
                    ray_acc += wi * 0.5 * h * t * integrand(y);
                }
            }
        }
        total += ray_acc;
    }
    Ok(total * std::f64::consts::TAU / na as f64)
}

pub(crate) fn layer_center(x: Point, region: RegionTag, outer: Option<f64>) -> Point {
    let geo = DiskGeometry::canonical();
    let inside =
        classify(x, geo, 0.0).tag == region && outer.map(|l| x.norm() < l).unwrap_or(true);
    if inside {
        x
    } else {
        match region {
            RegionTag::Inclusion1 | RegionTag::Interface1 => geo.center1(),
            RegionTag::Inclusion2 | RegionTag::Interface2 => geo.center2(),
            RegionTag::Matrix => Point::new(0.0, 0.0),
        }
    }
}

/// The Newtonian layer potential h(x) = ∫_Ω ∇_y log|x−y| · f(y) dy of the
/// region component of `field`, by desingularized polar quadrature.
pub fn log_layer(
    x: Point,
    region: RegionTag,
    field: &PiecewiseField,
    quad: QuadratureSpec,
) -> Result<f64> {
    if !field.has_component(region) {
        return Ok(0.0);
    }
    // the outer support circle only matters for the unbounded matrix phase
    let outer = if region == RegionTag::Matrix {
        field.support_radius
    } else {
        None
    };
    let center = layer_center(x, region, outer);
    integrate_region(
        region,
        outer,
        center,
        &|y: Point| {
            let f = field.eval(region, y);
            let dx = y.x1 - x.x1;
            let dy = y.x2 - x.x2;
            let d2 = dx * dx + dy * dy;
            if d2 < 1e-26 {
                return 0.0;
            }
            (dx * f[0] + dy * f[1]) / d2
        },
        quad,
    )
}

/// `log_layer` with an a-posteriori mesh-doubling accuracy check.
pub fn log_layer_checked(
    x: Point,
    region: RegionTag,
    field: &PiecewiseField,
    quad: QuadratureSpec,
    tol: f64,
) -> Result<SeriesValue<f64>> {
    let mut spec = quad;
    let mut prev = log_layer(x, region, field, spec)?;
    for _ in 0..4 {
        let next_spec = spec.doubled();
        let next = log_layer(x, region, field, next_spec)?;
        let change = (next - prev).abs();
        if change <= tol {
            return Ok(SeriesValue {
                value: next,
                tail_bound: change,
                terms_used: next_spec.n_radial * next_spec.n_angular,
            });
        }
        prev = next;
        spec = next_spec;
    }
    Err(Error::convergence(
        "layer-potential quadrature did not reach the requested tolerance",
        f64::NAN,
    ))
}

/// Closed-form layer potential of a uniform field c on the disk B_a(c0):
/// h(x) = −c·∇Φ with Φ the log potential of the unit-density disk
/// (πa² log r outside, πr²/2 + const inside; C¹ across the circle).
pub fn uniform_disk_layer(x: Point, center: Point, radius: f64, c: [f64; 2]) -> f64 {
    let g = uniform_disk_phi_grad(x, center, radius);
    -(c[0] * g[0] + c[1] * g[1])
}

/// ∇h of the uniform-disk layer potential (piecewise; at the circle this is
/// the inside limit — use `uniform_disk_layer_grad_side` for an explicit
/// one-sided choice).
pub fn uniform_disk_layer_grad(x: Point, center: Point, radius: f64, c: [f64; 2]) -> [f64; 2] {
    let dx = x.x1 - center.x1;
    let dy = x.x2 - center.x2;
    let inside = dx * dx + dy * dy <= radius * radius;
    uniform_disk_layer_grad_side(x, center, radius, c, inside)
}

/// One-sided ∇h: the gradient jumps across the circle, so limits from the
/// two sides differ.
pub fn uniform_disk_layer_grad_side(
    x: Point,
    center: Point,
    radius: f64,
    c: [f64; 2],
    inside: bool,
) -> [f64; 2] {
    let pi = std::f64::consts::PI;
    if inside {
        [-pi * c[0], -pi * c[1]]
    } else {
        let dx = x.x1 - center.x1;
        let dy = x.x2 - center.x2;
        let r2 = (dx * dx + dy * dy).max(1e-300);
        let a2 = radius * radius;
        // −Hess(πa² log r)·c
        let dot = dx * c[0] + dy * c[1];
        [
            -pi * a2 * (c[0] / r2 - 2.0 * dx * dot / (r2 * r2)),
            -pi * a2 * (c[1] / r2 - 2.0 * dy * dot / (r2 * r2)),
        ]
    }
}

/// Unit vector pointing from x into the open region (used to resolve
/// one-sided limits of mapped arguments when x sits on an interface).
fn inward_direction(x: Point, region: RegionTag) -> [f64; 2] {
    let geo = DiskGeometry::canonical();
    match region {
        RegionTag::Inclusion1 | RegionTag::Interface1 => {
            let d = [geo.center1().x1 - x.x1, geo.center1().x2 - x.x2];
            let n = (d[0] * d[0] + d[1] * d[1]).sqrt().max(1e-300);
            [d[0] / n, d[1] / n]
        }
        RegionTag::Inclusion2 | RegionTag::Interface2 => {
            let d = [geo.center2().x1 - x.x1, geo.center2().x2 - x.x2];
            let n = (d[0] * d[0] + d[1] * d[1]).sqrt().max(1e-300);
            [d[0] / n, d[1] / n]
        }
        RegionTag::Matrix => {
            let d1 = x.dist(geo.center1()) - geo.r1;
            let d2 = x.dist(geo.center2()) - geo.r2;
            let c = if d1 < d2 { geo.center1() } else { geo.center2() };
            let d = [x.x1 - c.x1, x.x2 - c.x2];
            let n = (d[0] * d[0] + d[1] * d[1]).sqrt().max(1e-300);
            [d[0] / n, d[1] / n]
        }
    }
}

fn uniform_disk_phi_grad(x: Point, center: Point, radius: f64) -> [f64; 2] {
    let dx = x.x1 - center.x1;
    let dy = x.x2 - center.x2;
    let r2 = dx * dx + dy * dy;
    let pi = std::f64::consts::PI;
    if r2 <= radius * radius {
        [pi * dx, pi * dy]
    } else {
        let s = pi * radius * radius / r2;
        [s * dx, s * dy]
    }
}

/// Which reflected series to assemble: the three pieces of the volume
/// potential split by source phase (𝔅1, 𝔅2, 𝔅0), valid for x in the matrix
/// phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WBranch {
    W1,
    W2,
    W3,
}

impl WBranch {
    fn source_region(self) -> RegionTag {
        match self {
            WBranch::W1 => RegionTag::Inclusion1,
            WBranch::W2 => RegionTag::Inclusion2,
            WBranch::W3 => RegionTag::Matrix,
        }
    }
}

/// w_branch(x) = ∫_Ω ∇_y G_raw(x, y)·f̃(y) dy assembled as the image series
/// of mapped plain layer potentials: direct terms h(X_m(x)), reflected terms
/// h(conj X_m(x)) (the reflected layer ĥ(w) equals h(w̄)). Tail bound:
/// |αβ|^{K+1} · sup|h| · Σ|coeff| / (1−|αβ|) with sup|h| estimated from the
/// evaluated terms; the truncation study is the convergence oracle.
pub fn reflected_sum_w(
    x: Point,
    branch: WBranch,
    field: &PiecewiseField,
    params: &MediumParams,
    trunc: TruncationPolicy,
    quad: QuadratureSpec,
) -> Result<SeriesValue<f64>> {
    if classify(x, DiskGeometry::canonical(), 0.0).tag != RegionTag::Matrix {
        return Err(Error::domain(
            "reflected_sum_w: x must lie in the matrix phase",
        ));
    }
    if x.norm() <= greens::CUSP_TOL {
        return Err(Error::domain("reflected_sum_w: cusp proximity"));
    }
    let src = branch.source_region();
    let q = params.alpha() * params.beta();
    let br = greens::branch(src, RegionTag::Matrix, params);
    let z = x.to_complex();

    let layer_at =
        |w: Complex64| -> Result<f64> { log_layer(Point::from_complex(w), src, field, quad) };
    let term_value = |t: &greens::Term| -> Result<f64> {
        match *t {
            greens::Term::Direct { m, c } => Ok(c * layer_at(map_xk_complex(z, m)?)?),
            greens::Term::Reflected { m, c } => Ok(c * layer_at(map_xk_complex(z, m)?.conj())?),
        }
    };

    let mut acc = 0.0;
    for t in &br.pre {
        acc += term_value(t)?;
    }
    let mut qk = 1.0f64;
    let mut sup_h = 0.0f64;
    let mut coeff_sum = 0.0f64;
    let mut used = 0usize;
    let tail = loop {
        if q == 0.0 && used >= 1 {
            break 0.0;
        }
        let terms = (br.bracket)(used);
        coeff_sum = coeff_sum.max(terms.iter().map(|t| t.coeff().abs()).sum());
        let mut bracket_val = 0.0;
        for t in &terms {
            let v = term_value(t)?;
            bracket_val += v;
            sup_h = sup_h.max((v / t.coeff()).abs());
        }
        acc += qk * bracket_val;
        qk *= q;
        used += 1;
        let bound = q.abs().powi(used as i32) * sup_h * coeff_sum / (1.0 - q.abs());
        match trunc.mode {
            crate::series::TruncMode::TailTarget => {
                if used >= 2 && bound <= trunc.tail_tol {
                    break bound;
                }
            }
            crate::series::TruncMode::FixedK => {
                if used > trunc.k_max {
                    break bound;
                }
            }
        }
        if used >= trunc.k_max {
            break bound;
        }
    };
    Ok(SeriesValue {
        value: acc,
        tail_bound: tail,
        terms_used: used,
    })
}

/// Ring data for the u-dependent correction terms of the cutoff split: the
/// solution and its gradient on supp(∇η).
#[derive(Clone)]
pub struct RingData {
    pub u: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
    pub grad_u: Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>,
}

/// The volume potential ũ(x) = −∫ ∇_y G(x,y)·f̃(y) dy − ∫ G(x,y) ρ(y) dy in
/// the physical normalization, where f̃ = f·η + a·u·∇η and
/// ρ = f·∇η − a·∇u·∇η when a cutoff and ring data are supplied. Without a
/// cutoff it is the plain volume potential of the compactly supported f (the
/// self-contained mode); with a cutoff but no ring data the u-dependent
/// pieces are dropped (pure f·η potential).
pub fn volume_solution(
    x: Point,
    field: &PiecewiseField,
    cutoff: Option<&CutoffFunction>,
    ring: Option<&RingData>,
    kernel: &TransmissionKernel,
    quad: QuadratureSpec,
) -> Result<SeriesValue<f64>> {
    if kernel.normalization != Normalization::Physical {
        return Err(Error::config(
            "volume_solution requires the physical kernel normalization",
        ));
    }
    if kernel.geometry != KernelGeometry::Disk {
        return Err(Error::config("volume_solution runs on the disk kernel"));
    }
    let params = &kernel.params;

    let mut total = 0.0;
    let mut terms = 0usize;
    for region in [
        RegionTag::Inclusion1,
        RegionTag::Inclusion2,
        RegionTag::Matrix,
    ] {
        let has_field = field.has_component(region);
        let has_ring = cutoff.is_some() && ring.is_some();
        if !has_field && !has_ring {
            continue;
        }
        let outer = if region == RegionTag::Matrix {
            Some(
                field
                    .support_radius
                    .or(cutoff.map(|c| c.l))
                    .ok_or_else(|| {
                        Error::config("matrix-phase sources need a support radius or a cutoff")
                    })?,
            )
        } else {
            None // inclusion disks are bounded by themselves
        };
        // −∫ ∇_y G · f̃ dy
        let v = integrate_region(
            region,
            outer,
            layer_center(x, region, outer),
            &|y: Point| {
                let mut f = field.eval(region, y);
                if let Some(eta) = cutoff {
                    let e = eta.value(y);
                    f[0] *= e;
                    f[1] *= e;
                    if let Some(rd) = ring {
                        let ge = eta.grad(y);
                        if ge[0] != 0.0 || ge[1] != 0.0 {
                            let a = params.coefficient(region);
                            let u = (rd.u)(y);
                            f[0] += a * u * ge[0];
                            f[1] += a * u * ge[1];
                        }
                    }
                }
                if (f[0] == 0.0 && f[1] == 0.0) || x.dist(y) < 1e-10 {
                    return 0.0;
                }
                match greens::eval_g_full(x, y, kernel) {
                    Ok(e) => -(e.grad_y[0] * f[0] + e.grad_y[1] * f[1]),
                    Err(_) => 0.0,
                }
            },
            quad,
        )?;
        total += v;
        terms += 1;

        // −∫ G · (f·∇η − a ∇u·∇η) dy over the cutoff ring
        if let (Some(eta), Some(rd)) = (cutoff, ring) {
            let v = integrate_region(
                region,
                outer,
                layer_center(x, region, outer),
                &|y: Point| {
                    let ge = eta.grad(y);
                    if ge[0] == 0.0 && ge[1] == 0.0 {
                        return 0.0;
                    }
                    let f = field.eval(region, y);
                    let gu = (rd.grad_u)(y);
                    let a = params.coefficient(region);
                    let rho = f[0] * ge[0] + f[1] * ge[1] - a * (gu[0] * ge[0] + gu[1] * ge[1]);
                    if rho == 0.0 || x.dist(y) < 1e-10 {
                        return 0.0;
                    }
                    match greens::eval_g(x, y, kernel) {
                        Ok(g) => -g.value * rho,
                        Err(_) => 0.0,
                    }
                },
                quad,
            )?;
            total += v;
        }
    }
    Ok(SeriesValue {
        value: total,
        tail_bound: kernel.trunc.tail_tol,
        terms_used: terms,
    })
}

/// Closed-form volume potential of a uniform field on one inclusion disk:
/// the production path of the nonhomogeneous solver. Evaluates
/// ũ(x) = −(1/2π a_src) Σ branch-terms [ h(X_m(x)) or h(conj X_m(x)) ] with
/// the uniform-disk h in closed form, and ∇ũ by the conformal chain rule.
#[derive(Debug, Clone, Copy)]
pub struct UniformInclusionPotential {
    pub params: MediumParams,
    pub source: RegionTag,
    pub c: [f64; 2],
    pub trunc: TruncationPolicy,
}

impl UniformInclusionPotential {
    pub fn new(
        params: MediumParams,
        source: RegionTag,
        c: [f64; 2],
        trunc: TruncationPolicy,
    ) -> Result<Self> {
        if !matches!(source, RegionTag::Inclusion1 | RegionTag::Inclusion2) {
            return Err(Error::config(
                "uniform closed-form potential covers the inclusion disks",
            ));
        }
        Ok(UniformInclusionPotential {
            params,
            source,
            c,
            trunc,
        })
    }

    fn disk_center(&self) -> Point {
        match self.source {
            RegionTag::Inclusion1 => Point::new(0.0, 1.0),
            _ => Point::new(0.0, -1.0),
        }
    }

    /// (value, gradient) of ũ at x with an explicit region hint for x.
    pub fn eval_in(&self, x: Point, x_region: RegionTag) -> Result<SeriesValue<(f64, [f64; 2])>> {
        if x.norm() <= greens::CUSP_TOL {
            return Err(Error::domain("cusp proximity"));
        }
        let params = &self.params;
        let a_src = params.coefficient(self.source);
        let br = greens::branch(self.source, x_region, params);
        let q = params.alpha() * params.beta();
        let z = x.to_complex();
        let center = self.disk_center();

        // For x on an interface, the sides of the mapped arguments relative
        // to the source circle follow the branch; resolve them by nudging x
        // into the open region.
        let nudge = inward_direction(x, x_region);
        let z_nudged = z + Complex64::new(1e-7 * nudge[0], 1e-7 * nudge[1]);
        let term = |t: &greens::Term| -> Result<(f64, [f64; 2])> {
            let (m, refl, c) = match *t {
                greens::Term::Direct { m, c } => (m, false, c),
                greens::Term::Reflected { m, c } => (m, true, c),
            };
            let w0 = map_xk_complex(z, m)?;
            let w = if refl { w0.conj() } else { w0 };
            let wp = Point::from_complex(w);
            let wn0 = map_xk_complex(z_nudged, m)?;
            let wn = if refl { wn0.conj() } else { wn0 };
            let inside =
                (wn - center.to_complex()).norm() <= 1.0;
            let h = uniform_disk_layer(wp, center, 1.0, self.c);
            let gh = uniform_disk_layer_grad_side(wp, center, 1.0, self.c, inside);
            let dxm = if m == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                let den = Complex64::i() + (m as f64) * z;
                -1.0 / (den * den)
            };
            // real Jacobian transpose of the conformal map (conjugated map
            // composes with diag(1, −1))
            let (ju, jv) = (dxm.re, dxm.im);
            let g = if refl {
                [ju * gh[0] - jv * gh[1], -jv * gh[0] - ju * gh[1]]
            } else {
                [ju * gh[0] + jv * gh[1], -jv * gh[0] + ju * gh[1]]
            };
            Ok((c * h, [c * g[0], c * g[1]]))
        };

        let mut val = 0.0;
        let mut grad = [0.0, 0.0];
        for t in &br.pre {
            let (v, g) = term(t)?;
            val += v;
            grad[0] += g[0];
            grad[1] += g[1];
        }
        let mut qk = 1.0;
        let mut used = 0usize;
        let cnorm = (self.c[0].powi(2) + self.c[1].powi(2)).sqrt();
        // |h| ≤ π|c|·max(|w−c0|, 1) ≤ 3π|c| on the image set; same for |∇h|
        let m_h = 3.0 * std::f64::consts::PI * cnorm;
        let tail = loop {
            if q == 0.0 && used >= 1 {
                break 0.0;
            }
            let terms = (br.bracket)(used);
            let coeff_sum: f64 = terms.iter().map(|t| t.coeff().abs()).sum();
            for t in &terms {
                let (v, g) = term(t)?;
                val += qk * v;
                grad[0] += qk * g[0];
                grad[1] += qk * g[1];
            }
            qk *= q;
            used += 1;
            let bound = q.abs().powi(used as i32) * m_h * coeff_sum.max(1.0) / (1.0 - q.abs());
            match self.trunc.mode {
                crate::series::TruncMode::TailTarget => {
                    if used >= 2 && bound <= self.trunc.tail_tol {
                        break bound;
                    }
                }
                crate::series::TruncMode::FixedK => {
                    if used > self.trunc.k_max {
                        break bound;
                    }
                }
            }
            if used >= self.trunc.k_max {
                break bound;
            }
        };
        let f = -1.0 / (2.0 * std::f64::consts::PI * a_src);
        Ok(SeriesValue {
            value: (f * val, [f * grad[0], f * grad[1]]),
            tail_bound: f.abs() * tail,
            terms_used: used,
        })
    }

    pub fn eval(&self, x: Point) -> Result<SeriesValue<(f64, [f64; 2])>> {
        let tag = greens::disk_region(x)?;
        self.eval_in(x, tag)
    }
}
