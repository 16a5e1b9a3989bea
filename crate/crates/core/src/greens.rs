//! Method-of-images Green's functions: the strip kernel G̃ for the layered
//! operator div(A∇·) with A = a0 / 1 / b0 on {x1 > 1/2} / {|x1| < 1/2} /
//! {x1 < −1/2}, and the tangent-disk kernel G obtained from it through the
//! inversion Θ. Both are sums of log-distance terms over reflected images,
//! branch-dispatched over the nine (source region × field region) cases.
//!
//! Normalization: the Δlog = δ convention takes Δ log|x−y| = δ, so the raw
//! kernel satisfies div(a∇G) = 2π·a(y)·δ(x−y); the physical convention
//! divides by 2π·a(y) so that div(a∇G) = δ. The contour-charge test is the
//! empirical check of this factor.
//!
//! Image charges: for a source in an inclusion the disk kernel carries one
//! additional point charge at that disk's center — the single reflected
//! term log|X_{∓1}(x) − ȳ| blows up at the pole of X_{∓1}, contributing
//! −α·δ at (0,1) (upper source) or −β·δ at (0,−1) (lower source) in the
//! physical a-weighted count, so the net flux to infinity is 1−α (resp.
//! 1−β). Everything downstream is unaffected: the volume potentials only
//! use ∇_y G, and the singular part is independent of y. Matrix-phase
//! sources carry no image charge. The flux-balance test below pins this
//! structure.

use num_complex::Complex64;

use crate::basis::MediumParams;
use crate::error::Error;
use crate::geometry::{classify, map_xk_complex, DiskGeometry, Point, RegionTag, POLE_TOL};
use crate::series::{SeriesValue, TruncMode, TruncationPolicy};
use crate::Result;

/// Minimum distance from an evaluation point to the cusp for the disk
/// kernel (the X_k image poles accumulate at the origin).
pub const CUSP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelGeometry {
    Strip,
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// the Δ log = δ bookkeeping convention: div(a∇G) = 2π a(y) δ
    Raw,
    /// div(a∇G) = δ
    Physical,
}

#[derive(Debug, Clone, Copy)]
pub struct TransmissionKernel {
    pub geometry: KernelGeometry,
    pub params: MediumParams,
    pub trunc: TruncationPolicy,
    pub normalization: Normalization,
}

impl TransmissionKernel {
    pub fn strip(params: MediumParams, trunc: TruncationPolicy, norm: Normalization) -> Self {
        TransmissionKernel {
            geometry: KernelGeometry::Strip,
            params,
            trunc,
            normalization: norm,
        }
    }

    pub fn disk(params: MediumParams, trunc: TruncationPolicy, norm: Normalization) -> Self {
        TransmissionKernel {
            geometry: KernelGeometry::Disk,
            params,
            trunc,
            normalization: norm,
        }
    }

    fn norm_factor(&self, y_region: RegionTag) -> f64 {
        match self.normalization {
            Normalization::Raw => 1.0,
            Normalization::Physical => {
                1.0 / (2.0 * std::f64::consts::PI * self.params.coefficient(y_region))
            }
        }
    }
}

/// Value, both gradients, and their certified tail bounds.
#[derive(Debug, Clone, Copy)]
pub struct GreensEval {
    pub value: f64,
    pub grad_x: [f64; 2],
    pub grad_y: [f64; 2],
    pub tail_value: f64,
    pub tail_grad: f64,
    pub terms_used: usize,
}

/// Strip-region tag from the x1 coordinate: Inclusion1 ↔ {x1 > 1/2},
/// Inclusion2 ↔ {x1 < −1/2}, Matrix ↔ the middle strip.
pub fn strip_region(p: Point) -> Result<RegionTag> {
    if (p.x1 - 0.5).abs() <= POLE_TOL || (p.x1 + 0.5).abs() <= POLE_TOL {
        return Err(Error::domain(
            "point on a strip interface line: supply a region hint",
        ));
    }
    Ok(if p.x1 > 0.5 {
        RegionTag::Inclusion1
    } else if p.x1 < -0.5 {
        RegionTag::Inclusion2
    } else {
        RegionTag::Matrix
    })
}

/// Disk-region tag, rejecting interface points.
pub fn disk_region(p: Point) -> Result<RegionTag> {
    match classify(p, DiskGeometry::canonical(), POLE_TOL).tag {
        RegionTag::Interface1 | RegionTag::Interface2 => Err(Error::domain(
            "point on an interface circle: supply a region hint",
        )),
        t => Ok(t),
    }
}

// One log-distance image term with its scalar coefficient.
#[derive(Clone, Copy)]
pub(crate) enum Term {
    /// log|x + (m,0) − y| (strip) or log|X_m(x) − y| (disk)
    Direct { m: i64, c: f64 },
    /// log|x + (m,0) + ȳ| (strip) or log|X_m(x) − ȳ| (disk)
    Reflected { m: i64, c: f64 },
}

impl Term {
    pub(crate) fn coeff(&self) -> f64 {
        match self {
            Term::Direct { c, .. } | Term::Reflected { c, .. } => *c,
        }
    }
}

// The image-series structure of one (y-region, x-region) branch:
// pre-terms with unit weight, then Σ_k (αβ)^k Σ(bracket terms at k).
pub(crate) struct Branch {
    pub(crate) pre: Vec<Term>,
    pub(crate) bracket: Box<dyn Fn(usize) -> Vec<Term>>,
}

pub(crate) fn branch(y_region: RegionTag, x_region: RegionTag, params: &MediumParams) -> Branch {
    let alpha = params.alpha();
    let beta = params.beta();
    let a0 = params.a0;
    let b0 = params.b0;
    use RegionTag::*;
    use Term::*;
    match (y_region, x_region) {
        (Matrix, Inclusion1) => Branch {
            pre: vec![],
            bracket: Box::new(move |k| {
                let k = k as i64;
                vec![
                    Direct { m: 2 * k, c: 1.0 - alpha },
                    Reflected { m: 2 * k + 1, c: -(1.0 - alpha) * beta },
                ]
            }),
        },
        (Matrix, Inclusion2) => Branch {
            pre: vec![],
            bracket: Box::new(move |k| {
                let k = k as i64;
                vec![
                    Direct { m: -2 * k, c: 1.0 - beta },
                    Reflected { m: -(2 * k + 1), c: -(1.0 - beta) * alpha },
                ]
            }),
        },
        (Matrix, Matrix) => Branch {
            pre: vec![Direct { m: 0, c: 1.0 }],
            bracket: Box::new(move |k| {
                let k = k as i64;
                let mut v = vec![
                    Reflected { m: 2 * k + 1, c: -beta },
                    Reflected { m: -(2 * k + 1), c: -alpha },
                ];
                if k >= 1 {
                    v.push(Direct { m: 2 * k, c: 1.0 });
                    v.push(Direct { m: -2 * k, c: 1.0 });
                }
                v
            }),
        },
        (Inclusion1, Inclusion1) => Branch {
            pre: vec![Direct { m: 0, c: 1.0 }, Reflected { m: -1, c: alpha }],
            bracket: Box::new(move |k| {
                let k = k as i64;
                vec![Reflected {
                    m: 2 * k + 1,
                    c: -2.0 * beta * (1.0 + alpha) / (1.0 + a0),
                }]
            }),
        },
        (Inclusion1, Matrix) => Branch {
            pre: vec![],
            bracket: Box::new(move |k| {
                let k = k as i64;
                vec![
                    Direct { m: -2 * k, c: 1.0 + alpha },
                    Reflected { m: 2 * k + 1, c: -(1.0 + alpha) * beta },
                ]
            }),
        },
        (Inclusion1, Inclusion2) => Branch {
            pre: vec![],
            bracket: Box::new(move |k| {
                let k = k as i64;
                vec![Direct {
                    m: -2 * k,
                    c: 2.0 * (1.0 + alpha) / (1.0 + b0),
                }]
            }),
        },
        (Inclusion2, Inclusion1) => Branch {
            pre: vec![],
            bracket: Box::new(move |k| {
                let k = k as i64;
                vec![Direct {
                    m: 2 * k,
                    c: 2.0 * (1.0 + beta) / (1.0 + a0),
                }]
            }),
        },
        (Inclusion2, Matrix) => Branch {
            pre: vec![],
            bracket: Box::new(move |k| {
                let k = k as i64;
                vec![
                    Direct { m: 2 * k, c: 1.0 + beta },
                    Reflected { m: -(2 * k + 1), c: -(1.0 + beta) * alpha },
                ]
            }),
        },
        (Inclusion2, Inclusion2) => Branch {
            pre: vec![Direct { m: 0, c: 1.0 }, Reflected { m: 1, c: beta }],
            bracket: Box::new(move |k| {
                let k = k as i64;
                vec![Reflected {
                    m: -(2 * k + 1),
                    c: -2.0 * alpha * (1.0 + beta) / (1.0 + b0),
                }]
            }),
        },
        // interface tags never reach here (checked by callers)
        _ => unreachable!("interface region passed to greens branch"),
    }
}

// (value, grad_x, grad_y) of one image term; rejects x at the term's
// singular point.
fn term_eval(
    geometry: KernelGeometry,
    term: Term,
    x: Point,
    y: Point,
) -> Result<(f64, [f64; 2], [f64; 2])> {
    match geometry {
        KernelGeometry::Strip => {
            let (m, target, refl) = match term {
                Term::Direct { m, .. } => (m, (y.x1, y.x2), false),
                Term::Reflected { m, .. } => (m, (-y.x1, y.x2), true),
            };
            let dx = x.x1 + m as f64 - target.0;
            let dy = x.x2 - target.1;
            let d2 = dx * dx + dy * dy;
            if d2.sqrt() <= POLE_TOL {
                return Err(Error::domain("evaluation at a kernel singularity"));
            }
            let val = 0.5 * d2.ln();
            let gx = [dx / d2, dy / d2];
            let gy = if refl {
                [dx / d2, -dy / d2]
            } else {
                [-dx / d2, -dy / d2]
            };
            Ok((val, gx, gy))
        }
        KernelGeometry::Disk => {
            let (m, target, refl) = match term {
                Term::Direct { m, .. } => (m, Complex64::new(y.x1, y.x2), false),
                Term::Reflected { m, .. } => (m, Complex64::new(y.x1, -y.x2), true),
            };
            let z = x.to_complex();
            let w = map_xk_complex(z, m)?;
            let d = w - target;
            if d.norm() <= POLE_TOL {
                return Err(Error::domain("evaluation at a kernel singularity"));
            }
            let val = d.norm().ln();
            // ∇_x log|X_m(z) − q| = (Re φ, −Im φ), φ = X_m'(z)/(X_m(z) − q)
            let dxm = if m == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                let den = Complex64::i() + (m as f64) * z;
                -1.0 / (den * den)
            };
            let phi = dxm / d;
            let gx = [phi.re, -phi.im];
            let d2 = d.norm_sqr();
            let gy = if refl {
                // target = ȳ: ∂/∂y1 = (y1 − w1)/d², ∂/∂y2 = (w2 + y2)/d²
                [(target.re - w.re) / d2, (w.im - target.im) / d2]
            } else {
                [(target.re - w.re) / d2, (target.im - w.im) / d2]
            };
            Ok((val, gx, gy))
        }
    }
}

// Certified tail machinery. Strip: image distances grow like 2k, so |log|
// grows logarithmically; bound ln(m+D) ≤ ln(K+D)(m+D)/(K+D) for m ≥ K and
// sum the geometric-linear series. Disk: the images X_m(x) collapse toward
// the origin like 1/m, distances approach |y|, and the log envelope is
// eventually constant. Returns None if stopping at k_next is not yet
// certifiable.
fn tail_bounds(
    geometry: KernelGeometry,
    q: f64,
    k_next: usize,
    coeff_sum: f64,
    x: Point,
    y: Point,
) -> Option<(f64, f64)> {
    if q == 0.0 {
        return Some((0.0, 0.0));
    }
    let qa = q.abs();
    let qk = qa.powi(k_next as i32);
    match geometry {
        KernelGeometry::Strip => {
            let d0 = x.norm() + y.norm() + 1.0;
            let gap = 2.0 * k_next as f64 - 1.0 - d0; // min distance at shift k_next
            if gap < 1.0 {
                return None;
            }
            let kk = 2.0 * k_next as f64 + d0;
            let lin = 1.0 + qa / ((1.0 - qa) * kk);
            let val = coeff_sum * qk / (1.0 - qa) * kk.ln() * lin;
            let grad = coeff_sum * qk / (1.0 - qa) / gap;
            Some((val, grad))
        }
        KernelGeometry::Disk => {
            let zn = x.norm();
            let dy = y.norm();
            // |X_m| ≤ 1/(m − 1/|z|) for m|z| > 1; require the images within
            // dy/2 of the origin before trusting the constant envelope.
            let m = 2.0 * k_next as f64 - 1.0;
            if m * zn <= 1.0 {
                return None;
            }
            let s = 1.0 / (m - 1.0 / zn);
            if s > 0.5 * dy {
                return None;
            }
            let lmax = (0.5 * dy).ln().abs().max((dy + s).ln().abs());
            let val = coeff_sum * qk / (1.0 - qa) * lmax;
            // |∇_x| ≤ |X'_m| / (dy/2), |X'_m| ≤ 1/(m|z|−1)²; |∇_y| ≤ 2/dy.
            let gx = 1.0 / ((m * zn - 1.0) * (m * zn - 1.0)) * 2.0 / dy;
            let grad = coeff_sum * qk / (1.0 - qa) * gx.max(2.0 / dy);
            Some((val, grad))
        }
    }
}

fn eval_branch(
    kernel: &TransmissionKernel,
    x: Point,
    y: Point,
    x_region: RegionTag,
    y_region: RegionTag,
) -> Result<GreensEval> {
    if kernel.geometry == KernelGeometry::Disk && x.norm() <= CUSP_TOL {
        return Err(Error::domain(
            "disk kernel: evaluation point within cusp tolerance of the origin",
        ));
    }
    let q = kernel.params.alpha() * kernel.params.beta();
    let br = branch(y_region, x_region, &kernel.params);

    let mut val = 0.0;
    let mut gx = [0.0; 2];
    let mut gy = [0.0; 2];
    for t in &br.pre {
        let (v, a, b) = term_eval(kernel.geometry, *t, x, y)?;
        let c = t.coeff();
        val += c * v;
        gx[0] += c * a[0];
        gx[1] += c * a[1];
        gy[0] += c * b[0];
        gy[1] += c * b[1];
    }

    let mut qk = 1.0f64;
    let mut k = 0usize;
    let (tail_value, tail_grad) = loop {
        let terms = (br.bracket)(k);
        let coeff_sum: f64 = terms.iter().map(|t| t.coeff().abs()).sum();
        if k > 0 {
            let t = tail_bounds(kernel.geometry, q, k, coeff_sum.max(1e-300), x, y);
            match (kernel.trunc.mode, t) {
                (TruncMode::TailTarget, Some(t)) if t.0.max(t.1) <= kernel.trunc.tail_tol => {
                    break t;
                }
                (TruncMode::FixedK, Some(t)) if k > kernel.trunc.k_max => break t,
                _ => {}
            }
            if k >= kernel.trunc.k_max {
                // cap reached: report the honest bound (possibly above target)
                break t.unwrap_or((f64::INFINITY, f64::INFINITY));
            }
        }
        for t in &terms {
            let (v, a, b) = term_eval(kernel.geometry, *t, x, y)?;
            let c = qk * t.coeff();
            val += c * v;
            gx[0] += c * a[0];
            gx[1] += c * a[1];
            gy[0] += c * b[0];
            gy[1] += c * b[1];
        }
        qk *= q;
        k += 1;
        if q == 0.0 && k >= 1 {
            break (0.0, 0.0);
        }
    };

    let f = kernel.norm_factor(y_region);
    Ok(GreensEval {
        value: f * val,
        grad_x: [f * gx[0], f * gx[1]],
        grad_y: [f * gy[0], f * gy[1]],
        tail_value: f * tail_value,
        tail_grad: f * tail_grad,
        terms_used: k,
    })
}

/// Full evaluation (value + gradients) of the strip kernel G̃(x, y).
pub fn eval_gtilde_full(x: Point, y: Point, kernel: &TransmissionKernel) -> Result<GreensEval> {
    eval_gtilde_full_in(x, strip_region(x)?, y, kernel)
}

/// One-sided variant with an explicit branch for x.
pub fn eval_gtilde_full_in(
    x: Point,
    x_region: RegionTag,
    y: Point,
    kernel: &TransmissionKernel,
) -> Result<GreensEval> {
    if kernel.geometry != KernelGeometry::Strip {
        return Err(Error::config("strip evaluation on a disk kernel"));
    }
    let y_region = strip_region(y)
        .map_err(|_| Error::domain("degenerate source: y on an interface line"))?;
    eval_branch(kernel, x, y, x_region, y_region)
}

pub fn eval_gtilde(x: Point, y: Point, kernel: &TransmissionKernel) -> Result<SeriesValue<f64>> {
    eval_gtilde_full(x, y, kernel).map(|e| SeriesValue {
        value: e.value,
        tail_bound: e.tail_value,
        terms_used: e.terms_used,
    })
}

/// Full evaluation of the disk kernel G(x, y).
pub fn eval_g_full(x: Point, y: Point, kernel: &TransmissionKernel) -> Result<GreensEval> {
    eval_g_full_in(x, disk_region(x)?, y, kernel)
}

pub fn eval_g_full_in(
    x: Point,
    x_region: RegionTag,
    y: Point,
    kernel: &TransmissionKernel,
) -> Result<GreensEval> {
    if kernel.geometry != KernelGeometry::Disk {
        return Err(Error::config("disk evaluation on a strip kernel"));
    }
    let y_region =
        disk_region(y).map_err(|_| Error::domain("degenerate source: y on an interface circle"))?;
    eval_branch(kernel, x, y, x_region, y_region)
}

pub fn eval_g(x: Point, y: Point, kernel: &TransmissionKernel) -> Result<SeriesValue<f64>> {
    eval_g_full(x, y, kernel).map(|e| SeriesValue {
        value: e.value,
        tail_bound: e.tail_value,
        terms_used: e.terms_used,
    })
}

/// ∂G/∂y, needed by the volume potentials.
pub fn eval_g_gradient_y(
    x: Point,
    y: Point,
    kernel: &TransmissionKernel,
) -> Result<SeriesValue<[f64; 2]>> {
    eval_g_full(x, y, kernel).map(|e| SeriesValue {
        value: e.grad_y,
        tail_bound: e.tail_grad,
        terms_used: e.terms_used,
    })
}

/// The strip branch formulas for a source at y1 > 1/2 with the source point
/// replaced by the origin: the H(x) of the strip↔disk correspondence.
fn h_aux(x: Point, x_region: RegionTag, kernel: &TransmissionKernel) -> Result<GreensEval> {
    eval_branch(
        kernel,
        x,
        Point::new(0.0, 0.0),
        x_region,
        RegionTag::Inclusion1,
    )
}

/// Executable bridge between the two kernels: for y in the upper disk and x
/// in strip coordinates,
///   G(Θ(x), y) = G̃(x, Θ(y)) − H(x) + (1+α)(1−β)/(1−αβ) · log|y|.
/// Returns |LHS − RHS| with the combined tail bound.
pub fn correspondence_check(
    x_strip: Point,
    y_disk: Point,
    strip_kernel: &TransmissionKernel,
    disk_kernel: &TransmissionKernel,
) -> Result<SeriesValue<f64>> {
    if strip_kernel.geometry != KernelGeometry::Strip
        || disk_kernel.geometry != KernelGeometry::Disk
    {
        return Err(Error::config(
            "correspondence_check needs a (strip, disk) kernel pair",
        ));
    }
    if strip_kernel.normalization != Normalization::Raw
        || disk_kernel.normalization != Normalization::Raw
    {
        return Err(Error::config(
            "correspondence identity holds in the raw normalization",
        ));
    }
    if disk_region(y_disk)? != RegionTag::Inclusion1 {
        return Err(Error::domain(
            "correspondence_check: y must lie in the upper disk",
        ));
    }
    let params = &disk_kernel.params;
    let alpha = params.alpha();
    let beta = params.beta();

    let x_region = strip_region(x_strip)?;
    let tx = crate::geometry::theta(x_strip)?;
    let ty = crate::geometry::theta(y_disk)?;
    let lhs = eval_g_full_in(tx, x_region, y_disk, disk_kernel)?;
    let g_t = eval_gtilde_full_in(x_strip, x_region, ty, strip_kernel)?;
    let h = h_aux(x_strip, x_region, strip_kernel)?;
    let c = (1.0 + alpha) * (1.0 - beta) / (1.0 - alpha * beta);
    let rhs = g_t.value - h.value + c * y_disk.norm().ln();
    Ok(SeriesValue {
        value: (lhs.value - rhs).abs(),
        tail_bound: lhs.tail_value + g_t.tail_value + h.tail_value,
        terms_used: lhs.terms_used + g_t.terms_used + h.terms_used,
    })
}

/// (1/2π) ∮_{|x−y|=ε} ∂_ν G ds by n-point trapezoid quadrature in the raw
/// normalization (→ 1 as ε → 0); with the physical kernel the weighted
/// charge ∮ a ∂_ν G ds equals 1 instead.
pub fn contour_charge(y: Point, eps: f64, n: usize, kernel: &TransmissionKernel) -> Result<f64> {
    let mut acc = 0.0;
    let physical = kernel.normalization == Normalization::Physical;
    for s in 0..n {
        let phi = std::f64::consts::TAU * (s as f64) / (n as f64);
        let x = Point::new(y.x1 + eps * phi.cos(), y.x2 + eps * phi.sin());
        let e = match kernel.geometry {
            KernelGeometry::Strip => eval_gtilde_full(x, y, kernel)?,
            KernelGeometry::Disk => eval_g_full(x, y, kernel)?,
        };
        let a = if physical {
            let reg = match kernel.geometry {
                KernelGeometry::Strip => strip_region(x)?,
                KernelGeometry::Disk => disk_region(x)?,
            };
            kernel.params.coefficient(reg)
        } else {
            1.0
        };
        acc += a * (e.grad_x[0] * phi.cos() + e.grad_x[1] * phi.sin());
    }
    let ds = std::f64::consts::TAU * eps / (n as f64);
    if physical {
        Ok(acc * ds)
    } else {
        Ok(acc * ds / (2.0 * std::f64::consts::PI))
    }
}
