//! The explicit piecewise solution families for the tangent-disk geometry:
//! evaluation of Ψ_j and the real solutions u_j (even in x1) / v_j (odd in
//! x1), their gradients, their traces on the outer circle |x| = R0, and the
//! derivative-bound audit.
//!
//! Every branch formula is generated from the image construction on the
//! strip (seed φ(w) = w^{-j}, w = i/z): with P_j(m) = z^j/(i + m z)^j and
//! Q_j(m) = z^j/(-i + m z)^j, contrasts α, β, the reflection sign
//! `refl` (−1 for the even family, +1 for the odd family) and s = (−1)^j,
//!
//!   𝔅1: Ψ_j = (1−α) Σ_{k≥0} (αβ)^k [ P_j(2k) + refl·β·s·P_j(2k+1) ]
//!   𝔅0: Ψ_j = (−iz)^j + Σ_{k≥1} (αβ)^k [ P_j(2k) + s·Q_j(2k) ]
//!              + refl Σ_{k≥0} (αβ)^k [ α·Q_j(2k+1) + β·s·P_j(2k+1) ]
//!   𝔅2: Ψ_j = (1−β) Σ_{k≥0} (αβ)^k [ s·Q_j(2k) + refl·α·Q_j(2k+1) ]
//!
//! and u_j = R0^{-j} Re Ψ_j (even family), v_j = R0^{-j} Im Ψ̃_j (odd
//! family). At β = α the even family reduces to the classical symmetric
//! formulas term by term. Value and flux continuity across both circles are
//! enforced by construction and rechecked in the test suite; this executable
//! check is what pins the branch signs.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coeffmatrix::{self, CoeffVector};
use crate::error::Error;
use crate::geometry::{classify, DiskGeometry, Point, RegionTag, DEFAULT_BAND};
use crate::series::{sum_geometric, SeriesValue, TruncationPolicy};
use crate::Result;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which construction the basis function comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// The a0 = b0 construction (contrast α only).
    Symmetric,
    /// The general (a0, b0) construction (contrasts α and β).
    General,
}

/// Parity of the solution in x1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

/// Identifies one basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisId {
    pub family: Family,
    pub parity: Parity,
    pub j: usize,
}

impl BasisId {
    pub fn symmetric(parity: Parity, j: usize) -> Self {
        BasisId {
            family: Family::Symmetric,
            parity,
            j,
        }
    }

    pub fn general(parity: Parity, j: usize) -> Self {
        BasisId {
            family: Family::General,
            parity,
            j,
        }
    }
}

/// Physical configuration: coefficients in the two disks and the outer
/// radius. Contrasts are always recomputed from the coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    pub a0: f64,
    pub b0: f64,
    pub r0: f64,
}

impl MediumParams {
    pub fn new(a0: f64, b0: f64, r0: f64) -> Result<Self> {
        if !(a0 > 0.0 && a0.is_finite() && b0 > 0.0 && b0.is_finite()) {
            return Err(Error::config(format!(
                "coefficients must be positive, got a0={a0}, b0={b0}"
            )));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::config(format!("outer radius must be positive, got {r0}")));
        }
        Ok(MediumParams { a0, b0, r0 })
    }

    /// α = (a0 − 1)/(a0 + 1) ∈ (−1, 1).
    pub fn alpha(&self) -> f64 {
        (self.a0 - 1.0) / (self.a0 + 1.0)
    }

    /// β = (b0 − 1)/(b0 + 1) ∈ (−1, 1).
    pub fn beta(&self) -> f64 {
        (self.b0 - 1.0) / (self.b0 + 1.0)
    }

    pub fn is_symmetric(&self) -> bool {
        (self.a0 - self.b0).abs() < 1e-14
    }

    /// The coefficient a(x) of the region.
    pub fn coefficient(&self, tag: RegionTag) -> f64 {
        match tag {
            RegionTag::Inclusion1 | RegionTag::Interface1 => self.a0,
            RegionTag::Inclusion2 | RegionTag::Interface2 => self.b0,
            RegionTag::Matrix => 1.0,
        }
    }

    /// Matrix operations require R0 > 2 (the dominance guarantee).
    pub fn require_r0_gt2(&self) -> Result<()> {
        if self.r0 <= 2.0 {
            return Err(Error::config(format!(
                "R0 = {} not supported: column dominance is only guaranteed for R0 > 2",
                self.r0
            )));
        }
        Ok(())
    }

    /// The constant value of u_0 (trace and interior alike):
    /// (1−α)(1−β)/(1−αβ); equals 1/a0 when b0 = a0.
    pub fn u0_constant(&self) -> f64 {
        let (a, b) = (self.alpha(), self.beta());
        (1.0 - a) * (1.0 - b) / (1.0 - a * b)
    }
}

fn check_family(id: BasisId, params: &MediumParams) -> Result<()> {
    if id.family == Family::Symmetric && !params.is_symmetric() {
        return Err(Error::config(format!(
            "symmetric family requested with a0 = {} ≠ b0 = {}",
            params.a0, params.b0
        )));
    }
    Ok(())
}

fn refl_sign(parity: Parity) -> f64 {
    match parity {
        Parity::Even => -1.0,
        Parity::Odd => 1.0,
    }
}

/// Region the evaluation point must be assigned to; interface tags are not
/// valid evaluation regions.
fn eval_region(z: Point) -> Result<RegionTag> {
    let reg = classify(z, DiskGeometry::canonical(), DEFAULT_BAND);
    match reg.tag {
        RegionTag::Interface1 | RegionTag::Interface2 => Err(Error::domain(
            "point on an interface: one-sided evaluation requires an explicit region hint",
        )),
        t => Ok(t),
    }
}

fn side_of(tag: RegionTag) -> Result<RegionTag> {
    match tag {
        RegionTag::Inclusion1 | RegionTag::Inclusion2 | RegionTag::Matrix => Ok(tag),
        _ => Err(Error::domain(
            "interface tag is not a one-sided evaluation region",
        )),
    }
}

// A mode is the Möbius factor whose j-th power forms one series term:
// w_m = z/(i + m z) for P-type, z/(-i + m z) for Q-type. `den2` is the
// squared denominator needed by the derivative.
#[derive(Clone, Copy)]
struct Mode {
    w: Complex64,
    inv_den2: Complex64,
}

fn p_mode(z: Complex64, m: usize) -> Mode {
    let den = I + (m as f64) * z;
    Mode {
        w: z / den,
        inv_den2: 1.0 / (den * den),
    }
}

fn q_mode(z: Complex64, m: usize) -> Mode {
    let den = -I + (m as f64) * z;
    Mode {
        w: z / den,
        inv_den2: 1.0 / (den * den),
    }
}

impl Mode {
    fn pow(&self, j: usize) -> Complex64 {
        self.w.powu(j as u32)
    }

    /// d/dz of w^j = j·(±i)·z^{j-1}/den^{j+1}; equivalently
    /// j·w^{j-1}·(dw/dz) with dw/dz = ±i/den² (sign matches the mode type,
    /// already carried by inv_den2 usage below).
    fn pow_deriv(&self, j: usize, type_sign: f64) -> Complex64 {
        if j == 0 {
            return Complex64::new(0.0, 0.0);
        }
        (j as f64) * type_sign * I * self.w.powu(j as u32 - 1) * self.inv_den2
    }
}

/// Value and complex derivative of Ψ_j in a given region, with certified
/// tail bounds for both.
struct PsiEval {
    value: Complex64,
    deriv: Complex64,
    tail_value: f64,
    tail_deriv: f64,
    terms_used: usize,
}

fn psi_eval(id: BasisId, z: Complex64, region: RegionTag, params: &MediumParams, trunc: TruncationPolicy) -> Result<PsiEval> {
    check_family(id, params)?;
    let j = id.j;
    let alpha = params.alpha();
    let beta = params.beta();
    let q = alpha * beta;
    let refl = refl_sign(id.parity);
    let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };

    if z.norm() <= crate::geometry::POLE_TOL {
        return Err(Error::domain("Ψ evaluation at the cusp (origin)"));
    }

    type Acc = (Complex64, Complex64); // (value, derivative)
    let zero: Acc = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));

    // bracket(k) -> ((value, deriv), envelope) where envelope bounds BOTH the
    // value and the derivative magnitude of the k-th bracket. Individual mode
    // magnitudes are monotone in the shift within each region, so the
    // envelope is a valid geometric-tail certificate.
    let bracket_env = |vals: &[(Complex64, Complex64)]| -> f64 {
        vals.iter()
            .map(|(v, d)| v.norm().max(d.norm()))
            .sum::<f64>()
    };

    let (sum, tails, used): (Acc, (f64, f64), usize) = match region {
        RegionTag::Inclusion1 => {
            let c = 1.0 - alpha;
            let (acc, tail, used) = sum_geometric(
                q,
                trunc,
                |k| {
                    let p0 = p_mode(z, 2 * k);
                    let p1 = p_mode(z, 2 * k + 1);
                    let t0 = (p0.pow(j), p0.pow_deriv(j, 1.0));
                    let t1 = (p1.pow(j), p1.pow_deriv(j, 1.0));
                    let w = refl * beta * s;
                    let val = c * (t0.0 + w * t1.0);
                    let der = c * (t0.1 + w * t1.1);
                    ((val, der), c.abs() * bracket_env(&[t0, (w * t1.0, w * t1.1)]))
                },
                zero,
                |acc, t, qk| {
                    acc.0 += qk * t.0;
                    acc.1 += qk * t.1;
                },
            );
            (acc, (tail, tail), used)
        }
        RegionTag::Inclusion2 => {
            let c = 1.0 - beta;
            let (acc, tail, used) = sum_geometric(
                q,
                trunc,
                |k| {
                    let q0 = q_mode(z, 2 * k);
                    let q1 = q_mode(z, 2 * k + 1);
                    let t0 = (s * q0.pow(j), s * q0.pow_deriv(j, -1.0));
                    let w = refl * alpha;
                    let t1 = (w * q1.pow(j), w * q1.pow_deriv(j, -1.0));
                    let val = c * (t0.0 + t1.0);
                    let der = c * (t0.1 + t1.1);
                    ((val, der), c.abs() * bracket_env(&[t0, t1]))
                },
                zero,
                |acc, t, qk| {
                    acc.0 += qk * t.0;
                    acc.1 += qk * t.1;
                },
            );
            (acc, (tail, tail), used)
        }
        RegionTag::Matrix => {
            let (acc, tail, used) = sum_geometric(
                q,
                trunc,
                |k| {
                    let mut val = Complex64::new(0.0, 0.0);
                    let mut der = Complex64::new(0.0, 0.0);
                    let mut env = 0.0;
                    if k >= 1 {
                        let p = p_mode(z, 2 * k);
                        let qq = q_mode(z, 2 * k);
                        let tp = (p.pow(j), p.pow_deriv(j, 1.0));
                        let tq = (s * qq.pow(j), s * qq.pow_deriv(j, -1.0));
                        val += tp.0 + tq.0;
                        der += tp.1 + tq.1;
                        env += bracket_env(&[tp, tq]);
                    }
                    let q1 = q_mode(z, 2 * k + 1);
                    let p1 = p_mode(z, 2 * k + 1);
                    let wa = refl * alpha;
                    let wb = refl * beta * s;
                    let ta = (wa * q1.pow(j), wa * q1.pow_deriv(j, -1.0));
                    let tb = (wb * p1.pow(j), wb * p1.pow_deriv(j, 1.0));
                    val += ta.0 + tb.0;
                    der += ta.1 + tb.1;
                    env += bracket_env(&[ta, tb]);
                    ((val, der), env)
                },
                zero,
                |acc, t, qk| {
                    acc.0 += qk * t.0;
                    acc.1 += qk * t.1;
                },
            );
            // leading entire term (−i z)^j
            let lead = (-I * z).powu(j as u32);
            let lead_d = if j == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                (j as f64) * -I * (-I * z).powu(j as u32 - 1)
            };
            ((acc.0 + lead, acc.1 + lead_d), (tail, tail), used)
        }
        _ => return Err(Error::domain("interface tag passed to psi_eval")),
    };

    Ok(PsiEval {
        value: sum.0,
        deriv: sum.1,
        tail_value: tails.0,
        tail_deriv: tails.1,
        terms_used: used,
    })
}

/// Evaluate Ψ_j (complex) at z, dispatching on the region of z.
pub fn eval_psi(
    id: BasisId,
    z: Point,
    params: &MediumParams,
    trunc: TruncationPolicy,
) -> Result<SeriesValue<Complex64>> {
    let region = eval_region(z)?;
    eval_psi_in(id, z, region, params, trunc)
}

/// Evaluate Ψ_j using an explicit one-sided region choice.
pub fn eval_psi_in(
    id: BasisId,
    z: Point,
    region: RegionTag,
    params: &MediumParams,
    trunc: TruncationPolicy,
) -> Result<SeriesValue<Complex64>> {
    let e = psi_eval(id, z.to_complex(), side_of(region)?, params, trunc)?;
    Ok(SeriesValue {
        value: e.value,
        tail_bound: e.tail_value,
        terms_used: e.terms_used,
    })
}

/// u_j(x) = R0^{-j} Re Ψ_j (even parity) or v_j(x) = R0^{-j} Im Ψ̃_j (odd).
pub fn eval_u(
    id: BasisId,
    x: Point,
    params: &MediumParams,
    trunc: TruncationPolicy,
) -> Result<SeriesValue<f64>> {
    let region = eval_region(x)?;
    eval_u_in(id, x, region, params, trunc)
}

pub fn eval_u_in(
    id: BasisId,
    x: Point,
    region: RegionTag,
    params: &MediumParams,
    trunc: TruncationPolicy,
) -> Result<SeriesValue<f64>> {
    let e = psi_eval(id, x.to_complex(), side_of(region)?, params, trunc)?;
    let scale = params.r0.powi(-(id.j as i32));
    let value = match id.parity {
        Parity::Even => e.value.re,
        Parity::Odd => e.value.im,
    };
    Ok(SeriesValue {
        value: value * scale,
        tail_bound: e.tail_value * scale,
        terms_used: e.terms_used,
    })
}

/// Gradient of u_j by termwise complex differentiation:
/// ∇(Re Ψ) = (Re Ψ', −Im Ψ'), ∇(Im Ψ) = (Im Ψ', Re Ψ').
pub fn eval_u_gradient(
    id: BasisId,
    x: Point,
    params: &MediumParams,
    trunc: TruncationPolicy,
) -> Result<SeriesValue<[f64; 2]>> {
    let region = eval_region(x)?;
    eval_u_gradient_in(id, x, region, params, trunc)
}

pub fn eval_u_gradient_in(
    id: BasisId,
    x: Point,
    region: RegionTag,
    params: &MediumParams,
    trunc: TruncationPolicy,
) -> Result<SeriesValue<[f64; 2]>> {
    let e = psi_eval(id, x.to_complex(), side_of(region)?, params, trunc)?;
    let scale = params.r0.powi(-(id.j as i32));
    let g = match id.parity {
        Parity::Even => [e.deriv.re * scale, -e.deriv.im * scale],
        Parity::Odd => [e.deriv.im * scale, e.deriv.re * scale],
    };
    Ok(SeriesValue {
        value: g,
        tail_bound: e.tail_deriv * scale,
        terms_used: e.terms_used,
    })
}

/// Closed-form trace of the symmetric even family on |x| = R0, as
/// coefficients over the trigonometric basis ê (constant 1, then
/// ê_{2l} = (−1)^l cos 2lθ, ê_{2l−1} = (−1)^{l−1} sin(2l−1)θ): column j of
/// the change-of-basis matrix. Column 0 is (u_0, 0, 0, ...) with the u_0
/// constant folded into the zeroth entry (constant-1 convention).
pub fn trace_fourier(
    id: BasisId,
    n_out: usize,
    params: &MediumParams,
    trunc: TruncationPolicy,
) -> Result<CoeffVector> {
    if id.family != Family::Symmetric || id.parity != Parity::Even {
        return Err(Error::config(
            "closed-form traces exist only for the symmetric even family; \
             use numerical_trace_fourier",
        ));
    }
    check_family(id, params)?;
    params.require_r0_gt2()?;
    let alpha = params.alpha();
    let mut entries = vec![0.0; n_out];
    if id.j == 0 {
        if n_out > 0 {
            entries[0] = params.u0_constant();
        }
    } else {
        for (m, e) in entries.iter_mut().enumerate() {
            let b = coeffmatrix::b_entry(m, id.j, alpha, params.r0, trunc)?;
            *e = b.value + if m == id.j { 1.0 } else { 0.0 };
        }
    }
    Ok(CoeffVector::new(entries, Parity::Even))
}

/// Trapezoidal Fourier analysis of the trace of u_j / v_j on |x| = R0 in the
/// parity-matched convention (ê for even, ẽ for odd with
/// ẽ_{2m} = (−1)^m sin 2mθ, ẽ_{2m+1} = (−1)^{m+1} cos (2m+1)θ; ẽ_0 ≡ 0).
/// Spectrally accurate for these smooth periodic traces.
pub fn numerical_trace_fourier(
    id: BasisId,
    params: &MediumParams,
    n_quad: usize,
    n_out: usize,
    trunc: TruncationPolicy,
) -> Result<CoeffVector> {
    if n_quad < 256 || !n_quad.is_power_of_two() {
        return Err(Error::config(format!(
            "n_quad must be a power of two ≥ 256, got {n_quad}"
        )));
    }
    let vals: Vec<f64> = (0..n_quad)
        .map(|sidx| {
            let th = std::f64::consts::TAU * (sidx as f64) / (n_quad as f64);
            let x = Point::new(params.r0 * th.cos(), params.r0 * th.sin());
            eval_u_in(id, x, RegionTag::Matrix, params, trunc).map(|sv| sv.value)
        })
        .collect::<Result<_>>()?;
    Ok(project_parity_coeffs(&vals, id.parity, n_out))
}

/// Projects uniform-grid samples (θ_s = 2πs/n) onto the parity convention.
pub(crate) fn project_parity_coeffs(vals: &[f64], parity: Parity, n_out: usize) -> CoeffVector {
    let n = vals.len();
    let mut entries = vec![0.0; n_out];
    for (m, e) in entries.iter_mut().enumerate() {
        let (freq, is_cos, sign) = parity_mode(parity, m);
        if freq == 0 {
            if is_cos {
                *e = vals.iter().sum::<f64>() / n as f64;
            }
            continue;
        }
        let mut acc = 0.0;
        for (sidx, &v) in vals.iter().enumerate() {
            let th = std::f64::consts::TAU * (sidx as f64) * (freq as f64) / (n as f64);
            acc += v * if is_cos { th.cos() } else { th.sin() };
        }
        *e = sign * 2.0 * acc / n as f64;
    }
    CoeffVector::new(entries, parity)
}

/// (frequency, cos?, sign) of the m-th basis element of a parity convention.
pub(crate) fn parity_mode(parity: Parity, m: usize) -> (usize, bool, f64) {
    match parity {
        Parity::Even => {
            if m == 0 {
                (0, true, 1.0)
            } else if m.is_multiple_of(2) {
                let l = m / 2;
                (m, true, if l.is_multiple_of(2) { 1.0 } else { -1.0 })
            } else {
                let l = m.div_ceil(2);
                (m, false, if (l - 1).is_multiple_of(2) { 1.0 } else { -1.0 })
            }
        }
        Parity::Odd => {
            if m == 0 {
                (0, false, 0.0) // ẽ_0 is the zero function
            } else if m.is_multiple_of(2) {
                let half = m / 2;
                (m, false, if half.is_multiple_of(2) { 1.0 } else { -1.0 })
            } else {
                let half = (m - 1) / 2;
                (m, true, if (half + 1).is_multiple_of(2) { 1.0 } else { -1.0 })
            }
        }
    }
}

/// Synthesize a parity-tagged coefficient vector back to θ-samples.
pub(crate) fn synth_parity_coeffs(coeffs: &CoeffVector, thetas: &[f64]) -> Vec<f64> {
    thetas
        .iter()
        .map(|&th| {
            let mut acc = 0.0;
            for (m, &c) in coeffs.entries.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let (freq, is_cos, sign) = parity_mode(coeffs.parity, m);
                let basis = if freq == 0 {
                    if is_cos {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    let a = th * freq as f64;
                    if is_cos {
                        a.cos()
                    } else {
                        a.sin()
                    }
                };
                acc += c * sign * basis;
            }
            acc
        })
        .collect()
}

/// Value and gradient of a finite combination Σ_j γ_j u_j (or v_j for odd
/// parity) evaluated by shared-mode Horner synthesis: each series term is a
/// power of one of a fixed set of Möbius modes, so the whole combination
/// collapses to polynomial evaluations P_γ(w) = Σ_j γ_j (w/R0)^j at those
/// modes. Exact same branch structure as `psi_eval`.
pub fn eval_combination_in(
    gamma: &[f64],
    parity: Parity,
    x: Point,
    region: RegionTag,
    params: &MediumParams,
    trunc: TruncationPolicy,
) -> Result<SeriesValue<(f64, [f64; 2])>> {
    let z = x.to_complex();
    if z.norm() <= crate::geometry::POLE_TOL {
        return Err(Error::domain("evaluation at the cusp (origin)"));
    }
    let region = side_of(region)?;
    let alpha = params.alpha();
    let beta = params.beta();
    let q = alpha * beta;
    let refl = refl_sign(parity);
    let r0 = params.r0;

    // Horner for P(w) = Σ γ_j (w/R0)^j and its derivative in w.
    let horner = |w: Complex64| -> (Complex64, Complex64) {
        let t = w / r0;
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &g in gamma.iter().rev() {
            dp = dp * t + p;
            p = p * t + g;
        }
        (p, dp / r0) // dP/dw
    };
    let gamma_l1: f64 = gamma.iter().map(|g| g.abs()).sum();

    // P_γ(w_m) with chain rule dw/dz for each mode type; `neg` evaluates at
    // −w (the (−1)^j z^j/(...)^j terms).
    let eval_p = |m: usize, neg: bool| -> (Complex64, Complex64) {
        let mode = p_mode(z, m);
        let w = if neg { -mode.w } else { mode.w };
        let (p, dp) = horner(w);
        let dwdz = I * mode.inv_den2 * if neg { -1.0 } else { 1.0 };
        (p, dp * dwdz)
    };
    let eval_q = |m: usize, neg: bool| -> (Complex64, Complex64) {
        let mode = q_mode(z, m);
        let w = if neg { -mode.w } else { mode.w };
        let (p, dp) = horner(w);
        let dwdz = -I * mode.inv_den2 * if neg { -1.0 } else { 1.0 };
        (p, dp * dwdz)
    };

    type Acc = (Complex64, Complex64);
    let zero: Acc = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    // |w| ≤ |z| ≤ R0 in each valid region, so |P_γ| ≤ Σ|γ_j|; envelope for
    // the derivative uses the same bound scaled by the mode derivative norm.
    let (acc, tail, used): (Acc, f64, usize) = match region {
        RegionTag::Inclusion1 => {
            let c = 1.0 - alpha;
            sum_geometric(
                q,
                trunc,
                |k| {
                    let a = eval_p(2 * k, false);
                    // (−1)^j β refl P(2k+1): evaluate at −w and scale
                    let b = eval_p(2 * k + 1, true);
                    let w = refl * beta;
                    let val = c * (a.0 + w * b.0);
                    let der = c * (a.1 + w * b.1);
                    let env = c.abs() * (1.0 + beta.abs()) * gamma_l1 * env_scale(&[a, b]);
                    ((val, der), env)
                },
                zero,
                |acc, t, qk| {
                    acc.0 += qk * t.0;
                    acc.1 += qk * t.1;
                },
            )
        }
        RegionTag::Inclusion2 => {
            let c = 1.0 - beta;
            sum_geometric(
                q,
                trunc,
                |k| {
                    let a = eval_q(2 * k, true); // (−1)^j Q(2k)
                    let b = eval_q(2 * k + 1, false);
                    let w = refl * alpha;
                    let val = c * (a.0 + w * b.0);
                    let der = c * (a.1 + w * b.1);
                    let env = c.abs() * (1.0 + alpha.abs()) * gamma_l1 * env_scale(&[a, b]);
                    ((val, der), env)
                },
                zero,
                |acc, t, qk| {
                    acc.0 += qk * t.0;
                    acc.1 += qk * t.1;
                },
            )
        }
        RegionTag::Matrix => {
            let (mut acc, tail, used) = sum_geometric(
                q,
                trunc,
                |k| {
                    let mut val = Complex64::new(0.0, 0.0);
                    let mut der = Complex64::new(0.0, 0.0);
                    let mut env = 0.0;
                    if k >= 1 {
                        let a = eval_p(2 * k, false);
                        let b = eval_q(2 * k, true);
                        val += a.0 + b.0;
                        der += a.1 + b.1;
                        env += 2.0 * gamma_l1 * env_scale(&[a, b]);
                    }
                    let a = eval_q(2 * k + 1, false);
                    let b = eval_p(2 * k + 1, true);
                    val += refl * (alpha * a.0 + beta * b.0);
                    der += refl * (alpha * a.1 + beta * b.1);
                    env += (alpha.abs() + beta.abs()) * gamma_l1 * env_scale(&[a, b]);
                    ((val, der), env)
                },
                zero,
                |acc, t, qk| {
                    acc.0 += qk * t.0;
                    acc.1 += qk * t.1;
                },
            );
            // leading P_γ(−i z)
            let (p, dp) = horner(-I * z);
            acc.0 += p;
            acc.1 += dp * -I;
            (acc, tail, used)
        }
        _ => unreachable!(),
    };

    let (value, grad) = match parity {
        Parity::Even => (acc.0.re, [acc.1.re, -acc.1.im]),
        Parity::Odd => (acc.0.im, [acc.1.im, acc.1.re]),
    };
    Ok(SeriesValue {
        value: (value, grad),
        tail_bound: tail,
        terms_used: used,
    })
}

// Derivative-envelope helper for the combination evaluator: values are
// already bounded by Σ|γ| (since |w| ≤ R0); the derivative pieces carry the
// mode factor, so take the max of 1 and the observed derivative magnitudes
// normalized by the value bound. Conservative but cheap.
fn env_scale(terms: &[(Complex64, Complex64)]) -> f64 {
    let mut m = 1.0f64;
    for (v, d) in terms {
        m = m.max(v.norm()).max(d.norm());
    }
    m
}

/// One row of the derivative-bound audit: the normalized ratio
/// max over samples of |D^m u_j| · R0^j / (j + |m|)^{|m|}.
#[derive(Debug, Clone)]
pub struct AuditRow {
    pub j: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub multi_index: (usize, usize),
    pub region: RegionTag,
    /// max ratio ≤ 10 × median ratio over the j range.
    pub pass: bool,
}

/// Audits |D^m u_j| ≤ C_m R0^{-j}(j+|m|)^{|m|} as a trend: the normalized
/// ratios over j must stay within 10× of their median (the constant C_m is
/// not specified by the theory). Derivatives of order |m| ≤ 3 are computed
/// by symbolic termwise differentiation of the branch series.
#[allow(clippy::too_many_arguments)]
pub fn derivative_bound_audit(
    family: Family,
    parity: Parity,
    j_max: usize,
    multi_index: (usize, usize),
    params: &MediumParams,
    region: RegionTag,
    samples: &[Point],
    trunc: TruncationPolicy,
) -> Result<AuditReport> {
    let order = multi_index.0 + multi_index.1;
    if order > 3 {
        return Err(Error::config("audit supports derivative orders ≤ 3"));
    }
    let region = side_of(region)?;
    let rows: Vec<AuditRow> = (0..=j_max)
        .into_par_iter()
        .map(|j| {
            let id = BasisId { family, parity, j };
            let mut worst = 0.0f64;
            for &x in samples {
                let d = nth_deriv_psi(id, x.to_complex(), region, order, params, trunc)?;
                // D1^p D2^q Re Ψ = Re(i^q Ψ^{(p+q)}); Im for the odd family.
                let rot = I.powu(multi_index.1 as u32);
                let v = match parity {
                    Parity::Even => (rot * d).re,
                    Parity::Odd => (rot * d).im,
                };
                worst = worst.max(v.abs());
            }
            // |D^m u_j| · R0^j = |Re(i^q Ψ^{(n)})|: the R0 factors cancel.
            let scale = ((j + order) as f64).powi(order as i32).max(1.0);
            Ok(AuditRow {
                j,
                ratio: worst / scale,
            })
        })
        .collect::<Result<_>>()?;
    let mut sorted: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let max = *sorted.last().unwrap();
    Ok(AuditReport {
        pass: max <= 10.0 * median.max(1e-300),
        rows,
        multi_index,
        region,
    })
}

// Symbolic n-th derivative of Ψ_j via monomial lists c·z^a·den^{-b}.
#[derive(Clone, Copy)]
struct Mono {
    c: Complex64,
    a: u32,
    b: u32,
}

fn mono_derivative(list: &[(Mono, f64)]) -> Vec<(Mono, f64)> {
    // f = c z^a den^{-b}, den = ±i + m z (m stored alongside):
    // f' = c a z^{a-1} den^{-b} − c b m z^a den^{-b-1}
    let mut out = Vec::with_capacity(list.len() * 2);
    for &(m, shift) in list {
        if m.a > 0 {
            out.push((
                Mono {
                    c: m.c * m.a as f64,
                    a: m.a - 1,
                    b: m.b,
                },
                shift,
            ));
        }
        if m.b > 0 && shift != 0.0 {
            out.push((
                Mono {
                    c: -m.c * m.b as f64 * shift,
                    a: m.a,
                    b: m.b + 1,
                },
                shift,
            ));
        }
    }
    out
}

fn mono_eval(list: &[(Mono, f64)], z: Complex64, den_sign: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(m, shift) in list {
        let den = Complex64::new(0.0, den_sign) + shift * z;
        acc += m.c * z.powu(m.a) * den.powu(m.b).inv();
    }
    acc
}

/// n-th complex derivative of Ψ_j at z (region branch fixed), truncated with
/// the same geometric policy as the value series.
fn nth_deriv_psi(
    id: BasisId,
    z: Complex64,
    region: RegionTag,
    n: usize,
    params: &MediumParams,
    trunc: TruncationPolicy,
) -> Result<Complex64> {
    if n == 0 {
        return psi_eval(id, z, region, params, trunc).map(|e| e.value);
    }
    if n == 1 {
        return psi_eval(id, z, region, params, trunc).map(|e| e.deriv);
    }
    let j = id.j as u32;
    let alpha = params.alpha();
    let beta = params.beta();
    let qr = alpha * beta;
    let refl = refl_sign(id.parity);
    let s = if id.j.is_multiple_of(2) { 1.0 } else { -1.0 };

    // n-th derivative of one P/Q-type term with shift m: start from
    // c z^j den^{-j} and differentiate n times.
    let deriv_term = |c: Complex64, shift: f64, den_sign: f64| -> Complex64 {
        let mut list = vec![(Mono { c, a: j, b: j }, shift)];
        for _ in 0..n {
            list = mono_derivative(&list);
        }
        mono_eval(&list, z, den_sign)
    };
    // n-th derivative of the entire leading term (−i z)^j.
    let lead_deriv = || -> Complex64 {
        if (j as usize) < n {
            return Complex64::new(0.0, 0.0);
        }
        let mut c = (-I).powu(j);
        for t in 0..n {
            c *= (j - t as u32) as f64;
        }
        c * z.powu(j - n as u32)
    };

    let mut acc = Complex64::new(0.0, 0.0);
    let mut qk = 1.0f64;
    let kmax = match trunc.mode {
        crate::series::TruncMode::FixedK => trunc.k_max,
        crate::series::TruncMode::TailTarget => trunc.k_max,
    };
    let mut last_mag = f64::INFINITY;
    for k in 0..=kmax {
        let term = match region {
            RegionTag::Inclusion1 => {
                (1.0 - alpha)
                    * (deriv_term(Complex64::new(1.0, 0.0), 2.0 * k as f64, 1.0)
                        + refl * beta * s * deriv_term(Complex64::new(1.0, 0.0), 2.0 * k as f64 + 1.0, 1.0))
            }
            RegionTag::Inclusion2 => {
                (1.0 - beta)
                    * (s * deriv_term(Complex64::new(1.0, 0.0), 2.0 * k as f64, -1.0)
                        + refl * alpha * deriv_term(Complex64::new(1.0, 0.0), 2.0 * k as f64 + 1.0, -1.0))
            }
            RegionTag::Matrix => {
                let mut t = Complex64::new(0.0, 0.0);
                if k >= 1 {
                    t += deriv_term(Complex64::new(1.0, 0.0), 2.0 * k as f64, 1.0)
                        + s * deriv_term(Complex64::new(1.0, 0.0), 2.0 * k as f64, -1.0);
                }
                t + refl
                    * (alpha * deriv_term(Complex64::new(1.0, 0.0), 2.0 * k as f64 + 1.0, -1.0)
                        + beta * s * deriv_term(Complex64::new(1.0, 0.0), 2.0 * k as f64 + 1.0, 1.0))
            }
            _ => unreachable!(),
        };
        acc += qk * term;
        let mag = qk.abs() * term.norm();
        if k > 2 && mag < trunc.tail_tol.max(1e-16) && mag <= last_mag {
            break;
        }
        last_mag = mag;
        qk *= qr;
        if qr == 0.0 && k >= 1 {
            break;
        }
    }
    if region == RegionTag::Matrix {
        acc += lead_deriv();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    fn params(a0: f64, b0: f64, r0: f64) -> MediumParams {
        MediumParams::new(a0, b0, r0).unwrap()
    }

    fn trunc() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn zero_contrast_kills_sum() {
        // a0 = 1 → α = 0: only the leading term survives in the matrix phase.
        let p = params(1.0, 1.0, 3.0);
        for j in [0usize, 1, 2, 5] {
            let id = BasisId::general(Parity::Even, j);
            let z = Point::new(1.3, -0.4);
            let got = eval_psi(id, z, &p, trunc()).unwrap();
            let lead = (-I * z.to_complex()).powu(j as u32);
            assert!((got.value - lead).norm() < 1e-15, "j={j}");
            assert_eq!(got.tail_bound, 0.0);
        }
    }

    #[test]
    fn u0_is_constant_everywhere() {
        let p = params(5.0, 0.5, 3.0);
        let expect = p.u0_constant();
        for (x, tag) in [
            (Point::new(0.3, 1.2), RegionTag::Inclusion1),
            (Point::new(-0.2, -0.8), RegionTag::Inclusion2),
            (Point::new(1.7, 0.4), RegionTag::Matrix),
        ] {
            let id = BasisId::general(Parity::Even, 0);
            let got = eval_u_in(id, x, tag, &p, trunc()).unwrap();
            assert!(
                (got.value - expect).abs() <= got.tail_bound + 1e-13,
                "{tag:?}: {} vs {expect}",
                got.value
            );
        }
        // symmetric: u_0 = 1/a0 on the circle
        let ps = params(2.0, 2.0, 3.0);
        let id = BasisId::symmetric(Parity::Even, 0);
        let x = Point::new(3.0, 0.0);
        let got = eval_u_in(id, x, RegionTag::Matrix, &ps, trunc()).unwrap();
        assert!((got.value - 0.5).abs() < 1e-13);
    }

    #[test]
    fn symmetric_family_requires_equal_coefficients() {
        let p = params(5.0, 0.5, 3.0);
        let id = BasisId::symmetric(Parity::Even, 2);
        assert!(eval_psi(id, Point::new(1.5, 0.3), &p, trunc()).is_err());
    }

    #[test]
    fn general_specializes_to_symmetric() {
        let p = params(4.0, 4.0, 3.0);
        let mut rng = SplitMix64::new(21);
        let mut checked = 0;
        while checked < 100 {
            let x = Point::new(rng.range(-2.5, 2.5), rng.range(-2.5, 2.5));
            if x.norm() < 0.05 {
                continue;
            }
            let j = (rng.next_u64() % 13) as usize;
            let reg = classify(x, DiskGeometry::canonical(), 1e-3).tag;
            if matches!(reg, RegionTag::Interface1 | RegionTag::Interface2) {
                continue;
            }
            for parity in [Parity::Even, Parity::Odd] {
                let vg = eval_psi_in(BasisId::general(parity, j), x, reg, &p, trunc()).unwrap();
                let vs = eval_psi_in(BasisId::symmetric(parity, j), x, reg, &p, trunc()).unwrap();
                assert!(
                    (vg.value - vs.value).norm() <= vg.tail_bound + vs.tail_bound + 1e-12,
                    "j={j} x=({}, {})",
                    x.x1,
                    x.x2
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn zero_contrast_even_j_is_harmonic_polynomial() {
        // α = 0, j = 2: trace value equals (−1)^{j/2} Re z^j / R0^j.
        let p = params(1.0, 1.0, 3.0);
        let id = BasisId::general(Parity::Even, 2);
        for s in 0..8 {
            let th = std::f64::consts::TAU * (s as f64 + 0.3) / 8.0;
            let x = Point::new(3.0 * th.cos(), 3.0 * th.sin());
            let got = eval_u_in(id, x, RegionTag::Matrix, &p, trunc()).unwrap();
            let z = x.to_complex();
            let expect = -(z * z).re / 9.0; // (−1)^{j/2} = −1 at j = 2
            assert!((got.value - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn transmission_value_and_flux() {
        // Both parities, j ≤ 20, three coefficient pairs; one-sided limits on
        // parametric interface samples. Residual ≤ max(1e−8, 2·tail).
        let geo = DiskGeometry::canonical();
        for (a0, b0) in [(5.0, 5.0), (5.0, 0.5), (0.2, 3.0)] {
            let p = params(a0, b0, 3.0);
            for parity in [Parity::Even, Parity::Odd] {
                for j in [0usize, 1, 2, 3, 7, 12, 20] {
                    let id = BasisId::general(parity, j);
                    for (c, inside, a_in) in [
                        (geo.center1(), RegionTag::Inclusion1, a0),
                        (geo.center2(), RegionTag::Inclusion2, b0),
                    ] {
                        for s in 0..16 {
                            let phi = std::f64::consts::TAU * (s as f64 + 0.37) / 16.0;
                            let x = Point::new(c.x1 + phi.cos(), c.x2 + phi.sin());
                            if x.norm() < 1e-3 {
                                continue;
                            }
                            let vi = eval_u_in(id, x, inside, &p, trunc()).unwrap();
                            let vo = eval_u_in(id, x, RegionTag::Matrix, &p, trunc()).unwrap();
                            let tol = (2.0 * (vi.tail_bound + vo.tail_bound)).max(1e-8);
                            assert!(
                                (vi.value - vo.value).abs() <= tol,
                                "value jump: a0={a0} b0={b0} {parity:?} j={j}"
                            );
                            let gi = eval_u_gradient_in(id, x, inside, &p, trunc()).unwrap();
                            let go =
                                eval_u_gradient_in(id, x, RegionTag::Matrix, &p, trunc()).unwrap();
                            let nu = [phi.cos(), phi.sin()];
                            let fi = a_in * (gi.value[0] * nu[0] + gi.value[1] * nu[1]);
                            let fo = go.value[0] * nu[0] + go.value[1] * nu[1];
                            let ftol = (2.0 * (gi.tail_bound + go.tail_bound)).max(1e-8);
                            assert!(
                                (fi - fo).abs() <= ftol,
                                "flux jump {:.2e}: a0={a0} b0={b0} {parity:?} j={j}",
                                (fi - fo).abs()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn parity_symmetry_in_x1() {
        let p = params(5.0, 0.5, 3.0);
        let mut rng = SplitMix64::new(9);
        let geo = DiskGeometry::canonical();
        let mut n = 0;
        while n < 60 {
            let x = Point::new(rng.range(0.05, 2.5), rng.range(-2.5, 2.5));
            let xr = Point::new(-x.x1, x.x2);
            let reg = classify(x, geo, 1e-3).tag;
            if matches!(reg, RegionTag::Interface1 | RegionTag::Interface2) {
                continue;
            }
            let j = (rng.next_u64() % 9) as usize;
            let even = eval_u_in(BasisId::general(Parity::Even, j), x, reg, &p, trunc()).unwrap();
            let even_r =
                eval_u_in(BasisId::general(Parity::Even, j), xr, reg, &p, trunc()).unwrap();
            assert!(
                (even.value - even_r.value).abs() <= 2.0 * (even.tail_bound + even_r.tail_bound) + 1e-13
            );
            let odd = eval_u_in(BasisId::general(Parity::Odd, j), x, reg, &p, trunc()).unwrap();
            let odd_r = eval_u_in(BasisId::general(Parity::Odd, j), xr, reg, &p, trunc()).unwrap();
            assert!(
                (odd.value + odd_r.value).abs() <= 2.0 * (odd.tail_bound + odd_r.tail_bound) + 1e-13
            );
            n += 1;
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = params(5.0, 0.5, 3.0);
        let mut rng = SplitMix64::new(31);
        let geo = DiskGeometry::canonical();
        let h = 1e-6;
        let mut n = 0;
        while n < 100 {
            let x = Point::new(rng.range(-2.5, 2.5), rng.range(-2.5, 2.5));
            if x.norm() < 0.05 {
                continue;
            }
            // keep clear of interfaces so the FD stencil stays one-sided
            let d1 = x.dist(geo.center1()) - 1.0;
            let d2 = x.dist(geo.center2()) - 1.0;
            if d1.abs() < 1e-4 || d2.abs() < 1e-4 {
                continue;
            }
            let reg = classify(x, geo, 0.0).tag;
            let j = (rng.next_u64() % 11) as usize;
            for parity in [Parity::Even, Parity::Odd] {
                let id = BasisId::general(parity, j);
                let g = eval_u_gradient_in(id, x, reg, &p, trunc()).unwrap();
                let up = eval_u_in(id, Point::new(x.x1 + h, x.x2), reg, &p, trunc()).unwrap();
                let um = eval_u_in(id, Point::new(x.x1 - h, x.x2), reg, &p, trunc()).unwrap();
                let vp = eval_u_in(id, Point::new(x.x1, x.x2 + h), reg, &p, trunc()).unwrap();
                let vm = eval_u_in(id, Point::new(x.x1, x.x2 - h), reg, &p, trunc()).unwrap();
                let fd = [
                    (up.value - um.value) / (2.0 * h),
                    (vp.value - vm.value) / (2.0 * h),
                ];
                let tol = (10.0 * g.tail_bound).max(1e-6 * (1.0 + fd[0].abs() + fd[1].abs()));
                assert!(
                    (g.value[0] - fd[0]).abs() <= tol && (g.value[1] - fd[1]).abs() <= tol,
                    "{parity:?} j={j} x=({},{}) grad={:?} fd={:?}",
                    x.x1,
                    x.x2,
                    g.value,
                    fd
                );
            }
            n += 1;
        }
    }

    #[test]
    fn constant_gradient_is_zero() {
        let p = params(5.0, 0.5, 3.0);
        let id = BasisId::general(Parity::Even, 0);
        let g = eval_u_gradient(id, Point::new(1.7, 0.4), &p, trunc()).unwrap();
        assert!(g.value[0].abs() < 1e-14 && g.value[1].abs() < 1e-14);
    }

    #[test]
    fn interior_harmonicity_fd_laplacian() {
        // 5-point Laplacian decays O(h²): Richardson slope ≥ 1.8 between
        // h = 1e−3 and 5e−4.
        let p = params(5.0, 0.5, 3.0);
        let id = BasisId::general(Parity::Even, 4);
        let x = Point::new(1.6, 0.9); // matrix interior, away from circles
        let lap = |h: f64| -> f64 {
            let c = eval_u(id, x, &p, trunc()).unwrap().value;
            let e = eval_u(id, Point::new(x.x1 + h, x.x2), &p, trunc()).unwrap().value;
            let w = eval_u(id, Point::new(x.x1 - h, x.x2), &p, trunc()).unwrap().value;
            let n = eval_u(id, Point::new(x.x1, x.x2 + h), &p, trunc()).unwrap().value;
            let s = eval_u(id, Point::new(x.x1, x.x2 - h), &p, trunc()).unwrap().value;
            ((e + w + n + s - 4.0 * c) / (h * h)).abs()
        };
        let l1 = lap(1e-3);
        let l2 = lap(5e-4);
        let slope = (l1 / l2).log2();
        assert!(slope > 1.8, "Richardson slope {slope}, lap {l1:.3e} → {l2:.3e}");
    }

    #[test]
    fn trace_fourier_examples() {
        let p = params(9.0, 9.0, 3.0); // α = 0.8
        // j = 0 → (1/a0, 0, 0, ...)
        let c0 = trace_fourier(BasisId::symmetric(Parity::Even, 0), 8, &p, trunc()).unwrap();
        assert!((c0.entries[0] - 1.0 / 9.0).abs() < 1e-15);
        assert!(c0.entries[1..].iter().all(|&e| e == 0.0));
        // α = 0 → unit vector
        let pz = params(1.0, 1.0, 3.0);
        let c3 = trace_fourier(BasisId::symmetric(Parity::Even, 3), 8, &pz, trunc()).unwrap();
        for (m, &e) in c3.entries.iter().enumerate() {
            let expect = if m == 3 { 1.0 } else { 0.0 };
            assert!((e - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn trace_fourier_matches_quadrature() {
        // Closed form vs 4096-point trapezoid, α = ±0.8, R0 = 3, j ≤ 30
        // (coarser j-grid here; the acceptance suite sweeps every j).
        for a0 in [9.0, 1.0 / 9.0] {
            let p = params(a0, a0, 3.0);
            for j in [1usize, 2, 5, 12, 30] {
                let id = BasisId::symmetric(Parity::Even, j);
                let closed = trace_fourier(id, 40, &p, trunc()).unwrap();
                let quad = numerical_trace_fourier(id, &p, 4096, 40, trunc()).unwrap();
                for m in 0..40 {
                    assert!(
                        (closed.entries[m] - quad.entries[m]).abs() < 1e-9,
                        "a0={a0} j={j} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn trace_fourier_matches_quadrature_legacy_grid() {
        let p = params(9.0, 9.0, 3.0);
        for j in [1usize, 2, 5, 12, 30] {
            let id = BasisId::symmetric(Parity::Even, j);
            let closed = trace_fourier(id, 40, &p, trunc()).unwrap();
            let quad = numerical_trace_fourier(id, &p, 4096, 40, trunc()).unwrap();
            for m in 0..40 {
                assert!(
                    (closed.entries[m] - quad.entries[m]).abs() < 1e-9,
                    "j={j} m={m}: {} vs {}",
                    closed.entries[m],
                    quad.entries[m]
                );
            }
        }
    }

    #[test]
    fn numerical_trace_quadrature_self_convergence() {
        let p = params(9.0, 9.0, 3.0);
        for j in [3usize, 11, 20] {
            let id = BasisId::symmetric(Parity::Even, j);
            let a = numerical_trace_fourier(id, &p, 2048, 30, trunc()).unwrap();
            let b = numerical_trace_fourier(id, &p, 4096, 30, trunc()).unwrap();
            for m in 0..30 {
                assert!((a.entries[m] - b.entries[m]).abs() < 1e-12, "j={j} m={m}");
            }
        }
    }

    #[test]
    fn general_family_off_diagonal_mass_decays() {
        // u_{2j} = (−1)^j cos 2jθ + O(R0^{−2j}) as R0 → ∞ at fixed j. At
        // fixed R0 the shift-1 image sets the rate in j: the off-diagonal
        // coefficient mass decays like (R0−1)^{-2j}.
        let p = params(5.0, 0.5, 3.0);
        let mut prev = f64::INFINITY;
        for j in [2usize, 4, 6] {
            let id = BasisId::general(Parity::Even, 2 * j);
            let c = numerical_trace_fourier(id, &p, 2048, 40, trunc()).unwrap();
            let off: f64 = c
                .entries
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != 2 * j)
                .map(|(_, e)| e.abs())
                .sum();
            assert!((c.entries[2 * j] - 1.0).abs() < 0.1, "diagonal ≈ 1");
            assert!(
                off < 3.0 * (p.r0 - 1.0).powi(-2 * j as i32),
                "j={j}: off mass {off:.3e}"
            );
            assert!(off < prev);
            prev = off;
        }
    }

    #[test]
    fn odd_trace_convention_leading_terms() {
        // v_j trace ≈ ẽ_j + small for the zero-ish contrast case.
        let p = params(1.0, 1.0, 3.0);
        for j in [1usize, 2, 3, 6] {
            let id = BasisId::general(Parity::Odd, j);
            let c = numerical_trace_fourier(id, &p, 1024, 16, trunc()).unwrap();
            for (m, &e) in c.entries.iter().enumerate() {
                let expect = if m == j { 1.0 } else { 0.0 };
                assert!((e - expect).abs() < 1e-12, "j={j} m={m} e={e}");
            }
        }
    }

    #[test]
    fn combination_evaluator_matches_per_basis_sum() {
        let p = params(5.0, 0.5, 3.0);
        let gamma = [0.4, -1.2, 0.0, 2.5, 0.3, -0.7];
        let mut rng = SplitMix64::new(77);
        let geo = DiskGeometry::canonical();
        let mut n = 0;
        while n < 40 {
            let x = Point::new(rng.range(-2.5, 2.5), rng.range(-2.5, 2.5));
            if x.norm() < 0.05 {
                continue;
            }
            let reg = classify(x, geo, 1e-6).tag;
            if matches!(reg, RegionTag::Interface1 | RegionTag::Interface2) {
                continue;
            }
            for parity in [Parity::Even, Parity::Odd] {
                let combo = eval_combination_in(&gamma, parity, x, reg, &p, trunc()).unwrap();
                let mut direct = 0.0;
                let mut dgrad = [0.0, 0.0];
                for (j, &g) in gamma.iter().enumerate() {
                    let id = BasisId::general(parity, j);
                    direct += g * eval_u_in(id, x, reg, &p, trunc()).unwrap().value;
                    let gr = eval_u_gradient_in(id, x, reg, &p, trunc()).unwrap().value;
                    dgrad[0] += g * gr[0];
                    dgrad[1] += g * gr[1];
                }
                assert!(
                    (combo.value.0 - direct).abs() < 1e-11,
                    "{parity:?} x=({}, {})",
                    x.x1,
                    x.x2
                );
                assert!(
                    (combo.value.1[0] - dgrad[0]).abs() < 1e-9
                        && (combo.value.1[1] - dgrad[1]).abs() < 1e-9
                );
            }
            n += 1;
        }
    }

    #[test]
    fn audit_trivial_cases() {
        let p = params(9.0, 9.0, 3.0);
        // m = 0, j = 0: ratio = |u_0| exactly.
        let samples = vec![Point::new(0.1, 0.4), Point::new(0.3, -0.5), Point::new(0.5, 0.1)];
        let rep = derivative_bound_audit(
            Family::Symmetric,
            Parity::Even,
            0,
            (0, 0),
            &p,
            RegionTag::Matrix,
            &samples,
            trunc(),
        )
        .unwrap();
        assert!((rep.rows[0].ratio - p.u0_constant().abs()).abs() < 1e-12);
    }

    #[test]
    fn audit_second_derivative_matches_fd() {
        let p = params(5.0, 0.5, 3.0);
        let id = BasisId::general(Parity::Even, 5);
        let x = Point::new(1.4, 0.8);
        let z = x.to_complex();
        let d2 = nth_deriv_psi(id, z, RegionTag::Matrix, 2, &p, trunc()).unwrap();
        let h = 1e-5;
        let f = |zz: Complex64| {
            psi_eval(id, zz, RegionTag::Matrix, &p, trunc())
                .unwrap()
                .deriv
        };
        let fd = (f(z + Complex64::new(h, 0.0)) - f(z - Complex64::new(h, 0.0))) / (2.0 * h);
        assert!((d2 - fd).norm() < 1e-5 * (1.0 + fd.norm()), "{d2} vs {fd}");
    }

    #[test]
    fn audit_trend_bounded() {
        let p = params(9.0, 9.0, 3.0);
        let samples = audit_samples(RegionTag::Matrix, 40);
        let rep = derivative_bound_audit(
            Family::Symmetric,
            Parity::Even,
            40,
            (1, 0),
            &p,
            RegionTag::Matrix,
            &samples,
            trunc(),
        )
        .unwrap();
        assert!(rep.pass, "derivative-bound trend failed");
    }

    /// Samples in closure(B_1) ∩ region, at distance ≥ 0.05 from the
    /// interfaces and the cusp.
    pub(crate) fn audit_samples(region: RegionTag, n: usize) -> Vec<Point> {
        let geo = DiskGeometry::canonical();
        let mut rng = SplitMix64::new(4);
        let mut samples = Vec::new();
        while samples.len() < n {
            let x = Point::new(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
            if x.norm() > 1.0 || x.norm() < 0.05 {
                continue;
            }
            let d1 = (x.dist(geo.center1()) - 1.0).abs();
            let d2 = (x.dist(geo.center2()) - 1.0).abs();
            if d1 < 0.05 || d2 < 0.05 {
                continue;
            }
            if classify(x, geo, 0.0).tag != region {
                continue;
            }
            samples.push(x);
        }
        samples
    }
}

