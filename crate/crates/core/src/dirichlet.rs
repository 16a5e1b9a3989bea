//! End-to-end Dirichlet solvers on the disk B_R0: the homogeneous problem by
//! Schauder-basis expansion of the boundary data (closed-form matrix for the
//! symmetric case, numerically built trace matrices for the general and
//! odd-parity families), the nonhomogeneous problem by volume potential plus
//! homogeneous correction, and the unequal-radius reduction through the
//! Möbius map.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{self, BasisId, Family, MediumParams, Parity};
use crate::coeffmatrix::{self, CoeffVector};
use crate::error::Error;
use crate::geometry::{
    classify, equal_radius_map, DiskGeometry, Exclusion, MobiusMap, Point, RegionTag, DEFAULT_BAND,
};
use crate::greens::{Normalization, TransmissionKernel};
use crate::linalg::DenseMatrix;
use crate::potential::{
    volume_solution, PiecewiseField, QuadratureSpec, UniformInclusionPotential,
};
use crate::series::TruncationPolicy;
use crate::Result;

/// Boundary data on |x| = R0 split by parity in x1, in the ê / ẽ coefficient
/// conventions of the basis module.
#[derive(Debug, Clone)]
pub struct FourierBoundary {
    pub even: CoeffVector,
    pub odd: CoeffVector,
    pub r0: f64,
}

impl FourierBoundary {
    pub fn from_parts(even: CoeffVector, odd: CoeffVector, r0: f64) -> Self {
        FourierBoundary { even, odd, r0 }
    }

    /// Purely even data from ê coefficients.
    pub fn even_modes(entries: Vec<f64>, r0: f64) -> Self {
        FourierBoundary {
            even: CoeffVector::new(entries, Parity::Even),
            odd: CoeffVector::new(vec![], Parity::Odd),
            r0,
        }
    }

    /// g(θ).
    pub fn eval(&self, theta: f64) -> f64 {
        basis::synth_parity_coeffs(&self.even, &[theta])[0]
            + basis::synth_parity_coeffs(&self.odd, &[theta])[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.even
            .entries
            .iter()
            .chain(self.odd.entries.iter())
            .fold(0.0f64, |m, &c| m.max(c.abs()))
    }
}

/// Spectral analysis of uniform θ-grid samples (θ_s = 2πs/n) into the
/// parity-split coefficient conventions. The split is exact on the grid:
/// g_e(θ) = (g(θ) + g(π−θ))/2 uses the reflection x1 ↦ −x1 of the circle.
pub fn analyze_boundary(samples: &[f64], r0: f64) -> Result<FourierBoundary> {
    let n = samples.len();
    if n < 256 || !n.is_power_of_two() {
        return Err(Error::config(format!(
            "boundary sampling needs a power-of-two grid ≥ 256, got {n}"
        )));
    }
    let mut even = vec![0.0; n];
    let mut odd = vec![0.0; n];
    for s in 0..n {
        // θ ↦ π − θ on the uniform grid: index s ↦ n/2 − s (mod n)
        let sr = (n + n / 2 - s) % n;
        even[s] = 0.5 * (samples[s] + samples[sr]);
        odd[s] = 0.5 * (samples[s] - samples[sr]);
    }
    let n_out = n / 4;
    Ok(FourierBoundary {
        even: basis::project_parity_coeffs(&even, Parity::Even, n_out),
        odd: basis::project_parity_coeffs(&odd, Parity::Odd, n_out),
        r0,
    })
}

/// One evaluated solution point.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub point: Point,
    pub region: RegionTag,
    pub u: f64,
    pub grad: [f64; 2],
    pub tail: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub even_n: usize,
    pub odd_n: usize,
    /// max-norm of (re-synthesized trace − g) on the residual grid
    pub residual_max: f64,
    /// residual exceeded tol but stayed within the 10·tol contract
    pub warning: bool,
    /// measured минимум of the numeric dominance gaps (NaN when closed form)
    pub dominance_gap_min: f64,
    pub stability_ratio: f64,
}

/// The particular part of a nonhomogeneous solution.
#[derive(Clone)]
#[allow(clippy::large_enum_variant)]
pub enum ParticularPart {
    /// Closed-form uniform-inclusion volume potentials.
    Uniform(Vec<UniformInclusionPotential>),
    /// Quadrature volume potential of a general field.
    Quadrature {
        field: PiecewiseField,
        kernel: TransmissionKernel,
        quad: QuadratureSpec,
    },
}

impl ParticularPart {
    fn eval_in(&self, x: Point, region: RegionTag) -> Result<(f64, [f64; 2], f64)> {
        match self {
            ParticularPart::Uniform(parts) => {
                let mut v = 0.0;
                let mut g = [0.0, 0.0];
                let mut tail = 0.0;
                for p in parts {
                    let e = p.eval_in(x, region)?;
                    v += e.value.0;
                    g[0] += e.value.1[0];
                    g[1] += e.value.1[1];
                    tail += e.tail_bound;
                }
                Ok((v, g, tail))
            }
            ParticularPart::Quadrature {
                field,
                kernel,
                quad,
            } => {
                let v = volume_solution(x, field, None, None, kernel, *quad)?;
                // gradient by central differences (quadrature path is the
                // oracle-grade route; the closed-form path carries exact
                // gradients)
                let h = 1e-5;
                let vxp = volume_solution(Point::new(x.x1 + h, x.x2), field, None, None, kernel, *quad)?;
                let vxm = volume_solution(Point::new(x.x1 - h, x.x2), field, None, None, kernel, *quad)?;
                let vyp = volume_solution(Point::new(x.x1, x.x2 + h), field, None, None, kernel, *quad)?;
                let vym = volume_solution(Point::new(x.x1, x.x2 - h), field, None, None, kernel, *quad)?;
                Ok((
                    v.value,
                    [
                        (vxp.value - vxm.value) / (2.0 * h),
                        (vyp.value - vym.value) / (2.0 * h),
                    ],
                    v.tail_bound + 1e-6,
                ))
            }
        }
    }
}

/// A solution represented as coefficients over the exact solution families
/// (plus an optional particular part).
#[derive(Clone)]
pub struct SeriesSolution {
    pub even: CoeffVector,
    pub odd: CoeffVector,
    pub params: MediumParams,
    pub trunc: TruncationPolicy,
    pub particular: Option<ParticularPart>,
    pub report: SolveReport,
}

impl SeriesSolution {
    pub fn zero(params: MediumParams) -> Self {
        SeriesSolution {
            even: CoeffVector::new(vec![], Parity::Even),
            odd: CoeffVector::new(vec![], Parity::Odd),
            params,
            trunc: TruncationPolicy::default(),
            particular: None,
            report: SolveReport::default(),
        }
    }

    /// Value and gradient at one point with an explicit region.
    pub fn eval_in(&self, x: Point, region: RegionTag) -> Result<FieldSample> {
        let mut u = 0.0;
        let mut grad = [0.0, 0.0];
        let mut tail = 0.0;
        if !self.even.entries.is_empty() {
            let e = basis::eval_combination_in(
                &self.even.entries,
                Parity::Even,
                x,
                region,
                &self.params,
                self.trunc,
            )?;
            u += e.value.0;
            grad[0] += e.value.1[0];
            grad[1] += e.value.1[1];
            tail += e.tail_bound;
        }
        if !self.odd.entries.is_empty() {
            let e = basis::eval_combination_in(
                &self.odd.entries,
                Parity::Odd,
                x,
                region,
                &self.params,
                self.trunc,
            )?;
            u += e.value.0;
            grad[0] += e.value.1[0];
            grad[1] += e.value.1[1];
            tail += e.tail_bound;
        }
        if let Some(p) = &self.particular {
            let (v, g, t) = p.eval_in(x, region)?;
            u += v;
            grad[0] += g[0];
            grad[1] += g[1];
            tail += t;
        }
        Ok(FieldSample {
            point: x,
            region,
            u,
            grad,
            tail,
        })
    }

    pub fn eval(&self, x: Point) -> Result<FieldSample> {
        let region = classify(x, DiskGeometry::canonical(), DEFAULT_BAND);
        match region.tag {
            RegionTag::Interface1 | RegionTag::Interface2 => Err(Error::domain(
                "evaluation on an interface requires a region hint",
            )),
            t => self.eval_in(x, t),
        }
    }

    /// Trace samples on |x| = R0·scale.
    pub fn trace_samples(&self, n: usize, scale: f64) -> Result<Vec<f64>> {
        (0..n)
            .into_par_iter()
            .map(|s| {
                let th = std::f64::consts::TAU * (s as f64) / (n as f64);
                let r = self.params.r0 * scale;
                self.eval_in(Point::new(r * th.cos(), r * th.sin()), RegionTag::Matrix)
                    .map(|f| f.u)
            })
            .collect()
    }
}

/// Batch evaluation; points within the classification band of an interface
/// are reported with the inclusion-side value.
pub fn evaluate_solution(sol: &SeriesSolution, pts: &[Point]) -> Result<Vec<FieldSample>> {
    pts.par_iter()
        .map(|&p| {
            let tag = match classify(p, DiskGeometry::canonical(), DEFAULT_BAND).tag {
                RegionTag::Interface1 => RegionTag::Inclusion1,
                RegionTag::Interface2 => RegionTag::Inclusion2,
                t => t,
            };
            sol.eval_in(p, tag)
        })
        .collect()
}

// Trace matrix of a family over its parity convention, built column by
// column from circle quadrature. Returns (matrix over indices
// start..=n, start, min dominance gap).
fn numeric_family_matrix(
    family: Family,
    parity: Parity,
    n: usize,
    params: &MediumParams,
    trunc: TruncationPolicy,
) -> Result<(DenseMatrix, usize, f64)> {
    let start = match parity {
        Parity::Even => 0,
        Parity::Odd => 1, // the odd convention has no constant mode
    };
    let dim = n + 1 - start;
    let n_quad = (8 * (n + 1)).next_power_of_two().max(2048);
    let cols: Vec<CoeffVector> = (start..=n)
        .into_par_iter()
        .map(|j| {
            basis::numerical_trace_fourier(
                BasisId { family, parity, j },
                params,
                n_quad,
                n + 1,
                trunc,
            )
        })
        .collect::<Result<_>>()?;
    let mut m = DenseMatrix::zeros(dim);
    for (cj, col) in cols.iter().enumerate() {
        for l in start..=n {
            m.set(l - start, cj, col.entries[l]);
        }
    }
    let mut gap_min = f64::INFINITY;
    for j in 0..dim {
        let mut off = 0.0;
        for l in 0..dim {
            if l != j {
                off += m.at(l, j).abs();
            }
        }
        gap_min = gap_min.min(m.at(j, j).abs() - off);
    }
    Ok((m, start, gap_min))
}

fn significant_tail_cut(entries: &[f64], tol: f64) -> usize {
    let mut cut = entries.len();
    while cut > 0 && entries[cut - 1].abs() <= tol {
        cut -= 1;
    }
    cut
}

/// Homogeneous Dirichlet solve: expand g in the solution-family traces.
/// Symmetric coefficients use the closed-form matrix; the general and odd
/// families use numerically built trace matrices with measured dominance.
/// The re-synthesized trace must match g within 10·tol in max norm (a
/// residual in (tol, 10·tol] sets the warning flag).
pub fn solve_homogeneous(
    g: &FourierBoundary,
    params: &MediumParams,
    tol: f64,
) -> Result<SeriesSolution> {
    if (g.r0 - params.r0).abs() > 1e-12 {
        return Err(Error::config("boundary data radius differs from params.r0"));
    }
    params.require_r0_gt2()?;
    let trunc = TruncationPolicy::tail_target((tol * 1e-3).min(1e-12));
    let mut report = SolveReport {
        dominance_gap_min: f64::NAN,
        ..Default::default()
    };

    // even part
    let even_cut = significant_tail_cut(&g.even.entries, tol * 1e-3);
    let even = if even_cut == 0 {
        CoeffVector::new(vec![], Parity::Even)
    } else if params.is_symmetric() {
        let gv = CoeffVector::new(g.even.entries[..even_cut].to_vec(), Parity::Even)
            .with_weight(g.even.s_weight);
        let (a, rep) = coeffmatrix::expand_boundary(&gv, params, tol.min(1e-6))?;
        report.even_n = rep.n;
        report.stability_ratio = rep.stability_ratio;
        a
    } else {
        let margin = (tol.max(1e-15).ln() / (params.r0 - 1.0).recip().ln()).abs().ceil() as usize;
        let n = (even_cut - 1 + margin.max(8)).min(220);
        let (m, start, gap) = numeric_family_matrix(Family::General, Parity::Even, n, params, trunc)?;
        report.dominance_gap_min = gap;
        report.even_n = n;
        let mut rhs = vec![0.0; n + 1 - start];
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = g.even.entries.get(i + start).copied().unwrap_or(0.0);
        }
        let sol = m.solve(&rhs).ok_or_else(|| {
            Error::convergence("general-family trace matrix is singular", f64::NAN)
        })?;
        CoeffVector::new(sol, Parity::Even)
    };

    // odd part
    let odd_cut = significant_tail_cut(&g.odd.entries, tol * 1e-3);
    let odd = if odd_cut <= 1 && g.odd.entries.iter().all(|&c| c.abs() <= tol * 1e-3) {
        CoeffVector::new(vec![], Parity::Odd)
    } else {
        let margin = (tol.max(1e-15).ln() / (params.r0 - 1.0).recip().ln()).abs().ceil() as usize;
        let n = (odd_cut.max(2) - 1 + margin.max(8)).min(220);
        let (m, start, gap) = numeric_family_matrix(Family::General, Parity::Odd, n, params, trunc)?;
        report.dominance_gap_min = report.dominance_gap_min.min(gap);
        report.odd_n = n;
        let mut rhs = vec![0.0; n + 1 - start];
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = g.odd.entries.get(i + start).copied().unwrap_or(0.0);
        }
        let sol = m.solve(&rhs).ok_or_else(|| {
            Error::convergence("odd-family trace matrix is singular", f64::NAN)
        })?;
        // re-insert the zero constant slot
        let mut entries = vec![0.0];
        entries.extend_from_slice(&sol);
        CoeffVector::new(entries, Parity::Odd)
    };

    let mut solution = SeriesSolution {
        even,
        odd,
        params: *params,
        trunc,
        particular: None,
        report,
    };

    // residual: re-synthesized trace vs g on a 4096 θ-grid
    let n_res = 4096;
    let trace = solution.trace_samples(n_res, 1.0)?;
    let mut resid: f64 = 0.0;
    for (s, &tv) in trace.iter().enumerate() {
        let th = std::f64::consts::TAU * (s as f64) / (n_res as f64);
        resid = resid.max((tv - g.eval(th)).abs());
    }
    solution.report.residual_max = resid;
    if resid > 10.0 * tol {
        return Err(Error::convergence(
            "expansion residual exceeds the 10·tol contract",
            resid,
        ));
    }
    solution.report.warning = resid > tol;
    Ok(solution)
}

/// Nonhomogeneous solve: u = ũ + w where ũ is the volume potential of the
/// compactly supported f (closed form for uniform inclusion fields) and w
/// solves the homogeneous problem with boundary g − ũ|∂B.
pub fn solve_nonhomogeneous(
    f: &PiecewiseField,
    g: &FourierBoundary,
    params: &MediumParams,
    tol: f64,
    quad: QuadratureSpec,
) -> Result<SeriesSolution> {
    let has_any = [RegionTag::Inclusion1, RegionTag::Inclusion2, RegionTag::Matrix]
        .iter()
        .any(|&r| f.has_component(r));
    if !has_any {
        return solve_homogeneous(g, params, tol);
    }

    // закрытая форма for uniform inclusion sources; quadrature otherwise
    let uniform_only = !f.has_component(RegionTag::Matrix)
        && [RegionTag::Inclusion1, RegionTag::Inclusion2]
            .iter()
            .all(|&r| !f.has_component(r) || f.uniform_component(r).is_some());
    let particular = if uniform_only {
        let mut parts = Vec::new();
        for r in [RegionTag::Inclusion1, RegionTag::Inclusion2] {
            if let Some(c) = f.uniform_component(r) {
                if c != [0.0, 0.0] {
                    parts.push(UniformInclusionPotential::new(
                        *params,
                        r,
                        c,
                        TruncationPolicy::tail_target((tol * 1e-2).min(1e-10)),
                    )?);
                }
            }
        }
        ParticularPart::Uniform(parts)
    } else {
        let kernel = TransmissionKernel::disk(
            *params,
            TruncationPolicy::tail_target(1e-10),
            Normalization::Physical,
        );
        ParticularPart::Quadrature {
            field: f.clone(),
            kernel,
            quad,
        }
    };

    // boundary trace of the particular part
    let n_trace = if uniform_only { 4096 } else { 512 };
    let r0 = params.r0;
    let trace: Vec<f64> = (0..n_trace)
        .into_par_iter()
        .map(|s| {
            let th = std::f64::consts::TAU * (s as f64) / (n_trace as f64);
            particular
                .eval_in(Point::new(r0 * th.cos(), r0 * th.sin()), RegionTag::Matrix)
                .map(|(v, _, _)| v)
        })
        .collect::<Result<_>>()?;
    let gp = analyze_boundary(&trace, r0)?;

    let mut corrected_even = g.even.entries.clone();
    let ne = corrected_even.len().max(gp.even.entries.len());
    corrected_even.resize(ne, 0.0);
    for (i, c) in gp.even.entries.iter().enumerate() {
        corrected_even[i] -= c;
    }
    let mut corrected_odd = g.odd.entries.clone();
    let no = corrected_odd.len().max(gp.odd.entries.len());
    corrected_odd.resize(no, 0.0);
    for (i, c) in gp.odd.entries.iter().enumerate() {
        corrected_odd[i] -= c;
    }
    let g_corr = FourierBoundary {
        even: CoeffVector::new(corrected_even, Parity::Even),
        odd: CoeffVector::new(corrected_odd, Parity::Odd),
        r0,
    };

    let mut sol = solve_homogeneous(&g_corr, params, tol)?;
    sol.particular = Some(particular);
    Ok(sol)
}

/// Harmonic Dirichlet solution on an arbitrary disk via the Poisson/Fourier
/// series recentered at the disk center.
#[derive(Debug, Clone)]
pub struct HarmonicDiskSolution {
    pub center: Complex64,
    pub radius: f64,
    /// A_n = a_n − i b_n of Φ(w) = Σ A_n ((w − c)/ρ)^n, u = Re Φ
    coeffs: Vec<Complex64>,
}

impl HarmonicDiskSolution {
    /// Fits boundary samples g(φ_s) on the circle (uniform φ grid).
    pub fn fit(center: Complex64, radius: f64, samples: &[f64], n_modes: usize) -> Self {
        let n = samples.len();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n_modes + 1];
        coeffs[0] = Complex64::new(samples.iter().sum::<f64>() / n as f64, 0.0);
        for (m, c) in coeffs.iter_mut().enumerate().skip(1) {
            let mut a = 0.0;
            let mut b = 0.0;
            for (s, &v) in samples.iter().enumerate() {
                let phi = std::f64::consts::TAU * (s as f64) / (n as f64);
                a += v * (m as f64 * phi).cos();
                b += v * (m as f64 * phi).sin();
            }
            *c = Complex64::new(2.0 * a / n as f64, -2.0 * b / n as f64);
        }
        HarmonicDiskSolution {
            center,
            radius,
            coeffs,
        }
    }

    /// (value, gradient).
    pub fn eval(&self, w: Complex64) -> (f64, [f64; 2]) {
        let t = (w - self.center) / self.radius;
        // Horner for Φ and Φ'
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * t + p;
            p = p * t + c;
        }
        let dphi = dp / self.radius;
        (p.re, [dphi.re, -dphi.im])
    }
}

enum CanonicalSide {
    Direct(Box<SeriesSolution>),
    Harmonic(HarmonicDiskSolution),
    Collocated(Box<SeriesSolution>),
}

/// Solution of the unequal-radius problem, evaluated in original coordinates
/// through the canonicalizing Möbius map.
pub struct MappedSolution {
    pub map: MobiusMap,
    pub geo: DiskGeometry,
    pub params: MediumParams,
    inner: CanonicalSide,
    pub report: SolveReport,
}

impl MappedSolution {
    pub fn eval_in(&self, x: Point, region: RegionTag) -> Result<FieldSample> {
        match &self.inner {
            CanonicalSide::Direct(sol) => sol.eval_in(x, region),
            CanonicalSide::Harmonic(h) => {
                let w = self.map.apply_z(x.to_complex())?;
                let (v, gw) = h.eval(w);
                let d = self.map.deriv_z(x.to_complex())?;
                Ok(FieldSample {
                    point: x,
                    region,
                    u: v,
                    grad: [
                        d.re * gw[0] + d.im * gw[1],
                        -d.im * gw[0] + d.re * gw[1],
                    ],
                    tail: 0.0,
                })
            }
            CanonicalSide::Collocated(sol) => {
                let w = self.map.apply(x)?;
                let s = sol.eval_in(w, region)?;
                let d = self.map.deriv_z(x.to_complex())?;
                Ok(FieldSample {
                    point: x,
                    region,
                    u: s.u,
                    grad: [
                        d.re * s.grad[0] + d.im * s.grad[1],
                        -d.im * s.grad[0] + d.re * s.grad[1],
                    ],
                    tail: s.tail,
                })
            }
        }
    }

    pub fn eval(&self, x: Point) -> Result<FieldSample> {
        match classify(x, self.geo, DEFAULT_BAND).tag {
            RegionTag::Interface1 | RegionTag::Interface2 => Err(Error::domain(
                "evaluation on an interface requires a region hint",
            )),
            t => self.eval_in(x, t),
        }
    }
}

/// Pushes a source field through the canonicalizing map: for conformal F,
/// f̃(w) = R(arg F′)·f(F⁻¹w)/|F′| keeps the weak form invariant, so the
/// canonical problem div(A∇v) = div f̃ pulls back to the original one.
pub fn map_field_through(
    map: &MobiusMap,
    field: &PiecewiseField,
    support_radius: f64,
) -> PiecewiseField {
    let mut out = PiecewiseField::zero().with_support_radius(support_radius);
    for region in [
        RegionTag::Inclusion1,
        RegionTag::Inclusion2,
        RegionTag::Matrix,
    ] {
        if !field.has_component(region) {
            continue;
        }
        let map = *map;
        let inner = field.clone();
        out = out.with_component(
            region,
            std::sync::Arc::new(move |w: Point| {
                let Ok(z) = map.apply_inv(w) else {
                    return [0.0, 0.0];
                };
                let Ok(d) = map.deriv_z(z.to_complex()) else {
                    return [0.0, 0.0];
                };
                let f = inner.eval(region, z);
                let n = d.norm().max(1e-300);
                let (c, s) = (d.re / n, d.im / n);
                [(c * f[0] - s * f[1]) / n, (s * f[0] + c * f[1]) / n]
            }),
        );
    }
    out
}

/// Dirichlet solve for two tangent disks of arbitrary radii: pulls the
/// problem to the canonical pair through the equal-radius Möbius map, solves
/// there, and pushes back. The image of the outer circle is an off-center
/// disk: the harmonic case (a0 = b0 = 1) is solved by a recentered Poisson
/// series (conformal invariance); the transmission case by least-squares
/// collocation in the exact solution families on the image boundary, with
/// the residual measured and enforced.
pub fn unequal_radius_solve(
    f: Option<&PiecewiseField>,
    g: &FourierBoundary,
    geo: DiskGeometry,
    params: &MediumParams,
    tol: f64,
) -> Result<MappedSolution> {
    if geo.is_canonical() {
        let sol = match f {
            None => solve_homogeneous(g, params, tol)?,
            Some(field) => {
                solve_nonhomogeneous(field, g, params, tol, QuadratureSpec::default())?
            }
        };
        let report = sol.report.clone();
        return Ok(MappedSolution {
            map: MobiusMap::identity(),
            geo,
            params: *params,
            inner: CanonicalSide::Direct(Box::new(sol)),
            report,
        });
    }
    let map = equal_radius_map(geo, Exclusion::ball(params.r0))?;
    let (wc, rho) = map.image_circle(Point::new(0.0, 0.0), params.r0)?;
    let wc_z = wc.to_complex();

    // equal non-unit radii: the map is a similarity, the image circle stays
    // centered, and the whole canonical machinery applies at R0′ = ρ
    if wc.norm() < 1e-12 * rho {
        let params_c = MediumParams::new(params.a0, params.b0, rho)?;
        let g_c = FourierBoundary {
            even: g.even.clone(),
            odd: g.odd.clone(),
            r0: rho,
        };
        let sol = match f {
            None => solve_homogeneous(&g_c, &params_c, tol)?,
            Some(field) => {
                let mapped = map_field_through(&map, field, rho);
                solve_nonhomogeneous(&mapped, &g_c, &params_c, tol, QuadratureSpec::default())?
            }
        };
        let report = sol.report.clone();
        return Ok(MappedSolution {
            map,
            geo,
            params: *params,
            inner: CanonicalSide::Collocated(Box::new(sol)),
            report,
        });
    }

    // boundary data on the image circle
    let n = 2048;
    let mut samples = Vec::with_capacity(n);
    for s in 0..n {
        let phi = std::f64::consts::TAU * (s as f64) / (n as f64);
        let w = wc_z + rho * Complex64::new(phi.cos(), phi.sin());
        let x = map.apply_inv_z(w)?;
        samples.push(g.eval(x.im.atan2(x.re)));
    }

    if f.is_none() && (params.a0 - 1.0).abs() < 1e-14 && (params.b0 - 1.0).abs() < 1e-14 {
        let h = HarmonicDiskSolution::fit(wc_z, rho, &samples, 420);
        // residual on a fresh grid
        let mut resid: f64 = 0.0;
        for s in 0..512 {
            let phi = std::f64::consts::TAU * (s as f64 + 0.5) / 512.0;
            let w = wc_z + rho * Complex64::new(phi.cos(), phi.sin());
            let x = map.apply_inv_z(w)?;
            resid = resid.max((h.eval(w).0 - g.eval(x.im.atan2(x.re))).abs());
        }
        if resid > 10.0 * tol {
            return Err(Error::convergence(
                "harmonic pullback residual exceeds contract",
                resid,
            ));
        }
        return Ok(MappedSolution {
            map,
            geo,
            params: *params,
            inner: CanonicalSide::Harmonic(h),
            report: SolveReport {
                residual_max: resid,
                warning: resid > tol,
                ..Default::default()
            },
        });
    }

    // with a source, subtract the volume potential of the mapped field and
    // collocate the remaining homogeneous correction
    let particular = match f {
        None => None,
        Some(field) => {
            let support = wc.norm() + rho + 0.1;
            let mapped = map_field_through(&map, field, support);
            let kernel = TransmissionKernel::disk(
                *params,
                TruncationPolicy::tail_target(1e-10),
                Normalization::Physical,
            );
            Some(ParticularPart::Quadrature {
                field: mapped,
                kernel,
                quad: QuadratureSpec::default(),
            })
        }
    };

    // transmission case: least-squares collocation in {u_j} ⊕ {v_j} on the
    // image circle, with column normalization and Householder QR (the raw
    // trace columns decay geometrically and would wreck the conditioning).
    // Retry once with a larger basis before failing the residual contract.
    let mut last_err = None;
    for (n_even, n_odd) in [(40usize, 32usize), (72, 60)] {
        match collocation_attempt(g, &map, wc_z, rho, params, tol, n_even, n_odd, particular.as_ref())
        {
            Ok(ms) => {
                return Ok(MappedSolution {
                    map,
                    geo,
                    params: *params,
                    inner: ms.0,
                    report: ms.1,
                })
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

#[allow(clippy::too_many_arguments)]
fn collocation_attempt(
    g: &FourierBoundary,
    map: &MobiusMap,
    wc_z: Complex64,
    rho: f64,
    params: &MediumParams,
    tol: f64,
    n_even: usize,
    n_odd: usize,
    particular: Option<&ParticularPart>,
) -> Result<(CanonicalSide, SolveReport)> {
    let n_pts = 6 * (n_even + n_odd);
    let trunc = TruncationPolicy::tail_target(1e-12);
    let mut pts = Vec::with_capacity(n_pts);
    for s in 0..n_pts {
        let phi = std::f64::consts::TAU * (s as f64) / (n_pts as f64);
        pts.push(Point::from_complex(
            wc_z + rho * Complex64::new(phi.cos(), phi.sin()),
        ));
    }
    let n_basis = n_even + 1 + n_odd;
    let canon = DiskGeometry::canonical();
    let region_of = |w: Point| -> RegionTag {
        match classify(w, canon, 0.0).tag {
            RegionTag::Interface1 => RegionTag::Inclusion1,
            RegionTag::Interface2 => RegionTag::Inclusion2,
            t => t,
        }
    };
    let raw_rows: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|&w| -> Result<Vec<f64>> {
            let reg = region_of(w);
            let mut row = Vec::with_capacity(n_basis);
            for j in 0..=n_even {
                row.push(
                    basis::eval_u_in(BasisId::general(Parity::Even, j), w, reg, params, trunc)?
                        .value,
                );
            }
            for j in 1..=n_odd {
                row.push(
                    basis::eval_u_in(BasisId::general(Parity::Odd, j), w, reg, params, trunc)?
                        .value,
                );
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let rhs_pts: Vec<f64> = pts
        .par_iter()
        .map(|&w| -> Result<f64> {
            let x = map.apply_inv(w)?;
            let mut v = g.eval(x.x2.atan2(x.x1));
            if let Some(p) = particular {
                v -= p.eval_in(w, region_of(w))?.0;
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;

    let mut scales = vec![0.0f64; n_basis];
    for row in &raw_rows {
        for (j, &v) in row.iter().enumerate() {
            scales[j] += v * v;
        }
    }
    for s in scales.iter_mut() {
        *s = s.sqrt().max(1e-300);
    }
    let rows: Vec<Vec<f64>> = raw_rows
        .iter()
        .map(|r| r.iter().zip(&scales).map(|(v, s)| v / s).collect())
        .collect();
    let scaled = crate::linalg::least_squares(&rows, &rhs_pts)
        .ok_or_else(|| Error::convergence("collocation system rank-deficient", f64::NAN))?;
    let coef: Vec<f64> = scaled.iter().zip(&scales).map(|(c, s)| c / s).collect();

    let even = CoeffVector::new(coef[..=n_even].to_vec(), Parity::Even);
    let mut odd_entries = vec![0.0];
    odd_entries.extend_from_slice(&coef[n_even + 1..]);
    let odd = CoeffVector::new(odd_entries, Parity::Odd);
    let sol = SeriesSolution {
        even,
        odd,
        params: *params,
        trunc,
        particular: particular.cloned(),
        report: SolveReport::default(),
    };

    // residual on fresh boundary points
    let n_res = if particular.is_some() { 96 } else { 512 };
    let resid = (0..n_res)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let phi = std::f64::consts::TAU * (s as f64 + 0.5) / n_res as f64;
            let w = Point::from_complex(wc_z + rho * Complex64::new(phi.cos(), phi.sin()));
            let x = map.apply_inv(w)?;
            let v = sol.eval_in(w, region_of(w))?.u;
            Ok((v - g.eval(x.x2.atan2(x.x1))).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    if resid > 10.0 * tol {
        return Err(Error::convergence(
            "collocation residual exceeds contract",
            resid,
        ));
    }
    let report = SolveReport {
        residual_max: resid,
        warning: resid > tol,
        even_n: n_even,
        odd_n: n_odd,
        ..Default::default()
    };
    Ok((CanonicalSide::Collocated(Box::new(sol)), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    fn boundary_from_fn(g: impl Fn(f64) -> f64, r0: f64) -> FourierBoundary {
        let n = 1024;
        let samples: Vec<f64> = (0..n)
            .map(|s| g(std::f64::consts::TAU * s as f64 / n as f64))
            .collect();
        analyze_boundary(&samples, r0).unwrap()
    }

    #[test]
    fn analyze_constant_and_single_modes() {
        let g = boundary_from_fn(|_| 3.5, 3.0);
        assert!((g.even.entries[0] - 3.5).abs() < 1e-12);
        assert!(g.even.entries[1..].iter().all(|&c| c.abs() < 1e-12));
        assert!(g.odd.entries.iter().all(|&c| c.abs() < 1e-12));

        // cos 2θ = −ê_2 → single even coefficient −1
        let g2 = boundary_from_fn(|th| (2.0 * th).cos(), 3.0);
        assert!((g2.even.entries[2] + 1.0).abs() < 1e-12);
        let mass: f64 = g2
            .even
            .entries
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != 2)
            .map(|(_, c)| c.abs())
            .sum();
        assert!(mass < 1e-12);
    }

    #[test]
    fn analyze_round_trip_band_limited() {
        let mut rng = SplitMix64::new(23);
        let modes: Vec<(usize, f64, f64)> = (0..64)
            .map(|m| (m, rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)))
            .collect();
        let g = |th: f64| {
            modes
                .iter()
                .map(|&(m, a, b)| a * (m as f64 * th).cos() + b * (m as f64 * th).sin())
                .sum::<f64>()
        };
        let fb = boundary_from_fn(g, 3.0);
        for s in 0..257 {
            let th = std::f64::consts::TAU * (s as f64 + 0.21) / 257.0;
            assert!(
                (fb.eval(th) - g(th)).abs() < 1e-11,
                "θ={th}: {} vs {}",
                fb.eval(th),
                g(th)
            );
        }
    }

    #[test]
    fn analyze_rejects_bad_grids() {
        assert!(analyze_boundary(&vec![0.0; 100], 3.0).is_err());
        assert!(analyze_boundary(&vec![0.0; 300], 3.0).is_err());
    }

    #[test]
    fn homogeneous_round_trip_unit_vector() {
        // g = trace of u_3 → γ_even = e_3
        let p = MediumParams::new(9.0, 9.0, 3.0).unwrap();
        let tr = basis::trace_fourier(
            BasisId::symmetric(Parity::Even, 3),
            40,
            &p,
            TruncationPolicy::tail_target(1e-15),
        )
        .unwrap();
        let g = FourierBoundary {
            even: tr,
            odd: CoeffVector::new(vec![], Parity::Odd),
            r0: 3.0,
        };
        let sol = solve_homogeneous(&g, &p, 1e-9).unwrap();
        for (j, &c) in sol.even.entries.iter().enumerate() {
            let expect = if j == 3 { 1.0 } else { 0.0 };
            assert!((c - expect).abs() < 1e-9, "j={j}: {c}");
        }
        assert!(sol.report.residual_max < 1e-8);
    }

    #[test]
    fn zero_contrast_mean_value_property() {
        // α = 0: harmonic extension; value at center = mean of g... the
        // center of B_R0 is the cusp, so probe the mean-value property on a
        // small circle around a regular point instead.
        let p = MediumParams::new(1.0, 1.0, 3.0).unwrap();
        let g = boundary_from_fn(|th| (3.0 * th).cos() + 0.4 * th.sin() + 0.7, 3.0);
        let sol = solve_homogeneous(&g, &p, 1e-10).unwrap();
        let c = Point::new(1.8, 0.6);
        let r = 0.25;
        let mut mean = 0.0;
        let n = 256;
        for s in 0..n {
            let th = std::f64::consts::TAU * (s as f64) / n as f64;
            mean += sol
                .eval(Point::new(c.x1 + r * th.cos(), c.x2 + r * th.sin()))
                .unwrap()
                .u;
        }
        mean /= n as f64;
        let center = sol.eval(c).unwrap().u;
        assert!((mean - center).abs() < 1e-9, "{mean} vs {center}");
    }

    #[test]
    fn homogeneous_transmission_and_trace() {
        // a0=5, b0=0.5 (general family), g = cos 2θ: transmission at
        // interface samples and trace consistency.
        let p = MediumParams::new(5.0, 0.5, 3.0).unwrap();
        let g = boundary_from_fn(|th| (2.0 * th).cos(), 3.0);
        let tol = 1e-9;
        let sol = solve_homogeneous(&g, &p, tol).unwrap();
        assert!(sol.report.residual_max <= 10.0 * tol);

        let geo = DiskGeometry::canonical();
        for (c, inside, a_in) in [
            (geo.center1(), RegionTag::Inclusion1, 5.0),
            (geo.center2(), RegionTag::Inclusion2, 0.5),
        ] {
            for s in 0..16 {
                let phi = std::f64::consts::TAU * (s as f64 + 0.4) / 16.0;
                let x = Point::new(c.x1 + phi.cos(), c.x2 + phi.sin());
                if x.norm() < 0.05 {
                    continue;
                }
                let vi = sol.eval_in(x, inside).unwrap();
                let vo = sol.eval_in(x, RegionTag::Matrix).unwrap();
                assert!((vi.u - vo.u).abs() < 10.0 * tol, "value jump");
                let nu = [phi.cos(), phi.sin()];
                let fi = a_in * (vi.grad[0] * nu[0] + vi.grad[1] * nu[1]);
                let fo = vo.grad[0] * nu[0] + vo.grad[1] * nu[1];
                assert!((fi - fo).abs() < 1e-7, "flux jump {:.2e}", (fi - fo).abs());
            }
        }

        // trace consistency toward the boundary
        let mut errs = Vec::new();
        for off in [1e-2, 1e-4, 1e-6] {
            let trace = sol.trace_samples(128, 1.0 - off).unwrap();
            let mut e: f64 = 0.0;
            for (s, &tv) in trace.iter().enumerate() {
                let th = std::f64::consts::TAU * (s as f64) / 128.0;
                e = e.max((tv - g.eval(th)).abs());
            }
            errs.push(e);
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn odd_parity_data_solved_by_odd_family() {
        let p = MediumParams::new(5.0, 0.5, 3.0).unwrap();
        // cos θ is odd in x1
        let g = boundary_from_fn(|th| th.cos(), 3.0);
        let sol = solve_homogeneous(&g, &p, 1e-8).unwrap();
        assert!(sol.even.entries.iter().all(|&c| c.abs() < 1e-10));
        assert!(!sol.odd.entries.is_empty());
        assert!(sol.report.residual_max < 1e-7);
    }

    #[test]
    fn linearity_and_maximum_principle() {
        let p = MediumParams::new(5.0, 0.5, 3.0).unwrap();
        let g1 = boundary_from_fn(|th| (2.0 * th).cos(), 3.0);
        let g2 = boundary_from_fn(|th| 0.3 * th.sin(), 3.0);
        let g12 = boundary_from_fn(|th| (2.0 * th).cos() + 0.3 * th.sin(), 3.0);
        let s1 = solve_homogeneous(&g1, &p, 1e-9).unwrap();
        let s2 = solve_homogeneous(&g2, &p, 1e-9).unwrap();
        let s12 = solve_homogeneous(&g12, &p, 1e-9).unwrap();
        let mut rng = SplitMix64::new(41);
        let mut gmin = f64::INFINITY;
        let mut gmax = -f64::INFINITY;
        for s in 0..2048 {
            let v = g12.eval(std::f64::consts::TAU * s as f64 / 2048.0);
            gmin = gmin.min(v);
            gmax = gmax.max(v);
        }
        let mut n = 0;
        while n < 60 {
            let x = Point::new(rng.range(-2.9, 2.9), rng.range(-2.9, 2.9));
            if x.norm() > 2.9 || x.norm() < 0.02 {
                continue;
            }
            let (Ok(a), Ok(b), Ok(ab)) = (s1.eval(x), s2.eval(x), s12.eval(x)) else {
                continue;
            };
            assert!((a.u + b.u - ab.u).abs() < 1e-10, "superposition");
            assert!(
                ab.u > gmin - 1e-7 && ab.u < gmax + 1e-7,
                "maximum principle at ({}, {}): {}",
                x.x1,
                x.x2,
                ab.u
            );
            n += 1;
        }
    }

    #[test]
    fn cusp_gradient_boundedness() {
        // |∇u| along (0, ±2^{-m}) and (2^{-m}, 0), m ≤ 20: bounded, no
        // monotone blow-up.
        let p = MediumParams::new(5.0, 0.5, 3.0).unwrap();
        let g = boundary_from_fn(|th| (2.0 * th).cos() + 0.3 * th.sin(), 3.0);
        let sol = solve_homogeneous(&g, &p, 1e-9).unwrap();
        for (dir, region) in [
            (Point::new(0.0, 1.0), RegionTag::Inclusion1),
            (Point::new(0.0, -1.0), RegionTag::Inclusion2),
            (Point::new(1.0, 0.0), RegionTag::Matrix),
        ] {
            let mut mags = Vec::new();
            for m in 1..=20 {
                let t = 2f64.powi(-m);
                let x = Point::new(dir.x1 * t, dir.x2 * t);
                let s = sol.eval_in(x, region).unwrap();
                mags.push((s.grad[0].powi(2) + s.grad[1].powi(2)).sqrt());
            }
            let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = mags.iter().cloned().fold(0.0f64, f64::max);
            assert!(
                hi < 10.0 * lo.max(1e-6),
                "gradient spread {lo}..{hi} along ({}, {})",
                dir.x1,
                dir.x2
            );
            // no monotone blow-up in the last five entries
            let tail = &mags[15..];
            assert!(!tail.windows(2).all(|w| w[1] > w[0] * 1.01), "{tail:?}");
        }
    }

    #[test]
    fn nonhomogeneous_zero_field_reduces_to_homogeneous() {
        let p = MediumParams::new(5.0, 0.5, 3.0).unwrap();
        let g = boundary_from_fn(|th| (2.0 * th).cos(), 3.0);
        let f = PiecewiseField::zero();
        let a = solve_nonhomogeneous(&f, &g, &p, 1e-9, QuadratureSpec::default()).unwrap();
        let b = solve_homogeneous(&g, &p, 1e-9).unwrap();
        let x = Point::new(1.2, 0.5);
        assert_eq!(a.eval(x).unwrap().u, b.eval(x).unwrap().u);
    }

    #[test]
    fn nonhomogeneous_uniform_source_boundary_and_equation() {
        // (a0, b0) = (5, 0.5), f = const on the upper disk, g = 0:
        // boundary trace vanishes and the interior FD residual of
        // div(a∇u) − div f is small away from interfaces.
        let p = MediumParams::new(5.0, 0.5, 3.0).unwrap();
        let f = PiecewiseField::constant_on(RegionTag::Inclusion1, [1.0, 0.0]);
        let g = FourierBoundary::even_modes(vec![0.0], 3.0);
        let sol = solve_nonhomogeneous(&f, &g, &p, 1e-8, QuadratureSpec::default()).unwrap();

        // boundary: |u| small on |x| = R0
        let trace = sol.trace_samples(64, 1.0).unwrap();
        let worst = trace.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(worst < 1e-7, "boundary residual {worst}");

        // interior equation: div(a∇u) = div f = 0 inside each region
        let hh = 1e-4;
        for (x, reg) in [
            (Point::new(0.3, 1.1), RegionTag::Inclusion1),
            (Point::new(1.6, -0.4), RegionTag::Matrix),
            (Point::new(-0.2, -1.0), RegionTag::Inclusion2),
        ] {
            let ev = |pt: Point| sol.eval_in(pt, reg).unwrap().u;
            let lap = (ev(Point::new(x.x1 + hh, x.x2))
                + ev(Point::new(x.x1 - hh, x.x2))
                + ev(Point::new(x.x1, x.x2 + hh))
                + ev(Point::new(x.x1, x.x2 - hh))
                - 4.0 * ev(x))
                / (hh * hh);
            assert!(lap.abs() < 1e-3, "Δu = {lap} at ({}, {})", x.x1, x.x2);
        }

        // transmission with source jump: a∂_ν u − f·ν continuous
        for s in 0..12 {
            let phi = std::f64::consts::TAU * (s as f64 + 0.3) / 12.0;
            let x = Point::new(phi.cos(), 1.0 + phi.sin());
            if x.norm() < 0.05 {
                continue;
            }
            let vi = sol.eval_in(x, RegionTag::Inclusion1).unwrap();
            let vo = sol.eval_in(x, RegionTag::Matrix).unwrap();
            assert!((vi.u - vo.u).abs() < 1e-7, "value jump");
            let nu = [phi.cos(), phi.sin()];
            let fi = 5.0 * (vi.grad[0] * nu[0] + vi.grad[1] * nu[1]) - nu[0];
            let fo = vo.grad[0] * nu[0] + vo.grad[1] * nu[1];
            assert!((fi - fo).abs() < 1e-6, "flux defect {:.2e}", (fi - fo).abs());
        }
    }

    #[test]
    fn unequal_radius_identity_for_canonical() {
        let p = MediumParams::new(5.0, 0.5, 3.0).unwrap();
        let g = boundary_from_fn(|th| (2.0 * th).cos(), 3.0);
        let direct = solve_homogeneous(&g, &p, 1e-9).unwrap();
        let mapped =
            unequal_radius_solve(None, &g, DiskGeometry::canonical(), &p, 1e-9).unwrap();
        let x = Point::new(1.2, 0.4);
        assert!(
            (direct.eval(x).unwrap().u - mapped.eval(x).unwrap().u).abs() < 1e-14
        );
    }

    #[test]
    fn unequal_radius_harmonic_matches_direct() {
        // conformal invariance: the pulled-back harmonic solve equals the
        // direct harmonic solve.
        let p = MediumParams::new(1.0, 1.0, 3.0).unwrap();
        let geo = DiskGeometry::new(1.0, 2.0).unwrap();
        let g = boundary_from_fn(|th| (2.0 * th).cos() + 0.3 * th.sin(), 3.0);
        let direct = solve_homogeneous(&g, &p, 1e-10).unwrap();
        let mapped = unequal_radius_solve(None, &g, geo, &p, 1e-8).unwrap();
        let mut rng = SplitMix64::new(51);
        let mut n = 0;
        while n < 40 {
            let x = Point::new(rng.range(-2.5, 2.5), rng.range(-2.5, 2.5));
            if x.norm() > 2.8 || x.norm() < 0.05 {
                continue;
            }
            let (Ok(a), Ok(b)) = (direct.eval(x), mapped.eval(x)) else {
                continue;
            };
            assert!(
                (a.u - b.u).abs() < 1e-8,
                "({}, {}): {} vs {}",
                x.x1,
                x.x2,
                a.u,
                b.u
            );
            n += 1;
        }
    }

    #[test]
    fn unequal_radius_transmission_on_original_circles() {
        // r1 = 1, r2 = 2, a0 = 5: value and flux continuity on the original
        // circles via one-sided limits in original coordinates.
        // R0 = 5: the r2 = 2 disk reaches |x| = 4 and must fit inside B_R0.
        // The image disk is strongly off-center, which limits the
        // attainable expansion residual; 1e−7 is the honest contract here.
        let p = MediumParams::new(5.0, 1.0, 5.0).unwrap();
        let geo = DiskGeometry::new(1.0, 2.0).unwrap();
        let g = boundary_from_fn(|th| (2.0 * th).cos(), 5.0);
        let tol = 1e-7;
        let sol = unequal_radius_solve(None, &g, geo, &p, tol).unwrap();
        assert!(sol.report.residual_max <= 10.0 * tol);
        let h = 1e-6;
        for (c, r, inside, a_in) in [
            (geo.center1(), geo.r1, RegionTag::Inclusion1, 5.0),
            (geo.center2(), geo.r2, RegionTag::Inclusion2, 1.0),
        ] {
            for s in 0..16 {
                let phi = std::f64::consts::TAU * (s as f64 + 0.45) / 16.0;
                let x = Point::new(c.x1 + r * phi.cos(), c.x2 + r * phi.sin());
                if x.norm() < 0.05 || x.norm() > 2.95 {
                    continue;
                }
                let vi = sol.eval_in(x, inside).unwrap();
                let vo = sol.eval_in(x, RegionTag::Matrix).unwrap();
                assert!(
                    (vi.u - vo.u).abs() < 10.0 * tol,
                    "value jump {:.2e}",
                    (vi.u - vo.u).abs()
                );
                let nu = [phi.cos(), phi.sin()];
                // one-sided flux via the pulled-back gradients; FD sanity on
                // the outside
                let fi = a_in * (vi.grad[0] * nu[0] + vi.grad[1] * nu[1]);
                let fo = vo.grad[0] * nu[0] + vo.grad[1] * nu[1];
                assert!(
                    (fi - fo).abs() < 1e-5,
                    "flux jump {:.2e} at phi={phi}",
                    (fi - fo).abs()
                );
                let _ = h;
            }
        }
    }

    #[test]
    fn equal_nonunit_radii_scaled_solve() {
        // r1 = r2 = 2.5 with R0 = 7.5 rescales to the canonical picture at
        // R0' = 3; transmission holds on the original circles.
        let p = MediumParams::new(5.0, 0.5, 7.5).unwrap();
        let geo = DiskGeometry::new(2.5, 2.5).unwrap();
        let g = boundary_from_fn(|th| (2.0 * th).cos(), 7.5);
        let sol = unequal_radius_solve(None, &g, geo, &p, 1e-8).unwrap();
        assert!(sol.report.residual_max < 1e-7);
        for s in 0..12 {
            let phi = std::f64::consts::TAU * (s as f64 + 0.3) / 12.0;
            let x = Point::new(2.5 * phi.cos(), 2.5 + 2.5 * phi.sin());
            if x.norm() < 0.1 {
                continue;
            }
            let vi = sol.eval_in(x, RegionTag::Inclusion1).unwrap();
            let vo = sol.eval_in(x, RegionTag::Matrix).unwrap();
            assert!((vi.u - vo.u).abs() < 1e-7, "value jump");
            let nu = [phi.cos(), phi.sin()];
            let fi = 5.0 * (vi.grad[0] * nu[0] + vi.grad[1] * nu[1]);
            let fo = vo.grad[0] * nu[0] + vo.grad[1] * nu[1];
            assert!((fi - fo).abs() < 1e-6, "flux jump {:.2e}", (fi - fo).abs());
        }
    }

    #[test]
    fn unequal_radii_with_source_runs_and_matches_boundary() {
        // mildly unequal radii with a source in the upper disk: the mapped
        // field goes through the quadrature particular and the collocation
        // correction; the boundary residual contract is enforced inside.
        let p = MediumParams::new(2.0, 1.0, 3.0).unwrap();
        let geo = DiskGeometry::new(1.0, 1.15).unwrap();
        let g = boundary_from_fn(|_| 0.0, 3.0);
        let f = PiecewiseField::constant_on(RegionTag::Inclusion1, [0.4, 0.0]);
        let sol = unequal_radius_solve(Some(&f), &g, geo, &p, 2e-4).unwrap();
        // boundary trace of the composed solution vanishes to the contract
        for s in 0..8 {
            let th = std::f64::consts::TAU * (s as f64 + 0.4) / 8.0;
            let x = Point::new(3.0 * th.cos(), 3.0 * th.sin());
            let v = sol.eval_in(x, RegionTag::Matrix).unwrap();
            assert!(v.u.abs() < 2e-3, "boundary residual {}", v.u);
        }
        // interior response is nonzero
        let mid = sol.eval(Point::new(0.4, 0.9)).unwrap();
        assert!(mid.u.abs() > 1e-4);
    }

    #[test]
    fn truncation_study_adding_terms() {
        // extending the expansion dimension changes interior values within
        // the geometric envelope of the added coefficients
        let p = MediumParams::new(9.0, 9.0, 3.0).unwrap();
        let g = boundary_from_fn(|th| (4.0 * th).cos() - 0.2 * (3.0 * th).sin(), 3.0);
        let sol = solve_homogeneous(&g, &p, 1e-10).unwrap();
        // drop the tail quarter of coefficients and compare
        let mut truncated = sol.clone();
        let keep = truncated.even.entries.len() * 3 / 4;
        let dropped: f64 = truncated.even.entries[keep..]
            .iter()
            .map(|c| c.abs())
            .sum();
        truncated.even.entries.truncate(keep);
        let x = Point::new(0.4, 0.6);
        let full = sol.eval(x).unwrap().u;
        let cut = truncated.eval(x).unwrap().u;
        assert!(
            (full - cut).abs() <= dropped.max(1e-12),
            "{} vs {} (dropped mass {dropped})",
            full,
            cut
        );
    }
}
