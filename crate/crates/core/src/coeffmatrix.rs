//! The infinite change-of-basis matrix M = id + B between the trigonometric
//! basis of the outer circle and the traces of the symmetric solution family:
//! entry evaluation by closed forms, column-dominance audit, block-decay
//! bounds, ℓ^s norms, and the truncated expansion solve.
//!
//! Indexing follows the trace convention of the basis module: row m is the
//! coefficient of ê_m (constant 1 at m = 0), column j is the trace of u_j.
//! For rows and columns of equal parity (m + j even, j ≥ 1),
//!
//!   B_{m,j} = ∓ 2 Σ_{k≥1} σ^k · binom(m+j-1, j-1) / (k R0)^{m+j}
//!
//! with σ = α, sign − for odd columns and σ = −α, sign + for even columns
//! (row 0 included); mixed-parity entries and column 0 vanish. The single
//! (0,0) departure from M = id + B is the constant-1 convention: M_{0,0}
//! stores the u_0 constant 1/a0 instead of 1.

use crate::basis::{MediumParams, Parity};
use crate::error::Error;
use crate::linalg::DenseMatrix;
use crate::series::{SeriesValue, TruncationPolicy};
use crate::util::ln_binomial;
use crate::Result;

/// A finite coefficient sequence over ê (even parity) or ẽ (odd parity),
/// indexed from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub entries: Vec<f64>,
    pub parity: Parity,
    /// Weight exponent for the ℓ^s norm this vector reports by default.
    pub s_weight: f64,
}

impl CoeffVector {
    pub fn new(entries: Vec<f64>, parity: Parity) -> Self {
        CoeffVector {
            entries,
            parity,
            s_weight: 0.0,
        }
    }

    pub fn with_weight(mut self, s: f64) -> Self {
        self.s_weight = s;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_s(&self, s: f64) -> f64 {
        lp_s_norm(&self.entries, s)
    }
}

/// ‖a‖_{ℓ^s} = (Σ a_j² (1+j)^{2s})^{1/2}.
pub fn lp_s_norm(entries: &[f64], s: f64) -> f64 {
    entries
        .iter()
        .enumerate()
        .map(|(j, &a)| a * a * ((1 + j) as f64).powf(2.0 * s))
        .sum::<f64>()
        .sqrt()
}

fn check_matrix_domain(alpha: f64, r0: f64) -> Result<()> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(Error::config(format!("contrast α must lie in (−1,1), got {alpha}")));
    }
    if r0 <= 2.0 {
        return Err(Error::config(format!(
            "R0 = {r0} rejected: column dominance is only guaranteed for R0 > 2"
        )));
    }
    Ok(())
}

/// Entry B_{l,j} of the perturbation matrix (row l, column j ≥ 0), with a
/// certified tail bound on the k-summation. Exact zeros for mixed parity and
/// for column 0. Binomials in log space.
pub fn b_entry(
    l: usize,
    j: usize,
    alpha: f64,
    r0: f64,
    trunc: TruncationPolicy,
) -> Result<SeriesValue<f64>> {
    check_matrix_domain(alpha, r0)?;
    if j == 0 || (l % 2) != (j % 2) || (l == 0 && j % 2 == 1) {
        return Ok(SeriesValue::exact(0.0));
    }
    if alpha == 0.0 {
        return Ok(SeriesValue::exact(0.0));
    }
    let odd_col = j % 2 == 1;
    let (sigma, sign) = if odd_col { (alpha, -2.0) } else { (-alpha, 2.0) };
    let lb = ln_binomial((l + j - 1) as u64, (j - 1) as u64);
    let p = (l + j) as f64;
    let a = alpha.abs();

    let mut value = 0.0f64;
    let mut sig_k = 1.0f64;
    let mut used = 0usize;
    let mut tail = f64::INFINITY;
    for k in 1..=trunc.k_max {
        sig_k *= sigma;
        value += sig_k * (lb - p * ((k as f64) * r0).ln()).exp();
        used = k;
        // first discarded term: |α|^{k+1} binom / ((k+1) R0)^p, and the
        // terms shrink at least by |α| thereafter
        let first_discarded = a.powi(k as i32 + 1) * (lb - p * (((k + 1) as f64) * r0).ln()).exp();
        tail = first_discarded / (1.0 - a);
        if matches!(trunc.mode, crate::series::TruncMode::TailTarget) && 2.0 * tail <= trunc.tail_tol
        {
            break;
        }
    }
    Ok(SeriesValue {
        value: sign * value,
        tail_bound: 2.0 * tail,
        terms_used: used,
    })
}

/// Per-column absolute sums via the single-sum closed forms. For an odd
/// column the entries share one sign, so the signed closed form is exact;
/// for an even column the closed form is the standard upper bound, and the
/// signed sum is also reported for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct ColumnSum {
    /// Σ_{l≥1} |B_{l,j}| for odd columns; the proven upper bound for even.
    pub bound: f64,
    /// The signed Σ_{l≥1} B_{l,j} closed form (diagnostic, even columns).
    pub signed: f64,
    pub tail_bound: f64,
}

pub fn column_abs_sum(
    j: usize,
    alpha: f64,
    r0: f64,
    trunc: TruncationPolicy,
) -> Result<ColumnSum> {
    check_matrix_domain(alpha, r0)?;
    if j == 0 {
        return Err(Error::config("column 0 has no off-diagonal entries"));
    }
    if alpha == 0.0 {
        return Ok(ColumnSum {
            bound: 0.0,
            signed: 0.0,
            tail_bound: 0.0,
        });
    }
    let odd_col = j % 2 == 1;
    let mut bound = 0.0f64;
    let mut signed = 0.0f64;
    let mut tail = 0.0f64;
    let mut used = 0usize;
    for k in 1..=trunc.k_max {
        let kr = (k as f64) * r0;
        let (term_abs, term_signed) = if odd_col {
            // Σ_k α^k [ (kR0−1)^{1−2j'} − (kR0+1)^{1−2j'} ], 2j'−1 = j
            let e = j as i32; // (kR0∓1)^{-j}
            let t = (kr - 1.0).powi(-e) - (kr + 1.0).powi(-e);
            (alpha.powi(k as i32) * t, alpha.powi(k as i32) * t)
        } else {
            let e = j as i32;
            let conv = (kr - 1.0).powi(-e) + (kr + 1.0).powi(-e) - 2.0 * kr.powi(-e);
            (
                alpha.abs().powi(k as i32) * conv,
                (-alpha).powi(k as i32) * conv,
            )
        };
        bound += term_abs;
        signed += term_signed;
        used = k;
        // next term ≤ |α| × current in magnitude
        tail = term_abs.abs() * alpha.abs() / (1.0 - alpha.abs());
        if matches!(trunc.mode, crate::series::TruncMode::TailTarget) && tail <= trunc.tail_tol {
            break;
        }
    }
    let _ = used;
    Ok(ColumnSum {
        bound: bound.abs(),
        signed,
        tail_bound: tail,
    })
}

/// Certified upper bound on the block sum Σ_{rows l ≥ N} Σ_j |B_{l,j}|.
///
/// Evaluates the exact closed-form row-sum bounds
///   even row 2l:   Σ_k |α|^k [ (kR0−1)^{-(2l+1)} − (kR0+1)^{-(2l+1)} ]
///   odd row 2l−1:  Σ_k |α|^k [ (kR0−1)^{-2l} + (kR0+1)^{-2l} ]
/// summed over rows ≥ N with an analytic geometric remainder, so the result
/// is a true upper bound of the block sum. Decays like (R0−1)^{-N}.
pub fn block_tail_bound(n: usize, alpha: f64, r0: f64) -> Result<f64> {
    check_matrix_domain(alpha, r0)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let a = alpha.abs();
    let k_sum = |row_exp: i32, plus: bool| -> f64 {
        // Σ_k a^k [ (kR0−1)^{-e} ± (kR0+1)^{-e} ]
        let mut acc = 0.0;
        let mut ak = 1.0;
        for k in 1..=400 {
            ak *= a;
            let kr = (k as f64) * r0;
            let t = (kr - 1.0).powi(-row_exp)
                + if plus {
                    (kr + 1.0).powi(-row_exp)
                } else {
                    -(kr + 1.0).powi(-row_exp)
                };
            acc += ak * t;
            if ak * t < 1e-300 || ak < 1e-18 {
                break;
            }
        }
        acc
    };
    let mut total = 0.0f64;
    if n == 0 {
        // row 0: Σ_{j≥1} |B_{0,2j}| ≤ 2 Σ_k |α|^k / ((kR0)² − 1)
        let mut ak = 1.0;
        for k in 1..=400 {
            ak *= a;
            let kr = (k as f64) * r0;
            total += 2.0 * ak / (kr * kr - 1.0);
            if ak < 1e-18 {
                break;
            }
        }
    }
    let mut row = n.max(1);
    loop {
        let contrib = if row.is_multiple_of(2) {
            let l = row / 2; // even row 2l, exponent 2l+1
            k_sum(2 * l as i32 + 1, false)
        } else {
            let l = row.div_ceil(2); // odd row 2l−1, exponent 2l
            k_sum(2 * l as i32, true)
        };
        total += contrib;
        if contrib < 1e-18 * total.max(1e-300) || contrib == 0.0 {
            // analytic remainder: row bounds decay at least by 1/(R0−1) each
            let q = 1.0 / (r0 - 1.0);
            total += contrib * q / (1.0 - q);
            break;
        }
        row += 1;
        if row > n + 10_000 {
            break;
        }
    }
    Ok(total)
}

/// The truncated (N+1)×(N+1) matrix with rows/columns 0..=N, entries from
/// `b_entry` plus the identity, and the constant-1 convention at (0,0).
#[derive(Debug, Clone)]
pub struct TruncatedMatrix {
    pub n: usize,
    pub entries: DenseMatrix,
    pub alpha: f64,
    pub r0: f64,
    /// Dominance gap per column j ≥ 1 over the rows 1..=N block:
    /// |Q_jj| − Σ_{l≠j} |Q_lj|.
    pub column_gaps: Vec<f64>,
}

pub fn build_truncated(n: usize, alpha: f64, r0: f64) -> Result<TruncatedMatrix> {
    check_matrix_domain(alpha, r0)?;
    if n < 1 {
        return Err(Error::config("truncation dimension must be ≥ 1"));
    }
    let trunc = TruncationPolicy::tail_target(1e-15);
    let dim = n + 1;
    let mut m = DenseMatrix::zeros(dim);
    let a0 = (1.0 + alpha) / (1.0 - alpha);
    for j in 0..dim {
        for l in 0..dim {
            let mut v = b_entry(l, j, alpha, r0, trunc)?.value;
            if l == j {
                v += if j == 0 { 1.0 / a0 } else { 1.0 };
            }
            m.set(l, j, v);
        }
    }
    let mut column_gaps = Vec::with_capacity(n);
    for j in 1..dim {
        let mut off = 0.0;
        for l in 1..dim {
            if l != j {
                off += m.at(l, j).abs();
            }
        }
        let gap = m.at(j, j).abs() - off;
        if gap <= 0.0 {
            return Err(Error::config(format!(
                "internal consistency failure: column {j} not dominant (gap {gap:.3e})"
            )));
        }
        column_gaps.push(gap);
    }
    Ok(TruncatedMatrix {
        n,
        entries: m,
        alpha,
        r0,
        column_gaps,
    })
}

/// Report attached to an expansion solve.
#[derive(Debug, Clone)]
pub struct ExpansionReport {
    pub n: usize,
    /// ‖M_N a − g_N‖₂ / ‖g‖₂ of the dense solve.
    pub solve_residual: f64,
    /// ‖a‖_{ℓ^s} / ‖g‖_{ℓ^s} at the vector's s weight.
    pub stability_ratio: f64,
    pub block_tail: f64,
}

/// Expand circle data (even parity, symmetric family) in the Schauder basis:
/// solve M_N a = g_N with N chosen so block_tail_bound(N) ≤ tol and the
/// discarded coefficient tail of g is ≤ tol.
pub fn expand_boundary(
    g: &CoeffVector,
    params: &MediumParams,
    tol: f64,
) -> Result<(CoeffVector, ExpansionReport)> {
    if g.parity != Parity::Even {
        return Err(Error::config(
            "closed-form expansion covers the even-parity symmetric family only",
        ));
    }
    if !params.is_symmetric() {
        return Err(Error::config(
            "expand_boundary requires a0 = b0; use the numeric general-family path",
        ));
    }
    let alpha = params.alpha();
    params.require_r0_gt2()?;

    // choose N: block tail under tol and g's own tail under tol
    let mut n = 4usize;
    let mut g_cut = g.entries.len().saturating_sub(1);
    while g_cut > 0 && g.entries[g_cut].abs() <= tol {
        g_cut -= 1;
    }
    n = n.max(g_cut).max(1);
    let mut bt = block_tail_bound(n, alpha, params.r0)?;
    while bt > tol && n < 4096 {
        n += 4;
        bt = block_tail_bound(n, alpha, params.r0)?;
    }
    expand_with_dimension(g, params, n, bt)
}

pub fn expand_with_dimension(
    g: &CoeffVector,
    params: &MediumParams,
    n: usize,
    block_tail: f64,
) -> Result<(CoeffVector, ExpansionReport)> {
    let m = build_truncated(n, params.alpha(), params.r0)?;
    let dim = n + 1;
    let mut rhs = vec![0.0; dim];
    for (i, r) in rhs.iter_mut().enumerate() {
        *r = g.entries.get(i).copied().unwrap_or(0.0);
    }
    let sol = m
        .entries
        .solve(&rhs)
        .ok_or_else(|| Error::convergence("dense expansion solve became singular", f64::NAN))?;
    let back = m.entries.matvec(&sol);
    let gnorm = crate::linalg::norm2(&rhs).max(1e-300);
    let solve_residual = back
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        / gnorm;
    if solve_residual > 1e-12 {
        return Err(Error::convergence(
            "dense expansion solve residual above contract",
            solve_residual,
        ));
    }
    let s = g.s_weight;
    let stability_ratio = lp_s_norm(&sol, s) / lp_s_norm(&rhs, s).max(1e-300);
    Ok((
        CoeffVector::new(sol, Parity::Even).with_weight(s),
        ExpansionReport {
            n,
            solve_residual,
            stability_ratio,
            block_tail,
        },
    ))
}
