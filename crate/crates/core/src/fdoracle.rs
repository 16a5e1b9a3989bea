//! Independent finite-volume transmission solver on a uniform grid: the
//! brute-force oracle the analytic constructions are validated against.
//!
//! Flux-conservative 5-point scheme with harmonic-mean face coefficients,
//! Dirichlet data imposed on the first layer of cells outside the outer
//! circle via nearest-boundary-point values, Jacobi-preconditioned CG solve.

use rayon::prelude::*;

use crate::basis::MediumParams;
use crate::error::Error;
use crate::geometry::{classify, DiskGeometry, Point, RegionTag};
use crate::linalg::pcg;
use crate::potential::PiecewiseField;
use crate::Result;

/// Uniform cell-centered grid over the bounding box of the outer circle.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// coordinates of the center of cell (0, 0)
    pub x0: f64,
    pub y0: f64,
    pub a: Vec<f64>,
    pub region: Vec<RegionTag>,
}

impl Grid {
    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

/// Assembled linear system (matrix-free SPD operator + right-hand side).
pub struct FdSystem {
    pub grid: Grid,
    pub r0: f64,
    // cell -> unknown id (usize::MAX when fixed or outside)
    unknown_of: Vec<usize>,
    cells: Vec<usize>,
    ax: Vec<f64>, // face coefficient between (i,j) and (i+1,j)
    ay: Vec<f64>, // face coefficient between (i,j) and (i,j+1)
    rhs: Vec<f64>,
    fixed: Vec<f64>, // Dirichlet values on the first outside layer (by cell)
}

/// Cell-centered solution with the achieved linear-system residual.
pub struct DiscreteSolution {
    pub grid: Grid,
    pub r0: f64,
    pub u: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl DiscreteSolution {
    /// Value at the cell whose center is nearest to p, if that cell carries
    /// a value.
    pub fn value_at(&self, p: Point) -> Option<f64> {
        let g = &self.grid;
        let i = ((p.x1 - g.x0) / g.h).round() as isize;
        let j = ((p.x2 - g.y0) / g.h).round() as isize;
        if i < 0 || j < 0 || i as usize >= g.nx || j as usize >= g.ny {
            return None;
        }
        let v = self.u[g.idx(i as usize, j as usize)];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }
}

/// Builds the flux-conservative system for div(a ∇u) = div f (+ S) on the
/// disk B_r0 with Dirichlet data `boundary` (a function of θ) on the circle.
pub fn assemble(
    geo: DiskGeometry,
    params: &MediumParams,
    rhs_field: Option<&PiecewiseField>,
    scalar_source: Option<&dyn Fn(Point) -> f64>,
    boundary: &dyn Fn(f64) -> f64,
    h: f64,
) -> Result<FdSystem> {
    let r0 = params.r0;
    let rmin = geo.r1.min(geo.r2);
    if h > rmin / 16.0 {
        return Err(Error::config(format!(
            "grid spacing h = {h} does not resolve the geometry (need ≤ r_min/16 = {})",
            rmin / 16.0
        )));
    }
    let half = r0 + 2.0 * h;
    let n = (2.0 * half / h).ceil() as usize + 1;
    let x0 = -(n as f64 - 1.0) * h / 2.0;
    let mut grid = Grid {
        nx: n,
        ny: n,
        h,
        x0,
        y0: x0,
        a: vec![1.0; n * n],
        region: vec![RegionTag::Matrix; n * n],
    };
    for j in 0..n {
        for i in 0..n {
            let p = grid.cell_center(i, j);
            // the tangency cell belongs to the matrix phase
            let tag = if p.norm() < h / 2.0 {
                RegionTag::Matrix
            } else {
                match classify(p, geo, 0.0).tag {
                    RegionTag::Interface1 => RegionTag::Inclusion1,
                    RegionTag::Interface2 => RegionTag::Inclusion2,
                    t => t,
                }
            };
            let idx = j * n + i;
            grid.region[idx] = tag;
            grid.a[idx] = params.coefficient(tag);
        }
    }

    // unknowns: cells strictly inside the circle; first outside layer fixed
    let mut unknown_of = vec![usize::MAX; n * n];
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if grid.cell_center(i, j).norm() < r0 {
                unknown_of[grid.idx(i, j)] = cells.len();
                cells.push(grid.idx(i, j));
            }
        }
    }
    let mut fixed = vec![f64::NAN; n * n];
    for j in 0..n {
        for i in 0..n {
            let idx = grid.idx(i, j);
            if unknown_of[idx] != usize::MAX {
                continue;
            }
            let mut touches = false;
            if i > 0 && unknown_of[grid.idx(i - 1, j)] != usize::MAX {
                touches = true;
            }
            if i + 1 < n && unknown_of[grid.idx(i + 1, j)] != usize::MAX {
                touches = true;
            }
            if j > 0 && unknown_of[grid.idx(i, j - 1)] != usize::MAX {
                touches = true;
            }
            if j + 1 < n && unknown_of[grid.idx(i, j + 1)] != usize::MAX {
                touches = true;
            }
            if touches {
                let p = grid.cell_center(i, j);
                fixed[idx] = boundary(p.x2.atan2(p.x1));
            }
        }
    }

    // harmonic-mean face coefficients
    let hm = |a: f64, b: f64| 2.0 * a * b / (a + b);
    let mut ax = vec![0.0; n * n];
    let mut ay = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let idx = grid.idx(i, j);
            if i + 1 < n {
                ax[idx] = hm(grid.a[idx], grid.a[grid.idx(i + 1, j)]);
            }
            if j + 1 < n {
                ay[idx] = hm(grid.a[idx], grid.a[grid.idx(i, j + 1)]);
            }
        }
    }

    // RHS: centered discrete divergence of face-averaged f plus the scalar
    // source, negated for the SPD form −div(a∇u) = −(div f + S)
    let mut rhs = vec![0.0; cells.len()];
    if rhs_field.is_some() || scalar_source.is_some() {
        let fval = |i: usize, j: usize| -> [f64; 2] {
            match rhs_field {
                Some(f) => {
                    let idx = grid.idx(i, j);
                    f.eval(grid.region[idx], grid.cell_center(i, j))
                }
                None => [0.0, 0.0],
            }
        };
        for (u_id, &cell) in cells.iter().enumerate() {
            let i = cell % n;
            let j = cell / n;
            let fe = 0.5 * (fval(i, j)[0] + fval(i + 1, j)[0]);
            let fw = 0.5 * (fval(i - 1, j)[0] + fval(i, j)[0]);
            let fn_ = 0.5 * (fval(i, j)[1] + fval(i, j + 1)[1]);
            let fs = 0.5 * (fval(i, j - 1)[1] + fval(i, j)[1]);
            let mut div = (fe - fw) / h + (fn_ - fs) / h;
            if let Some(s) = scalar_source {
                div += s(grid.cell_center(i, j));
            }
            rhs[u_id] = -div;
        }
    }

    // fold Dirichlet data into the RHS
    for (u_id, &cell) in cells.iter().enumerate() {
        let i = cell % n;
        let j = cell / n;
        let h2 = h * h;
        let mut add = 0.0;
        let mut visit = |nb: usize, coeff: f64| {
            if unknown_of[nb] == usize::MAX {
                let v = fixed[nb];
                debug_assert!(v.is_finite(), "interior cell touching a non-layer cell");
                add += coeff * v;
            }
        };
        visit(grid.idx(i - 1, j), ax[grid.idx(i - 1, j)] / h2);
        visit(grid.idx(i + 1, j), ax[cell] / h2);
        visit(grid.idx(i, j - 1), ay[grid.idx(i, j - 1)] / h2);
        visit(grid.idx(i, j + 1), ay[cell] / h2);
        rhs[u_id] += add;
    }

    Ok(FdSystem {
        grid,
        r0,
        unknown_of,
        cells,
        ax,
        ay,
        rhs,
        fixed,
    })
}

impl FdSystem {
    pub fn n_unknowns(&self) -> usize {
        self.cells.len()
    }

    /// y = A x for the SPD operator A = −div_h(a ∇_h ·).
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.grid.nx;
        let h2 = self.grid.h * self.grid.h;
        y.par_iter_mut().enumerate().for_each(|(u_id, out)| {
            let cell = self.cells[u_id];
            let i = cell % n;
            let j = cell / n;
            let cw = self.ax[self.grid.idx(i - 1, j)] / h2;
            let ce = self.ax[cell] / h2;
            let cs = self.ay[self.grid.idx(i, j - 1)] / h2;
            let cn = self.ay[cell] / h2;
            let mut acc = (cw + ce + cs + cn) * x[u_id];
            let mut sub = |nb: usize, c: f64| {
                let un = self.unknown_of[nb];
                if un != usize::MAX {
                    acc -= c * x[un];
                }
            };
            sub(self.grid.idx(i - 1, j), cw);
            sub(self.grid.idx(i + 1, j), ce);
            sub(self.grid.idx(i, j - 1), cs);
            sub(self.grid.idx(i, j + 1), cn);
            *out = acc;
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        let n = self.grid.nx;
        let h2 = self.grid.h * self.grid.h;
        self.cells
            .iter()
            .map(|&cell| {
                let i = cell % n;
                let j = cell / n;
                (self.ax[self.grid.idx(i - 1, j)]
                    + self.ax[cell]
                    + self.ay[self.grid.idx(i, j - 1)]
                    + self.ay[cell])
                    / h2
            })
            .collect()
    }

    /// Applies the interior stencil to an arbitrary smooth field at cells
    /// whose full stencil is made of unknowns, returning div_h(a∇_h u): the
    /// truncation residual for manufactured harmonic solutions.
    pub fn stencil_residual(&self, exact: &dyn Fn(Point) -> f64) -> Vec<f64> {
        let n = self.grid.nx;
        let h2 = self.grid.h * self.grid.h;
        self.cells
            .iter()
            .filter(|&&cell| {
                let i = cell % n;
                let j = cell / n;
                [
                    self.grid.idx(i - 1, j),
                    self.grid.idx(i + 1, j),
                    self.grid.idx(i, j - 1),
                    self.grid.idx(i, j + 1),
                ]
                .iter()
                .all(|&nb| self.unknown_of[nb] != usize::MAX)
            })
            .map(|&cell| {
                let i = cell % n;
                let j = cell / n;
                let v = |ii: usize, jj: usize| exact(self.grid.cell_center(ii, jj));
                let cw = self.ax[self.grid.idx(i - 1, j)] / h2;
                let ce = self.ax[cell] / h2;
                let cs = self.ay[self.grid.idx(i, j - 1)] / h2;
                let cn = self.ay[cell] / h2;
                cw * (v(i - 1, j) - v(i, j))
                    + ce * (v(i + 1, j) - v(i, j))
                    + cs * (v(i, j - 1) - v(i, j))
                    + cn * (v(i, j + 1) - v(i, j))
            })
            .collect()
    }
}

/// CG solve to relative residual `tol`.
pub fn solve_system(system: &FdSystem, tol: f64) -> Result<DiscreteSolution> {
    let diag = system.diagonal();
    let max_iter = 60_000;
    let (x, rel, iters) = pcg(
        |v, out| system.apply(v, out),
        &diag,
        &system.rhs,
        tol,
        max_iter,
    );
    if rel > tol {
        return Err(Error::convergence(
            format!("CG did not converge in {max_iter} iterations"),
            rel,
        ));
    }
    let mut u = system.fixed.clone();
    for (u_id, &cell) in system.cells.iter().enumerate() {
        u[cell] = x[u_id];
    }
    Ok(DiscreteSolution {
        grid: system.grid.clone(),
        r0: system.r0,
        u,
        residual: rel,
        iterations: iters,
    })
}

/// Exclusion bands for analytic-vs-discrete comparisons.
#[derive(Debug, Clone, Copy)]
pub struct CompareExclusion {
    pub interface_band: f64,
    pub cusp_radius: f64,
    /// band inside the outer circle excluded from the comparison
    pub outer_band: f64,
}

impl Default for CompareExclusion {
    fn default() -> Self {
        CompareExclusion {
            interface_band: 0.03,
            cusp_radius: 0.1,
            outer_band: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub rel_l2: f64,
    pub rel_linf: f64,
    pub n_points: usize,
    pub per_region: Vec<(RegionTag, f64)>,
}

/// Relative discrepancy between a reference field (evaluated at cell
/// centers) and the discrete solution, outside the exclusion bands.
pub fn compare(
    geo: DiskGeometry,
    sol: &DiscreteSolution,
    exclusion: CompareExclusion,
    reference: impl Fn(Point, RegionTag) -> Option<f64> + Sync,
) -> Result<ErrorReport> {
    let g = &sol.grid;
    let indexed: Vec<(usize, Point, RegionTag)> = (0..g.nx * g.ny)
        .filter_map(|idx| {
            let i = idx % g.nx;
            let j = idx / g.nx;
            let p = g.cell_center(i, j);
            if sol.u[idx].is_nan() || p.norm() >= sol.r0 - exclusion.outer_band {
                return None;
            }
            if p.norm() < exclusion.cusp_radius {
                return None;
            }
            let d1 = (p.dist(geo.center1()) - geo.r1).abs();
            let d2 = (p.dist(geo.center2()) - geo.r2).abs();
            if d1 < exclusion.interface_band || d2 < exclusion.interface_band {
                return None;
            }
            Some((idx, p, g.region[idx]))
        })
        .collect();

    let evals: Vec<(usize, RegionTag, f64, f64)> = indexed
        .par_iter()
        .filter_map(|&(idx, p, tag)| reference(p, tag).map(|v| (idx, tag, v, sol.u[idx])))
        .collect();
    if evals.is_empty() {
        return Err(Error::config("empty comparison set"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut linf_num: f64 = 0.0;
    let mut linf_den: f64 = 0.0;
    let mut per: std::collections::HashMap<i32, (f64, f64, RegionTag)> =
        std::collections::HashMap::new();
    for &(_, tag, ref_v, u_v) in &evals {
        let d = ref_v - u_v;
        num += d * d;
        den += ref_v * ref_v;
        linf_num = linf_num.max(d.abs());
        linf_den = linf_den.max(ref_v.abs());
        let e = per.entry(tag.code()).or_insert((0.0, 0.0, tag));
        e.0 += d * d;
        e.1 += ref_v * ref_v;
    }
    let mut per_region: Vec<(RegionTag, f64)> = per
        .values()
        .map(|&(n, d, t)| (t, (n / d.max(1e-300)).sqrt()))
        .collect();
    per_region.sort_by_key(|(t, _)| t.code());
    Ok(ErrorReport {
        rel_l2: (num / den.max(1e-300)).sqrt(),
        rel_linf: linf_num / linf_den.max(1e-300),
        n_points: evals.len(),
        per_region,
    })
}
