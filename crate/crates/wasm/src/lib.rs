//! Browser demo bindings: three interactive operations over the library,
//! each returning a flat n×n field (row-major, NaN outside the domain) for
//! the canvas renderer in `www/index.html`.

use wasm_bindgen::prelude::*;

use cuspfield::basis::{self, BasisId, Family, MediumParams, Parity};
use cuspfield::dirichlet;
use cuspfield::geometry::{classify, DiskGeometry, Point, RegionTag};
use cuspfield::greens::{self, Normalization, TransmissionKernel};
use cuspfield::TruncationPolicy;

fn grid(n: usize, extent: f64) -> impl Iterator<Item = Point> {
    (0..n * n).map(move |idx| {
        let i = idx % n;
        let j = idx / n;
        Point::new(
            -extent + 2.0 * extent * (i as f64 + 0.5) / n as f64,
            // canvas rows go top-down
            extent - 2.0 * extent * (j as f64 + 0.5) / n as f64,
        )
    })
}

fn side_of(p: Point) -> RegionTag {
    match classify(p, DiskGeometry::canonical(), 1e-9).tag {
        RegionTag::Interface1 => RegionTag::Inclusion1,
        RegionTag::Interface2 => RegionTag::Inclusion2,
        t => t,
    }
}

/// Solve div(a∇u) = 0 on B_r0 with g(θ) = c_cos2·cos 2θ + c_sin1·sin θ
/// + c_cos1·cos θ and sample u on an n×n grid over [−r0, r0]².
#[wasm_bindgen]
pub fn solve_field(
    a0: f64,
    b0: f64,
    r0: f64,
    c_cos2: f64,
    c_sin1: f64,
    c_cos1: f64,
    n: usize,
) -> Vec<f64> {
    let run = || -> Result<Vec<f64>, cuspfield::Error> {
        let params = MediumParams::new(a0, b0, r0)?;
        let m = 1024;
        let samples: Vec<f64> = (0..m)
            .map(|s| {
                let th = std::f64::consts::TAU * s as f64 / m as f64;
                c_cos2 * (2.0 * th).cos() + c_sin1 * th.sin() + c_cos1 * th.cos()
            })
            .collect();
        let g = dirichlet::analyze_boundary(&samples, r0)?;
        let sol = dirichlet::solve_homogeneous(&g, &params, 1e-7)?;
        Ok(grid(n, r0)
            .map(|p| {
                if p.norm() >= r0 || p.norm() < 1e-6 {
                    return f64::NAN;
                }
                sol.eval_in(p, side_of(p)).map(|s| s.u).unwrap_or(f64::NAN)
            })
            .collect())
    };
    run().unwrap_or_else(|_| vec![f64::NAN; n * n])
}

/// The tangent-disk Green's function x ↦ G(x, y) for a movable source y,
/// raw normalization, on an n×n grid over [−extent, extent]².
#[wasm_bindgen]
pub fn greens_field(a0: f64, b0: f64, y1: f64, y2: f64, extent: f64, n: usize) -> Vec<f64> {
    let run = || -> Result<Vec<f64>, cuspfield::Error> {
        let params = MediumParams::new(a0, b0, 3.0)?;
        let kernel = TransmissionKernel::disk(
            params,
            TruncationPolicy::tail_target(1e-10),
            Normalization::Raw,
        );
        let y = Point::new(y1, y2);
        greens::disk_region(y)?;
        Ok(grid(n, extent)
            .map(|p| greens::eval_g(p, y, &kernel).map(|v| v.value).unwrap_or(f64::NAN))
            .collect())
    };
    run().unwrap_or_else(|_| vec![f64::NAN; n * n])
}

/// One basis solution u_j (even parity) or v_j (odd parity) on an n×n grid.
#[wasm_bindgen]
pub fn basis_field(
    symmetric: bool,
    even: bool,
    j: usize,
    a0: f64,
    b0: f64,
    extent: f64,
    n: usize,
) -> Vec<f64> {
    let run = || -> Result<Vec<f64>, cuspfield::Error> {
        let params = MediumParams::new(a0, if symmetric { a0 } else { b0 }, 3.0)?;
        let id = BasisId {
            family: if symmetric {
                Family::Symmetric
            } else {
                Family::General
            },
            parity: if even { Parity::Even } else { Parity::Odd },
            j,
        };
        let trunc = TruncationPolicy::tail_target(1e-10);
        Ok(grid(n, extent)
            .map(|p| {
                if p.norm() < 1e-6 {
                    return f64::NAN;
                }
                basis::eval_u_in(id, p, side_of(p), &params, trunc)
                    .map(|v| v.value)
                    .unwrap_or(f64::NAN)
            })
            .collect())
    };
    run().unwrap_or_else(|_| vec![f64::NAN; n * n])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_field_constant_like_modes() {
        let v = solve_field(5.0, 0.5, 3.0, 1.0, 0.3, 0.0, 24);
        assert_eq!(v.len(), 24 * 24);
        let finite = v.iter().filter(|x| x.is_finite()).count();
        assert!(finite > 300, "{finite} finite values");
        // maximum principle: |u| bounded by max |g| = 1.3
        for x in v.iter().filter(|x| x.is_finite()) {
            assert!(x.abs() <= 1.3 + 1e-6);
        }
    }

    #[test]
    fn greens_field_zero_contrast_is_log() {
        let n = 16;
        let v = greens_field(1.0, 1.0, 0.9, -0.1, 2.0, n);
        // center of the top-left cell
        let ext = 2.0;
        let p = Point::new(
            -ext + 2.0 * ext * 0.5 / n as f64,
            ext - 2.0 * ext * 0.5 / n as f64,
        );
        let expect = p.dist(Point::new(0.9, -0.1)).ln();
        assert!((v[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn basis_field_runs() {
        let v = basis_field(false, true, 3, 5.0, 0.5, 2.0, 16);
        assert!(v.iter().filter(|x| x.is_finite()).count() > 200);
    }

    #[test]
    fn bad_parameters_yield_nan_field() {
        let v = solve_field(-1.0, 0.5, 3.0, 1.0, 0.0, 0.0, 8);
        assert!(v.iter().all(|x| x.is_nan()));
    }
}
