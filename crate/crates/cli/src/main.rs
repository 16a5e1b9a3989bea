//! Batch front-end: every library capability as a subcommand with JSON
//! configs and CSV/JSON outputs.
//!
//! Exit codes: 0 success, 1 verify-battery failure, 2 configuration error,
//! 3 convergence failure, 4 domain error.

mod config;
mod csvio;
mod verify;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cuspfield::basis::{self, BasisId, Family, MediumParams, Parity};
use cuspfield::coeffmatrix;
use cuspfield::dirichlet::{self, FieldSample};
use cuspfield::fdoracle;
use cuspfield::geometry::{self, classify, DiskGeometry, Exclusion, Point, RegionTag};
use cuspfield::greens::{self, Normalization, TransmissionKernel};
use cuspfield::potential::volume_solution;
use cuspfield::{Error, TruncationPolicy};

use config::{config_hash, ProblemConfig};
use csvio::{fmt_f, write_field_csv, write_rows_csv, CsvHeader};

#[derive(Parser)]
#[command(name = "cuspfield", version, about = "Transmission problem on two tangent disks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one basis solution u_j / v_j on a circle or grid
    Basis(BasisArgs),
    /// Dump the truncated change-of-basis matrix and its dominance report
    Matrix(MatrixArgs),
    /// Tabulate a Green's function for a fixed source point
    Green(GreenArgs),
    /// Evaluate the volume potential of the configured source field
    Potential(PotentialArgs),
    /// Solve the Dirichlet problem from a problem-spec JSON
    Solve(SolveArgs),
    /// Run the finite-volume oracle alone
    Oracle(OracleArgs),
    /// Run the named invariant batteries
    Verify(verify::VerifyArgs),
    /// Compute the unequal-radius canonicalizing map
    Map(MapArgs),
}

#[derive(Args)]
struct BasisArgs {
    #[arg(long, default_value = "gen")]
    family: String,
    #[arg(long, default_value = "even")]
    parity: String,
    #[arg(long)]
    j: usize,
    #[arg(long)]
    a0: f64,
    #[arg(long)]
    b0: Option<f64>,
    #[arg(long, default_value_t = 3.0)]
    r0: f64,
    /// evaluate on the outer circle (n samples)
    #[arg(long)]
    circle: bool,
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// evaluate on an n×n grid over [-extent, extent]²
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    extent: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    tail_tol: f64,
    #[arg(long)]
    out: PathBuf,
    /// also write the trace coefficients
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    r0: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GreenArgs {
    #[arg(long, default_value = "disk")]
    kind: String,
    #[arg(long)]
    a0: f64,
    #[arg(long)]
    b0: f64,
    #[arg(long, default_value_t = 3.0)]
    r0: f64,
    /// source point "y1,y2"
    #[arg(long)]
    y: String,
    #[arg(long, default_value_t = 48)]
    grid: usize,
    #[arg(long)]
    extent: Option<f64>,
    #[arg(long, default_value = "raw")]
    normalization: String,
    #[arg(long, default_value_t = 1e-12)]
    tail_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PotentialArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// cross-check against the finite-volume oracle
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    oracle_h: f64,
    /// override the geometry as "r1=A,r2=B"
    #[arg(long)]
    geometry: Option<String>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    r1: f64,
    #[arg(long)]
    r2: f64,
    /// exclusion disk "cx,cy,r" the pole must clear
    #[arg(long)]
    exclusion: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("CUSP_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Basis(a) => cmd_basis(a),
        Command::Matrix(a) => cmd_matrix(a),
        Command::Green(a) => cmd_green(a),
        Command::Potential(a) => cmd_potential(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Verify(a) => return verify::cmd_verify(a),
        Command::Map(a) => cmd_map(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_class(&e))
        }
    }
}

fn exit_class(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Convergence { .. } => 3,
        Error::Domain(_) => 4,
    }
}

fn parse_family(s: &str) -> Result<Family, Error> {
    match s {
        "sym" | "symmetric" => Ok(Family::Symmetric),
        "gen" | "general" => Ok(Family::General),
        other => Err(Error::config(format!("unknown family {other:?}"))),
    }
}

fn parse_parity(s: &str) -> Result<Parity, Error> {
    match s {
        "even" => Ok(Parity::Even),
        "odd" => Ok(Parity::Odd),
        other => Err(Error::config(format!("unknown parity {other:?}"))),
    }
}

fn parse_point(s: &str) -> Result<Point, Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::config(format!("expected \"x,y\", got {s:?}")));
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| Error::config(e.to_string()))?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| Error::config(e.to_string()))?;
    Ok(Point::new(x, y))
}

fn grid_points(n: usize, extent: f64) -> Vec<Point> {
    let mut pts = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = -extent + 2.0 * extent * (i as f64 + 0.5) / n as f64;
            let y = -extent + 2.0 * extent * (j as f64 + 0.5) / n as f64;
            pts.push(Point::new(x, y));
        }
    }
    pts
}

fn cmd_basis(a: BasisArgs) -> Result<(), Error> {
    let family = parse_family(&a.family)?;
    let parity = parse_parity(&a.parity)?;
    let b0 = a.b0.unwrap_or(a.a0);
    let params = MediumParams::new(a.a0, b0, a.r0)?;
    let id = BasisId { family, parity, j: a.j };
    let trunc = TruncationPolicy::tail_target(a.tail_tol);
    let hash = config_hash(
        format!(
            "basis {} {} {} {} {} {} {}",
            a.family, a.parity, a.j, a.a0, b0, a.r0, a.tail_tol
        )
        .as_bytes(),
    );

    let mut achieved_tail: f64 = 0.0;
    let grid_n = if a.circle { None } else { a.grid };
    if grid_n.is_none() {
        let mut rows = Vec::with_capacity(a.n);
        for s in 0..a.n {
            let th = std::f64::consts::TAU * (s as f64) / (a.n as f64);
            let x = Point::new(a.r0 * th.cos(), a.r0 * th.sin());
            let v = basis::eval_u_in(id, x, RegionTag::Matrix, &params, trunc)?;
            achieved_tail = achieved_tail.max(v.tail_bound);
            rows.push(vec![
                fmt_f(th),
                fmt_f(x.x1),
                fmt_f(x.x2),
                fmt_f(v.value),
                fmt_f(v.tail_bound),
            ]);
        }
        let header = CsvHeader {
            command: "basis --circle".into(),
            config_hash: hash,
            truncation: format!("tail_tol={:.3e}", a.tail_tol),
            achieved: format!("max_tail={achieved_tail:.3e}"),
        };
        write_rows_csv(&a.out, &header, "theta,x1,x2,u,tail_bound", rows)?;
    } else {
        let n = grid_n.unwrap_or(64);
        let extent = a.extent.unwrap_or(a.r0);
        let mut samples = Vec::new();
        for p in grid_points(n, extent) {
            let tag = match classify(p, DiskGeometry::canonical(), 1e-9).tag {
                RegionTag::Interface1 => RegionTag::Inclusion1,
                RegionTag::Interface2 => RegionTag::Inclusion2,
                t => t,
            };
            if p.norm() < 1e-6 {
                continue;
            }
            let v = basis::eval_u_in(id, p, tag, &params, trunc)?;
            let g = basis::eval_u_gradient_in(id, p, tag, &params, trunc)?;
            achieved_tail = achieved_tail.max(v.tail_bound);
            samples.push(FieldSample {
                point: p,
                region: tag,
                u: v.value,
                grad: g.value,
                tail: v.tail_bound,
            });
        }
        let header = CsvHeader {
            command: "basis --grid".into(),
            config_hash: hash,
            truncation: format!("tail_tol={:.3e}", a.tail_tol),
            achieved: format!("max_tail={achieved_tail:.3e}"),
        };
        write_field_csv(&a.out, &header, &samples)?;
    }

    if let Some(trace_path) = a.trace_out {
        let n_out = (2 * a.j + 16).max(32);
        let coeffs = if family == Family::Symmetric && parity == Parity::Even {
            basis::trace_fourier(id, n_out, &params, trunc)?
        } else {
            basis::numerical_trace_fourier(id, &params, 4096, n_out, trunc)?
        };
        let header = CsvHeader {
            command: "basis --trace-out".into(),
            config_hash: hash,
            truncation: format!("tail_tol={:.3e}", a.tail_tol),
            achieved: "spectral trace analysis".into(),
        };
        let rows = coeffs
            .entries
            .iter()
            .enumerate()
            .map(|(m, &c)| vec![m.to_string(), fmt_f(c)]);
        write_rows_csv(&trace_path, &header, "m,coefficient", rows)?;
    }
    Ok(())
}

fn cmd_matrix(a: MatrixArgs) -> Result<(), Error> {
    let m = coeffmatrix::build_truncated(a.n, a.alpha, a.r0)?;
    let hash = config_hash(format!("matrix {} {} {}", a.alpha, a.r0, a.n).as_bytes());
    let header = CsvHeader {
        command: format!("matrix N={} alpha={} R0={}", a.n, a.alpha, a.r0),
        config_hash: hash,
        truncation: "entry tail_tol=1e-15".into(),
        achieved: format!(
            "min_column_gap={:.6e}",
            m.column_gaps.iter().cloned().fold(f64::INFINITY, f64::min)
        ),
    };
    let dim = a.n + 1;
    let rows = (0..dim).map(|l| (0..dim).map(|j| fmt_f(m.entries.at(l, j))).collect());
    let columns = (0..dim).map(|j| format!("c{j}")).collect::<Vec<_>>().join(",");
    write_rows_csv(&a.out, &header, &columns, rows)?;

    if let Some(report_path) = a.report {
        let trunc = TruncationPolicy::tail_target(1e-14);
        let mut sums = Vec::new();
        for j in 1..=a.n {
            let cs = coeffmatrix::column_abs_sum(j, a.alpha, a.r0, trunc)?;
            sums.push(cs.bound + cs.tail_bound);
        }
        let report = serde_json::json!({
            "n": a.n,
            "alpha": a.alpha,
            "r0": a.r0,
            "column_gaps": m.column_gaps,
            "column_abs_sums": sums,
            "all_dominant": m.column_gaps.iter().all(|&g| g > 0.0),
            "block_tail_bound": coeffmatrix::block_tail_bound(a.n, a.alpha, a.r0)?,
        });
        fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())
            .map_err(|e| Error::config(format!("cannot write report: {e}")))?;
    }
    Ok(())
}

fn cmd_green(a: GreenArgs) -> Result<(), Error> {
    let params = MediumParams::new(a.a0, a.b0, a.r0)?;
    let trunc = TruncationPolicy::tail_target(a.tail_tol);
    let norm = match a.normalization.as_str() {
        "raw" => Normalization::Raw,
        "physical" => Normalization::Physical,
        other => return Err(Error::config(format!("unknown normalization {other:?}"))),
    };
    let y = parse_point(&a.y)?;
    let hash = config_hash(
        format!("green {} {} {} {} {} {}", a.kind, a.a0, a.b0, a.r0, a.y, a.normalization).as_bytes(),
    );
    let extent = a.extent.unwrap_or(2.5);
    let (kernel, y_region) = match a.kind.as_str() {
        "disk" => {
            let k = TransmissionKernel::disk(params, trunc, norm);
            (k, greens::disk_region(y)?)
        }
        "strip" => {
            let k = TransmissionKernel::strip(params, trunc, norm);
            (k, greens::strip_region(y)?)
        }
        other => return Err(Error::config(format!("unknown kernel kind {other:?}"))),
    };

    let mut rows = Vec::new();
    let mut worst_tail: f64 = 0.0;
    for p in grid_points(a.grid, extent) {
        let eval = match a.kind.as_str() {
            "disk" => greens::eval_g_full(p, y, &kernel),
            _ => greens::eval_gtilde_full(p, y, &kernel),
        };
        let Ok(e) = eval else { continue };
        let region_x = match a.kind.as_str() {
            "disk" => greens::disk_region(p),
            _ => greens::strip_region(p),
        };
        let Ok(rx) = region_x else { continue };
        worst_tail = worst_tail.max(e.tail_value);
        rows.push(vec![
            fmt_f(p.x1),
            fmt_f(p.x2),
            fmt_f(y.x1),
            fmt_f(y.x2),
            rx.code().to_string(),
            y_region.code().to_string(),
            fmt_f(e.value),
            fmt_f(e.tail_value),
        ]);
    }
    let header = CsvHeader {
        command: format!("green --kind {}", a.kind),
        config_hash: hash,
        truncation: format!("tail_tol={:.3e}", a.tail_tol),
        achieved: format!("max_tail={worst_tail:.3e}"),
    };
    write_rows_csv(
        &a.out,
        &header,
        "x1,x2,y1,y2,region_x,region_y,G,tail_bound",
        rows,
    )
}

fn cmd_potential(a: PotentialArgs) -> Result<(), Error> {
    let raw = fs::read(&a.config).map_err(|e| Error::config(format!("cannot read config: {e}")))?;
    let cfg: ProblemConfig =
        serde_json::from_slice(&raw).map_err(|e| Error::config(format!("config schema: {e}")))?;
    let params = cfg.params()?;
    let field = cfg
        .rhs_field()?
        .ok_or_else(|| Error::config("potential command needs an rhs field"))?;
    let quad = cfg.quadrature.map(|q| q.to_spec()).unwrap_or_default();
    let kernel = TransmissionKernel::disk(
        params,
        TruncationPolicy::tail_target(cfg.tolerances.tail),
        Normalization::Physical,
    );
    let n = cfg.grid.as_ref().map(|g| g.n).unwrap_or(17);
    let extent = cfg
        .grid
        .as_ref()
        .and_then(|g| g.extent)
        .unwrap_or(params.r0);
    let hash = config_hash(&raw);

    let mut rows = Vec::new();
    let mut worst_tail: f64 = 0.0;
    for p in grid_points(n, extent) {
        if p.norm() < 1e-6 || p.norm() > params.r0 {
            continue;
        }
        let Ok(v) = volume_solution(p, &field, None, None, &kernel, quad) else {
            continue;
        };
        worst_tail = worst_tail.max(v.tail_bound);
        rows.push(vec![fmt_f(p.x1), fmt_f(p.x2), fmt_f(v.value), fmt_f(v.tail_bound)]);
    }
    let header = CsvHeader {
        command: "potential".into(),
        config_hash: hash,
        truncation: format!("tail_tol={:.3e}", cfg.tolerances.tail),
        achieved: format!("max_tail={worst_tail:.3e}"),
    };
    write_rows_csv(&a.out, &header, "x1,x2,u,tail_bound", rows)
}

fn cmd_solve(a: SolveArgs) -> Result<(), Error> {
    let raw = fs::read(&a.config).map_err(|e| Error::config(format!("cannot read config: {e}")))?;
    let mut cfg: ProblemConfig =
        serde_json::from_slice(&raw).map_err(|e| Error::config(format!("config schema: {e}")))?;
    if let Some(gspec) = &a.geometry {
        let mut r1 = None;
        let mut r2 = None;
        for part in gspec.split(',') {
            let mut kv = part.split('=');
            match (kv.next(), kv.next()) {
                (Some("r1"), Some(v)) => r1 = v.parse().ok(),
                (Some("r2"), Some(v)) => r2 = v.parse().ok(),
                _ => return Err(Error::config(format!("bad geometry spec {gspec:?}"))),
            }
        }
        cfg.geometry.r1 = r1.ok_or_else(|| Error::config("geometry spec needs r1"))?;
        cfg.geometry.r2 = r2.ok_or_else(|| Error::config("geometry spec needs r2"))?;
    }
    let params = cfg.params()?;
    let geo = cfg.disk_geometry()?;
    let g = cfg.fourier_boundary()?;
    let rhs = cfg.rhs_field()?;
    let tol = cfg.tolerances.solve;
    let hash = config_hash(&raw);
    let n = cfg.grid.as_ref().map(|g| g.n).unwrap_or(64);
    let extent = cfg
        .grid
        .as_ref()
        .and_then(|g| g.extent)
        .unwrap_or(params.r0);

    let mut report = serde_json::Map::new();
    report.insert("config_hash".into(), format!("{hash:016x}").into());
    report.insert("seed".into(), cfg.seed.into());

    let samples: Vec<FieldSample>;
    let solve_report;
    let mut transmission_report = None;

    if geo.is_canonical() {
        let sol = match &rhs {
            None => dirichlet::solve_homogeneous(&g, &params, tol)?,
            Some(f) => dirichlet::solve_nonhomogeneous(
                f,
                &g,
                &params,
                tol,
                cfg.quadrature.map(|q| q.to_spec()).unwrap_or_default(),
            )?,
        };
        solve_report = sol.report.clone();
        let pts: Vec<Point> = grid_points(n, extent)
            .into_iter()
            .filter(|p| p.norm() <= params.r0 && p.norm() > 1e-6)
            .collect();
        samples = dirichlet::evaluate_solution(&sol, &pts)?;
    } else {
        let sol = dirichlet::unequal_radius_solve(rhs.as_ref(), &g, geo, &params, tol)?;
        solve_report = sol.report.clone();
        let pts: Vec<Point> = grid_points(n, extent)
            .into_iter()
            .filter(|p| p.norm() <= params.r0 && p.norm() > 1e-6)
            .collect();
        samples = pts
            .into_iter()
            .filter_map(|p| {
                let tag = match classify(p, geo, 1e-9).tag {
                    RegionTag::Interface1 => RegionTag::Inclusion1,
                    RegionTag::Interface2 => RegionTag::Inclusion2,
                    t => t,
                };
                sol.eval_in(p, tag).ok()
            })
            .collect();
        // transmission report on the original circles
        let mut worst_value: f64 = 0.0;
        let mut worst_flux: f64 = 0.0;
        for (c, r, inside, a_in) in [
            (geo.center1(), geo.r1, RegionTag::Inclusion1, params.a0),
            (geo.center2(), geo.r2, RegionTag::Inclusion2, params.b0),
        ] {
            for s in 0..64 {
                let phi = std::f64::consts::TAU * (s as f64 + 0.5) / 64.0;
                let x = Point::new(c.x1 + r * phi.cos(), c.x2 + r * phi.sin());
                if x.norm() < 0.05 || x.norm() > params.r0 - 0.05 {
                    continue;
                }
                let (Ok(vi), Ok(vo)) = (sol.eval_in(x, inside), sol.eval_in(x, RegionTag::Matrix))
                else {
                    continue;
                };
                worst_value = worst_value.max((vi.u - vo.u).abs());
                let nu = [phi.cos(), phi.sin()];
                let fi = a_in * (vi.grad[0] * nu[0] + vi.grad[1] * nu[1]);
                let fo = vo.grad[0] * nu[0] + vo.grad[1] * nu[1];
                worst_flux = worst_flux.max((fi - fo).abs());
            }
        }
        transmission_report = Some(serde_json::json!({
            "worst_value_jump": worst_value,
            "worst_flux_jump": worst_flux,
        }));
    }

    report.insert("residual_max".into(), solve_report.residual_max.into());
    report.insert("warning".into(), solve_report.warning.into());
    report.insert("even_n".into(), solve_report.even_n.into());
    report.insert("odd_n".into(), solve_report.odd_n.into());
    if let Some(tr) = transmission_report {
        report.insert("transmission".into(), tr);
    }

    if a.oracle {
        if !geo.is_canonical() {
            return Err(Error::config("--oracle supports the canonical geometry"));
        }
        let gref = g.clone();
        let sys = fdoracle::assemble(
            geo,
            &params,
            rhs.as_ref(),
            None,
            &|th| gref.eval(th),
            a.oracle_h,
        )?;
        let fd = fdoracle::solve_system(&sys, 1e-10)?;
        // compare against the already-evaluated analytic samples
        let sol_for_cmp = match &rhs {
            None => dirichlet::solve_homogeneous(&g, &params, tol)?,
            Some(f) => dirichlet::solve_nonhomogeneous(
                f,
                &g,
                &params,
                tol,
                cfg.quadrature.map(|q| q.to_spec()).unwrap_or_default(),
            )?,
        };
        let rep = fdoracle::compare(
            geo,
            &fd,
            fdoracle::CompareExclusion::default(),
            |p, tag| sol_for_cmp.eval_in(p, tag).ok().map(|s| s.u),
        )?;
        report.insert(
            "oracle".into(),
            serde_json::json!({
                "h": a.oracle_h,
                "rel_l2": rep.rel_l2,
                "rel_linf": rep.rel_linf,
                "n_points": rep.n_points,
            }),
        );
    }

    let header = CsvHeader {
        command: "solve".into(),
        config_hash: hash,
        truncation: format!("solve_tol={tol:.3e}, tail_tol={:.3e}", cfg.tolerances.tail),
        achieved: format!("boundary_residual={:.3e}", solve_report.residual_max),
    };
    write_field_csv(&a.out, &header, &samples)?;
    if let Some(path) = a.report {
        fs::write(
            &path,
            serde_json::to_string_pretty(&serde_json::Value::Object(report)).unwrap(),
        )
        .map_err(|e| Error::config(format!("cannot write report: {e}")))?;
    }
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Result<(), Error> {
    let raw = fs::read(&a.config).map_err(|e| Error::config(format!("cannot read config: {e}")))?;
    let cfg: ProblemConfig =
        serde_json::from_slice(&raw).map_err(|e| Error::config(format!("config schema: {e}")))?;
    let params = cfg.params()?;
    let geo = cfg.disk_geometry()?;
    let g = cfg.fourier_boundary()?;
    let rhs = cfg.rhs_field()?;
    let sys = fdoracle::assemble(geo, &params, rhs.as_ref(), None, &|th| g.eval(th), a.h)?;
    let fd = fdoracle::solve_system(&sys, 1e-10)?;
    let hash = config_hash(&raw);
    let header = CsvHeader {
        command: format!("oracle h={}", a.h),
        config_hash: hash,
        truncation: "cg_tol=1e-10".into(),
        achieved: format!("residual={:.3e}, iterations={}", fd.residual, fd.iterations),
    };
    let gr = &fd.grid;
    let mut rows = Vec::new();
    for j in 0..gr.ny {
        for i in 0..gr.nx {
            let idx = gr.idx(i, j);
            if !fd.u[idx].is_finite() {
                continue;
            }
            let p = gr.cell_center(i, j);
            rows.push(vec![
                fmt_f(p.x1),
                fmt_f(p.x2),
                gr.region[idx].code().to_string(),
                fmt_f(gr.a[idx]),
                fmt_f(fd.u[idx]),
            ]);
        }
    }
    write_rows_csv(&a.out, &header, "x1,x2,region,a,u", rows)
}

fn cmd_map(a: MapArgs) -> Result<(), Error> {
    let geo = DiskGeometry::new(a.r1, a.r2)?;
    let exclusion = match &a.exclusion {
        None => Exclusion::ball(2.0 * a.r1.max(a.r2)),
        Some(s) => {
            let parts: Vec<&str> = s.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::config("exclusion must be \"cx,cy,r\""));
            }
            Exclusion {
                center: Point::new(
                    parts[0].trim().parse().map_err(|_| Error::config("bad exclusion"))?,
                    parts[1].trim().parse().map_err(|_| Error::config("bad exclusion"))?,
                ),
                radius: parts[2].trim().parse().map_err(|_| Error::config("bad exclusion"))?,
            }
        }
    };
    let map = geometry::equal_radius_map(geo, exclusion)?;
    let ratio_root = if (a.r1 - a.r2).abs() > 1e-14 {
        Some(geometry::tangency_ratio_root(geo)?)
    } else {
        None
    };
    let (rot, scale, trans) = map.post_transform();
    let (c1, r1_img) = map.image_circle(geo.center1(), geo.r1)?;
    let (c2, r2_img) = map.image_circle(geo.center2(), geo.r2)?;
    let out = serde_json::json!({
        "identity": map.is_identity(),
        "pole": map.pole().map(|p| [p.x1, p.x2]),
        "rotation": rot,
        "scale": scale,
        "translation": [trans.x1, trans.x2],
        "ratio_root": ratio_root,
        "image_circle1": {"center": [c1.x1, c1.x2], "radius": r1_img},
        "image_circle2": {"center": [c2.x1, c2.x2], "radius": r2_img},
        "image_radius_gap": (r1_img - r2_img).abs(),
    });
    fs::write(&a.out, serde_json::to_string_pretty(&out).unwrap())
        .map_err(|e| Error::config(format!("cannot write map: {e}")))
}
