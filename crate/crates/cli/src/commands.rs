use std::fmt::Write as _;

use spinmeter::analytic::{self, linspace, ExactRoute, PolarGrid, RadialProfile, RESONANCE_WINDOW};
use spinmeter::checkerboard::{run_walk, time_average_distribution};
use spinmeter::oracle::{self, compare_with_route, propagate, Discrepancy, SpectralGrid};
use spinmeter::variant::variant_angle_map;
use spinmeter::{Error, Route};

use crate::csv::{Cell, CsvWriter};
use crate::error::{CliError, CliResult};
use crate::settings::RunConfig;

/// Analytic vs oracle density, relative to the peak.
pub const ANALYTIC_ORACLE_TOL: f64 = 5e-3;
/// Smoothed walk vs either continuum route.
pub const WALK_TOL: f64 = 2e-2;
pub const QUADRATURE_PROBABILITY_TOL: f64 = 1e-3;
pub const SPECTRAL_PROBABILITY_TOL: f64 = 1e-10;
pub const WALK_PROBABILITY_TOL: f64 = 1e-12;
/// Above this `T/(M r0²)` the kinetic-free routes are outside their regime.
pub const KINETIC_WARNING_RATIO: f64 = 0.1;

pub const DEFAULT_WALK_STEPS: usize = 64;
pub const DEFAULT_COMPARE_WALK_STEPS: usize = 256;
pub const DEFAULT_RADIAL_POINTS: usize = 200;
/// Points per axis of the comparison grid for the walk.
const COMPARE_POINTS: usize = 150;

/// Unit conversion for `--physical`.
struct Scale {
    length: f64,
    physical: bool,
}

impl Scale {
    fn new(rc: &RunConfig) -> Self {
        match (rc.physical, rc.rso_cm()) {
            (true, Some(l)) => Scale { length: l, physical: true },
            _ => Scale { length: 1.0, physical: false },
        }
    }

    fn len(&self, v: f64) -> f64 {
        v * self.length
    }

    fn amplitude(&self, v: f64) -> f64 {
        v / self.length
    }

    fn density(&self, v: f64) -> f64 {
        v / (self.length * self.length)
    }

    fn pick<'a>(&self, dimensionless: &'a str, physical: &'a str) -> &'a str {
        if self.physical {
            physical
        } else {
            dimensionless
        }
    }
}

fn writer(rc: &RunConfig, command: &str, header: &[&str]) -> CliResult<CsvWriter> {
    CsvWriter::create(rc.out.as_deref(), &rc.metadata(command), header)
}

/// Splits per-row failures, which become flags, from fatal ones.
fn row_value(v: spinmeter::Result<f64>, name: &str, flags: &mut Vec<String>, first: &mut Option<Error>) -> CliResult<Option<f64>> {
    match v {
        Ok(x) => Ok(Some(x)),
        Err(e @ Error::Convergence { .. }) => {
            flags.push(format!("{name}:nonconverged"));
            first.get_or_insert(e);
            Ok(None)
        }
        Err(Error::Domain(_)) => {
            flags.push(format!("{name}:undefined"));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn flag_text(flags: &[String]) -> String {
    if flags.is_empty() {
        "ok".to_string()
    } else {
        flags.join(";")
    }
}

fn opt_cell(v: Option<f64>) -> Cell<'static> {
    v.map_or(Cell::Empty, Cell::Num)
}

pub fn profile(rc: &RunConfig) -> CliResult<()> {
    let s = Scale::new(rc);
    let header = [
        s.pick("r_over_Rso", "r_cm"),
        s.pick("F_asymptotic", "F_asymptotic_per_cm"),
        s.pick("F_convolution", "F_convolution_per_cm"),
        s.pick("U11_exact", "U11_exact_per_cm"),
        s.pick("absU12_exact", "absU12_exact_per_cm"),
        "flag",
    ];
    let mut w = writer(rc, "profile", &header)?;
    let mut first = None;
    let mut bad_rows = 0usize;
    for r in linspace(rc.r_min, rc.r_max, rc.points - 1) {
        let mut flags = Vec::new();
        let fa = row_value(analytic::f_asymptotic(r, &rc.cfg, &rc.spec), "F_asymptotic", &mut flags, &mut first)?;
        let fc = row_value(analytic::f_convolution(r, &rc.cfg, &rc.spec), "F_convolution", &mut flags, &mut first)?;
        let k = match analytic::radial_kernel(r, &rc.cfg, &rc.spec) {
            Ok(k) => Some(k),
            Err(e @ Error::Convergence { .. }) => {
                flags.push("U_exact:nonconverged".into());
                first.get_or_insert(e);
                None
            }
            Err(e) => return Err(e.into()),
        };
        bad_rows += usize::from(flags.iter().any(|f| f.ends_with("nonconverged")));
        let flag = flag_text(&flags);
        w.row(&[
            Cell::Num(s.len(r)),
            opt_cell(fa.map(|v| s.amplitude(v))),
            opt_cell(fc.map(|v| s.amplitude(v))),
            opt_cell(k.map(|k| s.amplitude(k.u11))),
            opt_cell(k.map(|k| s.amplitude(k.u12.abs()))),
            Cell::Text(&flag),
        ])?;
    }
    w.finish()?;
    match first {
        Some(e) => {
            log::error!("{bad_rows} rows did not converge");
            Err(CliError::Convergence(e))
        }
        None => Ok(()),
    }
}

/// Points per axis for the density grid: `r0/2` spacing, at least 256.
fn density_points(rc: &RunConfig) -> usize {
    let n = (2.0 * rc.extent / (0.5 * rc.r0_over_rso())).ceil() as usize + 1;
    n.clamp(256, 2048)
}

pub fn density(rc: &RunConfig) -> CliResult<()> {
    let mut rc = rc.clone();
    let n = rc.grid_n.unwrap_or_else(|| density_points(&rc));
    rc.grid_n = Some(n);
    let s = Scale::new(&rc);
    let xs = linspace(-rc.extent, rc.extent, n - 1);
    let eval: Box<dyn Fn(f64, f64) -> f64> = match rc.route {
        Route::Exact => {
            let route = ExactRoute::new(&rc.cfg, &rc.spec)?;
            let eta = rc.eta;
            Box::new(move |x, y| route.density_xy(&eta, x, y))
        }
        Route::Asymptotic => {
            // F depends on r only: tabulate it at r0/20 and interpolate
            let r_hi = rc.extent * std::f64::consts::SQRT_2 * (1.0 + 1e-9);
            let m = (r_hi / (rc.r0_over_rso() / 20.0)).ceil() as usize;
            let table = RadialProfile::sample(linspace(0.0, r_hi, m.max(4)), |r| analytic::f_convolution(r, &rc.cfg, &rc.spec))?;
            let (eta, variant) = (rc.eta, rc.cfg.variant());
            Box::new(move |x, y| {
                let f = table.interpolate(x.hypot(y)).unwrap_or(0.0);
                analytic::ring_density(&eta, f, variant_angle_map(y.atan2(x), variant))
            })
        }
    };
    let header = [s.pick("x_over_Rso", "x_cm"), s.pick("y_over_Rso", "y_cm"), s.pick("rho", "rho_per_cm2")];
    let mut w = writer(&rc, "density", &header)?;
    let mut total = 0.0;
    for &x in &xs {
        for &y in &xs {
            let rho = eval(x, y);
            total += rho;
            w.row(&[Cell::Num(s.len(x)), Cell::Num(s.len(y)), Cell::Num(s.density(rho))])?;
        }
    }
    w.finish()?;
    let dx = xs[1] - xs[0];
    log::info!("total probability on the grid: {}", total * dx * dx);
    Ok(())
}

pub fn spinfield(rc: &RunConfig) -> CliResult<()> {
    if rc.projection {
        return projection(rc);
    }
    let mut rc = rc.clone();
    let n_r = *rc.grid_n.get_or_insert(DEFAULT_RADIAL_POINTS);
    let s = Scale::new(&rc);
    let grid = PolarGrid::new(1.0, rc.extent, n_r, rc.angles)?;
    let field = analytic::texture(rc.cfg.variant(), &grid, &rc.cfg, &rc.eta, &rc.spec)?;
    let header = [
        s.pick("x_over_Rso", "x_cm"),
        s.pick("y_over_Rso", "y_cm"),
        s.pick("rho", "rho_per_cm2"),
        "sigx",
        "sigy",
        "sig_v",
        "flag",
    ];
    let mut w = writer(&rc, "spinfield", &header)?;
    for p in &field.samples {
        let (sy, sx) = p.theta.sin_cos();
        let (x, y) = (p.r * sx, p.r * sy);
        let dir = p.direction.components();
        w.row(&[
            Cell::Num(s.len(x)),
            Cell::Num(s.len(y)),
            Cell::Num(s.density(p.density)),
            opt_cell(dir.map(|d| d.0)),
            opt_cell(dir.map(|d| d.1)),
            opt_cell(p.direction.radial_projection(p.theta)),
            Cell::Text(if dir.is_some() { "ok" } else { "undefined" }),
        ])?;
    }
    w.finish()
}

/// Radial spin projection along θ = 0.
fn projection(rc: &RunConfig) -> CliResult<()> {
    let s = Scale::new(rc);
    let route = ExactRoute::new(&rc.cfg, &rc.spec)?;
    let peak = route.peak_density(&rc.eta);
    let header = [s.pick("r_over_Rso", "r_cm"), s.pick("rho", "rho_per_cm2"), "sig_v", "flag"];
    let mut w = writer(rc, "spinfield", &header)?;
    for r in linspace(rc.r_min, rc.r_max, rc.points - 1) {
        let v = route.sigma_v(&rc.eta, r, peak);
        w.row(&[
            Cell::Num(s.len(r)),
            Cell::Num(s.density(route.density(&rc.eta, r, 0.0))),
            opt_cell(v),
            Cell::Text(if v.is_some() { "ok" } else { "undefined" }),
        ])?;
    }
    w.finish()?;
    if let Some(dip) = route.sigma_v_dip(RESONANCE_WINDOW, &rc.spec)? {
        log::info!("minimum radial spin {} at r/R_so = {} (U11 = {}, U12 = {})", dip.sigma_v, dip.radius, dip.u11, dip.u12);
    }
    Ok(())
}

pub fn walk(rc: &RunConfig) -> CliResult<()> {
    if rc.physical {
        return Err(CliError::config("walk output is dimensionless; drop --physical"));
    }
    let mut rc = rc.clone();
    let steps = *rc.walk_steps.get_or_insert(DEFAULT_WALK_STEPS);
    let state = run_walk(&rc.eta, steps, &rc.cfg)?;
    if rc.amplitudes {
        let mut w = writer(&rc, "walk", &["jx", "jy", "up_re", "up_im", "down_re", "down_im"])?;
        for (jx, jy, a) in state.sites() {
            w.row(&[Cell::Int(jx), Cell::Int(jy), Cell::Num(a.up.re), Cell::Num(a.up.im), Cell::Num(a.down.re), Cell::Num(a.down.im)])?;
        }
        return w.finish();
    }
    let mut w = writer(&rc, "walk", &["sigma_x_avg", "sigma_y_avg", "probability"])?;
    for b in time_average_distribution(&state) {
        w.row(&[Cell::Num(b.sigma_x), Cell::Num(b.sigma_y), Cell::Num(b.probability)])?;
    }
    w.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Info,
    Warning,
    Error,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
            Status::Warning => "warning",
            Status::Error => "error",
        }
    }
}

struct Check {
    name: &'static str,
    linf: Option<f64>,
    l2: Option<f64>,
    tol: Option<f64>,
    status: Status,
    detail: String,
}

impl Check {
    fn gated(name: &'static str, linf: f64, l2: Option<f64>, tol: f64) -> Self {
        let status = if linf <= tol { Status::Pass } else { Status::Fail };
        Check { name, linf: Some(linf), l2, tol: Some(tol), status, detail: String::new() }
    }

    fn discrepancy(name: &'static str, d: spinmeter::Result<Discrepancy>, tol: f64) -> Self {
        match d {
            Ok(d) => Check::gated(name, d.linf, Some(d.l2), tol),
            Err(e) => Check::failed(name, &e),
        }
    }

    fn failed(name: &'static str, e: &dyn std::fmt::Display) -> Self {
        Check { name, linf: None, l2: None, tol: None, status: Status::Error, detail: e.to_string() }
    }
}

/// Symmetric comparison axis around the ring: `±(R + 5 r0)`.
fn compare_axis(rc: &RunConfig) -> Vec<f64> {
    let h = 1.0 + 5.0 * rc.r0_over_rso();
    linspace(-h, h, COMPARE_POINTS - 1)
}

pub fn compare(rc: &RunConfig) -> CliResult<()> {
    let mut rc = rc.clone();
    let steps = *rc.walk_steps.get_or_insert(DEFAULT_COMPARE_WALK_STEPS);
    let (cfg, eta, q) = (rc.cfg, rc.eta, rc.r0_over_rso());
    let grid = match rc.grid_n {
        Some(n) => SpectralGrid::new(n, cfg.rso() + oracle::DEFAULT_MARGIN * q, &cfg),
        None => SpectralGrid::default_for(&cfg),
    };
    if let Ok(g) = &grid {
        rc.grid_n = Some(g.n());
    }
    let route = ExactRoute::new(&cfg, &rc.spec);
    let field = grid.clone().and_then(|g| propagate(&eta, &cfg, &g, false));
    let walk = run_walk(&eta, steps, &cfg);
    let mut checks = Vec::new();

    for (name, res) in [("analytic", route.as_ref().err()), ("oracle", field.as_ref().err()), ("walk", walk.as_ref().err())] {
        if let Some(e) = res {
            log::error!("{name} route failed: {e}");
        }
    }

    checks.push(match (&route, &field) {
        (Ok(r), Ok(f)) => Check::discrepancy("analytic_vs_oracle", compare_with_route(f, r, &eta), ANALYTIC_ORACLE_TOL),
        (Err(e), _) | (_, Err(e)) => Check::failed("analytic_vs_oracle", e),
    });

    let xs = compare_axis(&rc);
    checks.push(match (&walk, &route) {
        (Ok(w), Ok(r)) => {
            let reference: Vec<f64> = xs.iter().flat_map(|&x| xs.iter().map(move |&y| (x, y))).map(|(x, y)| r.density_xy(&eta, x, y)).collect();
            Check::discrepancy("walk_vs_analytic", w.convolved_density(q, &xs, &xs).and_then(|v| Discrepancy::between(&v, &reference)), WALK_TOL)
        }
        (Err(e), _) | (_, Err(e)) => Check::failed("walk_vs_analytic", e),
    });

    checks.push(match (&walk, &field) {
        (Ok(w), Ok(f)) => {
            let h = 1.0 + 5.0 * q;
            let coords = f.grid.coordinates();
            let inside: Vec<usize> = (0..coords.len()).filter(|&i| coords[i].abs() <= h).collect();
            let stride = inside.len().div_ceil(COMPARE_POINTS).max(1);
            let idx: Vec<usize> = inside.into_iter().step_by(stride).collect();
            let xs_o: Vec<f64> = idx.iter().map(|&i| coords[i]).collect();
            let rho = f.density();
            let n = f.grid.n();
            let reference: Vec<f64> = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| rho[i * n + j]).collect();
            Check::discrepancy("walk_vs_oracle", w.convolved_density(q, &xs_o, &xs_o).and_then(|v| Discrepancy::between(&v, &reference)), WALK_TOL)
        }
        (Err(e), _) | (_, Err(e)) => Check::failed("walk_vs_oracle", e),
    });

    checks.push(match &route {
        Ok(r) => Check::gated("probability_analytic", (r.total_probability() - 1.0).abs(), None, QUADRATURE_PROBABILITY_TOL),
        Err(e) => Check::failed("probability_analytic", e),
    });
    checks.push(match &field {
        Ok(f) => Check::gated("probability_oracle", (f.total_probability() - 1.0).abs(), None, SPECTRAL_PROBABILITY_TOL),
        Err(e) => Check::failed("probability_oracle", e),
    });
    checks.push(match &walk {
        Ok(w) => Check::gated("probability_walk", (w.norm_sqr() - 1.0).abs(), None, WALK_PROBABILITY_TOL),
        Err(e) => Check::failed("probability_walk", e),
    });

    let ratio = rc.kinetic_ratio();
    let regime = ratio < KINETIC_WARNING_RATIO;
    checks.push(Check {
        name: "kinetic_neglect_ratio",
        linf: Some(ratio),
        l2: None,
        tol: Some(KINETIC_WARNING_RATIO),
        status: if regime { Status::Info } else { Status::Warning },
        detail: if regime { String::new() } else { "kinetic term not negligible; the kinetic-free routes are outside their regime".into() },
    });
    if rc.kinetic {
        checks.push(match (&grid, &field) {
            (Ok(g), Ok(off)) => match propagate(&eta, &cfg, g, true) {
                Ok(on) => match Discrepancy::between(&on.density(), &off.density()) {
                    Ok(d) => Check { name: "kinetic_deviation", linf: Some(d.linf), l2: Some(d.l2), tol: None, status: Status::Info, detail: String::new() },
                    Err(e) => Check::failed("kinetic_deviation", &e),
                },
                Err(e) => Check::failed("kinetic_deviation", &e),
            },
            (Err(e), _) | (_, Err(e)) => Check::failed("kinetic_deviation", e),
        });
    }

    let mut report = format!("{}\n", rc.metadata("compare"));
    for c in &checks {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
        let _ = write!(report, "{:<22} linf={:<10} l2={:<10} tol={:<10} {}", c.name, f(c.linf), f(c.l2), f(c.tol), c.status.label().to_uppercase());
        if !c.detail.is_empty() {
            let _ = write!(report, "  {}", c.detail);
        }
        report.push('\n');
    }
    let failed = checks.iter().filter(|c| matches!(c.status, Status::Fail | Status::Error)).count();
    let _ = writeln!(report, "{} checks, {failed} failed", checks.len());
    print!("{report}");
    if !regime {
        log::warn!("kinetic_neglect_ratio = {ratio:.3} >= {KINETIC_WARNING_RATIO}");
    }

    if let Some(path) = rc.out.as_deref() {
        let mut w = CsvWriter::create(Some(path), &rc.metadata("compare"), &["check", "linf", "l2", "tolerance", "status", "detail"])?;
        for c in &checks {
            w.row(&[Cell::Text(c.name), opt_cell(c.linf), opt_cell(c.l2), opt_cell(c.tol), Cell::Text(c.status.label()), Cell::Text(&c.detail)])?;
        }
        w.finish()?;
    }
    if let Some(e) = [route.err(), field.err(), walk.err()].into_iter().flatten().find(|e| matches!(e, Error::Convergence { .. })) {
        return Err(CliError::Convergence(e));
    }
    if failed > 0 {
        return Err(CliError::CheckFailed(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}
