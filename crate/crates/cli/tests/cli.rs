//! End-to-end runs of the `spinmeter` binary.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinmeter")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

struct Table {
    meta: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn parse(text: &str) -> Table {
        let mut lines = text.lines();
        let meta = lines.next().unwrap().to_string();
        assert!(meta.starts_with("# "), "{meta}");
        let header = lines.next().unwrap().split(',').map(String::from).collect::<Vec<_>>();
        let rows = lines.map(|l| l.split(',').map(String::from).collect::<Vec<_>>()).collect::<Vec<_>>();
        assert!(rows.iter().all(|r| r.len() == header.len()));
        Table { meta, header, rows }
    }

    fn read(path: &Path) -> Table {
        Table::parse(&std::fs::read_to_string(path).unwrap())
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let i = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect()
    }

    fn text(&self, name: &str) -> Vec<&str> {
        let i = self.header.iter().position(|h| h == name).unwrap();
        self.rows.iter().map(|r| r[i].as_str()).collect()
    }
}

#[test]
fn single_step_walk_has_four_equal_rows() {
    let o = run(&["walk", "--walk-steps", "1", "--eta", "z+"]);
    assert!(o.status.success());
    let t = Table::parse(&stdout(&o));
    assert_eq!(t.header, ["sigma_x_avg", "sigma_y_avg", "probability"]);
    assert_eq!(t.rows.len(), 4);
    for p in t.col("probability") {
        assert!((p - 0.25).abs() < 1e-15);
    }
}

#[test]
fn walk_rows_respect_parity() {
    let l = 7.0;
    let t = Table::parse(&stdout(&run(&["walk", "--walk-steps", "7", "--eta", "x+", "--variant", "d"])));
    assert_eq!(t.rows.len(), 64);
    for (sx, sy) in t.col("sigma_x_avg").into_iter().zip(t.col("sigma_y_avg")) {
        for s in [sx, sy] {
            let j = (s * l).round() as i64;
            assert!((s * l - j as f64).abs() < 1e-12);
            assert_eq!(j.rem_euclid(2), 1);
        }
    }
    let total: f64 = t.col("probability").iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn amplitude_dump_sums_to_the_initial_state() {
    let t = Table::parse(&stdout(&run(&["walk", "--walk-steps", "9", "--eta", "0.6,0,0,0.8", "--amplitudes"])));
    assert_eq!(t.header, ["jx", "jy", "up_re", "up_im", "down_re", "down_im"]);
    let s = |c| t.col(c).iter().sum::<f64>();
    assert!((s("up_re") - 0.6).abs() < 1e-12 && s("up_im").abs() < 1e-12);
    assert!(s("down_re").abs() < 1e-12 && (s("down_im") - 0.8).abs() < 1e-12);
}

#[test]
fn config_file_with_overrides_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# crescent\nr0_over_rso = 0.2\neta = x+\nextent = 1.6\n").unwrap();
    let cfg_s = cfg.to_str().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = run(&["density", "--config", cfg_s, "--r0-over-rso", "0.1", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let t = Table::read(&a);
    assert!(t.meta.contains("r0_over_rso=0.1 "), "{}", t.meta);
    assert!(t.meta.contains("eta=x+") && t.meta.contains("extent=1.6"));
    assert_eq!(t.header, ["x_over_Rso", "y_over_Rso", "rho"]);
}

#[test]
fn density_is_normalized_and_shaped() {
    let dir = tempfile::tempdir().unwrap();
    for (eta, route) in [("z+", "exact"), ("x+", "exact"), ("x+", "asymptotic")] {
        let out = dir.path().join(format!("{eta}{route}.csv"));
        let o = run(&["density", "--r0-over-rso", "0.05", "--eta", eta, "--route", route, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        let t = Table::read(&out);
        let (xs, ys, rho) = (t.col("x_over_Rso"), t.col("y_over_Rso"), t.col("rho"));
        let n = (rho.len() as f64).sqrt() as usize;
        let dx = xs[n] - xs[0];
        let total: f64 = rho.iter().sum::<f64>() * dx * dx;
        let tol = if route == "exact" { 1e-3 } else { 2e-2 };
        assert!((total - 1.0).abs() < tol, "{eta} {route}: {total}");
        let (i, _) = rho.iter().enumerate().fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let r = xs[i].hypot(ys[i]);
        assert!((r - 1.0).abs() < 0.1, "peak radius {r}");
        if eta == "x+" {
            assert!(ys[i].atan2(xs[i]).abs() < 0.1, "crescent points along +x");
        }
    }
}

#[test]
fn profile_columns_and_zero_crossing() {
    let o = run(&["profile", "--r0-over-rso", "0.02", "--set", "r_min=0.9", "--set", "r_max=1.1", "--set", "points=201"]);
    assert!(o.status.success());
    let t = Table::parse(&stdout(&o));
    assert_eq!(t.header, ["r_over_Rso", "F_asymptotic", "F_convolution", "U11_exact", "absU12_exact", "flag"]);
    assert_eq!(t.rows.len(), 201);
    assert!(t.text("flag").iter().all(|f| *f == "ok"));
    let (r, f) = (t.col("r_over_Rso"), t.col("F_convolution"));
    let crossings: Vec<f64> = (1..r.len()).filter(|&i| f[i - 1] * f[i] < 0.0).map(|i| r[i]).collect();
    assert_eq!(crossings.len(), 1);
    assert!((crossings[0] - 1.0).abs() < 0.02);
    let peak = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let fa = t.col("F_asymptotic");
    assert!(fa.iter().zip(&f).all(|(a, b)| (a - b).abs() < 0.02 * peak));
}

#[test]
fn profile_flags_the_undefined_origin() {
    let t = Table::parse(&stdout(&run(&["profile", "--set", "points=3"])));
    assert_eq!(t.rows[0][1], "");
    assert_eq!(t.text("flag")[0], "F_asymptotic:undefined");
}

#[test]
fn projection_shows_the_resonance_dip() {
    let min_sig = |q: &str| {
        let t = Table::parse(&stdout(&run(&["spinfield", "--projection", "--r0-over-rso", q, "--set", "r_min=0.5", "--set", "r_max=1.4", "--set", "points=451"])));
        assert_eq!(t.header, ["r_over_Rso", "rho", "sig_v", "flag"]);
        t.col("sig_v").into_iter().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min)
    };
    assert!(min_sig("0.2") < -0.9);
    assert!(min_sig("0.01") > 0.5);
}

#[test]
fn variant_textures_follow_the_substitution_table() {
    let dir = tempfile::tempdir().unwrap();
    let field = |v: &str| {
        let out = dir.path().join(format!("{v}.csv"));
        let o = run(&["spinfield", "--variant", v, "--r0-over-rso", "0.1", "--grid-n", "15", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        Table::read(&out)
    };
    let a = field("a");
    // b at θ_j equals a at π/2 − θ_j, which is angle index (80 − j) mod 64
    let b = field("b");
    let (ra, rb) = (a.col("rho"), b.col("rho"));
    let (xa, xb) = (a.col("sigx"), b.col("sigx"));
    for ir in 0..15 {
        for j in 0..64 {
            let (ib, ia) = (ir * 64 + j, ir * 64 + (80 - j) % 64);
            assert!((rb[ib] - ra[ia]).abs() <= 1e-9 * ra.iter().cloned().fold(0.0, f64::max), "r{ir} j{j}");
            if xa[ia].is_finite() && ra[ia] > 1e-6 {
                assert!((xb[ib] - xa[ia]).abs() < 1e-6, "r{ir} j{j}");
            }
        }
    }
    // texture (a) points outward on the ring
    let (x, y, v, flag) = (a.col("x_over_Rso"), a.col("y_over_Rso"), a.col("sig_v"), a.text("flag"));
    for i in 0..x.len() {
        if (x[i].hypot(y[i]) - 1.0).abs() < 0.05 {
            assert_eq!(flag[i], "ok");
            assert!(v[i] > 0.9, "sig_v {} at {}", v[i], y[i].atan2(x[i]) / PI);
        }
    }
}

#[test]
fn compare_passes_at_moderate_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.csv");
    let o = run(&["compare", "--r0-over-rso", "0.1", "--eta", "x+", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}\n{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("0 failed"));
    let t = Table::read(&out);
    assert_eq!(t.header, ["check", "linf", "l2", "tolerance", "status", "detail"]);
    assert!(t.text("status").iter().all(|s| *s == "pass" || *s == "info"));
}

#[test]
fn compare_reports_the_kinetic_regime() {
    let o = run(&["compare", "--preset", "semiconductor", "--kinetic", "on"]);
    let text = stdout(&o);
    assert!(text.contains("kinetic_deviation"), "{text}");
    assert!(text.contains("WARNING"));
    let dev = text.lines().find(|l| l.starts_with("kinetic_deviation")).unwrap();
    let linf: f64 = dev.split("linf=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!(linf > 0.0);
}

#[test]
fn coarse_walk_fails_the_cross_check() {
    let o = run(&["compare", "--r0-over-rso", "0.1", "--walk-steps", "4"]);
    assert_eq!(o.status.code(), Some(5), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn exit_codes() {
    let o = run(&["density", "--r0-over-rso", "-0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("r0_over_rso"));
    let o = run(&["compare", "--eta", "1,1,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("normalized"));
    let o = run(&["density", "--physical"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["walk", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["walk", "--config", "/nonexistent-dir/x.cfg"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn physical_output_uses_centimetres() {
    let t = Table::parse(&stdout(&run(&["spinfield", "--preset", "cold_atom", "--physical", "--grid-n", "4", "--set", "angles=4"])));
    assert_eq!(&t.header[..3], ["x_cm", "y_cm", "rho_per_cm2"]);
    assert!(t.meta.contains("preset=cold_atom"));
    // R_so = 10 cm/s × 5e-4 s = 5e-3 cm; the grid reaches 1.4 R_so
    let xmax = t.col("x_cm").into_iter().fold(0.0f64, f64::max);
    assert!((xmax - 7e-3).abs() < 1e-12, "{xmax}");
}
