//! Flat `key = value` configuration, merged with command-line overrides and
//! resolved into a validated run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use spinmeter::config::{kinetic_neglect_ratio, HBAR_CGS};
use spinmeter::{HamiltonianVariant, Mass, MeasurementConfig, Preset, QuadratureSpec, Route, Spinor};

use crate::error::{CliError, CliResult};

/// Every key accepted in a configuration file or through `--set`.
pub const KEYS: &[&str] = &[
    "preset",
    "alpha",
    "T",
    "r0",
    "mass",
    "r0_over_rso",
    "kinetic_ratio",
    "variant",
    "eta",
    "grid_n",
    "walk_steps",
    "tol",
    "kinetic",
    "physical",
    "out",
    "route",
    "mode",
    "amplitudes",
    "r_min",
    "r_max",
    "points",
    "extent",
    "angles",
];

/// Tolerance on `|eta|² = 1` for user input; the state is renormalized
/// exactly afterwards.
pub const ETA_NORM_TOL: f64 = 1e-6;

pub const DEFAULT_R0_OVER_RSO: f64 = 0.05;

/// Unvalidated key-value pairs; later insertions win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

fn canonical_key(key: &str) -> CliResult<String> {
    let k = key.trim().replace('-', "_");
    let k = if k.eq_ignore_ascii_case("t") { "T".to_string() } else { k.to_ascii_lowercase() };
    if KEYS.contains(&k.as_str()) {
        Ok(k)
    } else {
        Err(CliError::config(format!("unknown key {key:?}; accepted keys: {}", KEYS.join(", "))))
    }
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::config(format!("{origin}:{}: expected `key = value`, got {line:?}", i + 1)));
            };
            let key = canonical_key(k).map_err(|e| CliError::config(format!("{origin}:{}: {e}", i + 1)))?;
            if raw.values.contains_key(&key) {
                return Err(CliError::config(format!("{origin}:{}: key {key} given twice", i + 1)));
            }
            raw.values.insert(key, v.trim().to_string());
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| crate::csv::io_error(path, source))?;
        RawConfig::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> CliResult<()> {
        self.values.insert(canonical_key(key)?, value.into());
        Ok(())
    }

    /// Parses `key=value` as given to `--set`.
    pub fn set_pair(&mut self, pair: &str) -> CliResult<()> {
        let Some((k, v)) = pair.split_once('=') else {
            return Err(CliError::config(format!("--set expects KEY=VALUE, got {pair:?}")));
        };
        self.set(k, v.trim())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn parse_opt<T: FromStr>(&self, key: &str, what: &str) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| CliError::config(format!("{key} must be {what} (got {v:?})"))),
        }
    }

    fn flag(&self, key: &str) -> CliResult<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse_switch(v).map(Some).ok_or_else(|| CliError::config(format!("{key} must be on/off or true/false (got {v:?})"))),
        }
    }
}

fn parse_switch(v: &str) -> Option<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Some(true),
        "off" | "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// Named state or four comma-separated numbers `re1,im1,re2,im2`.
pub fn parse_eta(s: &str) -> CliResult<Spinor> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let named = match s.trim() {
        "z+" => Some(Spinor::z_plus()),
        "z-" => Some(Spinor::z_minus()),
        "x+" => Some(Spinor::x_plus()),
        "x-" => Some(Spinor::new(c(h, 0.0), c(-h, 0.0))),
        "y+" => Some(Spinor::y_plus()),
        "y-" => Some(Spinor::new(c(h, 0.0), c(0.0, -h))),
        _ => None,
    };
    if let Some(eta) = named {
        return Ok(eta);
    }
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
    let nums = match nums {
        Some(v) if v.len() == 4 && v.iter().all(|x: &f64| x.is_finite()) => v,
        _ => return Err(CliError::config(format!("eta must be z+, z-, x+, x-, y+, y- or re1,im1,re2,im2 (got {s:?})"))),
    };
    let eta = Spinor::new(c(nums[0], nums[1]), c(nums[2], nums[3]));
    let n = eta.norm_sqr();
    if (n - 1.0).abs() > ETA_NORM_TOL {
        return Err(CliError::config(format!("eta must be normalized: |eta|^2 = {n}, allowed deviation {ETA_NORM_TOL:e}")));
    }
    Ok(eta.normalized()?)
}

/// Validated run configuration. Computations use the dimensionless `cfg`;
/// `rso_cm` is kept for `--physical` output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cfg: MeasurementConfig,
    /// CGS configuration when one was given, before rescaling.
    pub physical_cfg: Option<MeasurementConfig>,
    pub preset: Option<Preset>,
    pub eta: Spinor,
    pub eta_label: String,
    pub grid_n: Option<usize>,
    pub walk_steps: Option<usize>,
    pub spec: QuadratureSpec,
    pub kinetic: bool,
    pub physical: bool,
    pub out: Option<PathBuf>,
    pub route: Route,
    pub projection: bool,
    pub amplitudes: bool,
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    pub extent: f64,
    pub angles: usize,
}

fn positive(key: &str, v: Option<f64>) -> CliResult<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::config(format!("{key} must be finite and > 0 (got {x})"))),
        v => Ok(v),
    }
}

impl RunConfig {
    pub fn resolve(raw: &RawConfig) -> CliResult<Self> {
        let variant: HamiltonianVariant = match raw.get("variant") {
            Some(v) => v.parse().map_err(CliError::from)?,
            None => HamiltonianVariant::default(),
        };
        let preset: Option<Preset> = match raw.get("preset") {
            Some(p) => Some(p.parse().map_err(CliError::from)?),
            None => None,
        };
        let duration = positive("T", raw.parse_opt("T", "a number")?)?;
        let physical_cfg = if let Some(p) = preset {
            for k in ["alpha", "r0", "mass", "r0_over_rso", "kinetic_ratio"] {
                if raw.has(k) {
                    return Err(CliError::config(format!("{k} cannot be combined with preset = {}", p.name())));
                }
            }
            let p = match (p, duration) {
                (Preset::ColdAtom { .. }, Some(t)) => Preset::ColdAtom { duration: t },
                (Preset::Semiconductor, Some(_)) => return Err(CliError::config("T is fixed by preset = semiconductor")),
                (p, None) => p,
            };
            Some(p.config(variant).map_err(CliError::from)?)
        } else if raw.has("alpha") || raw.has("r0") || duration.is_some() {
            let alpha = positive("alpha", raw.parse_opt("alpha", "a number")?)?;
            let r0 = positive("r0", raw.parse_opt("r0", "a number")?)?;
            let (Some(alpha), Some(t), Some(r0)) = (alpha, duration, r0) else {
                return Err(CliError::config("a physical configuration needs all of alpha (cm/s), T (s) and r0 (cm)"));
            };
            for k in ["r0_over_rso", "kinetic_ratio"] {
                if raw.has(k) {
                    return Err(CliError::config(format!("{k} cannot be combined with alpha, T and r0")));
                }
            }
            let mass = match raw.get("mass") {
                None => Mass::Infinite,
                Some(m) => match m.parse::<Mass>().map_err(CliError::from)? {
                    Mass::Finite(grams) => Mass::Finite(grams / HBAR_CGS),
                    Mass::Infinite => Mass::Infinite,
                },
            };
            Some(MeasurementConfig::new(alpha, t, r0, mass, variant).map_err(CliError::from)?)
        } else {
            None
        };
        let cfg = match &physical_cfg {
            Some(p) => p.to_dimensionless().map_err(CliError::from)?,
            None => {
                if raw.has("mass") {
                    return Err(CliError::config("mass (grams) needs alpha, T and r0; use kinetic_ratio in dimensionless runs"));
                }
                let q = positive("r0_over_rso", raw.parse_opt("r0_over_rso", "a number")?)?.unwrap_or(DEFAULT_R0_OVER_RSO);
                let ratio: Option<f64> = raw.parse_opt("kinetic_ratio", "a number")?;
                if let Some(r) = ratio {
                    if !(r >= 0.0 && r.is_finite()) {
                        return Err(CliError::config(format!("kinetic_ratio must be finite and >= 0 (got {r})")));
                    }
                }
                MeasurementConfig::dimensionless(q, ratio.map(|r| r * q * q), variant).map_err(CliError::from)?
            }
        };

        let eta_label = raw.get("eta").unwrap_or("z+").to_string();
        let eta = parse_eta(&eta_label)?;

        let grid_n: Option<usize> = raw.parse_opt("grid_n", "a positive integer")?;
        if grid_n.is_some_and(|n| n < 4) {
            return Err(CliError::config("grid_n must be >= 4"));
        }
        let walk_steps: Option<usize> = raw.parse_opt("walk_steps", "a positive integer")?;
        if let Some(l) = walk_steps {
            if l < 1 || l > spinmeter::checkerboard::MAX_STEPS {
                return Err(CliError::config(format!("walk_steps must lie in 1..={} (got {l})", spinmeter::checkerboard::MAX_STEPS)));
            }
        }
        let tol = positive("tol", raw.parse_opt("tol", "a number")?)?;
        let spec = match tol {
            None => QuadratureSpec::default(),
            Some(t) => QuadratureSpec::new(t, (t * 1e-2).max(QuadratureSpec::TOL_FLOOR), QuadratureSpec::default().max_panels)
                .map_err(|e| CliError::config(format!("tol: {e}")))?,
        };

        let kinetic = raw.flag("kinetic")?.unwrap_or(false);
        if kinetic && cfg.mass().is_infinite() {
            return Err(CliError::config("kinetic = on needs a finite mass (mass, kinetic_ratio or a preset)"));
        }
        let physical = raw.flag("physical")?.unwrap_or(false);
        if physical && physical_cfg.is_none() {
            return Err(CliError::config("physical output needs a preset or alpha, T and r0"));
        }
        let route = match raw.get("route") {
            Some(r) => r.parse().map_err(CliError::from)?,
            None => Route::Exact,
        };
        let projection = match raw.get("mode") {
            None | Some("field") => false,
            Some("projection") => true,
            Some(m) => return Err(CliError::config(format!("mode must be field or projection (got {m:?})"))),
        };
        let amplitudes = raw.flag("amplitudes")?.unwrap_or(false);

        let r_min: f64 = raw.parse_opt("r_min", "a number")?.unwrap_or(0.0);
        let r_max: f64 = raw.parse_opt("r_max", "a number")?.unwrap_or(1.5);
        if !(r_min >= 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(CliError::config(format!("need 0 <= r_min < r_max (got r_min = {r_min}, r_max = {r_max})")));
        }
        let points: usize = raw.parse_opt("points", "an integer")?.unwrap_or(601);
        if points < 2 {
            return Err(CliError::config("points must be >= 2"));
        }
        let extent = positive("extent", raw.parse_opt("extent", "a number")?)?.unwrap_or(1.4);
        let angles: usize = raw.parse_opt("angles", "an integer")?.unwrap_or(64);
        if angles < 1 {
            return Err(CliError::config("angles must be >= 1"));
        }

        Ok(RunConfig {
            cfg,
            physical_cfg,
            preset,
            eta,
            eta_label,
            grid_n,
            walk_steps,
            spec,
            kinetic,
            physical,
            out: raw.get("out").map(PathBuf::from),
            route,
            projection,
            amplitudes,
            r_min,
            r_max,
            points,
            extent,
            angles,
        })
    }

    pub fn r0_over_rso(&self) -> f64 {
        self.cfg.r0()
    }

    /// `T/(M r0²)` in ħ = 1 units.
    pub fn kinetic_ratio(&self) -> f64 {
        kinetic_neglect_ratio(&self.cfg)
    }

    /// `R_so` in cm, for `--physical`.
    pub fn rso_cm(&self) -> Option<f64> {
        self.physical_cfg.map(|c| c.rso())
    }

    /// One line recording every resolved setting.
    pub fn metadata(&self, command: &str) -> String {
        let mut s = format!("spinmeter {} command={command}", env!("CARGO_PKG_VERSION"));
        let opt = |v: Option<usize>| v.map_or("auto".to_string(), |n| n.to_string());
        let _ = write!(s, " preset={}", self.preset.map_or("none", |p| p.name()));
        if let Some(p) = &self.physical_cfg {
            let _ = write!(s, " alpha_cm_s={:e} T_s={:e} r0_cm={:e} mass={}", p.alpha(), p.duration(), p.r0(), p.mass());
        }
        let _ = write!(
            s,
            " r0_over_rso={} kinetic_ratio={} variant={} eta={} eta_up={},{} eta_down={},{} grid_n={} walk_steps={} tol={:e} kinetic={} physical={} route={} mode={} amplitudes={} r_min={} r_max={} points={} extent={} angles={}",
            self.cfg.r0(),
            self.kinetic_ratio(),
            self.cfg.variant().letter(),
            self.eta_label,
            self.eta.up.re,
            self.eta.up.im,
            self.eta.down.re,
            self.eta.down.im,
            opt(self.grid_n),
            opt(self.walk_steps),
            self.spec.rel_tol,
            if self.kinetic { "on" } else { "off" },
            self.physical,
            match self.route {
                Route::Exact => "exact",
                Route::Asymptotic => "asymptotic",
            },
            if self.projection { "projection" } else { "field" },
            self.amplitudes,
            self.r_min,
            self.r_max,
            self.points,
            self.extent,
            self.angles,
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str) -> CliResult<RunConfig> {
        RunConfig::resolve(&RawConfig::parse(text, "test")?)
    }

    #[test]
    fn defaults() {
        let c = resolve("").unwrap();
        assert_eq!(c.r0_over_rso(), DEFAULT_R0_OVER_RSO);
        assert_eq!(c.eta, Spinor::z_plus());
        assert!(!c.kinetic && !c.physical);
        assert!(c.cfg.mass().is_infinite());
    }

    #[test]
    fn comments_blank_lines_and_aliases() {
        let c = resolve("# sweep\n\nr0-over-rso = 0.2  # strong\nvariant = c\neta = 0.6, 0, 0, 0.8\n").unwrap();
        assert_eq!(c.r0_over_rso(), 0.2);
        assert_eq!(c.cfg.variant(), HamiltonianVariant::XxMinusYy);
        assert!((c.eta.down.im - 0.8).abs() < 1e-15);
    }

    #[test]
    fn overrides_win() {
        let mut raw = RawConfig::parse("r0_over_rso = 0.2\n", "test").unwrap();
        raw.set("r0_over_rso", "0.1").unwrap();
        assert_eq!(RunConfig::resolve(&raw).unwrap().r0_over_rso(), 0.1);
    }

    #[test]
    fn rejection_names_the_constraint() {
        let msg = |t: &str| resolve(t).unwrap_err().to_string();
        assert!(msg("r0_over_rso = -1").contains("r0_over_rso"));
        assert!(msg("colour = red").contains("unknown key"));
        assert!(msg("eta = 1,0,1,0").contains("normalized"));
        assert!(msg("variant = e").contains("variant"));
        assert!(msg("alpha = 1").contains("alpha (cm/s), T (s) and r0"));
        assert!(msg("kinetic = on").contains("finite mass"));
        assert!(msg("physical = true").contains("physical"));
        assert!(msg("walk_steps = 5000").contains("walk_steps"));
        assert!(msg("tol = 1e-20").contains("tol"));
        assert!(msg("preset = semiconductor\nr0 = 1").contains("preset"));
        assert!(msg("r0_over_rso = 0.1\nr0_over_rso = 0.2").contains("twice"));
        assert!(msg("just words").contains("key = value"));
    }

    #[test]
    fn presets_resolve_to_dimensionless_units() {
        let c = resolve("preset = cold_atom\nkinetic = on").unwrap();
        assert!((c.r0_over_rso() - 0.02).abs() < 1e-12);
        assert!(c.kinetic);
        let s = resolve("preset = semiconductor").unwrap();
        assert!((s.rso_cm().unwrap() - 1e-5).abs() < 1e-20);
        assert!((s.kinetic_ratio() - 1.054_571_817).abs() < 1e-8);
    }

    #[test]
    fn physical_mass_in_grams() {
        let c = resolve("alpha = 1e6\nT = 1e-11\nr0 = 1e-6\nmass = 1e-28").unwrap();
        let hand = HBAR_CGS * 1e-11 / (1e-28 * 1e-12);
        assert!((c.kinetic_ratio() - hand).abs() < 1e-10 * hand);
    }

    #[test]
    fn named_states() {
        for (name, z) in [("z+", 1.0), ("z-", -1.0), ("x+", 0.0), ("x-", 0.0), ("y+", 0.0), ("y-", 0.0)] {
            let eta = parse_eta(name).unwrap();
            assert!((eta.norm_sqr() - 1.0).abs() < 1e-15);
            assert!((eta.bloch()[2] - z).abs() < 1e-15);
        }
        assert!(parse_eta("1,0,0").is_err());
    }
}
