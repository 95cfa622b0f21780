//! `key=value` run configuration.
//!
//! One setting per line, `#` starts a comment. Later settings override
//! earlier ones, which is how command-line flags win over a config file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::curvature::{CurvatureKind, PrescribedCurvature};
use crate::error::{Error, Result};
use crate::graph::{Injectivity, SIGMA_MASK};
use crate::lorentz::LVec3;
use crate::solver::{NullCurveSpec, SolverConfig};
use crate::spectral::is_valid_grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Radial,
    Extract,
    Check,
    Export,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Radial => "radial",
            Mode::Extract => "extract",
            Mode::Check => "check",
            Mode::Export => "export",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "solve" => Ok(Mode::Solve),
            "radial" => Ok(Mode::Radial),
            "extract" => Ok(Mode::Extract),
            "check" => Ok(Mode::Check),
            "export" => Ok(Mode::Export),
            other => Err(format!(
                "unknown mode '{other}' (expected solve, radial, extract, check or export)"
            )),
        }
    }
}

/// `A(u) = a0 + Σ cos_k cos(k u) + Σ sin_k sin(k u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightSpec {
    pub a0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl HeightSpec {
    pub fn constant(a0: f64) -> Self {
        Self {
            a0,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|c| *c == 0.0)
    }

    pub fn to_spec(&self, n: usize) -> Result<NullCurveSpec> {
        NullCurveSpec::from_series(n, self.a0, &self.cos, &self.sin)
    }
}

impl fmt::Display for HeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.a0)?;
        for (k, c) in self.cos.iter().enumerate().filter(|(_, c)| **c != 0.0) {
            write!(f, " + {c}*cos({}u)", k + 1)?;
        }
        for (k, s) in self.sin.iter().enumerate().filter(|(_, s)| **s != 0.0) {
            write!(f, " + {s}*sin({}u)", k + 1)?;
        }
        Ok(())
    }
}

/// Pass thresholds for every check in a report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub conformality: f64,
    pub closed_form: f64,
    pub radial: f64,
    pub round_trip: f64,
    pub gz: f64,
    pub normal_growth: f64,
    pub equivariance: f64,
    pub gauss_pde: f64,
    pub weierstrass: f64,
    pub maineq: f64,
    pub beltrami: f64,
    pub cone: f64,
    /// Relative agreement of the two curvature formulas at `v = 0.3`.
    pub curvature: f64,
    /// Hessian determinants at most this large count as zero.
    pub hessian: f64,
    /// Level at which the cone ratio is tested.
    pub cone_v: f64,
    pub sigma_mask: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            conformality: 1e-6,
            closed_form: 1e-6,
            radial: 1e-8,
            round_trip: 1e-3,
            gz: 1e-3,
            normal_growth: 1e-3,
            equivariance: 1e-9,
            gauss_pde: 1e-4,
            weierstrass: 1e-4,
            maineq: 1e-4,
            beltrami: 1e-6,
            cone: 1e-2,
            curvature: 1e-3,
            hessian: 1e-12,
            cone_v: 0.01,
            sigma_mask: SIGMA_MASK,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    pub surface: Option<PathBuf>,
    pub obj: Option<PathBuf>,
    pub profile: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub curve: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub height: Option<HeightSpec>,
    pub h_text: String,
    pub h: PrescribedCurvature,
    pub solver: SolverConfig,
    pub input: Option<PathBuf>,
    pub outputs: Outputs,
    pub tol: Tolerances,
    pub injectivity: Injectivity,
}

/// One `key=value` setting and the line it came from (0 for flags).
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

impl Entry {
    pub fn flag(key: &str, value: &str) -> Self {
        Self {
            line: 0,
            key: key.to_string(),
            value: value.to_string(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "mode",
    "A",
    "A_cos",
    "A_sin",
    "H",
    "n",
    "dv",
    "v_max",
    "filter_strength",
    "residual_budget",
    "p0",
    "input",
    "surface",
    "obj",
    "profile",
    "graph",
    "curve",
    "report",
    "injectivity",
    "tol_conformality",
    "tol_closed_form",
    "tol_radial",
    "tol_round_trip",
    "tol_gz",
    "tol_normal_growth",
    "tol_equivariance",
    "tol_gauss_pde",
    "tol_weierstrass",
    "tol_maineq",
    "tol_beltrami",
    "tol_cone",
    "tol_curvature",
    "tol_hessian",
    "cone_v",
    "sigma_mask",
];

pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Config {
                line,
                msg: format!("expected key=value, got '{content}'"),
            });
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                line,
                msg: format!("unknown key '{key}'"),
            });
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

/// Parse a complete config; `mode` is required.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    RunConfig::from_entries(&parse_entries(text)?)
}

struct Settings<'a> {
    map: BTreeMap<&'a str, &'a Entry>,
}

impl<'a> Settings<'a> {
    fn get(&self, key: &str) -> Option<&'a Entry> {
        self.map.get(key).copied()
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(e) => e.value.parse().map_err(|err| Error::Config {
                line: e.line,
                msg: format!("bad value for {key}: '{}' ({err})", e.value),
            }),
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let x: f64 = self.parsed(key, default)?;
        if x > 0.0 && x.is_finite() {
            Ok(x)
        } else {
            Err(self.error(key, format!("{key} must be positive, got {x}")))
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key)
            .filter(|e| !e.value.is_empty())
            .map(|e| PathBuf::from(&e.value))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let Some(e) = self.get(key) else {
            return Ok(Vec::new());
        };
        e.value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|err| Error::Config {
                    line: e.line,
                    msg: format!("bad coefficient '{s}' in {key} ({err})"),
                })
            })
            .collect()
    }

    fn line(&self, key: &str) -> usize {
        self.get(key).map_or(0, |e| e.line)
    }

    fn error(&self, key: &str, msg: String) -> Error {
        Error::Config {
            line: self.line(key),
            msg,
        }
    }
}

impl RunConfig {
    /// Build from settings; later entries for the same key win.
    pub fn from_entries(entries: &[Entry]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for e in entries {
            if !KEYS.contains(&e.key.as_str()) {
                return Err(Error::Config {
                    line: e.line,
                    msg: format!("unknown key '{}'", e.key),
                });
            }
            map.insert(e.key.as_str(), e);
        }
        let s = Settings { map };

        let mode_entry = s.get("mode").ok_or(Error::Config {
            line: 0,
            msg: "missing mode".into(),
        })?;
        let mode: Mode = mode_entry.value.parse().map_err(|msg| Error::Config {
            line: mode_entry.line,
            msg,
        })?;

        let height = match s.get("A") {
            None => None,
            Some(e) if e.value.is_empty() => {
                return Err(Error::Config {
                    line: e.line,
                    msg: "A is empty".into(),
                })
            }
            Some(_) => Some(HeightSpec {
                a0: s.parsed("A", 0.0)?,
                cos: s.list("A_cos")?,
                sin: s.list("A_sin")?,
            }),
        };
        if height.is_none() && (s.get("A_cos").is_some() || s.get("A_sin").is_some()) {
            return Err(s.error("A_cos", "A_cos/A_sin given without A".into()));
        }

        let h_text = s.get("H").map_or("1".to_string(), |e| e.value.clone());
        let h =
            PrescribedCurvature::parse(&h_text).map_err(|err| s.error("H", format!("H: {err}")))?;

        let n: usize = s.parsed("n", SolverConfig::default().n)?;
        if !is_valid_grid(n) {
            return Err(s.error("n", format!("n = {n} is not a power of two >= 8")));
        }
        let p0 = match s.get("p0") {
            None => LVec3::ZERO,
            Some(e) => {
                let parts: Vec<f64> = s.list("p0")?;
                if parts.len() != 3 {
                    return Err(Error::Config {
                        line: e.line,
                        msg: format!("p0 needs three comma-separated numbers, got '{}'", e.value),
                    });
                }
                LVec3::new(parts[0], parts[1], parts[2])
            }
        };
        let d = SolverConfig::default();
        let solver = SolverConfig {
            n,
            dv: s.positive("dv", d.dv)?,
            v_max: s.positive("v_max", d.v_max)?,
            filter_strength: s.parsed("filter_strength", d.filter_strength)?,
            residual_budget: s.positive("residual_budget", d.residual_budget)?,
            p0,
        };
        solver.validate().map_err(|err| {
            let key = if solver.filter_strength < 0.0 {
                "filter_strength"
            } else {
                "dv"
            };
            s.error(key, err.to_string())
        })?;

        let t = Tolerances::default();
        let tol = Tolerances {
            conformality: s.positive("tol_conformality", t.conformality)?,
            closed_form: s.positive("tol_closed_form", t.closed_form)?,
            radial: s.positive("tol_radial", t.radial)?,
            round_trip: s.positive("tol_round_trip", t.round_trip)?,
            gz: s.positive("tol_gz", t.gz)?,
            normal_growth: s.positive("tol_normal_growth", t.normal_growth)?,
            equivariance: s.positive("tol_equivariance", t.equivariance)?,
            gauss_pde: s.positive("tol_gauss_pde", t.gauss_pde)?,
            weierstrass: s.positive("tol_weierstrass", t.weierstrass)?,
            maineq: s.positive("tol_maineq", t.maineq)?,
            beltrami: s.positive("tol_beltrami", t.beltrami)?,
            cone: s.positive("tol_cone", t.cone)?,
            curvature: s.positive("tol_curvature", t.curvature)?,
            hessian: s.positive("tol_hessian", t.hessian)?,
            cone_v: s.positive("cone_v", t.cone_v)?,
            sigma_mask: s.positive("sigma_mask", t.sigma_mask)?,
        };

        let injectivity = match s.get("injectivity").map(|e| e.value.as_str()) {
            None | Some("adjacent") => Injectivity::Adjacent,
            Some("full") => Injectivity::Full,
            Some(other) => {
                return Err(s.error(
                    "injectivity",
                    format!("injectivity must be adjacent or full, got '{other}'"),
                ))
            }
        };

        let cfg = Self {
            mode,
            height,
            h_text,
            h,
            solver,
            input: s.path("input"),
            outputs: Outputs {
                surface: s.path("surface"),
                obj: s.path("obj"),
                profile: s.path("profile"),
                graph: s.path("graph"),
                curve: s.path("curve"),
                report: s.path("report"),
            },
            tol,
            injectivity,
        };
        cfg.check_mode(&s)?;
        Ok(cfg)
    }

    fn check_mode(&self, s: &Settings) -> Result<()> {
        let need_height = |what: &str| {
            if self.height.is_none() {
                Err(Error::Config {
                    line: s.line("mode"),
                    msg: format!("mode={} needs A", what),
                })
            } else {
                Ok(())
            }
        };
        match self.mode {
            Mode::Solve => need_height("solve")?,
            Mode::Radial => {
                need_height("radial")?;
                let a = self.height.as_ref().unwrap();
                if !a.is_constant() || (a.a0.abs() - 0.25).abs() > 1e-12 {
                    return Err(s.error(
                        "A",
                        format!("radial mode supports A = -0.25 or A = 0.25, got A = {a}"),
                    ));
                }
                if self.h.kind() != CurvatureKind::Constant || self.h.value(LVec3::ZERO) != 1.0 {
                    return Err(s.error(
                        "H",
                        format!("radial mode needs H = 1, got H = {}", self.h_text),
                    ));
                }
            }
            Mode::Extract | Mode::Check => {
                if self.input.is_none() {
                    return Err(Error::Config {
                        line: s.line("mode"),
                        msg: format!("mode={} needs input", self.mode),
                    });
                }
            }
            Mode::Export => {
                if self.input.is_none() && self.height.is_none() {
                    return Err(Error::Config {
                        line: s.line("mode"),
                        msg: "mode=export needs input or A".into(),
                    });
                }
            }
        }
        if let Some(a) = &self.height {
            a.to_spec(self.solver.n)
                .map_err(|err| s.error("A", err.to_string()))?;
        }
        Ok(())
    }

    /// `key: value` lines echoing the effective configuration.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("config.mode".into(), self.mode.to_string()),
            (
                "config.A".into(),
                self.height.as_ref().map_or("-".into(), |a| a.to_string()),
            ),
            ("config.H".into(), self.h_text.clone()),
            ("config.H_kind".into(), self.h.kind().to_string()),
            ("config.n".into(), self.solver.n.to_string()),
            ("config.dv".into(), format!("{:e}", self.solver.dv)),
            ("config.v_max".into(), self.solver.v_max.to_string()),
            (
                "config.filter_strength".into(),
                self.solver.filter_strength.to_string(),
            ),
            (
                "config.residual_budget".into(),
                format!("{:e}", self.solver.residual_budget),
            ),
            (
                "config.p0".into(),
                format!(
                    "{},{},{}",
                    self.solver.p0.x, self.solver.p0.y, self.solver.p0.z
                ),
            ),
            (
                "config.sigma_mask".into(),
                format!("{:e}", self.tol.sigma_mask),
            ),
            (
                "config.injectivity".into(),
                match self.injectivity {
                    Injectivity::Adjacent => "adjacent",
                    Injectivity::Full => "full",
                }
                .into(),
            ),
        ];
        if let Some(p) = &self.input {
            out.push(("config.input".into(), p.display().to_string()));
        }
        out
    }
}
