//! Marching the Cauchy problem
//!
//! ```text
//! Δψ = 2 H(ψ) ψ_u × ψ_v,   ψ(u, 0) = p0,   ψ_v(u, 0) = A(u) (cos u, -sin u, 1)
//! ```
//!
//! in the `v` direction. The system is elliptic, so marching it amplifies
//! every Fourier mode `k` like `e^{k v}`. The solution we want is real
//! analytic and lives in the low modes; rounding noise lives everywhere.
//! Each RK4 step is followed by a 16th-order exponential filter, and the
//! march stops as soon as the conformality residual leaves its budget or
//! the rows stop being spacelike. Whatever was computed up to that point
//! is returned as a valid prefix.

use std::fmt;

use crate::curvature::PrescribedCurvature;
use crate::error::{Error, Result};
use crate::lorentz::{lorentz_cross, LVec3};
use crate::spectral::{self, filter_real_in_place, is_valid_grid, real_derivatives, PeriodicField};
use crate::stencil::RowStencil;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub n: usize,
    pub dv: f64,
    pub v_max: f64,
    pub filter_strength: f64,
    pub residual_budget: f64,
    pub p0: LVec3,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: spectral::DEFAULT_GRID,
            dv: 1e-3,
            v_max: 0.8,
            filter_strength: 36.0,
            residual_budget: 1e-6,
            p0: LVec3::ZERO,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !is_valid_grid(self.n) {
            return Err(Error::InvalidGrid(self.n));
        }
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {x}"
                )))
            }
        };
        positive("dv", self.dv)?;
        positive("v_max", self.v_max)?;
        positive("residual_budget", self.residual_budget)?;
        if !(self.filter_strength >= 0.0 && self.filter_strength.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "filter_strength must be >= 0, got {}",
                self.filter_strength
            )));
        }
        if self.dv > self.v_max {
            return Err(Error::InvalidConfig(format!(
                "dv = {} exceeds v_max = {}",
                self.dv, self.v_max
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        step_count(self.v_max, self.dv)
    }
}

/// Number of uniform steps of size `dv` that reach `v_max`; levels are
/// `k * dv` for `k = 0..=steps`.
pub fn step_count(v_max: f64, dv: f64) -> usize {
    (v_max / dv).round().max(1.0) as usize
}

/// Which half of the light cone the limit null curve lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    Upper,
    Lower,
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cone::Upper => "upper",
            Cone::Lower => "lower",
        })
    }
}

/// Height function `A(u)` of a limit null curve `b(u) = A(u)(cos u, -sin u, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NullCurveSpec {
    height: PeriodicField,
    cone: Cone,
}

impl NullCurveSpec {
    pub fn new(height: PeriodicField) -> Result<Self> {
        if !height.is_real() {
            return Err(Error::InvalidNullCurve("A(u) must be real".into()));
        }
        let values = height.re();
        if let Some((j, a)) = values
            .iter()
            .enumerate()
            .find(|(_, a)| a.abs() < 1e-12 || !a.is_finite())
        {
            return Err(Error::InvalidNullCurve(format!(
                "A vanishes at node {j} (A = {a:e})"
            )));
        }
        let positive = values[0] > 0.0;
        if values.iter().any(|a| (*a > 0.0) != positive) {
            return Err(Error::InvalidNullCurve("A changes sign".into()));
        }
        let cone = if positive { Cone::Upper } else { Cone::Lower };
        Ok(Self { height, cone })
    }

    pub fn constant(n: usize, a: f64) -> Result<Self> {
        Self::new(PeriodicField::constant(n, a)?)
    }

    /// `A(u) = a0 + Σ c_k cos(k u) + Σ s_k sin(k u)`, `k` starting at 1.
    pub fn from_series(n: usize, a0: f64, cos: &[f64], sin: &[f64]) -> Result<Self> {
        Self::new(PeriodicField::from_fn_real(n, |u| {
            let c: f64 = cos
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * u).cos())
                .sum();
            let s: f64 = sin
                .iter()
                .enumerate()
                .map(|(k, s)| s * ((k + 1) as f64 * u).sin())
                .sum();
            a0 + c + s
        })?)
    }

    pub fn height(&self) -> &PeriodicField {
        &self.height
    }

    pub fn cone(&self) -> Cone {
        self.cone
    }

    pub fn n(&self) -> usize {
        self.height.n()
    }

    /// Samples of `b(u_j)`.
    pub fn curve(&self) -> Vec<LVec3> {
        let n = self.n();
        self.height
            .re()
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let u = spectral::node(j, n);
                LVec3::new(a * u.cos(), -a * u.sin(), *a)
            })
            .collect()
    }

    /// True when `A` is constant to rounding.
    pub fn is_constant(&self) -> bool {
        let v = self.height.re();
        v.iter()
            .all(|a| (a - v[0]).abs() <= 1e-14 * v[0].abs().max(1.0))
    }
}

/// `ψ` and `ψ_v` on one row `v = const`.
#[derive(Clone, Debug, PartialEq)]
pub struct CauchyState {
    pub v: f64,
    pub psi: Vec<LVec3>,
    pub psi_v: Vec<LVec3>,
}

impl CauchyState {
    pub fn n(&self) -> usize {
        self.psi.len()
    }
}

pub fn build_initial_data(spec: &NullCurveSpec, p0: LVec3, n: usize) -> Result<CauchyState> {
    if !is_valid_grid(n) {
        return Err(Error::InvalidGrid(n));
    }
    let spec = if spec.n() == n {
        spec.clone()
    } else {
        let r = spec.height.resample(n)?;
        if r.aliased {
            return Err(Error::InvalidNullCurve(format!(
                "A(u) is not resolved on {n} nodes"
            )));
        }
        NullCurveSpec::new(r.field)?
    };
    Ok(CauchyState {
        v: 0.0,
        psi: vec![p0; n],
        psi_v: spec.curve(),
    })
}

struct Components {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl Components {
    fn split(v: &[LVec3]) -> Self {
        Self {
            x: v.iter().map(|p| p.x).collect(),
            y: v.iter().map(|p| p.y).collect(),
            z: v.iter().map(|p| p.z).collect(),
        }
    }

    fn join(&self) -> Vec<LVec3> {
        (0..self.x.len())
            .map(|j| LVec3::new(self.x[j], self.y[j], self.z[j]))
            .collect()
    }
}

/// First and second spectral u-derivatives of a row of vectors.
pub fn row_u_derivatives(row: &[LVec3]) -> (Vec<LVec3>, Vec<LVec3>) {
    let c = Components::split(row);
    let (x1, x2) = real_derivatives(&c.x);
    let (y1, y2) = real_derivatives(&c.y);
    let (z1, z2) = real_derivatives(&c.z);
    let d1 = Components {
        x: x1,
        y: y1,
        z: z1,
    }
    .join();
    let d2 = Components {
        x: x2,
        y: y2,
        z: z2,
    }
    .join();
    (d1, d2)
}

fn filter_row(row: &[LVec3], strength: f64) -> Vec<LVec3> {
    let mut c = Components::split(row);
    filter_real_in_place(&mut c.x, strength);
    filter_real_in_place(&mut c.y, strength);
    filter_real_in_place(&mut c.z, strength);
    c.join()
}

/// `ψ_vv = -ψ_uu + 2 H(ψ) ψ_u × ψ_v`.
fn acceleration(psi: &[LVec3], psi_v: &[LVec3], h: &PrescribedCurvature) -> Result<Vec<LVec3>> {
    let (psi_u, psi_uu) = row_u_derivatives(psi);
    psi.iter()
        .zip(&psi_u)
        .zip(psi_uu.iter().zip(psi_v))
        .map(|((p, pu), (puu, pv))| {
            let hv = h.eval(*p)?;
            Ok(-*puu + lorentz_cross(*pu, *pv) * (2.0 * hv))
        })
        .collect()
}

fn axpy(base: &[LVec3], s: f64, dir: &[LVec3]) -> Vec<LVec3> {
    base.iter().zip(dir).map(|(b, d)| *b + *d * s).collect()
}

/// One RK4 step of `d/dv (ψ, ψ_v) = (ψ_v, ψ_vv)` followed by filtering.
pub fn step(s: &CauchyState, h: &PrescribedCurvature, cfg: &SolverConfig) -> Result<CauchyState> {
    let residual = conformality_residual(s);
    if residual > cfg.residual_budget {
        return Err(Error::Degraded {
            residual,
            budget: cfg.residual_budget,
        });
    }
    let dt = cfg.dv;
    let k1p = s.psi_v.clone();
    let k1v = acceleration(&s.psi, &s.psi_v, h)?;

    let p2 = axpy(&s.psi, dt / 2.0, &k1p);
    let v2 = axpy(&s.psi_v, dt / 2.0, &k1v);
    let k2p = v2.clone();
    let k2v = acceleration(&p2, &v2, h)?;

    let p3 = axpy(&s.psi, dt / 2.0, &k2p);
    let v3 = axpy(&s.psi_v, dt / 2.0, &k2v);
    let k3p = v3.clone();
    let k3v = acceleration(&p3, &v3, h)?;

    let p4 = axpy(&s.psi, dt, &k3p);
    let v4 = axpy(&s.psi_v, dt, &k3v);
    let k4p = v4.clone();
    let k4v = acceleration(&p4, &v4, h)?;

    let combine = |y: &[LVec3], a: &[LVec3], b: &[LVec3], c: &[LVec3], d: &[LVec3]| {
        (0..y.len())
            .map(|j| y[j] + (a[j] + b[j] * 2.0 + c[j] * 2.0 + d[j]) * (dt / 6.0))
            .collect::<Vec<_>>()
    };
    let psi = combine(&s.psi, &k1p, &k2p, &k3p, &k4p);
    let psi_v = combine(&s.psi_v, &k1v, &k2v, &k3v, &k4v);

    Ok(CauchyState {
        v: s.v + dt,
        psi: filter_row(&psi, cfg.filter_strength),
        psi_v: filter_row(&psi_v, cfg.filter_strength),
    })
}

/// `|<ψ_w, ψ_w>|` at one node, `ψ_w = (ψ_u - i ψ_v) / 2`.
pub fn conformality_defect(psi_u: LVec3, psi_v: LVec3) -> f64 {
    let re = (psi_u.norm_sq() - psi_v.norm_sq()) / 4.0;
    let im = -psi_u.dot(psi_v) / 2.0;
    re.hypot(im)
}

/// Sup over the row of `|<ψ_w, ψ_w>|`.
pub fn conformality_residual(s: &CauchyState) -> f64 {
    row_conformality(&s.psi, &s.psi_v)
}

pub fn row_conformality(psi: &[LVec3], psi_v: &[LVec3]) -> f64 {
    let (psi_u, _) = row_u_derivatives(psi);
    psi_u
        .iter()
        .zip(psi_v)
        .map(|(a, b)| conformality_defect(*a, *b))
        .fold(0.0, f64::max)
}

/// Why a march ended.
#[derive(Clone, Debug, PartialEq)]
pub enum MarchStatus {
    Completed,
    /// The row at `v` exceeded the residual budget and was dropped.
    ResidualBudget {
        v: f64,
        residual: f64,
    },
    /// The row at `v` had `<ψ_u, ψ_u> <= 0` at `node` and was dropped.
    NotSpacelike {
        v: f64,
        node: usize,
    },
}

impl fmt::Display for MarchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarchStatus::Completed => f.write_str("completed"),
            MarchStatus::ResidualBudget { v, residual } => {
                write!(f, "residual-budget v={v} residual={residual:e}")
            }
            MarchStatus::NotSpacelike { v, node } => write!(f, "not-spacelike v={v} node={node}"),
        }
    }
}

/// Where the `ψ_v` rows of a patch come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VelocitySource {
    /// Carried by the solver or an exact construction.
    Exact,
    /// Recovered from the `ψ` rows by fourth-order v-stencils.
    Estimated,
}

/// Sampled conformal immersion on the strip `0 <= v <= v_ok`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfacePatch {
    v_levels: Vec<f64>,
    psi: Vec<Vec<LVec3>>,
    psi_v: Vec<Vec<LVec3>>,
    velocity: VelocitySource,
    pub status: MarchStatus,
    pub residual_history: Vec<f64>,
    pub config: Option<SolverConfig>,
}

fn check_rows(v_levels: &[f64], psi: &[Vec<LVec3>]) -> Result<(usize, f64)> {
    if v_levels.len() < 2 || psi.len() != v_levels.len() {
        return Err(Error::Reconstruction(format!(
            "patch needs at least two rows with matching levels ({} levels, {} rows)",
            v_levels.len(),
            psi.len()
        )));
    }
    let n = psi[0].len();
    if !is_valid_grid(n) {
        return Err(Error::InvalidGrid(n));
    }
    if psi.iter().any(|r| r.len() != n) {
        return Err(Error::Reconstruction("rows have different lengths".into()));
    }
    if v_levels[0] != 0.0 {
        return Err(Error::Reconstruction(format!(
            "first level must be v = 0, got {}",
            v_levels[0]
        )));
    }
    let dv = v_levels[1] - v_levels[0];
    if dv <= 0.0 {
        return Err(Error::Reconstruction("levels must increase".into()));
    }
    for (k, w) in v_levels.windows(2).enumerate() {
        if ((w[1] - w[0]) - dv).abs() > 1e-9 * dv.max(1.0) {
            return Err(Error::Reconstruction(format!(
                "levels are not uniformly spaced at row {}",
                k + 1
            )));
        }
    }
    Ok((n, dv))
}

impl SurfacePatch {
    /// Patch from rows of `ψ` and exact `ψ_v`.
    pub fn from_rows(
        v_levels: Vec<f64>,
        psi: Vec<Vec<LVec3>>,
        psi_v: Vec<Vec<LVec3>>,
    ) -> Result<Self> {
        check_rows(&v_levels, &psi)?;
        if psi_v.len() != psi.len() || psi_v.iter().any(|r| r.len() != psi[0].len()) {
            return Err(Error::Reconstruction(
                "psi_v rows do not match psi rows".into(),
            ));
        }
        let residual_history = psi
            .iter()
            .zip(&psi_v)
            .map(|(p, pv)| row_conformality(p, pv))
            .collect();
        Ok(Self {
            v_levels,
            psi,
            psi_v,
            velocity: VelocitySource::Exact,
            status: MarchStatus::Completed,
            residual_history,
            config: None,
        })
    }

    /// Patch from `ψ` rows only (e.g. loaded from a surface file); `ψ_v` is
    /// recovered with fourth-order stencils in `v`.
    pub fn from_positions(v_levels: Vec<f64>, psi: Vec<Vec<LVec3>>) -> Result<Self> {
        let (n, dv) = check_rows(&v_levels, &psi)?;
        if psi.len() < 5 {
            return Err(Error::Reconstruction(
                "need at least five rows to recover psi_v".into(),
            ));
        }
        let st = RowStencil::new(psi.len(), dv, 1, 4);
        let psi_v: Vec<Vec<LVec3>> = (0..psi.len())
            .map(|k| (0..n).map(|j| st.apply(k, |r| psi[r][j])).collect())
            .collect();
        let mut p = Self::from_rows(v_levels, psi, psi_v)?;
        p.velocity = VelocitySource::Estimated;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.psi[0].len()
    }

    pub fn rows(&self) -> usize {
        self.psi.len()
    }

    pub fn v_levels(&self) -> &[f64] {
        &self.v_levels
    }

    pub fn dv(&self) -> f64 {
        self.v_levels[1] - self.v_levels[0]
    }

    /// Height of the valid strip.
    pub fn v_ok(&self) -> f64 {
        *self.v_levels.last().expect("non-empty")
    }

    pub fn psi(&self) -> &[Vec<LVec3>] {
        &self.psi
    }

    pub fn psi_v(&self) -> &[Vec<LVec3>] {
        &self.psi_v
    }

    pub fn velocity_source(&self) -> VelocitySource {
        self.velocity
    }

    pub fn state(&self, k: usize) -> CauchyState {
        CauchyState {
            v: self.v_levels[k],
            psi: self.psi[k].clone(),
            psi_v: self.psi_v[k].clone(),
        }
    }

    /// Index of the row whose level is closest to `v`.
    pub fn row_near(&self, v: f64) -> usize {
        let k = (v / self.dv()).round().max(0.0) as usize;
        k.min(self.rows() - 1)
    }

    /// Sup of the conformality residual over all rows.
    pub fn max_conformality(&self) -> f64 {
        self.residual_history.iter().copied().fold(0.0, f64::max)
    }

    /// Sup of the conformality residual over rows with `v <= v_cap`.
    pub fn max_conformality_until(&self, v_cap: f64) -> f64 {
        self.v_levels
            .iter()
            .zip(&self.residual_history)
            .filter(|(v, _)| **v <= v_cap + 1e-12)
            .map(|(_, r)| *r)
            .fold(0.0, f64::max)
    }

    /// Keep rows `0..=k`.
    pub fn truncated(&self, k: usize) -> SurfacePatch {
        let k = k.min(self.rows() - 1);
        let mut p = self.clone();
        p.v_levels.truncate(k + 1);
        p.psi.truncate(k + 1);
        p.psi_v.truncate(k + 1);
        p.residual_history.truncate(k + 1);
        p
    }
}

fn min_spacelike(psi: &[LVec3]) -> (usize, f64) {
    let (psi_u, _) = row_u_derivatives(psi);
    psi_u
        .iter()
        .map(|p| p.norm_sq())
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (j, q)| if q < acc.1 { (j, q) } else { acc },
        )
}

/// March from `v = 0` towards `cfg.v_max`, truncating at the first row that
/// breaks the residual budget or the spacelike condition.
pub fn march(
    spec: &NullCurveSpec,
    h: &PrescribedCurvature,
    cfg: &SolverConfig,
) -> Result<SurfacePatch> {
    cfg.validate()?;
    let mut state = build_initial_data(spec, cfg.p0, cfg.n)?;
    // H must be admissible at the base point
    h.eval(cfg.p0)?;
    let steps = cfg.steps();
    let mut levels = vec![0.0];
    let mut psi = vec![state.psi.clone()];
    let mut psi_v = vec![state.psi_v.clone()];
    let mut history = vec![conformality_residual(&state)];
    let mut status = MarchStatus::Completed;

    for k in 1..=steps {
        let mut next = match step(&state, h, cfg) {
            Ok(next) => next,
            Err(Error::Degraded { residual, .. }) => {
                status = MarchStatus::ResidualBudget {
                    v: state.v,
                    residual,
                };
                break;
            }
            Err(e) => return Err(e),
        };
        next.v = k as f64 * cfg.dv;
        let residual = conformality_residual(&next);
        if !(residual <= cfg.residual_budget) {
            status = MarchStatus::ResidualBudget {
                v: next.v,
                residual,
            };
            break;
        }
        let (node, q) = min_spacelike(&next.psi);
        if !(q > 0.0) {
            status = MarchStatus::NotSpacelike { v: next.v, node };
            break;
        }
        levels.push(next.v);
        psi.push(next.psi.clone());
        psi_v.push(next.psi_v.clone());
        history.push(residual);
        state = next;
    }

    if levels.len() == 1 {
        return Err(Error::SolverFailure(format!(
            "no valid row beyond v = 0 ({status}); n = {}, dv = {}, filter_strength = {}, residual_budget = {:e}",
            cfg.n, cfg.dv, cfg.filter_strength, cfg.residual_budget
        )));
    }

    Ok(SurfacePatch {
        v_levels: levels,
        psi,
        psi_v,
        velocity: VelocitySource::Exact,
        status,
        residual_history: history,
        config: Some(*cfg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(u: f64, v: f64) -> LVec3 {
        let t = (v / 2.0).tan();
        let f = -t / 2.0;
        let h = -(v - t) / 2.0;
        LVec3::new(u.cos() * f, -u.sin() * f, h)
    }

    #[test]
    fn initial_data_examples() {
        let spec = NullCurveSpec::constant(64, -0.25).unwrap();
        let s = build_initial_data(&spec, LVec3::ZERO, 64).unwrap();
        assert_eq!(s.v, 0.0);
        assert!((s.psi_v[0] - LVec3::new(-0.25, 0.0, -0.25)).max_abs() < 1e-16);
        assert!(s.psi_v.iter().all(|b| b.norm_sq().abs() < 1e-16));
        assert!(s.psi.iter().all(|p| *p == LVec3::ZERO));

        let spec = NullCurveSpec::from_series(64, 0.25, &[0.1], &[]).unwrap();
        let s = build_initial_data(&spec, LVec3::ZERO, 64).unwrap();
        assert!((s.psi_v[32] - LVec3::new(-0.15, 0.0, 0.15)).max_abs() < 1e-15);
        assert_eq!(spec.cone(), Cone::Upper);
    }

    #[test]
    fn rejects_vanishing_heights() {
        assert!(matches!(
            NullCurveSpec::from_series(64, 0.05, &[0.1], &[]),
            Err(Error::InvalidNullCurve(_))
        ));
        assert!(NullCurveSpec::constant(16, 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            n: 63,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(Error::InvalidGrid(63)));
        let bad = SolverConfig {
            dv: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn initial_residual_vanishes() {
        let spec = NullCurveSpec::from_series(64, 0.25, &[0.1], &[0.05]).unwrap();
        let s = build_initial_data(&spec, LVec3::ZERO, 64).unwrap();
        assert!(conformality_residual(&s) < 1e-16);
    }

    #[test]
    fn closed_form_state_is_conformal() {
        let n = 32;
        let v = 0.5;
        let eps = 1e-6;
        let psi: Vec<LVec3> = spectral::nodes(n)
            .iter()
            .map(|&u| closed_form(u, v))
            .collect();
        // ψ_v by the analytic derivative of the closed form
        let t = (v / 2.0).tan();
        let fp = -(1.0 + t * t) / 4.0;
        let hp = (t * t - 1.0) / 4.0;
        let psi_v: Vec<LVec3> = spectral::nodes(n)
            .iter()
            .map(|&u| LVec3::new(u.cos() * fp, -u.sin() * fp, hp))
            .collect();
        let s = CauchyState { v, psi, psi_v };
        assert!(conformality_residual(&s) < 1e-15);

        // a vertical perturbation of ψ_v moves the residual linearly:
        // d/dε |<ψ_w,ψ_w>| at ε = 0 is |(h'/2, ψ_u.z/2)| = |h'|/2
        let perturbed = |e: f64| {
            let mut p = s.clone();
            p.psi_v.iter_mut().for_each(|b| b.z += e);
            conformality_residual(&p)
        };
        let r1 = perturbed(eps);
        let r2 = perturbed(2.0 * eps);
        assert!((r1 / eps - hp.abs() / 2.0).abs() < 1e-4);
        assert!((r2 / r1 - 2.0).abs() < 1e-4);
    }

    #[test]
    fn one_step_stays_periodic_and_conformal() {
        let spec = NullCurveSpec::from_series(64, 0.25, &[0.1], &[]).unwrap();
        let cfg = SolverConfig::default();
        let s0 = build_initial_data(&spec, cfg.p0, cfg.n).unwrap();
        let s1 = step(&s0, &PrescribedCurvature::unit(), &cfg).unwrap();
        assert_eq!(s1.psi.len(), 64);
        assert!(conformality_residual(&s1) <= 1e-10);
    }

    #[test]
    fn march_matches_closed_form() {
        let spec = NullCurveSpec::constant(64, -0.25).unwrap();
        let cfg = SolverConfig {
            v_max: 0.5,
            ..Default::default()
        };
        let patch = march(&spec, &PrescribedCurvature::unit(), &cfg).unwrap();
        assert_eq!(patch.status, MarchStatus::Completed);
        let k = patch.rows() - 1;
        assert!((patch.v_ok() - 0.5).abs() < 1e-12);
        let err = (patch.psi()[k][0] - closed_form(0.0, 0.5)).max_abs();
        assert!(err <= 1e-8, "error {err:e}");
    }

    #[test]
    fn nonpositive_curvature_aborts() {
        let spec = NullCurveSpec::constant(16, 0.25).unwrap();
        let cfg = SolverConfig {
            n: 16,
            v_max: 0.1,
            ..Default::default()
        };
        let h = PrescribedCurvature::parse("0.5 - z*100").unwrap();
        assert!(matches!(
            march(&spec, &h, &cfg),
            Err(Error::Curvature { .. })
        ));
    }

    #[test]
    fn immediate_degradation_is_a_failure() {
        let spec = NullCurveSpec::from_series(64, 0.25, &[0.1], &[]).unwrap();
        let cfg = SolverConfig {
            residual_budget: 1e-30,
            ..Default::default()
        };
        assert!(matches!(
            march(&spec, &PrescribedCurvature::unit(), &cfg),
            Err(Error::SolverFailure(_))
        ));
    }

    #[test]
    fn degraded_state_refuses_to_step() {
        let spec = NullCurveSpec::constant(16, 0.25).unwrap();
        let cfg = SolverConfig {
            n: 16,
            ..Default::default()
        };
        let mut s = build_initial_data(&spec, cfg.p0, 16).unwrap();
        s.psi_v.iter_mut().for_each(|b| b.z += 0.1);
        assert!(matches!(
            step(&s, &PrescribedCurvature::unit(), &cfg),
            Err(Error::Degraded { .. })
        ));
    }
}
