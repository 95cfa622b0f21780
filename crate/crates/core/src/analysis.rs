//! Diagnostics of a computed patch: Gauss map, representation identities,
//! curvature, and recovery of the height function from the boundary row.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::curvature::PrescribedCurvature;
use crate::error::{Error, Result};
use crate::lorentz::{lorentz_cross, LVec3};
use crate::solver::{march, row_u_derivatives, Cone, NullCurveSpec, SolverConfig, SurfacePatch};
use crate::spectral::{
    complex_derivative, complex_second_derivative, nodes, real_derivatives, PeriodicField,
};
use crate::stencil::RowStencil;

/// Nodes with `|z_w|` below this are masked out of the Gauss map.
pub const Z_W_THRESHOLD: f64 = 1e-12;

/// `|g_w̄|` below this reports the curvature as a blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e-10;

/// Accuracy of the v-stencils used throughout this module.
const V_ACCURACY: usize = 4;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// The Gauss map `g = (x_w - i y_w) / z_w` sampled on a patch. Row 0 is
/// the boundary trace `(b1 - i b2) / b3`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussField {
    v_levels: Vec<f64>,
    values: Vec<Vec<Complex64>>,
    valid: Vec<Vec<bool>>,
}

impl GaussField {
    pub fn n(&self) -> usize {
        self.values[0].len()
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn v_levels(&self) -> &[f64] {
        &self.v_levels
    }

    pub fn values(&self) -> &[Vec<Complex64>] {
        &self.values
    }

    pub fn boundary(&self) -> &[Complex64] {
        &self.values[0]
    }

    /// `None` at masked nodes.
    pub fn get(&self, k: usize, j: usize) -> Option<Complex64> {
        self.valid[k][j].then(|| self.values[k][j])
    }

    pub fn masked_count(&self) -> usize {
        self.valid.iter().flatten().filter(|ok| !**ok).count()
    }

    /// Largest `|g|` over unmasked nodes of rows `1..`.
    pub fn max_interior_modulus(&self) -> f64 {
        (1..self.rows())
            .flat_map(|k| (0..self.n()).filter_map(move |j| self.get(k, j)))
            .map(|g| g.norm())
            .fold(0.0, f64::max)
    }

    /// Largest `||g| - 1|` on the boundary trace.
    pub fn boundary_modulus_defect(&self) -> f64 {
        self.boundary()
            .iter()
            .map(|g| (g.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn row_usable(&self, k: usize) -> bool {
        self.valid[k].iter().all(|ok| *ok)
    }

    fn dv(&self) -> f64 {
        self.v_levels[1] - self.v_levels[0]
    }
}

/// `ψ_w = (ψ_u - i ψ_v)/2` split into components.
#[derive(Clone, Copy, Debug)]
struct Wirtinger {
    x: Complex64,
    y: Complex64,
    z: Complex64,
}

impl Wirtinger {
    fn new(pu: LVec3, pv: LVec3) -> Self {
        let w = |a: f64, b: f64| Complex64::new(a, -b) / 2.0;
        Self {
            x: w(pu.x, pv.x),
            y: w(pu.y, pv.y),
            z: w(pu.z, pv.z),
        }
    }
}

fn patch_u_derivatives(patch: &SurfacePatch) -> Vec<Vec<LVec3>> {
    patch
        .psi()
        .iter()
        .map(|row| row_u_derivatives(row).0)
        .collect()
}

pub fn gauss_map(patch: &SurfacePatch) -> Result<GaussField> {
    let psi_u = patch_u_derivatives(patch);
    let mut values = Vec::with_capacity(patch.rows());
    let mut valid = Vec::with_capacity(patch.rows());
    for (k, (row_u, row_v)) in psi_u.iter().zip(patch.psi_v()).enumerate() {
        let mut vals = Vec::with_capacity(patch.n());
        let mut ok = Vec::with_capacity(patch.n());
        for (pu, pv) in row_u.iter().zip(row_v) {
            // Row 0 has ψ_u = 0, so this is the trace (b1 - i b2)/b3 there.
            let (pu, pv) = if k == 0 {
                (LVec3::ZERO, *pv)
            } else {
                (*pu, *pv)
            };
            let w = Wirtinger::new(pu, pv);
            if w.z.norm() < Z_W_THRESHOLD {
                vals.push(Complex64::new(0.0, 0.0));
                ok.push(false);
            } else {
                let g = (w.x - I * w.y) / w.z;
                ok.push(g.is_finite());
                vals.push(if g.is_finite() {
                    g
                } else {
                    Complex64::new(0.0, 0.0)
                });
            }
        }
        values.push(vals);
        valid.push(ok);
    }
    Ok(GaussField {
        v_levels: patch.v_levels().to_vec(),
        values,
        valid,
    })
}

/// u- and v-derivatives of the Gauss map at every node.
struct GaussJet {
    g_u: Vec<Vec<Complex64>>,
    g_v: Vec<Vec<Complex64>>,
    g_uu: Vec<Vec<Complex64>>,
    g_vv: Vec<Vec<Complex64>>,
}

impl GaussJet {
    fn new(g: &GaussField) -> Result<Self> {
        if g.rows() < V_ACCURACY + 2 {
            return Err(Error::Domain(format!(
                "need at least {} rows for v-derivatives of g",
                V_ACCURACY + 2
            )));
        }
        let rows = g.rows();
        let n = g.n();
        let d1 = RowStencil::new(rows, g.dv(), 1, V_ACCURACY);
        let d2 = RowStencil::new(rows, g.dv(), 2, V_ACCURACY);
        let g_u = g.values.iter().map(|r| complex_derivative(r)).collect();
        let g_uu = g
            .values
            .iter()
            .map(|r| complex_second_derivative(r))
            .collect();
        let column = |st: &RowStencil| -> Vec<Vec<Complex64>> {
            (0..rows)
                .map(|k| (0..n).map(|j| st.apply(k, |r| g.values[r][j])).collect())
                .collect()
        };
        Ok(Self {
            g_u,
            g_v: column(&d1),
            g_uu,
            g_vv: column(&d2),
        })
    }

    fn g_w(&self, k: usize, j: usize) -> Complex64 {
        (self.g_u[k][j] - I * self.g_v[k][j]) / 2.0
    }

    fn g_wbar(&self, k: usize, j: usize) -> Complex64 {
        (self.g_u[k][j] + I * self.g_v[k][j]) / 2.0
    }

    fn g_wwbar(&self, k: usize, j: usize) -> Complex64 {
        (self.g_uu[k][j] + self.g_vv[k][j]) / 4.0
    }
}

/// Rows `k` for which every row touched by the v-stencil is unmasked.
/// Only rows strictly between the boundary and the last row qualify.
fn interior_rows(g: &GaussField) -> Vec<usize> {
    let rows = g.rows();
    let reach = V_ACCURACY / 2 + 1;
    (1..rows.saturating_sub(1))
        .filter(|&k| {
            let lo = k.saturating_sub(reach);
            let hi = (k + reach).min(rows - 1);
            (lo..=hi).all(|r| g.row_usable(r))
        })
        .collect()
}

fn check_same_grid(g: &GaussField, patch: &SurfacePatch) -> Result<()> {
    if g.rows() != patch.rows() || g.n() != patch.n() {
        return Err(Error::Domain("Gauss field and patch grids differ".into()));
    }
    Ok(())
}

fn curvature_field(patch: &SurfacePatch, h: &PrescribedCurvature) -> Result<Vec<Vec<f64>>> {
    patch
        .psi()
        .iter()
        .map(|row| row.iter().map(|p| h.eval(*p)).collect())
        .collect()
}

/// Sup over interior nodes of
/// `|H (g_ww̄ + 2 ḡ g_w g_w̄ / (1 - |g|^2)) - H_w g_w̄|`.
pub fn gauss_pde_residual(
    g: &GaussField,
    h: &PrescribedCurvature,
    patch: &SurfacePatch,
) -> Result<f64> {
    check_same_grid(g, patch)?;
    let jet = GaussJet::new(g)?;
    let hf = curvature_field(patch, h)?;
    let h_u: Vec<Vec<f64>> = hf.iter().map(|r| real_derivatives(r).0).collect();
    let dv = RowStencil::new(g.rows(), g.dv(), 1, V_ACCURACY);
    let mut sup = 0.0f64;
    for k in interior_rows(g) {
        for j in 0..g.n() {
            let gv = g.values[k][j];
            let h_v = dv.apply(k, |r| hf[r][j]);
            let h_w = Complex64::new(h_u[k][j], -h_v) / 2.0;
            let gw = jet.g_w(k, j);
            let gwb = jet.g_wbar(k, j);
            let lhs =
                hf[k][j] * (jet.g_wwbar(k, j) + 2.0 * gv.conj() * gw * gwb / (1.0 - gv.norm_sqr()));
            sup = sup.max((lhs - h_w * gwb).norm());
        }
    }
    Ok(sup)
}

/// Sup over interior nodes of the defect in the representation
/// `ψ_w = ḡ_w (1 + g^2, -i (1 - g^2), 2 g) / (H (1 - |g|^2)^2)`.
pub fn weierstrass_check(
    patch: &SurfacePatch,
    g: &GaussField,
    h: &PrescribedCurvature,
) -> Result<f64> {
    check_same_grid(g, patch)?;
    let jet = GaussJet::new(g)?;
    let psi_u = patch_u_derivatives(patch);
    let mut sup = 0.0f64;
    for k in interior_rows(g) {
        for j in 0..g.n() {
            let gv = g.values[k][j];
            let hv = h.eval(patch.psi()[k][j])?;
            let w = Wirtinger::new(psi_u[k][j], patch.psi_v()[k][j]);
            let gbar_w = jet.g_wbar(k, j).conj();
            let den = hv * (1.0 - gv.norm_sqr()).powi(2);
            let g2 = gv * gv;
            let dx = w.x - gbar_w * (1.0 + g2) / den;
            let dy = w.y + I * gbar_w * (1.0 - g2) / den;
            let dz = w.z - 2.0 * gbar_w * gv / den;
            let defect = (dx.norm_sqr() + dy.norm_sqr() + dz.norm_sqr()).sqrt();
            sup = sup.max(defect);
        }
    }
    Ok(sup)
}

/// Gaussian curvature at a node, or a blow-up marker where `g_w̄` vanishes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Curvature {
    Finite(f64),
    BlowUp,
}

impl Curvature {
    pub fn value(self) -> Option<f64> {
        match self {
            Curvature::Finite(k) => Some(k),
            Curvature::BlowUp => None,
        }
    }
}

/// `K = H^2 (|g_w|^2 / |g_w̄|^2 - 1)` at every node; masked nodes report
/// `BlowUp` as well, since no finite value is available there.
pub fn gaussian_curvature(
    g: &GaussField,
    h: &PrescribedCurvature,
    patch: &SurfacePatch,
) -> Result<Vec<Vec<Curvature>>> {
    check_same_grid(g, patch)?;
    let jet = GaussJet::new(g)?;
    let mut out = Vec::with_capacity(g.rows());
    for k in 0..g.rows() {
        let mut row = Vec::with_capacity(g.n());
        for j in 0..g.n() {
            let gwb = jet.g_wbar(k, j).norm();
            if !g.valid[k][j] || gwb < BLOWUP_THRESHOLD {
                row.push(Curvature::BlowUp);
                continue;
            }
            let hv = h.eval(patch.psi()[k][j])?;
            let ratio = jet.g_w(k, j).norm_sqr() / (gwb * gwb);
            row.push(Curvature::Finite(hv * hv * (ratio - 1.0)));
        }
        out.push(row);
    }
    Ok(out)
}

/// Gaussian curvature of row `k` from the two fundamental forms,
/// `K = -(L N - M^2) / (E G - F^2)` with the timelike unit normal.
pub fn fundamental_forms_curvature(patch: &SurfacePatch, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k >= patch.rows() {
        return Err(Error::Domain(format!("row {k} is not an interior row")));
    }
    if patch.rows() < V_ACCURACY + 2 {
        return Err(Error::Domain("too few rows for the v-stencil".into()));
    }
    let (psi_u, psi_uu) = row_u_derivatives(&patch.psi()[k]);
    let (psi_uv, _) = row_u_derivatives(&patch.psi_v()[k]);
    let st = RowStencil::new(patch.rows(), patch.dv(), 1, V_ACCURACY);
    let pv = patch.psi_v();
    (0..patch.n())
        .map(|j| {
            let (xu, xv) = (psi_u[j], pv[k][j]);
            let psi_vv = st.apply(k, |r| pv[r][j]);
            let normal = lorentz_cross(xu, xv);
            let q = -normal.norm_sq();
            if q <= 0.0 {
                return Err(Error::Domain(format!("row {k} node {j} is not spacelike")));
            }
            let nu = normal / q.sqrt();
            let (e, f, gg) = (xu.dot(xu), xu.dot(xv), xv.dot(xv));
            let (l, m, nn) = (psi_uu[j].dot(nu), psi_uv[j].dot(nu), psi_vv.dot(nu));
            Ok(-(l * nn - m * m) / (e * gg - f * f))
        })
        .collect()
}

/// The boundary row `b(u) = ψ_v(u, 0)` together with its height function.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitNullCurve {
    pub height: PeriodicField,
    pub cone: Cone,
    pub raw: Vec<LVec3>,
}

impl LimitNullCurve {
    /// Validates `b != 0`, a constant sign of `b3`, and `<b', b'> > 0`.
    pub fn from_samples(raw: Vec<LVec3>) -> Result<Self> {
        if let Some(j) = raw.iter().position(|b| b.euclidean_norm() < 1e-12) {
            return Err(Error::InvalidNullCurve(format!("b vanishes at node {j}")));
        }
        let b3: Vec<f64> = raw.iter().map(|b| b.z).collect();
        let positive = b3[0] > 0.0;
        if let Some(j) = b3.iter().position(|z| (*z > 0.0) != positive || *z == 0.0) {
            return Err(Error::InvalidNullCurve(format!(
                "b3 changes sign at node {j}; the curve must stay on one cone"
            )));
        }
        let speed = tangent_norms(&raw);
        if let Some(j) = speed.iter().position(|s| !(*s > 0.0)) {
            return Err(Error::InvalidNullCurve(format!(
                "<b', b'> = {:e} is not positive at node {j}",
                speed[j]
            )));
        }
        Ok(Self {
            height: PeriodicField::from_real(b3)?,
            cone: if positive { Cone::Upper } else { Cone::Lower },
            raw,
        })
    }

    pub fn n(&self) -> usize {
        self.raw.len()
    }

    /// Boundary Gauss trace `(b1 - i b2) / b3`.
    pub fn trace(&self) -> Vec<Complex64> {
        self.raw
            .iter()
            .map(|b| Complex64::new(b.x, -b.y) / b.z)
            .collect()
    }

    pub fn spec(&self) -> Result<NullCurveSpec> {
        NullCurveSpec::new(self.height.clone())
    }
}

fn component(raw: &[LVec3], f: impl Fn(&LVec3) -> f64) -> Vec<f64> {
    raw.iter().map(f).collect()
}

/// `<b'(u_j), b'(u_j)>` by spectral differentiation.
pub fn tangent_norms(raw: &[LVec3]) -> Vec<f64> {
    let (d, _) = row_u_derivatives(raw);
    d.iter().map(|t| t.norm_sq()).collect()
}

/// `b` taken from row 0 of `ψ_v`, without any reparametrization.
pub fn raw_null_curve(patch: &SurfacePatch) -> Result<LimitNullCurve> {
    LimitNullCurve::from_samples(patch.psi_v()[0].clone())
}

/// `b` from the patch, brought to the canonical parametrization.
pub fn extract_null_curve(patch: &SurfacePatch) -> Result<LimitNullCurve> {
    canonical_phase(&raw_null_curve(patch)?)
}

fn wrap(d: f64) -> f64 {
    let mut d = d % TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}

/// Winding number of a closed sampled curve around the origin, by
/// nearest-branch continuation of its argument.
pub fn boundary_degree(trace: &[Complex64]) -> i64 {
    let n = trace.len();
    let total: f64 = (0..n)
        .map(|j| wrap(trace[(j + 1) % n].arg() - trace[j].arg()))
        .sum();
    (total / TAU).round() as i64
}

/// Unwrapped phase of the trace starting from its principal value at
/// `u = 0`. Fails unless it increases strictly and by exactly one turn.
pub fn unwrapped_phase(trace: &[Complex64]) -> Result<Vec<f64>> {
    let n = trace.len();
    let mut phase = Vec::with_capacity(n);
    phase.push(trace[0].arg());
    let mut total = 0.0;
    for j in 0..n {
        let step = wrap(trace[(j + 1) % n].arg() - trace[j].arg());
        if !(step > 0.0) {
            return Err(Error::InvalidNullCurve(format!(
                "boundary phase is not increasing between nodes {j} and {}",
                (j + 1) % n
            )));
        }
        total += step;
        if j + 1 < n {
            phase.push(phase[j] + step);
        }
    }
    let degree = (total / TAU).round() as i64;
    if degree != 1 {
        return Err(Error::InvalidNullCurve(format!(
            "boundary Gauss trace has degree {degree}, expected 1"
        )));
    }
    Ok(phase)
}

/// Reparametrizes `b` so that its Gauss trace becomes `e^{is}`.
///
/// With `φ(u) = arg g(u, 0)` and `s = φ(u)`, the conformal change of
/// parameter sends `ψ_v` to `ψ_v / φ'`, so the new curve is
/// `b(u(s)) / φ'(u(s))` and `A(s)` is its third component.
pub fn canonical_phase(curve: &LimitNullCurve) -> Result<LimitNullCurve> {
    let n = curve.n();
    let us = nodes(n);
    let phase = unwrapped_phase(&curve.trace())?;
    let periodic: Vec<f64> = phase.iter().zip(&us).map(|(p, u)| p - u).collect();
    let p = PeriodicField::from_real(periodic)?;
    let dp = p.differentiate(1)?;
    let phi = |u: f64| u + p.eval(u).re;
    let dphi = |u: f64| 1.0 + dp.eval(u).re;
    let bx = PeriodicField::from_real(component(&curve.raw, |b| b.x))?;
    let by = PeriodicField::from_real(component(&curve.raw, |b| b.y))?;
    let bz = PeriodicField::from_real(component(&curve.raw, |b| b.z))?;

    let phi0 = phase[0];
    let mut raw = Vec::with_capacity(n);
    for &s in &us {
        let target = s + TAU * ((phi0 - s) / TAU).ceil();
        let u = invert_monotone(&phi, &dphi, target, 0.0, TAU)?;
        let speed = dphi(u);
        if !(speed > 0.0) {
            return Err(Error::InvalidNullCurve(format!(
                "boundary phase is not monotone near u = {u}"
            )));
        }
        raw.push(LVec3::new(bx.eval(u).re, by.eval(u).re, bz.eval(u).re) / speed);
    }
    LimitNullCurve::from_samples(raw)
}

/// Solves `f(u) = target` on `[lo, hi]` for increasing `f` by Newton steps
/// kept inside a shrinking bracket.
fn invert_monotone(
    f: &impl Fn(f64) -> f64,
    df: &impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    let (flo, fhi) = (f(lo) - target, f(hi) - target);
    if flo > 1e-13 || fhi < -1e-13 {
        return Err(Error::InvalidNullCurve(format!(
            "phase {target} is not attained on [{lo}, {hi}]"
        )));
    }
    let mut u = lo + (hi - lo) * (-flo / (fhi - flo)).clamp(0.0, 1.0);
    for _ in 0..100 {
        let r = f(u) - target;
        if r.abs() <= 1e-15 * target.abs().max(1.0) {
            return Ok(u);
        }
        if r > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let next = u - r / df(u);
        u = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 {
            return Ok(u);
        }
    }
    Ok(u)
}

/// March `A`, recover the height function from the patch, and return the
/// sup distance to the input on the solver grid.
pub fn round_trip(a: &PeriodicField, h: &PrescribedCurvature, cfg: &SolverConfig) -> Result<f64> {
    let energy = a.top_quarter_energy();
    if energy >= 1e-10 {
        return Err(Error::InvalidNullCurve(format!(
            "A is not spectrally resolved (top-quarter energy {energy:e})"
        )));
    }
    let spec = NullCurveSpec::new(a.clone())?;
    let patch = march(&spec, h, cfg)?;
    let got = extract_null_curve(&patch)?;
    let want = if a.n() == cfg.n {
        a.clone()
    } else {
        a.resample(cfg.n)?.field
    };
    Ok(got.height.sup_distance(&want))
}

/// Sup over u-nodes of `|4 |g_w z_w|^2 - <b', b'>|` on the boundary row,
/// with `g_v` from one-sided v-stencils.
pub fn gz_identity_check(patch: &SurfacePatch, g: &GaussField) -> Result<f64> {
    check_same_grid(g, patch)?;
    let jet = GaussJet::new(g)?;
    let psi_u = &patch_u_derivatives(patch)[0];
    let b = &patch.psi_v()[0];
    let speed = tangent_norms(b);
    let mut sup = 0.0f64;
    for j in 0..g.n() {
        let z_w = Wirtinger::new(psi_u[j], b[j]).z;
        let lhs = 4.0 * (jet.g_w(0, j) * z_w).norm_sqr();
        sup = sup.max((lhs - speed[j]).abs());
    }
    Ok(sup)
}

/// Sup over u-nodes of `|∂_v n3(u, 0) - (b' × b)_3|`, where
/// `n3 = x_u y_v - x_v y_u` and the derivative is a one-sided v-stencil.
/// For the canonical curve `(b' × b)_3 = A^2`.
pub fn normal_growth_defect(patch: &SurfacePatch) -> Result<f64> {
    if patch.rows() < V_ACCURACY + 1 {
        return Err(Error::Domain("too few rows for the v-stencil".into()));
    }
    let rows = V_ACCURACY + 1;
    let psi_u = patch_u_derivatives(patch);
    let n3: Vec<Vec<f64>> = (0..rows)
        .map(|k| {
            psi_u[k]
                .iter()
                .zip(&patch.psi_v()[k])
                .map(|(pu, pv)| lorentz_cross(*pu, *pv).z)
                .collect()
        })
        .collect();
    let st = RowStencil::new(rows, patch.dv(), 1, V_ACCURACY);
    let b = &patch.psi_v()[0];
    let (db, _) = row_u_derivatives(b);
    let mut sup = 0.0f64;
    for j in 0..patch.n() {
        let growth = st.apply(0, |r| n3[r][j]);
        let expected = lorentz_cross(db[j], b[j]).z;
        sup = sup.max((growth - expected).abs());
    }
    Ok(sup)
}

/// `n3(u, 0)` on the boundary row, which vanishes since `ψ_u(u, 0) = 0`.
pub fn boundary_normal(patch: &SurfacePatch) -> Vec<f64> {
    let (pu, _) = row_u_derivatives(&patch.psi()[0]);
    pu.iter()
        .zip(&patch.psi_v()[0])
        .map(|(a, b)| lorentz_cross(*a, *b).z)
        .collect()
}

/// Sup over the patch of `|I_θ ψ(u, v) - ψ(u + θ, v)|` for `θ = 2π m / n`.
pub fn equivariance_defect(patch: &SurfacePatch, m: usize) -> f64 {
    let n = patch.n();
    let theta = TAU * m as f64 / n as f64;
    patch
        .psi()
        .iter()
        .flat_map(|row| (0..n).map(move |j| (row[j].rotate_z(theta) - row[(j + m) % n]).max_abs()))
        .fold(0.0, f64::max)
}

/// Worst equivariance defect over every grid-aligned rotation.
pub fn max_equivariance_defect(patch: &SurfacePatch) -> f64 {
    (1..patch.n())
        .map(|m| equivariance_defect(patch, m))
        .fold(0.0, f64::max)
}
