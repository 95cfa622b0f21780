//! The surface as a graph `z = z(x, y)` over a punctured disk.
//!
//! Derivatives of `z` with respect to `(x, y)` come from the chain rule
//! through the per-node Jacobian of `(u, v) -> (x, y)`.

use std::f64::consts::TAU;

use crate::curvature::PrescribedCurvature;
use crate::error::{Error, Result};
use crate::lorentz::LVec3;
use crate::solver::{row_u_derivatives, SurfacePatch};
use crate::spectral::real_derivatives;
use crate::stencil::RowStencil;

/// Samples with `1 - p^2 - q^2` below this are skipped by the PDE checks.
pub const SIGMA_MASK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GraphSample {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeltramiCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sigma: f64,
}

impl GraphSample {
    pub fn grad_sq(&self) -> f64 {
        self.p * self.p + self.q * self.q
    }

    pub fn coeffs(&self) -> BeltramiCoeffs {
        BeltramiCoeffs {
            a: 1.0 - self.q * self.q,
            b: self.p * self.q,
            c: 1.0 - self.p * self.p,
            sigma: 1.0 - self.grad_sq(),
        }
    }

    pub fn hessian_det(&self) -> f64 {
        self.r * self.t - self.s * self.s
    }

    pub fn position(&self) -> LVec3 {
        LVec3::new(self.x, self.y, self.z)
    }
}

/// Reconstructed samples, one row per patch row `v > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphGrid {
    v_levels: Vec<f64>,
    rows: Vec<Vec<GraphSample>>,
    origin: LVec3,
}

impl GraphGrid {
    /// Grid from directly evaluated samples; `origin` is the puncture.
    pub fn from_samples(
        v_levels: Vec<f64>,
        rows: Vec<Vec<GraphSample>>,
        origin: LVec3,
    ) -> Result<Self> {
        if rows.is_empty() || rows.len() != v_levels.len() {
            return Err(Error::Reconstruction("graph rows and levels differ".into()));
        }
        Ok(Self {
            v_levels,
            rows,
            origin,
        })
    }

    pub fn rows(&self) -> &[Vec<GraphSample>] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [Vec<GraphSample>] {
        &mut self.rows
    }

    pub fn v_levels(&self) -> &[f64] {
        &self.v_levels
    }

    pub fn origin(&self) -> LVec3 {
        self.origin
    }

    pub fn row_near(&self, v: f64) -> usize {
        let mut best = 0;
        for (k, l) in self.v_levels.iter().enumerate() {
            if (l - v).abs() < (self.v_levels[best] - v).abs() {
                best = k;
            }
        }
        best
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Injectivity {
    /// Each row simple, adjacent rows disjoint and nested.
    #[default]
    Adjacent,
    /// Additionally every pair of rows disjoint.
    Full,
}

pub fn reconstruct(patch: &SurfacePatch) -> Result<GraphGrid> {
    reconstruct_with(patch, Injectivity::Adjacent)
}

pub fn reconstruct_with(patch: &SurfacePatch, mode: Injectivity) -> Result<GraphGrid> {
    let n = patch.n();
    let rows = patch.rows() - 1;
    if rows < 5 {
        return Err(Error::Reconstruction(
            "need at least five rows above v = 0".into(),
        ));
    }
    let mut jac = vec![vec![0.0; n]; rows];
    let mut du = Vec::with_capacity(rows);
    let mut pq = Vec::with_capacity(rows);
    for k in 0..rows {
        let src = k + 1;
        let (pu, _) = row_u_derivatives(&patch.psi()[src]);
        let pv = &patch.psi_v()[src];
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let d = pu[j].x * pv[j].y - pv[j].x * pu[j].y;
            if !(d > 0.0) {
                return Err(Error::Reconstruction(format!(
                    "Jacobian x_u y_v - x_v y_u = {d:e} is not positive at v = {}, node {j}",
                    patch.v_levels()[src]
                )));
            }
            jac[k][j] = d;
            let p = (pu[j].z * pv[j].y - pv[j].z * pu[j].y) / d;
            let q = (pu[j].x * pv[j].z - pv[j].x * pu[j].z) / d;
            row.push((p, q));
        }
        du.push(pu);
        pq.push(row);
    }

    let st = RowStencil::new(rows, patch.dv(), 1, 4);
    let mut out = Vec::with_capacity(rows);
    for k in 0..rows {
        let src = k + 1;
        let p_row: Vec<f64> = pq[k].iter().map(|x| x.0).collect();
        let q_row: Vec<f64> = pq[k].iter().map(|x| x.1).collect();
        let (p_u, _) = real_derivatives(&p_row);
        let (q_u, _) = real_derivatives(&q_row);
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let p_v = st.apply(k, |r| pq[r][j].0);
            let q_v = st.apply(k, |r| pq[r][j].1);
            let (xu, yu) = (du[k][j].x, du[k][j].y);
            let (xv, yv) = (patch.psi_v()[src][j].x, patch.psi_v()[src][j].y);
            let d = jac[k][j];
            let r = (p_u[j] * yv - p_v * yu) / d;
            let s_p = (xu * p_v - xv * p_u[j]) / d;
            let s_q = (q_u[j] * yv - q_v * yu) / d;
            let t = (xu * q_v - xv * q_u[j]) / d;
            let pos = patch.psi()[src][j];
            row.push(GraphSample {
                x: pos.x,
                y: pos.y,
                z: pos.z,
                p: p_row[j],
                q: q_row[j],
                r,
                s: 0.5 * (s_p + s_q),
                t,
            });
        }
        out.push(row);
    }
    let grid = GraphGrid {
        v_levels: patch.v_levels()[1..].to_vec(),
        rows: out,
        origin: patch.psi()[0][0],
    };
    check_injectivity(&grid, mode)?;
    Ok(grid)
}

type Pt = (f64, f64);

fn orient(a: Pt, b: Pt, c: Pt) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Proper or touching intersection of closed segments `ab` and `cd`.
fn segments_meet(a: Pt, b: Pt, c: Pt, d: Pt) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Pt, q: Pt, r: Pt| {
        r.0 >= p.0.min(q.0) && r.0 <= p.0.max(q.0) && r.1 >= p.1.min(q.1) && r.1 <= p.1.max(q.1)
    };
    (d1 == 0.0 && on(c, d, a))
        || (d2 == 0.0 && on(c, d, b))
        || (d3 == 0.0 && on(a, b, c))
        || (d4 == 0.0 && on(a, b, d))
}

/// Winding number of the closed polygon `curve` around `o`.
pub fn winding_number(curve: &[Pt], o: Pt) -> i64 {
    let n = curve.len();
    let total: f64 = (0..n)
        .map(|j| {
            let a = (curve[j].1 - o.1).atan2(curve[j].0 - o.0);
            let b = (curve[(j + 1) % n].1 - o.1).atan2(curve[(j + 1) % n].0 - o.0);
            let mut d = b - a;
            if d > std::f64::consts::PI {
                d -= TAU;
            } else if d <= -std::f64::consts::PI {
                d += TAU;
            }
            d
        })
        .sum();
    (total / TAU).round() as i64
}

fn is_simple(curve: &[Pt]) -> bool {
    let n = curve.len();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_meet(curve[i], curve[(i + 1) % n], curve[j], curve[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn curves_meet(a: &[Pt], b: &[Pt]) -> bool {
    let (n, m) = (a.len(), b.len());
    (0..n).any(|i| (0..m).any(|j| segments_meet(a[i], a[(i + 1) % n], b[j], b[(j + 1) % m])))
}

fn check_injectivity(grid: &GraphGrid, mode: Injectivity) -> Result<()> {
    let o = (grid.origin.x, grid.origin.y);
    let curves: Vec<Vec<Pt>> = grid
        .rows
        .iter()
        .map(|r| r.iter().map(|s| (s.x, s.y)).collect())
        .collect();
    let fail = |msg: String| Err(Error::Reconstruction(msg));
    let mut winding = None;
    for (k, c) in curves.iter().enumerate() {
        if !is_simple(c) {
            return fail(format!("row v = {} crosses itself", grid.v_levels[k]));
        }
        let w = winding_number(c, o);
        if w == 0 || winding.is_some_and(|w0| w0 != w) {
            return fail(format!(
                "row v = {} winds {w} times around the puncture",
                grid.v_levels[k]
            ));
        }
        winding = Some(w);
    }
    for k in 0..curves.len().saturating_sub(1) {
        if curves_meet(&curves[k], &curves[k + 1]) {
            return fail(format!(
                "rows v = {} and v = {} overlap",
                grid.v_levels[k],
                grid.v_levels[k + 1]
            ));
        }
        if winding_number(&curves[k + 1], curves[k][0]) == 0 {
            return fail(format!(
                "row v = {} is not enclosed by the next row",
                grid.v_levels[k]
            ));
        }
    }
    if mode == Injectivity::Full {
        let radii: Vec<(f64, f64)> = curves
            .iter()
            .map(|c| {
                c.iter()
                    .map(|p| (p.0 - o.0).hypot(p.1 - o.1))
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
                        (lo.min(r), hi.max(r))
                    })
            })
            .collect();
        for a in 0..curves.len() {
            for b in a + 2..curves.len() {
                let apart = radii[a].1 < radii[b].0 || radii[b].1 < radii[a].0;
                if !apart && curves_meet(&curves[a], &curves[b]) {
                    return fail(format!(
                        "rows v = {} and v = {} overlap",
                        grid.v_levels[a], grid.v_levels[b]
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_ellipticity(gg: &GraphGrid) -> Result<()> {
    let mut count = 0;
    let mut first = None;
    for (k, row) in gg.rows.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            if !(s.grad_sq() < 1.0) {
                count += 1;
                first.get_or_insert((k, j, s.grad_sq()));
            }
        }
    }
    match first {
        None => Ok(()),
        Some((row, node, grad_sq)) => Err(Error::Ellipticity {
            count,
            row,
            node,
            grad_sq,
        }),
    }
}

/// Sup of `|(1-q^2) r + 2pq s + (1-p^2) t - 2 H (1-p^2-q^2)^{3/2}|` over
/// samples with `1 - p^2 - q^2 >= sigma_mask`.
pub fn maineq_residual_masked(
    gg: &GraphGrid,
    h: &PrescribedCurvature,
    sigma_mask: f64,
) -> Result<f64> {
    check_ellipticity(gg)?;
    let mut sup = 0.0f64;
    for s in gg.rows.iter().flatten() {
        let c = s.coeffs();
        if c.sigma < sigma_mask {
            continue;
        }
        let hv = h.eval(s.position())?;
        let lhs = c.a * s.r + 2.0 * c.b * s.s + c.c * s.t;
        sup = sup.max((lhs - 2.0 * hv * c.sigma.powf(1.5)).abs());
    }
    Ok(sup)
}

pub fn maineq_residual(gg: &GraphGrid, h: &PrescribedCurvature) -> Result<f64> {
    maineq_residual_masked(gg, h, SIGMA_MASK)
}

/// Sup of `|(x_v, y_v) - (b x_u - a y_u, c x_u - b y_u) / sqrt(Σ)|` over
/// unmasked nodes. `gg` must come from `patch`.
pub fn beltrami_check(patch: &SurfacePatch, gg: &GraphGrid) -> Result<f64> {
    beltrami_check_masked(patch, gg, SIGMA_MASK)
}

pub fn beltrami_check_masked(patch: &SurfacePatch, gg: &GraphGrid, sigma_mask: f64) -> Result<f64> {
    if gg.rows.len() + 1 != patch.rows() || gg.rows[0].len() != patch.n() {
        return Err(Error::Reconstruction(
            "graph grid does not match patch".into(),
        ));
    }
    let mut sup = 0.0f64;
    for (k, row) in gg.rows.iter().enumerate() {
        let src = k + 1;
        let (pu, _) = row_u_derivatives(&patch.psi()[src]);
        for (j, s) in row.iter().enumerate() {
            let c = s.coeffs();
            if c.sigma < sigma_mask {
                continue;
            }
            let root = c.sigma.sqrt();
            let (xu, yu) = (pu[j].x, pu[j].y);
            let pv = patch.psi_v()[src][j];
            let ex = pv.x - (c.b * xu - c.a * yu) / root;
            let ey = pv.y - (c.c * xu - c.b * yu) / root;
            sup = sup.max(ex.hypot(ey));
        }
    }
    Ok(sup)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianReport {
    pub min_abs: f64,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl HessianReport {
    /// All determinants away from zero and of one sign.
    pub fn constant_sign(&self) -> bool {
        self.zero == 0 && (self.positive == 0 || self.negative == 0)
    }
}

/// Sign census of `rt - s^2`; values with modulus at most `tol` count as zero.
pub fn hessian_sign(gg: &GraphGrid, tol: f64) -> HessianReport {
    let mut rep = HessianReport {
        min_abs: f64::INFINITY,
        positive: 0,
        negative: 0,
        zero: 0,
    };
    for s in gg.rows.iter().flatten() {
        let d = s.hessian_det();
        rep.min_abs = rep.min_abs.min(d.abs());
        if d.abs() <= tol {
            rep.zero += 1;
        } else if d > 0.0 {
            rep.positive += 1;
        } else {
            rep.negative += 1;
        }
    }
    rep
}

/// Per row, the largest `|z^2 / (x^2 + y^2) - 1|` measured from the puncture.
pub fn cone_ratio(gg: &GraphGrid) -> Vec<f64> {
    let o = gg.origin;
    gg.rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|s| {
                    let rho2 = (s.x - o.x).powi(2) + (s.y - o.y).powi(2);
                    ((s.z - o.z).powi(2) / rho2 - 1.0).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// The gradient image `(p, q)` of one row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientRow {
    pub v: f64,
    pub winding: i64,
    pub simple: bool,
    pub min_norm: f64,
    pub max_norm: f64,
}

pub fn gradient_rows(gg: &GraphGrid) -> Vec<GradientRow> {
    gg.rows
        .iter()
        .zip(&gg.v_levels)
        .map(|(row, &v)| {
            let c: Vec<Pt> = row.iter().map(|s| (s.p, s.q)).collect();
            let norms = c.iter().map(|p| p.0.hypot(p.1));
            GradientRow {
                v,
                winding: winding_number(&c, (0.0, 0.0)),
                simple: is_simple(&c),
                min_norm: norms.clone().fold(f64::INFINITY, f64::min),
                max_norm: norms.fold(0.0, f64::max),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{
        closed_form_neg_quarter, integrate_pos_quarter, neg_quarter_profile, radial_surface,
    };
    use crate::spectral::nodes;

    fn unit() -> PrescribedCurvature {
        PrescribedCurvature::unit()
    }

    fn closed_form_patch(n: usize) -> SurfacePatch {
        radial_surface(&neg_quarter_profile(0.8, 1e-3).unwrap(), n).unwrap()
    }

    /// `z = sqrt(1 + x^2 + y^2) - 1` sampled on circles, derivatives exact.
    fn hyperboloid(scale: f64) -> GraphGrid {
        let levels: Vec<f64> = (1..=20).map(|k| k as f64 * 0.05).collect();
        let rows = levels
            .iter()
            .map(|&rho| {
                nodes(32)
                    .into_iter()
                    .map(|u| {
                        let (x, y) = (rho * u.cos(), -rho * u.sin());
                        let w = (1.0 + x * x + y * y).sqrt();
                        let w3 = w * w * w;
                        GraphSample {
                            x,
                            y,
                            z: scale * (w - 1.0),
                            p: scale * x / w,
                            q: scale * y / w,
                            r: scale * (1.0 + y * y) / w3,
                            s: -scale * x * y / w3,
                            t: scale * (1.0 + x * x) / w3,
                        }
                    })
                    .collect()
            })
            .collect();
        GraphGrid::from_samples(levels, rows, LVec3::ZERO).unwrap()
    }

    fn cone(c: f64) -> GraphGrid {
        let levels: Vec<f64> = (1..=10).map(|k| k as f64 * 0.01).collect();
        let rows = levels
            .iter()
            .map(|&rho| {
                nodes(16)
                    .into_iter()
                    .map(|u| {
                        let (x, y) = (rho * u.cos(), rho * u.sin());
                        let r3 = rho * rho * rho;
                        GraphSample {
                            x,
                            y,
                            z: c * rho,
                            p: c * x / rho,
                            q: c * y / rho,
                            r: c * y * y / r3,
                            s: -c * x * y / r3,
                            t: c * x * x / r3,
                        }
                    })
                    .collect()
            })
            .collect();
        GraphGrid::from_samples(levels, rows, LVec3::ZERO).unwrap()
    }

    #[test]
    fn radial_rows_are_circles() {
        let patch = closed_form_patch(32);
        let gg = reconstruct(&patch).unwrap();
        let k = gg.row_near(0.5);
        let (f, h) = closed_form_neg_quarter(0.5).unwrap();
        for s in &gg.rows()[k] {
            assert!((s.x.hypot(s.y) - f.abs()).abs() < 1e-15);
            assert!((s.z - h).abs() < 1e-15);
        }
    }

    #[test]
    fn beltrami_coefficients_identity() {
        let gg = hyperboloid(1.0);
        for s in gg.rows().iter().flatten() {
            let c = s.coeffs();
            assert!((c.a * c.c - c.b * c.b - c.sigma).abs() < 1e-15);
        }
    }

    #[test]
    fn radial_benchmark_graph_checks() {
        let patch = closed_form_patch(32);
        let gg = reconstruct(&patch).unwrap();
        let m = maineq_residual(&gg, &unit()).unwrap();
        assert!(m <= 1e-4, "maineq {m:e}");
        let b = beltrami_check(&patch, &gg).unwrap();
        assert!(b <= 1e-6, "beltrami {b:e}");
        let hs = hessian_sign(&gg, 1e-12);
        assert!(hs.constant_sign(), "{hs:?}");
    }

    #[test]
    fn positive_cone_benchmark_graph_checks() {
        let patch = radial_surface(&integrate_pos_quarter(0.8, 1e-3).unwrap(), 32).unwrap();
        let gg = reconstruct(&patch).unwrap();
        assert!(maineq_residual(&gg, &unit()).unwrap() <= 1e-4);
        assert!(beltrami_check(&patch, &gg).unwrap() <= 1e-6);
    }

    #[test]
    fn beltrami_detects_perturbed_gradient() {
        let patch = closed_form_patch(32);
        let mut gg = reconstruct(&patch).unwrap();
        gg.rows_mut().iter_mut().flatten().for_each(|s| s.q += 0.01);
        assert!(beltrami_check(&patch, &gg).unwrap() > 1e-3);
    }

    #[test]
    fn hyperboloid_is_a_solution() {
        let gg = hyperboloid(1.0);
        assert!(maineq_residual(&gg, &unit()).unwrap() <= 1e-6);
        // removable type: far from the cone near the centre
        assert!(cone_ratio(&gg)[0] > 0.9);
    }

    #[test]
    fn scaled_cone_is_not_a_solution() {
        let gg = cone(0.99);
        assert!(maineq_residual(&gg, &unit()).unwrap() > 1.0);
        let bad = cone(1.01);
        assert!(matches!(
            maineq_residual(&bad, &unit()),
            Err(Error::Ellipticity { .. })
        ));
    }

    #[test]
    fn reversed_orientation_is_rejected() {
        let patch = closed_form_patch(16);
        let flip = |rows: &[Vec<LVec3>]| -> Vec<Vec<LVec3>> {
            rows.iter()
                .map(|r| (0..r.len()).map(|j| r[(r.len() - j) % r.len()]).collect())
                .collect()
        };
        let rev = SurfacePatch::from_rows(
            patch.v_levels().to_vec(),
            flip(patch.psi()),
            flip(patch.psi_v()),
        )
        .unwrap();
        assert!(matches!(reconstruct(&rev), Err(Error::Reconstruction(_))));
    }

    #[test]
    fn overlapping_rows_are_rejected() {
        let patch = radial_surface(&neg_quarter_profile(0.05, 1e-3).unwrap(), 16).unwrap();
        let mut psi = patch.psi().to_vec();
        // fold row 20 back inside row 10
        let shrink = psi[10][0].x.hypot(psi[10][0].y) / psi[20][0].x.hypot(psi[20][0].y) * 0.5;
        for p in psi[20].iter_mut() {
            p.x *= shrink;
            p.y *= shrink;
        }
        let bad = SurfacePatch::from_rows(patch.v_levels().to_vec(), psi, patch.psi_v().to_vec())
            .unwrap();
        assert!(reconstruct_with(&bad, Injectivity::Full).is_err());
        assert!(reconstruct_with(&patch, Injectivity::Full).is_ok());
    }

    #[test]
    fn hessian_flags() {
        let mut flat = hyperboloid(1.0);
        flat.rows_mut().iter_mut().flatten().for_each(|s| {
            s.r = 0.0;
            s.s = 0.0;
            s.t = 0.0;
        });
        assert!(!hessian_sign(&flat, 1e-12).constant_sign());
        assert_eq!(hessian_sign(&flat, 1e-12).min_abs, 0.0);
        let mut mixed = hyperboloid(1.0);
        mixed.rows_mut()[3]
            .iter_mut()
            .for_each(|s| s.t = -s.t - 1.0);
        let rep = hessian_sign(&mixed, 1e-12);
        assert!(rep.positive > 0 && rep.negative > 0 && !rep.constant_sign());
    }

    #[test]
    fn cone_asymptotics() {
        let patch = closed_form_patch(32);
        let gg = reconstruct(&patch).unwrap();
        let dev = cone_ratio(&gg);
        assert!(dev[gg.row_near(0.01)] <= 1e-2);
        assert!(dev.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn gradient_map_is_proper_and_winds_once() {
        let patch = closed_form_patch(32);
        let gg = reconstruct(&patch).unwrap();
        let rows = gradient_rows(&gg);
        assert!(rows
            .iter()
            .all(|r| r.simple && r.winding.abs() == 1 && r.max_norm < 1.0));
        assert!(rows[0].min_norm > 1.0 - 1e-5);
        assert!(rows.windows(2).all(|w| w[1].max_norm < w[0].min_norm));
    }
}
