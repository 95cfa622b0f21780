//! Rotationally symmetric solutions `ψ(u, v) = (f(v) cos u, -f(v) sin u, h(v))`
//! for `H = 1` and constant height functions `A = ±1/4`.

use std::f64::consts::PI;

use crate::curvature::PrescribedCurvature;
use crate::error::{Error, Result};
use crate::lorentz::LVec3;
use crate::solver::{step_count, SurfacePatch};
use crate::spectral::{is_valid_grid, nodes};
use crate::stencil::RowStencil;

/// Samples of `f`, `h` and their first derivatives on a uniform grid
/// starting at `v = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub v: Vec<f64>,
    pub f: Vec<f64>,
    pub h: Vec<f64>,
    pub df: Vec<f64>,
    pub dh: Vec<f64>,
}

impl RadialProfile {
    /// Profile from `f` and `h` samples alone; derivatives by sixth-order
    /// finite differences.
    pub fn from_samples(v: Vec<f64>, f: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if v.len() < 8 || f.len() != v.len() || h.len() != v.len() {
            return Err(Error::Domain(
                "profile needs at least 8 samples of v, f and h".into(),
            ));
        }
        let dv = v[1] - v[0];
        let st = RowStencil::new(v.len(), dv, 1, 6);
        let df = (0..v.len()).map(|k| st.apply(k, |i| f[i])).collect();
        let dh = (0..v.len()).map(|k| st.apply(k, |i| h[i])).collect();
        Ok(Self { v, f, h, df, dh })
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    fn spacing(&self) -> f64 {
        self.v[1] - self.v[0]
    }
}

fn grid(v_max: f64, dv: f64) -> Result<Vec<f64>> {
    if !(v_max > 0.0 && dv > 0.0 && dv < v_max) {
        return Err(Error::Domain(format!(
            "need 0 < dv < v_max, got dv = {dv}, v_max = {v_max}"
        )));
    }
    let steps = step_count(v_max, dv);
    Ok((0..=steps).map(|k| k as f64 * dv).collect())
}

/// `(f, h) = (-tan(v/2)/2, -(v - tan(v/2))/2)`, the solution with `A = -1/4`.
pub fn closed_form_neg_quarter(v: f64) -> Result<(f64, f64)> {
    if !(v.abs() < PI - 1e-6) {
        return Err(Error::Domain(format!(
            "closed form has a pole at v = ±π (v = {v})"
        )));
    }
    let t = (v / 2.0).tan();
    Ok((-t / 2.0, -(v - t) / 2.0))
}

/// `(f', h')` of the closed form.
pub fn closed_form_neg_quarter_velocity(v: f64) -> Result<(f64, f64)> {
    closed_form_neg_quarter(v)?;
    let t = (v / 2.0).tan();
    Ok((-(1.0 + t * t) / 4.0, (t * t - 1.0) / 4.0))
}

pub fn neg_quarter_profile(v_max: f64, dv: f64) -> Result<RadialProfile> {
    let v = grid(v_max, dv)?;
    let mut p = RadialProfile {
        f: Vec::with_capacity(v.len()),
        h: Vec::with_capacity(v.len()),
        df: Vec::with_capacity(v.len()),
        dh: Vec::with_capacity(v.len()),
        v: Vec::new(),
    };
    for &vk in &v {
        let (f, h) = closed_form_neg_quarter(vk)?;
        let (df, dh) = closed_form_neg_quarter_velocity(vk)?;
        p.f.push(f);
        p.h.push(h);
        p.df.push(df);
        p.dh.push(dh);
    }
    p.v = v;
    Ok(p)
}

/// Right-hand side of `f' = (1/16 + 3/2 f^2 + f^4)^{1/2}`, `h' = 1/4 + f^2`.
fn pos_quarter_rhs(f: f64) -> (f64, f64) {
    let f2 = f * f;
    ((1.0 / 16.0 + 1.5 * f2 + f2 * f2).sqrt(), 0.25 + f2)
}

/// RK4 integration of the first-order system for `A = +1/4` from
/// `f(0) = h(0) = 0`.
pub fn integrate_pos_quarter(v_max: f64, dv: f64) -> Result<RadialProfile> {
    let v = grid(v_max, dv)?;
    let (mut f, mut h) = (0.0f64, 0.0f64);
    let mut p = RadialProfile {
        v: v.clone(),
        f: vec![0.0],
        h: vec![0.0],
        df: vec![0.25],
        dh: vec![0.25],
    };
    for _ in 1..v.len() {
        let (k1f, k1h) = pos_quarter_rhs(f);
        let (k2f, k2h) = pos_quarter_rhs(f + 0.5 * dv * k1f);
        let (k3f, k3h) = pos_quarter_rhs(f + 0.5 * dv * k2f);
        let (k4f, k4h) = pos_quarter_rhs(f + dv * k3f);
        f += dv / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        h += dv / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
        let (df, dh) = pos_quarter_rhs(f);
        p.f.push(f);
        p.h.push(h);
        p.df.push(df);
        p.dh.push(dh);
    }
    Ok(p)
}

/// The ansatz evaluated on an `n`-node u-grid.
pub fn radial_surface(p: &RadialProfile, n: usize) -> Result<SurfacePatch> {
    if !is_valid_grid(n) {
        return Err(Error::InvalidGrid(n));
    }
    let us = nodes(n);
    let (cs, sn): (Vec<f64>, Vec<f64>) = us.iter().map(|u| (u.cos(), u.sin())).unzip();
    let row = |f: f64, h: f64| -> Vec<LVec3> {
        (0..n)
            .map(|j| LVec3::new(cs[j] * f, -sn[j] * f, h))
            .collect()
    };
    let psi = (0..p.len()).map(|k| row(p.f[k], p.h[k])).collect();
    let psi_v = (0..p.len()).map(|k| row(p.df[k], p.dh[k])).collect();
    SurfacePatch::from_rows(p.v.clone(), psi, psi_v)
}

/// Sup over the profile grid of `|Δψ - 2 H(ψ) ψ_u × ψ_v|` on the ansatz,
/// with `f', f'', h', h''` from sixth-order finite differences.
///
/// On the ansatz the residual has horizontal part `(f'' - f - 2Hfh')`
/// times a unit vector and vertical part `h'' - 2Hff'`.
pub fn radial_residual(p: &RadialProfile, h: &PrescribedCurvature) -> Result<f64> {
    if !h.is_rotationally_symmetric() {
        return Err(Error::Domain(
            "radial residual needs a rotationally symmetric H".into(),
        ));
    }
    if p.len() < 8 {
        return Err(Error::Domain("profile too short".into()));
    }
    let dv = p.spacing();
    let d1 = RowStencil::new(p.len(), dv, 1, 6);
    let d2 = RowStencil::new(p.len(), dv, 2, 6);
    let mut sup = 0.0f64;
    for k in 0..p.len() {
        let f = p.f[k];
        let fp = d1.apply(k, |i| p.f[i]);
        let fpp = d2.apply(k, |i| p.f[i]);
        let hp = d1.apply(k, |i| p.h[i]);
        let hpp = d2.apply(k, |i| p.h[i]);
        let hv = h.eval(LVec3::new(f, 0.0, p.h[k]))?;
        let horizontal = fpp - f - 2.0 * hv * f * hp;
        let vertical = hpp - 2.0 * hv * f * fp;
        sup = sup.max(horizontal.hypot(vertical));
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::row_conformality;

    #[test]
    fn closed_form_values() {
        assert_eq!(closed_form_neg_quarter(0.0).unwrap(), (0.0, 0.0));
        let (f, h) = closed_form_neg_quarter(PI / 2.0).unwrap();
        assert!((f + 0.5).abs() < 1e-15);
        assert!((h + (PI / 2.0 - 1.0) / 2.0).abs() < 1e-15);
        assert!(closed_form_neg_quarter(PI).is_err());
        assert!(closed_form_neg_quarter(-PI + 1e-9).is_err());
    }

    #[test]
    fn closed_form_initial_slope() {
        // central difference of the closed form at 0
        let e = 1e-5;
        let fp = (closed_form_neg_quarter(e).unwrap().0 - closed_form_neg_quarter(-e).unwrap().0)
            / (2.0 * e);
        assert!((fp + 0.25).abs() < 1e-9);
        assert_eq!(
            closed_form_neg_quarter_velocity(0.0).unwrap(),
            (-0.25, -0.25)
        );
    }

    #[test]
    fn pos_quarter_profile_shape() {
        let p = integrate_pos_quarter(0.8, 1e-3).unwrap();
        assert_eq!((p.f[0], p.h[0]), (0.0, 0.0));
        assert_eq!(p.df[0], 0.25);
        assert!(p.f.windows(2).all(|w| w[1] > w[0]));
        assert!(p.h.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(p.len(), 801);
    }

    #[test]
    fn opening_direction_follows_cone() {
        let neg = neg_quarter_profile(0.8, 1e-3).unwrap();
        assert!(neg.h.windows(2).all(|w| w[1] < w[0]));
        let pos = integrate_pos_quarter(0.8, 1e-3).unwrap();
        assert!(pos.h.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn radial_surface_layout() {
        let p = neg_quarter_profile(0.8, 1e-3).unwrap();
        let patch = radial_surface(&p, 32).unwrap();
        assert!(patch.psi()[0].iter().all(|q| *q == LVec3::ZERO));
        for row in patch.psi() {
            assert!(row.iter().all(|q| q.z == row[0].z));
        }
        let worst = (0..patch.rows())
            .map(|k| row_conformality(&patch.psi()[k], &patch.psi_v()[k]))
            .fold(0.0, f64::max);
        assert!(worst < 1e-15, "{worst:e}");
    }

    #[test]
    fn residual_oracle() {
        let h = PrescribedCurvature::unit();
        let neg = neg_quarter_profile(0.8, 1e-3).unwrap();
        let r = radial_residual(&neg, &h).unwrap();
        assert!(r <= 1e-8, "closed form residual {r:e}");

        let pos = integrate_pos_quarter(0.8, 1e-3).unwrap();
        let r = radial_residual(&pos, &h).unwrap();
        assert!(r <= 1e-8, "ode residual {r:e}");

        let bumped: Vec<f64> = neg
            .f
            .iter()
            .zip(&neg.v)
            .map(|(f, v)| f + 0.01 * v * v)
            .collect();
        let bad = RadialProfile::from_samples(neg.v.clone(), bumped, neg.h.clone()).unwrap();
        let r = radial_residual(&bad, &h).unwrap();
        assert!(r >= 1e-3, "perturbed residual {r:e}");
    }

    #[test]
    fn residual_needs_symmetric_curvature() {
        let p = neg_quarter_profile(0.2, 1e-2).unwrap();
        let h = PrescribedCurvature::parse("1 + x").unwrap();
        assert!(radial_residual(&p, &h).is_err());
    }
}
