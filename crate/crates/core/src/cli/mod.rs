//! Command-line pipeline: solve, analyze, reconstruct, check, export.

pub mod config;
pub mod io;
pub mod report;

use std::path::Path;

use num_complex::Complex64;

use crate::analysis::{
    boundary_degree, extract_null_curve, fundamental_forms_curvature, gauss_map,
    gauss_pde_residual, gaussian_curvature, gz_identity_check, max_equivariance_defect,
    normal_growth_defect, tangent_norms, weierstrass_check, Curvature, LimitNullCurve,
};
use crate::error::{Error, Result};
use crate::graph::{
    beltrami_check_masked, cone_ratio, gradient_rows, hessian_sign, maineq_residual_masked,
    reconstruct_with, GraphGrid,
};
use crate::lorentz::LVec3;
use crate::radial::{integrate_pos_quarter, neg_quarter_profile, RadialProfile};
use crate::solver::{march, MarchStatus, NullCurveSpec, SurfacePatch, VelocitySource};
use crate::spectral::nodes;

pub use config::{parse_config, parse_entries, Entry, HeightSpec, Mode, RunConfig, Tolerances};
pub use report::{DiagnosticsReport, Limit};

/// Levels at which curvature growth towards the singularity is checked.
pub const CURVATURE_LEVELS: [f64; 4] = [0.3, 0.2, 0.1, 0.05];

/// Run the pipeline for `cfg`, writing every requested artifact. The
/// report itself is returned, not written.
pub fn run(cfg: &RunConfig) -> DiagnosticsReport {
    let mut rep = DiagnosticsReport::default();
    rep.meta("program", concat!("conelike ", env!("CARGO_PKG_VERSION")));
    for (k, v) in cfg.echo() {
        rep.meta(&k, v);
    }
    echo_tolerances(&mut rep, &cfg.tol);
    let outcome = match cfg.mode {
        Mode::Solve => run_solve(cfg, &mut rep),
        Mode::Radial => run_radial(cfg, &mut rep),
        Mode::Extract => run_extract(cfg, &mut rep),
        Mode::Check => run_check(cfg, &mut rep),
        Mode::Export => run_export(cfg, &mut rep),
    };
    if let Err(e) = outcome {
        rep.error = Some(e);
    }
    rep
}

/// Run, then write the report to its configured path or return it as
/// text. Returns the exit code and the rendered report.
pub fn execute(cfg: &RunConfig) -> (i32, String) {
    let mut rep = run(cfg);
    let mut text = rep.render();
    if let Some(path) = &cfg.outputs.report {
        if let Err(e) = io::write_text(path, &text) {
            rep.error = Some(e);
            text = rep.render();
        }
    }
    (rep.exit_code(), text)
}

fn echo_tolerances(rep: &mut DiagnosticsReport, t: &Tolerances) {
    let pairs = [
        ("conformality", t.conformality),
        ("closed_form", t.closed_form),
        ("radial", t.radial),
        ("round_trip", t.round_trip),
        ("gz", t.gz),
        ("normal_growth", t.normal_growth),
        ("equivariance", t.equivariance),
        ("gauss_pde", t.gauss_pde),
        ("weierstrass", t.weierstrass),
        ("maineq", t.maineq),
        ("beltrami", t.beltrami),
        ("cone", t.cone),
        ("curvature", t.curvature),
        ("hessian", t.hessian),
    ];
    for (k, v) in pairs {
        rep.meta(&format!("config.tol_{k}"), format!("{v:e}"));
    }
    rep.meta("config.cone_v", t.cone_v);
}

fn height_spec(cfg: &RunConfig) -> Result<(NullCurveSpec, bool)> {
    let a = cfg
        .height
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("no height function given".into()))?;
    Ok((a.to_spec(cfg.solver.n)?, a.is_constant()))
}

fn solve_patch(
    cfg: &RunConfig,
    rep: &mut DiagnosticsReport,
) -> Result<(SurfacePatch, NullCurveSpec, bool)> {
    let (spec, constant) = height_spec(cfg)?;
    rep.meta("solver.cone", spec.cone());
    let patch = march(&spec, &cfg.h, &cfg.solver)?;
    solver_meta(rep, &patch);
    rep.holds("solver.completed", patch.status == MarchStatus::Completed);
    Ok((patch, spec, constant))
}

fn solver_meta(rep: &mut DiagnosticsReport, patch: &SurfacePatch) {
    rep.meta("solver.status", &patch.status);
    rep.meta("solver.v_ok", patch.v_ok());
    rep.meta("solver.rows", patch.rows());
    rep.meta("solver.n", patch.n());
    rep.meta(
        "solver.velocity",
        match patch.velocity_source() {
            VelocitySource::Exact => "exact",
            VelocitySource::Estimated => "estimated",
        },
    );
    let h = &patch.residual_history;
    if !h.is_empty() {
        rep.meta(
            "solver.residual_max",
            format!("{:e}", h.iter().cloned().fold(0.0, f64::max)),
        );
        rep.meta("solver.residual_final", format!("{:e}", h[h.len() - 1]));
        let joined: Vec<String> = h.iter().map(|r| format!("{r:e}")).collect();
        rep.meta("solver.residual_history", joined.join(","));
    }
}

fn write_surface_outputs(cfg: &RunConfig, patch: &SurfacePatch) -> Result<()> {
    if let Some(p) = &cfg.outputs.surface {
        io::write_text(p, &io::surface_csv(patch))?;
    }
    if let Some(p) = &cfg.outputs.obj {
        io::write_text(p, &io::export_obj(patch))?;
    }
    Ok(())
}

fn write_graph(path: Option<&Path>, gg: Option<&GraphGrid>) -> Result<()> {
    match (path, gg) {
        (Some(p), Some(gg)) => io::write_text(p, &io::graph_csv(gg)),
        (Some(p), None) => Err(Error::Reconstruction(format!(
            "graph was not reconstructed, {} not written",
            p.display()
        ))),
        _ => Ok(()),
    }
}

fn run_solve(cfg: &RunConfig, rep: &mut DiagnosticsReport) -> Result<()> {
    let (patch, spec, constant) = solve_patch(cfg, rep)?;
    write_surface_outputs(cfg, &patch)?;
    let known = Known {
        height: Some(&spec),
        constant,
    };
    let gg = surface_checks(cfg, rep, &patch, &known);
    write_graph(cfg.outputs.graph.as_deref(), gg.as_ref())?;
    write_curve(cfg, &patch)
}

fn run_radial(cfg: &RunConfig, rep: &mut DiagnosticsReport) -> Result<()> {
    let a = cfg.height.as_ref().map_or(0.0, |a| a.a0);
    let (v_max, dv) = (cfg.solver.v_max, cfg.solver.dv);
    let (profile, source) = if a < 0.0 {
        (neg_quarter_profile(v_max, dv)?, "closed form")
    } else {
        (integrate_pos_quarter(v_max, dv)?, "ode")
    };
    rep.meta("radial.profile", source);
    if let Some(p) = &cfg.outputs.profile {
        io::write_text(p, &io::profile_csv(&profile))?;
    }
    rep.result(
        "radial.residual",
        crate::radial::radial_residual(&profile, &cfg.h),
        Limit::AtMost(cfg.tol.radial),
    );
    let (patch, spec, constant) = solve_patch(cfg, rep)?;
    write_surface_outputs(cfg, &patch)?;
    rep.result(
        "radial.march_vs_profile",
        profile_distance(&patch, &profile),
        Limit::AtMost(cfg.tol.closed_form),
    );
    let known = Known {
        height: Some(&spec),
        constant,
    };
    let gg = surface_checks(cfg, rep, &patch, &known);
    write_graph(cfg.outputs.graph.as_deref(), gg.as_ref())?;
    write_curve(cfg, &patch)
}

fn run_check(cfg: &RunConfig, rep: &mut DiagnosticsReport) -> Result<()> {
    let patch = load(cfg, rep)?;
    let known = Known {
        height: None,
        constant: false,
    };
    let gg = surface_checks(cfg, rep, &patch, &known);
    write_surface_outputs(cfg, &patch)?;
    write_graph(cfg.outputs.graph.as_deref(), gg.as_ref())?;
    write_curve(cfg, &patch)
}

fn run_extract(cfg: &RunConfig, rep: &mut DiagnosticsReport) -> Result<()> {
    let patch = load(cfg, rep)?;
    null_curve_checks(rep, &patch.psi_v()[0]);
    match extract_null_curve(&patch) {
        Ok(c) => {
            rep.holds("null_curve.canonical", true);
            height_meta(rep, &c);
            if let Some(p) = &cfg.outputs.curve {
                io::write_text(p, &io::curve_csv(&c))?;
            }
        }
        Err(e) => rep.failed("null_curve.canonical", e),
    }
    Ok(())
}

fn run_export(cfg: &RunConfig, rep: &mut DiagnosticsReport) -> Result<()> {
    let patch = if cfg.input.is_some() {
        load(cfg, rep)?
    } else {
        let (spec, _) = height_spec(cfg)?;
        let patch = march(&spec, &cfg.h, &cfg.solver)?;
        solver_meta(rep, &patch);
        patch
    };
    write_surface_outputs(cfg, &patch)?;
    if cfg.outputs.graph.is_some() {
        let gg = reconstruct_with(&patch, cfg.injectivity)?;
        write_graph(cfg.outputs.graph.as_deref(), Some(&gg))?;
    }
    write_curve(cfg, &patch)
}

fn load(cfg: &RunConfig, rep: &mut DiagnosticsReport) -> Result<SurfacePatch> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("no input file".into()))?;
    let patch = io::read_surface(path)?;
    solver_meta(rep, &patch);
    Ok(patch)
}

fn write_curve(cfg: &RunConfig, patch: &SurfacePatch) -> Result<()> {
    match (&cfg.outputs.curve, cfg.mode) {
        (Some(p), m) if m != Mode::Extract => {
            io::write_text(p, &io::curve_csv(&extract_null_curve(patch)?))
        }
        _ => Ok(()),
    }
}

/// Largest distance between the patch and the rotational ansatz built
/// from `profile`, over the rows both cover.
pub fn profile_distance(patch: &SurfacePatch, profile: &RadialProfile) -> Result<f64> {
    let rows = patch.rows().min(profile.len());
    let us = nodes(patch.n());
    let mut sup = 0.0f64;
    for k in 0..rows {
        if (patch.v_levels()[k] - profile.v[k]).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "profile and patch levels differ at row {k}"
            )));
        }
        let (f, h) = (profile.f[k], profile.h[k]);
        for (j, u) in us.iter().enumerate() {
            let want = LVec3::new(f * u.cos(), -f * u.sin(), h);
            sup = sup.max((patch.psi()[k][j] - want).max_abs());
        }
    }
    Ok(sup)
}

/// What the run knows about the height function independently of the patch.
struct Known<'a> {
    height: Option<&'a NullCurveSpec>,
    constant: bool,
}

/// Boundary regularity: `|b| > 0`, `<b', b'> > 0`, one cone, degree one.
fn null_curve_checks(rep: &mut DiagnosticsReport, b: &[LVec3]) {
    let min_b = b
        .iter()
        .map(|x| x.euclidean_norm())
        .fold(f64::INFINITY, f64::min);
    rep.value("null_curve.nonvanishing", min_b, Limit::Above(0.0));
    let speed = tangent_norms(b).into_iter().fold(f64::INFINITY, f64::min);
    rep.value("null_curve.speed", speed, Limit::Above(0.0));
    let one_cone = b.iter().all(|x| x.z > 0.0) || b.iter().all(|x| x.z < 0.0);
    rep.holds("null_curve.one_cone", one_cone);
    if one_cone {
        let trace: Vec<Complex64> = b.iter().map(|x| Complex64::new(x.x, -x.y) / x.z).collect();
        rep.value(
            "degree",
            boundary_degree(&trace) as f64,
            Limit::Exactly(1.0),
        );
    } else {
        rep.skip("degree", "boundary trace undefined off a single cone");
    }
}

fn height_meta(rep: &mut DiagnosticsReport, c: &LimitNullCurve) {
    let a = c.height.re();
    let n = a.len() as f64;
    rep.meta("extract.cone", c.cone);
    rep.meta(
        "extract.A_min",
        format!("{:e}", a.iter().cloned().fold(f64::INFINITY, f64::min)),
    );
    rep.meta(
        "extract.A_max",
        format!("{:e}", a.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
    );
    rep.meta("extract.A_mean", format!("{:e}", a.iter().sum::<f64>() / n));
    let us = nodes(a.len());
    let coeff = |k: f64, f: fn(f64) -> f64| {
        2.0 / n * a.iter().zip(&us).map(|(x, u)| x * f(k * u)).sum::<f64>()
    };
    let cos: Vec<String> = (1..=4)
        .map(|k| format!("{:e}", coeff(k as f64, f64::cos)))
        .collect();
    let sin: Vec<String> = (1..=4)
        .map(|k| format!("{:e}", coeff(k as f64, f64::sin)))
        .collect();
    rep.meta("extract.A_cos", cos.join(","));
    rep.meta("extract.A_sin", sin.join(","));
}

/// Every surface-level check. Returns the reconstructed graph when the
/// reconstruction succeeded.
fn surface_checks(
    cfg: &RunConfig,
    rep: &mut DiagnosticsReport,
    patch: &SurfacePatch,
    known: &Known,
) -> Option<GraphGrid> {
    let t = &cfg.tol;
    rep.value(
        "conformality",
        patch.max_conformality(),
        Limit::AtMost(t.conformality),
    );

    let b = &patch.psi_v()[0];
    null_curve_checks(rep, b);
    match extract_null_curve(patch) {
        Ok(c) => {
            rep.holds("null_curve.canonical", true);
            height_meta(rep, &c);
            match known.height {
                Some(spec) => rep.value(
                    "round_trip",
                    c.height.sup_distance(spec.height()),
                    Limit::AtMost(t.round_trip),
                ),
                None => rep.skip("round_trip", "no input height function"),
            }
        }
        Err(e) => {
            rep.failed("null_curve.canonical", e);
            rep.skip("round_trip", "no canonical curve");
        }
    }
    rep.result(
        "normal_growth",
        normal_growth_defect(patch),
        Limit::AtMost(t.normal_growth),
    );

    if known.constant && cfg.h.is_rotationally_symmetric() {
        rep.value(
            "equivariance",
            max_equivariance_defect(patch),
            Limit::AtMost(t.equivariance),
        );
    } else {
        rep.skip(
            "equivariance",
            "needs constant A and rotationally symmetric H",
        );
    }

    match gauss_map(patch) {
        Ok(g) => {
            rep.meta("gauss.masked", g.masked_count());
            rep.result(
                "gz_identity",
                gz_identity_check(patch, &g),
                Limit::AtMost(t.gz),
            );
            rep.result(
                "gauss_pde",
                gauss_pde_residual(&g, &cfg.h, patch),
                Limit::AtMost(t.gauss_pde),
            );
            rep.result(
                "weierstrass",
                weierstrass_check(patch, &g, &cfg.h),
                Limit::AtMost(t.weierstrass),
            );
            rep.value("gauss_modulus", g.max_interior_modulus(), Limit::Below(1.0));
            curvature_checks(cfg, rep, patch, &g);
        }
        Err(e) => {
            for name in [
                "gz_identity",
                "gauss_pde",
                "weierstrass",
                "gauss_modulus",
                "curvature.growth",
                "curvature.oracle",
            ] {
                rep.failed(name, e.clone());
            }
        }
    }

    graph_checks(cfg, rep, patch, known)
}

fn curvature_checks(
    cfg: &RunConfig,
    rep: &mut DiagnosticsReport,
    patch: &SurfacePatch,
    g: &crate::analysis::GaussField,
) {
    let kf = match gaussian_curvature(g, &cfg.h, patch) {
        Ok(k) => k,
        Err(e) => {
            rep.failed("curvature.growth", e.clone());
            rep.failed("curvature.oracle", e);
            return;
        }
    };
    let levels: Vec<f64> = CURVATURE_LEVELS
        .iter()
        .cloned()
        .filter(|v| *v <= patch.v_ok() && patch.row_near(*v) > 0)
        .collect();
    // smallest K over the row; blown-up nodes count as infinite
    let row_min = |k: usize| {
        kf[k]
            .iter()
            .map(|c| c.value().unwrap_or(f64::INFINITY))
            .fold(f64::INFINITY, f64::min)
    };
    if levels.len() < 2 {
        rep.skip("curvature.growth", "patch too short");
    } else {
        let ks: Vec<f64> = levels.iter().map(|v| row_min(patch.row_near(*v))).collect();
        rep.meta(
            "curvature.levels",
            levels
                .iter()
                .zip(&ks)
                .map(|(v, k)| format!("{v}:{k:e}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        let growing = ks.iter().all(|k| *k > 0.0) && ks.windows(2).all(|w| w[1] > w[0]);
        rep.holds("curvature.growth", growing);
    }

    let v = CURVATURE_LEVELS[0];
    if v > patch.v_ok() || patch.velocity_source() == VelocitySource::Estimated {
        rep.skip("curvature.oracle", "needs exact ψ_v up to v = 0.3");
        return;
    }
    let k = patch.row_near(v);
    let rel = fundamental_forms_curvature(patch, k).map(|oracle| {
        oracle
            .iter()
            .zip(&kf[k])
            .map(|(o, c)| match c {
                Curvature::Finite(x) => ((x - o) / o).abs(),
                Curvature::BlowUp => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    });
    rep.result("curvature.oracle", rel, Limit::AtMost(cfg.tol.curvature));
}

fn graph_checks(
    cfg: &RunConfig,
    rep: &mut DiagnosticsReport,
    patch: &SurfacePatch,
    known: &Known,
) -> Option<GraphGrid> {
    let t = &cfg.tol;
    let names = [
        "maineq",
        "beltrami",
        "hessian_sign",
        "cone_ratio",
        "cone_monotone",
        "gradient_map",
    ];
    let gg = match reconstruct_with(patch, cfg.injectivity) {
        Ok(gg) => {
            rep.holds("reconstruction", true);
            gg
        }
        Err(e) => {
            rep.failed("reconstruction", e);
            for name in names {
                rep.skip(name, "no graph");
            }
            return None;
        }
    };
    rep.result(
        "maineq",
        maineq_residual_masked(&gg, &cfg.h, t.sigma_mask),
        Limit::AtMost(t.maineq),
    );
    rep.result(
        "beltrami",
        beltrami_check_masked(patch, &gg, t.sigma_mask),
        Limit::AtMost(t.beltrami),
    );
    let hs = hessian_sign(&gg, t.hessian);
    rep.meta(
        "graph.hessian",
        format!(
            "+{} -{} 0:{} min|det|={:e}",
            hs.positive, hs.negative, hs.zero, hs.min_abs
        ),
    );
    rep.holds("hessian_sign", hs.constant_sign());

    let dev = cone_ratio(&gg);
    let k = gg.row_near(t.cone_v);
    rep.value("cone_ratio", dev[k], Limit::AtMost(t.cone));
    if known.constant && cfg.h.is_rotationally_symmetric() {
        rep.holds("cone_monotone", dev.windows(2).all(|w| w[1] > w[0]));
    } else {
        rep.skip(
            "cone_monotone",
            "needs constant A and rotationally symmetric H",
        );
    }

    let grad = gradient_rows(&gg);
    let winding = grad[0].winding;
    let proper = winding.abs() == 1
        && grad
            .iter()
            .all(|r| r.simple && r.winding == winding && r.max_norm < 1.0);
    rep.holds("gradient_map", proper);
    Some(gg)
}
