use std::f64::consts::TAU;

use conelike::analysis::{boundary_degree, canonical_phase, LimitNullCurve};
use conelike::cli::{io, parse_config};
use conelike::graph::GraphSample;
use conelike::solver::{row_u_derivatives, MarchStatus};
use conelike::spectral::nodes;
use conelike::{
    march, Cone, LVec3, NullCurveSpec, PeriodicField, PrescribedCurvature, SolverConfig,
};
use num_complex::Complex64;
use proptest::prelude::*;

/// `(a0, a1, b1)` with `|a0| > |a1| + |b1|`, so the height never vanishes.
fn height() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.2f64..0.4, -0.08f64..0.08, -0.08f64..0.08, any::<bool>())
        .prop_map(|(a0, a1, b1, neg)| (if neg { -a0 } else { a0 }, a1, b1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn canonical_phase_undoes_reparametrization(
        (a0, a1, b1) in height(),
        eps in -0.25f64..0.25,
        theta in 0.0f64..TAU,
    ) {
        let n = 64;
        let a = |u: f64| a0 + a1 * u.cos() + b1 * u.sin();
        // b̃(u) = σ'(u) b(σ(u)) with σ(u) = u + θ + ε sin u
        let raw: Vec<LVec3> = nodes(n)
            .into_iter()
            .map(|u| {
                let s = u + theta + eps * u.sin();
                LVec3::new(s.cos(), -s.sin(), 1.0) * (a(s) * (1.0 + eps * u.cos()))
            })
            .collect();
        let before = LimitNullCurve::from_samples(raw).unwrap();
        let c = canonical_phase(&before).unwrap();
        prop_assert_eq!(c.cone, before.cone);
        prop_assert_eq!(c.cone, if a0 < 0.0 { Cone::Lower } else { Cone::Upper });
        for (g, u) in c.trace().iter().zip(nodes(n)) {
            prop_assert!((g - Complex64::from_polar(1.0, u)).norm() <= 1e-8);
        }
        prop_assert_eq!(boundary_degree(&c.trace()), 1);
        let want = PeriodicField::from_fn_real(n, a).unwrap();
        prop_assert!(c.height.sup_distance(&want) <= 1e-5, "{:e}", c.height.sup_distance(&want));
    }

    #[test]
    fn beltrami_coefficients_satisfy_ac_minus_b2(p in -1.0f64..1.0, q in -1.0f64..1.0) {
        let s = GraphSample { p, q, ..GraphSample::default() };
        let c = s.coeffs();
        prop_assert!((c.a * c.c - c.b * c.b - c.sigma).abs() <= 1e-15);
        prop_assert_eq!(c.sigma > 0.0, p * p + q * q < 1.0);
    }

    #[test]
    fn config_values_survive_parsing(
        log_n in 3u32..8,
        dv in 1e-4f64..1e-2,
        v_max in 0.1f64..2.0,
        a in 0.05f64..1.0,
    ) {
        let n = 1usize << log_n;
        let text = format!("# generated\nmode=solve\n\nA={a}\nn={n}\ndv={dv}\nv_max={v_max}\n");
        let c = parse_config(&text).unwrap();
        prop_assert_eq!(c.solver.n, n);
        prop_assert_eq!(c.solver.dv, dv);
        prop_assert_eq!(c.solver.v_max, v_max);
        prop_assert_eq!(c.height.unwrap().a0, a);
        let odd = format!("{text}n={}\n", n + 1);
        prop_assert!(parse_config(&odd).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn marched_patches_are_null_at_the_boundary_and_spacelike_inside((a0, a1, b1) in height()) {
        let n = 16;
        let cfg = SolverConfig { n, v_max: 0.05, ..SolverConfig::default() };
        let spec = NullCurveSpec::from_series(n, a0, &[a1], &[b1]).unwrap();
        let p = march(&spec, &PrescribedCurvature::unit(), &cfg).unwrap();
        prop_assert_eq!(&p.status, &MarchStatus::Completed);
        prop_assert!(p.psi_v()[0].iter().all(|b| b.norm_sq().abs() <= 1e-14));
        for row in &p.psi()[1..] {
            let (pu, _) = row_u_derivatives(row);
            prop_assert!(pu.iter().all(|t| t.norm_sq() > 0.0));
        }
        prop_assert!(p.residual_history.iter().all(|r| *r <= cfg.residual_budget));

        // exported bytes parse back to the same positions
        let text = io::surface_csv(&p);
        let back = io::parse_surface_csv(&text, "mem").unwrap();
        prop_assert_eq!(back.psi(), p.psi());
        prop_assert_eq!(io::surface_csv(&back), text);
    }
}
