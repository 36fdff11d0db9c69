use approx::assert_abs_diff_eq;
use camc::exec::Exec;
use camc::figures::{build_twizzler, PipelineConfig};
use camc::graph::first_integral_residual;
use camc::twizzler::*;
use camc::verify::cotan_curvatures;
use camc::{AnisotropyProfile, Error};
use proptest::prelude::*;

fn iso() -> AnisotropyProfile {
    AnisotropyProfile::isotropic()
}

fn params() -> SledParams {
    SledParams::new(1.0, 0.5, 1.0).unwrap()
}

fn trace(profile: &AnisotropyProfile, p: &SledParams, s_max: f64, step: f64) -> Vec<SledState> {
    let start = start_state(p, profile, Branch::Plus).unwrap();
    trace_sled(p, profile, start, s_max, step).unwrap()
}

/// Turning rate implied by keeping `F` constant along the motion
/// `eta1' = -1 - kappa eta2`, `eta2' = kappa eta1`, with the partials of
/// `F` taken by central differences.
fn implicit_kappa(p: &SledParams, profile: &AnisotropyProfile, e1: f64, e2: f64) -> Option<f64> {
    let h = 1e-5;
    let f = |a: f64, b: f64| eq_h_residual(p, profile, a, b).unwrap();
    let f1 = (f(e1 + h, e2) - f(e1 - h, e2)) / (2.0 * h);
    let f2 = (f(e1, e2 + h) - f(e1, e2 - h)) / (2.0 * h);
    let den = f2 * e1 - f1 * e2;
    (den.abs() > 1e-3).then(|| f1 / den)
}

#[test]
fn turning_rate_keeps_the_trace_on_the_level_set() {
    for profile in [
        iso(),
        AnisotropyProfile::rapini_papoular(0.2),
        AnisotropyProfile::rapini_papoular(-0.3),
    ] {
        let p = params();
        let states = trace(&profile, &p, 6.0, 1e-2);
        let mut checked = 0;
        for st in states.iter().step_by(37) {
            let Some(want) = implicit_kappa(&p, &profile, st.eta1, st.eta2) else {
                continue;
            };
            checked += 1;
            assert_abs_diff_eq!(st.kappa, want, epsilon = 1e-6 * (1.0 + want.abs()));
        }
        assert!(checked > 10);
    }
}

#[test]
fn isotropic_trace_stays_on_the_sled() {
    let p = params();
    let states = trace(&iso(), &p, 20.0, 1e-3);
    for st in &states {
        assert!(eq_h_residual(&p, &iso(), st.eta1, st.eta2).unwrap().abs() < 1e-9);
    }
}

#[test]
fn generating_curve_is_unit_speed_and_reproduces_the_sled() {
    let profile = AnisotropyProfile::rapini_papoular(0.2);
    let p = params();
    let h = 1e-3;
    let states = trace(&profile, &p, 8.0, h);
    let curve = generating_curve(&states).unwrap();
    for (st, c) in states.iter().zip(&curve.samples) {
        let (e1, e2) = c.eta();
        assert_abs_diff_eq!(e1, st.eta1, epsilon = 1e-12);
        assert_abs_diff_eq!(e2, st.eta2, epsilon = 1e-12);
    }
    for w in curve.samples.windows(2) {
        let chord = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
        assert_abs_diff_eq!(chord, w[1].s - w[0].s, epsilon = 1e-6 * h);
    }
}

#[test]
fn tangent_angle_integrates_minus_kappa() {
    let profile = AnisotropyProfile::rapini_papoular(-0.3);
    let p = params();
    let states = trace(&profile, &p, 5.0, 1e-3);
    for w in states.windows(3).step_by(101) {
        let dphi = (w[2].phi - w[0].phi) / (w[2].s - w[0].s);
        assert_abs_diff_eq!(dphi, -w[1].kappa, epsilon = 1e-5);
    }
}

#[test]
fn isotropic_loop_closes() {
    let p = params();
    let states = trace(&iso(), &p, 30.0, 1e-3);
    let lp = find_loop(&p, &iso(), &states)
        .unwrap()
        .expect("isotropic sled is a closed loop");
    assert!(lp.period > 0.0);
    assert!(lp.closure < 1e-8, "closure {}", lp.closure);
}

#[test]
fn cylinder_fixed_point_traces_a_circle() {
    let profile = AnisotropyProfile::rapini_papoular(0.2);
    let r = 1.3;
    let (l, a) = cylinder_params(&profile, r).unwrap();
    let p = SledParams::new(l, a, 0.7).unwrap();
    assert_abs_diff_eq!(
        l * a * profile.mu2(0.0).unwrap().powi(2),
        1.0,
        epsilon = 1e-14
    );
    let d = discriminant(&p, &profile, 0.0).unwrap();
    assert!(d.abs() < 1e-12);
    let eta2 = solve_eta2(&p, &profile, 0.0, Branch::Plus).unwrap();
    assert_abs_diff_eq!(eta2.abs(), r, epsilon = 1e-6);
}

#[test]
fn sled_and_graph_share_the_first_integral() {
    // z = g(r) - theta / omega with g_r = -eta2 / (omega r eta1) and C = A / 2,
    // where the graph normal points up (omega eta1 > 0).
    for profile in [
        iso(),
        AnisotropyProfile::rapini_papoular(0.2),
        AnisotropyProfile::rapini_papoular(-0.3),
    ] {
        let p = params();
        let mut checked = 0;
        for st in trace(&profile, &p, 8.0, 1e-3).iter().step_by(50) {
            if p.omega * st.eta1 < 1e-3 {
                continue;
            }
            let r = st.eta1.hypot(st.eta2);
            let g_r = -st.eta2 / (p.omega * r * st.eta1);
            let res = first_integral_residual(&profile, p.pitch(), p.lambda_amc, 0.5 * p.a, r, g_r)
                .unwrap();
            assert!(
                res.abs() < 1e-9,
                "{profile}: residual {res:e} at s = {}",
                st.s
            );
            checked += 1;
        }
        assert!(checked > 10);
    }
}

#[test]
fn sweep_normals_converge_to_the_analytic_ones() {
    let profile = AnisotropyProfile::rapini_papoular(0.2);
    let p = params();
    let coarse = PipelineConfig {
        s_max: Some(4.0),
        ..Default::default()
    };
    let a = build_twizzler(Exec::Sequential, &profile, &p, &coarse).unwrap();
    let b = build_twizzler(Exec::Sequential, &profile, &p, &coarse.refined()).unwrap();
    let (da, db) = (a.mesh.normal_deviation, b.mesh.normal_deviation);
    assert!(da < 0.05, "{da}");
    assert!(db < 0.4 * da, "{da} -> {db}");
    let normals = a.mesh.mesh.normals.as_ref().unwrap();
    for n in normals {
        assert_abs_diff_eq!(n.norm(), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn isotropic_twizzler_has_constant_mean_curvature() {
    let p = params();
    let tw = build_twizzler(Exec::default(), &iso(), &p, &PipelineConfig::default()).unwrap();
    assert!(tw.max_h_residual < 1e-9);
    let hs = cotan_curvatures(Exec::default(), &tw.mesh.mesh).unwrap();
    let worst = hs.iter().map(|(_, h)| (h - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-2, "max deviation {worst}");
}

#[test]
fn singular_turning_is_an_error_not_a_panic() {
    let profile = AnisotropyProfile::polynomial(vec![1.0, 0.0, -0.6]);
    let p = SledParams::new(0.2, -1.5, 1.0).unwrap();
    let start = start_state(&p, &profile, Branch::Minus).unwrap();
    match trace_sled(&p, &profile, start, 20.0, 1e-2) {
        Err(Error::SingularTurning { s }) => assert!(s > 0.0 && s < 20.0),
        other => panic!("expected a singular turning point, got {other:?}"),
    }
}

#[test]
fn sweep_is_identical_in_both_modes() {
    let profile = AnisotropyProfile::rapini_papoular(-0.3);
    let p = params();
    let curve = generating_curve(&trace(&profile, &p, 3.0, 1e-2)).unwrap();
    let a = sweep_with(Exec::Sequential, &curve, &p, 50, 1.0, 0.25).unwrap();
    let b = sweep_with(Exec::Parallel, &curve, &p, 50, 1.0, 0.25).unwrap();
    assert_eq!(a.mesh.vertices, b.mesh.vertices);
    assert_eq!(a.mesh.normals, b.mesh.normals);
    assert_eq!(a.normal_deviation, b.normal_deviation);
}

proptest! {
    #[test]
    fn solved_roots_lie_on_the_sled(
        e in -0.3f64..0.3,
        l in -2.0f64..2.0,
        a in -2.0f64..2.0,
        w in 0.2f64..3.0,
        eta1 in -2.0f64..2.0,
        plus in any::<bool>(),
    ) {
        let profile = AnisotropyProfile::rapini_papoular(e);
        let p = SledParams::new(l, a, w).unwrap();
        let branch = if plus { Branch::Plus } else { Branch::Minus };
        match solve_eta2(&p, &profile, eta1, branch) {
            Ok(eta2) => {
                let f = eq_h_residual(&p, &profile, eta1, eta2).unwrap();
                let scale = 1.0 + l.abs() * (eta1 * eta1 + eta2 * eta2) + a.abs() + eta2.abs();
                prop_assert!(f.abs() < 1e-12 * scale, "F = {f:e}");
            }
            Err(Error::NoRealRoot { discriminant, .. }) => prop_assert!(discriminant < 0.0),
            Err(Error::DegenerateEquation) => prop_assert!(l == 0.0),
            Err(other) => prop_assert!(false, "unexpected {other:?}"),
        }
    }

    #[test]
    fn discriminant_sign_matches_solvability(
        e in -0.3f64..0.3,
        l in 0.1f64..2.0,
        a in -2.0f64..2.0,
        eta1 in -3.0f64..3.0,
    ) {
        let profile = AnisotropyProfile::rapini_papoular(e);
        let p = SledParams::new(l, a, 1.0).unwrap();
        let d = discriminant(&p, &profile, eta1).unwrap();
        let solved = solve_eta2(&p, &profile, eta1, Branch::Plus).is_ok();
        prop_assert_eq!(d >= 0.0, solved);
    }
}
