use approx::assert_abs_diff_eq;
use camc::exec::Exec;
use camc::figures::{build_twizzler, Figure, PipelineConfig};
use camc::mesh::{cylinder, helicoid};
use camc::verify::*;
use camc::AnisotropyProfile;
use nalgebra::Vector3;
use std::f64::consts::PI;

fn profiles() -> Vec<AnisotropyProfile> {
    vec![
        AnisotropyProfile::isotropic(),
        AnisotropyProfile::rapini_papoular(0.2),
        AnisotropyProfile::rapini_papoular(-0.3),
        AnisotropyProfile::polynomial(vec![1.0, 0.0, 0.1, 0.0, 0.05]),
    ]
}

/// `-dF/dV` for a uniform dilation of a 256-gon prism band of unit height,
/// lateral energy from the mesh and enclosed volume in closed form.
fn dilation_lambda(profile: &AnisotropyProfile, r: f64) -> f64 {
    let n = 256;
    let d = 1e-4 * r;
    let band = |r: f64| cylinder(r, 1.0, n, 5);
    let volume = |r: f64| 0.5 * n as f64 * r * r * (2.0 * PI / n as f64).sin();
    let de =
        mesh_energy(&band(r + d), profile).unwrap() - mesh_energy(&band(r - d), profile).unwrap();
    -de / (volume(r + d) - volume(r - d))
}

#[test]
fn cylinder_estimates_match_a_global_dilation() {
    for profile in profiles() {
        for r in [0.5, 1.0, 2.0] {
            let want = dilation_lambda(&profile, r);
            let closed = -1.0 / (r * profile.mu2(0.0).unwrap());
            assert!(
                (want / closed - 1.0).abs() < 1e-3,
                "{profile} R={r}: {want} vs {closed}"
            );
            let mesh = cylinder(r, 0.2 * r, 128, 9);
            let rep = verify_mesh(
                Exec::default(),
                &mesh,
                &profile,
                DEFAULT_RELATIVE_AMPLITUDE,
                Some(want),
                |_| true,
            )
            .unwrap();
            assert!(
                rep.within(1e-2, 0.0),
                "{profile} R={r}: {}",
                rep.max_deviation
            );
        }
    }
}

#[test]
fn helicoids_are_critical_for_every_profile() {
    for profile in profiles() {
        let mesh = helicoid(0.6, (0.5, 2.0), (0.0, 2.0 * PI), 40, 160);
        let rep = verify_mesh(
            Exec::default(),
            &mesh,
            &profile,
            DEFAULT_RELATIVE_AMPLITUDE,
            Some(0.0),
            |_| true,
        )
        .unwrap();
        assert!(rep.within(0.0, 2e-2), "{profile}: {}", rep.max_deviation);
    }
}

#[test]
fn estimates_ignore_rotation_and_vertical_translation() {
    let fig = Figure::Fig1;
    let profile = fig.profile();
    let cfg = PipelineConfig {
        s_max: Some(3.0),
        ..Default::default()
    };
    let tw = build_twizzler(Exec::default(), &profile, &fig.params(), &cfg).unwrap();
    let mesh = &tw.mesh.mesh;
    let moved = mesh
        .rotated_about_z(0.7)
        .translated(Vector3::new(0.0, 0.0, 2.5));
    let keep = |v: usize| v.is_multiple_of(7);
    let a = verify_mesh(
        Exec::default(),
        mesh,
        &profile,
        DEFAULT_RELATIVE_AMPLITUDE,
        None,
        keep,
    )
    .unwrap();
    let b = verify_mesh(
        Exec::default(),
        &moved,
        &profile,
        DEFAULT_RELATIVE_AMPLITUDE,
        None,
        keep,
    )
    .unwrap();
    assert_eq!(a.vertices, b.vertices);
    for (x, y) in a.estimates.iter().zip(&b.estimates) {
        assert_abs_diff_eq!(x, y, epsilon = 1e-10);
    }
}

#[test]
fn estimates_do_not_depend_on_the_bump_amplitude() {
    let fig = Figure::Fig2;
    let profile = fig.profile();
    let cfg = PipelineConfig {
        s_max: Some(3.0),
        ..Default::default()
    };
    let tw = build_twizzler(Exec::default(), &profile, &fig.params(), &cfg).unwrap();
    let keep = |v: usize| v.is_multiple_of(5);
    let a = verify_mesh(Exec::default(), &tw.mesh.mesh, &profile, 1e-4, None, keep).unwrap();
    let b = verify_mesh(Exec::default(), &tw.mesh.mesh, &profile, 1e-5, None, keep).unwrap();
    for (x, y) in a.estimates.iter().zip(&b.estimates) {
        assert!((x - y).abs() <= 1e-2 * x.abs().max(1e-2), "{x} vs {y}");
    }
}

#[test]
fn twizzler_estimates_converge_under_refinement() {
    for fig in [Figure::Fig1, Figure::Fig2] {
        let profile = fig.profile();
        let cfg = PipelineConfig::default();
        let coarse = build_twizzler(Exec::default(), &profile, &fig.params(), &cfg)
            .unwrap()
            .verify(Exec::default(), &profile)
            .unwrap();
        let fine = build_twizzler(Exec::default(), &profile, &fig.params(), &cfg.refined())
            .unwrap()
            .verify(Exec::default(), &profile)
            .unwrap();
        assert!(
            coarse.within(1e-2, 2e-2),
            "{}: {}",
            fig.name(),
            coarse.max_deviation
        );
        assert!(
            fine.max_deviation < 0.5 * coarse.max_deviation,
            "{} -> {}",
            coarse.max_deviation,
            fine.max_deviation
        );
    }
}

#[test]
fn energy_scales_quadratically_and_volume_cubically() {
    let profile = AnisotropyProfile::rapini_papoular(-0.3);
    let w = profile.wulff_mesh(33, 64).unwrap().mesh;
    let big = camc::TriMesh {
        vertices: w.vertices.iter().map(|v| v * 1.5).collect(),
        faces: w.faces.clone(),
        normals: None,
    };
    let (e0, e1) = (
        mesh_energy(&w, &profile).unwrap(),
        mesh_energy(&big, &profile).unwrap(),
    );
    assert_abs_diff_eq!(e1 / e0, 2.25, epsilon = 1e-12);
    assert_abs_diff_eq!(mesh_volume(&big) / mesh_volume(&w), 3.375, epsilon = 1e-12);
}

#[test]
fn reports_are_identical_in_both_modes() {
    let profile = AnisotropyProfile::rapini_papoular(0.2);
    let mesh = cylinder(1.0, 0.5, 64, 6);
    let a = verify_mesh(Exec::Sequential, &mesh, &profile, 1e-4, None, |_| true).unwrap();
    let b = verify_mesh(Exec::Parallel, &mesh, &profile, 1e-4, None, |_| true).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}
