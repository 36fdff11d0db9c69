use camc::exec::Exec;
use camc::figures::{run_figure, Figure};
use camc::io::*;
use camc::mesh::icosphere;
use camc::twizzler::{generating_curve, start_state, trace_sled, Branch, SledParams};
use camc::{AnisotropyProfile, Error};
use proptest::prelude::*;
use std::fs;

#[test]
fn obj_round_trip_keeps_nine_digits() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sphere.obj");
    let mesh = icosphere(1.7, 2);
    write_obj(&mesh, &path).unwrap();
    let back = read_obj(&path).unwrap();
    assert_eq!(back.faces, mesh.faces);
    for (a, b) in mesh.vertices.iter().zip(&back.vertices) {
        assert!((a - b).amax() <= 5e-9 * a.amax());
    }
    assert_eq!(
        obj_string(&back).unwrap(),
        fs::read_to_string(&path).unwrap()
    );
}

#[test]
fn obj_reader_accepts_common_variants() {
    let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 -1//1\n";
    let m = parse_obj(text).unwrap();
    assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    assert!(matches!(parse_obj("v 0 0\n"), Err(Error::Parse(_))));
    assert!(matches!(
        parse_obj("v 0 0 0\nf 1 2 3\n"),
        Err(Error::Parse(_))
    ));
}

#[test]
fn sled_csv_round_trips_exactly() {
    let profile = AnisotropyProfile::rapini_papoular(0.2);
    let p = SledParams::new(1.0, 0.5, 1.0).unwrap();
    let start = start_state(&p, &profile, Branch::Plus).unwrap();
    let states = trace_sled(&p, &profile, start, 2.0, 1e-2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sled.csv");
    let table = CurveTable::from_sled(&states);
    write_csv(&table, &path).unwrap();
    let back = CurveTable::parse_csv(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, table);
    assert_eq!(back.names(), ["s", "eta1", "eta2", "phi", "kappa"]);

    let curve = CurveTable::from_curve(&generating_curve(&states).unwrap());
    assert_eq!(curve.rows(), states.len());
    assert_eq!(
        CurveTable::parse_csv(&curve.to_csv().unwrap()).unwrap(),
        curve
    );
}

#[test]
fn csv_rejects_ragged_rows_and_mismatched_columns() {
    assert!(CurveTable::parse_csv("a,b\n1,2\n3\n").is_err());
    assert!(CurveTable::parse_csv("a,b\n1,x\n").is_err());
    assert!(CurveTable::new()
        .with_column("a", vec![1.0, 2.0])
        .unwrap()
        .with_column("b", vec![1.0])
        .is_err());
    assert!(CurveTable::new().to_csv().is_err());
}

#[test]
fn svg_is_well_formed() {
    let pts: Vec<(f64, f64)> = (0..50)
        .map(|k| (k as f64 * 0.1, (k as f64 * 0.1).sin()))
        .collect();
    let svg = svg_polyline(&pts).unwrap();
    assert!(svg.starts_with("<svg "));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches(" points=").count(), 1);
    let points = svg
        .split("points=\"")
        .nth(1)
        .unwrap()
        .split('"')
        .next()
        .unwrap();
    assert_eq!(points.split(' ').count(), 50);
    assert!(svg_polyline(&pts[..1]).is_err());
    assert!(svg_polyline(&[(0.0, 0.0), (f64::NAN, 1.0)]).is_err());
}

#[test]
fn figure_artifacts_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_figure(Exec::Parallel, Figure::Fig2, a.path()).unwrap();
    run_figure(Exec::Sequential, Figure::Fig2, b.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 7, "{names:?}");
    for name in names {
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}

proptest! {
    #[test]
    fn format_sig_reads_back_within_the_digits(x in -1e20f64..1e20, digits in 1usize..=17) {
        let s = format_sig(x, digits);
        let y: f64 = s.parse().unwrap();
        prop_assert!((x - y).abs() <= 0.5 * 10f64.powi(1 - digits as i32) * x.abs() * (1.0 + 1e-12) + f64::MIN_POSITIVE);
    }

    #[test]
    fn full_precision_is_lossless(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(format_sig(x, 17).parse::<f64>().unwrap(), x);
    }
}
