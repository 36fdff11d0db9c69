//! Plain-text exporters: OBJ meshes, CSV tables and single-polyline SVG
//! plots. Output depends only on the input values, so identical input
//! gives identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{invalid, Error, Result};
use crate::mesh::TriMesh;
use crate::twizzler::{GeneratingCurve, SledState};

/// `x` rounded to `digits` significant digits, printed in the shortest
/// form that reads back to the rounded value.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-4..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

pub fn obj_string(mesh: &TriMesh) -> Result<String> {
    mesh.validate()?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# camc mesh: {} vertices, {} faces",
        mesh.vertices.len(),
        mesh.faces.len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(
            out,
            "v {} {} {}",
            format_sig(v.x, 9),
            format_sig(v.y, 9),
            format_sig(v.z, 9)
        );
    }
    for [a, b, c] in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    Ok(out)
}

/// ASCII OBJ with 9 significant digits and one-based faces.
pub fn write_obj(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, obj_string(mesh)?)?;
    Ok(())
}

/// Reads `v` and `f` records (`f a/b/c` forms allowed, polygons fanned).
pub fn read_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    parse_obj(&fs::read_to_string(path)?)
}

pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut mesh = TriMesh::default();
    for (lineno, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
        match it.next() {
            Some("v") => {
                let xyz: Vec<f64> = it
                    .take(3)
                    .map(|t| t.parse::<f64>().map_err(|_| bad("bad vertex coordinate")))
                    .collect::<Result<_>>()?;
                if xyz.len() != 3 {
                    return Err(bad("vertex needs three coordinates"));
                }
                mesh.vertices.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let n = mesh.vertices.len() as i64;
                let idx: Vec<usize> = it
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let i: i64 = head.parse().map_err(|_| bad("bad face index"))?;
                        let k = if i < 0 { n + i } else { i - 1 };
                        if k < 0 || k >= n {
                            return Err(bad("face index out of range"));
                        }
                        Ok(k as usize)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(bad("face needs at least three corners"));
                }
                for k in 1..idx.len() - 1 {
                    mesh.faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(mesh)
}

/// Named columns of equal length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveTable {
    columns: Vec<(String, Vec<f64>)>,
}

impl CurveTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_column(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        if name.contains([',', '\n', '"']) {
            return Err(invalid(format!("column name `{name}` needs quoting")));
        }
        if let Some((_, first)) = self.columns.first() {
            if first.len() != values.len() {
                return Err(invalid(format!(
                    "column `{name}` has {} rows, expected {}",
                    values.len(),
                    first.len()
                )));
            }
        }
        self.columns.push((name.to_string(), values));
        Ok(self)
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }

    pub fn from_sled(states: &[SledState]) -> Self {
        let col = |f: fn(&SledState) -> f64| states.iter().map(f).collect();
        Self {
            columns: vec![
                ("s".into(), col(|s| s.s)),
                ("eta1".into(), col(|s| s.eta1)),
                ("eta2".into(), col(|s| s.eta2)),
                ("phi".into(), col(|s| s.phi)),
                ("kappa".into(), col(|s| s.kappa)),
            ],
        }
    }

    pub fn from_curve(curve: &GeneratingCurve) -> Self {
        let s = &curve.samples;
        Self {
            columns: vec![
                ("s".into(), s.iter().map(|c| c.s).collect()),
                ("x".into(), s.iter().map(|c| c.x).collect()),
                ("y".into(), s.iter().map(|c| c.y).collect()),
                ("phi".into(), s.iter().map(|c| c.phi).collect()),
            ],
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        if self.columns.is_empty() || self.rows() == 0 {
            return Err(invalid("csv table is empty"));
        }
        let mut out = self.names().join(",");
        out.push('\n');
        for r in 0..self.rows() {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|(_, v)| format_sig(v[r], 17))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty csv".into()))?;
        let names: Vec<&str> = header.split(',').collect();
        let mut cols = vec![Vec::new(); names.len()];
        for (k, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != names.len() {
                return Err(Error::Parse(format!(
                    "row {} has {} cells",
                    k + 1,
                    cells.len()
                )));
            }
            for (c, cell) in cells.iter().enumerate() {
                cols[c]
                    .push(cell.parse::<f64>().map_err(|_| {
                        Error::Parse(format!("row {}: bad number `{cell}`", k + 1))
                    })?);
            }
        }
        let mut t = Self::new();
        for (n, v) in names.into_iter().zip(cols) {
            t = t.with_column(n, v)?;
        }
        Ok(t)
    }
}

/// Header row plus 17-significant-digit rows.
pub fn write_csv(table: &CurveTable, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, table.to_csv()?)?;
    Ok(())
}

/// One polyline, y axis pointing up, viewBox padded by 5% of the larger
/// extent on every side.
pub fn svg_polyline(points: &[(f64, f64)]) -> Result<String> {
    if points.len() < 2 {
        return Err(invalid("polyline needs at least two points"));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(invalid("polyline has non-finite points"));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(-y);
        y1 = y1.max(-y);
    }
    let extent = (x1 - x0).max(y1 - y0).max(1e-12);
    let pad = 0.05 * extent;
    let f = |v: f64| format_sig(v, 9);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="600" height="{}">"#,
        f(x0 - pad),
        f(y0 - pad),
        f(x1 - x0 + 2.0 * pad),
        f(y1 - y0 + 2.0 * pad),
        (600.0 * (y1 - y0 + 2.0 * pad) / (x1 - x0 + 2.0 * pad))
            .round()
            .clamp(1.0, 6000.0)
    );
    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{},{}", f(x), f(-y)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="black" stroke-width="1.5" vector-effect="non-scaling-stroke" points="{}"/>"#,
        coords.join(" ")
    );
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_svg_polyline(points: &[(f64, f64)], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, svg_polyline(points)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(1.0, 9), "1");
        assert_eq!(format_sig(-0.0, 9), "0");
        assert_eq!(format_sig(0.1234567891234, 9), "0.123456789");
        assert_eq!(format_sig(1.0 / 3.0, 17), "0.3333333333333333");
        assert_eq!(format_sig(2.0 / 3.0, 9), "0.666666667");
        assert_eq!(format_sig(1.5e-7, 9), "1.5e-7");
        let x = std::f64::consts::PI * 1e-9;
        assert_eq!(format_sig(x, 17).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn single_triangle_obj() {
        let m = TriMesh {
            vertices: vec![Vector3::zeros(), Vector3::x(), Vector3::y()],
            faces: vec![[0, 1, 2]],
            normals: None,
        };
        let s = obj_string(&m).unwrap();
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 3);
        assert_eq!(
            s.lines()
                .filter(|l| l.starts_with("f "))
                .collect::<Vec<_>>(),
            ["f 1 2 3"]
        );
        assert!(!s.contains('\r'));
        assert_eq!(parse_obj(&s).unwrap(), m);
    }

    #[test]
    fn empty_mesh_is_header_only() {
        let s = obj_string(&TriMesh::default()).unwrap();
        assert_eq!(s.lines().count(), 1);
        assert!(s.starts_with('#'));
    }

    #[test]
    fn obj_rejects_out_of_range_faces() {
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn csv_round_trips_exactly() {
        let t = CurveTable::new()
            .with_column("s", vec![0.0, 0.1, 1.0 / 3.0])
            .unwrap()
            .with_column("x", vec![-1e-300, 2.5, std::f64::consts::E])
            .unwrap();
        let text = t.to_csv().unwrap();
        assert!(text.starts_with("s,x\n"));
        assert_eq!(CurveTable::parse_csv(&text).unwrap(), t);
        assert!(CurveTable::new()
            .with_column("a", vec![1.0])
            .unwrap()
            .with_column("b", vec![])
            .is_err());
        assert!(CurveTable::new().to_csv().is_err());
    }

    #[test]
    fn svg_box_has_five_percent_padding() {
        let s = svg_polyline(&[(0.0, 0.0), (10.0, 0.0), (10.0, 5.0)]).unwrap();
        assert!(s.contains(r#"viewBox="-0.5 -5.5 11 6""#), "{s}");
        assert_eq!(
            s,
            svg_polyline(&[(0.0, 0.0), (10.0, 0.0), (10.0, 5.0)]).unwrap()
        );
        assert!(svg_polyline(&[(0.0, 0.0)]).is_err());
    }
}
