//! Axially symmetric surface energy densities `gamma(nu3)` and the
//! Wulff-shape quantities derived from them.
//!
//! For a density depending only on the vertical normal component, the
//! Cahn–Hoffman vector is `xi = nu / mu2 + gamma'(nu3) e3`, where
//! `1/mu2 = gamma - nu3 gamma'` and `1/mu1 = (1 - nu3^2) gamma'' + 1/mu2`
//! are the principal curvatures of the Wulff shape (inward normal).
//! Convexity of the Wulff shape means both are positive.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Default number of samples used to certify convexity.
pub const CONVEXITY_SAMPLES: usize = 1001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileKind {
    Isotropic,
    /// `gamma = 1 + e nu3^2`.
    RapiniPapoular {
        e: f64,
    },
    /// `gamma = (1/nu3 - nu3) / 2`, the density whose energy is the
    /// Dirichlet integral of a graph. Only defined for `nu3 > 0`.
    Dirichlet,
    /// `gamma = sum c_k nu3^k`.
    Polynomial(Vec<f64>),
}

/// Interval of admissible `nu3`. `lo_open` excludes the lower end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
}

impl Domain {
    pub const FULL: Domain = Domain {
        lo: -1.0,
        hi: 1.0,
        lo_open: false,
    };

    pub fn contains(&self, nu3: f64) -> bool {
        let above = if self.lo_open {
            nu3 > self.lo
        } else {
            nu3 >= self.lo
        };
        above && nu3 <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyProfile {
    pub kind: ProfileKind,
    pub domain: Domain,
}

impl AnisotropyProfile {
    pub fn isotropic() -> Self {
        Self::new(ProfileKind::Isotropic)
    }

    pub fn rapini_papoular(e: f64) -> Self {
        Self::new(ProfileKind::RapiniPapoular { e })
    }

    pub fn dirichlet() -> Self {
        Self::new(ProfileKind::Dirichlet)
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::new(ProfileKind::Polynomial(coeffs))
    }

    pub fn new(kind: ProfileKind) -> Self {
        let domain = match kind {
            ProfileKind::Dirichlet => Domain {
                lo: 0.0,
                hi: 1.0,
                lo_open: true,
            },
            _ => Domain::FULL,
        };
        Self { kind, domain }
    }

    /// Narrows the domain to `[lo, hi]` intersected with the natural one.
    pub fn restricted(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(crate::error::invalid(format!("empty domain [{lo}, {hi}]")));
        }
        let d = self.domain;
        let (new_lo, lo_open) = if lo > d.lo {
            (lo, false)
        } else {
            (d.lo, d.lo_open)
        };
        let new_hi = hi.min(d.hi);
        if !(new_lo < new_hi) {
            return Err(crate::error::invalid(format!("empty domain [{lo}, {hi}]")));
        }
        self.domain = Domain {
            lo: new_lo,
            hi: new_hi,
            lo_open,
        };
        Ok(self)
    }

    /// True when the Wulff shape is unbounded (the Dirichlet paraboloid).
    pub fn noncompact_wulff(&self) -> bool {
        matches!(self.kind, ProfileKind::Dirichlet)
    }

    fn check(&self, nu3: f64) -> Result<()> {
        if self.domain.contains(nu3) {
            Ok(())
        } else {
            Err(Error::Domain {
                nu3,
                lo: self.domain.lo,
                hi: self.domain.hi,
            })
        }
    }

    /// `[gamma, gamma', gamma'', gamma''']` at `nu3`.
    pub fn derivatives(&self, nu3: f64) -> Result<[f64; 4]> {
        self.check(nu3)?;
        Ok(match &self.kind {
            ProfileKind::Isotropic => [1.0, 0.0, 0.0, 0.0],
            ProfileKind::RapiniPapoular { e } => [1.0 + e * nu3 * nu3, 2.0 * e * nu3, 2.0 * e, 0.0],
            ProfileKind::Dirichlet => {
                let inv = 1.0 / nu3;
                let inv2 = inv * inv;
                [
                    0.5 * (inv - nu3),
                    -0.5 * (inv2 + 1.0),
                    inv2 * inv,
                    -3.0 * inv2 * inv2,
                ]
            }
            ProfileKind::Polynomial(c) => poly_derivatives(c, nu3),
        })
    }

    /// `d^order gamma / d nu3^order` for `order` in `0..=3`.
    pub fn gamma(&self, nu3: f64, order: usize) -> Result<f64> {
        if order > 3 {
            return Err(crate::error::invalid(format!(
                "derivative order {order} > 3"
            )));
        }
        Ok(self.derivatives(nu3)?[order])
    }

    /// `1/mu2 = gamma - nu3 gamma'`, without the positivity check.
    pub fn inv_mu2(&self, nu3: f64) -> Result<f64> {
        let [g, g1, _, _] = self.derivatives(nu3)?;
        Ok(g - nu3 * g1)
    }

    /// `1/mu1 = (1 - nu3^2) gamma'' + 1/mu2`, without the positivity check.
    pub fn inv_mu1(&self, nu3: f64) -> Result<f64> {
        let [g, g1, g2, _] = self.derivatives(nu3)?;
        Ok((1.0 - nu3 * nu3) * g2 + g - nu3 * g1)
    }

    pub fn mu2(&self, nu3: f64) -> Result<f64> {
        let inv = self.inv_mu2(nu3)?;
        if inv <= 0.0 {
            return Err(Error::Convexity {
                nu3,
                what: "1/mu2",
                value: inv,
            });
        }
        Ok(1.0 / inv)
    }

    pub fn mu1(&self, nu3: f64) -> Result<f64> {
        let inv = self.inv_mu1(nu3)?;
        if inv <= 0.0 {
            return Err(Error::Convexity {
                nu3,
                what: "1/mu1",
                value: inv,
            });
        }
        Ok(1.0 / inv)
    }

    /// Uniform grid of `samples` points over the domain. An open lower
    /// end is replaced by the first interior grid point.
    pub fn sample_grid(&self, samples: usize) -> Vec<f64> {
        let Domain { lo, hi, lo_open } = self.domain;
        let n = samples.max(2);
        let step = (hi - lo) / (n - 1) as f64;
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else if k == 0 && lo_open {
                    lo + 0.5 * step
                } else {
                    lo + k as f64 * step
                }
            })
            .collect()
    }

    /// Minima of `1/mu1` and `1/mu2` on a uniform grid.
    pub fn convexity_check(&self, samples: usize) -> Result<ConvexityReport> {
        if samples < 2 {
            return Err(crate::error::invalid(
                "convexity check needs at least 2 samples",
            ));
        }
        let mut report = ConvexityReport {
            samples,
            min_inv_mu1: f64::INFINITY,
            argmin_mu1: f64::NAN,
            min_inv_mu2: f64::INFINITY,
            argmin_mu2: f64::NAN,
            pass: false,
            noncompact_wulff: self.noncompact_wulff(),
        };
        for nu3 in self.sample_grid(samples) {
            let i1 = self.inv_mu1(nu3)?;
            let i2 = self.inv_mu2(nu3)?;
            if i1 < report.min_inv_mu1 {
                report.min_inv_mu1 = i1;
                report.argmin_mu1 = nu3;
            }
            if i2 < report.min_inv_mu2 {
                report.min_inv_mu2 = i2;
                report.argmin_mu2 = nu3;
            }
        }
        report.pass = report.min_inv_mu1 > 0.0 && report.min_inv_mu2 > 0.0;
        Ok(report)
    }

    /// Residual of the ODE `gamma''' = (4 / lambda^2) nu3 (1 - nu3^2) gamma''`,
    /// which holds identically exactly when the Cahn–Hoffman map of the
    /// helicoid of pitch `lambda` is harmonic.
    pub fn harmonicity_residual(&self, lambda: f64, nu3: f64) -> Result<f64> {
        if lambda == 0.0 {
            return Err(crate::error::invalid("helicoid pitch must be nonzero"));
        }
        let [_, _, g2, g3] = self.derivatives(nu3)?;
        Ok(g3 - 4.0 / (lambda * lambda) * nu3 * (1.0 - nu3 * nu3) * g2)
    }

    /// Point of the Wulff shape with outward normal
    /// `(sqrt(1-nu3^2) cos a, sqrt(1-nu3^2) sin a, nu3)`.
    pub fn wulff_point(&self, nu3: f64, azimuth: f64) -> Result<WulffSample> {
        let [_, g1, _, _] = self.derivatives(nu3)?;
        let inv_mu2 = self.inv_mu2(nu3)?;
        let normal = unit_normal(nu3, azimuth);
        let point = normal * inv_mu2 + Vector3::new(0.0, 0.0, g1);
        Ok(WulffSample {
            nu3,
            azimuth,
            point,
            normal,
        })
    }

    /// Triangulated Wulff shape on a regular `(nu3, azimuth)` grid.
    ///
    /// Rows run from the top of the domain downwards; a row at
    /// `|nu3| = 1` collapses to a single pole vertex closed by a fan.
    /// Faces are oriented by the outward normal.
    pub fn wulff_mesh(&self, nu3_samples: usize, azimuth_samples: usize) -> Result<WulffMesh> {
        if nu3_samples < 2 || azimuth_samples < 3 {
            return Err(crate::error::invalid(
                "wulff mesh needs >= 2 nu3 rows and >= 3 azimuth columns",
            ));
        }
        let report = self.convexity_check(nu3_samples.max(CONVEXITY_SAMPLES))?;
        if !report.pass {
            let (nu3, what, value) = if report.min_inv_mu2 <= 0.0 {
                (report.argmin_mu2, "1/mu2", report.min_inv_mu2)
            } else {
                (report.argmin_mu1, "1/mu1", report.min_inv_mu1)
            };
            return Err(Error::Convexity { nu3, what, value });
        }

        let mut rows = self.sample_grid(nu3_samples);
        rows.reverse();
        let m = azimuth_samples;
        let mut samples = Vec::new();
        let mut ring_start = Vec::with_capacity(rows.len());
        for &nu3 in &rows {
            ring_start.push(samples.len());
            if nu3.abs() == 1.0 {
                samples.push(self.wulff_point(nu3, 0.0)?);
            } else {
                for j in 0..m {
                    let a = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                    samples.push(self.wulff_point(nu3, a)?);
                }
            }
        }

        let is_pole = |k: usize| rows[k].abs() == 1.0;
        let mut faces = Vec::new();
        for k in 0..rows.len() - 1 {
            let (a, b) = (ring_start[k], ring_start[k + 1]);
            match (is_pole(k), is_pole(k + 1)) {
                (true, true) => {}
                (true, false) => {
                    for j in 0..m {
                        faces.push([a, b + j, b + (j + 1) % m]);
                    }
                }
                (false, true) => {
                    for j in 0..m {
                        faces.push([a + j, b, a + (j + 1) % m]);
                    }
                }
                (false, false) => {
                    for j in 0..m {
                        let jn = (j + 1) % m;
                        faces.push([a + j, b + j, b + jn]);
                        faces.push([a + j, b + jn, a + jn]);
                    }
                }
            }
        }

        let mesh = TriMesh {
            vertices: samples.iter().map(|s| s.point).collect(),
            faces,
            normals: Some(samples.iter().map(|s| s.normal).collect()),
        };
        Ok(WulffMesh {
            mesh,
            samples,
            noncompact: report.noncompact_wulff,
        })
    }
}

fn poly_derivatives(c: &[f64], x: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    // Horner on each derivative's coefficients.
    for (order, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in (order..c.len()).rev() {
            let falling: f64 = (0..order).map(|j| (k - j) as f64).product();
            acc = acc * x + falling * c[k];
        }
        *slot = acc;
    }
    out
}

pub(crate) fn unit_normal(nu3: f64, azimuth: f64) -> Vector3<f64> {
    let rho = (1.0 - nu3 * nu3).max(0.0).sqrt();
    let (s, c) = azimuth.sin_cos();
    Vector3::new(rho * c, rho * s, nu3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub samples: usize,
    pub min_inv_mu1: f64,
    pub argmin_mu1: f64,
    pub min_inv_mu2: f64,
    pub argmin_mu2: f64,
    pub pass: bool,
    pub noncompact_wulff: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WulffSample {
    pub nu3: f64,
    pub azimuth: f64,
    /// Position on the Wulff shape.
    pub point: Vector3<f64>,
    /// Unit normal the point corresponds to.
    pub normal: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct WulffMesh {
    pub mesh: TriMesh,
    pub samples: Vec<WulffSample>,
    pub noncompact: bool,
}

impl fmt::Display for AnisotropyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProfileKind::Isotropic => write!(f, "isotropic"),
            ProfileKind::RapiniPapoular { e } => write!(f, "rapini:e={e}"),
            ProfileKind::Dirichlet => write!(f, "dirichlet"),
            ProfileKind::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                write!(f, "poly:{}", parts.join(","))
            }
        }
    }
}

/// Parses `isotropic`, `rapini:e=<real>`, `dirichlet`, `poly:c0,c1,...`.
impl FromStr for AnisotropyProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |why: &str| Error::Parse(format!("profile `{s}`: {why}"));
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        match (head, tail) {
            ("isotropic", None) => Ok(Self::isotropic()),
            ("dirichlet", None) => Ok(Self::dirichlet()),
            ("rapini", Some(t)) => {
                let v = t
                    .strip_prefix("e=")
                    .ok_or_else(|| bad("expected e=<real>"))?;
                let e: f64 = v.parse().map_err(|_| bad("e is not a number"))?;
                if !e.is_finite() {
                    return Err(bad("e must be finite"));
                }
                Ok(Self::rapini_papoular(e))
            }
            ("poly", Some(t)) => {
                let coeffs = t
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("coefficients must be numbers"))?;
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(bad("need at least one finite coefficient"));
                }
                Ok(Self::polynomial(coeffs))
            }
            _ => Err(bad("unknown kind")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rp(e: f64) -> AnisotropyProfile {
        AnisotropyProfile::rapini_papoular(e)
    }

    #[test]
    fn gamma_eval_examples() {
        assert_eq!(AnisotropyProfile::isotropic().gamma(0.5, 0).unwrap(), 1.0);
        assert_relative_eq!(rp(0.2).gamma(1.0, 1).unwrap(), 0.4, epsilon = 1e-15);
        // (1/0.5 - 0.5) / 2
        assert_relative_eq!(
            AnisotropyProfile::dirichlet().gamma(0.5, 0).unwrap(),
            0.75,
            epsilon = 1e-15
        );
    }

    #[test]
    fn dirichlet_rejects_nonpositive_nu3() {
        let d = AnisotropyProfile::dirichlet();
        assert!(matches!(d.gamma(0.0, 0), Err(Error::Domain { .. })));
        assert!(matches!(d.gamma(-0.3, 1), Err(Error::Domain { .. })));
        assert!(matches!(rp(0.1).gamma(1.2, 0), Err(Error::Domain { .. })));
    }

    #[test]
    fn dirichlet_has_inverse_mu2_equal_to_inverse_nu3() {
        let d = AnisotropyProfile::dirichlet();
        for nu3 in [0.1, 0.3, 0.77, 1.0] {
            assert_relative_eq!(d.inv_mu2(nu3).unwrap(), 1.0 / nu3, max_relative = 1e-14);
        }
    }

    #[test]
    fn mu_examples() {
        let iso = AnisotropyProfile::isotropic();
        assert_eq!(iso.mu2(-0.4).unwrap(), 1.0);
        assert_eq!(iso.mu1(0.3).unwrap(), 1.0);
        assert_relative_eq!(rp(0.2).mu2(1.0).unwrap(), 1.25, epsilon = 1e-14);
        assert_relative_eq!(rp(0.2).mu2(0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(rp(0.2).mu1(0.0).unwrap(), 1.0 / 1.4, epsilon = 1e-15);
        assert_relative_eq!(rp(-0.3).mu1(0.0).unwrap(), 2.5, epsilon = 1e-14);
    }

    #[test]
    fn convexity_errors_surface() {
        assert!(matches!(rp(2.0).mu2(1.0), Err(Error::Convexity { .. })));
        assert!(matches!(rp(-0.6).mu1(0.0), Err(Error::Convexity { .. })));
    }

    #[test]
    fn convexity_check_examples() {
        let r = rp(0.2).convexity_check(101).unwrap();
        assert!(r.pass);
        assert_relative_eq!(r.min_inv_mu2, 0.8, epsilon = 1e-14);
        assert_eq!(r.argmin_mu2.abs(), 1.0);

        let r = rp(-0.3).convexity_check(101).unwrap();
        assert!(r.pass);
        assert_relative_eq!(r.min_inv_mu1, 0.4, epsilon = 1e-14);
        assert!(r.argmin_mu1.abs() < 1e-12);

        assert!(!rp(2.0).convexity_check(101).unwrap().pass);
        assert!(
            AnisotropyProfile::dirichlet()
                .convexity_check(101)
                .unwrap()
                .noncompact_wulff
        );
        assert!(rp(0.0).convexity_check(1).is_err());
    }

    #[test]
    fn harmonicity_examples() {
        let iso = AnisotropyProfile::isotropic();
        assert_eq!(iso.harmonicity_residual(1.0, 0.5).unwrap(), 0.0);
        assert_relative_eq!(
            rp(0.2).harmonicity_residual(1.0, 0.5).unwrap(),
            -0.6,
            epsilon = 1e-14
        );
        // gamma = 1 + a nu^2 + b nu^3 solves the ODE at nu = 1/2, lambda = 1
        // exactly when 6b = 1.5 (2a + 3b), i.e. b = 2a.
        let p = AnisotropyProfile::polynomial(vec![1.0, 0.0, 0.1, 0.2]);
        assert!(p.harmonicity_residual(1.0, 0.5).unwrap().abs() < 1e-15);
        assert!(p.harmonicity_residual(1.0, 0.3).unwrap().abs() > 1e-3);
        assert!(iso.harmonicity_residual(0.0, 0.5).is_err());
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let p = AnisotropyProfile::polynomial(vec![1.0, -0.5, 0.25, 2.0, -1.0]);
        let x: f64 = 0.3;
        let d = p.derivatives(x).unwrap();
        let g = 1.0 - 0.5 * x + 0.25 * x * x + 2.0 * x.powi(3) - x.powi(4);
        let g1 = -0.5 + 0.5 * x + 6.0 * x * x - 4.0 * x.powi(3);
        let g2 = 0.5 + 12.0 * x - 12.0 * x * x;
        let g3 = 12.0 - 24.0 * x;
        for (a, b) in d.iter().zip([g, g1, g2, g3]) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn sphere_wulff_mesh_is_unit_sphere() {
        let w = AnisotropyProfile::isotropic().wulff_mesh(32, 64).unwrap();
        let worst = w
            .mesh
            .vertices
            .iter()
            .map(|v| (v.norm() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12);
        // 2 poles + 30 rings
        assert_eq!(w.mesh.vertices.len(), 2 + 30 * 64);
        assert_eq!(w.mesh.faces.len(), 2 * 64 + 2 * 29 * 64);
        // outward orientation
        assert!(w.mesh.volume() > 0.0);
    }

    #[test]
    fn dirichlet_wulff_shape_is_the_paraboloid() {
        let p = AnisotropyProfile::dirichlet().restricted(0.1, 1.0).unwrap();
        let w = p.wulff_mesh(40, 48).unwrap();
        assert!(w.noncompact);
        for v in &w.mesh.vertices {
            let lhs = v.x * v.x + v.y * v.y;
            assert!((lhs + 2.0 * v.z).abs() < 1e-9 * (1.0 + lhs), "{v:?}");
        }
    }

    #[test]
    fn support_identity_on_rapini_papoular_wulff_mesh() {
        let p = rp(0.2);
        let w = p.wulff_mesh(41, 60).unwrap();
        for s in &w.samples {
            let support = s.point.dot(&s.normal);
            assert!((support - p.gamma(s.nu3, 0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn wulff_mesh_rejects_nonconvex() {
        assert!(matches!(
            rp(2.0).wulff_mesh(20, 20),
            Err(Error::Convexity { .. })
        ));
    }

    #[test]
    fn profile_grammar_round_trips() {
        for s in [
            "isotropic",
            "dirichlet",
            "rapini:e=0.2",
            "rapini:e=-0.3",
            "poly:1,0,0.1,0,0.05",
        ] {
            let p: AnisotropyProfile = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        for bad in [
            "rapini",
            "rapini:0.2",
            "poly:",
            "poly:a,b",
            "cubic",
            "isotropic:x",
        ] {
            assert!(bad.parse::<AnisotropyProfile>().is_err(), "{bad}");
        }
    }
}
