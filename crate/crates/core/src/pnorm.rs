//! p-norm Wulff shapes, their anisotropic catenoids, and the conjugate
//! multivalued "helicoids".
//!
//! Everything here is phrased through planar norms: a surface energy
//! `|| (-grad w, 1) ||` with `||(a, b, c)|| = |(|(a, b)|_H, c)|_V` has the
//! non-parametric Euler–Lagrange equation
//!
//! ```text
//! Div0( d1 Phi(Psi(grad w), 1) * grad Psi(grad w) ) = 0,     Psi = |.|_H, Phi = |.|_V.
//! ```
//!
//! With `H = V = l_e` this is `Div0[(1 + |w_x|^e + |w_y|^e)^((1-e)/e) (w_x^(e-1), w_y^(e-1))]`,
//! the operator `M` of the `W_p` energy when `e = q`. Odd powers of
//! possibly negative slopes are read as signed powers.
//!
//! Radial solutions `w = w(Psi*(x, y))` satisfy `Div0(g(Psi*) (x, y)) = 0`,
//! whose first integral is `g = c / Psi*^2`; `d1 Phi(w', 1) = c / Psi*` then
//! fixes the profile slope. Rotating that flux by `J(x, y) = (-y, x)`
//! gives the gradient of the conjugate `alpha`, constant on rays:
//! `alpha(theta) = c * int dtheta / Psi*(cos, sin)^2`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::fd::{divergence_residual, Grid, ResidualField};
use crate::mesh::{grid_surface, TriMesh};
use crate::quad::{integrate, HermiteTable};

fn spow(x: f64, e: f64) -> f64 {
    x.signum() * x.abs().powf(e)
}

/// A norm on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PlanarNorm {
    /// `(|x|^p + |y|^p)^(1/p)`, `p > 1`.
    Lp(f64),
    /// `sqrt(v^T m v)` for a symmetric positive definite `m = [[a, b], [b, c]]`.
    Quadratic { a: f64, b: f64, c: f64 },
}

impl PlanarNorm {
    pub fn euclidean() -> Self {
        Self::Lp(2.0)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Lp(p) if p > 1.0 && p.is_finite() => Ok(()),
            Self::Lp(p) => Err(invalid(format!("l_p norm needs p > 1, got {p}"))),
            Self::Quadratic { a, b, c } if a > 0.0 && a * c - b * b > 0.0 => Ok(()),
            Self::Quadratic { .. } => Err(invalid("quadratic norm must be positive definite")),
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        match *self {
            Self::Lp(2.0) => x.hypot(y),
            Self::Lp(p) => {
                let m = x.abs().max(y.abs());
                if m == 0.0 {
                    return 0.0;
                }
                m * ((x.abs() / m).powf(p) + (y.abs() / m).powf(p)).powf(1.0 / p)
            }
            Self::Quadratic { a, b, c } => (a * x * x + 2.0 * b * x * y + c * y * y).sqrt(),
        }
    }

    /// Gradient, homogeneous of degree zero; zero at the origin.
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let n = self.value(x, y);
        if n == 0.0 {
            return (0.0, 0.0);
        }
        match *self {
            Self::Lp(p) => (spow(x / n, p - 1.0), spow(y / n, p - 1.0)),
            Self::Quadratic { a, b, c } => ((a * x + b * y) / n, (b * x + c * y) / n),
        }
    }

    pub fn dual(&self) -> Self {
        match *self {
            Self::Lp(p) => Self::Lp(p / (p - 1.0)),
            Self::Quadratic { a, b, c } => {
                let det = a * c - b * b;
                Self::Quadratic {
                    a: c / det,
                    b: -b / det,
                    c: a / det,
                }
            }
        }
    }

    /// Flux `d1 Phi(Psi(g), 1) grad Psi(g)` of the graph energy with this
    /// norm as `Psi` (horizontal) and `vertical` as `Phi`.
    pub fn graph_flux(&self, vertical: &Self, gx: f64, gy: f64) -> (f64, f64) {
        let s = self.value(gx, gy);
        let (d1, _) = vertical.gradient(s, 1.0);
        let (px, py) = self.gradient(gx, gy);
        (d1 * px, d1 * py)
    }

    /// Checks `|J v| = |v|` for `J(x, y) = (-y, x)` on a fixed set of 1000
    /// directions and radii; returns the worst relative defect.
    pub fn rotation_defect(&self) -> f64 {
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        (0..1000)
            .map(|k| {
                let t = 2.0 * PI * ((k as f64 * golden).fract());
                let r = 0.1 + 10.0 * ((k as f64 * golden * golden).fract());
                let (x, y) = (r * t.cos(), r * t.sin());
                let n = self.value(x, y);
                (self.value(-y, x) - n).abs() / n
            })
            .fold(0.0, f64::max)
    }
}

/// Relative tolerance of the `J`-invariance hypothesis.
pub const ROTATION_TOLERANCE: f64 = 1e-12;

/// Exponent pair of the `W_p` Wulff shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PNormSpec {
    pub p: f64,
    pub q: f64,
    pub c: f64,
}

impl PNormSpec {
    pub fn new(p: u32, c: f64) -> Result<Self> {
        if p < 2 || !p.is_multiple_of(2) {
            return Err(invalid(format!("p must be an even integer >= 2, got {p}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c must be positive"));
        }
        let p = p as f64;
        Ok(Self {
            p,
            q: p / (p - 1.0),
            c,
        })
    }

    /// `omega = (|x|^p + |y|^p)^(1/p)`.
    pub fn omega(&self, x: f64, y: f64) -> f64 {
        PlanarNorm::Lp(self.p).value(x, y)
    }

    /// Radius where the catenoid slope blows up.
    pub fn waist(&self) -> f64 {
        self.c
    }

    /// `f(omega) = c / omega^2`.
    pub fn f(&self, omega: f64) -> f64 {
        self.c / (omega * omega)
    }
}

/// Radial slope `dz/domega` of the `l_v` catenoid `d1 l_v(z', 1) = c / s`.
fn radial_slope(v: f64, c: f64, s: f64) -> Result<f64> {
    let u = (c / s).powf(1.0 / (v - 1.0));
    if !(u < 1.0) {
        return Err(Error::Waist { omega: s });
    }
    if v == 2.0 {
        return Ok(c / ((s - c) * (s + c)).sqrt());
    }
    Ok(u / (1.0 - u.powf(v)).powf(1.0 / v))
}

/// `z_omega = u / (1 - u^q)^(1/q)` with `u = (c / omega)^(p-1)`.
pub fn catenoid_slope(spec: &PNormSpec, omega: f64) -> Result<f64> {
    radial_slope(spec.q, spec.c, omega)
}

/// Signed area of `{|x|^p + |y|^p <= a^p}`, by quadrature of
/// `a^2 / 2 * int dtheta / omega(cos, sin)^2` per quadrant.
pub fn superellipse_area(p: f64, a: f64) -> Result<f64> {
    if !(p > 1.0 && a > 0.0) {
        return Err(invalid("superellipse area needs p > 1 and a > 0"));
    }
    Ok(a * a * 2.0 * angular_integral(&PlanarNorm::Lp(p), 0.0, 0.5 * PI))
}

/// `int_t0^t1 dtheta / n(cos, sin)^2`.
fn angular_integral(norm: &PlanarNorm, t0: f64, t1: f64) -> f64 {
    integrate(
        |t| {
            let n = norm.value(t.cos(), t.sin());
            1.0 / (n * n)
        },
        t0,
        t1,
        1e-13,
        0.0,
    )
}

/// Angle function `alpha(theta)` of a conjugate helicoid on `[-pi, pi]`,
/// zero at `theta = 0`.
#[derive(Debug, Clone)]
pub struct AngularProfile {
    table: HermiteTable,
    norm: PlanarNorm,
    c: f64,
    pub period: f64,
}

impl AngularProfile {
    /// `alpha' = c / n(cos, sin)^2` for the norm `n = Psi*`.
    pub fn new(norm: PlanarNorm, c: f64, nodes: usize) -> Self {
        let slope = move |t: f64| {
            let n = norm.value(t.cos(), t.sin());
            c / (n * n)
        };
        let table = HermiteTable::build(
            -PI,
            PI,
            nodes,
            -c * angular_integral(&norm, -PI, 0.0),
            |t0, t1, prev| prev + c * angular_integral(&norm, t0, t1),
            slope,
        );
        let (lo, hi) = (table.eval(-PI), table.eval(PI));
        Self {
            table,
            norm,
            c,
            period: hi - lo,
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.table.eval(theta)
    }

    /// Height at a planar point, on the branch `theta in (-pi, pi]`.
    pub fn at(&self, x: f64, y: f64) -> f64 {
        self.eval(y.atan2(x))
    }

    /// `grad alpha = (c / n^2)(-y, x)`.
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let n = self.norm.value(x, y);
        let g = self.c / (n * n);
        (-g * y, g * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub omega: f64,
    pub z: f64,
    pub z_omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HelicoidSample {
    pub omega: f64,
    pub theta: f64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

/// Catenoid profile and its conjugate over an annulus `a_min <= omega <= a_max`.
///
/// The helicoid is stored single-valued on the slit `theta in [-pi, pi]`;
/// crossing the slit adds `period` to `w`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugatePair {
    pub spec: PNormSpec,
    pub annulus: (f64, f64),
    pub catenoid: Vec<ProfileSample>,
    pub helicoid: Vec<HelicoidSample>,
    pub angular_samples: usize,
    pub period: f64,
}

/// Catenoid height `z(omega)` with `z(a_min) = 0`, as a cubic Hermite table.
pub fn catenoid_profile(
    spec: &PNormSpec,
    a_min: f64,
    a_max: f64,
    nodes: usize,
) -> Result<HermiteTable> {
    if !(a_max > a_min) || nodes == 0 {
        return Err(invalid(
            "catenoid profile needs a_min < a_max and nodes > 0",
        ));
    }
    catenoid_slope(spec, a_min)?;
    Ok(HermiteTable::build(
        a_min,
        a_max,
        nodes,
        0.0,
        |s0, s1, prev| {
            prev + integrate(
                |s| catenoid_slope(spec, s).unwrap_or(f64::NAN),
                s0,
                s1,
                1e-13,
                0.0,
            )
        },
        |s| catenoid_slope(spec, s).unwrap_or(f64::NAN),
    ))
}

pub fn conjugate_helicoid(
    spec: &PNormSpec,
    annulus: (f64, f64),
    angular_samples: usize,
) -> Result<ConjugatePair> {
    conjugate_helicoid_sector(spec, annulus, (-PI, PI), angular_samples)
}

/// Like [`conjugate_helicoid`] over the angular sector `[t0, t1]`, which
/// must not wind more than once around the origin.
pub fn conjugate_helicoid_sector(
    spec: &PNormSpec,
    annulus: (f64, f64),
    sector: (f64, f64),
    angular_samples: usize,
) -> Result<ConjugatePair> {
    let (a_min, a_max) = annulus;
    if !(a_min > 0.0 && a_max > a_min) {
        return Err(invalid("annulus needs 0 < a_min < a_max"));
    }
    if !(a_min > spec.waist()) {
        return Err(Error::Waist { omega: a_min });
    }
    if angular_samples < 3 {
        return Err(invalid("need at least 3 angular samples"));
    }
    let span = sector.1 - sector.0;
    if !(span > 0.0)
        || span > 2.0 * PI * (1.0 + 1e-12)
        || sector.0 < -PI * (1.0 + 1e-12)
        || sector.1 > PI * (1.0 + 1e-12)
    {
        return Err(Error::BranchCut { span });
    }
    let radial = 64;
    let table = catenoid_profile(spec, a_min, a_max, radial)?;
    let catenoid = (0..=radial)
        .map(|k| {
            let omega = a_min + (a_max - a_min) * k as f64 / radial as f64;
            Ok(ProfileSample {
                omega,
                z: table.eval(omega),
                z_omega: catenoid_slope(spec, omega)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let norm = PlanarNorm::Lp(spec.p);
    let ang = AngularProfile::new(norm, spec.c, 2048);
    let mut helicoid = Vec::with_capacity(3 * angular_samples);
    for omega in [a_min, 0.5 * (a_min + a_max), a_max] {
        for j in 0..angular_samples {
            let theta = sector.0 + span * j as f64 / (angular_samples - 1) as f64;
            let n = norm.value(theta.cos(), theta.sin());
            helicoid.push(HelicoidSample {
                omega,
                theta,
                x: omega * theta.cos() / n,
                y: omega * theta.sin() / n,
                w: ang.eval(theta),
            });
        }
    }
    Ok(ConjugatePair {
        spec: *spec,
        annulus,
        catenoid,
        helicoid,
        angular_samples,
        period: ang.period,
    })
}

impl ConjugatePair {
    /// `2 f(a) Area({omega <= a})`.
    pub fn period_at(&self, a: f64) -> Result<f64> {
        Ok(2.0 * self.spec.f(a) * superellipse_area(self.spec.p, a)?)
    }

    /// Surface of revolution-like mesh `omega -> (omega e(theta), z(omega))`
    /// over the full turn, where `e(theta)` traces the unit `W_p` section.
    pub fn catenoid_mesh(&self, theta_samples: usize) -> Result<TriMesh> {
        if theta_samples < 3 {
            return Err(invalid("need at least 3 angular samples"));
        }
        let norm = PlanarNorm::Lp(self.spec.p);
        let cat = &self.catenoid;
        Ok(grid_surface(
            cat.len(),
            theta_samples,
            false,
            true,
            |i, j| {
                let t = 2.0 * PI * j as f64 / theta_samples as f64;
                let n = norm.value(t.cos(), t.sin());
                let s = cat[i].omega;
                Vector3::new(s * t.cos() / n, s * t.sin() / n, cat[i].z)
            },
        ))
    }

    /// Ruled helicoid over the annulus for `turns` revolutions.
    pub fn helicoid_mesh(&self, radial: usize, turns: usize) -> Result<TriMesh> {
        if radial < 2 || turns == 0 {
            return Err(invalid("need >= 2 radial samples and >= 1 turn"));
        }
        let n_theta = self.angular_samples;
        let row: Vec<&HelicoidSample> = self.helicoid[..n_theta].iter().collect();
        let (a_min, a_max) = self.annulus;
        let cols = turns * (n_theta - 1) + 1;
        Ok(grid_surface(radial, cols, false, false, |i, j| {
            let s = a_min + (a_max - a_min) * i as f64 / (radial - 1) as f64;
            let (turn, k) = if j == cols - 1 {
                (turns - 1, n_theta - 1)
            } else {
                (j / (n_theta - 1), j % (n_theta - 1))
            };
            let h = row[k];
            let scale = s / h.omega;
            Vector3::new(h.x * scale, h.y * scale, h.w + turn as f64 * self.period)
        }))
    }
}

/// Excludes a wedge of half-angle `asin(frac)`-ish around both coordinate
/// axes, where signed fractional powers of finite-difference slopes lose
/// smoothness for `p > 2`.
pub fn off_axes(frac: f64) -> impl Fn(f64, f64) -> bool + Send + Sync + Copy {
    move |x: f64, y: f64| x.abs().min(y.abs()) >= frac * x.abs().max(y.abs())
}

/// `Div0[(1 + |z_x|^e + |z_y|^e)^((1-e)/e) (z_x^(e-1), z_y^(e-1))]` at masked
/// interior nodes. The catenoid of `W_p` solves it with `e = q`, its
/// conjugate with `e = p`.
pub fn m_operator_residual(
    exponent: f64,
    z: &Grid,
    mask: impl Fn(f64, f64) -> bool + Send + Sync,
) -> Result<ResidualField> {
    m_operator_residual_with(Exec::default(), exponent, z, mask)
}

pub fn m_operator_residual_with(
    exec: Exec,
    exponent: f64,
    z: &Grid,
    mask: impl Fn(f64, f64) -> bool + Send + Sync,
) -> Result<ResidualField> {
    let norm = PlanarNorm::Lp(exponent);
    norm.validate()?;
    eln_residual(exec, &norm, &norm, z, mask)
}

fn eln_residual(
    exec: Exec,
    horizontal: &PlanarNorm,
    vertical: &PlanarNorm,
    z: &Grid,
    mask: impl Fn(f64, f64) -> bool + Send + Sync,
) -> Result<ResidualField> {
    divergence_residual(
        exec,
        z,
        0.0,
        |gx, gy| Ok(horizontal.graph_flux(vertical, gx, gy)),
        mask,
    )
}

/// Grid sample of the `W_p` catenoid `z(omega(x, y))` over `[-half, half]^2`;
/// nodes inside the waist hold NaN.
pub fn catenoid_grid(spec: &PNormSpec, exec: Exec, half: f64, h: f64) -> Result<Grid> {
    let a_min = spec.waist() * (1.0 + 1e-9);
    let table = catenoid_profile(spec, a_min, half * 2f64.sqrt() + h, 4096)?;
    Ok(Grid::centered(exec, half, h, |x, y| {
        let s = spec.omega(x, y);
        if s > a_min {
            table.eval(s)
        } else {
            f64::NAN
        }
    }))
}

/// Grid sample of the conjugate helicoid, with its period attached.
pub fn helicoid_grid(spec: &PNormSpec, exec: Exec, half: f64, h: f64) -> Grid {
    let ang = AngularProfile::new(PlanarNorm::Lp(spec.p), spec.c, 4096);
    let period = ang.period;
    Grid::centered(exec, half, h, |x, y| ang.at(x, y)).with_period(period)
}

/// Residuals of the anisotropic catenoid and of its conjugate for a
/// horizontal/vertical norm pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualPairReport {
    pub horizontal: PlanarNorm,
    pub vertical: PlanarNorm,
    pub c: f64,
    pub h: f64,
    /// Equation of the catenoid `w(Psi*)` for the energy built from `(H, V)`.
    pub catenoid_residual: f64,
    /// Dual equation of the conjugate built from `(H*, V*)`.
    pub conjugate_residual: f64,
    pub rotation_defect: f64,
    pub period: f64,
}

/// Evaluates both equations on `[-half, half]^2` restricted to the
/// annulus `a_min <= Psi* <= a_max` (and off the axes unless `H*` is
/// Euclidean).
pub fn dual_pair_check(
    horizontal: &PlanarNorm,
    vertical: &PlanarNorm,
    c: f64,
    annulus: (f64, f64),
    h: f64,
) -> Result<DualPairReport> {
    dual_pair_check_with(Exec::default(), horizontal, vertical, c, annulus, h)
}

pub fn dual_pair_check_with(
    exec: Exec,
    horizontal: &PlanarNorm,
    vertical: &PlanarNorm,
    c: f64,
    annulus: (f64, f64),
    h: f64,
) -> Result<DualPairReport> {
    horizontal.validate()?;
    vertical.validate()?;
    let h_star = horizontal.dual();
    let v_star = vertical.dual();
    let defect = h_star.rotation_defect();
    if defect > ROTATION_TOLERANCE {
        return Err(Error::Hypothesis { defect });
    }
    let (a_min, a_max) = annulus;
    if !(c > 0.0 && h > 0.0 && a_max > a_min) {
        return Err(invalid("dual pair check needs c > 0, h > 0, a_min < a_max"));
    }
    let v_exp = match *vertical {
        PlanarNorm::Lp(v) => v,
        PlanarNorm::Quadratic { .. } => return Err(invalid("vertical norm must be an l_p norm")),
    };
    if !(a_min > c) {
        return Err(Error::Waist { omega: a_min });
    }
    let half = a_max;
    let reach = a_max * 2.0 + h;
    let table = HermiteTable::build(
        a_min * 0.5 + c * 0.5,
        reach,
        4096,
        0.0,
        |s0, s1, prev| {
            prev + integrate(
                |s| radial_slope(v_exp, c, s).unwrap_or(f64::NAN),
                s0,
                s1,
                1e-13,
                0.0,
            )
        },
        |s| radial_slope(v_exp, c, s).unwrap_or(f64::NAN),
    );
    let cat = Grid::centered(exec, half, h, |x, y| table.eval(h_star.value(x, y)));
    let smooth = matches!(h_star, PlanarNorm::Lp(e) if e == 2.0);
    let axes = off_axes(0.25);
    let mask = move |x: f64, y: f64| {
        let s = h_star.value(x, y);
        s >= a_min && s <= a_max && (smooth || axes(x, y))
    };
    let r1 = eln_residual(exec, horizontal, vertical, &cat, mask)?;

    let ang = AngularProfile::new(h_star, c, 4096);
    let conj = Grid::centered(exec, half, h, |x, y| ang.at(x, y)).with_period(ang.period);
    let r2 = eln_residual(exec, &h_star, &v_star, &conj, mask)?;
    Ok(DualPairReport {
        horizontal: *horizontal,
        vertical: *vertical,
        c,
        h,
        catenoid_residual: r1.max_abs(),
        conjugate_residual: r2.max_abs(),
        rotation_defect: defect,
        period: ang.period,
    })
}
