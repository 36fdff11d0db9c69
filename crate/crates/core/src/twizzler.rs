//! Helicoidal surfaces of constant anisotropic mean curvature from
//! their treadmill sleds.
//!
//! A helicoidal surface `X = ((x + i y) e^{-i omega t}, t + C)` is fixed
//! by its arc-length generating curve `(x(s), y(s))`. With
//! `eta1 = -(1/2) d(x^2 + y^2)/ds` and `eta2 = x y_s - y x_s`, the
//! surface has constant anisotropic mean curvature `Lambda` exactly when
//! `(eta1, eta2)` stays on the level set
//!
//! ```text
//! F = Lambda (eta1^2 + eta2^2) + 2 eta2 / (mu2(nu3) sqrt(1 + omega^2 eta1^2)) + A = 0,
//! nu3 = omega eta1 / sqrt(1 + omega^2 eta1^2).
//! ```
//!
//! The sled is traced as an ODE in `s`. Writing `x_s + i y_s = e^{i phi}`
//! and `phi' = -kappa`, differentiating `x + i y = -(eta1 + i eta2) e^{i phi}`
//! gives
//!
//! ```text
//! eta1' = -1 - kappa eta2,   eta2' = kappa eta1,   phi' = -kappa,
//! ```
//!
//! and tangency to `F = 0` fixes
//! `kappa = (Lambda + eta2 g1) / (G - g1 eta2^2)` with
//! `G = c / mu2`, `g1 = G'(eta1) / eta1 = -omega^2 c^3 / mu1`, `c = (1 + omega^2 eta1^2)^{-1/2}`.
//! This form has no removable singularity at `eta1 = 0`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::anisotropy::AnisotropyProfile;
use crate::error::{invalid, Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::mesh::{grid_surface, TriMesh};
use crate::quad::bisect;

/// Trace residual guaranteed after projection.
pub const TRACE_TOLERANCE: f64 = 1e-9;
/// Default arc-length step of the sled integrator.
pub const DEFAULT_STEP: f64 = 1e-3;
const MIN_STEP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SledParams {
    /// Target anisotropic mean curvature.
    pub lambda_amc: f64,
    /// Integration constant of the sled equation.
    pub a: f64,
    /// Angular rate of the helicoidal motion.
    pub omega: f64,
}

impl SledParams {
    pub fn new(lambda_amc: f64, a: f64, omega: f64) -> Result<Self> {
        if !(lambda_amc.is_finite() && a.is_finite() && omega.is_finite()) {
            return Err(invalid("sled parameters must be finite"));
        }
        if omega == 0.0 {
            return Err(invalid("omega must be nonzero"));
        }
        Ok(Self {
            lambda_amc,
            a,
            omega,
        })
    }

    /// Pitch of the equivalent graph `z = g(r) + pitch * theta`.
    pub fn pitch(&self) -> f64 {
        -1.0 / self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SledState {
    pub eta1: f64,
    pub eta2: f64,
    /// Tangent angle of the generating curve.
    pub phi: f64,
    /// Arc length of the generating curve.
    pub s: f64,
    /// Curvature of the generating curve, `phi' = -kappa`.
    pub kappa: f64,
}

/// `c`, `nu3`, `G` and `g1` at `eta1`.
#[derive(Debug, Clone, Copy)]
struct SledCoeffs {
    big_g: f64,
    g1: f64,
}

fn coeffs(p: &SledParams, profile: &AnisotropyProfile, eta1: f64) -> Result<SledCoeffs> {
    let w = p.omega;
    let c = 1.0 / (1.0 + w * w * eta1 * eta1).sqrt();
    let nu3 = w * eta1 * c;
    let mu2 = profile.mu2(nu3)?;
    let inv_mu1 = profile.inv_mu1(nu3)?;
    Ok(SledCoeffs {
        big_g: c / mu2,
        g1: -w * w * c * c * c * inv_mu1,
    })
}

/// Normal component `nu3 = omega eta1 / sqrt(1 + omega^2 eta1^2)`.
pub fn sled_nu3(omega: f64, eta1: f64) -> f64 {
    omega * eta1 / (1.0 + omega * omega * eta1 * eta1).sqrt()
}

/// `F(eta1, eta2)`; zero on the sled.
pub fn eq_h_residual(
    params: &SledParams,
    profile: &AnisotropyProfile,
    eta1: f64,
    eta2: f64,
) -> Result<f64> {
    let k = coeffs(params, profile, eta1)?;
    Ok(params.lambda_amc * (eta1 * eta1 + eta2 * eta2) + 2.0 * eta2 * k.big_g + params.a)
}

/// Quarter discriminant of `F` as a quadratic in `eta2`:
/// `(1 - nu3^2)/mu2^2 - Lambda^2 eta1^2 - Lambda A`.
pub fn discriminant(params: &SledParams, profile: &AnisotropyProfile, eta1: f64) -> Result<f64> {
    let k = coeffs(params, profile, eta1)?;
    let l = params.lambda_amc;
    Ok(k.big_g * k.big_g - l * l * eta1 * eta1 - l * params.a)
}

/// Solves `F(eta1, eta2) = 0` for `eta2` on the requested branch.
/// `Plus`/`Minus` pick `(-G +/- sqrt(disc)) / Lambda`; the branch is
/// ignored when `Lambda = 0` and the equation is linear.
pub fn solve_eta2(
    params: &SledParams,
    profile: &AnisotropyProfile,
    eta1: f64,
    branch: Branch,
) -> Result<f64> {
    let k = coeffs(params, profile, eta1)?;
    let l = params.lambda_amc;
    let g = k.big_g;
    let c0 = l * eta1 * eta1 + params.a;
    let eta2 = if l == 0.0 {
        if g == 0.0 {
            return Err(Error::DegenerateEquation);
        }
        -params.a / (2.0 * g)
    } else {
        let disc = g * g - l * c0;
        if disc < 0.0 {
            return Err(Error::NoRealRoot {
                eta1,
                discriminant: disc,
            });
        }
        let root = disc.sqrt();
        let sign_g = if g >= 0.0 { 1.0 } else { -1.0 };
        let q = -(g + sign_g * root);
        // q / l is the root of larger magnitude, c0 / q the other one.
        let (far, near) = if q != 0.0 {
            (q / l, c0 / q)
        } else {
            (0.0, 0.0)
        };
        let (plus, minus) = if sign_g > 0.0 {
            (near, far)
        } else {
            (far, near)
        };
        match branch {
            Branch::Plus => plus,
            Branch::Minus => minus,
        }
    };
    Ok(polish_eta2(l, g, params.a, eta1, eta2))
}

fn polish_eta2(l: f64, g: f64, a: f64, eta1: f64, mut eta2: f64) -> f64 {
    let f = |e: f64| l * (eta1 * eta1 + e * e) + 2.0 * e * g + a;
    for _ in 0..4 {
        let r = f(eta2);
        let d = 2.0 * (l * eta2 + g);
        if r == 0.0 || d.abs() < 1e-8 {
            break;
        }
        let next = eta2 - r / d;
        if f(next).abs() >= r.abs() {
            break;
        }
        eta2 = next;
    }
    eta2
}

/// Maximal closed `eta1` intervals on which the sled equation has a real
/// root. A tangency (zero-width admissible set) is reported as `[t, t]`.
pub fn discriminant_domain(
    params: &SledParams,
    profile: &AnisotropyProfile,
) -> Result<Vec<(f64, f64)>> {
    let l = params.lambda_amc;
    if l == 0.0 {
        return Err(invalid("discriminant domain needs Lambda != 0"));
    }
    // (1 - nu^2) / mu2^2 bounds G^2 from above.
    let mut peak = 0.0f64;
    for nu3 in profile.sample_grid(2001) {
        let inv = profile.inv_mu2(nu3)?;
        peak = peak.max((1.0 - nu3 * nu3) * inv * inv);
    }
    let headroom = peak - l * params.a;
    if headroom < -1e-10 {
        return Err(Error::EmptyDomain);
    }
    let reach = 1.05 * headroom.max(0.0).sqrt() / l.abs() + 1e-3;
    let disc = |t: f64| discriminant(params, profile, t).unwrap_or(f64::NEG_INFINITY);

    const N: usize = 4001;
    let grid: Vec<f64> = (0..N)
        .map(|k| -reach + 2.0 * reach * k as f64 / (N - 1) as f64)
        .map(|t| if t.abs() < 1e-15 { 0.0 } else { t })
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&t| disc(t)).collect();
    let edge = |inside: f64, outside: f64| {
        if outside == f64::NEG_INFINITY || disc(outside).is_infinite() {
            bisect(
                |t| if disc(t).is_finite() { 1.0 } else { -1.0 },
                inside,
                outside,
            )
        } else {
            bisect(disc, inside, outside)
        }
    };

    let mut out = Vec::new();
    let mut k = 0;
    while k < N {
        if vals[k] >= 0.0 {
            let start = k;
            while k + 1 < N && vals[k + 1] >= 0.0 {
                k += 1;
            }
            let lo = if start == 0 {
                grid[0]
            } else {
                edge(grid[start], grid[start - 1])
            };
            let hi = if k == N - 1 {
                grid[N - 1]
            } else {
                edge(grid[k], grid[k + 1])
            };
            out.push((lo, hi));
        }
        k += 1;
    }
    if !out.is_empty() {
        return Ok(out);
    }

    // No sample is admissible: look for a tangency near the best sample.
    let (best, _) =
        vals.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(N - 1)]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if disc(x1) < disc(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    let t = 0.5 * (a + b);
    if disc(t) >= -1e-10 {
        Ok(vec![(t, t)])
    } else {
        Err(Error::EmptyDomain)
    }
}

/// Sled point at `eta1 = 0` on the chosen branch with `phi = s = 0`.
pub fn start_state(
    params: &SledParams,
    profile: &AnisotropyProfile,
    branch: Branch,
) -> Result<SledState> {
    let eta2 = solve_eta2(params, profile, 0.0, branch)?;
    let kappa = curvature(params, profile, 0.0, eta2)?.ok_or(Error::SingularTurning { s: 0.0 })?;
    Ok(SledState {
        eta1: 0.0,
        eta2,
        phi: 0.0,
        s: 0.0,
        kappa,
    })
}

/// Curvature of the generating curve at a sled point, `None` if the
/// turning relation degenerates there.
pub fn curvature(
    params: &SledParams,
    profile: &AnisotropyProfile,
    eta1: f64,
    eta2: f64,
) -> Result<Option<f64>> {
    let k = coeffs(params, profile, eta1)?;
    let den = k.big_g - k.g1 * eta2 * eta2;
    let scale = k.big_g.abs() + (k.g1 * eta2 * eta2).abs();
    if den.abs() <= 1e-12 * scale.max(1e-300) {
        return Ok(None);
    }
    Ok(Some((params.lambda_amc + eta2 * k.g1) / den))
}

type Y = [f64; 3];

fn rhs(params: &SledParams, profile: &AnisotropyProfile, y: &Y) -> Result<Option<(Y, f64)>> {
    Ok(curvature(params, profile, y[0], y[1])?.map(|k| ([-1.0 - k * y[1], k * y[0], -k], k)))
}

fn rk4(params: &SledParams, profile: &AnisotropyProfile, y: &Y, h: f64) -> Result<Option<Y>> {
    let add = |y: &Y, k: &Y, f: f64| [y[0] + f * k[0], y[1] + f * k[1], y[2] + f * k[2]];
    let Some((k1, _)) = rhs(params, profile, y)? else {
        return Ok(None);
    };
    let Some((k2, _)) = rhs(params, profile, &add(y, &k1, 0.5 * h))? else {
        return Ok(None);
    };
    let Some((k3, _)) = rhs(params, profile, &add(y, &k2, 0.5 * h))? else {
        return Ok(None);
    };
    let Some((k4, _)) = rhs(params, profile, &add(y, &k3, h))? else {
        return Ok(None);
    };
    Ok(Some([
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        y[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]))
}

/// Pulls `(eta1, eta2)` back onto `F = 0` along the gradient of `F`.
fn project(params: &SledParams, profile: &AnisotropyProfile, y: &mut Y) -> Result<f64> {
    let l = params.lambda_amc;
    let mut f = eq_h_residual(params, profile, y[0], y[1])?;
    for _ in 0..8 {
        if f.abs() < 1e-14 {
            break;
        }
        let k = coeffs(params, profile, y[0])?;
        let f1 = 2.0 * y[0] * (l + y[1] * k.g1);
        let f2 = 2.0 * (l * y[1] + k.big_g);
        let norm2 = f1 * f1 + f2 * f2;
        if norm2 == 0.0 {
            break;
        }
        let cand = [y[0] - f * f1 / norm2, y[1] - f * f2 / norm2, y[2]];
        let fc = eq_h_residual(params, profile, cand[0], cand[1])?;
        if fc.abs() >= f.abs() {
            break;
        }
        *y = cand;
        f = fc;
    }
    Ok(f)
}

fn turning_denominator(params: &SledParams, profile: &AnisotropyProfile, y: &Y) -> Result<f64> {
    let k = coeffs(params, profile, y[0])?;
    Ok(k.big_g - k.g1 * y[1] * y[1])
}

/// One projected step of length `h`, halving while the turning relation
/// degenerates or its denominator changes sign inside the step.
fn advance(params: &SledParams, profile: &AnisotropyProfile, y: &Y, s: f64, h: f64) -> Result<Y> {
    if let Some(mut next) = rk4(params, profile, y, h)? {
        project(params, profile, &mut next)?;
        let d0 = turning_denominator(params, profile, y)?;
        let d1 = turning_denominator(params, profile, &next)?;
        if (d0 < 0.0) == (d1 < 0.0) {
            return Ok(next);
        }
    }
    let half = 0.5 * h;
    if half.abs() < MIN_STEP {
        return Err(Error::SingularTurning { s });
    }
    let mid = advance(params, profile, y, s, half)?;
    advance(params, profile, &mid, s + half, half)
}

/// Integrates the sled from `start` over `s in [start.s, start.s + s_max]`
/// with a fixed fourth-order step, projecting back onto `F = 0` after
/// every step. The step is shrunk slightly so it divides `s_max`.
pub fn trace_sled(
    params: &SledParams,
    profile: &AnisotropyProfile,
    start: SledState,
    s_max: f64,
    step: f64,
) -> Result<Vec<SledState>> {
    if !(step > 0.0 && s_max > 0.0 && step.is_finite() && s_max.is_finite()) {
        return Err(invalid("step and s_max must be positive"));
    }
    let f0 = eq_h_residual(params, profile, start.eta1, start.eta2)?;
    if f0.abs() > 1e-10 {
        return Err(invalid(format!("start state is off the sled (F = {f0:e})")));
    }
    let n = (s_max / step).ceil() as usize;
    let h = s_max / n as f64;
    let mut y = [start.eta1, start.eta2, start.phi];
    let mut out = Vec::with_capacity(n + 1);
    let state = |y: &Y, s: f64| -> Result<SledState> {
        let kappa = curvature(params, profile, y[0], y[1])?.ok_or(Error::SingularTurning { s })?;
        Ok(SledState {
            eta1: y[0],
            eta2: y[1],
            phi: y[2],
            s,
            kappa,
        })
    };
    out.push(state(&y, start.s)?);
    for i in 0..n {
        let s = start.s + i as f64 * h;
        y = advance(params, profile, &y, s, h)?;
        let f = eq_h_residual(params, profile, y[0], y[1])?;
        if f.abs() >= TRACE_TOLERANCE {
            return Err(invalid(format!("projection failed at s = {s}: F = {f:e}")));
        }
        out.push(state(&y, start.s + (i + 1) as f64 * h)?);
    }
    Ok(out)
}

/// First return of a traced sled to its starting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SledLoop {
    /// Arc length of the generating curve per sled revolution.
    pub period: f64,
    /// Change of the tangent angle over one period.
    pub phase: f64,
    /// Distance between the start and the returned sled point.
    pub closure: f64,
}

/// Locates the first time the trace comes back through `eta1 = start.eta1`
/// in the starting direction close to the starting point. The crossing
/// is refined by re-integrating a single RK4 step of variable length.
pub fn find_loop(
    params: &SledParams,
    profile: &AnisotropyProfile,
    states: &[SledState],
) -> Result<Option<SledLoop>> {
    let Some(first) = states.first() else {
        return Ok(None);
    };
    let dir0 = -1.0 - first.kappa * first.eta2;
    let scale = first.eta1.hypot(first.eta2).max(1e-3);
    for k in 2..states.len() {
        let (a, b) = (&states[k - 1], &states[k]);
        let da = a.eta1 - first.eta1;
        let db = b.eta1 - first.eta1;
        let crosses = if dir0 < 0.0 {
            da > 0.0 && db <= 0.0
        } else {
            da < 0.0 && db >= 0.0
        };
        if !crosses || (b.eta2 - first.eta2).abs() > 0.05 * scale + 0.05 {
            continue;
        }
        let y = [a.eta1, a.eta2, a.phi];
        let h = b.s - a.s;
        let tau = bisect(
            |t| match rk4(params, profile, &y, t) {
                Ok(Some(v)) => v[0] - first.eta1,
                _ => f64::NAN,
            },
            0.0,
            h,
        );
        let Some(end) = rk4(params, profile, &y, tau)? else {
            return Ok(None);
        };
        return Ok(Some(SledLoop {
            period: a.s + tau - first.s,
            phase: end[2] - first.phi,
            closure: (end[0] - first.eta1).hypot(end[1] - first.eta2),
        }));
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    /// Tangent angle, `x_s + i y_s = e^{i phi}`.
    pub phi: f64,
}

impl CurveSample {
    pub fn eta(&self) -> (f64, f64) {
        let (sp, cp) = self.phi.sin_cos();
        (-(self.x * cp + self.y * sp), self.x * sp - self.y * cp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratingCurve {
    pub samples: Vec<CurveSample>,
}

impl GeneratingCurve {
    /// Keeps every `stride`-th sample (and always the last one when it
    /// falls on the stride).
    pub fn subsampled(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        Self {
            samples: self.samples.iter().step_by(stride).copied().collect(),
        }
    }
}

/// Recovers the generating curve, `x + i y = -(eta1 + i eta2) e^{i phi}`.
pub fn generating_curve(states: &[SledState]) -> Result<GeneratingCurve> {
    if states.is_empty() {
        return Err(invalid("empty sled trace"));
    }
    if states.windows(2).any(|w| !(w[1].s > w[0].s)) {
        return Err(invalid("sled trace must have increasing s"));
    }
    let samples = states
        .iter()
        .map(|st| {
            let (sp, cp) = st.phi.sin_cos();
            CurveSample {
                s: st.s,
                x: -(st.eta1 * cp - st.eta2 * sp),
                y: -(st.eta1 * sp + st.eta2 * cp),
                phi: st.phi,
            }
        })
        .collect();
    Ok(GeneratingCurve { samples })
}

#[derive(Debug, Clone)]
pub struct HelicoidalMesh {
    /// Row-major `(curve sample, theta)` vertex lattice with analytic normals.
    pub mesh: TriMesh,
    pub params: SledParams,
    pub rows: usize,
    pub cols: usize,
    pub thetas: Vec<f64>,
    /// Largest angle (radians) between the analytic normal and the
    /// area-weighted discrete normal over interior lattice vertices.
    pub normal_deviation: f64,
}

/// Sweeps the generating curve under the helicoidal motion over
/// `turns` full rotations, `X(s, t) = ((x + i y) e^{-i omega t}, t + offset)`.
/// Normals are `X_s x X_t / |X_s x X_t|`, whose vertical component is
/// `omega eta1 / sqrt(1 + omega^2 eta1^2)`.
pub fn sweep(
    curve: &GeneratingCurve,
    params: &SledParams,
    theta_samples: usize,
    turns: f64,
    offset: f64,
) -> Result<HelicoidalMesh> {
    sweep_with(Exec::default(), curve, params, theta_samples, turns, offset)
}

pub fn sweep_with(
    exec: Exec,
    curve: &GeneratingCurve,
    params: &SledParams,
    theta_samples: usize,
    turns: f64,
    offset: f64,
) -> Result<HelicoidalMesh> {
    if theta_samples < 3 {
        return Err(invalid("sweep needs at least 3 theta samples"));
    }
    if !(turns > 0.0) {
        return Err(invalid("turns must be positive"));
    }
    let rows = curve.samples.len();
    if rows < 2 {
        return Err(invalid("generating curve needs at least 2 samples"));
    }
    for (k, w) in curve.samples.windows(2).enumerate() {
        if (w[1].x - w[0].x).hypot(w[1].y - w[0].y) < 1e-14 {
            return Err(Error::DegenerateFace {
                index: k,
                next: k + 1,
            });
        }
    }
    let w = params.omega;
    let span = 2.0 * std::f64::consts::PI * turns / w.abs();
    let cols = theta_samples;
    let thetas: Vec<f64> = (0..cols)
        .map(|j| span * j as f64 / (cols - 1) as f64)
        .collect();
    let samples = &curve.samples;

    let mut mesh = grid_surface(rows, cols, false, false, |i, j| {
        let c = &samples[i];
        let (sn, cs) = (-w * thetas[j]).sin_cos();
        Vector3::new(c.x * cs - c.y * sn, c.x * sn + c.y * cs, thetas[j] + offset)
    });
    let normals = map_indexed(exec, rows * cols, |k| {
        let (i, j) = (k / cols, k % cols);
        let c = &samples[i];
        let (eta1, _) = c.eta();
        let norm = (1.0 + w * w * eta1 * eta1).sqrt();
        // -i e^{i (phi - omega t)}
        let ang = c.phi - w * thetas[j];
        Vector3::new(ang.sin() / norm, -ang.cos() / norm, w * eta1 / norm)
    });

    let discrete = mesh.vertex_normals();
    let interior = mesh.interior_vertices();
    let normal_deviation = (0..rows * cols)
        .filter(|&k| interior[k])
        .map(|k| discrete[k].dot(&normals[k]).clamp(-1.0, 1.0).acos())
        .fold(0.0, f64::max);
    mesh.normals = Some(normals);
    Ok(HelicoidalMesh {
        mesh,
        params: *params,
        rows,
        cols,
        thetas,
        normal_deviation,
    })
}

/// Cylinder of radius `r` as a sled fixed point: `Lambda = -1/(r mu2(0))`,
/// `A = -r / mu2(0)`, so `Lambda A = 1 / mu2(0)^2`.
pub fn cylinder_params(profile: &AnisotropyProfile, r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(invalid("cylinder radius must be positive"));
    }
    if !profile.domain.contains(0.0) {
        return Err(Error::Domain {
            nu3: 0.0,
            lo: profile.domain.lo,
            hi: profile.domain.hi,
        });
    }
    let mu2 = profile.mu2(0.0)?;
    Ok((-1.0 / (r * mu2), -r / mu2))
}
