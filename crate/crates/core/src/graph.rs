//! Helicoidal graphs `z = g(r) + lambda * theta` of constant anisotropic
//! mean curvature.
//!
//! For such graphs the Euler–Lagrange equation
//! `Div0[(nu3 / mu2) grad z] = Lambda` integrates once in `r`:
//!
//! ```text
//! nu3 r g_r / mu2(nu3) - Lambda r^2 / 2 = C,   nu3 = (1 + g_r^2 + lambda^2 / r^2)^{-1/2}.
//! ```
//!
//! `g` then follows by quadrature. `lambda = 0` gives the anisotropic
//! Delaunay surfaces; `g_r = 0`, `Lambda = C = 0` the classical helicoid.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::anisotropy::AnisotropyProfile;
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::fd::{divergence_residual, Grid, ResidualField};
use crate::mesh::{grid_surface, TriMesh};
use crate::quad::{bisect, HermiteTable};

/// Search range for `g_r`.
pub const SLOPE_RANGE: f64 = 1e6;

fn nu3_of(r: f64, g_r: f64, lambda: f64) -> f64 {
    1.0 / (1.0 + g_r * g_r + lambda * lambda / (r * r)).sqrt()
}

/// `nu3 r g_r / mu2 - Lambda r^2 / 2 - C`.
pub fn first_integral_residual(
    profile: &AnisotropyProfile,
    lambda: f64,
    lambda_amc: f64,
    c: f64,
    r: f64,
    g_r: f64,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid("r must be positive"));
    }
    let nu3 = nu3_of(r, g_r, lambda);
    let mu2 = profile.mu2(nu3)?;
    Ok(nu3 * r * g_r / mu2 - 0.5 * lambda_amc * r * r - c)
}

/// Signed scan points: 0 and `+/- 10^k` for `k` in `[-8, 6]`, 40 per decade.
fn scan_points() -> Vec<f64> {
    let per_decade = 40;
    let decades = 14;
    let mut pos: Vec<f64> = (0..=decades * per_decade)
        .map(|k| 10f64.powf(-8.0 + k as f64 / per_decade as f64))
        .collect();
    pos.dedup();
    let mut all: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
    all.push(0.0);
    all.extend(pos);
    all
}

/// All sign-changing roots `g_r` of the first integral in
/// `[-SLOPE_RANGE, SLOPE_RANGE]`, sorted ascending. Tangential double
/// roots without a sign change are not detected.
pub fn solve_g_r(
    profile: &AnisotropyProfile,
    lambda: f64,
    lambda_amc: f64,
    c: f64,
    r: f64,
) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(invalid("r must be positive"));
    }
    let f =
        |g: f64| first_integral_residual(profile, lambda, lambda_amc, c, r, g).unwrap_or(f64::NAN);
    let pts = scan_points();
    let vals: Vec<f64> = pts.iter().map(|&g| f(g)).collect();
    let mut roots: Vec<f64> = Vec::new();
    for k in 0..pts.len() {
        if vals[k] == 0.0 {
            roots.push(pts[k]);
            continue;
        }
        if k + 1 < pts.len()
            && vals[k].is_finite()
            && vals[k + 1].is_finite()
            && vals[k + 1] != 0.0
            && (vals[k] < 0.0) != (vals[k + 1] < 0.0)
        {
            roots.push(bisect(f, pts[k], pts[k + 1]));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + a.abs()));
    if roots.is_empty() {
        return Err(Error::NoRoot {
            lo: -SLOPE_RANGE,
            hi: SLOPE_RANGE,
        });
    }
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    pub r: f64,
    pub g: f64,
    pub g_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphProfile {
    pub lambda: f64,
    pub lambda_amc: f64,
    pub c: f64,
    pub samples: Vec<GraphSample>,
}

impl GraphProfile {
    /// `z = g(r) + lambda * theta` over `turns` revolutions, upward normal.
    pub fn sweep(&self, theta_samples: usize, turns: f64) -> Result<TriMesh> {
        if theta_samples < 3 || !(turns > 0.0) || self.samples.len() < 2 {
            return Err(invalid(
                "graph sweep needs >= 3 theta samples, turns > 0 and >= 2 radii",
            ));
        }
        let span = 2.0 * std::f64::consts::PI * turns;
        let s = &self.samples;
        Ok(grid_surface(
            s.len(),
            theta_samples,
            false,
            false,
            |i, j| {
                let t = span * j as f64 / (theta_samples - 1) as f64;
                Vector3::new(s[i].r * t.cos(), s[i].r * t.sin(), s[i].g + self.lambda * t)
            },
        ))
    }

    /// Cubic Hermite interpolant of `g` (exact slopes at the nodes).
    /// Requires uniformly spaced radii, which [`integrate_profile`] produces.
    pub fn interpolant(&self) -> HermiteTable {
        let s = &self.samples;
        let n = s.len() - 1;
        let (a, b) = (s[0].r, s[n].r);
        let dr = (b - a) / n as f64;
        let idx = |r: f64| (((r - a) / dr).round() as usize).min(n);
        HermiteTable::build(a, b, n, s[0].g, |_, r, _| s[idx(r)].g, |r| s[idx(r)].g_r)
    }
}

fn nearest(roots: &[f64], target: f64) -> f64 {
    *roots
        .iter()
        .min_by(|a, b| (*a - target).abs().total_cmp(&(*b - target).abs()))
        .expect("non-empty root list")
}

/// Integrates `g` with `g(r_min) = 0` by composite Simpson on a uniform
/// `r` grid, following the `root_index`-th root at `r_min` by
/// nearest-root continuation (midpoints included).
#[allow(clippy::too_many_arguments)]
pub fn integrate_profile(
    profile: &AnisotropyProfile,
    lambda: f64,
    lambda_amc: f64,
    c: f64,
    r_min: f64,
    r_max: f64,
    step: f64,
    root_index: usize,
) -> Result<GraphProfile> {
    if !(r_min > 0.0 && r_max > r_min && step > 0.0) {
        return Err(invalid("need 0 < r_min < r_max and step > 0"));
    }
    let n = ((r_max - r_min) / step).ceil().max(1.0) as usize;
    let h = (r_max - r_min) / n as f64;
    let roots0 = solve_g_r(profile, lambda, lambda_amc, c, r_min)?;
    let mut slope = *roots0.get(root_index).ok_or_else(|| {
        invalid(format!(
            "root index {root_index} out of range ({} roots at r_min)",
            roots0.len()
        ))
    })?;
    let mut last_r = r_min;
    let mut follow = |r: f64, prev: f64| -> Result<f64> {
        match solve_g_r(profile, lambda, lambda_amc, c, r) {
            Ok(roots) => {
                last_r = r;
                Ok(nearest(&roots, prev))
            }
            Err(Error::NoRoot { .. }) => Err(Error::BranchLost { last_r }),
            Err(e) => Err(e),
        }
    };
    let mut samples = Vec::with_capacity(n + 1);
    let mut g = 0.0;
    samples.push(GraphSample {
        r: r_min,
        g,
        g_r: slope,
    });
    for k in 0..n {
        let r0 = r_min + k as f64 * h;
        let r1 = if k + 1 == n {
            r_max
        } else {
            r_min + (k + 1) as f64 * h
        };
        let mid = follow(0.5 * (r0 + r1), slope)?;
        let end = follow(r1, 2.0 * mid - slope)?;
        g += (r1 - r0) / 6.0 * (slope + 4.0 * mid + end);
        slope = end;
        samples.push(GraphSample { r: r1, g, g_r: end });
    }
    Ok(GraphProfile {
        lambda,
        lambda_amc,
        c,
        samples,
    })
}

/// `Div0[(nu3 / mu2) grad z] - Lambda` at interior grid nodes selected by
/// `mask`, second-order in the grid spacing.
pub fn elgraph_residual(
    profile: &AnisotropyProfile,
    z: &Grid,
    lambda_amc: f64,
    mask: impl Fn(f64, f64) -> bool + Send + Sync,
) -> Result<ResidualField> {
    elgraph_residual_with(Exec::default(), profile, z, lambda_amc, mask)
}

pub fn elgraph_residual_with(
    exec: Exec,
    profile: &AnisotropyProfile,
    z: &Grid,
    lambda_amc: f64,
    mask: impl Fn(f64, f64) -> bool + Send + Sync,
) -> Result<ResidualField> {
    divergence_residual(
        exec,
        z,
        lambda_amc,
        |zx, zy| {
            let nu3 = 1.0 / (1.0 + zx * zx + zy * zy).sqrt();
            let a = nu3 * profile.inv_mu2(nu3)?;
            Ok((a * zx, a * zy))
        },
        mask,
    )
}
