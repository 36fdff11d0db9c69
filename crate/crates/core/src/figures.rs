//! End-to-end twizzler pipelines: sled trace, generating curve, swept
//! mesh, and the variational check of the result, plus the two
//! Rapini–Papoular figure presets.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::anisotropy::AnisotropyProfile;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::io::{write_csv, write_obj, write_svg_polyline, CurveTable};
use crate::twizzler::{
    eq_h_residual, find_loop, generating_curve, start_state, sweep_with, trace_sled, Branch,
    GeneratingCurve, HelicoidalMesh, SledLoop, SledParams, SledState, DEFAULT_STEP,
};
use crate::verify::{verify_mesh, MeshEnergyReport, DEFAULT_RELATIVE_AMPLITUDE};

/// Relative and absolute bounds on the deviation of the variational
/// estimates from the target `Lambda`.
pub const VERIFY_REL: f64 = 1e-2;
pub const VERIFY_ABS: f64 = 2e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub branch: Branch,
    /// Sled integration step.
    pub step: f64,
    /// Arc length to trace; `None` traces one sled loop.
    pub s_max: Option<f64>,
    /// Keep every `stride`-th traced sample as a mesh row.
    pub stride: usize,
    /// Vertex columns per full turn of the helicoidal motion.
    pub theta_per_turn: usize,
    pub turns: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            branch: Branch::Plus,
            step: DEFAULT_STEP,
            s_max: None,
            stride: 40,
            theta_per_turn: 200,
            turns: 1.0,
        }
    }
}

impl PipelineConfig {
    /// Halves both mesh spacings.
    pub fn refined(&self) -> Self {
        Self {
            stride: (self.stride / 2).max(1),
            theta_per_turn: self.theta_per_turn * 2,
            ..*self
        }
    }
}

/// Arc length traced when looking for the first sled loop.
const LOOP_SEARCH: f64 = 60.0;

pub struct Twizzler {
    pub params: SledParams,
    pub states: Vec<SledState>,
    pub sled_loop: Option<SledLoop>,
    pub curve: GeneratingCurve,
    pub mesh: HelicoidalMesh,
    /// Largest `|F|` along the kept trace.
    pub max_h_residual: f64,
}

pub fn build_twizzler(
    exec: Exec,
    profile: &AnisotropyProfile,
    params: &SledParams,
    config: &PipelineConfig,
) -> Result<Twizzler> {
    let start = start_state(params, profile, config.branch)?;
    let (states, sled_loop) = match config.s_max {
        Some(s_max) => {
            let states = trace_sled(params, profile, start, s_max, config.step)?;
            let lp = find_loop(params, profile, &states)?;
            (states, lp)
        }
        None => {
            let mut states = trace_sled(params, profile, start, LOOP_SEARCH, config.step)?;
            let lp = find_loop(params, profile, &states)?;
            if let Some(lp) = lp {
                let n = states.partition_point(|s| s.s <= lp.period + 1e-12 * lp.period);
                states.truncate(n.max(2));
            }
            (states, lp)
        }
    };
    let max_h_residual = states.iter().try_fold(0.0f64, |m, s| {
        eq_h_residual(params, profile, s.eta1, s.eta2).map(|f| m.max(f.abs()))
    })?;
    let curve = generating_curve(&states)?;
    let mut rows = curve.subsampled(config.stride);
    if let (Some(last), Some(kept)) = (curve.samples.last(), rows.samples.last()) {
        if kept.s < last.s {
            rows.samples.push(*last);
        }
    }
    let theta_samples = ((config.theta_per_turn as f64 * config.turns).round() as usize).max(2) + 1;
    let mesh = sweep_with(exec, &rows, params, theta_samples, config.turns, 0.0)?;
    Ok(Twizzler {
        params: *params,
        states,
        sled_loop,
        curve,
        mesh,
        max_h_residual,
    })
}

impl Twizzler {
    /// Variational estimates at all interior vertices against `Lambda`.
    pub fn verify(&self, exec: Exec, profile: &AnisotropyProfile) -> Result<MeshEnergyReport> {
        verify_mesh(
            exec,
            &self.mesh.mesh,
            profile,
            DEFAULT_RELATIVE_AMPLITUDE,
            Some(self.params.lambda_amc),
            |_| true,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Figure {
    Fig1,
    Fig2,
}

impl Figure {
    pub fn profile(self) -> AnisotropyProfile {
        match self {
            Figure::Fig1 => AnisotropyProfile::rapini_papoular(0.2),
            Figure::Fig2 => AnisotropyProfile::rapini_papoular(-0.3),
        }
    }

    pub fn params(self) -> SledParams {
        SledParams::new(1.0, 0.5, 1.0).expect("preset parameters are valid")
    }

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fig1" | "1" => Ok(Figure::Fig1),
            "fig2" | "2" => Ok(Figure::Fig2),
            _ => Err(Error::Parse(format!("unknown figure `{s}` (fig1 or fig2)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FigureRun {
    pub figure: Figure,
    pub profile: String,
    pub params: SledParams,
    pub sled_loop: Option<SledLoop>,
    pub max_h_residual: f64,
    pub vertices: usize,
    pub faces: usize,
    pub mean_estimate: f64,
    pub max_deviation: f64,
    pub pass: bool,
    pub files: Vec<PathBuf>,
}

/// Writes `wulff.obj`, `sled.{csv,svg}`, `curve.{csv,svg}`,
/// `twizzler.obj` and `verify.json` into `outdir`.
pub fn run_figure(exec: Exec, figure: Figure, outdir: &Path) -> Result<FigureRun> {
    std::fs::create_dir_all(outdir)?;
    let profile = figure.profile();
    let params = figure.params();
    let tw = build_twizzler(exec, &profile, &params, &PipelineConfig::default())?;
    let report = tw.verify(exec, &profile)?;
    let pass = report.within(VERIFY_REL, VERIFY_ABS);

    let path = |name: &str| outdir.join(name);
    let mut files = Vec::new();
    let wulff = profile.wulff_mesh(65, 128)?;
    write_obj(&wulff.mesh, path("wulff.obj"))?;
    files.push(path("wulff.obj"));
    write_csv(&CurveTable::from_sled(&tw.states), path("sled.csv"))?;
    files.push(path("sled.csv"));
    let sled: Vec<(f64, f64)> = tw.states.iter().map(|s| (s.eta1, s.eta2)).collect();
    write_svg_polyline(&sled, path("sled.svg"))?;
    files.push(path("sled.svg"));
    write_csv(&CurveTable::from_curve(&tw.curve), path("curve.csv"))?;
    files.push(path("curve.csv"));
    let curve: Vec<(f64, f64)> = tw.curve.samples.iter().map(|c| (c.x, c.y)).collect();
    write_svg_polyline(&curve, path("curve.svg"))?;
    files.push(path("curve.svg"));
    write_obj(&tw.mesh.mesh, path("twizzler.obj"))?;
    files.push(path("twizzler.obj"));
    std::fs::write(path("verify.json"), report.to_json() + "\n")?;
    files.push(path("verify.json"));

    Ok(FigureRun {
        figure,
        profile: profile.to_string(),
        params,
        sled_loop: tw.sled_loop,
        max_h_residual: tw.max_h_residual,
        vertices: tw.mesh.mesh.vertices.len(),
        faces: tw.mesh.mesh.faces.len(),
        mean_estimate: report.mean,
        max_deviation: report.max_deviation,
        pass,
        files,
    })
}
