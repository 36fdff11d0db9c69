#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use camc::fd::Grid;
use camc::figures::{build_twizzler, run_figure, Figure, PipelineConfig, VERIFY_ABS, VERIFY_REL};
use camc::graph::integrate_profile;
use camc::io::{read_obj, write_csv, write_obj, write_svg_polyline, CurveTable};
use camc::pnorm::{
    catenoid_grid, conjugate_helicoid, helicoid_grid, m_operator_residual_with, off_axes, PNormSpec,
};
use camc::twizzler::{Branch, SledParams};
use camc::verify::{verify_mesh, DEFAULT_RELATIVE_AMPLITUDE};
use camc::{AnisotropyProfile, Exec};

#[derive(Parser)]
#[command(
    name = "camc",
    version,
    about = "Helicoidal surfaces of constant anisotropic mean curvature"
)]
struct Cli {
    /// Print a machine-readable run summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Run on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convexity check and OBJ mesh of the Wulff shape.
    Wulff {
        #[arg(long)]
        gamma: AnisotropyProfile,
        #[arg(long, default_value_t = 65)]
        rows: usize,
        #[arg(long, default_value_t = 128)]
        cols: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trace a sled, sweep the twizzler, and check it variationally.
    Twizzler {
        #[arg(long)]
        gamma: AnisotropyProfile,
        #[arg(long = "Lambda", allow_hyphen_values = true)]
        lambda_amc: f64,
        #[arg(long = "A", allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
        #[arg(long, value_enum, default_value_t = BranchArg::Plus)]
        branch: BranchArg,
        #[arg(long, default_value_t = camc::twizzler::DEFAULT_STEP)]
        step: f64,
        /// Arc length to trace; one sled loop when omitted.
        #[arg(long = "s-max")]
        s_max: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        turns: f64,
        #[arg(long, default_value_t = 40)]
        stride: usize,
        #[arg(long = "theta-per-turn", default_value_t = 200)]
        theta_per_turn: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "sled-csv")]
        sled_csv: Option<PathBuf>,
        #[arg(long = "curve-csv")]
        curve_csv: Option<PathBuf>,
        /// Writes `<stem>-sled.svg` and `<stem>-curve.svg` next to this path.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Radial profile of a helicoidal graph z = g(r) + lambda theta.
    Graph {
        #[arg(long)]
        gamma: AnisotropyProfile,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long = "Lambda", allow_hyphen_values = true)]
        lambda_amc: f64,
        #[arg(long = "C", allow_hyphen_values = true)]
        c: f64,
        #[arg(long = "r-min")]
        r_min: f64,
        #[arg(long = "r-max")]
        r_max: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Which root of the first integral to follow at r-min.
        #[arg(long, default_value_t = 0)]
        root: usize,
        #[arg(long, default_value_t = 1.0)]
        turns: f64,
        /// `.csv` for the profile table, `.obj` for the swept surface.
        #[arg(long)]
        out: PathBuf,
    },
    /// p-norm catenoids, their conjugate helicoids, and residual checks.
    Pnorm {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        c: f64,
        #[arg(long, value_enum)]
        mode: PnormMode,
        #[arg(long, value_parser = parse_pair, default_value = "1.5,3")]
        annulus: (f64, f64),
        /// Grid spacing of the residual check.
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Variational Lambda estimates for an OBJ mesh.
    Verify {
        #[arg(long)]
        gamma: AnisotropyProfile,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Expected Lambda; the run fails when estimates stray from it.
        #[arg(long, allow_hyphen_values = true)]
        target: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_RELATIVE_AMPLITUDE)]
        amplitude: f64,
    },
    /// Regenerate the figure pipelines.
    Figures {
        #[arg(long, value_enum, default_value_t = FigureArg::All)]
        which: FigureArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Plus,
    Minus,
}

#[derive(Clone, Copy, ValueEnum)]
enum PnormMode {
    Catenoid,
    Helicoid,
    Check,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig1,
    Fig2,
    All,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `a,b`")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    Ok((a, b))
}

/// Outcome of a subcommand: a JSON summary and whether its checks passed.
struct Outcome {
    summary: Value,
    pass: bool,
}

impl Outcome {
    fn ok(summary: Value) -> Self {
        Self {
            summary,
            pass: true,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    match run(exec, cli.command) {
        Ok(out) => {
            if cli.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&out.summary).expect("summary")
                );
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("camc: verification tolerance not met");
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("camc: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(exec: Exec, command: Command) -> Result<Outcome> {
    match command {
        Command::Wulff {
            gamma,
            rows,
            cols,
            out,
        } => {
            let check = gamma.convexity_check(camc::anisotropy::CONVEXITY_SAMPLES)?;
            let wulff = gamma.wulff_mesh(rows, cols)?;
            write_obj(&wulff.mesh, &out)?;
            Ok(Outcome::ok(json!({
                "profile": gamma.to_string(),
                "convexity": check,
                "noncompact": wulff.noncompact,
                "vertices": wulff.mesh.vertices.len(),
                "out": out,
            })))
        }
        Command::Twizzler {
            gamma,
            lambda_amc,
            a,
            omega,
            branch,
            step,
            s_max,
            turns,
            stride,
            theta_per_turn,
            out,
            sled_csv,
            curve_csv,
            svg,
            report,
        } => {
            let params = SledParams::new(lambda_amc, a, omega)?;
            let config = PipelineConfig {
                branch: match branch {
                    BranchArg::Plus => Branch::Plus,
                    BranchArg::Minus => Branch::Minus,
                },
                step,
                s_max,
                stride,
                theta_per_turn,
                turns,
            };
            if !(step > 0.0) || stride == 0 || theta_per_turn < 2 || !(turns > 0.0) {
                bail!("step, stride, theta-per-turn and turns must be positive");
            }
            let tw = build_twizzler(exec, &gamma, &params, &config)?;
            write_obj(&tw.mesh.mesh, &out)?;
            if let Some(p) = &sled_csv {
                write_csv(&CurveTable::from_sled(&tw.states), p)?;
            }
            if let Some(p) = &curve_csv {
                write_csv(&CurveTable::from_curve(&tw.curve), p)?;
            }
            if let Some(p) = &svg {
                let sled: Vec<(f64, f64)> = tw.states.iter().map(|s| (s.eta1, s.eta2)).collect();
                let curve: Vec<(f64, f64)> = tw.curve.samples.iter().map(|c| (c.x, c.y)).collect();
                write_svg_polyline(&sled, sibling(p, "sled"))?;
                write_svg_polyline(&curve, sibling(p, "curve"))?;
            }
            let rep = tw.verify(exec, &gamma)?;
            if let Some(p) = &report {
                std::fs::write(p, rep.to_json() + "\n")?;
            }
            let pass = rep.within(VERIFY_REL, VERIFY_ABS);
            Ok(Outcome {
                summary: json!({
                    "profile": gamma.to_string(),
                    "params": params,
                    "sled_loop": tw.sled_loop,
                    "samples": tw.states.len(),
                    "max_h_residual": tw.max_h_residual,
                    "vertices": tw.mesh.mesh.vertices.len(),
                    "mean_estimate": rep.mean,
                    "max_deviation": rep.max_deviation,
                    "pass": pass,
                    "out": out,
                }),
                pass,
            })
        }
        Command::Graph {
            gamma,
            lambda,
            lambda_amc,
            c,
            r_min,
            r_max,
            step,
            root,
            turns,
            out,
        } => {
            let prof = integrate_profile(&gamma, lambda, lambda_amc, c, r_min, r_max, step, root)?;
            match extension(&out).as_str() {
                "csv" => {
                    let s = &prof.samples;
                    let table = CurveTable::new()
                        .with_column("r", s.iter().map(|v| v.r).collect())?
                        .with_column("g", s.iter().map(|v| v.g).collect())?
                        .with_column("g_r", s.iter().map(|v| v.g_r).collect())?;
                    write_csv(&table, &out)?;
                }
                "obj" => write_obj(&prof.sweep(129, turns)?, &out)?,
                other => bail!("graph --out must end in .csv or .obj, got `{other}`"),
            }
            Ok(Outcome::ok(json!({
                "profile": gamma.to_string(),
                "samples": prof.samples.len(),
                "g_end": prof.samples.last().map(|s| s.g),
                "out": out,
            })))
        }
        Command::Pnorm {
            p,
            c,
            mode,
            annulus,
            h,
            out,
        } => {
            let spec = PNormSpec::new(p, c)?;
            match mode {
                PnormMode::Catenoid | PnormMode::Helicoid => {
                    let pair = conjugate_helicoid(&spec, annulus, 129)?;
                    let mesh = match mode {
                        PnormMode::Catenoid => pair.catenoid_mesh(128)?,
                        _ => pair.helicoid_mesh(33, 2)?,
                    };
                    write_obj(&mesh, &out)?;
                    Ok(Outcome::ok(json!({
                        "p": spec.p,
                        "q": spec.q,
                        "c": c,
                        "period": pair.period,
                        "vertices": mesh.vertices.len(),
                        "out": out,
                    })))
                }
                PnormMode::Check => {
                    let summary = pnorm_check(exec, &spec, annulus, h)?;
                    std::fs::write(&out, serde_json::to_string_pretty(&summary)? + "\n")?;
                    let pass = summary["pass"].as_bool().unwrap_or(false);
                    Ok(Outcome { summary, pass })
                }
            }
        }
        Command::Verify {
            gamma,
            input,
            report,
            target,
            amplitude,
        } => {
            let mesh = read_obj(&input).with_context(|| format!("reading {}", input.display()))?;
            let rep = verify_mesh(exec, &mesh, &gamma, amplitude, target, |_| true)?;
            std::fs::write(&report, rep.to_json() + "\n")?;
            let pass = target.is_none() || rep.within(VERIFY_REL, VERIFY_ABS);
            Ok(Outcome {
                summary: json!({
                    "profile": gamma.to_string(),
                    "estimates": rep.estimates.len(),
                    "mean": rep.mean,
                    "max_deviation": rep.max_deviation,
                    "pass": pass,
                    "report": report,
                }),
                pass,
            })
        }
        Command::Figures { which, out } => {
            let figs: &[Figure] = match which {
                FigureArg::Fig1 => &[Figure::Fig1],
                FigureArg::Fig2 => &[Figure::Fig2],
                FigureArg::All => &[Figure::Fig1, Figure::Fig2],
            };
            let mut runs = Vec::new();
            for &f in figs {
                runs.push(run_figure(exec, f, &out.join(f.name()))?);
            }
            let pass = runs.iter().all(|r| r.pass);
            Ok(Outcome {
                summary: json!({ "figures": runs, "pass": pass }),
                pass,
            })
        }
    }
}

/// Catenoid and conjugate residuals at spacings `h` and `h/2` over the
/// annulus, plus the period at three radii.
fn pnorm_check(exec: Exec, spec: &PNormSpec, annulus: (f64, f64), h: f64) -> Result<Value> {
    let (lo, hi) = annulus;
    let axes = off_axes(0.25);
    let sp = *spec;
    let mask = move |x: f64, y: f64| {
        let w = sp.omega(x, y);
        w >= lo && w <= hi && (sp.p == 2.0 || axes(x, y))
    };
    let residuals = |grid: &dyn Fn(f64) -> Result<Grid>, exponent: f64| -> Result<(f64, f64)> {
        let coarse = m_operator_residual_with(exec, exponent, &grid(h)?, mask)?;
        let fine = m_operator_residual_with(exec, exponent, &grid(0.5 * h)?, mask)?;
        Ok(coarse.common_max(&fine))
    };
    let (cat_h, cat_h2) = residuals(&|hh| Ok(catenoid_grid(spec, exec, hi, hh)?), spec.q)?;
    let (con_h, con_h2) = residuals(&|hh| Ok(helicoid_grid(spec, exec, hi, hh)), spec.p)?;
    let pair = conjugate_helicoid(spec, annulus, 65)?;
    let periods = [lo, 0.5 * (lo + hi), hi]
        .iter()
        .map(|&a| pair.period_at(a))
        .collect::<camc::Result<Vec<_>>>()?;
    let spread = periods
        .iter()
        .map(|p| (p - pair.period).abs())
        .fold(0.0, f64::max);
    let order = |a: f64, b: f64| (a / b).log2();
    let pass = cat_h < 5e-3
        && con_h < 5e-3
        && order(cat_h, cat_h2) >= 1.8
        && order(con_h, con_h2) >= 1.8
        && spread < 1e-6;
    Ok(json!({
        "p": spec.p,
        "q": spec.q,
        "c": spec.c,
        "h": h,
        "catenoid_residual": [cat_h, cat_h2],
        "conjugate_residual": [con_h, con_h2],
        "catenoid_order": order(cat_h, cat_h2),
        "conjugate_order": order(con_h, con_h2),
        "period": pair.period,
        "periods": periods,
        "pass": pass,
    }))
}

fn extension(p: &Path) -> String {
    p.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn sibling(p: &Path, tag: &str) -> PathBuf {
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    p.with_file_name(format!("{stem}-{tag}.svg"))
}
