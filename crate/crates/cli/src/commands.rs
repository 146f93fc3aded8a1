//! Command dispatch. Every command computes all of its results in memory
//! first and only then writes them, so a numerical failure leaves no files.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use counterpdc::design::{
    grating_period, optimize_pump_width, separability_residual, sweep_degenerate, sweep_tuning,
    wavelength_steps, OptimizerFlag, SeparabilityCheck, SweepRow,
};
use counterpdc::dispersion::SellmeierLibrary;
use counterpdc::export::{self, write_atomic, JsaMeta};
use counterpdc::jsa::{auto_grid, build_jsa, marginal_spectra, JointSpectralAmplitude, Process, ProcessConfig};
use counterpdc::schmidt::decompose;
use counterpdc::units::nm_from_omega;

use crate::config::{Format, RunConfig};
use crate::Command;

#[derive(Debug)]
pub enum Failure {
    Numerical(String),
    Io(String),
}

/// Files produced by a command, written only once everything succeeded.
struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { files: Vec::new() }
    }

    fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }
}

fn numerical(cfg: &RunConfig, e: counterpdc::Error) -> Failure {
    Failure::Numerical(format!(
        "{e} (material {}, pump {} nm / {} nm FWHM, grating {})",
        cfg.material.name,
        cfg.pump.center_nm,
        cfg.pump.fwhm_nm,
        cfg.grating
            .period_um
            .map(|p| format!("{p} µm"))
            .unwrap_or_else(|| "solved at degeneracy".into())
    ))
}

pub fn run(command: Command, cfg: &RunConfig, library: &SellmeierLibrary) -> Result<(), Failure> {
    let started = unix_seconds();
    let num = |e| numerical(cfg, e);
    let format = cfg.output.format;
    let mut out = Outputs::new();
    let mut report = String::new();

    match command {
        Command::Validate => {
            let resolved = toml::to_string_pretty(cfg).map_err(|e| Failure::Io(e.to_string()))?;
            println!("{resolved}");
            println!("configuration is valid");
            return Ok(());
        }
        Command::Grating => {
            let pc = cfg.process(library).map_err(num)?;
            let probe = Process::with_library(pc, library).map_err(num)?;
            let lp = cfg.pump.center_nm;
            let (ls, li) = grating_targets(cfg);
            let g = grating_period(&probe, lp, ls, li).map_err(num)?;
            let _ = writeln!(report, "grating period Λ = {g:.6} µm (pump {lp} nm, signal {ls} nm, idler {li} nm)");
            let row = GratingRow {
                lambda_p_nm: lp,
                lambda_s_nm: ls,
                lambda_i_nm: li,
                grating_um: g,
            };
            out.add(file("grating", format), table(format, "lambda_p_nm, lambda_s_nm, lambda_i_nm, grating_um", &[row], |r| {
                format!("{}, {}, {}, {}", r.lambda_p_nm, r.lambda_s_nm, r.lambda_i_nm, r.grating_um)
            }));
        }
        Command::Jsa => {
            let (process, jsa) = jsa(cfg, library).map_err(num)?;
            let (s, i) = marginal_spectra(&jsa);
            let sf = s.fwhm_nm().map_err(num)?;
            let idf = i.fwhm_nm().map_err(num)?;
            let _ = writeln!(
                report,
                "JSA {}x{} with grating {:.6} µm; signal FWHM {sf:.4} nm at {:.4} nm, idler FWHM {idf:.4} nm at {:.4} nm",
                jsa.shape().0,
                jsa.shape().1,
                process.config().grating_period_um,
                s.center_nm().map_err(num)?,
                i.center_nm().map_err(num)?
            );
            match format {
                Format::Csv => {
                    out.add("jsa.csv", export::jsa_csv(&jsa));
                    out.add("jsa_meta.json", export::to_json(&JsaMeta::of(&jsa)));
                    out.add("marginal_signal.csv", export::marginal_csv(&s));
                    out.add("marginal_idler.csv", export::marginal_csv(&i));
                }
                Format::Json => {
                    out.add("jsa.json", export::jsa_json(&jsa));
                    out.add("marginal_signal.json", export::marginal_json(&s));
                    out.add("marginal_idler.json", export::marginal_json(&i));
                }
            }
        }
        Command::Schmidt => {
            let (_, jsa) = jsa(cfg, library).map_err(num)?;
            let r = decompose(&jsa, cfg.command.schmidt.max_modes).map_err(num)?;
            let _ = writeln!(
                report,
                "λ0 = {:.6}, purity = {:.6}, K = {:.6}, tail mass = {:.3e} over {} modes",
                r.lambda0(),
                r.purity(),
                r.schmidt_number(),
                r.tail_mass,
                r.coefficients.len()
            );
            match format {
                Format::Csv => {
                    out.add("schmidt.csv", export::schmidt_csv(&r));
                    out.add("schmidt_summary.json", export::schmidt_summary_json(&r));
                }
                Format::Json => out.add("schmidt.json", export::schmidt_json(&r)),
            }
        }
        Command::Angle => {
            let process = Process::with_library(cfg.process(library).map_err(num)?, library).map_err(num)?;
            let (ws, wi) = process.phasematched_point().map_err(num)?;
            let theta = process.phasematching_angle(ws, wi).map_err(num)?;
            let check = separability_residual(&process, ws, wi, process.sigma()).map_err(num)?;
            let row = AngleRow {
                lambda_s_nm: nm_from_omega(ws),
                lambda_i_nm: nm_from_omega(wi),
                theta_deg: theta,
                check,
            };
            let _ = writeln!(
                report,
                "θ = {theta:.4}° at signal {:.4} nm / idler {:.4} nm; separability residual {:.4} ({}){}",
                row.lambda_s_nm,
                row.lambda_i_nm,
                check.residual,
                if check.signal_slower_than_pump { "v_s < v_p" } else { "v_s >= v_p" },
                check
                    .root_fwhm_nm
                    .map(|w| format!(", root at pump FWHM {w:.4} nm"))
                    .unwrap_or_else(|| ", no root".into())
            );
            out.add(
                file("angle", format),
                table(
                    format,
                    "lambda_s_nm, lambda_i_nm, theta_deg, eq4_residual, slope_product_s2_per_um2, signal_slower_than_pump, root_fwhm_nm",
                    &[row],
                    |r| {
                        format!(
                            "{}, {}, {}, {}, {}, {}, {}",
                            r.lambda_s_nm,
                            r.lambda_i_nm,
                            r.theta_deg,
                            r.check.residual,
                            r.check.slope_product,
                            r.check.signal_slower_than_pump,
                            r.check.root_fwhm_nm.unwrap_or(f64::NAN)
                        )
                    },
                ),
            );
        }
        Command::OptimizePump => {
            let process = Process::with_library(cfg.process(library).map_err(num)?, library).map_err(num)?;
            let [lo, hi] = cfg.command.optimize_pump.bounds_nm;
            let opt = optimize_pump_width(&process, (lo, hi), &cfg.optimizer()).map_err(num)?;
            let _ = writeln!(
                report,
                "optimum pump FWHM {:.4} nm in [{lo}, {hi}] nm: λ0 = {:.6}, purity = {:.6}{}",
                opt.pump_fwhm_nm,
                opt.lambda0,
                opt.schmidt.purity(),
                flags_note(&opt.flags)
            );
            let mut trace: Vec<TraceRow> = opt
                .search
                .evaluations
                .iter()
                .map(|&(w, l)| TraceRow {
                    pump_fwhm_nm: w,
                    lambda0: l,
                    source: "golden",
                })
                .collect();
            trace.extend(opt.spot_checks.iter().map(|&(w, l)| TraceRow {
                pump_fwhm_nm: w,
                lambda0: l,
                source: "spot_check",
            }));
            out.add(
                file("optimize_pump_trace", format),
                table(format, "pump_fwhm_nm, lambda0, source", &trace, |r| {
                    format!("{}, {}, {}", r.pump_fwhm_nm, r.lambda0, r.source)
                }),
            );
            out.add(
                "optimize_pump_summary.json",
                export::to_json(&OptimumSummary {
                    pump_fwhm_opt_nm: opt.pump_fwhm_nm,
                    bounds_nm: [lo, hi],
                    schmidt: opt.schmidt.summary(),
                    flags: &opt.flags,
                    final_bracket_nm: opt.search.brackets.last().copied(),
                }),
            );
        }
        Command::SweepDegenerate => {
            let d = &cfg.command.sweep_degenerate;
            let base = cfg.process(library).map_err(num)?;
            let steps = wavelength_steps(d.start_nm, d.stop_nm, d.step_nm).map_err(num)?;
            let rows = sweep_degenerate(&base, library, &steps, (d.bounds_nm[0], d.bounds_nm[1]), &cfg.optimizer());
            summarize_rows(&mut report, &rows);
            out.add(file("sweep_degenerate", format), sweep(format, &rows));
        }
        Command::SweepTuning => {
            let t = &cfg.command.sweep_tuning;
            let base = ProcessConfig {
                grating_period_um: f64::INFINITY,
                ..cfg.process(library).map_err(num)?
            };
            let pumps = wavelength_steps(t.start_nm, t.stop_nm, t.step_nm).map_err(num)?;
            let rows = sweep_tuning(
                &base,
                library,
                t.reference_pump_nm,
                &pumps,
                (t.bounds_nm[0], t.bounds_nm[1]),
                &cfg.optimizer(),
            )
            .map_err(num)?;
            summarize_rows(&mut report, &rows);
            out.add(file("sweep_tuning", format), sweep(format, &rows));
        }
    }

    write_outputs(command, cfg, &out, started)?;
    print!("{report}");
    Ok(())
}

fn grating_targets(cfg: &RunConfig) -> (f64, f64) {
    let lp = cfg.pump.center_nm;
    let g = &cfg.command.grating;
    match (g.signal_nm, g.idler_nm) {
        (Some(s), Some(i)) => (s, i),
        (Some(s), None) => (s, 1.0 / (1.0 / lp - 1.0 / s)),
        (None, Some(i)) => (1.0 / (1.0 / lp - 1.0 / i), i),
        (None, None) => (2.0 * lp, 2.0 * lp),
    }
}

fn jsa(cfg: &RunConfig, library: &SellmeierLibrary) -> counterpdc::Result<(Process, JointSpectralAmplitude)> {
    let process = Process::with_library(cfg.process(library)?, library)?;
    let grid = auto_grid(&process, &cfg.grid)?;
    let jsa = build_jsa(&grid, &process)?;
    Ok((process, jsa))
}

fn flags_note(flags: &[OptimizerFlag]) -> String {
    if flags.is_empty() {
        String::new()
    } else {
        format!(" [flags: {flags:?}]")
    }
}

fn summarize_rows(report: &mut String, rows: &[SweepRow]) {
    for r in rows {
        if r.is_ok() {
            let _ = writeln!(
                report,
                "λp {:.2} nm: λs {:.3} nm, λi {:.3} nm, Λ {:.5} µm, Δλp {:.4} nm, λ0 {:.5}, θ {:.3}° ({})",
                r.pump_nm,
                r.signal_nm,
                r.idler_nm,
                r.grating_um,
                r.pump_fwhm_opt_nm,
                r.lambda0,
                r.theta_deg,
                r.status()
            );
        } else {
            let _ = writeln!(report, "λp {:.2} nm: failed: {}", r.pump_nm, r.error.as_deref().unwrap_or(""));
        }
    }
}

fn file(stem: &str, format: Format) -> String {
    match format {
        Format::Csv => format!("{stem}.csv"),
        Format::Json => format!("{stem}.json"),
    }
}

fn sweep(format: Format, rows: &[SweepRow]) -> String {
    match format {
        Format::Csv => export::sweep_csv(rows),
        Format::Json => export::sweep_json(rows),
    }
}

fn table<T: Serialize>(format: Format, header: &str, rows: &[T], line: impl Fn(&T) -> String) -> String {
    match format {
        Format::Json => export::to_json(rows),
        Format::Csv => {
            let mut s = format!("{header}\n");
            for r in rows {
                s.push_str(&line(r));
                s.push('\n');
            }
            s
        }
    }
}

#[derive(Serialize)]
struct GratingRow {
    lambda_p_nm: f64,
    lambda_s_nm: f64,
    lambda_i_nm: f64,
    grating_um: f64,
}

#[derive(Serialize)]
struct AngleRow {
    lambda_s_nm: f64,
    lambda_i_nm: f64,
    theta_deg: f64,
    #[serde(flatten)]
    check: SeparabilityCheck,
}

#[derive(Serialize)]
struct TraceRow {
    pump_fwhm_nm: f64,
    lambda0: f64,
    source: &'static str,
}

#[derive(Serialize)]
struct OptimumSummary<'a> {
    pump_fwhm_opt_nm: f64,
    bounds_nm: [f64; 2],
    schmidt: counterpdc::schmidt::SchmidtSummary,
    flags: &'a [OptimizerFlag],
    final_bracket_nm: Option<(f64, f64)>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    started_unix_s: f64,
    finished_unix_s: f64,
    files: Vec<&'a str>,
    config: &'a RunConfig,
}

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn write_outputs(command: Command, cfg: &RunConfig, out: &Outputs, started: f64) -> Result<(), Failure> {
    let dir: &Path = &cfg.output.dir;
    let io = |what: &str, e: std::io::Error| Failure::Io(format!("{what} {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(|e| io("cannot create output directory", e))?;
    for (name, contents) in &out.files {
        write_atomic(&dir.join(name), contents.as_bytes()).map_err(|e| io(&format!("cannot write {name} in"), e))?;
    }
    let manifest = Manifest {
        tool: "counterpdc",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        started_unix_s: started,
        finished_unix_s: unix_seconds(),
        files: out.files.iter().map(|(n, _)| n.as_str()).collect(),
        config: cfg,
    };
    write_atomic(&dir.join(format!("{}.manifest.json", command.name())), export::to_json(&manifest).as_bytes())
        .map_err(|e| io("cannot write the manifest in", e))
}
