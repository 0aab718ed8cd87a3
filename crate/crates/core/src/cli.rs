//! Command implementations behind the `crackfront` binary.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 IO error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analytic::CracktipFunction;
use crate::atsolver::{self, ATConfig, GridDomain};
use crate::competitors::{self, CompetitorLedger, Construction};
use crate::error::{Error, Result};
use crate::postproc::{self, export};
use crate::stationarity::{el_residual, AnalyticCouple, ELResidualReport, QuadratureSettings, TestVectorField};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "crackfront", version, about = "Crack-tip and crack-front toolkit for the Mumford-Shah functional")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weak Euler-Lagrange residuals of an analytic couple over random test fields.
    Verify(VerifyArgs),
    /// Competitor energy ledgers and the thresholds where margins change sign.
    Ledger(LedgerArgs),
    /// Ambrosio-Tortorelli solve with surface extraction and metrics.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CoupleChoice {
    Cracktip2d,
    Crackfront3d,
    Udelta,
    /// `(k phi0, K0)`, a non-stationary control.
    Scaled,
}

#[derive(Debug, clap::Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub couple: CoupleChoice,
    /// Axial slope for `udelta`.
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Factor for the `scaled` couple.
    #[arg(long, default_value_t = 2.0)]
    pub scale: f64,
    /// Randomized test fields, run after the deterministic `eta(0) = e1` field.
    #[arg(long, default_value_t = 6)]
    pub fields: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest accepted normalized residual.
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
    #[arg(long, default_value = "out/verify")]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct LedgerArgs {
    /// cut_ball, drilled_sphere or cylinder_shell.
    #[arg(long)]
    pub construction: String,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Sweep start: R (cut_ball), eps_hole (drilled_sphere) or delta (cylinder_shell).
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Ball radius for drilled_sphere.
    #[arg(long, default_value_t = 12.0)]
    pub radius: f64,
    /// Shrink parameter for cylinder_shell.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value = "out/ledger")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Flat crack front, `delta = 0`.
    Figure1,
    /// Twisted crack front, `delta = 1/2`.
    Figure2,
    /// Empirical `s(delta)` table.
    Sdelta,
    /// Competitor thresholds.
    Threshold,
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    /// Flat key = value configuration file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, default_value = "out/solve")]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the alternation tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Isovalue for surface extraction.
    #[arg(long, default_value_t = postproc::DEFAULT_LEVEL)]
    pub level: f64,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Parse { .. } => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        // Fails only when a pool exists already, which keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Ledger(a) => cmd_ledger(a),
        Command::Solve(a) => cmd_solve(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Run manifest written beside the outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: String,
    pub output: PathBuf,
    pub seed: u64,
    pub version: &'static str,
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: String, output: &Path, seed: u64) -> Self {
        Self {
            subcommand: subcommand.into(),
            config,
            output: output.to_path_buf(),
            seed,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "subcommand = {}\nconfig = {}\noutput = {}\nseed = {}\nversion = {}\ntimestamp = {}\n",
            self.subcommand,
            self.config,
            self.output.display(),
            self.seed,
            self.version,
            self.timestamp
        )
    }

    pub fn write(&self) -> Result<()> {
        export::write_text(&self.output.join("manifest.txt"), &self.to_text())
    }
}

fn couple_of(a: &VerifyArgs) -> Result<AnalyticCouple> {
    Ok(match a.couple {
        CoupleChoice::Cracktip2d => AnalyticCouple::Cracktip(CracktipFunction::cracktip()),
        CoupleChoice::Crackfront3d => AnalyticCouple::CrackFront(CracktipFunction::crack_front()),
        CoupleChoice::Udelta => {
            if !a.delta.is_finite() {
                return Err(Error::InvalidParameter(format!("delta must be finite, got {}", a.delta)));
            }
            AnalyticCouple::CrackFront(CracktipFunction::udelta(a.delta))
        }
        CoupleChoice::Scaled => AnalyticCouple::Cracktip(CracktipFunction::cracktip().scaled(a.scale)),
    })
}

/// CSV rows `couple,delta,eps,bulk,surface,total,error_estimate`: one per
/// excision level and a final `eps = 0` row with the extrapolated limit.
pub fn verify_csv(reports: &[ELResidualReport]) -> String {
    let mut s = String::from("couple,delta,eps,bulk,surface,total,error_estimate\n");
    for r in reports {
        for l in &r.levels {
            let _ = writeln!(
                s,
                "{},{:?},{:?},{:?},{:?},{:?},{:?}",
                r.couple, r.delta, l.eps, l.bulk, r.surface_term, l.total, l.error_estimate
            );
        }
        let _ = writeln!(
            s,
            "{},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.couple, r.delta, 0.0, r.bulk_term, r.surface_term, r.total, r.quadrature_error_estimate
        );
    }
    s
}

/// Residuals over `eta(0) = e1` followed by `fields` randomized fields.
pub fn run_verify(couple: &AnalyticCouple, fields: usize, seed: u64) -> Result<Vec<ELResidualReport>> {
    let s = QuadratureSettings::default();
    TestVectorField::family(couple.dim(), fields, seed)
        .iter()
        .map(|eta| el_residual(couple, eta, &s))
        .collect()
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let couple = couple_of(a)?;
    let reports = run_verify(&couple, a.fields, a.seed)?;
    create_dir(&a.out)?;
    export::write_text(&a.out.join("verify.csv"), &verify_csv(&reports))?;
    RunManifest::new("verify", format!("couple={}", couple.label()), &a.out, a.seed).write()?;
    let mut ok = true;
    for (k, r) in reports.iter().enumerate() {
        let pass = r.normalized <= a.tolerance;
        ok &= pass;
        println!(
            "field {k}: total {:.3e} normalized {:.3e} error estimate {:.1e} {}",
            r.total,
            r.normalized,
            r.quadrature_error_estimate,
            if pass { "ok" } else { "FAIL" }
        );
    }
    println!("{} {}", couple.label(), if ok { "stationary" } else { "NOT stationary" });
    Ok(if ok { EXIT_OK } else { EXIT_NUMERICAL })
}

/// Root of a sign-changing function on `[a, b]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a) < 1e-15 * m.abs().max(1.0) {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn sweep(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite()) || steps < 2 || from >= to {
        return Err(Error::InvalidParameter(format!("invalid sweep {from}..{to} in {steps} steps")));
    }
    Ok((0..steps).map(|k| from + (to - from) * k as f64 / (steps - 1) as f64).collect())
}

/// Ledgers of a parameter sweep and the located sign change, if any.
pub struct LedgerSweep {
    pub ledgers: Vec<CompetitorLedger>,
    pub threshold: Option<f64>,
    pub report: String,
}

pub fn run_ledger(a: &LedgerArgs) -> Result<LedgerSweep> {
    let construction: Construction = a.construction.parse()?;
    let mut report = String::new();
    let (ledgers, threshold) = match construction {
        Construction::CutBall => {
            let rs = sweep(a.from.unwrap_or(1.0), a.to.unwrap_or(20.0), a.steps.unwrap_or(39))?;
            let ledgers = rs
                .iter()
                .map(|&r| competitors::cut_ball_ledger(a.delta, r))
                .collect::<Result<Vec<_>>>()?;
            let margin = |r: f64| competitors::cut_ball_ledger(a.delta, r).map(|l| l.margin).unwrap_or(f64::NAN);
            let t = ledgers
                .windows(2)
                .find(|w| (w[0].margin < 0.0) != (w[1].margin < 0.0))
                .map(|w| bisect(margin, w[0].parameters[1].1, w[1].parameters[1].1));
            match t {
                Some(r) => {
                    let _ = writeln!(report, "cut_ball delta = {}: margin changes sign at R = {r:.12}", a.delta);
                }
                None => {
                    let _ = writeln!(report, "cut_ball delta = {}: no sign change in the sweep", a.delta);
                }
            }
            (ledgers, t)
        }
        Construction::DrilledSphere => {
            let first = a.from.unwrap_or(0.1);
            let holes: Vec<f64> = (0..a.steps.unwrap_or(4)).map(|k| first / 2f64.powi(k as i32)).collect();
            let ledgers = holes
                .iter()
                .map(|&e| competitors::drilled_sphere_ledger(a.delta, a.radius, e))
                .collect::<Result<Vec<_>>>()?;
            let cut = competitors::cut_ball_ledger(a.delta, a.radius)?;
            for l in &ledgers {
                let _ = writeln!(
                    report,
                    "drilled_sphere eps_hole = {}: margin {:.12} (cut_ball {:.12}, gap {:.3e})",
                    l.parameters[2].1,
                    l.margin,
                    cut.margin,
                    l.margin - cut.margin
                );
            }
            (ledgers, None)
        }
        Construction::CylinderShell => {
            let ds = sweep(a.from.unwrap_or(0.0), a.to.unwrap_or(3.0), a.steps.unwrap_or(31))?;
            let ledgers = ds
                .iter()
                .map(|&d| competitors::cylinder_shell_ledger(d, a.eps))
                .collect::<Result<Vec<_>>>()?;
            let limit = |d: f64| {
                competitors::cylinder_shell_ledger(d, a.eps)
                    .ok()
                    .and_then(|l| l.limit)
                    .map(|l| l.margin)
                    .unwrap_or(f64::NAN)
            };
            let t = ledgers
                .windows(2)
                .find(|w| {
                    let (m0, m1) = (w[0].limit.expect("shell limit").margin, w[1].limit.expect("shell limit").margin);
                    (m0 < 0.0) != (m1 < 0.0)
                })
                .map(|w| bisect(limit, w[0].parameters[0].1, w[1].parameters[0].1));
            match t {
                Some(d) => {
                    let _ = writeln!(report, "cylinder_shell: limit margin changes sign at delta = {d:.12}");
                }
                None => {
                    let _ = writeln!(report, "cylinder_shell: no sign change in the sweep");
                }
            }
            (ledgers, t)
        }
    };
    Ok(LedgerSweep {
        ledgers,
        threshold,
        report,
    })
}

fn cmd_ledger(a: &LedgerArgs) -> Result<i32> {
    let sweep = run_ledger(a)?;
    create_dir(&a.out)?;
    export::write_text(&a.out.join("ledger.csv"), &competitors::ledgers_csv(&sweep.ledgers))?;
    RunManifest::new("ledger", format!("construction={}", a.construction), &a.out, 0).write()?;
    print!("{}", sweep.report);
    Ok(EXIT_OK)
}

/// Cylinder configuration at the finest resolved width `eps = 2h`.
pub fn preset_config(preset: Preset) -> ATConfig {
    let n = match preset {
        Preset::Figure1 | Preset::Figure2 => 64,
        Preset::Sdelta | Preset::Threshold => 32,
    };
    let base = ATConfig {
        domain: GridDomain::Cylinder,
        n,
        alt_tol: 1e-6,
        ..ATConfig::default()
    };
    ATConfig {
        eps: 2.0 * base.h(),
        delta: if preset == Preset::Figure2 { 0.5 } else { 0.0 },
        ..base
    }
}

pub const SDELTA_SLOPES: [f64; 3] = [0.8, 0.4, 0.2];

fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let (mut cfg, source, preset) = match (&a.config, a.preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            (ATConfig::parse(&text)?, path.display().to_string(), None)
        }
        (None, Some(p)) => (preset_config(p), format!("preset:{}", preset_name(p)), Some(p)),
        _ => return Err(Error::Config("give exactly one of --config or --preset".into())),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = a.tolerance {
        cfg.alt_tol = tol;
    }
    cfg.validate()?;
    create_dir(&a.out)?;
    RunManifest::new("solve", source, &a.out, cfg.seed).write()?;
    match preset {
        Some(Preset::Threshold) => {
            let mut report = String::new();
            let shell = run_ledger(&LedgerArgs {
                construction: "cylinder_shell".into(),
                delta: 0.0,
                from: None,
                to: None,
                steps: None,
                radius: 12.0,
                eps: 1e-3,
                out: a.out.clone(),
            })?;
            let ball = run_ledger(&LedgerArgs {
                construction: "cut_ball".into(),
                delta: 0.5,
                from: None,
                to: None,
                steps: None,
                radius: 12.0,
                eps: 1e-3,
                out: a.out.clone(),
            })?;
            report.push_str(&shell.report);
            report.push_str(&ball.report);
            let mut all = shell.ledgers;
            all.extend(ball.ledgers);
            export::write_text(&a.out.join("ledger.csv"), &competitors::ledgers_csv(&all))?;
            print!("{report}");
            Ok(EXIT_OK)
        }
        Some(Preset::Sdelta) => {
            let rows = atsolver::sdelta_trend(&SDELTA_SLOPES, &cfg)?;
            export::write_text(&a.out.join("sdelta.csv"), &sdelta_csv(&rows))?;
            export::write_text(&a.out.join("config.txt"), &cfg.to_text())?;
            println!("delta s_hat s_hat/delta^2 bound (exploratory)");
            for r in &rows {
                println!("{} {:.6e} {:.6e} {:.6e}", r.delta, r.s_hat, r.ratio, 4.0 * std::f64::consts::PI * r.delta * r.delta);
            }
            Ok(EXIT_OK)
        }
        _ => {
            let summary = solve_pipeline(&cfg, a.level, &a.out)?;
            print!("{summary}");
            Ok(EXIT_OK)
        }
    }
}

fn preset_name(p: Preset) -> &'static str {
    match p {
        Preset::Figure1 => "figure1",
        Preset::Figure2 => "figure2",
        Preset::Sdelta => "sdelta",
        Preset::Threshold => "threshold",
    }
}

pub fn sdelta_csv(rows: &[atsolver::SdeltaRow]) -> String {
    let mut s = String::from("delta,at_min,j_surrogate,s_hat,ratio\n");
    for r in rows {
        let _ = writeln!(s, "{:?},{:?},{:?},{:?},{:?}", r.delta, r.at_min, r.j_surrogate, r.s_hat, r.ratio);
    }
    s
}

/// Solve, extract, measure and export; returns a printable summary.
pub fn solve_pipeline(cfg: &ATConfig, level: f64, out: &Path) -> Result<String> {
    let state = atsolver::solve(cfg)?;
    let energy = atsolver::at_energy(&state, cfg);
    export::write_text(&out.join("config.txt"), &cfg.to_text())?;
    let u = state.u_field();
    let phi = state.phi_field();
    export::write_vtk_field(&u, "u", &out.join("u.vtk"))?;
    export::write_vtk_field(&phi, "phi", &out.join("phi.vtk"))?;
    let mut trace = String::from("sweep,energy\n");
    for (k, e) in state.energy_trace.iter().enumerate() {
        let _ = writeln!(trace, "{k},{e:?}");
    }
    export::write_text(&out.join("energy.csv"), &trace)?;
    let mut summary = String::from("key,value\n");
    let mut put = |k: &str, v: String| {
        let _ = writeln!(summary, "{k},{v}");
    };
    put("sweeps", state.sweeps.to_string());
    put("converged", state.converged.to_string());
    put("bulk", format!("{:?}", energy.dirichlet));
    put("surface", format!("{:?}", energy.surface));
    put("total", format!("{:?}", energy.total));
    put("max_phi_violation", format!("{:?}", state.max_phi_violation));
    if cfg.domain == GridDomain::Cylinder {
        let mid = postproc::extract_midsurface(&phi, level)?;
        let iso = postproc::extract_surface(&phi, level)?;
        if iso.is_empty() {
            eprintln!("warning: phi never crosses {level}; the isosurface is empty");
        }
        export::write_vtk_surface(&mid, &out.join("midsurface.vtk"))?;
        export::write_vtk_surface(&iso, &out.join("isosurface.vtk"))?;
        let twist = postproc::twist_metric(&mid, cfg.n - 1);
        export::write_slices_csv(&twist.slices, &out.join("slices.csv"))?;
        let co = postproc::coarea_check(&mid, cfg.n - 1);
        put("midsurface_area", format!("{:?}", mid.area()));
        put("isosurface_area", format!("{:?}", iso.area()));
        put("total_twist", format!("{:?}", twist.total_twist));
        put("twist_monotone", twist.monotone.to_string());
        put("slice_gaps", twist.gaps.len().to_string());
        put("coarea_lhs", format!("{:?}", co.lhs));
        put("coarea_rhs", format!("{:?}", co.rhs));
    }
    export::write_text(&out.join("summary.csv"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::CracktipSingularity), EXIT_NUMERICAL);
        let io = Error::io(Path::new("/x"), std::io::Error::other("boom"));
        assert_eq!(exit_code(&io), EXIT_IO);
        assert_eq!(run(["crackfront", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(run(["crackfront", "ledger", "--construction", "teapot"]), EXIT_CONFIG);
    }

    #[test]
    fn bisection() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn presets_resolve_their_width() {
        for p in [Preset::Figure1, Preset::Figure2, Preset::Sdelta] {
            let c = preset_config(p);
            assert!(c.validate().is_ok());
            assert!(c.n <= 64);
        }
        assert_eq!(preset_config(Preset::Figure2).delta, 0.5);
    }
}
