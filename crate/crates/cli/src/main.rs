mod parse;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use complex_geodesics::boundary::{field_csv, field_grid, FieldGrid, ShootOptions};
use complex_geodesics::circle::nodes;
use complex_geodesics::domain::{Domain, DomainConfig};
use complex_geodesics::geodesic::{solve_preferred, GeodesicDisc, SolveOptions, TOL_GEO};
use complex_geodesics::verify::{run_geodesic_battery, run_hcma_suite, run_smoothness_suite, Report, SamplePlan};
use complex_geodesics::{Error, C64};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "lg", version, about = "Complex geodesics, boundary fields and verification batteries")]
struct Cli {
    /// Worker threads for independent samples (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve the geodesic through p with direction chart coordinate vhat.
    Geodesic {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, value_parser = parse::vector, allow_hyphen_values = true)]
        p: parse::CVec,
        #[arg(long, value_parser = parse::vector, allow_hyphen_values = true)]
        vhat: parse::CVec,
        #[arg(long, default_value_t = 256)]
        nodes: usize,
        #[arg(long, default_value_t = TOL_GEO)]
        tol: f64,
        /// Disc JSON; the trace CSV goes next to it with extension `.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the Poisson kernel or |Psi| on a real 2D slice.
    Field {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, value_parser = parse::vector, allow_hyphen_values = true)]
        p: parse::CVec,
        /// Grid JSON, inline or a path.
        #[arg(long)]
        grid: String,
        #[arg(long, value_enum, default_value_t = Quantity::P)]
        quantity: Quantity,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run verification batteries; exit 0 iff every check passes.
    Verify {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Quantity {
    #[value(name = "P")]
    P,
    #[value(name = "psi")]
    Psi,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Suite {
    Geodesic,
    Hcma,
    Smoothness,
    All,
}

enum Fail {
    Config(String),
    Solver(String),
    Io(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Config(_) => 1,
            Fail::Solver(_) => 2,
            Fail::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Fail::Config(m) | Fail::Solver(m) | Fail::Io(m) => m,
        }
    }
}

/// Variant name of a library error, e.g. `NotSlc`.
fn kind(e: &Error) -> String {
    let d = format!("{e:?}");
    d.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

fn classify(e: Error) -> Fail {
    let msg = format!("{}: {e}", kind(&e));
    match e {
        Error::NotSlc(_)
        | Error::SampleOffBoundary(_)
        | Error::NotInLp(_)
        | Error::ChartSingularity
        | Error::OutsideDisc(_)
        | Error::Invalid(_) => Fail::Config(msg),
        _ => Fail::Solver(msg),
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| Fail::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_domain(path: &Path) -> Result<(Domain, serde_json::Value), Fail> {
    let text = read(path)?;
    let cfg: DomainConfig =
        serde_json::from_str(&text).map_err(|e| Fail::Config(format!("bad domain config {}: {e}", path.display())))?;
    let raw = serde_json::to_value(&cfg).map_err(|e| Fail::Config(e.to_string()))?;
    Ok((Domain::from_config(&cfg).map_err(classify)?, raw))
}

fn trace_csv(g: &GeodesicDisc, samples: usize) -> String {
    let n = g.phi.dim();
    let mut head = vec!["theta".to_string()];
    head.extend((1..=n).map(|k| format!("re_z{k}")));
    head.extend((1..=n).map(|k| format!("im_z{k}")));
    let mut out = head.join(",") + "\n";
    for (j, zeta) in nodes(samples).into_iter().enumerate() {
        let z = g.eval(zeta);
        let mut row = vec![format!("{:.16e}", 2.0 * std::f64::consts::PI * j as f64 / samples as f64)];
        row.extend(z.iter().map(|x| format!("{:.16e}", x.re)));
        row.extend(z.iter().map(|x| format!("{:.16e}", x.im)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn cmd_geodesic(domain: &Path, p: &[C64], vhat: &[C64], nodes: usize, tol: f64, out: &Path) -> Result<(), Fail> {
    let (dom, _) = load_domain(domain)?;
    let opts = SolveOptions { nodes, tol, ..SolveOptions::default() };
    let g = solve_preferred(&dom, p, vhat, &opts).map_err(classify)?;
    let d = &g.diagnostics;
    log::info!("converged in {} iterations, theta {:.3e}", d.iterations, d.theta_max());
    let text = serde_json::to_string_pretty(&g.to_json()).map_err(|e| Fail::Io(e.to_string()))?;
    write(out, &text)?;
    write(&out.with_extension("csv"), &trace_csv(&g, nodes))
}

fn parse_grid(spec: &str) -> Result<FieldGrid, Fail> {
    let text = if spec.trim_start().starts_with('{') { spec.to_string() } else { read(Path::new(spec))? };
    serde_json::from_str(&text).map_err(|e| Fail::Config(format!("bad grid spec: {e}")))
}

fn cmd_field(domain: &Path, p: &[C64], grid: &str, quantity: Quantity, out: &Path) -> Result<(), Fail> {
    let (dom, _) = load_domain(domain)?;
    let grid = parse_grid(grid)?;
    let mut samples = field_grid(&dom, p, &grid, &ShootOptions::default()).map_err(classify)?;
    if quantity == Quantity::Psi {
        samples.iter_mut().for_each(|s| s.kernel = None);
    }
    let flagged = samples.iter().filter(|s| !s.converged).count();
    log::info!("{} points, {flagged} flagged", samples.len());
    write(out, &field_csv(&samples))
}

fn cmd_verify(domain: &Path, suite: Suite, out: &Path, jobs: Option<usize>) -> Result<bool, Fail> {
    let (dom, cfg) = load_domain(domain)?;
    let plan = SamplePlan::default();
    let mut rep = Report::default();
    if matches!(suite, Suite::Geodesic | Suite::All) {
        rep.extend(run_geodesic_battery(&dom, &plan));
    }
    if matches!(suite, Suite::Hcma | Suite::All) {
        rep.extend(run_hcma_suite(&dom, &plan));
    }
    if matches!(suite, Suite::Smoothness | Suite::All) {
        rep.extend(run_smoothness_suite(&dom, &plan));
    }
    for f in &rep.failures {
        eprintln!("lg: sample failed: {f}");
    }
    let suite_name = format!("{suite:?}").to_lowercase();
    let doc = json!({
        "flags": {
            "domain": domain.display().to_string(),
            "domain_config": cfg,
            "suite": suite_name,
            "out": out.display().to_string(),
            "jobs": jobs,
            "plan": plan,
        },
        "pass": rep.pass(),
        "checks": rep.checks,
        "failures": rep.failures,
    });
    write(out, &serde_json::to_string_pretty(&doc).map_err(|e| Fail::Io(e.to_string()))?)?;
    for c in &rep.checks {
        log::info!("{} {:.3e} (threshold {:.1e}) {}", c.name, c.max_violation, c.threshold, if c.pass { "pass" } else { "FAIL" });
    }
    Ok(rep.pass())
}

fn run(cli: Cli) -> Result<ExitCode, Fail> {
    if let Some(k) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .map_err(|e| Fail::Config(format!("cannot set up {k} workers: {e}")))?;
    }
    match &cli.cmd {
        Cmd::Geodesic { domain, p, vhat, nodes, tol, out } => cmd_geodesic(domain, &p.0, &vhat.0, *nodes, *tol, out)?,
        Cmd::Field { domain, p, grid, quantity, out } => cmd_field(domain, &p.0, grid, *quantity, out)?,
        Cmd::Verify { domain, suite, out } => {
            if !cmd_verify(domain, *suite, out, cli.jobs)? {
                eprintln!("lg: verification failed, see {}", out.display());
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("LG_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("lg: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
