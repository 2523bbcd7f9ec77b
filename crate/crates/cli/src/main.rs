use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::Context as _;
use clap::{Parser, Subcommand};
use fractal_measure::error::Error;
use fractal_measure::measure::VectorMeasure;
use fractal_measure::scenario::{
    norms_outcome, Context, MeasureSpec, Report, Scenario, ScenarioFile, ScenarioRegistry,
};

mod verify;

/// Invariant vector measures: scenario runner and reproduction harness.
#[derive(Parser)]
#[command(name = "fm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a config file and write one output directory per scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in reproduction suite and print the claims table.
    Verify {
        /// Only claims whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        /// Replace every solver and check tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Add this to entry (0,0) of the first operator of the offset_cantor system.
        #[arg(long)]
        perturb: Option<f64>,
    },
    /// Print MK norms of a measure stored as JSON.
    Mknorm {
        #[arg(long)]
        measure: PathBuf,
        /// Also compute the modified norm (needs zero total mass).
        #[arg(long)]
        star: bool,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}

const EXIT_GOLDEN: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_REFUSED: u8 = 3;

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Refused(_) | Error::Singular { .. } | Error::TooLarge(_) | Error::NonzeroMass(_) => {
            EXIT_REFUSED
        }
        _ => EXIT_PARSE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out } => run(&config, &out),
        Command::Verify {
            filter,
            tol,
            perturb,
        } => verify::verify(filter.as_deref(), tol, perturb),
        Command::Mknorm { measure, star, tol } => mknorm(&measure, star, tol),
    };
    ExitCode::from(code)
}

fn threads() -> usize {
    std::env::var("FM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

type Timed = (Result<Report, Error>, f64);

/// Runs scenarios on up to `FM_THREADS` workers; results keep input order.
pub(crate) fn run_batch(scenarios: &[Scenario], ctx: &Context) -> Vec<Timed> {
    let registry = ScenarioRegistry::builtin();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Timed>>> = Mutex::new((0..scenarios.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads().min(scenarios.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(sc) = scenarios.get(i) else { break };
                let start = Instant::now();
                let result = registry.run(sc, ctx);
                let secs = start.elapsed().as_secs_f64();
                slots.lock().expect("no worker panicked")[i] = Some((result, secs));
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every scenario ran"))
        .collect()
}

fn run(config: &Path, out: &Path) -> u8 {
    let text = match fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config.display());
            return EXIT_PARSE;
        }
    };
    let file = match ScenarioFile::parse(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {}: {e}", config.display());
            return EXIT_PARSE;
        }
    };
    if let Err(e) = fs::create_dir_all(out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return EXIT_PARSE;
    }
    let mut code = 0u8;
    let mut worst = |c: u8| {
        // Parse errors outrank refusals, which outrank golden failures.
        let rank = |c: u8| match c {
            EXIT_PARSE => 3,
            EXIT_REFUSED => 2,
            EXIT_GOLDEN => 1,
            _ => 0,
        };
        if rank(c) > rank(code) {
            code = c;
        }
    };
    for (sc, (result, secs)) in file
        .scenarios
        .iter()
        .zip(run_batch(&file.scenarios, &Context::default()))
    {
        match result {
            Ok(report) => {
                if let Err(e) = write_outputs(out, &report, secs) {
                    eprintln!("error: writing outputs of {}: {e:#}", sc.name);
                    worst(EXIT_PARSE);
                    continue;
                }
                let passed = report.checks.iter().filter(|c| c.pass).count();
                println!(
                    "{}: {} ({passed}/{} checks)",
                    sc.name,
                    if report.passed { "pass" } else { "FAIL" },
                    report.checks.len()
                );
                for w in &report.warnings {
                    eprintln!("warning: {}: {w}", sc.name);
                }
                if !report.passed {
                    worst(EXIT_GOLDEN);
                }
            }
            Err(e) => {
                eprintln!("error: {}: {e}", sc.name);
                worst(exit_code_for(&e));
            }
        }
    }
    code
}

/// Writes into a temporary sibling directory and renames it into place, so
/// a scenario directory is either complete or absent.
fn write_outputs(out: &Path, report: &Report, secs: f64) -> anyhow::Result<()> {
    let tmp = tempfile::Builder::new()
        .prefix(&format!(".{}-", report.name))
        .tempdir_in(out)?;
    let dir = tmp.path();
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;
    fs::write(
        dir.join("timing.json"),
        serde_json::to_string(&serde_json::json!({ "seconds": secs }))? + "\n",
    )?;
    if let Some(m) = &report.measure {
        fs::write(dir.join("measure.json"), m.to_json()? + "\n")?;
        m.write_csv(fs::File::create(dir.join("measure.csv"))?)?;
    }
    if let Some(s) = &report.solve {
        s.write_trace_csv(fs::File::create(dir.join("trace.csv"))?)?;
    }
    let target = out.join(&report.name);
    if target.exists() {
        fs::remove_dir_all(&target)
            .with_context(|| format!("removing old {}", target.display()))?;
    }
    fs::rename(tmp.keep(), &target)?;
    Ok(())
}

fn mknorm(path: &Path, star: bool, tol: f64) -> u8 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_PARSE;
        }
    };
    let mu = match VectorMeasure::from_json(&text) {
        Ok(m) => Ok(m),
        Err(_) => serde_json::from_str::<MeasureSpec>(&text)
            .map_err(Error::from)
            .and_then(|s| s.build(1)),
    };
    let mu = match mu {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_PARSE;
        }
    };
    let out = match norms_outcome(&mu, tol) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let q = |k: &str| out.quantities.get(k).map(|v| v[0]);
    let mk_star = if star {
        match q("mk_star") {
            Some(v) => Some(v),
            None => {
                eprintln!(
                    "error: {}",
                    Error::NonzeroMass(
                        fractal_measure::mk::ZERO_MASS_TOL.max(norm(&mu.total_mass()))
                    )
                );
                return EXIT_REFUSED;
            }
        }
    } else {
        None
    };
    let mk = q("mk").expect("always computed");
    // Oracle agreement within its grid resolution certifies small instances.
    let certified = q("mk_oracle").is_some_and(|o| (o - mk).abs() <= tol.max(1e-2));
    let json = serde_json::json!({
        "mk": mk,
        "mk_star": mk_star,
        "variation": q("variation"),
        "tol": tol,
        "certified_small_instance": certified,
    });
    println!("{json}");
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    0
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
