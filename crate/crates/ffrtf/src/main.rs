use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ffrtf::algebra::Poly;
use ffrtf::config::{parse, DivisorChoice, RunConfig, Suite};
use ffrtf::moduli::{count_n, enumerate_base, MEngine, NMode, Setting};
use ffrtf::orbital::{inv_base, orbital_all, orbital_regularized, orbital_via_x, FRat, PointU};
use ffrtf::places::Divisor;
use ffrtf::suites;

#[derive(Parser)]
#[command(name = "ffrtf", version, about = "Exact orbital integrals and point counts over double covers of P^1")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run verification suites and emit a report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to these suites (repeatable); defaults to the config's list.
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Also write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// J(u) for one u = g/h, `0` or `inf`.
    Orbital {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        u: String,
    },
    /// J(u) for every regular u in the image of inv_D.
    OrbitalAll {
        #[arg(long)]
        config: PathBuf,
    },
    /// The points (a, b) of the base and their invariants.
    Bases {
        #[arg(long)]
        config: PathBuf,
    },
    /// The N-count generating function over the base point with this a.
    CountN {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        a: String,
    },
    /// The M-count over the base point with this a.
    CountM {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        a: String,
    },
}

fn load(path: &Path) -> Result<RunConfig, String> {
    let src = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&src).map_err(|e| format!("{}: {e}", path.display()))
}

fn single(cfg: &RunConfig) -> Result<Divisor, String> {
    match &cfg.divisors {
        DivisorChoice::Single(d) => Ok(d.clone()),
        DivisorChoice::Sweep { .. } => Err("this command needs a single `D =` in the config".into()),
    }
}

fn parse_u(set: &Setting, s: &str) -> Result<PointU, String> {
    match s.trim() {
        "0" => return Ok(PointU::Zero),
        "inf" => return Ok(PointU::Infinity),
        _ => {}
    }
    // Accepts the `(g)/(h)` form that `orbital-all` prints.
    let unwrap = |p: &str| {
        let p = p.trim();
        p.strip_prefix('(').and_then(|p| p.strip_suffix(')')).unwrap_or(p).to_string()
    };
    let (g, h) = s.split_once('/').unwrap_or((s, "1"));
    let g = Poly::parse(set.field(), &unwrap(g)).map_err(|e| e.to_string())?;
    let h = Poly::parse(set.field(), &unwrap(h)).map_err(|e| e.to_string())?;
    let u = FRat::new(g, h).map_err(|e| e.to_string())?;
    PointU::from_frat(u).map_err(|e| e.to_string())
}

fn base_with_a(set: &Setting, dv: &Divisor, a: &str) -> Result<ffrtf::moduli::BasePoint, String> {
    let a = Poly::parse(set.field(), a).map_err(|e| e.to_string())?;
    enumerate_base(set, dv)
        .map_err(|e| e.to_string())?
        .into_iter()
        .find(|b| b.a == a)
        .ok_or_else(|| format!("no base point with a = {a}"))
}

/// Runs one command, appending what it prints to `out`.
fn execute(cmd: Cmd, out: &mut String) -> Result<bool, String> {
    match cmd {
        Cmd::Run { config, suites: names, json } => {
            let mut cfg = load(&config)?;
            if !names.is_empty() {
                cfg.suites = names
                    .iter()
                    .map(|n| Suite::from_name(n).ok_or_else(|| format!("unknown suite `{n}`")))
                    .collect::<Result<_, _>>()?;
            }
            let report = suites::run(&cfg, true).map_err(|e| e.to_string())?;
            out.push_str(&report.to_text());
            if let Some(path) = json {
                fs::write(&path, report.to_json()).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            Ok(report.passed())
        }
        Cmd::Orbital { config, u } => {
            let cfg = load(&config)?;
            let (set, dv) = (cfg.setting(), single(&cfg)?);
            let j = match parse_u(&set, &u)? {
                PointU::Regular(u) => orbital_via_x(&set, &dv, &u),
                singular => orbital_regularized(&set, &dv, &singular),
            }
            .map_err(|e| e.to_string())?;
            writeln!(out, "{}", j.canonical()).unwrap();
            Ok(true)
        }
        Cmd::OrbitalAll { config } => {
            let cfg = load(&config)?;
            let (set, dv) = (cfg.setting(), single(&cfg)?);
            for (u, _, j) in orbital_all(&set, &dv).map_err(|e| e.to_string())? {
                writeln!(out, "{u}\t{}", j.canonical()).unwrap();
            }
            Ok(true)
        }
        Cmd::Bases { config } => {
            let cfg = load(&config)?;
            let (set, dv) = (cfg.setting(), single(&cfg)?);
            for b in enumerate_base(&set, &dv).map_err(|e| e.to_string())? {
                let u = inv_base(&b).map_err(|e| e.to_string())?;
                writeln!(out, "a={}\tb={}\tu={u}", b.a, b.b).unwrap();
            }
            Ok(true)
        }
        Cmd::CountN { config, a } => {
            let cfg = load(&config)?;
            let (set, dv) = (cfg.setting(), single(&cfg)?);
            let base = base_with_a(&set, &dv, &a)?;
            let c = count_n(&set, &base, NMode::Standard).map_err(|e| e.to_string())?;
            writeln!(out, "{}", c.generating().canonical()).unwrap();
            Ok(true)
        }
        Cmd::CountM { config, a } => {
            let cfg = load(&config)?;
            let (set, dv) = (cfg.setting(), single(&cfg)?);
            let base = base_with_a(&set, &dv, &a)?;
            let engine = MEngine::new(&set, base.n).map_err(|e| e.to_string())?;
            writeln!(out, "{}", engine.count(&base).map_err(|e| e.to_string())?).unwrap();
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let mut out = String::new();
    let result = execute(Cli::parse().cmd, &mut out);
    if let Err(e) = io::stdout().write_all(out.as_bytes()) {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
