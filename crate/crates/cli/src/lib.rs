//! Command-line front end for `ellipsis-core`: JSON formats for function
//! spaces and operators, subcommands, and exit codes.

pub mod commands;
pub mod error;
pub mod schema;
pub mod value;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use ellipsis_core::pipeline::{Method, Options, DEFAULT_TOL};
use ellipsis_core::pointwise::DEFAULT_RANK_TOL;
use ellipsis_core::strata::CoefficientModel;
use ellipsis_core::FunctionSpace;
use serde::Serialize;

pub use error::{CliError, EXIT_INCONCLUSIVE, EXIT_INVALID_INPUT, EXIT_OK, EXIT_VERIFY_FAILED};
use schema::{parse_basis, parse_operator, AnySpace, Mode};
use value::Codec;

#[derive(Debug, Parser)]
#[command(
    name = "ellipsis",
    version,
    about = "Elliptic operators annihilating finite-dimensional spaces of trigonometric polynomials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    ConstantRank,
    Stratified,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::ConstantRank => Method::ConstantRank,
            MethodArg::Stratified => Method::Stratified,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Sampled,
    Trig,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Jet closure order, rank field and spanning functionals on a grid.
    Analyze {
        basis: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sobolev Gram matrix, norm-equivalence constant and mode ratios.
    Sobolev {
        basis: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// Largest frequency in the mode-ratio table.
        #[arg(long, default_value_t = 16)]
        modes: u32,
        /// Arc cover of the circle (JSON `{arcs: [{center, radius}], resolution}`).
        #[arg(long)]
        cover: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Builds and verifies an elliptic operator annihilating the space.
    Annihilate {
        basis: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
        #[arg(long)]
        mode: Option<Mode>,
        /// Order of the reference operator (a Laplacian power, or `∂^e` on the circle).
        #[arg(long)]
        elliptic_order: Option<u32>,
        /// Operator file used as reference instead of a Laplacian power.
        #[arg(long, conflicts_with = "elliptic_order")]
        reference: Option<PathBuf>,
        /// Coefficient model of the stratified path.
        #[arg(long, value_enum, default_value = "sampled")]
        model: ModelArg,
        /// Initial frequency cutoff of the trigonometric model.
        #[arg(long, default_value_t = 1)]
        cutoff: i64,
        /// Keep the constructed operator instead of a symbolic lift.
        #[arg(long)]
        no_lift: bool,
        /// Directory receiving `operator.json` and `report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recomputes the residual of an operator on a space from scratch.
    Verify {
        operator: PathBuf,
        basis: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Number of worst offenders listed.
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Smooth non-analytic counterexample and its refutation of an operator.
    Witness {
        #[arg(long, default_value_t = 6)]
        nmax: usize,
        /// Order `d` of the refuted operator `Σ_{k≤d} ∂^k`; defaults to `nmax`.
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Stratification of the grid by spanning tuples.
    Stratify {
        basis: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

macro_rules! with_space {
    ($space:expr, $s:ident => $body:expr) => {
        match $space {
            AnySpace::Exact($s) => $body,
            AnySpace::Float($s) => $body,
        }
    };
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_space(path: &Path, mode: Option<Mode>, warnings: &mut Vec<String>) -> Result<AnySpace, CliError> {
    let parsed = parse_basis(&read(path)?)?;
    warnings.extend(parsed.warnings);
    Ok(match mode {
        Some(m) => parsed.space.with_mode(m),
        None => parsed.space,
    })
}

fn report_to(path: &Option<PathBuf>, value: &impl Serialize) -> Result<(), CliError> {
    if let Some(p) = path {
        write_json(p, value)?;
        println!("report: {}", p.display());
    }
    Ok(())
}

/// Runs a command and returns its exit code.
pub fn run(cli: Cli) -> i32 {
    let start = Instant::now();
    let mut warnings = Vec::new();
    let result = dispatch(cli.command, &mut warnings);
    for w in &warnings {
        eprintln!("warning: {}", w);
    }
    println!("time: {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, warnings: &mut Vec<String>) -> Result<i32, CliError> {
    match command {
        Command::Analyze {
            basis,
            grid,
            rank_tol,
            mode,
            report,
        } => {
            let space = load_space(&basis, mode, warnings)?;
            let r = with_space!(&space, s => commands::analyze(s, grid, rank_tol))?;
            println!("k*: {}", r.k_star);
            println!("grid: {} per axis, {} points", r.resolution, r.points.len());
            println!("rank histogram: {:?}", r.histogram);
            println!("rank constant: {}, order constant: {}", r.rank_constant, r.order_constant);
            report_to(&report, &r)?;
            Ok(EXIT_OK)
        }
        Command::Sobolev {
            basis,
            k,
            modes,
            cover,
            mode,
            report,
        } => {
            let space = load_space(&basis, mode, warnings)?;
            let cover = match cover {
                Some(p) => Some(serde_json::from_str::<commands::CoverFile>(&read(&p)?)?),
                None => None,
            };
            let r = with_space!(&space, s => commands::sobolev(s, k, modes, cover.as_ref()))?;
            println!("constant C (k = {}): {}", k, r.constant);
            if let Some(c) = &r.constant_squared {
                println!("C squared: {}", serde_json::to_string(c)?);
            }
            if let Some(c) = &r.cover {
                println!(
                    "cover ratio range: [{}, {}], K = {}",
                    c.ratios.min_ratio, c.ratios.max_ratio, c.ratios.bound
                );
            }
            report_to(&report, &r)?;
            Ok(EXIT_OK)
        }
        Command::Annihilate {
            basis,
            method,
            grid,
            tol,
            rank_tol,
            mode,
            elliptic_order,
            reference,
            model,
            cutoff,
            no_lift,
            out,
        } => {
            let space = load_space(&basis, mode, warnings)?;
            let reference = reference.map(|p| read(&p)).transpose()?;
            let settings = AnnihilateSettings {
                method: method.into(),
                grid,
                tol,
                rank_tol,
                elliptic_order,
                reference,
                model: match model {
                    ModelArg::Sampled => CoefficientModel::Sampled,
                    ModelArg::Trig => CoefficientModel::Trig { cutoff },
                },
                lift: !no_lift,
                out,
            };
            with_space!(&space, s => run_annihilate(s, &settings, warnings))
        }
        Command::Verify {
            operator,
            basis,
            grid,
            tol,
            top,
            report,
        } => {
            let op_text = read(&operator)?;
            let space = load_space(&basis, None, warnings)?;
            let r = with_space!(&space, s => {
                let op = parse_operator(&op_text, warnings)?;
                commands::verify(&op, s, grid, tol, top)
            })?;
            println!("grid: {} per axis", r.resolution);
            println!("residual sup: {:e} (tol {:e})", r.residual_sup, r.tol);
            if let Some(z) = r.exact_zero {
                println!("symbolic residual identically zero: {}", z);
            }
            println!(
                "symbol min modulus: {:e} (margin {:e})",
                r.symbol.min_modulus, r.symbol.margin
            );
            for o in &r.offenders {
                println!(
                    "  point {} component {} x {:?} function {}: {:e}",
                    o.point, o.component, o.x, o.function, o.value
                );
            }
            println!("{}", if r.passed { "PASS" } else { "FAIL" });
            report_to(&report, &r)?;
            Ok(if r.passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::Witness { nmax, order, report } => {
            let r = commands::witness(nmax, order.unwrap_or(nmax))?;
            for (n, d) in &r.jets {
                println!("derivatives at 1/{}: {:?}", n, d);
            }
            println!(
                "E f(1/{}) = {} (|a_d|·d! = {}, certified {})",
                r.refutation.order, r.refutation.value, r.expected, r.refutation.certified
            );
            report_to(&report, &r)?;
            Ok(EXIT_OK)
        }
        Command::Stratify {
            basis,
            grid,
            rank_tol,
            mode,
            report,
        } => {
            let space = load_space(&basis, mode, warnings)?;
            let r = with_space!(&space, s => commands::stratify_space(s, grid, rank_tol))?;
            println!("k*: {}, q: {}, stages: {}", r.k_star, r.max_order, r.stages.len());
            for s in &r.stages {
                let tuple: Vec<String> = s.tuple.iter().map(|i| i.to_string()).collect();
                println!(
                    "  stage {}: rank {} tuple [{}] |V| {} |F next| {} g terms {:?}",
                    s.stage,
                    s.max_rank,
                    tuple.join(", "),
                    s.members,
                    s.remaining,
                    s.defining_terms
                );
            }
            report_to(&report, &r)?;
            Ok(EXIT_OK)
        }
    }
}

struct AnnihilateSettings {
    method: Method,
    grid: Option<usize>,
    tol: f64,
    rank_tol: f64,
    elliptic_order: Option<u32>,
    reference: Option<String>,
    model: CoefficientModel,
    lift: bool,
    out: Option<PathBuf>,
}

fn run_annihilate<S: Codec>(
    space: &FunctionSpace<S>,
    settings: &AnnihilateSettings,
    warnings: &mut Vec<String>,
) -> Result<i32, CliError> {
    let reference = match &settings.reference {
        Some(text) => Some(parse_operator::<S>(text, warnings)?),
        None => None,
    };
    let options = Options {
        resolution: settings.grid,
        tol: settings.tol,
        rank_tol: settings.rank_tol,
        method: settings.method,
        elliptic_order: settings.elliptic_order,
        reference,
        model: settings.model,
        lift: settings.lift,
    };
    let (a, file) = commands::annihilate(space, &options)?;
    let r = &a.report;
    println!("functions: {}, k*: {}, C: {}", r.functions, r.k_star, r.norm_constant);
    println!("rank range: [{}, {}], q: {}", r.rank_min, r.rank_max, r.max_order);
    println!("path: {:?}, reference order: {}", r.path, r.reference_order);
    if let Some(f) = &r.fallback {
        println!("fallback: {}", f);
    }
    if let Some(c) = &r.cover {
        println!("cover: {} patches, method gap {:e}", c.patches, c.method_gap);
    }
    if let Some(st) = &r.stages {
        println!("stages: {}", st.len());
    }
    if let Some(l) = &r.lift {
        println!("lifted: cutoff {:?}, symbolic residual bound {:e}", l.cutoff, l.residual_bound);
    }
    println!("residual sup: {:e}", r.residual.sup);
    println!("symbol min modulus: {:e}", r.symbol.min_modulus);
    if let Some(dir) = &settings.out {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let op_path = dir.join("operator.json");
        write_json(&op_path, &file)?;
        let report = commands::AnnihilateReport {
            warnings: warnings.clone(),
            pipeline: a.report.clone(),
        };
        write_json(&dir.join("report.json"), &report)?;
        println!("operator: {}", op_path.display());
    }
    Ok(EXIT_OK)
}
