//! Command-line front end: validate structure files, glue weak data, pull
//! structures back along maps of varieties, probe the naive pullback's
//! failure locus, and check universal families.
//!
//! Exit codes: 0 when the requested check passes (or the command only
//! produces output), 1 when a validation report is non-empty, 2 on parse or
//! usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fact_engine::fiber::{Fiber, FiberTheory};
use fact_engine::format::{
    self, etale_from_str, parse_structure, report_to_json, Parsed,
};
use fact_engine::glue::{glue, GlueError};
use fact_engine::pullback::{naive_pullback, pullback_strict, pullback_weak, PullbackError};
use fact_engine::report::ValidationReport;
use fact_engine::structure::{check_strict, check_weak, weak_forget, LociChoice};
use fact_engine::universal::{check_universal, commutative_strict};
use fact_engine::variety::Variety;

#[derive(Parser)]
#[command(name = "fact-engine", version, about = "factorization structure engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ReportOpts {
    /// Emit the validation report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check every law of the structure in a file.
    Validate {
        file: PathBuf,
        #[command(flatten)]
        report: ReportOpts,
    },
    /// Reconstruct a full structure from weak data.
    Glue {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the chart atlas (selections and transitions) here.
        #[arg(long)]
        atlas: Option<PathBuf>,
        #[command(flatten)]
        report: ReportOpts,
    },
    /// Pull a structure back along an etale map (weak files stay weak,
    /// strict files go through the corrected two-step pullback).
    Pullback {
        map_file: PathBuf,
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        report: ReportOpts,
    },
    /// Report where the naive coordinatewise pullback fails to be a
    /// factorization structure.
    NaivePullbackCheck {
        map_file: PathBuf,
        file: PathBuf,
        #[command(flatten)]
        report: ReportOpts,
    },
    /// Check a universal family: comparison validity and composition
    /// coherence.
    UniversalCheck {
        family_file: PathBuf,
        #[command(flatten)]
        report: ReportOpts,
    },
    /// Generate a built-in example structure.
    GenExample {
        #[command(subcommand)]
        example: Example,
    },
}

#[derive(Subcommand)]
enum Example {
    /// The commutative structure: fibers are tensor powers of a fixed
    /// object, one factor per distinct coordinate.
    Commutative {
        /// Dimension (or set size) of the object.
        #[arg(long)]
        dim: usize,
        /// Number of points of the variety.
        #[arg(long)]
        points: usize,
        #[arg(long)]
        max_arity: usize,
        #[arg(short, long)]
        output: PathBuf,
        /// Value category: rational-vector or finite-bijection.
        #[arg(long, default_value = "rational-vector")]
        theory: String,
        /// Emit the weak form instead of the strict one.
        #[arg(long)]
        weak: bool,
        /// Loci for the weak form: full or diagonal.
        #[arg(long, default_value = "full")]
        loci: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write(path: &PathBuf, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn finish(rep: &ValidationReport, variety: Option<&Variety>, opts: &ReportOpts) -> ExitCode {
    if opts.json {
        print!("{}", report_to_json(rep, variety));
    } else {
        print!("{}", rep.render(variety));
    }
    if rep.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Validate { file, report } => {
            let parsed = parse_structure(&read(&file)?).map_err(|e| e.to_string())?;
            let (rep, variety) = match &parsed {
                Parsed::Strict(s) => (check_strict(s), Some(s.variety.clone())),
                Parsed::Weak(z) => (check_weak(z), Some(z.variety.clone())),
                Parsed::Family(f) => (check_universal(f), None),
            };
            Ok(finish(&rep, variety.as_ref(), &report))
        }
        Command::Glue { file, output, atlas, report } => {
            let parsed = parse_structure(&read(&file)?).map_err(|e| e.to_string())?;
            let Parsed::Weak(z) = parsed else {
                return Err("glue expects a weak structure file".into());
            };
            match glue(&z) {
                Ok(glued) => {
                    write(&output, &format::strict_to_string(&glued.strict))?;
                    if let Some(atlas_path) = atlas {
                        write(&atlas_path, &glued.atlas.describe(&z.variety))?;
                    }
                    println!("glued structure written to {}", output.display());
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ (GlueError::InvalidWeak(_) | GlueError::Cover(_) | GlueError::Heredity(_) | GlueError::Cocycle(_))) => {
                    if report.json {
                        // the reports inside glue errors are already rendered;
                        // surface them as-is under a single failure record
                        eprintln!("{e}");
                    } else {
                        eprintln!("{e}");
                    }
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::Pullback { map_file, file, output, report: _ } => {
            let phi = etale_from_str(&read(&map_file)?).map_err(|e| e.to_string())?;
            let parsed = parse_structure(&read(&file)?).map_err(|e| e.to_string())?;
            match parsed {
                Parsed::Strict(s) => match pullback_strict(&phi, &s) {
                    Ok((glued, _)) => {
                        write(&output, &format::strict_to_string(&glued.strict))?;
                        println!("pulled-back structure written to {}", output.display());
                        Ok(ExitCode::SUCCESS)
                    }
                    Err(PullbackError::InvalidInput(rep)) => {
                        eprintln!("input structure is invalid:\n{rep}");
                        Ok(ExitCode::from(1))
                    }
                    Err(e) => Err(e.to_string()),
                },
                Parsed::Weak(z) => match pullback_weak(&phi, &z) {
                    Ok(res) => {
                        write(&output, &format::weak_to_string(&res.weak))?;
                        println!("pulled-back weak structure written to {}", output.display());
                        Ok(ExitCode::SUCCESS)
                    }
                    Err(PullbackError::InvalidInput(rep)) => {
                        eprintln!("input structure is invalid:\n{rep}");
                        Ok(ExitCode::from(1))
                    }
                    Err(e) => Err(e.to_string()),
                },
                Parsed::Family(_) => Err("pullback expects a strict or weak structure file".into()),
            }
        }
        Command::NaivePullbackCheck { map_file, file, report } => {
            let phi = etale_from_str(&read(&map_file)?).map_err(|e| e.to_string())?;
            let parsed = parse_structure(&read(&file)?).map_err(|e| e.to_string())?;
            let Parsed::Strict(s) = parsed else {
                return Err("naive-pullback-check expects a strict structure file".into());
            };
            match naive_pullback(&phi, &s) {
                Ok((candidate, rep)) => Ok(finish(&rep, Some(&candidate.variety), &report)),
                Err(PullbackError::InvalidInput(rep)) => {
                    eprintln!("input structure is invalid:\n{rep}");
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::UniversalCheck { family_file, report } => {
            let parsed = parse_structure(&read(&family_file)?).map_err(|e| e.to_string())?;
            let Parsed::Family(f) = parsed else {
                return Err("universal-check expects a family file".into());
            };
            let rep = check_universal(&f);
            Ok(finish(&rep, None, &report))
        }
        Command::GenExample { example } => match example {
            Example::Commutative { dim, points, max_arity, output, theory, weak, loci } => {
                if points == 0 || max_arity == 0 {
                    return Err("points and max-arity must be positive".into());
                }
                let theory = match theory.as_str() {
                    "rational-vector" => FiberTheory::RationalVector,
                    "finite-bijection" => FiberTheory::FiniteBijection,
                    other => return Err(format!("unknown theory {other:?}")),
                };
                let object = match theory {
                    FiberTheory::RationalVector => Fiber::vect(dim),
                    FiberTheory::FiniteBijection => {
                        let labels: Vec<String> = (1..=dim).map(|i| format!("v{i}")).collect();
                        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                        Fiber::set_of(&refs).map_err(|e| e.to_string())?
                    }
                };
                let variety = Variety::with_size(points);
                let strict = commutative_strict(&variety, &object, max_arity);
                let contents = if weak {
                    let choice = match loci.as_str() {
                        "full" => LociChoice::Full,
                        "diagonal" => LociChoice::Diagonal,
                        other => return Err(format!("unknown loci choice {other:?}")),
                    };
                    let z = weak_forget(&strict, &choice).map_err(|e| e.to_string())?;
                    format::weak_to_string(&z)
                } else {
                    format::strict_to_string(&strict)
                };
                write(&output, &contents)?;
                println!("example written to {}", output.display());
                Ok(ExitCode::SUCCESS)
            }
        },
    }
}
