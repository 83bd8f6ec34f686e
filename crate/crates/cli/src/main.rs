//! Command-line front end for the plumbed-forest lattice engine.
//!
//! Exit codes: 0 success (for `check`/`equiv`: property holds), 1 property
//! fails, 2 parse or semantic error, 3 failed verification suite, 4
//! stabilization cap exceeded.

use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use knot_lattice::calculus::{blow_up_edge, blow_up_generic, blow_up_vertex, equivalent, reduce};
use knot_lattice::document;
use knot_lattice::lattice::{FiltrationReport, HomologyReport, Lattice};
use knot_lattice::plumbing::Forest;
use knot_lattice::verify::{run_suite, SuiteConfig, SuiteName, SuiteReport};

#[derive(Parser)]
#[command(name = "knot-lattice", version, about = "Blow-up calculus and knot lattice complexes for negative-definite plumbed forests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test negative definiteness; exit 0 if definite, 1 otherwise.
    Check { file: String },
    /// Reduce to the unique reduced form and print it.
    Reduce { file: String },
    /// Decide equivalence; prints the common reduced form on success.
    Equiv { a: String, b: String },
    /// Apply one blow-up and print the resulting forest.
    Move {
        file: String,
        #[arg(long, value_enum)]
        kind: MoveKindArg,
        /// Vertex id (vertex kind) or `a,b` edge pair (edge kind).
        #[arg(long)]
        site: Option<String>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        margin: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Truncated homology dimensions per Spin^c class and grading.
    Homology {
        file: String,
        #[arg(long, default_value_t = 1)]
        margin: u32,
        #[arg(long, default_value_t = 2)]
        ucap: u32,
        #[arg(long)]
        json: bool,
    },
    /// Filtration profile (sublevel homology jumps) per Spin^c and grading.
    Filtration {
        file: String,
        #[arg(long, default_value_t = 1)]
        margin: u32,
        #[arg(long, default_value_t = 2)]
        ucap: u32,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MoveKindArg {
    Generic,
    Vertex,
    Edge,
}

const EXIT_FALSE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SUITE: u8 = 3;
const EXIT_STAB_CAP: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn load(path: &str) -> Result<Forest, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    document::parse(&text).map_err(|e| format!("{path}: {e}"))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Check { file } => {
            let forest = load(&file)?;
            if forest.is_negative_definite() {
                println!("negative definite");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("not negative definite");
                Ok(ExitCode::from(EXIT_FALSE))
            }
        }
        Command::Reduce { file } => {
            let forest = load(&file)?;
            print!("{}", document::emit(&reduce(&forest)));
            Ok(ExitCode::SUCCESS)
        }
        Command::Equiv { a, b } => {
            let fa = load(&a)?;
            let fb = load(&b)?;
            if equivalent(&fa, &fb) {
                print!("{}", document::emit(&reduce(&fa)));
                Ok(ExitCode::SUCCESS)
            } else {
                println!("not equivalent");
                Ok(ExitCode::from(EXIT_FALSE))
            }
        }
        Command::Move { file, kind, site } => {
            let forest = load(&file)?;
            let moved = match kind {
                MoveKindArg::Generic => blow_up_generic(&forest).map_err(|e| e.to_string())?.0,
                MoveKindArg::Vertex => {
                    let v = site.ok_or("--site <vertex> required for a vertex blow-up")?;
                    blow_up_vertex(&forest, &v).map_err(|e| e.to_string())?.0
                }
                MoveKindArg::Edge => {
                    let s = site.ok_or("--site <a,b> required for an edge blow-up")?;
                    let (a, b) = s
                        .split_once(',')
                        .ok_or("--site for an edge blow-up is `a,b`")?;
                    blow_up_edge(&forest, a.trim(), b.trim())
                        .map_err(|e| e.to_string())?
                        .0
                }
            };
            print!("{}", document::emit(&moved));
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            suite,
            instances,
            margin,
            seed,
            json,
        } => {
            let name: SuiteName = suite.parse().map_err(|e| format!("{e}"))?;
            let cfg = SuiteConfig {
                instances,
                margin,
                seed,
                ..SuiteConfig::default()
            };
            let report = run_suite(name, &cfg);
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
                );
            } else {
                print_suite_report(&report);
            }
            if report.stabilization_caps > 0 {
                Ok(ExitCode::from(EXIT_STAB_CAP))
            } else if !report.passed() || !report.config_ok() {
                Ok(ExitCode::from(EXIT_SUITE))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Homology {
            file,
            margin,
            ucap,
            json,
        } => {
            let forest = load(&file)?;
            let lat = Lattice::new(&forest).map_err(|e| e.to_string())?;
            let report = lat.truncated_homology(margin, ucap);
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
                );
            } else {
                print_homology(&report);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Filtration {
            file,
            margin,
            ucap,
            json,
        } => {
            let forest = load(&file)?;
            let lat = Lattice::new(&forest).map_err(|e| e.to_string())?;
            let report = lat.filtration_profile(margin, ucap);
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
                );
            } else {
                print_filtration(&report);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_suite_report(r: &SuiteReport) {
    println!(
        "suite {} seed {} margin {} instances {}",
        r.suite, r.seed, r.margin, r.instances
    );
    println!(
        "checked {} skipped {} failures {} elapsed {} ms",
        r.checked,
        r.skipped,
        r.failures.len(),
        r.elapsed_ms
    );
    for n in &r.notes {
        println!("note: {n}");
    }
    for f in &r.failures {
        println!(
            "FAIL seed {} generator {} expected {} got {}\n{}",
            f.instance_seed, f.generator, f.expected, f.got, f.forest
        );
    }
    println!("{}", if r.failures.is_empty() { "PASS" } else { "FAIL" });
}

fn print_homology(r: &HomologyReport) {
    println!("margin {} ucap {}", r.margin, r.u_cap);
    for s in &r.sectors {
        println!("spinc {:?}", s.spinc);
        for row in &s.rows {
            println!(
                "  grading {} dim {}{}",
                row.grading,
                row.dim,
                if row.stable { "" } else { " (unstable)" }
            );
        }
    }
}

fn print_filtration(r: &FiltrationReport) {
    println!("margin {} ucap {}", r.margin, r.u_cap);
    for s in &r.sectors {
        println!("spinc {:?}", s.spinc);
        for row in &s.rows {
            let jumps: Vec<String> = row
                .jumps
                .iter()
                .map(|(a, d)| format!("alpha {a} dim {d}"))
                .collect();
            println!(
                "  grading {}: {}{}",
                row.grading,
                jumps.join(", "),
                if row.stable { "" } else { " (unstable)" }
            );
        }
    }
}
