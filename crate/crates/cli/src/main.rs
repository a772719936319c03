use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ancestor::cutjoin::{build_cut_and_join, run_recursion};
use ancestor::error::Error;
use ancestor::generators::check_commutation_relations;
use ancestor::giventaldata::{direct_ancestor_potential_with, inner_order, preset, GiventalData, Margins};
use ancestor::modeops::WindowSpec;
use ancestor::scalarseries::format_scalar;
use ancestor::tpoly::HbarSeries;
use ancestor::virasoro::{build_h, build_l_family, check_constraints, solve_from_constraints_with};
use ancestor::virgroup::check_virtos;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const EXIT_VALIDATION: u8 = 1;
const EXIT_MISMATCH: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "ancestor", version, about = "Exact generalized ancestor potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute Z and write its coefficients.
    Compute {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Solver::Direct)]
        solver: Solver,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run a check suite and print a pass/fail report.
    Check {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        order: Option<usize>,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a config and print its windows and inner orders.
    Inspect {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct Input {
    #[arg(long)]
    config: Option<PathBuf>,
    /// airy, bessel or mixed-n2
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    Direct,
    Cutjoin,
    Virasoro,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Commutators,
    Virasoro,
    Virtos,
    Dimension,
    WindowStability,
    All,
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::Validation(_) => EXIT_VALIDATION,
            Error::Precision(_) | Error::Window(_) | Error::Mismatch(_) => EXIT_MISMATCH,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
}

fn load(input: &Input, order: Option<usize>) -> Result<GiventalData, Failure> {
    let mut d = match (&input.config, &input.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            GiventalData::from_json(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => {
            return Err(Failure { code: EXIT_VALIDATION, message: "one of --config or --preset is required".into() })
        }
    };
    if let Some(k) = order {
        d.order_k = k;
    }
    d.validate().map_err(Error::from)?;
    Ok(d)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn solve(d: &GiventalData, solver: Solver, margins: Margins) -> Result<HbarSeries, Failure> {
    Ok(match solver {
        Solver::Direct | Solver::All => direct_ancestor_potential_with(d, margins)?,
        Solver::Cutjoin => run_recursion(&build_cut_and_join(d, margins)?, d.order_k),
        Solver::Virasoro => solve_from_constraints_with(d, margins)?,
    })
}

fn rows_json(z: &HbarSeries) -> serde_json::Value {
    z.rows()
        .into_iter()
        .map(|(m, mono, c)| json!({ "hbar": m, "monomial": mono.render(), "value": format_scalar(c) }))
        .collect()
}

fn rows_csv(z: &HbarSeries) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let bad = |e: csv::Error| Failure { code: EXIT_IO, message: e.to_string() };
    w.write_record(["hbar_order", "monomial", "numerator", "denominator"]).map_err(bad)?;
    for (m, mono, c) in z.rows() {
        w.write_record([m.to_string(), mono.render(), c.numer().to_string(), c.denom().to_string()]).map_err(bad)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure { code: EXIT_IO, message: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `z.json` becomes `z.cutjoin.txt`.
fn sibling(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.cutjoin.txt"))
}

fn compute(input: &Input, solver: Solver, order: Option<usize>, out: &Path, format: Format) -> Result<(), Failure> {
    let d = load(input, order)?;
    let name = match solver {
        Solver::Direct => "direct",
        Solver::Cutjoin => "cutjoin",
        Solver::Virasoro => "virasoro",
        Solver::All => "all",
    };
    let mut verdict = None;
    let z = match solver {
        Solver::Cutjoin => {
            let w = build_cut_and_join(&d, Margins::default())?;
            write(&sibling(out), &w.export())?;
            run_recursion(&w, d.order_k)
        }
        Solver::All => {
            let a = solve(&d, Solver::Direct, Margins::default())?;
            let b = solve(&d, Solver::Cutjoin, Margins::default())?;
            let c = solve(&d, Solver::Virasoro, Margins::default())?;
            let diff = [("cutjoin", &b), ("virasoro", &c)]
                .into_iter()
                .find_map(|(n, z)| a.first_difference(z).map(|x| (n, x)));
            verdict = Some(match diff {
                None => "match".to_string(),
                Some((n, (m, mono, x, y))) => format!(
                    "mismatch: direct and {n} differ at hbar^{m} {mono}: {} vs {}",
                    format_scalar(&x),
                    format_scalar(&y)
                ),
            });
            a
        }
        s => solve(&d, s, Margins::default())?,
    };
    let text = match format {
        Format::Json => {
            let mut doc = json!({ "solver": name, "order_K": d.order_k, "coefficients": rows_json(&z) });
            if let Some(v) = &verdict {
                doc["verdict"] = json!(v);
            }
            serde_json::to_string_pretty(&doc).expect("json serializes") + "\n"
        }
        Format::Csv => rows_csv(&z)?,
    };
    write(out, &text)?;
    if let Some(v) = verdict {
        println!("{v}");
        if v != "match" {
            return Err(Failure { code: EXIT_MISMATCH, message: v });
        }
    }
    Ok(())
}

struct Report {
    lines: Vec<String>,
    failed: bool,
}

impl Report {
    fn record(&mut self, suite: &str, ok: bool, detail: impl Into<String>) {
        self.failed |= !ok;
        self.lines.push(format!("{} {suite}: {}", if ok { "PASS" } else { "FAIL" }, detail.into()));
    }
}

fn run_suite(suite: Suite, input: &Input, order: Option<usize>, report: &mut Report) -> Result<(), Failure> {
    match suite {
        Suite::Commutators => {
            let checks = check_commutation_relations(6, &WindowSpec::for_degree(12));
            let bad: Vec<_> = checks.iter().filter(|c| !c.holds).map(|c| c.name.clone()).collect();
            let detail = if bad.is_empty() {
                format!("{} identities hold for |k|, |m| <= 6", checks.len())
            } else {
                format!("failing: {}", bad.join(", "))
            };
            report.record("commutators", bad.is_empty(), detail);
        }
        Suite::Virasoro => {
            let d = load(input, order)?;
            let mut up = d.clone();
            up.order_k += 1;
            let z = direct_ancestor_potential_with(&up, Margins::default())?;
            let fam = build_l_family(&d, 3, &up.window(Margins::default()))?;
            match check_constraints(&fam, &z, d.order_k)? {
                None => report.record(
                    "virasoro",
                    true,
                    format!("{} operators annihilate Z through hbar^{}", fam.members.len(), d.order_k),
                ),
                Some(v) => report.record("virasoro", false, v.to_string()),
            }
        }
        Suite::Virtos => {
            let d = load(input, order)?;
            for a in 0..d.n() {
                let r = check_virtos(&d, a, d.order_k, Margins::default())?;
                report.record("virtos", r.ok(), r.render());
            }
        }
        Suite::Dimension => {
            let d = load(input, order)?;
            let z = direct_ancestor_potential_with(&d, Margins::default())?;
            let h = build_h(&d, &d.window(Margins::default()))?;
            let bad = (0..=d.order_k).find(|&m| {
                h.apply_poly(z.coeff(m)) != z.coeff(m).scale(&ancestor::scalarseries::int(m as i64))
            });
            match bad {
                None => report.record("dimension", true, format!("H Z^(m) = m Z^(m) through hbar^{}", d.order_k)),
                Some(m) => report.record("dimension", false, format!("H Z^({m}) differs from {m} Z^({m})")),
            }
        }
        Suite::WindowStability => {
            let d = load(input, order)?;
            for (name, s) in [("direct", Solver::Direct), ("cutjoin", Solver::Cutjoin), ("virasoro", Solver::Virasoro)] {
                let a = solve(&d, s, Margins::default())?;
                let b = solve(&d, s, Margins::uniform(2))?;
                match a.first_difference(&b) {
                    None => report.record("window-stability", true, format!("{name}: unchanged with margins +2")),
                    Some((m, mono, _, _)) => {
                        report.record("window-stability", false, format!("{name}: hbar^{m} {mono} moves with margins"))
                    }
                }
            }
        }
        Suite::All => {
            for s in [Suite::Commutators, Suite::Virasoro, Suite::Virtos, Suite::Dimension, Suite::WindowStability] {
                run_suite(s, input, order, report)?;
            }
        }
    }
    Ok(())
}

fn check(input: &Input, suite: Suite, order: Option<usize>, out: Option<&Path>) -> Result<(), Failure> {
    let mut report = Report { lines: Vec::new(), failed: false };
    run_suite(suite, input, order, &mut report)?;
    let text = report.lines.join("\n") + "\n";
    print!("{text}");
    if let Some(path) = out {
        write(path, &text)?;
    }
    if report.failed {
        return Err(Failure { code: EXIT_MISMATCH, message: "check failed".into() });
    }
    Ok(())
}

fn inspect(input: &Input) -> Result<(), Failure> {
    let d = load(input, None)?;
    let w = d.window(Margins::default());
    println!("sectors: {}", d.n());
    for (a, s) in d.sectors.iter().enumerate() {
        let shifts: Vec<String> = s.delta_t.iter().map(|(k, c)| format!("{k}:{}", format_scalar(c))).collect();
        println!(
            "  sector {}: alpha {} sqrt_delta {} delta_T {{{}}} inner order {}",
            a + 1,
            s.alpha,
            format_scalar(&s.sqrt_delta),
            shifts.join(", "),
            inner_order(&d, a, d.order_k)?
        );
    }
    println!("r_jets: {}", d.r_jets.len());
    println!("order_K: {}", d.order_k);
    println!("window: max_level {} max_degree {}", w.max_level, w.max_degree);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Compute { input, solver, order, out, format } => compute(input, *solver, *order, out, *format),
        Command::Check { input, suite, order, out } => check(input, *suite, *order, out.as_deref()),
        Command::Inspect { input } => inspect(input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
