//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when at least one fails, 2 for
//! input and schema errors, 3 when a structure does not meet a command's
//! precondition.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog;
use crate::document::ManifoldDocument;
use crate::error::{Error, Result};
use crate::fstruct::{classify, fundamental_form_reports, validate_fpk, FpkStructure};
use crate::hamjac::{verify_with, EtaChoice, HamiltonianCalculus, HAMILTONIAN_TOL};
use crate::symexpr::{parse_expr, CheckReport, Chart, Expr, DEFAULT_SAMPLES, DEFAULT_TOL};
use crate::sympl::{
    build_symplectization, verify_determinant, verify_expansion, verify_phi_power_vanishes,
    verify_top_power, CLOSED_TOL, TOP_POWER_TOL,
};

/// Expressions with more tree nodes than this are summarized when printed.
const PRINT_LIMIT: usize = 2000;

#[derive(Parser, Debug)]
#[command(name = "fpk", version, about = "Verify f-structures with parallelizable kernel")]
pub struct Cli {
    /// Sample points per identity.
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Tolerance override for every suite of the command.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Sampling seed; replaces the document's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write a machine-readable report to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct DocArg {
    /// Manifold-definition document (JSON).
    pub document: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the axioms of a metric f.pk-structure.
    Validate(DocArg),
    /// Decide the almost-K, almost-S, normal and CR-integrable properties.
    Classify(DocArg),
    /// Print the Hamiltonian vector field of a function.
    Hamiltonian {
        #[command(flatten)]
        doc: DocArg,
        #[arg(long)]
        f: String,
        /// Comma-separated coefficients c_j of eta = sum c_j eta^j.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eta: Option<Vec<f64>>,
    },
    /// Print the Jacobi bracket of two functions.
    Bracket {
        #[command(flatten)]
        doc: DocArg,
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eta: Option<Vec<f64>>,
    },
    /// Run every bracket identity over a list of functions.
    JacobiSuite {
        #[command(flatten)]
        doc: DocArg,
        /// Comma-separated expressions.
        #[arg(long, value_delimiter = ',', required = true)]
        fns: Vec<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eta: Option<Vec<f64>>,
    },
    /// Build and verify the symplectization.
    Symplectize(DocArg),
    /// Write a catalog structure as a document template.
    Catalog {
        /// One of standard_contact, generalized_heisenberg,
        /// symplectic_plane_bundle, warped_plane_bundle.
        #[arg(long)]
        emit: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Comma-separated structure constants; defaults to all ones.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alphas: Option<Vec<f64>>,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Machine-readable report.
#[derive(Serialize, Debug)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub samples: usize,
    pub pass: bool,
    pub reports: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

struct Outcome {
    text: Vec<String>,
    reports: Vec<CheckReport>,
    details: Value,
    // Reports that count toward the exit code; classification evidence
    // does not.
    gating: Vec<bool>,
}

impl Outcome {
    fn new() -> Outcome {
        Outcome {
            text: Vec::new(),
            reports: Vec::new(),
            details: Value::Null,
            gating: Vec::new(),
        }
    }

    fn push(&mut self, r: CheckReport) {
        self.reports.push(r);
        self.gating.push(true);
    }

    fn push_info(&mut self, r: CheckReport) {
        self.reports.push(r);
        self.gating.push(false);
    }

    fn extend(&mut self, rs: impl IntoIterator<Item = CheckReport>) {
        for r in rs {
            self.push(r);
        }
    }

    fn pass(&self) -> bool {
        self.reports
            .iter()
            .zip(&self.gating)
            .all(|(r, &g)| r.pass || !g)
    }
}

fn print_expr(e: &Expr, chart: &Chart) -> String {
    if e.tree_size(PRINT_LIMIT + 1) > PRINT_LIMIT {
        format!("<expression with {} distinct nodes>", e.node_count())
    } else {
        e.display(chart).to_string()
    }
}

fn load(doc: &Path, seed: Option<u64>) -> Result<(ManifoldDocument, FpkStructure)> {
    let d = ManifoldDocument::load(doc)?;
    let s = d.to_structure()?;
    let s = match seed {
        Some(seed) => s.reseeded(seed),
        None => s,
    };
    Ok((d, s))
}

fn parse(text: &str, chart: &Chart, field: &str) -> Result<Expr> {
    parse_expr(text.trim(), chart).map_err(|e| e.in_field(field))
}

fn eta_choice(s: &FpkStructure, c: &Option<Vec<f64>>) -> Result<EtaChoice> {
    match c {
        Some(c) => EtaChoice::new(s.alpha(), c.clone()),
        None => EtaChoice::minimal(s.alpha()),
    }
}

fn require_almost_s(s: &FpkStructure, samples: usize, tol: f64) -> Result<()> {
    let c = classify(s, samples, tol)?;
    if c.almost_s {
        Ok(())
    } else {
        let failed: Vec<&str> = c
            .reports
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.identity.as_str())
            .collect();
        Err(Error::PreconditionNotAlmostS(failed.join("; ")))
    }
}

struct Tols {
    structure: f64,
    hamiltonian: f64,
    top_power: f64,
}

fn tolerances(cli: &Cli, d: &ManifoldDocument) -> Tols {
    let t = d.tolerances.clone().unwrap_or_default();
    Tols {
        structure: cli.tol.or(t.structure).unwrap_or(DEFAULT_TOL),
        hamiltonian: cli.tol.or(t.hamiltonian).unwrap_or(HAMILTONIAN_TOL),
        top_power: cli.tol.or(t.symplectic).unwrap_or(TOP_POWER_TOL),
    }
}

fn execute(cli: &Cli) -> Result<(String, u64, Outcome)> {
    let samples = cli.samples;
    if samples == 0 {
        return Err(Error::Schema {
            field: "--samples".into(),
            reason: "must be at least 1".into(),
        });
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0) {
            return Err(Error::Schema {
                field: "--tol".into(),
                reason: "must be positive".into(),
            });
        }
    }
    let mut out = Outcome::new();
    let (name, seed) = match &cli.command {
        Command::Validate(a) => {
            let (d, s) = load(&a.document, cli.seed)?;
            let tol = tolerances(cli, &d).structure;
            out.extend(validate_fpk(&s, samples, tol)?);
            out.extend(fundamental_form_reports(&s, samples, tol)?);
            ("validate", s.chart().seed())
        }
        Command::Classify(a) => {
            let (d, s) = load(&a.document, cli.seed)?;
            let tol = tolerances(cli, &d).structure;
            let c = classify(&s, samples, tol)?;
            for r in c.reports.iter().cloned() {
                if r.identity.starts_with("declared alpha") {
                    out.push(r);
                } else {
                    out.push_info(r);
                }
            }
            out.text.push(format!(
                "almost_K: {}  almost_S: {}  normal: {}  CR-integrable: {}",
                c.almost_k, c.almost_s, c.normal, c.cr_integrable
            ));
            out.text.push(format!("fitted alpha: {:?}", c.fitted_alpha));
            out.details = json!({
                "almost_k": c.almost_k,
                "almost_s": c.almost_s,
                "normal": c.normal,
                "cr_integrable": c.cr_integrable,
                "fitted_alpha": c.fitted_alpha,
            });
            ("classify", s.chart().seed())
        }
        Command::Hamiltonian { doc, f, eta } => {
            let (d, s) = load(&doc.document, cli.seed)?;
            let tols = tolerances(cli, &d);
            require_almost_s(&s, samples, tols.structure)?;
            let calc = HamiltonianCalculus::new(&s, &eta_choice(&s, eta)?)?;
            let f = parse(f, s.chart(), "--f")?;
            let h = calc.hamiltonian(&f);
            let label = f.display(s.chart()).to_string();
            let mut comps = serde_json::Map::new();
            for (name, c) in s.chart().names().iter().zip(h.x_f.comps()) {
                let shown = print_expr(c, s.chart());
                out.text.push(format!("X_f[{}] = {}", name, shown));
                comps.insert(name.clone(), Value::String(shown));
            }
            out.extend(calc.residuals(&h, &label, samples, tols.hamiltonian)?);
            out.details = json!({ "f": label, "components": comps });
            ("hamiltonian", s.chart().seed())
        }
        Command::Bracket { doc, f, g, eta } => {
            let (d, s) = load(&doc.document, cli.seed)?;
            let tols = tolerances(cli, &d);
            require_almost_s(&s, samples, tols.structure)?;
            let calc = HamiltonianCalculus::new(&s, &eta_choice(&s, eta)?)?;
            let f = parse(f, s.chart(), "--f")?;
            let g = parse(g, s.chart(), "--g")?;
            let b = calc.bracket(&f, &g);
            let label = format!("({}, {})", f.display(s.chart()), g.display(s.chart()));
            let shown = print_expr(&b, s.chart());
            out.text.push(format!("{{f,g}} = {}", shown));
            out.extend(calc.bracket_cross_checks(&f, &g, &label, samples, tols.hamiltonian)?);
            out.details = json!({ "bracket": shown });
            ("bracket", s.chart().seed())
        }
        Command::JacobiSuite { doc, fns, eta } => {
            let (d, s) = load(&doc.document, cli.seed)?;
            let tols = tolerances(cli, &d);
            require_almost_s(&s, samples, tols.structure)?;
            let calc = HamiltonianCalculus::new(&s, &eta_choice(&s, eta)?)?;
            let fs = fns
                .iter()
                .enumerate()
                .map(|(i, t)| parse(t, s.chart(), &format!("--fns[{}]", i)))
                .collect::<Result<Vec<_>>>()?;
            out.extend(verify_with(&calc, &fs, samples, tols.hamiltonian)?);
            ("jacobi-suite", s.chart().seed())
        }
        Command::Symplectize(a) => {
            let (d, s) = load(&a.document, cli.seed)?;
            let tols = tolerances(cli, &d);
            require_almost_s(&s, samples, tols.structure)?;
            let sp = build_symplectization(&s)?;
            out.push(verify_expansion(&sp, &s, samples, tols.structure)?);
            let top = verify_top_power(&sp, &s, samples, tols.top_power)?;
            out.extend(top.reports());
            out.extend(verify_determinant(&sp, &s, samples, 2.0, 1e-6)?);
            out.push(verify_phi_power_vanishes(&s, samples, CLOSED_TOL)?);
            out.text.push(format!("extended chart: {}", sp.chart.names().join(", ")));
            out.text.push(format!("tau = {}", sp.tau.display(&sp.chart)));
            out.details = json!({
                "coordinates": sp.chart.names(),
                "t_box": sp.t_box,
                "tau": sp.tau.display(&sp.chart).to_string(),
                "expected_factor": top.expected_factor,
                "fitted_factor": top.fitted_factor,
            });
            ("symplectize", s.chart().seed())
        }
        Command::Catalog {
            emit,
            n,
            k,
            alphas,
            out: path,
        } => {
            let alphas = alphas.clone().unwrap_or_else(|| vec![1.0; *k]);
            let s = catalog::by_name(emit, *n, *k, &alphas)?;
            let s = match cli.seed {
                Some(seed) => s.reseeded(seed),
                None => s,
            };
            let doc = ManifoldDocument::from_structure(&s);
            match path {
                Some(p) => {
                    doc.save(p)?;
                    out.text.push(format!("wrote {}", p.display()));
                }
                None => out.text.push(doc.to_json().trim_end().to_string()),
            }
            ("catalog", s.chart().seed())
        }
    };
    Ok((name.to_string(), seed, out))
}

fn exit_code(e: &Error) -> i32 {
    if e.is_precondition() {
        3
    } else {
        2
    }
}

/// Runs the parsed command, printing to `stdout`/`stderr`; returns the exit
/// code.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let (name, seed, out) = match execute(cli) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e);
            return exit_code(&e);
        }
    };
    for line in &out.text {
        let _ = writeln!(stdout, "{}", line);
    }
    for r in &out.reports {
        let _ = writeln!(stdout, "{}", r);
    }
    let pass = out.pass();
    if !out.reports.is_empty() {
        let failed = out
            .reports
            .iter()
            .zip(&out.gating)
            .filter(|(r, &g)| g && !r.pass)
            .count();
        let _ = writeln!(stdout, "{} checks, {} failed", out.reports.len(), failed);
    }
    if let Some(path) = &cli.json {
        let report = RunReport {
            command: name,
            seed,
            samples: cli.samples,
            pass,
            reports: out.reports,
            details: out.details,
        };
        let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
        text.push('\n');
        if let Err(e) = std::fs::write(path, text) {
            let _ = writeln!(stderr, "error: {}: {}", path.display(), e);
            return 2;
        }
    }
    if pass {
        0
    } else {
        1
    }
}
