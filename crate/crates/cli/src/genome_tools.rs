use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use neat_core::error::format_cycle;
use neat_core::export::{build_formula, load_genome, to_dot, FormulaStyle, GenomeDocument, Precision};
use neat_core::genome::decode_genome;
use neat_core::validate::validate;
use neat_core::Error;

use crate::CliError;

fn read_document(path: &Path) -> Result<GenomeDocument, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    load_genome(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn issue_text(e: &Error) -> String {
    match e {
        Error::CycleDetected(keys) => format!("cycle {}", format_cycle(keys)),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InspectReport {
    pub text: String,
    pub valid: bool,
}

/// Node and connection tables, counts and the validator's findings.
pub fn cmd_inspect(path: &Path) -> Result<InspectReport, CliError> {
    let doc = read_document(path)?;
    let g = &doc.genome;
    let mut out = String::new();
    let _ = writeln!(out, "genome {} ({} inputs, {} outputs)", path.display(), g.num_inputs, g.num_outputs);
    match decode_genome(g, &doc.schema) {
        Ok(d) => {
            let _ = writeln!(out, "\nnodes ({} of {} rows used)", d.nodes.len(), g.nodes.nrows());
            let _ = writeln!(out, "{:>6}  {:>7}  {:>12}  {:>12}  {:<11}  {:<10}", "key", "role", "bias", "response", "aggregation", "activation");
            for n in &d.nodes {
                let role = if g.is_input(n.key) {
                    "input"
                } else if g.is_output(n.key) {
                    "output"
                } else {
                    "hidden"
                };
                let _ = writeln!(
                    out,
                    "{:>6}  {:>7}  {:>12.6}  {:>12.6}  {:<11}  {:<10}",
                    n.key, role, n.bias, n.response, n.aggregation, n.activation
                );
            }
            let _ = writeln!(out, "\nconnections ({} of {} rows used)", d.conns.len(), g.conns.nrows());
            let _ = writeln!(out, "{:>6}  {:>6}  {:>7}  {:>12}", "in", "out", "enabled", "weight");
            for c in &d.conns {
                let _ = writeln!(out, "{:>6}  {:>6}  {:>7}  {:>12.6}", c.input, c.output, c.enabled, c.weight);
            }
            out.push('\n');
        }
        Err(e) => {
            let _ = writeln!(out, "\ncannot decode rows: {e}\n");
        }
    }

    let issues = validate(g, &doc.schema);
    let enabled = g.conn_rows().filter(|&r| g.conn_enabled(r)).count();
    if issues.is_empty() {
        let _ = writeln!(
            out,
            "VALID ({} nodes, {} connections, {} enabled)",
            g.node_count(),
            g.conn_count(),
            enabled
        );
    } else {
        for e in &issues {
            let _ = writeln!(out, "INVALID: {}", issue_text(e));
        }
    }
    Ok(InspectReport { text: out, valid: issues.is_empty() })
}

#[derive(Debug, Clone)]
pub struct ExportArgs {
    pub genome: PathBuf,
    pub dot: bool,
    pub formula: bool,
    pub style: FormulaStyle,
    /// Full-precision literals instead of three decimals.
    pub exact: bool,
    /// Output file when one artifact is requested and this is not an
    /// existing directory; otherwise the directory to write into.
    pub out: Option<PathBuf>,
}

/// Writes the requested artifacts and returns their paths.
pub fn cmd_export(args: &ExportArgs) -> Result<Vec<PathBuf>, CliError> {
    if !args.dot && !args.formula {
        return Err(CliError::Config("export: pass --dot, --formula or both".into()));
    }
    let doc = read_document(&args.genome)?;
    let issues = validate(&doc.genome, &doc.schema);
    if !issues.is_empty() {
        let list: Vec<String> = issues.iter().map(issue_text).collect();
        return Err(CliError::Runtime(format!("invalid genome {}: {}", args.genome.display(), list.join("; "))));
    }

    let formula_ext = match args.style {
        FormulaStyle::Plain => "formula.txt",
        FormulaStyle::Typeset => "tex",
    };
    let stem = args.genome.file_stem().map_or_else(|| "genome".into(), |s| s.to_string_lossy().into_owned());
    let single = args.dot != args.formula;
    let target = |ext: &str| -> PathBuf {
        match &args.out {
            Some(p) if single && !p.is_dir() => p.clone(),
            Some(dir) => dir.join(format!("{stem}.{ext}")),
            None => args.genome.with_file_name(format!("{stem}.{ext}")),
        }
    };
    if let Some(dir) = args.out.as_ref().filter(|_| !single) {
        fs::create_dir_all(dir)?;
    }

    let mut written = Vec::new();
    if args.dot {
        let path = target("dot");
        fs::write(&path, to_dot(&doc.genome))?;
        written.push(path);
    }
    if args.formula {
        let precision = if args.exact { Precision::Exact } else { Precision::Display };
        let text = build_formula(&doc.genome, &doc.schema)?.render(args.style, precision);
        let path = target(formula_ext);
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
