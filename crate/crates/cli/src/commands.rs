//! The five batch commands. Each returns its rendered output plus an
//! optional failure that the caller reports after emitting the output, so
//! diagnostics never swallow the data that produced them.

use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde_json::json;
use treegibbs_core::envelope::{self, EnvelopeModel};
use treegibbs_core::oracle;
use treegibbs_core::path_field;
use treegibbs_core::period2;
use treegibbs_core::recursion::inward_sweep;
use treegibbs_core::ti;
use treegibbs_core::tree::split_assign;
use treegibbs_core::{ActivityVector, Builtin, ConstraintGraph, Field, PathCode, TreeShape};

use crate::output::{num, Format, Table};
use crate::range::LambdaRange;
use crate::{from_core, CmdError};

type Period2Row = (f64, bool, Vec<(f64, f64)>);

pub struct CommandOutcome {
    pub text: String,
    pub failure: Option<CmdError>,
}

impl CommandOutcome {
    fn ok(text: String) -> Self {
        Self { text, failure: None }
    }
}

/// Resolves `--model NAME` or `--graph-json PATH` into a graph and a label
/// for the output's model column.
pub fn resolve_graph(
    model: Option<&str>,
    graph_json: Option<&PathBuf>,
) -> Result<(ConstraintGraph, String), CmdError> {
    match (model, graph_json) {
        (Some(name), None) => {
            let builtin = Builtin::from_str(name).map_err(from_core)?;
            Ok((ConstraintGraph::builtin(builtin), builtin.name().to_string()))
        }
        (None, Some(path)) => {
            let g = crate::graphjson::load(path)?;
            let label = g.name().unwrap_or("custom").to_string();
            Ok((g, label))
        }
        (None, None) => Err(CmdError::Usage("one of --model or --graph-json is required".into())),
        (Some(_), Some(_)) => {
            Err(CmdError::Usage("--model and --graph-json are mutually exclusive".into()))
        }
    }
}

fn check_k(k: usize) -> Result<(), CmdError> {
    if k < 1 {
        return Err(CmdError::Usage(format!("order k must be >= 1, got {k}")));
    }
    Ok(())
}

pub fn ti_scan(
    g: &ConstraintGraph,
    label: &str,
    k: usize,
    range: LambdaRange,
    log: bool,
    certify: bool,
    format: Format,
) -> Result<CommandOutcome, CmdError> {
    range.validate()?;
    check_k(k)?;
    if g.q() != 2 {
        return Err(CmdError::Usage(format!(
            "ti-scan supports three-state graphs; got q = {}",
            g.q()
        )));
    }
    if certify && label != "pipe" {
        return Err(CmdError::Usage(
            "--certify runs the pipe uniqueness certificate and needs --model pipe".into(),
        ));
    }

    let lambdas = range.values(log);
    let results: Vec<Result<(ti::SolutionSet, Option<ti::PipeCertificate>), CmdError>> = lambdas
        .par_iter()
        .map(|&lam| {
            let act = ActivityVector::canonical(lam).map_err(from_core)?;
            let set = ti::count_ti_solutions(g, &act, k).map_err(from_core)?;
            let cert = if certify {
                Some(ti::pipe_uniqueness_certificate(lam, k).map_err(from_core)?)
            } else {
                None
            };
            Ok((set, cert))
        })
        .collect();

    let mut table =
        Table::new(vec!["lambda", "k", "model", "n_solutions", "z1", "z2", "kind", "residual"]);
    let mut failure: Option<CmdError> = None;
    for (lam, result) in lambdas.iter().zip(results) {
        let (set, cert) = result?;
        for sol in set.iter() {
            table.push(vec![
                num(*lam),
                k.to_string(),
                label.to_string(),
                set.len().to_string(),
                num(sol.z[0]),
                num(sol.z[1]),
                sol.kind.tag().to_string(),
                num(sol.residual),
            ]);
        }
        if let Some(cert) = cert {
            if !cert.passed() && failure.is_none() {
                failure = Some(CmdError::Certificate(format!(
                    "pipe uniqueness certificate failed at lambda = {lam}: {cert:?}"
                )));
            }
        }
    }
    Ok(CommandOutcome { text: table.render(format), failure })
}

pub fn period2(
    k: usize,
    range: LambdaRange,
    log: bool,
    format: Format,
) -> Result<CommandOutcome, CmdError> {
    range.validate()?;
    check_k(k)?;
    let lambdas = range.values(log);
    let results: Vec<Result<Period2Row, CmdError>> = lambdas
        .par_iter()
        .map(|&lam| {
            let x_star = period2::gamma_fixed_point(lam, k).map_err(from_core)?;
            let kesten = period2::kesten_condition(lam, k).map_err(from_core)?;
            let cycles = period2::solve_period2_symmetric(lam, k).map_err(from_core)?;
            Ok((x_star, kesten, cycles))
        })
        .collect();

    let mut table = Table::new(vec!["lambda", "k", "x_star", "kesten", "x0", "x1"]);
    for (lam, result) in lambdas.iter().zip(results) {
        let (x_star, kesten, cycles) = result?;
        let alternating = cycles
            .iter()
            .find(|(x, y)| (x - y).abs() > 1e-7 * x.abs().max(1.0) && x < y);
        let (x0, x1) = match alternating {
            Some((x, y)) => (num(*x), num(*y)),
            None => (String::new(), String::new()),
        };
        table.push(vec![
            num(*lam),
            k.to_string(),
            num(x_star),
            kesten.to_string(),
            x0,
            x1,
        ]);
    }
    Ok(CommandOutcome::ok(table.render(format)))
}

pub fn path_field(
    lam: f64,
    t: f64,
    n: usize,
    tol: f64,
    max_depth: Option<usize>,
) -> Result<CommandOutcome, CmdError> {
    if n > 20 {
        return Err(CmdError::Usage(format!(
            "depth {n} materialises more than a million vertices; use n <= 20"
        )));
    }
    let depth = match max_depth {
        Some(d) => d,
        None => path_field::default_max_depth(n, lam, tol).map_err(from_core)?,
    };
    let solved = path_field::solve_path_field(t, lam, n, depth, tol).map_err(from_core)?;

    let shape = TreeShape::new(2, n).map_err(from_core)?;
    let path = PathCode::new(t).map_err(from_core)?;
    let mut table = Table::new(vec!["vertex_address", "h1", "h2", "split_tag"]);
    for v in 0..solved.fields.vertices() {
        let addr = shape.address(v).map_err(from_core)?;
        let z = solved.fields.get(v);
        let tag = split_assign(&shape, &path, &addr).tag();
        table.push(vec![addr.to_string(), num(z[0].ln()), num(z[1].ln()), tag.to_string()]);
    }
    let failure = if solved.converged {
        None
    } else {
        Some(CmdError::Certificate(format!(
            "path field did not converge within depth {depth} (last change {:.3e})",
            solved.sup_change
        )))
    };
    Ok(CommandOutcome { text: table.render(Format::Csv), failure })
}

pub fn oracle_check(
    g: &ConstraintGraph,
    label: &str,
    lam: f64,
    k: usize,
    n: usize,
    boundary_value: Option<(f64, f64)>,
    perturb: Option<f64>,
) -> Result<CommandOutcome, CmdError> {
    check_k(k)?;
    if n < 1 {
        return Err(CmdError::Usage("oracle-check needs n >= 1".into()));
    }
    if g.q() != 2 {
        return Err(CmdError::Usage(format!(
            "oracle-check supports three-state graphs; got q = {}",
            g.q()
        )));
    }
    let act = ActivityVector::canonical(lam).map_err(from_core)?;
    let shape = TreeShape::new(k, n).map_err(from_core)?;
    let w = shape.layer_size(n).map_err(from_core)?;
    let (z1, z2) = boundary_value.unwrap_or((1.0, 1.0));
    let boundary = Field::constant(2, w, &[z1, z2]).map_err(from_core)?;
    let mut field = inward_sweep(g, &act, &shape, &boundary).map_err(from_core)?;

    if let Some(delta) = perturb {
        // break consistency at the first vertex of the layer below the
        // boundary; the defect must then exceed the failure threshold
        let v = shape.layer_offset(n - 1).map_err(from_core)?;
        let z = field.get(v);
        let bumped = [z[0] + delta, z[1]];
        field.set(v, &bumped);
    }

    let defect = oracle::check_compatibility(g, &act, k, n, &field).map_err(from_core)?;
    let table = oracle::measure_table(g, &act, k, n, &boundary).map_err(from_core)?;
    let report = json!({
        "model": label,
        "lambda": lam,
        "k": k,
        "n": n,
        "Z": table.total,
        "defect": defect,
        "marginals": table.root_marginal(),
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    let failure = if defect > 1e-12 {
        Some(CmdError::Certificate(format!(
            "consistency defect {defect:.3e} above the 1e-12 pass threshold"
        )))
    } else {
        None
    };
    Ok(CommandOutcome { text, failure })
}

pub fn bounds(
    model: EnvelopeModel,
    k: usize,
    range: LambdaRange,
    log: bool,
    format: Format,
) -> Result<CommandOutcome, CmdError> {
    range.validate()?;
    check_k(k)?;
    let lambdas = range.values(log);
    let results: Vec<Result<Vec<envelope::Envelope>, CmdError>> = lambdas
        .par_iter()
        .map(|&lam| envelope::solve_envelope(model, lam, k).map_err(from_core))
        .collect();

    let mut table =
        Table::new(vec!["lambda", "k", "model", "z1m", "z1p", "z2m", "z2p", "collapsed"]);
    for (lam, result) in lambdas.iter().zip(results) {
        for e in result? {
            table.push(vec![
                num(*lam),
                k.to_string(),
                model.name().to_string(),
                num(e.z1_lo),
                num(e.z1_hi),
                num(e.z2_lo),
                num(e.z2_hi),
                e.collapsed().to_string(),
            ]);
        }
    }
    Ok(CommandOutcome::ok(table.render(format)))
}
