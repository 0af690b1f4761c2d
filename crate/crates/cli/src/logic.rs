//! `parse`, `eval` and `refine`.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{bail, Context, Result};
use tilr_core::fuzzy::value_table;
use tilr_core::{
    build_knowledge_formula, desugar, format_formula, ilr_refine, Alphabet, CompiledGraph,
    Implication, LabelVector, RefinementConfig,
};

use crate::input::{parse_labels, read_trace, write_trace};
use crate::{EvalArgs, ParseArgs, RefineArgs};

pub fn parse(args: &ParseArgs) -> Result<()> {
    let atoms = if args.atoms.is_empty() {
        args.formula.atoms(&[])?
    } else {
        args.atoms.clone()
    };
    let alphabet = Alphabet::new(atoms)?;
    let (_, f) = args.formula.resolve(&alphabet, &[])?;
    let mut out = io::stdout().lock();
    writeln!(out, "formula: {}", format_formula(&f))?;
    writeln!(out, "atoms: {}", alphabet.atoms().join(", "))?;
    writeln!(out, "desugared: {}", format_formula(&desugar(&f)))?;
    if let Some(n) = args.len {
        let graph = CompiledGraph::compile_with(&f, n, &alphabet, &[], args.implication)?;
        writeln!(out, "graph nodes for length {n}: {}", graph.len())?;
    }
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let trace = read_trace(&args.trace)?;
    let (names, values) = parse_labels(&args.labels)?;
    let labels = LabelVector::new(names.clone(), values)?;
    let (_, f) = args.formula.resolve(trace.alphabet(), &names)?;
    let prepared = match args.implication {
        Implication::Material => desugar(&f),
        Implication::Residuum => tilr_core::ltlf::desugar_keep_implies(&f),
    };
    let table = value_table(&trace, &labels, &prepared)?;
    let mut out = io::stdout().lock();
    if args.all_instants {
        writeln!(out, "instant,value")?;
        for (i, v) in table.iter().enumerate() {
            writeln!(out, "{},{v}", i + 1)?;
        }
    } else {
        writeln!(out, "{}", table[0])?;
    }
    Ok(())
}

pub fn refine(args: &RefineArgs) -> Result<()> {
    let trace = read_trace(&args.trace)?;
    let (mut names, mut values) = parse_labels(&args.labels)?;
    let (_, phi) = args.formula.resolve(trace.alphabet(), &names)?;
    let formula = match &args.knowledge {
        Some(label) => {
            if trace.alphabet().contains(label) {
                bail!("knowledge label `{label}` is also a trace column");
            }
            if !names.contains(label) {
                names.push(label.clone());
                values.push(0.0);
            }
            build_knowledge_formula(&phi, label, args.implication)
        }
        None => phi,
    };
    let labels = LabelVector::new(names.clone(), values)?;
    let graph = CompiledGraph::compile_with(
        &formula,
        trace.len(),
        trace.alphabet(),
        &names,
        args.implication,
    )?;
    let cfg = RefinementConfig {
        target: args.target,
        max_iterations: args.max_iters,
        tolerance: args.eps,
    };
    let result = ilr_refine(&graph, &trace, &labels, &cfg)?;
    match &args.out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_trace(BufWriter::new(file), &result.trace)?;
        }
        None => write_trace(io::stdout().lock(), &result.trace)?,
    }
    let mut out = io::stdout().lock();
    if args.out.is_none() {
        writeln!(out)?;
    }
    for (name, v) in result.labels.names().iter().zip(result.labels.values()) {
        writeln!(out, "label {name} = {v} (predicted {})", *v >= 0.5)?;
    }
    writeln!(out, "value = {}", result.value)?;
    writeln!(out, "iterations = {}", result.iterations)?;
    writeln!(out, "converged = {}", result.converged)?;
    Ok(())
}
