//! `pbs`: command-line frontend for the PBS-diagram calculus.
//!
//! Exit codes: 0 for success / equivalent / true, 1 for not-equivalent /
//! false (with any witness emitted), 2 for usage or input errors.

mod formats;
mod parser;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use pbs_calculus::diagram::BareDiagram;
use pbs_calculus::equiv::{self, Verdict};
use pbs_calculus::pathsem;
use pbs_calculus::qsem::{self, GateAssignment};
use pbs_calculus::synth::{self, WordFamily};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pbs", version, about = "PBS-diagram calculus: typing, word paths, synthesis, quantum semantics and observational equivalence")]
struct Cli {
    /// Numeric tolerance (max-norm) for every equality check.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for any randomized fallback in witness search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Typecheck a diagram or context file.
    Typecheck { file: PathBuf },
    /// Print the word-path table of a hole-free diagram.
    Paths { file: PathBuf },
    /// Synthesize a diagram realising a word family.
    Synth {
        /// Family file (`V,0: abab` lines, optional `arity: n` header).
        #[arg(long)]
        family: PathBuf,
        /// Insist on a negation-free diagram.
        #[arg(long)]
        neg_free: bool,
        /// Output `.pbs` file (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide structural congruence of two diagrams.
    Congruent { a: PathBuf, b: PathBuf },
    /// Quantum semantics (Choi record) of a diagram with channel files.
    Choi {
        diagram: PathBuf,
        /// Directory holding one `<label>.chan` file per gate.
        #[arg(long)]
        channels: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide observational equivalence at a level, with inline witness.
    Equiv {
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=2))]
        level: u8,
        a: PathBuf,
        b: PathBuf,
    },
    /// Emit distinguishing-witness files for a failing pair.
    Distinguish {
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=2))]
        level: u8,
        a: PathBuf,
        b: PathBuf,
        /// Output directory for context.pbs, input.mat, gate channels and
        /// the witness record.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Verify an iso-preorder witness matrix.
    IsoCheck {
        a: PathBuf,
        b: PathBuf,
        /// Matrix literal file for the isometry `W : E_a -> E_b`.
        #[arg(long)]
        witness: PathBuf,
    },
    /// Refute iso-equivalence by comparing generalized moments.
    IsoRefute {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_diagram(path: &Path) -> Result<BareDiagram> {
    let src = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let term = parser::parse_term(&src)
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    BareDiagram::new(term).map_err(|e| anyhow!("{}: type error: {e}", path.display()))
}

fn load_channel(path: &Path) -> Result<pbs_calculus::channels::PurifiedChannel> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    formats::channel_from_record(&text).with_context(|| format!("in {}", path.display()))
}

fn write_or_print(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verdict_record(v: &Verdict) -> String {
    let mut out = format!(
        "level: {}\nequivalent: {}\nfailed_criteria: [{}]\n",
        v.level,
        v.equivalent,
        v.failed_criteria
            .iter()
            .map(|c| format!("\"{c}\""))
            .collect::<Vec<_>>()
            .join(",")
    );
    if let Some(w) = &v.witness {
        out.push_str(&format!(
            "witness_context: {}\n",
            serde_json::Value::String(parser::print_term(w.context.term()))
        ));
        out.push_str(&format!("witness_gates: {}\n", formats::assignment_to_inline(&w.gates)));
        out.push_str(&format!("witness_input: {}\n", formats::matrix_to_literal(&w.input)));
        out.push_str(&format!("witness_separation: {}\n", formats::fmt_f64(w.separation)));
    }
    out
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.cmd {
        Cmd::Typecheck { file } => {
            let d = load_diagram(file)?;
            let labels: Vec<String> = d.alphabet().iter().cloned().collect();
            println!("arity: {}", d.arity());
            println!("alphabet: [{}]", labels.join(", "));
            println!("context: {}", d.has_hole());
            Ok(0)
        }
        Cmd::Paths { file } => {
            let d = load_diagram(file)?;
            let t = pathsem::path_table(&d).map_err(|e| anyhow!("{e}"))?;
            print!("{}", t.to_text());
            Ok(0)
        }
        Cmd::Synth { family, neg_free, output } => {
            let text = fs::read_to_string(family)
                .with_context(|| format!("cannot read {}", family.display()))?;
            let f = WordFamily::from_text(&text).map_err(|e| anyhow!("{e}"))?;
            let d = synth::synthesize(&f, *neg_free).map_err(|e| anyhow!("{e}"))?;
            write_or_print(output.as_deref(), &format!("{}\n", parser::print_term(d.term())))?;
            Ok(0)
        }
        Cmd::Congruent { a, b } => {
            let da = load_diagram(a)?;
            let db = load_diagram(b)?;
            let result = pbs_calculus::diagram::congruent(&da, &db).map_err(|e| anyhow!("{e}"))?;
            println!("congruent: {result}");
            Ok(if result { 0 } else { 1 })
        }
        Cmd::Choi { diagram, channels, output } => {
            let d = load_diagram(diagram)?;
            if d.has_hole() {
                bail!("{} is a context; fill the hole before taking semantics", diagram.display());
            }
            let mut gates = GateAssignment::new();
            for label in d.alphabet() {
                let path = channels.join(format!("{label}.chan"));
                gates.insert(label.clone(), load_channel(&path)?);
            }
            let choi = qsem::semantics_choi(&d, &gates).map_err(|e| anyhow!("{e}"))?;
            let dim_h = gates.dim_h().map_err(|e| anyhow!("{e}"))?;
            let record = format!(
                "pol_dim: 2\nn: {}\ndim_h: {}\nbasis_order: \"pol,pos,data\"\nchoi: {}\n",
                d.arity(),
                dim_h,
                formats::matrix_to_literal(&choi.matrix),
            );
            write_or_print(output.as_deref(), &record)?;
            Ok(0)
        }
        Cmd::Equiv { level, a, b } => {
            let (ca, cb) = (load_channel(a)?, load_channel(b)?);
            let v = equiv::distinguish_seeded(&ca, &cb, *level, cli.tol, cli.seed)
                .map_err(|e| anyhow!("{e}"))?;
            print!("{}", verdict_record(&v));
            Ok(if v.equivalent { 0 } else { 1 })
        }
        Cmd::Distinguish { level, a, b, output } => {
            let (ca, cb) = (load_channel(a)?, load_channel(b)?);
            let v = equiv::distinguish_seeded(&ca, &cb, *level, cli.tol, cli.seed)
                .map_err(|e| anyhow!("{e}"))?;
            if v.equivalent {
                println!("level: {level}");
                println!("equivalent: true");
                return Ok(0);
            }
            let w = v.witness.as_ref().expect("non-equivalent verdicts carry a witness");
            fs::create_dir_all(output)
                .with_context(|| format!("cannot create {}", output.display()))?;
            fs::write(output.join("context.pbs"), format!("{}\n", parser::print_term(w.context.term())))?;
            fs::write(output.join("input.mat"), format!("{}\n", formats::matrix_to_literal(&w.input)))?;
            for (label, ch) in w.gates.iter() {
                fs::write(output.join(format!("{label}.chan")), formats::channel_to_record(ch))?;
            }
            let verified = equiv::verify_witness(w, &ca, &cb).map_err(|e| anyhow!("{e}"))?;
            let record = format!(
                "level: {}\nfailed_criteria: [{}]\nseparation: {}\nverified_separation: {}\n",
                v.level,
                v.failed_criteria.iter().map(|c| format!("\"{c}\"")).collect::<Vec<_>>().join(","),
                formats::fmt_f64(w.separation),
                formats::fmt_f64(verified),
            );
            fs::write(output.join("witness.txt"), &record)?;
            print!("{record}");
            Ok(1)
        }
        Cmd::IsoCheck { a, b, witness } => {
            let (ca, cb) = (load_channel(a)?, load_channel(b)?);
            let text = fs::read_to_string(witness)
                .with_context(|| format!("cannot read {}", witness.display()))?;
            let w = formats::parse_matrix_literal(&text)?;
            let ok = equiv::check_iso_witness(&ca, &cb, &w, cli.tol).map_err(|e| anyhow!("{e}"))?;
            println!("iso_witness_valid: {ok}");
            Ok(if ok { 0 } else { 1 })
        }
        Cmd::IsoRefute { a, b, kmax } => {
            let (ca, cb) = (load_channel(a)?, load_channel(b)?);
            let r = equiv::iso_refute_moments(&ca, &cb, *kmax, cli.tol).map_err(|e| anyhow!("{e}"))?;
            println!("refuted: {}", r.refuted);
            match r.k {
                Some(k) => {
                    println!("k: {k}");
                    println!("difference: {}", formats::fmt_f64(r.difference));
                    println!("moment_a: {}", formats::matrix_to_literal(&r.moment_a.unwrap()));
                    println!("moment_b: {}", formats::matrix_to_literal(&r.moment_b.unwrap()));
                }
                None => println!("conclusion: \"inconclusive\""),
            }
            Ok(if r.refuted { 1 } else { 0 })
        }
    }
}
