//! `powl2bpmn`: compile, validate and check POWL programs, or generate them
//! from a process description.
//!
//! Exit codes: 0 success, 1 domain failure, 2 usage or configuration error.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use powl_bpmn::dsl::{self, ParseError};
use powl_bpmn::semantics::{bpmn_language, compare, powl_language, skeleton_fragment, Bounds, Verdict};
use powl_bpmn::transform::{self, prune, translate, BpmnFragment, NodeKind};
use powl_bpmn::xml::check_structure;
use powl_bpmn::{compile_model, PowlModel};
use powl_genpipe::{generate, GenerateError, HttpProvider, MockProvider, Provider, ProviderConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "powl2bpmn", version, about = "Resource-aware POWL to BPMN 2.0 collaboration compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a .powl program to BPMN XML.
    Compile {
        /// Input file, or `-` for stdin.
        input: String,
        /// Output path. Defaults to the input with a .bpmn extension, or
        /// stdout when reading stdin.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print element counts as JSON on stdout.
        #[arg(long)]
        stats: bool,
    },
    /// Validate a .powl program or a .bpmn document.
    Validate {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compare the bounded trace languages of a model and its diagram.
    Check {
        input: PathBuf,
        #[arg(long, default_value_t = 12)]
        max_len: usize,
        #[arg(long, default_value_t = 200_000)]
        max_traces: usize,
        #[arg(long)]
        json: bool,
        /// Test hook: corrupt the diagram before comparing.
        #[arg(long, hide = true)]
        mutate: Option<Mutation>,
    },
    /// Generate a model from a natural-language description.
    Generate {
        /// Text file with the process description.
        description: PathBuf,
        /// Provider config (JSON).
        #[arg(long, conflicts_with = "mock", required_unless_present = "mock")]
        config: Option<PathBuf>,
        /// Replay a transcript of canned responses instead of calling a provider.
        #[arg(long)]
        mock: Option<PathBuf>,
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Output stem; writes <stem>.powl, <stem>.bpmn and <stem>.log.json.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mutation {
    /// Append a marker to every task label.
    Relabel,
}

const DOMAIN: u8 = 1;
const USAGE: u8 = 2;

/// Message already printed; carries the exit code.
struct Fail(u8);

fn fail(code: u8, msg: impl std::fmt::Display) -> Fail {
    eprintln!("error: {msg}");
    Fail(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile { input, output, stats } => cmd_compile(&input, output, stats),
        Command::Validate { input, json } => cmd_validate(&input, json),
        Command::Check {
            input,
            max_len,
            max_traces,
            json,
            mutate,
        } => cmd_check(&input, Bounds::new(max_len, max_traces), json, mutate),
        Command::Generate {
            description,
            config,
            mock,
            max_iterations,
            output,
        } => cmd_generate(&description, config, mock, max_iterations, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code)) => ExitCode::from(code),
    }
}

fn read_input(input: &str) -> Result<String, Fail> {
    if input == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| fail(USAGE, format!("cannot read stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(input).map_err(|e| fail(USAGE, format!("cannot read {input}: {e}")))
    }
}

fn report_parse_errors(name: &str, errors: &[ParseError]) {
    for e in errors {
        eprintln!("{name}:{e}");
    }
}

fn parse_model(name: &str, text: &str) -> Result<PowlModel, Fail> {
    dsl::parse(text).map_err(|errors| {
        report_parse_errors(name, &errors);
        Fail(USAGE)
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Fail> {
    std::fs::write(path, contents).map_err(|e| fail(USAGE, format!("cannot write {}: {e}", path.display())))
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string(value).expect("serializable"));
}

fn cmd_compile(input: &str, output: Option<PathBuf>, stats: bool) -> Result<(), Fail> {
    let text = read_input(input)?;
    let name = if input == "-" { "<stdin>" } else { input };
    let model = parse_model(name, &text)?;
    let compiled = compile_model(model).map_err(|e| fail(DOMAIN, e))?;
    let target = match output {
        Some(p) => Some(p),
        None if input == "-" => None,
        None => Some(Path::new(input).with_extension("bpmn")),
    };
    let counts = serde_json::to_string(&compiled.skeleton.stats()).expect("serializable");
    match target {
        Some(path) => {
            write_file(&path, &compiled.xml)?;
            if stats {
                println!("{counts}");
            }
        }
        None => {
            // stdout carries the document, so counts go to stderr
            std::io::stdout()
                .write_all(compiled.xml.as_bytes())
                .map_err(|e| fail(USAGE, e))?;
            if stats {
                eprintln!("{counts}");
            }
        }
    }
    Ok(())
}

fn cmd_validate(input: &Path, as_json: bool) -> Result<(), Fail> {
    let ext = input.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext != "powl" && ext != "bpmn" {
        return Err(fail(USAGE, format!("unknown extension {ext:?}; expected .powl or .bpmn")));
    }
    let text =
        std::fs::read_to_string(input).map_err(|e| fail(USAGE, format!("cannot read {}: {e}", input.display())))?;
    // (machine form, human form)
    let problems: Vec<(serde_json::Value, String)> = if ext == "powl" {
        match dsl::parse(&text) {
            Ok(model) => match transform::compile(&model) {
                Ok(_) => Vec::new(),
                Err(e) => vec![(json!({"message": e.to_string()}), format!(" {e}"))],
            },
            Err(errors) => errors.iter().map(|e| (json!(e), e.to_string())).collect(),
        }
    } else {
        match check_structure(&text) {
            Ok(report) => report.violations.iter().map(|v| (json!(v), format!(" {v}"))).collect(),
            Err(e) => vec![(json!({"line": e.line, "col": e.col, "message": e.message}), e.to_string())],
        }
    };
    let name = input.display();
    if as_json {
        let list: Vec<_> = problems.iter().map(|(j, _)| j).collect();
        print_json(&json!({"valid": problems.is_empty(), "violations": list}));
    } else if problems.is_empty() {
        eprintln!("{name}: ok");
    } else {
        for (_, line) in &problems {
            eprintln!("{name}:{line}");
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Fail(DOMAIN))
    }
}

fn relabel(f: &mut BpmnFragment) {
    for n in f.nodes.values_mut() {
        if let (NodeKind::Task, Some(l)) = (n.kind, n.label.as_mut()) {
            l.push('#');
        }
    }
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Equal => "equal".into(),
        Verdict::Unequal { witness, in_model } => {
            let side = if *in_model { "model only" } else { "diagram only" };
            format!("unequal, witness <{}> ({side})", witness.join(", "))
        }
        Verdict::Inconclusive { reason } => format!("inconclusive ({reason})"),
    }
}

fn cmd_check(input: &Path, bounds: Bounds, as_json: bool, mutate: Option<Mutation>) -> Result<(), Fail> {
    let text =
        std::fs::read_to_string(input).map_err(|e| fail(USAGE, format!("cannot read {}: {e}", input.display())))?;
    let model = parse_model(&input.display().to_string(), &text)?;
    let skeleton = transform::compile(&model).map_err(|e| fail(DOMAIN, e))?;
    let mut fragment = prune(&translate(&model));
    let mut collab = skeleton_fragment(&skeleton).ok_or_else(|| fail(DOMAIN, "collaboration has no unique start and end"))?;
    if let Some(Mutation::Relabel) = mutate {
        relabel(&mut fragment);
        relabel(&mut collab);
    }
    let left = powl_language(&model, bounds);
    let mut verdicts = Vec::new();
    for f in [&fragment, &collab] {
        let right = bpmn_language(f, bounds).map_err(|e| fail(DOMAIN, e))?;
        verdicts.push(compare(&left, &right));
    }
    let overall = verdicts
        .iter()
        .find(|v| matches!(v, Verdict::Unequal { .. }))
        .or_else(|| verdicts.iter().find(|v| matches!(v, Verdict::Inconclusive { .. })))
        .unwrap_or(&verdicts[0])
        .clone();
    if as_json {
        let mut out = serde_json::to_value(&overall).expect("serializable");
        out["fragment"] = json!(verdicts[0]);
        out["collaboration"] = json!(verdicts[1]);
        out["modelTraces"] = json!(left.traces.len());
        print_json(&out);
    } else {
        println!("{}", verdict_text(&overall));
        eprintln!("fragment: {}", verdict_text(&verdicts[0]));
        eprintln!("collaboration: {}", verdict_text(&verdicts[1]));
    }
    match overall {
        Verdict::Equal => Ok(()),
        _ => Err(Fail(DOMAIN)),
    }
}

fn cmd_generate(
    description: &Path,
    config: Option<PathBuf>,
    mock: Option<PathBuf>,
    max_iterations: Option<usize>,
    output: Option<PathBuf>,
) -> Result<(), Fail> {
    let text = std::fs::read_to_string(description)
        .map_err(|e| fail(USAGE, format!("cannot read {}: {e}", description.display())))?;
    let (mut provider, cap): (Box<dyn Provider>, usize) = match (config, mock) {
        (_, Some(path)) => (
            Box::new(MockProvider::load(&path).map_err(|e| fail(USAGE, e))?),
            max_iterations.unwrap_or(5),
        ),
        (Some(path), None) => {
            let cfg = ProviderConfig::load(&path).map_err(|e| fail(USAGE, e))?;
            let http = HttpProvider::new(&cfg).map_err(|e| fail(USAGE, e))?;
            (Box::new(http), max_iterations.unwrap_or(cfg.max_iterations))
        }
        (None, None) => return Err(fail(USAGE, "either --config or --mock is required")),
    };
    if cap == 0 {
        return Err(fail(USAGE, "--max-iterations must be at least 1"));
    }
    let stem = output.unwrap_or_else(|| description.with_extension(""));
    let with_ext = |ext: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(ext);
        PathBuf::from(s)
    };
    let log_path = with_ext(".log.json");
    match generate(&text, provider.as_mut(), cap) {
        Ok(g) => {
            write_file(&with_ext(".powl"), &dsl::print(&g.model))?;
            write_file(&with_ext(".bpmn"), &g.compiled.xml)?;
            write_file(&log_path, &serde_json::to_string_pretty(&g.log).expect("serializable"))?;
            eprintln!("generated a valid model in {} iteration(s)", g.log.len());
            Ok(())
        }
        Err(e) => {
            if let Some(log) = e.log() {
                write_file(&log_path, &serde_json::to_string_pretty(log).expect("serializable"))?;
            }
            let code = match e {
                GenerateError::Exhausted(_) => DOMAIN,
                _ => USAGE,
            };
            Err(fail(code, e))
        }
    }
}
