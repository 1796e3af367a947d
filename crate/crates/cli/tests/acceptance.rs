//! Release checklist. Runs without the libtest harness so each criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use powl_bpmn::dsl::{parse, print};
use powl_bpmn::sample::{random_model, random_operator, SampleConfig};
use powl_bpmn::semantics::{languages_equal, Bounds, Verdict};
use powl_bpmn::transform::{lift_assignment, prune, translate, NodeKind};
use powl_bpmn::xml::{check_structure, DocRule};
use powl_bpmn::{compile_model, compile_source, CollaborationSkeleton, PowlModel};
use powl_genpipe::{generate, GenerateError, MockProvider};

fn corpus() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "powl"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            (stem, std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

fn corpus_file(prefix: &str) -> String {
    corpus()
        .into_iter()
        .find(|(name, _)| name.split('_').next() == Some(prefix))
        .unwrap_or_else(|| panic!("no corpus file {prefix}"))
        .1
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn oracle_equivalence() -> Outcome {
    let cfg = SampleConfig::default();
    let bounds = Bounds::new(12, 200_000);
    let mut equal = 0;
    for seed in 0..200 {
        let m = random_model(seed, &cfg);
        match languages_equal(&m, &prune(&translate(&m)), bounds).map_err(|e| e.to_string())? {
            Verdict::Equal => equal += 1,
            other => return Err(format!("seed {seed}: {other:?}")),
        }
    }
    Ok(format!("{equal}/200 random models equal at maxLen 12"))
}

fn gateway_law() -> Outcome {
    let mut cases = 0;
    for n in 1..=5 {
        for seed in 0..40 {
            for (choice, kind) in [(false, NodeKind::AndGateway), (true, NodeKind::XorGateway)] {
                let f = translate(&random_operator(seed, n, choice));
                let got = f.count(kind);
                if got != 2 + 2 * n {
                    return Err(format!("n={n} seed={seed} choice={choice}: {got} gateways"));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} operators have exactly 2 + 2n gateways"))
}

fn well_formed(m: &PowlModel, sk: &CollaborationSkeleton) -> Result<(), String> {
    let problems = sk.check();
    if !problems.is_empty() {
        return Err(problems.join("; "));
    }
    for (pool, flows) in &sk.flows_by_pool {
        let nodes = &sk.nodes_by_pool[pool];
        if let Some((u, v)) = flows.iter().find(|(u, v)| !nodes.contains_key(u) || !nodes.contains_key(v)) {
            return Err(format!("sequence flow {u} -> {v} leaves pool {pool}"));
        }
    }
    let f = prune(&translate(m));
    let chi = lift_assignment(&f, m).map_err(|e| e.to_string())?;
    let crossing = f.flows.iter().filter(|(u, v)| chi[u].pool != chi[v].pool).count();
    if crossing != sk.message_flows.len() {
        return Err(format!("{crossing} crossing edges but {} message flows", sk.message_flows.len()));
    }
    let ids: Vec<&str> = sk.nodes().map(|n| n.id.as_str()).collect();
    let unique: HashSet<&str> = ids.iter().copied().collect();
    if unique.len() != ids.len() {
        return Err("node sets overlap across pools".into());
    }
    let assigned: BTreeSet<&str> = sk.assignment.keys().map(String::as_str).collect();
    if assigned != unique.into_iter().collect() {
        return Err("assignment is not total".into());
    }
    Ok(())
}

fn collaboration_well_formed() -> Outcome {
    let mut checked = 0;
    for (name, text) in corpus() {
        let c = compile_source(&text).map_err(|e| format!("{name}: {e}"))?;
        well_formed(&c.model, &c.skeleton).map_err(|e| format!("{name}: {e}"))?;
        checked += 1;
    }
    let cfg = SampleConfig {
        pools: 2,
        max_visible: 8,
        ..SampleConfig::default()
    };
    for seed in 0..100 {
        let m = random_model(seed, &cfg);
        let c = compile_model(m.clone()).map_err(|e| format!("seed {seed}: {e}"))?;
        well_formed(&m, &c.skeleton).map_err(|e| format!("seed {seed}: {e}"))?;
        checked += 1;
    }
    Ok(format!("{checked} collaborations well formed"))
}

fn corpus_fidelity() -> Outcome {
    let mut seen = Vec::new();
    for (prefix, pools, lanes) in [("p13", 2, 4), ("p1", 2, 4), ("p16", 1, 5)] {
        let s = compile_source(&corpus_file(prefix)).map_err(|e| e.to_string())?.skeleton.stats();
        if (s.pools, s.lanes) != (pools, lanes) {
            return Err(format!("{prefix}: {} pools / {} lanes", s.pools, s.lanes));
        }
        seen.push(format!("{prefix} {pools}/{lanes}"));
    }
    Ok(format!("pools/lanes {}", seen.join(", ")))
}

fn layout_soundness() -> Outcome {
    let mut n = 0;
    for (name, text) in corpus() {
        let c = compile_source(&text).map_err(|e| e.to_string())?;
        let problems = c.diagram.check(&c.skeleton);
        if !problems.is_empty() {
            return Err(format!("{name}: {}", problems.join("; ")));
        }
        if !c.diagram.fallbacks.is_empty() {
            return Err(format!("{name}: fallback routes {:?}", c.diagram.fallbacks));
        }
        n += 1;
    }
    Ok(format!("{n} corpus diagrams satisfy all geometric invariants"))
}

/// Moves the target of the first sequence flow of `process_1` into `process_2`.
fn cross_pool(xml: &str) -> Option<String> {
    let doc = roxmltree::Document::parse(xml).ok()?;
    let process = |id: &str| doc.descendants().find(|n| n.has_tag_name((MODEL, "process")) && n.attribute("id") == Some(id));
    let flow = process("process_1")?
        .children()
        .find(|n| n.has_tag_name((MODEL, "sequenceFlow")))?;
    let foreign = process("process_2")?
        .descendants()
        .find(|n| n.has_tag_name((MODEL, "flowNodeRef")))?
        .text()?;
    let start = xml.find(&format!("<bpmn:sequenceFlow id=\"{}\"", flow.attribute("id")?))?;
    let end = start + xml[start..].find('>')?;
    let old = format!("targetRef=\"{}\"", flow.attribute("targetRef")?);
    let tag = xml[start..end].replacen(&old, &format!("targetRef=\"{foreign}\""), 1);
    Some(format!("{}{}{}", &xml[..start], tag, &xml[end..]))
}

fn unlaned(xml: &str) -> Option<String> {
    let start = xml.find("<bpmn:flowNodeRef>")?;
    let end = start + xml[start..].find("</bpmn:flowNodeRef>")? + "</bpmn:flowNodeRef>".len();
    Some(format!("{}{}", &xml[..start], &xml[end..]))
}

fn dangling_shape(xml: &str) -> Option<String> {
    let start = xml.find("<bpmndi:BPMNShape")?;
    let rest = &xml[start..];
    let attr = rest.find("bpmnElement=\"")? + "bpmnElement=\"".len();
    let close = rest[attr..].find('"')?;
    Some(format!("{}{}ghost_element{}", &xml[..start], &rest[..attr], &rest[attr + close..]))
}

const MODEL: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";

fn xml_structure() -> Outcome {
    let mut applied = 0;
    let mut detected = 0;
    for (name, text) in corpus() {
        let xml = compile_source(&text).map_err(|e| e.to_string())?.xml;
        let report = check_structure(&xml).map_err(|e| e.to_string())?;
        if !report.is_empty() {
            return Err(format!("{name}: {:?}", report.violations));
        }
        let mutations: [(Option<String>, DocRule); 3] = [
            (cross_pool(&xml), DocRule::CrossPoolSequenceFlow),
            (unlaned(&xml), DocRule::UnassignedFlowNode),
            (dangling_shape(&xml), DocRule::OrphanDiagramElement),
        ];
        for (mutated, rule) in mutations {
            let Some(mutated) = mutated else { continue };
            applied += 1;
            match check_structure(&mutated) {
                Ok(r) if r.has(rule) => detected += 1,
                other => return Err(format!("{name}: {rule:?} mutation missed ({other:?})")),
            }
        }
    }
    Ok(format!("corpus clean; {detected}/{applied} seeded mutations detected"))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_powl2bpmn");
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut n = 0;
    for (name, _) in corpus() {
        let input = dir.join(format!("{name}.powl"));
        let run = || -> Result<Vec<u8>, String> {
            let out = Command::new(bin)
                .args(["compile", "-"])
                .stdin(std::fs::File::open(&input).map_err(|e| e.to_string())?)
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(String::from_utf8_lossy(&out.stderr).into_owned());
            }
            Ok(out.stdout)
        };
        let first = run()?;
        if first != run()? {
            return Err(format!("{name}: two runs differ"));
        }
        let pinned = std::fs::read(golden.join(format!("{name}.bpmn"))).map_err(|e| format!("{name}: {e}"))?;
        if first != pinned {
            return Err(format!("{name}: output differs from golden file"));
        }
        n += 1;
    }
    Ok(format!("{n} corpus outputs byte-identical across runs and to golden files"))
}

const VALID: &str = "```\nprocess \"Leave\" {\n  po p {\n    act a \"Request Leave\" @ \"Firm\" / \"Staff\"\n    act b \"Approve Leave\" @ \"Firm\" / \"HR\"\n    order { a -> b }\n  }\n}\n```";
const INVALID: &str = "```\nprocess \"Leave\" {\n  po p {\n    act a \"Request Leave\" @ \"Firm\" / \"Staff\"\n    order { a -> missing }\n  }\n}\n```";

fn generation_loop() -> Outcome {
    let mut mock = MockProvider::from_texts([INVALID, VALID]).map_err(|e| e.to_string())?;
    let g = generate("A leave request is approved by HR.", &mut mock, 5).map_err(|e| e.to_string())?;
    if g.log.len() != 2 {
        return Err(format!("repair transcript gave log length {}", g.log.len()));
    }
    let errors = &g.log.iterations[0].errors;
    if errors.is_empty() || !errors.iter().all(|e| g.log.iterations[1].prompt.contains(e.as_str())) {
        return Err("iteration 2 prompt lacks the iteration 1 errors".into());
    }
    let mut always = MockProvider::from_texts([INVALID]).map_err(|e| e.to_string())?;
    match generate("A leave request is approved by HR.", &mut always, 3) {
        Err(GenerateError::Exhausted(log)) if log.len() == 3 && always.calls() == 3 => {}
        other => return Err(format!("always-invalid transcript: {other:?}")),
    }
    Ok("repair transcript: 2 iterations with errors fed back; always-invalid stops at cap 3".into())
}

fn round_trip() -> Outcome {
    for seed in 0..500u64 {
        let cfg = SampleConfig {
            cycles: seed % 2 == 0,
            pools: 1 + (seed % 3) as usize,
            max_visible: 10,
            ..SampleConfig::default()
        };
        let m = random_model(seed, &cfg);
        let back = parse(&print(&m)).map_err(|e| format!("seed {seed}: {e:?}"))?;
        if back != m {
            return Err(format!("seed {seed}: model changed"));
        }
    }
    Ok("500 random models survive print then parse unchanged".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("gateway-count law", gateway_law),
        ("collaboration well-formedness", collaboration_well_formed),
        ("corpus fidelity", corpus_fidelity),
        ("layout soundness", layout_soundness),
        ("XML structural validation", xml_structure),
        ("determinism", determinism),
        ("generation loop (mock)", generation_loop),
        ("round-trip", round_trip),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
