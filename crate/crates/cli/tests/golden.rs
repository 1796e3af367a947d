//! Pins the compiled XML of every corpus file. Regenerate with
//! `UPDATE_GOLDEN=1 cargo test -p powl-cli --test golden`.

use std::path::PathBuf;
use std::process::Command;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn corpus_outputs_match_golden_files() {
    let corpus = root().join("../../corpus");
    let golden = root().join("tests/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let out_dir = tempfile::tempdir().unwrap();
    let mut files: Vec<_> = std::fs::read_dir(&corpus)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "powl"))
        .collect();
    files.sort();
    assert_eq!(files.len(), 10);
    for input in files {
        let name = input.file_stem().unwrap().to_string_lossy().into_owned();
        let output = out_dir.path().join(format!("{name}.bpmn"));
        let status = Command::new(env!("CARGO_BIN_EXE_powl2bpmn"))
            .arg("compile")
            .arg(&input)
            .arg("-o")
            .arg(&output)
            .status()
            .unwrap();
        assert!(status.success(), "{name}");
        let produced = std::fs::read_to_string(&output).unwrap();
        let pinned = golden.join(format!("{name}.bpmn"));
        if update {
            std::fs::write(&pinned, &produced).unwrap();
        } else {
            let expected = std::fs::read_to_string(&pinned).unwrap_or_else(|_| panic!("missing {}", pinned.display()));
            assert!(produced == expected, "{name} differs from its golden file");
        }
    }
}
