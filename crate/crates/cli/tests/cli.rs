use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data")
}

fn haystack_bias(workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_haystack-bias"))
        .arg("--config")
        .arg(data_dir().join("mini.toml"))
        .arg("--workdir")
        .arg(workdir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn generate_prints_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = haystack_bias(dir.path(), &["generate"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("size 1000: 900 configs (480 bilingual conflicting, 120 monolingual conflicting, 240 bilingual non-conflicting, 60 monolingual non-conflicting), 240 contrastive pairs"), "{text}");
    assert!(text.contains("corpus checksum "));
    assert!(dir.path().join("corpus/1000/manifest.jsonl").exists());
}

#[test]
fn undefined_backend_id_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = haystack_bias(dir.path(), &["run", "--only", "mock-north"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("mock-north"), "{err}");
}

#[test]
fn missing_corpus_names_generate() {
    let dir = tempfile::tempdir().unwrap();
    let out = haystack_bias(dir.path(), &["run"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("run `generate` first"), "{}", stderr(&out));
}

#[test]
fn bad_config_key_is_reported_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "sizes = [1000]\n[analysis.mcmc]\nchians = 4\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_haystack-bias"))
        .arg("--config")
        .arg(&config)
        .arg("generate")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("chians"), "{}", stderr(&out));
}

#[test]
fn modified_corpus_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    assert!(haystack_bias(dir.path(), &["generate"]).status.success());
    assert!(haystack_bias(dir.path(), &["run", "--only", "mock-east", "--limit", "10"]).status.success());
    let manifest = dir.path().join("corpus/1000/manifest.jsonl");
    let first = fs::read_dir(dir.path().join("corpus/1000"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p != &manifest)
        .unwrap();
    fs::write(&first, "tampered").unwrap();
    let out = haystack_bias(dir.path(), &["classify"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("checksum mismatch"), "{}", stderr(&out));
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect(root, &path, out);
        } else {
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            out.push((rel, fs::read(&path).unwrap()));
        }
    }
}

/// Downstream artifacts; raw result stores carry wall-clock timestamps.
fn downstream(workdir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for sub in ["corpus", "classified", "pairs", "analysis", "reports"] {
        collect(workdir, &workdir.join(sub), &mut files);
    }
    files
}

#[test]
fn all_matches_the_stage_sequence() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = haystack_bias(a.path(), &["all"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(a.path().join("analysis/mini/posterior.tsv").exists());

    for stage in ["generate", "run", "classify", "analyze", "report"] {
        let out = haystack_bias(b.path(), &[stage]);
        assert!(out.status.success(), "{stage}: {}", stderr(&out));
    }
    let (fa, fb) = (downstream(a.path()), downstream(b.path()));
    assert_eq!(fa.len(), fb.len());
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{na} differs");
    }

    let again = haystack_bias(b.path(), &["run"]);
    assert!(stdout(&again).contains("already stored 9000, issued 0"), "{}", stdout(&again));
}
