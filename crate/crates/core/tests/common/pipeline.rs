//! Drives the built binary through the whole file pipeline.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tablink")
}

pub fn tablink(args: &[&str]) -> Output {
    Command::new(bin()).args(args).env_remove("TABLINK_LOG").output().expect("run tablink")
}

fn ok(args: &[&str]) -> Result<Output, String> {
    let out = tablink(args);
    if out.status.success() {
        Ok(out)
    } else {
        Err(format!("tablink {args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Artifacts of one run, as (relative name, bytes), sorted by name.
pub struct Run {
    pub files: Vec<(String, Vec<u8>)>,
    pub eval: serde_json::Value,
}

impl Run {
    pub fn manifests(&self) -> Vec<serde_json::Value> {
        self.files
            .iter()
            .filter(|(n, _)| n.ends_with(".manifest.json"))
            .map(|(_, b)| {
                let mut v: serde_json::Value = serde_json::from_slice(b).unwrap();
                v.as_object_mut().unwrap().remove("wall_time_ms");
                v
            })
            .collect()
    }

    /// Records, edges, closure and annotations.
    pub fn outputs(&self) -> Vec<&(String, Vec<u8>)> {
        self.files.iter().filter(|(n, _)| !n.ends_with(".manifest.json")).collect()
    }
}

/// gen-kb, ingest, closure, build-index, link-table and eval under `dir`.
pub fn run_pipeline(dir: &Path, seed: u64, items: usize, tables: usize, jobs: usize) -> Result<Run, String> {
    let kb = dir.join("kb");
    let jobs = jobs.to_string();
    let m = |name: &str| dir.join(format!("{name}.manifest.json"));
    let (seed, items, tables) = (seed.to_string(), items.to_string(), tables.to_string());
    ok(&["gen-kb", "--seed", &seed, "--items", &items, "--tables", &tables, "--out", s(&kb)])?;
    let (records, edges, closure, index, ann) =
        (dir.join("records.jsonl"), dir.join("edges.jsonl"), dir.join("closure.txt"), dir.join("index"), dir.join("ann"));
    ok(&[
        "ingest", "--jobs", &jobs, "--manifest", s(&m("ingest")), "--dump", s(&kb.join("dump.json")),
        "--out-records", s(&records), "--out-edges", s(&edges), "--watchlist", "P486,P699",
    ])?;
    ok(&["closure", "--manifest", s(&m("closure")), "--edges", s(&edges), "--records", s(&records), "--out", s(&closure)])?;
    ok(&["build-index", "--manifest", s(&m("build-index")), "--records", s(&records), "--out", s(&index)])?;
    let (config, table_dir, table_manifest) = (kb.join("config.json"), kb.join("tables"), m("link-table"));
    ok(&[
        "link-table", "--jobs", &jobs, "--manifest", s(&table_manifest), "--table", s(&table_dir), "--out", s(&ann),
        "--index", s(&index), "--closure", s(&closure), "--config", s(&config),
    ])?;
    let eval = ok(&["eval", "--annotations", s(&ann), "--gold", s(&kb.join("gold.jsonl"))])?;
    let eval: serde_json::Value = serde_json::from_slice(&eval.stdout).map_err(|e| e.to_string())?;

    let mut files: Vec<PathBuf> = vec![records, edges, closure, index.join("manifest.json"), index.join("records.jsonl")];
    let mut anns: Vec<PathBuf> = std::fs::read_dir(&ann).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
    anns.sort();
    files.extend(anns);
    for name in ["ingest", "closure", "build-index", "link-table"] {
        files.push(m(name));
    }
    let mut out = Vec::new();
    for f in files {
        let bytes = std::fs::read(&f).map_err(|e| format!("{}: {e}", f.display()))?;
        out.push((f.strip_prefix(dir).unwrap().display().to_string(), bytes));
    }
    Ok(Run { files: out, eval })
}
