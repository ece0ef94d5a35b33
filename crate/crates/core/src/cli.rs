//! Command-line front end. Machine-readable results go to stdout, logs and
//! the run manifest to stderr.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O error.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::candidate_index::{build_index, Index, IndexError};
use crate::dump_ingest::ingest_dump;
use crate::eval_bench::{bench, evaluate, generate_synthetic_kb, GoldRecord, OnlineLatency, SynthParams, TierProfile};
use crate::kb_model::{validate_config, DomainConfig, EntityId, ItemRecord, TypeEdge, ValidatedConfig};
use crate::linker::{CachedLinker, LinkCache, LinkRequest, Linker, Mode};
use crate::table_linker::{link_table, Table, TableAnnotation, TableError};
use crate::type_store::{build_closure_with_nodes, TypeClosure};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (format 1)");
const CACHE_CAPACITY: usize = 100_000;

#[derive(Debug, Parser)]
#[command(name = "tablink", version = VERSION, about = "Offline entity linking for table cells and mentions")]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Also write the run manifest to this file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse an entity dump into records.jsonl and edges.jsonl.
    Ingest {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        out_records: PathBuf,
        #[arg(long)]
        out_edges: PathBuf,
        /// Comma-separated property ids whose presence is recorded.
        #[arg(long, value_delimiter = ',', default_value = "P486,P699")]
        watchlist: Vec<EntityId>,
    },
    /// Materialize the supertype closure of an edge file.
    Closure {
        #[arg(long)]
        edges: PathBuf,
        /// Records whose direct types should appear even without edges.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the candidate index directory from records.
    BuildIndex {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Link one mention.
    Link {
        #[arg(long)]
        mention: String,
        #[arg(long, default_value = "cell")]
        mode: Mode,
        #[arg(long)]
        context: Option<String>,
        /// Expected type names (comma separated).
        #[arg(long, value_delimiter = ',')]
        expect: Vec<String>,
        #[command(flatten)]
        kb: KbArgs,
        /// Directory for the persistent result cache.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Annotate one table file or every table in a directory.
    LinkTable {
        /// A .json or .csv table, or a directory of them.
        #[arg(long)]
        table: PathBuf,
        /// Treat the first CSV row as the header row.
        #[arg(long)]
        has_header: bool,
        #[command(flatten)]
        kb: KbArgs,
        /// Write one <table_id>.json per table here instead of JSON lines on stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score annotations against gold records.
    Eval {
        /// Annotation file or directory of annotation files.
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Compare offline linking with a simulated API-backed linker.
    Bench {
        /// One mention per line.
        #[arg(long)]
        mentions: PathBuf,
        #[command(flatten)]
        kb: KbArgs,
        /// Candidate and type stage delays in seconds.
        #[arg(long, value_delimiter = ',', default_value = "12,18")]
        online_latency: Vec<f64>,
        /// Multiplier applied to the delays.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 120_000)]
        tables: u64,
        #[arg(long, default_value_t = 10)]
        cells_per_table: u64,
    },
    /// Generate a synthetic knowledge base with planted gold tables.
    GenKb {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        items: usize,
        #[arg(long, default_value_t = 60)]
        types: usize,
        #[arg(long, default_value_t = 10)]
        tables: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct KbArgs {
    /// Index directory written by build-index.
    #[arg(long)]
    index: PathBuf,
    /// Closure file written by closure.
    #[arg(long)]
    closure: PathBuf,
    /// Domain config JSON.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(io::Error),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::InvalidData | io::ErrorKind::InvalidInput => CliError::Usage(e.to_string()),
            _ => CliError::Io(e),
        }
    }
}

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        match e {
            TableError::Io(e) => e.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Io(e) => e.into(),
            other => CliError::Io(io::Error::other(other.to_string())),
        }
    }
}

fn with_path(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::from(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

#[derive(Debug, Default, Serialize)]
struct RunManifest {
    tool_version: &'static str,
    format_version: &'static str,
    subcommand: String,
    jobs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    index_build_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closure_hash: Option<String>,
    wall_time_ms: f64,
}

struct Kb {
    linker: Linker,
}

fn load_config(path: &Path) -> Result<ValidatedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(with_path(path))?;
    let config = DomainConfig::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    validate_config(config).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_closure(path: &Path) -> Result<TypeClosure, CliError> {
    let file = File::open(path).map_err(with_path(path))?;
    TypeClosure::read_from(BufReader::new(file)).map_err(with_path(path))
}

fn load_kb(args: &KbArgs, manifest: &mut RunManifest) -> Result<Kb, CliError> {
    let config = load_config(&args.config)?;
    let index = Index::open(&args.index)?;
    let closure = load_closure(&args.closure)?;
    manifest.config_hash = Some(config.content_hash().to_owned());
    manifest.index_build_id = Some(index.build_id().to_owned());
    manifest.closure_hash = Some(crate::linker::closure_fingerprint(&closure));
    Ok(Kb { linker: Linker::new(Arc::new(index), Arc::new(closure), Arc::new(config)) })
}

fn write_json<T: Serialize>(out: &mut impl Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(io::Error::other)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn read_table(path: &Path, has_header: bool) -> Result<Table, CliError> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        return Ok(Table::from_csv(path, has_header)?);
    }
    let text = std::fs::read_to_string(path).map_err(with_path(path))?;
    Table::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Files directly under `dir` with one of the extensions, sorted by name.
fn files_in(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(with_path(dir))? {
        let path = entry?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| extensions.contains(&e.as_str())) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn run_command(cmd: Command, jobs: usize, manifest: &mut RunManifest) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cmd {
        Command::Ingest { dump, out_records, out_edges, watchlist } => {
            let watchlist: BTreeSet<EntityId> = watchlist.into_iter().collect();
            if let Some(p) = watchlist.iter().find(|p| !p.is_property()) {
                return Err(CliError::Usage(format!("watchlist entry {p} is not a property")));
            }
            let input = BufReader::new(File::open(&dump).map_err(with_path(&dump))?);
            let mut records = BufWriter::new(File::create(&out_records).map_err(with_path(&out_records))?);
            let mut edges = BufWriter::new(File::create(&out_edges).map_err(with_path(&out_edges))?);
            let stats = ingest_dump(input, &watchlist, &mut records, &mut edges, jobs)?;
            records.flush()?;
            edges.flush()?;
            write_json(&mut out, &stats)?;
        }
        Command::Closure { edges, records, out: path } => {
            let edge_list: Vec<TypeEdge> = crate::jsonl::read_file(&edges).map_err(with_path(&edges))?;
            let nodes: Vec<EntityId> = match records {
                Some(r) => {
                    let recs: Vec<ItemRecord> = crate::jsonl::read_file(&r).map_err(with_path(&r))?;
                    recs.into_iter().flat_map(|r| r.direct_types).collect()
                }
                None => Vec::new(),
            };
            let built = build_closure_with_nodes(&edge_list, nodes);
            let mut file = BufWriter::new(File::create(&path).map_err(with_path(&path))?);
            built.closure.write_to(&mut file)?;
            manifest.closure_hash = Some(crate::linker::closure_fingerprint(&built.closure));
            write_json(
                &mut out,
                &serde_json::json!({"types": built.closure.len(), "rejected_edges": built.rejected.len()}),
            )?;
        }
        Command::BuildIndex { records, out: dir } => {
            let recs: Vec<ItemRecord> = crate::jsonl::read_file(&records).map_err(with_path(&records))?;
            let index = build_index(recs);
            index.save(&dir).map_err(with_path(&dir))?;
            manifest.index_build_id = Some(index.build_id().to_owned());
            write_json(&mut out, &index.manifest())?;
        }
        Command::Link { mention, mode, context, expect, kb, cache } => {
            let kb = load_kb(&kb, manifest)?;
            let expected_types = (!expect.is_empty()).then(|| expect.into_iter().collect::<BTreeSet<_>>());
            if let Some(names) = &expected_types {
                for n in names.iter().filter(|n| !kb.linker.config().knows_type_name(n)) {
                    tracing::warn!("expected type {n:?} is not in the type dictionary");
                }
            }
            let req = LinkRequest { mention, mode, context, expected_types };
            let result = match cache {
                Some(dir) => {
                    let cached = CachedLinker::new(kb.linker, LinkCache::with_disk(CACHE_CAPACITY, dir));
                    let r = cached.link(&req);
                    tracing::info!("cache: {:?}", cached.stats());
                    r
                }
                None => kb.linker.link(&req),
            };
            let result = result.map_err(|e| CliError::Usage(e.to_string()))?;
            write_json(&mut out, &result)?;
        }
        Command::LinkTable { table, has_header, kb, out: out_dir } => {
            let kb = load_kb(&kb, manifest)?;
            let paths = if table.is_dir() { files_in(&table, &["json", "csv"])? } else { vec![table] };
            let tables = paths.iter().map(|p| read_table(p, has_header)).collect::<Result<Vec<_>, _>>()?;
            if let Some(dir) = &out_dir {
                std::fs::create_dir_all(dir).map_err(with_path(dir))?;
            }
            for t in &tables {
                let ann = link_table(t, &kb.linker)?;
                match &out_dir {
                    Some(dir) => {
                        let path = dir.join(format!("{}.json", ann.table_id));
                        let mut f = BufWriter::new(File::create(&path).map_err(with_path(&path))?);
                        write_json(&mut f, &ann)?;
                        f.flush()?;
                    }
                    None => crate::jsonl::write_line(&mut out, &ann)?,
                }
            }
        }
        Command::Eval { annotations, gold } => {
            let paths = if annotations.is_dir() { files_in(&annotations, &["json"])? } else { vec![annotations] };
            let mut anns: Vec<TableAnnotation> = Vec::new();
            for p in &paths {
                let text = std::fs::read_to_string(p).map_err(with_path(p))?;
                // a file holds one pretty-printed annotation or JSON lines of them
                match serde_json::from_str::<TableAnnotation>(&text) {
                    Ok(a) => anns.push(a),
                    Err(_) => anns.extend(crate::jsonl::read_from::<TableAnnotation, _>(text.as_bytes()).map_err(with_path(p))?),
                }
            }
            let gold_records: Vec<GoldRecord> = crate::jsonl::read_file(&gold).map_err(with_path(&gold))?;
            let report = evaluate(&anns, &gold_records).map_err(|e| CliError::Usage(e.to_string()))?;
            write_json(&mut out, &report)?;
        }
        Command::Bench { mentions, kb, online_latency, scale, tables, cells_per_table } => {
            let [candidate_s, type_s] = online_latency[..] else {
                return Err(CliError::Usage("--online-latency takes two values: candidate,type".into()));
            };
            if !(candidate_s >= 0.0 && type_s >= 0.0 && scale >= 0.0) {
                return Err(CliError::Usage("latencies and scale must be non-negative".into()));
            }
            let kb = load_kb(&kb, manifest)?;
            let file = BufReader::new(File::open(&mentions).map_err(with_path(&mentions))?);
            let mut reqs = Vec::new();
            for line in file.lines() {
                let line = line?;
                if !line.trim().is_empty() {
                    reqs.push(LinkRequest::cell(line.trim()));
                }
            }
            let latency = OnlineLatency::from_seconds(candidate_s, type_s, scale);
            let report = bench(&kb.linker, latency, &reqs, tables, cells_per_table);
            write_json(&mut out, &report)?;
        }
        Command::GenKb { seed, items, types, tables, out: dir } => {
            let params = SynthParams { seed, n_items: items, n_types: types, n_tables: tables, profile: TierProfile::default() };
            let kb = generate_synthetic_kb(&params);
            kb.write_to_dir(&dir).map_err(with_path(&dir))?;
            write_json(&mut out, &kb.truth)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Ingest { .. } => "ingest",
        Command::Closure { .. } => "closure",
        Command::BuildIndex { .. } => "build-index",
        Command::Link { .. } => "link",
        Command::LinkTable { .. } => "link-table",
        Command::Eval { .. } => "eval",
        Command::Bench { .. } => "bench",
        Command::GenKb { .. } => "gen-kb",
    }
}

fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_env("TABLINK_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(io::stderr).try_init();
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging();
    if cli.jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return 1;
    }

    let start = Instant::now();
    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        format_version: crate::FORMAT_VERSION,
        subcommand: subcommand_name(&cli.command).to_owned(),
        jobs: cli.jobs,
        ..RunManifest::default()
    };
    let jobs = cli.jobs;
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Io(io::Error::other(e)))
        .and_then(|pool| pool.install(|| run_command(cli.command, jobs, &mut manifest)));
    manifest.wall_time_ms = start.elapsed().as_secs_f64() * 1000.0;

    let code = match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            2
        }
    };
    if code == 0 {
        if let Ok(text) = serde_json::to_string(&manifest) {
            eprintln!("{text}");
            if let Some(path) = &cli.manifest {
                if let Err(e) = std::fs::write(path, text + "\n") {
                    eprintln!("error: {}: {e}", path.display());
                    return 2;
                }
            }
        }
    }
    code
}
