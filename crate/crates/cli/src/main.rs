//! `gogtool`: command-line driver for the graph-of-groups toolkit.
//!
//! Exit codes: 0 success, 1 validation failure, 2 cap exceeded, 3 internal
//! invariant violation.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gogtool_core::counts::{CountModel, ThresholdOptions, DICKSON_BOX};
use gogtool_core::gates::{default_gates, escape_ray, is_admissible, Certificate, GateSystem};
use gogtool_core::gog::{GogFile, GraphOfGroups, HalfEdge};
use gogtool_core::patches::{GatedGraph, Seed, TreePatch, ENUMERATION_CAP, REPAIR_BUDGET};
use gogtool_core::simplicial::{random_complex, DensityProfile, SimplicialComplex, CONNECTIVITY_CAVEAT};
use gogtool_core::stein_farley::{
    descending_link, link_connectivity_report, link_difference, oracle_descending_link, sf_vertices_at_height,
    LinkOptions, LinkReport, LINK_VERTEX_CAP, SCALE_NOTE,
};
use gogtool_core::{Error, Result};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "gogtool", version, about = "Bass-Serre tree local models, carets and descending links")]
struct Cli {
    /// Write artifacts into this directory instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report wall-clock timings (stderr, or inside `report`).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Input {
    /// `.gog` file.
    file: PathBuf,
    /// Explicit gates, e.g. `e.tau,f.iota`.
    #[arg(long, conflicts_with = "default_gates")]
    gates: Option<String>,
    /// Use the default gates even if the file declares some.
    #[arg(long)]
    default_gates: bool,
    /// Vertex at the root of the base tree (default: first vertex).
    #[arg(long)]
    root: Option<String>,
}

#[derive(Args, Clone, Copy)]
struct Caps {
    #[arg(long, default_value_t = LINK_VERTEX_CAP)]
    max_link_vertices: usize,
    #[arg(long, default_value_t = DICKSON_BOX)]
    dickson_box: u64,
    #[arg(long, default_value_t = REPAIR_BUDGET)]
    repair_budget: usize,
    #[arg(long, default_value_t = ENUMERATION_CAP)]
    enumeration_cap: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a `.gog` file.
    Validate { file: PathBuf },
    /// Bass-Serre tree degree of every vertex.
    Degrees { file: PathBuf },
    /// Triple every index.
    Augment { file: PathBuf },
    /// Join two graphs by a new edge between `--at` and `--to`.
    Glue {
        file: PathBuf,
        other: PathBuf,
        #[arg(long)]
        at: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 1)]
        index_at: u64,
        #[arg(long, default_value_t = 1)]
        index_to: u64,
    },
    /// Gate system with its admissibility certificate.
    Gates(Input),
    /// Caret table (M, I) for the gate system.
    Carets {
        #[command(flatten)]
        input: Input,
        /// Also write one DOT file per caret (needs --out).
        #[arg(long)]
        dot: bool,
    },
    /// Viral expansion property with repair trace.
    Viral {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        caps: Caps,
    },
    /// Admissible trees reachable from the base tree.
    Enumerate {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        max_expansions: usize,
        #[command(flatten)]
        caps: Caps,
        /// Also write one DOT file per tree (needs --out).
        #[arg(long)]
        dot: bool,
    },
    /// Stein-Farley vertices at a height.
    Sf {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        height: u64,
    },
    /// Descending links of every vertex at a height.
    Desclink {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        height: u64,
        /// Cross-check against the tree-enumeration oracle.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 1)]
        m_max: u64,
        #[command(flatten)]
        caps: Caps,
    },
    /// Integer homology of a complex given as a JSON face list.
    Homology {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        max_dim: Option<usize>,
    },
    /// Check the pseudosimplex connectivity hypotheses on a complex.
    LemmaCheck {
        #[arg(long = "in")]
        input: PathBuf,
        /// Vertices of sigma, e.g. `0,1,2`.
        #[arg(long, value_delimiter = ',')]
        sigma: Vec<u32>,
        #[arg(short)]
        m: usize,
        #[arg(short)]
        k: usize,
    },
    /// Thresholds beta, C(m), alpha and r(m).
    Threshold {
        #[command(flatten)]
        input: Input,
        #[arg(short)]
        m: u64,
        #[command(flatten)]
        caps: Caps,
    },
    /// Seeded random complex with a planted simplex.
    RandomComplex {
        #[arg(long)]
        seed: u64,
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        edge: f64,
        #[arg(long, default_value_t = 0.5)]
        fill: f64,
        #[arg(long, default_value_t = 0)]
        plant: usize,
    },
    /// Full pipeline report.
    Report {
        #[command(flatten)]
        input: Input,
        /// Heights for vertex lists and links, e.g. `6,10,14`.
        #[arg(long, value_delimiter = ',')]
        heights: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        m_max: u64,
        #[command(flatten)]
        caps: Caps,
    },
}

/// Where artifacts go: stdout, or files under `--out`.
struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    /// The primary artifact: printed, or written as `name`.
    fn primary(&self, name: &str, body: &str) -> Result<()> {
        match &self.dir {
            Some(d) => write(&d.join(name), body),
            None => {
                print!("{body}");
                if !body.ends_with('\n') {
                    println!();
                }
                Ok(())
            }
        }
    }

    /// Secondary artifacts only exist with `--out`.
    fn extra(&self, name: &str, body: &str) -> Result<()> {
        match &self.dir {
            Some(d) => write(&d.join(name), body),
            None => Ok(()),
        }
    }
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, body).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load(path: &Path) -> Result<GogFile> {
    GogFile::parse(&read(path)?)
}

fn gate_system(input: &Input, f: &GogFile) -> Result<GateSystem> {
    if let Some(list) = &input.gates {
        return GateSystem::parse(&f.graph, list);
    }
    match (&f.gates, input.default_gates) {
        (Some(gs), false) => GateSystem::new(&f.graph, gs.iter().copied()),
        _ => Ok(default_gates(&f.graph, f.order.as_deref())),
    }
}

/// Gated graph, base tree and count model for an input.
struct Loaded {
    text: String,
    file: GogFile,
    gg: GatedGraph,
    t0: TreePatch,
    model: CountModel,
}

fn load_gated(input: &Input) -> Result<Loaded> {
    let text = read(&input.file)?;
    let file = GogFile::parse(&text)?;
    let gs = gate_system(input, &file)?;
    let gg = GatedGraph::new(file.graph.clone(), gs)?;
    let root = match &input.root {
        Some(name) => file.graph.vertex_index(name).ok_or_else(|| Error::UnknownVertex(name.clone()))?,
        None => 0,
    };
    let t0 = gg.base_tree(Seed::Vertex(root))?;
    let model = CountModel::new(&gg.caret_table(), gg.counts(&t0)?)?;
    Ok(Loaded {
        text,
        file,
        gg,
        t0,
        model,
    })
}

fn names(g: &GraphOfGroups, hs: &[HalfEdge]) -> Vec<String> {
    hs.iter().map(|&h| g.half_edge_name(h)).collect()
}

fn certificate_json(g: &GraphOfGroups, gs: &GateSystem, cert: &Certificate) -> serde_json::Value {
    match cert {
        Certificate::Admissible { order } => json!({
            "verdict": "admissible",
            "order": names(g, order),
            "escape_ray": serde_json::Value::Null,
        }),
        Certificate::Inadmissible { cycle } => json!({
            "verdict": "inadmissible",
            "cycle": names(g, cycle),
            "escape_ray": escape_ray(g, gs, cert).ok().map(|r| names(g, &r)),
        }),
    }
}

fn link_options(caps: &Caps) -> LinkOptions {
    LinkOptions {
        max_vertices: caps.max_link_vertices,
        ..LinkOptions::default()
    }
}

fn threshold_options(caps: &Caps) -> ThresholdOptions {
    ThresholdOptions {
        dickson_box: caps.dickson_box,
        ..ThresholdOptions::default()
    }
}

/// Validation outcome of a command that ran to completion.
enum Verdict {
    Ok,
    Fail(String),
}

fn run(cli: &Cli) -> Result<Verdict> {
    let sink = Sink { dir: cli.out.clone() };
    match &cli.cmd {
        Cmd::Validate { file } => {
            let f = load(file)?;
            let g = &f.graph;
            sink.primary(
                "validate.json",
                &pretty(&json!({
                    "valid": true,
                    "vertices": g.vertex_count(),
                    "edges": g.edge_count(),
                    "fingerprint": format!("{:016x}", g.fingerprint()),
                })),
            )?;
        }
        Cmd::Degrees { file } => sink.primary("degrees.json", &pretty(&load(file)?.graph.tree_degrees()))?,
        Cmd::Augment { file } => {
            let f = load(file)?;
            let aug = GogFile {
                graph: f.graph.augment(),
                gates: f.gates,
                order: f.order,
            };
            sink.primary("augmented.gog", &aug.serialize())?;
        }
        Cmd::Glue {
            file,
            other,
            at,
            to,
            index_at,
            index_to,
        } => {
            let a = load(file)?.graph;
            let b = load(other)?.graph;
            let g = a.glue(at, &b, to, *index_at, *index_to)?;
            sink.primary("glued.gog", &GogFile::bare(g).serialize())?;
        }
        Cmd::Gates(input) => {
            let f = load(&input.file)?;
            let gs = gate_system(input, &f)?;
            let cert = is_admissible(&f.graph, &gs);
            sink.primary(
                "gates.json",
                &pretty(&json!({
                    "gates": gs.names(&f.graph),
                    "certificate": certificate_json(&f.graph, &gs, &cert),
                })),
            )?;
            if !cert.is_admissible() {
                return Ok(Verdict::Fail("gate system is not admissible".into()));
            }
        }
        Cmd::Carets { input, dot } => {
            let l = load_gated(input)?;
            sink.primary("carets.json", &pretty(&l.gg.caret_table()))?;
            if *dot {
                for c in l.gg.carets() {
                    let name = l.file.graph.half_edge_name(c.gate);
                    sink.extra(&format!("caret_{name}.dot"), &l.gg.to_dot(&c.patch))?;
                }
            }
        }
        Cmd::Viral { input, caps } => {
            let l = load_gated(input)?;
            let r = l.gg.check_viral(&l.t0, caps.repair_budget)?;
            sink.primary("viral.json", &pretty(&r))?;
            if !r.pass {
                return Ok(Verdict::Fail(format!("viral expansion property fails: {}", r.reasons.join(", "))));
            }
        }
        Cmd::Enumerate {
            input,
            max_expansions,
            caps,
            dot,
        } => {
            let l = load_gated(input)?;
            let trees = l.gg.enumerate_admissible(&l.t0, *max_expansions, caps.enumeration_cap)?;
            let mut rows = Vec::new();
            for (i, t) in trees.iter().enumerate() {
                rows.push(json!({
                    "index": i,
                    "history": l.gg.history(t, &l.t0)?,
                    "counts": l.gg.counts(t)?,
                    "vertices": t.len(),
                }));
                if *dot {
                    sink.extra(&format!("tree_{i:05}.dot"), &l.gg.to_dot(t))?;
                }
            }
            sink.primary("trees.json", &pretty(&json!({ "count": trees.len(), "trees": rows })))?;
        }
        Cmd::Sf { input, height } => {
            let l = load_gated(input)?;
            sink.primary("sf.json", &pretty(&sf_vertices_at_height(*height, &l.model)?))?;
        }
        Cmd::Desclink {
            input,
            height,
            oracle,
            m_max,
            caps,
        } => {
            let l = load_gated(input)?;
            let opts = link_options(caps);
            let mut reports: Vec<LinkReport> = Vec::new();
            let mut csv = csv::Writer::from_writer(Vec::new());
            csv.write_record(LinkReport::CSV_HEADER).map_err(csv_err)?;
            for x in sf_vertices_at_height(*height, &l.model)? {
                let link = descending_link(&x.counts, &l.model, opts)?;
                if *oracle {
                    let o = oracle_descending_link(&x.counts, &l.gg, &l.t0, caps.enumeration_cap, opts)?;
                    if let Some(d) = link_difference(&link, &o) {
                        return Err(Error::Invariant(format!("fast path and oracle differ at {}: {d}", x.counts)));
                    }
                }
                let r = link_connectivity_report(&link, &l.model, *m_max, threshold_options(caps))?;
                csv.write_record(r.csv_record()).map_err(csv_err)?;
                let tag = x.counts.to_string().replace(['(', ')'], "").replace(',', "_");
                sink.extra(&format!("link_{tag}.json"), &link.complex.to_json())?;
                let labels: Vec<_> = link
                    .vertices
                    .iter()
                    .map(|v| json!({ "caret": v.caret + 1, "slots": v.slots }))
                    .collect();
                sink.extra(&format!("link_{tag}_vertices.json"), &pretty(&labels))?;
                reports.push(r);
            }
            let summary = String::from_utf8(csv.into_inner().map_err(|e| Error::Io(e.to_string()))?)
                .expect("csv is utf-8");
            sink.extra("links.csv", &summary)?;
            sink.primary(
                "links.json",
                &pretty(&json!({ "height": height, "oracle_checked": oracle, "links": reports })),
            )?;
        }
        Cmd::Homology { input, max_dim } => {
            let cx = SimplicialComplex::from_json(&read(input)?)?;
            let h = cx.homology(*max_dim)?;
            sink.primary(
                "homology.json",
                &pretty(&json!({
                    "f_vector": cx.f_vector(),
                    "homology": h,
                    "homological_connectivity": h.homological_connectivity(),
                    "caveat": CONNECTIVITY_CAVEAT,
                })),
            )?;
        }
        Cmd::LemmaCheck { input, sigma, m, k } => {
            let cx = SimplicialComplex::from_json(&read(input)?)?;
            let out = cx.lemma_connectivity_bound(sigma, *m, *k);
            let homology = match out.bound {
                Some(b) => {
                    let h = cx.homology(Some(b.max(0) as usize))?;
                    gogtool_core::stein_farley::check_soundness(&h, b)?;
                    Some(h)
                }
                None => None,
            };
            sink.primary(
                "lemma.json",
                &pretty(&json!({ "outcome": out, "homology": homology, "caveat": CONNECTIVITY_CAVEAT })),
            )?;
            if let Some(f) = out.failure {
                return Ok(Verdict::Fail(f));
            }
        }
        Cmd::Threshold { input, m, caps } => {
            let l = load_gated(input)?;
            if !l.model.is_viral() {
                return Ok(Verdict::Fail("thresholds need the viral expansion property".into()));
            }
            let t = l.model.thresholds(*m, threshold_options(caps))?;
            sink.primary("threshold.json", &pretty(&json!({ "threshold": t, "note": SCALE_NOTE })))?;
        }
        Cmd::RandomComplex {
            seed,
            n,
            edge,
            fill,
            plant,
        } => {
            let profile = DensityProfile {
                edge: *edge,
                fill: *fill,
                plant: *plant,
            };
            let rc = random_complex(*seed, *n, &profile)?;
            sink.primary("complex.json", &rc.complex.to_json())?;
            sink.extra("planted.json", &pretty(&rc.planted))?;
            if cli.out.is_none() {
                eprintln!("planted: {:?}", rc.planted);
            }
        }
        Cmd::Report {
            input,
            heights,
            m_max,
            caps,
        } => {
            let l = load_gated(input)?;
            let r = report::build(&l, heights, *m_max, caps, cli.timing)?;
            sink.primary("report.json", &pretty(&r))?;
        }
    }
    Ok(Verdict::Ok)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_cap() {
        2
    } else if e.is_invariant() {
        3
    } else {
        1
    }
}

fn init_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("GOGTOOL_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // a second initialisation only fails when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    // usage errors are validation failures; code 2 is reserved for caps
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_threads();
    let start = Instant::now();
    let result = run(&cli);
    if cli.timing && !matches!(cli.cmd, Cmd::Report { .. }) {
        eprintln!("elapsed: {:.3?}", start.elapsed());
    }
    match result {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Fail(msg)) => {
            eprintln!("gogtool: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("gogtool: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
