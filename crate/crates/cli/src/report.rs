//! The `report` subcommand: every stage of the pipeline in one JSON
//! document, reproducible byte for byte unless `--timing` is given.

use std::collections::BTreeMap;
use std::time::Instant;

use gogtool_core::counts::ThresholdReport;
use gogtool_core::gates::is_admissible;
use gogtool_core::patches::{CaretTable, ViralReport};
use gogtool_core::stein_farley::{
    descending_link, link_connectivity_report, sf_vertices_at_height, LinkOptions, LinkReport, SFVertex, SCALE_NOTE,
};
use gogtool_core::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{certificate_json, threshold_options, Caps, Loaded};

#[derive(Serialize)]
pub struct PipelineReport {
    pub input_sha256: String,
    pub gates: Vec<String>,
    pub certificate: serde_json::Value,
    pub caret_table: CaretTable,
    pub viral: ViralReport,
    pub thresholds: Vec<ThresholdReport>,
    pub heights: Vec<HeightEntry>,
    pub caps: CapsUsed,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, f64>>,
}

#[derive(Serialize)]
pub struct CapsUsed {
    pub max_link_vertices: usize,
    pub dickson_box: u64,
    pub repair_budget: usize,
    pub enumeration_cap: usize,
}

#[derive(Serialize)]
pub struct HeightEntry {
    pub height: u64,
    pub vertices: Vec<SFVertex>,
    pub links: Vec<LinkEntry>,
}

/// A link summary, or the reason it could not be built.
#[derive(Serialize)]
#[serde(untagged)]
pub enum LinkEntry {
    Built(Box<LinkReport>),
    Skipped { counts: String, error: String },
}

struct Clock {
    on: bool,
    laps: BTreeMap<String, f64>,
    last: Instant,
}

impl Clock {
    fn lap(&mut self, name: &str) {
        if self.on {
            let now = Instant::now();
            self.laps.insert(name.to_string(), (now - self.last).as_secs_f64() * 1e3);
            self.last = now;
        }
    }
}

pub fn build(l: &Loaded, heights: &[u64], m_max: u64, caps: &Caps, timing: bool) -> Result<PipelineReport> {
    let mut clock = Clock {
        on: timing,
        laps: BTreeMap::new(),
        last: Instant::now(),
    };
    let g = l.gg.graph();
    let gs = l.gg.gates();
    let cert = is_admissible(g, gs);
    clock.lap("gates");
    let caret_table = l.gg.caret_table();
    clock.lap("carets");
    let viral = l.gg.check_viral(&l.t0, caps.repair_budget)?;
    clock.lap("viral");

    let mut notes = vec![SCALE_NOTE.to_string()];
    let mut thresholds = Vec::new();
    if l.model.is_viral() {
        for m in 0..=m_max {
            thresholds.push(l.model.thresholds(m, threshold_options(caps))?);
        }
    } else {
        notes.push("thresholds omitted: the viral expansion property fails for this base tree".into());
    }
    clock.lap("thresholds");

    let opts = LinkOptions {
        max_vertices: caps.max_link_vertices,
        ..LinkOptions::default()
    };
    let mut entries = Vec::new();
    let mut hs = heights.to_vec();
    hs.sort_unstable();
    hs.dedup();
    for h in hs {
        let vertices = sf_vertices_at_height(h, &l.model)?;
        let mut links = Vec::new();
        for x in &vertices {
            let built = descending_link(&x.counts, &l.model, opts)
                .and_then(|link| link_connectivity_report(&link, &l.model, m_max, threshold_options(caps)));
            links.push(match built {
                Ok(r) => LinkEntry::Built(Box::new(r)),
                Err(e) if e.is_cap() => LinkEntry::Skipped {
                    counts: x.counts.to_string(),
                    error: e.to_string(),
                },
                Err(e) => return Err(e),
            });
        }
        entries.push(HeightEntry {
            height: h,
            vertices,
            links,
        });
        clock.lap(&format!("height_{h:04}"));
    }

    Ok(PipelineReport {
        input_sha256: hex::encode(Sha256::digest(l.text.as_bytes())),
        gates: gs.names(g),
        certificate: certificate_json(g, gs, &cert),
        caret_table,
        viral,
        thresholds,
        heights: entries,
        caps: CapsUsed {
            max_link_vertices: caps.max_link_vertices,
            dickson_box: caps.dickson_box,
            repair_budget: caps.repair_budget,
            enumeration_cap: caps.enumeration_cap,
        },
        notes,
        timing_ms: timing.then_some(clock.laps),
    })
}
