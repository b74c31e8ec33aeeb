//! Stein–Farley vertices as count classes and their descending links.
//!
//! A vertex is a realizable count vector. A link vertex removes one caret:
//! it names the caret type and the leaf positions, within each leaf type,
//! occupied by its terminal leaves. Positions of the same type are
//! interchangeable, so slots are plain indices `0..L_i`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::counts::{CountModel, CountVector, History, ThresholdOptions};
use crate::error::{Error, Result};
use crate::par;
use crate::patches::{Address, GatedGraph, TreePatch};
use crate::simplicial::{HomologyReport, LemmaOutcome, SimplicialComplex, CONNECTIVITY_CAVEAT, FACE_CAP};

/// Default cap on the number of link vertices.
pub const LINK_VERTEX_CAP: usize = 100_000;

/// Largest removable caret set the oracle expands per tree.
pub const ORACLE_SUBSET_CAP: usize = 20;

pub const SCALE_NOTE: &str = "descending links at histories of r(m) or more expansions are beyond the construction caps; \
     the fast-path/oracle agreement at small heights is the available check";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SFVertex {
    pub counts: CountVector,
    pub height: u64,
    pub histories: Vec<History>,
}

impl SFVertex {
    /// Largest number of leaf expansions among the histories.
    pub fn expansions(&self) -> u64 {
        self.histories.iter().map(History::total).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkVertex {
    /// Caret type, 0-based.
    pub caret: usize,
    /// Per leaf type, the sorted slots holding the caret's terminal leaves.
    pub slots: Vec<Vec<u32>>,
}

impl LinkVertex {
    fn disjoint(&self, other: &LinkVertex) -> bool {
        self.slots.iter().zip(&other.slots).all(|(a, b)| a.iter().all(|x| b.binary_search(x).is_err()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkOptions {
    pub max_vertices: usize,
    pub max_faces: usize,
}

impl Default for LinkOptions {
    fn default() -> Self {
        LinkOptions {
            max_vertices: LINK_VERTEX_CAP,
            max_faces: FACE_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescendingLink {
    pub counts: CountVector,
    /// Canonically sorted; complex vertex `v` is `vertices[v]`.
    pub vertices: Vec<LinkVertex>,
    pub complex: SimplicialComplex,
}

impl DescendingLink {
    pub fn f_vector(&self) -> Vec<usize> {
        if self.vertices.is_empty() {
            return vec![];
        }
        self.complex.f_vector()
    }

    pub fn edge_count(&self) -> usize {
        self.f_vector().get(1).copied().unwrap_or(0)
    }
}

fn heights_step(model: &CountModel) -> Result<Vec<u64>> {
    let k = model.k();
    (0..k)
        .map(|j| {
            let s: u64 = model.m().iter().map(|r| r[j]).sum();
            if s <= 1 {
                Err(Error::pre(format!(
                    "caret {} has {s} terminal leaves, so heights do not bound histories",
                    j + 1
                )))
            } else {
                Ok(s - 1)
            }
        })
        .collect()
}

/// All realizable count vectors with `h` leaves in total.
pub fn sf_vertices_at_height(h: u64, model: &CountModel) -> Result<Vec<SFVertex>> {
    let steps = heights_step(model)?;
    let base_h = model.base().height();
    if h < base_h {
        return Ok(vec![]);
    }
    fn rec(w: &[u64], j: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if j == w.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for x in 0..=left / w[j] {
            cur.push(x);
            rec(w, j + 1, left - x * w[j], cur, out);
            cur.pop();
        }
    }
    let mut ns = Vec::new();
    rec(&steps, 0, h - base_h, &mut Vec::new(), &mut ns);
    let viral = model.is_viral();
    let mut classes: BTreeMap<(u64, Vec<u64>), Vec<History>> = BTreeMap::new();
    for n in ns {
        let Ok(c) = model.predict(&n) else { continue };
        if viral || model.order_feasible(&n) {
            classes.entry((c.interior, c.leaves)).or_default().push(History(n));
        }
    }
    Ok(classes
        .into_iter()
        .map(|((interior, leaves), histories)| SFVertex {
            counts: CountVector { interior, leaves },
            height: h,
            histories,
        })
        .collect())
}

fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Sorted `r`-subsets of `0..n`.
fn combinations(n: u32, r: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(n: u32, r: usize, from: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for x in from..n {
            cur.push(x);
            rec(n, r, x + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, r, 0, &mut cur, &mut out);
    out
}

fn product(choices: &[Vec<Vec<u32>>]) -> Vec<Vec<Vec<u32>>> {
    let mut out: Vec<Vec<Vec<u32>>> = vec![vec![]];
    for opts in choices {
        let mut next = Vec::with_capacity(out.len() * opts.len());
        for p in &out {
            for o in opts {
                let mut q = p.clone();
                q.push(o.clone());
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn check_realizable(x: &CountVector, model: &CountModel) -> Result<()> {
    if model.realizable(x, model.is_viral())?.is_empty() {
        return Err(Error::pre(format!("counts {x} are not realizable")));
    }
    Ok(())
}

/// Faces: sets of link vertices with pairwise disjoint slots whose caret
/// multiplicities lie in `feasible`. Found by extending in index order, then
/// checked for downward closure.
fn assemble(
    counts: &CountVector,
    vertices: Vec<LinkVertex>,
    feasible: &HashSet<Vec<u64>>,
    k: usize,
    opts: LinkOptions,
) -> Result<DescendingLink> {
    let total = AtomicUsize::new(vertices.len());
    let nv = vertices.len();
    let per_start: Vec<Result<Vec<Vec<u32>>>> = par::map_range(nv, |v| {
        let mut out = Vec::new();
        let mut mult = vec![0u64; k];
        mult[vertices[v].caret] += 1;
        let mut cur = vec![v as u32];
        fn rec(
            vs: &[LinkVertex],
            feasible: &HashSet<Vec<u64>>,
            cur: &mut Vec<u32>,
            mult: &mut Vec<u64>,
            out: &mut Vec<Vec<u32>>,
            total: &AtomicUsize,
            cap: usize,
        ) -> Result<()> {
            let last = *cur.last().expect("nonempty") as usize;
            for w in last + 1..vs.len() {
                if !cur.iter().all(|&u| vs[u as usize].disjoint(&vs[w])) {
                    continue;
                }
                mult[vs[w].caret] += 1;
                if feasible.contains(mult.as_slice()) {
                    if total.fetch_add(1, Ordering::Relaxed) >= cap {
                        return Err(Error::cap("descending link faces", cap));
                    }
                    cur.push(w as u32);
                    out.push(cur.clone());
                    rec(vs, feasible, cur, mult, out, total, cap)?;
                    cur.pop();
                }
                mult[vs[w].caret] -= 1;
            }
            Ok(())
        }
        rec(&vertices, feasible, &mut cur, &mut mult, &mut out, &total, opts.max_faces)?;
        Ok(out)
    });
    let mut faces = Vec::new();
    for r in per_start {
        faces.extend(r?);
    }
    let complex = SimplicialComplex::from_closed_faces(nv, faces)?;
    Ok(DescendingLink {
        counts: counts.clone(),
        vertices,
        complex,
    })
}

/// Multiplicity vectors `mu` (nonzero) of removable caret multisets, closed
/// under decreasing a coordinate by one.
fn feasible_multiplicities(x: &CountVector, model: &CountModel) -> HashSet<Vec<u64>> {
    let k = model.k();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut stack = vec![vec![0u64; k]];
    while let Some(mu) = stack.pop() {
        for j in 0..k {
            let mut next = mu.clone();
            next[j] += 1;
            if seen.contains(&next) {
                continue;
            }
            let rho: Vec<usize> = next.iter().enumerate().flat_map(|(t, &c)| std::iter::repeat_n(t, c as usize)).collect();
            if model.removable(x, &rho) {
                seen.insert(next.clone());
                stack.push(next);
            }
        }
    }
    seen
}

/// The descending link of the class with counts `x`, built from counts
/// alone.
pub fn descending_link(x: &CountVector, model: &CountModel, opts: LinkOptions) -> Result<DescendingLink> {
    check_realizable(x, model)?;
    let k = model.k();
    let m = model.m();
    let removable: Vec<usize> = (0..k).filter(|&j| model.removable(x, &[j])).collect();
    let size: u128 = removable
        .iter()
        .map(|&j| (0..k).map(|i| binomial(x.leaves[i], m[i][j])).product::<u128>())
        .sum();
    if size > opts.max_vertices as u128 {
        return Err(Error::CapExceeded {
            what: format!("descending link vertices ({size} needed at {x})"),
            limit: opts.max_vertices,
        });
    }
    let mut vertices: Vec<LinkVertex> = par::map(&removable, |&j| {
        let choices: Vec<Vec<Vec<u32>>> =
            (0..k).map(|i| combinations(x.leaves[i] as u32, m[i][j] as usize)).collect();
        product(&choices)
            .into_iter()
            .map(|slots| LinkVertex { caret: j, slots })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    vertices.sort();
    let feasible = feasible_multiplicities(x, model);
    assemble(x, vertices, &feasible, k, opts)
}

/// Vertices of the caret at `p` below it in `t` (excluding `p` and anything
/// in `t0`), split into interior vertices and terminal vertices, or `None`
/// if a terminal vertex is not a leaf of `t`.
fn caret_region(gg: &GatedGraph, t: &TreePatch, t0: &TreePatch, p: &Address) -> Option<Vec<Address>> {
    let mut terminal = Vec::new();
    let mut stack = vec![p.clone()];
    while let Some(a) = stack.pop() {
        for step in gg.ambient_children(t, &a) {
            let mut c = a.clone();
            c.push(step);
            if t0.contains(&c) {
                continue;
            }
            if !t.contains(&c) {
                return None;
            }
            let gated = GatedGraph::entry(&c).is_some_and(|h| gg.gates().contains(h));
            if gated {
                if !gg.is_leaf(t, &c) {
                    return None;
                }
                terminal.push(c);
            } else {
                stack.push(c);
            }
        }
    }
    Some(terminal)
}

/// Definition-level descending link: enumerates every admissible tree with
/// counts `x`, reads off which carets can be removed together, and expands
/// each removable caret family into all type-preserving slot placements.
pub fn oracle_descending_link(
    x: &CountVector,
    gg: &GatedGraph,
    t0: &TreePatch,
    enumeration_cap: usize,
    opts: LinkOptions,
) -> Result<DescendingLink> {
    let k = gg.k();
    let table = gg.caret_table();
    let model = CountModel::new(&table, gg.counts(t0)?)?;
    let histories = model.realizable(x, false)?;
    let depth = histories.iter().map(History::total).max().unwrap_or(0) as usize;
    let trees: Vec<TreePatch> = gg
        .enumerate_admissible(t0, depth, enumeration_cap)?
        .into_iter()
        .filter(|t| gg.counts(t).is_ok_and(|c| c == *x))
        .collect();

    let per_tree: Vec<Result<HashSet<Vec<u64>>>> = par::map(&trees, |t| {
        let mut removable_types = vec![0u64; k];
        let mut found = 0;
        for (p, ty) in gg.expansion_points(t, t0)? {
            if let Some(term) = caret_region(gg, t, t0, &p) {
                // terminal leaves of the caret by type, as a consistency check
                let mut by_type = vec![0u64; k];
                for a in &term {
                    let lt = gg
                        .leaf_type(t, a)
                        .ok_or_else(|| Error::Invariant("terminal vertex is not a gate leaf".into()))?;
                    by_type[lt] += 1;
                }
                if (0..k).any(|i| by_type[i] != table.m[i][ty]) {
                    return Err(Error::Invariant(format!(
                        "caret of type {} removed from a tree has terminal profile {by_type:?}",
                        ty + 1
                    )));
                }
                removable_types[ty] += 1;
                found += 1;
            }
        }
        if found > ORACLE_SUBSET_CAP {
            return Err(Error::cap("removable carets in one oracle tree", ORACLE_SUBSET_CAP));
        }
        let mut out = HashSet::new();
        let mut mu = vec![0u64; k];
        loop {
            let mut j = 0;
            while j < k && mu[j] == removable_types[j] {
                mu[j] = 0;
                j += 1;
            }
            if j == k {
                break;
            }
            mu[j] += 1;
            out.insert(mu.clone());
        }
        Ok(out)
    });
    let mut feasible: HashSet<Vec<u64>> = HashSet::new();
    for r in per_tree {
        feasible.extend(r?);
    }

    // Slot placements by scanning bitmasks, independent of the fast path.
    let mut vertices = Vec::new();
    for j in 0..k {
        let mut unit = vec![0u64; k];
        unit[j] = 1;
        if !feasible.contains(&unit) {
            continue;
        }
        let mut choices = Vec::new();
        for i in 0..k {
            let l = x.leaves[i];
            if l > 24 {
                return Err(Error::cap("oracle leaf slots per type", 24));
            }
            let want = table.m[i][j] as u32;
            let subsets: Vec<Vec<u32>> = (0u32..1 << l)
                .filter(|mask| mask.count_ones() == want)
                .map(|mask| (0..l as u32).filter(|b| mask >> b & 1 == 1).collect())
                .collect();
            choices.push(subsets);
        }
        let count: usize = choices.iter().map(Vec::len).product();
        if vertices.len() + count > opts.max_vertices {
            return Err(Error::cap("oracle link vertices", opts.max_vertices));
        }
        for slots in product(&choices) {
            vertices.push(LinkVertex { caret: j, slots });
        }
    }
    vertices.sort();
    assemble(x, vertices, &feasible, k, opts)
}

/// First difference between two links, or `None` when they are equal as
/// labeled complexes.
pub fn link_difference(a: &DescendingLink, b: &DescendingLink) -> Option<String> {
    if a.vertices != b.vertices {
        let sa: BTreeSet<&LinkVertex> = a.vertices.iter().collect();
        let sb: BTreeSet<&LinkVertex> = b.vertices.iter().collect();
        if let Some(v) = sa.difference(&sb).next() {
            return Some(format!("vertex {v:?} only in the first link"));
        }
        if let Some(v) = sb.difference(&sa).next() {
            return Some(format!("vertex {v:?} only in the second link"));
        }
    }
    let dim = a.complex.dim().max(b.complex.dim());
    for d in 1..=dim.max(0) as usize {
        let fa: BTreeSet<&Vec<u32>> = a.complex.faces(d).collect();
        let fb: BTreeSet<&Vec<u32>> = b.complex.faces(d).collect();
        let named = |f: &Vec<u32>| f.iter().map(|&v| a.vertices[v as usize].clone()).collect::<Vec<_>>();
        if let Some(f) = fa.difference(&fb).next() {
            return Some(format!("face {:?} only in the first link", named(f)));
        }
        if let Some(f) = fb.difference(&fa).next() {
            return Some(format!("face {:?} only in the second link", named(f)));
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdStatus {
    pub m: u64,
    pub r: u64,
    pub above: bool,
    pub incomplete: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaRun {
    /// Connectivity degree the planted collection is meant for.
    pub m: u64,
    /// Flag parameter passed to the checker (`m + 1`).
    pub flag_m: usize,
    /// Joinability defect passed to the checker (the largest caret size).
    pub k: usize,
    pub target_size: u64,
    /// Link vertices of the planted collection; empty when none exists.
    pub sigma: Vec<u32>,
    pub outcome: Option<LemmaOutcome>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinkReport {
    pub counts: String,
    pub height: u64,
    pub expansions: u64,
    pub vertices: usize,
    pub f_vector: Vec<usize>,
    pub homology: HomologyReport,
    pub connectivity: String,
    pub thresholds: Vec<ThresholdStatus>,
    pub lemma: Vec<LemmaRun>,
    pub notes: Vec<String>,
}

impl LinkReport {
    pub const CSV_HEADER: [&'static str; 8] =
        ["height", "counts", "vertices", "edges", "f_vector", "betti", "expansions", "threshold"];

    pub fn csv_record(&self) -> Vec<String> {
        let join = |v: &[String]| v.join(";");
        let threshold = self
            .thresholds
            .iter()
            .map(|t| format!("m={}:r={}:{}", t.m, t.r, if t.above { "above" } else { "below" }))
            .collect::<Vec<_>>();
        vec![
            self.height.to_string(),
            self.counts.clone(),
            self.vertices.to_string(),
            self.f_vector.get(1).copied().unwrap_or(0).to_string(),
            join(&self.f_vector.iter().map(ToString::to_string).collect::<Vec<_>>()),
            join(&self.homology.betti.iter().map(ToString::to_string).collect::<Vec<_>>()),
            self.expansions.to_string(),
            join(&threshold),
        ]
    }
}

/// A face of `C(m)/2` pairwise disjoint carets of one type, placed in
/// consecutive slots, if the link contains one.
fn planted_sigma(link: &DescendingLink, model: &CountModel, size: u64) -> Option<Vec<u32>> {
    let k = model.k();
    let index: HashMap<&LinkVertex, u32> = link.vertices.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
    for j in 0..k {
        if (0..k).any(|i| model.m()[i][j] * size > link.counts.leaves[i]) {
            continue;
        }
        if !model.removable(&link.counts, &vec![j; size as usize]) {
            continue;
        }
        let sigma: Option<Vec<u32>> = (0..size)
            .map(|s| {
                let slots = (0..k)
                    .map(|i| {
                        let w = model.m()[i][j] as u32;
                        (s as u32 * w..(s as u32 + 1) * w).collect()
                    })
                    .collect();
                index.get(&LinkVertex { caret: j, slots }).copied()
            })
            .collect();
        if let Some(s) = sigma {
            return Some(s);
        }
    }
    None
}

/// Homology of the link up to `m_max`, the threshold `r(m)` for each
/// `m <= m_max` against the vertex's expansion count, and the connectivity
/// checker run on a planted caret collection.
pub fn link_connectivity_report(
    link: &DescendingLink,
    model: &CountModel,
    m_max: u64,
    topts: ThresholdOptions,
) -> Result<LinkReport> {
    let histories = model.realizable(&link.counts, model.is_viral())?;
    let expansions = histories.iter().map(History::total).max().unwrap_or(0);
    let homology = link.complex.homology(Some(m_max as usize))?;
    let b = homology.homological_connectivity();
    let connectivity = match b {
        -2 => "(-1)-connected only (empty link)".to_string(),
        -1 => format!("disconnected (b0 = {})", homology.betti[0]),
        b => format!("homologically {b}-connected through degree {}", homology.betti.len() - 1),
    };
    let mut notes = vec![CONNECTIVITY_CAVEAT.to_string(), SCALE_NOTE.to_string()];
    let mut thresholds = Vec::new();
    let mut lemma = Vec::new();
    if model.is_viral() {
        let beta = model.beta();
        for m in 0..=m_max {
            let t = model.thresholds(m, topts)?;
            thresholds.push(ThresholdStatus {
                m,
                r: t.r,
                above: expansions >= t.r,
                incomplete: !t.incomplete_flags.is_empty(),
            });
            let target = t.c / 2;
            let sigma = planted_sigma(link, model, target);
            let outcome = sigma
                .as_ref()
                .map(|s| link.complex.lemma_connectivity_bound(s, m as usize + 1, beta as usize));
            if let Some(bound) = outcome.as_ref().and_then(|o| o.bound) {
                check_soundness(&homology, bound)?;
            }
            lemma.push(LemmaRun {
                m,
                flag_m: m as usize + 1,
                k: beta as usize,
                target_size: target,
                sigma: sigma.unwrap_or_default(),
                outcome,
            });
        }
    } else {
        notes.push("model lacks the viral expansion property; thresholds are not defined".into());
    }
    Ok(LinkReport {
        counts: link.counts.to_string(),
        height: link.counts.height(),
        expansions,
        vertices: link.vertices.len(),
        f_vector: link.f_vector(),
        homology,
        connectivity,
        thresholds,
        lemma,
        notes,
    })
}

/// A certified bound `b` must agree with the computed homology.
pub fn check_soundness(h: &HomologyReport, bound: i64) -> Result<()> {
    if bound >= 0 && !h.connected() {
        return Err(Error::Invariant(format!("checker certified bound {bound} on a disconnected complex")));
    }
    for d in 1..=(bound.max(0) as usize).min(h.betti.len().saturating_sub(1)) {
        if h.betti[d] != 0 || !h.torsion[d].is_empty() {
            return Err(Error::Invariant(format!("checker certified bound {bound} but H_{d} is nonzero")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::default_gates;
    use crate::gog::ExampleFamily;
    use crate::patches::{Seed, ENUMERATION_CAP};

    fn loop33() -> (GatedGraph, TreePatch, CountModel) {
        let g = ExampleFamily::Loop(3, 3).build().unwrap();
        let gs = default_gates(&g, None);
        let gg = GatedGraph::new(g, gs).unwrap();
        let t0 = gg.base_tree(Seed::Vertex(0)).unwrap();
        let model = CountModel::new(&gg.caret_table(), gg.counts(&t0).unwrap()).unwrap();
        (gg, t0, model)
    }

    fn cv(i: u64, l: &[u64]) -> CountVector {
        CountVector {
            interior: i,
            leaves: l.to_vec(),
        }
    }

    #[test]
    fn vertices_by_height() {
        let (_, _, model) = loop33();
        let at = |h| sf_vertices_at_height(h, &model).unwrap().into_iter().map(|v| v.counts).collect::<Vec<_>>();
        assert_eq!(at(6), vec![cv(1, &[3, 3])]);
        assert_eq!(at(10), vec![cv(2, &[5, 5])]);
        assert!(at(7).is_empty());
        assert_eq!(sf_vertices_at_height(10, &model).unwrap()[0].histories.len(), 2);
    }

    #[test]
    fn small_links() {
        let (gg, t0, model) = loop33();
        let base = descending_link(&cv(1, &[3, 3]), &model, LinkOptions::default()).unwrap();
        assert!(base.vertices.is_empty());
        let l = descending_link(&cv(2, &[5, 5]), &model, LinkOptions::default()).unwrap();
        assert_eq!(l.vertices.len(), 200);
        assert_eq!(l.edge_count(), 0);
        assert_eq!(l.vertices.iter().filter(|v| v.caret == 0).count(), 100);
        let o = oracle_descending_link(&cv(2, &[5, 5]), &gg, &t0, ENUMERATION_CAP, LinkOptions::default()).unwrap();
        assert_eq!(link_difference(&l, &o), None);
        let r = link_connectivity_report(&l, &model, 1, ThresholdOptions::default()).unwrap();
        assert_eq!(r.homology.betti[0], 200);
        let e = link_connectivity_report(&base, &model, 1, ThresholdOptions::default()).unwrap();
        assert!(e.connectivity.contains("(-1)-connected only"));
    }

    #[test]
    fn height_fourteen_link() {
        let (gg, t0, model) = loop33();
        let x = cv(3, &[7, 7]);
        let l = descending_link(&x, &model, LinkOptions::default()).unwrap();
        assert_eq!(l.vertices.len(), 1470);
        // every edge joins slot-disjoint carets whose residual is the base
        for e in l.complex.faces(1) {
            let (a, b) = (&l.vertices[e[0] as usize], &l.vertices[e[1] as usize]);
            assert!(a.disjoint(b));
            assert_eq!(model.residual(&x, &[a.caret, b.caret]), Some(cv(1, &[3, 3])));
        }
        let o = oracle_descending_link(&x, &gg, &t0, ENUMERATION_CAP, LinkOptions::default()).unwrap();
        assert_eq!(link_difference(&l, &o), None);
        assert_eq!(l.f_vector(), o.f_vector());
    }

    #[test]
    fn vertex_cap() {
        let (_, _, model) = loop33();
        let opts = LinkOptions {
            max_vertices: 50,
            max_faces: FACE_CAP,
        };
        let err = descending_link(&cv(2, &[5, 5]), &model, opts).unwrap_err();
        assert!(err.is_cap());
    }

    #[test]
    fn unrealizable_counts_rejected() {
        let (_, _, model) = loop33();
        assert!(descending_link(&cv(2, &[4, 6]), &model, LinkOptions::default()).is_err());
    }

    #[test]
    fn csv_row_shape() {
        let (_, _, model) = loop33();
        let l = descending_link(&cv(2, &[5, 5]), &model, LinkOptions::default()).unwrap();
        let r = link_connectivity_report(&l, &model, 0, ThresholdOptions::default()).unwrap();
        let row = r.csv_record();
        assert_eq!(row.len(), LinkReport::CSV_HEADER.len());
        assert_eq!(row[2], "200");
        assert_eq!(row[5], "200");
    }
}
