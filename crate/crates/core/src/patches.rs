//! Finite admissible subtrees of the Bass–Serre tree.
//!
//! The tree is never materialized. A vertex is named by its *address*: the
//! path of [`Step`]s from a fixed root, each step choosing a half-edge at the
//! current vertex and one of its `index` lifts. At a non-root vertex entered
//! through `s`, lift 0 of `s` is the edge back to the parent, so it is not a
//! child step. Two patches over the same root vertex are subtrees of one
//! ambient tree, which gives union, intersection and deduplication by plain
//! set operations on addresses.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::counts::{CountVector, History};
use crate::error::{Error, Result};
use crate::gates::{is_admissible, Certificate, GateSystem};
use crate::gog::{GraphOfGroups, HalfEdge};
use crate::par;

/// Node budget for a single growth run (caret or base tree).
pub const GROWTH_CAP: usize = 1_000_000;

/// Default cap on the number of patches returned by enumeration.
pub const ENUMERATION_CAP: usize = 200_000;

/// Default expansion budget of the viral repair loop.
pub const REPAIR_BUDGET: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Step {
    pub via: HalfEdge,
    pub lift: u32,
}

pub type Address = Vec<Step>;

/// A finite subtree of the ambient tree rooted at a lift of `root`.
///
/// `nodes` maps every address to its number of children in the patch; the
/// key set is prefix-closed. `marked` is an optional set of distinguished
/// interior vertices; it travels with the patch and has no effect on any
/// computation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreePatch {
    root: usize,
    nodes: BTreeMap<Address, u32>,
    marked: BTreeSet<Address>,
}

impl TreePatch {
    /// The patch consisting of the root alone.
    pub fn point(root: usize) -> Self {
        TreePatch {
            root,
            nodes: BTreeMap::from([(Vec::new(), 0)]),
            marked: BTreeSet::new(),
        }
    }

    /// Builds a patch from an address set; fails unless it is prefix-closed
    /// and contains the root.
    pub fn from_addresses(root: usize, addrs: impl IntoIterator<Item = Address>) -> Result<Self> {
        let set: BTreeSet<Address> = addrs.into_iter().collect();
        if !set.contains(&Vec::new()) {
            return Err(Error::pre("patch must contain the root"));
        }
        let mut nodes: BTreeMap<Address, u32> = set.iter().map(|a| (a.clone(), 0)).collect();
        for a in &set {
            if let Some((_, parent)) = a.split_last() {
                match nodes.get_mut(parent) {
                    Some(c) => *c += 1,
                    None => return Err(Error::pre("address set is not prefix-closed")),
                }
            }
        }
        Ok(TreePatch {
            root,
            nodes,
            marked: BTreeSet::new(),
        })
    }

    pub fn root_vertex(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, a: &[Step]) -> bool {
        self.nodes.contains_key(a)
    }

    pub fn addresses(&self) -> impl Iterator<Item = &Address> {
        self.nodes.keys()
    }

    pub fn child_count(&self, a: &[Step]) -> Option<u32> {
        self.nodes.get(a).copied()
    }

    pub fn marked(&self) -> &BTreeSet<Address> {
        &self.marked
    }

    /// `true` if every vertex of `self` is a vertex of `other`.
    pub fn is_subtree_of(&self, other: &TreePatch) -> bool {
        self.root == other.root && self.nodes.keys().all(|a| other.nodes.contains_key(a))
    }

    fn insert_child(&mut self, child: Address) -> bool {
        if self.nodes.contains_key(&child) {
            return false;
        }
        let parent = &child[..child.len() - 1];
        *self.nodes.get_mut(parent).expect("parent present") += 1;
        self.nodes.insert(child, 0);
        true
    }
}

/// The minimal admissible expansion beyond a leaf of one gate type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Caret {
    pub ty: usize,
    pub gate: HalfEdge,
    /// Standalone patch: the root is the far end of the attach edge and its
    /// only child `x` is the expanded leaf.
    pub patch: TreePatch,
    /// Terminal leaf census by gate type (a column of `M`).
    pub terminal: Vec<u64>,
    /// Number of interior vertices `I_ν`.
    pub interior: u64,
    /// Terminal leaf addresses relative to `x`.
    pub terminal_offsets: Vec<(Address, usize)>,
    /// Interior vertex addresses relative to `x` (including `x` itself).
    pub interior_offsets: Vec<Address>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaretSummary {
    /// Gate type, 1-based.
    #[serde(rename = "type")]
    pub ty: usize,
    pub gate: String,
    pub interior: u64,
    pub terminal_leaves: BTreeMap<String, u64>,
}

/// `M[i][j]` is the number of terminal leaves of type `i` in caret `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaretTable {
    pub gates: Vec<String>,
    #[serde(rename = "M")]
    pub m: Vec<Vec<u64>>,
    #[serde(rename = "I")]
    pub interior: Vec<u64>,
    pub carets: Vec<CaretSummary>,
}

impl CaretTable {
    pub fn k(&self) -> usize {
        self.interior.len()
    }

    /// Column sums of `M`: terminal leaves per caret.
    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.k()).map(|j| self.m.iter().map(|row| row[j]).sum()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Seed {
    Vertex(usize),
    Patch(TreePatch),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LatticeReport {
    pub carets: usize,
    pub elements: usize,
    pub boolean: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Repair {
    pub gates: Vec<String>,
    pub dropped: Vec<String>,
    /// Gate types (in the repaired system) of the greedy expansions.
    pub expansions: Vec<usize>,
    pub leaves: Vec<u64>,
    pub success: bool,
    #[serde(skip)]
    pub t0: Option<TreePatch>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViralReport {
    pub pass: bool,
    pub reasons: Vec<String>,
    pub repair: Option<Repair>,
}

/// A graph of groups together with an admissible gate system and its
/// precomputed carets.
#[derive(Clone, Debug)]
pub struct GatedGraph {
    g: GraphOfGroups,
    gs: GateSystem,
    carets: Vec<Caret>,
}

impl GatedGraph {
    /// Fails on inadmissible gate systems and on graphs whose Bass–Serre tree
    /// has leaves.
    pub fn new(g: GraphOfGroups, gs: GateSystem) -> Result<Self> {
        for v in 0..g.vertex_count() {
            let d = g.tree_degree(v);
            if d < 2 {
                return Err(Error::DegenerateTree {
                    vertex: g.vertex_name(v).to_string(),
                    degree: d,
                });
            }
        }
        if let Certificate::Inadmissible { cycle } = is_admissible(&g, &gs) {
            let names: Vec<String> = cycle.iter().map(|&h| g.half_edge_name(h)).collect();
            return Err(Error::Inadmissible(format!("entry-state cycle {}", names.join(" -> "))));
        }
        let mut gg = GatedGraph {
            g,
            gs,
            carets: Vec::new(),
        };
        gg.carets = (0..gg.k()).map(|t| gg.grow_caret(t)).collect::<Result<_>>()?;
        Ok(gg)
    }

    pub fn graph(&self) -> &GraphOfGroups {
        &self.g
    }

    pub fn gates(&self) -> &GateSystem {
        &self.gs
    }

    pub fn k(&self) -> usize {
        self.gs.k()
    }

    /// Vertex of the quotient graph under `a`.
    pub fn label(&self, t: &TreePatch, a: &[Step]) -> usize {
        match a.last() {
            None => t.root,
            Some(s) => self.g.vertex_of(s.via.opposite()),
        }
    }

    /// Half-edge through which a non-root vertex is entered.
    pub fn entry(a: &[Step]) -> Option<HalfEdge> {
        a.last().map(|s| s.via.opposite())
    }

    /// All child steps of `a` in the ambient tree.
    pub fn ambient_children(&self, t: &TreePatch, a: &[Step]) -> Vec<Step> {
        let v = self.label(t, a);
        let entry = Self::entry(a);
        let mut out = Vec::new();
        for &h in self.g.half_edges_at(v) {
            for lift in 0..self.g.index(h) as u32 {
                if entry == Some(h) && lift == 0 {
                    continue;
                }
                out.push(Step { via: h, lift });
            }
        }
        out
    }

    pub fn degree(&self, t: &TreePatch, a: &[Step]) -> u64 {
        t.nodes[a] as u64 + u64::from(!a.is_empty())
    }

    pub fn is_interior(&self, t: &TreePatch, a: &[Step]) -> bool {
        self.degree(t, a) == self.g.tree_degree(self.label(t, a))
    }

    pub fn is_leaf(&self, t: &TreePatch, a: &[Step]) -> bool {
        self.degree(t, a) == 1
    }

    /// Half-edge at the leaf end of a leaf's only edge.
    pub fn leaf_half_edge(&self, t: &TreePatch, a: &[Step]) -> Option<HalfEdge> {
        if !self.is_leaf(t, a) {
            return None;
        }
        match Self::entry(a) {
            Some(h) => Some(h),
            None => t
                .nodes
                .range::<[Step], _>((std::ops::Bound::Excluded(&[][..]), std::ops::Bound::Unbounded))
                .next()
                .map(|(c, _)| c[0].via),
        }
    }

    /// Gate type of a leaf, or `None` for non-leaves and non-gate leaves.
    pub fn leaf_type(&self, t: &TreePatch, a: &[Step]) -> Option<usize> {
        self.leaf_half_edge(t, a).and_then(|h| self.gs.type_of(h))
    }

    pub fn leaves(&self, t: &TreePatch) -> Vec<Address> {
        t.nodes.keys().filter(|a| self.is_leaf(t, a)).cloned().collect()
    }

    /// Adds every missing child of `start`, then keeps expanding each new
    /// vertex whose entry is not a gate.
    fn grow(&self, t: &mut TreePatch, start: Address, cap: usize) -> Result<()> {
        let mut stack = vec![start];
        while let Some(a) = stack.pop() {
            for step in self.ambient_children(t, &a) {
                let mut child = a.clone();
                child.push(step);
                if t.insert_child(child.clone()) {
                    if t.nodes.len() > cap {
                        return Err(Error::cap("patch growth (vertices)", cap));
                    }
                    if !self.gs.contains(step.via.opposite()) {
                        stack.push(child);
                    }
                }
            }
        }
        Ok(())
    }

    fn grow_caret(&self, ty: usize) -> Result<Caret> {
        let gate = self.gs.gates()[ty];
        let mut t = TreePatch::point(self.g.vertex_of(gate.opposite()));
        let x = vec![Step {
            via: gate.opposite(),
            lift: 0,
        }];
        t.insert_child(x.clone());
        self.grow(&mut t, x.clone(), GROWTH_CAP)?;
        let mut terminal = vec![0; self.k()];
        let mut terminal_offsets = Vec::new();
        let mut interior_offsets = Vec::new();
        for a in t.nodes.keys().filter(|a| !a.is_empty()) {
            let rel = a[1..].to_vec();
            if self.is_interior(&t, a) {
                interior_offsets.push(rel);
            } else {
                let ty = self
                    .leaf_type(&t, a)
                    .ok_or_else(|| Error::Invariant("caret growth left a non-gate leaf".into()))?;
                terminal[ty] += 1;
                terminal_offsets.push((rel, ty));
            }
        }
        Ok(Caret {
            ty,
            gate,
            patch: t,
            terminal,
            interior: interior_offsets.len() as u64,
            terminal_offsets,
            interior_offsets,
        })
    }

    pub fn caret(&self, ty: usize) -> Result<&Caret> {
        self.carets
            .get(ty)
            .ok_or_else(|| Error::pre(format!("gate type {ty} out of range 0..{}", self.k())))
    }

    pub fn carets(&self) -> &[Caret] {
        &self.carets
    }

    pub fn caret_table(&self) -> CaretTable {
        let k = self.k();
        let names = self.gs.names(&self.g);
        let m = (0..k).map(|i| self.carets.iter().map(|c| c.terminal[i]).collect()).collect();
        CaretTable {
            gates: names.clone(),
            m,
            interior: self.carets.iter().map(|c| c.interior).collect(),
            carets: self
                .carets
                .iter()
                .map(|c| CaretSummary {
                    ty: c.ty + 1,
                    gate: names[c.ty].clone(),
                    interior: c.interior,
                    terminal_leaves: (0..k)
                        .filter(|&i| c.terminal[i] > 0)
                        .map(|i| (names[i].clone(), c.terminal[i]))
                        .collect(),
                })
                .collect(),
        }
    }

    /// Smallest admissible patch containing the seed.
    pub fn base_tree(&self, seed: Seed) -> Result<TreePatch> {
        let mut t = match seed {
            Seed::Vertex(v) => {
                if v >= self.g.vertex_count() {
                    return Err(Error::pre(format!("vertex index {v} out of range")));
                }
                TreePatch::point(v)
            }
            Seed::Patch(p) => {
                self.check_shape(&p)?;
                p
            }
        };
        let todo: Vec<Address> = t
            .nodes
            .keys()
            .filter(|a| !self.is_interior(&t, a) && self.leaf_type(&t, a).is_none())
            .cloned()
            .collect();
        for a in todo {
            self.grow(&mut t, a, GROWTH_CAP)?;
        }
        Ok(t)
    }

    /// Checks that every step of every address is an ambient step.
    fn check_shape(&self, t: &TreePatch) -> Result<()> {
        if t.root >= self.g.vertex_count() {
            return Err(Error::pre("patch root is not a vertex of the graph"));
        }
        for a in t.nodes.keys() {
            if let Some((last, parent)) = a.split_last() {
                if !self.ambient_children(t, parent).contains(last) {
                    return Err(Error::pre("patch address uses a step outside the ambient tree"));
                }
            }
        }
        Ok(())
    }

    /// Full admissibility check: ambient shape, every vertex interior or a
    /// leaf, every leaf entered through a gate.
    pub fn validate(&self, t: &TreePatch) -> Result<()> {
        self.check_shape(t)?;
        for (a, &c) in &t.nodes {
            let expected = t
                .nodes
                .range::<[Step], _>((std::ops::Bound::Excluded(&a[..]), std::ops::Bound::Unbounded))
                .take_while(|(b, _)| b.starts_with(a))
                .filter(|(b, _)| b.len() == a.len() + 1)
                .count() as u32;
            if c != expected {
                return Err(Error::Invariant("stale child count in patch".into()));
            }
            if self.is_interior(t, a) {
                continue;
            }
            if self.leaf_type(t, a).is_none() {
                return Err(Error::pre(format!(
                    "vertex at depth {} is neither interior nor a gate leaf",
                    a.len()
                )));
            }
        }
        Ok(())
    }

    pub fn is_admissible_patch(&self, t: &TreePatch) -> bool {
        self.validate(t).is_ok()
    }

    /// Attaches the caret of the leaf's type at `leaf`.
    pub fn expand_leaf(&self, t: &TreePatch, leaf: &[Step]) -> Result<TreePatch> {
        if !t.contains(leaf) {
            return Err(Error::pre("leaf not found in patch"));
        }
        if self.leaf_type(t, leaf).is_none() {
            return Err(Error::pre("vertex is not an admissible leaf"));
        }
        let mut out = t.clone();
        self.grow(&mut out, leaf.to_vec(), GROWTH_CAP)?;
        Ok(out)
    }

    /// Vertices expanded on the way from `t0` to `t`, with their types.
    pub fn expansion_points(&self, t: &TreePatch, t0: &TreePatch) -> Result<Vec<(Address, usize)>> {
        if !t0.is_subtree_of(t) {
            return Err(Error::pre("base patch is not a subtree of the patch"));
        }
        self.validate(t)?;
        self.validate(t0)?;
        let mut out = Vec::new();
        for a in t.nodes.keys() {
            if !self.is_interior(t, a) {
                continue;
            }
            let ty = if t0.contains(a) {
                if self.is_interior(t0, a) {
                    continue;
                }
                self.leaf_type(t0, a)
            } else {
                Self::entry(a).and_then(|h| self.gs.type_of(h))
            };
            if let Some(ty) = ty {
                out.push((a.clone(), ty));
            }
        }
        Ok(out)
    }

    pub fn history(&self, t: &TreePatch, t0: &TreePatch) -> Result<History> {
        let mut n = vec![0; self.k()];
        for (_, ty) in self.expansion_points(t, t0)? {
            n[ty] += 1;
        }
        Ok(History(n))
    }

    pub fn counts(&self, t: &TreePatch) -> Result<CountVector> {
        let mut interior = 0;
        let mut leaves = vec![0; self.k()];
        for a in t.nodes.keys() {
            if self.is_interior(t, a) {
                interior += 1;
            } else {
                let ty = self
                    .leaf_type(t, a)
                    .ok_or_else(|| Error::pre("patch has a vertex that is neither interior nor a gate leaf"))?;
                leaves[ty] += 1;
            }
        }
        Ok(CountVector { interior, leaves })
    }

    pub fn tree_union(&self, t1: &TreePatch, t2: &TreePatch) -> Result<TreePatch> {
        if t1.root != t2.root {
            return Err(Error::pre("patches live in different ambient trees"));
        }
        TreePatch::from_addresses(t1.root, t1.nodes.keys().chain(t2.nodes.keys()).cloned())
    }

    pub fn tree_intersection(&self, t1: &TreePatch, t2: &TreePatch) -> Result<TreePatch> {
        if t1.root != t2.root {
            return Err(Error::pre("patches live in different ambient trees"));
        }
        TreePatch::from_addresses(t1.root, t1.nodes.keys().filter(|a| t2.contains(a)).cloned())
    }

    /// All admissible patches reachable from `t0` by at most `n` leaf
    /// expansions, in breadth-first order of first appearance.
    pub fn enumerate_admissible(&self, t0: &TreePatch, n: usize, cap: usize) -> Result<Vec<TreePatch>> {
        self.validate(t0)?;
        let mut seen: HashSet<TreePatch> = HashSet::from([t0.clone()]);
        let mut out = vec![t0.clone()];
        let mut frontier = vec![t0.clone()];
        for _ in 0..n {
            let children: Vec<Result<Vec<TreePatch>>> = par::map(&frontier, |t| {
                self.leaves(t)
                    .into_iter()
                    .map(|leaf| self.expand_leaf(t, &leaf))
                    .collect()
            });
            let mut next = Vec::new();
            for batch in children {
                for child in batch? {
                    if seen.insert(child.clone()) {
                        if out.len() >= cap {
                            return Err(Error::cap("enumerated patches", cap));
                        }
                        out.push(child.clone());
                        next.push(child);
                    }
                }
            }
            frontier = next;
        }
        Ok(out)
    }

    /// Checks that `[t, t2]` is a Boolean lattice of rank equal to the number
    /// of attached carets.
    ///
    /// The intermediate trees are found by searching all leaf expansions of
    /// `t` that stay inside `t2`, independently of the caret decomposition.
    pub fn interval_lattice(&self, t: &TreePatch, t2: &TreePatch) -> Result<LatticeReport> {
        let points = self.expansion_points(t2, t)?;
        if let Some((a, _)) = points.iter().find(|(a, _)| !t.contains(a)) {
            return Err(Error::pre(format!(
                "not an elementary expansion: caret attached at depth {} lies on another caret",
                a.len()
            )));
        }
        let c = points.len();
        let mut elements: BTreeSet<TreePatch> = BTreeSet::from([t.clone()]);
        let mut queue = VecDeque::from([t.clone()]);
        while let Some(u) = queue.pop_front() {
            for leaf in self.leaves(&u) {
                let v = self.expand_leaf(&u, &leaf)?;
                if v.is_subtree_of(t2) && elements.insert(v.clone()) {
                    queue.push_back(v);
                }
            }
        }
        let sets: Vec<BTreeSet<Address>> = elements
            .iter()
            .map(|e| {
                self.expansion_points(e, t)
                    .map(|ps| ps.into_iter().map(|(a, _)| a).collect())
            })
            .collect::<Result<_>>()?;
        let distinct: BTreeSet<&BTreeSet<Address>> = sets.iter().collect();
        let mut boolean = c < usize::BITS as usize && elements.len() == 1 << c && distinct.len() == elements.len();
        if boolean {
            let elems: Vec<&TreePatch> = elements.iter().collect();
            'outer: for i in 0..elems.len() {
                for j in 0..elems.len() {
                    if elems[i].is_subtree_of(elems[j]) != sets[i].is_subset(&sets[j]) {
                        boolean = false;
                        break 'outer;
                    }
                }
            }
        }
        Ok(LatticeReport {
            carets: c,
            elements: elements.len(),
            boolean,
        })
    }

    /// Marks a set of interior vertices of `t`.
    pub fn with_marked(&self, t: &TreePatch, marked: BTreeSet<Address>) -> Result<TreePatch> {
        if let Some(a) = marked.iter().find(|a| !t.contains(a) || !self.is_interior(t, a)) {
            return Err(Error::pre(format!("marked vertex at depth {} is not interior", a.len())));
        }
        let mut out = t.clone();
        out.marked = marked;
        Ok(out)
    }

    /// Tests the viral expansion property and, when only the leaf counts of
    /// `t0` fall short, tries to repair by dropping unreachable gate types
    /// and expanding `t0` greedily within `budget` expansions.
    pub fn check_viral(&self, t0: &TreePatch, budget: usize) -> Result<ViralReport> {
        let table = self.caret_table();
        let k = self.k();
        let counts = self.counts(t0)?;
        let mut reasons = Vec::new();
        for i in 0..k {
            if table.m[i][i] < 3 {
                reasons.push(format!("M_{}{} = {}", i + 1, i + 1, table.m[i][i]));
            }
        }
        let caret_ok = reasons.is_empty();
        for i in 0..k {
            if counts.leaves[i] < 2 {
                reasons.push(format!("L_{}(T0) = {}", i + 1, counts.leaves[i]));
            }
        }
        if reasons.is_empty() {
            return Ok(ViralReport {
                pass: true,
                reasons,
                repair: None,
            });
        }
        let repair = if caret_ok { Some(self.repair(&table, t0, &counts, budget)?) } else { None };
        Ok(ViralReport {
            pass: false,
            reasons,
            repair,
        })
    }

    fn repair(&self, table: &CaretTable, t0: &TreePatch, counts: &CountVector, budget: usize) -> Result<Repair> {
        let k = self.k();
        let mut reach: Vec<bool> = counts.leaves.iter().map(|&l| l > 0).collect();
        loop {
            let mut changed = false;
            for j in 0..k {
                if reach[j] {
                    for i in 0..k {
                        if table.m[i][j] > 0 && !reach[i] {
                            reach[i] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let names = self.gs.names(&self.g);
        let dropped: Vec<String> = (0..k).filter(|&i| !reach[i]).map(|i| names[i].clone()).collect();
        let kept: Vec<HalfEdge> = (0..k).filter(|&i| reach[i]).map(|i| self.gs.gates()[i]).collect();
        let sub = if dropped.is_empty() {
            self.clone()
        } else {
            match GatedGraph::new(self.g.clone(), GateSystem::new(&self.g, kept)?) {
                Ok(s) => s,
                Err(Error::Inadmissible(_)) => {
                    return Ok(Repair {
                        gates: names,
                        dropped,
                        expansions: vec![],
                        leaves: counts.leaves.clone(),
                        success: false,
                        t0: None,
                    })
                }
                Err(e) => return Err(e),
            }
        };
        let sub_table = sub.caret_table();
        let sk = sub.k();
        let mut t = t0.clone();
        let mut expansions = Vec::new();
        let mut leaves = sub.counts(&t)?.leaves;
        while leaves.iter().any(|&l| l < 2) && expansions.len() < budget {
            let deficient: Vec<usize> = (0..sk).filter(|&i| leaves[i] < 2).collect();
            let gain = |j: usize| deficient.iter().any(|&i| sub_table.m[i][j] > u64::from(i == j));
            let pick = (0..sk)
                .filter(|&j| leaves[j] > 0)
                .find(|&j| gain(j))
                .or_else(|| (0..sk).find(|&j| leaves[j] > 0));
            let Some(j) = pick else { break };
            let leaf = sub
                .leaves(&t)
                .into_iter()
                .find(|a| sub.leaf_type(&t, a) == Some(j))
                .ok_or_else(|| Error::Invariant("leaf count disagrees with patch".into()))?;
            t = sub.expand_leaf(&t, &leaf)?;
            expansions.push(j);
            leaves = sub.counts(&t)?.leaves;
        }
        let success = leaves.iter().all(|&l| l >= 2);
        Ok(Repair {
            gates: sub.gs.names(&sub.g),
            dropped,
            expansions,
            leaves,
            success,
            t0: success.then_some(t),
        })
    }

    /// Graphviz rendering: vertices carry their quotient label, leaves their
    /// entry half-edge and gate type.
    pub fn to_dot(&self, t: &TreePatch) -> String {
        let ids: BTreeMap<&Address, usize> = t.nodes.keys().enumerate().map(|(i, a)| (a, i)).collect();
        let mut out = String::from("digraph patch {\n  node [shape=circle];\n");
        for (a, &i) in &ids {
            let v = self.g.vertex_name(self.label(t, a));
            let label = match self.leaf_half_edge(t, a) {
                Some(h) => match self.gs.type_of(h) {
                    Some(ty) => format!("{v}\\n{} (type {})", self.g.half_edge_name(h), ty + 1),
                    None => format!("{v}\\n{}", self.g.half_edge_name(h)),
                },
                None => v.to_string(),
            };
            let shape = if self.is_interior(t, a) { "" } else { ", shape=box" };
            let mark = if t.marked.contains(*a) { ", style=bold" } else { "" };
            let _ = writeln!(out, "  n{i} [label=\"{label}\"{shape}{mark}];");
        }
        for (a, &i) in &ids {
            if let Some((last, parent)) = a.split_last() {
                let p = ids[&parent.to_vec()];
                let _ = writeln!(
                    out,
                    "  n{p} -> n{i} [label=\"{}/{}\"];",
                    self.g.half_edge_name(last.via),
                    last.lift
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::default_gates;
    use crate::gog::{EdgeSpec, ExampleFamily};
    use proptest::prelude::*;

    fn gated(f: ExampleFamily) -> GatedGraph {
        gated_graph(f.build().unwrap())
    }

    fn gated_graph(g: GraphOfGroups) -> GatedGraph {
        let gs = default_gates(&g, None);
        GatedGraph::new(g, gs).unwrap()
    }

    fn bs23_aug() -> GatedGraph {
        gated_graph(ExampleFamily::Bs(2, 3).build().unwrap().augment())
    }

    /// Terminal leaf census of caret `j` by the recursive count: each
    /// non-gate entry state spawns the children it must expand.
    fn census_by_recursion(gg: &GatedGraph, j: usize) -> (Vec<u64>, u64) {
        fn visit(gg: &GatedGraph, entry: HalfEdge, acc: &mut Vec<u64>, interior: &mut u64) {
            let g = gg.graph();
            *interior += 1;
            let v = g.vertex_of(entry);
            for &h in g.half_edges_at(v) {
                let lifts = g.index(h) - u64::from(h == entry);
                for _ in 0..lifts {
                    let next = h.opposite();
                    match gg.gates().type_of(next) {
                        Some(t) => acc[t] += 1,
                        None => visit(gg, next, acc, interior),
                    }
                }
            }
        }
        let mut acc = vec![0; gg.k()];
        let mut interior = 0;
        visit(gg, gg.gates().gates()[j], &mut acc, &mut interior);
        (acc, interior)
    }

    #[test]
    fn loop33_carets() {
        let gg = gated(ExampleFamily::Loop(3, 3));
        let t = gg.caret_table();
        assert_eq!(t.m, vec![vec![3, 2], vec![2, 3]]);
        assert_eq!(t.interior, vec![1, 1]);
        let c = gg.caret(0).unwrap();
        let standalone = gg.counts(&c.patch).unwrap();
        assert_eq!(standalone, CountVector { interior: 1, leaves: vec![3, 3] });
    }

    #[test]
    fn other_caret_tables() {
        assert_eq!(gated(ExampleFamily::Bs(2, 3)).caret_table().m, vec![vec![3, 2], vec![1, 2]]);
        assert_eq!(
            bs23_aug().caret_table().m,
            vec![vec![9, 8], vec![5, 6]]
        );
        let z = gated(ExampleFamily::ZLine).caret_table();
        assert_eq!(z.m[0][0], 1);
        assert_eq!(z.interior, vec![1, 1]);
        let am = gated(ExampleFamily::Amalgam(3, 3)).caret_table();
        assert_eq!((am.m.clone(), am.interior.clone()), (vec![vec![4]], vec![3]));
    }

    #[test]
    fn carets_match_recursive_census() {
        let three = GraphOfGroups::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                EdgeSpec::new("e1", "a", "b", 2, 1),
                EdgeSpec::new("e2", "b", "c", 1, 2),
                EdgeSpec::new("e3", "a", "c", 2, 2),
                EdgeSpec::new("e4", "c", "c", 1, 2),
            ],
        )
        .unwrap();
        for g in [
            three.clone(),
            three.augment(),
            ExampleFamily::Amalgam(3, 4).build().unwrap(),
            ExampleFamily::Bs(2, 5).build().unwrap(),
        ] {
            let gs = default_gates(&g, None);
            let gg = GatedGraph::new(g, gs).unwrap();
            for j in 0..gg.k() {
                let (census, interior) = census_by_recursion(&gg, j);
                let c = gg.caret(j).unwrap();
                assert_eq!(c.terminal, census);
                assert_eq!(c.interior, interior);
            }
        }
    }

    #[test]
    fn base_tree_and_expansion() {
        let gg = gated(ExampleFamily::Loop(3, 3));
        let t0 = gg.base_tree(Seed::Vertex(0)).unwrap();
        assert_eq!(t0.len(), 7);
        assert_eq!(gg.counts(&t0).unwrap(), CountVector { interior: 1, leaves: vec![3, 3] });
        assert_eq!(gg.base_tree(Seed::Patch(t0.clone())).unwrap(), t0);
        let leaf = gg.leaves(&t0).into_iter().find(|a| gg.leaf_type(&t0, a) == Some(0)).unwrap();
        let t1 = gg.expand_leaf(&t0, &leaf).unwrap();
        assert_eq!(gg.counts(&t1).unwrap(), CountVector { interior: 2, leaves: vec![5, 5] });
        assert_eq!(gg.history(&t1, &t0).unwrap(), History(vec![1, 0]));
        assert_eq!(gg.history(&t0, &t0).unwrap(), History(vec![0, 0]));
        assert!(gg.expand_leaf(&t0, &[]).is_err());
        assert!(gg.history(&t0, &t1).is_err());
    }

    #[test]
    fn amalgam_base_tree() {
        let gg = gated(ExampleFamily::Amalgam(3, 3));
        let t0 = gg.base_tree(Seed::Vertex(0)).unwrap();
        // Root v: 3 children entered via tau (gate) -> leaves.
        assert_eq!(gg.counts(&t0).unwrap(), CountVector { interior: 1, leaves: vec![3] });
        let t1 = gg.base_tree(Seed::Vertex(1)).unwrap();
        // Root w: 3 children at v entered via iota (not a gate), each with
        // 2 more tau leaves.
        assert_eq!(gg.counts(&t1).unwrap(), CountVector { interior: 4, leaves: vec![6] });
    }

    #[test]
    fn expansions_commute() {
        let gg = gated(ExampleFamily::Loop(3, 3));
        let t0 = gg.base_tree(Seed::Vertex(0)).unwrap();
        let leaves = gg.leaves(&t0);
        let a = gg.expand_leaf(&gg.expand_leaf(&t0, &leaves[0]).unwrap(), &leaves[4]).unwrap();
        let b = gg.expand_leaf(&gg.expand_leaf(&t0, &leaves[4]).unwrap(), &leaves[0]).unwrap();
        assert_eq!(a, b);
        let u = gg.tree_union(&gg.expand_leaf(&t0, &leaves[0]).unwrap(), &gg.expand_leaf(&t0, &leaves[4]).unwrap()).unwrap();
        assert_eq!(u, a);
        let i = gg.tree_intersection(&gg.expand_leaf(&t0, &leaves[0]).unwrap(), &gg.expand_leaf(&t0, &leaves[4]).unwrap()).unwrap();
        assert_eq!(i, t0);
    }

    #[test]
    fn enumeration_counts() {
        let gg = gated(ExampleFamily::Loop(3, 3));
        let t0 = gg.base_tree(Seed::Vertex(0)).unwrap();
        assert_eq!(gg.enumerate_admissible(&t0, 0, 10).unwrap(), vec![t0.clone()]);
        assert_eq!(gg.enumerate_admissible(&t0, 1, 100).unwrap().len(), 7);
        assert!(gg.enumerate_admissible(&t0, 2, 10).unwrap_err().is_cap());
    }

    /// Breadth-first enumeration by expansion-point sets instead of patches.
    fn oracle_enumeration(gg: &GatedGraph, t0: &TreePatch, n: usize) -> BTreeSet<BTreeSet<Address>> {
        let mut seen = BTreeSet::from([BTreeSet::new()]);
        let mut frontier = vec![(t0.clone(), BTreeSet::new())];
        for _ in 0..n {
            let mut next = Vec::new();
            for (t, pts) in &frontier {
                for leaf in gg.leaves(t) {
                    let mut p2: BTreeSet<Address> = pts.clone();
                    p2.insert(leaf.clone());
                    if seen.insert(p2.clone()) {
                        next.push((gg.expand_leaf(t, &leaf).unwrap(), p2));
                    }
                }
            }
            frontier = next;
        }
        seen
    }

    #[test]
    fn enumeration_matches_oracle() {
        for f in [ExampleFamily::Loop(3, 3), ExampleFamily::Amalgam(3, 3), ExampleFamily::Bs(2, 3)] {
            let gg = gated(f);
            let t0 = gg.base_tree(Seed::Vertex(0)).unwrap();
            let trees = gg.enumerate_admissible(&t0, 3, ENUMERATION_CAP).unwrap();
            let oracle = oracle_enumeration(&gg, &t0, 3);
            assert_eq!(trees.len(), oracle.len(), "{f}");
            let ours: BTreeSet<BTreeSet<Address>> = trees
                .iter()
                .map(|t| gg.expansion_points(t, &t0).unwrap().into_iter().map(|(a, _)| a).collect())
                .collect();
            assert_eq!(ours, oracle);
        }
    }

    #[test]
    fn lattices() {
        let gg = gated(ExampleFamily::Loop(3, 3));
        let t0 = gg.base_tree(Seed::Vertex(0)).unwrap();
        let leaves = gg.leaves(&t0);
        let one = gg.expand_leaf(&t0, &leaves[1]).unwrap();
        let two = gg.expand_leaf(&one, &leaves[5]).unwrap();
        let r = gg.interval_lattice(&t0, &two).unwrap();
        assert_eq!(r, LatticeReport { carets: 2, elements: 4, boolean: true });
        assert_eq!(gg.interval_lattice(&t0, &t0).unwrap().elements, 1);
        let new_leaf = gg.leaves(&one).into_iter().find(|a| !t0.contains(a)).unwrap();
        let nested = gg.expand_leaf(&one, &new_leaf).unwrap();
        assert!(gg.interval_lattice(&t0, &nested).is_err());
    }

    #[test]
    fn caret_minimality() {
        let gg = bs23_aug();
        for c in gg.carets() {
            let p = &c.patch;
            for a in p.addresses().filter(|a| a.len() >= 2 && gg.is_leaf(p, a)) {
                let smaller = TreePatch::from_addresses(p.root_vertex(), p.addresses().filter(|b| *b != a).cloned()).unwrap();
                // The parent loses full degree, so the shrunken caret is not
                // admissible as a patch.
                assert!(!gg.is_admissible_patch(&smaller));
            }
        }
    }

    #[test]
    fn viral_reports() {
        let gg = gated(ExampleFamily::Loop(3, 3));
        let t0 = gg.base_tree(Seed::Vertex(0)).unwrap();
        assert!(gg.check_viral(&t0, REPAIR_BUDGET).unwrap().pass);
        let z = gated(ExampleFamily::ZLine);
        let zt = z.base_tree(Seed::Vertex(0)).unwrap();
        let r = z.check_viral(&zt, REPAIR_BUDGET).unwrap();
        assert!(!r.pass);
        assert_eq!(r.reasons[0], "M_11 = 1");
        let bs = gated(ExampleFamily::Bs(2, 3));
        let r = bs.check_viral(&bs.base_tree(Seed::Vertex(0)).unwrap(), REPAIR_BUDGET).unwrap();
        assert_eq!(r.reasons, vec!["M_22 = 2"]);
    }

    #[test]
    fn repair_expands_short_base_tree() {
        let text = "vertex v\nvertex w\nedge e0 : v -> w index 1 3\nedge e1 : v -> w index 3 3\n";
        let gg = gated_graph(crate::gog::GogFile::parse(text).unwrap().graph);
        let t0 = gg.base_tree(Seed::Vertex(0)).unwrap();
        let r = gg.check_viral(&t0, REPAIR_BUDGET).unwrap();
        assert!(!r.pass);
        assert!(r.reasons.iter().all(|s| s.starts_with("L_")));
        let rep = r.repair.unwrap();
        assert!(rep.success && rep.dropped.is_empty());
        let t1 = rep.t0.unwrap();
        assert!(gg.is_admissible_patch(&t1));
        let mut n = vec![0; gg.k()];
        for &j in &rep.expansions {
            n[j] += 1;
        }
        assert_eq!(gg.history(&t1, &t0).unwrap(), History(n));
        let leaves = gg.counts(&t1).unwrap().leaves;
        assert_eq!(leaves, rep.leaves);
        assert!(leaves.iter().all(|&l| l >= 2));
        assert!(gg.check_viral(&t1, REPAIR_BUDGET).unwrap().pass);
    }

    #[test]
    fn degenerate_rejected() {
        let g = ExampleFamily::Amalgam(1, 3).build().unwrap();
        let gs = default_gates(&g, None);
        assert!(matches!(GatedGraph::new(g, gs), Err(Error::DegenerateTree { degree: 1, .. })));
    }

    #[test]
    fn inadmissible_rejected() {
        let g = ExampleFamily::Loop(3, 3).build().unwrap();
        let gs = GateSystem::new(&g, [HalfEdge::new(0, crate::gog::End::Iota)]).unwrap();
        assert!(matches!(GatedGraph::new(g, gs), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn dot_export_lists_every_vertex() {
        let gg = gated(ExampleFamily::Loop(3, 3));
        let t0 = gg.base_tree(Seed::Vertex(0)).unwrap();
        let dot = gg.to_dot(&t0);
        assert_eq!(dot.matches("label=\"v").count(), 7);
        assert_eq!(dot.matches(" -> ").count(), 6);
        assert!(dot.contains("e.tau (type 2)"));
    }

    #[test]
    fn caret_table_json_round_trip() {
        let t = gated(ExampleFamily::Bs(2, 3)).caret_table();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"M\":[[3,2],[1,2]]"));
        assert_eq!(serde_json::from_str::<CaretTable>(&s).unwrap(), t);
    }

    /// Growth from every vertex terminates iff the gate system is
    /// admissible.
    fn growth_terminates(g: &GraphOfGroups, gs: &GateSystem, cap: usize) -> bool {
        let gg = GatedGraph {
            g: g.clone(),
            gs: gs.clone(),
            carets: vec![],
        };
        (0..g.vertex_count()).all(|v| {
            let mut t = TreePatch::point(v);
            gg.grow(&mut t, vec![], cap).is_ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn admissibility_matches_growth(n in 1usize..3, raw in prop::collection::vec((0usize..3, 0usize..3, 1u64..3, 1u64..3), 1..3), mask in any::<u8>()) {
            let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let mut edges: Vec<EdgeSpec> = (1..n).map(|i| EdgeSpec::new(&format!("t{i}"), &format!("v{}", i - 1), &format!("v{i}"), 1, 2)).collect();
            for (j, (a, b, x, y)) in raw.into_iter().enumerate() {
                edges.push(EdgeSpec::new(&format!("x{j}"), &format!("v{}", a % n), &format!("v{}", b % n), x, y));
            }
            let g = GraphOfGroups::new(vertices, edges).unwrap();
            let gates: Vec<HalfEdge> = g.half_edges().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, h)| h).collect();
            let gs = GateSystem::new(&g, gates).unwrap();
            prop_assert_eq!(is_admissible(&g, &gs).is_admissible(), growth_terminates(&g, &gs, 1_500));
        }
    }
}
