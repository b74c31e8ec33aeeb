//! Finite graphs of groups, represented by the indices `[G_v : G_e]` at
//! every half-edge.
//!
//! Vertex and edge groups themselves are never stored. Every construction
//! downstream (gates, carets, counts, links) depends only on which half-edges
//! meet at which vertex and on how many lifts each half-edge has around a
//! vertex of the Bass–Serre tree.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Iota,
    Tau,
}

impl End {
    pub fn as_str(self) -> &'static str {
        match self {
            End::Iota => "iota",
            End::Tau => "tau",
        }
    }

    pub fn flip(self) -> End {
        match self {
            End::Iota => End::Tau,
            End::Tau => End::Iota,
        }
    }
}

/// One end of an edge of the quotient graph.
///
/// Packed as `2 * edge + end`, so the derived order is lexicographic in
/// `(edge, end)` with `iota < tau`. Edge indices follow the canonical
/// (lexicographic by id) edge order of the owning [`GraphOfGroups`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfEdge(u32);

impl HalfEdge {
    pub fn new(edge: usize, end: End) -> Self {
        let e = match end {
            End::Iota => 0,
            End::Tau => 1,
        };
        HalfEdge((edge as u32) * 2 + e)
    }

    pub fn edge(self) -> usize {
        (self.0 / 2) as usize
    }

    pub fn end(self) -> End {
        if self.0 % 2 == 0 {
            End::Iota
        } else {
            End::Tau
        }
    }

    /// The other half-edge of the same edge.
    pub fn opposite(self) -> HalfEdge {
        HalfEdge(self.0 ^ 1)
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub name: String,
    pub iota: usize,
    pub tau: usize,
    /// `[index at iota, index at tau]`
    pub index: [u64; 2],
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.iota == self.tau
    }
}

/// Input record for building a graph by vertex names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSpec {
    pub name: String,
    pub iota: String,
    pub tau: String,
    pub index_iota: u64,
    pub index_tau: u64,
}

impl EdgeSpec {
    pub fn new(name: &str, iota: &str, tau: &str, index_iota: u64, index_tau: u64) -> Self {
        EdgeSpec {
            name: name.to_string(),
            iota: iota.to_string(),
            tau: tau.to_string(),
            index_iota,
            index_tau,
        }
    }
}

/// A finite connected graph with a positive index on every half-edge.
///
/// Vertices and edges are stored in lexicographic order of their ids; all
/// indices into them refer to that canonical order. Values are immutable
/// once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphOfGroups {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    at_vertex: Vec<Vec<HalfEdge>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDegreeReport {
    pub degrees: BTreeMap<String, u64>,
}

impl GraphOfGroups {
    pub fn new(vertices: Vec<String>, edges: Vec<EdgeSpec>) -> Result<Self> {
        Self::build(vertices.into_iter().map(|v| (v, None)).collect(), edges.into_iter().map(|e| (e, None)).collect())
    }

    /// Shared constructor; the optional line numbers feed diagnostics of the
    /// `.gog` parser.
    fn build(vertices: Vec<(String, Option<usize>)>, edges: Vec<(EdgeSpec, Option<usize>)>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::semantic(None, "a graph of groups needs at least one vertex"));
        }
        let mut names = BTreeSet::new();
        for (v, line) in &vertices {
            if !names.insert(v.clone()) {
                return Err(Error::semantic(*line, format!("duplicate vertex id `{v}`")));
            }
        }
        let vertex_names: Vec<String> = names.into_iter().collect();
        let lookup: HashMap<&str, usize> = vertex_names
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();

        let mut seen_edges = BTreeSet::new();
        let mut built = Vec::with_capacity(edges.len());
        for (spec, line) in &edges {
            if !seen_edges.insert(spec.name.clone()) {
                return Err(Error::semantic(*line, format!("duplicate edge id `{}`", spec.name)));
            }
            let find = |name: &str| {
                lookup
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::semantic(*line, format!("unknown vertex `{name}`")))
            };
            let iota = find(&spec.iota)?;
            let tau = find(&spec.tau)?;
            for idx in [spec.index_iota, spec.index_tau] {
                if idx < 1 {
                    return Err(Error::semantic(
                        *line,
                        format!("index must be at least 1 on edge `{}`, got {idx}", spec.name),
                    ));
                }
            }
            built.push(Edge {
                name: spec.name.clone(),
                iota,
                tau,
                index: [spec.index_iota, spec.index_tau],
            });
        }
        built.sort_by(|a, b| a.name.cmp(&b.name));

        let mut at_vertex = vec![Vec::new(); vertex_names.len()];
        for (i, e) in built.iter().enumerate() {
            at_vertex[e.iota].push(HalfEdge::new(i, End::Iota));
            at_vertex[e.tau].push(HalfEdge::new(i, End::Tau));
        }
        for hs in &mut at_vertex {
            hs.sort();
        }

        let g = GraphOfGroups {
            vertices: vertex_names,
            edges: built,
            at_vertex,
        };
        if !g.is_connected() {
            return Err(Error::semantic(None, "the underlying graph is disconnected"));
        }
        Ok(g)
    }

    fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &h in &self.at_vertex[v] {
                let w = self.vertex_of(h.opposite());
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.binary_search_by(|v| v.as_str().cmp(name)).ok()
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edges.binary_search_by(|e| e.name.as_str().cmp(name)).ok()
    }

    /// All half-edges in canonical order.
    pub fn half_edges(&self) -> impl Iterator<Item = HalfEdge> + '_ {
        (0..self.edges.len()).flat_map(|e| [HalfEdge::new(e, End::Iota), HalfEdge::new(e, End::Tau)])
    }

    /// Half-edges incident to `v`; a loop contributes both of its ends.
    pub fn half_edges_at(&self, v: usize) -> &[HalfEdge] {
        &self.at_vertex[v]
    }

    pub fn vertex_of(&self, h: HalfEdge) -> usize {
        let e = &self.edges[h.edge()];
        match h.end() {
            End::Iota => e.iota,
            End::Tau => e.tau,
        }
    }

    pub fn index(&self, h: HalfEdge) -> u64 {
        let e = &self.edges[h.edge()];
        match h.end() {
            End::Iota => e.index[0],
            End::Tau => e.index[1],
        }
    }

    pub fn half_edge_name(&self, h: HalfEdge) -> String {
        format!("{}.{}", self.edges[h.edge()].name, h.end().as_str())
    }

    /// Parses `edge.iota` / `edge.tau`.
    pub fn parse_half_edge(&self, text: &str) -> Result<HalfEdge> {
        let (edge, end) = text
            .rsplit_once('.')
            .ok_or_else(|| Error::pre(format!("half-edge `{text}` must look like <edge>.<iota|tau>")))?;
        let end = match end {
            "iota" => End::Iota,
            "tau" => End::Tau,
            other => return Err(Error::pre(format!("unknown half-edge end `{other}`"))),
        };
        let e = self
            .edge_index(edge)
            .ok_or_else(|| Error::pre(format!("unknown edge `{edge}`")))?;
        Ok(HalfEdge::new(e, end))
    }

    /// Degree of any lift of `v` in the Bass–Serre tree.
    pub fn tree_degree(&self, v: usize) -> u64 {
        self.at_vertex[v].iter().map(|&h| self.index(h)).sum()
    }

    pub fn tree_degrees(&self) -> TreeDegreeReport {
        TreeDegreeReport {
            degrees: (0..self.vertex_count())
                .map(|v| (self.vertices[v].clone(), self.tree_degree(v)))
                .collect(),
        }
    }

    /// The augmented graph of groups: every vertex group is multiplied by
    /// `Z/3`, so every index triples.
    pub fn augment(&self) -> GraphOfGroups {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.index = [e.index[0] * 3, e.index[1] * 3];
        }
        g
    }

    /// Disjoint union of `self` and `other` joined by a new edge from `v` (in
    /// `self`) to `w` (in `other`).
    ///
    /// Ids of `self` get the prefix `a_`, ids of `other` the prefix `b_`; the
    /// new edge is called `e_vw`.
    pub fn glue(&self, v: &str, other: &GraphOfGroups, w: &str, idx_v: u64, idx_w: u64) -> Result<GraphOfGroups> {
        if self.vertex_index(v).is_none() {
            return Err(Error::UnknownVertex(v.to_string()));
        }
        if other.vertex_index(w).is_none() {
            return Err(Error::UnknownVertex(w.to_string()));
        }
        for idx in [idx_v, idx_w] {
            if idx < 1 {
                return Err(Error::InvalidIndex(idx));
            }
        }
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        for (prefix, g) in [("a_", self), ("b_", other)] {
            vertices.extend(g.vertices.iter().map(|n| format!("{prefix}{n}")));
            edges.extend(g.edges.iter().map(|e| EdgeSpec {
                name: format!("{prefix}{}", e.name),
                iota: format!("{prefix}{}", g.vertices[e.iota]),
                tau: format!("{prefix}{}", g.vertices[e.tau]),
                index_iota: e.index[0],
                index_tau: e.index[1],
            }));
        }
        edges.push(EdgeSpec {
            name: "e_vw".into(),
            iota: format!("a_{v}"),
            tau: format!("b_{w}"),
            index_iota: idx_v,
            index_tau: idx_w,
        });
        GraphOfGroups::new(vertices, edges)
    }

    /// Stable 64-bit fingerprint of the canonical serialization.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        GogFile::bare(self.clone()).serialize().hash(&mut h);
        h.finish()
    }
}

/// A parsed `.gog` file: the graph plus optional gate and order lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GogFile {
    pub graph: GraphOfGroups,
    /// Declared gates, sorted and deduplicated.
    pub gates: Option<Vec<HalfEdge>>,
    /// Explicit vertex order (vertex indices, lowest first).
    pub order: Option<Vec<usize>>,
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in body.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &body[s..i],
                    column: body[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &body[s..],
            column: body[..s].chars().count() + 1,
        });
    }
    out
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

impl GogFile {
    pub fn bare(graph: GraphOfGroups) -> Self {
        GogFile {
            graph,
            gates: None,
            order: None,
        }
    }

    pub fn parse(text: &str) -> Result<GogFile> {
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        let mut gate_lines: Vec<(String, usize, usize)> = Vec::new();
        let mut order_line: Option<(Vec<String>, usize)> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let toks = tokenize(raw);
            let Some(head) = toks.first() else { continue };
            let eol = raw.chars().count() + 1;
            let expect_ident = |i: usize, what: &str| -> Result<String> {
                match toks.get(i) {
                    Some(t) if is_ident(t.text) => Ok(t.text.to_string()),
                    Some(t) => Err(syntax(line, t.column, format!("expected {what}, found `{}`", t.text))),
                    None => Err(syntax(line, eol, format!("expected {what}"))),
                }
            };
            let expect_kw = |i: usize, kw: &str| -> Result<()> {
                match toks.get(i) {
                    Some(t) if t.text == kw => Ok(()),
                    Some(t) => Err(syntax(line, t.column, format!("expected `{kw}`, found `{}`", t.text))),
                    None => Err(syntax(line, eol, format!("expected `{kw}`"))),
                }
            };
            let expect_int = |i: usize| -> Result<u64> {
                match toks.get(i) {
                    Some(t) => {
                        let v: i64 = t
                            .text
                            .parse()
                            .map_err(|_| syntax(line, t.column, format!("expected integer, found `{}`", t.text)))?;
                        if v < 1 {
                            return Err(Error::semantic(Some(line), format!("index must be at least 1, got {v}")));
                        }
                        Ok(v as u64)
                    }
                    None => Err(syntax(line, eol, "expected integer")),
                }
            };
            let expect_end = |n: usize| -> Result<()> {
                match toks.get(n) {
                    Some(t) => Err(syntax(line, t.column, format!("unexpected trailing token `{}`", t.text))),
                    None => Ok(()),
                }
            };

            match head.text {
                "vertex" => {
                    let id = expect_ident(1, "vertex id")?;
                    expect_end(2)?;
                    vertices.push((id, Some(line)));
                }
                "edge" => {
                    let id = expect_ident(1, "edge id")?;
                    expect_kw(2, ":")?;
                    let a = expect_ident(3, "vertex id")?;
                    expect_kw(4, "->")?;
                    let b = expect_ident(5, "vertex id")?;
                    expect_kw(6, "index")?;
                    let i1 = expect_int(7)?;
                    let i2 = expect_int(8)?;
                    expect_end(9)?;
                    edges.push((
                        EdgeSpec {
                            name: id,
                            iota: a,
                            tau: b,
                            index_iota: i1,
                            index_tau: i2,
                        },
                        Some(line),
                    ));
                }
                "gate" => {
                    let t = toks.get(1).ok_or_else(|| syntax(line, eol, "expected <edge>.<iota|tau>"))?;
                    let ok = t
                        .text
                        .rsplit_once('.')
                        .is_some_and(|(e, end)| is_ident(e) && (end == "iota" || end == "tau"));
                    if !ok {
                        return Err(syntax(line, t.column, format!("expected <edge>.<iota|tau>, found `{}`", t.text)));
                    }
                    expect_end(2)?;
                    gate_lines.push((t.text.to_string(), line, t.column));
                }
                "order" => {
                    if order_line.is_some() {
                        return Err(Error::semantic(Some(line), "duplicate `order` line"));
                    }
                    let mut ids = Vec::new();
                    for t in &toks[1..] {
                        if !is_ident(t.text) {
                            return Err(syntax(line, t.column, format!("expected vertex id, found `{}`", t.text)));
                        }
                        ids.push(t.text.to_string());
                    }
                    order_line = Some((ids, line));
                }
                other => {
                    return Err(syntax(line, head.column, format!("unknown directive `{other}`")));
                }
            }
        }

        let graph = GraphOfGroups::build(vertices, edges)?;

        let gates = if gate_lines.is_empty() {
            None
        } else {
            let mut gs = BTreeSet::new();
            for (text, line, _col) in gate_lines {
                let h = graph
                    .parse_half_edge(&text)
                    .map_err(|_| Error::semantic(Some(line), format!("gate `{text}` refers to an unknown edge")))?;
                gs.insert(h);
            }
            Some(gs.into_iter().collect())
        };

        let order = match order_line {
            None => None,
            Some((ids, line)) => {
                let mut idx = Vec::new();
                let mut seen = BTreeSet::new();
                for id in &ids {
                    let v = graph
                        .vertex_index(id)
                        .ok_or_else(|| Error::semantic(Some(line), format!("unknown vertex `{id}`")))?;
                    if !seen.insert(v) {
                        return Err(Error::semantic(Some(line), format!("vertex `{id}` repeated in order")));
                    }
                    idx.push(v);
                }
                if idx.len() != graph.vertex_count() {
                    return Err(Error::semantic(Some(line), "`order` must list every vertex exactly once"));
                }
                Some(idx)
            }
        };

        Ok(GogFile { graph, gates, order })
    }

    /// Canonical text form: vertices, then edges (both sorted by id), then
    /// gates in canonical order, then the order line if present.
    pub fn serialize(&self) -> String {
        let g = &self.graph;
        let mut out = String::new();
        for v in g.vertices() {
            out.push_str(&format!("vertex {v}\n"));
        }
        for e in g.edges() {
            out.push_str(&format!(
                "edge {} : {} -> {} index {} {}\n",
                e.name,
                g.vertex_name(e.iota),
                g.vertex_name(e.tau),
                e.index[0],
                e.index[1]
            ));
        }
        if let Some(gates) = &self.gates {
            for &h in gates {
                out.push_str(&format!("gate {}\n", g.half_edge_name(h)));
            }
        }
        if let Some(order) = &self.order {
            let names: Vec<&str> = order.iter().map(|&v| g.vertex_name(v)).collect();
            out.push_str(&format!("order {}\n", names.join(" ")));
        }
        out
    }
}

/// Parses `.gog` text and returns the graph, ignoring gate and order lines.
pub fn parse_gog(text: &str) -> Result<GraphOfGroups> {
    GogFile::parse(text).map(|f| f.graph)
}

/// Canonical `.gog` text for a bare graph.
pub fn serialize_gog(g: &GraphOfGroups) -> String {
    GogFile::bare(g.clone()).serialize()
}

/// Named constructors for the standard example families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleFamily {
    /// Baumslag–Solitar `BS(n, m)`: HNN extension of `Z` identifying `nZ`
    /// with `mZ`.
    Bs(i64, i64),
    /// One vertex, one loop with indices `(a, b)`.
    Loop(u64, u64),
    /// Two vertices joined by one edge with indices `(a, b)`.
    Amalgam(u64, u64),
    /// `Z` as an HNN extension of the trivial group.
    ZLine,
}

impl ExampleFamily {
    pub fn build(self) -> Result<GraphOfGroups> {
        match self {
            ExampleFamily::Bs(n, m) => {
                if n == 0 || m == 0 {
                    return Err(Error::pre(
                        "BS(n, m) with n = 0 or m = 0 is virtually free and has no finite-index model here",
                    ));
                }
                ExampleFamily::Loop(n.unsigned_abs(), m.unsigned_abs()).build()
            }
            ExampleFamily::Loop(a, b) => {
                GraphOfGroups::new(vec!["v".into()], vec![EdgeSpec::new("e", "v", "v", a, b)])
            }
            ExampleFamily::Amalgam(a, b) => GraphOfGroups::new(
                vec!["v".into(), "w".into()],
                vec![EdgeSpec::new("e", "v", "w", a, b)],
            ),
            ExampleFamily::ZLine => ExampleFamily::Loop(1, 1).build(),
        }
    }

    /// Free-text provenance. Commensurability of vertex groups with a fixed
    /// group is not visible in index data and is only recorded here.
    pub fn note(self) -> &'static str {
        match self {
            ExampleFamily::Bs(..) => "vertex and edge groups infinite cyclic; commensurable with Z; acts faithfully on its Bass-Serre tree",
            ExampleFamily::Loop(..) => "HNN extension with the given indices; group data unspecified",
            ExampleFamily::Amalgam(..) => "amalgamated product shape A *_C B with the given indices; group data unspecified",
            ExampleFamily::ZLine => "Z as HNN extension of the trivial group; Bass-Serre tree is a bi-infinite line",
        }
    }
}

impl fmt::Display for ExampleFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExampleFamily::Bs(n, m) => write!(f, "bs({n},{m})"),
            ExampleFamily::Loop(a, b) => write!(f, "loop({a},{b})"),
            ExampleFamily::Amalgam(a, b) => write!(f, "amalgam({a},{b})"),
            ExampleFamily::ZLine => write!(f, "z_line"),
        }
    }
}

impl std::str::FromStr for ExampleFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "z_line" {
            return Ok(ExampleFamily::ZLine);
        }
        let bad = || Error::pre(format!("unknown example family `{s}`"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let nums: Vec<i64> = args
            .split(',')
            .map(|a| a.trim().parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if nums.len() != 2 {
            return Err(bad());
        }
        let (a, b) = (nums[0], nums[1]);
        let positive = |x: i64| {
            if x >= 1 {
                Ok(x as u64)
            } else {
                Err(Error::InvalidIndex(x.max(0) as u64))
            }
        };
        match name {
            "bs" => Ok(ExampleFamily::Bs(a, b)),
            "loop" => Ok(ExampleFamily::Loop(positive(a)?, positive(b)?)),
            "amalgam" => Ok(ExampleFamily::Amalgam(positive(a)?, positive(b)?)),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_loop() {
        let g = parse_gog("vertex v\nedge e : v -> v index 3 3").unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 1);
        let h1 = HalfEdge::new(0, End::Iota);
        assert_eq!(g.index(h1), 3);
        assert_eq!(g.index(h1.opposite()), 3);
        assert_eq!(g.half_edges_at(0), &[h1, h1.opposite()]);
    }

    #[test]
    fn parses_bs23() {
        let g = parse_gog("vertex v\nedge e : v -> v index 2 3").unwrap();
        assert_eq!(g, ExampleFamily::Bs(2, 3).build().unwrap());
        assert_eq!(g.edge(0).index, [2, 3]);
    }

    #[test]
    fn dangling_vertex_is_reported() {
        let err = parse_gog("vertex v\nedge e : v -> w index 2 3").unwrap_err();
        assert_eq!(
            err,
            Error::Semantic {
                line: Some(2),
                message: "unknown vertex `w`".into()
            }
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_gog("vertex v\nedge e : v => v index 1 1").unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                line: 2,
                column: 12,
                message: "expected `->`, found `=>`".into()
            }
        );
        let err = parse_gog("vertex v\nedge e : v -> v index 1").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, column: 24, .. }), "{err:?}");
        let err = parse_gog("  frob x").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, column: 3, .. }));
        let err = parse_gog("vertex v\nedge e : v -> v index x 1").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, column: 23, .. }));
    }

    #[test]
    fn semantic_errors() {
        assert!(matches!(
            parse_gog("vertex v\nvertex v"),
            Err(Error::Semantic { line: Some(2), .. })
        ));
        assert!(matches!(
            parse_gog("vertex v\nedge e : v -> v index 0 2"),
            Err(Error::Semantic { line: Some(2), .. })
        ));
        assert!(matches!(
            parse_gog("vertex v\nvertex w\nedge e : v -> v index 1 2"),
            Err(Error::Semantic { line: None, .. })
        ));
        assert!(matches!(
            parse_gog("vertex v\nedge e : v -> v index 1 2\nedge e : v -> v index 1 1"),
            Err(Error::Semantic { line: Some(3), .. })
        ));
        assert!(parse_gog("# nothing").is_err());
    }

    #[test]
    fn comments_gates_and_order() {
        let text = "# bs\nvertex w # trailing\nvertex v\nedge f : v -> w index 2 2\nedge e : v -> v index 2 3\ngate e.tau\ngate e.iota\norder w v\n";
        let f = GogFile::parse(text).unwrap();
        let g = &f.graph;
        assert_eq!(g.vertices(), &["v".to_string(), "w".to_string()]);
        assert_eq!(
            f.gates.as_deref().unwrap(),
            &[HalfEdge::new(0, End::Iota), HalfEdge::new(0, End::Tau)]
        );
        assert_eq!(f.order.as_deref().unwrap(), &[1, 0]);
        let again = GogFile::parse(&f.serialize()).unwrap();
        assert_eq!(again, f);
        assert_eq!(
            f.serialize(),
            "vertex v\nvertex w\nedge e : v -> v index 2 3\nedge f : v -> w index 2 2\ngate e.iota\ngate e.tau\norder w v\n"
        );
    }

    #[test]
    fn degrees() {
        let bs = ExampleFamily::Bs(2, 3).build().unwrap();
        assert_eq!(bs.tree_degrees().degrees["v"], 5);
        let am = ExampleFamily::Amalgam(3, 3).build().unwrap();
        let d = am.tree_degrees().degrees;
        assert_eq!((d["v"], d["w"]), (3, 3));
        assert_eq!(bs.augment().tree_degrees().degrees["v"], 15);
    }

    #[test]
    fn augmentation() {
        let bs = ExampleFamily::Bs(2, 3).build().unwrap();
        assert_eq!(bs.augment().edge(0).index, [6, 9]);
        let z = ExampleFamily::ZLine.build().unwrap();
        assert_eq!(z.augment().edge(0).index, [3, 3]);
        assert_eq!(bs.augment().augment().edge(0).index, [18, 27]);
    }

    #[test]
    fn gluing() {
        let bs = ExampleFamily::Bs(2, 3).build().unwrap();
        let g = bs.glue("v", &bs, "v", 2, 2).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.edge(g.edge_index("a_e").unwrap()).index, [2, 3]);
        assert_eq!(g.edge(g.edge_index("b_e").unwrap()).index, [2, 3]);
        assert_eq!(g.edge(g.edge_index("e_vw").unwrap()).index, [2, 2]);
        assert_eq!(bs.glue("v", &bs, "v", 0, 2).unwrap_err(), Error::InvalidIndex(0));
        assert_eq!(bs.glue("x", &bs, "v", 1, 2).unwrap_err(), Error::UnknownVertex("x".into()));
    }

    #[test]
    fn families() {
        assert_eq!("bs(2,3)".parse::<ExampleFamily>().unwrap(), ExampleFamily::Bs(2, 3));
        assert_eq!(ExampleFamily::ZLine.build().unwrap().edge(0).index, [1, 1]);
        assert_eq!(ExampleFamily::Bs(-2, 3).build().unwrap().edge(0).index, [2, 3]);
        assert!(ExampleFamily::Bs(0, 3).build().is_err());
        let am = ExampleFamily::Amalgam(3, 3).build().unwrap();
        assert_eq!((am.vertex_count(), am.edge_count()), (2, 1));
        assert!("amalgam(0,3)".parse::<ExampleFamily>().is_err());
    }

    fn arb_graph() -> impl Strategy<Value = GraphOfGroups> {
        (1usize..5, prop::collection::vec((0usize..5, 0usize..5, 1u64..6, 1u64..6), 0..7)).prop_map(|(n, raw)| {
            let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let mut edges: Vec<EdgeSpec> = (1..n)
                .map(|i| EdgeSpec::new(&format!("t{i}"), &format!("v{}", i - 1), &format!("v{i}"), 1 + i as u64 % 3, 2))
                .collect();
            for (j, (a, b, x, y)) in raw.into_iter().enumerate() {
                edges.push(EdgeSpec::new(&format!("x{j}"), &format!("v{}", a % n), &format!("v{}", b % n), x, y));
            }
            GraphOfGroups::new(vertices, edges).unwrap()
        })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(g in arb_graph()) {
            let text = serialize_gog(&g);
            let back = parse_gog(&text).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(serialize_gog(&back), text);
        }

        #[test]
        fn augment_triples_degrees(g in arb_graph()) {
            let a = g.augment();
            for v in 0..g.vertex_count() {
                prop_assert_eq!(a.tree_degree(v), 3 * g.tree_degree(v));
            }
        }

        #[test]
        fn glue_counts_edges(g1 in arb_graph(), g2 in arb_graph()) {
            let glued = g1.glue("v0", &g2, "v0", 2, 3).unwrap();
            prop_assert_eq!(glued.edge_count(), g1.edge_count() + g2.edge_count() + 1);
            prop_assert_eq!(glued.vertex_count(), g1.vertex_count() + g2.vertex_count());
        }
    }
}
