//! Gate systems on the quotient graph and the admissibility decision.
//!
//! A gate system is admissible when every ray in the Bass–Serre tree
//! eventually enters a vertex through a gate. The decision procedure works
//! on the *entry-state digraph*: one state per non-gate half-edge `s`
//! (a vertex entered through `s` that must be expanded), with an arc
//! `s -> opp(h)` for every half-edge `h` at the vertex of `s` whose opposite
//! is not a gate. Leaving through `h = s` itself needs a second lift, so that
//! arc exists only when `index(s) >= 2`. The system is admissible iff this
//! digraph is acyclic.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gog::{GraphOfGroups, HalfEdge};

/// A set of gate half-edges. Gate types `0..k` follow the canonical
/// half-edge order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GateSystem {
    gates: Vec<HalfEdge>,
}

impl GateSystem {
    pub fn new(g: &GraphOfGroups, gates: impl IntoIterator<Item = HalfEdge>) -> Result<Self> {
        let set: BTreeSet<HalfEdge> = gates.into_iter().collect();
        if let Some(h) = set.iter().find(|h| h.edge() >= g.edge_count()) {
            return Err(Error::pre(format!("gate {h:?} is not a half-edge of the graph")));
        }
        Ok(GateSystem {
            gates: set.into_iter().collect(),
        })
    }

    /// Parses a comma-separated list such as `e1.tau,e2.iota`.
    pub fn parse(g: &GraphOfGroups, text: &str) -> Result<Self> {
        let hs = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| g.parse_half_edge(s))
            .collect::<Result<Vec<_>>>()?;
        GateSystem::new(g, hs)
    }

    pub fn gates(&self) -> &[HalfEdge] {
        &self.gates
    }

    /// Number of gate types `k`.
    pub fn k(&self) -> usize {
        self.gates.len()
    }

    pub fn contains(&self, h: HalfEdge) -> bool {
        self.gates.binary_search(&h).is_ok()
    }

    /// Gate type of `h`, if `h` is a gate.
    pub fn type_of(&self, h: HalfEdge) -> Option<usize> {
        self.gates.binary_search(&h).ok()
    }

    pub fn names(&self, g: &GraphOfGroups) -> Vec<String> {
        self.gates.iter().map(|&h| g.half_edge_name(h)).collect()
    }
}

/// Gates at the higher endpoint of every non-loop edge and on both ends of
/// every loop.
///
/// `order` lists vertex indices lowest first; `None` means lexicographic.
pub fn default_gates(g: &GraphOfGroups, order: Option<&[usize]>) -> GateSystem {
    let rank: Vec<usize> = match order {
        Some(o) => {
            let mut r = vec![0; g.vertex_count()];
            for (pos, &v) in o.iter().enumerate() {
                r[v] = pos;
            }
            r
        }
        None => (0..g.vertex_count()).collect(),
    };
    let mut gates = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        let iota = HalfEdge::new(i, crate::gog::End::Iota);
        if e.is_loop() {
            gates.push(iota);
            gates.push(iota.opposite());
        } else if rank[e.tau] > rank[e.iota] {
            gates.push(iota.opposite());
        } else {
            gates.push(iota);
        }
    }
    GateSystem { gates }
}

/// Outgoing arcs of state `s` in the entry-state digraph.
pub fn transitions(g: &GraphOfGroups, gs: &GateSystem, s: HalfEdge) -> Vec<HalfEdge> {
    let v = g.vertex_of(s);
    g.half_edges_at(v)
        .iter()
        .filter(|&&h| !gs.contains(h.opposite()))
        .filter(|&&h| h != s || g.index(s) >= 2)
        .map(|&h| h.opposite())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Certificate {
    /// States listed so that every arc points forward.
    Admissible { order: Vec<HalfEdge> },
    /// A cycle of non-gate states; state `i + 1` follows state `i`.
    Inadmissible { cycle: Vec<HalfEdge> },
}

impl Certificate {
    pub fn is_admissible(&self) -> bool {
        matches!(self, Certificate::Admissible { .. })
    }
}

/// Decides admissibility by depth-first search for a cycle in the
/// entry-state digraph.
pub fn is_admissible(g: &GraphOfGroups, gs: &GateSystem) -> Certificate {
    let states: Vec<HalfEdge> = g.half_edges().filter(|&h| !gs.contains(h)).collect();
    let n = 2 * g.edge_count();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; n];
    let mut post = Vec::with_capacity(states.len());

    for &start in &states {
        if color[start.raw() as usize] != 0 {
            continue;
        }
        let mut stack: Vec<(HalfEdge, Vec<HalfEdge>, usize)> = vec![(start, transitions(g, gs, start), 0)];
        color[start.raw() as usize] = 1;
        while let Some((s, succ, i)) = stack.last_mut() {
            if *i < succ.len() {
                let t = succ[*i];
                *i += 1;
                match color[t.raw() as usize] {
                    0 => {
                        color[t.raw() as usize] = 1;
                        let ts = transitions(g, gs, t);
                        stack.push((t, ts, 0));
                    }
                    1 => {
                        let pos = stack.iter().position(|(u, _, _)| *u == t).unwrap_or(0);
                        let cycle = stack[pos..].iter().map(|(u, _, _)| *u).collect();
                        return Certificate::Inadmissible { cycle };
                    }
                    _ => {}
                }
            } else {
                color[s.raw() as usize] = 2;
                post.push(*s);
                stack.pop();
            }
        }
    }
    post.reverse();
    Certificate::Admissible { order: post }
}

/// Replays a witness cycle and checks that it is a closed walk of non-gate
/// states under the transition rule.
pub fn validate_witness(g: &GraphOfGroups, gs: &GateSystem, cycle: &[HalfEdge]) -> Result<()> {
    if cycle.is_empty() {
        return Err(Error::Invariant("empty witness cycle".into()));
    }
    for (i, &s) in cycle.iter().enumerate() {
        if gs.contains(s) {
            return Err(Error::Invariant(format!("witness enters through gate {}", g.half_edge_name(s))));
        }
        let next = cycle[(i + 1) % cycle.len()];
        if !transitions(g, gs, s).contains(&next) {
            return Err(Error::Invariant(format!(
                "witness step {} -> {} is not a transition",
                g.half_edge_name(s),
                g.half_edge_name(next)
            )));
        }
    }
    Ok(())
}

/// Expands an inadmissible witness into one period of a tree ray, as
/// alternating `[exit, enter, exit, enter, ...]` half-edges.
pub fn escape_ray(g: &GraphOfGroups, gs: &GateSystem, cert: &Certificate) -> Result<Vec<HalfEdge>> {
    let Certificate::Inadmissible { cycle } = cert else {
        return Err(Error::pre("escape_ray needs an inadmissible certificate"));
    };
    validate_witness(g, gs, cycle)?;
    let n = cycle.len();
    Ok((0..n)
        .flat_map(|i| {
            let enter = cycle[(i + 1) % n];
            [enter.opposite(), enter]
        })
        .collect())
}
