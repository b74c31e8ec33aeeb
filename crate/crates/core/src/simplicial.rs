//! Finite abstract simplicial complexes, integer homology and the
//! pseudosimplex connectivity checker.
//!
//! Vertices are `0..n`. Faces are stored explicitly by dimension, which keeps
//! membership queries cheap for the desk-scale complexes handled here.
//!
//! Connectivity is only ever certified homologically: `H_0 = Z` plus
//! `H_i = 0` for `1 <= i <= b` is necessary for `b`-connectedness but not
//! sufficient, since simple connectivity is not decidable from homology.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Default cap on the total number of faces of a complex.
pub const FACE_CAP: usize = 5_000_000;

/// Caveat attached to every homological connectivity statement.
pub const CONNECTIVITY_CAVEAT: &str =
    "connectivity is checked homologically (H_0 = Z and vanishing H_i); this is necessary for m-connectedness, not sufficient";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialComplex {
    n: usize,
    /// `faces[d]` holds the sorted `(d+1)`-element faces.
    faces: Vec<BTreeSet<Vec<u32>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyReport {
    pub betti: Vec<u64>,
    /// Invariant factors greater than 1 of `H_d`, per dimension.
    pub torsion: Vec<Vec<u64>>,
    /// `false` when integer elimination overflowed and ranks were computed
    /// modulo primes instead.
    pub torsion_known: bool,
}

impl HomologyReport {
    pub fn connected(&self) -> bool {
        self.betti.first() == Some(&1)
    }

    /// Largest `b` such that the report is consistent with
    /// `b`-connectedness; `-2` for the empty complex.
    pub fn homological_connectivity(&self) -> i64 {
        if self.betti.is_empty() || self.betti[0] == 0 {
            return -2;
        }
        if self.betti[0] > 1 {
            return -1;
        }
        let mut b = 0;
        for d in 1..self.betti.len() {
            if self.betti[d] != 0 || !self.torsion[d].is_empty() {
                break;
            }
            b = d as i64;
        }
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlagCheck {
    pub holds: bool,
    /// A violating pair `(rho, tau)`: vertex-wise joinable, not m-joinable.
    pub counterexample: Option<(Vec<u32>, Vec<u32>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaOutcome {
    /// `min(floor(l / k) - 1, m - 1)` when every hypothesis holds.
    pub bound: Option<i64>,
    pub dimension: i64,
    pub failure: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityProfile {
    /// Probability of each edge.
    pub edge: f64,
    /// Probability of filling a clique whose facets are all present.
    pub fill: f64,
    /// Size of a planted full simplex.
    pub plant: usize,
}

impl DensityProfile {
    pub fn uniform(density: f64) -> Self {
        DensityProfile {
            edge: density,
            fill: density,
            plant: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomComplex {
    pub complex: SimplicialComplex,
    pub planted: Vec<u32>,
}

/// Calls `f` on every `size`-subset of `items` (in lexicographic order of
/// positions); stops early and returns `false` as soon as `f` does.
pub fn all_subsets<T: Copy>(items: &[T], size: usize, mut f: impl FnMut(&[T]) -> bool) -> bool {
    fn rec<T: Copy>(items: &[T], size: usize, from: usize, cur: &mut Vec<T>, f: &mut impl FnMut(&[T]) -> bool) -> bool {
        if cur.len() == size {
            return f(cur);
        }
        let need = size - cur.len();
        for i in from..items.len() {
            if items.len() - i < need {
                break;
            }
            cur.push(items[i]);
            let ok = rec(items, size, i + 1, cur, f);
            cur.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    if size > items.len() {
        return true;
    }
    rec(items, size, 0, &mut Vec::with_capacity(size), &mut f)
}

fn sorted(v: &[u32]) -> Vec<u32> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

impl SimplicialComplex {
    /// Downward closure of `maximal` on vertices `0..n`; every vertex is a
    /// face even if no listed face contains it.
    pub fn from_maximal(n: usize, maximal: &[Vec<u32>]) -> Result<Self> {
        Self::from_maximal_capped(n, maximal, FACE_CAP)
    }

    pub fn from_maximal_capped(n: usize, maximal: &[Vec<u32>], cap: usize) -> Result<Self> {
        let mut faces: Vec<BTreeSet<Vec<u32>>> = Vec::new();
        let mut total = 0usize;
        let mut add = |faces: &mut Vec<BTreeSet<Vec<u32>>>, f: Vec<u32>| -> Result<bool> {
            let d = f.len() - 1;
            while faces.len() <= d {
                faces.push(BTreeSet::new());
            }
            if faces[d].insert(f) {
                total += 1;
                if total > cap {
                    return Err(Error::cap("simplicial complex faces", cap));
                }
                return Ok(true);
            }
            Ok(false)
        };
        for v in 0..n as u32 {
            add(&mut faces, vec![v])?;
        }
        for m in maximal {
            let m = sorted(m);
            if m.is_empty() {
                continue;
            }
            if let Some(&v) = m.iter().find(|&&v| v as usize >= n) {
                return Err(Error::pre(format!("face uses vertex {v} outside 0..{n}")));
            }
            if m.len() > 1 && faces.get(m.len() - 1).is_some_and(|s| s.contains(&m)) {
                continue;
            }
            // every nonempty subset, peeling one vertex at a time
            let mut stack = vec![m];
            while let Some(f) = stack.pop() {
                if !add(&mut faces, f.clone())? || f.len() == 1 {
                    continue;
                }
                for i in 0..f.len() {
                    let mut g = f.clone();
                    g.remove(i);
                    if !faces[g.len() - 1].contains(&g) {
                        stack.push(g);
                    }
                }
            }
        }
        Ok(SimplicialComplex { n, faces })
    }

    /// Builds a complex from an explicit face list that must already be
    /// closed under taking facets.
    pub fn from_closed_faces(n: usize, faces: impl IntoIterator<Item = Vec<u32>>) -> Result<Self> {
        let mut layers: Vec<BTreeSet<Vec<u32>>> = vec![(0..n as u32).map(|v| vec![v]).collect()];
        for f in faces {
            let f = sorted(&f);
            if f.is_empty() {
                continue;
            }
            if f.iter().any(|&v| v as usize >= n) {
                return Err(Error::pre(format!("face {f:?} uses a vertex outside 0..{n}")));
            }
            while layers.len() < f.len() {
                layers.push(BTreeSet::new());
            }
            layers[f.len() - 1].insert(f);
        }
        for d in 1..layers.len() {
            for f in &layers[d] {
                for (g, _) in boundary(f) {
                    if !layers[d - 1].contains(&g) {
                        return Err(Error::Invariant(format!("face {f:?} is present but its facet {g:?} is not")));
                    }
                }
            }
        }
        while layers.len() > 1 && layers.last().is_some_and(BTreeSet::is_empty) {
            layers.pop();
        }
        Ok(SimplicialComplex { n, faces: layers })
    }

    pub fn full_simplex(n: usize) -> Self {
        let all: Vec<u32> = (0..n as u32).collect();
        Self::from_maximal(n, &[all]).expect("full simplex within cap")
    }

    /// Boundary of the simplex on `n` vertices (a sphere of dimension `n - 2`).
    pub fn simplex_boundary(n: usize) -> Self {
        let all: Vec<u32> = (0..n as u32).collect();
        let facets: Vec<Vec<u32>> = (0..n)
            .map(|i| all.iter().copied().filter(|&v| v as usize != i).collect())
            .collect();
        Self::from_maximal(n, &facets).expect("sphere within cap")
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Dimension, `-1` for the empty complex.
    pub fn dim(&self) -> i64 {
        self.faces.iter().rposition(|s| !s.is_empty()).map_or(-1, |d| d as i64)
    }

    pub fn faces(&self, d: usize) -> impl Iterator<Item = &Vec<u32>> {
        self.faces.get(d).into_iter().flatten()
    }

    pub fn f_vector(&self) -> Vec<usize> {
        let d = self.dim();
        (0..=d.max(-1)).map(|i| self.faces[i as usize].len()).collect()
    }

    pub fn face_count(&self) -> usize {
        self.faces.iter().map(BTreeSet::len).sum()
    }

    /// Membership; the empty set counts as a face.
    pub fn contains(&self, face: &[u32]) -> bool {
        let f = sorted(face);
        if f.is_empty() {
            return true;
        }
        self.faces.get(f.len() - 1).is_some_and(|s| s.contains(&f))
    }

    fn contains_sorted(&self, f: &[u32]) -> bool {
        f.is_empty() || self.faces.get(f.len() - 1).is_some_and(|s| s.contains(f))
    }

    pub fn maximal_faces(&self) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for (d, layer) in self.faces.iter().enumerate() {
            let above = self.faces.get(d + 1);
            for f in layer {
                let covered = above.is_some_and(|up| {
                    (0..self.n as u32).any(|v| {
                        if f.binary_search(&v).is_ok() {
                            return false;
                        }
                        let mut g = f.clone();
                        let pos = g.binary_search(&v).unwrap_err();
                        g.insert(pos, v);
                        up.contains(&g)
                    })
                });
                if !covered {
                    out.push(f.clone());
                }
            }
        }
        out.sort();
        out
    }

    /// JSON list of maximal faces.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.maximal_faces()).expect("serializable")
    }

    /// Parses a JSON list of faces; vertices are `0..=max id`.
    pub fn from_json(text: &str) -> Result<Self> {
        let faces: Vec<Vec<u32>> =
            serde_json::from_str(text).map_err(|e| Error::pre(format!("complex JSON: {e}")))?;
        let n = faces.iter().flatten().max().map_or(0, |&m| m as usize + 1);
        Self::from_maximal(n, &faces)
    }

    fn faces_vec(&self, d: usize) -> Vec<Vec<u32>> {
        self.faces(d).cloned().collect()
    }

    /// Homology with integer coefficients in dimensions `0..=max_dim`
    /// (capped at the complex dimension).
    pub fn homology(&self, max_dim: Option<usize>) -> Result<HomologyReport> {
        let top = self.dim();
        if top < 0 {
            return Ok(HomologyReport {
                betti: vec![],
                torsion: vec![],
                torsion_known: true,
            });
        }
        let top = top as usize;
        let upto = max_dim.map_or(top, |m| m.min(top));
        self.check_boundary_squares(upto + 1)?;

        // rank and invariant factors of d_q : C_q -> C_{q-1} for q = 1..=upto+1
        let qs: Vec<usize> = (1..=(upto + 1).min(top)).collect();
        let results = par::map(&qs, |&q| self.boundary_smith(q));
        let mut rank = vec![0usize; upto + 3];
        let mut factors: Vec<Vec<u64>> = vec![vec![]; upto + 3];
        let mut known = true;
        for (&q, r) in qs.iter().zip(results) {
            let s = r?;
            rank[q] = s.rank;
            factors[q] = s.factors;
            known &= s.known;
        }
        let mut betti = Vec::new();
        let mut torsion = Vec::new();
        for q in 0..=upto {
            let f = self.faces[q].len();
            betti.push((f - rank[q] - rank[q + 1]) as u64);
            torsion.push(factors[q + 1].clone());
        }
        Ok(HomologyReport {
            betti,
            torsion,
            torsion_known: known,
        })
    }

    /// Checks `d_{q-1} d_q = 0` for `q <= upto` by expanding boundaries.
    fn check_boundary_squares(&self, upto: usize) -> Result<()> {
        for q in 2..=upto.min(self.faces.len().saturating_sub(1)) {
            for f in &self.faces[q] {
                let mut acc: HashMap<Vec<u32>, i64> = HashMap::new();
                for (g, s) in boundary(f) {
                    if !self.contains_sorted(&g) {
                        return Err(Error::Invariant("complex is not closed under faces".into()));
                    }
                    for (h, t) in boundary(&g) {
                        *acc.entry(h).or_insert(0) += s * t;
                    }
                }
                if acc.values().any(|&v| v != 0) {
                    return Err(Error::Invariant("boundary of a boundary is nonzero".into()));
                }
            }
        }
        Ok(())
    }

    fn boundary_smith(&self, q: usize) -> Result<Smith> {
        let rows = self.faces_vec(q - 1);
        let index: HashMap<&Vec<u32>, u32> = rows.iter().enumerate().map(|(i, f)| (f, i as u32)).collect();
        if q == 1 {
            // Incidence matrix of a graph: rank n - components, no torsion.
            let mut uf: Vec<u32> = (0..rows.len() as u32).collect();
            fn find(uf: &mut [u32], mut x: u32) -> u32 {
                while uf[x as usize] != x {
                    uf[x as usize] = uf[uf[x as usize] as usize];
                    x = uf[x as usize];
                }
                x
            }
            let mut rank = 0;
            for e in self.faces(1) {
                let a = find(&mut uf, index[&vec![e[0]]]);
                let b = find(&mut uf, index[&vec![e[1]]]);
                if a != b {
                    uf[a as usize] = b;
                    rank += 1;
                }
            }
            return Ok(Smith {
                rank,
                factors: vec![],
                known: true,
            });
        }
        let cols: Vec<Vec<(u32, i64)>> = self
            .faces(q)
            .map(|f| {
                let mut c: Vec<(u32, i64)> = boundary(f).into_iter().map(|(g, s)| (index[&g], s)).collect();
                c.sort_unstable();
                c
            })
            .collect();
        Ok(smith(rows.len(), cols))
    }

    pub fn is_m_pseudosimplex(&self, sigma: &[u32], m: usize) -> bool {
        let s = sorted(sigma);
        if s.iter().any(|&v| v as usize >= self.n) {
            return false;
        }
        let size = (m + 1).min(s.len());
        all_subsets(&s, size, |sub| self.contains_sorted(sub))
    }

    pub fn m_joinable(&self, sigma: &[u32], tau: &[u32], m: usize) -> bool {
        let u: Vec<u32> = sigma.iter().chain(tau).copied().collect();
        self.is_m_pseudosimplex(&u, m)
    }

    fn joined(&self, a: u32, b: u32) -> bool {
        a == b || self.contains_sorted(&[a.min(b), a.max(b)])
    }

    /// Whether every m-pseudosimplex `rho` and pseudoface `tau` of `sigma`
    /// that are vertex-wise joinable are m-joinable.
    ///
    /// Only subsets of at most `m + 1` vertices of `rho ∪ tau` matter, so
    /// it suffices to test faces `A` with `|A| <= m` against subsets `B` of
    /// `sigma \ A` with `|A ∪ B| <= m + 1`.
    pub fn is_m_flag_wrt(&self, sigma: &[u32], m: usize) -> FlagCheck {
        let s = sorted(sigma);
        for d in 0..m.min(self.faces.len()) {
            for a in &self.faces[d] {
                let cand: Vec<u32> = s
                    .iter()
                    .copied()
                    .filter(|w| a.binary_search(w).is_err() && a.iter().all(|&x| self.joined(x, *w)))
                    .collect();
                for size in 1..=(m + 1 - a.len()) {
                    let mut bad = None;
                    all_subsets(&cand, size, |b| {
                        let u = sorted(&[a.as_slice(), b].concat());
                        if self.contains_sorted(&u) {
                            true
                        } else {
                            bad = Some(b.to_vec());
                            false
                        }
                    });
                    if let Some(b) = bad {
                        return FlagCheck {
                            holds: false,
                            counterexample: Some((a.clone(), b)),
                        };
                    }
                }
            }
        }
        FlagCheck {
            holds: true,
            counterexample: None,
        }
    }

    /// A pseudoface of `sigma` with `size` vertices that is m-joinable to
    /// `v`, if one exists.
    pub fn joinable_pseudoface(&self, v: u32, sigma: &[u32], size: usize, m: usize) -> Option<Vec<u32>> {
        let cand: Vec<u32> = sorted(sigma).into_iter().filter(|&w| self.joined(v, w)).collect();
        let mut cur: Vec<u32> = Vec::with_capacity(size);
        fn rec(cx: &SimplicialComplex, v: u32, cand: &[u32], from: usize, size: usize, m: usize, cur: &mut Vec<u32>) -> bool {
            if cur.len() == size {
                return true;
            }
            for i in from..cand.len() {
                if cand.len() - i < size - cur.len() {
                    break;
                }
                let w = cand[i];
                // new subsets of cur ∪ {v, w} that contain w
                let mut others: Vec<u32> = cur.clone();
                if !others.contains(&v) {
                    others.push(v);
                }
                others.retain(|&x| x != w);
                let ok = (0..=m.min(others.len())).all(|s| {
                    all_subsets(&others, s, |sub| {
                        let mut f = sub.to_vec();
                        f.push(w);
                        cx.contains(&f)
                    })
                });
                if ok {
                    cur.push(w);
                    if rec(cx, v, cand, i + 1, size, m, cur) {
                        return true;
                    }
                    cur.pop();
                }
            }
            false
        }
        rec(self, v, &cand, 0, size, m, &mut cur).then_some(cur)
    }

    /// Verifies the hypotheses of the pseudosimplex connectivity lemma and
    /// returns its bound `min(floor(l / k) - 1, m - 1)`.
    pub fn lemma_connectivity_bound(&self, sigma: &[u32], m: usize, k: usize) -> LemmaOutcome {
        let s = sorted(sigma);
        let l = s.len() as i64 - 1;
        let fail = |msg: String| LemmaOutcome {
            bound: None,
            dimension: l,
            failure: Some(msg),
        };
        if k == 0 {
            return fail("k must be at least 1".into());
        }
        if s.is_empty() {
            return fail("sigma is empty".into());
        }
        if let Some(&v) = s.iter().find(|&&v| v as usize >= self.n) {
            return fail(format!("sigma vertex {v} is not in the complex"));
        }
        if !self.is_m_pseudosimplex(&s, m) {
            return fail(format!("sigma is not a {m}-pseudosimplex"));
        }
        let flag = self.is_m_flag_wrt(&s, m);
        if let Some((a, b)) = flag.counterexample {
            return fail(format!(
                "not {m}-flag with respect to sigma: {a:?} and {b:?} are vertex-wise joinable but not {m}-joinable"
            ));
        }
        let size = (l - k as i64 + 1).max(0) as usize;
        let vs: Vec<u32> = (0..self.n as u32).collect();
        let found = par::map(&vs, |&v| self.joinable_pseudoface(v, &s, size, m).is_some());
        if let Some(v) = vs.iter().zip(&found).find(|(_, ok)| !**ok).map(|(v, _)| *v) {
            return fail(format!(
                "vertex {v} is not {m}-joinable to any ({}-dimensional) pseudoface of sigma",
                l - k as i64
            ));
        }
        LemmaOutcome {
            bound: Some((l / k as i64 - 1).min(m as i64 - 1)),
            dimension: l,
            failure: None,
        }
    }
}

/// Signed facets of a sorted face.
fn boundary(f: &[u32]) -> Vec<(Vec<u32>, i64)> {
    (0..f.len())
        .map(|i| {
            let mut g = f.to_vec();
            g.remove(i);
            (g, if i % 2 == 0 { 1 } else { -1 })
        })
        .collect()
}

struct Smith {
    rank: usize,
    /// Invariant factors greater than 1.
    factors: Vec<u64>,
    known: bool,
}

/// Rank and invariant factors of a sparse integer matrix given by columns.
///
/// Unit pivots are eliminated sparsely first; the remaining block goes
/// through a dense Smith normal form in checked `i128`. On overflow the rank
/// is taken modulo two large primes and torsion is reported unknown.
fn smith(nrows: usize, cols: Vec<Vec<(u32, i64)>>) -> Smith {
    let mut cols: Vec<BTreeMap<u32, i64>> = cols.into_iter().map(|c| c.into_iter().collect()).collect();
    let mut rows: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); nrows];
    for (j, c) in cols.iter().enumerate() {
        for &r in c.keys() {
            rows[r as usize].insert(j as u32);
        }
    }
    let original = cols.clone();
    let mut rank = 0;
    let mut overflow = false;
    'passes: loop {
        let mut progress = false;
        for j in 0..cols.len() {
            let Some((&r, &v)) = cols[j].iter().find(|(_, v)| v.abs() == 1) else {
                continue;
            };
            let pivot = cols[j].clone();
            let others: Vec<u32> = rows[r as usize].iter().copied().filter(|&o| o as usize != j).collect();
            for o in others {
                let f = cols[o as usize][&r] * v;
                for (&x, &a) in &pivot {
                    let Some(delta) = f.checked_mul(a) else {
                        overflow = true;
                        break 'passes;
                    };
                    let entry = cols[o as usize].entry(x).or_insert(0);
                    let Some(nv) = entry.checked_sub(delta) else {
                        overflow = true;
                        break 'passes;
                    };
                    *entry = nv;
                    if nv == 0 {
                        cols[o as usize].remove(&x);
                        rows[x as usize].remove(&o);
                    } else {
                        rows[x as usize].insert(o);
                    }
                }
            }
            for &x in pivot.keys() {
                rows[x as usize].remove(&(j as u32));
            }
            cols[j].clear();
            rank += 1;
            progress = true;
        }
        if !progress {
            break;
        }
    }
    if overflow {
        return Smith {
            rank: rank_mod_primes(nrows, &original),
            factors: vec![],
            known: false,
        };
    }
    let live_cols: Vec<usize> = (0..cols.len()).filter(|&j| !cols[j].is_empty()).collect();
    if live_cols.is_empty() {
        return Smith {
            rank,
            factors: vec![],
            known: true,
        };
    }
    let live_rows: Vec<u32> = live_cols
        .iter()
        .flat_map(|&j| cols[j].keys().copied())
        .collect::<BTreeSet<u32>>()
        .into_iter()
        .collect();
    let rpos: HashMap<u32, usize> = live_rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let mut dense = vec![vec![0i128; live_cols.len()]; live_rows.len()];
    for (cj, &j) in live_cols.iter().enumerate() {
        for (&r, &v) in &cols[j] {
            dense[rpos[&r]][cj] = v as i128;
        }
    }
    match dense_smith(dense) {
        Some(diag) => Smith {
            rank: rank + diag.len(),
            factors: diag.into_iter().filter(|&d| d > 1).map(|d| d as u64).collect(),
            known: true,
        },
        None => Smith {
            rank: rank_mod_primes(nrows, &original),
            factors: vec![],
            known: false,
        },
    }
}

/// Nonzero diagonal of the Smith normal form (absolute values), or `None`
/// on `i128` overflow.
fn dense_smith(mut a: Vec<Vec<i128>>) -> Option<Vec<i128>> {
    let nr = a.len();
    let nc = if nr == 0 { 0 } else { a[0].len() };
    let mut diag = Vec::new();
    let mut t = 0;
    while t < nr.min(nc) {
        loop {
            // smallest nonzero entry of the remaining block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..nr {
                for j in t..nc {
                    if a[i][j] != 0 && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return Some(diag);
            };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            let p = a[t][t];
            let mut clean = true;
            for i in t + 1..nr {
                if a[i][t] != 0 {
                    let q = a[i][t] / p;
                    for j in t..nc {
                        a[i][j] = a[i][j].checked_sub(q.checked_mul(a[t][j])?)?;
                    }
                    clean &= a[i][t] == 0;
                }
            }
            for j in t + 1..nc {
                if a[t][j] != 0 {
                    let q = a[t][j] / p;
                    for row in a.iter_mut().take(nr).skip(t) {
                        row[j] = row[j].checked_sub(q.checked_mul(row[t])?)?;
                    }
                    clean &= a[t][j] == 0;
                }
            }
            if !clean {
                continue;
            }
            // divisibility of the rest by the pivot
            let bad = (t + 1..nr).find(|&i| (t + 1..nc).any(|j| a[i][j] % p != 0));
            if let Some(i) = bad {
                for j in t..nc {
                    a[t][j] = a[t][j].checked_add(a[i][j])?;
                }
                continue;
            }
            diag.push(p.abs());
            break;
        }
        t += 1;
    }
    Some(diag)
}

fn rank_mod_primes(nrows: usize, cols: &[BTreeMap<u32, i64>]) -> usize {
    [2_147_483_647u64, 2_147_483_629u64]
        .iter()
        .map(|&p| rank_mod(nrows, cols, p))
        .max()
        .unwrap_or(0)
}

fn rank_mod(nrows: usize, cols: &[BTreeMap<u32, i64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = cols
        .iter()
        .map(|c| {
            let mut v = vec![0u64; nrows];
            for (&r, &x) in c {
                v[r as usize] = x.rem_euclid(p as i64) as u64;
            }
            v
        })
        .collect();
    let inv = |a: u64| -> u64 {
        let (mut r, mut b, mut e) = (1u64, a, p - 2);
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % p;
            }
            b = b * b % p;
            e >>= 1;
        }
        r
    };
    let mut rank = 0;
    for row in 0..nrows {
        let Some(pc) = (rank..m.len()).find(|&c| m[c][row] != 0) else {
            continue;
        };
        m.swap(rank, pc);
        let iv = inv(m[rank][row]);
        for c in 0..m.len() {
            if c != rank && m[c][row] != 0 {
                let f = m[c][row] * iv % p;
                for r in row..nrows {
                    let sub = f * m[rank][r] % p;
                    m[c][r] = (m[c][r] + p - sub) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Seeded random complex with a planted full simplex.
///
/// Edges appear independently with probability `edge`; a clique of size
/// three or more whose facets are all present is filled with probability
/// `fill`. The planted vertices always span a full simplex.
pub fn random_complex(seed: u64, n: usize, profile: &DensityProfile) -> Result<RandomComplex> {
    if !(0.0..=1.0).contains(&profile.edge) || !(0.0..=1.0).contains(&profile.fill) {
        return Err(Error::pre("densities must lie in [0, 1]"));
    }
    if profile.plant > n {
        return Err(Error::pre("planted simplex larger than the vertex set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planted: Vec<u32> = sample(&mut rng, n, profile.plant).into_iter().map(|i| i as u32).collect();
    planted.sort_unstable();
    let is_planted = |f: &[u32]| f.iter().all(|v| planted.binary_search(v).is_ok());

    let mut layers: Vec<BTreeSet<Vec<u32>>> = vec![(0..n as u32).map(|v| vec![v]).collect()];
    loop {
        let prev = layers.last().expect("nonempty");
        let mut next = BTreeSet::new();
        for f in prev {
            let last = *f.last().expect("nonempty face");
            for w in last + 1..n as u32 {
                let mut g = f.clone();
                g.push(w);
                let facets_ok = (0..g.len() - 1).all(|i| {
                    let mut h = g.clone();
                    h.remove(i);
                    prev.contains(&h)
                });
                if !facets_ok {
                    continue;
                }
                let p = if g.len() == 2 { profile.edge } else { profile.fill };
                let coin = rng.gen::<f64>() < p;
                if coin || is_planted(&g) {
                    next.insert(g);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layers.push(next);
    }
    let maximal: Vec<Vec<u32>> = layers.into_iter().flatten().collect();
    Ok(RandomComplex {
        complex: SimplicialComplex::from_maximal(n, &maximal)?,
        planted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hollow_triangle() -> SimplicialComplex {
        SimplicialComplex::from_maximal(3, &[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap()
    }

    #[test]
    fn homology_examples() {
        assert_eq!(hollow_triangle().homology(None).unwrap().betti, vec![1, 1]);
        assert_eq!(SimplicialComplex::simplex_boundary(4).homology(None).unwrap().betti, vec![1, 0, 1]);
        assert_eq!(SimplicialComplex::from_maximal(2, &[]).unwrap().homology(None).unwrap().betti, vec![2]);
        assert_eq!(SimplicialComplex::full_simplex(5).homology(None).unwrap().betti, vec![1, 0, 0, 0, 0]);
        assert!(SimplicialComplex::from_maximal(0, &[]).unwrap().homology(None).unwrap().betti.is_empty());
    }

    #[test]
    fn projective_plane_torsion() {
        // Six-vertex triangulation of RP^2.
        let faces = vec![
            vec![0, 1, 2],
            vec![0, 2, 3],
            vec![0, 3, 4],
            vec![0, 4, 5],
            vec![0, 1, 5],
            vec![1, 2, 4],
            vec![2, 3, 5],
            vec![1, 3, 4],
            vec![1, 3, 5],
            vec![2, 4, 5],
        ];
        let rp2 = SimplicialComplex::from_maximal(6, &faces).unwrap();
        let h = rp2.homology(None).unwrap();
        assert_eq!(h.betti, vec![1, 0, 0]);
        assert_eq!(h.torsion[1], vec![2]);
        assert!(h.torsion_known);
    }

    #[test]
    fn dense_smith_small() {
        assert_eq!(dense_smith(vec![vec![2, 4], vec![6, 8]]).unwrap(), vec![2, 4]);
        assert_eq!(dense_smith(vec![vec![2, 0], vec![0, 3]]).unwrap(), vec![1, 6]);
    }

    #[test]
    fn pseudosimplices() {
        let t = hollow_triangle();
        assert!(t.is_m_pseudosimplex(&[0, 1, 2], 1));
        assert!(!t.is_m_pseudosimplex(&[0, 1, 2], 2));
        assert!(t.is_m_pseudosimplex(&[2], 7));
        let square = SimplicialComplex::from_maximal(4, &[vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]]).unwrap();
        assert!(!square.m_joinable(&[0, 1], &[2, 3], 1));
        let full = SimplicialComplex::full_simplex(4);
        assert!(full.m_joinable(&[0, 1], &[2, 3], 2));
        assert!(t.m_joinable(&[0, 1], &[0, 1], 1));
    }

    /// Literal reading of the m-flag definition: every m-pseudosimplex rho
    /// with at most m + 2 vertices against every pseudoface tau of sigma.
    fn flag_oracle(cx: &SimplicialComplex, sigma: &[u32], m: usize) -> bool {
        let n = cx.vertex_count() as u32;
        let verts: Vec<u32> = (0..n).collect();
        let s = sorted(sigma);
        let mut taus = vec![];
        for mask in 0u32..(1 << s.len()) {
            taus.push(s.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect::<Vec<u32>>());
        }
        for size in 1..=(m + 2).min(n as usize) {
            let ok = all_subsets(&verts, size, |rho| {
                if !cx.is_m_pseudosimplex(rho, m) {
                    return true;
                }
                taus.iter().all(|tau| {
                    let vw = rho.iter().all(|&a| tau.iter().all(|&b| cx.joined(a, b)));
                    !vw || cx.m_joinable(rho, tau, m)
                })
            });
            if !ok {
                return false;
            }
        }
        true
    }

    #[test]
    fn flag_examples() {
        let full = SimplicialComplex::full_simplex(5);
        for m in 0..4 {
            assert!(full.is_m_flag_wrt(&[0, 2, 3], m).holds);
        }
        let t = hollow_triangle();
        assert_eq!(t.is_m_flag_wrt(&[0], 1).holds, flag_oracle(&t, &[0], 1));
        // Missing mixed triangle {0, 1, 3} with sigma = {0, 1}: rho = {3} is
        // joined to both, but {0, 1, 3} is not a face.
        let cx = SimplicialComplex::from_maximal(4, &[vec![0, 1, 2], vec![0, 3], vec![1, 3]]).unwrap();
        let c = cx.is_m_flag_wrt(&[0, 1], 2);
        assert!(!c.holds);
        assert_eq!(c.counterexample, Some((vec![3], vec![0, 1])));
        assert!(!flag_oracle(&cx, &[0, 1], 2));
    }

    #[test]
    fn lemma_examples() {
        let full = SimplicialComplex::full_simplex(4);
        assert_eq!(full.lemma_connectivity_bound(&[0, 1, 2, 3], 2, 1).bound, Some(1));
        let t = hollow_triangle();
        assert_eq!(t.lemma_connectivity_bound(&[0, 1, 2], 1, 1).bound, Some(0));
        let far = SimplicialComplex::from_maximal(5, &[vec![0, 1, 2], vec![3, 4]]).unwrap();
        let out = far.lemma_connectivity_bound(&[0, 1, 2], 1, 1);
        assert!(out.bound.is_none());
        assert!(out.failure.unwrap().contains("vertex 3"));
    }

    #[test]
    fn random_extremes() {
        let full = random_complex(7, 6, &DensityProfile::uniform(1.0)).unwrap().complex;
        assert_eq!(full, SimplicialComplex::full_simplex(6));
        let empty = random_complex(7, 6, &DensityProfile::uniform(0.0)).unwrap().complex;
        assert_eq!(empty.dim(), 0);
        assert_eq!(empty.face_count(), 6);
        let p = DensityProfile {
            edge: 0.5,
            fill: 0.5,
            plant: 3,
        };
        assert_eq!(random_complex(42, 9, &p).unwrap(), random_complex(42, 9, &p).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let cx = SimplicialComplex::from_maximal(5, &[vec![0, 1, 2], vec![2, 3]]).unwrap();
        let s = cx.to_json();
        assert_eq!(s, "[[0,1,2],[2,3],[4]]");
        assert_eq!(SimplicialComplex::from_json(&s).unwrap(), cx);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]
        #[test]
        fn flag_reduction_matches_oracle(seed in any::<u64>(), n in 3usize..7, m in 0usize..3, edge in 0.3f64..1.0, fill in 0.0f64..1.0) {
            let rc = random_complex(seed, n, &DensityProfile { edge, fill, plant: 3 }).unwrap();
            let cx = &rc.complex;
            prop_assert_eq!(cx.is_m_flag_wrt(&rc.planted, m).holds, flag_oracle(cx, &rc.planted, m));
        }

        #[test]
        fn pseudosimplex_monotone(seed in any::<u64>(), m in 0usize..4) {
            let rc = random_complex(seed, 7, &DensityProfile { edge: 0.8, fill: 0.6, plant: 4 }).unwrap();
            let cx = &rc.complex;
            let sigma: Vec<u32> = (0..5).collect();
            if cx.is_m_pseudosimplex(&sigma, m + 1) {
                prop_assert!(cx.is_m_pseudosimplex(&sigma, m));
            }
            if cx.is_m_pseudosimplex(&sigma, m) {
                prop_assert!(cx.is_m_pseudosimplex(&sigma[1..4], m));
            }
        }

        #[test]
        fn euler_characteristic(seed in any::<u64>()) {
            let rc = random_complex(seed, 8, &DensityProfile { edge: 0.6, fill: 0.5, plant: 0 }).unwrap();
            let h = rc.complex.homology(None).unwrap();
            let chi_f: i64 = rc.complex.f_vector().iter().enumerate().map(|(d, &f)| if d % 2 == 0 { f as i64 } else { -(f as i64) }).sum();
            let chi_b: i64 = h.betti.iter().enumerate().map(|(d, &b)| if d % 2 == 0 { b as i64 } else { -(b as i64) }).sum();
            prop_assert_eq!(chi_f, chi_b);
        }
    }
}
