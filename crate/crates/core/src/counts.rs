//! Leaf-count algebra: histories, count vectors, realizability, Dickson
//! bases and the connectivity thresholds for descending links.
//!
//! Everything here works on the caret table alone. With `M` the terminal
//! leaf matrix and `I_j` the interior counts, a history `N` from a base tree
//! with counts `(I0, L0)` predicts
//!
//! ```text
//! L = L0 + (M - Id) N        I = I0 + sum_j I_j N_j
//! ```

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::patches::CaretTable;

/// Default per-coordinate bound of Dickson searches.
pub const DICKSON_BOX: u64 = 64;

/// Default cap on the number of caret multisets searched for `alpha`.
pub const ALPHA_BUDGET: usize = 4096;

/// Number of leaf expansions of each gate type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct History(pub Vec<u64>);

impl History {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// Interior-vertex count and typed leaf counts of an admissible tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CountVector {
    pub interior: u64,
    pub leaves: Vec<u64>,
}

impl CountVector {
    pub fn height(&self) -> u64 {
        self.leaves.iter().sum()
    }
}

impl fmt::Display for CountVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ls: Vec<String> = self.leaves.iter().map(u64::to_string).collect();
        write!(f, "({},({}))", self.interior, ls.join(","))
    }
}

/// A caret table together with the counts of the base tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountModel {
    m: Vec<Vec<u64>>,
    interior: Vec<u64>,
    base: CountVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DicksonBasis {
    pub basis: Vec<Vec<u64>>,
    /// `true` once a whole ℓ¹ layer inside the box was dominated by the
    /// basis, so no further minimal points exist.
    pub closed: bool,
    pub box_bound: u64,
    pub evaluated: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaEntry {
    /// Caret types of the multiset, 1-based.
    pub rho: Vec<usize>,
    /// Gate type, 1-based.
    pub i: usize,
    pub alpha: u64,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub m: u64,
    pub k: usize,
    pub beta: u64,
    #[serde(rename = "C")]
    pub c: u64,
    pub alpha: u64,
    pub alpha_table: Vec<AlphaEntry>,
    /// Expansion threshold `k * (alpha + C)`; a lower bound when
    /// `incomplete_flags` is nonempty.
    pub r: u64,
    pub incomplete_flags: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThresholdOptions {
    pub dickson_box: u64,
    pub alpha_budget: usize,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            dickson_box: DICKSON_BOX,
            alpha_budget: ALPHA_BUDGET,
        }
    }
}

impl CountModel {
    pub fn new(table: &CaretTable, base: CountVector) -> Result<Self> {
        let k = table.k();
        if table.m.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: table.m.len(),
            });
        }
        if let Some(row) = table.m.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: row.len(),
            });
        }
        if base.leaves.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: base.leaves.len(),
            });
        }
        if table.interior.contains(&0) {
            return Err(Error::pre("every caret has at least one interior vertex"));
        }
        Ok(CountModel {
            m: table.m.clone(),
            interior: table.interior.clone(),
            base,
        })
    }

    pub fn k(&self) -> usize {
        self.interior.len()
    }

    pub fn base(&self) -> &CountVector {
        &self.base
    }

    pub fn m(&self) -> &[Vec<u64>] {
        &self.m
    }

    pub fn caret_interior(&self) -> &[u64] {
        &self.interior
    }

    /// Net leaf change `(M - Id) e_j` of one expansion of type `j`.
    pub fn leaf_delta(&self, j: usize) -> Vec<i64> {
        (0..self.k()).map(|i| self.m[i][j] as i64 - i64::from(i == j)).collect()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                got,
            });
        }
        Ok(())
    }

    pub fn predict(&self, n: &[u64]) -> Result<CountVector> {
        self.check_dim(n.len())?;
        let k = self.k();
        let mut leaves: Vec<i64> = self.base.leaves.iter().map(|&l| l as i64).collect();
        let mut interior = self.base.interior;
        for j in 0..k {
            interior += self.interior[j] * n[j];
            for (i, l) in leaves.iter_mut().enumerate() {
                *l += (self.m[i][j] as i64 - i64::from(i == j)) * n[j] as i64;
            }
        }
        // A negative entry means N is not a history of any tree; the exact
        // integer value is still what the formula gives, so clamp only for
        // the unsigned representation and let realizability reject it.
        if leaves.iter().any(|&l| l < 0) {
            return Err(Error::pre(format!("history {n:?} drives a leaf count negative")));
        }
        Ok(CountVector {
            interior,
            leaves: leaves.into_iter().map(|l| l as u64).collect(),
        })
    }

    /// All `N` with `sum_j I_j N_j = extra`.
    pub fn histories_with_interior(&self, extra: u64) -> Vec<Vec<u64>> {
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
        let mut out = Vec::new();
        rec(&self.interior, 0, extra, &mut Vec::new(), &mut out);
        out
    }

    /// Whether the expansions in `n` can be performed in some order, each
    /// one consuming an existing leaf of its type.
    pub fn order_feasible(&self, n: &[u64]) -> bool {
        let k = self.k();
        let mut failed: HashSet<Vec<u64>> = HashSet::new();
        let mut used = vec![0u64; k];
        self.feasible_from(n, &mut used, &mut failed)
    }

    fn feasible_from(&self, n: &[u64], used: &mut Vec<u64>, failed: &mut HashSet<Vec<u64>>) -> bool {
        if used.as_slice() == n {
            return true;
        }
        if failed.contains(used.as_slice()) {
            return false;
        }
        let k = self.k();
        for j in 0..k {
            if used[j] == n[j] {
                continue;
            }
            let lj = self.base.leaves[j] as i64
                + (0..k)
                    .map(|t| (self.m[j][t] as i64 - i64::from(j == t)) * used[t] as i64)
                    .sum::<i64>();
            if lj >= 1 {
                used[j] += 1;
                let ok = self.feasible_from(n, used, failed);
                used[j] -= 1;
                if ok {
                    return true;
                }
            }
        }
        failed.insert(used.clone());
        false
    }

    /// Histories with counts `c`. With `viral = false` each candidate is
    /// also checked for an admissible expansion order.
    pub fn realizable(&self, c: &CountVector, viral: bool) -> Result<Vec<History>> {
        self.check_dim(c.leaves.len())?;
        if c.interior < self.base.interior {
            return Ok(vec![]);
        }
        let mut out = Vec::new();
        for n in self.histories_with_interior(c.interior - self.base.interior) {
            let Ok(p) = self.predict(&n) else { continue };
            if p == *c && (viral || self.order_feasible(&n)) {
                out.push(History(n));
            }
        }
        Ok(out)
    }

    /// `M_ii >= 3` for every type and `L_i(T0) >= 2` for every type.
    pub fn is_viral(&self) -> bool {
        (0..self.k()).all(|i| self.m[i][i] >= 3 && self.base.leaves[i] >= 2)
    }

    /// Counts that remain after removing one caret per entry of `rho`, or
    /// `None` if some count would go negative.
    pub fn residual(&self, c: &CountVector, rho: &[usize]) -> Option<CountVector> {
        let mut interior = c.interior as i64;
        let mut leaves: Vec<i64> = c.leaves.iter().map(|&l| l as i64).collect();
        for &j in rho {
            interior -= self.interior[j] as i64;
            for (i, d) in self.leaf_delta(j).into_iter().enumerate() {
                leaves[i] -= d;
            }
        }
        if interior < 0 || leaves.iter().any(|&l| l < 0) {
            return None;
        }
        Some(CountVector {
            interior: interior as u64,
            leaves: leaves.into_iter().map(|l| l as u64).collect(),
        })
    }

    /// Whether counts `c` arise from a realizable tree by attaching one caret
    /// of each type in `rho` at distinct leaves.
    pub fn removable(&self, c: &CountVector, rho: &[usize]) -> bool {
        let Some(r) = self.residual(c, rho) else {
            return false;
        };
        let mut mult = vec![0u64; self.k()];
        for &j in rho {
            mult[j] += 1;
        }
        if (0..self.k()).any(|j| r.leaves[j] < mult[j]) {
            return false;
        }
        self.realizable(&r, self.is_viral()).is_ok_and(|v| !v.is_empty())
    }

    /// The predicate `pred_rho(N)`: a tree with history `N` rearranges to an
    /// elementary expansion by carets of the types in `rho`.
    pub fn pred_rho(&self, rho: &[usize], n: &[u64]) -> bool {
        match self.predict(n) {
            Ok(c) => self.removable(&c, rho),
            Err(_) => false,
        }
    }

    /// Dickson basis of `pred_rho`; `alpha(rho, i)` is its largest `i`-th
    /// coordinate.
    pub fn alpha_basis(&self, rho: &[usize], box_bound: u64) -> Result<DicksonBasis> {
        if rho.is_empty() {
            return Err(Error::pre("alpha needs a nonempty caret multiset"));
        }
        if let Some(&j) = rho.iter().find(|&&j| j >= self.k()) {
            return Err(Error::pre(format!("caret type {j} out of range")));
        }
        dickson_minimal(self.k(), box_bound, |n| self.pred_rho(rho, n))
    }

    /// `alpha(rho, i)`; fails if the Dickson search does not close inside
    /// the box.
    pub fn alpha(&self, rho: &[usize], i: usize, box_bound: u64) -> Result<u64> {
        self.check_viral_pre()?;
        if i >= self.k() {
            return Err(Error::pre(format!("gate type {i} out of range")));
        }
        let b = self.alpha_basis(rho, box_bound)?;
        if !b.closed {
            return Err(Error::cap(
                format!("Dickson search box (partial basis {:?})", b.basis),
                box_bound as usize,
            ));
        }
        Ok(b.basis.iter().map(|v| v[i]).max().unwrap_or(0))
    }

    fn check_viral_pre(&self) -> Result<()> {
        if !self.is_viral() {
            return Err(Error::pre("the viral expansion property does not hold"));
        }
        Ok(())
    }

    /// Largest terminal leaf count over all carets.
    pub fn beta(&self) -> u64 {
        (0..self.k()).map(|j| self.m.iter().map(|r| r[j]).sum()).max().unwrap_or(0)
    }

    pub fn thresholds(&self, m: u64, opts: ThresholdOptions) -> Result<ThresholdReport> {
        self.check_viral_pre()?;
        let k = self.k();
        let beta = self.beta();
        let c = c_of(m, beta)?;
        let mut flags = Vec::new();
        let mut multisets = Vec::new();
        for size in 1..=(m as usize + 2) {
            multisets.extend(multisets_of(k, size));
        }
        if multisets.len() > opts.alpha_budget {
            flags.push(format!(
                "alpha budget: searched {} of {} caret multisets",
                opts.alpha_budget,
                multisets.len()
            ));
            multisets.truncate(opts.alpha_budget);
        }
        let bases = par::map(&multisets, |rho| self.alpha_basis(rho, opts.dickson_box));
        let mut table = Vec::new();
        let mut alpha = 0;
        for (rho, basis) in multisets.iter().zip(bases) {
            let basis = basis?;
            if !basis.closed {
                flags.push(format!(
                    "rho {:?}: Dickson search not closed within box {}",
                    rho.iter().map(|j| j + 1).collect::<Vec<_>>(),
                    opts.dickson_box
                ));
            }
            for i in 0..k {
                let a = basis.basis.iter().map(|v| v[i]).max().unwrap_or(0);
                alpha = alpha.max(a);
                table.push(AlphaEntry {
                    rho: rho.iter().map(|j| j + 1).collect(),
                    i: i + 1,
                    alpha: a,
                    closed: basis.closed,
                });
            }
        }
        Ok(ThresholdReport {
            m,
            k,
            beta,
            c,
            alpha,
            alpha_table: table,
            r: k as u64 * (alpha + c),
            incomplete_flags: flags,
        })
    }
}

/// Least power of two `C` with `floor(C / (2 beta)) - 1 >= m`.
pub fn c_of(m: u64, beta: u64) -> Result<u64> {
    if beta == 0 {
        return Err(Error::pre("beta must be positive"));
    }
    let mut c: u64 = 1;
    loop {
        if c / (2 * beta) >= m + 1 {
            return Ok(c);
        }
        c = c
            .checked_mul(2)
            .ok_or_else(|| Error::cap("C(m) power of two", u64::MAX as usize))?;
    }
}

/// Nondecreasing sequences of length `size` over `0..k`.
pub fn multisets_of(k: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, size: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for j in from..k {
            cur.push(j);
            rec(k, size, j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, size, 0, &mut Vec::new(), &mut out);
    out
}

/// Points of `{0..=box_bound}^k` with coordinate sum `d`.
fn layer(k: usize, d: u64, box_bound: u64) -> Vec<Vec<u64>> {
    fn rec(k: usize, left: u64, b: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if cur.len() + 1 == k {
            if left <= b {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for x in 0..=left.min(b) {
            cur.push(x);
            rec(k, left - x, b, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(k, d, box_bound, &mut Vec::new(), &mut out);
    }
    out
}

fn dominates(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Minimal true points of an upward-closed predicate on `N^k`, searched in
/// ℓ¹ layers inside `{0..=box_bound}^k`.
///
/// Points dominating a known basis element are never evaluated. The search
/// stops early once a whole layer is dominated. Each basis element `b` is
/// checked against `b + e_i`; a false value there is reported as a
/// monotonicity failure.
pub fn dickson_minimal<F>(k: usize, box_bound: u64, pred: F) -> Result<DicksonBasis>
where
    F: Fn(&[u64]) -> bool + Sync + Send,
{
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut evaluated = 0;
    let mut closed = false;
    for d in 0..=(k as u64 * box_bound) {
        let pts: Vec<Vec<u64>> = layer(k, d, box_bound)
            .into_iter()
            .filter(|p| !basis.iter().any(|b| dominates(p, b)))
            .collect();
        if pts.is_empty() {
            closed = true;
            break;
        }
        evaluated += pts.len();
        let truth = par::map(&pts, |p| pred(p));
        basis.extend(pts.into_iter().zip(truth).filter(|(_, t)| *t).map(|(p, _)| p));
    }
    for b in &basis {
        for i in 0..k {
            let mut up = b.clone();
            up[i] += 1;
            if !pred(&up) {
                return Err(Error::NotMonotone {
                    below: b.clone(),
                    above: up,
                });
            }
        }
    }
    Ok(DicksonBasis {
        basis,
        closed,
        box_bound,
        evaluated,
    })
}

/// Lemma 5.1 prediction from a caret table and base counts.
pub fn predict_counts(n: &History, table: &CaretTable, base: &CountVector) -> Result<CountVector> {
    CountModel::new(table, base.clone())?.predict(&n.0)
}

pub fn realizable(c: &CountVector, table: &CaretTable, base: &CountVector, viral: bool) -> Result<Vec<History>> {
    CountModel::new(table, base.clone())?.realizable(c, viral)
}

pub fn thresholds(m: u64, table: &CaretTable, base: &CountVector, opts: ThresholdOptions) -> Result<ThresholdReport> {
    CountModel::new(table, base.clone())?.thresholds(m, opts)
}
