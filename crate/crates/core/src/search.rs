//! Largest subsets of a small group without nontrivial solutions.
//!
//! A set is solution-free iff it contains no element set `{a₁, a₂, a₃}` of a
//! nontrivial solution. The search is a Russian-doll branch and bound: with
//! vertices ordered `v₀, …, v_{n-1}`, `best[i]` is the optimum inside
//! `{vᵢ, …, v_{n-1}}`, computed for `i = n-1` down to `0`, and each level is
//! pruned by `|current| + best[j] ≤ record`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::counting::enumerate_solutions;
use crate::endo::EquationSystem;
use crate::error::{Error, Result};
use crate::group::Subset;

pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub size: usize,
    pub witness: Subset,
    /// False when the node budget ran out before optimality was proved.
    pub exact: bool,
    pub nodes: u64,
    pub forbidden_sets: usize,
}

/// Element sets of all nontrivial solutions, deduplicated and sorted.
pub fn forbidden_sets(sys: &EquationSystem) -> Vec<Vec<usize>> {
    let g = sys.group();
    let mut out = BTreeSet::new();
    let t3_inv = sys.t(3).inverse().expect("valid system");
    for x in g.elements() {
        let t1x = sys.t(1).apply(x);
        for y in g.elements() {
            let z = t3_inv.apply(g.neg(g.add(t1x, sys.t(2).apply(y))));
            if x == y && y == z {
                continue;
            }
            let mut s = vec![x, y, z];
            s.sort_unstable();
            s.dedup();
            out.insert(s);
        }
    }
    out.into_iter().collect()
}

struct Doll {
    n: usize,
    /// For each vertex position, the other positions of each forbidden set
    /// whose largest position it is.
    closing: Vec<Vec<Vec<usize>>>,
    best: Vec<usize>,
    in_set: Vec<bool>,
    current: Vec<usize>,
    record: usize,
    record_set: Vec<usize>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl Doll {
    fn admissible(&self, v: usize) -> bool {
        self.closing[v]
            .iter()
            .all(|others| !others.iter().all(|&o| self.in_set[o]))
    }

    fn expand(&mut self, candidates: &[usize]) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return false;
        }
        if candidates.is_empty() {
            if self.current.len() > self.record {
                self.record = self.current.len();
                self.record_set = self.current.clone();
                return true;
            }
            return false;
        }
        for (k, &v) in candidates.iter().enumerate() {
            if self.current.len() + self.best[v] <= self.record {
                return false;
            }
            self.in_set[v] = true;
            self.current.push(v);
            let next: Vec<usize> = candidates[k + 1..]
                .iter()
                .copied()
                .filter(|&w| self.admissible(w))
                .collect();
            let improved = self.expand(&next);
            self.current.pop();
            self.in_set[v] = false;
            if improved || self.exhausted {
                return improved;
            }
        }
        if self.current.len() > self.record {
            self.record = self.current.len();
            self.record_set = self.current.clone();
            return true;
        }
        false
    }
}

/// Exact maximum size of a solution-free subset, with a witness. If the node
/// budget runs out, the best set found so far is returned with `exact = false`.
pub fn max_solution_free(sys: &EquationSystem, budget: u64) -> Result<SearchResult> {
    let g = sys.group();
    if g.order() > 4096 {
        return Err(Error::TooLarge(g.order()));
    }
    let forb = forbidden_sets(sys);
    let n = g.order();

    // vertices of high degree go first, so the innermost dolls are sparse
    let mut degree = vec![0usize; n];
    for s in &forb {
        for &v in s {
            degree[v] += 1;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| degree[b].cmp(&degree[a]).then(a.cmp(&b)));
    let mut pos = vec![0usize; n];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }

    let mut closing = vec![Vec::new(); n];
    for s in &forb {
        let mut ps: Vec<usize> = s.iter().map(|&v| pos[v]).collect();
        ps.sort_unstable();
        let top = ps.pop().expect("forbidden sets have at least two elements");
        closing[top].push(ps);
    }

    let mut doll = Doll {
        n,
        closing,
        best: vec![0; n],
        in_set: vec![false; n],
        current: Vec::new(),
        record: 0,
        record_set: Vec::new(),
        nodes: 0,
        budget,
        exhausted: false,
    };
    for i in (0..doll.n).rev() {
        doll.in_set[i] = true;
        doll.current.push(i);
        let cands: Vec<usize> = (i + 1..doll.n).filter(|&w| doll.admissible(w)).collect();
        doll.expand(&cands);
        doll.current.pop();
        doll.in_set[i] = false;
        doll.best[i] = doll.record;
        if doll.exhausted {
            break;
        }
    }

    let witness = Subset::from_indices(g, doll.record_set.iter().map(|&p| order[p]));
    let check = enumerate_solutions(&witness, &witness, &witness, sys)?;
    if check.nontrivial != 0 {
        return Err(Error::Degenerate(
            "search witness has a nontrivial solution".into(),
        ));
    }
    Ok(SearchResult {
        size: witness.len(),
        witness,
        exact: !doll.exhausted,
        nodes: doll.nodes,
        forbidden_sets: forb.len(),
    })
}

/// Whether adding any element outside `set` creates a nontrivial solution.
pub fn is_maximal_solution_free(set: &Subset, sys: &EquationSystem) -> Result<bool> {
    for x in sys.group().elements() {
        if set.contains(x) {
            continue;
        }
        let bigger = set.union(&Subset::from_indices(sys.group(), [x]))?;
        if enumerate_solutions(&bigger, &bigger, &bigger, sys)?.nontrivial == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}
