//! Crossing pairs and triples of pairwise crossing edges.
//!
//! The crossing graph has one node per edge of the drawing and one link per
//! properly crossing pair; triples of pairwise crossing edges are exactly its
//! triangles.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::drawing::{scan_drawing, validate, Drawing, ValidationReport};
use crate::geometry::{polyline_meetings, Point};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("drawing is not simple ({} violations)", .0.violations.len())]
    Invalid(ValidationReport),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossingGraph {
    edge_count: usize,
    links: BTreeMap<(usize, usize), Point>,
}

impl CrossingGraph {
    pub fn new(edge_count: usize, links: BTreeMap<(usize, usize), Point>) -> Self {
        debug_assert!(links.keys().all(|&(i, j)| i < j && j < edge_count));
        CrossingGraph { edge_count, links }
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Crossing pairs `(i, j)` with `i < j`, with their exact crossing points.
    pub fn links(&self) -> &BTreeMap<(usize, usize), Point> {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn crosses(&self, i: usize, j: usize) -> bool {
        self.links.contains_key(&(i.min(j), i.max(j)))
    }

    pub fn location(&self, i: usize, j: usize) -> Option<&Point> {
        self.links.get(&(i.min(j), i.max(j)))
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.edge_count];
        for &(i, j) in self.links.keys() {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    pub(crate) fn bits(&self) -> BitGraph {
        let mut g = BitGraph::new(self.edge_count);
        for &(i, j) in self.links.keys() {
            g.set(i, j, true);
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleReport {
    pub triple_count: usize,
    /// Edge-index triples, each ascending, listed lexicographically.
    pub triples: Vec<[usize; 3]>,
    pub crossing_pair_count: usize,
}

/// Crossing graph of a simple drawing.
pub fn crossing_pairs(d: &Drawing) -> Result<CrossingGraph, AnalysisError> {
    let (report, links) = scan_drawing(d);
    if !report.is_valid {
        return Err(AnalysisError::Invalid(report));
    }
    Ok(CrossingGraph::new(d.e(), links))
}

/// All triangles of the crossing graph, by degree-ordered neighbour
/// intersection: each link is oriented from the lower to the higher
/// `(degree, index)` rank and a triangle is found once at its lowest node.
pub fn count_triples(g: &CrossingGraph) -> TripleReport {
    let adj = g.adjacency();
    let rank = |v: usize| (adj[v].len(), v);
    let out: Vec<Vec<usize>> = adj
        .iter()
        .enumerate()
        .map(|(u, ns)| ns.iter().copied().filter(|&v| rank(v) > rank(u)).collect())
        .collect();

    let mut mark = vec![false; g.edge_count()];
    let mut triples = Vec::new();
    for u in 0..g.edge_count() {
        for &v in &out[u] {
            mark[v] = true;
        }
        for &v in &out[u] {
            for &w in &out[v] {
                if mark[w] {
                    let mut t = [u, v, w];
                    t.sort_unstable();
                    triples.push(t);
                }
            }
        }
        for &v in &out[u] {
            mark[v] = false;
        }
    }
    triples.sort_unstable();
    TripleReport {
        triple_count: triples.len(),
        triples,
        crossing_pair_count: g.link_count(),
    }
}

/// Reference count: every pair is tested with the arbitrary-precision kernel
/// and every edge triple is checked directly.
pub fn count_triples_bruteforce(d: &Drawing) -> Result<usize, AnalysisError> {
    let report = validate(d);
    if !report.is_valid {
        return Err(AnalysisError::Invalid(report));
    }
    let m = d.e();
    let polys: Vec<Vec<Point>> = (0..m).map(|k| d.polyline(k)).collect();
    let cross: Vec<Vec<bool>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| {
                    i != j
                        && polyline_meetings(&polys[i], &polys[j], &[])
                            .iter()
                            .any(|mk| mk.is_proper())
                })
                .collect()
        })
        .collect();
    let mut count = 0;
    for a in 0..m {
        for b in a + 1..m {
            if !cross[a][b] {
                continue;
            }
            count += (b + 1..m).filter(|&c| cross[a][c] && cross[b][c]).count();
        }
    }
    Ok(count)
}

/// Triples of a simple drawing.
pub fn analyze_triples(d: &Drawing) -> Result<(CrossingGraph, TripleReport), AnalysisError> {
    let g = crossing_pairs(d)?;
    let t = count_triples(&g);
    Ok((g, t))
}

/// The distinct graph vertices spanned by a triple of edges.
pub fn triple_vertices(d: &Drawing, triple: &[usize; 3]) -> BTreeSet<usize> {
    triple
        .iter()
        .flat_map(|&k| [d.edges()[k].u, d.edges()[k].v])
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quasiplanarization {
    /// Deleted edge indices of the input drawing, in deletion order.
    pub deleted: Vec<usize>,
    pub residual: Drawing,
}

/// Delete the edge lying on the most remaining triples (smallest index on
/// ties) until no triple is left.
pub fn greedy_quasiplanarize(d: &Drawing) -> Result<Quasiplanarization, AnalysisError> {
    let (_, report) = analyze_triples(d)?;
    let mut remaining = report.triples;
    let mut deleted = Vec::new();
    while !remaining.is_empty() {
        let mut load = vec![0usize; d.e()];
        for t in &remaining {
            for &k in t {
                load[k] += 1;
            }
        }
        let victim = (0..d.e())
            .max_by_key(|&k| (load[k], std::cmp::Reverse(k)))
            .expect("edges exist");
        deleted.push(victim);
        remaining.retain(|t| !t.contains(&victim));
    }
    let residual = d.without_edges(&deleted.iter().copied().collect());
    Ok(Quasiplanarization { deleted, residual })
}

/// Dense adjacency as bit rows, for hot loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct BitGraph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl BitGraph {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitGraph {
            n,
            words,
            rows: vec![0; n * words],
        }
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    pub fn has(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        for (a, b) in [(i, j), (j, i)] {
            let w = &mut self.rows[a * self.words + b / 64];
            if on {
                *w |= 1 << (b % 64);
            } else {
                *w &= !(1 << (b % 64));
            }
        }
    }

    /// Triangles among the nodes set in `alive`.
    pub fn triangles_within(&self, alive: &[u64]) -> usize {
        let mut total = 0;
        let mut scratch = vec![0u64; self.words];
        for u in 0..self.n {
            if alive[u / 64] >> (u % 64) & 1 == 0 {
                continue;
            }
            for (w, s) in scratch.iter_mut().enumerate() {
                *s = self.row(u)[w] & alive[w] & above_mask(u, w);
            }
            for v in BitIter::new(&scratch) {
                let rv = self.row(v);
                total += (0..self.words)
                    .map(|w| (scratch[w] & rv[w] & above_mask(v, w)).count_ones() as usize)
                    .sum::<usize>();
            }
        }
        total
    }

    /// Triangles containing at least one node of `set`, each counted once.
    pub fn triangles_touching(&self, set: &[usize]) -> usize {
        let mut in_set = vec![0u64; self.words];
        for &a in set {
            in_set[a / 64] |= 1 << (a % 64);
        }
        let mut total = 0;
        let mut allowed = vec![0u64; self.words];
        let mut cand = vec![0u64; self.words];
        for &a in set {
            // A triangle is charged to its smallest member from `set`.
            for w in 0..self.words {
                let set_below_or_at = in_set[w] & !above_mask(a, w);
                allowed[w] = !set_below_or_at;
                cand[w] = self.row(a)[w] & allowed[w];
            }
            for b in BitIter::new(&cand) {
                let rb = self.row(b);
                total += (0..self.words)
                    .map(|w| (cand[w] & rb[w] & above_mask(b, w)).count_ones() as usize)
                    .sum::<usize>();
            }
        }
        total
    }
}

/// Bits of word `w` that stand for indices strictly above `i`.
#[inline]
fn above_mask(i: usize, w: usize) -> u64 {
    let base = w * 64;
    if i < base {
        u64::MAX
    } else if i + 1 >= base + 64 {
        0
    } else {
        u64::MAX << (i + 1 - base)
    }
}

pub(crate) struct BitIter<'a> {
    words: &'a [u64],
    idx: usize,
    cur: u64,
}

impl<'a> BitIter<'a> {
    pub fn new(words: &'a [u64]) -> Self {
        BitIter {
            words,
            idx: 0,
            cur: words.first().copied().unwrap_or(0),
        }
    }
}

impl Iterator for BitIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.cur != 0 {
                let b = self.cur.trailing_zeros() as usize;
                self.cur &= self.cur - 1;
                return Some(self.idx * 64 + b);
            }
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.idx];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drawing::convex_complete;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn convex_link_counts() {
        assert_eq!(
            crossing_pairs(&convex_complete(3).unwrap())
                .unwrap()
                .link_count(),
            0
        );
        assert_eq!(
            crossing_pairs(&convex_complete(4).unwrap())
                .unwrap()
                .link_count(),
            1
        );
        assert_eq!(
            crossing_pairs(&convex_complete(6).unwrap())
                .unwrap()
                .link_count(),
            15
        );
    }

    #[test]
    fn convex_k6_has_the_long_diagonal_triple() {
        let d = convex_complete(6).unwrap();
        let (_, r) = analyze_triples(&d).unwrap();
        assert_eq!(r.triple_count, 1);
        let labels: Vec<String> = r.triples[0].iter().map(|&k| d.edge_label(k)).collect();
        assert_eq!(labels, ["1-4", "2-5", "3-6"]);
        assert_eq!(count_triples_bruteforce(&d).unwrap(), 1);
    }

    #[test]
    fn convex_triple_counts() {
        for (n, expect) in [(5, 0), (7, 7), (11, 462)] {
            let d = convex_complete(n).unwrap();
            assert_eq!(
                analyze_triples(&d).unwrap().1.triple_count,
                expect,
                "n = {n}"
            );
            assert_eq!(expect, binom(n, 6));
        }
        assert_eq!(
            count_triples_bruteforce(&convex_complete(7).unwrap()).unwrap(),
            7
        );
    }

    #[test]
    fn bruteforce_on_tiny_drawings() {
        let d = convex_complete(3).unwrap();
        assert_eq!(count_triples_bruteforce(&d).unwrap(), 0);
        let two = d.without_edges(&BTreeSet::from([0]));
        assert_eq!(count_triples_bruteforce(&two).unwrap(), 0);
    }

    #[test]
    fn greedy_on_k6_removes_first_long_diagonal() {
        let d = convex_complete(6).unwrap();
        let q = greedy_quasiplanarize(&d).unwrap();
        assert_eq!(q.deleted.len(), 1);
        assert_eq!(d.edge_label(q.deleted[0]), "1-4");
        assert_eq!(count_triples_bruteforce(&q.residual).unwrap(), 0);
    }

    #[test]
    fn greedy_noop_without_triples() {
        let d = convex_complete(5).unwrap();
        let q = greedy_quasiplanarize(&d).unwrap();
        assert!(q.deleted.is_empty());
        assert_eq!(q.residual, d);
    }

    #[test]
    fn greedy_on_k7() {
        let d = convex_complete(7).unwrap();
        let q = greedy_quasiplanarize(&d).unwrap();
        assert!(q.deleted.len() <= 7);
        assert_eq!(count_triples_bruteforce(&q.residual).unwrap(), 0);
    }

    #[test]
    fn bitgraph_triangle_counts_match() {
        let d = convex_complete(9).unwrap();
        let g = crossing_pairs(&d).unwrap();
        let bits = g.bits();
        let all = vec![u64::MAX; bits.words()];
        assert_eq!(bits.triangles_within(&all), binom(9, 6));
        let tri = count_triples(&g).triples;
        for set in [vec![0], vec![3, 10], vec![2, 5, 7, 30, 35]] {
            let oracle = tri
                .iter()
                .filter(|t| t.iter().any(|k| set.contains(k)))
                .count();
            assert_eq!(bits.triangles_touching(&set), oracle, "set {set:?}");
        }
        for (k, adj) in g.adjacency().iter().enumerate() {
            let degree: u32 = bits.row(k).iter().map(|w| w.count_ones()).sum();
            assert_eq!(degree as usize, adj.len());
            assert!(adj.iter().all(|&j| bits.has(k, j)));
        }
    }

    #[test]
    fn above_mask_boundaries() {
        assert_eq!(above_mask(0, 0), u64::MAX << 1);
        assert_eq!(above_mask(63, 0), 0);
        assert_eq!(above_mask(63, 1), u64::MAX);
        assert_eq!(above_mask(64, 1), u64::MAX << 1);
    }
}
