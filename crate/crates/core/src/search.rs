//! Simulated annealing over drawings of a fixed graph.
//!
//! The chain lives on an integer lattice: the drawing's common denominator
//! refined by `lattice_denominator`. A proposal is evaluated by re-testing
//! only the edge pairs it touches and patching the triangle count of the
//! crossing graph; the returned best drawing is always recounted from
//! scratch.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::crossing::BitGraph;
use crate::drawing::{
    classify_pair, scan, scan_drawing, shared_endpoint, Drawing, DrawingError, EdgeSpec, PairCheck,
    Realization, ValidationReport, ViolationKind,
};
use crate::format::{
    format_rational, parse_drawing, rational_string, serialize_drawing, DrawingDoc, FormatError,
};
use crate::geometry::kernel;
use crate::geometry::lattice::{LatticeKernel, LatticeMeet, LatticePoint, COORD_LIMIT};
use crate::geometry::{integer, Frame, Point, Rational};

pub const STATE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("drawing is not simple: {:?}", .0.kinds())]
    InvalidDrawing(ValidationReport),
    #[error("drawing coordinates do not fit the search lattice")]
    OutOfLattice,
    #[error(
        "restart {restart}: incremental objective {claimed:?} disagrees with recount {recount:?}"
    )]
    Inconsistent {
        restart: usize,
        claimed: Objective,
        recount: Objective,
    },
    #[error("checkpoint does not match this search: {0}")]
    ResumeMismatch(String),
    #[error("checkpoint state: {0}")]
    State(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    PerturbVertex,
    AddBend,
    MoveBend,
    RemoveBend,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveWeights {
    #[serde(default, alias = "PerturbVertex")]
    pub perturb_vertex: u32,
    #[serde(default, alias = "AddBend")]
    pub add_bend: u32,
    #[serde(default, alias = "MoveBend")]
    pub move_bend: u32,
    #[serde(default, alias = "RemoveBend")]
    pub remove_bend: u32,
}

impl Default for MoveWeights {
    fn default() -> Self {
        MoveWeights {
            perturb_vertex: 1,
            add_bend: 1,
            move_bend: 1,
            remove_bend: 1,
        }
    }
}

impl MoveWeights {
    fn table(&self) -> [(MoveKind, u64); 4] {
        [
            (MoveKind::PerturbVertex, self.perturb_vertex as u64),
            (MoveKind::AddBend, self.add_bend as u64),
            (MoveKind::MoveBend, self.move_bend as u64),
            (MoveKind::RemoveBend, self.remove_bend as u64),
        ]
    }

    fn total(&self) -> u64 {
        self.table().iter().map(|(_, w)| w).sum()
    }

    fn pick<R: Rng>(&self, rng: &mut R) -> MoveKind {
        let mut r = rng.random_range(0..self.total());
        for (kind, w) in self.table() {
            if r < w {
                return kind;
            }
            r -= w;
        }
        unreachable!("weights sum to total")
    }
}

fn default_restarts() -> usize {
    1
}

fn default_lattice() -> u64 {
    1 << 16
}

/// Annealing parameters. Rationals are written as strings in JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub seed: u64,
    pub max_iterations: u64,
    #[serde(with = "rational_string")]
    pub initial_temperature: Rational,
    #[serde(with = "rational_string")]
    pub cooling_factor: Rational,
    #[serde(default)]
    pub move_weights: MoveWeights,
    pub max_bends_per_edge: usize,
    #[serde(with = "rational_string")]
    pub perturbation_radius: Rational,
    #[serde(default = "default_restarts")]
    pub restart_count: usize,
    /// Offsets are multiples of `1 / lattice_denominator`.
    #[serde(default = "default_lattice")]
    pub lattice_denominator: u64,
    /// Iterations between checkpoint writes; 0 writes only at the end.
    #[serde(default)]
    pub checkpoint_every: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seed: 0,
            max_iterations: 10_000,
            initial_temperature: integer(1),
            cooling_factor: Rational::new(BigInt::from(9995), BigInt::from(10_000)),
            move_weights: MoveWeights::default(),
            max_bends_per_edge: 2,
            perturbation_radius: integer(1),
            restart_count: 1,
            lattice_denominator: default_lattice(),
            checkpoint_every: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let fail = |m: &str| Err(SearchError::Config(m.to_string()));
        if self.initial_temperature <= Rational::zero() {
            return fail("initial_temperature must be positive");
        }
        if self.cooling_factor <= Rational::zero() || self.cooling_factor >= Rational::one() {
            return fail("cooling_factor must lie strictly between 0 and 1");
        }
        if self.perturbation_radius <= Rational::zero() {
            return fail("perturbation_radius must be positive");
        }
        if self.move_weights.total() == 0 {
            return fail("at least one move weight must be positive");
        }
        if self.restart_count == 0 {
            return fail("restart_count must be at least 1");
        }
        if self.lattice_denominator == 0 {
            return fail("lattice_denominator must be positive");
        }
        Ok(())
    }

    /// Same chain, possibly a different budget or checkpoint cadence.
    fn same_chain(&self, other: &SearchConfig) -> bool {
        SearchConfig {
            max_iterations: 0,
            checkpoint_every: 0,
            ..self.clone()
        } == SearchConfig {
            max_iterations: 0,
            checkpoint_every: 0,
            ..other.clone()
        }
    }
}

/// Ordered lexicographically: fewer triples first, then fewer crossings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Objective {
    pub triples: u64,
    pub crossing_pairs: u64,
}

impl Objective {
    /// `triples * M + crossing_pairs` with `M` one more than the largest
    /// possible crossing count, so triples dominate.
    fn score(&self, weight: u64) -> i128 {
        self.triples as i128 * weight as i128 + self.crossing_pairs as i128
    }
}

fn triple_weight(edges: usize) -> u64 {
    let m = edges as u64;
    1 + m * m.saturating_sub(1) / 2
}

pub fn objective(d: &Drawing) -> Result<Objective, SearchError> {
    let (report, links) = scan_drawing(d);
    if !report.is_valid {
        return Err(SearchError::InvalidDrawing(report));
    }
    let g = crate::crossing::CrossingGraph::new(d.e(), links);
    let t = crate::crossing::count_triples(&g);
    Ok(Objective {
        triples: t.triple_count as u64,
        crossing_pairs: g.link_count() as u64,
    })
}

/// One edit of a drawing. Bend `index` counts along the edge from `u`;
/// `AddBend` inserts before the bend currently at `index` (or at the end).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    PerturbVertex {
        vertex: usize,
        dx: Rational,
        dy: Rational,
    },
    AddBend {
        edge: usize,
        index: usize,
        at: Point,
    },
    MoveBend {
        edge: usize,
        index: usize,
        dx: Rational,
        dy: Rational,
    },
    RemoveBend {
        edge: usize,
        index: usize,
    },
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::PerturbVertex { .. } => MoveKind::PerturbVertex,
            Move::AddBend { .. } => MoveKind::AddBend,
            Move::MoveBend { .. } => MoveKind::MoveBend,
            Move::RemoveBend { .. } => MoveKind::RemoveBend,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Rejection {
    #[error("no such vertex")]
    NoSuchVertex,
    #[error("no such edge")]
    NoSuchEdge,
    #[error("edge has no bend at that index")]
    NoSuchBend,
    #[error("edge already has the maximum number of bends")]
    BendLimit,
    #[error("no edge is eligible for this move")]
    NoEligibleEdge,
    #[error("coordinates leave the search lattice")]
    OutOfLattice,
    #[error("edge {0} would repeat a point consecutively")]
    ZeroLengthStep(usize),
    #[error("{0}")]
    Structure(DrawingError),
    #[error("result is not simple: {0:?}")]
    NotSimple(Vec<ViolationKind>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Proposal {
    Candidate(Drawing),
    RejectedInvalid(Rejection),
}

/// Apply `mv` to `d`, keeping the result only if it is a simple drawing.
pub fn apply_move(d: &Drawing, mv: &Move, cfg: &SearchConfig) -> Proposal {
    let (mut vertices, mut edges) = d.to_specs();
    fn edge_mut(edges: &mut [EdgeSpec], k: usize) -> Result<&mut EdgeSpec, Rejection> {
        edges.get_mut(k).ok_or(Rejection::NoSuchEdge)
    }
    let edited = (|| -> Result<(), Rejection> {
        match mv {
            Move::PerturbVertex { vertex, dx, dy } => {
                let (_, p) = vertices.get_mut(*vertex).ok_or(Rejection::NoSuchVertex)?;
                *p = Point::new(&p.x + dx, &p.y + dy);
            }
            Move::AddBend { edge, index, at } => {
                let e = edge_mut(&mut edges, *edge)?;
                if e.bends.len() >= cfg.max_bends_per_edge {
                    return Err(Rejection::BendLimit);
                }
                if *index > e.bends.len() {
                    return Err(Rejection::NoSuchBend);
                }
                e.bends.insert(*index, at.clone());
            }
            Move::MoveBend {
                edge,
                index,
                dx,
                dy,
            } => {
                let e = edge_mut(&mut edges, *edge)?;
                let b = e.bends.get_mut(*index).ok_or(Rejection::NoSuchBend)?;
                *b = Point::new(&b.x + dx, &b.y + dy);
            }
            Move::RemoveBend { edge, index } => {
                let e = edge_mut(&mut edges, *edge)?;
                if *index >= e.bends.len() {
                    return Err(Rejection::NoSuchBend);
                }
                e.bends.remove(*index);
            }
        }
        Ok(())
    })();
    if let Err(r) = edited {
        return Proposal::RejectedInvalid(r);
    }
    let candidate = match Drawing::new(vertices, edges) {
        Ok(c) => c,
        Err(e) => return Proposal::RejectedInvalid(Rejection::Structure(e)),
    };
    let report = crate::drawing::validate(&candidate);
    if report.is_valid {
        Proposal::Candidate(candidate)
    } else {
        Proposal::RejectedInvalid(Rejection::NotSimple(report.kinds().into_iter().collect()))
    }
}

/// A sampled move together with what it produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Proposed {
    pub kind: MoveKind,
    pub mv: Option<Move>,
    pub proposal: Proposal,
}

/// Sample a move as the annealer does and apply it. Offsets are lattice
/// vectors of length at most `perturbation_radius`; a new bend starts at the
/// midpoint of the segment it splits, offset the same way.
pub fn propose_move<R: Rng>(
    d: &Drawing,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<Proposed, SearchError> {
    cfg.validate()?;
    let frame =
        Frame::fitting(d.all_points(), cfg.lattice_denominator).ok_or(SearchError::OutOfLattice)?;
    let real = d
        .realize_in(|p| frame.to_lattice(p))
        .ok_or(SearchError::OutOfLattice)?;
    let sampler = Sampler::new(cfg, &frame);
    let (kind, lm) = sampler.sample(rng, real.positions.len(), &real.polylines);
    let Some(lm) = lm else {
        return Ok(Proposed {
            kind,
            mv: None,
            proposal: Proposal::RejectedInvalid(Rejection::NoEligibleEdge),
        });
    };
    let mv = lm.to_move(&frame);
    let proposal = apply_move(d, &mv, cfg);
    Ok(Proposed {
        kind,
        mv: Some(mv),
        proposal,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LatticeMove {
    PerturbVertex {
        vertex: usize,
        dx: i64,
        dy: i64,
    },
    AddBend {
        edge: usize,
        index: usize,
        at: LatticePoint,
    },
    MoveBend {
        edge: usize,
        index: usize,
        dx: i64,
        dy: i64,
    },
    RemoveBend {
        edge: usize,
        index: usize,
    },
}

impl LatticeMove {
    fn to_move(self, frame: &Frame) -> Move {
        let unit = |v: i64| Rational::new(BigInt::from(v), frame.scale().clone());
        match self {
            LatticeMove::PerturbVertex { vertex, dx, dy } => Move::PerturbVertex {
                vertex,
                dx: unit(dx),
                dy: unit(dy),
            },
            LatticeMove::AddBend { edge, index, at } => Move::AddBend {
                edge,
                index,
                at: frame.to_point(&at),
            },
            LatticeMove::MoveBend {
                edge,
                index,
                dx,
                dy,
            } => Move::MoveBend {
                edge,
                index,
                dx: unit(dx),
                dy: unit(dy),
            },
            LatticeMove::RemoveBend { edge, index } => Move::RemoveBend { edge, index },
        }
    }
}

struct Sampler {
    weights: MoveWeights,
    radius: i64,
    max_bends: usize,
}

impl Sampler {
    fn new(cfg: &SearchConfig, frame: &Frame) -> Sampler {
        let r = (&cfg.perturbation_radius * Rational::from_integer(frame.scale().clone()))
            .floor()
            .to_integer();
        let radius = r.to_i64().unwrap_or(COORD_LIMIT).clamp(1, COORD_LIMIT);
        Sampler {
            weights: cfg.move_weights.clone(),
            radius,
            max_bends: cfg.max_bends_per_edge,
        }
    }

    fn offset<R: Rng>(&self, rng: &mut R) -> (i64, i64) {
        let r = self.radius;
        loop {
            let dx = rng.random_range(-r..=r);
            let dy = rng.random_range(-r..=r);
            if (dx as i128).pow(2) + (dy as i128).pow(2) <= (r as i128).pow(2) {
                return (dx, dy);
            }
        }
    }

    fn pick_edge<R: Rng>(
        rng: &mut R,
        polylines: &[Vec<LatticePoint>],
        ok: impl Fn(usize) -> bool,
    ) -> Option<usize> {
        let eligible: Vec<usize> = (0..polylines.len())
            .filter(|&k| ok(polylines[k].len() - 2))
            .collect();
        (!eligible.is_empty()).then(|| eligible[rng.random_range(0..eligible.len())])
    }

    fn sample<R: Rng>(
        &self,
        rng: &mut R,
        n: usize,
        polylines: &[Vec<LatticePoint>],
    ) -> (MoveKind, Option<LatticeMove>) {
        let kind = self.weights.pick(rng);
        let mv = match kind {
            MoveKind::PerturbVertex => (n > 0).then(|| {
                let vertex = rng.random_range(0..n);
                let (dx, dy) = self.offset(rng);
                LatticeMove::PerturbVertex { vertex, dx, dy }
            }),
            MoveKind::AddBend => {
                Self::pick_edge(rng, polylines, |b| b < self.max_bends).map(|edge| {
                    let poly = &polylines[edge];
                    let index = rng.random_range(0..poly.len() - 1);
                    let (a, b) = (poly[index], poly[index + 1]);
                    let (dx, dy) = self.offset(rng);
                    let at = LatticePoint::new(
                        (a.x + b.x).div_euclid(2) + dx,
                        (a.y + b.y).div_euclid(2) + dy,
                    );
                    LatticeMove::AddBend { edge, index, at }
                })
            }
            MoveKind::MoveBend => Self::pick_edge(rng, polylines, |b| b > 0).map(|edge| {
                let index = rng.random_range(0..polylines[edge].len() - 2);
                let (dx, dy) = self.offset(rng);
                LatticeMove::MoveBend {
                    edge,
                    index,
                    dx,
                    dy,
                }
            }),
            MoveKind::RemoveBend => Self::pick_edge(rng, polylines, |b| b > 0).map(|edge| {
                let index = rng.random_range(0..polylines[edge].len() - 2);
                LatticeMove::RemoveBend { edge, index }
            }),
        };
        (kind, mv)
    }
}

#[derive(Clone, Copy, Debug)]
struct BBox {
    lo: LatticePoint,
    hi: LatticePoint,
}

impl BBox {
    fn of(poly: &[LatticePoint]) -> BBox {
        let mut b = BBox {
            lo: poly[0],
            hi: poly[0],
        };
        for p in &poly[1..] {
            b.lo.x = b.lo.x.min(p.x);
            b.lo.y = b.lo.y.min(p.y);
            b.hi.x = b.hi.x.max(p.x);
            b.hi.y = b.hi.y.max(p.y);
        }
        b
    }

    fn disjoint(&self, o: &BBox) -> bool {
        self.hi.x < o.lo.x || o.hi.x < self.lo.x || self.hi.y < o.lo.y || o.hi.y < self.lo.y
    }
}

fn key(i: usize, j: usize) -> (u32, u32) {
    (i.min(j) as u32, i.max(j) as u32)
}

/// Edges whose routes change, their new routes, and the moved vertex.
type Edit = (
    Vec<usize>,
    Vec<Vec<LatticePoint>>,
    Option<(usize, LatticePoint)>,
);

/// A drawing on the lattice with its crossing graph kept up to date.
#[derive(Clone)]
struct Chain {
    positions: Vec<LatticePoint>,
    polylines: Vec<Vec<LatticePoint>>,
    boxes: Vec<BBox>,
    ends: Vec<(usize, usize)>,
    incident: Vec<Vec<usize>>,
    graph: BitGraph,
    locations: HashMap<(u32, u32), LatticeMeet>,
    /// Number of crossing pairs at each crossing point; all ones when simple.
    at_point: HashMap<LatticeMeet, u32>,
    objective: Objective,
    max_bends: usize,
}

/// An evaluated proposal, applied to the graph bits only.
struct Pending {
    changed: Vec<usize>,
    polylines: Vec<Vec<LatticePoint>>,
    moved: Option<(usize, LatticePoint)>,
    old_links: Vec<((u32, u32), LatticeMeet)>,
    new_links: Vec<((u32, u32), LatticeMeet)>,
    flips: Vec<(usize, usize, bool)>,
    objective: Objective,
}

impl Chain {
    /// `None` if the realization is not a simple drawing.
    fn new(r: Realization<LatticePoint>, max_bends: usize) -> Option<Chain> {
        let s = scan::<LatticeKernel>(&r);
        if !s.violations.is_empty() {
            return None;
        }
        let m = r.polylines.len();
        let mut graph = BitGraph::new(m);
        let mut locations = HashMap::new();
        let mut at_point = HashMap::new();
        for (&(i, j), p) in &s.crossings {
            graph.set(i, j, true);
            locations.insert(key(i, j), *p);
            *at_point.entry(*p).or_insert(0) += 1;
        }
        let mut alive = vec![0u64; graph.words()];
        for k in 0..m {
            alive[k / 64] |= 1 << (k % 64);
        }
        let triples = graph.triangles_within(&alive) as u64;
        let mut incident = vec![Vec::new(); r.positions.len()];
        for (k, &(u, v)) in r.ends.iter().enumerate() {
            incident[u].push(k);
            incident[v].push(k);
        }
        Some(Chain {
            max_bends,
            boxes: r.polylines.iter().map(|p| BBox::of(p)).collect(),
            positions: r.positions,
            polylines: r.polylines,
            ends: r.ends,
            incident,
            graph,
            objective: Objective {
                triples,
                crossing_pairs: locations.len() as u64,
            },
            locations,
            at_point,
        })
    }

    fn edit(&self, mv: &LatticeMove) -> Result<Edit, Rejection> {
        let fits = |p: &LatticePoint| p.in_range();
        let bend_count = |k: usize| self.polylines[k].len() - 2;
        match *mv {
            LatticeMove::PerturbVertex { vertex, dx, dy } => {
                let old = *self.positions.get(vertex).ok_or(Rejection::NoSuchVertex)?;
                let p = LatticePoint::new(old.x + dx, old.y + dy);
                if !fits(&p) {
                    return Err(Rejection::OutOfLattice);
                }
                if p != old && self.positions.contains(&p) {
                    return Err(Rejection::NotSimple(vec![ViolationKind::EdgeThroughVertex]));
                }
                let changed = self.incident[vertex].clone();
                let polys = changed
                    .iter()
                    .map(|&k| {
                        let mut poly = self.polylines[k].clone();
                        let last = poly.len() - 1;
                        let slot = if self.ends[k].0 == vertex { 0 } else { last };
                        poly[slot] = p;
                        poly
                    })
                    .collect();
                Ok((changed, polys, Some((vertex, p))))
            }
            LatticeMove::AddBend { edge, index, at } => {
                if edge >= self.polylines.len() {
                    return Err(Rejection::NoSuchEdge);
                }
                if bend_count(edge) >= self.max_bends {
                    return Err(Rejection::BendLimit);
                }
                if index > bend_count(edge) {
                    return Err(Rejection::NoSuchBend);
                }
                if !fits(&at) {
                    return Err(Rejection::OutOfLattice);
                }
                let mut poly = self.polylines[edge].clone();
                poly.insert(index + 1, at);
                Ok((vec![edge], vec![poly], None))
            }
            LatticeMove::MoveBend {
                edge,
                index,
                dx,
                dy,
            } => {
                if edge >= self.polylines.len() {
                    return Err(Rejection::NoSuchEdge);
                }
                if index >= bend_count(edge) {
                    return Err(Rejection::NoSuchBend);
                }
                let mut poly = self.polylines[edge].clone();
                let b = &mut poly[index + 1];
                *b = LatticePoint::new(b.x + dx, b.y + dy);
                if !fits(b) {
                    return Err(Rejection::OutOfLattice);
                }
                Ok((vec![edge], vec![poly], None))
            }
            LatticeMove::RemoveBend { edge, index } => {
                if edge >= self.polylines.len() {
                    return Err(Rejection::NoSuchEdge);
                }
                if index >= bend_count(edge) {
                    return Err(Rejection::NoSuchBend);
                }
                let mut poly = self.polylines[edge].clone();
                poly.remove(index + 1);
                Ok((vec![edge], vec![poly], None))
            }
        }
    }

    /// Check the proposal and flip the crossing-graph bits it changes. The
    /// caller must [`commit`](Self::commit) or [`revert`](Self::revert).
    fn evaluate(&mut self, mv: &LatticeMove) -> Result<Pending, Rejection> {
        let (changed, polys, moved) = self.edit(mv)?;
        let m = self.polylines.len();
        let not_simple = |k: ViolationKind| Err(Rejection::NotSimple(vec![k]));
        let position = |w: usize| match moved {
            Some((v, p)) if v == w => p,
            _ => self.positions[w],
        };

        let mut slot = vec![usize::MAX; m];
        for (s, &k) in changed.iter().enumerate() {
            slot[k] = s;
        }
        let boxes: Vec<BBox> = polys.iter().map(|p| BBox::of(p)).collect();

        for (s, &k) in changed.iter().enumerate() {
            let poly = &polys[s];
            if poly.windows(2).any(|w| w[0] == w[1]) {
                return Err(Rejection::ZeroLengthStep(k));
            }
            if kernel::self_intersection::<LatticeKernel>(poly).is_some() {
                return not_simple(ViolationKind::SelfIntersection);
            }
            let (u, v) = self.ends[k];
            for w in 0..self.positions.len() {
                if w == u || w == v {
                    continue;
                }
                let p = position(w);
                let b = &boxes[s];
                if p.x < b.lo.x || p.x > b.hi.x || p.y < b.lo.y || p.y > b.hi.y {
                    continue;
                }
                if poly
                    .windows(2)
                    .any(|seg| kernel::on_segment::<LatticeKernel>(&p, &seg[0], &seg[1]))
                {
                    return not_simple(ViolationKind::EdgeThroughVertex);
                }
            }
        }
        if let Some((w, p)) = moved {
            for (j, &s) in slot.iter().enumerate().take(m) {
                let (u, v) = self.ends[j];
                if s != usize::MAX || u == w || v == w {
                    continue;
                }
                let b = &self.boxes[j];
                if p.x < b.lo.x || p.x > b.hi.x || p.y < b.lo.y || p.y > b.hi.y {
                    continue;
                }
                if self.polylines[j]
                    .windows(2)
                    .any(|seg| kernel::on_segment::<LatticeKernel>(&p, &seg[0], &seg[1]))
                {
                    return not_simple(ViolationKind::EdgeThroughVertex);
                }
            }
        }

        let no_vertices = HashSet::new();
        let mut new_links = Vec::new();
        for (s, &k) in changed.iter().enumerate() {
            for j in 0..m {
                if j == k || (slot[j] != usize::MAX && slot[j] < s) {
                    continue;
                }
                let (poly_j, box_j) = if slot[j] != usize::MAX {
                    (&polys[slot[j]], &boxes[slot[j]])
                } else {
                    (&self.polylines[j], &self.boxes[j])
                };
                if boxes[s].disjoint(box_j) {
                    continue;
                }
                let shared = shared_endpoint(self.ends[k], self.ends[j]).map(position);
                match classify_pair::<LatticeKernel>(
                    &polys[s],
                    poly_j,
                    shared.as_ref(),
                    &no_vertices,
                ) {
                    PairCheck::Clear => {}
                    PairCheck::Crossing(p) => new_links.push((key(k, j), p)),
                    PairCheck::Bad(list) => {
                        return Err(Rejection::NotSimple(
                            list.into_iter().map(|(kind, _)| kind).collect(),
                        ))
                    }
                }
            }
        }

        let mut old_links = Vec::new();
        for (s, &k) in changed.iter().enumerate() {
            for j in crate::crossing::BitIter::new(self.graph.row(k)) {
                if slot[j] != usize::MAX && slot[j] < s {
                    continue;
                }
                let kk = key(k, j);
                old_links.push((kk, self.locations[&kk]));
            }
        }

        let mut delta: HashMap<LatticeMeet, i64> = HashMap::new();
        for (_, p) in &old_links {
            *delta.entry(*p).or_default() -= 1;
        }
        for (_, p) in &new_links {
            *delta.entry(*p).or_default() += 1;
        }
        for (p, dv) in &delta {
            if *dv > 0 && self.at_point.get(p).copied().unwrap_or(0) as i64 + dv > 1 {
                return not_simple(ViolationKind::ConcurrentCrossings);
            }
        }

        let before = self.graph.triangles_touching(&changed) as u64;
        let mut flips = Vec::new();
        let new_keys: HashSet<(u32, u32)> = new_links.iter().map(|(kk, _)| *kk).collect();
        for (kk, _) in &old_links {
            if !new_keys.contains(kk) {
                flips.push((kk.0 as usize, kk.1 as usize, false));
            }
        }
        for (kk, _) in &new_links {
            if !self.graph.has(kk.0 as usize, kk.1 as usize) {
                flips.push((kk.0 as usize, kk.1 as usize, true));
            }
        }
        for &(i, j, on) in &flips {
            self.graph.set(i, j, on);
        }
        let after = self.graph.triangles_touching(&changed) as u64;
        let objective = Objective {
            triples: self.objective.triples - before + after,
            crossing_pairs: self.objective.crossing_pairs - old_links.len() as u64
                + new_links.len() as u64,
        };
        Ok(Pending {
            changed,
            polylines: polys,
            moved,
            old_links,
            new_links,
            flips,
            objective,
        })
    }

    fn revert(&mut self, p: Pending) {
        for (i, j, on) in p.flips {
            self.graph.set(i, j, !on);
        }
    }

    fn commit(&mut self, p: Pending) {
        for (kk, at) in &p.old_links {
            self.locations.remove(kk);
            if let Some(c) = self.at_point.get_mut(at) {
                *c -= 1;
                if *c == 0 {
                    self.at_point.remove(at);
                }
            }
        }
        for (kk, at) in &p.new_links {
            self.locations.insert(*kk, *at);
            *self.at_point.entry(*at).or_insert(0) += 1;
        }
        for (k, poly) in p.changed.into_iter().zip(p.polylines) {
            self.boxes[k] = BBox::of(&poly);
            self.polylines[k] = poly;
        }
        if let Some((w, pos)) = p.moved {
            self.positions[w] = pos;
        }
        self.objective = p.objective;
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            positions: self.positions.clone(),
            polylines: self.polylines.clone(),
        }
    }

    fn to_drawing(&self, frame: &Frame, template: &Drawing) -> Drawing {
        self.snapshot().to_drawing(frame, template)
    }
}

#[derive(Clone, Debug)]
struct Snapshot {
    positions: Vec<LatticePoint>,
    polylines: Vec<Vec<LatticePoint>>,
}

impl Snapshot {
    fn to_drawing(&self, frame: &Frame, template: &Drawing) -> Drawing {
        let vertices = template
            .vertices()
            .iter()
            .zip(&self.positions)
            .map(|(v, p)| (v.id.clone(), frame.to_point(p)))
            .collect();
        let edges = template
            .edges()
            .iter()
            .zip(&self.polylines)
            .enumerate()
            .map(|(k, (e, poly))| {
                let (u, v) = template.edge_ids(k);
                let bends = poly[1..poly.len() - 1]
                    .iter()
                    .map(|p| frame.to_point(p))
                    .collect();
                EdgeSpec {
                    u: u.to_string(),
                    v: v.to_string(),
                    bends,
                    tag: e.tag.clone(),
                }
            })
            .collect();
        Drawing::new(vertices, edges).expect("chain states are structurally sound")
    }
}

fn float_as_rational<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    let r = Rational::from_float(*v).unwrap_or_else(Rational::zero);
    s.serialize_str(&format_rational(&r))
}

/// One annealing step. `after` is absent when the proposal was rejected as
/// invalid. `temperature` is the exact value of the binary64 number used in
/// the acceptance test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub before: Objective,
    pub after: Option<Objective>,
    pub kind: MoveKind,
    pub accepted: bool,
    #[serde(serialize_with = "float_as_rational")]
    pub temperature: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub iteration: u64,
    pub objective: Objective,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestartTrace {
    pub restart: usize,
    /// Records before this iteration were produced by an earlier run.
    pub first_iteration: u64,
    pub records: Vec<TraceRecord>,
    /// Every improvement of the best objective, starting at iteration 0.
    pub best_timeline: Vec<TimelinePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchTrace {
    pub restarts: Vec<RestartTrace>,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: Drawing,
    /// Verified against a full recount of `best`.
    pub best_objective: Objective,
    pub best_restart: usize,
    pub trace: SearchTrace,
}

struct Walker {
    restart: usize,
    rng: ChaCha8Rng,
    chain: Chain,
    iteration: u64,
    best: Objective,
    best_state: Snapshot,
    trace: RestartTrace,
}

struct Schedule {
    t0: f64,
    cooling: f64,
    weight: u64,
}

impl Schedule {
    fn temperature(&self, step: u64) -> f64 {
        self.t0 * self.cooling.powf(step as f64)
    }
}

impl Walker {
    fn step(&mut self, sampler: &Sampler, schedule: &Schedule) {
        let iteration = self.iteration + 1;
        let temperature = schedule.temperature(self.iteration);
        let before = self.chain.objective;
        let (kind, mv) = sampler.sample(
            &mut self.rng,
            self.chain.positions.len(),
            &self.chain.polylines,
        );
        let mut after = None;
        let mut accepted = false;
        if let Some(mv) = mv {
            if let Ok(pending) = self.chain.evaluate(&mv) {
                let next = pending.objective;
                let delta = next.score(schedule.weight) - before.score(schedule.weight);
                accepted =
                    delta <= 0 || self.rng.random::<f64>() < (-(delta as f64) / temperature).exp();
                after = Some(next);
                if accepted {
                    self.chain.commit(pending);
                } else {
                    self.chain.revert(pending);
                }
            }
        }
        if accepted && self.chain.objective < self.best {
            self.best = self.chain.objective;
            self.best_state = self.chain.snapshot();
            self.trace.best_timeline.push(TimelinePoint {
                iteration,
                objective: self.best,
            });
        }
        self.trace.records.push(TraceRecord {
            iteration,
            before,
            after,
            kind,
            accepted,
            temperature,
        });
        self.iteration = iteration;
    }
}

/// Per-restart part of a checkpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestartState {
    pub restart: usize,
    pub iteration: u64,
    /// ChaCha word position, as a decimal string.
    pub rng_word_pos: String,
    pub current: DrawingDoc,
    pub current_objective: Objective,
    pub best: DrawingDoc,
    pub best_objective: Objective,
    pub best_timeline: Vec<TimelinePoint>,
}

/// Sidecar record written next to a checkpoint drawing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchState {
    pub state_version: u32,
    pub config: SearchConfig,
    /// Common denominator of the lattice the chains live on.
    pub frame_scale: String,
    pub restarts: Vec<RestartState>,
}

/// Sidecar path for a checkpoint drawing file.
pub fn state_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".state.json");
    PathBuf::from(s)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> SearchError {
    SearchError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), SearchError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, text).map_err(|e| io_err(path, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Read the sidecar state of a checkpoint (given the drawing file's path).
pub fn load_state(checkpoint: &Path) -> Result<SearchState, SearchError> {
    let path = state_path(checkpoint);
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| SearchError::State(format!("{}: {e}", path.display())))
}

pub fn anneal(d0: &Drawing, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    anneal_with(d0, cfg, None, None)
}

/// [`anneal`] with optional checkpointing to `checkpoint` (best drawing so
/// far, plus a sidecar from [`state_path`]) and optional resumption from a
/// saved state. A resumed run continues each restart exactly where it
/// stopped, so its result equals that of an uninterrupted run.
pub fn anneal_with(
    d0: &Drawing,
    cfg: &SearchConfig,
    checkpoint: Option<&Path>,
    resume: Option<&SearchState>,
) -> Result<SearchOutcome, SearchError> {
    cfg.validate()?;
    let report = crate::drawing::validate(d0);
    if !report.is_valid {
        return Err(SearchError::InvalidDrawing(report));
    }
    let frame = match resume {
        Some(state) => {
            let scale: BigInt = state
                .frame_scale
                .parse()
                .map_err(|_| SearchError::State("frame_scale".into()))?;
            Frame::with_scale(scale).ok_or_else(|| SearchError::State("frame_scale".into()))?
        }
        None => Frame::fitting(d0.all_points(), cfg.lattice_denominator)
            .ok_or(SearchError::OutOfLattice)?,
    };
    let realize = |d: &Drawing| {
        d.realize_in(|p| frame.to_lattice(p))
            .ok_or(SearchError::OutOfLattice)
    };
    let sampler = Sampler::new(cfg, &frame);
    let schedule = Schedule {
        t0: cfg.initial_temperature.to_f64().unwrap_or(f64::MAX),
        cooling: cfg.cooling_factor.to_f64().unwrap_or(0.0),
        weight: triple_weight(d0.e()),
    };
    let base = Chain::new(realize(d0)?, cfg.max_bends_per_edge)
        .ok_or_else(|| SearchError::InvalidDrawing(report.clone()))?;

    let mut walkers = match resume {
        None => (0..cfg.restart_count)
            .map(|restart| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(restart as u64);
                Walker {
                    restart,
                    rng,
                    best: base.objective,
                    best_state: base.snapshot(),
                    trace: RestartTrace {
                        restart,
                        first_iteration: 1,
                        records: Vec::new(),
                        best_timeline: vec![TimelinePoint {
                            iteration: 0,
                            objective: base.objective,
                        }],
                    },
                    chain: base.clone(),
                    iteration: 0,
                }
            })
            .collect::<Vec<_>>(),
        Some(state) => resume_walkers(d0, cfg, state, &realize)?,
    };

    let chunk = if cfg.checkpoint_every == 0 {
        u64::MAX
    } else {
        cfg.checkpoint_every
    };
    loop {
        let pending = walkers.iter().any(|w| w.iteration < cfg.max_iterations);
        if !pending {
            break;
        }
        walkers.par_iter_mut().for_each(|w| {
            let stop = cfg.max_iterations.min(w.iteration.saturating_add(chunk));
            while w.iteration < stop {
                w.step(&sampler, &schedule);
            }
        });
        if let Some(path) = checkpoint {
            if cfg.checkpoint_every != 0 {
                write_checkpoint(path, cfg, &frame, d0, &walkers)?;
            }
        }
    }
    if let Some(path) = checkpoint {
        write_checkpoint(path, cfg, &frame, d0, &walkers)?;
    }

    let mut best: Option<(Objective, usize, Drawing)> = None;
    for w in &walkers {
        let d = w.best_state.to_drawing(&frame, d0);
        let recount = objective(&d)?;
        if recount != w.best {
            return Err(SearchError::Inconsistent {
                restart: w.restart,
                claimed: w.best,
                recount,
            });
        }
        if best.as_ref().is_none_or(|(o, _, _)| recount < *o) {
            best = Some((recount, w.restart, d));
        }
    }
    let (best_objective, best_restart, best) = best.expect("at least one restart");
    Ok(SearchOutcome {
        best,
        best_objective,
        best_restart,
        trace: SearchTrace {
            restarts: walkers.into_iter().map(|w| w.trace).collect(),
        },
    })
}

fn same_graph(a: &Drawing, b: &Drawing) -> bool {
    a.n() == b.n()
        && a.e() == b.e()
        && a.vertices()
            .iter()
            .zip(b.vertices())
            .all(|(x, y)| x.id == y.id)
        && a.edges()
            .iter()
            .zip(b.edges())
            .all(|(x, y)| x.u == y.u && x.v == y.v && x.tag == y.tag)
}

fn resume_walkers(
    d0: &Drawing,
    cfg: &SearchConfig,
    state: &SearchState,
    realize: &dyn Fn(&Drawing) -> Result<Realization<LatticePoint>, SearchError>,
) -> Result<Vec<Walker>, SearchError> {
    if state.state_version != STATE_VERSION {
        return Err(SearchError::State(format!(
            "unsupported state_version {}",
            state.state_version
        )));
    }
    if !cfg.same_chain(&state.config) {
        return Err(SearchError::ResumeMismatch(
            "configuration differs beyond max_iterations/checkpoint_every".into(),
        ));
    }
    if state.restarts.len() != cfg.restart_count
        || state
            .restarts
            .iter()
            .enumerate()
            .any(|(i, r)| r.restart != i)
    {
        return Err(SearchError::ResumeMismatch("restart list".into()));
    }
    state
        .restarts
        .iter()
        .map(|r| {
            let current = r.current.to_drawing()?;
            let best = r.best.to_drawing()?;
            if !same_graph(d0, &current) || !same_graph(d0, &best) {
                return Err(SearchError::ResumeMismatch(format!(
                    "restart {} draws a different graph",
                    r.restart
                )));
            }
            let invalid = |d: &Drawing| SearchError::InvalidDrawing(crate::drawing::validate(d));
            let chain = Chain::new(realize(&current)?, cfg.max_bends_per_edge)
                .ok_or_else(|| invalid(&current))?;
            if chain.objective != r.current_objective {
                return Err(SearchError::ResumeMismatch(format!(
                    "restart {} current objective",
                    r.restart
                )));
            }
            let best_chain = Chain::new(realize(&best)?, cfg.max_bends_per_edge)
                .ok_or_else(|| invalid(&best))?;
            if best_chain.objective != r.best_objective {
                return Err(SearchError::ResumeMismatch(format!(
                    "restart {} best objective",
                    r.restart
                )));
            }
            let word_pos: u128 = r
                .rng_word_pos
                .parse()
                .map_err(|_| SearchError::State("rng_word_pos".into()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r.restart as u64);
            rng.set_word_pos(word_pos);
            Ok(Walker {
                restart: r.restart,
                rng,
                chain,
                iteration: r.iteration,
                best: r.best_objective,
                best_state: best_chain.snapshot(),
                trace: RestartTrace {
                    restart: r.restart,
                    first_iteration: r.iteration + 1,
                    records: Vec::new(),
                    best_timeline: r.best_timeline.clone(),
                },
            })
        })
        .collect()
}

fn write_checkpoint(
    path: &Path,
    cfg: &SearchConfig,
    frame: &Frame,
    d0: &Drawing,
    walkers: &[Walker],
) -> Result<(), SearchError> {
    let restarts: Vec<RestartState> = walkers
        .iter()
        .map(|w| RestartState {
            restart: w.restart,
            iteration: w.iteration,
            rng_word_pos: w.rng.get_word_pos().to_string(),
            current: DrawingDoc::from_drawing(&w.chain.to_drawing(frame, d0)),
            current_objective: w.chain.objective,
            best: DrawingDoc::from_drawing(&w.best_state.to_drawing(frame, d0)),
            best_objective: w.best,
            best_timeline: w.trace.best_timeline.clone(),
        })
        .collect();
    let leader = walkers
        .iter()
        .min_by_key(|w| (w.best, w.restart))
        .expect("at least one restart");
    let state = SearchState {
        state_version: STATE_VERSION,
        config: cfg.clone(),
        frame_scale: frame.scale().to_string(),
        restarts,
    };
    let text = serde_json::to_string_pretty(&state).expect("state serializes") + "\n";
    write_atomic(&state_path(path), &text)?;
    write_atomic(
        path,
        &serialize_drawing(&leader.best_state.to_drawing(frame, d0)),
    )
}

/// Load a checkpoint's best drawing.
pub fn load_checkpoint_drawing(path: &Path) -> Result<Drawing, SearchError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(parse_drawing(&text)?)
}
