//! Drawings of graphs with straight or bend-routed edges, and the check that a
//! drawing is simple: any two edges meet at most once, either at a proper
//! crossing or at a shared endpoint.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::kernel::{self, Kernel};
use crate::geometry::lattice::{LatticeKernel, LatticePoint};
use crate::geometry::wide::{WideKernel, WideMeet, WidePoint};
use crate::geometry::{integer, Frame, MeetingKind, Point, Rational, RationalKernel};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DrawingError {
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertexId(String),
    #[error("vertices `{0}` and `{1}` share the position {2}")]
    DuplicatePosition(String, String, Box<Point>),
    #[error("edge {edge} references unknown vertex `{id}`")]
    UnknownEndpoint { edge: usize, id: String },
    #[error("edge {edge} is a loop at `{id}`")]
    SelfLoop { edge: usize, id: String },
    #[error("edge {edge} duplicates the pair `{u}`-`{v}`")]
    DuplicateEdge { edge: usize, u: String, v: String },
    #[error("edge {edge} repeats the point {point} consecutively")]
    RepeatedPoint { edge: usize, point: Box<Point> },
    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),
    #[error("affine map is singular")]
    SingularMap,
    #[error("convex generator needs 3 <= n <= 64, got {0}")]
    ConvexSize(usize),
    #[error("convex generator exhausted its retries; last violations: {0:?}")]
    ConvexRetriesExhausted(Vec<ViolationKind>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub id: String,
    pub pos: Point,
}

/// An edge between two vertex indices, routed through `bends` in order from
/// `u` to `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub bends: Vec<Point>,
    pub tag: Option<String>,
}

/// Edge description by vertex id, used to build drawings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSpec {
    pub u: String,
    pub v: String,
    pub bends: Vec<Point>,
    pub tag: Option<String>,
}

impl EdgeSpec {
    pub fn straight(u: impl Into<String>, v: impl Into<String>) -> Self {
        EdgeSpec {
            u: u.into(),
            v: v.into(),
            bends: Vec::new(),
            tag: None,
        }
    }

    pub fn with_bends(mut self, bends: Vec<Point>) -> Self {
        self.bends = bends;
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }
}

/// A drawing whose structural invariants hold: unique ids, distinct
/// positions, no loops, no parallel edges, no zero-length steps. Geometric
/// simplicity is a separate question answered by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Drawing {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

impl Drawing {
    pub fn new(vertices: Vec<(String, Point)>, edges: Vec<EdgeSpec>) -> Result<Self, DrawingError> {
        let mut index: HashMap<&str, usize> = HashMap::with_capacity(vertices.len());
        let mut at: HashMap<&Point, &str> = HashMap::with_capacity(vertices.len());
        for (i, (id, pos)) in vertices.iter().enumerate() {
            if index.insert(id.as_str(), i).is_some() {
                return Err(DrawingError::DuplicateVertexId(id.clone()));
            }
            if let Some(other) = at.insert(pos, id.as_str()) {
                return Err(DrawingError::DuplicatePosition(
                    other.to_string(),
                    id.clone(),
                    Box::new(pos.clone()),
                ));
            }
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut built = Vec::with_capacity(edges.len());
        for (k, spec) in edges.into_iter().enumerate() {
            let lookup = |id: &str| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| DrawingError::UnknownEndpoint {
                        edge: k,
                        id: id.to_string(),
                    })
            };
            let (u, v) = (lookup(&spec.u)?, lookup(&spec.v)?);
            if u == v {
                return Err(DrawingError::SelfLoop {
                    edge: k,
                    id: spec.u,
                });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(DrawingError::DuplicateEdge {
                    edge: k,
                    u: spec.u,
                    v: spec.v,
                });
            }
            let route = std::iter::once(&vertices[u].1)
                .chain(&spec.bends)
                .chain(std::iter::once(&vertices[v].1));
            let route: Vec<&Point> = route.collect();
            if let Some(w) = route.windows(2).find(|w| w[0] == w[1]) {
                return Err(DrawingError::RepeatedPoint {
                    edge: k,
                    point: Box::new(w[0].clone()),
                });
            }
            built.push(Edge {
                u,
                v,
                bends: spec.bends,
                tag: spec.tag,
            });
        }
        let vertices = vertices
            .into_iter()
            .map(|(id, pos)| Vertex { id, pos })
            .collect();
        Ok(Drawing {
            vertices,
            edges: built,
        })
    }

    pub fn empty() -> Self {
        Drawing {
            vertices: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Vertex count `n`.
    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    /// Edge count `e`.
    pub fn e(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    /// Endpoint ids of an edge, in stored order.
    pub fn edge_ids(&self, edge: usize) -> (&str, &str) {
        let e = &self.edges[edge];
        (&self.vertices[e.u].id, &self.vertices[e.v].id)
    }

    pub fn edge_label(&self, edge: usize) -> String {
        let (u, v) = self.edge_ids(edge);
        format!("{u}-{v}")
    }

    pub fn find_edge(&self, u: &str, v: &str) -> Option<usize> {
        (0..self.edges.len()).find(|&k| {
            let (a, b) = self.edge_ids(k);
            (a == u && b == v) || (a == v && b == u)
        })
    }

    /// The realized route `[pos(u), bends.., pos(v)]`.
    pub fn polyline(&self, edge: usize) -> Vec<Point> {
        let e = &self.edges[edge];
        let mut out = Vec::with_capacity(e.bends.len() + 2);
        out.push(self.vertices[e.u].pos.clone());
        out.extend(e.bends.iter().cloned());
        out.push(self.vertices[e.v].pos.clone());
        out
    }

    pub fn all_points(&self) -> impl Iterator<Item = &Point> {
        self.vertices
            .iter()
            .map(|v| &v.pos)
            .chain(self.edges.iter().flat_map(|e| e.bends.iter()))
    }

    /// Same vertices, with the listed edges removed.
    pub fn without_edges(&self, drop: &BTreeSet<usize>) -> Drawing {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(k, _)| !drop.contains(k))
            .map(|(_, e)| e.clone())
            .collect();
        Drawing {
            vertices: self.vertices.clone(),
            edges,
        }
    }

    /// Vertex and edge descriptions by id, as accepted by [`Drawing::new`].
    pub fn to_specs(&self) -> (Vec<(String, Point)>, Vec<EdgeSpec>) {
        let vs = self
            .vertices
            .iter()
            .map(|v| (v.id.clone(), v.pos.clone()))
            .collect();
        let es = self
            .edges
            .iter()
            .map(|e| EdgeSpec {
                u: self.vertices[e.u].id.clone(),
                v: self.vertices[e.v].id.clone(),
                bends: e.bends.clone(),
                tag: e.tag.clone(),
            })
            .collect();
        (vs, es)
    }

    pub(crate) fn realize(&self) -> Realized {
        if let Some(frame) = Frame::fitting(self.all_points(), 1) {
            if let Some(r) = self.realize_in(|p| frame.to_lattice(p)) {
                return Realized::Lattice(frame, r);
            }
        }
        let frame = Frame::common(self.all_points());
        let r = self
            .realize_in(|p| frame.to_wide(p))
            .expect("common frame holds every point");
        Realized::Wide(frame, r)
    }

    pub(crate) fn realize_exact(&self) -> Realization<Point> {
        self.realize_in(|p| Some(p.clone()))
            .expect("identity conversion")
    }

    pub(crate) fn realize_in<P>(
        &self,
        conv: impl Fn(&Point) -> Option<P>,
    ) -> Option<Realization<P>> {
        let positions = self
            .vertices
            .iter()
            .map(|v| conv(&v.pos))
            .collect::<Option<Vec<_>>>()?;
        let polylines = (0..self.edges.len())
            .map(|k| {
                self.polyline(k)
                    .iter()
                    .map(&conv)
                    .collect::<Option<Vec<_>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        let ends = self.edges.iter().map(|e| (e.u, e.v)).collect();
        Some(Realization {
            positions,
            polylines,
            ends,
        })
    }
}

/// A drawing's geometry in one kernel's point type.
#[derive(Clone, Debug)]
pub(crate) struct Realization<P> {
    pub positions: Vec<P>,
    pub polylines: Vec<Vec<P>>,
    pub ends: Vec<(usize, usize)>,
}

pub(crate) enum Realized {
    Lattice(Frame, Realization<LatticePoint>),
    Wide(Frame, Realization<WidePoint>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ViolationKind {
    MultipleMeetings,
    DegenerateContact,
    EdgeThroughVertex,
    SelfIntersection,
    ConcurrentCrossings,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending edge indices, ascending.
    pub edges: Vec<usize>,
    pub vertex: Option<usize>,
    pub locations: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub is_valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn kinds(&self) -> BTreeSet<ViolationKind> {
        self.violations.iter().map(|v| v.kind).collect()
    }
}

/// Kind, edges, vertex and locations of one violation before conversion.
pub(crate) type RawViolation<M> = (ViolationKind, Vec<usize>, Option<usize>, Vec<M>);

/// Raw result of one pass over all edges and edge pairs.
pub(crate) struct Scan<M> {
    pub violations: Vec<RawViolation<M>>,
    pub crossings: BTreeMap<(usize, usize), M>,
}

pub(crate) fn shared_endpoint(a: (usize, usize), b: (usize, usize)) -> Option<usize> {
    if a.0 == b.0 || a.0 == b.1 {
        Some(a.0)
    } else if a.1 == b.0 || a.1 == b.1 {
        Some(a.1)
    } else {
        None
    }
}

/// Outcome of checking one edge pair.
pub(crate) enum PairCheck<M> {
    /// Meet only at a shared endpoint, or not at all.
    Clear,
    Crossing(M),
    Bad(Vec<(ViolationKind, Vec<M>)>),
}

pub(crate) fn check_pair<K: Kernel>(
    r: &Realization<K::Pt>,
    vertex_meets: &HashSet<K::Meet>,
    i: usize,
    j: usize,
) -> PairCheck<K::Meet> {
    let shared = shared_endpoint(r.ends[i], r.ends[j]).map(|s| &r.positions[s]);
    classify_pair::<K>(&r.polylines[i], &r.polylines[j], shared, vertex_meets)
}

/// Classify how two edge routes meet. Touches located in `vertex_meets`
/// are left to the edge-through-vertex check.
pub(crate) fn classify_pair<K: Kernel>(
    a: &[K::Pt],
    b: &[K::Pt],
    shared: Option<&K::Pt>,
    vertex_meets: &HashSet<K::Meet>,
) -> PairCheck<K::Meet> {
    if a.len() == 2 && b.len() == 2 {
        match kernel::segment_meeting::<K>(&a[0], &a[1], &b[0], &b[1]) {
            MeetingKind::NoMeeting => return PairCheck::Clear,
            MeetingKind::ProperCrossing(p) => return PairCheck::Crossing(p),
            MeetingKind::EndpointContact(p) if shared.is_some_and(|s| K::at(s) == p) => {
                return PairCheck::Clear
            }
            _ => {}
        }
    }
    let shared_pts: &[K::Pt] = match shared {
        Some(s) => std::slice::from_ref(s),
        None => &[],
    };
    let meetings = kernel::polyline_meetings::<K>(a, b, shared_pts);
    if meetings.is_empty() {
        return PairCheck::Clear;
    }
    if meetings.len() == 1 {
        match &meetings[0] {
            MeetingKind::EndpointContact(_) => return PairCheck::Clear,
            MeetingKind::ProperCrossing(p) => return PairCheck::Crossing(p.clone()),
            _ => {}
        }
    }
    let mut bad = Vec::new();
    if meetings.len() > 1 {
        bad.push((
            ViolationKind::MultipleMeetings,
            meetings.iter().filter_map(|m| m.point().cloned()).collect(),
        ));
    }
    for m in &meetings {
        match m {
            // A touch at a vertex position is reported as the edge passing
            // through that vertex.
            MeetingKind::TouchDegenerate(p) if vertex_meets.contains(p) => {}
            MeetingKind::TouchDegenerate(p) => {
                bad.push((ViolationKind::DegenerateContact, vec![p.clone()]))
            }
            MeetingKind::OverlapDegenerate => {
                bad.push((ViolationKind::DegenerateContact, Vec::new()))
            }
            _ => {}
        }
    }
    if bad.is_empty() {
        // Lone touch at a vertex: covered by the edge-through-vertex check.
        PairCheck::Clear
    } else {
        PairCheck::Bad(bad)
    }
}

pub(crate) fn scan<K: Kernel>(r: &Realization<K::Pt>) -> Scan<K::Meet> {
    let m = r.polylines.len();
    let vertex_meets: HashSet<K::Meet> = r.positions.iter().map(K::at).collect();
    let mut violations = Vec::new();

    for (k, poly) in r.polylines.iter().enumerate() {
        if let Some(at) = kernel::self_intersection::<K>(poly) {
            violations.push((
                ViolationKind::SelfIntersection,
                vec![k],
                None,
                at.into_iter().collect(),
            ));
        }
        let (u, v) = r.ends[k];
        for (w, pos) in r.positions.iter().enumerate() {
            if w == u || w == v {
                continue;
            }
            if poly
                .windows(2)
                .any(|s| kernel::on_segment::<K>(pos, &s[0], &s[1]))
            {
                violations.push((
                    ViolationKind::EdgeThroughVertex,
                    vec![k],
                    Some(w),
                    vec![K::at(pos)],
                ));
            }
        }
    }

    let per_edge: Vec<Vec<(usize, PairCheck<K::Meet>)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (i + 1..m)
                .filter_map(|j| match check_pair::<K>(r, &vertex_meets, i, j) {
                    PairCheck::Clear => None,
                    c => Some((j, c)),
                })
                .collect()
        })
        .collect();

    let mut crossings = BTreeMap::new();
    for (i, row) in per_edge.into_iter().enumerate() {
        for (j, check) in row {
            match check {
                PairCheck::Clear => {}
                PairCheck::Crossing(p) => {
                    crossings.insert((i, j), p);
                }
                PairCheck::Bad(list) => {
                    for (kind, locs) in list {
                        violations.push((kind, vec![i, j], None, locs));
                    }
                }
            }
        }
    }

    let mut by_point: HashMap<&K::Meet, Vec<usize>> = HashMap::new();
    for ((i, j), p) in &crossings {
        let entry = by_point.entry(p).or_default();
        entry.push(*i);
        entry.push(*j);
    }
    for (p, mut edges) in by_point {
        if edges.len() > 2 {
            edges.sort_unstable();
            edges.dedup();
            violations.push((
                ViolationKind::ConcurrentCrossings,
                edges,
                None,
                vec![p.clone()],
            ));
        }
    }

    Scan {
        violations,
        crossings,
    }
}

pub(crate) fn report_from_scan<M>(
    violations: Vec<RawViolation<M>>,
    to_point: impl Fn(&M) -> Point,
) -> ValidationReport {
    let mut violations: Vec<Violation> = violations
        .into_iter()
        .map(|(kind, edges, vertex, locs)| {
            let mut locations: Vec<Point> = locs.iter().map(&to_point).collect();
            locations.sort();
            Violation {
                kind,
                edges,
                vertex,
                locations,
            }
        })
        .collect();
    violations.sort();
    ValidationReport {
        is_valid: violations.is_empty(),
        violations,
    }
}

/// Scan a drawing with whichever exact kernel fits its coordinates.
pub(crate) fn scan_drawing(d: &Drawing) -> (ValidationReport, BTreeMap<(usize, usize), Point>) {
    match d.realize() {
        Realized::Lattice(frame, r) => {
            let s = scan::<LatticeKernel>(&r);
            let to_point = |m: &crate::geometry::lattice::LatticeMeet| m.to_point(frame.scale());
            let crossings = s.crossings.iter().map(|(k, m)| (*k, to_point(m))).collect();
            (report_from_scan(s.violations, to_point), crossings)
        }
        Realized::Wide(frame, r) => {
            let s = scan::<WideKernel>(&r);
            let to_point = |m: &WideMeet| m.to_point(frame.scale());
            let crossings = s.crossings.iter().map(|(k, m)| (*k, to_point(m))).collect();
            (report_from_scan(s.violations, to_point), crossings)
        }
    }
}

pub(crate) fn scan_exact(
    r: &Realization<Point>,
) -> (ValidationReport, BTreeMap<(usize, usize), Point>) {
    let s = scan::<RationalKernel>(r);
    (report_from_scan(s.violations, Clone::clone), s.crossings)
}

pub fn validate(d: &Drawing) -> ValidationReport {
    scan_drawing(d).0
}

/// [`validate`] forced onto the arbitrary-precision kernel.
pub fn validate_exact(d: &Drawing) -> ValidationReport {
    scan_exact(&d.realize_exact()).0
}

const CONVEX_RETRIES: u32 = 8;

/// Straight-line complete graph on the parabola points `(i, i^2)`,
/// `i = 1..=n`, with vertex ids `"1".."n"` and edges in lexicographic order
/// of their endpoints. If the drawing is not simple, abscissa `i` is moved to
/// `i + 2^-(i + r - 1)` on retry `r`.
pub fn convex_complete(n: usize) -> Result<Drawing, DrawingError> {
    if !(3..=64).contains(&n) {
        return Err(DrawingError::ConvexSize(n));
    }
    let mut last = Vec::new();
    for retry in 0..=CONVEX_RETRIES {
        let vertices = (1..=n as i64)
            .map(|i| {
                let mut x = integer(i);
                if retry > 0 {
                    x += Rational::new(BigInt::one(), BigInt::from(2).pow((i as u32) + retry - 1));
                }
                (i.to_string(), Point::new(x, integer(i * i)))
            })
            .collect();
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for i in 1..=n {
            for j in i + 1..=n {
                edges.push(EdgeSpec::straight(i.to_string(), j.to_string()));
            }
        }
        let d = Drawing::new(vertices, edges)?;
        let report = validate(&d);
        if report.is_valid {
            return Ok(d);
        }
        last = report.kinds().into_iter().collect();
    }
    Err(DrawingError::ConvexRetriesExhausted(last))
}

/// `(x, y) -> (a x + b y + c, d x + e y + f)` with `a e - b d != 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    coeffs: [Rational; 6],
}

impl AffineMap {
    pub fn new(coeffs: [Rational; 6]) -> Result<Self, DrawingError> {
        let det = &coeffs[0] * &coeffs[4] - &coeffs[1] * &coeffs[3];
        if det.is_zero() {
            return Err(DrawingError::SingularMap);
        }
        Ok(AffineMap { coeffs })
    }

    pub fn from_ints(c: [i64; 6]) -> Result<Self, DrawingError> {
        Self::new(c.map(integer))
    }

    pub fn identity() -> Self {
        Self::from_ints([1, 0, 0, 0, 1, 0]).expect("nonsingular")
    }

    pub fn apply(&self, p: &Point) -> Point {
        let c = &self.coeffs;
        Point::new(
            &c[0] * &p.x + &c[1] * &p.y + &c[2],
            &c[3] * &p.x + &c[4] * &p.y + &c[5],
        )
    }
}

pub fn affine_transform(d: &Drawing, m: &AffineMap) -> Drawing {
    Drawing {
        vertices: d
            .vertices
            .iter()
            .map(|v| Vertex {
                id: v.id.clone(),
                pos: m.apply(&v.pos),
            })
            .collect(),
        edges: d
            .edges
            .iter()
            .map(|e| Edge {
                bends: e.bends.iter().map(|b| m.apply(b)).collect(),
                ..e.clone()
            })
            .collect(),
    }
}

/// The induced sub-drawing on `keep`, with edges keeping their routes.
pub fn subdrawing<'a>(
    d: &Drawing,
    keep: impl IntoIterator<Item = &'a str>,
) -> Result<Drawing, DrawingError> {
    let mut mask = vec![false; d.n()];
    for id in keep {
        let i = d
            .vertex_index(id)
            .ok_or_else(|| DrawingError::UnknownVertex(id.to_string()))?;
        mask[i] = true;
    }
    Ok(subdrawing_by_mask(d, &mask))
}

pub(crate) fn subdrawing_by_mask(d: &Drawing, keep: &[bool]) -> Drawing {
    let mut new_index = vec![usize::MAX; d.n()];
    let mut vertices = Vec::new();
    for (i, v) in d.vertices.iter().enumerate() {
        if keep[i] {
            new_index[i] = vertices.len();
            vertices.push(v.clone());
        }
    }
    let edges = d
        .edges
        .iter()
        .filter(|e| keep[e.u] && keep[e.v])
        .map(|e| Edge {
            u: new_index[e.u],
            v: new_index[e.v],
            ..e.clone()
        })
        .collect();
    Drawing { vertices, edges }
}
