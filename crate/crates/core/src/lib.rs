//! Analysis and construction of simple drawings of graphs with few triples
//! of pairwise crossing edges.
//!
//! - [`geometry`]: exact predicates for segments and polylines.
//! - [`drawing`]: the drawing model, simplicity validation, generators.
//! - [`crossing`]: crossing graphs, triple counting, greedy edge deletion.
//! - [`bounds`]: lower bounds on the simple quasi crossing number and the
//!   vertex-subsampling harness.
//! - [`search`]: simulated annealing over drawings.
//! - [`format`], [`analysis`], [`svg`]: file format, reports, figure export.

pub mod analysis;
pub mod bounds;
pub mod crossing;
pub mod drawing;
pub mod format;
pub mod geometry;
pub mod search;
pub mod svg;

pub use crossing::{
    count_triples, count_triples_bruteforce, crossing_pairs, greedy_quasiplanarize, CrossingGraph,
    TripleReport,
};
pub use drawing::{
    affine_transform, convex_complete, subdrawing, validate, AffineMap, Drawing, EdgeSpec,
    ValidationReport, ViolationKind,
};
pub use geometry::{
    orientation, polyline_meetings, segment_meeting, MeetingKind, Orientation, Point, Rational,
    Segment,
};
