//! Combined analysis of one drawing and its machine-readable report.
//!
//! Every numeric value in the serialized reports is an exact rational string
//! or a JSON integer count.

use serde::Serialize;

use crate::bounds::{
    best_lower_bound, ceil, AlphaOptimum, BoundError, BoundInput, BoundReport, MeanEstimate,
    SubsampleStats,
};
use crate::crossing::{count_triples, CrossingGraph, TripleReport};
use crate::drawing::{scan_drawing, Drawing, ValidationReport, ViolationKind};
use crate::format::format_rational;
use crate::geometry::Point;

/// Validation plus, for simple drawings, crossings, triples and bounds.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub validation: ValidationReport,
    pub crossings: Option<CrossingGraph>,
    pub triples: Option<TripleReport>,
    pub bounds: Option<BoundReport>,
}

impl Analysis {
    pub fn of(d: &Drawing) -> Analysis {
        let (validation, links) = scan_drawing(d);
        let (crossings, triples) = if validation.is_valid {
            let g = CrossingGraph::new(d.e(), links);
            let t = count_triples(&g);
            (Some(g), Some(t))
        } else {
            (None, None)
        };
        let bounds = BoundInput::new(d.n() as u64, d.e() as u64)
            .ok()
            .and_then(|b| best_lower_bound(&b).ok());
        Analysis {
            validation,
            crossings,
            triples,
            bounds,
        }
    }

    /// The three pairwise crossing points of each triple, in triple order.
    pub fn triple_crossing_points(&self) -> Vec<[Point; 3]> {
        let (Some(g), Some(t)) = (&self.crossings, &self.triples) else {
            return Vec::new();
        };
        t.triples
            .iter()
            .map(|&[a, b, c]| {
                let at = |i, j| g.location(i, j).cloned().expect("triple links exist");
                [at(a, b), at(a, c), at(b, c)]
            })
            .collect()
    }

    pub fn to_result(&self, d: &Drawing) -> AnalysisResult {
        let pair = |k: usize| {
            let (u, v) = d.edge_ids(k);
            [u.to_string(), v.to_string()]
        };
        let point = |p: &Point| [format_rational(&p.x), format_rational(&p.y)];
        let validation = ValidationDoc {
            is_valid: self.validation.is_valid,
            violations: self
                .validation
                .violations
                .iter()
                .map(|v| ViolationDoc {
                    kind: v.kind,
                    edges: v.edges.iter().map(|&k| pair(k)).collect(),
                    vertex: v.vertex.map(|w| d.vertices()[w].id.clone()),
                    locations: v.locations.iter().map(point).collect(),
                })
                .collect(),
        };
        let crossings = self
            .crossings
            .as_ref()
            .map(|g| {
                g.links()
                    .iter()
                    .map(|(&(i, j), p)| CrossingDoc {
                        edges: [pair(i), pair(j)],
                        at: point(p),
                    })
                    .collect()
            })
            .unwrap_or_default();
        let triples = self
            .triples
            .as_ref()
            .map(|t| {
                t.triples
                    .iter()
                    .map(|&[a, b, c]| [pair(a), pair(b), pair(c)])
                    .collect()
            })
            .unwrap_or_default();
        AnalysisResult {
            validation,
            n: d.n(),
            e: d.e(),
            crossing_pair_count: self.crossings.as_ref().map(CrossingGraph::link_count),
            triple_count: self.triples.as_ref().map(|t| t.triple_count),
            triples,
            crossings,
            bounds: self.bounds.as_ref().map(BoundReportDoc::from),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnalysisResult {
    pub validation: ValidationDoc,
    pub n: usize,
    pub e: usize,
    pub crossing_pair_count: Option<usize>,
    pub triple_count: Option<usize>,
    /// Each triple as three endpoint-id pairs.
    pub triples: Vec<[[String; 2]; 3]>,
    pub crossings: Vec<CrossingDoc>,
    /// Present when `n >= 4`.
    pub bounds: Option<BoundReportDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationDoc {
    pub is_valid: bool,
    pub violations: Vec<ViolationDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViolationDoc {
    pub kind: ViolationKind,
    pub edges: Vec<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex: Option<String>,
    pub locations: Vec<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrossingDoc {
    pub edges: [[String; 2]; 2],
    pub at: [String; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlphaDoc {
    pub alpha: String,
    pub value: String,
    pub ceil: String,
}

impl From<&AlphaOptimum> for AlphaDoc {
    fn from(o: &AlphaOptimum) -> Self {
        AlphaDoc {
            alpha: format_rational(&o.alpha),
            value: format_rational(&o.bound),
            ceil: ceil(&o.bound).to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundReportDoc {
    pub n: u64,
    pub e: u64,
    pub eq1: String,
    pub eq1_ceil: String,
    /// At the fixed `alpha = 65/8`.
    pub eq2: Option<AlphaDoc>,
    pub eq2_optimized: Option<AlphaDoc>,
    pub best_integer_lower_bound: String,
}

impl From<&BoundReport> for BoundReportDoc {
    fn from(r: &BoundReport) -> Self {
        BoundReportDoc {
            n: r.input.n,
            e: r.input.e,
            eq1: format_rational(&r.eq1_value),
            eq1_ceil: ceil(&r.eq1_value).to_string(),
            eq2: r.eq2_value.as_ref().map(AlphaDoc::from),
            eq2_optimized: r.eq2_value_optimized.as_ref().map(AlphaDoc::from),
            best_integer_lower_bound: r.best_integer_lower_bound.to_string(),
        }
    }
}

pub fn bound_report_doc(n: u64, e: u64) -> Result<BoundReportDoc, BoundError> {
    let input = BoundInput::new(n, e)?;
    Ok(BoundReportDoc::from(&best_lower_bound(&input)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MeanDoc {
    pub mean: String,
    pub expected: String,
    pub standard_error_sq: String,
    pub within_3_standard_errors: bool,
}

impl From<&MeanEstimate> for MeanDoc {
    fn from(m: &MeanEstimate) -> Self {
        MeanDoc {
            mean: format_rational(&m.mean),
            expected: format_rational(&m.expected),
            standard_error_sq: format_rational(&m.standard_error_sq),
            within_3_standard_errors: m.within(3),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubsampleDoc {
    pub p: String,
    pub trials: u64,
    pub seed: u64,
    pub vertices: MeanDoc,
    pub edges: MeanDoc,
    pub triples: MeanDoc,
}

impl From<&SubsampleStats> for SubsampleDoc {
    fn from(s: &SubsampleStats) -> Self {
        SubsampleDoc {
            p: format_rational(&s.p),
            trials: s.trials,
            seed: s.seed,
            vertices: MeanDoc::from(&s.vertices),
            edges: MeanDoc::from(&s.edges),
            triples: MeanDoc::from(&s.triples),
        }
    }
}
