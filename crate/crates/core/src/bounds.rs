//! Lower bounds on the simple quasi crossing number `cr3(G)`.
//!
//! A simple quasi-planar graph on `n >= 4` vertices has at most `6.5n - 20`
//! edges, so deleting one edge per triple gives the linear bound
//! `cr3(G) >= e - 6.5n + 20`. Applying it to the subgraph induced by keeping
//! each vertex with probability `p = alpha n / e` amplifies it to
//!
//! ```text
//! cr3(G) >= ((alpha - 6.5) / alpha^5) e^5 / n^4 + 20 e^6 / (alpha^6 n^6)
//! ```
//!
//! for `e >= alpha n`. All values here are exact rationals; ceilings are
//! taken only when forming the final integer bound.
//!
//! The linear bound is stated only for `n >= 4`, and the amplification step
//! applies it to random subgraphs that may be smaller; the amplified formula
//! is implemented as printed, without correcting for that.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::crossing::{analyze_triples, AnalysisError};
use crate::drawing::Drawing;
use crate::geometry::{integer, rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoundError {
    #[error("the linear bound needs n >= 4, got n = {0}")]
    TooFewVertices(u64),
    #[error("a simple graph on {n} vertices has at most n(n-1)/2 edges, got {e}")]
    TooManyEdges { n: u64, e: u64 },
    #[error("alpha = {0} must exceed 13/2")]
    AlphaTooSmall(Rational),
    #[error("alpha = {alpha} exceeds the edge density e/n = {density}, so p = alpha n / e > 1")]
    AlphaAboveDensity {
        alpha: Box<Rational>,
        density: Box<Rational>,
    },
    #[error("the amplified bound needs e/n > 13/2, got e/n = {0}")]
    DensityTooLow(Rational),
    #[error("sampling probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(Rational),
    #[error("sampling probability denominator {0} does not fit in 64 bits")]
    ProbabilityTooFine(BigInt),
    #[error("at least one trial is required")]
    NoTrials,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Vertex count `n` and edge count `e` of a simple graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundInput {
    pub n: u64,
    pub e: u64,
}

impl BoundInput {
    pub fn new(n: u64, e: u64) -> Result<Self, BoundError> {
        if e > n * n.saturating_sub(1) / 2 {
            return Err(BoundError::TooManyEdges { n, e });
        }
        Ok(BoundInput { n, e })
    }

    /// `K_n`.
    pub fn complete(n: u64) -> Self {
        BoundInput {
            n,
            e: n * n.saturating_sub(1) / 2,
        }
    }

    /// `e / n`, the largest admissible `alpha`.
    pub fn density(&self) -> Rational {
        Rational::new(BigInt::from(self.e), BigInt::from(self.n.max(1)))
    }
}

/// Amplification parameter, `6.5 < alpha <= e/n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaParam(Rational);

impl AlphaParam {
    pub fn new(alpha: Rational, input: &BoundInput) -> Result<Self, BoundError> {
        if alpha <= thirteen_halves() {
            return Err(BoundError::AlphaTooSmall(alpha));
        }
        let density = input.density();
        if alpha > density {
            return Err(BoundError::AlphaAboveDensity {
                alpha: Box::new(alpha),
                density: Box::new(density),
            });
        }
        Ok(AlphaParam(alpha))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    /// The sampling probability `p = alpha n / e`.
    pub fn probability(&self, input: &BoundInput) -> Rational {
        &self.0 / input.density()
    }
}

fn thirteen_halves() -> Rational {
    rational(13, 2)
}

fn pow(r: &Rational, k: u32) -> Rational {
    num_traits::pow(r.clone(), k as usize)
}

/// `e - (13/2) n + 20`; negative values are returned as is.
pub fn eq1_bound(input: &BoundInput) -> Result<Rational, BoundError> {
    if input.n < 4 {
        return Err(BoundError::TooFewVertices(input.n));
    }
    Ok(integer(input.e as i64) - thirteen_halves() * integer(input.n as i64) + integer(20))
}

/// Coefficients of `e^5/n^4` and `e^6/n^6` in the amplified bound:
/// `(alpha - 6.5) / alpha^5` and `20 / alpha^6`.
pub fn eq2_coefficients(alpha: &Rational) -> (Rational, Rational) {
    let first = (alpha - thirteen_halves()) / pow(alpha, 5);
    let second = integer(20) / pow(alpha, 6);
    (first, second)
}

fn eq2_unchecked(input: &BoundInput, alpha: &Rational) -> Rational {
    let e = integer(input.e as i64);
    let n = integer(input.n as i64);
    let (c1, c2) = eq2_coefficients(alpha);
    c1 * pow(&e, 5) / pow(&n, 4) + c2 * pow(&e, 6) / pow(&n, 6)
}

pub fn eq2_bound(input: &BoundInput, alpha: &AlphaParam) -> Rational {
    eq2_unchecked(input, alpha.value())
}

/// The maximizer of `(alpha - 6.5) / alpha^5`: the derivative's numerator is
/// `5 * 6.5 - 4 alpha`, so `alpha = (5/4) * 6.5 = 65/8`.
pub fn optimal_alpha_first_term() -> Rational {
    rational(5, 4) * thirteen_halves()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaOptimum {
    pub alpha: Rational,
    pub bound: Rational,
}

const GRID: i64 = 64;
const DYADIC_BITS: usize = 64;

fn snap(r: &Rational) -> Rational {
    let den = BigInt::one() << DYADIC_BITS;
    Rational::new(
        (r * Rational::from_integer(den.clone()))
            .floor()
            .to_integer(),
        den,
    )
}

/// Maximize the full amplified bound over `alpha` in `(6.5, e/n]`.
///
/// The derivative's sign is that of a concave quadratic in `alpha`, so the
/// objective may fall, rise, then fall again; plain ternary search is not
/// safe. A uniform grid locates the best cell, golden-section search refines
/// inside it to a relative width of `1e-9`, and the fixed `alpha = 65/8`
/// (when admissible) competes as a candidate so the result always dominates
/// it. Evaluation is exact at every candidate.
pub fn optimize_alpha(input: &BoundInput) -> Result<AlphaOptimum, BoundError> {
    let lo = thirteen_halves();
    let hi = input.density();
    if hi <= lo {
        return Err(BoundError::DensityTooLow(hi));
    }
    let width = &hi - &lo;
    let at = |k: i64| &lo + &width * rational(k, GRID);
    // Open lower end: start just inside it.
    let first = &lo + &width / Rational::from_integer(BigInt::one() << 40usize);
    let mut grid: Vec<Rational> = std::iter::once(first).chain((1..=GRID).map(at)).collect();
    grid.dedup();
    let values: Vec<Rational> = grid.iter().map(|a| eq2_unchecked(input, a)).collect();
    let best = (0..grid.len())
        .max_by(|&a, &b| values[a].cmp(&values[b]).then(b.cmp(&a)))
        .expect("grid");

    let mut a = if best == 0 {
        lo.clone()
    } else {
        grid[best - 1].clone()
    };
    let mut b = grid.get(best + 1).cloned().unwrap_or_else(|| hi.clone());
    let inv_phi = rational(6_180_339_887, 10_000_000_000);
    let tol = rational(1, 1_000_000_000);
    let inside = |x: Rational, a: &Rational, b: &Rational| {
        let x = snap(&x);
        if x <= *a || x >= *b {
            (a + b) / integer(2)
        } else {
            x
        }
    };
    let mut c = inside(&b - (&b - &a) * &inv_phi, &a, &b);
    let mut d = inside(&a + (&b - &a) * &inv_phi, &a, &b);
    let mut fc = eq2_unchecked(input, &c);
    let mut fd = eq2_unchecked(input, &d);
    while &b - &a > &tol * &b && c < d {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = inside(&b - (&b - &a) * &inv_phi, &a, &b);
            fc = eq2_unchecked(input, &c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = inside(&a + (&b - &a) * &inv_phi, &a, &b);
            fd = eq2_unchecked(input, &d);
        }
    }

    let mut candidates = vec![(c, fc), (d, fd), (grid[best].clone(), values[best].clone())];
    let fixed = optimal_alpha_first_term();
    if fixed <= hi {
        let v = eq2_unchecked(input, &fixed);
        candidates.push((fixed, v));
    }
    let (alpha, bound) = candidates
        .into_iter()
        .max_by(|x, y| x.1.cmp(&y.1).then_with(|| y.0.cmp(&x.0)))
        .expect("candidates");
    Ok(AlphaOptimum { alpha, bound })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub input: BoundInput,
    pub eq1_value: Rational,
    /// Amplified bound at the fixed `alpha = 65/8`, when admissible.
    pub eq2_value: Option<AlphaOptimum>,
    /// Amplified bound at the optimized `alpha`, when `e/n > 6.5`.
    pub eq2_value_optimized: Option<AlphaOptimum>,
    pub best_integer_lower_bound: BigInt,
}

pub fn ceil(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

pub fn best_lower_bound(input: &BoundInput) -> Result<BoundReport, BoundError> {
    let eq1_value = eq1_bound(input)?;
    let fixed = optimal_alpha_first_term();
    let eq2_value = AlphaParam::new(fixed.clone(), input)
        .ok()
        .map(|a| AlphaOptimum {
            bound: eq2_bound(input, &a),
            alpha: fixed,
        });
    let eq2_value_optimized = optimize_alpha(input).ok();
    let best = [
        Some(&eq1_value),
        eq2_value.as_ref().map(|o| &o.bound),
        eq2_value_optimized.as_ref().map(|o| &o.bound),
    ]
    .into_iter()
    .flatten()
    .map(ceil)
    .fold(BigInt::zero(), |acc, c| acc.max(c));
    Ok(BoundReport {
        input: *input,
        eq1_value,
        eq2_value,
        eq2_value_optimized,
        best_integer_lower_bound: best,
    })
}

pub fn complete_graph_bound(n: u64) -> Result<BoundReport, BoundError> {
    best_lower_bound(&BoundInput::complete(n))
}

/// Sample mean of one statistic over the trials, its exact expectation, and
/// the squared standard error of the mean.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeanEstimate {
    pub mean: Rational,
    pub expected: Rational,
    pub standard_error_sq: Rational,
}

impl MeanEstimate {
    fn from_samples(samples: impl Iterator<Item = u64>, trials: u64, expected: Rational) -> Self {
        let (sum, sum_sq) = samples.fold((BigInt::zero(), BigInt::zero()), |(s, q), x| {
            let x = BigInt::from(x);
            (s + &x, q + &x * &x)
        });
        let n = BigInt::from(trials);
        let mean = Rational::new(sum.clone(), n.clone());
        let standard_error_sq = if trials < 2 {
            Rational::zero()
        } else {
            // (sum_sq - sum^2/N) / (N (N - 1))
            let centered = Rational::from_integer(sum_sq) - Rational::new(&sum * &sum, n.clone());
            centered / Rational::from_integer(&n * (&n - 1))
        };
        MeanEstimate {
            mean,
            expected,
            standard_error_sq,
        }
    }

    /// `|mean - expected| <= k` standard errors, decided exactly on squares.
    pub fn within(&self, k: u32) -> bool {
        let dev = &self.mean - &self.expected;
        &dev * &dev <= integer((k * k) as i64) * &self.standard_error_sq
    }

    pub fn standard_error(&self) -> f64 {
        self.standard_error_sq.to_f64().unwrap_or(f64::NAN).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsampleStats {
    pub p: Rational,
    pub trials: u64,
    pub seed: u64,
    /// `n_H`, expectation `p n`.
    pub vertices: MeanEstimate,
    /// `e_H`, expectation `p^2 e`.
    pub edges: MeanEstimate,
    /// Triples of the sub-drawing, expectation `p^6 T`: a triple survives
    /// exactly when its six distinct endpoints do.
    pub triples: MeanEstimate,
}

/// Vertex mask of one trial. Trial `t` draws from ChaCha8 seeded with
/// `seed_from_u64(seed)` on stream `t`; vertex `i` (in drawing order) is kept
/// iff a uniform draw from `0..den(p)` is below `num(p)`.
pub fn subsample_mask(
    n: usize,
    p: &Rational,
    seed: u64,
    trial: u64,
) -> Result<Vec<bool>, BoundError> {
    let (num, den) = probability_parts(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    Ok((0..n).map(|_| rng.random_range(0..den) < num).collect())
}

fn probability_parts(p: &Rational) -> Result<(u64, u64), BoundError> {
    if p.is_negative() || *p > Rational::one() {
        return Err(BoundError::ProbabilityOutOfRange(p.clone()));
    }
    let den = p
        .denom()
        .to_u64()
        .ok_or_else(|| BoundError::ProbabilityTooFine(p.denom().clone()))?;
    let num = p.numer().to_u64().expect("0 <= p <= 1");
    Ok((num, den))
}

/// Keep each vertex independently with probability `p` and record the
/// induced sub-drawing's vertex, edge and triple counts, `trials` times.
/// Sub-drawings keep their routes, so their crossing graph is the induced
/// subgraph of the original one and is counted as such.
pub fn monte_carlo_subsample(
    d: &Drawing,
    p: &Rational,
    trials: u64,
    seed: u64,
) -> Result<SubsampleStats, BoundError> {
    if trials == 0 {
        return Err(BoundError::NoTrials);
    }
    probability_parts(p)?;
    let (graph, report) = analyze_triples(d)?;
    let bits = graph.bits();
    let words = bits.words();

    let samples: Vec<(u64, u64, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let keep = subsample_mask(d.n(), p, seed, t).expect("probability checked");
            let mut alive = vec![0u64; words];
            let mut e_h = 0u64;
            for (k, e) in d.edges().iter().enumerate() {
                if keep[e.u] && keep[e.v] {
                    alive[k / 64] |= 1 << (k % 64);
                    e_h += 1;
                }
            }
            let n_h = keep.iter().filter(|&&b| b).count() as u64;
            (n_h, e_h, bits.triangles_within(&alive) as u64)
        })
        .collect();

    let pn = |k: u32, x: usize| num_traits::pow(p.clone(), k as usize) * integer(x as i64);
    Ok(SubsampleStats {
        p: p.clone(),
        trials,
        seed,
        vertices: MeanEstimate::from_samples(samples.iter().map(|s| s.0), trials, pn(1, d.n())),
        edges: MeanEstimate::from_samples(samples.iter().map(|s| s.1), trials, pn(2, d.e())),
        triples: MeanEstimate::from_samples(
            samples.iter().map(|s| s.2),
            trials,
            pn(6, report.triple_count),
        ),
    })
}
