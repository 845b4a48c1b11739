//! Exact rational geometry for segments and polylines.
//!
//! Every incidence decision is made with exact arithmetic. The public
//! functions here work on arbitrary-precision rationals; analysis of whole
//! drawings runs on integer coordinates over a common denominator, in the
//! 64-bit [`lattice`] kernel when they are small enough and in the [`wide`]
//! kernel otherwise.

pub mod kernel;
pub mod lattice;
pub mod wide;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use kernel::Kernel;
use lattice::{LatticePoint, COORD_LIMIT};

/// Arbitrary-precision rational, always in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn integer(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub x: Rational,
    pub y: Rational,
}

impl Point {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Point::new(integer(x), integer(y))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    a: Point,
    b: Point,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("zero-length segment at {0}")]
pub struct ZeroLengthSegment(pub Box<Point>);

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self, ZeroLengthSegment> {
        if a == b {
            return Err(ZeroLengthSegment(Box::new(a)));
        }
        Ok(Segment { a, b })
    }

    pub fn a(&self) -> &Point {
        &self.a
    }

    pub fn b(&self) -> &Point {
        &self.b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Left,
    Right,
    Collinear,
}

impl Orientation {
    pub fn reversed(self) -> Self {
        match self {
            Orientation::Left => Orientation::Right,
            Orientation::Right => Orientation::Left,
            Orientation::Collinear => Orientation::Collinear,
        }
    }
}

/// Classified contact between two segments or two polylines.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeetingKind<P = Point> {
    NoMeeting,
    /// Transversal crossing strictly inside both curves.
    ProperCrossing(P),
    /// Meeting at an endpoint of both (segments) or at a shared graph
    /// endpoint (polylines).
    EndpointContact(P),
    /// Non-transversal contact away from a shared endpoint.
    TouchDegenerate(P),
    /// Collinear overlap of positive length.
    OverlapDegenerate,
}

impl<P> MeetingKind<P> {
    pub fn point(&self) -> Option<&P> {
        match self {
            MeetingKind::ProperCrossing(p)
            | MeetingKind::EndpointContact(p)
            | MeetingKind::TouchDegenerate(p) => Some(p),
            MeetingKind::NoMeeting | MeetingKind::OverlapDegenerate => None,
        }
    }

    pub fn is_proper(&self) -> bool {
        matches!(self, MeetingKind::ProperCrossing(_))
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            MeetingKind::TouchDegenerate(_) | MeetingKind::OverlapDegenerate
        )
    }

    pub fn map<Q>(self, f: impl FnOnce(P) -> Q) -> MeetingKind<Q> {
        match self {
            MeetingKind::NoMeeting => MeetingKind::NoMeeting,
            MeetingKind::ProperCrossing(p) => MeetingKind::ProperCrossing(f(p)),
            MeetingKind::EndpointContact(p) => MeetingKind::EndpointContact(f(p)),
            MeetingKind::TouchDegenerate(p) => MeetingKind::TouchDegenerate(f(p)),
            MeetingKind::OverlapDegenerate => MeetingKind::OverlapDegenerate,
        }
    }
}

pub struct RationalKernel;

impl Kernel for RationalKernel {
    type Pt = Point;
    type Meet = Point;

    fn orient(p: &Point, q: &Point, r: &Point) -> Orientation {
        let cross = (&q.x - &p.x) * (&r.y - &p.y) - (&q.y - &p.y) * (&r.x - &p.x);
        match cross.cmp(&Rational::zero()) {
            Ordering::Greater => Orientation::Left,
            Ordering::Less => Orientation::Right,
            Ordering::Equal => Orientation::Collinear,
        }
    }

    fn cmp_x(p: &Point, q: &Point) -> Ordering {
        p.x.cmp(&q.x)
    }

    fn cmp_y(p: &Point, q: &Point) -> Ordering {
        p.y.cmp(&q.y)
    }

    fn at(p: &Point) -> Point {
        p.clone()
    }

    fn cross_point(a: &Point, b: &Point, c: &Point, d: &Point) -> Point {
        let (rx, ry) = (&b.x - &a.x, &b.y - &a.y);
        let (sx, sy) = (&d.x - &c.x, &d.y - &c.y);
        let den = &rx * &sy - &ry * &sx;
        let t = ((&c.x - &a.x) * &sy - (&c.y - &a.y) * &sx) / den;
        Point::new(&a.x + &t * rx, &a.y + &t * ry)
    }
}

/// Sign of `(q - p) x (r - p)`.
pub fn orientation(p: &Point, q: &Point, r: &Point) -> Orientation {
    RationalKernel::orient(p, q, r)
}

pub fn segment_meeting(s1: &Segment, s2: &Segment) -> MeetingKind {
    kernel::segment_meeting::<RationalKernel>(&s1.a, &s1.b, &s2.a, &s2.b)
}

/// Meetings between two polylines. Contacts at any point of
/// `shared_graph_endpoints` are reported as [`MeetingKind::EndpointContact`];
/// a transversal pass through a bend counts as a single crossing.
pub fn polyline_meetings(
    a: &[Point],
    b: &[Point],
    shared_graph_endpoints: &[Point],
) -> Vec<MeetingKind> {
    assert!(
        a.len() >= 2 && b.len() >= 2,
        "polylines need at least two points"
    );
    let mut out = kernel::polyline_meetings::<RationalKernel>(a, b, shared_graph_endpoints);
    out.sort();
    out
}

/// Common integer frame for a set of rational points: multiplying every
/// coordinate by `scale` yields integers bounded by [`COORD_LIMIT`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    scale: BigInt,
}

impl Frame {
    /// The smallest frame containing every point, if one fits the lattice
    /// bounds. `base` is folded into the denominator (use 1 for none).
    pub fn fitting<'a>(points: impl IntoIterator<Item = &'a Point>, base: u64) -> Option<Frame> {
        let mut scale = BigInt::from(base.max(1));
        let mut max_abs = Rational::zero();
        for p in points {
            for c in [&p.x, &p.y] {
                scale = scale.lcm(c.denom());
                let a = c.abs();
                if a > max_abs {
                    max_abs = a;
                }
            }
        }
        let frame = Frame { scale };
        let limit = Rational::from_integer(BigInt::from(COORD_LIMIT));
        (max_abs * Rational::from_integer(frame.scale.clone()) <= limit).then_some(frame)
    }

    /// The smallest frame containing every point, with no size limit.
    pub fn common<'a>(points: impl IntoIterator<Item = &'a Point>) -> Frame {
        let scale = points
            .into_iter()
            .fold(BigInt::one(), |s, p| s.lcm(p.x.denom()).lcm(p.y.denom()));
        Frame { scale }
    }

    /// Exact conversion; `None` if `p` is not on this frame's grid.
    pub fn to_wide(&self, p: &Point) -> Option<wide::WidePoint> {
        let conv = |c: &Rational| {
            let v = c * Rational::from_integer(self.scale.clone());
            v.is_integer().then(|| v.to_integer())
        };
        Some(wide::WidePoint {
            x: conv(&p.x)?,
            y: conv(&p.y)?,
        })
    }

    /// A frame with a given denominator; points are checked on conversion.
    pub fn with_scale(scale: BigInt) -> Option<Frame> {
        scale.is_positive().then_some(Frame { scale })
    }

    pub fn scale(&self) -> &BigInt {
        &self.scale
    }

    pub fn to_lattice(&self, p: &Point) -> Option<LatticePoint> {
        let conv = |c: &Rational| -> Option<i64> {
            let v = c * Rational::from_integer(self.scale.clone());
            if !v.is_integer() {
                return None;
            }
            let v = v.to_integer().to_i64()?;
            (v.abs() <= COORD_LIMIT).then_some(v)
        };
        Some(LatticePoint::new(conv(&p.x)?, conv(&p.y)?))
    }

    pub fn to_point(&self, p: &LatticePoint) -> Point {
        Point::new(
            Rational::new(BigInt::from(p.x), self.scale.clone()),
            Rational::new(BigInt::from(p.y), self.scale.clone()),
        )
    }

    pub fn is_unit(&self) -> bool {
        self.scale.is_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: i64, y: i64) -> Point {
        Point::from_ints(x, y)
    }

    fn seg(a: (i64, i64), b: (i64, i64)) -> Segment {
        Segment::new(p(a.0, a.1), p(b.0, b.1)).unwrap()
    }

    fn pts(v: &[(i64, i64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| p(x, y)).collect()
    }

    #[test]
    fn orientation_examples() {
        assert_eq!(orientation(&p(0, 0), &p(1, 0), &p(0, 1)), Orientation::Left);
        assert_eq!(
            orientation(&p(0, 0), &p(1, 1), &p(2, 2)),
            Orientation::Collinear
        );
        assert_eq!(
            orientation(&p(0, 0), &p(0, 1), &p(1, 1)),
            Orientation::Right
        );
    }

    #[test]
    fn zero_length_segment_rejected() {
        assert!(Segment::new(p(1, 1), p(1, 1)).is_err());
    }

    #[test]
    fn segment_meeting_examples() {
        assert_eq!(
            segment_meeting(&seg((0, 0), (2, 2)), &seg((0, 2), (2, 0))),
            MeetingKind::ProperCrossing(p(1, 1))
        );
        assert_eq!(
            segment_meeting(&seg((0, 0), (1, 0)), &seg((0, 0), (0, 1))),
            MeetingKind::EndpointContact(p(0, 0))
        );
        assert_eq!(
            segment_meeting(&seg((0, 0), (2, 0)), &seg((1, 0), (3, 0))),
            MeetingKind::OverlapDegenerate
        );
        assert_eq!(
            segment_meeting(&seg((0, 0), (2, 0)), &seg((1, 0), (1, 2))),
            MeetingKind::TouchDegenerate(p(1, 0))
        );
    }

    #[test]
    fn collinear_segments_touching_end_to_end() {
        assert_eq!(
            segment_meeting(&seg((0, 0), (1, 0)), &seg((1, 0), (3, 0))),
            MeetingKind::EndpointContact(p(1, 0))
        );
        assert_eq!(
            segment_meeting(&seg((0, 0), (1, 0)), &seg((2, 0), (3, 0))),
            MeetingKind::NoMeeting
        );
    }

    #[test]
    fn crossing_point_is_exact() {
        let m = segment_meeting(&seg((0, 0), (3, 1)), &seg((0, 1), (1, 0)));
        assert_eq!(
            m,
            MeetingKind::ProperCrossing(Point::new(rational(3, 4), rational(1, 4)))
        );
    }

    #[test]
    fn polyline_straight_crossing() {
        let m = polyline_meetings(&pts(&[(0, 0), (2, 2)]), &pts(&[(0, 2), (2, 0)]), &[]);
        assert_eq!(m, vec![MeetingKind::ProperCrossing(p(1, 1))]);
    }

    #[test]
    fn polyline_touch_at_apex() {
        // The apex of the tent sits on the horizontal line; two segment
        // pairs meet there but it is a single non-transversal contact.
        let a = pts(&[(0, 0), (1, 1), (2, 0)]);
        let b = pts(&[(0, 1), (2, 1)]);
        let segment_level: Vec<_> = a
            .windows(2)
            .map(|w| {
                segment_meeting(
                    &Segment::new(w[0].clone(), w[1].clone()).unwrap(),
                    &seg((0, 1), (2, 1)),
                )
            })
            .filter(|m| *m != MeetingKind::NoMeeting)
            .collect();
        assert_eq!(segment_level.len(), 2);
        assert!(segment_level.iter().all(|m| m.point() == Some(&p(1, 1))));
        assert_eq!(
            polyline_meetings(&a, &b, &[]),
            vec![MeetingKind::TouchDegenerate(p(1, 1))]
        );
    }

    #[test]
    fn polyline_tent_crossing_line_twice() {
        let a = pts(&[(0, 0), (1, 2), (2, 0)]);
        let b = pts(&[(0, 1), (2, 1)]);
        let m = polyline_meetings(&a, &b, &[]);
        assert_eq!(
            m,
            vec![
                MeetingKind::ProperCrossing(Point::new(rational(1, 2), integer(1))),
                MeetingKind::ProperCrossing(Point::new(rational(3, 2), integer(1))),
            ]
        );
    }

    #[test]
    fn crossing_through_bend_counts_once() {
        let a = pts(&[(0, 0), (2, 0)]);
        let b = pts(&[(1, -1), (1, 0), (1, 1)]);
        assert_eq!(
            polyline_meetings(&a, &b, &[]),
            vec![MeetingKind::ProperCrossing(p(1, 0))]
        );
        assert_eq!(
            polyline_meetings(&b, &a, &[]),
            vec![MeetingKind::ProperCrossing(p(1, 0))]
        );
    }

    #[test]
    fn bend_meets_bend() {
        // Two V shapes sharing their apex, crossing transversally.
        let a = pts(&[(-1, -1), (0, 0), (1, -1)]);
        let b = pts(&[(-1, 1), (0, 0), (-1, -2)]);
        assert_eq!(
            polyline_meetings(&a, &b, &[]),
            vec![MeetingKind::ProperCrossing(p(0, 0))]
        );
        // Nested wedges only touch.
        let c = pts(&[(-1, -2), (0, 0), (1, -2)]);
        assert_eq!(
            polyline_meetings(&a, &c, &[]),
            vec![MeetingKind::TouchDegenerate(p(0, 0))]
        );
    }

    #[test]
    fn shared_endpoint_contact() {
        let a = pts(&[(0, 0), (2, 0)]);
        let b = pts(&[(0, 0), (0, 2)]);
        assert_eq!(
            polyline_meetings(&a, &b, &[p(0, 0)]),
            vec![MeetingKind::EndpointContact(p(0, 0))]
        );
    }

    #[test]
    fn polyline_endpoint_on_other_is_touch() {
        let a = pts(&[(0, 0), (2, 0)]);
        let b = pts(&[(1, 0), (1, 2)]);
        assert_eq!(
            polyline_meetings(&a, &b, &[]),
            vec![MeetingKind::TouchDegenerate(p(1, 0))]
        );
    }

    #[test]
    fn self_intersection_detected() {
        let fold = pts(&[(0, 0), (2, 0), (1, 0)]);
        assert!(kernel::self_intersection::<RationalKernel>(&fold).is_some());
        let bow = pts(&[(0, 0), (2, 2), (2, 0), (0, 2)]);
        assert_eq!(
            kernel::self_intersection::<RationalKernel>(&bow),
            Some(Some(p(1, 1)))
        );
        let ok = pts(&[(0, 0), (1, 1), (2, 0)]);
        assert_eq!(kernel::self_intersection::<RationalKernel>(&ok), None);
    }

    #[test]
    fn frame_fitting() {
        let ps = [Point::new(rational(1, 2), rational(3, 4)), p(5, 7)];
        let f = Frame::fitting(ps.iter(), 1).unwrap();
        assert_eq!(f.scale(), &BigInt::from(4));
        assert_eq!(f.to_lattice(&ps[0]), Some(LatticePoint::new(2, 3)));
        assert_eq!(f.to_point(&LatticePoint::new(2, 3)), ps[0]);
        let huge = [p(1 << 40, 0)];
        assert!(Frame::fitting(huge.iter(), 1).is_none());
    }

    fn small_point() -> impl Strategy<Value = Point> {
        (-6i64..=6, 1i64..=3, -6i64..=6, 1i64..=3)
            .prop_map(|(a, b, c, d)| Point::new(rational(a, b), rational(c, d)))
    }

    fn small_segment() -> impl Strategy<Value = Segment> {
        (small_point(), small_point())
            .prop_filter("distinct", |(a, b)| a != b)
            .prop_map(|(a, b)| Segment::new(a, b).unwrap())
    }

    fn strictly_inside(p: &Point, s: &Segment) -> bool {
        orientation(s.a(), s.b(), p) == Orientation::Collinear
            && p != s.a()
            && p != s.b()
            && (p.clone() < s.a().clone()) != (p.clone() < s.b().clone())
    }

    fn affine(p: &Point, m: &[Rational; 6]) -> Point {
        Point::new(
            &m[0] * &p.x + &m[1] * &p.y + &m[2],
            &m[3] * &p.x + &m[4] * &p.y + &m[5],
        )
    }

    fn same_tag(a: &MeetingKind, b: &MeetingKind) -> bool {
        std::mem::discriminant(a) == std::mem::discriminant(b)
    }

    proptest! {
        #[test]
        fn orientation_antisymmetric(p0 in small_point(), q in small_point(), r in small_point()) {
            let o = orientation(&p0, &q, &r);
            prop_assert_eq!(orientation(&q, &p0, &r), o.reversed());
            prop_assert_eq!(orientation(&p0, &r, &q), o.reversed());
            prop_assert_eq!(orientation(&r, &q, &p0), o.reversed());
        }

        #[test]
        fn segment_meeting_symmetric(s1 in small_segment(), s2 in small_segment()) {
            prop_assert_eq!(segment_meeting(&s1, &s2), segment_meeting(&s2, &s1));
        }

        #[test]
        fn proper_crossing_inside_both(s1 in small_segment(), s2 in small_segment()) {
            if let MeetingKind::ProperCrossing(pt) = segment_meeting(&s1, &s2) {
                prop_assert!(strictly_inside(&pt, &s1));
                prop_assert!(strictly_inside(&pt, &s2));
            }
        }

        #[test]
        fn affine_map_preserves_tags(
            s1 in small_segment(),
            s2 in small_segment(),
            coeffs in prop::array::uniform6(-3i64..=3),
        ) {
            let m = coeffs.map(integer);
            let det = &m[0] * &m[4] - &m[1] * &m[3];
            prop_assume!(!det.is_zero());
            let map = |s: &Segment| Segment::new(affine(s.a(), &m), affine(s.b(), &m)).unwrap();
            let before = segment_meeting(&s1, &s2);
            let after = segment_meeting(&map(&s1), &map(&s2));
            prop_assert!(same_tag(&before, &after));
            prop_assert_eq!(before.point().map(|q| affine(q, &m)), after.point().cloned());
        }

        #[test]
        fn lattice_kernel_agrees_with_rational(
            coords in prop::collection::vec((-8i64..=8, -8i64..=8), 4..=7),
            split in 2usize..=5,
        ) {
            let split = split.min(coords.len() - 2);
            let a: Vec<Point> = coords[..split].iter().map(|&(x, y)| p(x, y)).collect();
            let b: Vec<Point> = coords[split..].iter().map(|&(x, y)| p(x, y)).collect();
            prop_assume!(a.windows(2).all(|w| w[0] != w[1]) && b.windows(2).all(|w| w[0] != w[1]));
            let la: Vec<LatticePoint> = coords[..split].iter().map(|&(x, y)| LatticePoint::new(x, y)).collect();
            let lb: Vec<LatticePoint> = coords[split..].iter().map(|&(x, y)| LatticePoint::new(x, y)).collect();
            let unit = BigInt::one();
            let mut lat: Vec<MeetingKind> = kernel::polyline_meetings::<lattice::LatticeKernel>(&la, &lb, &[])
                .into_iter()
                .map(|m| m.map(|q| q.to_point(&unit)))
                .collect();
            lat.sort();
            prop_assert_eq!(polyline_meetings(&a, &b, &[]), lat);
        }

        #[test]
        fn wide_kernel_agrees_with_rational(
            coords in prop::collection::vec((-8i64..=8, 1i64..=4, -8i64..=8), 4..=7),
            split in 2usize..=5,
        ) {
            let split = split.min(coords.len() - 2);
            let pts: Vec<Point> = coords.iter().map(|&(x, d, y)| Point::new(rational(x, d), rational(y, 3))).collect();
            let (a, b) = pts.split_at(split);
            prop_assume!(a.windows(2).all(|w| w[0] != w[1]) && b.windows(2).all(|w| w[0] != w[1]));
            let frame = Frame::common(pts.iter());
            let wa: Vec<_> = a.iter().map(|q| frame.to_wide(q).unwrap()).collect();
            let wb: Vec<_> = b.iter().map(|q| frame.to_wide(q).unwrap()).collect();
            let mut wide: Vec<MeetingKind> = kernel::polyline_meetings::<wide::WideKernel>(&wa, &wb, &[])
                .into_iter()
                .map(|m| m.map(|q| q.to_point(frame.scale())))
                .collect();
            wide.sort();
            prop_assert_eq!(polyline_meetings(a, b, &[]), wide);
        }
    }
}
