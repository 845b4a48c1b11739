//! Predicates written once over a number representation.
//!
//! Two representations implement [`Kernel`]: arbitrary-precision rationals
//! ([`RationalKernel`](super::RationalKernel)) and scaled 64-bit lattice
//! coordinates with 128-bit intermediates
//! ([`LatticeKernel`](super::lattice::LatticeKernel)). Both are exact; the
//! lattice one is only used when every coordinate fits its magnitude bound.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Debug;
use std::hash::Hash;

use super::{MeetingKind, Orientation};

pub trait Kernel {
    /// Input point. `Ord` must be lexicographic in `(x, y)`, which is a linear
    /// order along any line and is what the collinear cases rely on.
    type Pt: Clone + Ord + Hash + Debug + Send + Sync;
    /// Exact location of a meeting, including non-lattice crossing points.
    type Meet: Clone + Ord + Hash + Debug + Send + Sync;

    fn orient(p: &Self::Pt, q: &Self::Pt, r: &Self::Pt) -> Orientation;
    fn cmp_x(p: &Self::Pt, q: &Self::Pt) -> Ordering;
    fn cmp_y(p: &Self::Pt, q: &Self::Pt) -> Ordering;
    fn at(p: &Self::Pt) -> Self::Meet;
    /// Intersection of the supporting lines of `ab` and `cd`; callers only
    /// ask for it after establishing a proper crossing.
    fn cross_point(a: &Self::Pt, b: &Self::Pt, c: &Self::Pt, d: &Self::Pt) -> Self::Meet;
}

fn minmax<'a, P: Ord>(a: &'a P, b: &'a P) -> (&'a P, &'a P) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[inline]
fn boxes_disjoint<K: Kernel>(a: &K::Pt, b: &K::Pt, c: &K::Pt, d: &K::Pt) -> bool {
    let hi =
        |p, q, cmp: fn(&K::Pt, &K::Pt) -> Ordering| if cmp(p, q) == Ordering::Less { q } else { p };
    let lo =
        |p, q, cmp: fn(&K::Pt, &K::Pt) -> Ordering| if cmp(p, q) == Ordering::Less { p } else { q };
    K::cmp_x(hi(a, b, K::cmp_x), lo(c, d, K::cmp_x)) == Ordering::Less
        || K::cmp_x(hi(c, d, K::cmp_x), lo(a, b, K::cmp_x)) == Ordering::Less
        || K::cmp_y(hi(a, b, K::cmp_y), lo(c, d, K::cmp_y)) == Ordering::Less
        || K::cmp_y(hi(c, d, K::cmp_y), lo(a, b, K::cmp_y)) == Ordering::Less
}

/// `p` lies on the closed segment `ab`.
pub fn on_segment<K: Kernel>(p: &K::Pt, a: &K::Pt, b: &K::Pt) -> bool {
    if K::orient(a, b, p) != Orientation::Collinear {
        return false;
    }
    let (lo, hi) = minmax(a, b);
    lo <= p && p <= hi
}

pub fn segment_meeting<K: Kernel>(
    a: &K::Pt,
    b: &K::Pt,
    c: &K::Pt,
    d: &K::Pt,
) -> MeetingKind<K::Meet> {
    use Orientation::*;
    if boxes_disjoint::<K>(a, b, c, d) {
        return MeetingKind::NoMeeting;
    }
    let o1 = K::orient(a, b, c);
    let o2 = K::orient(a, b, d);
    if o1 == Collinear && o2 == Collinear {
        let (lo1, hi1) = minmax(a, b);
        let (lo2, hi2) = minmax(c, d);
        let lo = lo1.max(lo2);
        let hi = hi1.min(hi2);
        return match lo.cmp(hi) {
            Ordering::Greater => MeetingKind::NoMeeting,
            // Touching collinear segments meet at an endpoint of both.
            Ordering::Equal => MeetingKind::EndpointContact(K::at(lo)),
            Ordering::Less => MeetingKind::OverlapDegenerate,
        };
    }
    let o3 = K::orient(c, d, a);
    let o4 = K::orient(c, d, b);
    if o1 != Collinear
        && o2 != Collinear
        && o1 != o2
        && o3 != Collinear
        && o4 != Collinear
        && o3 != o4
    {
        return MeetingKind::ProperCrossing(K::cross_point(a, b, c, d));
    }
    let touch = if o1 == Collinear && on_segment::<K>(c, a, b) {
        Some(c)
    } else if o2 == Collinear && on_segment::<K>(d, a, b) {
        Some(d)
    } else if o3 == Collinear && on_segment::<K>(a, c, d) {
        Some(a)
    } else if o4 == Collinear && on_segment::<K>(b, c, d) {
        Some(b)
    } else {
        None
    };
    match touch {
        None => MeetingKind::NoMeeting,
        Some(p) => {
            let end_of_first = p == a || p == b;
            let end_of_second = p == c || p == d;
            if end_of_first && end_of_second {
                MeetingKind::EndpointContact(K::at(p))
            } else {
                MeetingKind::TouchDegenerate(K::at(p))
            }
        }
    }
}

/// Where a contact point sits on a polyline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Loc {
    /// The contact is the polyline's `k`-th point.
    Vertex(usize),
    /// The contact is strictly inside segment `i`.
    Interior(usize),
}

#[derive(Default)]
struct Contact {
    proper: bool,
    on_a: Option<Loc>,
    on_b: Option<Loc>,
}

fn locate<K: Kernel>(p: &K::Meet, poly: &[K::Pt], seg: usize) -> Loc {
    if *p == K::at(&poly[seg]) {
        Loc::Vertex(seg)
    } else if *p == K::at(&poly[seg + 1]) {
        Loc::Vertex(seg + 1)
    } else {
        Loc::Interior(seg)
    }
}

/// The point of `poly` at which the contact sits together with its two
/// neighbours along the polyline, or `None` when the contact is a polyline
/// endpoint.
fn local_rays<K: Kernel>(poly: &[K::Pt], loc: Loc) -> Option<(&K::Pt, &K::Pt)> {
    match loc {
        Loc::Vertex(k) if k == 0 || k + 1 == poly.len() => None,
        Loc::Vertex(k) => Some((&poly[k - 1], &poly[k + 1])),
        Loc::Interior(i) => Some((&poly[i], &poly[i + 1])),
    }
}

fn same_direction<K: Kernel>(apex: &K::Pt, u: &K::Pt, w: &K::Pt) -> bool {
    K::orient(apex, u, w) == Orientation::Collinear && ((u > apex) == (w > apex))
}

/// Is direction `w` strictly inside the counterclockwise sector from `u1`
/// to `u2` around `apex`? `None` if the sector is degenerate (backtrack).
fn in_ccw_sector<K: Kernel>(apex: &K::Pt, u1: &K::Pt, u2: &K::Pt, w: &K::Pt) -> Option<bool> {
    use Orientation::*;
    match K::orient(apex, u1, u2) {
        Left => Some(K::orient(apex, u1, w) == Left && K::orient(apex, w, u2) == Left),
        Right => Some(!(K::orient(apex, u2, w) == Left && K::orient(apex, w, u1) == Left)),
        Collinear if same_direction::<K>(apex, u1, u2) => None,
        Collinear => Some(K::orient(apex, u1, w) == Left),
    }
}

/// Transversality of a contact at a point shared by both polylines where at
/// least one of them has a bend.
fn classify_bend_contact<K: Kernel>(
    apex: &K::Pt,
    (u1, u2): (&K::Pt, &K::Pt),
    (w1, w2): (&K::Pt, &K::Pt),
) -> bool {
    for w in [w1, w2] {
        if same_direction::<K>(apex, u1, w) || same_direction::<K>(apex, u2, w) {
            return false;
        }
    }
    match (
        in_ccw_sector::<K>(apex, u1, u2, w1),
        in_ccw_sector::<K>(apex, u1, u2, w2),
    ) {
        (Some(s1), Some(s2)) => s1 != s2,
        _ => false,
    }
}

/// All meetings between two polylines, one entry per distinct contact point
/// plus one `OverlapDegenerate` per overlapping segment pair. Output is
/// sorted by the kernel's meeting order with overlaps first.
pub fn polyline_meetings<K: Kernel>(
    a: &[K::Pt],
    b: &[K::Pt],
    shared: &[K::Pt],
) -> Vec<MeetingKind<K::Meet>> {
    let mut overlaps = 0usize;
    let mut contacts: BTreeMap<K::Meet, Contact> = BTreeMap::new();
    for i in 0..a.len().saturating_sub(1) {
        for j in 0..b.len().saturating_sub(1) {
            let m = segment_meeting::<K>(&a[i], &a[i + 1], &b[j], &b[j + 1]);
            let p = match m {
                MeetingKind::NoMeeting => continue,
                MeetingKind::OverlapDegenerate => {
                    overlaps += 1;
                    continue;
                }
                MeetingKind::ProperCrossing(p) => {
                    contacts.entry(p).or_default().proper = true;
                    continue;
                }
                MeetingKind::EndpointContact(p) | MeetingKind::TouchDegenerate(p) => p,
            };
            let on_a = locate::<K>(&p, a, i);
            let on_b = locate::<K>(&p, b, j);
            let c = contacts.entry(p).or_default();
            c.on_a.get_or_insert(on_a);
            c.on_b.get_or_insert(on_b);
        }
    }

    let shared: Vec<K::Meet> = shared.iter().map(K::at).collect();
    let mut out = vec![MeetingKind::OverlapDegenerate; overlaps];
    for (p, c) in contacts {
        let kind = if shared.contains(&p) {
            MeetingKind::EndpointContact(p)
        } else if c.proper {
            MeetingKind::ProperCrossing(p)
        } else {
            let (la, lb) = (
                c.on_a.expect("contact located"),
                c.on_b.expect("contact located"),
            );
            let apex = match (la, lb) {
                (Loc::Vertex(k), _) => &a[k],
                (_, Loc::Vertex(k)) => &b[k],
                _ => unreachable!("non-proper contact interior to both segments"),
            };
            match (local_rays::<K>(a, la), local_rays::<K>(b, lb)) {
                (Some(ra), Some(rb)) if classify_bend_contact::<K>(apex, ra, rb) => {
                    MeetingKind::ProperCrossing(p)
                }
                _ => MeetingKind::TouchDegenerate(p),
            }
        };
        out.push(kind);
    }
    out
}

/// Self-intersection of a single polyline: non-adjacent segments meet, or
/// adjacent segments fold back onto each other.
pub fn self_intersection<K: Kernel>(poly: &[K::Pt]) -> Option<Option<K::Meet>> {
    let segs = poly.len().saturating_sub(1);
    for i in 0..segs {
        if i + 2 <= segs {
            let (p, q, r) = (&poly[i], &poly[i + 1], &poly[i + 2]);
            if same_direction::<K>(q, p, r) {
                return Some(Some(K::at(q)));
            }
        }
        for j in i + 2..segs {
            match segment_meeting::<K>(&poly[i], &poly[i + 1], &poly[j], &poly[j + 1]) {
                MeetingKind::NoMeeting => {}
                MeetingKind::OverlapDegenerate => return Some(None),
                MeetingKind::ProperCrossing(p)
                | MeetingKind::EndpointContact(p)
                | MeetingKind::TouchDegenerate(p) => return Some(Some(p)),
            }
        }
    }
    None
}
