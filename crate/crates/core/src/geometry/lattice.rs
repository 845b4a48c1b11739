//! Integer lattice kernel.
//!
//! Coordinates are integers in a frame with a fixed common denominator. With
//! every coordinate bounded by [`COORD_LIMIT`] in magnitude, orientation
//! determinants fit in 64 bits and crossing-point numerators in 96, so all
//! arithmetic is exact in `i128`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;

use super::kernel::Kernel;
use super::{Orientation, Point, Rational};

/// Largest admissible coordinate magnitude, `2^30`.
pub const COORD_LIMIT: i64 = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl LatticePoint {
    pub fn new(x: i64, y: i64) -> Self {
        LatticePoint { x, y }
    }

    pub fn in_range(&self) -> bool {
        self.x.abs() <= COORD_LIMIT && self.y.abs() <= COORD_LIMIT
    }
}

/// A point `(x/d, y/d)` with `d > 0` and `gcd(x, y, d) = 1`, so equal points
/// have equal representations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeMeet {
    pub x: i128,
    pub y: i128,
    pub d: i128,
}

impl LatticeMeet {
    fn canonical(mut x: i128, mut y: i128, mut d: i128) -> Self {
        debug_assert!(d != 0);
        if d < 0 {
            x = -x;
            y = -y;
            d = -d;
        }
        let g = x.gcd(&y).gcd(&d);
        LatticeMeet {
            x: x / g,
            y: y / g,
            d: d / g,
        }
    }

    /// Back to rationals in the frame with denominator `scale`.
    pub fn to_point(&self, scale: &BigInt) -> Point {
        let den = BigInt::from(self.d) * scale;
        Point::new(
            Rational::new(BigInt::from(self.x), den.clone()),
            Rational::new(BigInt::from(self.y), den),
        )
    }
}

pub struct LatticeKernel;

impl Kernel for LatticeKernel {
    type Pt = LatticePoint;
    type Meet = LatticeMeet;

    #[inline]
    fn orient(p: &LatticePoint, q: &LatticePoint, r: &LatticePoint) -> Orientation {
        let ux = (q.x - p.x) as i128;
        let uy = (q.y - p.y) as i128;
        let vx = (r.x - p.x) as i128;
        let vy = (r.y - p.y) as i128;
        match (ux * vy - uy * vx).cmp(&0) {
            Ordering::Greater => Orientation::Left,
            Ordering::Less => Orientation::Right,
            Ordering::Equal => Orientation::Collinear,
        }
    }

    #[inline]
    fn cmp_x(p: &LatticePoint, q: &LatticePoint) -> Ordering {
        p.x.cmp(&q.x)
    }

    #[inline]
    fn cmp_y(p: &LatticePoint, q: &LatticePoint) -> Ordering {
        p.y.cmp(&q.y)
    }

    fn at(p: &LatticePoint) -> LatticeMeet {
        LatticeMeet {
            x: p.x as i128,
            y: p.y as i128,
            d: 1,
        }
    }

    fn cross_point(
        a: &LatticePoint,
        b: &LatticePoint,
        c: &LatticePoint,
        d: &LatticePoint,
    ) -> LatticeMeet {
        let (rx, ry) = ((b.x - a.x) as i128, (b.y - a.y) as i128);
        let (sx, sy) = ((d.x - c.x) as i128, (d.y - c.y) as i128);
        let (qx, qy) = ((c.x - a.x) as i128, (c.y - a.y) as i128);
        let den = rx * sy - ry * sx;
        let t = qx * sy - qy * sx;
        LatticeMeet::canonical(a.x as i128 * den + t * rx, a.y as i128 * den + t * ry, den)
    }
}
