//! Big-integer kernel for drawings that do not fit the 64-bit lattice.
//!
//! Points are integer multiples of one common denominator, so predicates
//! multiply integers without the per-operation gcd of rational arithmetic.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::kernel::Kernel;
use super::{Orientation, Point, Rational};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WidePoint {
    pub x: BigInt,
    pub y: BigInt,
}

/// `(x/d, y/d)` with `d > 0` and `gcd(x, y, d) = 1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WideMeet {
    pub x: BigInt,
    pub y: BigInt,
    pub d: BigInt,
}

impl WideMeet {
    fn canonical(mut x: BigInt, mut y: BigInt, mut d: BigInt) -> Self {
        debug_assert!(!d.is_zero());
        if d.is_negative() {
            x = -x;
            y = -y;
            d = -d;
        }
        let g = x.gcd(&y).gcd(&d);
        WideMeet {
            x: x / &g,
            y: y / &g,
            d: d / &g,
        }
    }

    pub fn to_point(&self, scale: &BigInt) -> Point {
        let den = &self.d * scale;
        Point::new(
            Rational::new(self.x.clone(), den.clone()),
            Rational::new(self.y.clone(), den),
        )
    }
}

pub struct WideKernel;

impl Kernel for WideKernel {
    type Pt = WidePoint;
    type Meet = WideMeet;

    fn orient(p: &WidePoint, q: &WidePoint, r: &WidePoint) -> Orientation {
        let lhs = (&q.x - &p.x) * (&r.y - &p.y);
        let rhs = (&q.y - &p.y) * (&r.x - &p.x);
        match lhs.cmp(&rhs) {
            Ordering::Greater => Orientation::Left,
            Ordering::Less => Orientation::Right,
            Ordering::Equal => Orientation::Collinear,
        }
    }

    fn cmp_x(p: &WidePoint, q: &WidePoint) -> Ordering {
        p.x.cmp(&q.x)
    }

    fn cmp_y(p: &WidePoint, q: &WidePoint) -> Ordering {
        p.y.cmp(&q.y)
    }

    fn at(p: &WidePoint) -> WideMeet {
        WideMeet {
            x: p.x.clone(),
            y: p.y.clone(),
            d: BigInt::from(1),
        }
    }

    fn cross_point(a: &WidePoint, b: &WidePoint, c: &WidePoint, d: &WidePoint) -> WideMeet {
        let (rx, ry) = (&b.x - &a.x, &b.y - &a.y);
        let (sx, sy) = (&d.x - &c.x, &d.y - &c.y);
        let (qx, qy) = (&c.x - &a.x, &c.y - &a.y);
        let den = &rx * &sy - &ry * &sx;
        let t = &qx * &sy - &qy * &sx;
        debug_assert!(den.sign() != Sign::NoSign);
        WideMeet::canonical(&a.x * &den + &t * &rx, &a.y * &den + &t * &ry, den)
    }
}
