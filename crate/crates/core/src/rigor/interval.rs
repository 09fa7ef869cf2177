use std::cmp::Ordering;
use std::fmt;

use rug::float::{Constant, Round};
use rug::ops::AssignRound;
use rug::Float;

/// Closed interval `[lo, hi]` with MPFR endpoints. Every operation rounds
/// `lo` down and `hi` up, so the exact result of the real operation on any
/// points of the operands lies inside.
#[derive(Clone, PartialEq)]
pub struct Enclosure {
    lo: Float,
    hi: Float,
}

fn rnd<T>(prec: u32, src: T, r: Round) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, src, r).0
}

fn fmin(a: Float, b: Float) -> Float {
    if b < a {
        b
    } else {
        a
    }
}

fn fmax(a: Float, b: Float) -> Float {
    if b > a {
        b
    } else {
        a
    }
}

impl fmt::Debug for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo_f64(), self.hi_f64())
    }
}

impl Enclosure {
    /// Panics if `lo > hi` or either endpoint is NaN.
    pub fn new(lo: Float, hi: Float) -> Self {
        assert!(lo <= hi, "inverted enclosure");
        Enclosure { lo, hi }
    }

    pub fn point(prec: u32, x: f64) -> Self {
        Enclosure {
            lo: rnd(prec, x, Round::Down),
            hi: rnd(prec, x, Round::Up),
        }
    }

    pub fn from_bounds(prec: u32, lo: f64, hi: f64) -> Self {
        Enclosure::new(rnd(prec, lo, Round::Down), rnd(prec, hi, Round::Up))
    }

    pub fn zero(prec: u32) -> Self {
        Enclosure::point(prec, 0.0)
    }

    pub fn pi(prec: u32) -> Self {
        Enclosure {
            lo: rnd(prec, Constant::Pi, Round::Down),
            hi: rnd(prec, Constant::Pi, Round::Up),
        }
    }

    pub fn precision(&self) -> u32 {
        self.lo.prec()
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_round(Round::Down)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_round(Round::Up)
    }

    pub fn mid_f64(&self) -> f64 {
        let p = self.precision() + 1;
        Float::with_val(p, &self.lo + &self.hi).to_f64() / 2.0
    }

    pub fn width_f64(&self) -> f64 {
        rnd(self.precision(), &self.hi - &self.lo, Round::Up).to_f64_round(Round::Up)
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Whether `x` is within `tol` of the interval.
    pub fn near_f64(&self, x: f64, tol: f64) -> bool {
        self.lo_f64() - tol <= x && x <= self.hi_f64() + tol
    }

    pub fn contains(&self, other: &Enclosure) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    pub fn add(&self, o: &Enclosure) -> Enclosure {
        let p = self.precision();
        Enclosure {
            lo: rnd(p, &self.lo + &o.lo, Round::Down),
            hi: rnd(p, &self.hi + &o.hi, Round::Up),
        }
    }

    pub fn sub(&self, o: &Enclosure) -> Enclosure {
        let p = self.precision();
        Enclosure {
            lo: rnd(p, &self.lo - &o.hi, Round::Down),
            hi: rnd(p, &self.hi - &o.lo, Round::Up),
        }
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure {
            lo: Float::with_val(self.precision(), -&self.hi),
            hi: Float::with_val(self.precision(), -&self.lo),
        }
    }

    pub fn mul(&self, o: &Enclosure) -> Enclosure {
        let p = self.precision();
        if self.lo >= 0 && o.lo >= 0 {
            return Enclosure {
                lo: rnd(p, &self.lo * &o.lo, Round::Down),
                hi: rnd(p, &self.hi * &o.hi, Round::Up),
            };
        }
        let corners = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let lo = corners
            .iter()
            .map(|(a, b)| rnd(p, *a * *b, Round::Down))
            .reduce(fmin)
            .unwrap();
        let hi = corners
            .iter()
            .map(|(a, b)| rnd(p, *a * *b, Round::Up))
            .reduce(fmax)
            .unwrap();
        Enclosure { lo, hi }
    }

    pub fn mul_f64(&self, x: f64) -> Enclosure {
        self.mul(&Enclosure::point(self.precision(), x))
    }

    pub fn add_f64(&self, x: f64) -> Enclosure {
        self.add(&Enclosure::point(self.precision(), x))
    }

    /// Panics if the divisor contains zero.
    pub fn div(&self, o: &Enclosure) -> Enclosure {
        assert!(!o.contains_zero(), "division by an enclosure of zero");
        let p = self.precision();
        let corners = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let lo = corners
            .iter()
            .map(|(a, b)| rnd(p, *a / *b, Round::Down))
            .reduce(fmin)
            .unwrap();
        let hi = corners
            .iter()
            .map(|(a, b)| rnd(p, *a / *b, Round::Up))
            .reduce(fmax)
            .unwrap();
        Enclosure { lo, hi }
    }

    pub fn recip(&self) -> Enclosure {
        Enclosure::point(self.precision(), 1.0).div(self)
    }

    pub fn sqr(&self) -> Enclosure {
        let p = self.precision();
        if self.lo >= 0 {
            Enclosure {
                lo: rnd(p, self.lo.square_ref(), Round::Down),
                hi: rnd(p, self.hi.square_ref(), Round::Up),
            }
        } else if self.hi <= 0 {
            Enclosure {
                lo: rnd(p, self.hi.square_ref(), Round::Down),
                hi: rnd(p, self.lo.square_ref(), Round::Up),
            }
        } else {
            let m = fmax(Float::with_val(p, self.lo.abs_ref()), self.hi.clone());
            Enclosure {
                lo: Float::with_val(p, 0),
                hi: rnd(p, m.square_ref(), Round::Up),
            }
        }
    }

    pub fn abs(&self) -> Enclosure {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            self.neg()
        } else {
            let p = self.precision();
            Enclosure {
                lo: Float::with_val(p, 0),
                hi: fmax(Float::with_val(p, self.lo.abs_ref()), self.hi.clone()),
            }
        }
    }

    /// Square root of a quantity known to be non-negative; a negative lower
    /// endpoint is an artefact of rounding and is raised to zero.
    pub fn sqrt_nonneg(&self) -> Enclosure {
        let p = self.precision();
        let lo = if self.lo > 0 {
            rnd(p, self.lo.sqrt_ref(), Round::Down)
        } else {
            Float::with_val(p, 0)
        };
        let hi = if self.hi > 0 {
            rnd(p, self.hi.sqrt_ref(), Round::Up)
        } else {
            Float::with_val(p, 0)
        };
        Enclosure { lo, hi }
    }

    /// `arccos` of a quantity known to be a cosine; the enclosure is first
    /// intersected with `[-1, 1]`.
    pub fn acos_of_cos(&self) -> Enclosure {
        let p = self.precision();
        let top = fmin(self.hi.clone(), Float::with_val(p, 1));
        let bot = fmax(self.lo.clone(), Float::with_val(p, -1));
        Enclosure {
            lo: rnd(p, top.acos_ref(), Round::Down),
            hi: rnd(p, bot.acos_ref(), Round::Up),
        }
    }

    /// `arcsin` of a quantity known to lie in `[-1, 1]`.
    pub fn asin_clamped(&self) -> Enclosure {
        let p = self.precision();
        let top = fmin(self.hi.clone(), Float::with_val(p, 1));
        let bot = fmax(self.lo.clone(), Float::with_val(p, -1));
        Enclosure {
            lo: rnd(p, bot.asin_ref(), Round::Down),
            hi: rnd(p, top.asin_ref(), Round::Up),
        }
    }

    /// Intersection with `[a, b]`, for quantities known to lie there.
    pub fn restrict(&self, a: f64, b: f64) -> Enclosure {
        let p = self.precision();
        Enclosure {
            lo: fmax(self.lo.clone(), Float::with_val(p, a)),
            hi: fmin(self.hi.clone(), Float::with_val(p, b)),
        }
    }

    pub fn max(&self, o: &Enclosure) -> Enclosure {
        Enclosure {
            lo: fmax(self.lo.clone(), o.lo.clone()),
            hi: fmax(self.hi.clone(), o.hi.clone()),
        }
    }

    pub fn min(&self, o: &Enclosure) -> Enclosure {
        Enclosure {
            lo: fmin(self.lo.clone(), o.lo.clone()),
            hi: fmin(self.hi.clone(), o.hi.clone()),
        }
    }

    /// `true` only when every point of `self` exceeds every point of `o`.
    pub fn certainly_gt(&self, o: &Enclosure) -> bool {
        self.lo > o.hi
    }
}

/// Running sum with separate downward and upward accumulators. Products of
/// doubles are formed exactly when the precision allows it.
pub(crate) struct DirectedSum {
    prec: u32,
    lo: Float,
    hi: Float,
}

impl DirectedSum {
    pub(crate) fn new(prec: u32) -> Self {
        DirectedSum {
            prec,
            lo: Float::with_val(prec, 0),
            hi: Float::with_val(prec, 0),
        }
    }

    pub(crate) fn add_f64(&mut self, x: f64) {
        use rug::ops::AddAssignRound;
        self.lo.add_assign_round(x, Round::Down);
        self.hi.add_assign_round(x, Round::Up);
    }

    /// Adds the product of the given doubles.
    pub(crate) fn add_prod(&mut self, xs: &[f64]) {
        use rug::ops::AddAssignRound;
        let exact = 53 * xs.len() as u32;
        if exact <= self.prec {
            let mut p = Float::with_val(exact, 1);
            for x in xs {
                p *= *x;
            }
            self.lo.add_assign_round(&p, Round::Down);
            self.hi.add_assign_round(&p, Round::Up);
        } else {
            let mut e = Enclosure::point(self.prec, 1.0);
            for x in xs {
                e = e.mul_f64(*x);
            }
            self.lo.add_assign_round(&e.lo, Round::Down);
            self.hi.add_assign_round(&e.hi, Round::Up);
        }
    }

    pub(crate) fn add(&mut self, e: &Enclosure) {
        use rug::ops::AddAssignRound;
        self.lo.add_assign_round(&e.lo, Round::Down);
        self.hi.add_assign_round(&e.hi, Round::Up);
    }

    pub(crate) fn finish(self) -> Enclosure {
        Enclosure { lo: self.lo, hi: self.hi }
    }
}

/// Upper bound on `sqrt(sum of squares)` for a family of enclosures.
pub(crate) fn frobenius_hi<'a>(prec: u32, entries: impl Iterator<Item = (&'a Enclosure, f64)>) -> Enclosure {
    let mut s = DirectedSum::new(prec);
    for (e, weight) in entries {
        s.add(&e.sqr().mul_f64(weight));
    }
    s.finish().sqrt_nonneg()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_brackets_the_double() {
        let p = Enclosure::pi(128);
        assert!(p.contains_f64(std::f64::consts::PI) || p.near_f64(std::f64::consts::PI, 1e-15));
        assert!(p.width_f64() < 1e-36);
    }

    #[test]
    fn one_third_is_bracketed() {
        let third = Enclosure::point(64, 1.0).div(&Enclosure::point(64, 3.0));
        assert!(third.lo() < third.hi());
        let back = third.mul_f64(3.0);
        assert!(back.contains_f64(1.0));
    }

    #[test]
    fn sign_cases_of_mul() {
        let a = Enclosure::from_bounds(64, -2.0, 3.0);
        let b = Enclosure::from_bounds(64, -5.0, 1.0);
        let c = a.mul(&b);
        assert_eq!((c.lo_f64(), c.hi_f64()), (-15.0, 10.0));
        assert_eq!((a.sqr().lo_f64(), a.sqr().hi_f64()), (0.0, 9.0));
    }

    #[test]
    fn acos_at_the_edges() {
        let e = Enclosure::from_bounds(128, 0.999, 1.0 + 1e-12).acos_of_cos();
        assert_eq!(e.lo_f64(), 0.0);
        assert!(e.near_f64(0.999f64.acos(), 1e-15));
    }

    #[test]
    fn exact_and_rounded_products_agree() {
        let xs = [0.1, -0.7, 1.3];
        let mut a = DirectedSum::new(256);
        a.add_prod(&xs);
        let mut b = DirectedSum::new(64);
        b.add_prod(&xs);
        let (a, b) = (a.finish(), b.finish());
        assert!(a.width_f64() == 0.0);
        assert!(b.contains(&a));
    }
}
