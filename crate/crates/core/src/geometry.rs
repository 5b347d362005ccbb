//! Points, distances and half-open arcs on circles `S^u` of radius `u`.
//!
//! A point is stored by its argument `theta` in `[0, u)`. The distance is the
//! geodesic distance divided by `2 pi`, i.e. `min(|t1 - t2|, u - |t1 - t2|)`,
//! so the largest distance on `S^u` is `u / 2`.
//!
//! Arcs are half-open: `[[a, b[[` contains `a` but not `b`, wraps around when
//! `b < a`, and `[[a, a[[` is empty. With these conventions the complement of
//! `[[a, b[[` is `[[b, a[[`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, EPS};

/// A point on the circle of radius `radius`, stored by its argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirclePoint {
    theta: f64,
    radius: f64,
}

/// Euclidean remainder `x mod u` in `[0, u)`.
pub fn wrap(x: f64, u: f64) -> f64 {
    let r = x - (x / u).floor() * u;
    // `r == u` happens for tiny negative `x`.
    if r >= u || r < 0.0 {
        0.0
    } else {
        r
    }
}

fn check_radius(u: f64) -> Result<()> {
    if u.is_finite() && u > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRadius(u))
    }
}

fn check_same(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() <= EPS * a.max(b).max(1.0) {
        Ok(())
    } else {
        Err(Error::ScaleMismatch { left: a, right: b })
    }
}

impl CirclePoint {
    /// Builds the point of argument `theta mod radius`.
    pub fn new(theta: f64, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        if !theta.is_finite() {
            return Err(Error::Domain {
                value: theta,
                domain: "finite angle",
            });
        }
        Ok(CirclePoint {
            theta: wrap(theta, radius),
            radius,
        })
    }

    /// A point on the unit circle `S^1`.
    pub fn unit(theta: f64) -> Result<Self> {
        Self::new(theta, 1.0)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The point `theta + shift` on the same circle.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        Self::new(self.theta + shift, self.radius)
    }
}

/// Circle distance `d_u(a, b) = min(|ta - tb|, u - |ta - tb|)`.
pub fn distance(a: &CirclePoint, b: &CirclePoint) -> Result<f64> {
    check_same(a.radius, b.radius)?;
    let diff = (a.theta - b.theta).abs();
    Ok(diff.min(a.radius - diff).max(0.0))
}

/// Distance from `x` to the nearest multiple of `u`.
pub fn lifted_distance(x: f64, u: f64) -> f64 {
    let r = wrap(x, u);
    r.min(u - r)
}

/// `s mod u`: the point of `S^u` with argument `theta_s mod u`.
pub fn mod_reduce(s: &CirclePoint, u: f64) -> Result<CirclePoint> {
    check_radius(u)?;
    if u > s.radius * (1.0 + EPS) {
        return Err(Error::Domain {
            value: u,
            domain: "reduction radius must not exceed the point's radius",
        });
    }
    CirclePoint::new(s.theta, u)
}

/// Half-open arc `[[start, end[[` on a circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    start: CirclePoint,
    end: CirclePoint,
}

impl Arc {
    pub fn new(start: CirclePoint, end: CirclePoint) -> Result<Self> {
        check_same(start.radius, end.radius)?;
        Ok(Arc { start, end })
    }

    /// Arc between two arguments on the circle of radius `radius`.
    pub fn from_angles(start: f64, end: f64, radius: f64) -> Result<Self> {
        Ok(Arc {
            start: CirclePoint::new(start, radius)?,
            end: CirclePoint::new(end, radius)?,
        })
    }

    pub fn start(&self) -> CirclePoint {
        self.start
    }

    pub fn end(&self) -> CirclePoint {
        self.end
    }

    pub fn radius(&self) -> f64 {
        self.start.radius
    }

    /// Arc length in `[0, u)`; zero for the empty arc `[[a, a[[`.
    pub fn length(&self) -> f64 {
        let l = wrap(self.end.theta - self.start.theta, self.radius());
        if l < EPS || l > self.radius() - EPS {
            // Endpoints closer than the tolerance are the same point.
            0.0
        } else {
            l
        }
    }

    pub fn is_empty(&self) -> bool {
        self.length() == 0.0
    }

    /// The complementary arc `[[end, start[[`.
    pub fn complement(&self) -> Arc {
        Arc {
            start: self.end,
            end: self.start,
        }
    }

    /// Half-open membership test. Points within [`EPS`] of an endpoint are
    /// treated as sitting on that endpoint.
    pub fn contains(&self, s: &CirclePoint) -> Result<bool> {
        check_same(self.radius(), s.radius)?;
        Ok(self.contains_theta(s.theta))
    }

    pub(crate) fn contains_theta(&self, theta: f64) -> bool {
        let u = self.radius();
        let len = self.length();
        if len == 0.0 {
            return false;
        }
        let mut off = wrap(theta - self.start.theta, u);
        if off > u - EPS {
            off = 0.0;
        }
        off < len - EPS
    }
}

/// Free-function form of [`Arc::contains`].
pub fn arc_contains(arc: &Arc, s: &CirclePoint) -> Result<bool> {
    arc.contains(s)
}

/// First `n` binary digits of `x` in `[0, 1)`, most significant first, so
/// that `x = sum_j x_j / 2^j`.
pub fn dyadic_digits(x: f64, n: usize) -> Result<Vec<u8>> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain {
            value: x,
            domain: "dyadic expansion needs 0 <= x < 1",
        });
    }
    if n == 0 {
        return Err(Error::Domain {
            value: 0.0,
            domain: "at least one digit",
        });
    }
    // Doubling and subtracting the integer part are exact in binary
    // floating point, so every digit is the true digit of the stored value.
    let mut rest = x;
    Ok((0..n)
        .map(|_| {
            rest *= 2.0;
            let digit = rest.floor();
            rest -= digit;
            digit as u8
        })
        .collect())
}

/// Supremum of the circle distance over an open lifted displacement
/// interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reach {
    /// Least upper bound of the achievable distances.
    pub sup: f64,
    /// Whether some displacement strictly inside the interval attains `sup`.
    pub attained: bool,
}

impl Reach {
    /// True when some achievable distance is `>= rho`.
    pub fn reaches(&self, rho: f64) -> bool {
        if self.attained {
            self.sup >= rho - EPS
        } else {
            self.sup > rho + EPS
        }
    }
}

/// Distances achieved by displacements `x` in the open interval `(lo, hi)`
/// on `S^u`, measured as distance from `x` to the nearest multiple of `u`.
pub fn open_interval_reach(lo: f64, hi: f64, u: f64) -> Reach {
    let half = u / 2.0;
    // First half-period point strictly above `lo`.
    let k = ((lo - half) / u).floor() + 1.0;
    let mut peak = k * u + half;
    if peak <= lo + EPS {
        peak += u;
    }
    if peak < hi - EPS {
        return Reach {
            sup: half,
            attained: true,
        };
    }
    Reach {
        sup: lifted_distance(lo, u).max(lifted_distance(hi, u)),
        attained: false,
    }
}

/// Closed range `(min, max)` of `d(s1, s2)` for `s1` in the closure of `c1`
/// and `s2` in the closure of `c2`.
pub fn arc_pair_distance_range(c1: &Arc, c2: &Arc) -> Result<(f64, f64)> {
    check_same(c1.radius(), c2.radius())?;
    if c1.is_empty() || c2.is_empty() {
        return Err(Error::Domain {
            value: 0.0,
            domain: "empty arc has no achievable distances",
        });
    }
    let u = c1.radius();
    let offset = wrap(c2.start.theta - c1.start.theta, u);
    let lo = offset - c1.length();
    let hi = offset + c2.length();
    let (dl, dh) = (lifted_distance(lo, u), lifted_distance(hi, u));

    let contains_multiple = |period_shift: f64| {
        let first = ((lo - period_shift) / u).ceil() * u + period_shift;
        first <= hi + EPS
    };
    let min = if contains_multiple(0.0) { 0.0 } else { dl.min(dh) };
    let max = if contains_multiple(u / 2.0) {
        u / 2.0
    } else {
        dl.max(dh)
    };
    Ok((min, max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(theta: f64) -> CirclePoint {
        CirclePoint::unit(theta).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert!((distance(&p(0.2), &p(0.9)).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(distance(&p(0.37), &p(0.37)).unwrap(), 0.0);
        assert_eq!(distance(&p(0.0), &p(0.5)).unwrap(), 0.5);
    }

    #[test]
    fn distance_rejects_mixed_radii() {
        let a = CirclePoint::new(0.1, 0.5).unwrap();
        assert!(matches!(
            distance(&a, &p(0.1)),
            Err(Error::ScaleMismatch { .. })
        ));
    }

    #[test]
    fn construction_normalizes() {
        assert!((p(1.25).theta() - 0.25).abs() < 1e-15);
        assert!((p(-0.25).theta() - 0.75).abs() < 1e-15);
        assert_eq!(p(-1e-300).theta(), 0.0);
        assert!(CirclePoint::new(0.1, 0.0).is_err());
        assert!(CirclePoint::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn mod_reduce_examples() {
        let r = mod_reduce(&p(0.3), 0.25).unwrap();
        assert_eq!(r.radius(), 0.25);
        assert!((r.theta() - 0.05).abs() < 1e-15);
        assert_eq!(mod_reduce(&p(0.1), 1.0).unwrap().theta(), 0.1);
        assert!(mod_reduce(&p(0.1), 0.0).is_err());
        assert!(mod_reduce(&p(0.1), -1.0).is_err());
        assert!(mod_reduce(&p(0.1), 2.0).is_err());
    }

    #[test]
    fn arc_membership_examples() {
        let arc = Arc::from_angles(0.1, 0.4, 1.0).unwrap();
        assert!(arc.contains(&p(0.1)).unwrap());
        assert!(!arc.contains(&p(0.4)).unwrap());
        let wrapped = Arc::from_angles(0.8, 0.2, 1.0).unwrap();
        assert!(wrapped.contains(&p(0.9)).unwrap());
        assert!(wrapped.contains(&p(0.0)).unwrap());
        assert!(!wrapped.contains(&p(0.5)).unwrap());
        assert!(!wrapped.contains(&p(0.2)).unwrap());
        let empty = Arc::from_angles(0.3, 0.3, 1.0).unwrap();
        for t in [0.0, 0.3, 0.5, 0.99] {
            assert!(!empty.contains(&p(t)).unwrap());
        }
        let small = CirclePoint::new(0.1, 0.5).unwrap();
        assert!(arc_contains(&arc, &small).is_err());
    }

    #[test]
    fn dyadic_examples() {
        assert_eq!(dyadic_digits(0.5, 3).unwrap(), vec![1, 0, 0]);
        assert_eq!(dyadic_digits(0.0, 4).unwrap(), vec![0, 0, 0, 0]);
        // x_j = floor(2^j (x - sum_{k<j} x_k / 2^k)) by hand for x = 1/3:
        // 2/3 -> 0, 4/3 -> 1, 2/3 -> 0, 4/3 -> 1.
        assert_eq!(dyadic_digits(1.0 / 3.0, 4).unwrap(), vec![0, 1, 0, 1]);
        assert_eq!(dyadic_digits(0.625, 3).unwrap(), vec![1, 0, 1]);
        assert!(dyadic_digits(1.0, 3).is_err());
        assert!(dyadic_digits(-0.1, 3).is_err());
    }

    /// Sampling oracle for `arc_pair_distance_range`: both closed arcs at
    /// resolution `h`, endpoints included.
    fn sampled_range(c1: &Arc, c2: &Arc, h: f64) -> (f64, f64) {
        let steps = |a: &Arc| (a.length() / h).round() as usize;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..=steps(c1) {
            let s1 = p(c1.start().theta() + i as f64 * h);
            for j in 0..=steps(c2) {
                let s2 = p(c2.start().theta() + j as f64 * h);
                let d = distance(&s1, &s2).unwrap();
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        (lo, hi)
    }

    #[test]
    fn arc_pair_range_matches_sampling() {
        let cases = [
            ((0.0, 0.1), (0.4, 0.5), (0.3, 0.5)),
            ((0.0, 0.5), (0.5, 1.0), (0.0, 0.5)),
        ];
        for ((a1, b1), (a2, b2), expected) in cases {
            let c1 = Arc::from_angles(a1, b1, 1.0).unwrap();
            let c2 = Arc::from_angles(a2, b2, 1.0).unwrap();
            let sampled = sampled_range(&c1, &c2, 1e-4);
            let got = arc_pair_distance_range(&c1, &c2).unwrap();
            assert!((sampled.0 - expected.0).abs() < 1e-9);
            assert!((sampled.1 - expected.1).abs() < 1e-9);
            assert!((got.0 - expected.0).abs() < 1e-12, "{got:?}");
            assert!((got.1 - expected.1).abs() < 1e-12, "{got:?}");
        }
        let c = Arc::from_angles(0.2, 0.35, 1.0).unwrap();
        let (lo, hi) = arc_pair_distance_range(&c, &c).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.15).abs() < 1e-12);
    }

    #[test]
    fn open_reach_semantics() {
        // (0, 0.2): sup 0.2 at the excluded endpoint.
        let r = open_interval_reach(-0.2, 0.2, 1.0);
        assert!(!r.attained);
        assert!((r.sup - 0.2).abs() < 1e-15);
        assert!(r.reaches(0.19));
        assert!(!r.reaches(0.2));
        // (0.3, 0.7) contains the antipode.
        let r = open_interval_reach(0.3, 0.7, 1.0);
        assert!(r.attained && r.sup == 0.5 && r.reaches(0.5));
        // (0, 0.5): antipode excluded.
        let r = open_interval_reach(0.0, 0.5, 1.0);
        assert!(!r.attained && !r.reaches(0.5) && r.reaches(0.49));
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64) {
            let (a, b, c) = (p(a), p(b), p(c));
            let ab = distance(&a, &b).unwrap();
            prop_assert!((ab - distance(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!((0.0..=0.5).contains(&ab));
            prop_assert_eq!(distance(&a, &a).unwrap(), 0.0);
            prop_assert!(ab <= distance(&a, &c).unwrap() + distance(&c, &b).unwrap() + 1e-12);
        }

        #[test]
        fn reduction_preserves_short_distances(
            t1 in 0.0..1.0f64, frac in 0.0..1.0f64, sign in proptest::bool::ANY, k in 0u32..8,
        ) {
            let lambda = 0.5f64.powi(k as i32);
            let d = frac * lambda / 2.0;
            let t2 = if sign { t1 + d } else { t1 - d };
            let (s1, s2) = (p(t1), p(t2));
            let reduced = distance(&mod_reduce(&s1, lambda).unwrap(), &mod_reduce(&s2, lambda).unwrap()).unwrap();
            prop_assert!((reduced - distance(&s1, &s2).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn multiple_distance_collapses_after_reduction(
            t1 in 0.0..1.0f64, q_exp in 1u32..10, p_frac in 0.0..1.0f64, sign in proptest::bool::ANY,
        ) {
            // sigma1 = 2^-q_exp, sigma2 = p * sigma1 <= 1/2.
            let sigma1 = 0.5f64.powi(q_exp as i32);
            let max_p = (0.5 / sigma1) as u64;
            let mult = 1 + (p_frac * (max_p - 1) as f64) as u64;
            let sigma2 = mult as f64 * sigma1;
            let t2 = if sign { t1 + sigma2 } else { t1 - sigma2 };
            let (s1, s2) = (p(t1), p(t2));
            prop_assert!((distance(&s1, &s2).unwrap() - sigma2).abs() < 1e-12);
            let r1 = mod_reduce(&s1, sigma1).unwrap().theta();
            let r2 = mod_reduce(&s2, sigma1).unwrap().theta();
            prop_assert!(lifted_distance(r1 - r2, sigma1) < 1e-12);
        }

        #[test]
        fn dyadic_reconstruction(x in 0.0..1.0f64, n in 1usize..40) {
            let digits = dyadic_digits(x, n).unwrap();
            let partial: f64 = digits.iter().enumerate().map(|(j, &d)| d as f64 / 2f64.powi(j as i32 + 1)).sum();
            prop_assert!(digits.iter().all(|&d| d <= 1));
            prop_assert!(x - partial >= 0.0);
            prop_assert!(x - partial < 2f64.powi(-(n as i32)));
        }

        #[test]
        fn arc_and_complement_partition(a in 0.0..1.0f64, b in 0.0..1.0f64, s in 0.0..1.0f64) {
            let arc = Arc::from_angles(a, b, 1.0).unwrap();
            prop_assume!(!arc.is_empty());
            let pt = p(s);
            let inside = arc.contains(&pt).unwrap();
            let outside = arc.complement().contains(&pt).unwrap();
            prop_assert!(inside ^ outside);
        }
    }
}
