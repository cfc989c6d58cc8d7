//! Exact rational kernel: scalars, points, segments, strips and the
//! predicates the constructions are stated in terms of.
//!
//! Nothing in here rounds. The recursive construction separates points by
//! gaps like `2^-48`, far below what a double can resolve next to `1.0`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with a positive
/// denominator.
pub type ExactScalar = BigRational;

pub fn int(v: i64) -> ExactScalar {
    BigRational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> ExactScalar {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `2^e` for any integer `e`.
pub fn pow2(e: i64) -> ExactScalar {
    let magnitude = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        BigRational::from_integer(magnitude)
    } else {
        BigRational::new(BigInt::one(), magnitude)
    }
}

/// `base^e` for a non-negative exponent.
pub fn pow(base: &ExactScalar, e: u32) -> ExactScalar {
    num_traits::pow(base.clone(), e as usize)
}

/// Lossy conversion, for display and diagnostics only.
pub fn approx(v: &ExactScalar) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Nearest dyadic rational `k / 2^bits` to a finite double.
pub fn dyadic_from_f64(v: f64, bits: u32) -> ExactScalar {
    let scaled = (v * 2f64.powi(bits as i32)).round();
    BigRational::new(
        BigInt::from(scaled as i128),
        BigInt::one() << bits as usize,
    )
}

/// A point in `d`-space with exact rational coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Point {
    coords: Vec<ExactScalar>,
}

impl Point {
    pub fn new(coords: Vec<ExactScalar>) -> Self {
        Point { coords }
    }

    pub fn xy(x: ExactScalar, y: ExactScalar) -> Self {
        Point { coords: vec![x, y] }
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Point {
            coords: coords.iter().map(|&c| int(c)).collect(),
        }
    }

    pub fn origin(dim: usize) -> Self {
        Point {
            coords: vec![ExactScalar::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[ExactScalar] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<ExactScalar> {
        self.coords
    }

    pub fn coord(&self, i: usize) -> &ExactScalar {
        &self.coords[i]
    }

    pub fn x(&self) -> &ExactScalar {
        &self.coords[0]
    }

    pub fn y(&self) -> &ExactScalar {
        &self.coords[1]
    }

    pub fn last(&self) -> &ExactScalar {
        self.coords.last().expect("points have at least one coordinate")
    }

    pub fn translated(&self, offset: &[ExactScalar]) -> Point {
        Point {
            coords: self
                .coords
                .iter()
                .zip(offset)
                .map(|(c, o)| c + o)
                .collect(),
        }
    }

    pub fn scaled(&self, factor: &ExactScalar) -> Point {
        Point {
            coords: self.coords.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn neg(&self) -> Point {
        Point {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    pub fn sub(&self, other: &Point) -> Vec<ExactScalar> {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect()
    }

    pub(crate) fn require_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// Turn direction of an ordered triple of planar points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Clockwise,
    Collinear,
    CounterClockwise,
}

impl Orientation {
    pub fn from_sign<T: Signed>(v: &T) -> Self {
        if v.is_positive() {
            Orientation::CounterClockwise
        } else if v.is_negative() {
            Orientation::Clockwise
        } else {
            Orientation::Collinear
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Orientation::Clockwise => -1,
            Orientation::Collinear => 0,
            Orientation::CounterClockwise => 1,
        }
    }

    pub fn reverse(self) -> Self {
        match self {
            Orientation::Clockwise => Orientation::CounterClockwise,
            Orientation::Collinear => Orientation::Collinear,
            Orientation::CounterClockwise => Orientation::Clockwise,
        }
    }
}

/// Sign of `det(b - a, c - a)`.
pub fn orientation(a: &Point, b: &Point, c: &Point) -> Result<Orientation> {
    a.require_dim(2)?;
    b.require_dim(2)?;
    c.require_dim(2)?;
    let det = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    Ok(Orientation::from_sign(&det))
}

pub fn squared_distance(a: &Point, b: &Point) -> Result<ExactScalar> {
    a.require_dim(b.dim())?;
    Ok(a
        .coords
        .iter()
        .zip(&b.coords)
        .map(|(p, q)| {
            let d = p - q;
            &d * &d
        })
        .fold(ExactScalar::zero(), |acc, v| acc + v))
}

/// A planar segment with distinct endpoints.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    a: Point,
    b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self> {
        a.require_dim(2)?;
        b.require_dim(2)?;
        if a == b {
            return Err(Error::DegenerateSegment);
        }
        Ok(Segment { a, b })
    }

    pub fn a(&self) -> &Point {
        &self.a
    }

    pub fn b(&self) -> &Point {
        &self.b
    }

    pub fn is_horizontal(&self) -> bool {
        self.a.y() == self.b.y()
    }

    /// The endpoint with the smaller, then larger, y-coordinate.
    pub fn by_height(&self) -> (&Point, &Point) {
        if self.a.y() <= self.b.y() {
            (&self.a, &self.b)
        } else {
            (&self.b, &self.a)
        }
    }

    /// x-coordinate of the segment's supporting line at height `y`.
    pub fn x_at(&self, y: &ExactScalar) -> Result<ExactScalar> {
        if self.is_horizontal() {
            return Err(Error::HorizontalSegment);
        }
        let (a, b) = (&self.a, &self.b);
        Ok(a.x() + (y - a.y()) * (b.x() - a.x()) / (b.y() - a.y()))
    }

    /// y-coordinate of the supporting line at abscissa `x`; `None` for a
    /// vertical segment.
    pub fn y_at(&self, x: &ExactScalar) -> Option<ExactScalar> {
        let (a, b) = (&self.a, &self.b);
        if a.x() == b.x() {
            return None;
        }
        Some(a.y() + (x - a.x()) * (b.y() - a.y()) / (b.x() - a.x()))
    }

    /// Orientation of `q` against the line directed from the lower-x
    /// endpoint to the higher-x endpoint: counter-clockwise means above.
    pub fn side_of(&self, q: &Point) -> Result<Orientation> {
        let (lo, hi) = if self.a.x() <= self.b.x() {
            (&self.a, &self.b)
        } else {
            (&self.b, &self.a)
        };
        orientation(lo, hi, q)
    }
}

impl fmt::Debug for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}--{:?}", self.a, self.b)
    }
}

/// The segment's line clipped to the slab `0 <= y <= 1`, lower end first.
pub fn extension(s: &Segment) -> Result<Segment> {
    if s.is_horizontal() {
        return Err(Error::HorizontalSegment);
    }
    for p in [s.a(), s.b()] {
        if p.y().is_negative() || p.y() > &int(1) {
            return Err(Error::OutsideUnitSlab);
        }
    }
    let bottom = Point::xy(s.x_at(&ExactScalar::zero())?, ExactScalar::zero());
    let top = Point::xy(s.x_at(&ExactScalar::one())?, ExactScalar::one());
    Segment::new(bottom, top)
}

/// Length of the horizontal segment from `q` to the line through `line`.
pub fn horizontal_distance(line: &Segment, q: &Point) -> Result<ExactScalar> {
    q.require_dim(2)?;
    Ok((q.x() - line.x_at(q.y())?).abs())
}

/// Points inside the closed horizontal slab of `base` whose horizontal
/// distance to its line is at most `half_width`.
#[derive(Clone, Debug)]
pub struct Strip {
    base: Segment,
    half_width: ExactScalar,
}

impl Strip {
    pub fn new(base: Segment, half_width: ExactScalar) -> Result<Self> {
        if base.is_horizontal() {
            return Err(Error::HorizontalSegment);
        }
        if !half_width.is_positive() {
            return Err(crate::error::invalid("strip half-width must be positive"));
        }
        Ok(Strip { base, half_width })
    }

    /// The `alpha`-strip of a segment: built on its extension.
    pub fn around(s: &Segment, alpha: ExactScalar) -> Result<Self> {
        Strip::new(extension(s)?, alpha)
    }

    pub fn base(&self) -> &Segment {
        &self.base
    }

    pub fn half_width(&self) -> &ExactScalar {
        &self.half_width
    }

    pub fn widened(&self, factor: &ExactScalar) -> Strip {
        Strip {
            base: self.base.clone(),
            half_width: &self.half_width * factor,
        }
    }
}

pub fn in_alpha_strip(strip: &Strip, q: &Point) -> bool {
    if q.dim() != 2 {
        return false;
    }
    let (lo, hi) = strip.base.by_height();
    if q.y() < lo.y() || q.y() > hi.y() {
        return false;
    }
    match horizontal_distance(&strip.base, q) {
        Ok(d) => d <= strip.half_width,
        Err(_) => false,
    }
}

/// A planar rotation with rational entries (so `cos^2 + sin^2 = 1` holds
/// exactly).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rotation2 {
    cos: ExactScalar,
    sin: ExactScalar,
}

impl Rotation2 {
    pub fn identity() -> Self {
        Rotation2 {
            cos: ExactScalar::one(),
            sin: ExactScalar::zero(),
        }
    }

    /// Rotation by `2 * atan(t)`.
    pub fn from_half_angle_tangent(t: &ExactScalar) -> Self {
        let t2 = t * t;
        let den = ExactScalar::one() + &t2;
        Rotation2 {
            cos: (ExactScalar::one() - &t2) / &den,
            sin: (t * int(2)) / den,
        }
    }

    /// Counter-clockwise rotation by `quarter_turns * pi/2`.
    pub fn quarter_turns(quarter_turns: i64) -> Self {
        let (c, s) = match quarter_turns.rem_euclid(4) {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        };
        Rotation2 {
            cos: int(c),
            sin: int(s),
        }
    }

    /// Rational rotation whose angle is within roughly `2^-bits` of `angle`
    /// (radians). The residual after removing whole quarter turns is kept in
    /// `[-pi/4, pi/4]` so the half-angle tangent stays bounded.
    pub fn approximating(angle: f64, bits: u32) -> Self {
        let quarter = std::f64::consts::FRAC_PI_2;
        let turns = (angle / quarter).round();
        let residual = angle - turns * quarter;
        let t = dyadic_from_f64((residual / 2.0).tan(), bits);
        Rotation2::quarter_turns(turns as i64).then(&Rotation2::from_half_angle_tangent(&t))
    }

    pub fn cos(&self) -> &ExactScalar {
        &self.cos
    }

    pub fn sin(&self) -> &ExactScalar {
        &self.sin
    }

    pub fn determinant(&self) -> ExactScalar {
        &self.cos * &self.cos + &self.sin * &self.sin
    }

    /// The angle in `(-pi, pi]`, for diagnostics.
    pub fn angle(&self) -> f64 {
        approx(&self.sin).atan2(approx(&self.cos))
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Rotation2) -> Rotation2 {
        Rotation2 {
            cos: &self.cos * &other.cos - &self.sin * &other.sin,
            sin: &self.sin * &other.cos + &self.cos * &other.sin,
        }
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        p.require_dim(2)?;
        let (x, y) = (p.x(), p.y());
        Ok(Point::xy(
            &self.cos * x - &self.sin * y,
            &self.sin * x + &self.cos * y,
        ))
    }
}

pub fn rational_rotation(t: &ExactScalar) -> Rotation2 {
    Rotation2::from_half_angle_tangent(t)
}

/// Smallest and largest squared pairwise distance. Needs at least two points.
pub fn squared_distance_extremes(points: &[Point]) -> Result<(ExactScalar, ExactScalar)> {
    if points.len() < 2 {
        return Err(crate::error::invalid("need at least two points"));
    }
    let mut min: Option<ExactScalar> = None;
    let mut max = ExactScalar::zero();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = squared_distance(a, b)?;
            if min.as_ref().map_or(true, |m| &d < m) {
                min = Some(d.clone());
            }
            if d > max {
                max = d;
            }
        }
    }
    Ok((min.expect("two or more points"), max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: ExactScalar, y: ExactScalar) -> Point {
        Point::xy(x, y)
    }

    fn pi(x: i64, y: i64) -> Point {
        Point::from_ints(&[x, y])
    }

    #[test]
    fn orientation_examples() {
        assert_eq!(
            orientation(&pi(0, 0), &pi(1, 0), &pi(0, 1)).unwrap().sign(),
            1
        );
        assert_eq!(
            orientation(&pi(0, 0), &pi(1, 1), &pi(2, 2)).unwrap().sign(),
            0
        );
        assert_eq!(
            orientation(&pi(0, 0), &pi(1, 0), &pi(1, -1)).unwrap().sign(),
            -1
        );
    }

    #[test]
    fn orientation_rejects_3d() {
        let err = orientation(&pi(0, 0), &Point::from_ints(&[1, 0, 0]), &pi(0, 1));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn extension_examples() {
        let s = Segment::new(p(ratio(1, 4), ratio(1, 4)), p(ratio(3, 4), ratio(3, 4))).unwrap();
        let e = extension(&s).unwrap();
        assert_eq!(e.a(), &pi(0, 0));
        assert_eq!(e.b(), &pi(1, 1));

        let s = Segment::new(pi(0, 0), pi(1, 1)).unwrap();
        assert_eq!(extension(&s).unwrap(), s);

        let s = Segment::new(
            p(ratio(1, 2), int(0)),
            p(ratio(1, 2) + ratio(1, 8), ratio(1, 2)),
        )
        .unwrap();
        let e = extension(&s).unwrap();
        assert_eq!(e.a(), &p(ratio(1, 2), int(0)));
        assert_eq!(e.b(), &p(ratio(3, 4), int(1)));
    }

    #[test]
    fn extension_of_horizontal_fails() {
        let s = Segment::new(pi(0, 0), pi(1, 0)).unwrap();
        assert!(matches!(extension(&s), Err(Error::HorizontalSegment)));
    }

    #[test]
    fn horizontal_distance_examples() {
        let diag = Segment::new(pi(0, 0), pi(1, 1)).unwrap();
        assert_eq!(
            horizontal_distance(&diag, &p(ratio(1, 2), int(0))).unwrap(),
            ratio(1, 2)
        );
        assert_eq!(
            horizontal_distance(&diag, &p(ratio(3, 7), ratio(3, 7))).unwrap(),
            int(0)
        );
        let steep = Segment::new(pi(0, 0), pi(1, 2)).unwrap();
        assert_eq!(horizontal_distance(&steep, &pi(1, 1)).unwrap(), ratio(1, 2));
        let flat = Segment::new(pi(0, 0), pi(1, 0)).unwrap();
        assert!(horizontal_distance(&flat, &pi(1, 1)).is_err());
    }

    #[test]
    fn strip_examples() {
        let diag = Segment::new(pi(0, 0), pi(1, 1)).unwrap();
        let strip = Strip::around(&diag, ratio(1, 4)).unwrap();
        assert!(in_alpha_strip(&strip, &p(ratio(1, 8), ratio(1, 4))));
        assert!(!in_alpha_strip(&strip, &p(ratio(1, 8), ratio(1, 2))));
        assert!(!in_alpha_strip(&strip, &p(int(2), int(2))));
        assert!(Strip::around(&diag, int(0)).is_err());
    }

    #[test]
    fn rotation_examples() {
        let id = rational_rotation(&int(0));
        assert_eq!(id, Rotation2::identity());
        let quarter = rational_rotation(&int(1));
        assert_eq!(quarter.apply(&pi(1, 0)).unwrap(), pi(0, 1));
        let r = rational_rotation(&ratio(1, 2));
        assert_eq!(
            r.apply(&pi(1, 0)).unwrap(),
            p(ratio(3, 5), ratio(4, 5))
        );
        assert_eq!(r.determinant(), int(1));
    }

    #[test]
    fn approximating_rotation_is_close() {
        for k in 0..13 {
            let target = 2.0 * std::f64::consts::PI * k as f64 / 13.0;
            let r = Rotation2::approximating(target, 24);
            assert_eq!(r.determinant(), int(1));
            let mut err = (r.angle() - target).rem_euclid(std::f64::consts::TAU);
            if err > std::f64::consts::PI {
                err -= std::f64::consts::TAU;
            }
            assert!(err.abs() < 1e-6, "k={k} err={err}");
        }
    }

    #[test]
    fn squared_distance_examples() {
        assert_eq!(squared_distance(&pi(0, 0), &pi(1, 1)).unwrap(), int(2));
        assert_eq!(squared_distance(&pi(0, 0), &pi(0, 0)).unwrap(), int(0));
        assert_eq!(
            squared_distance(
                &Point::from_ints(&[1, 2, 3]),
                &Point::from_ints(&[4, 6, 3])
            )
            .unwrap(),
            int(25)
        );
        assert!(squared_distance(&pi(0, 0), &Point::from_ints(&[0, 0, 0])).is_err());
    }

    #[test]
    fn pow2_negative_and_positive() {
        assert_eq!(pow2(3), int(8));
        assert_eq!(pow2(-3), ratio(1, 8));
        assert_eq!(pow2(0), int(1));
    }
}
