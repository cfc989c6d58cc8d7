//! Rotated copies of a flattened block set arranged around the origin, plus
//! polygon padding and the density check.

use num_traits::{One, Signed};

use crate::artifact::{PointSetArtifact, Provenance};
use crate::error::{invalid, Error, Result};
use crate::exact::{
    approx, int, pow, pow2, ratio, squared_distance_extremes, ExactScalar, Orientation, Point,
    Rotation2, Segment,
};
use crate::oracle::HalvingOracle;
use crate::par::{self, Execution};
use crate::report::{CheckOutcome, VerificationReport};

/// Bits of the half-angle tangent used for the copy rotations.
pub const ROTATION_BITS: u32 = 24;
/// How many times the flattening factor is halved before giving up.
pub const MAX_EPSILON_RETRIES: u32 = 8;
const MAX_POLYGON_RETRIES: u32 = 32;

/// Default flattening factor `1 / (2^12 n^2)`.
pub fn default_epsilon(n: usize) -> ExactScalar {
    pow2(-12) / int((n * n) as i64)
}

/// Uniform similarity taking the x-range onto `[1/2, 3/2]`.
pub fn normalize_for_lift(artifact: &PointSetArtifact) -> Result<PointSetArtifact> {
    if artifact.dimension != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: artifact.dimension,
        });
    }
    let lo = artifact.xs().min().ok_or_else(|| invalid("empty set"))?.clone();
    let hi = artifact.xs().max().expect("non-empty").clone();
    if lo == hi {
        return Err(invalid("all points share one x-coordinate"));
    }
    let factor = ExactScalar::one() / (&hi - &lo);
    let provenance = Provenance::new("normalized")
        .with_scalar("factor", &factor)
        .derived_from(&artifact.provenance);
    artifact.map_points(provenance, |p| {
        Ok(Point::xy(
            (p.x() - &lo) * &factor + ratio(1, 2),
            p.y() * &factor,
        ))
    })
}

/// `(x, y) -> (x + 1/2, eps^2 y)`; input x must lie in `[1/2, 3/2]` so the
/// result lies in `[1, 2]`.
pub fn lift(points: &[Point], epsilon: &ExactScalar) -> Result<Vec<Point>> {
    if !epsilon.is_positive() {
        return Err(invalid("epsilon must be positive"));
    }
    let (lo, hi) = (ratio(1, 2), ratio(3, 2));
    let factor = epsilon * epsilon;
    points
        .iter()
        .map(|p| {
            p.require_dim(2)?;
            if p.x() < &lo || p.x() > &hi {
                return Err(invalid(format!(
                    "x = {} outside the normalized range [1/2, 3/2]",
                    p.x()
                )));
            }
            Ok(Point::xy(p.x() + ratio(1, 2), p.y() * &factor))
        })
        .collect()
}

/// Copy `k` of `copies` is rotated by about `2 pi k / copies`.
pub fn copy_rotation(k: usize, copies: usize) -> Rotation2 {
    if k == 0 {
        return Rotation2::identity();
    }
    let angle = 2.0 * std::f64::consts::PI * k as f64 / copies as f64;
    Rotation2::approximating(angle, ROTATION_BITS)
}

/// `n + 1` rotated copies of the lifted set `r` (with its claims transplanted
/// into every copy).
pub fn assemble_rosette(r: &PointSetArtifact) -> Result<PointSetArtifact> {
    let n = r.len();
    let copies = n + 1;
    let mut points = Vec::with_capacity(n * copies);
    let mut claims = Vec::with_capacity(r.claimed_halving.len() * copies);
    for k in 0..copies {
        let rot = copy_rotation(k, copies);
        for p in &r.points {
            points.push(rot.apply(p)?);
        }
        for c in &r.claimed_halving {
            claims.push(c.iter().map(|&i| k * n + i).collect());
        }
    }
    let provenance = Provenance::new("rosette")
        .with("copies", copies)
        .with("rotation_bits", ROTATION_BITS)
        .derived_from(&r.provenance);
    let mut out = PointSetArtifact::new(2, points, provenance)?;
    if let Some(kinds) = &r.kinds {
        out = out.with_kinds((0..copies).flat_map(|_| kinds.iter().copied()).collect())?;
    }
    out.with_claims(claims)
}

/// Certifies the transplanted claims and checks that each copy's claimed
/// lines have `n/2` whole copies on either side.
pub fn verify_rosette(p: &PointSetArtifact, copy_size: usize, exec: Execution) -> Result<VerificationReport> {
    if copy_size == 0 || p.len() % copy_size != 0 {
        return Err(invalid("point count is not a multiple of the copy size"));
    }
    let copies = p.len() / copy_size;
    let mut report = VerificationReport::new(format!("rosette of {copies} copies x {copy_size} points"));

    let mut count = CheckOutcome::new("point count n(n+1)");
    count.examine(1);
    if copies != copy_size + 1 {
        count.fail(|| format!("{copies} copies of {copy_size} points"));
    }
    let mut distinct: Vec<&Point> = p.points.iter().collect();
    distinct.sort_by(|a, b| a.coords().cmp(b.coords()));
    distinct.dedup();
    if distinct.len() != p.len() {
        count.fail(|| format!("{} coincident points", p.len() - distinct.len()));
    }
    report.push(count);

    let oracle = HalvingOracle::new(p.points.clone(), 2)?;
    let mut halving = oracle.certify(&p.claimed_halving, exec);
    halving.name = "transplanted lines are halving".into();
    report.push(halving);

    let balance = par::map_slice(&p.claimed_halving, exec, |c| {
        let mut out = CheckOutcome::new("");
        out.examine(1);
        let own = c[0] / copy_size;
        let line = match Segment::new(p.points[c[0]].clone(), p.points[c[1]].clone()) {
            Ok(l) => l,
            Err(e) => {
                out.fail(|| format!("{c:?}: {e}"));
                return out;
            }
        };
        let (mut above, mut below) = (0, 0);
        for k in (0..copies).filter(|&k| k != own) {
            let block = &p.points[k * copy_size..(k + 1) * copy_size];
            let sides: Vec<Orientation> = block.iter().map(|q| line.side_of(q).expect("planar")).collect();
            if sides.iter().all(|&s| s == Orientation::CounterClockwise) {
                above += 1;
            } else if sides.iter().all(|&s| s == Orientation::Clockwise) {
                below += 1;
            } else {
                out.fail(|| format!("{c:?} splits copy {k}"));
            }
        }
        if above != below {
            out.fail(|| format!("{c:?}: {above} copies above, {below} below"));
        }
        out
    });
    let mut whole = CheckOutcome::new("copy lines split the other copies evenly");
    for b in balance {
        whole.absorb(b);
    }
    report.push(whole);
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct RosetteBuild {
    pub artifact: PointSetArtifact,
    pub epsilon: ExactScalar,
    pub retries: u32,
    pub report: VerificationReport,
}

/// Normalizes, lifts and assembles; halves epsilon until the rosette
/// verifies or the retry budget is spent (the last attempt is returned
/// either way).
pub fn build_rosette(
    base: &PointSetArtifact,
    epsilon: Option<ExactScalar>,
    exec: Execution,
) -> Result<RosetteBuild> {
    if base.len() % 2 != 0 {
        return Err(invalid("base must have an even number of points"));
    }
    let normalized = normalize_for_lift(base)?;
    let mut epsilon = epsilon.unwrap_or_else(|| default_epsilon(base.len()));
    let mut retries = 0;
    loop {
        let lifted = lift(&normalized.points, &epsilon)?;
        let provenance = Provenance::new("lifted")
            .with_scalar("epsilon", &epsilon)
            .derived_from(&normalized.provenance);
        let mut r = PointSetArtifact::new(2, lifted, provenance)?
            .with_claims(normalized.claimed_halving.clone())?;
        r.kinds = normalized.kinds.clone();
        let artifact = assemble_rosette(&r)?;
        let mut report = verify_rosette(&artifact, base.len(), exec)?;
        if report.passed() || retries == MAX_EPSILON_RETRIES {
            if let Some(c) = report.checks.first_mut() {
                c.note(format!("epsilon {epsilon} after {retries} halvings"));
            }
            return Ok(RosetteBuild {
                artifact,
                epsilon,
                retries,
                report,
            });
        }
        epsilon /= int(2);
        retries += 1;
    }
}

/// Adds `target - |P|` rational points on the circle of radius 3 at
/// (approximately) regular polygon angles, avoiding every claimed line.
pub fn pad_regular_polygon(p: &PointSetArtifact, target: usize) -> Result<PointSetArtifact> {
    if p.dimension != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: p.dimension,
        });
    }
    if target % 2 != 0 || target < p.len() {
        return Err(invalid(format!(
            "target {target} must be even and at least {}",
            p.len()
        )));
    }
    let extra = target - p.len();
    let mut n = 0usize;
    while (n + 1) * (n + 2) <= p.len() {
        n += 1;
    }
    if extra >= 4 * n + 6 {
        return Err(invalid(format!("{extra} extra points exceed 4n+6 = {}", 4 * n + 6)));
    }
    if extra == 0 {
        return Ok(p.clone());
    }
    let lines = p
        .claimed_halving
        .iter()
        .map(|c| Segment::new(p.points[c[0]].clone(), p.points[c[1]].clone()))
        .collect::<Result<Vec<_>>>()?;
    let radius = int(3);
    for attempt in 0..MAX_POLYGON_RETRIES {
        let offset = attempt as f64 * 0.1 / extra as f64;
        let vertices: Vec<Point> = (0..extra)
            .map(|j| {
                let angle = 2.0 * std::f64::consts::PI * j as f64 / extra as f64 + offset;
                Rotation2::approximating(angle, ROTATION_BITS)
                    .apply(&Point::xy(radius.clone(), int(0)))
                    .expect("planar")
            })
            .collect();
        let clear = vertices.iter().all(|v| {
            lines
                .iter()
                .all(|l| l.side_of(v).map_or(false, |s| s != Orientation::Collinear))
        });
        if !clear {
            continue;
        }
        let mut points = p.points.clone();
        points.extend(vertices);
        let candidate_provenance = Provenance::new("polygon-padded")
            .with("target", target)
            .with("attempt", attempt)
            .derived_from(&p.provenance);
        let mut out = PointSetArtifact::new(2, points, candidate_provenance)?
            .with_claims(p.claimed_halving.clone())?;
        if let Some(k) = &p.kinds {
            let mut kinds = k.clone();
            kinds.resize(target, crate::artifact::PointKind::Plain);
            out = out.with_kinds(kinds)?;
        }
        let oracle = HalvingOracle::new(out.points.clone(), 2)?;
        if oracle.certify(&out.claimed_halving, Execution::default()).passed {
            return Ok(out);
        }
    }
    Err(Error::Construction(format!(
        "no polygon placement kept every claimed line halving after {MAX_POLYGON_RETRIES} attempts"
    )))
}

/// `max_dist <= gamma * n^(1/d) * min_dist`, compared exactly as
/// `max_sq^d <= gamma^(2d) n^2 min_sq^d`.
pub fn density_check(p: &PointSetArtifact, gamma: &ExactScalar, d: u32) -> Result<VerificationReport> {
    if p.len() < 2 {
        return Err(invalid("density needs at least two points"));
    }
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let (min_sq, max_sq) = squared_distance_extremes(&p.points)?;
    let n = int(p.len() as i64);
    let lhs = pow(&max_sq, d);
    let rhs = pow(gamma, 2 * d) * &n * &n * pow(&min_sq, d);
    let mut check = CheckOutcome::new(format!("{}-dense", gamma));
    check.examine((p.len() * (p.len() - 1) / 2) as u64);
    let ratio_over_root = (approx(&max_sq) / approx(&min_sq)).sqrt() / (p.len() as f64).powf(1.0 / d as f64);
    check.note(format!(
        "max/min distance ratio divided by n^(1/{d}) is about {ratio_over_root:.6}"
    ));
    check.note(format!("min squared distance {min_sq} (about {:.3e})", approx(&min_sq)));
    check.note(format!("max squared distance about {:.6}", approx(&max_sq)));
    if lhs > rhs {
        check.fail(|| format!("ratio {ratio_over_root:.6} exceeds gamma = {gamma}"));
    }
    Ok(VerificationReport::single(
        format!("density of {} points in dimension {d}", p.len()),
        check,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::blocks::{assemble_blocks, BlockParameters};
    use crate::construction::recursive::{build, finalize};
    use crate::oracle::count_halving_lines_sweep;

    const SEQ: Execution = Execution::Sequential;

    fn six() -> PointSetArtifact {
        finalize(&build(1, 1).unwrap()).unwrap()
    }

    #[test]
    fn lift_examples() {
        let p = vec![Point::xy(ratio(1, 2), int(1))];
        assert_eq!(
            lift(&p, &ratio(1, 10)).unwrap(),
            vec![Point::xy(int(1), ratio(1, 100))]
        );
        assert_eq!(lift(&p, &int(1)).unwrap(), vec![Point::xy(int(1), int(1))]);
        assert!(lift(&[Point::from_ints(&[0, 0])], &int(1)).is_err());
    }

    #[test]
    fn lift_keeps_halving_lines() {
        let blocks = assemble_blocks(&BlockParameters::new(six(), 1)).unwrap();
        let base = normalize_for_lift(&blocks.to_artifact().unwrap()).unwrap();
        assert!(base.xs().all(|x| x >= &ratio(1, 2) && x <= &ratio(3, 2)));
        let before = count_halving_lines_sweep(&base.points).unwrap();
        let after = count_halving_lines_sweep(&lift(&base.points, &ratio(1, 64)).unwrap()).unwrap();
        assert_eq!(before.halving_pairs, after.halving_pairs);
    }

    #[test]
    fn rosette_of_six() {
        let build = build_rosette(&six(), None, SEQ).unwrap();
        assert!(build.report.passed(), "{}", build.report);
        assert_eq!(build.artifact.len(), 42);
        assert_eq!(build.artifact.claimed_halving.len(), 35);
        let all = count_halving_lines_sweep(&build.artifact.points).unwrap();
        assert!(all.halving_count >= 35);
        // copy 0 is the lifted set itself
        let normalized = normalize_for_lift(&six()).unwrap();
        let lifted = lift(&normalized.points, &build.epsilon).unwrap();
        assert_eq!(&build.artifact.points[..6], &lifted[..]);
    }

    #[test]
    fn polygon_padding() {
        let rosette = build_rosette(&six(), None, SEQ).unwrap().artifact;
        assert_eq!(pad_regular_polygon(&rosette, 42).unwrap(), rosette);
        let padded = pad_regular_polygon(&rosette, 44).unwrap();
        assert_eq!(padded.len(), 44);
        for v in &padded.points[42..] {
            let r2 = v.x() * v.x() + v.y() * v.y();
            assert!((r2 - int(9)).abs() <= ratio(1, 1_000_000));
        }
        assert!(pad_regular_polygon(&rosette, 43).is_err());
        assert!(pad_regular_polygon(&rosette, 42 + 30).is_err());
    }

    #[test]
    fn density_examples() {
        let square = PointSetArtifact::new(
            2,
            vec![
                Point::from_ints(&[0, 0]),
                Point::from_ints(&[1, 0]),
                Point::from_ints(&[0, 1]),
                Point::from_ints(&[1, 1]),
            ],
            Provenance::new("t"),
        )
        .unwrap();
        assert!(density_check(&square, &int(1), 2).unwrap().passed());
        let pair = PointSetArtifact::new(
            2,
            vec![Point::from_ints(&[0, 0]), Point::from_ints(&[1, 0])],
            Provenance::new("t"),
        )
        .unwrap();
        assert!(!density_check(&pair, &ratio(1, 2), 2).unwrap().passed());
        assert!(density_check(&pair, &int(1), 2).unwrap().passed());
    }
}
