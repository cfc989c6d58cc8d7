//! Unions of rotated copies ("blocks") of a flattened recursive set, and the
//! padding that adjusts their point count.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::artifact::{x_spread, PointKind, PointSetArtifact, Provenance};
use crate::construction::recursive::GeometricGraph;
use crate::error::{invalid, Error, Result};
use crate::exact::{int, pow, ratio, ExactScalar, Orientation, Point, Rotation2, Segment};
use crate::oracle::HalvingOracle;
use crate::par::{self, Execution};
use crate::report::{CheckOutcome, VerificationReport};

/// Exponent of the quantization grid used by default.
pub const DEFAULT_QUANTIZATION: u32 = 9;

/// Resolution of the random perturbation steps.
const PERTURBATION_STEPS: i64 = 1 << 20;

/// `n^-9`, the horizontal move every level-`i` set tolerates.
pub fn perturbation_tolerance(n: usize) -> ExactScalar {
    ExactScalar::one() / pow(&int(n as i64), 9)
}

/// Moves every point horizontally by a seeded random multiple of
/// `magnitude / 2^20` in `[-magnitude, magnitude]`.
pub fn perturb_horizontally(points: &[Point], magnitude: &ExactScalar, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = magnitude / int(PERTURBATION_STEPS);
    points
        .iter()
        .map(|p| {
            let k = rng.gen_range(-PERTURBATION_STEPS..=PERTURBATION_STEPS);
            Point::xy(p.x() + &unit * int(k), p.y().clone())
        })
        .collect()
}

/// Perturbs `g` `trials` times and re-certifies all its segments.
pub fn verify_perturbation_tolerance(
    g: &GeometricGraph,
    magnitude: &ExactScalar,
    trials: u32,
    seed: u64,
    exec: Execution,
) -> Result<VerificationReport> {
    let n = g.len();
    let tolerance = perturbation_tolerance(n);
    if magnitude.is_negative() || magnitude > &tolerance {
        return Err(Error::ToleranceExceeded(format!(
            "perturbation {magnitude} exceeds n^-9 = {tolerance}"
        )));
    }
    let claims = g.claims();
    let base = g.coordinates();
    let mut report = VerificationReport::new(format!(
        "perturbation tolerance of level {} (order {}), magnitude {magnitude}",
        g.index, g.order
    ));
    for t in 0..trials {
        let moved = perturb_horizontally(&base, magnitude, seed.wrapping_add(t as u64));
        let oracle = HalvingOracle::new(moved, 2)?;
        let mut check = oracle.certify(&claims, exec);
        check.name = format!("trial {t}");
        report.push(check);
    }
    Ok(report)
}

/// `floor(n^q x) / n^q + j / n^(q+1)`.
pub fn quantize_coordinate(x: &ExactScalar, j: usize, n: usize, q: u32) -> ExactScalar {
    let grid = pow(&int(n as i64), q);
    let fine = &grid * int(n as i64);
    (x * &grid).floor() / grid + int(j as i64) / fine
}

/// Snaps x-coordinates to the grid (points numbered from 1 in order), checks
/// that no point moved by more than `n^-9`, then translates by a grid
/// multiple so the smallest x is in `[1, 1 + n^-q)`.
pub fn quantize(points: &[Point], q: u32) -> Result<Vec<Point>> {
    if q == 0 {
        return Err(invalid("quantization exponent must be positive"));
    }
    let n = points.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let tolerance = perturbation_tolerance(n);
    let mut out = Vec::with_capacity(n);
    for (idx, p) in points.iter().enumerate() {
        p.require_dim(2)?;
        let x = quantize_coordinate(p.x(), idx + 1, n, q);
        let moved = (&x - p.x()).abs();
        if moved > tolerance {
            return Err(Error::ToleranceExceeded(format!(
                "point {} moves by {moved} > n^-9 with exponent {q}",
                idx + 1
            )));
        }
        out.push(Point::xy(x, p.y().clone()));
    }
    let grid = pow(&int(n as i64), q);
    let min_x = out.iter().map(Point::x).min().expect("non-empty").clone();
    let shift = ((int(1) - min_x) * &grid).ceil() / &grid;
    Ok(out
        .into_iter()
        .map(|p| Point::xy(p.x() + &shift, p.y().clone()))
        .collect())
}

/// `(x, y) -> (x, delta^2 y)`.
pub fn flatten(points: &[Point], delta: &ExactScalar) -> Result<Vec<Point>> {
    if !delta.is_positive() {
        return Err(invalid("flattening step must be positive"));
    }
    let factor = delta * delta;
    points
        .iter()
        .map(|p| {
            p.require_dim(2)?;
            Ok(Point::xy(p.x().clone(), p.y() * &factor))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct BlockParameters {
    /// A finalized recursive set with its halving claims.
    pub base: PointSetArtifact,
    /// `N`: there are `N + 1` positive and `N` negative blocks.
    pub blocks: u32,
    /// Quantization exponent.
    pub quantization: u32,
    /// Flattening and rotation step.
    pub delta: ExactScalar,
}

impl BlockParameters {
    /// Default step `1 / (64 N n)`.
    pub fn new(base: PointSetArtifact, blocks: u32) -> Self {
        let delta = ratio(1, 64 * blocks.max(1) as i64 * base.len().max(1) as i64);
        BlockParameters {
            base,
            blocks,
            quantization: DEFAULT_QUANTIZATION,
            delta,
        }
    }

    pub fn with_quantization(mut self, q: u32) -> Self {
        self.quantization = q;
        self
    }

    pub fn with_delta(mut self, delta: ExactScalar) -> Self {
        self.delta = delta;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.blocks == 0 {
            return Err(invalid("need at least one block pair (N >= 1)"));
        }
        if self.quantization == 0 {
            return Err(invalid("quantization exponent must be positive"));
        }
        if !self.delta.is_positive() {
            return Err(invalid("delta must be positive"));
        }
        if self.base.dimension != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.base.dimension,
            });
        }
        if self.base.len() % 2 != 0 || self.base.is_empty() {
            return Err(invalid("base must have a positive even number of points"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BlockSet {
    /// Blocks `k = 0..=N`, rotated by about `2 k delta`.
    pub positive_blocks: Vec<Vec<Point>>,
    /// Blocks `k = 0..N`, rotated by about `pi + (2k+1) delta`.
    pub negative_blocks: Vec<Vec<Point>>,
    pub scale: ExactScalar,
    /// Claimed halving pairs inside one block (indices into the block).
    pub block_claims: Vec<Vec<usize>>,
    pub block_kinds: Option<Vec<PointKind>>,
    pub parameters: Provenance,
}

impl BlockSet {
    pub fn blocks(&self) -> impl Iterator<Item = &Vec<Point>> {
        self.positive_blocks.iter().chain(&self.negative_blocks)
    }

    pub fn block_count(&self) -> usize {
        self.positive_blocks.len() + self.negative_blocks.len()
    }

    pub fn block_size(&self) -> usize {
        self.positive_blocks[0].len()
    }

    /// Positive blocks first, then negative ones; claims are offset per block.
    pub fn to_artifact(&self) -> Result<PointSetArtifact> {
        let size = self.block_size();
        let points: Vec<Point> = self.blocks().flatten().cloned().collect();
        let claims = (0..self.block_count())
            .flat_map(|b| {
                self.block_claims
                    .iter()
                    .map(move |c| c.iter().map(|&i| b * size + i).collect())
            })
            .collect();
        let mut artifact = PointSetArtifact::new(2, points, self.parameters.clone())?;
        if let Some(kinds) = &self.block_kinds {
            let all = (0..self.block_count()).flat_map(|_| kinds.iter().copied()).collect();
            artifact = artifact.with_kinds(all)?;
        }
        artifact.with_claims(claims)
    }
}

/// Quantizes and flattens the base, places the blocks and scales the union
/// by `n^q / (6N)`.
pub fn assemble_blocks(params: &BlockParameters) -> Result<BlockSet> {
    params.validate()?;
    let n = params.base.len();
    let big_n = params.blocks as i64;
    let flat = flatten(&quantize(&params.base.points, params.quantization)?, &params.delta)?;
    let grid = pow(&int(n as i64), params.quantization);
    let step = ExactScalar::one() / &grid;
    let scale = &grid / int(6 * big_n);
    let half_turn = Rotation2::quarter_turns(2);

    let place = |k: i64, rotation: &Rotation2| -> Result<Vec<Point>> {
        let shift = [&step * int(k), ExactScalar::zero()];
        flat.iter()
            .map(|p| Ok(rotation.apply(&p.translated(&shift))?.scaled(&scale)))
            .collect()
    };
    let positive_blocks = (0..=big_n)
        .map(|k| place(k, &Rotation2::from_half_angle_tangent(&(&params.delta * int(k)))))
        .collect::<Result<Vec<_>>>()?;
    let negative_blocks = (0..big_n)
        .map(|k| {
            let t = &params.delta * int(2 * k + 1) / int(2);
            place(k, &half_turn.then(&Rotation2::from_half_angle_tangent(&t)))
        })
        .collect::<Result<Vec<_>>>()?;

    let parameters = Provenance::new("blocks")
        .with("blocks", params.blocks)
        .with("quantization", params.quantization)
        .with_scalar("delta", &params.delta)
        .with_scalar("scale", &scale)
        .derived_from(&params.base.provenance);
    Ok(BlockSet {
        positive_blocks,
        negative_blocks,
        scale,
        block_claims: params.base.claimed_halving.clone(),
        block_kinds: params.base.kinds.clone(),
        parameters,
    })
}

/// Certifies the transplanted family, checks that every block line has the
/// same number of whole blocks on each side, and reports the x-spacing.
pub fn verify_assembly(set: &BlockSet, exec: Execution) -> Result<VerificationReport> {
    let artifact = set.to_artifact()?;
    let mut report = VerificationReport::new(format!(
        "block union of {} blocks x {} points",
        set.block_count(),
        set.block_size()
    ));
    let oracle = HalvingOracle::new(artifact.points.clone(), 2)?;
    let mut halving = oracle.certify(&artifact.claimed_halving, exec);
    halving.name = "transplanted segments are halving".into();
    let expected = set.block_count() * set.block_claims.len();
    halving.note(format!("{expected} transplanted segments = (2N+1) m"));
    report.push(halving);

    let blocks: Vec<&Vec<Point>> = set.blocks().collect();
    let balance = par::map_range(blocks.len(), exec, |b| {
        let mut c = CheckOutcome::new("");
        for claim in &set.block_claims {
            c.examine(1);
            let line = match Segment::new(blocks[b][claim[0]].clone(), blocks[b][claim[1]].clone()) {
                Ok(l) => l,
                Err(e) => {
                    c.fail(|| format!("block {b} claim {claim:?}: {e}"));
                    continue;
                }
            };
            let (mut left, mut right) = (0, 0);
            for (other, pts) in blocks.iter().enumerate() {
                if other == b {
                    continue;
                }
                let sides: Vec<Orientation> = pts
                    .iter()
                    .map(|p| line.side_of(p).expect("planar"))
                    .collect();
                if sides.iter().all(|&s| s == Orientation::CounterClockwise) {
                    left += 1;
                } else if sides.iter().all(|&s| s == Orientation::Clockwise) {
                    right += 1;
                } else {
                    c.fail(|| format!("block {b} claim {claim:?} splits block {other}"));
                }
            }
            if left != right {
                c.fail(|| format!("block {b} claim {claim:?}: {left} blocks above, {right} below"));
            }
        }
        c
    });
    let mut whole = CheckOutcome::new("block lines split the other blocks evenly");
    for part in balance {
        whole.absorb(part);
    }
    report.push(whole);

    let mut spacing = CheckOutcome::new("distinct x-coordinates");
    spacing.examine(1);
    match x_spread(&artifact.points) {
        Some((gap, width)) if gap.is_positive() => {
            spacing.note(format!("min dx = {gap}"));
            spacing.note(format!("x width = {width}"));
        }
        Some((gap, _)) => spacing.fail(|| format!("min dx = {gap}")),
        None => {}
    }
    report.push(spacing);
    Ok(report)
}

/// Smallest x gap of the assembled union, exactly.
pub fn min_x_gap(set: &BlockSet) -> Result<ExactScalar> {
    let points: Vec<Point> = set.blocks().flatten().cloned().collect();
    x_spread(&points)
        .map(|(gap, _)| gap)
        .ok_or_else(|| invalid("fewer than two points"))
}

/// Adds pairs of points, one far above and one far below every claimed line,
/// each at the midpoint of the currently widest x gap.
pub fn pad_to_count(artifact: &PointSetArtifact, target: usize) -> Result<PointSetArtifact> {
    if artifact.dimension != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: artifact.dimension,
        });
    }
    if target % 2 != 0 {
        return Err(invalid(format!("target {target} is odd")));
    }
    if target < artifact.len() {
        return Err(invalid(format!(
            "target {target} is below the current count {}",
            artifact.len()
        )));
    }
    if artifact.len() % 2 != 0 {
        return Err(invalid("padding needs an even starting count"));
    }
    if target == artifact.len() {
        return Ok(artifact.clone());
    }
    let mut xs: Vec<ExactScalar> = artifact.xs().cloned().collect();
    xs.sort();
    xs.dedup();
    if xs.len() < 2 {
        return Err(invalid("padding needs at least two distinct x-coordinates"));
    }
    let (lo_x, hi_x) = (xs[0].clone(), xs[xs.len() - 1].clone());

    // height exceeding every claimed line and every point over the x-range
    let mut reach = artifact
        .points
        .iter()
        .map(|p| p.y().abs())
        .max()
        .unwrap_or_else(ExactScalar::zero);
    for c in &artifact.claimed_halving {
        let line = Segment::new(artifact.points[c[0]].clone(), artifact.points[c[1]].clone())?;
        for x in [&lo_x, &hi_x] {
            let y = line
                .y_at(x)
                .ok_or_else(|| invalid(format!("claimed line {c:?} is vertical")))?;
            reach = reach.max(y.abs());
        }
    }
    let height = (reach + int(1)).ceil();

    let mut points = artifact.points.clone();
    let mut kinds = artifact.kinds.clone();
    for pair in 0..(target - artifact.len()) / 2 {
        for sign in [1, -1] {
            let (i, _) = xs
                .windows(2)
                .enumerate()
                .max_by(|a, b| (&a.1[1] - &a.1[0]).cmp(&(&b.1[1] - &b.1[0])).then(b.0.cmp(&a.0)))
                .expect("two or more xs");
            let x = (&xs[i] + &xs[i + 1]) / int(2);
            xs.insert(i + 1, x.clone());
            let y = (&height + int(pair as i64)) * int(sign);
            points.push(Point::xy(x, y));
            if let Some(k) = kinds.as_mut() {
                k.push(PointKind::Plain);
            }
        }
    }
    let provenance = Provenance::new("padded")
        .with("target", target)
        .derived_from(&artifact.provenance);
    let mut out = PointSetArtifact::new(2, points, provenance)?;
    if let Some(k) = kinds {
        out = out.with_kinds(k)?;
    }
    out.with_claims(artifact.claimed_halving.clone())
}

/// Exact value of the spacing bound `1 / (12 n N)` for the block union.
pub fn spacing_bound(n: usize, blocks: u32) -> ExactScalar {
    ratio(1, 12 * n as i64 * blocks as i64)
}

/// Largest denominator size in bits, for reporting coordinate growth.
pub fn max_denominator_bits(points: &[Point]) -> u64 {
    points
        .iter()
        .flat_map(|p| p.coords().iter())
        .map(|c| c.denom().bits())
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::recursive::{build, finalize};
    use crate::oracle::count_halving_lines_sweep;

    const SEQ: Execution = Execution::Sequential;

    fn base6() -> PointSetArtifact {
        finalize(&build(1, 1).unwrap()).unwrap()
    }

    #[test]
    fn perturbations_keep_segments() {
        let g = build(1, 1).unwrap();
        let r = verify_perturbation_tolerance(&g, &perturbation_tolerance(6), 10, 7, SEQ).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks.len(), 10);
        let r = verify_perturbation_tolerance(&g, &ExactScalar::zero(), 1, 0, SEQ).unwrap();
        assert!(r.passed());
        assert!(verify_perturbation_tolerance(&g, &ratio(1, 1000), 1, 0, SEQ).is_err());
    }

    #[test]
    fn perturbation_is_bounded_and_seeded() {
        let pts = build(1, 1).unwrap().coordinates();
        let m = ratio(1, 1000);
        let a = perturb_horizontally(&pts, &m, 3);
        assert_eq!(a, perturb_horizontally(&pts, &m, 3));
        assert_ne!(a, perturb_horizontally(&pts, &m, 4));
        for (p, q) in pts.iter().zip(&a) {
            assert!((p.x() - q.x()).abs() <= m);
            assert_eq!(p.y(), q.y());
        }
    }

    #[test]
    fn quantize_formula() {
        let six_10 = pow(&int(6), 10);
        assert_eq!(
            quantize_coordinate(&ratio(1, 2), 1, 6, 9),
            ratio(1, 2) + ExactScalar::one() / six_10
        );
        assert_eq!(quantize_coordinate(&ratio(3, 4), 2, 2, 2), int(1));
        let on_grid = ratio(5, 36);
        assert_eq!(
            quantize_coordinate(&on_grid, 3, 6, 2),
            &on_grid + ratio(3, 216)
        );
    }

    #[test]
    fn quantize_moves_within_tolerance_and_separates() {
        let base = base6();
        let q = quantize(&base.points, 9).unwrap();
        let (gap, width) = x_spread(&q).unwrap();
        assert!(gap >= ExactScalar::one() / pow(&int(6), 10));
        let min = q.iter().map(Point::x).min().unwrap();
        assert!(min >= &int(1));
        assert!(&(min + width) <= &int(3));
        // two points, exponent 2: the move exceeds 2^-9
        let pts = vec![Point::xy(ratio(1, 3), int(0)), Point::xy(ratio(3, 4), int(1))];
        assert!(matches!(quantize(&pts, 2), Err(Error::ToleranceExceeded(_))));
    }

    #[test]
    fn flatten_examples() {
        let p = vec![Point::from_ints(&[2, 1])];
        assert_eq!(flatten(&p, &ratio(1, 10)).unwrap(), vec![Point::xy(int(2), ratio(1, 100))]);
        assert_eq!(flatten(&p, &int(1)).unwrap(), p);
        let g = build(1, 1).unwrap().coordinates();
        let before = count_halving_lines_sweep(&g).unwrap().halving_pairs;
        let after = count_halving_lines_sweep(&flatten(&g, &ratio(1, 7)).unwrap())
            .unwrap()
            .halving_pairs;
        assert_eq!(before, after);
    }

    #[test]
    fn assembly_one_and_two() {
        for (n_blocks, points) in [(1u32, 18usize), (2, 30)] {
            let set = assemble_blocks(&BlockParameters::new(base6(), n_blocks)).unwrap();
            assert_eq!(set.positive_blocks.len(), n_blocks as usize + 1);
            assert_eq!(set.negative_blocks.len(), n_blocks as usize);
            let art = set.to_artifact().unwrap();
            assert_eq!(art.len(), points);
            assert_eq!(art.claimed_halving.len(), (2 * n_blocks as usize + 1) * 5);
            let r = verify_assembly(&set, SEQ).unwrap();
            assert!(r.passed(), "{r}");
            let all = count_halving_lines_sweep(&art.points).unwrap();
            assert!(all.halving_count >= art.claimed_halving.len());
        }
    }

    #[test]
    fn first_positive_block_is_the_translated_base() {
        let params = BlockParameters::new(base6(), 1);
        let set = assemble_blocks(&params).unwrap();
        let flat = flatten(&quantize(&params.base.points, 9).unwrap(), &params.delta).unwrap();
        let expected: Vec<Point> = flat.iter().map(|p| p.scaled(&set.scale)).collect();
        assert_eq!(set.positive_blocks[0], expected);
    }

    #[test]
    fn oversized_delta_is_reported() {
        let params = BlockParameters::new(base6(), 2).with_delta(ratio(1, 2));
        let set = assemble_blocks(&params).unwrap();
        assert!(!verify_assembly(&set, SEQ).unwrap().passed());
    }

    #[test]
    fn padding() {
        let set = assemble_blocks(&BlockParameters::new(base6(), 1)).unwrap();
        let art = set.to_artifact().unwrap();
        assert_eq!(pad_to_count(&art, 18).unwrap(), art);
        assert!(pad_to_count(&art, 19).is_err());
        assert!(pad_to_count(&art, 16).is_err());
        let padded = pad_to_count(&art, 22).unwrap();
        assert_eq!(padded.len(), 22);
        let oracle = HalvingOracle::new(padded.points.clone(), 2).unwrap();
        assert!(oracle.certify(&padded.claimed_halving, SEQ).passed);
        let (gap, _) = x_spread(&padded.points).unwrap();
        let (old_gap, _) = x_spread(&art.points).unwrap();
        assert!(gap >= old_gap);
    }

    #[test]
    fn spacing_is_reported_exactly() {
        let set = assemble_blocks(&BlockParameters::new(base6(), 1)).unwrap();
        let gap = min_x_gap(&set).unwrap();
        assert!(gap.is_positive());
        assert_eq!(spacing_bound(6, 1), ratio(1, 72));
    }
}
