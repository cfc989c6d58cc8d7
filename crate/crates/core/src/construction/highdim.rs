//! Point sets in `d >= 3` dimensions with many halving hyperplanes: planar
//! gadgets placed on well separated lines through the origin.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::artifact::{PointSetArtifact, Provenance};
use crate::error::{invalid, Error, Result};
use crate::exact::{approx, dyadic_from_f64, int, pow, pow2, ratio, ExactScalar, Orientation, Point, Segment};
use crate::oracle::{general_position_check, HalvingOracle};
use crate::par::{self, Execution};
use crate::report::{CheckOutcome, VerificationReport};

/// Dyadic resolution (bits) of the stereographic parameters of directions.
const DIRECTION_BITS: u32 = 12;
/// Largest number of `d`-subsets the direction degeneracy check enumerates.
const DEGENERACY_BUDGET: u64 = 20_000_000;
const JITTER_STEPS: i64 = 1 << 10;
const MAX_JITTER_RETRIES: u64 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    A,
    B,
}

/// Placement of the two rows of a B block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BlockBLayout {
    /// `r_i = (-2 + i/m, eps)`, `s_i = (1 + i/m, -eps)`.
    Literal,
    /// `r_i = (-2 + i/m, eps)`, `s_i = -r_i`: exactly centrally symmetric.
    #[default]
    Symmetric,
}

#[derive(Clone, Debug)]
pub struct PlanarBlock {
    pub kind: BlockKind,
    pub points: Vec<Point>,
    /// Leading points forming the important part (A blocks only).
    pub important_count: usize,
    /// Halving pairs of the important part, as indices into `points`.
    pub important_claims: Vec<Vec<usize>>,
}

/// Translates `important` to `1 <= x <= 1 + width` and rescales y into
/// `[0, eps^3 / 2]`.
pub fn normalize_important(important: &PointSetArtifact, epsilon: &ExactScalar) -> Result<PointSetArtifact> {
    if important.dimension != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: important.dimension,
        });
    }
    let min_x = important.xs().min().ok_or_else(|| invalid("empty important part"))?.clone();
    let max_x = important.xs().max().expect("non-empty").clone();
    if &max_x - &min_x > int(1) {
        return Err(invalid("important part is wider than 1 in x"));
    }
    let min_y = important.points.iter().map(Point::y).min().expect("non-empty").clone();
    let max_y = important.points.iter().map(Point::y).max().expect("non-empty").clone();
    let height = &max_y - &min_y;
    let factor = if height.is_zero() {
        ExactScalar::zero()
    } else {
        pow(epsilon, 3) / int(2) / height
    };
    let provenance = Provenance::new("important-part")
        .with_scalar("y_factor", &factor)
        .derived_from(&important.provenance);
    important.map_points(provenance, |p| {
        Ok(Point::xy(p.x() - &min_x + int(1), (p.y() - &min_y) * &factor))
    })
}

/// Important part (normalized `important`) followed by
/// `p_i = (-2 + i/m, eps^2)` and `q_i = (-3/2 + i/m, -eps^2)`, `i = 1..m/2`.
pub fn block_a(m: usize, epsilon: &ExactScalar, important: &PointSetArtifact) -> Result<PlanarBlock> {
    if m < 2 || m % 2 != 0 {
        return Err(invalid(format!("block A needs an even m >= 2, got {m}")));
    }
    if important.len() != m {
        return Err(invalid(format!(
            "important part has {} points, expected {m}",
            important.len()
        )));
    }
    if !epsilon.is_positive() {
        return Err(invalid("epsilon must be positive"));
    }
    let normalized = normalize_important(important, epsilon)?;
    let eps2 = epsilon * epsilon;
    let mut points = normalized.points;
    let step = |i: usize| ratio(i as i64, m as i64);
    for i in 1..=m / 2 {
        points.push(Point::xy(int(-2) + step(i), eps2.clone()));
    }
    for i in 1..=m / 2 {
        points.push(Point::xy(ratio(-3, 2) + step(i), -eps2.clone()));
    }
    Ok(PlanarBlock {
        kind: BlockKind::A,
        points,
        important_count: m,
        important_claims: normalized.claimed_halving,
    })
}

/// `r_1..r_m` followed by `s_1..s_m`.
pub fn block_b(m: usize, epsilon: &ExactScalar, layout: BlockBLayout) -> Result<PlanarBlock> {
    if m < 1 {
        return Err(invalid("block B needs m >= 1"));
    }
    let step = |i: usize| ratio(i as i64, m as i64);
    let r: Vec<Point> = (1..=m)
        .map(|i| Point::xy(int(-2) + step(i), epsilon.clone()))
        .collect();
    let s: Vec<Point> = match layout {
        BlockBLayout::Literal => (1..=m)
            .map(|i| Point::xy(int(1) + step(i), -epsilon.clone()))
            .collect(),
        BlockBLayout::Symmetric => r.iter().map(Point::neg).collect(),
    };
    Ok(PlanarBlock {
        kind: BlockKind::B,
        points: r.into_iter().chain(s).collect(),
        important_count: 0,
        important_claims: Vec::new(),
    })
}

/// Important halving lines must halve the whole block, with the `p` row on
/// one side and the `q` row on the other.
pub fn verify_block_a(block: &PlanarBlock) -> Result<VerificationReport> {
    let oracle = HalvingOracle::new(block.points.clone(), 2)?;
    let mut halving = oracle.certify(&block.important_claims, Execution::Sequential);
    halving.name = "important halving lines halve the block".into();
    let m = block.important_count;
    let mut rows = CheckOutcome::new("p row and q row on opposite sides");
    for c in &block.important_claims {
        rows.examine(1);
        let line = Segment::new(block.points[c[0]].clone(), block.points[c[1]].clone())?;
        let side = |range: std::ops::Range<usize>| -> Vec<Orientation> {
            block.points[range].iter().map(|p| line.side_of(p).expect("planar")).collect()
        };
        let p_side = side(m..m + m / 2);
        let q_side = side(m + m / 2..2 * m);
        let uniform = |v: &[Orientation], o: Orientation| v.iter().all(|&s| s == o);
        let ok = (uniform(&p_side, Orientation::CounterClockwise) && uniform(&q_side, Orientation::Clockwise))
            || (uniform(&p_side, Orientation::Clockwise) && uniform(&q_side, Orientation::CounterClockwise));
        if !ok {
            rows.fail(|| format!("important line {c:?} mixes the unimportant rows"));
        }
    }
    let mut report = VerificationReport::new("block A");
    report.push(halving);
    report.push(rows);
    Ok(report)
}

/// A rational unit vector kept with its integer numerator and denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Direction {
    numer: Vec<i128>,
    denom: i128,
}

impl Direction {
    /// Inverse stereographic image of `a / 2^bits`, which has last coordinate
    /// in `(0, 1]`.
    fn from_parameters(a: &[i64]) -> Self {
        let scale = 1i128 << DIRECTION_BITS;
        let norm: i128 = a.iter().map(|&v| v as i128 * v as i128).sum();
        let mut numer: Vec<i128> = a.iter().map(|&v| 2 * scale * v as i128).collect();
        numer.push(scale * scale - norm);
        Direction {
            numer,
            denom: scale * scale + norm,
        }
    }

    fn point(&self) -> Point {
        let den = BigInt::from(self.denom);
        Point::new(
            self.numer
                .iter()
                .map(|&v| ExactScalar::new(BigInt::from(v), den.clone()))
                .collect(),
        )
    }

    fn dot_numer(&self, other: &Direction) -> i128 {
        self.numer.iter().zip(&other.numer).map(|(a, b)| a * b).sum()
    }
}

/// `|c - c'|^2 >= 1/m^2` for unit vectors, i.e. `2 m^2 |c.c'| <= (2m^2 - 1) D D'`
/// (checked against `c'` and `-c'` at once).
fn separated(a: &Direction, b: &Direction, m: usize) -> bool {
    let two_m2 = 2 * (m as i128) * (m as i128);
    let lhs = BigInt::from(two_m2) * BigInt::from(a.dot_numer(b).abs());
    let rhs = BigInt::from(two_m2 - 1) * BigInt::from(a.denom) * BigInt::from(b.denom);
    lhs <= rhs
}

fn det_i128(mut m: Vec<Vec<i128>>) -> Option<i128> {
    let n = m.len();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let swap = (k + 1..n).find(|&r| m[r][k] != 0)?;
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = m[i][j].checked_mul(m[k][k])?.checked_sub(m[i][k].checked_mul(m[k][j])?)?;
                m[i][j] = v / prev;
            }
        }
        prev = m[k][k];
    }
    Some(sign * m[n - 1][n - 1])
}

fn det_exact(m: &[Vec<i128>]) -> BigInt {
    match det_i128(m.to_vec()) {
        Some(v) => BigInt::from(v),
        None => {
            // singular matrices can also stop the i128 path early; fall back
            let mut big: Vec<Vec<BigInt>> =
                m.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
            bareiss_big(&mut big)
        }
    }
}

fn bareiss_big(m: &mut [Vec<BigInt>]) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

#[derive(Clone, Debug)]
pub struct DirectionSet {
    pub dimension: usize,
    /// One representative of each antipodal pair (last coordinate positive).
    pub centers: Vec<Point>,
    /// Lower bound on the squared chord between any two of the `2k` directions.
    pub min_separation: ExactScalar,
    pub report: VerificationReport,
    dirs: Vec<Direction>,
    m: usize,
}

impl DirectionSet {
    pub fn pairs(&self) -> usize {
        self.centers.len()
    }

    pub fn antipodes(&self) -> Vec<Point> {
        self.centers.iter().map(Point::neg).collect()
    }

    /// All `2k` directions: representatives, then antipodes.
    pub fn all(&self) -> Vec<Point> {
        let mut v = self.centers.clone();
        v.extend(self.antipodes());
        v
    }

    /// The first `count` pairs, with separation and degeneracy re-checked.
    pub fn take_pairs(&self, count: usize) -> Result<DirectionSet> {
        if count > self.pairs() {
            return Err(Error::Construction(format!(
                "only {} direction pairs available, {count} requested",
                self.pairs()
            )));
        }
        let dirs = self.dirs[..count].to_vec();
        let (dirs, report) = check_directions(dirs, self.dimension, self.m, false);
        if dirs.len() != count {
            return Err(Error::Construction(
                "selected directions are degenerate".into(),
            ));
        }
        Ok(DirectionSet {
            dimension: self.dimension,
            centers: dirs.iter().map(Direction::point).collect(),
            min_separation: self.min_separation.clone(),
            report,
            dirs,
            m: self.m,
        })
    }
}

/// Removes directions until no `d` of them (nor `d - 1` of them with the
/// last axis) are linearly dependent, and re-checks separation.
fn check_directions(
    mut dirs: Vec<Direction>,
    d: usize,
    m: usize,
    allow_removal: bool,
) -> (Vec<Direction>, VerificationReport) {
    let mut report = VerificationReport::new(format!("{} direction pairs in dimension {d}", dirs.len()));
    let mut sep = CheckOutcome::new("squared chord >= 1/m^2 between all directions");
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            sep.examine(1);
            if !separated(&dirs[i], &dirs[j], m) {
                sep.fail(|| format!("directions {i} and {j}"));
            }
        }
    }
    let mut axis = CheckOutcome::new("no direction on the last axis");
    for (i, dir) in dirs.iter().enumerate() {
        axis.examine(1);
        if dir.numer[..d - 1].iter().all(|&v| v == 0) {
            axis.fail(|| format!("direction {i}"));
        }
    }

    let mut degenerate = CheckOutcome::new("no d directions (or d-1 with the last axis) linearly dependent");
    let subsets = binomial(dirs.len() as u64, d as u64);
    if subsets > DEGENERACY_BUDGET {
        degenerate.note(format!(
            "{subsets} subsets exceed the budget; checked when pairs are selected"
        ));
    } else {
        loop {
            let bad = first_dependent(&dirs, d);
            match bad {
                None => break,
                Some(idx) if allow_removal => {
                    degenerate.note(format!("dropped direction {idx} (dependent subset)"));
                    dirs.remove(idx);
                }
                Some(idx) => {
                    degenerate.fail(|| format!("dependent subset ending at direction {idx}"));
                    dirs.truncate(idx);
                    break;
                }
            }
        }
        degenerate.examine(binomial(dirs.len() as u64, d as u64) + binomial(dirs.len() as u64, d as u64 - 1));
    }
    report.push(sep);
    report.push(axis);
    report.push(degenerate);
    (dirs, report)
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r.min(u64::MAX as u128) as u64
}

/// Largest index of the first dependent subset found, in enumeration order.
fn first_dependent(dirs: &[Direction], d: usize) -> Option<usize> {
    let n = dirs.len();
    let mut found = None;
    let mut idx = vec![0usize; d];
    // d-subsets, then (d-1)-subsets with the last axis
    for size in [d, d - 1] {
        if size == 0 || size > n {
            continue;
        }
        for (k, slot) in idx.iter_mut().take(size).enumerate() {
            *slot = k;
        }
        loop {
            let mut rows: Vec<Vec<i128>> = idx[..size].iter().map(|&i| dirs[i].numer.clone()).collect();
            if size == d - 1 {
                let mut axis = vec![0i128; d];
                axis[d - 1] = 1;
                rows.push(axis);
            }
            if det_exact(&rows).is_zero() {
                found = Some(idx[size - 1]);
                break;
            }
            // next combination
            let mut k = size;
            while k > 0 && idx[k - 1] == n - size + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            idx[k - 1] += 1;
            for j in k..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
        if found.is_some() {
            break;
        }
    }
    found
}

/// Greedy antipodally symmetric packing: coordinate axes first, then seeded
/// random directions, each jittered and snapped to a rational unit vector,
/// kept when its squared chord to every kept direction (and antipode) is at
/// least `1/m^2`, which forces an angle of at least `1/m`.
pub fn sphere_directions(m: usize, d: usize, seed: u64) -> Result<DirectionSet> {
    if d < 3 {
        return Err(invalid("directions need d >= 3"));
    }
    if m < 1 {
        return Err(invalid("m must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = 0.1 / m as f64;
    let candidates = (32 * (m + 1).pow(d as u32 - 1)).min(20_000);
    let scale = (1u64 << DIRECTION_BITS) as f64;
    let mut dirs: Vec<Direction> = Vec::new();
    for c in 0..d + candidates {
        let mut v: Vec<f64> = if c < d {
            (0..d).map(|i| if i == c { 1.0 } else { 0.0 }).collect()
        } else {
            loop {
                let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n2: f64 = v.iter().map(|x| x * x).sum();
                if (0.01..=1.0).contains(&n2) {
                    break v;
                }
            }
        };
        for x in v.iter_mut() {
            *x += rng.gen_range(-jitter..jitter);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        if v[d - 1] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        if v[d - 1] < 1e-3 {
            continue;
        }
        let a: Vec<i64> = v[..d - 1]
            .iter()
            .map(|x| (x / (1.0 + v[d - 1]) * scale).round() as i64)
            .collect();
        if a.iter().all(|&x| x == 0) {
            continue;
        }
        let dir = Direction::from_parameters(&a);
        if dirs.iter().all(|o| separated(o, &dir, m)) {
            dirs.push(dir);
        }
    }
    let (dirs, mut report) = check_directions(dirs, d, m, true);
    if dirs.is_empty() {
        return Err(Error::Construction("no directions survived".into()));
    }
    if let Some(c) = report.checks.first_mut() {
        c.note(format!(
            "{} pairs from {} candidates; m^(d-1) = {}",
            dirs.len(),
            d + candidates,
            m.pow(d as u32 - 1)
        ));
    }
    Ok(DirectionSet {
        dimension: d,
        centers: dirs.iter().map(Direction::point).collect(),
        min_separation: ratio(1, (m * m) as i64),
        report,
        dirs,
        m,
    })
}

fn dot(a: &[ExactScalar], b: &[ExactScalar]) -> ExactScalar {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear independence by exact Gaussian elimination.
fn independent(vectors: &[&[ExactScalar]]) -> bool {
    let mut rows: Vec<Vec<ExactScalar>> = vectors.iter().map(|v| v.to_vec()).collect();
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in rank + 1..rows.len() {
            let f = &rows[r][col] / &rows[rank][col];
            for c in col..cols {
                let v = &rows[rank][c] * &f;
                rows[r][c] -= v;
            }
        }
        rank += 1;
    }
    rank == rows.len()
}

#[derive(Clone, Debug)]
pub struct HighDimParameters {
    pub dimension: usize,
    /// Points per row: A blocks have `2m`, B blocks `2m` points.
    pub m: usize,
    pub epsilon: ExactScalar,
    pub a_blocks: usize,
    pub b_blocks: usize,
    pub seed: u64,
    pub layout: BlockBLayout,
}

impl HighDimParameters {
    /// Default `eps = 2^-12`.
    pub fn new(dimension: usize, m: usize, a_blocks: usize, b_blocks: usize) -> Self {
        HighDimParameters {
            dimension,
            m,
            epsilon: pow2(-12),
            a_blocks,
            b_blocks,
            seed: 0,
            layout: BlockBLayout::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointRole {
    Important,
    Unimportant,
    BlockB,
    Apex,
}

#[derive(Clone, Debug)]
pub struct BlockPlacement {
    pub kind: BlockKind,
    pub axis: Point,
    /// Second spanning vector of the block's plane (orthogonal to the axis).
    pub plane_vector: Point,
    pub start: usize,
    pub len: usize,
    /// Important halving pairs, as global indices.
    pub claims: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct SpatialAssembly {
    pub dimension: usize,
    pub points: Vec<Point>,
    /// Block index (None for apex points) and role of every point.
    pub roles: Vec<(Option<usize>, PointRole)>,
    pub blocks: Vec<BlockPlacement>,
    pub apex_points: Vec<Point>,
    pub jitter: ExactScalar,
    pub provenance: Provenance,
}

impl SpatialAssembly {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_artifact(&self, claims: Vec<Vec<usize>>) -> Result<PointSetArtifact> {
        PointSetArtifact::new(self.dimension, self.points.clone(), self.provenance.clone())?
            .with_claims(claims)
    }

    fn blocks_of(&self, kind: BlockKind) -> Vec<usize> {
        (0..self.blocks.len()).filter(|&b| self.blocks[b].kind == kind).collect()
    }
}

fn embed(p: &Point, axis: &Point, plane: &Point) -> Point {
    Point::new(
        axis.coords()
            .iter()
            .zip(plane.coords())
            .map(|(a, w)| p.x() * a + p.y() * w)
            .collect(),
    )
}

/// Places A blocks on the first `a_blocks` directions and B blocks on the
/// next `b_blocks`, each in a plane through its axis avoiding every other
/// direction, then applies a seeded general-position jitter.
pub fn assemble(
    params: &HighDimParameters,
    important: &PointSetArtifact,
    directions: &DirectionSet,
) -> Result<SpatialAssembly> {
    let d = params.dimension;
    if d < 3 || directions.dimension != d {
        return Err(invalid(format!("assembly needs d >= 3 directions in dimension {d}")));
    }
    if params.b_blocks < d - 2 || params.a_blocks == 0 {
        return Err(invalid(format!(
            "need at least one A block and {} B blocks",
            d - 2
        )));
    }
    let used = params.a_blocks + params.b_blocks;
    let dirs = directions.take_pairs(used)?;
    let a = block_a(params.m, &params.epsilon, important)?;
    let b = block_b(params.m, &params.epsilon, params.layout)?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut points = Vec::new();
    let mut roles = Vec::new();
    let mut blocks = Vec::new();
    for (idx, axis) in dirs.centers.iter().enumerate() {
        let planar = if idx < params.a_blocks { &a } else { &b };
        let plane_vector = plane_vector(axis, idx, &dirs.centers, &mut rng)?;
        let start = points.len();
        for (local, p) in planar.points.iter().enumerate() {
            points.push(embed(p, axis, &plane_vector));
            let role = match planar.kind {
                BlockKind::A if local < planar.important_count => PointRole::Important,
                BlockKind::A => PointRole::Unimportant,
                BlockKind::B => PointRole::BlockB,
            };
            roles.push((Some(idx), role));
        }
        blocks.push(BlockPlacement {
            kind: planar.kind,
            axis: axis.clone(),
            plane_vector,
            start,
            len: planar.points.len(),
            claims: planar
                .important_claims
                .iter()
                .map(|c| c.iter().map(|&i| start + i).collect())
                .collect(),
        });
    }

    // jitter well below both eps^3 and the smallest point gap
    let min_sq = crate::exact::squared_distance_extremes(&points)?.0;
    let gap_bits = (-(approx(&min_sq).sqrt() / 10.0).log2()).ceil() as i64;
    let eps_bits = (-(approx(&pow(&params.epsilon, 3))).log2()).ceil() as i64 + 24;
    let jitter = pow2(-gap_bits.max(eps_bits));
    let step = &jitter / int(JITTER_STEPS);

    let mut attempt = 0;
    let jittered = loop {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(1000 + attempt));
        let moved: Vec<Point> = points
            .iter()
            .map(|p| {
                Point::new(
                    p.coords()
                        .iter()
                        .map(|c| c + &step * int(rng.gen_range(-JITTER_STEPS..=JITTER_STEPS)))
                        .collect(),
                )
            })
            .collect();
        if general_position_check(&moved, d)?.passed() {
            break moved;
        }
        attempt += 1;
        if attempt == MAX_JITTER_RETRIES {
            return Err(Error::Construction(
                "general position not reached within the retry budget".into(),
            ));
        }
    };

    let provenance = Provenance::new("highdim")
        .with("dimension", d)
        .with("m", params.m)
        .with("a_blocks", params.a_blocks)
        .with("b_blocks", params.b_blocks)
        .with("seed", params.seed)
        .with("layout", format!("{:?}", params.layout))
        .with_scalar("epsilon", &params.epsilon)
        .with_scalar("jitter", &jitter)
        .with("jitter_attempts", attempt + 1)
        .derived_from(&important.provenance);
    Ok(SpatialAssembly {
        dimension: d,
        points: jittered,
        roles,
        blocks,
        apex_points: Vec::new(),
        jitter,
        provenance,
    })
}

/// A seeded rational vector orthogonal to `axis`, scaled to about unit
/// length, whose span with `axis` contains no other center.
fn plane_vector(axis: &Point, idx: usize, centers: &[Point], rng: &mut ChaCha8Rng) -> Result<Point> {
    let d = axis.dim();
    for _ in 0..64 {
        let r: Vec<ExactScalar> = (0..d).map(|_| dyadic_from_f64(rng.gen_range(-1.0..1.0), 12)).collect();
        let proj = dot(&r, axis.coords());
        let w: Vec<ExactScalar> = r.iter().zip(axis.coords()).map(|(ri, ai)| ri - &proj * ai).collect();
        let len = approx(&dot(&w, &w)).sqrt();
        if len < 0.1 {
            continue;
        }
        let inv = dyadic_from_f64(1.0 / len, 20);
        let w: Vec<ExactScalar> = w.iter().map(|v| v * &inv).collect();
        let clear = centers.iter().enumerate().filter(|&(j, _)| j != idx).all(|(_, c)| {
            independent(&[axis.coords(), &w, c.coords()])
        });
        if clear {
            return Ok(Point::new(w));
        }
    }
    Err(Error::Construction(format!("no clear plane through direction {idx}")))
}

/// Every tuple (u, v, w_1..w_{d-2}): an important halving pair of one A
/// block and one point from each of `d - 2` distinct B blocks.
pub fn candidate_planes(assembly: &SpatialAssembly) -> Vec<Vec<usize>> {
    let d = assembly.dimension;
    let a_blocks = assembly.blocks_of(BlockKind::A);
    let b_blocks = assembly.blocks_of(BlockKind::B);
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    let mut b_sets = Vec::new();
    choose(&b_blocks, d - 2, 0, &mut chosen, &mut b_sets);
    for &a in &a_blocks {
        for pair in &assembly.blocks[a].claims {
            for set in &b_sets {
                let mut tails: Vec<Vec<usize>> = vec![Vec::new()];
                for &b in set {
                    let block = &assembly.blocks[b];
                    tails = tails
                        .into_iter()
                        .flat_map(|t| {
                            (block.start..block.start + block.len).map(move |p| {
                                let mut t = t.clone();
                                t.push(p);
                                t
                            })
                        })
                        .collect();
                }
                for t in tails {
                    let mut c = pair.clone();
                    c.extend(t);
                    out.push(c);
                }
            }
        }
    }
    out
}

fn choose(items: &[usize], k: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in from..items.len() {
        cur.push(items[i]);
        choose(items, k, i + 1, cur, out);
        cur.pop();
    }
}

/// `#A * pairs * C(#B, d-2) * (2m)^(d-2)`.
pub fn candidate_count_formula(a_blocks: usize, pairs: usize, b_blocks: usize, m: usize, d: usize) -> u64 {
    a_blocks as u64 * pairs as u64 * binomial(b_blocks as u64, d as u64 - 2) * (2 * m as u64).pow(d as u32 - 2)
}

pub fn diff_of_hyperplane(assembly: &SpatialAssembly, tuple: &[usize]) -> Result<i64> {
    HalvingOracle::new(assembly.points.clone(), assembly.dimension)?.diff(tuple)
}

#[derive(Clone, Debug)]
pub struct ParityFix {
    pub assembly: SpatialAssembly,
    pub candidates: Vec<Vec<usize>>,
    /// Candidate diffs before any reflection.
    pub diffs: Vec<i64>,
    pub reflected: bool,
    /// Most frequent diff after reflection (never positive).
    pub majority: i64,
    /// Candidates whose diff equals the majority; halving after the fix.
    pub retained: Vec<Vec<usize>>,
}

/// Reflects the last coordinate when the most frequent candidate diff is
/// positive, then adds `|x|` points `(0, ..., 0, 2 + (i-1)/n)` above
/// everything.
pub fn parity_fix(assembly: &SpatialAssembly, exec: Execution) -> Result<ParityFix> {
    let candidates = candidate_planes(assembly);
    let oracle = HalvingOracle::new(assembly.points.clone(), assembly.dimension)?;
    let diffs = par::map_slice(&candidates, exec, |c| oracle.diff(c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut histogram: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in &diffs {
        *histogram.entry(v).or_default() += 1;
    }
    // most frequent; ties go to the value needing no reflection, then fewer points
    let mode = histogram
        .iter()
        .max_by(|a, b| {
            a.1.cmp(b.1)
                .then((*b.0 > 0).cmp(&(*a.0 > 0)))
                .then(b.0.abs().cmp(&a.0.abs()))
        })
        .map(|(&v, _)| v)
        .unwrap_or(0);
    let reflected = mode > 0;
    let majority = -mode.abs();
    let d = assembly.dimension;
    let mut fixed = assembly.clone();
    if reflected {
        fixed.points = fixed
            .points
            .iter()
            .map(|p| {
                let mut c = p.coords().to_vec();
                c[d - 1] = -c[d - 1].clone();
                Point::new(c)
            })
            .collect();
    }
    let n = fixed.points.len() as i64;
    for i in 0..majority.unsigned_abs() as i64 {
        let mut c = vec![ExactScalar::zero(); d];
        c[d - 1] = int(2) + ratio(i, n);
        let apex = Point::new(c);
        fixed.points.push(apex.clone());
        fixed.apex_points.push(apex);
        fixed.roles.push((None, PointRole::Apex));
    }
    fixed.provenance = fixed
        .provenance
        .clone()
        .with("reflected", reflected)
        .with("apex_points", majority.unsigned_abs());
    let sign = if reflected { -1 } else { 1 };
    let retained = candidates
        .iter()
        .zip(&diffs)
        .filter(|(_, &v)| v * sign == majority)
        .map(|(c, _)| c.clone())
        .collect();
    Ok(ParityFix {
        assembly: fixed,
        candidates,
        diffs,
        reflected,
        majority,
        retained,
    })
}

/// Diff bounds and parity over every candidate, exact certification of the
/// retained ones, the point-count parity, and general position.
pub fn verify_highdim(fix: &ParityFix, exec: Execution) -> Result<VerificationReport> {
    let d = fix.assembly.dimension as i64;
    let mut report = VerificationReport::new(format!(
        "{}-dimensional assembly of {} points",
        d,
        fix.assembly.len()
    ));

    let a_blocks = fix.assembly.blocks_of(BlockKind::A);
    let b_blocks = fix.assembly.blocks_of(BlockKind::B).len();
    let pairs = a_blocks.first().map_or(0, |&a| fix.assembly.blocks[a].claims.len());
    let m = fix.assembly.blocks.first().map_or(0, |b| b.len / 2);
    let mut count = CheckOutcome::new("candidate count identity");
    count.examine(1);
    let formula = candidate_count_formula(a_blocks.len(), pairs, b_blocks, m, d as usize);
    if formula != fix.candidates.len() as u64 {
        count.fail(|| format!("enumerated {} but formula gives {formula}", fix.candidates.len()));
    }
    report.push(count);

    let mut bound = CheckOutcome::new("|diff| <= d - 1");
    let mut parity = CheckOutcome::new("diff - d even");
    let mut histogram: BTreeMap<i64, usize> = BTreeMap::new();
    for (c, &v) in fix.candidates.iter().zip(&fix.diffs) {
        bound.examine(1);
        parity.examine(1);
        *histogram.entry(v).or_default() += 1;
        if v.abs() > d - 1 {
            bound.fail(|| format!("{c:?}: diff {v}"));
        }
        if (v - d).rem_euclid(2) != 0 {
            parity.fail(|| format!("{c:?}: diff {v}"));
        }
    }
    bound.note(format!("diff histogram {histogram:?}"));
    report.push(bound);
    report.push(parity);

    let oracle = HalvingOracle::new(fix.assembly.points.clone(), fix.assembly.dimension)?;
    let mut halving = oracle.certify(&fix.retained, exec);
    halving.name = "retained candidates are halving after the fix".into();
    halving.note(format!(
        "{} of {} candidates retained (majority diff {}, reflected {})",
        fix.retained.len(),
        fix.candidates.len(),
        fix.majority,
        fix.reflected
    ));
    report.push(halving);

    let mut count_parity = CheckOutcome::new("n + d even");
    count_parity.examine(1);
    if (fix.assembly.len() as i64 + d) % 2 != 0 {
        count_parity.fail(|| format!("n = {}", fix.assembly.len()));
    }
    report.push(count_parity);

    report.extend(general_position_check(&fix.assembly.points, fix.assembly.dimension)?);
    Ok(report)
}

/// Squared distance extremes of the block points (apex points excluded),
/// with `max <= 16` (diameter at most 4) checked exactly.
pub fn distance_report(assembly: &SpatialAssembly) -> Result<VerificationReport> {
    let block_points: Vec<Point> = assembly
        .points
        .iter()
        .zip(&assembly.roles)
        .filter(|(_, r)| r.1 != PointRole::Apex)
        .map(|(p, _)| p.clone())
        .collect();
    let (min_sq, max_sq) = crate::exact::squared_distance_extremes(&block_points)?;
    let mut check = CheckOutcome::new("diameter at most 4");
    check.examine(1);
    if max_sq > int(16) {
        check.fail(|| format!("max squared distance {}", approx(&max_sq)));
    }
    let m = assembly.blocks.first().map_or(1, |b| b.len / 2) as f64;
    let c = 1.0 / (m * approx(&min_sq).sqrt());
    check.note(format!(
        "min distance {:.6e} = 1/({c:.3} m); max distance {:.6}",
        approx(&min_sq).sqrt(),
        approx(&max_sq).sqrt()
    ));
    Ok(VerificationReport::single("distances", check))
}

pub fn last_coordinate_sign(p: &Point) -> i8 {
    p.last().signum().to_i8().unwrap_or(0)
}
