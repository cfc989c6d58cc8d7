//! Independent halving oracles.
//!
//! Everything here works from coordinates alone: no construction metadata,
//! no genealogy. A line (hyperplane) through `d` points of an `n`-point set is
//! halving when exactly `(n - d) / 2` of the remaining points lie strictly on
//! each side and none lies on it.

mod lattice;

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::Point;
use crate::par::{self, Execution};
use crate::report::{CheckOutcome, VerificationReport, MAX_WITNESSES};

use lattice::{dot, homogeneous, hyperplane_through, PlanarKernel, PlanarLattice};

pub(crate) use lattice::determinant;

/// Strict side counts of the remaining points against one line/hyperplane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SideCounts {
    pub left: usize,
    pub right: usize,
    pub on: usize,
}

impl SideCounts {
    pub fn is_halving(&self) -> bool {
        self.on == 0 && self.left == self.right
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub halving_count: usize,
    /// Sorted index tuples, in lexicographic order.
    pub halving_pairs: Vec<Vec<usize>>,
    /// Side counts of each entry of `halving_pairs`.
    pub side_counts: Vec<SideCounts>,
    /// Tuples with at least one further point on their line/hyperplane.
    pub degenerate_tuples: usize,
    /// A few `(tuple.., extra point)` witnesses of those degeneracies.
    pub degeneracy_witnesses: Vec<Vec<usize>>,
}

impl OracleResult {
    fn from_rows(rows: Vec<RowTally>) -> Self {
        let mut out = OracleResult::default();
        for row in rows {
            for (tuple, counts) in row.halving {
                out.halving_pairs.push(tuple);
                out.side_counts.push(counts);
            }
            out.degenerate_tuples += row.degenerate;
            for w in row.witnesses {
                if out.degeneracy_witnesses.len() < MAX_WITNESSES {
                    out.degeneracy_witnesses.push(w);
                }
            }
        }
        out.halving_count = out.halving_pairs.len();
        out
    }

    pub fn contains(&self, tuple: &[usize]) -> bool {
        let mut t = tuple.to_vec();
        t.sort_unstable();
        self.halving_pairs.binary_search(&t).is_ok()
    }
}

#[derive(Default)]
struct RowTally {
    halving: Vec<(Vec<usize>, SideCounts)>,
    degenerate: usize,
    witnesses: Vec<Vec<usize>>,
}

/// Counting is defined for sets: coincident points are rejected.
fn require_distinct(points: &[Point]) -> Result<()> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].coords().cmp(points[b].coords()));
    if let Some(w) = order.windows(2).find(|w| points[w[0]] == points[w[1]]) {
        let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
        return Err(Error::Degenerate(format!("points {a} and {b} coincide")));
    }
    Ok(())
}

fn require_even_planar(n: usize) -> Result<()> {
    if n % 2 != 0 {
        return Err(invalid(format!(
            "halving lines need an even number of points, got {n}"
        )));
    }
    Ok(())
}

/// O(n^3): every pair against every other point.
pub fn count_halving_lines_naive(points: &[Point]) -> Result<OracleResult> {
    count_halving_lines_naive_with(points, Execution::default())
}

pub fn count_halving_lines_naive_with(points: &[Point], exec: Execution) -> Result<OracleResult> {
    require_even_planar(points.len())?;
    require_distinct(points)?;
    Ok(match PlanarLattice::new(points)? {
        PlanarLattice::Small(k) => naive_planar(&k, exec),
        PlanarLattice::Big(k) => naive_planar(&k, exec),
    })
}

fn naive_planar<K: PlanarKernel>(k: &K, exec: Execution) -> OracleResult {
    let n = k.len();
    let rows = par::map_range(n, exec, |i| {
        let dirs = k.dirs_from(i);
        let mut tally = RowTally::default();
        for j in i + 1..n {
            let mut c = SideCounts::default();
            let mut witness = None;
            for (m, d) in dirs.iter().enumerate() {
                if m == i || m == j {
                    continue;
                }
                match K::cross(&dirs[j], d) {
                    Ordering::Greater => c.left += 1,
                    Ordering::Less => c.right += 1,
                    Ordering::Equal => {
                        c.on += 1;
                        witness.get_or_insert(m);
                    }
                }
            }
            if let Some(m) = witness {
                tally.degenerate += 1;
                if tally.witnesses.len() < MAX_WITNESSES {
                    tally.witnesses.push(vec![i, j, m]);
                }
            }
            if c.is_halving() {
                tally.halving.push((vec![i, j], c));
            }
        }
        tally
    });
    OracleResult::from_rows(rows)
}

/// O(n^2 log n): angular sort around each pivot, then side counts of every
/// line through the pivot by binary search in the cyclic order.
pub fn count_halving_lines_sweep(points: &[Point]) -> Result<OracleResult> {
    count_halving_lines_sweep_with(points, Execution::default())
}

pub fn count_halving_lines_sweep_with(points: &[Point], exec: Execution) -> Result<OracleResult> {
    require_even_planar(points.len())?;
    require_distinct(points)?;
    Ok(match PlanarLattice::new(points)? {
        PlanarLattice::Small(k) => sweep_planar(&k, exec),
        PlanarLattice::Big(k) => sweep_planar(&k, exec),
    })
}

fn sweep_planar<K: PlanarKernel>(k: &K, exec: Execution) -> OracleResult {
    let n = k.len();
    let rows = par::map_range(n, exec, |i| {
        let mut tally = RowTally::default();
        if n < 2 {
            return tally;
        }
        let all = k.dirs_from(i);
        let mut order: Vec<usize> = (0..n).filter(|&m| m != i).collect();
        order.sort_by(|&a, &b| K::angle_cmp(&all[a], &all[b]));
        let m = order.len();
        let at = |pos: usize| &all[order[pos % m]];
        let same_dir = |u: &K::Dir, v: &K::Dir| {
            K::cross(u, v) == Ordering::Equal && K::dot(u, v) == Ordering::Greater
        };

        // Start of each run of equal directions.
        let mut group_start = vec![0usize; m];
        for pos in 1..m {
            group_start[pos] = if same_dir(at(pos - 1), at(pos)) {
                group_start[pos - 1]
            } else {
                pos
            };
        }
        // A run can wrap around position 0 only if every direction is equal,
        // which the sort order rules out for runs straddling the half-plane
        // boundary; equal directions always share a half-plane.
        let mut group_end = vec![m; m];
        for pos in (0..m - 1).rev() {
            group_end[pos] = if same_dir(at(pos), at(pos + 1)) {
                group_end[pos + 1]
            } else {
                pos + 1
            };
        }

        for pos in 0..m {
            let j = order[pos];
            if j < i {
                continue;
            }
            let v = at(pos);
            let start = group_end[pos];
            let stop = group_start[pos] + m;
            // strictly left: a prefix of (start..stop)
            let left_end = partition_point(start, stop, |p| K::cross(v, at(p)) == Ordering::Greater);
            let opposite_end = partition_point(left_end, stop, |p| {
                K::cross(v, at(p)) == Ordering::Equal && K::dot(v, at(p)) == Ordering::Less
            });
            let same = group_end[pos] - group_start[pos] - 1;
            let left = left_end - start;
            let opposite = opposite_end - left_end;
            let on = same + opposite;
            let right = m - 1 - left - on;
            let counts = SideCounts { left, right, on };
            if on > 0 {
                tally.degenerate += 1;
                let extra = (group_start[pos]..group_end[pos])
                    .filter(|&p| p != pos)
                    .chain(left_end..opposite_end)
                    .map(|p| order[p % m])
                    .min()
                    .expect("at least one point on the line");
                tally.witnesses.push(vec![i, j, extra]);
            }
            if counts.is_halving() {
                tally.halving.push((vec![i, j], counts));
            }
        }
        tally.halving.sort_by(|a, b| a.0.cmp(&b.0));
        tally.witnesses.sort();
        tally.witnesses.truncate(MAX_WITNESSES);
        tally
    });
    OracleResult::from_rows(rows)
}

/// First index in `lo..hi` where `pred` turns false, assuming it holds on a
/// prefix.
fn partition_point(mut lo: usize, mut hi: usize, pred: impl Fn(usize) -> bool) -> usize {
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// O(n^(d+1)) over all `d`-subsets.
pub fn count_halving_hyperplanes(points: &[Point], d: usize) -> Result<OracleResult> {
    count_halving_hyperplanes_with(points, d, Execution::default())
}

pub fn count_halving_hyperplanes_with(
    points: &[Point],
    d: usize,
    exec: Execution,
) -> Result<OracleResult> {
    if d < 2 {
        return Err(invalid("dimension must be at least 2"));
    }
    for p in points {
        p.require_dim(d)?;
    }
    require_distinct(points)?;
    let n = points.len();
    if n < d {
        return Err(invalid(format!("need at least {d} points")));
    }
    if (n + d) % 2 != 0 {
        return Err(invalid(format!(
            "halving hyperplanes need n + d even, got n = {n}, d = {d}"
        )));
    }
    let rows = homogeneous(points);
    // Fan out over the smallest index of each tuple.
    let tallies = par::map_range(n, exec, |first| {
        let mut tally = RowTally::default();
        let mut rest = Vec::with_capacity(d - 1);
        for_each_combination(first + 1, n, d - 1, &mut rest, &mut |tail| {
            let mut tuple = Vec::with_capacity(d);
            tuple.push(first);
            tuple.extend_from_slice(tail);
            let defining: Vec<&[BigInt]> = tuple.iter().map(|&t| rows[t].as_slice()).collect();
            let h = hyperplane_through(&defining);
            if h.iter().all(Zero::is_zero) {
                tally.degenerate += 1;
                if tally.witnesses.len() < MAX_WITNESSES {
                    tally.witnesses.push(tuple);
                }
                return;
            }
            let mut c = SideCounts::default();
            let mut witness = None;
            for (r, row) in rows.iter().enumerate() {
                if tuple.contains(&r) {
                    continue;
                }
                let s = dot(&h, row);
                if s.is_positive() {
                    c.left += 1;
                } else if s.is_negative() {
                    c.right += 1;
                } else {
                    c.on += 1;
                    witness.get_or_insert(r);
                }
            }
            if let Some(r) = witness {
                tally.degenerate += 1;
                if tally.witnesses.len() < MAX_WITNESSES {
                    let mut w = tuple.clone();
                    w.push(r);
                    tally.witnesses.push(w);
                }
            }
            if c.is_halving() {
                tally.halving.push((tuple, c));
            }
        });
        tally
    });
    Ok(OracleResult::from_rows(tallies))
}

/// Calls `f` with every increasing `k`-subset of `lo..hi`.
pub(crate) fn for_each_combination(
    lo: usize,
    hi: usize,
    k: usize,
    buf: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    if k == 0 {
        f(buf);
        return;
    }
    if hi < lo + k {
        return;
    }
    for i in lo..=hi - k {
        buf.push(i);
        for_each_combination(i + 1, hi, k - 1, buf, f);
        buf.pop();
    }
}

/// Side counts of the hyperplane through `defining` against `all_points`
/// (points equal to a defining point are skipped).
pub fn is_halving(defining: &[Point], all_points: &[Point]) -> Result<(bool, SideCounts)> {
    let d = defining.first().map(Point::dim).unwrap_or(0);
    if d < 2 || defining.len() != d {
        return Err(invalid("need exactly d defining points in dimension d >= 2"));
    }
    let oracle = HalvingOracle::new(all_points.to_vec(), d)?;
    let extra = homogeneous(defining);
    let refs: Vec<&[BigInt]> = extra.iter().map(|r| r.as_slice()).collect();
    let h = hyperplane_through(&refs);
    if h.iter().all(Zero::is_zero) {
        return Err(Error::Degenerate("defining points are affinely dependent".into()));
    }
    let counts = oracle.tally(&h, |p| defining.contains(&oracle.points[p]));
    Ok((counts.is_halving(), counts))
}

/// A point set prepared once for many halving queries.
pub struct HalvingOracle {
    points: Vec<Point>,
    rows: Vec<Vec<BigInt>>,
    dim: usize,
}

impl HalvingOracle {
    pub fn new(points: Vec<Point>, dim: usize) -> Result<Self> {
        for p in &points {
            p.require_dim(dim)?;
        }
        let rows = homogeneous(&points);
        Ok(HalvingOracle { points, rows, dim })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    fn plane(&self, tuple: &[usize]) -> Result<Vec<BigInt>> {
        if tuple.len() != self.dim {
            return Err(invalid(format!("tuple must have {} indices", self.dim)));
        }
        if let Some(&t) = tuple.iter().find(|&&t| t >= self.len()) {
            return Err(invalid(format!("index {t} out of range")));
        }
        let defining: Vec<&[BigInt]> = tuple.iter().map(|&t| self.rows[t].as_slice()).collect();
        let h = hyperplane_through(&defining);
        if h.iter().all(Zero::is_zero) {
            return Err(Error::Degenerate(format!(
                "points {tuple:?} are affinely dependent"
            )));
        }
        Ok(h)
    }

    fn tally(&self, h: &[BigInt], skip: impl Fn(usize) -> bool) -> SideCounts {
        let mut c = SideCounts::default();
        for (r, row) in self.rows.iter().enumerate() {
            if skip(r) {
                continue;
            }
            let s = dot(h, row);
            if s.is_positive() {
                c.left += 1;
            } else if s.is_negative() {
                c.right += 1;
            } else {
                c.on += 1;
            }
        }
        c
    }

    pub fn side_counts(&self, tuple: &[usize]) -> Result<SideCounts> {
        let h = self.plane(tuple)?;
        Ok(self.tally(&h, |r| tuple.contains(&r)))
    }

    pub fn is_halving(&self, tuple: &[usize]) -> Result<bool> {
        Ok(self.side_counts(tuple)?.is_halving())
    }

    /// Points above minus points below the hyperplane through `tuple`, with
    /// "above" taken along the last coordinate.
    pub fn diff(&self, tuple: &[usize]) -> Result<i64> {
        let h = self.plane(tuple)?;
        let up = h[self.dim - 1].signum();
        if up.is_zero() {
            return Err(Error::Degenerate(format!(
                "hyperplane through {tuple:?} is vertical"
            )));
        }
        let mut diff = 0i64;
        for (r, row) in self.rows.iter().enumerate() {
            if tuple.contains(&r) {
                continue;
            }
            let s = dot(&h, row).signum();
            if s.is_zero() {
                continue;
            }
            diff += if s == up { 1 } else { -1 };
        }
        Ok(diff)
    }

    /// Verifies that every tuple in `claims` is halving.
    pub fn certify(&self, claims: &[Vec<usize>], exec: Execution) -> CheckOutcome {
        let verdicts = par::map_slice(claims, exec, |t| (t, self.side_counts(t)));
        let mut check = CheckOutcome::new("claimed tuples are halving");
        for (t, v) in verdicts {
            check.examine(1);
            match v {
                Ok(c) if c.is_halving() => {}
                Ok(c) => check.fail(|| {
                    format!("{t:?}: left {} right {} on {}", c.left, c.right, c.on)
                }),
                Err(e) => check.fail(|| format!("{t:?}: {e}")),
            }
        }
        check
    }
}

/// Default exhaustive-check limits: beyond these sizes subsets are sampled.
pub const EXHAUSTIVE_LIMIT_2D: usize = 60;
pub const EXHAUSTIVE_LIMIT_3D: usize = 30;
const SAMPLE_SIZE: usize = 20_000;

/// No `d + 1` points on a common hyperplane (no three collinear in the
/// plane). Exhaustive up to the default limits, sampled above them.
pub fn general_position_check(points: &[Point], d: usize) -> Result<VerificationReport> {
    let limit = if d == 2 {
        EXHAUSTIVE_LIMIT_2D
    } else {
        EXHAUSTIVE_LIMIT_3D
    };
    general_position_check_with(points, d, limit, 0)
}

pub fn general_position_check_with(
    points: &[Point],
    d: usize,
    exhaustive_limit: usize,
    seed: u64,
) -> Result<VerificationReport> {
    for p in points {
        p.require_dim(d)?;
    }
    let rows = homogeneous(points);
    let n = points.len();
    let k = d + 1;
    let mut check = CheckOutcome::new(format!("no {k} points on a common hyperplane"));
    let test = |subset: &[usize], check: &mut CheckOutcome| {
        check.examine(1);
        let m: Vec<Vec<BigInt>> = subset.iter().map(|&i| rows[i].clone()).collect();
        if determinant(m).is_zero() {
            check.fail(|| format!("{subset:?}"));
        }
    };
    if n <= exhaustive_limit {
        let parts = par::map_range(n, Execution::default(), |first| {
            let mut part = CheckOutcome::new("part");
            let mut buf = vec![first];
            for_each_combination(first + 1, n, k - 1, &mut Vec::new(), &mut |tail| {
                buf.truncate(1);
                buf.extend_from_slice(tail);
                test(&buf, &mut part);
            });
            part
        });
        for p in parts {
            check.absorb(p);
        }
        check.note(format!("exhaustive over all {k}-subsets of {n} points"));
    } else if n >= k {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..SAMPLE_SIZE {
            let mut subset = sample(&mut rng, n, k).into_vec();
            subset.sort_unstable();
            test(&subset, &mut check);
        }
        check.note(format!(
            "sampled {SAMPLE_SIZE} random {k}-subsets of {n} points (seed {seed})"
        ));
    }
    Ok(VerificationReport::single("general position", check))
}
