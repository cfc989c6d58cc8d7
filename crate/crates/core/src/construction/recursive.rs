//! Recursive planar sets with many halving segments, built level by level
//! with explicit genealogy so the strip and side claims can be checked
//! combinatorially.

use std::collections::HashSet;

use num_traits::{One, Zero};

use crate::artifact::{x_spread, PointKind, PointSetArtifact, Provenance};
use crate::error::{invalid, Error, Result};
use crate::exact::{in_alpha_strip, int, pow, pow2, ratio, ExactScalar, Point, Segment, Strip};
use crate::oracle::HalvingOracle;
use crate::par::{self, Execution};
use crate::report::{CheckOutcome, VerificationReport};

/// Deepest level `build` accepts by default. Level 4 already has 5450 points
/// and 25245 segments; the strip verifiers are quadratic in that.
pub const MAX_DEPTH: u32 = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursionParameters {
    /// Length of the arithmetic progressions replacing each point.
    pub progression: u64,
    /// Spacing inside a progression.
    pub epsilon: ExactScalar,
    /// Full length of a plain progression, `progression * epsilon`.
    pub spread: ExactScalar,
}

fn epsilon_for(order: u32, index: u32) -> ExactScalar {
    pow2(-((4 * order as i64 + 4) * index as i64))
}

fn spread_for(order: u32, index: u32) -> ExactScalar {
    pow2(-((4 * order as i64 + 3) * index as i64))
}

pub fn recursion_parameters(order: u32, index: u32) -> Result<RecursionParameters> {
    if index < 1 || index > order {
        return Err(invalid(format!(
            "recursion parameters need 1 <= index <= order, got index {index}, order {order}"
        )));
    }
    Ok(RecursionParameters {
        progression: 1u64 << index,
        epsilon: epsilon_for(order, index),
        spread: spread_for(order, index),
    })
}

/// Half-width of the strip that contains every descendant of a level-`index`
/// segment: `2^(index+2) * spread(index+1)`.
pub fn strip_half_width(order: u32, index: u32) -> ExactScalar {
    pow2(index as i64 + 2) * spread_for(order, index + 1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedPoint {
    pub id: usize,
    pub point: Point,
    pub kind: PointKind,
    pub level: u32,
    pub parent: Option<usize>,
    /// Set on bold points born from a segment of the previous level.
    pub assigned_segment: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalvingSegmentRecord {
    pub id: usize,
    pub plain: usize,
    pub bold: usize,
    pub level: u32,
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeometricGraph {
    pub order: u32,
    pub index: u32,
    pub points: Vec<TaggedPoint>,
    pub segments: Vec<HalvingSegmentRecord>,
}

impl GeometricGraph {
    fn base(order: u32) -> Self {
        GeometricGraph {
            order,
            index: 0,
            points: vec![
                TaggedPoint {
                    id: 0,
                    point: Point::from_ints(&[1, 1]),
                    kind: PointKind::Plain,
                    level: 0,
                    parent: None,
                    assigned_segment: None,
                },
                TaggedPoint {
                    id: 1,
                    point: Point::from_ints(&[0, 0]),
                    kind: PointKind::Bold,
                    level: 0,
                    parent: None,
                    assigned_segment: None,
                },
            ],
            segments: vec![HalvingSegmentRecord {
                id: 0,
                plain: 0,
                bold: 1,
                level: 0,
                parent: None,
            }],
        }
    }

    fn next(&self) -> GeometricGraph {
        let index = self.index + 1;
        let a = 1usize << index;
        let eps = epsilon_for(self.order, index);
        let mut points = Vec::new();
        // first child id of every parent point
        let mut first_child = Vec::with_capacity(self.points.len());
        for p in &self.points {
            first_child.push(points.len());
            let (count, step) = match p.kind {
                PointKind::Plain => (a, eps.clone()),
                PointKind::Bold => (a + 1, -eps.clone()),
            };
            for k in 0..count {
                let offset = &step * int(k as i64);
                points.push(TaggedPoint {
                    id: points.len(),
                    point: Point::xy(p.point.x() + offset, p.point.y().clone()),
                    kind: PointKind::Plain,
                    level: index,
                    parent: Some(p.id),
                    assigned_segment: None,
                });
            }
        }
        let quarter = &eps / int(4);
        let mut new_bold = Vec::with_capacity(self.segments.len());
        for s in &self.segments {
            let p = &self.points[s.plain].point;
            let b = &self.points[s.bold].point;
            let x = (p.x() + b.x()) / int(2) - &quarter;
            let y = (p.y() + b.y()) / int(2);
            new_bold.push(points.len());
            points.push(TaggedPoint {
                id: points.len(),
                point: Point::xy(x, y),
                kind: PointKind::Bold,
                level: index,
                parent: Some(s.bold),
                assigned_segment: Some(s.id),
            });
        }
        let mut segments = Vec::with_capacity(self.segments.len() * (2 * a + 1));
        for (s, &q) in self.segments.iter().zip(&new_bold) {
            let plain_kids = first_child[s.plain]..first_child[s.plain] + a;
            let bold_kids = first_child[s.bold]..first_child[s.bold] + a + 1;
            for c in plain_kids.chain(bold_kids) {
                segments.push(HalvingSegmentRecord {
                    id: segments.len(),
                    plain: c,
                    bold: q,
                    level: index,
                    parent: Some(s.id),
                });
            }
        }
        GeometricGraph {
            order: self.order,
            index,
            points,
            segments,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coordinates(&self) -> Vec<Point> {
        self.points.iter().map(|p| p.point.clone()).collect()
    }

    pub fn kinds(&self) -> Vec<PointKind> {
        self.points.iter().map(|p| p.kind).collect()
    }

    pub fn bold_count(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.kind == PointKind::Bold)
            .count()
    }

    pub fn segment(&self, id: usize) -> Result<Segment> {
        let s = &self.segments[id];
        Segment::new(
            self.points[s.plain].point.clone(),
            self.points[s.bold].point.clone(),
        )
    }

    pub fn claims(&self) -> Vec<Vec<usize>> {
        self.segments.iter().map(|s| vec![s.plain, s.bold]).collect()
    }

    /// The point set with its segments as claimed halving pairs.
    pub fn to_artifact(&self) -> Result<PointSetArtifact> {
        let provenance = Provenance::new("recursive")
            .with("order", self.order)
            .with("index", self.index);
        PointSetArtifact::new(2, self.coordinates(), provenance)?
            .with_kinds(self.kinds())?
            .with_claims(self.claims())
    }
}

/// All levels `0..=index` of the construction for one order.
#[derive(Clone, Debug)]
pub struct GraphChain {
    pub levels: Vec<GeometricGraph>,
}

impl GraphChain {
    pub fn order(&self) -> u32 {
        self.levels[0].order
    }

    pub fn top(&self) -> &GeometricGraph {
        self.levels.last().expect("chain has level 0")
    }

    /// `ancestor[j][r]` for a fixed level `i`: the level-`i` ancestor of
    /// segment `r` at level `j >= i`.
    fn segment_ancestors(&self, i: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for j in i..self.levels.len() {
            let row = if j == i {
                (0..self.levels[j].segments.len()).collect()
            } else {
                let prev = &out[j - i - 1];
                self.levels[j]
                    .segments
                    .iter()
                    .map(|r| prev[r.parent.expect("non-root segment has a parent")])
                    .collect()
            };
            out.push(row);
        }
        out
    }
}

fn check_depth(order: u32, index: u32, max_depth: u32) -> Result<()> {
    if index > order {
        return Err(invalid(format!("index {index} exceeds order {order}")));
    }
    if index > max_depth {
        return Err(invalid(format!(
            "index {index} exceeds the depth limit {max_depth}"
        )));
    }
    Ok(())
}

pub fn build_chain_with_limit(order: u32, index: u32, max_depth: u32) -> Result<GraphChain> {
    check_depth(order, index, max_depth)?;
    let mut levels = vec![GeometricGraph::base(order)];
    for _ in 0..index {
        let next = levels.last().expect("non-empty").next();
        levels.push(next);
    }
    Ok(GraphChain { levels })
}

pub fn build_chain(order: u32, index: u32) -> Result<GraphChain> {
    build_chain_with_limit(order, index, MAX_DEPTH)
}

pub fn build(order: u32, index: u32) -> Result<GeometricGraph> {
    Ok(build_chain(order, index)?
        .levels
        .pop()
        .expect("chain has level 0"))
}

pub fn verify_halving_all(g: &GeometricGraph, exec: Execution) -> Result<VerificationReport> {
    let oracle = HalvingOracle::new(g.coordinates(), 2)?;
    let mut check = oracle.certify(&g.claims(), exec);
    check.name = "listed segments are halving".into();
    Ok(VerificationReport::single(
        format!("halving segments of level {} (order {})", g.index, g.order),
        check,
    ))
}

fn merge(name: &str, parts: Vec<CheckOutcome>) -> CheckOutcome {
    let mut check = CheckOutcome::new(name);
    for p in parts {
        check.absorb(p);
    }
    check
}

/// Every descendant segment's extension lies in the strip of its ancestor.
pub fn verify_strip_containment(
    chain: &GraphChain,
    exec: Execution,
) -> Result<VerificationReport> {
    let order = chain.order();
    let mut report = VerificationReport::new(format!("strip containment, order {order}"));
    for i in 0..chain.levels.len() {
        let alpha = strip_half_width(order, i as u32);
        let strips = chain.levels[i]
            .segments
            .iter()
            .map(|s| Strip::around(&chain.levels[i].segment(s.id)?, alpha.clone()))
            .collect::<Result<Vec<_>>>()?;
        let ancestors = chain.segment_ancestors(i);
        let mut parts = Vec::new();
        for (offset, j) in (i + 1..chain.levels.len()).enumerate() {
            let level = &chain.levels[j];
            let anc = &ancestors[offset + 1];
            let results = par::map_range(level.segments.len(), exec, |r| {
                let mut c = CheckOutcome::new("");
                let ext = match level.segment(r).and_then(|s| crate::exact::extension(&s)) {
                    Ok(e) => e,
                    Err(e) => {
                        c.fail(|| format!("segment {r} at level {j}: {e}"));
                        return c;
                    }
                };
                let strip = &strips[anc[r]];
                c.examine(1);
                if !(in_alpha_strip(strip, ext.a()) && in_alpha_strip(strip, ext.b())) {
                    c.fail(|| {
                        format!("level {j} segment {r} leaves the strip of level {i} segment {}", anc[r])
                    });
                }
                c
            });
            parts.extend(results);
        }
        let mut check = merge(&format!("level {i} strips (half-width {alpha})"), parts);
        if chain.levels.len() == i + 1 {
            check.note("no deeper levels: vacuous");
        }
        report.push(check);
    }
    Ok(report)
}

/// No point outside a segment's family enters the doubled strip.
pub fn verify_strip_exclusion(
    chain: &GraphChain,
    exec: Execution,
) -> Result<VerificationReport> {
    let order = chain.order();
    let mut report = VerificationReport::new(format!("strip exclusion, order {order}"));
    let two = int(2);
    for i in 0..chain.levels.len() {
        let alpha = strip_half_width(order, i as u32);
        let wide = &alpha * &two;
        let base = &chain.levels[i];
        let strips = base
            .segments
            .iter()
            .map(|s| Strip::around(&base.segment(s.id)?, wide.clone()))
            .collect::<Result<Vec<_>>>()?;
        let ancestors = chain.segment_ancestors(i);
        let mut parts = Vec::new();
        for (offset, j) in (i..chain.levels.len()).enumerate() {
            let level = &chain.levels[j];
            // endpoints of the family of each level-i segment, at level j
            let mut covered: Vec<HashSet<usize>> = vec![HashSet::new(); base.segments.len()];
            for (r, rec) in level.segments.iter().enumerate() {
                let a = ancestors[offset][r];
                covered[a].insert(rec.plain);
                covered[a].insert(rec.bold);
            }
            let results = par::map_range(base.segments.len(), exec, |s| {
                let mut c = CheckOutcome::new("");
                for q in &level.points {
                    if covered[s].contains(&q.id) {
                        continue;
                    }
                    c.examine(1);
                    if in_alpha_strip(&strips[s], &q.point) {
                        c.fail(|| {
                            format!("level {j} point {} {:?} inside the 2-alpha strip of level {i} segment {s}", q.id, q.point)
                        });
                    }
                }
                c
            });
            parts.extend(results);
        }
        report.push(merge(
            &format!("level {i} doubled strips (half-width {wide})"),
            parts,
        ));
    }
    Ok(report)
}

/// A point's side of a segment's line is inherited by every child point
/// against every child segment.
pub fn verify_side_preservation(chain: &GraphChain, exec: Execution) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(format!("side preservation, order {}", chain.order()));
    for i in 0..chain.levels.len().saturating_sub(1) {
        let (upper, lower) = (&chain.levels[i], &chain.levels[i + 1]);
        let mut point_children = vec![Vec::new(); upper.points.len()];
        for p in &lower.points {
            point_children[p.parent.expect("level >= 1")].push(p.id);
        }
        let mut segment_children = vec![Vec::new(); upper.segments.len()];
        for r in &lower.segments {
            segment_children[r.parent.expect("level >= 1")].push(r.id);
        }
        let lower_segments = lower
            .segments
            .iter()
            .map(|r| lower.segment(r.id))
            .collect::<Result<Vec<_>>>()?;
        let results = par::map_range(upper.segments.len(), exec, |s| {
            let mut c = CheckOutcome::new("");
            let rec = &upper.segments[s];
            let seg = match upper.segment(s) {
                Ok(seg) => seg,
                Err(e) => {
                    c.fail(|| format!("segment {s}: {e}"));
                    return c;
                }
            };
            for q in &upper.points {
                if q.id == rec.plain || q.id == rec.bold {
                    continue;
                }
                let side = seg.side_of(&q.point).expect("planar");
                for &qc in &point_children[q.id] {
                    for &sc in &segment_children[s] {
                        c.examine(1);
                        let child_side = lower_segments[sc]
                            .side_of(&lower.points[qc].point)
                            .expect("planar");
                        if child_side != side {
                            c.fail(|| {
                                format!(
                                    "level {i}: point {} vs segment {s} is {side:?}, child {qc} vs child {sc} is {child_side:?}",
                                    q.id
                                )
                            });
                        }
                    }
                }
            }
            c
        });
        let mut check = merge(&format!("levels {i} -> {}", i + 1), results);
        if upper.points.len() == 2 {
            check.note("no non-endpoint points: vacuous");
        }
        report.push(check);
    }
    Ok(report)
}

/// Every non-horizontal pair has `7/8 <= dx/dy <= 9/8`.
pub fn verify_slopes(g: &GeometricGraph, exec: Execution) -> VerificationReport {
    let low = ratio(7, 8);
    let high = ratio(9, 8);
    let pts = &g.points;
    let results = par::map_range(pts.len(), exec, |a| {
        let mut c = CheckOutcome::new("");
        for b in a + 1..pts.len() {
            let dy = pts[a].point.y() - pts[b].point.y();
            if dy.is_zero() {
                continue;
            }
            c.examine(1);
            let cot = (pts[a].point.x() - pts[b].point.x()) / dy;
            if cot < low || cot > high {
                c.fail(|| format!("points {a}, {b}: cot {cot}"));
            }
        }
        c
    });
    VerificationReport::single(
        format!("slopes of level {} (order {})", g.index, g.order),
        merge("7/8 <= cot <= 9/8", results),
    )
}

/// Scales x by 8/9 on a diagonal graph.
pub fn finalize(g: &GeometricGraph) -> Result<PointSetArtifact> {
    if g.order != g.index {
        return Err(Error::InvalidParameter(format!(
            "finalization needs a diagonal graph, got order {} index {}",
            g.order, g.index
        )));
    }
    let factor = ratio(8, 9);
    let provenance = Provenance::new("finalized")
        .with("index", g.index)
        .with_scalar("x_scale", &factor);
    g.to_artifact()?.map_points(provenance, |p| {
        Ok(Point::xy(p.x() * &factor, p.y().clone()))
    })
}

/// Checks `n^-8 <= |dx| <= 1` over all pairs.
pub fn check_x_differences(artifact: &PointSetArtifact) -> VerificationReport {
    let n = artifact.len();
    let mut check = CheckOutcome::new("n^-8 <= |dx| <= 1");
    check.examine((n * n.saturating_sub(1) / 2) as u64);
    if let Some((gap, width)) = x_spread(&artifact.points) {
        let floor = ExactScalar::one() / pow(&int(n as i64), 8);
        if gap < floor {
            check.fail(|| format!("min |dx| = {gap} below {floor}"));
        }
        if width > ExactScalar::one() {
            check.fail(|| format!("max |dx| = {width} above 1"));
        }
        check.note(format!("min |dx| = {gap}, max |dx| = {width}"));
    }
    VerificationReport::single("x-differences", check)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEQ: Execution = Execution::Sequential;

    #[test]
    fn parameters() {
        let p = recursion_parameters(1, 1).unwrap();
        assert_eq!((p.progression, p.epsilon, p.spread), (2, pow2(-8), pow2(-7)));
        let p = recursion_parameters(3, 1).unwrap();
        assert_eq!((p.progression, p.epsilon, p.spread), (2, pow2(-16), pow2(-15)));
        let p = recursion_parameters(3, 3).unwrap();
        assert_eq!((p.progression, p.epsilon, p.spread), (8, pow2(-48), pow2(-45)));
        assert!(recursion_parameters(1, 2).is_err());
        assert!(recursion_parameters(1, 0).is_err());
    }

    #[test]
    fn base_and_first_level() {
        let g = build(0, 0).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.segments.len(), 1);

        let g = build(1, 1).unwrap();
        let e = pow2(-8);
        let expected = [
            Point::from_ints(&[1, 1]),
            Point::xy(int(1) + &e, int(1)),
            Point::from_ints(&[0, 0]),
            Point::xy(-e.clone(), int(0)),
            Point::xy(-pow2(-7), int(0)),
            Point::xy(ratio(1, 2) - pow2(-10), ratio(1, 2)),
        ];
        assert_eq!(g.coordinates(), expected);
        assert_eq!(g.points[5].kind, PointKind::Bold);
        assert_eq!(g.points[5].parent, Some(1));
        assert_eq!(g.points[5].assigned_segment, Some(0));
        assert_eq!(g.segments.len(), 5);
        assert!(g.segments.iter().all(|s| s.bold == 5 && s.parent == Some(0)));
        assert!(build(1, 2).is_err());
        assert!(build(5, 5).is_err());
    }

    #[test]
    fn sizes_follow_counts() {
        let t = crate::metrics::counts(3);
        let chain = build_chain(3, 3).unwrap();
        for g in &chain.levels {
            let row = t.row(g.index).unwrap();
            assert_eq!(num_bigint::BigUint::from(g.len()), row.n);
            assert_eq!(num_bigint::BigUint::from(g.segments.len()), row.m);
            let bold = num_bigint::BigUint::from(g.bold_count());
            if g.index == 0 {
                assert_eq!(g.bold_count(), 1);
            } else {
                assert_eq!(bold, t.rows[g.index as usize - 1].m);
            }
        }
    }

    #[test]
    fn same_abstract_graph_for_every_order() {
        let strip = |g: &GeometricGraph| {
            (
                g.points
                    .iter()
                    .map(|p| (p.kind, p.level, p.parent, p.assigned_segment))
                    .collect::<Vec<_>>(),
                g.segments.clone(),
            )
        };
        let a = build(2, 2).unwrap();
        let b = build(4, 2).unwrap();
        assert_eq!(strip(&a), strip(&b));
        assert_ne!(a.coordinates(), b.coordinates());
    }

    #[test]
    fn halving_on_small_levels() {
        for (o, i) in [(0, 0), (1, 1), (2, 2)] {
            let g = build(o, i).unwrap();
            let r = verify_halving_all(&g, SEQ).unwrap();
            assert!(r.passed(), "{r}");
        }
        let g = build(1, 1).unwrap();
        let oracle = HalvingOracle::new(g.coordinates(), 2).unwrap();
        let c = oracle.side_counts(&[0, 5]).unwrap();
        assert_eq!((c.left, c.right), (2, 2));
    }

    #[test]
    fn halving_detects_tampering() {
        let mut g = build(1, 1).unwrap();
        g.segments[0].plain = 2;
        g.segments[0].bold = 0;
        assert!(!verify_halving_all(&g, SEQ).unwrap().passed());
    }

    #[test]
    fn strip_claims_order_two() {
        let chain = build_chain(2, 2).unwrap();
        let r = verify_strip_containment(&chain, SEQ).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks[0].examined, 5 + 45);
        assert_eq!(r.checks[1].examined, 45);
        assert_eq!(strip_half_width(2, 0), int(4) * pow2(-11));
        let r = verify_strip_exclusion(&chain, SEQ).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn exclusion_first_level() {
        let chain = build_chain(1, 1).unwrap();
        let r = verify_strip_exclusion(&chain, SEQ).unwrap();
        assert!(r.passed(), "{r}");
        // level 1: 5 segments x 4 non-incident points
        assert_eq!(r.checks[1].examined, 20);
    }

    #[test]
    fn exclusion_detects_an_intruder() {
        let mut chain = build_chain(1, 1).unwrap();
        // put a level-1 point right on the line of segment (0,5)
        let q = chain.levels[1].points[5].point.clone();
        let p = chain.levels[1].points[0].point.clone();
        let mid = Point::xy((p.x() + q.x()) / int(2), (p.y() + q.y()) / int(2));
        chain.levels[1].points[3].point = mid;
        let r = verify_strip_exclusion(&chain, SEQ).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn side_preservation() {
        let chain = build_chain(2, 2).unwrap();
        let r = verify_side_preservation(&chain, SEQ).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks[0].examined, 0);
        assert!(r.checks[1].examined > 0);
    }

    #[test]
    fn slopes() {
        let r = verify_slopes(&build(0, 0).unwrap(), SEQ);
        assert!(r.passed());
        let r = verify_slopes(&build(1, 1).unwrap(), SEQ);
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks[0].examined, 11);
        assert!(verify_slopes(&build(2, 2).unwrap(), SEQ).passed());
    }

    #[test]
    fn finalization() {
        assert!(finalize(&build(2, 1).unwrap()).is_err());
        for k in 1..=2 {
            let a = finalize(&build(k, k).unwrap()).unwrap();
            let r = check_x_differences(&a);
            assert!(r.passed(), "{r}");
        }
        let a = finalize(&build(1, 1).unwrap()).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a.points[0], Point::xy(ratio(8, 9), int(1)));
    }
}
