//! Acceptance suite: each test prints one PASS/FAIL line and asserts it.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use halving_lab::artifact::PointSetArtifact;
use halving_lab::construction::blocks::{
    assemble_blocks, min_x_gap, verify_assembly, verify_perturbation_tolerance, BlockParameters, BlockSet,
};
use halving_lab::construction::highdim::{
    assemble, candidate_count_formula, parity_fix, sphere_directions, verify_highdim, HighDimParameters, ParityFix,
};
use halving_lab::construction::recursive::{
    build, build_chain, check_x_differences, finalize, verify_strip_containment,
    verify_strip_exclusion, verify_side_preservation, verify_slopes,
};
use halving_lab::construction::rosette::{build_rosette, density_check, pad_regular_polygon, RosetteBuild};
use halving_lab::exact::{int, pow, ExactScalar, Point};
use halving_lab::io::{emit_svg, from_json, to_json};
use halving_lab::metrics::{check_bounds, counts};
use halving_lab::oracle::{
    count_halving_hyperplanes, count_halving_lines_naive, count_halving_lines_sweep, count_halving_lines_sweep_with,
};
use halving_lab::par::Execution;
use halving_lab::report::VerificationReport;

const EXEC: Execution = Execution::Parallel;

fn verdict(number: u32, title: &str, passed: bool, detail: &str) {
    let line = format!(
        "acceptance [{number:>2}] {}: {title} ({detail})\n",
        if passed { "PASS" } else { "FAIL" }
    );
    // bypasses libtest capture so the line is always shown
    let _ = std::io::stdout().write_all(line.as_bytes());
    assert!(passed, "criterion {number} failed: {detail}");
}

fn failures(r: &VerificationReport) -> String {
    if r.passed() {
        String::new()
    } else {
        format!("\n{r}")
    }
}

fn block_set(blocks: u32) -> BlockSet {
    let base = finalize(&build(1, 1).unwrap()).unwrap();
    assemble_blocks(&BlockParameters::new(base, blocks).with_quantization(9)).unwrap()
}

fn rosette_base() -> PointSetArtifact {
    let set = block_set(1).to_artifact().unwrap();
    pad_regular_polygon(&set, 18).unwrap()
}

fn rosette() -> &'static RosetteBuild {
    static CELL: OnceLock<RosetteBuild> = OnceLock::new();
    CELL.get_or_init(|| build_rosette(&rosette_base(), None, EXEC).unwrap())
}

fn spatial_desk() -> &'static ParityFix {
    static CELL: OnceLock<ParityFix> = OnceLock::new();
    CELL.get_or_init(|| {
        let important = finalize(&build(1, 1).unwrap()).unwrap();
        let params = HighDimParameters::new(3, 6, 2, 2);
        let dirs = sphere_directions(6, 3, params.seed).unwrap();
        let asm = assemble(&params, &important, &dirs).unwrap();
        parity_fix(&asm, EXEC).unwrap()
    })
}

#[test]
fn criterion_01_recursion_counts() {
    let start = Instant::now();
    let table = counts(8);
    let bounds = check_bounds(&table);
    let mut ok = bounds.passed() && table.rows.len() == 9;
    let mut detail = String::new();
    for (i, expected) in [(1, (6, 5)), (2, (30, 45)), (3, (290, 765))] {
        let g = build(i, i).unwrap();
        let built = (g.len(), g.segments.len());
        let row = table.row(i).unwrap();
        let tabled = (row.n.to_string(), row.m.to_string());
        ok &= built == expected && tabled == (expected.0.to_string(), expected.1.to_string());
        detail.push_str(&format!("i={i}: {built:?} "));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    verdict(
        1,
        "recursion counts and bounds",
        ok,
        &format!("{detail}in {elapsed:.2?}{}", failures(&bounds)),
    );
}

#[test]
fn criterion_02_halving_certification() {
    let mut ok = true;
    let mut detail = String::new();
    for i in 0..=3 {
        let g = build(i, i).unwrap();
        let pts = g.coordinates();
        let t = Instant::now();
        let naive = count_halving_lines_naive(&pts).unwrap();
        let naive_time = t.elapsed();
        let t = Instant::now();
        let sweep = count_halving_lines_sweep(&pts).unwrap();
        let sweep_time = t.elapsed();
        let all_listed = g.claims().iter().all(|c| naive.contains(c) && sweep.contains(c));
        ok &= all_listed
            && naive.halving_pairs == sweep.halving_pairs
            && naive_time < Duration::from_secs(120)
            && sweep_time < Duration::from_secs(30);
        detail.push_str(&format!(
            "i={i}: {} listed, {} halving, naive {naive_time:.2?}, sweep {sweep_time:.2?}; ",
            g.claims().len(),
            naive.halving_count
        ));
    }
    verdict(2, "listed segments halving under both oracles", ok, detail.trim_end_matches("; "));
}

#[test]
fn criterion_03_structural_claims() {
    let start = Instant::now();
    let chain = build_chain(3, 3).unwrap();
    let mut reports = vec![
        verify_strip_containment(&chain, EXEC).unwrap(),
        verify_strip_exclusion(&chain, EXEC).unwrap(),
        verify_side_preservation(&chain, EXEC).unwrap(),
    ];
    for g in &chain.levels {
        reports.push(verify_slopes(g, EXEC));
    }
    let violations: u64 = reports.iter().map(VerificationReport::violation_count).sum();
    let examined: u64 = reports.iter().flat_map(|r| &r.checks).map(|c| c.examined).sum();
    let elapsed = start.elapsed();
    let ok = violations == 0 && reports.iter().all(VerificationReport::passed) && elapsed < Duration::from_secs(300);
    let fails: String = reports.iter().map(failures).collect();
    verdict(
        3,
        "strip containment, strip exclusion, side preservation, slopes (order 3)",
        ok,
        &format!("{examined} cases, {violations} violations, {elapsed:.2?}{fails}"),
    );
}

#[test]
fn criterion_04_x_differences() {
    let mut ok = true;
    let mut detail = String::new();
    for i in 1..=3 {
        let a = finalize(&build(i, i).unwrap()).unwrap();
        let report = check_x_differences(&a);
        // independent all-pairs scan
        let n = a.len();
        let floor = ExactScalar::from_integer(1.into()) / pow(&int(n as i64), 8);
        let mut scan_ok = true;
        for p in 0..n {
            for q in p + 1..n {
                let dx = (a.points[p].x() - a.points[q].x()).abs();
                scan_ok &= dx >= floor && dx <= int(1);
            }
        }
        ok &= report.passed() && scan_ok;
        detail.push_str(&format!("i={i}: {n} points {}; ", if scan_ok { "ok" } else { "violation" }));
    }
    verdict(4, "finalized |dx| within [n^-8, 1]", ok, detail.trim_end_matches("; "));
}

#[test]
fn criterion_05_perturbation_robustness() {
    let g = build(2, 2).unwrap();
    let magnitude = ExactScalar::from_integer(1.into()) / pow(&int(30), 9);
    let report = verify_perturbation_tolerance(&g, &magnitude, 10, 0, EXEC).unwrap();
    let per_trial_ok = report.checks.iter().all(|c| c.examined == 45);
    let ok = report.passed() && report.checks.len() == 10 && per_trial_ok;
    verdict(
        5,
        "10 horizontal perturbations of magnitude 30^-9 keep all 45 segments halving",
        ok,
        &format!("{} violations{}", report.violation_count(), failures(&report)),
    );
}

#[test]
fn criterion_06_block_assembly() {
    let mut ok = true;
    let mut detail = String::new();
    for blocks in 1..=3u32 {
        let set = block_set(blocks);
        let report = verify_assembly(&set, EXEC).unwrap();
        let transplanted = report.check("transplanted segments are halving").unwrap();
        let expected = (2 * blocks as u64 + 1) * 5;
        let a = set.to_artifact().unwrap();
        // independent sweep over every claimed line plus exact min dx
        let oracle = count_halving_lines_sweep_with(&a.points, EXEC).unwrap();
        let certified = a.claimed_halving.iter().filter(|c| oracle.contains(c)).count() as u64;
        let mut xs: Vec<&ExactScalar> = a.points.iter().map(Point::x).collect();
        xs.sort();
        let brute_gap = xs.windows(2).map(|w| w[1] - w[0]).min().unwrap();
        let reported = min_x_gap(&set).unwrap();
        let note_matches = report
            .check("distinct x-coordinates")
            .is_some_and(|c| c.notes.iter().any(|n| n == &format!("min dx = {reported}")));
        let this_ok = report.passed()
            && transplanted.examined == expected
            && certified == expected
            && brute_gap == reported
            && note_matches;
        ok &= this_ok;
        detail.push_str(&format!("N={blocks}: {certified}/{expected} certified, min dx {reported}; "));
        if !report.passed() {
            detail.push_str(&failures(&report));
        }
    }
    verdict(6, "block assembly (N = 1, 2, 3)", ok, detail.trim_end_matches("; "));
}

#[test]
fn criterion_07_rosette() {
    let start = Instant::now();
    let built = rosette();
    let base = rosette_base();
    let n = base.len();
    let family = block_set(1).to_artifact().unwrap().claimed_halving.len();
    let sweep = count_halving_lines_sweep_with(&built.artifact.points, EXEC).unwrap();
    let certified = built.artifact.claimed_halving.iter().filter(|c| sweep.contains(c)).count();
    let density = density_check(&built.artifact, &int(4), 2).unwrap();
    let elapsed = start.elapsed();
    let structure_ok = n == 18
        && built.artifact.len() == n * (n + 1)
        && built.report.passed()
        && certified >= (n + 1) * family;
    let ok = structure_ok && density.passed();
    let ratio_note = density.checks[0].notes.first().cloned().unwrap_or_default();
    verdict(
        7,
        "rosette of n+1 copies, n = 18, 4-dense",
        ok,
        &format!(
            "{} points, {certified} certified transplanted lines (need {}), {} halving lines total, structure {}, density {}: {ratio_note}, {elapsed:.2?}",
            built.artifact.len(),
            (n + 1) * family,
            sweep.halving_count,
            if structure_ok { "ok" } else { "FAILED" },
            if density.passed() { "ok" } else { "FAILED" },
        ),
    );
}

#[test]
fn criterion_08_spatial_desk_instance() {
    let start = Instant::now();
    let fix = spatial_desk();
    let report = verify_highdim(fix, EXEC).unwrap();
    let bound_ok = fix.diffs.iter().all(|v| v.abs() <= 2);
    let parity_ok = fix.diffs.iter().all(|v| (v - 3).rem_euclid(2) == 0);
    let all = count_halving_hyperplanes(&fix.assembly.points, 3).unwrap();
    let certified = fix.retained.iter().all(|c| all.contains(c));
    let count_ok = fix.candidates.len() as u64 == candidate_count_formula(2, 5, 2, 6, 3);
    let elapsed = start.elapsed();
    let ok = report.passed()
        && bound_ok
        && parity_ok
        && certified
        && count_ok
        && !fix.retained.is_empty()
        && (fix.assembly.len() + 3) % 2 == 0
        && all.degenerate_tuples == 0
        && elapsed < Duration::from_secs(120);
    verdict(
        8,
        "d = 3 assembly: diff bound, parity, retained planes halving",
        ok,
        &format!(
            "{} points, {} candidates, {} retained, {} halving planes in total, {elapsed:.2?}{}",
            fix.assembly.len(),
            fix.candidates.len(),
            fix.retained.len(),
            all.halving_count,
            failures(&report)
        ),
    );
}

fn pts(coords: &[(i64, i64)]) -> Vec<Point> {
    coords.iter().map(|&(x, y)| Point::from_ints(&[x, y])).collect()
}

#[test]
fn criterion_09_oracle_baselines() {
    let square = pts(&[(0, 0), (1, 0), (1, 1), (0, 1)]);
    let hexagon = pts(&[(0, 0), (2, 0), (3, 1), (2, 2), (0, 2), (-1, 1)]);
    let square_ok = count_halving_lines_naive(&square).unwrap().halving_count == 2
        && count_halving_lines_sweep(&square).unwrap().halving_count == 2;
    let hex_ok = count_halving_lines_naive(&hexagon).unwrap().halving_count == 3
        && count_halving_lines_sweep(&hexagon).unwrap().halving_count == 3;
    let mut agreements = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 * rng.gen_range(1..=20);
        let set: Vec<Point> = (0..n)
            .map(|_| Point::from_ints(&[rng.gen_range(-500..=500), rng.gen_range(-500..=500)]))
            .collect();
        let naive = count_halving_lines_naive(&set).unwrap();
        let sweep = count_halving_lines_sweep(&set).unwrap();
        if naive.halving_pairs == sweep.halving_pairs {
            agreements += 1;
        }
    }
    let ok = square_ok && hex_ok && agreements == 50;
    verdict(
        9,
        "oracle baselines",
        ok,
        &format!("square {square_ok}, hexagon {hex_ok}, {agreements}/50 random sets agree"),
    );
}

#[test]
fn criterion_10_serialization() {
    let mut artifacts: Vec<PointSetArtifact> = Vec::new();
    for i in 0..=3 {
        let g = build(i, i).unwrap();
        artifacts.push(g.to_artifact().unwrap());
        if i > 0 {
            artifacts.push(finalize(&g).unwrap());
        }
    }
    for blocks in 1..=3 {
        artifacts.push(block_set(blocks).to_artifact().unwrap());
    }
    artifacts.push(rosette_base());
    artifacts.push(rosette().artifact.clone());
    let fix = spatial_desk();
    artifacts.push(fix.assembly.to_artifact(fix.retained.clone()).unwrap());

    let mut round_trips = 0;
    let mut svgs = 0;
    for a in &artifacts {
        let text = to_json(a).unwrap();
        let back = from_json(&text).unwrap();
        if &back == a && to_json(&back).unwrap() == text {
            round_trips += 1;
        }
        let first = emit_svg(a).unwrap();
        if first == emit_svg(&back).unwrap() && first == emit_svg(a).unwrap() {
            svgs += 1;
        }
    }
    let ok = round_trips == artifacts.len() && svgs == artifacts.len();
    verdict(
        10,
        "JSON round trip and SVG determinism",
        ok,
        &format!("{round_trips}/{n} round trips, {svgs}/{n} identical plots", n = artifacts.len()),
    );
}
