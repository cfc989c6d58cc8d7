//! Exact serialization of point sets (JSON, CSV) and SVG rendering.

use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::artifact::{PointKind, PointSetArtifact, Provenance};
use crate::error::{Error, Result};
use crate::exact::{approx, ExactScalar, Point};

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk form of an artifact. Every coordinate is a `[numerator,
/// denominator]` pair of base-10 strings in lowest terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSetDocument {
    pub schema_version: u32,
    pub dimension: usize,
    pub count: usize,
    pub coordinates: Vec<Vec<[String; 2]>>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claimed_halving: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_kinds: Option<Vec<PointKind>>,
}

fn scalar_pair(v: &ExactScalar) -> [String; 2] {
    [v.numer().to_string(), v.denom().to_string()]
}

fn parse_scalar(pair: &[String; 2]) -> Result<ExactScalar> {
    let parse = |s: &str| -> Result<BigInt> {
        s.parse::<BigInt>()
            .map_err(|_| Error::Document(format!("not a base-10 integer: {s:?}")))
    };
    let num = parse(&pair[0])?;
    let den = parse(&pair[1])?;
    if !den.is_positive() {
        return Err(Error::Document(format!("denominator {den} is not positive")));
    }
    Ok(ExactScalar::new(num, den))
}

impl PointSetDocument {
    pub fn from_artifact(a: &PointSetArtifact) -> Self {
        PointSetDocument {
            schema_version: SCHEMA_VERSION,
            dimension: a.dimension,
            count: a.len(),
            coordinates: a
                .points
                .iter()
                .map(|p| p.coords().iter().map(scalar_pair).collect())
                .collect(),
            provenance: a.provenance.clone(),
            claimed_halving: (!a.claimed_halving.is_empty()).then(|| a.claimed_halving.clone()),
            point_kinds: a.kinds.clone(),
        }
    }

    pub fn to_artifact(&self) -> Result<PointSetArtifact> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Document(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.count != self.coordinates.len() {
            return Err(Error::Document(format!(
                "count {} but {} coordinates",
                self.count,
                self.coordinates.len()
            )));
        }
        let points = self
            .coordinates
            .iter()
            .map(|row| {
                if row.len() != self.dimension {
                    return Err(Error::Document(format!(
                        "point with {} coordinates in dimension {}",
                        row.len(),
                        self.dimension
                    )));
                }
                Ok(Point::new(row.iter().map(parse_scalar).collect::<Result<_>>()?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut a = PointSetArtifact::new(self.dimension, points, self.provenance.clone())?
            .with_claims(self.claimed_halving.clone().unwrap_or_default())?;
        if let Some(kinds) = &self.point_kinds {
            a = a.with_kinds(kinds.clone())?;
        }
        Ok(a)
    }
}

pub fn to_json(a: &PointSetArtifact) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&PointSetDocument::from_artifact(a))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<PointSetArtifact> {
    serde_json::from_str::<PointSetDocument>(text)?.to_artifact()
}

pub fn read_json(path: &Path) -> Result<PointSetArtifact> {
    from_json(&std::fs::read_to_string(path)?)
}

pub fn write_json(a: &PointSetArtifact, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(a)?)?;
    Ok(())
}

fn axis_name(i: usize) -> String {
    match i {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        3 => "w".into(),
        _ => format!("c{i}"),
    }
}

/// `idx,x_num,x_den,y_num,y_den[,...]`; with `lossy_decimals` each axis also
/// gets an `<axis>_approx_lossy` column.
pub fn to_csv(a: &PointSetArtifact, lossy_decimals: bool) -> String {
    let mut out = String::from("idx");
    for i in 0..a.dimension {
        let name = axis_name(i);
        write!(out, ",{name}_num,{name}_den").expect("string write");
    }
    if lossy_decimals {
        for i in 0..a.dimension {
            write!(out, ",{}_approx_lossy", axis_name(i)).expect("string write");
        }
    }
    out.push('\n');
    for (idx, p) in a.points.iter().enumerate() {
        write!(out, "{idx}").expect("string write");
        for c in p.coords() {
            write!(out, ",{},{}", c.numer(), c.denom()).expect("string write");
        }
        if lossy_decimals {
            for c in p.coords() {
                write!(out, ",{:e}", approx(c)).expect("string write");
            }
        }
        out.push('\n');
    }
    out
}

/// Reads the exact columns back; approximation columns are ignored.
pub fn points_from_csv(text: &str) -> Result<Vec<Point>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Document("empty CSV".into()))?
        .split(',')
        .collect();
    if header.first() != Some(&"idx") {
        return Err(Error::Document("CSV header must start with idx".into()));
    }
    let dim = header.iter().filter(|h| h.ends_with("_num")).count();
    let mut points = Vec::new();
    for (row, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() < 1 + 2 * dim || cells[0] != row.to_string() {
            return Err(Error::Document(format!("malformed CSV row {row}")));
        }
        let coords = (0..dim)
            .map(|i| parse_scalar(&[cells[1 + 2 * i].to_string(), cells[2 + 2 * i].to_string()]))
            .collect::<Result<Vec<_>>>()?;
        points.push(Point::new(coords));
    }
    Ok(points)
}

/// Decimal expansion with `digits` significant digits, truncated toward zero.
pub fn to_decimal(v: &ExactScalar, digits: usize) -> String {
    if v.is_zero() {
        return "0".into();
    }
    let neg = v.is_negative();
    let num = v.numer().abs();
    let den = v.denom().clone();
    let ten = BigInt::from(10);
    let (int_part, mut rem) = num.div_rem(&den);
    let int_digits = if int_part.is_zero() { 0 } else { int_part.to_string().len() };
    let mut out = if neg { String::from("-") } else { String::new() };
    out.push_str(&int_part.to_string());
    let mut frac = String::new();
    let mut significant = int_digits;
    while significant < digits && !rem.is_zero() {
        rem *= &ten;
        let (d, r) = rem.div_rem(&den);
        rem = r;
        let d = d.to_string();
        if significant > 0 || d != "0" {
            significant += 1;
        }
        frac.push_str(&d);
    }
    let frac = frac.trim_end_matches('0');
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    out
}

pub const SVG_SIZE: i64 = 1000;
const SVG_MARGIN: i64 = 50;
const DISPLAY_DIGITS: usize = 30;

/// Fixed oblique projection for 3-space: `(x, y, z) -> (x + z/2, y + z/2)`.
pub fn project(p: &Point) -> Result<(ExactScalar, ExactScalar)> {
    match p.dim() {
        2 => Ok((p.x().clone(), p.y().clone())),
        3 => {
            let half = p.coord(2) / BigInt::from(2);
            Ok((p.x() + &half, p.y() + &half))
        }
        d => Err(Error::InvalidParameter(format!("cannot plot dimension {d}"))),
    }
}

/// Bold points filled, plain points hollow, claimed tuples as lines (planar
/// pairs) or closed outlines (triples). Pure function of the artifact.
pub fn emit_svg(a: &PointSetArtifact) -> Result<String> {
    if a.dimension > 3 || a.dimension < 2 {
        return Err(Error::InvalidParameter(format!(
            "cannot plot dimension {}",
            a.dimension
        )));
    }
    let projected = a.points.iter().map(project).collect::<Result<Vec<_>>>()?;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}" width="{SVG_SIZE}" height="{SVG_SIZE}">"#
    )
    .expect("string write");
    writeln!(out, r#"<rect width="{SVG_SIZE}" height="{SVG_SIZE}" fill="white"/>"#).expect("string write");

    if !projected.is_empty() {
        let min_u = projected.iter().map(|p| &p.0).min().expect("non-empty").clone();
        let max_u = projected.iter().map(|p| &p.0).max().expect("non-empty").clone();
        let min_v = projected.iter().map(|p| &p.1).min().expect("non-empty").clone();
        let max_v = projected.iter().map(|p| &p.1).max().expect("non-empty").clone();
        let span = (&max_u - &min_u).max(&max_v - &min_v);
        let inner = ExactScalar::from_integer(BigInt::from(SVG_SIZE - 2 * SVG_MARGIN));
        let margin = ExactScalar::from_integer(BigInt::from(SVG_MARGIN));
        let scale = if span.is_zero() { ExactScalar::zero() } else { inner / span };
        let screen: Vec<(String, String)> = projected
            .iter()
            .map(|(u, v)| {
                let sx = &margin + (u - &min_u) * &scale;
                let sy = &margin + (&max_v - v) * &scale;
                (to_decimal(&sx, DISPLAY_DIGITS), to_decimal(&sy, DISPLAY_DIGITS))
            })
            .collect();

        writeln!(out, r#"<g stroke="steelblue" stroke-width="1" fill="none">"#).expect("string write");
        for c in &a.claimed_halving {
            if c.len() == 2 {
                let (p, q) = (&screen[c[0]], &screen[c[1]]);
                writeln!(out, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, p.0, p.1, q.0, q.1)
                    .expect("string write");
            } else {
                let pts: Vec<String> = c.iter().map(|&i| format!("{},{}", screen[i].0, screen[i].1)).collect();
                writeln!(out, r#"<polygon points="{}" stroke-opacity="0.4"/>"#, pts.join(" "))
                    .expect("string write");
            }
        }
        writeln!(out, "</g>").expect("string write");

        writeln!(out, r#"<g stroke="black" stroke-width="1">"#).expect("string write");
        for (i, (x, y)) in screen.iter().enumerate() {
            let fill = match a.kinds.as_ref().map(|k| k[i]) {
                Some(PointKind::Bold) => "black",
                _ => "white",
            };
            writeln!(out, r#"<circle cx="{x}" cy="{y}" r="4" fill="{fill}"/>"#).expect("string write");
        }
        writeln!(out, "</g>").expect("string write");
    }
    out.push_str("</svg>\n");
    Ok(out)
}
