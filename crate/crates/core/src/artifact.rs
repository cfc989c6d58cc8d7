//! The in-memory form of every construction output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Result};
use crate::exact::{ExactScalar, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Plain,
    Bold,
}

/// Which construction produced an artifact, with every parameter needed to
/// reproduce it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub construction: String,
    pub parameters: BTreeMap<String, Value>,
}

impl Provenance {
    pub fn new(construction: impl Into<String>) -> Self {
        Provenance {
            construction: construction.into(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn with_scalar(self, key: &str, value: &ExactScalar) -> Self {
        self.with(key, value.to_string())
    }

    /// Records the parent artifact's provenance under `base`.
    pub fn derived_from(self, base: &Provenance) -> Self {
        let nested = serde_json::to_value(base).unwrap_or(Value::Null);
        self.with("base", nested)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointSetArtifact {
    pub dimension: usize,
    pub points: Vec<Point>,
    /// Plain/bold roles, when the construction has them.
    pub kinds: Option<Vec<PointKind>>,
    /// Index tuples the construction claims are halving (pairs in the plane,
    /// `d`-tuples in `d`-space).
    pub claimed_halving: Vec<Vec<usize>>,
    pub provenance: Provenance,
}

impl PointSetArtifact {
    pub fn new(dimension: usize, points: Vec<Point>, provenance: Provenance) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.dim() != dimension) {
            return Err(crate::error::Error::DimensionMismatch {
                expected: dimension,
                found: p.dim(),
            });
        }
        Ok(PointSetArtifact {
            dimension,
            points,
            kinds: None,
            claimed_halving: Vec::new(),
            provenance,
        })
    }

    pub fn with_claims(mut self, claims: Vec<Vec<usize>>) -> Result<Self> {
        for c in &claims {
            if c.len() != self.dimension {
                return Err(invalid(format!(
                    "claimed tuple {c:?} does not have {} indices",
                    self.dimension
                )));
            }
            if let Some(&i) = c.iter().find(|&&i| i >= self.points.len()) {
                return Err(invalid(format!("claimed index {i} out of range")));
            }
        }
        self.claimed_halving = claims;
        Ok(self)
    }

    pub fn with_kinds(mut self, kinds: Vec<PointKind>) -> Result<Self> {
        if kinds.len() != self.points.len() {
            return Err(invalid("one kind per point required"));
        }
        self.kinds = Some(kinds);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Applies `f` to every point, keeping roles and claims.
    pub fn map_points(
        &self,
        provenance: Provenance,
        f: impl Fn(&Point) -> Result<Point>,
    ) -> Result<Self> {
        let points = self.points.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(PointSetArtifact {
            dimension: points.first().map_or(self.dimension, Point::dim),
            points,
            kinds: self.kinds.clone(),
            claimed_halving: self.claimed_halving.clone(),
            provenance,
        })
    }

    pub fn xs(&self) -> impl Iterator<Item = &ExactScalar> {
        self.points.iter().map(Point::x)
    }
}

/// Smallest gap between sorted x-coordinates, and the full x-range width.
pub fn x_spread(points: &[Point]) -> Option<(ExactScalar, ExactScalar)> {
    if points.len() < 2 {
        return None;
    }
    let mut xs: Vec<&ExactScalar> = points.iter().map(Point::x).collect();
    xs.sort();
    let min_gap = xs
        .windows(2)
        .map(|w| w[1] - w[0])
        .min()
        .expect("two or more points");
    let width = *xs.last().unwrap() - *xs.first().unwrap();
    Some((min_gap, width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};

    #[test]
    fn rejects_bad_claims() {
        let a = PointSetArtifact::new(
            2,
            vec![Point::from_ints(&[0, 0]), Point::from_ints(&[1, 1])],
            Provenance::new("t"),
        )
        .unwrap();
        assert!(a.clone().with_claims(vec![vec![0, 5]]).is_err());
        assert!(a.clone().with_claims(vec![vec![0]]).is_err());
        assert!(a.with_claims(vec![vec![0, 1]]).is_ok());
    }

    #[test]
    fn x_spread_on_small_set() {
        let pts = vec![
            Point::xy(int(3), int(0)),
            Point::xy(ratio(1, 2), int(0)),
            Point::xy(int(1), int(5)),
        ];
        let (gap, width) = x_spread(&pts).unwrap();
        assert_eq!(gap, ratio(1, 2));
        assert_eq!(width, ratio(5, 2));
    }
}
