//! Integer forms of rational point sets for the predicate hot loops.
//!
//! Planar sets whose coordinates share a small common denominator go to
//! `i64` storage with `i128` cross products; everything else becomes
//! homogeneous `BigInt` rows `(X_1, .., X_d, W)` with `W > 0`, one
//! denominator per point. Both forms are positive rescalings, so every sign
//! they produce equals the sign of the rational predicate.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::Point;

const SMALL_BITS: u64 = 62;

pub(crate) trait PlanarKernel: Sync {
    type Dir: Clone + Send + Sync;

    fn len(&self) -> usize;

    /// A positive multiple of `p[to] - p[from]`.
    fn dir(&self, from: usize, to: usize) -> Self::Dir;

    fn cross(u: &Self::Dir, v: &Self::Dir) -> Ordering;

    fn dot(u: &Self::Dir, v: &Self::Dir) -> Ordering;

    /// `|u|^2` against `|v|^2`. Only meaningful for directions taken from the
    /// same pivot.
    fn norm_cmp(u: &Self::Dir, v: &Self::Dir) -> Ordering;

    /// True for angles in `[0, pi)`.
    fn upper(u: &Self::Dir) -> bool;

    fn dirs_from(&self, from: usize) -> Vec<Self::Dir> {
        (0..self.len()).map(|to| self.dir(from, to)).collect()
    }

    /// Angular order around a pivot: half-plane, then counter-clockwise
    /// turn, then distance.
    fn angle_cmp(u: &Self::Dir, v: &Self::Dir) -> Ordering {
        match (Self::upper(u), Self::upper(v)) {
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => match Self::cross(u, v) {
                Ordering::Greater => Ordering::Less,
                Ordering::Less => Ordering::Greater,
                Ordering::Equal => Self::norm_cmp(u, v),
            },
        }
    }
}

pub(crate) struct SmallPlane {
    pts: Vec<[i64; 2]>,
}

impl PlanarKernel for SmallPlane {
    type Dir = [i64; 2];

    fn len(&self) -> usize {
        self.pts.len()
    }

    fn dir(&self, from: usize, to: usize) -> [i64; 2] {
        let (a, b) = (self.pts[from], self.pts[to]);
        [b[0] - a[0], b[1] - a[1]]
    }

    fn cross(u: &[i64; 2], v: &[i64; 2]) -> Ordering {
        let l = u[0] as i128 * v[1] as i128;
        let r = u[1] as i128 * v[0] as i128;
        l.cmp(&r)
    }

    fn dot(u: &[i64; 2], v: &[i64; 2]) -> Ordering {
        (u[0] as i128 * v[0] as i128 + u[1] as i128 * v[1] as i128).cmp(&0)
    }

    fn norm_cmp(u: &[i64; 2], v: &[i64; 2]) -> Ordering {
        let nu = u[0] as i128 * u[0] as i128 + u[1] as i128 * u[1] as i128;
        let nv = v[0] as i128 * v[0] as i128 + v[1] as i128 * v[1] as i128;
        nu.cmp(&nv)
    }

    fn upper(u: &[i64; 2]) -> bool {
        u[1] > 0 || (u[1] == 0 && u[0] > 0)
    }
}

pub(crate) struct BigPlane {
    pts: Vec<[BigInt; 3]>,
}

impl PlanarKernel for BigPlane {
    type Dir = [BigInt; 2];

    fn len(&self) -> usize {
        self.pts.len()
    }

    fn dir(&self, from: usize, to: usize) -> [BigInt; 2] {
        let (a, b) = (&self.pts[from], &self.pts[to]);
        [&b[0] * &a[2] - &a[0] * &b[2], &b[1] * &a[2] - &a[1] * &b[2]]
    }

    fn cross(u: &[BigInt; 2], v: &[BigInt; 2]) -> Ordering {
        (&u[0] * &v[1]).cmp(&(&u[1] * &v[0]))
    }

    fn dot(u: &[BigInt; 2], v: &[BigInt; 2]) -> Ordering {
        (&u[0] * &v[0] + &u[1] * &v[1]).cmp(&BigInt::zero())
    }

    fn norm_cmp(u: &[BigInt; 2], v: &[BigInt; 2]) -> Ordering {
        (&u[0] * &u[0] + &u[1] * &u[1]).cmp(&(&v[0] * &v[0] + &v[1] * &v[1]))
    }

    fn upper(u: &[BigInt; 2]) -> bool {
        u[1].is_positive() || (u[1].is_zero() && u[0].is_positive())
    }
}

pub(crate) enum PlanarLattice {
    Small(SmallPlane),
    Big(BigPlane),
}

impl PlanarLattice {
    pub(crate) fn new(points: &[Point]) -> Result<Self> {
        for p in points {
            if p.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: p.dim(),
                });
            }
        }
        let common = points
            .iter()
            .flat_map(|p| p.coords().iter().map(|c| c.denom().clone()))
            .fold(BigInt::one(), |acc, d| acc.lcm(&d));
        if common.bits() <= SMALL_BITS {
            let mut pts = Vec::with_capacity(points.len());
            let mut fits = true;
            for p in points {
                let x = p.x().numer() * (&common / p.x().denom());
                let y = p.y().numer() * (&common / p.y().denom());
                if x.bits() >= SMALL_BITS || y.bits() >= SMALL_BITS {
                    fits = false;
                    break;
                }
                pts.push([to_i64(&x), to_i64(&y)]);
            }
            if fits {
                return Ok(PlanarLattice::Small(SmallPlane { pts }));
            }
        }
        let pts = homogeneous(points)
            .into_iter()
            .map(|row| {
                let mut it = row.into_iter();
                [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
            })
            .collect();
        Ok(PlanarLattice::Big(BigPlane { pts }))
    }

    #[cfg(test)]
    pub(crate) fn is_small(&self) -> bool {
        matches!(self, PlanarLattice::Small(_))
    }
}

fn to_i64(v: &BigInt) -> i64 {
    i64::try_from(v).expect("bit length checked")
}

/// Rows `(x_1 W, .., x_d W, W)` with `W` the lcm of the point's denominators.
pub(crate) fn homogeneous(points: &[Point]) -> Vec<Vec<BigInt>> {
    points
        .iter()
        .map(|p| {
            let w = p
                .coords()
                .iter()
                .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
            let mut row: Vec<BigInt> = p
                .coords()
                .iter()
                .map(|c| c.numer() * (&w / c.denom()))
                .collect();
            row.push(w);
            row
        })
        .collect()
}

/// Fraction-free Gaussian elimination (Bareiss). Consumes the matrix.
pub(crate) fn determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
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
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// Coefficients `h` with `h . row = det([rows; row])` for a `d x (d+1)`
/// matrix of homogeneous rows (generalized cross product).
pub(crate) fn hyperplane_through(rows: &[&[BigInt]]) -> Vec<BigInt> {
    let d = rows.len();
    let width = d + 1;
    (0..width)
        .map(|col| {
            let minor: Vec<Vec<BigInt>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != col)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let det = determinant(minor);
            // cofactor sign for the appended last row, column `col`
            if (d + col) % 2 == 0 {
                det
            } else {
                -det
            }
        })
        .collect()
}

pub(crate) fn dot(h: &[BigInt], row: &[BigInt]) -> BigInt {
    h.iter().zip(row).map(|(a, b)| a * b).sum()
}
