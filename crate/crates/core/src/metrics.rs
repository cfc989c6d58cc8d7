//! Point and segment counts of the recursive construction, and the closed
//! form bounds they satisfy.

use num_bigint::BigUint;
use num_traits::One;

use crate::report::{CheckOutcome, VerificationReport};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountsRow {
    pub i: u32,
    /// Progression length `a_i` (`a_0` is taken as 1).
    pub a: BigUint,
    /// Points of `S_i`.
    pub n: BigUint,
    /// Listed halving segments of `S_i`.
    pub m: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountsTable {
    pub rows: Vec<CountsRow>,
}

impl CountsTable {
    pub fn row(&self, i: u32) -> Option<&CountsRow> {
        self.rows.get(i as usize)
    }

    /// `m_{i-1}`, with the convention `m_{-1} = 1`.
    pub fn m_prev(&self, i: u32) -> BigUint {
        if i == 0 {
            BigUint::one()
        } else {
            self.rows[i as usize - 1].m.clone()
        }
    }
}

/// `m_i = (2 a_i + 1) m_{i-1}`, `n_i = a_i n_{i-1} + m_{i-1} + m_{i-2}` with
/// `n_0 = 2`, `m_0 = 1`, `m_{-1} = 1`.
pub fn counts(i_max: u32) -> CountsTable {
    let mut rows = vec![CountsRow {
        i: 0,
        a: BigUint::one(),
        n: BigUint::from(2u32),
        m: BigUint::one(),
    }];
    let mut m_before = BigUint::one();
    for i in 1..=i_max {
        let prev = rows.last().expect("seeded with row 0");
        let a = BigUint::one() << i as usize;
        let m = (&a * 2u32 + 1u32) * &prev.m;
        let n = &a * &prev.n + &prev.m + &m_before;
        m_before = prev.m.clone();
        rows.push(CountsRow { i, a, n, m });
    }
    CountsTable { rows }
}

/// Rational stand-ins for `e^2`: `2.71^2 < e^2 < 2.72^2`.
pub const E_SQUARED_LOWER: (u32, u32) = (73_441, 10_000);
pub const E_SQUARED_UPPER: (u32, u32) = (73_984, 10_000);

fn pow2(e: u64) -> BigUint {
    BigUint::one() << e as usize
}

/// Checks, for every row,
///
/// * `2^(i^2/2 + 3i/2) / 3 < m_i < (e^2/3) 2^(i^2/2 + 3i/2)`
/// * `2^(i^2/2 + i/2) < n_i < 4 (i+1) 2^(i^2/2 + i/2)`
///
/// All comparisons are squared so that half-integer exponents become integer
/// powers of two. The `m_i` upper bound is proved with the lower rational
/// bound on `e^2`, which makes it a strictly stronger statement.
pub fn check_bounds(table: &CountsTable) -> VerificationReport {
    let mut m_lower = CheckOutcome::new("m_i > 2^(i^2/2+3i/2) / 3");
    let mut m_upper = CheckOutcome::new("m_i < (e^2/3) 2^(i^2/2+3i/2)");
    let mut n_lower = CheckOutcome::new("n_i > 2^(i^2/2+i/2)");
    let mut n_upper = CheckOutcome::new("n_i < 4(i+1) 2^(i^2/2+i/2)");
    let (el_num, el_den) = E_SQUARED_LOWER;
    m_upper.note(format!(
        "e^2 replaced by the lower bound {el_num}/{el_den} = 2.71^2; holding there implies the bound with e^2"
    ));

    for row in &table.rows {
        let i = row.i as u64;
        // twice the exponents
        let em = i * i + 3 * i;
        let en = i * i + i;
        let m_sq = &row.m * &row.m;
        let n_sq = &row.n * &row.n;

        m_lower.examine(1);
        if !(m_sq.clone() * 9u32 > pow2(em)) {
            m_lower.fail(|| format!("i={i}: m={}", row.m));
        }

        // m < (L/D)/3 * 2^(em/2)  <=>  (3 D m)^2 < L^2 2^em
        m_upper.examine(1);
        let lhs = m_sq * (9u64 * el_den as u64 * el_den as u64);
        let rhs = pow2(em) * (el_num as u64 * el_num as u64);
        if !(lhs < rhs) {
            m_upper.fail(|| format!("i={i}: m={}", row.m));
        }

        n_lower.examine(1);
        if !(n_sq > pow2(en)) {
            n_lower.fail(|| format!("i={i}: n={}", row.n));
        }

        n_upper.examine(1);
        let bound = BigUint::from(4 * (i + 1));
        if !(n_sq < &bound * &bound * pow2(en)) {
            n_upper.fail(|| format!("i={i}: n={}", row.n));
        }
    }

    let mut report = VerificationReport::new("recursion count bounds");
    for c in [m_lower, m_upper, n_lower, n_upper] {
        report.push(c);
    }
    report
}

/// Whether `n_i^9 <= N <= n_i^10` leaves room for the next index, i.e.
/// `(2 n_i^10 + 1) n_i > (2 n_{i+1}^9 + 1) n_{i+1}`.
pub fn block_ranges_overlap(table: &CountsTable, i: u32) -> Option<bool> {
    let n = &table.row(i)?.n;
    let next = &table.row(i + 1)?.n;
    let lhs = (n.pow(10) * 2u32 + 1u32) * n;
    let rhs = (next.pow(9) * 2u32 + 1u32) * next;
    Some(lhs > rhs)
}
