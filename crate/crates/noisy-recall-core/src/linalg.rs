//! Exact linear algebra on small integer matrices.
//!
//! Rational elimination uses `i128` numerators and denominators with gcd
//! reduction. Overflow is reported rather than silently wrapped.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Ratio {
    num: i128,
    den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Ratio {
    const ZERO: Ratio = Ratio { num: 0, den: 1 };

    fn int(v: i64) -> Self {
        Ratio { num: v as i128, den: 1 }
    }

    fn new(num: i128, den: i128) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num, den).max(1);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = n.checked_neg()?;
            d = d.checked_neg()?;
        }
        Some(Ratio { num: n, den: d })
    }

    fn is_zero(self) -> bool {
        self.num == 0
    }

    fn sub(self, o: Ratio) -> Option<Ratio> {
        let g = gcd(self.den, o.den).max(1);
        let l = (self.den / g).checked_mul(o.den)?;
        let a = self.num.checked_mul(l / self.den)?;
        let b = o.num.checked_mul(l / o.den)?;
        Ratio::new(a.checked_sub(b)?, l)
    }

    fn mul(self, o: Ratio) -> Option<Ratio> {
        let g1 = gcd(self.num, o.den).max(1);
        let g2 = gcd(o.num, self.den).max(1);
        let n = (self.num / g1).checked_mul(o.num / g2)?;
        let d = (self.den / g2).checked_mul(o.den / g1)?;
        Ratio::new(n, d)
    }

    fn div(self, o: Ratio) -> Option<Ratio> {
        if o.is_zero() {
            return None;
        }
        self.mul(Ratio { num: o.den, den: o.num }.normalized()?)
    }

    fn normalized(self) -> Option<Ratio> {
        Ratio::new(self.num, self.den)
    }
}

/// Arithmetic overflow during exact elimination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overflow;

struct Rref {
    rows: Vec<Vec<Ratio>>,
    pivots: Vec<usize>,
}

fn rref(matrix: &[Vec<i64>], ncols: usize) -> Result<Rref, Overflow> {
    let mut a: Vec<Vec<Ratio>> = matrix
        .iter()
        .map(|r| r.iter().map(|&v| Ratio::int(v)).collect())
        .collect();
    let nrows = a.len();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == nrows {
            break;
        }
        let Some(p) = (row..nrows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let pv = a[row][col];
        for c in col..ncols {
            a[row][c] = a[row][c].div(pv).ok_or(Overflow)?;
        }
        for i in 0..nrows {
            if i == row || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col];
            for c in col..ncols {
                let t = f.mul(a[row][c]).ok_or(Overflow)?;
                a[i][c] = a[i][c].sub(t).ok_or(Overflow)?;
            }
        }
        pivots.push(col);
        row += 1;
    }
    a.truncate(row);
    Ok(Rref { rows: a, pivots })
}

/// Exact rank over the rationals.
pub fn rank(matrix: &[Vec<i64>], ncols: usize) -> Result<usize, Overflow> {
    Ok(rref(matrix, ncols)?.pivots.len())
}

/// Integer basis of the right null space `{w : A w = 0}`.
///
/// One vector per free column, scaled to the smallest integer multiple and
/// made primitive (entries share no common factor).
pub fn nullspace(matrix: &[Vec<i64>], ncols: usize) -> Result<Vec<Vec<i64>>, Overflow> {
    let r = rref(matrix, ncols)?;
    let mut is_pivot = vec![false; ncols];
    for &p in &r.pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Ratio::ZERO; ncols];
        v[free] = Ratio::int(1);
        for (i, &pc) in r.pivots.iter().enumerate() {
            let x = r.rows[i][free];
            v[pc] = Ratio::new(-x.num, x.den).ok_or(Overflow)?;
        }
        let mut lcm: i128 = 1;
        for x in &v {
            let g = gcd(lcm, x.den).max(1);
            lcm = (lcm / g).checked_mul(x.den).ok_or(Overflow)?;
        }
        let mut ints: Vec<i128> = Vec::with_capacity(ncols);
        for x in &v {
            ints.push(x.num.checked_mul(lcm / x.den).ok_or(Overflow)?);
        }
        let g = ints.iter().fold(0, |g, &x| gcd(g, x)).max(1);
        let mut out = Vec::with_capacity(ncols);
        for x in ints {
            out.push(i64::try_from(x / g).map_err(|_| Overflow)?);
        }
        basis.push(out);
    }
    Ok(basis)
}

const P: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn powmod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b);
        }
        b = mulmod(b, b);
        e >>= 1;
    }
    r
}

/// Rank modulo the prime 2^61 - 1. A lower bound on the rational rank, so a
/// full modular rank certifies full rational rank.
pub fn rank_mod_p(matrix: &[Vec<i64>], ncols: usize) -> usize {
    let mut a: Vec<Vec<u64>> = matrix
        .iter()
        .map(|r| r.iter().map(|&v| v.rem_euclid(P as i64) as u64).collect())
        .collect();
    let nrows = a.len();
    let mut row = 0;
    for col in 0..ncols {
        if row == nrows {
            break;
        }
        let Some(p) = (row..nrows).find(|&i| a[i][col] != 0) else {
            continue;
        };
        a.swap(row, p);
        let inv = powmod(a[row][col], P - 2);
        for c in col..ncols {
            a[row][c] = mulmod(a[row][c], inv);
        }
        for i in row + 1..nrows {
            let f = a[i][col];
            if f == 0 {
                continue;
            }
            for c in col..ncols {
                let t = mulmod(f, a[row][c]);
                a[i][c] = (a[i][c] + P - t) % P;
            }
        }
        row += 1;
    }
    row
}
