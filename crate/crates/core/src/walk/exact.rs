//! Rational-arithmetic witnesses for the walk identities.
//!
//! The up-probability is converted from its `f64` value without rounding,
//! so these results are the exact values for the same walk the floating
//! point routines use. Horizons are capped at [`MAX_RATIONAL_HORIZON`];
//! numerators grow quickly beyond that.

use super::WalkParams;
use crate::error::{invalid, Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub const MAX_RATIONAL_HORIZON: usize = 60;

/// Exact step probabilities `(p, 1 - 2p)`.
#[derive(Debug, Clone)]
pub struct RationalWalk {
    pub p: BigRational,
    pub stay: BigRational,
}

impl RationalWalk {
    pub fn new(params: &WalkParams) -> Self {
        let p = BigRational::from_float(params.p()).expect("p is finite");
        let two = BigRational::from_integer(BigInt::from(2));
        let stay = BigRational::one() - &two * &p;
        RationalWalk { p, stay }
    }

    /// Law of `S_k` on `-k..=k`.
    pub fn pmf_row(&self, k: usize) -> Result<Vec<BigRational>> {
        check(k)?;
        let width = 2 * k + 1;
        let mut cur = vec![BigRational::zero(); width];
        cur[k] = BigRational::one();
        for _ in 0..k {
            let mut next = vec![BigRational::zero(); width];
            for x in 0..width {
                if cur[x].is_zero() {
                    continue;
                }
                next[x] += &self.stay * &cur[x];
                if x > 0 {
                    next[x - 1] += &self.p * &cur[x];
                }
                if x + 1 < width {
                    next[x + 1] += &self.p * &cur[x];
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    pub fn pmf(&self, k: usize, b: i64) -> Result<BigRational> {
        if b.unsigned_abs() > k as u64 {
            return Ok(BigRational::zero());
        }
        Ok(self.pmf_row(k)?[(b + k as i64) as usize].clone())
    }

    /// `P(T = n)` for `n` in `0..=n_max` and the surviving mass
    /// `P(S_{n_max} = x, T > n_max)` for `x` in `0..=n_max`.
    pub fn absorbing(&self, n_max: usize) -> Result<(Vec<BigRational>, Vec<BigRational>)> {
        check(n_max)?;
        let mut first = vec![BigRational::zero(); n_max + 1];
        let mut mass = vec![BigRational::zero(); n_max + 2];
        for n in 1..=n_max {
            if n == 1 {
                first[1] = BigRational::one() - &self.p;
                mass[1] = self.p.clone();
                continue;
            }
            first[n] = &self.p * &mass[1];
            let mut next = vec![BigRational::zero(); n_max + 2];
            for x in 1..=n {
                if mass[x].is_zero() {
                    continue;
                }
                next[x] += &self.stay * &mass[x];
                next[x + 1] += &self.p * &mass[x];
                if x >= 2 {
                    next[x - 1] += &self.p * &mass[x];
                }
            }
            mass = next;
        }
        mass.truncate(n_max + 1);
        Ok((first, mass))
    }

    pub fn first_passage(&self, n: usize) -> Result<BigRational> {
        if n == 0 {
            return Err(invalid("n", "first-passage horizon must be at least 1"));
        }
        Ok(self.absorbing(n)?.0[n].clone())
    }

    pub fn reflection_first_passage(&self, n: usize) -> Result<BigRational> {
        if n < 2 {
            return Err(invalid("n", "the reflection formula needs n >= 2"));
        }
        let diff = self.pmf(n - 2, 0)? - self.pmf(n - 2, 2)?;
        Ok(&self.p * &self.p * diff)
    }

    pub fn pinned_positive(&self, m: usize, b: i64) -> Result<BigRational> {
        if m == 0 || b <= 0 {
            return Err(invalid("b", "need m >= 1 and b >= 1"));
        }
        let diff = self.pmf(m - 1, b - 1)? - self.pmf(m - 1, b + 1)?;
        Ok(&self.p * diff)
    }

    pub fn pinned_positive_dp(&self, m: usize, b: i64) -> Result<BigRational> {
        if m == 0 || b <= 0 {
            return Err(invalid("b", "need m >= 1 and b >= 1"));
        }
        let (_, mass) = self.absorbing(m)?;
        Ok(mass.get(b as usize).cloned().unwrap_or_else(BigRational::zero))
    }

    /// Gambler's-ruin probability from 1 with barriers 0 and `barrier`, by
    /// exact elimination of the harmonic system.
    pub fn ruin_probability(&self, barrier: i64) -> Result<BigRational> {
        if barrier < 1 {
            return Err(invalid("b", "barrier must be at least 1"));
        }
        check(barrier as usize)?;
        if barrier == 1 {
            return Ok(BigRational::one());
        }
        let n = (barrier - 1) as usize;
        let diag = BigRational::one() - &self.stay;
        let off = -self.p.clone();
        let mut c_prime: Vec<BigRational> = Vec::with_capacity(n);
        let mut d_prime: Vec<BigRational> = Vec::with_capacity(n);
        for i in 0..n {
            let rhs = if i == n - 1 { self.p.clone() } else { BigRational::zero() };
            let (denom, d_in) = if i == 0 {
                (diag.clone(), rhs)
            } else {
                (&diag - &off * &c_prime[i - 1], rhs - &off * &d_prime[i - 1])
            };
            c_prime.push(if i == n - 1 { BigRational::zero() } else { &off / &denom });
            d_prime.push(d_in / denom);
        }
        let mut h = d_prime[n - 1].clone();
        for i in (0..n - 1).rev() {
            h = &d_prime[i] - &c_prime[i] * &h;
        }
        Ok(h)
    }
}

fn check(n: usize) -> Result<()> {
    if n > MAX_RATIONAL_HORIZON {
        return Err(Error::TooLarge {
            what: "rational horizon",
            size: n,
            limit: MAX_RATIONAL_HORIZON,
        });
    }
    Ok(())
}

/// Nearest `f64` to a rational.
pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
