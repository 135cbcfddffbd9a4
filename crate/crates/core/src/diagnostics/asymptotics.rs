//! The first-passage constant `c_K = lim n^{3/2} P(T = n)`.

use crate::error::{invalid, Error, Result};
use crate::walk::{first_passage_series, WalkParams};
use serde::Serialize;

/// Default largest `n` for [`ck_series`].
pub const CK_DEFAULT_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CkRow {
    pub n: usize,
    pub value: f64,
}

/// `value(n) / value(2n)` for every `n` whose double is also listed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CkRatio {
    pub n: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CkSeries {
    pub rows: Vec<CkRow>,
    pub doublings: Vec<CkRatio>,
}

impl CkSeries {
    pub fn value(&self, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.value)
    }
}

/// `n^{3/2} P(T = n)` for each `n` in `n_list` (up to [`CK_DEFAULT_LIMIT`]).
pub fn ck_series(walk: &WalkParams, n_list: &[usize]) -> Result<CkSeries> {
    ck_series_with_limit(walk, n_list, CK_DEFAULT_LIMIT)
}

pub fn ck_series_with_limit(walk: &WalkParams, n_list: &[usize], limit: usize) -> Result<CkSeries> {
    let Some(&n_max) = n_list.iter().max() else {
        return Err(invalid("n", "grid is empty"));
    };
    if n_list.contains(&0) {
        return Err(invalid("n", "first-passage times start at 1"));
    }
    if n_max > limit {
        return Err(Error::TooLarge {
            what: "first-passage DP",
            size: n_max,
            limit,
        });
    }
    let series = first_passage_series(walk, n_max);
    let rows: Vec<CkRow> = n_list
        .iter()
        .map(|&n| CkRow {
            n,
            value: (n as f64).powf(1.5) * series[n],
        })
        .collect();
    let doublings = rows
        .iter()
        .filter_map(|r| {
            let twice = rows.iter().find(|s| s.n == 2 * r.n)?;
            Some(CkRatio {
                n: r.n,
                ratio: r.value / twice.value,
            })
        })
        .collect();
    Ok(CkSeries { rows, doublings })
}
