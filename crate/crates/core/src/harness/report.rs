//! The per-instance row shared by `sum` and `sweep`, as CSV or JSON.

use serde::Serialize;

use crate::bounds::{compare_bounds, weil_completion_bound, BoundKind, BoundsError};
use crate::expsum::{ComplexValue, SumSpec};

pub const CSV_HEADER: &str = "q,k,a,M,N,re,im,abs,err,thm1,thm1_valid,weyl,weyl_valid,weil,best,ratio_thm1";

/// Bounds that need `k ≥ 3` are `None` for smaller degrees.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumRow {
    pub q: u64,
    pub k: u32,
    pub a: i128,
    #[serde(rename = "M")]
    pub m: i128,
    #[serde(rename = "N")]
    pub n: u64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub err: f64,
    pub thm1: Option<f64>,
    pub thm1_valid: Option<bool>,
    pub weyl: Option<f64>,
    pub weyl_valid: Option<bool>,
    pub weil: f64,
    pub best: BoundKind,
    pub ratio_thm1: Option<f64>,
}

pub fn sum_row(spec: &SumSpec, value: ComplexValue) -> Result<SumRow, BoundsError> {
    let q = spec.q.get();
    let n = spec.n;
    let abs = value.abs();
    let mut row = SumRow {
        q,
        k: spec.k,
        a: spec.a,
        m: spec.m,
        n,
        re: value.re,
        im: value.im,
        abs,
        err: value.err,
        thm1: None,
        thm1_valid: None,
        weyl: None,
        weyl_valid: None,
        weil: weil_completion_bound(q, spec.k)?.incomplete,
        best: BoundKind::Trivial,
        ratio_thm1: None,
    };
    if spec.k >= 3 {
        let r = compare_bounds(q, spec.k, n, None)?;
        row.thm1 = Some(r.thm1.value);
        row.thm1_valid = Some(r.thm1.valid);
        row.weyl = Some(r.weyl.value);
        row.weyl_valid = Some(r.weyl.valid);
        row.best = r.best;
        row.ratio_thm1 = (r.thm1.value > 0.0).then(|| abs / r.thm1.value);
    } else if row.weil < n as f64 {
        row.best = BoundKind::Weil;
    }
    Ok(row)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SumRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.q,
            self.k,
            self.a,
            self.m,
            self.n,
            self.re,
            self.im,
            self.abs,
            self.err,
            opt(self.thm1),
            opt(self.thm1_valid),
            opt(self.weyl),
            opt(self.weyl_valid),
            self.weil,
            self.best,
            opt(self.ratio_thm1),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("rows serialise")
    }

    /// `key = value` lines for the `sum` command.
    pub fn to_text(&self) -> String {
        CSV_HEADER
            .split(',')
            .zip(self.to_csv().split(','))
            .map(|(k, v)| format!("{k} = {}\n", if v.is_empty() { "n/a" } else { v }))
            .collect()
    }
}
