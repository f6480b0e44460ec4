//! Explicit constants of the discrete Agmon and interpolation inequalities.
//!
//! The hat recursions are evaluated in the log domain. For `j ≥ 1`
//!
//! ```text
//! ln ĉ_j = t_j + e_j Σ_{i<j} ln ĉ_i / (i+1)
//! ln d̂_j = t_j + e_j Σ_{i<j} ln d̂_i / (i+1)
//! t_j = (j+1) / (2 (j+2) j) · ln(1 + d̂_{j−1}^{2(j+1)}),   e_j = (j+1) / ((j+2) j)
//! ```
//!
//! with `ĉ_0 = c_{B,1}/√2`, and `c_m = Π_{j=0}^{m−2} ĉ_j^{1/(j+1)}`, `c_1 = 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Result};
use crate::report::ser_f64;

/// `c_A = (2 + √2/2)^{1/2}`.
pub fn c_a() -> f64 {
    (2.0 + std::f64::consts::SQRT_2 / 2.0).sqrt()
}

/// `c_{A,1} = (1 + (√2 c_A)^{4/3})^{3/4}`.
pub fn c_a1() -> f64 {
    (1.0 + (std::f64::consts::SQRT_2 * c_a()).powf(4.0 / 3.0)).powf(0.75)
}

/// `c_{B,1} = 2 (1 + 2 (c_A c_{A,1})²)^{1/2}`.
pub fn c_b1() -> f64 {
    let p = c_a() * c_a1();
    2.0 * (1.0 + 2.0 * p * p).sqrt()
}

/// The three closed-form constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseConstants {
    pub c_a: f64,
    pub c_a1: f64,
    pub c_b1: f64,
}

pub fn base_constants() -> BaseConstants {
    BaseConstants {
        c_a: c_a(),
        c_a1: c_a1(),
        c_b1: c_b1(),
    }
}

/// Seed `d̂_0` of the `d̂` recursion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum HatSeed {
    /// `d̂_0 = c_{B,1}`.
    #[default]
    CB1,
    /// `d̂_0 = c_{B,1}/√2`, the same seed as `ĉ_0`.
    CB1OverSqrt2,
    /// `d̂_0 = c_A`.
    CA,
    /// `d̂_0 = c_{A,1}`.
    CA1,
    /// `d̂_0 = 1`.
    One,
    /// Any positive value.
    Value(f64),
}

impl HatSeed {
    /// Named seeds tried when comparing against the published table.
    pub const ADMISSIBLE: [HatSeed; 5] = [
        HatSeed::CB1,
        HatSeed::CB1OverSqrt2,
        HatSeed::CA,
        HatSeed::CA1,
        HatSeed::One,
    ];

    pub fn value(self) -> f64 {
        match self {
            HatSeed::CB1 => c_b1(),
            HatSeed::CB1OverSqrt2 => c_b1() / std::f64::consts::SQRT_2,
            HatSeed::CA => c_a(),
            HatSeed::CA1 => c_a1(),
            HatSeed::One => 1.0,
            HatSeed::Value(v) => v,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cb1" => Ok(HatSeed::CB1),
            "cb1/sqrt2" => Ok(HatSeed::CB1OverSqrt2),
            "ca" => Ok(HatSeed::CA),
            "ca1" => Ok(HatSeed::CA1),
            "one" => Ok(HatSeed::One),
            other => match other.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Ok(HatSeed::Value(v)),
                _ => invalid(format!(
                    "unknown seed {other:?}; expected cb1, cb1/sqrt2, ca, ca1, one or a positive number"
                )),
            },
        }
    }
}

impl fmt::Display for HatSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HatSeed::CB1 => f.write_str("cb1"),
            HatSeed::CB1OverSqrt2 => f.write_str("cb1/sqrt2"),
            HatSeed::CA => f.write_str("ca"),
            HatSeed::CA1 => f.write_str("ca1"),
            HatSeed::One => f.write_str("one"),
            HatSeed::Value(v) => write!(f, "{v}"),
        }
    }
}

/// `ln(1 + e^x)` without overflow.
fn ln_1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `(ln ĉ_j, ln d̂_j)` for `j = 0..=jmax`.
pub fn log_hat_sequences(jmax: usize, seed: HatSeed) -> Result<(Vec<f64>, Vec<f64>)> {
    let d0 = seed.value();
    if !(d0 > 0.0) || !d0.is_finite() {
        return invalid(format!("seed d̂_0 must be positive and finite, got {d0}"));
    }
    let mut lc = Vec::with_capacity(jmax + 1);
    let mut ld = Vec::with_capacity(jmax + 1);
    lc.push((c_b1() / std::f64::consts::SQRT_2).ln());
    ld.push(d0.ln());
    let mut sum_c = lc[0];
    let mut sum_d = ld[0];
    for j in 1..=jmax {
        let jf = j as f64;
        let t = (jf + 1.0) / (2.0 * (jf + 2.0) * jf) * ln_1p_exp(2.0 * (jf + 1.0) * ld[j - 1]);
        let e = (jf + 1.0) / ((jf + 2.0) * jf);
        let c = t + e * sum_c;
        let d = t + e * sum_d;
        if !c.is_finite() || !d.is_finite() {
            return numeric(format!(
                "hat recursion overflowed the log domain at j = {j}"
            ));
        }
        sum_c += c / (jf + 1.0);
        sum_d += d / (jf + 1.0);
        lc.push(c);
        ld.push(d);
    }
    Ok((lc, ld))
}

/// `(ĉ_j, d̂_j)` for `j = 0..=jmax`; entries beyond `f64` range are `+∞`.
pub fn hat_sequences(jmax: usize, seed: HatSeed) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lc, ld) = log_hat_sequences(jmax, seed)?;
    Ok((
        lc.into_iter().map(f64::exp).collect(),
        ld.into_iter().map(f64::exp).collect(),
    ))
}

/// Memoised constants up to a maximal interpolation order.
#[derive(Clone, Debug)]
pub struct ConstantsTable {
    base: BaseConstants,
    seed: HatSeed,
    log_hat_c: Vec<f64>,
    log_hat_d: Vec<f64>,
    /// `ln c_m` at index `m`; index 0 unused.
    log_c: Vec<f64>,
}

impl ConstantsTable {
    /// Table valid for `m = 1..=mmax`.
    pub fn new(mmax: usize, seed: HatSeed) -> Result<Self> {
        if mmax == 0 {
            return invalid("mmax must be at least 1");
        }
        let jmax = mmax.saturating_sub(2);
        let (log_hat_c, log_hat_d) = log_hat_sequences(jmax, seed)?;
        let mut log_c = vec![0.0; mmax + 1];
        let mut acc = 0.0;
        for m in 2..=mmax {
            let j = m - 2;
            acc += log_hat_c[j] / (j + 1) as f64;
            log_c[m] = acc;
        }
        Ok(ConstantsTable {
            base: base_constants(),
            seed,
            log_hat_c,
            log_hat_d,
            log_c,
        })
    }

    pub fn base(&self) -> BaseConstants {
        self.base
    }

    pub fn seed(&self) -> HatSeed {
        self.seed
    }

    pub fn mmax(&self) -> usize {
        self.log_c.len() - 1
    }

    pub fn hat_c(&self, j: usize) -> Option<f64> {
        self.log_hat_c.get(j).map(|l| l.exp())
    }

    pub fn hat_d(&self, j: usize) -> Option<f64> {
        self.log_hat_d.get(j).map(|l| l.exp())
    }

    pub fn log_hat_c(&self) -> &[f64] {
        &self.log_hat_c
    }

    pub fn log_hat_d(&self) -> &[f64] {
        &self.log_hat_d
    }

    /// `ln c_m`.
    pub fn log_c_m(&self, m: usize) -> Result<f64> {
        if m == 0 || m > self.mmax() {
            return invalid(format!(
                "c_m requested for m = {m}, table covers 1..={}",
                self.mmax()
            ));
        }
        Ok(self.log_c[m])
    }

    /// `c_m`, `+∞` past the `f64` range.
    pub fn c_m(&self, m: usize) -> Result<f64> {
        Ok(self.log_c_m(m)?.exp())
    }

    pub fn summary(&self, orders: &[usize]) -> Result<ConstantsSummary> {
        let mut rows = Vec::with_capacity(orders.len());
        for &m in orders {
            let l = self.log_c_m(m)?;
            rows.push(CmRow {
                m,
                c_m: l.exp(),
                log10_c_m: l / std::f64::consts::LN_10,
            });
        }
        let hat = (0..self.log_hat_c.len().min(16))
            .map(|j| HatRow {
                j,
                hat_c: self.log_hat_c[j].exp(),
                hat_d: self.log_hat_d[j].exp(),
            })
            .collect();
        Ok(ConstantsSummary {
            c_a: self.base.c_a,
            c_a1: self.base.c_a1,
            c_b1: self.base.c_b1,
            seed: self.seed.to_string(),
            seed_value: self.seed.value(),
            c_m: rows,
            hat,
        })
    }
}

/// `c_m` for a single order under the default seed.
pub fn c_m(m: usize) -> Result<f64> {
    ConstantsTable::new(m.max(1), HatSeed::default())?.c_m(m)
}

/// Serialisable view of a [`ConstantsTable`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsSummary {
    pub c_a: f64,
    pub c_a1: f64,
    pub c_b1: f64,
    pub seed: String,
    pub seed_value: f64,
    pub c_m: Vec<CmRow>,
    pub hat: Vec<HatRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CmRow {
    pub m: usize,
    #[serde(serialize_with = "ser_f64")]
    pub c_m: f64,
    pub log10_c_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HatRow {
    pub j: usize,
    #[serde(serialize_with = "ser_f64")]
    pub hat_c: f64,
    #[serde(serialize_with = "ser_f64")]
    pub hat_d: f64,
}

/// Published `c_m` values: orders 2..10 and the large-order saturation.
pub const PUBLISHED_C_M: [(usize, f64); 13] = [
    (2, 9.558),
    (3, 33.17),
    (4, 67.26),
    (5, 103.7),
    (6, 137.7),
    (7, 167.5),
    (8, 193.0),
    (9, 214.7),
    (10, 233.4),
    (100, 432.7),
    (1000, 458.5),
    (10_000, 461.1),
    (100_000, 461.4),
];

/// One published entry against the value computed under a seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub m: usize,
    pub published: f64,
    #[serde(serialize_with = "ser_f64")]
    pub computed: f64,
    pub log10_computed: f64,
    #[serde(serialize_with = "ser_f64")]
    pub rel_err: f64,
}

/// Outcome of comparing one seed with the published table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableComparison {
    pub seed: String,
    pub seed_value: f64,
    pub rows: Vec<TableRow>,
    /// Every listed order within `tol` relative error.
    pub matches: bool,
    pub tol: f64,
    /// Whether `c_m` is nondecreasing over `2..=mmax`.
    pub nondecreasing: bool,
    /// `c(10⁵) − c(10⁴)`.
    #[serde(serialize_with = "ser_f64")]
    pub saturation_gap: f64,
}

/// Evaluates the recursion under `seed` at every published order.
pub fn compare_with_published(seed: HatSeed, tol: f64) -> Result<TableComparison> {
    let mmax = PUBLISHED_C_M.iter().map(|r| r.0).max().unwrap_or(2);
    let table = ConstantsTable::new(mmax, seed)?;
    let mut rows = Vec::with_capacity(PUBLISHED_C_M.len());
    for &(m, published) in PUBLISHED_C_M.iter() {
        let l = table.log_c_m(m)?;
        let computed = l.exp();
        rows.push(TableRow {
            m,
            published,
            computed,
            log10_computed: l / std::f64::consts::LN_10,
            rel_err: (computed - published).abs() / published,
        });
    }
    let matches = rows.iter().all(|r| r.rel_err <= tol);
    let nondecreasing = table.log_c.windows(2).skip(1).all(|w| w[1] >= w[0]);
    let (l4, l5) = (table.log_c_m(10_000)?, table.log_c_m(100_000)?);
    let gap = if l5 <= l4 {
        l5.exp() - l4.exp()
    } else {
        l4.exp() * (l5 - l4).exp_m1()
    };
    Ok(TableComparison {
        seed: seed.to_string(),
        seed_value: seed.value(),
        rows,
        matches,
        tol,
        nondecreasing,
        saturation_gap: gap,
    })
}

/// `max_{0≤k≤m−1} (k+1)^{1/m} (T/T_{k+1})^{(m−k)/m}` on a grid of `M`
/// intervals, where `T/T_{k+1} = M/(M−k)`. Requires `1 ≤ m ≤ M`.
pub fn scale_factor(intervals: usize, m: usize) -> Result<f64> {
    if m == 0 || m > intervals {
        return invalid(format!(
            "scale factor needs 1 ≤ m ≤ M, got m = {m}, M = {intervals}"
        ));
    }
    let mf = m as f64;
    let big = intervals as f64;
    Ok((0..m)
        .map(|k| {
            let kf = k as f64;
            (kf + 1.0).powf(1.0 / mf) * (big / (big - kf)).powf((mf - kf) / mf)
        })
        .fold(0.0, f64::max))
}

/// `e^{1 + 1/e}`.
pub fn scale_factor_ceiling() -> f64 {
    (1.0 + (-1.0f64).exp()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_values() {
        // Independent evaluation of the closed forms.
        let ca = (2.0f64 + 2.0f64.sqrt() / 2.0).sqrt();
        assert!((c_a() - 1.645_329).abs() < 1e-6);
        assert_eq!(c_a(), ca);
        let ca1 = (1.0 + (2.0f64.sqrt() * ca).powf(4.0 / 3.0)).powf(0.75);
        assert!((c_a1() - ca1).abs() < 1e-15);
        assert!((c_a1() - 2.872_519).abs() < 1e-6);
        let cb1 = 2.0 * (1.0 + 2.0 * (ca * ca1).powi(2)).sqrt();
        assert!((c_b1() - cb1).abs() < 1e-13);
        assert!((c_b1() - 13.516_60).abs() < 1e-4);
    }

    #[test]
    fn hat_c0_and_c2() {
        let t = ConstantsTable::new(2, HatSeed::default()).unwrap();
        assert!((t.hat_c(0).unwrap() - 9.5586).abs() < 1e-3);
        assert!((t.c_m(2).unwrap() - 9.558).abs() < 1e-3);
        assert_eq!(t.c_m(1).unwrap(), 1.0);
    }

    #[test]
    fn recursion_matches_direct_products() {
        // Direct (non-log) evaluation for small j.
        let d0 = c_b1();
        let mut c = vec![c_b1() / 2f64.sqrt()];
        let mut d = vec![d0];
        for j in 1..6usize {
            let jf = j as f64;
            let base =
                (1.0 + d[j - 1].powf(2.0 * (jf + 1.0))).powf((jf + 1.0) / (2.0 * (jf + 2.0) * jf));
            let pc: f64 = (0..j).map(|i| c[i].powf(1.0 / (i as f64 + 1.0))).product();
            let pd: f64 = (0..j).map(|i| d[i].powf(1.0 / (i as f64 + 1.0))).product();
            let e = (jf + 1.0) / ((jf + 2.0) * jf);
            c.push(base * pc.powf(e));
            d.push(base * pd.powf(e));
        }
        let (hc, hd) = hat_sequences(5, HatSeed::CB1).unwrap();
        for j in 0..6 {
            assert!((hc[j] / c[j] - 1.0).abs() < 1e-12, "c_{j}");
            assert!((hd[j] / d[j] - 1.0).abs() < 1e-12, "d_{j}");
        }
        let t = ConstantsTable::new(7, HatSeed::CB1).unwrap();
        let direct: f64 = (0..=5).map(|j| c[j].powf(1.0 / (j as f64 + 1.0))).product();
        assert!((t.c_m(7).unwrap() / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positivity_at_jmax_100() {
        let (c, d) = hat_sequences(100, HatSeed::default()).unwrap();
        assert!(c.iter().chain(d.iter()).all(|v| *v > 0.0));
    }

    #[test]
    fn c_m_nondecreasing() {
        let t = ConstantsTable::new(50, HatSeed::default()).unwrap();
        for m in 1..50 {
            assert!(t.log_c_m(m + 1).unwrap() >= t.log_c_m(m).unwrap());
        }
    }

    #[test]
    fn seed_parsing_round_trip() {
        for s in HatSeed::ADMISSIBLE {
            assert_eq!(HatSeed::parse(&s.to_string()).unwrap(), s);
        }
        assert_eq!(HatSeed::parse("2.5").unwrap(), HatSeed::Value(2.5));
        assert!(HatSeed::parse("-1").is_err());
    }

    #[test]
    fn scale_factor_below_ceiling() {
        assert!(scale_factor_ceiling() <= 3.93);
        for big in 1..40 {
            for m in 1..=big {
                assert!(scale_factor(big, m).unwrap() <= scale_factor_ceiling());
            }
        }
        assert!(scale_factor(4, 5).is_err());
    }
}
