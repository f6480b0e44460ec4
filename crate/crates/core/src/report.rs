//! Outcome records for inequality and identity checks.

use serde::{Deserialize, Serialize, Serializer};

/// Relative slack on bound checks; covers rounding only.
pub const BOUND_REL_TOL: f64 = 1e-12;
/// Absolute slack on bound checks.
pub const BOUND_ABS_TOL: f64 = 1e-14;
/// Relative gap accepted by exact identities.
pub const IDENTITY_REL_TOL: f64 = 1e-10;
/// Absolute gap accepted by exact identities whose right side vanishes.
pub const IDENTITY_ABS_TOL: f64 = 1e-14;

/// Which inequality or identity a report belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    /// `‖f_n‖ ≤ c_A ‖f‖_0^{1/2} ‖Df‖_0^{1/2}` for zero-mean sequences.
    Agmon,
    /// Agmon bound for `D^k f` with `c_{A,1}` and the weighted norm.
    AgmonDk,
    /// Periodic summation by parts.
    PartsPeriodic,
    /// Periodic interpolation `‖Df‖ ≤ ‖f‖^{(m−1)/m} ‖D^m f‖^{1/m}`.
    InterpPeriodic,
    /// Periodic max estimate with `c_A`.
    MaxEstPeriodic,
    /// General summation by parts with `c_{B,1}`.
    PartsGeneral,
    /// General interpolation with `c_m`.
    InterpGeneral,
    /// General max estimate with `c_A c_m^{1/2}`.
    MaxEstGeneral,
    /// Periodic function theorem, difference-quotient bound.
    PeriodicFunctionDq,
    /// Periodic function theorem, pointwise bound.
    PeriodicFunctionMax,
    /// General function theorem, difference-quotient bound.
    GeneralFunctionDq,
    /// General function theorem, pointwise bound.
    GeneralFunctionMax,
    /// `‖D^k f_τ‖_0 ≤ k ‖∂^k f‖_{L²}`.
    DqDerivative,
    /// `‖D f_τ‖_{m−1}^{1/m} ≤ 4 ‖∂_t f‖_{H^{m−1}}^{1/m}`.
    WeightedDqDerivative,
    /// `max_k (k+1)^{1/m} (T/T_{k+1})^{(m−k)/m} ≤ e^{1+1/e} ≤ 3.93`.
    ScaleFactor,
    /// Mean-square projection error equals the σ tail.
    EnergyIdentity,
    /// Mean-square error in another norm equals the weighted σ tail.
    CrossNormIdentity,
}

impl CheckId {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::Agmon => "agmon",
            CheckId::AgmonDk => "agmon-dk",
            CheckId::PartsPeriodic => "parts-periodic",
            CheckId::InterpPeriodic => "interp-periodic",
            CheckId::MaxEstPeriodic => "max-est-periodic",
            CheckId::PartsGeneral => "parts-general",
            CheckId::InterpGeneral => "interp-general",
            CheckId::MaxEstGeneral => "max-est-general",
            CheckId::PeriodicFunctionDq => "periodic-function-dq",
            CheckId::PeriodicFunctionMax => "periodic-function-max",
            CheckId::GeneralFunctionDq => "general-function-dq",
            CheckId::GeneralFunctionMax => "general-function-max",
            CheckId::DqDerivative => "dq-derivative",
            CheckId::WeightedDqDerivative => "weighted-dq-derivative",
            CheckId::ScaleFactor => "scale-factor",
            CheckId::EnergyIdentity => "energy-identity",
            CheckId::CrossNormIdentity => "cross-norm-identity",
        }
    }
}

/// Orders and indices a check was evaluated at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Index attaining the left side, for pointwise checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
}

impl CheckParams {
    pub fn m(m: usize) -> Self {
        CheckParams {
            m: Some(m),
            ..Default::default()
        }
    }

    pub fn k(k: usize) -> Self {
        CheckParams {
            k: Some(k),
            ..Default::default()
        }
    }

    pub fn r(r: usize) -> Self {
        CheckParams {
            r: Some(r),
            ..Default::default()
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }
}

/// One evaluated check: both sides, their ratio, and the verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub check: CheckId,
    #[serde(serialize_with = "ser_f64")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub rhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub ratio: f64,
    pub pass: bool,
    pub params: CheckParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl InequalityReport {
    /// `lhs ≤ rhs` up to [`BOUND_REL_TOL`] and [`BOUND_ABS_TOL`].
    pub fn bound(check: CheckId, lhs: f64, rhs: f64, params: CheckParams) -> Self {
        let pass =
            lhs.is_finite() && !rhs.is_nan() && lhs <= rhs * (1.0 + BOUND_REL_TOL) + BOUND_ABS_TOL;
        InequalityReport {
            check,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            pass,
            params,
            note: None,
        }
    }

    /// `lhs = rhs` up to [`IDENTITY_REL_TOL`] (absolute when `rhs = 0`).
    pub fn identity(check: CheckId, lhs: f64, rhs: f64, params: CheckParams) -> Self {
        let gap = (lhs - rhs).abs();
        let pass = if rhs == 0.0 {
            gap <= IDENTITY_ABS_TOL
        } else {
            gap <= IDENTITY_REL_TOL * rhs.abs()
        };
        InequalityReport {
            check,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            pass,
            params,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Relative gap `|lhs − rhs| / |rhs|`, for identity reports.
    pub fn relative_gap(&self) -> f64 {
        if self.rhs == 0.0 {
            (self.lhs - self.rhs).abs()
        } else {
            (self.lhs - self.rhs).abs() / self.rhs.abs()
        }
    }
}

/// `lhs / rhs`, with `0/0 = 0` and `x/0 = ∞` for `x > 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    }
}

/// Serialises non-finite floats as the strings `"inf"`, `"-inf"` or `"nan"`.
pub fn ser_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}
