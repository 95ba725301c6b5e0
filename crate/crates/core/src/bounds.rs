//! Polynomial-space dimensions, cardinality thresholds and integer ratio bounds.
//!
//! Everything here is exact integer arithmetic. Floors of square roots are
//! found by testing integer candidates against the squared inequality, so a
//! boundary case such as `U(36) = 4` can never flip through rounding.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Binomial coefficient with `C(n, k) = 0` for `k < 0` or `k > n`.
pub fn binomial(n: i64, k: i64) -> Result<u128> {
    if k < 0 || (n >= 0 && k > n) {
        return Ok(0);
    }
    if n < 0 {
        return Err(Error::Parameter(format!("binomial C({n}, {k}) with negative n")));
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication
        acc = acc
            .checked_mul(n - i)
            .ok_or_else(|| Error::Overflow(format!("C({n}, {k})")))?
            / (i + 1);
    }
    Ok(acc)
}

fn checked_add(a: u128, b: u128) -> Result<u128> {
    a.checked_add(b)
        .ok_or_else(|| Error::Overflow("sum of binomials".into()))
}

/// The polynomial spaces whose dimensions cap the indicator-matrix rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolySpace {
    /// All polynomials of degree at most `l` on `R^d`.
    PFull,
    /// Polynomials of degree at most `l` restricted to the sphere `S^{d-1}`.
    PSphere,
    /// Degree `l, l-2, l-4, ...` homogeneous parts restricted to the sphere.
    PStarSphere,
    /// Span of `|x|^{2a} x^b` with `a + |b| <= l`.
    WSpace,
}

/// Dimension of the given polynomial space of degree `l` in `d` variables.
pub fn dim_poly_space(kind: PolySpace, d: u64, l: u64) -> Result<u128> {
    if d == 0 {
        return Err(Error::Parameter("dimension d must be at least 1".into()));
    }
    let (d, l) = (d as i64, l as i64);
    match kind {
        PolySpace::PFull => binomial(d + l, l),
        PolySpace::PSphere => checked_add(binomial(d + l - 1, l)?, binomial(d + l - 2, l - 1)?),
        PolySpace::PStarSphere => binomial(d + l - 1, l),
        PolySpace::WSpace => checked_add(binomial(d + l, l)?, binomial(d + l - 1, l - 1)?),
    }
}

/// `U(N) = floor(1/2 + sqrt(N^2 / (2N - 2) + 1/4))`.
///
/// Largest `k` with `(2k - 1)^2 (N - 1) <= 2 N^2 + N - 1`.
pub fn ratio_bound_u(n: u128) -> Result<u64> {
    if n < 2 {
        return Err(Error::Parameter(format!("U(N) needs N >= 2, got {n}")));
    }
    let overflow = || Error::Overflow(format!("U({n})"));
    let rhs = n
        .checked_mul(n)
        .and_then(|v| v.checked_mul(2))
        .and_then(|v| v.checked_add(n - 1))
        .ok_or_else(overflow)?;
    let fits = |k: u128| -> Result<bool> {
        let t = 2 * k - 1;
        Ok(t.checked_mul(t)
            .and_then(|v| v.checked_mul(n - 1))
            .ok_or_else(overflow)?
            <= rhs)
    };
    let estimate = 0.5 + ((n as f64).powi(2) / (2.0 * (n as f64) - 2.0) + 0.25).sqrt();
    let k = floor_by_predicate(estimate, fits)?;
    u64::try_from(k).map_err(|_| overflow())
}

/// `floor(sqrt(2 N^2 / (N + 1)))`: largest `k` with `k^2 (N + 1) <= 2 N^2`.
pub fn antipodal_ratio_bound(n: u128) -> Result<u64> {
    if n < 1 {
        return Err(Error::Parameter("antipodal bound needs N >= 1".into()));
    }
    let overflow = || Error::Overflow(format!("antipodal bound for N = {n}"));
    let rhs = n
        .checked_mul(n)
        .and_then(|v| v.checked_mul(2))
        .ok_or_else(overflow)?;
    let fits = |k: u128| -> Result<bool> {
        Ok(k.checked_mul(k)
            .and_then(|v| v.checked_mul(n + 1))
            .ok_or_else(overflow)?
            <= rhs)
    };
    let nf = n as f64;
    let k = floor_by_predicate((2.0 * nf * nf / (nf + 1.0)).sqrt(), fits)?;
    u64::try_from(k).map_err(|_| overflow())
}

/// Largest integer `k >= 1` with `fits(k)`, starting the search at a float estimate.
/// `fits` must be monotone (true up to the answer, false after) and `fits(1)` true.
fn floor_by_predicate(estimate: f64, fits: impl Fn(u128) -> Result<bool>) -> Result<u128> {
    let mut k = if estimate.is_finite() && estimate >= 1.0 {
        estimate.floor() as u128
    } else {
        1
    };
    while k > 1 && !fits(k)? {
        k -= 1;
    }
    while fits(k + 1)? {
        k += 1;
    }
    Ok(k)
}

/// The absolute cardinality bounds quoted for s-distance sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CardinalityBound {
    /// `C(d + s, s)` for Euclidean s-distance sets.
    EuclideanBbs,
    /// `C(d + s - 1, s) + C(d + s - 2, s - 1)` for spherical sets.
    SphericalDgs,
    /// `2 C(d + s - 2, s - 1)` for antipodal spherical sets.
    AntipodalDgs,
}

pub fn cardinality_bound(kind: CardinalityBound, d: u64, s: u64) -> Result<u128> {
    if d == 0 || s == 0 {
        return Err(Error::Parameter("cardinality bounds need d >= 1 and s >= 1".into()));
    }
    let (d, s) = (d as i64, s as i64);
    match kind {
        CardinalityBound::EuclideanBbs => binomial(d + s, s),
        CardinalityBound::SphericalDgs => {
            checked_add(binomial(d + s - 1, s)?, binomial(d + s - 2, s - 1)?)
        }
        CardinalityBound::AntipodalDgs => binomial(d + s - 2, s - 1)?
            .checked_mul(2)
            .ok_or_else(|| Error::Overflow("antipodal cardinality bound".into())),
    }
}

/// Which integrality theorem a computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Euclidean,
    Spherical,
    AntipodalOddV1,
    AntipodalOddV2,
    AntipodalEvenV1,
    AntipodalEvenV2,
}

impl Setting {
    pub const ALL: [Setting; 6] = [
        Setting::Euclidean,
        Setting::Spherical,
        Setting::AntipodalOddV1,
        Setting::AntipodalOddV2,
        Setting::AntipodalEvenV1,
        Setting::AntipodalEvenV2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Setting::Euclidean => "euclidean",
            Setting::Spherical => "spherical",
            Setting::AntipodalOddV1 => "antipodal_odd_v1",
            Setting::AntipodalOddV2 => "antipodal_odd_v2",
            Setting::AntipodalEvenV1 => "antipodal_even_v1",
            Setting::AntipodalEvenV2 => "antipodal_even_v2",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let name = name.replace('-', "_");
        Setting::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::Parameter(format!("unknown setting `{name}`")))
    }

    pub fn is_antipodal(self) -> bool {
        !matches!(self, Setting::Euclidean | Setting::Spherical)
    }

    /// The `1/beta_i`-prefixed variants, whose off-diagonal pattern is signed.
    pub fn is_signed(self) -> bool {
        matches!(self, Setting::AntipodalOddV2 | Setting::AntipodalEvenV2)
    }

    /// Polynomial space and degree containing the indicator functions.
    pub fn poly_space(self, s: u64) -> (PolySpace, u64) {
        match self {
            Setting::Euclidean => (PolySpace::WSpace, s - 1),
            Setting::Spherical => (PolySpace::PSphere, s - 1),
            Setting::AntipodalOddV1 | Setting::AntipodalEvenV2 => (PolySpace::PStarSphere, s - 3),
            Setting::AntipodalOddV2 | Setting::AntipodalEvenV1 => (PolySpace::PStarSphere, s - 2),
        }
    }

    fn check_s(self, s: u64) -> Result<()> {
        let ok = match self {
            Setting::Euclidean | Setting::Spherical => s >= 2,
            Setting::AntipodalOddV1 | Setting::AntipodalOddV2 => s >= 5 && s % 2 == 1,
            Setting::AntipodalEvenV1 | Setting::AntipodalEvenV2 => s >= 4 && s % 2 == 0,
        };
        if ok {
            Ok(())
        } else {
            let need = match self {
                Setting::Euclidean | Setting::Spherical => "s >= 2",
                Setting::AntipodalOddV1 | Setting::AntipodalOddV2 => "odd s >= 5",
                _ => "even s >= 4",
            };
            Err(Error::Parameter(format!("{} needs {need}, got s = {s}", self.name())))
        }
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Dimension value, cardinality threshold and ratio bound of one theorem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremContext {
    pub setting: Setting,
    pub d: u64,
    pub s: u64,
    /// The dimension value `N`.
    pub n_dim: u128,
    /// Minimum `|X|` for the theorem to apply.
    pub cardinality_threshold: u128,
    /// Integer bound on `|k_i|`.
    pub ratio_bound: u64,
}

pub fn theorem_context(setting: Setting, d: u64, s: u64) -> Result<TheoremContext> {
    if d == 0 {
        return Err(Error::Parameter("dimension d must be at least 1".into()));
    }
    setting.check_s(s)?;
    let (space, degree) = setting.poly_space(s);
    let n_dim = dim_poly_space(space, d, degree)?;
    let overflow = || Error::Overflow(format!("threshold for N = {n_dim}"));
    let (cardinality_threshold, ratio_bound) = if setting.is_signed() {
        (
            n_dim.checked_mul(4).and_then(|v| v.checked_add(2)).ok_or_else(overflow)?,
            antipodal_ratio_bound(n_dim)?,
        )
    } else if setting.is_antipodal() {
        (n_dim.checked_mul(4).ok_or_else(overflow)?, ratio_bound_u(n_dim)?)
    } else {
        (n_dim.checked_mul(2).ok_or_else(overflow)?, ratio_bound_u(n_dim)?)
    };
    Ok(TheoremContext {
        setting,
        d,
        s,
        n_dim,
        cardinality_threshold,
        ratio_bound,
    })
}
