//! The ratio families of the integrality theorems and the per-set report.
//!
//! For squared distances `a_1 < ... < a_s` the Euclidean ratios are
//! `k_i = prod_{j != i} a_j / (a_j - a_i)`; the spherical and antipodal
//! families replace the factors by their inner-product analogues. Once a
//! set clears the cardinality threshold of its theorem, every ratio is an
//! integer bounded by the context's `ratio_bound`.

use num_rational::Ratio;
use serde::Serialize;

use crate::bounds::{binomial, theorem_context, Setting, TheoremContext};
use crate::pointset::{InnerProductProfile, PointSet, DEFAULT_GROUPING_TOL};
use crate::{Error, Result};

/// Default absolute tolerance for deciding that a ratio is an integer.
pub const DEFAULT_TOL_INT: f64 = 1e-6;

const COINCIDENT_REL: f64 = 1e-12;
const COINCIDENT_ABS: f64 = 1e-12;

/// Which of the two antipodal ratio families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Products of `(1 - b_j^2) / (b_i^2 - b_j^2)`.
    V1,
    /// The same products (over the nonzero classes) times `1 / b_i`.
    V2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

fn check_strictly_increasing(values: &[f64], what: &str, coincident: impl Fn(f64, f64) -> bool) -> Result<()> {
    for w in values.windows(2) {
        if coincident(w[0], w[1]) {
            return Err(Error::Degenerate(format!("{what} {} and {} coincide", w[0], w[1])));
        }
        if w[1] < w[0] {
            return Err(Error::Parameter(format!("{what} must be strictly increasing")));
        }
    }
    Ok(())
}

/// `k_i = prod_{j != i} a_j / (a_j - a_i)` for ascending positive squared distances.
pub fn euclidean_ratios(squared_distances: &[f64]) -> Result<Vec<f64>> {
    if let Some(&a) = squared_distances.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::Domain(format!("squared distance {a} is not positive")));
    }
    check_strictly_increasing(squared_distances, "squared distances", |a, b| {
        (b - a).abs() <= COINCIDENT_REL * a.abs().max(b.abs())
    })?;
    let a = squared_distances;
    Ok((0..a.len())
        .map(|i| {
            (0..a.len())
                .filter(|&j| j != i)
                .map(|j| a[j] / (a[j] - a[i]))
                .product()
        })
        .collect())
}

/// `k_i = prod_{j != i} (1 - b_j) / (b_i - b_j)` for ascending inner products below 1.
pub fn spherical_ratios(inner_products: &[f64]) -> Result<Vec<f64>> {
    if let Some(&b) = inner_products.iter().find(|&&b| !(b < 1.0 && b >= -1.0)) {
        return Err(Error::Domain(format!("inner product {b} outside [-1, 1)")));
    }
    check_strictly_increasing(inner_products, "inner products", |a, b| {
        (b - a).abs() <= COINCIDENT_ABS
    })?;
    let b = inner_products;
    Ok((0..b.len())
        .map(|i| {
            (0..b.len())
                .filter(|&j| j != i)
                .map(|j| (1.0 - b[j]) / (b[i] - b[j]))
                .product()
        })
        .collect())
}

fn squared_product(beta: &[f64], i: usize, from: usize) -> f64 {
    let bi2 = beta[i] * beta[i];
    (from..beta.len())
        .filter(|&j| j != i)
        .map(|j| {
            let bj2 = beta[j] * beta[j];
            (1.0 - bj2) / (bi2 - bj2)
        })
        .product()
}

fn check_beta_abs(beta_abs: &[f64], allow_leading_zero: bool) -> Result<()> {
    for (idx, &b) in beta_abs.iter().enumerate() {
        let zero_ok = allow_leading_zero && idx == 0 && b == 0.0;
        if !(zero_ok || (b > 0.0 && b < 1.0)) {
            return Err(Error::Domain(format!("|inner product| {b} outside (0, 1)")));
        }
    }
    check_strictly_increasing(beta_abs, "|inner products|", |a, b| {
        (b * b - a * a).abs() <= COINCIDENT_ABS
    })
}

/// Odd antipodal family over `0 < b_1 < ... < b_L < 1`; `V2` divides by `b_i`.
pub fn antipodal_odd_ratios(beta_abs: &[f64], variant: Variant) -> Result<Vec<f64>> {
    check_beta_abs(beta_abs, false)?;
    Ok((0..beta_abs.len())
        .map(|i| {
            let p = squared_product(beta_abs, i, 0);
            match variant {
                Variant::V1 => p,
                Variant::V2 => p / beta_abs[i],
            }
        })
        .collect())
}

/// Even antipodal family over `b_1 = 0 < b_2 < ... < b_L < 1`.
///
/// `V1` returns `k_1..k_L`; `V2` skips the zero class and returns `k_2..k_L`.
pub fn antipodal_even_ratios(beta_abs: &[f64], variant: Variant) -> Result<Vec<f64>> {
    match beta_abs.first() {
        Some(&b) if b == 0.0 => {}
        _ => {
            return Err(Error::Parameter(
                "even antipodal ratios need the zero class first".into(),
            ))
        }
    }
    check_beta_abs(beta_abs, true)?;
    Ok(match variant {
        Variant::V1 => (0..beta_abs.len())
            .map(|i| squared_product(beta_abs, i, 0))
            .collect(),
        Variant::V2 => (1..beta_abs.len())
            .map(|i| squared_product(beta_abs, i, 1) / beta_abs[i])
            .collect(),
    })
}

fn round_integral(values: &[f64], tol_int: f64) -> Result<Vec<i64>> {
    values
        .iter()
        .enumerate()
        .map(|(index, &v)| {
            let r = v.round();
            if (v - r).abs() <= tol_int && r.abs() < i64::MAX as f64 {
                Ok(r as i64)
            } else {
                Err(Error::NonInteger { index, value: v })
            }
        })
        .collect()
}

/// Recover the absolute inner products as exact rationals from the two
/// integral ratio families.
///
/// Odd: `b_i = k1_i / k2_i` for `i = 1..L`. Even: `v1` has `L` entries
/// (`i = 1..L`) and `v2` has `L - 1` (`i = 2..L`); `b_i = k2_i / k1_i` for
/// `i = 2..L`.
pub fn rational_inner_products(
    v1: &[f64],
    v2: &[f64],
    parity: Parity,
    tol_int: f64,
) -> Result<Vec<Ratio<i64>>> {
    let k1 = round_integral(v1, tol_int)?;
    let k2 = round_integral(v2, tol_int)?;
    // Either family is the other times a power of b_i, so a zero in one
    // is a zero divisor for the quotient in one direction or the other.
    if k1.iter().chain(&k2).any(|&k| k == 0) {
        return Err(Error::ZeroDivision("ratio families contain a zero".into()));
    }
    let pairs: Vec<(i64, i64)> = match parity {
        Parity::Odd => {
            if k1.len() != k2.len() {
                return Err(Error::SizeMismatch(format!(
                    "odd families need equal lengths, got {} and {}",
                    k1.len(),
                    k2.len()
                )));
            }
            k1.iter().zip(&k2).map(|(&a, &b)| (a, b)).collect()
        }
        Parity::Even => {
            if k1.len() != k2.len() + 1 {
                return Err(Error::SizeMismatch(format!(
                    "even families need len(v1) = len(v2) + 1, got {} and {}",
                    k1.len(),
                    k2.len()
                )));
            }
            k2.iter().zip(&k1[1..]).map(|(&a, &b)| (a, b)).collect()
        }
    };
    pairs
        .into_iter()
        .map(|(num, den)| {
            if den == 0 {
                Err(Error::ZeroDivision(format!("{num} / 0")))
            } else {
                Ok(Ratio::new(num, den))
            }
        })
        .collect()
}

/// Ratio values of one theorem applied to one point set.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub setting: Setting,
    pub context: TheoremContext,
    /// `|X|` of the analysed set.
    pub cardinality: usize,
    /// The distance data fed to the ratio formula (`a_i`, `b_i` or `|b_i|`).
    pub values: Vec<f64>,
    /// One-based theorem index of each ratio.
    pub indices: Vec<usize>,
    pub k_values: Vec<f64>,
    pub integrality: Vec<bool>,
    pub rounded_k: Vec<Option<i64>>,
    /// `|round(k)| <= ratio_bound`, for integral entries.
    pub within_bound: Vec<Option<bool>>,
    pub hypothesis_met: bool,
    pub tol_int: f64,
    /// Sum of all ratios (Euclidean and spherical families only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_sum: Option<f64>,
}

impl RatioReport {
    fn new(
        context: TheoremContext,
        cardinality: usize,
        values: Vec<f64>,
        indices: Vec<usize>,
        k_values: Vec<f64>,
        tol_int: f64,
    ) -> Self {
        let rounded_k: Vec<Option<i64>> = k_values
            .iter()
            .map(|&k| ((k - k.round()).abs() <= tol_int).then(|| k.round() as i64))
            .collect();
        let integrality = rounded_k.iter().map(Option::is_some).collect();
        let within_bound = rounded_k
            .iter()
            .map(|r| r.map(|k| k.unsigned_abs() <= context.ratio_bound))
            .collect();
        let k_sum = matches!(context.setting, Setting::Euclidean | Setting::Spherical)
            .then(|| k_values.iter().sum());
        RatioReport {
            setting: context.setting,
            hypothesis_met: cardinality as u128 >= context.cardinality_threshold,
            context,
            cardinality,
            values,
            indices,
            k_values,
            integrality,
            rounded_k,
            within_bound,
            tol_int,
            k_sum,
        }
    }

    pub fn all_integral(&self) -> bool {
        self.integrality.iter().all(|&b| b)
    }

    pub fn all_within_bound(&self) -> bool {
        self.within_bound.iter().all(|b| *b == Some(true))
    }

    /// The hypothesis holds but a conclusion fails.
    pub fn theorem_violated(&self) -> bool {
        self.hypothesis_met && !(self.all_integral() && self.all_within_bound())
    }
}

/// Which theorem family `analyze` should apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SettingChoice {
    /// The most specific applicable family (antipodal, then spherical, then Euclidean).
    #[default]
    Auto,
    Euclidean,
    Spherical,
    Antipodal,
}

impl SettingChoice {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "auto" => Ok(SettingChoice::Auto),
            "euclidean" => Ok(SettingChoice::Euclidean),
            "spherical" => Ok(SettingChoice::Spherical),
            "antipodal" => Ok(SettingChoice::Antipodal),
            other => Err(Error::Parameter(format!("unknown setting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AnalyzeOptions {
    pub setting: SettingChoice,
    pub all: bool,
    pub tol_group: f64,
    pub tol_int: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            setting: SettingChoice::Auto,
            all: false,
            tol_group: DEFAULT_GROUPING_TOL,
            tol_int: DEFAULT_TOL_INT,
        }
    }
}

/// A rational inner product recovered from the two antipodal families.
#[derive(Debug, Clone, Serialize)]
pub struct RationalValue {
    pub index: usize,
    pub numerator: i64,
    pub denominator: i64,
    pub value: f64,
    /// The measured `|b_i|` it should reproduce.
    pub measured: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RationalReport {
    /// `4 C(d + s - 3, s - 2) + 2`.
    pub threshold: u128,
    pub hypothesis_met: bool,
    /// Empty when some ratio was not integral.
    pub values: Vec<RationalValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Result of [`analyze`]: one report per applied theorem.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub n: usize,
    pub reports: Vec<RatioReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rational_inner_products: Option<RationalReport>,
}

impl Analysis {
    pub fn theorem_violated(&self) -> bool {
        self.reports.iter().any(RatioReport::theorem_violated)
            || self
                .rational_inner_products
                .as_ref()
                .is_some_and(|r| r.hypothesis_met && r.failure.is_some())
    }

    pub fn report(&self, setting: Setting) -> Option<&RatioReport> {
        self.reports.iter().find(|r| r.setting == setting)
    }
}

/// The `|b|` classes of an antipodal set with the parity of `s = |B(X)|`.
#[derive(Debug, Clone)]
pub struct AntipodalClasses {
    pub parity: Parity,
    pub s: usize,
    /// `|b_1| < ... < |b_L|`, with `b_1 = 0` in the even case.
    pub beta_abs: Vec<f64>,
}

/// Split `B(X) \ {-1}` into `+-b` classes; errors unless the values are symmetric.
pub fn antipodal_classes(profile: &InnerProductProfile) -> Result<AntipodalClasses> {
    if !(profile.antipodal && profile.contains_minus_one) {
        return Err(Error::NotAntipodal);
    }
    let tol = profile.tol.max(1e-12);
    let rest = &profile.inner_products[1..];
    let negatives: Vec<f64> = rest.iter().copied().filter(|&b| b < -tol).collect();
    let positives: Vec<f64> = rest.iter().copied().filter(|&b| b > tol).collect();
    let has_zero = rest.iter().any(|b| b.abs() <= tol);
    let symmetric = negatives.len() == positives.len()
        && negatives
            .iter()
            .rev()
            .zip(&positives)
            .all(|(n, p)| (n + p).abs() <= 10.0 * tol);
    if !symmetric {
        return Err(Error::Degenerate(
            "inner products of an antipodal set are not symmetric".into(),
        ));
    }
    let (parity, beta_abs) = if has_zero {
        (Parity::Even, std::iter::once(0.0).chain(positives).collect())
    } else {
        (Parity::Odd, positives)
    };
    Ok(AntipodalClasses {
        parity,
        s: profile.s(),
        beta_abs,
    })
}

fn euclidean_report(x: &PointSet, opts: &AnalyzeOptions) -> Result<RatioReport> {
    let profile = x.distance_profile(opts.tol_group)?;
    let context = theorem_context(
        Setting::Euclidean,
        x.affine_dimension() as u64,
        profile.s() as u64,
    )?;
    let k = euclidean_ratios(&profile.squared_distances)?;
    let indices = (1..=k.len()).collect();
    Ok(RatioReport::new(context, x.len(), profile.squared_distances, indices, k, opts.tol_int))
}

fn spherical_report(x: &PointSet, profile: &InnerProductProfile, opts: &AnalyzeOptions) -> Result<RatioReport> {
    let context = theorem_context(
        Setting::Spherical,
        x.linear_dimension() as u64,
        profile.s() as u64,
    )?;
    let k = spherical_ratios(&profile.inner_products)?;
    let indices = (1..=k.len()).collect();
    Ok(RatioReport::new(
        context,
        x.len(),
        profile.inner_products.clone(),
        indices,
        k,
        opts.tol_int,
    ))
}

fn antipodal_reports(
    x: &PointSet,
    classes: &AntipodalClasses,
    opts: &AnalyzeOptions,
) -> Result<(RatioReport, RatioReport)> {
    let d = x.linear_dimension() as u64;
    let s = classes.s as u64;
    let beta = &classes.beta_abs;
    let (s1, s2, k1, k2, idx2): (_, _, _, _, Vec<usize>) = match classes.parity {
        Parity::Odd => (
            Setting::AntipodalOddV1,
            Setting::AntipodalOddV2,
            antipodal_odd_ratios(beta, Variant::V1)?,
            antipodal_odd_ratios(beta, Variant::V2)?,
            (1..=beta.len()).collect(),
        ),
        Parity::Even => (
            Setting::AntipodalEvenV1,
            Setting::AntipodalEvenV2,
            antipodal_even_ratios(beta, Variant::V1)?,
            antipodal_even_ratios(beta, Variant::V2)?,
            (2..=beta.len()).collect(),
        ),
    };
    let v1 = RatioReport::new(
        theorem_context(s1, d, s)?,
        x.len(),
        beta.clone(),
        (1..=beta.len()).collect(),
        k1,
        opts.tol_int,
    );
    let v2 = RatioReport::new(theorem_context(s2, d, s)?, x.len(), beta.clone(), idx2, k2, opts.tol_int);
    Ok((v1, v2))
}

fn rational_report(
    x: &PointSet,
    classes: &AntipodalClasses,
    v1: &RatioReport,
    v2: &RatioReport,
    tol_int: f64,
) -> Result<RationalReport> {
    let d = x.linear_dimension() as i64;
    let s = classes.s as i64;
    let threshold = binomial(d + s - 3, s - 2)?
        .checked_mul(4)
        .and_then(|v| v.checked_add(2))
        .ok_or_else(|| Error::Overflow("rationality threshold".into()))?;
    let (values, failure) =
        match rational_inner_products(&v1.k_values, &v2.k_values, classes.parity, tol_int) {
            Ok(ratios) => (
                ratios
                    .iter()
                    .zip(&v2.indices)
                    .map(|(r, &index)| RationalValue {
                        index,
                        numerator: *r.numer(),
                        denominator: *r.denom(),
                        value: *r.numer() as f64 / *r.denom() as f64,
                        measured: classes.beta_abs[index - 1],
                    })
                    .collect(),
                None,
            ),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
    Ok(RationalReport {
        threshold,
        hypothesis_met: x.len() as u128 >= threshold,
        values,
        failure,
    })
}

/// Detect the applicable theorem families of `x` and compute their ratio reports.
pub fn analyze(x: &PointSet, opts: &AnalyzeOptions) -> Result<Analysis> {
    let tol = opts.tol_group;
    let spherical = x.is_spherical(tol.max(1e-12));
    let ip = if spherical {
        Some(x.inner_product_profile(tol)?)
    } else {
        None
    };
    let antipodal = ip.as_ref().and_then(|p| antipodal_classes(p).ok()).filter(|c| match c.parity {
        Parity::Odd => c.s >= 5,
        Parity::Even => c.s >= 4,
    });

    let want = |family: SettingChoice| -> bool {
        match opts.setting {
            SettingChoice::Auto if opts.all => match family {
                SettingChoice::Spherical => spherical,
                SettingChoice::Antipodal => antipodal.is_some(),
                _ => true,
            },
            SettingChoice::Auto => {
                let most_specific = if antipodal.is_some() {
                    SettingChoice::Antipodal
                } else if spherical {
                    SettingChoice::Spherical
                } else {
                    SettingChoice::Euclidean
                };
                family == most_specific
            }
            chosen => chosen == family,
        }
    };

    let mut reports = Vec::new();
    let mut rational = None;
    if want(SettingChoice::Euclidean) {
        reports.push(euclidean_report(x, opts)?);
    }
    if want(SettingChoice::Spherical) {
        let profile = ip.as_ref().ok_or_else(|| {
            let (index, norm) = (0..x.len())
                .map(|i| (i, x.inner_product(i, i).sqrt()))
                .find(|(_, r)| (r - 1.0).abs() > tol.max(1e-12))
                .unwrap_or((0, f64::NAN));
            Error::NotOnSphere { index, norm }
        })?;
        reports.push(spherical_report(x, profile, opts)?);
    }
    if want(SettingChoice::Antipodal) {
        let classes = antipodal.as_ref().ok_or_else(|| {
            Error::Parameter(
                "no antipodal theorem applies (needs an antipodal set with s >= 4)".into(),
            )
        })?;
        let (v1, v2) = antipodal_reports(x, classes, opts)?;
        rational = Some(rational_report(x, classes, &v1, &v2, opts.tol_int)?);
        reports.push(v1);
        reports.push(v2);
    }
    Ok(Analysis {
        n: x.len(),
        reports,
        rational_inner_products: rational,
    })
}
