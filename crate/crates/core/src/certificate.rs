//! Indicator matrices and the rank/spectral checks that force integrality.
//!
//! For a fixed distance class `i`, every point `x` carries an interpolating
//! polynomial `F_x` that equals 1 on points at the `i`-th distance from `x`,
//! 0 on the other points, and some constant `k` at `x` itself. The matrix
//! `M = (F_x(y))` therefore splits as `k I + A` with `A` the class adjacency
//! matrix, while its rank is capped by the dimension `N` of the polynomial
//! space the `F_x` live in. A large zero eigenspace then forces `k` to be an
//! integer and bounds it.
//!
//! `F_x` is evaluated directly as a product of scalar factors per pair; the
//! polynomial space only enters through its dimension.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bounds::{dim_poly_space, theorem_context, Setting, TheoremContext};
use crate::linalg;
use crate::pointset::{half_set, PairClasses, PointSet};
use crate::ratios::{
    antipodal_classes, antipodal_even_ratios, antipodal_odd_ratios, euclidean_ratios,
    spherical_ratios, AntipodalClasses, Parity, SettingChoice, Variant, DEFAULT_TOL_INT,
};
use crate::{Error, Result};

/// Relative rank tolerance: singular values above `tol * n * sigma_max` count.
pub const DEFAULT_TOL_RANK: f64 = 1e-8;
/// Relative eigenvalue clustering tolerance (times the largest `|eigenvalue|`).
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;

/// How a pair of points relates to the classes of one theorem.
#[derive(Debug, Clone)]
enum PairData {
    /// Class index per pair (Euclidean and spherical).
    Plain(PairClasses),
    /// `|b|` class per pair plus the sign of the inner product (antipodal).
    Signed { classes: Vec<Option<usize>>, signs: Vec<i8>, n: usize },
}

/// The data one theorem needs to build its indicator matrices.
#[derive(Debug, Clone)]
pub struct ClassStructure {
    pub setting: Setting,
    /// `X`, or the half set `Y_X` for the antipodal settings.
    pub points: PointSet,
    /// `|X|` of the original set.
    pub cardinality: usize,
    /// Number of distinct distances of `X`.
    pub s: usize,
    /// Dimension used for the polynomial spaces (affine for Euclidean, linear otherwise).
    pub dimension: usize,
    /// Squared distances, inner products, or `|inner products|`.
    pub values: Vec<f64>,
    /// Dimension of the polynomial space containing the `F_x`.
    pub n_cap: u128,
    /// Theorem context, when `s` satisfies the theorem's constraints.
    pub context: Option<TheoremContext>,
    pairs: PairData,
}

impl ClassStructure {
    pub fn euclidean(x: &PointSet, tol: f64) -> Result<Self> {
        let profile = x.distance_profile(tol)?;
        let dimension = x.affine_dimension();
        Self::assemble(
            Setting::Euclidean,
            x.clone(),
            x.len(),
            profile.s(),
            dimension,
            profile.squared_distances,
            PairData::Plain(profile.classes),
        )
    }

    pub fn spherical(x: &PointSet, tol: f64) -> Result<Self> {
        let profile = x.inner_product_profile(tol)?;
        let dimension = x.linear_dimension();
        Self::assemble(
            Setting::Spherical,
            x.clone(),
            x.len(),
            profile.s(),
            dimension,
            profile.inner_products,
            PairData::Plain(profile.classes),
        )
    }

    /// Structure on the half set `Y_X` for one of the two antipodal families.
    pub fn antipodal(x: &PointSet, tol: f64, variant: Variant) -> Result<Self> {
        let profile = x.inner_product_profile(tol)?;
        let AntipodalClasses { parity, s, beta_abs } = antipodal_classes(&profile)?;
        let setting = match (parity, variant) {
            (Parity::Odd, Variant::V1) => Setting::AntipodalOddV1,
            (Parity::Odd, Variant::V2) => Setting::AntipodalOddV2,
            (Parity::Even, Variant::V1) => Setting::AntipodalEvenV1,
            (Parity::Even, Variant::V2) => Setting::AntipodalEvenV2,
        };
        let y = half_set(x, tol)?;
        Self::on_half_set(setting, y, x.len(), s, x.linear_dimension(), beta_abs, tol)
    }

    /// Structure on a chosen set of representatives, one per antipodal pair.
    fn on_half_set(
        setting: Setting,
        y: PointSet,
        cardinality: usize,
        s: usize,
        dimension: usize,
        beta_abs: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        let n = y.len();
        let match_tol = 10.0 * tol.max(1e-12);
        let mut classes = vec![None; n * n];
        let mut signs = vec![0i8; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let ip = y.inner_product(i, j);
                let class = beta_abs
                    .iter()
                    .position(|b| (ip.abs() - b).abs() <= match_tol)
                    .ok_or_else(|| {
                        Error::Degenerate(format!(
                            "half-set inner product {ip} matches no class"
                        ))
                    })?;
                classes[i * n + j] = Some(class);
                signs[i * n + j] = if ip < 0.0 { -1 } else { 1 };
            }
        }
        Self::assemble(
            setting,
            y,
            cardinality,
            s,
            dimension,
            beta_abs,
            PairData::Signed { classes, signs, n },
        )
    }

    fn assemble(
        setting: Setting,
        points: PointSet,
        cardinality: usize,
        s: usize,
        dimension: usize,
        values: Vec<f64>,
        pairs: PairData,
    ) -> Result<Self> {
        let context = theorem_context(setting, dimension as u64, s as u64).ok();
        let n_cap = match &context {
            Some(c) => c.n_dim,
            None => {
                let (space, degree) = match setting {
                    Setting::Euclidean | Setting::Spherical => setting.poly_space(s.max(1) as u64),
                    _ => {
                        return Err(Error::Parameter(format!(
                            "{setting} does not apply with s = {s}"
                        )))
                    }
                };
                dim_poly_space(space, dimension.max(1) as u64, degree)?
            }
        };
        Ok(ClassStructure {
            setting,
            points,
            cardinality,
            s,
            dimension,
            values,
            n_cap,
            context,
            pairs,
        })
    }

    /// One-based class indices that carry a ratio in this setting.
    pub fn class_indices(&self) -> Vec<usize> {
        match self.setting {
            Setting::AntipodalEvenV2 => (2..=self.values.len()).collect(),
            _ => (1..=self.values.len()).collect(),
        }
    }

    /// The diagonal constant `k` of class `i` from the ratio formulas.
    pub fn ratio(&self, class: usize) -> Result<f64> {
        let all = match self.setting {
            Setting::Euclidean => euclidean_ratios(&self.values)?,
            Setting::Spherical => spherical_ratios(&self.values)?,
            Setting::AntipodalOddV1 => antipodal_odd_ratios(&self.values, Variant::V1)?,
            Setting::AntipodalOddV2 => antipodal_odd_ratios(&self.values, Variant::V2)?,
            Setting::AntipodalEvenV1 => antipodal_even_ratios(&self.values, Variant::V1)?,
            Setting::AntipodalEvenV2 => {
                let mut v = antipodal_even_ratios(&self.values, Variant::V2)?;
                v.insert(0, f64::NAN);
                v
            }
        };
        Ok(all[class - 1])
    }

    fn check_class(&self, class: usize) -> Result<()> {
        if self.class_indices().contains(&class) {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "class {class} is not valid for {} (valid: {:?})",
                self.setting,
                self.class_indices()
            )))
        }
    }

    /// `F_x(y)` for points `a = x`, `b = y` of `self.points`.
    fn evaluate(&self, class: usize, a: usize, b: usize) -> f64 {
        let i = class - 1;
        let v = &self.values;
        match self.setting {
            Setting::Euclidean => {
                let dist = self.points.squared_distance(a, b);
                (0..v.len())
                    .filter(|&j| j != i)
                    .map(|j| (v[j] - dist) / (v[j] - v[i]))
                    .product()
            }
            Setting::Spherical => {
                let ip = self.points.inner_product(a, b);
                (0..v.len())
                    .filter(|&j| j != i)
                    .map(|j| (ip - v[j]) / (v[i] - v[j]))
                    .product()
            }
            _ => {
                let ip = self.points.inner_product(a, b);
                let from = if self.setting == Setting::AntipodalEvenV2 { 1 } else { 0 };
                let bi2 = v[i] * v[i];
                let product: f64 = (from..v.len())
                    .filter(|&j| j != i)
                    .map(|j| (ip * ip - v[j] * v[j]) / (bi2 - v[j] * v[j]))
                    .product();
                if self.setting.is_signed() {
                    ip / v[i] * product
                } else {
                    product
                }
            }
        }
    }

    /// Off-diagonal pattern `A` of class `i`: 0/1, or 0/+-1 for the signed families.
    pub fn class_pattern(&self, class: usize) -> DMatrix<f64> {
        let n = self.points.len();
        let target = class - 1;
        match &self.pairs {
            PairData::Plain(classes) => classes.adjacency(target),
            PairData::Signed { classes, signs, n: m } => DMatrix::from_fn(n, n, |a, b| {
                if classes[a * m + b] == Some(target) {
                    if self.setting.is_signed() {
                        signs[a * m + b] as f64
                    } else {
                        1.0
                    }
                } else {
                    0.0
                }
            }),
        }
    }
}

/// `M = (F_x(y))` for one class, with its split `M = k I + A`.
#[derive(Debug, Clone)]
pub struct IndicatorMatrix {
    pub setting: Setting,
    /// One-based class index.
    pub class: usize,
    pub k: f64,
    pub m: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub n_cap: u128,
    /// `|X|` of the original set.
    pub cardinality: usize,
}

impl IndicatorMatrix {
    /// `max |M - (k I + A)|`.
    pub fn decomposition_error(&self) -> f64 {
        let n = self.m.nrows();
        let expected = DMatrix::identity(n, n) * self.k + &self.a;
        linalg::max_abs_diff(&self.m, &expected)
    }

    /// `M` equals its transpose entry for entry.
    pub fn is_exactly_symmetric(&self) -> bool {
        self.m == self.m.transpose()
    }
}

pub fn indicator_matrix(structure: &ClassStructure, class: usize) -> Result<IndicatorMatrix> {
    structure.check_class(class)?;
    let k = structure.ratio(class)?;
    let n = structure.points.len();
    let m = DMatrix::from_fn(n, n, |a, b| structure.evaluate(class, a, b));
    Ok(IndicatorMatrix {
        setting: structure.setting,
        class,
        k,
        m,
        a: structure.class_pattern(class),
        n_cap: structure.n_cap,
        cardinality: structure.cardinality,
    })
}

/// Number of singular values above `tol_rank * n * sigma_max`.
pub fn numeric_rank(m: &DMatrix<f64>, tol_rank: f64) -> Result<usize> {
    linalg::rank_with_tolerance(m, tol_rank)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenCluster {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Nonzero clusters, ascending by value.
    pub clusters: Vec<EigenCluster>,
    pub rank: usize,
    pub zero_multiplicity: usize,
}

impl SpectrumReport {
    pub fn max_nonzero_multiplicity(&self) -> usize {
        self.clusters.iter().map(|c| c.multiplicity).max().unwrap_or(0)
    }

    /// Number of eigenvalues within `tol` of `value`.
    pub fn multiplicity_near(&self, value: f64, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|&&e| (e - value).abs() <= tol).count()
    }
}

/// Eigenvalues of a symmetric matrix grouped into multiplicity clusters.
///
/// Eigenvalues with `|e| <= tol_rank * n * max|e|` form the zero cluster;
/// the rest are single-linkage clustered with gap `cluster_tol * max|e|`.
pub fn eigen_multiplicities(m: &DMatrix<f64>, cluster_tol: f64, tol_rank: f64) -> Result<SpectrumReport> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape("eigen_multiplicities needs a square matrix".into()));
    }
    let eigenvalues = linalg::symmetric_eigenvalues(m)?;
    let n = eigenvalues.len();
    let scale = eigenvalues.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let zero_threshold = tol_rank * n as f64 * scale;
    let gap = cluster_tol * scale;
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    let mut last: Option<f64> = None;
    let mut zero_multiplicity = 0;
    for &e in &eigenvalues {
        if e.abs() <= zero_threshold {
            zero_multiplicity += 1;
            continue;
        }
        match (last, clusters.last_mut()) {
            (Some(prev), Some((sum, count))) if e - prev <= gap => {
                *sum += e;
                *count += 1;
            }
            _ => clusters.push((e, 1)),
        }
        last = Some(e);
    }
    Ok(SpectrumReport {
        eigenvalues,
        clusters: clusters
            .into_iter()
            .map(|(sum, multiplicity)| EigenCluster {
                value: sum / multiplicity as f64,
                multiplicity,
            })
            .collect(),
        rank: n - zero_multiplicity,
        zero_multiplicity,
    })
}

/// Checks `e^2 <= (n - 1)(n - m) / m` for a symmetric matrix with zero
/// diagonal and off-diagonal entries in `{0, +-1}` having eigenvalue `e`
/// of multiplicity at least `m`.
pub fn verify_sign_matrix_bound(d: &DMatrix<f64>, e: f64, m: usize) -> Result<bool> {
    let n = d.nrows();
    if d.ncols() != n {
        return Err(Error::Shape("sign matrix must be square".into()));
    }
    if m == 0 || m > n {
        return Err(Error::Parameter(format!("multiplicity {m} outside 1..={n}")));
    }
    const ENTRY_TOL: f64 = 1e-9;
    for a in 0..n {
        for b in 0..n {
            let v = d[(a, b)];
            let ok = if a == b {
                v.abs() <= ENTRY_TOL
            } else {
                (v - d[(b, a)]).abs() <= ENTRY_TOL
                    && [-1.0, 0.0, 1.0].iter().any(|t| (v - t).abs() <= ENTRY_TOL)
            };
            if !ok {
                return Err(Error::Shape(format!("entry ({a}, {b}) = {v} is not allowed")));
            }
        }
    }
    let bound = (n as f64 - 1.0) * (n - m) as f64 / m as f64;
    Ok(e * e <= bound + 1e-9 * bound.max(1.0))
}

#[derive(Debug, Clone, Copy)]
pub struct CertificateOptions {
    pub tol_rank: f64,
    pub cluster_tol: f64,
    pub tol_int: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions {
            tol_rank: DEFAULT_TOL_RANK,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            tol_int: DEFAULT_TOL_INT,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub passed: bool,
    /// False when the check's own precondition does not hold (it then passes vacuously).
    pub applicable: bool,
    pub measured: f64,
    pub required: f64,
}

impl Check {
    fn at_most(measured: f64, required: f64) -> Self {
        Check {
            passed: measured <= required,
            applicable: true,
            measured,
            required,
        }
    }

    fn at_least(measured: f64, required: f64, applicable: bool) -> Self {
        Check {
            passed: !applicable || measured >= required,
            applicable,
            measured,
            required,
        }
    }
}

/// Outcome of the key-lemma checks on one indicator matrix.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateVerdict {
    pub setting: Setting,
    pub class: usize,
    pub n: usize,
    pub n_cap: u128,
    pub k: f64,
    pub hypothesis_met: bool,
    /// Rank of `M` is at most `N`.
    pub rank: Check,
    /// When `n >= 2N`, the zero eigenvalue of `M` has multiplicity at least `N`.
    pub zero_multiplicity: Check,
    /// Distance of `k` from the nearest integer (required: within `tol_int`).
    pub integrality: Check,
    /// `|round(k)|` against the ratio bound.
    pub bound: Check,
    /// Multiplicity of the forced eigenvalue of the sign matrix (see `sign_eigenvalue`).
    pub sign_multiplicity: Check,
    /// The forced eigenvalue: `-(2k - 1)` of `2M - J - (2k-1)I`, or `-k` of `A`
    /// for the signed families.
    pub sign_eigenvalue: f64,
    /// `e^2 <= (n-1)(n-m)/m` for that eigenvalue; `None` when the matrix
    /// is not a 0/+-1 matrix (the decomposition `M = kI + A` failed).
    pub sign_bound_holds: Option<bool>,
    /// Zero multiplicity exceeds every nonzero multiplicity.
    pub integer_lemma_hypothesis: bool,
    pub spectrum_clusters: Vec<EigenCluster>,
}

impl CertificateVerdict {
    /// A check that must hold here failed: the rank cap and sign-matrix
    /// facts always; the integrality conclusions when the hypothesis is met.
    pub fn violated(&self) -> bool {
        let unconditional =
            self.rank.passed && self.sign_multiplicity.passed && self.sign_bound_holds != Some(false);
        let conditional = self.zero_multiplicity.passed && self.integrality.passed && self.bound.passed;
        !unconditional || (self.hypothesis_met && !conditional)
    }

    pub fn all_passed(&self) -> bool {
        self.rank.passed
            && self.zero_multiplicity.passed
            && self.integrality.passed
            && self.bound.passed
            && self.sign_multiplicity.passed
            && self.sign_bound_holds == Some(true)
    }
}

pub fn verify_key_lemma(
    im: &IndicatorMatrix,
    context: &TheoremContext,
    opts: &CertificateOptions,
) -> Result<CertificateVerdict> {
    let n = im.m.nrows();
    let cap = im.n_cap as f64;
    let spectrum = eigen_multiplicities(&im.m, opts.cluster_tol, opts.tol_rank)?;

    let rank = Check::at_most(spectrum.rank as f64, cap);
    let zero_multiplicity =
        Check::at_least(spectrum.zero_multiplicity as f64, cap, n as f64 >= 2.0 * cap);
    let nearest = im.k.round();
    let integrality = Check::at_most((im.k - nearest).abs(), opts.tol_int);
    let bound = Check::at_most(nearest.abs(), context.ratio_bound as f64);

    let (sign_matrix, sign_eigenvalue, required) = if im.setting.is_signed() {
        (im.a.clone(), -im.k, n as f64 - cap)
    } else {
        let j = DMatrix::from_element(n, n, 1.0);
        let i = DMatrix::identity(n, n);
        let d = &im.m * 2.0 - j - i * (2.0 * im.k - 1.0);
        (d, -(2.0 * im.k - 1.0), n as f64 - cap - 1.0)
    };
    let sign_spectrum = eigen_multiplicities(&sign_matrix, opts.cluster_tol, opts.tol_rank)?;
    let scale = sign_spectrum.eigenvalues.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let near = (opts.cluster_tol * scale).max(1e-9);
    let measured = sign_spectrum.multiplicity_near(sign_eigenvalue, near);
    let sign_multiplicity = Check::at_least(measured as f64, required, required > 0.0);
    let sign_bound_holds = if measured >= 1 {
        match verify_sign_matrix_bound(&sign_matrix, sign_eigenvalue, measured) {
            Ok(holds) => Some(holds),
            Err(Error::Shape(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        Some(true)
    };

    Ok(CertificateVerdict {
        setting: im.setting,
        class: im.class,
        n,
        n_cap: im.n_cap,
        k: im.k,
        hypothesis_met: im.cardinality as u128 >= context.cardinality_threshold,
        rank,
        zero_multiplicity,
        integrality,
        bound,
        sign_multiplicity,
        sign_eigenvalue,
        sign_bound_holds,
        integer_lemma_hypothesis: spectrum.zero_multiplicity > spectrum.max_nonzero_multiplicity(),
        spectrum_clusters: spectrum.clusters,
    })
}

/// Per-class certificate as written by the `certify` command.
#[derive(Debug, Clone, Serialize)]
pub struct ClassCertificate {
    pub setting: Setting,
    pub class: usize,
    pub decomposition_error: f64,
    pub symmetric: bool,
    pub numeric_rank: usize,
    pub n_cap: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<CertificateVerdict>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certification {
    pub n: usize,
    pub certificates: Vec<ClassCertificate>,
}

impl Certification {
    pub fn violated(&self) -> bool {
        self.certificates.iter().any(|c| {
            c.numeric_rank as u128 > c.n_cap
                || c.verdict.as_ref().is_some_and(CertificateVerdict::violated)
        })
    }
}

/// The class structures `certify` should inspect for a setting choice.
pub fn structures_for(x: &PointSet, choice: SettingChoice, all: bool, tol: f64) -> Result<Vec<ClassStructure>> {
    let spherical = x.is_spherical(tol.max(1e-12));
    let antipodal = spherical
        && x
            .inner_product_profile(tol)
            .ok()
            .and_then(|p| antipodal_classes(&p).ok())
            .is_some_and(|c| match c.parity {
                Parity::Odd => c.s >= 5,
                Parity::Even => c.s >= 4,
            });
    let families: Vec<SettingChoice> = match choice {
        SettingChoice::Auto if all => {
            let mut f = vec![SettingChoice::Euclidean];
            if spherical {
                f.push(SettingChoice::Spherical);
            }
            if antipodal {
                f.push(SettingChoice::Antipodal);
            }
            f
        }
        SettingChoice::Auto => vec![if antipodal {
            SettingChoice::Antipodal
        } else if spherical {
            SettingChoice::Spherical
        } else {
            SettingChoice::Euclidean
        }],
        other => vec![other],
    };
    let mut out = Vec::new();
    for family in families {
        match family {
            SettingChoice::Euclidean => out.push(ClassStructure::euclidean(x, tol)?),
            SettingChoice::Spherical => out.push(ClassStructure::spherical(x, tol)?),
            SettingChoice::Antipodal => {
                if !antipodal {
                    return Err(Error::Parameter(
                        "no antipodal theorem applies (needs an antipodal set with s >= 4)".into(),
                    ));
                }
                out.push(ClassStructure::antipodal(x, tol, Variant::V1)?);
                out.push(ClassStructure::antipodal(x, tol, Variant::V2)?);
            }
            SettingChoice::Auto => unreachable!("auto is expanded above"),
        }
    }
    Ok(out)
}

/// Build and check the indicator matrix of every requested class.
pub fn certify(
    x: &PointSet,
    choice: SettingChoice,
    all: bool,
    class: Option<usize>,
    tol_group: f64,
    opts: &CertificateOptions,
) -> Result<Certification> {
    let mut certificates = Vec::new();
    for structure in structures_for(x, choice, all, tol_group)? {
        let classes = match class {
            Some(c) => vec![c],
            None => structure.class_indices(),
        };
        for c in classes {
            let im = indicator_matrix(&structure, c)?;
            let verdict = match &structure.context {
                Some(ctx) => Some(verify_key_lemma(&im, ctx, opts)?),
                None => None,
            };
            certificates.push(ClassCertificate {
                setting: structure.setting,
                class: c,
                decomposition_error: im.decomposition_error(),
                symmetric: im.is_exactly_symmetric(),
                numeric_rank: numeric_rank(&im.m, opts.tol_rank)?,
                n_cap: im.n_cap,
                verdict,
            });
        }
    }
    Ok(Certification {
        n: x.len(),
        certificates,
    })
}
