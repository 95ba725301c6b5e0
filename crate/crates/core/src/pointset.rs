//! Finite point sets, their distance and inner-product profiles, antipodal
//! structure, and the named constructions used as fixtures.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// Default relative tolerance for grouping pair values into classes.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-9;

/// Relative distance below which two points count as the same point.
const DUPLICATE_TOL: f64 = 1e-9;

/// Relative tolerance used for the numeric rank of coordinate matrices.
const COORDINATE_RANK_TOL: f64 = 1e-10;

const NO_CLASS: u32 = u32::MAX;

/// `n >= 2` distinct points in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dimension: usize,
    points: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct PointFile {
    dimension: usize,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

/// Input format for [`load_points`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFormat {
    Json,
    Csv,
}

impl PointFormat {
    /// Guess the format from a file extension; anything but `.csv` is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => PointFormat::Csv,
            _ => PointFormat::Json,
        }
    }
}

/// Load a point set from a file, choosing the format by extension.
pub fn load_points(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_points(file, PointFormat::from_path(path))
}

/// Read a point set from a byte stream in the given format.
pub fn read_points(mut source: impl Read, format: PointFormat) -> Result<PointSet> {
    match format {
        PointFormat::Json => {
            let mut text = String::new();
            source.read_to_string(&mut text)?;
            PointSet::from_json_str(&text)
        }
        PointFormat::Csv => PointSet::from_csv_reader(source),
    }
}

impl PointSet {
    /// Build a point set, checking equal row lengths, `n >= 2`, and distinctness.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dimension = points.first().map(Vec::len).unwrap_or(0);
        Self::with_dimension(dimension, points)
    }

    fn with_dimension(dimension: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if dimension == 0 {
            return Err(Error::Parameter("points need at least one coordinate".into()));
        }
        for (index, p) in points.iter().enumerate() {
            if p.len() != dimension {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: dimension,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse(format!("point {index} has a non-finite coordinate")));
            }
        }
        let set = PointSet {
            dimension,
            points,
            labels: None,
        };
        set.check_distinct()?;
        Ok(set)
    }

    /// Attach one label per point.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::SizeMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                self.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    fn check_distinct(&self) -> Result<()> {
        let scale = self
            .points
            .iter()
            .map(|p| norm(p))
            .fold(1.0_f64, f64::max);
        let threshold = (DUPLICATE_TOL * scale).powi(2);
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                if self.squared_distance(i, j) <= threshold {
                    return Err(Error::DuplicatePoint { first: i, second: j });
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: PointFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let set = Self::with_dimension(file.dimension, file.points)?;
        match file.labels {
            Some(labels) => set.with_labels(labels),
            None => Ok(set),
        }
    }

    /// One point per row, comma separated, no header.
    pub fn from_csv_reader(source: impl Read) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        let mut points = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let point = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|e| {
                        Error::Parse(format!("row {row}: cannot parse `{field}`: {e}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            points.push(point);
        }
        Self::new(points)
    }

    pub fn to_json_string(&self) -> String {
        let file = PointFile {
            dimension: self.dimension,
            points: self.points.clone(),
            labels: self.labels.clone(),
        };
        serde_json::to_string(&file).expect("point sets always serialize")
    }

    /// Number of coordinates per point.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        squared_distance(&self.points[i], &self.points[j])
    }

    pub fn inner_product(&self, i: usize, j: usize) -> f64 {
        dot(&self.points[i], &self.points[j])
    }

    /// The full `n x n` matrix of squared distances.
    pub fn squared_distance_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { self.squared_distance(i, j) })
    }

    pub fn gram_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.inner_product(i, j))
    }

    /// Dimension of the affine hull (numeric rank of the centered coordinates).
    pub fn affine_dimension(&self) -> usize {
        let n = self.len();
        let mut centroid = vec![0.0; self.dimension];
        for p in &self.points {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let m = DMatrix::from_fn(n, self.dimension, |i, k| self.points[i][k] - centroid[k]);
        linalg::rank_with_tolerance(&m, COORDINATE_RANK_TOL).unwrap_or(self.dimension)
    }

    /// Dimension of the linear span of the points.
    pub fn linear_dimension(&self) -> usize {
        let m = DMatrix::from_fn(self.len(), self.dimension, |i, k| self.points[i][k]);
        linalg::rank_with_tolerance(&m, COORDINATE_RANK_TOL).unwrap_or(self.dimension)
    }

    /// True when every point has unit norm within `tol`.
    pub fn is_spherical(&self, tol: f64) -> bool {
        self.first_off_sphere(tol).is_none()
    }

    fn first_off_sphere(&self, tol: f64) -> Option<(usize, f64)> {
        self.points
            .iter()
            .map(|p| norm(p))
            .enumerate()
            .find(|(_, r)| (r - 1.0).abs() > tol)
    }

    /// Apply `x -> Q x + b`.
    pub fn transformed(&self, q: &DMatrix<f64>, shift: &[f64]) -> Result<Self> {
        if q.ncols() != self.dimension || shift.len() != q.nrows() {
            return Err(Error::SizeMismatch("transform does not match the dimension".into()));
        }
        let points = self
            .points
            .iter()
            .map(|p| {
                (0..q.nrows())
                    .map(|r| (0..q.ncols()).map(|c| q[(r, c)] * p[c]).sum::<f64>() + shift[r])
                    .collect()
            })
            .collect();
        Self::new(points)
    }

    /// Reorder points: the new `i`-th point is the old `order[i]`-th.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len() || order.iter().any(|&i| i >= self.len() || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::Parameter("not a permutation of the point indices".into()));
        }
        Ok(PointSet {
            dimension: self.dimension,
            points: order.iter().map(|&i| self.points[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| order.iter().map(|&i| l[i].clone()).collect()),
        })
    }

    pub fn distance_profile(&self, tol: f64) -> Result<DistanceProfile> {
        distance_profile(self, tol)
    }

    pub fn inner_product_profile(&self, tol: f64) -> Result<InnerProductProfile> {
        inner_product_profile(self, tol)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// How gaps between sorted values are measured when grouping.
#[derive(Debug, Clone, Copy)]
pub(crate) enum GapScale {
    Relative,
    Absolute,
}

pub(crate) struct Grouping {
    pub representatives: Vec<f64>,
    pub assignment: Vec<usize>,
}

/// Single-linkage grouping of values: consecutive sorted values join a class
/// when their gap is at most `tol`; a gap strictly between `tol` and `10 tol`
/// (or a chained class wider than `10 tol`) is reported as ambiguous.
pub(crate) fn group_values(values: &[f64], tol: f64, scale: GapScale) -> Result<Grouping> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let normalized = |lo: f64, hi: f64| -> f64 {
        let gap = hi - lo;
        match scale {
            GapScale::Absolute => gap,
            GapScale::Relative => {
                let denom = lo.abs().max(hi.abs());
                if denom == 0.0 {
                    0.0
                } else {
                    gap / denom
                }
            }
        }
    };

    let mut assignment = vec![0usize; values.len()];
    let mut representatives = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    let close_class = |members: &mut Vec<f64>, reps: &mut Vec<f64>| -> Result<()> {
        let lo = members[0];
        let hi = *members.last().unwrap();
        let spread = normalized(lo, hi);
        if spread > 10.0 * tol {
            return Err(Error::AmbiguousGrouping {
                value: lo,
                gap: spread,
                tol,
            });
        }
        reps.push(members.iter().sum::<f64>() / members.len() as f64);
        members.clear();
        Ok(())
    };

    for (pos, &idx) in order.iter().enumerate() {
        let v = values[idx];
        if pos > 0 {
            let prev = values[order[pos - 1]];
            let gap = normalized(prev, v);
            if gap > tol {
                if gap < 10.0 * tol {
                    return Err(Error::AmbiguousGrouping { value: v, gap, tol });
                }
                close_class(&mut members, &mut representatives)?;
            }
        }
        members.push(v);
        assignment[idx] = representatives.len();
    }
    if !members.is_empty() {
        close_class(&mut members, &mut representatives)?;
    }
    Ok(Grouping {
        representatives,
        assignment,
    })
}

/// Symmetric `n x n` table assigning each unordered pair to a value class.
#[derive(Debug, Clone, PartialEq)]
pub struct PairClasses {
    n: usize,
    class: Vec<u32>,
}

impl PairClasses {
    fn from_pairs(n: usize, assignment: &[usize]) -> Self {
        let mut class = vec![NO_CLASS; n * n];
        let mut next = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let c = assignment[next] as u32;
                class[i * n + j] = c;
                class[j * n + i] = c;
                next += 1;
            }
        }
        PairClasses { n, class }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Zero-based class of the pair `(i, j)`; `None` on the diagonal.
    pub fn class(&self, i: usize, j: usize) -> Option<usize> {
        match self.class[i * self.n + j] {
            NO_CLASS => None,
            c => Some(c as usize),
        }
    }

    /// The 0/1 adjacency matrix of zero-based class `c`.
    pub fn adjacency(&self, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            if self.class(i, j) == Some(c) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Number of unordered pairs in each class.
    pub fn pair_counts(&self, classes: usize) -> Vec<usize> {
        let mut counts = vec![0; classes];
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if let Some(c) = self.class(i, j) {
                    counts[c] += 1;
                }
            }
        }
        counts
    }
}

/// Distinct squared distances `a_1 < ... < a_s` and the pair partition.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    pub squared_distances: Vec<f64>,
    pub classes: PairClasses,
    pub tol: f64,
}

impl DistanceProfile {
    pub fn s(&self) -> usize {
        self.squared_distances.len()
    }

    /// Adjacency matrix `A_i` for the one-based class `i`.
    pub fn adjacency(&self, i: usize) -> DMatrix<f64> {
        self.classes.adjacency(i - 1)
    }

    pub fn pair_counts(&self) -> Vec<usize> {
        self.classes.pair_counts(self.s())
    }
}

/// Distinct inner products `b_1 < ... < b_s` of a spherical set.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProductProfile {
    pub inner_products: Vec<f64>,
    pub classes: PairClasses,
    pub contains_minus_one: bool,
    pub antipodal: bool,
    pub tol: f64,
}

impl InnerProductProfile {
    pub fn s(&self) -> usize {
        self.inner_products.len()
    }

    pub fn adjacency(&self, i: usize) -> DMatrix<f64> {
        self.classes.adjacency(i - 1)
    }

    pub fn pair_counts(&self) -> Vec<usize> {
        self.classes.pair_counts(self.s())
    }
}

/// Summary written by the `profile` command.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileSummary {
    pub n: usize,
    pub dimension: usize,
    pub affine_dimension: usize,
    pub s: usize,
    pub squared_distances: Vec<f64>,
    pub pair_counts: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spherical: Option<SphericalSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SphericalSummary {
    pub s: usize,
    pub inner_products: Vec<f64>,
    pub pair_counts: Vec<usize>,
    pub antipodal: bool,
    pub linear_dimension: usize,
}

impl ProfileSummary {
    pub fn compute(x: &PointSet, tol: f64) -> Result<Self> {
        let profile = x.distance_profile(tol)?;
        let spherical = if x.is_spherical(tol.max(1e-12)) {
            let ip = x.inner_product_profile(tol)?;
            Some(SphericalSummary {
                s: ip.s(),
                pair_counts: ip.pair_counts(),
                inner_products: ip.inner_products,
                antipodal: ip.antipodal,
                linear_dimension: x.linear_dimension(),
            })
        } else {
            None
        };
        Ok(ProfileSummary {
            n: x.len(),
            dimension: x.dimension(),
            affine_dimension: x.affine_dimension(),
            s: profile.s(),
            pair_counts: profile.pair_counts(),
            squared_distances: profile.squared_distances,
            spherical,
        })
    }
}

fn pair_values(x: &PointSet, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let n = x.len();
    let mut values = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            values.push(f(i, j));
        }
    }
    values
}

/// Group the pairwise squared distances of `x` using relative tolerance `tol`.
pub fn distance_profile(x: &PointSet, tol: f64) -> Result<DistanceProfile> {
    let values = pair_values(x, |i, j| x.squared_distance(i, j));
    let grouping = group_values(&values, tol, GapScale::Relative)?;
    Ok(DistanceProfile {
        squared_distances: grouping.representatives,
        classes: PairClasses::from_pairs(x.len(), &grouping.assignment),
        tol,
    })
}

/// Group the pairwise inner products of a unit-norm set (absolute tolerance `tol`).
pub fn inner_product_profile(x: &PointSet, tol: f64) -> Result<InnerProductProfile> {
    if let Some((index, norm)) = x.first_off_sphere(tol.max(1e-12)) {
        return Err(Error::NotOnSphere { index, norm });
    }
    let values = pair_values(x, |i, j| x.inner_product(i, j));
    let grouping = group_values(&values, tol, GapScale::Absolute)?;
    let mut inner_products = grouping.representatives;
    // Inner products of unit vectors can only be -1 for antipodal pairs.
    let contains_minus_one = inner_products
        .first()
        .is_some_and(|&b| (b + 1.0).abs() <= tol.max(1e-12));
    if contains_minus_one {
        inner_products[0] = -1.0;
    }
    Ok(InnerProductProfile {
        inner_products,
        classes: PairClasses::from_pairs(x.len(), &grouping.assignment),
        contains_minus_one,
        antipodal: antipodal_pairing(x, tol).is_some(),
        tol,
    })
}

/// Partner index of each point under `x -> -x`, if the set is antipodal.
pub fn antipodal_pairing(x: &PointSet, tol: f64) -> Option<Vec<usize>> {
    let n = x.len();
    if n % 2 == 1 {
        return None;
    }
    let mut partner = vec![usize::MAX; n];
    for i in 0..n {
        if partner[i] != usize::MAX {
            continue;
        }
        let p = x.point(i);
        let scale = norm(p).max(1.0);
        let found = (0..n).find(|&j| {
            j != i
                && partner[j] == usize::MAX
                && x.point(j).iter().zip(p).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt()
                    <= tol * scale
        })?;
        partner[i] = found;
        partner[found] = i;
    }
    Some(partner)
}

pub fn is_antipodal(x: &PointSet, tol: f64) -> bool {
    antipodal_pairing(x, tol).is_some()
}

/// One representative per antipodal pair: the lexicographically larger
/// vector, listed in order of first appearance.
pub fn half_set(x: &PointSet, tol: f64) -> Result<PointSet> {
    let partner = antipodal_pairing(x, tol).ok_or(Error::NotAntipodal)?;
    let mut chosen = Vec::with_capacity(x.len() / 2);
    let mut labels = Vec::new();
    for (i, &j) in partner.iter().enumerate() {
        if i > j {
            continue;
        }
        let keep = if lexicographically_positive(x.point(i), tol) { i } else { j };
        chosen.push(x.point(keep).to_vec());
        if let Some(l) = x.labels() {
            labels.push(l[keep].clone());
        }
    }
    let half = PointSet::new(chosen)?;
    if x.labels().is_some() {
        half.with_labels(labels)
    } else {
        Ok(half)
    }
}

fn lexicographically_positive(p: &[f64], tol: f64) -> bool {
    p.iter()
        .find(|v| v.abs() > tol)
        .is_some_and(|&v| v > 0.0)
}

/// All weight-`s` binary vectors of length `d + 1`.
///
/// They lie on the hyperplane where the coordinates sum to `s`, so the set
/// is an `s`-distance set in a `d`-dimensional flat with squared distances
/// `2, 4, ..., 2s`.
pub fn construct_johnson(d: usize, s: usize) -> Result<PointSet> {
    if s == 0 || 2 * s > d + 1 {
        return Err(Error::Parameter(format!(
            "Johnson construction needs 1 <= s <= (d+1)/2, got d={d}, s={s}"
        )));
    }
    let len = d + 1;
    let mut points = Vec::new();
    let mut support: Vec<usize> = (0..s).collect();
    loop {
        let mut v = vec![0.0; len];
        for &i in &support {
            v[i] = 1.0;
        }
        points.push(v);
        // next combination in lexicographic order of supports
        let mut pos = s;
        while pos > 0 && support[pos - 1] == len - s + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        support[pos - 1] += 1;
        for k in pos..s {
            support[k] = support[k - 1] + 1;
        }
    }
    PointSet::new(points)
}

/// Named fixture configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConfig {
    /// `+-e_i` in `R^d`.
    CrossPolytope(usize),
    /// Regular simplex with `d + 1` vertices, centered and normalized, in `R^{d+1}`.
    Simplex(usize),
    /// `{+-1}^d / sqrt(d)`.
    Hypercube(usize),
    /// The 240 roots of E8 scaled to unit norm.
    E8Roots,
    /// Regular pentagon with unit circumradius.
    Pentagon,
    /// The 12 vertices of the icosahedron on the unit sphere.
    Icosahedron,
}

impl NamedConfig {
    /// Parse `name` with an optional dimension parameter.
    pub fn parse(name: &str, d: Option<usize>) -> Result<Self> {
        let need_d = || {
            d.filter(|&d| d >= 1)
                .ok_or_else(|| Error::Parameter(format!("`{name}` needs a dimension d >= 1")))
        };
        match name.replace('-', "_").as_str() {
            "cross_polytope" => Ok(NamedConfig::CrossPolytope(need_d()?)),
            "simplex" => Ok(NamedConfig::Simplex(need_d()?)),
            "hypercube" => Ok(NamedConfig::Hypercube(need_d()?)),
            "e8_roots" | "e8" => Ok(NamedConfig::E8Roots),
            "pentagon" => Ok(NamedConfig::Pentagon),
            "icosahedron" => Ok(NamedConfig::Icosahedron),
            _ => Err(Error::UnknownName(name.to_string())),
        }
    }

    pub fn build(self) -> Result<PointSet> {
        construct_named(self)
    }
}

pub fn construct_named(config: NamedConfig) -> Result<PointSet> {
    let points = match config {
        NamedConfig::CrossPolytope(d) => {
            let mut pts = Vec::with_capacity(2 * d);
            for i in 0..d {
                for sign in [1.0, -1.0] {
                    let mut v = vec![0.0; d];
                    v[i] = sign;
                    pts.push(v);
                }
            }
            pts
        }
        NamedConfig::Simplex(d) => {
            let m = d + 1;
            let c = 1.0 / m as f64;
            let r = ((1.0 - c) * (1.0 - c) + (m - 1) as f64 * c * c).sqrt();
            (0..m)
                .map(|i| {
                    (0..m)
                        .map(|k| if k == i { (1.0 - c) / r } else { -c / r })
                        .collect()
                })
                .collect()
        }
        NamedConfig::Hypercube(d) => {
            let scale = 1.0 / (d as f64).sqrt();
            (0..(1usize << d))
                .map(|mask| {
                    (0..d)
                        .map(|k| if mask >> (d - 1 - k) & 1 == 1 { -scale } else { scale })
                        .collect()
                })
                .collect()
        }
        NamedConfig::E8Roots => e8_roots(),
        NamedConfig::Pentagon => (0..5)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        NamedConfig::Icosahedron => {
            let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
            let r = (1.0 + phi * phi).sqrt();
            let mut pts = Vec::with_capacity(12);
            for a in [1.0, -1.0] {
                for b in [phi, -phi] {
                    pts.push(vec![0.0, a / r, b / r]);
                    pts.push(vec![a / r, b / r, 0.0]);
                    pts.push(vec![b / r, 0.0, a / r]);
                }
            }
            pts
        }
    };
    PointSet::new(points)
}

/// 112 roots `+-e_i +- e_j` and 128 roots `(+-1/2)^8` with an even number
/// of minus signs, all divided by `sqrt 2`.
fn e8_roots() -> Vec<Vec<f64>> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut roots = Vec::with_capacity(240);
    for i in 0..8 {
        for j in (i + 1)..8 {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = vec![0.0; 8];
                v[i] = si * scale;
                v[j] = sj * scale;
                roots.push(v);
            }
        }
    }
    for mask in 0u32..256 {
        if mask.count_ones() % 2 == 0 {
            roots.push(
                (0..8)
                    .map(|k| if mask >> k & 1 == 1 { -0.5 * scale } else { 0.5 * scale })
                    .collect(),
            );
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> PointSet {
        PointSet::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn json_three_points() {
        let x = PointSet::from_json_str(r#"{"dimension": 2, "points": [[0,0],[1,0],[0,1]]}"#)
            .unwrap();
        assert_eq!((x.len(), x.dimension()), (3, 2));
    }

    #[test]
    fn json_wrong_row_length() {
        let err = PointSet::from_json_str(r#"{"dimension": 2, "points": [[0,0],[1,0,0]]}"#)
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { index: 1, .. }));
    }

    #[test]
    fn csv_row_lengths_differ() {
        let err = PointSet::from_csv_reader("1,2,3\n4,5,6,7\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch { index: 1, expected: 3, found: 4 }
        ));
    }

    #[test]
    fn csv_duplicate_rows() {
        let err = PointSet::from_csv_reader("1,2\n3,4\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DuplicatePoint { first: 0, second: 2 }));
    }

    #[test]
    fn csv_garbage_is_parse_error() {
        let err = PointSet::from_csv_reader("1,x\n3,4\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn single_point_rejected() {
        assert!(matches!(
            PointSet::new(vec![vec![1.0]]),
            Err(Error::TooFewPoints(1))
        ));
    }

    #[test]
    fn unit_square_profile() {
        let p = unit_square().distance_profile(DEFAULT_GROUPING_TOL).unwrap();
        assert_eq!(p.squared_distances, vec![1.0, 2.0]);
        assert_eq!(p.pair_counts(), vec![4, 2]);
        let sum = p.adjacency(1) + p.adjacency(2);
        let n = 4;
        assert_eq!(sum, DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }));
    }

    #[test]
    fn pentagon_profile() {
        let x = construct_named(NamedConfig::Pentagon).unwrap();
        let p = x.distance_profile(DEFAULT_GROUPING_TOL).unwrap();
        let d36 = 36f64.to_radians().sin();
        let d72 = 72f64.to_radians().sin();
        assert_close(&p.squared_distances, &[4.0 * d36 * d36, 4.0 * d72 * d72], 1e-12);
        assert_close(&p.squared_distances, &[1.381966, 3.618034], 1e-6);
        let ip = x.inner_product_profile(DEFAULT_GROUPING_TOL).unwrap();
        assert_close(&ip.inner_products, &[-0.809017, 0.309017], 1e-6);
        assert!(!ip.antipodal);
    }

    #[test]
    fn johnson_profile_matches_hamming_oracle() {
        let x = construct_johnson(10, 3).unwrap();
        assert_eq!(x.len(), 165);
        assert_eq!(x.dimension(), 11);
        assert_eq!(x.affine_dimension(), 10);
        // Hamming distances between weight-3 vectors, by brute force on supports.
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                let h = x.point(i).iter().zip(x.point(j)).filter(|(a, b)| a != b).count();
                seen.insert(h);
            }
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![2, 4, 6]);
        let p = x.distance_profile(DEFAULT_GROUPING_TOL).unwrap();
        assert_eq!(p.squared_distances, vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn johnson_sizes_and_errors() {
        assert_eq!(construct_johnson(5, 2).unwrap().len(), 15);
        assert_eq!(construct_johnson(5, 2).unwrap().distance_profile(1e-9).unwrap().s(), 2);
        assert!(matches!(construct_johnson(3, 3), Err(Error::Parameter(_))));
        for p in construct_johnson(8, 4).unwrap().points() {
            assert_eq!(p.iter().sum::<f64>(), 4.0);
        }
    }

    #[test]
    fn cross_polytope_profile() {
        let x = construct_named(NamedConfig::CrossPolytope(4)).unwrap();
        assert_eq!(x.len(), 8);
        let ip = x.inner_product_profile(1e-9).unwrap();
        assert_eq!(ip.inner_products, vec![-1.0, 0.0]);
        assert!(ip.antipodal && ip.contains_minus_one);
        let pairing = antipodal_pairing(&x, 1e-9).unwrap();
        assert!(pairing.iter().enumerate().all(|(i, &j)| j != i && pairing[j] == i));
    }

    #[test]
    fn cross_polytope_half_set_is_positive_basis() {
        let x = construct_named(NamedConfig::CrossPolytope(3)).unwrap();
        let h = half_set(&x, 1e-9).unwrap();
        assert_eq!(
            h.points(),
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
    }

    #[test]
    fn e8_inner_products_by_brute_force() {
        let x = construct_named(NamedConfig::E8Roots).unwrap();
        assert_eq!(x.len(), 240);
        // Doubled inner products of the unscaled roots are integers in {-4..4}.
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..240 {
            assert!((x.inner_product(i, i) - 1.0).abs() < 1e-12);
            for j in (i + 1)..240 {
                seen.insert((4.0 * x.inner_product(i, j)).round() as i64);
            }
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![-4, -2, 0, 2]);
        let ip = x.inner_product_profile(1e-9).unwrap();
        assert_close(&ip.inner_products, &[-1.0, -0.5, 0.0, 0.5], 1e-12);
        assert!(ip.antipodal);
        assert_eq!(half_set(&x, 1e-9).unwrap().len(), 120);
        assert_eq!(x.linear_dimension(), 8);
    }

    #[test]
    fn pentagon_not_antipodal() {
        let x = construct_named(NamedConfig::Pentagon).unwrap();
        assert!(!is_antipodal(&x, 1e-9));
        assert!(matches!(half_set(&x, 1e-9), Err(Error::NotAntipodal)));
    }

    #[test]
    fn icosahedron_half_set() {
        let x = construct_named(NamedConfig::Icosahedron).unwrap();
        assert!(is_antipodal(&x, 1e-9));
        assert_eq!(half_set(&x, 1e-9).unwrap().len(), 6);
        let ip = x.inner_product_profile(1e-9).unwrap();
        let r5 = 1.0 / 5f64.sqrt();
        assert_close(&ip.inner_products, &[-1.0, -r5, r5], 1e-12);
    }

    #[test]
    fn simplex_is_one_distance() {
        let x = construct_named(NamedConfig::Simplex(3)).unwrap();
        assert_eq!(x.len(), 4);
        assert_eq!(x.distance_profile(1e-9).unwrap().s(), 1);
        assert!(x.is_spherical(1e-12));
        assert_eq!(x.linear_dimension(), 3);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            NamedConfig::parse("dodecahedron", None),
            Err(Error::UnknownName(_))
        ));
        assert_eq!(
            NamedConfig::parse("cross-polytope", Some(4)).unwrap(),
            NamedConfig::CrossPolytope(4)
        );
    }

    #[test]
    fn off_sphere_points_rejected() {
        let err = unit_square().inner_product_profile(1e-9).unwrap_err();
        assert!(matches!(err, Error::NotOnSphere { .. }));
    }

    #[test]
    fn ambiguous_gap_detected() {
        // gap of 5e-9 relative: above tol 1e-9, below 10 tol
        let g = group_values(&[1.0, 1.0 + 5e-9, 2.0], 1e-9, GapScale::Relative);
        assert!(matches!(g, Err(Error::AmbiguousGrouping { .. })));
        let g = group_values(&[1.0, 1.0 + 5e-10, 2.0], 1e-9, GapScale::Relative).unwrap();
        assert_eq!(g.representatives.len(), 2);
        assert_eq!(g.assignment, vec![0, 0, 1]);
    }

    #[test]
    fn chained_class_is_ambiguous() {
        let values: Vec<f64> = (0..30).map(|k| 1.0 + k as f64 * 0.9e-9).collect();
        assert!(matches!(
            group_values(&values, 1e-9, GapScale::Relative),
            Err(Error::AmbiguousGrouping { .. })
        ));
    }
}
