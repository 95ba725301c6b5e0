//! Realizability of squared-distance and Gram matrices, and congruence of
//! point sets up to relabeling.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize, Serializer};

use crate::linalg;
use crate::pointset::PointSet;
use crate::{Error, Result};

/// Eigenvalues at or above `-tol_psd * lambda_max` count as nonnegative.
pub const DEFAULT_TOL_PSD: f64 = 1e-8;
/// Relative tolerance (times the largest squared distance) for congruence.
pub const DEFAULT_CONGRUENCE_TOL: f64 = 1e-8;
/// Backtracking nodes before a congruence search gives up.
pub const CONGRUENCE_NODE_CAP: u64 = 1_000_000;

const SHAPE_TOL: f64 = 1e-9;

/// Symmetric matrix of squared distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredDistanceMatrix(DMatrix<f64>);

impl SquaredDistanceMatrix {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        check_square(&c)?;
        let scale = c.amax().max(1.0);
        for i in 0..c.nrows() {
            for j in 0..c.ncols() {
                let v = c[(i, j)];
                if i == j && v.abs() > SHAPE_TOL * scale {
                    return Err(Error::Shape(format!("diagonal entry {i} is {v}, not 0")));
                }
                if i != j && !(v > 0.0) {
                    return Err(Error::Shape(format!("entry ({i}, {j}) = {v} is not positive")));
                }
                if (v - c[(j, i)]).abs() > SHAPE_TOL * scale {
                    return Err(Error::Shape(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SquaredDistanceMatrix(c))
    }

    pub fn from_points(x: &PointSet) -> Self {
        SquaredDistanceMatrix(x.squared_distance_matrix())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }
}

/// Symmetric matrix with unit diagonal, a candidate Gram matrix of unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

impl GramMatrix {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        check_square(&g)?;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let v = g[(i, j)];
                if i == j && (v - 1.0).abs() > SHAPE_TOL {
                    return Err(Error::Shape(format!("diagonal entry {i} is {v}, not 1")));
                }
                if i != j && !(v < 1.0 - SHAPE_TOL && v >= -1.0 - SHAPE_TOL) {
                    return Err(Error::Shape(format!("entry ({i}, {j}) = {v} outside [-1, 1)")));
                }
                if (v - g[(j, i)]).abs() > SHAPE_TOL {
                    return Err(Error::Shape(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(GramMatrix(g))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!("{} x {} matrix is not square", m.nrows(), m.ncols())));
    }
    if m.nrows() < 2 {
        return Err(Error::TooFewPoints(m.nrows()));
    }
    linalg::ensure_finite(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    SquaredDistance,
    Gram,
}

/// On-disk matrix format for `embed-check`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub matrix: Vec<Vec<f64>>,
    pub kind: MatrixKind,
}

impl MatrixFile {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.matrix.len();
        if let Some((i, row)) = self.matrix.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Shape(format!("row {i} has {} entries, expected {n}", row.len())));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| self.matrix[i][j]))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingVerdict {
    pub embeddable: bool,
    /// Numeric rank of the (centered) Gram matrix.
    pub minimal_dimension: usize,
    /// Most negative eigenvalue of the Gram matrix (the PSD slack).
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Points in `R^d` realizing the matrix, when embeddable.
    #[serde(serialize_with = "serialize_realization")]
    pub realization: Option<PointSet>,
    /// Largest relative error of the realization's matrix against the input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction_error: Option<f64>,
}

fn serialize_realization<S: Serializer>(x: &Option<PointSet>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(p) => s.collect_seq(p.points()),
        None => s.serialize_none(),
    }
}

/// Realize a PSD Gram matrix of rank at most `d` as rows in `R^d`.
fn realize(g: &DMatrix<f64>, d: usize, tol_psd: f64) -> Result<(EmbeddingVerdict, Option<Vec<Vec<f64>>>)> {
    let n = g.nrows();
    let (values, vectors) = linalg::symmetric_eigenpairs_desc(g)?;
    let max = values.first().copied().unwrap_or(0.0);
    let min = values.last().copied().unwrap_or(0.0);
    let scale = max.max(0.0);
    let psd = min >= -tol_psd * scale;
    let rank_threshold = tol_psd * n as f64 * scale;
    let rank = values.iter().filter(|&&v| v > rank_threshold).count();
    let embeddable = psd && rank <= d;
    let rows = embeddable.then(|| {
        (0..n)
            .map(|i| {
                (0..d)
                    .map(|c| if c < rank { vectors[(i, c)] * values[c].sqrt() } else { 0.0 })
                    .collect()
            })
            .collect()
    });
    Ok((
        EmbeddingVerdict {
            embeddable,
            minimal_dimension: rank,
            min_eigenvalue: min,
            max_eigenvalue: max,
            realization: None,
            reconstruction_error: None,
        },
        rows,
    ))
}

fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    linalg::max_abs_diff(a, b) / a.amax().max(f64::MIN_POSITIVE)
}

/// Double-centering test: `G = -1/2 H C H` must be PSD with rank at most `d`.
pub fn euclidean_embeddable(c: &SquaredDistanceMatrix, d: usize, tol_psd: f64) -> Result<EmbeddingVerdict> {
    let g = double_center(c.matrix());
    let (mut verdict, rows) = realize(&g, d, tol_psd)?;
    if let Some(rows) = rows {
        let x = PointSet::new(rows)?;
        verdict.reconstruction_error = Some(relative_error(c.matrix(), &x.squared_distance_matrix()));
        verdict.realization = Some(x);
    }
    Ok(verdict)
}

/// Gram test on the sphere: `G` must be PSD with rank at most `d`.
pub fn spherical_embeddable(g: &GramMatrix, d: usize, tol_psd: f64) -> Result<EmbeddingVerdict> {
    let (mut verdict, rows) = realize(g.matrix(), d, tol_psd)?;
    if let Some(rows) = rows {
        let x = PointSet::new(rows)?;
        verdict.reconstruction_error = Some(linalg::max_abs_diff(g.matrix(), &x.gram_matrix()));
        verdict.realization = Some(x);
    }
    Ok(verdict)
}

/// The centering matrix `H = I - J/n`.
pub fn centering_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64)
}

pub fn double_center(c: &DMatrix<f64>) -> DMatrix<f64> {
    let h = centering_matrix(c.nrows());
    let mut g = &h * c * &h * -0.5;
    // symmetrize away rounding
    let t = g.transpose();
    g += t;
    g * 0.5
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Congruence {
    /// `Y`'s point `perm[i]` plays the role of `X`'s point `i`.
    Congruent { perm: Vec<usize> },
    NotCongruent,
    /// The node cap was reached before the search finished.
    Inconclusive { nodes: u64 },
}

impl Congruence {
    pub fn is_congruent(&self) -> bool {
        matches!(self, Congruence::Congruent { .. })
    }
}

/// Decide whether some relabeling of `y` has the same squared distances as `x`.
pub fn congruent(x: &PointSet, y: &PointSet, tol: f64) -> Result<Congruence> {
    congruent_with_cap(x, y, tol, CONGRUENCE_NODE_CAP)
}

pub fn congruent_with_cap(x: &PointSet, y: &PointSet, tol: f64, cap: u64) -> Result<Congruence> {
    if x.len() != y.len() || x.dimension() != y.dimension() {
        return Err(Error::SizeMismatch(format!(
            "{} points in R^{} vs {} points in R^{}",
            x.len(),
            x.dimension(),
            y.len(),
            y.dimension()
        )));
    }
    let cx = x.squared_distance_matrix();
    let cy = y.squared_distance_matrix();
    let abs_tol = tol * cx.amax().max(cy.amax()).max(f64::MIN_POSITIVE);
    let close = |a: f64, b: f64| (a - b).abs() <= abs_tol;

    let sorted_rows = |c: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..c.nrows())
            .map(|i| {
                let mut row: Vec<f64> = c.row(i).iter().copied().collect();
                row.sort_by(f64::total_cmp);
                row
            })
            .collect()
    };
    let rx = sorted_rows(&cx);
    let ry = sorted_rows(&cy);
    let n = x.len();
    let compatible: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| rx[i].iter().zip(&ry[j]).all(|(a, b)| close(*a, *b)))
                .collect()
        })
        .collect();
    if compatible.iter().any(Vec::is_empty) {
        return Ok(Congruence::NotCongruent);
    }

    let order = basis_first_order(x);
    let mut search = Search {
        cx: &cx,
        cy: &cy,
        close: &close,
        order: &order,
        compatible: &compatible,
        image: vec![usize::MAX; n],
        used: vec![false; n],
        nodes: 0,
        cap,
    };
    Ok(match search.extend(0) {
        Some(true) => Congruence::Congruent { perm: search.image },
        Some(false) => Congruence::NotCongruent,
        None => Congruence::Inconclusive { nodes: search.nodes },
    })
}

/// Points ordered so that an affine basis comes first; once it is placed,
/// every later point has at most one consistent image.
fn basis_first_order(x: &PointSet) -> Vec<usize> {
    let n = x.len();
    let origin = x.point(0);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut order = vec![0];
    let mut placed = vec![false; n];
    placed[0] = true;
    let scale = (0..n).map(|i| x.squared_distance(0, i)).fold(0.0, f64::max).sqrt();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !placed[i]) {
            let mut r: Vec<f64> = x.point(i).iter().zip(origin).map(|(a, b)| a - b).collect();
            for b in &basis {
                let proj: f64 = r.iter().zip(b).map(|(u, v)| u * v).sum();
                r.iter_mut().zip(b).for_each(|(u, v)| *u -= proj * v);
            }
            let len = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if best.is_none_or(|(_, l)| len > l) {
                best = Some((i, len));
            }
        }
        match best {
            Some((i, len)) if len > 1e-8 * scale => {
                let mut r: Vec<f64> = x.point(i).iter().zip(origin).map(|(a, b)| a - b).collect();
                for b in &basis {
                    let proj: f64 = r.iter().zip(b).map(|(u, v)| u * v).sum();
                    r.iter_mut().zip(b).for_each(|(u, v)| *u -= proj * v);
                }
                r.iter_mut().for_each(|v| *v /= len);
                basis.push(r);
                order.push(i);
                placed[i] = true;
            }
            _ => break,
        }
    }
    order.extend((0..n).filter(|&i| !placed[i]));
    order
}

struct Search<'a, F: Fn(f64, f64) -> bool> {
    cx: &'a DMatrix<f64>,
    cy: &'a DMatrix<f64>,
    close: &'a F,
    order: &'a [usize],
    compatible: &'a [Vec<usize>],
    image: Vec<usize>,
    used: Vec<bool>,
    nodes: u64,
    cap: u64,
}

impl<F: Fn(f64, f64) -> bool> Search<'_, F> {
    /// `Some(found)` when the subtree was fully explored, `None` on cap.
    fn extend(&mut self, depth: usize) -> Option<bool> {
        if depth == self.order.len() {
            return Some(true);
        }
        let i = self.order[depth];
        for &j in &self.compatible[i] {
            if self.used[j] {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.cap {
                return None;
            }
            let consistent = self.order[..depth]
                .iter()
                .all(|&a| (self.close)(self.cx[(i, a)], self.cy[(j, self.image[a])]));
            if !consistent {
                continue;
            }
            self.image[i] = j;
            self.used[j] = true;
            if self.extend(depth + 1)? {
                return Some(true);
            }
            self.used[j] = false;
            self.image[i] = usize::MAX;
        }
        Some(false)
    }
}
