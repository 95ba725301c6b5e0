//! The normalized forward map from squared distances to ratios, and its inverse.
//!
//! With squared distances scaled so that the largest is `t_s = 1`, the
//! remaining `t = (t_1, ..., t_{s-1})` live in the open simplex
//! `0 < t_1 < ... < t_{s-1} < 1` and the ratios become
//!
//! ```text
//! K_i(t) = prod_{j != i, j <= s} t_j / (t_j - t_i)
//! ```
//!
//! The Jacobian of `t -> (K_1, ..., K_{s-1})` never vanishes on the simplex,
//! so integer ratio tuples determine the distances. [`invert_k`] recovers
//! them with damped Newton iterations on `log |K_i|`, falling back to
//! continuation along the segment from `K(t_0)` to the target when plain
//! Newton stalls near the boundary of the simplex.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::{Error, Result};

/// Minimum gap between consecutive coordinates (and to 0 and 1) for a tuple
/// to count as inside the domain.
pub const DOMAIN_GAP: f64 = 1e-12;

/// Margin kept by Newton iterates.
const ITERATE_MARGIN: f64 = 1e-9;

/// A point `0 < t_1 < ... < t_{s-1} < 1`; the implicit `t_s` is 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SquaredDistanceTuple(Vec<f64>);

impl SquaredDistanceTuple {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::Domain("need at least one coordinate (s >= 2)".into()));
        }
        if !gaps_at_least(&t, DOMAIN_GAP) {
            return Err(Error::Domain(format!(
                "{t:?} is not strictly increasing inside (0, 1)"
            )));
        }
        Ok(SquaredDistanceTuple(t))
    }

    /// Number of distances, `s = len + 1`.
    pub fn s(&self) -> usize {
        self.0.len() + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// All `s` values including the trailing 1.
    pub fn with_last(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.push(1.0);
        v
    }
}

fn gaps_at_least(t: &[f64], gap: f64) -> bool {
    let mut prev = 0.0;
    for &v in t.iter().chain(std::iter::once(&1.0)) {
        if !(v - prev >= gap) || !v.is_finite() {
            return false;
        }
        prev = v;
    }
    true
}

/// Ratios `K_1..K_{s-1}`; the last ratio follows from `sum K_i = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KTuple {
    pub k: Vec<f64>,
}

impl KTuple {
    /// `K_s = 1 - sum_{i<s} K_i`.
    pub fn last(&self) -> f64 {
        1.0 - self.k.iter().sum::<f64>()
    }
}

fn ratio(full: &[f64], i: usize) -> f64 {
    (0..full.len())
        .filter(|&j| j != i)
        .map(|j| full[j] / (full[j] - full[i]))
        .product()
}

/// `K_1..K_{s-1}` at `t`.
pub fn forward_k(t: &SquaredDistanceTuple) -> KTuple {
    let full = t.with_last();
    KTuple {
        k: (0..t.values().len()).map(|i| ratio(&full, i)).collect(),
    }
}

/// All `s` ratios, each evaluated from its own product (the last is not
/// derived from the others).
pub fn forward_all(t: &SquaredDistanceTuple) -> Vec<f64> {
    let full = t.with_last();
    (0..full.len()).map(|i| ratio(&full, i)).collect()
}

/// Analytic Jacobian `dK_i / dt_j`:
/// `K_i sum_{k != i} 1/(t_k - t_i)` on the diagonal and
/// `(t_i / t_j) K_i / (t_i - t_j)` off it (sums run over `k = 1..s` with `t_s = 1`).
pub fn jacobian(t: &SquaredDistanceTuple) -> DMatrix<f64> {
    let full = t.with_last();
    let k = forward_k(t).k;
    let n = k.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let sum: f64 = (0..full.len())
                .filter(|&l| l != i)
                .map(|l| 1.0 / (full[l] - full[i]))
                .sum();
            sum * k[i]
        } else {
            full[i] / full[j] / (full[i] - full[j]) * k[i]
        }
    })
}

/// `det J = (s - 1)! prod_{i < s} K_i / (1 - t_i)`.
pub fn jacobian_det_closed(t: &SquaredDistanceTuple) -> f64 {
    let k = forward_k(t).k;
    let factorial: f64 = (1..=k.len()).map(|v| v as f64).product();
    factorial
        * k.iter()
            .zip(t.values())
            .map(|(ki, ti)| ki / (1.0 - ti))
            .product::<f64>()
}

/// Determinant of the analytic Jacobian by elimination over the rationals.
///
/// Each `t_i` is a dyadic rational, so the entries are built exactly and no
/// rounding happens until the final conversion. Near the boundary of the
/// simplex the Jacobian is badly conditioned and an `f64` LU determinant can
/// be off by far more than the closed form is.
pub fn jacobian_det_exact(t: &SquaredDistanceTuple) -> f64 {
    let full: Vec<BigRational> = t
        .with_last()
        .iter()
        .map(|&v| BigRational::from_float(v).expect("domain values are finite"))
        .collect();
    let n = full.len() - 1;
    let k: Vec<BigRational> = (0..n)
        .map(|i| {
            (0..full.len())
                .filter(|&j| j != i)
                .fold(BigRational::one(), |acc, j| acc * &full[j] / (&full[j] - &full[i]))
        })
        .collect();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        let sum = (0..full.len())
                            .filter(|&l| l != i)
                            .fold(BigRational::zero(), |acc, l| acc + (&full[l] - &full[i]).recip());
                        sum * &k[i]
                    } else {
                        &full[i] / &full[j] / (&full[i] - &full[j]) * &k[i]
                    }
                })
                .collect()
        })
        .collect();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return 0.0;
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let (top, rest) = a.split_at_mut(c + 1);
        let pivot = &top[c];
        det *= &pivot[c];
        for row in rest {
            let f = &row[c] / &pivot[c];
            for (x, p) in row[c..].iter_mut().zip(&pivot[c..]) {
                *x -= &f * p;
            }
        }
    }
    det.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy)]
pub struct InvertOptions {
    pub max_iter: usize,
    /// Bound on `max_i |K_i(t) - k_i| / max(1, |k_i|)`.
    pub tol_res: f64,
    /// Try further starting points when the default start fails.
    pub multistart: bool,
}

impl Default for InvertOptions {
    fn default() -> Self {
        InvertOptions {
            max_iter: 100,
            tol_res: 1e-10,
            multistart: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Inversion {
    pub t: SquaredDistanceTuple,
    /// `max_i |K_i(t) - k_i| / max(1, |k_i|)`.
    pub residual: f64,
    pub iterations: usize,
    #[serde(flatten)]
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Damped Newton from starting point `start` (0 is `t_i = i/s`).
    Newton { start: usize },
    /// Predictor-corrector continuation with `steps` accepted path steps.
    Continuation { steps: usize },
}

/// Scaled residual used for acceptance.
pub fn scaled_residual(t: &SquaredDistanceTuple, k_target: &[f64]) -> f64 {
    forward_k(t)
        .k
        .iter()
        .zip(k_target)
        .map(|(k, target)| (k - target).abs() / target.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn expected_sign(i: usize) -> f64 {
    if i % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Check the alternating sign pattern of a ratio tuple `k_1..k_{s-1}`.
pub fn check_sign_pattern(k: &[f64]) -> Result<()> {
    for (i, &v) in k.iter().enumerate() {
        if !(v * expected_sign(i) > 0.0) {
            return Err(Error::InvalidSign(format!(
                "k_{} = {v} should have sign {}",
                i + 1,
                if i % 2 == 0 { '+' } else { '-' }
            )));
        }
    }
    Ok(())
}

fn starting_points(s: usize, multistart: bool) -> Vec<Vec<f64>> {
    let mut starts = vec![(1..s).map(|i| i as f64 / s as f64).collect()];
    if multistart {
        for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
            starts.push((1..s).map(|i| f64::powi(rho, (s - i) as i32)).collect());
        }
    }
    starts
}

fn log_residual(t: &SquaredDistanceTuple, k_target: &[f64]) -> DVector<f64> {
    let k = forward_k(t).k;
    DVector::from_iterator(
        k.len(),
        k.iter().zip(k_target).map(|(a, b)| (a / b).ln()),
    )
}

fn newton_from(
    start: Vec<f64>,
    k_target: &[f64],
    opts: &InvertOptions,
) -> Option<(SquaredDistanceTuple, usize)> {
    let mut t = SquaredDistanceTuple::new(start).ok()?;
    let mut r = log_residual(&t, k_target);
    for iter in 0..opts.max_iter {
        if scaled_residual(&t, k_target) <= opts.tol_res {
            return Some((t, iter));
        }
        // d log K_i / d t_j = J_ij / K_i
        let k = forward_k(&t).k;
        let mut jac = jacobian(&t);
        for (i, ki) in k.iter().enumerate() {
            jac.row_mut(i).scale_mut(1.0 / ki);
        }
        let step = jac.lu().solve(&(-&r))?;
        let merit = r.norm();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=30 {
            let candidate: Vec<f64> = t
                .values()
                .iter()
                .zip(step.iter())
                .map(|(a, b)| a + lambda * b)
                .collect();
            if gaps_at_least(&candidate, ITERATE_MARGIN) {
                let next = SquaredDistanceTuple(candidate);
                let r_next = log_residual(&next, k_target);
                if r_next.iter().all(|v| v.is_finite()) && r_next.norm() < merit {
                    accepted = Some((next, r_next));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let (next, r_next) = accepted?;
        t = next;
        r = r_next;
    }
    (scaled_residual(&t, k_target) <= opts.tol_res).then_some((t, opts.max_iter))
}

/// Undamped Newton on `log K(t) = log goal`; gives up on leaving the domain.
fn correct(start: Vec<f64>, goal: &[f64], tol: f64, max_iter: usize) -> Option<(Vec<f64>, usize)> {
    let mut t = start;
    for iter in 0..max_iter {
        let tuple = SquaredDistanceTuple(t.clone());
        let r = log_residual(&tuple, goal);
        if !r.iter().all(|v| v.is_finite()) {
            return None;
        }
        if r.amax() <= tol {
            return Some((t, iter));
        }
        let k = forward_k(&tuple).k;
        let mut jac = jacobian(&tuple);
        for (i, ki) in k.iter().enumerate() {
            jac.row_mut(i).scale_mut(1.0 / ki);
        }
        let step = jac.lu().solve(&(-&r))?;
        let next: Vec<f64> = t.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        if !gaps_at_least(&next, DOMAIN_GAP) {
            return None;
        }
        t = next;
    }
    None
}

/// Track `K^{-1}` along `k(l) = K(t_0) + l (k_target - K(t_0))`.
///
/// Every point of the segment keeps the sign pattern of the target, so the
/// path stays in the image whenever the image is convex along it.
fn continuation(k_target: &[f64], opts: &InvertOptions) -> Option<(SquaredDistanceTuple, usize, usize)> {
    const PATH_TOL: f64 = 1e-6;
    const MAX_STEPS: usize = 10_000;
    let s = k_target.len() + 1;
    let mut t: Vec<f64> = (1..s).map(|i| i as f64 / s as f64).collect();
    let k0 = forward_k(&SquaredDistanceTuple(t.clone())).k;
    let path = |l: f64| -> Vec<f64> { k0.iter().zip(k_target).map(|(a, b)| a + l * (b - a)).collect() };
    let (mut l, mut h) = (0.0f64, 0.1f64);
    let (mut steps, mut iterations) = (0, 0);
    for _ in 0..MAX_STEPS {
        if l >= 1.0 {
            let tuple = SquaredDistanceTuple(t);
            return (scaled_residual(&tuple, k_target) <= opts.tol_res).then_some((tuple, iterations, steps));
        }
        if h < 1e-12 {
            return None;
        }
        let next_l = (l + h).min(1.0);
        let goal = path(next_l);
        let dk = DVector::from_iterator(s - 1, goal.iter().zip(path(l)).map(|(a, b)| a - b));
        let predicted = jacobian(&SquaredDistanceTuple(t.clone()))
            .lu()
            .solve(&dk)
            .map(|dt| t.iter().zip(dt.iter()).map(|(a, b)| a + b).collect::<Vec<f64>>())
            .filter(|p| gaps_at_least(p, DOMAIN_GAP))
            .unwrap_or_else(|| t.clone());
        let tol = if next_l >= 1.0 { opts.tol_res } else { PATH_TOL };
        match correct(predicted, &goal, tol, 12) {
            Some((next, used)) => {
                t = next;
                l = next_l;
                h = (2.0 * h).min(0.5);
                steps += 1;
                iterations += used;
            }
            None => h *= 0.5,
        }
    }
    None
}

/// Find `t` in the domain with `K(t) = k_target`.
///
/// Targets must alternate in sign starting positive; the implied last ratio
/// `1 - sum k_i` must carry sign `(-1)^{s-1}` or there is no solution.
pub fn invert_k(k_target: &[f64], opts: &InvertOptions) -> Result<Inversion> {
    if k_target.is_empty() {
        return Err(Error::Parameter("need at least one ratio (s >= 2)".into()));
    }
    if k_target.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("ratios must be finite".into()));
    }
    check_sign_pattern(k_target)?;
    let s = k_target.len() + 1;
    let last = 1.0 - k_target.iter().sum::<f64>();
    if !(last * expected_sign(s - 1) > 0.0) {
        return Err(Error::NoSolution(format!(
            "implied k_{s} = {last} has the wrong sign"
        )));
    }
    let starts = starting_points(s, opts.multistart);
    let found = |t: SquaredDistanceTuple, iterations: usize, method: Method| Inversion {
        residual: scaled_residual(&t, k_target),
        t,
        iterations,
        method,
    };
    if let Some((t, iterations)) = newton_from(starts[0].clone(), k_target, opts) {
        return Ok(found(t, iterations, Method::Newton { start: 0 }));
    }
    if opts.multistart {
        if let Some((t, iterations, steps)) = continuation(k_target, opts) {
            return Ok(found(t, iterations, Method::Continuation { steps }));
        }
    }
    for (index, start) in starts.into_iter().enumerate().skip(1) {
        if let Some((t, iterations)) = newton_from(start, k_target, opts) {
            return Ok(found(t, iterations, Method::Newton { start: index }));
        }
    }
    Err(Error::NoSolution(format!(
        "Newton did not converge from any start for k = {k_target:?}"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedForm {
    pub t1: f64,
    pub t2: f64,
    pub branch_t1: Branch,
    pub branch_t2: Branch,
}

/// Closed-form inverse for `s = 3`:
///
/// ```text
/// t_1 = (k_1 m +- sqrt(k_1 k_2 m)) / (k_1 (k_1 + k_2))
/// t_2 = (k_2 m +- sqrt(k_1 k_2 m)) / (k_2 (k_1 + k_2)),   m = k_1 + k_2 - 1
/// ```
///
/// All four sign combinations are tried and the first that lands in the
/// domain and reproduces `(k_1, k_2)` is returned.
pub fn invert_s3_closed(k1: f64, k2: f64) -> Result<ClosedForm> {
    if !(k1 > 0.0 && k2 < 0.0) {
        return Err(Error::InvalidSign(format!(
            "closed form needs k1 > 0 and k2 < 0, got ({k1}, {k2})"
        )));
    }
    let sum = k1 + k2;
    if sum.abs() < 1e-12 {
        return Err(Error::Singular(format!("k1 + k2 = {sum}")));
    }
    let m = sum - 1.0;
    let disc = k1 * k2 * m;
    if disc < 0.0 {
        return Err(Error::NoSolution(format!(
            "negative discriminant {disc} for ({k1}, {k2})"
        )));
    }
    let root = disc.sqrt();
    let combos = [
        (Branch::Plus, Branch::Plus),
        (Branch::Plus, Branch::Minus),
        (Branch::Minus, Branch::Plus),
        (Branch::Minus, Branch::Minus),
    ];
    for (b1, b2) in combos {
        let t1 = (k1 * m + b1.sign() * root) / (k1 * sum);
        let t2 = (k2 * m + b2.sign() * root) / (k2 * sum);
        let Ok(t) = SquaredDistanceTuple::new(vec![t1, t2]) else {
            continue;
        };
        if scaled_residual(&t, &[k1, k2]) <= 1e-9 {
            return Ok(ClosedForm {
                t1,
                t2,
                branch_t1: b1,
                branch_t2: b2,
            });
        }
    }
    Err(Error::NoSolution(format!(
        "no branch of the closed form lies in the domain for ({k1}, {k2})"
    )))
}
