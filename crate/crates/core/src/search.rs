//! The finite catalog of admissible ratio tuples for given `(d, s)` and their
//! inversion back to normalized squared distances.

use std::fmt;

use serde::Serialize;

use crate::bounds::{theorem_context, Setting, TheoremContext};
use crate::inverse::{invert_k, invert_s3_closed, scaled_residual, InvertOptions};
use crate::{Error, Result};

pub const DEFAULT_TUPLE_CAP: u128 = 10_000_000;

/// Round-trip tolerance a realized tuple must meet.
pub const REALIZE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Realization {
    Realized { t: Vec<f64>, residual: f64 },
    /// No `t` in the domain maps to the tuple.
    Unrealizable { reason: String },
    /// Newton failed from every start; the tuple may or may not be reachable.
    NewtonFailed { detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    /// `k_1, ..., k_{s-1}`.
    pub k: Vec<i64>,
    /// The implied `k_s = 1 - sum k_i`.
    pub k_last: i64,
    #[serde(skip_serializing_if = "Option::is_none", flatten)]
    pub realization: Option<Realization>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CatalogCounts {
    pub total: usize,
    pub realized: usize,
    pub unrealizable: usize,
    pub newton_failed: usize,
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateCatalog {
    pub d: u64,
    pub s: u64,
    pub context: TheoremContext,
    pub tuples: Vec<CatalogEntry>,
}

impl CandidateCatalog {
    pub fn counts(&self) -> CatalogCounts {
        let mut c = CatalogCounts {
            total: self.tuples.len(),
            ..Default::default()
        };
        for e in &self.tuples {
            match &e.realization {
                None => c.pending += 1,
                Some(Realization::Realized { .. }) => c.realized += 1,
                Some(Realization::Unrealizable { .. }) => c.unrealizable += 1,
                Some(Realization::NewtonFailed { .. }) => c.newton_failed += 1,
            }
        }
        c
    }

    pub fn find(&self, k: &[i64]) -> Option<&CatalogEntry> {
        self.tuples.iter().find(|e| e.k == k)
    }
}

fn sign(i: usize) -> i64 {
    if i % 2 == 0 {
        1
    } else {
        -1
    }
}

/// All tuples `k_1..k_{s-1}` with `sign(k_i) = (-1)^{i-1}`, `1 <= |k_i| <= bound`,
/// and the implied `k_s` obeying the same constraints, in lexicographic order.
pub fn enumerate_in_box(s: usize, bound: u64, cap: u128) -> Result<Vec<Vec<i64>>> {
    if s < 2 {
        return Err(Error::Parameter(format!("s = {s} must be at least 2")));
    }
    let size = (bound as u128).checked_pow((s - 1) as u32);
    if size.is_none_or(|size| size > cap) {
        return Err(Error::CapExceeded {
            count: size.unwrap_or(u128::MAX),
            cap,
        });
    }
    let bound = bound as i64;
    let last_sign = sign(s - 1);
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(s - 1);
    fn walk(
        s: usize,
        bound: i64,
        last_sign: i64,
        current: &mut Vec<i64>,
        sum: i64,
        out: &mut Vec<Vec<i64>>,
    ) {
        let i = current.len();
        if i == s - 1 {
            let last = 1 - sum;
            if last * last_sign >= 1 && last.abs() <= bound {
                out.push(current.clone());
            }
            return;
        }
        let values: Vec<i64> = if sign(i) > 0 {
            (1..=bound).collect()
        } else {
            (-bound..=-1).collect()
        };
        for v in values {
            current.push(v);
            walk(s, bound, last_sign, current, sum + v, out);
            current.pop();
        }
    }
    walk(s, bound, last_sign, &mut current, 0, &mut out);
    Ok(out)
}

/// Raw catalog for the Euclidean theorem in dimension `d` with `s` distances.
pub fn enumerate_tuples(d: u64, s: u64, cap: u128) -> Result<CandidateCatalog> {
    let context = theorem_context(Setting::Euclidean, d, s)?;
    let tuples = enumerate_in_box(s as usize, context.ratio_bound, cap)?
        .into_iter()
        .map(|k| CatalogEntry {
            k_last: 1 - k.iter().sum::<i64>(),
            k,
            realization: None,
        })
        .collect();
    Ok(CandidateCatalog {
        d,
        s,
        context,
        tuples,
    })
}

/// Invert one tuple, classifying the outcome.
pub fn realize_tuple(k: &[i64], opts: &InvertOptions) -> Realization {
    let target: Vec<f64> = k.iter().map(|&v| v as f64).collect();
    if k[0] <= 1 {
        return Realization::Unrealizable {
            reason: format!("k_1 = {} but K_1 > 1 on the whole domain", k[0]),
        };
    }
    match invert_k(&target, opts) {
        Ok(inv) => {
            let t = inv.t.into_inner();
            let residual = scaled_residual_of(&t, &target);
            if residual <= REALIZE_TOL {
                return Realization::Realized { t, residual };
            }
            Realization::NewtonFailed {
                detail: format!("round-trip residual {residual:e}"),
            }
        }
        Err(e) => {
            if k.len() == 2 && k[0] + k[1] != 0 {
                if let Err(Error::NoSolution(msg)) = invert_s3_closed(target[0], target[1]) {
                    return Realization::Unrealizable {
                        reason: format!("closed form: {msg}"),
                    };
                }
            }
            Realization::NewtonFailed { detail: e.to_string() }
        }
    }
}

fn scaled_residual_of(t: &[f64], target: &[f64]) -> f64 {
    match crate::inverse::SquaredDistanceTuple::new(t.to_vec()) {
        Ok(tuple) => scaled_residual(&tuple, target),
        Err(_) => f64::INFINITY,
    }
}

/// Fill in the realization status of every tuple.
pub fn realize_catalog(mut catalog: CandidateCatalog) -> CandidateCatalog {
    let opts = InvertOptions::default();
    for entry in &mut catalog.tuples {
        entry.realization = Some(realize_tuple(&entry.k, &opts));
    }
    catalog
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogSummary {
    pub d: u64,
    pub s: u64,
    pub n_dim: u128,
    pub ratio_bound: u64,
    pub cardinality_threshold: u128,
    pub counts: CatalogCounts,
    pub statement: String,
}

pub fn catalog_report(catalog: &CandidateCatalog) -> CatalogSummary {
    let counts = catalog.counts();
    let ctx = &catalog.context;
    let statement = if counts.total == 0 {
        format!(
            "no admissible ratio tuple exists for d = {}, s = {}: no {}-distance set in R^{} has at least {} points",
            catalog.d, catalog.s, catalog.s, catalog.d, ctx.cardinality_threshold
        )
    } else {
        format!(
            "every {}-distance set in R^{} with at least {} points has ratios among these {} tuples, so its distances up to scale lie in a finite set",
            catalog.s, catalog.d, ctx.cardinality_threshold, counts.total
        )
    };
    CatalogSummary {
        d: catalog.d,
        s: catalog.s,
        n_dim: ctx.n_dim,
        ratio_bound: ctx.ratio_bound,
        cardinality_threshold: ctx.cardinality_threshold,
        counts,
        statement,
    }
}

impl fmt::Display for CatalogSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d = {}, s = {}: N = {}, U(N) = {}", self.d, self.s, self.n_dim, self.ratio_bound)?;
        writeln!(
            f,
            "tuples: {} total, {} realized, {} unrealizable, {} newton_failed, {} pending",
            self.counts.total,
            self.counts.realized,
            self.counts.unrealizable,
            self.counts.newton_failed,
            self.counts.pending
        )?;
        write!(f, "{}", self.statement)
    }
}
