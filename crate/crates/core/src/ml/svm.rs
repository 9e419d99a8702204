//! Soft-margin SVM with an RBF kernel, trained by simplified SMO.

use std::collections::HashMap;
use std::rc::Rc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureVector, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Multipliers at or below this are dropped from the trained model.
const SUPPORT_THRESHOLD: f64 = 1e-8;
/// Relative change below which a pair update counts as no progress.
const PROGRESS_EPS: f64 = 1e-8;
/// Upper bound on sweeps over the training set.
const MAX_SWEEPS: usize = 100_000;

/// `exp(-gamma * ||x - y||^2)`.
pub fn kernel_rbf<T: Scalar>(x: &[T], y: &[T], gamma: T) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if gamma < T::zero() {
        return Err(Error::param("RBF gamma must be non-negative"));
    }
    Ok(rbf_unchecked(x, y, gamma))
}

#[inline]
fn rbf_unchecked<T: Scalar>(x: &[T], y: &[T], gamma: T) -> T {
    let mut dist = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        let d = a - b;
        dist += d * d;
    }
    (-gamma * dist).exp()
}

/// The "scale" heuristic `1 / (d * Var(all feature entries))`; 1 when the
/// features have no variance.
pub fn scale_gamma<T: Scalar>(data: &LabeledDataset<T>) -> f64 {
    let d = data.dim();
    let count = (data.len() * d) as f64;
    if count == 0.0 {
        return 1.0;
    }
    let values = || {
        data.features()
            .iter()
            .flat_map(|f| f.iter().map(|v| v.to_f64_lossy()))
    };
    let mean = values().sum::<f64>() / count;
    let var = values().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub gamma: f64,
    /// KKT tolerance on `y f(x)`.
    pub tol: f64,
    /// Consecutive sweeps without any multiplier change before stopping.
    pub max_passes: usize,
    /// Kernel rows kept in the least-recently-used cache.
    pub cache_rows: usize,
}

impl SmoParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        SmoParams {
            c,
            gamma,
            tol: 1e-3,
            max_passes: 10,
            cache_rows: 256,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::param(format!(
                "SVM C must be positive, got {}",
                self.c
            )));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::param(format!(
                "RBF gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("SMO tolerance must be positive"));
        }
        if self.max_passes == 0 {
            return Err(Error::param("SMO max_passes must be at least 1"));
        }
        Ok(())
    }
}

/// Trained classifier: `f(x) = sum_i (alpha_i y_i) K(sv_i, x) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmModel<T> {
    pub n_features: usize,
    pub gamma: T,
    pub c: T,
    pub bias: T,
    pub alphas_times_labels: Vec<T>,
    pub support_vectors: Vec<Vec<T>>,
}

impl<T: Scalar> SvmModel<T> {
    /// Structural checks applied to models loaded from disk.
    pub fn validate(&self) -> Result<()> {
        if self.support_vectors.is_empty() {
            return Err(Error::input("SVM model has no support vectors"));
        }
        if self.support_vectors.len() != self.alphas_times_labels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.support_vectors.len(),
                found: self.alphas_times_labels.len(),
            });
        }
        if let Some(sv) = self
            .support_vectors
            .iter()
            .find(|sv| sv.len() != self.n_features)
        {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: sv.len(),
            });
        }
        let slack = self.c * T::of(1e-9);
        if self
            .alphas_times_labels
            .iter()
            .any(|a| a.abs() > self.c + slack)
        {
            return Err(Error::input("SVM multiplier exceeds C"));
        }
        Ok(())
    }

    pub fn decision_value(&self, x: &[T]) -> Result<T> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let mut score = self.bias;
        for (sv, &coef) in self.support_vectors.iter().zip(&self.alphas_times_labels) {
            score += coef * rbf_unchecked(sv, x, self.gamma);
        }
        Ok(score)
    }
}

/// Score and label; the label is 1 iff the score is non-negative.
pub fn svm_predict<T: Scalar>(model: &SvmModel<T>, x: &[T]) -> Result<(T, Label)> {
    let score = model.decision_value(x)?;
    Ok((score, u8::from(score >= T::zero())))
}

/// Raw SMO result: one multiplier per training point.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution<T> {
    pub alphas: Vec<T>,
    pub bias: T,
    pub sweeps: usize,
}

pub fn train_svm_smo<T: Scalar>(
    data: &LabeledDataset<T>,
    params: &SmoParams,
) -> Result<SvmModel<T>> {
    let sol = solve_smo(data, params)?;
    let threshold = T::of(SUPPORT_THRESHOLD);
    let (support_vectors, alphas_times_labels) = sol
        .alphas
        .iter()
        .zip(data.features().iter().zip(data.labels()))
        .filter(|(&a, _)| a > threshold)
        .map(|(&a, (x, &l))| (x.to_vec(), if l == 1 { a } else { -a }))
        .unzip();
    let model = SvmModel {
        n_features: data.dim(),
        gamma: T::of(params.gamma),
        c: T::of(params.c),
        bias: sol.bias,
        alphas_times_labels,
        support_vectors,
    };
    if model.support_vectors.is_empty() {
        return Err(Error::input("SMO finished without any support vectors"));
    }
    Ok(model)
}

/// Simplified SMO: sweep over KKT violators, pair each with the partner of
/// largest `|E_i - E_j|` (lowest index on ties, falling back to the next
/// candidates when that pair cannot move), solve the pair analytically,
/// and stop after `max_passes` consecutive sweeps without a change.
pub fn solve_smo<T: Scalar>(
    data: &LabeledDataset<T>,
    params: &SmoParams,
) -> Result<SmoSolution<T>> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::input("cannot train an SVM on an empty dataset"));
    }
    if !data.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let n = data.len();
    let c = T::of(params.c);
    let tol = T::of(params.tol);
    let y: Vec<T> = data
        .labels()
        .iter()
        .map(|&l| if l == 1 { T::one() } else { -T::one() })
        .collect();
    let mut cache = KernelCache::new(
        data.features(),
        T::of(params.gamma),
        params.cache_rows.max(2),
    );
    let mut alpha = vec![T::zero(); n];
    let mut bias = T::zero();
    // err[k] = f(x_k) - y_k, kept current after every step.
    let mut err: Vec<T> = y.iter().map(|&v| -v).collect();

    let mut passes = 0;
    let mut sweeps = 0;
    let mut order: Vec<usize> = Vec::with_capacity(n);
    while passes < params.max_passes && sweeps < MAX_SWEEPS {
        let mut changed = 0;
        for i in 0..n {
            let r = y[i] * err[i];
            if !((r < -tol && alpha[i] < c) || (r > tol && alpha[i] > T::zero())) {
                continue;
            }
            order.clear();
            order.extend((0..n).filter(|&j| j != i));
            let ei = err[i];
            order.sort_by(|&a, &b| {
                let da = (ei - err[a]).abs();
                let db = (ei - err[b]).abs();
                db.partial_cmp(&da)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            for &j in &order {
                let pair = Pair { i, j, c, y: &y };
                if pair.step(&mut alpha, &mut bias, &mut err, &mut cache) {
                    changed += 1;
                    break;
                }
            }
        }
        sweeps += 1;
        passes = if changed == 0 { passes + 1 } else { 0 };
    }
    Ok(SmoSolution {
        alphas: alpha,
        bias,
        sweeps,
    })
}

struct Pair<'a, T> {
    i: usize,
    j: usize,
    c: T,
    y: &'a [T],
}

impl<T: Scalar> Pair<'_, T> {
    fn step(
        &self,
        alpha: &mut [T],
        bias: &mut T,
        err: &mut [T],
        cache: &mut KernelCache<'_, T>,
    ) -> bool {
        let (i, j, c) = (self.i, self.j, self.c);
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai, aj) = (alpha[i], alpha[j]);
        let zero = T::zero();
        let (lo, hi) = if yi != yj {
            (zero.max(aj - ai), c.min(c + aj - ai))
        } else {
            (zero.max(ai + aj - c), c.min(ai + aj))
        };
        if lo >= hi {
            return false;
        }
        let row_i = cache.row(i);
        let row_j = cache.row(j);
        let (kii, kjj, kij) = (row_i[i], row_j[j], row_i[j]);
        let eta = T::of(2.0) * kij - kii - kjj;
        if eta >= zero {
            return false;
        }
        let (ei, ej) = (err[i], err[j]);
        let aj_new = (aj - yj * (ei - ej) / eta).max(lo).min(hi);
        let eps = T::of(PROGRESS_EPS);
        if (aj_new - aj).abs() < eps * (aj_new + aj + eps) {
            return false;
        }
        let ai_new = (ai + yi * yj * (aj - aj_new)).max(zero).min(c);
        let (di, dj) = (ai_new - ai, aj_new - aj);
        let b1 = *bias - ei - yi * di * kii - yj * dj * kij;
        let b2 = *bias - ej - yi * di * kij - yj * dj * kjj;
        let b_new = if ai_new > zero && ai_new < c {
            b1
        } else if aj_new > zero && aj_new < c {
            b2
        } else {
            (b1 + b2) / T::of(2.0)
        };
        let db = b_new - *bias;
        for (k, e) in err.iter_mut().enumerate() {
            *e += yi * di * row_i[k] + yj * dj * row_j[k] + db;
        }
        alpha[i] = ai_new;
        alpha[j] = aj_new;
        *bias = b_new;
        true
    }
}

/// Least-recently-used cache of full kernel rows.
struct KernelCache<'a, T> {
    data: &'a [FeatureVector<T>],
    gamma: T,
    capacity: usize,
    rows: HashMap<usize, (Rc<[T]>, u64)>,
    clock: u64,
}

impl<'a, T: Scalar> KernelCache<'a, T> {
    fn new(data: &'a [FeatureVector<T>], gamma: T, capacity: usize) -> Self {
        KernelCache {
            data,
            gamma,
            capacity,
            rows: HashMap::new(),
            clock: 0,
        }
    }

    fn row(&mut self, i: usize) -> Rc<[T]> {
        self.clock += 1;
        if let Some(entry) = self.rows.get_mut(&i) {
            entry.1 = self.clock;
            return Rc::clone(&entry.0);
        }
        if self.rows.len() >= self.capacity {
            let oldest = *self
                .rows
                .iter()
                .min_by_key(|(_, (_, stamp))| *stamp)
                .map(|(k, _)| k)
                .unwrap();
            self.rows.remove(&oldest);
        }
        let xi = &self.data[i];
        let gamma = self.gamma;
        // Each entry is computed independently, so the row is identical for
        // any thread count.
        let row: Vec<T> = self
            .data
            .par_iter()
            .map(|xj| rbf_unchecked(xi, xj, gamma))
            .collect();
        let row: Rc<[T]> = row.into();
        self.rows.insert(i, (Rc::clone(&row), self.clock));
        row
    }
}

/// Dual objective `sum a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective<T: Scalar>(data: &LabeledDataset<T>, alphas: &[T], gamma: T) -> T {
    let y: Vec<T> = data
        .labels()
        .iter()
        .map(|&l| if l == 1 { T::one() } else { -T::one() })
        .collect();
    let x = data.features();
    let mut quad = T::zero();
    for i in 0..x.len() {
        for j in 0..x.len() {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * rbf_unchecked(&x[i], &x[j], gamma);
        }
    }
    alphas.iter().copied().sum::<T>() - quad / T::of(2.0)
}
