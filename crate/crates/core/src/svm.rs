//! Soft-margin kernel SVM trained with sequential minimal optimization.
//!
//! The solver maximizes the dual
//! `W(a) = sum a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)` subject to
//! `0 <= a_i <= C` and `sum a_i y_i = 0`. Each step picks the maximal
//! violating pair using second-order gain (the libsvm working-set rule),
//! updates both multipliers analytically and keeps the gradient current.
//! Training stops when the largest KKT violation drops below `tol`.

use std::fmt;
use std::io::{BufRead, Write};

use crate::bits::BitVec;
use crate::error::{Error, Result};

/// A training or query row. Kernels only need inner products and squared
/// distances, which bit rows answer with popcounts.
pub trait Sample: Clone {
    fn width(&self) -> usize;
    fn dot(&self, other: &Self) -> f64;
    fn sq_dist(&self, other: &Self) -> f64;
}

impl Sample for BitVec {
    fn width(&self) -> usize {
        self.len()
    }

    fn dot(&self, other: &Self) -> f64 {
        self.and_count(other) as f64
    }

    fn sq_dist(&self, other: &Self) -> f64 {
        self.xor_count(other) as f64
    }
}

impl Sample for Vec<f64> {
    fn width(&self) -> usize {
        self.len()
    }

    fn dot(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    fn sq_dist(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    /// `(gamma <a,b> + coef0)^degree`
    Polynomial { degree: u32, gamma: f64, coef0: f64 },
    /// `exp(-gamma |a-b|^2)`
    Rbf { gamma: f64 },
    /// `tanh(gamma <a,b> + coef0)`
    Sigmoid { gamma: f64, coef0: f64 },
}

impl Kernel {
    pub fn eval<S: Sample>(&self, a: &S, b: &S) -> f64 {
        match *self {
            Kernel::Linear => a.dot(b),
            Kernel::Polynomial { degree, gamma, coef0 } => {
                (gamma * a.dot(b) + coef0).powi(degree as i32)
            }
            Kernel::Rbf { gamma } => (-gamma * a.sq_dist(b)).exp(),
            Kernel::Sigmoid { gamma, coef0 } => (gamma * a.dot(b) + coef0).tanh(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Param(m.to_string()));
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Polynomial { degree, gamma, coef0 } => {
                if degree < 1 {
                    bad("polynomial degree must be at least 1")
                } else if !(gamma > 0.0 && gamma.is_finite()) || !coef0.is_finite() {
                    bad("polynomial gamma must be positive and coef0 finite")
                } else {
                    Ok(())
                }
            }
            Kernel::Rbf { gamma } | Kernel::Sigmoid { gamma, .. } if !(gamma > 0.0 && gamma.is_finite()) => {
                bad("gamma must be positive")
            }
            Kernel::Sigmoid { coef0, .. } if !coef0.is_finite() => bad("coef0 must be finite"),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Kernel::Linear => write!(f, "linear"),
            Kernel::Polynomial { degree, gamma, coef0 } => {
                write!(f, "polynomial degree={degree} gamma={gamma} coef0={coef0}")
            }
            Kernel::Rbf { gamma } => write!(f, "rbf gamma={gamma}"),
            Kernel::Sigmoid { gamma, coef0 } => write!(f, "sigmoid gamma={gamma} coef0={coef0}"),
        }
    }
}

/// Kernel choice before the feature count is known; `gamma: None` resolves
/// to `1 / feature_count`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Polynomial { degree: u32, gamma: Option<f64>, coef0: f64 },
    Rbf { gamma: Option<f64> },
    Sigmoid { gamma: Option<f64>, coef0: f64 },
}

impl KernelSpec {
    pub fn resolve(&self, n_features: usize) -> Kernel {
        let default = 1.0 / n_features.max(1) as f64;
        match *self {
            KernelSpec::Linear => Kernel::Linear,
            KernelSpec::Polynomial { degree, gamma, coef0 } => Kernel::Polynomial {
                degree,
                gamma: gamma.unwrap_or(default),
                coef0,
            },
            KernelSpec::Rbf { gamma } => Kernel::Rbf { gamma: gamma.unwrap_or(default) },
            KernelSpec::Sigmoid { gamma, coef0 } => Kernel::Sigmoid {
                gamma: gamma.unwrap_or(default),
                coef0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SvmConfig {
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
    /// Cap on pair updates.
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::Rbf { gamma: None },
            c: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

impl SvmConfig {
    /// Same config with any default gamma fixed for `n_features` inputs.
    pub fn resolved(&self, n_features: usize) -> Self {
        let kernel = match self.kernel.resolve(n_features) {
            Kernel::Linear => KernelSpec::Linear,
            Kernel::Polynomial { degree, gamma, coef0 } => KernelSpec::Polynomial { degree, gamma: Some(gamma), coef0 },
            Kernel::Rbf { gamma } => KernelSpec::Rbf { gamma: Some(gamma) },
            Kernel::Sigmoid { gamma, coef0 } => KernelSpec::Sigmoid { gamma: Some(gamma), coef0 },
        };
        Self { kernel, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Param(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Param(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Param("max_iter must be positive".into()));
        }
        self.kernel.resolve(1).validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<S> {
    pub kernel: Kernel,
    pub c: f64,
    pub support_vectors: Vec<S>,
    pub alphas: Vec<f64>,
    /// +1 / -1 per support vector.
    pub labels: Vec<f64>,
    pub bias: f64,
    pub width: usize,
}

/// Full solver output, including the multipliers of non-support vectors.
#[derive(Debug, Clone)]
pub struct Solution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
}

/// Precomputed kernel matrix for one training set.
pub struct Gram {
    n: usize,
    k: Vec<f64>,
}

impl Gram {
    pub fn new<S: Sample>(x: &[S], kernel: &Kernel) -> Result<Self> {
        let n = x.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval(&x[i], &x[j]);
                if !v.is_finite() {
                    return Err(Error::Svm(format!("non-finite kernel value K({i},{j}) = {v}")));
                }
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        Ok(Self { n, k })
    }

    /// Kernel matrix restricted to `idx` (rows and columns, in that order).
    pub fn subset(&self, idx: &[usize]) -> Self {
        let n = idx.len();
        let mut k = Vec::with_capacity(n * n);
        for &i in idx {
            k.extend(idx.iter().map(|&j| self.get(i, j)));
        }
        Self { n, k }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// `y` holds booleans; true is the positive class.
pub fn check_training_set<S: Sample>(x: &[S], y: &[bool]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Svm("empty training set".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Svm(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let width = x[0].width();
    if x.iter().any(|r| r.width() != width) {
        return Err(Error::Svm("rows have different widths".into()));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::Svm("training set has a single class".into()));
    }
    Ok(width)
}

pub fn train<S: Sample>(x: &[S], y: &[bool], config: &SvmConfig) -> Result<SvmModel<S>> {
    config.validate()?;
    let width = check_training_set(x, y)?;
    let kernel = config.kernel.resolve(width);
    kernel.validate()?;
    let gram = Gram::new(x, &kernel)?;
    let sol = solve(&gram, y, config.c, config.tol, config.max_iter);
    if !sol.converged {
        log::warn!("smo stopped after {} iterations without reaching tol {}", sol.iterations, config.tol);
    }
    let mut model = SvmModel {
        kernel,
        c: config.c,
        support_vectors: Vec::new(),
        alphas: Vec::new(),
        labels: Vec::new(),
        bias: sol.bias,
        width,
    };
    for (i, &a) in sol.alphas.iter().enumerate() {
        if a > 0.0 {
            model.support_vectors.push(x[i].clone());
            model.alphas.push(a);
            model.labels.push(sign(y[i]));
        }
    }
    Ok(model)
}

#[inline]
fn sign(positive: bool) -> f64 {
    if positive {
        1.0
    } else {
        -1.0
    }
}

const TAU: f64 = 1e-12;

/// SMO on a precomputed Gram matrix.
pub fn solve(gram: &Gram, y: &[bool], c: f64, tol: f64, max_iter: usize) -> Solution {
    let n = gram.len();
    let ys: Vec<f64> = y.iter().map(|&v| sign(v)).collect();
    let q = |i: usize, j: usize| ys[i] * ys[j] * gram.get(i, j);
    let mut alpha = vec![0.0; n];
    // gradient of the minimization form 1/2 a'Qa - e'a
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal -y G over the up set
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], ys[t]) {
                let v = -ys[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        // j: best second-order gain over the low set
        let mut gmin = f64::INFINITY;
        let mut best_gain = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            if !in_low(alpha[t], ys[t]) {
                continue;
            }
            let v = -ys[t] * grad[t];
            if v < gmin {
                gmin = v;
            }
            if let Some(i) = i_sel {
                let b = gmax - v;
                if b > 0.0 {
                    let a = (gram.get(i, i) + gram.get(t, t) - 2.0 * gram.get(i, t)).max(TAU);
                    let gain = -(b * b) / a;
                    if gain <= best_gain {
                        best_gain = gain;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        if gmax - gmin < tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let quad = (gram.get(i, i) + gram.get(j, j) - 2.0 * gram.get(i, j)).max(TAU);
        if ys[i] != ys[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // bias from free multipliers; otherwise the middle of the feasible interval
    let mut sum_free = 0.0;
    let mut n_free = 0;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = ys[t] * grad[t];
        if alpha[t] >= c {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };

    let objective = dual_objective(gram, y, &alpha);
    Solution {
        alphas: alpha,
        bias: -rho,
        iterations,
        converged,
        objective,
    }
}

/// Out-of-fold decision values: for each `(train, test)` fold, train on
/// `train` and score `test`, all from one precomputed Gram matrix over every
/// record. Returns one score per record.
pub fn out_of_fold_scores(
    gram: &Gram,
    labels: &[bool],
    folds: &[(Vec<usize>, Vec<usize>)],
    config: &SvmConfig,
) -> Result<Vec<f64>> {
    let mut scores = vec![f64::NAN; labels.len()];
    for (train, test) in folds {
        let y: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
            return Err(Error::Svm("training fold has a single class".into()));
        }
        let sol = solve(&gram.subset(train), &y, config.c, config.tol, config.max_iter);
        for &t in test {
            scores[t] = train
                .iter()
                .zip(&sol.alphas)
                .zip(&y)
                .filter(|((_, &a), _)| a > 0.0)
                .map(|((&i, &a), &yi)| a * sign(yi) * gram.get(i, t))
                .sum::<f64>()
                + sol.bias;
        }
    }
    Ok(scores)
}

/// `sum a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij`
pub fn dual_objective(gram: &Gram, y: &[bool], alpha: &[f64]) -> f64 {
    let n = gram.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * sign(y[i]) * sign(y[j]) * gram.get(i, j);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

impl<S: Sample> SvmModel<S> {
    pub fn decision_value(&self, x: &S) -> Result<f64> {
        if x.width() != self.width {
            return Err(Error::Svm(format!(
                "query has width {}, model expects {}",
                x.width(),
                self.width
            )));
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.labels)
            .map(|((sv, a), y)| a * y * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    /// True is the positive class; a decision value of exactly 0 is positive.
    pub fn predict(&self, x: &S) -> Result<bool> {
        Ok(self.decision_value(x)? >= 0.0)
    }

    /// Dual objective over the stored support vectors.
    pub fn dual_objective(&self) -> f64 {
        let mut quad = 0.0;
        for (i, a) in self.support_vectors.iter().enumerate() {
            for (j, b) in self.support_vectors.iter().enumerate() {
                quad += self.alphas[i] * self.alphas[j] * self.labels[i] * self.labels[j] * self.kernel.eval(a, b);
            }
        }
        self.alphas.iter().sum::<f64>() - 0.5 * quad
    }
}

/// Classification of a decision value, with the tie going to the positive class.
pub fn predict_from_value(value: f64) -> bool {
    value >= 0.0
}

const MODEL_MAGIC: &str = "cadmine-svm-model v1";

/// A trained model over named binary features, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub feature_names: Vec<String>,
    pub model: SvmModel<BitVec>,
}

impl SavedModel {
    /// Line-oriented text:
    ///
    /// ```text
    /// cadmine-svm-model v1
    /// kernel rbf gamma=0.5
    /// c 1
    /// bias -0.25
    /// features 3
    /// feature DM
    /// ...
    /// support_vectors 2
    /// sv +1 0.75 101
    /// sv -1 0.75 010
    /// ```
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<model>", e);
        let m = &self.model;
        writeln!(w, "{MODEL_MAGIC}").map_err(io)?;
        writeln!(w, "kernel {}", m.kernel).map_err(io)?;
        writeln!(w, "c {}", m.c).map_err(io)?;
        writeln!(w, "bias {}", m.bias).map_err(io)?;
        writeln!(w, "features {}", self.feature_names.len()).map_err(io)?;
        for n in &self.feature_names {
            writeln!(w, "feature {n}").map_err(io)?;
        }
        writeln!(w, "support_vectors {}", m.support_vectors.len()).map_err(io)?;
        for ((sv, a), y) in m.support_vectors.iter().zip(&m.alphas).zip(&m.labels) {
            let bits: String = sv.iter().map(|b| if b { '1' } else { '0' }).collect();
            writeln!(w, "sv {} {a} {bits}", if *y > 0.0 { "+1" } else { "-1" }).map_err(io)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((n, Err(e))) => Err(Error::Parse { line: n, message: e.to_string() }),
                None => Err(Error::Parse { line: 0, message: format!("unexpected end of model, wanted {what}") }),
            }
        };
        let perr = |line: usize, message: String| Error::Parse { line, message };

        let (n, magic) = next("header")?;
        if magic.trim_end() != MODEL_MAGIC {
            return Err(perr(n, "not a cadmine svm model".into()));
        }
        let (n, l) = next("kernel")?;
        let kernel = parse_kernel(l.strip_prefix("kernel ").ok_or_else(|| perr(n, "expected kernel".into()))?)
            .map_err(|m| perr(n, m))?;
        kernel.validate().map_err(|e| perr(n, e.to_string()))?;
        let c = keyed_f64(&mut next, "c")?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(perr(n + 1, "c must be positive".into()));
        }
        let bias = keyed_f64(&mut next, "bias")?;
        if !bias.is_finite() {
            return Err(perr(n + 2, "bias must be finite".into()));
        }
        let n_features = keyed_usize(&mut next, "features")?;
        let mut feature_names = Vec::new();
        for _ in 0..n_features {
            let (n, l) = next("feature")?;
            let name = l.strip_prefix("feature ").ok_or_else(|| perr(n, "expected feature".into()))?;
            feature_names.push(name.to_string());
        }
        let n_sv = keyed_usize(&mut next, "support_vectors")?;
        let mut support_vectors = Vec::new();
        let mut alphas = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n_sv {
            let (n, l) = next("sv")?;
            let parts: Vec<&str> = l.split(' ').collect();
            let [tag, y, a, bits] = parts[..] else {
                return Err(perr(n, "expected `sv <+1|-1> <alpha> <bits>`".into()));
            };
            if tag != "sv" {
                return Err(perr(n, "expected sv".into()));
            }
            let y = match y {
                "+1" => 1.0,
                "-1" => -1.0,
                _ => return Err(perr(n, format!("bad label {y:?}"))),
            };
            let a: f64 = a.parse().map_err(|_| perr(n, format!("bad alpha {a:?}")))?;
            if !(a > 0.0 && a <= c * (1.0 + 1e-9)) {
                return Err(perr(n, format!("alpha {a} outside (0, C]")));
            }
            if bits.len() != n_features {
                return Err(perr(n, format!("support vector has {} bits, expected {n_features}", bits.len())));
            }
            let row = bits
                .bytes()
                .map(|b| match b {
                    b'0' => Ok(false),
                    b'1' => Ok(true),
                    _ => Err(perr(n, "support vector bits must be 0/1".into())),
                })
                .collect::<Result<BitVec>>()?;
            support_vectors.push(row);
            alphas.push(a);
            labels.push(y);
        }
        Ok(SavedModel {
            feature_names,
            model: SvmModel {
                kernel,
                c,
                support_vectors,
                alphas,
                labels,
                bias,
                width: n_features,
            },
        })
    }
}

fn keyed<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.strip_prefix(key)?.strip_prefix(' ')
}

fn keyed_f64(next: &mut impl FnMut(&str) -> Result<(usize, String)>, key: &str) -> Result<f64> {
    let (n, l) = next(key)?;
    keyed(&l, key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse { line: n, message: format!("expected `{key} <number>`") })
}

fn keyed_usize(next: &mut impl FnMut(&str) -> Result<(usize, String)>, key: &str) -> Result<usize> {
    let (n, l) = next(key)?;
    let v: usize = keyed(&l, key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse { line: n, message: format!("expected `{key} <count>`") })?;
    // every entry takes a line; refuse counts no file could hold
    if v > 1 << 28 {
        return Err(Error::Parse { line: n, message: format!("{key} count {v} is too large") });
    }
    Ok(v)
}

fn parse_kernel(s: &str) -> std::result::Result<Kernel, String> {
    let mut parts = s.split(' ');
    let name = parts.next().unwrap_or_default();
    let mut degree = None;
    let mut gamma = None;
    let mut coef0 = None;
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| format!("bad kernel parameter {p:?}"))?;
        match k {
            "degree" => degree = Some(v.parse::<u32>().map_err(|_| format!("bad degree {v:?}"))?),
            "gamma" => gamma = Some(v.parse::<f64>().map_err(|_| format!("bad gamma {v:?}"))?),
            "coef0" => coef0 = Some(v.parse::<f64>().map_err(|_| format!("bad coef0 {v:?}"))?),
            _ => return Err(format!("unknown kernel parameter {k:?}")),
        }
    }
    let need = |x: Option<f64>, what: &str| x.ok_or_else(|| format!("kernel {name} needs {what}"));
    Ok(match name {
        "linear" => Kernel::Linear,
        "polynomial" => Kernel::Polynomial {
            degree: degree.ok_or("polynomial kernel needs degree")?,
            gamma: need(gamma, "gamma")?,
            coef0: need(coef0, "coef0")?,
        },
        "rbf" => Kernel::Rbf { gamma: need(gamma, "gamma")? },
        "sigmoid" => Kernel::Sigmoid { gamma: need(gamma, "gamma")?, coef0: need(coef0, "coef0")? },
        _ => return Err(format!("unknown kernel {name:?}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear(c: f64) -> SvmConfig {
        SvmConfig { kernel: KernelSpec::Linear, c, ..SvmConfig::default() }
    }

    #[test]
    fn two_points_bisector() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 0.0]];
        let y = [true, false];
        let m = train(&x, &y, &linear(1e6)).unwrap();
        assert_eq!(m.support_vectors.len(), 2);
        assert!((m.alphas[0] - m.alphas[1]).abs() < 1e-9);
        // midpoint (2, 1) lies on the boundary
        assert!(m.decision_value(&vec![2.0, 1.0]).unwrap().abs() < 1e-6);
        assert!((m.decision_value(&x[0]).unwrap() - 1.0).abs() < 1e-3);
        assert!((m.decision_value(&x[1]).unwrap() + 1.0).abs() < 1e-3);
    }

    #[test]
    fn symmetric_pair_zero_at_origin() {
        let x = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let m = train(&x, &[true, false], &linear(10.0)).unwrap();
        assert!(m.decision_value(&vec![0.0, 0.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn xor_rbf_fits_training_set() {
        let x: Vec<BitVec> = [[0, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|r| r.iter().map(|&b| b == 1).collect())
            .collect();
        let y = [false, true, true, false];
        let cfg = SvmConfig { kernel: KernelSpec::Rbf { gamma: Some(1.0) }, c: 10.0, ..SvmConfig::default() };
        let m = train(&x, &y, &cfg).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi).unwrap(), yi);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(train(&x, &[true, true], &linear(1.0)).is_err());
        assert!(train::<Vec<f64>>(&[], &[], &linear(1.0)).is_err());
        assert!(train(&[vec![1.0], vec![1.0, 2.0]], &[true, false], &linear(1.0)).is_err());
        assert!(train(&x, &[true, false], &linear(0.0)).is_err());
        let big = SvmConfig { kernel: KernelSpec::Polynomial { degree: 400, gamma: Some(1e3), coef0: 1e3 }, ..linear(1.0) };
        assert!(matches!(train(&[vec![1e3], vec![2e3]], &[true, false], &big), Err(Error::Svm(_))));
        let m = train(&x, &[true, false], &linear(1.0)).unwrap();
        assert!(m.decision_value(&vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn tie_goes_positive() {
        assert!(predict_from_value(0.0));
        assert!(predict_from_value(2.3));
        assert!(!predict_from_value(-0.1));
    }

    #[test]
    fn model_text_roundtrip() {
        let x: Vec<BitVec> = (0..8u32).map(|i| (0..3).map(|b| i >> b & 1 == 1).collect()).collect();
        let y: Vec<bool> = (0..8u32).map(|i| i & 1 == 1 || i == 6).collect();
        let model = train(&x, &y, &SvmConfig::default()).unwrap();
        let saved = SavedModel { feature_names: vec!["a".into(), "b^c".into(), "d e".into()], model };
        let mut buf = Vec::new();
        saved.write(&mut buf).unwrap();
        let back = SavedModel::read(buf.as_slice()).unwrap();
        assert_eq!(back, saved);
    }

    #[test]
    fn model_parse_errors() {
        assert!(SavedModel::read("".as_bytes()).is_err());
        assert!(SavedModel::read("cadmine-svm-model v1\nkernel rbf\n".as_bytes()).is_err());
        let bad_sv = "cadmine-svm-model v1\nkernel linear\nc 1\nbias 0\nfeatures 1\nfeature a\nsupport_vectors 1\nsv +1 0.5 01\n";
        assert!(SavedModel::read(bad_sv.as_bytes()).is_err());
        let huge = "cadmine-svm-model v1\nkernel linear\nc 1\nbias 0\nfeatures 99999999999\n";
        assert!(SavedModel::read(huge.as_bytes()).is_err());
    }

    fn kernels() -> Vec<Kernel> {
        vec![
            Kernel::Linear,
            Kernel::Polynomial { degree: 3, gamma: 0.5, coef0: 1.0 },
            Kernel::Rbf { gamma: 0.7 },
            Kernel::Sigmoid { gamma: 0.1, coef0: -0.5 },
        ]
    }

    proptest! {
        #[test]
        fn kernels_are_symmetric(a in proptest::collection::vec(-3.0f64..3.0, 5), b in proptest::collection::vec(-3.0f64..3.0, 5)) {
            for k in kernels() {
                prop_assert_eq!(k.eval(&a, &b), k.eval(&b, &a));
            }
            prop_assert_eq!(Kernel::Rbf { gamma: 0.7 }.eval(&a, &a), 1.0);
        }

        #[test]
        fn bit_rows_match_dense_rows(a in proptest::collection::vec(any::<bool>(), 1..100), seed in any::<u64>()) {
            let b: Vec<bool> = a.iter().enumerate().map(|(i, x)| x ^ (seed >> (i % 64) & 1 == 1)).collect();
            let (ba, bb): (BitVec, BitVec) = (a.iter().copied().collect(), b.iter().copied().collect());
            let da: Vec<f64> = a.iter().map(|&x| x as u8 as f64).collect();
            let db: Vec<f64> = b.iter().map(|&x| x as u8 as f64).collect();
            for k in kernels() {
                prop_assert!((k.eval(&ba, &bb) - k.eval(&da, &db)).abs() < 1e-9);
            }
        }
    }
}
