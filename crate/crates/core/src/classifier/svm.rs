//! Linear soft-margin SVM trained on the dual with a maximal-violating-pair
//! coordinate ascent (SMO).
//!
//! Dual problem, written as a minimisation:
//!
//! ```text
//! min ½ αᵀQα − Σα   s.t.  0 ≤ αᵢ ≤ c,  Σ αᵢyᵢ = 0,   Qᵢⱼ = yᵢyⱼ xᵢ·xⱼ
//! ```
//!
//! Samples are sorted into a canonical order before training, which makes the
//! fitted model independent of the order the caller supplied them in.

use serde::{Deserialize, Serialize};

use super::{check_dim, Class, ClassifierError, Scaler};
use crate::scalar::{dot, Scalar};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet<T> {
    samples: Vec<(Vec<T>, Class)>,
}

impl<T: Scalar> Default for TrainingSet<T> {
    fn default() -> Self {
        Self { samples: Vec::new() }
    }
}

impl<T: Scalar> TrainingSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(samples: Vec<(Vec<T>, Class)>) -> Result<Self, ClassifierError> {
        let mut set = Self::new();
        for (x, y) in samples {
            set.push(x, y)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, x: Vec<T>, y: Class) -> Result<(), ClassifierError> {
        if let Some((first, _)) = self.samples.first() {
            check_dim(first.len(), x.len())?;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::InvalidParameter("non-finite feature".into()));
        }
        self.samples.push((x, y));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |(x, _)| x.len())
    }

    pub fn samples(&self) -> &[(Vec<T>, Class)] {
        &self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams<T> {
    /// Soft-margin penalty.
    pub c: T,
    /// Stop once the maximal KKT violation falls below this.
    pub tol: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for SvmParams<T> {
    fn default() -> Self {
        Self {
            c: T::lit(DEFAULT_C),
            tol: T::lit(DEFAULT_TOL),
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Trained hyperplane `w·z + b = 0` over standardised features `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SvmModel<T> {
    pub w: Vec<T>,
    pub b: T,
    pub c: T,
    pub scaler: Scaler<T>,
}

impl<T: Scalar> SvmModel<T> {
    pub const KERNEL: &'static str = "linear";

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Signed margin value `w·standardize(x) + b`.
    pub fn decision(&self, x: &[T]) -> Result<T, ClassifierError> {
        check_dim(self.dim(), x.len())?;
        Ok(dot(&self.w, &self.scaler.transform(x)) + self.b)
    }

    /// `f(x) >= 0` is infected; the boundary itself counts as infected.
    pub fn classify(&self, x: &[T]) -> Result<Class, ClassifierError> {
        Ok(if self.decision(x)? >= T::zero() {
            Class::Infected
        } else {
            Class::Healthy
        })
    }

    /// The hyperplane expressed over raw (unstandardised) features.
    pub fn raw_hyperplane(&self) -> (Vec<T>, T) {
        let w: Vec<T> = self.w.iter().zip(&self.scaler.std).map(|(&w, &s)| w / s).collect();
        let shift = dot(&w, &self.scaler.mean);
        (w, self.b - shift)
    }

    pub fn negated(&self) -> SvmModel<T> {
        SvmModel {
            w: self.w.iter().map(|&v| -v).collect(),
            b: -self.b,
            ..self.clone()
        }
    }

    pub(crate) fn validate(&self) -> Result<(), ClassifierError> {
        self.scaler.validate()?;
        check_dim(self.scaler.dim(), self.w.len()).map_err(|e| ClassifierError::MalformedDocument(e.to_string()))?;
        if self.w.iter().any(|v| !v.is_finite()) || !self.b.is_finite() {
            return Err(ClassifierError::MalformedDocument("non-finite hyperplane".into()));
        }
        if self.c.is_nan() || self.c <= T::zero() {
            return Err(ClassifierError::MalformedDocument("c must be positive".into()));
        }
        Ok(())
    }
}

pub fn svm_decision<T: Scalar>(model: &SvmModel<T>, x: &[T]) -> Result<T, ClassifierError> {
    model.decision(x)
}

/// Full solver output: the model plus the dual solution it came from, in
/// the canonical sample order.
#[derive(Debug, Clone)]
pub struct SvmTraining<T> {
    pub model: SvmModel<T>,
    pub alphas: Vec<T>,
    /// Standardised samples, canonical order.
    pub standardized: Vec<Vec<T>>,
    pub labels: Vec<T>,
    pub iterations: usize,
    /// `m(α) − M(α)` at exit.
    pub max_violation: T,
}

impl<T: Scalar> SvmTraining<T> {
    /// `Σα − ½ ΣΣ αᵢαⱼyᵢyⱼ zᵢ·zⱼ` (the maximisation form).
    pub fn dual_objective(&self) -> T {
        dual_objective(&self.standardized, &self.labels, &self.alphas)
    }

    /// Largest violation of the complementary-slackness conditions:
    /// `α=0 ⇒ yf ≥ 1`, `0<α<c ⇒ yf = 1`, `α=c ⇒ yf ≤ 1`.
    pub fn kkt_residual(&self) -> T {
        let c = self.model.c;
        let one = T::one();
        self.standardized
            .iter()
            .zip(&self.labels)
            .zip(&self.alphas)
            .map(|((z, &y), &a)| {
                let m = y * (dot(&self.model.w, z) + self.model.b);
                if a <= T::zero() {
                    (one - m).max(T::zero())
                } else if a >= c {
                    (m - one).max(T::zero())
                } else {
                    (m - one).abs()
                }
            })
            .fold(T::zero(), T::max)
    }
}

pub fn dual_objective<T: Scalar>(z: &[Vec<T>], y: &[T], alpha: &[T]) -> T {
    let mut quad = T::zero();
    for i in 0..z.len() {
        for j in 0..z.len() {
            quad = quad + alpha[i] * alpha[j] * y[i] * y[j] * dot(&z[i], &z[j]);
        }
    }
    alpha.iter().fold(T::zero(), |a, &v| a + v) - T::lit(0.5) * quad
}

pub fn svm_train<T: Scalar>(data: &TrainingSet<T>, c: T, tol: T) -> Result<SvmModel<T>, ClassifierError> {
    let params = SvmParams {
        c,
        tol,
        ..SvmParams::default()
    };
    Ok(train_detailed(data, &params)?.model)
}

fn canonical_order<T: Scalar>(samples: &[(Vec<T>, Class)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| {
        let (xa, ya) = &samples[a];
        let (xb, yb) = &samples[b];
        xa.iter()
            .zip(xb)
            .map(|(p, q)| p.total_cmp_s(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ya.cmp(yb))
    });
    idx
}

pub fn train_detailed<T: Scalar>(
    data: &TrainingSet<T>,
    params: &SvmParams<T>,
) -> Result<SvmTraining<T>, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    let pos = data.samples().iter().filter(|(_, y)| *y == Class::Infected).count();
    if pos == 0 || pos == data.len() {
        return Err(ClassifierError::SingleClassData);
    }
    if !params.c.is_finite() || params.c <= T::zero() {
        return Err(ClassifierError::InvalidParameter("c must be positive".into()));
    }
    if params.tol.is_nan() || params.tol <= T::zero() {
        return Err(ClassifierError::InvalidParameter("tol must be positive".into()));
    }

    let order = canonical_order(data.samples());
    let raw: Vec<Vec<T>> = order.iter().map(|&i| data.samples()[i].0.clone()).collect();
    let labels: Vec<T> = order
        .iter()
        .map(|&i| T::lit(data.samples()[i].1.sign() as f64))
        .collect();
    let scaler = Scaler::fit(&raw);
    let z: Vec<Vec<T>> = raw.iter().map(|x| scaler.transform(x)).collect();

    let sol = Smo::new(&z, &labels, params.c).solve(params.tol, params.max_iterations);
    let hundred = T::lit(100.0);
    if sol.violation >= params.tol && sol.violation > hundred * params.tol {
        return Err(ClassifierError::NoConvergence {
            iterations: sol.iterations,
            violation: sol.violation.to_f64_lossy(),
        });
    }

    let d = scaler.dim();
    let mut w = vec![T::zero(); d];
    for ((zi, &yi), &ai) in z.iter().zip(&labels).zip(&sol.alpha) {
        if ai > T::zero() {
            for (wj, &v) in w.iter_mut().zip(zi) {
                *wj = *wj + ai * yi * v;
            }
        }
    }
    // b: mean of yᵢ − w·zᵢ over margin support vectors; midpoint of the
    // feasible interval when every multiplier sits at a bound.
    let mut sum = T::zero();
    let mut free = 0usize;
    for ((zi, &yi), &ai) in z.iter().zip(&labels).zip(&sol.alpha) {
        if ai > T::zero() && ai < params.c {
            sum = sum + (yi - dot(&w, zi));
            free += 1;
        }
    }
    let b = if free > 0 {
        sum / T::from_count(free)
    } else {
        (sol.up_max + sol.low_min) * T::lit(0.5)
    };

    Ok(SvmTraining {
        model: SvmModel {
            w,
            b,
            c: params.c,
            scaler,
        },
        alphas: sol.alpha,
        standardized: z,
        labels,
        iterations: sol.iterations,
        max_violation: sol.violation,
    })
}

struct Smo<'a, T> {
    y: &'a [T],
    c: T,
    kernel: Vec<Vec<T>>,
    alpha: Vec<T>,
    grad: Vec<T>,
}

struct SmoSolution<T> {
    alpha: Vec<T>,
    iterations: usize,
    violation: T,
    up_max: T,
    low_min: T,
}

impl<'a, T: Scalar> Smo<'a, T> {
    fn new(z: &[Vec<T>], y: &'a [T], c: T) -> Self {
        let n = z.len();
        let kernel = (0..n).map(|i| (0..n).map(|j| dot(&z[i], &z[j])).collect()).collect();
        Self {
            y,
            c,
            kernel,
            alpha: vec![T::zero(); n],
            grad: vec![-T::one(); n],
        }
    }

    fn q(&self, i: usize, j: usize) -> T {
        self.y[i] * self.y[j] * self.kernel[i][j]
    }

    fn in_up(&self, t: usize) -> bool {
        let pos = self.y[t] > T::zero();
        (pos && self.alpha[t] < self.c) || (!pos && self.alpha[t] > T::zero())
    }

    fn in_low(&self, t: usize) -> bool {
        let pos = self.y[t] > T::zero();
        (pos && self.alpha[t] > T::zero()) || (!pos && self.alpha[t] < self.c)
    }

    /// Maximal violating pair `(i, j, m, M)`; ties keep the lowest index.
    fn select(&self) -> (Option<usize>, Option<usize>, T, T) {
        let mut i = None;
        let mut m = T::neg_infinity();
        let mut j = None;
        let mut big_m = T::infinity();
        for t in 0..self.y.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) && v > m {
                m = v;
                i = Some(t);
            }
            if self.in_low(t) && v < big_m {
                big_m = v;
                j = Some(t);
            }
        }
        (i, j, m, big_m)
    }

    fn refresh_gradient(&mut self) {
        let n = self.y.len();
        for t in 0..n {
            let mut g = -T::one();
            for s in 0..n {
                if self.alpha[s] > T::zero() {
                    g = g + self.q(t, s) * self.alpha[s];
                }
            }
            self.grad[t] = g;
        }
    }

    fn solve(mut self, tol: T, max_iterations: usize) -> SmoSolution<T> {
        let tau = T::lit(1e-12);
        let mut iterations = 0;
        let mut refreshed = false;
        loop {
            let (i, j, m, big_m) = self.select();
            let violation = m - big_m;
            let (Some(i), Some(j)) = (i, j) else {
                return self.finish(iterations, T::zero(), m, big_m);
            };
            if violation < tol {
                // Confirm against a freshly computed gradient before stopping.
                if refreshed {
                    return self.finish(iterations, violation, m, big_m);
                }
                self.refresh_gradient();
                refreshed = true;
                continue;
            }
            if iterations >= max_iterations {
                return self.finish(iterations, violation, m, big_m);
            }
            refreshed = false;
            iterations += 1;
            self.update_pair(i, j, tau);
        }
    }

    fn update_pair(&mut self, i: usize, j: usize, tau: T) {
        let c = self.c;
        let zero = T::zero();
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let qii = self.q(i, i);
        let qjj = self.q(j, j);
        let qij = self.q(i, j);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.y[i] != self.y[j] {
            let mut quad = qii + qjj + qij + qij;
            if quad <= zero {
                quad = tau;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai = ai + delta;
            aj = aj + delta;
            if diff > zero {
                if aj < zero {
                    aj = zero;
                    ai = diff;
                }
            } else if ai < zero {
                ai = zero;
                aj = -diff;
            }
            if diff > zero {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = qii + qjj - qij - qij;
            if quad <= zero {
                quad = tau;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai = ai - delta;
            aj = aj + delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < zero {
                aj = zero;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < zero {
                ai = zero;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..self.y.len() {
            self.grad[t] = self.grad[t] + self.q(t, i) * di + self.q(t, j) * dj;
        }
    }

    fn finish(self, iterations: usize, violation: T, m: T, big_m: T) -> SmoSolution<T> {
        SmoSolution {
            alpha: self.alpha,
            iterations,
            violation,
            up_max: m,
            low_min: big_m,
        }
    }
}
