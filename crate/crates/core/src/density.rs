//! Gaussian kernel density estimation of the input marginal and the
//! self-normalized importance weights built from it.

use rayon::prelude::*;

use crate::dataset::{DiscreteXDataset, Points};
use crate::{Error, Real, Result};

/// How the KDE bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BandwidthRule<T> {
    /// h = ½ N^{-1/(2 d_x + 3)}.
    #[default]
    Auto,
    Fixed(T),
}

impl<T: Real> BandwidthRule<T> {
    pub fn resolve(self, n: usize, dx: usize) -> Result<T> {
        match self {
            BandwidthRule::Auto => Ok(default_bandwidth(n, dx)),
            BandwidthRule::Fixed(h) if h > T::zero() && h.is_finite() => Ok(h),
            BandwidthRule::Fixed(h) => Err(Error::Invalid(format!(
                "bandwidth must be positive, got {h}"
            ))),
        }
    }
}

/// Per-sample weights with mean one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    w: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    /// Accepts `w` if every entry is finite and non-negative and Σ w = N.
    pub fn new(w: Vec<T>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Invalid("empty weight vector".into()));
        }
        if let Some(bad) = w.iter().find(|v| !v.is_finite() || **v < T::zero()) {
            return Err(Error::Invalid(format!(
                "weights must be finite and non-negative, got {bad}"
            )));
        }
        let n = T::from_count(w.len());
        let sum = crate::math::ordered_sum(&w);
        if (sum - n).abs() > Self::tolerance(w.len()) {
            return Err(Error::Invalid(format!(
                "weights sum to {sum}, expected {n}"
            )));
        }
        Ok(Self { w })
    }

    /// Rescales non-negative raw weights so they sum to N.
    pub fn normalized(raw: Vec<T>) -> Result<Self> {
        let sum = crate::math::ordered_sum(&raw);
        if !(sum > T::zero()) || !sum.is_finite() {
            return Err(Error::Invalid(format!(
                "cannot normalize weights with sum {sum}"
            )));
        }
        let scale = T::from_count(raw.len()) / sum;
        Self::new(raw.into_iter().map(|v| v * scale).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            w: vec![T::one(); n],
        }
    }

    pub(crate) fn tolerance(n: usize) -> T {
        T::lit(1e-9).max(T::epsilon() * T::from_count(n) * T::lit(8.0))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn into_vec(self) -> Vec<T> {
        self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn sum(&self) -> T {
        crate::math::ordered_sum(&self.w)
    }
}

/// ½ N^{-1/(2 d_x + 3)}.
pub fn default_bandwidth<T: Real>(n: usize, dx: usize) -> T {
    T::lit(0.5) * T::from_count(n).powf(-T::from_count(2 * dx + 3).recip())
}

fn log_kernel_norm<T: Real>(dim: usize, h: T) -> T {
    // log of h^d (2π)^{d/2}
    let d = T::from_count(dim);
    d * h.ln() + T::lit(0.5) * d * (T::lit(2.0) * T::PI()).ln()
}

#[inline]
fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |s, (&p, &q)| s + (p - q) * (p - q))
}

/// Gaussian product-kernel density estimate at `query`:
/// (1 / (N h^d)) Σ_i φ((X_i − query) / h).
pub fn kde<T: Real>(xs: &Points<T>, query: &[T], h: T) -> Result<T> {
    if !(h > T::zero()) {
        return Err(Error::Domain(format!(
            "bandwidth must be positive, got {h}"
        )));
    }
    if query.len() != xs.dim() {
        return Err(Error::Dimension {
            expected: xs.dim(),
            got: query.len(),
        });
    }
    let inv = (T::lit(2.0) * h * h).recip();
    let s = xs
        .rows()
        .map(|r| (-sq_dist(r, query) * inv).exp())
        .fold(T::zero(), |a, v| a + v);
    Ok(s / T::from_count(xs.len()) / log_kernel_norm(xs.dim(), h).exp())
}

/// Log of the leave-one-out density estimate at every sample,
/// log[(1 / ((N−1) h^d)) Σ_{j≠i} φ((X_j − X_i)/h)], via log-sum-exp.
pub fn loo_log_density<T: Real>(xs: &Points<T>, h: T) -> Result<Vec<T>> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::Invalid("leave-one-out density needs N >= 2".into()));
    }
    if !(h > T::zero()) {
        return Err(Error::Domain(format!(
            "bandwidth must be positive, got {h}"
        )));
    }
    let inv = (T::lit(2.0) * h * h).recip();
    let offset = log_kernel_norm(xs.dim(), h) + T::from_count(n - 1).ln();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let p = xs.row(i);
            let expo = |j: usize| -sq_dist(xs.row(j), p) * inv;
            let m = (0..n)
                .filter(|&j| j != i)
                .map(expo)
                .fold(T::neg_infinity(), T::max);
            let s = (0..n)
                .filter(|&j| j != i)
                .map(|j| (expo(j) - m).exp())
                .fold(T::zero(), |a, v| a + v);
            let lf = m + s.ln() - offset;
            if lf.is_finite() {
                Ok(lf)
            } else {
                Err(Error::Domain(format!(
                    "density estimate at sample {i} is zero"
                )))
            }
        })
        .collect()
}

/// w_i = (N / f̃(X_i)) / Σ_j 1/f̃(X_j), with f̃ the leave-one-out KDE.
/// The uniform target density is constant and cancels in the normalization.
pub fn uniform_importance_weights<T: Real>(
    xs: &Points<T>,
    rule: BandwidthRule<T>,
) -> Result<WeightVector<T>> {
    let h = rule.resolve(xs.len(), xs.dim())?;
    let logf = loo_log_density(xs, h)?;
    let top = logf.iter().map(|&l| -l).fold(T::neg_infinity(), T::max);
    let raw: Vec<T> = logf.iter().map(|&l| (-l - top).exp()).collect();
    WeightVector::normalized(raw)
}

/// w_i = N q(X_i) / n_{X_i}: retargets label frequencies to the prior `q`.
/// `None` means the uniform prior over the alphabet.
pub fn discrete_prior_weights<T: Real>(
    data: &DiscreteXDataset<T>,
    target: Option<&[T]>,
) -> Result<WeightVector<T>> {
    let m = data.alphabet_size();
    let uniform;
    let q = match target {
        Some(q) => q,
        None => {
            uniform = vec![T::from_count(m).recip(); m];
            &uniform
        }
    };
    validate_prior(q, m)?;
    let counts = data.label_counts();
    for (l, (&c, &p)) in counts.iter().zip(q).enumerate() {
        if c == 0 && p > T::zero() {
            return Err(Error::Invalid(format!(
                "target prior puts mass {p} on label {:?} which has no samples",
                data.label_name(l)
            )));
        }
    }
    let n = T::from_count(data.n());
    let raw = data
        .labels()
        .iter()
        .map(|&l| n * q[l] / T::from_count(counts[l]))
        .collect();
    WeightVector::normalized(raw)
}

/// A probability vector of length `m` (sum within 1e-9 of one).
pub fn validate_prior<T: Real>(q: &[T], m: usize) -> Result<()> {
    if q.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: q.len(),
        });
    }
    if q.iter().any(|p| !p.is_finite() || *p < T::zero()) {
        return Err(Error::Invalid(
            "prior entries must be finite and non-negative".into(),
        ));
    }
    let s = crate::math::ordered_sum(q);
    if (s - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) {
        return Err(Error::Invalid(format!("prior sums to {s}, expected 1")));
    }
    Ok(())
}
