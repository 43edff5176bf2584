//! Sample-based information estimators: KSG mutual information,
//! Kozachenko–Leonenko entropy, and uniform mutual information (UMI) for
//! continuous and categorical inputs.

use rayon::prelude::*;

use crate::dataset::{ContinuousDataset, DiscreteXDataset, Points};
use crate::density::{self, BandwidthRule, WeightVector};
use crate::knn::{regularize_radius, same_label_radii, NeighborIndex};
use crate::math::{digamma, digamma_count, ordered_sum, unit_ball_volume, Metric};
use crate::{Estimate, Real, Result};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_C_REG: f64 = 0.01;

/// Shared estimator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig<T> {
    pub k: usize,
    /// Scale of the k-NN radius floor (c_reg k / N)^{1/d}.
    pub c_reg: T,
    pub bandwidth: BandwidthRule<T>,
    /// Input prior for categorical X; `None` means uniform.
    pub target_prior: Option<Vec<T>>,
}

impl<T: Real> Default for EstimatorConfig<T> {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            c_reg: T::lit(DEFAULT_C_REG),
            bandwidth: BandwidthRule::Auto,
            target_prior: None,
        }
    }
}

impl<T: Real> EstimatorConfig<T> {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XKind {
    Continuous,
    Discrete,
}

/// Warnings for k outside the ranges where the estimators are known to be
/// consistent: k > max(d_y/d_x, d_x/d_y) for continuous X, and
/// (ln N)^{d_y} < k < √N / (5 ln N) for categorical X. Never an error.
pub fn validate_config<T: Real>(
    cfg: &EstimatorConfig<T>,
    n: usize,
    dx: usize,
    dy: usize,
    kind: XKind,
) -> Vec<String> {
    let mut warnings = Vec::new();
    let k = cfg.k as f64;
    if cfg.k == 0 {
        warnings.push("k must be at least 1".to_owned());
        return warnings;
    }
    if n > 1 && cfg.k > n - 1 {
        warnings.push(format!("k = {} exceeds N - 1 = {}", cfg.k, n - 1));
    }
    match kind {
        XKind::Continuous => {
            let (dx, dy) = (dx.max(1) as f64, dy.max(1) as f64);
            if k <= dy / dx {
                warnings.push(format!("k ≤ d_y/d_x ({k} ≤ {})", dy / dx));
            }
            if k <= dx / dy {
                warnings.push(format!("k ≤ d_x/d_y ({k} ≤ {})", dx / dy));
            }
        }
        XKind::Discrete => {
            let ln_n = (n.max(2) as f64).ln();
            let lower = ln_n.powi(dy as i32);
            let upper = (n as f64).sqrt() / (5.0 * ln_n);
            if k <= lower {
                warnings.push(format!("k ≤ (ln N)^d_y lower bound ({k} ≤ {lower:.3})"));
            }
            if k >= upper {
                warnings.push(format!("k ≥ √N/(5 ln N) upper bound ({k} ≥ {upper:.3})"));
            }
        }
    }
    warnings
}

const COUNT_FLOOR_WARNING: &str = "zero marginal neighbor count floored at 1";
const RADIUS_FLOOR_WARNING: &str = "k-NN radius raised to the regularization floor";

/// Kraskov–Stögbauer–Grassberger estimate
/// (1/N) Σ [ψ(k) + ψ(N) − ψ(n_x,i) − ψ(n_y,i)] with max-norm radii.
pub fn ksg_mi<T: Real>(ds: &ContinuousDataset<T>, k: usize) -> Result<Estimate<T>> {
    let n = ds.n();
    let joint = ds.joint();
    let ji = NeighborIndex::new(&joint, Metric::Chebyshev);
    let xi = NeighborIndex::new(ds.x(), Metric::Chebyshev);
    let yi = NeighborIndex::new(ds.y(), Metric::Chebyshev);
    let rho = ji.knn_radii(k)?;
    let counts: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .map(|i| (xi.count_within(i, rho[i]), yi.count_within(i, rho[i])))
        .collect();
    let floored = counts.iter().filter(|(a, b)| *a == 0 || *b == 0).count();
    let base = digamma_count::<T>(k) + digamma_count::<T>(n);
    let terms: Vec<T> = counts
        .iter()
        .map(|&(nx, ny)| base - (digamma_count::<T>(nx) + digamma_count::<T>(ny)))
        .collect();
    let value = ordered_sum(&terms) / T::from_count(n);
    let mut est = Estimate::new("ksg", value, k, n)
        .with_diagnostic("mean_n_x", mean_count(counts.iter().map(|c| c.0)))
        .with_diagnostic("mean_n_y", mean_count(counts.iter().map(|c| c.1)))
        .with_diagnostic("floored_counts", floored as f64);
    if floored > 0 {
        est.warn(COUNT_FLOOR_WARNING);
    }
    if rho.iter().any(|r| *r == T::zero()) {
        est.warn("duplicate samples: zero k-NN radius");
    }
    Ok(est)
}

fn mean_count(it: impl ExactSizeIterator<Item = usize>) -> f64 {
    let n = it.len().max(1);
    it.sum::<usize>() as f64 / n as f64
}

/// Kozachenko–Leonenko differential entropy
/// (1/N) Σ [−ψ(k) + ψ(N) + ln c_d + d ln ρ_i] with Euclidean radii,
/// floored at the default regularization scale.
pub fn kl_entropy<T: Real>(points: &Points<T>, k: usize) -> Result<Estimate<T>> {
    let n = points.len();
    let d = points.dim();
    let index = NeighborIndex::new(points, Metric::Euclidean);
    let raw = index.knn_radii(k)?;
    let c_reg = T::lit(DEFAULT_C_REG);
    let rho: Vec<T> = raw
        .iter()
        .map(|&r| regularize_radius(r, k, n, d, c_reg))
        .collect();
    let floored = raw.iter().zip(&rho).filter(|(a, b)| a != b).count();
    let base = -digamma_count::<T>(k) + digamma_count::<T>(n) + unit_ball_volume::<T>(d)?.ln();
    let dim = T::from_count(d);
    let terms: Vec<T> = rho.iter().map(|&r| base + dim * r.ln()).collect();
    let mut est = Estimate::new("entropy", ordered_sum(&terms) / T::from_count(n), k, n)
        .with_diagnostic("floored_radii", floored as f64);
    if floored > 0 {
        est.warn(RADIUS_FLOOR_WARNING);
    }
    Ok(est)
}

/// Joint-space neighborhoods of a continuous dataset with Euclidean radii.
/// Everything here is independent of the sample weights.
#[derive(Debug, Clone)]
pub(crate) struct Neighborhoods<T> {
    pub rho: Vec<T>,
    pub n_x: Vec<usize>,
    /// For each i, the `j != i` with ‖Y_j − Y_i‖ < ρ_i, ascending.
    pub y_within: Vec<Vec<usize>>,
    pub floored_radii: usize,
    pub floored_counts: usize,
}

pub(crate) fn continuous_neighborhoods<T: Real>(
    ds: &ContinuousDataset<T>,
    k: usize,
    c_reg: T,
) -> Result<Neighborhoods<T>> {
    let n = ds.n();
    let d_total = ds.dx() + ds.dy();
    let joint = ds.joint();
    let ji = NeighborIndex::new(&joint, Metric::Euclidean);
    let raw = ji.knn_radii(k)?;
    let rho: Vec<T> = raw
        .iter()
        .map(|&r| regularize_radius(r, k, n, d_total, c_reg))
        .collect();
    let floored_radii = raw.iter().zip(&rho).filter(|(a, b)| a != b).count();
    let xi = NeighborIndex::new(ds.x(), Metric::Euclidean);
    let yi = NeighborIndex::new(ds.y(), Metric::Euclidean);
    let (n_x, y_within): (Vec<usize>, Vec<Vec<usize>>) = (0..n)
        .into_par_iter()
        .map(|i| (xi.count_within(i, rho[i]), yi.within(i, rho[i])))
        .unzip();
    let floored_counts = n_x.iter().filter(|&&c| c == 0).count();
    Ok(Neighborhoods {
        rho,
        n_x: n_x.into_iter().map(|c| c.max(1)).collect(),
        y_within,
        floored_radii,
        floored_counts,
    })
}

impl<T: Real> Neighborhoods<T> {
    /// n_y,i(w) = Σ_{j ∈ y_within[i]} w_j.
    pub fn weighted_ny(&self, w: &[T]) -> Vec<T> {
        self.y_within
            .iter()
            .map(|nb| nb.iter().fold(T::zero(), |s, &j| s + w[j]))
            .collect()
    }
}

/// ψ(k) + ln(N c_{d_x} c_{d_y} / c_{d_x+d_y}), the weight-independent part of
/// each continuous UMI/CMI term.
pub(crate) fn continuous_offset<T: Real>(k: usize, n: usize, dx: usize, dy: usize) -> Result<T> {
    let vol =
        unit_ball_volume::<T>(dx)? * unit_ball_volume::<T>(dy)? / unit_ball_volume::<T>(dx + dy)?;
    Ok(digamma(T::from_count(k))? + (T::from_count(n) * vol).ln())
}

/// Per-sample log terms offset − ln n_x,i − ln n_y,i, flooring zero n_y at 1.
pub(crate) fn log_terms<T: Real>(offset: T, n_x: &[usize], n_y: &[T]) -> (Vec<T>, usize) {
    let mut floored = 0;
    let terms = n_x
        .iter()
        .zip(n_y)
        .map(|(&nx, &ny)| {
            let ny = if ny > T::zero() {
                ny
            } else {
                floored += 1;
                T::one()
            };
            offset - T::from_count(nx).ln() - ny.ln()
        })
        .collect();
    (terms, floored)
}

/// Weighted mean (1/N) Σ w_i t_i in index order.
pub(crate) fn weighted_mean<T: Real>(w: &[T], terms: &[T]) -> T {
    let prod: Vec<T> = w.iter().zip(terms).map(|(&a, &b)| a * b).collect();
    ordered_sum(&prod) / T::from_count(w.len())
}

/// UMI for real-valued X: importance weights from a leave-one-out KDE of
/// P_X retarget the k-NN estimate to a uniform input law.
pub fn umi_continuous<T: Real>(
    ds: &ContinuousDataset<T>,
    cfg: &EstimatorConfig<T>,
) -> Result<Estimate<T>> {
    let n = ds.n();
    let h = cfg.bandwidth.resolve(n, ds.dx())?;
    let weights = density::uniform_importance_weights(ds.x(), BandwidthRule::Fixed(h))?;
    let nb = continuous_neighborhoods(ds, cfg.k, cfg.c_reg)?;
    let n_y = nb.weighted_ny(weights.as_slice());
    let offset = continuous_offset::<T>(cfg.k, n, ds.dx(), ds.dy())?;
    let (terms, floored_ny) = log_terms(offset, &nb.n_x, &n_y);
    let value = weighted_mean(weights.as_slice(), &terms);

    let mut est = Estimate::new("umi", value, cfg.k, n)
        .with_diagnostic("bandwidth", h.as_f64())
        .with_diagnostic("mean_rho", ordered_sum(&nb.rho).as_f64() / n as f64)
        .with_diagnostic("mean_n_x", mean_count(nb.n_x.iter().copied()))
        .with_diagnostic("mean_n_y", ordered_sum(&n_y).as_f64() / n as f64)
        .with_diagnostic("floored_radii", nb.floored_radii as f64);
    add_weight_diagnostics(&mut est, &weights);
    let mut volume = 1.0;
    for (d, (lo, hi)) in ds.x().bounding_box().into_iter().enumerate() {
        est.diagnostics
            .insert(format!("uniform_box_lo_{d}"), lo.as_f64());
        est.diagnostics
            .insert(format!("uniform_box_hi_{d}"), hi.as_f64());
        volume *= (hi - lo).as_f64();
    }
    est.diagnostics.insert("uniform_box_volume".into(), volume);
    for w in validate_config(cfg, n, ds.dx(), ds.dy(), XKind::Continuous) {
        est.warn(w);
    }
    if nb.floored_counts + floored_ny > 0 {
        est.warn(COUNT_FLOOR_WARNING);
    }
    if nb.floored_radii > 0 {
        est.warn(RADIUS_FLOOR_WARNING);
    }
    Ok(est)
}

fn add_weight_diagnostics<T: Real>(est: &mut Estimate<T>, w: &WeightVector<T>) {
    let (lo, hi) = w
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v.as_f64()), hi.max(v.as_f64()))
        });
    est.diagnostics.insert("weight_min".into(), lo);
    est.diagnostics.insert("weight_max".into(), hi);
}

/// Same-label neighborhoods of a categorical-X dataset. Independent of the
/// weights; the weighted count is linear in the per-label incidence counts.
#[derive(Debug, Clone)]
pub(crate) struct LabelNeighborhoods<T> {
    pub rho: Vec<T>,
    /// n_{X_i}: other samples with the same label.
    pub n_x: Vec<usize>,
    /// `label_hits[i * m + l]`: samples j != i with label l and ‖Y_j − Y_i‖ < ρ_i.
    pub label_hits: Vec<usize>,
    pub alphabet: usize,
    pub floored_radii: usize,
}

impl<T: Real> LabelNeighborhoods<T> {
    /// n_y,i for per-label weights `wl`.
    pub fn weighted_ny(&self, wl: &[T]) -> Vec<T> {
        self.label_hits
            .chunks_exact(self.alphabet)
            .map(|hits| {
                hits.iter()
                    .zip(wl)
                    .fold(T::zero(), |s, (&c, &w)| s + T::from_count(c) * w)
            })
            .collect()
    }
}

pub(crate) fn label_neighborhoods<T: Real>(
    ds: &DiscreteXDataset<T>,
    k: usize,
    c_reg: T,
) -> Result<LabelNeighborhoods<T>> {
    let n = ds.n();
    let m = ds.alphabet_size();
    let raw = same_label_radii(ds, k)?;
    let rho: Vec<T> = raw
        .iter()
        .map(|&r| regularize_radius(r, k, n, ds.dy(), c_reg))
        .collect();
    let floored_radii = raw.iter().zip(&rho).filter(|(a, b)| a != b).count();
    let counts = ds.label_counts();
    let labels = ds.labels();
    let yi = NeighborIndex::new(ds.y(), Metric::Euclidean);
    let label_hits: Vec<usize> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut hits = vec![0usize; m];
            for j in yi.within(i, rho[i]) {
                hits[labels[j]] += 1;
            }
            hits
        })
        .collect();
    Ok(LabelNeighborhoods {
        rho,
        n_x: labels.iter().map(|&l| counts[l] - 1).collect(),
        label_hits,
        alphabet: m,
        floored_radii,
    })
}

/// Per-sample terms ψ(k) + ln(N / (n_x,i n_y,i)) for categorical X.
pub(crate) fn discrete_terms<T: Real>(
    k: usize,
    nb: &LabelNeighborhoods<T>,
    n_y: &[T],
) -> Result<(Vec<T>, usize)> {
    let n = nb.n_x.len();
    let offset = digamma(T::from_count(k))? + T::from_count(n).ln();
    Ok(log_terms(offset, &nb.n_x, n_y))
}

/// UMI for categorical X, weights N q(x) / n_x with q uniform unless a
/// target prior is configured.
pub fn umi_discrete<T: Real>(
    ds: &DiscreteXDataset<T>,
    cfg: &EstimatorConfig<T>,
) -> Result<Estimate<T>> {
    let n = ds.n();
    let weights = density::discrete_prior_weights(ds, cfg.target_prior.as_deref())?;
    let nb = label_neighborhoods(ds, cfg.k, cfg.c_reg)?;
    let wl = per_label_weights(ds, weights.as_slice());
    let n_y = nb.weighted_ny(&wl);
    let (terms, floored) = discrete_terms(cfg.k, &nb, &n_y)?;
    let value = weighted_mean(weights.as_slice(), &terms);
    let mut est = Estimate::new("umi-disc", value, cfg.k, n)
        .with_diagnostic("alphabet_size", ds.alphabet_size() as f64)
        .with_diagnostic("mean_rho", ordered_sum(&nb.rho).as_f64() / n as f64)
        .with_diagnostic("mean_n_y", ordered_sum(&n_y).as_f64() / n as f64)
        .with_diagnostic("floored_radii", nb.floored_radii as f64);
    for (l, w) in wl.iter().enumerate() {
        est.diagnostics
            .insert(format!("weight_{}", ds.label_name(l)), w.as_f64());
    }
    for w in validate_config(cfg, n, 0, ds.dy(), XKind::Discrete) {
        est.warn(w);
    }
    if floored > 0 {
        est.warn(COUNT_FLOOR_WARNING);
    }
    if nb.floored_radii > 0 {
        est.warn(RADIUS_FLOOR_WARNING);
    }
    Ok(est)
}

/// Weight of each label, read off a per-sample vector (zero for absent labels).
pub(crate) fn per_label_weights<T: Real>(ds: &DiscreteXDataset<T>, w: &[T]) -> Vec<T> {
    let mut wl = vec![T::zero(); ds.alphabet_size()];
    for (&l, &v) in ds.labels().iter().zip(w) {
        wl[l] = v;
    }
    wl
}
