//! Capacitated mutual information: the UMI objective maximized over sample
//! weights, under a second-moment budget for real-valued X or over a
//! quantized grid of per-label weights for categorical X.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::{ContinuousDataset, DiscreteXDataset, Points};
use crate::density::WeightVector;
use crate::estimators::{
    continuous_neighborhoods, continuous_offset, label_neighborhoods, log_terms, validate_config,
    weighted_mean, EstimatorConfig, LabelNeighborhoods, Neighborhoods, XKind,
};
use crate::math::digamma;
use crate::rng::{derive_seed, seeded};
use crate::{Error, Estimate, Real, Result};

/// Budget on the weighted second moment, (1/N) Σ w_i ‖X_i‖² ≤ a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConstraint<T> {
    a: T,
}

impl<T: Real> PowerConstraint<T> {
    pub fn new(a: T) -> Result<Self> {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::Invalid(format!(
                "power budget must be positive, got {a}"
            )));
        }
        Ok(Self { a })
    }

    /// a = (1/N) Σ ‖X_i‖², the empirical second moment.
    pub fn empirical(xs: &Points<T>) -> Result<Self> {
        let s = crate::math::ordered_sum(&xs.squared_norms()) / T::from_count(xs.len());
        Self::new(s)
    }

    pub fn budget(&self) -> T {
        self.a
    }
}

/// Per-label weight levels {C₁ + mΔ} ⊂ [C₁, C₂].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightGrid<T> {
    pub c_lo: T,
    pub c_hi: T,
    pub delta: T,
}

impl<T: Real> Default for WeightGrid<T> {
    fn default() -> Self {
        Self {
            c_lo: T::lit(0.1),
            c_hi: T::lit(10.0),
            delta: T::lit(0.05),
        }
    }
}

impl<T: Real> WeightGrid<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_lo > T::zero() && self.c_lo < self.c_hi && self.delta > T::zero()) {
            return Err(Error::Invalid(
                "weight grid needs 0 < C1 < C2 and delta > 0".into(),
            ));
        }
        if self.delta > self.c_hi - self.c_lo {
            return Err(Error::Invalid(
                "grid step exceeds the interval width".into(),
            ));
        }
        Ok(())
    }

    pub fn levels(&self) -> Vec<T> {
        let steps = ((self.c_hi - self.c_lo) / self.delta + T::lit(1e-9))
            .floor()
            .to_usize()
            .unwrap_or(0);
        (0..=steps)
            .map(|m| self.c_lo + T::from_count(m) * self.delta)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig<T> {
    pub step: T,
    pub iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            step: T::lit(0.1),
            iters: 500,
            restarts: 5,
            seed: 0,
        }
    }
}

impl<T: Real> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > T::zero()) || self.iters == 0 || self.restarts == 0 {
            return Err(Error::Invalid(
                "optimizer step, iters and restarts must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub const PROJECTION_TOL: f64 = 1e-8;
pub const PROJECTION_MAX_SWEEPS: usize = 1000;
/// Log-scale spread of the random restart points around uniform weights.
const RESTART_SPREAD: f64 = 0.1;

/// Euclidean projection of `v` onto {w ≥ 0, Σ w = total}.
fn project_simplex<T: Real>(v: &[T], total: T) -> Vec<T> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (j, &uj) in u.iter().enumerate() {
        cum = cum + uj;
        let t = (cum - total) / T::from_count(j + 1);
        if uj - t > T::zero() {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(T::zero())).collect()
}

/// Euclidean projection onto {w : Σ w_i s_i ≤ bound}.
fn project_halfspace<T: Real>(v: &[T], s: &[T], bound: T, s_norm2: T) -> Vec<T> {
    let dot = v.iter().zip(s).fold(T::zero(), |a, (&x, &y)| a + x * y);
    if dot <= bound {
        return v.to_vec();
    }
    let t = (dot - bound) / s_norm2;
    v.iter().zip(s).map(|(&x, &y)| x - t * y).collect()
}

/// Residuals of the three constraints: negativity, |mean − 1|, moment excess.
fn feasibility_residual<T: Real>(w: &[T], sq: &[T], a: T) -> T {
    let n = T::from_count(w.len());
    let neg = w.iter().fold(T::zero(), |m, &x| m.max(-x));
    let mean = crate::math::ordered_sum(w) / n;
    let moment = w.iter().zip(sq).fold(T::zero(), |s, (&x, &y)| s + x * y) / n;
    neg.max((mean - T::one()).abs())
        .max((moment - a).max(T::zero()))
}

/// Projection onto {w ≥ 0} ∩ {(1/N) Σ w = 1} ∩ {(1/N) Σ w ‖X‖² ≤ a} by
/// Dykstra's alternating projections between the scaled simplex and the
/// moment half-space.
pub fn project_feasible<T: Real>(
    w: &[T],
    xs: &Points<T>,
    pc: &PowerConstraint<T>,
) -> Result<WeightVector<T>> {
    let sq = xs.squared_norms();
    project_with_norms(w, &sq, pc.budget()).map(|(w, _)| w)
}

fn project_with_norms<T: Real>(w: &[T], sq: &[T], a: T) -> Result<(WeightVector<T>, usize)> {
    let n = w.len();
    if n != sq.len() {
        return Err(Error::Dimension {
            expected: sq.len(),
            got: n,
        });
    }
    let min_sq = sq.iter().copied().fold(T::infinity(), T::min);
    if min_sq > a {
        return Err(Error::Infeasible(format!(
            "second-moment budget {a} is below the smallest ‖X_i‖² = {min_sq}"
        )));
    }
    let total = T::from_count(n);
    let bound = a * total;
    let s_norm2 = sq.iter().fold(T::zero(), |acc, &v| acc + v * v);
    let tol = T::lit(PROJECTION_TOL);
    let mut x = w.to_vec();
    let mut p = vec![T::zero(); n];
    let mut q = vec![T::zero(); n];
    let mut residual = T::infinity();
    for sweep in 1..=PROJECTION_MAX_SWEEPS {
        let shifted: Vec<T> = x.iter().zip(&p).map(|(&a, &b)| a + b).collect();
        let y = project_simplex(&shifted, total);
        p = shifted.iter().zip(&y).map(|(&a, &b)| a - b).collect();
        let shifted: Vec<T> = y.iter().zip(&q).map(|(&a, &b)| a + b).collect();
        let next = if s_norm2 > T::zero() {
            project_halfspace(&shifted, sq, bound, s_norm2)
        } else {
            shifted.clone()
        };
        q = shifted.iter().zip(&next).map(|(&a, &b)| a - b).collect();
        let change = next
            .iter()
            .zip(&x)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        x = next;
        let candidate = project_simplex(&x, total);
        residual = feasibility_residual(&candidate, sq, a);
        if residual < tol && change < tol {
            return Ok((WeightVector::normalized(candidate)?, sweep));
        }
    }
    Err(Error::NonConvergence {
        iters: PROJECTION_MAX_SWEEPS,
        residual: residual.as_f64(),
    })
}

/// Weight-independent pieces of the continuous CMI objective.
struct ContinuousProblem<T> {
    nb: Neighborhoods<T>,
    offset: T,
    n: usize,
}

impl<T: Real> ContinuousProblem<T> {
    fn new(ds: &ContinuousDataset<T>, cfg: &EstimatorConfig<T>) -> Result<Self> {
        Ok(Self {
            nb: continuous_neighborhoods(ds, cfg.k, cfg.c_reg)?,
            offset: continuous_offset(cfg.k, ds.n(), ds.dx(), ds.dy())?,
            n: ds.n(),
        })
    }

    /// J(w) = (1/N) Σ w_i [offset − ln n_x,i − ln n_y,i(w)].
    fn objective(&self, w: &[T]) -> T {
        let ny = self.nb.weighted_ny(w);
        let (terms, _) = log_terms(self.offset, &self.nb.n_x, &ny);
        weighted_mean(w, &terms)
    }

    fn gradient(&self, w: &[T]) -> Vec<T> {
        let ny = self.nb.weighted_ny(w);
        let (terms, _) = log_terms(self.offset, &self.nb.n_x, &ny);
        let inv_n = T::from_count(self.n).recip();
        let mut grad: Vec<T> = terms.iter().map(|&t| t * inv_n).collect();
        for (i, nb) in self.nb.y_within.iter().enumerate() {
            // a floored n_y is constant in w
            if ny[i] > T::zero() {
                let c = w[i] / ny[i] * inv_n;
                for &j in nb {
                    grad[j] = grad[j] - c;
                }
            }
        }
        grad
    }
}

/// ∂J/∂w_j of the continuous CMI objective at `w`:
/// (1/N) t_j − (1/N) Σ_i (w_i / n_y,i) 1{‖Y_j − Y_i‖ < ρ_i, j ≠ i}.
pub fn cmi_objective_gradient<T: Real>(
    ds: &ContinuousDataset<T>,
    cfg: &EstimatorConfig<T>,
    w: &[T],
) -> Result<Vec<T>> {
    if w.len() != ds.n() {
        return Err(Error::Dimension {
            expected: ds.n(),
            got: w.len(),
        });
    }
    Ok(ContinuousProblem::new(ds, cfg)?.gradient(w))
}

/// The continuous CMI objective J(w).
pub fn cmi_objective<T: Real>(
    ds: &ContinuousDataset<T>,
    cfg: &EstimatorConfig<T>,
    w: &[T],
) -> Result<T> {
    if w.len() != ds.n() {
        return Err(Error::Dimension {
            expected: ds.n(),
            got: w.len(),
        });
    }
    Ok(ContinuousProblem::new(ds, cfg)?.objective(w))
}

#[derive(Debug, Clone)]
struct RestartOutcome<T> {
    start_value: T,
    best_value: T,
    best_w: Vec<T>,
    max_sweeps: usize,
}

/// Continuous CMI: projected gradient ascent on J over the feasible weights,
/// restarted from uniform weights and from random feasible perturbations;
/// the reported value is the best objective seen over all restarts.
pub fn cmi_continuous<T: Real>(
    ds: &ContinuousDataset<T>,
    cfg: &EstimatorConfig<T>,
    pc: &PowerConstraint<T>,
    oc: &OptimizerConfig<T>,
) -> Result<Estimate<T>> {
    oc.validate()?;
    let n = ds.n();
    let sq = ds.x().squared_norms();
    let a = pc.budget();
    let min_sq = sq.iter().copied().fold(T::infinity(), T::min);
    if min_sq > a {
        return Err(Error::Infeasible(format!(
            "second-moment budget {a} is below the smallest ‖X_i‖² = {min_sq}"
        )));
    }
    let problem = ContinuousProblem::new(ds, cfg)?;

    let run = |r: usize| -> Result<RestartOutcome<T>> {
        let start: Vec<T> = if r == 0 {
            vec![T::one(); n]
        } else {
            let mut rng = seeded(derive_seed(oc.seed, &[r as u64]));
            (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    T::lit((RESTART_SPREAD * z).exp())
                })
                .collect()
        };
        let (w0, mut max_sweeps) = project_with_norms(&start, &sq, a)?;
        let mut w = w0.into_vec();
        let start_value = problem.objective(&w);
        let (mut best_value, mut best_w) = (start_value, w.clone());
        for _ in 0..oc.iters {
            let g = problem.gradient(&w);
            let moved: Vec<T> = w.iter().zip(&g).map(|(&x, &d)| x + oc.step * d).collect();
            let (next, sweeps) = project_with_norms(&moved, &sq, a)?;
            max_sweeps = max_sweeps.max(sweeps);
            w = next.into_vec();
            let v = problem.objective(&w);
            if v > best_value {
                best_value = v;
                best_w.clone_from(&w);
            }
        }
        Ok(RestartOutcome {
            start_value,
            best_value,
            best_w,
            max_sweeps,
        })
    };
    let outcomes: Vec<RestartOutcome<T>> = (0..oc.restarts)
        .into_par_iter()
        .map(run)
        .collect::<Result<_>>()?;
    let (best_idx, best) = outcomes
        .iter()
        .enumerate()
        .fold(
            None::<(usize, &RestartOutcome<T>)>,
            |acc, (i, o)| match acc {
                Some((_, b)) if b.best_value >= o.best_value => acc,
                _ => Some((i, o)),
            },
        )
        .expect("at least one restart");

    let mut est = Estimate::new("cmi", best.best_value, cfg.k, n)
        .with_diagnostic("power_budget", a.as_f64())
        .with_diagnostic("best_restart", best_idx as f64)
        .with_diagnostic("step", oc.step.as_f64())
        .with_diagnostic("iters", oc.iters as f64)
        .with_diagnostic("restarts", oc.restarts as f64)
        .with_diagnostic("floored_radii", problem.nb.floored_radii as f64)
        .with_diagnostic(
            "feasibility_residual",
            feasibility_residual(&best.best_w, &sq, a).as_f64(),
        );
    for (r, o) in outcomes.iter().enumerate() {
        est.diagnostics
            .insert(format!("restart_{r}_start"), o.start_value.as_f64());
        est.diagnostics
            .insert(format!("restart_{r}_best"), o.best_value.as_f64());
        est.diagnostics.insert(
            format!("restart_{r}_projection_sweeps"),
            o.max_sweeps as f64,
        );
    }
    let (lo, hi) = best
        .best_w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v.as_f64()), hi.max(v.as_f64()))
        });
    est.diagnostics.insert("weight_min".into(), lo);
    est.diagnostics.insert("weight_max".into(), hi);
    for w in validate_config(cfg, n, ds.dx(), ds.dy(), XKind::Continuous) {
        est.warn(w);
    }
    Ok(est)
}

/// Samples sharing label, same-label count and per-label hit counts
/// contribute identical terms, so the discrete objective sums over these
/// classes with multiplicities.
struct DiscreteProblem<T> {
    /// (label, n_x, hits per label, multiplicity)
    classes: Vec<(usize, usize, Vec<usize>, usize)>,
    counts: Vec<usize>,
    offset: T,
    n: usize,
}

impl<T: Real> DiscreteProblem<T> {
    fn new(ds: &DiscreteXDataset<T>, nb: &LabelNeighborhoods<T>, k: usize) -> Result<Self> {
        let m = nb.alphabet;
        let mut index: HashMap<(usize, usize, &[usize]), usize> = HashMap::new();
        let mut classes: Vec<(usize, usize, Vec<usize>, usize)> = Vec::new();
        for (i, &l) in ds.labels().iter().enumerate() {
            let hits = &nb.label_hits[i * m..(i + 1) * m];
            let key = (l, nb.n_x[i], hits);
            match index.get(&key) {
                Some(&c) => classes[c].3 += 1,
                None => {
                    index.insert(key, classes.len());
                    classes.push((l, nb.n_x[i], hits.to_vec(), 1usize));
                }
            }
        }
        Ok(Self {
            classes,
            counts: ds.label_counts(),
            offset: digamma(T::from_count(k))? + T::from_count(ds.n()).ln(),
            n: ds.n(),
        })
    }

    /// Mean per-sample weight (1/N) Σ_x n_x w_x.
    fn mean_weight(&self, wl: &[T]) -> T {
        self.counts
            .iter()
            .zip(wl)
            .fold(T::zero(), |s, (&c, &w)| s + T::from_count(c) * w)
            / T::from_count(self.n)
    }

    /// Objective at the self-normalized version of the per-label weights.
    fn objective(&self, wl: &[T]) -> T {
        let scale = self.mean_weight(wl).recip();
        let mut total = T::zero();
        for (l, nx, hits, mult) in &self.classes {
            let ny = hits
                .iter()
                .zip(wl)
                .fold(T::zero(), |s, (&h, &w)| s + T::from_count(h) * w)
                * scale;
            let ny = if ny > T::zero() { ny } else { T::one() };
            let term = self.offset - T::from_count((*nx).max(1)).ln() - ny.ln();
            total = total + T::from_count(*mult) * wl[*l] * scale * term;
        }
        total / T::from_count(self.n)
    }
}

/// Discrete CMI objective at per-label weights `wl`, evaluated after
/// self-normalizing them to mean sample weight one.
pub fn discrete_objective<T: Real>(
    ds: &DiscreteXDataset<T>,
    cfg: &EstimatorConfig<T>,
    wl: &[T],
) -> Result<T> {
    if wl.len() != ds.alphabet_size() {
        return Err(Error::Dimension {
            expected: ds.alphabet_size(),
            got: wl.len(),
        });
    }
    if wl.iter().any(|&w| !(w > T::zero())) {
        return Err(Error::Invalid("per-label weights must be positive".into()));
    }
    let nb = label_neighborhoods(ds, cfg.k, cfg.c_reg)?;
    Ok(DiscreteProblem::new(ds, &nb, cfg.k)?.objective(wl))
}

const EXHAUSTIVE_LIMIT: f64 = 1e6;

/// Discrete CMI: the categorical UMI objective maximized over per-label
/// weights on the grid {C₁ + mΔ}, restricted to vectors whose mean sample
/// weight lies in [1 − |X|Δ, 1 + |X|Δ]. Each candidate is evaluated at its
/// self-normalized version (mean weight exactly one). Exhaustive when the
/// grid has at most 10⁶ vectors, else cyclic coordinate ascent from the
/// uniform-prior point and `oc.restarts − 1` random grid points.
pub fn cmi_discrete<T: Real>(
    ds: &DiscreteXDataset<T>,
    cfg: &EstimatorConfig<T>,
    grid: &WeightGrid<T>,
    oc: &OptimizerConfig<T>,
) -> Result<Estimate<T>> {
    grid.validate()?;
    oc.validate()?;
    let m = ds.alphabet_size();
    let counts = ds.label_counts();
    if let Some(l) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InsufficientSamples {
            label: ds.label_name(l).to_owned(),
            available: 0,
            needed: cfg.k,
        });
    }
    let nb = label_neighborhoods(ds, cfg.k, cfg.c_reg)?;
    let problem = DiscreteProblem::new(ds, &nb, cfg.k)?;
    let levels = grid.levels();
    let slack = T::from_count(m) * grid.delta;
    let feasible = |wl: &[T]| (problem.mean_weight(wl) - T::one()).abs() <= slack;

    let total = (levels.len() as f64).powi(m as i32);
    let mut evaluated = 0usize;
    let mut best: Option<(T, Vec<usize>)> = None;
    let mut consider = |idx: &[usize], best: &mut Option<(T, Vec<usize>)>| -> Option<T> {
        let wl: Vec<T> = idx.iter().map(|&i| levels[i]).collect();
        if !feasible(&wl) {
            return None;
        }
        evaluated += 1;
        let v = problem.objective(&wl);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            *best = Some((v, idx.to_vec()));
        }
        Some(v)
    };
    let exhaustive = total <= EXHAUSTIVE_LIMIT;
    if exhaustive {
        let mut idx = vec![0usize; m];
        'outer: loop {
            consider(&idx, &mut best);
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < levels.len() {
                    continue 'outer;
                }
                *slot = 0;
            }
            break;
        }
    } else {
        // start 0 snaps the uniform-prior weights N / (|X| n_x) onto the grid
        let snap = |w: T| {
            levels
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    (*a.1 - w)
                        .abs()
                        .partial_cmp(&(*b.1 - w).abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .map(|(i, _)| i)
                .expect("non-empty grid")
        };
        for r in 0..oc.restarts {
            let mut idx: Vec<usize> = if r == 0 {
                counts
                    .iter()
                    .map(|&c| snap(T::from_count(ds.n()) / (T::from_count(m) * T::from_count(c))))
                    .collect()
            } else {
                let mut rng = seeded(derive_seed(oc.seed, &[r as u64]));
                (0..m).map(|_| rng.random_range(0..levels.len())).collect()
            };
            let mut current = consider(&idx, &mut best);
            loop {
                let mut improved = false;
                for pos in 0..m {
                    let keep = idx[pos];
                    let mut best_here = (current, keep);
                    for cand in 0..levels.len() {
                        idx[pos] = cand;
                        if let Some(v) = consider(&idx, &mut best) {
                            if best_here.0.is_none_or(|b| v > b) {
                                best_here = (Some(v), cand);
                            }
                        }
                    }
                    idx[pos] = best_here.1;
                    if best_here.1 != keep && best_here.0 > current {
                        current = best_here.0;
                        improved = true;
                    }
                }
                if !improved {
                    break;
                }
            }
        }
    }
    let (value, idx) = best.ok_or_else(|| {
        Error::Infeasible("no grid weight vector satisfies the mean window".into())
    })?;
    let wl: Vec<T> = idx.iter().map(|&i| levels[i]).collect();
    let scale = problem.mean_weight(&wl).recip();

    let mut est = Estimate::new("cmi-disc", value, cfg.k, ds.n())
        .with_diagnostic("grid_levels", levels.len() as f64)
        .with_diagnostic("candidates_evaluated", evaluated as f64)
        .with_diagnostic("exhaustive", if exhaustive { 1.0 } else { 0.0 })
        .with_diagnostic("grid_mean_weight", problem.mean_weight(&wl).as_f64())
        .with_diagnostic("floored_radii", nb.floored_radii as f64);
    for (l, &w) in wl.iter().enumerate() {
        let name = ds.label_name(l);
        est.diagnostics
            .insert(format!("grid_weight_{name}"), w.as_f64());
        est.diagnostics
            .insert(format!("weight_{name}"), (w * scale).as_f64());
        est.diagnostics.insert(
            format!("prior_{name}"),
            (w * scale * T::from_count(counts[l]) / T::from_count(ds.n())).as_f64(),
        );
    }
    for w in validate_config(cfg, ds.n(), 0, ds.dy(), XKind::Discrete) {
        est.warn(w);
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::{count_within, knn_radius};
    use crate::math::{unit_ball_volume, Metric};
    use approx::assert_abs_diff_eq;

    fn small_dataset(n: usize, seed: u64) -> ContinuousDataset<f64> {
        let mut rng = seeded(seed);
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x + 0.5 * rng.random::<f64>()).collect();
        ContinuousDataset::from_pairs(&xs, &ys).unwrap()
    }

    #[test]
    fn projection_identity_and_zero() {
        let xs = Points::from_scalars(&[0.5, -1.0, 2.0, 0.1]).unwrap();
        let pc = PowerConstraint::empirical(&xs).unwrap();
        let w = [1.0, 1.0, 0.5, 1.5];
        assert!(feasibility_residual(&w, &xs.squared_norms(), pc.budget()) < 1e-12);
        let p = project_feasible(&w, &xs, &pc).unwrap();
        for (a, b) in p.as_slice().iter().zip(w) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-8);
        }
        let p = project_feasible(&[0.0; 4], &xs, &pc).unwrap();
        for v in p.as_slice() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn projection_clips_large_coordinate() {
        let xs = Points::from_scalars(&[0.5, -1.0, 2.0, 0.1, 0.3]).unwrap();
        let pc = PowerConstraint::new(0.8).unwrap();
        let p = project_feasible(&[1.0, 1.0, 50.0, 1.0, 1.0], &xs, &pc).unwrap();
        assert!(feasibility_residual(p.as_slice(), &xs.squared_norms(), 0.8) < 1e-8);
        assert!(p.as_slice()[2] < 5.0);
    }

    #[test]
    fn projection_is_closest_point() {
        // brute force over a fine grid of the feasible set for N = 3
        let xs = Points::from_scalars(&[0.2, 1.0, 1.5]).unwrap();
        let pc = PowerConstraint::new(0.9).unwrap();
        let v = [2.5, 0.7, -0.4];
        let p = project_feasible(&v, &xs, &pc).unwrap();
        let sq = xs.squared_norms();
        let d = |w: &[f64]| {
            w.iter()
                .zip(&v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let mut best = f64::INFINITY;
        let steps = 600;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let w = [
                    3.0 * i as f64 / steps as f64,
                    3.0 * j as f64 / steps as f64,
                    3.0 * (steps - i - j) as f64 / steps as f64,
                ];
                if feasibility_residual(&w, &sq, 0.9) < 1e-12 {
                    best = best.min(d(&w));
                }
            }
        }
        assert!(d(p.as_slice()) <= best + 1e-9);
        assert!(d(p.as_slice()) > best - 1e-2);
    }

    #[test]
    fn infeasible_budget_is_an_error() {
        let xs = Points::from_scalars(&[1.0, 2.0]).unwrap();
        let err =
            project_feasible(&[1.0, 1.0], &xs, &PowerConstraint::new(0.5).unwrap()).unwrap_err();
        assert!(err.is_numerical());
        let ds = ContinuousDataset::from_pairs(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]).unwrap();
        let err = cmi_continuous(
            &ds,
            &EstimatorConfig::with_k(1),
            &PowerConstraint::new(0.5).unwrap(),
            &OptimizerConfig::default(),
        );
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let cfg = EstimatorConfig::with_k(3);
        for seed in 0..5 {
            let ds = small_dataset(60, seed);
            let problem = ContinuousProblem::new(&ds, &cfg).unwrap();
            let mut rng = seeded(100 + seed);
            let w: Vec<f64> = (0..60).map(|_| 0.5 + rng.random::<f64>()).collect();
            let g = problem.gradient(&w);
            let h = 1e-5;
            for j in 0..60 {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let fd = (problem.objective(&wp) - problem.objective(&wm)) / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-4, "j={j} fd={fd} analytic={}", g[j]);
            }
        }
    }

    #[test]
    fn gradient_three_point_toy() {
        // N = 3, k = 1 on a line; neighbor sets enumerated by hand below
        let ds: ContinuousDataset<f64> =
            ContinuousDataset::from_pairs(&[0.0, 1.0, 3.0], &[0.0, 0.5, 0.75]).unwrap();
        let mut cfg = EstimatorConfig::with_k(1);
        cfg.c_reg = 1e-12;
        let w = [0.5, 1.0, 1.5];
        let g = cmi_objective_gradient(&ds, &cfg, &w).unwrap();
        let joint = ds.joint();
        let n = 3.0;
        let off = digamma(1.0).unwrap()
            + (n * unit_ball_volume::<f64>(1).unwrap().powi(2)
                / unit_ball_volume::<f64>(2).unwrap())
            .ln();
        let mut ny = [0.0f64; 3];
        let mut inside = [[false; 3]; 3];
        let mut nx = [0.0f64; 3];
        for i in 0..3 {
            let r = knn_radius(&joint, i, 1, Metric::Euclidean).unwrap();
            nx[i] = count_within(ds.x(), i, r, Metric::Euclidean).max(1) as f64;
            for j in 0..3 {
                if j != i && (ds.y().row(j)[0] - ds.y().row(i)[0]).abs() < r {
                    inside[i][j] = true;
                    ny[i] += w[j];
                }
            }
        }
        for j in 0..3 {
            let t = off - nx[j].ln() - if ny[j] > 0.0 { ny[j].ln() } else { 0.0 };
            let cross: f64 = (0..3)
                .filter(|&i| inside[i][j] && ny[i] > 0.0)
                .map(|i| w[i] / ny[i])
                .sum();
            assert_abs_diff_eq!(g[j], (t - cross) / n, epsilon = 1e-12);
        }
    }

    #[test]
    fn restarts_only_add_candidates() {
        let ds = small_dataset(150, 9);
        let cfg = EstimatorConfig::with_k(3);
        let pc = PowerConstraint::empirical(ds.x()).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for restarts in 1..4 {
            let oc = OptimizerConfig {
                iters: 20,
                restarts,
                seed: 4,
                ..OptimizerConfig::default()
            };
            let est = cmi_continuous(&ds, &cfg, &pc, &oc).unwrap();
            assert!(est.value >= prev);
            assert!(est.diagnostics["feasibility_residual"] < 1e-6);
            prev = est.value;
        }
    }

    fn two_label(ys0: &[f64], ys1: &[f64]) -> DiscreteXDataset<f64> {
        let mut labels = vec![0; ys0.len()];
        labels.extend(vec![1; ys1.len()]);
        let ys: Vec<f64> = ys0.iter().chain(ys1).copied().collect();
        DiscreteXDataset::from_indices(labels, 2, Points::from_scalars(&ys).unwrap()).unwrap()
    }

    #[test]
    fn discrete_search_matches_enumeration() {
        let mut rng = seeded(5);
        let y0: Vec<f64> = (0..120).map(|_| rng.random::<f64>()).collect();
        let y1: Vec<f64> = (0..60).map(|_| 0.6 + rng.random::<f64>()).collect();
        let ds = two_label(&y0, &y1);
        let cfg = EstimatorConfig::with_k(3);
        let coarse = WeightGrid {
            c_lo: 0.2,
            c_hi: 3.0,
            delta: 0.2,
        };
        let oc = OptimizerConfig::default();
        let exhaustive = cmi_discrete(&ds, &cfg, &coarse, &oc).unwrap();
        assert_eq!(exhaustive.diagnostics["exhaustive"], 1.0);
        // enumerate directly
        let nb = label_neighborhoods(&ds, 3, cfg.c_reg).unwrap();
        let problem = DiscreteProblem::new(&ds, &nb, 3).unwrap();
        let levels = coarse.levels();
        let mut best = f64::NEG_INFINITY;
        for &a in &levels {
            for &b in &levels {
                if (problem.mean_weight(&[a, b]) - 1.0).abs() <= 2.0 * 0.2 {
                    best = best.max(problem.objective(&[a, b]));
                }
            }
        }
        assert_eq!(exhaustive.value, best);
        // the class-compressed objective equals the per-sample sum
        let wl = [0.8, 1.4];
        let scale = 1.0 / problem.mean_weight(&wl);
        let per_sample: Vec<f64> = ds.labels().iter().map(|&l| wl[l] * scale).collect();
        let ny = nb.weighted_ny(&[wl[0] * scale, wl[1] * scale]);
        let (terms, _) = crate::estimators::discrete_terms(3, &nb, &ny).unwrap();
        assert_abs_diff_eq!(
            problem.objective(&wl),
            weighted_mean(&per_sample, &terms),
            epsilon = 1e-12
        );
    }

    #[test]
    fn coordinate_ascent_matches_enumeration_on_two_labels() {
        let mut rng = seeded(8);
        let y0: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let y1: Vec<f64> = (0..100).map(|_| 0.5 + rng.random::<f64>()).collect();
        let ds = two_label(&y0, &y1);
        let cfg = EstimatorConfig::with_k(3);
        let grid = WeightGrid {
            c_lo: 0.25,
            c_hi: 2.0,
            delta: 0.25,
        };
        let oc = OptimizerConfig::default();
        let full = cmi_discrete(&ds, &cfg, &grid, &oc).unwrap();
        let nb = label_neighborhoods(&ds, 3, cfg.c_reg).unwrap();
        let problem = DiscreteProblem::new(&ds, &nb, 3).unwrap();
        let levels = grid.levels();
        // coordinate ascent over the same grid, forced by hand
        let mut best = f64::NEG_INFINITY;
        for r in 0..oc.restarts {
            let mut idx = if r == 0 {
                vec![3usize, 3]
            } else {
                vec![r % levels.len(), (3 * r) % levels.len()]
            };
            loop {
                let mut improved = false;
                for pos in 0..2 {
                    for c in 0..levels.len() {
                        let mut cand = idx.clone();
                        cand[pos] = c;
                        let w: Vec<f64> = cand.iter().map(|&i| levels[i]).collect();
                        let cur: Vec<f64> = idx.iter().map(|&i| levels[i]).collect();
                        if (problem.mean_weight(&w) - 1.0).abs() <= 0.5
                            && ((problem.mean_weight(&cur) - 1.0).abs() > 0.5
                                || problem.objective(&w) > problem.objective(&cur))
                        {
                            idx = cand;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            let w: Vec<f64> = idx.iter().map(|&i| levels[i]).collect();
            best = best.max(problem.objective(&w));
        }
        assert_eq!(full.value, best);
    }

    #[test]
    fn grid_levels_and_validation() {
        let g = WeightGrid::<f64>::default();
        let l = g.levels();
        assert_eq!(l.len(), 199);
        assert_abs_diff_eq!(l[0], 0.1);
        assert_abs_diff_eq!(*l.last().unwrap(), 10.0, epsilon = 1e-9);
        assert!(WeightGrid {
            c_lo: 1.0,
            c_hi: 0.5,
            delta: 0.1
        }
        .validate()
        .is_err());
        assert!(WeightGrid {
            c_lo: 0.1,
            c_hi: 0.2,
            delta: 0.5
        }
        .validate()
        .is_err());
    }
}
