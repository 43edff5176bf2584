//! Nearest-neighbor radii and ball counts.
//!
//! The free functions are O(N) scans per query and serve as the reference.
//! [`NeighborIndex`] answers the same queries exactly, pruning candidates by
//! their first-coordinate gap, which lower-bounds both supported metrics.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::dataset::{DiscreteXDataset, Points};
use crate::math::{distance_unchecked, Metric};
use crate::{Error, Real, Result};

/// Per-sample nearest-neighbor statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborStats<T> {
    /// k-NN radius, possibly floored.
    pub rho: T,
    pub n_x: usize,
    /// Neighbor count in Y, weighted when the estimator uses weights.
    pub n_y: T,
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::Invalid(format!(
            "k must satisfy 1 <= k <= N-1, got k={k}, N={n}"
        )));
    }
    Ok(())
}

/// Distance from point `i` to its k-th nearest other point.
pub fn knn_radius<T: Real>(points: &Points<T>, i: usize, k: usize, metric: Metric) -> Result<T> {
    let n = points.len();
    check_k(n, k)?;
    if i >= n {
        return Err(Error::Invalid(format!("index {i} out of range for N={n}")));
    }
    let p = points.row(i);
    let mut d: Vec<(T, usize)> = (0..n)
        .filter(|&j| j != i)
        .map(|j| (distance_unchecked(p, points.row(j), metric), j))
        .collect();
    d.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    Ok(d[k - 1].0)
}

/// Floors `rho` at (c_reg k / N)^{1/d_total}, the scale below which a k-NN
/// ball is implausibly small for N samples in `d_total` dimensions.
pub fn regularize_radius<T: Real>(rho: T, k: usize, n: usize, d_total: usize, c_reg: T) -> T {
    let floor = (c_reg * T::from_count(k) / T::from_count(n)).powf(T::from_count(d_total).recip());
    rho.max(floor)
}

/// Number of `j != i` strictly inside `radius` of point `i`.
pub fn count_within<T: Real>(points: &Points<T>, i: usize, radius: T, metric: Metric) -> usize {
    let p = points.row(i);
    (0..points.len())
        .filter(|&j| j != i && distance_unchecked(p, points.row(j), metric) < radius)
        .count()
}

/// Sum of `weights[j]` over `j != i` strictly inside `radius` (Euclidean).
pub fn weighted_count_within<T: Real>(
    points: &Points<T>,
    weights: &[T],
    i: usize,
    radius: T,
) -> Result<T> {
    if weights.len() != points.len() {
        return Err(Error::Dimension {
            expected: points.len(),
            got: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= T::zero())) {
        return Err(Error::Invalid(format!("negative or NaN weight {w}")));
    }
    let p = points.row(i);
    Ok((0..points.len())
        .filter(|&j| j != i && distance_unchecked(p, points.row(j), Metric::Euclidean) < radius)
        .fold(T::zero(), |s, j| s + weights[j]))
}

/// k-th nearest-neighbor distance among samples sharing `i`'s label,
/// Euclidean in Y.
pub fn same_label_knn_radius<T: Real>(data: &DiscreteXDataset<T>, i: usize, k: usize) -> Result<T> {
    let label = data.labels()[i];
    let group: Vec<usize> = (0..data.n())
        .filter(|&j| data.labels()[j] == label)
        .collect();
    if k == 0 || group.len() < k + 1 {
        return Err(Error::InsufficientSamples {
            label: data.label_name(label).to_owned(),
            available: group.len().saturating_sub(1),
            needed: k.max(1),
        });
    }
    let local = data.y().select(&group);
    let pos = group
        .iter()
        .position(|&j| j == i)
        .expect("i is in its own group");
    knn_radius(&local, pos, k, Metric::Euclidean)
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem<T>(T);

impl<T: PartialOrd> Eq for HeapItem<T> {}

impl<T: PartialOrd> PartialOrd for HeapItem<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for HeapItem<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

/// Exact neighbor queries over a fixed point set, sorted by first coordinate.
#[derive(Debug, Clone)]
pub struct NeighborIndex<'a, T> {
    points: &'a Points<T>,
    metric: Metric,
    order: Vec<usize>,
    rank: Vec<usize>,
    key: Vec<T>,
}

impl<'a, T: Real> NeighborIndex<'a, T> {
    pub fn new(points: &'a Points<T>, metric: Metric) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points.row(a)[0]
                .partial_cmp(&points.row(b)[0])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut rank = vec![0; order.len()];
        for (r, &j) in order.iter().enumerate() {
            rank[j] = r;
        }
        let key = order.iter().map(|&j| points.row(j)[0]).collect();
        Self {
            points,
            metric,
            order,
            rank,
            key,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Visits candidates outward from `i` in sorted order while `keep(gap)`
    /// holds for the first-coordinate gap.
    fn scan(&self, i: usize, mut keep: impl FnMut(T) -> bool, mut visit: impl FnMut(usize, T)) {
        let r = self.rank[i];
        let k0 = self.key[r];
        let p = self.points.row(i);
        let (mut lo, mut hi) = (r, r + 1);
        let mut left_open = lo > 0;
        let mut right_open = hi < self.order.len();
        while left_open || right_open {
            // advance the side with the smaller gap
            let gl = if left_open {
                k0 - self.key[lo - 1]
            } else {
                T::infinity()
            };
            let gr = if right_open {
                self.key[hi] - k0
            } else {
                T::infinity()
            };
            let (pos, gap) = if gl <= gr { (lo - 1, gl) } else { (hi, gr) };
            if !keep(gap) {
                break;
            }
            let j = self.order[pos];
            visit(j, distance_unchecked(p, self.points.row(j), self.metric));
            if pos < r {
                lo -= 1;
                left_open = lo > 0;
            } else {
                hi += 1;
                right_open = hi < self.order.len();
            }
        }
    }

    pub fn knn_radius(&self, i: usize, k: usize) -> Result<T> {
        check_k(self.len(), k)?;
        let mut heap: BinaryHeap<HeapItem<T>> = BinaryHeap::with_capacity(k + 1);
        let bound = std::cell::Cell::new(T::infinity());
        self.scan(
            i,
            |gap| gap <= bound.get(),
            |_, d| {
                if heap.len() < k {
                    heap.push(HeapItem(d));
                } else if d < heap.peek().expect("non-empty").0 {
                    heap.pop();
                    heap.push(HeapItem(d));
                }
                if heap.len() == k {
                    bound.set(heap.peek().expect("non-empty").0);
                }
            },
        );
        Ok(heap.peek().expect("k >= 1").0)
    }

    /// Indices `j != i` strictly inside `radius`, ascending.
    pub fn within(&self, i: usize, radius: T) -> Vec<usize> {
        let mut out = Vec::new();
        self.scan(
            i,
            |gap| gap < radius,
            |j, d| {
                if d < radius {
                    out.push(j);
                }
            },
        );
        out.sort_unstable();
        out
    }

    pub fn count_within(&self, i: usize, radius: T) -> usize {
        let mut c = 0;
        self.scan(
            i,
            |gap| gap < radius,
            |_, d| {
                if d < radius {
                    c += 1;
                }
            },
        );
        c
    }

    /// Weighted count, summed in ascending index order.
    pub fn weighted_count_within(&self, i: usize, radius: T, weights: &[T]) -> T {
        self.within(i, radius)
            .iter()
            .fold(T::zero(), |s, &j| s + weights[j])
    }

    /// All k-NN radii, computed in parallel.
    pub fn knn_radii(&self, k: usize) -> Result<Vec<T>> {
        check_k(self.len(), k)?;
        (0..self.len())
            .into_par_iter()
            .map(|i| self.knn_radius(i, k))
            .collect()
    }
}

/// k-NN radius of every sample within its own label group (Euclidean in Y).
pub fn same_label_radii<T: Real>(data: &DiscreteXDataset<T>, k: usize) -> Result<Vec<T>> {
    let mut rho = vec![T::zero(); data.n()];
    for (label, group) in data.groups().iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        if k == 0 || group.len() < k + 1 {
            return Err(Error::InsufficientSamples {
                label: data.label_name(label).to_owned(),
                available: group.len().saturating_sub(1),
                needed: k.max(1),
            });
        }
        let local = data.y().select(group);
        let index = NeighborIndex::new(&local, Metric::Euclidean);
        let radii = index.knn_radii(k)?;
        for (&i, r) in group.iter().zip(radii) {
            rho[i] = r;
        }
    }
    Ok(rho)
}
