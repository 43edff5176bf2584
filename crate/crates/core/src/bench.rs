//! Synthetic benchmarks: the Beta-input Gaussian channel, ground-truth
//! oracles, partition baselines, sample-complexity sweeps, and trend
//! recovery on a simulated three-gene cascade.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{
    blahut_arimoto, mutual_information, DiscreteChannel, BA_DEFAULT_MAX_ITERS, BA_DEFAULT_TOL,
};
use crate::cmi::{cmi_continuous, OptimizerConfig, PowerConstraint};
use crate::dataset::{ContinuousDataset, Points, Table};
use crate::estimators::{ksg_mi, umi_continuous, EstimatorConfig};
use crate::rng::{derive_seed, seeded, SeededRng};
use crate::{Error, Estimate, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianChannelSpec {
    pub sigma2: f64,
    pub n: usize,
    pub seed: u64,
}

/// Inverse CDF of Beta(1.5, 1.5). With x = sin²(φ/4) the CDF becomes
/// (φ − sin φ) / 2π, inverted by safeguarded Newton on [0, 2π].
pub fn beta15_quantile(u: f64) -> f64 {
    let target = 2.0 * std::f64::consts::PI * u.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0, 2.0 * std::f64::consts::PI);
    let mut phi = target.cbrt() * 6f64.cbrt();
    phi = phi.clamp(lo, hi);
    for _ in 0..100 {
        let g = phi - phi.sin() - target;
        if g > 0.0 {
            hi = phi;
        } else {
            lo = phi;
        }
        let d = 1.0 - phi.cos();
        let mut next = if d > 0.0 { phi - g / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - phi).abs() <= 1e-15 * (1.0 + phi) {
            phi = next;
            break;
        }
        phi = next;
    }
    (phi / 4.0).sin().powi(2)
}

fn beta15(rng: &mut SeededRng) -> f64 {
    beta15_quantile(rng.random::<f64>())
}

fn gaussian(rng: &mut SeededRng, sigma2: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sigma2.sqrt() * z
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Invalid(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    Ok(())
}

/// X ~ Beta(1.5, 1.5), Y = X + N(0, σ²).
pub fn gen_beta_gaussian(spec: &GaussianChannelSpec) -> Result<ContinuousDataset<f64>> {
    check_sigma2(spec.sigma2)?;
    let mut rng = seeded(spec.seed);
    let mut xs = Vec::with_capacity(spec.n);
    let mut ys = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x = beta15(&mut rng);
        xs.push(x);
        ys.push(x + gaussian(&mut rng, spec.sigma2));
    }
    ContinuousDataset::from_pairs(&xs, &ys)
}

pub const UMI_TRUTH_SAMPLES: usize = 8192;
pub const UMI_TRUTH_SEEDS: u64 = 5;
pub const UMI_TRUTH_SEED: u64 = 20_170_524;

/// KSG estimate of I(X;Y) for X ~ Uniform[0,1], Y = X + N(0, σ²), averaged
/// over five independent draws of `m` samples.
pub fn umi_ground_truth(sigma2: f64, m: usize, k: usize, seed: u64) -> Result<f64> {
    check_sigma2(sigma2)?;
    if m < 1000 {
        return Err(Error::Invalid(format!(
            "ground truth needs at least 1000 samples, got {m}"
        )));
    }
    let values: Vec<f64> = (0..UMI_TRUTH_SEEDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = seeded(derive_seed(seed, &[s]));
            let mut xs = Vec::with_capacity(m);
            let mut ys = Vec::with_capacity(m);
            for _ in 0..m {
                let x: f64 = rng.random();
                xs.push(x);
                ys.push(x + gaussian(&mut rng, sigma2));
            }
            ksg_mi(&ContinuousDataset::from_pairs(&xs, &ys)?, k).map(|e| e.value)
        })
        .collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// ½ ln(1 + 1/(16σ²)): Gaussian capacity at the Beta(1.5, 1.5) variance.
pub fn cmi_ground_truth(sigma2: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    Ok(0.5 * (1.0 / (16.0 * sigma2)).ln_1p())
}

/// ⌈N^{1/3}⌉ capped at 16, never below 2.
pub fn default_bins(n: usize) -> usize {
    ((n as f64).cbrt().ceil() as usize).clamp(2, 16)
}

/// Equal-frequency bin index of each value; tied values share a bin.
pub fn equal_frequency_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = vec![0; n];
    let mut prev: Option<(f64, usize)> = None;
    for (rank, &i) in order.iter().enumerate() {
        let bin = match prev {
            Some((v, b)) if v == values[i] => b,
            _ => rank * bins / n,
        };
        out[i] = bin;
        prev = Some((values[i], bin));
    }
    out
}

fn cell_ids(points: &Points<f64>, bins: usize) -> Vec<usize> {
    let mut ids = vec![0usize; points.len()];
    for d in 0..points.dim() {
        let col: Vec<f64> = points.rows().map(|r| r[d]).collect();
        for (id, b) in ids.iter_mut().zip(equal_frequency_bins(&col, bins)) {
            *id = *id * bins + b;
        }
    }
    ids
}

/// Empirical channel between occupied X cells and occupied Y cells, plus
/// the empirical prior over the X cells.
struct Histogram {
    channel: DiscreteChannel<f64>,
    prior: Vec<f64>,
}

fn histogram(ds: &ContinuousDataset<f64>, bins: usize) -> Result<Histogram> {
    if bins < 2 {
        return Err(Error::Invalid(format!("need at least 2 bins, got {bins}")));
    }
    let xs = cell_ids(ds.x(), bins);
    let ys = cell_ids(ds.y(), bins);
    let compact = |ids: &[usize]| {
        let mut map: BTreeMap<usize, usize> = BTreeMap::new();
        for &id in ids {
            map.entry(id).or_insert(0);
        }
        for (j, v) in map.values_mut().enumerate() {
            *v = j;
        }
        map
    };
    let (xmap, ymap) = (compact(&xs), compact(&ys));
    let (rows, cols) = (xmap.len(), ymap.len());
    let mut counts = vec![0f64; rows * cols];
    for (x, y) in xs.iter().zip(&ys) {
        counts[xmap[x] * cols + ymap[y]] += 1.0;
    }
    let n = ds.n() as f64;
    let mut prior = Vec::with_capacity(rows);
    let mut p = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let row = &counts[r * cols..(r + 1) * cols];
        let total: f64 = row.iter().sum();
        prior.push(total / n);
        p.extend(row.iter().map(|c| c / total));
    }
    Ok(Histogram {
        channel: DiscreteChannel::new(rows, cols, p)?,
        prior,
    })
}

fn partition_estimate(
    method: &str,
    value: f64,
    ds: &ContinuousDataset<f64>,
    h: &Histogram,
    bins: usize,
) -> Estimate<f64> {
    Estimate::new(method, value, 0, ds.n())
        .with_diagnostic("bins", bins as f64)
        .with_diagnostic("x_cells", h.channel.inputs() as f64)
        .with_diagnostic("y_cells", h.channel.outputs() as f64)
}

/// Plug-in MI of the equal-frequency histogram at the empirical prior.
pub fn partition_mi(ds: &ContinuousDataset<f64>, bins: usize) -> Result<Estimate<f64>> {
    let h = histogram(ds, bins)?;
    let v = mutual_information(&h.prior, &h.channel)?;
    Ok(partition_estimate("partition-mi", v, ds, &h, bins))
}

/// Plug-in MI of the histogram channel at the uniform prior over X cells.
pub fn partition_umi(ds: &ContinuousDataset<f64>, bins: usize) -> Result<Estimate<f64>> {
    let h = histogram(ds, bins)?;
    let m = h.channel.inputs();
    let v = mutual_information(&vec![1.0 / m as f64; m], &h.channel)?;
    Ok(partition_estimate("partition-umi", v, ds, &h, bins))
}

/// Blahut–Arimoto capacity of the histogram channel.
pub fn partition_cmi(ds: &ContinuousDataset<f64>, bins: usize) -> Result<Estimate<f64>> {
    let h = histogram(ds, bins)?;
    let cap = blahut_arimoto(&h.channel, BA_DEFAULT_TOL, BA_DEFAULT_MAX_ITERS)?;
    Ok(partition_estimate("partition-cmi", cap.value, ds, &h, bins)
        .with_diagnostic("ba_iterations", cap.iterations as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    UmiKnn,
    UmiPartition,
    CmiKnn,
    CmiPartition,
}

impl SweepMethod {
    pub fn id(self) -> &'static str {
        match self {
            SweepMethod::UmiKnn => "umi_knn",
            SweepMethod::UmiPartition => "umi_partition",
            SweepMethod::CmiKnn => "cmi_knn",
            SweepMethod::CmiPartition => "cmi_partition",
        }
    }

    fn is_umi(self) -> bool {
        matches!(self, SweepMethod::UmiKnn | SweepMethod::UmiPartition)
    }
}

impl fmt::Display for SweepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SweepMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "umi_knn" => Ok(SweepMethod::UmiKnn),
            "umi_partition" => Ok(SweepMethod::UmiPartition),
            "cmi_knn" => Ok(SweepMethod::CmiKnn),
            "cmi_partition" => Ok(SweepMethod::CmiPartition),
            other => Err(Error::Invalid(format!("unknown sweep method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub method: SweepMethod,
    pub sigma2_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub k: usize,
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Invalid("reps must be at least 1".into()));
        }
        if self.sigma2_list.is_empty() || self.n_list.is_empty() {
            return Err(Error::Invalid(
                "sweep needs at least one sigma2 and one n".into(),
            ));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("n list must be strictly ascending".into()));
        }
        for &s in &self.sigma2_list {
            check_sigma2(s)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: SweepMethod,
    pub sigma2: f64,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub estimate: f64,
    pub truth: f64,
}

pub fn cell_seed(base: u64, sigma2: f64, n: usize, rep: usize) -> u64 {
    derive_seed(base, &[sigma2.to_bits(), n as u64, rep as u64])
}

/// One sweep cell: generate the dataset from `seed` and estimate.
pub fn sweep_estimate(
    method: SweepMethod,
    sigma2: f64,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<f64> {
    let ds = gen_beta_gaussian(&GaussianChannelSpec { sigma2, n, seed })?;
    let cfg = EstimatorConfig::with_k(k);
    let bins = default_bins(n);
    let est = match method {
        SweepMethod::UmiKnn => umi_continuous(&ds, &cfg)?,
        SweepMethod::UmiPartition => partition_umi(&ds, bins)?,
        SweepMethod::CmiKnn => {
            let pc = PowerConstraint::empirical(ds.x())?;
            let oc = OptimizerConfig {
                seed,
                ..OptimizerConfig::default()
            };
            cmi_continuous(&ds, &cfg, &pc, &oc)?
        }
        SweepMethod::CmiPartition => partition_cmi(&ds, bins)?,
    };
    Ok(est.value)
}

/// Truth for a sweep method: the simulated UMI truth for UMI methods, the
/// Gaussian capacity formula for CMI methods.
pub fn sweep_truth(method: SweepMethod, sigma2: f64, k: usize) -> Result<f64> {
    if method.is_umi() {
        umi_ground_truth(sigma2, UMI_TRUTH_SAMPLES, k, UMI_TRUTH_SEED)
    } else {
        cmi_ground_truth(sigma2)
    }
}

/// Every (σ², N, rep) cell, sorted by σ², then N, then rep.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let truths: Vec<f64> = spec
        .sigma2_list
        .iter()
        .map(|&s| sweep_truth(spec.method, s, spec.k))
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (si, &sigma2) in spec.sigma2_list.iter().enumerate() {
        for &n in &spec.n_list {
            for rep in 0..spec.reps {
                cells.push((si, sigma2, n, rep));
            }
        }
    }
    let mut rows: Vec<SweepRow> = cells
        .into_par_iter()
        .map(|(si, sigma2, n, rep)| {
            let seed = cell_seed(spec.base_seed, sigma2, n, rep);
            Ok(SweepRow {
                method: spec.method,
                sigma2,
                n,
                rep,
                seed,
                estimate: sweep_estimate(spec.method, sigma2, n, spec.k, seed)?,
                truth: truths[si],
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| {
        a.sigma2
            .total_cmp(&b.sigma2)
            .then(a.n.cmp(&b.n))
            .then(a.rep.cmp(&b.rep))
    });
    Ok(rows)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Invalid(format!("{other:?}")),
    }
}

/// Floats are written with Rust's shortest round-trip formatting.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "sigma2", "n", "rep", "seed", "estimate", "truth"])
        .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.method.id().to_string(),
            r.sigma2.to_string(),
            r.n.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            r.estimate.to_string(),
            r.truth.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(Error::Io)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub method: SweepMethod,
    pub sigma2: f64,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub rmse: f64,
    pub truth: f64,
    pub reps: usize,
}

/// Per-(σ², N) mean, sample standard deviation and RMSE against truth.
pub fn summarize(rows: &[SweepRow]) -> Vec<SweepCell> {
    let mut cells: Vec<SweepCell> = Vec::new();
    let mut groups: BTreeMap<(u64, usize, SweepMethod), Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.sigma2.to_bits(), r.n, r.method))
            .or_default()
            .push(r);
    }
    for ((_, n, method), g) in groups {
        let m = g.len() as f64;
        let mean = g.iter().map(|r| r.estimate).sum::<f64>() / m;
        let var = if g.len() > 1 {
            g.iter().map(|r| (r.estimate - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        let rmse = (g
            .iter()
            .map(|r| (r.estimate - r.truth).powi(2))
            .sum::<f64>()
            / m)
            .sqrt();
        cells.push(SweepCell {
            method,
            sigma2: g[0].sigma2,
            n,
            mean,
            std: var.sqrt(),
            rmse,
            truth: g[0].truth,
            reps: g.len(),
        });
    }
    cells.sort_by(|a, b| a.sigma2.total_cmp(&b.sigma2).then(a.n.cmp(&b.n)));
    cells
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSpec {
    pub timepoints: Vec<f64>,
    /// (σ²_xy(t), σ²_yz(t)) per timepoint
    pub noise: Vec<(f64, f64)>,
    pub n_per_t: usize,
    pub seed: u64,
}

/// Columns observed at a set of timepoints; `times[i]` is row i's timepoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    pub times: Vec<f64>,
    pub columns: BTreeMap<String, Vec<f64>>,
    order: Vec<String>,
}

impl TimeSeriesTable {
    pub fn new(times: Vec<f64>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if columns.iter().any(|(_, c)| c.len() != times.len()) {
            return Err(Error::Invalid("all columns need one value per row".into()));
        }
        let order = columns.iter().map(|(n, _)| n.clone()).collect();
        Ok(Self {
            times,
            columns: columns.into_iter().collect(),
            order,
        })
    }

    /// A table with a `t` column; all other numeric columns are kept.
    pub fn from_table(table: &Table) -> Result<Self> {
        let t = table
            .column("t")
            .ok_or_else(|| Error::Invalid("time-indexed data needs a `t` column".into()))?
            .to_vec();
        let cols = table
            .headers
            .iter()
            .filter(|h| h.as_str() != "t")
            .filter_map(|h| table.column(h).map(|c| (h.clone(), c.to_vec())))
            .collect();
        Self::new(t, cols)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Distinct timepoints in ascending order.
    pub fn timepoints(&self) -> Vec<f64> {
        let mut t = self.times.clone();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }

    /// Row indices at timepoint `t`, in row order.
    pub fn rows_at(&self, t: f64) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.times[i] == t).collect()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Invalid(format!("no column named `{name}`")))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.order.iter().cloned());
        w.write_record(&header).map_err(csv_error)?;
        for i in 0..self.len() {
            let mut rec = vec![self.times[i].to_string()];
            rec.extend(self.order.iter().map(|c| self.columns[c][i].to_string()));
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush().map_err(Error::Io)
    }
}

/// Per timepoint: X ~ Beta(1.5, 1.5), Y = X + N(0, σ²_xy), Z = Y + N(0, σ²_yz).
pub fn gen_cascade(spec: &CascadeSpec) -> Result<TimeSeriesTable> {
    if spec.timepoints.len() != spec.noise.len() {
        return Err(Error::Invalid(
            "one noise pair per timepoint required".into(),
        ));
    }
    for &(a, b) in &spec.noise {
        check_sigma2(a)?;
        check_sigma2(b)?;
    }
    let mut rng = seeded(spec.seed);
    let total = spec.timepoints.len() * spec.n_per_t;
    let (mut t, mut x, mut y, mut z) = (
        Vec::with_capacity(total),
        Vec::with_capacity(total),
        Vec::with_capacity(total),
        Vec::with_capacity(total),
    );
    for (&tp, &(sxy, syz)) in spec.timepoints.iter().zip(&spec.noise) {
        for _ in 0..spec.n_per_t {
            let xv = beta15(&mut rng);
            let yv = xv + gaussian(&mut rng, sxy);
            let zv = yv + gaussian(&mut rng, syz);
            t.push(tp);
            x.push(xv);
            y.push(yv);
            z.push(zv);
        }
    }
    TimeSeriesTable::new(t, vec![("x".into(), x), ("y".into(), y), ("z".into(), z)])
}

/// A directed edge between two columns, written `from:to`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

impl FromStr for Edge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok(Edge {
                from: a.into(),
                to: b.into(),
            }),
            _ => Err(Error::Invalid(format!("edge `{s}` must look like from:to"))),
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.from, self.to)
    }
}

/// Dependence-strength estimator used to score each edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrengthMethod {
    Ksg,
    Umi,
    Cmi,
}

impl FromStr for StrengthMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ksg" => Ok(StrengthMethod::Ksg),
            "umi" => Ok(StrengthMethod::Umi),
            "cmi" => Ok(StrengthMethod::Cmi),
            other => Err(Error::Invalid(format!("unknown strength method `{other}`"))),
        }
    }
}

pub fn edge_strength(
    ds: &ContinuousDataset<f64>,
    method: StrengthMethod,
    k: usize,
    seed: u64,
) -> Result<f64> {
    let cfg = EstimatorConfig::with_k(k);
    let est = match method {
        StrengthMethod::Ksg => ksg_mi(ds, k)?,
        StrengthMethod::Umi => umi_continuous(ds, &cfg)?,
        StrengthMethod::Cmi => {
            let pc = PowerConstraint::empirical(ds.x())?;
            cmi_continuous(
                ds,
                &cfg,
                &pc,
                &OptimizerConfig {
                    seed,
                    ..OptimizerConfig::default()
                },
            )?
        }
    };
    Ok(est.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendTrial {
    pub rate: f64,
    pub rep: usize,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendResult {
    pub resample_rates: Vec<f64>,
    pub success_prob: Vec<f64>,
    pub reps: usize,
    pub trials: Vec<TrendTrial>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendSpec {
    pub expected_peaks: BTreeMap<Edge, f64>,
    pub rates: Vec<f64>,
    pub reps: usize,
    pub method: StrengthMethod,
    pub k: usize,
    pub seed: u64,
}

/// Per-timepoint strength of every edge on the rows kept by `keep`.
pub fn edge_strengths(
    data: &TimeSeriesTable,
    edges: &[Edge],
    keep: &BTreeMap<u64, Vec<usize>>,
    method: StrengthMethod,
    k: usize,
    seed: u64,
) -> Result<BTreeMap<Edge, Vec<(f64, f64)>>> {
    let mut out = BTreeMap::new();
    for edge in edges {
        let (a, b) = (data.column(&edge.from)?, data.column(&edge.to)?);
        let mut per_t = Vec::new();
        for (&tb, rows) in keep {
            if rows.len() < k + 1 {
                return Err(Error::InsufficientSamples {
                    label: format!("t={}", f64::from_bits(tb)),
                    available: rows.len(),
                    needed: k + 1,
                });
            }
            let xs: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
            let ys: Vec<f64> = rows.iter().map(|&i| b[i]).collect();
            let ds = ContinuousDataset::from_pairs(&xs, &ys)?;
            per_t.push((
                f64::from_bits(tb),
                edge_strength(&ds, method, k, derive_seed(seed, &[tb]))?,
            ));
        }
        out.insert(edge.clone(), per_t);
    }
    Ok(out)
}

/// Timepoint of the largest strength; ties go to the earliest timepoint.
fn argmax_time(per_t: &[(f64, f64)]) -> Option<f64> {
    per_t
        .iter()
        .fold(None::<(f64, f64)>, |acc, &(t, v)| match acc {
            Some((_, best)) if best >= v => acc,
            _ => Some((t, v)),
        })
        .map(|(t, _)| t)
}

/// Fraction of subsamples, per rate, on which every edge peaks at its
/// expected timepoint. A rate keeps round(rate · n_t) rows of each
/// timepoint, drawn without replacement.
pub fn trend_success(data: &TimeSeriesTable, spec: &TrendSpec) -> Result<TrendResult> {
    if spec.reps == 0 {
        return Err(Error::Invalid("reps must be at least 1".into()));
    }
    if spec.expected_peaks.is_empty() {
        return Err(Error::Invalid(
            "at least one expected peak is required".into(),
        ));
    }
    if let Some(r) = spec.rates.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::Invalid(format!(
            "resampling rate {r} is outside (0, 1]"
        )));
    }
    let edges: Vec<Edge> = spec.expected_peaks.keys().cloned().collect();
    for e in &edges {
        data.column(&e.from)?;
        data.column(&e.to)?;
    }
    let groups: BTreeMap<u64, Vec<usize>> = data
        .timepoints()
        .into_iter()
        .map(|t| (t.to_bits(), data.rows_at(t)))
        .collect();

    let jobs: Vec<(usize, usize)> = (0..spec.rates.len())
        .flat_map(|r| (0..spec.reps).map(move |rep| (r, rep)))
        .collect();
    let outcomes: Vec<(TrendTrial, Option<String>)> = jobs
        .into_par_iter()
        .map(|(ri, rep)| {
            let rate = spec.rates[ri];
            let trial_seed = derive_seed(spec.seed, &[rate.to_bits(), rep as u64]);
            let mut rng = seeded(trial_seed);
            let keep: BTreeMap<u64, Vec<usize>> = groups
                .iter()
                .map(|(&t, rows)| {
                    let m = ((rate * rows.len() as f64).round() as usize).min(rows.len());
                    let mut picked: Vec<usize> = sample(&mut rng, rows.len(), m)
                        .into_iter()
                        .map(|j| rows[j])
                        .collect();
                    picked.sort_unstable();
                    (t, picked)
                })
                .collect();
            let trial = |success| TrendTrial { rate, rep, success };
            match edge_strengths(data, &edges, &keep, spec.method, spec.k, trial_seed) {
                Ok(strengths) => {
                    let success = strengths.iter().all(|(e, per_t)| {
                        argmax_time(per_t) == spec.expected_peaks.get(e).copied()
                    });
                    Ok((trial(success), None))
                }
                Err(e @ Error::InsufficientSamples { .. }) => Ok((
                    trial(false),
                    Some(format!("rate {rate} rep {rep} counted as failure: {e}")),
                )),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut trials = Vec::with_capacity(outcomes.len());
    let mut warnings = Vec::new();
    for (t, w) in outcomes {
        trials.push(t);
        warnings.extend(w);
    }
    let success_prob = (0..spec.rates.len())
        .map(|ri| {
            let hits = trials[ri * spec.reps..(ri + 1) * spec.reps]
                .iter()
                .filter(|t| t.success)
                .count();
            hits as f64 / spec.reps as f64
        })
        .collect();
    Ok(TrendResult {
        resample_rates: spec.rates.clone(),
        success_prob,
        reps: spec.reps,
        trials,
        warnings,
    })
}

pub fn write_trend_csv<W: Write>(result: &TrendResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rate", "rep", "success"])
        .map_err(csv_error)?;
    for t in &result.trials {
        w.write_record([
            t.rate.to_string(),
            t.rep.to_string(),
            u8::from(t.success).to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(Error::Io)
}

pub fn write_trend_summary_csv<W: Write>(result: &TrendResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rate", "success_prob"])
        .map_err(csv_error)?;
    for (r, p) in result.resample_rates.iter().zip(&result.success_prob) {
        w.write_record([r.to_string(), p.to_string()])
            .map_err(csv_error)?;
    }
    w.flush().map_err(Error::Io)
}

/// Maps each timepoint bit pattern to its rows; handy for full-data strengths.
pub fn all_rows_by_time(data: &TimeSeriesTable) -> BTreeMap<u64, Vec<usize>> {
    data.timepoints()
        .into_iter()
        .map(|t| (t.to_bits(), data.rows_at(t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_quantile_inverts_cdf() {
        let cdf = |x: f64| {
            let th = x.sqrt().asin();
            2.0 / std::f64::consts::PI * (th - (4.0 * th).sin() / 4.0)
        };
        for i in 0..=200 {
            let u = i as f64 / 200.0;
            assert_abs_diff_eq!(cdf(beta15_quantile(u)), u, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(beta15_quantile(0.5), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn beta_gaussian_moments() {
        let n = 20_000;
        let ds = gen_beta_gaussian(&GaussianChannelSpec {
            sigma2: 0.36,
            n,
            seed: 3,
        })
        .unwrap();
        let xs: Vec<f64> = ds.x().as_slice().to_vec();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() <= 3.0 * (0.0625 / n as f64).sqrt());
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((var - 0.0625).abs() < 0.003);
        let noise: Vec<f64> = ds
            .y()
            .as_slice()
            .iter()
            .zip(&xs)
            .map(|(y, x)| y - x)
            .collect();
        let nv = noise.iter().map(|e| e * e).sum::<f64>() / n as f64;
        assert!((nv - 0.36).abs() < 5.0 * 0.36 * (2.0 / n as f64).sqrt());
        let again = gen_beta_gaussian(&GaussianChannelSpec {
            sigma2: 0.36,
            n,
            seed: 3,
        })
        .unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn ground_truth_formula() {
        assert_abs_diff_eq!(cmi_ground_truth(1.0).unwrap(), 0.0303123, epsilon = 5e-8);
        assert_abs_diff_eq!(cmi_ground_truth(0.36).unwrap(), 0.0800427, epsilon = 5e-8);
        assert!(cmi_ground_truth(1e12).unwrap() < 1e-12);
        let (a, b, c) = (
            cmi_ground_truth(0.1).unwrap(),
            cmi_ground_truth(1.0).unwrap(),
            cmi_ground_truth(10.0).unwrap(),
        );
        assert!(a > b && b > c);
        assert!(cmi_ground_truth(0.0).is_err());
    }

    #[test]
    fn partition_diagonal_is_log_bins() {
        let xs: Vec<f64> = (0..800).map(|i| (i as f64 * 0.37).sin()).collect();
        let ds = ContinuousDataset::from_pairs(&xs, &xs).unwrap();
        assert_abs_diff_eq!(
            partition_mi(&ds, 8).unwrap().value,
            8f64.ln(),
            epsilon = 1e-12
        );
        assert!(partition_cmi(&ds, 8).unwrap().value <= 8f64.ln() + 1e-9);
        assert_eq!(default_bins(2000), 13);
        assert_eq!(default_bins(100_000), 16);
        assert!(partition_mi(&ds, 1).is_err());
    }

    #[test]
    fn partition_independent_near_zero() {
        let mut rng = seeded(11);
        let xs: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let ys: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let ds = ContinuousDataset::from_pairs(&xs, &ys).unwrap();
        for est in [
            partition_mi(&ds, 8),
            partition_umi(&ds, 8),
            partition_cmi(&ds, 8),
        ] {
            assert!(est.unwrap().value.abs() < 0.05);
        }
    }

    #[test]
    fn equal_frequency_ties_share_bins() {
        let b = equal_frequency_bins(&[3.0, 1.0, 1.0, 2.0, 5.0, 4.0], 3);
        assert_eq!(b, vec![1, 0, 0, 1, 2, 2]);
    }

    #[test]
    fn sweep_shape_and_determinism() {
        let spec = SweepSpec {
            method: SweepMethod::UmiPartition,
            sigma2_list: vec![0.36, 1.0],
            n_list: vec![200, 400],
            reps: 2,
            k: 5,
            base_seed: 1,
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows, run_sweep(&spec).unwrap());
        for r in &rows {
            assert!(r.estimate.abs() <= (r.n as f64).ln());
            assert_eq!(
                sweep_estimate(r.method, r.sigma2, r.n, 5, r.seed).unwrap(),
                r.estimate
            );
        }
        let mut a = Vec::new();
        write_sweep_csv(&rows, &mut a).unwrap();
        assert!(String::from_utf8(a)
            .unwrap()
            .starts_with("method,sigma2,n,rep,seed,estimate,truth\n"));
        assert!("knn".parse::<SweepMethod>().is_err());
        assert!(SweepSpec {
            n_list: vec![400, 200],
            ..spec
        }
        .validate()
        .is_err());
    }

    #[test]
    fn cascade_shape_and_edges() {
        let spec = CascadeSpec {
            timepoints: vec![0.0, 1.0],
            noise: vec![(0.01, 1.0), (1.0, 0.01)],
            n_per_t: 100,
            seed: 2,
        };
        let data = gen_cascade(&spec).unwrap();
        assert_eq!(data.len(), 200);
        assert_eq!(data, gen_cascade(&spec).unwrap());
        assert_eq!(data.timepoints(), vec![0.0, 1.0]);
        assert_eq!(
            "x:y".parse::<Edge>().unwrap(),
            Edge {
                from: "x".into(),
                to: "y".into()
            }
        );
        assert!("xy".parse::<Edge>().is_err());
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let table = crate::dataset::read_table(buf.as_slice(), &[]).unwrap();
        assert_eq!(TimeSeriesTable::from_table(&table).unwrap(), data);
    }
}
