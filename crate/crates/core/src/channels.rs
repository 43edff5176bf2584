//! Discrete channels P(y|x): capacity by Blahut–Arimoto, Rényi capacity by
//! minimax grid search, channel algebra, and a numeric axiom battery for
//! capacity-like dependence measures.

use rand::Rng;
use serde::Serialize;

use crate::density::validate_prior;
use crate::rng::{derive_seed, seeded, SeededRng};
use crate::{Error, Real, Result};

/// Row-stochastic matrix, one row per input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannel<T> {
    inputs: usize,
    outputs: usize,
    p: Vec<T>,
}

impl<T: Real> DiscreteChannel<T> {
    pub fn new(inputs: usize, outputs: usize, p: Vec<T>) -> Result<Self> {
        if inputs == 0 || outputs == 0 || p.len() != inputs * outputs {
            return Err(Error::Invalid(format!(
                "channel of shape {inputs}x{outputs} needs {} entries, got {}",
                inputs * outputs,
                p.len()
            )));
        }
        if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < T::zero()) {
            return Err(Error::Invalid(format!(
                "channel entries must be non-negative, got {v}"
            )));
        }
        let tol = T::lit(1e-12).max(T::epsilon() * T::from_count(outputs) * T::lit(4.0));
        for (x, row) in p.chunks_exact(outputs).enumerate() {
            let s = row.iter().fold(T::zero(), |a, &v| a + v);
            if (s - T::one()).abs() > tol {
                return Err(Error::Invalid(format!("row {x} sums to {s}, expected 1")));
            }
        }
        Ok(Self { inputs, outputs, p })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let outputs = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != outputs) {
            return Err(Error::Invalid("channel rows have different lengths".into()));
        }
        Self::new(rows.len(), outputs, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut p = vec![T::zero(); n * n];
        for i in 0..n {
            p[i * n + i] = T::one();
        }
        Self {
            inputs: n,
            outputs: n,
            p,
        }
    }

    /// Binary symmetric channel with crossover probability `eps`.
    pub fn bsc(eps: T) -> Result<Self> {
        Self::new(2, 2, vec![T::one() - eps, eps, eps, T::one() - eps])
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.p[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.p.chunks_exact(self.outputs)
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.p[x * self.outputs + y]
    }

    /// Output law Σ_x prior(x) P(·|x).
    pub fn output_marginal(&self, prior: &[T]) -> Vec<T> {
        let mut q = vec![T::zero(); self.outputs];
        for (row, &px) in self.rows().zip(prior) {
            for (qy, &p) in q.iter_mut().zip(row) {
                *qy = *qy + px * p;
            }
        }
        q
    }

    /// Channel restricted to the given input symbols.
    pub fn select_rows(&self, xs: &[usize]) -> Result<Self> {
        let rows: Vec<Vec<T>> = xs.iter().map(|&x| self.row(x).to_vec()).collect();
        Self::from_rows(&rows)
    }
}

/// KL divergence Σ p ln(p/q) with 0 ln 0 = 0.
fn kl<T: Real>(p: &[T], q: &[T]) -> T {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > T::zero())
        .fold(T::zero(), |s, (&a, &b)| s + a * (a / b).ln())
}

/// Reads a channel matrix, one input symbol per row. A first line that does
/// not parse as numbers is taken as a header and skipped.
pub fn read_channel_csv<R: std::io::Read>(reader: R) -> Result<DiscreteChannel<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Invalid(format!("malformed matrix CSV: {e}")))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if r == 0 => continue,
            Err(e) => {
                let column = rec
                    .iter()
                    .position(|c| c.parse::<f64>().is_err())
                    .unwrap_or(0);
                return Err(Error::Parse {
                    row: r,
                    column,
                    msg: e.to_string(),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Invalid("channel matrix has no rows".into()));
    }
    DiscreteChannel::from_rows(&rows)
}

pub fn write_channel_csv<W: std::io::Write>(ch: &DiscreteChannel<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in ch.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| Error::Invalid(e.to_string()))?;
    }
    w.flush().map_err(Error::Io)
}

/// I(prior · ch) in nats.
pub fn mutual_information<T: Real>(prior: &[T], ch: &DiscreteChannel<T>) -> Result<T> {
    validate_prior(prior, ch.inputs())?;
    let q = ch.output_marginal(prior);
    Ok(ch
        .rows()
        .zip(prior)
        .filter(|(_, p)| **p > T::zero())
        .fold(T::zero(), |s, (row, &p)| s + p * kl(row, &q)))
}

/// Mutual information under the uniform input law.
pub fn umi_exact<T: Real>(ch: &DiscreteChannel<T>) -> T {
    let u = vec![T::from_count(ch.inputs()).recip(); ch.inputs()];
    mutual_information(&u, ch).expect("uniform prior is valid")
}

/// Mutual information under the input law `q`.
pub fn q_mi_exact<T: Real>(ch: &DiscreteChannel<T>, q: &[T]) -> Result<T> {
    mutual_information(q, ch)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Capacity<T> {
    /// Capacity in nats (lower end of the final bracket).
    pub value: T,
    pub prior: Vec<T>,
    pub upper: T,
    pub iterations: usize,
}

pub const BA_DEFAULT_TOL: f64 = 1e-11;
pub const BA_DEFAULT_MAX_ITERS: usize = 1_000_000;

/// Blahut–Arimoto alternating maximization. Stops once the capacity bracket
/// [ln Σ_x p(x) e^{D_x}, max_x D_x] is narrower than `tol`, where
/// D_x = D(P(·|x) ‖ q) and q is the current output law. The bracket is valid
/// for any prior, which allows over-relaxed updates p ∝ p e^{μ D} with μ > 1
/// while they keep increasing I(p); the plain μ = 1 update is the fallback.
pub fn blahut_arimoto<T: Real>(
    ch: &DiscreteChannel<T>,
    tol: T,
    max_iters: usize,
) -> Result<Capacity<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let m = ch.inputs();
    let divergences = |p: &[T], d: &mut [T]| -> T {
        let q = ch.output_marginal(p);
        for (dx, row) in d.iter_mut().zip(ch.rows()) {
            *dx = kl(row, &q);
        }
        p.iter()
            .zip(d.iter())
            .fold(T::zero(), |s, (&px, &dx)| s + px * dx)
    };
    let step = |p: &[T], d: &[T], mu: T, top: T| -> Vec<T> {
        let mut next: Vec<T> = p
            .iter()
            .zip(d)
            .map(|(&px, &dx)| px * (mu * (dx - top)).exp())
            .collect();
        let z = next.iter().fold(T::zero(), |s, &v| s + v);
        next.iter_mut().for_each(|v| *v = *v / z);
        next
    };
    let mut p = vec![T::from_count(m).recip(); m];
    let mut d = vec![T::zero(); m];
    let mut info = divergences(&p, &mut d);
    let mut mu = T::one();
    let mut width = T::infinity();
    let mut trial_d = vec![T::zero(); m];
    for it in 1..=max_iters {
        let top = d.iter().copied().fold(T::neg_infinity(), T::max);
        let z = p
            .iter()
            .zip(&d)
            .fold(T::zero(), |s, (&px, &dx)| s + px * (dx - top).exp());
        let lower = top + z.ln();
        width = top - lower;
        if width < tol {
            return Ok(Capacity {
                value: lower.max(T::zero()),
                prior: p,
                upper: top,
                iterations: it,
            });
        }
        loop {
            let next = step(&p, &d, mu, top);
            let next_info = divergences(&next, &mut trial_d);
            if mu == T::one() || next_info >= info {
                p = next;
                info = next_info;
                std::mem::swap(&mut d, &mut trial_d);
                mu = (mu * T::lit(2.0)).min(T::lit(1e6));
                break;
            }
            mu = (mu / T::lit(4.0)).max(T::one());
        }
    }
    Err(Error::NonConvergence {
        iters: max_iters,
        residual: width.as_f64(),
    })
}

/// Capacity with the default tolerance and iteration cap.
pub fn capacity<T: Real>(ch: &DiscreteChannel<T>) -> Result<T> {
    blahut_arimoto(ch, T::lit(BA_DEFAULT_TOL), BA_DEFAULT_MAX_ITERS).map(|c| c.value)
}

/// Cascade X → Y → Z: P(z|x) = Σ_y P(z|y) P(y|x).
pub fn compose<T: Real>(
    first: &DiscreteChannel<T>,
    second: &DiscreteChannel<T>,
) -> Result<DiscreteChannel<T>> {
    if first.outputs() != second.inputs() {
        return Err(Error::Dimension {
            expected: first.outputs(),
            got: second.inputs(),
        });
    }
    let (a, b) = (first.inputs(), second.outputs());
    let mut p = vec![T::zero(); a * b];
    for x in 0..a {
        for (y, &pyx) in first.row(x).iter().enumerate() {
            for (z, &pzy) in second.row(y).iter().enumerate() {
                p[x * b + z] = p[x * b + z] + pyx * pzy;
            }
        }
    }
    renormalize_rows(&mut p, b);
    DiscreteChannel::new(a, b, p)
}

/// Product channel P(y₁,y₂|x₁,x₂) = P₁(y₁|x₁) P₂(y₂|x₂); input (x₁, x₂) has
/// index x₁ |X₂| + x₂, and likewise for outputs.
pub fn parallel<T: Real>(c1: &DiscreteChannel<T>, c2: &DiscreteChannel<T>) -> DiscreteChannel<T> {
    let (rows, cols) = (c1.inputs() * c2.inputs(), c1.outputs() * c2.outputs());
    let mut p = Vec::with_capacity(rows * cols);
    for r1 in c1.rows() {
        for r2 in c2.rows() {
            for &a in r1 {
                for &b in r2 {
                    p.push(a * b);
                }
            }
        }
    }
    renormalize_rows(&mut p, cols);
    DiscreteChannel::new(rows, cols, p).expect("product of stochastic rows is stochastic")
}

/// Appends the input symbol whose output law is Σ_x α_x P(·|x).
pub fn augment_convex_row<T: Real>(
    ch: &DiscreteChannel<T>,
    alpha: &[T],
) -> Result<DiscreteChannel<T>> {
    validate_prior(alpha, ch.inputs())?;
    let mut p = ch.p.clone();
    p.extend(ch.output_marginal(alpha));
    renormalize_rows(&mut p, ch.outputs());
    DiscreteChannel::new(ch.inputs() + 1, ch.outputs(), p)
}

fn renormalize_rows<T: Real>(p: &mut [T], cols: usize) {
    for row in p.chunks_exact_mut(cols) {
        let s = row.iter().fold(T::zero(), |a, &v| a + v);
        if s > T::zero() {
            row.iter_mut().for_each(|v| *v = *v / s);
        }
    }
}

/// Order λ > 0, λ ≠ 1, of a Rényi divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenyiOrder<T>(T);

impl<T: Real> RenyiOrder<T> {
    pub fn new(lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || lambda == T::one() || !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "Rényi order must be positive and != 1, got {lambda}"
            )));
        }
        Ok(Self(lambda))
    }

    pub fn lambda(self) -> T {
        self.0
    }
}

/// D_λ(p ‖ q) = (1/(λ−1)) ln Σ p^λ q^{1−λ}; +∞ when λ > 1 and p is not
/// absolutely continuous with respect to q.
pub fn renyi_divergence<T: Real>(p: &[T], q: &[T], order: RenyiOrder<T>) -> T {
    let l = order.lambda();
    let mut s = T::zero();
    for (&a, &b) in p.iter().zip(q) {
        if a <= T::zero() {
            continue;
        }
        if b <= T::zero() {
            if l > T::one() {
                return T::infinity();
            }
            continue;
        }
        s = s + a.powf(l) * b.powf(T::one() - l);
    }
    if s <= T::zero() {
        // only reachable for λ < 1 with disjoint supports
        return T::infinity();
    }
    s.ln() / (l - T::one())
}

pub const RENYI_MAX_OUTPUTS: usize = 4;
pub const RENYI_DEFAULT_RESOLUTION: usize = 60;
const RENYI_REFINE_LEVELS: usize = 12;
const RENYI_REFINE_SPAN: i64 = 4;
const RENYI_REFINE_SHRINK: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RenyiCapacity<T> {
    pub value: T,
    /// Minimizing output law Q_Y.
    pub centroid: Vec<T>,
    /// Step of the initial simplex grid, 1/resolution.
    pub grid_step: f64,
    /// Step of the last refinement grid.
    pub final_step: f64,
}

/// Rényi capacity min_Q max_x D_λ(P(·|x) ‖ Q) over output laws Q on a
/// simplex grid of step 1/`resolution`, followed by nested local grids that
/// shrink around the incumbent.
pub fn renyi_capacity<T: Real>(
    ch: &DiscreteChannel<T>,
    order: RenyiOrder<T>,
    resolution: usize,
) -> Result<RenyiCapacity<T>> {
    let m = ch.outputs();
    if m > RENYI_MAX_OUTPUTS {
        return Err(Error::Invalid(format!(
            "Rényi capacity grid search supports at most {RENYI_MAX_OUTPUTS} output symbols, got {m}"
        )));
    }
    if resolution < 50 {
        return Err(Error::Invalid(format!(
            "grid resolution must be at least 50, got {resolution}"
        )));
    }
    let objective = |q: &[f64]| -> f64 {
        let qt: Vec<T> = q.iter().map(|&v| T::lit(v)).collect();
        ch.rows()
            .map(|r| renyi_divergence(r, &qt, order))
            .fold(T::neg_infinity(), T::max)
            .as_f64()
    };
    let mut best_q = vec![1.0 / m as f64; m];
    let mut best = objective(&best_q);
    let step = 1.0 / resolution as f64;
    for_each_composition(resolution, m, |c| {
        let q: Vec<f64> = c.iter().map(|&v| v as f64 * step).collect();
        let v = objective(&q);
        if v < best {
            best = v;
            best_q = q;
        }
    });
    let mut local = step;
    for _ in 0..RENYI_REFINE_LEVELS {
        local /= RENYI_REFINE_SHRINK;
        let center = best_q.clone();
        let span = (2 * RENYI_REFINE_SPAN + 1) as usize;
        let total = span.pow((m - 1) as u32);
        for code in 0..total {
            let mut c = code;
            let mut q = vec![0.0; m];
            let mut rest = 1.0;
            for (j, qj) in q.iter_mut().enumerate().take(m - 1) {
                let off = (c % span) as i64 - RENYI_REFINE_SPAN;
                c /= span;
                *qj = center[j] + off as f64 * local;
                rest -= *qj;
            }
            q[m - 1] = rest;
            if q.iter().any(|&v| v < 0.0) {
                continue;
            }
            let v = objective(&q);
            if v < best {
                best = v;
                best_q = q;
            }
        }
    }
    Ok(RenyiCapacity {
        value: T::lit(best.max(0.0)),
        centroid: best_q.into_iter().map(T::lit).collect(),
        grid_step: step,
        final_step: local,
    })
}

/// Visits every vector of `parts` non-negative integers summing to `total`.
fn for_each_composition(total: usize, parts: usize, mut f: impl FnMut(&[usize])) {
    fn rec(total: usize, parts: usize, prefix: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if parts == 1 {
            prefix.push(total);
            f(prefix);
            prefix.pop();
            return;
        }
        for v in 0..=total {
            prefix.push(v);
            rec(total - v, parts - 1, prefix, f);
            prefix.pop();
        }
    }
    rec(total, parts, &mut Vec::with_capacity(parts), &mut f);
}

/// Channel whose rows are independent Dirichlet(1, …, 1) draws.
pub fn random_channel(rng: &mut SeededRng, inputs: usize, outputs: usize) -> DiscreteChannel<f64> {
    let rows: Vec<Vec<f64>> = (0..inputs)
        .map(|_| random_simplex_point(rng, outputs))
        .collect();
    DiscreteChannel::from_rows(&rows).expect("Dirichlet rows are stochastic")
}

pub fn random_simplex_point(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Dependence measure checked by the axiom battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Measure {
    /// Shannon capacity.
    Shannon,
    /// Rényi capacity of the given order.
    Renyi { lambda: f64 },
    /// Mutual information under a uniform input law.
    Umi,
}

impl Measure {
    pub fn evaluate(self, ch: &DiscreteChannel<f64>) -> Result<f64> {
        match self {
            Measure::Shannon => capacity(ch),
            Measure::Renyi { lambda } => {
                renyi_capacity(ch, RenyiOrder::new(lambda)?, RENYI_DEFAULT_RESOLUTION)
                    .map(|r| r.value)
            }
            Measure::Umi => Ok(umi_exact(ch)),
        }
    }

    fn max_outputs(self) -> usize {
        match self {
            Measure::Renyi { .. } => 2,
            _ => 4,
        }
    }

    pub fn name(self) -> String {
        match self {
            Measure::Shannon => "shannon".into(),
            Measure::Renyi { lambda } => format!("renyi:{lambda}"),
            Measure::Umi => "umi".into(),
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    /// `shannon`, `umi`, or `renyi:<order>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shannon" => Ok(Measure::Shannon),
            "umi" => Ok(Measure::Umi),
            _ => {
                let lambda = s
                    .strip_prefix("renyi:")
                    .and_then(|l| l.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::Invalid(format!(
                            "unknown measure `{s}`; expected shannon, umi or renyi:<order>"
                        ))
                    })?;
                RenyiOrder::new(lambda)?;
                Ok(Measure::Renyi { lambda })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub trials: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub measure: String,
    pub seed: u64,
    pub checks: Vec<AxiomCheck>,
    pub pass: bool,
}

impl AxiomReport {
    pub fn check(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    trials: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            trials: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, violation: f64) {
        self.trials += 1;
        self.worst = self.worst.max(if violation.is_nan() {
            f64::MAX
        } else {
            violation
        });
    }

    fn finish(self, tol: f64) -> AxiomCheck {
        AxiomCheck {
            name: self.name.to_owned(),
            trials: self.trials,
            max_violation: self.worst,
            tolerance: tol,
            pass: self.worst <= tol,
        }
    }
}

/// Violation indicator for a strict inequality that must hold.
fn indicator(holds: bool) -> f64 {
    if holds {
        0.0
    } else {
        1.0
    }
}

/// Rows (r, r, s) versus (r, s): same convex hull, different uniform-prior
/// mutual information.
pub fn duplicated_row_pair() -> (DiscreteChannel<f64>, DiscreteChannel<f64>) {
    let r = vec![0.9, 0.1];
    let s = vec![0.2, 0.8];
    (
        DiscreteChannel::from_rows(&[r.clone(), s.clone()]).expect("valid"),
        DiscreteChannel::from_rows(&[r.clone(), r, s]).expect("valid"),
    )
}

/// Randomized numeric checks of the dependence-measure axioms:
/// 0 (zero iff rows identical), 1a/1b (data processing along a cascade),
/// 2 (additivity over parallel channels), 3a (invariance to appending a
/// convex combination of rows), 3b (monotone in the set of rows), and
/// 4 (deterministic onto channels attain ln|Y|, noisy ones fall short).
/// The first 3a trial is always the duplicated-row pair.
pub fn check_axioms(measure: Measure, trials: usize, seed: u64, tol: f64) -> Result<AxiomReport> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let mut t0_zero = Tally::new("axiom0_identical_rows_zero");
    let mut t0_pos = Tally::new("axiom0_distinct_rows_positive");
    let mut t1a = Tally::new("axiom1a_data_processing_first_link");
    let mut t1b = Tally::new("axiom1b_data_processing_second_link");
    let mut t2 = Tally::new("axiom2_additivity");
    let mut t3a = Tally::new("axiom3a_convex_row_invariance");
    let mut t3b = Tally::new("axiom3b_monotone_range");
    let mut t4max = Tally::new("axiom4_deterministic_onto_max");
    let mut t4noisy = Tally::new("axiom4_noisy_below_max");
    let max_out = measure.max_outputs();
    for trial in 0..trials {
        let mut rng = seeded(derive_seed(seed, &[trial as u64]));
        let size = |rng: &mut SeededRng, hi: usize| rng.random_range(2..=hi);

        // Axiom 0
        let (nx, ny) = (size(&mut rng, 4), size(&mut rng, max_out));
        let r = random_simplex_point(&mut rng, ny);
        let same = DiscreteChannel::from_rows(&vec![r.clone(); nx])?;
        t0_zero.record(measure.evaluate(&same)?.abs());
        let argmin = (0..ny)
            .min_by(|&a, &b| r[a].total_cmp(&r[b]))
            .expect("ny >= 2");
        let mut rows = vec![r.clone(); nx];
        let bumped = rng.random_range(0..nx);
        for (y, v) in rows[bumped].iter_mut().enumerate() {
            *v = 0.5 * *v + if y == argmin { 0.5 } else { 0.0 };
        }
        let distinct = DiscreteChannel::from_rows(&rows)?;
        t0_pos.record(indicator(measure.evaluate(&distinct)? > tol));

        // Axioms 1a / 1b
        let (a, b, c) = (
            size(&mut rng, 4),
            size(&mut rng, max_out),
            size(&mut rng, max_out),
        );
        let c1 = random_channel(&mut rng, a, b);
        let c2 = random_channel(&mut rng, b, c);
        let chain = measure.evaluate(&compose(&c1, &c2)?)?;
        t1a.record((chain - measure.evaluate(&c1)?).max(0.0));
        t1b.record((chain - measure.evaluate(&c2)?).max(0.0));

        // Axiom 2
        let o = if max_out == 2 {
            (2, 2)
        } else {
            (size(&mut rng, 4), size(&mut rng, 4))
        };
        let (i1, i2) = (size(&mut rng, 4), size(&mut rng, 4));
        let p1 = random_channel(&mut rng, i1, o.0);
        let p2 = random_channel(&mut rng, i2, o.1);
        let joint = measure.evaluate(&parallel(&p1, &p2))?;
        t2.record((joint - measure.evaluate(&p1)? - measure.evaluate(&p2)?).abs());

        // Axiom 3a / 3b
        let (base, augmented) = if trial == 0 {
            duplicated_row_pair()
        } else {
            let (a, b) = (size(&mut rng, 4), size(&mut rng, max_out));
            let ch = random_channel(&mut rng, a, b);
            let alpha = random_simplex_point(&mut rng, ch.inputs());
            let aug = augment_convex_row(&ch, &alpha)?;
            (ch, aug)
        };
        t3a.record((measure.evaluate(&augmented)? - measure.evaluate(&base)?).abs());
        let (a, b) = (size(&mut rng, 4).max(3), size(&mut rng, max_out));
        let full = random_channel(&mut rng, a, b);
        let keep: Vec<usize> = (0..full.inputs() - 1).collect();
        let sub = full.select_rows(&keep)?;
        t3b.record((measure.evaluate(&sub)? - measure.evaluate(&full)?).max(0.0));

        // Axiom 4
        let ny = size(&mut rng, max_out);
        let nx = ny + rng.random_range(0..=2);
        let mut det = vec![vec![0.0; ny]; nx];
        for (x, row) in det.iter_mut().enumerate() {
            // onto: the first ny inputs hit every output, the rest are arbitrary
            let y = if x < ny { x } else { rng.random_range(0..ny) };
            row[y] = 1.0;
        }
        let ln_y = (ny as f64).ln();
        t4max.record((measure.evaluate(&DiscreteChannel::from_rows(&det)?)? - ln_y).abs());
        let noisy = random_channel(&mut rng, nx, ny);
        t4noisy.record(indicator(measure.evaluate(&noisy)? < ln_y - tol));
    }
    let checks: Vec<AxiomCheck> = [t0_zero, t0_pos, t1a, t1b, t2, t3a, t3b, t4max, t4noisy]
        .into_iter()
        .map(|t| t.finish(tol))
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(AxiomReport {
        measure: measure.name(),
        seed,
        checks,
        pass,
    })
}
