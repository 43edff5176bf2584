use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use depcap::bench::{
    default_bins, gen_cascade, partition_cmi, partition_mi, partition_umi, run_sweep, summarize,
    trend_success, write_sweep_csv, write_trend_csv, write_trend_summary_csv, CascadeSpec, Edge,
    StrengthMethod, SweepMethod, SweepRow, SweepSpec, TimeSeriesTable, TrendSpec,
};
use depcap::channels::{
    augment_convex_row, blahut_arimoto, check_axioms, compose, parallel, read_channel_csv,
    renyi_capacity, write_channel_csv, DiscreteChannel, Measure, RenyiOrder,
};
use depcap::cmi::{cmi_continuous, cmi_discrete, OptimizerConfig, PowerConstraint, WeightGrid};
use depcap::dataset::{load_csv, read_table, CsvSchema, Dataset};
use depcap::density::BandwidthRule;
use depcap::estimators::{kl_entropy, ksg_mi, umi_continuous, umi_discrete, EstimatorConfig};
use depcap::{Error, Estimate};
use serde_json::{json, Value};

use crate::args::*;
use crate::manifest::Manifest;

/// What a command hands back to `main`: a JSON document, raw CSV, or a JSON
/// document paired with a failing verdict (axiom checks).
pub enum Output {
    Json(Value),
    Csv(Vec<u8>),
    Failed(Value),
}

pub type CmdResult = Result<Output, Error>;

const NATS_PER_BIT: f64 = std::f64::consts::LN_2;

pub fn run(cli: &Cli, manifest: &mut Manifest) -> CmdResult {
    match &cli.command {
        Command::Estimate(a) => estimate(a, cli.bits, manifest),
        Command::Channel(c) => channel(c, cli.bits, manifest),
        Command::Axioms(a) => axioms(a, manifest),
        Command::Bench(b) => bench(b, manifest),
    }
}

fn with_manifest(manifest: &Manifest, mut body: Value) -> Value {
    body.as_object_mut()
        .expect("object payload")
        .insert("manifest".into(), manifest.to_json());
    body
}

fn estimate(a: &EstimateArgs, bits: bool, manifest: &mut Manifest) -> CmdResult {
    manifest.seed = a.seed;
    manifest.digest_file(&a.input)?;
    let needs_seed = matches!(a.method, Method::Cmi | Method::CmiDisc);
    if needs_seed && a.seed.is_none() {
        return Err(Error::Invalid(
            "--seed is required for cmi and cmi-disc".into(),
        ));
    }
    let data: Dataset<f64> = load_csv(&a.input, CsvSchema::Auto)?;
    let cfg = EstimatorConfig {
        k: a.k,
        c_reg: a.c_reg,
        bandwidth: a
            .bandwidth
            .map_or(BandwidthRule::Auto, BandwidthRule::Fixed),
        target_prior: a.target_prior.clone(),
    };
    let oc = OptimizerConfig {
        step: a.step,
        iters: a.iters,
        restarts: a.restarts,
        seed: a.seed.unwrap_or(0),
    };
    let grid = WeightGrid {
        c_lo: a.c_lo,
        c_hi: a.c_hi,
        delta: a.delta,
    };
    let continuous = |d: &Dataset<f64>| match d {
        Dataset::Continuous(ds) => Ok(ds.clone()),
        Dataset::DiscreteX(_) => Err(Error::Invalid(format!(
            "method {:?} needs real-valued x0.. columns, found xcat",
            a.method
        ))),
    };
    let est: Estimate<f64> = match a.method {
        Method::Ksg => ksg_mi(&continuous(&data)?, a.k)?,
        Method::Entropy => match &data {
            Dataset::Continuous(ds) => {
                let pts = match a.of {
                    EntropyOf::X => ds.x().clone(),
                    EntropyOf::Y => ds.y().clone(),
                    EntropyOf::Joint => ds.joint(),
                };
                kl_entropy(&pts, a.k)?
            }
            Dataset::DiscreteX(ds) => kl_entropy(ds.y(), a.k)?,
        },
        Method::Umi => umi_continuous(&continuous(&data)?, &cfg)?,
        Method::Cmi => {
            let ds = continuous(&data)?;
            let pc = match a.a {
                Some(v) => PowerConstraint::new(v)?,
                None => PowerConstraint::empirical(ds.x())?,
            };
            cmi_continuous(&ds, &cfg, &pc, &oc)?
        }
        Method::UmiDisc | Method::CmiDisc => {
            let Dataset::DiscreteX(ds) = &data else {
                return Err(Error::Invalid(
                    "discrete methods need an xcat column".into(),
                ));
            };
            if a.method == Method::UmiDisc {
                umi_discrete(ds, &cfg)?
            } else {
                cmi_discrete(ds, &cfg, &grid, &oc)?
            }
        }
        Method::PartitionMi | Method::PartitionUmi | Method::PartitionCmi => {
            let ds = continuous(&data)?;
            let bins = a.bins.unwrap_or_else(|| default_bins(ds.n()));
            match a.method {
                Method::PartitionMi => partition_mi(&ds, bins)?,
                Method::PartitionUmi => partition_umi(&ds, bins)?,
                _ => partition_cmi(&ds, bins)?,
            }
        }
    };
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    let mut body = json!({
        "method": est.method,
        "value_nats": est.value,
        "k": est.k,
        "n": est.n,
        "warnings": est.warnings,
        "diagnostics": est.diagnostics,
    });
    if bits {
        body["value_bits"] = json!(est.value / NATS_PER_BIT);
    }
    Ok(Output::Json(with_manifest(manifest, body)))
}

fn load_channel(path: &Path, manifest: &mut Manifest) -> Result<DiscreteChannel<f64>, Error> {
    manifest.digest_file(path)?;
    read_channel_csv(File::open(path)?)
}

fn channel(c: &ChannelCommand, bits: bool, manifest: &mut Manifest) -> CmdResult {
    let matrix_csv = |ch: &DiscreteChannel<f64>| -> CmdResult {
        let mut buf = Vec::new();
        write_channel_csv(ch, &mut buf)?;
        Ok(Output::Csv(buf))
    };
    match c {
        ChannelCommand::Capacity(a) => {
            let ch = load_channel(&a.matrix, manifest)?;
            let mut body = match a.renyi {
                Some(lambda) => {
                    let r = renyi_capacity(&ch, RenyiOrder::new(lambda)?, a.resolution)?;
                    json!({
                        "measure": format!("renyi:{lambda}"),
                        "capacity_nats": r.value,
                        "output_law": r.centroid,
                        "grid_step": r.grid_step,
                        "final_step": r.final_step,
                    })
                }
                None => {
                    let cap = blahut_arimoto(&ch, a.tol, a.max_iters)?;
                    json!({
                        "measure": "shannon",
                        "capacity_nats": cap.value,
                        "upper_bound_nats": cap.upper,
                        "prior": cap.prior,
                        "iterations": cap.iterations,
                    })
                }
            };
            if bits {
                body["capacity_bits"] =
                    json!(body["capacity_nats"].as_f64().unwrap_or(f64::NAN) / NATS_PER_BIT);
            }
            Ok(Output::Json(with_manifest(manifest, body)))
        }
        ChannelCommand::Compose(a) => {
            let (c1, c2) = (
                load_channel(&a.first, manifest)?,
                load_channel(&a.second, manifest)?,
            );
            matrix_csv(&compose(&c1, &c2)?)
        }
        ChannelCommand::Parallel(a) => {
            let (c1, c2) = (
                load_channel(&a.first, manifest)?,
                load_channel(&a.second, manifest)?,
            );
            matrix_csv(&parallel(&c1, &c2))
        }
        ChannelCommand::Augment(a) => {
            let ch = load_channel(&a.matrix, manifest)?;
            matrix_csv(&augment_convex_row(&ch, &a.alpha)?)
        }
    }
}

fn axioms(a: &AxiomArgs, manifest: &mut Manifest) -> CmdResult {
    manifest.seed = Some(a.seed);
    let measure: Measure = a.measure.parse()?;
    let report = check_axioms(measure, a.trials, a.seed, a.tol)?;
    let body = with_manifest(
        manifest,
        serde_json::to_value(&report).expect("serializable report"),
    );
    if report.pass {
        Ok(Output::Json(body))
    } else {
        for c in report.checks.iter().filter(|c| !c.pass) {
            eprintln!(
                "axiom {} failed: max violation {:e} > {:e}",
                c.name, c.max_violation, c.tolerance
            );
        }
        Ok(Output::Failed(body))
    }
}

fn out_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Invalid(format!("cannot create {}: {e}", dir.display())))?;
    Ok(())
}

fn write_file(
    path: PathBuf,
    f: impl FnOnce(&mut BufWriter<File>) -> Result<(), Error>,
) -> Result<String, Error> {
    let file = File::create(&path)
        .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(path.display().to_string())
}

fn bench(b: &BenchCommand, manifest: &mut Manifest) -> CmdResult {
    match b {
        BenchCommand::Sweep(a) => sweep(a, manifest),
        BenchCommand::Trend(a) => trend(a, manifest),
        BenchCommand::Cascade(a) => cascade(a, manifest),
    }
}

fn sweep(a: &SweepArgs, manifest: &mut Manifest) -> CmdResult {
    manifest.seed = Some(a.seed);
    let (knn, partition) = match a.figure {
        Figure::Umi => (SweepMethod::UmiKnn, SweepMethod::UmiPartition),
        Figure::Cmi => (SweepMethod::CmiKnn, SweepMethod::CmiPartition),
    };
    let methods = match a.methods {
        Baseline::Knn => vec![knn],
        Baseline::Partition => vec![partition],
        Baseline::Both => vec![knn, partition],
    };
    out_dir(&a.out)?;
    let mut rows: Vec<SweepRow> = Vec::new();
    for method in methods {
        rows.extend(run_sweep(&SweepSpec {
            method,
            sigma2_list: a.sigmas.clone(),
            n_list: a.ns.clone(),
            reps: a.reps,
            k: a.k,
            base_seed: a.seed,
        })?);
    }
    let name = match a.figure {
        Figure::Umi => "sweep_umi.csv",
        Figure::Cmi => "sweep_cmi.csv",
    };
    let file = write_file(a.out.join(name), |w| write_sweep_csv(&rows, w))?;
    let summary = serde_json::to_value(summarize(&rows)).expect("serializable summary");
    Ok(Output::Json(with_manifest(
        manifest,
        json!({ "files": [file], "summary": summary }),
    )))
}

fn parse_peaks(specs: &[String]) -> Result<BTreeMap<Edge, f64>, Error> {
    specs
        .iter()
        .map(|s| {
            let (edge, t) = s
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("peak `{s}` must look like from:to=t")))?;
            let t: f64 = t
                .parse()
                .map_err(|_| Error::Invalid(format!("peak timepoint `{t}` is not a number")))?;
            Ok((edge.parse()?, t))
        })
        .collect()
}

fn trend(a: &TrendArgs, manifest: &mut Manifest) -> CmdResult {
    manifest.seed = Some(a.seed);
    manifest.digest_file(&a.input)?;
    let table = read_table(File::open(&a.input)?, &[])?;
    let data = TimeSeriesTable::from_table(&table)?;
    let method = match a.method {
        Strength::Ksg => StrengthMethod::Ksg,
        Strength::Umi => StrengthMethod::Umi,
        Strength::Cmi => StrengthMethod::Cmi,
    };
    let spec = TrendSpec {
        expected_peaks: parse_peaks(&a.peaks)?,
        rates: a.rates.clone(),
        reps: a.reps,
        method,
        k: a.k,
        seed: a.seed,
    };
    out_dir(&a.out)?;
    let res = trend_success(&data, &spec)?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    let trials = write_file(a.out.join("trend.csv"), |w| write_trend_csv(&res, w))?;
    let summary = write_file(a.out.join("trend_summary.csv"), |w| {
        write_trend_summary_csv(&res, w)
    })?;
    let rows: Vec<Value> = res
        .resample_rates
        .iter()
        .zip(&res.success_prob)
        .map(|(r, p)| json!({ "rate": r, "success_prob": p }))
        .collect();
    Ok(Output::Json(with_manifest(
        manifest,
        json!({ "files": [trials, summary], "reps": res.reps, "summary": rows, "warnings": res.warnings }),
    )))
}

fn cascade(a: &CascadeArgs, manifest: &mut Manifest) -> CmdResult {
    manifest.seed = Some(a.seed);
    if a.noise_xy.len() != a.timepoints.len() || a.noise_yz.len() != a.timepoints.len() {
        return Err(Error::Invalid(
            "need one noise value per timepoint for each edge".into(),
        ));
    }
    let data = gen_cascade(&CascadeSpec {
        timepoints: a.timepoints.clone(),
        noise: a
            .noise_xy
            .iter()
            .copied()
            .zip(a.noise_yz.iter().copied())
            .collect(),
        n_per_t: a.n_per_t,
        seed: a.seed,
    })?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        out_dir(parent)?;
    }
    let file = write_file(a.out.clone(), |w| data.write_csv(w))?;
    Ok(Output::Json(with_manifest(
        manifest,
        json!({ "files": [file], "rows": data.len() }),
    )))
}
