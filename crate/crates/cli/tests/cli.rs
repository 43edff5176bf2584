mod common;

use std::f64::consts::LN_2;

use common::{depcap, depcap_env, validate, write_gaussian_channel_csv, write_labelled_csv};
use tempfile::TempDir;

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(depcap(&["--help"]).code, 0);
    assert_eq!(depcap(&["--version"]).code, 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(depcap(&[]).code, 2);
    assert_eq!(depcap(&["frobnicate"]).code, 2);
    assert_eq!(depcap(&["estimate", "--method", "ksg"]).code, 2);
    let missing = depcap(&[
        "estimate",
        "--method",
        "ksg",
        "--input",
        "/nonexistent/data.csv",
    ]);
    assert_eq!(missing.code, 2);
    assert!(missing.stdout.is_empty());
    assert!(!missing.stderr.is_empty());
}

#[test]
fn estimate_ksg_validates_and_reports_bits() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("d.csv");
    write_gaussian_channel_csv(&input, 0.36, 400, 3);

    let plain = depcap(&["estimate", "--method", "ksg", "--input", s(&input)]);
    assert_eq!(plain.code, 0, "{}", plain.stderr);
    let v = plain.json();
    validate("estimate", &v);
    assert!(v.get("value_bits").is_none());
    assert_eq!(v["n"], 400);
    assert_eq!(v["manifest"]["subcommand"], "estimate");
    assert_eq!(v["manifest"]["input_sha256"].as_str().unwrap().len(), 64);

    let bits = depcap(&[
        "--bits",
        "estimate",
        "--method",
        "ksg",
        "--input",
        s(&input),
    ])
    .json();
    validate("estimate", &bits);
    let nats = bits["value_nats"].as_f64().unwrap();
    assert_eq!(nats, v["value_nats"].as_f64().unwrap());
    assert!((bits["value_bits"].as_f64().unwrap() - nats / LN_2).abs() < 1e-12);
}

#[test]
fn every_estimator_method_emits_valid_json() {
    let dir = TempDir::new().unwrap();
    let cont = dir.path().join("c.csv");
    let disc = dir.path().join("d.csv");
    write_gaussian_channel_csv(&cont, 0.36, 300, 5);
    write_labelled_csv(&disc, 300, 5);
    let cases: &[(&str, &std::path::Path, &[&str])] = &[
        ("ksg", &cont, &[]),
        ("entropy", &cont, &["--of", "joint"]),
        ("umi", &cont, &[]),
        (
            "cmi",
            &cont,
            &["--seed", "1", "--iters", "20", "--restarts", "2"],
        ),
        ("partition-mi", &cont, &[]),
        ("partition-umi", &cont, &[]),
        ("partition-cmi", &cont, &[]),
        ("umi-disc", &disc, &[]),
        ("umi-disc", &disc, &["--target-prior", "0.3,0.7"]),
        ("cmi-disc", &disc, &["--seed", "1"]),
    ];
    for (method, input, extra) in cases {
        let mut args = vec!["estimate", "--method", method, "--input", s(input)];
        args.extend_from_slice(extra);
        let r = depcap(&args);
        assert_eq!(r.code, 0, "{method}: {}", r.stderr);
        let v = r.json();
        validate("estimate", &v);
        assert!(v["value_nats"].as_f64().unwrap().is_finite(), "{method}");
    }
}

#[test]
fn estimate_contract_errors() {
    let dir = TempDir::new().unwrap();
    let cont = dir.path().join("c.csv");
    let disc = dir.path().join("d.csv");
    write_gaussian_channel_csv(&cont, 0.36, 200, 1);
    write_labelled_csv(&disc, 200, 1);
    let run = |args: &[&str]| depcap(args).code;
    assert_eq!(
        run(&["estimate", "--method", "cmi", "--input", s(&cont)]),
        2
    );
    assert_eq!(
        run(&["estimate", "--method", "cmi-disc", "--input", s(&disc)]),
        2
    );
    assert_eq!(
        run(&["estimate", "--method", "umi", "--input", s(&disc)]),
        2
    );
    assert_eq!(
        run(&["estimate", "--method", "umi-disc", "--input", s(&cont)]),
        2
    );
    assert_eq!(
        run(&[
            "estimate",
            "--method",
            "ksg",
            "--k",
            "0",
            "--input",
            s(&cont)
        ]),
        2
    );
    assert_eq!(
        run(&[
            "estimate",
            "--method",
            "umi-disc",
            "--target-prior",
            "0.5,0.6",
            "--input",
            s(&disc)
        ]),
        2
    );
    let infeasible = depcap(&[
        "estimate",
        "--method",
        "cmi",
        "--seed",
        "0",
        "--a",
        "1e-9",
        "--input",
        s(&cont),
    ]);
    assert_eq!(infeasible.code, 3, "{}", infeasible.stderr);
    assert!(infeasible.stdout.is_empty());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("d.csv");
    write_gaussian_channel_csv(&input, 1.0, 500, 2);
    let args = ["estimate", "--method", "umi", "--input", s(&input)];
    let one = depcap_env(&args, &[("DEPCAP_THREADS", "1")]).json();
    let three = depcap_env(&args, &[("DEPCAP_THREADS", "3")]).json();
    assert_eq!(one["value_nats"], three["value_nats"]);
    assert_eq!(one["diagnostics"], three["diagnostics"]);
    assert_eq!(depcap_env(&args, &[("DEPCAP_THREADS", "many")]).code, 2);
}

fn write(dir: &TempDir, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn capacity_outputs() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.csv", "1,0,0\n0,1,0\n0,0,1\n");
    let r = depcap(&["--bits", "channel", "capacity", "--matrix", s(&id)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    validate("capacity", &v);
    assert!((v["capacity_nats"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-9);
    assert!((v["capacity_bits"].as_f64().unwrap() - 3f64.log2()).abs() < 1e-9);

    let r = depcap(&["channel", "capacity", "--matrix", s(&id), "--renyi", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    validate("capacity", &v);
    assert_eq!(v["measure"], "renyi:2");
    assert!((v["capacity_nats"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-3);

    let bad = write(&dir, "bad.csv", "0.6,0.5\n0.5,0.5\n");
    assert_eq!(
        depcap(&["channel", "capacity", "--matrix", s(&bad)]).code,
        2
    );
    let text = write(&dir, "text.csv", "a,b\n0.5,x\n");
    assert_eq!(
        depcap(&["channel", "capacity", "--matrix", s(&text)]).code,
        2
    );
    assert_eq!(
        depcap(&["channel", "capacity", "--matrix", s(&id), "--renyi", "-1"]).code,
        2
    );
}

fn matrix(out: &str) -> Vec<Vec<f64>> {
    out.lines()
        .map(|l| l.split(',').map(|c| c.trim().parse().unwrap()).collect())
        .collect()
}

#[test]
fn matrix_operations_write_csv() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "0.9,0.1\n0.2,0.8\n");
    let b = write(&dir, "b.csv", "0.5,0.25,0.25\n0,1,0\n");

    let r = depcap(&["channel", "compose", "--first", s(&a), "--second", s(&b)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let m = matrix(&r.text());
    let expect = [[0.45, 0.325, 0.225], [0.1, 0.85, 0.05]];
    for (row, e) in m.iter().zip(expect) {
        for (x, y) in row.iter().zip(e) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    let r = depcap(&["channel", "parallel", "--first", s(&a), "--second", s(&b)]);
    assert_eq!(r.code, 0);
    let m = matrix(&r.text());
    assert_eq!((m.len(), m[0].len()), (4, 6));
    assert!(m
        .iter()
        .all(|row| (row.iter().sum::<f64>() - 1.0).abs() < 1e-12));

    let r = depcap(&[
        "channel",
        "augment",
        "--matrix",
        s(&a),
        "--alpha",
        "0.5,0.5",
    ]);
    assert_eq!(r.code, 0);
    let m = matrix(&r.text());
    assert_eq!(m.len(), 3);
    assert!((m[2][0] - 0.55).abs() < 1e-12);

    let round_trip = write(
        &dir,
        "p.csv",
        &depcap(&["channel", "parallel", "--first", s(&a), "--second", s(&a)]).text(),
    );
    let v = depcap(&["channel", "capacity", "--matrix", s(&round_trip)]).json();
    let single = depcap(&["channel", "capacity", "--matrix", s(&a)]).json();
    let (pv, sv) = (
        v["capacity_nats"].as_f64().unwrap(),
        single["capacity_nats"].as_f64().unwrap(),
    );
    assert!((pv - 2.0 * sv).abs() < 1e-6);

    assert_eq!(
        depcap(&["channel", "compose", "--first", s(&b), "--second", s(&b)]).code,
        2
    );
    assert_eq!(
        depcap(&[
            "channel",
            "augment",
            "--matrix",
            s(&a),
            "--alpha",
            "0.7,0.7"
        ])
        .code,
        2
    );
}

#[test]
fn axioms_exit_codes() {
    let ok = depcap(&[
        "axioms",
        "--measure",
        "shannon",
        "--trials",
        "20",
        "--seed",
        "1",
    ]);
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    let v = ok.json();
    validate("axioms", &v);
    assert_eq!(v["pass"], true);

    let fail = depcap(&[
        "axioms",
        "--measure",
        "umi",
        "--trials",
        "20",
        "--seed",
        "1",
    ]);
    assert_eq!(fail.code, 4);
    let v = fail.json();
    validate("axioms", &v);
    assert_eq!(v["pass"], false);
    assert!(!fail.stderr.is_empty());

    assert_eq!(
        depcap(&["axioms", "--measure", "tsallis", "--seed", "1"]).code,
        2
    );
    assert_eq!(
        depcap(&[
            "axioms",
            "--measure",
            "shannon",
            "--trials",
            "0",
            "--seed",
            "1"
        ])
        .code,
        2
    );
    assert_eq!(depcap(&["axioms", "--measure", "shannon"]).code, 2);
}

#[test]
fn sweep_writes_identical_files_on_rerun() {
    let dir = TempDir::new().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let r = depcap(&[
            "bench",
            "sweep",
            "--figure",
            "umi",
            "--sigmas",
            "0.36,1",
            "--ns",
            "200",
            "--reps",
            "2",
            "--seed",
            "11",
            "--out",
            s(&out),
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        validate("sweep", &r.json());
        std::fs::read(out.join("sweep_umi.csv")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("method,sigma2,n,rep,seed,estimate,truth")
    );
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn cmi_sweep_runs() {
    let dir = TempDir::new().unwrap();
    let r = depcap(&[
        "bench",
        "sweep",
        "--figure",
        "cmi",
        "--sigmas",
        "1",
        "--ns",
        "150",
        "--reps",
        "1",
        "--seed",
        "2",
        "--methods",
        "partition",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    validate("sweep", &v);
    assert_eq!(v["summary"][0]["method"], "cmi_partition");
}

#[test]
fn cascade_and_trend_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("cascade.csv");
    let gen = |path: &std::path::Path| {
        let r = depcap(&[
            "bench",
            "cascade",
            "--timepoints",
            "0,1,2",
            "--noise-xy",
            "0.001,0.05,0.05",
            "--noise-yz",
            "0.05,0.001,0.05",
            "--n-per-t",
            "200",
            "--seed",
            "4",
            "--out",
            s(path),
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        validate("cascade", &r.json());
        std::fs::read(path).unwrap()
    };
    let first = gen(&data);
    assert_eq!(first, gen(&dir.path().join("again.csv")));
    assert!(String::from_utf8_lossy(&first).starts_with("t,x,y,z\n"));

    let trend = |sub: &str| {
        let out = dir.path().join(sub);
        let r = depcap(&[
            "bench",
            "trend",
            "--input",
            s(&data),
            "--peaks",
            "x:y=0,y:z=1",
            "--rates",
            "0.2,1",
            "--reps",
            "5",
            "--seed",
            "3",
            "--out",
            s(&out),
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let v = r.json();
        validate("trend", &v);
        (
            v,
            std::fs::read(out.join("trend.csv")).unwrap(),
            std::fs::read(out.join("trend_summary.csv")).unwrap(),
        )
    };
    let (v, trials, summary) = trend("t1");
    let (_, trials2, summary2) = trend("t2");
    assert_eq!((trials, summary), (trials2, summary2));
    assert_eq!(v["summary"][1]["success_prob"], 1.0);
}

#[test]
fn bench_errors() {
    let dir = TempDir::new().unwrap();
    let blocker = write(&dir, "file", "");
    let r = depcap(&[
        "bench",
        "sweep",
        "--figure",
        "umi",
        "--sigmas",
        "1",
        "--ns",
        "100",
        "--seed",
        "1",
        "--out",
        s(&blocker.join("sub")),
    ]);
    assert_eq!(r.code, 2);
    assert_eq!(
        depcap(&[
            "bench",
            "sweep",
            "--figure",
            "umi",
            "--sigmas",
            "-1",
            "--ns",
            "100",
            "--seed",
            "1",
            "--out",
            s(dir.path())
        ])
        .code,
        2
    );
    let data = write(&dir, "c.csv", "t,x,y\n0,0.1,0.2\n");
    let r = depcap(&[
        "bench",
        "trend",
        "--input",
        s(&data),
        "--peaks",
        "x:q=0",
        "--rates",
        "1",
        "--seed",
        "1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(r.code, 2);
    let r = depcap(&[
        "bench",
        "trend",
        "--input",
        s(&data),
        "--peaks",
        "x:y=0",
        "--rates",
        "1.5",
        "--seed",
        "1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(r.code, 2);
}
