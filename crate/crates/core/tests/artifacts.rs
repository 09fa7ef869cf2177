use std::process::Command;

use serde_json::Value;

use relucert::certify::{certify_point, CertifyConfig};
use relucert::harness::{load_candidate, load_certificate, save_candidate, save_certificate, write_candidate, Candidate};
use relucert::search::{gd_from, GdConfig};
use relucert::{Error, TargetBasis, WeightPoint};

fn example_1() -> WeightPoint {
    let mut rows = vec![vec![-0.6015, 0.3080, 0.3080, 0.3080, 0.3080, 0.3080]];
    for i in 1..6 {
        let mut r = vec![0.2245];
        r.extend((1..6).map(|j| if i == j { 0.9867 } else { -0.0504 }));
        rows.push(r);
    }
    WeightPoint::from_columns(&rows).unwrap()
}

fn edit(path: &std::path::Path, f: impl FnOnce(&mut serde_json::Map<String, Value>)) {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    f(v.as_object_mut().unwrap());
    std::fs::write(path, serde_json::to_string(&v).unwrap()).unwrap();
}

#[test]
fn candidate_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let c = Candidate {
        seed: 7,
        step_size: 0.1,
        iterations: 0,
        objective: 0.1 + 0.2,
        grad_norm: 1e-300,
        point: example_1(),
    };
    write_candidate(&path, &c).unwrap();
    let (back, warnings) = load_candidate(&path).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(back, c);
    for (a, b) in back.point.as_slice().iter().zip(c.point.as_slice()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn gd_record_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let v = TargetBasis::standard(6);
    let rec = gd_from(example_1(), &GdConfig::new(6, 6, 3), &v).unwrap();
    save_candidate(&path, &rec).unwrap();
    let (back, _) = load_candidate(&path).unwrap();
    assert_eq!(back, Candidate::from(&rec));
}

#[test]
fn certificate_round_trip_tamper_and_forward_compatibility() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let v = TargetBasis::standard(6);
    let cert = certify_point(&example_1(), &v, &CertifyConfig::default()).unwrap();
    save_certificate(&path, &cert).unwrap();
    let (back, warnings) = load_certificate(&path).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(back, cert);

    edit(&path, |o| {
        o.insert("comment".into(), Value::String("added by a newer writer".into()));
    });
    let (back, warnings) = load_certificate(&path).unwrap();
    assert_eq!(warnings.len(), 1);
    assert_eq!(back, cert);

    let tampered = dir.path().join("tampered.json");
    std::fs::copy(&path, &tampered).unwrap();
    edit(&tampered, |o| {
        o.insert("r".into(), Value::String(format!("{:e}", cert.r * 2.0)));
    });
    assert!(matches!(load_certificate(&tampered), Err(Error::InvariantViolationOnLoad(_))));

    std::fs::copy(&path, &tampered).unwrap();
    edit(&tampered, |o| {
        o.insert("epsilon".into(), Value::String(format!("{:e}", cert.epsilon / 2.0)));
    });
    assert!(matches!(load_certificate(&tampered), Err(Error::InvariantViolationOnLoad(_))));

    std::fs::copy(&path, &tampered).unwrap();
    edit(&tampered, |o| {
        o.insert("schema".into(), Value::String("certificate/2".into()));
    });
    assert!(matches!(load_certificate(&tampered), Err(Error::SchemaMismatch(_))));
}

fn relucert() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relucert"))
}

#[test]
fn cli_certify_strict_exit_codes_and_precision_override() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    let bad = dir.path().join("global.json");
    let candidate = |point| Candidate {
        seed: 0,
        step_size: 0.1,
        iterations: 0,
        objective: 0.0,
        grad_norm: 0.0,
        point,
    };
    write_candidate(&good, &candidate(example_1())).unwrap();
    let identity = WeightPoint::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    write_candidate(&bad, &candidate(identity)).unwrap();
    let out = dir.path().join("certs");

    let status = relucert()
        .args(["certify", "--strict", "--out"])
        .arg(&out)
        .arg(&good)
        .env("RELU_CERT_PRECISION", "128")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let (cert, _) = load_certificate(&out.join("good.json")).unwrap();
    assert_eq!(cert.precision_bits, 128);

    let status = relucert().args(["certify", "--strict", "--out"]).arg(&out).arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = relucert().args(["certify", "--out"]).arg(&out).arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn cli_experiment_table_and_cdf() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = relucert()
        .args(["experiment", "--k", "3,4", "--runs", "10", "--seed", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let table = relucert().arg("table").arg(&out).output().unwrap();
    let text = String::from_utf8(table.stdout).unwrap();
    assert_eq!(text, std::fs::read_to_string(out.join("table.csv")).unwrap());
    assert!(text.starts_with("k,n,runs,pct_certified,pct_unverified,avg_lambda_min,avg_objective\n"));
    let cdf = relucert().arg("cdf").arg(&out).output().unwrap();
    let text = String::from_utf8(cdf.stdout).unwrap();
    assert_eq!(text, std::fs::read_to_string(out.join("cdf.csv")).unwrap());
    let fractions: Vec<f64> = text
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("3,3,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(fractions.len(), 10);
    assert!(fractions.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*fractions.last().unwrap(), 1.0);
}
