//! Experiment orchestration and artifacts.
//!
//! A run of [`run_experiment`] writes, under the output directory:
//!
//! ```text
//! table.csv
//! cdf.csv
//! k{k}_n{n}/records.csv
//! k{k}_n{n}/candidates/run{i}.json
//! k{k}_n{n}/certificates/class{c}.json
//! ```
//!
//! Numbers in JSON are decimal strings that round-trip exactly. Nothing
//! written depends on wall-clock time or thread scheduling.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::certify::{ball_disjointness_check, certify_point, revalidate, transfer_certificate, Certificate, CertifyConfig, Transfer};
use crate::error::{Error, Result};
use crate::rigor::DEFAULT_PRECISION;
use crate::search::{dedup_cluster, gd_run, Classification, GdConfig, RunRecord, DEFAULT_DEDUP_THRESHOLD, GLOBAL_THRESHOLD};
use crate::weights::{TargetBasis, WeightPoint};

pub const CANDIDATE_SCHEMA: &str = "candidate/1";
pub const CERTIFICATE_SCHEMA: &str = "certificate/1";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// `(k, n)` pairs, run in this order.
    pub configs: Vec<(usize, usize)>,
    pub runs_per_config: usize,
    pub base_seed: u64,
    pub precision_bits: u32,
    pub output_dir: PathBuf,
    pub step_size: f64,
    pub grad_tol: f64,
    pub max_iters: u64,
    pub dedup_threshold: f64,
}

impl ExperimentSpec {
    pub fn new(configs: Vec<(usize, usize)>, runs_per_config: usize, base_seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            configs,
            runs_per_config,
            base_seed,
            precision_bits: DEFAULT_PRECISION,
            output_dir: output_dir.into(),
            step_size: 0.1,
            grad_tol: 1e-9,
            max_iters: 1_000_000,
            dedup_threshold: DEFAULT_DEDUP_THRESHOLD,
        }
    }

    /// `n = k` for every `k` in the range.
    pub fn square(ks: impl IntoIterator<Item = usize>) -> Vec<(usize, usize)> {
        ks.into_iter().map(|k| (k, k)).collect()
    }

    /// `n = k + 1` for every `k` in the range.
    pub fn one_extra(ks: impl IntoIterator<Item = usize>) -> Vec<(usize, usize)> {
        ks.into_iter().map(|k| (k, k + 1)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_config == 0 {
            return Err(Error::InvalidConfig("runs_per_config must be at least 1".into()));
        }
        if let Some(&(k, n)) = self.configs.iter().find(|&&(k, n)| k == 0 || n < k) {
            return Err(Error::InvalidConfig(format!("need n >= k >= 1, got k={k}, n={n}")));
        }
        Ok(())
    }

    pub fn seed(&self, run: usize) -> u64 {
        self.base_seed ^ run as u64
    }

    fn gd_config(&self, k: usize, n: usize, run: usize) -> GdConfig {
        GdConfig {
            step_size: self.step_size,
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            stop_below: Some(GLOBAL_THRESHOLD),
            ..GdConfig::new(k, n, self.seed(run))
        }
    }

    fn certify_config(&self) -> CertifyConfig {
        CertifyConfig {
            precision: self.precision_bits,
            ..CertifyConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub k: usize,
    pub n: usize,
    pub runs: usize,
    pub pct_certified: f64,
    pub pct_unverified: f64,
    /// Averages over certified runs; `None` when there are none.
    pub avg_lambda_min: Option<f64>,
    pub avg_objective: Option<f64>,
    pub global_like: usize,
    pub candidates: usize,
    pub anomalies: usize,
    pub unconverged: usize,
}

/// One line of `records.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub k: usize,
    pub n: usize,
    pub run: usize,
    pub seed: u64,
    pub iterations: u64,
    pub objective: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub classification: String,
    pub class: Option<usize>,
    pub certified: bool,
    pub lambda_min: Option<f64>,
    pub certified_objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub k: usize,
    pub n: usize,
    pub objective: f64,
    pub cumulative_fraction: f64,
}

/// Aggregates the records of one `(k, n)` configuration.
pub fn summarize(k: usize, n: usize, rows: &[RecordRow]) -> SummaryRow {
    let count = |c: Classification| rows.iter().filter(|r| r.classification == c.as_str()).count();
    let runs = rows.len();
    let certified: Vec<&RecordRow> = rows.iter().filter(|r| r.certified).collect();
    let candidates = count(Classification::Candidate);
    let pct = |x: usize| if runs == 0 { 0.0 } else { 100.0 * x as f64 / runs as f64 };
    let avg = |f: fn(&RecordRow) -> Option<f64>| {
        let xs: Vec<f64> = certified.iter().filter_map(|r| f(r)).collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    };
    SummaryRow {
        k,
        n,
        runs,
        pct_certified: pct(certified.len()),
        pct_unverified: pct(candidates - certified.len()),
        avg_lambda_min: avg(|r| r.lambda_min),
        avg_objective: avg(|r| r.certified_objective),
        global_like: count(Classification::GlobalLike),
        candidates,
        anomalies: count(Classification::Anomaly),
        unconverged: count(Classification::Unconverged),
    }
}

/// Empirical CDF of the terminal objective per configuration.
pub fn emit_cdf(groups: &BTreeMap<(usize, usize), Vec<f64>>) -> Vec<CdfRow> {
    let mut out = Vec::new();
    for (&(k, n), objectives) in groups {
        let mut xs = objectives.clone();
        xs.sort_by(f64::total_cmp);
        let total = xs.len() as f64;
        for (i, objective) in xs.into_iter().enumerate() {
            out.push(CdfRow {
                k,
                n,
                objective,
                cumulative_fraction: (i + 1) as f64 / total,
            });
        }
    }
    out
}

/// Everything produced for one `(k, n)` configuration.
#[derive(Debug, Clone)]
pub struct ConfigOutcome {
    pub records: Vec<RunRecord>,
    pub rows: Vec<RecordRow>,
    /// Certificate (or refusal) per candidate class, in class order.
    pub certificates: Vec<std::result::Result<Certificate, String>>,
    pub summary: SummaryRow,
}

fn candidate_ref(run: usize) -> String {
    format!("candidates/run{run:04}.json")
}

fn certificate_ref(class: usize) -> String {
    format!("certificates/class{class:03}.json")
}

/// Runs, classifies, deduplicates and certifies one configuration without
/// touching the file system.
pub fn run_config(spec: &ExperimentSpec, k: usize, n: usize) -> Result<ConfigOutcome> {
    let v = TargetBasis::standard(k);
    let records: Vec<RunRecord> = (0..spec.runs_per_config)
        .into_par_iter()
        .map(|run| gd_run(&spec.gd_config(k, n, run), &v))
        .collect::<Result<_>>()?;

    let cand_idx: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].classification == Classification::Candidate)
        .collect();
    let cand: Vec<RunRecord> = cand_idx.iter().map(|&i| records[i].clone()).collect();
    let classes = dedup_cluster(&cand, &v, spec.dedup_threshold)?;
    info!("k={k} n={n}: {} candidates in {} classes", cand.len(), classes.len());

    let cfg = spec.certify_config();
    let mut certificates: Vec<std::result::Result<Certificate, String>> = classes
        .par_iter()
        .enumerate()
        .map(|(c, class)| {
            let rep = cand_idx[class.members[0].record];
            let mut cert = certify_point(&class.canonical, &v, &cfg).map_err(|e| e.to_string())?;
            cert.point_ref = candidate_ref(rep);
            for m in &class.members {
                let r = cand_idx[m.record];
                let t = transfer_certificate(&cert, &m.aligned, &candidate_ref(r))
                    .map_err(|e| format!("transfer to run {r} of class {c}: {e}"))?;
                cert.transfer_chain.push(t);
            }
            Ok(cert)
        })
        .collect();

    let issued: Vec<(usize, Certificate)> = certificates
        .iter()
        .enumerate()
        .filter_map(|(c, x)| x.as_ref().ok().map(|cert| (c, cert.clone())))
        .collect();
    let only: Vec<Certificate> = issued.iter().map(|(_, c)| c.clone()).collect();
    let disjoint = ball_disjointness_check(&only);
    for &(a, b) in &disjoint.overlapping {
        info!("k={k} n={n}: balls of classes {} and {} intersect", issued[a].0, issued[b].0);
    }
    for (i, (c, _)) in issued.iter().enumerate() {
        if !disjoint.self_consistent(i) {
            certificates[*c] = Err("ball reaches the origin or joins two neurons".into());
        }
    }
    for (c, x) in certificates.iter().enumerate() {
        if let Err(e) = x {
            warn!("k={k} n={n}: class {c} not certified: {e}");
        }
    }

    let mut class_of = vec![None; records.len()];
    for (c, class) in classes.iter().enumerate() {
        for m in &class.members {
            class_of[cand_idx[m.record]] = Some(c);
        }
    }
    let rows: Vec<RecordRow> = records
        .iter()
        .enumerate()
        .map(|(run, rec)| {
            let class = class_of[run];
            let cert = class.and_then(|c| certificates[c].as_ref().ok()).filter(|c| c.is_complete());
            RecordRow {
                k,
                n,
                run,
                seed: rec.config.seed,
                iterations: rec.iterations,
                objective: rec.objective,
                grad_norm: rec.grad_norm,
                converged: rec.converged,
                classification: rec.classification.as_str().to_string(),
                class,
                certified: cert.is_some(),
                lambda_min: cert.map(|c| c.lambda_min),
                certified_objective: cert.map(|c| 0.5 * (c.objective_lo + c.objective_hi)),
            }
        })
        .collect();
    let summary = summarize(k, n, &rows);
    Ok(ConfigOutcome {
        records,
        rows,
        certificates,
        summary,
    })
}

/// Runs every configuration of `spec` and writes all artifacts.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<SummaryRow>> {
    spec.validate()?;
    fs::create_dir_all(&spec.output_dir)?;
    let mut summaries = Vec::new();
    let mut objectives = BTreeMap::new();
    for &(k, n) in &spec.configs {
        let out = run_config(spec, k, n)?;
        let dir = spec.output_dir.join(format!("k{k}_n{n}"));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(dir.join("candidates"))?;
        fs::create_dir_all(dir.join("certificates"))?;
        write_records(&dir.join("records.csv"), &out.rows)?;
        for (run, rec) in out.records.iter().enumerate() {
            if rec.classification == Classification::Candidate {
                save_candidate(&dir.join(candidate_ref(run)), rec)?;
            }
        }
        for (c, cert) in out.certificates.iter().enumerate() {
            if let Ok(cert) = cert {
                save_certificate(&dir.join(certificate_ref(c)), cert)?;
            }
        }
        objectives.insert((k, n), out.records.iter().map(|r| r.objective).collect::<Vec<_>>());
        summaries.push(out.summary);
    }
    write_table(&spec.output_dir.join("table.csv"), &summaries)?;
    write_cdf(&spec.output_dir.join("cdf.csv"), &emit_cdf(&objectives))?;
    Ok(summaries)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_table(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "n", "runs", "pct_certified", "pct_unverified", "avg_lambda_min", "avg_objective"])?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.n.to_string(),
            r.runs.to_string(),
            r.pct_certified.to_string(),
            r.pct_unverified.to_string(),
            opt(r.avg_lambda_min),
            opt(r.avg_objective),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cdf(path: &Path, rows: &[CdfRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records(path: &Path, rows: &[RecordRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RecordRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<RecordRow>, _>>()?;
    Ok(rows)
}

/// Reads every `records.csv` one level below `dir`, grouped by `(k, n)`.
pub fn collect_records(dir: &Path) -> Result<BTreeMap<(usize, usize), Vec<RecordRow>>> {
    let mut groups: BTreeMap<(usize, usize), Vec<RecordRow>> = BTreeMap::new();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path().join("records.csv")))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    for p in paths {
        for row in read_records(&p)? {
            groups.entry((row.k, row.n)).or_default().push(row);
        }
    }
    Ok(groups)
}

fn num(x: f64) -> Value {
    Value::String(format!("{x:e}"))
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::SchemaMismatch(format!("missing field {key}")))
}

fn get_num(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    parse_num(field(obj, key)?, key)
}

fn parse_num(v: &Value, key: &str) -> Result<f64> {
    v.as_str()
        .and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| Error::SchemaMismatch(format!("{key} is not a decimal string")))
}

fn get_uint(obj: &Map<String, Value>, key: &str) -> Result<u64> {
    let v = field(obj, key)?;
    v.as_u64()
        .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
        .ok_or_else(|| Error::SchemaMismatch(format!("{key} is not an unsigned integer")))
}

fn get_bool(obj: &Map<String, Value>, key: &str) -> Result<bool> {
    field(obj, key)?
        .as_bool()
        .ok_or_else(|| Error::SchemaMismatch(format!("{key} is not a boolean")))
}

fn get_str(obj: &Map<String, Value>, key: &str) -> Result<String> {
    field(obj, key)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| Error::SchemaMismatch(format!("{key} is not a string")))
}

fn get_nums(obj: &Map<String, Value>, key: &str) -> Result<Vec<f64>> {
    field(obj, key)?
        .as_array()
        .ok_or_else(|| Error::SchemaMismatch(format!("{key} is not an array")))?
        .iter()
        .map(|x| parse_num(x, key))
        .collect()
}

// Returns the object and warnings about keys outside `known`.
fn open(path: &Path, schema: &str, known: &[&str]) -> Result<(Map<String, Value>, Vec<String>)> {
    let value: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let Value::Object(obj) = value else {
        return Err(Error::SchemaMismatch("top level is not an object".into()));
    };
    let found = get_str(&obj, "schema")?;
    if found != schema {
        return Err(Error::SchemaMismatch(format!("expected {schema}, found {found}")));
    }
    let warnings: Vec<String> = obj
        .keys()
        .filter(|k| !known.contains(&k.as_str()))
        .map(|k| format!("{}: ignoring unknown field {k}", path.display()))
        .collect();
    for w in &warnings {
        warn!("{w}");
    }
    Ok((obj, warnings))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Contents of a candidate file.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub seed: u64,
    pub step_size: f64,
    pub iterations: u64,
    pub objective: f64,
    pub grad_norm: f64,
    pub point: WeightPoint,
}

impl From<&RunRecord> for Candidate {
    fn from(r: &RunRecord) -> Self {
        Candidate {
            seed: r.config.seed,
            step_size: r.config.step_size,
            iterations: r.iterations,
            objective: r.objective,
            grad_norm: r.grad_norm,
            point: r.terminal.clone(),
        }
    }
}

const CANDIDATE_FIELDS: &[&str] = &["schema", "k", "n", "seed", "step_size", "iterations", "objective", "grad_norm", "W"];

pub fn save_candidate(path: &Path, record: &RunRecord) -> Result<()> {
    write_candidate(path, &Candidate::from(record))
}

pub fn write_candidate(path: &Path, c: &Candidate) -> Result<()> {
    let value = json!({
        "schema": CANDIDATE_SCHEMA,
        "k": c.point.k(),
        "n": c.point.n(),
        "seed": c.seed,
        "step_size": num(c.step_size),
        "iterations": c.iterations,
        "objective": num(c.objective),
        "grad_norm": num(c.grad_norm),
        "W": nums(c.point.as_slice()),
    });
    write_json(path, &value)
}

pub fn load_candidate(path: &Path) -> Result<(Candidate, Vec<String>)> {
    let (obj, warnings) = open(path, CANDIDATE_SCHEMA, CANDIDATE_FIELDS)?;
    let k = get_uint(&obj, "k")? as usize;
    let n = get_uint(&obj, "n")? as usize;
    let w = get_nums(&obj, "W")?;
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvariantViolationOnLoad("non-finite weight".into()));
    }
    let point = WeightPoint::new(n, k, w).map_err(|e| Error::InvariantViolationOnLoad(e.to_string()))?;
    let c = Candidate {
        seed: get_uint(&obj, "seed")?,
        step_size: get_num(&obj, "step_size")?,
        iterations: get_uint(&obj, "iterations")?,
        objective: get_num(&obj, "objective")?,
        grad_norm: get_num(&obj, "grad_norm")?,
        point,
    };
    Ok((c, warnings))
}

const CERTIFICATE_FIELDS: &[&str] = &[
    "schema",
    "point_ref",
    "epsilon",
    "lambda_min",
    "B",
    "alpha",
    "r",
    "margin",
    "nonglobal",
    "differentiable_ball",
    "strict",
    "precision_bits",
    "transfer_chain",
    "k",
    "n",
    "W",
    "objective_lo",
    "objective_hi",
    "reconverge_iterations",
];

/// Writes a certificate. Besides the reference to the candidate it came
/// from, the file carries the certified point itself so it can be
/// revalidated on its own.
pub fn save_certificate(path: &Path, c: &Certificate) -> Result<()> {
    let chain: Vec<Value> = c
        .transfer_chain
        .iter()
        .map(|t| {
            json!({
                "point_ref": t.point_ref,
                "distance": num(t.distance),
                "radius": num(t.radius),
                "lambda_min": num(t.lambda_min),
            })
        })
        .collect();
    let value = json!({
        "schema": CERTIFICATE_SCHEMA,
        "point_ref": c.point_ref,
        "epsilon": num(c.epsilon),
        "lambda_min": num(c.lambda_min),
        "B": num(c.b),
        "alpha": num(c.alpha),
        "r": num(c.r),
        "margin": num(c.margin),
        "nonglobal": c.nonglobal,
        "differentiable_ball": c.differentiable_ball,
        "strict": c.strict,
        "precision_bits": c.precision_bits,
        "transfer_chain": chain,
        "k": c.point.k(),
        "n": c.point.n(),
        "W": nums(c.point.as_slice()),
        "objective_lo": num(c.objective_lo),
        "objective_hi": num(c.objective_hi),
        "reconverge_iterations": c.reconverge_iterations,
    });
    write_json(path, &value)
}

/// Loads a certificate against the standard target basis and recomputes its
/// invariants.
pub fn load_certificate(path: &Path) -> Result<(Certificate, Vec<String>)> {
    let (obj, warnings) = open(path, CERTIFICATE_SCHEMA, CERTIFICATE_FIELDS)?;
    let k = get_uint(&obj, "k")? as usize;
    let n = get_uint(&obj, "n")? as usize;
    let point = WeightPoint::new(n, k, get_nums(&obj, "W")?).map_err(|e| Error::InvariantViolationOnLoad(e.to_string()))?;
    let chain = field(&obj, "transfer_chain")?
        .as_array()
        .ok_or_else(|| Error::SchemaMismatch("transfer_chain is not an array".into()))?
        .iter()
        .map(|t| {
            let t = t
                .as_object()
                .ok_or_else(|| Error::SchemaMismatch("transfer entry is not an object".into()))?;
            Ok(Transfer {
                point_ref: get_str(t, "point_ref")?,
                distance: get_num(t, "distance")?,
                radius: get_num(t, "radius")?,
                lambda_min: get_num(t, "lambda_min")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let precision = get_uint(&obj, "precision_bits")?;
    let cert = Certificate {
        point_ref: get_str(&obj, "point_ref")?,
        point,
        epsilon: get_num(&obj, "epsilon")?,
        lambda_min: get_num(&obj, "lambda_min")?,
        b: get_num(&obj, "B")?,
        alpha: get_num(&obj, "alpha")?,
        r: get_num(&obj, "r")?,
        objective_lo: get_num(&obj, "objective_lo")?,
        objective_hi: get_num(&obj, "objective_hi")?,
        margin: get_num(&obj, "margin")?,
        nonglobal: get_bool(&obj, "nonglobal")?,
        differentiable_ball: get_bool(&obj, "differentiable_ball")?,
        strict: get_bool(&obj, "strict")?,
        precision_bits: u32::try_from(precision)
            .ok()
            .filter(|p| (2..=crate::rigor::MAX_PRECISION).contains(p))
            .ok_or_else(|| Error::InvariantViolationOnLoad(format!("precision {precision} out of range")))?,
        reconverge_iterations: get_uint(&obj, "reconverge_iterations")?,
        transfer_chain: chain,
    };
    revalidate(&cert, &TargetBasis::standard(k)).map_err(Error::InvariantViolationOnLoad)?;
    Ok((cert, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(objective: f64, class: Classification, certified: bool) -> RecordRow {
        RecordRow {
            k: 2,
            n: 2,
            run: 0,
            seed: 0,
            iterations: 1,
            objective,
            grad_norm: 0.0,
            converged: true,
            classification: class.as_str().into(),
            class: None,
            certified,
            lambda_min: certified.then_some(0.01),
            certified_objective: certified.then_some(objective),
        }
    }

    #[test]
    fn single_record_cdf() {
        let mut g = BTreeMap::new();
        g.insert((1, 1), vec![0.02]);
        let rows = emit_cdf(&g);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].cumulative_fraction, 1.0);
    }

    #[test]
    fn summary_counts() {
        let rows = vec![
            row(0.0, Classification::GlobalLike, false),
            row(0.02, Classification::Candidate, true),
            row(0.03, Classification::Candidate, false),
            row(0.005, Classification::Anomaly, false),
        ];
        let s = summarize(2, 2, &rows);
        assert_eq!(s.pct_certified, 25.0);
        assert_eq!(s.pct_unverified, 25.0);
        assert_eq!(s.avg_objective, Some(0.02));
        assert_eq!(s.global_like + s.candidates + s.anomalies + s.unconverged, s.runs);
    }

    #[test]
    fn spec_validation() {
        let mut s = ExperimentSpec::new(vec![(3, 2)], 1, 0, "x");
        assert!(s.validate().is_err());
        s.configs = ExperimentSpec::one_extra(1..3);
        assert!(s.validate().is_ok());
        s.runs_per_config = 0;
        assert!(s.validate().is_err());
    }
}
