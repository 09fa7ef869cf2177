//! Acceptance criteria, one test each. Every test prints a single
//! `[PASS]` or `[FAIL]` line before asserting; run with `--nocapture` to
//! see them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;

use relucert::certify::{build_m, certify_point, padded_hessian, Certificate, CertifyConfig};
use relucert::closed_form::{
    fd_gradient_oracle, fd_hessian_oracle, gradient_f, hess_block_h1, hess_block_h2, hessian_f, mc_objective_oracle,
    objective_f, pair_geometry,
};
use relucert::harness::{load_certificate, run_experiment, ExperimentSpec, SummaryRow};
use relucert::rigor::{
    central_binomial_identity_check, eigen_lower_bound_f64, hessian_norm_bound_lh, sorted_eigenvalues, spectral_norm_sym,
    third_order_bound_la, BallSpec,
};
use relucert::search::{gd_from, xavier_init, Classification, GdConfig};
use relucert::{TargetBasis, WeightPoint};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn example_1() -> WeightPoint {
    let mut rows = vec![vec![-0.6015, 0.3080, 0.3080, 0.3080, 0.3080, 0.3080]];
    for i in 1..6 {
        let mut r = vec![0.2245];
        r.extend((1..6).map(|j| if i == j { 0.9867 } else { -0.0504 }));
        rows.push(r);
    }
    WeightPoint::from_columns(&rows).unwrap()
}

fn example_2() -> WeightPoint {
    let mut rows = Vec::new();
    for i in 0..7 {
        let mut r: Vec<f64> = (0..7).map(|j| if i == j { 0.9841 } else { -0.0298 }).collect();
        r.extend([0.1263, 0.0687]);
        rows.push(r);
    }
    let mut r = vec![0.2301; 7];
    r.extend([-0.1890, -0.4862]);
    rows.push(r);
    WeightPoint::from_columns(&rows).unwrap()
}

// GD from the printed matrix to per-neuron gradient norm 1e-9 within 1e4
// iterations, then certification (which reconverges further on its own).
fn certify_example(w: WeightPoint) -> (u64, bool, Certificate, Duration) {
    let start = Instant::now();
    let v = TargetBasis::standard(w.k());
    let cfg = GdConfig {
        max_iters: 10_000,
        ..GdConfig::new(w.k(), w.n(), 0)
    };
    let run = gd_from(w, &cfg, &v).unwrap();
    let cert = certify_point(&run.terminal, &v, &CertifyConfig::default()).unwrap();
    (run.iterations, run.converged, cert, start.elapsed())
}

fn example_criterion(id: u32, w: WeightPoint, lambda_ref: f64, margin_min: f64) {
    let (iters, converged, c, t) = certify_example(w);
    let pass = converged
        && (c.lambda_min - lambda_ref).abs() <= 0.1 * lambda_ref
        && c.r <= 5e-7
        && c.margin >= margin_min
        && c.is_complete()
        && t <= Duration::from_secs(600);
    report(
        id,
        &format!("example {} certification", id),
        pass,
        format!(
            "reconverged in {iters} iterations, lambda_min {:.6e}, r {:.3e}, margin {:.6}, nonglobal {}, strict {}, {:.2?}",
            c.lambda_min, c.r, c.margin, c.nonglobal, c.strict, t
        ),
    );
}

#[test]
fn criterion_1_example_one() {
    example_criterion(1, example_1(), 0.004699, 0.024);
}

#[test]
fn criterion_2_example_two() {
    example_criterion(2, example_2(), 0.005944, 0.019);
}

fn experiment(configs: Vec<(usize, usize)>, runs: usize) -> (Vec<SummaryRow>, usize, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::new(configs, runs, 1, dir.path());
    let rows = run_experiment(&spec).unwrap();
    let mut bad = 0;
    for row in &rows {
        let certs = dir.path().join(format!("k{}_n{}/certificates", row.k, row.n));
        for e in std::fs::read_dir(certs).unwrap() {
            if load_certificate(&e.unwrap().path()).is_err() {
                bad += 1;
            }
        }
        assert_eq!(row.global_like + row.candidates + row.anomalies + row.unconverged, row.runs);
    }
    (rows, bad, dir)
}

#[test]
fn criterion_3_square_statistics() {
    let start = Instant::now();
    let (rows, bad, _dir) = experiment(vec![(10, 10)], 200);
    let r = &rows[0];
    let avg = r.avg_objective.unwrap_or(f64::NAN);
    let pass = (25.0..=45.0).contains(&r.pct_certified)
        && (0.015..=0.030).contains(&avg)
        && bad == 0
        && start.elapsed() <= Duration::from_secs(7200);
    report(
        3,
        "(10,10) certified fraction",
        pass,
        format!(
            "{}% certified, {}% unverified, average objective {:.5}, average lambda_min {:.5}, {} certificates failed reload, {:.2?}",
            r.pct_certified,
            r.pct_unverified,
            avg,
            r.avg_lambda_min.unwrap_or(f64::NAN),
            bad,
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_4_overparameterized_scarcity() {
    let (wide_rows, bad_wide, _d1) = experiment(vec![(10, 12)], 100);
    let (narrow_rows, bad_narrow, _d2) = experiment(vec![(8, 9)], 200);
    let (wide, narrow) = (&wide_rows[0], &narrow_rows[0]);
    let certified_wide = (wide.pct_certified * wide.runs as f64 / 100.0).round() as usize;
    let pass = certified_wide == 0 && narrow.pct_certified <= 2.0 && bad_wide + bad_narrow == 0;
    report(
        4,
        "over-parameterization scarcity",
        pass,
        format!(
            "(10,12): {certified_wide} certified of {} runs; (8,9): {}% certified of {} runs",
            wide.runs, narrow.pct_certified, narrow.runs
        ),
    );
}

fn random_instance(rng: &mut ChaCha8Rng, max_k: usize, extra: usize) -> (WeightPoint, TargetBasis) {
    let k = rng.random_range(1..=max_k);
    let n = rng.random_range(k..=k + extra);
    (xavier_init(k, n, rng), TargetBasis::standard(k))
}

// Largest singular value of `h2` from its restriction to the plane of `w`
// and `v`; on the orthogonal complement it acts as a multiple of the
// identity.
fn h2_norm_oracle(h: &DMatrix<f64>, w: &[f64], v: &[f64]) -> f64 {
    let unit = |x: &[f64]| {
        let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        x.iter().map(|a| a / n).collect::<Vec<_>>()
    };
    let e1 = unit(w);
    let vb = unit(v);
    let c: f64 = e1.iter().zip(&vb).map(|(a, b)| a * b).sum();
    let e2 = unit(&vb.iter().zip(&e1).map(|(b, a)| b - c * a).collect::<Vec<_>>());
    let basis = [e1, e2];
    let mut a = [[0.0; 2]; 2];
    for (i, x) in basis.iter().enumerate() {
        for (j, y) in basis.iter().enumerate() {
            let hy = h * nalgebra::DVector::from_column_slice(y);
            a[i][j] = x.iter().zip(hy.iter()).map(|(p, q)| p * q).sum();
        }
    }
    let fro2 = a.iter().flatten().map(|x| x * x).sum::<f64>();
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let plane = ((fro2 + (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt();
    let theta = c.clamp(-1.0, 1.0).acos();
    if w.len() > 2 {
        plane.max((PI - theta) / (2.0 * PI))
    } else {
        plane
    }
}

#[test]
fn criterion_5_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_z: f64 = 0.0;
    let mut mc_fail = 0;
    for i in 0..100 {
        let (w, v) = random_instance(&mut rng, 4, 2);
        let f = objective_f(&w, &v).unwrap();
        let mc = mc_objective_oracle(&w, &v, 1_000_000, 1000 + i).unwrap();
        let z = (f - mc.mean).abs() / mc.std_err;
        worst_z = worst_z.max(z);
        if z > 3.0 {
            mc_fail += 1;
        }
    }

    let mut worst_grad: f64 = 0.0;
    let mut worst_hess: f64 = 0.0;
    let mut worst_block: f64 = 0.0;
    for _ in 0..100 {
        let (w, v) = loop {
            let (w, v) = random_instance(&mut rng, 5, 2);
            if w.k() >= 2 {
                break (w, v);
            }
        };
        let g = gradient_f(&w, &v).unwrap();
        let gfd = fd_gradient_oracle(&w, &v, 1e-5).unwrap();
        let num = g.iter().zip(&gfd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst_grad = worst_grad.max(num / den);
        let h = hessian_f(&w, &v).unwrap();
        let hfd = fd_hessian_oracle(&w, &v, 1e-5).unwrap();
        worst_hess = worst_hess.max((h - hfd).abs().max());

        let (a, b) = (w.row(0), v.row(0));
        {
            let geo = pair_geometry(a, b).unwrap();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            let h1 = hess_block_h1(a, b).unwrap();
            let expect = geo.sin_theta * nb / (PI * na);
            worst_block = worst_block.max((spectral_norm_sym(&h1) - expect).abs());
            let h2 = hess_block_h2(a, b).unwrap();
            let sv = h2.clone().svd(false, false).singular_values.max();
            worst_block = worst_block.max((sv - h2_norm_oracle(&h2, a, b)).abs());
        }
    }
    let pass = mc_fail == 0 && worst_grad <= 1e-6 && worst_hess <= 1e-5 && worst_block <= 1e-10;
    report(
        5,
        "oracle equivalence",
        pass,
        format!(
            "MC: {mc_fail}/100 outside 3 SE (worst {worst_z:.2} SE); gradient rel err {worst_grad:.2e}; Hessian abs err {worst_hess:.2e}; block norm err {worst_block:.2e}"
        ),
    );
}

// Cholesky of `a - shift I` in 256-bit arithmetic.
fn positive_definite_after_shift(a: &DMatrix<f64>, shift: f64) -> bool {
    let n = a.nrows();
    let prec = 256;
    let mut l: Vec<Vec<Float>> = vec![vec![Float::new(prec); n]; n];
    for j in 0..n {
        let mut d = Float::with_val(prec, a[(j, j)]) - shift;
        for p in 0..j {
            d -= Float::with_val(prec, &l[j][p] * &l[j][p]);
        }
        if d <= 0 {
            return false;
        }
        let dj = d.sqrt();
        for i in j + 1..n {
            let mut s = Float::with_val(prec, a[(i, j)]);
            for p in 0..j {
                s -= Float::with_val(prec, &l[i][p] * &l[j][p]);
            }
            l[i][j] = s / &dj;
        }
        l[j][j] = dj;
    }
    true
}

// Uniform entries in [-1, 1], symmetrized, then shifted so the condition
// number is `cond`.
fn random_spd(rng: &mut ChaCha8Rng, dim: usize, cond: f64) -> DMatrix<f64> {
    let r = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..=1.0));
    let a = (&r + r.transpose()) * 0.5;
    let eig = sorted_eigenvalues(&a);
    let spread = eig[dim - 1] - eig[0];
    let shift = -eig[0] + spread / (cond - 1.0);
    a + DMatrix::identity(dim, dim) * shift
}

#[test]
fn criterion_6_eigenvalue_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut unsound, mut loose, mut worst_gap) = (0, 0, 0.0f64);
    for i in 0..100 {
        let dim = rng.random_range(5..=40);
        let cond = 2.0 * 10f64.powf(5.6 * (i as f64) / 99.0);
        let a = random_spd(&mut rng, dim, cond);
        let rep = eigen_lower_bound_f64(&a, 256).unwrap();
        let b = rep.lambda_min_lower;
        if b == -1.0 || !positive_definite_after_shift(&a, b) {
            unsound += 1;
            continue;
        }
        let gap = sorted_eigenvalues(&a)[0] - b;
        worst_gap = worst_gap.max(gap);
        if positive_definite_after_shift(&a, b + 1e-6) {
            loose += 1;
        }
    }
    let neg = eigen_lower_bound_f64(&(-DMatrix::<f64>::identity(7, 7)), 256).unwrap();
    let binom = central_binomial_identity_check(30);
    let pass = unsound == 0 && loose == 0 && neg.lambda_min_lower == -1.0 && binom;
    report(
        6,
        "eigenvalue-bound soundness",
        pass,
        format!(
            "{unsound} unsound, {loose} with gap above 1e-6 (worst float gap {worst_gap:.2e}), -I gives {}, binomial identity {}",
            neg.lambda_min_lower, binom
        ),
    );
}

#[test]
fn criterion_7_lift_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 20 {
        let k = rng.random_range(1..=6);
        let n = rng.random_range(1..=(50 / k).min(8));
        let w = xavier_init(k, n, &mut rng);
        let v = TargetBasis::standard(k);
        let Ok(h) = hessian_f(&w, &v) else { continue };
        let m = build_m(&w, &v).unwrap();
        let spec_m = sorted_eigenvalues(&m);
        for pad in [1, 2] {
            let mut expect = sorted_eigenvalues(&h);
            for _ in 0..pad {
                expect.extend(&spec_m);
            }
            expect.sort_by(f64::total_cmp);
            let got = sorted_eigenvalues(&padded_hessian(&w, &v, pad).unwrap());
            for (a, b) in got.iter().zip(&expect) {
                worst = worst.max((a - b).abs());
            }
        }
        count += 1;
    }
    report(7, "dimension-lift spectrum union", worst <= 1e-9, format!("20 instances, worst deviation {worst:.2e}"));
}

#[test]
fn criterion_8_lipschitz_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut la_viol, mut lh_viol) = (0, 0);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..50 {
        let (w0, v) = random_instance(&mut rng, 5, 2);
        let min_norm = w0.neuron_norms().into_iter().fold(f64::INFINITY, f64::min);
        let alpha = 0.3 * min_norm;
        let ball = BallSpec::new(&w0, alpha, &v, 128).unwrap();
        let la = third_order_bound_la(&ball, v.count(), w0.n()).unwrap().hi_f64();
        let lh = hessian_norm_bound_lh(&ball, v.count(), w0.n()).unwrap().hi_f64();
        let inside = |rng: &mut ChaCha8Rng| {
            let d: Vec<f64> = (0..w0.as_slice().len()).map(|_| rng.random::<f64>() - 0.5).collect();
            let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let t = alpha * rng.random::<f64>();
            let p: Vec<f64> = w0.as_slice().iter().zip(&d).map(|(a, b)| a + t * b / dn).collect();
            WeightPoint::new(w0.n(), w0.k(), p).unwrap()
        };
        let (a, b) = (inside(&mut rng), inside(&mut rng));
        let (Ok(ha), Ok(hb)) = (hessian_f(&a, &v), hessian_f(&b, &v)) else { continue };
        let (sa, sb) = (spectral_norm_sym(&ha), spectral_norm_sym(&hb));
        let dist = a.distance(&b);
        if (sa - sb).abs() > la * dist {
            la_viol += 1;
        }
        worst_ratio = worst_ratio.max((sa - sb).abs() / (la * dist));
        if sa > lh || sb > lh {
            lh_viol += 1;
        }
    }
    report(
        8,
        "Lipschitz-bound empiricism",
        la_viol == 0 && lh_viol == 0,
        format!("{la_viol} L_A violations (largest ratio {worst_ratio:.3}), {lh_viol} L_H violations over 50 pairs"),
    );
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_9_determinism() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut trees = Vec::new();
    let mut rows = Vec::new();
    for d in &dirs {
        let spec = ExperimentSpec::new(vec![(6, 6), (10, 10)], 40, 9, d.path());
        rows.push(run_experiment(&spec).unwrap());
        trees.push(read_tree(d.path()));
    }
    let certs = trees[0].keys().filter(|k| k.contains("certificates")).count();
    let pass = rows[0] == rows[1] && trees[0] == trees[1] && certs > 0;
    report(
        9,
        "determinism",
        pass,
        format!("{} artifact files ({} certificates) byte-identical: {}", trees[0].len(), certs, trees[0] == trees[1]),
    );
}

#[test]
fn examples_classify_as_candidates() {
    for w in [example_1(), example_2()] {
        let v = TargetBasis::standard(w.k());
        let run = gd_from(w.clone(), &GdConfig::new(w.k(), w.n(), 0), &v).unwrap();
        assert_eq!(run.classification, Classification::Candidate);
    }
}
