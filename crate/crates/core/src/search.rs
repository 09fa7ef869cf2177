//! Plain gradient descent from Xavier-style initializations, run
//! classification, and deduplication of terminal points up to neuron and
//! coordinate permutations.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::closed_form::Evaluator;
use crate::error::{Error, Result};
use crate::weights::{norm, TargetBasis, WeightPoint};

/// Objective below which a terminal point counts as a global minimum.
pub const GLOBAL_THRESHOLD: f64 = 1e-3;
/// Objective at or above which a converged point is a candidate.
pub const CANDIDATE_THRESHOLD: f64 = 1e-2;
pub const DEFAULT_DEDUP_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GdConfig {
    pub k: usize,
    pub n: usize,
    pub step_size: f64,
    /// Bound on every neuron's gradient block norm.
    pub grad_tol: f64,
    pub max_iters: u64,
    pub seed: u64,
    /// Stop as soon as the objective falls below this value. Descent never
    /// climbs back, so such runs are classified the same either way.
    pub stop_below: Option<f64>,
}

impl GdConfig {
    pub fn new(k: usize, n: usize, seed: u64) -> Self {
        GdConfig {
            k,
            n,
            step_size: 0.1,
            grad_tol: 1e-9,
            max_iters: 1_000_000,
            seed,
            stop_below: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n == 0 {
            return Err(Error::InvalidConfig("k and n must be positive".into()));
        }
        if !(self.step_size > 0.0) || !(self.grad_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidConfig(
                "step_size and grad_tol must be positive, max_iters at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Classification {
    GlobalLike,
    Candidate,
    Anomaly,
    Unconverged,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::GlobalLike => "global",
            Classification::Candidate => "candidate",
            Classification::Anomaly => "anomaly",
            Classification::Unconverged => "unconverged",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Classification::GlobalLike,
            Classification::Candidate,
            Classification::Anomaly,
            Classification::Unconverged,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
    }
}

pub fn classify(objective: f64, converged: bool) -> Classification {
    if objective < GLOBAL_THRESHOLD {
        Classification::GlobalLike
    } else if objective < CANDIDATE_THRESHOLD {
        Classification::Anomaly
    } else if converged {
        Classification::Candidate
    } else {
        Classification::Unconverged
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: GdConfig,
    pub terminal: WeightPoint,
    pub iterations: u64,
    pub objective: f64,
    /// Largest per-neuron gradient block norm at the terminal point.
    pub grad_norm: f64,
    pub converged: bool,
    pub classification: Classification,
    /// Steps after which the objective went up.
    pub descent_violations: u64,
}

/// Neurons i.i.d. `N(0, I/k)`.
pub fn xavier_init<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> WeightPoint {
    let dist = Normal::new(0.0, (1.0 / k as f64).sqrt()).expect("positive variance");
    let w = (0..n * k).map(|_| dist.sample(rng)).collect();
    WeightPoint::new(n, k, w).expect("k, n positive")
}

/// Runs from the initialization determined by `config.seed`.
pub fn gd_run(config: &GdConfig, v: &TargetBasis) -> Result<RunRecord> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start = xavier_init(config.k, config.n, &mut rng);
    gd_from(start, config, v)
}

pub fn gd_from(start: WeightPoint, config: &GdConfig, v: &TargetBasis) -> Result<RunRecord> {
    config.validate()?;
    if start.n() != config.n || start.k() != config.k {
        return Err(Error::DimensionMismatch("start point does not match config".into()));
    }
    let ev = Evaluator::new(v);
    let mut w = start;
    let k = w.k();
    let mut grad = vec![0.0; w.n() * k];
    let mut prev = f64::INFINITY;
    let mut violations = 0;
    let mut iterations = 0;
    loop {
        let f = ev.value_and_gradient(&w, &mut grad).map_err(|e| match e {
            Error::ZeroNeuron(crate::Operand::Neuron(i)) => Error::SingularEncounter {
                iteration: iterations,
                neuron: i,
            },
            e => e,
        })?;
        if f > prev {
            violations += 1;
        }
        prev = f;
        let gmax = grad.chunks_exact(k).map(norm).fold(0.0, f64::max);
        let converged = gmax <= config.grad_tol;
        let cut = config.stop_below.is_some_and(|c| f < c);
        if converged || cut || iterations >= config.max_iters {
            return Ok(RunRecord {
                config: config.clone(),
                terminal: w,
                iterations,
                objective: f,
                grad_norm: gmax,
                converged,
                classification: classify(f, converged),
                descent_violations: violations,
            });
        }
        for (x, g) in w.as_mut_slice().iter_mut().zip(&grad) {
            *x -= config.step_size * g;
        }
        iterations += 1;
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn sorted_rows(w: &WeightPoint) -> WeightPoint {
    let mut rows: Vec<&[f64]> = w.rows().collect();
    rows.sort_by(|a, b| lex(a, b));
    WeightPoint::new(w.n(), w.k(), rows.concat()).expect("same shape")
}

fn column(w: &WeightPoint, a: usize) -> Vec<f64> {
    w.rows().map(|r| r[a]).collect()
}

fn sorted_columns(w: &WeightPoint) -> WeightPoint {
    let cols: Vec<Vec<f64>> = (0..w.k()).map(|a| column(w, a)).collect();
    let mut idx: Vec<usize> = (0..w.k()).collect();
    idx.sort_by(|&a, &b| lex(&cols[a], &cols[b]));
    let rows: Vec<usize> = (0..w.n()).collect();
    w.permuted(&rows, &idx)
}

/// Calls `f` with every permutation of `0..len` (Heap's algorithm).
fn for_each_permutation(len: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..len).collect();
    let mut c = vec![0; len];
    f(&p);
    let mut i = 0;
    while i < len {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Largest of `n`, `k` up to which canonical forms are exact.
pub const EXACT_CANONICAL_LIMIT: usize = 8;

/// Representative of `W` under simultaneous neuron and coordinate
/// permutations. Exact lexicographic minimum when `min(n, k) <= 8`,
/// otherwise a permutation-invariant heuristic key.
pub fn canonicalize(w: &WeightPoint, v: &TargetBasis) -> Result<WeightPoint> {
    if !v.is_standard() {
        return Err(Error::SymmetryUnavailable);
    }
    v.check_compatible(w)?;
    Ok(canonical_form(w))
}

pub(crate) fn canonical_form(w: &WeightPoint) -> WeightPoint {
    let (n, k) = (w.n(), w.k());
    if n.min(k) > EXACT_CANONICAL_LIMIT {
        return greedy_form(w);
    }
    let mut best: Option<WeightPoint> = None;
    let mut consider = |cand: WeightPoint| {
        if best.as_ref().is_none_or(|b| lex(cand.as_slice(), b.as_slice()) == Ordering::Less) {
            best = Some(cand);
        }
    };
    if k <= n {
        let rows: Vec<usize> = (0..n).collect();
        for_each_permutation(k, |q| consider(sorted_rows(&w.permuted(&rows, q))));
    } else {
        let cols: Vec<usize> = (0..k).collect();
        for_each_permutation(n, |p| consider(sorted_columns(&w.permuted(p, &cols))));
    }
    best.expect("at least one permutation")
}

fn greedy_form(w: &WeightPoint) -> WeightPoint {
    let keys: Vec<Vec<f64>> = (0..w.k())
        .map(|a| {
            let mut c = column(w, a);
            c.sort_by(|x, y| y.total_cmp(x));
            c
        })
        .collect();
    let mut idx: Vec<usize> = (0..w.k()).collect();
    idx.sort_by(|&a, &b| lex(&keys[a], &keys[b]).reverse());
    let rows: Vec<usize> = (0..w.n()).collect();
    sorted_rows(&w.permuted(&rows, &idx))
}

/// Minimum-cost perfect matching on a square cost matrix; `result[i]` is
/// the column assigned to row `i`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn best_rows(reference: &WeightPoint, x: &WeightPoint) -> Vec<usize> {
    let cost: Vec<Vec<f64>> = reference.rows().map(|r| x.rows().map(|s| sq(r, s)).collect()).collect();
    hungarian(&cost)
}

fn best_cols(reference: &WeightPoint, x: &WeightPoint) -> Vec<usize> {
    let rc: Vec<Vec<f64>> = (0..reference.k()).map(|a| column(reference, a)).collect();
    let xc: Vec<Vec<f64>> = (0..x.k()).map(|a| column(x, a)).collect();
    let cost: Vec<Vec<f64>> = rc.iter().map(|r| xc.iter().map(|s| sq(r, s)).collect()).collect();
    hungarian(&cost)
}

/// Permutes `x` to sit close to `reference` by alternating row and column
/// assignments. Returns the aligned copy and its distance; the distance is an
/// upper bound on the true distance between the two orbits.
pub fn align(reference: &WeightPoint, x: &WeightPoint) -> (WeightPoint, f64) {
    let mut best = (x.clone(), reference.distance(x));
    let (n, k) = (x.n(), x.k());
    let ident_rows: Vec<usize> = (0..n).collect();
    let ident_cols: Vec<usize> = (0..k).collect();

    // column-blind start: match rows by their sorted entries
    let sorted = |w: &WeightPoint| -> Vec<Vec<f64>> {
        w.rows()
            .map(|r| {
                let mut r = r.to_vec();
                r.sort_by(f64::total_cmp);
                r
            })
            .collect()
    };
    let (rs, xs) = (sorted(reference), sorted(x));
    let cost: Vec<Vec<f64>> = rs.iter().map(|r| xs.iter().map(|s| sq(r, s)).collect()).collect();
    let starts = [x.clone(), x.permuted(&hungarian(&cost), &ident_cols)];

    for start in starts {
        let mut cur = start;
        for _ in 0..6 {
            let c = cur.permuted(&ident_rows, &best_cols(reference, &cur));
            let next = c.permuted(&best_rows(reference, &c), &ident_cols);
            let d = reference.distance(&next);
            let improved = d < reference.distance(&cur);
            if d < best.1 {
                best = (next.clone(), d);
            }
            cur = next;
            if !improved {
                break;
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMember {
    /// Index into the clustered record list.
    pub record: usize,
    /// Member terminal permuted into the representative's frame.
    pub aligned: WeightPoint,
    /// Distance from `aligned` to the class canonical point.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateClass {
    pub canonical: WeightPoint,
    pub members: Vec<ClassMember>,
    /// Largest pairwise distance between aligned members.
    pub diameter: f64,
}

/// Greedy complete-linkage clustering of canonicalized terminal points: a
/// point joins the first class whose every member lies within `threshold`.
pub fn dedup_cluster(records: &[RunRecord], v: &TargetBasis, threshold: f64) -> Result<Vec<CandidateClass>> {
    if let Some(first) = records.first() {
        let shape = (first.config.k, first.config.n);
        if records.iter().any(|r| (r.config.k, r.config.n) != shape) {
            return Err(Error::DimensionMismatch("records mix (k, n) configurations".into()));
        }
    }
    let mut classes: Vec<CandidateClass> = Vec::new();
    for (idx, rec) in records.iter().enumerate() {
        let key = canonicalize(&rec.terminal, v)?;
        let mut placed = false;
        for class in classes.iter_mut() {
            let (aligned, d) = align(&class.canonical, &key);
            if d > threshold {
                continue;
            }
            let far = class.members.iter().map(|m| m.aligned.distance(&aligned)).fold(0.0, f64::max);
            if far > threshold {
                continue;
            }
            class.diameter = class.diameter.max(far);
            class.members.push(ClassMember {
                record: idx,
                aligned,
                distance: d,
            });
            placed = true;
            break;
        }
        if !placed {
            classes.push(CandidateClass {
                canonical: key.clone(),
                members: vec![ClassMember {
                    record: idx,
                    aligned: key,
                    distance: 0.0,
                }],
                diameter: 0.0,
            });
        }
    }
    Ok(classes)
}
