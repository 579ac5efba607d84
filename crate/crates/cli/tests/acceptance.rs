//! Acceptance report. Prints one PASS/FAIL line per criterion.
//!
//! The process exits 0 after reporting so the regular test run stays green;
//! set `FAIRREC_ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use fairrec_core::assignment::{max_weight_matching, max_weight_permutation};
use fairrec_core::baselines::{default_depth, iter_lp_policy};
use fairrec_core::experiment::{run_grid, ExperimentConfig, ExperimentRecord, Method};
use fairrec_core::solver::{gradient, Block};
use fairrec_core::{
    envy_audit, social_welfare, solve, uniform_policy, ExamKind, ExaminationFunction, Instance,
    Objective, Policy, SolverConfig,
};
use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize, exam: ExaminationFunction) -> Instance {
    let p1: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
    let p2: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
    Instance::from_rows(&p1, &p2, exam).unwrap()
}

fn random_exam(rng: &mut ChaCha8Rng) -> ExaminationFunction {
    if rng.random::<bool>() {
        ExaminationFunction::inverse()
    } else {
        ExaminationFunction::logarithmic()
    }
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for idx in 0..left.len() {
            let x = left.remove(idx);
            prefix.push(x);
            rec(prefix, left, out);
            prefix.pop();
            left.insert(idx, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..d).collect(), &mut out);
    out
}

fn perm_matrix(perm: &[usize]) -> DMatrix<f64> {
    // perm[item] = position
    DMatrix::from_fn(perm.len(), perm.len(), |r, c| if perm[r] == c { 1.0 } else { 0.0 })
}

fn random_ds(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let perms = permutations(d);
    let weights: Vec<f64> = (0..4).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    let mut out = DMatrix::zeros(d, d);
    for w in weights {
        out += perm_matrix(perms.choose(rng).unwrap()) * (w / total);
    }
    out
}

fn random_policy(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Policy {
    Policy {
        a: (0..n).map(|_| random_ds(rng, m)).collect(),
        b: (0..m).map(|_| random_ds(rng, n)).collect(),
    }
}

fn exam_weights(exam: &ExaminationFunction, len: usize) -> Vec<f64> {
    (1..=len)
        .map(|k| {
            if exam.cutoff.is_some_and(|cut| k > cut) {
                return 0.0;
            }
            match exam.kind {
                ExamKind::Inverse => 1.0 / k as f64,
                ExamKind::Logarithmic => 1.0 / ((k + 1) as f64).log2(),
            }
        })
        .collect()
}

/// Left and right utilities by direct summation over (j, k, l).
fn naive_utilities(inst: &Instance, pol: &Policy) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = (inst.n(), inst.m());
    let va = exam_weights(inst.exam(), m);
    let vb = exam_weights(inst.exam(), n);
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];
    for i in 0..n {
        for j in 0..m {
            let p = inst.p1()[(i, j)] * inst.p2()[(j, i)];
            for k in 0..m {
                for l in 0..n {
                    let x = p * va[k] * pol.a[i][(j, k)] * vb[l] * pol.b[j][(i, l)];
                    u[i] += x;
                    v[j] += x;
                }
            }
        }
    }
    (u, v)
}

fn naive_objective(inst: &Instance, pol: &Policy, objective: Objective, block: Block) -> f64 {
    let (u, v) = naive_utilities(inst, pol);
    match (objective, block) {
        (Objective::Sw, _) => u.iter().sum(),
        (Objective::Nsw, Block::A) => v.iter().map(|x| x.ln()).sum(),
        (Objective::Nsw, Block::B) => u.iter().map(|x| x.ln()).sum(),
    }
}

/// Deterministic SW maximum over every assignment of rankings.
fn brute_force_deterministic(inst: &Instance) -> f64 {
    let (n, m) = (inst.n(), inst.m());
    let va = exam_weights(inst.exam(), m);
    let vb = exam_weights(inst.exam(), n);
    let pa = permutations(m);
    let pb = permutations(n);
    // Each left agent's ranking only interacts with right rankings through
    // the product, so enumerate all right rankings and optimize each left
    // agent independently.
    let mut best = f64::NEG_INFINITY;
    let mut choice = vec![0usize; m];
    loop {
        let mut total = 0.0;
        for i in 0..n {
            let mut agent_best = f64::NEG_INFINITY;
            for perm in &pa {
                let mut s = 0.0;
                for j in 0..m {
                    let p = inst.p1()[(i, j)] * inst.p2()[(j, i)];
                    s += p * va[perm[j]] * vb[pb[choice[j]][i]];
                }
                agent_best = agent_best.max(s);
            }
            total += agent_best;
        }
        best = best.max(total);
        let mut idx = 0;
        loop {
            if idx == m {
                return best;
            }
            choice[idx] += 1;
            if choice[idx] < pb.len() {
                break;
            }
            choice[idx] = 0;
            idx += 1;
        }
    }
}

fn example_one(eps: f64) -> Instance {
    Instance::from_rows(&[vec![1.0], vec![1.0]], &[vec![1.0, 1.0 - eps]], ExaminationFunction::inverse())
        .unwrap()
}

fn crit_example_one() -> Outcome {
    let pi1 = Policy {
        a: vec![DMatrix::from_element(1, 1, 1.0); 2],
        b: vec![DMatrix::identity(2, 2)],
    };
    let pi2 = Policy {
        a: vec![DMatrix::from_element(1, 1, 1.0); 2],
        b: vec![DMatrix::from_element(2, 2, 0.5)],
    };
    let mut worst: f64 = 0.0;
    let mut audits_ok = true;
    for eps in [0.1, 0.5, 0.9] {
        let inst = example_one(eps);
        let sw1 = social_welfare(&inst, &pi1).unwrap();
        let sw2 = social_welfare(&inst, &pi2).unwrap();
        worst = worst.max((sw1 - (1.0 + (1.0 - eps) / 2.0)).abs());
        worst = worst.max((sw2 - (0.75 + 0.75 * (1.0 - eps))).abs());
        let r1 = envy_audit(&inst, &pi1, 1e-9).unwrap();
        let r2 = envy_audit(&inst, &pi2, 1e-9).unwrap();
        audits_ok &= (r1.left_envy_pairs, r1.right_envy_pairs) == (1, 0);
        audits_ok &= (r2.left_envy_pairs, r2.right_envy_pairs) == (0, 0);
    }
    outcome(worst <= 1e-12 && audits_ok, format!("max |SW error| {worst:.1e}, audits match: {audits_ok}"))
}

fn crit_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for _ in 0..20 {
        let n = rng.random_range(3..=5);
        let m = rng.random_range(3..=5);
        let base = random_instance(&mut rng, n, m, ExaminationFunction::inverse());
        for kind in [ExamKind::Inverse, ExamKind::Logarithmic] {
            let inst = base.clone().with_exam(ExaminationFunction::new(kind, None));
            for _ in 0..10 {
                let pol = random_policy(&mut rng, n, m);
                for objective in [Objective::Sw, Objective::Nsw] {
                    for block in [Block::A, Block::B] {
                        let g = gradient(&inst, &pol, objective, block, 1e-12).unwrap();
                        for (agent, ga) in g.iter().enumerate() {
                            for r in 0..ga.nrows() {
                                for c in 0..ga.ncols() {
                                    let mut plus = pol.clone();
                                    let mut minus = pol.clone();
                                    let (pm, mm) = match block {
                                        Block::A => (&mut plus.a[agent], &mut minus.a[agent]),
                                        Block::B => (&mut plus.b[agent], &mut minus.b[agent]),
                                    };
                                    pm[(r, c)] += h;
                                    mm[(r, c)] -= h;
                                    let fd = (naive_objective(&inst, &plus, objective, block)
                                        - naive_objective(&inst, &minus, objective, block))
                                        / (2.0 * h);
                                    let rel = (ga[(r, c)] - fd).abs() / fd.abs().max(ga[(r, c)].abs()).max(1e-12);
                                    worst = worst.max(rel);
                                    checked += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    outcome(worst <= 1e-4, format!("{checked} entries, max relative error {worst:.2e}"))
}

fn crit_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let perms = permutations(4);
    let mut perm_ok = 0;
    for _ in 0..50 {
        let w = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-5.0..5.0));
        let best = perms
            .iter()
            .map(|p| (0..4).map(|r| w[(r, p[r])]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let got = max_weight_permutation(&w).unwrap().value(&w);
        if (got - best).abs() <= 1e-12 * (1.0 + best.abs()) {
            perm_ok += 1;
        }
    }
    // Every matching of K_{3,3}: choose each left vertex's partner or none.
    let mut match_ok = 0;
    for _ in 0..50 {
        let w = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let mut best = 0.0f64;
        for code in 0..4usize.pow(3) {
            let choice: Vec<usize> = (0..3).map(|i| (code / 4usize.pow(i)) % 4).collect();
            let used: Vec<usize> = choice.iter().copied().filter(|&c| c < 3).collect();
            if used.iter().collect::<BTreeSet<_>>().len() != used.len() {
                continue;
            }
            let s: f64 = (0..3).filter(|&i| choice[i] < 3).map(|i| w[(i, choice[i])]).sum();
            best = best.max(s);
        }
        let got = max_weight_matching(&w, &BTreeSet::new()).unwrap();
        let recomputed: f64 = got.pairs.iter().map(|&(i, j)| w[(i, j)]).sum();
        if (got.weight - best).abs() <= 1e-12 && (recomputed - best).abs() <= 1e-12 {
            match_ok += 1;
        }
    }
    outcome(
        perm_ok == 50 && match_ok == 50,
        format!("permutation {perm_ok}/50, K3,3 matching {match_ok}/50"),
    )
}

fn crit_brute_force_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut bound_ok = 0;
    let mut within = 0;
    for t in 0..30 {
        let d = if t % 2 == 0 { 2 } else { 3 };
        let exam = random_exam(&mut rng);
        let inst = random_instance(&mut rng, d, d, exam);
        let opt = brute_force_deterministic(&inst);
        let (pol, _) = solve(&inst, &SolverConfig::new(Objective::Sw)).unwrap();
        let sw = social_welfare(&inst, &pol).unwrap();
        let uni = social_welfare(&inst, &uniform_policy(d, d)).unwrap();
        if sw <= opt + 1e-6 && sw >= uni {
            bound_ok += 1;
        }
        if sw >= 0.99 * opt {
            within += 1;
        }
    }
    outcome(bound_ok == 30, format!("bounds hold {bound_ok}/30; within 1% of optimum {within}/30"))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn crit_fairness_headline() -> Outcome {
    let cfg = ExperimentConfig::from_json(
        r#"{"n_values":[20],"m":20,"lambdas":[0.0,0.2,0.4,0.6,0.8,1.0],
            "exams":["inv","log"],"methods":["sw","nsw"],"trials":10,"tau":1e-6}"#,
    )
    .unwrap();
    let rows = run_grid(&cfg).unwrap();
    if let Some(bad) = rows.iter().find(|r| r.error.is_some()) {
        return outcome(false, format!("run failed: {:?}", bad.error));
    }
    let cell = |method: Method, exam: ExamKind, lambda: f64| -> Vec<&ExperimentRecord> {
        rows.iter()
            .filter(|r| r.method == method && r.exam == exam && (r.lambda - lambda).abs() < 1e-9)
            .collect()
    };
    let pairs = |r: &ExperimentRecord| r.envy_left + r.envy_right;
    let mut misses = Vec::new();
    for exam in [ExamKind::Inverse, ExamKind::Logarithmic] {
        for lambda in cfg.lambdas.clone() {
            let nsw = cell(Method::Nsw, exam, lambda);
            let sw = cell(Method::Sw, exam, lambda);
            if lambda <= 0.8 + 1e-9 {
                let free = nsw.iter().filter(|r| pairs(r) == 0.0).count();
                if (free as f64) < 0.9 * nsw.len() as f64 {
                    misses.push(format!("{exam} λ={lambda}: NSW envy-free {free}/{}", nsw.len()));
                }
            }
            if lambda >= 0.6 - 1e-9 {
                let (es, en) = (mean(sw.iter().map(|r| pairs(r))), mean(nsw.iter().map(|r| pairs(r))));
                if es < en {
                    misses.push(format!("{exam} λ={lambda}: mean envy SW {es:.2} < NSW {en:.2}"));
                }
            }
            if lambda < 1.0 - 1e-9 {
                let ms = mean(sw.iter().map(|r| r.expected_matches));
                let mn = mean(nsw.iter().map(|r| r.expected_matches));
                if ms < mn {
                    misses.push(format!("{exam} λ={lambda}: mean matches SW {ms:.4} < NSW {mn:.4}"));
                }
            }
        }
    }
    if misses.is_empty() {
        outcome(true, "all cells satisfy the three properties")
    } else {
        outcome(false, misses.join("; "))
    }
}

fn crit_uniform_envy_free() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut ok = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=8);
        let mut exam = random_exam(&mut rng);
        if rng.random::<bool>() {
            exam.cutoff = Some(rng.random_range(1..=3));
        }
        let inst = random_instance(&mut rng, n, m, exam);
        let r = envy_audit(&inst, &uniform_policy(n, m), 0.0).unwrap();
        if (r.left_envy_pairs, r.right_envy_pairs) == (0, 0) {
            ok += 1;
        }
    }
    outcome(ok == 100, format!("{ok}/100 envy-free at τ=0"))
}

fn crit_iterlp_k1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for t in 0..30 {
        let d = if t % 2 == 0 { 2 } else { 3 };
        let kind = random_exam(&mut rng).kind;
        let inst = random_instance(&mut rng, d, d, ExaminationFunction::new(kind, Some(1)));
        let pol = iter_lp_policy(&inst, default_depth(&inst)).unwrap();
        let sw = social_welfare(&inst, &pol).unwrap();
        let opt = brute_force_deterministic(&inst);
        worst = worst.max((sw - opt).abs());
        let r = envy_audit(&inst, &pol, 1e-9).unwrap();
        if (sw - opt).abs() <= 1e-9 && (r.left_envy_pairs, r.right_envy_pairs) == (0, 0) {
            ok += 1;
        }
    }
    outcome(ok == 30, format!("{ok}/30 optimal and envy-free; max |SW - optimum| {worst:.1e}"))
}

fn run_twice(dir: &Path, args: &[String], files: &[&str]) -> bool {
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let out = Command::new(env!("CARGO_BIN_EXE_fairrec")).args(args).output().unwrap();
        if !out.status.success() {
            return false;
        }
        let mut snap = vec![out.stdout];
        for f in files {
            snap.push(std::fs::read(dir.join(f)).unwrap_or_default());
            let _ = std::fs::remove_file(dir.join(f));
        }
        snapshots.push(snap);
    }
    snapshots[0] == snapshots[1]
}

fn crit_cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let path = |f: &str| dir.join(f).to_string_lossy().into_owned();
    let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();

    let inst = path("inst.json");
    let mut failed = Vec::new();
    let synth = s(&["synth", "--n", "6", "--m", "5", "--lambda", "0.4", "--exam", "log", "--seed", "3", "-o", &inst]);
    if !run_twice(dir, &synth, &["inst.json"]) {
        failed.push("synth");
    }
    Command::new(env!("CARGO_BIN_EXE_fairrec")).args(&synth).output().unwrap();

    for method in ["uniform", "naive", "prod", "iterlp", "sw", "nsw"] {
        let mut args = s(&["solve", "--instance", &inst, "--method", method, "-o", &path("pol.json")]);
        let mut files = vec!["pol.json"];
        if method == "sw" || method == "nsw" {
            args.extend(s(&["--trace", &path("trace.csv")]));
            files.push("trace.csv");
        }
        if !run_twice(dir, &args, &files) {
            failed.push("solve");
        }
    }

    Command::new(env!("CARGO_BIN_EXE_fairrec"))
        .args(s(&["solve", "--instance", &inst, "--method", "nsw", "-o", &path("keep.json")]))
        .output()
        .unwrap();
    if !run_twice(dir, &s(&["audit", "--instance", &inst, "--policy", &path("keep.json")]), &[]) {
        failed.push("audit");
    }

    std::fs::write(
        dir.join("cfg.json"),
        r#"{"n_values":[4],"m":4,"lambdas":[0.0,0.5],"exams":["inv","log"],"trials":2}"#,
    )
    .unwrap();
    if !run_twice(dir, &s(&["experiment", "--config", &path("cfg.json"), "-o", &path("out.csv")]), &["out.csv"]) {
        failed.push("experiment");
    }

    std::fs::write(
        dir.join("log.csv"),
        "left_id,right_id,direction,signal\na,x,lr,pos\na,y,lr,neg\nb,y,lr,pos\nc,x,lr,pos\n\
         a,x,rl,pos\nb,x,rl,neg\nc,y,rl,pos\nb,y,rl,pos\n",
    )
    .unwrap();
    let ingest = s(&["ingest", "--log", &path("log.csv"), "--factors", "2", "--seed", "9", "-o", &path("ing.json")]);
    if !run_twice(dir, &ingest, &["ing.json"]) {
        failed.push("ingest");
    }

    failed.dedup();
    if failed.is_empty() {
        outcome(true, "synth, solve (6 methods), audit, experiment, ingest byte-identical")
    } else {
        outcome(false, format!("differing or failing: {}", failed.join(", ")))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("example-1 exactness", crit_example_one),
        ("gradient correctness", crit_gradients),
        ("oracle exactness", crit_oracles),
        ("brute-force bound", crit_brute_force_bound),
        ("fairness headline (n=m=20)", crit_fairness_headline),
        ("uniform-policy envy-freeness", crit_uniform_envy_free),
        ("iterlp K=1 special case", crit_iterlp_k1),
        ("cli determinism", crit_cli_determinism),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failures += 1;
        }
        println!(
            "{} {name} [{:.1}s]: {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failures);
    let strict = std::env::var("FAIRREC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failures > 0 {
        std::process::exit(1);
    }
}
