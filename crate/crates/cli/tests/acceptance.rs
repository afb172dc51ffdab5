//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion and then asserts it.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde_json::Value;

use qcert::analyzer::{
    exact_distribution, expected_gap, subtest_closed_form, subtest_exact, unsupported_prefixes,
    SubtestDecomposition,
};
use qcert::dtbasis::{phase_deviation, DEFAULT_MAX_DEPTH};
use qcert::lowerbound::verify_uncertainty_claim;
use qcert::oracle::{dense_query, mps_query};
use qcert::qmath::overlap;
use qcert::rng::substream;
use qcert::states::{
    ghz, haar_ket, haar_random, random_product, random_sparse, w_state, with_fidelity,
};
use qcert::{
    certify_amplified, certify_once, DenseOracle, Factor, LabState, MpsOracle, MpsState, PhaseTree,
    ProductQuery, StateVector, Verdict, WrapperConfig,
};
use qcert_cli::commands::tv_trial;
use qcert_cli::state_file::StateFile;

fn report(criterion: u32, ok: bool, detail: String) {
    // Written to the raw stderr handle so the line shows without --nocapture.
    let line = format!(
        "{} criterion {criterion}: {detail}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn fid(a: &StateVector, b: &StateVector) -> f64 {
    overlap(a.as_sub(), b.as_sub()).unwrap().norm_sqr()
}

fn state_of_kind<R: Rng + ?Sized>(kind: usize, n: usize, rng: &mut R) -> StateVector {
    match kind % 5 {
        0 => haar_random(n, rng),
        1 => random_product(n, rng),
        2 => ghz(n).unwrap(),
        3 => w_state(n).unwrap(),
        _ => {
            let support = rng.random_range(1..=(1usize << n).min(4));
            random_sparse(n, support, rng)
        }
    }
}

/// Haar-random and structured pairs; every third lab state sits at a random
/// fidelity from its target.
fn random_pair(n: usize, i: usize, seed: u64) -> (StateVector, StateVector) {
    let mut rng = substream(seed, "pair", i as u64);
    let tar = state_of_kind(i, n, &mut rng);
    let lab = if i.is_multiple_of(3) {
        let f: f64 = rng.random();
        with_fidelity(&tar, f, &mut rng).unwrap()
    } else {
        state_of_kind(i / 5, n, &mut rng)
    };
    (tar, lab)
}

#[test]
fn criterion_01_single_copy_inequalities() {
    let start = Instant::now();
    let mut worst_acc = f64::INFINITY;
    let mut worst_rej = f64::INFINITY;
    let mut count = 0;
    for n in 2..=8 {
        let margins: Vec<(f64, f64)> = (0..500)
            .into_par_iter()
            .map(|i| {
                let (tar, lab) = random_pair(n, i, 1000 + n as u64);
                let d = exact_distribution(&lab, &tar).unwrap();
                let f = fid(&tar, &lab);
                (d.p_accept - f, d.p_reject - (1.0 - f) / n as f64)
            })
            .collect();
        for (a, r) in margins {
            worst_acc = worst_acc.min(a);
            worst_rej = worst_rej.min(r);
            count += 1;
        }
    }
    let ok = worst_acc >= -1e-9 && worst_rej >= -1e-9;
    report(
        1,
        ok,
        format!(
            "{count} pairs, min p_accept-Fid = {worst_acc:.3e}, min p_reject-(1-Fid)/n = {worst_rej:.3e}, {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_02_phase_tree_leaves_equiprobable() {
    let mut worst: f64 = 0.0;
    for m in 1..=6 {
        let devs: Vec<f64> = (0..200)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(2000 + m as u64, "tree", i as u64);
                let a = state_of_kind(i, m, &mut rng);
                let b = state_of_kind(i / 5 + 1, m, &mut rng);
                let tree = PhaseTree::build(&a, &b).unwrap();
                assert_eq!(tree.n_leaves(), 1 << m);
                phase_deviation(&tree, a.as_sub(), b.as_sub()).unwrap()
            })
            .collect();
        worst = devs.into_iter().fold(worst, f64::max);
    }
    let ok = worst <= 1e-9;
    report(
        2,
        ok,
        format!("1200 trees, max |p_leaf - 2^-m| = {worst:.3e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_03_closed_forms_match_enumeration() {
    let errs: Vec<(f64, f64)> = (0..500)
        .into_par_iter()
        .map(|i| {
            let m = 1 + i % 7;
            let (u, v) = random_pair(m, i, 3000);
            let (dec, _) = SubtestDecomposition::from_states(&u, &v).unwrap();
            let (acc, rej) = subtest_closed_form(&dec);
            let exact = subtest_exact(v.as_sub(), u.as_sub(), DEFAULT_MAX_DEPTH).unwrap();
            let diff = (acc - exact.p_accept)
                .abs()
                .max((rej - exact.p_reject).abs());
            (diff, (acc + rej - 1.0).abs())
        })
        .collect();
    let diff = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let sum = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let ok = diff <= 1e-9 && sum <= 1e-9;
    report(
        3,
        ok,
        format!(
            "500 instances, max |closed - exact| = {diff:.3e}, max |acc + rej - 1| = {sum:.3e}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_04_telescoping_identity() {
    let errs: Vec<f64> = (0..100)
        .into_par_iter()
        .map(|i| {
            let n = 1 + i % 8;
            let mut rng = substream(4000, "telescope", i as u64);
            let tar = haar_random(n, &mut rng);
            let lab = if i % 2 == 0 {
                haar_random(n, &mut rng)
            } else {
                with_fidelity(&tar, rng.random(), &mut rng).unwrap()
            };
            assert_eq!(unsupported_prefixes(&lab, &tar).unwrap(), 0);
            let f = fid(&tar, &lab);
            (expected_gap(&lab, &tar).unwrap() - (1.0 - f) / n as f64).abs()
        })
        .collect();
    let worst = errs.into_iter().fold(0.0, f64::max);
    let ok = worst <= 1e-9;
    report(
        4,
        ok,
        format!("100 instances, max |E[gap] - (1-Fid)/n| = {worst:.3e}"),
    );
    assert!(ok);
}

/// Lower end of the two-sided Wilson score interval.
fn wilson_lower(successes: usize, trials: usize, z: f64) -> f64 {
    let (s, t) = (successes as f64, trials as f64);
    let p = s / t;
    let denom = 1.0 + z * z / t;
    let centre = p + z * z / (2.0 * t);
    let spread = z * (p * (1.0 - p) / t + z * z / (4.0 * t * t)).sqrt();
    (centre - spread) / denom
}

#[test]
fn criterion_05_amplified_wrapper() {
    let start = Instant::now();
    let (n, eps, delta) = (6, 0.3, 0.1);
    let cfg = WrapperConfig::new(n, eps, delta).unwrap();
    let bound = 8 * n as u64 + 2;
    let run = |side: &str, f: f64, expect: Verdict| -> (usize, u64) {
        let outcomes: Vec<(bool, u64)> = (0..200)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(5000, side, i as u64);
                let tar = haar_random(n, &mut rng);
                let lab = with_fidelity(&tar, f, &mut rng).unwrap();
                let lab = LabState::Pure(lab);
                assert!(match expect {
                    Verdict::Accept =>
                        lab.fidelity(&tar).unwrap() >= 1.0 - eps / (2.0 * n as f64) - 1e-12,
                    Verdict::Reject => lab.fidelity(&tar).unwrap() <= 1.0 - eps + 1e-12,
                });
                let oracle = DenseOracle::new(tar);
                let out = certify_amplified(&lab, &oracle, &cfg, rng.random()).unwrap();
                let max_q = out
                    .transcripts
                    .iter()
                    .map(|t| t.oracle_queries)
                    .max()
                    .unwrap();
                (out.verdict == expect, max_q)
            })
            .collect();
        let correct = outcomes.iter().filter(|o| o.0).count();
        let max_q = outcomes.iter().map(|o| o.1).max().unwrap();
        (correct, max_q)
    };
    let (acc, q_acc) = run("close", 1.0 - eps / (2.0 * n as f64), Verdict::Accept);
    let (rej, q_rej) = run("far", 1.0 - eps, Verdict::Reject);
    let z99 = 2.575_829_303_548_901;
    let (wa, wr) = (wilson_lower(acc, 200, z99), wilson_lower(rej, 200, z99));
    let ok = acc as f64 / 200.0 >= 1.0 - delta
        && rej as f64 / 200.0 >= 1.0 - delta
        && q_acc.max(q_rej) <= bound;
    report(
        5,
        ok,
        format!(
            "{} copies/run, accept {acc}/200 (99% lower {wa:.3}), reject {rej}/200 (99% lower {wr:.3}), max queries {} <= {bound}, {:.1}s",
            cfg.copies,
            q_acc.max(q_rej),
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}

fn random_query<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ProductQuery {
    let factors = (0..n)
        .map(|_| {
            if rng.random_bool(0.3) {
                Factor::Identity
            } else {
                Factor::Project(haar_ket(rng))
            }
        })
        .collect();
    ProductQuery::new(factors).unwrap()
}

#[test]
fn criterion_06_oracle_efficiency_and_mps_agreement() {
    // Query budget on single runs across sizes, with dense and MPS targets.
    let budget: Vec<bool> = (0..400)
        .into_par_iter()
        .map(|i| {
            let n = 1 + i % 10;
            let mut rng = substream(6000, "budget", i as u64);
            let mps = MpsState::random(n, 1 + i % 4, &mut rng).unwrap();
            let tar = mps.to_dense(10).unwrap();
            let lab = with_fidelity(&tar, rng.random(), &mut rng).unwrap();
            let bound = 8 * n as u64 + 2;
            let mut rng_a = substream(6001, "copy", i as u64);
            let mut rng_b = substream(6001, "copy", i as u64);
            let a = certify_once(&lab, &DenseOracle::new(tar), &mut rng_a).unwrap();
            let b = certify_once(&lab, &MpsOracle::new(mps), &mut rng_b).unwrap();
            a.oracle_queries <= bound && b.oracle_queries <= bound
        })
        .collect();
    let within = budget.iter().all(|&b| b);

    // Query values of MPS and dense oracles on the same states.
    let diffs: Vec<f64> = (0..100)
        .into_par_iter()
        .map(|i| {
            let n = 1 + i % 10;
            let chi = 1 + i % 4;
            let mut rng = substream(6002, "mps", i as u64);
            let mps = MpsState::random(n, chi, &mut rng).unwrap();
            let dense = mps.to_dense(10).unwrap();
            (0..20)
                .map(|_| {
                    let q = random_query(n, &mut rng);
                    (mps_query(&mps, &q).unwrap() - dense_query(dense.as_sub(), &q).unwrap()).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let worst = diffs.into_iter().fold(0.0, f64::max);
    let ok = within && worst <= 1e-9;
    report(
        6,
        ok,
        format!("800 runs within 8n+2 queries: {within}, max |mps - dense| over 2000 queries = {worst:.3e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_07_uncertainty_claim() {
    let start = Instant::now();
    let r = verify_uncertainty_claim(10_000, 60);
    let elapsed = start.elapsed().as_secs_f64();
    let (ok, detail) = match &r {
        Ok(s) => (
            s.max_min_value <= 0.99 + 1e-6,
            format!(
                "max-min {:.6} over {} bases, {elapsed:.1}s",
                s.max_min_value, s.evaluated
            ),
        ),
        Err(e) => (false, e.to_string()),
    };
    let ok = ok && r.as_ref().is_ok_and(|s| s.evaluated >= 10_000);
    report(7, ok, detail);
    assert!(ok);
}

#[test]
fn criterion_08_cross_term_inequality() {
    let rows: Vec<_> = (0..50)
        .into_par_iter()
        .map(|i| {
            let seed = substream(8000, "instance", i).random();
            tv_trial(8, 16, 0, seed, 20).unwrap()
        })
        .collect();
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for t in &rows {
        let margin = t.cross_bound + t.slack - t.tv;
        worst_margin = worst_margin.min(margin);
        ok &= margin >= -1e-12;
        ok &= 2.0 * t.tv <= t.cross_term + t.slack + 1e-12;
        ok &= t.cross_term <= t.cross_bound + 1e-12;
    }
    report(
        8,
        ok,
        format!("50 instances at n=8, N=16, min (bound + slack - tv) = {worst_margin:.3e}"),
    );
    assert!(ok);
}

fn qcert() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qcert"))
}

fn read_rows(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn criterion_09_hard_instance_trends() {
    let dir = tempfile::tempdir().unwrap();
    let mut medians = Vec::new();
    let mut fids = Vec::new();
    let big_n = 16;
    for n in [6, 8, 10] {
        let out = dir.path().join(format!("tv{n}.jsonl"));
        let status = qcert()
            .args([
                "lowerbound",
                "tv",
                "--n",
                &n.to_string(),
                "--N",
                "16",
                "--trials",
                "50",
                "--seed",
                "9",
            ])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        let rows = read_rows(&out);
        let summary = rows.iter().find(|r| r["type"] == "summary").unwrap();
        medians.push(summary["median_tv"].as_f64().unwrap());
        fids.extend(
            rows.iter()
                .filter(|r| r["type"] == "trial")
                .map(|r| r["fidelity"].as_f64().unwrap()),
        );
    }
    let nonincreasing = medians.windows(2).all(|w| w[1] <= w[0]);
    let limit = 2.0 / big_n as f64 + 0.05;
    let frac = fids.iter().filter(|&&f| f <= limit).count() as f64 / fids.len() as f64;
    let ok = nonincreasing && frac >= 0.9;
    report(
        9,
        ok,
        format!(
            "median tv at n=6,8,10: {medians:.4?}, fraction of fidelities <= {limit:.4}: {frac:.3}"
        ),
    );
    assert!(ok);
}

fn run_twice(args: &[&str], dir: &Path, name: &str) -> bool {
    let mut outputs = Vec::new();
    for rep in 0..2 {
        let out = dir.join(format!("{name}{rep}.jsonl"));
        let st = qcert().args(args).arg("--out").arg(&out).output().unwrap();
        assert!(
            st.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&st.stderr)
        );
        outputs.push(std::fs::read(&out).unwrap());
    }
    !outputs[0].is_empty() && outputs[0] == outputs[1]
}

#[test]
fn criterion_10_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = substream(10_000, "states", 0);
    let tar = haar_random(4, &mut rng);
    let lab = with_fidelity(&tar, 0.9, &mut rng).unwrap();
    let (tp, lp) = (dir.path().join("tar.json"), dir.path().join("lab.json"));
    StateFile::dense(&tar).write(&tp).unwrap();
    StateFile::dense(&lab).write(&lp).unwrap();
    let (t, l) = (tp.to_str().unwrap(), lp.to_str().unwrap());
    let cases: Vec<(&str, Vec<&str>)> = vec![
        (
            "certify",
            vec![
                "certify",
                "--target",
                t,
                "--lab",
                l,
                "--epsilon",
                "0.2",
                "--delta",
                "0.1",
                "--seed",
                "77",
            ],
        ),
        ("analyze", vec!["analyze", "--target", t, "--lab", l]),
        (
            "gen",
            vec![
                "lowerbound",
                "gen",
                "--n",
                "6",
                "--N",
                "8",
                "--trials",
                "5",
                "--seed",
                "3",
            ],
        ),
        (
            "tv",
            vec![
                "lowerbound",
                "tv",
                "--n",
                "6",
                "--N",
                "8",
                "--trials",
                "5",
                "--seed",
                "3",
                "--adaptive",
                "2",
            ],
        ),
        (
            "claim",
            vec!["lowerbound", "claim", "--grid", "1000", "--refine", "10"],
        ),
    ];
    let mut failed = Vec::new();
    for (name, args) in &cases {
        if !run_twice(args, dir.path(), name) {
            failed.push(*name);
        }
    }
    let ok = failed.is_empty();
    report(
        10,
        ok,
        format!(
            "{} subcommands byte-identical on rerun, differing: {failed:?}",
            cases.len()
        ),
    );
    assert!(ok);
}
