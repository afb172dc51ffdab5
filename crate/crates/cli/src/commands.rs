//! Subcommand implementations. Human-readable output goes to the supplied
//! writer; machine-readable rows go to the JSONL report.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use qcert::analyzer::{
    exact_distribution_with_cap, expected_gap_with_cap, phi_sequence_with_cap, unsupported_prefixes,
};
use qcert::dtbasis::phase_deviation;
use qcert::lowerbound::{
    build_codeword_superposition, build_mixture, cross_term_bound, cross_term_sum, spectral_slack,
    tv_distance_in_basis, verify_uncertainty_claim, AdaptiveProductBasis, CodeEnsemble,
};
use qcert::qmath::overlap;
use qcert::rng::{derive_key, substream};
use qcert::{
    certify_amplified, CertifyTranscript, Ket1, LabState, PhaseTree, SingleQubitBasis, StateVector,
    Verdict, WrapperConfig,
};

use crate::args::{AnalyzeArgs, CertifyArgs, ClaimArgs, DtbasisArgs, EnsembleArgs, TvArgs};
use crate::error::{CliError, CliResult};
use crate::state_file::{load_state_with, LoadedState, StateFile};

/// Rows of one JSONL report, starting with a header row.
pub struct Report {
    rows: Vec<Value>,
}

impl Report {
    pub fn new(subcommand: &str, master_seed: u64, config: Value) -> Self {
        let key = derive_key(master_seed, &format!("{subcommand}:{config}"));
        Self {
            rows: vec![json!({
                "type": "header",
                "run_id": format!("{key:016x}"),
                "subcommand": subcommand,
                "master_seed": master_seed,
                "config": config,
            })],
        }
    }

    pub fn push(&mut self, row: Value) {
        self.rows.push(row);
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s.push_str(&serde_json::to_string(r).expect("values serialize"));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_jsonl()).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn say(out: &mut dyn Write, line: String) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn load(path: &Path, max_bond: usize) -> CliResult<LoadedState> {
    let loaded = load_state_with(path, max_bond)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.state)
}

fn kind(s: &LoadedState) -> &'static str {
    match s {
        LoadedState::Dense(_) => "dense",
        LoadedState::Mps(_) => "mps",
        LoadedState::Mixture(_) => "mixture",
    }
}

fn same_n(a: &LoadedState, b: &LoadedState) -> CliResult<usize> {
    if a.n_qubits() != b.n_qubits() {
        return Err(CliError::Dimension(format!(
            "{} qubits versus {} qubits",
            a.n_qubits(),
            b.n_qubits()
        )));
    }
    Ok(a.n_qubits())
}

fn check_cap(n: usize, cap: usize, what: &str) -> CliResult<()> {
    if n > cap {
        return Err(CliError::Capacity(format!(
            "{what}: {n} qubits exceeds limit {cap}"
        )));
    }
    Ok(())
}

fn bits(b: &[u8]) -> String {
    b.iter().map(|&x| if x == 0 { '0' } else { '1' }).collect()
}

fn ket_json(k: &Ket1) -> Value {
    json!([[k[0].re, k[0].im], [k[1].re, k[1].im]])
}

fn axis_json(b: &SingleQubitBasis) -> Value {
    let a = b.axis();
    json!([a.x, a.y, a.z])
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Accept => "accept",
        Verdict::Reject => "reject",
    }
}

fn transcript_row(copy: usize, t: &CertifyTranscript) -> Value {
    json!({
        "type": "copy",
        "copy": copy,
        "k": t.k,
        "prefix": bits(&t.prefix),
        "leaf": bits(&t.path.outcomes),
        "final_axis": t.final_basis.as_ref().map(axis_json),
        "final_outcome": t.final_outcome,
        "verdict": verdict_str(t.verdict),
        "degenerate_target": t.degenerate_target,
        "oracle_queries": t.oracle_queries,
        "lab_component": t.lab_component,
    })
}

pub fn certify(a: &CertifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let target = load(&a.target, a.max_bond)?;
    let lab = load(&a.lab, a.max_bond)?;
    let n = same_n(&target, &lab)?;
    check_cap(n, a.max_qubits, "lab state")?;
    let oracle = target.oracle()?;
    let lab_state = lab.lab_state(a.max_qubits)?;
    let mut cfg = WrapperConfig::new(n, a.epsilon, a.delta)?;
    if let Some(c) = a.copies {
        cfg = cfg.with_copies(c as usize)?;
    }
    if let Some(t) = a.threshold {
        cfg = cfg.with_threshold(t)?;
    }
    let config = json!({
        "n": n,
        "epsilon": cfg.epsilon,
        "delta": cfg.delta,
        "copies": cfg.copies,
        "reject_threshold": cfg.reject_threshold,
        "copies_constant": cfg.constant,
        "target_kind": kind(&target),
        "lab_kind": kind(&lab),
    });
    let start = Instant::now();
    let result = certify_amplified(&lab_state, oracle.as_ref(), &cfg, a.seed)?;
    let elapsed = start.elapsed();
    let mut report = Report::new("certify", a.seed, config);
    for (i, t) in result.transcripts.iter().enumerate() {
        report.push(transcript_row(i, t));
    }
    let max_queries = result
        .transcripts
        .iter()
        .map(|t| t.oracle_queries)
        .max()
        .unwrap_or(0);
    report.push(json!({
        "type": "summary",
        "verdict": verdict_str(result.verdict),
        "rejects": result.rejects,
        "reject_fraction": result.reject_fraction,
        "copies": cfg.copies,
        "max_oracle_queries": max_queries,
    }));
    report.write(&a.out)?;
    say(out, format!("verdict: {}", verdict_str(result.verdict)))?;
    say(out, format!("reject_fraction: {}", result.reject_fraction))?;
    say(out, format!("copies: {}", cfg.copies))?;
    say(out, format!("threshold: {}", cfg.reject_threshold))?;
    say(
        out,
        format!("elapsed_seconds: {:.3}", elapsed.as_secs_f64()),
    )
}

/// Exact analysis of one pure lab state.
struct Analysis {
    fidelity: f64,
    p_accept: f64,
    p_reject: f64,
    p_degenerate: f64,
    phi: Vec<f64>,
    expected_gap: f64,
    unsupported: usize,
}

fn analyze_pure(lab: &StateVector, tar: &StateVector, cap: usize) -> CliResult<Analysis> {
    let d = exact_distribution_with_cap(lab, tar, cap)?;
    Ok(Analysis {
        fidelity: overlap(tar, lab)?.norm_sqr(),
        p_accept: d.p_accept,
        p_reject: d.p_reject,
        p_degenerate: d.p_degenerate,
        phi: phi_sequence_with_cap(lab, tar, cap)?,
        expected_gap: expected_gap_with_cap(lab, tar, cap)?,
        unsupported: unsupported_prefixes(lab, tar)?,
    })
}

pub fn analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> CliResult<()> {
    let target = load(&a.target, a.max_bond)?;
    let lab = load(&a.lab, a.max_bond)?;
    let n = same_n(&target, &lab)?;
    check_cap(n, a.max_qubits, "analyzer")?;
    let tar = target.dense(a.max_qubits)?;
    let components = match lab.lab_state(a.max_qubits)? {
        LabState::Pure(s) => vec![(1.0, s)],
        LabState::Mixture(c) => c,
    };
    // Every reported quantity is linear in the lab state's decomposition.
    let mut total = Analysis {
        fidelity: 0.0,
        p_accept: 0.0,
        p_reject: 0.0,
        p_degenerate: 0.0,
        phi: vec![0.0; n + 1],
        expected_gap: 0.0,
        unsupported: 0,
    };
    for (w, s) in &components {
        let r = analyze_pure(s, &tar, a.max_qubits)?;
        total.fidelity += w * r.fidelity;
        total.p_accept += w * r.p_accept;
        total.p_reject += w * r.p_reject;
        total.p_degenerate += w * r.p_degenerate;
        for (acc, p) in total.phi.iter_mut().zip(&r.phi) {
            *acc += w * p;
        }
        total.expected_gap += w * r.expected_gap;
        total.unsupported += r.unsupported;
    }
    let t = total;
    let reject_bound = (1.0 - t.fidelity) / n as f64;
    let config = json!({"n": n, "target_kind": kind(&target), "lab_kind": kind(&lab), "max_qubits": a.max_qubits});
    let mut report = Report::new("analyze", 0, config);
    report.push(json!({
        "type": "analysis",
        "n": n,
        "fidelity": t.fidelity,
        "p_accept": t.p_accept,
        "p_reject": t.p_reject,
        "p_degenerate": t.p_degenerate,
        "phi": t.phi,
        "expected_gap": t.expected_gap,
        "reject_bound": reject_bound,
        "telescoping_residual": t.expected_gap - reject_bound,
        "unsupported_prefixes": t.unsupported,
        "margin_accept": t.p_accept - t.fidelity,
        "margin_reject": t.p_reject - reject_bound,
    }));
    report.write(&a.out)?;
    say(out, format!("fidelity: {}", t.fidelity))?;
    say(out, format!("p_accept: {}", t.p_accept))?;
    say(out, format!("p_reject: {}", t.p_reject))?;
    say(out, format!("expected_gap: {}", t.expected_gap))?;
    say(out, format!("margin_accept: {}", t.p_accept - t.fidelity))?;
    say(out, format!("margin_reject: {}", t.p_reject - reject_bound))
}

fn node_path(index: usize) -> String {
    let depth = (usize::BITS - (index + 1).leading_zeros() - 1) as usize;
    let w = index + 1 - (1 << depth);
    (0..depth)
        .map(|d| {
            if (w >> (depth - 1 - d)) & 1 == 0 {
                '0'
            } else {
                '1'
            }
        })
        .collect()
}

pub fn dtbasis(a: &DtbasisArgs, out: &mut dyn Write) -> CliResult<()> {
    let s0 = load(&a.state0, a.max_bond)?;
    let s1 = load(&a.state1, a.max_bond)?;
    let m = same_n(&s0, &s1)?;
    check_cap(m, a.max_depth, "tree depth")?;
    let (v0, v1) = (s0.dense(a.max_depth)?, s1.dense(a.max_depth)?);
    let tree = PhaseTree::from_branches(&v0, &v1, a.max_depth)?;
    say(out, format!("depth: {}", tree.depth()))?;
    say(out, format!("nodes: {}", tree.nodes().len()))?;
    if let Some(path) = &a.dump {
        let nodes: Vec<Value> = tree
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, b)| {
                json!({
                    "path": node_path(i),
                    "b": ket_json(b.b()),
                    "b_perp": ket_json(b.b_perp()),
                    "axis": axis_json(b),
                })
            })
            .collect();
        let doc = json!({"depth": tree.depth(), "nodes": nodes});
        std::fs::write(path, serde_json::to_string(&doc).expect("values serialize")).map_err(
            |source| CliError::Io {
                path: path.display().to_string(),
                source,
            },
        )?;
    }
    if a.check {
        let dev = phase_deviation(&tree, &v0, &v1)?;
        say(out, format!("max_deviation: {dev:e}"))?;
        if dev > qcert::qmath::VALIDATION_TOL {
            return Err(CliError::Runtime(format!(
                "leaf probabilities deviate by {dev:e}"
            )));
        }
    }
    Ok(())
}

fn trial_seed(master: u64, trial: usize) -> u64 {
    substream(master, "trial", trial as u64).random()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn ensemble_config(e: &EnsembleArgs) -> CliResult<Value> {
    if e.n == 0 || e.big_n == 0 {
        return Err(CliError::Usage("--n and --N must be positive".into()));
    }
    Ok(json!({"n": e.n, "N": e.big_n, "trials": e.trials}))
}

pub fn lowerbound_gen(e: &EnsembleArgs, out: &mut dyn Write) -> CliResult<()> {
    let config = ensemble_config(e)?;
    let rows: Vec<(u64, f64, f64)> = (0..e.trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(e.seed, i);
            let code = CodeEnsemble::random(e.n, e.big_n, seed)?;
            Ok((seed, code.norm_sqr(), code.mixture_fidelity()?))
        })
        .collect::<qcert::Result<_>>()?;
    let mut report = Report::new("lowerbound-gen", e.seed, config);
    for (i, &(seed, norm_sq, fidelity)) in rows.iter().enumerate() {
        report.push(json!({
            "type": "trial",
            "trial": i,
            "seed": seed,
            "n": e.n,
            "N": e.big_n,
            "norm_sq": norm_sq,
            "fidelity": fidelity,
            "basis_descriptor": null,
            "cross_term": null,
            "tv": null,
        }));
    }
    let near = rows.iter().filter(|r| (r.1 - 1.0).abs() <= 0.1).count();
    let fid_bound = 2.0 / e.big_n as f64 + 0.05;
    let low_fid = rows.iter().filter(|r| r.2 <= fid_bound).count();
    let med_fid = median(rows.iter().map(|r| r.2).collect());
    report.push(json!({
        "type": "summary",
        "fraction_norm_within_0.1": near as f64 / rows.len().max(1) as f64,
        "median_fidelity": med_fid,
        "fidelity_bound": fid_bound,
        "fraction_fidelity_within_bound": low_fid as f64 / rows.len().max(1) as f64,
    }));
    report.write(&e.out)?;
    say(out, format!("trials: {}", rows.len()))?;
    say(
        out,
        format!(
            "fraction |norm_sq - 1| <= 0.1: {}",
            near as f64 / rows.len().max(1) as f64
        ),
    )?;
    say(out, format!("median fidelity: {med_fid}"))
}

pub struct TvTrial {
    pub seed: u64,
    pub norm_sq: f64,
    pub fidelity: f64,
    pub basis_descriptor: String,
    pub cross_term: f64,
    pub cross_bound: f64,
    pub slack: f64,
    pub tv: f64,
}

/// One hard-instance trial: a fresh code and a random (adaptive) product basis.
pub fn tv_trial(
    n: usize,
    big_n: usize,
    adaptive: usize,
    seed: u64,
    cap: usize,
) -> qcert::Result<TvTrial> {
    let code = CodeEnsemble::random(n, big_n, seed)?;
    let mut rng = substream(seed, "basis", 0);
    let basis = if adaptive == 0 {
        AdaptiveProductBasis::random_product(n, &mut rng)
    } else {
        let mut s: Vec<usize> = Vec::new();
        while s.len() < adaptive.min(n) {
            let q = rng.random_range(0..n);
            if !s.contains(&q) {
                s.push(q);
            }
        }
        AdaptiveProductBasis::random_adaptive(n, &s, &mut rng)?
    };
    let (_, psi) = build_codeword_superposition(&code, cap)?;
    let rho = build_mixture(&code, cap)?;
    Ok(TvTrial {
        seed,
        norm_sq: code.norm_sqr(),
        fidelity: rho.fidelity(&psi)?,
        basis_descriptor: basis.descriptor(),
        cross_term: cross_term_sum(&code, &basis, cap)?,
        cross_bound: cross_term_bound(&code, &basis)?,
        slack: spectral_slack(&code),
        tv: tv_distance_in_basis(&psi, &rho, &basis)?.tv,
    })
}

pub fn lowerbound_tv(a: &TvArgs, out: &mut dyn Write) -> CliResult<()> {
    let e = &a.ensemble;
    let mut config = ensemble_config(e)?;
    config["adaptive"] = json!(a.adaptive);
    check_cap(e.n, a.max_qubits, "dense vectors")?;
    let trials: Vec<TvTrial> = (0..e.trials)
        .into_par_iter()
        .map(|i| {
            tv_trial(
                e.n,
                e.big_n,
                a.adaptive as usize,
                trial_seed(e.seed, i),
                a.max_qubits,
            )
        })
        .collect::<qcert::Result<_>>()?;
    let mut report = Report::new("lowerbound-tv", e.seed, config);
    let mut violations = 0;
    for (i, t) in trials.iter().enumerate() {
        let holds = t.tv <= t.cross_term + t.slack;
        violations += usize::from(!holds);
        report.push(json!({
            "type": "trial",
            "trial": i,
            "seed": t.seed,
            "n": e.n,
            "N": e.big_n,
            "norm_sq": t.norm_sq,
            "fidelity": t.fidelity,
            "basis_descriptor": t.basis_descriptor,
            "cross_term": t.cross_term,
            "cross_term_bound": t.cross_bound,
            "spectral_slack": t.slack,
            "tv": t.tv,
            "bound_holds": holds,
        }));
    }
    let med = median(trials.iter().map(|t| t.tv).collect());
    report.push(json!({"type": "summary", "median_tv": med, "bound_violations": violations}));
    report.write(&e.out)?;
    say(out, format!("trials: {}", trials.len()))?;
    say(out, format!("median tv: {med}"))?;
    say(out, format!("bound violations: {violations}"))?;
    if violations > 0 {
        return Err(CliError::Runtime(format!(
            "{violations} trials violate the cross-term bound"
        )));
    }
    Ok(())
}

pub fn lowerbound_claim(a: &ClaimArgs, out: &mut dyn Write) -> CliResult<()> {
    let start = Instant::now();
    let r = verify_uncertainty_claim(a.grid, a.refine).map_err(|e| match e {
        qcert::Error::ClaimViolation(m) => CliError::Runtime(m),
        other => other.into(),
    })?;
    if let Some(path) = &a.out {
        let mut report = Report::new(
            "lowerbound-claim",
            0,
            json!({"grid": a.grid, "refine": a.refine}),
        );
        report.push(json!({
            "type": "claim",
            "max_min_value": r.max_min_value,
            "argmax_axis": [r.argmax.x, r.argmax.y, r.argmax.z],
            "evaluated": r.evaluated,
            "bound": qcert::lowerbound::UNCERTAINTY_BOUND,
        }));
        report.write(path)?;
    }
    say(out, format!("max_min_value: {}", r.max_min_value))?;
    say(
        out,
        format!(
            "argmax_axis: [{}, {}, {}]",
            r.argmax.x, r.argmax.y, r.argmax.z
        ),
    )?;
    say(out, format!("bases_evaluated: {}", r.evaluated))?;
    say(
        out,
        format!("elapsed_seconds: {:.3}", start.elapsed().as_secs_f64()),
    )
}

/// Write a dense state file (used by tests and examples).
pub fn write_dense(path: &Path, s: &StateVector) -> CliResult<()> {
    StateFile::dense(s).write(path)
}
