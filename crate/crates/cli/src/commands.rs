//! One function per subcommand. Each returns the report body, CSV rows and
//! the names of any failed assertions.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::battery::{run_criterion, CRITERIA};
use crate::config::{Command, RunConfig};
use crate::output::{instance_hash, scalar_row};
use prodstate::hamiltonian::{BlockPartition, HamiltonianInstance};
use prodstate::infotools::{
    block_self_decoupling, definetti_classical, definetti_quantum, definetti_symmetric, self_decoupling, von_neumann,
};
use prodstate::lasserre::{build_moment_problem, propagation_sampling, sdp_sandwich, solve_sdp, threshold_rank_certificate, SdpOptions};
use prodstate::meanfield::{bound_check_basic, bound_check_clustered, bound_check_weighted, meanfield_sweep};
use prodstate::measurement::{distortion_estimate, icosahedral_povm, random_povm, ReconstructionMap};
use prodstate::random::{random_distribution, random_mixed, random_pure, random_symmetric_distribution};
use prodstate::rng::{child, split};
use prodstate::tensor::{trace_distance, DensityMatrix};
use prodstate::{Error, Result};

/// ε used for the descriptive threshold-rank certificate.
const RANK_EPSILON: f64 = 0.5;

pub enum Body {
    /// One JSON document.
    Single(Value),
    /// Line-delimited records after a manifest line.
    Lines(Vec<Value>),
    /// Verbatim text (instance files).
    Raw(String),
}

pub struct Outcome {
    pub body: Body,
    pub rows: Vec<Value>,
    pub failures: Vec<String>,
    pub instance_sha256: Option<String>,
}

impl Outcome {
    fn single(report: impl Serialize, h: Option<&HamiltonianInstance>) -> Result<Self> {
        let value = serde_json::to_value(report)?;
        Ok(Self { rows: vec![scalar_row(&value)], body: Body::Single(value), failures: Vec::new(), instance_sha256: h.map(instance_hash) })
    }

    fn fail_unless(mut self, ok: bool, invariant: &str) -> Self {
        if !ok {
            self.failures.push(invariant.to_string());
        }
        self
    }
}

pub fn dispatch(config: &RunConfig) -> Result<Outcome> {
    match config.subcommand {
        Command::Gen => gen(config),
        Command::Exact => exact(config),
        Command::Meanfield => meanfield(config),
        Command::BoundBasic => {
            let h = config.load_instance()?;
            let r = bound_check_basic(&h, config.policy.restarts, config.seed, &config.policy)?;
            Ok(Outcome::single(&r, Some(&h))?.fail_unless(r.holds, "degree bound on the mean-field gap"))
        }
        Command::BoundWeighted => {
            let h = config.load_instance()?;
            let r = bound_check_weighted(&h, config.policy.restarts, config.seed, &config.policy)?;
            Ok(Outcome::single(&r, Some(&h))?.fail_unless(r.holds, "walk-statistic bound on the mean-field gap"))
        }
        Command::BoundClustered => {
            let h = config.load_instance()?;
            let (_, psi) = h.ground_energy(&config.policy)?;
            let rho = DensityMatrix::from_pure(h.dims(), &psi)?;
            let partition = BlockPartition::contiguous(h.n(), config.options.blocks.unwrap_or(2))?;
            let r = bound_check_clustered(&h, &partition, &rho, config.seed, &config.policy)?;
            Ok(Outcome::single(&r, Some(&h))?.fail_unless(r.holds, "clustered bound on the conditioned product state"))
        }
        Command::PovmCheck => povm_check(config),
        Command::Decouple => decouple(config),
        Command::Definetti => definetti(config),
        Command::Sdp => sdp(config),
        Command::Round => round(config),
        Command::Suite => suite(config),
    }
}

fn gen(config: &RunConfig) -> Result<Outcome> {
    let h = config.load_instance()?;
    Ok(Outcome { body: Body::Raw(h.to_json()), rows: Vec::new(), failures: Vec::new(), instance_sha256: Some(instance_hash(&h)) })
}

#[derive(Serialize)]
struct Amplitude {
    index: usize,
    /// Site values, site 0 first.
    digits: String,
    re: f64,
    im: f64,
    probability: f64,
}

/// Largest ground-state amplitudes listed.
const TOP_AMPLITUDES: usize = 8;

fn exact(config: &RunConfig) -> Result<Outcome> {
    let h = config.load_instance()?;
    let (e0, psi) = h.ground_energy(&config.policy)?;
    let (n, d) = (h.n(), h.d());
    let mut order: Vec<usize> = (0..psi.len()).collect();
    order.sort_by(|&a, &b| psi[b].norm_sqr().total_cmp(&psi[a].norm_sqr()).then(a.cmp(&b)));
    let digits = |mut x: usize| {
        let mut s = vec![0u8; n];
        for slot in s.iter_mut().rev() {
            *slot = b'0' + (x % d) as u8;
            x /= d;
        }
        String::from_utf8(s).expect("ascii digits")
    };
    let amplitudes: Vec<Amplitude> = order
        .iter()
        .take(TOP_AMPLITUDES)
        .map(|&i| Amplitude { index: i, digits: digits(i), re: psi[i].re, im: psi[i].im, probability: psi[i].norm_sqr() })
        .collect();
    let rho = DensityMatrix::from_pure(h.dims(), &psi)?;
    let site_entropies = (0..n).map(|i| von_neumann(&rho.partial_trace(&[i]), &config.policy)).collect::<Result<Vec<f64>>>()?;
    let report = json!({
        "n": n,
        "d": d,
        "dim": psi.len(),
        "e0": e0,
        "participation_ratio": 1.0 / psi.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>(),
        "site_entropies": site_entropies,
        "amplitudes": amplitudes,
    });
    Outcome::single(report, Some(&h))
}

fn meanfield(config: &RunConfig) -> Result<Outcome> {
    let h = config.load_instance()?;
    let block = config.options.blocks.unwrap_or(1);
    let partition = BlockPartition::contiguous(h.n(), block)?;
    let (state, energy) = meanfield_sweep(&h, &partition, config.policy.restarts, config.seed, &config.policy)?;
    let e0 = match h.ground_energy(&config.policy) {
        Ok((e, _)) => Some(e),
        Err(Error::InstanceTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    let report = json!({
        "energy": energy,
        "block_size": block,
        "restarts": config.policy.restarts,
        "e0": e0,
        "gap": e0.map(|e| energy - e),
        "state": serde_json::from_str::<Value>(&state.to_json(12))?,
    });
    let variational = e0.is_none_or(|e| energy >= e - 1e-9);
    Ok(Outcome::single(report, Some(&h))?.fail_unless(variational, "mean-field energy at least e0"))
}

fn povm_check(config: &RunConfig) -> Result<Outcome> {
    let policy = &config.policy;
    let d = config.options.d.unwrap_or(2);
    let povm = if d == 2 { icosahedral_povm() } else { random_povm(d, config.seed, policy)? };
    let kmax = config.options.k.unwrap_or(if d == 2 { 2 } else { 1 });
    let trials = config.options.trials.unwrap_or(100);
    let distortion =
        (1..=kmax).map(|k| distortion_estimate(&povm, k, trials, split(config.seed, k as u64), policy)).collect::<Result<Vec<_>>>()?;
    let inverse = ReconstructionMap::new(&povm, policy)?;
    let mut rng = child(config.seed, 0);
    let mut round_trip = 0.0f64;
    for i in 0..trials {
        let rho = random_mixed(&[d], 1 + i % d, &mut rng);
        let probs: Vec<f64> = povm.effects().iter().map(|e| rho.matrix().real_inner(e)).collect();
        let back = inverse.reconstruct(&probs, policy)?;
        round_trip = round_trip.max(trace_distance(back.matrix(), rho.matrix(), policy)?);
    }
    let holds = distortion.iter().all(|r| r.holds);
    let report = json!({
        "povm": povm.name(),
        "d": d,
        "outcomes": povm.outcomes(),
        "design_order": povm.design_order(),
        "condition_number": inverse.condition_number(),
        "distortion": distortion,
        "round_trip_max_distance": round_trip,
        "round_trip_trials": trials,
    });
    let mut out = Outcome::single(report, None)?;
    out.rows = distortion.iter().map(serde_json::to_value).collect::<serde_json::Result<_>>()?;
    Ok(out.fail_unless(holds, "distortion within (18d)^{k/2}").fail_unless(round_trip <= 1e-8, "reconstruction round trip"))
}

/// Runs `f` over trial indices on the installed pool, keeping index order.
fn sweep<T: Send>(trials: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..trials).into_par_iter().map(f).collect()
}

fn lines(records: Vec<Value>, failures: Vec<String>) -> Outcome {
    let rows = records.iter().map(scalar_row).collect();
    Outcome { body: Body::Lines(records), rows, failures, instance_sha256: None }
}

fn decouple(config: &RunConfig) -> Result<Outcome> {
    let o = &config.options;
    let policy = &config.policy;
    let n = o.n.unwrap_or(5);
    let k = o.k.unwrap_or(2);
    let trials = o.trials.unwrap_or(20);
    let records = sweep(trials, |i| {
        let seed = split(config.seed, i as u64);
        let p = random_distribution(&vec![o.d.unwrap_or(2); n], &mut child(seed, 0));
        let (mut value, holds) = match o.blocks {
            Some(m) => {
                let r = block_self_decoupling(&p, &BlockPartition::contiguous(n, m)?, k, policy)?;
                let holds = r.holds;
                (serde_json::to_value(r)?, Some(holds))
            }
            None => {
                let r = self_decoupling(&p, &vec![1.0; n], k, seed, policy)?;
                let holds = r.holds;
                (serde_json::to_value(r)?, holds)
            }
        };
        value["trial"] = json!(i);
        value["kind"] = json!(if o.blocks.is_some() { "block" } else { "site" });
        Ok((value, holds))
    })?;
    let failures = records.iter().filter(|(_, h)| *h == Some(false)).map(|(v, _)| format!("self-decoupling inequality, trial {}", v["trial"])).collect();
    Ok(lines(records.into_iter().map(|(v, _)| v).collect(), failures))
}

fn definetti(config: &RunConfig) -> Result<Outcome> {
    let o = &config.options;
    let policy = &config.policy;
    let n = o.n.unwrap_or(5);
    let k = o.k.unwrap_or(2);
    let t = o.t.unwrap_or(n.saturating_sub(k));
    let trials = o.trials.unwrap_or(10);
    let alphabet = o.d.unwrap_or(2);
    let tagged = |kind: &str, i: usize, r: Value| {
        let mut r = r;
        r["kind"] = json!(kind);
        r["trial"] = json!(i);
        r
    };
    let mut records = sweep(trials, |i| {
        let p = random_distribution(&vec![alphabet; n], &mut child(split(config.seed, i as u64), 0));
        Ok(tagged("classical", i, serde_json::to_value(definetti_classical(&p, k, t, policy)?)?))
    })?;
    records.extend(sweep(trials, |i| {
        let p = random_symmetric_distribution(n, alphabet, &mut child(split(config.seed, i as u64), 1));
        Ok(tagged("symmetric", i, serde_json::to_value(definetti_symmetric(&p, k)?)?))
    })?);
    if alphabet == 2 {
        let povm = icosahedral_povm();
        records.extend(sweep(trials, |i| {
            let mut rng = child(split(config.seed, i as u64), 2);
            let rho = if i % 2 == 0 { random_pure(&vec![2; n], &mut rng) } else { random_mixed(&vec![2; n], 2, &mut rng) };
            Ok(tagged("quantum", i, serde_json::to_value(definetti_quantum(&rho, &povm, k, t, policy)?)?))
        })?);
    }
    let failures = records
        .iter()
        .filter(|r| r["holds"] == json!(false))
        .map(|r| format!("{} de Finetti bound, trial {}", r["kind"].as_str().unwrap_or("?"), r["trial"]))
        .collect();
    Ok(lines(records, failures))
}

fn sdp(config: &RunConfig) -> Result<Outcome> {
    let h = config.load_instance()?;
    let kmax = config.options.kmax.unwrap_or(h.n().min(2));
    let r = sdp_sandwich(&h, kmax, &SdpOptions::from_policy(&config.policy), &config.policy)?;
    let rank = threshold_rank_certificate(&h, RANK_EPSILON, &config.policy)?;
    let report = json!({ "sandwich": r, "threshold_rank": rank });
    let mut out = Outcome::single(report, Some(&h))?;
    out.rows = r.levels.iter().map(serde_json::to_value).collect::<serde_json::Result<_>>()?;
    Ok(out
        .fail_unless(r.monotone, "v_k nondecreasing in k")
        .fail_unless(r.below_e0, "v_k at most e0")
        .fail_unless(r.exact_at_n != Some(false), "v_n equals e0")
        .fail_unless(r.levels.iter().all(|l| l.converged), "SDP converged"))
}

fn round(config: &RunConfig) -> Result<Outcome> {
    let policy = &config.policy;
    let h = config.load_instance()?;
    let k = config.options.k.unwrap_or(h.n().min(2));
    let problem = build_moment_problem(&h, k, policy)?;
    let solution = solve_sdp(&problem, &SdpOptions::from_policy(policy))?;
    let e0 = match h.ground_energy(policy) {
        Ok((e, _)) => Some(e),
        Err(Error::InstanceTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    let samples = config.options.trials.unwrap_or(20);
    let r = propagation_sampling(&problem, &solution, &h, &icosahedral_povm(), config.seed, samples, e0, policy)?;
    let report = json!({ "k": k, "converged": solution.converged, "rounding": r });
    let mut out = Outcome::single(report, Some(&h))?;
    out.rows = r
        .runs
        .iter()
        .map(|run| json!({ "run": run.run, "draws": run.draws, "sites": run.sites.len(), "energy": run.energy, "clipped_mass": run.clipped_mass, "flagged": run.flagged }))
        .collect();
    Ok(out.fail_unless(r.flagged == 0, "clipped pseudo-probability mass within tolerance"))
}

fn suite(config: &RunConfig) -> Result<Outcome> {
    let results: Vec<_> = (1..=CRITERIA).map(|id| run_criterion(id, config.seed, &config.policy)).collect();
    let failures = results.iter().filter(|r| !r.passed).map(|r| format!("criterion {}: {}", r.id, r.name)).collect();
    let mut records = results.iter().map(serde_json::to_value).collect::<serde_json::Result<Vec<_>>>()?;
    let passed = results.iter().filter(|r| r.passed).count();
    let mut out = lines(Vec::new(), failures);
    out.rows = results.iter().map(|r| json!({ "id": r.id, "name": r.name, "passed": r.passed, "cases": r.cases })).collect();
    records.push(json!({ "kind": "summary", "criteria": results.len(), "passed": passed }));
    out.body = Body::Lines(records);
    Ok(out)
}
