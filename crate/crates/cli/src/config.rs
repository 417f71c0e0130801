//! Command-line surface and the resolved run configuration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use prodstate::hamiltonian::{build_instance, Ensemble, Family, GeneratorSpec, HamiltonianInstance, InstanceMeta, InteractionGraph};
use prodstate::tensor::gates;
use prodstate::{Error, NumericPolicy, Result};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "prodstate", version, about = "Product-state approximation experiments for 2-local Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Emit an instance file.
    Gen,
    /// Ground energy and ground-state summary.
    Exact,
    /// Product-state variational sweep.
    Meanfield,
    /// Degree bound on the mean-field gap.
    BoundBasic,
    /// Conditioned product state built from the ground state.
    BoundClustered,
    /// Walk-statistic bound on the mean-field gap.
    BoundWeighted,
    /// POVM design, distortion and reconstruction checks.
    PovmCheck,
    /// Self-decoupling sweep over random distributions.
    Decouple,
    /// Classical, symmetric and quantum de Finetti sweeps.
    Definetti,
    /// Moment hierarchy levels against the exact ground energy.
    Sdp,
    /// Propagation-sampling rounding of a moment solution.
    Round,
    /// Full acceptance battery.
    Suite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Exact => "exact",
            Command::Meanfield => "meanfield",
            Command::BoundBasic => "bound-basic",
            Command::BoundClustered => "bound-clustered",
            Command::BoundWeighted => "bound-weighted",
            Command::PovmCheck => "povm-check",
            Command::Decouple => "decouple",
            Command::Definetti => "definetti",
            Command::Sdp => "sdp",
            Command::Round => "round",
            Command::Suite => "suite",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Options {
    /// Root seed; every random draw is split from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Output file (stdout when absent); a manifest is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write the tabular fields as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Instance file; overrides the generator flags.
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    /// JSON object of numeric-policy overrides.
    #[arg(long, global = true)]
    pub policy: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// ring | grid | complete | random-regular | swap-antisymmetric | swap
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// random-hermitian | heisenberg-swap | ising-field | classical-diagonal
    #[arg(long, global = true)]
    pub ensemble: Option<String>,
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    /// Block size.
    #[arg(long, global = true)]
    pub blocks: Option<usize>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    #[arg(long, global = true)]
    pub t: Option<usize>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// SDP objective tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

/// Where the Hamiltonian comes from.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceSource {
    File(PathBuf),
    Generator { spec: GeneratorSpec, seed: u64 },
    /// Swap term on a single edge.
    Swap,
}

/// Everything a run depends on, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: Command,
    pub seed: u64,
    pub jobs: usize,
    pub instance: Option<InstanceSource>,
    pub policy: NumericPolicy,
    pub options: Options,
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> Result<Self> {
        let options = cli.options;
        let mut policy = match &options.policy {
            Some(path) => policy_with_overrides(&std::fs::read_to_string(path)?)?,
            None => NumericPolicy::default(),
        };
        if let Some(tol) = options.tol {
            if !(tol > 0.0) {
                return Err(Error::InvalidSpec(format!("--tol must be positive, got {tol}")));
            }
            policy.sdp_tol = tol;
        }
        if options.jobs == 0 {
            return Err(Error::InvalidSpec("--jobs must be at least 1".into()));
        }
        let instance = match cli.command {
            Command::Suite | Command::Decouple | Command::Definetti | Command::PovmCheck => None,
            _ => Some(instance_source(&options)?),
        };
        Ok(Self { subcommand: cli.command, seed: options.seed, jobs: options.jobs, instance, policy, options })
    }

    pub fn load_instance(&self) -> Result<HamiltonianInstance> {
        match self.instance.as_ref().ok_or_else(|| Error::InvalidSpec("command takes no instance".into()))? {
            InstanceSource::File(path) => HamiltonianInstance::load(Path::new(path), &self.policy),
            InstanceSource::Generator { spec, seed } => build_instance(spec, *seed),
            InstanceSource::Swap => swap_pair(&self.policy),
        }
    }
}

/// Two qubits coupled by the swap operator; `e0 = −1` while every product
/// state has energy `≥ 0`.
pub fn swap_pair(policy: &NumericPolicy) -> Result<HamiltonianInstance> {
    let g = InteractionGraph::unweighted(2, &[(0, 1)])?;
    let meta = InstanceMeta { family: "swap".into(), seed: 0, ensemble: Some(Ensemble::HeisenbergSwap.name().into()) };
    HamiltonianInstance::uniform(2, g, &gates::swap(2), meta, policy)
}

fn policy_with_overrides(text: &str) -> Result<NumericPolicy> {
    let overrides: serde_json::Value = serde_json::from_str(text)?;
    let serde_json::Value::Object(overrides) = overrides else {
        return Err(Error::InvalidSpec("policy overrides must be a JSON object".into()));
    };
    let mut base = serde_json::to_value(NumericPolicy::default())?;
    let fields = base.as_object_mut().expect("policy is a struct");
    for (key, value) in overrides {
        if !fields.contains_key(&key) {
            return Err(Error::InvalidSpec(format!("unknown policy field '{key}'")));
        }
        fields.insert(key, value);
    }
    Ok(serde_json::from_value(base)?)
}

fn instance_source(o: &Options) -> Result<InstanceSource> {
    if let Some(path) = &o.instance {
        return Ok(InstanceSource::File(path.clone()));
    }
    let family = o.family.as_deref().unwrap_or("ring");
    if family == "swap" {
        return Ok(InstanceSource::Swap);
    }
    let n = o.n.unwrap_or(4);
    let family = match family {
        "ring" => Family::Ring { n },
        "complete" => Family::Complete { n },
        "random-regular" => Family::RandomRegular { n, degree: o.degree.unwrap_or(3) },
        "swap-antisymmetric" => Family::SwapAntisymmetric { n },
        "grid" => {
            let rows = (1..=n).take_while(|r| r * r <= n).filter(|r| n.is_multiple_of(*r)).last().unwrap_or(1);
            Family::Grid { rows, cols: n / rows, diagonal_prob: 0.0 }
        }
        other => return Err(Error::InvalidSpec(format!("unknown family '{other}'"))),
    };
    let ensemble = o.ensemble.as_deref().unwrap_or("random-hermitian").parse()?;
    Ok(InstanceSource::Generator { spec: GeneratorSpec { family, ensemble, d: o.d.unwrap_or(2) }, seed: o.seed })
}
