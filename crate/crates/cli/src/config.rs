//! Experiment configuration files.
//!
//! A config is TOML with a top-level `task` key and optional sections:
//!
//! ```toml
//! task = "maxcut"          # jssp | maxcut | fidelity
//! out = "runs/ladder"      # relative to this file
//!
//! [problem]
//! graph = "ladder"         # benchmark name or a graph file
//!
//! [pool]
//! family = "O3"
//! size = 3
//!
//! [layout]
//! encoding = "h_layer"
//!
//! [search]
//! variant = "SA-DQAS-F1"
//! lr_alpha = 10.0
//!
//! [trials]
//! seeds = [0, 1, 2]
//!
//! [[noise_eval]]
//! model = "terminal"
//! channel = "bitflip"
//! p = 0.2
//! ```
//!
//! Every error names the line it came from.

use std::fmt::Display;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sadqas::encoder::{EncoderConfig, EncoderOptimizer};
use sadqas::objective::{benchmark_graph, load_diag_hamiltonian, maxcut_hamiltonian, BenchmarkGraph, Graph};
use sadqas::pools::{build_pool, BlockLayout, Encoding, PoolFamily, QftPlacement};
use sadqas::search::{FineTuneConfig, Objective, Optimizer, SearchConfig, SearchVariant, Task, ThetaUpdate};
use sadqas::sim::{run_circuit, ChannelKind, NoiseSpec, QuantumState};
use serde::{Deserialize, Deserializer};
use toml::Spanned;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Jssp,
    Maxcut,
    Fidelity,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Jssp => "jssp",
            TaskKind::Maxcut => "maxcut",
            TaskKind::Fidelity => "fidelity",
        }
    }
}

/// Where fine-tuning starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaInit {
    /// The shared angles the search left for the extracted structure.
    #[default]
    Inherited,
    /// Fresh uniform angles from the fine-tune stream.
    Fresh,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Hamiltonian(PathBuf),
    Benchmark(BenchmarkGraph),
    GraphFile(PathBuf),
    /// Target state of the `X` layer followed by a QFT.
    QftTarget,
}

/// A named noise setting for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEval {
    pub label: String,
    pub model: String,
    pub channel: ChannelKind,
    pub p: f64,
    pub gate_p: f64,
}

impl NoiseEval {
    pub fn spec(&self) -> Result<NoiseSpec> {
        Ok(NoiseSpec::from_model(&self.model, self.channel, self.p, self.gate_p)?)
    }

    fn terminal(channel: ChannelKind, p: f64) -> Self {
        Self {
            label: format!("B{p}"),
            model: "terminal".into(),
            channel,
            p,
            gate_p: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelitySettings {
    /// Terminal noise probabilities the searches run under.
    pub environments: Vec<f64>,
    /// Terminal noise columns of the fidelity table.
    pub levels: Vec<NoiseEval>,
    /// Extra columns for the composite noise models.
    pub extra: Vec<NoiseEval>,
    pub channel: ChannelKind,
}

impl Default for FidelitySettings {
    fn default() -> Self {
        let channel = ChannelKind::BitFlip;
        Self {
            environments: vec![0.0, 0.2],
            levels: [0.0, 0.1, 0.2, 0.3]
                .iter()
                .map(|&p| NoiseEval::terminal(channel, p))
                .collect(),
            extra: vec![
                NoiseEval {
                    label: "bitflip2".into(),
                    model: "placeholder-terminal".into(),
                    channel,
                    p: 0.2,
                    gate_p: 0.02,
                },
                NoiseEval {
                    label: "bitflip3".into(),
                    model: "idle".into(),
                    channel,
                    p: 0.2,
                    gate_p: 0.02,
                },
            ],
            channel,
        }
    }
}

impl FidelitySettings {
    pub fn environment_noise(&self, p: f64) -> Option<NoiseSpec> {
        (p > 0.0).then(|| NoiseSpec::from_model("terminal", self.channel, p, 0.0).expect("validated"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub problem: Problem,
    pub family: PoolFamily,
    pub pool_size: usize,
    pub layout: BlockLayout,
    pub search: SearchConfig,
    pub finetune: FineTuneConfig,
    pub finetune_init: ThetaInit,
    pub seeds: Vec<u64>,
    pub noise_eval: Vec<NoiseEval>,
    pub fidelity: FidelitySettings,
    pub n_qubits: usize,
    pub out_dir: PathBuf,
    /// Directory of the config file; relative paths resolve against it.
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        Self::parse(&text, &base, stem).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses config text. `base_dir` anchors relative paths; `name` picks
    /// the default output directory `runs/<name>`.
    pub fn parse(text: &str, base_dir: &Path, name: &str) -> Result<Self> {
        let raw: Raw = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, &s)).unwrap_or(1);
            CliError::Config(format!("line {line}: {}", e.message().trim()))
        })?;
        raw.resolve(text, base_dir, name)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds = vec![seed];
        self
    }

    pub fn with_out_dir(mut self, dir: PathBuf) -> Self {
        self.out_dir = dir;
        self
    }

    /// Builds the noiseless search task.
    pub fn build_task(&self) -> Result<Task> {
        let objective = match &self.problem {
            Problem::Hamiltonian(p) => Objective::Energy(load_diag_hamiltonian(&read(p)?)?),
            Problem::Benchmark(g) => Objective::Energy(maxcut_hamiltonian(&benchmark_graph(*g))?),
            Problem::GraphFile(p) => Objective::Energy(maxcut_hamiltonian(&read(p)?.parse()?)?),
            Problem::QftTarget => {
                let reference = self.layout.reference_circuit(self.n_qubits);
                match run_circuit(&reference, &[], &QuantumState::zero(self.n_qubits))? {
                    QuantumState::Pure(s) => Objective::Infidelity(s),
                    QuantumState::Mixed(_) => unreachable!("pure input stays pure"),
                }
            }
        };
        let pool = build_pool(self.family, self.pool_size, self.n_qubits)?;
        Ok(Task::new(pool, self.layout, objective)?)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn line_of(text: &str, span: &Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

/// A string field parsed with `FromStr`, so that errors keep their span.
#[derive(Debug, Clone)]
struct Parsed<T>(T);

impl<'de, T> Deserialize<'de> for Parsed<T>
where
    T: FromStr,
    T::Err: Display,
{
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map(Parsed).map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    task: Spanned<TaskKind>,
    out: Option<String>,
    #[serde(default)]
    problem: Option<Spanned<RawProblem>>,
    pool: Spanned<RawPool>,
    #[serde(default)]
    layout: Option<Spanned<RawLayout>>,
    #[serde(default)]
    search: Option<Spanned<RawSearch>>,
    #[serde(default)]
    encoder: Option<Spanned<RawEncoder>>,
    #[serde(default)]
    finetune: RawFineTune,
    #[serde(default)]
    trials: Option<Spanned<RawTrials>>,
    #[serde(default)]
    noise_eval: Vec<Spanned<RawNoise>>,
    #[serde(default)]
    fidelity: Option<Spanned<RawFidelity>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    hamiltonian: Option<String>,
    graph: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPool {
    family: Parsed<PoolFamily>,
    #[serde(default = "one")]
    size: usize,
}

fn one() -> usize {
    1
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawLayout {
    encoding: Option<Parsed<Encoding>>,
    qft: Option<Parsed<QftPlacement>>,
    blocks: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSearch {
    variant: Option<Parsed<SearchVariant>>,
    beta: Option<f64>,
    batch_size: Option<usize>,
    steps: Option<usize>,
    placeholders: Option<usize>,
    lr_alpha: Option<f64>,
    lr_theta: Option<f64>,
    alpha_optimizer: Option<Parsed<Optimizer>>,
    theta_init_half_width: Option<f64>,
    theta_update: Option<Parsed<ThetaUpdate>>,
    joint_encoder: Option<bool>,
    asp_epsilon: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawEncoder {
    d_encoder: Option<usize>,
    heads: Option<usize>,
    layers: Option<usize>,
    d_ff: Option<usize>,
    lag: Option<usize>,
    eta: Option<f64>,
    positional: Option<bool>,
    optimizer: Option<Parsed<EncoderOptimizer>>,
    zero_output_head: Option<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFineTune {
    iters: Option<usize>,
    lr: Option<f64>,
    optimizer: Option<Parsed<Optimizer>>,
    #[serde(default)]
    init: ThetaInit,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTrials {
    count: Option<usize>,
    seeds: Option<Vec<u64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    label: Option<String>,
    model: String,
    channel: Parsed<ChannelKind>,
    p: f64,
    #[serde(default)]
    gate_p: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFidelity {
    environments: Option<Vec<f64>>,
    levels: Option<Vec<f64>>,
    channel: Option<Parsed<ChannelKind>>,
    extra: Option<Vec<RawNoise>>,
}

impl RawNoise {
    fn resolve(self) -> std::result::Result<NoiseEval, String> {
        let label = self
            .label
            .unwrap_or_else(|| format!("{}:{}:{}", self.model, self.channel.0, self.p));
        let eval = NoiseEval {
            label,
            model: self.model,
            channel: self.channel.0,
            p: self.p,
            gate_p: self.gate_p,
        };
        eval.spec().map_err(|e| e.to_string())?;
        Ok(eval)
    }
}

impl Raw {
    fn resolve(self, text: &str, base: &Path, name: &str) -> Result<ExperimentConfig> {
        let at = |span: Range<usize>, msg: String| CliError::Config(format!("line {}: {msg}", line_of(text, &span)));
        let task = *self.task.get_ref();
        let task_span = self.task.span();

        let pool_span = self.pool.span();
        let raw_pool = self.pool.into_inner();
        let family = raw_pool.family.0;
        match (task, family.is_fixed()) {
            (TaskKind::Fidelity, false) => return Err(at(pool_span, "fidelity runs need pool Of1 or Of2".into())),
            (TaskKind::Jssp | TaskKind::Maxcut, true) => {
                return Err(at(pool_span, format!("pool {family:?} is for fidelity runs")))
            }
            _ => {}
        }

        let (problem_span, raw_problem) = match self.problem {
            Some(p) => (p.span(), p.into_inner()),
            None => (task_span.clone(), RawProblem::default()),
        };
        let file = |rel: &str| -> Result<PathBuf> {
            let p = base.join(rel);
            if p.is_file() {
                Ok(p)
            } else {
                Err(at(problem_span.clone(), format!("file not found: {}", p.display())))
            }
        };
        let (problem, n_qubits) = match (task, raw_problem.hamiltonian.as_deref(), raw_problem.graph.as_deref()) {
            (TaskKind::Jssp, Some(h), None) => {
                let path = file(h)?;
                let h = load_diag_hamiltonian(&read(&path)?)
                    .map_err(|e| at(problem_span.clone(), format!("{}: {e}", path.display())))?;
                (Problem::Hamiltonian(path), h.n_qubits())
            }
            (TaskKind::Maxcut, None, Some(g)) => match g.parse::<BenchmarkGraph>() {
                Ok(b) => (Problem::Benchmark(b), benchmark_graph(b).n_nodes),
                Err(_) => {
                    let path = file(g)?;
                    let graph: Graph = read(&path)?
                        .parse()
                        .map_err(|e| at(problem_span.clone(), format!("{}: {e}", path.display())))?;
                    maxcut_hamiltonian(&graph).map_err(|e| at(problem_span.clone(), e.to_string()))?;
                    (Problem::GraphFile(path), graph.n_nodes)
                }
            },
            (TaskKind::Fidelity, None, None) => (Problem::QftTarget, 3),
            (TaskKind::Jssp, _, _) => return Err(at(problem_span, "jssp needs exactly `problem.hamiltonian`".into())),
            (TaskKind::Maxcut, _, _) => return Err(at(problem_span, "maxcut needs exactly `problem.graph`".into())),
            (TaskKind::Fidelity, _, _) => return Err(at(problem_span, "fidelity takes no `[problem]` entries".into())),
        };

        let (layout_span, raw_layout) = match self.layout {
            Some(l) => (l.span(), l.into_inner()),
            None => (task_span.clone(), RawLayout::default()),
        };
        let mut layout = match (task, raw_layout.qft) {
            (TaskKind::Fidelity, q) => BlockLayout::qft_sandwich(q.map_or(QftPlacement::Front, |q| q.0)),
            (_, Some(_)) => return Err(at(layout_span, "`qft` is only meaningful for fidelity runs".into())),
            (TaskKind::Jssp, None) => BlockLayout::rx_pi(),
            (TaskKind::Maxcut, None) => BlockLayout::h_layer(),
        };
        if let Some(e) = raw_layout.encoding {
            layout.encoding = e.0;
        }
        layout.blocks = raw_layout.blocks.unwrap_or(1);
        if layout.blocks == 0 {
            return Err(at(layout_span, "blocks must be at least 1".into()));
        }

        let (encoder_span, enc) = match self.encoder {
            Some(e) => (e.span(), e.into_inner()),
            None => (task_span.clone(), RawEncoder::default()),
        };
        let d = EncoderConfig::default();
        let encoder = EncoderConfig {
            d_encoder: enc.d_encoder.unwrap_or(d.d_encoder),
            heads: enc.heads.unwrap_or(d.heads),
            layers: enc.layers.unwrap_or(d.layers),
            d_ff: enc.d_ff.unwrap_or(d.d_ff),
            lag: enc.lag.unwrap_or(d.lag),
            eta: enc.eta.unwrap_or(d.eta),
            positional: enc.positional.unwrap_or(d.positional),
            optimizer: enc.optimizer.map_or(d.optimizer, |o| o.0),
            zero_output_head: enc.zero_output_head.unwrap_or(d.zero_output_head),
            ..d
        };
        encoder.validate().map_err(|e| at(encoder_span, e.to_string()))?;

        let (search_span, s) = match self.search {
            Some(s) => (s.span(), s.into_inner()),
            None => (task_span.clone(), RawSearch::default()),
        };
        let d = SearchConfig::default();
        let default_placeholders = if task == TaskKind::Fidelity { 6 } else { d.placeholders };
        let search = SearchConfig {
            variant: s.variant.map_or(d.variant, |v| v.0),
            beta: s.beta.unwrap_or(d.beta),
            batch_size: s.batch_size.unwrap_or(d.batch_size),
            steps: s.steps.unwrap_or(d.steps),
            placeholders: s.placeholders.unwrap_or(default_placeholders),
            lr_alpha: s.lr_alpha.unwrap_or(d.lr_alpha),
            lr_theta: s.lr_theta.unwrap_or(d.lr_theta),
            alpha_optimizer: s.alpha_optimizer.map_or(d.alpha_optimizer, |o| o.0),
            theta_init_half_width: s.theta_init_half_width.unwrap_or(d.theta_init_half_width),
            seed: 0,
            asp_epsilon: s.asp_epsilon.unwrap_or(d.asp_epsilon),
            theta_update: s.theta_update.map_or(d.theta_update, |t| t.0),
            joint_encoder: s.joint_encoder.unwrap_or(d.joint_encoder),
            encoder,
        };
        search.validate().map_err(|e| at(search_span.clone(), e.to_string()))?;

        let d = FineTuneConfig::default();
        let finetune = FineTuneConfig {
            iters: self.finetune.iters.unwrap_or(d.iters),
            lr: self.finetune.lr.unwrap_or(d.lr),
            optimizer: self.finetune.optimizer.map_or(d.optimizer, |o| o.0),
        };
        if !(finetune.lr >= 0.0 && finetune.lr.is_finite()) {
            return Err(CliError::Config("finetune.lr must be finite and non-negative".into()));
        }

        let (trials_span, t) = match self.trials {
            Some(t) => (t.span(), t.into_inner()),
            None => (task_span.clone(), RawTrials::default()),
        };
        let seeds = match (t.count, t.seeds) {
            (_, Some(seeds)) if seeds.is_empty() => return Err(at(trials_span, "seed list is empty".into())),
            (Some(c), Some(seeds)) if c != seeds.len() => {
                return Err(at(trials_span, format!("count = {c} but {} seeds listed", seeds.len())))
            }
            (_, Some(seeds)) => seeds,
            (Some(0), None) => return Err(at(trials_span, "trials must be at least 1".into())),
            (Some(c), None) => (0..c as u64).collect(),
            (None, None) => vec![0],
        };

        let noise_eval = self
            .noise_eval
            .into_iter()
            .map(|n| {
                let span = n.span();
                n.into_inner().resolve().map_err(|e| at(span, e))
            })
            .collect::<Result<Vec<_>>>()?;

        let fidelity = match self.fidelity {
            None => FidelitySettings::default(),
            Some(f) => {
                if task != TaskKind::Fidelity {
                    return Err(at(f.span(), "`[fidelity]` needs task = \"fidelity\"".into()));
                }
                let span = f.span();
                let f = f.into_inner();
                let d = FidelitySettings::default();
                let channel = f.channel.map_or(d.channel, |c| c.0);
                let check = |ps: &[f64]| ps.iter().all(|p| (0.0..=1.0).contains(p));
                let environments = f.environments.unwrap_or(d.environments);
                let levels: Vec<NoiseEval> = match f.levels {
                    Some(ps) => ps.iter().map(|&p| NoiseEval::terminal(channel, p)).collect(),
                    None => d.levels.iter().map(|l| NoiseEval::terminal(channel, l.p)).collect(),
                };
                if environments.is_empty()
                    || !check(&environments)
                    || !check(&levels.iter().map(|l| l.p).collect::<Vec<_>>())
                {
                    return Err(at(
                        span,
                        "noise probabilities must lie in [0, 1] and environments be non-empty".into(),
                    ));
                }
                let extra = match f.extra {
                    None => d.extra,
                    Some(list) => list
                        .into_iter()
                        .map(|n| n.resolve().map_err(|e| at(span.clone(), e)))
                        .collect::<Result<_>>()?,
                };
                FidelitySettings {
                    environments,
                    levels,
                    extra,
                    channel,
                }
            }
        };

        let out_dir = match self.out {
            Some(o) => base.join(o),
            None => base.join("runs").join(name),
        };
        let cfg = ExperimentConfig {
            task,
            problem,
            family,
            pool_size: raw_pool.size,
            layout,
            search,
            finetune,
            finetune_init: self.finetune.init,
            seeds,
            noise_eval,
            fidelity,
            n_qubits,
            out_dir,
            base_dir: base.to_path_buf(),
        };
        build_pool(family, cfg.pool_size, cfg.n_qubits).map_err(|e| at(pool_span, e.to_string()))?;
        Ok(cfg)
    }
}
