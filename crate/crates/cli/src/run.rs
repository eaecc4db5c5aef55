//! The `search`, `evaluate` and `fidelity` commands.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use sadqas::pools::gate_counts;
use sadqas::search::{asp, fine_tune, rng_for, FineTuneResult, RngStream, Search, SearchConfig, Task};
use sadqas::sim::CircuitIR;

use crate::config::{ExperimentConfig, NoiseEval, TaskKind, ThetaInit};
use crate::error::{CliError, Result};
use crate::output::{write_atomic, write_json};
use crate::summary::{Evaluation, FidelityCell, NoisyAggregate, NoisyResult, Summary, TrialSummary, SCHEMA_VERSION};

/// Everything one trial leaves behind.
#[derive(Debug, Clone)]
pub struct Trial {
    pub summary: TrialSummary,
    pub log_csv: String,
    pub circuit_text: String,
}

fn fresh_theta(seed: u64, n: usize, half_width: f64) -> Vec<f64> {
    let mut rng = rng_for(seed, RngStream::FineTune);
    (0..n).map(|_| (2.0 * rng.random::<f64>() - 1.0) * half_width).collect()
}

fn history_asp(r: &FineTuneResult, eps: f64) -> Option<usize> {
    asp(&r.history, eps).ok().flatten()
}

fn noisy_loss(base: &Task, eval: &NoiseEval, circuit: &CircuitIR, theta: &[f64]) -> Result<f64> {
    let task = base.clone().with_noise(eval.spec()?);
    Ok(task.loss(circuit, theta)?)
}

fn join<T: ToString>(items: &[T], sep: &str) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

/// Search, fine-tune and evaluate one seed.
///
/// `task` is what the search and fine-tuning see (possibly noisy); `clean`
/// is the noiseless task the noisy evaluations start from. `columns` are
/// fidelity evaluations, only meaningful for fidelity tasks.
pub fn run_trial(
    cfg: &ExperimentConfig,
    task: &Task,
    clean: &Task,
    seed: u64,
    environment: Option<f64>,
    columns: &[NoiseEval],
) -> Result<Trial> {
    let search_cfg = SearchConfig {
        seed,
        ..cfg.search.clone()
    };
    let outcome = Search::new(search_cfg, task)?.run()?;
    let asm = task.assemble(&outcome.structure)?;
    let circuit = &asm.circuit;
    let init = match cfg.finetune_init {
        ThetaInit::Inherited => outcome.theta.clone(),
        ThetaInit::Fresh => fresh_theta(seed, circuit.n_params, cfg.search.theta_init_half_width),
    };
    let ft = fine_tune(task, circuit, &init, &cfg.finetune)?;
    let noisy = cfg
        .noise_eval
        .iter()
        .map(|n| {
            Ok(NoisyResult {
                label: n.label.clone(),
                model: n.model.clone(),
                channel: n.channel.to_string(),
                p: n.p,
                gate_p: n.gate_p,
                loss: noisy_loss(clean, n, circuit, &ft.theta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fidelity = columns
        .iter()
        .map(|n| {
            Ok(FidelityCell {
                column: n.label.clone(),
                fidelity: 1.0 - noisy_loss(clean, n, circuit, &ft.theta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = outcome.structure.iter().map(|&j| task.pool.ops[j].label()).collect();

    let mut circuit_text = circuit.to_string();
    let _ = writeln!(circuit_text, "# seed {seed}");
    let _ = writeln!(circuit_text, "# structure {}", join(&outcome.structure, " "));
    let _ = writeln!(circuit_text, "# labels {}", labels.join(" "));
    let theta: Vec<String> = ft.theta.iter().map(|t| format!("{t:?}")).collect();
    let _ = writeln!(circuit_text, "# theta {}", theta.join(" "));

    let summary = TrialSummary {
        seed,
        environment,
        gate_counts: gate_counts(circuit).into(),
        search_final_loss: task.loss(circuit, &outcome.theta)?,
        initial_energy: ft.history.first().copied().unwrap_or(ft.final_loss),
        best_energy: ft.best(),
        final_energy: ft.final_loss,
        final_raw_energy: clean.raw_energy(circuit, &ft.theta)?.filter(|_| task.noise.is_none()),
        asp: history_asp(&ft, cfg.search.asp_epsilon),
        structure: outcome.structure,
        labels,
        noisy,
        fidelity,
    };
    Ok(Trial {
        summary,
        log_csv: outcome.log.to_csv(),
        circuit_text,
    })
}

/// Runs every seed in parallel and writes `trial_<seed>.csv` and
/// `circuit_<seed>.txt` into `dir` as each trial finishes.
fn run_trials(
    cfg: &ExperimentConfig,
    task: &Task,
    clean: &Task,
    dir: &Path,
    environment: Option<f64>,
    columns: &[NoiseEval],
) -> Result<Vec<TrialSummary>> {
    cfg.seeds
        .par_iter()
        .map(|&seed| {
            let t = run_trial(cfg, task, clean, seed, environment, columns)?;
            write_atomic(&dir.join(format!("trial_{seed}.csv")), t.log_csv.as_bytes())?;
            write_atomic(&dir.join(format!("circuit_{seed}.txt")), t.circuit_text.as_bytes())?;
            Ok(t.summary)
        })
        .collect()
}

fn summary(cfg: &ExperimentConfig, task: &Task, command: &str, trials: Vec<TrialSummary>) -> Summary {
    Summary {
        schema_version: SCHEMA_VERSION,
        command: command.into(),
        task: cfg.task.name().into(),
        variant: cfg.search.variant.name().into(),
        pool: task.pool.name.clone(),
        n_qubits: cfg.n_qubits,
        placeholders: cfg.search.placeholders,
        blocks: cfg.layout.blocks,
        steps: cfg.search.steps,
        batch_size: cfg.search.batch_size,
        beta: cfg.search.beta,
        trials,
    }
}

pub fn cmd_search(cfg: &ExperimentConfig) -> Result<Summary> {
    let task = cfg.build_task()?;
    let trials = run_trials(cfg, &task, &task, &cfg.out_dir, None, &[])?;
    let s = summary(cfg, &task, "search", trials);
    write_json(&cfg.out_dir.join("summary.json"), &s)?;
    Ok(s)
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Parses a circuit file written by `search` (or by hand).
pub fn load_circuit(path: &Path) -> Result<CircuitIR> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    text.parse()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Fine-tunes a fixed circuit from one random start per seed.
pub fn cmd_evaluate(circuit_path: &Path, cfg: &ExperimentConfig) -> Result<Evaluation> {
    let circuit = load_circuit(circuit_path)?;
    let task = cfg.build_task()?;
    if circuit.n_qubits != task.n_qubits() {
        return Err(CliError::Config(format!(
            "{}: circuit has {} qubits, the problem has {}",
            circuit_path.display(),
            circuit.n_qubits,
            task.n_qubits()
        )));
    }
    let runs = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let init = fresh_theta(seed, circuit.n_params, cfg.search.theta_init_half_width);
            Ok(fine_tune(&task, &circuit, &init, &cfg.finetune)?)
        })
        .collect::<Result<Vec<_>>>()?;

    // mean curve: history entries, then the loss after the last update
    let curves: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| r.history.iter().copied().chain([r.final_loss]).collect())
        .collect();
    let len = curves[0].len();
    let mut csv = String::from("iter,mean,std\n");
    let mut mean_curve = Vec::with_capacity(len);
    for i in 0..len {
        let col: Vec<f64> = curves.iter().map(|c| c[i]).collect();
        let (m, s) = mean_std(&col);
        mean_curve.push(m);
        if i < cfg.finetune.iters {
            let _ = writeln!(csv, "{i},{m},{s}");
        }
    }
    let finals: Vec<f64> = runs.iter().map(|r| r.final_loss).collect();
    let bests: Vec<f64> = runs.iter().map(FineTuneResult::best).collect();
    let (final_mean, final_std) = mean_std(&finals);
    let noisy = cfg
        .noise_eval
        .iter()
        .map(|n| {
            let losses = runs
                .iter()
                .map(|r| noisy_loss(&task, n, &circuit, &r.theta))
                .collect::<Result<Vec<_>>>()?;
            let (mean, std) = mean_std(&losses);
            Ok(NoisyAggregate {
                label: n.label.clone(),
                mean,
                std,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let eps = cfg.search.asp_epsilon;
    let history_len = cfg.finetune.iters.min(len);
    let eval = Evaluation {
        schema_version: SCHEMA_VERSION,
        command: "evaluate".into(),
        circuit: circuit_path.display().to_string(),
        seeds: cfg.seeds.clone(),
        iters: cfg.finetune.iters,
        final_mean,
        final_std,
        best_mean: mean_std(&bests).0,
        asp: asp(&mean_curve[..history_len.max(1)], eps).ok().flatten(),
        trial_asp: runs.iter().map(|r| history_asp(r, eps)).collect(),
        noisy,
    };
    write_atomic(&cfg.out_dir.join("evaluate.csv"), csv.as_bytes())?;
    write_json(&cfg.out_dir.join("evaluate.json"), &eval)?;
    Ok(eval)
}

/// Mean fidelity per column for one search environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMeans {
    pub environment: f64,
    pub columns: Vec<String>,
    pub means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    pub summary: Summary,
    pub means: Vec<EnvironmentMeans>,
}

/// Searches circuits in each environment and tabulates their fidelity
/// against the ideal circuit under every configured noise column.
pub fn cmd_fidelity(cfg: &ExperimentConfig) -> Result<FidelityReport> {
    if cfg.task != TaskKind::Fidelity {
        return Err(CliError::Config(format!(
            "the fidelity command needs task = \"fidelity\", got \"{}\"",
            cfg.task.name()
        )));
    }
    let clean = cfg.build_task()?;
    let columns: Vec<NoiseEval> = cfg.fidelity.levels.iter().chain(&cfg.fidelity.extra).cloned().collect();
    let labels: Vec<String> = columns.iter().map(|c| c.label.clone()).collect();

    let mut csv = format!("environment,seed,structure,{}\n", labels.join(","));
    let mut trials = Vec::new();
    let mut means = Vec::new();
    for &env in &cfg.fidelity.environments {
        let task = match cfg.fidelity.environment_noise(env) {
            Some(noise) => clean.clone().with_noise(noise),
            None => clean.clone(),
        };
        let dir = cfg.out_dir.join(format!("env_{env}"));
        let mut env_trials = run_trials(cfg, &task, &clean, &dir, Some(env), &columns)?;
        env_trials.sort_by_key(|t| t.seed);
        for t in &env_trials {
            let cells: Vec<f64> = t.fidelity.iter().map(|c| c.fidelity).collect();
            let _ = writeln!(
                csv,
                "{env},{},{},{}",
                t.seed,
                join(&t.structure, "-"),
                join(&cells, ",")
            );
        }
        let col_means: Vec<f64> = (0..columns.len())
            .map(|i| mean_std(&env_trials.iter().map(|t| t.fidelity[i].fidelity).collect::<Vec<_>>()).0)
            .collect();
        let _ = writeln!(csv, "{env},mean,,{}", join(&col_means, ","));
        means.push(EnvironmentMeans {
            environment: env,
            columns: labels.clone(),
            means: col_means,
        });
        trials.extend(env_trials);
    }
    write_atomic(&cfg.out_dir.join("fidelity.csv"), csv.as_bytes())?;
    let s = summary(cfg, &clean, "fidelity", trials);
    write_json(&cfg.out_dir.join("summary.json"), &s)?;
    Ok(FidelityReport { summary: s, means })
}
