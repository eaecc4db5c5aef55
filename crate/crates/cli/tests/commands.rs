use std::path::{Path, PathBuf};
use std::process::Command;

use sadqas_cli::config::ExperimentConfig;
use sadqas_cli::report::{build_rows, cmd_report, load_summary};
use sadqas_cli::run::{cmd_evaluate, cmd_fidelity, cmd_search};
use sadqas_cli::CliError;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn jssp_text(extra: &str) -> String {
    format!(
        "task = \"jssp\"\n[problem]\nhamiltonian = {:?}\n[pool]\nfamily = \"O4\"\nsize = 2\n{extra}",
        data("jssp5.ham").display().to_string()
    )
}

const FAST_SEARCH: &str = "[search]\nsteps = 40\nlr_alpha = 3.0\nlr_theta = 0.5\n";

fn config(dir: &Path, text: &str) -> ExperimentConfig {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    ExperimentConfig::load(&path).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sadqas"))
}

#[test]
fn ladder_search_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let text = "task = \"maxcut\"\n[problem]\ngraph = \"ladder\"\n[pool]\nfamily = \"O3\"\nsize = 3\n\
                [search]\nsteps = 20\n[finetune]\niters = 20\n[trials]\nseeds = [3, 7]\n";
    let cfg = config(dir.path(), text);
    let s = cmd_search(&cfg).unwrap();
    assert_eq!(s.trials.len(), 2);
    assert_eq!(s.pool, "op3-3");
    assert_eq!(s.n_qubits, 8);
    for t in &s.trials {
        assert_eq!(t.structure.len(), 4);
        assert_eq!(t.labels.len(), 4);
        let csv = std::fs::read_to_string(cfg.out_dir.join(format!("trial_{}.csv", t.seed))).unwrap();
        assert_eq!(csv.lines().count(), 21);
        assert!(csv.starts_with("step,batch_loss,argmax_energy,encoder_loss\n"));
        let circuit = sadqas_cli::run::load_circuit(&cfg.out_dir.join(format!("circuit_{}.txt", t.seed))).unwrap();
        assert_eq!(sadqas::pools::gate_counts(&circuit).total, t.gate_counts.total);
    }
    assert_eq!(load_summary(&cfg.out_dir).unwrap(), s);
}

#[test]
fn ten_listed_seeds_give_ten_logs_and_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = "[trials]\ncount = 10\nseeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]\n";
    let text = jssp_text(&format!("{FAST_SEARCH}[finetune]\niters = 10\n{seeds}"));
    let a = config(dir.path(), &text).with_out_dir(dir.path().join("a"));
    let b = a.clone().with_out_dir(dir.path().join("b"));
    cmd_search(&a).unwrap();
    cmd_search(&b).unwrap();
    for seed in 0..10 {
        let name = format!("trial_{seed}.csv");
        let x = std::fs::read(a.out_dir.join(&name)).unwrap();
        assert_eq!(x, std::fs::read(b.out_dir.join(&name)).unwrap(), "{name}");
        let name = format!("circuit_{seed}.txt");
        assert_eq!(
            std::fs::read(a.out_dir.join(&name)).unwrap(),
            std::fs::read(b.out_dir.join(&name)).unwrap()
        );
    }
    assert_eq!(
        std::fs::read(a.out_dir.join("summary.json")).unwrap(),
        std::fs::read(b.out_dir.join("summary.json")).unwrap()
    );
}

#[test]
fn jssp_best_energy_is_no_worse_than_the_start() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        &jssp_text(&format!(
            "{FAST_SEARCH}[finetune]\niters = 60\nlr = 0.5\n[trials]\ncount = 3\n"
        )),
    );
    for t in cmd_search(&cfg).unwrap().trials {
        assert!(t.best_energy <= t.initial_energy, "{t:?}");
        assert!(t.final_raw_energy.unwrap() >= -1.5 - 1e-9);
    }
}

#[test]
fn fresh_fine_tune_start_differs_from_inherited() {
    let dir = tempfile::tempdir().unwrap();
    let base = jssp_text(&format!("{FAST_SEARCH}[finetune]\niters = 5\n"));
    let inherited = cmd_search(&config(dir.path(), &base).with_out_dir(dir.path().join("i"))).unwrap();
    let fresh_text = base.replace("iters = 5\n", "iters = 5\ninit = \"fresh\"\n");
    let fresh = cmd_search(&config(dir.path(), &fresh_text).with_out_dir(dir.path().join("f"))).unwrap();
    assert_eq!(inherited.trials[0].structure, fresh.trials[0].structure);
    assert_eq!(inherited.trials[0].search_final_loss, fresh.trials[0].search_final_loss);
    assert_ne!(inherited.trials[0].initial_energy, fresh.trials[0].initial_energy);
}

#[test]
fn evaluating_the_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let noise = "[[noise_eval]]\nlabel = \"zero\"\nmodel = \"terminal\"\nchannel = \"bitflip\"\np = 0.0\n\
                 [[noise_eval]]\nlabel = \"flip\"\nmodel = \"terminal\"\nchannel = \"bitflip\"\np = 0.2\n";
    let text = jssp_text(&format!(
        "[finetune]\niters = 150\nlr = 0.5\n[trials]\ncount = 4\n{noise}"
    ));
    let cfg = config(dir.path(), &text);
    let e = cmd_evaluate(&data("baseline_jssp5.txt"), &cfg).unwrap();
    let csv = std::fs::read_to_string(cfg.out_dir.join("evaluate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 150);
    assert_eq!(csv.lines().next(), Some("iter,mean,std"));
    assert_eq!(e.trial_asp.len(), 4);
    assert!(e.asp.is_some());
    assert!((e.noisy[0].mean - e.final_mean).abs() <= 1e-9);
    assert!(e.noisy[1].mean >= e.final_mean);
}

#[test]
fn evaluate_rejects_mismatched_and_malformed_circuits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &jssp_text(""));
    let wrong = dir.path().join("three.txt");
    std::fs::write(&wrong, "qubits 3 params 0\nH 0\n").unwrap();
    assert!(matches!(cmd_evaluate(&wrong, &cfg), Err(CliError::Config(_))));
    let junk = dir.path().join("junk.txt");
    std::fs::write(&junk, "qubits 5 params 1\nRY 0 slot=0\nWHAT 1\n").unwrap();
    match cmd_evaluate(&junk, &cfg) {
        Err(CliError::Config(msg)) => assert!(msg.contains("line 3"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn fidelity_columns_fall_with_noise_for_every_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let text = "task = \"fidelity\"\n[pool]\nfamily = \"Of1\"\n[search]\nlr_alpha = 3.0\n[trials]\ncount = 3\n";
    let cfg = config(dir.path(), text);
    let r = cmd_fidelity(&cfg).unwrap();
    assert_eq!(r.summary.trials.len(), 6);
    for t in &r.summary.trials {
        let levels: Vec<f64> = t.fidelity[..4].iter().map(|c| c.fidelity).collect();
        assert!(levels.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{levels:?}");
    }
    let csv = std::fs::read_to_string(cfg.out_dir.join("fidelity.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("environment,seed,structure,B0,B0.1,B0.2,B0.3,bitflip2,bitflip3")
    );
    assert_eq!(csv.lines().filter(|l| l.contains(",mean,")).count(), 2);
    assert!(cfg.out_dir.join("env_0.2/trial_0.csv").is_file());
}

#[test]
fn fidelity_needs_a_fidelity_task() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &jssp_text(""));
    assert!(matches!(cmd_fidelity(&cfg), Err(CliError::Config(_))));
}

#[test]
fn report_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut dirs = Vec::new();
    for variant in ["DQAS", "SA-DQAS-F1"] {
        let text = jssp_text(&format!(
            "{FAST_SEARCH}variant = \"{variant}\"\n[finetune]\niters = 20\n"
        ));
        let cfg = config(dir.path(), &text).with_out_dir(dir.path().join(variant));
        cmd_search(&cfg).unwrap();
        dirs.push(cfg.out_dir);
    }
    let single = build_rows(&dirs[..1]).unwrap();
    assert_eq!(single.len(), 1);
    let rows = cmd_report(&dirs, dir.path()).unwrap();
    assert_eq!(rows.iter().map(|r| r.sa).collect::<String>(), "NY");
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(text.lines().next().unwrap().contains("op4-2 N  op4-2 Y"), "{text}");
    for metric in ["#Gates", "#Param.G", "#Con.G", "ASP"] {
        assert!(text.contains(metric));
    }
    assert_eq!(
        std::fs::read_to_string(dir.path().join("report.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
}

#[test]
fn report_refuses_missing_and_foreign_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert!(matches!(
        build_rows(std::slice::from_ref(&empty)),
        Err(CliError::Config(_))
    ));
    assert!(build_rows(&[]).is_err());
    std::fs::write(empty.join("summary.json"), "{\"schema_version\": 2, \"trials\": []}").unwrap();
    match build_rows(std::slice::from_ref(&empty)) {
        Err(CliError::Config(msg)) => assert!(msg.contains("schema_version 2"), "{msg}"),
        other => panic!("{other:?}"),
    }
    std::fs::write(empty.join("summary.json"), "{\"schema_version\": 1").unwrap();
    assert!(build_rows(&[empty]).is_err());
    assert!(!dir.path().join("report.csv").exists());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "task = \"maxcut\"\n[problem]\ngraph = \"ladder\"\n[pool]\nfamily = \"O9\"\n",
    )
    .unwrap();
    let out = bin().args(["search", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5"), "{err}");

    let out = bin().args(["report"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // all-zero Hamiltonian: scaling the energy divides by a zero span
    let flat = dir.path().join("flat.ham");
    std::fs::write(&flat, "qubits 2\nconst 1.0\n").unwrap();
    let cfg = dir.path().join("flat.toml");
    std::fs::write(
        &cfg,
        "task = \"jssp\"\n[problem]\nhamiltonian = \"flat.ham\"\n[pool]\nfamily = \"O1\"\n[search]\nsteps = 2\n",
    )
    .unwrap();
    let out = bin().args(["search", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn binary_seed_out_and_jobs_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        jssp_text(&format!("{FAST_SEARCH}[finetune]\niters = 10\n[trials]\ncount = 4\n")),
    )
    .unwrap();
    let run = |jobs: &str, out: &str| {
        let status = bin()
            .args(["search", "--jobs", jobs, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(out))
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    };
    run("1", "serial");
    run("4", "parallel");
    for seed in 0..4 {
        let name = format!("trial_{seed}.csv");
        assert_eq!(
            std::fs::read(dir.path().join("serial").join(&name)).unwrap(),
            std::fs::read(dir.path().join("parallel").join(&name)).unwrap()
        );
    }
    let out = bin()
        .args(["search", "--seed", "42", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("one"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let names: Vec<String> = std::fs::read_dir(dir.path().join("one"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("trial_"))
        .collect();
    assert_eq!(names, ["trial_42.csv"]);
}

#[test]
fn packaged_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["jssp.toml", "maxcut_ladder.toml", "fidelity_of1_front.toml"] {
        let cfg = ExperimentConfig::load(&root.join(name)).unwrap();
        cfg.build_task().unwrap();
    }
}

#[test]
fn packaged_baseline_matches_the_library() {
    let text = std::fs::read_to_string(data("baseline_jssp5.txt")).unwrap();
    let parsed: sadqas::sim::CircuitIR = text.parse().unwrap();
    let expected = sadqas::pools::hardware_efficient_baseline(5, sadqas::pools::Encoding::RxPi);
    assert_eq!(parsed, expected);
    let counts = sadqas::pools::gate_counts(&parsed);
    assert_eq!((counts.total, counts.parameterized, counts.controlled), (18, 10, 8));
}
