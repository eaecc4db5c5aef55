use sadqas::encoder::EncoderVariant;
use sadqas::objective::{benchmark_graph, load_diag_hamiltonian, maxcut_hamiltonian, BenchmarkGraph};
use sadqas::pools::{build_pool, BlockLayout, PoolFamily};
use sadqas::search::{
    asp, fine_tune, FineTuneConfig, Objective, Optimizer, Search, SearchConfig, SearchVariant, Task, ThetaUpdate,
};

fn jssp_task() -> Task {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/jssp5.ham");
    let h = load_diag_hamiltonian(&std::fs::read_to_string(path).unwrap()).unwrap();
    Task::new(
        build_pool(PoolFamily::O4, 2, 5).unwrap(),
        BlockLayout::rx_pi(),
        Objective::Energy(h),
    )
    .unwrap()
}

fn ladder_task() -> Task {
    let h = maxcut_hamiltonian(&benchmark_graph(BenchmarkGraph::Ladder)).unwrap();
    Task::new(
        build_pool(PoolFamily::O3, 3, 8).unwrap(),
        BlockLayout::h_layer(),
        Objective::Energy(h),
    )
    .unwrap()
}

fn trajectory(task: &Task, cfg: SearchConfig, steps: usize) -> Vec<(u64, Vec<u64>)> {
    let mut s = Search::new(cfg, task).unwrap();
    (0..steps)
        .map(|_| {
            let hash = s.step().unwrap().alpha_hash;
            (hash, s.theta().flatten().iter().map(|t| t.to_bits()).collect())
        })
        .collect()
}

#[test]
fn zero_beta_reproduces_dqas_bit_for_bit() {
    let task = jssp_task();
    let base = SearchConfig {
        seed: 21,
        lr_alpha: 3.0,
        lr_theta: 0.5,
        ..SearchConfig::default()
    };
    let dqas = trajectory(
        &task,
        SearchConfig {
            variant: SearchVariant::Dqas,
            ..base.clone()
        },
        50,
    );
    for variant in [SearchVariant::SaF1, SearchVariant::SaF2] {
        let sa = trajectory(
            &task,
            SearchConfig {
                variant,
                beta: 0.0,
                ..base.clone()
            },
            50,
        );
        assert_eq!(sa, dqas, "{variant}");
    }
}

#[test]
fn nonzero_beta_changes_the_trajectory() {
    let task = jssp_task();
    let base = SearchConfig {
        seed: 4,
        beta: 1.0,
        ..SearchConfig::default()
    };
    let dqas = trajectory(
        &task,
        SearchConfig {
            variant: SearchVariant::Dqas,
            ..base.clone()
        },
        5,
    );
    let sa = trajectory(&task, base, 5);
    assert_ne!(dqas, sa);
}

#[test]
fn runs_are_deterministic() {
    let task = ladder_task();
    let cfg = SearchConfig {
        seed: 8,
        steps: 30,
        variant: SearchVariant::SaF2,
        ..SearchConfig::default()
    };
    let a = Search::new(cfg.clone(), &task).unwrap().run().unwrap();
    let b = Search::new(cfg, &task).unwrap().run().unwrap();
    assert_eq!(a, b);
    assert_eq!(a.log.to_csv(), b.log.to_csv());
}

#[test]
fn dqas_has_no_encoder_and_logs_no_encoder_loss() {
    let task = jssp_task();
    let mut s = Search::new(
        SearchConfig {
            variant: SearchVariant::Dqas,
            steps: 3,
            ..SearchConfig::default()
        },
        &task,
    )
    .unwrap();
    assert!(s.encoder().is_none());
    let out = s.run().unwrap();
    assert!(out.log.records.iter().all(|r| r.encoder_loss.is_none()));
    assert!(out.log.to_csv().lines().skip(1).all(|l| l.ends_with(',')));
    assert_eq!(out.alpha, out.alpha_prime);
}

#[test]
fn sa_variants_carry_their_encoder() {
    let task = jssp_task();
    for (variant, want) in [
        (SearchVariant::SaF1, EncoderVariant::F1),
        (SearchVariant::SaF2, EncoderVariant::F2),
    ] {
        let cfg = SearchConfig {
            variant,
            ..SearchConfig::default()
        };
        let s = Search::new(cfg, &task).unwrap();
        assert_eq!(s.encoder().unwrap().config().variant, want);
    }
}

#[test]
fn joint_encoder_training_runs_and_stays_finite() {
    let task = jssp_task();
    let cfg = SearchConfig {
        joint_encoder: true,
        beta: 0.5,
        steps: 20,
        theta_update: ThetaUpdate::Weighted,
        alpha_optimizer: Optimizer::Adam,
        ..SearchConfig::default()
    };
    let out = Search::new(cfg, &task).unwrap().run().unwrap();
    assert_eq!(out.log.records.len(), 20);
    assert!(out.alpha_prime.is_finite());
    assert!(out.log.records.iter().all(|r| r.encoder_loss.unwrap().is_finite()));
}

#[test]
fn final_structure_is_the_argmax_of_the_last_enriched_alpha() {
    let task = jssp_task();
    let out = Search::new(
        SearchConfig {
            steps: 10,
            ..SearchConfig::default()
        },
        &task,
    )
    .unwrap()
    .run()
    .unwrap();
    assert_eq!(out.structure, sadqas::search::extract_structure(&out.alpha_prime));
    assert_eq!(out.log.final_structure.as_ref(), Some(&out.structure));
    let asm = task.assemble(&out.structure).unwrap();
    assert_eq!(out.theta.len(), asm.circuit.n_params);
}

#[test]
fn small_step_fine_tuning_mostly_descends() {
    let task = jssp_task();
    let out = Search::new(
        SearchConfig {
            steps: 20,
            seed: 3,
            ..SearchConfig::default()
        },
        &task,
    )
    .unwrap()
    .run()
    .unwrap();
    let asm = task.assemble(&out.structure).unwrap();
    assert!(asm.circuit.n_params > 0);
    let cfg = FineTuneConfig {
        iters: 200,
        lr: 0.01,
        optimizer: Optimizer::GradientDescent,
    };
    let r = fine_tune(&task, &asm.circuit, &out.theta, &cfg).unwrap();
    let pairs = r.history.windows(2).count();
    let descending = r.history.windows(2).filter(|w| w[1] <= w[0]).count();
    assert!(descending as f64 >= 0.95 * pairs as f64, "{descending}/{pairs}");
    assert!(asp(&r.history, 0.01).unwrap().is_some());
}

#[test]
fn invalid_configs_are_rejected() {
    let task = jssp_task();
    for cfg in [
        SearchConfig {
            batch_size: 0,
            ..SearchConfig::default()
        },
        SearchConfig {
            beta: -0.1,
            ..SearchConfig::default()
        },
        SearchConfig {
            lr_alpha: f64::NAN,
            ..SearchConfig::default()
        },
    ] {
        assert!(Search::new(cfg, &task).is_err());
    }
}
