use flipdyn::constructions::{build_construction, ConstructionSpec};
use flipdyn::experiment::{
    estimate_gamma_empirical, run_coupling_experiment, run_stage_experiment, ExperimentConfig, StartState, VectorSource,
};
use flipdyn::rational::{parse, q};

fn tree(d: usize, k: usize) -> StartState {
    StartState::Construction(ConstructionSpec { index: 1, d, k })
}

fn file(name: &str, text: &str) -> StartState {
    let path = std::env::temp_dir().join(format!("flipdyn-{}-{name}.txt", std::process::id()));
    std::fs::write(&path, text).unwrap();
    StartState::File(path)
}

#[test]
fn reports_are_seed_stable() {
    let mut cfg = ExperimentConfig::new(tree(4, 8), VectorSource::Vigoda);
    cfg.replicas = 300;
    cfg.seed = 11;
    let a = serde_json::to_string(&run_coupling_experiment(&cfg).unwrap()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| serde_json::to_string(&run_coupling_experiment(&cfg).unwrap()).unwrap());
    assert_eq!(a, b);
}

#[test]
fn single_vertex_always_coalesces() {
    let start = file("single", "1 2 0\nsigma 0\ntau 1\n");
    let mut cfg = ExperimentConfig::new(start, VectorSource::Vigoda);
    cfg.replicas = 50;
    let r = run_coupling_experiment(&cfg).unwrap();
    let d = r.metrics["final_distance"];
    assert_eq!((d.mean, d.se), (0.0, 0.0));
}

#[test]
fn seeds_agree_within_joint_interval() {
    let mut cfg = ExperimentConfig::new(
        StartState::Construction(ConstructionSpec { index: 2, d: 4, k: 8 }),
        VectorSource::Alt,
    );
    cfg.replicas = 4000;
    let a = run_coupling_experiment(&cfg).unwrap().metrics["final_distance_minus_one"];
    cfg.seed = 1;
    let b = run_coupling_experiment(&cfg).unwrap().metrics["final_distance_minus_one"];
    assert!(
        (a.mean - b.mean).abs() <= 1.96 * (a.se.powi(2) + b.se.powi(2)).sqrt(),
        "{a:?} {b:?}"
    );
}

#[test]
fn t_stop_within_bound_for_a_path_construction() {
    let mut cfg = ExperimentConfig::new(
        StartState::Construction(ConstructionSpec { index: 2, d: 4, k: 8 }),
        VectorSource::Mixed,
    );
    cfg.replicas = 5000;
    let r = run_coupling_experiment(&cfg).unwrap();
    assert!(r.check("t_stop_within_bound").unwrap().passed);
    assert!(r.check("terminating_mass_interval").unwrap().passed);
    assert_eq!(r.exceeded_cap, 0);
}

#[test]
fn cap_overruns_are_counted() {
    let mut cfg = ExperimentConfig::new(tree(4, 8), VectorSource::Vigoda);
    cfg.replicas = 200;
    cfg.step_cap = Some(1);
    let r = run_coupling_experiment(&cfg).unwrap();
    assert!(r.exceeded_cap > 0 && r.exceeded_cap < 200);
    assert_eq!(r.samples.len() as u64 + r.exceeded_cap, 200);
}

#[test]
fn isolated_v_has_no_bad_colors() {
    let start = file("isolated", "3 6 1\n1 2\nsigma 0 1 2\ntau 3 1 2\n");
    let mut cfg = ExperimentConfig::new(start, VectorSource::Vigoda);
    cfg.replicas = 200;
    let r = estimate_gamma_empirical(&cfg).unwrap();
    assert_eq!(r.metrics["n_bad"].mean, 0.0);
    assert_eq!(r.metrics["ratio"].mean, 0.0);
}

#[test]
fn gamma_ratio_is_stable_across_seed_sets() {
    let mut cfg = ExperimentConfig::new(tree(4, 8), VectorSource::Vigoda);
    cfg.replicas = 4000;
    let a = estimate_gamma_empirical(&cfg).unwrap();
    cfg.seed = 99;
    let b = estimate_gamma_empirical(&cfg).unwrap();
    let (x, y) = (a.metrics["ratio"], b.metrics["ratio"]);
    assert!(
        (x.mean - y.mean).abs() <= 1.96 * (x.se.powi(2) + y.se.powi(2)).sqrt(),
        "{x:?} {y:?}"
    );
    assert!(a.check("ratio_within_gamma").unwrap().passed);
}

#[test]
fn stage_experiment_reports_exact_first_step() {
    let mut cfg = ExperimentConfig::new(tree(2, 6), VectorSource::Vigoda);
    cfg.replicas = 2000;
    let r = run_stage_experiment(&cfg, None).unwrap();
    let pair = build_construction(ConstructionSpec { index: 1, d: 2, k: 6 }).unwrap();
    let nk = (pair.n() * pair.k()) as i64;
    let good = parse(&r.exact["first_step/GoodStage"]).unwrap();
    assert!(good >= q(4 * (6 - 2 - 1), nk));
    let p = r.metrics["p_good_end"].mean;
    assert!(p > 0.0 && p < 1.0);
}

#[test]
fn stage_walk_needs_a_bad_color() {
    let cfg = ExperimentConfig::new(
        StartState::Construction(ConstructionSpec { index: 2, d: 4, k: 8 }),
        VectorSource::Vigoda,
    );
    assert!(run_stage_experiment(&cfg, None).is_err());
    assert!(run_stage_experiment(&ExperimentConfig::new(tree(4, 8), VectorSource::Vigoda), Some(0)).is_err());
}

#[test]
fn stage_walk_with_one_step_cap_never_reaches_good_end() {
    let mut cfg = ExperimentConfig::new(tree(4, 8), VectorSource::Vigoda);
    cfg.replicas = 300;
    cfg.step_cap = Some(1);
    let r = run_stage_experiment(&cfg, None).unwrap();
    // Walks that survive the first step run past the cap; those that stop end in BadEnd.
    assert!(r.samples.iter().all(|row| row[0] == 0.0));
    assert!(r.exceeded_cap > 0);
}
