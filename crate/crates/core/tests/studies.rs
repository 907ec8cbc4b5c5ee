mod common;

use std::process::Command;

use bayes_ratio::config::StudyConfig;
use bayes_ratio::estimators::{mc_estimate, Method, SamplePlan};
use bayes_ratio::randfield::KlBasis;
use bayes_ratio::studies::{self, Setup};
use bayes_ratio::Error;

#[test]
fn study_csvs_are_identical_across_reruns_and_thread_counts() {
    let run = |threads: usize| {
        let dir = tempfile::tempdir().unwrap();
        let config = common::reduced_config(dir.path());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| common::run_all_studies(&config))
    };
    let first = run(1);
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        ["cost_study.csv", "h_study.csv", "n_study.csv", "robustness_study.csv", "screening.csv"]
    );
    assert_eq!(first, run(1));
    assert_eq!(first, run(3));
}

#[test]
fn frozen_coefficient_gives_zero_discretisation_differences() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = common::reduced_config(dir.path());
    config.discretisation.frozen_coefficient = Some(1.0);
    let study = studies::h_study(&Setup::new(config).unwrap()).unwrap();
    for row in &study.rows {
        assert!(row.diff_q < 1e-12 && row.diff_z < 1e-12 && row.diff_ratio < 1e-10, "{row:?}");
    }
}

#[test]
fn csv_header_echoes_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::reduced_config(dir.path());
    let study = studies::h_study(&Setup::new(config.clone()).unwrap()).unwrap();
    let text = study.table.text();
    assert!(text.contains(&format!("# config_hash = {}", config.hash())));
    assert!(text.contains("# seeds: estimator = 2024, truth = 1, noise = 2"));
    let echoed: String = text
        .lines()
        .filter_map(|l| l.strip_prefix("#   "))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut expected = config.clone();
    expected.output.directory = StudyConfig::default().output.directory;
    assert_eq!(StudyConfig::from_toml(&echoed).unwrap(), expected);
    assert!(text.lines().any(|l| l.starts_with("# fit diff_ratio vs h: slope = ")));
}

#[test]
fn data_file_is_not_overwritten_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::reduced_config(dir.path());
    let path = studies::cmd_generate_data(&config, false).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert!(matches!(studies::cmd_generate_data(&config, false), Err(Error::FileExists(_))));
    studies::cmd_generate_data(&config, true).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
    assert_eq!(Setup::new(config).unwrap().data, bayes_ratio::bayes::ObservationSet::load(&path).unwrap());
}

#[test]
fn cost_study_needs_the_earlier_studies() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::reduced_config(dir.path());
    assert!(studies::cost_study(&Setup::new(config).unwrap()).is_err());
}

#[test]
fn uninformative_data_returns_the_prior_mean() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::reduced_config(dir.path());
    let setup = Setup::new(config).unwrap();
    let vague = setup.data.with_noise_variance(1e12).unwrap();
    let problem = setup.problem_to(0.0625, vague).unwrap();
    let plan = SamplePlan::single_level(Method::Mc, 64, problem.levels() - 1, 1, 3);
    let report = mc_estimate(&plan, &problem).unwrap();
    let prior_mean = report.replications[0].q / report.replications[0].z;
    let plain = bayes_ratio::stats::mean(
        &(0..64u64)
            .map(|i| {
                let s = bayes_ratio::seed::derive(&[3, bayes_ratio::seed::tag::MC, 1, 0, 0, i]);
                problem
                    .evaluate(1, &bayes_ratio::randfield::sample_parameters(problem.basis(), s))
                    .unwrap()
                    .phi
            })
            .collect::<Vec<_>>(),
    );
    // the likelihood still varies by O(1/sigma) across samples
    assert!((prior_mean - plain).abs() < 1e-5 * plain.abs(), "{prior_mean} vs {plain}");
    assert!((report.replications[0].ratio - plain).abs() < 1e-5 * plain.abs());
}

#[test]
fn sampling_study_uses_a_configured_lattice_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = common::reduced_config(dir.path());
    let lattice = dir.path().join("head.txt");
    std::fs::write(&lattice, common::PUBLISHED_HEAD).unwrap();
    config.estimator.lattice_file = Some(lattice);
    config.estimator.methods = vec![bayes_ratio::estimators::Method::Qmc];
    // the two published components cannot cover 20 dimensions
    assert!(matches!(
        studies::n_study(&Setup::new(config).unwrap()),
        Err(Error::ShortGeneratingVector { .. })
    ));
}

fn cli(dir: &std::path::Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bayes-ratio"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(["--set", "problem.modes=20", "--set", "problem.h_star=0.03125", "--set", "discretisation.levels=2"])
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn cli_generates_data_caches_and_lattices() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["--output", "o", "generate-data"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/data.txt").exists());
    let again = cli(dir.path(), &["--output", "o", "generate-data"]);
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("refusing to overwrite"));
    assert!(cli(dir.path(), &["--output", "o", "--force", "generate-data"]).status.success());

    assert!(cli(dir.path(), &["--output", "o", "kl-cache"]).status.success());
    let cached = KlBasis::read_cache(&dir.path().join("o/kl_basis.txt")).unwrap();
    assert_eq!(cached.len(), 20);

    assert!(cli(dir.path(), &["--output", "o", "cbc-build", "--n", "64", "--dim", "5"]).status.success());
    let rule = bayes_ratio::qmc::load_generating_vector(&dir.path().join("o/lattice.txt"), 64, 5).unwrap();
    assert_eq!(rule.generating_vector()[0], 1);
}

#[test]
fn cli_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[problem]\nobservations = 4\n").unwrap();
    let out = cli(dir.path(), &["--config", "c.toml", "--observations", "16", "generate-data"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let data = bayes_ratio::bayes::ObservationSet::load(&dir.path().join("out/data.txt")).unwrap();
    assert_eq!(data.m(), 16);
    let bad = cli(dir.path(), &["--set", "problem.modez=3", "generate-data"]);
    assert!(!bad.status.success());
}
