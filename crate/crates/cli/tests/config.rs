use std::path::PathBuf;

use biolearn::bench::{NoiseKind, Schedule};
use biolearn::credit::RuleKind;
use biolearn_cli::{ConfigError, ExperimentConfig};

fn preset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

const MINIMAL: &str = r#"
output_dir = "out"
epochs = 2
batch_size = 10

[dataset]
kind = "synthetic"

[network]
filters = [4]
kernel = 3

[sweep]
rules = ["bp", "hb"]
seeds = [0, 1, 2]
"#;

#[test]
fn minimal_config_fills_defaults() {
    let c = ExperimentConfig::parse(MINIMAL).unwrap();
    assert_eq!(c.eval_every, 1);
    assert!(c.stratified);
    assert_eq!(c.ridge_lambda, 1.0);
    assert_eq!(c.sweep.data_fractions, vec![1.0]);
    assert_eq!(c.sweep.noise_levels, vec![0.0]);
    assert_eq!(c.dataset.train_per_class, 200);
    let runs = c.expand().unwrap();
    assert_eq!(runs.len(), 6);
    let order: Vec<(RuleKind, u64)> = runs.iter().map(|r| (r.config.rule.kind, r.config.seed)).collect();
    assert_eq!(order[0], (RuleKind::Bp, 0));
    assert_eq!(order[2], (RuleKind::Bp, 2));
    assert_eq!(order[3], (RuleKind::HebbInstar, 0));
    assert!(runs.iter().all(|r| r.config.batch_size == 10 && r.config.epochs == 2));
    assert!(runs.iter().all(|r| r.tags["dataset"] == "synthetic:200:100:0"));
}

#[test]
fn unknown_keys_are_rejected_with_a_position() {
    let text = MINIMAL.replace("batch_size = 10", "batch_size = 10\nlearning_rate = 0.1");
    match ExperimentConfig::parse(&text) {
        Err(ConfigError::Parse(m)) => {
            assert!(m.contains("learning_rate"), "{m}");
            assert!(m.contains("line 5"), "{m}");
            assert!(m.contains("column 1"), "{m}");
        }
        other => panic!("{other:?}"),
    }
    let nested = MINIMAL.replace("kernel = 3", "kernel = 3\nstride = 2");
    assert!(matches!(ExperimentConfig::parse(&nested), Err(ConfigError::Parse(_))));
}

#[test]
fn empty_axes_expand_to_no_runs() {
    let c = ExperimentConfig::parse(&MINIMAL.replace("seeds = [0, 1, 2]", "seeds = []")).unwrap();
    assert_eq!(c.expand().unwrap_err(), ConfigError::NoRuns);
    assert_eq!(ConfigError::NoRuns.to_string(), "no runs");
}

#[test]
fn invalid_values_are_reported() {
    let c = ExperimentConfig::parse(&MINIMAL.replace("epochs = 2", "epochs = 0")).unwrap();
    assert!(matches!(c.expand(), Err(ConfigError::Invalid(_))));

    let noisy = MINIMAL.replace("seeds = [0, 1, 2]", "seeds = [0]\nnoise_levels = [0.1]");
    let c = ExperimentConfig::parse(&noisy).unwrap();
    assert!(matches!(c.expand(), Err(ConfigError::Invalid(_))));

    let typo = format!("{MINIMAL}\n[rules.bpp]\neta = 0.1\n");
    match ExperimentConfig::parse(&typo).unwrap().expand() {
        Err(ConfigError::Invalid(m)) => assert!(m.contains("bpp"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn rule_tables_override_published_settings() {
    let text = format!(
        "{MINIMAL}\n[rules.bp]\neta = 0.5\nschedule = {{ kind = \"constant\" }}\n\n[rules.hb]\nk = 2\nzca_epsilon = 0.01\n"
    );
    let runs = ExperimentConfig::parse(&text).unwrap().expand().unwrap();
    let bp = &runs[0].config;
    assert_eq!(bp.rule.eta, 0.5);
    assert_eq!(bp.schedule, Schedule::Constant);
    assert_eq!(bp.zca_epsilon, None);
    let hb = &runs[3].config;
    assert_eq!(hb.rule.k, 2);
    assert_eq!(hb.rule.eta, 1e-5);
    assert_eq!(hb.rule.weight_decay, Some(0.95));
    assert_eq!(hb.zca_epsilon, Some(0.01));
}

#[test]
fn every_shipped_preset_parses_and_expands() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".toml"))
        .collect();
    names.sort();
    assert!(names.len() >= 15, "{names:?}");
    for name in names {
        let c = ExperimentConfig::load(&dir.join(&name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        c.expand().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn limited_data_preset_expands_to_forty_runs() {
    let c = ExperimentConfig::load(&preset("fig2a.toml")).unwrap();
    let runs = c.expand().unwrap();
    assert_eq!(runs.len(), 40);
    for r in &runs {
        assert_eq!(r.config.data_fraction, 0.2);
        assert_eq!(r.config.epochs, 20);
        assert_eq!(r.config.batch_size, 100);
    }
    for kind in [RuleKind::Bp, RuleKind::Fa, RuleKind::Dfa, RuleKind::HebbInstar] {
        let seeds: Vec<u64> = runs.iter().filter(|r| r.config.rule.kind == kind).map(|r| r.config.seed).collect();
        assert_eq!(seeds, (0..10).collect::<Vec<_>>());
    }
    let bp = runs.iter().find(|r| r.config.rule.kind == RuleKind::Bp).unwrap();
    assert_eq!(bp.config.rule.eta, 1e-5);
    assert_eq!(bp.config.schedule, Schedule::Step { gamma: 0.9, step_size: 1 });
    let fa = runs.iter().find(|r| r.config.rule.kind == RuleKind::Fa).unwrap();
    assert_eq!(fa.config.rule.eta, 5e-5);
    let hb = runs.iter().find(|r| r.config.rule.kind == RuleKind::HebbInstar).unwrap();
    assert_eq!(hb.config.rule.weight_decay, Some(0.95));
    assert_eq!(hb.config.zca_epsilon, Some(1e-5));
    assert_eq!(c.network.filters, vec![100, 196, 400]);
}

#[test]
fn protocol_presets_cover_the_grid() {
    let expect = [
        ("fig2b.toml", 1.0, 20),
        ("fig2c.toml", 0.2, 100),
        ("fig2d.toml", 1.0, 100),
        ("fig3a.toml", 0.2, 20),
        ("fig3d.toml", 1.0, 100),
    ];
    for (name, fraction, epochs) in expect {
        let runs = ExperimentConfig::load(&preset(name)).unwrap().expand().unwrap();
        assert_eq!(runs.len(), 40, "{name}");
        assert!(runs.iter().all(|r| r.config.data_fraction == fraction && r.config.epochs == epochs), "{name}");
    }
    let noise = ExperimentConfig::load(&preset("fig6.toml")).unwrap().expand().unwrap();
    assert_eq!(noise.len(), 4 * 6 * 10);
    assert!(noise.iter().all(|r| r.config.noise.kind == NoiseKind::Pepper));
    let sparse = ExperimentConfig::load(&preset("table2.toml")).unwrap().expand().unwrap();
    assert_eq!(sparse.len(), 30);
    assert!(sparse.iter().all(|r| r.config.sparsity == Some(0.95) && r.config.epochs == 100));
    assert!(sparse.iter().all(|r| !r.config.rule.kind.is_hebbian()));
}

#[test]
fn desk_preset_matches_the_tuned_settings() {
    let c = ExperimentConfig::load(&preset("desk.toml")).unwrap();
    let runs = c.expand().unwrap();
    assert_eq!(runs.len(), 40);
    assert!(runs.iter().all(|r| r.config.zca_epsilon == Some(0.1) && r.config.data_fraction == 0.2));
    let hb = runs.iter().find(|r| r.config.rule.kind == RuleKind::HebbInstar).unwrap();
    assert_eq!((hb.config.rule.eta, hb.config.rule.k), (1e-3, 1));
    let bp = runs.iter().find(|r| r.config.rule.kind == RuleKind::Bp).unwrap();
    assert_eq!(bp.config.rule.eta, 0.1);
}
