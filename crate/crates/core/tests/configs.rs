use std::path::Path;

use stableport::experiments::{ExperimentConfig, ExperimentFile};

#[test]
fn shipped_configs_load_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let file = ExperimentFile::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            file.config.validate().unwrap();
            names.push(file.config.name());
        }
    }
    names.sort();
    assert_eq!(
        names,
        ["convergence_figure", "convergence_figure", "power_diagnostic", "size_diagnostic", "size_randomness"]
    );
}

#[test]
fn power_config_has_twelve_models() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/power_diagnostic.toml");
    match ExperimentFile::load(&path).unwrap().config {
        ExperimentConfig::PowerDiagnostic { models, .. } => assert_eq!(models.len(), 12),
        other => panic!("unexpected config {other:?}"),
    }
}
