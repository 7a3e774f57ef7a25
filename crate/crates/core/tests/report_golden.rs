//! Rendered report for the bundled corpus, compared with stored output.

use std::path::PathBuf;

use pipesim_core::harness::{corpus, emit_report, run_matrix, ReportFormat, SimConfig, PRESETS};

fn check(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(expected, actual, "{} is stale", path.display());
}

#[test]
fn corpus_report_matches_golden() {
    let configs: Vec<SimConfig> = PRESETS.iter().map(|p| SimConfig::preset(p).unwrap()).collect();
    let cells = run_matrix(&configs, &corpus::all()).unwrap();
    assert!(cells.iter().all(|c| c.ok()));
    let entries: Vec<_> = cells.iter().map(|c| c.entry()).collect();
    check("corpus_report.txt", &emit_report(&entries, ReportFormat::Text));
    check("corpus_report.kv", &emit_report(&entries, ReportFormat::Kv));
}
