use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use wsn_aco::report::{read_summary_csv, ReportError};
use wsn_aco::*;

fn small_spec(out: &Path) -> ExperimentSpec {
    let mut spec = ExperimentSpec::for_preset(1).unwrap();
    spec.base.rounds = 60;
    spec.protocols = vec![ProtocolKind::ModifiedAco, ProtocolKind::RandomWalk];
    spec.seeds = vec![1, 2, 3, 4, 5];
    spec.out_dir = out.to_path_buf();
    spec
}

fn files_under(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn one_round_file_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let report = run_experiments(&spec).unwrap();
    let runs = fs::read_dir(dir.path().join("runs")).unwrap().count();
    assert_eq!(runs, 10);
    assert_eq!(report.summary.len(), 10);
    for f in [
        "summary.csv",
        "comparison.csv",
        "plots/success_vs_round.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    assert!(report.files.iter().all(|p| p.is_file()));
}

#[test]
fn sweep_multiplies_run_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = small_spec(dir.path());
    spec.base.rounds = 20;
    spec.seeds = vec![1, 2];
    spec.sweep = Sweep::Ttl(vec![4, 8, 12]);
    run_experiments(&spec).unwrap();
    assert_eq!(
        fs::read_dir(dir.path().join("runs")).unwrap().count(),
        2 * 2 * 3
    );
    let ttl_plot = fs::read_to_string(dir.path().join("plots/success_vs_ttl.csv")).unwrap();
    assert_eq!(ttl_plot.lines().count(), 1 + 2 * 3);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut spec = small_spec(a.path());
    spec.base.trace = true;
    run_experiments(&spec).unwrap();
    spec.out_dir = b.path().to_path_buf();
    run_experiments(&spec).unwrap();
    let fa = files_under(a.path());
    assert!(!fa.is_empty());
    assert_eq!(fa, files_under(b.path()));
}

#[test]
fn comparison_matches_reaggregated_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let report = run_experiments(&spec).unwrap();
    let rows = read_summary_csv(dir.path().join("summary.csv")).unwrap();
    assert_eq!(rows, report.summary);

    for kind in &spec.protocols {
        let xs: Vec<f64> = rows
            .iter()
            .filter(|r| r.protocol == kind.name())
            .map(|r| r.success_ratio)
            .collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let row = report.row(*kind, None).unwrap();
        assert_eq!(row.runs, 5);
        assert!((row.success_ratio.mean - mean).abs() <= 1e-12);
        assert!((row.success_ratio.std - var.sqrt()).abs() <= 1e-12);

        let energy: f64 = rows
            .iter()
            .filter(|r| r.protocol == kind.name())
            .map(|r| r.total_energy_j)
            .sum::<f64>()
            / n;
        assert!((row.total_energy.mean - energy).abs() <= 1e-12 * energy);
    }
}

#[test]
fn unwritable_output_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocked");
    fs::write(&blocker, b"not a directory").unwrap();
    let mut spec = small_spec(&blocker);
    spec.base.rounds = 5;
    spec.seeds = vec![1];
    match run_experiments(&spec) {
        Err(ReportError::Io {
            path, completed, ..
        }) => {
            assert!(path.starts_with(&blocker));
            assert!(completed.is_empty());
        }
        other => panic!("expected io error, got {other:?}"),
    }
}

#[test]
fn config_file_drives_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.toml");
    let out = dir.path().join("out");
    fs::write(
        &cfg_path,
        format!(
            "scenario = 1\nprotocols = [\"classic-aco\", \"energy-greedy\"]\nseeds = \"1..3\"\nout = {:?}\n\n[sim]\nrounds = 15\n",
            out.display()
        ),
    )
    .unwrap();
    let spec = load_config(&cfg_path).unwrap();
    assert_eq!(spec.run_count(), 6);
    run_experiments(&spec).unwrap();
    assert_eq!(fs::read_dir(out.join("runs")).unwrap().count(), 6);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 3);
}
