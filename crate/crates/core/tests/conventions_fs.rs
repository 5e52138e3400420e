use std::fs;
use std::path::Path;

use tfpaas_core::conventions::{
    load_config, load_layout, read_identity, resolve_critical, scaffold_project, ProjectLayout,
};
use tfpaas_core::validator::validate_script;

#[test]
fn scaffold_creates_template() {
    let dir = tempfile::tempdir().unwrap();
    let layout = scaffold_project(dir.path(), "  alice ").unwrap();
    for rel in ["TFP", "TFP/Critical", "TFP/MasterPerformance.xml", "TFP/app.id"] {
        assert!(dir.path().join(rel).exists(), "{rel} missing");
    }
    let id = read_identity(&layout).unwrap();
    assert_eq!(id.user_name, "alice");
    let master = fs::read_to_string(layout.master_file()).unwrap();
    assert!(validate_script(&master).is_empty());

    let err = scaffold_project(dir.path(), "alice").unwrap_err();
    assert_eq!(err.code(), "E_ALREADY_SCAFFOLDED");
}

#[test]
fn scaffold_rejects_blank_user() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(scaffold_project(dir.path(), "   ").unwrap_err().code(), "E_EMPTY_USERNAME");
    assert!(!dir.path().join("TFP").exists());
}

#[test]
fn override_is_transparent() {
    let dir = tempfile::tempdir().unwrap();
    scaffold_project(dir.path(), "bob").unwrap();
    fs::write(
        dir.path().join("TFP/tfp.conf"),
        "# overrides\ncritical_dir = perf/critical\nscript_suffix=Perf.xml\nflavour=mint\n",
    )
    .unwrap();
    let config = load_config(dir.path()).unwrap();
    assert_eq!(config.warnings.len(), 1);
    let manual = ProjectLayout {
        critical_dir: "perf/critical".into(),
        script_suffix: "Perf.xml".into(),
        ..ProjectLayout::defaults(dir.path())
    };
    assert_eq!(config.layout, manual);
    let file = Path::new("src/BookSearch.svc");
    assert_eq!(
        resolve_critical(file, &config.layout).unwrap(),
        dir.path().join("perf").join("critical").join("BookSearchPerf.xml")
    );
}

#[test]
fn escaping_overrides_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    scaffold_project(dir.path(), "bob").unwrap();
    for bad in ["critical_dir=../elsewhere", "master_path=/etc/passwd", "critical_dir=a/../../b"] {
        fs::write(dir.path().join("TFP/tfp.conf"), bad).unwrap();
        assert_eq!(load_layout(dir.path()).unwrap_err().code(), "E_ESCAPES_ROOT", "{bad}");
    }
    fs::write(dir.path().join("TFP/tfp.conf"), "ok=1\nbroken line\n").unwrap();
    assert_eq!(load_layout(dir.path()).unwrap_err().code(), "E_BAD_CONFIG");
}

#[test]
fn resolved_paths_stay_under_critical_dir() {
    let dir = tempfile::tempdir().unwrap();
    let layout = scaffold_project(dir.path(), "bob").unwrap();
    for name in ["a.cs", "x/y/Z.svc", "..\\..\\evil.java", "../up.py", "deep/one.two.three"] {
        let p = resolve_critical(Path::new(name), &layout).unwrap();
        assert!(p.starts_with(dir.path().join("TFP").join("Critical")), "{}", p.display());
    }
}
