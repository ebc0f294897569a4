use super::*;
use crate::evolution::InteractionMode;

fn config(text: &str) -> ScenarioConfig {
    ScenarioConfig::from_toml_str(text).unwrap()
}

const VACUUM: &str = r#"
name = "vacuum"
photon = { kind = "fock", n_i = 0 }
electrons = [{ magnitude = 1.0 }, { magnitude = 1.0 }]
outputs = [{ kind = "joint_table" }, { kind = "pcc" }]
"#;

#[test]
fn parses_a_minimal_scenario() {
    let cfg = config(VACUUM);
    assert_eq!(cfg.mode, InteractionMode::Simultaneous);
    assert_eq!(cfg.path, ComputePath::Auto);
    assert!(cfg.uses_kernel());
    assert_eq!(cfg.joint_axes(), ["photon", "e1", "e2"]);
    assert_eq!(cfg.hash().len(), 64);
}

#[test]
fn rejects_invalid_scenarios() {
    let cases = [
        VACUUM.replace("name = \"vacuum\"", "name = \"a b\""),
        VACUUM.replace(
            "electrons = [{ magnitude = 1.0 }, { magnitude = 1.0 }]",
            "electrons = []",
        ),
        VACUUM.replace("{ kind = \"pcc\" }", "{ kind = \"pcc\", axes = [\"e1\", \"e3\"] }"),
        VACUUM.replace("name = \"vacuum\"", "name = \"v\"\nmeasure_between = true"),
        VACUUM.replace("name = \"vacuum\"", "name = \"v\"\ntruncation_tol = 0.0"),
        VACUUM.replace("name = \"vacuum\"", "name = \"v\"\nunknown_key = 1"),
        VACUUM.replace("name = \"vacuum\"", "name = \"v\"\npost_select = { e9 = 0 }"),
        VACUUM.replace("{ kind = \"pcc\" }", "{ kind = \"classical_comparison\" }"),
        VACUUM.to_string() + "\n[sweep]\ng = []\nn = [0]\n",
        VACUUM.to_string() + "\n[sweep]\ng = [1.0]\nn = [0.5]\n",
    ];
    for text in cases {
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert_eq!(err.kind(), "ConfigError", "{text}");
    }
}

#[test]
fn zero_coupling_gives_a_delta_and_undefined_pcc() {
    let cfg = config(&VACUUM.replace("magnitude = 1.0", "magnitude = 0.0"));
    let sim = simulate(&cfg).unwrap();
    assert_eq!(sim.joint.len(), 1);
    assert_eq!(sim.joint.get(&[0, 0, 0]), 1.0);
    assert!(sim.pcc("e1", "e2").unwrap().value.is_none());
}

#[test]
fn kernel_and_evolution_paths_agree() {
    let base = VACUUM
        .replace("n_i = 0", "n_i = 3")
        .replace("magnitude = 1.0 }, {", "magnitude = 0.8, phase = 0.4 }, {");
    let kernel = simulate(&config(&base)).unwrap();
    let evolution = simulate(&config(&format!("path = \"evolution\"\n{base}"))).unwrap();
    assert_eq!(kernel.path, UsedPath::Kernel);
    assert_eq!(evolution.path, UsedPath::Evolution);
    for (k, p) in evolution.joint.iter() {
        assert!((p - kernel.joint.get(k)).abs() < 1e-10, "{k:?}");
    }
}

#[test]
fn thermal_input_is_a_fock_mixture() {
    let text = VACUUM.replace("{ kind = \"fock\", n_i = 0 }", "{ kind = \"thermal\", n_avg = 0.3 }");
    let sim = simulate(&config(&text)).unwrap();
    assert!(sim.truncation.components > 5);
    let m = crate::stats::marginalize(&sim.joint, &["photon", "e1", "e2"]).unwrap();
    assert!((m.total_mass() + sim.truncation.dropped_mass - 1.0).abs() < 1e-9);
    let evolution = simulate(&config(&format!("path = \"evolution\"\n{text}"))).unwrap();
    let (a, b) = (sim.pcc("e1", "e2").unwrap(), evolution.pcc("e1", "e2").unwrap());
    assert!((a.value.unwrap() - b.value.unwrap()).abs() < 1e-9);
}

#[test]
fn post_selection_drops_the_selected_axes() {
    let text = VACUUM.replace("name = \"vacuum\"", "name = \"v\"\npost_select = { photon = 0 }");
    let sim = simulate(&config(&text)).unwrap();
    assert_eq!(sim.conditioned.axes(), ["e1", "e2"]);
    assert!(sim.conditioned.selection_probability() > 0.0);
    assert!(sim.conditioned.iter().all(|(k, _)| k[0] + k[1] == 0));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&VACUUM.replace(
        "outputs = [{ kind = \"joint_table\" }, { kind = \"pcc\" }]",
        "outputs = [{ kind = \"joint_table\" }, { kind = \"joint_table\", format = \"json\" }, \
         { kind = \"marginals\", axes = [\"e1\"] }, { kind = \"pcc\" }]",
    ));
    let a = run_scenario(&cfg, &dir.path().join("a")).unwrap();
    let b = run_scenario(&cfg, &dir.path().join("b")).unwrap();
    assert_eq!(a.manifest.outputs, b.manifest.outputs);
    let names: Vec<&str> = a.manifest.outputs.iter().map(|o| o.file.as_str()).collect();
    assert_eq!(names, ["joint.csv", "joint.json", "marginal_e1.csv", "summary.json"]);
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config, cfg);
    assert_eq!(manifest.config_sha256, cfg.hash());
}

#[test]
fn one_point_sweep_matches_a_run() {
    let text = VACUUM.to_string() + "\n[sweep]\ng = [1.0]\nn = [0]\nmodes = [\"simultaneous\"]\n";
    let cfg = config(&text);
    let rows = sweep_rows(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    let direct = simulate(&cfg).unwrap().pcc("e1", "e2").unwrap().value;
    assert_eq!(rows[0].pcc, direct);
    assert_eq!(rows[0].status, "ok");
}

#[test]
fn failed_sweep_points_are_recorded() {
    let text = VACUUM.to_string()
        + "\n[cutoffs]\nn_cutoff = 6\nj_window = [-6, 6]\n\n[sweep]\ng = [0.1, 3.0]\nn = [0]\nmodes = [\"simultaneous\"]\n";
    let rows = sweep_rows(&config(&text)).unwrap();
    assert_eq!(rows[0].status, "ok");
    assert_eq!(rows[1].status, "CutoffBudgetExceeded");
    assert!(rows[1].pcc.is_none());
    assert!(rows_to_csv(&rows)
        .lines()
        .nth(2)
        .unwrap()
        .starts_with("simultaneous,3,0,fock,,,,CutoffBudgetExceeded,"));
}

#[test]
fn errors_name_the_scenario() {
    let text = VACUUM.to_string() + "\n[cutoffs]\nn_cutoff = 2\nj_window = [-2, 2]\n";
    let err = simulate(&config(&text.replace("magnitude = 1.0", "magnitude = 2.0"))).unwrap_err();
    assert!(err.to_string().starts_with("scenario `vacuum`"));
    assert_eq!(err.kind(), "CutoffBudgetExceeded");
}

#[test]
fn oracle_check_passes_for_a_small_case() {
    let cfg = config(&VACUUM.replace("n_i = 0", "n_i = 2"));
    let r = oracle_check(&cfg).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.compared > 100);
}
