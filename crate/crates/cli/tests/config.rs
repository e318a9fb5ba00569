use conedbar_cli::config::parse_config_with;
use conedbar_cli::{parse_config, Experiment, ExperimentConfig};

#[test]
fn minimal_config_fills_defaults() {
    let c = parse_config("experiment = \"solve-cone-l2\"\n[cone]\ndegree = 1\n").unwrap();
    assert_eq!(c.experiment, Experiment::SolveConeL2);
    assert_eq!(c.degree, 1);
    let d = ExperimentConfig::new(Experiment::SolveConeL2);
    assert_eq!(c.n_r, d.n_r);
    assert_eq!(c.tolerances, d.tolerances);
    assert_eq!(c.seeds, vec![0]);
}

#[test]
fn negative_tolerance_names_the_key() {
    let err = parse_config("experiment = \"solve-cp1\"\n[tolerances]\nresidual = -1e-3\n").unwrap_err();
    assert_eq!(err.len(), 1);
    assert!(err[0].starts_with("tolerances.residual"), "{err:?}");
}

#[test]
fn refinement_schedules_nested_grids() {
    let c = parse_config("experiment = \"solve-cp1\"\n[grid]\nn_r = 8\nrefine = 3\n").unwrap();
    let g = c.grids();
    assert_eq!(g.len(), 3);
    assert_eq!(g.iter().map(|x| x.1).collect::<Vec<_>>(), vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]);
}

#[test]
fn every_violation_is_reported() {
    let text = "experiment = \"solve-bundle\"\ncolour = 3\n[grid]\nrefine = 0\nn_theta = \"many\"\nspeed = 1\n[tolerances]\ntail = 0.0\n";
    let err = parse_config(text).unwrap_err();
    for key in ["colour", "grid.speed", "grid.n_theta", "grid.refine", "tolerances.tail"] {
        assert!(err.iter().any(|e| e.starts_with(key)), "{key} missing from {err:?}");
    }
    assert!(err.iter().find(|e| e.starts_with("colour")).unwrap().contains("unknown key"));
}

#[test]
fn experiment_is_required_unless_supplied() {
    let err = parse_config("[cone]\ndegree = 2\n").unwrap_err();
    assert!(err.iter().any(|e| e.starts_with("experiment")));
    let c = parse_config_with("[cone]\ndegree = 2\n", Some(Experiment::VerifySuite)).unwrap();
    assert_eq!(c.experiment, Experiment::VerifySuite);
    assert!(parse_config("experiment = \"plot\"\n").is_err());
}

#[test]
fn syntax_errors_are_reported() {
    assert!(parse_config("experiment = \n").is_err());
}

#[test]
fn unknown_test_form_is_rejected() {
    let err = parse_config("experiment = \"solve-cone-l2\"\n[cone]\nform = \"wild\"\n").unwrap_err();
    assert!(err[0].starts_with("cone.form"), "{err:?}");
}
