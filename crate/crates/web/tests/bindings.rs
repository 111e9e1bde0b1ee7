use maslov_web::{boundary_phase, generator_winding, verify_scenario};

#[test]
fn verify_latitude() {
    let json = verify_scenario("CPn(n=1)", "latitude(0.5)", "chart_disk(0.5)", 16).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["mu"], 2);
    assert_eq!(v["status"], "PASS");
    assert!((v["sigma_over_pi"].as_f64().unwrap() - 1.2).abs() < 1e-10);
}

#[test]
fn verify_rejects_bad_input() {
    assert!(verify_scenario("CPn(n=1)", "latitude(0.5)", "chart_disk(0.5)", 12).is_err());
    assert!(verify_scenario("CPn(n=1)", "sphere", "chart_disk(0.5)", 16)
        .unwrap_err()
        .contains("latitude"));
}

#[test]
fn phase_of_flat_circle() {
    let json = boundary_phase("Cn(n=1)", "circle(2)", "flat_disk(2)", 32).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["mu"], 2);
    assert_eq!(v["windings"][0], -2);
    let first = &v["points"][0][0];
    assert!((first[0].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let theta = v["theta"][0].as_array().unwrap();
    let net = theta.last().unwrap().as_f64().unwrap() - theta[0].as_f64().unwrap();
    assert!((net + 4.0 * std::f64::consts::PI).abs() < 1e-9);
}

#[test]
fn annulus_has_two_components() {
    let json = boundary_phase(
        "FlatTorus(lattice=[1, 1.5i])",
        "flat_torus_geodesic(1)",
        "torus_annulus(1.5i)",
        16,
    )
    .unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["windings"].as_array().unwrap().len(), 2);
    assert_eq!(v["mu"], 0);
}

#[test]
fn generator_loop() {
    for n in 1..=4 {
        assert_eq!(generator_winding(n, 1, 1).unwrap(), -1);
    }
    assert_eq!(generator_winding(3, 2, 3).unwrap(), -3);
    assert!(generator_winding(2, 5, 1).is_err());
    assert!(generator_winding(0, 1, 1).is_err());
}

#[test]
fn demo_presets_pass_at_slider_extremes() {
    let cases = [
        ("Cn(n=1)", "circle(0.2)", "flat_disk(0.2)"),
        ("Cn(n=1)", "circle(3)", "flat_disk(3)"),
        ("CPn(n=1)", "latitude(0.05)", "chart_disk(0.05)"),
        ("CPn(n=1)", "latitude(4)", "chart_disk(4)"),
        ("CPn(n=1)", "latitude(0.05)", "cap(0.05)"),
        ("CPn(n=1)", "latitude(4)", "cap(4)"),
        (
            "HyperbolicDisk(K=-1)",
            "hyperbolic_circle(0.05)",
            "hyperbolic_disk_cap(0.05)",
        ),
        (
            "HyperbolicDisk(K=-1)",
            "hyperbolic_circle(2.5)",
            "hyperbolic_disk_cap(2.5)",
        ),
        ("Cn(n=1)", "circle(1)", "wavy_disk(1, -0.9, 3)"),
        ("Cn(n=1)", "circle(1)", "wavy_disk(1, 0.9, 3)"),
    ];
    for (m, l, f) in cases {
        let v: serde_json::Value = serde_json::from_str(&verify_scenario(m, l, f, 32).unwrap()).unwrap();
        assert_eq!(v["status"], "PASS", "{l} / {f}: {v}");
        assert!(boundary_phase(m, l, f, 128).is_ok());
    }
}
