//! Acceptance criteria, each checked at its stated tolerance against an
//! analytic oracle. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};

use maslov_core::ambient::AmbientManifold;
use maslov_core::canonical::generator_loop_winding;
use maslov_core::cli::{convergence_study, parse_config, run_suite, FULL_CATALOG};
use maslov_core::lagrangian::LagrangianImmersion;
use maslov_core::surface::BoundedSurface;
use maslov_core::verify::{
    boundary_dependence_check, identity_residual, monotonicity_check, Status, Tolerances, VerificationReport,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn setup(m: &str, l: &str) -> (AmbientManifold, LagrangianImmersion) {
    let m: AmbientManifold = m.parse().expect("manifold");
    let l = LagrangianImmersion::parse(l, &m).expect("lagrangian");
    (m, l)
}

fn report(m: &str, l: &str, f: &str) -> Result<VerificationReport, String> {
    let (m, l) = setup(m, l);
    let f = BoundedSurface::parse(f, &m, &l).map_err(|e| e.to_string())?;
    identity_residual("acceptance", &m, &l, &f, &Tolerances::default()).map_err(|e| e.to_string())
}

fn require(ok: bool, what: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what)
    }
}

fn flat_case() -> Outcome {
    let mut worst = 0.0f64;
    for r in [0.5, 1.0, 2.0] {
        let rep = report("Cn(n=1)", &format!("circle({r})"), &format!("flat_disk({r})"))?;
        let area = PI * r * r;
        require(rep.mu == 2, format!("r = {r}: mu = {}", rep.mu))?;
        require(
            (rep.omega_f - area).abs() <= 1e-8 * area,
            format!("r = {r}: omega = {}", rep.omega_f),
        )?;
        require(
            (rep.sigma_over_pi - 2.0).abs() <= 1e-7,
            format!("r = {r}: sigma/pi = {}", rep.sigma_over_pi),
        )?;
        require(
            rep.residual.abs() <= 1e-6,
            format!("r = {r}: residual = {:e}", rep.residual),
        )?;
        worst = worst.max(rep.residual.abs());
    }
    Ok(format!("r in {{0.5, 1, 2}}, max |residual| = {worst:.2e}"))
}

fn positive_case() -> Outcome {
    let mut worst = 0.0f64;
    for rho in [0.3, 0.5, 0.8] {
        let rep = report("CPn(n=1)", &format!("latitude({rho})"), &format!("chart_disk({rho})"))?;
        let two_lambda_omega = 4.0 * rho * rho / (1.0 + rho * rho);
        let sigma = 2.0 * (1.0 - rho * rho) / (1.0 + rho * rho);
        require(rep.mu == 2, format!("rho = {rho}: mu = {}", rep.mu))?;
        let got = 2.0 * rep.lambda * rep.omega_f;
        require(
            (got - two_lambda_omega).abs() <= 1e-5,
            format!("rho = {rho}: 2 lambda omega = {got}"),
        )?;
        require(
            (rep.sigma_over_pi - sigma).abs() <= 1e-5,
            format!("rho = {rho}: sigma/pi = {}", rep.sigma_over_pi),
        )?;
        require(
            rep.residual.abs() <= 1e-5,
            format!("rho = {rho}: residual = {:e}", rep.residual),
        )?;
        worst = worst.max(rep.residual.abs());
    }
    Ok(format!("rho in {{0.3, 0.5, 0.8}}, max |residual| = {worst:.2e}"))
}

fn monotonicity() -> Outcome {
    let tol = Tolerances::default();
    let mut notes = Vec::new();
    for (m, l, surfaces) in [
        ("CPn(n=1)", "clifford(1)", vec!["chart_disk(1)", "cap(1)"]),
        (
            "CPn(n=2)",
            "clifford(2)",
            vec!["coordinate_disk(1)", "coordinate_disk(2)"],
        ),
    ] {
        let (m, l) = setup(m, l);
        let fs: Vec<BoundedSurface> = surfaces
            .iter()
            .map(|s| BoundedSurface::parse(s, &m, &l).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let rep = monotonicity_check(&m, &l, &fs, &tol).map_err(|e| e.to_string())?;
        require(
            rep.applicable,
            format!("{}: max |H| = {:e}", l.label, rep.max_mean_curvature),
        )?;
        require(
            rep.max_mean_curvature <= 1e-7,
            format!("{}: max |H| = {:e}", l.label, rep.max_mean_curvature),
        )?;
        for (s, d) in surfaces.iter().zip(&rep.deltas) {
            require(
                d.abs() <= 1e-5,
                format!("{} / {s}: mu - 2 lambda omega = {d:e}", l.label),
            )?;
        }
        let worst = rep.deltas.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        notes.push(format!(
            "{}: max |H| = {:.1e}, max |delta| = {worst:.1e}",
            l.label, rep.max_mean_curvature
        ));
    }
    Ok(notes.join("; "))
}

fn negative_case() -> Outcome {
    let mut worst = 0.0f64;
    for s in [0.5, 1.0] {
        let rep = report(
            "HyperbolicDisk(K=-1)",
            &format!("hyperbolic_circle({s})"),
            &format!("hyperbolic_disk_cap({s})"),
        )?;
        let sigma = 2.0 * f64::cosh(s);
        require(
            (rep.sigma_over_pi - sigma).abs() <= 1e-5,
            format!("s = {s}: sigma/pi = {}", rep.sigma_over_pi),
        )?;
        require(
            rep.residual.abs() <= 1e-5,
            format!("s = {s}: residual = {:e}", rep.residual),
        )?;
        worst = worst.max(rep.residual.abs());
    }
    Ok(format!("s in {{0.5, 1}}, max |residual| = {worst:.2e}"))
}

fn proof_machinery() -> Outcome {
    let configs = parse_config(FULL_CATALOG).map_err(|e| e.to_string())?;
    let (outcomes, _) = run_suite(&configs, None).map_err(|e| e.to_string())?;
    let mut worst = [0.0f64; 4];
    for o in &outcomes {
        if let Some(e) = &o.error {
            return Err(format!("{}: {e}", o.scenario));
        }
        for r in &o.reports {
            let a = &r.auxiliary;
            let values = [a.oh_identity, a.sigma_closedness, a.einstein_cell, a.stokes];
            let bounds = [1e-7, 1e-6, 1e-4, 1e-6];
            let names = ["oh_identity", "sigma_closedness", "einstein_cell", "stokes"];
            for k in 0..4 {
                require(
                    values[k] <= bounds[k],
                    format!("{} / {}: {} = {:e}", o.scenario, r.surface, names[k], values[k]),
                )?;
                worst[k] = worst[k].max(values[k]);
            }
        }
    }
    Ok(format!(
        "{} scenarios; max oh {:.1e}, closedness {:.1e}, einstein cell {:.1e}, stokes {:.1e}",
        outcomes.len(),
        worst[0],
        worst[1],
        worst[2],
        worst[3]
    ))
}

fn generator_loop() -> Outcome {
    for n in 1..=4 {
        for axis in 1..=n {
            let w = generator_loop_winding(n, axis, 1).map_err(|e| e.to_string())?;
            require(w == -1, format!("n = {n}, axis {axis}: winding {w}"))?;
        }
    }
    Ok("winding -1 for n = 1..4 on every axis".into())
}

fn boundary_dependence() -> Outcome {
    let (m, l) = setup("CPn(n=1)", "clifford(1)");
    let near = BoundedSurface::parse("chart_disk(1)", &m, &l).map_err(|e| e.to_string())?;
    let far = BoundedSurface::parse("reversed(cap(1))", &m, &l).map_err(|e| e.to_string())?;
    let gamma = near.boundary_links()[0].path.clone();
    let gap = boundary_dependence_check(&m, &l, &gamma, &near, &far).map_err(|e| e.to_string())?;
    let same = boundary_dependence_check(&m, &l, &gamma, &near, &near).map_err(|e| e.to_string())?;
    require(gap <= 1e-5, format!("near vs far: {gap:e}"))?;
    require(same == 0.0, format!("duplicate surface: {same:e}"))?;
    Ok(format!("near vs far {gap:.1e}, duplicate {same}"))
}

fn convergence() -> Outcome {
    let study = parse_config(include_str!("../configs/latitude_convergence.toml")).map_err(|e| e.to_string())?;
    let table = convergence_study(&study[0], 3).map_err(|e| e.to_string())?;
    let order = table.min_observed_order().ok_or("no unsaturated refinement")?;
    require(order >= 1.9, format!("observed order {order:.3}"))?;
    require(table.mu_stable(), "mu changed under refinement".into())?;

    let default = &parse_config(FULL_CATALOG).map_err(|e| e.to_string())?[1];
    let mut mus = Vec::new();
    for resolution in [8, 16, 32, 64, 128] {
        let config = maslov_core::cli::ScenarioConfig {
            resolution,
            ..default.clone()
        };
        let (outcomes, _) = run_suite(&[config], None).map_err(|e| e.to_string())?;
        mus.extend(outcomes[0].reports.iter().map(|r| r.mu));
    }
    require(mus.iter().all(|&m| m == 2), format!("mu across resolutions: {mus:?}"))?;
    Ok(format!(
        "observed order {order:.3} (Gauss order 2 from resolution 8); mu = 2 at resolutions 8..128"
    ))
}

fn negative_control() -> Outcome {
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/perturbed_torus.toml");
    let output = Command::new(env!("CARGO_BIN_EXE_maslov"))
        .args(["--config", fixture])
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&output.stdout);
    require(
        output.status.code() == Some(1),
        format!("exit code {:?}", output.status.code()),
    )?;
    require(
        stdout.lines().any(|l| l.starts_with("FAIL")) && stdout.contains("lagrangian_residual"),
        format!("stdout: {stdout}"),
    )?;
    let configs =
        parse_config(&std::fs::read_to_string(fixture).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (outcomes, _) = run_suite(&configs, None).map_err(|e| e.to_string())?;
    let r = &outcomes[0].reports[0];
    require(r.status == Status::Fail, format!("status {}", r.status))?;
    require(
        r.auxiliary.lagrangian > 1e-3,
        format!("lagrangian_residual = {:e}", r.auxiliary.lagrangian),
    )?;
    Ok(format!("exit 1, lagrangian_residual = {:.2e}", r.auxiliary.lagrangian))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("flat case", flat_case),
        ("positive case, all terms nonzero", positive_case),
        ("monotonicity of minimal Lagrangians", monotonicity),
        ("negative case", negative_case),
        ("proof-machinery identities", proof_machinery),
        ("generator loop winding", generator_loop),
        ("boundary-only dependence", boundary_dependence),
        ("convergence and mu stability", convergence),
        ("non-Lagrangian negative control", negative_control),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
