//! Assembly of `μ(F) = 2λω(F) + σ_L(∂F)/π` and the checks built on it.
//!
//! Each term comes from its own code path: `μ` from phase winding, `ω(F)`
//! from surface quadrature and `σ_L(∂F)` from the mean curvature along the
//! boundary loops. None is solved for from the others.

use std::f64::consts::{PI, TAU};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::AmbientManifold;
use crate::canonical::{
    oh_identity_residual, relative_phase_trace, winding_number, xi_f_boundary_integral, xi_f_cell_circulation,
};
use crate::error::{Error, Result};
use crate::lagrangian::{sample_directions, sample_parameters, LagrangianImmersion, LoopInL};
use crate::quadrature::GaussLegendre;
use crate::surface::BoundedSurface;

/// Random sample points used by the pointwise auxiliary checks.
pub const AUXILIARY_SAMPLES: usize = 100;
/// Step of the closedness finite differences.
pub const CLOSEDNESS_STEP: f64 = 1e-4;
const SAMPLE_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub identity: f64,
    pub lagrangian: f64,
    pub oh_identity: f64,
    pub sigma_closedness: f64,
    /// Relative, or absolute where the exact circulation vanishes.
    pub einstein_cell: f64,
    pub stokes: f64,
    /// Bound on `max |H|` below which `L` counts as minimal.
    pub minimality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-5,
            lagrangian: 1e-10,
            oh_identity: 1e-7,
            sigma_closedness: 1e-6,
            einstein_cell: 1e-4,
            stokes: 1e-6,
            minimality: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("identity", self.identity),
            ("lagrangian", self.lagrangian),
            ("oh_identity", self.oh_identity),
            ("sigma_closedness", self.sigma_closedness),
            ("einstein_cell", self.einstein_cell),
            ("stokes", self.stokes),
            ("minimality", self.minimality),
        ];
        match all.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            Some((name, v)) => Err(Error::Precondition(format!("tolerance {name} = {v} must be positive"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryResiduals {
    /// `max |ω(∂ₐf, ∂_bf)|` over sample points.
    pub lagrangian: f64,
    /// `max |σ_L − iξ_L/2|`.
    pub oh_identity: f64,
    /// `max |dσ_L|` by centred differences with step [`CLOSEDNESS_STEP`].
    pub sigma_closedness: f64,
    /// Worst cell of `∮ iξ_F = −4πλ∫F*ω`.
    pub einstein_cell: f64,
    /// `|∮_{∂F}(−iξ_F)/2π − 2λω(F)|`.
    pub stokes: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub manifold: String,
    pub lagrangian: String,
    pub surface: String,
    pub lambda: f64,
    pub mu: i64,
    pub omega_f: f64,
    pub sigma_over_pi: f64,
    /// `mu − 2·lambda·omega_f − sigma_over_pi`, in that order of operations.
    pub residual: f64,
    pub auxiliary: AuxiliaryResiduals,
    pub resolution: usize,
    pub order: usize,
    pub status: Status,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Wall clock where the platform has one; `std::time::Instant` panics on
/// `wasm32-unknown-unknown`.
struct Stopwatch {
    #[cfg(not(target_family = "wasm"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_family = "wasm"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(target_family = "wasm"))]
        return self.start.elapsed();
        #[cfg(target_family = "wasm")]
        Duration::ZERO
    }
}

pub fn identity_terms_residual(mu: i64, lambda: f64, omega_f: f64, sigma_over_pi: f64) -> f64 {
    mu as f64 - 2.0 * lambda * omega_f - sigma_over_pi
}

impl VerificationReport {
    /// `μ − 2λω(F)`.
    pub fn delta(&self) -> f64 {
        self.mu as f64 - 2.0 * self.lambda * self.omega_f
    }

    pub fn recomputed_residual(&self) -> f64 {
        identity_terms_residual(self.mu, self.lambda, self.omega_f, self.sigma_over_pi)
    }

    /// Re-derives `status` and `failures` from the stored numbers.
    pub fn judge(&mut self, tol: &Tolerances) {
        let aux = &self.auxiliary;
        let checks = [
            ("identity_residual", self.residual.abs(), tol.identity),
            ("lagrangian_residual", aux.lagrangian, tol.lagrangian),
            ("oh_identity", aux.oh_identity, tol.oh_identity),
            ("sigma_closedness", aux.sigma_closedness, tol.sigma_closedness),
            ("einstein_cell", aux.einstein_cell, tol.einstein_cell),
            ("stokes", aux.stokes, tol.stokes),
        ];
        self.failures = checks
            .iter()
            .filter(|(_, value, bound)| !(value <= bound))
            .map(|(name, value, bound)| format!("{name} = {value:.3e} > {bound:.0e}"))
            .collect();
        self.status = if self.failures.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        };
    }
}

/// `μ(F) = −Σ winding(θ)` over the boundary components of `F`.
pub fn maslov_index(
    ambient: &AmbientManifold,
    lagrangian: &LagrangianImmersion,
    surface: &BoundedSurface,
) -> Result<i64> {
    let links = surface.boundary_links();
    if links.is_empty() {
        return Ok(0);
    }
    let samples = surface.resolution.max(16);
    let mut total = 0;
    for link in &links {
        let trace = relative_phase_trace(ambient, lagrangian, surface, link, samples)?;
        total += winding_number(&trace)?;
    }
    Ok(-total)
}

/// `σ_L(∂F)`, integrated over the loops in `L` bounding `F`.
pub fn boundary_sigma(
    ambient: &AmbientManifold,
    lagrangian: &LagrangianImmersion,
    surface: &BoundedSurface,
) -> Result<f64> {
    let mut total = 0.0;
    for link in surface.boundary_links() {
        total += lagrangian.integrate_sigma(ambient, &link.path, surface.resolution, surface.order)?;
    }
    Ok(total)
}

/// Worst relative (absolute where the target is zero) cell error of
/// `∮ iξ_F = −4πλ∫_cell F*ω`, and the discrete Stokes consistency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EinsteinCheck {
    pub cell: f64,
    pub stokes: f64,
}

pub fn einstein_surface_check(ambient: &AmbientManifold, surface: &BoundedSurface) -> Result<EinsteinCheck> {
    let omega = surface.symplectic_area(ambient)?;
    einstein_check_with_area(ambient, surface, omega)
}

fn einstein_check_with_area(ambient: &AmbientManifold, surface: &BoundedSurface, omega: f64) -> Result<EinsteinCheck> {
    let lambda = ambient.einstein_constant();
    let rule = GaussLegendre::new(surface.order);
    let n = surface.resolution;
    let errors: Result<Vec<f64>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let circulation = xi_f_cell_circulation(ambient, surface, &rule, i, j)?;
            let target = -4.0 * PI * lambda * surface.cell_area(ambient, &rule, i, j)?;
            let err = (circulation - target).abs();
            Ok(if target == 0.0 { err } else { err / target.abs() })
        })
        .collect();
    let cell = errors?.into_iter().fold(0.0, f64::max);
    let boundary = xi_f_boundary_integral(ambient, surface, surface.resolution, surface.order)?;
    let stokes = (-boundary / TAU - 2.0 * lambda * omega).abs();
    Ok(EinsteinCheck { cell, stokes })
}

/// Pointwise residuals on `L` at seeded random samples: Lagrangian
/// condition, Oh's identity and closedness of `σ_L`.
pub fn lagrangian_checks(ambient: &AmbientManifold, lagrangian: &LagrangianImmersion) -> Result<[f64; 3]> {
    let n = lagrangian.dim();
    let lagrangian_residual = lagrangian.lagrangian_residual(ambient, AUXILIARY_SAMPLES)?;
    let params = sample_parameters(n, AUXILIARY_SAMPLES, SAMPLE_SEED);
    let dirs = sample_directions(n, AUXILIARY_SAMPLES, SAMPLE_SEED + 1);
    let mut oh = 0.0f64;
    let mut closed = 0.0f64;
    for (u, w) in params.iter().zip(&dirs) {
        oh = oh.max(oh_identity_residual(ambient, lagrangian, u, w)?);
        closed = closed.max(
            lagrangian
                .sigma_closedness_residual(ambient, u, CLOSEDNESS_STEP)?
                .residual,
        );
    }
    Ok([lagrangian_residual, oh, closed])
}

/// Full report for one surface. The boundary is checked against `L` first.
pub fn identity_residual(
    scenario: &str,
    ambient: &AmbientManifold,
    lagrangian: &LagrangianImmersion,
    surface: &BoundedSurface,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let stopwatch = Stopwatch::start();
    surface.boundary_trace(ambient, lagrangian, 64)?;
    let [lagrangian_residual, oh_identity, sigma_closedness] = lagrangian_checks(ambient, lagrangian)?;
    let lambda = ambient.einstein_constant();
    let mu = maslov_index(ambient, lagrangian, surface)?;
    let omega_f = surface.symplectic_area(ambient)?;
    let sigma_over_pi = boundary_sigma(ambient, lagrangian, surface)? / PI;
    let einstein = einstein_check_with_area(ambient, surface, omega_f)?;
    let mut report = VerificationReport {
        scenario: scenario.to_string(),
        manifold: ambient.to_string(),
        lagrangian: lagrangian.label.clone(),
        surface: surface.label.clone(),
        lambda,
        mu,
        omega_f,
        sigma_over_pi,
        residual: identity_terms_residual(mu, lambda, omega_f, sigma_over_pi),
        auxiliary: AuxiliaryResiduals {
            lagrangian: lagrangian_residual,
            oh_identity,
            sigma_closedness,
            einstein_cell: einstein.cell,
            stokes: einstein.stokes,
        },
        resolution: surface.resolution,
        order: surface.order,
        status: Status::Pass,
        failures: Vec::new(),
        wall_time: Duration::ZERO,
    };
    report.judge(tol);
    report.wall_time = stopwatch.elapsed();
    Ok(report)
}

/// `δ_L(γ) = μ(F) − 2λω(F)` for each loop and its filling.
pub fn delta_class(
    ambient: &AmbientManifold,
    lagrangian: &LagrangianImmersion,
    loops: &[LoopInL],
    surfaces: &[BoundedSurface],
) -> Result<Vec<f64>> {
    if loops.len() != surfaces.len() {
        return Err(Error::Contract(format!(
            "{} loops but {} surfaces",
            loops.len(),
            surfaces.len()
        )));
    }
    loops
        .iter()
        .zip(surfaces)
        .map(|(gamma, f)| {
            let links = f.boundary_links();
            let bounds = match links.as_slice() {
                [] => false,
                [single] => single.path.same_loop(gamma),
                _ => false,
            };
            if !bounds {
                return Err(Error::Linkage(format!("{} is not bounded by the given loop", f.label)));
            }
            f.boundary_trace(ambient, lagrangian, 64)?;
            delta(ambient, lagrangian, f)
        })
        .collect()
}

fn delta(ambient: &AmbientManifold, lagrangian: &LagrangianImmersion, surface: &BoundedSurface) -> Result<f64> {
    let mu = maslov_index(ambient, lagrangian, surface)?;
    let omega = surface.symplectic_area(ambient)?;
    Ok(mu as f64 - 2.0 * ambient.einstein_constant() * omega)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// False when `L` is not minimal; `deltas` is then empty.
    pub applicable: bool,
    pub max_mean_curvature: f64,
    /// `μ − 2λω` per surface.
    pub deltas: Vec<f64>,
    pub passed: bool,
}

pub fn monotonicity_check(
    ambient: &AmbientManifold,
    lagrangian: &LagrangianImmersion,
    surfaces: &[BoundedSurface],
    tol: &Tolerances,
) -> Result<MonotonicityReport> {
    if !(ambient.einstein_constant() > 0.0) {
        return Err(Error::Precondition(format!("{ambient} is not positively curved")));
    }
    let mut max_h = 0.0f64;
    for u in sample_parameters(lagrangian.dim(), AUXILIARY_SAMPLES, SAMPLE_SEED) {
        max_h = max_h.max(lagrangian.mean_curvature_norm(ambient, &u)?);
    }
    if max_h > tol.minimality {
        return Ok(MonotonicityReport {
            applicable: false,
            max_mean_curvature: max_h,
            deltas: Vec::new(),
            passed: false,
        });
    }
    let deltas = surfaces
        .iter()
        .map(|f| {
            f.boundary_trace(ambient, lagrangian, 64)?;
            delta(ambient, lagrangian, f)
        })
        .collect::<Result<Vec<f64>>>()?;
    let passed = deltas.iter().all(|d| d.abs() <= tol.identity);
    Ok(MonotonicityReport {
        applicable: true,
        max_mean_curvature: max_h,
        deltas,
        passed,
    })
}

/// `|δ(F₁) − δ(F₂)|` for two fillings of `gamma`.
pub fn boundary_dependence_check(
    ambient: &AmbientManifold,
    lagrangian: &LagrangianImmersion,
    gamma: &LoopInL,
    first: &BoundedSurface,
    second: &BoundedSurface,
) -> Result<f64> {
    let deltas = delta_class(
        ambient,
        lagrangian,
        &[gamma.clone(), gamma.clone()],
        &[first.clone(), second.clone()],
    )?;
    Ok((deltas[0] - deltas[1]).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(m: &str, l: &str, f: &str) -> (AmbientManifold, LagrangianImmersion, BoundedSurface) {
        let m: AmbientManifold = m.parse().unwrap();
        let l = LagrangianImmersion::parse(l, &m).unwrap();
        let f = BoundedSurface::parse(f, &m, &l).unwrap();
        (m, l, f)
    }

    fn report(m: &str, l: &str, f: &str) -> VerificationReport {
        let (m, l, f) = setup(m, l, f);
        identity_residual("t", &m, &l, &f, &Tolerances::default()).unwrap()
    }

    #[test]
    fn flat_circle() {
        let r = report("Cn(n=1)", "circle(1)", "flat_disk(1)");
        assert_eq!(r.mu, 2);
        assert_eq!(r.lambda, 0.0);
        assert!((r.omega_f - PI).abs() < 1e-12);
        assert!((r.sigma_over_pi - 2.0).abs() < 1e-12);
        assert!(r.residual.abs() <= 1e-6);
        assert_eq!(r.status, Status::Pass, "{:?}", r.failures);
    }

    #[test]
    fn latitude_has_three_nonzero_terms() {
        let r = report("CPn(n=1)", "latitude(0.5)", "chart_disk(0.5)");
        assert_eq!(r.mu, 2);
        assert!((2.0 * r.lambda * r.omega_f - 0.8).abs() < 1e-10);
        assert!((r.sigma_over_pi - 1.2).abs() < 1e-10);
        assert!(r.residual.abs() <= 1e-5);
        assert_eq!(r.status, Status::Pass, "{:?}", r.failures);
    }

    #[test]
    fn hyperbolic_cap() {
        let r = report("HyperbolicDisk(K=-1)", "hyperbolic_circle(1)", "hyperbolic_disk_cap(1)");
        let cosh = 1f64.cosh();
        assert_eq!(r.mu, 2);
        assert!((-2.0 * r.lambda * r.omega_f - 2.0 * (cosh - 1.0)).abs() < 1e-9);
        assert!((r.sigma_over_pi - 2.0 * cosh).abs() < 1e-9);
        assert_eq!(r.status, Status::Pass, "{:?}", r.failures);
    }

    #[test]
    fn torus_annulus_has_no_maslov_index() {
        let (m, l, f) = setup(
            "FlatTorus(n=1, lattice=[1, 1.5i])",
            "flat_torus_geodesic(1)",
            "torus_annulus(1.5i)",
        );
        assert_eq!(maslov_index(&m, &l, &f).unwrap(), 0);
        let r = identity_residual("t", &m, &l, &f, &Tolerances::default()).unwrap();
        assert_eq!(r.status, Status::Pass, "{:?}", r.failures);
    }

    #[test]
    fn residual_recomputes_exactly_after_json_round_trip() {
        let r = report("CPn(n=1)", "latitude(0.3)", "chart_disk(0.3)");
        let back: VerificationReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back.recomputed_residual().to_bits(), r.residual.to_bits());
        assert_eq!(back.residual.to_bits(), r.residual.to_bits());
        assert!(!serde_json::to_string(&r).unwrap().contains("wall_time"));
    }

    #[test]
    fn reversal_negates_every_term() {
        let a = report("CPn(n=1)", "latitude(0.5)", "chart_disk(0.5)");
        let b = report("CPn(n=1)", "latitude(0.5)", "reversed(chart_disk(0.5))");
        assert_eq!(b.mu, -a.mu);
        assert_eq!(b.omega_f, -a.omega_f);
        assert!((b.sigma_over_pi + a.sigma_over_pi).abs() < 1e-12);
        assert_eq!(b.status, Status::Pass);
    }

    #[test]
    fn product_torus_delta_class() {
        let (m, l, _) = setup("Cn(n=2)", "product_torus(0.7, 1.9)", "coordinate_disk(1)");
        let loops = vec![l.axis_loop(0), l.axis_loop(1)];
        let surfaces = vec![
            BoundedSurface::parse("coordinate_disk(1)", &m, &l).unwrap(),
            BoundedSurface::parse("coordinate_disk(2)", &m, &l).unwrap(),
        ];
        let deltas = delta_class(&m, &l, &loops, &surfaces).unwrap();
        assert_eq!(deltas, vec![2.0, 2.0]);
        let swapped = delta_class(&m, &l, &[loops[1].clone()], &surfaces[..1]);
        assert!(matches!(swapped, Err(Error::Linkage(_))));
    }

    #[test]
    fn minimal_lagrangian_has_zero_delta() {
        let (m, l, f) = setup("CPn(n=1)", "clifford(1)", "chart_disk(1)");
        let gamma = f.boundary_links()[0].path.clone();
        let d = delta_class(&m, &l, &[gamma], &[f]).unwrap();
        assert!(d[0].abs() < 1e-10);
    }

    #[test]
    fn constant_surface_has_no_boundary() {
        let (m, l, _) = setup("Cn(n=1)", "circle(1)", "flat_disk(1)");
        let f = BoundedSurface::constant(crate::ambient::ChartPoint::from_slice(
            0,
            &[num_complex::Complex64::new(1.0, 0.0)],
        ));
        assert_eq!(maslov_index(&m, &l, &f).unwrap(), 0);
        assert_eq!(f.symplectic_area(&m).unwrap(), 0.0);
        assert_eq!(boundary_sigma(&m, &l, &f).unwrap(), 0.0);
    }

    #[test]
    fn monotonicity() {
        let tol = Tolerances::default();
        let (m, l, near) = setup("CPn(n=1)", "clifford(1)", "chart_disk(1)");
        let far = BoundedSurface::parse("cap(1)", &m, &l).unwrap();
        let r = monotonicity_check(&m, &l, &[near, far], &tol).unwrap();
        assert!(r.applicable && r.passed, "{r:?}");

        let (m, l, f) = setup("CPn(n=1)", "latitude(0.5)", "chart_disk(0.5)");
        let r = monotonicity_check(&m, &l, &[f], &tol).unwrap();
        assert!(!r.applicable);

        let (m, l, f) = setup("Cn(n=1)", "circle(1)", "flat_disk(1)");
        assert!(matches!(
            monotonicity_check(&m, &l, &[f], &tol),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn boundary_dependence() {
        let (m, l, near) = setup("CPn(n=1)", "clifford(1)", "chart_disk(1)");
        let far = BoundedSurface::parse("reversed(cap(1))", &m, &l).unwrap();
        let gamma = near.boundary_links()[0].path.clone();
        assert!(boundary_dependence_check(&m, &l, &gamma, &near, &far).unwrap() < 1e-5);
        assert_eq!(boundary_dependence_check(&m, &l, &gamma, &near, &near).unwrap(), 0.0);
        let other = BoundedSurface::parse("cap(1)", &m, &l).unwrap();
        assert!(matches!(
            boundary_dependence_check(&m, &l, &gamma, &near, &other),
            Err(Error::Linkage(_))
        ));

        let (m, l, round) = setup("Cn(n=1)", "circle(1)", "flat_disk(1)");
        let wavy = BoundedSurface::parse("wavy_disk(1, 0.2, 3)", &m, &l).unwrap();
        let gamma = round.boundary_links()[0].path.clone();
        assert!(boundary_dependence_check(&m, &l, &gamma, &round, &wavy).unwrap() < 1e-6);
    }

    #[test]
    fn einstein_checks() {
        for (m, l, f) in [
            ("Cn(n=1)", "circle(1)", "flat_disk(1)"),
            ("CPn(n=1)", "latitude(0.5)", "chart_disk(0.5)"),
            ("HyperbolicDisk(K=-1)", "hyperbolic_circle(1)", "hyperbolic_disk_cap(1)"),
        ] {
            let (m, _, f) = setup(m, l, f);
            let check = einstein_surface_check(&m, &f.with_grid(16, 8).unwrap()).unwrap();
            assert!(check.cell <= 1e-4 && check.stokes <= 1e-6, "{check:?}");
        }
    }

    #[test]
    fn non_lagrangian_fixture_fails_on_lagrangian_residual() {
        let r = report("Cn(n=2)", "perturbed_torus(0.05)", "coordinate_disk(1)");
        assert_eq!(r.status, Status::Fail);
        assert!(r.auxiliary.lagrangian > 1e-3);
        assert!(r.failures.iter().any(|f| f.starts_with("lagrangian_residual")));
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerances::default().validate().is_ok());
        let bad = Tolerances {
            stokes: 0.0,
            ..Tolerances::default()
        };
        assert!(bad.validate().is_err());
    }
}
