//! Unit sections of `K²(M)` along `L` and along a surface, their phases
//! relative to the chart section `(dz¹∧…∧dzⁿ)⊗²`, phase traces, winding
//! numbers and connection 1-forms.
//!
//! For a frame matrix `A` (columns are chart components of tangent vectors)
//! the unit `(n,0)`-form that is real on the span of `A` is a positive
//! multiple of `e^{-i arg det A} dz`, so `κ²` has phase `e^{-2i arg det A}`.
//! For a unit section `κ² = ρ e^{iα} (dz)⊗²` the Levi-Civita connection gives
//!
//! ```text
//! ξ(v) = i·(dα(v) - 2·Im(∂ log det g · v))
//! ```
//!
//! since `∇(dz) = -∂ log det g ⊗ dz` on a Kähler chart and `ρ ∝ det g`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;

use crate::ambient::{AmbientManifold, CMat, CVec, ChartPoint};
use crate::error::{Error, Result};
use crate::lagrangian::LagrangianImmersion;
use crate::quadrature::GaussLegendre;
use crate::surface::{BoundaryLink, BoundedSurface};

/// Largest phase step accepted between neighbouring samples.
pub const UNWRAP_MARGIN: f64 = PI / 2.0;
pub const MAX_REFINEMENT_DEPTH: u32 = 20;
/// Allowed distance of a net phase change from a multiple of `2π`, in turns.
pub const WINDING_TOLERANCE: f64 = 1e-3;

/// Phase of `κ²` for the span of `frame`, relative to `(dz)⊗²`.
pub fn kappa_sq_phase(frame: &CMat) -> Result<Complex64> {
    let det = frame.determinant();
    let scale: f64 = frame.column_iter().map(|c| c.norm()).product();
    if !(det.norm() > 1e-14 * scale) {
        return Err(Error::Immersion("frame determinant vanishes".into()));
    }
    let unit = det / det.norm();
    Ok((unit.conj()) * (unit.conj()))
}

/// Phase of `κ²_L` at parameter `u`, relative to the reference section of `chart`.
pub fn kappa_sq_phase_l(
    ambient: &AmbientManifold,
    lagrangian: &LagrangianImmersion,
    u: &[f64],
    chart: usize,
) -> Result<Complex64> {
    let jet = lagrangian.jet(u)?;
    let (_, jac) = ambient.chart_transition(&jet.point, chart)?;
    kappa_sq_phase(&(jac * jet.frame))
}

/// Frame obtained by Hermitian Gram–Schmidt of the coordinate frame.
#[derive(Debug, Clone)]
pub struct UnitaryFrame {
    pub point: ChartPoint,
    /// Columns are the frame vectors.
    pub vectors: CMat,
    /// Phase of `κ²_F`, relative to `(dz)⊗²` of the point's chart.
    pub kappa_sq_phase: Complex64,
}

pub fn unitary_frame(ambient: &AmbientManifold, p: &ChartPoint) -> Result<UnitaryFrame> {
    let metric = ambient.metric_at(p)?;
    let n = ambient.dim();
    let mut vectors = CMat::zeros(n, n);
    for k in 0..n {
        let mut v = CVec::zeros(n);
        v[k] = Complex64::new(1.0, 0.0);
        for j in 0..k {
            let e = vectors.column(j).into_owned();
            let c = metric.hermitian(&v, &e);
            v -= e * c;
        }
        let norm = metric.norm(&v);
        if !(norm > 0.0) {
            return Err(Error::Numerical("degenerate metric in Gram-Schmidt".into()));
        }
        vectors.set_column(k, &(v / Complex64::new(norm, 0.0)));
    }
    let kappa_sq_phase = kappa_sq_phase(&vectors)?;
    Ok(UnitaryFrame {
        point: p.clone(),
        vectors,
        kappa_sq_phase,
    })
}

/// Unitary frame along `F` at `(s, φ)`. Every surface lies in a single chart
/// and the frame is a field on that chart, so it is continuous over `Σ`.
pub fn unitary_frame_over_surface(
    ambient: &AmbientManifold,
    surface: &BoundedSurface,
    s: f64,
    phi: f64,
) -> Result<UnitaryFrame> {
    let jet = surface.jet(s, phi)?;
    unitary_frame(ambient, &jet.point).map_err(|e| match e {
        Error::Domain { .. } => Error::Coverage(format!("{}: (s, φ) = ({s:.6}, {phi:.6}) ({e})", surface.label)),
        other => other,
    })
}

/// Frame `(v₁, …, e^{iπt}v_axis, …, vₙ)` of the generator loop of the
/// Lagrangian Grassmannian, starting from `ℝⁿ`. `axis` is 1-based.
pub fn generator_loop_frame(n: usize, axis: usize, t: f64) -> CMat {
    let mut frame = CMat::identity(n, n);
    frame[(axis - 1, axis - 1)] = Complex64::from_polar(1.0, PI * t);
    frame
}

/// Winding of `κ²` along the generator loop traversed `traversals` times.
pub fn generator_loop_winding(n: usize, axis: usize, traversals: u32) -> Result<i64> {
    if axis == 0 || axis > n {
        return Err(Error::Precondition(format!("axis {axis} not in 1..={n}")));
    }
    let end = traversals as f64;
    let trace = unwrap_phase(0.0, end, 8 * traversals.max(1) as usize, |t| {
        Ok((kappa_sq_phase(&generator_loop_frame(n, axis, t))?, 0))
    })?;
    winding_number(&trace)
}

/// Unwrapped angle of a unit-complex function sampled along a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub params: Vec<f64>,
    pub phase: Vec<f64>,
    pub charts: Vec<usize>,
}

impl PhaseTrace {
    pub fn net_change(&self) -> f64 {
        match (self.phase.first(), self.phase.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Largest step between neighbouring samples.
    pub fn max_step(&self) -> f64 {
        self.phase.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }

    /// Concatenation, shifting `other` to continue from the end of `self`.
    pub fn append(&mut self, other: &PhaseTrace) {
        let shift = self.phase.last().copied().unwrap_or(0.0) - other.phase.first().copied().unwrap_or(0.0);
        let offset = self.params.last().copied().unwrap_or(0.0) - other.params.first().copied().unwrap_or(0.0);
        let skip = usize::from(!self.params.is_empty());
        self.params.extend(other.params.iter().skip(skip).map(|t| t + offset));
        self.phase.extend(other.phase.iter().skip(skip).map(|p| p + shift));
        self.charts.extend(other.charts.iter().skip(skip));
    }

    /// CSV with header `t,phi,chart_id`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "phi", "chart_id"])?;
        for ((t, p), c) in self.params.iter().zip(&self.phase).zip(&self.charts) {
            w.write_record([t.to_string(), p.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples `f` on `[t0, t1]` at `base_samples` equal steps and unwraps its
/// angle, bisecting any step whose wrapped jump reaches [`UNWRAP_MARGIN`].
pub fn unwrap_phase<F>(t0: f64, t1: f64, base_samples: usize, mut f: F) -> Result<PhaseTrace>
where
    F: FnMut(f64) -> Result<(Complex64, usize)>,
{
    let n = base_samples.max(2);
    let (z0, c0) = f(t0)?;
    let mut trace = PhaseTrace {
        params: vec![t0],
        phase: vec![z0.arg()],
        charts: vec![c0],
    };
    let mut prev = (t0, z0);
    for k in 1..=n {
        let t = if k == n {
            t1
        } else {
            t0 + (t1 - t0) * k as f64 / n as f64
        };
        let (z, chart) = f(t)?;
        refine_step(&mut f, prev, (t, z, chart), 0, &mut trace)?;
        prev = (t, z);
    }
    Ok(trace)
}

fn refine_step<F>(
    f: &mut F,
    (ta, za): (f64, Complex64),
    (tb, zb, chart): (f64, Complex64, usize),
    depth: u32,
    trace: &mut PhaseTrace,
) -> Result<()>
where
    F: FnMut(f64) -> Result<(Complex64, usize)>,
{
    let step = (zb * za.conj()).arg();
    if step.abs() < UNWRAP_MARGIN {
        let last = *trace.phase.last().expect("trace starts non-empty");
        trace.params.push(tb);
        trace.phase.push(last + step);
        trace.charts.push(chart);
        return Ok(());
    }
    if depth >= MAX_REFINEMENT_DEPTH {
        return Err(Error::Resolution {
            depth,
            at: 0.5 * (ta + tb),
        });
    }
    let tm = 0.5 * (ta + tb);
    let (zm, cm) = f(tm)?;
    refine_step(f, (ta, za), (tm, zm, cm), depth + 1, trace)?;
    refine_step(f, (tm, zm), (tb, zb, chart), depth + 1, trace)
}

/// `θ = arg(κ²_L / κ²_F)` along one boundary component of `F`, evaluated in
/// the chart of `F`.
pub fn relative_phase_trace(
    ambient: &AmbientManifold,
    lagrangian: &LagrangianImmersion,
    surface: &BoundedSurface,
    link: &BoundaryLink,
    base_samples: usize,
) -> Result<PhaseTrace> {
    let chart = surface.chart();
    unwrap_phase(0.0, TAU, base_samples, |tau| {
        let (s, phi) = link.surface_param(tau);
        let frame_f = unitary_frame_over_surface(ambient, surface, s, phi)?;
        let phase_l = kappa_sq_phase_l(ambient, lagrangian, &link.path.point(tau), chart)?;
        Ok((phase_l * frame_f.kappa_sq_phase.conj(), chart))
    })
}

/// `round(net change / 2π)`.
pub fn winding_number(trace: &PhaseTrace) -> Result<i64> {
    let turns = trace.net_change() / TAU;
    let rounded = turns.round();
    let residual = (turns - rounded).abs();
    if !(residual < WINDING_TOLERANCE) {
        return Err(Error::InconsistentTrace {
            net: trace.net_change(),
            residual,
        });
    }
    Ok(rounded as i64)
}

/// Which unit section of `K²(M)` a connection form refers to.
#[derive(Debug, Clone, Copy)]
pub enum Section<'a> {
    /// `κ²_L`; sample parameters are points of the Lagrangian's domain.
    Lagrangian(&'a LagrangianImmersion),
    /// `κ²_F`; sample parameters are `(s, φ)`.
    Surface(&'a BoundedSurface),
}

/// A parameter point with a direction in the parameter domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    pub param: Vec<f64>,
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionSample {
    pub base: ChartPoint,
    /// `ξ(velocity)`, purely imaginary.
    pub value: Complex64,
}

/// Imaginary part of the `K²(M)` chart connection on `v`: `-2·Im(∂ log det g · v)`.
fn chart_term(ambient: &AmbientManifold, p: &ChartPoint, v: &CVec) -> Result<f64> {
    let grad = ambient.metric_at(p)?.log_det_gradient()?;
    let pairing: Complex64 = grad.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
    Ok(-2.0 * pairing.im)
}

/// `ξ_L(Σ wᵃ ∂ₐf)` at parameter `u`, using `d(arg det A)(w) = Im tr(A⁻¹ ∂_w A)`.
pub fn xi_l(ambient: &AmbientManifold, lagrangian: &LagrangianImmersion, u: &[f64], w: &[f64]) -> Result<Complex64> {
    let jet = lagrangian.jet(u)?;
    let inverse = jet
        .frame
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Immersion(format!("{}: singular frame at {u:?}", lagrangian.label)))?;
    let d_arg = (inverse * jet.frame_derivative(w)).trace().im;
    let d_alpha = -2.0 * d_arg;
    let v = jet.push_forward(w);
    Ok(Complex64::new(0.0, d_alpha + chart_term(ambient, &jet.point, &v)?))
}

/// `ξ_F` at `(s, φ)` on the parameter direction `(ds, dφ)`. The Gram–Schmidt
/// frame has real positive determinant in its chart, so only the chart term
/// contributes.
pub fn xi_f(
    ambient: &AmbientManifold,
    surface: &BoundedSurface,
    s: f64,
    phi: f64,
    direction: [f64; 2],
) -> Result<Complex64> {
    let jet = surface.jet(s, phi)?;
    let v = &jet.d_s * Complex64::new(direction[0], 0.0) + &jet.d_phi * Complex64::new(direction[1], 0.0);
    Ok(Complex64::new(0.0, chart_term(ambient, &jet.point, &v)?))
}

pub fn connection_form_xi(
    ambient: &AmbientManifold,
    section: Section<'_>,
    samples: &[CurveSample],
) -> Result<Vec<ConnectionSample>> {
    samples
        .iter()
        .map(|sample| match section {
            Section::Lagrangian(l) => Ok(ConnectionSample {
                base: l.jet(&sample.param)?.point,
                value: xi_l(ambient, l, &sample.param, &sample.velocity)?,
            }),
            Section::Surface(f) => {
                let [s, phi] = two(&sample.param)?;
                let direction = two(&sample.velocity)?;
                Ok(ConnectionSample {
                    base: f.jet(s, phi)?.point,
                    value: xi_f(ambient, f, s, phi, direction)?,
                })
            }
        })
        .collect()
}

fn two(v: &[f64]) -> Result<[f64; 2]> {
    v.try_into()
        .map_err(|_| Error::Contract(format!("surface samples need two parameters, got {}", v.len())))
}

/// `|σ_L(w) - iξ_L(w)/2|`.
pub fn oh_identity_residual(
    ambient: &AmbientManifold,
    lagrangian: &LagrangianImmersion,
    u: &[f64],
    w: &[f64],
) -> Result<f64> {
    let sigma = lagrangian.sigma_at(ambient, u, w)?;
    let half = Complex64::new(0.0, 1.0) * xi_l(ambient, lagrangian, u, w)? / 2.0;
    Ok((Complex64::new(sigma, 0.0) - half).norm())
}

/// `∮ iξ_F` around the boundary of grid cell `(i, j)`, positively oriented
/// for `ds∧dφ`.
pub fn xi_f_cell_circulation(
    ambient: &AmbientManifold,
    surface: &BoundedSurface,
    rule: &GaussLegendre,
    i: usize,
    j: usize,
) -> Result<f64> {
    let ([s0, s1], [p0, p1]) = surface.cell_bounds(i, j);
    let ixi = |s: f64, phi: f64, d: [f64; 2]| -> Result<f64> {
        xi_f(ambient, surface, s, phi, d)
            .map(|x| -x.im)
            .map_err(|e| surface.coverage_error(i, j, e))
    };
    let edge = |pts: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64| -> Result<f64> {
        let mut total = 0.0;
        for (x, w) in rule.mapped(a, b) {
            total += w * pts(x)?;
        }
        Ok(total)
    };
    // Integrating each edge forwards and subtracting the reversed ones.
    let bottom = edge(&mut |s| ixi(s, p0, [1.0, 0.0]), s0, s1)?;
    let right = edge(&mut |p| ixi(s1, p, [0.0, 1.0]), p0, p1)?;
    let top = edge(&mut |s| ixi(s, p1, [1.0, 0.0]), s0, s1)?;
    let left = edge(&mut |p| ixi(s0, p, [0.0, 1.0]), p0, p1)?;
    Ok(bottom + right - top - left)
}

/// `∮_{∂F} iξ_F` over every boundary component.
pub fn xi_f_boundary_integral(
    ambient: &AmbientManifold,
    surface: &BoundedSurface,
    panels: usize,
    order: usize,
) -> Result<f64> {
    let rule = GaussLegendre::new(order);
    let mut total = 0.0;
    for link in surface.boundary_links() {
        let mut failure = None;
        total += rule.integrate(0.0, TAU, panels.max(1), |tau| {
            let (s, phi) = link.surface_param(tau);
            match xi_f(ambient, surface, s, phi, [0.0, link.phi_sign]) {
                Ok(x) => -x.im,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(total)
}
