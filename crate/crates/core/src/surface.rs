//! Surfaces with boundary on a Lagrangian: parametrised disks and annuli,
//! symplectic area by tensor Gauss–Legendre quadrature, and boundary matching.
//!
//! The parameter domain is `(s, φ) ∈ [0, 1] × [0, 2π]` oriented by `ds∧dφ`.
//! For a disk `s` is the radial parameter and `s = 1` the boundary, traversed
//! with increasing `φ`; an annulus has a second boundary at `s = 0`, traversed
//! with decreasing `φ`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ambient::{AmbientManifold, CVec, ChartPoint};
use crate::constructor::{Constructor, Value};
use crate::error::{Error, Result};
use crate::lagrangian::{LagrangianImmersion, LagrangianKind, LoopInL};
use crate::quadrature::{pairwise_sum, GaussLegendre};

pub const DEFAULT_RESOLUTION: usize = 64;
pub const DEFAULT_ORDER: usize = 8;
pub const MAX_RESOLUTION: usize = 1 << 14;
/// Boundary points of `F` and `L` must agree to this in chart coordinates.
pub const BOUNDARY_MATCH_TOLERANCE: f64 = 1e-10;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceKind {
    /// `center + s·radius·e^{iφ}` in `chart` of a complex curve, with boundary
    /// matched to the loop `t = loop_sign·φ`.
    PolarDisk {
        chart: usize,
        center: Complex64,
        radius: f64,
        loop_sign: i32,
    },
    /// `c + s·(f(γ(φ)) - c)` in chart 0: the cone from `c` over a loop `γ` in `L`.
    Cone {
        center: CVec,
        lagrangian: Box<LagrangianImmersion>,
        path: LoopInL,
    },
    /// `s·r·e^{iφ}(1 + a·s(1 - s)·cos kφ)`, a disk with the boundary of the round one.
    WavyDisk { radius: f64, amp: f64, k: f64 },
    /// Constant map, no boundary.
    Constant { point: ChartPoint },
    /// `φ·d/2π + s·e` in a flat torus, both boundary circles on the geodesic
    /// `t ↦ t·d/2π`.
    TorusAnnulus { direction: Complex64, across: Complex64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundedSurface {
    pub label: String,
    pub kind: SurfaceKind,
    pub reversed: bool,
    /// Cells per axis.
    pub resolution: usize,
    /// Gauss–Legendre points per cell and axis.
    pub order: usize,
}

/// `F(s, φ)` with `∂F/∂s` and `∂F/∂φ` in chart components.
#[derive(Debug, Clone)]
pub struct SurfaceJet {
    pub point: ChartPoint,
    pub d_s: CVec,
    pub d_phi: CVec,
}

/// Boundary component `τ ↦ F(s, phi_sign·τ)`, identified with `L(path(τ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLink {
    pub s: f64,
    pub phi_sign: f64,
    pub path: LoopInL,
}

impl BoundaryLink {
    pub fn surface_param(&self, tau: f64) -> (f64, f64) {
        (self.s, self.phi_sign * tau)
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryMatch {
    pub tau: f64,
    pub surface_param: (f64, f64),
    pub surface_point: ChartPoint,
    pub loop_param: Vec<f64>,
    /// `L(loop_param)` expressed in the surface chart.
    pub lagrangian_point: ChartPoint,
    pub distance: f64,
}

impl BoundedSurface {
    pub const CONSTRUCTORS: &'static [&'static str] = &[
        "flat_disk(r)",
        "chart_disk(rho)",
        "cap(rho)",
        "hyperbolic_disk_cap(s)",
        "wavy_disk(r, amp, k)",
        "coordinate_disk(axis)",
        "winding_disk(k1, ..., kn)",
        "torus_annulus(across)",
        "reversed(surface)",
    ];

    pub fn new(label: impl Into<String>, kind: SurfaceKind) -> Self {
        Self {
            label: label.into(),
            kind,
            reversed: false,
            resolution: DEFAULT_RESOLUTION,
            order: DEFAULT_ORDER,
        }
    }

    pub fn flat_disk(radius: f64) -> Self {
        Self::new(
            format!("flat_disk({radius})"),
            SurfaceKind::PolarDisk {
                chart: 0,
                center: Complex64::new(0.0, 0.0),
                radius,
                loop_sign: 1,
            },
        )
    }

    pub fn constant(point: ChartPoint) -> Self {
        Self::new("constant", SurfaceKind::Constant { point })
    }

    /// Cone over `path` from the point where each coordinate moved by the
    /// loop is set to zero.
    pub fn cone_over(lagrangian: &LagrangianImmersion, path: LoopInL, label: impl Into<String>) -> Result<Self> {
        let start = lagrangian.jet(&path.point(0.0))?;
        let mut center = start.point.coords.clone();
        for (a, &k) in path.winding.iter().enumerate() {
            if k != 0 {
                center[a] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Self::new(
            label,
            SurfaceKind::Cone {
                center,
                lagrangian: Box::new(lagrangian.clone()),
                path,
            },
        ))
    }

    pub fn parse(spec: &str, ambient: &AmbientManifold, lagrangian: &LagrangianImmersion) -> Result<Self> {
        Self::from_constructor(&Constructor::parse(spec)?, ambient, lagrangian)
    }

    fn from_constructor(c: &Constructor, ambient: &AmbientManifold, lagrangian: &LagrangianImmersion) -> Result<Self> {
        let label = c.to_string();
        let need = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Constructor(format!("{label} requires {what}")))
            }
        };
        let positive = |x: f64| -> Result<f64> {
            if x > 0.0 && x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Constructor(format!("{label}: size must be positive")))
            }
        };
        let zero = Complex64::new(0.0, 0.0);
        let polar = |chart, radius, loop_sign| SurfaceKind::PolarDisk {
            chart,
            center: zero,
            radius,
            loop_sign,
        };
        let kind = match c.name.as_str() {
            "reversed" => {
                let Some(Value::Call(inner)) = c.get(0, "surface") else {
                    return Err(Error::Constructor(format!("{label}: expected reversed(<surface>)")));
                };
                let mut surface = Self::from_constructor(inner, ambient, lagrangian)?;
                surface = surface.reverse();
                surface.label = label;
                return Ok(surface);
            }
            "flat_disk" => {
                need(matches!(ambient, AmbientManifold::Flat { n: 1 }), "Cn(n=1)")?;
                polar(0, positive(c.real(0, "r")?)?, 1)
            }
            "chart_disk" => {
                need(matches!(ambient, AmbientManifold::Projective { n: 1 }), "CPn(n=1)")?;
                polar(0, positive(c.real(0, "rho")?)?, 1)
            }
            "cap" => {
                need(matches!(ambient, AmbientManifold::Projective { n: 1 }), "CPn(n=1)")?;
                // |z| ≥ ρ is the disk |w| ≤ 1/ρ in the chart w = 1/z; its
                // boundary w = e^{iφ}/ρ is z = ρe^{-iφ}.
                polar(1, 1.0 / positive(c.real(0, "rho")?)?, -1)
            }
            "hyperbolic_disk_cap" => {
                let AmbientManifold::HyperbolicDisk { curvature } = ambient else {
                    return need(false, "HyperbolicDisk").map(|_| unreachable!());
                };
                let s = positive(c.real(0, "s")?)?;
                polar(0, (curvature.abs().sqrt() * s / 2.0).tanh(), 1)
            }
            "wavy_disk" => {
                need(
                    ambient.dim() == 1 && ambient.chart_count() == 1,
                    "a single-chart complex curve",
                )?;
                SurfaceKind::WavyDisk {
                    radius: positive(c.real(0, "r")?)?,
                    amp: c.real(1, "amp")?,
                    k: c.real(2, "k")?,
                }
            }
            "coordinate_disk" | "winding_disk" => {
                need(
                    matches!(
                        lagrangian.kind,
                        LagrangianKind::ProductTorus(_) | LagrangianKind::PerturbedTorus { .. }
                    ),
                    "a torus-type Lagrangian",
                )?;
                let n = lagrangian.dim();
                let winding: Vec<i32> = if c.name == "coordinate_disk" {
                    let axis = c.count(0, "axis")?;
                    need((1..=n).contains(&axis), &format!("an axis in 1..={n}"))?;
                    (0..n).map(|a| i32::from(a + 1 == axis)).collect()
                } else {
                    let ks = c.positional_reals()?;
                    need(
                        ks.len() == n && ks.iter().all(|k| k.fract() == 0.0),
                        &format!("{n} integer windings"),
                    )?;
                    ks.iter().map(|&k| k as i32).collect()
                };
                let path = LoopInL::new(vec![0.0; n], winding)?;
                return Self::cone_over(lagrangian, path, label);
            }
            "torus_annulus" => {
                let AmbientManifold::FlatTorus { n: 1, periods } = ambient else {
                    return need(false, "FlatTorus with n=1").map(|_| unreachable!());
                };
                let LagrangianKind::Line { direction } = lagrangian.kind else {
                    return need(false, "a flat_torus_geodesic Lagrangian").map(|_| unreachable!());
                };
                let across = c.complex(0, "across")?;
                if crate::ambient::reduce_mod_lattice(across, periods).norm() > 1e-12 {
                    return Err(Error::Constructor(format!(
                        "{label}: `across` must be a lattice vector"
                    )));
                }
                SurfaceKind::TorusAnnulus { direction, across }
            }
            other => {
                return Err(Error::Constructor(format!(
                    "unknown surface `{other}`; expected one of {}",
                    Self::CONSTRUCTORS.join(", ")
                )))
            }
        };
        Ok(Self::new(label, kind))
    }

    /// Same map with the orientation of `Σ` reversed (`φ ↦ -φ`).
    pub fn reverse(&self) -> Self {
        Self {
            label: format!("reversed({})", self.label),
            reversed: !self.reversed,
            ..self.clone()
        }
    }

    pub fn with_grid(mut self, resolution: usize, order: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::Precondition("grid resolution must be positive".into()));
        }
        if resolution > MAX_RESOLUTION {
            return Err(Error::Resource(format!(
                "resolution {resolution} exceeds {MAX_RESOLUTION}"
            )));
        }
        if order < 2 {
            return Err(Error::Precondition(format!("quadrature order {order} is below 2")));
        }
        self.resolution = resolution;
        self.order = order;
        Ok(self)
    }

    /// Doubles the grid in both directions.
    pub fn refine(&self) -> Result<Self> {
        let resolution = self.resolution * 2;
        if resolution > MAX_RESOLUTION {
            return Err(Error::Resource(format!(
                "refining {} to {resolution} cells per axis exceeds {MAX_RESOLUTION}",
                self.label
            )));
        }
        Ok(Self {
            resolution,
            ..self.clone()
        })
    }

    pub fn chart(&self) -> usize {
        match &self.kind {
            SurfaceKind::PolarDisk { chart, .. } => *chart,
            SurfaceKind::Constant { point } => point.chart,
            _ => 0,
        }
    }

    pub fn is_annulus(&self) -> bool {
        matches!(self.kind, SurfaceKind::TorusAnnulus { .. })
    }

    pub fn jet(&self, s: f64, phi: f64) -> Result<SurfaceJet> {
        let sign = if self.reversed { -1.0 } else { 1.0 };
        let mut jet = self.jet_unoriented(s, sign * phi)?;
        if self.reversed {
            jet.d_phi = -jet.d_phi;
        }
        Ok(jet)
    }

    fn jet_unoriented(&self, s: f64, phi: f64) -> Result<SurfaceJet> {
        let one = |z: Complex64| CVec::from_element(1, z);
        let chart = self.chart();
        Ok(match &self.kind {
            SurfaceKind::PolarDisk { center, radius, .. } => {
                let e = Complex64::from_polar(*radius, phi);
                SurfaceJet {
                    point: ChartPoint::new(chart, one(center + e * s)),
                    d_s: one(e),
                    d_phi: one(I * e * s),
                }
            }
            SurfaceKind::Cone {
                center,
                lagrangian,
                path,
            } => {
                let u = path.point(phi);
                let jet = lagrangian.jet(&u)?;
                let velocity = jet.push_forward(&path.velocity(phi));
                let rel = &jet.point.coords - center;
                SurfaceJet {
                    point: ChartPoint::new(chart, center + &rel * Complex64::new(s, 0.0)),
                    d_s: rel,
                    d_phi: velocity * Complex64::new(s, 0.0),
                }
            }
            SurfaceKind::WavyDisk { radius, amp, k } => {
                let e = Complex64::from_polar(*radius, phi);
                let (c, sn) = ((k * phi).cos(), (k * phi).sin());
                let b = 1.0 + amp * s * (1.0 - s) * c;
                SurfaceJet {
                    point: ChartPoint::new(chart, one(e * s * b)),
                    d_s: one(e * (b + s * amp * (1.0 - 2.0 * s) * c)),
                    d_phi: one(e * s * (I * b - amp * s * (1.0 - s) * k * sn)),
                }
            }
            SurfaceKind::Constant { point } => {
                let n = point.coords.len();
                SurfaceJet {
                    point: point.clone(),
                    d_s: CVec::zeros(n),
                    d_phi: CVec::zeros(n),
                }
            }
            SurfaceKind::TorusAnnulus { direction, across } => SurfaceJet {
                point: ChartPoint::new(chart, one(direction * (phi / TAU) + across * s)),
                d_s: one(*across),
                d_phi: one(direction / TAU),
            },
        })
    }

    pub fn boundary_links(&self) -> Vec<BoundaryLink> {
        let mut links = match &self.kind {
            SurfaceKind::PolarDisk { loop_sign, .. } => {
                let path = LoopInL::new(vec![0.0], vec![*loop_sign]).expect("nonzero winding");
                vec![BoundaryLink {
                    s: 1.0,
                    phi_sign: 1.0,
                    path,
                }]
            }
            SurfaceKind::Cone { path, .. } => vec![BoundaryLink {
                s: 1.0,
                phi_sign: 1.0,
                path: path.clone(),
            }],
            SurfaceKind::WavyDisk { .. } => {
                vec![BoundaryLink {
                    s: 1.0,
                    phi_sign: 1.0,
                    path: LoopInL::axis(1, 0),
                }]
            }
            SurfaceKind::Constant { .. } => Vec::new(),
            SurfaceKind::TorusAnnulus { .. } => vec![
                BoundaryLink {
                    s: 1.0,
                    phi_sign: 1.0,
                    path: LoopInL::axis(1, 0),
                },
                BoundaryLink {
                    s: 0.0,
                    phi_sign: -1.0,
                    path: LoopInL::axis(1, 0).reversed(),
                },
            ],
        };
        if self.reversed {
            for link in &mut links {
                link.path = link.path.reversed();
            }
        }
        links
    }

    fn cells(&self) -> impl IndexedParallelIterator<Item = (usize, usize)> + '_ {
        let n = self.resolution;
        (0..n * n).into_par_iter().map(move |k| (k / n, k % n))
    }

    /// Parameter rectangle of cell `(i, j)`.
    pub fn cell_bounds(&self, i: usize, j: usize) -> ([f64; 2], [f64; 2]) {
        let n = self.resolution as f64;
        let s = |k: usize| if k == self.resolution { 1.0 } else { k as f64 / n };
        let p = |k: usize| if k == self.resolution { TAU } else { TAU * k as f64 / n };
        ([s(i), s(i + 1)], [p(j), p(j + 1)])
    }

    pub(crate) fn coverage_error(&self, i: usize, j: usize, err: Error) -> Error {
        match err {
            Error::Domain { .. } => {
                let ([s0, s1], [p0, p1]) = self.cell_bounds(i, j);
                Error::Coverage(format!(
                    "{}: s ∈ [{s0:.4}, {s1:.4}], φ ∈ [{p0:.4}, {p1:.4}] ({err})",
                    self.label
                ))
            }
            other => other,
        }
    }

    /// `∫_cell F*ω`.
    pub fn cell_area(&self, ambient: &AmbientManifold, rule: &GaussLegendre, i: usize, j: usize) -> Result<f64> {
        let ([s0, s1], [p0, p1]) = self.cell_bounds(i, j);
        let mut total = 0.0;
        for (s, ws) in rule.mapped(s0, s1) {
            let mut row = 0.0;
            for (phi, wp) in rule.mapped(p0, p1) {
                let jet = self.jet(s, phi)?;
                let metric = ambient
                    .metric_at(&jet.point)
                    .map_err(|e| self.coverage_error(i, j, e))?;
                row += wp * metric.omega(&jet.d_s, &jet.d_phi);
            }
            total += ws * row;
        }
        Ok(total)
    }

    /// `ω(F) = ∫_Σ F*ω` by composite tensor Gauss–Legendre quadrature.
    pub fn symplectic_area(&self, ambient: &AmbientManifold) -> Result<f64> {
        let rule = GaussLegendre::new(self.order);
        let cells: Result<Vec<f64>> = self
            .cells()
            .map(|(i, j)| self.cell_area(ambient, &rule, i, j))
            .collect();
        Ok(pairwise_sum(&cells?))
    }

    /// Samples `τₖ = 2πk/N` of every boundary component with the matched
    /// point of `L`, failing if they are further apart than
    /// [`BOUNDARY_MATCH_TOLERANCE`].
    pub fn boundary_trace(
        &self,
        ambient: &AmbientManifold,
        lagrangian: &LagrangianImmersion,
        samples_per_component: usize,
    ) -> Result<Vec<Vec<BoundaryMatch>>> {
        let links = self.boundary_links();
        if links.is_empty() {
            return Err(Error::Linkage(format!(
                "{} has no boundary linked to {}",
                self.label, lagrangian.label
            )));
        }
        let chart = self.chart();
        links
            .iter()
            .map(|link| {
                (0..samples_per_component.max(1))
                    .map(|k| {
                        let tau = TAU * k as f64 / samples_per_component as f64;
                        let (s, phi) = link.surface_param(tau);
                        let surface_point = self.jet(s, phi)?.point;
                        let loop_param = link.path.point(tau);
                        let on_l = lagrangian.jet(&loop_param)?.point;
                        let (lagrangian_point, _) = ambient
                            .chart_transition(&on_l, chart)
                            .map_err(|e| Error::Linkage(format!("{}: {e}", self.label)))?;
                        let distance = ambient.coordinate_distance(&surface_point, &lagrangian_point);
                        if !(distance < BOUNDARY_MATCH_TOLERANCE) {
                            return Err(Error::Linkage(format!(
                                "{} and {} differ by {distance:.3e} at boundary parameter τ = {tau:.6}",
                                self.label, lagrangian.label
                            )));
                        }
                        Ok(BoundaryMatch {
                            tau,
                            surface_param: (s, phi),
                            surface_point,
                            loop_param,
                            lagrangian_point,
                            distance,
                        })
                    })
                    .collect()
            })
            .collect()
    }
}
