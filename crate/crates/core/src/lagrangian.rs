//! Parametrised Lagrangian immersions with exact 2-jets, their second
//! fundamental form, mean curvature vector and mean curvature form.
//!
//! Every immersion is defined on a torus of parameters `t ∈ [0, 2π)ⁿ` and maps
//! into chart 0 of its ambient manifold.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::ambient::{AmbientManifold, CMat, CVec, ChartPoint, Christoffel, MetricJet, TangentVector};
use crate::constructor::Constructor;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `t ↦ r e^{it} (1 + ε cos kt)`, a star-shaped closed curve in a chart of a
/// complex curve. `ε = 0` gives the round circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarCurve {
    pub radius: f64,
    pub eps: f64,
    pub k: f64,
}

impl PlanarCurve {
    pub fn round(radius: f64) -> Self {
        Self {
            radius,
            eps: 0.0,
            k: 0.0,
        }
    }

    /// Value and first two derivatives at `t`.
    pub fn jet(&self, t: f64) -> [Complex64; 3] {
        let e = Complex64::from_polar(self.radius, t);
        let a = 1.0 + self.eps * (self.k * t).cos();
        let da = -self.eps * self.k * (self.k * t).sin();
        let dda = -self.eps * self.k * self.k * (self.k * t).cos();
        [
            e * a,
            e * (I * a + da),
            e * (Complex64::new(-a + dda, 0.0) + I * (2.0 * da)),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LagrangianKind {
    /// A closed curve in a complex curve (any curve is Lagrangian there).
    Curve(PlanarCurve),
    /// `(c₁(t₁), …, cₙ(tₙ))` in chart 0; Lagrangian in `ℂⁿ` and, for round
    /// factors, a torus orbit in `ℂPⁿ`.
    ProductTorus(Vec<PlanarCurve>),
    /// `t ↦ t·d/2π` in a flat torus, closed because `d` is a lattice vector.
    Line { direction: Complex64 },
    /// `(r₁e^{it₁} + ε e^{it₂}, r₂e^{it₂})`; fails the Lagrangian condition by `r₁ε`.
    PerturbedTorus { radii: [f64; 2], eps: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianImmersion {
    pub label: String,
    pub kind: LagrangianKind,
}

/// Value, first and second derivatives of the immersion at a parameter.
#[derive(Debug, Clone)]
pub struct LagrangianJet {
    pub point: ChartPoint,
    /// Columns are `∂f/∂tᵃ`.
    pub frame: CMat,
    /// `hessian[a * n + b] = ∂²f/∂tᵃ∂tᵇ`.
    pub hessian: Vec<CVec>,
}

impl LagrangianJet {
    pub fn second(&self, a: usize, b: usize) -> &CVec {
        &self.hessian[a * self.frame.ncols() + b]
    }

    /// Derivative of the frame along the parameter direction `w`.
    pub fn frame_derivative(&self, w: &[f64]) -> CMat {
        let n = self.frame.ncols();
        CMat::from_fn(n, n, |row, b| (0..n).map(|a| self.second(a, b)[row] * w[a]).sum())
    }

    pub fn push_forward(&self, w: &[f64]) -> CVec {
        &self.frame * CVec::from_iterator(w.len(), w.iter().map(|&x| Complex64::new(x, 0.0)))
    }
}

/// A closed curve `τ ↦ base ± k·(τ + warp·sin τ)`, `τ ∈ [0, 2π]`, in the
/// parameter domain of a Lagrangian.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopInL {
    pub base: Vec<f64>,
    pub winding: Vec<i32>,
    pub reversed: bool,
    pub warp: f64,
}

impl LoopInL {
    pub fn new(base: Vec<f64>, winding: Vec<i32>) -> Result<Self> {
        if base.len() != winding.len() {
            return Err(Error::Contract("loop base and winding differ in length".into()));
        }
        if winding.iter().all(|&k| k == 0) {
            return Err(Error::Contract("loop has zero velocity".into()));
        }
        Ok(Self {
            base,
            winding,
            reversed: false,
            warp: 0.0,
        })
    }

    /// Loop once around parameter `axis` starting at the origin.
    pub fn axis(n: usize, axis: usize) -> Self {
        let mut winding = vec![0; n];
        winding[axis] = 1;
        Self {
            base: vec![0.0; n],
            winding,
            reversed: false,
            warp: 0.0,
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            reversed: !self.reversed,
            ..self.clone()
        }
    }

    /// Orientation-preserving reparametrisation `τ ↦ τ + warp·sin τ`.
    pub fn warped(&self, warp: f64) -> Result<Self> {
        if warp.abs() >= 1.0 {
            return Err(Error::Contract(format!("warp {warp} makes the loop irregular")));
        }
        Ok(Self { warp, ..self.clone() })
    }

    fn sign(&self) -> f64 {
        if self.reversed {
            -1.0
        } else {
            1.0
        }
    }

    pub fn point(&self, tau: f64) -> Vec<f64> {
        let s = self.sign() * (tau + self.warp * tau.sin());
        self.base
            .iter()
            .zip(&self.winding)
            .map(|(b, &k)| b + k as f64 * s)
            .collect()
    }

    /// Same parametrised loop up to the storage of its orientation, with
    /// parameters compared modulo `2π`.
    pub fn same_loop(&self, other: &LoopInL) -> bool {
        if self.base.len() != other.base.len() {
            return false;
        }
        (0..16).all(|k| {
            let tau = TAU * k as f64 / 16.0;
            let close = |a: &[f64], b: &[f64], periodic: bool| {
                a.iter().zip(b).all(|(x, y)| {
                    let d = x - y;
                    let d = if periodic { d - TAU * (d / TAU).round() } else { d };
                    d.abs() < 1e-12
                })
            };
            close(&self.point(tau), &other.point(tau), true) && close(&self.velocity(tau), &other.velocity(tau), false)
        })
    }

    pub fn velocity(&self, tau: f64) -> Vec<f64> {
        let ds = self.sign() * (1.0 + self.warp * tau.cos());
        self.winding.iter().map(|&k| k as f64 * ds).collect()
    }
}

/// `II(∂ₐ, ∂_b)` as normal vectors, `ii[a * n + b]`.
#[derive(Debug, Clone)]
pub struct SecondFundamentalForm {
    pub ii: Vec<CVec>,
    pub n: usize,
}

impl SecondFundamentalForm {
    pub fn get(&self, a: usize, b: usize) -> &CVec {
        &self.ii[a * self.n + b]
    }
}

/// Finite-difference estimate of `dσ_L` at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closedness {
    /// `max |dσ(∂ₐ, ∂_b)|` at step `h`.
    pub residual: f64,
    /// Richardson-extrapolated value from steps `h` and `h/2`.
    pub extrapolated: f64,
    /// `log₂` ratio of successive differences over `h, h/2, h/4`; `None` when
    /// the differences are at rounding level.
    pub observed_order: Option<f64>,
}

/// Pointwise geometric data of the immersion at one parameter.
struct Local {
    jet: LagrangianJet,
    metric: MetricJet,
    christoffel: Christoffel,
    induced_inverse: DMatrix<f64>,
}

impl LagrangianImmersion {
    pub const CONSTRUCTORS: &'static [&'static str] = &[
        "circle(r)",
        "latitude(rho)",
        "hyperbolic_circle(s)",
        "wobbly_circle(r, eps, k)",
        "product_torus(r1, ..., rn)",
        "clifford(n)",
        "flat_torus_geodesic(direction)",
        "perturbed_torus(eps)",
    ];

    pub fn new(label: impl Into<String>, kind: LagrangianKind) -> Self {
        Self {
            label: label.into(),
            kind,
        }
    }

    pub fn circle(radius: f64) -> Self {
        Self::new(
            format!("circle({radius})"),
            LagrangianKind::Curve(PlanarCurve::round(radius)),
        )
    }

    pub fn product_torus(radii: &[f64]) -> Self {
        let label = format!(
            "product_torus({})",
            radii.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
        );
        Self::new(
            label,
            LagrangianKind::ProductTorus(radii.iter().map(|&r| PlanarCurve::round(r)).collect()),
        )
    }

    /// Parse a constructor string, checking compatibility with `ambient`.
    pub fn parse(spec: &str, ambient: &AmbientManifold) -> Result<Self> {
        let c = Constructor::parse(spec)?;
        let label = c.to_string();
        let need = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Constructor(format!("{label} requires {what}, got {ambient}")))
            }
        };
        let positive = |x: f64, what: &str| -> Result<f64> {
            if x > 0.0 && x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Constructor(format!("{label}: {what} must be positive")))
            }
        };
        let kind = match c.name.as_str() {
            "circle" => {
                need(ambient.dim() == 1, "a complex curve")?;
                LagrangianKind::Curve(PlanarCurve::round(positive(c.real(0, "r")?, "radius")?))
            }
            "latitude" => {
                need(matches!(ambient, AmbientManifold::Projective { n: 1 }), "CPn(n=1)")?;
                LagrangianKind::Curve(PlanarCurve::round(positive(c.real(0, "rho")?, "rho")?))
            }
            "hyperbolic_circle" => {
                let AmbientManifold::HyperbolicDisk { curvature } = ambient else {
                    return need(false, "HyperbolicDisk").map(|_| unreachable!());
                };
                let s = positive(c.real(0, "s")?, "geodesic radius")?;
                LagrangianKind::Curve(PlanarCurve::round((curvature.abs().sqrt() * s / 2.0).tanh()))
            }
            "wobbly_circle" => {
                need(ambient.dim() == 1, "a complex curve")?;
                let curve = PlanarCurve {
                    radius: positive(c.real(0, "r")?, "radius")?,
                    eps: c.real(1, "eps")?,
                    k: c.real(2, "k")?,
                };
                if curve.eps.abs() * (1.0 + curve.k.abs()) >= 1.0 || curve.k.fract() != 0.0 {
                    return Err(Error::Constructor(format!(
                        "{label}: needs integer k and |eps|·(1+|k|) < 1 to stay star-shaped"
                    )));
                }
                LagrangianKind::Curve(curve)
            }
            "product_torus" => {
                let radii = c.positional_reals()?;
                need(
                    radii.len() == ambient.dim() && c.arity() == radii.len(),
                    "one radius per complex dimension",
                )?;
                for &r in &radii {
                    positive(r, "radius")?;
                }
                LagrangianKind::ProductTorus(radii.into_iter().map(PlanarCurve::round).collect())
            }
            "clifford" => {
                let n = c.count(0, "n")?;
                need(ambient == &AmbientManifold::Projective { n }, &format!("CPn(n={n})"))?;
                LagrangianKind::ProductTorus(vec![PlanarCurve::round(1.0); n])
            }
            "flat_torus_geodesic" => {
                let AmbientManifold::FlatTorus { n: 1, periods } = ambient else {
                    return need(false, "FlatTorus with n=1").map(|_| unreachable!());
                };
                let direction = c.complex(0, "direction")?;
                let reduced = crate::ambient::reduce_mod_lattice(direction, periods);
                if direction.norm() == 0.0 || reduced.norm() > 1e-12 {
                    return Err(Error::Constructor(format!(
                        "{label}: direction must be a nonzero lattice vector"
                    )));
                }
                LagrangianKind::Line { direction }
            }
            "perturbed_torus" => {
                need(ambient == &AmbientManifold::Flat { n: 2 }, "Cn(n=2)")?;
                let eps = c.real(0, "eps")?;
                let r1 = positive(c.real_or(1, "r1", 1.0)?, "r1")?;
                let r2 = positive(c.real_or(2, "r2", 1.0)?, "r2")?;
                if eps.abs() >= r1 {
                    return Err(Error::Constructor(format!("{label}: need |eps| < r1")));
                }
                LagrangianKind::PerturbedTorus { radii: [r1, r2], eps }
            }
            other => {
                return Err(Error::Constructor(format!(
                    "unknown lagrangian `{other}`; expected one of {}",
                    Self::CONSTRUCTORS.join(", ")
                )))
            }
        };
        Ok(Self { label, kind })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            LagrangianKind::Curve(_) | LagrangianKind::Line { .. } => 1,
            LagrangianKind::ProductTorus(f) => f.len(),
            LagrangianKind::PerturbedTorus { .. } => 2,
        }
    }

    /// Every parameter is `2π`-periodic.
    pub fn periods(&self) -> Vec<f64> {
        vec![TAU; self.dim()]
    }

    pub fn jet(&self, u: &[f64]) -> Result<LagrangianJet> {
        let n = self.dim();
        if u.len() != n {
            return Err(Error::Contract(format!(
                "{}: expected {n} parameters, got {}",
                self.label,
                u.len()
            )));
        }
        let zero = CVec::zeros(n);
        let mut hessian = vec![zero.clone(); n * n];
        let (coords, frame) = match &self.kind {
            LagrangianKind::Curve(c) => {
                let [f, df, ddf] = c.jet(u[0]);
                hessian[0][0] = ddf;
                (CVec::from_element(1, f), CMat::from_element(1, 1, df))
            }
            LagrangianKind::ProductTorus(factors) => {
                let mut coords = zero.clone();
                let mut frame = CMat::zeros(n, n);
                for (a, c) in factors.iter().enumerate() {
                    let [f, df, ddf] = c.jet(u[a]);
                    coords[a] = f;
                    frame[(a, a)] = df;
                    hessian[a * n + a][a] = ddf;
                }
                (coords, frame)
            }
            LagrangianKind::Line { direction } => (
                CVec::from_element(1, direction * (u[0] / TAU)),
                CMat::from_element(1, 1, direction / TAU),
            ),
            LagrangianKind::PerturbedTorus { radii: [r1, r2], eps } => {
                let e1 = Complex64::from_polar(1.0, u[0]);
                let e2 = Complex64::from_polar(1.0, u[1]);
                let coords = CVec::from_column_slice(&[e1 * *r1 + e2 * *eps, e2 * *r2]);
                let frame = CMat::from_column_slice(
                    2,
                    2,
                    &[I * e1 * *r1, Complex64::new(0.0, 0.0), I * e2 * *eps, I * e2 * *r2],
                );
                hessian[0] = CVec::from_column_slice(&[-e1 * *r1, Complex64::new(0.0, 0.0)]);
                hessian[3] = CVec::from_column_slice(&[-e2 * *eps, -e2 * *r2]);
                (coords, frame)
            }
        };
        Ok(LagrangianJet {
            point: ChartPoint::new(0, coords),
            frame,
            hessian,
        })
    }

    pub fn tangent_frame(&self, ambient: &AmbientManifold, u: &[f64]) -> Result<Vec<TangentVector>> {
        let local = self.local(ambient, u)?;
        Ok(local
            .jet
            .frame
            .column_iter()
            .map(|c| TangentVector::new(local.jet.point.clone(), c.into_owned()))
            .collect())
    }

    fn local(&self, ambient: &AmbientManifold, u: &[f64]) -> Result<Local> {
        let jet = self.jet(u)?;
        let metric = ambient.metric_at(&jet.point)?;
        let induced = induced_metric(&metric, &jet.frame);
        let scale: f64 = induced.diagonal().iter().product();
        let det = induced.determinant();
        if !(det > 1e-12 * scale) || scale <= 0.0 {
            return Err(Error::Immersion(format!(
                "{}: frame is rank deficient at t = {u:?}",
                self.label
            )));
        }
        let induced_inverse = induced
            .try_inverse()
            .ok_or_else(|| Error::Immersion(format!("{}: singular induced metric at t = {u:?}", self.label)))?;
        let christoffel = Christoffel::from_jet(&metric)?;
        Ok(Local {
            jet,
            metric,
            christoffel,
            induced_inverse,
        })
    }

    /// Max over `samples` seeded random parameters of `max_{a<b} |ω(∂ₐf, ∂_bf)|`.
    pub fn lagrangian_residual(&self, ambient: &AmbientManifold, samples: usize) -> Result<f64> {
        let n = self.dim();
        let mut worst = 0.0f64;
        for u in sample_parameters(n, samples, 0x1A6) {
            let jet = self.jet(&u)?;
            let metric = ambient.metric_at(&jet.point)?;
            for a in 0..n {
                for b in a + 1..n {
                    let w = metric.omega(&jet.frame.column(a).into_owned(), &jet.frame.column(b).into_owned());
                    worst = worst.max(w.abs());
                }
            }
        }
        Ok(worst)
    }

    pub fn second_fundamental_form(&self, ambient: &AmbientManifold, u: &[f64]) -> Result<SecondFundamentalForm> {
        let local = self.local(ambient, u)?;
        Ok(local.second_fundamental_form())
    }

    /// `H = Σ g̃^{ab} II(∂ₐ, ∂_b)`, the unnormalised trace.
    pub fn mean_curvature_vector(&self, ambient: &AmbientManifold, u: &[f64]) -> Result<TangentVector> {
        let local = self.local(ambient, u)?;
        Ok(TangentVector::new(local.jet.point.clone(), local.mean_curvature()))
    }

    /// `|H|` measured with the ambient metric.
    pub fn mean_curvature_norm(&self, ambient: &AmbientManifold, u: &[f64]) -> Result<f64> {
        let local = self.local(ambient, u)?;
        Ok(local.metric.norm(&local.mean_curvature()))
    }

    /// `max_a |g(H, ∂ₐf)|`.
    pub fn normality_residual(&self, ambient: &AmbientManifold, u: &[f64]) -> Result<f64> {
        let local = self.local(ambient, u)?;
        let h = local.mean_curvature();
        Ok(local
            .jet
            .frame
            .column_iter()
            .map(|e| local.metric.inner(&h, &e.into_owned()).abs())
            .fold(0.0, f64::max))
    }

    /// Mean curvature form on the tangent vector `Σ wᵃ ∂ₐf`:
    /// `σ_L(w) = ω(w, H)`.
    pub fn sigma_at(&self, ambient: &AmbientManifold, u: &[f64], w: &[f64]) -> Result<f64> {
        let local = self.local(ambient, u)?;
        let h = local.mean_curvature();
        Ok(local.metric.omega(&local.jet.push_forward(w), &h))
    }

    /// `∮ σ_L` over `path` with `panels` Gauss–Legendre panels of `order` points.
    pub fn integrate_sigma(
        &self,
        ambient: &AmbientManifold,
        path: &LoopInL,
        panels: usize,
        order: usize,
    ) -> Result<f64> {
        if path.base.len() != self.dim() {
            return Err(Error::Contract(format!("{}: loop has wrong dimension", self.label)));
        }
        let rule = GaussLegendre::new(order);
        let mut failure = None;
        let value = rule.integrate(0.0, TAU, panels.max(1), |tau| {
            match self.sigma_at(ambient, &path.point(tau), &path.velocity(tau)) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    /// Centred finite-difference estimate of `dσ_L(∂ₐ, ∂_b)` at `u`.
    pub fn sigma_closedness_residual(&self, ambient: &AmbientManifold, u: &[f64], h: f64) -> Result<Closedness> {
        let n = self.dim();
        if n < 2 {
            return Ok(Closedness {
                residual: 0.0,
                extrapolated: 0.0,
                observed_order: None,
            });
        }
        let d = |step: f64| -> Result<Vec<f64>> {
            let sigma = |a: usize, shift_axis: usize, sign: f64| -> Result<f64> {
                let mut p = u.to_vec();
                p[shift_axis] += sign * step;
                let mut w = vec![0.0; n];
                w[a] = 1.0;
                self.sigma_at(ambient, &p, &w)
            };
            let mut out = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    let db_a = (sigma(b, a, 1.0)? - sigma(b, a, -1.0)?) / (2.0 * step);
                    let da_b = (sigma(a, b, 1.0)? - sigma(a, b, -1.0)?) / (2.0 * step);
                    out.push(db_a - da_b);
                }
            }
            Ok(out)
        };
        let d1 = d(h)?;
        let d2 = d(h / 2.0)?;
        let d4 = d(h / 4.0)?;
        let max = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let extrapolated: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
        let diff1: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a - b).collect();
        let diff2: Vec<f64> = d2.iter().zip(&d4).map(|(a, b)| a - b).collect();
        let (e1, e2) = (max(&diff1), max(&diff2));
        let observed_order = (e2 > 1e-13 && e1 > e2).then(|| (e1 / e2).log2());
        Ok(Closedness {
            residual: max(&d1),
            extrapolated: max(&extrapolated),
            observed_order,
        })
    }

    /// Loop once around parameter `axis`.
    pub fn axis_loop(&self, axis: usize) -> LoopInL {
        LoopInL::axis(self.dim(), axis)
    }
}

impl Local {
    fn normal_part(&self, x: &CVec) -> CVec {
        let n = self.jet.frame.ncols();
        let pairings: Vec<f64> = (0..n)
            .map(|b| self.metric.inner(x, &self.jet.frame.column(b).into_owned()))
            .collect();
        let mut out = x.clone();
        for a in 0..n {
            let coeff: f64 = (0..n).map(|b| self.induced_inverse[(a, b)] * pairings[b]).sum();
            out -= self.jet.frame.column(a) * Complex64::new(coeff, 0.0);
        }
        out
    }

    fn second_fundamental_form(&self) -> SecondFundamentalForm {
        let n = self.jet.frame.ncols();
        let mut ii = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let ea = self.jet.frame.column(a).into_owned();
                let eb = self.jet.frame.column(b).into_owned();
                let acc = self.jet.second(a, b) + self.christoffel.apply(&ea, &eb);
                ii.push(self.normal_part(&acc));
            }
        }
        SecondFundamentalForm { ii, n }
    }

    fn mean_curvature(&self) -> CVec {
        let ii = self.second_fundamental_form();
        let n = ii.n;
        let mut h = CVec::zeros(self.jet.frame.nrows());
        for a in 0..n {
            for b in 0..n {
                h += ii.get(a, b) * Complex64::new(self.induced_inverse[(a, b)], 0.0);
            }
        }
        h
    }
}

/// `g̃ₐ_b = g(∂ₐf, ∂_bf)`.
pub fn induced_metric(metric: &MetricJet, frame: &CMat) -> DMatrix<f64> {
    let n = frame.ncols();
    DMatrix::from_fn(n, n, |a, b| {
        metric.inner(&frame.column(a).into_owned(), &frame.column(b).into_owned())
    })
}

/// Seeded uniform samples of `[0, 2π)ⁿ`.
pub fn sample_parameters(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(0.0..TAU)).collect())
        .collect()
}

/// Seeded sample directions in `[-1, 1]ⁿ`.
pub fn sample_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn loop_equivalence_ignores_stored_orientation() {
        let forward = LoopInL::new(vec![0.0], vec![1]).unwrap();
        let backward = LoopInL::new(vec![0.0], vec![-1]).unwrap().reversed();
        assert!(forward.same_loop(&backward));
        assert!(!forward.same_loop(&forward.reversed()));
        let shifted = LoopInL::new(vec![TAU], vec![1]).unwrap();
        assert!(forward.same_loop(&shifted));
        assert!(!forward.same_loop(&forward.warped(0.3).unwrap()));
        assert!(!forward.same_loop(&LoopInL::axis(2, 0)));
    }

    fn flat(n: usize) -> AmbientManifold {
        AmbientManifold::Flat { n }
    }

    fn cp(n: usize) -> AmbientManifold {
        AmbientManifold::Projective { n }
    }

    #[test]
    fn circle_frame_is_the_velocity() {
        let l = LagrangianImmersion::circle(2.0);
        let t = 0.7;
        let frame = l.tangent_frame(&flat(1), &[t]).unwrap();
        let v = frame[0].components[0];
        assert!((v - Complex64::new(-2.0 * t.sin(), 2.0 * t.cos())).norm() < 1e-15);
    }

    #[test]
    fn product_torus_frame_is_orthogonal_with_radii_lengths() {
        let m = flat(2);
        let l = LagrangianImmersion::product_torus(&[0.5, 3.0]);
        let frame = l.tangent_frame(&m, &[1.0, -2.0]).unwrap();
        let metric = m.metric_at(&frame[0].base).unwrap();
        assert!((metric.norm(&frame[0].components) - 0.5).abs() < 1e-15);
        assert!((metric.norm(&frame[1].components) - 3.0).abs() < 1e-15);
        assert!(metric.inner(&frame[0].components, &frame[1].components).abs() < 1e-15);
    }

    #[test]
    fn equator_velocity() {
        let l = LagrangianImmersion::parse("clifford(1)", &cp(1)).unwrap();
        let t = 2.1;
        let frame = l.tangent_frame(&cp(1), &[t]).unwrap();
        assert!((frame[0].components[0] - I * Complex64::from_polar(1.0, t)).norm() < 1e-15);
    }

    #[test]
    fn rank_deficient_frame_is_an_immersion_failure() {
        let l = LagrangianImmersion::circle(0.0);
        assert!(matches!(l.tangent_frame(&flat(1), &[0.0]), Err(Error::Immersion(_))));
    }

    #[test]
    fn lagrangian_residuals() {
        let l = LagrangianImmersion::product_torus(&[1.0, 2.0]);
        assert!(l.lagrangian_residual(&flat(2), 50).unwrap() < 1e-10);
        let l = LagrangianImmersion::parse("clifford(2)", &cp(2)).unwrap();
        assert!(l.lagrangian_residual(&cp(2), 50).unwrap() < 1e-10);
        let l = LagrangianImmersion::parse("perturbed_torus(0.05)", &flat(2)).unwrap();
        assert!(l.lagrangian_residual(&flat(2), 200).unwrap() > 1e-3);
        let l = LagrangianImmersion::circle(1.0);
        assert!(l.lagrangian_residual(&flat(1), 10).unwrap() < 1e-15);
    }

    #[test]
    fn second_fundamental_form_examples() {
        let torus: AmbientManifold = "FlatTorus(lattice=[1, 1.5i])".parse().unwrap();
        let l = LagrangianImmersion::parse("flat_torus_geodesic(1)", &torus).unwrap();
        assert!(l.second_fundamental_form(&torus, &[0.4]).unwrap().get(0, 0).norm() < 1e-15);

        let r = 2.5;
        let l = LagrangianImmersion::circle(r);
        let ii = l.second_fundamental_form(&flat(1), &[0.3]).unwrap();
        assert!((ii.get(0, 0).norm() - r).abs() < 1e-13);

        let l = LagrangianImmersion::parse("clifford(1)", &cp(1)).unwrap();
        assert!(l.second_fundamental_form(&cp(1), &[1.3]).unwrap().get(0, 0).norm() < 1e-14);
    }

    #[test]
    fn circle_mean_curvature_points_to_centre() {
        let r = 0.8;
        let t = 1.1;
        let l = LagrangianImmersion::circle(r);
        let h = l.mean_curvature_vector(&flat(1), &[t]).unwrap();
        let expected = -Complex64::from_polar(1.0 / r, t);
        assert!((h.components[0] - expected).norm() < 1e-14);
    }

    #[test]
    fn latitude_mean_curvature_is_geodesic_curvature() {
        // Round sphere of radius 1/2, polar angle φ with ρ = tan(φ/2).
        for rho in [0.2, 0.5, 1.0, 1.7] {
            let l = LagrangianImmersion::parse(&format!("latitude({rho})"), &cp(1)).unwrap();
            let phi = 2.0 * f64::atan(rho);
            let kg = phi.cos() / (0.5 * phi.sin());
            let got = l.mean_curvature_norm(&cp(1), &[0.9]).unwrap();
            assert!((got - kg.abs()).abs() < 1e-12, "rho {rho}: {got} vs {kg}");
        }
    }

    #[test]
    fn clifford_torus_in_cp2_is_minimal() {
        let l = LagrangianImmersion::parse("clifford(2)", &cp(2)).unwrap();
        for u in sample_parameters(2, 20, 3) {
            assert!(l.mean_curvature_norm(&cp(2), &u).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn sigma_examples() {
        let l = LagrangianImmersion::circle(1.0);
        assert!((l.sigma_at(&flat(1), &[0.4], &[1.0]).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(l.sigma_at(&flat(1), &[0.4], &[0.0]).unwrap(), 0.0);
        let l = LagrangianImmersion::parse("clifford(2)", &cp(2)).unwrap();
        assert!(l.sigma_at(&cp(2), &[0.2, 4.0], &[0.3, -1.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn integrated_sigma_examples() {
        for r in [0.5, 1.0, 2.0] {
            let l = LagrangianImmersion::circle(r);
            let got = l.integrate_sigma(&flat(1), &l.axis_loop(0), 16, 8).unwrap();
            assert!((got - TAU).abs() < 1e-12);
        }
        let l = LagrangianImmersion::parse("latitude(0.5)", &cp(1)).unwrap();
        let got = l.integrate_sigma(&cp(1), &l.axis_loop(0), 16, 8).unwrap();
        assert!((got - 1.2 * PI).abs() < 1e-12);
        let l = LagrangianImmersion::parse("clifford(2)", &cp(2)).unwrap();
        assert!(l.integrate_sigma(&cp(2), &l.axis_loop(1), 16, 8).unwrap().abs() < 1e-9);
    }

    #[test]
    fn integrated_sigma_reparametrisation_and_orientation() {
        let l = LagrangianImmersion::parse("wobbly_circle(1, 0.1, 3)", &flat(1)).unwrap();
        let path = l.axis_loop(0);
        let plain = l.integrate_sigma(&flat(1), &path, 64, 8).unwrap();
        let warped = l.integrate_sigma(&flat(1), &path.warped(0.4).unwrap(), 64, 8).unwrap();
        let back = l.integrate_sigma(&flat(1), &path.reversed(), 64, 8).unwrap();
        assert!((plain - warped).abs() < 1e-9);
        assert!((plain + back).abs() < 1e-12);
        // Total turning of a simple closed curve.
        assert!((plain - TAU).abs() < 1e-9);
    }

    #[test]
    fn closedness_on_curves_and_tori() {
        let l = LagrangianImmersion::circle(1.0);
        assert_eq!(
            l.sigma_closedness_residual(&flat(1), &[0.3], 1e-4).unwrap().residual,
            0.0
        );
        let l = LagrangianImmersion::product_torus(&[1.0, 2.0]);
        assert!(
            l.sigma_closedness_residual(&flat(2), &[0.3, 2.0], 1e-4)
                .unwrap()
                .residual
                <= 1e-6
        );
        let wobbly = LagrangianImmersion::new(
            "wobbly product",
            LagrangianKind::ProductTorus(vec![
                PlanarCurve {
                    radius: 1.0,
                    eps: 0.1,
                    k: 3.0,
                },
                PlanarCurve {
                    radius: 2.0,
                    eps: -0.05,
                    k: 2.0,
                },
            ]),
        );
        assert!(
            wobbly
                .sigma_closedness_residual(&flat(2), &[0.3, 2.0], 1e-4)
                .unwrap()
                .residual
                <= 1e-6
        );
    }

    #[test]
    fn closedness_fd_order_on_a_non_closed_form() {
        let l = LagrangianImmersion::parse("perturbed_torus(0.2)", &flat(2)).unwrap();
        let c = l.sigma_closedness_residual(&flat(2), &[0.7, 2.1], 1e-2).unwrap();
        assert!(c.residual > 1e-3);
        let order = c.observed_order.expect("differences above rounding");
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn constructor_errors_name_the_alternatives() {
        let err = LagrangianImmersion::parse("sphere", &flat(1)).unwrap_err().to_string();
        assert!(err.contains("latitude(rho)") && err.contains("circle(r)"), "{err}");
        assert!(LagrangianImmersion::parse("latitude(0.5)", &flat(1)).is_err());
        assert!(LagrangianImmersion::parse("product_torus(1)", &flat(2)).is_err());
        let torus: AmbientManifold = "FlatTorus(lattice=[1, 1.5i])".parse().unwrap();
        assert!(LagrangianImmersion::parse("flat_torus_geodesic(0.5)", &torus).is_err());
    }
}
