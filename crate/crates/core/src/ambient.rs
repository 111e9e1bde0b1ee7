//! Kähler–Einstein ambient manifolds given by charts with closed-form metric jets.
//!
//! Tangent vectors are stored by their holomorphic components `dz(X)`, so the
//! complex structure acts as multiplication by `i`. The Hermitian form is
//! `h(u, v) = Σ g_{i j̄} uⁱ conj(vʲ)`, the Riemannian metric is `Re h` and the
//! Kähler form is `ω(u, v) = g(Ju, v) = -Im h(u, v)`, which is `Σ dxⁱ∧dyⁱ` on
//! flat `ℂⁿ`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::constructor::{Constructor, Value};
use crate::error::{Error, Result};

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

/// Overlap margin for affine charts of projective space.
pub const OVERLAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub chart: usize,
    pub coords: CVec,
}

impl ChartPoint {
    pub fn new(chart: usize, coords: CVec) -> Self {
        Self { chart, coords }
    }

    pub fn from_slice(chart: usize, coords: &[Complex64]) -> Self {
        Self::new(chart, CVec::from_column_slice(coords))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: ChartPoint,
    pub components: CVec,
}

impl TangentVector {
    pub fn new(base: ChartPoint, components: CVec) -> Self {
        Self { base, components }
    }

    /// The complex structure `J`.
    pub fn rotate(&self) -> Self {
        Self {
            base: self.base.clone(),
            components: self.components.map(|c| c * Complex64::i()),
        }
    }
}

/// Hermitian metric matrix at a point together with its derivatives.
///
/// `g[(i, j)] = g_{i j̄}`, `dg[k] = ∂g/∂zᵏ`, `ddg[k][l] = ∂²g/∂zᵏ∂z̄ˡ`.
/// Antiholomorphic first derivatives follow from `∂g/∂z̄ˡ = (∂g/∂zˡ)†`.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: CMat,
    pub dg: Vec<CMat>,
    pub ddg: Vec<Vec<CMat>>,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn hermitian(&self, u: &CVec, v: &CVec) -> Complex64 {
        hermitian(&self.g, u, v)
    }

    pub fn inner(&self, u: &CVec, v: &CVec) -> f64 {
        self.hermitian(u, v).re
    }

    pub fn omega(&self, u: &CVec, v: &CVec) -> f64 {
        -self.hermitian(u, v).im
    }

    pub fn norm(&self, u: &CVec) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    pub fn inverse(&self) -> Result<CMat> {
        self.g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular metric matrix".into()))
    }

    /// `∂ₖ log det g = tr(g⁻¹ ∂ₖ g)`.
    pub fn log_det_gradient(&self) -> Result<CVec> {
        let inv = self.inverse()?;
        Ok(CVec::from_iterator(
            self.dim(),
            self.dg.iter().map(|d| (&inv * d).trace()),
        ))
    }

    /// Coefficients of the Ricci form against the same basis as `g`:
    /// `R_{i j̄} = -2 ∂ᵢ∂_{j̄} log det g`.
    pub fn ricci(&self) -> Result<CMat> {
        let inv = self.inverse()?;
        let n = self.dim();
        let mut r = CMat::zeros(n, n);
        for i in 0..n {
            let a = &inv * &self.dg[i];
            for j in 0..n {
                let b = &inv * self.dg[j].adjoint();
                let hess = (&inv * &self.ddg[i][j]).trace() - (&b * &a).trace();
                r[(i, j)] = hess * -2.0;
            }
        }
        Ok(r)
    }
}

pub fn hermitian(g: &CMat, u: &CVec, v: &CVec) -> Complex64 {
    let gv = g * v.map(|c| c.conj());
    u.iter().zip(gv.iter()).map(|(a, b)| a * b).sum()
}

/// Christoffel symbols `Γᵏᵢⱼ` of the Levi-Civita connection in holomorphic
/// coordinates, stored as `gamma[k][(i, j)]`.
#[derive(Debug, Clone)]
pub struct Christoffel {
    pub gamma: Vec<CMat>,
}

impl Christoffel {
    pub fn from_jet(jet: &MetricJet) -> Result<Self> {
        let inv = jet.inverse()?;
        let n = jet.dim();
        // Γᵏᵢⱼ = Σ_l (g⁻¹)_{l k} ∂ⱼ g_{i l̄} = (∂ⱼg · g⁻¹)_{i k}
        let products: Vec<CMat> = jet.dg.iter().map(|d| d * &inv).collect();
        let gamma = (0..n)
            .map(|k| CMat::from_fn(n, n, |i, j| products[j][(i, k)]))
            .collect();
        Ok(Self { gamma })
    }

    /// `Γ(u, v)ᵏ = Σ Γᵏᵢⱼ uⁱ vʲ`.
    pub fn apply(&self, u: &CVec, v: &CVec) -> CVec {
        CVec::from_iterator(
            self.gamma.len(),
            self.gamma.iter().map(|g| {
                let gv = g * v;
                u.iter().zip(gv.iter()).map(|(a, b)| a * b).sum::<Complex64>()
            }),
        )
    }

    pub fn symmetry_residual(&self) -> f64 {
        self.gamma
            .iter()
            .map(|g| (g - g.transpose()).iter().map(|c| c.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// The shipped Kähler–Einstein manifolds.
#[derive(Debug, Clone, PartialEq)]
pub enum AmbientManifold {
    /// Flat `ℂⁿ`.
    Flat { n: usize },
    /// `ℂPⁿ` with the Fubini–Study metric normalised so a line has area `π`.
    Projective { n: usize },
    /// `(ℂ/Λ)ⁿ` for a lattice `Λ` spanned by two complex periods.
    FlatTorus { n: usize, periods: [Complex64; 2] },
    /// Unit disk with the complete metric of constant curvature `curvature < 0`.
    HyperbolicDisk { curvature: f64 },
}

impl fmt::Display for AmbientManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Flat { n } => write!(f, "Cn(n={n})"),
            Self::Projective { n } => write!(f, "CPn(n={n})"),
            Self::FlatTorus { n, periods } => write!(
                f,
                "FlatTorus(n={n}, lattice=[{}, {}])",
                Value::Number(periods[0]),
                Value::Number(periods[1])
            ),
            Self::HyperbolicDisk { curvature } => write!(f, "HyperbolicDisk(K={curvature})"),
        }
    }
}

impl FromStr for AmbientManifold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_constructor(&Constructor::parse(s)?)
    }
}

impl AmbientManifold {
    pub const CONSTRUCTORS: &'static [&'static str] = &[
        "Cn(n=..)",
        "CPn(n=..)",
        "FlatTorus(lattice=[w1, w2])",
        "HyperbolicDisk(K=..)",
    ];

    pub fn from_constructor(c: &Constructor) -> Result<Self> {
        let dimension = |c: &Constructor| -> Result<usize> {
            let n = c.count(0, "n")?;
            if n == 0 {
                return Err(Error::Constructor(format!("{c}: dimension must be positive")));
            }
            Ok(n)
        };
        match c.name.as_str() {
            "Cn" => Ok(Self::Flat { n: dimension(c)? }),
            "CPn" => Ok(Self::Projective { n: dimension(c)? }),
            "FlatTorus" => {
                let n = if c.get(usize::MAX, "n").is_some() {
                    c.count(usize::MAX, "n")?
                } else {
                    1
                };
                if n == 0 {
                    return Err(Error::Constructor(format!("{c}: dimension must be positive")));
                }
                let periods = match c.get(0, "lattice") {
                    None => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
                    Some(Value::List(items)) if items.len() == 2 => {
                        let mut out = [Complex64::new(0.0, 0.0); 2];
                        for (slot, item) in out.iter_mut().zip(items) {
                            match item {
                                Value::Number(z) => *slot = *z,
                                other => {
                                    return Err(Error::Constructor(format!(
                                        "{c}: lattice period {other} is not a number"
                                    )))
                                }
                            }
                        }
                        out
                    }
                    Some(other) => {
                        return Err(Error::Constructor(format!(
                            "{c}: lattice must be a list of two complex periods, got {other}"
                        )))
                    }
                };
                if (periods[0].conj() * periods[1]).im.abs() < 1e-12 {
                    return Err(Error::Constructor(format!("{c}: lattice periods are degenerate")));
                }
                Ok(Self::FlatTorus { n, periods })
            }
            "HyperbolicDisk" => {
                let k = c.real_or(0, "K", -1.0)?;
                if !(k < 0.0) || !k.is_finite() {
                    return Err(Error::Constructor(format!("{c}: curvature must be negative")));
                }
                Ok(Self::HyperbolicDisk { curvature: k })
            }
            other => Err(Error::Constructor(format!(
                "unknown manifold `{other}`; expected one of {}",
                Self::CONSTRUCTORS.join(", ")
            ))),
        }
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        match self {
            Self::Flat { n } | Self::Projective { n } | Self::FlatTorus { n, .. } => *n,
            Self::HyperbolicDisk { .. } => 1,
        }
    }

    pub fn chart_count(&self) -> usize {
        match self {
            Self::Projective { n } => n + 1,
            _ => 1,
        }
    }

    /// `λ` with `Ric = 2πλ g`, equivalently `c₁(M) = λ[ω]`.
    pub fn einstein_constant(&self) -> f64 {
        match self {
            Self::Flat { .. } | Self::FlatTorus { .. } => 0.0,
            Self::Projective { n } => (*n as f64 + 1.0) / PI,
            Self::HyperbolicDisk { curvature } => curvature / (2.0 * PI),
        }
    }

    pub fn check_domain(&self, p: &ChartPoint) -> Result<()> {
        let fail = |detail: String| Error::Domain {
            manifold: self.to_string(),
            chart: p.chart,
            detail,
        };
        if p.chart >= self.chart_count() {
            return Err(fail(format!("(no chart with id {})", p.chart)));
        }
        if p.coords.len() != self.dim() {
            return Err(fail(format!("with {} coordinates", p.coords.len())));
        }
        if p.coords.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(fail("with non-finite coordinates".into()));
        }
        if let Self::HyperbolicDisk { .. } = self {
            let r = p.coords[0].norm();
            if r >= 1.0 {
                return Err(fail(format!("|z| = {r} (domain is |z| < 1)")));
            }
        }
        Ok(())
    }

    pub fn metric_at(&self, p: &ChartPoint) -> Result<MetricJet> {
        self.check_domain(p)?;
        let n = self.dim();
        let zero = CMat::zeros(n, n);
        Ok(match self {
            Self::Flat { .. } | Self::FlatTorus { .. } => MetricJet {
                g: CMat::identity(n, n),
                dg: vec![zero.clone(); n],
                ddg: vec![vec![zero; n]; n],
            },
            Self::Projective { .. } => fubini_study_jet(&p.coords),
            Self::HyperbolicDisk { curvature } => {
                let c = 4.0 / curvature.abs();
                let z = p.coords[0];
                let r2 = z.norm_sqr();
                let q = 1.0 - r2;
                let g = c / (q * q);
                let dg = z.conj() * (2.0 * c / (q * q * q));
                let ddg = 2.0 * c * (1.0 + 2.0 * r2) / q.powi(4);
                MetricJet {
                    g: CMat::from_element(1, 1, Complex64::new(g, 0.0)),
                    dg: vec![CMat::from_element(1, 1, dg)],
                    ddg: vec![vec![CMat::from_element(1, 1, Complex64::new(ddg, 0.0))]],
                }
            }
        })
    }

    pub fn christoffel_at(&self, p: &ChartPoint) -> Result<Christoffel> {
        Christoffel::from_jet(&self.metric_at(p)?)
    }

    /// `ω(u, v)` for tangent vectors based at the same point.
    pub fn symplectic_pair(&self, u: &TangentVector, v: &TangentVector) -> Result<f64> {
        if u.base != v.base {
            return Err(Error::Contract("tangent vectors have different base points".into()));
        }
        Ok(self.metric_at(&u.base)?.omega(&u.components, &v.components))
    }

    /// Max-norm of `Ric - 2πλ g` at `p`, the Ricci form taken from the exact
    /// second derivatives of the metric.
    pub fn einstein_residual(&self, p: &ChartPoint) -> Result<f64> {
        let jet = self.metric_at(p)?;
        let ricci = jet.ricci()?;
        let target = &jet.g * Complex64::new(2.0 * PI * self.einstein_constant(), 0.0);
        Ok(max_abs(&(ricci - target)))
    }

    /// Max of `|∂ₖ g_{i j̄} - ∂ᵢ g_{k j̄}|`.
    pub fn kahler_residual(&self, p: &ChartPoint) -> Result<f64> {
        let jet = self.metric_at(p)?;
        let n = self.dim();
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((jet.dg[k][(i, j)] - jet.dg[i][(k, j)]).norm());
                }
            }
        }
        Ok(worst)
    }

    /// Holomorphic transition of `p` into `target` together with its Jacobian
    /// `∂w/∂z` (rows index target coordinates).
    pub fn chart_transition(&self, p: &ChartPoint, target: usize) -> Result<(ChartPoint, CMat)> {
        self.check_domain(p)?;
        let n = self.dim();
        if target >= self.chart_count() {
            return Err(Error::Domain {
                manifold: self.to_string(),
                chart: target,
                detail: "(no such chart)".into(),
            });
        }
        if target == p.chart {
            return Ok((p.clone(), CMat::identity(n, n)));
        }
        let Self::Projective { .. } = self else {
            unreachable!("single-chart manifolds only have chart 0");
        };
        let homog = homogeneous(p.chart, &p.coords);
        let denom = homog[target];
        if denom.norm() <= OVERLAP_TOLERANCE {
            return Err(Error::Domain {
                manifold: self.to_string(),
                chart: target,
                detail: format!("{:?} from chart {} (outside the overlap)", p.coords.as_slice(), p.chart),
            });
        }
        let w = affine(target, &homog);
        // ∂Z_m/∂z_k is 1 exactly when Z_m is the k-th source coordinate.
        let source_index = |k: usize| if k < p.chart { k } else { k + 1 };
        let target_index = |m: usize| if m < target { m } else { m + 1 };
        let jac = CMat::from_fn(n, n, |m, k| {
            let zm = homog[target_index(m)];
            let d_num = if target_index(m) == source_index(k) { 1.0 } else { 0.0 };
            let d_den = if target == source_index(k) { 1.0 } else { 0.0 };
            (Complex64::new(d_num, 0.0) * denom - zm * d_den) / (denom * denom)
        });
        Ok((ChartPoint::new(target, w), jac))
    }

    /// Coordinate distance between two points of the same chart; on the torus
    /// the difference is reduced modulo the lattice.
    pub fn coordinate_distance(&self, a: &ChartPoint, b: &ChartPoint) -> f64 {
        let diff = &a.coords - &b.coords;
        match self {
            Self::FlatTorus { periods, .. } => diff
                .iter()
                .map(|d| reduce_mod_lattice(*d, periods).norm_sqr())
                .sum::<f64>()
                .sqrt(),
            _ => diff.norm(),
        }
    }
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Shortest representative of `d` modulo `ℤω₁ + ℤω₂`.
pub fn reduce_mod_lattice(d: Complex64, periods: &[Complex64; 2]) -> Complex64 {
    let [w1, w2] = *periods;
    let det = w1.re * w2.im - w1.im * w2.re;
    let a = (d.re * w2.im - d.im * w2.re) / det;
    let b = (w1.re * d.im - w1.im * d.re) / det;
    let base = d - w1 * a.round() - w2 * b.round();
    let mut best = base;
    for i in -1..=1 {
        for j in -1..=1 {
            let c = base + w1 * i as f64 + w2 * j as f64;
            if c.norm() < best.norm() {
                best = c;
            }
        }
    }
    best
}

fn homogeneous(chart: usize, z: &CVec) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(z.len() + 1);
    out.extend(z.iter().take(chart).copied());
    out.push(Complex64::new(1.0, 0.0));
    out.extend(z.iter().skip(chart).copied());
    out
}

fn affine(chart: usize, homog: &[Complex64]) -> CVec {
    let d = homog[chart];
    CVec::from_iterator(
        homog.len() - 1,
        homog
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != chart)
            .map(|(_, c)| c / d),
    )
}

/// Closed-form jet of `g_{i j̄} = ∂ᵢ∂_{j̄} log(1 + |z|²)`.
fn fubini_study_jet(z: &CVec) -> MetricJet {
    let n = z.len();
    let s = 1.0 + z.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let zb: Vec<Complex64> = z.iter().map(|c| c.conj()).collect();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let g = CMat::from_fn(n, n, |i, j| {
        Complex64::new(delta(i, j) / s, 0.0) - zb[i] * z[j] / (s * s)
    });
    let dg = (0..n)
        .map(|k| {
            CMat::from_fn(n, n, |i, j| {
                -zb[k] * delta(i, j) / (s * s) - zb[i] * delta(j, k) / (s * s) + zb[i] * z[j] * zb[k] * 2.0 / s.powi(3)
            })
        })
        .collect();
    let ddg = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| {
                    CMat::from_fn(n, n, |i, j| {
                        let t1 = -(Complex64::new(delta(k, l) / (s * s), 0.0) - zb[k] * z[l] * 2.0 / s.powi(3))
                            * delta(i, j);
                        let t2 = -(Complex64::new(delta(i, l) / (s * s), 0.0) - zb[i] * z[l] * 2.0 / s.powi(3))
                            * delta(j, k);
                        let t3 = z[j]
                            * 2.0
                            * ((zb[k] * delta(i, l) + zb[i] * delta(k, l)) / s.powi(3)
                                - zb[i] * zb[k] * z[l] * 3.0 / s.powi(4));
                        t1 + t2 + t3
                    })
                })
                .collect()
        })
        .collect();
    MetricJet { g, dg, ddg }
}
