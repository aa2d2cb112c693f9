//! Grid-function calculus: quadrature, the generalized Kullback-Leibler
//! divergence, Hellinger distance, the `L^2(h)` norm and the decomposition
//! of a positive function into its log-profile `(g, m, psi, t)`.
//!
//! Functions are tabulated by their nodal values on a closed uniform grid.
//! All integrals are composite Simpson, which is exact on cubics and gives
//! O(step^4) convergence for smooth integrands. The reference density `h`
//! is constant on both supported domains, so integrals against `h` reduce
//! to a scaled Lebesgue integral.

use crate::{Error, Result};

/// Supported domains. The reference density `h` integrates to one on each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DomainKind {
    /// `[0, 1]` with `h = 1`.
    UnitInterval,
    /// `[-pi, pi]` with `h = 1/(2 pi)`.
    SymmetricPi,
}

/// A uniform closed grid over one of the supported domains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    grid_size: usize,
}

impl Domain {
    /// `grid_size` is the number of cells; it must be even and at least 16.
    pub fn new(kind: DomainKind, grid_size: usize) -> Result<Self> {
        if grid_size < 16 || grid_size % 2 != 0 {
            return Err(Error::InvalidDomain(format!(
                "grid_size must be even and >= 16, got {grid_size}"
            )));
        }
        Ok(Self { kind, grid_size })
    }

    pub fn unit(grid_size: usize) -> Result<Self> {
        Self::new(DomainKind::UnitInterval, grid_size)
    }

    pub fn symmetric_pi(grid_size: usize) -> Result<Self> {
        Self::new(DomainKind::SymmetricPi, grid_size)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn lower(&self) -> f64 {
        match self.kind {
            DomainKind::UnitInterval => 0.0,
            DomainKind::SymmetricPi => -std::f64::consts::PI,
        }
    }

    pub fn upper(&self) -> f64 {
        match self.kind {
            DomainKind::UnitInterval => 1.0,
            DomainKind::SymmetricPi => std::f64::consts::PI,
        }
    }

    /// Grid step (cell width).
    pub fn step(&self) -> f64 {
        (self.upper() - self.lower()) / self.grid_size as f64
    }

    /// Constant value of the reference density `h` on the domain.
    pub fn h_value(&self) -> f64 {
        match self.kind {
            DomainKind::UnitInterval => 1.0,
            DomainKind::SymmetricPi => 1.0 / (2.0 * std::f64::consts::PI),
        }
    }

    /// Coordinate of node `i`, `0 <= i <= grid_size`.
    pub fn node(&self, i: usize) -> f64 {
        self.lower() + i as f64 * self.step()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower() && x <= self.upper()
    }
}

/// A real function tabulated by its nodal values (closed endpoints).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: Domain,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(domain: Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.grid_size() + 1 {
            return Err(Error::InvalidGridFunction(format!(
                "expected {} nodal values, got {}",
                domain.grid_size() + 1,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGridFunction(
                "non-finite nodal value".into(),
            ));
        }
        Ok(Self { domain, values })
    }

    pub fn from_fn(domain: Domain, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..=domain.grid_size()).map(|i| f(domain.node(i))).collect();
        Self { domain, values }
    }

    pub fn constant(domain: Domain, c: f64) -> Self {
        Self {
            domain,
            values: vec![c; domain.grid_size() + 1],
        }
    }

    /// The reference density as a grid function.
    pub fn reference(domain: Domain) -> Self {
        Self::constant(domain, domain.h_value())
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// Symmetry about the domain midpoint, within `tol` in sup norm.
    pub fn is_even(&self, tol: f64) -> bool {
        let n = self.domain.grid_size();
        (0..=n).all(|i| (self.values[i] - self.values[n - i]).abs() <= tol)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            domain: self.domain,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.domain, other.domain);
        Self {
            domain: self.domain,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Linear interpolation of the nodal values at `x` inside the domain.
    pub fn interp(&self, x: f64) -> f64 {
        let step = self.domain.step();
        let pos = (x - self.domain.lower()) / step;
        let i = (pos.floor() as usize).min(self.domain.grid_size() - 1);
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// Composite Simpson quadrature of the nodal values over the domain
/// (Lebesgue measure).
pub fn integrate(p: &GridFunction) -> f64 {
    simpson(p.domain(), p.values())
}

/// Simpson quadrature of a raw nodal vector on `domain`.
pub fn simpson(domain: Domain, values: &[f64]) -> f64 {
    let n = domain.grid_size();
    debug_assert_eq!(values.len(), n + 1);
    let mut acc = values[0] + values[n];
    for (i, &v) in values.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * domain.step() / 3.0
}

/// Integral against the reference density, `\int p h`.
pub fn integrate_against_h(p: &GridFunction) -> f64 {
    p.domain().h_value() * integrate(p)
}

/// `\int p^2 h`.
pub fn l2h_norm_sq(p: &GridFunction) -> f64 {
    p.domain().h_value() * integrate(&p.map(|v| v * v))
}

/// Generalized Kullback-Leibler divergence
/// `D(p||q) = \int p log(p/q) - \int p + \int q`, with the convention
/// `0 log(0/0) = 0`. Rejects a zero of `q` at a node where `p > 0`.
pub fn kl_divergence(p: &GridFunction, q: &GridFunction) -> Result<f64> {
    debug_assert_eq!(p.domain(), q.domain());
    let mut integrand = Vec::with_capacity(p.values().len());
    for (&pv, &qv) in p.values().iter().zip(q.values()) {
        if pv == 0.0 {
            integrand.push(qv);
        } else if qv <= 0.0 {
            return Err(Error::InvalidArgument(
                "kl_divergence: q vanishes where p is positive".into(),
            ));
        } else {
            integrand.push(pv * (pv / qv).ln() - pv + qv);
        }
    }
    Ok(simpson(p.domain(), &integrand))
}

/// Squared Hellinger distance `\int (sqrt(p) - sqrt(q))^2`.
pub fn hellinger_sq(p: &GridFunction, q: &GridFunction) -> f64 {
    debug_assert_eq!(p.domain(), q.domain());
    let d = p.zip_map(q, |a, b| {
        let s = a.max(0.0).sqrt() - b.max(0.0).sqrt();
        s * s
    });
    integrate(&d)
}

/// The derived quantities of a strictly positive grid function:
/// `g = log(f/h)`, `m = \int f`, `psi = -\int g h` and `t = g + psi`.
#[derive(Debug, Clone)]
pub struct LogProfile {
    pub g: GridFunction,
    pub m: f64,
    pub psi: f64,
    pub t: GridFunction,
}

/// Decompose `f` into its log-profile. `f` must be strictly positive.
pub fn log_decompose(f: &GridFunction) -> Result<LogProfile> {
    if !f.is_strictly_positive() {
        return Err(Error::InvalidArgument(
            "log_decompose: f must be strictly positive on all nodes".into(),
        ));
    }
    let h = f.domain().h_value();
    let g = f.map(|v| (v / h).ln());
    let m = integrate(f);
    let psi = -integrate_against_h(&g);
    let t = g.map(|v| v + psi);
    Ok(LogProfile { g, m, psi, t })
}
