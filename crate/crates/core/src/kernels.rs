//! Smoothing kernels and a numerical checker for Condition C:
//!
//! * C1: symmetric, nonincreasing on `(0, inf)`, unit mass;
//! * C2: `u^2 K(u) -> 0` as `u -> inf`;
//! * C3: differentiable with bounded derivative.
//!
//! The Gaussian kernel satisfies all three and is the default. The
//! Epanechnikov and uniform kernels fail C3 and serve as negative controls.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::numerics::{integrate_with_breaks, normal_pdf, QuadratureConfig, QuadratureResult};
use crate::{Error, Result};

/// Declared Condition-C flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionC {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct TableKernel {
    // Nonnegative abscissae starting at 0, strictly increasing.
    u: Vec<f64>,
    k: Vec<f64>,
}

impl TableKernel {
    fn eval(&self, u: f64) -> f64 {
        let a = u.abs();
        let last = self.u.len() - 1;
        if a > self.u[last] {
            return 0.0;
        }
        let i = self.u.partition_point(|&x| x <= a).saturating_sub(1).min(last - 1);
        let t = (a - self.u[i]) / (self.u[i + 1] - self.u[i]);
        self.k[i] + t * (self.k[i + 1] - self.k[i])
    }

    fn deriv(&self, u: f64) -> f64 {
        let a = u.abs();
        let last = self.u.len() - 1;
        if a > self.u[last] {
            return 0.0;
        }
        let i = self.u.partition_point(|&x| x <= a).saturating_sub(1).min(last - 1);
        let slope = (self.k[i + 1] - self.k[i]) / (self.u[i + 1] - self.u[i]);
        if u < 0.0 {
            -slope
        } else {
            slope
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Gaussian,
    Epanechnikov,
    Uniform,
    Table(Arc<TableKernel>),
}

/// A symmetric probability density used as smoothing kernel.
///
/// Kernels are immutable once built and cheap to clone.
#[derive(Clone, PartialEq)]
pub struct Kernel {
    name: String,
    shape: Shape,
    l2_norm_sq: f64,
    sup_norm: f64,
    deriv_sup_norm: Option<f64>,
    support_radius: Option<f64>,
    condition_c: ConditionC,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("l2_norm_sq", &self.l2_norm_sq)
            .field("condition_c", &self.condition_c)
            .finish()
    }
}

impl Kernel {
    pub fn gaussian() -> Self {
        Self {
            name: "gaussian".into(),
            shape: Shape::Gaussian,
            l2_norm_sq: 1.0 / (2.0 * PI.sqrt()),
            sup_norm: normal_pdf(0.0),
            deriv_sup_norm: Some(normal_pdf(1.0)),
            support_radius: None,
            condition_c: ConditionC {
                c1: true,
                c2: true,
                c3: true,
            },
        }
    }

    /// `3/4 (1 - u^2)` on `[-1, 1]`.
    pub fn epanechnikov() -> Self {
        Self {
            name: "epanechnikov".into(),
            shape: Shape::Epanechnikov,
            l2_norm_sq: 0.6,
            sup_norm: 0.75,
            deriv_sup_norm: Some(1.5),
            support_radius: Some(1.0),
            condition_c: ConditionC {
                c1: true,
                c2: true,
                c3: false,
            },
        }
    }

    /// Unit density on `[-1/2, 1/2]`.
    pub fn uniform() -> Self {
        Self {
            name: "uniform".into(),
            shape: Shape::Uniform,
            l2_norm_sq: 1.0,
            sup_norm: 1.0,
            deriv_sup_norm: None,
            support_radius: Some(0.5),
            condition_c: ConditionC {
                c1: true,
                c2: true,
                c3: false,
            },
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::gaussian()),
            "epanechnikov" => Ok(Self::epanechnikov()),
            "uniform" => Ok(Self::uniform()),
            other => Err(Error::Config(format!(
                "unknown kernel {other:?} (expected gaussian | epanechnikov | uniform)"
            ))),
        }
    }

    /// Kernel given by its values on a half-line grid `0 = u_0 < u_1 < ... < u_m`,
    /// mirrored to negative arguments, linearly interpolated and zero beyond
    /// `u_m`. The table is rescaled to unit mass.
    pub fn from_table(name: &str, table: &[(f64, f64)]) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::Domain("kernel table needs at least two rows".into()));
        }
        if table[0].0 != 0.0 {
            return Err(Error::Domain("kernel table must start at u = 0".into()));
        }
        if table.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Domain(
                "kernel table abscissae must be strictly increasing".into(),
            ));
        }
        if table.iter().any(|&(u, k)| !u.is_finite() || !k.is_finite() || k < 0.0) {
            return Err(Error::Domain(
                "kernel table values must be finite and nonnegative".into(),
            ));
        }
        let half_mass: f64 = table
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum();
        if !(half_mass > 0.0) {
            return Err(Error::Domain("kernel table has zero mass".into()));
        }
        let scale = 1.0 / (2.0 * half_mass);
        let u: Vec<f64> = table.iter().map(|r| r.0).collect();
        let k: Vec<f64> = table.iter().map(|r| r.1 * scale).collect();
        let tail_jump = *k.last().expect("nonempty") > 0.0;
        let max_slope = u
            .windows(2)
            .zip(k.windows(2))
            .map(|(uw, kw)| ((kw[1] - kw[0]) / (uw[1] - uw[0])).abs())
            .fold(0.0, f64::max);
        let monotone = k.windows(2).all(|w| w[1] <= w[0]);
        let table = Arc::new(TableKernel { u, k });
        let radius = *table.u.last().expect("nonempty");

        let mut kernel = Self {
            name: name.to_string(),
            shape: Shape::Table(Arc::clone(&table)),
            l2_norm_sq: f64::NAN,
            sup_norm: table.k.iter().copied().fold(0.0, f64::max),
            deriv_sup_norm: if tail_jump { None } else { Some(max_slope) },
            support_radius: Some(radius),
            condition_c: ConditionC {
                c1: monotone,
                c2: true,
                // piecewise-linear interpolation has corners at the nodes
                c3: false,
            },
        };
        kernel.l2_norm_sq = kernel.l2_norm_by_quadrature()?.value;
        Ok(kernel)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian => normal_pdf(u),
            Shape::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            Shape::Uniform => {
                if u.abs() <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Table(t) => t.eval(u),
        }
    }

    /// `K'(u)`; at points where `K` is not differentiable, the one-sided
    /// derivative from the inside of the support.
    pub fn deriv(&self, u: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian => -u * normal_pdf(u),
            Shape::Epanechnikov => {
                if u.abs() <= 1.0 {
                    -1.5 * u
                } else {
                    0.0
                }
            }
            Shape::Uniform => 0.0,
            Shape::Table(t) => t.deriv(u),
        }
    }

    /// `int K(u)^2 du`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `sup |K'|`, or `None` when the derivative is unbounded (jumps).
    pub fn deriv_sup_norm(&self) -> Option<f64> {
        self.deriv_sup_norm
    }

    /// Radius of the support, `None` for unbounded support.
    pub fn support_radius(&self) -> Option<f64> {
        self.support_radius
    }

    pub fn condition_c(&self) -> ConditionC {
        self.condition_c
    }

    /// Scale beyond which the kernel counts as "tail" for the C2 check.
    pub fn effective_radius(&self) -> f64 {
        self.support_radius.unwrap_or(1.0)
    }

    /// Points where `K` fails to be differentiable (support edges, table nodes).
    pub fn non_smooth_points(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Gaussian => vec![],
            Shape::Epanechnikov => vec![-1.0, 1.0],
            Shape::Uniform => vec![-0.5, 0.5],
            Shape::Table(t) => {
                let mut pts: Vec<f64> = t.u.iter().rev().map(|u| -u).collect();
                pts.extend(t.u.iter().skip(1));
                pts.dedup();
                pts
            }
        }
    }

    /// Interval carrying all of the mass that matters numerically.
    pub(crate) fn integration_range(&self) -> (f64, f64) {
        let r = self.support_radius.unwrap_or(40.0);
        (-r, r)
    }

    pub(crate) fn integration_breaks(&self) -> Vec<f64> {
        let (lo, hi) = self.integration_range();
        let mut b = vec![lo];
        b.extend(self.non_smooth_points().into_iter().filter(|p| *p > lo && *p < hi));
        if !b.contains(&0.0) {
            b.push(0.0);
        }
        b.push(hi);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `int K` by adaptive quadrature, independent of any closed form.
    pub fn mass_by_quadrature(&self) -> Result<QuadratureResult> {
        integrate_with_breaks(
            |u| self.eval(u),
            &self.integration_breaks(),
            &QuadratureConfig::default(),
        )
    }

    /// `int u^2 K(u) du`.
    pub fn second_moment(&self) -> Result<f64> {
        match &self.shape {
            Shape::Gaussian => Ok(1.0),
            Shape::Epanechnikov => Ok(0.2),
            Shape::Uniform => Ok(1.0 / 12.0),
            Shape::Table(_) => Ok(integrate_with_breaks(
                |u| u * u * self.eval(u),
                &self.integration_breaks(),
                &QuadratureConfig::default(),
            )?
            .value),
        }
    }

    /// `int K^2` by adaptive quadrature.
    pub fn l2_norm_by_quadrature(&self) -> Result<QuadratureResult> {
        integrate_with_breaks(
            |u| {
                let k = self.eval(u);
                k * k
            },
            &self.integration_breaks(),
            &QuadratureConfig::default(),
        )
    }
}

pub fn eval_kernel(kernel: &Kernel, u: f64) -> f64 {
    kernel.eval(u)
}

/// `int K^2(u) du`: closed form for the built-ins, quadrature (done at
/// construction) for tables.
pub fn kernel_l2_norm(kernel: &Kernel) -> Result<f64> {
    let v = kernel.l2_norm_sq();
    if v.is_finite() {
        Ok(v)
    } else {
        kernel.l2_norm_by_quadrature().map(|r| r.value)
    }
}

/// Sampling plan for [`verify_condition_c`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
    pub tail_probes: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width: 50.0,
            points: 10_001,
            tail_probes: vec![1e2, 1e3, 1e4, 1e6],
        }
    }
}

impl GridSpec {
    /// Clamp to the minimum coverage: `[-50, 50]` with `10^4` points.
    pub fn normalized(&self) -> Self {
        Self {
            half_width: self.half_width.max(50.0),
            points: self.points.max(10_000),
            tail_probes: self.tail_probes.clone(),
        }
    }

    fn nodes(&self) -> Vec<f64> {
        let n = self.points;
        let w = self.half_width;
        (0..n).map(|i| -w + 2.0 * w * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCReport {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    /// First point violating C1 (asymmetry or increase on the half line).
    pub c1_violation: Option<f64>,
    pub c2_violation: Option<f64>,
    pub c3_violation: Option<f64>,
    pub mass: f64,
    pub max_abs_slope: f64,
}

const SYMMETRY_TOL: f64 = 1e-12;
const MONOTONE_SLACK: f64 = 1e-15;
const MASS_TOL: f64 = 1e-8;
const C2_THRESHOLD: f64 = 1e-6;
const KINK_TOL: f64 = 1e-4;

/// Check C1-C3 numerically on a grid, reporting the first violating point
/// for each failed condition.
pub fn verify_condition_c(kernel: &Kernel, grid: &GridSpec) -> ConditionCReport {
    let grid = grid.normalized();
    let nodes = grid.nodes();
    let k: Vec<f64> = nodes.iter().map(|&u| kernel.eval(u)).collect();

    // C1
    let mass = kernel.mass_by_quadrature().map(|r| r.value).unwrap_or(f64::NAN);
    let mut c1_violation = None;
    for (&u, &ku) in nodes.iter().zip(&k) {
        let mirror = kernel.eval(-u);
        if (ku - mirror).abs() > SYMMETRY_TOL * ku.abs().max(1.0) {
            c1_violation = Some(u);
            break;
        }
    }
    if c1_violation.is_none() {
        for i in 0..nodes.len() - 1 {
            if nodes[i] > 0.0 && k[i + 1] > k[i] + MONOTONE_SLACK {
                c1_violation = Some(nodes[i + 1]);
                break;
            }
        }
    }
    if c1_violation.is_none() && !((mass - 1.0).abs() <= MASS_TOL) {
        c1_violation = Some(0.0);
    }

    // C2
    let threshold = 10.0 * (1.0 + kernel.effective_radius());
    let mut c2_violation = None;
    let grid_tail = nodes.iter().copied().filter(|&u| u >= threshold);
    let probes = [threshold, 2.0 * threshold, 5.0 * threshold]
        .into_iter()
        .chain(grid.tail_probes.iter().copied().filter(|&u| u >= threshold))
        .chain(grid_tail);
    for u in probes {
        if !(u * u * kernel.eval(u) < C2_THRESHOLD) {
            c2_violation = Some(u);
            break;
        }
    }

    // C3: localize every slope change on successively finer grids. A smooth
    // kernel's slope change shrinks with the spacing; a corner keeps a finite
    // one and a jump makes it blow up.
    let h = nodes[1] - nodes[0];
    let slopes: Vec<f64> = k.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let max_abs_slope = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let mut c3_violation = None;
    for i in 1..slopes.len() {
        if (slopes[i] - slopes[i - 1]).abs() <= 1e-9 {
            continue;
        }
        if let Some(p) = localize_corner(kernel, nodes[i - 1], nodes[i + 1]) {
            c3_violation = Some(p);
            break;
        }
    }
    if c3_violation.is_none() {
        match kernel.deriv_sup_norm() {
            None => c3_violation = Some(f64::INFINITY),
            Some(bound) => {
                if let Some(i) = slopes.iter().position(|s| s.abs() > bound * (1.0 + 1e-6) + 1e-12) {
                    c3_violation = Some(nodes[i]);
                }
            }
        }
    }

    ConditionCReport {
        c1: c1_violation.is_none(),
        c2: c2_violation.is_none(),
        c3: c3_violation.is_none(),
        c1_violation,
        c2_violation,
        c3_violation,
        mass,
        max_abs_slope,
    }
}

fn localize_corner(kernel: &Kernel, mut lo: f64, mut hi: f64) -> Option<f64> {
    const CELLS: usize = 20;
    const LEVELS: usize = 5;
    let mut change = 0.0;
    let mut at = 0.5 * (lo + hi);
    for _ in 0..LEVELS {
        let h = (hi - lo) / CELLS as f64;
        if h <= 0.0 {
            break;
        }
        let xs: Vec<f64> = (0..=CELLS).map(|j| lo + h * j as f64).collect();
        let slopes: Vec<f64> = xs
            .windows(2)
            .map(|w| (kernel.eval(w[1]) - kernel.eval(w[0])) / h)
            .collect();
        change = 0.0;
        for j in 1..slopes.len() {
            let d = (slopes[j] - slopes[j - 1]).abs();
            if d > change {
                change = d;
                at = xs[j];
            }
        }
        lo = at - h;
        hi = at + h;
    }
    (change > KINK_TOL).then_some(at)
}
