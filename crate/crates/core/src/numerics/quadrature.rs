//! Globally adaptive Gauss-Kronrod quadrature.
//!
//! One dimension uses the 10/21-point Gauss-Kronrod pair, two dimensions the
//! tensor product of the 7/15-point pair. In both cases the region with the
//! largest error estimate is bisected until the summed estimate drops below
//! the absolute tolerance or the subdivision cap is hit. Everything is
//! sequential and deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_subdivisions: 1_000_000,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, lo, hi)
    }
}

const K21_NODES: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const K21_WEIGHTS: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
// Gauss weights for the odd-indexed Kronrod nodes.
const G10_WEIGHTS: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

const K15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Full 15-point Kronrod rule on [-1, 1] as (node, kronrod weight, gauss weight).
fn k15_rule() -> [(f64, f64, f64); 15] {
    let mut rule = [(0.0, 0.0, 0.0); 15];
    for i in 0..7 {
        let g = if i % 2 == 1 { G7_WEIGHTS[i / 2] } else { 0.0 };
        rule[i] = (-K15_NODES[i], K15_WEIGHTS[i], g);
        rule[14 - i] = (K15_NODES[i], K15_WEIGHTS[i], g);
    }
    rule[7] = (0.0, K15_WEIGHTS[7], G7_WEIGHTS[3]);
    rule
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = K21_WEIGHTS[10] * fc;
    let mut gauss = 0.0;
    for i in 0..10 {
        let dx = half * K21_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += K21_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G10_WEIGHTS[i / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    integrate_with_breaks(f, &[a, b], cfg)
}

/// Integrate `f` over `[breaks[0], breaks[last]]`, starting from the given
/// partition. Useful when the integrand has known kinks or jumps.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    if breaks.len() < 2 {
        return Err(Error::Domain("integration needs at least two break points".into()));
    }
    if breaks.iter().any(|x| !x.is_finite()) || breaks.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("integration limits must be finite and ordered".into()));
    }
    let span = breaks[breaks.len() - 1] - breaks[0];
    if span == 0.0 {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let min_width = span * 1e-14;

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Segment> = Vec::new();
    let mut evaluations = 0usize;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(gk21(&f, w[0], w[1]));
            evaluations += 21;
        }
    }
    let mut subdivisions = 0usize;

    loop {
        let total_err: f64 = heap.iter().chain(frozen.iter()).map(|s| s.error).sum();
        if total_err <= cfg.abs_tol {
            break;
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => {
                return Err(cap_error(&heap, &frozen, evaluations, cfg.abs_tol));
            }
        };
        if worst.b - worst.a < min_width {
            frozen.push(worst);
            continue;
        }
        if subdivisions >= cfg.max_subdivisions {
            heap.push(worst);
            return Err(cap_error(&heap, &frozen, evaluations, cfg.abs_tol));
        }
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(gk21(&f, worst.a, mid));
        heap.push(gk21(&f, mid, worst.b));
        evaluations += 42;
        subdivisions += 1;
        // Only rescan the full error sum when the largest piece alone is
        // small; otherwise keep bisecting.
        while let Some(top) = heap.peek() {
            if top.error * 4.0 <= cfg.abs_tol || subdivisions >= cfg.max_subdivisions {
                break;
            }
            let s = heap.pop().expect("peeked");
            if s.b - s.a < min_width {
                frozen.push(s);
                continue;
            }
            let mid = 0.5 * (s.a + s.b);
            heap.push(gk21(&f, s.a, mid));
            heap.push(gk21(&f, mid, s.b));
            evaluations += 42;
            subdivisions += 1;
        }
    }

    Ok(summarize(
        heap.iter().chain(frozen.iter()).map(|s| (s.a, s.value, s.error)),
        evaluations,
    ))
}

fn summarize<I: Iterator<Item = (f64, f64, f64)>>(pieces: I, evaluations: usize) -> QuadratureResult {
    // Sum in left-to-right order so the result does not depend on heap layout.
    let mut v: Vec<(f64, f64, f64)> = pieces.collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let value = v.iter().map(|p| p.1).sum();
    let abs_error_estimate = v.iter().map(|p| p.2).sum();
    QuadratureResult {
        value,
        abs_error_estimate,
        evaluations,
    }
}

fn cap_error(heap: &BinaryHeap<Segment>, frozen: &[Segment], evaluations: usize, tol: f64) -> Error {
    let partial = summarize(
        heap.iter().chain(frozen.iter()).map(|s| (s.a, s.value, s.error)),
        evaluations,
    );
    Error::QuadratureCap {
        partial,
        tolerance: tol,
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    rect: Rect,
    value: f64,
    error: f64,
    split_x: bool,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.rect.x0.total_cmp(&self.rect.x0))
            .then_with(|| other.rect.y0.total_cmp(&self.rect.y0))
    }
}

fn tensor_gk15<F: Fn(f64, f64) -> f64>(f: &F, rule: &[(f64, f64, f64); 15], rect: Rect) -> Cell {
    let cx = 0.5 * (rect.x0 + rect.x1);
    let hx = 0.5 * (rect.x1 - rect.x0);
    let cy = 0.5 * (rect.y0 + rect.y1);
    let hy = 0.5 * (rect.y1 - rect.y0);
    let (mut kk, mut gk, mut kg, mut gg) = (0.0, 0.0, 0.0, 0.0);
    for &(nx, kx, gx) in rule {
        let x = cx + hx * nx;
        let (mut row_k, mut row_g) = (0.0, 0.0);
        for &(ny, ky, gy) in rule {
            let v = f(x, cy + hy * ny);
            row_k += ky * v;
            row_g += gy * v;
        }
        kk += kx * row_k;
        kg += kx * row_g;
        gk += gx * row_k;
        gg += gx * row_g;
    }
    let area = hx * hy;
    let value = kk * area;
    let error = ((kk - gg) * area).abs();
    let ex = ((kk - gk) * area).abs();
    let ey = ((kk - kg) * area).abs();
    let split_x = if ex == ey { hx >= hy } else { ex > ey };
    Cell {
        rect,
        value,
        error,
        split_x,
    }
}

/// Integrate `f` over a rectangle to absolute tolerance `tol`, with the
/// default subdivision cap.
pub fn quadrature_2d<F: Fn(f64, f64) -> f64>(f: F, rect: Rect, tol: f64) -> Result<QuadratureResult> {
    let cfg = QuadratureConfig {
        abs_tol: tol,
        max_subdivisions: 200_000,
    };
    quadrature_2d_with_breaks(f, rect, &[], &[], &cfg)
}

/// Two-dimensional adaptive cubature starting from the grid induced by the
/// interior break lines `xs` and `ys` (values outside the rectangle are
/// ignored).
pub fn quadrature_2d_with_breaks<F: Fn(f64, f64) -> f64>(
    f: F,
    rect: Rect,
    xs: &[f64],
    ys: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    let finite = [rect.x0, rect.x1, rect.y0, rect.y1].iter().all(|v| v.is_finite());
    if !finite || rect.x1 < rect.x0 || rect.y1 < rect.y0 {
        return Err(Error::Domain("integration rectangle must be finite and ordered".into()));
    }
    if rect.x1 == rect.x0 || rect.y1 == rect.y0 {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let grid = |lo: f64, hi: f64, cuts: &[f64]| -> Vec<f64> {
        let mut g = vec![lo, hi];
        g.extend(cuts.iter().copied().filter(|c| *c > lo && *c < hi));
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    };
    let gx = grid(rect.x0, rect.x1, xs);
    let gy = grid(rect.y0, rect.y1, ys);
    let min_wx = (rect.x1 - rect.x0) * 1e-12;
    let min_wy = (rect.y1 - rect.y0) * 1e-12;

    let rule = k15_rule();
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Cell> = Vec::new();
    let mut evaluations = 0usize;
    for wx in gx.windows(2) {
        for wy in gy.windows(2) {
            heap.push(tensor_gk15(&f, &rule, Rect::new(wx[0], wx[1], wy[0], wy[1])));
            evaluations += 225;
        }
    }
    let mut subdivisions = 0usize;

    let pieces = |heap: &BinaryHeap<Cell>, frozen: &[Cell]| -> Vec<(f64, f64, f64, f64)> {
        let mut v: Vec<_> = heap
            .iter()
            .chain(frozen.iter())
            .map(|c| (c.rect.x0, c.rect.y0, c.value, c.error))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    };
    let finish = |v: Vec<(f64, f64, f64, f64)>, evaluations: usize| QuadratureResult {
        value: v.iter().map(|p| p.2).sum(),
        abs_error_estimate: v.iter().map(|p| p.3).sum(),
        evaluations,
    };

    loop {
        let total_err: f64 = heap.iter().chain(frozen.iter()).map(|c| c.error).sum();
        if total_err <= cfg.abs_tol {
            break;
        }
        let mut progressed = false;
        while let Some(top) = heap.peek() {
            if progressed && top.error * 4.0 <= cfg.abs_tol {
                break;
            }
            if subdivisions >= cfg.max_subdivisions {
                let partial = finish(pieces(&heap, &frozen), evaluations);
                return Err(Error::QuadratureCap {
                    partial,
                    tolerance: cfg.abs_tol,
                });
            }
            let c = heap.pop().expect("peeked");
            let r = c.rect;
            let (a, b) = if c.split_x && r.x1 - r.x0 > min_wx {
                let m = 0.5 * (r.x0 + r.x1);
                (Rect::new(r.x0, m, r.y0, r.y1), Rect::new(m, r.x1, r.y0, r.y1))
            } else if r.y1 - r.y0 > min_wy {
                let m = 0.5 * (r.y0 + r.y1);
                (Rect::new(r.x0, r.x1, r.y0, m), Rect::new(r.x0, r.x1, m, r.y1))
            } else {
                frozen.push(c);
                continue;
            };
            heap.push(tensor_gk15(&f, &rule, a));
            heap.push(tensor_gk15(&f, &rule, b));
            evaluations += 450;
            subdivisions += 1;
            progressed = true;
        }
        if !progressed {
            let partial = finish(pieces(&heap, &frozen), evaluations);
            return Err(Error::QuadratureCap {
                partial,
                tolerance: cfg.abs_tol,
            });
        }
    }
    Ok(finish(pieces(&heap, &frozen), evaluations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_reference_integrals() {
        let cfg = QuadratureConfig::default();
        let r = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!(r.abs_error_estimate >= 0.0);
        let r = integrate(|x| (-x * x).exp(), -10.0, 10.0, &cfg).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn step_function_converges_with_and_without_breaks() {
        let cfg = QuadratureConfig::default();
        let step = |x: f64| if x < 0.3 { 1.0 } else { 0.0 };
        let plain = integrate(step, 0.0, 1.0, &cfg).unwrap();
        assert!((plain.value - 0.3).abs() < 1e-10);
        let split = integrate_with_breaks(step, &[0.0, 0.3, 1.0], &cfg).unwrap();
        assert!((split.value - 0.3).abs() < 1e-15);
        assert!(split.evaluations < plain.evaluations);
    }

    #[test]
    fn cap_exceeded_reports_partial_result() {
        let cfg = QuadratureConfig {
            abs_tol: 1e-14,
            max_subdivisions: 3,
        };
        match integrate(|x: f64| x.abs().sqrt().recip().min(1e6), -1.0, 1.0, &cfg) {
            Err(Error::QuadratureCap { partial, tolerance }) => {
                assert_eq!(tolerance, 1e-14);
                assert!(partial.abs_error_estimate > 1e-14);
                assert!(partial.evaluations > 0);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn two_dimensional_basics() {
        let unit = Rect::square(0.0, 1.0);
        let area = quadrature_2d(|_, _| 1.0, unit, 1e-12).unwrap();
        assert!((area.value - 1.0).abs() < 1e-14);
        let prod = quadrature_2d(|u, v| u * v, unit, 1e-12).unwrap();
        assert!((prod.value - 0.25).abs() < 1e-14);
    }

    #[test]
    fn cubic_polynomials_are_exact_on_one_cell() {
        let rect = Rect::new(-1.5, 2.0, 0.5, 3.0);
        let f = |x: f64, y: f64| 1.0 - 2.0 * x + 3.0 * x * y - x.powi(3) + 0.5 * y.powi(3) - x * y * y;
        // antiderivative by hand
        let fx =
            |x: f64, y: f64| x - x * x + 1.5 * x * x * y - 0.25 * x.powi(4) + 0.5 * x * y.powi(3) - 0.5 * x * x * y * y;
        let exact_inner = |y: f64| fx(rect.x1, y) - fx(rect.x0, y);
        let r1d = integrate(exact_inner, rect.y0, rect.y1, &QuadratureConfig::with_tol(1e-14)).unwrap();
        let r = quadrature_2d(f, rect, 1e-12).unwrap();
        assert!((r.value - r1d.value).abs() < 1e-12, "{} vs {}", r.value, r1d.value);
        assert_eq!(r.evaluations, 225);
    }

    #[test]
    fn break_lines_are_respected() {
        let rect = Rect::square(-1.0, 1.0);
        let f = |x: f64, y: f64| if x > 0.0 && y > 0.0 { 1.0 } else { 0.0 };
        let r = quadrature_2d_with_breaks(f, rect, &[0.0], &[0.0], &QuadratureConfig::with_tol(1e-12)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }
}
