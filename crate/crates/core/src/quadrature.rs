//! Quadrature for smooth complex-valued integrands.
//!
//! Two tools: a globally adaptive Gauss–Kronrod (7/15) integrator for single
//! integrals, and a composite Gauss–Legendre panel grid used where an outer
//! integral needs prefix integrals at its own nodes.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Hard cap on the number of subintervals (adaptive) or panel doublings
    /// (composite).
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-13,
            max_subdivisions: 4000,
        }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub(crate) fn target(&self, value: f64, l1: f64) -> f64 {
        // Tolerances below the rounding floor of the integrand are unreachable.
        self.abs_tol
            .max(self.rel_tol * value)
            .max(ROUNDOFF * l1)
    }
}

const ROUNDOFF: f64 = 50.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    l1: f64,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut l1 = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron += (f1 + f2) * WGK[j];
        l1 += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    Segment {
        a,
        b,
        value: kron * h,
        error: ((kron - gauss) * h).norm(),
        l1: l1 * h.abs(),
    }
}

/// Integrates `f` over `[a, b]`, splitting first at `breakpoints` (points
/// outside `(a, b)` are ignored), then bisecting the worst segment until the
/// error estimate meets the tolerance.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut edges = vec![a];
    edges.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    edges.push(b);
    edges.sort_by(f64::total_cmp);

    let mut segs: Vec<Segment> = edges.windows(2).map(|w| gk15(&f, w[0], w[1])).collect();
    let mut evaluations = 15 * segs.len();
    loop {
        let value: Complex64 = segs.iter().map(|s| s.value).sum();
        let error: f64 = segs.iter().map(|s| s.error).sum();
        let l1: f64 = segs.iter().map(|s| s.l1).sum();
        let target = cfg.target(value.norm(), l1);
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                evaluations,
            });
        }
        if segs.len() >= cfg.max_subdivisions {
            return Err(Error::Quadrature {
                tol: target,
                estimate: error,
                evaluations,
            });
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segs.push(gk15(&f, s.a, mid));
        segs.push(gk15(&f, mid, s.b));
        evaluations += 30;
    }
}

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_m.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if m == 0 { 1.0 } else { p1 };
    let d = m as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite Gauss–Legendre rule over `[0, t]`: equal-width panels within each
/// smooth segment, `order` nodes per panel.
#[derive(Debug, Clone)]
pub struct PanelGrid {
    panels: Vec<(f64, f64)>,
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
}

pub const PANEL_ORDER: usize = 12;

impl PanelGrid {
    /// `per_segment` panels in each of the smooth segments delimited by `kinks`.
    pub fn new(t: f64, kinks: &[f64], per_segment: usize, order: usize) -> Self {
        let mut edges = vec![0.0];
        edges.extend(kinks.iter().copied().filter(|&k| k > 0.0 && k < t));
        edges.push(t);
        let mut panels = Vec::with_capacity(per_segment * (edges.len() - 1));
        for w in edges.windows(2) {
            let h = (w[1] - w[0]) / per_segment as f64;
            for i in 0..per_segment {
                let a = w[0] + i as f64 * h;
                let b = if i + 1 == per_segment { w[1] } else { a + h };
                panels.push((a, b));
            }
        }
        let (ref_nodes, ref_weights) = gauss_legendre(order);
        Self {
            panels,
            ref_nodes,
            ref_weights,
        }
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// Every node of the rule with its weight, panel by panel.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.panels.len() * self.ref_nodes.len());
        for &(a, b) in &self.panels {
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in self.ref_nodes.iter().zip(&self.ref_weights) {
                out.push((c + h * x, h * w));
            }
        }
        out
    }

    /// Integral of `h` over `[lo, hi]` with one Gauss–Legendre panel.
    fn panel_integral<F: Fn(f64) -> Complex64>(&self, h: &F, lo: f64, hi: f64) -> Complex64 {
        let (c, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.ref_nodes.iter().zip(&self.ref_weights) {
            acc += h(c + half * x) * *w;
        }
        acc * half
    }

    /// `∫_0^x h` for every node `x` of the grid (same order as [`nodes`]),
    /// plus the full integral `∫_0^t h`.
    ///
    /// [`nodes`]: PanelGrid::nodes
    pub fn prefix_integrals<F: Fn(f64) -> Complex64>(&self, h: &F) -> (Vec<Complex64>, Complex64) {
        let mut out = Vec::with_capacity(self.panels.len() * self.ref_nodes.len());
        let mut base = Complex64::new(0.0, 0.0);
        for &(a, b) in &self.panels {
            let (c, half) = (0.5 * (a + b), 0.5 * (b - a));
            for x in &self.ref_nodes {
                let node = c + half * x;
                out.push(base + self.panel_integral(h, a, node));
            }
            base += self.panel_integral(h, a, b);
        }
        (out, base)
    }
}
