//! One-dimensional numerics shared by the modules: adaptive
//! Gauss–Kronrod quadrature, bracketed bisection, and cubic Hermite
//! tables for fast re-evaluation of integrated profiles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate, error estimate, and the integral of `|f|`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (l, r) = (f(c - dx), f(c + dx));
        kronrod += WGK[j] * (l + r);
        abs += WGK[j] * (l.abs() + r.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (l + r);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), (abs * h).abs())
}

/// Globally adaptive 15-point Gauss–Kronrod integration of `f` over
/// `[a, b]`: the panel with the largest error estimate is bisected until
/// the summed estimate drops below `max(abs_tol, rel_tol * |I|)`, the
/// estimate reaches roundoff level, or `MAX_PANELS` panels exist.
/// Integrable endpoint singularities are handled by repeated bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut heap = BinaryHeap::new();
    let (v, e, r) = gk15(&f, a, b);
    let (mut total, mut err, mut abs) = (v, e, r);
    heap.push(Panel {
        a,
        b,
        value: v,
        err: e,
        abs: r,
    });
    while heap.len() < MAX_PANELS {
        let tol = abs_tol.max(rel_tol * total.abs());
        if !(err > tol.max(50.0 * f64::EPSILON * abs)) {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a.min(worst.b) && m < worst.a.max(worst.b)) {
            heap.push(Panel { err: 0.0, ..worst });
            err -= worst.err;
            continue;
        }
        let (v1, e1, r1) = gk15(&f, worst.a, m);
        let (v2, e2, r2) = gk15(&f, m, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.err;
        abs += r1 + r2 - worst.abs;
        heap.push(Panel {
            a: worst.a,
            b: m,
            value: v1,
            err: e1,
            abs: r1,
        });
        heap.push(Panel {
            a: m,
            b: worst.b,
            value: v2,
            err: e2,
            abs: r2,
        });
    }
    // Re-sum to shed the drift of the running updates.
    heap.iter().map(|p| p.value).sum()
}

const MAX_PANELS: usize = 4000;

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Bisection on a sign-changing bracket, run until the bracket cannot
/// shrink further in floating point. Returns the endpoint with the
/// smaller residual.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut fb_abs = fb.abs();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb_abs = fm.abs();
        }
    }
    if fa.abs() <= fb_abs {
        a
    } else {
        b
    }
}

/// Piecewise cubic Hermite interpolant on a uniform grid, built from
/// exact values and exact derivatives at the nodes.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    /// Tabulates `f` on `n + 1` uniform nodes of `[a, b]`; `value_at`
    /// receives the previous node, the node, and the previous value so
    /// cumulative integrals can be built incrementally.
    pub fn build(
        a: f64,
        b: f64,
        n: usize,
        first: f64,
        mut step: impl FnMut(f64, f64, f64) -> f64,
        slope: impl Fn(f64) -> f64,
    ) -> Self {
        let dx = (b - a) / n as f64;
        let mut values = Vec::with_capacity(n + 1);
        let mut slopes = Vec::with_capacity(n + 1);
        values.push(first);
        slopes.push(slope(a));
        for i in 1..=n {
            let x_prev = a + (i - 1) as f64 * dx;
            let x = a + i as f64 * dx;
            let v = step(x_prev, x, values[i - 1]);
            values.push(v);
            slopes.push(slope(x));
        }
        Self {
            x0: a,
            dx,
            values,
            slopes,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.dx * (self.values.len() - 1) as f64)
    }

    /// Evaluates the interpolant; callers stay within [`Self::domain`]
    /// (points outside are extrapolated from the end cell).
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.values.len() - 2;
        let t = (x - self.x0) / self.dx;
        let i = (t.floor().max(0.0) as usize).min(last);
        let u = t - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * self.dx, self.slopes[i + 1] * self.dx);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * d1
    }
}
