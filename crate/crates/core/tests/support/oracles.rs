//! Reference implementations used only by tests. Nothing here shares code with
//! the library's evaluation paths.
#![allow(dead_code)]

use std::f64::consts::PI;

/// n-point Gauss–Legendre nodes and weights on [−1, 1] (Newton on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            let dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                nodes[i] = z;
                weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (nodes, weights)
}

pub fn composite_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * width;
        for (xi, wi) in x.iter().zip(&w) {
            sum += wi * f(c + 0.5 * width * xi);
        }
    }
    0.5 * width * sum
}

/// J₀(x) = (1/π)∫₀^π cos(x sin θ) dθ by the trapezoid rule, which converges
/// geometrically for this periodic integrand.
pub fn j0(x: f64) -> f64 {
    let m = (2.0 * (x.abs() + 40.0)) as usize;
    let step = PI / m as f64;
    let mut sum = 0.0;
    for j in 0..m {
        sum += (x * (j as f64 * step).sin()).cos();
    }
    sum / m as f64
}

/// Schläfli: Y₀(x) = (1/π)∫₀^π sin(x sin θ) dθ − (2/π)∫₀^∞ e^{−x sinh t} dt.
pub fn y0(x: f64) -> f64 {
    assert!(x > 0.0);
    let panels = (x as usize) + 16;
    let first = composite_gl(|t| (x * t.sin()).sin(), 0.0, PI, panels, 20);
    let t_max = (60.0 / x).asinh();
    let second = composite_gl(|t| (-x * t.sinh()).exp(), 0.0, t_max, 400, 20);
    first / PI - 2.0 * second / PI
}

/// Root of `f` in [lo, hi] by bisection.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Composite Simpson with `n` (rounded up to even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Simpson over [0, ∞) truncated at 50/δ, with [1 − h, 1 + h] removed.
fn excised(x: f64, delta: f64, h: f64) -> f64 {
    let g = |xi: f64| xi.powi(3) * j0(x * xi) * (-delta * xi).exp() / (xi * xi - 1.0);
    let cutoff = (50.0 / delta).max(2.0);
    let coarse = 1e-3;
    let fine = h / 100.0;
    let n_near = ((0.5 - h) / fine) as usize;
    simpson(g, 0.0, 0.5, (0.5 / coarse) as usize)
        + simpson(g, 0.5, 1.0 - h, n_near)
        + simpson(g, 1.0 + h, 1.5, n_near)
        + simpson(g, 1.5, cutoff, ((cutoff - 1.5) / coarse) as usize)
}

/// Principal value by symmetric excision: the excised integral behaves as
/// PV − c·h + O(h³), so one Richardson step on (h, h/2) removes the linear term.
pub fn pv_kernel(x: f64, delta: f64) -> f64 {
    let h = 4e-3;
    2.0 * excised(x, delta, 0.5 * h) - excised(x, delta, h)
}

pub fn regular_kernel(x: f64, delta: f64) -> f64 {
    let cutoff = 50.0 / delta;
    let g = |xi: f64| xi.powi(3) * j0(x * xi) * (-delta * xi).exp() / (xi * xi + 1.0);
    simpson(g, 0.0, cutoff, (cutoff / 1e-3) as usize)
}
