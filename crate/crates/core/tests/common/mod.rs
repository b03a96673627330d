//! Test-only oracles, independent of the library's solver and kernels.
#![allow(dead_code)]

use lcmix::RngSeed;
use rand::Rng;

/// ∫ over one linear piece of width `h`, straight from the closed form.
fn segment_integral(h: f64, a: f64, b: f64) -> f64 {
    let d = b - a;
    if d == 0.0 {
        h * a.exp()
    } else {
        h * a.exp() * d.exp_m1() / d
    }
}

/// ψ(φ) for φ given at every point.
pub fn psi_direct(x: &[f64], w: &[f64], phi: &[f64]) -> f64 {
    let lin: f64 = w.iter().zip(phi).map(|(a, b)| a * b).sum();
    let int: f64 = (0..x.len() - 1)
        .map(|i| segment_integral(x[i + 1] - x[i], phi[i], phi[i + 1]))
        .sum();
    lin - int + 1.0
}

pub fn is_concave(x: &[f64], phi: &[f64]) -> bool {
    (1..x.len() - 1).all(|i| {
        let s0 = (phi[i] - phi[i - 1]) / (x[i] - x[i - 1]);
        let s1 = (phi[i + 1] - phi[i]) / (x[i + 1] - x[i]);
        s1 <= s0 + 1e-12
    })
}

/// Point values from (first value, first slope, slope decrements >= 0).
fn phi_from_params(x: &[f64], p: &[f64]) -> Vec<f64> {
    let m = x.len();
    let mut phi = vec![p[0]; m];
    let mut slope = p[1];
    for i in 1..m {
        if i >= 2 {
            slope -= p[i];
        }
        phi[i] = phi[i - 1] + slope * (x[i] - x[i - 1]);
    }
    phi
}

fn params_from_phi(x: &[f64], phi: &[f64]) -> Vec<f64> {
    let m = x.len();
    let slopes: Vec<f64> = (0..m - 1).map(|i| (phi[i + 1] - phi[i]) / (x[i + 1] - x[i])).collect();
    let mut p = vec![phi[0], slopes[0]];
    for i in 1..m - 1 {
        p.push((slopes[i - 1] - slopes[i]).max(0.0));
    }
    p
}

/// Brute-force maximizer of ψ: grid search over concave point values, then
/// compass search in (φ₁, s₁, decrements ≥ 0) coordinates. Returns the best
/// objective and point values.
pub fn brute_force_max(x: &[f64], w: &[f64]) -> (f64, Vec<f64>) {
    let m = x.len();
    let (lo, hi, step): (f64, f64, f64) = match m {
        2 => (-4.0, 4.0, 0.05),
        3 => (-4.0, 2.0, 0.05),
        _ => (-4.0, 4.0, 0.2),
    };
    let levels: Vec<f64> = {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    };
    let mut best = (f64::NEG_INFINITY, vec![0.0; m]);
    let mut idx = vec![0usize; m];
    let mut phi = vec![0.0; m];
    'outer: loop {
        for i in 0..m {
            phi[i] = levels[idx[i]];
        }
        if is_concave(x, &phi) {
            let v = psi_direct(x, w, &phi);
            if v > best.0 {
                best = (v, phi.clone());
            }
        }
        for i in 0..m {
            idx[i] += 1;
            if idx[i] < levels.len() {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    polish(x, w, best.1)
}

/// Compass search from `start`, decrements clamped at zero.
pub fn polish(x: &[f64], w: &[f64], start: Vec<f64>) -> (f64, Vec<f64>) {
    let mut p = params_from_phi(x, &start);
    let mut val = psi_direct(x, w, &phi_from_params(x, &p));
    let mut step = 0.25;
    while step > 1e-11 {
        let mut improved = false;
        for k in 0..p.len() {
            for dir in [1.0, -1.0] {
                let mut q = p.clone();
                q[k] += dir * step;
                if k >= 2 && q[k] < 0.0 {
                    q[k] = 0.0;
                }
                let v = psi_direct(x, w, &phi_from_params(x, &q));
                if v > val {
                    p = q;
                    val = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (val, phi_from_params(x, &p))
}

/// `m` sorted distinct points in [0, 1] and positive weights summing to one.
pub fn random_small_sample(seed: RngSeed, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = seed.rng();
    loop {
        let mut x: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        x.sort_by(f64::total_cmp);
        if x.windows(2).any(|p| p[1] - p[0] < 1e-3) {
            continue;
        }
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
        let t: f64 = w.iter().sum();
        return (x, w.into_iter().map(|v| v / t).collect());
    }
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}
