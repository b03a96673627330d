//! The exponential-integral kernel `J(a, b) = ∫₀¹ exp((1-t)a + tb) dt` and its
//! derivatives.
//!
//! A linear piece of `φ` on `[x, x + h]` contributes `h · J(φ(x), φ(x + h))`
//! to `∫ exp φ`. Every quantity here is evaluated with the larger endpoint
//! factored out, so nothing overflows for `|b - a|` large and `e^max(a, b)`
//! is the only exponential of an input.

/// Below this gap `J` uses its Taylor series.
const J_SERIES_GAP: f64 = 1e-5;
/// Below this gap the moment integrals use their power series.
const MOMENT_SERIES_GAP: f64 = 1.0;

/// `J(a, b)`; equals `e^a` when `a == b`.
pub fn j_value(a: f64, b: f64) -> f64 {
    let (hi, gap) = if a >= b { (a, a - b) } else { (b, b - a) };
    hi.exp() * decay_mean(gap)
}

/// `∫₀¹ e^{-d s} ds = (1 - e^{-d}) / d` for `d >= 0`.
fn decay_mean(d: f64) -> f64 {
    if d < J_SERIES_GAP {
        1.0 - d / 2.0 + d * d / 6.0 - d * d * d / 24.0
    } else {
        -(-d).exp_m1() / d
    }
}

/// `[∫ e^{-ds}, ∫ s e^{-ds}, ∫ s² e^{-ds}]` over `s ∈ [0, 1]`, `d >= 0`.
fn decay_moments(d: f64) -> [f64; 3] {
    if d < MOMENT_SERIES_GAP {
        // Σ_n (-d)^n / (n! (n + k + 1))
        let mut out = [0.0; 3];
        let mut term = 1.0; // (-d)^n / n!
        for n in 0..40 {
            let nf = n as f64;
            out[0] += term / (nf + 1.0);
            out[1] += term / (nf + 2.0);
            out[2] += term / (nf + 3.0);
            term *= -d / (nf + 1.0);
            if term.abs() < 1e-18 {
                break;
            }
        }
        out
    } else {
        let e = (-d).exp();
        let d2 = d * d;
        [
            -(-d).exp_m1() / d,
            (1.0 - e * (1.0 + d)) / d2,
            (2.0 - e * (d2 + 2.0 * d + 2.0)) / (d2 * d),
        ]
    }
}

/// First and second partial derivatives of [`j_value`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JPartials {
    pub da: f64,
    pub db: f64,
    pub daa: f64,
    pub dab: f64,
    pub dbb: f64,
}

pub fn j_partials(a: f64, b: f64) -> JPartials {
    // With the larger endpoint at s = 0: J = e^hi ∫ e^{-ds}, the derivative
    // toward the near end weights by (1 - s), toward the far end by s.
    let (hi, gap, swapped) = if a >= b { (a, a - b, false) } else { (b, b - a, true) };
    let scale = hi.exp();
    let [k0, k1, k2] = decay_moments(gap);
    let near = scale * (k0 - k1);
    let far = scale * k1;
    let near2 = scale * (k0 - 2.0 * k1 + k2);
    let far2 = scale * k2;
    let mixed = scale * (k1 - k2);
    if swapped {
        JPartials {
            da: far,
            db: near,
            daa: far2,
            dab: mixed,
            dbb: near2,
        }
    } else {
        JPartials {
            da: near,
            db: far,
            daa: near2,
            dab: mixed,
            dbb: far2,
        }
    }
}
