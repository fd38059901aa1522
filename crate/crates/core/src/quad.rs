//! Adaptive Gauss–Kronrod quadrature.
//!
//! Used for the normalising constants of the latent targets and as an
//! independent numerical check of the closed forms. Works in `f64` only.

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod rule on [a, b]; returns (integral, error estimate).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integral of `f` over the finite interval [a, b] to absolute tolerance `tol`.
///
/// Globally adaptive: the subinterval with the largest error estimate is
/// bisected until the summed estimate falls below `tol` or the budget of
/// subintervals is spent.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk15(&mut f, lo, hi);
    let mut parts = vec![(lo, hi, v, e)];
    let max_parts = 4000;
    loop {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= tol || parts.len() >= max_parts {
            break;
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (a0, b0, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (a0 + b0);
        if mid <= a0 || mid >= b0 {
            // interval below machine resolution
            parts.push((a0, b0, 0.0, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&mut f, a0, mid);
        let (v2, e2) = gk15(&mut f, mid, b0);
        parts.push((a0, mid, v1, e1));
        parts.push((mid, b0, v2, e2));
    }
    sign * parts.iter().map(|p| p.2).sum::<f64>()
}

/// Integral of `f` over [a, +inf) via the substitution x = a + s/(1-s).
pub fn integrate_upper<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: f64) -> f64 {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let r = 1.0 - s;
            let v = f(a + s / r) / (r * r);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Integral of `f` over (-inf, b].
pub fn integrate_lower<F: FnMut(f64) -> f64>(mut f: F, b: f64, tol: f64) -> f64 {
    integrate_upper(|x| f(2.0 * b - x), b, tol)
}
