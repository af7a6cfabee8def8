//! Small numerical building blocks shared across the crate: fixed-order
//! Gauss-Legendre quadrature, adaptive Simpson integration, bracketed root
//! and minimum searches, and a closed-form symmetric 2x2 eigenvalue.

/// Positive abscissae of the 10-point Gauss-Legendre rule on [-1, 1].
const GL10_X: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];

/// Weights paired with `GL10_X`.
const GL10_W: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Integrate `f` over `[a, b]` with the 10-point Gauss-Legendre rule.
/// Exact for polynomials of degree 19 or less.
pub fn gauss_legendre_10<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..5 {
        acc += GL10_W[i] * (f(mid - half * GL10_X[i]) + f(mid + half * GL10_X[i]));
    }
    acc * half
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`. Handles reversed bounds (returns the signed integral).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_refine(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Golden-section search for the minimizer of a unimodal `f` on [a, b].
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    if b < a {
        std::mem::swap(&mut a, &mut b);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Bisection on [a, b]. Assumes `f(a)` and `f(b)` bracket a sign change;
/// returns the midpoint of the final bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Smallest eigenvalue of the symmetric matrix [[a, b], [b, c]].
pub fn sym2_min_eigenvalue(a: f64, b: f64, c: f64) -> f64 {
    0.5 * (a + c) - (0.5 * (a - c)).hypot(b)
}

/// `n` evenly spaced points covering [a, b] inclusive (`n >= 1`). The first
/// and last entries are exactly `a` and `b`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1);
    if n == 1 {
        return vec![a];
    }
    let step = (b - a) / (n - 1) as f64;
    let mut xs: Vec<f64> = (0..n).map(|i| a + step * i as f64).collect();
    xs[n - 1] = b;
    xs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_linear_is_midpoint_rule() {
        let v = gauss_legendre_10(|x| 3.0 * x - 1.0, 2.0, 5.0);
        let exact = (3.0 * 3.5 - 1.0) * 3.0;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_high_degree_polynomial_is_exact() {
        // x^19 on [0, 1] integrates to 1/20.
        let v = gauss_legendre_10(|x| x.powi(19), 0.0, 1.0);
        assert!((v - 0.05).abs() < 1e-14);
    }

    #[test]
    fn adaptive_simpson_matches_closed_forms() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
        // Reversed bounds give the signed integral.
        let w = adaptive_simpson(&|x: f64| x, 1.0, 0.0, 1e-12);
        assert!((w + 0.5).abs() < 1e-12);
    }

    #[test]
    fn golden_min_finds_parabola_vertex() {
        let x = golden_min(|x| (x - 1.25) * (x - 1.25), 0.0, 3.0, 1e-12);
        assert!((x - 1.25).abs() < 1e-9);
    }

    #[test]
    fn bisect_finds_cubic_root() {
        let r = bisect(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2.0_f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn sym2_min_eigenvalue_matches_hand_value() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        assert!((sym2_min_eigenvalue(2.0, 1.0, 2.0) - 1.0).abs() < 1e-14);
        // Rank-one [[4, -2], [-2, 1]] has eigenvalues 0 and 5.
        assert!(sym2_min_eigenvalue(4.0, -2.0, 1.0).abs() < 1e-14);
    }

    #[test]
    fn linspace_hits_endpoints_exactly() {
        let xs = linspace(0.1, 0.7, 7);
        assert_eq!(xs.len(), 7);
        assert_eq!(xs[0], 0.1);
        assert_eq!(xs[6], 0.7);
    }
}
