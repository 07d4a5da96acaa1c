//! One-dimensional adaptive Simpson quadrature.

/// Integrates `f` over `[a, b]` to roughly `tol` absolute accuracy.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let c = 0.5 * (a + b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    recurse(f, a, b, fa, fb, fc, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
        + recurse(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
}

/// `∫_{R^m} g(|x|) dx` for a radial profile supported on `[0, 1]`.
pub fn radial_integral<F: Fn(f64) -> f64>(g: F, m: usize) -> f64 {
    let surface = m as f64 * crate::geometry::unit_ball_volume(m);
    surface * adaptive_simpson(&|r: f64| g(r) * r.powi(m as i32 - 1), 0.0, 1.0, 1e-14)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = adaptive_simpson(&|x: f64| x * x * x - x, 0.0, 2.0, 1e-14);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_integrand() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn unit_ball_by_radial_integral() {
        let v = radial_integral(|_| 1.0, 3);
        assert!((v - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }
}
