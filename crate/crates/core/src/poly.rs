//! Small dense complex polynomials (coefficients stored highest degree first).

use num_complex::Complex64;

/// Evaluates `coeffs[0] z^n + ... + coeffs[n]` by Horner's rule.
pub fn eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Residual of `z` as a root, scaled by the size of the terms involved.
pub fn relative_residual(coeffs: &[Complex64], z: Complex64) -> f64 {
    let scale = coeffs
        .iter()
        .rev()
        .enumerate()
        .map(|(j, c)| c.norm() * z.norm().powi(j as i32))
        .sum::<f64>();
    eval(coeffs, z).norm() / scale.max(f64::MIN_POSITIVE)
}

/// All roots of the polynomial, Aberth-Ehrlich iteration followed by Newton polishing.
///
/// Leading zero coefficients are stripped. Roots are returned sorted by real part, then
/// imaginary part.
pub fn roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let first = coeffs.iter().position(|c| c.norm() > 0.0);
    let Some(first) = first else {
        return Vec::new();
    };
    let lead = coeffs[first];
    let monic: Vec<Complex64> = coeffs[first..].iter().map(|&c| c / lead).collect();
    let n = monic.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![-monic[1]];
    }

    // Cauchy-style radius for the initial circle.
    let radius = 1.0
        + monic[1..]
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * (j as f64) / (n as f64) + 0.4;
            Complex64::from_polar(0.5 * radius, theta)
        })
        .collect();

    for _ in 0..500 {
        let mut max_step = 0.0_f64;
        for i in 0..n {
            let (p, dp) = eval_with_derivative(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }

    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval_with_derivative(&monic, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            let candidate = *zi - step;
            if eval(&monic, candidate).norm() <= p.norm() {
                *zi = candidate;
            } else {
                break;
            }
        }
    }

    z.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    z
}

/// Coefficients of the characteristic polynomial `det(λI - A)`, highest degree first.
///
/// Faddeev-LeVerrier; adequate for the ≤ 4×4 matrices this crate handles.
pub fn char_poly_of(a: &nalgebra::DMatrix<Complex64>) -> Vec<Complex64> {
    let n = a.nrows();
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    let mut m = nalgebra::DMatrix::<Complex64>::identity(n, n);
    for k in 1..=n {
        let am = a * &m;
        let ck = -am.trace() / (k as f64);
        coeffs.push(ck);
        m = am + nalgebra::DMatrix::<Complex64>::identity(n, n) * ck;
    }
    coeffs
}
