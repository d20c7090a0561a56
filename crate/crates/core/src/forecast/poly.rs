//! Lag-polynomial checks and repair.
//!
//! Coefficients are given in AR form: `phi` stands for the polynomial
//! `1 - phi[0] z - phi[1] z^2 - ...`. An MA polynomial `1 + theta z + ...`
//! is checked by passing `-theta`.

use num_complex::Complex64;

/// True when every root of `1 - sum phi_i z^i` lies strictly outside the
/// unit circle. Uses the step-down (Schur-Cohn) recursion: the polynomial
/// is stable iff every reflection coefficient has modulus below one.
pub fn is_stable(phi: &[f64]) -> bool {
    if phi.iter().any(|c| !c.is_finite()) {
        return false;
    }
    let mut a = phi.to_vec();
    while let Some(&kappa) = a.last() {
        let m = a.len();
        if kappa.abs() >= 1.0 {
            return false;
        }
        let denom = 1.0 - kappa * kappa;
        let next: Vec<f64> = (0..m - 1).map(|j| (a[j] + kappa * a[m - 2 - j]) / denom).collect();
        a = next;
    }
    true
}

/// Roots of `1 + c[0] z + c[1] z^2 + ...` by Durand-Kerner iteration.
/// Trailing zero coefficients lower the degree.
pub fn roots(c: &[f64]) -> Vec<Complex64> {
    let degree = match c.iter().rposition(|v| *v != 0.0) {
        Some(i) => i + 1,
        None => return Vec::new(),
    };
    let lead = c[degree - 1];
    // monic coefficients, highest power first: z^n + b[1] z^(n-1) + ... + b[n]
    let mut monic = Vec::with_capacity(degree + 1);
    monic.push(1.0);
    for k in (0..degree - 1).rev() {
        monic.push(c[k] / lead);
    }
    monic.push(1.0 / lead);

    let eval = |z: Complex64| monic.iter().fold(Complex64::new(0.0, 0.0), |acc, &b| acc * z + b);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..degree).map(|k| seed.powu(k as u32 + 1)).collect();

    for _ in 0..1000 {
        let mut delta = 0.0_f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(1e-12, 0.0);
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    z
}

/// Coefficients `c` of `prod (1 - z / r_i)`, written as `1 + c[0] z + ...`.
fn from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let factor = -1.0 / r;
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (k, p) in poly.iter().enumerate() {
            next[k] += p;
            next[k + 1] += p * factor;
        }
        poly = next;
    }
    poly[1..].iter().map(|c| c.re).collect()
}

/// Reflects every root on or inside the unit circle to `1 / conj(r)` and
/// returns the repaired AR-form coefficients (same length as the input).
pub fn reflect_into_stable(phi: &[f64]) -> Vec<f64> {
    let c: Vec<f64> = phi.iter().map(|v| -v).collect();
    let reflected: Vec<Complex64> = roots(&c)
        .into_iter()
        .map(|r| if r.norm() <= 1.0 && r.norm() > 0.0 { 1.0 / r.conj() } else { r })
        .collect();
    let mut out: Vec<f64> = from_roots(&reflected).into_iter().map(|v| -v).collect();
    out.resize(phi.len(), 0.0);
    out
}
