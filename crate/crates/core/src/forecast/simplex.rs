//! Nelder-Mead downhill simplex minimization.

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop when the spread of objective values across the simplex falls
    /// below this (relative to the best value).
    pub tolerance: f64,
    pub initial_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexResult {
    pub point: Vec<f64>,
    pub iterations: usize,
}

pub(crate) fn minimize<F>(f: F, start: &[f64], opts: SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let objective = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::MAX
        }
    };
    if n == 0 {
        return SimplexResult { point: Vec::new(), iterations: 0 };
    }

    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    points.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += if p[i].abs() > 1e-8 { opts.initial_step * p[i].abs().max(0.5) } else { opts.initial_step };
        points.push(p);
    }
    let mut values: Vec<f64> = points.iter().map(|p| objective(p)).collect();

    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        points = order.iter().map(|&i| points[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let (best, worst) = (values[0], values[n]);
        let spread = (worst - best).abs();
        let size = points[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&points[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0_f64, f64::max);
        if spread <= opts.tolerance * (best.abs() + opts.tolerance) && size <= 1e-8 {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| points[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&points[n]).map(|(c, w)| c + t * (w - c)).collect()
        };

        let reflected = along(-1.0);
        let fr = objective(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = objective(&expanded);
            if fe < fr {
                points[n] = expanded;
                values[n] = fe;
            } else {
                points[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            points[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = along(-0.5);
            let fc = objective(&c);
            (c, fc)
        } else {
            let c = along(0.5);
            let fc = objective(&c);
            (c, fc)
        };
        if fc < values[n].min(fr) {
            points[n] = contracted;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = points[i].iter().zip(&points[0]).map(|(p, b)| b + 0.5 * (p - b)).collect();
            values[i] = objective(&shrunk);
            points[i] = shrunk;
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    SimplexResult { point: points[best].clone(), iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPTS: SimplexOptions = SimplexOptions { max_iterations: 5000, tolerance: 1e-14, initial_step: 0.1 };

    #[test]
    fn finds_quadratic_minimum() {
        let r = minimize(|x| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.25).powi(2), &[0.0, 0.0], OPTS);
        assert!((r.point[0] - 1.5).abs() < 1e-6);
        assert!((r.point[1] + 0.25).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let r = minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            OPTS,
        );
        assert!((r.point[0] - 1.0).abs() < 1e-4, "{:?}", r);
    }

    #[test]
    fn non_finite_regions_are_avoided() {
        let r = minimize(|x| if x[0] > 2.0 { f64::NAN } else { (x[0] - 1.0).powi(2) }, &[1.9], OPTS);
        assert!((r.point[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(4) + (x[1] * x[0]).sin().abs();
        let a = minimize(f, &[0.1, 0.7], OPTS);
        let b = minimize(f, &[0.1, 0.7], OPTS);
        assert_eq!(a.point, b.point);
        assert_eq!(a.iterations, b.iterations);
    }
}
