//! Brute-force reference solver for the SVM dual, used to verify the SMO
//! implementation. Projected gradient descent on
//!
//! ```text
//! min_a (1/2) a^T Q a - e^T a    s.t. 0 <= a_i <= C_i, y^T a = 0
//! ```
//!
//! with exact projection onto the box-hyperplane intersection via bisection
//! on the hyperplane multiplier. Intended for small instances (tens of
//! points); it shares no code with the SMO path.

use super::kernel::kernel_matrix;
use super::{SvmConfig, SvmError};
use crate::linalg::Mat;

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub dual_objective: f64,
    /// Max-norm of the final fixed-point residual; small means converged.
    pub residual: f64,
}

/// Project z onto `{0 <= a <= c} intersect {y^T a = 0}`: the projection is
/// `clip(z - nu * y)` where nu solves `y^T clip(z - nu y) = 0`, found by
/// bisection (the function is monotone non-increasing in nu).
fn project(z: &[f64], y: &[f64], c: &[f64]) -> Vec<f64> {
    let clip = |nu: f64| -> Vec<f64> {
        z.iter()
            .zip(y)
            .zip(c)
            .map(|((&zi, &yi), &ci)| (zi - nu * yi).clamp(0.0, ci))
            .collect()
    };
    let dot_y = |a: &[f64]| -> f64 { a.iter().zip(y).map(|(&ai, &yi)| ai * yi).sum() };

    let bound = z
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max)
        .max(c.iter().cloned().fold(0.0, f64::max))
        + 1.0;
    let mut lo = -bound;
    let mut hi = bound;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dot_y(&clip(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clip(0.5 * (lo + hi))
}

/// Solve the dual by projected gradient with a fixed step from a power-method
/// estimate of the largest eigenvalue of Q.
pub fn solve(
    features: &Mat,
    labels: &[bool],
    config: &SvmConfig,
    max_iterations: usize,
) -> Result<ReferenceSolution, SvmError> {
    config.validate()?;
    let n = features.rows;
    if labels.len() != n {
        return Err(SvmError::LengthMismatch {
            features: n,
            labels: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == n {
        return Err(SvmError::SingleClass);
    }
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let c: Vec<f64> = labels
        .iter()
        .map(|&l| {
            config.c
                * if l {
                    config.class_weight.1
                } else {
                    config.class_weight.0
                }
        })
        .collect();

    let k = kernel_matrix(features, config.gamma);
    let mut q = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            q.set(i, j, y[i] * y[j] * k.get(i, j));
        }
    }

    // Largest eigenvalue of Q via power iteration (Q is PSD).
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 1.0f64;
    for _ in 0..200 {
        let mut qv = vec![0.0; n];
        q.matvec_add(&v, &mut qv);
        let norm = qv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            break;
        }
        lambda = norm;
        for (vi, qi) in v.iter_mut().zip(&qv) {
            *vi = qi / norm;
        }
    }
    let step = 1.0 / lambda.max(1e-12);

    let mut alpha = project(&vec![0.0; n], &y, &c);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        let mut grad = vec![-1.0; n];
        q.matvec_add(&alpha, &mut grad);
        let z: Vec<f64> = alpha.iter().zip(&grad).map(|(&a, &g)| a - step * g).collect();
        let next = project(&z, &y, &c);
        residual = alpha
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        alpha = next;
        if residual < 1e-14 {
            break;
        }
    }

    // Objective and bias.
    let mut grad = vec![-1.0; n];
    q.matvec_add(&alpha, &mut grad);
    let alpha_sum: f64 = alpha.iter().sum();
    let alpha_g: f64 = alpha.iter().zip(&grad).map(|(&a, &g)| a * g).sum();
    let dual_objective = 0.5 * (alpha_sum - alpha_g);

    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        if alpha[t] > 1e-8 * c[t] && alpha[t] < c[t] * (1.0 - 1e-8) {
            free_sum += -y[t] * grad[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        let mut m_up = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let positive = y[t] > 0.0;
            let at_upper = alpha[t] >= c[t] * (1.0 - 1e-8);
            let at_lower = alpha[t] <= 1e-8 * c[t];
            if (positive && !at_upper) || (!positive && !at_lower) {
                m_up = m_up.max(v);
            }
            if (!positive && !at_upper) || (positive && !at_lower) {
                m_low = m_low.min(v);
            }
        }
        if m_up.is_finite() && m_low.is_finite() {
            (m_up + m_low) / 2.0
        } else {
            0.0
        }
    };

    Ok(ReferenceSolution {
        alpha,
        bias,
        dual_objective,
        residual,
    })
}

/// Decision value of a reference solution.
pub fn decision_score(
    features: &Mat,
    labels: &[bool],
    solution: &ReferenceSolution,
    gamma: f64,
    x: &[f64],
) -> f64 {
    let mut score = solution.bias;
    for (t, (&alpha, &label)) in solution.alpha.iter().zip(labels).enumerate() {
        if alpha > 0.0 {
            let y = if label { 1.0 } else { -1.0 };
            let d = crate::linalg::sq_dist(features.row(t), x);
            score += alpha * y * (-gamma * d).exp();
        }
    }
    score
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_lands_on_constraints() {
        let y = [1.0, -1.0, 1.0, -1.0];
        let c = [1.0, 1.0, 0.5, 0.5];
        let z = [2.0, -0.3, 0.4, 0.9];
        let p = project(&z, &y, &c);
        let balance: f64 = p.iter().zip(&y).map(|(&a, &yi)| a * yi).sum();
        assert!(balance.abs() < 1e-12, "y^T a = {balance}");
        for (a, &ci) in p.iter().zip(&c) {
            assert!(*a >= -1e-15 && *a <= ci + 1e-15);
        }
    }

    #[test]
    fn two_point_closed_form() {
        // Points +1 at x=1, -1 at x=-1, gamma 0.5, large C. With a1 = a2 = a
        // the objective is 2a - a^2 (1 - K12), so the optimum is
        // a = 1 / (1 - K12) with K12 = e^{-2}.
        let features = Mat::from_rows(&[vec![1.0], vec![-1.0]]);
        let labels = [true, false];
        let config = SvmConfig {
            gamma: 0.5,
            c: 100.0,
            ..SvmConfig::default()
        };
        let sol = solve(&features, &labels, &config, 200_000).unwrap();
        let k12 = (-0.5f64 * 4.0).exp();
        let want = 1.0 / (1.0 - k12);
        assert!((sol.alpha[0] - want).abs() < 1e-6, "{} vs {want}", sol.alpha[0]);
        assert!((sol.alpha[1] - want).abs() < 1e-6);
        assert!(sol.residual < 1e-10);
    }
}
