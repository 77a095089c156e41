//! Sequential minimal optimization on the dual
//!
//! ```text
//! min_a  (1/2) a^T Q a - e^T a      Q_ij = y_i y_j K(x_i, x_j)
//! s.t.   0 <= a_i <= C_i,  y^T a = 0
//! ```
//!
//! Working pairs are chosen by maximal KKT violation; the two-variable
//! subproblem is solved in closed form. Kernel rows live in an LRU cache and
//! strongly-satisfied bounded points are shrunk out of the selection loop,
//! with a full reactivation and recheck before convergence is declared.

use super::kernel::rbf_kernel;
use super::{SvmConfig, SvmError};
use crate::linalg::{sq_dist, Mat};
use std::collections::HashMap;

const TAU: f64 = 1e-12;
/// Dual coefficients below this fraction of the box are treated as zero when
/// collecting support vectors.
const SV_EPS_FRACTION: f64 = 1e-12;

/// Trained model: support vectors with their signed dual coefficients
/// `alpha_i * y_i`, the bias, and training metadata.
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub support_vectors: Mat,
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub config: SvmConfig,
    pub n_iterations: usize,
    pub converged: bool,
    pub dual_objective: f64,
}

/// LRU cache of kernel rows (full rows over all training points).
struct KernelCache<'a> {
    features: &'a Mat,
    gamma: f64,
    rows: HashMap<usize, (Vec<f64>, u64)>,
    capacity: usize,
    clock: u64,
}

impl<'a> KernelCache<'a> {
    fn new(features: &'a Mat, gamma: f64, cache_mb: usize) -> Self {
        let row_bytes = features.rows * 8;
        let capacity = ((cache_mb * 1024 * 1024) / row_bytes.max(1)).max(2);
        Self {
            features,
            gamma,
            rows: HashMap::new(),
            capacity,
            clock: 0,
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.clock += 1;
        let clock = self.clock;
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.capacity {
                if let Some((&oldest, _)) = self.rows.iter().min_by_key(|(_, (_, stamp))| *stamp) {
                    self.rows.remove(&oldest);
                }
            }
            let xi = self.features.row(i);
            let row: Vec<f64> = (0..self.features.rows)
                .map(|j| (-self.gamma * sq_dist(xi, self.features.row(j))).exp())
                .collect();
            self.rows.insert(i, (row, clock));
        }
        let entry = self.rows.get_mut(&i).unwrap();
        entry.1 = clock;
        &entry.0
    }
}

struct Solver<'a> {
    y: Vec<f64>,
    c_bound: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    active: Vec<usize>,
    cache: KernelCache<'a>,
    tolerance: f64,
    shrink_enabled: bool,
}

impl<'a> Solver<'a> {
    /// Maximal-violation pair over the active set:
    /// `i = argmax_{I_up} -y G`, `j = argmin_{I_low} -y G`.
    fn select_pair(&self) -> (Option<usize>, f64, Option<usize>, f64) {
        let mut i = None;
        let mut m_up = f64::NEG_INFINITY;
        let mut j = None;
        let mut m_low = f64::INFINITY;
        for &t in &self.active {
            let v = -self.y[t] * self.grad[t];
            let positive = self.y[t] > 0.0;
            let at_upper = self.alpha[t] >= self.c_bound[t];
            let at_lower = self.alpha[t] <= 0.0;
            let in_up = (positive && !at_upper) || (!positive && !at_lower);
            let in_low = (!positive && !at_upper) || (positive && !at_lower);
            if in_up && v > m_up {
                m_up = v;
                i = Some(t);
            }
            if in_low && v < m_low {
                m_low = v;
                j = Some(t);
            }
        }
        (i, m_up, j, m_low)
    }

    /// Closed-form update of the pair (i, j) along the feasible direction.
    fn update_pair(&mut self, i: usize, j: usize) {
        let ki = self.cache.row(i).to_vec();
        let kj = self.cache.row(j).to_vec();
        let q_ii = ki[i];
        let q_jj = kj[j];
        let q_ij = self.y[i] * self.y[j] * ki[j];

        let (delta_i, delta_j) = if self.y[i] != self.y[j] {
            // Direction (1, 1): keeps y_i a_i + y_j a_j constant.
            let quad = (q_ii + q_jj + 2.0 * q_ij).max(TAU);
            let mut delta = -(self.grad[i] + self.grad[j]) / quad;
            let lo = (-self.alpha[i]).max(-self.alpha[j]);
            let hi = (self.c_bound[i] - self.alpha[i]).min(self.c_bound[j] - self.alpha[j]);
            delta = delta.clamp(lo, hi);
            (delta, delta)
        } else {
            // Direction (1, -1).
            let quad = (q_ii + q_jj - 2.0 * q_ij).max(TAU);
            let mut delta = -(self.grad[i] - self.grad[j]) / quad;
            let lo = (-self.alpha[i]).max(self.alpha[j] - self.c_bound[j]);
            let hi = (self.c_bound[i] - self.alpha[i]).min(self.alpha[j]);
            delta = delta.clamp(lo, hi);
            (delta, -delta)
        };

        // Apply with a residue clamp onto the box, then propagate the
        // realized change so the gradient stays consistent with alpha.
        let old_i = self.alpha[i];
        let old_j = self.alpha[j];
        self.alpha[i] = (old_i + delta_i).clamp(0.0, self.c_bound[i]);
        self.alpha[j] = (old_j + delta_j).clamp(0.0, self.c_bound[j]);
        let applied_i = self.alpha[i] - old_i;
        let applied_j = self.alpha[j] - old_j;

        for &t in &self.active {
            let q_ti = self.y[t] * self.y[i] * ki[t];
            let q_tj = self.y[t] * self.y[j] * kj[t];
            self.grad[t] += q_ti * applied_i + q_tj * applied_j;
        }
    }

    /// Drop bounded points that cannot participate in a violating pair.
    fn shrink(&mut self, m_up: f64, m_low: f64) {
        self.active.retain(|&t| {
            let v = -self.y[t] * self.grad[t];
            let at_upper = self.alpha[t] >= self.c_bound[t];
            let at_lower = self.alpha[t] <= 0.0;
            if !at_upper && !at_lower {
                return true; // free points always stay
            }
            let positive = self.y[t] > 0.0;
            let in_up = (positive && !at_upper) || (!positive && !at_lower);
            if in_up {
                v >= m_low
            } else {
                v <= m_up
            }
        });
    }

    /// Recompute gradients for every point from the nonzero alphas and
    /// reactivate everything.
    fn unshrink(&mut self, n: usize) {
        self.grad = vec![-1.0; n];
        let sv: Vec<usize> = (0..n).filter(|&t| self.alpha[t] > 0.0).collect();
        for &s in &sv {
            let row = self.cache.row(s).to_vec();
            let coef = self.alpha[s] * self.y[s];
            for ((g, &y), &k) in self.grad.iter_mut().zip(&self.y).zip(&row) {
                *g += coef * y * k;
            }
        }
        self.active = (0..n).collect();
    }
}

/// Train on a feature matrix with {0,1} labels.
pub fn train(features: &Mat, labels: &[bool], config: &SvmConfig) -> Result<SvmModel, SvmError> {
    config.validate()?;
    let n = features.rows;
    if labels.len() != n {
        return Err(SvmError::LengthMismatch {
            features: n,
            labels: labels.len(),
        });
    }
    if features.data.iter().any(|v| !v.is_finite()) {
        return Err(SvmError::NonFinite);
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == n {
        return Err(SvmError::SingleClass);
    }

    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let c_bound: Vec<f64> = labels
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
    if c_bound.iter().any(|&c| c <= 0.0) {
        return Err(SvmError::InvalidParam(
            "per-class box bound must be positive (C * class_weight)".into(),
        ));
    }

    let shrink_interval = if config.shrink_interval == 0 {
        n.clamp(10, 1000)
    } else {
        config.shrink_interval
    };

    let mut solver = Solver {
        y,
        c_bound,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
        active: (0..n).collect(),
        cache: KernelCache::new(features, config.gamma, config.cache_mb),
        tolerance: config.tolerance,
        shrink_enabled: true,
    };

    let mut iterations = 0usize;
    let mut converged = false;
    loop {
        if iterations >= config.max_iterations {
            break;
        }
        let (i, m_up, j, m_low) = solver.select_pair();
        if i.is_none() || j.is_none() || m_up - m_low <= solver.tolerance {
            if solver.active.len() < n {
                // Converged on the shrunk problem: bring everyone back and
                // re-verify before declaring victory.
                solver.unshrink(n);
                solver.shrink_enabled = false;
                let (i2, m2_up, j2, m2_low) = solver.select_pair();
                if i2.is_none() || j2.is_none() || m2_up - m2_low <= solver.tolerance {
                    converged = true;
                    break;
                }
                continue;
            }
            converged = true;
            break;
        }
        solver.update_pair(i.unwrap(), j.unwrap());
        iterations += 1;
        if solver.shrink_enabled && iterations.is_multiple_of(shrink_interval) {
            let (_, m_up, _, m_low) = solver.select_pair();
            solver.shrink(m_up, m_low);
        }
    }
    if !converged {
        // Return the best-effort model flagged as unconverged; callers decide
        // whether that is fatal.
        solver.unshrink(n);
    }

    // Bias from free support vectors; midpoint of the KKT bracket otherwise.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        if solver.alpha[t] > 0.0 && solver.alpha[t] < solver.c_bound[t] {
            free_sum += -solver.y[t] * solver.grad[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        let (_, m_up, _, m_low) = solver.select_pair();
        if m_up.is_finite() && m_low.is_finite() {
            (m_up + m_low) / 2.0
        } else {
            0.0
        }
    };

    // Dual objective in maximization form: sum(a) - (1/2) a^T Q a.
    let alpha_g: f64 = solver
        .alpha
        .iter()
        .zip(&solver.grad)
        .map(|(&a, &g)| a * g)
        .sum();
    let alpha_sum: f64 = solver.alpha.iter().sum();
    let dual_objective = 0.5 * (alpha_sum - alpha_g);

    let max_c = solver.c_bound.iter().cloned().fold(0.0, f64::max);
    let sv_eps = SV_EPS_FRACTION * max_c;
    let sv_idx: Vec<usize> = (0..n).filter(|&t| solver.alpha[t] > sv_eps).collect();
    let mut support_vectors = Mat::zeros(sv_idx.len(), features.cols);
    let mut dual_coeffs = Vec::with_capacity(sv_idx.len());
    for (r, &t) in sv_idx.iter().enumerate() {
        support_vectors.row_mut(r).copy_from_slice(features.row(t));
        dual_coeffs.push(solver.alpha[t] * solver.y[t]);
    }

    Ok(SvmModel {
        support_vectors,
        dual_coeffs,
        bias,
        gamma: config.gamma,
        config: config.clone(),
        n_iterations: iterations,
        converged,
        dual_objective,
    })
}

/// Continuous decision value `sum_i a_i y_i K(sv_i, x) + b`; the ranking
/// statistic behind the curve metrics.
pub fn decision_score(model: &SvmModel, x: &[f64]) -> Result<f64, SvmError> {
    if x.len() != model.support_vectors.cols {
        return Err(SvmError::DimensionMismatch {
            expected: model.support_vectors.cols,
            found: x.len(),
        });
    }
    let mut score = model.bias;
    for (r, &coef) in model.dual_coeffs.iter().enumerate() {
        score += coef * rbf_kernel(model.support_vectors.row(r), x, model.gamma)?;
    }
    Ok(score)
}

/// Hard label: 1 iff the decision value is positive.
pub fn predict(model: &SvmModel, x: &[f64]) -> Result<bool, SvmError> {
    Ok(decision_score(model, x)? > 0.0)
}

/// Maximal KKT violation of a trained model's alphas on its training set
/// (diagnostic; equals `m(alpha) - M(alpha)`).
pub fn kkt_violation(features: &Mat, labels: &[bool], model: &SvmModel, alpha: &[f64]) -> f64 {
    let n = features.rows;
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let c_bound: Vec<f64> = labels
        .iter()
        .map(|&l| {
            model.config.c
                * if l {
                    model.config.class_weight.1
                } else {
                    model.config.class_weight.0
                }
        })
        .collect();
    let mut grad = vec![-1.0; n];
    for t in 0..n {
        for s in 0..n {
            if alpha[s] > 0.0 {
                let k = (-model.gamma * sq_dist(features.row(t), features.row(s))).exp();
                grad[t] += alpha[s] * y[s] * y[t] * k;
            }
        }
    }
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for t in 0..n {
        let v = -y[t] * grad[t];
        let positive = y[t] > 0.0;
        let at_upper = alpha[t] >= c_bound[t];
        let at_lower = alpha[t] <= 0.0;
        if (positive && !at_upper) || (!positive && !at_lower) {
            m_up = m_up.max(v);
        }
        if (!positive && !at_upper) || (positive && !at_lower) {
            m_low = m_low.min(v);
        }
    }
    m_up - m_low
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Mat {
        Mat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn symmetric_two_point_problem() {
        let features = mat(&[&[1.0], &[-1.0]]);
        let labels = [true, false];
        let config = SvmConfig {
            gamma: 0.5,
            c: 10.0,
            tolerance: 1e-6,
            ..SvmConfig::default()
        };
        let model = train(&features, &labels, &config).unwrap();
        assert!(model.converged);
        assert_eq!(model.dual_coeffs.len(), 2);
        // Equal alphas by symmetry.
        assert!(
            (model.dual_coeffs[0] + model.dual_coeffs[1]).abs() < 1e-9,
            "coeffs {:?}",
            model.dual_coeffs
        );
        // Decision boundary passes through the midpoint.
        let mid = decision_score(&model, &[0.0]).unwrap();
        assert!(mid.abs() < 1e-9, "score at midpoint {mid}");
        assert!(predict(&model, &[0.9]).unwrap());
        assert!(!predict(&model, &[-0.9]).unwrap());
    }

    #[test]
    fn xor_separated_by_rbf() {
        let features = mat(&[&[0.0, 0.0], &[1.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]]);
        let labels = [true, true, false, false];
        let config = SvmConfig {
            gamma: 1.0,
            c: 1.0,
            tolerance: 1e-6,
            ..SvmConfig::default()
        };
        let model = train(&features, &labels, &config).unwrap();
        for (r, &want) in labels.iter().enumerate() {
            let got = predict(&model, features.row(r)).unwrap();
            assert_eq!(got, want, "point {r}");
        }
    }

    #[test]
    fn single_class_rejected() {
        let features = mat(&[&[0.0], &[1.0]]);
        assert!(matches!(
            train(&features, &[true, true], &SvmConfig::default()),
            Err(SvmError::SingleClass)
        ));
    }

    #[test]
    fn free_sv_scores_its_own_label() {
        let features = mat(&[
            &[0.0, 0.2],
            &[0.3, -0.1],
            &[0.1, 0.4],
            &[2.0, 2.2],
            &[2.3, 1.9],
            &[1.9, 2.4],
        ]);
        let labels = [false, false, false, true, true, true];
        let config = SvmConfig {
            gamma: 0.7,
            c: 5.0,
            tolerance: 1e-6,
            ..SvmConfig::default()
        };
        let model = train(&features, &labels, &config).unwrap();
        // Free support vectors (0 < alpha < C) sit exactly on the margin.
        for (r, &coef) in model.dual_coeffs.iter().enumerate() {
            let alpha = coef.abs();
            let c_i = config.c;
            if alpha > 1e-8 && alpha < c_i - 1e-8 {
                let s = decision_score(&model, model.support_vectors.row(r)).unwrap();
                let y = coef.signum();
                assert!((s - y).abs() < 1e-3, "margin score {s} for label {y}");
            }
        }
    }

    #[test]
    fn label_flip_negates_scores() {
        let features = mat(&[
            &[0.1, 0.0],
            &[0.5, 0.4],
            &[1.6, 1.2],
            &[1.9, 2.1],
            &[0.2, 0.6],
            &[1.4, 1.8],
        ]);
        let labels = [false, false, true, true, false, true];
        let flipped: Vec<bool> = labels.iter().map(|&l| !l).collect();
        let config = SvmConfig {
            gamma: 0.9,
            c: 2.0,
            class_weight: (1.0, 1.0),
            tolerance: 1e-8,
            ..SvmConfig::default()
        };
        let a = train(&features, &labels, &config).unwrap();
        let b = train(&features, &flipped, &config).unwrap();
        for probe in [[0.0, 0.0], [1.0, 1.0], [0.7, 1.3], [2.0, 0.1]] {
            let sa = decision_score(&a, &probe).unwrap();
            let sb = decision_score(&b, &probe).unwrap();
            assert!((sa + sb).abs() < 1e-6, "{sa} vs {sb}");
        }
    }

    #[test]
    fn kkt_satisfied_at_convergence() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for trial in 0..10 {
            let n = rng.gen_range(4..24);
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for _ in 0..n {
                let l = rng.gen_bool(0.5);
                let center = if l { 1.0 } else { -1.0 };
                rows.push(vec![
                    center + rng.gen::<f64>() - 0.5,
                    center + rng.gen::<f64>() - 0.5,
                ]);
                labels.push(l);
            }
            if labels.iter().all(|&l| l) || !labels.iter().any(|&l| l) {
                continue;
            }
            let features = Mat::from_rows(&rows);
            let config = SvmConfig {
                gamma: 1.2,
                c: 1.5,
                class_weight: (0.8, 1.0),
                tolerance: 1e-5,
                ..SvmConfig::default()
            };
            let model = train(&features, &labels, &config).unwrap();
            assert!(model.converged, "trial {trial}");
            // Recover alphas from the coefficients to audit the KKT gap.
            let mut alpha = vec![0.0; n];
            let mut sv = 0usize;
            for (t, a) in alpha.iter_mut().enumerate() {
                // Match support vectors back to training points by value.
                if sv < model.dual_coeffs.len()
                    && model.support_vectors.row(sv) == features.row(t)
                {
                    *a = model.dual_coeffs[sv].abs();
                    sv += 1;
                }
            }
            let gap = kkt_violation(&features, &labels, &model, &alpha);
            assert!(gap <= config.tolerance + 1e-9, "kkt gap {gap}");
            // Equality constraint: the signed coefficients balance.
            let balance: f64 = model.dual_coeffs.iter().sum();
            assert!(balance.abs() < 1e-9, "sum alpha_i y_i = {balance}");
        }
    }

    #[test]
    fn margin_violations_match_oracle_as_c_grows() {
        use crate::svm::reference;
        // Fixed noisy instance; count training margin violations
        // (y * f(x) < 1) per C for both solvers. The dual is strictly convex
        // here, so the optima coincide and so must the counts.
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 14;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let l = i % 2 == 0;
            let center = if l { 0.5 } else { -0.5 };
            rows.push(vec![
                center + rng.gen::<f64>() * 2.0 - 1.0,
                center + rng.gen::<f64>() * 2.0 - 1.0,
            ]);
            labels.push(l);
        }
        let features = Mat::from_rows(&rows);
        let mut counts = Vec::new();
        for c in [0.2, 0.5, 1.0, 2.0, 5.0] {
            let config = SvmConfig {
                c,
                gamma: 0.8,
                tolerance: 1e-7,
                ..SvmConfig::default()
            };
            let model = train(&features, &labels, &config).unwrap();
            let oracle = reference::solve(&features, &labels, &config, 100_000).unwrap();
            assert!(oracle.residual < 1e-10);
            let count = |score: &dyn Fn(&[f64]) -> f64| -> usize {
                (0..n)
                    .filter(|&t| {
                        let y = if labels[t] { 1.0 } else { -1.0 };
                        y * score(features.row(t)) < 1.0 - 1e-6
                    })
                    .count()
            };
            let smo_violations = count(&|x| decision_score(&model, x).unwrap());
            let oracle_violations = count(&|x| {
                reference::decision_score(&features, &labels, &oracle, config.gamma, x)
            });
            assert_eq!(
                smo_violations, oracle_violations,
                "violation counts diverge at C={c}"
            );
            counts.push(smo_violations);
        }
        // Larger C penalizes slack harder; the sequence should not grow.
        for w in counts.windows(2) {
            assert!(w[1] <= w[0] + 1, "violations went up sharply: {counts:?}");
        }
    }

    #[test]
    fn forced_shrinking_matches_unshrunk_solution() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let n = 16;
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for _ in 0..n {
                let l = rng.gen_bool(0.5);
                let center = if l { 0.8 } else { -0.8 };
                rows.push(vec![center + rng.gen::<f64>() - 0.5]);
                labels.push(l);
            }
            if labels.iter().all(|&l| l) || !labels.iter().any(|&l| l) {
                continue;
            }
            let features = Mat::from_rows(&rows);
            let base = SvmConfig {
                gamma: 1.0,
                c: 1.0,
                tolerance: 1e-8,
                shrink_interval: usize::MAX, // effectively disabled
                ..SvmConfig::default()
            };
            let aggressive = SvmConfig {
                shrink_interval: 3,
                ..base.clone()
            };
            let a = train(&features, &labels, &base).unwrap();
            let b = train(&features, &labels, &aggressive).unwrap();
            assert!(
                (a.dual_objective - b.dual_objective).abs() < 1e-6,
                "{} vs {}",
                a.dual_objective,
                b.dual_objective
            );
            for t in 0..n {
                assert_eq!(
                    predict(&a, features.row(t)).unwrap(),
                    predict(&b, features.row(t)).unwrap()
                );
            }
        }
    }
}
