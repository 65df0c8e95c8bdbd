//! Two-class ν-SVM with an RBF kernel, trained by SMO-style pairwise
//! coordinate optimization on the ν dual:
//!
//!   minimize ½ Σᵢⱼ αᵢαⱼyᵢyⱼK(xᵢ,xⱼ)
//!   s.t. 0 ≤ αᵢ ≤ 1/ℓ,  Σ αᵢyᵢ = 0,  Σ αᵢ = ν
//!
//! Both equality constraints are preserved by transferring mass between two
//! multipliers of the same class, so the working pair is always same-class:
//! per class, the pair with maximal KKT violation (ties to the lowest index).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, Scaler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyperParams {
    pub gamma: f64,
    pub nu: f64,
}

pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub hyperparams: SvmHyperParams,
    pub scaler: Scaler,
    /// Scaled support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    /// αᵢyᵢ for each support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    /// Margin position ρ of the ν formulation (diagnostic).
    pub rho: f64,
    /// Dual objective at the solution (diagnostic).
    pub objective: f64,
    pub iterations: usize,
}

/// Largest feasible ν for a class balance: 2·min(n₊,n₋)/ℓ.
pub fn nu_upper_bound(n_pos: usize, n_neg: usize) -> f64 {
    2.0 * n_pos.min(n_neg) as f64 / (n_pos + n_neg) as f64
}

pub(crate) fn labels_to_signs(vectors: &[FeatureVector]) -> Result<Vec<f64>> {
    let mut y = Vec::with_capacity(vectors.len());
    for v in vectors {
        match &v.label {
            l if l.is_farm() => y.push(1.0),
            crate::datamodel::Label::Baseline => y.push(-1.0),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "cannot train on unknown-labeled user {:?}",
                    v.user
                )))
            }
        }
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::InvalidInput(
            "training set must contain both classes".into(),
        ));
    }
    Ok(y)
}

/// Fit a scaler on the training vectors, solve the ν dual on the scaled
/// points and package the support vectors. `_seed` is accepted for interface
/// stability; the solver itself is deterministic (index tie-breaking).
pub fn train_svm(
    train: &[FeatureVector],
    params: SvmHyperParams,
    _seed: u64,
) -> Result<SvmModel> {
    let y = labels_to_signs(train)?;
    let raw: Vec<Vec<f64>> = train.iter().map(|v| v.values.clone()).collect();
    let scaler = crate::features::fit_scaler(&raw)?;
    let x: Vec<Vec<f64>> = raw.iter().map(|v| scaler.apply(v)).collect();
    let solution = solve_nu_smo(&x, &y, params.gamma, params.nu, 1e-8, None)?;

    let mut support_vectors = Vec::new();
    let mut dual_coefficients = Vec::new();
    for i in 0..x.len() {
        if solution.alpha[i] > 0.0 {
            support_vectors.push(x[i].clone());
            dual_coefficients.push(solution.alpha[i] * y[i]);
        }
    }
    Ok(SvmModel {
        hyperparams: params,
        scaler,
        support_vectors,
        dual_coefficients,
        bias: solution.bias,
        rho: solution.rho,
        objective: solution.objective,
        iterations: solution.iterations,
    })
}

impl SvmModel {
    pub fn decision_value(&self, raw: &[f64]) -> Result<f64> {
        if raw.len() != self.scaler.means.len() {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: model expects {}, got {}",
                self.scaler.means.len(),
                raw.len()
            )));
        }
        let x = self.scaler.apply(raw);
        let mut f = self.bias;
        for (sv, coef) in self.support_vectors.iter().zip(&self.dual_coefficients) {
            f += coef * rbf_kernel(sv, &x, self.hyperparams.gamma);
        }
        Ok(f)
    }

    /// True = farm. Exact zero breaks toward farm.
    pub fn predict_farm(&self, raw: &[f64]) -> Result<bool> {
        Ok(self.decision_value(raw)? >= 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub rho: f64,
    pub objective: f64,
    pub iterations: usize,
}

/// Solve the ν dual on pre-scaled points. `y` entries are ±1.
pub fn solve_nu_smo(
    x: &[Vec<f64>],
    y: &[f64],
    gamma: f64,
    nu: f64,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<SmoSolution> {
    let l = x.len();
    assert_eq!(y.len(), l);
    let n_pos = y.iter().filter(|&&v| v > 0.0).count();
    let n_neg = l - n_pos;
    let bound = nu_upper_bound(n_pos, n_neg);
    if !(0.0..=1.0).contains(&nu) || nu <= 0.0 {
        return Err(Error::InvalidInput(format!("nu = {nu} out of (0, 1]")));
    }
    if nu > bound {
        return Err(Error::NuInfeasible { nu, bound });
    }

    let c = 1.0 / l as f64;
    let gram = gram_matrix(x, gamma);

    // Feasible start: fill each class to mass ν/2 in index order.
    let mut alpha = vec![0.0f64; l];
    for &sign in &[1.0, -1.0] {
        let mut remaining = nu / 2.0;
        for i in 0..l {
            if y[i] == sign && remaining > 0.0 {
                let a = c.min(remaining);
                alpha[i] = a;
                remaining -= a;
            }
        }
        if remaining > 1e-15 {
            return Err(Error::NuInfeasible { nu, bound });
        }
    }

    // g_i = Σ_j α_j y_j K_ij
    let mut g = vec![0.0f64; l];
    for j in 0..l {
        if alpha[j] > 0.0 {
            let row = gram.row(j);
            let w = alpha[j] * y[j];
            for i in 0..l {
                g[i] += w * row[i];
            }
        }
    }

    let max_iter = max_iter.unwrap_or_else(|| 1_000_000.max(200 * l));
    let eps = c * 1e-12;
    let mut last_violation = f64::INFINITY;
    let mut iterations = 0usize;

    for it in 0..max_iter {
        iterations = it;
        // Per class, the most violating pair: grow the multiplier with the
        // smallest gradient along +e_i, shrink the one with the largest.
        let mut chosen: Option<(usize, usize, f64)> = None;
        for &sign in &[1.0, -1.0] {
            let mut up: Option<(usize, f64)> = None;
            let mut low: Option<(usize, f64)> = None;
            for i in 0..l {
                if y[i] != sign {
                    continue;
                }
                let grad = sign * g[i];
                if alpha[i] < c - eps && up.is_none_or(|(_, v)| grad < v) {
                    up = Some((i, grad));
                }
                if alpha[i] > eps && low.is_none_or(|(_, v)| grad > v) {
                    low = Some((i, grad));
                }
            }
            if let (Some((i, gi)), Some((j, gj))) = (up, low) {
                let violation = gj - gi;
                if chosen.as_ref().is_none_or(|&(_, _, v)| violation > v) {
                    chosen = Some((i, j, violation));
                }
            }
        }
        let Some((i, j, violation)) = chosen else { break };
        last_violation = violation;
        if violation <= tol {
            break;
        }

        // Transfer δ from j to i along (e_i - e_j); the quadratic coefficient
        // is K_ii + K_jj - 2K_ij ≥ 0 for a PSD kernel.
        let q = (gram.get(i, i) + gram.get(j, j) - 2.0 * gram.get(i, j)).max(1e-12);
        let delta = (violation / q).min(c - alpha[i]).min(alpha[j]);
        if delta <= 0.0 {
            break;
        }
        alpha[i] += delta;
        alpha[j] -= delta;
        let sign = y[i];
        let row_i = gram.row(i);
        let row_j = gram.row(j);
        for t in 0..l {
            g[t] += sign * delta * (row_i[t] - row_j[t]);
        }
    }

    if last_violation > tol && iterations + 1 >= max_iter {
        return Err(Error::SmoDidNotConverge {
            iterations,
            violation: last_violation,
        });
    }

    let (bias, rho) = recover_bias_rho(&alpha, y, &g, c);
    let objective = 0.5
        * alpha
            .iter()
            .zip(y)
            .zip(&g)
            .map(|((a, yy), gg)| a * yy * gg)
            .sum::<f64>();
    Ok(SmoSolution {
        alpha,
        bias,
        rho,
        objective,
        iterations,
    })
}

fn gram_matrix(x: &[Vec<f64>], gamma: f64) -> crate::linalg::DenseMatrix {
    let l = x.len();
    let mut k = crate::linalg::DenseMatrix::zeros(l, l);
    for i in 0..l {
        for j in i..l {
            let v = rbf_kernel(&x[i], &x[j], gamma);
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    k
}

/// θ₊ (resp. θ₋) is the common value of g (resp. -g) on free positive
/// (negative) points; without free points it is bracketed by the bound
/// constraints and we take the midpoint. Then ρ = (θ₊+θ₋)/2, b = (θ₋-θ₊)/2.
fn recover_bias_rho(alpha: &[f64], y: &[f64], g: &[f64], c: f64) -> (f64, f64) {
    let eps = c * 1e-9;
    let theta = |sign: f64| -> f64 {
        let mut free_sum = 0.0;
        let mut free_n = 0usize;
        let mut upper = f64::INFINITY;
        let mut lower = f64::NEG_INFINITY;
        for i in 0..alpha.len() {
            if y[i] != sign {
                continue;
            }
            let v = sign * g[i];
            if alpha[i] > eps && alpha[i] < c - eps {
                free_sum += v;
                free_n += 1;
            } else if alpha[i] <= eps {
                upper = upper.min(v);
            } else {
                lower = lower.max(v);
            }
        }
        if free_n > 0 {
            free_sum / free_n as f64
        } else {
            match (lower.is_finite(), upper.is_finite()) {
                (true, true) => 0.5 * (lower + upper),
                (true, false) => lower,
                (false, true) => upper,
                (false, false) => 0.0,
            }
        }
    };
    let theta_pos = theta(1.0);
    let theta_neg = theta(-1.0);
    let rho = 0.5 * (theta_pos + theta_neg);
    let bias = 0.5 * (theta_neg - theta_pos);
    (bias, rho)
}

/// Maximum KKT violation of a solution, for verification: how far any point
/// strays from its side of θ₊/θ₋.
pub fn kkt_violation(x: &[Vec<f64>], y: &[f64], alpha: &[f64], gamma: f64) -> f64 {
    let l = x.len();
    let c = 1.0 / l as f64;
    let gram = gram_matrix(x, gamma);
    let mut g = vec![0.0; l];
    for j in 0..l {
        if alpha[j] > 0.0 {
            for i in 0..l {
                g[i] += alpha[j] * y[j] * gram.get(i, j);
            }
        }
    }
    let (bias, rho) = recover_bias_rho(alpha, y, &g, c);
    let eps = c * 1e-9;
    let mut worst = 0.0f64;
    for i in 0..l {
        let theta = if y[i] > 0.0 { rho - bias } else { rho + bias };
        let v = y[i] * g[i];
        if alpha[i] <= eps {
            worst = worst.max(theta - v);
        } else if alpha[i] >= c - eps {
            worst = worst.max(v - theta);
        } else {
            worst = worst.max((v - theta).abs());
        }
    }
    worst
}
