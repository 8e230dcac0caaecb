//! Two-parameter logistic item response theory.
//!
//! Item and ability parameters are fitted jointly by maximum a posteriori
//! estimation with normal priors on ability, log-discrimination and
//! difficulty. Fitting alternates between the ability block and the item
//! block; inside a block every parameter (or parameter pair) is an
//! independent concave subproblem, solved with a safeguarded Newton /
//! Fisher-scoring step that is only accepted when it raises the objective.

use serde::{Deserialize, Serialize};

use crate::dataset::ResponseMatrix;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const THETA_BOUND: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemParams {
    /// Discrimination, > 0.
    pub a: f64,
    /// Difficulty.
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbilityEstimate {
    pub theta: f64,
    /// Log-likelihood of the observed responses at `theta` (prior excluded).
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrtFitConfig {
    pub max_iterations: usize,
    /// Stop when the per-cell penalized log-likelihood changes by less than this.
    pub tolerance: f64,
    pub prior_theta_sd: f64,
    pub prior_log_a_sd: f64,
    pub prior_b_sd: f64,
    /// Seeds the small jitter on the initial log-discriminations.
    pub seed: u64,
}

impl Default for IrtFitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-6,
            prior_theta_sd: 1.0,
            prior_log_a_sd: 0.5,
            prior_b_sd: 2.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrtFit {
    pub items: Vec<ItemParams>,
    pub abilities: Vec<AbilityEstimate>,
    /// Penalized log-likelihood after each accepted iteration, starting
    /// with the initialization.
    pub objective_trace: Vec<f64>,
}

/// `P(correct) = 1 / (1 + exp(-a (theta - b)))`.
pub fn irf_2pl(theta: f64, item: &ItemParams) -> f64 {
    sigmoid(item.a * (theta - item.b))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log P(y | z)` for the logistic link, stable in both tails.
fn log_bernoulli(y: u8, z: f64) -> f64 {
    // log sigmoid(z) = -softplus(-z); log(1 - sigmoid(z)) = -softplus(z)
    let softplus = |t: f64| t.max(0.0) + (-t.abs()).exp().ln_1p();
    if y == 1 {
        -softplus(-z)
    } else {
        -softplus(z)
    }
}

fn response_log_likelihood(responses: &[u8], items: &[ItemParams], theta: f64) -> f64 {
    responses
        .iter()
        .zip(items)
        .map(|(&y, it)| log_bernoulli(y, it.a * (theta - it.b)))
        .sum()
}

fn theta_objective(responses: &[u8], items: &[ItemParams], theta: f64, prior_sd: f64) -> f64 {
    response_log_likelihood(responses, items, theta) - 0.5 * (theta / prior_sd).powi(2)
}

fn theta_derivatives(responses: &[u8], items: &[ItemParams], theta: f64, prior_sd: f64) -> (f64, f64) {
    let mut grad = -theta / (prior_sd * prior_sd);
    let mut curv = 1.0 / (prior_sd * prior_sd);
    for (&y, it) in responses.iter().zip(items) {
        let p = irf_2pl(theta, it);
        grad += it.a * (y as f64 - p);
        curv += it.a * it.a * p * (1.0 - p);
    }
    (grad, curv)
}

/// Safeguarded Newton ascent on the ability posterior, clamped to the
/// ability bounds. Returns the new theta.
fn theta_newton(
    responses: &[u8],
    items: &[ItemParams],
    start: f64,
    prior_sd: f64,
    max_steps: usize,
    grad_tol: f64,
) -> f64 {
    let mut theta = start.clamp(-THETA_BOUND, THETA_BOUND);
    let mut f = theta_objective(responses, items, theta, prior_sd);
    for _ in 0..max_steps {
        let (grad, curv) = theta_derivatives(responses, items, theta, prior_sd);
        if grad.abs() < grad_tol {
            break;
        }
        if (theta >= THETA_BOUND && grad > 0.0) || (theta <= -THETA_BOUND && grad < 0.0) {
            break;
        }
        let mut step = grad / curv;
        let mut moved = false;
        for _ in 0..40 {
            let cand = (theta + step).clamp(-THETA_BOUND, THETA_BOUND);
            let fc = theta_objective(responses, items, cand, prior_sd);
            if fc >= f {
                moved = cand != theta;
                theta = cand;
                f = fc;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    theta
}

/// MAP ability under a standard normal prior given fixed item parameters.
pub fn map_ability(responses: &[u8], items: &[ItemParams]) -> Result<AbilityEstimate> {
    if responses.is_empty() {
        return Err(Error::invalid("ability estimation needs at least one observed item"));
    }
    if responses.len() != items.len() {
        return Err(Error::invalid("responses and item parameters differ in length"));
    }
    let theta = theta_newton(responses, items, 0.0, 1.0, 200, 1e-12);
    Ok(AbilityEstimate {
        theta,
        log_likelihood: response_log_likelihood(responses, items, theta),
    })
}

struct ItemBlock<'a> {
    column: &'a [u8],
    thetas: &'a [f64],
    sd_log_a: f64,
    sd_b: f64,
}

impl ItemBlock<'_> {
    fn objective(&self, log_a: f64, b: f64) -> f64 {
        let a = log_a.exp();
        let ll: f64 = self
            .column
            .iter()
            .zip(self.thetas)
            .map(|(&y, &t)| log_bernoulli(y, a * (t - b)))
            .sum();
        ll - 0.5 * (log_a / self.sd_log_a).powi(2) - 0.5 * (b / self.sd_b).powi(2)
    }

    /// One Fisher-scoring step in (log a, b) with backtracking.
    fn step(&self, log_a: f64, b: f64) -> (f64, f64) {
        let a = log_a.exp();
        let mut g = [-log_a / self.sd_log_a.powi(2), -b / self.sd_b.powi(2)];
        let mut h = [
            1.0 / self.sd_log_a.powi(2),
            0.0,
            1.0 / self.sd_b.powi(2),
        ];
        for (&y, &t) in self.column.iter().zip(self.thetas) {
            let z = a * (t - b);
            let p = sigmoid(z);
            let r = y as f64 - p;
            let w = p * (1.0 - p);
            g[0] += r * z;
            g[1] -= r * a;
            h[0] += w * z * z;
            h[1] -= w * a * z;
            h[2] += w * a * a;
        }
        let det = h[0] * h[2] - h[1] * h[1];
        let (mut da, mut db) = if det > 1e-300 {
            ((h[2] * g[0] - h[1] * g[1]) / det, (h[0] * g[1] - h[1] * g[0]) / det)
        } else {
            (g[0] / h[0], g[1] / h[2])
        };
        let f0 = self.objective(log_a, b);
        for _ in 0..40 {
            let (ca, cb) = (log_a + da, b + db);
            if self.objective(ca, cb) >= f0 {
                return (ca, cb);
            }
            da *= 0.5;
            db *= 0.5;
        }
        (log_a, b)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Joint MAP fit of item and ability parameters on a binary response matrix.
///
/// Every item must have at least one 0 and one 1.
pub fn fit_2pl(responses: &ResponseMatrix, config: &IrtFitConfig) -> Result<IrtFit> {
    if !(config.tolerance > 0.0) {
        return Err(Error::invalid("IRT tolerance must be positive"));
    }
    let (n, m) = (responses.n_models(), responses.n_questions());
    if n == 0 || m == 0 {
        return Err(Error::invalid("IRT fit needs at least one model and one item"));
    }
    let columns: Vec<Vec<u8>> = (0..m)
        .map(|j| (0..n).map(|i| responses.get(i, j)).collect())
        .collect();
    for (j, col) in columns.iter().enumerate() {
        let s: usize = col.iter().map(|&v| v as usize).sum();
        if s == 0 || s == n {
            return Err(Error::invalid(format!(
                "item {} has a constant response pattern",
                responses.questions()[j].question_id
            )));
        }
    }
    let rows: Vec<&[u8]> = (0..n).map(|i| responses.row(i)).collect();

    // Initialization: standardized proportion correct for abilities,
    // negated logit of item easiness for difficulties.
    let props: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).sum::<f64>() / m as f64)
        .collect();
    let mean = props.iter().sum::<f64>() / n as f64;
    let sd = (props.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut thetas: Vec<f64> = props
        .iter()
        .map(|p| if sd > 0.0 { (p - mean) / sd } else { 0.0 })
        .map(|t| t.clamp(-3.0, 3.0))
        .collect();
    let mut rng = SplitMix64::new(config.seed);
    let mut log_a: Vec<f64> = (0..m).map(|_| rng.uniform(-0.05, 0.05)).collect();
    let mut b: Vec<f64> = columns
        .iter()
        .map(|c| {
            let p = c.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
            -logit(p.clamp(0.01, 0.99))
        })
        .collect();

    let items_of = |log_a: &[f64], b: &[f64]| -> Vec<ItemParams> {
        log_a
            .iter()
            .zip(b)
            .map(|(&la, &b)| ItemParams { a: la.exp(), b })
            .collect()
    };
    let objective = |thetas: &[f64], log_a: &[f64], b: &[f64]| -> f64 {
        let items = items_of(log_a, b);
        let ll: f64 = rows
            .iter()
            .zip(thetas)
            .map(|(r, &t)| theta_objective(r, &items, t, config.prior_theta_sd))
            .sum();
        let prior: f64 = log_a
            .iter()
            .zip(b)
            .map(|(la, b)| 0.5 * (la / config.prior_log_a_sd).powi(2) + 0.5 * (b / config.prior_b_sd).powi(2))
            .sum();
        ll - prior
    };

    let cells = (n * m) as f64;
    let mut current = objective(&thetas, &log_a, &b);
    let mut trace = vec![current];
    for _ in 0..config.max_iterations {
        let items = items_of(&log_a, &b);
        for (t, r) in thetas.iter_mut().zip(&rows) {
            *t = theta_newton(r, &items, *t, config.prior_theta_sd, 1, 0.0);
        }
        for j in 0..m {
            let block = ItemBlock {
                column: &columns[j],
                thetas: &thetas,
                sd_log_a: config.prior_log_a_sd,
                sd_b: config.prior_b_sd,
            };
            let (la, bj) = block.step(log_a[j], b[j]);
            log_a[j] = la;
            b[j] = bj;
        }
        let next = objective(&thetas, &log_a, &b);
        trace.push(next);
        let change = (next - current) / cells;
        current = next;
        if change.abs() < config.tolerance {
            break;
        }
    }

    let items = items_of(&log_a, &b);
    if items.iter().any(|it| !(it.a.is_finite() && it.a > 0.0 && it.b.is_finite())) {
        return Err(Error::invalid("IRT fit produced non-finite parameters"));
    }
    let abilities = rows
        .iter()
        .zip(&thetas)
        .map(|(r, &theta)| AbilityEstimate {
            theta,
            log_likelihood: response_log_likelihood(r, &items, theta),
        })
        .collect();
    Ok(IrtFit {
        items,
        abilities,
        objective_trace: trace,
    })
}

/// p-IRT with explicit predicted probabilities for the unseen items:
/// `lambda * mean(seen) + (1 - lambda) * mean(unseen)` with `lambda` the
/// fraction of items seen.
pub fn p_irt_from_predictions(seen: &[u8], unseen_probabilities: &[f64]) -> Result<f64> {
    let (s, u) = (seen.len(), unseen_probabilities.len());
    if s + u == 0 {
        return Err(Error::invalid("p-IRT needs at least one item"));
    }
    let lambda = s as f64 / (s + u) as f64;
    let seen_part = if s == 0 {
        0.0
    } else {
        seen.iter().map(|&v| v as f64).sum::<f64>() / s as f64
    };
    let unseen_part = if u == 0 {
        0.0
    } else {
        unseen_probabilities.iter().sum::<f64>() / u as f64
    };
    Ok(lambda * seen_part + (1.0 - lambda) * unseen_part)
}

/// p-IRT estimate of the full-benchmark score.
pub fn p_irt(seen: &[u8], unseen_items: &[ItemParams], theta: f64) -> Result<f64> {
    let probs: Vec<f64> = unseen_items.iter().map(|it| irf_2pl(theta, it)).collect();
    p_irt_from_predictions(seen, &probs)
}

/// gp-IRT: `mix * seen_accuracy + (1 - mix) * p_irt`.
pub fn gp_irt(p_irt_estimate: f64, seen_accuracy: f64, mix: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mix) {
        return Err(Error::invalid(format!("gp-IRT mixing coefficient {mix} outside [0, 1]")));
    }
    Ok(mix * seen_accuracy + (1.0 - mix) * p_irt_estimate)
}
