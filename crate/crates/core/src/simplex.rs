//! Projected gradient ascent on the probability simplex.

/// Euclidean projection of `v` onto `{ x : x_j >= 0, sum x_j = 1 }`.
///
/// Sort-based algorithm: find the largest threshold `theta` such that
/// `max(v_j - theta, 0)` sums to one.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "cannot project an empty vector");
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &value) in sorted.iter().enumerate() {
        cumulative += value;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if value - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Stopping and step rules for [`projected_gradient_ascent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    /// First trial step of each backtracking search.
    pub initial_step: f64,
    pub max_iterations: usize,
    /// Converged once no coordinate moves by more than this.
    pub tolerance: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self { initial_step: 0.1, max_iterations: 10_000, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes a concave `objective` over the simplex starting from `start`.
///
/// Each iteration projects `x + step * grad` back onto the simplex, halving
/// the step from `initial_step` until the Armijo sufficient-increase test
/// passes.
pub fn projected_gradient_ascent<F, G>(
    objective: F,
    gradient: G,
    start: &[f64],
    options: AscentOptions,
) -> AscentResult
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    const ARMIJO: f64 = 1e-4;
    const MIN_STEP: f64 = 1e-300;

    let mut x = project_to_simplex(start);
    let mut value = objective(&x);
    for iteration in 1..=options.max_iterations {
        let grad = gradient(&x);
        let mut step = options.initial_step;
        let (candidate, candidate_value) = loop {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + step * gi).collect();
            let trial = project_to_simplex(&trial);
            let trial_value = objective(&trial);
            let predicted: f64 = grad.iter().zip(trial.iter().zip(&x)).map(|(g, (t, xi))| g * (t - xi)).sum();
            if trial_value >= value + ARMIJO * predicted || step < MIN_STEP {
                break (trial, trial_value);
            }
            step *= 0.5;
        };
        let change = candidate.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = candidate;
        value = candidate_value;
        if change < options.tolerance {
            return AscentResult { point: x, value, iterations: iteration, converged: true };
        }
    }
    AscentResult { point: x, value, iterations: options.max_iterations, converged: false }
}
