//! Single-hidden-layer regression network: `b + Σ_j v_j σ(w_jᵀx + c_j)`.

use ndarray::{ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation value `a`.
    #[inline]
    fn slope(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Full-batch training method. Both only accept steps that lower the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    /// Gradient descent with a multiplicatively adapted step.
    GradientDescent,
    /// Quasi-Newton updates of an inverse Hessian with a backtracking line search.
    #[default]
    Bfgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyNnConfig {
    pub hidden: usize,
    pub activation: Activation,
    pub optimizer: Optimizer,
    pub max_iterations: usize,
    /// Starting step size for gradient descent; grown by 5% after an
    /// accepted step and halved after a rejected one.
    pub initial_step: f64,
    /// Stop once the relative loss decrease of an accepted step falls below this.
    pub tolerance: f64,
    /// Hidden-layer weights start uniform in `[-init_range, init_range]`.
    pub init_range: f64,
    /// Fit on responses scaled to zero mean and unit variance.
    pub standardize_responses: bool,
    pub seed: u64,
}

impl Default for TinyNnConfig {
    fn default() -> Self {
        Self {
            hidden: 5,
            activation: Activation::Sigmoid,
            optimizer: Optimizer::default(),
            max_iterations: 500,
            initial_step: 0.5,
            tolerance: 1e-8,
            init_range: 0.7,
            standardize_responses: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyNn {
    dims: usize,
    hidden: usize,
    activation: Activation,
    /// `hidden × dims`, row-major.
    input_weights: Vec<f64>,
    hidden_bias: Vec<f64>,
    output_weights: Vec<f64>,
    output_bias: f64,
    response_mean: f64,
    response_scale: f64,
}

/// Loss after every accepted step; the first entry is the initial loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub iterations: usize,
    pub loss_history: Vec<f64>,
    pub converged: bool,
}

impl TrainingReport {
    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().unwrap_or(&f64::NAN)
    }
}

struct Layout {
    dims: usize,
    hidden: usize,
}

impl Layout {
    fn len(&self) -> usize {
        self.hidden * (self.dims + 2) + 1
    }
    fn w1(&self) -> std::ops::Range<usize> {
        0..self.hidden * self.dims
    }
    fn b1(&self) -> std::ops::Range<usize> {
        let s = self.hidden * self.dims;
        s..s + self.hidden
    }
    fn w2(&self) -> std::ops::Range<usize> {
        let s = self.hidden * (self.dims + 1);
        s..s + self.hidden
    }
    fn b2(&self) -> usize {
        self.hidden * (self.dims + 2)
    }
}

/// Mean squared error and its gradient at `params`.
fn loss_and_gradient(
    layout: &Layout,
    activation: Activation,
    params: &[f64],
    inputs: ArrayView2<'_, f64>,
    targets: &[f64],
    grad: &mut [f64],
) -> f64 {
    let (dims, hidden) = (layout.dims, layout.hidden);
    let w1 = &params[layout.w1()];
    let b1 = &params[layout.b1()];
    let w2 = &params[layout.w2()];
    let b2 = params[layout.b2()];
    grad.iter_mut().for_each(|g| *g = 0.0);
    let n = targets.len() as f64;
    let mut act = vec![0.0; hidden];
    let mut loss = 0.0;
    for (row, &y) in inputs.rows().into_iter().zip(targets) {
        let mut out = b2;
        for j in 0..hidden {
            let z = b1[j] + (0..dims).map(|k| w1[j * dims + k] * row[k]).sum::<f64>();
            act[j] = activation.apply(z);
            out += w2[j] * act[j];
        }
        let err = out - y;
        loss += err * err;
        let g = 2.0 * err / n;
        grad[layout.b2()] += g;
        for j in 0..hidden {
            grad[layout.w2().start + j] += g * act[j];
            let dz = g * w2[j] * activation.slope(act[j]);
            grad[layout.b1().start + j] += dz;
            for k in 0..dims {
                grad[j * dims + k] += dz * row[k];
            }
        }
    }
    loss / n
}

fn loss_only(layout: &Layout, activation: Activation, params: &[f64], inputs: ArrayView2<'_, f64>, targets: &[f64]) -> f64 {
    let mut scratch = vec![0.0; layout.len()];
    loss_and_gradient(layout, activation, params, inputs, targets, &mut scratch)
}

/// Fits a [`TinyNn`] to `dataset` with the configured optimizer.
///
/// Rejected steps leave the parameters unchanged, so the recorded loss
/// never increases.
pub fn train_tiny_nn(dataset: &Dataset, config: &TinyNnConfig) -> Result<(TinyNn, TrainingReport)> {
    let n = dataset.len();
    if n < 10 {
        return Err(Error::InvalidArgument(format!(
            "network training needs at least 10 rows, got {n}"
        )));
    }
    if config.hidden == 0 || !(config.initial_step > 0.0) {
        return Err(Error::InvalidArgument(
            "hidden width and initial step must be positive".into(),
        ));
    }
    let layout = Layout {
        dims: dataset.dims(),
        hidden: config.hidden,
    };
    let responses = dataset.responses();
    let (mean, scale) = if config.standardize_responses {
        standardization(responses)
    } else {
        (0.0, 1.0)
    };
    let targets: Vec<f64> = responses.iter().map(|y| (y - mean) / scale).collect();
    let inputs = dataset.inputs();

    let mut rng = rng::stream(config.seed, &[rng::NN_INIT]);
    let mut params = vec![0.0; layout.len()];
    for p in &mut params[layout.w1().start..layout.b1().end] {
        *p = rng.random_range(-config.init_range..=config.init_range);
    }
    // Output layer starts at zero: the initial fit is the response mean.
    params[layout.b2()] = targets.iter().sum::<f64>() / n as f64;

    let problem = Problem {
        layout: &layout,
        activation: config.activation,
        inputs,
        targets: &targets,
    };
    let (iterations, history, converged) = match config.optimizer {
        Optimizer::GradientDescent => gradient_descent(&problem, &mut params, config)?,
        Optimizer::Bfgs => bfgs(&problem, &mut params, config)?,
    };

    let net = TinyNn {
        dims: layout.dims,
        hidden: layout.hidden,
        activation: config.activation,
        input_weights: params[layout.w1()].to_vec(),
        hidden_bias: params[layout.b1()].to_vec(),
        output_weights: params[layout.w2()].to_vec(),
        output_bias: params[layout.b2()],
        response_mean: mean,
        response_scale: scale,
    };
    Ok((
        net,
        TrainingReport {
            iterations,
            loss_history: history,
            converged,
        },
    ))
}

struct Problem<'a> {
    layout: &'a Layout,
    activation: Activation,
    inputs: ArrayView2<'a, f64>,
    targets: &'a [f64],
}

impl Problem<'_> {
    fn eval(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        loss_and_gradient(self.layout, self.activation, params, self.inputs, self.targets, grad)
    }

    fn loss(&self, params: &[f64]) -> f64 {
        loss_only(self.layout, self.activation, params, self.inputs, self.targets)
    }
}

type Trace = (usize, Vec<f64>, bool);

fn relative_drop(previous: f64, loss: f64) -> f64 {
    if previous > 0.0 {
        (previous - loss) / previous
    } else {
        0.0
    }
}

fn gradient_descent(problem: &Problem<'_>, params: &mut Vec<f64>, config: &TinyNnConfig) -> Result<Trace> {
    let len = params.len();
    let mut grad = vec![0.0; len];
    let mut trial = vec![0.0; len];
    let mut loss = problem.eval(params, &mut grad);
    if !loss.is_finite() {
        return Err(Error::TrainingDiverged { iteration: 0, loss });
    }
    let mut history = vec![loss];
    let mut step = config.initial_step;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        if grad.iter().all(|&g| g == 0.0) {
            return Ok((iterations, history, true));
        }
        for ((t, p), g) in trial.iter_mut().zip(params.iter()).zip(&grad) {
            *t = p - step * g;
        }
        let trial_loss = problem.loss(&trial);
        if !trial_loss.is_finite() && step < 1e-12 {
            return Err(Error::TrainingDiverged {
                iteration: iterations,
                loss: trial_loss,
            });
        }
        if trial_loss.is_finite() && trial_loss <= loss {
            std::mem::swap(params, &mut trial);
            let previous = loss;
            loss = problem.eval(params, &mut grad);
            history.push(loss);
            step *= 1.05;
            if loss == 0.0 || relative_drop(previous, loss) < config.tolerance {
                return Ok((iterations, history, true));
            }
        } else {
            step *= 0.5;
        }
    }
    Ok((iterations, history, false))
}

fn bfgs(problem: &Problem<'_>, params: &mut Vec<f64>, config: &TinyNnConfig) -> Result<Trace> {
    let len = params.len();
    let mut grad = vec![0.0; len];
    let mut loss = problem.eval(params, &mut grad);
    if !loss.is_finite() {
        return Err(Error::TrainingDiverged { iteration: 0, loss });
    }
    let identity = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        (0..len).for_each(|i| h[i * len + i] = 1.0);
    };
    let mut h = vec![0.0; len * len];
    identity(&mut h);
    let mut history = vec![loss];
    let mut direction = vec![0.0; len];
    let mut trial = vec![0.0; len];
    let mut trial_grad = vec![0.0; len];
    let mut s = vec![0.0; len];
    let mut y = vec![0.0; len];
    let mut hy = vec![0.0; len];
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        if grad.iter().all(|&g| g == 0.0) {
            return Ok((iterations, history, true));
        }
        for i in 0..len {
            direction[i] = -(0..len).map(|j| h[i * len + j] * grad[j]).sum::<f64>();
        }
        let mut slope: f64 = direction.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if !(slope < 0.0) {
            identity(&mut h);
            direction.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            slope = -grad.iter().map(|g| g * g).sum::<f64>();
        }

        // Backtracking until the Armijo condition holds.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            for ((t, p), d) in trial.iter_mut().zip(params.iter()).zip(&direction) {
                *t = p + step * d;
            }
            let trial_loss = problem.eval(&trial, &mut trial_grad);
            if trial_loss.is_finite() && trial_loss <= loss + 1e-4 * step * slope {
                accepted = Some(trial_loss);
                break;
            }
            step *= 0.5;
        }
        let Some(new_loss) = accepted else {
            // No decrease along this direction: the fit is at a stationary point
            // to working precision.
            return Ok((iterations, history, true));
        };

        for i in 0..len {
            s[i] = trial[i] - params[i];
            y[i] = trial_grad[i] - grad[i];
        }
        std::mem::swap(params, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        let previous = loss;
        loss = new_loss;
        history.push(loss);

        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            for i in 0..len {
                hy[i] = (0..len).map(|j| h[i * len + j] * y[j]).sum();
            }
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            let coef = (1.0 + yhy * rho) * rho;
            for i in 0..len {
                for j in 0..len {
                    h[i * len + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        if loss == 0.0 || relative_drop(previous, loss) < config.tolerance {
            return Ok((iterations, history, true));
        }
    }
    Ok((iterations, history, false))
}

fn standardization(responses: ArrayView1<'_, f64>) -> (f64, f64) {
    let n = responses.len() as f64;
    let mean = responses.sum() / n;
    let var = responses.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

impl TinyNn {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn predict_point(&self, x: &[f64]) -> f64 {
        let mut out = self.output_bias;
        for j in 0..self.hidden {
            let z = self.hidden_bias[j]
                + (0..self.dims)
                    .map(|k| self.input_weights[j * self.dims + k] * x[k])
                    .sum::<f64>();
            out += self.output_weights[j] * self.activation.apply(z);
        }
        self.response_mean + self.response_scale * out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl Predictor for TinyNn {
    fn dims(&self) -> usize {
        self.dims
    }

    fn predict_batch(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.dims];
        Ok(points
            .rows()
            .into_iter()
            .map(|r| {
                row.iter_mut().zip(r.iter()).for_each(|(a, &b)| *a = b);
                self.predict_point(&row)
            })
            .collect())
    }
}
