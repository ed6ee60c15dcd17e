//! Central finite differences against [`Network::backward_scalar_target`].

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::tinynn::{LayerSpec, Network, Params};

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_REL_TOL: f64 = 1e-4;
pub const DEFAULT_ABS_TOL: f64 = 1e-8;

/// Pre-activations closer than this to a ReLU kink make the finite
/// difference straddle it, so trial inputs are redrawn.
const KINK_MARGIN: f64 = 1e-3;

fn loss(net: &Network, input: &[f64], idx: usize, target: f64) -> Result<f64> {
    let y = net.predict(input)?[idx];
    Ok((y - target) * (y - target))
}

/// Central-difference estimate of the gradient of `(net(x)[idx] − target)²`
/// with respect to every parameter.
pub fn numerical_gradients(
    net: &Network,
    input: &[f64],
    idx: usize,
    target: f64,
    h: f64,
) -> Result<Params> {
    let mut probe = net.clone();
    let mut grads = Params::zeros_like(&net.params);
    let n = net.params.num_params();
    for i in 0..n {
        let orig = *probe.params.iter().nth(i).expect("index in range");
        *probe.params.iter_mut().nth(i).expect("index in range") = orig + h;
        let up = loss(&probe, input, idx, target)?;
        *probe.params.iter_mut().nth(i).expect("index in range") = orig - h;
        let down = loss(&probe, input, idx, target)?;
        *probe.params.iter_mut().nth(i).expect("index in range") = orig;
        *grads.iter_mut().nth(i).expect("index in range") = (up - down) / (2.0 * h);
    }
    Ok(grads)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientComparison {
    pub params: usize,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    /// Entries outside both tolerances.
    pub failures: usize,
}

impl GradientComparison {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub fn compare(
    analytic: &Params,
    numeric: &Params,
    rel_tol: f64,
    abs_tol: f64,
) -> GradientComparison {
    let mut out = GradientComparison {
        params: analytic.num_params(),
        max_abs_err: 0.0,
        max_rel_err: 0.0,
        failures: 0,
    };
    for (&a, &n) in analytic.iter().zip(numeric.iter()) {
        let abs = (a - n).abs();
        let scale = a.abs().max(n.abs());
        let rel = if scale > 0.0 { abs / scale } else { 0.0 };
        out.max_abs_err = out.max_abs_err.max(abs);
        out.max_rel_err = out.max_rel_err.max(rel);
        if abs > abs_tol && rel > rel_tol {
            out.failures += 1;
        }
    }
    out
}

/// Backprop gradient vs. finite differences for one `(net, input, target)`.
/// Dropout is not applied.
pub fn check(net: &Network, input: &[f64], idx: usize, target: f64) -> Result<GradientComparison> {
    let (_, trace) = net.forward(input, false, &mut crate::rng::SimRng::seed_from_u64(0))?;
    let analytic = net.backward_scalar_target(&trace, idx, target)?;
    let numeric = numerical_gradients(net, input, idx, target, DEFAULT_STEP)?;
    Ok(compare(
        &analytic,
        &numeric,
        DEFAULT_REL_TOL,
        DEFAULT_ABS_TOL,
    ))
}

#[derive(Debug, Clone)]
pub struct Trial {
    pub net: Network,
    pub input: Vec<f64>,
    pub idx: usize,
    pub target: f64,
}

fn min_abs_preactivation(net: &Network, input: &[f64]) -> Result<f64> {
    let (_, trace) = net.forward(input, false, &mut crate::rng::SimRng::seed_from_u64(0))?;
    let hidden_layers = trace.pre.len().saturating_sub(1);
    Ok(trace.pre[..hidden_layers]
        .iter()
        .flatten()
        .fold(f64::INFINITY, |m, z| m.min(z.abs())))
}

/// A random network no larger than `[16, 8, 8, 4]` with a random input,
/// output index and target.
pub fn random_trial<R: Rng + ?Sized>(rng: &mut R) -> Result<Trial> {
    let depth = rng.random_range(0..=2);
    let mut sizes = vec![rng.random_range(1..=16)];
    sizes.extend((0..depth).map(|_| rng.random_range(1..=8)));
    sizes.push(rng.random_range(1..=4));
    let net = Network::init(LayerSpec::new(sizes.clone(), 0.0)?, rng)?;
    let input = loop {
        let x: Vec<f64> = (0..sizes[0]).map(|_| rng.sample(StandardNormal)).collect();
        if min_abs_preactivation(&net, &x)? > KINK_MARGIN {
            break x;
        }
    };
    Ok(Trial {
        idx: rng.random_range(0..sizes[sizes.len() - 1]),
        target: rng.sample(StandardNormal),
        net,
        input,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradientReport {
    pub trials: usize,
    /// Layer sizes of every trial that failed.
    pub failed: Vec<Vec<usize>>,
    pub worst_abs_err: f64,
    /// Also counts entries that passed on the absolute tolerance.
    pub worst_rel_err: f64,
}

impl GradientReport {
    pub fn passed(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Runs `trials` random checks from `seed`.
pub fn run_trials(trials: usize, seed: u64) -> Result<GradientReport> {
    let mut rng = crate::rng::SimRng::seed_from_u64(seed);
    let mut report = GradientReport {
        trials,
        ..GradientReport::default()
    };
    for _ in 0..trials {
        let t = random_trial(&mut rng)?;
        let c = check(&t.net, &t.input, t.idx, t.target)?;
        report.worst_abs_err = report.worst_abs_err.max(c.max_abs_err);
        report.worst_rel_err = report.worst_rel_err.max(c.max_rel_err);
        if !c.passed() {
            report.failed.push(t.net.spec.sizes.clone());
        }
    }
    Ok(report)
}
