//! Adam with bias correction over a list of flat parameter buffers.

use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.5;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Vec<f32>>,
    pub second_moment: Vec<Vec<f32>>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub learning_rate: f64,
}

impl AdamState {
    /// Zeroed moments for buffers of the given lengths, with this crate's
    /// default betas (0.5, 0.999) and eps 1e-8.
    pub fn new(layout: &[usize], learning_rate: f64) -> Self {
        Self::with_hyper(layout, learning_rate, ADAM_BETA1, ADAM_BETA2, ADAM_EPS)
    }

    pub fn with_hyper(layout: &[usize], learning_rate: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        AdamState {
            first_moment: layout.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: layout.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
            beta1,
            beta2,
            eps,
            learning_rate,
        }
    }
}

/// One Adam update. Gradients are checked for NaN/Inf before anything is
/// modified; on failure params and state are untouched.
pub fn adam_step(params: &mut [&mut [f32]], grads: &[&[f32]], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::contract(format!(
            "adam_step: {} param buffers, {} grad buffers, {} moment buffers",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    for (k, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.first_moment[k].len() {
            return Err(Error::contract(format!(
                "adam_step: buffer {k} has {} params, {} grads, {} moments",
                p.len(),
                g.len(),
                state.first_moment[k].len()
            )));
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                iteration: state.step_count as usize,
                detail: format!("gradient buffer {k} element {i} is {}", g[i]),
            });
        }
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.first_moment[k];
        let v = &mut state.second_moment[k];
        for i in 0..p.len() {
            let gi = g[i] as f64;
            let mi = b1 * m[i] as f64 + (1.0 - b1) * gi;
            let vi = b2 * v[i] as f64 + (1.0 - b2) * gi * gi;
            m[i] = mi as f32;
            v[i] = vi as f32;
            let update = lr * (mi / c1) / ((vi / c2).sqrt() + state.eps);
            p[i] = (p[i] as f64 - update) as f32;
        }
    }
    Ok(())
}
