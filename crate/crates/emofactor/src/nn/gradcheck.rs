//! Central finite-difference verification of analytic gradients.

use super::HasTensors;

/// Result of a full-model gradient check.
#[derive(Debug, Clone)]
pub struct GradCheck {
    pub max_rel_err: f64,
    /// name and flat index of the worst element
    pub worst: String,
    pub checked: usize,
}

/// Compares every analytic gradient element against a central difference of
/// `loss`. The loss closure must be deterministic and must not mutate state.
///
/// Relative error uses max(|analytic|, |numeric|, floor) as denominator so
/// elements with near-zero gradient do not blow up on rounding noise.
pub fn check_gradients<M, G>(
    model: &mut M,
    analytic: &G,
    eps: f64,
    loss: impl Fn(&M) -> f64,
) -> GradCheck
where
    M: HasTensors,
    G: HasTensors,
{
    let names: Vec<&'static str> = model.tensors().iter().map(|(n, _)| *n).collect();
    let grad_vals: Vec<Vec<f64>> = analytic
        .tensors()
        .iter()
        .map(|(_, t)| t.as_slice().to_vec())
        .collect();
    assert_eq!(names.len(), grad_vals.len());

    let mut max_rel = 0.0;
    let mut worst = String::new();
    let mut checked = 0;

    for k in 0..names.len() {
        for i in 0..grad_vals[k].len() {
            let orig = perturb(model, k, i, eps);
            let lp = loss(model);
            set(model, k, i, orig - eps);
            let lm = loss(model);
            set(model, k, i, orig);

            let numeric = (lp - lm) / (2.0 * eps);
            let a = grad_vals[k][i];
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            let rel = (a - numeric).abs() / denom;
            if rel > max_rel {
                max_rel = rel;
                worst = format!("{}[{}] analytic={} numeric={}", names[k], i, a, numeric);
            }
            checked += 1;
        }
    }

    GradCheck {
        max_rel_err: max_rel,
        worst,
        checked,
    }
}

fn perturb<M: HasTensors>(model: &mut M, k: usize, i: usize, eps: f64) -> f64 {
    let mut ts = model.tensors_mut();
    let s = ts[k].1.as_slice_mut();
    let orig = s[i];
    s[i] = orig + eps;
    orig
}

fn set<M: HasTensors>(model: &mut M, k: usize, i: usize, value: f64) {
    let mut ts = model.tensors_mut();
    ts[k].1.as_slice_mut()[i] = value;
}
