use super::{ParamSet, Rng};

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub eps: f64,
    /// Coordinates checked per tensor (all of them for smaller tensors).
    pub samples_per_tensor: usize,
    /// Seed for choosing coordinates in large tensors.
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            eps: 1e-3,
            samples_per_tensor: 64,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates excluded by the caller (max-pool near-ties).
    pub skipped: usize,
    /// `(param, index, analytic, numeric)` at the maximum error.
    pub worst: Option<(String, usize, f64, f64)>,
}

/// `|a − n| / max(|a|, |n|, 1e-8)`
fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares the gradients currently stored in `params` against central
/// differences `(f(θ+ε) − f(θ−ε)) / 2ε` of `loss`.
///
/// For tensors larger than `samples_per_tensor`, the checked coordinates are
/// drawn from those with a non-zero analytic gradient first, then topped up
/// with random ones. `exclude(name, index)` removes coordinates where the
/// loss is not differentiable. Parameter values are restored on return.
pub fn grad_check<F, X>(
    params: &mut ParamSet,
    mut loss: F,
    options: &GradCheckOptions,
    exclude: X,
) -> GradCheckReport
where
    F: FnMut(&ParamSet) -> f64,
    X: Fn(&str, usize) -> bool,
{
    let mut rng = Rng::seed_from(options.seed);
    let mut report = GradCheckReport::default();
    let names: Vec<String> = params.names().map(String::from).collect();

    for name in &names {
        let (coords, analytic) = {
            let p = params.param(name);
            let grad = p.grad.data();
            let coords = choose_coordinates(grad, options.samples_per_tensor, &mut rng);
            let analytic: Vec<f64> = coords.iter().map(|&i| grad[i]).collect();
            (coords, analytic)
        };
        for (&i, &a) in coords.iter().zip(&analytic) {
            if exclude(name, i) {
                report.skipped += 1;
                continue;
            }
            let original = params.get(name).data()[i];
            params.param_mut(name).value.data_mut()[i] = original + options.eps;
            let plus = loss(params);
            params.param_mut(name).value.data_mut()[i] = original - options.eps;
            let minus = loss(params);
            params.param_mut(name).value.data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * options.eps);
            let err = relative_error(a, numeric);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((name.clone(), i, a, numeric));
            }
        }
    }
    report
}

fn choose_coordinates(grad: &[f64], samples: usize, rng: &mut Rng) -> Vec<usize> {
    if grad.len() <= samples {
        return (0..grad.len()).collect();
    }
    let nonzero: Vec<usize> = (0..grad.len()).filter(|&i| grad[i] != 0.0).collect();
    let mut chosen: Vec<usize> = rng
        .sample_indices(nonzero.len(), samples)
        .into_iter()
        .map(|k| nonzero[k])
        .collect();
    while chosen.len() < samples {
        let i = rng.below(grad.len());
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    chosen
}
