use std::collections::BTreeMap;

use super::{Rng, Tensor};
use crate::error::{Error, Result};

/// A trainable tensor with its gradient accumulator and Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
    m: Tensor,
    v: Tensor,
}

impl Param {
    pub fn new(value: Tensor) -> Self {
        let shape = value.shape().to_vec();
        Param {
            value,
            grad: Tensor::zeros(&shape),
            m: Tensor::zeros(&shape),
            v: Tensor::zeros(&shape),
        }
    }
}

/// Named parameters, iterated in name order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    params: BTreeMap<String, Param>,
    step: u64,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics on a duplicate name.
    pub fn insert(&mut self, name: &str, value: Tensor) {
        let previous = self.params.insert(name.to_string(), Param::new(value));
        assert!(previous.is_none(), "duplicate parameter {name:?}");
    }

    pub fn get(&self, name: &str) -> &Tensor {
        &self.param(name).value
    }

    pub fn param(&self, name: &str) -> &Param {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("no parameter {name:?}"))
    }

    pub fn param_mut(&mut self, name: &str) -> &mut Param {
        self.params
            .get_mut(name)
            .unwrap_or_else(|| panic!("no parameter {name:?}"))
    }

    pub fn grad_mut(&mut self, name: &str) -> &mut Tensor {
        &mut self.param_mut(name).grad
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn num_values(&self) -> usize {
        self.params.values().map(|p| p.value.len()).sum()
    }

    /// Number of Adam updates applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn zero_grads(&mut self) {
        for p in self.params.values_mut() {
            p.grad.fill(0.0);
        }
    }

    /// Checks that `self` holds exactly the given names and shapes.
    pub fn check_shapes(&self, expected: &[(&str, Vec<usize>)]) -> Result<()> {
        if self.params.len() != expected.len() {
            return Err(Error::Shape(format!(
                "expected {} parameters, found {}",
                expected.len(),
                self.params.len()
            )));
        }
        for (name, shape) in expected {
            let found = self
                .params
                .get(*name)
                .ok_or_else(|| Error::Shape(format!("missing parameter {name:?}")))?;
            if found.value.shape() != shape.as_slice() {
                return Err(Error::Shape(format!(
                    "parameter {name:?} has shape {:?}, expected {shape:?}",
                    found.value.shape()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Self::default()
        }
    }
}

/// One bias-corrected Adam update over every parameter, then zeroes the
/// gradients.
pub fn adam_step(params: &mut ParamSet, config: &AdamConfig) {
    params.step += 1;
    let t = params.step as i32;
    let correct1 = 1.0 - config.beta1.powi(t);
    let correct2 = 1.0 - config.beta2.powi(t);
    for p in params.params.values_mut() {
        let Param { value, grad, m, v } = p;
        let entries = value
            .data_mut()
            .iter_mut()
            .zip(grad.data_mut())
            .zip(m.data_mut().iter_mut().zip(v.data_mut()));
        for ((x, g), (m, v)) in entries {
            // entries never touched stay exactly where they are
            if *g == 0.0 && *m == 0.0 && *v == 0.0 {
                continue;
            }
            *m = config.beta1 * *m + (1.0 - config.beta1) * *g;
            *v = config.beta2 * *v + (1.0 - config.beta2) * *g * *g;
            let m_hat = *m / correct1;
            let v_hat = *v / correct2;
            *x -= config.lr * m_hat / (v_hat.sqrt() + config.eps);
            *g = 0.0;
        }
    }
}

/// Uniform(−s, s) with `s = sqrt(6 / (fan_in + fan_out))`, where a
/// `[rows × cols]` tensor has `fan_out = rows` and `fan_in = cols`.
pub fn glorot_uniform(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let fan_out = shape.first().copied().unwrap_or(1);
    let fan_in: usize = shape.iter().skip(1).product::<usize>().max(1);
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform(-s, s)).collect();
    Tensor::from_vec(shape, data).expect("length matches shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(value: f64) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.insert("x", Tensor::vector(&[value]));
        ps
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut ps = scalar(3.0);
        for _ in 0..5 {
            adam_step(&mut ps, &AdamConfig::default());
        }
        assert_eq!(ps.get("x").data(), &[3.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m̂ = g, v̂ = g², so the first update is lr·g/(|g| + ε)
        let mut ps = scalar(1.0);
        ps.grad_mut("x").data_mut()[0] = 1.0;
        adam_step(&mut ps, &AdamConfig::with_lr(0.1));
        let expected = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
        assert!((ps.get("x").data()[0] - expected).abs() < 1e-15);
        assert_eq!(ps.param("x").grad.data(), &[0.0]);
    }

    #[test]
    fn identical_runs_identical_params() {
        let run = || {
            let mut rng = Rng::seed_from(9);
            let mut ps = ParamSet::new();
            ps.insert("w", glorot_uniform(&mut rng, &[4, 3]));
            for step in 0..10 {
                let g: Vec<f64> = (0..12).map(|i| ((i * step) as f64).sin()).collect();
                ps.grad_mut("w").data_mut().copy_from_slice(&g);
                adam_step(&mut ps, &AdamConfig::default());
            }
            ps
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = Rng::seed_from(0);
        let t = glorot_uniform(&mut rng, &[10, 20]);
        let s = (6.0f64 / 30.0).sqrt();
        assert!(t.data().iter().all(|x| x.abs() < s));
    }

    #[test]
    fn shape_check() {
        let ps = scalar(0.0);
        assert!(ps.check_shapes(&[("x", vec![1])]).is_ok());
        assert!(ps.check_shapes(&[("x", vec![2])]).is_err());
        assert!(ps.check_shapes(&[("y", vec![1])]).is_err());
    }
}
