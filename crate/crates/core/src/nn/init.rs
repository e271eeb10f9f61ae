//! Seeded parameter initialization. Every tensor draws from its own keyed
//! stream (`init.<param name>`), so adding or removing parameters elsewhere
//! in the model never shifts another tensor's draws — this is what makes
//! ablations with disjoint parameter sets comparable seed-for-seed.

use crate::rng::stream;
use ndarray::{ArrayD, IxDyn};
use autograd::Scalar;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Standard normal draw (Box–Muller, matching the corpus module's sampler).
pub fn normal_unit(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Gaussian tensor with the stream keyed by the parameter name.
pub fn normal_tensor<F: Scalar>(seed: u64, name: &str, shape: &[usize], std: f64) -> ArrayD<F> {
    let mut rng = stream(seed, &format!("init.{name}"));
    let mut out = ArrayD::<F>::zeros(IxDyn(shape));
    for v in out.iter_mut() {
        *v = F::lit(normal_unit(&mut rng) * std);
    }
    out
}

pub fn full<F: Scalar>(shape: &[usize], value: f64) -> ArrayD<F> {
    ArrayD::from_elem(IxDyn(shape), F::lit(value))
}

pub fn zeros<F: Scalar>(shape: &[usize]) -> ArrayD<F> {
    ArrayD::zeros(IxDyn(shape))
}

/// He-style std for a conv kernel `[out, in, kh, kw]`.
pub fn he_std(fan_in: usize) -> f64 {
    (2.0 / fan_in as f64).sqrt()
}

/// Glorot-style std for a dense map `[in, out]`.
pub fn glorot_std(fan_in: usize, fan_out: usize) -> f64 {
    (2.0 / (fan_in + fan_out) as f64).sqrt()
}
