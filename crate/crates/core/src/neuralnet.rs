//! Dense feed-forward networks with exact reverse-mode gradients.
//!
//! Hidden layers use ReLU (derivative 0 at exactly 0). The output layer is
//! either linear or a projection onto the unit sphere. Training is plain SGD
//! on single samples; [`Mlp::backward_step`] fuses gradient computation and
//! the update so large layers are streamed through memory once.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SimRng;
use crate::scalar::Real;

/// Norm floor of the unit-normalizing output.
pub const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputActivation {
    Linear,
    UnitNormalize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Descent,
    Ascent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layer_dims: Vec<usize>,
    /// Per layer, row-major `out x in`.
    weights: Vec<Vec<T>>,
    biases: Vec<Vec<T>>,
    output_activation: OutputActivation,
}

/// Per-layer inputs recorded by a forward pass.
///
/// `activations[0]` is the network input, `activations[l]` the post-ReLU
/// output of hidden layer `l`, and the last entry the final affine output
/// before the output activation.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    activations: Vec<Vec<T>>,
    output: Vec<T>,
}

impl<T: Real> ForwardCache<T> {
    pub fn output(&self) -> &[T] {
        &self.output
    }

    pub fn input(&self) -> &[T] {
        &self.activations[0]
    }

    /// Input, post-ReLU hidden activations, and the final affine output.
    pub fn activations(&self) -> &[Vec<T>] {
        &self.activations
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
    pub input: Vec<T>,
}

impl<T: Real> Mlp<T> {
    /// Xavier-normal weights `N(0, 2 / (fan_in + fan_out))`, zero biases.
    pub fn init_xavier(
        layer_dims: &[usize],
        output_activation: OutputActivation,
        rng: &mut SimRng,
    ) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let sd = T::lit((2.0 / (fan_in + fan_out) as f64).sqrt());
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.normal::<T>() * sd)
                    .collect(),
            );
            biases.push(vec![T::zero(); fan_out]);
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            output_activation,
        })
    }

    /// All-zero parameters.
    pub fn zeros(layer_dims: &[usize], output_activation: OutputActivation) -> Result<Self> {
        validate_dims(layer_dims)?;
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights: layer_dims
                .windows(2)
                .map(|p| vec![T::zero(); p[0] * p[1]])
                .collect(),
            biases: layer_dims
                .windows(2)
                .map(|p| vec![T::zero(); p[1]])
                .collect(),
            output_activation,
        })
    }

    pub fn from_parts(
        layer_dims: Vec<usize>,
        weights: Vec<Vec<T>>,
        biases: Vec<Vec<T>>,
        output_activation: OutputActivation,
    ) -> Result<Self> {
        validate_dims(&layer_dims)?;
        let layers = layer_dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::Dimension(format!(
                "{layers} layers need {layers} weight and bias blocks, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for (l, pair) in layer_dims.windows(2).enumerate() {
            if weights[l].len() != pair[0] * pair[1] || biases[l].len() != pair[1] {
                return Err(Error::Dimension(format!(
                    "layer {l}: expected {}x{} weights and {} biases",
                    pair[1], pair[0], pair[1]
                )));
            }
        }
        if weights
            .iter()
            .chain(&biases)
            .flatten()
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(Self {
            layer_dims,
            weights,
            biases,
            output_activation,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("validated dims")
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output_activation
    }

    pub fn weights(&self, layer: usize) -> &[T] {
        &self.weights[layer]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [T] {
        &mut self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &[T] {
        &self.biases[layer]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [T] {
        &mut self.biases[layer]
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    pub fn forward(&self, x: &[T]) -> Result<ForwardCache<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let last = self.n_layers() - 1;
        let mut activations = Vec::with_capacity(self.n_layers() + 1);
        activations.push(x.to_vec());
        for l in 0..self.n_layers() {
            let input = &activations[l];
            let n_in = self.layer_dims[l];
            let mut out: Vec<T> = self.weights[l]
                .chunks_exact(n_in)
                .zip(&self.biases[l])
                .map(|(row, &b)| dot(row, input) + b)
                .collect();
            if l < last {
                for v in out.iter_mut() {
                    if !(*v > T::zero()) {
                        *v = T::zero();
                    }
                }
            }
            activations.push(out);
        }
        let pre = activations.last().expect("at least one layer");
        let output = match self.output_activation {
            OutputActivation::Linear => pre.clone(),
            OutputActivation::UnitNormalize => {
                let n = norm(pre).max(T::lit(NORM_FLOOR));
                pre.iter().map(|&v| v / n).collect()
            }
        };
        Ok(ForwardCache {
            activations,
            output,
        })
    }

    /// Convenience: output of a forward pass.
    pub fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.forward(x)?.output)
    }

    /// Exact gradients of a scalar loss given `upstream = dLoss/d output`.
    pub fn backward(&self, cache: &ForwardCache<T>, upstream: &[T]) -> Result<Gradients<T>> {
        self.check_cache(cache, upstream)?;
        let mut delta = self.output_delta(cache, upstream);
        let mut weights = vec![Vec::new(); self.n_layers()];
        let mut biases = vec![Vec::new(); self.n_layers()];
        for l in (0..self.n_layers()).rev() {
            let n_in = self.layer_dims[l];
            let input = &cache.activations[l];
            let mut grad_w = vec![T::zero(); self.weights[l].len()];
            let mut prev = vec![T::zero(); n_in];
            for ((row, grow), &d) in self.weights[l]
                .chunks_exact(n_in)
                .zip(grad_w.chunks_exact_mut(n_in))
                .zip(&delta)
            {
                if d == T::zero() {
                    continue;
                }
                for ((g, &a), (p, &w)) in grow.iter_mut().zip(input).zip(prev.iter_mut().zip(row)) {
                    *g = d * a;
                    *p = *p + w * d;
                }
            }
            if l > 0 {
                relu_mask(&mut prev, input);
            }
            weights[l] = grad_w;
            biases[l] = delta;
            delta = prev;
        }
        Ok(Gradients {
            weights,
            biases,
            input: delta,
        })
    }

    /// Gradient of the loss with respect to the network input only.
    pub fn input_gradient(&self, cache: &ForwardCache<T>, upstream: &[T]) -> Result<Vec<T>> {
        self.check_cache(cache, upstream)?;
        let mut delta = self.output_delta(cache, upstream);
        for l in (0..self.n_layers()).rev() {
            let n_in = self.layer_dims[l];
            let mut prev = vec![T::zero(); n_in];
            for (row, &d) in self.weights[l].chunks_exact(n_in).zip(&delta) {
                if d == T::zero() {
                    continue;
                }
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p = *p + w * d;
                }
            }
            if l > 0 {
                relu_mask(&mut prev, &cache.activations[l]);
            }
            delta = prev;
        }
        Ok(delta)
    }

    /// `params <- params -/+ lr * grads`.
    pub fn sgd_step(&mut self, grads: &Gradients<T>, lr: T, direction: Direction) -> Result<()> {
        check_lr(lr)?;
        if grads.weights.len() != self.n_layers()
            || grads
                .weights
                .iter()
                .zip(&self.weights)
                .any(|(g, w)| g.len() != w.len())
            || grads
                .biases
                .iter()
                .zip(&self.biases)
                .any(|(g, b)| g.len() != b.len())
        {
            return Err(Error::Dimension(
                "gradient shapes do not match parameters".into(),
            ));
        }
        let step = signed(lr, direction);
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            apply(w, g, step);
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            apply(b, g, step);
        }
        Ok(())
    }

    /// Backpropagates `upstream` and applies one SGD step in place, streaming
    /// each weight row once. Bit-identical to [`Mlp::backward`] followed by
    /// [`Mlp::sgd_step`]. Returns the input gradient (computed with the
    /// pre-update weights) when `want_input_gradient` is set.
    pub fn backward_step(
        &mut self,
        cache: &ForwardCache<T>,
        upstream: &[T],
        lr: T,
        direction: Direction,
        want_input_gradient: bool,
    ) -> Result<Option<Vec<T>>> {
        self.check_cache(cache, upstream)?;
        check_lr(lr)?;
        let step = signed(lr, direction);
        let mut delta = self.output_delta(cache, upstream);
        for l in (0..self.n_layers()).rev() {
            let n_in = self.layer_dims[l];
            let input = &cache.activations[l];
            let need_prev = l > 0 || want_input_gradient;
            let mut prev = if need_prev {
                vec![T::zero(); n_in]
            } else {
                Vec::new()
            };
            for (row, &d) in self.weights[l].chunks_exact_mut(n_in).zip(&delta) {
                if d == T::zero() {
                    continue;
                }
                if need_prev {
                    for ((w, &a), p) in row.iter_mut().zip(input).zip(prev.iter_mut()) {
                        *p = *p + *w * d;
                        *w = *w + step * (d * a);
                    }
                } else {
                    for (w, &a) in row.iter_mut().zip(input) {
                        *w = *w + step * (d * a);
                    }
                }
            }
            for (b, &d) in self.biases[l].iter_mut().zip(&delta) {
                *b = *b + step * d;
            }
            if l > 0 {
                relu_mask(&mut prev, input);
            }
            delta = prev;
        }
        Ok(if want_input_gradient {
            Some(delta)
        } else {
            None
        })
    }

    fn check_cache(&self, cache: &ForwardCache<T>, upstream: &[T]) -> Result<()> {
        let shapes_match = cache.activations.len() == self.layer_dims.len()
            && cache
                .activations
                .iter()
                .zip(&self.layer_dims)
                .all(|(a, &d)| a.len() == d);
        if !shapes_match {
            return Err(Error::Dimension(
                "forward cache does not match this network".into(),
            ));
        }
        if upstream.len() != self.output_dim() {
            return Err(Error::Dimension(format!(
                "upstream gradient has length {}, output has {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// Gradient with respect to the final affine output.
    fn output_delta(&self, cache: &ForwardCache<T>, upstream: &[T]) -> Vec<T> {
        match self.output_activation {
            OutputActivation::Linear => upstream.to_vec(),
            OutputActivation::UnitNormalize => {
                let pre = cache.activations.last().expect("nonempty");
                let n = norm(pre);
                let floor = T::lit(NORM_FLOOR);
                if n > floor {
                    // (I - u u^T) g / |v| with u = v / |v|
                    let u: Vec<T> = pre.iter().map(|&v| v / n).collect();
                    let proj = dot(&u, upstream);
                    u.iter()
                        .zip(upstream)
                        .map(|(&ui, &gi)| (gi - ui * proj) / n)
                        .collect()
                } else {
                    upstream.iter().map(|&g| g / floor).collect()
                }
            }
        }
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(&self.to_file()).map_err(|e| Error::format(path, e))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: CheckpointFile =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
        Self::from_file(file).map_err(|e| Error::format(path, e))
    }

    fn to_file(&self) -> CheckpointFile {
        let widen = |blocks: &Vec<Vec<T>>| -> Vec<Vec<f64>> {
            blocks
                .iter()
                .map(|b| b.iter().map(|x| x.as_f64()).collect())
                .collect()
        };
        CheckpointFile {
            layer_dims: self.layer_dims.clone(),
            hidden_activation: HiddenActivation::ReLU,
            output_activation: self.output_activation,
            weights: widen(&self.weights),
            biases: widen(&self.biases),
        }
    }

    fn from_file(file: CheckpointFile) -> Result<Self> {
        let narrow = |blocks: Vec<Vec<f64>>| -> Result<Vec<Vec<T>>> {
            blocks
                .into_iter()
                .map(|b| {
                    b.into_iter()
                        .map(|x| {
                            T::from_f64(x).ok_or_else(|| {
                                Error::InvalidArgument(format!("{x} not representable"))
                            })
                        })
                        .collect()
                })
                .collect()
        };
        Self::from_parts(
            file.layer_dims,
            narrow(file.weights)?,
            narrow(file.biases)?,
            file.output_activation,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
enum HiddenActivation {
    ReLU,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    layer_dims: Vec<usize>,
    hidden_activation: HiddenActivation,
    output_activation: OutputActivation,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "layer dims need >= 2 entries, all >= 1; got {dims:?}"
        )));
    }
    Ok(())
}

fn check_lr<T: Real>(lr: T) -> Result<()> {
    if !(lr >= T::zero()) || !lr.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be >= 0, got {lr}"
        )));
    }
    Ok(())
}

fn signed<T: Real>(lr: T, direction: Direction) -> T {
    match direction {
        Direction::Descent => -lr,
        Direction::Ascent => lr,
    }
}

fn apply<T: Real>(params: &mut [T], grads: &[T], step: T) {
    for (p, &g) in params.iter_mut().zip(grads) {
        *p = *p + step * g;
    }
}

fn relu_mask<T: Real>(delta: &mut [T], activations: &[T]) {
    for (d, &a) in delta.iter_mut().zip(activations) {
        if !(a > T::zero()) {
            *d = T::zero();
        }
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Dot product with four independent accumulators.
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] = acc[0] + x[0] * y[0];
        acc[1] = acc[1] + x[1] * y[1];
        acc[2] = acc[2] + x[2] * y[2];
        acc[3] = acc[3] + x[3] * y[3];
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail = tail + x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> SimRng {
        SimRng::new(31, 0)
    }

    fn random_input(n: usize, rng: &mut SimRng) -> Vec<f64> {
        (0..n).map(|_| rng.normal()).collect()
    }

    #[test]
    fn xavier_statistics_and_zero_biases() {
        let net =
            Mlp::<f64>::init_xavier(&[16, 512, 128, 64], OutputActivation::Linear, &mut rng())
                .unwrap();
        let w = net.weights(0);
        assert_eq!(w.len(), 8192);
        let var = w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64;
        let expected = 2.0 / 528.0;
        assert!((var / expected - 1.0).abs() < 0.1, "var {var}");
        for l in 0..net.n_layers() {
            assert!(net.biases(l).iter().all(|&b| b == 0.0));
        }
        let again =
            Mlp::<f64>::init_xavier(&[16, 512, 128, 64], OutputActivation::Linear, &mut rng())
                .unwrap();
        assert_eq!(net, again);
        assert!(Mlp::<f64>::init_xavier(&[4], OutputActivation::Linear, &mut rng()).is_err());
        assert!(Mlp::<f64>::init_xavier(&[4, 0, 2], OutputActivation::Linear, &mut rng()).is_err());
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::<f64>::zeros(&[3, 5, 2], OutputActivation::Linear).unwrap();
        assert_eq!(net.predict(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_identity_layer_passes_negatives() {
        let mut w = vec![0.0; 9];
        for i in 0..3 {
            w[i * 3 + i] = 1.0;
        }
        let net = Mlp::from_parts(
            vec![3, 3],
            vec![w],
            vec![vec![0.0; 3]],
            OutputActivation::Linear,
        )
        .unwrap();
        assert_eq!(
            net.predict(&[-1.0, 2.0, -3.5]).unwrap(),
            vec![-1.0, 2.0, -3.5]
        );
    }

    #[test]
    fn unit_normalize_output() {
        let mut r = rng();
        let net =
            Mlp::<f64>::init_xavier(&[6, 20, 8], OutputActivation::UnitNormalize, &mut r).unwrap();
        for _ in 0..20 {
            let y = net.predict(&random_input(6, &mut r)).unwrap();
            assert!((norm(&y) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let mut net = Mlp::<f64>::zeros(&[3, 2], OutputActivation::Linear).unwrap();
        assert!(net.forward(&[1.0]).is_err());
        let cache = net.forward(&[1.0, 2.0, 3.0]).unwrap();
        assert!(net.backward(&cache, &[1.0]).is_err());
        let other = Mlp::<f64>::zeros(&[4, 2], OutputActivation::Linear).unwrap();
        let foreign = other.forward(&[0.0; 4]).unwrap();
        assert!(net.backward(&foreign, &[1.0, 1.0]).is_err());
        let bad = Gradients {
            weights: vec![vec![0.0; 5]],
            biases: vec![vec![0.0; 2]],
            input: vec![],
        };
        assert!(net.sgd_step(&bad, 0.1, Direction::Descent).is_err());
    }

    #[test]
    fn linear_least_squares_gradient() {
        // L = 1/2 |W x + b - y|^2  =>  dW = (Wx + b - y) x^T, db = Wx + b - y
        let mut r = rng();
        let net = Mlp::<f64>::init_xavier(&[4, 3], OutputActivation::Linear, &mut r).unwrap();
        let x = random_input(4, &mut r);
        let y = random_input(3, &mut r);
        let cache = net.forward(&x).unwrap();
        let resid: Vec<f64> = cache.output().iter().zip(&y).map(|(a, b)| a - b).collect();
        let g = net.backward(&cache, &resid).unwrap();
        for (i, r) in resid.iter().enumerate() {
            assert!((g.biases[0][i] - r).abs() < 1e-10);
            for (j, xj) in x.iter().enumerate() {
                assert!((g.weights[0][i * 4 + j] - r * xj).abs() < 1e-10);
            }
        }
        for j in 0..4 {
            let expect: f64 = (0..3).map(|i| net.weights(0)[i * 4 + j] * resid[i]).sum();
            assert!((g.input[j] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn sgd_arithmetic() {
        let mut net = Mlp::<f64>::from_parts(
            vec![1, 1],
            vec![vec![1.0]],
            vec![vec![0.0]],
            OutputActivation::Linear,
        )
        .unwrap();
        let g = Gradients {
            weights: vec![vec![2.0]],
            biases: vec![vec![0.0]],
            input: vec![],
        };
        let before = net.clone();
        net.sgd_step(&g, 0.0, Direction::Descent).unwrap();
        assert_eq!(net, before);
        net.sgd_step(&g, 0.1, Direction::Descent).unwrap();
        assert!((net.weights(0)[0] - 0.8).abs() < 1e-15);
        net.sgd_step(&g, 0.1, Direction::Ascent).unwrap();
        assert!((net.weights(0)[0] - 1.0).abs() < 1e-15);
        assert!(net.sgd_step(&g, -0.1, Direction::Descent).is_err());
    }

    #[test]
    fn fused_step_matches_separate_path_bitwise() {
        let mut r = rng();
        for act in [OutputActivation::Linear, OutputActivation::UnitNormalize] {
            let net = Mlp::<f64>::init_xavier(&[7, 33, 17, 5], act, &mut r).unwrap();
            let x = random_input(7, &mut r);
            let up = random_input(5, &mut r);
            let cache = net.forward(&x).unwrap();
            let grads = net.backward(&cache, &up).unwrap();
            for dir in [Direction::Descent, Direction::Ascent] {
                let mut separate = net.clone();
                separate.sgd_step(&grads, 1e-2, dir).unwrap();
                let mut fused = net.clone();
                let input = fused
                    .backward_step(&cache, &up, 1e-2, dir, true)
                    .unwrap()
                    .unwrap();
                assert_eq!(separate, fused);
                assert_eq!(input, grads.input);
                assert_eq!(net.input_gradient(&cache, &up).unwrap(), grads.input);
            }
        }
    }

    #[test]
    fn descent_reduces_quadratic_loss() {
        let mut r = rng();
        let mut net =
            Mlp::<f64>::init_xavier(&[5, 16, 3], OutputActivation::Linear, &mut r).unwrap();
        let x = random_input(5, &mut r);
        let y = random_input(3, &mut r);
        let loss = |net: &Mlp<f64>| -> f64 {
            net.predict(&x)
                .unwrap()
                .iter()
                .zip(&y)
                .map(|(a, b)| 0.5 * (a - b) * (a - b))
                .sum()
        };
        let mut prev = loss(&net);
        for _ in 0..50 {
            let cache = net.forward(&x).unwrap();
            let resid: Vec<f64> = cache.output().iter().zip(&y).map(|(a, b)| a - b).collect();
            net.backward_step(&cache, &resid, 1e-2, Direction::Descent, false)
                .unwrap();
            let l = loss(&net);
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = rng();
        let net =
            Mlp::<f64>::init_xavier(&[6, 12, 4], OutputActivation::UnitNormalize, &mut r).unwrap();
        let path = dir.path().join("net.json");
        net.save_checkpoint(&path).unwrap();
        let back = Mlp::<f64>::load_checkpoint(&path).unwrap();
        assert_eq!(net, back);
        for _ in 0..100 {
            let x = random_input(6, &mut r);
            assert_eq!(net.predict(&x).unwrap(), back.predict(&x).unwrap());
        }

        let text = fs::read_to_string(&path).unwrap();
        let truncated = dir.path().join("trunc.json");
        fs::write(&truncated, &text[..text.len() - 10]).unwrap();
        assert!(matches!(
            Mlp::<f64>::load_checkpoint(&truncated),
            Err(Error::Format { .. })
        ));

        let mut file: serde_json::Value = serde_json::from_str(&text).unwrap();
        file["layer_dims"] = serde_json::json!([6, 13, 4]);
        let mismatched = dir.path().join("dims.json");
        fs::write(&mismatched, file.to_string()).unwrap();
        assert!(matches!(
            Mlp::<f64>::load_checkpoint(&mismatched),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn single_precision_network() {
        let mut r = rng();
        let net = Mlp::<f32>::init_xavier(&[4, 8, 2], OutputActivation::Linear, &mut r).unwrap();
        let cache = net.forward(&[0.5, -1.0, 2.0, 0.25]).unwrap();
        let g = net.backward(&cache, &[1.0, -1.0]).unwrap();
        assert_eq!(g.input.len(), 4);
    }
}
