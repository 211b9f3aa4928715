use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureMap, SparseVec};
use crate::scalar::Scalar;

/// Pre-activations are clipped here so the sigmoid output stays strictly
/// inside (0, 1) even in single precision.
const LOGIT_LIMIT: f64 = 15.0;

/// Dense affine map, weights stored row-major (`outputs × inputs`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Layer<T: Scalar> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer { inputs, outputs, weights: vec![T::zero(); inputs * outputs], bias: vec![T::zero(); outputs] }
    }

    fn xavier<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Layer {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| T::of(rng.random_range(-limit..=limit))).collect(),
            bias: vec![T::zero(); outputs],
        }
    }
}

/// How the output layer starts out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputInit {
    #[default]
    Xavier,
    /// All-zero output layer; the untrained predictor answers 0.5.
    Zero,
}

/// Layer outputs of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    activations: Vec<Vec<T>>,
    clipped: bool,
}

impl<T: Scalar> Trace<T> {
    pub fn output(&self) -> T {
        self.activations.last().expect("at least one layer")[0]
    }
}

/// Feed-forward network with tanh hidden layers and a sigmoid output,
/// bundled with the feature map that produces its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Predictor<T: Scalar> {
    features: FeatureMap,
    layers: Vec<Layer<T>>,
}

/// Parameter-shaped accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T: Scalar> {
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> Gradient<T> {
    pub fn flatten(&self) -> Vec<T> {
        flatten(&self.layers)
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

fn flatten<T: Scalar>(layers: &[Layer<T>]) -> Vec<T> {
    layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
}

fn sigmoid<T: Scalar>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

impl<T: Scalar> Predictor<T> {
    pub fn new(features: FeatureMap, hidden: &[usize], init: OutputInit, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![features.dim()];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let last = sizes.len() - 2;
        let layers = (0..=last)
            .map(|i| match (i == last, init) {
                (true, OutputInit::Zero) => Layer::zeros(sizes[i], sizes[i + 1]),
                _ => Layer::xavier(sizes[i], sizes[i + 1], &mut rng),
            })
            .collect();
        Predictor { features, layers }
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.features
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn parameters(&self) -> Vec<T> {
        flatten(&self.layers)
    }

    /// Overwrites all parameters in [`Predictor::parameters`] order.
    pub fn set_parameters(&mut self, values: &[T]) {
        assert_eq!(values.len(), self.parameter_count(), "parameter vector length");
        let mut it = values.iter().copied();
        for layer in &mut self.layers {
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
    }

    pub fn zero_gradient(&self) -> Gradient<T> {
        Gradient { layers: self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect() }
    }

    pub fn trace(&self, x: &SparseVec<T>) -> Trace<T> {
        let mut activations: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());
        let mut clipped = false;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = layer.bias.clone();
            match activations.last() {
                None => {
                    for &(i, v) in x {
                        for (j, zj) in z.iter_mut().enumerate() {
                            *zj = *zj + layer.weights[j * layer.inputs + i] * v;
                        }
                    }
                }
                Some(prev) => {
                    for (j, zj) in z.iter_mut().enumerate() {
                        let row = &layer.weights[j * layer.inputs..(j + 1) * layer.inputs];
                        *zj = *zj + row.iter().zip(prev).map(|(&w, &a)| w * a).sum::<T>();
                    }
                }
            }
            if k + 1 == self.layers.len() {
                let limit = T::of(LOGIT_LIMIT);
                clipped = z[0].abs() > limit;
                // NaN must survive the clip so that divergence is visible
                z[0] = if z[0].is_nan() { z[0] } else { sigmoid(z[0].max(-limit).min(limit)) };
            } else {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(z);
        }
        Trace { activations, clipped }
    }

    /// Probability for an encoded input.
    pub fn forward(&self, x: &SparseVec<T>) -> T {
        self.trace(x).output()
    }

    /// Adds `d_output · ∂output/∂θ` to `grad`.
    pub fn backward(&self, x: &SparseVec<T>, trace: &Trace<T>, d_output: T, grad: &mut Gradient<T>) {
        let p = trace.output();
        if trace.clipped {
            return;
        }
        let mut delta = vec![d_output * p * (T::one() - p)];
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let g = &mut grad.layers[k];
            for (j, &dj) in delta.iter().enumerate() {
                g.bias[j] = g.bias[j] + dj;
            }
            if k == 0 {
                for (j, &dj) in delta.iter().enumerate() {
                    for &(i, v) in x {
                        let w = &mut g.weights[j * layer.inputs + i];
                        *w = *w + dj * v;
                    }
                }
                break;
            }
            let prev = &trace.activations[k - 1];
            let mut next = vec![T::zero(); layer.inputs];
            for (j, &dj) in delta.iter().enumerate() {
                let row = j * layer.inputs;
                for (i, &a) in prev.iter().enumerate() {
                    g.weights[row + i] = g.weights[row + i] + dj * a;
                    next[i] = next[i] + layer.weights[row + i] * dj;
                }
            }
            for (n, &a) in next.iter_mut().zip(prev) {
                *n = *n * (T::one() - a * a);
            }
            delta = next;
        }
    }

    /// `θ ← θ − rate · grad`.
    pub fn descend(&mut self, grad: &Gradient<T>, rate: T) {
        for (layer, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, &d) in layer.weights.iter_mut().zip(&g.weights) {
                *w = *w - rate * d;
            }
            for (b, &d) in layer.bias.iter_mut().zip(&g.bias) {
                *b = *b - rate * d;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::Vocabulary;

    fn predictor(init: OutputInit) -> Predictor<f64> {
        Predictor::new(FeatureMap::new(Vocabulary::builtin()), &[8], init, 3)
    }

    #[test]
    fn zero_output_layer_answers_one_half() {
        let p = predictor(OutputInit::Zero);
        assert_eq!(p.forward(&vec![(0, 1.0), (40, 0.3)]), 0.5);
    }

    #[test]
    fn output_strictly_inside_unit_interval() {
        let mut p = predictor(OutputInit::Xavier);
        let huge: Vec<f64> = p.parameters().iter().map(|w| w * 1e6).collect();
        p.set_parameters(&huge);
        let y = p.forward(&vec![(0, 1.0), (5, 1.0)]);
        assert!(y > 0.0 && y < 1.0);
        let p32: Predictor<f32> = Predictor::new(FeatureMap::new(Vocabulary::builtin()), &[4], OutputInit::Xavier, 1);
        let y = p32.forward(&vec![(1, 1e9)]);
        assert!(y > 0.0 && y < 1.0);
    }

    #[test]
    fn parameters_round_trip_and_count() {
        let mut p = predictor(OutputInit::Xavier);
        let dim = FeatureMap::new(Vocabulary::builtin()).dim();
        assert_eq!(p.parameter_count(), dim * 8 + 8 + 8 + 1);
        let theta = p.parameters();
        p.set_parameters(&theta);
        assert_eq!(p.parameters(), theta);
        assert_eq!(p.zero_gradient().flatten().len(), theta.len());
    }
}
