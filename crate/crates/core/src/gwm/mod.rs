//! Graph weighted models on pictures.
//!
//! A model holds one order-4 tensor per alphabet symbol, with modes ordered
//! `(west, north, east, south)`, and four border vectors. The value of a picture
//! is the full contraction of the grid network obtained by placing the symbol
//! tensors on the cells, joining neighbouring east/west and south/north modes,
//! and capping the outer modes with the matching border vector.

mod gauge;
mod io;
mod sweep;

pub use gauge::change_of_basis;
pub use io::{load, save};
pub use sweep::{evaluate, gradient, Evaluator, SiteGradients, Tape};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// The four sides of a picture, in the global mode order of the site tensors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    West = 0,
    North = 1,
    East = 2,
    South = 3,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::North, Side::East, Side::South];

    pub fn name(self) -> &'static str {
        match self {
            Side::West => "west",
            Side::North => "north",
            Side::East => "east",
            Side::South => "south",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GwmModel {
    dim: usize,
    alphabet: Vec<char>,
    tensors: Vec<DenseTensor>,
    borders: [DenseTensor; 4],
}

fn check_alphabet(alphabet: &[char]) -> Result<()> {
    if alphabet.is_empty() {
        return Err(Error::InvalidParameter("alphabet is empty".into()));
    }
    for (k, c) in alphabet.iter().enumerate() {
        if alphabet[..k].contains(c) {
            return Err(Error::InvalidParameter(format!("symbol '{c}' listed twice")));
        }
    }
    Ok(())
}

impl GwmModel {
    /// `tensors[k]` belongs to `alphabet[k]`; `borders` are ordered west, north, east, south.
    pub fn new(
        dim: usize,
        alphabet: Vec<char>,
        tensors: Vec<DenseTensor>,
        borders: [DenseTensor; 4],
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        check_alphabet(&alphabet)?;
        if tensors.len() != alphabet.len() {
            return Err(Error::InvalidParameter(format!(
                "{} tensors for {} symbols",
                tensors.len(),
                alphabet.len()
            )));
        }
        for (c, t) in alphabet.iter().zip(&tensors) {
            if t.shape() != [dim; 4] {
                return Err(Error::InvalidTensor(format!(
                    "tensor for '{c}' has shape {:?}, expected {:?}",
                    t.shape(),
                    [dim; 4]
                )));
            }
        }
        for (side, b) in Side::ALL.iter().zip(&borders) {
            if b.shape() != [dim] {
                return Err(Error::InvalidTensor(format!(
                    "{} border has shape {:?}, expected [{dim}]",
                    side.name(),
                    b.shape()
                )));
            }
        }
        Ok(GwmModel {
            dim,
            alphabet,
            tensors,
            borders,
        })
    }

    /// All parameters drawn i.i.d. from `Normal(0, std^2)` with a seeded generator.
    pub fn random_init(dim: usize, alphabet: &[char], std: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initialisation std must be positive, got {std}"
            )));
        }
        check_alphabet(alphabet)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std).expect("std checked above");
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| normal.sample(&mut rng)).collect() };
        let tensors = alphabet
            .iter()
            .map(|_| DenseTensor::new(vec![dim; 4], draw(dim.pow(4))).expect("shape matches"))
            .collect();
        let borders = [(); 4].map(|_| DenseTensor::vector(draw(dim)));
        GwmModel::new(dim, alphabet.to_vec(), tensors, borders)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn symbol_index(&self, symbol: char) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|&c| c == symbol)
            .ok_or(Error::UnknownSymbol(symbol))
    }

    pub fn tensor(&self, symbol: char) -> Result<&DenseTensor> {
        Ok(&self.tensors[self.symbol_index(symbol)?])
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn border(&self, side: Side) -> &DenseTensor {
        &self.borders[side as usize]
    }

    pub fn borders(&self) -> &[DenseTensor; 4] {
        &self.borders
    }

    /// Replaces the tensor of `symbol`; the shape must stay `d x d x d x d`.
    pub fn set_tensor(&mut self, symbol: char, tensor: DenseTensor) -> Result<()> {
        let k = self.symbol_index(symbol)?;
        if tensor.shape() != self.tensors[k].shape() {
            return Err(Error::InvalidTensor(format!(
                "replacement tensor has shape {:?}",
                tensor.shape()
            )));
        }
        self.tensors[k] = tensor;
        Ok(())
    }

    pub fn set_border(&mut self, side: Side, border: DenseTensor) -> Result<()> {
        if border.shape() != [self.dim] {
            return Err(Error::InvalidTensor(format!(
                "replacement border has shape {:?}",
                border.shape()
            )));
        }
        self.borders[side as usize] = border;
        Ok(())
    }

    /// Parameter blocks in a fixed order: symbol tensors (alphabet order), then borders.
    pub fn parameters(&self) -> impl Iterator<Item = &[f64]> {
        self.tensors
            .iter()
            .chain(self.borders.iter())
            .map(|t| t.data())
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.tensors
            .iter_mut()
            .chain(self.borders.iter_mut())
            .map(|t| t.data_mut())
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().map(<[f64]>::len).sum()
    }
}

/// Gradient of a scalar with respect to every parameter of a [`GwmModel`].
///
/// Mirrors the model's shapes; parameter blocks come in the same order as
/// [`GwmModel::parameters`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientAccumulator {
    tensors: Vec<DenseTensor>,
    borders: [DenseTensor; 4],
}

impl GradientAccumulator {
    pub fn zeros_for(model: &GwmModel) -> Self {
        GradientAccumulator {
            tensors: model.tensors.iter().map(DenseTensor::zeros_like).collect(),
            borders: [0, 1, 2, 3].map(|k| DenseTensor::zeros_like(&model.borders[k])),
        }
    }

    pub fn tensor(&self, index: usize) -> &DenseTensor {
        &self.tensors[index]
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn border(&self, side: Side) -> &DenseTensor {
        &self.borders[side as usize]
    }

    pub(crate) fn tensor_mut(&mut self, index: usize) -> &mut [f64] {
        self.tensors[index].data_mut()
    }

    pub(crate) fn border_mut(&mut self, side: Side) -> &mut [f64] {
        self.borders[side as usize].data_mut()
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.tensors.iter().chain(self.borders.iter()).map(|t| t.data())
    }

    pub fn blocks_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.tensors
            .iter_mut()
            .chain(self.borders.iter_mut())
            .map(|t| t.data_mut())
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &GradientAccumulator, c: f64) {
        for (a, b) in self.blocks_mut().zip(other.blocks()) {
            assert_eq!(a.len(), b.len(), "gradient shapes differ");
            for (x, y) in a.iter_mut().zip(b) {
                *x += c * y;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for block in self.blocks_mut() {
            for x in block {
                *x *= c;
            }
        }
    }

    /// Global L2 norm over every block.
    pub fn norm(&self) -> f64 {
        self.blocks().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &GradientAccumulator) -> f64 {
        self.blocks()
            .zip(other.blocks())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks().flatten().all(|&x| x == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_init_is_seeded() {
        let a = GwmModel::random_init(3, &['a', 'b'], 0.4, 11).unwrap();
        let b = GwmModel::random_init(3, &['a', 'b'], 0.4, 11).unwrap();
        let c = GwmModel::random_init(3, &['a', 'b'], 0.4, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.parameter_count(), 2 * 81 + 4 * 3);
    }

    #[test]
    fn random_init_statistics() {
        // d = 6 with a 4-letter alphabet yields 4 * 1296 + 24 = 5208 entries per model;
        // twenty seeds give just over 1e5 samples.
        let alphabet = ['a', 'b', 'c', 'd'];
        let mut samples = Vec::new();
        for seed in 0..20 {
            let m = GwmModel::random_init(6, &alphabet, 0.4, seed).unwrap();
            samples.extend(m.parameters().flatten().copied());
        }
        let n = samples.len() as f64;
        assert!(n >= 1e5);
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 3.0 * 0.4 / n.sqrt(), "mean {mean}");
        assert!((var.sqrt() - 0.4).abs() < 0.02 * 0.4, "std {}", var.sqrt());
    }

    #[test]
    fn random_init_rejects_bad_arguments() {
        assert!(GwmModel::random_init(3, &['a'], 0.0, 1).is_err());
        assert!(GwmModel::random_init(3, &['a'], -1.0, 1).is_err());
        assert!(GwmModel::random_init(0, &['a'], 0.1, 1).is_err());
        assert!(GwmModel::random_init(2, &['a', 'a'], 0.1, 1).is_err());
    }

    #[test]
    fn new_validates_shapes() {
        let t = DenseTensor::zeros(&[2; 4]);
        let v = DenseTensor::zeros(&[2]);
        let borders = [v.clone(), v.clone(), v.clone(), v.clone()];
        assert!(GwmModel::new(2, vec!['a'], vec![t.clone()], borders.clone()).is_ok());
        assert!(GwmModel::new(2, vec!['a', 'b'], vec![t.clone()], borders.clone()).is_err());
        assert!(GwmModel::new(3, vec!['a'], vec![t], borders).is_err());
    }
}
