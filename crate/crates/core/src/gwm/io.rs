//! Text serialisation of models.
//!
//! ```toml
//! dim = 1
//! alphabet = ["a", "b"]
//!
//! [tensors]
//! a = [2.0]
//! b = [3.0]
//!
//! [borders]
//! west = [1.0]
//! north = [1.0]
//! east = [1.0]
//! south = [1.0]
//! ```
//!
//! Each tensor is its row-major entry list with modes `(west, north, east, south)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gwm::{GwmModel, Side};
use crate::tensor::DenseTensor;
use crate::textio::{symbol, toml_error};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    dim: usize,
    alphabet: Vec<String>,
    tensors: BTreeMap<String, Vec<f64>>,
    borders: BorderFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BorderFile {
    west: Vec<f64>,
    north: Vec<f64>,
    east: Vec<f64>,
    south: Vec<f64>,
}

pub fn save(model: &GwmModel) -> String {
    let b = |s: Side| model.border(s).data().to_vec();
    let file = ModelFile {
        dim: model.dim(),
        alphabet: model.alphabet().iter().map(|c| c.to_string()).collect(),
        tensors: model
            .alphabet()
            .iter()
            .zip(model.tensors())
            .map(|(c, t)| (c.to_string(), t.data().to_vec()))
            .collect(),
        borders: BorderFile {
            west: b(Side::West),
            north: b(Side::North),
            east: b(Side::East),
            south: b(Side::South),
        },
    };
    toml::to_string(&file).expect("model serialises")
}

/// Parses a model document; `source_name` is only used in diagnostics.
pub fn load(text: &str, source_name: &str) -> Result<GwmModel> {
    let file: ModelFile = toml::from_str(text).map_err(|e| toml_error(source_name, text, e))?;
    let invalid = |msg: String| Error::parse(source_name, 0, msg);
    let d = file.dim;
    if d == 0 {
        return Err(invalid("dim must be at least 1".into()));
    }
    let alphabet = file
        .alphabet
        .iter()
        .map(|s| symbol(source_name, "alphabet", s))
        .collect::<Result<Vec<char>>>()?;
    if file.tensors.len() != alphabet.len() {
        return Err(invalid(format!(
            "tensors: {} entries for an alphabet of {} symbols",
            file.tensors.len(),
            alphabet.len()
        )));
    }
    let mut tensors = Vec::with_capacity(alphabet.len());
    for c in &alphabet {
        let data = file
            .tensors
            .get(&c.to_string())
            .ok_or_else(|| invalid(format!("tensors: missing entry for '{c}'")))?;
        if data.len() != d.pow(4) {
            return Err(invalid(format!(
                "tensors.{c}: expected {} entries, found {}",
                d.pow(4),
                data.len()
            )));
        }
        tensors.push(DenseTensor::new(vec![d; 4], data.clone())?);
    }
    let border = |name: &str, v: Vec<f64>| -> Result<DenseTensor> {
        if v.len() != d {
            return Err(invalid(format!("borders.{name}: expected {d} entries, found {}", v.len())));
        }
        Ok(DenseTensor::vector(v))
    };
    let BorderFile {
        west,
        north,
        east,
        south,
    } = file.borders;
    let borders = [
        border("west", west)?,
        border("north", north)?,
        border("east", east)?,
        border("south", south)?,
    ];
    GwmModel::new(d, alphabet, tensors, borders)
}
