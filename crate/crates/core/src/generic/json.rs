//! JSON interchange for generic models.
//!
//! ```text
//! {
//!   "n": 2,
//!   "epsilon": [0.0, 0.0],
//!   "c": [[0.7071067811865476, 0.0], [0.7071067811865476, 0.0]],
//!   "dimK": 2,
//!   "K": [[[0,0],[0,0]], [[0,0],[0,0]]],
//!   "V": [ <matrix>, <matrix> ],
//!   "Omega": <matrix>,
//!   "cells": [ <matrix>, ... ]
//! }
//! ```
//!
//! A matrix is an array of rows, each row an array of `[re, im]` pairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CompositeModel, Instrument, MicroSystem, PhaseCellSet};
use crate::error::{Error, Result};
use crate::operator::{c64, ComplexMatrix, DensityMatrix, HermitianOperator, Projector};

pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub n: usize,
    pub epsilon: Vec<f64>,
    pub c: Vec<[f64; 2]>,
    #[serde(rename = "dimK")]
    pub dim_k: usize,
    #[serde(rename = "K")]
    pub k: MatrixDoc,
    #[serde(rename = "V")]
    pub v: Vec<MatrixDoc>,
    #[serde(rename = "Omega")]
    pub omega: MatrixDoc,
    pub cells: Vec<MatrixDoc>,
}

pub fn matrix_from_doc(doc: &MatrixDoc, dim: usize, what: &str) -> Result<ComplexMatrix> {
    if doc.len() != dim || doc.iter().any(|row| row.len() != dim) {
        return Err(Error::config(what, format!("expected a {dim}x{dim} matrix")));
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |i, j| {
        let [re, im] = doc[i][j];
        c64(re, im)
    }))
}

pub fn matrix_to_doc(m: &ComplexMatrix) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document serializes")
    }

    pub fn to_model(&self) -> Result<CompositeModel> {
        let n = self.n;
        if self.epsilon.len() != n || self.c.len() != n || self.v.len() != n {
            return Err(Error::config(
                "model",
                format!("epsilon, c and V must each have n = {n} entries"),
            ));
        }
        let d = self.dim_k;
        let coeffs: Vec<Complex64> = self.c.iter().map(|&[re, im]| c64(re, im)).collect();
        let system = MicroSystem::new(self.epsilon.clone(), coeffs)?;
        let k = HermitianOperator::new(matrix_from_doc(&self.k, d, "model.K")?)?;
        let couplings = self
            .v
            .iter()
            .enumerate()
            .map(|(r, m)| HermitianOperator::new(matrix_from_doc(m, d, &format!("model.V[{r}]"))?))
            .collect::<Result<Vec<_>>>()?;
        let omega = DensityMatrix::new(matrix_from_doc(&self.omega, d, "model.Omega")?)?;
        let cells = PhaseCellSet::new(
            self.cells
                .iter()
                .enumerate()
                .map(|(a, m)| Projector::new(matrix_from_doc(m, d, &format!("model.cells[{a}]"))?))
                .collect::<Result<Vec<_>>>()?,
        )?;
        CompositeModel::build(system, Instrument::new(k, couplings, omega, cells)?)
    }

    /// `None` for models with fixed propagators, which have no Hamiltonian
    /// description.
    pub fn from_model(model: &CompositeModel) -> Option<Self> {
        let (k, couplings) = model.instrument_parts()?;
        let sys = model.system();
        Some(Self {
            n: sys.n(),
            epsilon: sys.epsilon().to_vec(),
            c: sys.coeffs().iter().map(|z| [z.re, z.im]).collect(),
            dim_k: model.dim_k(),
            k: matrix_to_doc(k.matrix()),
            v: couplings.iter().map(|v| matrix_to_doc(v.matrix())).collect(),
            omega: matrix_to_doc(model.omega().matrix()),
            cells: model.cells().projectors().iter().map(|p| matrix_to_doc(p.matrix())).collect(),
        })
    }
}
