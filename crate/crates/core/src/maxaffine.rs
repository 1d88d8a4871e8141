use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::Vector;

/// One affine piece `x -> <a, x> + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub a: Vector,
    pub c: f64,
}

/// `f(x) = max_i <a_i, x> + c_i` over a nonempty list of pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<AffinePiece>", into = "Vec<AffinePiece>")]
pub struct MaxAffine {
    pieces: Vec<AffinePiece>,
}

impl MaxAffine {
    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::Empty("max-affine piece list"));
        };
        let n = first.a.dim();
        for (i, p) in pieces.iter().enumerate() {
            p.a.check_dim(n)?;
            if !p.c.is_finite() {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(MaxAffine { pieces })
    }

    /// Convenience constructor from `(gradient, intercept)` pairs.
    pub fn from_pairs(pairs: &[(&[f64], f64)]) -> Result<Self> {
        let pieces = pairs
            .iter()
            .map(|(a, c)| {
                Ok(AffinePiece {
                    a: Vector::from_slice(a)?,
                    c: *c,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pieces)
    }

    /// A single linear piece `<a, x>`.
    pub fn linear(a: Vector) -> Self {
        MaxAffine {
            pieces: vec![AffinePiece { a, c: 0.0 }],
        }
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].a.dim()
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn piece_value(&self, i: usize, x: &Vector) -> f64 {
        self.pieces[i].a.dot(x) + self.pieces[i].c
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        (0..self.pieces.len())
            .map(|i| self.piece_value(i, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pieces attaining the max within `tol`.
    pub fn argmax(&self, x: &Vector, tol: f64) -> Vec<usize> {
        let f = self.eval(x);
        (0..self.pieces.len())
            .filter(|&i| f - self.piece_value(i, x) <= tol)
            .collect()
    }

    /// Generators of `conv{a_i : i active at x}`, i.e. of the subdifferential.
    pub fn subgradients(&self, x: &Vector, tol: f64) -> Vec<Vector> {
        self.argmax(x, tol)
            .into_iter()
            .map(|i| self.pieces[i].a.clone())
            .collect()
    }
}

impl TryFrom<Vec<AffinePiece>> for MaxAffine {
    type Error = Error;
    fn try_from(p: Vec<AffinePiece>) -> Result<Self> {
        MaxAffine::new(p)
    }
}

impl From<MaxAffine> for Vec<AffinePiece> {
    fn from(f: MaxAffine) -> Self {
        f.pieces
    }
}
