//! Problem files: `{n, A, b, objective, v?, t?, mu?, alpha?}` in JSON.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use spp_core::{AffinePiece, MaxAffine, Polyhedron, UnitDirection, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Linear(Vec<f64>),
    MaxAffine(Vec<PieceSpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSpec {
    pub a: Vec<f64>,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

fn check_finite(path: &str, xs: &[f64]) -> Result<()> {
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        bail!("{path}[{i}]: entry is not finite");
    }
    Ok(())
}

fn check_len(path: &str, xs: &[f64], n: usize) -> Result<()> {
    if xs.len() != n {
        bail!("{path}: expected {n} entries, found {}", xs.len());
    }
    check_finite(path, xs)
}

impl ProblemFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let p: ProblemFile = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    /// Shape and finiteness checks; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            bail!("n: must be at least 1");
        }
        if self.a.is_empty() {
            bail!("A: at least one row is required");
        }
        for (i, row) in self.a.iter().enumerate() {
            check_len(&format!("A[{i}]"), row, self.n)?;
        }
        check_len("b", &self.b, self.a.len())?;
        match &self.objective {
            Some(Objective::Linear(c)) => check_len("objective.linear", c, self.n)?,
            Some(Objective::MaxAffine(pieces)) => {
                if pieces.is_empty() {
                    bail!("objective.max_affine: at least one piece is required");
                }
                for (i, pc) in pieces.iter().enumerate() {
                    check_len(&format!("objective.max_affine[{i}].a"), &pc.a, self.n)?;
                    check_finite(&format!("objective.max_affine[{i}].c"), &[pc.c])?;
                }
            }
            None => {}
        }
        if let Some(v) = &self.v {
            check_len("v", v, self.n)?;
        }
        for (name, x) in [("t", self.t), ("mu", self.mu), ("alpha", self.alpha)] {
            if let Some(x) = x {
                check_finite(name, &[x])?;
            }
        }
        Ok(())
    }

    pub fn polyhedron(&self) -> Result<Polyhedron> {
        Ok(Polyhedron::new(self.a.clone(), self.b.clone())?)
    }

    /// The linear objective `c` as `(c/||c||, ||c||)`.
    pub fn linear_direction(&self) -> Result<(UnitDirection, f64)> {
        match &self.objective {
            Some(Objective::Linear(c)) => {
                let c = Vector::from_slice(c)?;
                let scale = c.norm();
                if scale == 0.0 {
                    bail!("objective.linear: must be nonzero");
                }
                Ok((UnitDirection::normalize(&c)?, scale))
            }
            Some(Objective::MaxAffine(_)) => bail!("objective: expected `linear`, found `max_affine`"),
            None => bail!("objective: missing (a `linear` objective is required)"),
        }
    }

    /// The objective as a max-affine function; a linear objective is one piece.
    pub fn max_affine(&self) -> Result<MaxAffine> {
        match &self.objective {
            Some(Objective::MaxAffine(pieces)) => Ok(MaxAffine::new(
                pieces
                    .iter()
                    .map(|pc| Ok(AffinePiece { a: Vector::from_slice(&pc.a)?, c: pc.c }))
                    .collect::<Result<_>>()?,
            )?),
            Some(Objective::Linear(c)) => Ok(MaxAffine::linear(Vector::from_slice(c)?)),
            None => bail!("objective: missing (a `max_affine` or `linear` objective is required)"),
        }
    }

    pub fn point_v(&self) -> Result<Option<Vector>> {
        self.v.as_deref().map(Vector::from_slice).transpose().map_err(Into::into)
    }

    pub fn require_v(&self) -> Result<Vector> {
        self.point_v()?.context("v: missing (this command needs a point)")
    }
}
