//! JSON specifications for gauges, solutions and verification runs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::anisotropy::AnisotropyNorm;
use crate::dual_geometry::DualGauge;
use crate::error::{Error, Result};
use crate::solution::LiouvilleSolution;

/// A gauge family and its parameters, e.g.
/// `{"family": "ellipse", "dimension": 2, "matrix": [[4, 0], [0, 1]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormSpec {
    Euclidean {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
    },
    Ellipse {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        matrix: Vec<Vec<f64>>,
    },
    #[serde(alias = "p_norm")]
    Pnorm {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        p: f64,
    },
    Shifted {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        b: Vec<f64>,
    },
    CustomTabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        boundary_points: Vec<[f64; 2]>,
    },
}

impl NormSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("norm: {e}")))
    }

    /// Dimension implied by the parameters, if any.
    fn intrinsic_dimension(&self) -> Option<usize> {
        match self {
            NormSpec::Euclidean { .. } | NormSpec::Pnorm { .. } => None,
            NormSpec::Ellipse { matrix, .. } => Some(matrix.len()),
            NormSpec::Shifted { b, .. } => Some(b.len()),
            NormSpec::CustomTabulated { .. } => Some(2),
        }
    }

    fn declared_dimension(&self) -> Option<usize> {
        match self {
            NormSpec::Euclidean { dimension }
            | NormSpec::Ellipse { dimension, .. }
            | NormSpec::Pnorm { dimension, .. }
            | NormSpec::Shifted { dimension, .. }
            | NormSpec::CustomTabulated { dimension, .. } => *dimension,
        }
    }

    /// Resolves the dimension from the override, the declared field and the
    /// parameters; all that are present must agree.
    pub fn dimension(&self, override_dim: Option<usize>) -> Result<usize> {
        let candidates = [override_dim, self.declared_dimension(), self.intrinsic_dimension()];
        let mut found: Option<usize> = None;
        for d in candidates.into_iter().flatten() {
            match found {
                Some(f) if f != d => {
                    return Err(Error::Config(format!("conflicting dimensions {f} and {d}")));
                }
                _ => found = Some(d),
            }
        }
        let dim = found.unwrap_or(2);
        if !(2..=6).contains(&dim) {
            return Err(Error::Config(format!("dimension must be in 2..=6, got {dim}")));
        }
        Ok(dim)
    }

    /// Copy with the dimension field filled in, for reports.
    pub fn resolved(&self, override_dim: Option<usize>) -> Result<Self> {
        let dim = Some(self.dimension(override_dim)?);
        let mut out = self.clone();
        match &mut out {
            NormSpec::Euclidean { dimension }
            | NormSpec::Ellipse { dimension, .. }
            | NormSpec::Pnorm { dimension, .. }
            | NormSpec::Shifted { dimension, .. }
            | NormSpec::CustomTabulated { dimension, .. } => *dimension = dim,
        }
        Ok(out)
    }

    pub fn build(&self, override_dim: Option<usize>) -> Result<AnisotropyNorm> {
        let dim = self.dimension(override_dim)?;
        let norm = match self {
            NormSpec::Euclidean { .. } => AnisotropyNorm::euclidean(dim),
            NormSpec::Ellipse { matrix, .. } => {
                if matrix.iter().any(|row| row.len() != dim) {
                    return Err(Error::Config("ellipse matrix must be square".into()));
                }
                let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                AnisotropyNorm::ellipse(DMatrix::from_row_slice(dim, dim, &flat))
            }
            NormSpec::Pnorm { p, .. } => AnisotropyNorm::pnorm(dim, *p),
            NormSpec::Shifted { b, .. } => AnisotropyNorm::shifted(b.clone()),
            NormSpec::CustomTabulated { boundary_points, .. } => {
                AnisotropyNorm::custom_tabulated(boundary_points)
            }
        };
        norm.map_err(|e| Error::Config(format!("norm: {e}")))
    }
}

/// Parameters of an explicit solution: `{"N": 2, "lambda": 1.0, "center": [0, 0]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSpec {
    #[serde(rename = "N")]
    pub dim: usize,
    pub lambda: f64,
    pub center: Vec<f64>,
}

impl SolutionSpec {
    pub fn origin(dim: usize, lambda: f64) -> Self {
        Self {
            dim,
            lambda,
            center: vec![0.0; dim],
        }
    }

    pub fn build(&self, gauge: DualGauge) -> Result<LiouvilleSolution> {
        if gauge.dim() != self.dim {
            return Err(Error::Config(format!(
                "solution dimension {} does not match the gauge dimension {}",
                self.dim,
                gauge.dim()
            )));
        }
        LiouvilleSolution::new(gauge, self.lambda, self.center.clone())
            .map_err(|e| Error::Config(format!("solution spec: {e}")))
    }
}

/// Parses a comma-separated list of numbers such as `0.3,-0.1`.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number {s:?}: {e}")))
        })
        .collect()
}
