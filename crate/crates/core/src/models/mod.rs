//! Model catalog: quad-equations with their octahedron relations and the three-point
//! Lagrangians built on them.

pub mod lagrangian;
pub mod quad;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::forms::FormError;

pub use lagrangian::{ExpLegs, LagrangianModel, ModelLegs, Q1Legs, TodaStencil};
pub use quad::{QuadModel, QuadRoot, QuadSlot, ALL_QUAD_MODELS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown model `{0}`")]
    Unknown(String),
    #[error("model `{model}` has no {layer} layer")]
    NoLayer { model: String, layer: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular equation: {0}")]
    Singular(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Registry keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(into = "String")]
pub enum ModelId {
    Q1Zero,
    Q1One,
    Q3Zero,
    H1,
    H2,
    H3,
    Exp,
    ExpGamma,
    Zero,
}

impl ModelId {
    pub const ALL: [ModelId; 9] = [
        ModelId::Q1Zero,
        ModelId::Q1One,
        ModelId::Q3Zero,
        ModelId::H1,
        ModelId::H2,
        ModelId::H3,
        ModelId::Exp,
        ModelId::ExpGamma,
        ModelId::Zero,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            ModelId::Q1Zero => "q1d0",
            ModelId::Q1One => "q1d1",
            ModelId::Q3Zero => "q3d0",
            ModelId::H1 => "h1",
            ModelId::H2 => "h2",
            ModelId::H3 => "h3",
            ModelId::Exp => "exp",
            ModelId::ExpGamma => "exp-gamma",
            ModelId::Zero => "zero",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl From<ModelId> for String {
    fn from(m: ModelId) -> String {
        m.key().to_string()
    }
}

impl FromStr for ModelId {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| ModelError::Unknown(s.to_string()))
    }
}

pub const DEFAULT_DEFORMATION: f64 = 0.1;

/// A registry entry with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Model {
    pub id: ModelId,
    pub delta: f64,
    pub gamma: f64,
}

impl Model {
    pub fn new(id: ModelId) -> Self {
        let gamma = if id == ModelId::ExpGamma {
            DEFAULT_DEFORMATION
        } else {
            0.0
        };
        Model {
            id,
            delta: 0.0,
            gamma,
        }
    }

    /// Builds a model from its key and `name=value` parameter pairs (`delta`, `gamma`).
    pub fn from_key(key: &str, params: &[(&str, f64)]) -> Result<Self, ModelError> {
        let mut m = Model::new(key.parse()?);
        for &(name, v) in params {
            m = m.with_param(name, v)?;
        }
        Ok(m)
    }

    pub fn with_param(mut self, name: &str, v: f64) -> Result<Self, ModelError> {
        if !v.is_finite() {
            return Err(ModelError::Parameter(format!("{name} = {v} is not finite")));
        }
        match (name, self.id) {
            ("delta", ModelId::H3) => self.delta = v,
            ("gamma", ModelId::ExpGamma) => {
                if v < 0.0 {
                    return Err(ModelError::Parameter(format!("gamma = {v} must be >= 0")));
                }
                self.gamma = v
            }
            ("gamma", ModelId::Exp) if v == 0.0 => {}
            _ => {
                return Err(ModelError::Parameter(format!(
                    "model `{}` takes no parameter `{name}`",
                    self.id
                )))
            }
        }
        Ok(self)
    }

    pub fn quad(&self) -> Result<QuadModel, ModelError> {
        Ok(match self.id {
            ModelId::Q1Zero => QuadModel::Q1Zero,
            ModelId::Q1One => QuadModel::Q1One,
            ModelId::Q3Zero => QuadModel::Q3Zero,
            ModelId::H1 => QuadModel::H1,
            ModelId::H2 => QuadModel::H2,
            ModelId::H3 => QuadModel::H3 { delta: self.delta },
            _ => {
                return Err(ModelError::NoLayer {
                    model: self.id.to_string(),
                    layer: "quad-equation".into(),
                })
            }
        })
    }

    pub fn lagrangian(&self) -> Result<LagrangianModel, ModelError> {
        Ok(match self.id {
            ModelId::Q1Zero => LagrangianModel::Q1Zero,
            ModelId::Exp => LagrangianModel::Exponential { gamma: 0.0 },
            ModelId::ExpGamma => LagrangianModel::Exponential { gamma: self.gamma },
            ModelId::Zero => LagrangianModel::Zero,
            _ => {
                return Err(ModelError::NoLayer {
                    model: self.id.to_string(),
                    layer: "Lagrangian".into(),
                })
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_round_trip() {
        for id in ModelId::ALL {
            assert_eq!(id.key().parse::<ModelId>().unwrap(), id);
        }
        assert!(matches!(
            "q2".parse::<ModelId>(),
            Err(ModelError::Unknown(_))
        ));
    }

    #[test]
    fn layers() {
        let h1 = Model::new(ModelId::H1);
        assert!(matches!(h1.lagrangian(), Err(ModelError::NoLayer { .. })));
        assert!(h1.quad().is_ok());
        let q1 = Model::new(ModelId::Q1Zero);
        assert!(q1.quad().is_ok() && q1.lagrangian().is_ok());
        assert_eq!(
            Model::new(ModelId::ExpGamma).lagrangian().unwrap(),
            LagrangianModel::Exponential { gamma: 0.1 }
        );
        assert!(Model::new(ModelId::Exp).quad().is_err());
    }

    #[test]
    fn parameters() {
        let m = Model::from_key("h3", &[("delta", 0.5)]).unwrap();
        assert_eq!(m.quad().unwrap(), QuadModel::H3 { delta: 0.5 });
        assert!(Model::from_key("h1", &[("delta", 0.5)]).is_err());
        assert!(Model::from_key("exp-gamma", &[("gamma", -1.0)]).is_err());
        let m = Model::from_key("exp-gamma", &[("gamma", 0.05)]).unwrap();
        assert_eq!(m.gamma, 0.05);
    }
}
