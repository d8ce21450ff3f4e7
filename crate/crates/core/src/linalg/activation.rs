use serde::{Deserialize, Serialize};

use super::DataMatrix;

pub const DEFAULT_INVERSE_EPS: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Tanh,
    Sigmoid,
    Identity,
}

/// Elementwise activation together with the clip margin used by its inverse.
///
/// The inverse clamps its argument into the open range of the forward map
/// shrunk by `inverse_eps` (`[-1+eps, 1-eps]` for tanh, `[eps, 1-eps]` for
/// the sigmoid), which makes it total.
///
/// In configuration files it may be written as a bare kind (`"tanh"`) or as
/// a table with `kind` and `inverse_eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ActivationRepr")]
pub struct Activation {
    pub kind: ActivationKind,
    pub inverse_eps: f64,
}

fn default_eps() -> f64 {
    DEFAULT_INVERSE_EPS
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ActivationRepr {
    Kind(ActivationKind),
    Full(FullActivation),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FullActivation {
    kind: ActivationKind,
    #[serde(default = "default_eps")]
    inverse_eps: f64,
}

impl TryFrom<ActivationRepr> for Activation {
    type Error = String;

    fn try_from(r: ActivationRepr) -> Result<Self, String> {
        let a = match r {
            ActivationRepr::Kind(kind) => Activation::new(kind),
            ActivationRepr::Full(f) => Activation {
                kind: f.kind,
                inverse_eps: f.inverse_eps,
            },
        };
        a.validate().map_err(|e| e.to_string())?;
        Ok(a)
    }
}

impl Activation {
    pub const TANH: Activation = Activation::new(ActivationKind::Tanh);
    pub const SIGMOID: Activation = Activation::new(ActivationKind::Sigmoid);
    pub const IDENTITY: Activation = Activation::new(ActivationKind::Identity);

    pub const fn new(kind: ActivationKind) -> Self {
        Activation {
            kind,
            inverse_eps: DEFAULT_INVERSE_EPS,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.inverse_eps > 0.0 && self.inverse_eps < 0.5) {
            return Err(crate::Error::config(
                "activation.inverse_eps",
                "must lie in (0, 0.5)",
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn apply_scalar(&self, v: f64) -> f64 {
        match self.kind {
            ActivationKind::Tanh => v.tanh(),
            ActivationKind::Sigmoid => {
                // split on sign so exp never overflows
                if v >= 0.0 {
                    1.0 / (1.0 + (-v).exp())
                } else {
                    let e = v.exp();
                    e / (1.0 + e)
                }
            }
            ActivationKind::Identity => v,
        }
    }

    #[inline]
    pub fn inverse_scalar(&self, v: f64) -> f64 {
        let eps = self.inverse_eps;
        match self.kind {
            ActivationKind::Tanh => v.clamp(-1.0 + eps, 1.0 - eps).atanh(),
            ActivationKind::Sigmoid => {
                let p = v.clamp(eps, 1.0 - eps);
                (p / (1.0 - p)).ln()
            }
            ActivationKind::Identity => v,
        }
    }

    pub fn activate(&self, m: &DataMatrix) -> DataMatrix {
        let mut inner = m.as_inner().clone();
        self.activate_in_place(&mut inner);
        DataMatrix::wrap(inner)
    }

    pub(crate) fn activate_in_place(&self, m: &mut nalgebra::DMatrix<f64>) {
        if self.kind != ActivationKind::Identity {
            m.apply(|v| *v = self.apply_scalar(*v));
        }
    }

    pub fn activate_inverse(&self, m: &DataMatrix) -> DataMatrix {
        let mut inner = m.as_inner().clone();
        if self.kind != ActivationKind::Identity {
            inner.apply(|v| *v = self.inverse_scalar(*v));
        }
        DataMatrix::wrap(inner)
    }
}

impl Default for Activation {
    fn default() -> Self {
        Activation::TANH
    }
}
