use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkKind {
    Identity,
    Logistic,
}

impl LinkKind {
    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Identity => "identity",
            LinkKind::Logistic => "logistic",
        }
    }
}

/// Monotone link `μ` mapping a linear score to an expected reward.
///
/// `curvature_floor` is `inf μ'` over `[-C_B, C_B]`, the constant `ζ` of the
/// regret analysis. It has no runtime role beyond documentation and presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkFunction<F> {
    kind: LinkKind,
    curvature_floor: F,
}

impl<F: Scalar> LinkFunction<F> {
    pub fn identity() -> Self {
        Self {
            kind: LinkKind::Identity,
            curvature_floor: F::one(),
        }
    }

    /// Logistic link with `ζ = μ'(C_B)`.
    pub fn logistic(context_bound: F) -> Result<Self> {
        if !(context_bound > F::zero()) || !context_bound.is_finite() {
            return Err(invalid("C_B", format!("must be positive, got {context_bound}")));
        }
        let mut link = Self {
            kind: LinkKind::Logistic,
            curvature_floor: F::zero(),
        };
        link.curvature_floor = link.deriv(context_bound);
        Ok(link)
    }

    pub fn new(kind: LinkKind, context_bound: F) -> Result<Self> {
        match kind {
            LinkKind::Identity => Ok(Self::identity()),
            LinkKind::Logistic => Self::logistic(context_bound),
        }
    }

    pub fn kind(&self) -> LinkKind {
        self.kind
    }

    #[inline]
    pub fn eval(&self, x: F) -> F {
        match self.kind {
            LinkKind::Identity => x,
            LinkKind::Logistic => logistic(x),
        }
    }

    #[inline]
    pub fn deriv(&self, x: F) -> F {
        match self.kind {
            LinkKind::Identity => F::one(),
            LinkKind::Logistic => {
                let s = logistic(x);
                s * (F::one() - s)
            }
        }
    }

    /// Lipschitz constant `L`.
    pub fn lipschitz(&self) -> F {
        match self.kind {
            LinkKind::Identity => F::one(),
            LinkKind::Logistic => F::of(0.25),
        }
    }

    pub fn curvature_floor(&self) -> F {
        self.curvature_floor
    }
}

/// `1/(1+e^{-x})`, evaluated without overflow for either sign.
#[inline]
fn logistic<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}
