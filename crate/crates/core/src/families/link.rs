use serde::{Deserialize, Serialize};

/// Monotone map between a parameter's natural domain and the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Log,
    Logit,
}

impl Link {
    /// Parameter space to predictor space.
    pub fn link(self, theta: f64) -> f64 {
        match self {
            Link::Identity => theta,
            Link::Log => theta.ln(),
            Link::Logit => theta.ln() - (-theta).ln_1p(),
        }
    }

    /// Predictor space to parameter space. Maps every real into the domain.
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            Link::Identity => eta,
            Link::Log => eta.exp(),
            Link::Logit => logistic(eta),
        }
    }

    /// Whether `theta` lies in the image of [`Link::inverse`].
    pub fn in_domain(self, theta: f64) -> bool {
        match self {
            Link::Identity => theta.is_finite(),
            Link::Log => theta.is_finite() && theta > 0.0,
            Link::Logit => theta > 0.0 && theta < 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::Identity => "identity",
            Link::Log => "log",
            Link::Logit => "logit",
        }
    }
}

pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
