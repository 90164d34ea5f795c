use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Correlation threshold: a fixed value or derived from a significance level.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Kappa {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for Kappa {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Kappa::Auto => s.serialize_str("auto"),
            Kappa::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Kappa::Fixed(v)),
            Raw::Str(s) if s.eq_ignore_ascii_case("auto") => Ok(Kappa::Auto),
            Raw::Str(s) => s
                .parse()
                .map(Kappa::Fixed)
                .map_err(|_| serde::de::Error::custom(format!("kappa must be a number or \"auto\", got `{s}`"))),
        }
    }
}

/// Which parameter subsets compete for an update in each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Singletons only: one parameter per iteration.
    Noncyclical,
    /// Every non-empty subset of parameters.
    #[default]
    BestSubset,
}

/// Zero/positive stratified batches for count responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrataConfig {
    pub zeros: usize,
    pub positives: usize,
    #[serde(default)]
    pub replace: bool,
}

/// Tuning constants for the stagewise fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Maximum step length `ε`.
    pub eps: f64,
    /// Lower clip as a fraction of `ε`.
    pub nu: f64,
    /// Share of the budget during which the lower clip applies.
    pub rho: f64,
    /// Iteration budget.
    #[serde(rename = "T")]
    pub t_max: usize,
    pub kappa: Kappa,
    /// Significance level for the automatic threshold.
    pub alpha: f64,
    /// Clamp the automatic threshold into `[kappa_min, kappa_max]`.
    pub kappa_clamp: bool,
    pub kappa_min: f64,
    pub kappa_max: f64,
    /// Batch size; `None` (or `n`) runs full batch.
    pub bs: Option<usize>,
    pub strata: Option<StrataConfig>,
    pub update_mode: UpdateMode,
    pub cf_enabled: bool,
    /// Moving-average width for the batchwise BIC path.
    pub bic_ma_window: usize,
    /// Consecutive iterations without a surviving candidate before stopping.
    pub patience: usize,
    /// Boost the selected variables to convergence after selection.
    pub refit: bool,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            eps: 0.01,
            nu: 0.1,
            rho: 0.8,
            t_max: 1000,
            kappa: Kappa::Auto,
            alpha: 0.05,
            kappa_clamp: false,
            kappa_min: 0.075,
            kappa_max: 0.175,
            bs: None,
            strata: None,
            update_mode: UpdateMode::BestSubset,
            cf_enabled: true,
            bic_ma_window: 10,
            patience: 50,
            refit: true,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        if !(0.0..=1.0).contains(&self.nu) {
            return bad("nu must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad("rho must lie in [0, 1]");
        }
        if self.t_max == 0 {
            return bad("T must be positive");
        }
        if let Kappa::Fixed(k) = self.kappa {
            if !(k >= 0.0 && k.is_finite()) {
                return bad("kappa must be non-negative");
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.kappa_min >= 0.0 && self.kappa_min <= self.kappa_max) {
            return bad("need 0 <= kappa_min <= kappa_max");
        }
        if self.bic_ma_window == 0 {
            return bad("bic_ma_window must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_accepts_auto_and_numbers() {
        let k: Kappa = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(k, Kappa::Auto);
        let k: Kappa = serde_json::from_str("0.15").unwrap();
        assert_eq!(k, Kappa::Fixed(0.15));
        assert!(serde_json::from_str::<Kappa>("\"big\"").is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c: FitConfig = serde_json::from_str(r#"{"T": 50, "bs": 10}"#).unwrap();
        assert_eq!(c.t_max, 50);
        assert_eq!(c.bs, Some(10));
        assert_eq!(c.eps, 0.01);
        assert!(serde_json::from_str::<FitConfig>(r#"{"epsilon": 1}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(FitConfig::default().validate().is_ok());
        let c = FitConfig { nu: 1.5, ..Default::default() };
        assert!(c.validate().is_err());
        let c = FitConfig { bic_ma_window: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
