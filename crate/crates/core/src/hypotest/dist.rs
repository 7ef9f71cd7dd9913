//! Upper-tail probabilities for the reference distributions.

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistKind {
    ChiSquared { df: f64 },
    F { df1: f64, df2: f64 },
    StudentT { df: f64 },
}

fn check_df(df: f64) -> Result<()> {
    if df > 0.0 && df.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("degrees of freedom must be positive, got {df}")))
    }
}

/// `P(X > x)`.
pub fn dist_sf(kind: DistKind, x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidParams("x is NaN".into()));
    }
    let bad = |e: &dyn std::fmt::Display| Error::InvalidParams(e.to_string());
    match kind {
        DistKind::ChiSquared { df } => {
            check_df(df)?;
            if x <= 0.0 {
                return Ok(1.0);
            }
            Ok(ChiSquared::new(df).map_err(|e| bad(&e))?.sf(x))
        }
        DistKind::F { df1, df2 } => {
            check_df(df1)?;
            check_df(df2)?;
            if x <= 0.0 {
                return Ok(1.0);
            }
            Ok(FisherSnedecor::new(df1, df2).map_err(|e| bad(&e))?.sf(x))
        }
        DistKind::StudentT { df } => {
            check_df(df)?;
            if x.is_infinite() {
                return Ok(if x > 0.0 { 0.0 } else { 1.0 });
            }
            Ok(StudentsT::new(0.0, 1.0, df).map_err(|e| bad(&e))?.sf(x))
        }
    }
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Standard normal upper tail.
pub(crate) fn normal_sf(x: f64) -> f64 {
    Normal::standard().sf(x)
}
