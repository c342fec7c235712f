//! Two-sample comparison of score groups: pooled-variance and Welch
//! t-tests, computable from raw samples or from published summary
//! statistics (n, mean, sd).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Summary statistics of one sample group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl SampleSummary {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!(
                "t-tests need at least 2 observations per group, got {}",
                self.n
            )));
        }
        if !self.mean.is_finite() || !self.sd.is_finite() || self.sd < 0.0 {
            return Err(Error::InvalidInput(format!(
                "invalid summary statistics: mean = {}, sd = {}",
                self.mean, self.sd
            )));
        }
        Ok(())
    }
}

/// Compute n, mean and sample standard deviation (n-1 denominator).
pub fn summarize(xs: &[f64]) -> Result<SampleSummary> {
    if xs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "t-tests need at least 2 observations per group, got {}",
            xs.len()
        )));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite observation".into()));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok(SampleSummary {
        n: xs.len(),
        mean,
        sd: var.sqrt(),
    })
}

/// Result of a two-sample t-test (two-sided).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub mean_diff: f64,
    pub se: f64,
    /// True for the pooled-variance variant, false for Welch.
    pub pooled: bool,
    /// Set when the standard error vanishes (all observations equal);
    /// t and p are NaN in that case.
    pub degenerate: bool,
}

fn two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() || !df.is_finite() || df <= 0.0 {
        return f64::NAN;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

fn finish(mean_diff: f64, se: f64, df: f64, pooled: bool) -> TTestResult {
    if se <= 0.0 || !se.is_finite() {
        return TTestResult {
            t: f64::NAN,
            df,
            p_value: f64::NAN,
            mean_diff,
            se,
            pooled,
            degenerate: true,
        };
    }
    let t = mean_diff / se;
    TTestResult {
        t,
        df,
        p_value: two_sided_p(t, df),
        mean_diff,
        se,
        pooled,
        degenerate: false,
    }
}

/// Pooled-variance (Student) t-test from summary statistics.
pub fn t_test_pooled_from_summary(a: SampleSummary, b: SampleSummary) -> Result<TTestResult> {
    a.validate()?;
    b.validate()?;
    let (n1, n2) = (a.n as f64, b.n as f64);
    let df = n1 + n2 - 2.0;
    let sp2 = ((n1 - 1.0) * a.sd * a.sd + (n2 - 1.0) * b.sd * b.sd) / df;
    let se = (sp2 * (1.0 / n1 + 1.0 / n2)).sqrt();
    Ok(finish(a.mean - b.mean, se, df, true))
}

/// Welch t-test (unequal variances) from summary statistics, with
/// Welch-Satterthwaite degrees of freedom.
pub fn t_test_welch_from_summary(a: SampleSummary, b: SampleSummary) -> Result<TTestResult> {
    a.validate()?;
    b.validate()?;
    let (n1, n2) = (a.n as f64, b.n as f64);
    let (v1, v2) = (a.sd * a.sd / n1, b.sd * b.sd / n2);
    let se = (v1 + v2).sqrt();
    let df = if v1 + v2 > 0.0 {
        (v1 + v2) * (v1 + v2) / (v1 * v1 / (n1 - 1.0) + v2 * v2 / (n2 - 1.0))
    } else {
        f64::NAN
    };
    Ok(finish(a.mean - b.mean, se, df, false))
}

/// Pooled-variance t-test from raw samples.
pub fn t_test_pooled(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    t_test_pooled_from_summary(summarize(a)?, summarize(b)?)
}

/// Welch t-test from raw samples.
pub fn t_test_welch(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    t_test_welch_from_summary(summarize(a)?, summarize(b)?)
}
