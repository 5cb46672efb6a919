//! Small statistics helpers for trial summaries.

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::error::{invalid, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean, with the `n - 1` variance.
pub fn std_err(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Binomial standard error `√(p(1-p)/n)`.
pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Upper `level` critical value of χ² with `dof` degrees of freedom.
pub fn chi2_critical(dof: usize, level: f64) -> Result<f64> {
    let d = ChiSquared::new(dof as f64).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    Ok(d.inverse_cdf(1.0 - level))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anova {
    pub f: f64,
    pub p_value: f64,
    pub df_between: usize,
    pub df_within: usize,
}

/// One-way analysis of variance across groups. Empty groups are skipped.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<Anova> {
    let groups: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    let k = groups.len();
    let n: usize = groups.iter().map(|g| g.len()).sum();
    if k < 2 || n <= k {
        return invalid(format!("ANOVA needs at least two groups and more samples than groups (k={k}, n={n})"));
    }
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut between = 0.0;
    let mut within = 0.0;
    for g in &groups {
        let m = mean(g);
        between += g.len() as f64 * (m - grand).powi(2);
        within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let (df_b, df_w) = (k - 1, n - k);
    let f = (between / df_b as f64) / (within / df_w as f64);
    let p_value = if f.is_finite() {
        let dist =
            FisherSnedecor::new(df_b as f64, df_w as f64).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
        dist.sf(f)
    } else if within == 0.0 && between == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(Anova { f, p_value, df_between: df_b, df_within: df_w })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_mean() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((std_err(&[1.0, 2.0, 3.0]) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn chi2_table_values() {
        // standard table: χ²₀.₉₉(1) = 6.635, χ²₀.₉₉(3) = 11.345
        assert!((chi2_critical(1, 0.01).unwrap() - 6.634897).abs() < 1e-5);
        assert!((chi2_critical(3, 0.01).unwrap() - 11.344867).abs() < 1e-5);
    }

    #[test]
    fn anova_hand_example() {
        // groups {1,2,3}, {4,5,6}: SSB = 13.5, SSW = 4, F = 13.5 / (4/4) = 13.5
        let a = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert!((a.f - 13.5).abs() < 1e-12);
        assert_eq!((a.df_between, a.df_within), (1, 4));
        // F(1,4) survival at 13.5 ≈ 0.02131
        assert!((a.p_value - 0.021312).abs() < 1e-4, "{}", a.p_value);
    }

    #[test]
    fn anova_constant_groups() {
        let a = one_way_anova(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(a.p_value, 1.0);
        assert!(one_way_anova(&[vec![1.0]]).is_err());
    }
}
