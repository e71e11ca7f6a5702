use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sub-samples tried at each stage before a trial aborts.
pub const DEFAULT_MAX_SUBSAMPLES: usize = 20;

/// Final set size searched exhaustively at the end of a trial.
pub const DEFAULT_FINAL_SIZE: usize = 5;

/// Set-size reduction scheme `a₁ > a₂ > … > a_final` of a Random Chemistry
/// trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RcScheme {
    sizes: Vec<usize>,
    max_subsamples: usize,
}

impl RcScheme {
    pub fn new(sizes: Vec<usize>, max_subsamples: usize) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Validation("RC scheme has no sizes".into()));
        }
        if sizes.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Validation(format!(
                "RC scheme sizes must be strictly decreasing: {sizes:?}"
            )));
        }
        if *sizes.last().unwrap() < 2 {
            return Err(Error::Validation("RC scheme final size must be at least 2".into()));
        }
        if max_subsamples == 0 {
            return Err(Error::Validation("max_subsamples must be positive".into()));
        }
        Ok(RcScheme {
            sizes,
            max_subsamples,
        })
    }

    /// Halve (rounding up) from `a1` down to 20, then divide by 1.5 (rounding
    /// up) down to `a_final`.
    pub fn auto(a1: usize, a_final: usize) -> Result<Self> {
        if a_final < 2 || a1 < a_final {
            return Err(Error::Validation(format!(
                "cannot build an RC scheme from {a1} down to {a_final}"
            )));
        }
        let mut sizes = vec![a1];
        let mut cur = a1;
        while cur > 20 && cur > a_final {
            cur = cur.div_ceil(2).max(20).max(a_final);
            sizes.push(cur);
        }
        while cur > a_final {
            let next = ((cur as f64) / 1.5).ceil() as usize;
            cur = next.min(cur - 1).max(a_final);
            sizes.push(cur);
        }
        Self::new(sizes, DEFAULT_MAX_SUBSAMPLES)
    }

    /// Largest automatic scheme that fits a case with `n` branches: `a₁` is
    /// the largest power-of-two multiple of 20 not above `n` (or `n` itself
    /// for small cases).
    pub fn auto_for(n_branches: usize) -> Result<Self> {
        let mut a1 = 20;
        while a1 * 2 <= n_branches {
            a1 *= 2;
        }
        if a1 > n_branches {
            a1 = n_branches;
        }
        Self::auto(a1, DEFAULT_FINAL_SIZE.min(a1))
    }

    /// Parse `"auto"` or a comma-separated list of sizes.
    pub fn parse(text: &str, n_branches: usize) -> Result<Self> {
        let text = text.trim();
        if text.eq_ignore_ascii_case("auto") {
            return Self::auto_for(n_branches);
        }
        let sizes = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Validation(format!("bad scheme size '{s}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sizes, DEFAULT_MAX_SUBSAMPLES)
    }

    pub fn with_max_subsamples(mut self, max_subsamples: usize) -> Result<Self> {
        if max_subsamples == 0 {
            return Err(Error::Validation("max_subsamples must be positive".into()));
        }
        self.max_subsamples = max_subsamples;
        Ok(self)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn first_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn final_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn max_subsamples(&self) -> usize {
        self.max_subsamples
    }

    /// Upper bound on simulations in one trial: every stage exhausting its
    /// sub-samples plus every subset of size 2..=a_final of the final set.
    pub fn simulation_bound(&self) -> usize {
        let f = self.final_size();
        let exhaustive: usize = (2..=f).map(|k| binomial(f, k)).sum();
        self.sizes.len() * self.max_subsamples + exhaustive
    }
}

impl std::fmt::Display for RcScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_reproduces_published_schemes() {
        assert_eq!(RcScheme::auto(80, 5).unwrap().sizes(), &[80, 40, 20, 14, 10, 7, 5]);
        assert_eq!(
            RcScheme::auto(320, 5).unwrap().sizes(),
            &[320, 160, 80, 40, 20, 14, 10, 7, 5]
        );
        assert_eq!(RcScheme::auto(40, 5).unwrap().sizes(), &[40, 20, 14, 10, 7, 5]);
    }

    #[test]
    fn rejects_bad_schemes() {
        assert!(RcScheme::new(vec![10, 10, 5], 20).is_err());
        assert!(RcScheme::new(vec![10, 1], 20).is_err());
        assert!(RcScheme::new(vec![], 20).is_err());
        assert!(RcScheme::parse("10,x", 30).is_err());
    }

    #[test]
    fn parse_list_and_auto() {
        assert_eq!(RcScheme::parse("10, 5", 30).unwrap().sizes(), &[10, 5]);
        assert_eq!(RcScheme::parse("auto", 60).unwrap().first_size(), 40);
        assert_eq!(RcScheme::parse("auto", 12).unwrap().sizes(), &[12, 8, 6, 5]);
    }

    #[test]
    fn bound_counts() {
        let s = RcScheme::auto(80, 5).unwrap();
        // 7 stages * 20 + C(5,2)+C(5,3)+C(5,4)+C(5,5)
        assert_eq!(s.simulation_bound(), 140 + 10 + 10 + 5 + 1);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(60, 3), 34_220);
    }
}
