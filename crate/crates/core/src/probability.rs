//! Finite source distributions and semantic truncation.
//!
//! A [`SourcePmf`] is a descending-sorted pmf over `n` symbols. Truncation
//! keeps the `k` least probable symbols and renormalizes, producing a
//! [`TruncatedSource`] with admitted mass `q_k` and conditional probabilities
//! `p_i = p~_i / q_k`.

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;
const RENORM_TOL: f64 = 1e-9;

/// A finite pmf, sorted non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcePmf {
    probs: Vec<f64>,
    label: String,
}

impl SourcePmf {
    /// Validates and wraps a pre-sorted probability vector. Sums within
    /// 1e-9 of one are renormalized; anything further off is rejected.
    pub fn new(probs: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("probs", "pmf must have at least one symbol"));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 || p > 1.0 + SUM_TOL {
                return Err(Error::invalid(
                    "probs",
                    format!("entry {i} = {p} outside (0, 1]"),
                ));
            }
        }
        if probs.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("probs", "pmf must be sorted non-increasing"));
        }
        let sum: f64 = probs.iter().sum();
        let mut probs = probs;
        if (sum - 1.0).abs() > SUM_TOL {
            if (sum - 1.0).abs() <= RENORM_TOL {
                for p in &mut probs {
                    *p /= sum;
                }
            } else {
                return Err(Error::invalid(
                    "probs",
                    format!("pmf sums to {sum}, outside renormalization tolerance"),
                ));
            }
        }
        Ok(SourcePmf {
            probs,
            label: label.into(),
        })
    }

    /// Sorts an arbitrary positive vector descending before validation,
    /// recording in the label whether a permutation was applied.
    pub fn from_unsorted(mut probs: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let was_sorted = probs.windows(2).all(|w| w[0] >= w[1]);
        probs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        let mut label = label.into();
        if !was_sorted {
            label.push_str(" [sorted descending on load]");
        }
        SourcePmf::new(probs, label)
    }

    /// Zipf(n, s): probs[x] proportional to 1/x^s, x = 1..n.
    pub fn zipf(n: usize, s: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "symbol count must be positive"));
        }
        if !s.is_finite() || s < 0.0 {
            return Err(Error::invalid("s", format!("exponent {s} must be finite and >= 0")));
        }
        let weights: Vec<f64> = (1..=n).map(|x| (x as f64).powf(-s)).collect();
        let norm: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / norm).collect();
        Ok(SourcePmf {
            probs,
            label: format!("zipf({n},{s})"),
        })
    }

    /// Uniform over n symbols.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "symbol count must be positive"));
        }
        Ok(SourcePmf {
            probs: vec![1.0 / n as f64; n],
            label: format!("uniform({n})"),
        })
    }

    /// Loads the `index,prob` CSV format; rows are sorted descending.
    pub fn from_csv(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut probs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if lineno == 0 && line.eq_ignore_ascii_case("index,prob") {
                continue;
            }
            let mut fields = line.split(',');
            let _index = fields.next();
            let prob = fields
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing prob column", lineno + 1)))?;
            let p: f64 = prob
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            probs.push(p);
        }
        SourcePmf::from_unsorted(probs, label)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Shannon entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        -self.probs.iter().map(|p| p * p.log2()).sum::<f64>()
    }

    /// Keeps the `k` least probable symbols (the last `k` indices of the
    /// descending order; ties resolved by index) and renormalizes.
    pub fn truncate(&self, k: usize) -> Result<TruncatedSource> {
        let n = self.n();
        if k == 0 || k > n {
            return Err(Error::invalid(
                "k",
                format!("k = {k} outside 1..={n}"),
            ));
        }
        let first = n - k;
        let q_k: f64 = self.probs[first..].iter().sum();
        let cond_probs: Vec<f64> = self.probs[first..].iter().map(|p| p / q_k).collect();
        Ok(TruncatedSource {
            parent: self.clone(),
            k,
            first_index: first,
            q_k,
            cond_probs,
        })
    }
}

/// The admitted (least probable) slice of a parent pmf.
#[derive(Debug, Clone)]
pub struct TruncatedSource {
    parent: SourcePmf,
    k: usize,
    first_index: usize,
    q_k: f64,
    cond_probs: Vec<f64>,
}

impl TruncatedSource {
    pub fn parent(&self) -> &SourcePmf {
        &self.parent
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Zero-based parent indices of the admitted symbols, ascending.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.first_index..self.parent.n()
    }

    pub fn contains(&self, parent_index: usize) -> bool {
        parent_index >= self.first_index && parent_index < self.parent.n()
    }

    /// Position within the truncated alphabet of a parent index.
    pub fn local_index(&self, parent_index: usize) -> Option<usize> {
        self.contains(parent_index)
            .then(|| parent_index - self.first_index)
    }

    pub fn q_k(&self) -> f64 {
        self.q_k
    }

    pub fn cond_probs(&self) -> &[f64] {
        &self.cond_probs
    }

    /// Mean admitted inter-arrival time 1/(lambda q_k).
    pub fn gamma(&self, lambda: f64) -> f64 {
        1.0 / (lambda * self.q_k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn zipf_single_symbol() {
        let pmf = SourcePmf::zipf(1, 0.4).unwrap();
        assert_eq!(pmf.probs(), &[1.0]);
    }

    #[test]
    fn zipf_zero_exponent_is_uniform() {
        let z = SourcePmf::zipf(4, 0.0).unwrap();
        assert_eq!(z.probs(), &[0.25, 0.25, 0.25, 0.25]);
        let z = SourcePmf::zipf(100, 0.0).unwrap();
        let u = SourcePmf::uniform(100).unwrap();
        assert_eq!(z.probs(), u.probs());
    }

    #[test]
    fn zipf_exact_rationals() {
        // n=3, s=1: H = 11/6, probs = 6/11, 3/11, 2/11
        let pmf = SourcePmf::zipf(3, 1.0).unwrap();
        assert_close(pmf.probs()[0], 6.0 / 11.0, 1e-15);
        assert_close(pmf.probs()[1], 3.0 / 11.0, 1e-15);
        assert_close(pmf.probs()[2], 2.0 / 11.0, 1e-15);
    }

    #[test]
    fn zipf_invalid_params() {
        assert!(SourcePmf::zipf(0, 0.4).is_err());
        assert!(SourcePmf::zipf(5, f64::NAN).is_err());
        assert!(SourcePmf::zipf(5, -1.0).is_err());
        assert!(SourcePmf::uniform(0).is_err());
    }

    #[test]
    fn uniform_values() {
        assert_eq!(SourcePmf::uniform(2).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(SourcePmf::uniform(1).unwrap().probs(), &[1.0]);
        let u = SourcePmf::uniform(100).unwrap();
        assert_eq!(u.n(), 100);
        for &p in u.probs() {
            assert_close(p, 0.01, 1e-15);
        }
    }

    #[test]
    fn truncate_uniform_symmetry() {
        let pmf = SourcePmf::uniform(4).unwrap();
        let t = pmf.truncate(2).unwrap();
        assert_eq!(t.indices().collect::<Vec<_>>(), vec![2, 3]);
        assert_close(t.q_k(), 0.5, 1e-15);
        assert_eq!(t.cond_probs(), &[0.5, 0.5]);
    }

    #[test]
    fn truncate_full_is_identity() {
        let pmf = SourcePmf::zipf(100, 0.4).unwrap();
        let t = pmf.truncate(100).unwrap();
        assert_close(t.q_k(), 1.0, 1e-12);
        for (a, b) in t.cond_probs().iter().zip(pmf.probs()) {
            assert_close(*a, *b, 1e-12);
        }
    }

    #[test]
    fn truncate_zipf3_exact() {
        let pmf = SourcePmf::zipf(3, 1.0).unwrap();
        let t = pmf.truncate(2).unwrap();
        assert_eq!(t.indices().collect::<Vec<_>>(), vec![1, 2]);
        assert_close(t.q_k(), 5.0 / 11.0, 1e-15);
        assert_close(t.cond_probs()[0], 0.6, 1e-15);
        assert_close(t.cond_probs()[1], 0.4, 1e-15);
    }

    #[test]
    fn truncate_bounds() {
        let pmf = SourcePmf::uniform(4).unwrap();
        assert!(pmf.truncate(0).is_err());
        assert!(pmf.truncate(5).is_err());
    }

    #[test]
    fn q_k_strictly_increasing() {
        let pmf = SourcePmf::zipf(20, 0.7).unwrap();
        let mut prev = 0.0;
        for k in 1..=20 {
            let q = pmf.truncate(k).unwrap().q_k();
            assert!(q > prev);
            prev = q;
        }
        assert_close(prev, 1.0, 1e-12);
    }

    #[test]
    fn csv_roundtrip_sorts() {
        let text = "index,prob\n1,0.2\n2,0.5\n3,0.3\n";
        let pmf = SourcePmf::from_csv(text, "file:test").unwrap();
        assert_eq!(pmf.probs(), &[0.5, 0.3, 0.2]);
        assert!(pmf.label().contains("sorted descending"));
    }

    #[test]
    fn renormalizes_small_roundoff_only() {
        let probs = vec![0.5 + 2e-10, 0.5];
        let pmf = SourcePmf::new(probs, "t").unwrap();
        assert_close(pmf.probs().iter().sum::<f64>(), 1.0, 1e-15);
        assert!(SourcePmf::new(vec![0.5, 0.4], "t").is_err());
    }
}
