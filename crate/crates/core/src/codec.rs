//! Integer lengths and canonical prefix codes.
//!
//! Real solver lengths are rounded up to integers (with a 1-bit floor for
//! non-singleton alphabets), then realized as a canonical code: codewords
//! assigned shortest-first, lexicographically within a length.

use crate::error::{Error, Result};
use std::collections::HashMap;

/// Rounds real lengths up to a realizable integer spectrum.
pub fn integer_lengths(real_lengths: &[f64]) -> Result<Vec<u32>> {
    if real_lengths.is_empty() {
        return Err(Error::InvalidLengths("empty length vector".into()));
    }
    for &l in real_lengths {
        if !l.is_finite() || l < 0.0 {
            return Err(Error::InvalidLengths(format!("length {l} not finite and >= 0")));
        }
    }
    let kraft: f64 = real_lengths.iter().map(|l| (-l).exp2()).sum();
    if kraft > 1.0 + 1e-9 {
        return Err(Error::InvalidLengths(format!("input Kraft sum {kraft} exceeds 1")));
    }
    let singleton = real_lengths.len() == 1;
    Ok(real_lengths
        .iter()
        .map(|&l| {
            let up = l.ceil() as u32;
            if singleton {
                up
            } else {
                up.max(1)
            }
        })
        .collect())
}

/// A canonical prefix-free codebook over truncated-symbol indices
/// 0..k-1 (positions within the truncated alphabet).
#[derive(Debug, Clone)]
pub struct Codebook {
    int_lengths: Vec<u32>,
    codewords: Vec<String>,
    decode_map: HashMap<String, usize>,
    max_len: usize,
}

impl Codebook {
    pub fn int_lengths(&self) -> &[u32] {
        &self.int_lengths
    }

    pub fn codewords(&self) -> &[String] {
        &self.codewords
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn kraft_sum(&self) -> f64 {
        self.int_lengths.iter().map(|&l| (-(l as f64)).exp2()).sum()
    }
}

/// Builds the canonical code for an integer length spectrum.
pub fn build_codebook(int_lengths: &[u32]) -> Result<Codebook> {
    if int_lengths.is_empty() {
        return Err(Error::InvalidLengths("empty length vector".into()));
    }
    let kraft: f64 = int_lengths.iter().map(|&l| (-(l as f64)).exp2()).sum();
    if kraft > 1.0 + 1e-12 {
        return Err(Error::InvalidLengths(format!("integer Kraft sum {kraft} exceeds 1")));
    }
    if int_lengths.len() == 1 {
        let l = int_lengths[0];
        let word = "0".repeat(l as usize);
        let mut decode_map = HashMap::new();
        decode_map.insert(word.clone(), 0);
        return Ok(Codebook {
            int_lengths: int_lengths.to_vec(),
            codewords: vec![word],
            decode_map,
            max_len: l as usize,
        });
    }
    if int_lengths.contains(&0) {
        return Err(Error::InvalidLengths(
            "zero-length codeword only valid for a singleton alphabet".into(),
        ));
    }

    let mut order: Vec<usize> = (0..int_lengths.len()).collect();
    order.sort_by_key(|&i| (int_lengths[i], i));

    let mut codewords = vec![String::new(); int_lengths.len()];
    let mut code: u64 = 0;
    let mut prev_len = int_lengths[order[0]];
    for (pos, &i) in order.iter().enumerate() {
        let len = int_lengths[i];
        if pos > 0 {
            code += 1;
            code <<= len - prev_len;
        }
        codewords[i] = format!("{code:0width$b}", width = len as usize);
        prev_len = len;
    }

    // exhaustive prefix-freeness check
    for (i, a) in codewords.iter().enumerate() {
        for (j, b) in codewords.iter().enumerate() {
            if i != j && b.starts_with(a.as_str()) {
                return Err(Error::InvalidLengths(format!(
                    "codeword {a} is a prefix of {b}"
                )));
            }
        }
    }

    let decode_map = codewords
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    let max_len = *int_lengths.iter().max().unwrap() as usize;
    Ok(Codebook {
        int_lengths: int_lengths.to_vec(),
        codewords,
        decode_map,
        max_len,
    })
}

/// Concatenates the codewords for a symbol stream.
pub fn encode(book: &Codebook, symbols: &[usize]) -> Result<String> {
    let mut bits = String::new();
    for &s in symbols {
        let word = book.codewords.get(s).ok_or(Error::InvalidSymbol(s))?;
        bits.push_str(word);
    }
    Ok(bits)
}

/// Splits a bit string back into symbols; trailing or unmatched bits are
/// reported with their offset.
pub fn decode(book: &Codebook, bits: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut pos = 0;
    let bytes = bits.as_bytes();
    while pos < bytes.len() {
        let mut matched = None;
        let upper = book.max_len.min(bytes.len() - pos);
        for len in 1..=upper {
            if let Some(&sym) = book.decode_map.get(&bits[pos..pos + len]) {
                matched = Some((sym, len));
                break;
            }
        }
        match matched {
            Some((sym, len)) => {
                out.push(sym);
                pos += len;
            }
            None => return Err(Error::CorruptStream(pos)),
        }
    }
    Ok(out)
}
