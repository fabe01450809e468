//! Hashed bag of character n-grams.
//!
//! Each n-gram (n = 2..=4 by default) is hashed with 64-bit FNV-1a; the low
//! bits choose a bucket and bit 63 chooses the sign. The vector is then
//! L2-normalized. The hash is fixed so features are identical across
//! platforms and releases.

pub const DEFAULT_DIM: usize = 2048;
pub const PAIR_SEPARATOR: &str = " [SEP] ";

#[derive(Debug, Clone, PartialEq)]
pub struct HashedNgrams {
    pub min_n: usize,
    pub max_n: usize,
    pub dim: usize,
}

impl Default for HashedNgrams {
    fn default() -> Self {
        HashedNgrams {
            min_n: 2,
            max_n: 4,
            dim: DEFAULT_DIM,
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl HashedNgrams {
    pub fn featurize(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let chars: Vec<char> = text.to_lowercase().chars().collect();
        let mut buf = String::new();
        for n in self.min_n..=self.max_n {
            for window in chars.windows(n) {
                buf.clear();
                buf.extend(window);
                let h = fnv1a(buf.as_bytes());
                let bucket = (h % self.dim as u64) as usize;
                let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
                v[bucket] += sign;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    /// Featurizes a sentence pair joined by [`PAIR_SEPARATOR`].
    pub fn featurize_pair(&self, a: &str, b: &str) -> Vec<f64> {
        self.featurize(&format!("{a}{PAIR_SEPARATOR}{b}"))
    }
}
