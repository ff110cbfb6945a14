//! Small combinatorics helpers: exact binomials and deterministic k-subset
//! iteration for the clutch and design enumerations.

/// Exact binomial coefficient. The spaces counted here stay far below
/// `u128::MAX`; panics on overflow rather than saturating.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128).expect("binomial overflow");
        acc /= (i + 1) as u128;
    }
    acc
}

/// Iterates the k-subsets of `0..n` in lexicographic order.
pub struct Combinations {
    n: usize,
    k: usize,
    state: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let state = if k <= n { Some((0..k).collect()) } else { None };
        Self { n, k, state }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.state.clone()?;
        // Advance to the successor, rightmost index first.
        let state = self.state.as_mut().unwrap();
        let mut i = self.k;
        loop {
            if i == 0 {
                self.state = None;
                break;
            }
            i -= 1;
            if state[i] < self.n - (self.k - i) {
                state[i] += 1;
                for j in (i + 1)..self.k {
                    state[j] = state[j - 1] + 1;
                }
                break;
            }
        }
        Some(current)
    }
}

/// The k-subset of `0..n` at lexicographic position `index` (0-based).
pub fn unrank_combination(n: u64, k: u64, mut index: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k as usize);
    let mut next = 0u64;
    let mut remaining = k;
    while remaining > 0 {
        let with_next = binomial(n - next - 1, remaining - 1);
        if index < with_next {
            out.push(next as usize);
            remaining -= 1;
        } else {
            index -= with_next;
        }
        next += 1;
    }
    out
}

/// 128-bit FNV-1a, used for content-addressed dedup keys.
pub fn fnv128(bytes: &[u8]) -> u128 {
    const OFFSET: u128 = 0x6c62272e07bb014262b821756295c58d;
    const PRIME: u128 = 0x0000000001000000000000000000013b;
    let mut hash = OFFSET;
    for &b in bytes {
        hash ^= b as u128;
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}
