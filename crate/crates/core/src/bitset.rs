/// Fixed-width bit set over PRB indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub(crate) struct Bitset {
    words: Vec<u64>,
}

impl Bitset {
    pub fn new(bits: usize) -> Self {
        Self { words: vec![0; bits.div_ceil(64)] }
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set_range(&mut self, start: usize, len: usize) {
        for_each_word(start, len, |w, mask| self.words[w] |= mask);
    }

    pub fn clear_range(&mut self, start: usize, len: usize) {
        for_each_word(start, len, |w, mask| self.words[w] &= !mask);
    }

    pub fn range_is_clear(&self, start: usize, len: usize) -> bool {
        let mut clear = true;
        for_each_word(start, len, |w, mask| clear &= self.words[w] & mask == 0);
        clear
    }

    pub fn count_range(&self, start: usize, len: usize) -> usize {
        let mut n = 0;
        for_each_word(start, len, |w, mask| n += (self.words[w] & mask).count_ones() as usize);
        n
    }

    /// Longest run of clear bits inside `[start, start + len)`.
    pub fn longest_clear_run(&self, start: usize, len: usize) -> usize {
        let (mut best, mut cur) = (0, 0);
        for i in start..start + len {
            if self.get(i) {
                cur = 0;
            } else {
                cur += 1;
                best = best.max(cur);
            }
        }
        best
    }

    /// Calls `f` with the length of every maximal clear run inside
    /// `[start, start + len)`.
    pub fn clear_runs(&self, start: usize, len: usize, mut f: impl FnMut(usize)) {
        let mut cur = 0;
        for i in start..start + len {
            if self.get(i) {
                if cur > 0 {
                    f(cur);
                }
                cur = 0;
            } else {
                cur += 1;
            }
        }
        if cur > 0 {
            f(cur);
        }
    }

    pub fn copy_from(&mut self, other: &Bitset) {
        self.words.copy_from_slice(&other.words);
    }

    pub fn and_with(&mut self, other: &Bitset) {
        for (dst, x) in self.words.iter_mut().zip(&other.words) {
            *dst &= x;
        }
    }

    pub fn or_with(&mut self, other: &Bitset) {
        for (dst, x) in self.words.iter_mut().zip(&other.words) {
            *dst |= x;
        }
    }
}

fn for_each_word(start: usize, len: usize, mut f: impl FnMut(usize, u64)) {
    let end = start + len;
    let mut i = start;
    while i < end {
        let w = i / 64;
        let lo = i % 64;
        let hi = (end - w * 64).min(64);
        let mask = if hi - lo == 64 { u64::MAX } else { ((1u64 << (hi - lo)) - 1) << lo };
        f(w, mask);
        i = (w + 1) * 64;
    }
}
