//! Finite alphabets and interval-based character sets.
//!
//! All automata and regexes in this crate operate over a configurable finite
//! alphabet. Character sets are kept as sorted, disjoint, coalesced ranges of
//! Unicode scalar values so that large alphabets (like printable ASCII) stay
//! compact in transition labels.

use std::fmt;

/// An inclusive range of characters, identified by Unicode scalar value.
/// Ranges are nonempty by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[allow(clippy::len_without_is_empty)]
pub struct CharRange {
    pub lo: u32,
    pub hi: u32,
}

impl CharRange {
    pub fn new(lo: u32, hi: u32) -> Self {
        debug_assert!(lo <= hi);
        CharRange { lo, hi }
    }

    pub fn singleton(c: char) -> Self {
        CharRange {
            lo: c as u32,
            hi: c as u32,
        }
    }

    pub fn contains(&self, c: u32) -> bool {
        self.lo <= c && c <= self.hi
    }

    pub fn len(&self) -> u64 {
        (self.hi - self.lo) as u64 + 1
    }

    pub fn intersect(&self, other: &CharRange) -> Option<CharRange> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(CharRange { lo, hi })
        } else {
            None
        }
    }
}

impl fmt::Display for CharRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: u32| -> String {
            match char::from_u32(v) {
                Some(c) if !c.is_control() => c.to_string(),
                _ => format!("\\u{{{:X}}}", v),
            }
        };
        if self.lo == self.hi {
            write!(f, "{}", show(self.lo))
        } else {
            write!(f, "{}-{}", show(self.lo), show(self.hi))
        }
    }
}

/// A set of characters stored as sorted, disjoint, coalesced ranges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CharSet {
    ranges: Vec<CharRange>,
}

impl CharSet {
    pub fn empty() -> Self {
        CharSet { ranges: Vec::new() }
    }

    /// Builds a set from arbitrary (possibly overlapping, unsorted) ranges.
    pub fn from_ranges(mut ranges: Vec<CharRange>) -> Self {
        ranges.sort_by_key(|r| (r.lo, r.hi));
        let mut out: Vec<CharRange> = Vec::with_capacity(ranges.len());
        for r in ranges {
            match out.last_mut() {
                // Coalesce adjacent and overlapping ranges.
                Some(last) if r.lo <= last.hi.saturating_add(1) => {
                    last.hi = last.hi.max(r.hi);
                }
                _ => out.push(r),
            }
        }
        CharSet { ranges: out }
    }

    pub fn from_chars<I: IntoIterator<Item = char>>(chars: I) -> Self {
        Self::from_ranges(chars.into_iter().map(CharRange::singleton).collect())
    }

    pub fn singleton(c: char) -> Self {
        CharSet {
            ranges: vec![CharRange::singleton(c)],
        }
    }

    pub fn ranges(&self) -> &[CharRange] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn len(&self) -> u64 {
        self.ranges.iter().map(|r| r.len()).sum()
    }

    pub fn contains(&self, c: char) -> bool {
        let v = c as u32;
        self.ranges
            .binary_search_by(|r| {
                if r.hi < v {
                    std::cmp::Ordering::Less
                } else if r.lo > v {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .is_ok()
    }

    /// The smallest character in the set.
    pub fn first(&self) -> Option<char> {
        self.ranges.first().and_then(|r| char::from_u32(r.lo))
    }

    pub fn union(&self, other: &CharSet) -> CharSet {
        let mut all = self.ranges.clone();
        all.extend_from_slice(&other.ranges);
        CharSet::from_ranges(all)
    }

    pub fn intersect(&self, other: &CharSet) -> CharSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.ranges.len() && j < other.ranges.len() {
            if let Some(r) = self.ranges[i].intersect(&other.ranges[j]) {
                out.push(r);
            }
            if self.ranges[i].hi <= other.ranges[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        CharSet { ranges: out }
    }

    /// Characters of `universe` not in `self`.
    pub fn complement_within(&self, universe: &CharSet) -> CharSet {
        let mut out = Vec::new();
        for u in &universe.ranges {
            let mut lo = u.lo;
            for r in &self.ranges {
                if r.hi < lo {
                    continue;
                }
                if r.lo > u.hi {
                    break;
                }
                if r.lo > lo {
                    out.push(CharRange::new(lo, r.lo - 1));
                }
                lo = lo.max(r.hi.saturating_add(1));
                if lo > u.hi {
                    break;
                }
            }
            if lo <= u.hi {
                out.push(CharRange::new(lo, u.hi));
            }
        }
        CharSet::from_ranges(out)
    }

    pub fn iter_chars(&self) -> impl Iterator<Item = char> + '_ {
        self.ranges
            .iter()
            .flat_map(|r| (r.lo..=r.hi).filter_map(char::from_u32))
    }
}

/// The finite alphabet every regex, word, and automaton is interpreted over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    set: CharSet,
}

impl Alphabet {
    /// Printable ASCII including space (U+0020 through U+007E).
    pub fn ascii_printable() -> Self {
        Alphabet {
            set: CharSet::from_ranges(vec![CharRange::new(0x20, 0x7E)]),
        }
    }

    pub fn from_chars<I: IntoIterator<Item = char>>(chars: I) -> Result<Self, AlphabetError> {
        let set = CharSet::from_chars(chars);
        if set.is_empty() {
            return Err(AlphabetError::Empty);
        }
        Ok(Alphabet { set })
    }

    pub fn char_set(&self) -> &CharSet {
        &self.set
    }

    pub fn contains(&self, c: char) -> bool {
        self.set.contains(c)
    }

    pub fn contains_word(&self, w: &str) -> bool {
        w.chars().all(|c| self.contains(c))
    }

    pub fn first_char(&self) -> char {
        self.set.first().expect("alphabet is nonempty")
    }

    pub fn size(&self) -> u64 {
        self.set.len()
    }

    /// All characters in order; callers should only use this for small alphabets.
    pub fn chars(&self) -> Vec<char> {
        self.set.iter_chars().collect()
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::ascii_printable()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    Empty,
}

impl fmt::Display for AlphabetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphabetError::Empty => write!(f, "alphabet must contain at least one character"),
        }
    }
}

impl std::error::Error for AlphabetError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_ranges_coalesces_overlaps() {
        let s = CharSet::from_ranges(vec![
            CharRange::new(10, 20),
            CharRange::new(15, 25),
            CharRange::new(26, 30),
            CharRange::new(40, 41),
        ]);
        assert_eq!(
            s.ranges(),
            &[CharRange::new(10, 30), CharRange::new(40, 41)]
        );
    }

    #[test]
    fn intersect_and_complement() {
        let a = CharSet::from_ranges(vec![CharRange::new(0x61, 0x66)]); // a-f
        let b = CharSet::from_ranges(vec![CharRange::new(0x64, 0x7A)]); // d-z
        let i = a.intersect(&b);
        assert_eq!(i.ranges(), &[CharRange::new(0x64, 0x66)]);

        let uni = CharSet::from_ranges(vec![CharRange::new(0x61, 0x7A)]);
        let c = i.complement_within(&uni);
        assert!(c.contains('a'));
        assert!(!c.contains('e'));
        assert!(c.contains('z'));
        assert_eq!(c.len() + i.len(), uni.len());
    }

    #[test]
    fn contains_uses_binary_search_over_ranges() {
        let s = CharSet::from_chars("aqz".chars());
        assert!(s.contains('a'));
        assert!(s.contains('q'));
        assert!(s.contains('z'));
        assert!(!s.contains('b'));
    }

    #[test]
    fn default_alphabet_is_printable_ascii() {
        let a = Alphabet::default();
        assert!(a.contains(' '));
        assert!(a.contains('~'));
        assert!(!a.contains('\n'));
        assert_eq!(a.size(), 95);
        assert_eq!(a.first_char(), ' ');
    }
}
