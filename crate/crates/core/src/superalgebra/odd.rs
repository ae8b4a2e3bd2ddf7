use std::fmt;

/// Maximum number of odd generators an [`OddMonomial`] can address.
pub const MAX_GENERATORS: usize = 32;

/// Product of distinct odd generators in canonical (increasing index) order,
/// stored as a bitmask. Generator `i` is bit `i`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct OddMonomial(u32);

impl OddMonomial {
    pub const ONE: OddMonomial = OddMonomial(0);

    pub fn from_mask(mask: u32) -> Self {
        OddMonomial(mask)
    }

    pub fn generator(i: usize) -> Self {
        assert!(i < MAX_GENERATORS);
        OddMonomial(1 << i)
    }

    /// Canonical monomial from a list of indices; `None` if an index repeats.
    pub fn from_indices(indices: &[usize]) -> Option<Self> {
        let mut mask = 0u32;
        for &i in indices {
            assert!(i < MAX_GENERATORS);
            if mask & (1 << i) != 0 {
                return None;
            }
            mask |= 1 << i;
        }
        Some(OddMonomial(mask))
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_even(self) -> bool {
        self.degree().is_multiple_of(2)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..MAX_GENERATORS).filter(move |i| mask & (1 << i) != 0)
    }

    pub fn without(self, i: usize) -> Self {
        OddMonomial(self.0 & !(1 << i))
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// `self * other` in canonical order: `None` when a generator repeats,
    /// otherwise the product monomial and whether a sign flip occurred.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Self) -> Option<(Self, bool)> {
        if !self.is_disjoint(other) {
            return None;
        }
        // every generator of `other` moves left past the generators of `self`
        // with a larger index
        let mut swaps = 0u32;
        let mut b = other.0;
        while b != 0 {
            let j = b.trailing_zeros();
            let above = if j >= 31 { 0 } else { self.0 >> (j + 1) };
            swaps += above.count_ones();
            b &= b - 1;
        }
        Some((OddMonomial(self.0 | other.0), swaps % 2 == 1))
    }

    /// Left derivative by generator `i`: the remaining monomial and whether
    /// the Koszul sign of moving `d/dxi_i` past the preceding factors is odd.
    pub fn left_derivative(self, i: usize) -> Option<(Self, bool)> {
        if !self.contains(i) {
            return None;
        }
        let before = (self.0 & ((1u32 << i) - 1)).count_ones();
        Some((self.without(i), before % 2 == 1))
    }

    /// Sum of the per-generator integer weights over the present generators.
    pub fn weight_sum(self, weights: &[i64]) -> i64 {
        self.indices().map(|i| weights[i]).sum()
    }

    /// Every monomial in `n` generators of the given degree, ordered by mask.
    pub fn all_of_degree(n: usize, degree: usize) -> Vec<Self> {
        assert!(n <= MAX_GENERATORS);
        if degree > n {
            return Vec::new();
        }
        let limit: u64 = 1u64 << n;
        (0..limit)
            .map(|m| m as u32)
            .filter(|m| m.count_ones() as usize == degree)
            .map(OddMonomial)
            .collect()
    }
}

impl fmt::Debug for OddMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.indices().map(|i| i.to_string()).collect();
        write!(f, "xi[{}]", idx.join(","))
    }
}
