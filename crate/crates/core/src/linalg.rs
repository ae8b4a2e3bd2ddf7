//! Sparse exact linear algebra over Q, and integer lattices for weight
//! bookkeeping.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::superalgebra::Rational;

/// Sparse vector indexed by column number.
pub type SparseVec = BTreeMap<usize, Rational>;

pub fn axpy(target: &mut SparseVec, c: &Rational, x: &SparseVec) {
    for (&k, v) in x {
        let entry = target.entry(k).or_insert_with(Rational::zero);
        *entry += c * v;
        if entry.is_zero() {
            target.remove(&k);
        }
    }
}

/// Incremental row echelon form; each stored row has its pivot (its smallest
/// column) normalised to 1 and no other stored row has a non-zero entry in a
/// pivot column once [`Echelon::reduced_rows`] is called.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: BTreeMap<usize, SparseVec>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.rows.contains_key(&col)
    }

    /// Reduce `v` against the stored rows.
    pub fn reduce(&self, mut v: SparseVec) -> SparseVec {
        let mut start = 0usize;
        loop {
            let next = v
                .range(start..)
                .find(|(c, _)| self.rows.contains_key(c))
                .map(|(&c, x)| (c, x.clone()));
            match next {
                Some((c, x)) => {
                    axpy(&mut v, &-x, &self.rows[&c]);
                    start = c + 1;
                }
                None => return v,
            }
        }
    }

    /// Insert a row; returns its new pivot when it was independent.
    pub fn insert(&mut self, v: SparseVec) -> Option<usize> {
        let v = self.reduce(v);
        let (&p, lead) = v.iter().next()?;
        let inv = Rational::one() / lead;
        let row: SparseVec = v.iter().map(|(&k, x)| (k, x * &inv)).collect();
        self.rows.insert(p, row);
        Some(p)
    }

    /// Fully reduced rows keyed by pivot.
    pub fn reduced_rows(&self) -> BTreeMap<usize, SparseVec> {
        let mut out: BTreeMap<usize, SparseVec> = BTreeMap::new();
        for (&p, row) in self.rows.iter().rev() {
            let mut r = row.clone();
            let later: Vec<(usize, Rational)> = r
                .iter()
                .filter(|(c, _)| **c != p && out.contains_key(c))
                .map(|(&c, x)| (c, x.clone()))
                .collect();
            for (c, x) in later {
                axpy(&mut r, &-x, &out[&c]);
            }
            out.insert(p, r);
        }
        out
    }
}

/// Basis of `{c : sum_i c_i col_i = 0}` given equations as rows over columns
/// `0..ncols`; one vector per non-pivot column, with a 1 in that column.
pub fn kernel_basis(equations: impl IntoIterator<Item = SparseVec>, ncols: usize) -> Vec<SparseVec> {
    let mut ech = Echelon::new();
    for e in equations {
        ech.insert(e);
    }
    let rows = ech.reduced_rows();
    let mut out = Vec::new();
    for f in (0..ncols).filter(|c| !rows.contains_key(c)) {
        let mut v = SparseVec::new();
        v.insert(f, Rational::one());
        for (&p, r) in &rows {
            if let Some(x) = r.get(&f) {
                v.insert(p, -x);
            }
        }
        out.push(v);
    }
    out
}

/// Reduced echelon basis of the span of `vectors`: distinct leading columns,
/// each leading entry 1 and absent from the other vectors.
pub fn echelon_basis(vectors: impl IntoIterator<Item = SparseVec>) -> Vec<SparseVec> {
    let mut ech = Echelon::new();
    for v in vectors {
        ech.insert(v);
    }
    ech.reduced_rows().into_values().collect()
}

/// Vectors of `span(basis)` supported on the columns accepted by `keep`.
pub fn restrict_span(basis: &[SparseVec], keep: impl Fn(usize) -> bool) -> Vec<SparseVec> {
    // unknowns are the coefficients of the basis vectors; equations are the
    // coordinates outside `keep`
    let mut eqs: BTreeMap<usize, SparseVec> = BTreeMap::new();
    for (i, b) in basis.iter().enumerate() {
        for (&c, x) in b {
            if !keep(c) {
                eqs.entry(c).or_default().insert(i, x.clone());
            }
        }
    }
    let ker = kernel_basis(eqs.into_values(), basis.len());
    let combos = ker.into_iter().map(|k| {
        let mut v = SparseVec::new();
        for (i, c) in &k {
            axpy(&mut v, c, &basis[*i]);
        }
        v
    });
    echelon_basis(combos)
}

/// Integer lattice in `Z^dim` kept in Hermite normal form, used to pick a
/// canonical representative of each coset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    /// Echelon rows with positive pivots, sorted by pivot column.
    rows: Vec<(usize, Vec<i64>)>,
}

impl Lattice {
    pub fn new(dim: usize, generators: impl IntoIterator<Item = Vec<i64>>) -> Self {
        let mut pending: Vec<Vec<i64>> = generators
            .into_iter()
            .inspect(|g| assert_eq!(g.len(), dim, "lattice generator of wrong length"))
            .filter(|g| g.iter().any(|&x| x != 0))
            .collect();
        let mut rows = Vec::new();
        for col in 0..dim {
            while let Some(best) = (0..pending.len())
                .filter(|&i| pending[i][col] != 0)
                .min_by_key(|&i| pending[i][col].abs())
            {
                let pivot_row = pending[best].clone();
                let mut others = false;
                for (i, r) in pending.iter_mut().enumerate() {
                    if i != best && r[col] != 0 {
                        let q = r[col] / pivot_row[col];
                        for (a, b) in r.iter_mut().zip(&pivot_row) {
                            *a -= q * b;
                        }
                        others |= r[col] != 0;
                    }
                }
                if !others {
                    let mut r = pending.swap_remove(best);
                    if r[col] < 0 {
                        r.iter_mut().for_each(|x| *x = -*x);
                    }
                    rows.push((col, r));
                    pending.retain(|r| r.iter().any(|&x| x != 0));
                    break;
                }
            }
        }
        // reduce entries above each pivot
        for j in 0..rows.len() {
            let (pj, rj) = rows[j].clone();
            for (_, ri) in rows.iter_mut().take(j) {
                let q = ri[pj].div_euclid(rj[pj]);
                if q != 0 {
                    for (a, b) in ri.iter_mut().zip(&rj) {
                        *a -= q * b;
                    }
                }
            }
        }
        Self { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Canonical coset representative of `v` modulo the lattice.
    pub fn reduce(&self, v: &[i64]) -> Vec<i64> {
        let mut v = v.to_vec();
        for (p, r) in &self.rows {
            let q = v[*p].div_euclid(r[*p]);
            if q != 0 {
                for (a, b) in v.iter_mut().zip(r) {
                    *a -= q * b;
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }
}

pub fn is_positive(x: &Rational) -> bool {
    x.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superalgebra::rat;
    use proptest::prelude::*;

    fn sv(entries: &[(usize, i64)]) -> SparseVec {
        entries.iter().map(|&(c, x)| (c, rat(x))).collect()
    }

    #[test]
    fn kernel_of_simple_system() {
        // x0 + x1 = 0, x2 = 0
        let ker = kernel_basis(vec![sv(&[(0, 1), (1, 1)]), sv(&[(2, 1)])], 4);
        assert_eq!(ker, vec![sv(&[(0, -1), (1, 1)]), sv(&[(3, 1)])]);
    }

    #[test]
    fn restricted_span() {
        let basis = vec![sv(&[(0, 1), (2, 1)]), sv(&[(1, 1), (2, 1)])];
        let r = restrict_span(&basis, |c| c < 2);
        assert_eq!(r, vec![sv(&[(0, 1), (1, -1)])]);
    }

    #[test]
    fn lattice_cosets() {
        let l = Lattice::new(2, vec![vec![2, 0], vec![1, 3]]);
        assert!(l.contains(&[3, 3]));
        assert!(!l.contains(&[1, 0]));
        assert_eq!(l.reduce(&[5, 7]), l.reduce(&[5 - 2, 7]));
    }

    proptest! {
        #[test]
        fn lattice_reduction_is_canonical(
            gens in prop::collection::vec(prop::collection::vec(-5i64..=5, 3), 0..4),
            v in prop::collection::vec(-20i64..=20, 3),
            coeffs in prop::collection::vec(-3i64..=3, 4),
        ) {
            let l = Lattice::new(3, gens.clone());
            let mut w = v.clone();
            for (g, c) in gens.iter().zip(&coeffs) {
                for (a, b) in w.iter_mut().zip(g) {
                    *a += c * b;
                }
            }
            prop_assert_eq!(l.reduce(&v), l.reduce(&w));
            for g in &gens {
                prop_assert!(l.contains(g));
            }
        }

        #[test]
        fn kernel_vectors_solve_the_system(
            rows in prop::collection::vec(prop::collection::vec(-3i64..=3, 5), 0..5),
        ) {
            let eqs: Vec<SparseVec> = rows
                .iter()
                .map(|r| r.iter().enumerate().filter(|(_, x)| **x != 0).map(|(c, x)| (c, rat(*x))).collect())
                .collect();
            let ker = kernel_basis(eqs.clone(), 5);
            let mut ech = Echelon::new();
            for e in &eqs { ech.insert(e.clone()); }
            prop_assert_eq!(ker.len() + ech.rank(), 5);
            for k in &ker {
                for e in &eqs {
                    let dot: Rational = e.iter().filter_map(|(c, x)| k.get(c).map(|y| x * y)).sum();
                    prop_assert!(dot.is_zero());
                }
            }
        }
    }
}
