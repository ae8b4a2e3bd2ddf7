//! The deformed supermanifold given by one gluing automorphism
//! `alpha = exp(Y)` on the overlap, and its even global vector fields.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart_geometry::{
    basis_element, global_basis_slots, model_transform, split_cochain_with, BundleSpec, GeometryError, ParityFilter,
    Slot, SplitConvention,
};
use crate::linalg::{echelon_basis, kernel_basis, restrict_span, Lattice, SparseVec};
use crate::superalgebra::{
    exp_aut, AlgebraError, Direction, LaurentPoly, OddMonomial, Rational, SuperAutomorphism, SuperDerivation,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeformationError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `(E, Y)`: the split model of `E` reglued by `exp(Y)` on `U0 n U1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeformedModel {
    pub spec: BundleSpec,
    pub log_alpha: SuperDerivation,
}

impl DeformedModel {
    pub fn new(spec: BundleSpec, log_alpha: SuperDerivation) -> Result<Self, DeformationError> {
        for (mono, dir, _) in log_alpha.terms() {
            crate::chart_geometry::monomial_bound(mono, dir, &spec)?;
        }
        exp_aut(&log_alpha)?;
        Ok(Self { spec, log_alpha })
    }

    pub fn split(spec: BundleSpec) -> Self {
        Self {
            spec,
            log_alpha: SuperDerivation::zero(),
        }
    }

    /// `3 O(4) + 4 O(-2)` reglued by `(z^-2 eta1 + z^-8 eta2) eta3 eta4 d(theta1)`.
    pub fn paper_example() -> Self {
        let spec = BundleSpec::paper_example();
        let y = crate::superalgebra::expr::parse_derivation(PAPER_DEFORMATION, &spec.names(), "z")
            .expect("valid deformation");
        Self::new(spec, y).expect("valid deformation")
    }

    pub fn alpha(&self) -> SuperAutomorphism {
        exp_aut(&self.log_alpha).expect("validated on construction")
    }

    pub fn is_split_model(&self) -> bool {
        self.log_alpha.is_zero()
    }
}

pub const PAPER_DEFORMATION: &str = "(z^-2*eta1 + z^-8*eta2)*eta3*eta4*d(theta1)";

/// A global field given by its expressions on both charts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalFieldPair {
    pub x0: SuperDerivation,
    /// Written in U1 coordinates.
    pub x1: SuperDerivation,
}

impl GlobalFieldPair {
    /// The pair `(x, x)` for a field of the split model given on U0.
    pub fn from_u0(x: &SuperDerivation, spec: &BundleSpec) -> Self {
        Self {
            x0: x.clone(),
            x1: model_transform(x, spec),
        }
    }

    /// `x1` in U0 coordinates.
    pub fn x1_pullback(&self, spec: &BundleSpec) -> SuperDerivation {
        model_transform(&self.x1, spec)
    }
}

/// `x0 = alpha x1 alpha^-1` on the overlap.
pub fn glue_check(m: &DeformedModel, p: &GlobalFieldPair) -> bool {
    m.alpha().conjugate(&p.x1_pullback(&m.spec)) == p.x0
}

/// Both charts regular and the gluing relation exact.
pub fn is_global_pair(m: &DeformedModel, p: &GlobalFieldPair) -> bool {
    p.x0.all_polynomial() && p.x1.all_polynomial() && glue_check(m, p)
}

/// Weight of a monomial derivation `z^e xi^I d(dir)`: the z-exponent shift
/// followed by the odd multi-index shift. Brackets add weights.
pub fn term_weight(mono: OddMonomial, dir: Direction, e: i64, n: usize) -> Vec<i64> {
    let mut w = vec![0i64; n + 1];
    w[0] = e - i64::from(dir == Direction::Base);
    for i in mono.indices() {
        w[i + 1] += 1;
    }
    if let Direction::Odd(j) = dir {
        w[j + 1] -= 1;
    }
    w
}

/// Lattice spanned by the weights of the terms of `y`.
pub fn weight_lattice(y: &SuperDerivation, n: usize) -> Lattice {
    let gens = y.terms().flat_map(|(mono, dir, p)| {
        p.terms()
            .map(move |(e, _)| term_weight(mono, dir, e, n))
            .collect::<Vec<_>>()
    });
    Lattice::new(n + 1, gens)
}

type TermKey = (OddMonomial, Direction, i64);

/// Coordinates of derivations as sparse vectors over a growing term index.
#[derive(Default)]
struct TermIndex {
    index: BTreeMap<TermKey, usize>,
}

impl TermIndex {
    fn vector(&mut self, x: &SuperDerivation) -> SparseVec {
        let mut v = SparseVec::new();
        for (mono, dir, p) in x.terms() {
            for (e, c) in p.terms() {
                let next = self.index.len();
                let k = *self.index.entry((mono, dir, e)).or_insert(next);
                v.insert(k, c.clone());
            }
        }
        v
    }
}

/// One candidate of the lifting procedure with its canonical correction
/// chain: `x0 = g + a`, `pullback(x1) = g + b`, and the obstruction left over.
#[derive(Clone, Debug)]
struct Chain {
    a: SuperDerivation,
    b: SuperDerivation,
    obstruction: SuperDerivation,
}

fn correction_chain(
    y: &SuperAutomorphism,
    g: &SuperDerivation,
    d0: i64,
    max_degree: i64,
    spec: &BundleSpec,
    convention: SplitConvention,
) -> Chain {
    let mut a = SuperDerivation::zero();
    let mut b = g.clone();
    let mut obstruction = SuperDerivation::zero();
    for d in d0 + 1..=max_degree {
        let defect = &y.conjugate(&b) - &b;
        let c = defect.degree_part(d);
        if c.is_zero() {
            continue;
        }
        let sp = split_cochain_with(&c, spec, convention);
        a += &sp.u0;
        b += &sp.u1_pullback;
        obstruction += &sp.obstruction;
    }
    // whatever the series produces beyond the last field degree vanishes
    Chain { a, b, obstruction }
}

/// A global field of the deformed model, with its leading graded part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedField {
    pub pair: GlobalFieldPair,
    pub leading_degree: i64,
    pub leading: SuperDerivation,
}

/// Basis of the even global fields of filtration degree `>= 2` and degree at
/// most `max_degree`, in echelon form with respect to the split global basis
/// ordered by degree: distinct fields have distinct leading basis elements.
pub fn lift_fields(m: &DeformedModel, max_degree: i64) -> Vec<LiftedField> {
    lift_fields_with(m, max_degree, SplitConvention::PreferU0)
}

pub fn lift_fields_with(m: &DeformedModel, max_degree: i64, convention: SplitConvention) -> Vec<LiftedField> {
    let spec = &m.spec;
    let n = spec.rank();
    let top = n as i64;
    let alpha = m.alpha();
    let lattice = weight_lattice(&m.log_alpha, n);

    // candidates in global order, grouped by weight class
    let mut candidates: Vec<(i64, SuperDerivation)> = Vec::new();
    let mut classes: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    // every degree takes part in the obstruction system; only the output is
    // limited to leading degree <= max_degree
    for d in (2..=top).filter(|d| d % 2 == 0) {
        for (slot, e) in global_basis_slots(spec, d, ParityFilter::Even) {
            let class = lattice.reduce(&term_weight(slot.mono, slot.dir, e, n));
            classes.entry(class).or_default().push(candidates.len());
            candidates.push((d, basis_element(&slot, e, spec)));
        }
    }

    let mut out: Vec<(usize, LiftedField)> = Vec::new();
    for members in classes.values() {
        let chains: Vec<Chain> = members
            .iter()
            .map(|&i| correction_chain(&alpha, &candidates[i].1, candidates[i].0, top, spec, convention))
            .collect();
        if m.is_split_model() || chains.iter().all(|c| c.obstruction.is_zero()) {
            for (local, &i) in members.iter().enumerate() {
                out.push((i, assemble(spec, &candidates, members, &chains, &unit(local))));
            }
            continue;
        }
        let mut index = TermIndex::default();
        let mut equations: BTreeMap<usize, SparseVec> = BTreeMap::new();
        for (local, ch) in chains.iter().enumerate() {
            for (k, c) in index.vector(&ch.obstruction) {
                equations.entry(k).or_default().insert(local, c);
            }
        }
        let kernel = kernel_basis(equations.into_values(), members.len());
        for v in echelon_basis(kernel) {
            let lead = *v.keys().next().expect("non-zero kernel vector");
            out.push((members[lead], assemble(spec, &candidates, members, &chains, &v)));
        }
    }
    out.sort_by_key(|(i, _)| *i);
    out.into_iter()
        .map(|(_, f)| f)
        .filter(|f| f.leading_degree <= max_degree)
        .collect()
}

fn unit(i: usize) -> SparseVec {
    let mut v = SparseVec::new();
    v.insert(i, Rational::from_integer(1.into()));
    v
}

fn assemble(
    spec: &BundleSpec,
    candidates: &[(i64, SuperDerivation)],
    members: &[usize],
    chains: &[Chain],
    coeffs: &SparseVec,
) -> LiftedField {
    let mut x0 = SuperDerivation::zero();
    let mut x1p = SuperDerivation::zero();
    let mut leading = SuperDerivation::zero();
    let lead_degree = candidates[members[*coeffs.keys().next().expect("non-zero")]].0;
    for (&local, c) in coeffs {
        let (d, g) = &candidates[members[local]];
        let ch = &chains[local];
        let gx = g.scale(c);
        x0 += &(&gx + &ch.a.scale(c));
        x1p += &ch.b.scale(c);
        if *d == lead_degree {
            leading += &gx;
        }
    }
    LiftedField {
        pair: GlobalFieldPair {
            x0,
            x1: model_transform(&x1p, spec),
        },
        leading_degree: lead_degree,
        leading,
    }
}

/// U0 expressions of the global fields; the input of the kernel analysis.
pub fn chart0_fields(m: &DeformedModel) -> Vec<SuperDerivation> {
    lift_fields(m, m.spec.rank() as i64)
        .into_iter()
        .map(|f| f.pair.x0)
        .collect()
}

/// Leading graded parts of the global fields whose leading degree is `d`.
pub fn liftable_leading(lifts: &[LiftedField], d: i64) -> Vec<SuperDerivation> {
    lifts
        .iter()
        .filter(|f| f.leading_degree == d)
        .map(|f| f.leading.clone())
        .collect()
}

/// Pure degree-`d` fields `X` of the split model for which `X` itself is the
/// U0 expression of a global field of `m` (no correction on U0), as an
/// echelon basis.
pub fn uncorrected_fields(m: &DeformedModel, d: i64) -> Vec<SuperDerivation> {
    let spec = &m.spec;
    let n = spec.rank();
    let inverse = m.alpha().inverse();
    let lattice = weight_lattice(&m.log_alpha, n);
    let mut classes: BTreeMap<Vec<i64>, Vec<SuperDerivation>> = BTreeMap::new();
    for (slot, e) in global_basis_slots(spec, d, ParityFilter::Even) {
        let class = lattice.reduce(&term_weight(slot.mono, slot.dir, e, n));
        classes.entry(class).or_default().push(basis_element(&slot, e, spec));
    }
    let mut coords = TermIndex::default();
    let mut basis_vectors: Vec<SparseVec> = Vec::new();
    for members in classes.values() {
        let mut index = TermIndex::default();
        let mut equations: BTreeMap<usize, SparseVec> = BTreeMap::new();
        for (local, g) in members.iter().enumerate() {
            let on_u1 = model_transform(&inverse.conjugate(g), spec);
            let irregular = on_u1.map_coeffs(|_, _, p| p.filter_exps(|e| e < 0));
            for (k, c) in index.vector(&irregular) {
                equations.entry(k).or_default().insert(local, c);
            }
        }
        for v in kernel_basis(equations.into_values(), members.len()) {
            let mut x = SuperDerivation::zero();
            for (&i, c) in &v {
                x += &members[i].scale(c);
            }
            basis_vectors.push(coords.vector(&x));
        }
    }
    // canonical echelon form over the monomial coordinates
    let inv: BTreeMap<usize, TermKey> = coords.index.iter().map(|(k, &i)| (i, *k)).collect();
    let mut sorted: Vec<(TermKey, usize)> = inv.iter().map(|(&i, k)| (*k, i)).collect();
    sorted.sort();
    let rank_of: BTreeMap<usize, usize> = sorted.iter().enumerate().map(|(r, (_, i))| (*i, r)).collect();
    let remapped: Vec<SparseVec> = basis_vectors
        .into_iter()
        .map(|v| v.into_iter().map(|(i, c)| (rank_of[&i], c)).collect())
        .collect();
    echelon_basis(remapped)
        .into_iter()
        .map(|v| {
            let mut x = SuperDerivation::zero();
            for (r, c) in v {
                let (mono, dir, e) = sorted[r].0;
                x.add_term(mono, dir, &LaurentPoly::monomial(e, c));
            }
            x
        })
        .collect()
}

/// Whether `x` is, unchanged, the U0 expression of a global field of `m`.
pub fn is_uncorrected_global(m: &DeformedModel, x: &SuperDerivation) -> bool {
    x.all_polynomial() && model_transform(&m.alpha().inverse().conjugate(x), &m.spec).all_polynomial()
}

/// `{P : P(z) xi^I d(dir) in span(fields)}` as a basis of polynomials.
pub fn slot_coefficients(fields: &[SuperDerivation], slot: &Slot) -> Vec<LaurentPoly> {
    let mut index = TermIndex::default();
    let vectors: Vec<SparseVec> = fields.iter().map(|f| index.vector(f)).collect();
    let in_slot: BTreeMap<usize, i64> = index
        .index
        .iter()
        .filter(|((mono, dir, _), _)| *mono == slot.mono && *dir == slot.dir)
        .map(|((_, _, e), &i)| (i, *e))
        .collect();
    restrict_span(&vectors, |c| in_slot.contains_key(&c))
        .into_iter()
        .map(|v| LaurentPoly::from_terms(v.into_iter().map(|(c, x)| (in_slot[&c], x))))
        .collect()
}

/// Dimension of `{P : P(z) xi^I d(dir) in span(fields)}`.
pub fn slot_dimension(fields: &[SuperDerivation], slot: &Slot) -> usize {
    slot_coefficients(fields, slot).len()
}

/// Lowest degree at which the class of `log alpha` cannot be normalised away.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitness {
    Split,
    #[serde(untagged)]
    NonSplitAt(i64),
}

impl fmt::Display for Splitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Splitness::Split => write!(f, "split"),
            Splitness::NonSplitAt(d) => write!(f, "{d}"),
        }
    }
}

/// Greedy normalisation: strip the coboundary part of the lowest-degree
/// component of `log alpha` by `alpha -> exp(-u0) alpha exp(u1)` and repeat.
pub fn splitness_profile(m: &DeformedModel) -> Splitness {
    let n = m.spec.rank();
    let mut alpha = m.alpha();
    loop {
        let Ok((d, part)) = alpha.log().leading_part() else {
            return Splitness::Split;
        };
        let sp = split_cochain_with(&part, &m.spec, SplitConvention::PreferU0);
        if !sp.obstruction.is_zero() {
            return Splitness::NonSplitAt(d);
        }
        let left = exp_aut(&-&sp.u0).expect("even part of an even log");
        let right = exp_aut(&sp.u1_pullback).expect("even part of an even log");
        alpha = left
            .compose(&alpha.compose(&right, n).expect("unipotent"), n)
            .expect("unipotent");
        debug_assert!(alpha.log().min_degree().is_none_or(|k| k > d));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart_geometry::{global_basis, h1_basis};
    use crate::superalgebra::expr::parse_derivation;

    fn paper() -> DeformedModel {
        DeformedModel::paper_example()
    }

    fn d(text: &str) -> SuperDerivation {
        parse_derivation(text, &BundleSpec::paper_example().names(), "z").unwrap()
    }

    fn slot(text: &str) -> Slot {
        let (mono, dir, _) = d(text).terms().next().map(|(m, d, p)| (m, d, p.clone())).unwrap();
        Slot::new(mono, dir)
    }

    #[test]
    fn rejects_bad_logs() {
        let spec = BundleSpec::paper_example();
        assert!(matches!(
            DeformedModel::new(spec.clone(), d("theta1*d(z)")),
            Err(DeformationError::Algebra(AlgebraError::OddLog))
        ));
        assert!(matches!(
            DeformedModel::new(spec, d("theta1*d(theta2)")),
            Err(DeformationError::Algebra(AlgebraError::LowDegreeLog(0)))
        ));
    }

    #[test]
    fn gluing_examples() {
        let m = paper();
        let split = DeformedModel::split(m.spec.clone());
        let x = d("z^4*theta1*eta3*d(z)");
        assert!(glue_check(&split, &GlobalFieldPair::from_u0(&x, &m.spec)));
        assert!(glue_check(&m, &GlobalFieldPair::from_u0(&x, &m.spec)));
        assert!(!glue_check(
            &m,
            &GlobalFieldPair::from_u0(&d("z^2*theta1*eta1*d(z)"), &m.spec)
        ));
    }

    #[test]
    fn split_model_lifts_verbatim() {
        let spec = BundleSpec::from_pairs(&[("a", 1), ("b", -1), ("c", 2), ("e", 0)]).unwrap();
        let m = DeformedModel::split(spec.clone());
        let lifted: Vec<SuperDerivation> = lift_fields(&m, 4).into_iter().map(|f| f.pair.x0).collect();
        let mut expected = global_basis(&spec, 2, ParityFilter::Even);
        expected.extend(global_basis(&spec, 4, ParityFilter::Even));
        assert_eq!(lifted, expected);
    }

    #[test]
    fn lift_conditions_for_the_corrected_family() {
        let m = paper();
        let lifts = lift_fields(&m, 4);
        for f in &lifts {
            assert!(is_global_pair(&m, &f.pair), "not global: {:?}", f.pair.x0);
        }
        let l2 = liftable_leading(&lifts, 2);
        for i in 1..=3 {
            let p1 = slot_coefficients(&l2, &slot(&format!("theta{i}*eta1*d(z)")));
            assert_eq!(p1, vec![LaurentPoly::z_pow(0), LaurentPoly::z_pow(1)]);
            let p2 = slot_coefficients(&l2, &slot(&format!("theta{i}*eta2*d(z)")));
            assert_eq!(p2, vec![LaurentPoly::z_pow(3), LaurentPoly::z_pow(4)]);
        }
        // the untouched family keeps its full range
        assert_eq!(slot_dimension(&l2, &slot("theta1*eta3*d(z)")), 5);
    }

    #[test]
    fn splitness() {
        assert_eq!(splitness_profile(&paper()), Splitness::NonSplitAt(2));
        let spec = BundleSpec::paper_example();
        assert_eq!(splitness_profile(&DeformedModel::split(spec.clone())), Splitness::Split);
        // a coboundary normalises away
        let cob = d("z*theta1*theta2*eta1*d(eta2) + z^-1*theta1*eta1*d(z)");
        assert_eq!(
            splitness_profile(&DeformedModel::new(spec.clone(), cob).unwrap()),
            Splitness::Split
        );
        let h4 = h1_basis(&spec, 4)
            .into_iter()
            .find(|x| x.is_even())
            .expect("degree-4 H^1");
        assert_eq!(
            splitness_profile(&DeformedModel::new(spec, h4).unwrap()),
            Splitness::NonSplitAt(4)
        );
    }
}
