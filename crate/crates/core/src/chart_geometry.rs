//! Two-chart model of P^1 with odd generators twisted by line bundles O(k).
//!
//! Chart `U0` carries `(z, xi)`, chart `U1` carries `(w, xi')` with
//! `w = 1/z` and `xi = w^k xi'`, so an odd generator behaves like a section
//! of `O(k)` and a coefficient of the monomial derivation `xi^I d(dir)` is
//! a section of `O(m)` with `m` given by [`monomial_bound`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::superalgebra::{term_degree, Direction, LaurentPoly, OddMonomial, SuperDerivation, SuperFunction};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("bundle has no generators")]
    EmptyBundle,
    #[error("duplicate generator name `{0}`")]
    DuplicateName(String),
    #[error("invalid generator name `{0}`")]
    InvalidName(String),
    #[error("too many generators: {0} (at most 32)")]
    TooManyGenerators(usize),
    #[error("direction refers to generator {0}, bundle has {1}")]
    DirectionOutOfRange(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub twist: i64,
}

/// How global sections and cochain splittings treat the base direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GluingModel {
    /// Every monomial slot is glued on its own as a section of `O(m)`; the
    /// Euler term of the chain rule for `d_z` is dropped.
    #[default]
    Graded,
    /// Full chain rule, `d_z -> -w^2 d_w + w E'` with `E' = sum k xi' d_xi'`.
    Geometric,
}

/// `E = O(k_1) + ... + O(k_n)` with named odd generators in a fixed order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub gluing: GluingModel,
}

impl BundleSpec {
    pub fn new(generators: Vec<Generator>) -> Result<Self, GeometryError> {
        if generators.is_empty() {
            return Err(GeometryError::EmptyBundle);
        }
        if generators.len() > crate::superalgebra::odd::MAX_GENERATORS {
            return Err(GeometryError::TooManyGenerators(generators.len()));
        }
        for (i, g) in generators.iter().enumerate() {
            let valid = g.name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && g.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                && !matches!(g.name.as_str(), "z" | "w" | "d");
            if !valid {
                return Err(GeometryError::InvalidName(g.name.clone()));
            }
            if generators[..i].iter().any(|h| h.name == g.name) {
                return Err(GeometryError::DuplicateName(g.name.clone()));
            }
        }
        Ok(Self {
            generators,
            gluing: GluingModel::Graded,
        })
    }

    pub fn with_gluing(mut self, gluing: GluingModel) -> Self {
        self.gluing = gluing;
        self
    }

    /// Convenience constructor from `(name, twist)` pairs.
    pub fn from_pairs(pairs: &[(&str, i64)]) -> Result<Self, GeometryError> {
        Self::new(
            pairs
                .iter()
                .map(|(n, k)| Generator {
                    name: n.to_string(),
                    twist: *k,
                })
                .collect(),
        )
    }

    /// `3 O(4) + 4 O(-2)` with generators `theta1..theta3, eta1..eta4`.
    pub fn paper_example() -> Self {
        Self::from_pairs(&[
            ("theta1", 4),
            ("theta2", 4),
            ("theta3", 4),
            ("eta1", -2),
            ("eta2", -2),
            ("eta3", -2),
            ("eta4", -2),
        ])
        .expect("valid bundle")
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.name.clone()).collect()
    }

    /// Names as they appear on chart `U1`.
    pub fn primed_names(&self) -> Vec<String> {
        self.generators.iter().map(|g| format!("{}'", g.name)).collect()
    }

    pub fn twists(&self) -> Vec<i64> {
        self.generators.iter().map(|g| g.twist).collect()
    }

    pub fn twist(&self, i: usize) -> i64 {
        self.generators[i].twist
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    U0,
    U1,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::U0 => Chart::U1,
            Chart::U1 => Chart::U0,
        }
    }

    pub fn base_var(self) -> &'static str {
        match self {
            Chart::U0 => "z",
            Chart::U1 => "w",
        }
    }
}

/// A derivation written in the coordinates of one chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartExpr {
    pub chart: Chart,
    pub expr: SuperDerivation,
}

impl ChartExpr {
    pub fn on_u0(expr: SuperDerivation) -> Self {
        Self { chart: Chart::U0, expr }
    }

    pub fn on_u1(expr: SuperDerivation) -> Self {
        Self { chart: Chart::U1, expr }
    }
}

/// Change of chart for a function. The substitution rule is symmetric in the
/// two charts: `z^e xi^I -> w^(sum_I k - e) xi'^I`.
pub fn transform_function(f: &SuperFunction, spec: &BundleSpec) -> SuperFunction {
    let twists = spec.twists();
    let mut out = SuperFunction::zero();
    for (m, p) in f.terms() {
        out.add_term(m, &p.invert_exponents(m.weight_sum(&twists)));
    }
    out
}

/// Change of chart for a derivation by the chain rule:
/// `d_z -> -w^2 d_w + w sum_s k_s xi'_s d_xi'_s` and `d_xi_s -> w^(-k_s) d_xi'_s`.
pub fn transform_derivation(d: &SuperDerivation, spec: &BundleSpec) -> SuperDerivation {
    transform_impl(d, spec, true)
}

/// Slot-by-slot change of chart: the chain rule without the Euler term, so
/// `P(z) xi^I d(dir)` maps to a single slot on U1.
pub fn graded_transform_derivation(d: &SuperDerivation, spec: &BundleSpec) -> SuperDerivation {
    transform_impl(d, spec, false)
}

/// The change of chart used for globality under the bundle's gluing model.
pub fn model_transform(d: &SuperDerivation, spec: &BundleSpec) -> SuperDerivation {
    transform_impl(d, spec, spec.gluing == GluingModel::Geometric)
}

/// `E = sum_s k_s xi_s d_xi_s`; invariant under the change of chart.
pub fn euler_field(spec: &BundleSpec) -> SuperDerivation {
    let mut e = SuperDerivation::zero();
    for (s, g) in spec.generators.iter().enumerate() {
        e.add_term(
            OddMonomial::generator(s),
            Direction::Odd(s),
            &LaurentPoly::constant(crate::superalgebra::rat(g.twist)),
        );
    }
    e
}

fn transform_impl(d: &SuperDerivation, spec: &BundleSpec, euler: bool) -> SuperDerivation {
    let mut out = SuperDerivation::zero();
    for (dir, coeff) in d.components() {
        let t = transform_function(coeff, spec);
        match dir {
            Direction::Base => {
                out.add_along(
                    &t.mul_poly(&LaurentPoly::monomial(2, crate::superalgebra::rat(-1))),
                    Direction::Base,
                );
                for (s, g) in spec.generators.iter().enumerate() {
                    if !euler || g.twist == 0 {
                        continue;
                    }
                    let xi = SuperFunction::term(
                        OddMonomial::generator(s),
                        LaurentPoly::monomial(1, crate::superalgebra::rat(g.twist)),
                    );
                    out.add_along(&(&t * &xi), Direction::Odd(s));
                }
            }
            Direction::Odd(s) => {
                out.add_along(&t.mul_poly(&LaurentPoly::z_pow(-spec.twist(s))), Direction::Odd(s));
            }
        }
    }
    out
}

pub fn transform(e: &ChartExpr, spec: &BundleSpec) -> ChartExpr {
    ChartExpr {
        chart: e.chart.other(),
        expr: transform_derivation(&e.expr, spec),
    }
}

/// A U0 expression is global iff it is regular on U0 and its transform
/// (under the bundle's gluing model) is regular on U1.
pub fn is_global(d: &SuperDerivation, spec: &BundleSpec) -> bool {
    d.all_polynomial() && model_transform(d, spec).all_polynomial()
}

/// Shape of a monomial derivation `xi^I d(dir)` without its coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub mono: OddMonomial,
    pub dir: Direction,
}

impl Slot {
    pub fn new(mono: OddMonomial, dir: Direction) -> Self {
        Self { mono, dir }
    }

    pub fn degree(&self) -> i64 {
        term_degree(self.mono, self.dir)
    }

    pub fn is_even(&self) -> bool {
        self.degree().rem_euclid(2) == 0
    }

    /// `coeff * xi^I d(dir)`.
    pub fn with_coeff(&self, coeff: LaurentPoly) -> SuperDerivation {
        SuperDerivation::term(self.mono, coeff, self.dir)
    }

    pub fn z_power(&self, exp: i64) -> SuperDerivation {
        self.with_coeff(LaurentPoly::z_pow(exp))
    }
}

/// Twist `m` of the coefficient of `xi^I d(dir)`: `2 + sum_I k` along the
/// base, `sum_I k - k_j` along `xi_j`. `P(z) xi^I d(dir)` is global iff `P`
/// is a polynomial of degree at most `m`.
pub fn monomial_bound(mono: OddMonomial, dir: Direction, spec: &BundleSpec) -> Result<i64, GeometryError> {
    let twists = spec.twists();
    if mono.indices().any(|i| i >= spec.rank()) {
        return Err(GeometryError::DirectionOutOfRange(
            mono.indices().max().unwrap_or(0),
            spec.rank(),
        ));
    }
    let s = mono.weight_sum(&twists);
    match dir {
        Direction::Base => Ok(2 + s),
        Direction::Odd(j) if j < spec.rank() => Ok(s - twists[j]),
        Direction::Odd(j) => Err(GeometryError::DirectionOutOfRange(j, spec.rank())),
    }
}

pub fn slot_bound(slot: &Slot, spec: &BundleSpec) -> i64 {
    monomial_bound(slot.mono, slot.dir, spec).expect("slot within bundle")
}

/// All monomial derivation shapes of Z-degree `degree` in `n` generators,
/// ordered by (monomial mask, direction).
pub fn slots_of_degree(n: usize, degree: i64) -> Vec<Slot> {
    let mut out = Vec::new();
    if degree >= 0 {
        for m in OddMonomial::all_of_degree(n, degree as usize) {
            out.push(Slot::new(m, Direction::Base));
        }
    }
    if degree + 1 >= 0 {
        for m in OddMonomial::all_of_degree(n, (degree + 1) as usize) {
            for j in 0..n {
                out.push(Slot::new(m, Direction::Odd(j)));
            }
        }
    }
    out.sort();
    out
}

/// Every admissible Z-degree of a derivation in `n` generators.
pub fn degree_range(n: usize) -> std::ops::RangeInclusive<i64> {
    -1..=n as i64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityFilter {
    Even,
    All,
}

/// Whether `xi^I E` is non-zero, i.e. the chain rule for `xi^I d_z` picks
/// up an Euler term.
fn has_euler_term(mono: OddMonomial, spec: &BundleSpec) -> bool {
    spec.generators
        .iter()
        .enumerate()
        .any(|(s, g)| g.twist != 0 && !mono.contains(s))
}

/// Basis of the global sections of `Der_degree` as U0 expressions, one per
/// `(slot, exponent)` of [`global_basis_slots`], in (mask, direction,
/// exponent) order.
pub fn global_basis(spec: &BundleSpec, degree: i64, parity: ParityFilter) -> Vec<SuperDerivation> {
    global_basis_slots(spec, degree, parity)
        .into_iter()
        .map(|(slot, e)| basis_element(&slot, e, spec))
        .collect()
}

/// The global field with leading monomial `z^e xi^I d(dir)`. Under the graded
/// model this is the monomial itself. Under the geometric model the top
/// exponent of a base slot needs the correction `- z^(e-1) xi^I E`.
pub fn basis_element(slot: &Slot, e: i64, spec: &BundleSpec) -> SuperDerivation {
    let x = slot.z_power(e);
    let m = slot_bound(slot, spec);
    if spec.gluing == GluingModel::Geometric && slot.dir == Direction::Base && e == m && has_euler_term(slot.mono, spec)
    {
        let f = SuperFunction::term(slot.mono, LaurentPoly::monomial(e - 1, crate::superalgebra::rat(-1)));
        return &x + &euler_field(spec).left_mul(&f);
    }
    x
}

/// Leading `(slot, exponent)` pairs of [`global_basis`]: `0 <= e <= m` per
/// slot, except that under the geometric model a base slot with `m = 0` and a
/// non-zero Euler term has no global section.
pub fn global_basis_slots(spec: &BundleSpec, degree: i64, parity: ParityFilter) -> Vec<(Slot, i64)> {
    if parity == ParityFilter::Even && degree.rem_euclid(2) != 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for slot in slots_of_degree(spec.rank(), degree) {
        let m = slot_bound(&slot, spec);
        if m == 0
            && spec.gluing == GluingModel::Geometric
            && slot.dir == Direction::Base
            && has_euler_term(slot.mono, spec)
        {
            continue;
        }
        for e in 0..=m {
            out.push((slot, e));
        }
    }
    out
}

/// Where a given exponent of a cochain coefficient goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitConvention {
    /// Exponents regular on both charts are assigned to U0.
    PreferU0,
    /// Exponents regular on both charts are assigned to U1.
    PreferU1,
}

/// `c = u0 - pullback(u1) + obstruction`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitCochain {
    pub u0: SuperDerivation,
    /// The U1 part written in U0 coordinates.
    pub u1_pullback: SuperDerivation,
    pub u1: ChartExpr,
    pub obstruction: SuperDerivation,
}

pub fn split_cochain(c: &SuperDerivation, spec: &BundleSpec) -> SplitCochain {
    split_cochain_with(c, spec, SplitConvention::PreferU0)
}

/// Per slot of twist `m`: exponents `e >= 0` are regular on U0, exponents
/// `e <= m` are regular on U1 and the window `m < e < 0` is the H^1 part.
/// Under the geometric model a base term sent to U1 leaves the Euler
/// remainder `z^(e-1) xi^I E`, which is split in the odd slots afterwards.
pub fn split_cochain_with(c: &SuperDerivation, spec: &BundleSpec, convention: SplitConvention) -> SplitCochain {
    let geometric = spec.gluing == GluingModel::Geometric;
    let euler = euler_field(spec);
    let mut u0 = SuperDerivation::zero();
    let mut u1_pullback = SuperDerivation::zero();
    let mut obstruction = SuperDerivation::zero();
    let mut odd_part = SuperDerivation::zero();
    for (mono, dir, p) in c.terms() {
        if dir != Direction::Base {
            odd_part.add_term(mono, dir, p);
            continue;
        }
        let m = monomial_bound(mono, dir, spec).expect("cochain within bundle");
        for (e, coeff) in p.terms() {
            let term = LaurentPoly::monomial(e, coeff.clone());
            match target(e, m, convention) {
                Target::U0 => u0.add_term(mono, dir, &term),
                Target::U1 => {
                    u1_pullback.add_term(mono, dir, &-&term);
                    if geometric {
                        let rest = euler.left_mul(&SuperFunction::term(mono, term.shift(-1)));
                        u1_pullback += &rest;
                        odd_part += &rest;
                    }
                }
                Target::Obstruction => obstruction.add_term(mono, dir, &term),
            }
        }
    }
    for (mono, dir, p) in odd_part.terms() {
        let m = monomial_bound(mono, dir, spec).expect("cochain within bundle");
        for (e, coeff) in p.terms() {
            let term = LaurentPoly::monomial(e, coeff.clone());
            match target(e, m, convention) {
                Target::U0 => u0.add_term(mono, dir, &term),
                Target::U1 => u1_pullback.add_term(mono, dir, &-&term),
                Target::Obstruction => obstruction.add_term(mono, dir, &term),
            }
        }
    }
    let u1 = ChartExpr::on_u1(model_transform(&u1_pullback, spec));
    SplitCochain {
        u0,
        u1_pullback,
        u1,
        obstruction,
    }
}

enum Target {
    U0,
    U1,
    Obstruction,
}

fn target(e: i64, m: i64, convention: SplitConvention) -> Target {
    match (e >= 0, e <= m, convention) {
        (true, true, SplitConvention::PreferU1) => Target::U1,
        (true, _, _) => Target::U0,
        (false, true, _) => Target::U1,
        (false, false, _) => Target::Obstruction,
    }
}

/// Representatives `z^-1 .. z^(m+1)` of `H^1` per slot of twist `m <= -2`.
/// They form a basis under the graded model; under the geometric model they
/// still span `H^1` but the base-slot Euler terms can make them dependent.
pub fn h1_basis(spec: &BundleSpec, degree: i64) -> Vec<SuperDerivation> {
    let mut out = Vec::new();
    for slot in slots_of_degree(spec.rank(), degree) {
        let m = slot_bound(&slot, spec);
        let mut e = -1;
        while e > m {
            out.push(slot.z_power(e));
            e -= 1;
        }
    }
    out
}

/// A row of the global-field table: one index family of slots sharing a
/// coefficient bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub label: String,
    pub degree: i64,
    pub bound: i64,
    pub instances: usize,
    pub dimension: usize,
}

/// Generators grouped by twist, in order of first appearance.
fn twist_classes(spec: &BundleSpec) -> Vec<(i64, Vec<usize>)> {
    let mut classes: Vec<(i64, Vec<usize>)> = Vec::new();
    for (i, g) in spec.generators.iter().enumerate() {
        match classes.iter_mut().find(|(k, _)| *k == g.twist) {
            Some((_, members)) => members.push(i),
            None => classes.push((g.twist, vec![i])),
        }
    }
    classes
}

fn class_stem(spec: &BundleSpec, members: &[usize]) -> Option<String> {
    let stems: Vec<&str> = members
        .iter()
        .map(|&i| spec.generators[i].name.trim_end_matches(|c: char| c.is_ascii_digit()))
        .collect();
    (!stems[0].is_empty() && stems.iter().all(|s| *s == stems[0])).then(|| stems[0].to_string())
}

/// Global-field table at one degree, families as rows, skipping families
/// without global sections.
pub fn family_table(spec: &BundleSpec, degree: i64, parity: ParityFilter) -> Vec<FamilyRow> {
    families(spec, degree, parity).into_iter().map(|(row, _)| row).collect()
}

/// Rows of [`family_table`] together with the slots of each family.
pub fn families(spec: &BundleSpec, degree: i64, parity: ParityFilter) -> Vec<(FamilyRow, Vec<Slot>)> {
    if parity == ParityFilter::Even && degree.rem_euclid(2) != 0 {
        return Vec::new();
    }
    let classes = twist_classes(spec);
    let class_of: BTreeMap<usize, usize> = classes
        .iter()
        .enumerate()
        .flat_map(|(c, (_, ms))| ms.iter().map(move |&i| (i, c)))
        .collect();
    // key: (count per class, direction class: None = base)
    let mut groups: BTreeMap<(Vec<usize>, Option<usize>), Vec<Slot>> = BTreeMap::new();
    for slot in slots_of_degree(spec.rank(), degree) {
        let mut counts = vec![0usize; classes.len()];
        for i in slot.mono.indices() {
            counts[class_of[&i]] += 1;
        }
        let dir_class = match slot.dir {
            Direction::Base => None,
            Direction::Odd(j) => Some(class_of[&j]),
        };
        groups.entry((counts, dir_class)).or_default().push(slot);
    }
    let letters = ["i", "j", "k", "l", "m", "n", "p", "q", "r", "s", "t", "u", "v"];
    let mut rows = Vec::new();
    for ((counts, dir_class), slots) in groups {
        let bound = slot_bound(&slots[0], spec);
        if bound < 0 {
            continue;
        }
        let mut letter = 0usize;
        let mut next_letter = || {
            let l = letters.get(letter).copied().unwrap_or("x");
            letter += 1;
            l
        };
        let mut factors = Vec::new();
        for (c, (_, members)) in classes.iter().enumerate() {
            let stem = class_stem(spec, members);
            if counts[c] == members.len() {
                for &i in members {
                    factors.push(spec.generators[i].name.clone());
                }
            } else {
                for _ in 0..counts[c] {
                    let l = next_letter();
                    factors.push(match &stem {
                        Some(s) => format!("{s}_{l}"),
                        None => format!("xi[k={}]_{l}", classes[c].0),
                    });
                }
            }
        }
        let dir = match dir_class {
            None => "d(z)".to_string(),
            Some(c) => {
                let l = next_letter();
                match class_stem(spec, &classes[c].1) {
                    Some(s) => format!("d({s}_{l})"),
                    None => format!("d(xi[k={}]_{l})", classes[c].0),
                }
            }
        };
        factors.push(dir);
        let instances = slots.len();
        let row = FamilyRow {
            label: factors.join("*"),
            degree,
            bound,
            instances,
            dimension: instances * (bound as usize + 1),
        };
        rows.push((row, slots));
    }
    rows
}
