//! Common kernels of `[X, .]` on chart U0 over a family of fields `X`, and
//! the nildominance degrees built from them.
//!
//! An unknown `Z = sum_s u_s(z) xi^(I_s) d(dir_s)` has one coefficient
//! function per slot. For a field `X`,
//! `[X, u D] = u [X, D] + u' X(z) D`, so every output monomial of `[X, Z]`
//! gives one Q[z]-linear relation among the symbols `u_s` and `u_s'`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart_geometry::{slots_of_degree, BundleSpec, ParityFilter, Slot};
use crate::deformation::{lift_fields, term_weight, DeformedModel};
use crate::linalg::{kernel_basis, Echelon, Lattice, SparseVec};
use crate::superalgebra::{Direction, LaurentPoly, OddMonomial, Rational, SuperDerivation, SuperFunction};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("invalid space `{0}`: expected `q=<int>`, `filtration>=<int>` or `all`")]
    InvalidSpace(String),
}

/// Which derivations the unknown ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    /// The graded piece of one Z-degree.
    Graded(i64),
    /// All Z-degrees `>= p`.
    Filtration(i64),
    /// Every Z-degree.
    Full,
}

impl Space {
    pub fn degrees(self, n: usize) -> Vec<i64> {
        let top = n as i64;
        match self {
            Space::Graded(q) => (-1..=top).filter(|d| *d == q).collect(),
            Space::Filtration(p) => (p.max(-1)..=top).collect(),
            Space::Full => (-1..=top).collect(),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Graded(q) => write!(f, "q={q}"),
            Space::Filtration(p) => write!(f, "filtration>={p}"),
            Space::Full => write!(f, "all"),
        }
    }
}

impl FromStr for Space {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || KernelError::InvalidSpace(s.to_string());
        if t == "all" {
            Ok(Space::Full)
        } else if let Some(q) = t.strip_prefix("q=") {
            q.parse().map(Space::Graded).map_err(|_| bad())
        } else if let Some(p) = t.strip_prefix("filtration>=") {
            p.parse().map(Space::Filtration).map_err(|_| bad())
        } else {
            Err(bad())
        }
    }
}

/// The slots of the unknown, ordered by (degree, monomial, direction).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownTemplate {
    pub rank: usize,
    pub space: Space,
    pub parity: ParityFilter,
    pub slots: Vec<Slot>,
}

impl UnknownTemplate {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn index_of(&self, slot: &Slot) -> Option<usize> {
        self.slots.iter().position(|s| s == slot)
    }
}

pub fn build_template(spec: &BundleSpec, space: Space, parity: ParityFilter) -> UnknownTemplate {
    let n = spec.rank();
    let mut slots = Vec::new();
    for q in space.degrees(n) {
        if parity == ParityFilter::Even && q.rem_euclid(2) != 0 {
            continue;
        }
        slots.extend(slots_of_degree(n, q));
    }
    UnknownTemplate {
        rank: n,
        space,
        parity,
        slots,
    }
}

/// `u_s` or `u_s'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    pub slot: usize,
    pub derivative: bool,
}

/// `sum coeff * symbol = 0`, the coefficient of `output` in `[fields[field], Z]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub field: usize,
    pub output: Slot,
    pub terms: Vec<(Symbol, LaurentPoly)>,
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub template: UnknownTemplate,
    pub fields: Vec<SuperDerivation>,
    pub equations: Vec<Equation>,
    /// Slot indices grouped so that no equation couples two groups.
    pub blocks: Vec<Vec<usize>>,
}

fn odd_weight(mono: OddMonomial, dir: Direction, n: usize) -> Vec<i64> {
    term_weight(mono, dir, 0, n)[1..].to_vec()
}

/// Cheap necessary condition for `[X, D] != 0` or `X(z) D != 0`.
struct FieldShape {
    odd_dirs: u32,
    monos: u32,
    nonconstant: bool,
    xz: SuperFunction,
}

impl FieldShape {
    fn new(x: &SuperDerivation) -> Self {
        let mut odd_dirs = 0u32;
        let mut monos = 0u32;
        let mut nonconstant = false;
        for (mono, dir, p) in x.terms() {
            if let Direction::Odd(a) = dir {
                odd_dirs |= 1 << a;
            }
            monos |= mono.mask();
            nonconstant |= !(p.is_constant() && p.min_exp() == Some(0));
        }
        Self {
            odd_dirs,
            monos,
            nonconstant,
            xz: x
                .component(Direction::Base)
                .cloned()
                .unwrap_or_else(SuperFunction::zero),
        }
    }

    fn may_touch(&self, slot: &Slot) -> bool {
        if !self.xz.is_zero() || self.odd_dirs & slot.mono.mask() != 0 {
            return true;
        }
        match slot.dir {
            Direction::Odd(b) => self.monos & (1 << b) != 0,
            Direction::Base => self.nonconstant,
        }
    }
}

/// One relation per field and output monomial of `[X, Z]`.
pub fn derive_constraints(fields: &[SuperDerivation], t: &UnknownTemplate) -> ConstraintSystem {
    let n = t.rank;
    let mut equations = Vec::new();
    for (fi, x) in fields.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let shape = FieldShape::new(x);
        let mut outputs: BTreeMap<Slot, Vec<(Symbol, LaurentPoly)>> = BTreeMap::new();
        for (si, slot) in t.slots.iter().enumerate() {
            if !shape.may_touch(slot) {
                continue;
            }
            let d = slot.z_power(0);
            let a = x.bracket(&d);
            for (mono, dir, p) in a.terms() {
                outputs.entry(Slot::new(mono, dir)).or_default().push((
                    Symbol {
                        slot: si,
                        derivative: false,
                    },
                    p.clone(),
                ));
            }
            if !shape.xz.is_zero() {
                let b = d.left_mul(&shape.xz);
                for (mono, dir, p) in b.terms() {
                    outputs.entry(Slot::new(mono, dir)).or_default().push((
                        Symbol {
                            slot: si,
                            derivative: true,
                        },
                        p.clone(),
                    ));
                }
            }
        }
        for (output, mut terms) in outputs {
            terms.sort_by_key(|(s, _)| *s);
            equations.push(Equation {
                field: fi,
                output,
                terms,
            });
        }
    }

    // blocks: slot weights modulo differences of term weights inside a field
    let mut gens = Vec::new();
    for x in fields {
        let ws: Vec<Vec<i64>> = x.terms().map(|(m, d, _)| odd_weight(m, d, n)).collect();
        for w in ws.iter().skip(1) {
            gens.push(w.iter().zip(&ws[0]).map(|(a, b)| a - b).collect());
        }
    }
    let lattice = Lattice::new(n, gens);
    let mut by_class: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (si, slot) in t.slots.iter().enumerate() {
        by_class
            .entry(lattice.reduce(&odd_weight(slot.mono, slot.dir, n)))
            .or_default()
            .push(si);
    }
    ConstraintSystem {
        template: t.clone(),
        fields: fields.to_vec(),
        equations,
        blocks: by_class.into_values().collect(),
    }
}

/// How an unknown was settled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// A relation `p(z) u = 0` among the original equations.
    Single,
    /// A relation `p(z) u' = 0`: the unknown is constant.
    SingleDerivative,
    /// A single-symbol row after elimination over Q(z).
    Elimination,
    /// Linear algebra over Q on constant unknowns.
    Constants,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub rule: Rule,
    /// Indices into `ConstraintSystem::equations`.
    pub equations: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotStatus {
    /// Untouched by every field: any coefficient function works.
    Free,
    /// Forced to vanish.
    Zero,
    /// Forced constant, with a nonzero constant still allowed.
    Pinned,
    /// Tied algebraically to other unknowns.
    Dependent,
    /// Left in a differential relation the rules do not settle.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelDescription {
    pub slots: Vec<Slot>,
    pub statuses: Vec<SlotStatus>,
    /// Why a slot is zero.
    pub zero_witness: BTreeMap<usize, Witness>,
    /// Why a slot is constant (kept for zero slots that were first found constant).
    pub constant_witness: BTreeMap<usize, Witness>,
    /// Dimension over Q of the constants left for pinned unknowns.
    pub pinned_dimension: usize,
    /// Statuses were settled by the truncation oracle for inconclusive slots.
    pub oracle_resolved: bool,
}

impl KernelDescription {
    pub fn free_slots(&self) -> Vec<Slot> {
        self.with_status(SlotStatus::Free)
    }

    pub fn with_status(&self, status: SlotStatus) -> Vec<Slot> {
        self.slots
            .iter()
            .zip(&self.statuses)
            .filter(|(_, s)| **s == status)
            .map(|(slot, _)| *slot)
            .collect()
    }

    pub fn nonzero_slots(&self) -> Vec<Slot> {
        self.slots
            .iter()
            .zip(&self.statuses)
            .filter(|(_, s)| **s != SlotStatus::Zero)
            .map(|(slot, _)| *slot)
            .collect()
    }

    pub fn index_of_slot(&self, slot: &Slot) -> Option<usize> {
        self.slots.iter().position(|s| s == slot)
    }

    pub fn is_inconclusive(&self) -> bool {
        self.statuses.contains(&SlotStatus::Inconclusive)
    }

    /// Minimal Z-degree of a slot that may carry a nonzero coefficient.
    pub fn min_degree(&self) -> Option<i64> {
        self.nonzero_slots().iter().map(|s| s.degree()).min()
    }

    /// Whether the kernel is exactly the span of its free slots.
    pub fn is_free_module(&self) -> bool {
        self.statuses
            .iter()
            .all(|s| matches!(s, SlotStatus::Free | SlotStatus::Zero))
    }
}

// ---------------------------------------------------------------------------
// Elimination over Q(z)

#[derive(Clone, Debug)]
struct Row {
    entries: BTreeMap<usize, LaurentPoly>,
    sources: BTreeSet<usize>,
}

impl Row {
    fn normalize(mut self) -> Row {
        self.entries.retain(|_, p| !p.is_zero());
        let Some(min) = self.entries.values().filter_map(|p| p.min_exp()).min() else {
            return self;
        };
        for p in self.entries.values_mut() {
            *p = p.shift(-min);
        }
        let mut g = LaurentPoly::zero();
        for p in self.entries.values() {
            g = if g.is_zero() { p.monic() } else { g.gcd(p) };
            if g.max_exp() == Some(0) {
                break;
            }
        }
        if g.max_exp().is_some_and(|d| d > 0) {
            for p in self.entries.values_mut() {
                *p = p.div_rem(&g).0;
            }
        }
        let lead = self
            .entries
            .values()
            .next()
            .and_then(|p| p.leading_coeff().cloned())
            .expect("non-empty row");
        let inv = Rational::from_integer(1.into()) / lead;
        for p in self.entries.values_mut() {
            *p = p.scale(&inv);
        }
        self
    }

    /// `a * self - b * pivot` with `a = pivot[col]`, `b = self[col]`.
    fn eliminate(&self, pivot: &Row, col: usize) -> Row {
        let a = &pivot.entries[&col];
        let b = &self.entries[&col];
        let mut entries: BTreeMap<usize, LaurentPoly> = self.entries.iter().map(|(&k, p)| (k, a * p)).collect();
        for (&k, p) in &pivot.entries {
            let e = entries.entry(k).or_insert_with(LaurentPoly::zero);
            *e -= &(b * p);
        }
        entries.remove(&col);
        Row {
            entries,
            sources: self.sources.union(&pivot.sources).copied().collect(),
        }
        .normalize()
    }
}

/// Reduced row echelon form over Q(z) by fraction-free elimination.
fn rref(rows: Vec<Row>) -> Vec<Row> {
    let mut pivots: BTreeMap<usize, Row> = BTreeMap::new();
    for r in rows {
        let mut r = r.normalize();
        while let Some(col) = r.entries.keys().copied().find(|c| pivots.contains_key(c)) {
            r = r.eliminate(&pivots[&col], col);
        }
        if let Some(&p) = r.entries.keys().next() {
            pivots.insert(p, r);
        }
    }
    let cols: Vec<usize> = pivots.keys().rev().copied().collect();
    for p in cols {
        let prow = pivots[&p].clone();
        for (&q, row) in pivots.iter_mut() {
            if q != p && row.entries.contains_key(&p) {
                *row = row.eliminate(&prow, p);
            }
        }
    }
    pivots.into_values().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Open,
    Constant,
    Zero,
}

struct Solver<'a> {
    sys: &'a ConstraintSystem,
    states: Vec<State>,
    zero_witness: BTreeMap<usize, Witness>,
    constant_witness: BTreeMap<usize, Witness>,
    pinned_dimension: usize,
    /// Derivatives of relations free of `u'`.
    prolonged: Vec<Row>,
}

impl<'a> Solver<'a> {
    fn ns(&self) -> usize {
        self.sys.template.len()
    }

    /// Derivative symbols first, so elimination removes them before values.
    fn col(&self, s: Symbol) -> usize {
        if s.derivative {
            s.slot
        } else {
            self.ns() + s.slot
        }
    }

    fn symbol(&self, col: usize) -> Symbol {
        if col < self.ns() {
            Symbol {
                slot: col,
                derivative: true,
            }
        } else {
            Symbol {
                slot: col - self.ns(),
                derivative: false,
            }
        }
    }

    fn keeps(&self, col: usize) -> bool {
        let s = self.symbol(col);
        match self.states[s.slot] {
            State::Zero => false,
            State::Constant => !s.derivative,
            State::Open => true,
        }
    }

    fn row(&self, ei: usize) -> Row {
        let mut entries = BTreeMap::new();
        for (s, p) in &self.sys.equations[ei].terms {
            let col = self.col(*s);
            if self.keeps(col) {
                let e = entries.entry(col).or_insert_with(LaurentPoly::zero);
                *e += p;
            }
        }
        entries.retain(|_, p: &mut LaurentPoly| !p.is_zero());
        Row {
            entries,
            sources: BTreeSet::from([ei]),
        }
    }

    fn substitute(&self, r: &Row) -> Row {
        Row {
            entries: r
                .entries
                .iter()
                .filter(|(c, _)| self.keeps(**c))
                .map(|(c, p)| (*c, p.clone()))
                .collect(),
            sources: r.sources.clone(),
        }
    }

    /// `d/dz` of a relation among values only.
    fn derivative_row(&self, r: &Row) -> Option<Row> {
        if r.entries.keys().any(|&c| c < self.ns()) {
            return None;
        }
        let mut entries: BTreeMap<usize, LaurentPoly> = BTreeMap::new();
        for (&c, p) in &r.entries {
            let slot = self.symbol(c).slot;
            *entries.entry(c).or_insert_with(LaurentPoly::zero) += &p.derivative();
            if self.states[slot] == State::Open {
                *entries.entry(slot).or_insert_with(LaurentPoly::zero) += p;
            }
        }
        entries.retain(|_, p| !p.is_zero());
        (!entries.is_empty()).then(|| Row {
            entries,
            sources: r.sources.clone(),
        })
    }

    /// Adds derivatives of `u'`-free rows that are new modulo `reduced`.
    fn prolong(&mut self, reduced: &[Row]) -> bool {
        let mut pivots: BTreeMap<usize, Row> = reduced
            .iter()
            .map(|r| (*r.entries.keys().next().unwrap(), r.clone()))
            .collect();
        let mut progress = false;
        for r in reduced {
            let Some(mut d) = self.derivative_row(r) else {
                continue;
            };
            d = d.normalize();
            while let Some(col) = d.entries.keys().copied().find(|c| pivots.contains_key(c)) {
                d = d.eliminate(&pivots[&col], col);
            }
            if let Some(&p) = d.entries.keys().next() {
                pivots.insert(p, d.clone());
                self.prolonged.push(d);
                progress = true;
            }
        }
        progress
    }

    fn conclude(&mut self, col: usize, sources: &BTreeSet<usize>, rule: Rule) -> bool {
        let s = self.symbol(col);
        let witness = Witness {
            rule: if s.derivative && rule == Rule::Single {
                Rule::SingleDerivative
            } else {
                rule
            },
            equations: sources.iter().copied().collect(),
        };
        if s.derivative {
            if self.states[s.slot] == State::Open {
                self.states[s.slot] = State::Constant;
                self.constant_witness.insert(s.slot, witness);
                return true;
            }
        } else if self.states[s.slot] != State::Zero {
            self.states[s.slot] = State::Zero;
            self.zero_witness.insert(s.slot, witness);
            return true;
        }
        false
    }

    fn single_symbol_pass(&mut self, rows: &[Row], rule: Rule) -> bool {
        let mut progress = false;
        for r in rows {
            if r.entries.len() == 1 {
                let col = *r.entries.keys().next().unwrap();
                progress |= self.conclude(col, &r.sources, rule);
            }
        }
        progress
    }

    /// Relations among constant unknowns only, split by powers of z.
    fn constants_pass(&mut self, rows: &[Row]) -> bool {
        let const_rows: Vec<&Row> = rows
            .iter()
            .filter(|r| {
                !r.entries.is_empty()
                    && r.entries.keys().all(|&c| {
                        let s = self.symbol(c);
                        !s.derivative && self.states[s.slot] == State::Constant
                    })
            })
            .collect();
        let constants: Vec<usize> = (0..self.ns()).filter(|&s| self.states[s] == State::Constant).collect();
        let local: BTreeMap<usize, usize> = constants.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut eqs: BTreeMap<(usize, i64), SparseVec> = BTreeMap::new();
        let mut sources = BTreeSet::new();
        for (ri, r) in const_rows.iter().enumerate() {
            sources.extend(r.sources.iter().copied());
            for (&c, p) in &r.entries {
                let s = self.symbol(c).slot;
                for (e, x) in p.terms() {
                    eqs.entry((ri, e)).or_default().insert(local[&s], x.clone());
                }
            }
        }
        let kernel = kernel_basis(eqs.into_values(), constants.len());
        let mut progress = false;
        for (i, &s) in constants.iter().enumerate() {
            if kernel.iter().all(|v| !v.contains_key(&i)) {
                progress |= self.conclude(self.ns() + s, &sources, Rule::Constants);
            }
        }
        self.pinned_dimension = kernel.len();
        progress
    }

    /// Rows with a derivative symbol that do not follow from the `u'`-free
    /// rows and their derivatives.
    fn differential_rows(&self, reduced: &[Row]) -> Vec<Row> {
        let algebraic: Vec<Row> = reduced
            .iter()
            .filter(|r| r.entries.keys().all(|&c| c >= self.ns()))
            .cloned()
            .collect();
        let derived: Vec<Row> = algebraic.iter().filter_map(|r| self.derivative_row(r)).collect();
        let pivots: BTreeMap<usize, Row> = rref(algebraic.into_iter().chain(derived).collect())
            .into_iter()
            .map(|r| (*r.entries.keys().next().unwrap(), r))
            .collect();
        reduced
            .iter()
            .filter(|r| r.entries.keys().any(|&c| c < self.ns()))
            .filter(|r| {
                let mut d = (*r).clone();
                while let Some(col) = d.entries.keys().copied().find(|c| pivots.contains_key(c)) {
                    d = d.eliminate(&pivots[&col], col);
                }
                !d.entries.is_empty()
            })
            .cloned()
            .collect()
    }

    fn current_rows(&self) -> Vec<Row> {
        (0..self.sys.equations.len())
            .map(|ei| self.row(ei))
            .chain(self.prolonged.iter().map(|r| self.substitute(r)))
            .filter(|r| !r.entries.is_empty())
            .collect()
    }

    fn block_rows(&self) -> Vec<Vec<Row>> {
        let mut block_of = vec![0usize; self.ns()];
        for (b, slots) in self.sys.blocks.iter().enumerate() {
            for &s in slots {
                block_of[s] = b;
            }
        }
        let mut out: Vec<Vec<Row>> = vec![Vec::new(); self.sys.blocks.len()];
        for r in self.current_rows() {
            let b = block_of[self.symbol(*r.entries.keys().next().unwrap()).slot];
            out[b].push(r);
        }
        out
    }

    fn run(&mut self) -> Vec<Row> {
        loop {
            let rows = self.current_rows();
            if self.single_symbol_pass(&rows, Rule::Single) {
                continue;
            }
            if self.constants_pass(&rows) {
                continue;
            }
            let reduced: Vec<Row> = self.block_rows().into_iter().flat_map(rref).collect();
            if self.single_symbol_pass(&reduced, Rule::Elimination) {
                continue;
            }
            if self.constants_pass(&reduced) {
                continue;
            }
            if self.prolong(&reduced) {
                continue;
            }
            return reduced;
        }
    }
}

/// Fixpoint of: single-symbol relations kill an unknown or its derivative,
/// elimination over Q(z) with `u` and `u'` independent, Q-linear algebra
/// on constant unknowns, and differentiation of relations free of `u'`.
pub fn solve_constraints(sys: &ConstraintSystem) -> KernelDescription {
    let mut solver = Solver {
        sys,
        states: vec![State::Open; sys.template.len()],
        zero_witness: BTreeMap::new(),
        constant_witness: BTreeMap::new(),
        pinned_dimension: 0,
        prolonged: Vec::new(),
    };
    let remaining = solver.run();
    let mut touched = vec![false; sys.template.len()];
    for eq in &sys.equations {
        for (s, _) in &eq.terms {
            touched[s.slot] = true;
        }
    }
    let mut differential = vec![false; sys.template.len()];
    for r in solver.differential_rows(&remaining) {
        for &c in r.entries.keys() {
            differential[solver.symbol(c).slot] = true;
        }
    }
    let statuses = (0..sys.template.len())
        .map(|s| match solver.states[s] {
            State::Zero => SlotStatus::Zero,
            State::Constant => SlotStatus::Pinned,
            State::Open if !touched[s] => SlotStatus::Free,
            State::Open if differential[s] => SlotStatus::Inconclusive,
            State::Open => SlotStatus::Dependent,
        })
        .collect();
    KernelDescription {
        slots: sys.template.slots.clone(),
        statuses,
        zero_witness: solver.zero_witness,
        constant_witness: solver.constant_witness,
        pinned_dimension: solver.pinned_dimension,
        oracle_resolved: false,
    }
}

/// Every free slot re-substituted: `[X, u D] = 0` for all fields and an
/// arbitrary coefficient `u`.
pub fn verify_free_slots(fields: &[SuperDerivation], slots: &[Slot]) -> bool {
    slots.iter().all(|slot| {
        let d = slot.z_power(0);
        fields
            .iter()
            .all(|x| x.bracket(&d).is_zero() && x.component(Direction::Base).is_none_or(|xz| d.left_mul(xz).is_zero()))
    })
}

// ---------------------------------------------------------------------------
// Truncation oracle

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleStatus {
    Free,
    Zero,
    Partial,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedKernel {
    pub degree_bound: i64,
    pub slots: Vec<Slot>,
    pub statuses: Vec<OracleStatus>,
    /// Dimension of the kernel restricted to coefficients of degree <= bound.
    pub dimension: usize,
    /// Basis of the part of the kernel supported on constrained slots.
    pub basis: Vec<SuperDerivation>,
}

impl TruncatedKernel {
    pub fn free_slots(&self) -> Vec<Slot> {
        self.slots
            .iter()
            .zip(&self.statuses)
            .filter(|(_, s)| **s == OracleStatus::Free)
            .map(|(slot, _)| *slot)
            .collect()
    }

    pub fn min_degree(&self) -> Option<i64> {
        self.slots
            .iter()
            .zip(&self.statuses)
            .filter(|(_, s)| **s != OracleStatus::Zero)
            .map(|(slot, _)| slot.degree())
            .min()
    }
}

/// `[X, D]` and `X(z) D` through the action on coordinates, as
/// `(direction -> image of that coordinate)`.
fn coordinate_images(x: &SuperDerivation, d: &SuperDerivation, n: usize) -> (SuperDerivation, SuperDerivation) {
    let (x0, x1) = x.split_parity();
    let d_odd = d.is_odd();
    let xz = x.apply(&Direction::Base.coordinate());
    let mut bracket = SuperDerivation::zero();
    let mut derivative = SuperDerivation::zero();
    for dir in std::iter::once(Direction::Base).chain((0..n).map(Direction::Odd)) {
        let c = dir.coordinate();
        let dc = d.apply(&c);
        let mut img = &x0.apply(&dc) - &d.apply(&x0.apply(&c));
        let sign_plus = d_odd; // odd X with odd D anticommute
        let odd_part = if sign_plus {
            &x1.apply(&dc) + &d.apply(&x1.apply(&c))
        } else {
            &x1.apply(&dc) - &d.apply(&x1.apply(&c))
        };
        img += &odd_part;
        bracket.add_along(&img, dir);
        derivative.add_along(&(&xz * &dc), dir);
    }
    (bracket, derivative)
}

/// Kernel with every coefficient restricted to polynomials of degree
/// `<= bound`, by exact linear algebra over Q.
pub fn common_kernel_truncated(fields: &[SuperDerivation], t: &UnknownTemplate, bound: i64) -> TruncatedKernel {
    let n = t.rank;
    let ns = t.len();
    let width = (bound + 1) as usize;
    let shapes: Vec<FieldShape> = fields.iter().map(FieldShape::new).collect();
    // equation key -> sparse row over columns slot * width + e
    let mut rows: BTreeMap<(usize, OddMonomial, Direction, i64), SparseVec> = BTreeMap::new();
    let mut touched = vec![false; ns];
    for (fi, x) in fields.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (si, slot) in t.slots.iter().enumerate() {
            if !shapes[fi].may_touch(slot) {
                continue;
            }
            let (a, b) = coordinate_images(x, &slot.z_power(0), n);
            if a.is_zero() && b.is_zero() {
                continue;
            }
            touched[si] = true;
            for e in 0..=bound {
                let col = si * width + e as usize;
                for (mono, dir, p) in a.terms() {
                    for (k, c) in p.terms() {
                        rows.entry((fi, mono, dir, k + e)).or_default().insert(col, c.clone());
                    }
                }
                if e > 0 {
                    let ef = Rational::from_integer(e.into());
                    for (mono, dir, p) in b.terms() {
                        for (k, c) in p.terms() {
                            let entry = rows.entry((fi, mono, dir, k + e - 1)).or_default();
                            let v = entry.entry(col).or_insert_with(|| Rational::from_integer(0.into()));
                            *v += &ef * c;
                        }
                    }
                }
            }
        }
    }
    let mut ech = Echelon::new();
    for (_, mut r) in rows {
        r.retain(|_, v| *v != Rational::from_integer(0.into()));
        if !r.is_empty() {
            ech.insert(r);
        }
    }
    let reduced = ech.reduced_rows();
    let mut column_hits: BTreeMap<usize, Vec<(usize, Rational)>> = BTreeMap::new();
    for (&p, r) in &reduced {
        for (&c, x) in r.iter().filter(|(c, _)| **c != p) {
            column_hits.entry(c).or_default().push((p, x.clone()));
        }
    }
    let term = |col: usize, c: &Rational| {
        let slot = &t.slots[col / width];
        slot.z_power((col % width) as i64).scale(c)
    };
    let mut statuses = Vec::with_capacity(ns);
    let mut dimension = 0usize;
    let mut basis = Vec::new();
    for (si, _) in t.slots.iter().enumerate() {
        if !touched[si] {
            statuses.push(OracleStatus::Free);
            dimension += width;
            continue;
        }
        let mut all_zero = true;
        for e in 0..width {
            let col = si * width + e;
            match reduced.get(&col) {
                Some(r) if r.len() == 1 => {}
                Some(_) => all_zero = false,
                None => {
                    all_zero = false;
                    dimension += 1;
                    let mut v = term(col, &Rational::from_integer(1.into()));
                    for (p, x) in column_hits.get(&col).into_iter().flatten() {
                        v -= &term(*p, x);
                    }
                    basis.push(v);
                }
            }
        }
        statuses.push(if all_zero {
            OracleStatus::Zero
        } else {
            OracleStatus::Partial
        });
    }
    TruncatedKernel {
        degree_bound: bound,
        slots: t.slots.clone(),
        statuses,
        dimension,
        basis,
    }
}

/// The truncated kernel at `bound`, rerun at `bound + 1 ..= bound + window`;
/// stable when the slot statuses never change.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizedKernel {
    pub kernel: TruncatedKernel,
    pub stable: bool,
    pub window: i64,
}

pub fn common_kernel_stabilized(
    fields: &[SuperDerivation],
    t: &UnknownTemplate,
    bound: i64,
    window: i64,
) -> StabilizedKernel {
    let kernel = common_kernel_truncated(fields, t, bound);
    let stable = (1..=window).all(|w| common_kernel_truncated(fields, t, bound + w).statuses == kernel.statuses);
    StabilizedKernel { kernel, stable, window }
}

/// Whether solver and oracle describe the same slots: equal free sets and
/// equal zero sets.
pub fn oracle_agrees(desc: &KernelDescription, oracle: &TruncatedKernel) -> bool {
    desc.statuses.iter().zip(&oracle.statuses).all(|(s, o)| match s {
        SlotStatus::Free => *o == OracleStatus::Free,
        SlotStatus::Zero => *o == OracleStatus::Zero,
        SlotStatus::Pinned | SlotStatus::Dependent => *o == OracleStatus::Partial,
        SlotStatus::Inconclusive => true,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelOptions {
    pub truncation_degree: i64,
    pub stabilization_window: i64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            truncation_degree: 20,
            stabilization_window: 2,
        }
    }
}

/// Solver first; inconclusive slots are settled by the stabilized oracle.
pub fn common_kernel(fields: &[SuperDerivation], t: &UnknownTemplate, opts: KernelOptions) -> KernelDescription {
    let sys = derive_constraints(fields, t);
    let mut desc = solve_constraints(&sys);
    if !desc.is_inconclusive() {
        return desc;
    }
    // blocks are closed under coupling, so the oracle only needs the blocks
    // holding an inconclusive slot
    let subset: Vec<usize> = sys
        .blocks
        .iter()
        .filter(|b| b.iter().any(|&s| desc.statuses[s] == SlotStatus::Inconclusive))
        .flatten()
        .copied()
        .collect();
    let sub = UnknownTemplate {
        slots: subset.iter().map(|&s| t.slots[s]).collect(),
        ..t.clone()
    };
    let oracle = common_kernel_stabilized(fields, &sub, opts.truncation_degree, opts.stabilization_window);
    if oracle.stable {
        for (&s, o) in subset.iter().zip(&oracle.kernel.statuses) {
            if desc.statuses[s] == SlotStatus::Inconclusive {
                desc.statuses[s] = match o {
                    OracleStatus::Zero => SlotStatus::Zero,
                    OracleStatus::Free => SlotStatus::Free,
                    OracleStatus::Partial => SlotStatus::Dependent,
                };
            }
        }
        desc.oracle_resolved = true;
    }
    desc
}

// ---------------------------------------------------------------------------
// Nildominance

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NildominanceResult {
    /// `2s` for the plain and graded notions, `t` for the strict one.
    pub degree: i64,
    pub kernel: KernelDescription,
    /// Strict notion only: the kernel is exactly the filtration piece.
    pub equals_filtration: Option<bool>,
    pub field_count: usize,
}

fn even_cap(n: usize) -> i64 {
    2 * (n as i64 / 2)
}

fn plain_degree(kernel: &KernelDescription, n: usize) -> i64 {
    match kernel.min_degree() {
        Some(d) => (2 * d.div_euclid(2)).min(even_cap(n)),
        None => even_cap(n),
    }
}

/// Even global fields of filtration degree >= 2 on U0, and their leading parts.
pub fn model_fields(m: &DeformedModel) -> (Vec<SuperDerivation>, Vec<SuperDerivation>) {
    let lifts = lift_fields(m, m.spec.rank() as i64);
    let leading = lifts.iter().map(|f| f.leading.clone()).collect();
    (lifts.into_iter().map(|f| f.pair.x0).collect(), leading)
}

pub fn nildominance_from_fields(
    spec: &BundleSpec,
    fields: &[SuperDerivation],
    opts: KernelOptions,
) -> NildominanceResult {
    let t = build_template(spec, Space::Filtration(2), ParityFilter::Even);
    let kernel = common_kernel(fields, &t, opts);
    NildominanceResult {
        degree: plain_degree(&kernel, spec.rank()),
        kernel,
        equals_filtration: None,
        field_count: fields.len(),
    }
}

pub fn strict_from_fields(spec: &BundleSpec, fields: &[SuperDerivation], opts: KernelOptions) -> NildominanceResult {
    let t = build_template(spec, Space::Full, ParityFilter::All);
    let kernel = common_kernel(fields, &t, opts);
    let top = spec.rank() as i64 + 1;
    let degree = kernel.min_degree().unwrap_or(top);
    let equals = kernel.slots.iter().zip(&kernel.statuses).all(|(slot, s)| {
        if slot.degree() >= degree {
            *s == SlotStatus::Free
        } else {
            *s == SlotStatus::Zero
        }
    });
    NildominanceResult {
        degree,
        kernel,
        equals_filtration: Some(equals),
        field_count: fields.len(),
    }
}

/// Largest `2s` with every even local derivation of degree >= 2 that commutes
/// with all even global fields of degree >= 2 lying in degree >= 2s.
pub fn nildominance_degree(m: &DeformedModel) -> NildominanceResult {
    nildominance_from_fields(&m.spec, &model_fields(m).0, KernelOptions::default())
}

/// As [`nildominance_degree`] with each field replaced by its leading part.
pub fn graded_nildominance_degree(m: &DeformedModel) -> NildominanceResult {
    nildominance_from_fields(&m.spec, &model_fields(m).1, KernelOptions::default())
}

/// Largest `t` with the common kernel over all local derivations (all
/// parities and degrees) contained in degree >= `t`.
pub fn strict_nildominance_degree(m: &DeformedModel) -> NildominanceResult {
    strict_from_fields(&m.spec, &model_fields(m).0, KernelOptions::default())
}

/// Basis of the fields of `sys` that lie in the common kernel, i.e. the
/// centre of their span when the template covers the fields themselves.
pub fn center(sys: &ConstraintSystem) -> Vec<SuperDerivation> {
    let index: BTreeMap<Slot, usize> = sys.template.slots.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut by_slot: BTreeMap<usize, Vec<(usize, LaurentPoly)>> = BTreeMap::new();
    for (fi, x) in sys.fields.iter().enumerate() {
        for (mono, dir, p) in x.terms() {
            match index.get(&Slot::new(mono, dir)) {
                Some(&si) => by_slot.entry(si).or_default().push((fi, p.clone())),
                // a field outside the template cannot be in the kernel
                None => return Vec::new(),
            }
        }
    }
    let mut rows: BTreeMap<(usize, i64), SparseVec> = BTreeMap::new();
    for (ei, eq) in sys.equations.iter().enumerate() {
        for (sym, q) in &eq.terms {
            for (fi, p) in by_slot.get(&sym.slot).into_iter().flatten() {
                let value = if sym.derivative { p.derivative() } else { p.clone() };
                for (e, c) in (q * &value).terms() {
                    let entry = rows.entry((ei, e)).or_default();
                    let v = entry.entry(*fi).or_insert_with(|| Rational::from_integer(0.into()));
                    *v += c;
                }
            }
        }
    }
    let rows = rows.into_values().map(|mut r| {
        r.retain(|_, v| *v != Rational::from_integer(0.into()));
        r
    });
    kernel_basis(rows, sys.fields.len())
        .into_iter()
        .map(|v| {
            let mut x = SuperDerivation::zero();
            for (fi, c) in v {
                x += &sys.fields[fi].scale(&c);
            }
            x
        })
        .filter(|x| !x.is_zero())
        .collect()
}

// ---------------------------------------------------------------------------
// Replays of the graded-piece eliminations

fn th(i: usize) -> String {
    format!("theta{i}")
}

fn et(i: usize) -> String {
    format!("eta{i}")
}

/// The bracketing fields used for the graded piece `q` (q = -1, 0, 1) of the
/// strict analysis on the paper's bundle.
pub fn replay_field_texts(q: i64) -> Vec<String> {
    let all_eta = "eta1*eta2*eta3*eta4";
    let mut out = Vec::new();
    match q {
        -1 => {
            for i in 1..=3 {
                out.push(format!("theta1*theta2*theta3*d({})", th(i)));
            }
            for i in 1..=4 {
                out.push(format!("theta1*theta2*{}*d(eta3)", et(i)));
            }
        }
        0 => {
            for i in 1..=3 {
                out.push(format!("theta1*theta2*theta3*{all_eta}*d({})", th(i)));
            }
            for i in 1..=4 {
                out.push(format!("theta1*theta2*theta3*{all_eta}*d({})", et(i)));
            }
            for i in 1..=3 {
                for j in i + 1..=3 {
                    out.push(format!("{}*{}*{all_eta}*d(z)", th(i), th(j)));
                    out.push(format!("{}*{}*d(z)", th(i), th(j)));
                    out.push(format!("z*{}*{}*d(z)", th(i), th(j)));
                }
            }
            for i in 1..=4 {
                for j in i + 1..=4 {
                    for k in j + 1..=4 {
                        out.push(format!("theta1*theta2*theta3*{}*{}*{}*d(z)", et(i), et(j), et(k)));
                    }
                }
                out.push(format!("theta2*theta3*{}*d(theta1)", et(i)));
            }
        }
        1 => {
            for i in 1..=3 {
                out.push(format!("theta1*theta2*theta3*d({})", th(i)));
            }
            for i in 1..=4 {
                out.push(format!("theta2*theta3*{}*d({})", et(i), et(i)));
            }
            for i in 1..=3 {
                for j in i + 1..=3 {
                    for l in 1..=4 {
                        out.push(format!("{}*{}*{}*d({})", th(i), th(j), et(l), et(l)));
                    }
                }
            }
            for i in 1..=3 {
                for j in 1..=4 {
                    for k in j + 1..=4 {
                        for l in (1..=4).filter(|l| *l != j && *l != k) {
                            out.push(format!("{}*{}*{}*d({})", th(i), et(j), et(k), et(l)));
                        }
                    }
                }
                for j in [1, 3, 4] {
                    out.push(format!("{}*{}*d(z)", th(i), et(j)));
                }
                out.push(format!("{}*eta2*eta3*eta4*d(z)", th(i)));
            }
            out.push("theta1*theta2*theta3*eta2*d(z)".to_string());
        }
        _ => {}
    }
    out
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("no replay for graded piece {0}")]
    UnknownPiece(i64),
    #[error("replay field `{0}` is not a global field of the model")]
    NotGlobal(String),
    #[error(transparent)]
    Parse(#[from] crate::superalgebra::AlgebraError),
}

#[derive(Clone, Debug)]
pub struct Replay {
    pub degree: i64,
    pub field_texts: Vec<String>,
    pub system: ConstraintSystem,
    pub kernel: KernelDescription,
}

impl Replay {
    pub fn all_zero(&self) -> bool {
        self.kernel.statuses.iter().all(|s| *s == SlotStatus::Zero)
    }

    /// Names of the fields in the witness chains of a slot (zero and constant).
    pub fn witness_fields(&self, slot: usize) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let witnesses = [
            self.kernel.zero_witness.get(&slot),
            self.kernel.constant_witness.get(&slot),
        ];
        for w in witnesses.into_iter().flatten() {
            for &e in &w.equations {
                out.insert(self.field_texts[self.system.equations[e].field].clone());
            }
        }
        out
    }
}

/// Rerun the elimination of the graded piece `q` with the replay fields,
/// after checking each of them is a global field of `m` as written on U0.
pub fn strict_replay(m: &DeformedModel, q: i64) -> Result<Replay, ReplayError> {
    let texts = replay_field_texts(q);
    if texts.is_empty() {
        return Err(ReplayError::UnknownPiece(q));
    }
    let names = m.spec.names();
    let mut fields = Vec::with_capacity(texts.len());
    for t in &texts {
        let x = crate::superalgebra::expr::parse_derivation(t, &names, "z")?;
        if !crate::deformation::is_uncorrected_global(m, &x) {
            return Err(ReplayError::NotGlobal(t.clone()));
        }
        fields.push(x);
    }
    let template = build_template(&m.spec, Space::Graded(q), ParityFilter::All);
    let system = derive_constraints(&fields, &template);
    let kernel = solve_constraints(&system);
    Ok(Replay {
        degree: q,
        field_texts: texts,
        system,
        kernel,
    })
}
