//! Scenario files, orchestration of the analyses, and Markdown/JSON reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart_geometry::{
    families, family_table, BundleSpec, FamilyRow, Generator, GeometryError, GluingModel, ParityFilter, Slot,
};
use crate::deformation::{
    lift_fields, liftable_leading, slot_dimension, splitness_profile, uncorrected_fields, DeformationError,
    DeformedModel, LiftedField, Splitness,
};
use crate::kernel_analysis::{
    build_template, center, common_kernel, derive_constraints, nildominance_from_fields, strict_from_fields,
    KernelDescription, KernelOptions, NildominanceResult, Rule, SlotStatus, Space,
};
use crate::superalgebra::expr::{format_derivation, format_shape, parse_derivation};
use crate::superalgebra::{AlgebraError, SuperDerivation};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid bundle: {0}")]
    Bundle(#[from] GeometryError),
    #[error("deformation mentions unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("deformation is not even: the term `{0}` has odd degree")]
    OddDeformation(String),
    #[error("deformation has a term of degree {degree} < 2: `{term}`")]
    LowDegreeDeformation { degree: i64, term: String },
    #[error("deformation does not parse: {0}")]
    DeformationSyntax(String),
    #[error("invalid deformation: {0}")]
    Deformation(#[from] DeformationError),
    #[error("invalid option `{name}`: {message}")]
    Option { name: &'static str, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    GlobalFields,
    Lift,
    Kernel,
    Nildominance,
    GradedNildominance,
    StrictNildominance,
    Splitness,
}

impl Analysis {
    pub const ALL: [Analysis; 7] = [
        Analysis::GlobalFields,
        Analysis::Lift,
        Analysis::Kernel,
        Analysis::Nildominance,
        Analysis::GradedNildominance,
        Analysis::StrictNildominance,
        Analysis::Splitness,
    ];
}

fn default_truncation() -> i64 {
    20
}

fn default_window() -> i64 {
    2
}

fn default_space() -> String {
    "filtration>=2".to_string()
}

fn default_parity() -> ParityFilter {
    ParityFilter::Even
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOptions {
    #[serde(default = "default_truncation")]
    pub truncation_degree: i64,
    #[serde(default = "default_window")]
    pub stabilization_window: i64,
    /// Defaults to the rank of the bundle.
    #[serde(default)]
    pub max_lift_degree: Option<i64>,
    #[serde(default = "default_space")]
    pub kernel_space: String,
    #[serde(default = "default_parity")]
    pub kernel_parity: ParityFilter,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            truncation_degree: default_truncation(),
            stabilization_window: default_window(),
            max_lift_degree: None,
            kernel_space: default_space(),
            kernel_parity: default_parity(),
        }
    }
}

fn all_analyses() -> Vec<Analysis> {
    Analysis::ALL.to_vec()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    bundle: BundleSpec,
    #[serde(default)]
    deformation: Option<String>,
    #[serde(default = "all_analyses")]
    analyses: Vec<Analysis>,
    #[serde(default)]
    options: ScenarioOptions,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub model: DeformedModel,
    pub deformation: Option<String>,
    pub analyses: BTreeSet<Analysis>,
    pub options: ScenarioOptions,
}

impl Scenario {
    pub fn kernel_options(&self) -> KernelOptions {
        KernelOptions {
            truncation_degree: self.options.truncation_degree,
            stabilization_window: self.options.stabilization_window,
        }
    }

    pub fn kernel_space(&self) -> Space {
        self.options.kernel_space.parse().expect("validated on parse")
    }

    pub fn max_lift_degree(&self) -> i64 {
        self.options.max_lift_degree.unwrap_or(self.model.spec.rank() as i64)
    }
}

fn check_deformation(y: &SuperDerivation, names: &[String]) -> Result<(), ScenarioError> {
    for (mono, dir, p) in y.terms() {
        let mut single = SuperDerivation::zero();
        single.add_term(mono, dir, p);
        let term = format_derivation(&single, names, "z");
        let degree = crate::superalgebra::term_degree(mono, dir);
        if degree.rem_euclid(2) != 0 {
            return Err(ScenarioError::OddDeformation(term));
        }
        if degree < 2 {
            return Err(ScenarioError::LowDegreeDeformation { degree, term });
        }
    }
    Ok(())
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let spec = BundleSpec::new(file.bundle.generators)?.with_gluing(file.bundle.gluing);
    let names = spec.names();
    let deformation = file.deformation.filter(|d| !d.trim().is_empty());
    let model = match &deformation {
        None => DeformedModel::split(spec),
        Some(text) => {
            let y = parse_derivation(text, &names, "z").map_err(|e| match e {
                AlgebraError::UnknownGenerator(g) => ScenarioError::UnknownGenerator(g),
                other => ScenarioError::DeformationSyntax(other.to_string()),
            })?;
            check_deformation(&y, &names)?;
            DeformedModel::new(spec, y)?
        }
    };
    let o = &file.options;
    if o.truncation_degree < 0 {
        return Err(ScenarioError::Option {
            name: "truncation_degree",
            message: "must be >= 0".into(),
        });
    }
    if o.stabilization_window < 0 {
        return Err(ScenarioError::Option {
            name: "stabilization_window",
            message: "must be >= 0".into(),
        });
    }
    if o.max_lift_degree.is_some_and(|d| d < 2) {
        return Err(ScenarioError::Option {
            name: "max_lift_degree",
            message: "must be >= 2".into(),
        });
    }
    if let Err(e) = o.kernel_space.parse::<Space>() {
        return Err(ScenarioError::Option {
            name: "kernel_space",
            message: e.to_string(),
        });
    }
    Ok(Scenario {
        model,
        deformation,
        analyses: file.analyses.into_iter().collect(),
        options: file.options,
    })
}

// ---------------------------------------------------------------------------
// Report

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub bundle: Vec<Generator>,
    pub gluing: GluingModel,
    pub deformation: Option<String>,
    pub global_fields: Vec<TableSection>,
    pub lift: Option<LiftSection>,
    pub kernel: Option<KernelSection>,
    pub nildominance: Option<DegreeSection>,
    pub graded_nildominance: Option<DegreeSection>,
    pub strict_nildominance: Option<DegreeSection>,
    pub splitness: Option<Splitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSection {
    pub degree: i64,
    pub rows: Vec<FamilyRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftRow {
    pub family: String,
    pub bound: i64,
    /// Dimension of the family on the split model.
    pub split: usize,
    /// Fields of the family that are global on the deformed model unchanged.
    pub uncorrected: usize,
    /// Leading parts of global fields of the deformed model in the family.
    pub liftable: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftTable {
    pub degree: i64,
    pub rows: Vec<LiftRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftSection {
    pub global_fields: usize,
    pub degrees: Vec<LiftTable>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessLine {
    pub slot: String,
    pub rule: Rule,
    pub fields: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSection {
    pub space: String,
    pub parity: ParityFilter,
    pub fields: usize,
    pub slots: usize,
    pub zero: usize,
    pub free: Vec<String>,
    pub pinned: Vec<String>,
    pub dependent: Vec<String>,
    pub inconclusive: Vec<String>,
    pub min_degree: Option<i64>,
    pub oracle_resolved: bool,
    pub witnesses: Vec<WitnessLine>,
}

impl KernelSection {
    pub fn is_inconclusive(&self) -> bool {
        !self.inconclusive.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSection {
    pub degree: i64,
    pub kernel_min_degree: Option<i64>,
    pub fields: usize,
    /// Slots of lowest degree that may carry a kernel element.
    pub lowest_slots: Vec<String>,
    pub inconclusive: bool,
    pub center_dimension: Option<usize>,
    pub center_min_degree: Option<i64>,
    pub equals_filtration: Option<bool>,
}

impl Report {
    pub fn is_inconclusive(&self) -> bool {
        self.kernel.as_ref().is_some_and(KernelSection::is_inconclusive)
            || [&self.nildominance, &self.graded_nildominance, &self.strict_nildominance]
                .iter()
                .any(|s| s.as_ref().is_some_and(|s| s.inconclusive))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn shape(slot: &Slot, names: &[String]) -> String {
    format_shape(slot.mono, slot.dir, names, "z")
}

fn kernel_section(
    desc: &KernelDescription,
    fields: &[SuperDerivation],
    field_eqs: &dyn Fn(usize) -> usize,
    witnesses: &BTreeMap<usize, crate::kernel_analysis::Witness>,
    space: Space,
    parity: ParityFilter,
    names: &[String],
) -> KernelSection {
    let list = |st: SlotStatus| desc.with_status(st).iter().map(|s| shape(s, names)).collect::<Vec<_>>();
    let witnesses = witnesses
        .iter()
        .map(|(&slot, w)| {
            let used: BTreeSet<usize> = w.equations.iter().map(|&e| field_eqs(e)).collect();
            WitnessLine {
                slot: shape(&desc.slots[slot], names),
                rule: w.rule,
                fields: used
                    .into_iter()
                    .map(|f| format_derivation(&fields[f], names, "z"))
                    .collect(),
            }
        })
        .collect();
    KernelSection {
        space: space.to_string(),
        parity,
        fields: fields.len(),
        slots: desc.slots.len(),
        zero: desc.with_status(SlotStatus::Zero).len(),
        free: list(SlotStatus::Free),
        pinned: list(SlotStatus::Pinned),
        dependent: list(SlotStatus::Dependent),
        inconclusive: list(SlotStatus::Inconclusive),
        min_degree: desc.min_degree(),
        oracle_resolved: desc.oracle_resolved,
        witnesses,
    }
}

fn degree_section(r: &NildominanceResult, names: &[String]) -> DegreeSection {
    let min = r.kernel.min_degree();
    DegreeSection {
        degree: r.degree,
        kernel_min_degree: min,
        fields: r.field_count,
        lowest_slots: r
            .kernel
            .nonzero_slots()
            .iter()
            .filter(|s| Some(s.degree()) == min)
            .map(|s| shape(s, names))
            .collect(),
        inconclusive: r.kernel.is_inconclusive(),
        center_dimension: None,
        center_min_degree: None,
        equals_filtration: r.equals_filtration,
    }
}

fn even_degrees(spec: &BundleSpec, max: i64) -> Vec<i64> {
    (2..=max.min(spec.rank() as i64)).step_by(2).collect()
}

pub fn lift_section(m: &DeformedModel, lifts: &[LiftedField], max_degree: i64) -> LiftSection {
    let mut degrees = Vec::new();
    for d in even_degrees(&m.spec, max_degree) {
        let uncorrected = uncorrected_fields(m, d);
        let leading = liftable_leading(lifts, d);
        let rows = families(&m.spec, d, ParityFilter::Even)
            .into_iter()
            .map(|(row, slots)| LiftRow {
                family: row.label,
                bound: row.bound,
                split: row.dimension,
                uncorrected: slots.iter().map(|s| slot_dimension(&uncorrected, s)).sum(),
                liftable: slots.iter().map(|s| slot_dimension(&leading, s)).sum(),
            })
            .collect();
        degrees.push(LiftTable { degree: d, rows });
    }
    LiftSection {
        global_fields: lifts.len(),
        degrees,
    }
}

/// Runs the requested analyses; deterministic for a fixed scenario.
pub fn run(s: &Scenario) -> Report {
    let m = &s.model;
    let spec = &m.spec;
    let names = spec.names();
    let opts = s.kernel_options();
    let mut report = Report {
        bundle: spec.generators.clone(),
        gluing: spec.gluing,
        deformation: s.deformation.clone(),
        ..Report::default()
    };
    let wants = |a: Analysis| s.analyses.contains(&a);
    if wants(Analysis::GlobalFields) {
        for d in even_degrees(spec, spec.rank() as i64) {
            report.global_fields.push(TableSection {
                degree: d,
                rows: family_table(spec, d, ParityFilter::Even),
            });
        }
    }
    let needs_fields = [
        Analysis::Lift,
        Analysis::Kernel,
        Analysis::Nildominance,
        Analysis::GradedNildominance,
        Analysis::StrictNildominance,
    ]
    .into_iter()
    .any(wants);
    if !needs_fields && !wants(Analysis::Splitness) {
        return report;
    }
    let lifts = if needs_fields {
        lift_fields(m, spec.rank() as i64)
    } else {
        Vec::new()
    };
    let fields: Vec<SuperDerivation> = lifts.iter().map(|f| f.pair.x0.clone()).collect();
    let leading: Vec<SuperDerivation> = lifts.iter().map(|f| f.leading.clone()).collect();
    if wants(Analysis::Lift) {
        report.lift = Some(lift_section(m, &lifts, s.max_lift_degree()));
    }
    if wants(Analysis::Kernel) {
        let space = s.kernel_space();
        let t = build_template(spec, space, s.options.kernel_parity);
        let sys = derive_constraints(&fields, &t);
        let desc = common_kernel(&fields, &t, opts);
        let field_of = |e: usize| sys.equations[e].field;
        report.kernel = Some(kernel_section(
            &desc,
            &fields,
            &field_of,
            &desc.zero_witness,
            space,
            s.options.kernel_parity,
            &names,
        ));
    }
    if wants(Analysis::Nildominance) {
        let r = nildominance_from_fields(spec, &fields, opts);
        let mut section = degree_section(&r, &names);
        let t = build_template(spec, Space::Filtration(2), ParityFilter::Even);
        let c = center(&derive_constraints(&fields, &t));
        section.center_dimension = Some(c.len());
        section.center_min_degree = c.iter().filter_map(SuperDerivation::min_degree).min();
        report.nildominance = Some(section);
    }
    if wants(Analysis::GradedNildominance) {
        let r = nildominance_from_fields(spec, &leading, opts);
        report.graded_nildominance = Some(degree_section(&r, &names));
    }
    if wants(Analysis::StrictNildominance) {
        let r = strict_from_fields(spec, &fields, opts);
        report.strict_nildominance = Some(degree_section(&r, &names));
    }
    if wants(Analysis::Splitness) {
        report.splitness = Some(splitness_profile(m));
    }
    report
}

// ---------------------------------------------------------------------------
// Markdown

fn opt_num<T: ToString>(x: &Option<T>, none: &str) -> String {
    x.as_ref().map_or(none.to_string(), T::to_string)
}

fn table_header(out: &mut String, cols: &[&str]) {
    let _ = writeln!(out, "| {} |", cols.join(" | "));
    let _ = writeln!(out, "|{}", " --- |".repeat(cols.len()));
}

fn rule_name(r: Rule) -> &'static str {
    match r {
        Rule::Single => "single",
        Rule::SingleDerivative => "single-derivative",
        Rule::Elimination => "elimination",
        Rule::Constants => "constants",
    }
}

fn parse_rule(s: &str) -> Option<Rule> {
    Some(match s {
        "single" => Rule::Single,
        "single-derivative" => Rule::SingleDerivative,
        "elimination" => Rule::Elimination,
        "constants" => Rule::Constants,
        _ => return None,
    })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn write_degree_section(out: &mut String, title: &str, s: &DegreeSection) {
    let _ = writeln!(out, "## {title}\n");
    let _ = writeln!(out, "- degree: {}", s.degree);
    let _ = writeln!(out, "- kernel min degree: {}", opt_num(&s.kernel_min_degree, "empty"));
    let _ = writeln!(out, "- fields: {}", s.fields);
    let _ = writeln!(out, "- inconclusive: {}", yes_no(s.inconclusive));
    if let Some(c) = s.center_dimension {
        let _ = writeln!(out, "- center dimension: {c}");
        let _ = writeln!(out, "- center min degree: {}", opt_num(&s.center_min_degree, "empty"));
    }
    if let Some(e) = s.equals_filtration {
        let _ = writeln!(out, "- equals filtration: {}", yes_no(e));
    }
    if !s.lowest_slots.is_empty() {
        out.push('\n');
        for slot in &s.lowest_slots {
            let _ = writeln!(out, "lowest: {slot}");
        }
    }
    out.push('\n');
}

fn summary(r: &Report) -> Vec<String> {
    let mut lines = Vec::new();
    if let Some(s) = r.splitness {
        lines.push(match s {
            Splitness::Split => "The model is split.".to_string(),
            Splitness::NonSplitAt(d) => format!("The model is non-split, deformed in degree {d}."),
        });
    }
    if let Some(s) = &r.nildominance {
        lines.push(format!(
            "It is {}-nildominated and not {}-nildominated.",
            s.degree,
            s.degree + 2
        ));
    }
    if let Some(s) = &r.graded_nildominance {
        lines.push(format!(
            "It is graded {}-nildominated and not graded {}-nildominated.",
            s.degree,
            s.degree + 2
        ));
    }
    if let Some(s) = &r.strict_nildominance {
        let equality = match s.equals_filtration {
            Some(true) => ", with equality",
            Some(false) => ", without equality",
            None => "",
        };
        lines.push(format!(
            "It is strictly {}-nildominated (common kernel inside degree >= {}{equality}).",
            s.degree, s.degree
        ));
    }
    if r.is_inconclusive() {
        lines.push("Some kernel sections are inconclusive.".to_string());
    }
    lines
}

impl Report {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Supermanifold report\n\n");
        let lines = summary(self);
        if !lines.is_empty() {
            out.push_str("## Summary\n\n");
            for l in lines {
                let _ = writeln!(out, "{l}");
            }
            out.push('\n');
        }
        out.push_str("## Bundle\n\n");
        table_header(&mut out, &["generator", "twist"]);
        for g in &self.bundle {
            let _ = writeln!(out, "| {} | {} |", g.name, g.twist);
        }
        out.push('\n');
        let gluing = match self.gluing {
            GluingModel::Graded => "graded",
            GluingModel::Geometric => "geometric",
        };
        let _ = writeln!(out, "- gluing: {gluing}");
        match &self.deformation {
            Some(d) => {
                let _ = writeln!(out, "- deformation: `{d}`");
            }
            None => out.push_str("- deformation: none\n"),
        }
        out.push('\n');
        for t in &self.global_fields {
            let _ = writeln!(out, "## Global fields in degree {}\n", t.degree);
            table_header(&mut out, &["family", "degree", "bound", "instances", "dimension"]);
            for r in &t.rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    r.label, r.degree, r.bound, r.instances, r.dimension
                );
            }
            out.push('\n');
        }
        if let Some(l) = &self.lift {
            out.push_str("## Lift\n\n");
            let _ = writeln!(out, "- global fields: {}\n", l.global_fields);
            for t in &l.degrees {
                let _ = writeln!(out, "### Lift in degree {}\n", t.degree);
                table_header(&mut out, &["family", "bound", "split", "uncorrected", "liftable"]);
                for r in &t.rows {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} | {} |",
                        r.family, r.bound, r.split, r.uncorrected, r.liftable
                    );
                }
                out.push('\n');
            }
        }
        if let Some(k) = &self.kernel {
            out.push_str("## Kernel\n\n");
            let parity = match k.parity {
                ParityFilter::Even => "even",
                ParityFilter::All => "all",
            };
            let _ = writeln!(out, "- space: {}", k.space);
            let _ = writeln!(out, "- parity: {parity}");
            let _ = writeln!(out, "- fields: {}", k.fields);
            let _ = writeln!(out, "- slots: {}", k.slots);
            let _ = writeln!(out, "- zero: {}", k.zero);
            let _ = writeln!(out, "- min degree: {}", opt_num(&k.min_degree, "empty"));
            let _ = writeln!(out, "- oracle: {}", yes_no(k.oracle_resolved));
            out.push('\n');
            for (prefix, list) in [
                ("free", &k.free),
                ("pinned", &k.pinned),
                ("dependent", &k.dependent),
                ("inconclusive", &k.inconclusive),
            ] {
                for s in list {
                    let _ = writeln!(out, "{prefix}: {s}");
                }
            }
            out.push('\n');
            if !k.witnesses.is_empty() {
                out.push_str("### Witnesses\n\n");
                table_header(&mut out, &["slot", "rule", "fields"]);
                for w in &k.witnesses {
                    let _ = writeln!(out, "| {} | {} | {} |", w.slot, rule_name(w.rule), w.fields.join("; "));
                }
                out.push('\n');
            }
        }
        for (title, s) in [
            ("Nildominance", &self.nildominance),
            ("Graded nildominance", &self.graded_nildominance),
            ("Strict nildominance", &self.strict_nildominance),
        ] {
            if let Some(s) = s {
                write_degree_section(&mut out, title, s);
            }
        }
        if let Some(s) = self.splitness {
            out.push_str("## Splitness\n\n");
            let _ = writeln!(out, "- profile: {s}\n");
        }
        out
    }

    /// Reads back a document produced by [`Report::to_markdown`].
    pub fn from_markdown(text: &str) -> Result<Self, MarkdownError> {
        MarkdownReader::default().read(text)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct MarkdownError {
    pub line: usize,
    pub message: String,
}

#[derive(Default)]
struct MarkdownReader {
    report: Report,
    section: String,
    line: usize,
}

fn cells(line: &str) -> Vec<String> {
    line.trim()
        .trim_start_matches('|')
        .trim_end_matches('|')
        .split('|')
        .map(|c| c.trim().to_string())
        .collect()
}

impl MarkdownReader {
    fn err(&self, message: impl Into<String>) -> MarkdownError {
        MarkdownError {
            line: self.line,
            message: message.into(),
        }
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T, MarkdownError> {
        s.trim()
            .parse()
            .map_err(|_| self.err(format!("expected a number, found `{s}`")))
    }

    fn opt_num<T: std::str::FromStr>(&self, s: &str) -> Result<Option<T>, MarkdownError> {
        if s.trim() == "empty" {
            Ok(None)
        } else {
            self.num(s).map(Some)
        }
    }

    fn flag(&self, s: &str) -> Result<bool, MarkdownError> {
        match s.trim() {
            "yes" => Ok(true),
            "no" => Ok(false),
            other => Err(self.err(format!("expected yes/no, found `{other}`"))),
        }
    }

    fn degree_section(&mut self) -> Option<&mut DegreeSection> {
        let r = &mut self.report;
        let slot = match self.section.as_str() {
            "Nildominance" => &mut r.nildominance,
            "Graded nildominance" => &mut r.graded_nildominance,
            "Strict nildominance" => &mut r.strict_nildominance,
            _ => return None,
        };
        Some(slot.get_or_insert_with(|| DegreeSection {
            degree: 0,
            kernel_min_degree: None,
            fields: 0,
            lowest_slots: Vec::new(),
            inconclusive: false,
            center_dimension: None,
            center_min_degree: None,
            equals_filtration: None,
        }))
    }

    fn kernel(&mut self) -> &mut KernelSection {
        self.report.kernel.get_or_insert_with(|| KernelSection {
            space: String::new(),
            parity: ParityFilter::Even,
            fields: 0,
            slots: 0,
            zero: 0,
            free: Vec::new(),
            pinned: Vec::new(),
            dependent: Vec::new(),
            inconclusive: Vec::new(),
            min_degree: None,
            oracle_resolved: false,
            witnesses: Vec::new(),
        })
    }

    fn key_value(&mut self, key: &str, value: &str) -> Result<(), MarkdownError> {
        let value = value.trim();
        match self.section.as_str() {
            "Bundle" => match key {
                "gluing" => {
                    self.report.gluing = match value {
                        "graded" => GluingModel::Graded,
                        "geometric" => GluingModel::Geometric,
                        other => return Err(self.err(format!("unknown gluing `{other}`"))),
                    }
                }
                "deformation" => {
                    self.report.deformation = match value {
                        "none" => None,
                        v => Some(v.trim_matches('`').to_string()),
                    }
                }
                _ => return Err(self.err(format!("unknown key `{key}`"))),
            },
            "Lift" => {
                let n = self.num(value)?;
                self.report
                    .lift
                    .get_or_insert_with(|| LiftSection {
                        global_fields: 0,
                        degrees: Vec::new(),
                    })
                    .global_fields = n;
            }
            "Kernel" => match key {
                "space" => self.kernel().space = value.to_string(),
                "parity" => {
                    let p = match value {
                        "even" => ParityFilter::Even,
                        "all" => ParityFilter::All,
                        other => return Err(self.err(format!("unknown parity `{other}`"))),
                    };
                    self.kernel().parity = p;
                }
                "fields" => {
                    let n = self.num(value)?;
                    self.kernel().fields = n;
                }
                "slots" => {
                    let n = self.num(value)?;
                    self.kernel().slots = n;
                }
                "zero" => {
                    let n = self.num(value)?;
                    self.kernel().zero = n;
                }
                "min degree" => {
                    let n = self.opt_num(value)?;
                    self.kernel().min_degree = n;
                }
                "oracle" => {
                    let b = self.flag(value)?;
                    self.kernel().oracle_resolved = b;
                }
                _ => return Err(self.err(format!("unknown key `{key}`"))),
            },
            "Splitness" => {
                self.report.splitness = Some(match value {
                    "split" => Splitness::Split,
                    v => Splitness::NonSplitAt(self.num(v)?),
                });
            }
            _ => {
                let parsed_num = self.opt_num::<i64>(value);
                let parsed_flag = self.flag(value);
                let err = self.err(format!("unknown key `{key}`"));
                let Some(s) = self.degree_section() else {
                    return Err(err);
                };
                match key {
                    "degree" => s.degree = parsed_num?.ok_or(err)?,
                    "kernel min degree" => s.kernel_min_degree = parsed_num?,
                    "fields" => s.fields = parsed_num?.ok_or(err)? as usize,
                    "inconclusive" => s.inconclusive = parsed_flag?,
                    "center dimension" => s.center_dimension = parsed_num?.map(|n| n as usize),
                    "center min degree" => s.center_min_degree = parsed_num?,
                    "equals filtration" => s.equals_filtration = Some(parsed_flag?),
                    _ => return Err(err),
                }
            }
        }
        Ok(())
    }

    fn table_row(&mut self, row: Vec<String>) -> Result<(), MarkdownError> {
        let section = self.section.clone();
        if section == "Bundle" {
            if row.len() != 2 {
                return Err(self.err("bundle rows have two cells"));
            }
            let twist = self.num(&row[1])?;
            self.report.bundle.push(Generator {
                name: row[0].clone(),
                twist,
            });
        } else if let Some(d) = section.strip_prefix("Global fields in degree ") {
            let degree: i64 = self.num(d)?;
            if row.len() != 5 {
                return Err(self.err("table rows have five cells"));
            }
            let r = FamilyRow {
                label: row[0].clone(),
                degree: self.num(&row[1])?,
                bound: self.num(&row[2])?,
                instances: self.num(&row[3])?,
                dimension: self.num(&row[4])?,
            };
            match self.report.global_fields.last_mut() {
                Some(t) if t.degree == degree => t.rows.push(r),
                _ => self.report.global_fields.push(TableSection { degree, rows: vec![r] }),
            }
        } else if let Some(d) = section.strip_prefix("Lift in degree ") {
            let degree: i64 = self.num(d)?;
            if row.len() != 5 {
                return Err(self.err("lift rows have five cells"));
            }
            let r = LiftRow {
                family: row[0].clone(),
                bound: self.num(&row[1])?,
                split: self.num(&row[2])?,
                uncorrected: self.num(&row[3])?,
                liftable: self.num(&row[4])?,
            };
            let lift = self.report.lift.get_or_insert_with(|| LiftSection {
                global_fields: 0,
                degrees: Vec::new(),
            });
            match lift.degrees.last_mut() {
                Some(t) if t.degree == degree => t.rows.push(r),
                _ => lift.degrees.push(LiftTable { degree, rows: vec![r] }),
            }
        } else if section == "Witnesses" {
            if row.len() != 3 {
                return Err(self.err("witness rows have three cells"));
            }
            let rule = parse_rule(&row[1]).ok_or_else(|| self.err(format!("unknown rule `{}`", row[1])))?;
            let fields = if row[2].is_empty() {
                Vec::new()
            } else {
                row[2].split("; ").map(str::to_string).collect()
            };
            self.kernel().witnesses.push(WitnessLine {
                slot: row[0].clone(),
                rule,
                fields,
            });
        } else {
            return Err(self.err(format!("unexpected table in section `{section}`")));
        }
        Ok(())
    }

    fn read(mut self, text: &str) -> Result<Report, MarkdownError> {
        let mut in_table = false;
        for (i, raw) in text.lines().enumerate() {
            self.line = i + 1;
            let line = raw.trim_end();
            if !line.starts_with('|') {
                in_table = false;
            }
            if line.is_empty() || line.starts_with("# ") {
                continue;
            }
            if let Some(h) = line.strip_prefix("### ").or_else(|| line.strip_prefix("## ")) {
                self.section = h.trim().to_string();
                if let Some(d) = self.section.strip_prefix("Lift in degree ") {
                    let degree: i64 = self.num(d)?;
                    let lift = self.report.lift.get_or_insert_with(|| LiftSection {
                        global_fields: 0,
                        degrees: Vec::new(),
                    });
                    lift.degrees.push(LiftTable {
                        degree,
                        rows: Vec::new(),
                    });
                }
                if let Some(d) = self.section.strip_prefix("Global fields in degree ") {
                    let degree: i64 = self.num(d)?;
                    self.report.global_fields.push(TableSection {
                        degree,
                        rows: Vec::new(),
                    });
                }
                if self.section == "Kernel" {
                    self.kernel();
                }
                continue;
            }
            if self.section == "Summary" {
                continue;
            }
            if line.starts_with('|') {
                if !in_table {
                    // column names, then the separator row
                    in_table = true;
                    continue;
                }
                if line.contains("---") && cells(line).iter().all(|c| c.chars().all(|ch| ch == '-')) {
                    continue;
                }
                self.table_row(cells(line))?;
                continue;
            }
            if let Some(kv) = line.strip_prefix("- ") {
                let (k, v) = kv.split_once(": ").ok_or_else(|| self.err("expected `key: value`"))?;
                self.key_value(k.trim(), v)?;
                continue;
            }
            if let Some((prefix, slot)) = line.split_once(": ") {
                let slot = slot.trim().to_string();
                match prefix {
                    "free" => self.kernel().free.push(slot),
                    "pinned" => self.kernel().pinned.push(slot),
                    "dependent" => self.kernel().dependent.push(slot),
                    "inconclusive" => self.kernel().inconclusive.push(slot),
                    "lowest" => match self.degree_section() {
                        Some(s) => s.lowest_slots.push(slot),
                        None => return Err(self.err("`lowest` outside a degree section")),
                    },
                    _ => return Err(self.err(format!("unknown line `{line}`"))),
                }
                continue;
            }
            return Err(self.err(format!("unknown line `{line}`")));
        }
        Ok(self.report)
    }
}
