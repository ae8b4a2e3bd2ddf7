//! End-to-end acceptance run on the bundle 3 O(4) + 4 O(-2) with the
//! deformation `(z^-2 eta1 + z^-8 eta2) eta3 eta4 d(theta1)`.
//!
//! Prints one PASS/FAIL line per criterion and exits non-zero when any
//! criterion fails or exceeds its runtime limit.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use supnil::chart_geometry::{families, BundleSpec, ParityFilter, Slot};
use supnil::cli::run_cli;
use supnil::deformation::{
    lift_fields, liftable_leading, slot_coefficients, slot_dimension, splitness_profile, uncorrected_fields,
    DeformedModel, Splitness,
};
use supnil::kernel_analysis::{
    build_template, common_kernel_stabilized, derive_constraints, model_fields, nildominance_from_fields,
    oracle_agrees, solve_constraints, strict_from_fields, strict_replay, KernelOptions, SlotStatus, Space,
};
use supnil::report::Report;
use supnil::superalgebra::expr::{format_shape, parse_derivation};
use supnil::superalgebra::{LaurentPoly, SuperDerivation};
use supnil_acceptance::*;

type Outcome = Result<Vec<String>, Vec<String>>;
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn spec() -> BundleSpec {
    BundleSpec::paper_example()
}

fn d(text: &str) -> SuperDerivation {
    parse_derivation(text, &spec().names(), "z").unwrap()
}

fn slot(text: &str) -> Slot {
    let (mono, dir, _) = d(text).terms().next().map(|(m, d, p)| (m, d, p.clone())).unwrap();
    Slot::new(mono, dir)
}

fn shape(s: &Slot) -> String {
    format_shape(s.mono, s.dir, &spec().names(), "z")
}

fn finish(notes: Vec<String>, mut bad: Vec<String>) -> Outcome {
    if bad.is_empty() {
        Ok(notes)
    } else {
        bad.extend(notes);
        Err(bad)
    }
}

fn criterion_1() -> Outcome {
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/scenarios/paper_example.json");
    let mut notes = Vec::new();
    let mut bad = Vec::new();
    for degree in [2, 4, 6] {
        let out = run_cli(["supnil", "tables", scenario, "--degree", &degree.to_string()]);
        if out.code != 0 {
            return Err(vec![format!("supnil tables exited with {}: {}", out.code, out.stderr)]);
        }
        let report = Report::from_markdown(&out.stdout).map_err(|e| vec![e.to_string()])?;
        let rows = &report.global_fields[0].rows;
        let computed = families(&spec(), degree, ParityFilter::All);
        let mut covered = 0;
        for (row, slots) in &computed {
            let printed = rows.iter().find(|r| r.label == row.label);
            if printed != Some(row) {
                bad.push(format!("degree {degree}: printed row for {} differs", row.label));
            }
            for s in slots {
                covered += 1;
                if table_bound(degree, s) != Some(row.bound) {
                    bad.push(format!(
                        "degree {degree}: {} <= {} (table {:?})",
                        shape(s),
                        row.bound,
                        table_bound(degree, s)
                    ));
                }
            }
        }
        let expected_slots = supnil::chart_geometry::slots_of_degree(7, degree)
            .iter()
            .filter(|s| table_bound(degree, s).is_some())
            .count();
        if covered != expected_slots || computed.len() != table_rows(degree) || rows.len() != computed.len() {
            bad.push(format!(
                "degree {degree}: {} families / {covered} slots, table has {} families / {expected_slots} slots",
                computed.len(),
                table_rows(degree)
            ));
        }
        notes.push(format!("degree {degree}: {} families", computed.len()));
    }
    finish(notes, bad)
}

fn criterion_2() -> Outcome {
    let m = DeformedModel::paper_example();
    let alpha = m.alpha();
    let mut bad = Vec::new();
    // P ranges over a basis of C[z]_{<=4}; conjugation is linear in P
    for e in 0..=4 {
        let p = format!("z^{e}");
        for (j, rest) in [
            (
                1,
                format!("-{p}*z^-8*eta1*eta2*eta3*eta4*d(z) + 8*{p}*z^-9*theta1*eta1*eta2*eta3*eta4*d(theta1)"),
            ),
            (
                2,
                format!("{p}*z^-2*eta1*eta2*eta3*eta4*d(z) - 2*{p}*z^-3*theta1*eta1*eta2*eta3*eta4*d(theta1)"),
            ),
        ] {
            let x = d(&format!("{p}*theta1*eta{j}*d(z)"));
            let expected = &x + &d(&rest);
            if alpha.conjugate(&x) != expected {
                bad.push(format!("P = {p}, j = {j}"));
            }
        }
    }
    let generic = d("(1 - 2*z + 3*z^4)*theta1*eta1*d(z) + (5 + z^3)*theta1*eta2*d(z)");
    let expected = &generic
        + &d("-(1 - 2*z + 3*z^4)*z^-8*eta1*eta2*eta3*eta4*d(z) + 8*(1 - 2*z + 3*z^4)*z^-9*theta1*eta1*eta2*eta3*eta4*d(theta1)
              + (5 + z^3)*z^-2*eta1*eta2*eta3*eta4*d(z) - 2*(5 + z^3)*z^-3*theta1*eta1*eta2*eta3*eta4*d(theta1)");
    if alpha.conjugate(&generic) != expected {
        bad.push("generic combination".into());
    }
    finish(vec!["both rows, P in C[z]<=4".into()], bad)
}

fn criterion_3() -> Outcome {
    let m = DeformedModel::paper_example();
    let mut notes = Vec::new();
    let mut bad = Vec::new();
    let lifts = lift_fields(&m, 4);
    let l2 = liftable_leading(&lifts, 2);
    for i in 1..=3 {
        let p1 = slot_coefficients(&l2, &slot(&format!("theta{i}*eta1*d(z)")));
        if p1 != vec![LaurentPoly::z_pow(0), LaurentPoly::z_pow(1)] {
            bad.push(format!("theta{i}*eta1*d(z): liftable {p1:?}, expected C[z]<=1"));
        }
        let p2 = slot_coefficients(&l2, &slot(&format!("theta{i}*eta2*d(z)")));
        if p2 != vec![LaurentPoly::z_pow(3), LaurentPoly::z_pow(4)] {
            bad.push(format!("theta{i}*eta2*d(z): liftable {p2:?}, expected z^3 C[z]<=1"));
        }
    }
    notes.push("theta_i*eta1*d(z): C[z]<=1, theta_i*eta2*d(z): z^3 C[z]<=1".to_string());
    for (degree, bound) in [
        (2, uncorrected_bound_2 as fn(&Slot) -> Option<i64>),
        (4, uncorrected_bound_4),
    ] {
        let fields = uncorrected_fields(&m, degree);
        for (row, slots) in families(&m.spec, degree, ParityFilter::Even) {
            let computed: usize = slots.iter().map(|s| slot_dimension(&fields, s)).sum();
            let expected: usize = slots.iter().map(|s| bound(s).map_or(0, |b| b as usize + 1)).sum();
            if computed != expected {
                bad.push(format!(
                    "degree {degree} {}: dimension {computed}, list gives {expected}",
                    row.label
                ));
            }
        }
        notes.push(format!("degree {degree}: {} uncorrected fields", fields.len()));
    }
    finish(notes, bad)
}

fn slot_set(texts: impl IntoIterator<Item = String>) -> BTreeSet<Slot> {
    texts.into_iter().map(|t| slot(&t)).collect()
}

fn criterion_4() -> Outcome {
    let m = DeformedModel::paper_example();
    let opts = KernelOptions::default();
    let n2 = uncorrected_fields(&m, 2);
    let n4 = uncorrected_fields(&m, 4);
    let mut notes = Vec::new();
    let mut bad = Vec::new();

    let expected_a = degree_four_kernel();
    let expected_b = degree_two_kernel();

    let mut both = n2.clone();
    both.extend(n4);
    for (name, space, fields, expected) in [
        ("a", Space::Graded(4), &n2, expected_a),
        ("b", Space::Graded(2), &both, expected_b),
    ] {
        let t = build_template(&m.spec, space, ParityFilter::Even);
        let desc = solve_constraints(&derive_constraints(fields, &t));
        let free: BTreeSet<Slot> = desc.free_slots().into_iter().collect();
        if free != slot_set(expected.clone()) {
            let expected = slot_set(expected.clone());
            let extra: Vec<String> = free.difference(&expected).map(shape).collect();
            let missing: Vec<String> = expected.difference(&free).map(shape).collect();
            bad.push(format!(
                "({name}) free slots differ: extra {extra:?}, missing {missing:?}"
            ));
        }
        if desc.is_inconclusive() {
            bad.push(format!("({name}) solver inconclusive"));
        }
        let oracle = common_kernel_stabilized(fields, &t, opts.truncation_degree, opts.stabilization_window);
        if !oracle.stable || !oracle_agrees(&desc, &oracle.kernel) {
            bad.push(format!(
                "({name}) solver and oracle disagree (stable: {})",
                oracle.stable
            ));
        }
        let dependent = desc.with_status(SlotStatus::Dependent);
        let mut note = format!("({name}) {} free slots, oracle agrees", free.len());
        if !dependent.is_empty() {
            note.push_str(&format!(
                "; {} further coupled slots: {}",
                dependent.len(),
                dependent.iter().map(shape).collect::<Vec<_>>().join(", ")
            ));
        }
        notes.push(note);
    }
    finish(notes, bad)
}

fn criterion_5() -> Outcome {
    let opts = KernelOptions::default();
    let mut notes = Vec::new();
    let mut bad = Vec::new();
    let mut check = |what: &str, got: String, want: String| {
        if got == want {
            notes.push(format!("{what} {got}"));
        } else {
            bad.push(format!("{what}: computed {got}, expected {want}"));
        }
    };

    let split = DeformedModel::split(spec());
    let (fields, _) = model_fields(&split);
    let r = nildominance_from_fields(&split.spec, &fields, opts);
    check("split model nildominance", r.degree.to_string(), "2".into());

    let m = DeformedModel::paper_example();
    let (fields, leading) = model_fields(&m);
    let plain = nildominance_from_fields(&m.spec, &fields, opts);
    check("M nildominance", plain.degree.to_string(), "4".into());
    let graded = nildominance_from_fields(&m.spec, &leading, opts);
    check("M graded nildominance", graded.degree.to_string(), "2".into());
    let strict = strict_from_fields(&m.spec, &fields, opts);
    check("M strict nildominance", strict.degree.to_string(), "3".into());
    check(
        "M splitness",
        splitness_profile(&m).to_string(),
        Splitness::NonSplitAt(2).to_string(),
    );
    finish(notes, bad)
}

fn criterion_6() -> Outcome {
    let results = common::property_suites();
    let notes: Vec<String> = results
        .iter()
        .filter(|r| r.1.is_ok())
        .map(|r| r.0.to_string())
        .collect();
    let bad: Vec<String> = results
        .into_iter()
        .filter_map(|(name, r)| r.err().map(|e| format!("{name}: {e}")))
        .collect();
    finish(vec![notes.join(", ")], bad)
}

fn criterion_7() -> Outcome {
    let m = DeformedModel::paper_example();
    let mut notes = Vec::new();
    let mut bad = Vec::new();
    for q in [-1, 0, 1] {
        let r = strict_replay(&m, q).map_err(|e| vec![e.to_string()])?;
        if !r.all_zero() {
            bad.push(format!("q = {q}: not every unknown is eliminated"));
        }
        let named = |s: &str, pred: &dyn Fn(&str) -> bool| -> bool {
            r.kernel
                .index_of_slot(&slot(s))
                .is_some_and(|i| r.witness_fields(i).iter().any(|f| pred(f)))
        };
        let ok = match q {
            -1 => {
                (1..=3).all(|k| {
                    named(&format!("d(theta{k})"), &|f| {
                        f.starts_with("theta1*theta2*theta3*d(theta")
                    })
                }) && (1..=4).all(|k| named(&format!("d(eta{k})"), &|f| f.starts_with("theta1*theta2*eta")))
            }
            0 => named("d(z)", &|f| f.starts_with("z*theta")),
            _ => ["theta1*d(z)", "eta1*d(z)"].iter().all(|s| {
                named(s, &|f| {
                    f.starts_with("theta1*theta2*theta3*d(theta") || f.starts_with("theta2*theta3*eta")
                })
            }),
        };
        if !ok {
            bad.push(format!("q = {q}: witness chains do not name the expected fields"));
        }
        notes.push(format!(
            "q = {q}: {} unknowns eliminated by {} fields",
            r.kernel.slots.len(),
            r.field_texts.len()
        ));
    }
    finish(notes, bad)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        (1, "global-field table", Duration::from_secs(5), criterion_1),
        (2, "conjugation formula", Duration::from_secs(1), criterion_2),
        (3, "lift conditions", Duration::from_secs(30), criterion_3),
        (4, "kernel bases", Duration::from_secs(120), criterion_4),
        (5, "headline degrees", Duration::from_secs(300), criterion_5),
        (6, "property suites", Duration::from_secs(120), criterion_6),
        (7, "strict replays", Duration::from_secs(60), criterion_7),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = outcome.is_ok() && in_time;
        println!(
            "criterion {id} ({name}): {} [{:.2}s / limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        let lines = match &outcome {
            Ok(l) | Err(l) => l,
        };
        for l in lines {
            println!("    {l}");
        }
        if !in_time {
            println!("    exceeded the runtime limit");
        }
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
