//! Reference data for the acceptance run: the table of global fields of the
//! split model and the lists of fields of the deformed model that need no
//! correction on U0, transcribed slot by slot.

use std::collections::BTreeSet;

use supnil::chart_geometry::Slot;
use supnil::superalgebra::Direction;

/// Thetas (1..=3), etas (1..=4) and the direction of a slot: `('z', 0)`,
/// `('t', k)` or `('e', k)`.
pub fn anatomy(s: &Slot) -> (BTreeSet<usize>, BTreeSet<usize>, (char, usize)) {
    let thetas = s.mono.indices().filter(|&i| i < 3).map(|i| i + 1).collect();
    let etas = s.mono.indices().filter(|&i| i >= 3).map(|i| i - 2).collect();
    let dir = match s.dir {
        Direction::Base => ('z', 0),
        Direction::Odd(j) if j < 3 => ('t', j + 1),
        Direction::Odd(j) => ('e', j - 2),
    };
    (thetas, etas, dir)
}

/// Coefficient bound of each slot in the table of global fields of the split
/// model, keyed by (#thetas, #etas, direction kind).
pub fn table_bound(degree: i64, s: &Slot) -> Option<i64> {
    let (t, e, (k, _)) = anatomy(s);
    let key = (t.len(), e.len(), k);
    let rows: &[((usize, usize, char), i64)] = match degree {
        2 => &[
            ((1, 1, 'z'), 4),
            ((2, 0, 'z'), 10),
            ((2, 1, 't'), 2),
            ((3, 0, 't'), 8),
            ((1, 2, 'e'), 2),
            ((2, 1, 'e'), 8),
            ((3, 0, 'e'), 14),
        ],
        4 => &[
            ((1, 3, 'z'), 0),
            ((2, 2, 'z'), 6),
            ((3, 1, 'z'), 12),
            ((3, 2, 't'), 4),
            ((2, 3, 'e'), 4),
            ((3, 2, 'e'), 10),
        ],
        6 => &[((2, 4, 'z'), 2), ((3, 3, 'z'), 8), ((3, 4, 't'), 0), ((3, 4, 'e'), 6)],
        _ => &[],
    };
    rows.iter().find(|(k, _)| *k == key).map(|(_, b)| *b)
}

pub fn table_rows(degree: i64) -> usize {
    match degree {
        2 => 7,
        4 => 6,
        6 => 4,
        _ => 0,
    }
}

/// Bound of the coefficient space of a degree-2 slot in the list of fields
/// that are global on the deformed model without correction on U0; `None`
/// when the slot is absent from the list.
pub fn uncorrected_bound_2(s: &Slot) -> Option<i64> {
    let (t, e, (k, l)) = anatomy(s);
    let one = |set: &BTreeSet<usize>| set.iter().next().copied().unwrap_or(0);
    match (t.len(), e.len(), k) {
        (1, 1, 'z') => match one(&e) {
            1 => Some(1),
            2 => None,
            _ => Some(4),
        },
        (2, 0, 'z') => Some(7),
        (2, 1, 't') => {
            let k = one(&e);
            if !t.contains(&1) || !(k == 1 || k == 2) {
                Some(2)
            } else if k == 1 {
                Some(0)
            } else {
                None
            }
        }
        (3, 0, 't') => Some(0),
        (1, 2, 'e') => {
            if e == BTreeSet::from([1, l]) {
                Some(0)
            } else if e == BTreeSet::from([2, l]) {
                None
            } else {
                Some(2)
            }
        }
        (2, 1, 'e') => {
            let k = one(&e);
            match (k == l, k) {
                (true, 2) if t.contains(&1) => Some(0),
                (true, 2) => Some(6),
                (true, _) => Some(0),
                (false, 3 | 4) => Some(8),
                (false, 1) => Some(6),
                (false, _) => Some(0),
            }
        }
        (3, 0, 'e') => Some(6),
        _ => None,
    }
}

/// Same for the degree-4 list.
pub fn uncorrected_bound_4(s: &Slot) -> Option<i64> {
    let (t, e, (k, l)) = anatomy(s);
    match (t.len(), e.len(), k) {
        (1, 3, 'z') => Some(0),
        (2, 2, 'z') => Some(6),
        (3, 1, 'z') => Some(match e.iter().next() {
            Some(1) => 9,
            Some(2) => 3,
            _ => 12,
        }),
        (3, 2, 't') => Some(4),
        (2, 3, 'e') => Some(4),
        (3, 2, 'e') if e.contains(&l) => {
            let other = e.iter().find(|&&x| x != l).copied();
            Some(match other {
                Some(1) => 8,
                Some(2) => 2,
                _ => 10,
            })
        }
        (3, 2, 'e') => Some(10),
        _ => None,
    }
}

/// Slots spanning the expected degree-4 kernel against the uncorrected
/// degree-2 fields.
pub fn degree_four_kernel() -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for i in 1..=4 {
        out.insert(format!("theta1*theta2*theta3*eta{i}*d(z)"));
        for j in i + 1..=4 {
            for k in 1..=4 {
                out.insert(format!("theta1*theta2*theta3*eta{i}*eta{j}*d(eta{k})"));
            }
        }
    }
    out.insert("theta2*theta3*eta1*eta3*eta4*d(theta1)".into());
    out
}

/// Slots spanning the expected degree-2 kernel against the uncorrected
/// degree-2 and degree-4 fields.
pub fn degree_two_kernel() -> BTreeSet<String> {
    (1..=4).map(|i| format!("theta1*theta2*theta3*d(eta{i})")).collect()
}
