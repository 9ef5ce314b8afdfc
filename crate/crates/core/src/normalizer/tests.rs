use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::kernel::{RowSet, Value};

fn email_example() -> Problem {
    parse_problem(include_str!("../../../../fixtures/email.deps")).unwrap()
}

fn set(u: &Universe, names: &[&str]) -> AttrSet {
    u.set(names).unwrap()
}

fn draft(u: &Universe, name: &str, stored: &[&str], all: &[&str], fds: &[Fd]) -> SchemeDraft {
    let stored = set(u, stored);
    SchemeDraft { name: name.into(), attrs: set(u, all), stored, ies: Vec::new(), key: minimal_key(stored, fds) }
}

fn find<'a>(d: &'a [SchemeDraft], name: &str) -> &'a SchemeDraft {
    d.iter().find(|x| x.name == name).unwrap_or_else(|| panic!("no {name} in {:?}", d.iter().map(|x| &x.name).collect::<Vec<_>>()))
}

/// A universal instance: every supply of a supplier repeated for each of its emails.
fn supplier_instance(u: &Universe, rng: &mut ChaCha8Rng, emails: std::ops::RangeInclusive<usize>) -> RowSet {
    let ns = rng.gen_range(1..=5);
    let np = rng.gen_range(1..=5);
    let suppliers: Vec<[String; 3]> = (0..ns)
        .map(|_| [format!("n{}", rng.gen_range(0..3)), format!("{}", rng.gen_range(0..3) * 10), format!("c{}", rng.gen_range(0..3))])
        .collect();
    let parts: Vec<[String; 4]> = (0..np)
        .map(|_| {
            [format!("pn{}", rng.gen_range(0..3)), format!("col{}", rng.gen_range(0..2)), format!("{}", rng.gen_range(10..20)), format!("c{}", rng.gen_range(0..3))]
        })
        .collect();
    let mut rows = Vec::new();
    let mut next_email = 0;
    for (s, sv) in suppliers.iter().enumerate() {
        let m = rng.gen_range(emails.clone());
        let mail: Vec<String> = (0..m).map(|_| { next_email += 1; format!("e{next_email}") }).collect();
        for (p, pv) in parts.iter().enumerate() {
            if !rng.gen_bool(0.6) {
                continue;
            }
            let qty = rng.gen_range(1..5) * 100;
            for e in &mail {
                let t = |x: &str| Value::Text(x.to_string());
                rows.push(vec![
                    t(e), t(&format!("S{s}")), t(&sv[0]), t(&sv[1]), t(&sv[2]),
                    t(&format!("P{p}")), t(&pv[0]), t(&pv[1]), t(&pv[2]), t(&pv[3]), Value::Integer(qty),
                ]);
            }
        }
    }
    RowSet { columns: u.names.clone(), rows }
}

/// The instance projected onto some attributes, duplicates dropped.
fn projected(u: &Universe, inst: &RowSet, attrs: AttrSet) -> RowSet {
    let cols: Vec<usize> = attrs.iter().map(|a| inst.columns.iter().position(|c| *c == u.names[a]).unwrap()).collect();
    let mut rows: Vec<Vec<Value>> = Vec::new();
    for r in &inst.rows {
        let p: Vec<Value> = cols.iter().map(|&c| r[c].clone()).collect();
        if !rows.contains(&p) {
            rows.push(p);
        }
    }
    RowSet { columns: u.names_of(attrs).into_iter().map(String::from).collect(), rows }
}

#[test]
fn closure_examples() {
    let p = email_example();
    let u = &p.universe;
    assert_eq!(attribute_closure(set(u, &["S#"]), &p.fds), set(u, &["S#", "SNAME", "STATUS", "SCITY"]));
    assert_eq!(attribute_closure(set(u, &["QTY", "COLOR"]), &[]), set(u, &["QTY", "COLOR"]));
    let fds = [Fd::new(set(u, &["EMAIL"]), set(u, &["S#"])), Fd::new(set(u, &["S#"]), set(u, &["SNAME"]))];
    assert_eq!(attribute_closure(set(u, &["EMAIL"]), &fds), set(u, &["EMAIL", "S#", "SNAME"]));
}

#[test]
fn restated_bcnf_judges_the_stored_part() {
    let p = email_example();
    let u = &p.universe;
    let sp = draft(u, "SP", &["S#", "P#", "QTY"], &["S#", "P#", "QTY", "SNAME", "PNAME"], &p.fds);
    assert!(is_bcnf(&sp, &p.fds));
    let stored_sname = draft(u, "SP_", &["S#", "SNAME", "P#", "QTY"], &["S#", "SNAME", "P#", "QTY"], &p.fds);
    assert!(!is_bcnf(&stored_sname, &p.fds));
    let inherited_sname = draft(u, "SP_", &["S#", "P#", "QTY"], &["S#", "SNAME", "P#", "QTY"], &p.fds);
    assert!(is_bcnf(&inherited_sname, &p.fds));
}

#[test]
fn heath_on_suppliers() {
    let p = email_example();
    let u = &p.universe;
    let sp = draft(u, "SP", &["S#", "SNAME", "STATUS", "SCITY", "P#", "PNAME", "COLOR", "WEIGHT", "PCITY", "QTY"], &["S#", "SNAME", "STATUS", "SCITY", "P#", "PNAME", "COLOR", "WEIGHT", "PCITY", "QTY"], &p.fds);
    let step = heath_decompose(u, &sp, &p.fds[1], &p.fds).unwrap();
    let [s, rest] = &step.outputs;
    assert_eq!((s.name.as_str(), s.stored, s.key), ("S", set(u, &["S#", "SNAME", "STATUS", "SCITY"]), set(u, &["S#"])));
    assert_eq!(rest.name, "SP");
    assert_eq!(rest.stored, set(u, &["S#", "P#", "PNAME", "COLOR", "WEIGHT", "PCITY", "QTY"]));
    assert_eq!(rest.attrs, sp.attrs);
    assert_eq!(step.ies, vec![IeDraft { name: "I_S".into(), source: "S".into(), produces: set(u, &["SNAME", "STATUS", "SCITY"]), join: set(u, &["S#"]), star: true }]);
}

#[test]
fn heath_generic_and_on_a_key() {
    let u = Universe::new(vec!["A".into(), "B".into(), "C".into()]);
    let fds = vec![Fd::new(set(&u, &["A"]), set(&u, &["B"]))];
    let abc = draft(&u, "ABC", &["A", "B", "C"], &["A", "B", "C"], &fds);
    let step = heath_decompose(&u, &abc, &fds[0], &fds).unwrap();
    assert_eq!(step.outputs[0].stored, set(&u, &["A", "B"]));
    assert_eq!(step.outputs[1].stored, set(&u, &["A", "C"]));
    assert_eq!(step.outputs[1].inherited(), set(&u, &["B"]));
    let keyed = vec![Fd::new(set(&u, &["A"]), set(&u, &["B", "C"]))];
    let abc = draft(&u, "ABC", &["A", "B", "C"], &["A", "B", "C"], &keyed);
    assert!(matches!(heath_decompose(&u, &abc, &keyed[0], &keyed), Err(crate::Error::NotApplicable(_))));
}

#[test]
fn fagin_on_the_universal_relation() {
    let p = email_example();
    let u = &p.universe;
    let step = fagin_decompose(u, &p.universal(), &p.mvds[0], &p.fds).unwrap();
    let [se, sp] = &step.outputs;
    assert_eq!((se.name.as_str(), se.stored), ("SE", set(u, &["S#", "EMAIL"])));
    assert_eq!(se.ies.len(), 1);
    assert_eq!((se.ies[0].name.as_str(), se.ies[0].source.as_str()), ("I_SP", "SP"));
    assert_eq!(se.ies[0].produces, set(u, &["SNAME", "STATUS", "SCITY"]));
    assert_eq!((sp.name.as_str(), sp.stored), ("SP", u.all().minus(set(u, &["EMAIL"]))));
    assert!(sp.ies.is_empty());
}

#[test]
fn fagin_without_fds_is_plain() {
    let u = Universe::new(vec!["A".into(), "B".into(), "C".into()]);
    let mvd = Mvd { lhs: set(&u, &["A"]), branch: set(&u, &["B"]), hint: None };
    let abc = draft(&u, "ABC", &["A", "B", "C"], &["A", "B", "C"], &[]);
    let step = fagin_decompose(&u, &abc, &mvd, &[]).unwrap();
    assert!(step.ies.is_empty());
    assert_eq!((step.outputs[0].stored, step.outputs[1].stored), (set(&u, &["A", "B"]), set(&u, &["A", "C"])));
}

#[test]
fn fagin_first_reaches_the_optimal_scheme() {
    let p = email_example();
    let u = &p.universe;
    let out = normalize(u, &p.universal(), &p.fds, &p.mvds, NormalizeOptions::default()).unwrap();
    assert_eq!(out.trace.iter().map(|s| s.kind).collect::<Vec<_>>(), [StepKind::Fagin, StepKind::Heath, StepKind::Heath]);
    assert_eq!(out.drafts.len(), 4);
    let s = find(&out.drafts, "S");
    assert_eq!((s.stored, s.key, s.ies.len()), (set(u, &["S#", "SNAME", "STATUS", "SCITY"]), set(u, &["S#"]), 0));
    let pp = find(&out.drafts, "P");
    assert_eq!((pp.stored, pp.key), (set(u, &["P#", "PNAME", "COLOR", "WEIGHT", "PCITY"]), set(u, &["P#"])));
    let se = find(&out.drafts, "SE");
    assert_eq!((se.stored, se.key), (set(u, &["S#", "EMAIL"]), set(u, &["EMAIL"])));
    assert_eq!(se.ies.iter().map(|i| (i.source.as_str(), i.produces)).collect::<Vec<_>>(), [("SP", set(u, &["SNAME", "STATUS", "SCITY"]))]);
    let sp = find(&out.drafts, "SP");
    assert_eq!((sp.stored, sp.key), (set(u, &["S#", "P#", "QTY"]), set(u, &["S#", "P#"])));
    assert_eq!(
        sp.ies.iter().map(|i| (i.name.as_str(), i.source.as_str(), i.produces, i.star)).collect::<Vec<_>>(),
        [("I_S", "S", set(u, &["SNAME", "STATUS", "SCITY"]), true), ("I_P", "P", set(u, &["PNAME", "COLOR", "WEIGHT", "PCITY"]), true)]
    );
    for d in &out.drafts {
        assert!(is_4nf(d, &p.fds, &p.mvds), "{}", d.name);
    }
}

#[test]
fn heath_first_is_suboptimal() {
    let p = email_example();
    let u = &p.universe;
    let out = normalize(u, &p.universal(), &p.fds, &p.mvds, NormalizeOptions { heath_first: true }).unwrap();
    assert!(out.trace.iter().all(|s| s.kind == StepKind::Heath));
    let se = find(&out.drafts, "SE");
    assert_eq!((se.stored, se.ies.len()), (set(u, &["S#", "EMAIL"]), 0));
    let s = find(&out.drafts, "S");
    assert_eq!((s.stored, s.key), (set(u, &["EMAIL", "SNAME", "STATUS", "SCITY"]), set(u, &["EMAIL"])));
    let sp = find(&out.drafts, "SP");
    assert_eq!(sp.stored, set(u, &["EMAIL", "P#", "QTY"]));
    assert_eq!(sp.ies.iter().map(|i| i.source.as_str()).collect::<Vec<_>>(), ["SE", "S", "P"]);
    find(&out.drafts, "P");
    assert_eq!(out.drafts.len(), 4);

    let best = normalize(u, &p.universal(), &p.fds, &p.mvds, NormalizeOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let inst = supplier_instance(u, &mut rng, 2..=2);
    assert!(stored_value_count(u, &best.drafts, &inst).unwrap() < stored_value_count(u, &out.drafts, &inst).unwrap());
}

#[test]
fn normal_input_is_left_alone() {
    let u = Universe::new(vec!["A".into(), "B".into()]);
    let fds = vec![Fd::new(set(&u, &["A"]), set(&u, &["B"]))];
    let ab = draft(&u, "AB", &["A", "B"], &["A", "B"], &fds);
    let out = normalize(&u, &ab, &fds, &[], NormalizeOptions::default()).unwrap();
    assert_eq!((out.drafts, out.trace.len()), (vec![ab], 0));
}

fn abc_rows(rows: &[[i64; 3]]) -> RowSet {
    RowSet { columns: vec!["A".into(), "B".into(), "C".into()], rows: rows.iter().map(|r| r.iter().map(|&v| Value::Integer(v)).collect()).collect() }
}

#[test]
fn lossless_oracle() {
    let u = Universe::new(vec!["A".into(), "B".into(), "C".into()]);
    let mvd = Mvd { lhs: set(&u, &["A"]), branch: set(&u, &["B"]), hint: None };
    let abc = draft(&u, "ABC", &["A", "B", "C"], &["A", "B", "C"], &[]);
    let step = fagin_decompose(&u, &abc, &mvd, &[]).unwrap();
    let holds = abc_rows(&[[1, 1, 1], [1, 1, 2], [1, 2, 1], [1, 2, 2], [2, 3, 3]]);
    assert!(lossless_check(&u, &step, &holds).unwrap());
    let breaks = abc_rows(&[[1, 1, 1], [1, 2, 2], [1, 1, 2]]);
    assert!(!lossless_check(&u, &step, &breaks).unwrap());
    assert!(lossless_check(&u, &step, &abc_rows(&[])).unwrap());

    let fds = vec![Fd::new(set(&u, &["A"]), set(&u, &["B"]))];
    let heath = heath_decompose(&u, &abc, &fds[0], &fds).unwrap();
    assert!(lossless_check(&u, &heath, &abc_rows(&[[1, 5, 1], [1, 5, 2], [2, 6, 1]])).unwrap());
    let narrow = RowSet { columns: vec!["A".into()], rows: vec![] };
    assert!(matches!(lossless_check(&u, &heath, &narrow), Err(crate::Error::SchemaMismatch(_))));
}

#[test]
fn stored_values() {
    let u = Universe::new(vec!["A".into(), "B".into(), "C".into()]);
    let abc = draft(&u, "ABC", &["A", "B", "C"], &["A", "B", "C"], &[]);
    let inst = abc_rows(&[[1, 1, 1], [1, 2, 1], [3, 1, 1]]);
    assert_eq!(stored_value_count(&u, &[abc], &inst).unwrap(), 9);

    let u = Universe::new(vec!["S#".into(), "P#".into(), "QTY".into()]);
    let fig4: [(&str, &str, i64); 12] = [
        ("S1", "P1", 300), ("S1", "P2", 200), ("S1", "P3", 400), ("S1", "P4", 200), ("S1", "P5", 100), ("S1", "P6", 100),
        ("S2", "P1", 300), ("S2", "P2", 400), ("S3", "P2", 200), ("S4", "P2", 200), ("S4", "P4", 300), ("S4", "P5", 400),
    ];
    let inst = RowSet {
        columns: u.names.clone(),
        rows: fig4.iter().map(|(s, p, q)| vec![Value::Text(s.to_string()), Value::Text(p.to_string()), Value::Integer(*q)]).collect(),
    };
    let s_only = draft(&u, "S", &["S#"], &["S#"], &[]);
    assert_eq!(stored_value_count(&u, &[s_only], &inst).unwrap(), 4);
}

#[test]
fn input_errors_carry_the_line() {
    let e = parse_problem("RELATION U(A, B)\nA -> Z\n").unwrap_err();
    assert!(matches!(e, crate::Error::InputFormat { line: 2, .. }), "{e}");
    assert!(parse_problem("A -> B\n").is_err());
    assert!(parse_problem("RELATION U(A, B, C)\nA ->> B | B\n").is_err());
    assert!(parse_problem("RELATION U(A, B)\nA ->> B\n").is_err());
    let p = parse_problem("relation R(A, B, C)\n\n# note\nA ->> B\nA, B -> C as X, Y\n").unwrap();
    assert_eq!(p.mvds.len(), 1);
    assert_eq!(p.fds[0].hint, Some(Hint { name: "X".into(), rest: Some("Y".into()) }));
}

#[test]
fn sirsql_output_orders_sources_first() {
    let p = email_example();
    let out = normalize(&p.universe, &p.universal(), &p.fds, &p.mvds, NormalizeOptions::default()).unwrap();
    let text = to_sirsql(&p.universe, &out.drafts);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "Create Table S (S#, SNAME, STATUS, SCITY, Primary Key (S#));");
    assert_eq!(lines[1], "Create Table P (P#, PNAME, COLOR, WEIGHT, PCITY, Primary Key (P#));");
    assert_eq!(
        lines[2],
        "Create Table SP (S#, P#, QTY, I_S (Select */S# From S Where SP.S# = S#), I_P (Select */P# From P Where SP.P# = P#), Primary Key (S#, P#));"
    );
    assert_eq!(lines[3], "Create Table SE (EMAIL, S#, I_SP (Select SNAME, STATUS, SCITY From SP Where SE.S# = S#), Primary Key (EMAIL));");
    crate::parser::parse(&text).unwrap();
    assert!(render_trace(&p.universe, &out.trace).starts_with("1. Fagin on U with S# ->> EMAIL |"));
}

#[test]
fn every_normalize_step_is_lossless() {
    let p = email_example();
    let u = &p.universe;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for heath_first in [false, true] {
        let out = normalize(u, &p.universal(), &p.fds, &p.mvds, NormalizeOptions { heath_first }).unwrap();
        for _ in 0..100 {
            let inst = supplier_instance(u, &mut rng, 1..=3);
            for step in &out.trace {
                assert!(lossless_check(u, step, &projected(u, &inst, step.input.stored)).unwrap(), "{}", step.dependency);
            }
        }
    }
}

#[test]
fn fagin_first_stores_fewer_values_with_two_emails() {
    let p = email_example();
    let u = &p.universe;
    let best = normalize(u, &p.universal(), &p.fds, &p.mvds, NormalizeOptions::default()).unwrap();
    let worse = normalize(u, &p.universal(), &p.fds, &p.mvds, NormalizeOptions { heath_first: true }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let inst = supplier_instance(u, &mut rng, 2..=4);
        if inst.rows.is_empty() {
            continue;
        }
        assert!(stored_value_count(u, &best.drafts, &inst).unwrap() < stored_value_count(u, &worse.drafts, &inst).unwrap());
    }
}

/// Classic BCNF of a stored projection, tried over every lhs subset.
fn classic_bcnf(stored: AttrSet, fds: &[Fd]) -> bool {
    stored.subsets().into_iter().all(|y| {
        let c = attribute_closure(y, fds);
        c.inter(stored) == y || stored.is_subset(c)
    })
}

fn fd_strategy() -> impl Strategy<Value = (Vec<Fd>, u128, u128)> {
    let fd = (1u128..64, 1u128..64).prop_map(|(l, r)| Fd::new(AttrSet(l), AttrSet(r)));
    (proptest::collection::vec(fd, 0..6), 1u128..64, 0u128..64)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha, ..ProptestConfig::default() })]

    #[test]
    fn restated_bcnf_matches_the_classic_test((fds, stored, extra) in fd_strategy()) {
        let stored = AttrSet(stored);
        let d = SchemeDraft { name: "R".into(), attrs: stored.union(AttrSet(extra)), stored, ies: Vec::new(), key: minimal_key(stored, &fds) };
        prop_assert_eq!(is_bcnf(&d, &fds), classic_bcnf(stored, &fds));
    }

    #[test]
    fn normalized_drafts_cover_the_universe((fds, _s, _e) in fd_strategy()) {
        let u = Universe::new(["A", "B", "C", "D", "E", "F"].map(String::from).to_vec());
        let all = u.all();
        let fds: Vec<Fd> = fds.into_iter().map(|f| Fd::new(f.lhs, f.rhs.minus(f.lhs))).filter(|f| !f.rhs.is_empty()).collect();
        let start = SchemeDraft { name: "U".into(), attrs: all, stored: all, ies: Vec::new(), key: minimal_key(all, &fds) };
        let out = normalize(&u, &start, &fds, &[], NormalizeOptions::default()).unwrap();
        let covered = out.drafts.iter().fold(AttrSet::empty(), |s, d| s.union(d.stored));
        prop_assert_eq!(covered, all);
        for d in &out.drafts {
            prop_assert!(is_bcnf(d, &fds));
            prop_assert!(d.stored.is_subset(all));
        }
        let names: std::collections::BTreeSet<&str> = out.drafts.iter().map(|d| d.name.as_str()).collect();
        prop_assert_eq!(names.len(), out.drafts.len());
    }
}
