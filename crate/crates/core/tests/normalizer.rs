use sirsql::kernel::SqliteKernel;
use sirsql::normalizer::{normalize, parse_problem, to_sirsql, NormalizeOptions};
use sirsql::{LayerOptions, SirLayer};

const EMAIL_DEPS: &str = include_str!("../../../fixtures/email.deps");

fn applied(heath_first: bool) -> SirLayer<SqliteKernel> {
    let p = parse_problem(EMAIL_DEPS).unwrap();
    let out = normalize(&p.universe, &p.universal(), &p.fds, &p.mvds, NormalizeOptions { heath_first }).unwrap();
    let mut l = SirLayer::open(SqliteKernel::open_in_memory().unwrap(), LayerOptions::default()).unwrap();
    l.execute_script(&to_sirsql(&p.universe, &out.drafts)).unwrap();
    l
}

#[test]
fn optimal_scheme_compiles_and_answers_without_joins() {
    let mut l = applied(false);
    l.execute_script(
        "Insert Into S Values ('S1', 'Smith', 20, 'London');
         Insert Into P Values ('P1', 'Nut', 'Red', 12, 'London');
         Insert Into SP Values ('S1', 'P1', 300);
         Insert Into SE Values ('smith@x', 'S1');
         Insert Into SE Values ('js@x', 'S1');",
    )
    .unwrap();
    let rows = l.query("Select SNAME, PNAME, QTY From SP;").unwrap();
    assert_eq!(rows.rows.len(), 1);
    assert_eq!(rows.rows[0][0].to_string(), "Smith");
    let rows = l.query("Select EMAIL, SNAME From SE Order By EMAIL;").unwrap();
    assert_eq!(rows.rows.iter().map(|r| r[1].to_string()).collect::<Vec<_>>(), ["Smith", "Smith"]);
}

#[test]
fn heath_first_scheme_compiles_too() {
    let mut l = applied(true);
    l.execute_script(
        "Insert Into SE Values ('smith@x', 'S1');
         Insert Into S Values ('smith@x', 'Smith', 20, 'London');
         Insert Into P Values ('P1', 'Nut', 'Red', 12, 'London');
         Insert Into SP Values ('smith@x', 'P1', 300);",
    )
    .unwrap();
    let rows = l.query("Select S#, SNAME, PNAME From SP;").unwrap();
    assert_eq!(rows.rows[0].iter().map(|v| v.to_string()).collect::<Vec<_>>(), ["S1", "Smith", "Nut"]);
}
