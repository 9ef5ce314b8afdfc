use super::*;
use crate::compiler::{plan, CompileOptions, Target};
use crate::parser::{parse, render_statement};

fn sp2() -> Catalog {
    let mut cat = Catalog::new();
    for stmt in parse(include_str!("../../../../fixtures/sp2_schema.sql")).unwrap() {
        cat = plan(&stmt, &cat, &CompileOptions::default(), &Target::full()).unwrap().catalog;
    }
    cat
}

fn routed(sql: &str) -> Route {
    route(&parse(sql).unwrap()[0], &sp2()).unwrap().route
}

fn rewritten(sql: &str) -> String {
    match routed(sql) {
        Route::BaseRewrite { statement, .. } => render_statement(&statement, &Dialect::kernel(QuoteStyle::Bracket)).unwrap(),
        other => panic!("{other:?}"),
    }
}

fn rejected(sql: &str) -> String {
    match routed(sql) {
        Route::Rejected(r) => r,
        other => panic!("{other:?}"),
    }
}

#[test]
fn queries_pass_through() {
    let stmt = parse("Select * From SP;").unwrap().remove(0);
    assert_eq!(routed("Select * From SP;"), Route::PassThrough(stmt));
}

#[test]
fn star_minus_is_expanded_in_queries() {
    let Route::PassThrough(s) = routed("Select */(SP.QTY, SP.S#) From SP;") else { panic!() };
    let sql = render_statement(&s, &Dialect::kernel(QuoteStyle::Bracket)).unwrap();
    assert_eq!(sql, "SELECT SP.[P#], SP.SNAME, SP.STATUS, SP.SCITY, SP.PNAME, SP.COLOR, SP.WEIGHT, SP.PCITY FROM SP");
}

#[test]
fn insert_by_select_names_maps_to_base() {
    assert_eq!(
        rewritten("Insert SP (select 'S4' as S#, 'P4' as P#, 100 as QTY);"),
        "INSERT INTO SP_B ([S#], [P#], QTY) SELECT 'S4' AS [S#], 'P4' AS [P#], 100 AS QTY"
    );
}

#[test]
fn insert_positional_needs_stored_arity() {
    assert_eq!(rewritten("Insert Into SP Values ('S9', 'P9', 1);"), "INSERT INTO SP_B ([S#], [P#], QTY) VALUES ('S9', 'P9', 1)");
    assert!(rejected("Insert Into SP Values ('S9', 'P9', 1, 'x', 1, 'x', 'x', 'x', 1, 'x');").contains("IA not writable"));
    assert!(rejected("Insert Into SP Values ('S9', 'P9');").contains("stored attributes"));
}

#[test]
fn insert_naming_an_ia_is_rejected() {
    assert!(rejected("Insert Into SP (S#, P#, SNAME) Values ('S9', 'P9', 'x');").contains("SNAME"));
}

#[test]
fn insert_into_unknown_column() {
    let e = route(&parse("Insert Into SP (S#, NOPE) Values (1, 2);").unwrap()[0], &sp2()).unwrap_err();
    assert!(matches!(e, Error::UnknownColumn { .. }), "{e}");
}

#[test]
fn update_of_stored_attribute() {
    assert_eq!(
        rewritten("Update SP set QTY = 250 where S# = 'S1' and P# = 'P1';"),
        "UPDATE SP_B SET QTY = 250 WHERE [S#] = 'S1' AND [P#] = 'P1'"
    );
    assert_eq!(rewritten("Update SP set QTY = SP.QTY + 1;"), "UPDATE SP_B SET QTY = SP_B.QTY + 1");
}

#[test]
fn update_through_a_source_column_is_rejected() {
    let r = rejected("Update SP set QTY = 250, CITY = 'Paris' where S# = 'S1' and P# = 'P1';");
    assert!(r.contains("IA not writable") && r.contains("I_S"), "{r}");
    assert!(rejected("Update SP set PCITY = 'Oslo';").contains("I_P"));
}

#[test]
fn predicates_over_ias_go_through_the_full_view() {
    assert_eq!(
        rewritten("Delete SP Where SNAME = 'Smith';"),
        "DELETE FROM SP_B WHERE EXISTS (SELECT 1 FROM SP WHERE SP.[S#] = SP_B.[S#] AND SP.[P#] = SP_B.[P#] AND (SNAME = 'Smith'))"
    );
    assert_eq!(
        rewritten("Update SP Set QTY = WEIGHT;"),
        "UPDATE SP_B SET QTY = (SELECT WEIGHT FROM SP WHERE SP.[S#] = SP_B.[S#] AND SP.[P#] = SP_B.[P#])"
    );
}

#[test]
fn subqueries_naming_the_relation_keep_reading_the_full_view() {
    assert_eq!(
        rewritten("Delete SP Where QTY < (Select avg(QTY) From SP);"),
        "DELETE FROM SP_B WHERE QTY < (SELECT avg(QTY) FROM SP)"
    );
}

#[test]
fn writes_to_stored_relations_pass_through() {
    assert!(matches!(routed("Update S Set CITY = 'Rome';"), Route::PassThrough(_)));
    assert!(matches!(routed("Delete From SP_B;"), Route::PassThrough(_)));
}

#[test]
fn schema_statements_are_not_routed() {
    assert!(route(&parse("Drop Table S;").unwrap()[0], &sp2()).is_err());
}

#[test]
fn integrity_query_for_a_join_ie() {
    let cat = sp2();
    let scheme = cat.get("SP").unwrap().scheme().unwrap();
    let ies = resolved_ies(scheme, &cat).unwrap();
    let sql = integrity_query(&scheme.name, &ies[0], QuoteStyle::Bracket).unwrap().unwrap();
    assert_eq!(
        sql,
        "SELECT sir_d.[S#], COUNT(*) AS matches FROM (SELECT DISTINCT [S#] FROM SP) AS sir_d INNER JOIN S ON sir_d.[S#] = S.[S#] GROUP BY sir_d.[S#] HAVING COUNT(*) > 1 ORDER BY sir_d.[S#]"
    );
}
