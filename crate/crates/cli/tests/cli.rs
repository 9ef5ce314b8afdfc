use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

struct Db {
    dir: TempDir,
}

impl Db {
    fn new() -> Self {
        Db { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self) -> String {
        self.dir.path().join("db.sqlite").to_string_lossy().into_owned()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_sirsql")).arg("--kernel").arg(self.path()).args(args).output().unwrap()
    }

    fn script(&self, name: &str, text: &str) -> String {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    }

    fn loaded() -> Self {
        let db = Db::new();
        for f in ["sp2_schema.sql", "sp2_data.sql"] {
            assert!(db.run(&["apply", fixture(f).to_str().unwrap()]).status.success());
        }
        db
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn apply_reports_statements_and_objects() {
    let db = Db::new();
    let out = db.run(&["apply", fixture("sp2_schema.sql").to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("3: Create Table SP"), "{text}");
    assert!(text.contains("created SP_B, SP_1, SP"), "{text}");
    assert!(text.ends_with("3 statements applied; kernel objects: S, P, SP_B, SP_1, SP\n"), "{text}");
}

#[test]
fn empty_script_is_fine() {
    let db = Db::new();
    let out = db.run(&["apply", &db.script("empty.sql", "")]);
    assert_eq!((out.status.code(), stdout(&out)), (Some(0), String::new()));
}

#[test]
fn exit_codes() {
    let db = Db::loaded();
    let cycle = "Alter Table S Alter STATUS As STATUS (Select Int (SUM(QTY)/100) FROM SP WHERE S.S# = S#);\nSelect 1;";
    let out = db.run(&["apply", &db.script("cycle.sql", cycle)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("S, SP"));
    assert_eq!(db.run(&["apply", &db.script("bad.sql", "Create Tabel X (A);")]).status.code(), Some(3));
    assert_eq!(db.run(&["query", "Select * From NOPE;"]).status.code(), Some(1));
    assert_eq!(db.run(&["query", "Update SP Set SNAME = 'x';"]).status.code(), Some(1));
    assert_eq!(db.run(&["explain", "NOPE"]).status.code(), Some(1));
}

#[test]
fn query_formats() {
    let db = Db::loaded();
    let out = db.run(&["--format", "csv", "query", "Select P#, PNAME, QTY From SP Where SNAME ='Smith' Order By P#;"]);
    assert_eq!(stdout(&out), "P#,PNAME,QTY\nP1,Nut,300\nP2,Bolt,200\nP3,Screw,400\nP4,Screw,200\nP5,Cam,100\nP6,Cog,100\n");
    let out = db.run(&["--format", "json-lines", "query", "Select S#, STATUS From S Where S# = 'S5';"]);
    assert_eq!(stdout(&out), "{\"S#\":\"S5\",\"STATUS\":\"30\"}\n");
    let out = db.run(&["query", "Insert Into SP Values ('S7', 'P10', 200);"]);
    assert_eq!(stdout(&out), "1 row affected\n");
    let out = db.run(&["--format", "csv", "query", "Select SNAME, PCITY From SP Where S# = 'S7';"]);
    assert_eq!(stdout(&out), "SNAME,PCITY\nNULL,NULL\n");
}

#[test]
fn explain_prints_the_plan() {
    let db = Db::loaded();
    let text = stdout(&db.run(&["explain", "SP"]));
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("CREATE TABLE SP_B"));
    let text = stdout(&db.run(&["explain", "S"]));
    assert_eq!(text, "CREATE TABLE S ([S#] Char PRIMARY KEY, SNAME Char, STATUS Char, CITY Char);\n");
}

#[test]
fn check_finds_duplicate_matches() {
    let db = Db::loaded();
    let out = db.run(&["check", "SP"]);
    assert_eq!((out.status.code(), stdout(&out)), (Some(0), "ok\n".into()));
    // A second S1 row is only possible once S loses its key.
    let rebuild = "Create Table S2 (S# Char, SNAME Char, STATUS Char, CITY Char);\n\
                   Insert Into S2 Select * From S;\n\
                   Insert Into S2 Values ('S1', 'Smyth', 20, 'Leeds');\n\
                   Create Table T (S# Char Primary Key, I_S2 (Select SNAME From S2 Where T.S# = S#));\n\
                   Insert Into T Values ('S1'), ('S2');";
    assert!(db.run(&["apply", &db.script("dup.sql", rebuild)]).status.success());
    let out = db.run(&["check", "T"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout(&out), "I_S2: S# = 'S1' matches 2 rows\n");
}

#[test]
fn decompose_outputs_schemes() {
    let out = Command::new(env!("CARGO_BIN_EXE_sirsql")).args(["decompose", fixture("email.deps").to_str().unwrap()]).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("Create Table SE (EMAIL, S#, I_SP (Select SNAME, STATUS, SCITY From SP Where SE.S# = S#), Primary Key (EMAIL));"));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ok.deps");
    std::fs::write(&p, "RELATION R(A, B)\nA -> B\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sirsql")).arg("decompose").arg(&p).output().unwrap();
    assert_eq!(stdout(&out), "-- R is already in 4NF\nCreate Table R (A, B, Primary Key (A));\n");
    std::fs::write(&p, "RELATION R(A, B)\nA -> C\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sirsql")).arg("decompose").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn kernel_location_falls_back_to_the_environment() {
    let db = Db::loaded();
    let out = Command::new(env!("CARGO_BIN_EXE_sirsql")).env("SIRSQL_KERNEL", db.path()).args(["query", "Select count(*) From SP;"]).output().unwrap();
    assert!(stdout(&out).contains("12"));
    let out = Command::new(env!("CARGO_BIN_EXE_sirsql")).env_remove("SIRSQL_KERNEL").args(["query", "Select 1;"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repl_matches_one_shot() {
    let db = Db::loaded();
    let statements = ["Select S#, SNAME From SP Where QTY > 300 Order By S#;", "Update SP Set QTY = 1 Where S# = 'S3';", "Select QTY From SP Where S# = 'S3';"];
    let one_shot: String = statements.iter().map(|s| stdout(&db.run(&["query", s]))).collect();
    let other = Db::loaded();
    let mut child = Command::new(env!("CARGO_BIN_EXE_sirsql"))
        .arg("--kernel")
        .arg(other.path())
        .arg("repl")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let input = statements.join("\n").replacen("Where QTY", "\n Where QTY", 1);
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), one_shot);
}

#[test]
fn repl_dot_commands() {
    let db = Db::loaded();
    let mut child = Command::new(env!("CARGO_BIN_EXE_sirsql"))
        .arg("--kernel")
        .arg(db.path())
        .arg("repl")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b".schema\n.check SP\n.explain NOPE\n.quit\nSelect 1;\n").unwrap();
    let out = child.wait_with_output().unwrap();
    let text = stdout(&out);
    assert!(text.starts_with("CREATE TABLE S ([S#] Char PRIMARY KEY"), "{text}");
    assert!(text.ends_with("ok\n"), "{text}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown relation NOPE"));
    assert_eq!(out.status.code(), Some(1));
}
