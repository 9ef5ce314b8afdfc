//! Hand-written recursive descent parser for the sirsql dialect.

use std::collections::HashSet;

use super::ast::*;
use super::error::{Span, SyntaxError, SyntaxErrorKind, Warning};
use super::lexer::{tokenize, Token, TokenKind};

/// Words that cannot appear as bare identifiers.
pub const RESERVED: &[&str] = &[
    "ALTER", "AND", "AS", "ASC", "BETWEEN", "BY", "CASE", "CAST", "CONSTRAINT", "CREATE", "CROSS", "DELETE", "DESC",
    "DISTINCT", "DROP", "ELSE", "END", "EXISTS", "FOREIGN", "FROM", "GROUP", "HAVING", "IN", "INDEX", "INNER", "INSERT",
    "INTO", "IS", "JOIN", "LEFT", "LIKE", "LIMIT", "NOT", "NULL", "ON", "OR", "ORDER", "OUTER", "PRIMARY", "REFERENCES",
    "RIGHT", "SELECT", "SET", "TABLE", "THEN", "TOP", "UNION", "UNIQUE", "UPDATE", "VALUES", "VIEW", "WHEN", "WHERE",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

/// One parsed statement with its location and source text.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceStatement {
    pub statement: Statement,
    pub span: Span,
    /// The statement text without its terminating semicolon.
    pub text: String,
    pub warnings: Vec<Warning>,
}

/// Parses a script into statements, preserving order.
pub fn parse(source: &str) -> Result<Vec<Statement>, SyntaxError> {
    Ok(parse_script(source)?.into_iter().map(|s| s.statement).collect())
}

/// Parses a script keeping spans, statement text and warnings.
pub fn parse_script(source: &str) -> Result<Vec<SourceStatement>, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0, warnings: Vec::new() };
    let mut out = Vec::new();
    loop {
        while parser.eat(&TokenKind::Semicolon) {}
        if parser.at_eof() {
            break;
        }
        let start = parser.peek().clone();
        let statement = parser.parse_statement()?;
        let end_offset = parser.peek().offset;
        if !parser.eat(&TokenKind::Semicolon) {
            let tok = parser.peek();
            if tok.kind == TokenKind::Eof {
                return Err(SyntaxError::new(
                    SyntaxErrorKind::UnterminatedStatement,
                    tok.line,
                    tok.column,
                    tok.offset,
                ));
            }
            return Err(parser.unexpected(&[";"]));
        }
        let span = Span { start: start.offset, end: end_offset, line: start.line, column: start.column };
        out.push(SourceStatement {
            statement,
            span,
            text: source[start.offset..end_offset].trim_end().to_string(),
            warnings: std::mem::take(&mut parser.warnings),
        });
    }
    Ok(out)
}

/// Parses a single standalone expression (no trailing semicolon).
pub fn parse_expr(source: &str) -> Result<Expr, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0, warnings: Vec::new() };
    let e = parser.expr()?;
    if !parser.at_eof() {
        return Err(parser.unexpected(&["end of input"]));
    }
    Ok(e)
}

/// Parses a standalone inheritance expression such as `I_S (SELECT …)`.
pub fn parse_ie(source: &str) -> Result<IeDecl, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0, warnings: Vec::new() };
    let ie = parser.ie_decl(None)?;
    parser.eat(&TokenKind::Semicolon);
    if !parser.at_eof() {
        return Err(parser.unexpected(&["end of input"]));
    }
    Ok(ie)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    warnings: Vec<Warning>,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, n: usize) -> &TokenKind {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)].kind
    }

    fn at_eof(&self) -> bool {
        self.peek().kind == TokenKind::Eof
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: &TokenKind) -> PResult<()> {
        if self.eat(kind) {
            Ok(())
        } else {
            Err(self.unexpected(&[&kind.describe()]))
        }
    }

    fn unexpected(&self, expected: &[&str]) -> SyntaxError {
        let tok = self.peek();
        SyntaxError::new(
            SyntaxErrorKind::UnexpectedToken {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: tok.kind.describe(),
            },
            tok.line,
            tok.column,
            tok.offset,
        )
    }

    fn is_kw(kind: &TokenKind, kw: &str) -> bool {
        matches!(kind, TokenKind::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn at_kw(&self, kw: &str) -> bool {
        Self::is_kw(&self.peek().kind, kw)
    }

    fn at_kw_n(&self, n: usize, kw: &str) -> bool {
        Self::is_kw(self.peek_at(n), kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&[kw]))
        }
    }

    fn at_ident(&self) -> bool {
        Self::is_ident_token(&self.peek().kind)
    }

    fn is_ident_token(kind: &TokenKind) -> bool {
        match kind {
            TokenKind::Word(w) => !is_reserved(w),
            TokenKind::QuotedIdent(_) => true,
            _ => false,
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match &self.peek().kind {
            TokenKind::Word(w) if !is_reserved(w) => {
                let w = w.clone();
                self.bump();
                Ok(Ident::new(w))
            }
            TokenKind::QuotedIdent(w) => {
                let w = w.clone();
                self.bump();
                Ok(Ident::new(w))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn ident_list_parens(&mut self) -> PResult<Vec<Ident>> {
        self.expect(&TokenKind::LParen)?;
        let mut out = vec![self.ident()?];
        while self.eat(&TokenKind::Comma) {
            out.push(self.ident()?);
        }
        self.expect(&TokenKind::RParen)?;
        Ok(out)
    }

    fn warn(&mut self, tok: &Token, message: String) {
        self.warnings.push(Warning { line: tok.line, column: tok.column, message });
    }

    // ---- statements ----

    fn parse_statement(&mut self) -> PResult<Statement> {
        if self.at_kw("SELECT") {
            return Ok(Statement::Query(self.query()?));
        }
        if self.at_kw("CREATE") {
            self.bump();
            if self.eat_kw("TABLE") {
                return Ok(Statement::CreateTable(self.create_table()?));
            }
            if self.eat_kw("VIEW") {
                return Ok(Statement::CreateView(self.create_view()?));
            }
            let unique = self.eat_kw("UNIQUE");
            if self.eat_kw("INDEX") {
                return Ok(Statement::CreateIndex(self.create_index(unique)?));
            }
            return Err(self.unexpected(&["TABLE", "VIEW", "INDEX"]));
        }
        if self.eat_kw("ALTER") {
            self.expect_kw("TABLE")?;
            return Ok(Statement::AlterTable(self.alter_table()?));
        }
        if self.eat_kw("DROP") {
            if self.eat_kw("TABLE") {
                return Ok(Statement::DropTable(self.drop_stmt()?));
            }
            if self.eat_kw("VIEW") {
                return Ok(Statement::DropView(self.drop_stmt()?));
            }
            return Err(self.unexpected(&["TABLE", "VIEW"]));
        }
        if self.eat_kw("INSERT") {
            return Ok(Statement::Insert(self.insert()?));
        }
        if self.eat_kw("UPDATE") {
            return Ok(Statement::Update(self.update()?));
        }
        if self.eat_kw("DELETE") {
            return Ok(Statement::Delete(self.delete()?));
        }
        Err(self.unexpected(&["SELECT", "CREATE", "ALTER", "DROP", "INSERT", "UPDATE", "DELETE"]))
    }

    fn create_table(&mut self) -> PResult<CreateTable> {
        let name = self.ident()?;
        self.expect(&TokenKind::LParen)?;
        let mut elements = Vec::new();
        let mut seen: HashSet<Ident> = HashSet::new();
        loop {
            let tok = self.peek().clone();
            let element = self.table_element()?;
            for n in element_names(&element) {
                if !seen.insert(n.clone()) {
                    return Err(SyntaxError::new(
                        SyntaxErrorKind::DuplicateAttribute(n.value),
                        tok.line,
                        tok.column,
                        tok.offset,
                    ));
                }
            }
            elements.push(element);
            if self.eat(&TokenKind::Comma) || self.eat(&TokenKind::Semicolon) {
                // Some schemes separate IEs with ';' inside the list.
                if self.peek().kind == TokenKind::RParen {
                    break;
                }
                continue;
            }
            break;
        }
        self.expect(&TokenKind::RParen)?;
        Ok(CreateTable { name, elements })
    }

    fn table_element(&mut self) -> PResult<TableElement> {
        if self.at_kw("PRIMARY") {
            self.bump();
            self.expect_kw("KEY")?;
            return Ok(TableElement::Constraint(TableConstraint::PrimaryKey(self.ident_list_parens()?)));
        }
        if self.at_kw("UNIQUE") {
            self.bump();
            return Ok(TableElement::Constraint(TableConstraint::Unique(self.ident_list_parens()?)));
        }
        if self.at_kw("CONSTRAINT") {
            self.bump();
            self.ident()?;
            return self.table_element();
        }
        if self.at_kw("FOREIGN") {
            self.bump();
            self.expect_kw("KEY")?;
            let columns = self.ident_list_parens()?;
            let references = self.references()?;
            return Ok(TableElement::Constraint(TableConstraint::ForeignKey { columns, references }));
        }
        match self.new_element()? {
            NewElement::Attribute(a) => Ok(TableElement::Attribute(a)),
            NewElement::Ie(ie) => Ok(TableElement::Ie(ie)),
        }
    }

    /// A column declaration or an IE.
    fn new_element(&mut self) -> PResult<NewElement> {
        if self.peek().kind == TokenKind::LParen {
            return Ok(NewElement::Ie(self.ie_body(None)?));
        }
        let name = self.ident()?;
        if self.peek().kind == TokenKind::LParen || self.at_kw("AS") {
            return Ok(NewElement::Ie(self.ie_body(Some(name))?));
        }
        Ok(NewElement::Attribute(self.attribute_rest(name)?))
    }

    fn attribute_rest(&mut self, name: Ident) -> PResult<AttributeDecl> {
        let mut decl = AttributeDecl {
            name,
            sql_type: None,
            is_primary_key: false,
            not_null: false,
            unique: false,
            references: None,
        };
        if self.at_ident() {
            let mut ty = self.ident()?.value;
            // multi-word types such as DOUBLE PRECISION
            while self.at_ident() {
                ty.push(' ');
                ty.push_str(&self.ident()?.value);
            }
            if self.eat(&TokenKind::LParen) {
                let mut args = Vec::new();
                loop {
                    match self.bump().kind {
                        TokenKind::Number(n) => args.push(n),
                        _ => return Err(self.unexpected(&["number"])),
                    }
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                self.expect(&TokenKind::RParen)?;
                ty = format!("{ty}({})", args.join(", "));
            }
            decl.sql_type = Some(ty);
        }
        loop {
            if self.at_kw("PRIMARY") {
                self.bump();
                self.expect_kw("KEY")?;
                decl.is_primary_key = true;
            } else if self.at_kw("NOT") {
                self.bump();
                self.expect_kw("NULL")?;
                decl.not_null = true;
            } else if self.eat_kw("UNIQUE") {
                decl.unique = true;
            } else if self.at_kw("REFERENCES") {
                decl.references = Some(self.references()?);
            } else {
                break;
            }
        }
        Ok(decl)
    }

    fn references(&mut self) -> PResult<ForeignRef> {
        self.expect_kw("REFERENCES")?;
        let table = self.ident()?;
        let columns = if self.peek().kind == TokenKind::LParen { self.ident_list_parens()? } else { Vec::new() };
        Ok(ForeignRef { table, columns })
    }

    /// `[NAME] (SELECT …)`, `NAME AS (expr)` or `[NAME] (expr AS a, …)`.
    fn ie_decl(&mut self, default_name: Option<&Ident>) -> PResult<IeDecl> {
        let name = if self.peek().kind == TokenKind::LParen { default_name.cloned() } else { Some(self.ident()?) };
        self.ie_body(name)
    }

    fn ie_body(&mut self, name: Option<Ident>) -> PResult<IeDecl> {
        let ie = if self.at_kw("AS") {
            let as_tok = self.bump();
            let Some(name) = name else {
                return Err(SyntaxError::new(
                    SyntaxErrorKind::UnexpectedToken { expected: vec!["IE name".into()], found: "AS".into() },
                    as_tok.line,
                    as_tok.column,
                    as_tok.offset,
                ));
            };
            self.expect(&TokenKind::LParen)?;
            let expr = self.expr()?;
            self.expect(&TokenKind::RParen)?;
            IeDecl { name: Some(name.clone()), form: IeForm::Value(vec![NamedExpr { expr, alias: name }]) }
        } else {
            self.expect(&TokenKind::LParen)?;
            if self.at_kw("SELECT") {
                let q = self.query()?;
                self.expect(&TokenKind::RParen)?;
                IeDecl { name, form: IeForm::Select(Box::new(q)) }
            } else {
                let mut items = Vec::new();
                loop {
                    let expr = self.expr()?;
                    let alias = if self.eat_kw("AS") {
                        self.ident()?
                    } else if let Some(n) = &name {
                        n.clone()
                    } else {
                        return Err(self.unexpected(&["AS"]));
                    };
                    items.push(NamedExpr { expr, alias });
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                self.expect(&TokenKind::RParen)?;
                IeDecl { name, form: IeForm::Value(items) }
            }
        };
        // A trailing `FROM rel` after the closing parenthesis carries no meaning.
        if self.at_kw("FROM") && Self::is_ident_token(self.peek_at(1)) {
            let tok = self.bump();
            let rel = self.ident()?;
            self.warn(&tok, format!("ignoring trailing FROM {rel} after inheritance expression"));
        }
        Ok(ie)
    }

    fn create_view(&mut self) -> PResult<CreateView> {
        let name = self.ident()?;
        let columns = if self.peek().kind == TokenKind::LParen { self.ident_list_parens()? } else { Vec::new() };
        self.expect_kw("AS")?;
        let query = self.query()?;
        Ok(CreateView { name, columns, query })
    }

    fn create_index(&mut self, unique: bool) -> PResult<CreateIndex> {
        let name = self.ident()?;
        self.expect_kw("ON")?;
        let table = self.ident()?;
        let columns = self.ident_list_parens()?;
        Ok(CreateIndex { name, unique, table, columns })
    }

    fn alter_table(&mut self) -> PResult<AlterTable> {
        let name = self.ident()?;
        let mut actions = vec![self.alter_action()?];
        while self.peek().kind == TokenKind::Comma
            && (self.at_kw_n(1, "ADD") || self.at_kw_n(1, "DROP") || self.at_kw_n(1, "ALTER"))
        {
            self.bump();
            actions.push(self.alter_action()?);
        }
        Ok(AlterTable { name, actions })
    }

    fn alter_action(&mut self) -> PResult<AlterAction> {
        if self.eat_kw("ADD") {
            self.eat_kw("COLUMN");
            let position = if (self.at_kw("BEFORE") || self.at_kw("AFTER"))
                && Self::is_ident_token(self.peek_at(1))
                && (Self::is_ident_token(self.peek_at(2)) || self.peek_at(2) == &TokenKind::LParen)
            {
                let before = self.at_kw("BEFORE");
                self.bump();
                let anchor = self.ident()?;
                Some(if before { Position::Before(anchor) } else { Position::After(anchor) })
            } else {
                None
            };
            let mut elements = vec![self.new_element()?];
            while self.peek().kind == TokenKind::Comma
                && !(self.at_kw_n(1, "ADD") || self.at_kw_n(1, "DROP") || self.at_kw_n(1, "ALTER"))
            {
                self.bump();
                elements.push(self.new_element()?);
            }
            return Ok(AlterAction::Add { position, elements });
        }
        if self.eat_kw("DROP") {
            self.eat_kw("COLUMN");
            return Ok(AlterAction::Drop { name: self.ident()? });
        }
        if self.eat_kw("ALTER") {
            self.eat_kw("COLUMN");
            let target = self.ident()?;
            self.expect_kw("AS")?;
            let replacement = self.ie_decl(Some(&target))?;
            return Ok(AlterAction::Alter { target, replacement });
        }
        Err(self.unexpected(&["ADD", "DROP", "ALTER"]))
    }

    fn drop_stmt(&mut self) -> PResult<DropStmt> {
        let if_exists = if self.at_kw("IF") && self.at_kw_n(1, "EXISTS") {
            self.bump();
            self.bump();
            true
        } else {
            false
        };
        let name = self.ident()?;
        let behavior = if self.eat_kw("CASCADE") {
            Some(DropBehavior::Cascade)
        } else if self.eat_kw("RESTRICT") {
            Some(DropBehavior::Restrict)
        } else {
            None
        };
        Ok(DropStmt { name, if_exists, behavior })
    }

    fn insert(&mut self) -> PResult<Insert> {
        self.eat_kw("INTO");
        let table = self.ident()?;
        let mut columns = Vec::new();
        if self.peek().kind == TokenKind::LParen && !self.at_kw_n(1, "SELECT") {
            columns = self.ident_list_parens()?;
        }
        let source = if self.eat_kw("VALUES") {
            let mut rows = Vec::new();
            loop {
                self.expect(&TokenKind::LParen)?;
                let mut row = vec![self.expr()?];
                while self.eat(&TokenKind::Comma) {
                    row.push(self.expr()?);
                }
                self.expect(&TokenKind::RParen)?;
                rows.push(row);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            InsertSource::Values(rows)
        } else if self.peek().kind == TokenKind::LParen {
            self.bump();
            let q = self.query()?;
            self.expect(&TokenKind::RParen)?;
            InsertSource::Query(Box::new(q))
        } else if self.at_kw("SELECT") {
            InsertSource::Query(Box::new(self.query()?))
        } else {
            return Err(self.unexpected(&["VALUES", "SELECT"]));
        };
        Ok(Insert { table, columns, source })
    }

    fn update(&mut self) -> PResult<Update> {
        let table = self.ident()?;
        self.expect_kw("SET")?;
        let mut assignments = Vec::new();
        loop {
            let column = self.ident()?;
            self.expect(&TokenKind::Eq)?;
            let value = self.expr()?;
            assignments.push(Assignment { column, value });
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        let selection = if self.eat_kw("WHERE") { Some(self.expr()?) } else { None };
        Ok(Update { table, assignments, selection })
    }

    fn delete(&mut self) -> PResult<Delete> {
        self.eat_kw("FROM");
        let table = self.ident()?;
        let selection = if self.eat_kw("WHERE") { Some(self.expr()?) } else { None };
        Ok(Delete { table, selection })
    }

    // ---- queries ----

    fn query(&mut self) -> PResult<Query> {
        self.expect_kw("SELECT")?;
        let distinct = self.eat_kw("DISTINCT");
        if !distinct {
            self.eat_kw("ALL");
        }
        let mut limit = None;
        if self.eat_kw("TOP") {
            limit = Some(self.unsigned()?);
        }
        let mut items = vec![self.select_item()?];
        while self.eat(&TokenKind::Comma) {
            items.push(self.select_item()?);
        }
        let mut from = Vec::new();
        if self.eat_kw("FROM") {
            from.push(self.table_ref()?);
            while self.eat(&TokenKind::Comma) {
                from.push(self.table_ref()?);
            }
        }
        let selection = if self.eat_kw("WHERE") { Some(self.expr()?) } else { None };
        let mut group_by = Vec::new();
        if self.at_kw("GROUP") {
            self.bump();
            self.expect_kw("BY")?;
            group_by = self.expr_list()?;
        }
        let having = if self.eat_kw("HAVING") { Some(self.expr()?) } else { None };
        let order_by = self.order_by_clause()?;
        if self.eat_kw("LIMIT") {
            limit = Some(self.unsigned()?);
        }
        Ok(Query { select: Select { distinct, items, from, selection, group_by, having }, order_by, limit })
    }

    fn order_by_clause(&mut self) -> PResult<Vec<OrderItem>> {
        let mut order_by = Vec::new();
        if self.at_kw("ORDER") {
            self.bump();
            self.expect_kw("BY")?;
            loop {
                let expr = self.expr()?;
                let descending = if self.eat_kw("DESC") {
                    true
                } else {
                    self.eat_kw("ASC");
                    false
                };
                order_by.push(OrderItem { expr, descending });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        Ok(order_by)
    }

    fn unsigned(&mut self) -> PResult<u64> {
        let tok = self.peek().clone();
        match &tok.kind {
            TokenKind::Number(n) => {
                let v = n.parse::<u64>().map_err(|_| {
                    SyntaxError::new(SyntaxErrorKind::InvalidNumber(n.clone()), tok.line, tok.column, tok.offset)
                })?;
                self.bump();
                Ok(v)
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }

    fn expr_list(&mut self) -> PResult<Vec<Expr>> {
        let mut out = vec![self.expr()?];
        while self.eat(&TokenKind::Comma) {
            out.push(self.expr()?);
        }
        Ok(out)
    }

    fn select_item(&mut self) -> PResult<SelectItem> {
        if self.peek().kind == TokenKind::Star {
            self.bump();
            if self.eat(&TokenKind::Slash) {
                let excluded = if self.peek().kind == TokenKind::LParen {
                    self.bump();
                    let mut cols = vec![self.column_ref()?];
                    while self.eat(&TokenKind::Comma) {
                        cols.push(self.column_ref()?);
                    }
                    self.expect(&TokenKind::RParen)?;
                    cols
                } else {
                    vec![self.column_ref()?]
                };
                return Ok(SelectItem::StarMinus { excluded });
            }
            return Ok(SelectItem::Wildcard);
        }
        if self.at_ident() && self.peek_at(1) == &TokenKind::Dot && self.peek_at(2) == &TokenKind::Star {
            let q = self.ident()?;
            self.bump();
            self.bump();
            return Ok(SelectItem::QualifiedWildcard(q));
        }
        let expr = self.expr()?;
        let alias = if self.eat_kw("AS") || self.at_ident() { Some(self.ident()?) } else { None };
        Ok(SelectItem::Expr { expr, alias })
    }

    fn column_ref(&mut self) -> PResult<ColumnRef> {
        let first = self.ident()?;
        if self.eat(&TokenKind::Dot) {
            let name = self.ident()?;
            Ok(ColumnRef { qualifier: Some(first), name })
        } else {
            Ok(ColumnRef { qualifier: None, name: first })
        }
    }

    fn table_ref(&mut self) -> PResult<TableRef> {
        let mut left = self.table_primary()?;
        loop {
            let kind = if self.at_kw("JOIN") {
                self.bump();
                JoinKind::Inner
            } else if self.at_kw("INNER") {
                self.bump();
                self.expect_kw("JOIN")?;
                JoinKind::Inner
            } else if self.at_kw("LEFT") || self.at_kw("RIGHT") {
                let left_join = self.at_kw("LEFT");
                self.bump();
                self.eat_kw("OUTER");
                self.expect_kw("JOIN")?;
                if left_join {
                    JoinKind::Left
                } else {
                    JoinKind::Right
                }
            } else if self.at_kw("CROSS") {
                self.bump();
                self.expect_kw("JOIN")?;
                JoinKind::Cross
            } else {
                break;
            };
            let right = self.table_primary()?;
            let on = if kind != JoinKind::Cross {
                self.expect_kw("ON")?;
                Some(self.expr()?)
            } else {
                None
            };
            left = TableRef::Join { left: Box::new(left), kind, right: Box::new(right), on };
        }
        Ok(left)
    }

    fn table_primary(&mut self) -> PResult<TableRef> {
        if self.peek().kind == TokenKind::LParen {
            self.bump();
            if self.at_kw("SELECT") {
                let q = self.query()?;
                self.expect(&TokenKind::RParen)?;
                self.eat_kw("AS");
                let alias = self.ident()?;
                return Ok(TableRef::Derived { query: Box::new(q), alias });
            }
            let inner = self.table_ref()?;
            self.expect(&TokenKind::RParen)?;
            return Ok(TableRef::Nested(Box::new(inner)));
        }
        let name = self.ident()?;
        let alias = if self.eat_kw("AS") || self.at_ident() { Some(self.ident()?) } else { None };
        Ok(TableRef::Named { name, alias })
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut left = self.and_expr()?;
        while self.eat_kw("OR") {
            let right = self.and_expr()?;
            left = Expr::binary(left, BinaryOp::Or, right);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut left = self.not_expr()?;
        while self.eat_kw("AND") {
            let right = self.not_expr()?;
            left = Expr::binary(left, BinaryOp::And, right);
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.at_kw("NOT") && !self.at_kw_n(1, "EXISTS") {
            self.bump();
            let e = self.not_expr()?;
            return Ok(Expr::Unary { op: UnaryOp::Not, expr: Box::new(e) });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.additive()?;
        let op = match self.peek().kind {
            TokenKind::Eq => Some(BinaryOp::Eq),
            TokenKind::NotEq => Some(BinaryOp::NotEq),
            TokenKind::Lt => Some(BinaryOp::Lt),
            TokenKind::LtEq => Some(BinaryOp::LtEq),
            TokenKind::Gt => Some(BinaryOp::Gt),
            TokenKind::GtEq => Some(BinaryOp::GtEq),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let right = self.additive()?;
            return Ok(Expr::binary(left, op, right));
        }
        if self.at_kw("IS") {
            self.bump();
            let negated = self.eat_kw("NOT");
            self.expect_kw("NULL")?;
            return Ok(Expr::IsNull { expr: Box::new(left), negated });
        }
        let negated = if self.at_kw("NOT")
            && (self.at_kw_n(1, "LIKE") || self.at_kw_n(1, "IN") || self.at_kw_n(1, "BETWEEN"))
        {
            self.bump();
            true
        } else {
            false
        };
        if self.eat_kw("LIKE") {
            let pattern = self.additive()?;
            return Ok(Expr::Like { expr: Box::new(left), pattern: Box::new(pattern), negated });
        }
        if self.eat_kw("BETWEEN") {
            let low = self.additive()?;
            self.expect_kw("AND")?;
            let high = self.additive()?;
            return Ok(Expr::Between { expr: Box::new(left), low: Box::new(low), high: Box::new(high), negated });
        }
        if self.eat_kw("IN") {
            self.expect(&TokenKind::LParen)?;
            if self.at_kw("SELECT") {
                let q = self.query()?;
                self.expect(&TokenKind::RParen)?;
                return Ok(Expr::InSubquery { expr: Box::new(left), query: Box::new(q), negated });
            }
            let list = self.expr_list()?;
            self.expect(&TokenKind::RParen)?;
            return Ok(Expr::InList { expr: Box::new(left), list, negated });
        }
        if negated {
            return Err(self.unexpected(&["LIKE", "IN", "BETWEEN"]));
        }
        Ok(left)
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut left = self.multiplicative()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                TokenKind::Concat => BinaryOp::Concat,
                _ => break,
            };
            self.bump();
            let right = self.multiplicative()?;
            left = Expr::binary(left, op, right);
        }
        Ok(left)
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                TokenKind::Percent => BinaryOp::Mod,
                _ => break,
            };
            self.bump();
            let right = self.unary()?;
            left = Expr::binary(left, op, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek().kind {
            TokenKind::Minus => {
                self.bump();
                Ok(Expr::Unary { op: UnaryOp::Neg, expr: Box::new(self.unary()?) })
            }
            TokenKind::Plus => {
                self.bump();
                Ok(Expr::Unary { op: UnaryOp::Plus, expr: Box::new(self.unary()?) })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        match &tok.kind {
            TokenKind::Number(n) => {
                self.bump();
                Ok(Expr::Literal(Literal::Number(n.clone())))
            }
            TokenKind::String(s) => {
                self.bump();
                Ok(Expr::Literal(Literal::String(s.clone())))
            }
            TokenKind::LParen => {
                self.bump();
                if self.at_kw("SELECT") {
                    let q = self.query()?;
                    self.expect(&TokenKind::RParen)?;
                    return Ok(Expr::Subquery(Box::new(q)));
                }
                let e = self.expr()?;
                self.expect(&TokenKind::RParen)?;
                Ok(Expr::Nested(Box::new(e)))
            }
            TokenKind::Word(w) if w.eq_ignore_ascii_case("NULL") => {
                self.bump();
                Ok(Expr::Literal(Literal::Null))
            }
            TokenKind::Word(w) if w.eq_ignore_ascii_case("EXISTS") => {
                self.bump();
                self.expect(&TokenKind::LParen)?;
                let q = self.query()?;
                self.expect(&TokenKind::RParen)?;
                Ok(Expr::Exists(Box::new(q)))
            }
            TokenKind::Word(w) if w.eq_ignore_ascii_case("NOT") && self.at_kw_n(1, "EXISTS") => {
                self.bump();
                let e = self.primary()?;
                Ok(Expr::Unary { op: UnaryOp::Not, expr: Box::new(e) })
            }
            TokenKind::Word(w) if w.eq_ignore_ascii_case("CASE") => {
                self.bump();
                self.case_expr()
            }
            TokenKind::Word(w) if w.eq_ignore_ascii_case("CAST") => {
                self.bump();
                self.expect(&TokenKind::LParen)?;
                let e = self.expr()?;
                self.expect_kw("AS")?;
                let mut ty = self.ident()?.value;
                if self.eat(&TokenKind::LParen) {
                    let mut args = Vec::new();
                    loop {
                        match self.bump().kind {
                            TokenKind::Number(n) => args.push(n),
                            _ => return Err(self.unexpected(&["number"])),
                        }
                        if !self.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                    self.expect(&TokenKind::RParen)?;
                    ty = format!("{ty}({})", args.join(", "));
                }
                self.expect(&TokenKind::RParen)?;
                Ok(Expr::Cast { expr: Box::new(e), type_name: ty })
            }
            // Function names may collide with reserved words only for LEFT/RIGHT.
            TokenKind::Word(w)
                if self.peek_at(1) == &TokenKind::LParen
                    && (!is_reserved(w) || w.eq_ignore_ascii_case("LEFT") || w.eq_ignore_ascii_case("RIGHT")) =>
            {
                let name = Ident::new(w.clone());
                self.bump();
                self.function_call(name)
            }
            _ if self.at_ident() => Ok(Expr::Column(self.column_ref()?)),
            _ => Err(self.unexpected(&["expression"])),
        }
    }

    fn function_call(&mut self, name: Ident) -> PResult<Expr> {
        self.expect(&TokenKind::LParen)?;
        let mut args = Vec::new();
        let mut distinct = false;
        let mut star = false;
        if self.peek().kind == TokenKind::Star {
            self.bump();
            star = true;
        } else if self.peek().kind != TokenKind::RParen {
            distinct = self.eat_kw("DISTINCT");
            args = self.expr_list()?;
        }
        let order_by = self.order_by_clause()?;
        self.expect(&TokenKind::RParen)?;
        Ok(Expr::Function { name, args, distinct, star, order_by })
    }

    fn case_expr(&mut self) -> PResult<Expr> {
        let operand = if self.at_kw("WHEN") { None } else { Some(Box::new(self.expr()?)) };
        let mut branches = Vec::new();
        while self.eat_kw("WHEN") {
            let cond = self.expr()?;
            self.expect_kw("THEN")?;
            let result = self.expr()?;
            branches.push((cond, result));
        }
        if branches.is_empty() {
            return Err(self.unexpected(&["WHEN"]));
        }
        let else_result = if self.eat_kw("ELSE") { Some(Box::new(self.expr()?)) } else { None };
        self.expect_kw("END")?;
        Ok(Expr::Case { operand, branches, else_result })
    }
}

/// Attribute (and IE) names an element introduces, for duplicate detection.
fn element_names(element: &TableElement) -> Vec<Ident> {
    match element {
        TableElement::Attribute(a) => vec![a.name.clone()],
        TableElement::Constraint(_) => Vec::new(),
        TableElement::Ie(ie) => {
            let mut names: Vec<Ident> = match &ie.form {
                IeForm::Value(items) => items.iter().map(|i| i.alias.clone()).collect(),
                IeForm::Select(q) => q
                    .select
                    .items
                    .iter()
                    .filter_map(|item| match item {
                        SelectItem::Expr { alias: Some(a), .. } => Some(a.clone()),
                        SelectItem::Expr { expr: Expr::Column(c), alias: None } => Some(c.name.clone()),
                        _ => None,
                    })
                    .collect(),
            };
            // The IE name shares the namespace unless it names its own single attribute.
            if let Some(n) = &ie.name {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
            names
        }
    }
}
