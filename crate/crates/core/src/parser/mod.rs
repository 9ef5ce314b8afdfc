//! Lexer, parser and renderer for the sirsql dialect.

pub mod ast;
mod error;
mod grammar;
mod lexer;
mod render;
pub mod visit;

pub use ast::*;
pub use error::{Span, SyntaxError, SyntaxErrorKind, Warning};
pub use grammar::{is_reserved, parse, parse_expr, parse_ie, parse_script, SourceStatement};
pub use lexer::{tokenize, Token, TokenKind};
pub use render::{
    quote_ident, render_expr, render_ie, render_query, render_select_item, render_statement, Dialect, QuoteStyle,
    RenderError,
};
