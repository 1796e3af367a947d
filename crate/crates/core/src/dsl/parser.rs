//! Recursive-descent parser with panic-mode recovery. Produces an unresolved
//! syntax tree; id resolution and semantic checks happen in `lower`.

use super::lexer::{Tok, Token};
use super::{ParseError, SourceSpan, KEYWORDS};

#[derive(Debug, Clone)]
pub(crate) struct Spanned<T> {
    pub value: T,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub(crate) enum Ref {
    Start,
    End,
    Child(String),
}

#[derive(Debug, Clone)]
pub(crate) struct RawEdge {
    pub from: Spanned<Ref>,
    pub to: Spanned<Ref>,
}

#[derive(Debug, Clone)]
pub(crate) enum RawKind {
    Act {
        label: Spanned<String>,
        pool: Spanned<String>,
        lane: Spanned<String>,
    },
    Silent,
    Po {
        children: Vec<RawNode>,
        order: Vec<RawEdge>,
    },
    Choice {
        children: Vec<RawNode>,
        edges: Vec<RawEdge>,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct RawNode {
    pub id: Option<Spanned<String>>,
    pub kind: RawKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub(crate) struct RawProgram {
    pub name: String,
    pub root: RawNode,
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    errors: Vec<ParseError>,
}

type PResult<T> = Result<T, ()>;

const NODE_KEYWORDS: &[&str] = &["act", "tau", "po", "choice"];

impl<'a> Parser<'a> {
    fn peek(&self) -> &'a Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> &'a Token {
        let t = self.peek();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(x) if x == w)
    }

    fn at_node_start(&self) -> bool {
        NODE_KEYWORDS.iter().any(|k| self.at_word(k))
    }

    fn error(&mut self, message: impl Into<String>, expected: &[&str]) {
        let tok = self.peek();
        let mut message = message.into();
        if message.is_empty() {
            message = format!("unexpected {}", tok.tok.describe());
        }
        self.errors.push(ParseError::new(
            tok.span,
            message,
            expected.iter().map(|s| s.to_string()).collect(),
        ));
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<SourceSpan> {
        if self.peek().tok == tok {
            Ok(self.advance().span)
        } else {
            self.error("", &[what]);
            Err(())
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<SourceSpan> {
        if self.at_word(w) {
            Ok(self.advance().span)
        } else {
            self.error("", &[&format!("'{w}'")]);
            Err(())
        }
    }

    fn expect_string(&mut self, what: &str) -> PResult<Spanned<String>> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let span = self.advance().span;
                Ok(Spanned {
                    value: s.clone(),
                    span,
                })
            }
            _ => {
                self.error("", &[what]);
                Err(())
            }
        }
    }

    fn identifier(&self) -> Option<&'a str> {
        match &self.peek().tok {
            Tok::Word(w) if !KEYWORDS.contains(&w.as_str()) => Some(w),
            _ => None,
        }
    }

    fn expect_id(&mut self) -> PResult<Spanned<String>> {
        if let Some(w) = self.identifier() {
            let span = self.advance().span;
            return Ok(Spanned {
                value: w.to_string(),
                span,
            });
        }
        match &self.peek().tok {
            Tok::Word(w) => {
                let msg = format!("'{w}' is a keyword and cannot be used as an id");
                self.error(msg, &["identifier"]);
            }
            _ => self.error("", &["identifier"]),
        }
        Err(())
    }

    /// Skips to the next token that can resume a node list.
    fn synchronize(&mut self) {
        loop {
            match &self.peek().tok {
                Tok::Eof | Tok::RBrace => return,
                Tok::Word(w) if NODE_KEYWORDS.contains(&w.as_str()) || w == "order" || w == "edges" => {
                    return
                }
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn program(&mut self) -> PResult<RawProgram> {
        self.expect_word("process")?;
        let name = self.expect_string("process name string")?;
        self.expect(Tok::LBrace, "'{'")?;
        let root = self.node();
        if self.peek().tok != Tok::RBrace {
            self.error("a process contains exactly one root node", &["'}'"]);
            self.synchronize();
            while self.peek().tok != Tok::Eof && self.peek().tok != Tok::RBrace {
                let _ = self.node();
            }
        }
        self.expect(Tok::RBrace, "'}'")?;
        if self.peek().tok != Tok::Eof {
            self.error("unexpected input after the process block", &["end of input"]);
            return Err(());
        }
        Ok(RawProgram {
            name: name.value,
            root: root?,
        })
    }

    fn node(&mut self) -> PResult<RawNode> {
        let result = if self.at_word("act") {
            self.act()
        } else if self.at_word("tau") {
            self.silent()
        } else if self.at_word("po") {
            self.operator(false)
        } else if self.at_word("choice") {
            self.operator(true)
        } else {
            self.error("", &["'act'", "'tau'", "'po'", "'choice'"]);
            self.advance();
            Err(())
        };
        if result.is_err() {
            self.synchronize();
        }
        result
    }

    fn act(&mut self) -> PResult<RawNode> {
        let start = self.advance().span;
        let id = if self.identifier().is_some() {
            Some(self.expect_id()?)
        } else {
            None
        };
        if id.is_none() && matches!(self.peek().tok, Tok::Word(_)) {
            self.expect_id()?;
        }
        let label = self.expect_string("activity label string")?;
        self.expect(Tok::At, "'@'")?;
        let pool = self.expect_string("pool name string")?;
        self.expect(Tok::Slash, "'/'")?;
        let lane = self.expect_string("lane name string")?;
        Ok(RawNode {
            id,
            span: start.to(lane.span),
            kind: RawKind::Act { label, pool, lane },
        })
    }

    fn silent(&mut self) -> PResult<RawNode> {
        let start = self.advance().span;
        let id = if self.identifier().is_some() {
            Some(self.expect_id()?)
        } else {
            None
        };
        Ok(RawNode {
            span: id.as_ref().map_or(start, |i| start.to(i.span)),
            id,
            kind: RawKind::Silent,
        })
    }

    fn operator(&mut self, choice: bool) -> PResult<RawNode> {
        let start = self.advance().span;
        let id = self.expect_id()?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut children = Vec::new();
        let mut failed = false;
        while self.at_node_start() {
            match self.node() {
                Ok(n) => children.push(n),
                Err(()) => failed = true,
            }
        }
        // junk between children: report once, then resume
        while !matches!(self.peek().tok, Tok::RBrace | Tok::Eof) && !self.at_word("order") && !self.at_word("edges") {
            let _ = self.node();
            failed = true;
            while self.at_node_start() {
                match self.node() {
                    Ok(n) => children.push(n),
                    Err(()) => failed = true,
                }
            }
        }
        if children.is_empty() && !failed {
            self.error("an operator needs at least one child", &["'act'", "'tau'", "'po'", "'choice'"]);
            failed = true;
        }
        let block = if choice { "edges" } else { "order" };
        let edges = if self.at_word(block) {
            self.advance();
            self.edge_block(choice)?
        } else if choice {
            self.error("a choice needs an edges block", &["'edges'"]);
            return Err(());
        } else {
            Vec::new()
        };
        let end = self.expect(Tok::RBrace, "'}'")?;
        if failed {
            return Err(());
        }
        let kind = if choice {
            RawKind::Choice { children, edges }
        } else {
            RawKind::Po {
                children,
                order: edges,
            }
        };
        Ok(RawNode {
            id: Some(id),
            kind,
            span: start.to(end),
        })
    }

    fn edge_block(&mut self, choice: bool) -> PResult<Vec<RawEdge>> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut edges = Vec::new();
        let mut failed = false;
        while !matches!(self.peek().tok, Tok::RBrace | Tok::Eof) {
            match self.edge(choice) {
                Ok(e) => edges.push(e),
                Err(()) => {
                    failed = true;
                    // resume at the next plausible edge start
                    while !matches!(self.peek().tok, Tok::RBrace | Tok::Eof | Tok::Word(_)) {
                        self.advance();
                    }
                }
            }
        }
        self.expect(Tok::RBrace, "'}'")?;
        if failed {
            Err(())
        } else {
            Ok(edges)
        }
    }

    fn edge_end(&mut self, choice: bool, source: bool) -> PResult<Spanned<Ref>> {
        let special = if source { "start" } else { "end" };
        if choice && self.at_word(special) {
            let span = self.advance().span;
            let value = if source { Ref::Start } else { Ref::End };
            return Ok(Spanned { value, span });
        }
        if self.identifier().is_some() {
            let id = self.expect_id()?;
            return Ok(Spanned {
                value: Ref::Child(id.value),
                span: id.span,
            });
        }
        let expected: &[&str] = if choice {
            if source {
                &["child id", "'start'"]
            } else {
                &["child id", "'end'"]
            }
        } else {
            &["child id"]
        };
        self.error("", expected);
        self.advance();
        Err(())
    }

    fn edge(&mut self, choice: bool) -> PResult<RawEdge> {
        let from = self.edge_end(choice, true)?;
        self.expect(Tok::Arrow, "'->'")?;
        let to = self.edge_end(choice, false)?;
        Ok(RawEdge { from, to })
    }
}

pub(crate) fn parse_program(tokens: &[Token]) -> (Option<RawProgram>, Vec<ParseError>) {
    let mut p = Parser {
        tokens,
        pos: 0,
        errors: Vec::new(),
    };
    let program = p.program().ok();
    (program, p.errors)
}
