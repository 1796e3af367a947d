use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Word(String),
    Str(String),
    LBrace,
    RBrace,
    At,
    Slash,
    Arrow,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Str(_) => "string".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::At => "'@'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
    last: (usize, usize),
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.last = (self.line, self.col);
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> (usize, usize) {
        (self.line, self.col)
    }
}

/// Span from `start` to the last consumed character, inclusive.
fn span(start: (usize, usize), last: (usize, usize)) -> SourceSpan {
    SourceSpan {
        start_line: start.0,
        start_col: start.1,
        end_line: last.0,
        end_col: last.1,
    }
}

fn is_word_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(text: &str) -> (Vec<Token>, Vec<ParseError>) {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
        last: (1, 1),
    };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    while let Some(c) = cur.peek() {
        let start = cur.pos();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let tok = match c {
            '{' => {
                cur.bump();
                Tok::LBrace
            }
            '}' => {
                cur.bump();
                Tok::RBrace
            }
            '@' => {
                cur.bump();
                Tok::At
            }
            '/' => {
                cur.bump();
                Tok::Slash
            }
            '-' => {
                cur.bump();
                if cur.peek() == Some('>') {
                    cur.bump();
                    Tok::Arrow
                } else {
                    errors.push(ParseError::new(span(start, cur.last), "stray '-'", vec!["'->'".into()]));
                    continue;
                }
            }
            '"' => {
                cur.bump();
                match lex_string(&mut cur) {
                    Ok(s) => Tok::Str(s),
                    Err(msg) => {
                        errors.push(ParseError::new(span(start, cur.last), msg, vec![]));
                        continue;
                    }
                }
            }
            c if is_word_start(c) => {
                let mut w = String::new();
                while let Some(c) = cur.peek().filter(|&c| is_word_char(c)) {
                    w.push(c);
                    cur.bump();
                }
                Tok::Word(w)
            }
            other => {
                cur.bump();
                errors.push(ParseError::new(
                    span(start, cur.last),
                    format!("unexpected character {other:?}"),
                    vec![],
                ));
                continue;
            }
        };
        tokens.push(Token {
            tok,
            span: span(start, cur.last),
        });
    }
    let end = cur.pos();
    tokens.push(Token {
        tok: Tok::Eof,
        span: SourceSpan {
            start_line: end.0,
            start_col: end.1,
            end_line: end.0,
            end_col: end.1,
        },
    });
    (tokens, errors)
}

fn lex_string(cur: &mut Cursor<'_>) -> Result<String, String> {
    let mut out = String::new();
    loop {
        match cur.bump() {
            None => return Err("unterminated string".into()),
            Some('"') => return Ok(out),
            Some('\n') => return Err("unterminated string (newline inside string)".into()),
            Some('\\') => match cur.bump() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => {
                    // keep scanning so the rest of the string is consumed
                    while let Some(c) = cur.bump() {
                        if c == '"' || c == '\n' {
                            break;
                        }
                    }
                    return Err(format!("unknown escape '\\{other}'"));
                }
                None => return Err("unterminated string".into()),
            },
            Some(c) => out.push(c),
        }
    }
}
