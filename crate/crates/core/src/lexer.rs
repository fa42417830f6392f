//! Tokenizer shared by the PROLEG parser and the Prolog-subset reader.

use crate::ast::Pos;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    /// `<=`
    Arrow,
    /// `:-`
    Neck,
    /// `?-`
    Query,
    /// `\+`
    Not,
    Semi,
    Cut,
    /// `#name`
    Annotation(String),
    Error(String),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Var(s) => format!("variable `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Str(_) => "string".to_string(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Arrow => "`<=`".into(),
            Tok::Neck => "`:-`".into(),
            Tok::Query => "`?-`".into(),
            Tok::Not => "`\\+`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Cut => "`!`".into(),
            Tok::Annotation(a) => format!("`#{a}`"),
            Tok::Error(msg) => msg.clone(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub start: Pos,
    /// Position just past the last character.
    pub end: Pos,
}

pub(crate) fn tokenize(source: &str) -> Vec<Token> {
    Lexer { chars: source.chars().collect(), idx: 0, line: 1, column: 1 }.run()
}

struct Lexer {
    chars: Vec<char>,
    idx: usize,
    line: usize,
    column: usize,
}

impl Lexer {
    fn pos(&self) -> Pos {
        Pos { line: self.line, column: self.column }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.idx + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn run(mut self) -> Vec<Token> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '%' {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let start = self.pos();
            let Some(c) = self.peek() else {
                out.push(Token { tok: Tok::Eof, start, end: start });
                return out;
            };
            let tok = match c {
                'a'..='z' => Tok::Ident(self.word()),
                'A'..='Z' | '_' => Tok::Var(self.word()),
                '0'..='9' => self.integer(false),
                '-' if matches!(self.peek_at(1), Some('0'..='9')) => {
                    self.bump();
                    self.integer(true)
                }
                '"' => self.string(),
                '(' => self.single(Tok::LParen),
                ')' => self.single(Tok::RParen),
                ',' => self.single(Tok::Comma),
                '.' => self.single(Tok::Dot),
                ';' => self.single(Tok::Semi),
                '!' => self.single(Tok::Cut),
                '<' if self.peek_at(1) == Some('=') => self.double(Tok::Arrow),
                ':' if self.peek_at(1) == Some('-') => self.double(Tok::Neck),
                '?' if self.peek_at(1) == Some('-') => self.double(Tok::Query),
                '\\' if self.peek_at(1) == Some('+') => self.double(Tok::Not),
                '#' => {
                    self.bump();
                    let name = self.word();
                    if name.is_empty() {
                        Tok::Error("expected annotation name after `#`".into())
                    } else {
                        Tok::Annotation(name)
                    }
                }
                other => {
                    self.bump();
                    Tok::Error(format!("unexpected character `{other}`"))
                }
            };
            out.push(Token { tok, start, end: self.pos() });
        }
    }

    fn single(&mut self, tok: Tok) -> Tok {
        self.bump();
        tok
    }

    fn double(&mut self, tok: Tok) -> Tok {
        self.bump();
        self.bump();
        tok
    }

    fn integer(&mut self, negative: bool) -> Tok {
        let mut digits = String::new();
        if negative {
            digits.push('-');
        }
        while let Some(c @ '0'..='9') = self.peek() {
            digits.push(c);
            self.bump();
        }
        match digits.parse() {
            Ok(n) => Tok::Int(n),
            Err(_) => Tok::Error(format!("integer `{digits}` out of range")),
        }
    }

    fn string(&mut self) -> Tok {
        self.bump();
        let mut s = String::new();
        loop {
            match self.peek() {
                None | Some('\n') => return Tok::Error("unterminated string".into()),
                Some('"') => {
                    self.bump();
                    return Tok::Str(s);
                }
                Some('\\') => {
                    self.bump();
                    let escaped = match self.peek() {
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('r') => '\r',
                        Some('"') => '"',
                        Some('\\') => '\\',
                        _ => return Tok::Error("invalid escape in string".into()),
                    };
                    self.bump();
                    s.push(escaped);
                }
                Some(c) => {
                    s.push(c);
                    self.bump();
                }
            }
        }
    }
}
