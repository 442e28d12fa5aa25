use super::NetlistError;

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Ident(String),
    Number(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Eq,
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("`{s}`"),
            Token::Number(n) => format!("number `{n}`"),
            Token::LBrace => "`{`".into(),
            Token::RBrace => "`}`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Comma => "`,`".into(),
            Token::Semi => "`;`".into(),
            Token::Eq => "`=`".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpannedToken {
    pub token: Token,
    pub line: u32,
    pub col: u32,
}

pub fn lex(text: &str) -> Result<Vec<SpannedToken>, NetlistError> {
    let mut tokens = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = text.chars().peekable();

    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
            }
            '{' | '}' | '(' | ')' | ',' | ';' | '=' => {
                let c = bump(&mut chars);
                let token = match c {
                    '{' => Token::LBrace,
                    '}' => Token::RBrace,
                    '(' => Token::LParen,
                    ')' => Token::RParen,
                    ',' => Token::Comma,
                    ';' => Token::Semi,
                    _ => Token::Eq,
                };
                tokens.push(SpannedToken {
                    token,
                    line: tline,
                    col: tcol,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                tokens.push(SpannedToken {
                    token: Token::Ident(word),
                    line: tline,
                    col: tcol,
                });
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut word = String::new();
                word.push(bump(&mut chars));
                let mut seen_exp = false;
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        word.push(bump(&mut chars));
                    } else if (c == 'e' || c == 'E') && !seen_exp {
                        seen_exp = true;
                        word.push(bump(&mut chars));
                        if let Some(&s) = chars.peek() {
                            if s == '+' || s == '-' {
                                word.push(bump(&mut chars));
                            }
                        }
                    } else {
                        break;
                    }
                }
                let value: f64 = word.parse().map_err(|_| NetlistError::Syntax {
                    line: tline,
                    col: tcol,
                    message: format!("malformed number `{word}`"),
                    expected: vec!["number".into()],
                })?;
                tokens.push(SpannedToken {
                    token: Token::Number(value),
                    line: tline,
                    col: tcol,
                });
            }
            other => {
                return Err(NetlistError::Syntax {
                    line: tline,
                    col: tcol,
                    message: format!("unexpected character `{other}`"),
                    expected: vec![],
                });
            }
        }
    }
    Ok(tokens)
}
