use serde::{Deserialize, Serialize};

use super::lexer::{lex, SpannedToken, Token};
use super::NetlistError;
use crate::circuit::ElementKind;

/// Source position (1-based line and column).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    Number(f64),
    Poly { var: String, coeffs: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementNode {
    pub kind: ElementKind,
    pub key: String,
    pub value: ParamValue,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DriveForm {
    Zero,
    Const(f64),
    Sin { amp: f64, omega: f64, phase: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Item {
    Element(ElementNode),
    Parallel {
        first: ElementNode,
        second: ElementNode,
        span: Span,
    },
    Drive {
        form: DriveForm,
        span: Span,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetlistAst {
    pub items: Vec<Item>,
    pub span: Span,
}

struct Parser {
    tokens: Vec<SpannedToken>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&SpannedToken> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> Span {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| Span {
                line: t.line,
                col: t.col,
            })
            .unwrap_or(Span { line: 1, col: 1 })
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> NetlistError {
        let span = self.here();
        NetlistError::Syntax {
            line: span.line,
            col: span.col,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => format!("found {}", t.token.describe()),
            None => "found end of input".into(),
        }
    }

    fn next(&mut self) -> Option<SpannedToken> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, token: Token, expected: &str) -> Result<Span, NetlistError> {
        match self.peek() {
            Some(t) if t.token == token => {
                let span = Span {
                    line: t.line,
                    col: t.col,
                };
                self.pos += 1;
                Ok(span)
            }
            _ => Err(self.error(self.found(), &[expected])),
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Result<Span, NetlistError> {
        match self.peek() {
            Some(t) if t.token == Token::Ident(word.to_string()) => {
                let span = Span {
                    line: t.line,
                    col: t.col,
                };
                self.pos += 1;
                Ok(span)
            }
            _ => Err(self.error(self.found(), &[word])),
        }
    }

    fn expect_ident(&mut self, expected: &str) -> Result<(String, Span), NetlistError> {
        match self.peek() {
            Some(SpannedToken {
                token: Token::Ident(word),
                line,
                col,
            }) => {
                let out = (
                    word.clone(),
                    Span {
                        line: *line,
                        col: *col,
                    },
                );
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.error(self.found(), &[expected])),
        }
    }

    fn expect_number(&mut self) -> Result<f64, NetlistError> {
        match self.peek() {
            Some(SpannedToken {
                token: Token::Number(v),
                ..
            }) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error(self.found(), &["number"])),
        }
    }
}

const ITEM_EXPECTED: &[&str] = &["L", "C", "R", "M", "parallel", "drive"];

/// Parse a netlist into an AST with source spans on every node.
pub fn parse(text: &str) -> Result<NetlistAst, NetlistError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let span = p.expect_keyword("circuit")?;
    p.expect(Token::LBrace, "{")?;

    let mut items = Vec::new();
    loop {
        match p.peek() {
            Some(SpannedToken {
                token: Token::RBrace,
                ..
            }) => {
                p.next();
                break;
            }
            Some(SpannedToken {
                token: Token::Ident(word),
                ..
            }) => {
                let word = word.clone();
                match word.as_str() {
                    "L" | "C" | "R" | "M" => items.push(Item::Element(p.parse_element()?)),
                    "parallel" => items.push(p.parse_parallel()?),
                    "drive" => items.push(p.parse_drive()?),
                    _ => return Err(p.error(p.found(), ITEM_EXPECTED)),
                }
            }
            _ => return Err(p.error(p.found(), ITEM_EXPECTED)),
        }
    }
    if let Some(t) = p.peek() {
        return Err(NetlistError::Syntax {
            line: t.line,
            col: t.col,
            message: format!("trailing input after circuit: found {}", t.token.describe()),
            expected: vec![],
        });
    }

    validate_structure(&items, span)?;
    Ok(NetlistAst { items, span })
}

impl Parser {
    fn parse_element(&mut self) -> Result<ElementNode, NetlistError> {
        let (word, span) = self.expect_ident("element kind")?;
        let kind = match word.as_str() {
            "L" => ElementKind::Inductor,
            "C" => ElementKind::Capacitor,
            "R" => ElementKind::Resistor,
            "M" => ElementKind::Memristor,
            _ => {
                return Err(NetlistError::Syntax {
                    line: span.line,
                    col: span.col,
                    message: format!("unknown element `{word}`"),
                    expected: vec!["L".into(), "C".into(), "R".into(), "M".into()],
                })
            }
        };
        self.expect(Token::LBrace, "{")?;
        let mut params = Vec::new();
        loop {
            let (key, key_span) = self.expect_ident("parameter name")?;
            self.expect(Token::Eq, "=")?;
            let value = self.parse_param_value()?;
            params.push((key, key_span, value));
            if matches!(
                self.peek(),
                Some(SpannedToken {
                    token: Token::Comma,
                    ..
                })
            ) {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Token::RBrace, "}")?;
        if params.len() != 1 {
            return Err(NetlistError::Syntax {
                line: span.line,
                col: span.col,
                message: format!(
                    "element `{word}` takes exactly one parameter, found {}",
                    params.len()
                ),
                expected: vec![],
            });
        }
        let (key, key_span, value) = params.pop().unwrap();

        let allowed: &[&str] = match kind {
            ElementKind::Inductor => &["L0", "L"],
            ElementKind::Capacitor => &["C0", "VC"],
            ElementKind::Resistor => &["R"],
            ElementKind::Memristor => &["M"],
        };
        if !allowed.contains(&key.as_str()) {
            return Err(NetlistError::Syntax {
                line: key_span.line,
                col: key_span.col,
                message: format!("unknown parameter `{key}` for element `{word}`"),
                expected: allowed.iter().map(|s| s.to_string()).collect(),
            });
        }
        // L0/C0 take numbers; L/VC/R/M take polynomial literals in the
        // element's natural variable.
        let numeric_key = matches!(key.as_str(), "L0" | "C0");
        match (&value, numeric_key) {
            (ParamValue::Number(_), true) | (ParamValue::Poly { .. }, false) => {}
            (ParamValue::Number(_), false) => {
                return Err(NetlistError::Syntax {
                    line: key_span.line,
                    col: key_span.col,
                    message: format!("parameter `{key}` takes a polynomial literal"),
                    expected: vec!["poly".into()],
                })
            }
            (ParamValue::Poly { .. }, true) => {
                return Err(NetlistError::Syntax {
                    line: key_span.line,
                    col: key_span.col,
                    message: format!("parameter `{key}` takes a number"),
                    expected: vec!["number".into()],
                })
            }
        }
        if let ParamValue::Poly { var, .. } = &value {
            let want = match kind {
                ElementKind::Inductor | ElementKind::Resistor => "I",
                ElementKind::Capacitor | ElementKind::Memristor => "q",
            };
            if var != want {
                return Err(NetlistError::Syntax {
                    line: key_span.line,
                    col: key_span.col,
                    message: format!("polynomial variable must be `{want}`, found `{var}`"),
                    expected: vec![want.into()],
                });
            }
        }
        Ok(ElementNode {
            kind,
            key,
            value,
            span,
        })
    }

    fn parse_param_value(&mut self) -> Result<ParamValue, NetlistError> {
        match self.peek() {
            Some(SpannedToken {
                token: Token::Number(_),
                ..
            }) => Ok(ParamValue::Number(self.expect_number()?)),
            Some(SpannedToken {
                token: Token::Ident(word),
                ..
            }) if word == "poly" => {
                self.next();
                self.expect(Token::LParen, "(")?;
                let (var, _) = self.expect_ident("variable name")?;
                self.expect(Token::Semi, ";")?;
                let mut coeffs = vec![self.expect_number()?];
                while matches!(
                    self.peek(),
                    Some(SpannedToken {
                        token: Token::Comma,
                        ..
                    })
                ) {
                    self.next();
                    coeffs.push(self.expect_number()?);
                }
                self.expect(Token::RParen, ")")?;
                Ok(ParamValue::Poly { var, coeffs })
            }
            _ => Err(self.error(self.found(), &["number", "poly"])),
        }
    }

    fn parse_parallel(&mut self) -> Result<Item, NetlistError> {
        let span = self.expect_keyword("parallel")?;
        self.expect(Token::LBrace, "{")?;
        let first = self.parse_element()?;
        let second = self.parse_element()?;
        self.expect(Token::RBrace, "}")?;
        Ok(Item::Parallel {
            first,
            second,
            span,
        })
    }

    fn parse_drive(&mut self) -> Result<Item, NetlistError> {
        let span = self.expect_keyword("drive")?;
        self.expect(Token::LBrace, "{")?;
        let (word, wspan) = self.expect_ident("drive form")?;
        let form = match word.as_str() {
            "zero" => DriveForm::Zero,
            "const" => {
                self.expect(Token::LParen, "(")?;
                let v = self.expect_number()?;
                self.expect(Token::RParen, ")")?;
                DriveForm::Const(v)
            }
            "sin" => {
                self.expect(Token::LParen, "(")?;
                let amp = self.parse_named_number("amp")?;
                self.expect(Token::Comma, ",")?;
                let omega = self.parse_named_number("omega")?;
                self.expect(Token::Comma, ",")?;
                let phase = self.parse_named_number("phase")?;
                self.expect(Token::RParen, ")")?;
                DriveForm::Sin { amp, omega, phase }
            }
            _ => {
                return Err(NetlistError::Syntax {
                    line: wspan.line,
                    col: wspan.col,
                    message: format!("unknown drive form `{word}`"),
                    expected: vec!["zero".into(), "const".into(), "sin".into()],
                })
            }
        };
        self.expect(Token::RBrace, "}")?;
        Ok(Item::Drive { form, span })
    }

    fn parse_named_number(&mut self, name: &str) -> Result<f64, NetlistError> {
        self.expect_keyword(name)?;
        self.expect(Token::Eq, "=")?;
        self.expect_number()
    }
}

fn validate_structure(items: &[Item], circuit_span: Span) -> Result<(), NetlistError> {
    let mut inductors = 0usize;
    let mut element_count = 0usize;
    let mut capacitor: Option<Span> = None;
    let mut drive: Option<Span> = None;
    let mut parallel: Option<Span> = None;

    for item in items {
        match item {
            Item::Element(el) => {
                element_count += 1;
                match el.kind {
                    ElementKind::Inductor => {
                        if inductors > 0 {
                            return Err(structure(el.span, "duplicate inductor"));
                        }
                        inductors += 1;
                    }
                    ElementKind::Capacitor => {
                        if capacitor.is_some() {
                            return Err(structure(el.span, "duplicate capacitor"));
                        }
                        capacitor = Some(el.span);
                    }
                    _ => {}
                }
            }
            Item::Parallel {
                first,
                second,
                span,
            } => {
                element_count += 2;
                if parallel.is_some() {
                    return Err(structure(*span, "duplicate parallel dissipator"));
                }
                parallel = Some(*span);
                let kinds = [first.kind, second.kind];
                let has_r = kinds.contains(&ElementKind::Resistor);
                let has_m = kinds.contains(&ElementKind::Memristor);
                if !(has_r && has_m) {
                    return Err(structure(
                        *span,
                        "parallel dissipator requires exactly one resistor and one memristor",
                    ));
                }
            }
            Item::Drive { span, .. } => {
                if drive.is_some() {
                    return Err(structure(*span, "duplicate drive"));
                }
                drive = Some(*span);
            }
        }
    }

    if element_count == 0 {
        return Err(structure(circuit_span, "empty circuit"));
    }
    if inductors != 1 {
        return Err(structure(circuit_span, "exactly one inductor required"));
    }
    Ok(())
}

fn structure(span: Span, message: &str) -> NetlistError {
    NetlistError::Structure {
        line: span.line,
        col: span.col,
        message: message.into(),
    }
}

/// Render an AST back to canonical netlist text.
pub fn print(ast: &NetlistAst) -> String {
    let mut out = String::from("circuit {\n");
    for item in &ast.items {
        match item {
            Item::Element(el) => {
                out.push_str(&format!("  {}\n", print_element(el)));
            }
            Item::Parallel { first, second, .. } => {
                out.push_str(&format!(
                    "  parallel {{ {} {} }}\n",
                    print_element(first),
                    print_element(second)
                ));
            }
            Item::Drive { form, .. } => {
                let body = match form {
                    DriveForm::Zero => "zero".to_string(),
                    DriveForm::Const(v) => format!("const({v})"),
                    DriveForm::Sin { amp, omega, phase } => {
                        format!("sin(amp={amp}, omega={omega}, phase={phase})")
                    }
                };
                out.push_str(&format!("  drive {{ {body} }}\n"));
            }
        }
    }
    out.push_str("}\n");
    out
}

fn print_element(el: &ElementNode) -> String {
    let kind = match el.kind {
        ElementKind::Inductor => "L",
        ElementKind::Capacitor => "C",
        ElementKind::Resistor => "R",
        ElementKind::Memristor => "M",
    };
    let value = match &el.value {
        ParamValue::Number(v) => format!("{v}"),
        ParamValue::Poly { var, coeffs } => format!(
            "poly({var}; {})",
            coeffs
                .iter()
                .map(|c| format!("{c}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    format!("{kind} {{ {} = {} }}", el.key, value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_four_element_series_circuit() {
        let ast = parse("circuit { L{L0=1} C{C0=1} R{R=poly(I;0.2)} M{M=poly(q;0.3)} }").unwrap();
        assert_eq!(ast.items.len(), 4);
        match &ast.items[0] {
            Item::Element(el) => {
                assert_eq!(el.kind, ElementKind::Inductor);
                assert_eq!(el.span, Span { line: 1, col: 11 });
            }
            other => panic!("expected element, got {other:?}"),
        }
    }

    #[test]
    fn parses_parallel_dissipator() {
        let ast =
            parse("circuit { L{L0=1} parallel{ R{R=poly(I;0.2)} M{M=poly(q;0.3)} } }").unwrap();
        assert!(matches!(ast.items[1], Item::Parallel { .. }));
    }

    #[test]
    fn missing_inductor_is_reported_at_circuit_span() {
        let err = parse("circuit { C{C0=1} }").unwrap_err();
        match err {
            NetlistError::Structure { line, col, message } => {
                assert_eq!((line, col), (1, 1));
                assert!(message.contains("exactly one inductor"));
            }
            other => panic!("expected structure error, got {other}"),
        }
    }

    #[test]
    fn syntax_errors_carry_positions_and_expectations() {
        let err = parse("circuit {\n  L{L0=1}\n  X{Y=1}\n}").unwrap_err();
        match &err {
            NetlistError::Syntax {
                line,
                col,
                expected,
                ..
            } => {
                assert_eq!((*line, *col), (3, 3));
                assert!(expected.iter().any(|e| e == "parallel"));
            }
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse("circuit { L{henries=1} }").unwrap_err();
        assert!(err.to_string().contains("unknown parameter"));
    }

    #[test]
    fn parameter_lists_parse_but_must_be_singletons() {
        // the grammar admits comma-separated parameter lists; the elements
        // here take exactly one
        let err = parse("circuit { L{L0=1, L0=2} }").unwrap_err();
        assert!(err.to_string().contains("exactly one parameter"));
        // a trailing comma is still a syntax error
        assert!(parse("circuit { L{L0=1,} }").is_err());
    }

    #[test]
    fn comments_and_whitespace_are_ignored()  {
        let text = "# a driven RLC loop\ncircuit {\n  L { L0 = 1 }   # inductor\n  drive { sin(amp=1, omega=2, phase=0) }\n}";
        let ast = parse(text).unwrap();
        assert_eq!(ast.items.len(), 2);
    }

    #[test]
    fn print_then_parse_is_idempotent() {
        let sources = [
            "circuit { L{L0=1} C{C0=1} R{R=poly(I;0.2)} M{M=poly(q;0.3)} }",
            "circuit { L{L0=2.5} parallel{ R{R=poly(I;0.2)} M{M=poly(q;0.3,0.1)} } drive{const(2)} }",
            "circuit { L{L=poly(I;1,0,1)} drive{zero} }",
        ];
        for src in sources {
            let once = print(&parse(src).unwrap());
            let twice = print(&parse(&once).unwrap());
            assert_eq!(once, twice);
        }
    }
}
